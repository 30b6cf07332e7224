use clap::Parser;

fn main() {
    let cli = anasamp_cli::Cli::parse();
    let code = anasamp_cli::run(
        cli,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    std::process::exit(code);
}
