use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::time::Instant;

use indexmap::IndexMap;
use serde::Serialize;

use anasamp::oracle::{
    cayley_tree_function, gf_value, series_coefficients, theoretical_failure, GfResult,
};
use anasamp::sampler::{
    sample_cayley, sample_cayley_size, seeded_rng, size_window, Outcome, SampleError, Sampler,
    Tally,
};
use anasamp::spec::ParseError;
use anasamp::stats::chi_square_uniform;
use anasamp::tuning::{find_singularity_bisection, tune_simply_generated, SimpleTreeFamily};
use anasamp::{validate_spec, CombSpec, Grammar};

use crate::input::{load, read_text, resolve, Loaded, SpecSource};
use crate::report::{
    Chi2Report, ClassReport, Config, ErrorReport, ExperimentReport, GfReport, SizeStats, Tallies,
    TargetWindow, TuneReport, ValidateReport,
};
use crate::{
    table1 as t1, CliError, Emit, Format, Method, SampleArgs, SpecArgs, Table1Args, TuneArgs,
};

/// Attempts allowed per accepted object in targeted and conditioned runs.
const MAX_ATTEMPTS_PER_ACCEPT: u64 = 100_000_000;
const CHI2_ALPHA: f64 = 0.001;

type CmdResult = Result<i32, CliError>;

fn domain(e: impl ToString) -> CliError {
    CliError::Domain(e.to_string())
}

fn print_json(out: &mut dyn Write, value: &impl Serialize) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

/// Splits `count` units of work over `jobs` threads; worker `w` gets seed
/// `seed + w`. Results come back in worker order.
pub(crate) fn parallel<T: Send>(
    count: u64,
    jobs: usize,
    seed: u64,
    work: impl Fn(u64, u64) -> T + Sync,
) -> Vec<T> {
    let jobs = jobs.max(1) as u64;
    let share = |w: u64| count / jobs + u64::from(w < count % jobs);
    if jobs == 1 {
        return vec![work(seed, count)];
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs)
            .map(|w| {
                let work = &work;
                s.spawn(move || work(seed.wrapping_add(w), share(w)))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

pub fn validate(spec: &str, out: &mut dyn Write) -> CmdResult {
    let text = read_text(spec)?;
    let report = match CombSpec::parse(&text) {
        Err(e) => {
            let (line, column) = match &e {
                ParseError::Syntax { line, column, .. }
                | ParseError::Duplicate { line, column, .. } => (*line, *column),
            };
            ValidateReport {
                ok: false,
                classes: Vec::new(),
                errors: vec![ErrorReport {
                    kind: match e {
                        ParseError::Syntax { .. } => "syntax".into(),
                        ParseError::Duplicate { .. } => "duplicate".into(),
                    },
                    class: match &e {
                        ParseError::Duplicate { name, .. } => Some(name.clone()),
                        ParseError::Syntax { .. } => None,
                    },
                    line: Some(line),
                    column: Some(column),
                    message: e.to_string(),
                }],
            }
        }
        Ok(parsed) => {
            let v = validate_spec(&parsed);
            ValidateReport {
                ok: v.is_ok(),
                classes: v
                    .min_sizes
                    .iter()
                    .map(|(name, m)| ClassReport {
                        name: name.clone(),
                        min_size: *m,
                    })
                    .collect(),
                errors: v
                    .errors
                    .iter()
                    .map(|e| ErrorReport {
                        kind: e.kind().into(),
                        class: Some(e.class().to_owned()),
                        line: None,
                        column: None,
                        message: e.to_string(),
                    })
                    .collect(),
            }
        }
    };
    print_json(out, &report)?;
    Ok(if report.ok { 0 } else { 1 })
}

pub fn coeffs(spec: &SpecArgs, n: usize, format: Format, out: &mut dyn Write) -> CmdResult {
    let loaded = load(&spec.spec)?;
    let g = loaded.grammar()?;
    let class = loaded.class(spec.class_name.as_deref())?;
    let cs = series_coefficients(g, &class, n).map_err(domain)?;
    match format {
        // big integers are written as bare JSON numbers
        Format::Json => {
            let items: Vec<String> = cs.iter().map(ToString::to_string).collect();
            writeln!(out, "[{}]", items.join(","))?;
        }
        Format::Csv => {
            writeln!(out, "n,count")?;
            for (i, c) in cs.iter().enumerate() {
                writeln!(out, "{i},{c}")?;
            }
        }
    }
    Ok(0)
}

pub fn gf(spec: &SpecArgs, z: f64, out: &mut dyn Write) -> CmdResult {
    let loaded = load(&spec.spec)?;
    let g = loaded.grammar()?;
    let class = loaded.class(spec.class_name.as_deref())?;
    let r = gf_value(g, &class, z, 1e-14);
    let (value, iterations) = match r {
        GfResult::Converged { value, iterations } => (Some(value), Some(iterations)),
        GfResult::Diverged => (None, None),
    };
    print_json(
        out,
        &GfReport {
            class,
            z,
            converged: r.converged(),
            value,
            iterations,
        },
    )?;
    Ok(0)
}

fn parse_omega(s: &str) -> Result<Vec<u32>, CliError> {
    s.split(',')
        .map(|d| {
            d.trim()
                .parse::<u32>()
                .map_err(|e| CliError::Usage(format!("bad degree `{d}`: {e}")))
        })
        .collect()
}

/// `Y = atom*(eps + Y + Y*Y ...)` for a degree multiset.
fn omega_grammar(omega: &[u32]) -> Result<Grammar, CliError> {
    let terms: Vec<String> = omega
        .iter()
        .map(|&d| match d {
            0 => "eps".to_owned(),
            d => vec!["Y"; d as usize].join("*"),
        })
        .collect();
    Grammar::parse(&format!("Y = atom*({});", terms.join(" + "))).map_err(domain)
}

pub fn tune(args: &TuneArgs, out: &mut dyn Write) -> CmdResult {
    let omega = args.omega.as_deref().map(parse_omega).transpose()?;
    let loaded = match (&omega, &args.spec) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "give a degree list or --spec, not both".into(),
            ))
        }
        (None, None) => return Err(CliError::Usage("give a degree list or --spec".into())),
        (None, Some(spec)) => Some(load(spec)?),
        (Some(_), None) => None,
    };
    let class = match &loaded {
        Some(l) => Some(l.class(args.class_name.as_deref())?),
        None => None,
    };
    let report = match args.method {
        Method::Maximize => {
            let family = match (&omega, &loaded) {
                (Some(o), _) => SimpleTreeFamily::new(o.iter().copied()).map_err(domain)?,
                (None, Some(l)) => {
                    SimpleTreeFamily::from_class(l.grammar()?, class.as_deref().unwrap_or_default())
                        .map_err(domain)?
                }
                (None, None) => unreachable!(),
            };
            let r = tune_simply_generated(&family, args.tolerance).map_err(domain)?;
            TuneReport {
                method: "maximize",
                omega: omega.clone(),
                spec: args.spec.clone(),
                class: class.clone(),
                tolerance: args.tolerance,
                y_star: Some(r.y_star),
                z_star: r.z_star,
                converged: r.converged,
                function_evals: r.function_evals,
                oracle_calls: r.oracle_calls,
            }
        }
        Method::Bisect => {
            let owned;
            let (g, name) = match (&omega, &loaded) {
                (Some(o), _) => {
                    let fam = SimpleTreeFamily::new(o.iter().copied()).map_err(domain)?;
                    if fam.is_degenerate() {
                        return Err(domain(anasamp::tuning::TuneError::Degenerate));
                    }
                    owned = omega_grammar(o)?;
                    (&owned, "Y".to_owned())
                }
                (None, Some(l)) => (l.grammar()?, class.clone().unwrap_or_default()),
                (None, None) => unreachable!(),
            };
            let r = find_singularity_bisection(g, &name, 1.0, args.tolerance).map_err(domain)?;
            TuneReport {
                method: "bisect",
                omega: omega.clone(),
                spec: args.spec.clone(),
                class: class.clone(),
                tolerance: args.tolerance,
                y_star: None,
                z_star: r.rho,
                converged: true,
                function_evals: 0,
                oracle_calls: r.oracle_calls,
            }
        }
    };
    print_json(out, &report)?;
    Ok(0)
}

#[derive(Debug, Default)]
struct Batch {
    tally: Tally,
    sizes: Vec<u64>,
    trees: Vec<String>,
    symmetry: BTreeMap<u64, u64>,
}

impl Batch {
    fn merge(&mut self, other: Batch) {
        self.tally.merge(&other.tally);
        self.sizes.extend(other.sizes);
        self.trees.extend(other.trees);
        for (m, c) in other.symmetry {
            *self.symmetry.entry(m).or_insert(0) += c;
        }
    }
}

/// Builds the report for `sample` without printing it.
pub fn run_sample(args: &SampleArgs) -> Result<ExperimentReport, CliError> {
    let loaded = load(&args.spec.spec)?;
    let class = loaded.class(args.spec.class_name.as_deref())?;
    let window = args
        .target
        .map(|n| {
            size_window(n, args.tolerance)
                .map(|(min, max)| TargetWindow {
                    n,
                    tolerance: args.tolerance,
                    min,
                    max,
                })
                .map_err(domain)
        })
        .transpose()?;
    let keep_trees = args.emit == Emit::Trees;
    let (config, batch, theory) = match &loaded.source {
        SpecSource::Cayley => sample_cayley_run(args, &loaded, &class, window, keep_trees)?,
        SpecSource::Grammar { grammar, .. } => {
            sample_grammar_run(args, &loaded, grammar, &class, window, keep_trees)?
        }
    };
    let tallies: Tallies = batch.tally.into();
    let has_pairs =
        matches!(&loaded.source, SpecSource::Grammar { grammar, .. } if grammar.has_mset2());
    Ok(ExperimentReport {
        config,
        tallies,
        observed_failure_ratio: tallies.observed_failure_ratio(),
        theoretical_failure: theory,
        size_stats: SizeStats::from_sizes(&batch.sizes),
        symmetry: has_pairs.then_some(batch.symmetry),
        sizes: (args.emit != Emit::Stats).then(|| batch.sizes.clone()),
        trees: keep_trees.then_some(batch.trees),
    })
}

fn base_config(
    args: &SampleArgs,
    loaded: &Loaded,
    class: &str,
    z: f64,
    window: Option<TargetWindow>,
) -> Config {
    Config {
        spec: loaded.label.clone(),
        spec_sha256: loaded.sha256.clone(),
        class: class.to_owned(),
        z,
        values: IndexMap::new(),
        tail_k: IndexMap::new(),
        i0: None,
        seed: args.seed,
        count: args.count,
        max_size: args.max_size,
        target: window,
        jobs: args.jobs,
    }
}

fn sample_cayley_run(
    args: &SampleArgs,
    loaded: &Loaded,
    class: &str,
    window: Option<TargetWindow>,
    keep_trees: bool,
) -> Result<(Config, Batch, Option<f64>), CliError> {
    let z = args
        .coords
        .z
        .ok_or_else(|| CliError::Usage("--z is required".into()))?;
    let t = match args.coords.values.as_slice() {
        [(name, t)] if name == class => *t,
        _ => {
            return Err(CliError::Usage(
                "@cayley needs exactly one --value T=t".into(),
            ))
        }
    };
    // reject invalid pairs before spawning workers
    sample_cayley_size(z, t, &mut seeded_rng(0), 0).map_err(domain)?;
    let (lo, hi, max_size) = match window {
        Some(w) => (w.min, w.max, w.max.min(args.max_size)),
        None => (0, u64::MAX, args.max_size),
    };
    let batches = parallel(args.count, args.jobs, args.seed, |seed, n| {
        let mut rng = seeded_rng(seed);
        let mut b = Batch::default();
        let mut accepted = 0;
        let mut attempts_here = 0u64;
        while if window.is_some() {
            accepted < n
        } else {
            attempts_here < n
        } {
            attempts_here += 1;
            if window.is_some() && attempts_here > n.saturating_mul(MAX_ATTEMPTS_PER_ACCEPT) {
                break;
            }
            let outcome = if keep_trees {
                sample_cayley(z, t, &mut rng, max_size).expect("checked pair")
            } else {
                match sample_cayley_size(z, t, &mut rng, max_size).expect("checked pair") {
                    Outcome::Ok { size, .. } => Outcome::Ok {
                        tree: anasamp::sampler::CayleyShape {
                            degrees: Vec::new(),
                        },
                        size,
                    },
                    Outcome::Failure { level } => Outcome::Failure { level },
                    Outcome::Overflow => Outcome::Overflow,
                }
            };
            b.tally.record(&outcome);
            if let Outcome::Ok { tree, size } = outcome {
                if !(lo..=hi).contains(&size) {
                    b.tally.accepts -= 1;
                    b.tally.size_rejections += 1;
                    continue;
                }
                accepted += 1;
                b.sizes.push(size);
                if keep_trees {
                    let ds: Vec<String> = tree.degrees.iter().map(ToString::to_string).collect();
                    b.trees.push(format!("[{}]", ds.join(",")));
                }
            }
        }
        b
    });
    let mut batch = Batch::default();
    for b in batches {
        batch.merge(b);
    }
    let mut config = base_config(args, loaded, class, z, window);
    config.values.insert(class.to_owned(), vec![t]);
    let theory = if z <= t1::E_INV {
        cayley_tree_function(z, 1e-15)
            .ok()
            .map(|tz| theoretical_failure(tz, t).unwrap_or(0.0))
    } else {
        None
    };
    Ok((config, batch, theory))
}

fn sample_grammar_run(
    args: &SampleArgs,
    loaded: &Loaded,
    grammar: &Grammar,
    class: &str,
    window: Option<TargetWindow>,
    keep_trees: bool,
) -> Result<(Config, Batch, Option<f64>), CliError> {
    let resolved = resolve(loaded, &args.coords)?;
    let sampler = Sampler::new(grammar, &resolved.coords).map_err(domain)?;
    let track_symmetry = grammar.has_mset2();
    let results = parallel(
        args.count,
        args.jobs,
        args.seed,
        |seed, n| -> Result<Batch, SampleError> {
            let mut rng = seeded_rng(seed);
            let mut b = Batch::default();
            let keep = |b: &mut Batch, tree: anasamp::TermTree, size: u64| {
                b.sizes.push(size);
                if track_symmetry {
                    for (m, c) in tree.symmetry_histogram() {
                        *b.symmetry.entry(m).or_insert(0) += c;
                    }
                }
                if keep_trees {
                    b.trees.push(tree.canonical());
                }
            };
            match window {
                None => {
                    for _ in 0..n {
                        let outcome = sampler.sample_once(class, &mut rng, args.max_size)?;
                        b.tally.record(&outcome);
                        if let Outcome::Ok { tree, size } = outcome {
                            keep(&mut b, tree, size);
                        }
                    }
                }
                Some(w) => {
                    for _ in 0..n {
                        let got = sampler.sample_targeted(
                            class,
                            &mut rng,
                            w.n,
                            w.tolerance,
                            MAX_ATTEMPTS_PER_ACCEPT,
                        )?;
                        b.tally.merge(&got.tally);
                        keep(&mut b, got.tree, got.size);
                    }
                }
            }
            Ok(b)
        },
    );
    let mut batch = Batch::default();
    for r in results {
        batch.merge(r.map_err(domain)?);
    }
    let z = resolved.coords.z;
    let mut config = base_config(args, loaded, class, z, window);
    config.values = resolved.coords.levels.clone();
    config.tail_k = resolved.coords.tail_k.clone();
    config.i0 = resolved.otter.as_ref().map(|p| p.i0);
    let theory = resolved
        .coords
        .value(class, 0)
        .zip(gf_value(grammar, class, z, 1e-14).value())
        .map(|(a, gf)| theoretical_failure(gf, a).unwrap_or(0.0));
    Ok((config, batch, theory))
}

pub fn sample(args: &SampleArgs, out: &mut dyn Write) -> CmdResult {
    let started = Instant::now();
    let report = run_sample(args)?;
    match args.format {
        Format::Json => print_json(out, &report)?,
        Format::Csv => write_sample_csv(&report, args.emit, out)?,
    }
    eprintln!("elapsed: {:.3}s", started.elapsed().as_secs_f64());
    Ok(0)
}

fn write_sample_csv(r: &ExperimentReport, emit: Emit, out: &mut dyn Write) -> Result<(), CliError> {
    match emit {
        Emit::Stats => {
            writeln!(
                out,
                "attempts,accepts,failures,overflows,size_rejections,observed_failure,theoretical_failure,mean_size,max_size"
            )?;
            let t = &r.tallies;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                t.attempts,
                t.accepts,
                t.failures,
                t.overflows,
                t.size_rejections,
                r.observed_failure_ratio
                    .map_or_else(String::new, |f| format!("{f:.4}")),
                r.theoretical_failure
                    .map_or_else(String::new, |f| format!("{f:.4}")),
                r.size_stats
                    .mean
                    .map_or_else(String::new, |m| format!("{m:.1}")),
                r.size_stats.max.map_or_else(String::new, |m| m.to_string()),
            )?;
        }
        Emit::Sizes => {
            writeln!(out, "index,size")?;
            for (i, s) in r.sizes.iter().flatten().enumerate() {
                writeln!(out, "{i},{s}")?;
            }
        }
        Emit::Trees => {
            writeln!(out, "index,size,tree")?;
            let sizes = r.sizes.as_deref().unwrap_or_default();
            let trees = r.trees.as_deref().unwrap_or_default();
            for (i, (s, t)) in sizes.iter().zip(trees).enumerate() {
                writeln!(out, "{i},{s},\"{t}\"")?;
            }
        }
    }
    Ok(())
}

pub fn table1(args: &Table1Args, out: &mut dyn Write) -> CmdResult {
    let started = Instant::now();
    let rows = t1::table1(args.count, args.seed, args.max_size, args.jobs);
    match args.format {
        Format::Csv => write!(out, "{}", t1::to_csv(&rows))?,
        Format::Json => print_json(out, &rows)?,
    }
    eprintln!("elapsed: {:.3}s", started.elapsed().as_secs_f64());
    Ok(0)
}

/// Chi-square test on `samples` draws of objects of one size, given the
/// number of such objects. `draw` yields canonical forms.
pub fn chi2_from_draws(
    categories: u64,
    samples: u64,
    mut draw: impl FnMut() -> Result<String, CliError>,
) -> Result<(anasamp::stats::ChiSquare, u64), CliError> {
    let mut counts: HashMap<String, u64> = HashMap::new();
    for _ in 0..samples {
        *counts.entry(draw()?).or_insert(0) += 1;
    }
    Ok((
        chi_square_uniform(&counts, categories, CHI2_ALPHA),
        counts.len() as u64,
    ))
}

pub fn chi2(args: &crate::Chi2Args, out: &mut dyn Write) -> CmdResult {
    let loaded = load(&args.spec.spec)?;
    let g = loaded.grammar()?;
    let class = loaded.class(args.spec.class_name.as_deref())?;
    let n = args.target;
    let cs = series_coefficients(g, &class, n as usize).map_err(domain)?;
    let categories: u64 = cs[n as usize].to_string().parse().map_err(|_| {
        domain(format!(
            "too many objects of size {n} for a chi-square test"
        ))
    })?;
    if categories == 0 {
        return Err(domain(format!("class `{class}` has no object of size {n}")));
    }
    let resolved = resolve(&loaded, &args.coords)?;
    let sampler = Sampler::new(g, &resolved.coords).map_err(domain)?;
    let mut rng = seeded_rng(args.seed);
    let mut tally = Tally::default();
    let (test, distinct) = chi2_from_draws(categories, args.count, || {
        let got = sampler
            .sample_targeted(&class, &mut rng, n, 0.0, MAX_ATTEMPTS_PER_ACCEPT)
            .map_err(domain)?;
        tally.merge(&got.tally);
        Ok(got.tree.canonical())
    })?;
    print_json(
        out,
        &Chi2Report {
            spec: loaded.label.clone(),
            spec_sha256: loaded.sha256.clone(),
            class,
            z: resolved.coords.z,
            seed: args.seed,
            n,
            samples: args.count,
            categories,
            distinct_seen: distinct,
            statistic: test.statistic,
            dof: test.dof,
            alpha: CHI2_ALPHA,
            critical_value: test.critical_value,
            pass: test.pass,
            tallies: tally.into(),
        },
    )?;
    Ok(0)
}
