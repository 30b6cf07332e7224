//! Loading specifications and assembling coordinates from flags.

use std::fmt::Write as _;

use anasamp::otter::{OtterParams, OTTER_CLASS, OTTER_SPEC};
use anasamp::{Coordinates, Grammar};
use sha2::{Digest, Sha256};

use crate::{CliError, CoordArgs};

pub const BINARY_SPEC: &str = "B = atom + atom*B*B;\n";
/// Stand-in text for the Cayley builtin, used only for hashing.
const CAYLEY_TEXT: &str = "@cayley: T = atom * set(T)\n";

#[derive(Debug)]
pub enum SpecSource {
    /// The labelled Cayley tree sampler, outside the grammar language.
    Cayley,
    Grammar {
        grammar: Grammar,
        otter: bool,
    },
}

#[derive(Debug)]
pub struct Loaded {
    /// The `--spec` argument as given.
    pub label: String,
    pub sha256: String,
    pub source: SpecSource,
}

/// `NAME=V`
pub fn parse_named_value(s: &str) -> Result<(String, f64), String> {
    let (name, v) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|e| format!("bad value `{v}`: {e}"))?;
    Ok((name.trim().to_owned(), v))
}

/// `NAME=v0,v1,...`
pub fn parse_level_list(s: &str) -> Result<(String, Vec<f64>), String> {
    let (name, vs) = s.split_once('=').ok_or("expected NAME=v0,v1,...")?;
    let vs = vs
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad value `{v}`: {e}"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((name.trim().to_owned(), vs))
}

fn sha256_hex(text: &str) -> String {
    let mut out = String::with_capacity(64);
    for b in Sha256::digest(text.as_bytes()).iter() {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Raw text of a grammar file or builtin.
pub fn read_text(spec: &str) -> Result<String, CliError> {
    match spec {
        "@binary" => Ok(BINARY_SPEC.to_owned()),
        "@otter" => Ok(format!("{OTTER_SPEC}\n")),
        "@cayley" => Err(CliError::Usage(
            "@cayley is a builtin sampler, not a grammar".into(),
        )),
        s if s.starts_with('@') => Err(CliError::Usage(format!("unknown builtin `{s}`"))),
        path => std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}"))),
    }
}

pub fn load(spec: &str) -> Result<Loaded, CliError> {
    if spec == "@cayley" {
        return Ok(Loaded {
            label: spec.to_owned(),
            sha256: sha256_hex(CAYLEY_TEXT),
            source: SpecSource::Cayley,
        });
    }
    let text = read_text(spec)?;
    let grammar = Grammar::parse(&text).map_err(|e| CliError::Domain(e.to_string()))?;
    Ok(Loaded {
        label: spec.to_owned(),
        sha256: sha256_hex(&text),
        source: SpecSource::Grammar {
            grammar,
            otter: spec == "@otter",
        },
    })
}

impl Loaded {
    /// The requested class, or the first one defined.
    pub fn class(&self, requested: Option<&str>) -> Result<String, CliError> {
        match &self.source {
            SpecSource::Cayley => match requested {
                None | Some("T") => Ok("T".into()),
                Some(c) => Err(CliError::Domain(format!("unknown class `{c}`"))),
            },
            SpecSource::Grammar { grammar, .. } => match requested {
                None => Ok(grammar.class_names()[0].clone()),
                Some(c) => grammar
                    .class_id(c)
                    .map(|_| c.to_owned())
                    .map_err(|e| CliError::Domain(e.to_string())),
            },
        }
    }

    pub fn grammar(&self) -> Result<&Grammar, CliError> {
        match &self.source {
            SpecSource::Grammar { grammar, .. } => Ok(grammar),
            SpecSource::Cayley => Err(CliError::Usage(
                "this command needs a grammar, not @cayley".into(),
            )),
        }
    }
}

/// Coordinates chosen on the command line, plus the Otter parameters when
/// they were computed by the pipeline.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub coords: Coordinates,
    pub otter: Option<OtterParams>,
}

pub fn resolve(loaded: &Loaded, args: &CoordArgs) -> Result<Resolved, CliError> {
    let explicit = !args.values.is_empty() || !args.levels.is_empty();
    if let SpecSource::Grammar { otter: true, .. } = loaded.source {
        if !explicit {
            let k = args
                .tail_k
                .iter()
                .find(|(n, _)| n == OTTER_CLASS)
                .map(|(_, k)| *k);
            let params = match (args.z, k) {
                (Some(z), k) => OtterParams::new(z, args.i0, k),
                (None, None) => OtterParams::near_singularity(args.i0),
                (None, Some(_)) => return Err(CliError::Usage("--tail-k needs --z".into())),
            }
            .map_err(|e| CliError::Domain(e.to_string()))?;
            return Ok(Resolved {
                coords: params.coordinates(),
                otter: Some(params),
            });
        }
    }
    let z = args
        .z
        .ok_or_else(|| CliError::Usage("--z is required".into()))?;
    let mut coords = Coordinates::new(z);
    for (name, v) in &args.values {
        coords = coords.with_value(name, *v);
    }
    for (name, vs) in &args.levels {
        coords = coords.with_levels(name, vs.clone());
    }
    for (name, k) in &args.tail_k {
        coords = coords.with_tail(name, *k);
    }
    Ok(Resolved {
        coords,
        otter: None,
    })
}
