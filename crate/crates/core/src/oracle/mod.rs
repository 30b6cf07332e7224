//! Numerical side of a specification: evaluating the right-hand side φ,
//! checking that coordinates lie in the valid region, exact coefficient
//! enumeration, generating-function values and failure rates.
//!
//! A class `A` with equation `A(z) = φ(z, A(z), ...)` admits coordinates
//! `(z, a)` whenever `a ≥ φ(z, a, ...)`. Classes that occur under `mset2`
//! also need values at the squared arguments `z², z⁴, ...`; these are the
//! *levels* of a [`Coordinates`], level `i` standing for `z^(2^i)`.

mod failure;
mod gf;
mod series;

use indexmap::IndexMap;
use thiserror::Error;

use crate::grammar::{ClassId, Grammar, Node, NodeId};

pub use failure::{cayley_tree_function, expected_failures, theoretical_failure};
pub use gf::{gf_value, GfOracle, GfResult, DIVERGENCE_CEILING, ITERATION_CAP};
pub use series::{series_coefficients, series_value, MAX_SERIES_TERMS};

/// Deepest squaring level the samplers and checks ever look at.
pub const MAX_LEVEL: u32 = 62;

/// Smallest argument `z^(2^i)` still treated as representable.
const LEVEL_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("no value for class `{class}` at level {level}")]
    MissingValue { class: String, level: u32 },
    #[error("sequence argument has value {value} >= 1 at level {level}")]
    SeqDivergent { level: u32, value: f64 },
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("{requested} series terms requested, at most {MAX_SERIES_TERMS} supported")]
    TooManyTerms { requested: usize },
    #[error("value {a} is below the generating function value {gf}")]
    BelowGf { a: f64, gf: f64 },
    #[error("generating function value is zero")]
    ZeroGf,
    #[error("argument {0} is outside the domain")]
    OutOfDomain(f64),
}

/// `z^(2^level)` by repeated squaring.
pub fn level_arg(z: f64, level: u32) -> f64 {
    (0..level).fold(z, |x, _| x * x)
}

/// Highest level whose argument `z^(2^i)` stays above the representable
/// floor, capped at [`MAX_LEVEL`].
pub fn level_cap(z: f64) -> u32 {
    let mut i = 0;
    let mut x = z;
    while i < MAX_LEVEL {
        x *= x;
        if x < LEVEL_FLOOR {
            break;
        }
        i += 1;
    }
    i
}

/// Structural evaluation of node `n` at squaring level `level`.
pub(crate) fn eval_node(
    g: &Grammar,
    n: NodeId,
    level: u32,
    z_at: &impl Fn(u32) -> f64,
    class_value: &impl Fn(ClassId, u32) -> Result<f64, OracleError>,
) -> Result<f64, OracleError> {
    Ok(match g.node(n) {
        Node::Atom => z_at(level),
        Node::Epsilon => 1.0,
        Node::Ref(c) => class_value(*c, level)?,
        Node::Union(xs) => {
            let mut s = 0.0;
            for x in xs {
                s += eval_node(g, *x, level, z_at, class_value)?;
            }
            s
        }
        Node::Product(xs) => {
            let mut p = 1.0;
            for x in xs {
                p *= eval_node(g, *x, level, z_at, class_value)?;
            }
            p
        }
        Node::Seq(x) => {
            let b = eval_node(g, *x, level, z_at, class_value)?;
            if !(b < 1.0) {
                return Err(OracleError::SeqDivergent { level, value: b });
            }
            1.0 / (1.0 - b)
        }
        Node::MSet2(x) => {
            let b = eval_node(g, *x, level, z_at, class_value)?;
            let bb = eval_node(g, *x, level + 1, z_at, class_value)?;
            (b * b + bb) / 2.0
        }
    })
}

pub type ValueMap = IndexMap<String, f64>;

/// Evaluates φ for `class` at argument `z_arg`.
///
/// `levels[r]` supplies class values at `z_arg^(2^r)`; `levels[0]` is the
/// ordinary value map and deeper entries are only read through `mset2`.
pub fn eval_phi(
    g: &Grammar,
    class: &str,
    z_arg: f64,
    levels: &[ValueMap],
) -> Result<f64, OracleError> {
    let c = g
        .class_id(class)
        .map_err(|_| OracleError::UnknownClass(class.to_owned()))?;
    let z_at = |l| level_arg(z_arg, l);
    let value = |c: ClassId, l: u32| {
        levels
            .get(l as usize)
            .and_then(|m| m.get(g.class_name(c)).copied())
            .ok_or_else(|| OracleError::MissingValue {
                class: g.class_name(c).to_owned(),
                level: l,
            })
    };
    eval_node(g, g.root(c), 0, &z_at, &value)
}

/// The control parameter of an analytic sampler: `z` plus, per class, the
/// values standing in for the generating function at each squaring level.
///
/// Past the last explicit level of a class, the value at level `i` is
/// `K · z^(2^i)` with the class's tail constant `K`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Coordinates {
    pub z: f64,
    pub levels: IndexMap<String, Vec<f64>>,
    pub tail_k: IndexMap<String, f64>,
}

impl Coordinates {
    pub fn new(z: f64) -> Self {
        Self {
            z,
            ..Self::default()
        }
    }

    /// Sets the level-0 value of `class`.
    pub fn with_value(mut self, class: &str, v: f64) -> Self {
        self.levels.insert(class.to_owned(), vec![v]);
        self
    }

    pub fn with_levels(mut self, class: &str, vs: Vec<f64>) -> Self {
        self.levels.insert(class.to_owned(), vs);
        self
    }

    pub fn with_tail(mut self, class: &str, k: f64) -> Self {
        self.tail_k.insert(class.to_owned(), k);
        self
    }

    /// Value of `class` at `level`, applying the tail rule past the
    /// explicit levels.
    pub fn value(&self, class: &str, level: u32) -> Option<f64> {
        let explicit = self.levels.get(class).map(Vec::as_slice).unwrap_or(&[]);
        if let Some(v) = explicit.get(level as usize) {
            return Some(*v);
        }
        self.tail_k.get(class).map(|k| k * level_arg(self.z, level))
    }

    /// Moves every explicit value up by one ulp. Rounding in the validity
    /// check then errs on the side of more failure, which is always sound.
    pub fn nudged_up(&self) -> Self {
        let mut out = self.clone();
        for vs in out.levels.values_mut() {
            for v in vs.iter_mut() {
                *v = v.next_up();
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    ZOutOfRange {
        z: f64,
    },
    MissingValue {
        class: String,
        level: u32,
    },
    TailConstant {
        class: String,
        k: f64,
    },
    SeqDivergent {
        class: String,
        level: u32,
    },
    NegativeSlack {
        class: String,
        level: u32,
        slack: f64,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::ZOutOfRange { z } => write!(f, "z = {z} is outside [0, 1)"),
            Violation::MissingValue { class, level } => {
                write!(f, "no value for `{class}` at level {level}")
            }
            Violation::TailConstant { class, k } => {
                write!(f, "tail constant of `{class}` is {k}, must exceed 1")
            }
            Violation::SeqDivergent { class, level } => write!(
                f,
                "`{class}` at level {level}: sequence argument value is >= 1"
            ),
            Violation::NegativeSlack {
                class,
                level,
                slack,
            } => write!(
                f,
                "`{class}` at level {level}: value is below phi by {}",
                -slack
            ),
        }
    }
}

/// Outcome of [`check_validity`]: the slack `v − φ` of every class at every
/// level that sampling can reach, and what is wrong if anything.
#[derive(Debug, Clone, PartialEq)]
pub struct Validity {
    pub slack: IndexMap<String, Vec<f64>>,
    pub violations: Vec<Violation>,
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Levels at which `class` must satisfy the inequality: level 0 only for
/// classes outside every `mset2`, otherwise every level up to the
/// representable cap.
pub(crate) fn checked_levels(g: &Grammar, c: ClassId, z: f64) -> u32 {
    if g.is_leveled(c) {
        level_cap(z)
    } else {
        0
    }
}

/// Computes `δ = v − φ(z^(2^i), ...)` for every class and reachable level.
/// Coordinates are valid iff every slack is non-negative; no tolerance is
/// applied.
pub fn check_validity(g: &Grammar, coords: &Coordinates) -> Validity {
    let mut violations = Vec::new();
    let mut slack = IndexMap::new();
    let z = coords.z;
    if !(0.0..1.0).contains(&z) {
        violations.push(Violation::ZOutOfRange { z });
        return Validity { slack, violations };
    }
    for c in g.class_ids() {
        let name = g.class_name(c);
        if g.is_leveled(c) {
            if let Some(&k) = coords.tail_k.get(name) {
                if !(k > 1.0) {
                    violations.push(Violation::TailConstant {
                        class: name.to_owned(),
                        k,
                    });
                }
            }
        }
    }
    // mset2 at the deepest checked level reads one level further down
    for c in g.class_ids() {
        let name = g.class_name(c);
        let deepest = if g.is_leveled(c) {
            checked_levels(g, c, z) + 1
        } else {
            0
        };
        if let Some(level) = (0..=deepest).find(|&l| coords.value(name, l).is_none()) {
            violations.push(Violation::MissingValue {
                class: name.to_owned(),
                level,
            });
        }
    }
    if !violations.is_empty() {
        return Validity { slack, violations };
    }

    let z_at = |l| level_arg(z, l);
    let value = |c: ClassId, l: u32| {
        coords
            .value(g.class_name(c), l)
            .ok_or_else(|| OracleError::MissingValue {
                class: g.class_name(c).to_owned(),
                level: l,
            })
    };
    for c in g.class_ids() {
        let name = g.class_name(c);
        let mut deltas = Vec::new();
        for level in 0..=checked_levels(g, c, z) {
            let v = value(c, level).expect("checked above");
            match eval_node(g, g.root(c), level, &z_at, &value) {
                Ok(phi) => {
                    let d = v - phi;
                    if !(d >= 0.0) {
                        violations.push(Violation::NegativeSlack {
                            class: name.to_owned(),
                            level,
                            slack: d,
                        });
                    }
                    deltas.push(d);
                }
                Err(OracleError::SeqDivergent { level, .. }) => {
                    violations.push(Violation::SeqDivergent {
                        class: name.to_owned(),
                        level,
                    });
                    break;
                }
                Err(e) => unreachable!("{e}"),
            }
        }
        slack.insert(name.to_owned(), deltas);
    }
    Validity { slack, violations }
}
