//! Analytic samplers.
//!
//! Given valid [`Coordinates`], each class reference expansion first passes a
//! failure test with success probability `φ_c(z^(2^i)) / v[c][i]`, after which
//! the constructor rules run with the exact φ-values of the subexpressions.
//! A failure anywhere aborts the whole attempt. Objects that survive are
//! drawn with probability `z^|α| / v[cls][0]`.

mod cayley;
mod draw;
mod term;

use std::sync::Arc;

use thiserror::Error;

use crate::grammar::{ClassId, Grammar, Node, NodeId};
use crate::oracle::{check_validity, level_arg, level_cap, Coordinates, Violation};

pub use cayley::{sample_cayley, sample_cayley_size, CayleyShape};
pub use draw::{draw_bernoulli, draw_geometric, draw_poisson, seeded_rng, RandomSource};
pub use term::{NodeKind, TermNode, TermTree};

use term::TermBuilder;

/// Success probabilities this close to 1 are taken as exactly 1.
const ACCEPT_SNAP: f64 = 4.0 * f64::EPSILON;

/// Result of one top-level attempt.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome<T = TermTree> {
    /// The approximation-compensating rejection, raised while expanding a
    /// class at squaring level `level`.
    Failure {
        level: u32,
    },
    /// The size budget was exceeded (or sampling needed a level past the
    /// representable cap).
    Overflow,
    Ok {
        tree: T,
        size: u64,
    },
}

impl<T> Outcome<T> {
    pub fn is_ok(&self) -> bool {
        matches!(self, Outcome::Ok { .. })
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, Outcome::Failure { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("invalid coordinates: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidCoordinates(Vec<Violation>),
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("({z}, {t}) is not a valid Cayley pair: need t > 0 and t >= z*e^t")]
    InvalidCayley { z: f64, t: f64 },
    #[error("tolerance {0} is outside [0, 1)")]
    InvalidTolerance(f64),
    #[error("no accepted object after {} attempts", .0.attempts)]
    AttemptsExhausted(Tally),
}

/// Per-channel attempt counts. Failures, overflows and size rejections are
/// kept apart: only failures measure the approximation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub attempts: u64,
    pub accepts: u64,
    pub failures: u64,
    pub overflows: u64,
    pub size_rejections: u64,
}

impl Tally {
    pub fn record<T>(&mut self, outcome: &Outcome<T>) {
        self.attempts += 1;
        match outcome {
            Outcome::Failure { .. } => self.failures += 1,
            Outcome::Overflow => self.overflows += 1,
            Outcome::Ok { .. } => self.accepts += 1,
        }
    }

    pub fn merge(&mut self, other: &Tally) {
        self.attempts += other.attempts;
        self.accepts += other.accepts;
        self.failures += other.failures;
        self.overflows += other.overflows;
        self.size_rejections += other.size_rejections;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Accepted {
    pub tree: TermTree,
    pub size: u64,
    pub tally: Tally,
}

enum Task {
    /// Failure test, then expansion of a class body.
    Class(ClassId, u32),
    Expand(NodeId, u32),
    Node(NodeKind, usize),
    Mark(ClassId),
}

/// Sampler for one grammar at fixed coordinates.
///
/// Construction checks the coordinates and tabulates the φ-value of every
/// node at every reachable level, so drawing does no evaluation.
#[derive(Debug, Clone)]
pub struct Sampler<'g> {
    grammar: &'g Grammar,
    z: f64,
    cap: u32,
    /// `node_val[level][node]`; one level past `cap` for the mset2 choice.
    node_val: Vec<Vec<f64>>,
    /// `accept[level][class]`: probability of passing the failure test.
    accept: Vec<Vec<f64>>,
    /// `prefix[level][prefix_at[node] + j]`: value of the first `j+1`
    /// summands of a union node.
    prefix: Vec<Vec<f64>>,
    prefix_at: Vec<u32>,
    names: Arc<[String]>,
}

impl<'g> Sampler<'g> {
    pub fn new(grammar: &'g Grammar, coords: &Coordinates) -> Result<Self, SampleError> {
        let validity = check_validity(grammar, coords);
        if !validity.is_valid() {
            return Err(SampleError::InvalidCoordinates(validity.violations));
        }
        let z = coords.z;
        let cap = if grammar.has_mset2() { level_cap(z) } else { 0 };
        let class_val: Vec<Vec<f64>> = (0..=cap + 1)
            .map(|l| {
                grammar
                    .class_ids()
                    .map(|c| coords.value(grammar.class_name(c), l).unwrap_or(f64::NAN))
                    .collect()
            })
            .collect();
        let n = grammar.nodes.len();
        let mut node_val = vec![vec![0.0; n]; cap as usize + 2];
        for level in (0..=cap as usize + 1).rev() {
            for i in 0..n {
                let val = |x: &NodeId| node_val[level][x.0 as usize];
                let v = match &grammar.nodes[i] {
                    Node::Atom => level_arg(z, level as u32),
                    Node::Epsilon => 1.0,
                    Node::Ref(c) => class_val[level][c.index()],
                    Node::Union(xs) => xs.iter().map(val).sum(),
                    Node::Product(xs) => xs.iter().map(val).product(),
                    Node::Seq(x) => {
                        let b = val(x);
                        if b < 1.0 {
                            1.0 / (1.0 - b)
                        } else {
                            f64::NAN
                        }
                    }
                    Node::MSet2(x) => {
                        let b = val(x);
                        let bb = node_val.get(level + 1).map_or(0.0, |v| v[x.0 as usize]);
                        (b * b + bb) / 2.0
                    }
                };
                node_val[level][i] = v;
            }
        }
        let accept = (0..=cap as usize + 1)
            .map(|l| {
                grammar
                    .class_ids()
                    .map(|c| {
                        let p = node_val[l][grammar.root(c).0 as usize] / class_val[l][c.index()];
                        // zero slack rounds to a ratio a few ulps short of 1
                        if p > 1.0 - ACCEPT_SNAP {
                            1.0
                        } else {
                            p
                        }
                    })
                    .collect()
            })
            .collect();
        let mut prefix_at = vec![u32::MAX; n];
        let mut width = 0u32;
        for (i, node) in grammar.nodes.iter().enumerate() {
            if let Node::Union(xs) = node {
                prefix_at[i] = width;
                width += xs.len() as u32;
            }
        }
        let prefix = node_val
            .iter()
            .map(|vals| {
                let mut out = Vec::with_capacity(width as usize);
                for node in &grammar.nodes {
                    if let Node::Union(xs) = node {
                        let mut acc = 0.0;
                        for x in xs {
                            acc += vals[x.0 as usize];
                            out.push(acc);
                        }
                    }
                }
                out
            })
            .collect();
        Ok(Self {
            grammar,
            z,
            cap,
            node_val,
            accept,
            prefix,
            prefix_at,
            names: grammar.class_names().into(),
        })
    }

    pub fn grammar(&self) -> &'g Grammar {
        self.grammar
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    /// Deepest level sampling may enter; deeper demand is an overflow.
    pub fn level_cap(&self) -> u32 {
        self.cap
    }

    /// Probability that expanding `class` at `level` passes the failure test.
    pub fn success_probability(&self, class: &str, level: u32) -> Result<f64, SampleError> {
        let c = self.class(class)?;
        Ok(self.accept[level as usize][c.index()])
    }

    fn class(&self, name: &str) -> Result<ClassId, SampleError> {
        self.grammar
            .class_id(name)
            .map_err(|_| SampleError::UnknownClass(name.to_owned()))
    }

    /// One attempt at drawing an object of `class` with at most `max_size`
    /// atoms.
    pub fn sample_once<R: RandomSource + ?Sized>(
        &self,
        class: &str,
        rng: &mut R,
        max_size: u64,
    ) -> Result<Outcome, SampleError> {
        let c = self.class(class)?;
        Ok(self.sample_class(c, rng, max_size))
    }

    fn sample_class<R: RandomSource + ?Sized>(
        &self,
        class: ClassId,
        rng: &mut R,
        max_size: u64,
    ) -> Outcome {
        let g = self.grammar;
        let mut out = TermBuilder::new();
        let mut tasks = vec![Task::Class(class, 0)];
        let mut size: u64 = 0;
        while let Some(task) = tasks.pop() {
            let (node, level) = match task {
                Task::Node(kind, arity) => {
                    out.node(kind, arity);
                    continue;
                }
                Task::Mark(c) => {
                    out.mark_class(c);
                    continue;
                }
                Task::Class(c, level) => {
                    if !draw_bernoulli(self.accept[level as usize][c.index()], rng) {
                        return Outcome::Failure { level };
                    }
                    tasks.push(Task::Mark(c));
                    tasks.push(Task::Expand(g.root(c), level));
                    continue;
                }
                Task::Expand(node, level) => (node, level),
            };
            let lv = level as usize;
            match g.node(node) {
                Node::Atom => {
                    size = size.saturating_add(1u64 << level);
                    if size > max_size {
                        return Outcome::Overflow;
                    }
                    out.leaf(NodeKind::Atom);
                }
                Node::Epsilon => out.leaf(NodeKind::Eps),
                Node::Ref(c) => tasks.push(Task::Class(*c, level)),
                Node::Union(xs) => {
                    // (x0 + x1) + x2 ...: peel summands off the right
                    let at = self.prefix_at[node.0 as usize] as usize;
                    let prefix = &self.prefix[lv][at..at + xs.len()];
                    let vals = &self.node_val[lv];
                    let mut pick = xs.len() - 1;
                    while pick > 0 && !draw_bernoulli(vals[xs[pick].0 as usize] / prefix[pick], rng)
                    {
                        pick -= 1;
                    }
                    tasks.push(Task::Node(NodeKind::Tagged(pick as u32), 1));
                    tasks.push(Task::Expand(xs[pick], level));
                }
                Node::Product(xs) => {
                    tasks.push(Task::Node(NodeKind::Tuple, xs.len()));
                    tasks.extend(xs.iter().rev().map(|x| Task::Expand(*x, level)));
                }
                Node::Seq(x) => {
                    let k = draw_geometric(self.node_val[lv][x.0 as usize], rng);
                    // the elements alone would exceed the budget
                    let least = g.node_min[x.0 as usize].saturating_mul(1u64 << level);
                    if k.saturating_mul(least) > max_size - size {
                        return Outcome::Overflow;
                    }
                    tasks.push(Task::Node(NodeKind::List, k as usize));
                    tasks.extend((0..k).map(|_| Task::Expand(*x, level)));
                }
                Node::MSet2(x) => {
                    let b = self.node_val[lv][x.0 as usize];
                    let bb = self.node_val[lv + 1][x.0 as usize];
                    if draw_bernoulli(b * b / (b * b + bb), rng) {
                        tasks.push(Task::Node(NodeKind::Pair { duplicated: false }, 2));
                        tasks.push(Task::Expand(*x, level));
                        tasks.push(Task::Expand(*x, level));
                    } else {
                        if level + 1 > self.cap {
                            return Outcome::Overflow;
                        }
                        tasks.push(Task::Node(NodeKind::Pair { duplicated: true }, 1));
                        tasks.push(Task::Expand(*x, level + 1));
                    }
                }
            }
        }
        Outcome::Ok {
            tree: out.finish(self.names.clone()),
            size,
        }
    }

    /// Repeats [`sample_once`](Self::sample_once) until an object is
    /// accepted, up to `max_attempts` times.
    pub fn sample_with_retry<R: RandomSource + ?Sized>(
        &self,
        class: &str,
        rng: &mut R,
        max_size: u64,
        max_attempts: u64,
    ) -> Result<Accepted, SampleError> {
        self.sample_in_window(class, rng, 0, max_size, max_size, max_attempts)
    }

    /// Draws until an object with size in `[n(1−tol), n(1+tol)]` comes out.
    /// Attempts are capped at `⌈n(1+tol)⌉` atoms so oversized ones stop
    /// early.
    pub fn sample_targeted<R: RandomSource + ?Sized>(
        &self,
        class: &str,
        rng: &mut R,
        target: u64,
        tolerance: f64,
        max_attempts: u64,
    ) -> Result<Accepted, SampleError> {
        let (lo, hi) = size_window(target, tolerance)?;
        self.sample_in_window(class, rng, lo, hi, hi, max_attempts)
    }

    fn sample_in_window<R: RandomSource + ?Sized>(
        &self,
        class: &str,
        rng: &mut R,
        lo: u64,
        hi: u64,
        max_size: u64,
        max_attempts: u64,
    ) -> Result<Accepted, SampleError> {
        let c = self.class(class)?;
        let mut tally = Tally::default();
        while tally.attempts < max_attempts {
            let outcome = self.sample_class(c, rng, max_size);
            tally.record(&outcome);
            if let Outcome::Ok { tree, size } = outcome {
                if (lo..=hi).contains(&size) {
                    return Ok(Accepted { tree, size, tally });
                }
                tally.accepts -= 1;
                tally.size_rejections += 1;
            }
        }
        Err(SampleError::AttemptsExhausted(tally))
    }
}

/// Integer bounds of the size window `[n(1−tol), n(1+tol)]`.
pub fn size_window(target: u64, tolerance: f64) -> Result<(u64, u64), SampleError> {
    if !(0.0..1.0).contains(&tolerance) {
        return Err(SampleError::InvalidTolerance(tolerance));
    }
    let n = target as f64;
    // guard against 20000·1.1 = 22000.000000000004 style rounding
    let lo = (n * (1.0 - tolerance) - 1e-9).ceil().max(0.0) as u64;
    let hi = (n * (1.0 + tolerance) + 1e-9).floor() as u64;
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn binary() -> Grammar {
        Grammar::parse("B = atom + atom*B*B;").unwrap()
    }

    #[test]
    fn rejects_invalid_coordinates() {
        let g = binary();
        let err = Sampler::new(&g, &Coordinates::new(0.5).with_value("B", 0.9)).unwrap_err();
        assert!(matches!(err, SampleError::InvalidCoordinates(_)));
    }

    #[test]
    fn unknown_class() {
        let g = binary();
        let s = Sampler::new(&g, &Coordinates::new(0.3).with_value("B", 1.0 / 3.0)).unwrap();
        let mut rng = seeded_rng(1);
        assert_eq!(
            s.sample_once("X", &mut rng, 10).unwrap_err(),
            SampleError::UnknownClass("X".into())
        );
    }

    #[test]
    fn size_matches_tree() {
        let g = Grammar::parse("V = atom + mset2(V);").unwrap();
        let c = Coordinates::new(0.35)
            .with_levels("V", vec![0.7, 0.2, 0.02])
            .with_tail("V", 2.0);
        let s = Sampler::new(&g, &c).unwrap();
        let mut rng = seeded_rng(7);
        let mut oks = 0;
        for _ in 0..2_000 {
            if let Outcome::Ok { tree, size } = s.sample_once("V", &mut rng, 10_000).unwrap() {
                assert_eq!(tree.size(), size);
                let mass: u64 = tree.symmetry_histogram().iter().map(|(m, n)| m * n).sum();
                assert_eq!(mass, size);
                oks += 1;
            }
        }
        assert!(oks > 100);
    }

    #[test]
    fn root_failure_rate_for_binary_trees() {
        // φ(0.36, 0.5) = 0.36 + 0.36·0.25 = 0.45
        let g = binary();
        let s = Sampler::new(&g, &Coordinates::new(0.36).with_value("B", 0.5)).unwrap();
        let p = s.success_probability("B", 0).unwrap();
        assert!((p - 0.9).abs() < 1e-12);
    }

    #[test]
    fn zero_slack_never_fails() {
        let g = binary();
        let s = Sampler::new(&g, &Coordinates::new(0.3).with_value("B", 1.0 / 3.0)).unwrap();
        let mut rng = seeded_rng(3);
        for _ in 0..5_000 {
            assert!(!s.sample_once("B", &mut rng, u64::MAX).unwrap().is_failure());
        }
    }

    #[test]
    fn overflow_respects_budget() {
        let g = binary();
        let s = Sampler::new(&g, &Coordinates::new(0.5).with_value("B", 1.0)).unwrap();
        let mut rng = seeded_rng(11);
        for _ in 0..2_000 {
            match s.sample_once("B", &mut rng, 15).unwrap() {
                Outcome::Ok { size, .. } => assert!(size <= 15),
                Outcome::Overflow => {}
                Outcome::Failure { .. } => panic!("no failure at zero slack"),
            }
        }
    }

    #[test]
    fn union_branches_follow_values() {
        let g = Grammar::parse("A = B + C; B = atom; C = atom*atom;").unwrap();
        let c = Coordinates::new(0.5)
            .with_value("A", 1.0)
            .with_value("B", 0.5)
            .with_value("C", 0.25);
        let s = Sampler::new(&g, &c).unwrap();
        let mut rng = seeded_rng(5);
        let mut seen: HashMap<String, u32> = HashMap::new();
        let n = 30_000;
        for _ in 0..n {
            let key = match s.sample_once("A", &mut rng, 100).unwrap() {
                Outcome::Ok { tree, .. } => tree.canonical(),
                Outcome::Failure { .. } => "fail".into(),
                Outcome::Overflow => unreachable!(),
            };
            *seen.entry(key).or_default() += 1;
        }
        for (key, p) in [("0:●", 0.5), ("1:(●,●)", 0.25), ("fail", 0.25)] {
            let f = seen[key] as f64 / n as f64;
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((f - p).abs() < 4.0 * sigma, "{key}: {f}");
        }
    }

    #[test]
    fn targeted_window() {
        assert_eq!(size_window(20_000, 0.1).unwrap(), (18_000, 22_000));
        assert_eq!(size_window(1, 0.0).unwrap(), (1, 1));
        assert!(size_window(5, 1.0).is_err());

        let g = binary();
        let s = Sampler::new(&g, &Coordinates::new(0.49).with_value("B", 1.0)).unwrap();
        let mut rng = seeded_rng(2);
        let leaf = s.sample_targeted("B", &mut rng, 1, 0.0, 1_000).unwrap();
        assert_eq!(leaf.tree.canonical(), "0:●");
    }

    #[test]
    fn retry_exhaustion_reports_tallies() {
        let g = binary();
        // success probability at the root is about 0.0003
        let s = Sampler::new(&g, &Coordinates::new(0.001).with_value("B", 3.0)).unwrap();
        let mut rng = seeded_rng(4);
        match s.sample_with_retry("B", &mut rng, 100, 1) {
            Err(SampleError::AttemptsExhausted(t)) => {
                assert_eq!(t.attempts, 1);
                assert_eq!(t.failures, 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn outermost_class_names_a_node() {
        let g = Grammar::parse("A = B; B = atom;").unwrap();
        let c = Coordinates::new(0.5)
            .with_value("A", 0.5)
            .with_value("B", 0.5);
        let s = Sampler::new(&g, &c).unwrap();
        let mut rng = seeded_rng(0);
        let t = s.sample_with_retry("A", &mut rng, 10, 10).unwrap().tree;
        assert_eq!(t.class_name(t.root()), Some("A"));
    }
}
