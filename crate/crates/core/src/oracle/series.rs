//! Exact counting sequences.
//!
//! Coefficients are produced degree by degree. At degree `n` every node's
//! coefficient depends on strictly lower degrees, except through zero-cost
//! paths (a product whose other factors admit size 0, a one-element
//! sequence, a reference). Validation rules out cycles along those paths, so
//! a memoised demand-driven pass per degree always terminates.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use super::OracleError;
use crate::grammar::{Grammar, Node};

pub const MAX_SERIES_TERMS: usize = 10_000;

/// Binary view of the grammar: n-ary products become left-nested pairs so
/// each partial product has its own memo slot.
#[derive(Debug)]
enum SNode {
    Atom,
    Epsilon,
    Link(usize),
    Union(Vec<usize>),
    Mul(usize, usize),
    Seq(usize),
    MSet2(usize),
}

struct Table {
    nodes: Vec<SNode>,
    min: Vec<u64>,
    coef: Vec<Vec<BigUint>>,
    busy: Vec<bool>,
}

impl Table {
    fn build(g: &Grammar) -> (Table, Vec<usize>) {
        let mut nodes: Vec<SNode> = Vec::with_capacity(g.nodes.len() * 2);
        let mut min: Vec<u64> = Vec::new();
        // grammar node index -> series node index (grammar children precede parents)
        let mut map = Vec::with_capacity(g.nodes.len());
        for (i, node) in g.nodes.iter().enumerate() {
            let s = match node {
                Node::Atom => SNode::Atom,
                Node::Epsilon => SNode::Epsilon,
                // patched once every class root is known
                Node::Ref(c) => SNode::Link(c.index()),
                Node::Union(xs) => SNode::Union(xs.iter().map(|x| map[x.0 as usize]).collect()),
                Node::Product(xs) => {
                    let mut acc = map[xs[0].0 as usize];
                    for x in &xs[1..xs.len() - 1] {
                        let rhs = map[x.0 as usize];
                        nodes.push(SNode::Mul(acc, rhs));
                        min.push(min[acc] + min[rhs]);
                        acc = nodes.len() - 1;
                    }
                    SNode::Mul(acc, map[xs[xs.len() - 1].0 as usize])
                }
                Node::Seq(x) => SNode::Seq(map[x.0 as usize]),
                Node::MSet2(x) => SNode::MSet2(map[x.0 as usize]),
            };
            nodes.push(s);
            min.push(g.node_min[i]);
            map.push(nodes.len() - 1);
        }
        let roots: Vec<usize> = g.classes.iter().map(|c| map[c.root.0 as usize]).collect();
        for n in nodes.iter_mut() {
            if let SNode::Link(c) = n {
                *c = roots[*c];
            }
        }
        let len = nodes.len();
        (
            Table {
                nodes,
                min,
                coef: vec![Vec::new(); len],
                busy: vec![false; len],
            },
            roots,
        )
    }

    fn get(&self, node: usize, k: usize) -> &BigUint {
        &self.coef[node][k]
    }

    /// Ensures `coef[node][n]` exists; all degrees below `n` are final.
    fn compute(&mut self, node: usize, n: usize) {
        if self.coef[node].len() > n {
            return;
        }
        if (n as u64) < self.min[node] {
            self.coef[node].push(BigUint::zero());
            return;
        }
        assert!(
            !self.busy[node],
            "unguarded size-zero recursion in a validated grammar"
        );
        self.busy[node] = true;
        let value = match self.nodes[node] {
            SNode::Atom => BigUint::from((n == 1) as u8),
            SNode::Epsilon => BigUint::from((n == 0) as u8),
            SNode::Link(t) => {
                self.compute(t, n);
                self.get(t, n).clone()
            }
            SNode::Union(ref xs) => {
                let xs = xs.clone();
                let mut s = BigUint::zero();
                for x in xs {
                    self.compute(x, n);
                    s += self.get(x, n);
                }
                s
            }
            SNode::Mul(a, b) => {
                let mut s = BigUint::zero();
                if self.min[b] == 0 {
                    self.compute(a, n);
                }
                if self.min[a] == 0 {
                    self.compute(b, n);
                }
                let lo = self.min[a] as usize;
                let hi = n.saturating_sub(self.min[b] as usize);
                for i in lo..=hi.min(n) {
                    s += self.get(a, i) * self.get(b, n - i);
                }
                s
            }
            SNode::Seq(x) => {
                // S = 1 + X·S with [z^0]X = 0
                if n == 0 {
                    BigUint::from(1u8)
                } else {
                    self.compute(x, n);
                    let mut s = BigUint::zero();
                    for k in 1..=n {
                        s += self.get(x, k) * &self.coef[node][n - k];
                    }
                    s
                }
            }
            SNode::MSet2(x) => {
                // ([z^n] X² + [z^(n/2)] X) / 2, with [z^0]X = 0
                let mut s = BigUint::zero();
                for k in 1..n {
                    s += self.get(x, k) * self.get(x, n - k);
                }
                if n.is_multiple_of(2) {
                    s += self.get(x, n / 2);
                }
                debug_assert!((&s % 2u8).is_zero());
                s >> 1
            }
        };
        self.busy[node] = false;
        self.coef[node].push(value);
    }
}

/// Exact counts `c_0..=c_n` of objects of each size in `class`.
pub fn series_coefficients(
    g: &Grammar,
    class: &str,
    n: usize,
) -> Result<Vec<BigUint>, OracleError> {
    if n > MAX_SERIES_TERMS {
        return Err(OracleError::TooManyTerms { requested: n });
    }
    let c = g
        .class_id(class)
        .map_err(|_| OracleError::UnknownClass(class.to_owned()))?;
    let (mut table, roots) = Table::build(g);
    for degree in 0..=n {
        for node in 0..table.nodes.len() {
            table.compute(node, degree);
        }
    }
    Ok(table.coef.swap_remove(roots[c.index()]))
}

/// Evaluates a truncated series at `z` in f64. Coefficients too large for
/// an f64 are scaled by a power of two before being multiplied by `z^n`.
pub fn series_value(coefs: &[BigUint], z: f64) -> f64 {
    let mut sum = 0.0;
    for (n, c) in coefs.iter().enumerate().rev() {
        let term = match c.to_f64().filter(|x| x.is_finite()) {
            Some(x) if x < 1e300 => x * z.powi(n as i32),
            _ => {
                let shift = c.bits() - 64;
                let top = (c >> shift).to_f64().expect("64-bit value");
                top * (shift as f64 * std::f64::consts::LN_2 + n as f64 * z.ln()).exp()
            }
        };
        sum += term;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coefs(spec: &str, class: &str, n: usize) -> Vec<u64> {
        let g = Grammar::parse(spec).unwrap();
        series_coefficients(&g, class, n)
            .unwrap()
            .iter()
            .map(|c| c.to_u64().unwrap())
            .collect()
    }

    #[test]
    fn binary_trees_are_catalan_at_odd_sizes() {
        assert_eq!(
            coefs("B = atom + atom*B*B;", "B", 7),
            [0, 1, 0, 1, 0, 2, 0, 5]
        );
    }

    #[test]
    fn otter_trees_are_wedderburn_etherington() {
        assert_eq!(
            coefs("V = atom + mset2(V);", "V", 8),
            [0, 1, 1, 1, 2, 3, 6, 11, 23]
        );
    }

    #[test]
    fn epsilon_class() {
        assert_eq!(coefs("E = eps;", "E", 3), [1, 0, 0, 0]);
    }

    #[test]
    fn motzkin_through_an_eps_class() {
        // unary-binary trees: Motzkin numbers shifted by one
        assert_eq!(
            coefs("Y = atom*(E + Y + Y*Y); E = eps;", "Y", 8),
            [0, 1, 1, 2, 4, 9, 21, 51, 127]
        );
    }

    #[test]
    fn sequences_and_compositions() {
        // compositions of n: 2^(n-1)
        assert_eq!(
            coefs("C = seq(P); P = atom + atom*P;", "C", 6),
            [1, 1, 2, 4, 8, 16, 32]
        );
        // nullable factor ahead of a recursive reference
        assert_eq!(
            coefs("A = atom + E*A*atom; E = eps;", "A", 4),
            [0, 1, 1, 1, 1]
        );
    }

    #[test]
    fn limits() {
        let g = Grammar::parse("B = atom + atom*B*B;").unwrap();
        assert!(matches!(
            series_coefficients(&g, "B", MAX_SERIES_TERMS + 1),
            Err(OracleError::TooManyTerms { .. })
        ));
        assert!(series_coefficients(&g, "X", 3).is_err());
    }

    #[test]
    fn huge_coefficients_are_scaled() {
        let big = BigUint::from(3u32).pow(1000);
        // 3^1000 · (1/3)^1000 = 1
        let cs = vec![BigUint::from(0u32); 1000]
            .into_iter()
            .chain([big])
            .collect::<Vec<_>>();
        assert!((series_value(&cs, 1.0 / 3.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_series() {
        let c: Vec<BigUint> = [1u8, 2, 3].iter().map(|&x| BigUint::from(x)).collect();
        assert!((series_value(&c, 0.5) - (1.0 + 1.0 + 0.75)).abs() < 1e-15);
    }
}
