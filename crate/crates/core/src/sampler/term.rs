//! Sampled objects.
//!
//! A [`TermTree`] is stored flat: nodes live in one vector in post-order
//! (children before parents, root last), so arbitrarily deep objects can be
//! built, walked and dropped without recursion.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::grammar::ClassId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Atom,
    Eps,
    /// Branch `i` of a union.
    Tagged(u32),
    Tuple,
    List,
    /// Unordered pair. A duplicated pair stores its element once.
    Pair {
        duplicated: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermNode {
    pub kind: NodeKind,
    /// Set on the node produced by expanding a class reference.
    pub class: Option<ClassId>,
    first: u32,
    len: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermTree {
    nodes: Vec<TermNode>,
    kids: Vec<u32>,
    class_names: Arc<[String]>,
}

impl TermTree {
    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn node(&self, i: usize) -> &TermNode {
        &self.nodes[i]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn children(&self, i: usize) -> &[u32] {
        let n = &self.nodes[i];
        &self.kids[n.first as usize..(n.first + n.len) as usize]
    }

    pub fn class_name(&self, i: usize) -> Option<&str> {
        self.nodes[i]
            .class
            .map(|c| self.class_names[c.index()].as_str())
    }

    /// Number of atoms, counting each duplicated pair's element twice.
    pub fn size(&self) -> u64 {
        let mut sizes = vec![0u64; self.nodes.len()];
        for i in 0..self.nodes.len() {
            let kids = self.children(i);
            sizes[i] = match self.nodes[i].kind {
                NodeKind::Atom => 1,
                NodeKind::Eps => 0,
                NodeKind::Pair { duplicated: true } => sizes[kids[0] as usize].saturating_mul(2),
                _ => kids
                    .iter()
                    .fold(0u64, |acc, &k| acc.saturating_add(sizes[k as usize])),
            };
        }
        sizes[self.root()]
    }

    /// Deterministic text form. Pair elements are sorted, so the two
    /// generation orders of an unordered pair print the same, and a
    /// duplicated pair prints both copies.
    pub fn canonical(&self) -> String {
        let mut strs: Vec<String> = vec![String::new(); self.nodes.len()];
        for i in 0..self.nodes.len() {
            let kids = self.children(i);
            let mut take = |k: u32| std::mem::take(&mut strs[k as usize]);
            let s = match self.nodes[i].kind {
                NodeKind::Atom => "●".to_owned(),
                NodeKind::Eps => "ε".to_owned(),
                NodeKind::Tagged(t) => format!("{t}:{}", take(kids[0])),
                NodeKind::Tuple => format!(
                    "({})",
                    kids.iter().map(|&k| take(k)).collect::<Vec<_>>().join(",")
                ),
                NodeKind::List => format!(
                    "[{}]",
                    kids.iter().map(|&k| take(k)).collect::<Vec<_>>().join(",")
                ),
                NodeKind::Pair { duplicated: true } => {
                    let c = take(kids[0]);
                    format!("{{{c},{c}}}")
                }
                NodeKind::Pair { duplicated: false } => {
                    let (a, b) = (take(kids[0]), take(kids[1]));
                    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                    format!("{{{lo},{hi}}}")
                }
            };
            strs[i] = s;
        }
        std::mem::take(&mut strs[self.root()])
    }

    /// Atoms bucketed by multiplicity: an atom under `d` duplicated pairs
    /// stands for `2^d` atoms of the expanded object.
    pub fn symmetry_histogram(&self) -> BTreeMap<u64, u64> {
        let mut mult = vec![0u64; self.nodes.len()];
        let root = self.root();
        mult[root] = 1;
        let mut hist = BTreeMap::new();
        for i in (0..self.nodes.len()).rev() {
            let m = mult[i];
            let factor = match self.nodes[i].kind {
                NodeKind::Pair { duplicated: true } => 2,
                NodeKind::Atom => {
                    *hist.entry(m).or_insert(0) += 1;
                    continue;
                }
                _ => 1,
            };
            for &k in self.children(i) {
                mult[k as usize] = m.saturating_mul(factor);
            }
        }
        hist
    }
}

/// Assembles a [`TermTree`] bottom-up from a stack of finished subtrees.
#[derive(Debug)]
pub(crate) struct TermBuilder {
    nodes: Vec<TermNode>,
    kids: Vec<u32>,
    stack: Vec<u32>,
}

impl TermBuilder {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            kids: Vec::new(),
            stack: Vec::new(),
        }
    }

    pub fn leaf(&mut self, kind: NodeKind) {
        self.node(kind, 0);
    }

    /// Pops the `arity` most recent subtrees (in creation order) as the
    /// children of a new node.
    pub fn node(&mut self, kind: NodeKind, arity: usize) {
        let first = self.kids.len() as u32;
        let at = self.stack.len() - arity;
        self.kids.extend(self.stack.drain(at..));
        self.nodes.push(TermNode {
            kind,
            class: None,
            first,
            len: arity as u32,
        });
        self.stack.push(self.nodes.len() as u32 - 1);
    }

    /// Marks the most recent subtree as the expansion of `class`, unless an
    /// inner reference already claimed it.
    pub fn mark_class(&mut self, class: ClassId) {
        let top = *self.stack.last().expect("subtree to mark") as usize;
        self.nodes[top].class = Some(class);
    }

    pub fn finish(&mut self, class_names: Arc<[String]>) -> TermTree {
        debug_assert_eq!(self.stack.len(), 1);
        TermTree {
            nodes: std::mem::take(&mut self.nodes),
            kids: std::mem::take(&mut self.kids),
            class_names,
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn names() -> Arc<[String]> {
        Arc::from(vec!["B".to_owned()])
    }

    #[test]
    fn single_atom() {
        let mut b = TermBuilder::new();
        b.leaf(NodeKind::Atom);
        let t = b.finish(names());
        assert_eq!(t.canonical(), "●");
        assert_eq!(t.size(), 1);
        assert_eq!(t.symmetry_histogram(), BTreeMap::from([(1, 1)]));
    }

    #[test]
    fn binary_node_with_two_leaves() {
        let mut b = TermBuilder::new();
        b.leaf(NodeKind::Atom);
        for _ in 0..2 {
            b.leaf(NodeKind::Atom);
            b.node(NodeKind::Tagged(0), 1);
            b.mark_class(ClassId(0));
        }
        b.node(NodeKind::Tuple, 3);
        b.node(NodeKind::Tagged(1), 1);
        b.mark_class(ClassId(0));
        let t = b.finish(names());
        assert_eq!(t.canonical(), "1:(●,0:●,0:●)");
        assert_eq!(t.size(), 3);
        assert_eq!(t.class_name(t.root()), Some("B"));
        assert_eq!(t.class_name(0), None);
    }

    #[test]
    fn pairs() {
        let mut b = TermBuilder::new();
        b.leaf(NodeKind::Atom);
        b.node(NodeKind::Pair { duplicated: true }, 1);
        let dup = b.finish(names());
        assert_eq!(dup.canonical(), "{●,●}");
        assert_eq!(dup.size(), 2);
        assert_eq!(dup.symmetry_histogram(), BTreeMap::from([(2, 1)]));

        let mut b = TermBuilder::new();
        b.leaf(NodeKind::Atom);
        b.leaf(NodeKind::Atom);
        b.node(NodeKind::Pair { duplicated: false }, 2);
        let pair = b.finish(names());
        assert_eq!(pair.canonical(), "{●,●}");
        assert_eq!(pair.symmetry_histogram(), BTreeMap::from([(1, 2)]));
    }

    #[test]
    fn pair_order_does_not_matter() {
        let build = |swap: bool| {
            let mut b = TermBuilder::new();
            let leaf_then_pair = |b: &mut TermBuilder, first: bool| {
                if first {
                    b.leaf(NodeKind::Atom);
                } else {
                    b.leaf(NodeKind::Atom);
                    b.leaf(NodeKind::Atom);
                    b.node(NodeKind::Pair { duplicated: false }, 2);
                }
            };
            leaf_then_pair(&mut b, !swap);
            leaf_then_pair(&mut b, swap);
            b.node(NodeKind::Pair { duplicated: false }, 2);
            b.finish(names()).canonical()
        };
        assert_eq!(build(false), build(true));
    }

    #[test]
    fn lists_and_eps() {
        let mut b = TermBuilder::new();
        b.leaf(NodeKind::Eps);
        b.node(NodeKind::List, 0);
        b.node(NodeKind::Tuple, 2);
        let t = b.finish(names());
        assert_eq!(t.canonical(), "(ε,[])");
        assert_eq!(t.size(), 0);
        assert!(t.symmetry_histogram().is_empty());
    }

    #[test]
    fn deep_trees_do_not_recurse() {
        let mut b = TermBuilder::new();
        b.leaf(NodeKind::Atom);
        for _ in 0..200_000 {
            b.leaf(NodeKind::Atom);
            b.node(NodeKind::Tuple, 2);
        }
        let t = b.finish(names());
        assert_eq!(t.size(), 200_001);
        drop(t);
    }
}
