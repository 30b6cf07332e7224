//! Validated, index-based form of a [`CombSpec`] shared by the oracle and the
//! samplers.

use std::fmt;

use thiserror::Error;

use crate::spec::{validate_spec, CombSpec, Expr, ParseError, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassId(pub(crate) u32);

impl ClassId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) struct NodeId(pub(crate) u32);

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Atom,
    Epsilon,
    Ref(ClassId),
    Union(Vec<NodeId>),
    Product(Vec<NodeId>),
    Seq(NodeId),
    MSet2(NodeId),
}

#[derive(Debug, Clone)]
pub(crate) struct ClassInfo {
    pub name: String,
    pub root: NodeId,
    pub min_size: u64,
    /// Reachable from some `mset2` argument, so needed at squared arguments.
    pub leveled: bool,
}

#[derive(Debug, Error)]
pub enum GrammarError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid specification: {}", .0.errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(ValidationReport),
    #[error("unknown class `{0}`")]
    UnknownClass(String),
}

/// A specification that passed [`validate_spec`].
#[derive(Debug, Clone)]
pub struct Grammar {
    spec: CombSpec,
    pub(crate) classes: Vec<ClassInfo>,
    pub(crate) nodes: Vec<Node>,
    /// Minimal object size of every node.
    pub(crate) node_min: Vec<u64>,
}

impl Grammar {
    pub fn parse(text: &str) -> Result<Self, GrammarError> {
        Self::new(CombSpec::parse(text)?)
    }

    pub fn new(spec: CombSpec) -> Result<Self, GrammarError> {
        let report = validate_spec(&spec);
        if !report.is_ok() {
            return Err(GrammarError::Invalid(report));
        }
        let mut g = Grammar {
            classes: Vec::with_capacity(spec.len()),
            nodes: Vec::new(),
            node_min: Vec::new(),
            spec: CombSpec::default(),
        };
        let ids: Vec<(String, ClassId)> = spec
            .class_names()
            .enumerate()
            .map(|(i, n)| (n.to_owned(), ClassId(i as u32)))
            .collect();
        let lookup = |name: &str| ids.iter().find(|(n, _)| n == name).map(|(_, id)| *id);
        for (name, expr) in spec.definitions() {
            let root = g.compile(expr, &lookup);
            g.classes.push(ClassInfo {
                name: name.clone(),
                root,
                min_size: report.min_size(name).expect("validated"),
                leveled: false,
            });
        }
        let mut stack = Vec::new();
        for node in &g.nodes {
            if let Node::MSet2(arg) = node {
                g.refs_below(*arg, &mut stack);
            }
        }
        while let Some(c) = stack.pop() {
            if !g.classes[c.index()].leveled {
                g.classes[c.index()].leveled = true;
                g.refs_below(g.classes[c.index()].root, &mut stack);
            }
        }
        // children precede parents in the arena
        for i in 0..g.nodes.len() {
            let m = match &g.nodes[i] {
                Node::Atom => 1,
                Node::Epsilon | Node::Seq(_) => 0,
                Node::Ref(c) => g.classes[c.index()].min_size,
                Node::Union(xs) => xs
                    .iter()
                    .map(|x| g.node_min[x.0 as usize])
                    .min()
                    .unwrap_or(0),
                Node::Product(xs) => xs.iter().map(|x| g.node_min[x.0 as usize]).sum(),
                Node::MSet2(x) => 2 * g.node_min[x.0 as usize],
            };
            g.node_min.push(m);
        }
        g.spec = spec;
        Ok(g)
    }

    fn compile(&mut self, e: &Expr, lookup: &impl Fn(&str) -> Option<ClassId>) -> NodeId {
        let node = match e {
            Expr::Atom => Node::Atom,
            Expr::Epsilon => Node::Epsilon,
            Expr::Ref(n) => Node::Ref(lookup(n).expect("validated")),
            Expr::Union(xs) => Node::Union(xs.iter().map(|x| self.compile(x, lookup)).collect()),
            Expr::Product(xs) => {
                Node::Product(xs.iter().map(|x| self.compile(x, lookup)).collect())
            }
            Expr::Seq(x) => Node::Seq(self.compile(x, lookup)),
            Expr::MSet2(x) => Node::MSet2(self.compile(x, lookup)),
        };
        self.nodes.push(node);
        NodeId(self.nodes.len() as u32 - 1)
    }

    fn refs_below(&self, n: NodeId, out: &mut Vec<ClassId>) {
        match self.node(n) {
            Node::Atom | Node::Epsilon => {}
            Node::Ref(c) => out.push(*c),
            Node::Union(xs) | Node::Product(xs) => xs.iter().for_each(|x| self.refs_below(*x, out)),
            Node::Seq(x) | Node::MSet2(x) => self.refs_below(*x, out),
        }
    }

    pub(crate) fn node(&self, n: NodeId) -> &Node {
        &self.nodes[n.0 as usize]
    }

    pub(crate) fn root(&self, c: ClassId) -> NodeId {
        self.classes[c.index()].root
    }

    pub fn spec(&self) -> &CombSpec {
        &self.spec
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn class_id(&self, name: &str) -> Result<ClassId, GrammarError> {
        self.classes
            .iter()
            .position(|c| c.name == name)
            .map(|i| ClassId(i as u32))
            .ok_or_else(|| GrammarError::UnknownClass(name.to_owned()))
    }

    pub fn class_ids(&self) -> impl Iterator<Item = ClassId> {
        (0..self.classes.len() as u32).map(ClassId)
    }

    pub fn class_name(&self, c: ClassId) -> &str {
        &self.classes[c.index()].name
    }

    pub fn min_size(&self, c: ClassId) -> u64 {
        self.classes[c.index()].min_size
    }

    /// Whether the class is reachable from an `mset2` argument and therefore
    /// needs values at the squared arguments z², z⁴, ...
    pub fn is_leveled(&self, c: ClassId) -> bool {
        self.classes[c.index()].leveled
    }

    pub fn has_mset2(&self) -> bool {
        self.nodes.iter().any(|n| matches!(n, Node::MSet2(_)))
    }

    pub fn class_names(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.name.clone()).collect()
    }
}

impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.spec.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leveled_classes_are_transitive() {
        let g = Grammar::parse("V = atom + mset2(W); W = atom*V; X = atom + atom*X;").unwrap();
        let id = |n| g.class_id(n).unwrap();
        assert!(g.is_leveled(id("V")));
        assert!(g.is_leveled(id("W")));
        assert!(!g.is_leveled(id("X")));
        assert!(g.has_mset2());
    }

    #[test]
    fn invalid_spec_is_rejected() {
        let err = Grammar::parse("A = A;").unwrap_err();
        assert!(matches!(err, GrammarError::Invalid(_)));
        assert!(err.to_string().contains("no finite object"));
        let g = Grammar::parse("B = atom + atom*B*B;").unwrap();
        assert!(matches!(
            g.class_id("C"),
            Err(GrammarError::UnknownClass(_))
        ));
    }
}
