//! Combinatorial specifications: the AST, its textual form, and
//! well-foundedness checks.
//!
//! A specification is an ordered list of class definitions written in a
//! small DSL:
//!
//! ```text
//! # binary trees, all nodes counted
//! B = atom + atom * B * B;
//! ```
//!
//! `atom` has size one, `eps` has size zero, `+` is disjoint union, `*` is
//! Cartesian product, `seq(e)` is the sequence construction and `mset2(e)`
//! the unordered pair.

mod parse;
mod validate;

use std::fmt;

use indexmap::IndexMap;

pub use parse::{parse_spec, ParseError};
pub use validate::{validate_spec, ValidationError, ValidationReport};

/// One node of a class definition.
///
/// `Union` and `Product` are n-ary and kept flat: a well-formed AST never
/// nests a `Union` directly inside a `Union` (same for `Product`) and never
/// holds fewer than two operands in either.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Atom,
    Epsilon,
    Ref(String),
    Union(Vec<Expr>),
    Product(Vec<Expr>),
    Seq(Box<Expr>),
    MSet2(Box<Expr>),
}

impl Expr {
    /// Builds a union, flattening nested unions and collapsing the
    /// single-operand case.
    pub fn union(items: impl IntoIterator<Item = Expr>) -> Expr {
        Self::flat(items, true)
    }

    /// Builds a product, flattening nested products and collapsing the
    /// single-operand case.
    pub fn product(items: impl IntoIterator<Item = Expr>) -> Expr {
        Self::flat(items, false)
    }

    fn flat(items: impl IntoIterator<Item = Expr>, union: bool) -> Expr {
        let mut out = Vec::new();
        for item in items {
            match item {
                Expr::Union(inner) if union => out.extend(inner),
                Expr::Product(inner) if !union => out.extend(inner),
                other => out.push(other),
            }
        }
        if out.len() == 1 {
            return out.pop().unwrap();
        }
        if union {
            Expr::Union(out)
        } else {
            Expr::Product(out)
        }
    }

    /// Calls `f` on every class name referenced by this expression.
    pub fn for_each_ref<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Expr::Atom | Expr::Epsilon => {}
            Expr::Ref(name) => f(name),
            Expr::Union(xs) | Expr::Product(xs) => xs.iter().for_each(|x| x.for_each_ref(f)),
            Expr::Seq(x) | Expr::MSet2(x) => x.for_each_ref(f),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        // 0: expression, 1: term, 2: factor
        match self {
            Expr::Atom => f.write_str("atom"),
            Expr::Epsilon => f.write_str("eps"),
            Expr::Ref(name) => f.write_str(name),
            Expr::Seq(x) => {
                f.write_str("seq(")?;
                x.fmt_prec(f, 0)?;
                f.write_str(")")
            }
            Expr::MSet2(x) => {
                f.write_str("mset2(")?;
                x.fmt_prec(f, 0)?;
                f.write_str(")")
            }
            Expr::Union(xs) => Self::fmt_list(f, xs, " + ", prec > 0, 1),
            Expr::Product(xs) => Self::fmt_list(f, xs, " * ", prec > 1, 2),
        }
    }

    fn fmt_list(
        f: &mut fmt::Formatter<'_>,
        xs: &[Expr],
        sep: &str,
        paren: bool,
        inner: u8,
    ) -> fmt::Result {
        if paren {
            f.write_str("(")?;
        }
        for (i, x) in xs.iter().enumerate() {
            if i > 0 {
                f.write_str(sep)?;
            }
            x.fmt_prec(f, inner)?;
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// A parsed specification: class name to defining expression, in source
/// order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CombSpec {
    definitions: IndexMap<String, Expr>,
}

impl CombSpec {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        parse_spec(text)
    }

    /// Builds a specification from definitions. Later duplicates are
    /// rejected by returning the offending name.
    pub fn from_definitions(
        defs: impl IntoIterator<Item = (String, Expr)>,
    ) -> Result<Self, String> {
        let mut definitions = IndexMap::new();
        for (name, expr) in defs {
            if definitions.contains_key(&name) {
                return Err(name);
            }
            definitions.insert(name, expr);
        }
        Ok(Self { definitions })
    }

    pub fn definitions(&self) -> &IndexMap<String, Expr> {
        &self.definitions
    }

    pub fn get(&self, class: &str) -> Option<&Expr> {
        self.definitions.get(class)
    }

    pub fn class_names(&self) -> impl Iterator<Item = &str> {
        self.definitions.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.definitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.definitions.is_empty()
    }
}

impl fmt::Display for CombSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, expr) in &self.definitions {
            writeln!(f, "{name} = {expr};")?;
        }
        Ok(())
    }
}
