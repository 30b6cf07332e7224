use std::fmt;

use indexmap::{IndexMap, IndexSet};

use super::{CombSpec, Expr};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationError {
    /// `class` mentions a name that has no definition.
    UndefinedRef { class: String, reference: String },
    /// The least fixpoint of `class` is empty: it has no finite object.
    NonPointed { class: String },
    /// `seq` or `mset2` applied to something that admits a size-zero object.
    NullableArgument {
        class: String,
        operator: &'static str,
    },
    /// `class` can derive itself without consuming any size.
    EpsilonCycle { class: String },
}

impl ValidationError {
    pub fn class(&self) -> &str {
        match self {
            ValidationError::UndefinedRef { class, .. }
            | ValidationError::NonPointed { class }
            | ValidationError::NullableArgument { class, .. }
            | ValidationError::EpsilonCycle { class } => class,
        }
    }

    /// Both flavours of unguarded size-zero recursion.
    pub fn is_epsilon_cycle(&self) -> bool {
        matches!(
            self,
            ValidationError::NullableArgument { .. } | ValidationError::EpsilonCycle { .. }
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ValidationError::UndefinedRef { .. } => "undefined-ref",
            ValidationError::NonPointed { .. } => "non-pointed",
            ValidationError::NullableArgument { .. } | ValidationError::EpsilonCycle { .. } => {
                "epsilon-cycle"
            }
        }
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationError::UndefinedRef { class, reference } => {
                write!(f, "class `{class}` refers to undefined class `{reference}`")
            }
            ValidationError::NonPointed { class } => {
                write!(f, "class `{class}` has no finite object")
            }
            ValidationError::NullableArgument { class, operator } => write!(
                f,
                "epsilon cycle in `{class}`: argument of `{operator}` admits a size-0 object"
            ),
            ValidationError::EpsilonCycle { class } => write!(
                f,
                "epsilon cycle: `{class}` derives itself without consuming size"
            ),
        }
    }
}

/// Minimal object sizes (`None` when a class has no finite object) plus
/// every structural problem found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub min_sizes: IndexMap<String, Option<u64>>,
    pub errors: Vec<ValidationError>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn min_size(&self, class: &str) -> Option<u64> {
        self.min_sizes.get(class).copied().flatten()
    }
}

/// Minimal size of `e` under the current class estimates.
pub(crate) fn expr_min_size(e: &Expr, sizes: &impl Fn(&str) -> Option<u64>) -> Option<u64> {
    match e {
        Expr::Atom => Some(1),
        Expr::Epsilon => Some(0),
        Expr::Ref(name) => sizes(name),
        Expr::Union(xs) => xs.iter().filter_map(|x| expr_min_size(x, sizes)).min(),
        Expr::Product(xs) => xs.iter().try_fold(0u64, |acc, x| {
            expr_min_size(x, sizes).map(|s| acc.saturating_add(s))
        }),
        Expr::Seq(_) => Some(0),
        Expr::MSet2(x) => expr_min_size(x, sizes).map(|s| s.saturating_mul(2)),
    }
}

fn min_sizes(spec: &CombSpec) -> IndexMap<String, Option<u64>> {
    let mut sizes: IndexMap<String, Option<u64>> =
        spec.class_names().map(|c| (c.to_owned(), None)).collect();
    // Decreasing iteration from the top element (infinity) of the min-plus
    // lattice; every round fixes at least one more class or stops.
    loop {
        let mut changed = false;
        for (name, expr) in spec.definitions() {
            let lookup = |c: &str| sizes.get(c).copied().flatten();
            let new = expr_min_size(expr, &lookup);
            let old = sizes[name.as_str()];
            let better = match (new, old) {
                (Some(n), None) => Some(n),
                (Some(n), Some(o)) if n < o => Some(n),
                _ => None,
            };
            if let Some(n) = better {
                sizes[name.as_str()] = Some(n);
                changed = true;
            }
        }
        if !changed {
            return sizes;
        }
    }
}

/// Refs that `e` can reach while every sibling contributes size zero.
fn zero_cost_refs<'a>(e: &'a Expr, sizes: &impl Fn(&str) -> Option<u64>, out: &mut Vec<&'a str>) {
    match e {
        Expr::Atom | Expr::Epsilon | Expr::MSet2(_) => {}
        Expr::Ref(name) => out.push(name),
        Expr::Union(xs) => xs.iter().for_each(|x| zero_cost_refs(x, sizes, out)),
        Expr::Product(xs) => {
            for (i, x) in xs.iter().enumerate() {
                let others_nullable = xs
                    .iter()
                    .enumerate()
                    .all(|(j, y)| j == i || expr_min_size(y, sizes) == Some(0));
                if others_nullable {
                    zero_cost_refs(x, sizes, out);
                }
            }
        }
        Expr::Seq(x) => zero_cost_refs(x, sizes, out),
    }
}

fn nullable_arguments(
    e: &Expr,
    class: &str,
    sizes: &impl Fn(&str) -> Option<u64>,
    out: &mut Vec<ValidationError>,
) {
    match e {
        Expr::Atom | Expr::Epsilon | Expr::Ref(_) => {}
        Expr::Union(xs) | Expr::Product(xs) => xs
            .iter()
            .for_each(|x| nullable_arguments(x, class, sizes, out)),
        Expr::Seq(x) | Expr::MSet2(x) => {
            if expr_min_size(x, sizes) == Some(0) {
                out.push(ValidationError::NullableArgument {
                    class: class.to_owned(),
                    operator: if matches!(e, Expr::Seq(_)) {
                        "seq"
                    } else {
                        "mset2"
                    },
                });
            }
            nullable_arguments(x, class, sizes, out);
        }
    }
}

/// Checks that every reference is defined, every class is pointed, and no
/// class admits unguarded size-zero recursion. Never fails: problems are
/// returned in the report.
pub fn validate_spec(spec: &CombSpec) -> ValidationReport {
    let mut errors = Vec::new();
    for (name, expr) in spec.definitions() {
        let mut seen = IndexSet::new();
        expr.for_each_ref(&mut |r| {
            if spec.get(r).is_none() && seen.insert(r) {
                errors.push(ValidationError::UndefinedRef {
                    class: name.clone(),
                    reference: r.to_owned(),
                });
            }
        });
    }

    let min_sizes = min_sizes(spec);
    let lookup = |c: &str| min_sizes.get(c).copied().flatten();
    for (name, size) in &min_sizes {
        if size.is_none() {
            errors.push(ValidationError::NonPointed {
                class: name.clone(),
            });
        }
    }
    for (name, expr) in spec.definitions() {
        nullable_arguments(expr, name, &lookup, &mut errors);
    }

    let edges: IndexMap<&str, Vec<&str>> = spec
        .definitions()
        .iter()
        .map(|(name, expr)| {
            let mut out = Vec::new();
            if lookup(name).is_some() {
                zero_cost_refs(expr, &lookup, &mut out);
            }
            out.retain(|r| spec.get(r).is_some());
            (name.as_str(), out)
        })
        .collect();
    for name in spec.class_names() {
        // depth-first search for a path back to `name`
        let mut stack: Vec<&str> = edges[name].clone();
        let mut seen = IndexSet::new();
        while let Some(c) = stack.pop() {
            if c == name {
                errors.push(ValidationError::EpsilonCycle {
                    class: name.to_owned(),
                });
                break;
            }
            if seen.insert(c) {
                stack.extend(edges[c].iter().copied());
            }
        }
    }

    ValidationReport { min_sizes, errors }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::parse_spec;

    fn report(text: &str) -> ValidationReport {
        validate_spec(&parse_spec(text).unwrap())
    }

    #[test]
    fn binary_trees_min_size_one() {
        let r = report("B = atom + atom*B*B;");
        assert!(r.is_ok(), "{:?}", r.errors);
        assert_eq!(r.min_size("B"), Some(1));
    }

    #[test]
    fn min_sizes_follow_the_semiring() {
        let r =
            report("A = B*B + mset2(C); B = atom*atom + C*C*C; C = atom; S = seq(C) * B; E = eps;");
        assert!(r.is_ok(), "{:?}", r.errors);
        assert_eq!(r.min_size("C"), Some(1));
        assert_eq!(r.min_size("B"), Some(2));
        assert_eq!(r.min_size("A"), Some(2));
        assert_eq!(r.min_size("S"), Some(2));
        assert_eq!(r.min_size("E"), Some(0));
    }

    #[test]
    fn self_loop_is_not_pointed() {
        let r = report("A = A;");
        assert_eq!(r.min_size("A"), None);
        assert!(r
            .errors
            .contains(&ValidationError::NonPointed { class: "A".into() }));
    }

    #[test]
    fn sequence_of_nullable_class() {
        let r = report("S = seq(E); E = eps;");
        assert!(!r.is_ok());
        assert!(r
            .errors
            .iter()
            .any(|e| e.is_epsilon_cycle() && e.class() == "S"));
    }

    #[test]
    fn mset2_of_nullable_is_rejected() {
        let r = report("M = mset2(atom + eps);");
        assert!(r.errors.iter().any(|e| matches!(
            e,
            ValidationError::NullableArgument {
                operator: "mset2",
                ..
            }
        )));
    }

    #[test]
    fn unguarded_cycles() {
        let r = report("A = atom + A;");
        assert_eq!(
            r.errors,
            vec![ValidationError::EpsilonCycle { class: "A".into() }]
        );
        let r = report("A = atom + E*B; B = A; E = eps;");
        let cyc: Vec<_> = r.errors.iter().map(|e| e.class()).collect();
        assert_eq!(cyc, ["A", "B"]);
        // a size-consuming sibling guards the recursion
        assert!(report("A = atom + atom*A;").is_ok());
        // a Motzkin-style guard through an eps class
        assert!(report("Y = atom*(E + Y + Y*Y); E = eps;").is_ok());
    }

    #[test]
    fn undefined_reference() {
        let r = report("A = atom + B;");
        assert_eq!(
            r.errors,
            vec![ValidationError::UndefinedRef {
                class: "A".into(),
                reference: "B".into()
            }]
        );
        // the atom branch still makes A pointed
        assert_eq!(r.min_size("A"), Some(1));
    }

    #[test]
    fn min_size_is_monotone_under_union() {
        let base = "A = atom*atom*B; B = atom*atom + mset2(B);";
        let wider = "A = atom*atom*B + atom; B = atom*atom + mset2(B);";
        let (a, b) = (report(base), report(wider));
        assert_eq!(a.min_size("A"), Some(4));
        assert!(b.min_size("A") <= a.min_size("A"));
    }
}
