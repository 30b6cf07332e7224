use super::TuneError;
use crate::grammar::Grammar;
use crate::oracle::GfOracle;

/// Convergence tolerance for each generating-function evaluation.
const GF_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectResult {
    /// Midpoint of the final bracket.
    pub rho: f64,
    pub lo: f64,
    pub hi: f64,
    pub oracle_calls: usize,
}

/// Bisects `[0, z_hi]` on whether the generating function of `class`
/// converges, until the bracket is narrower than `tol`.
pub fn find_singularity_bisection(
    g: &Grammar,
    class: &str,
    z_hi: f64,
    tol: f64,
) -> Result<BisectResult, TuneError> {
    if g.class_id(class).is_err() {
        return Err(TuneError::UnknownClass(class.to_owned()));
    }
    if !(z_hi > 0.0) {
        return Err(TuneError::BadBracket(z_hi));
    }
    let oracle = GfOracle::new(g);
    let converges = |z: f64| oracle.value(class, z, GF_TOL).converged();
    let mut lo = 0.0;
    let mut hi = z_hi;
    if converges(hi) {
        return Err(TuneError::NotDivergent(hi));
    }
    if !converges(lo) {
        return Err(TuneError::NotConvergent(lo));
    }
    while hi - lo >= tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if converges(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(BisectResult {
        rho: 0.5 * (lo + hi),
        lo,
        hi,
        oracle_calls: oracle.calls(),
    })
}
