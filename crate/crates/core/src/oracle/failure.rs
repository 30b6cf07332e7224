//! Failure rates of analytic samplers, and the Cayley tree function.

use super::OracleError;

/// Probability that one attempt fails when the class has generating
/// function value `gf` and the sampler uses the upper value `a`:
/// `1 − gf/a`.
pub fn theoretical_failure(gf: f64, a: f64) -> Result<f64, OracleError> {
    if !(gf > 0.0) {
        return Err(OracleError::ZeroGf);
    }
    if a < gf {
        return Err(OracleError::BelowGf { a, gf });
    }
    Ok(1.0 - gf / a)
}

/// Mean number of failed attempts before the first success: the failure
/// count is geometric, so this is `a/gf − 1`.
pub fn expected_failures(gf: f64, a: f64) -> Result<f64, OracleError> {
    if !(gf > 0.0) {
        return Err(OracleError::ZeroGf);
    }
    if a < gf {
        return Err(OracleError::BelowGf { a, gf });
    }
    Ok(a / gf - 1.0)
}

/// Principal solution of `T = z·e^T` for `0 ≤ z ≤ e⁻¹`, by Newton's method
/// from `T = 0`.
///
/// The map `T ↦ T − z·e^T` is concave, so the iterates increase
/// monotonically to the root without overshooting. At `z = e⁻¹` the root is
/// double and convergence drops to linear.
pub fn cayley_tree_function(z: f64, tol: f64) -> Result<f64, OracleError> {
    let e_inv = (-1.0f64).exp();
    if !(0.0..=e_inv).contains(&z) {
        return Err(OracleError::OutOfDomain(z));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    // the root never exceeds the maximiser of T − z·e^T
    let ceiling = (-z.ln()).min(1.0);
    let mut t = 0.0f64;
    for _ in 0..10_000 {
        let ez = z * t.exp();
        let f = t - ez;
        let df = 1.0 - ez;
        if f.abs() < tol && df.abs() > 1e-3 {
            break;
        }
        if !(df > 0.0) {
            break;
        }
        let next = (t - f / df).min(ceiling);
        if (next - t).abs() < tol {
            t = next;
            break;
        }
        t = next;
    }
    Ok(t)
}
