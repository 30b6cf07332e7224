//! Level-truncated Otter pipeline: convergence in the threshold and the
//! effect of the tail.

use anasamp::check_validity;
use anasamp::oracle::{level_arg, series_coefficients, series_value};
use anasamp::otter::{
    default_i0, otter_backsolve, otter_grammar, otter_singularity, solve_k, Otter, OtterParams,
    OTTER_CLASS,
};
use anasamp::sampler::{seeded_rng, Outcome};
use anasamp::stats::binomial_sigma;
use proptest::prelude::*;

#[test]
fn backsolve_converges_to_the_series() {
    let rho = otter_singularity(1e-10).unwrap();
    assert!((rho - 0.4027).abs() < 1e-4, "{rho}");
    let cs = series_coefficients(&otter_grammar(), OTTER_CLASS, 1500).unwrap();
    for frac in [0.5, 0.8, 0.95] {
        let z = frac * rho;
        let exact = series_value(&cs, z);
        let v0 = otter_backsolve(z, 10, solve_k(z, 10).unwrap()).unwrap()[0];
        assert!((v0 - exact).abs() < 1e-8, "z={z}: {v0} vs {exact}");
    }
}

#[test]
fn raising_the_threshold_never_adds_failure() {
    let z = 0.4;
    let v0: Vec<f64> = (0..6)
        .map(|i0| otter_backsolve(z, i0, solve_k(z, i0).unwrap()).unwrap()[0])
        .collect();
    for w in v0.windows(2) {
        assert!(w[1] <= w[0], "{v0:?}");
    }

    // empirical failure rates at matched attempt counts
    let attempts = 40_000u64;
    let rates: Vec<f64> = (0..4)
        .map(|i0| {
            let otter = Otter::new(OtterParams::new(z, Some(i0), None).unwrap());
            let s = otter.sampler().unwrap();
            let mut rng = seeded_rng(100 + i0 as u64);
            let mut failures = 0u64;
            for _ in 0..attempts {
                if let Outcome::Failure { .. } =
                    s.sample_once(OTTER_CLASS, &mut rng, 1_000_000).unwrap()
                {
                    failures += 1;
                }
            }
            failures as f64 / attempts as f64
        })
        .collect();
    for w in rates.windows(2) {
        let noise = 3.0 * binomial_sigma(w[0].max(1e-4), attempts);
        assert!(w[1] <= w[0] + noise, "{rates:?}");
    }
}

#[test]
fn theoretical_failure_matches_observed() {
    let z = 0.4;
    let params = OtterParams::new(z, Some(0), None).unwrap();
    let cs = series_coefficients(&otter_grammar(), OTTER_CLASS, 1500).unwrap();
    let p = 1.0 - series_value(&cs, z) / params.v[0];
    let otter = Otter::new(params);
    let s = otter.sampler().unwrap();
    let mut rng = seeded_rng(77);
    let n = 100_000u64;
    let mut failures = 0u64;
    for _ in 0..n {
        match s.sample_once(OTTER_CLASS, &mut rng, u64::MAX).unwrap() {
            Outcome::Failure { .. } => failures += 1,
            Outcome::Overflow => unreachable!(),
            Outcome::Ok { .. } => {}
        }
    }
    let f = failures as f64 / n as f64;
    assert!((f - p).abs() <= 4.0 * binomial_sigma(p, n), "{f} vs {p}");
}

#[test]
fn auto_parameters_sit_just_below_the_singularity() {
    let p = OtterParams::near_singularity(None).unwrap();
    let rho = otter_singularity(1e-9).unwrap();
    assert!(p.z < rho && p.z > rho * (1.0 - 1e-4));
    assert_eq!(p.i0, default_i0(p.z));
    assert!(p.k > 1.0);
    assert!(check_validity(&otter_grammar(), &p.coordinates()).is_valid());
}

proptest! {
    #[test]
    fn default_threshold_makes_the_tail_negligible(z in 0.01f64..0.99) {
        let i0 = default_i0(z);
        prop_assert!(i0 >= 8);
        prop_assert!(level_arg(z, i0 + 1) < 1e-12);
    }

    #[test]
    fn parameters_are_valid_coordinates(z in 0.0f64..0.4, i0 in 0u32..12) {
        let Ok(p) = OtterParams::new(z, Some(i0), None) else {
            // thresholds too low for z have no tail constant
            prop_assert!(z > 0.3);
            return Ok(());
        };
        prop_assert_eq!(p.v.len(), i0 as usize + 1);
        prop_assert!(check_validity(&otter_grammar(), &p.coordinates()).is_valid());
    }

    #[test]
    fn explicit_tail_constants_above_the_root_stay_valid(extra in 0.0f64..0.5) {
        let z = 0.35;
        let k = solve_k(z, 3).unwrap() + extra;
        let p = OtterParams::new(z, Some(3), Some(k)).unwrap();
        prop_assert!(check_validity(&otter_grammar(), &p.coordinates()).is_valid());
    }
}

#[test]
fn bad_tail_constants_are_rejected() {
    assert!(OtterParams::new(0.3, Some(4), Some(1.0)).is_err());
    assert!(OtterParams::new(0.3, Some(4), Some(0.5)).is_err());
    assert!(OtterParams::new(1.2, None, None).is_err());
}
