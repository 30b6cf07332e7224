//! Geometry of the validity region against closed forms.

use anasamp::oracle::gf_value;
use anasamp::sampler::{sample_cayley_size, seeded_rng};
use anasamp::{check_validity, Coordinates, Grammar};
use proptest::prelude::*;

fn near(x: f64, y: f64) -> bool {
    (x - y).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs()))
}

proptest! {
    #[test]
    fn binary_region_is_the_quadratic_inequality(z in 0.01f64..0.6, b in 0.0f64..3.0) {
        let rhs = z + z * b * b;
        prop_assume!(!near(b, rhs));
        let g = Grammar::parse("B = atom + atom*B*B;").unwrap();
        let valid = check_validity(&g, &Coordinates::new(z).with_value("B", b)).is_valid();
        prop_assert_eq!(valid, b >= rhs);
    }

    #[test]
    fn sequence_region(z in 0.0f64..1.2, s in 0.0f64..20.0) {
        let g = Grammar::parse("S = seq(atom);").unwrap();
        let valid = check_validity(&g, &Coordinates::new(z).with_value("S", s)).is_valid();
        let expected = z < 1.0 && s >= 1.0 / (1.0 - z);
        prop_assume!(z >= 1.0 || !near(s, 1.0 / (1.0 - z)));
        prop_assert_eq!(valid, expected);
    }

    #[test]
    fn cayley_region(z in 0.0f64..0.5, t in 0.01f64..4.0) {
        let rhs = z * t.exp();
        prop_assume!(!near(t, rhs));
        let accepted = sample_cayley_size(z, t, &mut seeded_rng(0), 10).is_ok();
        prop_assert_eq!(accepted, t >= rhs);
    }

    /// Any valid value bounds the generating function from above.
    #[test]
    fn valid_points_lie_above_the_curve(z in 0.01f64..0.49, b in 0.0f64..3.0) {
        let g = Grammar::parse("B = atom + atom*B*B;").unwrap();
        if check_validity(&g, &Coordinates::new(z).with_value("B", b)).is_valid() {
            let exact = gf_value(&g, "B", z, 1e-15).value().unwrap();
            prop_assert!(exact <= b * (1.0 + 1e-12));
        }
    }

    /// Below the turning point `1/(2z)`, slack grows with the value.
    #[test]
    fn slack_is_monotone_below_the_turning_point(z in 0.05f64..0.5, u in 0.0f64..1.0, w in 0.0f64..1.0) {
        let turn = 1.0 / (2.0 * z);
        let (lo, hi) = if u < w { (u * turn, w * turn) } else { (w * turn, u * turn) };
        let g = Grammar::parse("B = atom + atom*B*B;").unwrap();
        let slack = |b: f64| check_validity(&g, &Coordinates::new(z).with_value("B", b)).slack["B"][0];
        prop_assert!(slack(lo) <= slack(hi) + 1e-15);
    }
}

#[test]
fn boltzmann_point_is_on_the_boundary() {
    let g = Grammar::parse("B = atom + atom*B*B;").unwrap();
    // B(0.4) = 0.5 exactly
    let v = check_validity(&g, &Coordinates::new(0.4).with_value("B", 0.5));
    assert!(v.is_valid());
    assert!(v.slack["B"][0].abs() < 1e-15);
    assert!(!check_validity(&g, &Coordinates::new(0.4).with_value("B", 0.49)).is_valid());
}

#[test]
fn mset2_region_needs_every_level() {
    let g = Grammar::parse("V = atom + mset2(V);").unwrap();
    let coords = Coordinates::new(0.3).with_levels("V", vec![0.5]);
    let v = check_validity(&g, &coords);
    assert!(!v.is_valid());
    let with_tail = Coordinates::new(0.3)
        .with_levels("V", vec![0.5])
        .with_tail("V", 1.5);
    assert!(check_validity(&g, &with_tail).is_valid());
}
