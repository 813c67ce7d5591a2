use hyperkernel::duals::{dual_relu, dual_relu_dot, CovPair};
use proptest::prelude::*;

fn valid_pair() -> impl Strategy<Value = CovPair> {
    (0.05f64..3.0, 0.05f64..3.0, -1.0f64..1.0)
        .prop_map(|(s11, s22, c)| CovPair::new(s11, c * (s11 * s22).sqrt(), s22).unwrap())
}

proptest! {
    #[test]
    fn dual_scale_equivariance(pair in valid_pair(), a in 0.1f64..3.0, b in 0.1f64..3.0) {
        let scaled = CovPair::new(a * a * pair.s11, a * b * pair.s12, b * b * pair.s22).unwrap();
        let lhs = dual_relu(scaled).unwrap();
        let rhs = a * b * dual_relu(pair).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn dual_dot_scale_invariance(pair in valid_pair(), a in 0.1f64..3.0, b in 0.1f64..3.0) {
        let scaled = CovPair::new(a * a * pair.s11, a * b * pair.s12, b * b * pair.s22).unwrap();
        let lhs = dual_relu_dot(scaled).unwrap();
        let rhs = dual_relu_dot(pair).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn dual_bounds(pair in valid_pair()) {
        let v = dual_relu(pair).unwrap();
        prop_assert!(v >= 0.0);
        prop_assert!(v <= (pair.s11 * pair.s22).sqrt() * (1.0 + 1e-12));
        let d = dual_relu_dot(pair).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
    }
}

#[test]
fn duals_nondecreasing_in_covariance() {
    let (s11, s22) = (1.3, 0.7);
    let cap = (s11 * s22 as f64).sqrt();
    let grid: Vec<f64> = (0..=40).map(|i| -cap + i as f64 * cap / 20.0).collect();
    let mut prev = f64::NEG_INFINITY;
    let mut prev_dot = f64::NEG_INFINITY;
    for s12 in grid {
        let pair = CovPair::new(s11, s12, s22).unwrap();
        let v = dual_relu(pair).unwrap();
        let d = dual_relu_dot(pair).unwrap();
        assert!(v >= prev - 1e-12, "dual decreased at s12={}", s12);
        assert!(d >= prev_dot - 1e-12, "dual dot decreased at s12={}", s12);
        prev = v;
        prev_dot = d;
    }
}
