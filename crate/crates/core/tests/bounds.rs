use ags_core::bounds::{bound_grad_diff, bound_value_diff, lemma3_gaps};
use ags_core::linalg::SpdMatrix;
use ags_core::objectives::{make_benchmark, make_cosine, Benchmark};
use ags_core::smoothing::{smooth_grad_quadrature, smooth_value_quadrature};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn spd_of(d: usize) -> impl Strategy<Value = SpdMatrix> {
    prop::collection::vec(-1.0..1.0f64, d * d).prop_map(move |v| {
        let b = DMatrix::from_vec(d, d, v);
        SpdMatrix::from_matrix(b.transpose() * &b + DMatrix::identity(d, d) * 0.05).unwrap()
    })
}

fn vec_of(d: usize, r: f64) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-r..r, d).prop_map(DVector::from_vec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sphere_gaps_stay_below_the_bounds((s, x, seed) in (1..=3usize).prop_flat_map(|d| (spd_of(d), vec_of(d, 3.0), any::<u64>()))) {
        let d = x.len();
        let obj = make_benchmark(Benchmark::Sphere, d, Some(seed), DVector::zeros(d)).unwrap();
        let gaps = lemma3_gaps(2.0, d, &s);
        let fs = smooth_value_quadrature(&obj, &s, &x, 8).unwrap();
        prop_assert!((fs - obj.value(&x)).abs() <= gaps.value_gap * (1.0 + 1e-12));
        let gs = smooth_grad_quadrature(&obj, &s, &x, 8).unwrap();
        prop_assert!((gs - obj.gradient(&x).unwrap()).norm() <= gaps.grad_gap);
    }

    #[test]
    fn value_diff_bound_holds_for_cosines((s, t, w, x) in (1..=2usize).prop_flat_map(|d| (spd_of(d), spd_of(d), vec_of(d, 2.0), vec_of(d, 3.0)))) {
        let d = x.len();
        let obj = make_cosine(w, 0.4, 0.0);
        let l = obj.smoothness().unwrap();
        let fs = smooth_value_quadrature(&obj, &s, &x, 32).unwrap();
        let ft = smooth_value_quadrature(&obj, &t, &x, 32).unwrap();
        let bound = bound_value_diff(l, d, &s, &t).unwrap();
        prop_assert!((fs - ft).abs() <= bound + 1e-10, "{} > {bound}", (fs - ft).abs());
    }

    #[test]
    fn pair_bounds_are_symmetric((s, t) in (1..=5usize).prop_flat_map(|d| (spd_of(d), spd_of(d))), l in 0.1..10.0f64) {
        let d = s.dim();
        prop_assert_eq!(
            bound_value_diff(l, d, &s, &t).unwrap().to_bits(),
            bound_value_diff(l, d, &t, &s).unwrap().to_bits()
        );
        prop_assert_eq!(
            bound_grad_diff(l, d, &s, &t).unwrap().to_bits(),
            bound_grad_diff(l, d, &t, &s).unwrap().to_bits()
        );
    }

    #[test]
    fn identical_matrices_have_no_value_gap(s in (1..=5usize).prop_flat_map(spd_of), l in 0.1..10.0f64) {
        prop_assert_eq!(bound_value_diff(l, s.dim(), &s, &s).unwrap(), 0.0);
    }
}
