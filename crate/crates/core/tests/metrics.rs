use mif_core::metrics::{global_rmse, step_error, ErrorSeries};
use proptest::prelude::*;

fn to_series(rows: &[Vec<f64>]) -> Vec<ErrorSeries> {
    rows.iter().enumerate().map(|(j, e)| ErrorSeries { realization: j, method: "m".into(), errors: e.clone() }).collect()
}

fn grid() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..6, 1usize..12).prop_flat_map(|(j, k)| prop::collection::vec(prop::collection::vec(0.0f64..10.0, k), j))
}

proptest! {
    #[test]
    fn rmse_is_permutation_invariant(rows in grid(), shift in 0usize..100) {
        let base = global_rmse(&to_series(&rows)).unwrap();
        let mut swapped = rows.clone();
        swapped.rotate_left(shift % rows.len());
        for r in &mut swapped {
            let k = r.len();
            r.rotate_right(shift % k);
        }
        let again = global_rmse(&to_series(&swapped)).unwrap();
        prop_assert!((base - again).abs() <= 1e-12 * (1.0 + base));
    }

    #[test]
    fn rmse_of_constant_series_is_exact(c in 0.0f64..1e6, k in 1usize..50) {
        prop_assert_eq!(global_rmse(&to_series(&[vec![c; k]])).unwrap(), c);
    }

    #[test]
    fn rmse_is_monotone(rows in grid(), pick in any::<prop::sample::Index>(), bump in 0.0f64..5.0) {
        let before = global_rmse(&to_series(&rows)).unwrap();
        let mut raised = rows.clone();
        let j = pick.index(raised.len());
        let k = pick.index(raised[j].len());
        raised[j][k] += bump;
        prop_assert!(global_rmse(&to_series(&raised)).unwrap() >= before);
    }

    #[test]
    fn step_error_is_a_metric(a in prop::collection::vec(-5.0f64..5.0, 3), b in prop::collection::vec(-5.0f64..5.0, 3), c in prop::collection::vec(-5.0f64..5.0, 3)) {
        let ab = step_error(&a, &b).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, step_error(&b, &a).unwrap());
        prop_assert!(ab <= step_error(&a, &c).unwrap() + step_error(&c, &b).unwrap() + 1e-12);
    }
}
