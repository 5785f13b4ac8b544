use proptest::prelude::*;
use torusnet::deviations::{estimate_from_values, wilson_interval};
use torusnet::dynamics::{solve_driven, FhnParams, ResponseFn, SynapseConfig};
use torusnet::io::{read_paths_binary, write_paths_binary};
use torusnet::kernels::{build_kappa, build_lambda, weighted_norm, DecaySpec};
use torusnet::{mod_torus, shift_field, LatticeShape, PathField, TimeGrid, TorusIndex};

fn shape_strategy() -> impl Strategy<Value = LatticeShape> {
    (1usize..=3, 0usize..=3).prop_map(|(d, n)| LatticeShape::new(d, n).unwrap())
}

fn index_in(dim: usize, span: i64) -> impl Strategy<Value = TorusIndex> {
    prop::collection::vec(-span..=span, dim).prop_map(|c| TorusIndex::new(&c))
}

proptest! {
    #[test]
    fn reduction_is_idempotent_and_in_range((shape, j) in shape_strategy().prop_flat_map(|s| (Just(s), index_in(s.dim(), 50)))) {
        let r = mod_torus(j.coords(), &shape);
        prop_assert!(r.sup_norm() <= shape.radius() as i64);
        prop_assert_eq!(mod_torus(r.coords(), &shape), r);
        let side = shape.side() as i64;
        for (a, b) in j.coords().iter().zip(r.coords()) {
            prop_assert_eq!((a - b).rem_euclid(side), 0);
        }
    }

    #[test]
    fn shifts_compose(
        (shape, a, b) in shape_strategy().prop_flat_map(|s| (Just(s), index_in(s.dim(), 9), index_in(s.dim(), 9)))
    ) {
        let field: Vec<usize> = (0..shape.site_count()).collect();
        let twice = shift_field(&shift_field(&field, &shape, &a), &shape, &b);
        let once = shift_field(&field, &shape, &a.add(&b));
        prop_assert_eq!(twice, once);
        let back = shift_field(&shift_field(&field, &shape, &a), &shape, &a.neg());
        prop_assert_eq!(back, field);
    }

    #[test]
    fn wilson_interval_brackets_estimate(trials in 1usize..5000, frac in 0.0f64..=1.0) {
        let hits = ((trials as f64) * frac).round() as usize;
        let (lo, hi) = wilson_interval(hits, trials);
        let p = hits as f64 / trials as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-12 && p <= hi + 1e-12 && hi <= 1.0);
    }

    #[test]
    fn nested_thresholds_are_monotone(values in prop::collection::vec(-5.0f64..5.0, 1..300), t1 in -6.0f64..6.0, dt in 0.0f64..3.0) {
        let a = estimate_from_values(&values, t1);
        let b = estimate_from_values(&values, t1 + dt);
        prop_assert!(b.hits <= a.hits);
        prop_assert!(b.p_hat <= a.p_hat);
    }

    #[test]
    fn binary_dump_round_trips(seed in any::<u64>(), reps in 1usize..4) {
        let shape = LatticeShape::new(2, 1).unwrap();
        let grid = TimeGrid::new(0.1, 0.02).unwrap();
        let fields: Vec<_> = (0..reps as u64).map(|r| PathField::brownian(shape, grid, seed, r)).collect();
        let refs: Vec<_> = fields.iter().collect();
        let mut buf = Vec::new();
        write_paths_binary(&mut buf, &refs, grid.dt()).unwrap();
        let back = read_paths_binary(&mut buf.as_slice()).unwrap();
        prop_assert_eq!(back.fields, fields);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn solution_map_commutes_with_shifts(seed in any::<u64>(), shift in -3i64..=3, j_ini in 0.0f64..=1.0) {
        let shape = LatticeShape::new(1, 3).unwrap();
        let grid = TimeGrid::new(0.2, 0.01).unwrap();
        let w = PathField::brownian(shape, grid, seed, 0);
        let syn = SynapseConfig::geometric(1, 0.5, 0.5, 2, j_ini, 1.0, 0.5, ResponseFn::Logistic).unwrap();
        let params = FhnParams::default();
        let j = TorusIndex::new(&[shift]);
        let a = solve_driven(&w.shifted(&j), 3, &params, &syn).unwrap();
        let b = solve_driven(&w, 3, &params, &syn).unwrap().shifted(&j);
        prop_assert_eq!(a.sub(&b).unwrap().sup_abs(), 0.0);
    }

    #[test]
    fn weighted_norm_is_homogeneous_and_subadditive(seed in any::<u64>(), alpha in -3.0f64..3.0) {
        let family = build_lambda(build_kappa(1, DecaySpec::geometric(0.5, 1.0, 10)).unwrap(), 256, 40).unwrap();
        let shape = LatticeShape::new(1, 3).unwrap();
        let grid = TimeGrid::new(0.2, 0.02).unwrap();
        let x = PathField::brownian(shape, grid, seed, 0);
        let y = PathField::brownian(shape, grid, seed, 1);
        let nx = weighted_norm(&x, &family).unwrap();
        let ny = weighted_norm(&y, &family).unwrap();
        let scaled = weighted_norm(&x.scaled(alpha), &family).unwrap();
        prop_assert!((scaled - alpha.abs() * nx).abs() <= 1e-12 * (1.0 + nx));
        prop_assert!(weighted_norm(&x.add(&y).unwrap(), &family).unwrap() <= nx + ny + 1e-12);
    }
}
