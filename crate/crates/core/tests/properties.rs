use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use maslov_lab::conic::{phase, s_point};
use maslov_lab::io::{format_matrix, parse_matrix};
use maslov_lab::linalg::{self, DEFAULT_TAU};
use maslov_lab::spinor::{fid_order, fresnel_gaussian};
use maslov_lab::stratification::{planted_symmetric, stratum_of};
use maslov_lab::symplectic::{
    b_matrix, chart_coords, graph_from_symmetric, random_lagrangian_with, random_symmetric, transition, transversality, Chart,
    SymplecticSpace,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chart_round_trip(seed in any::<u64>(), n in 1usize..=5) {
        let mut rng = rng(seed);
        let space = SymplecticSpace::canonical(n).unwrap();
        let comp = random_lagrangian_with(&mut rng, n);
        prop_assume!(transversality(&comp, &space.l0()) > 1e-2);
        let chart = Chart::new(space.l0(), comp).unwrap();
        let a = random_symmetric(&mut rng, n);
        let back = chart_coords(&graph_from_symmetric(&a, &chart), &chart).unwrap();
        prop_assert!(linalg::max_abs(&(back.matrix() - a.matrix())) < 1e-9 * (1.0 + linalg::max_abs(a.matrix())));
    }

    #[test]
    fn transition_matches_direct_coordinates(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = rng(seed);
        let l0 = SymplecticSpace::canonical(n).unwrap().l0();
        let (l, nc, np) = (random_lagrangian_with(&mut rng, n), random_lagrangian_with(&mut rng, n), random_lagrangian_with(&mut rng, n));
        let pairs = [(&l, &nc), (&l, &np), (&l0, &nc), (&l0, &np)];
        prop_assume!(pairs.iter().all(|(x, y)| transversality(x, y) > 1e-2));
        let chart = Chart::new(l0, nc).unwrap();
        let a = chart_coords(&l, &chart).unwrap();
        let direct = chart_coords(&l, &chart.with_complement(np.clone()).unwrap()).unwrap();
        let moved = transition(&a, &b_matrix(&chart, &np).unwrap()).unwrap();
        let err = (moved.matrix() - direct.matrix()).norm() / direct.matrix().norm().max(1e-300);
        prop_assert!(err < 1e-7, "relative error {err}");
    }

    #[test]
    fn stratum_equals_planted_nullity(seed in any::<u64>(), n in 1usize..=6, frac in 0.0f64..=1.0) {
        let mut rng = rng(seed);
        let k = ((n as f64 + 1.0) * frac).floor().min(n as f64) as usize;
        let space = SymplecticSpace::canonical(n).unwrap();
        let a = planted_symmetric(&mut rng, n, k);
        let l = graph_from_symmetric(&a, &space.l0_chart());
        prop_assert_eq!(stratum_of(&l, &space.l0()).unwrap().k, k);
    }

    #[test]
    fn svd_reconstructs(seed in any::<u64>(), r in 1usize..=8, c in 1usize..=8) {
        let mut rng = rng(seed);
        let m = gaussian_matrix(&mut rng, r, c);
        let d = linalg::svd(&m);
        let recon = &d.u * DMatrix::from_diagonal(&DVector::from_vec(d.s.clone())) * d.v.transpose();
        prop_assert!(linalg::max_abs(&(recon - &m)) < 1e-12 * (1.0 + linalg::max_abs(&m)));
        prop_assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        let nalgebra_sv = m.clone().svd(false, false).singular_values;
        let mut reference: Vec<f64> = nalgebra_sv.iter().copied().collect();
        reference.sort_by(|a, b| b.total_cmp(a));
        for (x, y) in linalg::singular_values(&m).iter().zip(&reference) {
            prop_assert!((x - y).abs() < 1e-12 * (1.0 + reference[0]));
        }
    }

    #[test]
    fn fresnel_modulus_and_phase(seed in any::<u64>(), n in 1usize..=5) {
        let mut rng = rng(seed);
        let a = planted_symmetric(&mut rng, n, 0);
        let f = fresnel_gaussian(&a).unwrap();
        let det = a.matrix().determinant().abs();
        prop_assert!((f.value.norm() * det.sqrt() / (2.0 * PI).powf(n as f64 / 2.0) - 1.0).abs() < 1e-12);
        let sig = linalg::signature(a.matrix(), DEFAULT_TAU).unwrap();
        prop_assert_eq!(f.signature, sig);
        let expected = -PI / 4.0 * sig as f64;
        let diff = (f.value.arg() - expected).rem_euclid(2.0 * PI);
        prop_assert!(diff < 1e-12 || 2.0 * PI - diff < 1e-12);
    }

    #[test]
    fn s_point_is_even_and_rank_one(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = rng(seed);
        let k = rng.random_range(1..=n);
        let a = planted_symmetric(&mut rng, n, k);
        let ker = linalg::sym_kernel(a.matrix(), DEFAULT_TAU);
        let v = &ker * DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        prop_assume!(v.norm() > 1e-3);
        let chart = SymplecticSpace::canonical(n).unwrap().l0_chart();
        let p = s_point(&a, &v, &chart).unwrap();
        prop_assert_eq!(&p, &s_point(&a, &(-&v), &chart).unwrap());
        let (vals, _) = linalg::sym_eigen(p.beta.matrix());
        prop_assert!((vals[0] + v.norm_squared() / 2.0).abs() < 1e-12 * (1.0 + v.norm_squared()));
        prop_assert!(vals.iter().skip(1).all(|x| x.abs() < 1e-12 * (1.0 + v.norm_squared())));
        // the critical value of the phase is zero
        prop_assert!(phase(&a, &v).value.abs() < 1e-9 * (1.0 + v.norm_squared()));
        prop_assert!((p.phase_witness().norm() - v.norm()).abs() < 1e-12 * (1.0 + v.norm()));
    }

    #[test]
    fn matrix_text_round_trip(seed in any::<u64>(), r in 1usize..=6, c in 1usize..=6) {
        let mut rng = rng(seed);
        let m = gaussian_matrix(&mut rng, r, c) * 1e3;
        prop_assert_eq!(parse_matrix(&format_matrix(&m)).unwrap(), m);
    }

    #[test]
    fn fid_order_formula(n in 1usize..=10_000) {
        let o = fid_order(n).unwrap();
        prop_assert!(o.holds());
        let n = n as i64;
        prop_assert_eq!(o.m * 8, num_rational::Ratio::from_integer(-n * (n + 1)));
    }
}
