mod common;

use common::{random_weighted_graph, stream};
use netctl::mse::stack;
use netctl::nalgebra::{DMatrix, DVector, SymmetricEigen};
use netctl::{
    bandlimiting_filter, build_shift, eigendecompose, format_edge_list, parse_edge_list,
    sample_res, Band, BandPlacement, ControlSequence, DiffusionModel, GraphSignal,
    MseCoefficients, ResModel, ShiftKind,
};
use proptest::prelude::*;

fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

fn kind(adjacency: bool) -> ShiftKind {
    if adjacency {
        ShiftKind::Adjacency
    } else {
        ShiftKind::Laplacian
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gft_preserves_energy(seed in any::<u64>(), n in 2usize..12, adjacency: bool) {
        let mut rng = stream(seed).rng();
        let g = random_weighted_graph(n, &mut rng);
        let basis = eigendecompose(&build_shift(&g, kind(adjacency))).unwrap();
        let x = GraphSignal::new(DVector::from_fn(n, |i, _| (i as f64 * 0.7 + seed as f64).sin()));
        let xf = basis.gft(&x).unwrap();
        prop_assert!((xf.norm() - x.norm()).abs() <= 1e-10 * x.norm().max(1.0));
        let back = basis.igft(&xf).unwrap();
        prop_assert!((back.values() - x.values()).amax() <= 1e-10);
    }

    #[test]
    fn band_filter_is_orthogonal_projector(
        seed in any::<u64>(),
        n in 2usize..12,
        k_frac in 0.0f64..1.0,
        high: bool,
    ) {
        let mut rng = stream(seed).rng();
        let g = random_weighted_graph(n, &mut rng);
        let basis = eigendecompose(&build_shift(&g, ShiftKind::Laplacian)).unwrap();
        let k = 1 + (k_frac * (n - 1) as f64) as usize;
        let band = if high { Band::high(k) } else { Band::low(k) };
        let h = bandlimiting_filter(&basis, band).unwrap();
        prop_assert!((&h * &h - &h).amax() <= 1e-10);
        prop_assert!((&h - h.transpose()).amax() <= 1e-12);
        prop_assert!((h.trace() - k as f64).abs() <= 1e-9);
        prop_assert_eq!(band.placement == BandPlacement::High, high);
    }

    #[test]
    fn res_draws_are_subgraphs_with_interlaced_spectra(
        seed in any::<u64>(),
        n in 2usize..12,
        p in 0.0f64..=1.0,
    ) {
        let mut rng = stream(seed).rng();
        let g = random_weighted_graph(n, &mut rng);
        let sub = sample_res(&g, ResModel::new(p).unwrap(), &mut rng);
        prop_assert!(sub.is_subgraph_of(&g));
        // dropping edges can only lower every Laplacian eigenvalue
        let full = sorted_eigenvalues(g.laplacian());
        let part = sorted_eigenvalues(sub.laplacian());
        for (a, b) in part.iter().zip(&full) {
            prop_assert!(*a <= b + 1e-9);
        }
    }

    #[test]
    fn stacked_second_moments_are_psd(
        seed in any::<u64>(),
        n in 2usize..9,
        horizon in 1usize..5,
        p in 0.05f64..=1.0,
        adjacency: bool,
    ) {
        let mut rng = stream(seed).rng();
        let g = random_weighted_graph(n, &mut rng);
        let model = if adjacency {
            DiffusionModel::AdjacencyShift
        } else {
            DiffusionModel::heat_for(&g)
        };
        let basis = eigendecompose(&build_shift(&g, model.shift_kind())).unwrap();
        let k = 1 + (seed % n as u64) as usize;
        let h = bandlimiting_filter(&basis, Band::low(k)).unwrap();
        let x = GraphSignal::new(&h * DVector::from_element(n, 1.0));
        let c = MseCoefficients::compute(&model, &g, ResModel::new(p).unwrap(), &h, &x, horizon)
            .unwrap();
        let s = stack(&c);
        for m in [&s.gamma_big, &s.gamma_var_big] {
            let scale = m.amax().max(1.0);
            prop_assert!((m - m.transpose()).amax() <= 1e-10 * scale);
            let low = sorted_eigenvalues(m.clone())[0];
            prop_assert!(low >= -1e-9 * scale, "smallest eigenvalue {}", low);
        }
    }

    #[test]
    fn stacked_controls_round_trip(
        horizon in 1usize..7,
        width in 1usize..6,
        values in prop::collection::vec(-1e3f64..1e3, 36),
    ) {
        let u = DVector::from_iterator(horizon * width, values.into_iter().cycle().take(horizon * width));
        let ctrl = ControlSequence::from_stacked(&u, horizon, width).unwrap();
        prop_assert_eq!(ctrl.to_stacked(), u.clone());
        // the first block of the stack drives the last step
        prop_assert_eq!(ctrl.input(horizon - 1).as_slice(), &u.as_slice()[..width]);
        prop_assert!((ctrl.energy() - u.norm_squared()).abs() <= 1e-9 * u.norm_squared().max(1.0));
    }

    #[test]
    fn edge_lists_round_trip(seed in any::<u64>(), n in 2usize..15) {
        let mut rng = stream(seed).rng();
        let g = random_weighted_graph(n, &mut rng);
        let parsed = parse_edge_list(&format_edge_list(&g)).unwrap();
        prop_assert_eq!(parsed, g);
    }
}
