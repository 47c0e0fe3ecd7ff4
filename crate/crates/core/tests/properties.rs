mod common;

use common::*;
use fraclap::continuum::{
    continuum_energy, continuum_spectrum, fd_laplacian_matrix, fractional_green, solve_continuum_constrained,
    PeriodicGrid, SpectrumVariant,
};
use fraclap::graph::{build_weight_matrix, connectivity_radius, graph_laplacian, is_connected, Kernel, WeightedGraph};
use fraclap::spectral::{eigendecompose, fractional_energy};
use fraclap::ssl::{solve_constrained, ConstraintSet};
use fraclap::tlp::{tl2_distance, EmpiricalPair};
use fraclap::torus::{sample_uniform, TorusPoint};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn graph_laplacian_properties() {
    graph_criterion().unwrap();
}

#[test]
fn spectral_properties() {
    spectral_criterion().unwrap();
}

#[test]
fn solver_matches_oracle_and_is_optimal() {
    solver_criterion().unwrap();
}

#[test]
fn continuum_properties() {
    continuum_criterion().unwrap();
}

#[test]
fn tl2_properties() {
    tlp_criterion().unwrap();
}

#[test]
fn connectivity_threshold_is_sharp() {
    let mut rng = rng(11);
    for _ in 0..10 {
        let n = rng.random_range(5..=60);
        let points = sample_uniform(n, 2, rng.random()).unwrap();
        let r = connectivity_radius(&points, &Kernel::indicator(), 1e-12).unwrap();
        let above = build_weight_matrix(&points, 1.01 * r, &Kernel::indicator()).unwrap();
        let below = build_weight_matrix(&points, 0.99 * r, &Kernel::indicator()).unwrap();
        assert!(is_connected(&above));
        assert!(!is_connected(&below));
    }
}

#[test]
fn energy_is_monotone_in_s_for_large_eigenvalues() {
    let mut rng = rng(12);
    for _ in 0..20 {
        let (_, g) = connected_instance(&mut rng, 40, 2);
        let spec = eigendecompose(&graph_laplacian(&g)).unwrap();
        // keep only modes with λ ≥ 1 so that λ^s grows with s
        let coeffs: Vec<f64> = spec
            .eigenvalues()
            .iter()
            .map(|&l| if l >= 1.0 { rng.random_range(-1.0..1.0) } else { 0.0 })
            .collect();
        let u = spec.synthesize(&coeffs);
        let mut last = 0.0;
        for s in [0.5, 1.0, 2.0, 4.0] {
            let e = fractional_energy(&spec, &u, s).unwrap();
            assert!(e >= last * (1.0 - 1e-12), "s={s}: {e} < {last}");
            last = e;
        }
    }
}

#[test]
fn kkt_stationarity() {
    let mut rng = rng(13);
    for _ in 0..20 {
        let n = rng.random_range(6..=30);
        let (_, g) = connected_instance(&mut rng, n, 2);
        let lap = graph_laplacian(&g);
        let spec = eigendecompose(&lap).unwrap();
        let cons = random_constraints(&mut rng, n, 4);
        let u = solve_constrained(&spec, &cons, 2.0).unwrap();
        let grad = matpow(&lap, 2) * DVector::from_vec(u.values.clone());
        let fixed: Vec<usize> = cons.indices().collect();
        let scale = grad.amax().max(1.0);
        for i in (0..n).filter(|i| !fixed.contains(i)) {
            assert!(grad[i].abs() < 1e-7 * scale, "gradient {} at free node {i}", grad[i]);
        }
    }
}

#[test]
fn energy_grows_with_more_constraints() {
    let mut rng = rng(14);
    for _ in 0..20 {
        let n = rng.random_range(8..=40);
        let (_, g) = connected_instance(&mut rng, n, 2);
        let spec = eigendecompose(&graph_laplacian(&g)).unwrap();
        let big = random_constraints(&mut rng, n, 6);
        let entries = big.entries();
        let small = ConstraintSet::new(entries[..entries.len().div_ceil(2)].to_vec()).unwrap();
        let e_small = solve_constrained(&spec, &small, 1.5).unwrap().energy;
        let e_big = solve_constrained(&spec, &big, 1.5).unwrap().energy;
        assert!(e_big >= e_small - 1e-9 * e_small.max(1.0));
    }
}

#[test]
fn discrete_poincare_inequality() {
    let mut rng = rng(15);
    for _ in 0..20 {
        let (_, g) = connected_instance(&mut rng, 30, 2);
        let spec = eigendecompose(&graph_laplacian(&g)).unwrap();
        let l2 = spec.eigenvalues()[1];
        for s in [0.5, 1.0, 3.0] {
            let u = random_vec(&mut rng, 30);
            let mean = u.iter().sum::<f64>() / 30.0;
            let var = u.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 30.0;
            let e = fractional_energy(&spec, &u, s).unwrap();
            assert!(e >= l2.powf(s) * var * (1.0 - 1e-9));
        }
    }
}

#[test]
fn complete_graph_limit() {
    // all points within ε: the constrained minimizer is constant on free nodes
    let n = 12;
    let w = DMatrix::from_element(n, n, 1.0);
    let g = WeightedGraph::from_weights(w, 2, 0.5, 1.0).unwrap();
    let spec = eigendecompose(&graph_laplacian(&g)).unwrap();
    let cons = ConstraintSet::new(vec![(0, 0.0), (1, 1.0)]).unwrap();
    for s in [0.5, 1.0, 3.0] {
        let u = solve_constrained(&spec, &cons, s).unwrap();
        for &v in &u.values[2..] {
            assert!((v - 0.5).abs() < 1e-6, "s={s}: free value {v}");
        }
    }
}

#[test]
fn continuum_matches_dense_solve() {
    let grid = PeriodicGrid::new(24, 2).unwrap();
    let spec = continuum_spectrum(grid, SpectrumVariant::FiniteDifference);
    let labels = vec![(TorusPoint::new(vec![0.25, 0.25]).unwrap(), -1.0), (TorusPoint::new(vec![0.75, 0.5]).unwrap(), 2.0)];
    let sol = solve_continuum_constrained(&spec, &labels, 2.0).unwrap();

    let lap = fd_laplacian_matrix(grid);
    let m2 = &lap * &lap;
    let fixed = sol.nodes.clone();
    let free: Vec<usize> = (0..grid.len()).filter(|i| !fixed.contains(i)).collect();
    let mff = DMatrix::from_fn(free.len(), free.len(), |a, b| m2[(free[a], free[b])]);
    let rhs = DVector::from_fn(free.len(), |a, _| {
        -fixed.iter().zip(&labels).map(|(&c, (_, l))| m2[(free[a], c)] * l).sum::<f64>()
    });
    let uf = mff.cholesky().unwrap().solve(&rhs);
    for (a, &i) in free.iter().enumerate() {
        assert!((uf[a] - sol.u.values[i]).abs() < 1e-6, "node {i}: {} vs {}", sol.u.values[i], uf[a]);
    }
}

#[test]
fn continuum_energy_invariant_under_relabeling() {
    let grid = PeriodicGrid::new(32, 2).unwrap();
    let spec = continuum_spectrum(grid, SpectrumVariant::Analytic);
    let a = (TorusPoint::new(vec![0.2, 0.3]).unwrap(), 0.0);
    let b = (TorusPoint::new(vec![0.7, 0.8]).unwrap(), 1.0);
    let e1 = solve_continuum_constrained(&spec, &[a.clone(), b.clone()], 2.0).unwrap().energy;
    let e2 = solve_continuum_constrained(&spec, &[b, a], 2.0).unwrap().energy;
    assert!((e1 - e2).abs() <= 1e-10 * e1);
}

#[test]
fn green_function_has_zero_mean() {
    let grid = PeriodicGrid::new(16, 2).unwrap();
    let spec = continuum_spectrum(grid, SpectrumVariant::FiniteDifference);
    let g = fractional_green(&spec, 1.5).unwrap();
    assert!(g.mean().abs() < 1e-12 * g.values[0].abs());
    assert!(continuum_energy(&spec, &g, 1.5).unwrap() > 0.0);
}

#[test]
fn tl2_grows_under_value_inflation() {
    let mut rng = rng(16);
    for _ in 0..30 {
        let n = rng.random_range(1..=8);
        let a = random_pair(&mut rng, n, 2);
        let b = random_pair(&mut rng, n, 2);
        let inflate = |p: &EmpiricalPair, c: f64| EmpiricalPair::new(p.points().clone(), p.values().iter().map(|v| c * v).collect()).unwrap();
        let base = tl2_distance(&a, &b).unwrap();
        let more = tl2_distance(&inflate(&a, 3.0), &inflate(&b, 3.0)).unwrap();
        assert!(more >= base - 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn solution_interpolates_labels(seed in any::<u64>(), n in 6usize..30, s in 0.5f64..6.0) {
        let mut rng = rng(seed);
        let (_, g) = connected_instance(&mut rng, n, 2);
        let spec = eigendecompose(&graph_laplacian(&g)).unwrap();
        let cons = random_constraints(&mut rng, n, 4);
        let u = solve_constrained(&spec, &cons, s).unwrap();
        for &(i, l) in cons.entries() {
            prop_assert!((u.values[i] - l).abs() < 1e-9);
        }
    }

    #[test]
    fn laplacian_annihilates_constants(seed in any::<u64>(), n in 2usize..40, c in -10.0f64..10.0) {
        let mut rng = rng(seed);
        let (_, g) = any_instance(&mut rng, n, 2);
        let lap = graph_laplacian(&g);
        let v = &lap * DVector::from_element(n, c);
        prop_assert!(v.amax() <= 1e-9 * lap.amax().max(1.0) * c.abs().max(1.0));
    }

    #[test]
    fn tl2_is_symmetric(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = rng(seed);
        let a = random_pair(&mut rng, n, 2);
        let b = random_pair(&mut rng, n, 2);
        prop_assert!((tl2_distance(&a, &b).unwrap() - tl2_distance(&b, &a).unwrap()).abs() <= 1e-12);
    }
}
