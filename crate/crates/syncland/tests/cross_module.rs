use syncland::certificates::kuramoto_sync_check;
use syncland::circulant::finite_size_stability;
use syncland::kuramoto::{classify_equilibrium, random_phases, simulate, twisted_state, Classification, SimOptions};
use syncland::models::{circulant_knn, random_regular, Family, GroundTruth, ModelSpec};
use syncland::optimizer::{min_curvature_direction, riemannian_gradient, solve_from, SolveOptions};
use syncland::problem::{SignVector, SphereConfig, SymmetricCost};

fn all_starts_synchronize(a: &SymmetricCost, seed: u64) -> bool {
    let opts = SimOptions {
        stop_on_sync: true,
        ..SimOptions::default()
    };
    (0..20).all(|s| {
        let theta0 = random_phases(a.n(), seed + s).unwrap();
        simulate(a, &theta0, &opts).unwrap().synchronized
    })
}

#[test]
fn sync_certificate_implies_simulated_synchronization() {
    let dense_er = ModelSpec {
        family: Family::CensoredBlock { p: 0.8, delta: 1.0 },
        n: 50,
        seed: 12,
        ground_truth: GroundTruth::AllOnes,
    }
    .generate()
    .unwrap()
    .cost;
    let graphs = [circulant_knn(50, 20).unwrap(), random_regular(60, 40, 4).unwrap(), dense_er];
    let mut certified = 0;
    for (g, a) in graphs.iter().enumerate() {
        if kuramoto_sync_check(a).unwrap().synchronizing {
            certified += 1;
            assert!(all_starts_synchronize(a, 100 * g as u64), "graph {g}");
        }
    }
    assert_eq!(certified, graphs.len());
}

#[test]
fn stability_prediction_matches_simulator_classification() {
    for n in [60, 80, 100] {
        for k in (n / 5..n / 2).step_by(4) {
            let record = finite_size_stability(n, k).unwrap();
            let a = circulant_knn(n, k).unwrap();
            let eq = classify_equilibrium(&a, &twisted_state(n, 1).unwrap(), 1e-8).unwrap();
            let stable = eq.classification == Classification::StableNonsync;
            assert_eq!(record.predicts_spurious, stable, "n={n} k={k}: {:?}", eq.classification);
            assert!((eq.hessian_min_eig - record.lambda2_twisted).abs() < 1e-8 * (2 * k + 1) as f64);
        }
    }
}

#[test]
fn planar_optimizer_curvature_equals_kuramoto_hessian() {
    for (n, k) in [(40, 10), (40, 12), (50, 20)] {
        let a = circulant_knn(n, k).unwrap();
        let theta = twisted_state(n, 1).unwrap();
        let y = SphereConfig::from_phases(&theta);
        assert!(riemannian_gradient(&a, &y).unwrap().amax() < 1e-10 * n as f64);
        let (curv, _) = min_curvature_direction(&a, &y, 200, 0).unwrap();
        let eq = classify_equilibrium(&a, &theta, 1e-8).unwrap();
        assert!((curv - eq.hessian_min_eig).abs() < 1e-8, "n={n} k={k}: {curv} vs {}", eq.hessian_min_eig);
    }
}

#[test]
fn stable_twisted_state_traps_the_solver_below_density_threshold() {
    let (n, k) = (40, 10);
    let a = circulant_knn(n, k).unwrap();
    let y0 = SphereConfig::from_phases(&twisted_state(n, 1).unwrap());
    let rep = solve_from(&a, y0, &SolveOptions::default(), Some(&SignVector::ones(n))).unwrap();
    assert!(rep.second_order_critical);
    assert_eq!(rep.recovered, Some(false));
    assert!(rep.min_hessian_curvature > 0.0);
}
