//! Quench examples and trajectory invariants on the 220-site chain.

use nhssh_core::dynamics::{run_quench_with, time_grid, EvolutionPath, QuenchOptions};
use nhssh_core::{
    build_hamiltonian, eigendecompose, evolve_propagator, evolve_spectral, initial_edge_state,
    run_quench, site_density, Complex64, EdgeSide, LatticeConfig, QuenchSpec, StateVector,
};

fn weight(psi: &StateVector, sites: std::ops::RangeInclusive<usize>) -> f64 {
    sites.map(|s| psi.amplitudes()[s - 1].norm_sqr()).sum()
}

#[test]
fn pt_oracle_equivalence() {
    let initial = build_hamiltonian(&LatticeConfig::flagship()).unwrap();
    let h = build_hamiltonian(&LatticeConfig::flagship().with_v(1.5)).unwrap();
    let es = eigendecompose(&h).unwrap();
    let times = time_grid(240.0, 0.5).unwrap();
    let psi0 = initial_edge_state(&initial, EdgeSide::Right).unwrap();
    let a = evolve_spectral(&es, &psi0, &times).unwrap();
    let b = evolve_propagator(&h, &psi0, &times).unwrap();
    assert!(a.max_density_deviation(&b) < 1e-8);
}

#[test]
fn broken_placement_oracle_equivalence() {
    let cfg = LatticeConfig::flagship().with_region(107, 110, 0.75, 0.75);
    let initial = build_hamiltonian(&cfg).unwrap();
    let h = build_hamiltonian(&cfg.with_v(1.125)).unwrap();
    let es = eigendecompose(&h).unwrap();
    let times = time_grid(240.0, 0.5).unwrap();
    let psi0 = initial_edge_state(&initial, EdgeSide::Left).unwrap();
    let a = evolve_spectral(&es, &psi0, &times).unwrap();
    let b = evolve_propagator(&h, &psi0, &times).unwrap();
    assert!(a.max_density_deviation(&b) < 1e-8);
}

#[test]
fn pure_ssh_light_cone_reflects() {
    let spec = QuenchSpec::new(
        &LatticeConfig::ssh(110, 0.25, 1.0),
        0.25,
        1.5,
        EdgeSide::Left,
        time_grid(400.0, 1.0).unwrap(),
    );
    let traj = run_quench(&spec).unwrap();
    assert!(traj.norms_sqr().iter().all(|n| (n - 1.0).abs() < 1e-8));
    // the front reaches the far quarter, then the weight comes back
    let far: Vec<f64> = traj.states().iter().map(|s| weight(s, 166..=220)).collect();
    let peak = far.iter().cloned().fold(0.0, f64::max);
    let peak_at = far.iter().position(|&x| x == peak).unwrap();
    assert!(far[0] < 1e-12 && peak > 0.5, "{peak}");
    assert!(far[peak_at..].iter().any(|&x| x < 0.1));
    let near: Vec<f64> = traj.states().iter().map(|s| weight(s, 1..=55)).collect();
    // scipy reference: the left quarter holds 0.777 again at t = 240
    assert!(near[peak_at] < 0.1);
    assert!(near[peak_at..].iter().cloned().fold(0.0, f64::max) > 0.7);
}

fn max_density_drift(template: &LatticeConfig, t_max: f64) -> f64 {
    let spec = QuenchSpec::new(
        template,
        0.25,
        0.25,
        EdgeSide::Left,
        time_grid(t_max, 1.0).unwrap(),
    );
    let traj = run_quench(&spec).unwrap();
    let d0 = site_density(&traj.states()[0]);
    traj.states()
        .iter()
        .flat_map(|s| {
            site_density(s)
                .into_iter()
                .zip(d0.clone())
                .map(|(a, b)| (a - b).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn quench_onto_initial_is_static() {
    assert!(max_density_drift(&LatticeConfig::ssh(110, 0.25, 1.0), 240.0) < 1e-8);
    assert!(
        max_density_drift(
            &LatticeConfig::flagship().with_region(109, 112, 0.75, 0.0),
            240.0
        ) < 1e-8
    );
    // the flagship at v/w = 0.25 has gain modes with Im E up to 0.459, so the
    // 1e-16 rounding overlap with them grows as exp(0.459 t); stationarity
    // holds until that reaches 1e-8 near t = 40
    assert!(max_density_drift(&LatticeConfig::flagship(), 20.0) < 1e-8);
}

#[test]
fn right_edge_wave_is_reflected_by_block() {
    // scipy expm reference at t = 110: weight on sites 166-220 is 9.40 with
    // the block and 0.0033 without it
    let times = vec![0.0, 110.0];
    let with_block = QuenchSpec::new(
        &LatticeConfig::flagship(),
        0.25,
        1.125,
        EdgeSide::Right,
        times.clone(),
    );
    let without = QuenchSpec::new(
        &LatticeConfig::ssh(110, 0.25, 1.0),
        0.25,
        1.125,
        EdgeSide::Right,
        times,
    );
    let a = weight(&run_quench(&with_block).unwrap().states()[1], 166..=220);
    let b = weight(&run_quench(&without).unwrap().states()[1], 166..=220);
    assert!((a - 9.399_977_387).abs() < 1e-6, "{a}");
    assert!(b < 0.01, "{b}");
}

#[test]
fn pure_ssh_mirror_symmetry() {
    let template = LatticeConfig::ssh(110, 0.25, 1.0);
    let times = time_grid(200.0, 5.0).unwrap();
    let left = run_quench(&QuenchSpec::new(
        &template,
        0.25,
        1.5,
        EdgeSide::Left,
        times.clone(),
    ))
    .unwrap();
    let right = run_quench(&QuenchSpec::new(
        &template,
        0.25,
        1.5,
        EdgeSide::Right,
        times,
    ))
    .unwrap();
    for (l, r) in left.states().iter().zip(right.states()) {
        let dl = site_density(l);
        let dr = site_density(&r.reversed());
        let dev = dl
            .iter()
            .zip(&dr)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(dev < 1e-8);
    }
}

#[test]
fn evolution_is_linear() {
    let initial = build_hamiltonian(&LatticeConfig::flagship()).unwrap();
    let h = build_hamiltonian(&LatticeConfig::flagship().with_v(1.125)).unwrap();
    let es = eigendecompose(&h).unwrap();
    let psi0 = initial_edge_state(&initial, EdgeSide::Left).unwrap();
    let a = Complex64::new(-0.7, 1.9);
    let times = [0.0, 33.0, 120.0];
    let base = evolve_spectral(&es, &psi0, &times).unwrap();
    let scaled = evolve_spectral(&es, &psi0.scaled(a), &times).unwrap();
    for (x, y) in base.states().iter().zip(scaled.states()) {
        let scale = x.norm().max(1.0);
        for (p, q) in x.amplitudes().iter().zip(y.amplitudes()) {
            assert!((p * a - q).norm() < 1e-12 * scale);
        }
    }
}

#[test]
fn initial_sample_is_the_edge_state() {
    let spec = QuenchSpec::new(
        &LatticeConfig::flagship(),
        0.25,
        1.5,
        EdgeSide::Left,
        vec![0.0, 1.0],
    );
    let traj = run_quench(&spec).unwrap();
    let psi0 = initial_edge_state(
        &build_hamiltonian(&LatticeConfig::flagship()).unwrap(),
        EdgeSide::Left,
    )
    .unwrap();
    let d = site_density(&traj.states()[0]);
    let d0 = site_density(&psi0);
    assert!(d.iter().zip(&d0).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn near_defective_final_falls_back_to_propagator() {
    // a ceiling below any attainable condition forces the fallback
    let spec = QuenchSpec::new(
        &LatticeConfig::flagship(),
        0.25,
        1.5,
        EdgeSide::Left,
        time_grid(20.0, 0.5).unwrap(),
    );
    let strict = QuenchOptions {
        condition_ceiling: 1.0,
        ..QuenchOptions::default()
    };
    let (fallback, path) = run_quench_with(&spec, &strict).unwrap();
    assert_eq!(path, EvolutionPath::Propagator);
    let (spectral, path) = run_quench_with(&spec, &QuenchOptions::default()).unwrap();
    assert_eq!(path, EvolutionPath::Spectral);
    assert!(fallback.max_density_deviation(&spectral) < 1e-8);
}

#[test]
fn pure_initial_option_changes_only_the_start() {
    let times = vec![0.0, 10.0];
    let embedded = QuenchSpec::new(
        &LatticeConfig::flagship(),
        0.25,
        1.5,
        EdgeSide::Left,
        times.clone(),
    );
    let pure = embedded.clone().with_pure_initial();
    assert!(pure.validate().is_ok());
    assert_eq!(pure.final_config, embedded.final_config);
    assert_eq!(pure.initial.region, None);
    // the left edge state barely feels a block 108 sites away
    let a = run_quench(&embedded).unwrap();
    let b = run_quench(&pure).unwrap();
    assert!(a.max_density_deviation(&b) < 1e-10);
}
