//! Edge-state preparation and post-quench evolution.
//!
//! Two independent evolution paths are provided: the biorthogonal spectral
//! sum `psi(t) = sum_n <phi_n|psi_0> e^{-i E_n t} |psi_n>` and a step
//! propagator built from the matrix exponential. The spectral path is used by
//! default; the propagator takes over when the eigenvector matrix is near
//! defective.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{build_hamiltonian, HamiltonianMatrix, LatticeConfig};
use crate::propagator;
use crate::spectral::{zero_mode_report, Eigensystem, DEFAULT_CONDITION_CEILING};

/// Default bound on the zero-mode pair modulus for an edge state to exist.
pub const DEFAULT_ZERO_MODE_TOL: f64 = 1e-3;
const MAX_HALVINGS: u32 = 20;

/// Complex amplitude per site, site `s` at index `s - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self::new(self.amplitudes.iter().map(|a| a * factor).collect())
    }

    /// Site order reversed, `psi'_s = psi_{2N+1-s}`.
    pub fn reversed(&self) -> Self {
        Self::new(self.amplitudes.iter().rev().copied().collect())
    }

    pub fn is_finite(&self) -> bool {
        self.amplitudes.iter().all(|a| a.is_finite())
    }
}

/// Which end of the chain an edge state is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeSide {
    Left,
    Right,
}

impl EdgeSide {
    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeSide::Left => "left",
            EdgeSide::Right => "right",
        }
    }
}

/// Sampled states of one evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<StateVector>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<StateVector>) -> Self {
        assert_eq!(times.len(), states.len());
        Self { times, states }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, |s| s.dim())
    }

    /// `rho(s, t) = |psi_s(t)|^2`, one row per sample time.
    pub fn densities(&self) -> Vec<Vec<f64>> {
        self.states
            .iter()
            .map(|s| s.amplitudes().iter().map(|a| a.norm_sqr()).collect())
            .collect()
    }

    pub fn norms_sqr(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.norm_sqr()).collect()
    }

    /// Largest `|rho_a(s, t) - rho_b(s, t)|` over all sites and samples.
    pub fn max_density_deviation(&self, other: &Trajectory) -> f64 {
        assert_eq!(self.times.len(), other.times.len());
        self.states
            .iter()
            .zip(&other.states)
            .flat_map(|(a, b)| {
                a.amplitudes()
                    .iter()
                    .zip(b.amplitudes())
                    .map(|(x, y)| (x.norm_sqr() - y.norm_sqr()).abs())
            })
            .fold(0.0, f64::max)
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidTimes("no sample times".into()));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidTimes("non-finite sample time".into()));
    }
    if times[0] < 0.0 {
        return Err(Error::InvalidTimes(format!(
            "first time {} is negative",
            times[0]
        )));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidTimes(
            "times must be strictly increasing".into(),
        ));
    }
    Ok(())
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Edge state of `h_initial` with the default zero-mode threshold.
pub fn initial_edge_state(h_initial: &HamiltonianMatrix, side: EdgeSide) -> Result<StateVector> {
    initial_edge_state_with(h_initial, side, DEFAULT_ZERO_MODE_TOL)
}

/// Unit vector in the span of the two near-zero eigenvectors with maximal
/// weight on the outermost cell of `side`.
///
/// The two zero modes of a long chain are numerically degenerate, so the raw
/// eigenvectors are an arbitrary mixture of the left and right edge states;
/// projecting onto the outermost cell picks one out deterministically. The
/// global phase makes the largest-modulus amplitude real and positive.
pub fn initial_edge_state_with(
    h_initial: &HamiltonianMatrix,
    side: EdgeSide,
    zero_mode_tol: f64,
) -> Result<StateVector> {
    let dim = h_initial.dim();
    let es = Eigensystem::compute(h_initial, f64::INFINITY)?;
    let report = zero_mode_report(&es)?;
    if report.min_abs_e.is_nan() || report.min_abs_e >= zero_mode_tol {
        return Err(Error::NoEdgeState {
            min_abs_e: report.min_abs_e,
            threshold: zero_mode_tol,
        });
    }

    // Gram-Schmidt on the pair
    let q0 = normalized(es.right_vector(report.indices.0))?;
    let mut q1 = es.right_vector(report.indices.1);
    let overlap: Complex64 = q0.iter().zip(&q1).map(|(a, b)| a.conj() * b).sum();
    for (x, a) in q1.iter_mut().zip(&q0) {
        *x -= overlap * a;
    }
    let q1 = normalized(q1).map_err(|_| {
        Error::InvalidInput("near-zero eigenvectors are not linearly independent".into())
    })?;

    let sites = match side {
        EdgeSide::Left => [0, 1],
        EdgeSide::Right => [dim - 2, dim - 1],
    };
    // weight on the outer cell as a 2x2 Hermitian form [[p, z], [z*, r]]
    let (mut p, mut r, mut z) = (0.0, 0.0, Complex64::new(0.0, 0.0));
    for &s in &sites {
        p += q0[s].norm_sqr();
        r += q1[s].norm_sqr();
        z += q0[s].conj() * q1[s];
    }
    let half_gap = (p - r) / 2.0;
    let top = (p + r) / 2.0 + (half_gap * half_gap + z.norm_sqr()).sqrt();
    // two equivalent forms of the top eigenvector; the larger one is well
    // conditioned when the pair is already split by edge
    let a = (z, Complex64::new(top - p, 0.0));
    let b = (Complex64::new(top - r, 0.0), z.conj());
    let size = |v: (Complex64, Complex64)| v.0.norm_sqr() + v.1.norm_sqr();
    let (c0, c1) = if z.norm() > 0.0 {
        if size(a) >= size(b) {
            a
        } else {
            b
        }
    } else if p >= r {
        (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    } else {
        (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))
    };
    let psi: Vec<Complex64> = q0.iter().zip(&q1).map(|(a, b)| c0 * a + c1 * b).collect();
    let psi = normalized(psi)?;
    Ok(StateVector::new(fix_phase(psi)))
}

fn normalized(mut v: Vec<Complex64>) -> Result<Vec<Complex64>> {
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if !norm.is_finite() || norm <= 1e-8 {
        return Err(Error::ZeroNorm);
    }
    for x in &mut v {
        *x /= norm;
    }
    Ok(v)
}

fn fix_phase(mut v: Vec<Complex64>) -> Vec<Complex64> {
    let mut pivot = 0;
    for i in 1..v.len() {
        if v[i].norm() > v[pivot].norm() {
            pivot = i;
        }
    }
    let m = v[pivot].norm();
    if m > 0.0 {
        let phase = v[pivot].conj() / m;
        for x in &mut v {
            *x *= phase;
        }
        v[pivot] = Complex64::new(v[pivot].re, 0.0);
    }
    v
}

/// Evaluates the biorthogonal spectral sum at each requested time.
pub fn evolve_spectral(es: &Eigensystem, psi0: &StateVector, times: &[f64]) -> Result<Trajectory> {
    if es.is_near_defective() {
        return Err(Error::NearDefective {
            condition: es.condition(),
            ceiling: es.condition_ceiling(),
        });
    }
    check_dim(es.dim(), psi0.dim())?;
    check_times(times)?;
    let n = es.dim();
    let coeffs = es.coefficients(psi0.amplitudes());
    let right = es.right_vectors();
    let energies = es.eigenvalues();
    let states = times
        .iter()
        .map(|&t| {
            let weights: Vec<Complex64> = coeffs
                .iter()
                .zip(energies)
                .map(|(c, e)| c * (Complex64::new(0.0, -t) * e).exp())
                .collect();
            let mut amps = vec![Complex64::new(0.0, 0.0); n];
            for (k, w) in weights.iter().enumerate() {
                for (i, a) in amps.iter_mut().enumerate() {
                    *a += right[(i, k)] * w;
                }
            }
            StateVector::new(amps)
        })
        .collect();
    Ok(Trajectory::new(times.to_vec(), states))
}

/// Steps `psi0` (the state at `t = 0`) through the sample times with exact
/// step propagators, one matrix exponential per distinct step length.
pub fn evolve_propagator(
    h: &HamiltonianMatrix,
    psi0: &StateVector,
    times: &[f64],
) -> Result<Trajectory> {
    check_dim(h.dim(), psi0.dim())?;
    check_times(times)?;
    let mut cache: HashMap<u64, (faer::Mat<Complex64>, usize)> = HashMap::new();
    let mut current = psi0.amplitudes().to_vec();
    let mut last = 0.0;
    let mut states = Vec::with_capacity(times.len());
    for &t in times {
        let dt = t - last;
        if dt > 0.0 {
            let (p, repeats) = match cache.entry(dt.to_bits()) {
                std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(propagator::split_step(h, dt, MAX_HALVINGS)?)
                }
            };
            for _ in 0..*repeats {
                current = propagator::apply(p, &current);
            }
        }
        states.push(StateVector::new(current.clone()));
        last = t;
    }
    Ok(Trajectory::new(times.to_vec(), states))
}

/// A sudden change of `v` with the state held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchSpec {
    pub initial: LatticeConfig,
    pub final_config: LatticeConfig,
    pub side: EdgeSide,
    pub times: Vec<f64>,
}

impl QuenchSpec {
    /// Quench of `template` from `v_initial` to `v_final` (units of `w`).
    pub fn new(
        template: &LatticeConfig,
        v_initial: f64,
        v_final: f64,
        side: EdgeSide,
        times: Vec<f64>,
    ) -> Self {
        Self {
            initial: template.with_v(v_initial * template.w),
            final_config: template.with_v(v_final * template.w),
            side,
            times,
        }
    }

    /// Drops the potential block from the initial Hamiltonian only.
    pub fn with_pure_initial(mut self) -> Self {
        self.initial = self.initial.without_region();
        self
    }

    /// Both configurations describe the same chain: equal size and `w`, and
    /// the initial one carries either the same block or none.
    pub fn validate(&self) -> Result<()> {
        self.initial.validate()?;
        self.final_config.validate()?;
        if self.initial.n_cells != self.final_config.n_cells {
            return Err(Error::QuenchMismatch("n_cells"));
        }
        if self.initial.w != self.final_config.w {
            return Err(Error::QuenchMismatch("w"));
        }
        if let Some(region) = self.initial.region {
            if Some(region) != self.final_config.region
                || self.initial.u_re != self.final_config.u_re
                || self.initial.u_im != self.final_config.u_im
            {
                return Err(Error::QuenchMismatch("region"));
            }
        }
        check_times(&self.times)
    }
}

/// Which evolution path produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvolutionPath {
    Spectral,
    Propagator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuenchOptions {
    pub condition_ceiling: f64,
    pub zero_mode_tol: f64,
}

impl Default for QuenchOptions {
    fn default() -> Self {
        Self {
            condition_ceiling: DEFAULT_CONDITION_CEILING,
            zero_mode_tol: DEFAULT_ZERO_MODE_TOL,
        }
    }
}

pub fn run_quench(spec: &QuenchSpec) -> Result<Trajectory> {
    run_quench_with(spec, &QuenchOptions::default()).map(|(traj, _)| traj)
}

/// Prepares the edge state of the initial Hamiltonian and evolves it under
/// the final one, falling back to the propagator when the final eigensystem
/// is near defective.
pub fn run_quench_with(
    spec: &QuenchSpec,
    options: &QuenchOptions,
) -> Result<(Trajectory, EvolutionPath)> {
    spec.validate()?;
    let h_initial = build_hamiltonian(&spec.initial)?;
    let h_final = build_hamiltonian(&spec.final_config)?;
    let psi0 = initial_edge_state_with(&h_initial, spec.side, options.zero_mode_tol)?;
    let es = Eigensystem::compute(&h_final, options.condition_ceiling)?;
    if !es.is_near_defective() {
        let traj = evolve_spectral(&es, &psi0, &spec.times)?;
        if traj.states().iter().all(StateVector::is_finite) {
            return Ok((traj, EvolutionPath::Spectral));
        }
    }
    let traj = evolve_propagator(&h_final, &psi0, &spec.times)?;
    Ok((traj, EvolutionPath::Propagator))
}

/// Uniform grid `0, dt, 2 dt, .., t_max` computed as `k * dt`.
pub fn time_grid(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(t_max.is_finite() && dt.is_finite()) || dt <= 0.0 || t_max < 0.0 {
        return Err(Error::InvalidTimes(format!("t_max {t_max}, dt {dt}")));
    }
    let steps = (t_max / dt + 1e-9).floor() as usize;
    Ok((0..=steps).map(|k| k as f64 * dt).collect())
}
