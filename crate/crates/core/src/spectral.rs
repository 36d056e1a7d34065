//! Biorthogonal eigendecomposition, parameter sweeps and exceptional-point
//! location.
//!
//! Right eigenvectors come from a dense complex eigensolver. Left vectors are
//! the conjugate-transposed rows of the inverse right-vector matrix, so
//! `<phi_m|psi_n> = delta_mn` and `sum_n |psi_n><phi_n| = I` hold by
//! construction; the conditioning of the right-vector matrix is monitored
//! instead.

use std::cmp::Ordering;

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, MatRef};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{build_hamiltonian, HamiltonianMatrix, LatticeConfig};
use crate::observables::{self, Side};

/// Default ceiling on the right-vector condition number.
pub const DEFAULT_CONDITION_CEILING: f64 = 1e10;
/// Default tolerance on `max |Im E|` for coalescence, units of `w`.
pub const DEFAULT_EP_TOL: f64 = 1e-6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub struct Eigensystem {
    eigenvalues: Vec<Complex64>,
    right: Mat<Complex64>,
    left: Mat<Complex64>,
    completeness_residual: f64,
    biorthogonality_residual: f64,
    eigen_residual: f64,
    condition: f64,
    condition_ceiling: f64,
    near_defective: bool,
}

static SEQUENTIAL: std::sync::Once = std::sync::Once::new();

impl Eigensystem {
    /// Decomposes `h` without failing on conditioning; an eigensystem whose
    /// condition number exceeds `condition_ceiling` is flagged instead.
    pub fn compute(h: &HamiltonianMatrix, condition_ceiling: f64) -> Result<Self> {
        let n = h.dim();
        if n == 0 {
            return Err(Error::InvalidInput("empty matrix".into()));
        }
        if !h.is_finite() {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        // parallelism lives at the sweep level; keeps decompositions bitwise reproducible
        SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
        let hermitian = h.is_hermitian();
        let (values, vectors) = if n == 2 {
            two_by_two(h)
        } else if hermitian {
            let evd = h
                .as_mat()
                .self_adjoint_eigen(faer::Side::Lower)
                .map_err(|_| Error::EigenSolver)?;
            let values = (0..n).map(|i| Complex64::new(evd.S()[i].re, 0.0)).collect();
            (values, evd.U().to_owned())
        } else {
            let evd = h.as_mat().eigen().map_err(|_| Error::EigenSolver)?;
            let values = (0..n).map(|i| evd.S()[i]).collect();
            (values, evd.U().to_owned())
        };

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| cmp_eigenvalues(values[a], values[b]));
        let eigenvalues: Vec<Complex64> = order.iter().map(|&k| values[k]).collect();
        let mut right = Mat::from_fn(n, n, |i, j| vectors[(i, order[j])]);
        for j in 0..n {
            normalize_column(&mut right, j);
        }

        let inverse = if hermitian && n != 2 {
            right.adjoint().to_owned()
        } else {
            right.partial_piv_lu().inverse()
        };
        let left = inverse.adjoint().to_owned();

        let condition = {
            let c = norm_one(right.as_ref()) * norm_one(inverse.as_ref());
            if c.is_finite() {
                c
            } else {
                f64::INFINITY
            }
        };
        let near_defective = condition_ceiling.is_nan() || condition > condition_ceiling;

        let eye = Mat::<Complex64>::identity(n, n);
        let completeness = &right * left.adjoint() - &eye;
        let biorth = left.adjoint() * &right - &eye;
        let completeness_residual = nan_to_inf(completeness.norm_l2());
        let biorthogonality_residual = nan_to_inf(max_abs(biorth.as_ref()));

        let h_scale = h.norm_one().max(f64::MIN_POSITIVE);
        let hr = h.as_mat() * &right;
        let mut eigen_residual = 0.0f64;
        for j in 0..n {
            let mut r = 0.0;
            for i in 0..n {
                r += (hr[(i, j)] - eigenvalues[j] * right[(i, j)]).norm_sqr();
            }
            eigen_residual = eigen_residual.max(r.sqrt() / h_scale);
        }

        Ok(Self {
            eigenvalues,
            right,
            left,
            completeness_residual,
            biorthogonality_residual,
            eigen_residual,
            condition,
            condition_ceiling,
            near_defective,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues sorted by real part, ties by imaginary part.
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// Unit-norm right eigenvector `|psi_n>`.
    pub fn right_vector(&self, n: usize) -> Vec<Complex64> {
        self.right.col(n).iter().copied().collect()
    }

    /// Left eigenvector `|phi_n>` paired so that `<phi_n|psi_n> = 1`.
    pub fn left_vector(&self, n: usize) -> Vec<Complex64> {
        self.left.col(n).iter().copied().collect()
    }

    pub fn right_vectors(&self) -> MatRef<'_, Complex64> {
        self.right.as_ref()
    }

    pub fn left_vectors(&self) -> MatRef<'_, Complex64> {
        self.left.as_ref()
    }

    /// Frobenius norm of `sum_n |psi_n><phi_n| - I`, an upper bound on the
    /// operator-norm residual.
    pub fn completeness_residual(&self) -> f64 {
        self.completeness_residual
    }

    /// `max_mn |<phi_m|psi_n> - delta_mn|`.
    pub fn biorthogonality_residual(&self) -> f64 {
        self.biorthogonality_residual
    }

    /// `max_n ||H psi_n - E_n psi_n|| / ||H||_1`.
    pub fn eigen_residual(&self) -> f64 {
        self.eigen_residual
    }

    /// 1-norm condition number of the right-vector matrix.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn condition_ceiling(&self) -> f64 {
        self.condition_ceiling
    }

    pub fn is_near_defective(&self) -> bool {
        self.near_defective
    }

    /// Projections `<phi_n|psi>` of a state onto the right eigenbasis.
    pub fn coefficients(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        assert_eq!(psi.len(), n);
        (0..n)
            .map(|k| {
                self.left
                    .col(k)
                    .iter()
                    .zip(psi)
                    .map(|(l, x)| l.conj() * x)
                    .sum()
            })
            .collect()
    }
}

/// Closed-form eigenpairs of a 2x2 matrix.
///
/// A backward-stable iterative solver loses half the digits at an exact
/// coalescence; the quadratic formula on the entries does not.
fn two_by_two(h: &HamiltonianMatrix) -> (Vec<Complex64>, Mat<Complex64>) {
    let (a, b, c, d) = (h.entry(0, 0), h.entry(0, 1), h.entry(1, 0), h.entry(1, 1));
    if b == ZERO && c == ZERO {
        return (vec![a, d], Mat::identity(2, 2));
    }
    let mean = (a + d) * 0.5;
    let half_diff = (a - d) * 0.5;
    let root = (half_diff * half_diff + b * c).sqrt();
    let values = vec![mean - root, mean + root];
    let mut vectors = Mat::zeros(2, 2);
    for (j, &e) in values.iter().enumerate() {
        let (x, y) = if b != ZERO { (b, e - a) } else { (e - d, c) };
        vectors[(0, j)] = x;
        vectors[(1, j)] = y;
    }
    (values, vectors)
}

fn cmp_eigenvalues(a: Complex64, b: Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Unit 2-norm, largest-modulus component real positive.
fn normalize_column(m: &mut Mat<Complex64>, j: usize) {
    let n = m.nrows();
    let norm = (0..n).map(|i| m[(i, j)].norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return;
    }
    let mut pivot = 0;
    for i in 1..n {
        if m[(i, j)].norm() > m[(pivot, j)].norm() {
            pivot = i;
        }
    }
    let phase = m[(pivot, j)].conj() / m[(pivot, j)].norm();
    for i in 0..n {
        m[(i, j)] = m[(i, j)] * phase / norm;
    }
}

fn norm_one(m: MatRef<'_, Complex64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, |acc, x| if x.is_nan() { f64::NAN } else { acc.max(x) })
}

fn max_abs(m: MatRef<'_, Complex64>) -> f64 {
    let mut out = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let x = m[(i, j)].norm();
            if x.is_nan() {
                return f64::NAN;
            }
            out = out.max(x);
        }
    }
    out
}

fn nan_to_inf(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x
    }
}

/// Decomposes `h`, failing with [`Error::NearDefective`] when the right-vector
/// condition number exceeds [`DEFAULT_CONDITION_CEILING`].
pub fn eigendecompose(h: &HamiltonianMatrix) -> Result<Eigensystem> {
    eigendecompose_with_ceiling(h, DEFAULT_CONDITION_CEILING)
}

pub fn eigendecompose_with_ceiling(h: &HamiltonianMatrix, ceiling: f64) -> Result<Eigensystem> {
    let es = Eigensystem::compute(h, ceiling)?;
    if es.is_near_defective() {
        return Err(Error::NearDefective {
            condition: es.condition(),
            ceiling,
        });
    }
    Ok(es)
}

/// One eigenvalue at one grid point of a `v/w` sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSweepRow {
    pub v_over_w: f64,
    pub index: usize,
    pub re_e: f64,
    pub im_e: f64,
    /// Center of mass of the unit-normalized right eigenvector, site units.
    pub com: f64,
    pub side: Side,
    /// Set when the grid point's eigenvector matrix is near defective.
    pub near_defective: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub condition_ceiling: f64,
    /// Center classification threshold in site units.
    pub threshold: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            condition_ceiling: DEFAULT_CONDITION_CEILING,
            threshold: observables::DEFAULT_SIDE_THRESHOLD,
        }
    }
}

/// Evenly spaced grid `start, start + step, ..` up to `end` inclusive, with
/// points rounded to 1e-9 so decimal grids land on their decimal values.
pub fn linear_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && end.is_finite() && step.is_finite()) || step <= 0.0 || end < start {
        return Err(Error::InvalidGrid(format!(
            "start {start}, end {end}, step {step}"
        )));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty grid".into()));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidGrid("non-finite grid point".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(
            "grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Diagonalises the template at every `v` of `v_grid` (in units of the
/// template's `w`) and emits one row per eigenvalue.
///
/// Grid points are independent and evaluated in parallel; output order is by
/// grid point, then eigenvalue index.
pub fn spectrum_sweep(
    template: &LatticeConfig,
    v_grid: &[f64],
    options: &SweepOptions,
) -> Result<Vec<SpectrumSweepRow>> {
    check_grid(v_grid)?;
    template.validate()?;
    let per_point: Vec<Result<Vec<SpectrumSweepRow>>> = v_grid
        .par_iter()
        .map(|&v_over_w| sweep_point(template, v_over_w, options))
        .collect();
    let mut rows = Vec::with_capacity(v_grid.len() * template.dim());
    for r in per_point {
        rows.extend(r?);
    }
    Ok(rows)
}

fn sweep_point(
    template: &LatticeConfig,
    v_over_w: f64,
    options: &SweepOptions,
) -> Result<Vec<SpectrumSweepRow>> {
    let config = template.with_v(v_over_w * template.w);
    let h = build_hamiltonian(&config)?;
    let es = Eigensystem::compute(&h, options.condition_ceiling)?;
    let center = config.reference_center();
    Ok(es
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(index, e)| {
            let com = observables::com_of(es.right_vectors().col(index).iter().copied())
                .unwrap_or(f64::NAN);
            SpectrumSweepRow {
                v_over_w,
                index,
                re_e: e.re,
                im_e: e.im,
                com,
                side: observables::classify_side(com, center, options.threshold),
                near_defective: es.is_near_defective(),
            }
        })
        .collect())
}

/// Groups rows into contiguous runs sharing `v_over_w`.
fn grid_points(sweep: &[SpectrumSweepRow]) -> Vec<&[SpectrumSweepRow]> {
    sweep.chunk_by(|a, b| a.v_over_w == b.v_over_w).collect()
}

/// Outcome of scanning a sweep for coalescence of the imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpLocation {
    /// First grid point where all imaginary parts fall below tolerance.
    At { v_star: f64 },
    /// Already real at the first grid point.
    AlwaysReal,
    /// Never real on the swept range.
    NeverMerges,
}

/// Scans in increasing `v/w` for the first grid point with `max |Im E| < tol`.
pub fn ep_locate(sweep: &[SpectrumSweepRow], tol: f64) -> Result<EpLocation> {
    if sweep.is_empty() {
        return Err(Error::EmptySweep);
    }
    let points = grid_points(sweep);
    if points
        .windows(2)
        .any(|w| w[1][0].v_over_w <= w[0][0].v_over_w)
    {
        return Err(Error::InvalidGrid("sweep grid must be increasing".into()));
    }
    for (k, rows) in points.iter().enumerate() {
        let max_im = rows.iter().map(|r| r.im_e.abs()).fold(0.0, f64::max);
        if max_im < tol {
            return Ok(if k == 0 {
                EpLocation::AlwaysReal
            } else {
                EpLocation::At {
                    v_star: rows[0].v_over_w,
                }
            });
        }
    }
    Ok(EpLocation::NeverMerges)
}

/// Labels every row with a branch id by greedy nearest-neighbour matching of
/// consecutive grid points in the complex plane.
///
/// At the first grid point the branch id is the eigenvalue index. At each
/// later step the globally closest (previous, new) pair is matched first;
/// ties go to the smaller previous index, then the smaller new index. The
/// returned labels are aligned with `sweep`.
pub fn match_branches(sweep: &[SpectrumSweepRow]) -> Result<Vec<usize>> {
    if sweep.is_empty() {
        return Ok(Vec::new());
    }
    let points = grid_points(sweep);
    let count = points[0].len();
    if points.iter().any(|p| p.len() != count) {
        return Err(Error::InvalidInput(
            "branch matching needs the same eigenvalue count at every grid point".into(),
        ));
    }
    let mut labels = Vec::with_capacity(sweep.len());
    let mut prev_labels: Vec<usize> = (0..count).collect();
    labels.extend_from_slice(&prev_labels);
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(count * count);
    for w in points.windows(2) {
        let (prev, next) = (w[0], w[1]);
        pairs.clear();
        for (i, p) in prev.iter().enumerate() {
            for (j, q) in next.iter().enumerate() {
                let d = (p.re_e - q.re_e).hypot(p.im_e - q.im_e);
                pairs.push((d, i, j));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut prev_used = vec![false; count];
        let mut next_label = vec![usize::MAX; count];
        let mut matched = 0;
        for &(_, i, j) in &pairs {
            if prev_used[i] || next_label[j] != usize::MAX {
                continue;
            }
            prev_used[i] = true;
            next_label[j] = prev_labels[i];
            matched += 1;
            if matched == count {
                break;
            }
        }
        labels.extend_from_slice(&next_label);
        prev_labels = next_label;
    }
    Ok(labels)
}

/// The two eigenvalues closest to zero and their separation from the rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroModeReport {
    /// Larger modulus of the two smallest-|E| eigenvalues.
    pub min_abs_e: f64,
    /// Modulus of the third-smallest eigenvalue minus `min_abs_e`.
    pub gap_to_bulk: f64,
    /// Indices of the pair in the eigensystem's sort order, ascending.
    pub indices: (usize, usize),
}

pub fn zero_mode_report(es: &Eigensystem) -> Result<ZeroModeReport> {
    if es.dim() < 4 {
        return Err(Error::InvalidInput(format!(
            "zero-mode report needs dimension >= 4, got {}",
            es.dim()
        )));
    }
    let mut by_modulus: Vec<(f64, usize)> = es
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(i, e)| (e.norm(), i))
        .collect();
    by_modulus.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let (a, b) = (by_modulus[0].1, by_modulus[1].1);
    let min_abs_e = by_modulus[1].0;
    Ok(ZeroModeReport {
        min_abs_e,
        gap_to_bulk: by_modulus[2].0 - min_abs_e,
        indices: (a.min(b), a.max(b)),
    })
}
