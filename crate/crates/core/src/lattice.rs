//! Chain configurations and the embedded non-Hermitian SSH Hamiltonian.
//!
//! Sites are numbered from 1 in configurations (site `2n - 1` is sublattice A
//! of cell `n`, site `2n` is sublattice B) and from 0 in matrix indices.

use faer::Mat;
use num_complex::Complex64;

use crate::dynamics::StateVector;
use crate::error::{Error, Result};

/// Inclusive range of sites carrying the complex on-site potentials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub start: usize,
    pub end: usize,
}

impl Region {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, site: usize) -> bool {
        (self.start..=self.end).contains(&site)
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }

    /// Midpoint of the block in site units, `(start + end) / 2`.
    pub fn midpoint(&self) -> f64 {
        (self.start + self.end) as f64 / 2.0
    }
}

/// Physical specification of one chain instance.
///
/// Energies are in units of the intercell hopping `w`. A-sublattice sites in
/// the region receive `u = u_re - i u_im`, B-sublattice sites `u* = u_re + i u_im`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeConfig {
    pub n_cells: usize,
    pub v: f64,
    pub w: f64,
    pub region: Option<Region>,
    pub u_re: f64,
    pub u_im: f64,
}

impl LatticeConfig {
    /// Pure SSH chain, no potential block.
    pub fn ssh(n_cells: usize, v: f64, w: f64) -> Self {
        Self {
            n_cells,
            v,
            w,
            region: None,
            u_re: 0.0,
            u_im: 0.0,
        }
    }

    /// 220 sites, pairs `(0.75, 0.75)` on sites 109-112, `v/w = 0.25`.
    pub fn flagship() -> Self {
        Self::ssh(110, 0.25, 1.0).with_region(109, 112, 0.75, 0.75)
    }

    pub fn with_region(mut self, start: usize, end: usize, u_re: f64, u_im: f64) -> Self {
        self.region = Some(Region::new(start, end));
        self.u_re = u_re;
        self.u_im = u_im;
        self
    }

    pub fn with_v(mut self, v: f64) -> Self {
        self.v = v;
        self
    }

    pub fn without_region(mut self) -> Self {
        self.region = None;
        self
    }

    /// Number of sites, `2N`.
    pub fn dim(&self) -> usize {
        2 * self.n_cells
    }

    /// Reference point for left/right classification: the block midpoint,
    /// or the chain midpoint `(2N + 1) / 2` without a block.
    pub fn reference_center(&self) -> f64 {
        match self.region {
            Some(r) => r.midpoint(),
            None => (self.dim() + 1) as f64 / 2.0,
        }
    }

    /// On-site potential of `site` (1-based); zero outside the block.
    pub fn potential(&self, site: usize) -> Complex64 {
        match self.region {
            Some(r) if r.contains(site) => {
                if site % 2 == 1 {
                    Complex64::new(self.u_re, -self.u_im)
                } else {
                    Complex64::new(self.u_re, self.u_im)
                }
            }
            _ => Complex64::new(0.0, 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cells < 1 {
            return Err(invalid("n_cells", "must be at least 1"));
        }
        if !(self.v.is_finite() && self.v >= 0.0) {
            return Err(invalid(
                "v",
                format!("must be finite and >= 0, got {}", self.v),
            ));
        }
        if !(self.w.is_finite() && self.w > 0.0) {
            return Err(invalid(
                "w",
                format!("must be finite and > 0, got {}", self.w),
            ));
        }
        if !self.u_re.is_finite() {
            return Err(invalid("u_re", "must be finite"));
        }
        if !self.u_im.is_finite() {
            return Err(invalid("u_im", "must be finite"));
        }
        if let Some(r) = self.region {
            let dim = self.dim();
            if r.start < 1 || r.start > dim {
                return Err(invalid(
                    "region_start",
                    format!("{} outside sites 1..={dim}", r.start),
                ));
            }
            if r.end < r.start || r.end > dim {
                return Err(invalid(
                    "region_end",
                    format!("{} outside sites {}..={dim}", r.end, r.start),
                ));
            }
        }
        Ok(())
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field,
        reason: reason.into(),
    }
}

/// Dense complex square matrix acting on the site basis.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    entries: Mat<Complex64>,
}

impl HamiltonianMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: Mat::zeros(dim, dim),
        }
    }

    /// Builds a matrix from row-major entries. Panics if `rows` is not square.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "matrix must be square");
        Self {
            entries: Mat::from_fn(dim, dim, |i, j| rows[i][j]),
        }
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let dim = diag.len();
        Self {
            entries: Mat::from_fn(dim, dim, |i, j| {
                if i == j {
                    diag[i]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }),
        }
    }

    pub(crate) fn from_mat(entries: Mat<Complex64>) -> Self {
        assert_eq!(entries.nrows(), entries.ncols());
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Entry at zero-based `(row, col)`.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    pub fn as_mat(&self) -> faer::MatRef<'_, Complex64> {
        self.entries.as_ref()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_mat(self.entries.adjoint().to_owned())
    }

    pub fn is_finite(&self) -> bool {
        (0..self.dim()).all(|j| (0..self.dim()).all(|i| self.entry(i, j).is_finite()))
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        let n = self.dim();
        let mut m = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                m = m.max(self.entries[(i, j)].norm());
            }
        }
        m
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn norm_one(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|j| (0..n).map(|i| self.entries[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise deviation `max |A_ij - B_ij|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        let n = self.dim();
        let mut m = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                m = m.max((self.entries[(i, j)] - other.entries[(i, j)]).norm());
            }
        }
        m
    }

    pub fn is_hermitian(&self) -> bool {
        let n = self.dim();
        (0..n).all(|j| (0..=j).all(|i| self.entries[(i, j)] == self.entries[(j, i)].conj()))
    }

    /// `H |psi>`.
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        assert_eq!(psi.len(), n);
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (j, &x) in psi.iter().enumerate() {
            if x == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.entries[(i, j)] * x;
            }
        }
        out
    }
}

impl std::ops::Add for &HamiltonianMatrix {
    type Output = HamiltonianMatrix;

    fn add(self, rhs: Self) -> HamiltonianMatrix {
        assert_eq!(self.dim(), rhs.dim());
        HamiltonianMatrix::from_mat(&self.entries + &rhs.entries)
    }
}

/// Builds the open-chain Hamiltonian: hoppings `v` inside cells, `w` between
/// them, complex potentials on the block diagonal.
pub fn build_hamiltonian(config: &LatticeConfig) -> Result<HamiltonianMatrix> {
    config.validate()?;
    let dim = config.dim();
    let mut m = Mat::<Complex64>::zeros(dim, dim);
    for i in 0..dim - 1 {
        // zero-based i even: bond inside a cell (sites 2n-1, 2n)
        let t = if i % 2 == 0 { config.v } else { config.w };
        m[(i, i + 1)] = Complex64::new(t, 0.0);
        m[(i + 1, i)] = Complex64::new(t, 0.0);
    }
    for i in 0..dim {
        m[(i, i)] = config.potential(i + 1);
    }
    Ok(HamiltonianMatrix::from_mat(m))
}

/// Diagonal-only part of [`build_hamiltonian`]: the complex on-site block.
pub fn perturbation_matrix(config: &LatticeConfig) -> Result<HamiltonianMatrix> {
    config.validate()?;
    let diag: Vec<Complex64> = (1..=config.dim()).map(|s| config.potential(s)).collect();
    Ok(HamiltonianMatrix::from_diagonal(&diag))
}

/// First-order shift of a zero mode, `<psi| H' |psi> = sum_s H'_ss |psi_s|^2`.
pub fn edge_correction(config: &LatticeConfig, edge_state: &StateVector) -> Result<Complex64> {
    config.validate()?;
    if edge_state.dim() != config.dim() {
        return Err(Error::DimensionMismatch {
            expected: config.dim(),
            found: edge_state.dim(),
        });
    }
    let Some(region) = config.region else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    Ok((region.start..=region.end)
        .map(|s| config.potential(s) * edge_state.amplitudes()[s - 1].norm_sqr())
        .sum())
}

/// Default tolerance for [`is_pt_symmetric`]; construction is exact.
pub const PT_TOLERANCE: f64 = 1e-12;

/// True iff `P conj(H) P` equals `H` within `tol`, with `P` reversing site order.
pub fn is_pt_symmetric(config: &LatticeConfig, tol: f64) -> Result<bool> {
    let h = build_hamiltonian(config)?;
    let n = h.dim();
    let mut dev = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let mirrored = h.entry(n - 1 - i, n - 1 - j).conj();
            dev = dev.max((mirrored - h.entry(i, j)).norm());
        }
    }
    Ok(dev < tol)
}
