//! Densities, bipartite norms, the reflection ratio and localization classes.

use num_complex::Complex64;

use crate::dynamics::{StateVector, Trajectory};
use crate::error::{Error, Result};
use crate::lattice::LatticeConfig;

/// Center classification threshold, in sites.
pub const DEFAULT_SIDE_THRESHOLD: f64 = 0.5;

/// Tolerance used when looking up a sample time in a trajectory.
const TIME_MATCH_TOL: f64 = 1e-9;

/// Where a state's center of mass sits relative to a reference point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
    Center,
}

impl Side {
    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Center => "center",
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Bipartition of the chain: sites `1..=split_site` on the left, the rest on
/// the right.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BipartiteSplit {
    split_site: usize,
}

impl BipartiteSplit {
    pub fn new(split_site: usize, dim: usize) -> Result<Self> {
        if split_site < 1 || split_site >= dim {
            return Err(Error::InvalidSplit {
                split: split_site,
                dim,
            });
        }
        Ok(Self { split_site })
    }

    /// Splits at `floor((start + end) / 2)` of the block, or at the chain
    /// midpoint when there is none. Sites 109-112 give `1..=110 | 111..=220`.
    pub fn for_config(config: &LatticeConfig) -> Result<Self> {
        let dim = config.dim();
        let split = match config.region {
            Some(r) => (r.start + r.end) / 2,
            None => dim / 2,
        };
        Self::new(split, dim)
    }

    pub fn split_site(&self) -> usize {
        self.split_site
    }
}

/// `rho_s = |psi_s|^2`.
pub fn site_density(psi: &StateVector) -> Vec<f64> {
    psi.amplitudes().iter().map(|a| a.norm_sqr()).collect()
}

/// `(rho_L, rho_R)`: squared norms on either side of the split.
pub fn bipartite_norms(psi: &StateVector, split: BipartiteSplit) -> Result<(f64, f64)> {
    let amps = psi.amplitudes();
    if split.split_site >= amps.len() {
        return Err(Error::InvalidSplit {
            split: split.split_site,
            dim: amps.len(),
        });
    }
    let (left, right) = amps.split_at(split.split_site);
    Ok((
        left.iter().map(|a| a.norm_sqr()).sum(),
        right.iter().map(|a| a.norm_sqr()).sum(),
    ))
}

fn sample_index(traj: &Trajectory, t: f64) -> Result<usize> {
    traj.times()
        .iter()
        .position(|&s| (s - t).abs() <= TIME_MATCH_TOL * t.abs().max(1.0))
        .ok_or(Error::MissingSample(t))
}

/// `rho_R` of the right-initialised run over `rho_L` of the left-initialised
/// run, both at `t_sample`.
pub fn reflection_ratio(
    traj_right: &Trajectory,
    traj_left: &Trajectory,
    split: BipartiteSplit,
    t_sample: f64,
) -> Result<f64> {
    let (_, rho_right) = bipartite_norms(
        &traj_right.states()[sample_index(traj_right, t_sample)?],
        split,
    )?;
    let (rho_left, _) = bipartite_norms(
        &traj_left.states()[sample_index(traj_left, t_sample)?],
        split,
    )?;
    if rho_left == 0.0 {
        return Err(Error::ZeroDenominator("reflection ratio"));
    }
    Ok(rho_right / rho_left)
}

/// Normalized position expectation `sum_s s |psi_s|^2 / sum_s |psi_s|^2`,
/// sites counted from 1.
pub fn center_of_mass(psi: &StateVector) -> Result<f64> {
    com_of(psi.amplitudes().iter().copied())
}

pub(crate) fn com_of(amps: impl Iterator<Item = Complex64>) -> Result<f64> {
    let (mut weighted, mut total) = (0.0, 0.0);
    for (i, a) in amps.enumerate() {
        let d = a.norm_sqr();
        weighted += (i + 1) as f64 * d;
        total += d;
    }
    if total == 0.0 || !total.is_finite() {
        return Err(Error::ZeroNorm);
    }
    Ok(weighted / total)
}

/// Center within `threshold` of the reference, otherwise left or right of it.
pub fn classify_side(com: f64, reference_center: f64, threshold: f64) -> Side {
    if (com - reference_center).abs() < threshold {
        Side::Center
    } else if com < reference_center {
        Side::Left
    } else {
        Side::Right
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn basis(dim: usize, site: usize) -> StateVector {
        let mut a = vec![c(0.0, 0.0); dim];
        a[site - 1] = c(1.0, 0.0);
        StateVector::new(a)
    }

    #[test]
    fn density_examples() {
        assert_eq!(site_density(&basis(5, 3)), vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        let h = 1.0 / 2f64.sqrt();
        let d = site_density(&StateVector::new(vec![c(h, 0.0), c(0.0, h)]));
        assert!((d[0] - 0.5).abs() < 1e-15 && (d[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn split_defaults() {
        let s = BipartiteSplit::for_config(&LatticeConfig::flagship()).unwrap();
        assert_eq!(s.split_site(), 110);
        let s = BipartiteSplit::for_config(
            &LatticeConfig::ssh(110, 0.25, 1.0).with_region(107, 110, 0.75, 0.75),
        )
        .unwrap();
        assert_eq!(s.split_site(), 108);
        let s = BipartiteSplit::for_config(&LatticeConfig::ssh(110, 0.25, 1.0)).unwrap();
        assert_eq!(s.split_site(), 110);
        assert!(BipartiteSplit::new(0, 10).is_err());
        assert!(BipartiteSplit::new(10, 10).is_err());
    }

    #[test]
    fn uniform_state_halves() {
        let a = 1.0 / 220f64.sqrt();
        let psi = StateVector::new(vec![c(a, 0.0); 220]);
        let (l, r) = bipartite_norms(&psi, BipartiteSplit::new(110, 220).unwrap()).unwrap();
        assert!((l - 0.5).abs() < 1e-12 && (r - 0.5).abs() < 1e-12);
        let small = StateVector::new(vec![c(1.0, 0.0); 4]);
        assert!(bipartite_norms(&small, BipartiteSplit::new(110, 220).unwrap()).is_err());
    }

    #[test]
    fn com_examples() {
        assert_eq!(center_of_mass(&basis(9, 4)).unwrap(), 4.0);
        let mirrored: Vec<Complex64> = (0..10)
            .map(|i| c((i.min(9 - i) as f64 + 1.0).sqrt(), 0.0))
            .collect();
        assert!((center_of_mass(&StateVector::new(mirrored)).unwrap() - 5.5).abs() < 1e-12);
        assert_eq!(
            center_of_mass(&StateVector::new(vec![c(0.0, 0.0); 3])),
            Err(Error::ZeroNorm)
        );
        // normalization makes the scale irrelevant
        let mut scaled = vec![c(0.0, 0.0); 6];
        scaled[1] = c(3.0, 0.0);
        scaled[5] = c(0.0, 3.0);
        assert!((center_of_mass(&StateVector::new(scaled)).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_side(110.2, 110.5, 0.5), Side::Center);
        assert_eq!(classify_side(50.0, 110.5, 0.5), Side::Left);
        assert_eq!(classify_side(200.0, 110.5, 0.5), Side::Right);
        assert_eq!(classify_side(110.0, 110.5, 0.5), Side::Left);
        assert_eq!(classify_side(111.0, 110.5, 0.5), Side::Right);
    }

    #[test]
    fn ratio_errors() {
        let traj = Trajectory::new(vec![0.0, 1.0], vec![basis(4, 1), basis(4, 4)]);
        let split = BipartiteSplit::new(2, 4).unwrap();
        assert_eq!(
            reflection_ratio(&traj, &traj, split, 0.5),
            Err(Error::MissingSample(0.5))
        );
        // left run has no weight on the left at t = 1
        assert_eq!(
            reflection_ratio(&traj, &traj, split, 1.0),
            Err(Error::ZeroDenominator("reflection ratio"))
        );
        assert_eq!(reflection_ratio(&traj, &traj, split, 0.0).unwrap(), 0.0);
    }
}
