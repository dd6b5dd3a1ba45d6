// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Spin clusters: positions, dipolar couplings and Zeeman offsets.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_capacity, Result, SpinError};

/// How pairwise couplings follow from positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingRule {
    /// `d_ij = scale * (1 - 3 cos^2 theta_ij) / r_ij^3`, theta measured from the z-axis.
    DipolarAngular,
    /// `d_ij = scale / r_ij^3`.
    IsotropicR3,
}

/// A cluster of `N` spin-1/2 with couplings in rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinSystem {
    n_spins: usize,
    positions: Option<Vec<[f64; 3]>>,
    couplings: Option<DMatrix<f64>>,
    zeeman_offsets: Vec<f64>,
}

impl SpinSystem {
    /// A system without couplings (only Zeeman physics available).
    pub fn uncoupled(n_spins: usize) -> Result<Self> {
        if n_spins == 0 {
            return Err(SpinError::InvalidSystem("N must be at least 1".into()));
        }
        check_capacity(n_spins)?;
        Ok(Self { n_spins, positions: None, couplings: None, zeeman_offsets: vec![0.0; n_spins] })
    }

    pub fn from_couplings(couplings: DMatrix<f64>) -> Result<Self> {
        let n = couplings.nrows();
        if n != couplings.ncols() {
            return Err(SpinError::InvalidSystem("coupling matrix must be square".into()));
        }
        let mut system = Self::uncoupled(n)?;
        let scale = couplings.amax().max(1.0);
        for i in 0..n {
            if couplings[(i, i)] != 0.0 {
                return Err(SpinError::InvalidSystem(format!("nonzero diagonal coupling d[{i}][{i}]")));
            }
            for j in 0..i {
                if (couplings[(i, j)] - couplings[(j, i)]).abs() > 1e-12 * scale {
                    return Err(SpinError::InvalidSystem(format!("couplings not symmetric at ({i}, {j})")));
                }
            }
        }
        system.couplings = Some(couplings);
        Ok(system)
    }

    pub fn from_positions(positions: Vec<[f64; 3]>, scale: f64, rule: CouplingRule) -> Result<Self> {
        let couplings = couplings_from_geometry(&positions, scale, rule)?;
        let mut system = Self::from_couplings(couplings)?;
        system.positions = Some(positions);
        Ok(system)
    }

    /// Two spins separated by `distance` along `direction` (normalized internally).
    pub fn pair(distance: f64, direction: [f64; 3], scale: f64, rule: CouplingRule) -> Result<Self> {
        let norm = (direction[0].powi(2) + direction[1].powi(2) + direction[2].powi(2)).sqrt();
        if norm == 0.0 {
            return Err(SpinError::InvalidArgument("pair direction must be nonzero".into()));
        }
        let p = direction.map(|c| c * distance / norm);
        Self::from_positions(vec![[0.0; 3], p], scale, rule)
    }

    /// Evenly spaced chain along x.
    pub fn chain(n_spins: usize, spacing: f64, scale: f64, rule: CouplingRule) -> Result<Self> {
        let positions = (0..n_spins).map(|i| [i as f64 * spacing, 0.0, 0.0]).collect();
        Self::from_positions(positions, scale, rule)
    }

    /// Full `nx * ny * nz` simple-cubic block with unit spacing.
    pub fn cubic_cluster(nx: usize, ny: usize, nz: usize, scale: f64, rule: CouplingRule) -> Result<Self> {
        let mut positions = Vec::with_capacity(nx * ny * nz);
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    positions.push([x as f64, y as f64, z as f64]);
                }
            }
        }
        Self::from_positions(positions, scale, rule)
    }

    /// `n_spins` distinct sites drawn from a half-filled simple-cubic box,
    /// reproducible from `seed`.
    pub fn random_cluster(n_spins: usize, scale: f64, rule: CouplingRule, seed: u64) -> Result<Self> {
        if n_spins == 0 {
            return Err(SpinError::InvalidSystem("N must be at least 1".into()));
        }
        check_capacity(n_spins)?;
        let side = ((2 * n_spins) as f64).cbrt().ceil().max(2.0) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sites: Vec<usize> = sample(&mut rng, side * side * side, n_spins).into_vec();
        sites.sort_unstable();
        let positions = sites
            .into_iter()
            .map(|s| [(s % side) as f64, ((s / side) % side) as f64, (s / (side * side)) as f64])
            .collect();
        Self::from_positions(positions, scale, rule)
    }

    pub fn with_zeeman_offsets(mut self, offsets: Vec<f64>) -> Result<Self> {
        if offsets.len() != self.n_spins {
            return Err(SpinError::DimensionMismatch { left: offsets.len(), right: self.n_spins });
        }
        self.zeeman_offsets = offsets;
        Ok(self)
    }

    /// Multiply every coupling so that [`Self::rms_local_coupling`] equals `target`.
    pub fn normalized_to(mut self, target: f64) -> Result<Self> {
        let current = self.rms_local_coupling()?;
        if current == 0.0 {
            return Err(SpinError::InvalidSystem("cannot rescale a system without couplings".into()));
        }
        if let Some(c) = self.couplings.as_mut() {
            *c *= target / current;
        }
        Ok(self)
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    /// Hilbert-space dimension `2^N`.
    pub fn dim(&self) -> usize {
        1 << self.n_spins
    }

    pub fn positions(&self) -> Option<&[[f64; 3]]> {
        self.positions.as_deref()
    }

    pub fn couplings(&self) -> Result<&DMatrix<f64>> {
        self.couplings.as_ref().ok_or(SpinError::MissingCouplings)
    }

    pub fn has_couplings(&self) -> bool {
        self.couplings.is_some()
    }

    pub fn zeeman_offsets(&self) -> &[f64] {
        &self.zeeman_offsets
    }

    /// `sqrt( (1/N) sum_i sum_{j != i} d_ij^2 )`, the typical local dipolar field.
    pub fn rms_local_coupling(&self) -> Result<f64> {
        let d = self.couplings()?;
        Ok((d.iter().map(|v| v * v).sum::<f64>() / self.n_spins as f64).sqrt())
    }

    /// Iterate `(i, j, d_ij)` over pairs `i < j` with nonzero coupling.
    pub fn pairs(&self) -> Result<impl Iterator<Item = (usize, usize, f64)> + '_> {
        let d = self.couplings()?;
        let n = self.n_spins;
        Ok((0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j, d[(i, j)]))).filter(|&(_, _, v)| v != 0.0))
    }
}

/// Pairwise couplings for the given positions.
pub fn couplings_from_geometry(positions: &[[f64; 3]], scale: f64, rule: CouplingRule) -> Result<DMatrix<f64>> {
    let n = positions.len();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let r = [
                positions[j][0] - positions[i][0],
                positions[j][1] - positions[i][1],
                positions[j][2] - positions[i][2],
            ];
            let r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
            if r2 <= 0.0 {
                return Err(SpinError::DegenerateGeometry(i, j));
            }
            let r3 = r2 * r2.sqrt();
            let value = match rule {
                CouplingRule::IsotropicR3 => scale / r3,
                CouplingRule::DipolarAngular => {
                    let cos2 = r[2] * r[2] / r2;
                    scale * (1.0 - 3.0 * cos2) / r3
                }
            };
            d[(i, j)] = value;
            d[(j, i)] = value;
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_on_z_axis_dipolar() {
        let s = SpinSystem::pair(1.0, [0.0, 0.0, 1.0], 1.0, CouplingRule::DipolarAngular).unwrap();
        assert_eq!(s.couplings().unwrap()[(0, 1)], -2.0);
    }

    #[test]
    fn isotropic_distance_two() {
        let d = couplings_from_geometry(&[[0.0; 3], [2.0, 0.0, 0.0]], 8.0, CouplingRule::IsotropicR3).unwrap();
        assert_eq!(d[(0, 1)], 1.0);
        assert_eq!(d[(1, 0)], 1.0);
    }

    #[test]
    fn unit_square_matrix_matches_pairwise_formula() {
        // 2x2x1 square in the xy-plane: every bond is perpendicular to z.
        let s = SpinSystem::cubic_cluster(2, 2, 1, 1.0, CouplingRule::DipolarAngular).unwrap();
        let d = s.couplings().unwrap();
        let diag = 1.0 / 2f64.sqrt().powi(3);
        let expected = [[0.0, 1.0, 1.0, diag], [1.0, 0.0, diag, 1.0], [1.0, diag, 0.0, 1.0], [diag, 1.0, 1.0, 0.0]];
        for i in 0..4 {
            for j in 0..4 {
                assert!((d[(i, j)] - expected[i][j]).abs() < 1e-15, "({i},{j})");
            }
        }
    }

    #[test]
    fn coincident_positions_rejected() {
        let err = couplings_from_geometry(&[[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]], 1.0, CouplingRule::IsotropicR3);
        let err = err.unwrap_err();
        assert_eq!(err, SpinError::DegenerateGeometry(0, 1));
        assert!(err.to_string().contains("degenerate geometry"));
    }

    #[test]
    fn random_cluster_is_reproducible_and_valid() {
        let a = SpinSystem::random_cluster(8, 1.0, CouplingRule::DipolarAngular, 42).unwrap();
        let b = SpinSystem::random_cluster(8, 1.0, CouplingRule::DipolarAngular, 42).unwrap();
        assert_eq!(a, b);
        let d = a.couplings().unwrap();
        assert_eq!(d, &d.transpose());
        assert!((0..8).all(|i| d[(i, i)] == 0.0));
    }

    #[test]
    fn capacity_and_empty() {
        assert!(matches!(SpinSystem::uncoupled(15), Err(SpinError::Capacity { .. })));
        assert!(SpinSystem::uncoupled(0).is_err());
    }

    #[test]
    fn normalization_hits_target() {
        let s = SpinSystem::chain(5, 1.0, 3.0, CouplingRule::IsotropicR3).unwrap().normalized_to(1000.0).unwrap();
        assert!((s.rms_local_coupling().unwrap() - 1000.0).abs() < 1e-9);
    }
}
