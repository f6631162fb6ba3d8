//! Discrete interaction energies `I_μ[ρ, σ] = ½ ∬ ρ(x)|x-y|^μ σ(y)` on a radial grid.

use rayon::prelude::*;
use serde::Serialize;

use crate::density::{RadialGrid, RadialProfile};
use crate::error::{FlockError, Result};
use crate::quadrature::{graded_both, rule};
use crate::radial_kernel::{kernel_matrix, shell_potential, sphere_area, KernelParams, QuadratureSpec};

/// Cell-pair integrals `W_ij = ∫_{cell i}∫_{cell j} |x-y|^mu dx dy`
/// (cell volumes folded in). Symmetric, finite and nonnegative.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    mu: f64,
    grid: RadialGrid,
    data: Vec<f64>,
}

impl KernelMatrix {
    pub(crate) fn new(mu: f64, grid: &RadialGrid, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), grid.len() * grid.len());
        Self { mu, grid: grid.clone(), data }
    }

    pub fn assemble(grid: &RadialGrid, mu: f64, quad: &QuadratureSpec) -> Result<Self> {
        kernel_matrix(grid, mu, quad)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn size(&self) -> usize {
        self.grid.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.size();
        &self.data[i * n..(i + 1) * n]
    }

    /// Cell average `K̄_ij = W_ij / (vol_i vol_j)`.
    pub fn average(&self, i: usize, j: usize) -> f64 {
        let v = self.grid.volumes();
        self.get(i, j) / (v[i] * v[j])
    }

    /// `W v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.size();
        let dot = |i: usize| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        if n >= 256 {
            (0..n).into_par_iter().map(dot).collect()
        } else {
            (0..n).map(dot).collect()
        }
    }

    /// `½ aᵀ W b`, arranged so swapping `a` and `b` gives the identical
    /// floating-point result.
    pub fn bilinear(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.size();
        let row_sum = |i: usize| {
            let row = self.row(i);
            let mut s = row[i] * a[i] * b[i];
            for j in i + 1..n {
                s += row[j] * (a[i] * b[j] + b[i] * a[j]);
            }
            s
        };
        let total: f64 = if n >= 256 {
            let parts: Vec<f64> = (0..n).into_par_iter().map(row_sum).collect();
            parts.iter().sum()
        } else {
            (0..n).map(row_sum).sum()
        };
        0.5 * total
    }

    pub(crate) fn check_grid(&self, grid: &RadialGrid) -> Result<()> {
        if &self.grid != grid {
            return Err(FlockError::GridMismatch);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub attract: f64,
    pub repel: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(attract: f64, repel: f64) -> Self {
        Self { attract, repel, total: attract + repel }
    }
}

/// `I_μ[ρ, σ]`.
pub fn interaction(rho: &RadialProfile, sigma: &RadialProfile, k: &KernelMatrix) -> Result<f64> {
    k.check_grid(rho.grid())?;
    k.check_grid(sigma.grid())?;
    Ok(k.bilinear(rho.values(), sigma.values()))
}

pub fn total_energy(
    rho: &RadialProfile,
    params: &KernelParams,
    k_a: &KernelMatrix,
    k_r: &KernelMatrix,
) -> Result<EnergyBreakdown> {
    if k_a.mu() != params.alpha {
        return Err(FlockError::ParameterMismatch(format!(
            "attractive matrix has mu = {}, expected alpha = {}",
            k_a.mu(),
            params.alpha
        )));
    }
    if k_r.mu() != -params.lambda {
        return Err(FlockError::ParameterMismatch(format!(
            "repulsive matrix has mu = {}, expected -lambda = {}",
            k_r.mu(),
            -params.lambda
        )));
    }
    Ok(EnergyBreakdown::new(
        interaction(rho, rho, k_a)?,
        interaction(rho, rho, k_r)?,
    ))
}

/// Per-cell average of `|x|^mu * ρ`.
pub fn potential_of_density(rho: &RadialProfile, k: &KernelMatrix) -> Result<Vec<f64>> {
    k.check_grid(rho.grid())?;
    let w = k.apply(rho.values());
    Ok(w.iter().zip(rho.grid().volumes()).map(|(a, v)| a / v).collect())
}

/// `½ ηᵀ W η` for a signed cell function `eta`.
pub fn repulsive_psd_check(eta: &[f64], k_r: &KernelMatrix) -> Result<f64> {
    if eta.len() != k_r.size() {
        return Err(FlockError::GridMismatch);
    }
    Ok(k_r.bilinear(eta, eta))
}

/// `I_mu[1_{B_R}]` from the radial integral of the ball potential (no grid).
pub fn ball_self_interaction(mu: f64, dim: usize, radius: f64, quad: &QuadratureSpec) -> Result<f64> {
    let mut err = None;
    let f = |r: f64| match shell_potential(mu, r, 0.0, radius, dim, quad) {
        Ok(p) => r.powi(dim as i32 - 1) * p,
        Err(e) => {
            err.get_or_insert(e);
            0.0
        }
    };
    let v = graded_both(f, 0.0, radius, quad.diagonal_refinement_levels, rule(quad.nodes_per_cell));
    if let Some(e) = err {
        return Err(e);
    }
    Ok(0.5 * sphere_area(dim) * v)
}

/// Both kernel matrices of `E_{α,λ}` on one grid.
#[derive(Debug, Clone)]
pub struct EnergyModel {
    pub params: KernelParams,
    pub attract: KernelMatrix,
    pub repel: KernelMatrix,
}

impl EnergyModel {
    pub fn assemble(params: &KernelParams, grid: &RadialGrid, quad: &QuadratureSpec) -> Result<Self> {
        params.validate()?;
        if grid.dim() != params.dim {
            return Err(FlockError::ParameterMismatch(format!(
                "grid dimension {} vs kernel dimension {}",
                grid.dim(),
                params.dim
            )));
        }
        Ok(Self {
            params: *params,
            attract: kernel_matrix(grid, params.alpha, quad)?,
            repel: kernel_matrix(grid, -params.lambda, quad)?,
        })
    }

    pub fn grid(&self) -> &RadialGrid {
        self.attract.grid()
    }

    pub fn energy(&self, rho: &RadialProfile) -> Result<EnergyBreakdown> {
        total_energy(rho, &self.params, &self.attract, &self.repel)
    }

    /// Per-cell average of `(|x|^α + |x|^{-λ}) * ρ`.
    pub fn potential(&self, rho: &RadialProfile) -> Result<Vec<f64>> {
        let a = potential_of_density(rho, &self.attract)?;
        let r = potential_of_density(rho, &self.repel)?;
        Ok(a.iter().zip(&r).map(|(x, y)| x + y).collect())
    }
}
