//! Brute-force natural frequencies from a real state space.
//!
//! The per-turn equations
//!
//! ```text
//! (S − I)·V = −(R + sL)·I
//! (S − I)·I = −sC·V
//! ```
//!
//! are restricted to the orthogonal complement of the all-ones vector with a
//! real Helmert basis `P`. There `L` acts as `Mα`, so with `D̃ = P(S−I)Pᵀ`,
//! `C̃ = P C Pᵀ` and state `[ĩ; ṽ]`:
//!
//! ```text
//! dĩ/dt = −(R₀/Mα)·ĩ − (1/Mα)·D̃·ṽ
//! dṽ/dt = −C̃⁻¹·D̃·ĩ
//! ```
//!
//! Nothing here touches the DFT basis.

use faer::linalg::solvers::Solve;
use faer::{c64, Mat, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{PickupParams, SystemMatrices};
use crate::error::{Error, Result};
use crate::spectral::{cmp_complex, gamma2_of_s, ProjectedSystem};

/// Dips must fall below this fraction of the median `σ_min` on the grid.
pub const DIP_THRESHOLD_FRACTION: f64 = 1e-3;

/// Orthonormal rows spanning the complement of `1`: row `k−1` is
/// `(1, …, 1, −k, 0, …) / √(k(k+1))` with `k` leading ones.
pub fn helmert_basis(n: usize) -> Mat<f64> {
    Mat::from_fn(n - 1, n, |r, j| {
        let k = (r + 1) as f64;
        let norm = (k * (k + 1.0)).sqrt();
        if j <= r {
            1.0 / norm
        } else if j == r + 1 {
            -k / norm
        } else {
            0.0
        }
    })
}

#[derive(Debug, Clone)]
pub struct StateSpace {
    pub n: usize,
    pub params: PickupParams,
    /// `(n−1) × n`.
    pub basis: Mat<f64>,
    /// `2(n−1)` square, acting on `[ĩ; ṽ]`.
    pub a_state: Mat<f64>,
    /// `P(S−I)Pᵀ`.
    pub d_proj: Mat<f64>,
    /// `P C Pᵀ`.
    pub c_proj: Mat<f64>,
}

impl StateSpace {
    pub fn dim(&self) -> usize {
        self.a_state.nrows()
    }
}

pub fn build_state_space(mats: &SystemMatrices) -> Result<StateSpace> {
    let n = mats.n;
    let params = mats.params;
    params.validate()?;
    let m_alpha = params.m_alpha();
    if m_alpha == 0.0 {
        return Err(Error::Degenerate(
            "Mα = 0: the inductance is not invertible on the 1-complement; use the frequency sweep instead".into(),
        ));
    }
    let p = helmert_basis(n);
    let d_proj = &p * mats.difference() * p.transpose();
    let c_raw = &p * &mats.c * p.transpose();
    let c_proj = Mat::from_fn(n - 1, n - 1, |i, j| 0.5 * (c_raw[(i, j)] + c_raw[(j, i)]));
    let llt = c_proj.llt(Side::Lower).map_err(|e| {
        Error::NotPositiveDefinite(format!(
            "projected capacitance is not positive definite ({e:?}); the contact graph must be connected"
        ))
    })?;
    let cinv_d = llt.solve(&d_proj);

    let m = n - 1;
    let r0 = params.r0(n);
    let mut a_state = Mat::<f64>::zeros(2 * m, 2 * m);
    for i in 0..m {
        a_state[(i, i)] = -r0 / m_alpha;
        for j in 0..m {
            a_state[(i, m + j)] = -d_proj[(i, j)] / m_alpha;
            a_state[(m + i, j)] = -cinv_d[(i, j)];
        }
    }
    Ok(StateSpace {
        n,
        params,
        basis: p,
        a_state,
        d_proj,
        c_proj,
    })
}

/// Sort key matching the spectral mode order: by `γ²(s)`, then by `s`.
pub fn sort_like_modes(values: &mut [c64], params: &PickupParams, n: usize) {
    values
        .sort_by(|a, b| cmp_complex(&gamma2_of_s(*a, params, n), &gamma2_of_s(*b, params, n)).then(cmp_complex(a, b)));
}

/// The `2(n−1)` eigenvalues of the state matrix.
pub fn oracle_eigenvalues(ss: &StateSpace) -> Result<Vec<c64>> {
    let mut ev = ss
        .a_state
        .eigenvalues()
        .map_err(|e| Error::Eigen(format!("state-space eigensolver failed: {e:?}")))?;
    if ev.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Eigen("non-finite state-space eigenvalue".into()));
    }
    sort_like_modes(&mut ev, &ss.params, ss.n);
    Ok(ev)
}

/// Smallest singular value of `Λ̃ − γ²(s)·K`.
pub fn sigma_min_at(proj: &ProjectedSystem, params: &PickupParams, s: c64) -> Result<f64> {
    let sv = proj
        .pencil_at(gamma2_of_s(s, params, proj.n))
        .singular_values()
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok(sv[sv.len() - 1])
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Dip {
    pub omega: f64,
    pub sigma_min: f64,
}

#[derive(Debug, Clone)]
pub struct Sweep {
    /// Real part of every probe point `s = σ + iω`.
    pub sigma: f64,
    pub samples: Vec<(f64, f64)>,
    pub dips: Vec<Dip>,
}

/// `σ_min` on the imaginary axis `s = iω`.
pub fn frequency_sweep(proj: &ProjectedSystem, params: &PickupParams, omega_grid: &[f64]) -> Result<Sweep> {
    line_sweep(proj, params, 0.0, omega_grid)
}

/// `σ_min` along the vertical line `s = σ + iω`. Interior local minima below
/// [`DIP_THRESHOLD_FRACTION`] × median are refined with a 3-point parabola.
pub fn line_sweep(proj: &ProjectedSystem, params: &PickupParams, sigma: f64, omega_grid: &[f64]) -> Result<Sweep> {
    if omega_grid.is_empty() {
        return Err(Error::InvalidInput("empty frequency grid".into()));
    }
    if omega_grid.iter().any(|w| !w.is_finite()) || omega_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "frequency grid must be finite and strictly increasing".into(),
        ));
    }
    let values: Vec<f64> = omega_grid
        .par_iter()
        .map(|&w| sigma_min_at(proj, params, c64::new(sigma, w)))
        .collect::<Result<_>>()?;

    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let threshold = DIP_THRESHOLD_FRACTION * median;

    let mut dips = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        let (y0, y1, y2) = (values[i - 1], values[i], values[i + 1]);
        if y1 < threshold && y1 <= y0 && y1 <= y2 {
            let (x0, x1, x2) = (omega_grid[i - 1], omega_grid[i], omega_grid[i + 1]);
            dips.push(parabola_vertex([x0, x1, x2], [y0, y1, y2]));
        }
    }
    Ok(Sweep {
        sigma,
        samples: omega_grid.iter().copied().zip(values).collect(),
        dips,
    })
}

fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> Dip {
    let d01 = (y[1] - y[0]) / (x[1] - x[0]);
    let d12 = (y[2] - y[1]) / (x[2] - x[1]);
    let curv = (d12 - d01) / (x[2] - x[0]);
    if curv <= 0.0 {
        return Dip {
            omega: x[1],
            sigma_min: y[1],
        };
    }
    // Newton form y0 + d01·(t − x0) + curv·(t − x0)(t − x1)
    let t = 0.5 * (x[0] + x[1]) - d01 / (2.0 * curv);
    let t = t.clamp(x[0], x[2]);
    let value = y[0] + d01 * (t - x[0]) + curv * (t - x[0]) * (t - x[1]);
    Dip {
        omega: t,
        sigma_min: value.max(0.0),
    }
}
