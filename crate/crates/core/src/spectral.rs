//! Natural frequencies through the DFT basis.
//!
//! In the unitary DFT basis `F[j,k] = n^{-1/2}·Ω^{jk}` the shift is diagonal,
//! `F S F† = diag(Ω^k)`, so `(S − I)²` becomes `diag((Ω^k − 1)²)`. Dropping
//! the `k = 0` row removes the all-ones direction shared by `S − I` and the
//! capacitance matrix, leaving the `(n−1)`-dimensional pencil
//!
//! ```text
//! det(Λ̃ − γ²·K) = 0,   Λ̃ = diag((Ω^k − 1)²),   K = F_pr (dI − A + B) F_pr†
//! ```
//!
//! Each eigenvalue `γ²` yields natural frequencies `s` from
//! `Mα·C₀·s² + R₀·C₀·s − γ² = 0`.

use std::f64::consts::TAU;

use faer::{c64, Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::assembly::{PickupParams, SystemMatrices};
use crate::error::{Error, Result};

/// Tolerance on the relative anti-Hermitian part of `K`.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Above this projected order the residual check switches from a full SVD
/// per mode to the eigenvector bound.
pub const EXACT_RESIDUAL_MAX_ORDER: usize = 128;

/// `Ω_n^k = exp(2πik/n)`, with `k` reduced modulo `n` before scaling.
pub fn root_of_unity(n: usize, k: usize) -> c64 {
    let theta = TAU * (k % n) as f64 / n as f64;
    let (sin, cos) = theta.sin_cos();
    c64::new(cos, sin)
}

/// Lexicographic order on `(re, im)`.
pub fn cmp_complex(a: &c64, b: &c64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

#[derive(Debug, Clone)]
pub struct DftBasis {
    pub n: usize,
    pub f: Mat<c64>,
}

impl DftBasis {
    /// Builds `F` and checks `F·S = diag(Ω^k)·F` entry by entry.
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("DFT basis needs n >= 2, got {n}")));
        }
        let scale = 1.0 / (n as f64).sqrt();
        let f = Mat::from_fn(n, n, |j, k| root_of_unity(n, j * k) * scale);
        let basis = Self { n, f };
        let err = basis.shift_eigen_residual();
        if err > 1e-12 {
            return Err(Error::Eigen(format!(
                "DFT rows are not eigenvectors of the shift (residual {err:e})"
            )));
        }
        Ok(basis)
    }

    /// The `(n−1) × n` rows with `k = 1..n−1`.
    pub fn f_pr(&self) -> MatRef<'_, c64> {
        self.f.as_ref().subrows(1, self.n - 1)
    }

    /// `max |(F·S)[k,j] − Ω^k·F[k,j]|`. `(F·S)[k,j] = F[k, j+1 mod n]` for
    /// the shift convention `S e_j = e_{j+1}`.
    pub fn shift_eigen_residual(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for k in 0..n {
            let w = root_of_unity(n, k);
            for j in 0..n {
                let lhs = self.f[(k, (j + 1) % n)];
                worst = worst.max((lhs - w * self.f[(k, j)]).norm());
            }
        }
        worst
    }

    /// `‖F F† − I‖_F`.
    pub fn unitarity_error(&self) -> f64 {
        let mut g = &self.f * self.f.adjoint();
        for i in 0..self.n {
            g[(i, i)] -= c64::new(1.0, 0.0);
        }
        g.norm_l2()
    }
}

/// `(Ω^k − 1)²` for `k = 1..n−1`, by direct squaring.
pub fn lambda_tilde(n: usize) -> Vec<c64> {
    (1..n)
        .map(|k| {
            let theta = TAU * k as f64 / n as f64;
            let half = (theta / 2.0).sin();
            let diff = c64::new(-2.0 * half * half, theta.sin());
            diff * diff
        })
        .collect()
}

fn to_complex(m: MatRef<'_, f64>) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| c64::new(m[(i, j)], 0.0))
}

#[derive(Debug, Clone)]
pub struct ProjectedSystem {
    pub n: usize,
    pub lambda_tilde: Vec<c64>,
    /// Hermitian positive definite, order `n − 1`.
    pub k: Mat<c64>,
    /// Relative anti-Hermitian part of `K` before symmetrisation.
    pub hermitian_error: f64,
    /// Lower Cholesky factor of `K`.
    chol: Mat<c64>,
}

impl ProjectedSystem {
    pub fn order(&self) -> usize {
        self.n - 1
    }

    pub fn cholesky_factor(&self) -> MatRef<'_, c64> {
        self.chol.as_ref()
    }

    /// `Λ̃ − γ²·K`.
    pub fn pencil_at(&self, gamma2: c64) -> Mat<c64> {
        let m = self.order();
        Mat::from_fn(m, m, |i, j| {
            let diag = if i == j {
                self.lambda_tilde[i]
            } else {
                c64::new(0.0, 0.0)
            };
            diag - gamma2 * self.k[(i, j)]
        })
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let ev = self
            .k
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        Ok(ev[0])
    }
}

pub fn project_system(mats: &SystemMatrices, basis: &DftBasis) -> Result<ProjectedSystem> {
    if basis.n != mats.n {
        return Err(Error::InvalidInput(format!(
            "basis order {} does not match system order {}",
            basis.n, mats.n
        )));
    }
    let f_pr = basis.f_pr();
    let stiffness = to_complex(mats.stiffness().as_ref());
    let right = &stiffness * f_pr.adjoint();
    let raw = f_pr * &right;

    let m = raw.nrows();
    let scale = raw.norm_l2();
    let anti = Mat::from_fn(m, m, |i, j| raw[(i, j)] - raw[(j, i)].conj());
    let hermitian_error = if scale > 0.0 { anti.norm_l2() / scale } else { 0.0 };
    if hermitian_error > HERMITIAN_TOLERANCE {
        return Err(Error::NotPositiveDefinite(format!(
            "projected stiffness is not Hermitian (relative error {hermitian_error:e})"
        )));
    }
    let k = Mat::from_fn(m, m, |i, j| (raw[(i, j)] + raw[(j, i)].conj()) * 0.5);
    let chol = k
        .llt(Side::Lower)
        .map_err(|e| {
            Error::NotPositiveDefinite(format!("Cholesky failed ({e:?}); the contact graph must be connected"))
        })?
        .L()
        .to_owned();
    Ok(ProjectedSystem {
        n: mats.n,
        lambda_tilde: lambda_tilde(mats.n),
        k,
        hermitian_error,
        chol,
    })
}

/// Eigen-solution of the pencil `Λ̃ x = γ² K x` through the congruence
/// `L⁻¹ Λ̃ L⁻† z = γ² z`, `K = L L†`.
#[derive(Debug, Clone)]
pub struct PencilSolution {
    /// Sorted by `(Re, Im)`.
    pub gamma2: Vec<c64>,
    chol: Mat<c64>,
    /// Eigenvectors `z` of the congruent matrix, columns in `gamma2` order.
    z: Option<Mat<c64>>,
}

impl PencilSolution {
    /// For right eigenvectors `X = L⁻† Z` and left eigenvectors scaled so
    /// that `Y† K X = I`, returns `(u† X)` and `(Y† w)`, one entry per mode.
    pub fn modal_projections(&self, u: &[c64], w: &[c64]) -> Result<(Vec<c64>, Vec<c64>)> {
        let z = self
            .z
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("pencil solved without eigenvectors".into()))?;
        let m = self.gamma2.len();
        if u.len() != m || w.len() != m {
            return Err(Error::InvalidInput(format!("projection vectors must have length {m}")));
        }
        let lower = self.chol.as_ref();
        let mut g = Mat::from_fn(m, 1, |i, _| u[i]);
        lower.solve_lower_triangular_in_place(g.as_mut());
        // (L⁻¹u)† Z
        let left_row = g.adjoint() * z;
        let mut h = Mat::from_fn(m, 1, |i, _| w[i]);
        lower.solve_lower_triangular_in_place(h.as_mut());
        use faer::linalg::solvers::Solve;
        let right = z.partial_piv_lu().solve(&h);
        Ok((
            (0..m).map(|i| left_row[(0, i)]).collect(),
            (0..m).map(|i| right[(i, 0)]).collect(),
        ))
    }

    /// Right eigenvectors `X = L⁻† Z`, one column per mode.
    pub fn right_vectors(&self) -> Result<Mat<c64>> {
        let mut x = self
            .z
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("pencil solved without eigenvectors".into()))?
            .clone();
        self.chol.as_ref().adjoint().solve_upper_triangular_in_place(x.as_mut());
        Ok(x)
    }
}

/// Solves `det(Λ̃ − γ²K) = 0`; eigenvectors are kept when `vectors` is set.
pub fn solve_pencil(proj: &ProjectedSystem, vectors: bool) -> Result<PencilSolution> {
    let m = proj.order();
    let lower = proj.chol.as_ref();
    // W = L⁻¹ Λ̃
    let mut w = Mat::from_fn(m, m, |i, j| {
        if i == j {
            proj.lambda_tilde[i]
        } else {
            c64::new(0.0, 0.0)
        }
    });
    lower.solve_lower_triangular_in_place(w.as_mut());
    // M = W L⁻† = (L⁻¹ W†)†
    let mut wt = w.adjoint().to_owned();
    lower.solve_lower_triangular_in_place(wt.as_mut());
    let congruent = wt.adjoint().to_owned();

    let (values, z) = if vectors {
        let eig = congruent.eigen().map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let values: Vec<c64> = eig.S().column_vector().iter().copied().collect();
        (values, Some(eig.U().to_owned()))
    } else {
        let values = congruent.eigenvalues().map_err(|e| Error::Eigen(format!("{e:?}")))?;
        (values, None)
    };
    if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Eigen("non-finite γ² eigenvalue".into()));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| cmp_complex(&values[a], &values[b]));
    let gamma2 = order.iter().map(|&i| values[i]).collect();
    let z = z.map(|z| Mat::from_fn(m, m, |i, j| z[(i, order[j])]));
    Ok(PencilSolution {
        gamma2,
        chol: proj.chol.clone(),
        z,
    })
}

/// The `n − 1` values of `γ²`, sorted by `(Re, Im)`.
pub fn gamma2_spectrum(proj: &ProjectedSystem) -> Result<Vec<c64>> {
    Ok(solve_pencil(proj, false)?.gamma2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `(−R₀C₀ + √Δ) / (2MαC₀)` with the principal root.
    Plus,
    Minus,
    /// `Mα = 0`: the quadratic degenerates to `s = γ²/(R₀C₀)`.
    Single,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
            Branch::Single => "single",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub s: c64,
    pub gamma2_index: usize,
    pub branch: Branch,
}

/// `γ²(s) = s·C₀·(R₀ + s·Mα)`.
pub fn gamma2_of_s(s: c64, params: &PickupParams, n: usize) -> c64 {
    s * params.c0_farads * (s * params.m_alpha() + params.r0(n))
}

/// Roots of `Mα·C₀·s² + R₀·C₀·s − γ² = 0` for every `γ²`, in input order,
/// `plus` before `minus`.
pub fn natural_frequencies(gamma2: &[c64], params: &PickupParams, n: usize) -> Result<Vec<Mode>> {
    params.validate()?;
    let a = params.m_alpha() * params.c0_farads;
    let b = params.r0(n) * params.c0_farads;
    if a == 0.0 && b == 0.0 {
        return Err(Error::Degenerate(
            "Mα = 0 and R_DC = 0 leave no frequency dependence".into(),
        ));
    }
    let mut out = Vec::with_capacity(2 * gamma2.len());
    for (index, &g) in gamma2.iter().enumerate() {
        if a == 0.0 {
            out.push(Mode {
                s: g / b,
                gamma2_index: index,
                branch: Branch::Single,
            });
            continue;
        }
        let disc = (c64::new(b * b, 0.0) + g * (4.0 * a)).sqrt();
        // Re(disc) >= 0, so b + disc does not cancel.
        let q = (disc + b) * -0.5;
        let (plus, minus) = if q.norm() == 0.0 {
            (c64::new(0.0, 0.0), c64::new(0.0, 0.0))
        } else {
            (-g / q, q / a)
        };
        out.push(Mode {
            s: plus,
            gamma2_index: index,
            branch: Branch::Plus,
        });
        out.push(Mode {
            s: minus,
            gamma2_index: index,
            branch: Branch::Minus,
        });
    }
    Ok(out)
}

/// Natural frequencies with the inputs that produced them.
#[derive(Debug, Clone)]
pub struct ModeSet {
    pub n: usize,
    pub layout_hash: Option<String>,
    pub params: PickupParams,
    pub gamma2: Vec<c64>,
    pub modes: Vec<Mode>,
    pub residual: Option<ResidualReport>,
}

impl ModeSet {
    pub fn s_values(&self) -> Vec<c64> {
        self.modes.iter().map(|m| m.s).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidualMethod {
    /// `σ_min / σ_max` from a full SVD.
    Svd,
    /// Upper bound `‖P x‖·√m / (‖x‖·‖P‖_F)` from the mode's eigenvector.
    EigenvectorBound,
}

#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub method: ResidualMethod,
    pub per_mode: Vec<f64>,
    pub max: f64,
}

impl ResidualReport {
    fn from_values(method: ResidualMethod, per_mode: Vec<f64>) -> Self {
        let max = per_mode.iter().copied().fold(0.0, f64::max);
        Self { method, per_mode, max }
    }
}

/// Normalised smallest singular value of `Λ̃ − γ²(s)K` for each `s`.
pub fn residual_check(proj: &ProjectedSystem, params: &PickupParams, s: &[c64]) -> Result<ResidualReport> {
    let mut per_mode = Vec::with_capacity(s.len());
    for &si in s {
        let pencil = proj.pencil_at(gamma2_of_s(si, params, proj.n));
        let sv = pencil.singular_values().map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let (hi, lo) = (sv[0], sv[sv.len() - 1]);
        per_mode.push(if hi > 0.0 { lo / hi } else { 0.0 });
    }
    Ok(ResidualReport::from_values(ResidualMethod::Svd, per_mode))
}

/// Upper bound on [`residual_check`] using each mode's own eigenvector:
/// `σ_min ≤ ‖P x‖/‖x‖` and `σ_max ≥ ‖P‖_F/√m`.
pub fn residual_bound(
    proj: &ProjectedSystem,
    pencil: &PencilSolution,
    params: &PickupParams,
    modes: &[Mode],
) -> Result<ResidualReport> {
    let m = proj.order();
    let x = pencil.right_vectors()?;
    let kx = &proj.k * &x;
    // ‖Λ̃ − gK‖²_F = ‖Λ̃‖² + |g|²‖K‖² − 2·Re(ḡ·Σ K_ii·λ_i), K_ii real
    let lambda_sq: f64 = proj.lambda_tilde.iter().map(|l| l.norm_sqr()).sum();
    let k_sq = proj.k.norm_l2().powi(2);
    let cross: c64 = (0..m).map(|i| proj.lambda_tilde[i] * proj.k[(i, i)].re).sum();
    let x_norms: Vec<f64> = (0..m).map(|j| x.col(j).norm_l2()).collect();

    let mut per_mode = Vec::with_capacity(modes.len());
    for mode in modes {
        let j = mode.gamma2_index;
        let g = gamma2_of_s(mode.s, params, proj.n);
        let p_norm = (lambda_sq + g.norm_sqr() * k_sq - 2.0 * (g.conj() * cross).re)
            .max(0.0)
            .sqrt();
        let px = (0..m)
            .map(|i| (proj.lambda_tilde[i] * x[(i, j)] - g * kx[(i, j)]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        per_mode.push(if p_norm > 0.0 {
            px / x_norms[j] * (m as f64).sqrt() / p_norm
        } else {
            0.0
        });
    }
    Ok(ResidualReport::from_values(ResidualMethod::EigenvectorBound, per_mode))
}

/// Runs the full spectral route: projection, pencil, quadratic map and a
/// residual check sized to the problem.
pub fn compute_modes(
    mats: &SystemMatrices,
    layout_hash: Option<String>,
) -> Result<(ModeSet, ProjectedSystem, PencilSolution)> {
    let basis = DftBasis::new(mats.n)?;
    let proj = project_system(mats, &basis)?;
    let pencil = solve_pencil(&proj, true)?;
    let modes = natural_frequencies(&pencil.gamma2, &mats.params, mats.n)?;
    let residual = if proj.order() <= EXACT_RESIDUAL_MAX_ORDER {
        let s: Vec<c64> = modes.iter().map(|m| m.s).collect();
        residual_check(&proj, &mats.params, &s)?
    } else {
        residual_bound(&proj, &pencil, &mats.params, &modes)?
    };
    let set = ModeSet {
        n: mats.n,
        layout_hash,
        params: mats.params,
        gamma2: pencil.gamma2.clone(),
        modes,
        residual: Some(residual),
    };
    Ok((set, proj, pencil))
}

/// Largest distance from any value's conjugate to its nearest neighbour in
/// the set, relative to the largest magnitude.
pub fn conjugation_error(values: &[c64]) -> f64 {
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    values
        .iter()
        .map(|v| {
            values
                .iter()
                .map(|w| (v.conj() - w).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
        / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WindingGraph;

    fn unit_params() -> PickupParams {
        PickupParams {
            r_dc_ohms: 0.0,
            m_henries: 1.0,
            alpha: 1.0,
            c0_farads: 1.0,
            d: 2,
        }
    }

    fn close(a: c64, b: c64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn assert_multiset(got: &[c64], want: &[c64], tol: f64) {
        assert_eq!(got.len(), want.len());
        let mut used = vec![false; want.len()];
        for g in got {
            let hit = want
                .iter()
                .enumerate()
                .position(|(i, w)| !used[i] && close(*g, *w, tol))
                .unwrap_or_else(|| panic!("{g} not in {want:?}"));
            used[hit] = true;
        }
    }

    fn cycle_system(n: usize) -> SystemMatrices {
        SystemMatrices::assemble(&WindingGraph::cycle(n).unwrap(), &unit_params()).unwrap()
    }

    #[test]
    fn basis_n2() {
        let b = DftBasis::new(2).unwrap();
        let r = 1.0 / 2f64.sqrt();
        let want = [[r, r], [r, -r]];
        for i in 0..2 {
            for j in 0..2 {
                assert!(close(b.f[(i, j)], c64::new(want[i][j], 0.0), 1e-15));
            }
        }
        let f_pr = b.f_pr();
        let proj = f_pr.adjoint() * f_pr;
        let want = [[0.5, -0.5], [-0.5, 0.5]];
        for i in 0..2 {
            for j in 0..2 {
                assert!(close(proj[(i, j)], c64::new(want[i][j], 0.0), 1e-15));
            }
        }
    }

    #[test]
    fn basis_unitary_n64() {
        assert!(DftBasis::new(64).unwrap().unitarity_error() <= 1e-13);
    }

    #[test]
    fn lambda_tilde_small_cases() {
        // n = 2: the only nonzero eigenvalue of (S − I)² = [[2,−2],[−2,2]] is 4
        assert!(close(lambda_tilde(2)[0], c64::new(4.0, 0.0), 1e-15));
        let lt = lambda_tilde(4);
        assert!(close(lt[0], c64::new(0.0, -2.0), 1e-15));
        assert!(close(lt[1], c64::new(4.0, 0.0), 1e-15));
        assert!(close(lt[2], c64::new(0.0, 2.0), 1e-15));
        assert!(lambda_tilde(97).iter().all(|v| v.norm() > 0.0));
    }

    #[test]
    fn lambda_tilde_matches_dense_eigenvalues() {
        for n in [4usize, 7, 12] {
            let m = cycle_system(n);
            let d = m.difference();
            let d2 = &d * &d;
            let mut ev = d2.eigenvalues().unwrap();
            // drop the zero eigenvalue
            ev.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
            assert!(ev[0].norm() < 1e-12);
            assert_multiset(&ev[1..], &lambda_tilde(n), 1e-12);
        }
    }

    #[test]
    fn cycle_k_is_diagonal() {
        let m = cycle_system(4);
        let proj = project_system(&m, &DftBasis::new(4).unwrap()).unwrap();
        let want = [2.0, 4.0, 2.0];
        for i in 0..3 {
            for j in 0..3 {
                let w = if i == j { want[i] } else { 0.0 };
                assert!(
                    close(proj.k[(i, j)], c64::new(w, 0.0), 1e-13),
                    "{i},{j}: {}",
                    proj.k[(i, j)]
                );
            }
        }
    }

    #[test]
    fn cycle_gamma2_closed_form() {
        for n in [4usize, 8] {
            let proj = project_system(&cycle_system(n), &DftBasis::new(n).unwrap()).unwrap();
            let got = gamma2_spectrum(&proj).unwrap();
            let want: Vec<c64> = (1..n).map(|k| -root_of_unity(n, k)).collect();
            assert_multiset(&got, &want, 1e-10);
        }
    }

    #[test]
    fn gamma2_sorted() {
        let proj = project_system(&cycle_system(9), &DftBasis::new(9).unwrap()).unwrap();
        let g = gamma2_spectrum(&proj).unwrap();
        assert!(g.windows(2).all(|w| cmp_complex(&w[0], &w[1]).is_le()));
    }

    #[test]
    fn k_equals_scaled_projected_capacitance() {
        let mut p = unit_params();
        p.c0_farads = 3.3e-12;
        let g = WindingGraph::from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 2), (3, 5)]).unwrap();
        let m = SystemMatrices::assemble(&g, &p).unwrap();
        let basis = DftBasis::new(6).unwrap();
        let proj = project_system(&m, &basis).unwrap();
        let c = to_complex(m.c.as_ref());
        let f_pr = basis.f_pr();
        let via_c = f_pr * &c * f_pr.adjoint() * faer::Scale(c64::new(1.0 / p.c0_farads, 0.0));
        assert!((&via_c - &proj.k).norm_l2() <= 1e-12 * proj.k.norm_l2());
    }

    #[test]
    fn quadratic_examples() {
        // γ² = 0 → {0, −R₀/(Mα)}
        let p = PickupParams {
            r_dc_ohms: 6.0,
            m_henries: 2.0,
            alpha: 0.5,
            c0_farads: 1.0,
            d: 6,
        };
        let modes = natural_frequencies(&[c64::new(0.0, 0.0)], &p, 3).unwrap();
        assert!(close(modes[0].s, c64::new(0.0, 0.0), 1e-15));
        assert!(close(modes[1].s, c64::new(-2.0, 0.0), 1e-15));

        // lossless, γ² = −c → ±i√(c/(MαC₀))
        let p = PickupParams {
            r_dc_ohms: 0.0,
            m_henries: 2.0,
            alpha: 0.5,
            c0_farads: 0.25,
            d: 6,
        };
        let modes = natural_frequencies(&[c64::new(-4.0, 0.0)], &p, 3).unwrap();
        let w = (4.0f64 / 0.25).sqrt();
        assert!(close(modes[0].s, c64::new(0.0, w), 1e-12));
        assert!(close(modes[1].s, c64::new(0.0, -w), 1e-12));

        // R₀ = C₀ = Mα = 1, γ² = −1 → (−1 ± i√3)/2
        let p = PickupParams {
            r_dc_ohms: 3.0,
            m_henries: 1.0,
            alpha: 1.0,
            c0_farads: 1.0,
            d: 6,
        };
        let modes = natural_frequencies(&[c64::new(-1.0, 0.0)], &p, 3).unwrap();
        let r3 = 3f64.sqrt() / 2.0;
        assert!(close(modes[0].s, c64::new(-0.5, r3), 1e-14));
        assert!(close(modes[1].s, c64::new(-0.5, -r3), 1e-14));
        for m in &modes {
            assert!((m.s.norm() - 1.0).abs() < 1e-14);
            assert!(close(gamma2_of_s(m.s, &p, 3), c64::new(-1.0, 0.0), 1e-14));
        }
    }

    #[test]
    fn single_root_without_inductance() {
        let p = PickupParams {
            r_dc_ohms: 6.0,
            m_henries: 1.0,
            alpha: 0.0,
            c0_farads: 0.5,
            d: 6,
        };
        let modes = natural_frequencies(&[c64::new(2.0, 1.0)], &p, 3).unwrap();
        assert_eq!(modes.len(), 1);
        assert_eq!(modes[0].branch, Branch::Single);
        assert!(close(modes[0].s, c64::new(2.0, 1.0), 1e-15));

        let p = PickupParams { r_dc_ohms: 0.0, ..p };
        assert!(matches!(
            natural_frequencies(&[c64::new(1.0, 0.0)], &p, 3),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn residuals_detect_detuning() {
        let m = cycle_system(4);
        let proj = project_system(&m, &DftBasis::new(4).unwrap()).unwrap();
        let exact: Vec<c64> = (1..4).map(|k| -root_of_unity(4, k)).collect();
        // with R₀ = 0 and MαC₀ = 1, s² = γ²
        let s: Vec<c64> = exact.iter().map(|g| g.sqrt()).collect();
        let rep = residual_check(&proj, &m.params, &s).unwrap();
        assert!(rep.max <= 1e-12, "{rep:?}");
        let detuned: Vec<c64> = s.iter().map(|v| v * 1.01).collect();
        let rep = residual_check(&proj, &m.params, &detuned).unwrap();
        assert!(rep.per_mode.iter().all(|&r| r > 1e-4), "{rep:?}");
    }

    #[test]
    fn compute_modes_counts_and_residuals() {
        let p = PickupParams {
            r_dc_ohms: 5.0,
            m_henries: 1e-3,
            alpha: 0.2,
            c0_farads: 1e-6,
            d: 6,
        };
        let g = WindingGraph::from_edges(7, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (0, 3), (2, 6)]).unwrap();
        let m = SystemMatrices::assemble(&g, &p).unwrap();
        let (set, proj, pencil) = compute_modes(&m, None).unwrap();
        assert_eq!(set.gamma2.len(), 6);
        assert_eq!(set.modes.len(), 12);
        assert!(set.residual.as_ref().unwrap().max <= 1e-8);
        let bound = residual_bound(&proj, &pencil, &p, &set.modes).unwrap();
        assert!(bound.max <= 1e-8, "{bound:?}");
        assert!(conjugation_error(&set.s_values()) <= 1e-8);
    }
}
