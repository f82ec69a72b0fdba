//! Attack transients by modal superposition, mode truncation and clustering.
//!
//! A unit impulse `u(t) = δ(t)` drives every turn's loop equation with
//! per-turn weight `b`, and the output is `y = cᵀ·I`. Only the parts of `b`
//! and `c` orthogonal to the all-ones vector reach the model.

use std::str::FromStr;

use faer::linalg::solvers::Solve;
use faer::{c64, Mat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{helmert_basis, StateSpace};
use crate::spectral::{root_of_unity, DftBasis, ModeSet, PencilSolution};
use crate::winding::WindingLayout;

pub const DEFAULT_SAMPLE_RATE: u32 = 44_100;
pub const DEFAULT_DURATION_S: f64 = 0.050;
pub const ATTACK_WINDOW_S: f64 = 0.030;
pub const DEFAULT_CLUSTER_REL_GAP: f64 = 0.01;

/// Relative size below which a weight vector counts as having no component
/// off the all-ones direction.
const PROJECTION_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcitationConvention {
    pub drive: Vec<f64>,
    pub observation: Vec<f64>,
}

impl ExcitationConvention {
    /// Drive proportional to turn length, normalised to unit sum; observation
    /// [`uniform_projected_observation`].
    pub fn from_layout(layout: &WindingLayout) -> Result<Self> {
        let total: f64 = layout.turn_length.iter().sum();
        let exc = Self {
            drive: layout.turn_length.iter().map(|l| l / total).collect(),
            observation: uniform_projected_observation(layout.n_turns()),
        };
        exc.validate(layout.n_turns())?;
        Ok(exc)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        for (name, v) in [("drive", &self.drive), ("observation", &self.observation)] {
            if v.len() != n {
                return Err(Error::Excitation(format!(
                    "{name} has {} entries, expected {n}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Excitation(format!("{name} has non-finite entries")));
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if off_ones_norm(v) <= PROJECTION_FLOOR * norm.max(f64::MIN_POSITIVE) {
                return Err(Error::Excitation(format!(
                    "{name} is uniform across turns and vanishes on the 1-complement"
                )));
            }
        }
        Ok(())
    }
}

fn off_ones_norm(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>().sqrt()
}

/// `Pᵀ·1` for the Helmert basis `P`: unit weight on every projected current.
pub fn uniform_projected_observation(n: usize) -> Vec<f64> {
    let p = helmert_basis(n);
    (0..n).map(|j| (0..n - 1).map(|r| p[(r, j)]).sum()).collect()
}

/// Poles and residues of the impulse response `h(t) = Σ ρ_k·e^{s_k t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalModel {
    pub s: Vec<c64>,
    pub residues: Vec<c64>,
}

impl ModalModel {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn max_growth_rate(&self) -> f64 {
        self.s.iter().map(|s| s.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Residues from the DFT-basis pencil. With `Δ = diag(Ω^k − 1)`, drive
/// `ẽ = F_pr b` and observation `ĉ = F_pr c`, mode `s` of eigenvalue `γ²_m`
/// has residue `s·(ĉ†Δx_m)(y_m†KΔ⁻¹ẽ) / (R₀ + 2sMα)`.
pub fn spectral_residues(
    set: &ModeSet,
    pencil: &PencilSolution,
    proj_k: faer::MatRef<'_, c64>,
    exc: &ExcitationConvention,
) -> Result<ModalModel> {
    let n = set.n;
    exc.validate(n)?;
    let basis = DftBasis::new(n)?;
    let f_pr = basis.f_pr();
    let m = n - 1;
    let project = |v: &[f64]| -> Vec<c64> { (0..m).map(|k| (0..n).map(|j| f_pr[(k, j)] * v[j]).sum()).collect() };
    let e = project(&exc.drive);
    let c = project(&exc.observation);
    let delta: Vec<c64> = (1..n).map(|k| root_of_unity(n, k) - 1.0).collect();

    let u: Vec<c64> = c.iter().zip(&delta).map(|(c, d)| d.conj() * c).collect();
    let scaled = Mat::from_fn(m, 1, |k, _| e[k] / delta[k]);
    let w_mat = proj_k * &scaled;
    let w: Vec<c64> = (0..m).map(|k| w_mat[(k, 0)]).collect();
    let (left, right) = pencil.modal_projections(&u, &w)?;

    let r0 = set.params.r0(n);
    let m_alpha = set.params.m_alpha();
    let scale = set.modes.iter().map(|md| md.s.norm()).fold(0.0, f64::max);
    let mut s = Vec::with_capacity(set.modes.len());
    let mut residues = Vec::with_capacity(set.modes.len());
    for mode in &set.modes {
        let denom = mode.s * (2.0 * m_alpha) + r0;
        if denom.norm() <= 1e-12 * (r0 + m_alpha * scale) {
            return Err(Error::Degenerate(format!(
                "repeated natural frequency at s = {}",
                mode.s
            )));
        }
        s.push(mode.s);
        residues.push(mode.s * left[mode.gamma2_index] * right[mode.gamma2_index] / denom);
    }
    Ok(ModalModel { s, residues })
}

/// Input and output maps of the state space for an excitation:
/// `B = [P b / Mα; 0]`, `C = [(P c)ᵀ, 0]`.
pub fn state_space_io(ss: &StateSpace, exc: &ExcitationConvention) -> Result<(Vec<f64>, Vec<f64>)> {
    exc.validate(ss.n)?;
    let m = ss.n - 1;
    let m_alpha = ss.params.m_alpha();
    let mut b = vec![0.0; 2 * m];
    let mut c = vec![0.0; 2 * m];
    for r in 0..m {
        b[r] = (0..ss.n).map(|j| ss.basis[(r, j)] * exc.drive[j]).sum::<f64>() / m_alpha;
        c[r] = (0..ss.n).map(|j| ss.basis[(r, j)] * exc.observation[j]).sum();
    }
    Ok((b, c))
}

/// Residues from an eigendecomposition `A = V·diag(s)·V⁻¹` of the state matrix.
pub fn state_space_residues(ss: &StateSpace, exc: &ExcitationConvention) -> Result<ModalModel> {
    let (b, c) = state_space_io(ss, exc)?;
    let dim = ss.dim();
    let eig = ss
        .a_state
        .eigen()
        .map_err(|e| Error::Eigen(format!("state-space eigensolver failed: {e:?}")))?;
    let v = eig.U();
    let s: Vec<c64> = eig.S().column_vector().iter().copied().collect();
    let b_mat = Mat::from_fn(dim, 1, |i, _| c64::new(b[i], 0.0));
    let wb = v.partial_piv_lu().solve(&b_mat);
    let residues = (0..dim)
        .map(|k| {
            let cv: c64 = (0..dim).map(|i| v[(i, k)] * c[i]).sum();
            cv * wb[(k, 0)]
        })
        .collect();
    Ok(ModalModel { s, residues })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub sample_rate: u32,
    pub duration: f64,
    pub samples: Vec<f64>,
}

pub fn sample_count(sample_rate: u32, duration: f64) -> usize {
    (sample_rate as f64 * duration).round() as usize
}

/// `h(t_j) = Σ_k Re(ρ_k·e^{s_k t_j})` at `t_j = j / rate`.
pub fn modal_response(model: &ModalModel, sample_rate: u32, duration: f64) -> Result<Waveform> {
    if sample_rate == 0 || !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "need a positive sample rate and duration, got {sample_rate} Hz, {duration} s"
        )));
    }
    let len = sample_count(sample_rate, duration);
    let dt = 1.0 / sample_rate as f64;
    let samples: Vec<f64> = (0..len)
        .into_par_iter()
        .map(|j| {
            let t = j as f64 * dt;
            model
                .s
                .iter()
                .zip(&model.residues)
                .map(|(s, r)| (r * (s * t).exp()).re)
                .sum()
        })
        .collect();
    if let Some(index) = samples.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(Waveform {
        sample_rate,
        duration,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ranking {
    /// Smallest `|s|` first.
    AbsS,
    /// Largest `|ρ|² / (2|Re s|)` first.
    Energy,
}

impl FromStr for Ranking {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abs-s" | "abs_s" => Ok(Ranking::AbsS),
            "energy" => Ok(Ranking::Energy),
            other => Err(Error::InvalidInput(format!(
                "unknown ranking {other:?} (abs-s, energy)"
            ))),
        }
    }
}

/// Groups indices into conjugate pairs and real singletons.
fn conjugate_groups(s: &[c64]) -> Vec<Vec<usize>> {
    let scale = s.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let tol = 1e-8 * scale;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[a].im.abs().total_cmp(&s[b].im.abs()).then(a.cmp(&b)));
    let mut used = vec![false; s.len()];
    let mut groups = Vec::new();
    for &i in &order {
        if used[i] {
            continue;
        }
        used[i] = true;
        if s[i].im.abs() <= tol {
            groups.push(vec![i]);
            continue;
        }
        let partner = order
            .iter()
            .copied()
            .filter(|&j| !used[j])
            .map(|j| (j, (s[j] - s[i].conj()).norm()))
            .filter(|&(_, d)| d <= tol)
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        match partner {
            Some((j, _)) => {
                used[j] = true;
                groups.push(vec![i.min(j), i.max(j)]);
            }
            None => groups.push(vec![i]),
        }
    }
    groups
}

fn mode_energy(s: c64, r: c64) -> f64 {
    let decay = 2.0 * s.re.abs();
    if decay == 0.0 {
        f64::INFINITY
    } else {
        r.norm_sqr() / decay
    }
}

/// Keeps at least `k` modes by `ranking`. A conjugate pair straddling the
/// cut is kept whole, so the result can hold `k + 1` modes.
pub fn truncate_modes(model: &ModalModel, k: usize, ranking: Ranking) -> Result<ModalModel> {
    if k == 0 || k > model.len() {
        return Err(Error::InvalidInput(format!(
            "truncation count must lie in 1..={}, got {k}",
            model.len()
        )));
    }
    let groups = conjugate_groups(&model.s);
    let key = |g: &Vec<usize>| -> f64 {
        match ranking {
            Ranking::AbsS => g.iter().map(|&i| model.s[i].norm()).fold(0.0, f64::max),
            Ranking::Energy => -g
                .iter()
                .map(|&i| mode_energy(model.s[i], model.residues[i]))
                .sum::<f64>(),
        }
    };
    let mut ranked: Vec<(f64, &Vec<usize>)> = groups.iter().map(|g| (key(g), g)).collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1[0].cmp(&b.1[0])));
    let mut keep = Vec::new();
    for (_, g) in ranked {
        if keep.len() >= k {
            break;
        }
        keep.extend_from_slice(g);
    }
    keep.sort_unstable();
    Ok(ModalModel {
        s: keep.iter().map(|&i| model.s[i]).collect(),
        residues: keep.iter().map(|&i| model.residues[i]).collect(),
    })
}

/// `‖full − reduced‖₂ / ‖full‖₂` over the first `window_s` seconds.
pub fn attack_error(full: &Waveform, reduced: &Waveform, window_s: f64) -> Result<f64> {
    if full.sample_rate != reduced.sample_rate {
        return Err(Error::InvalidInput(format!(
            "sample rates differ: {} vs {}",
            full.sample_rate, reduced.sample_rate
        )));
    }
    let len = sample_count(full.sample_rate, window_s);
    if len == 0 || full.samples.len() < len || reduced.samples.len() < len {
        return Err(Error::InvalidInput(format!(
            "waveforms shorter than the {window_s} s attack window"
        )));
    }
    let norm = full.samples[..len].iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidInput(
            "reference waveform is zero over the attack window".into(),
        ));
    }
    let diff = full.samples[..len]
        .iter()
        .zip(&reduced.samples[..len])
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(diff / norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterKey {
    /// `|Im s|`, the ring frequency.
    ImagPart,
    Magnitude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub center: f64,
    pub size: usize,
    pub spread: f64,
}

/// Keys below this fraction of the largest `|s|` are rounding noise and
/// count as zero.
pub const CLUSTER_NOISE_FLOOR: f64 = 1e-10;

/// Sorts modes by `key` and starts a new cluster whenever the gap to the
/// previous value exceeds `rel_gap` times the larger of the two.
pub fn cluster_modes(s: &[c64], rel_gap: f64, key: ClusterKey) -> Vec<Cluster> {
    let floor = CLUSTER_NOISE_FLOOR * s.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut values: Vec<f64> = s
        .iter()
        .map(|v| match key {
            ClusterKey::ImagPart => v.im.abs(),
            ClusterKey::Magnitude => v.norm(),
        })
        .map(|x| if x <= floor { 0.0 } else { x })
        .collect();
    values.sort_by(f64::total_cmp);
    let mut groups: Vec<Vec<f64>> = Vec::new();
    for x in values {
        match groups.last_mut() {
            Some(g) if x - g[g.len() - 1] <= rel_gap * x.max(g[g.len() - 1]) => g.push(x),
            _ => groups.push(vec![x]),
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let center = g.iter().sum::<f64>() / g.len() as f64;
            let spread = g.iter().map(|x| (x - center).abs()).fold(0.0, f64::max);
            Cluster {
                center,
                size: g.len(),
                spread,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub kept_modes: usize,
    pub ranking: Option<Ranking>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attack_error: Option<f64>,
    pub cluster_summary: Vec<Cluster>,
}
