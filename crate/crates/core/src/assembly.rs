//! Per-turn network matrices of the short-circuited coil.
//!
//! All matrices are dense `n × n`, indexed by winding order:
//!
//! * `S`, the cyclic shift `S e_k = e_{k+1 mod n}`
//! * `R = (R_DC / n)·I`
//! * `L = M(α·I + 1·1ᵀ)`
//! * `C = C₀(d·I − A + B)`, with `B = diag(deg − d)` so that `C/C₀` is the
//!   graph Laplacian of the turn-contact graph.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WindingGraph;

/// Relative tolerance for the commutation identities.
pub const COMMUTATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PickupParams {
    /// Total DC resistance of the coil, Ω. Zero selects the lossless limit.
    pub r_dc_ohms: f64,
    /// Mutual inductance between any two turns, H.
    pub m_henries: f64,
    /// Deviation from perfect coupling.
    pub alpha: f64,
    /// Capacitance between two touching turns, F.
    pub c0_farads: f64,
    /// Interior node degree.
    #[serde(default = "default_degree")]
    pub d: u32,
}

fn default_degree() -> u32 {
    6
}

impl Default for PickupParams {
    /// Illustrative values only; they are not measurements of any pickup.
    fn default() -> Self {
        Self {
            r_dc_ohms: 7500.0,
            m_henries: 1e-4,
            alpha: 0.1,
            c0_farads: 1e-5,
            d: 6,
        }
    }
}

impl PickupParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.r_dc_ohms, self.m_henries, self.alpha, self.c0_farads]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("pickup parameters must be finite".into()));
        }
        if self.r_dc_ohms < 0.0 {
            return Err(Error::InvalidInput(format!(
                "r_dc_ohms must be >= 0, got {}",
                self.r_dc_ohms
            )));
        }
        if self.m_henries <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "m_henries must be > 0, got {}",
                self.m_henries
            )));
        }
        if self.alpha < 0.0 {
            return Err(Error::InvalidInput(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if self.c0_farads <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "c0_farads must be > 0, got {}",
                self.c0_farads
            )));
        }
        if self.d < 1 {
            return Err(Error::InvalidInput("d must be at least 1".into()));
        }
        Ok(())
    }

    /// Resistance of one turn.
    pub fn r0(&self, n: usize) -> f64 {
        self.r_dc_ohms / n as f64
    }

    pub fn m_alpha(&self) -> f64 {
        self.m_henries * self.alpha
    }
}

pub fn shift_matrix(n: usize) -> Mat<f64> {
    Mat::from_fn(n, n, |i, j| if j == (i + n - 1) % n { 1.0 } else { 0.0 })
}

pub fn resistance_matrix(params: &PickupParams, n: usize) -> Mat<f64> {
    let r0 = params.r0(n);
    Mat::from_fn(n, n, |i, j| if i == j { r0 } else { 0.0 })
}

pub fn inductance_matrix(params: &PickupParams, n: usize) -> Mat<f64> {
    let m = params.m_henries;
    let diag = m * (params.alpha + 1.0);
    Mat::from_fn(n, n, |i, j| if i == j { diag } else { m })
}

/// Returns `(C, B)`.
pub fn capacitance_matrix(graph: &WindingGraph, params: &PickupParams) -> Result<(Mat<f64>, Mat<f64>)> {
    let components = graph.components();
    if components.len() > 1 {
        return Err(Error::Disconnected { components });
    }
    let n = graph.n;
    let d = params.d as f64;
    let b = Mat::from_fn(n, n, |i, j| if i == j { graph.degree[i] as f64 - d } else { 0.0 });
    let mut c = graph.laplacian();
    for j in 0..n {
        for i in 0..n {
            c[(i, j)] *= params.c0_farads;
        }
    }
    Ok((c, b))
}

#[derive(Debug, Clone)]
pub struct SystemMatrices {
    pub n: usize,
    pub params: PickupParams,
    pub s: Mat<f64>,
    pub r: Mat<f64>,
    pub l: Mat<f64>,
    pub c: Mat<f64>,
    pub b: Mat<f64>,
    pub a: Mat<f64>,
}

impl SystemMatrices {
    pub fn assemble(graph: &WindingGraph, params: &PickupParams) -> Result<Self> {
        params.validate()?;
        if graph.n < 3 {
            return Err(Error::InvalidInput(format!("need at least 3 turns, got {}", graph.n)));
        }
        let n = graph.n;
        let (c, b) = capacitance_matrix(graph, params)?;
        Ok(Self {
            n,
            params: *params,
            s: shift_matrix(n),
            r: resistance_matrix(params, n),
            l: inductance_matrix(params, n),
            c,
            b,
            a: graph.adjacency_matrix(),
        })
    }

    /// `S − I`.
    pub fn difference(&self) -> Mat<f64> {
        let mut d = self.s.clone();
        for i in 0..self.n {
            d[(i, i)] -= 1.0;
        }
        d
    }

    /// `d·I − A + B`, i.e. `C / C₀` before scaling.
    pub fn stiffness(&self) -> Mat<f64> {
        let d = self.params.d as f64;
        Mat::from_fn(self.n, self.n, |i, j| {
            let diag = if i == j { d } else { 0.0 };
            diag - self.a[(i, j)] + self.b[(i, j)]
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CommutationReport {
    /// `‖CL − αM·C‖ / (‖C‖‖L‖)`
    pub cl: f64,
    /// `‖LC − αM·C‖ / (‖C‖‖L‖)`
    pub lc: f64,
    /// `‖(S−I)L − αM(S−I)‖ / (‖S−I‖‖L‖)`
    pub dl: f64,
    /// `‖L(S−I) − αM(S−I)‖ / (‖S−I‖‖L‖)`
    pub ld: f64,
    /// `‖(CS − SC) − C₀((B−A)S − S(B−A))‖ / (‖C‖‖S‖)`
    pub cs_identity: f64,
    /// `‖CS − SC‖ / (‖C‖‖S‖)`; nonzero in general.
    pub cs_commutator: f64,
    /// `‖C·1‖₂`
    pub c_null: f64,
    /// `n·ε·‖C‖`
    pub c_null_bound: f64,
}

impl CommutationReport {
    pub fn passed(&self) -> bool {
        [self.cl, self.lc, self.dl, self.ld, self.cs_identity]
            .iter()
            .all(|&v| v <= COMMUTATION_TOLERANCE)
            && self.c_null <= self.c_null_bound
    }
}

fn rel(diff: Mat<f64>, scale: f64) -> f64 {
    let norm = diff.norm_l2();
    if scale == 0.0 {
        norm
    } else {
        norm / scale
    }
}

pub fn verify_commutations(m: &SystemMatrices) -> CommutationReport {
    let n = m.n;
    let am = m.params.m_alpha();
    let c0 = m.params.c0_farads;
    let dm = m.difference();
    let am_c = &m.c * faer::Scale(am);
    let am_d = &dm * faer::Scale(am);
    let c_norm = m.c.norm_l2();
    let l_norm = m.l.norm_l2();
    let d_norm = dm.norm_l2();
    let s_norm = m.s.norm_l2();

    let cs = &m.c * &m.s - &m.s * &m.c;
    let ba = &m.b - &m.a;
    let rhs = (&ba * &m.s - &m.s * &ba) * faer::Scale(c0);

    let ones = Mat::<f64>::from_fn(n, 1, |_, _| 1.0);
    let c_ones = &m.c * &ones;

    CommutationReport {
        cl: rel(&m.c * &m.l - &am_c, c_norm * l_norm),
        lc: rel(&m.l * &m.c - &am_c, c_norm * l_norm),
        dl: rel(&dm * &m.l - &am_d, d_norm * l_norm),
        ld: rel(&m.l * &dm - &am_d, d_norm * l_norm),
        cs_identity: rel(&cs - &rhs, c_norm * s_norm),
        cs_commutator: rel(cs, c_norm * s_norm),
        c_null: c_ones.norm_l2(),
        c_null_bound: n as f64 * f64::EPSILON * c_norm,
    }
}
