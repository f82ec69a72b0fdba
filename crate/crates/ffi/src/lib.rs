//! C ABI over `pickup_core`.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `pk_*_free`. Every fallible call returns a [`PkStatus`]; on
//! failure [`pk_last_error_message`] describes the error on the calling
//! thread. Array getters take a capacity and report the required length, so
//! passing a null buffer queries the size.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pickup_core::assembly::PickupParams;
use pickup_core::cli::{generate, modal_model};
use pickup_core::graph::WindingGraph;
use pickup_core::io::{wav_bytes, WavFormat};
use pickup_core::spectral::ModeSet;
use pickup_core::synthesis::{modal_response, truncate_modes, ModalModel, Ranking, Waveform};
use pickup_core::winding::{Pattern, WindingLayout, WindingSpec};
use pickup_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PkStatus {
    Ok = 0,
    InvalidInput = 1,
    CapacityExceeded = 2,
    ScatterDeadlock = 3,
    Disconnected = 4,
    NotPositiveDefinite = 5,
    Eigen = 6,
    Degenerate = 7,
    Excitation = 8,
    NonFinite = 9,
    Parse = 10,
    Io = 11,
    NullPointer = 12,
    BufferTooSmall = 13,
    Panic = 14,
}

impl From<&Error> for PkStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidInput(_) => PkStatus::InvalidInput,
            Error::CapacityExceeded { .. } => PkStatus::CapacityExceeded,
            Error::ScatterDeadlock { .. } => PkStatus::ScatterDeadlock,
            Error::Disconnected { .. } => PkStatus::Disconnected,
            Error::NotPositiveDefinite(_) => PkStatus::NotPositiveDefinite,
            Error::Eigen(_) => PkStatus::Eigen,
            Error::Degenerate(_) => PkStatus::Degenerate,
            Error::Excitation(_) => PkStatus::Excitation,
            Error::NonFinite { .. } => PkStatus::NonFinite,
            Error::Parse(_) | Error::Json(_) => PkStatus::Parse,
            Error::Io(_) => PkStatus::Io,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PkPattern {
    Machine = 0,
    Scatter = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PkRanking {
    AbsS = 0,
    Energy = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PkWavFormat {
    Pcm16 = 0,
    Float32 = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PkWindingSpec {
    pub n_turns: usize,
    pub wire_diameter: f64,
    pub window_columns: usize,
    pub max_layers: usize,
    /// A `PkPattern` value.
    pub pattern: u32,
    pub scatter_traverse_sigma: f64,
    pub seed: u64,
}

impl TryFrom<&PkWindingSpec> for WindingSpec {
    type Error = (PkStatus, String);

    fn try_from(s: &PkWindingSpec) -> Result<Self, Self::Error> {
        let pattern = match s.pattern {
            x if x == PkPattern::Machine as u32 => Pattern::Machine,
            x if x == PkPattern::Scatter as u32 => Pattern::Scatter,
            other => return Err(invalid(format!("unknown pattern {other}"))),
        };
        Ok(WindingSpec {
            n_turns: s.n_turns,
            wire_diameter: s.wire_diameter,
            window_columns: s.window_columns,
            max_layers: s.max_layers,
            pattern,
            scatter_traverse_sigma: s.scatter_traverse_sigma,
            seed: s.seed,
        })
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PkParams {
    pub r_dc_ohms: f64,
    pub m_henries: f64,
    pub alpha: f64,
    pub c0_farads: f64,
    pub d: u32,
}

impl From<&PkParams> for PickupParams {
    fn from(p: &PkParams) -> Self {
        PickupParams {
            r_dc_ohms: p.r_dc_ohms,
            m_henries: p.m_henries,
            alpha: p.alpha,
            c0_farads: p.c0_farads,
            d: p.d,
        }
    }
}

/// A winding layout and its contact graph.
pub struct PkLayout {
    layout: WindingLayout,
    graph: WindingGraph,
}

impl PkLayout {
    fn layout_edges(&self) -> Vec<usize> {
        self.graph.edges.iter().flat_map(|&(a, b)| [a, b]).collect()
    }
}

/// Natural frequencies with residues under the default excitation.
pub struct PkModes {
    set: ModeSet,
    model: ModalModel,
}

pub struct PkWaveform {
    wave: Waveform,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), (PkStatus, String)>) -> PkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PkStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PkStatus::Panic
        }
    }
}

fn core_err(e: Error) -> (PkStatus, String) {
    (PkStatus::from(&e), e.to_string())
}

fn invalid(msg: String) -> (PkStatus, String) {
    (PkStatus::InvalidInput, msg)
}

fn null(what: &str) -> (PkStatus, String) {
    (PkStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (PkStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Copies `src` into `buf` when it fits; always stores the length in `len`.
unsafe fn fill<T: Copy>(src: &[T], buf: *mut T, cap: usize, len: *mut usize) -> Result<(), (PkStatus, String)> {
    if len.is_null() {
        return Err(null("len"));
    }
    *len = src.len();
    if buf.is_null() {
        return Ok(());
    }
    if cap < src.len() {
        return Err((
            PkStatus::BufferTooSmall,
            format!("need {} entries, capacity {cap}", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` must be null or point to writable memory for one `PkWindingSpec`.
#[no_mangle]
pub unsafe extern "C" fn pk_winding_spec_default(out: *mut PkWindingSpec) -> PkStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let s = WindingSpec::default();
        *out = PkWindingSpec {
            n_turns: s.n_turns,
            wire_diameter: s.wire_diameter,
            window_columns: s.window_columns,
            max_layers: s.max_layers,
            pattern: PkPattern::Scatter as u32,
            scatter_traverse_sigma: s.scatter_traverse_sigma,
            seed: s.seed,
        };
        Ok(())
    })
}

/// # Safety
/// `out` must be null or point to writable memory for one `PkParams`.
#[no_mangle]
pub unsafe extern "C" fn pk_params_default(out: *mut PkParams) -> PkStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let p = PickupParams::default();
        *out = PkParams {
            r_dc_ohms: p.r_dc_ohms,
            m_henries: p.m_henries,
            alpha: p.alpha,
            c0_farads: p.c0_farads,
            d: p.d,
        };
        Ok(())
    })
}

/// Generates a layout and its contact graph.
///
/// # Safety
/// `spec` must point to a valid `PkWindingSpec`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pk_layout_generate(
    spec: *const PkWindingSpec,
    contact_epsilon: f64,
    out: *mut *mut PkLayout,
) -> PkStatus {
    guard(|| {
        let spec = deref(spec, "spec")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let (layout, graph) = generate(&WindingSpec::try_from(spec)?, contact_epsilon).map_err(core_err)?;
        *out = Box::into_raw(Box::new(PkLayout { layout, graph }));
        Ok(())
    })
}

/// # Safety
/// `layout` must be null or a handle from `pk_layout_generate`, freed once.
#[no_mangle]
pub unsafe extern "C" fn pk_layout_free(layout: *mut PkLayout) {
    if !layout.is_null() {
        drop(Box::from_raw(layout));
    }
}

/// # Safety
/// `layout` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pk_layout_n_turns(layout: *const PkLayout, out: *mut usize) -> PkStatus {
    guard(|| {
        let l = deref(layout, "layout")?;
        *out.as_mut().ok_or_else(|| null("out"))? = l.layout.n_turns();
        Ok(())
    })
}

/// Writes the 64 hex digits of the layout hash plus a NUL into `buf`.
///
/// # Safety
/// `layout` must be a live handle; `buf` must hold `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn pk_layout_hash(layout: *const PkLayout, buf: *mut c_char, cap: usize) -> PkStatus {
    guard(|| {
        let l = deref(layout, "layout")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let hex = CString::new(l.layout.hash_hex()).expect("hex has no NUL");
        let bytes = hex.as_bytes_with_nul();
        if cap < bytes.len() {
            return Err((PkStatus::BufferTooSmall, format!("need {} bytes", bytes.len())));
        }
        ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, bytes.len());
        Ok(())
    })
}

/// Contact edges as flattened `(i, j)` pairs with `i < j`; `len` receives
/// twice the edge count.
///
/// # Safety
/// `layout` must be a live handle; `buf` null or holding `cap` entries.
#[no_mangle]
pub unsafe extern "C" fn pk_layout_edges(
    layout: *const PkLayout,
    buf: *mut usize,
    cap: usize,
    len: *mut usize,
) -> PkStatus {
    guard(|| {
        let l = deref(layout, "layout")?;
        let flat: Vec<usize> = l.layout_edges();
        fill(&flat, buf, cap, len)
    })
}

/// Natural frequencies and residues for a layout.
///
/// # Safety
/// `layout` and `params` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pk_modes_compute(
    layout: *const PkLayout,
    params: *const PkParams,
    out: *mut *mut PkModes,
) -> PkStatus {
    guard(|| {
        let l = deref(layout, "layout")?;
        let p = deref(params, "params")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let (set, model) = modal_model(&l.layout, &l.graph, &PickupParams::from(p)).map_err(core_err)?;
        *out = Box::into_raw(Box::new(PkModes { set, model }));
        Ok(())
    })
}

/// # Safety
/// `modes` must be null or a handle from `pk_modes_compute`, freed once.
#[no_mangle]
pub unsafe extern "C" fn pk_modes_free(modes: *mut PkModes) {
    if !modes.is_null() {
        drop(Box::from_raw(modes));
    }
}

/// Natural frequencies as interleaved `(re, im)`; `len` receives twice the
/// mode count.
///
/// # Safety
/// `modes` must be a live handle; `buf` null or holding `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn pk_modes_s(modes: *const PkModes, buf: *mut f64, cap: usize, len: *mut usize) -> PkStatus {
    guard(|| {
        let m = deref(modes, "modes")?;
        let flat: Vec<f64> = m.set.modes.iter().flat_map(|md| [md.s.re, md.s.im]).collect();
        fill(&flat, buf, cap, len)
    })
}

/// `γ²` eigenvalues as interleaved `(re, im)`.
///
/// # Safety
/// `modes` must be a live handle; `buf` null or holding `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn pk_modes_gamma2(
    modes: *const PkModes,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> PkStatus {
    guard(|| {
        let m = deref(modes, "modes")?;
        let flat: Vec<f64> = m.set.gamma2.iter().flat_map(|g| [g.re, g.im]).collect();
        fill(&flat, buf, cap, len)
    })
}

/// Largest normalised smallest singular value over all modes.
///
/// # Safety
/// `modes` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pk_modes_residual_max(modes: *const PkModes, out: *mut f64) -> PkStatus {
    guard(|| {
        let m = deref(modes, "modes")?;
        let r = m.set.residual.as_ref().map_or(f64::NAN, |r| r.max);
        *out.as_mut().ok_or_else(|| null("out"))? = r;
        Ok(())
    })
}

/// Impulse response sampled at `sample_rate` for `duration` seconds, keeping
/// `truncate` modes ranked by a `PkRanking` value (0 keeps all).
///
/// # Safety
/// `modes` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pk_synthesize(
    modes: *const PkModes,
    sample_rate: u32,
    duration: f64,
    truncate: usize,
    ranking: u32,
    out: *mut *mut PkWaveform,
) -> PkStatus {
    guard(|| {
        let m = deref(modes, "modes")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let model = if truncate == 0 {
            m.model.clone()
        } else {
            let rank = match ranking {
                x if x == PkRanking::AbsS as u32 => Ranking::AbsS,
                x if x == PkRanking::Energy as u32 => Ranking::Energy,
                other => return Err(invalid(format!("unknown ranking {other}"))),
            };
            truncate_modes(&m.model, truncate, rank).map_err(core_err)?
        };
        let wave = modal_response(&model, sample_rate, duration).map_err(core_err)?;
        *out = Box::into_raw(Box::new(PkWaveform { wave }));
        Ok(())
    })
}

/// # Safety
/// `wave` must be null or a handle from `pk_synthesize`, freed once.
#[no_mangle]
pub unsafe extern "C" fn pk_waveform_free(wave: *mut PkWaveform) {
    if !wave.is_null() {
        drop(Box::from_raw(wave));
    }
}

/// Borrows the samples; valid while the handle lives.
///
/// # Safety
/// `wave` must be a live handle; `data` and `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pk_waveform_samples(
    wave: *const PkWaveform,
    data: *mut *const f64,
    len: *mut usize,
) -> PkStatus {
    guard(|| {
        let w = deref(wave, "wave")?;
        *data.as_mut().ok_or_else(|| null("data"))? = w.wave.samples.as_ptr();
        *len.as_mut().ok_or_else(|| null("len"))? = w.wave.samples.len();
        Ok(())
    })
}

/// Encodes the waveform as a mono WAV file in a `PkWavFormat`.
///
/// # Safety
/// `wave` must be a live handle; `buf` null or holding `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn pk_waveform_wav(
    wave: *const PkWaveform,
    format: u32,
    buf: *mut u8,
    cap: usize,
    len: *mut usize,
) -> PkStatus {
    guard(|| {
        let w = deref(wave, "wave")?;
        let fmt = match format {
            x if x == PkWavFormat::Pcm16 as u32 => WavFormat::Pcm16,
            x if x == PkWavFormat::Float32 as u32 => WavFormat::Float32,
            other => return Err(invalid(format!("unknown WAV format {other}"))),
        };
        fill(&wav_bytes(&w.wave, fmt), buf, cap, len)
    })
}
