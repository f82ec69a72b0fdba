//! File formats: JSON for structured data, Matrix Market for the contact
//! graph, CSV for tables and RIFF/WAVE for audio.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use faer::c64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assembly::PickupParams;
use crate::compare::ComparisonReport;
use crate::error::{Error, Result};
use crate::graph::WindingGraph;
use crate::spectral::{Branch, Mode, ModeSet, ResidualMethod};
use crate::synthesis::{ReductionReport, Waveform};
use crate::winding::{WindingLayout, WindingSpec};

pub const FORMAT_VERSION: &str = "pickup/1";

/// Writes through a sibling temporary file so a failed run never leaves a
/// truncated output behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.partial", name.to_string_lossy()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn check_version(found: &str, path_hint: &str) -> Result<()> {
    if found != FORMAT_VERSION {
        return Err(Error::Parse(format!(
            "{path_hint}: format_version {found:?}, expected {FORMAT_VERSION:?}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayoutFile {
    pub format_version: String,
    pub layout_hash: String,
    pub spec: WindingSpec,
    pub contact_epsilon: f64,
    pub positions: Vec<[f64; 2]>,
    pub turn_length: Vec<f64>,
    pub edges: Vec<[usize; 2]>,
}

impl LayoutFile {
    pub fn new(layout: &WindingLayout, graph: &WindingGraph, contact_epsilon: f64) -> Self {
        Self {
            format_version: FORMAT_VERSION.into(),
            layout_hash: layout.hash_hex(),
            spec: layout.spec.clone(),
            contact_epsilon,
            positions: layout.positions.clone(),
            turn_length: layout.turn_length.clone(),
            edges: graph.edges.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }

    /// Validates the stored layout and checks that the stored hash matches.
    pub fn into_layout(self) -> Result<(WindingLayout, f64)> {
        check_version(&self.format_version, "layout file")?;
        let layout = WindingLayout::from_parts(self.spec, self.positions, self.turn_length)?;
        if layout.hash_hex() != self.layout_hash {
            return Err(Error::Parse("layout hash does not match the stored positions".into()));
        }
        Ok((layout, self.contact_epsilon))
    }
}

/// SHA-256 of a graph given without a layout: `n` then each sorted edge
/// `(i, j)`, all as little-endian u64.
pub fn graph_hash(graph: &WindingGraph) -> String {
    let mut h = Sha256::new();
    h.update((graph.n as u64).to_le_bytes());
    for &(a, b) in &graph.edges {
        h.update((a as u64).to_le_bytes());
        h.update((b as u64).to_le_bytes());
    }
    hex::encode(h.finalize())
}

fn pair(v: c64) -> [f64; 2] {
    [v.re, v.im]
}

fn unpair(v: [f64; 2]) -> c64 {
    c64::new(v[0], v[1])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModesFile {
    pub format_version: String,
    pub n: usize,
    pub layout_hash: String,
    pub params: PickupParams,
    pub gamma2: Vec<[f64; 2]>,
    pub s: Vec<[f64; 2]>,
    /// Index into `gamma2` for each entry of `s`.
    pub gamma2_index: Vec<usize>,
    pub branch: Vec<Branch>,
    pub residual_max: Option<f64>,
    pub residual_method: Option<ResidualMethod>,
}

impl ModesFile {
    pub fn new(set: &ModeSet) -> Self {
        Self {
            format_version: FORMAT_VERSION.into(),
            n: set.n,
            layout_hash: set.layout_hash.clone().unwrap_or_default(),
            params: set.params,
            gamma2: set.gamma2.iter().copied().map(pair).collect(),
            s: set.modes.iter().map(|m| pair(m.s)).collect(),
            gamma2_index: set.modes.iter().map(|m| m.gamma2_index).collect(),
            branch: set.modes.iter().map(|m| m.branch).collect(),
            residual_max: set.residual.as_ref().map(|r| r.max),
            residual_method: set.residual.as_ref().map(|r| r.method),
        }
    }

    pub fn s_values(&self) -> Vec<c64> {
        self.s.iter().copied().map(unpair).collect()
    }

    /// Rebuilds a mode set; residual details beyond the maximum are not stored.
    pub fn into_mode_set(self) -> Result<ModeSet> {
        check_version(&self.format_version, "modes file")?;
        if self.s.len() != self.branch.len() || self.s.len() != self.gamma2_index.len() {
            return Err(Error::Parse(
                "modes file: s, branch and gamma2_index lengths differ".into(),
            ));
        }
        if self.gamma2_index.iter().any(|&i| i >= self.gamma2.len()) {
            return Err(Error::Parse("modes file: gamma2_index out of range".into()));
        }
        let modes = self
            .s
            .iter()
            .zip(&self.gamma2_index)
            .zip(&self.branch)
            .map(|((&s, &gamma2_index), &branch)| Mode {
                s: unpair(s),
                gamma2_index,
                branch,
            })
            .collect();
        Ok(ModeSet {
            n: self.n,
            layout_hash: Some(self.layout_hash),
            params: self.params,
            gamma2: self.gamma2.into_iter().map(unpair).collect(),
            modes,
            residual: None,
        })
    }
}

/// One row per mode: `k, re_gamma2, im_gamma2, re_s, im_s, branch`, with `k`
/// the 1-based index of the mode's `γ²`.
pub fn modes_csv(set: &ModeSet) -> String {
    let mut out = String::from("k,re_gamma2,im_gamma2,re_s,im_s,branch\n");
    for m in &set.modes {
        let g = set.gamma2[m.gamma2_index];
        let _ = writeln!(
            out,
            "{},{:e},{:e},{:e},{:e},{}",
            m.gamma2_index + 1,
            g.re,
            g.im,
            m.s.re,
            m.s.im,
            m.branch.as_str()
        );
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonFile {
    pub format_version: String,
    pub layout_hash: String,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(flatten)]
    pub report: ComparisonReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionFile {
    pub format_version: String,
    pub layout_hash: String,
    pub sample_rate: u32,
    pub duration: f64,
    pub total_modes: usize,
    pub max_growth_rate: f64,
    #[serde(flatten)]
    pub report: ReductionReport,
}

/// Lower triangle of the adjacency as a `pattern symmetric` coordinate file.
pub fn adjacency_to_matrix_market(graph: &WindingGraph) -> String {
    let mut out = String::from("%%MatrixMarket matrix coordinate pattern symmetric\n");
    let _ = writeln!(out, "{} {} {}", graph.n, graph.n, graph.edges.len());
    for &(a, b) in &graph.edges {
        let _ = writeln!(out, "{} {}", b + 1, a + 1);
    }
    out
}

/// Reads a square coordinate Matrix Market file as an undirected graph.
/// Every stored nonzero off-diagonal entry becomes an edge; `general`
/// files must be structurally symmetric.
pub fn adjacency_from_matrix_market(text: &str) -> Result<WindingGraph> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty Matrix Market file".into()))?
        .to_ascii_lowercase();
    let words: Vec<&str> = header.split_whitespace().collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" || words[2] != "coordinate" {
        return Err(Error::Parse(format!("unsupported Matrix Market header: {header:?}")));
    }
    let field = words[3];
    if !matches!(field, "pattern" | "real" | "integer") {
        return Err(Error::Parse(format!("unsupported Matrix Market field {field:?}")));
    }
    let symmetric = match words[4] {
        "symmetric" => true,
        "general" => false,
        other => return Err(Error::Parse(format!("unsupported Matrix Market symmetry {other:?}"))),
    };

    let mut body = lines.filter(|l| !l.trim_start().starts_with('%') && !l.trim().is_empty());
    let size = body.next().ok_or_else(|| Error::Parse("missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|w| w.parse().map_err(|_| Error::Parse(format!("bad size line {size:?}"))))
        .collect::<Result<_>>()?;
    let [rows, cols, nnz] = dims[..] else {
        return Err(Error::Parse(format!("bad size line {size:?}")));
    };
    if rows != cols {
        return Err(Error::Parse(format!("adjacency must be square, got {rows}x{cols}")));
    }

    let mut edges = Vec::with_capacity(nnz);
    let mut directed = std::collections::BTreeSet::new();
    let mut count = 0;
    for line in body {
        count += 1;
        let parts: Vec<&str> = line.split_whitespace().collect();
        let want = if field == "pattern" { 2 } else { 3 };
        if parts.len() != want {
            return Err(Error::Parse(format!("bad entry line {line:?}")));
        }
        let idx = |w: &str| -> Result<usize> {
            let v: usize = w.parse().map_err(|_| Error::Parse(format!("bad index in {line:?}")))?;
            if v == 0 || v > rows {
                return Err(Error::Parse(format!("index out of range in {line:?}")));
            }
            Ok(v - 1)
        };
        let (i, j) = (idx(parts[0])?, idx(parts[1])?);
        if field != "pattern" {
            let v: f64 = parts[2]
                .parse()
                .map_err(|_| Error::Parse(format!("bad value in {line:?}")))?;
            if v == 0.0 {
                continue;
            }
        }
        if i == j {
            return Err(Error::Parse(format!("diagonal entry at node {}", i + 1)));
        }
        if !symmetric {
            directed.insert((i, j));
        }
        edges.push((i, j));
    }
    if count != nnz {
        return Err(Error::Parse(format!("expected {nnz} entries, found {count}")));
    }
    if let Some(&(i, j)) = directed.iter().find(|&&(i, j)| !directed.contains(&(j, i))) {
        return Err(Error::Parse(format!(
            "general adjacency is not symmetric at ({}, {})",
            i + 1,
            j + 1
        )));
    }
    WindingGraph::from_edges(rows, edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WavFormat {
    Pcm16,
    Float32,
}

impl std::str::FromStr for WavFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pcm16" => Ok(WavFormat::Pcm16),
            "float32" => Ok(WavFormat::Float32),
            other => Err(Error::InvalidInput(format!(
                "unknown WAV format {other:?} (pcm16, float32)"
            ))),
        }
    }
}

/// Peak scaling applied to every WAV sample.
pub const WAV_PEAK: f64 = 0.99;

/// Mono RIFF/WAVE bytes, samples scaled so the peak is [`WAV_PEAK`].
///
/// `pcm16` uses the 16-byte `fmt ` chunk (tag 1). `float32` uses an 18-byte
/// `fmt ` chunk (tag 3, `cbSize` 0) followed by a `fact` chunk holding the
/// sample count.
pub fn wav_bytes(wave: &Waveform, format: WavFormat) -> Vec<u8> {
    let peak = wave.samples.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let gain = if peak > 0.0 { WAV_PEAK / peak } else { 0.0 };
    let frames = wave.samples.len() as u32;
    let rate = wave.sample_rate;

    let (tag, bits, fmt_len): (u16, u16, u32) = match format {
        WavFormat::Pcm16 => (1, 16, 16),
        WavFormat::Float32 => (3, 32, 18),
    };
    let block_align = bits / 8;
    let data_len = frames * block_align as u32;
    let fact_len = if format == WavFormat::Float32 { 12 } else { 0 };
    let riff_len = 4 + (8 + fmt_len) + fact_len + (8 + data_len);

    let mut out = Vec::with_capacity(8 + riff_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&riff_len.to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&fmt_len.to_le_bytes());
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * block_align as u32).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    if format == WavFormat::Float32 {
        out.extend_from_slice(&0u16.to_le_bytes());
        out.extend_from_slice(b"fact");
        out.extend_from_slice(&4u32.to_le_bytes());
        out.extend_from_slice(&frames.to_le_bytes());
    }
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &x in &wave.samples {
        let y = x * gain;
        match format {
            WavFormat::Pcm16 => {
                let q = (y * 32767.0).round().clamp(-32768.0, 32767.0) as i16;
                out.extend_from_slice(&q.to_le_bytes());
            }
            WavFormat::Float32 => out.extend_from_slice(&(y as f32).to_le_bytes()),
        }
    }
    out
}
