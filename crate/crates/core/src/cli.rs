//! The `pickup` command line: gen, modes, oracle, synth, sweep, compare.
//!
//! Settings resolve in three layers: built-in defaults, then a `--config`
//! JSON file holding any subset of [`RunConfig`], then explicit flags.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{PickupParams, SystemMatrices};
use crate::compare::compare_multisets;
use crate::error::{Error, Result};
use crate::graph::{build_graph, WindingGraph, DEFAULT_CONTACT_EPSILON};
use crate::io::{self, ComparisonFile, LayoutFile, ModesFile, ReductionFile, WavFormat, FORMAT_VERSION};
use crate::oracle::{build_state_space, line_sweep, oracle_eigenvalues};
use crate::spectral::{compute_modes, project_system, DftBasis, ModeSet};
use crate::synthesis::{
    attack_error, cluster_modes, modal_response, spectral_residues, truncate_modes, ClusterKey, ExcitationConvention,
    ModalModel, Ranking, ReductionReport, ATTACK_WINDOW_S, DEFAULT_CLUSTER_REL_GAP, DEFAULT_DURATION_S,
    DEFAULT_SAMPLE_RATE,
};
use crate::winding::{generate_layout, Pattern, WindingLayout, WindingSpec};

/// Every setting the subcommands read. Any subset may appear in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub out: PathBuf,
    pub layout: Option<PathBuf>,
    pub adjacency: Option<PathBuf>,
    pub modes: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub candidate: Option<PathBuf>,

    pub pattern: Pattern,
    pub turns: usize,
    pub wire_diameter: f64,
    pub columns: usize,
    pub layers: usize,
    pub sigma: f64,
    pub seed: u64,
    pub contact_epsilon: f64,

    pub r_dc: f64,
    pub m: f64,
    pub alpha: f64,
    pub c0: f64,
    pub d: u32,

    pub tolerance: f64,

    pub sweep: bool,
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub omega_points: usize,
    pub sweep_sigma: f64,

    pub seed_start: u64,
    pub seed_count: u64,
    pub jobs: usize,

    pub truncate: usize,
    pub rank: Ranking,
    pub sample_rate: u32,
    pub duration: f64,
    pub window: f64,
    pub cluster_gap: f64,
    pub cluster_key: ClusterKey,
    pub wav_format: WavFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        let spec = WindingSpec::default();
        let params = PickupParams::default();
        Self {
            out: PathBuf::from("."),
            layout: None,
            adjacency: None,
            modes: None,
            reference: None,
            candidate: None,
            pattern: spec.pattern,
            turns: spec.n_turns,
            wire_diameter: spec.wire_diameter,
            columns: spec.window_columns,
            layers: spec.max_layers,
            sigma: spec.scatter_traverse_sigma,
            seed: spec.seed,
            contact_epsilon: DEFAULT_CONTACT_EPSILON,
            r_dc: params.r_dc_ohms,
            m: params.m_henries,
            alpha: params.alpha,
            c0: params.c0_farads,
            d: params.d,
            tolerance: 1e-8,
            sweep: false,
            omega_min: None,
            omega_max: None,
            omega_points: 2001,
            sweep_sigma: 0.0,
            seed_start: 0,
            seed_count: 20,
            jobs: 0,
            truncate: 0,
            rank: Ranking::AbsS,
            sample_rate: DEFAULT_SAMPLE_RATE,
            duration: DEFAULT_DURATION_S,
            window: ATTACK_WINDOW_S,
            cluster_gap: DEFAULT_CLUSTER_REL_GAP,
            cluster_key: ClusterKey::ImagPart,
            wav_format: WavFormat::Pcm16,
        }
    }
}

impl RunConfig {
    pub fn winding_spec(&self, seed: u64) -> WindingSpec {
        WindingSpec {
            n_turns: self.turns,
            wire_diameter: self.wire_diameter,
            window_columns: self.columns,
            max_layers: self.layers,
            pattern: self.pattern,
            scatter_traverse_sigma: self.sigma,
            seed,
        }
    }

    pub fn params(&self) -> PickupParams {
        PickupParams {
            r_dc_ohms: self.r_dc,
            m_henries: self.m,
            alpha: self.alpha,
            c0_farads: self.c0,
            d: self.d,
        }
    }

    /// Range checks beyond those of the domain types. Inputs must be
    /// distinct and must not be among the files `outputs` names in `out`.
    pub fn validate(&self, outputs: &[&str]) -> Result<()> {
        let positive = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        positive("tolerance", self.tolerance)?;
        positive("duration", self.duration)?;
        positive("window", self.window)?;
        if self.sample_rate == 0 {
            return Err(Error::InvalidInput("sample_rate must be positive".into()));
        }
        if !(self.cluster_gap >= 0.0 && self.cluster_gap.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "cluster_gap must be >= 0, got {}",
                self.cluster_gap
            )));
        }
        if self.omega_points < 3 {
            return Err(Error::InvalidInput("omega_points must be at least 3".into()));
        }
        let inputs = [
            &self.layout,
            &self.adjacency,
            &self.modes,
            &self.reference,
            &self.candidate,
        ];
        let inputs: Vec<&PathBuf> = inputs.into_iter().flatten().collect();
        for (i, a) in inputs.iter().enumerate() {
            if inputs[i + 1..].contains(a) {
                return Err(Error::InvalidInput(format!("path {} given twice", a.display())));
            }
            let dir = match a.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let name = a.file_name().and_then(|n| n.to_str()).unwrap_or("");
            if dir == self.out && outputs.contains(&name) {
                return Err(Error::InvalidInput(format!(
                    "input {} would be overwritten by an output",
                    a.display()
                )));
            }
        }
        Ok(())
    }
}

/// Files each subcommand writes into `--out`.
pub fn output_names(command: &str) -> &'static [&'static str] {
    match command {
        "gen" => &["layout.json", "adjacency.mtx", "layout.sha256"],
        "modes" => &["modes.json", "modes.csv"],
        "oracle" => &["oracle.json", "oracle_sweep.csv"],
        "synth" => &["synth.json", "full.wav", "reduced.wav"],
        "sweep" => &["sweep.csv"],
        _ => &["compare.json"],
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "pickup",
    version,
    about = "Natural frequencies and attack transients of wound pickup coils"
)]
pub struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a winding layout and its contact graph.
    Gen {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        winding: WindingArgs,
    },
    /// Natural frequencies through the DFT-basis pencil.
    Modes {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        input: GraphInput,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Brute-force state-space check of a modes file.
    Oracle {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        input: GraphInput,
        #[command(flatten)]
        params: ParamArgs,
        /// Modes file to check; computed in-process when absent.
        #[arg(long)]
        modes: Option<PathBuf>,
        #[arg(long)]
        tolerance: Option<f64>,
        #[command(flatten)]
        sweep: SweepGridArgs,
    },
    /// Synthesize the attack transient and optionally a truncated one.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        layout: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        synth: SynthArgs,
    },
    /// Cluster statistics over a range of winding seeds.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        winding: WindingArgs,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        synth: SynthArgs,
        #[arg(long)]
        seed_start: Option<u64>,
        #[arg(long)]
        seed_count: Option<u64>,
        /// Worker threads; 0 uses all cores.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Compare two modes files as multisets.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        candidate: Option<PathBuf>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WindingArgs {
    #[arg(long)]
    pub pattern: Option<Pattern>,
    #[arg(long)]
    pub turns: Option<usize>,
    #[arg(long)]
    pub wire_diameter: Option<f64>,
    #[arg(long)]
    pub columns: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    /// Traverse jitter of the scatter winder, in columns.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub contact_epsilon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GraphInput {
    #[arg(long, conflicts_with = "adjacency")]
    pub layout: Option<PathBuf>,
    /// Matrix Market adjacency, used instead of a layout.
    #[arg(long)]
    pub adjacency: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    #[arg(long)]
    pub r_dc: Option<f64>,
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub c0: Option<f64>,
    #[arg(long)]
    pub d: Option<u32>,
}

#[derive(Debug, Args)]
pub struct SweepGridArgs {
    /// Scan σ_min(ω) instead of comparing eigenvalues.
    #[arg(long)]
    pub sweep: bool,
    #[arg(long)]
    pub omega_min: Option<f64>,
    #[arg(long)]
    pub omega_max: Option<f64>,
    #[arg(long)]
    pub omega_points: Option<usize>,
    /// Real part of the scanned line `s = σ + iω`.
    #[arg(long, allow_hyphen_values = true)]
    pub sweep_sigma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Modes to keep; 0 keeps all.
    #[arg(long)]
    pub truncate: Option<usize>,
    #[arg(long)]
    pub rank: Option<Ranking>,
    #[arg(long)]
    pub sample_rate: Option<u32>,
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub window: Option<f64>,
    #[arg(long)]
    pub cluster_gap: Option<f64>,
    /// Cluster on |s| instead of |Im s|.
    #[arg(long)]
    pub cluster_abs: bool,
    #[arg(long)]
    pub wav_format: Option<WavFormat>,
}

macro_rules! apply {
    ($cfg:expr, $args:expr, $($field:ident),+) => {
        $(if let Some(v) = $args.$field.clone() { $cfg.$field = v; })+
    };
}

fn load_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => io::read_json(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn apply_winding(cfg: &mut RunConfig, w: &WindingArgs) {
    apply!(
        cfg,
        w,
        pattern,
        turns,
        wire_diameter,
        columns,
        layers,
        sigma,
        seed,
        contact_epsilon
    );
}

fn apply_params(cfg: &mut RunConfig, p: &ParamArgs) {
    apply!(cfg, p, r_dc, m, alpha, c0, d);
}

fn apply_input(cfg: &mut RunConfig, g: &GraphInput) {
    if g.layout.is_some() || g.adjacency.is_some() {
        cfg.layout = g.layout.clone();
        cfg.adjacency = g.adjacency.clone();
    }
}

fn apply_synth(cfg: &mut RunConfig, s: &SynthArgs) {
    apply!(
        cfg,
        s,
        truncate,
        rank,
        sample_rate,
        duration,
        window,
        cluster_gap,
        wav_format
    );
    if s.cluster_abs {
        cfg.cluster_key = ClusterKey::Magnitude;
    }
}

/// Resolved configuration for one invocation.
pub fn resolve(command: &Command) -> Result<(&'static str, RunConfig)> {
    let (name, cfg) = match command {
        Command::Gen { common, winding } => {
            let mut cfg = load_config(common)?;
            apply_winding(&mut cfg, winding);
            ("gen", cfg)
        }
        Command::Modes { common, input, params } => {
            let mut cfg = load_config(common)?;
            apply_input(&mut cfg, input);
            apply_params(&mut cfg, params);
            ("modes", cfg)
        }
        Command::Oracle {
            common,
            input,
            params,
            modes,
            tolerance,
            sweep,
        } => {
            let mut cfg = load_config(common)?;
            apply_input(&mut cfg, input);
            apply_params(&mut cfg, params);
            if modes.is_some() {
                cfg.modes = modes.clone();
            }
            if let Some(t) = tolerance {
                cfg.tolerance = *t;
            }
            cfg.sweep |= sweep.sweep;
            if sweep.omega_min.is_some() {
                cfg.omega_min = sweep.omega_min;
            }
            if sweep.omega_max.is_some() {
                cfg.omega_max = sweep.omega_max;
            }
            apply!(cfg, sweep, omega_points, sweep_sigma);
            ("oracle", cfg)
        }
        Command::Synth {
            common,
            layout,
            params,
            synth,
        } => {
            let mut cfg = load_config(common)?;
            if layout.is_some() {
                cfg.layout = layout.clone();
            }
            apply_params(&mut cfg, params);
            apply_synth(&mut cfg, synth);
            ("synth", cfg)
        }
        Command::Sweep {
            common,
            winding,
            params,
            synth,
            seed_start,
            seed_count,
            jobs,
        } => {
            let mut cfg = load_config(common)?;
            apply_winding(&mut cfg, winding);
            apply_params(&mut cfg, params);
            apply_synth(&mut cfg, synth);
            if let Some(v) = seed_start {
                cfg.seed_start = *v;
            }
            if let Some(v) = seed_count {
                cfg.seed_count = *v;
            }
            if let Some(v) = jobs {
                cfg.jobs = *v;
            }
            ("sweep", cfg)
        }
        Command::Compare {
            common,
            reference,
            candidate,
            tolerance,
        } => {
            let mut cfg = load_config(common)?;
            if reference.is_some() {
                cfg.reference = reference.clone();
            }
            if candidate.is_some() {
                cfg.candidate = candidate.clone();
            }
            if let Some(t) = tolerance {
                cfg.tolerance = *t;
            }
            ("compare", cfg)
        }
    };
    cfg.validate(output_names(name))?;
    Ok((name, cfg))
}

/// Whether a command that ran to completion met its numerical check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

pub fn run(command: &Command) -> Result<Outcome> {
    let (name, cfg) = resolve(command)?;
    std::fs::create_dir_all(&cfg.out)?;
    match name {
        "gen" => cmd_gen(&cfg),
        "modes" => cmd_modes(&cfg),
        "oracle" => cmd_oracle(&cfg),
        "synth" => cmd_synth(&cfg),
        "sweep" => cmd_sweep(&cfg),
        _ => cmd_compare(&cfg),
    }
}

/// Entry point of the binary: parses arguments and maps results to exit
/// codes (0 success, 1 numerical failure, 2 invalid input).
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
    match run(&cli.command) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    io::write_atomic(path, text.as_bytes())
}

/// Layout and graph for a spec.
pub fn generate(spec: &WindingSpec, contact_epsilon: f64) -> Result<(WindingLayout, WindingGraph)> {
    let layout = generate_layout(spec)?;
    let graph = build_graph(&layout, contact_epsilon)?;
    Ok((layout, graph))
}

fn cmd_gen(cfg: &RunConfig) -> Result<Outcome> {
    let (layout, graph) = generate(&cfg.winding_spec(cfg.seed), cfg.contact_epsilon)?;
    let file = LayoutFile::new(&layout, &graph, cfg.contact_epsilon);
    io::write_json(&cfg.out.join("layout.json"), &file)?;
    write_text(&cfg.out.join("adjacency.mtx"), &io::adjacency_to_matrix_market(&graph))?;
    write_text(&cfg.out.join("layout.sha256"), &format!("{}\n", file.layout_hash))?;
    info!(
        "{} turns, {} contacts, {} boundary turns, hash {}",
        layout.n_turns(),
        graph.edges.len(),
        graph.n_boundary(),
        file.layout_hash
    );
    Ok(Outcome::Pass)
}

/// Graph input of `modes` and `oracle`: a layout file or a Matrix Market
/// adjacency. Returns the layout when there is one, and the hash to embed.
fn load_graph(cfg: &RunConfig) -> Result<(Option<WindingLayout>, WindingGraph, String)> {
    match (&cfg.layout, &cfg.adjacency) {
        (Some(path), None) => {
            let file: LayoutFile = io::read_json(path)?;
            let (layout, eps) = file.into_layout()?;
            let graph = build_graph(&layout, eps)?;
            let hash = layout.hash_hex();
            Ok((Some(layout), graph, hash))
        }
        (None, Some(path)) => {
            let graph = io::adjacency_from_matrix_market(&std::fs::read_to_string(path)?)?;
            let hash = io::graph_hash(&graph);
            Ok((None, graph, hash))
        }
        (Some(_), Some(_)) => Err(Error::InvalidInput(
            "give either --layout or --adjacency, not both".into(),
        )),
        (None, None) => Err(Error::InvalidInput("missing input: --layout or --adjacency".into())),
    }
}

fn cmd_modes(cfg: &RunConfig) -> Result<Outcome> {
    let (_, graph, hash) = load_graph(cfg)?;
    let mats = SystemMatrices::assemble(&graph, &cfg.params())?;
    let (set, _, _) = compute_modes(&mats, Some(hash))?;
    io::write_json(&cfg.out.join("modes.json"), &ModesFile::new(&set))?;
    write_text(&cfg.out.join("modes.csv"), &io::modes_csv(&set))?;
    if let Some(r) = &set.residual {
        info!("{} modes, residual max {:e} ({:?})", set.modes.len(), r.max, r.method);
    }
    Ok(Outcome::Pass)
}

fn default_omega_range(cfg: &RunConfig, set: &ModeSet) -> (f64, f64) {
    let top = set.modes.iter().map(|m| m.s.im.abs()).fold(0.0, f64::max);
    let top = if top > 0.0 {
        top
    } else {
        set.modes.iter().map(|m| m.s.norm()).fold(1.0, f64::max)
    };
    (cfg.omega_min.unwrap_or(top * 1e-3), cfg.omega_max.unwrap_or(top * 1.25))
}

fn run_sweep(cfg: &RunConfig, mats: &SystemMatrices, set: &ModeSet) -> Result<Outcome> {
    let (lo, hi) = default_omega_range(cfg, set);
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidInput(format!("bad sweep range [{lo}, {hi}]")));
    }
    let pts = cfg.omega_points;
    let grid: Vec<f64> = (0..pts).map(|i| lo + (hi - lo) * i as f64 / (pts - 1) as f64).collect();
    let proj = project_system(mats, &DftBasis::new(mats.n)?)?;
    let sweep = line_sweep(&proj, &mats.params, cfg.sweep_sigma, &grid)?;
    let mut csv = String::from("omega,sigma_min\n");
    for (w, v) in &sweep.samples {
        csv.push_str(&format!("{w:e},{v:e}\n"));
    }
    write_text(&cfg.out.join("oracle_sweep.csv"), &csv)?;
    for d in &sweep.dips {
        info!("dip at ω = {:e}, σ_min = {:e}", d.omega, d.sigma_min);
    }
    Ok(Outcome::Pass)
}

fn cmd_oracle(cfg: &RunConfig) -> Result<Outcome> {
    let (_, graph, hash) = load_graph(cfg)?;
    let params = cfg.params();
    let mats = SystemMatrices::assemble(&graph, &params)?;
    let spectral = match &cfg.modes {
        Some(path) => {
            let file: ModesFile = io::read_json(path)?;
            if file.layout_hash != hash {
                warn!(
                    "modes file was computed for layout {}, checking against {}",
                    file.layout_hash, hash
                );
            }
            file.into_mode_set()?
        }
        None => compute_modes(&mats, Some(hash.clone()))?.0,
    };
    if cfg.sweep {
        return run_sweep(cfg, &mats, &spectral);
    }
    if params.m_alpha() == 0.0 {
        warn!("Mα = 0 has no state-space form; running the frequency sweep instead");
        return run_sweep(cfg, &mats, &spectral);
    }
    let ev = oracle_eigenvalues(&build_state_space(&mats)?)?;
    let report = compare_multisets(graph.n, &spectral.s_values(), &ev);
    let passed = report.passed(cfg.tolerance);
    for p in report.offending(cfg.tolerance) {
        warn!(
            "mode {} (s = {:e}{:+e}i) deviates by {:e} from the oracle",
            p.reference_index, p.reference[0], p.reference[1], p.rel_deviation
        );
    }
    if !report.unmatched.is_empty() {
        warn!("{} values without a partner", report.unmatched.len());
    }
    info!("max relative deviation {:e}", report.max_rel_deviation);
    let file = ComparisonFile {
        format_version: FORMAT_VERSION.into(),
        layout_hash: hash,
        tolerance: cfg.tolerance,
        passed,
        report,
    };
    io::write_json(&cfg.out.join("oracle.json"), &file)?;
    Ok(if passed { Outcome::Pass } else { Outcome::Fail })
}

/// Modes and residues for a layout under the default excitation.
pub fn modal_model(
    layout: &WindingLayout,
    graph: &WindingGraph,
    params: &PickupParams,
) -> Result<(ModeSet, ModalModel)> {
    let mats = SystemMatrices::assemble(graph, params)?;
    let (set, proj, pencil) = compute_modes(&mats, Some(layout.hash_hex()))?;
    let exc = ExcitationConvention::from_layout(layout)?;
    let model = spectral_residues(&set, &pencil, proj.k.as_ref(), &exc)?;
    Ok((set, model))
}

struct SynthResult {
    full: crate::synthesis::Waveform,
    reduced: Option<crate::synthesis::Waveform>,
    report: ReductionReport,
    model: ModalModel,
}

fn synthesize(cfg: &RunConfig, set: &ModeSet, model: &ModalModel) -> Result<SynthResult> {
    let full = modal_response(model, cfg.sample_rate, cfg.duration)?;
    let clusters = cluster_modes(&set.s_values(), cfg.cluster_gap, cfg.cluster_key);
    let (reduced, report) = if cfg.truncate == 0 {
        let report = ReductionReport {
            kept_modes: model.len(),
            ranking: None,
            attack_error: None,
            cluster_summary: clusters,
        };
        (None, report)
    } else {
        let kept = truncate_modes(model, cfg.truncate, cfg.rank)?;
        let wave = modal_response(&kept, cfg.sample_rate, cfg.duration)?;
        let err = attack_error(&full, &wave, cfg.window)?;
        let report = ReductionReport {
            kept_modes: kept.len(),
            ranking: Some(cfg.rank),
            attack_error: Some(err),
            cluster_summary: clusters,
        };
        (Some(wave), report)
    };
    Ok(SynthResult {
        full,
        reduced,
        report,
        model: model.clone(),
    })
}

fn cmd_synth(cfg: &RunConfig) -> Result<Outcome> {
    let path = cfg
        .layout
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("synth needs --layout (the drive weights come from turn lengths)".into()))?;
    let file: LayoutFile = io::read_json(path)?;
    let (layout, eps) = file.into_layout()?;
    let graph = build_graph(&layout, eps)?;
    let (set, model) = modal_model(&layout, &graph, &cfg.params())?;
    let growth = model.max_growth_rate();
    if growth > 0.0 {
        warn!("unstable modes: max Re(s) = {growth:e} 1/s, the transient grows");
    }
    let res = synthesize(cfg, &set, &model)?;
    io::write_atomic(&cfg.out.join("full.wav"), &io::wav_bytes(&res.full, cfg.wav_format))?;
    if let Some(w) = &res.reduced {
        io::write_atomic(&cfg.out.join("reduced.wav"), &io::wav_bytes(w, cfg.wav_format))?;
    }
    let report = ReductionFile {
        format_version: FORMAT_VERSION.into(),
        layout_hash: layout.hash_hex(),
        sample_rate: cfg.sample_rate,
        duration: cfg.duration,
        total_modes: res.model.len(),
        max_growth_rate: growth,
        report: res.report,
    };
    io::write_json(&cfg.out.join("synth.json"), &report)?;
    Ok(Outcome::Pass)
}

/// One seed of an ensemble sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub seed: u64,
    pub result: std::result::Result<SweepStats, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepStats {
    pub layout_hash: String,
    pub cluster_count: usize,
    pub max_cluster_size: usize,
    pub attack_error: Option<f64>,
}

fn sweep_seed(cfg: &RunConfig, seed: u64) -> Result<SweepStats> {
    let (layout, graph) = generate(&cfg.winding_spec(seed), cfg.contact_epsilon)?;
    let (set, model) = modal_model(&layout, &graph, &cfg.params())?;
    let res = synthesize(cfg, &set, &model)?;
    Ok(SweepStats {
        layout_hash: layout.hash_hex(),
        cluster_count: res.report.cluster_summary.len(),
        max_cluster_size: res.report.cluster_summary.iter().map(|c| c.size).max().unwrap_or(0),
        attack_error: res.report.attack_error,
    })
}

/// Runs every seed, failures included, in seed order.
pub fn sweep_rows(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    let seeds: Vec<u64> = (0..cfg.seed_count).map(|i| cfg.seed_start + i).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let result = sweep_seed(cfg, seed).map_err(|e| {
                    warn!("seed {seed}: {e}");
                    e.to_string()
                });
                SweepRow { seed, result }
            })
            .collect()
    }))
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("seed,layout_hash,status,cluster_count,max_cluster_size,attack_error,error\n");
    for row in rows {
        match &row.result {
            Ok(s) => {
                let err = s.attack_error.map(|e| format!("{e:e}")).unwrap_or_default();
                out.push_str(&format!(
                    "{},{},ok,{},{},{},\n",
                    row.seed, s.layout_hash, s.cluster_count, s.max_cluster_size, err
                ));
            }
            Err(msg) => out.push_str(&format!("{},,failed,,,,{}\n", row.seed, csv_quote(msg))),
        }
    }
    out
}

fn cmd_sweep(cfg: &RunConfig) -> Result<Outcome> {
    cfg.params().validate()?;
    let rows = sweep_rows(cfg)?;
    write_text(&cfg.out.join("sweep.csv"), &sweep_csv(&rows))?;
    let failed = rows.iter().filter(|r| r.result.is_err()).count();
    info!("{} seeds, {} failed", rows.len(), failed);
    Ok(Outcome::Pass)
}

fn cmd_compare(cfg: &RunConfig) -> Result<Outcome> {
    let (Some(a), Some(b)) = (&cfg.reference, &cfg.candidate) else {
        return Err(Error::InvalidInput("compare needs --reference and --candidate".into()));
    };
    let ra: ModesFile = io::read_json(a)?;
    let rb: ModesFile = io::read_json(b)?;
    if ra.layout_hash != rb.layout_hash {
        warn!(
            "comparing modes of different layouts ({} vs {})",
            ra.layout_hash, rb.layout_hash
        );
    }
    let report = compare_multisets(ra.n, &ra.s_values(), &rb.s_values());
    let passed = report.passed(cfg.tolerance);
    for p in report.offending(cfg.tolerance) {
        warn!("mode {} deviates by {:e}", p.reference_index, p.rel_deviation);
    }
    let file = ComparisonFile {
        format_version: FORMAT_VERSION.into(),
        layout_hash: ra.layout_hash,
        tolerance: cfg.tolerance,
        passed,
        report,
    };
    io::write_json(&cfg.out.join("compare.json"), &file)?;
    Ok(if passed { Outcome::Pass } else { Outcome::Fail })
}
