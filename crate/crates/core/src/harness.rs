//! Batch experiments: JSON configs, runners, sweeps and result files.
//!
//! Everything here runs in `f64`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dynamics::{
    integrate_segments, to_interaction_picture, Evolution, IntegratorOptions, Segment,
};
use crate::ensemble::{
    deviation_metric, evolve_deviation, init_deviation_with_background, ActiveBlock,
    DeviationDensityMatrix, ScaleTag, ACTIVE_DIM, FOUR_SPIN_BACKGROUND,
};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::pulse_design::{cn_pulse, design_2pik, CnPulseOptions, CnVariant, GateMatrix};
use crate::shor::{
    extract_period, ket_label, run_shor, sample_x, trace_paths, EnergyTable, ShorMode, ShorSetup,
    REGISTER_SIZE, SHOR_DIM,
};
use crate::spin_model::{DelaySpec, PulseDocument, QuantumState, SpinSystem, SystemDocument};

type C = Complex<f64>;

pub const DEFAULT_MIN_FIDELITY: f64 = 0.99;
pub const DEFAULT_MAX_DEVIATION: f64 = 0.005;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Cn,
    Ensemble,
    Shor,
    Design,
    Sweep,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Cn => "cn",
            Self::Ensemble => "ensemble",
            Self::Shor => "shor",
            Self::Design => "design",
            Self::Sweep => "sweep",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    #[default]
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!(
                "unknown format '{other}' (expected csv or json)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    #[default]
    Exact,
    Integrator,
}

/// One step of a pulse sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentDocument {
    Pulse(PulseDocument),
    /// Free evolution for this long.
    Delay(f64),
}

/// A CN pulse built from the system instead of listed explicitly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateDocument {
    pub control: usize,
    pub target: usize,
    #[serde(default = "standard_variant")]
    pub variant: CnVariant,
    pub rabi: Option<Vec<f64>>,
    #[serde(default)]
    pub phase: f64,
    pub exact_2pik: Option<u32>,
}

fn standard_variant() -> CnVariant {
    CnVariant::Standard
}

/// Golden data and tolerances. Without a reference nothing is checked.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceDocument {
    /// Expected final amplitudes as `[re, im]` pairs.
    pub state: Option<Vec<[f64; 2]>>,
    /// Expected active block, row-major `[re, im]` pairs.
    pub active_block: Option<Vec<Vec<[f64; 2]>>>,
    pub min_fidelity: Option<f64>,
    pub max_deviation: Option<f64>,
    pub max_background_change: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnergiesDocument {
    /// Sixteen explicit values `E_00 … E_33`.
    Values(Vec<f64>),
    /// `"derive"`: diagonal energies of the configured four-spin system.
    Source(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShorDocument {
    pub mode: ShorMode,
    #[serde(default)]
    pub tau1: f64,
    #[serde(default)]
    pub tau2: f64,
    pub energies: Option<EnergiesDocument>,
    /// Simulated measurements of `x`; zero disables sampling.
    #[serde(default)]
    pub shots: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignDocument {
    pub delta_omega: f64,
    #[serde(default = "one")]
    pub k: u32,
    #[serde(default = "one")]
    pub n: u32,
}

fn one() -> u32 {
    1
}

/// Two-spin CN threshold study. For each cell the control sits `Δω` above
/// the target, both spins are driven at `Ω`, and the standard CN pulse acts
/// on `initial_state`; the deviation is taken against the ideal phased CN.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepDocument {
    pub delta_omega_over_rabi: Vec<f64>,
    pub j_over_rabi: Vec<f64>,
    #[serde(default = "default_sweep_rabi")]
    pub rabi: f64,
    #[serde(default = "default_target_larmor")]
    pub target_larmor: f64,
    /// Tolerance applied to every cell when present.
    pub max_deviation: Option<f64>,
}

fn default_sweep_rabi() -> f64 {
    0.1
}

fn default_target_larmor() -> f64 {
    100.0
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputDocument {
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub name: Option<String>,
    pub system: Option<SystemDocument>,
    /// Overrides `system.pulses` when non-empty.
    #[serde(default)]
    pub sequence: Vec<SegmentDocument>,
    pub gate: Option<GateDocument>,
    /// Full state for `cn`, active amplitudes for `ensemble`, `[re, im]` pairs.
    pub initial_state: Option<Vec<[f64; 2]>>,
    /// Background diagonal for `ensemble`; defaults to the four-spin values.
    pub background: Option<Vec<f64>>,
    #[serde(default)]
    pub method: MethodChoice,
    pub reference: Option<ReferenceDocument>,
    pub shor: Option<ShorDocument>,
    pub design: Option<DesignDocument>,
    pub sweep: Option<SweepDocument>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: OutputDocument,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Validation(vec![format!("config: {e}")]))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn empty(kind: ExperimentKind) -> Self {
        Self {
            kind,
            name: None,
            system: None,
            sequence: Vec::new(),
            gate: None,
            initial_state: None,
            background: None,
            method: MethodChoice::Exact,
            reference: None,
            shor: None,
            design: None,
            sweep: None,
            seed: None,
            output: OutputDocument::default(),
        }
    }

    /// Every schema problem, each naming its field.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n_spins = self.system.as_ref().and_then(|s| s.n_spins);
        let need_system = matches!(self.kind, ExperimentKind::Cn | ExperimentKind::Ensemble);
        match &self.system {
            Some(s) => out.extend(s.problems("system")),
            None if need_system => out.push("system: missing".into()),
            None => {}
        }
        for (i, seg) in self.sequence.iter().enumerate() {
            match seg {
                SegmentDocument::Pulse(p) => {
                    out.extend(p.problems(&format!("sequence[{i}].pulse"), n_spins))
                }
                SegmentDocument::Delay(d) if !(*d >= 0.0) => {
                    out.push(format!("sequence[{i}].delay: must be non-negative"))
                }
                SegmentDocument::Delay(_) => {}
            }
        }
        if let Some(g) = &self.gate {
            if let (Some(r), Some(n)) = (&g.rabi, n_spins) {
                if r.len() != n {
                    out.push(format!(
                        "gate.rabi: expected {n} entries, found {}",
                        r.len()
                    ));
                }
            }
            if g.rabi.is_none() && g.exact_2pik.is_none() {
                out.push("gate.rabi: missing".into());
            }
        }
        if need_system {
            let has_pulses = !self.sequence.is_empty()
                || self.system.as_ref().is_some_and(|s| !s.pulses.is_empty())
                || self.gate.is_some();
            if !has_pulses {
                out.push("sequence: missing (give sequence, system.pulses or gate)".into());
            }
            let expected = match self.kind {
                ExperimentKind::Ensemble => Some(ACTIVE_DIM),
                _ => n_spins.map(|n| 1usize << n.min(20)),
            };
            match (&self.initial_state, expected) {
                (None, _) => out.push("initial_state: missing".into()),
                (Some(s), Some(e)) if s.len() != e => out.push(format!(
                    "initial_state: expected {e} amplitudes, found {}",
                    s.len()
                )),
                _ => {}
            }
        }
        if self.kind == ExperimentKind::Ensemble {
            if let (Some(n), Some(b)) = (n_spins, &self.background) {
                let e = (1usize << n.min(20)).saturating_sub(ACTIVE_DIM);
                if b.len() != e {
                    out.push(format!(
                        "background: expected {e} entries, found {}",
                        b.len()
                    ));
                }
            }
            if self.background.is_none() && n_spins.is_some_and(|n| n != 4) {
                out.push("background: missing (defaults exist only for four spins)".into());
            }
        }
        if let Some(r) = &self.reference {
            if let Some(f) = r.min_fidelity {
                if !(0.0..=1.0).contains(&f) {
                    out.push("reference.min_fidelity: must lie in [0, 1]".into());
                }
            }
            if let Some(b) = &r.active_block {
                if b.len() != ACTIVE_DIM || b.iter().any(|row| row.len() != ACTIVE_DIM) {
                    out.push(format!(
                        "reference.active_block: expected {ACTIVE_DIM}x{ACTIVE_DIM}"
                    ));
                }
            }
        }
        match (self.kind, &self.shor) {
            (ExperimentKind::Shor, None) => out.push("shor: missing".into()),
            (_, Some(s)) => {
                if !(s.tau1 >= 0.0) {
                    out.push("shor.tau1: must be non-negative".into());
                }
                if !(s.tau2 >= 0.0) {
                    out.push("shor.tau2: must be non-negative".into());
                }
                match &s.energies {
                    None if s.mode != ShorMode::Instantaneous => {
                        out.push("shor.energies: missing".into())
                    }
                    Some(EnergiesDocument::Values(v)) if v.len() != SHOR_DIM => out.push(format!(
                        "shor.energies: expected {SHOR_DIM} values, found {}",
                        v.len()
                    )),
                    Some(EnergiesDocument::Source(s)) if s != "derive" => out.push(format!(
                        "shor.energies: unknown source '{s}' (expected \"derive\")"
                    )),
                    Some(EnergiesDocument::Source(_)) if n_spins != Some(4) => {
                        out.push("shor.energies: \"derive\" needs a four-spin system".into())
                    }
                    _ => {}
                }
            }
            _ => {}
        }
        match (self.kind, &self.design) {
            (ExperimentKind::Design, None) => out.push("design: missing".into()),
            (_, Some(d)) => {
                if !(d.delta_omega.is_finite() && d.delta_omega != 0.0) {
                    out.push("design.delta_omega: must be finite and non-zero".into());
                }
                if d.k == 0 {
                    out.push("design.k: must be positive".into());
                }
                if d.n == 0 {
                    out.push("design.n: must be positive".into());
                }
            }
            _ => {}
        }
        match (self.kind, &self.sweep) {
            (ExperimentKind::Sweep, None) => out.push("sweep: missing".into()),
            (_, Some(s)) => {
                out.extend(SweepGrid::axis_problems(
                    "sweep.delta_omega_over_rabi",
                    &s.delta_omega_over_rabi,
                ));
                out.extend(SweepGrid::axis_problems(
                    "sweep.j_over_rabi",
                    &s.j_over_rabi,
                ));
                if !(s.rabi > 0.0) {
                    out.push("sweep.rabi: must be positive".into());
                }
            }
            _ => {}
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    fn initial_amplitudes(&self) -> Vec<C> {
        self.initial_state
            .as_ref()
            .map(|v| v.iter().map(|[re, im]| C::new(*re, *im)).collect())
            .unwrap_or_default()
    }

    fn segments(&self, system: &SpinSystem<f64>) -> Result<Vec<Segment<f64>>> {
        if !self.sequence.is_empty() {
            return self
                .sequence
                .iter()
                .map(|s| match s {
                    SegmentDocument::Pulse(p) => Ok(Segment::Pulse(p.to_pulse()?)),
                    SegmentDocument::Delay(d) => Ok(Segment::Delay(DelaySpec::new(*d)?)),
                })
                .collect();
        }
        let listed = self
            .system
            .as_ref()
            .map(|s| s.to_pulses())
            .transpose()?
            .unwrap_or_default();
        if !listed.is_empty() {
            return Ok(listed.into_iter().map(Segment::Pulse).collect());
        }
        let g = self
            .gate
            .as_ref()
            .ok_or_else(|| Error::Validation(vec!["sequence: missing".into()]))?;
        let options = CnPulseOptions {
            variant: g.variant,
            rabi: g
                .rabi
                .clone()
                .unwrap_or_else(|| vec![0.0; system.n_spins()]),
            phase: g.phase,
            exact_2pik: g.exact_2pik,
        };
        Ok(vec![Segment::Pulse(cn_pulse(
            system, g.control, g.target, &options,
        )?)])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Pass,
    /// No reference was configured, so nothing was checked.
    Unchecked,
    ToleranceFailure,
}

/// A named output file held in memory until written.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub content: String,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub kind: ExperimentKind,
    pub status: RunStatus,
    pub metrics: BTreeMap<String, f64>,
    pub failures: Vec<String>,
    pub artifacts: Vec<Artifact>,
}

impl RunReport {
    fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            status: RunStatus::Unchecked,
            metrics: BTreeMap::new(),
            failures: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    fn check(&mut self, name: &str, ok: bool, detail: String) {
        if ok {
            if self.status == RunStatus::Unchecked {
                self.status = RunStatus::Pass;
            }
        } else {
            self.status = RunStatus::ToleranceFailure;
            self.failures.push(format!("{name}: {detail}"));
        }
    }

    fn add(&mut self, name: impl Into<String>, content: String) {
        self.artifacts.push(Artifact {
            name: name.into(),
            content,
        });
    }

    pub fn artifact(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.name == name)
    }

    /// Human-readable metric report.
    pub fn summary(&self) -> String {
        let mut s = format!("{} {:?}\n", self.kind, self.status);
        for (k, v) in &self.metrics {
            s.push_str(&format!("  {k} = {v:.6e}\n"));
        }
        for f in &self.failures {
            s.push_str(&format!("  FAILED {f}\n"));
        }
        s
    }

    /// Writes every artifact into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for a in &self.artifacts {
            let path = dir.join(&a.name);
            std::fs::write(&path, &a.content)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Options that come from the command line rather than the config.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunOptions {
    pub format: Option<OutputFormat>,
    pub seed: Option<u64>,
    pub trace: bool,
}

/// Validates `config` and runs it.
pub fn run_config(config: &ExperimentConfig, options: &RunOptions) -> Result<RunReport> {
    config.validate()?;
    let format = options.format.unwrap_or(config.output.format);
    match config.kind {
        ExperimentKind::Cn => run_cn(config, format),
        ExperimentKind::Ensemble => run_ensemble(config, format),
        ExperimentKind::Shor => run_shor_config(config, format, options),
        ExperimentKind::Design => run_design(config),
        ExperimentKind::Sweep => {
            let s = config.sweep.as_ref().expect("validated");
            let grid = SweepGrid::new(s.delta_omega_over_rabi.clone(), s.j_over_rabi.clone())?;
            let template = SweepTemplate {
                rabi: s.rabi,
                target_larmor: s.target_larmor,
                initial_state: (config.initial_state.is_some())
                    .then(|| config.initial_amplitudes()),
            };
            let rows = run_sweep(&grid, &template);
            let mut report = RunReport::new(ExperimentKind::Sweep);
            let worst = rows
                .iter()
                .filter_map(|r| r.deviation)
                .fold(0.0f64, f64::max);
            report.metric("max_deviation", worst);
            report.metric("cells", rows.len() as f64);
            for row in &rows {
                if let Some(e) = &row.error {
                    report.check(&row.key(), false, format!("simulation error: {e}"));
                } else if let (Some(limit), Some(d)) = (s.max_deviation, row.deviation) {
                    report.check(
                        &row.key(),
                        d <= limit,
                        format!("deviation {d:.4e} > {limit}"),
                    );
                }
            }
            match format {
                OutputFormat::Csv => report.add("sweep.csv", sweep_csv(&rows)?),
                OutputFormat::Json => report.add("sweep.json", pretty(&rows)),
            }
            Ok(report)
        }
    }
}

fn pretty<S: Serialize>(value: &S) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn pair(c: C) -> [f64; 2] {
    [c.re, c.im]
}

fn state_csv(amplitudes: &[C]) -> Result<String> {
    let n_spins = amplitudes.len().trailing_zeros() as usize;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "basis", "re", "im", "probability"])?;
    for (i, a) in amplitudes.iter().enumerate() {
        w.write_record([
            i.to_string(),
            format!("{:0width$b}", i, width = n_spins),
            a.re.to_string(),
            a.im.to_string(),
            a.norm_sqr().to_string(),
        ])?;
    }
    finish_csv(w)
}

fn matrix_csv(m: &CMatrix<f64>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["row", "col", "re", "im"])?;
    for (i, j, v) in m.iter() {
        w.write_record([
            i.to_string(),
            j.to_string(),
            v.re.to_string(),
            v.im.to_string(),
        ])?;
    }
    finish_csv(w)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn run_cn(config: &ExperimentConfig, format: OutputFormat) -> Result<RunReport> {
    let system: SpinSystem<f64> = config.system.as_ref().expect("validated").to_system()?;
    let segments = config.segments(&system)?;
    let initial = QuantumState::new(config.initial_amplitudes())?;
    let end: f64 = segments.iter().map(Segment::duration).sum();
    let mut report = RunReport::new(ExperimentKind::Cn);
    let (lab_state, steps) = match config.method {
        MethodChoice::Exact => {
            let mut evo = Evolution::new(system.clone(), initial.clone())?;
            for s in &segments {
                evo.apply(s)?;
            }
            (evo.state().clone(), 0)
        }
        MethodChoice::Integrator => {
            let r = integrate_segments(
                &initial,
                &system,
                &segments,
                0.0,
                &IntegratorOptions::default(),
            )?;
            (r.final_state, r.steps)
        }
    };
    let final_state = to_interaction_picture(&lab_state, &system, end);
    report.metric("norm_drift", (final_state.norm() - 1.0).abs());
    report.metric("duration", end);
    if steps > 0 {
        report.metric("steps", steps as f64);
    }
    let mut reference_json = serde_json::Value::Null;
    if let Some(reference) = &config.reference {
        if let Some(target) = &reference.state {
            let target =
                QuantumState::normalized(target.iter().map(|[re, im]| C::new(*re, *im)).collect())?;
            if target.dim() != final_state.dim() {
                return Err(Error::Validation(vec![format!(
                    "reference.state: expected {} amplitudes, found {}",
                    final_state.dim(),
                    target.dim()
                )]));
            }
            let fidelity = final_state.fidelity(&target);
            let min = reference.min_fidelity.unwrap_or(DEFAULT_MIN_FIDELITY);
            report.metric("fidelity", fidelity);
            report.check(
                "fidelity",
                fidelity >= min,
                format!("{fidelity:.6} < {min}"),
            );
            if let Some(limit) = reference.max_deviation {
                let dev = deviation_metric(
                    &ActiveBlock::from_amplitudes(final_state.amplitudes())?,
                    &ActiveBlock::from_amplitudes(target.amplitudes())?,
                );
                report.metric("deviation", dev);
                report.check("deviation", dev <= limit, format!("{dev:.4e} > {limit}"));
            }
            reference_json = json!({ "state": target.amplitudes().iter().copied().map(pair).collect::<Vec<_>>() });
        }
    }
    let summary = json!({
        "kind": "cn",
        "name": config.name,
        "method": config.method,
        "frame": "interaction",
        "time": end,
        "status": report.status,
        "metrics": report.metrics,
        "failures": report.failures,
        "final_state": final_state.amplitudes().iter().copied().map(pair).collect::<Vec<_>>(),
        "lab_state": lab_state.amplitudes().iter().copied().map(pair).collect::<Vec<_>>(),
        "reference": reference_json,
    });
    match format {
        OutputFormat::Json => report.add("cn.json", pretty(&summary)),
        OutputFormat::Csv => {
            report.add("cn_state.csv", state_csv(final_state.amplitudes())?);
            report.add("cn.json", pretty(&summary));
        }
    }
    Ok(report)
}

fn run_ensemble(config: &ExperimentConfig, format: OutputFormat) -> Result<RunReport> {
    let system: SpinSystem<f64> = config.system.as_ref().expect("validated").to_system()?;
    let segments = config.segments(&system)?;
    let background = config
        .background
        .clone()
        .unwrap_or_else(|| FOUR_SPIN_BACKGROUND.to_vec());
    let active = config.initial_amplitudes();
    let rho0 = init_deviation_with_background(&active, &background)?.with_scale(ScaleTag {
        larmor_sum: system.larmor().iter().sum(),
    });
    let mut rho = rho0.clone();
    let mut time = 0.0;
    for s in &segments {
        match s {
            Segment::Pulse(p) => rho = evolve_deviation(&rho, &system, p, time)?,
            Segment::Delay(d) => rho = delay_deviation(&rho, &system, d.duration())?,
        }
        time += s.duration();
    }
    let rho = rho.in_interaction_picture(&system, time)?;
    let r = rho.active_block();
    let b = rho.background_diagonal();
    let mut report = RunReport::new(ExperimentKind::Ensemble);
    let background_change = b
        .iter()
        .zip(&background)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let off_block = rho
        .entries()
        .iter()
        .filter(|(i, j, _)| i != j && (*i >= ACTIVE_DIM || *j >= ACTIVE_DIM))
        .map(|(_, _, v)| v.norm())
        .fold(0.0, f64::max);
    report.metric("background_change", background_change);
    report.metric("background_off_diagonal", off_block);
    report.metric("trace_change", (rho.trace() - rho0.trace()).norm());
    if let Some(reference) = &config.reference {
        let target = match (&reference.active_block, &reference.state) {
            (Some(m), _) => {
                let rows: Vec<Vec<C>> = m
                    .iter()
                    .map(|row| row.iter().map(|[re, im]| C::new(*re, *im)).collect())
                    .collect();
                Some(ActiveBlock::new(CMatrix::from_rows(&rows).ok_or_else(
                    || Error::Validation(vec!["reference.active_block: ragged rows".into()]),
                )?)?)
            }
            (None, Some(s)) => Some(ActiveBlock::from_amplitudes(
                &s.iter()
                    .map(|[re, im]| C::new(*re, *im))
                    .collect::<Vec<_>>(),
            )?),
            (None, None) => None,
        };
        if let Some(target) = target {
            let limit = reference.max_deviation.unwrap_or(DEFAULT_MAX_DEVIATION);
            let dev = deviation_metric(&r, &target);
            let abs = r.r.max_abs_diff(&target.r);
            report.metric("deviation", dev);
            report.metric("max_abs_deviation", abs);
            report.check("deviation", dev < limit, format!("{dev:.4e} >= {limit}"));
        }
        let limit = reference
            .max_background_change
            .unwrap_or(DEFAULT_MAX_DEVIATION);
        report.check(
            "background_change",
            background_change < limit,
            format!("{background_change:.4e} >= {limit}"),
        );
    }
    let summary = json!({
        "kind": "ensemble",
        "name": config.name,
        "frame": "interaction",
        "time": time,
        "scale": rho.scale().map(|s| s.to_string()),
        "status": report.status,
        "metrics": report.metrics,
        "failures": report.failures,
        "r": (0..ACTIVE_DIM).map(|i| (0..ACTIVE_DIM).map(|j| pair(r.r[(i, j)])).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "b_diagonal": b,
    });
    report.add("ensemble.json", pretty(&summary));
    if format == OutputFormat::Csv {
        report.add("ensemble_r.csv", matrix_csv(&r.r)?);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["index", "initial", "final"])?;
        for (i, (x, y)) in b.iter().zip(&background).enumerate() {
            w.write_record([(i + ACTIVE_DIM).to_string(), y.to_string(), x.to_string()])?;
        }
        report.add("ensemble_b.csv", finish_csv(w)?);
    }
    Ok(report)
}

fn delay_deviation(
    rho: &DeviationDensityMatrix<f64>,
    system: &SpinSystem<f64>,
    tau: f64,
) -> Result<DeviationDensityMatrix<f64>> {
    // free evolution is the interaction-picture map run backwards
    rho.in_interaction_picture(system, -tau)
}

fn run_shor_config(
    config: &ExperimentConfig,
    format: OutputFormat,
    options: &RunOptions,
) -> Result<RunReport> {
    let doc = config.shor.as_ref().expect("validated");
    let energies = match &doc.energies {
        None => None,
        Some(EnergiesDocument::Values(v)) => Some(EnergyTable::explicit(v)?),
        Some(EnergiesDocument::Source(_)) => {
            let system: SpinSystem<f64> = config.system.as_ref().expect("validated").to_system()?;
            Some(EnergyTable::from_system(&system)?)
        }
    };
    let setup = ShorSetup {
        mode: doc.mode,
        tau1: doc.tau1,
        tau2: doc.tau2,
        energies,
    };
    let run = run_shor(&setup)?;
    let mut report = RunReport::new(ExperimentKind::Shor);
    for (x, p) in run.distribution.iter().enumerate() {
        report.metric(&format!("p_x{x}"), *p);
    }
    let period = extract_period(&run.distribution, REGISTER_SIZE);
    let period_json = match &period {
        Ok(p) => {
            report.metric("period", p.period as f64);
            report.metric("factor", p.factor as f64);
            serde_json::to_value(p).expect("serializable")
        }
        Err(e) => json!({ "error": e.to_string() }),
    };
    let seed = options.seed.or(config.seed).unwrap_or(0);
    let samples = if doc.shots > 0 {
        Some(sample_x(&run.distribution, doc.shots, seed)?)
    } else {
        None
    };
    let summary = json!({
        "kind": "shor",
        "name": config.name,
        "mode": doc.mode,
        "tau1": doc.tau1,
        "tau2": doc.tau2,
        "energy_source": setup.energies.as_ref().map(|e| e.source()),
        "distribution": run.distribution,
        "period": period_json,
        "seed": seed,
        "samples": samples,
        "final_state": run.final_state.amplitudes().iter().enumerate().map(|(i, a)| {
            json!({ "basis": ket_label(i), "re": a.re, "im": a.im })
        }).collect::<Vec<_>>(),
    });
    report.add("shor.json", pretty(&summary));
    if format == OutputFormat::Csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["x", "probability"])?;
        for (x, p) in run.distribution.iter().enumerate() {
            w.write_record([x.to_string(), p.to_string()])?;
        }
        report.add("shor_distribution.csv", finish_csv(w)?);
    }
    if options.trace {
        let trace = trace_paths(&run)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["final", "path", "magnitude", "phase", "re", "im"])?;
        for (n, terms) in trace.terms.iter().enumerate() {
            for t in terms {
                let path: Vec<String> = t.path.iter().map(|&i| ket_label(i)).collect();
                w.write_record([
                    ket_label(n),
                    path.join(" -> "),
                    t.magnitude.to_string(),
                    t.phase.to_string(),
                    t.amplitude.re.to_string(),
                    t.amplitude.im.to_string(),
                ])?;
            }
        }
        report.add("shor_trace.csv", finish_csv(w)?);
    }
    Ok(report)
}

/// Design output: `omega` is the effective field `sqrt(Ω² + Δω²)` seen by
/// the detuned spin, `rabi` and `tau` the pulse itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub omega: f64,
    pub rabi: f64,
    pub tau: f64,
    pub k: u32,
    pub n: u32,
    pub delta_omega: f64,
}

pub fn design_report(delta_omega: f64, k: u32, n: u32) -> Result<DesignReport> {
    let d = design_2pik(delta_omega, k, n)?;
    Ok(DesignReport {
        omega: d.rabi.hypot(d.delta_omega),
        rabi: d.rabi,
        tau: d.duration,
        k: d.k,
        n: d.n,
        delta_omega: d.delta_omega,
    })
}

fn run_design(config: &ExperimentConfig) -> Result<RunReport> {
    let doc = config.design.as_ref().expect("validated");
    let d = design_report(doc.delta_omega, doc.k, doc.n)?;
    let mut report = RunReport::new(ExperimentKind::Design);
    report.metric("rabi", d.rabi);
    report.metric("tau", d.tau);
    report.add("design.json", pretty(&d));
    Ok(report)
}

/// Grid of `Δω/Ω` and `J/Ω` values.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    delta_omega_over_rabi: Vec<f64>,
    j_over_rabi: Vec<f64>,
}

impl SweepGrid {
    fn axis_problems(name: &str, axis: &[f64]) -> Vec<String> {
        let mut out = Vec::new();
        if axis.is_empty() {
            out.push(format!("{name}: empty"));
        }
        if axis.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            out.push(format!("{name}: values must be finite and positive"));
        }
        if axis.windows(2).any(|w| !(w[0] < w[1])) {
            out.push(format!("{name}: values must be strictly increasing"));
        }
        out
    }

    pub fn new(delta_omega_over_rabi: Vec<f64>, j_over_rabi: Vec<f64>) -> Result<Self> {
        let mut problems = Self::axis_problems("delta_omega_over_rabi", &delta_omega_over_rabi);
        problems.extend(Self::axis_problems("j_over_rabi", &j_over_rabi));
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        Ok(Self {
            delta_omega_over_rabi,
            j_over_rabi,
        })
    }

    pub fn cells(&self) -> Vec<(f64, f64)> {
        self.delta_omega_over_rabi
            .iter()
            .flat_map(|&d| self.j_over_rabi.iter().map(move |&j| (d, j)))
            .collect()
    }
}

/// Fixed parts of each sweep cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepTemplate {
    pub rabi: f64,
    pub target_larmor: f64,
    /// Two-spin initial amplitudes; `None` uses the standard superposition
    /// `sqrt(0.3), sqrt(0.2), 1/sqrt(3), 1/sqrt(6)`.
    pub initial_state: Option<Vec<C>>,
}

impl Default for SweepTemplate {
    fn default() -> Self {
        Self {
            rabi: default_sweep_rabi(),
            target_larmor: default_target_larmor(),
            initial_state: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta_omega_over_rabi: f64,
    pub j_over_rabi: f64,
    pub deviation: Option<f64>,
    pub fidelity: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    fn key(&self) -> String {
        format!("cell({}, {})", self.delta_omega_over_rabi, self.j_over_rabi)
    }
}

/// Superposition used as the default two-spin input.
pub fn standard_superposition() -> Vec<C> {
    [
        0.3f64.sqrt(),
        0.2f64.sqrt(),
        1.0 / 3f64.sqrt(),
        1.0 / 6f64.sqrt(),
    ]
    .iter()
    .map(|&a| C::new(a, 0.0))
    .collect()
}

/// Deviation and fidelity of one cell.
pub fn sweep_cell(
    template: &SweepTemplate,
    delta_omega_over_rabi: f64,
    j_over_rabi: f64,
) -> Result<(f64, f64)> {
    let rabi = template.rabi;
    let system = SpinSystem::uniformly_coupled(
        vec![
            template.target_larmor + delta_omega_over_rabi * rabi,
            template.target_larmor,
        ],
        j_over_rabi * rabi,
    )?;
    let pulse = cn_pulse(
        &system,
        0,
        1,
        &CnPulseOptions {
            variant: CnVariant::Standard,
            rabi: vec![rabi, rabi],
            phase: 0.0,
            exact_2pik: None,
        },
    )?;
    let initial = QuantumState::normalized(
        template
            .initial_state
            .clone()
            .unwrap_or_else(standard_superposition),
    )?;
    let u = crate::dynamics::interaction_propagator(&system, &pulse, 0.0)?;
    let realized = u.matvec(initial.amplitudes());
    let ideal = GateMatrix::cn_with_phase().apply(initial.amplitudes());
    let dev = deviation_metric(
        &ActiveBlock::from_amplitudes(&realized)?,
        &ActiveBlock::from_amplitudes(&ideal)?,
    );
    let fid = QuantumState::from_unchecked(realized).fidelity(&QuantumState::from_unchecked(ideal));
    Ok((dev, fid))
}

/// Runs every cell in parallel; rows come back in grid order.
pub fn run_sweep(grid: &SweepGrid, template: &SweepTemplate) -> Vec<SweepRow> {
    grid.cells()
        .into_par_iter()
        .map(|(d, j)| match sweep_cell(template, d, j) {
            Ok((dev, fid)) => SweepRow {
                delta_omega_over_rabi: d,
                j_over_rabi: j,
                deviation: Some(dev),
                fidelity: Some(fid),
                error: None,
            },
            Err(e) => SweepRow {
                delta_omega_over_rabi: d,
                j_over_rabi: j,
                deviation: None,
                fidelity: None,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "delta_omega_over_rabi",
        "j_over_rabi",
        "deviation",
        "fidelity",
        "error",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.delta_omega_over_rabi.to_string(),
            r.j_over_rabi.to_string(),
            opt(r.deviation),
            opt(r.fidelity),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    finish_csv(w)
}

/// Ready-made configs for the standard experiments.
pub mod presets {
    use super::*;

    fn pairs(v: &[C]) -> Vec<[f64; 2]> {
        v.iter().copied().map(pair).collect()
    }

    fn pulse_system(larmor: Vec<f64>, j: f64) -> SystemDocument {
        let system = SpinSystem::uniformly_coupled(larmor, j).expect("valid preset system");
        SystemDocument::from_system(&system)
    }

    /// Two spins at 500 and 100 with J = 5; standard CN on the right spin.
    pub fn cn() -> ExperimentConfig {
        let initial = standard_superposition();
        let expected = GateMatrix::cn_with_phase().apply(&initial);
        ExperimentConfig {
            name: Some("two-spin single-pulse CN".into()),
            system: Some(pulse_system(vec![500.0, 100.0], 5.0)),
            gate: Some(GateDocument {
                control: 0,
                target: 1,
                variant: CnVariant::Standard,
                rabi: Some(vec![0.5, 0.1]),
                phase: 0.0,
                exact_2pik: None,
            }),
            initial_state: Some(pairs(&initial)),
            reference: Some(ReferenceDocument {
                state: Some(pairs(&expected)),
                min_fidelity: Some(DEFAULT_MIN_FIDELITY),
                ..Default::default()
            }),
            ..ExperimentConfig::empty(ExperimentKind::Cn)
        }
    }

    /// Base frequency of the four-spin ensemble preset.
    pub const ENSEMBLE_OMEGA0: f64 = 100.0;

    /// Active amplitudes after the complementary CN on the standard superposition.
    pub fn complementary_cn_target() -> Vec<C> {
        let s = standard_superposition();
        vec![C::new(0.0, 1.0) * s[1], C::new(0.0, 1.0) * s[0], s[2], s[3]]
    }

    /// Four spins `ω0 + 300 … ω0`, J = 10 between every pair, Ω = 0.1;
    /// complementary CN with spin 2 controlling spin 3.
    pub fn ensemble() -> ExperimentConfig {
        let w0 = ENSEMBLE_OMEGA0;
        ExperimentConfig {
            name: Some("four-spin complementary CN, deviation density matrix".into()),
            system: Some(pulse_system(
                vec![w0 + 300.0, w0 + 200.0, w0 + 100.0, w0],
                10.0,
            )),
            gate: Some(GateDocument {
                control: 2,
                target: 3,
                variant: CnVariant::Complementary,
                rabi: Some(vec![0.1; 4]),
                phase: 0.0,
                exact_2pik: None,
            }),
            initial_state: Some(pairs(&standard_superposition())),
            reference: Some(ReferenceDocument {
                state: Some(pairs(&complementary_cn_target())),
                max_deviation: Some(DEFAULT_MAX_DEVIATION),
                max_background_change: Some(DEFAULT_MAX_DEVIATION),
                ..Default::default()
            }),
            ..ExperimentConfig::empty(ExperimentKind::Ensemble)
        }
    }

    pub fn shor(mode: ShorMode) -> ExperimentConfig {
        let delays = mode != ShorMode::Instantaneous;
        ExperimentConfig {
            name: Some("factoring 4 with base 3".into()),
            system: delays.then(|| pulse_system(vec![400.0, 300.0, 200.0, 100.0], 10.0)),
            shor: Some(ShorDocument {
                mode,
                tau1: if delays { 0.37 } else { 0.0 },
                tau2: if delays { 1.21 } else { 0.0 },
                energies: delays.then(|| EnergiesDocument::Source("derive".into())),
                shots: 1000,
            }),
            seed: Some(7),
            ..ExperimentConfig::empty(ExperimentKind::Shor)
        }
    }

    pub fn design() -> ExperimentConfig {
        ExperimentConfig {
            name: Some("exact CN for J = 5".into()),
            design: Some(DesignDocument {
                delta_omega: 10.0,
                k: 1,
                n: 1,
            }),
            ..ExperimentConfig::empty(ExperimentKind::Design)
        }
    }

    pub fn sweep() -> ExperimentConfig {
        ExperimentConfig {
            name: Some("CN threshold study".into()),
            sweep: Some(SweepDocument {
                delta_omega_over_rabi: vec![30.0, 300.0, 1000.0],
                j_over_rabi: vec![5.0, 50.0],
                rabi: default_sweep_rabi(),
                target_larmor: default_target_larmor(),
                max_deviation: None,
            }),
            output: OutputDocument {
                path: None,
                format: OutputFormat::Csv,
            },
            ..ExperimentConfig::empty(ExperimentKind::Sweep)
        }
    }
}
