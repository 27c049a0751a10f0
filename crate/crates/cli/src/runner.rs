//! Block-adaptive processing of a synthesized scenario with one or more
//! weight rules, followed by correlation and C/N0 estimation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use stpaps_core::beamform::{
    apply_weights_into, build_constraint_matrix, covariance, cross_correlation, mmse_weights, mvdr_single_weights,
    power_min_weights, single_freq_constraint, stap2_constraint, stpaps_weights, ArrayFrontEnd, ConstraintDesign,
    ConstraintMatrix, WeightVector, DEFAULT_BAND_HZ, DEFAULT_BLOCK_LEN, DEFAULT_EPSILON, DEFAULT_M_TAPS,
};
use stpaps_core::metrics::{correlate_blocks, suppression_db, Cn0Series};
use stpaps_core::polarization::{Direction, Polarization};
use stpaps_core::signals::{assemble, l1_wavelength, satellite_replica, synth_satellite, ArrayMode, SampleStream, Scenario};

use crate::error::{config, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Stpaps,
    Mvdr1,
    Mmse,
    Stap2,
    Pmin,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Stpaps, Method::Mvdr1, Method::Mmse, Method::Stap2, Method::Pmin];

    pub fn name(self) -> &'static str {
        match self {
            Method::Stpaps => "stpaps",
            Method::Mvdr1 => "mvdr1",
            Method::Mmse => "mmse",
            Method::Stap2 => "stap2",
            Method::Pmin => "pmin",
        }
    }

    /// Two-element STAP runs on the two-antenna stream; everything else on
    /// the dual-polarized element.
    pub fn mode(self) -> ArrayMode {
        match self {
            Method::Stap2 => ArrayMode::TwoElement,
            _ => ArrayMode::DualPolarized,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| config(format!("unknown method '{s}' (expected stpaps, mvdr1, mmse, stap2 or pmin)")))
    }
}

/// Parses a comma separated method list, keeping the given order and
/// dropping duplicates.
pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    let mut out: Vec<Method> = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let m: Method = part.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(config("at least one method is required"));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessingParams {
    pub m_taps: usize,
    pub epsilon: usize,
    pub zeta: Option<usize>,
    pub band_hz: (f64, f64),
    /// Samples per covariance window and per weight update.
    pub block_len: usize,
    /// Diagonal loading relative to `tr(R)/dim`.
    pub loading: f64,
}

impl Default for ProcessingParams {
    fn default() -> Self {
        ProcessingParams {
            m_taps: DEFAULT_M_TAPS,
            epsilon: DEFAULT_EPSILON,
            zeta: None,
            band_hz: DEFAULT_BAND_HZ,
            block_len: DEFAULT_BLOCK_LEN,
            loading: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub methods: Vec<Method>,
    pub params: ProcessingParams,
}

impl RunConfig {
    pub fn new(scenario: Scenario, methods: Vec<Method>) -> Self {
        RunConfig { scenario, methods, params: ProcessingParams::default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.methods.is_empty() {
            return Err(config("at least one method is required"));
        }
        if self.scenario.satellites.is_empty() {
            return Err(config("the scenario needs at least one satellite"));
        }
        let p = &self.params;
        if p.m_taps == 0 || p.epsilon == 0 || p.block_len == 0 {
            return Err(config("M, epsilon and the block length must be >= 1"));
        }
        if !(p.loading >= 0.0) {
            return Err(config(format!("loading {} must be >= 0", p.loading)));
        }
        if self.scenario.sample_count() < 2 * p.block_len + p.m_taps {
            return Err(config("scenario is shorter than two processing blocks"));
        }
        Ok(())
    }
}

/// Loads a scenario file, attaching the path to any error.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    Scenario::load(path).map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuppressionRow {
    pub epoch_ms: u64,
    pub jammer: usize,
    pub suppression_db: f64,
}

#[derive(Debug, Clone)]
pub struct MethodResult {
    pub method: Method,
    pub series: Cn0Series,
    pub suppression: Vec<SuppressionRow>,
    pub final_weights: WeightVector<f64>,
    /// Output-to-replica sample offset used by the correlator, per block.
    pub offsets: Vec<usize>,
}

impl MethodResult {
    /// Mean non-lost C/N0 over `[from_ms, to_ms)`.
    pub fn mean_cn0(&self, from_ms: u64, to_ms: u64) -> Option<f64> {
        self.series.summary(from_ms, to_ms).ok().and_then(|s| s.mean_dbhz)
    }

    /// Converged suppression: the value at the last update epoch per jammer.
    pub fn final_suppression(&self) -> Vec<f64> {
        let last = self.suppression.iter().map(|r| r.epoch_ms).max().unwrap_or(0);
        let mut rows: Vec<&SuppressionRow> = self.suppression.iter().filter(|r| r.epoch_ms == last).collect();
        rows.sort_by_key(|r| r.jammer);
        rows.iter().map(|r| r.suppression_db).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub scenario: Scenario,
    pub params: ProcessingParams,
    pub methods: Vec<MethodResult>,
}

impl RunResult {
    pub fn get(&self, m: Method) -> Option<&MethodResult> {
        self.methods.iter().find(|r| r.method == m)
    }

    /// First 20 ms epoch lying entirely after the latest jammer start.
    pub fn post_injection_ms(&self) -> u64 {
        let start = self.scenario.jammers.iter().map(|j| j.start_time_s).fold(0.0, f64::max);
        let ms = (start * 1e3).ceil() as u64;
        ms.div_ceil(20) * 20
    }

    pub fn duration_ms(&self) -> u64 {
        (self.scenario.duration_s * 1e3).round() as u64
    }

    /// Post-injection window, or the whole run when it ends before a full
    /// epoch after injection.
    pub fn analysis_window(&self) -> (u64, u64) {
        let (from, to) = (self.post_injection_ms(), self.duration_ms());
        if from + 20 <= to {
            (from, to)
        } else {
            (0, to)
        }
    }
}

fn direction(d: Direction<f64>) -> Direction<f64> {
    d.canonical()
}

/// How a method turns a covariance window into weights.
enum Rule {
    Stpaps(Box<ConstraintMatrix<f64>>),
    Mvdr(Vec<Complex<f64>>),
    Mmse(Vec<Complex<f64>>),
    Pmin,
}

fn front_end(scenario: &Scenario, mode: ArrayMode) -> Result<ArrayFrontEnd<f64>> {
    let field = scenario.radiation_field::<f64>()?;
    Ok(match mode {
        ArrayMode::DualPolarized => ArrayFrontEnd::dual_polarized(field),
        ArrayMode::TwoElement => ArrayFrontEnd::two_element(field, scenario.element_spacing_m),
    })
}

fn rule_for(method: Method, cfg: &RunConfig, front: &ArrayFrontEnd<f64>) -> Result<Rule> {
    let sc = &cfg.scenario;
    let p = &cfg.params;
    let sat = &sc.satellites[0];
    let d = direction(sat.direction);
    Ok(match method {
        Method::Stpaps => {
            let design = ConstraintDesign {
                m_taps: p.m_taps,
                sample_rate_hz: sc.sample_rate_hz,
                epsilon: p.epsilon,
                band_hz: p.band_hz,
                zeta: p.zeta,
            };
            Rule::Stpaps(Box::new(build_constraint_matrix(d, Polarization::rhcp(), front, &design)?))
        }
        Method::Mvdr1 => Rule::Mvdr(single_freq_constraint(d, Polarization::rhcp(), p.m_taps, front)?),
        Method::Stap2 => Rule::Mvdr(stap2_constraint(d, p.m_taps, sc.element_spacing_m, l1_wavelength())),
        Method::Mmse => Rule::Mmse(satellite_replica(sat, sc.sample_rate_hz, sc.sample_count(), true)?),
        Method::Pmin => Rule::Pmin,
    })
}

/// Offset in `0..m` maximizing the noise-free prompt of the filtered
/// satellite signal over one block: the filter's group delay for it.
fn signal_delay(
    w: &WeightVector<f64>,
    clean: &SampleStream<f64>,
    replica: &[Complex<f64>],
    block: std::ops::Range<usize>,
    scratch: &mut Vec<Complex<f64>>,
) -> Result<usize> {
    let m = w.m_taps;
    let end = (block.end + m - 1).min(clean.len());
    scratch.resize(end - block.start, Complex::new(0.0, 0.0));
    apply_weights_into(w, clean, block.start..end, scratch)?;
    let mut best = (0, -1.0);
    for off in 0..m {
        let p: Complex<f64> =
            block.clone().filter(|&n| n + off < end).map(|n| scratch[n + off - block.start] * replica[n].conj()).sum();
        if p.norm_sqr() > best.1 {
            best = (off, p.norm_sqr());
        }
    }
    Ok(best.0)
}

/// Runs one method over a pre-assembled stream.
pub fn process(method: Method, cfg: &RunConfig, stream: &SampleStream<f64>) -> Result<MethodResult> {
    let sc = &cfg.scenario;
    let p = &cfg.params;
    let front = front_end(sc, method.mode())?;
    let rule = rule_for(method, cfg, &front)?;
    let (l, m) = (p.block_len, p.m_taps);
    let blocks = stream.len() / l;
    let mut out = vec![Complex::new(0.0, 0.0); blocks * l];
    let mut suppression = Vec::with_capacity(blocks * sc.jammers.len());
    let sat = &sc.satellites[0];
    let replica = satellite_replica(sat, sc.sample_rate_hz, stream.len(), false)?;
    let clean =
        SampleStream::new(method.mode().labels(), synth_satellite(sat, sc, &front.field, method.mode())?, sc.sample_rate_hz)?;
    let mut offsets = Vec::with_capacity(blocks);
    let mut scratch = Vec::new();
    let mut w = WeightVector::unit(m, 0, 0);
    for b in 0..blocks {
        // Until a full past window exists, use the first full one.
        let end = (b * l).saturating_sub(1).max(l + m - 2);
        let r = covariance(stream, end, l, m)?.loaded(p.loading)?;
        w = match &rule {
            Rule::Stpaps(c) => stpaps_weights(&r, c)?,
            Rule::Mvdr(c) => mvdr_single_weights(&r, c)?,
            Rule::Mmse(replica) => {
                let pv = cross_correlation(stream, replica, end, l, m)?;
                mmse_weights(&r, &pv)?
            }
            Rule::Pmin => power_min_weights(&r)?,
        };
        apply_weights_into(&w, stream, b * l..(b + 1) * l, &mut out[b * l..(b + 1) * l])?;
        offsets.push(signal_delay(&w, &clean, &replica, b * l..(b + 1) * l, &mut scratch)?);
        let epoch_ms = (b as f64 * l as f64 / sc.sample_rate_hz * 1e3).round() as u64;
        for (k, j) in sc.jammers.iter().enumerate() {
            suppression.push(SuppressionRow {
                epoch_ms,
                jammer: k,
                suppression_db: suppression_db(&w, j, &front, sc.sample_rate_hz)?,
            });
        }
    }
    let prompts = correlate_blocks(&out, &replica, l, &offsets);
    Ok(MethodResult { method, series: Cn0Series::from_prompts(&prompts), suppression, final_weights: w, offsets })
}

/// Synthesizes the streams the requested methods need and processes each.
pub fn simulate(cfg: &RunConfig) -> Result<RunResult> {
    cfg.validate()?;
    let field = cfg.scenario.radiation_field::<f64>()?;
    let mut modes: Vec<ArrayMode> = cfg.methods.iter().map(|m| m.mode()).collect();
    modes.sort_by_key(|m| *m as u8);
    modes.dedup();
    let streams: Vec<(ArrayMode, SampleStream<f64>)> =
        modes.into_iter().map(|mode| Ok((mode, assemble(&cfg.scenario, &field, mode)?))).collect::<Result<_>>()?;
    let methods = cfg
        .methods
        .par_iter()
        .map(|&m| {
            let s = &streams.iter().find(|(mode, _)| *mode == m.mode()).expect("stream for mode").1;
            log::info!("processing {m}");
            process(m, cfg, s)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunResult { scenario: cfg.scenario.clone(), params: cfg.params, methods })
}

/// Writes `cn0_<method>.csv`, `suppression.csv`, `weights_<method>.json`
/// and `cn0.svg` into `dir`.
pub fn write_outputs(result: &RunResult, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for r in &result.methods {
        let path = dir.join(format!("cn0_{}.csv", r.method));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["epoch_ms", "cn0_dbhz", "lost"])?;
        for i in 0..r.series.len() {
            let v = if r.series.lost[i] { String::new() } else { format!("{:.4}", r.series.cn0_dbhz[i]) };
            w.write_record([r.series.epoch_ms[i].to_string(), v, r.series.lost[i].to_string()])?;
        }
        w.flush()?;
        written.push(path);

        let path = dir.join(format!("weights_{}.json", r.method));
        let dump = WeightsFile {
            method: r.method,
            mode: r.method.mode(),
            m_taps: r.final_weights.m_taps,
            weights: r.final_weights.weights.iter().map(|z| [z.re, z.im]).collect(),
            antenna: result.scenario.antenna.clone(),
            element_spacing_m: result.scenario.element_spacing_m,
            sample_rate_hz: result.scenario.sample_rate_hz,
        };
        std::fs::write(&path, serde_json::to_string_pretty(&dump)? + "\n")?;
        written.push(path);
    }
    let path = dir.join("suppression.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["method", "epoch_ms", "jammer", "suppression_db"])?;
    for r in &result.methods {
        for row in &r.suppression {
            w.write_record([
                r.method.to_string(),
                row.epoch_ms.to_string(),
                row.jammer.to_string(),
                format!("{:.4}", row.suppression_db),
            ])?;
        }
    }
    w.flush()?;
    written.push(path);

    let path = dir.join("cn0.svg");
    let series: Vec<crate::plot::Series> = result
        .methods
        .iter()
        .map(|r| crate::plot::Series {
            label: r.method.to_string(),
            points: (0..r.series.len())
                .filter(|&i| !r.series.lost[i])
                .map(|i| (r.series.epoch_ms[i] as f64, r.series.cn0_dbhz[i]))
                .collect(),
        })
        .collect();
    std::fs::write(&path, crate::plot::line_chart("C/N0", "time (ms)", "C/N0 (dB-Hz)", &series))?;
    written.push(path);
    Ok(written)
}

/// Final weights of one method plus what is needed to evaluate their gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsFile {
    pub method: Method,
    pub mode: ArrayMode,
    pub m_taps: usize,
    /// `[re, im]` pairs in the interleaved layout.
    pub weights: Vec<[f64; 2]>,
    pub antenna: stpaps_core::signals::AntennaSpec,
    pub element_spacing_m: f64,
    pub sample_rate_hz: f64,
}

impl WeightsFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn weight_vector(&self) -> Result<WeightVector<f64>> {
        Ok(WeightVector::new(self.m_taps, self.weights.iter().map(|&[re, im]| Complex::new(re, im)).collect())?)
    }

    pub fn front_end(&self) -> Result<ArrayFrontEnd<f64>> {
        let field = self.antenna.build::<f64>(None)?;
        Ok(match self.mode {
            ArrayMode::DualPolarized => ArrayFrontEnd::dual_polarized(field),
            ArrayMode::TwoElement => ArrayFrontEnd::two_element(field, self.element_spacing_m),
        })
    }
}
