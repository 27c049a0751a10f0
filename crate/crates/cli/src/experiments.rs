//! JNR sweep, weight-computation benchmark and gain map.

use std::path::Path;
use std::time::Instant;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use stpaps_core::beamform::{
    build_constraint_matrix, covariance, cross_correlation, gain, mmse_weights, mvdr_single_weights, power_min_weights,
    single_freq_constraint, stpaps_weights, ArrayFrontEnd, ConstraintDesign, CovarianceEstimate,
};
use stpaps_core::polarization::{Direction, Polarization};
use stpaps_core::signals::{assemble, satellite_replica, ArrayMode, Scenario};

use crate::error::{config, Result};
use crate::plot;
use crate::runner::{simulate, Method, ProcessingParams, RunConfig, WeightsFile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub jnr_db: f64,
    pub method: Method,
    /// Mean non-lost C/N0 after injection; empty when every epoch is lost.
    pub mean_cn0_dbhz: Option<f64>,
    pub lost_epochs: usize,
    pub epochs: usize,
}

/// Runs the scenario once per JNR (applied to every jammer) and averages
/// C/N0 from the first epoch after injection to the end of the run.
pub fn sweep_jnr(cfg: &RunConfig, jnrs: &[f64]) -> Result<Vec<SweepRow>> {
    if jnrs.is_empty() {
        return Err(config("the JNR list is empty"));
    }
    if let Some(bad) = jnrs.iter().find(|j| !j.is_finite()) {
        return Err(config(format!("JNR {bad} is not finite")));
    }
    let mut rows = Vec::new();
    for &jnr in jnrs {
        let mut c = cfg.clone();
        for j in &mut c.scenario.jammers {
            j.jnr_db = jnr;
        }
        log::info!("sweep: JNR {jnr} dB");
        let r = simulate(&c)?;
        let (from, to) = r.analysis_window();
        for m in &r.methods {
            let s = m.series.summary(from, to)?;
            rows.push(SweepRow {
                jnr_db: jnr,
                method: m.method,
                mean_cn0_dbhz: s.mean_dbhz,
                lost_epochs: s.lost,
                epochs: s.epochs,
            });
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["jnr_db", "method", "mean_cn0_dbhz", "lost_epochs", "epochs"])?;
    for r in rows {
        w.write_record([
            format!("{}", r.jnr_db),
            r.method.to_string(),
            r.mean_cn0_dbhz.map_or(String::new(), |v| format!("{v:.4}")),
            r.lost_epochs.to_string(),
            r.epochs.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: Method,
    pub m_taps: usize,
    pub epsilon: usize,
    pub runs: usize,
    /// Mean wall time per weight computation.
    pub mean_us: f64,
    /// Coefficient of variation of the per-batch means.
    pub cv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub runs: usize,
    pub batches: usize,
    pub m_taps: usize,
    pub epsilons: &'static [usize],
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { runs: 100, batches: 5, m_taps: 15, epsilons: &[50, 100, 200, 400] }
    }
}

/// Covariance and replica cross-correlation of the first post-injection
/// block of `scenario`, the inputs every weight rule is timed on.
fn bench_inputs(scenario: &Scenario, m_taps: usize, block_len: usize) -> Result<(CovarianceEstimate<f64>, Vec<Complex<f64>>)> {
    let field = scenario.radiation_field::<f64>()?;
    let stream = assemble(scenario, &field, ArrayMode::DualPolarized)?;
    let start = scenario.jammers.iter().map(|j| j.start_time_s).fold(0.0, f64::max);
    let end = (((start * scenario.sample_rate_hz) as usize / block_len + 2) * block_len - 1).min(stream.len() - 1);
    let r = covariance(&stream, end, block_len, m_taps)?;
    let replica = satellite_replica(&scenario.satellites[0], scenario.sample_rate_hz, stream.len(), true)?;
    let p = cross_correlation(&stream, &replica, end, block_len, m_taps)?;
    Ok((r, p))
}

fn time_batches(runs: usize, batches: usize, mut f: impl FnMut() -> Result<()>) -> Result<(f64, f64)> {
    f()?;
    let mut means = Vec::with_capacity(batches);
    for _ in 0..batches {
        let t = Instant::now();
        for _ in 0..runs {
            f()?;
        }
        means.push(t.elapsed().as_secs_f64() * 1e6 / runs as f64);
    }
    let mean = means.iter().sum::<f64>() / means.len() as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (means.len().max(2) - 1) as f64;
    Ok((mean, var.sqrt() / mean))
}

/// Times each weight rule. STPAPS includes building and factoring the
/// constraint matrix, as it must whenever the satellite direction changes.
pub fn bench(scenario: &Scenario, cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    if cfg.runs == 0 || cfg.batches == 0 || cfg.epsilons.is_empty() {
        return Err(config("bench needs runs, batches and at least one epsilon"));
    }
    if scenario.satellites.is_empty() {
        return Err(config("the bench scenario needs a satellite"));
    }
    let m = cfg.m_taps;
    let (r, p) = bench_inputs(scenario, m, ProcessingParams::default().block_len)?;
    let front = ArrayFrontEnd::dual_polarized(scenario.radiation_field::<f64>()?);
    let d = scenario.satellites[0].direction;
    let mut rows = Vec::new();
    let mut push =
        |method, epsilon, (mean_us, cv)| rows.push(BenchRow { method, m_taps: m, epsilon, runs: cfg.runs, mean_us, cv });

    for &eps in cfg.epsilons {
        let design = ConstraintDesign { m_taps: m, epsilon: eps, sample_rate_hz: scenario.sample_rate_hz, ..Default::default() };
        let t = time_batches(cfg.runs, cfg.batches, || {
            let c = build_constraint_matrix(d, Polarization::rhcp(), &front, &design)?;
            std::hint::black_box(stpaps_weights(&r, &c)?);
            Ok(())
        })?;
        push(Method::Stpaps, eps, t);
    }
    let t = time_batches(cfg.runs, cfg.batches, || {
        let c = single_freq_constraint(d, Polarization::rhcp(), m, &front)?;
        std::hint::black_box(mvdr_single_weights(&r, &c)?);
        Ok(())
    })?;
    push(Method::Mvdr1, 0, t);
    let t = time_batches(cfg.runs, cfg.batches, || {
        std::hint::black_box(mmse_weights(&r, &p)?);
        Ok(())
    })?;
    push(Method::Mmse, 0, t);
    let t = time_batches(cfg.runs, cfg.batches, || {
        std::hint::black_box(power_min_weights(&r)?);
        Ok(())
    })?;
    push(Method::Pmin, 0, t);
    Ok(rows)
}

pub fn write_bench_csv(rows: &[BenchRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "m_taps", "epsilon", "runs", "mean_us", "cv"])?;
    for r in rows {
        w.write_record([
            r.method.to_string(),
            r.m_taps.to_string(),
            r.epsilon.to_string(),
            r.runs.to_string(),
            format!("{:.3}", r.mean_us),
            format!("{:.4}", r.cv),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Ratio of STPAPS time at `epsilon` to MVDR1 time.
pub fn stpaps_mvdr1_ratio(rows: &[BenchRow], epsilon: usize) -> Option<f64> {
    let s = rows.iter().find(|r| r.method == Method::Stpaps && r.epsilon == epsilon)?;
    let m = rows.iter().find(|r| r.method == Method::Mvdr1)?;
    Some(s.mean_us / m.mean_us)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub phi_step_deg: f64,
    pub theta_step_deg: f64,
    pub theta_max_deg: f64,
    pub polarization: Polarization<f64>,
    pub freq_hz: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { phi_step_deg: 3.0, theta_step_deg: 3.0, theta_max_deg: 90.0, polarization: Polarization::rhcp(), freq_hz: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainMap {
    pub phi_deg: Vec<f64>,
    pub theta_deg: Vec<f64>,
    /// `gain_db[i_theta][i_phi]`, clamped at -200 dB.
    pub gain_db: Vec<Vec<f64>>,
}

fn axis(step: f64, max: f64, include_max: bool) -> Vec<f64> {
    let n = (max / step + 1e-9).floor() as usize;
    (0..=n).map(|i| i as f64 * step).filter(|&v| include_max || v < max - 1e-9).collect()
}

/// `20 log10 |g|` of `weights` over azimuth `[0, 360)` and elevation
/// `[0, theta_max]`.
pub fn gain_map(weights: &WeightsFile, grid: &GridSpec) -> Result<GainMap> {
    if !(grid.phi_step_deg > 0.0) || !(grid.theta_step_deg > 0.0) {
        return Err(config("grid steps must be > 0"));
    }
    if !(0.0..=90.0).contains(&grid.theta_max_deg) {
        return Err(config("theta_max must lie in [0, 90]"));
    }
    grid.polarization.validate()?;
    let w = weights.weight_vector()?;
    let front: ArrayFrontEnd<f64> = weights.front_end()?;
    let phi = axis(grid.phi_step_deg, 360.0, false);
    let theta = axis(grid.theta_step_deg, grid.theta_max_deg, true);
    let mut gain_db = Vec::with_capacity(theta.len());
    for &t in &theta {
        let mut row = Vec::with_capacity(phi.len());
        for &p in &phi {
            let g = gain(&w, Direction::new(p, t)?, grid.polarization, grid.freq_hz, weights.sample_rate_hz, &front)?.norm();
            row.push(if g > 0.0 { (20.0 * g.log10()).max(-200.0) } else { -200.0 });
        }
        gain_db.push(row);
    }
    Ok(GainMap { phi_deg: phi, theta_deg: theta, gain_db })
}

pub fn write_gain_map(map: &GainMap, csv_path: impl AsRef<Path>, svg_path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(csv_path)?;
    w.write_record(["phi_deg", "theta_deg", "gain_db"])?;
    for (i, t) in map.theta_deg.iter().enumerate() {
        for (j, p) in map.phi_deg.iter().enumerate() {
            w.write_record([format!("{p}"), format!("{t}"), format!("{:.4}", map.gain_db[i][j])])?;
        }
    }
    w.flush()?;
    let svg = plot::heat_map(
        "|g| (dB)",
        "azimuth (deg)",
        "zenith angle (deg)",
        (0.0, 360.0),
        (map.theta_deg[0], *map.theta_deg.last().unwrap_or(&0.0)),
        &map.gain_db,
    );
    std::fs::write(svg_path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use stpaps_core::signals::AntennaSpec;

    fn unit_weights() -> WeightsFile {
        let mut weights = vec![[0.0, 0.0]; 30];
        weights[0] = [1.0, 0.0];
        WeightsFile {
            method: Method::Pmin,
            mode: ArrayMode::DualPolarized,
            m_taps: 15,
            weights,
            antenna: AntennaSpec::Synthetic { zenith_taper_exponent: 1.0, cross_pol_leakage: 0.0, azimuth_phase_cycles: 1 },
            element_spacing_m: 0.095,
            sample_rate_hz: 5e6,
        }
    }

    #[test]
    fn unit_weight_map_is_the_taper() {
        let grid = GridSpec { phi_step_deg: 30.0, theta_step_deg: 15.0, ..Default::default() };
        let map = gain_map(&unit_weights(), &grid).unwrap();
        assert_eq!(map.phi_deg.len(), 12);
        assert_eq!(map.theta_deg.len(), 7);
        for (i, t) in map.theta_deg.iter().enumerate().take(6) {
            let expect = 20.0 * t.to_radians().cos().log10();
            for v in &map.gain_db[i] {
                assert!((v - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gain_map_errors() {
        let zero = GridSpec { phi_step_deg: 0.0, ..Default::default() };
        assert!(gain_map(&unit_weights(), &zero).is_err());
        let mut bad = unit_weights();
        bad.weights.pop();
        assert!(gain_map(&bad, &GridSpec::default()).is_err());
    }

    #[test]
    fn empty_jnr_list() {
        let sc = Scenario::from_json(
            r#"{"duration_s": 0.01, "satellites": [{"prn": 8, "direction": {"phi_deg": 0, "theta_deg": 0}, "cn0_dbhz": 44}]}"#,
        )
        .unwrap();
        assert!(sweep_jnr(&RunConfig::new(sc, vec![Method::Stpaps]), &[]).is_err());
    }
}
