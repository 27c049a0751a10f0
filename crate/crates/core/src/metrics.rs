//! Prompt correlation, C/N0 estimation and jammer suppression.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::beamform::{gain, ArrayFrontEnd, WeightVector};
use crate::polarization::{Direction, Polarization};
use crate::signals::JammerSpec;
use crate::{Error, Real, Result};

pub const PROMPTS_PER_BIT: usize = 20;
pub const TRACKING_THRESHOLD_DBHZ: f64 = 30.0;
pub const SUPPRESSION_FLOOR_DB: f64 = -200.0;

/// Coherent prompts `P_b = sum_n u[n + offset] r^*[n]` over consecutive
/// blocks of `block_len` samples. Incomplete trailing blocks are dropped.
pub fn correlate<T: Real>(u: &[Complex<T>], replica: &[Complex<f64>], block_len: usize, offset: usize) -> Vec<Complex<f64>> {
    if block_len == 0 {
        return Vec::new();
    }
    let usable = replica.len().min(u.len().saturating_sub(offset));
    let blocks = usable / block_len;
    (0..blocks)
        .map(|b| {
            let mut acc = Complex::new(0.0, 0.0);
            for n in b * block_len..(b + 1) * block_len {
                let x = u[n + offset];
                acc += Complex::new(x.re.to_f64_lossy(), x.im.to_f64_lossy()) * replica[n].conj();
            }
            acc
        })
        .collect()
}

/// Like [`correlate`] with a separate offset per block; blocks whose
/// offset runs past the end of `u` are dropped.
pub fn correlate_blocks<T: Real>(
    u: &[Complex<T>],
    replica: &[Complex<f64>],
    block_len: usize,
    offsets: &[usize],
) -> Vec<Complex<f64>> {
    let mut out = Vec::with_capacity(offsets.len());
    for (b, &off) in offsets.iter().enumerate() {
        let end = (b + 1) * block_len;
        if end > replica.len() || end + off > u.len() {
            break;
        }
        let mut acc = Complex::new(0.0, 0.0);
        for n in b * block_len..end {
            let x = u[n + off];
            acc += Complex::new(x.re.to_f64_lossy(), x.im.to_f64_lossy()) * replica[n].conj();
        }
        out.push(acc);
    }
    out
}

/// Offset in `0..max_offset` maximizing total prompt energy over the
/// blocks in `blocks` (compensates the filter's group delay).
pub fn best_offset<T: Real>(
    u: &[Complex<T>],
    replica: &[Complex<f64>],
    block_len: usize,
    max_offset: usize,
    blocks: std::ops::Range<usize>,
) -> usize {
    let energy = |off: usize| -> f64 {
        let p = correlate(u, replica, block_len, off);
        p.get(blocks.start.min(p.len())..blocks.end.min(p.len())).map_or(0.0, |s| s.iter().map(|z| z.norm_sqr()).sum())
    };
    let mut best = (0, f64::NEG_INFINITY);
    for off in 0..max_offset.max(1) {
        let e = energy(off);
        if e > best.1 {
            best = (off, e);
        }
    }
    best.0
}

/// One C/N0 estimate; `None` when the power ratio is degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cn0Estimate(pub Option<f64>);

impl Cn0Estimate {
    pub fn is_lost(&self) -> bool {
        self.0.is_none()
    }
}

/// Narrowband/wideband power ratio over one window of prompts with
/// integration time `t_int` seconds:
/// `NP = |sum P|^2 / sum |P|^2`, `C/N0 = (NP - 1) / (t_int (N - NP))`.
pub fn cn0_nwpr(prompts: &[Complex<f64>], t_int: f64) -> Result<Cn0Estimate> {
    let n = prompts.len();
    if n < 2 || !(t_int > 0.0) {
        return Err(Error::domain("NWPR needs at least 2 prompts and a positive integration time"));
    }
    let wide: f64 = prompts.iter().map(|z| z.norm_sqr()).sum();
    let narrow = prompts.iter().sum::<Complex<f64>>().norm_sqr();
    if !(wide > 0.0) {
        return Ok(Cn0Estimate(None));
    }
    let np = narrow / wide;
    let nf = n as f64;
    if !(np > 1.0 && np < nf) {
        return Ok(Cn0Estimate(None));
    }
    Ok(Cn0Estimate(Some(10.0 * ((np - 1.0) / (t_int * (nf - np))).log10())))
}

/// C/N0 per navigation bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cn0Series {
    /// Start time of each 20 ms window.
    pub epoch_ms: Vec<u64>,
    /// `NaN` where `lost` is set.
    pub cn0_dbhz: Vec<f64>,
    pub lost: Vec<bool>,
}

impl Cn0Series {
    /// Splits 1 ms prompts into bit-aligned 20 ms windows starting at prompt 0.
    pub fn from_prompts(prompts: &[Complex<f64>]) -> Self {
        let mut s = Cn0Series { epoch_ms: vec![], cn0_dbhz: vec![], lost: vec![] };
        for (i, w) in prompts.chunks_exact(PROMPTS_PER_BIT).enumerate() {
            let e = cn0_nwpr(w, 1e-3).expect("window of 20 prompts");
            s.epoch_ms.push((i * PROMPTS_PER_BIT) as u64);
            s.cn0_dbhz.push(e.0.unwrap_or(f64::NAN));
            s.lost.push(e.is_lost());
        }
        s
    }

    pub fn len(&self) -> usize {
        self.epoch_ms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epoch_ms.is_empty()
    }

    fn window(&self, from_ms: u64, to_ms: u64) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.epoch_ms[i] >= from_ms && self.epoch_ms[i] + PROMPTS_PER_BIT as u64 <= to_ms)
    }

    /// Mean (dB) of the non-lost estimates in windows lying inside
    /// `[from_ms, to_ms)`, and the number of lost windows.
    pub fn summary(&self, from_ms: u64, to_ms: u64) -> Result<WindowSummary> {
        let idx: Vec<usize> = self.window(from_ms, to_ms).collect();
        if idx.is_empty() {
            return Err(Error::domain(format!("no C/N0 epochs inside [{from_ms}, {to_ms}) ms")));
        }
        let good: Vec<f64> = idx.iter().filter(|&&i| !self.lost[i]).map(|&i| self.cn0_dbhz[i]).collect();
        let mean = if good.is_empty() { None } else { Some(good.iter().sum::<f64>() / good.len() as f64) };
        Ok(WindowSummary { epochs: idx.len(), lost: idx.len() - good.len(), mean_dbhz: mean })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSummary {
    pub epochs: usize,
    pub lost: usize,
    pub mean_dbhz: Option<f64>,
}

/// True iff the mean C/N0 in the window is at least 30 dB-Hz and no
/// window epoch is lost.
pub fn is_tracking(series: &Cn0Series, from_ms: u64, to_ms: u64) -> Result<bool> {
    let s = series.summary(from_ms, to_ms)?;
    Ok(s.lost == 0 && s.mean_dbhz.is_some_and(|m| m >= TRACKING_THRESHOLD_DBHZ))
}

/// `20 log10 |g|` at the jammer's direction, polarization and IF,
/// clamped at -200 dB.
pub fn suppression_db<T: Real>(w: &WeightVector<T>, jammer: &JammerSpec, front: &ArrayFrontEnd<T>, fs: f64) -> Result<f64> {
    let d = Direction { phi_deg: T::of(jammer.direction.phi_deg), theta_deg: T::of(jammer.direction.theta_deg) };
    let p = Polarization { gamma_deg: T::of(jammer.polarization.gamma_deg), eta_deg: T::of(jammer.polarization.eta_deg) };
    let g = gain(w, d, p, T::of(jammer.if_center_hz), T::of(fs), front)?.norm().to_f64_lossy();
    Ok(if g > 0.0 { (20.0 * g.log10()).max(SUPPRESSION_FLOOR_DB) } else { SUPPRESSION_FLOOR_DB })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::antenna::{RadiationField, SyntheticPatternParams};
    use crate::signals::{noise, satellite_replica, JammerKind, SatelliteSpec};

    fn sat(prn: u8, cn0: f64) -> SatelliteSpec {
        SatelliteSpec {
            prn,
            direction: Direction::new(0.0, 0.0).unwrap(),
            cn0_dbhz: cn0,
            code_phase_chips: 0.0,
            doppler_hz: 0.0,
            nav_bits: None,
        }
    }

    fn noisy(prn: u8, cn0: f64, n: usize, seed: u64, nav: Option<Vec<i8>>) -> Vec<Complex<f64>> {
        let s = SatelliteSpec { nav_bits: nav, ..sat(prn, cn0) };
        let a = s.amplitude(1.0, 5e6);
        let clean = satellite_replica(&s, 5e6, n, true).unwrap();
        noise(seed, 0, 1.0, n).iter().zip(&clean).map(|(w, c)| w + c * a).collect()
    }

    #[test]
    fn prompt_coherent_gain() {
        let s = sat(8, 44.0);
        let a = s.amplitude(1.0, 5e6);
        let rep = satellite_replica(&s, 5e6, 20_000, false).unwrap();
        let u: Vec<Complex<f64>> = rep.iter().map(|z| z * a).collect();
        let p = correlate(&u, &rep, 5000, 0);
        assert_eq!(p.len(), 4);
        for z in &p {
            assert!((z.norm() / (a * 5000.0) - 1.0).abs() < 0.02);
        }
        let wrong = satellite_replica(&sat(1, 44.0), 5e6, 20_000, false).unwrap();
        let q = correlate(&u, &wrong, 5000, 0);
        for (x, y) in p.iter().zip(&q) {
            assert!(20.0 * (y.norm() / x.norm()).log10() <= -20.0);
        }
        // Magnitudes ignore a global phase rotation.
        let rot: Vec<Complex<f64>> = u.iter().map(|z| z * Complex::from_polar(1.0, 1.1)).collect();
        for (x, y) in p.iter().zip(correlate(&rot, &rep, 5000, 0)) {
            assert!((x.norm() - y.norm()).abs() < 1e-9);
        }
    }

    #[test]
    fn prompt_noise_power() {
        let rep = satellite_replica(&sat(8, 0.0), 5e6, 1_000_000, false).unwrap();
        let nz = noise(5, 0, 1.0, 1_000_000);
        let p = correlate(&nz, &rep, 5000, 0);
        let e = p.iter().map(|z| z.norm_sqr()).sum::<f64>() / p.len() as f64;
        assert!((e / 5000.0 - 1.0).abs() < 0.15, "{e}");
    }

    #[test]
    fn offset_search_finds_delay() {
        let s = sat(8, 60.0);
        let rep = satellite_replica(&s, 5e6, 30_000, false).unwrap();
        let mut u = vec![Complex::new(0.0, 0.0); 7];
        u.extend_from_slice(&rep[..30_000 - 7]);
        assert_eq!(best_offset(&u, &rep, 5000, 15, 0..5), 7);
    }

    #[test]
    fn per_block_offsets() {
        let s = sat(8, 60.0);
        let rep = satellite_replica(&s, 5e6, 20_000, false).unwrap();
        let mut u = vec![Complex::new(0.0, 0.0); 3];
        u.extend_from_slice(&rep);
        let fixed = correlate(&u, &rep, 5000, 3);
        let per = correlate_blocks(&u, &rep, 5000, &[3, 3, 3, 3]);
        assert_eq!(fixed, per);
        assert_eq!(correlate_blocks(&u, &rep, 5000, &[3, 3, 3, 4]).len(), 3);
    }

    #[test]
    fn nwpr_degenerate_and_exact() {
        let z = vec![Complex::new(0.0, 0.0); 20];
        assert!(cn0_nwpr(&z, 1e-3).unwrap().is_lost());
        let c = vec![Complex::new(1.0, 0.0); 20];
        assert!(cn0_nwpr(&c, 1e-3).unwrap().is_lost());
        assert!(cn0_nwpr(&c[..1], 1e-3).is_err());
        // NP = 2 -> C/N0 = 1 / (1e-3 * 18).
        let mut p = vec![Complex::new(0.0, 0.0); 20];
        p[0] = Complex::new(1.0, 0.0);
        p[1] = Complex::new(1.0, 0.0);
        let e = cn0_nwpr(&p, 1e-3).unwrap().0.unwrap();
        assert!((e - 10.0 * (1.0 / 0.018f64).log10()).abs() < 1e-12);
    }

    fn run_mean(cn0: f64, seed: u64) -> f64 {
        let n = 2_000_000;
        let nav: Vec<i8> = (0..20).map(|i| if (i * 7 + seed as usize).is_multiple_of(3) { -1 } else { 1 }).collect();
        let u = noisy(8, cn0, n, seed, Some(nav));
        let rep = satellite_replica(&sat(8, cn0), 5e6, n, false).unwrap();
        let s = Cn0Series::from_prompts(&correlate(&u, &rep, 5000, 0));
        assert_eq!(s.len(), 20);
        s.summary(0, 400).unwrap().mean_dbhz.unwrap()
    }

    #[test]
    fn nwpr_recovers_truth() {
        assert!((run_mean(44.0, 1) - 44.0).abs() <= 1.0);
        assert!((run_mean(30.0, 2) - 30.0).abs() <= 1.5);
    }

    #[test]
    fn nwpr_noise_floor() {
        let rep = satellite_replica(&sat(8, 0.0), 5e6, 2_000_000, false).unwrap();
        let s = Cn0Series::from_prompts(&correlate(&noise(3, 0, 1.0, 2_000_000), &rep, 5000, 0));
        for i in 0..s.len() {
            assert!(s.lost[i] || s.cn0_dbhz[i] < 20.0 + 5.0);
        }
        let sum = s.summary(0, 400).unwrap();
        assert!(sum.lost > 0 || sum.mean_dbhz.unwrap() < 20.0);
        assert!(!is_tracking(&s, 0, 400).unwrap());
    }

    fn constant(v: f64, lost_at: Option<usize>) -> Cn0Series {
        let mut s = Cn0Series { epoch_ms: (0..20).map(|i| i * 20).collect(), cn0_dbhz: vec![v; 20], lost: vec![false; 20] };
        if let Some(i) = lost_at {
            s.lost[i] = true;
            s.cn0_dbhz[i] = f64::NAN;
        }
        s
    }

    #[test]
    fn tracking_examples() {
        assert!(is_tracking(&constant(44.0, None), 200, 400).unwrap());
        assert!(!is_tracking(&constant(25.0, None), 200, 400).unwrap());
        assert!(!is_tracking(&constant(44.0, Some(15)), 200, 400).unwrap());
        assert!(is_tracking(&constant(44.0, Some(3)), 200, 400).unwrap());
        assert!(is_tracking(&constant(44.0, None), 500, 600).is_err());
        let sum = constant(44.0, Some(12)).summary(200, 400).unwrap();
        assert_eq!((sum.epochs, sum.lost), (10, 1));
    }

    #[test]
    fn suppression_examples() {
        let front = ArrayFrontEnd::dual_polarized(RadiationField::synthetic(SyntheticPatternParams::ideal()).unwrap());
        let w = WeightVector::<f64>::unit(15, 0, 0);
        let mut j = JammerSpec {
            kind: JammerKind::Cw,
            direction: Direction::new(0.0, 0.0).unwrap(),
            polarization: Polarization::lhcp(),
            if_center_hz: 1e6,
            jnr_db: 40.0,
            start_time_s: 0.0,
            chip_rate_cps: 2.5575e6,
            seed: 0,
        };
        assert_eq!(suppression_db(&w, &j, &front, 5e6).unwrap(), -200.0);
        j.polarization = Polarization::rhcp();
        assert!(suppression_db(&w, &j, &front, 5e6).unwrap().abs() < 1e-9);
    }
}
