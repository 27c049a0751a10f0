//! Baseband sample synthesis: GPS C/A signals, jammers and receiver noise.
//!
//! Powers are referenced to a per-sample complex noise variance `sigma^2`
//! (`E|n|^2`, default 1) on every port. A satellite with carrier-to-noise
//! density `C/N0` gets amplitude `A = sqrt(C/N0 * sigma^2 / fs)`; a jammer
//! gets field amplitude `E = sqrt(JNR * sigma^2)`, so a unity-gain
//! co-polarized port sees exactly that jammer-to-noise ratio. Waveforms
//! are evaluated in `f64` and converted to the stream scalar at the end.

use std::f64::consts::PI;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::antenna::{load_pattern_grid, RadiationField, SyntheticPatternParams};
use crate::beamform::steering_phase;
use crate::polarization::{Direction, Polarization};
use crate::{Error, Real, Result};

pub const CA_CODE_LENGTH: usize = 1023;
pub const CA_CHIP_RATE: f64 = 1.023e6;
pub const NAV_BIT_RATE: f64 = 50.0;
pub const DEFAULT_SAMPLE_RATE: f64 = 5e6;
pub const DEFAULT_SS_CHIP_RATE: f64 = 2.5575e6;
pub const DEFAULT_ELEMENT_SPACING: f64 = 0.095;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const L1_FREQUENCY: f64 = 1575.42e6;

pub fn l1_wavelength() -> f64 {
    SPEED_OF_LIGHT / L1_FREQUENCY
}

// G2 phase-selector taps (1-based register stages) for PRN 1..=32.
const G2_TAPS: [(usize, usize); 32] = [
    (2, 6),
    (3, 7),
    (4, 8),
    (5, 9),
    (1, 9),
    (2, 10),
    (1, 8),
    (2, 9),
    (3, 10),
    (2, 3),
    (3, 4),
    (5, 6),
    (6, 7),
    (7, 8),
    (8, 9),
    (9, 10),
    (1, 4),
    (2, 5),
    (3, 6),
    (4, 7),
    (5, 8),
    (6, 9),
    (1, 3),
    (4, 6),
    (5, 7),
    (6, 8),
    (7, 9),
    (8, 10),
    (1, 6),
    (2, 7),
    (3, 8),
    (4, 9),
];

/// GPS L1 C/A Gold code as `+1/-1` chips (logic 1 maps to `+1`).
pub fn ca_code(prn: u8) -> Result<Vec<i8>> {
    if !(1..=32).contains(&prn) {
        return Err(Error::domain(format!("PRN {prn} outside 1..=32")));
    }
    let (s1, s2) = G2_TAPS[prn as usize - 1];
    let mut g1 = [1u8; 10];
    let mut g2 = [1u8; 10];
    let mut out = Vec::with_capacity(CA_CODE_LENGTH);
    for _ in 0..CA_CODE_LENGTH {
        let bit = g1[9] ^ g2[s1 - 1] ^ g2[s2 - 1];
        out.push(if bit == 1 { 1 } else { -1 });
        let f1 = g1[2] ^ g1[9];
        let f2 = g2[1] ^ g2[2] ^ g2[5] ^ g2[7] ^ g2[8] ^ g2[9];
        g1.rotate_right(1);
        g2.rotate_right(1);
        g1[0] = f1;
        g2[0] = f2;
    }
    Ok(out)
}

/// Multi-channel complex baseband samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStream<T> {
    pub channels: Vec<String>,
    pub samples: Vec<Vec<Complex<T>>>,
    pub sample_rate_hz: f64,
    pub start_time_s: f64,
}

impl<T: Real> SampleStream<T> {
    pub fn new(channels: Vec<String>, samples: Vec<Vec<Complex<T>>>, sample_rate_hz: f64) -> Result<Self> {
        if channels.len() != samples.len() {
            return Err(Error::Dimension(format!("{} labels for {} channels", channels.len(), samples.len())));
        }
        if samples.windows(2).any(|w| w[0].len() != w[1].len()) {
            return Err(Error::Dimension("channels differ in length".into()));
        }
        if !(sample_rate_hz > 0.0) {
            return Err(Error::domain(format!("sample rate {sample_rate_hz} must be > 0")));
        }
        Ok(SampleStream { channels, samples, sample_rate_hz, start_time_s: 0.0 })
    }

    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channel_count(&self) -> usize {
        self.samples.len()
    }

    /// Writes one little-endian `f32` I/Q interleaved file per channel,
    /// named `<label>.cf32`, and returns the paths.
    pub fn write_cf32(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir.as_ref())?;
        let mut paths = Vec::new();
        for (label, ch) in self.channels.iter().zip(&self.samples) {
            let path = dir.as_ref().join(format!("{label}.cf32"));
            let mut w = BufWriter::new(std::fs::File::create(&path)?);
            for z in ch {
                w.write_all(&(z.re.to_f64_lossy() as f32).to_le_bytes())?;
                w.write_all(&(z.im.to_f64_lossy() as f32).to_le_bytes())?;
            }
            w.flush()?;
            paths.push(path);
        }
        Ok(paths)
    }
}

/// Reads a `.cf32` channel dump.
pub fn read_cf32<T: Real>(path: impl AsRef<Path>) -> Result<Vec<Complex<T>>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::domain("cf32 file length is not a multiple of 8 bytes"));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|b| {
            let re = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
            let im = f32::from_le_bytes([b[4], b[5], b[6], b[7]]);
            Complex::new(T::of(re as f64), T::of(im as f64))
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JammerKind {
    Cw,
    SpreadSpectrum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JammerSpec {
    pub kind: JammerKind,
    pub direction: Direction<f64>,
    pub polarization: Polarization<f64>,
    pub if_center_hz: f64,
    pub jnr_db: f64,
    #[serde(default)]
    pub start_time_s: f64,
    #[serde(default = "default_ss_chip_rate")]
    pub chip_rate_cps: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_ss_chip_rate() -> f64 {
    DEFAULT_SS_CHIP_RATE
}

impl JammerSpec {
    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        self.direction.validate()?;
        self.polarization.validate()?;
        if !(self.if_center_hz.abs() < sample_rate_hz / 2.0) {
            return Err(Error::domain(format!("jammer IF {} Hz outside +-fs/2", self.if_center_hz)));
        }
        if !self.jnr_db.is_finite() {
            return Err(Error::domain("jammer JNR must be finite"));
        }
        if !(self.start_time_s >= 0.0) {
            return Err(Error::domain("jammer start time must be >= 0"));
        }
        if self.kind == JammerKind::SpreadSpectrum && !(self.chip_rate_cps > 0.0 && self.chip_rate_cps <= sample_rate_hz) {
            return Err(Error::domain(format!("chip rate {} must lie in (0, fs]", self.chip_rate_cps)));
        }
        Ok(())
    }

    /// Field amplitude for the configured JNR.
    pub fn amplitude(&self, noise_variance: f64) -> f64 {
        (10f64.powf(self.jnr_db / 10.0) * noise_variance).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SatelliteSpec {
    pub prn: u8,
    pub direction: Direction<f64>,
    pub cn0_dbhz: f64,
    #[serde(default)]
    pub code_phase_chips: f64,
    #[serde(default)]
    pub doppler_hz: f64,
    /// 50 bit/s navigation data, `+1/-1`; repeats if shorter than the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nav_bits: Option<Vec<i8>>,
}

impl SatelliteSpec {
    pub fn validate(&self) -> Result<()> {
        if !(1..=32).contains(&self.prn) {
            return Err(Error::domain(format!("PRN {} outside 1..=32", self.prn)));
        }
        self.direction.validate()?;
        if !self.cn0_dbhz.is_finite() {
            return Err(Error::domain("C/N0 must be finite"));
        }
        if let Some(bits) = &self.nav_bits {
            if bits.is_empty() || bits.iter().any(|&b| b != 1 && b != -1) {
                return Err(Error::domain("navigation bits must be a non-empty +1/-1 sequence"));
            }
        }
        Ok(())
    }

    pub fn amplitude(&self, noise_variance: f64, sample_rate_hz: f64) -> f64 {
        (10f64.powf(self.cn0_dbhz / 10.0) * noise_variance / sample_rate_hz).sqrt()
    }

    fn nav_bit(&self, index: usize) -> f64 {
        match &self.nav_bits {
            Some(bits) => bits[index % bits.len()] as f64,
            None => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AntennaSpec {
    Synthetic {
        zenith_taper_exponent: f64,
        cross_pol_leakage: f64,
        #[serde(default = "one")]
        azimuth_phase_cycles: i32,
    },
    PatternCsv {
        path: PathBuf,
        #[serde(default)]
        gains_in_db: bool,
    },
}

fn one() -> i32 {
    1
}

impl Default for AntennaSpec {
    fn default() -> Self {
        let p = SyntheticPatternParams::<f64>::default();
        AntennaSpec::Synthetic {
            zenith_taper_exponent: p.zenith_taper_exponent,
            cross_pol_leakage: p.cross_pol_leakage,
            azimuth_phase_cycles: p.azimuth_phase_cycles,
        }
    }
}

impl AntennaSpec {
    /// Relative pattern paths are resolved against `base_dir`.
    pub fn build<T: Real>(&self, base_dir: Option<&Path>) -> Result<RadiationField<T>> {
        match self {
            AntennaSpec::Synthetic { zenith_taper_exponent, cross_pol_leakage, azimuth_phase_cycles } => {
                RadiationField::synthetic(SyntheticPatternParams {
                    zenith_taper_exponent: T::of(*zenith_taper_exponent),
                    cross_pol_leakage: T::of(*cross_pol_leakage),
                    azimuth_phase_cycles: *azimuth_phase_cycles,
                })
            }
            AntennaSpec::PatternCsv { path, gains_in_db } => {
                let full = match base_dir {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                Ok(RadiationField::grid(load_pattern_grid(full, *gains_in_db)?))
            }
        }
    }
}

/// Declarative description of one simulated experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub duration_s: f64,
    #[serde(default = "default_sample_rate")]
    pub sample_rate_hz: f64,
    /// Per-sample complex noise variance on every port.
    #[serde(default = "unit")]
    pub noise_variance: f64,
    #[serde(default)]
    pub antenna: AntennaSpec,
    /// Distance of the second element along +x, two-element mode only.
    #[serde(default = "default_spacing")]
    pub element_spacing_m: f64,
    #[serde(default)]
    pub satellites: Vec<SatelliteSpec>,
    #[serde(default)]
    pub jammers: Vec<JammerSpec>,
    #[serde(default)]
    pub seed: u64,
}

fn default_sample_rate() -> f64 {
    DEFAULT_SAMPLE_RATE
}

fn unit() -> f64 {
    1.0
}

fn default_spacing() -> f64 {
    DEFAULT_ELEMENT_SPACING
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    /// Loads a scenario file; relative pattern paths become relative to the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut s = Self::from_json(&std::fs::read_to_string(path)?)?;
        if let (AntennaSpec::PatternCsv { path: p, .. }, Some(dir)) = (&mut s.antenna, path.parent()) {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(Error::domain(format!("duration {} s must be > 0", self.duration_s)));
        }
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::domain(format!("sample rate {} must be > 0", self.sample_rate_hz)));
        }
        if !(self.noise_variance >= 0.0) {
            return Err(Error::domain("noise variance must be >= 0"));
        }
        if !(self.element_spacing_m > 0.0) {
            return Err(Error::domain("element spacing must be > 0"));
        }
        if let AntennaSpec::Synthetic { zenith_taper_exponent, cross_pol_leakage, azimuth_phase_cycles } = &self.antenna {
            SyntheticPatternParams {
                zenith_taper_exponent: *zenith_taper_exponent,
                cross_pol_leakage: *cross_pol_leakage,
                azimuth_phase_cycles: *azimuth_phase_cycles,
            }
            .validate()?;
        }
        for s in &self.satellites {
            s.validate()?;
        }
        for j in &self.jammers {
            j.validate(self.sample_rate_hz)?;
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    pub fn radiation_field<T: Real>(&self) -> Result<RadiationField<T>> {
        self.antenna.build(None)
    }
}

/// Which physical ports feed the processor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrayMode {
    /// RHCP and LHCP ports of the reference element: channels `[R, L]`.
    DualPolarized,
    /// RHCP ports of the reference element and of a second element on +x:
    /// channels `[R1, R2]`.
    TwoElement,
}

impl ArrayMode {
    pub fn labels(self) -> Vec<String> {
        match self {
            ArrayMode::DualPolarized => vec!["R".into(), "L".into()],
            ArrayMode::TwoElement => vec!["R1".into(), "R2".into()],
        }
    }

    // Noise stream of each channel; the reference RHCP port shares its
    // noise realization across modes.
    fn noise_streams(self) -> [u64; 2] {
        match self {
            ArrayMode::DualPolarized => [0, 1],
            ArrayMode::TwoElement => [0, 2],
        }
    }
}

/// Per-channel complex factors applied to a unit wave from `d` with `pol`.
pub fn channel_factors<T: Real>(
    field: &RadiationField<T>,
    d: Direction<f64>,
    pol: Polarization<f64>,
    mode: ArrayMode,
    spacing_m: f64,
) -> Result<[Complex<f64>; 2]> {
    let dt = Direction { phi_deg: T::of(d.phi_deg), theta_deg: T::of(d.theta_deg) };
    let pt = Polarization { gamma_deg: T::of(pol.gamma_deg), eta_deg: T::of(pol.eta_deg) };
    let [r, l] = field.port_pair(dt, pt)?;
    let to64 = |z: Complex<T>| Complex::new(z.re.to_f64_lossy(), z.im.to_f64_lossy());
    Ok(match mode {
        ArrayMode::DualPolarized => [to64(r), to64(l)],
        ArrayMode::TwoElement => {
            let psi = steering_phase(d, spacing_m, l1_wavelength());
            [to64(r), to64(r) * Complex::from_polar(1.0, -psi)]
        }
    })
}

#[inline]
fn carrier(freq_hz: f64, t: f64) -> Complex<f64> {
    let cycles = freq_hz * t;
    Complex::from_polar(1.0, 2.0 * PI * (cycles - cycles.floor()))
}

/// Unit-amplitude satellite baseband `nav * code * exp(j 2 pi f_d t)`.
/// Chip index at sample `n` is `floor(n Rc / fs + code_phase) mod 1023`;
/// navigation bits switch every 20 ms from the start of the stream.
pub fn satellite_replica(
    spec: &SatelliteSpec,
    sample_rate_hz: f64,
    n_samples: usize,
    with_nav: bool,
) -> Result<Vec<Complex<f64>>> {
    let code = ca_code(spec.prn)?;
    let per_bit = sample_rate_hz / NAV_BIT_RATE;
    Ok((0..n_samples)
        .map(|n| {
            let t = n as f64 / sample_rate_hz;
            let chip_pos = n as f64 * CA_CHIP_RATE / sample_rate_hz + spec.code_phase_chips;
            let chip = chip_pos.floor().rem_euclid(CA_CODE_LENGTH as f64) as usize;
            let bit = if with_nav { spec.nav_bit((n as f64 / per_bit).floor() as usize) } else { 1.0 };
            let s = bit * code[chip] as f64;
            if spec.doppler_hz == 0.0 {
                Complex::new(s, 0.0)
            } else {
                carrier(spec.doppler_hz, t) * s
            }
        })
        .collect())
}

/// Satellite contribution per channel, noise free.
pub fn synth_satellite<T: Real>(
    spec: &SatelliteSpec,
    scenario: &Scenario,
    field: &RadiationField<T>,
    mode: ArrayMode,
) -> Result<Vec<Vec<Complex<T>>>> {
    spec.validate()?;
    let n = scenario.sample_count();
    let amp = spec.amplitude(scenario.noise_variance, scenario.sample_rate_hz);
    let factors = channel_factors(field, spec.direction, Polarization::rhcp(), mode, scenario.element_spacing_m)?;
    let base = satellite_replica(spec, scenario.sample_rate_hz, n, true)?;
    Ok(factors
        .iter()
        .map(|f| {
            let g = f * amp;
            base.iter().map(|s| to_t(s * g)).collect()
        })
        .collect())
}

fn to_t<T: Real>(z: Complex<f64>) -> Complex<T> {
    Complex::new(T::of(z.re), T::of(z.im))
}

/// First sample index at or after `time_s`.
pub fn start_index(time_s: f64, sample_rate_hz: f64) -> usize {
    let x = time_s * sample_rate_hz;
    let r = x.round();
    if (x - r).abs() < 1e-6 {
        r.max(0.0) as usize
    } else {
        x.ceil().max(0.0) as usize
    }
}

/// Unit-amplitude jammer waveform (before the channel factors), zero before
/// the start time.
pub fn jammer_waveform(spec: &JammerSpec, sample_rate_hz: f64, n_samples: usize) -> Vec<Complex<f64>> {
    let n0 = start_index(spec.start_time_s, sample_rate_hz).min(n_samples);
    let mut out = vec![Complex::new(0.0, 0.0); n_samples];
    match spec.kind {
        JammerKind::Cw => {
            for (n, z) in out.iter_mut().enumerate().skip(n0) {
                *z = carrier(spec.if_center_hz, n as f64 / sample_rate_hz);
            }
        }
        JammerKind::SpreadSpectrum => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let mut chip_index = usize::MAX;
            let mut chip = 1.0;
            for (n, z) in out.iter_mut().enumerate().skip(n0) {
                let k = ((n - n0) as f64 * spec.chip_rate_cps / sample_rate_hz).floor() as usize;
                while chip_index != k {
                    chip = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    chip_index = if chip_index == usize::MAX { 0 } else { chip_index + 1 };
                }
                *z = carrier(spec.if_center_hz, n as f64 / sample_rate_hz) * chip;
            }
        }
    }
    out
}

/// Jammer contribution per channel, noise free.
pub fn synth_jammer<T: Real>(
    spec: &JammerSpec,
    scenario: &Scenario,
    field: &RadiationField<T>,
    mode: ArrayMode,
) -> Result<Vec<Vec<Complex<T>>>> {
    spec.validate(scenario.sample_rate_hz)?;
    let n = scenario.sample_count();
    let amp = spec.amplitude(scenario.noise_variance);
    let factors = channel_factors(field, spec.direction, spec.polarization, mode, scenario.element_spacing_m)?;
    let base = jammer_waveform(spec, scenario.sample_rate_hz, n);
    Ok(factors
        .iter()
        .map(|f| {
            let g = f * amp;
            base.iter().map(|s| to_t(s * g)).collect()
        })
        .collect())
}

/// Independent complex white Gaussian noise of variance `variance` for the
/// given noise stream id.
pub fn noise(seed: u64, stream: u64, variance: f64, n_samples: usize) -> Vec<Complex<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let s = (variance / 2.0).sqrt();
    (0..n_samples)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(re * s, im * s)
        })
        .collect()
}

/// Sum of all satellite and jammer contributions plus per-channel noise.
pub fn assemble<T: Real>(scenario: &Scenario, field: &RadiationField<T>, mode: ArrayMode) -> Result<SampleStream<T>> {
    assemble_with(scenario, field, mode, true)
}

pub fn assemble_with<T: Real>(
    scenario: &Scenario,
    field: &RadiationField<T>,
    mode: ArrayMode,
    include_noise: bool,
) -> Result<SampleStream<T>> {
    scenario.validate()?;
    let n = scenario.sample_count();
    let mut acc: Vec<Vec<Complex<f64>>> = if include_noise && scenario.noise_variance > 0.0 {
        mode.noise_streams().iter().map(|&id| noise(scenario.seed, id, scenario.noise_variance, n)).collect()
    } else {
        vec![vec![Complex::new(0.0, 0.0); n]; 2]
    };
    let mut add = |factors: [Complex<f64>; 2], wave: &[Complex<f64>]| {
        for (ch, f) in acc.iter_mut().zip(factors) {
            for (a, w) in ch.iter_mut().zip(wave) {
                *a += w * f;
            }
        }
    };
    for sat in &scenario.satellites {
        let amp = sat.amplitude(scenario.noise_variance, scenario.sample_rate_hz);
        let f = channel_factors(field, sat.direction, Polarization::rhcp(), mode, scenario.element_spacing_m)?;
        add(f.map(|z| z * amp), &satellite_replica(sat, scenario.sample_rate_hz, n, true)?);
    }
    for jam in &scenario.jammers {
        let amp = jam.amplitude(scenario.noise_variance);
        let f = channel_factors(field, jam.direction, jam.polarization, mode, scenario.element_spacing_m)?;
        add(f.map(|z| z * amp), &jammer_waveform(jam, scenario.sample_rate_hz, n));
    }
    let samples = acc.into_iter().map(|ch| ch.into_iter().map(to_t).collect()).collect();
    SampleStream::new(mode.labels(), samples, scenario.sample_rate_hz)
}
