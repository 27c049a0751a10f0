//! Covariance estimation, constraint design and weight rules.
//!
//! Every vector of length `2M` (snapshots, weights, constraints) uses the
//! same interleaved layout `[x_{0,0}, x_{1,0}, x_{0,1}, x_{1,1}, ...]`:
//! channel index varies fastest, tap index `m` slowest. Channel 0 is the
//! RHCP port (or element 1), channel 1 the LHCP port (or element 2).

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::antenna::RadiationField;
use crate::linalg::{dot_h, load_diagonal, svd_thin, truncate, CMatrix, Cholesky, Truncation};
use crate::polarization::{Direction, Polarization};
use crate::signals::{ArrayMode, SampleStream};
use crate::{Error, Real, Result};

pub const DEFAULT_M_TAPS: usize = 15;
pub const DEFAULT_EPSILON: usize = 100;
pub const DEFAULT_BAND_HZ: (f64, f64) = (-2e6, 2e6);
pub const DEFAULT_BLOCK_LEN: usize = 5000;

/// Space-time weights in the interleaved layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector<T> {
    pub m_taps: usize,
    pub weights: Vec<Complex<T>>,
}

impl<T: Real> WeightVector<T> {
    pub fn new(m_taps: usize, weights: Vec<Complex<T>>) -> Result<Self> {
        if m_taps == 0 || weights.len() != 2 * m_taps {
            return Err(Error::Dimension(format!("{} weights for {m_taps} taps", weights.len())));
        }
        if weights.iter().any(|w| !w.re.is_finite() || !w.im.is_finite()) {
            return Err(Error::domain("weights contain non-finite values"));
        }
        Ok(WeightVector { m_taps, weights })
    }

    /// Unit weight on tap `m` of channel `ch`.
    pub fn unit(m_taps: usize, ch: usize, m: usize) -> Self {
        let mut weights = vec![Complex::new(T::zero(), T::zero()); 2 * m_taps];
        weights[2 * m + ch] = Complex::new(T::one(), T::zero());
        WeightVector { m_taps, weights }
    }

    pub fn get(&self, ch: usize, m: usize) -> Complex<T> {
        self.weights[2 * m + ch]
    }

    pub fn scaled(&self, s: Complex<T>) -> Self {
        WeightVector { m_taps: self.m_taps, weights: self.weights.iter().map(|w| w * s).collect() }
    }
}

/// Sample covariance of tapped snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate<T> {
    pub matrix: CMatrix<T>,
    pub sample_count: usize,
}

impl<T: Real> CovarianceEstimate<T> {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Adds `loading * tr(R)/dim` to the diagonal.
    pub fn loaded(&self, loading: T) -> Result<Self> {
        Ok(CovarianceEstimate { matrix: load_diagonal(&self.matrix, loading)?, sample_count: self.sample_count })
    }

    pub fn scaled(&self, alpha: T) -> Self {
        CovarianceEstimate { matrix: self.matrix.scale(alpha), sample_count: self.sample_count }
    }
}

fn check_two_channels<T: Real>(stream: &SampleStream<T>) -> Result<()> {
    if stream.channel_count() != 2 {
        return Err(Error::Dimension(format!("expected 2 channels, stream has {}", stream.channel_count())));
    }
    Ok(())
}

/// Snapshot `v[k]` with `v_{P,m}[k] = x_P[k - m]`; samples before the
/// stream start count as zero.
pub fn snapshot<T: Real>(stream: &SampleStream<T>, k: usize, m_taps: usize) -> Result<Vec<Complex<T>>> {
    check_two_channels(stream)?;
    if k >= stream.len() {
        return Err(Error::InsufficientSamples { needed: k + 1, available: stream.len() });
    }
    let zero = Complex::new(T::zero(), T::zero());
    let mut v = Vec::with_capacity(2 * m_taps);
    for m in 0..m_taps {
        for ch in &stream.samples {
            v.push(if m <= k { ch[k - m] } else { zero });
        }
    }
    Ok(v)
}

fn covariance_checks<T: Real>(stream: &SampleStream<T>, end: usize, len: usize, m_taps: usize) -> Result<()> {
    check_two_channels(stream)?;
    if m_taps == 0 || len == 0 {
        return Err(Error::domain("taps and sample count must be >= 1"));
    }
    let needed = len + m_taps - 1;
    if end + 1 < needed || end >= stream.len() {
        return Err(Error::InsufficientSamples { needed, available: (end + 1).min(stream.len()) });
    }
    Ok(())
}

/// `(1/L) sum v[l] v[l]^H` over `l = end-L+1 ..= end`, accumulated
/// snapshot by snapshot.
pub fn covariance_direct<T: Real>(
    stream: &SampleStream<T>,
    end: usize,
    len: usize,
    m_taps: usize,
) -> Result<CovarianceEstimate<T>> {
    covariance_checks(stream, end, len, m_taps)?;
    let n = 2 * m_taps;
    let mut r = CMatrix::zeros(n, n);
    for l in (end + 1 - len)..=end {
        let v = snapshot(stream, l, m_taps)?;
        for i in 0..n {
            for j in 0..n {
                r[(i, j)] += v[i] * v[j].conj();
            }
        }
    }
    Ok(CovarianceEstimate { matrix: r.scale(T::one() / T::of_usize(len)), sample_count: len })
}

/// Same estimate as [`covariance_direct`], using the shift structure of
/// tapped snapshots: only the first tap row is summed over the window and
/// the rest follow by adding and removing one product per step along each
/// diagonal.
pub fn covariance<T: Real>(stream: &SampleStream<T>, end: usize, len: usize, m_taps: usize) -> Result<CovarianceEstimate<T>> {
    covariance_checks(stream, end, len, m_taps)?;
    let x = &stream.samples;
    let start = end + 1 - len;
    let n = 2 * m_taps;
    // s[(p, q)][m][n] holds the unnormalized sum for channel pair (p, q).
    let mut r = CMatrix::zeros(n, n);
    for p in 0..2 {
        for q in 0..2 {
            for d in 0..m_taps {
                // Entry (tap 0, tap d).
                let mut s = Complex::new(T::zero(), T::zero());
                for l in start..=end {
                    s += x[p][l] * x[q][l - d].conj();
                }
                r[(p, 2 * d + q)] = s;
                // Walk down the diagonal (m, m + d).
                for m in 0..(m_taps - 1 - d) {
                    s = s - x[p][end - m] * x[q][end - m - d].conj() + x[p][start - 1 - m] * x[q][start - 1 - m - d].conj();
                    r[(2 * (m + 1) + p, 2 * (m + 1 + d) + q)] = s;
                }
            }
        }
    }
    // Lower triangle in tap index from Hermitian symmetry.
    for mi in 0..m_taps {
        for mj in 0..mi {
            for p in 0..2 {
                for q in 0..2 {
                    r[(2 * mi + p, 2 * mj + q)] = r[(2 * mj + q, 2 * mi + p)].conj();
                }
            }
        }
    }
    Ok(CovarianceEstimate { matrix: r.scale(T::one() / T::of_usize(len)), sample_count: len })
}

/// Phase of element 2 relative to element 1 for an element on the +x axis.
pub fn steering_phase<T: Real>(d: Direction<T>, spacing_m: T, wavelength_m: T) -> T {
    T::two() * T::PI() * spacing_m / wavelength_m * d.theta_rad().sin() * d.phi_rad().cos()
}

/// How the two processed channels see a plane wave.
#[derive(Debug, Clone)]
pub struct ArrayFrontEnd<T> {
    pub field: RadiationField<T>,
    pub mode: ArrayMode,
    pub spacing_m: T,
    pub wavelength_m: T,
}

impl<T: Real> ArrayFrontEnd<T> {
    pub fn dual_polarized(field: RadiationField<T>) -> Self {
        ArrayFrontEnd {
            field,
            mode: ArrayMode::DualPolarized,
            spacing_m: T::of(crate::signals::DEFAULT_ELEMENT_SPACING),
            wavelength_m: T::of(crate::signals::l1_wavelength()),
        }
    }

    pub fn two_element(field: RadiationField<T>, spacing_m: T) -> Self {
        ArrayFrontEnd { mode: ArrayMode::TwoElement, spacing_m, ..Self::dual_polarized(field) }
    }

    /// Channel responses to a unit wave from `d` with polarization `p`.
    pub fn response(&self, d: Direction<T>, p: Polarization<T>) -> Result<[Complex<T>; 2]> {
        let [r, l] = self.field.port_pair(d, p)?;
        Ok(match self.mode {
            ArrayMode::DualPolarized => [r, l],
            ArrayMode::TwoElement => {
                [r, r * Complex::from_polar(T::one(), -steering_phase(d, self.spacing_m, self.wavelength_m))]
            }
        })
    }
}

fn tapped<T: Real>(ports: [Complex<T>; 2], f_hz: T, m_taps: usize, fs: T) -> Vec<Complex<T>> {
    let mut c = Vec::with_capacity(2 * m_taps);
    for m in 0..m_taps {
        let ph = Complex::from_polar(T::one(), -T::two() * T::PI() * T::of_usize(m) * f_hz / fs);
        c.push(ports[0] * ph);
        c.push(ports[1] * ph);
    }
    c
}

fn check_freq<T: Real>(f_hz: T, fs: T) -> Result<()> {
    if !(fs > T::zero()) || !(f_hz.abs() < fs / T::two()) {
        return Err(Error::domain(format!("frequency {f_hz} Hz outside +-fs/2 for fs = {fs}")));
    }
    Ok(())
}

/// Space-time response `c_{P,m} = G_P(d) . e(p)^* exp(-j 2 pi m f / fs)`.
pub fn constraint_vector<T: Real>(
    d: Direction<T>,
    p: Polarization<T>,
    f_hz: T,
    m_taps: usize,
    fs: T,
    front: &ArrayFrontEnd<T>,
) -> Result<Vec<Complex<T>>> {
    check_freq(f_hz, fs)?;
    Ok(tapped(front.response(d, p)?, f_hz, m_taps, fs))
}

/// `[c_0, c_1, 0, ..., 0]`: the port responses on tap 0 only.
pub fn single_freq_constraint<T: Real>(
    d: Direction<T>,
    p: Polarization<T>,
    m_taps: usize,
    front: &ArrayFrontEnd<T>,
) -> Result<Vec<Complex<T>>> {
    let [a, b] = front.response(d, p)?;
    let mut c = vec![Complex::new(T::zero(), T::zero()); 2 * m_taps.max(1)];
    c[0] = a;
    c[1] = b;
    Ok(c)
}

/// Two-element steering constraint `[1, exp(-j dpsi), 0, ...]`.
pub fn stap2_constraint<T: Real>(d: Direction<T>, m_taps: usize, spacing_m: T, wavelength_m: T) -> Vec<Complex<T>> {
    let mut c = vec![Complex::new(T::zero(), T::zero()); 2 * m_taps.max(1)];
    c[0] = Complex::new(T::one(), T::zero());
    c[1] = Complex::from_polar(T::one(), -steering_phase(d, spacing_m, wavelength_m));
    c
}

/// Minimum number of basis vectors spanning a band of width `f_max - f_min`
/// over a time aperture `tau_last + (M-1)/fs`.
pub fn rank_bound(f_min: f64, f_max: f64, m_taps: usize, fs: f64, tau_last: f64) -> Result<usize> {
    if !(f_max >= f_min) || m_taps == 0 || !(fs > 0.0) || !(tau_last >= 0.0) {
        return Err(Error::domain("rank bound needs f_max >= f_min, M >= 1, fs > 0, tau >= 0"));
    }
    let b = std::f64::consts::PI * (f_max - f_min);
    let t = tau_last + (m_taps - 1) as f64 / fs;
    let x = b * t / std::f64::consts::PI + 1.0;
    // Guard against 4.000000000001 style rounding before the ceiling.
    let r = x.round();
    Ok(if (x - r).abs() < 1e-9 { r as usize } else { x.ceil() as usize })
}

/// Parameters of the frequency-sampled constraint design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintDesign {
    pub m_taps: usize,
    pub sample_rate_hz: f64,
    pub epsilon: usize,
    pub band_hz: (f64, f64),
    pub zeta: Option<usize>,
}

impl Default for ConstraintDesign {
    fn default() -> Self {
        ConstraintDesign {
            m_taps: DEFAULT_M_TAPS,
            sample_rate_hz: crate::signals::DEFAULT_SAMPLE_RATE,
            epsilon: DEFAULT_EPSILON,
            band_hz: DEFAULT_BAND_HZ,
            zeta: None,
        }
    }
}

impl ConstraintDesign {
    /// Uniform frequencies including both band edges; one point sits at `f_min`.
    pub fn frequencies(&self) -> Vec<f64> {
        let (lo, hi) = self.band_hz;
        if self.epsilon == 1 {
            return vec![lo];
        }
        (0..self.epsilon).map(|i| lo + (hi - lo) * i as f64 / (self.epsilon - 1) as f64).collect()
    }
}

/// `C` sampled over the band, its SVD and the rank-`zeta` truncation.
#[derive(Debug, Clone)]
pub struct ConstraintMatrix<T> {
    pub m_taps: usize,
    pub epsilon: usize,
    pub freqs_hz: Vec<f64>,
    pub entries: CMatrix<T>,
    pub singular_values: Vec<T>,
    pub zeta: usize,
    pub factors: Truncation<T>,
}

impl<T: Real> ConstraintMatrix<T> {
    /// `1_eps V_z Sigma_z^{-1}`, the row that `w^H U_z` must equal.
    pub fn target_row(&self) -> Vec<Complex<T>> {
        let v = &self.factors.v;
        (0..self.zeta)
            .map(|r| {
                let s: Complex<T> = (0..v.rows()).map(|i| v[(i, r)]).sum();
                s / self.factors.singular_values[r]
            })
            .collect()
    }
}

pub fn build_constraint_matrix<T: Real>(
    d: Direction<T>,
    p: Polarization<T>,
    front: &ArrayFrontEnd<T>,
    design: &ConstraintDesign,
) -> Result<ConstraintMatrix<T>> {
    let (lo, hi) = design.band_hz;
    if design.epsilon == 0 || design.m_taps == 0 {
        return Err(Error::domain("epsilon and M must be >= 1"));
    }
    if !(hi >= lo) || !(lo > -design.sample_rate_hz / 2.0) || !(hi < design.sample_rate_hz / 2.0) {
        return Err(Error::domain(format!("band [{lo}, {hi}] Hz must lie inside +-fs/2")));
    }
    let freqs = design.frequencies();
    let fs = T::of(design.sample_rate_hz);
    let ports = front.response(d, p)?;
    let cols: Vec<Vec<Complex<T>>> = freqs.iter().map(|&f| tapped(ports, T::of(f), design.m_taps, fs)).collect();
    let entries = CMatrix::from_columns(&cols)?;
    let zeta = match design.zeta {
        Some(z) => z,
        None => rank_bound(lo, hi, design.m_taps, design.sample_rate_hz, 0.0)?.min(2 * design.m_taps).min(design.epsilon),
    };
    let f = svd_thin(&entries)?;
    let factors = truncate(&f, zeta)?;
    Ok(ConstraintMatrix {
        m_taps: design.m_taps,
        epsilon: design.epsilon,
        freqs_hz: freqs,
        entries,
        singular_values: f.singular_values,
        zeta,
        factors,
    })
}

/// `w = R^{-1} U_z (U_z^H R^{-1} U_z)^{-1} (1_eps V_z Sigma_z^{-1})^H`.
pub fn stpaps_weights<T: Real>(r: &CovarianceEstimate<T>, c: &ConstraintMatrix<T>) -> Result<WeightVector<T>> {
    let u = &c.factors.u;
    if r.dim() != u.rows() {
        return Err(Error::Dimension(format!("covariance is {}-dim, constraints are {}-dim", r.dim(), u.rows())));
    }
    let x = Cholesky::new(&r.matrix)?.solve(u)?;
    let inner = u.adjoint().matmul(&x)?;
    let rhs: Vec<Complex<T>> = c.target_row().iter().map(|z| z.conj()).collect();
    let y = Cholesky::new(&inner).map_err(|e| Error::Singular(format!("constraint system: {e}")))?.solve_vec(&rhs)?;
    WeightVector::new(c.m_taps, x.mul_vec(&y)?)
}

/// `w = R^{-1} c / (c^H R^{-1} c)`.
pub fn mvdr_single_weights<T: Real>(r: &CovarianceEstimate<T>, c: &[Complex<T>]) -> Result<WeightVector<T>> {
    if r.dim() != c.len() {
        return Err(Error::Dimension(format!("covariance is {}-dim, constraint has {}", r.dim(), c.len())));
    }
    let x = Cholesky::new(&r.matrix)?.solve_vec(c)?;
    let den = dot_h(c, &x);
    if !(den.norm() > T::min_positive_value()) {
        return Err(Error::Singular("c^H R^-1 c is zero".into()));
    }
    WeightVector::new(c.len() / 2, x.iter().map(|xi| xi / den.conj()).collect())
}

/// Cross-correlation `p = (1/L) sum v[l] u_d^*[l]` over the window ending at `end`.
pub fn cross_correlation<T: Real>(
    stream: &SampleStream<T>,
    replica: &[Complex<T>],
    end: usize,
    len: usize,
    m_taps: usize,
) -> Result<Vec<Complex<T>>> {
    covariance_checks(stream, end, len, m_taps)?;
    if replica.len() <= end {
        return Err(Error::InsufficientSamples { needed: end + 1, available: replica.len() });
    }
    let x = &stream.samples;
    let mut p = vec![Complex::new(T::zero(), T::zero()); 2 * m_taps];
    for l in (end + 1 - len)..=end {
        let u = replica[l].conj();
        for m in 0..m_taps {
            p[2 * m] += x[0][l - m] * u;
            p[2 * m + 1] += x[1][l - m] * u;
        }
    }
    let inv = T::one() / T::of_usize(len);
    Ok(p.into_iter().map(|z| z * inv).collect())
}

/// `w = R^{-1} p^*`.
pub fn mmse_weights<T: Real>(r: &CovarianceEstimate<T>, p: &[Complex<T>]) -> Result<WeightVector<T>> {
    if r.dim() != p.len() {
        return Err(Error::Dimension(format!("covariance is {}-dim, p has {}", r.dim(), p.len())));
    }
    let rhs: Vec<Complex<T>> = p.iter().map(|z| z.conj()).collect();
    WeightVector::new(p.len() / 2, Cholesky::new(&r.matrix)?.solve_vec(&rhs)?)
}

/// `w = R^{-1} e_1 / (e_1^H R^{-1} e_1)`: output power minimized with the
/// first tap of the reference channel pinned to one.
pub fn power_min_weights<T: Real>(r: &CovarianceEstimate<T>) -> Result<WeightVector<T>> {
    let n = r.dim();
    let mut e1 = vec![Complex::new(T::zero(), T::zero()); n];
    if n == 0 {
        return Err(Error::Dimension("empty covariance".into()));
    }
    e1[0] = Complex::new(T::one(), T::zero());
    let mut w = mvdr_single_weights(r, &e1)?;
    w.weights[0] = Complex::new(T::one(), T::zero());
    Ok(w)
}

/// `u[k] = w^H v[k]` for `k` in `range`, written into `out[k - range.start]`.
pub fn apply_weights_into<T: Real>(
    w: &WeightVector<T>,
    stream: &SampleStream<T>,
    range: std::ops::Range<usize>,
    out: &mut [Complex<T>],
) -> Result<()> {
    check_two_channels(stream)?;
    if range.end > stream.len() || out.len() < range.len() {
        return Err(Error::Dimension("output range exceeds stream or buffer".into()));
    }
    let wc: Vec<Complex<T>> = w.weights.iter().map(|z| z.conj()).collect();
    let x = &stream.samples;
    for (o, k) in out.iter_mut().zip(range) {
        let mut s = Complex::new(T::zero(), T::zero());
        for m in 0..w.m_taps.min(k + 1) {
            s += wc[2 * m] * x[0][k - m] + wc[2 * m + 1] * x[1][k - m];
        }
        *o = s;
    }
    Ok(())
}

/// Filters the whole stream with fixed weights.
pub fn apply_weights<T: Real>(w: &WeightVector<T>, stream: &SampleStream<T>) -> Result<Vec<Complex<T>>> {
    let mut out = vec![Complex::new(T::zero(), T::zero()); stream.len()];
    apply_weights_into(w, stream, 0..stream.len(), &mut out)?;
    Ok(out)
}

/// Processing gain `g = w^H c(d, p, f)`.
pub fn gain<T: Real>(
    w: &WeightVector<T>,
    d: Direction<T>,
    p: Polarization<T>,
    f_hz: T,
    fs: T,
    front: &ArrayFrontEnd<T>,
) -> Result<Complex<T>> {
    let c = constraint_vector(d, p, f_hz, w.m_taps, fs, front)?;
    Ok(dot_h(&w.weights, &c))
}
