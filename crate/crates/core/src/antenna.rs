//! Complex radiation fields of the two ports of a dual-polarized element.
//!
//! A field is backed either by a measured 120 x 31 grid (3 degree steps in
//! azimuth and polar angle) evaluated with complex-plane bilinear
//! interpolation, or by a parametric model whose azimuthal phase winding
//! flips the sign of the response every half revolution.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::polarization::{field_inner, normalized_field, Direction, FieldVector, Polarization};
use crate::{Error, Real, Result};

pub const GRID_PHI_COUNT: usize = 120;
pub const GRID_THETA_COUNT: usize = 31;
pub const GRID_STEP_DEG: f64 = 3.0;
pub const PATTERN_HEADER: [&str; 10] =
    ["phi_deg", "theta_deg", "gR_phi", "pR_phi", "gR_theta", "pR_theta", "gL_phi", "pL_phi", "gL_theta", "pL_theta"];

/// Antenna port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Port {
    R,
    L,
}

impl Port {
    pub const BOTH: [Port; 2] = [Port::R, Port::L];
}

/// One gain/phase pattern pair over the grid, `[phi_index][theta_index]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainPhase<T> {
    pub gain: Vec<T>,
    pub phase_deg: Vec<T>,
}

/// Measured pattern grid. Azimuth samples are `3, 6, ..., 360` degrees and
/// polar samples `0, 3, ..., 90` degrees; gains are linear amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternGrid<T> {
    pub r_phi: GainPhase<T>,
    pub r_theta: GainPhase<T>,
    pub l_phi: GainPhase<T>,
    pub l_theta: GainPhase<T>,
    // Complex node values per port, precomputed from the pairs above.
    nodes_r: Vec<FieldVector<T>>,
    nodes_l: Vec<FieldVector<T>>,
}

fn grid_index(i_phi: usize, i_theta: usize) -> usize {
    i_phi * GRID_THETA_COUNT + i_theta
}

impl<T: Real> PatternGrid<T> {
    pub fn phi_samples() -> Vec<T> {
        (1..=GRID_PHI_COUNT).map(|k| T::of(GRID_STEP_DEG * k as f64)).collect()
    }

    pub fn theta_samples() -> Vec<T> {
        (0..GRID_THETA_COUNT).map(|k| T::of(GRID_STEP_DEG * k as f64)).collect()
    }

    /// Builds a grid from the eight patterns; every array must hold
    /// `120 * 31` values indexed `[phi][theta]`.
    pub fn from_patterns(r_phi: GainPhase<T>, r_theta: GainPhase<T>, l_phi: GainPhase<T>, l_theta: GainPhase<T>) -> Result<Self> {
        let n = GRID_PHI_COUNT * GRID_THETA_COUNT;
        for gp in [&r_phi, &r_theta, &l_phi, &l_theta] {
            if gp.gain.len() != n || gp.phase_deg.len() != n {
                return Err(Error::Dimension(format!(
                    "pattern arrays must hold {n} values, got {}/{}",
                    gp.gain.len(),
                    gp.phase_deg.len()
                )));
            }
            for (&g, &p) in gp.gain.iter().zip(&gp.phase_deg) {
                check_gain(g).map_err(Error::domain)?;
                check_phase(p).map_err(Error::domain)?;
            }
        }
        let node = |a: &GainPhase<T>, b: &GainPhase<T>, i: usize| {
            FieldVector::new(
                Complex::from_polar(a.gain[i], a.phase_deg[i].deg_to_rad()),
                Complex::from_polar(b.gain[i], b.phase_deg[i].deg_to_rad()),
            )
        };
        let nodes_r = (0..n).map(|i| node(&r_phi, &r_theta, i)).collect();
        let nodes_l = (0..n).map(|i| node(&l_phi, &l_theta, i)).collect();
        Ok(PatternGrid { r_phi, r_theta, l_phi, l_theta, nodes_r, nodes_l })
    }

    /// Samples a field function on the grid nodes. Useful for turning a
    /// synthetic model into a grid and for tests.
    pub fn from_fn(mut f: impl FnMut(Direction<T>, Port) -> FieldVector<T>) -> Result<Self> {
        let n = GRID_PHI_COUNT * GRID_THETA_COUNT;
        let empty = || GainPhase { gain: vec![T::zero(); n], phase_deg: vec![T::zero(); n] };
        let (mut rp, mut rt, mut lp, mut lt) = (empty(), empty(), empty(), empty());
        let set = |gp: &mut GainPhase<T>, i: usize, z: Complex<T>| {
            gp.gain[i] = z.norm();
            let mut ph = z.arg().to_degrees();
            if ph <= T::of(-180.0) {
                ph += T::of(360.0);
            }
            gp.phase_deg[i] = ph;
        };
        for i_phi in 0..GRID_PHI_COUNT {
            for i_theta in 0..GRID_THETA_COUNT {
                let d = Direction {
                    phi_deg: T::of(GRID_STEP_DEG * (i_phi + 1) as f64),
                    theta_deg: T::of(GRID_STEP_DEG * i_theta as f64),
                }
                .canonical();
                let i = grid_index(i_phi, i_theta);
                let r = f(d, Port::R);
                let l = f(d, Port::L);
                set(&mut rp, i, r.e_phi);
                set(&mut rt, i, r.e_theta);
                set(&mut lp, i, l.e_phi);
                set(&mut lt, i, l.e_theta);
            }
        }
        Self::from_patterns(rp, rt, lp, lt)
    }

    /// Complex node value at `phi = 3 (i_phi + 1)`, `theta = 3 i_theta`.
    pub fn node(&self, i_phi: usize, i_theta: usize, port: Port) -> FieldVector<T> {
        let i = grid_index(i_phi, i_theta);
        match port {
            Port::R => self.nodes_r[i],
            Port::L => self.nodes_l[i],
        }
    }
}

fn check_gain<T: Real>(g: T) -> std::result::Result<(), String> {
    if !g.is_finite() || g < T::zero() {
        return Err(format!("gain {g} must be finite and non-negative"));
    }
    Ok(())
}

fn check_phase<T: Real>(p: T) -> std::result::Result<(), String> {
    if !p.is_finite() || p <= T::of(-180.0) || p > T::of(180.0) {
        return Err(format!("phase {p} outside (-180, 180]"));
    }
    Ok(())
}

/// Reads the pattern CSV. When `gains_in_db` is set, gain columns are
/// amplitude decibels and are converted with `10^(g/20)`.
pub fn load_pattern_grid<T: Real>(path: impl AsRef<Path>, gains_in_db: bool) -> Result<PatternGrid<T>> {
    let file = std::fs::File::open(path)?;
    read_pattern_grid(file, gains_in_db)
}

pub fn read_pattern_grid<T: Real, R: Read>(reader: R, gains_in_db: bool) -> Result<PatternGrid<T>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(PATTERN_HEADER.iter().copied()) {
        return Err(Error::Parse { row: 0, message: format!("expected header `{}`", PATTERN_HEADER.join(",")) });
    }

    let n = GRID_PHI_COUNT * GRID_THETA_COUNT;
    let mut values: Vec<Option<[f64; 8]>> = vec![None; n];
    let mut seen: HashMap<usize, usize> = HashMap::new();
    let mut count = 0usize;

    for (k, rec) in rdr.records().enumerate() {
        let row = k + 1;
        let rec = rec.map_err(|e| Error::Parse { row, message: e.to_string() })?;
        if rec.len() != 10 {
            return Err(Error::Parse { row, message: format!("expected 10 fields, got {}", rec.len()) });
        }
        let mut f = [0.0f64; 10];
        for (slot, field) in f.iter_mut().zip(rec.iter()) {
            *slot = field.parse::<f64>().map_err(|e| Error::Parse { row, message: format!("`{field}`: {e}") })?;
        }
        let (i_phi, i_theta) = node_of(f[0], f[1])
            .ok_or_else(|| Error::Parse { row, message: format!("({}, {}) is not a grid point", f[0], f[1]) })?;
        let idx = grid_index(i_phi, i_theta);
        if let Some(prev) = seen.insert(idx, row) {
            return Err(Error::Parse {
                row,
                message: format!("duplicate grid point ({}, {}), first seen at row {prev}", f[0], f[1]),
            });
        }
        let mut pats = [0.0f64; 8];
        pats.copy_from_slice(&f[2..]);
        for j in 0..4 {
            let g = &mut pats[2 * j];
            if gains_in_db {
                if !g.is_finite() {
                    return Err(Error::Parse { row, message: format!("gain {g} dB is not finite") });
                }
                *g = 10f64.powf(*g / 20.0);
            }
            check_gain(*g).map_err(|message| Error::Parse { row, message })?;
            check_phase(pats[2 * j + 1]).map_err(|message| Error::Parse { row, message })?;
        }
        values[idx] = Some(pats);
        count += 1;
    }

    if count != n {
        let missing = values.iter().position(Option::is_none).map(|i| {
            let (ip, it) = (i / GRID_THETA_COUNT, i % GRID_THETA_COUNT);
            (GRID_STEP_DEG * (ip + 1) as f64, GRID_STEP_DEG * it as f64)
        });
        return Err(Error::Parse {
            row: count + 1,
            message: match missing {
                Some((p, t)) => format!("expected {n} data rows, got {count}; missing ({p}, {t})"),
                None => format!("expected {n} data rows, got {count}"),
            },
        });
    }

    let mut pats: Vec<GainPhase<T>> =
        (0..4).map(|_| GainPhase { gain: Vec::with_capacity(n), phase_deg: Vec::with_capacity(n) }).collect();
    for v in values.into_iter().flatten() {
        for (j, gp) in pats.iter_mut().enumerate() {
            gp.gain.push(T::of(v[2 * j]));
            gp.phase_deg.push(T::of(v[2 * j + 1]));
        }
    }
    let l_theta = pats.pop().unwrap();
    let l_phi = pats.pop().unwrap();
    let r_theta = pats.pop().unwrap();
    let r_phi = pats.pop().unwrap();
    PatternGrid::from_patterns(r_phi, r_theta, l_phi, l_theta)
}

fn node_of(phi: f64, theta: f64) -> Option<(usize, usize)> {
    let kp = phi / GRID_STEP_DEG;
    let kt = theta / GRID_STEP_DEG;
    let (rp, rt) = (kp.round(), kt.round());
    if (kp - rp).abs() > 1e-9 || (kt - rt).abs() > 1e-9 {
        return None;
    }
    if !(1.0..=GRID_PHI_COUNT as f64).contains(&rp) || !(0.0..GRID_THETA_COUNT as f64).contains(&rt) {
        return None;
    }
    Some((rp as usize - 1, rt as usize))
}

/// Bilinear interpolation in the complex plane. Azimuth wraps, so the cell
/// between 360 and 3 degrees blends across the seam; `theta = 0` is an
/// ordinary row.
pub fn interpolate_field<T: Real>(grid: &PatternGrid<T>, d: Direction<T>, port: Port) -> FieldVector<T> {
    let d = d.canonical();
    let step = T::of(GRID_STEP_DEG);
    let x = d.phi_deg / step;
    let x0 = x.floor();
    let fx = x - x0;
    // Azimuth node `j` (phi = 3 j mod 360) lives at array index (j + 119) % 120.
    let j0 = x0.to_usize().unwrap_or(0) % GRID_PHI_COUNT;
    let ip0 = (j0 + GRID_PHI_COUNT - 1) % GRID_PHI_COUNT;
    let ip1 = j0 % GRID_PHI_COUNT;

    let y = d.theta_deg / step;
    let last = T::of_usize(GRID_THETA_COUNT - 2);
    let y0 = y.floor().min(last);
    let fy = y - y0;
    let it0 = y0.to_usize().unwrap_or(0);
    let it1 = it0 + 1;

    let w00 = (T::one() - fx) * (T::one() - fy);
    let w10 = fx * (T::one() - fy);
    let w01 = (T::one() - fx) * fy;
    let w11 = fx * fy;
    let blend = |pick: fn(&FieldVector<T>) -> Complex<T>| {
        let v = |ip, it| pick(&grid.node(ip, it, port));
        v(ip0, it0) * w00 + v(ip1, it0) * w10 + v(ip0, it1) * w01 + v(ip1, it1) * w11
    };
    FieldVector::new(blend(|f| f.e_phi), blend(|f| f.e_theta))
}

/// Parameters of the synthetic dual-polarized element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPatternParams<T> {
    /// Gain follows `cos(theta)^p`.
    pub zenith_taper_exponent: T,
    /// Fraction of the opposite-hand response mixed into each port, `[0, 1)`.
    pub cross_pol_leakage: T,
    /// Azimuthal phase winding `exp(j n phi)`.
    #[serde(default = "default_cycles")]
    pub azimuth_phase_cycles: i32,
}

fn default_cycles() -> i32 {
    1
}

impl<T: Real> SyntheticPatternParams<T> {
    pub fn ideal() -> Self {
        SyntheticPatternParams { zenith_taper_exponent: T::zero(), cross_pol_leakage: T::zero(), azimuth_phase_cycles: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.zenith_taper_exponent;
        let l = self.cross_pol_leakage;
        if !p.is_finite() || p < T::zero() {
            return Err(Error::domain(format!("taper exponent {p} must be >= 0")));
        }
        if !l.is_finite() || l < T::zero() || l >= T::one() {
            return Err(Error::domain(format!("cross-pol leakage {l} outside [0, 1)")));
        }
        Ok(())
    }
}

impl<T: Real> Default for SyntheticPatternParams<T> {
    /// The model used by the bundled scenarios.
    fn default() -> Self {
        SyntheticPatternParams { zenith_taper_exponent: T::one(), cross_pol_leakage: T::of(0.1), azimuth_phase_cycles: 1 }
    }
}

pub fn synthetic_field<T: Real>(params: &SyntheticPatternParams<T>, d: Direction<T>, port: Port) -> FieldVector<T> {
    let d = d.canonical();
    let amp = d.theta_rad().cos().max(T::zero()).powf(params.zenith_taper_exponent);
    let winding = Complex::from_polar(amp, T::of(params.azimuth_phase_cycles as f64) * d.phi_rad());
    let leak = params.cross_pol_leakage;
    let co = T::one() - leak;
    let (r, l) = (FieldVector::rhcp_basis(), FieldVector::lhcp_basis());
    let mix = match port {
        Port::R => r.scale(Complex::new(co, T::zero())) + l.scale(Complex::new(leak, T::zero())),
        Port::L => l.scale(Complex::new(co, T::zero())) + r.scale(Complex::new(leak, T::zero())),
    };
    mix.scale(winding)
}

/// Induced port voltage `K (G . conj(e)) E0` with `K = 1`.
pub fn port_voltage<T: Real>(g: &FieldVector<T>, e_hat: &FieldVector<T>, amplitude: T) -> Complex<T> {
    field_inner(g, e_hat) * amplitude
}

/// Radiation field evaluator for both ports.
#[derive(Debug, Clone)]
pub enum RadiationField<T> {
    Grid(Arc<PatternGrid<T>>),
    Synthetic(SyntheticPatternParams<T>),
}

impl<T: Real> RadiationField<T> {
    pub fn synthetic(params: SyntheticPatternParams<T>) -> Result<Self> {
        params.validate()?;
        Ok(RadiationField::Synthetic(params))
    }

    pub fn grid(grid: PatternGrid<T>) -> Self {
        RadiationField::Grid(Arc::new(grid))
    }

    pub fn field(&self, d: Direction<T>, port: Port) -> FieldVector<T> {
        match self {
            RadiationField::Grid(g) => interpolate_field(g, d, port),
            RadiationField::Synthetic(p) => synthetic_field(p, d, port),
        }
    }

    /// Unit-amplitude voltage induced on `port` by a wave from `d` with
    /// polarization `pol`.
    pub fn response(&self, d: Direction<T>, pol: Polarization<T>, port: Port) -> Result<Complex<T>> {
        let e = normalized_field(pol)?;
        Ok(port_voltage(&self.field(d, port), &e, T::one()))
    }

    /// `[V_R, V_L]` for a unit-amplitude wave.
    pub fn port_pair(&self, d: Direction<T>, pol: Polarization<T>) -> Result<[Complex<T>; 2]> {
        let e = normalized_field(pol)?;
        Ok([port_voltage(&self.field(d, Port::R), &e, T::one()), port_voltage(&self.field(d, Port::L), &e, T::one())])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::fmt::Write;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn dir(phi: f64, theta: f64) -> Direction<f64> {
        Direction::new(phi, theta).unwrap()
    }

    fn pattern_csv(skip: Option<(usize, usize)>, dup: bool, bad_phase: bool) -> String {
        let mut s = PATTERN_HEADER.join(",");
        s.push('\n');
        for ip in 1..=GRID_PHI_COUNT {
            for it in 0..GRID_THETA_COUNT {
                if skip == Some((ip, it)) {
                    continue;
                }
                let phase = if bad_phase && ip == 5 && it == 5 { 181.0 } else { (ip as f64) - 60.0 };
                let line = format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    3 * ip,
                    3 * it,
                    1.0 + it as f64 * 0.01,
                    phase,
                    0.5,
                    -phase,
                    0.1,
                    0.0,
                    0.2,
                    90.0
                );
                s.push_str(&line);
                if dup && ip == 7 && it == 3 {
                    s.push_str(&line);
                }
            }
        }
        s
    }

    #[test]
    fn loads_well_formed_grid() {
        let g: PatternGrid<f64> = read_pattern_grid(pattern_csv(None, false, false).as_bytes(), false).unwrap();
        assert_eq!(g.r_phi.gain.len(), 120 * 31);
        assert_eq!(g.l_theta.phase_deg.len(), 120 * 31);
        assert_eq!(PatternGrid::<f64>::phi_samples().len(), 120);
        assert_eq!(PatternGrid::<f64>::theta_samples().len(), 31);
        let n = g.node(0, 2, Port::R);
        assert!((n.e_phi - Complex::from_polar(1.02, (-59.0f64).to_radians())).norm() < 1e-12);
    }

    #[test]
    fn rejects_missing_row() {
        let err = read_pattern_grid::<f64, _>(pattern_csv(Some((1, 0)), false, false).as_bytes(), false).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("missing (3, 0)"), "{msg}");
    }

    #[test]
    fn rejects_duplicate_and_bad_phase() {
        let err = read_pattern_grid::<f64, _>(pattern_csv(None, true, false).as_bytes(), false).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
        assert!(err.to_string().contains("duplicate"));
        let err = read_pattern_grid::<f64, _>(pattern_csv(None, false, true).as_bytes(), false).unwrap_err();
        match err {
            Error::Parse { row, message } => {
                assert_eq!(row, 4 * 31 + 5 + 1);
                assert!(message.contains("181"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_bad_header_and_off_grid() {
        let csv = pattern_csv(None, false, false).replacen("phi_deg", "az", 1);
        assert!(read_pattern_grid::<f64, _>(csv.as_bytes(), false).is_err());
        let mut csv = PATTERN_HEADER.join(",");
        writeln!(csv).unwrap();
        writeln!(csv, "4,0,1,0,1,0,1,0,1,0").unwrap();
        let err = read_pattern_grid::<f64, _>(csv.as_bytes(), false).unwrap_err();
        assert!(err.to_string().contains("row 1"));
    }

    #[test]
    fn db_gains_are_converted() {
        let csv = pattern_csv(None, false, false).replace(",0.5,", ",-6.0206,");
        let g: PatternGrid<f64> = read_pattern_grid(csv.as_bytes(), true).unwrap();
        assert!((g.r_theta.gain[0] - 0.5).abs() < 1e-5);
    }

    fn corner_grid() -> PatternGrid<f64> {
        // Real field values 1, 2, 3, 4 on the cell phi in [3, 6], theta in [0, 3].
        PatternGrid::from_fn(|d: Direction<f64>, _| {
            let v = match (d.phi_deg.round() as i64, d.theta_deg.round() as i64) {
                (3, 0) => 1.0,
                (6, 0) => 2.0,
                (3, 3) => 3.0,
                (6, 3) => 4.0,
                _ => 0.0,
            };
            FieldVector::new(c(v, 0.0), c(0.0, v))
        })
        .unwrap()
    }

    #[test]
    fn bilinear_cell_mean() {
        let g = corner_grid();
        let f = interpolate_field(&g, dir(4.5, 1.5), Port::R);
        assert!((f.e_phi - c(2.5, 0.0)).norm() < 1e-12);
        assert!((f.e_theta - c(0.0, 2.5)).norm() < 1e-12);
    }

    #[test]
    fn constant_field_midpoint() {
        let v = FieldVector::new(Complex::from_polar(0.7, 0.3), Complex::from_polar(0.2, -2.0));
        let g = PatternGrid::from_fn(|_, _| v).unwrap();
        let f = interpolate_field(&g, dir(181.5, 88.5), Port::L);
        assert!((f.e_phi - v.e_phi).norm() < 1e-12);
        assert!((f.e_theta - v.e_theta).norm() < 1e-12);
    }

    #[test]
    fn azimuth_seam_wraps() {
        let g = PatternGrid::from_fn(|d: Direction<f64>, _| {
            let v = if d.phi_deg == 0.0 {
                2.0
            } else if (d.phi_deg - 3.0).abs() < 1e-9 {
                4.0
            } else {
                0.0
            };
            FieldVector::new(c(v, 0.0), c(0.0, 0.0))
        })
        .unwrap();
        let f = interpolate_field(&g, dir(1.5, 30.0), Port::R);
        assert!((f.e_phi - c(3.0, 0.0)).norm() < 1e-12);
        let f = interpolate_field(&g, dir(360.0, 30.0), Port::R);
        assert!((f.e_phi - c(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn synthetic_ideal_responses() {
        let ant = RadiationField::synthetic(SyntheticPatternParams::<f64>::ideal()).unwrap();
        let d = dir(0.0, 0.0);
        let r = ant.response(d, Polarization::rhcp(), Port::R).unwrap();
        assert!((r - c(1.0, 0.0)).norm() < 1e-15);
        assert!(ant.response(d, Polarization::lhcp(), Port::R).unwrap().norm() < 1e-15);
        let a = ant.field(dir(180.0, 30.0), Port::R);
        let b = ant.field(dir(0.0, 30.0), Port::R);
        assert!((a.e_phi + b.e_phi).norm() < 1e-15);
        assert!((a.e_theta + b.e_theta).norm() < 1e-15);
    }

    #[test]
    fn port_voltage_examples() {
        let g = synthetic_field(&SyntheticPatternParams::<f64>::ideal(), dir(0.0, 0.0), Port::R);
        let rhcp = normalized_field(Polarization::rhcp()).unwrap();
        let lhcp = normalized_field(Polarization::lhcp()).unwrap();
        let lin = normalized_field(Polarization::new(0.0, 0.0).unwrap()).unwrap();
        assert!((port_voltage(&g, &rhcp, 1.0) - c(1.0, 0.0)).norm() < 1e-15);
        assert!(port_voltage(&g, &lhcp, 5.0).norm() < 1e-14);
        assert!((port_voltage(&g, &lin, 1.0).norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_params() {
        let p = SyntheticPatternParams { zenith_taper_exponent: 1.0, cross_pol_leakage: 1.0, azimuth_phase_cycles: 1 };
        assert!(RadiationField::synthetic(p).is_err());
    }

    proptest! {
        #[test]
        fn grid_nodes_reproduced(ip in 0usize..120, it in 0usize..31) {
            let ant = SyntheticPatternParams::<f64>::default();
            let g = PatternGrid::from_fn(|d, p| synthetic_field(&ant, d, p)).unwrap();
            let d = Direction { phi_deg: 3.0 * (ip + 1) as f64, theta_deg: 3.0 * it as f64 }.canonical();
            for port in Port::BOTH {
                let node = g.node(ip, it, port);
                let f = interpolate_field(&g, d, port);
                let scale = node.norm().max(1e-300);
                prop_assert!((f.e_phi - node.e_phi).norm() <= 1e-12 * scale);
                prop_assert!((f.e_theta - node.e_theta).norm() <= 1e-12 * scale);
            }
        }

        #[test]
        fn half_turn_flips_sign(phi in 0.0f64..180.0, theta in 0.0f64..=90.0,
                                 p in 0.0f64..3.0, leak in 0.0f64..0.9, n in prop::sample::select(vec![1, 3, -1])) {
            let params = SyntheticPatternParams { zenith_taper_exponent: p, cross_pol_leakage: leak, azimuth_phase_cycles: n };
            for port in Port::BOTH {
                let a = synthetic_field(&params, dir(phi, theta), port);
                let b = synthetic_field(&params, dir(phi + 180.0, theta), port);
                prop_assert!((a.e_phi + b.e_phi).norm() < 1e-12);
                prop_assert!((a.e_theta + b.e_theta).norm() < 1e-12);
            }
        }

        #[test]
        fn leak_free_circular_response(phi in 0.0f64..360.0, theta in 0.0f64..=90.0, p in 0.0f64..3.0) {
            let params = SyntheticPatternParams { zenith_taper_exponent: p, cross_pol_leakage: 0.0, azimuth_phase_cycles: 1 };
            let ant = RadiationField::Synthetic(params);
            let d = dir(phi, theta);
            let taper = theta.to_radians().cos().max(0.0).powf(p);
            let co = ant.response(d, Polarization::rhcp(), Port::R).unwrap();
            let cross = ant.response(d, Polarization::lhcp(), Port::R).unwrap();
            prop_assert!((co.norm() - taper).abs() < 1e-12);
            prop_assert!(cross.norm() < 1e-12);
            let co_l = ant.response(d, Polarization::lhcp(), Port::L).unwrap();
            prop_assert!((co_l.norm() - taper).abs() < 1e-12);
        }
    }
}
