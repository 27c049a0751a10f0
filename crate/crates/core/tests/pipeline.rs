use std::fmt::Write as _;

use stpaps_core::antenna::{
    synthetic_field, Port, SyntheticPatternParams, GRID_PHI_COUNT, GRID_STEP_DEG, GRID_THETA_COUNT, PATTERN_HEADER,
};
use stpaps_core::beamform::{apply_weights, covariance, mvdr_single_weights, single_freq_constraint, ArrayFrontEnd};
use stpaps_core::metrics::suppression_db;
use stpaps_core::polarization::{Direction, Polarization};
use stpaps_core::signals::{assemble, ArrayMode, Scenario};
use stpaps_core::Complex;

const SCENARIO: &str = r#"{
  "duration_s": 0.004,
  "satellites": [{"prn": 8, "direction": {"phi_deg": -94.29, "theta_deg": 18.75}, "cn0_dbhz": 44.0}],
  "jammers": [{
    "kind": "cw",
    "direction": {"phi_deg": 100.0, "theta_deg": 55.0},
    "polarization": {"gamma_deg": 30.0, "eta_deg": 20.0},
    "if_center_hz": 250000.0,
    "jnr_db": 30.0
  }],
  "seed": 3
}"#;

fn pattern_csv(params: &SyntheticPatternParams<f64>) -> String {
    let mut s = PATTERN_HEADER.join(",") + "\n";
    for ip in 0..GRID_PHI_COUNT {
        for it in 0..GRID_THETA_COUNT {
            let (phi, theta) = (GRID_STEP_DEG * (ip + 1) as f64, GRID_STEP_DEG * it as f64);
            let d = Direction::new(phi, theta).unwrap();
            write!(s, "{phi},{theta}").unwrap();
            for port in [Port::R, Port::L] {
                let g = synthetic_field(params, d, port);
                for z in [g.e_phi, g.e_theta] {
                    write!(s, ",{:.15},{:.12}", z.norm(), z.arg().to_degrees()).unwrap();
                }
            }
            s.push('\n');
        }
    }
    s
}

#[test]
fn measured_pattern_file_reproduces_the_model() {
    let params = SyntheticPatternParams::default();
    let dir = std::env::temp_dir().join(format!("stpaps-pattern-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("pattern.csv"), pattern_csv(&params)).unwrap();
    let json = SCENARIO.replacen(
        "\"duration_s\"",
        "\"antenna\": {\"kind\": \"pattern_csv\", \"path\": \"pattern.csv\"},\n  \"duration_s\"",
        1,
    );
    std::fs::write(dir.join("scenario.json"), json).unwrap();

    let sc = Scenario::load(dir.join("scenario.json")).unwrap();
    let field = sc.radiation_field::<f64>().unwrap();
    std::fs::remove_dir_all(&dir).unwrap();

    for (phi, theta, tol) in [(93.0, 18.0, 1e-9), (300.0, 45.0, 1e-9), (-94.29, 18.75, 0.03), (10.5, 80.2, 0.03)] {
        let d = Direction::new(phi, theta).unwrap();
        for port in [Port::R, Port::L] {
            let a = field.field(d, port);
            let b = synthetic_field(&params, d, port);
            let err = (a.e_phi - b.e_phi).norm().max((a.e_theta - b.e_theta).norm());
            assert!(err < tol, "({phi}, {theta}) {port:?}: {err}");
        }
    }
}

#[test]
fn single_precision_pipeline_follows_double() {
    let sc = Scenario::from_json(SCENARIO).unwrap();
    let f64_field = sc.radiation_field::<f64>().unwrap();
    let f32_field = sc.radiation_field::<f32>().unwrap();
    let s64 = assemble(&sc, &f64_field, ArrayMode::DualPolarized).unwrap();
    let s32 = assemble(&sc, &f32_field, ArrayMode::DualPolarized).unwrap();

    let (end, len, m) = (s64.len() - 1, 5000, 4);
    let sat = Direction::new(-94.29, 18.75).unwrap();
    let front64 = ArrayFrontEnd::dual_polarized(f64_field);
    let front32 = ArrayFrontEnd::dual_polarized(f32_field);
    let c64 = single_freq_constraint(sat, Polarization::rhcp(), m, &front64).unwrap();
    let c32 = single_freq_constraint(Direction::new(-94.29f32, 18.75).unwrap(), Polarization::rhcp(), m, &front32).unwrap();
    let w64 = mvdr_single_weights(&covariance(&s64, end, len, m).unwrap(), &c64).unwrap();
    let w32 = mvdr_single_weights(&covariance(&s32, end, len, m).unwrap(), &c32).unwrap();

    let scale = w64.weights.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for (a, b) in w64.weights.iter().zip(&w32.weights) {
        let b = Complex::new(b.re as f64, b.im as f64);
        assert!((a - b).norm() < 1e-2 * scale, "{a} vs {b}");
    }

    let jam = &sc.jammers[0];
    let s_db = suppression_db(&w64, jam, &front64, sc.sample_rate_hz).unwrap();
    assert!(s_db < -30.0, "{s_db}");
    assert!(suppression_db(&w32, jam, &front32, sc.sample_rate_hz).unwrap() < -30.0);

    let out_power = |u: &[Complex<f64>]| u.iter().map(|z| z.norm_sqr()).sum::<f64>() / u.len() as f64;
    let u64 = apply_weights(&w64, &s64).unwrap();
    let u32: Vec<Complex<f64>> =
        apply_weights(&w32, &s32).unwrap().iter().map(|z| Complex::new(z.re as f64, z.im as f64)).collect();
    let (p64, p32) = (out_power(&u64[m..]), out_power(&u32[m..]));
    assert!((p64 - p32).abs() < 1e-2 * p64, "{p64} {p32}");
    // The jammer sits 30 dB above the noise on the input; after nulling
    // the output is noise-like.
    assert!(p64 < 10.0, "{p64}");
}
