//! Spherical-frame polarization algebra.
//!
//! Angles cross the API in degrees and are converted to radians once, at
//! evaluation time. The frame is right-handed with azimuth `phi` measured
//! from +x toward +y and `theta` measured from zenith; measured pattern
//! grids must use the same convention.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

/// Arrival direction, azimuth `phi_deg` in `[0, 360)` and polar angle
/// `theta_deg` in `[0, 90]` after canonicalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction<T> {
    pub phi_deg: T,
    pub theta_deg: T,
}

impl<T: Real> Direction<T> {
    /// Accepts azimuths in `(-180, 360]` and wraps them into `[0, 360)`.
    pub fn new(phi_deg: T, theta_deg: T) -> Result<Self> {
        let d = Direction { phi_deg, theta_deg };
        d.validate()?;
        Ok(d.canonical())
    }

    pub fn validate(&self) -> Result<()> {
        let (phi, theta) = (self.phi_deg, self.theta_deg);
        if !phi.is_finite() || phi <= T::of(-180.0) || phi > T::of(360.0) {
            return Err(Error::domain(format!("azimuth {phi} outside (-180, 360]")));
        }
        if !theta.is_finite() || theta < T::zero() || theta > T::of(90.0) {
            return Err(Error::domain(format!("polar angle {theta} outside [0, 90]")));
        }
        Ok(())
    }

    /// Wraps azimuth into `[0, 360)`; idempotent.
    pub fn canonical(self) -> Self {
        let full = T::of(360.0);
        let mut phi = self.phi_deg % full;
        if phi < T::zero() {
            phi += full;
        }
        if phi >= full {
            phi -= full;
        }
        Direction { phi_deg: phi, theta_deg: self.theta_deg }
    }

    /// Same polar angle, azimuth rotated by half a turn.
    pub fn opposite_azimuth(self) -> Self {
        Direction { phi_deg: self.phi_deg + T::of(180.0), theta_deg: self.theta_deg }.canonical()
    }

    /// Mirror image across the `phi = 0` plane.
    pub fn mirrored(self) -> Self {
        Direction { phi_deg: -self.phi_deg, theta_deg: self.theta_deg }.canonical()
    }

    pub fn phi_rad(&self) -> T {
        self.phi_deg.deg_to_rad()
    }

    pub fn theta_rad(&self) -> T {
        self.theta_deg.deg_to_rad()
    }
}

/// Polarization state: `gamma_deg` in `[0, 90]`, `eta_deg` in `(-180, 180]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Polarization<T> {
    pub gamma_deg: T,
    pub eta_deg: T,
}

impl<T: Real> Polarization<T> {
    pub fn new(gamma_deg: T, eta_deg: T) -> Result<Self> {
        let p = Polarization { gamma_deg, eta_deg };
        p.validate()?;
        Ok(p.canonical())
    }

    pub fn rhcp() -> Self {
        Polarization { gamma_deg: T::of(45.0), eta_deg: T::of(-90.0) }
    }

    pub fn lhcp() -> Self {
        Polarization { gamma_deg: T::of(45.0), eta_deg: T::of(90.0) }
    }

    /// Accepts `eta = -180` as an alias of `+180`.
    pub fn validate(&self) -> Result<()> {
        let (g, e) = (self.gamma_deg, self.eta_deg);
        if !g.is_finite() || g < T::zero() || g > T::of(90.0) {
            return Err(Error::domain(format!("polarization angle {g} outside [0, 90]")));
        }
        if !e.is_finite() || e < T::of(-180.0) || e > T::of(180.0) {
            return Err(Error::domain(format!("phase angle {e} outside (-180, 180]")));
        }
        Ok(())
    }

    pub fn canonical(self) -> Self {
        let eta = if self.eta_deg == T::of(-180.0) { T::of(180.0) } else { self.eta_deg };
        Polarization { gamma_deg: self.gamma_deg, eta_deg: eta }
    }
}

/// Complex field components along the `phi` and `theta` unit vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldVector<T> {
    pub e_phi: Complex<T>,
    pub e_theta: Complex<T>,
}

impl<T: Real> FieldVector<T> {
    pub fn new(e_phi: Complex<T>, e_theta: Complex<T>) -> Self {
        FieldVector { e_phi, e_theta }
    }

    pub fn zero() -> Self {
        FieldVector::new(Complex::new(T::zero(), T::zero()), Complex::new(T::zero(), T::zero()))
    }

    pub fn norm(&self) -> T {
        (self.e_phi.norm_sqr() + self.e_theta.norm_sqr()).sqrt()
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        FieldVector::new(self.e_phi * s, self.e_theta * s)
    }

    /// `(1, -j) / sqrt 2`, identical to `normalized_field(rhcp)`.
    pub fn rhcp_basis() -> Self {
        let h = T::FRAC_1_SQRT_2();
        FieldVector::new(Complex::new(h, T::zero()), Complex::new(T::zero(), -h))
    }

    /// `(1, +j) / sqrt 2`.
    pub fn lhcp_basis() -> Self {
        let h = T::FRAC_1_SQRT_2();
        FieldVector::new(Complex::new(h, T::zero()), Complex::new(T::zero(), h))
    }
}

impl<T: Real> std::ops::Add for FieldVector<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        FieldVector::new(self.e_phi + rhs.e_phi, self.e_theta + rhs.e_theta)
    }
}

/// Unit-magnitude field `(cos g, sin g * exp(j eta))`.
pub fn normalized_field<T: Real>(p: Polarization<T>) -> Result<FieldVector<T>> {
    p.validate()?;
    let g = p.gamma_deg.deg_to_rad();
    let e = p.eta_deg.deg_to_rad();
    Ok(FieldVector::new(Complex::new(g.cos(), T::zero()), Complex::from_polar(g.sin(), e)))
}

/// `a . conj(b)`, the projection that gives an induced port voltage.
pub fn field_inner<T: Real>(a: &FieldVector<T>, b: &FieldVector<T>) -> Complex<T> {
    a.e_phi * b.e_phi.conj() + a.e_theta * b.e_theta.conj()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn rhcp_field() {
        let f = normalized_field(Polarization::<f64>::rhcp()).unwrap();
        assert!((f.e_phi - c(std::f64::consts::FRAC_1_SQRT_2, 0.0)).norm() < 1e-12);
        assert!((f.e_theta - c(0.0, -std::f64::consts::FRAC_1_SQRT_2)).norm() < 1e-12);
        assert!((f.e_phi - FieldVector::<f64>::rhcp_basis().e_phi).norm() < 1e-15);
        assert!((f.e_theta - FieldVector::<f64>::rhcp_basis().e_theta).norm() < 1e-15);
    }

    #[test]
    fn linear_fields() {
        let f = normalized_field(Polarization::new(0.0, 37.0).unwrap()).unwrap();
        assert_eq!(f.e_phi, c(1.0, 0.0));
        assert!(f.e_theta.norm() < 1e-15);
        let f = normalized_field(Polarization::new(90.0, 0.0).unwrap()).unwrap();
        assert!(f.e_phi.norm() < 1e-15);
        assert!((f.e_theta - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn inner_products() {
        let r = normalized_field(Polarization::<f64>::rhcp()).unwrap();
        let l = normalized_field(Polarization::<f64>::lhcp()).unwrap();
        assert!((field_inner(&r, &r) - c(1.0, 0.0)).norm() < 1e-15);
        assert!(field_inner(&r, &l).norm() < 1e-15);
        let x = FieldVector::new(c(1.0, 0.0), c(0.0, 0.0));
        assert!((field_inner(&x, &r) - c(std::f64::consts::FRAC_1_SQRT_2, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn out_of_range_angles() {
        assert!(Polarization::new(91.0, 0.0).is_err());
        assert!(Polarization::new(-1.0, 0.0).is_err());
        assert!(Polarization::new(10.0, 181.0).is_err());
        assert!(normalized_field(Polarization { gamma_deg: 95.0, eta_deg: 0.0 }).is_err());
        assert!(Direction::new(-180.0, 10.0).is_err());
        assert!(Direction::new(10.0, 90.5).is_err());
        assert_eq!(Polarization::new(10.0, -180.0).unwrap().eta_deg, 180.0);
    }

    #[test]
    fn direction_canonicalization() {
        let d = Direction::<f64>::new(-94.29, 18.75).unwrap();
        assert!((d.phi_deg - 265.71).abs() < 1e-12);
        assert_eq!(Direction::new(360.0, 0.0).unwrap().phi_deg, 0.0);
        assert!((Direction::<f64>::new(85.71, 18.75).unwrap().opposite_azimuth().phi_deg - 265.71).abs() < 1e-12);
        assert!((d.mirrored().phi_deg - 94.29).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn unit_norm(g in 0.0f64..=90.0, e in -179.999f64..=180.0) {
            let f = normalized_field(Polarization::new(g, e).unwrap()).unwrap();
            prop_assert!((f.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn hermitian_symmetry(g1 in 0.0f64..=90.0, e1 in -179.0f64..=180.0,
                              g2 in 0.0f64..=90.0, e2 in -179.0f64..=180.0) {
            let a = normalized_field(Polarization::new(g1, e1).unwrap()).unwrap();
            let b = normalized_field(Polarization::new(g2, e2).unwrap()).unwrap();
            prop_assert!((field_inner(&a, &b) - field_inner(&b, &a).conj()).norm() <= 1e-15);
        }

        #[test]
        fn orthogonal_partner(g in 0.0f64..=90.0, e in -179.0f64..=180.0) {
            let a = normalized_field(Polarization::new(g, e).unwrap()).unwrap();
            let e2 = if e > 0.0 { e - 180.0 } else { e + 180.0 };
            let b = normalized_field(Polarization::new(90.0 - g, e2).unwrap()).unwrap();
            prop_assert!(field_inner(&a, &b).norm() < 1e-12);
        }

        #[test]
        fn canonical_idempotent(phi in -179.99f64..=360.0, theta in 0.0f64..=90.0) {
            let d = Direction::new(phi, theta).unwrap();
            prop_assert!(d.phi_deg >= 0.0 && d.phi_deg < 360.0);
            prop_assert_eq!(d.canonical(), d);
        }
    }
}
