//! Reference fields with closed-form limit cycles.
//!
//! These drive the same generic machinery as the predator-prey system and
//! pin down expected values analytically: the circular cycle of
//! [`HopfNormalForm`] has radius `sqrt(rho)`, period `2π`, and return-map
//! derivative `exp(-4πρ) - 1` on a radial section.

use crate::vectorfield::{FieldValue, Mat2, PhasePoint, PlanarField};

/// `dx/dt = -y + x(ρ - x² - y²)`, `dy/dt = x + y(ρ - x² - y²)`.
///
/// For ρ > 0 the circle of radius √ρ is a stable hyperbolic limit cycle;
/// the origin is the only equilibrium.
#[derive(Debug, Clone, Copy)]
pub struct HopfNormalForm {
    pub rho: f64,
}

impl HopfNormalForm {
    pub fn new(rho: f64) -> Self {
        Self { rho }
    }

    /// Analytic derivative of the field with respect to ρ.
    pub fn rho_derivative(&self, pt: PhasePoint) -> FieldValue {
        FieldValue { p: pt.x, q: pt.y }
    }

    /// Period of the limit cycle (independent of ρ).
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI
    }

    /// Return-map derivative `d_s` at the cycle on any radial section.
    pub fn cycle_ds(&self) -> f64 {
        (-4.0 * std::f64::consts::PI * self.rho).exp() - 1.0
    }
}

impl PlanarField for HopfNormalForm {
    fn eval(&self, pt: PhasePoint) -> FieldValue {
        let r2 = pt.x * pt.x + pt.y * pt.y;
        let s = self.rho - r2;
        FieldValue {
            p: -pt.y + pt.x * s,
            q: pt.x + pt.y * s,
        }
    }

    fn jacobian(&self, pt: PhasePoint) -> Mat2 {
        let (x, y) = (pt.x, pt.y);
        let s = self.rho - x * x - y * y;
        Mat2::new(
            s - 2.0 * x * x,
            -1.0 - 2.0 * x * y,
            1.0 - 2.0 * x * y,
            s - 2.0 * y * y,
        )
    }
}

/// A field multiplied by a constant positive factor: orbits are identical,
/// time is rescaled by `1/factor`.
#[derive(Debug, Clone, Copy)]
pub struct TimeScaled<F> {
    pub inner: F,
    pub factor: f64,
}

impl<F: PlanarField> PlanarField for TimeScaled<F> {
    fn eval(&self, pt: PhasePoint) -> FieldValue {
        let f = self.inner.eval(pt);
        FieldValue {
            p: self.factor * f.p,
            q: self.factor * f.q,
        }
    }

    fn jacobian(&self, pt: PhasePoint) -> Mat2 {
        let j = self.inner.jacobian(pt);
        Mat2::new(
            self.factor * j.m[0][0],
            self.factor * j.m[0][1],
            self.factor * j.m[1][0],
            self.factor * j.m[1][1],
        )
    }
}

/// The field with reversed time direction.
#[derive(Debug, Clone, Copy)]
pub struct TimeReversed<F>(pub F);

impl<F: PlanarField> PlanarField for TimeReversed<F> {
    fn eval(&self, pt: PhasePoint) -> FieldValue {
        let f = self.0.eval(pt);
        FieldValue { p: -f.p, q: -f.q }
    }

    fn jacobian(&self, pt: PhasePoint) -> Mat2 {
        let j = self.0.jacobian(pt);
        Mat2::new(-j.m[0][0], -j.m[0][1], -j.m[1][0], -j.m[1][1])
    }
}
