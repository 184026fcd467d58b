//! The quartic predator-prey vector field, its rotated variant, and the
//! field-rotation machinery.
//!
//! The base system is
//!
//! ```text
//! dx/dt = P(x, y) =  x((1 - λx)(αx² + βx + 1) - xy)
//! dy/dt = Q(x, y) = -y((δ + μy)(αx² + βx + 1) - x²)
//! ```
//!
//! and the rotated variant replaces (P, Q) by (P - γQ, Q + γP), which turns
//! every field vector through the angle `atan γ`. Both are polynomial of
//! total degree four; the coordinate axes are invariant lines of the γ = 0
//! system.

use serde::{Deserialize, Serialize};

use crate::error::ParamError;

/// A point of the phase plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub y: f64,
}

impl PhasePoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: PhasePoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// The value (dx/dt, dy/dt) of the field at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldValue {
    pub p: f64,
    pub q: f64,
}

impl FieldValue {
    pub fn norm(&self) -> f64 {
        self.p.hypot(self.q)
    }

    /// Wedge product `self ∧ other = p₁q₂ - q₁p₂`.
    pub fn wedge(&self, other: FieldValue) -> f64 {
        self.p * other.q - self.q * other.p
    }
}

/// A real 2x2 matrix in row-major order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

/// One eigenvalue as a (re, im) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexEig {
    pub re: f64,
    pub im: f64,
}

impl ComplexEig {
    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

impl Mat2 {
    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self {
            m: [[a11, a12], [a21, a22]],
        }
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Eigenvalues from the closed-form quadratic; complex pairs share the
    /// real part `trace/2`.
    pub fn eigenvalues(&self) -> [ComplexEig; 2] {
        let tr = self.trace();
        let disc = tr * tr - 4.0 * self.det();
        if disc >= 0.0 {
            let root = disc.sqrt();
            [
                ComplexEig {
                    re: 0.5 * (tr - root),
                    im: 0.0,
                },
                ComplexEig {
                    re: 0.5 * (tr + root),
                    im: 0.0,
                },
            ]
        } else {
            let root = (-disc).sqrt();
            [
                ComplexEig {
                    re: 0.5 * tr,
                    im: -0.5 * root,
                },
                ComplexEig {
                    re: 0.5 * tr,
                    im: 0.5 * root,
                },
            ]
        }
    }

    pub fn mul_vec(&self, v: FieldValue) -> FieldValue {
        FieldValue {
            p: self.m[0][0] * v.p + self.m[0][1] * v.q,
            q: self.m[1][0] * v.p + self.m[1][1] * v.q,
        }
    }

    pub fn mul_mat(&self, other: &Mat2) -> Mat2 {
        let a = &self.m;
        let b = &other.m;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// A planar autonomous vector field with an analytic Jacobian.
///
/// The numerical machinery (integration, return maps, cycle location,
/// continuation) is generic over this trait so that reference fields with
/// closed-form cycles can exercise the same code paths as the predator-prey
/// system itself.
pub trait PlanarField {
    fn eval(&self, pt: PhasePoint) -> FieldValue;

    fn jacobian(&self, pt: PhasePoint) -> Mat2;

    fn divergence(&self, pt: PhasePoint) -> f64 {
        self.jacobian(pt).trace()
    }
}

/// Model parameter identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamName {
    Alpha,
    Beta,
    Delta,
    Lambda,
    Mu,
    Gamma,
}

impl ParamName {
    pub const ALL: [ParamName; 6] = [
        ParamName::Alpha,
        ParamName::Beta,
        ParamName::Delta,
        ParamName::Lambda,
        ParamName::Mu,
        ParamName::Gamma,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ParamName::Alpha => "alpha",
            ParamName::Beta => "beta",
            ParamName::Delta => "delta",
            ParamName::Lambda => "lambda",
            ParamName::Mu => "mu",
            ParamName::Gamma => "gamma",
        }
    }
}

impl std::fmt::Display for ParamName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ParamName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alpha" => Ok(ParamName::Alpha),
            "beta" => Ok(ParamName::Beta),
            "delta" => Ok(ParamName::Delta),
            "lambda" => Ok(ParamName::Lambda),
            "mu" => Ok(ParamName::Mu),
            "gamma" => Ok(ParamName::Gamma),
            other => Err(format!("unknown parameter name `{other}`")),
        }
    }
}

/// Parameters selecting one rotation determinant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationParam {
    Alpha,
    Beta,
    Gamma,
}

/// The six model parameters plus the rotation parameter γ.
///
/// Constraints: `alpha ≥ 0`, `delta > 0`, `lambda > 0`, `mu ≥ 0`; `beta` and
/// `gamma` may be any real number. `gamma = 0` recovers the unrotated system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    alpha: f64,
    beta: f64,
    delta: f64,
    lambda: f64,
    mu: f64,
    #[serde(default)]
    gamma: f64,
}

impl SystemParams {
    /// Builds a parameter set with γ = 0, rejecting out-of-range values.
    pub fn new(alpha: f64, beta: f64, delta: f64, lambda: f64, mu: f64) -> Result<Self, ParamError> {
        Self::with_gamma(alpha, beta, delta, lambda, mu, 0.0)
    }

    pub fn with_gamma(
        alpha: f64,
        beta: f64,
        delta: f64,
        lambda: f64,
        mu: f64,
        gamma: f64,
    ) -> Result<Self, ParamError> {
        fn check(name: ParamName, value: f64, bound: &'static str, ok: bool) -> Result<(), ParamError> {
            if !value.is_finite() {
                return Err(ParamError {
                    field: name,
                    bound: "finite",
                    value,
                });
            }
            if !ok {
                return Err(ParamError {
                    field: name,
                    bound,
                    value,
                });
            }
            Ok(())
        }
        check(ParamName::Alpha, alpha, ">= 0", alpha >= 0.0)?;
        check(ParamName::Beta, beta, "finite", true)?;
        check(ParamName::Delta, delta, "> 0", delta > 0.0)?;
        check(ParamName::Lambda, lambda, "> 0", lambda > 0.0)?;
        check(ParamName::Mu, mu, ">= 0", mu >= 0.0)?;
        check(ParamName::Gamma, gamma, "finite", true)?;
        Ok(Self {
            alpha,
            beta,
            delta,
            lambda,
            mu,
            gamma,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn get(&self, which: ParamName) -> f64 {
        match which {
            ParamName::Alpha => self.alpha,
            ParamName::Beta => self.beta,
            ParamName::Delta => self.delta,
            ParamName::Lambda => self.lambda,
            ParamName::Mu => self.mu,
            ParamName::Gamma => self.gamma,
        }
    }

    /// Returns a copy with one parameter replaced, re-validating bounds.
    pub fn with(&self, which: ParamName, value: f64) -> Result<Self, ParamError> {
        let mut p = *self;
        match which {
            ParamName::Alpha => p.alpha = value,
            ParamName::Beta => p.beta = value,
            ParamName::Delta => p.delta = value,
            ParamName::Lambda => p.lambda = value,
            ParamName::Mu => p.mu = value,
            ParamName::Gamma => p.gamma = value,
        }
        Self::with_gamma(p.alpha, p.beta, p.delta, p.lambda, p.mu, p.gamma)
    }

    /// Same parameters with γ = 0.
    pub fn unrotated(&self) -> Self {
        let mut p = *self;
        p.gamma = 0.0;
        p
    }

    fn response(&self, x: f64) -> f64 {
        (self.alpha * x + self.beta) * x + 1.0
    }

    fn response_dx(&self, x: f64) -> f64 {
        2.0 * self.alpha * x + self.beta
    }

    /// The unrotated pair (P, Q). On x = 0 the first component is exactly
    /// zero; on y = 0 the second is.
    pub fn base_field(&self, pt: PhasePoint) -> FieldValue {
        let a = self.response(pt.x);
        let p = pt.x * ((1.0 - self.lambda * pt.x) * a - pt.x * pt.y);
        let q = -pt.y * ((self.delta + self.mu * pt.y) * a - pt.x * pt.x);
        FieldValue { p, q }
    }

    fn base_jacobian(&self, pt: PhasePoint) -> Mat2 {
        let (x, y) = (pt.x, pt.y);
        let a = self.response(x);
        let da = self.response_dx(x);
        let g = x * (1.0 - self.lambda * x);
        let dg = 1.0 - 2.0 * self.lambda * x;
        let px = dg * a + g * da - 2.0 * x * y;
        let py = -x * x;
        let w = self.delta * y + self.mu * y * y;
        let qx = -w * da + 2.0 * x * y;
        let qy = -(self.delta + 2.0 * self.mu * y) * a + x * x;
        Mat2::new(px, py, qx, qy)
    }

    /// Derivative of the rotated field with respect to one parameter.
    ///
    /// For γ this is (-Q, P) built from the unrotated components; for the
    /// model parameters the unrotated derivative is passed through the
    /// rotation matrix.
    pub fn param_derivative(&self, which: ParamName, pt: PhasePoint) -> FieldValue {
        let (x, y) = (pt.x, pt.y);
        if let ParamName::Gamma = which {
            let f = self.base_field(pt);
            return FieldValue { p: -f.q, q: f.p };
        }
        let a = self.response(x);
        let g = x * (1.0 - self.lambda * x);
        let w = self.delta * y + self.mu * y * y;
        let base = match which {
            ParamName::Alpha => FieldValue {
                p: g * x * x,
                q: -w * x * x,
            },
            ParamName::Beta => FieldValue {
                p: g * x,
                q: -w * x,
            },
            ParamName::Delta => FieldValue { p: 0.0, q: -y * a },
            ParamName::Lambda => FieldValue {
                p: -x * x * a,
                q: 0.0,
            },
            ParamName::Mu => FieldValue {
                p: 0.0,
                q: -y * y * a,
            },
            ParamName::Gamma => unreachable!(),
        };
        FieldValue {
            p: base.p - self.gamma * base.q,
            q: base.q + self.gamma * base.p,
        }
    }

    /// Rotation determinant `Δ_w = P·∂Q/∂w - Q·∂P/∂w`.
    ///
    /// For α and β the determinant is taken on the γ = 0 field; for γ the
    /// value is P² + Q², independent of γ itself. Closed forms:
    /// `Δ_α = x⁴y·E` and `Δ_β = x³y·E` with `E` the [`Self::ellipse_residual`];
    /// the two differ by one factor of x and share sign wherever x > 0.
    pub fn rotation_determinant(&self, pt: PhasePoint, which: RotationParam) -> f64 {
        let f = self.base_field(pt);
        match which {
            RotationParam::Alpha => {
                let base = self.unrotated();
                let df = base.param_derivative(ParamName::Alpha, pt);
                f.wedge(df)
            }
            RotationParam::Beta => {
                let base = self.unrotated();
                let df = base.param_derivative(ParamName::Beta, pt);
                f.wedge(df)
            }
            RotationParam::Gamma => f.p * f.p + f.q * f.q,
        }
    }

    /// Residual of the conic `y(δ + μy) - x(1 - λx) = 0` separating the
    /// regions of positive and negative field rotation under α and β.
    ///
    /// For μ > 0 the zero set is an ellipse; for μ = 0 it degenerates to a
    /// parabola-shaped set. The residual is evaluated regardless.
    pub fn ellipse_residual(&self, pt: PhasePoint) -> f64 {
        pt.y * (self.delta + self.mu * pt.y) - pt.x * (1.0 - self.lambda * pt.x)
    }

    /// Monomial coefficients of the unrotated P component.
    pub fn p_coefficients(&self) -> PolyXY {
        let mut c = PolyXY::zero();
        // x(1 - λx)(αx² + βx + 1) - x²y
        c.set(4, 0, -self.lambda * self.alpha);
        c.set(3, 0, self.alpha - self.lambda * self.beta);
        c.set(2, 0, self.beta - self.lambda);
        c.set(1, 0, 1.0);
        c.set(2, 1, -1.0);
        c
    }

    /// Monomial coefficients of the unrotated Q component.
    pub fn q_coefficients(&self) -> PolyXY {
        let mut c = PolyXY::zero();
        // -(δy + μy²)(αx² + βx + 1) + x²y
        c.set(2, 2, -self.mu * self.alpha);
        c.set(1, 2, -self.mu * self.beta);
        c.set(0, 2, -self.mu);
        c.set(2, 1, 1.0 - self.delta * self.alpha);
        c.set(1, 1, -self.delta * self.beta);
        c.set(0, 1, -self.delta);
        c
    }
}

impl PlanarField for SystemParams {
    /// The rotated field (P - γQ, Q + γP); γ = 0 gives (P, Q) exactly.
    fn eval(&self, pt: PhasePoint) -> FieldValue {
        let f = self.base_field(pt);
        if self.gamma == 0.0 {
            f
        } else {
            FieldValue {
                p: f.p - self.gamma * f.q,
                q: f.q + self.gamma * f.p,
            }
        }
    }

    /// Exact Jacobian of the rotated field: `(I + γJ₉₀)·J` with J the
    /// Jacobian of (P, Q).
    fn jacobian(&self, pt: PhasePoint) -> Mat2 {
        let j = self.base_jacobian(pt);
        if self.gamma == 0.0 {
            return j;
        }
        let rot = Mat2::new(1.0, -self.gamma, self.gamma, 1.0);
        rot.mul_mat(&j)
    }
}

/// A bivariate polynomial of total degree at most four, stored as dense
/// monomial coefficients `c[i][j]` of `x^i y^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyXY {
    pub c: [[f64; 5]; 5],
}

impl PolyXY {
    pub fn zero() -> Self {
        Self { c: [[0.0; 5]; 5] }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.c[i][j] = v;
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let mut acc = 0.0;
        let mut xp = 1.0;
        for i in 0..5 {
            let mut yp = 1.0;
            for j in 0..5 {
                if self.c[i][j] != 0.0 {
                    acc += self.c[i][j] * xp * yp;
                }
                yp *= y;
            }
            xp *= x;
        }
        acc
    }

    /// Largest total degree with a nonzero coefficient (0 for the zero
    /// polynomial).
    pub fn total_degree(&self) -> usize {
        let mut deg = 0;
        for i in 0..5 {
            for j in 0..5 {
                if self.c[i][j] != 0.0 && i + j > deg {
                    deg = i + j;
                }
            }
        }
        deg
    }

    /// Coefficients of the homogeneous part of the given total degree.
    pub fn homogeneous_part(&self, degree: usize) -> PolyXY {
        let mut out = PolyXY::zero();
        for i in 0..5 {
            for j in 0..5 {
                if i + j == degree {
                    out.c[i][j] = self.c[i][j];
                }
            }
        }
        out
    }

    /// Partial derivative in the first variable.
    pub fn partial_x(&self) -> PolyXY {
        let mut out = PolyXY::zero();
        for i in 1..5 {
            for j in 0..5 {
                out.c[i - 1][j] = self.c[i][j] * i as f64;
            }
        }
        out
    }

    /// Partial derivative in the second variable.
    pub fn partial_y(&self) -> PolyXY {
        let mut out = PolyXY::zero();
        for i in 0..5 {
            for j in 1..5 {
                out.c[i][j - 1] = self.c[i][j] * j as f64;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn params_ones() -> SystemParams {
        SystemParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    /// The rational form of the system; agrees with the quartic wherever the
    /// response denominator is nonzero (cross-check only).
    fn eval_rational(p: &SystemParams, pt: PhasePoint) -> FieldValue {
        let a = (p.alpha() * pt.x + p.beta()) * pt.x + 1.0;
        FieldValue {
            p: pt.x * (1.0 - p.lambda() * pt.x - pt.x * pt.y / a),
            q: -pt.y * (p.delta() + p.mu() * pt.y - pt.x * pt.x / a),
        }
    }

    #[test]
    fn field_value_at_unit_point() {
        let f = params_ones().eval(PhasePoint::new(1.0, 1.0));
        assert_eq!(f.p, -1.0);
        assert_eq!(f.q, -5.0);
    }

    #[test]
    fn construction_rejects_bad_values() {
        assert!(SystemParams::new(-0.1, 0.0, 1.0, 1.0, 0.0).is_err());
        assert!(SystemParams::new(0.0, 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(SystemParams::new(0.0, 0.0, 1.0, 0.0, 0.0).is_err());
        assert!(SystemParams::new(0.0, 0.0, 1.0, 1.0, -1.0).is_err());
        assert!(SystemParams::new(0.0, f64::NAN, 1.0, 1.0, 0.0).is_err());
        let err = SystemParams::new(0.0, 0.0, -2.0, 1.0, 0.0).unwrap_err();
        assert_eq!(err.field, ParamName::Delta);
    }

    #[test]
    fn gamma_zero_recovers_base_system() {
        let p = SystemParams::with_gamma(0.7, -1.3, 0.4, 0.9, 0.2, 0.0).unwrap();
        let pt = PhasePoint::new(1.7, 2.3);
        assert_eq!(p.eval(pt), p.base_field(pt));
    }

    #[test]
    fn axes_are_invariant_lines_exactly() {
        let p = SystemParams::new(2.0, -0.5, 0.3, 1.2, 0.8).unwrap();
        for t in [0.0, 0.1, 1.0, 7.5, 43.0] {
            assert_eq!(p.eval(PhasePoint::new(0.0, t)).p, 0.0);
            assert_eq!(p.eval(PhasePoint::new(t, 0.0)).q, 0.0);
        }
    }

    #[test]
    fn quartic_matches_rational_form_times_response() {
        let p = SystemParams::new(1.5, -2.0, 0.6, 0.8, 0.3).unwrap();
        for (x, y) in [(0.5, 0.7), (2.0, 1.0), (3.3, 0.2), (0.1, 4.0)] {
            let pt = PhasePoint::new(x, y);
            let a = (p.alpha() * x + p.beta()) * x + 1.0;
            let quartic = p.eval(pt);
            let rational = eval_rational(&p, pt);
            assert_relative_eq!(quartic.p, rational.p * a, max_relative = 1e-12);
            assert_relative_eq!(quartic.q, rational.q * a, max_relative = 1e-12);
        }
    }

    fn finite_difference_jacobian(p: &SystemParams, pt: PhasePoint) -> Mat2 {
        let scale_x = 1e-6 * (1.0 + pt.x.abs());
        let scale_y = 1e-6 * (1.0 + pt.y.abs());
        let fx1 = p.eval(PhasePoint::new(pt.x + scale_x, pt.y));
        let fx0 = p.eval(PhasePoint::new(pt.x - scale_x, pt.y));
        let fy1 = p.eval(PhasePoint::new(pt.x, pt.y + scale_y));
        let fy0 = p.eval(PhasePoint::new(pt.x, pt.y - scale_y));
        Mat2::new(
            (fx1.p - fx0.p) / (2.0 * scale_x),
            (fy1.p - fy0.p) / (2.0 * scale_y),
            (fx1.q - fx0.q) / (2.0 * scale_x),
            (fy1.q - fy0.q) / (2.0 * scale_y),
        )
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = SystemParams::with_gamma(1.3, -0.7, 0.45, 1.1, 0.6, 0.25).unwrap();
        let pts = [
            (0.3, 0.4),
            (1.0, 1.0),
            (2.5, 0.1),
            (0.05, 3.0),
            (4.0, 4.0),
            (0.9, 0.02),
            (1.7, 2.6),
            (3.1, 1.4),
            (0.6, 0.6),
            (2.2, 3.8),
        ];
        for (x, y) in pts {
            let pt = PhasePoint::new(x, y);
            let j = p.jacobian(pt);
            let fd = finite_difference_jacobian(&p, pt);
            for r in 0..2 {
                for c in 0..2 {
                    let scale = 1.0 + j.m[r][c].abs();
                    assert_abs_diff_eq!(j.m[r][c], fd.m[r][c], epsilon = 1e-6 * scale);
                }
            }
        }
    }

    #[test]
    fn rotated_jacobian_is_rotation_times_base_jacobian() {
        let base = SystemParams::new(0.8, -1.1, 0.5, 0.7, 0.4).unwrap();
        let gamma = 0.37;
        let rotated = SystemParams::with_gamma(0.8, -1.1, 0.5, 0.7, 0.4, gamma).unwrap();
        let rot = Mat2::new(1.0, -gamma, gamma, 1.0);
        for (x, y) in [(0.4, 0.9), (1.6, 0.3), (2.1, 2.1)] {
            let pt = PhasePoint::new(x, y);
            let expected = rot.mul_mat(&base.jacobian(pt));
            let got = rotated.jacobian(pt);
            for r in 0..2 {
                for c in 0..2 {
                    assert_relative_eq!(got.m[r][c], expected.m[r][c], max_relative = 1e-14);
                }
            }
        }
    }

    #[test]
    fn jacobian_entries_are_cubic_when_alpha_zero() {
        // With α = 0 the field has total degree 3, so every Jacobian entry
        // is a polynomial of total degree at most 2 plus the cubic from the
        // degree-3 terms; sampling along a ray, entries grow at most like t³.
        let p = SystemParams::new(0.0, 0.0, 0.5, 1.0, 0.5).unwrap();
        let dir = (0.6, 0.8);
        let t0 = 100.0;
        let j0 = p.jacobian(PhasePoint::new(dir.0 * t0, dir.1 * t0));
        let j1 = p.jacobian(PhasePoint::new(dir.0 * 2.0 * t0, dir.1 * 2.0 * t0));
        for r in 0..2 {
            for c in 0..2 {
                if j0.m[r][c].abs() > 1e-9 {
                    let growth = (j1.m[r][c] / j0.m[r][c]).abs();
                    assert!(growth <= 8.1, "entry ({r},{c}) grew by {growth}");
                }
            }
        }
    }

    #[test]
    fn rotation_determinant_values_at_unit_point() {
        let p = params_ones();
        let pt = PhasePoint::new(1.0, 1.0);
        assert_relative_eq!(
            p.rotation_determinant(pt, RotationParam::Alpha),
            2.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            p.rotation_determinant(pt, RotationParam::Beta),
            2.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            p.rotation_determinant(pt, RotationParam::Gamma),
            26.0,
            max_relative = 1e-14
        );
    }

    /// Central finite differences in a parameter, independent of the
    /// hand-coded derivative formulas.
    fn fd_param_derivative(p: &SystemParams, which: ParamName, pt: PhasePoint) -> FieldValue {
        let h = 1e-6 * (1.0 + p.get(which).abs());
        let hi = p.with(which, p.get(which) + h).unwrap();
        let lo = p.with(which, p.get(which) - h).unwrap();
        let f1 = hi.eval(pt);
        let f0 = lo.eval(pt);
        FieldValue {
            p: (f1.p - f0.p) / (2.0 * h),
            q: (f1.q - f0.q) / (2.0 * h),
        }
    }

    #[test]
    fn param_derivatives_match_finite_differences() {
        let p = SystemParams::with_gamma(1.2, -0.8, 0.5, 0.9, 0.35, 0.15).unwrap();
        for which in ParamName::ALL {
            for (x, y) in [(0.7, 1.3), (2.4, 0.5), (1.1, 2.2)] {
                let pt = PhasePoint::new(x, y);
                let analytic = p.param_derivative(which, pt);
                let fd = fd_param_derivative(&p, which, pt);
                assert_abs_diff_eq!(analytic.p, fd.p, epsilon = 2e-5 * (1.0 + analytic.p.abs()));
                assert_abs_diff_eq!(analytic.q, fd.q, epsilon = 2e-5 * (1.0 + analytic.q.abs()));
            }
        }
    }

    #[test]
    fn ellipse_residual_values() {
        let p = params_ones();
        assert_eq!(p.ellipse_residual(PhasePoint::new(1.0, 1.0)), 2.0);
        // A point solved to lie on the curve: x = 0.5, y from the quadratic
        // μy² + δy - x(1-λx) = 0.
        let x = 0.5_f64;
        let rhs = x * (1.0 - x);
        let y = (-1.0 + (1.0 + 4.0 * rhs).sqrt()) / 2.0;
        assert_abs_diff_eq!(p.ellipse_residual(PhasePoint::new(x, y)), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn polynomial_coefficients_reproduce_field() {
        let p = SystemParams::new(1.4, -2.3, 0.7, 0.6, 0.9).unwrap();
        let pc = p.p_coefficients();
        let qc = p.q_coefficients();
        for (x, y) in [(0.3, 0.8), (1.9, 1.1), (2.7, 3.3), (0.0, 2.0), (2.0, 0.0)] {
            let f = p.base_field(PhasePoint::new(x, y));
            assert_relative_eq!(pc.eval(x, y), f.p, max_relative = 1e-11, epsilon = 1e-12);
            assert_relative_eq!(qc.eval(x, y), f.q, max_relative = 1e-11, epsilon = 1e-12);
        }
        assert_eq!(pc.total_degree(), 4);
        assert_eq!(qc.total_degree(), 4);
    }

    proptest! {
        #[test]
        fn invariant_lines_hold_for_random_params(
            alpha in 0.0..4.0f64,
            beta in -4.0..3.0f64,
            delta in 0.01..2.0f64,
            lambda in 0.05..3.0f64,
            mu in 0.0..2.0f64,
            t in 0.0..40.0f64,
        ) {
            let p = SystemParams::new(alpha, beta, delta, lambda, mu).unwrap();
            prop_assert_eq!(p.eval(PhasePoint::new(0.0, t)).p, 0.0);
            prop_assert_eq!(p.eval(PhasePoint::new(t, 0.0)).q, 0.0);
        }

        #[test]
        fn alpha_determinant_matches_closed_form(
            alpha in 0.0..4.0f64,
            beta in -4.0..3.0f64,
            delta in 0.01..2.0f64,
            lambda in 0.05..3.0f64,
            mu in 0.0..2.0f64,
            x in 0.01..6.0f64,
            y in 0.01..6.0f64,
        ) {
            let p = SystemParams::new(alpha, beta, delta, lambda, mu).unwrap();
            let pt = PhasePoint::new(x, y);
            let det = p.rotation_determinant(pt, RotationParam::Alpha);
            let closed = x.powi(4) * y * p.ellipse_residual(pt);
            let scale = det.abs().max(closed.abs()).max(1e-300);
            prop_assert!((det - closed).abs() <= 1e-12 * scale,
                "det={det} closed={closed}");
        }

        #[test]
        fn beta_determinant_matches_cubic_closed_form(
            alpha in 0.0..4.0f64,
            beta in -4.0..3.0f64,
            delta in 0.01..2.0f64,
            lambda in 0.05..3.0f64,
            mu in 0.0..2.0f64,
            x in 0.01..6.0f64,
            y in 0.01..6.0f64,
        ) {
            let p = SystemParams::new(alpha, beta, delta, lambda, mu).unwrap();
            let pt = PhasePoint::new(x, y);
            let det = p.rotation_determinant(pt, RotationParam::Beta);
            let closed = x.powi(3) * y * p.ellipse_residual(pt);
            let scale = det.abs().max(closed.abs()).max(1e-300);
            prop_assert!((det - closed).abs() <= 1e-12 * scale,
                "det={det} closed={closed}");
        }

        #[test]
        fn gamma_determinant_is_speed_squared(
            x in -4.0..6.0f64,
            y in -4.0..6.0f64,
            gamma in -1.0..1.0f64,
        ) {
            let p = SystemParams::with_gamma(1.0, -1.0, 0.5, 1.0, 0.5, gamma).unwrap();
            let pt = PhasePoint::new(x, y);
            let f = p.base_field(pt);
            let det = p.rotation_determinant(pt, RotationParam::Gamma);
            prop_assert!(det >= 0.0);
            let expected = f.p * f.p + f.q * f.q;
            let scale = expected.max(1e-300);
            prop_assert!((det - expected).abs() <= 1e-12 * scale);
        }

        #[test]
        fn ellipse_residual_sign_matches_alpha_determinant(
            x in 0.01..8.0f64,
            y in 0.01..8.0f64,
        ) {
            let p = SystemParams::new(0.9, -1.4, 0.4, 0.8, 0.6).unwrap();
            let pt = PhasePoint::new(x, y);
            let residual = p.ellipse_residual(pt);
            let det = p.rotation_determinant(pt, RotationParam::Alpha);
            // Off the curve itself the signs must agree in the open first
            // quadrant.
            if residual.abs() > 1e-9 {
                prop_assert_eq!(residual.signum(), det.signum());
            }
        }
    }
}
