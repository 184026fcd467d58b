//! Real univariate polynomials and companion-matrix root finding.

use nalgebra::DMatrix;

/// Coefficients in ascending order: `c[0] + c[1] x + ... + c[n] x^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    /// Drops trailing coefficients smaller than `tol` relative to the
    /// largest coefficient.
    pub fn trimmed(&self, tol: f64) -> Poly {
        let scale = self
            .coeffs
            .iter()
            .fold(0.0f64, |acc, c| acc.max(c.abs()))
            .max(1e-300);
        let mut coeffs = self.coeffs.clone();
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.abs() <= tol * scale) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::constant(0.0);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * i as f64)
            .collect();
        Poly { coeffs }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![0.0; n];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        Poly { coeffs }
    }

    pub fn scale(&self, k: f64) -> Poly {
        Poly {
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut coeffs = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Poly { coeffs }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-1.0))
    }

    /// All complex roots as `(re, im)` pairs via the eigenvalues of the
    /// companion matrix of the monic polynomial. Leading/trailing
    /// coefficients are trimmed at relative 1e-14 first.
    pub fn complex_roots(&self) -> Vec<(f64, f64)> {
        let trimmed = self.trimmed(1e-14);
        let n = trimmed.degree();
        if n == 0 {
            return Vec::new();
        }
        if n == 1 {
            return vec![(-trimmed.coeffs[0] / trimmed.coeffs[1], 0.0)];
        }
        if n == 2 {
            return quadratic_roots(trimmed.coeffs[2], trimmed.coeffs[1], trimmed.coeffs[0]);
        }
        let lead = trimmed.coeffs[n];
        let mut companion = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            companion[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            companion[(i, n - 1)] = -trimmed.coeffs[i] / lead;
        }
        companion
            .complex_eigenvalues()
            .iter()
            .map(|z| (z.re, z.im))
            .collect()
    }

    /// Real roots, polished by Newton iteration on the polynomial itself.
    ///
    /// A complex eigenvalue is accepted as real when its imaginary part is
    /// below `im_tol * (1 + |re|)`.
    pub fn real_roots(&self, im_tol: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for (re, im) in self.complex_roots() {
            if im.abs() <= im_tol * (1.0 + re.abs()) {
                out.push(self.newton_polish(re));
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    fn newton_polish(&self, x0: f64) -> f64 {
        let deriv = self.derivative();
        let mut x = x0;
        for _ in 0..8 {
            let f = self.eval(x);
            let df = deriv.eval(x);
            if df.abs() < 1e-300 {
                break;
            }
            let step = f / df;
            x -= step;
            if step.abs() <= 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        x
    }
}

/// Numerically stable roots of `a x² + b x + c`.
pub fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<(f64, f64)> {
    if a == 0.0 {
        if b == 0.0 {
            return Vec::new();
        }
        return vec![(-c / b, 0.0)];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        let re = -b / (2.0 * a);
        let im = (-disc).sqrt() / (2.0 * a).abs();
        return vec![(re, -im), (re, im)];
    }
    let root = disc.sqrt();
    let q = -0.5 * (b + b.signum() * root);
    if q == 0.0 {
        // b = 0 and disc = 0, i.e. double root at the vertex.
        return vec![(0.0, 0.0), (0.0, 0.0)];
    }
    let r1 = q / a;
    let r2 = c / q;
    vec![(r1, 0.0), (r2, 0.0)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quadratic_formula_oracle() {
        // x² - 3x + 1: roots (3 ± √5) / 2.
        let p = Poly::new(vec![1.0, -3.0, 1.0]);
        let roots = p.real_roots(1e-9);
        assert_eq!(roots.len(), 2);
        let expected_lo = (3.0 - 5.0f64.sqrt()) / 2.0;
        let expected_hi = (3.0 + 5.0f64.sqrt()) / 2.0;
        assert_relative_eq!(roots[0], expected_lo, max_relative = 1e-12);
        assert_relative_eq!(roots[1], expected_hi, max_relative = 1e-12);
    }

    #[test]
    fn companion_roots_of_known_quintic() {
        // (x-1)(x-2)(x-3)(x+1)(x+4)
        let p = Poly::new(vec![1.0])
            .mul(&Poly::new(vec![-1.0, 1.0]))
            .mul(&Poly::new(vec![-2.0, 1.0]))
            .mul(&Poly::new(vec![-3.0, 1.0]))
            .mul(&Poly::new(vec![1.0, 1.0]))
            .mul(&Poly::new(vec![4.0, 1.0]));
        let roots = p.real_roots(1e-9);
        let expected = [-4.0, -1.0, 1.0, 2.0, 3.0];
        assert_eq!(roots.len(), 5);
        for (r, e) in roots.iter().zip(expected) {
            assert_relative_eq!(*r, e, max_relative = 1e-10);
        }
    }

    #[test]
    fn complex_pairs_are_rejected_from_real_roots() {
        // (x² + 1)(x - 2)
        let p = Poly::new(vec![1.0, 0.0, 1.0]).mul(&Poly::new(vec![-2.0, 1.0]));
        let roots = p.real_roots(1e-9);
        assert_eq!(roots.len(), 1);
        assert_relative_eq!(roots[0], 2.0, max_relative = 1e-12);
    }

    #[test]
    fn trimming_handles_degenerate_leading_terms() {
        let p = Poly::new(vec![2.0, -1.0, 0.0, 0.0]);
        assert_eq!(p.trimmed(1e-14).degree(), 1);
        let roots = p.real_roots(1e-9);
        assert_eq!(roots.len(), 1);
        assert_relative_eq!(roots[0], 2.0);
    }

    #[test]
    fn zero_and_constant_polynomials_have_no_roots() {
        assert!(Poly::constant(0.0).real_roots(1e-9).is_empty());
        assert!(Poly::constant(3.0).real_roots(1e-9).is_empty());
    }
}
