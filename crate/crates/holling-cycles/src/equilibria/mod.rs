//! Singular points of the system: location, classification, Poincaré
//! indices, the points at infinity, and the index-theorem audits.
//!
//! Finite singularities of the unrotated system solve
//!
//! ```text
//! x((1 - λx)(αx² + βx + 1) - xy) = 0
//! y((δ + μy)(αx² + βx + 1) - x²) = 0
//! ```
//!
//! which splits into the origin, the point (0, -δ/μ) for μ > 0, the real
//! roots of the response quadratic paired with y = 0, the prey-capacity
//! point (1/λ, 0), and the interior branch obtained by eliminating y and
//! root-solving one univariate polynomial with a companion matrix.

mod audit;
mod infinity;

pub use audit::{audit_index_theorems, audit_with_points, AlternationReport, IndexTheoremAudit};
pub use infinity::{
    find_infinite, infinite_chart_points, ChartField, InfiniteDirection, InfiniteEquilibrium,
    InfiniteKind,
};

use crate::error::IndexError;
use crate::polynomial::{quadratic_roots, Poly};
use crate::vectorfield::{ComplexEig, FieldValue, PhasePoint, PlanarField, SystemParams};

/// Deduplication radius for located points, scaled by `1 + |location|`.
pub const DEDUP_RADIUS: f64 = 1e-8;
/// Jacobian determinant magnitude below which a point is degenerate.
pub const DET_TOL: f64 = 1e-10;
/// Relative real-part tolerance for the center-candidate call.
pub const CENTER_EIG_TOL: f64 = 1e-9;

/// Topological type of a finite singular point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquilibriumKind {
    Saddle,
    Node,
    Focus,
    /// Eigenvalues purely imaginary within tolerance; a true center is
    /// never asserted.
    CenterCandidate,
    SaddleNode,
    Degenerate,
}

impl EquilibriumKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EquilibriumKind::Saddle => "saddle",
            EquilibriumKind::Node => "node",
            EquilibriumKind::Focus => "focus",
            EquilibriumKind::CenterCandidate => "center-candidate",
            EquilibriumKind::SaddleNode => "saddle-node",
            EquilibriumKind::Degenerate => "degenerate",
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, EquilibriumKind::SaddleNode | EquilibriumKind::Degenerate)
    }

    /// Anti-saddles are the det > 0 types.
    pub fn is_anti_saddle(&self) -> bool {
        matches!(
            self,
            EquilibriumKind::Node | EquilibriumKind::Focus | EquilibriumKind::CenterCandidate
        )
    }
}

impl std::fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A located and classified finite singular point.
#[derive(Debug, Clone, Copy)]
pub struct Equilibrium {
    pub location: PhasePoint,
    pub eigenvalues: [ComplexEig; 2],
    pub kind: EquilibriumKind,
    /// Poincaré index: sign of det J for nondegenerate points, winding
    /// number otherwise.
    pub index: i32,
    pub in_open_first_quadrant: bool,
}

impl Equilibrium {
    pub fn is_saddle(&self) -> bool {
        self.kind == EquilibriumKind::Saddle
    }

    pub fn is_anti_saddle(&self) -> bool {
        self.kind.is_anti_saddle()
    }
}

/// All real solutions of the equilibrium system of the γ = 0 field (the
/// rotated field has the same zeros), refined by damped Newton iteration,
/// deduplicated, and classified. Sorted by (x, y).
pub fn find_finite(params: &SystemParams) -> Vec<Equilibrium> {
    let base = params.unrotated();
    let mut points: Vec<PhasePoint> = Vec::new();

    // Origin and the predator-axis point.
    push_dedup(&mut points, PhasePoint::new(0.0, 0.0));
    if base.mu() > 0.0 {
        push_dedup(&mut points, PhasePoint::new(0.0, -base.delta() / base.mu()));
    }

    // Response-quadratic roots on the prey axis.
    for (re, im) in quadratic_roots(base.alpha(), base.beta(), 1.0) {
        if im == 0.0 {
            let x = refine_on_prey_axis(&base, re);
            push_dedup(&mut points, PhasePoint::new(x, 0.0));
        }
    }

    // Prey-capacity point.
    push_dedup(&mut points, PhasePoint::new(1.0 / base.lambda(), 0.0));

    // Interior branch: substitute y = (1 - λx)(αx² + βx + 1)/x into the
    // second equation and clear denominators. The cofactor polynomial is
    //   F(x) = A(x)(δx + μ(1 - λx)A(x)) - x³
    // whose real roots pair with the substituted y.
    let response = Poly::new(vec![1.0, base.beta(), base.alpha()]);
    let one_minus_lx = Poly::new(vec![1.0, -base.lambda()]);
    let inner = Poly::new(vec![0.0, base.delta()])
        .add(&one_minus_lx.mul(&response).scale(base.mu()));
    let cofactor = response.mul(&inner).sub(&Poly::new(vec![0.0, 0.0, 0.0, 1.0]));
    for x in cofactor.real_roots(1e-8) {
        if x.abs() < 1e-9 {
            // Artifact of clearing the 1/x denominator (arises when μ = 0).
            continue;
        }
        let a = (base.alpha() * x + base.beta()) * x + 1.0;
        let y = (1.0 - base.lambda() * x) * a / x;
        if !y.is_finite() {
            continue;
        }
        if let Some(p) = newton_refine(&base, PhasePoint::new(x, y)) {
            push_dedup(&mut points, p);
        }
    }

    let mut list: Vec<Equilibrium> = points
        .into_iter()
        .filter(|p| residual_ok(&base, *p))
        .map(|p| classify(&base, p))
        .collect();
    // Degenerate points get a winding-number index where the sign of det
    // says nothing.
    let locations: Vec<PhasePoint> = list.iter().map(|e| e.location).collect();
    for eq in list.iter_mut() {
        if eq.kind.is_degenerate() {
            eq.index = degenerate_index(&base, eq.location, &locations);
        }
    }
    list.sort_by(|a, b| {
        a.location
            .x
            .total_cmp(&b.location.x)
            .then(a.location.y.total_cmp(&b.location.y))
    });
    list
}

fn push_dedup(points: &mut Vec<PhasePoint>, p: PhasePoint) {
    if !p.is_finite() {
        return;
    }
    let scale = 1.0 + p.x.hypot(p.y);
    if points.iter().all(|q| q.distance(p) > DEDUP_RADIUS * scale) {
        points.push(p);
    }
}

/// 1D Newton along the prey axis keeps y = 0 exact for axis candidates.
fn refine_on_prey_axis(params: &SystemParams, x0: f64) -> f64 {
    let mut x = x0;
    for _ in 0..12 {
        let pt = PhasePoint::new(x, 0.0);
        let f = params.base_field(pt).p;
        let df = params.jacobian(pt).m[0][0];
        if df.abs() < 1e-300 {
            break;
        }
        let step = f / df;
        x -= step;
        if step.abs() <= 1e-16 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

fn residual_ok(params: &SystemParams, p: PhasePoint) -> bool {
    let r = p.x.hypot(p.y);
    params.base_field(p).norm() <= 1e-10 * (1.0 + r.powi(4))
}

/// Damped 2D Newton iteration targeting an absolute field residual of
/// 1e-12 scaled by (1 + |location|⁴).
fn newton_refine(params: &SystemParams, start: PhasePoint) -> Option<PhasePoint> {
    let mut p = start;
    let mut f = params.base_field(p);
    for _ in 0..30 {
        let r = p.x.hypot(p.y);
        if f.norm() <= 1e-13 * (1.0 + r.powi(4)) {
            break;
        }
        let j = params.jacobian(p);
        let det = j.det();
        if det.abs() < 1e-14 * (1.0 + j.m.iter().flatten().map(|v| v * v).sum::<f64>()) {
            break;
        }
        let dx = (j.m[1][1] * f.p - j.m[0][1] * f.q) / det;
        let dy = (-j.m[1][0] * f.p + j.m[0][0] * f.q) / det;
        let mut scale = 1.0;
        let mut improved = false;
        for _ in 0..8 {
            let trial = PhasePoint::new(p.x - scale * dx, p.y - scale * dy);
            let ft = params.base_field(trial);
            if ft.norm() < f.norm() {
                p = trial;
                f = ft;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if p.is_finite() {
        Some(p)
    } else {
        None
    }
}

fn classify(params: &SystemParams, location: PhasePoint) -> Equilibrium {
    let j = params.jacobian(location);
    let det = j.det();
    let tr = j.trace();
    let eigenvalues = j.eigenvalues();
    let scale = j.m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let det_tol = DET_TOL * (1.0 + scale * scale);

    let kind = if det < -det_tol {
        EquilibriumKind::Saddle
    } else if det > det_tol {
        let disc = tr * tr - 4.0 * det;
        let modulus = eigenvalues[0].modulus().max(eigenvalues[1].modulus());
        if disc < 0.0 && (0.5 * tr).abs() < CENTER_EIG_TOL * modulus {
            EquilibriumKind::CenterCandidate
        } else if disc < 0.0 {
            EquilibriumKind::Focus
        } else {
            EquilibriumKind::Node
        }
    } else if tr.abs() > det_tol.sqrt() {
        EquilibriumKind::SaddleNode
    } else {
        EquilibriumKind::Degenerate
    };

    let index = if det < -det_tol {
        -1
    } else if det > det_tol {
        1
    } else {
        0 // refined by the winding fallback afterwards
    };

    Equilibrium {
        location,
        eigenvalues,
        kind,
        index,
        in_open_first_quadrant: location.x > 0.0 && location.y > 0.0,
    }
}

fn degenerate_index(
    params: &SystemParams,
    center: PhasePoint,
    all: &[PhasePoint],
) -> i32 {
    let mut radius = 1e-3 * (1.0 + center.x.hypot(center.y));
    let nearest = all
        .iter()
        .filter(|q| q.distance(center) > 1e-12)
        .map(|q| q.distance(center))
        .fold(f64::INFINITY, f64::min);
    if nearest.is_finite() {
        radius = radius.min(0.35 * nearest);
    }
    poincare_index(params, center, radius).unwrap_or(0)
}

/// Winding number of the field along a circle, by accumulating wrapped
/// angle increments over sampled points and rounding. Retries internally
/// with denser sampling while the pre-rounding residual is 0.1 or more.
pub fn poincare_index(
    params: &SystemParams,
    center: PhasePoint,
    radius: f64,
) -> Result<i32, IndexError> {
    let base = params.unrotated();
    winding_index(|pt| base.eval(pt), center, radius)
}

/// Winding index of an arbitrary planar field closure (used for the
/// compactification charts as well).
pub fn winding_index(
    f: impl Fn(PhasePoint) -> FieldValue,
    center: PhasePoint,
    radius: f64,
) -> Result<i32, IndexError> {
    let mut last_err = None;
    for n in [256usize, 1024, 4096, 16384, 65536] {
        match winding_index_once(&f, center, radius, n) {
            Ok(j) => return Ok(j),
            Err(e @ IndexError::NonIntegerWinding { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("retry loop ran"))
}

/// Single-resolution winding computation.
pub fn winding_index_once(
    f: &impl Fn(PhasePoint) -> FieldValue,
    center: PhasePoint,
    radius: f64,
    n: usize,
) -> Result<i32, IndexError> {
    let mut values = Vec::with_capacity(n + 1);
    let mut max_norm = 0.0f64;
    for k in 0..=n {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let pt = PhasePoint::new(
            center.x + radius * theta.cos(),
            center.y + radius * theta.sin(),
        );
        let v = f(pt);
        max_norm = max_norm.max(v.norm());
        values.push((pt, v));
    }
    let sing_tol = 1e-12 * max_norm.max(1e-290);
    for (pt, v) in &values {
        if v.norm() < sing_tol {
            return Err(IndexError::ContourThroughSingularity {
                x: pt.x,
                y: pt.y,
                norm: v.norm(),
            });
        }
    }
    let mut total = 0.0;
    for w in values.windows(2) {
        let (a, b) = (w[0].1, w[1].1);
        let cross = a.p * b.q - a.q * b.p;
        let dot = a.p * b.p + a.q * b.q;
        total += cross.atan2(dot);
    }
    let j_float = total / (2.0 * std::f64::consts::PI);
    let j = j_float.round();
    let residual = (j_float - j).abs();
    if residual >= 0.1 {
        return Err(IndexError::NonIntegerWinding {
            residual,
            samples: n,
        });
    }
    Ok(j as i32)
}

/// Structural check for the open first quadrant: at most one simple
/// interior point when β ≥ 0, at most two when β < 0, and with exactly two
/// the left one is an anti-saddle and the right one a saddle. Returns a
/// violation description if the located points break the pattern.
pub fn interior_structure_check(
    params: &SystemParams,
    equilibria: &[Equilibrium],
) -> Result<(), String> {
    let interior: Vec<&Equilibrium> = equilibria
        .iter()
        .filter(|e| e.in_open_first_quadrant && !e.kind.is_degenerate())
        .collect();
    let max_allowed = if params.beta() >= 0.0 { 1 } else { 2 };
    if interior.len() > max_allowed {
        return Err(format!(
            "{} simple interior points with beta = {}",
            interior.len(),
            params.beta()
        ));
    }
    if interior.len() == 2 {
        let (left, right) = if interior[0].location.x <= interior[1].location.x {
            (interior[0], interior[1])
        } else {
            (interior[1], interior[0])
        };
        if !left.is_anti_saddle() || !right.is_saddle() {
            return Err(format!(
                "interior pair is ({}, {}); expected (anti-saddle, saddle) by x order",
                left.kind, right.kind
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::Rng;
    use rand::SeedableRng;

    fn params(alpha: f64, beta: f64, delta: f64, lambda: f64, mu: f64) -> SystemParams {
        SystemParams::new(alpha, beta, delta, lambda, mu).unwrap()
    }

    fn find(list: &[Equilibrium], x: f64, y: f64) -> Option<&Equilibrium> {
        list.iter()
            .find(|e| e.location.distance(PhasePoint::new(x, y)) < 1e-6)
    }

    #[test]
    fn origin_is_always_a_saddle() {
        for p in [
            params(1.0, 1.0, 1.0, 1.0, 1.0),
            params(0.0, 0.0, 0.25, 1.0, 0.0),
            params(2.0, -3.0, 0.4, 0.7, 0.3),
        ] {
            let list = find_finite(&p);
            let origin = find(&list, 0.0, 0.0).expect("origin present");
            assert_eq!(origin.kind, EquilibriumKind::Saddle);
            assert_eq!(origin.index, -1);
        }
    }

    #[test]
    fn prey_capacity_point_is_always_present() {
        for p in [
            params(1.0, 1.0, 1.0, 1.0, 1.0),
            params(0.5, -2.0, 0.3, 2.0, 0.8),
            params(0.0, 0.0, 0.25, 1.0, 0.0),
        ] {
            let list = find_finite(&p);
            assert!(
                find(&list, 1.0 / p.lambda(), 0.0).is_some(),
                "capacity point missing for lambda = {}",
                p.lambda()
            );
        }
    }

    #[test]
    fn interior_point_closed_form_case() {
        // With α = β = μ = 0 the interior branch reduces to x = √δ,
        // y = (1 - λ√δ)/√δ.
        let p = params(0.0, 0.0, 0.25, 1.0, 0.0);
        let list = find_finite(&p);
        let interior = find(&list, 0.5, 1.0).expect("interior point");
        assert!(interior.in_open_first_quadrant);
        assert!(interior.is_anti_saddle());
        assert_relative_eq!(interior.location.x, 0.5, max_relative = 1e-12);
        assert_relative_eq!(interior.location.y, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn response_quadratic_roots_sit_on_prey_axis() {
        let p = params(1.0, -3.0, 1.0, 1.0, 1.0);
        let list = find_finite(&p);
        let lo = (3.0 - 5.0f64.sqrt()) / 2.0;
        let hi = (3.0 + 5.0f64.sqrt()) / 2.0;
        let a = find(&list, lo, 0.0).expect("lower response root");
        let b = find(&list, hi, 0.0).expect("upper response root");
        assert_eq!(a.location.y, 0.0);
        assert_eq!(b.location.y, 0.0);
    }

    #[test]
    fn predator_axis_point_only_with_mu_positive() {
        let with_mu = params(1.0, 1.0, 1.0, 1.0, 1.0);
        assert!(find(&find_finite(&with_mu), 0.0, -1.0).is_some());
        // For μ = 0 the predator axis holds no equilibrium besides the
        // origin.
        let without_mu = params(1.0, 1.0, 1.0, 1.0, 0.0);
        let list = find_finite(&without_mu);
        assert!(list
            .iter()
            .all(|e| e.location.x != 0.0 || e.location.y == 0.0));
    }

    #[test]
    fn residuals_meet_the_refinement_bound() {
        let p = params(1.7, -2.6, 0.45, 0.9, 0.55);
        for eq in find_finite(&p) {
            let r = eq.location.x.hypot(eq.location.y);
            let res = p.base_field(eq.location).norm();
            assert!(
                res <= 1e-10 * (1.0 + r.powi(4)),
                "residual {res:.3e} at {:?}",
                eq.location
            );
        }
    }

    #[test]
    fn winding_index_matches_det_sign_at_simple_points() {
        let p = params(1.0, 1.0, 1.0, 1.0, 1.0);
        let list = find_finite(&p);
        for eq in &list {
            if eq.kind.is_degenerate() {
                continue;
            }
            let nearest = list
                .iter()
                .map(|o| o.location.distance(eq.location))
                .filter(|d| *d > 1e-10)
                .fold(f64::INFINITY, f64::min);
            let radius = (0.3 * nearest).min(1e-2);
            let j = poincare_index(&p, eq.location, radius).unwrap();
            assert_eq!(j, eq.index, "at {:?}", eq.location);
        }
    }

    #[test]
    fn winding_is_additive_over_enclosed_points() {
        // A contour around both the (0,0) saddle and the (0,-1) anti-saddle
        // has winding 0.
        let p = params(1.0, 1.0, 1.0, 1.0, 1.0);
        let j = poincare_index(&p, PhasePoint::new(0.0, -0.5), 0.7).unwrap();
        assert_eq!(j, 0);
    }

    #[test]
    fn contour_through_singularity_is_detected() {
        let p = params(1.0, 1.0, 1.0, 1.0, 1.0);
        // Circle through the origin (an equilibrium).
        let err = winding_index_once(
            &|pt| p.eval(pt),
            PhasePoint::new(0.1, 0.0),
            0.1,
            256,
        );
        assert!(matches!(
            err,
            Err(IndexError::ContourThroughSingularity { .. })
        ));
    }

    #[test]
    fn interior_structure_is_strict_for_mu_zero() {
        // With μ = 0 the interior branch reduces to a quadratic, so the
        // one-point (β ≥ 0) and two-point (β < 0) bounds are exact and the
        // two-point order is (anti-saddle, saddle) by increasing x.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed_0001);
        let mut seen_pairs = 0;
        for _ in 0..400 {
            let p = params(
                rng.random_range(0.0..4.0),
                rng.random_range(-5.0..2.0),
                rng.random_range(0.05..1.5),
                rng.random_range(0.2..2.5),
                0.0,
            );
            let list = find_finite(&p);
            if list.iter().any(|e| e.kind.is_degenerate()) {
                continue;
            }
            let interior: Vec<_> = list.iter().filter(|e| e.in_open_first_quadrant).collect();
            if interior.len() == 2 {
                seen_pairs += 1;
            }
            if let Err(v) = interior_structure_check(&p, &list) {
                panic!("structure violation: {v} for {p:?}");
            }
        }
        assert!(seen_pairs > 3, "two-point regime never sampled");
    }

    #[test]
    fn interior_structure_check_flags_violations_without_failing() {
        // With μ > 0 the interior branch is quintic and can genuinely carry
        // three simple points in the open first quadrant; the structure
        // check reports this as a flag. This pins one such configuration.
        let p = SystemParams::new(
            1.8354347131265418,
            -2.2102167955558674,
            0.7950094571100588,
            0.33976411495258213,
            0.9482126714766762,
        )
        .unwrap();
        let list = find_finite(&p);
        let interior = list.iter().filter(|e| e.in_open_first_quadrant).count();
        assert_eq!(interior, 3);
        assert!(interior_structure_check(&p, &list).is_err());
        // Each of the three is a genuine, well-refined equilibrium.
        for e in list.iter().filter(|e| e.in_open_first_quadrant) {
            assert!(p.base_field(e.location).norm() < 1e-12);
        }
    }

    #[test]
    fn center_candidate_requires_tiny_real_part() {
        // Construct a draw near the Hopf boundary by scanning beta and
        // verify the classification switches focus -> center-candidate only
        // when the trace is tiny relative to the eigenvalue modulus.
        let p = params(0.0, 0.0, 0.25, 1.0, 0.5);
        let list = find_finite(&p);
        for eq in list {
            if eq.kind == EquilibriumKind::CenterCandidate {
                let tr = eq.eigenvalues[0].re + eq.eigenvalues[1].re;
                assert!(tr.abs() < 2.0 * CENTER_EIG_TOL * eq.eigenvalues[0].modulus());
            }
        }
    }

    #[test]
    fn capacity_point_matches_eigenvalue_classification() {
        // At (1/λ, 0) the Jacobian is triangular; check the reported kind
        // against the analytic eigenvalues for a couple of draws.
        for (alpha, beta) in [(1.0, 1.0), (1.0, -3.0)] {
            let p = params(alpha, beta, 1.0, 1.0, 1.0);
            let list = find_finite(&p);
            let cap = find(&list, 1.0, 0.0).unwrap();
            let a = (alpha + beta) + 1.0; // A(1)
            let e1 = -a; // prey direction: (1-2λx)A + x(1-λx)A' at x=1/λ, λ=1
            let e2 = -p.delta() * a + 1.0;
            let det = e1 * e2;
            if det < 0.0 {
                assert_eq!(cap.kind, EquilibriumKind::Saddle);
            } else if det > 0.0 {
                assert!(cap.is_anti_saddle());
            }
        }
    }

    #[test]
    fn random_draws_have_consistent_indices() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed_0002);
        for _ in 0..25 {
            let p = params(
                rng.random_range(0.2..2.0),
                rng.random_range(-3.0..2.0),
                rng.random_range(0.15..1.0),
                rng.random_range(0.4..1.6),
                rng.random_range(0.1..1.0),
            );
            let list = find_finite(&p);
            for eq in &list {
                if eq.kind.is_degenerate() {
                    continue;
                }
                assert_eq!(eq.index, if eq.is_saddle() { -1 } else { 1 });
            }
        }
    }

    #[test]
    fn dedup_keeps_single_copy_of_capacity_point() {
        // When 1/λ is also a root of the cofactor path, only one copy may
        // survive.
        let p = params(1.0, 1.0, 1.0, 1.0, 1.0);
        let list = find_finite(&p);
        let copies = list
            .iter()
            .filter(|e| e.location.distance(PhasePoint::new(1.0, 0.0)) < 1e-6)
            .count();
        assert_eq!(copies, 1);
    }

    #[test]
    fn eigenvalues_come_from_gamma_zero_field() {
        let rotated = SystemParams::with_gamma(1.0, 1.0, 1.0, 1.0, 1.0, 0.8).unwrap();
        let plain = params(1.0, 1.0, 1.0, 1.0, 1.0);
        let a = find_finite(&rotated);
        let b = find_finite(&plain);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(x.location.x, y.location.x, epsilon = 1e-10);
            assert_eq!(x.kind, y.kind);
        }
    }
}
