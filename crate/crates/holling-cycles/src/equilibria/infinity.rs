//! Singular points at infinity via Poincaré compactification charts.
//!
//! In the chart covering the x-directions the substitution x = 1/z,
//! y = u/z turns a degree-n system (P, Q) into the polynomial field
//!
//! ```text
//! du/dz-chart:  u' = Q̃(u, z) - u P̃(u, z),   z' = -z P̃(u, z)
//! ```
//!
//! with `P̃(u,z) = zⁿ P(1/z, u/z)` and likewise for Q̃. Equilibria on z = 0
//! are the infinite singular directions; the analogous chart with x = v/z,
//! y = 1/z covers the vertical direction. For the quartic system with
//! α > 0, μ > 0 the direction polynomials factor as `u((μ/λ)u - 1)` and
//! `v³(v - μ/λ)`, giving a simple node on the prey-axis ends, a triple node
//! on the predator-axis ends, and a simple saddle along y/x = λ/μ.

use crate::error::InfinityError;
use crate::flow::{integrate, BoundingBox};
use crate::polynomial::Poly;
use crate::vectorfield::{FieldValue, Mat2, PhasePoint, PlanarField, PolyXY, SystemParams};

use super::winding_index;

/// Direction of an infinite singular point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InfiniteDirection {
    /// Finite slope u = y/x.
    Slope(f64),
    /// The "ends" of the y-axis.
    YAxisEnds,
}

impl std::fmt::Display for InfiniteDirection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InfiniteDirection::Slope(u) => write!(f, "y/x = {u}"),
            InfiniteDirection::YAxisEnds => f.write_str("y-axis ends"),
        }
    }
}

/// Topological type of an infinite point, as an equilibrium of the chart
/// field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InfiniteKind {
    Node,
    Saddle,
    Degenerate,
}

impl InfiniteKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            InfiniteKind::Node => "node",
            InfiniteKind::Saddle => "saddle",
            InfiniteKind::Degenerate => "degenerate",
        }
    }
}

/// A classified singular point at infinity (one per antipodal pair).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfiniteEquilibrium {
    pub direction: InfiniteDirection,
    /// Root multiplicity in the direction polynomial.
    pub multiplicity: u32,
    pub kind: InfiniteKind,
    /// Winding index of the chart field around the point.
    pub index: i32,
}

/// Which compactification chart a field lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ChartKind {
    /// x = 1/z, y = u/z; coordinates (u, z).
    XDirection,
    /// x = v/z, y = 1/z; coordinates (v, z).
    YDirection,
}

/// The polynomial vector field of one compactification chart.
#[derive(Debug, Clone)]
pub struct ChartField {
    /// z^n P in chart coordinates.
    pt: PolyXY,
    /// z^n Q in chart coordinates.
    qt: PolyXY,
    pt_u: PolyXY,
    pt_z: PolyXY,
    qt_u: PolyXY,
    qt_z: PolyXY,
    kind: ChartKind,
}

impl ChartField {
    fn new(p: &PolyXY, q: &PolyXY, n: usize, kind: ChartKind) -> Self {
        let (pt, qt) = match kind {
            ChartKind::XDirection => (transform_x_chart(p, n), transform_x_chart(q, n)),
            ChartKind::YDirection => (transform_y_chart(p, n), transform_y_chart(q, n)),
        };
        let pt_u = pt.partial_x();
        let pt_z = pt.partial_y();
        let qt_u = qt.partial_x();
        let qt_z = qt.partial_y();
        Self {
            pt,
            qt,
            pt_u,
            pt_z,
            qt_u,
            qt_z,
            kind,
        }
    }

    /// The polynomial whose real roots on z = 0 are the singular
    /// directions seen by this chart.
    fn direction_polynomial(&self) -> Poly {
        // u' on the equator: Q̃(u,0) - u P̃(u,0) in the x-chart,
        // P̃(v,0) - v Q̃(v,0) in the y-chart.
        let (lead, other) = match self.kind {
            ChartKind::XDirection => (&self.qt, &self.pt),
            ChartKind::YDirection => (&self.pt, &self.qt),
        };
        let mut coeffs = vec![0.0; 6];
        for k in 0..5 {
            coeffs[k] += lead.c[k][0];
            coeffs[k + 1] -= other.c[k][0];
        }
        Poly::new(coeffs)
    }
}

impl PlanarField for ChartField {
    fn eval(&self, pt: PhasePoint) -> FieldValue {
        let (w, z) = (pt.x, pt.y);
        let pv = self.pt.eval(w, z);
        let qv = self.qt.eval(w, z);
        match self.kind {
            ChartKind::XDirection => FieldValue {
                p: qv - w * pv,
                q: -z * pv,
            },
            ChartKind::YDirection => FieldValue {
                p: pv - w * qv,
                q: -z * qv,
            },
        }
    }

    fn jacobian(&self, pt: PhasePoint) -> Mat2 {
        let (w, z) = (pt.x, pt.y);
        let pv = self.pt.eval(w, z);
        let qv = self.qt.eval(w, z);
        let (pw, pz) = (self.pt_u.eval(w, z), self.pt_z.eval(w, z));
        let (qw, qz) = (self.qt_u.eval(w, z), self.qt_z.eval(w, z));
        match self.kind {
            ChartKind::XDirection => Mat2::new(
                qw - pv - w * pw,
                qz - w * pz,
                -z * pw,
                -pv - z * pz,
            ),
            ChartKind::YDirection => Mat2::new(
                pw - qv - w * qw,
                pz - w * qz,
                -z * qw,
                -qv - z * qz,
            ),
        }
    }
}

/// `zⁿ P(1/z, u/z)` as a polynomial in (u, z).
fn transform_x_chart(p: &PolyXY, n: usize) -> PolyXY {
    let mut out = PolyXY::zero();
    for i in 0..5 {
        for j in 0..5 {
            if p.c[i][j] != 0.0 {
                out.c[j][n - i - j] += p.c[i][j];
            }
        }
    }
    out
}

/// `zⁿ P(v/z, 1/z)` as a polynomial in (v, z).
fn transform_y_chart(p: &PolyXY, n: usize) -> PolyXY {
    let mut out = PolyXY::zero();
    for i in 0..5 {
        for j in 0..5 {
            if p.c[i][j] != 0.0 {
                out.c[i][n - i - j] += p.c[i][j];
            }
        }
    }
    out
}

/// Real roots with multiplicities; the structural root at zero is read off
/// the leading zero coefficients, remaining roots are clustered.
fn roots_with_multiplicity(poly: &Poly) -> Vec<(f64, u32)> {
    let scale = poly
        .coeffs
        .iter()
        .fold(0.0f64, |a, c| a.max(c.abs()))
        .max(1e-300);
    let mut m0 = 0usize;
    while m0 < poly.coeffs.len() && poly.coeffs[m0].abs() <= 1e-12 * scale {
        m0 += 1;
    }
    let mut out = Vec::new();
    if m0 >= poly.coeffs.len() {
        return out; // identically zero: caller treats as degenerate
    }
    if m0 > 0 {
        out.push((0.0, m0 as u32));
    }
    let quotient = Poly::new(poly.coeffs[m0..].to_vec());
    let mut roots = quotient.real_roots(1e-7);
    roots.retain(|r| r.abs() > 1e-9);
    roots.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < roots.len() {
        let mut j = i + 1;
        while j < roots.len() && (roots[j] - roots[i]).abs() <= 1e-6 * (1.0 + roots[i].abs()) {
            j += 1;
        }
        let mean = roots[i..j].iter().sum::<f64>() / (j - i) as f64;
        out.push((mean, (j - i) as u32));
        i = j;
    }
    out
}

/// Classifies one infinite point in the chart best conditioned for it.
fn classify_direction(
    x_chart: &ChartField,
    y_chart: &ChartField,
    direction: InfiniteDirection,
    multiplicity: u32,
    run_capture_probe: bool,
) -> InfiniteEquilibrium {
    let (chart, w) = match direction {
        InfiniteDirection::YAxisEnds => (y_chart, 0.0),
        InfiniteDirection::Slope(u) => {
            if u.abs() <= 1.0 {
                (x_chart, u)
            } else {
                (y_chart, 1.0 / u)
            }
        }
    };
    let at = PhasePoint::new(w, 0.0);
    let j = chart.jacobian(at);
    let det = j.det();
    let scale = j.m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let det_tol = 1e-9 * (1.0 + scale * scale);

    let index = winding_index(|p| chart.eval(p), at, chart_radius(chart, at)).unwrap_or(0);

    let kind = if det < -det_tol {
        InfiniteKind::Saddle
    } else if det > det_tol {
        // The chart Jacobian on the equator is triangular with real
        // eigenvalues; det > 0 means a node.
        InfiniteKind::Node
    } else if run_capture_probe {
        match capture_probe(chart, at) {
            CaptureVerdict::Node => InfiniteKind::Node,
            CaptureVerdict::Saddle => InfiniteKind::Saddle,
            CaptureVerdict::Mixed => InfiniteKind::Degenerate,
        }
    } else if index == 1 {
        InfiniteKind::Node
    } else if index == -1 {
        InfiniteKind::Saddle
    } else {
        InfiniteKind::Degenerate
    };

    InfiniteEquilibrium {
        direction,
        multiplicity,
        kind,
        index,
    }
}

fn chart_radius(chart: &ChartField, at: PhasePoint) -> f64 {
    // Shrink below the distance to the other equator equilibria.
    let dirs = roots_with_multiplicity(&chart.direction_polynomial());
    let mut radius = 1e-3_f64;
    for (w, _) in dirs {
        let d = (w - at.x).abs();
        if d > 1e-9 {
            radius = radius.min(0.3 * d);
        }
    }
    radius.max(1e-6)
}

enum CaptureVerdict {
    Node,
    Saddle,
    Mixed,
}

/// Orbit-sampling probe around a linearly degenerate chart equilibrium: a
/// node captures the whole ring in one time direction, a saddle lets the
/// ring escape both ways.
fn capture_probe(chart: &ChartField, at: PhasePoint) -> CaptureVerdict {
    let r = 0.05_f64.min(2.0 * chart_radius(chart, at));
    let k = 16;
    let mut fwd_escaped = 0;
    let mut bwd_escaped = 0;
    let bbox = BoundingBox::new(at.x - 2.0 * r, at.x + 2.0 * r, at.y - 2.0 * r, at.y + 2.0 * r);
    let reversed = crate::fixtures::TimeReversed(chart.clone());
    for i in 0..k {
        let theta = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / k as f64;
        let start = PhasePoint::new(at.x + r * theta.cos(), at.y + r * theta.sin());
        let t_budget = 2e5;
        if let Ok(orbit) = integrate(chart, start, t_budget, bbox, None) {
            if orbit.outcome == crate::flow::OrbitOutcome::EscapedBox {
                fwd_escaped += 1;
            }
        }
        if let Ok(orbit) = integrate(&reversed, start, t_budget, bbox, None) {
            if orbit.outcome == crate::flow::OrbitOutcome::EscapedBox {
                bwd_escaped += 1;
            }
        }
    }
    let all = k;
    if (fwd_escaped >= all - 1 && bwd_escaped <= 1) || (bwd_escaped >= all - 1 && fwd_escaped <= 1)
    {
        CaptureVerdict::Node
    } else if fwd_escaped >= all - 2 && bwd_escaped >= all - 2 {
        CaptureVerdict::Saddle
    } else {
        CaptureVerdict::Mixed
    }
}

/// Generic enumeration of the infinite singular points from the
/// compactification charts, one entry per projective direction, each with
/// a numerically computed winding index. Works for any admissible
/// parameters (including α = 0 or μ = 0, where the quartic three-point
/// structure degenerates).
pub fn infinite_chart_points(
    params: &SystemParams,
) -> Result<Vec<InfiniteEquilibrium>, InfinityError> {
    infinite_chart_points_with(params, false)
}

fn infinite_chart_points_with(
    params: &SystemParams,
    run_capture_probe: bool,
) -> Result<Vec<InfiniteEquilibrium>, InfinityError> {
    let base = params.unrotated();
    let pc = base.p_coefficients();
    let qc = base.q_coefficients();
    let n = pc.total_degree().max(qc.total_degree());
    if n == 0 {
        return Err(InfinityError::DegenerateAtInfinity {
            reason: "field has no polynomial part".into(),
        });
    }
    let x_chart = ChartField::new(&pc, &qc, n, ChartKind::XDirection);
    let y_chart = ChartField::new(&pc, &qc, n, ChartKind::YDirection);

    let u_poly = x_chart.direction_polynomial();
    if u_poly.coeffs.iter().all(|c| c.abs() <= 1e-14) {
        return Err(InfinityError::DegenerateAtInfinity {
            reason: "direction polynomial vanishes identically; equator is not isolated".into(),
        });
    }
    let mut out = Vec::new();
    for (u, m) in roots_with_multiplicity(&u_poly) {
        out.push(classify_direction(
            &x_chart,
            &y_chart,
            InfiniteDirection::Slope(u),
            m,
            run_capture_probe,
        ));
    }
    // The vertical direction is singular iff v = 0 is a root in the y-chart.
    let v_poly = y_chart.direction_polynomial();
    if let Some((_, m)) = roots_with_multiplicity(&v_poly)
        .into_iter()
        .find(|(v, _)| v.abs() <= 1e-9)
    {
        out.push(classify_direction(
            &x_chart,
            &y_chart,
            InfiniteDirection::YAxisEnds,
            m,
            run_capture_probe,
        ));
    }
    out.sort_by(|a, b| direction_order(a).total_cmp(&direction_order(b)));
    Ok(out)
}

fn direction_order(e: &InfiniteEquilibrium) -> f64 {
    match e.direction {
        InfiniteDirection::Slope(u) => u,
        InfiniteDirection::YAxisEnds => f64::INFINITY,
    }
}

/// The three singular points at infinity of the quartic system: roots of
/// `u((μ/λ)u - 1)` and `v³(v - μ/λ)`, deduplicated across charts (the
/// slope λ/μ and v = μ/λ name the same projective point), with kinds
/// verified by chart linearization and an orbit-capture probe rather than
/// asserted.
pub fn find_infinite(
    params: &SystemParams,
) -> Result<Vec<InfiniteEquilibrium>, InfinityError> {
    if params.mu() == 0.0 {
        return Err(InfinityError::DegenerateAtInfinity {
            reason: format!(
                "mu = 0 sends the saddle direction lambda/mu to the y-axis ends; \
                 merged structure: {}",
                describe_merged(params)
            ),
        });
    }
    if params.alpha() == 0.0 {
        return Err(InfinityError::DegenerateAtInfinity {
            reason: format!(
                "alpha = 0 drops the system degree below four; \
                 merged structure: {}",
                describe_merged(params)
            ),
        });
    }
    let points = infinite_chart_points_with(params, true)?;
    // Cross-check cardinality and the expected directions against the
    // factored forms; disagreement is reported, not patched.
    let saddle_slope = params.lambda() / params.mu();
    let expected: [(InfiniteDirection, u32); 3] = [
        (InfiniteDirection::Slope(0.0), 1),
        (InfiniteDirection::Slope(saddle_slope), 1),
        (InfiniteDirection::YAxisEnds, 3),
    ];
    for (dir, mult) in expected {
        let found = points.iter().any(|p| {
            p.multiplicity == mult
                && match (p.direction, dir) {
                    (InfiniteDirection::YAxisEnds, InfiniteDirection::YAxisEnds) => true,
                    (InfiniteDirection::Slope(a), InfiniteDirection::Slope(b)) => {
                        (a - b).abs() <= 1e-6 * (1.0 + b.abs())
                    }
                    _ => false,
                }
        });
        if !found {
            return Err(InfinityError::DegenerateAtInfinity {
                reason: format!(
                    "chart computation disagrees with the factored direction {dir} \
                     (multiplicity {mult}); found {points:?}"
                ),
            });
        }
    }
    Ok(points)
}

fn describe_merged(params: &SystemParams) -> String {
    match infinite_chart_points(params) {
        Ok(points) => points
            .iter()
            .map(|p| {
                format!(
                    "{} (multiplicity {}, {})",
                    p.direction,
                    p.multiplicity,
                    p.kind.as_str()
                )
            })
            .collect::<Vec<_>>()
            .join("; "),
        Err(e) => format!("unresolvable: {e}"),
    }
}
