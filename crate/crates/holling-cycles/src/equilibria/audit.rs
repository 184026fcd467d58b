//! Index-theorem audits.
//!
//! The count identity audited here is
//!
//! ```text
//! N + N_f + N_c + N' = C + C' + 1
//! ```
//!
//! with N, N_f, N_c, C the finite nodes, foci, centers, and saddles and
//! N', C' the nodes and saddles at infinity, each antipodal pair counted
//! once. The audit computes every index numerically (winding numbers in the
//! plane and in the compactification charts), so it also reports the
//! underlying index-sum form Σ_finite + Σ_infinite = 1, which remains valid
//! when points at infinity are degenerate and carry index 0.
//!
//! The alternation audit traces one smooth isocline of the pencil
//! Q = cP through the located singular points and checks that consecutive
//! points along the curve alternate between saddles and anti-saddles.

use crate::error::AuditError;
use crate::vectorfield::{PhasePoint, PlanarField, SystemParams};

use super::{
    find_finite, infinite_chart_points, interior_structure_check, Equilibrium, EquilibriumKind,
    InfiniteEquilibrium,
};

/// Outcome of the isocline alternation check.
#[derive(Debug, Clone)]
pub struct AlternationReport {
    /// The isocline slope c in Q = cP.
    pub slope: f64,
    /// Adjacent singular-point pairs connected by an in-box trace.
    pub checked_adjacencies: usize,
    pub violations: usize,
    /// Pairs whose connecting branch left the box (the equator rule of the
    /// second index theorem applies there; they are not checked).
    pub escaped_branches: usize,
    pub pass: bool,
}

/// Full audit outcome.
#[derive(Debug, Clone)]
pub struct IndexTheoremAudit {
    pub finite: Vec<Equilibrium>,
    pub infinite: Vec<InfiniteEquilibrium>,
    /// (N, N_f, N_c, C)
    pub finite_counts: (usize, usize, usize, usize),
    /// (N', C', degenerate-at-infinity)
    pub infinite_counts: (usize, usize, usize),
    /// N + N_f + N_c + N'
    pub lhs: i64,
    /// C + C' + 1
    pub rhs: i64,
    /// Exact integer equality of the count identity.
    pub identity_holds: bool,
    /// Σ indices, finite plus infinite (expected: exactly 1).
    pub index_sum: i64,
    pub index_sum_holds: bool,
    pub alternation: AlternationReport,
    /// Violation note from the first-quadrant structure check, if any.
    pub interior_structure_violation: Option<String>,
}

/// Runs the audit on freshly located singular points.
///
/// Fails with `Inconclusive` when any finite point is degenerate (the count
/// identity presumes simple finite points).
pub fn audit_index_theorems(params: &SystemParams) -> Result<IndexTheoremAudit, AuditError> {
    let finite = find_finite(params);
    let infinite = infinite_chart_points(params).map_err(|e| AuditError::Inconclusive {
        reason: format!("points at infinity unresolved: {e}"),
    })?;
    audit_with_points(params, finite, infinite)
}

/// Audit core over an explicit list of points; exposed so tests can mutate
/// the lists and watch the identity fail.
pub fn audit_with_points(
    params: &SystemParams,
    finite: Vec<Equilibrium>,
    infinite: Vec<InfiniteEquilibrium>,
) -> Result<IndexTheoremAudit, AuditError> {
    for eq in &finite {
        if eq.kind.is_degenerate() {
            return Err(AuditError::Inconclusive {
                reason: format!(
                    "degenerate finite point at ({}, {})",
                    eq.location.x, eq.location.y
                ),
            });
        }
    }

    let mut n = 0usize;
    let mut nf = 0usize;
    let mut nc = 0usize;
    let mut c = 0usize;
    for eq in &finite {
        match eq.kind {
            EquilibriumKind::Node => n += 1,
            EquilibriumKind::Focus => nf += 1,
            EquilibriumKind::CenterCandidate => nc += 1,
            EquilibriumKind::Saddle => c += 1,
            _ => unreachable!("degenerate points rejected above"),
        }
    }
    let mut n_inf = 0usize;
    let mut c_inf = 0usize;
    let mut d_inf = 0usize;
    for e in &infinite {
        match e.index {
            1 => n_inf += 1,
            -1 => c_inf += 1,
            _ => d_inf += 1,
        }
    }

    let lhs = (n + nf + nc + n_inf) as i64;
    let rhs = (c + c_inf + 1) as i64;
    let index_sum: i64 = finite.iter().map(|e| e.index as i64).sum::<i64>()
        + infinite.iter().map(|e| e.index as i64).sum::<i64>();

    let alternation = alternation_check(params, &finite);
    let interior_structure_violation = interior_structure_check(params, &finite).err();

    Ok(IndexTheoremAudit {
        finite_counts: (n, nf, nc, c),
        infinite_counts: (n_inf, c_inf, d_inf),
        lhs,
        rhs,
        identity_holds: lhs == rhs,
        index_sum,
        index_sum_holds: index_sum == 1,
        alternation,
        interior_structure_violation,
        finite,
        infinite,
    })
}

/// Traces the isocline Q = cP through the singular points and checks the
/// saddle/anti-saddle alternation of consecutive points.
fn alternation_check(params: &SystemParams, finite: &[Equilibrium]) -> AlternationReport {
    let base = params.unrotated();
    // Slope candidates; pick the first whose level-set gradient is healthy
    // at every singular point.
    let candidates = [0.618_033_988_75, -0.754_877_666_2, 1.839_286_755_2, -0.337_641_1];
    let mut slope = candidates[0];
    'outer: for cand in candidates {
        for eq in finite {
            let g = isocline_gradient(&base, cand, eq.location);
            let jac = base.jacobian(eq.location);
            let scale = jac.m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
            if g.0.hypot(g.1) <= 1e-6 * (1.0 + scale) {
                continue 'outer;
            }
        }
        slope = cand;
        break;
    }

    let mut checked = 0usize;
    let mut violations = 0usize;
    let mut escaped = 0usize;
    let mut seen: Vec<(usize, usize)> = Vec::new();

    for i in 0..finite.len() {
        for dir in [1.0, -1.0] {
            match trace_isocline(&base, slope, finite, i, dir) {
                TraceOutcome::ReachedPoint(j) => {
                    let key = (i.min(j), i.max(j));
                    if i != j && !seen.contains(&key) {
                        seen.push(key);
                        checked += 1;
                        if finite[i].index == finite[j].index {
                            violations += 1;
                        }
                    }
                }
                TraceOutcome::LeftBox => escaped += 1,
                TraceOutcome::Stalled => {}
            }
        }
    }

    AlternationReport {
        slope,
        checked_adjacencies: checked,
        violations,
        escaped_branches: escaped,
        pass: violations == 0,
    }
}

fn isocline_value(params: &SystemParams, c: f64, pt: PhasePoint) -> f64 {
    let f = params.eval(pt);
    f.q - c * f.p
}

fn isocline_gradient(params: &SystemParams, c: f64, pt: PhasePoint) -> (f64, f64) {
    let j = params.jacobian(pt);
    (j.m[1][0] - c * j.m[0][0], j.m[1][1] - c * j.m[0][1])
}

enum TraceOutcome {
    ReachedPoint(usize),
    LeftBox,
    Stalled,
}

/// Predictor-corrector trace of the isocline branch leaving singular point
/// `start` in tangent direction `dir`, until another singular point, the
/// box edge, or the step budget.
fn trace_isocline(
    params: &SystemParams,
    c: f64,
    finite: &[Equilibrium],
    start: usize,
    dir: f64,
) -> TraceOutcome {
    let p0 = finite[start].location;
    let scale = 1.0 + p0.x.hypot(p0.y);
    let mut h = 5e-3 * scale;
    let box_r = 60.0;
    let snap = 1e-4;

    let g0 = isocline_gradient(params, c, p0);
    let norm0 = g0.0.hypot(g0.1);
    if norm0 <= 1e-12 {
        return TraceOutcome::Stalled;
    }
    let mut tangent = (dir * -g0.1 / norm0, dir * g0.0 / norm0);
    let mut p = PhasePoint::new(p0.x + h * tangent.0, p0.y + h * tangent.1);
    if !correct_onto_isocline(params, c, &mut p) {
        return TraceOutcome::Stalled;
    }

    for _ in 0..60_000 {
        // Arrived at a singular point?
        for (j, eq) in finite.iter().enumerate() {
            if j != start || p.distance(p0) > 10.0 * h {
                if p.distance(eq.location) < snap * (1.0 + eq.location.x.hypot(eq.location.y)) {
                    return TraceOutcome::ReachedPoint(j);
                }
            }
        }
        if p.x.abs() > box_r || p.y.abs() > box_r {
            return TraceOutcome::LeftBox;
        }
        let g = isocline_gradient(params, c, p);
        let norm = g.0.hypot(g.1);
        if norm <= 1e-12 {
            return TraceOutcome::Stalled;
        }
        let mut t = (-g.1 / norm, g.0 / norm);
        // Keep the marching direction consistent.
        if t.0 * tangent.0 + t.1 * tangent.1 < 0.0 {
            t = (-t.0, -t.1);
        }
        tangent = t;
        // Smaller steps near singular points for a clean arrival.
        let nearest = finite
            .iter()
            .map(|eq| p.distance(eq.location))
            .fold(f64::INFINITY, f64::min);
        h = (5e-3 * scale).min(0.2 * nearest + 1e-6);
        let mut next = PhasePoint::new(p.x + h * tangent.0, p.y + h * tangent.1);
        if !correct_onto_isocline(params, c, &mut next) {
            return TraceOutcome::Stalled;
        }
        p = next;
    }
    TraceOutcome::Stalled
}

/// Newton projection onto the level set along its gradient.
fn correct_onto_isocline(params: &SystemParams, c: f64, p: &mut PhasePoint) -> bool {
    for _ in 0..12 {
        let v = isocline_value(params, c, *p);
        let g = isocline_gradient(params, c, *p);
        let n2 = g.0 * g.0 + g.1 * g.1;
        if n2 <= 1e-300 {
            return false;
        }
        let step = v / n2;
        p.x -= step * g.0;
        p.y -= step * g.1;
        if (step * g.0).hypot(step * g.1) <= 1e-13 * (1.0 + p.x.hypot(p.y)) {
            return true;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64, beta: f64, delta: f64, lambda: f64, mu: f64) -> SystemParams {
        SystemParams::new(alpha, beta, delta, lambda, mu).unwrap()
    }

    #[test]
    fn identity_holds_for_reduced_cubic_example() {
        let p = params(0.0, 0.0, 0.25, 1.0, 0.0);
        let audit = audit_index_theorems(&p).unwrap();
        assert!(audit.identity_holds, "{audit:?}");
        assert!(audit.index_sum_holds, "{audit:?}");
        // First-quadrant portrait: saddle (0,0), saddle (1,0), anti-saddle
        // (0.5, 1); the full plane adds the mirror anti-saddle at
        // (-0.5, -3), and infinity completes the identity.
        assert_eq!(audit.finite_counts.3, 2);
        let named = [(0.0, 0.0), (1.0, 0.0), (0.5, 1.0)];
        for (x, y) in named {
            assert!(
                audit
                    .finite
                    .iter()
                    .any(|e| e.location.distance(PhasePoint::new(x, y)) < 1e-9),
                "missing ({x}, {y})"
            );
        }
    }

    #[test]
    fn identity_holds_for_generic_quartic() {
        let p = params(1.0, 1.0, 1.0, 1.0, 1.0);
        let audit = audit_index_theorems(&p).unwrap();
        assert!(audit.identity_holds, "{audit:?}");
        assert!(audit.index_sum_holds, "{audit:?}");
    }

    #[test]
    fn dropping_a_point_breaks_the_audit() {
        let p = params(1.0, 1.0, 1.0, 1.0, 1.0);
        let finite = find_finite(&p);
        let infinite = infinite_chart_points(&p).unwrap();
        let full = audit_with_points(&p, finite.clone(), infinite.clone()).unwrap();
        assert!(full.identity_holds);
        let mut mutated = finite;
        // Drop an anti-saddle; both forms of the identity must now fail.
        let pos = mutated
            .iter()
            .position(|e| e.is_anti_saddle())
            .expect("anti-saddle present");
        mutated.remove(pos);
        let broken = audit_with_points(&p, mutated, infinite).unwrap();
        assert!(!broken.identity_holds);
        assert!(!broken.index_sum_holds);
    }

    #[test]
    fn alternation_holds_on_generic_draws() {
        for p in [
            params(1.0, 1.0, 1.0, 1.0, 1.0),
            params(0.0, 0.0, 0.25, 1.0, 0.0),
            params(1.0, -3.0, 1.0, 1.0, 1.0),
        ] {
            let audit = audit_index_theorems(&p);
            if let Ok(audit) = audit {
                assert!(
                    audit.alternation.pass,
                    "alternation violated: {:?} for {p:?}",
                    audit.alternation
                );
            }
        }
    }

    #[test]
    fn degenerate_finite_point_is_inconclusive() {
        // Tune beta so the capacity point becomes a saddle-node: with
        // A(1/λ) = 0 the prey eigenvalue vanishes. λ = 1, α = 1 gives
        // β = -2 (double response root at x = 1).
        let p = params(1.0, -2.0, 1.0, 1.0, 1.0);
        match audit_index_theorems(&p) {
            Err(AuditError::Inconclusive { .. }) => {}
            other => panic!("expected inconclusive audit, got {other:?}"),
        }
    }
}
