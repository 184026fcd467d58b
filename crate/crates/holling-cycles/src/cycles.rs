//! Limit cycles as zeros of the displacement function.
//!
//! The displacement along a section is `d(s) = h(s) - s` with `h` the
//! first-return map. Cycles are its roots; the derivative `d_s` at a root
//! comes from the divergence integral
//!
//! ```text
//! d_s = exp(∫₀ᵀ ∇·f dt) - 1
//! ```
//!
//! and the parameter derivative from the wedge-product quadrature
//!
//! ```text
//! d_μ = -(1 / f(p₀)·n̂) · exp(∫₀ᵀ ∇·f) · ∫₀ᵀ exp(-∫₀ᵗ ∇·f) (f ∧ f_μ) dt
//! ```
//!
//! where n̂ is the section normal, so the prefactor reduces to `-ω₀/‖f(p₀)‖`
//! on a section normal to the cycle with s increasing along the outward
//! side of a positively oriented orbit. The two exponentials combine into
//! `exp(∫ᵗᵀ ∇·f dτ)`; on a multiple cycle the outer factor is exactly 1
//! and the quadrature reduces to the classical fold form. Both derivatives
//! are cross-checked against finite differences in the tests.

use crate::error::{CycleError, FlowError};
use crate::flow::{
    integrate_with, return_event, BoundingBox, IntegrationOptions, OdeSystem, Section, Tolerances,
};
use crate::vectorfield::{ParamName, PhasePoint, PlanarField, SystemParams};

/// Attraction behaviour of a located cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
    Semistable,
    Undetermined,
}

impl Stability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Semistable => "semistable",
            Stability::Undetermined => "undetermined",
        }
    }
}

/// A located closed orbit.
#[derive(Debug, Clone)]
pub struct LimitCycle {
    pub section: Section,
    /// Section coordinate of the cycle (root of the displacement).
    pub s_star: f64,
    pub period: f64,
    /// Dense samples of one revolution, closed to within 1e-8.
    pub orbit_samples: Vec<PhasePoint>,
    pub stability: Stability,
    /// h'(s*) - 1 from the divergence quadrature.
    pub d_s_value: f64,
    pub multiplicity_estimate: u32,
    /// +1 counterclockwise, -1 clockwise.
    pub orientation: i32,
}

impl LimitCycle {
    /// Anchor point of the cycle on its section.
    pub fn anchor_point(&self) -> PhasePoint {
        self.section.point_at(self.s_star)
    }

    /// Largest distance of the orbit from a reference point.
    pub fn max_distance_from(&self, pt: PhasePoint) -> f64 {
        self.orbit_samples
            .iter()
            .map(|p| p.distance(pt))
            .fold(0.0, f64::max)
    }

    /// Smallest distance of the orbit from a reference point.
    pub fn min_distance_from(&self, pt: PhasePoint) -> f64 {
        self.orbit_samples
            .iter()
            .map(|p| p.distance(pt))
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether the closed orbit polygon winds around `pt`.
    pub fn encloses(&self, pt: PhasePoint) -> bool {
        if self.orbit_samples.len() < 3 {
            return false;
        }
        let mut winding = 0.0;
        for w in self.orbit_samples.windows(2) {
            let a = (w[0].x - pt.x, w[0].y - pt.y);
            let b = (w[1].x - pt.x, w[1].y - pt.y);
            let cross = a.0 * b.1 - a.1 * b.0;
            let dot = a.0 * b.0 + a.1 * b.1;
            winding += cross.atan2(dot);
        }
        (winding / (2.0 * std::f64::consts::PI)).abs() > 0.5
    }

    /// Whether `other` lies strictly inside this cycle (enclosure of a
    /// spread of its samples).
    pub fn encloses_cycle(&self, other: &LimitCycle) -> bool {
        let step = (other.orbit_samples.len() / 24).max(1);
        other
            .orbit_samples
            .iter()
            .step_by(step)
            .all(|p| self.encloses(*p))
    }
}

/// Controls for displacement scans and cycle refinement.
#[derive(Debug, Clone, Copy)]
pub struct CycleScanOptions {
    pub max_period: f64,
    pub bbox: BoundingBox,
    /// Displacement magnitude accepted as a root.
    pub root_tol: f64,
    /// |d| below which a non-sign-changing local minimum is treated as a
    /// tangential root candidate.
    pub tangential_threshold: f64,
    /// Estimated absolute noise of one displacement evaluation.
    pub return_map_error: f64,
    pub tol: Tolerances,
}

impl Default for CycleScanOptions {
    fn default() -> Self {
        Self {
            max_period: 400.0,
            bbox: BoundingBox::first_quadrant(),
            root_tol: 1e-9,
            tangential_threshold: 1e-7,
            return_map_error: 1e-9,
            tol: Tolerances::default(),
        }
    }
}

/// `d(s) = h(s) - s`; propagates `NoReturn` when the orbit never comes
/// back to the section.
pub fn displacement<F: PlanarField>(
    field: &F,
    section: &Section,
    s: f64,
    opts: &CycleScanOptions,
) -> Result<f64, FlowError> {
    let (h, _) = return_event(field, section, s, opts.max_period, opts.bbox)?;
    Ok(h - s)
}

/// Sampled displacement data along a section.
#[derive(Debug, Clone)]
pub struct DisplacementProfile {
    pub section: Section,
    /// (s, d(s)) at scan points where the return map is defined.
    pub samples: Vec<(f64, f64)>,
    /// Central finite differences of d over adjacent defined samples.
    pub derivative_samples: Vec<(f64, f64)>,
}

/// Scans the displacement over `s_range` at `n_scan + 1` uniform points.
pub fn displacement_profile<F: PlanarField>(
    field: &F,
    section: &Section,
    s_range: (f64, f64),
    n_scan: usize,
    opts: &CycleScanOptions,
) -> DisplacementProfile {
    let raw = scan(field, section, s_range, n_scan, opts);
    let samples: Vec<(f64, f64)> = raw
        .iter()
        .filter_map(|(s, d)| d.map(|v| (*s, v)))
        .collect();
    let mut derivative_samples = Vec::new();
    for k in 1..samples.len().saturating_sub(1) {
        let (s0, d0) = samples[k - 1];
        let (s1, _) = samples[k];
        let (s2, d2) = samples[k + 1];
        if s2 > s0 {
            derivative_samples.push((s1, (d2 - d0) / (s2 - s0)));
        }
    }
    DisplacementProfile {
        section: *section,
        samples,
        derivative_samples,
    }
}

fn scan<F: PlanarField>(
    field: &F,
    section: &Section,
    s_range: (f64, f64),
    n_scan: usize,
    opts: &CycleScanOptions,
) -> Vec<(f64, Option<f64>)> {
    let n = n_scan.max(2);
    (0..=n)
        .map(|k| {
            let s = s_range.0 + (s_range.1 - s_range.0) * k as f64 / n as f64;
            (s, displacement(field, section, s, opts).ok())
        })
        .collect()
}

/// Locates limit cycles crossing the section with `s` in `s_range`.
///
/// Sign changes of d over the scan are bracketed and refined; local minima
/// of |d| below the tangential threshold are polished by golden-section
/// search and accepted when they reach the root tolerance (semistable
/// cycles touch zero without crossing). Returns cycles sorted by `s_star`.
pub fn locate_cycles<F: PlanarField>(
    field: &F,
    section: &Section,
    s_range: (f64, f64),
    n_scan: usize,
    opts: &CycleScanOptions,
) -> Vec<LimitCycle> {
    let samples = scan(field, section, s_range, n_scan, opts);
    let mut roots: Vec<f64> = Vec::new();

    for w in samples.windows(2) {
        if let ((s0, Some(d0)), (s1, Some(d1))) = (w[0], w[1]) {
            if d0 == 0.0 {
                roots.push(s0);
            } else if d0 * d1 < 0.0 {
                if let Some(root) = refine_sign_change(field, section, (s0, d0), (s1, d1), opts) {
                    roots.push(root);
                }
            }
        }
    }
    if let Some((s_end, Some(d_end))) = samples.last() {
        if *d_end == 0.0 {
            roots.push(*s_end);
        }
    }

    // Tangential candidates: interior local minima of |d| below the
    // threshold without a sign change.
    for k in 1..samples.len().saturating_sub(1) {
        if let ((_, Some(d0)), (_, Some(d1)), (_, Some(d2))) =
            (samples[k - 1], samples[k], samples[k + 1])
        {
            let same_sign = d0.signum() == d1.signum() && d1.signum() == d2.signum();
            if same_sign
                && d1 != 0.0
                && d1.abs() < opts.tangential_threshold
                && d1.abs() <= d0.abs()
                && d1.abs() <= d2.abs()
            {
                if let Some(root) =
                    refine_tangential(field, section, (samples[k - 1].0, samples[k + 1].0), opts)
                {
                    roots.push(root);
                }
            }
        }
    }

    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-7 * (1.0 + b.abs()));

    roots
        .into_iter()
        .filter_map(|s| build_cycle(field, section, s, opts).ok())
        .collect()
}

fn refine_sign_change<F: PlanarField>(
    field: &F,
    section: &Section,
    lo: (f64, f64),
    hi: (f64, f64),
    opts: &CycleScanOptions,
) -> Option<f64> {
    let (mut s_lo, mut d_lo) = lo;
    let (mut s_hi, mut d_hi) = hi;
    let mut best = if d_lo.abs() < d_hi.abs() {
        (s_lo, d_lo)
    } else {
        (s_hi, d_hi)
    };
    for _ in 0..80 {
        if best.1.abs() <= opts.root_tol {
            return Some(best.0);
        }
        if (s_hi - s_lo).abs() <= 1e-14 * (1.0 + s_lo.abs()) {
            break;
        }
        // Secant proposal clipped into the bracket; bisection fallback.
        let mid = {
            let sec = s_lo - d_lo * (s_hi - s_lo) / (d_hi - d_lo);
            let margin = 0.01 * (s_hi - s_lo);
            if sec > s_lo + margin && sec < s_hi - margin {
                sec
            } else {
                0.5 * (s_lo + s_hi)
            }
        };
        let d_mid = displacement(field, section, mid, opts).ok()?;
        if d_mid.abs() < best.1.abs() {
            best = (mid, d_mid);
        }
        if d_mid == 0.0 {
            return Some(mid);
        }
        if d_lo * d_mid < 0.0 {
            s_hi = mid;
            d_hi = d_mid;
        } else {
            s_lo = mid;
            d_lo = d_mid;
        }
    }
    (best.1.abs() <= opts.root_tol.max(10.0 * opts.return_map_error)).then_some(best.0)
}

fn refine_tangential<F: PlanarField>(
    field: &F,
    section: &Section,
    bracket: (f64, f64),
    opts: &CycleScanOptions,
) -> Option<f64> {
    // Golden-section minimization of |d|.
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let (mut a, mut b) = bracket;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = displacement(field, section, c, opts).ok()?.abs();
    let mut fd = displacement(field, section, d, opts).ok()?.abs();
    for _ in 0..60 {
        if (b - a).abs() < 1e-12 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = displacement(field, section, c, opts).ok()?.abs();
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = displacement(field, section, d, opts).ok()?.abs();
        }
    }
    let s = 0.5 * (a + b);
    let val = displacement(field, section, s, opts).ok()?.abs();
    // A tangential root must actually reach the noise floor.
    (val <= opts.root_tol.max(10.0 * opts.return_map_error)).then_some(s)
}

/// Builds the full cycle record at a displacement root.
pub fn build_cycle<F: PlanarField>(
    field: &F,
    section: &Section,
    s_star: f64,
    opts: &CycleScanOptions,
) -> Result<LimitCycle, CycleError> {
    let (h, period) = return_event(field, section, s_star, opts.max_period, opts.bbox)?;
    let closure = (h - s_star).abs();
    if closure > 1e-6 {
        return Err(CycleError::QuadratureFailure {
            reason: format!("orbit does not close: |d| = {closure:.3e} at s = {s_star}"),
        });
    }

    // Dense revolution for the orbit record.
    let start = section.point_at(s_star);
    let mut int_opts = IntegrationOptions::new(period, opts.bbox);
    int_opts.store_samples = true;
    int_opts.tol = opts.tol;
    let orbit = integrate_with(field, start, &int_opts).map_err(CycleError::Flow)?;
    let mut orbit_samples: Vec<PhasePoint> = orbit.samples.iter().map(|(_, p)| *p).collect();
    if let Some(last) = orbit_samples.last() {
        if last.distance(start) > 1e-8 {
            // Close the polygon at the section return point.
            orbit_samples.push(section.point_at(h));
        }
    }

    let orientation = if signed_area(&orbit_samples) >= 0.0 { 1 } else { -1 };

    let mut cycle = LimitCycle {
        section: *section,
        s_star,
        period,
        orbit_samples,
        stability: Stability::Undetermined,
        d_s_value: 0.0,
        multiplicity_estimate: 1,
        orientation,
    };

    cycle.d_s_value = d_s_via_divergence(field, &cycle)?;
    cycle.stability = classify_stability(field, section, s_star, cycle.d_s_value, opts);
    cycle.multiplicity_estimate = match estimate_multiplicity(field, &cycle, opts) {
        Ok(m) => m.value,
        Err(_) => 1,
    };
    Ok(cycle)
}

fn signed_area(samples: &[PhasePoint]) -> f64 {
    let mut acc = 0.0;
    for w in samples.windows(2) {
        acc += w[0].x * w[1].y - w[1].x * w[0].y;
    }
    if let (Some(first), Some(last)) = (samples.first(), samples.last()) {
        acc += last.x * first.y - first.x * last.y;
    }
    0.5 * acc
}

fn classify_stability<F: PlanarField>(
    field: &F,
    section: &Section,
    s_star: f64,
    d_s: f64,
    opts: &CycleScanOptions,
) -> Stability {
    let semistable_tol = 1e-5;
    if d_s < -semistable_tol {
        return Stability::Stable;
    }
    if d_s > semistable_tol {
        return Stability::Unstable;
    }
    // d_s numerically zero: probe the displacement sign on both sides.
    let h = 1e-3 * (1.0 + s_star.abs());
    let d_out = displacement(field, section, s_star + h, opts);
    let d_in = displacement(field, section, s_star - h, opts);
    match (d_in, d_out) {
        (Ok(di), Ok(d_o)) => {
            if di == 0.0 || d_o == 0.0 {
                Stability::Undetermined
            } else if di.signum() == d_o.signum() {
                Stability::Semistable
            } else if d_o < 0.0 {
                Stability::Stable
            } else {
                Stability::Unstable
            }
        }
        _ => Stability::Undetermined,
    }
}

struct DivergenceAugmented<'a, F> {
    field: &'a F,
}

impl<F: PlanarField> OdeSystem<3> for DivergenceAugmented<'_, F> {
    fn rhs(&self, _t: f64, y: &[f64; 3], out: &mut [f64; 3]) {
        let pt = PhasePoint::new(y[0], y[1]);
        let f = self.field.eval(pt);
        out[0] = f.p;
        out[1] = f.q;
        out[2] = self.field.divergence(pt);
    }
}

/// `d_s = exp(∫₀ᵀ ∇·f dt) - 1` along the periodic orbit, via an augmented
/// state integrated with the same adaptive scheme.
pub fn d_s_via_divergence<F: PlanarField>(
    field: &F,
    cycle: &LimitCycle,
) -> Result<f64, CycleError> {
    let start = cycle.anchor_point();
    let sys = DivergenceAugmented { field };
    let y_end = crate::flow::propagate(
        &sys,
        [start.x, start.y, 0.0],
        cycle.period,
        &Tolerances::default(),
    )
    .map_err(|e| CycleError::QuadratureFailure {
        reason: format!("divergence quadrature: {e}"),
    })?;
    Ok(y_end[2].exp() - 1.0)
}

struct WedgeAugmented<'a, F, G> {
    field: &'a F,
    param_derivative: G,
}

impl<F: PlanarField, G: Fn(PhasePoint) -> crate::vectorfield::FieldValue> OdeSystem<4>
    for WedgeAugmented<'_, F, G>
{
    fn rhs(&self, _t: f64, y: &[f64; 4], out: &mut [f64; 4]) {
        let pt = PhasePoint::new(y[0], y[1]);
        let f = self.field.eval(pt);
        let fmu = (self.param_derivative)(pt);
        out[0] = f.p;
        out[1] = f.q;
        out[2] = self.field.divergence(pt);
        out[3] = (-y[2]).exp() * f.wedge(fmu);
    }
}

/// Parameter derivative of the displacement at the cycle via the
/// wedge-product quadrature, generic over the derivative field `f_μ`.
pub fn d_mu_via_wedge_with<F, G>(
    field: &F,
    param_derivative: G,
    cycle: &LimitCycle,
) -> Result<f64, CycleError>
where
    F: PlanarField,
    G: Fn(PhasePoint) -> crate::vectorfield::FieldValue,
{
    let start = cycle.anchor_point();
    let f0 = field.eval(start);
    let n = cycle.section.normal();
    let transversal = f0.p * n.0 + f0.q * n.1;
    if transversal.abs() < 1e-12 {
        return Err(CycleError::BadSection {
            reason: "cycle is tangent to its section at the anchor".into(),
        });
    }
    let sys = WedgeAugmented {
        field,
        param_derivative,
    };
    let y_end = crate::flow::propagate(
        &sys,
        [start.x, start.y, 0.0, 0.0],
        cycle.period,
        &Tolerances::default(),
    )
    .map_err(|e| CycleError::QuadratureFailure {
        reason: format!("wedge quadrature: {e}"),
    })?;
    // exp(w(T)) turns the inner integral from [0,t] into [t,T]; it equals
    // 1 + d_s and is exactly 1 on a multiple cycle.
    Ok(-y_end[2].exp() * y_end[3] / transversal)
}

/// Displacement derivative with respect to one model parameter.
pub fn d_mu_via_wedge(
    params: &SystemParams,
    cycle: &LimitCycle,
    which: ParamName,
) -> Result<f64, CycleError> {
    d_mu_via_wedge_with(params, |pt| params.param_derivative(which, pt), cycle)
}

/// Multiplicity estimate together with the cap flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultiplicityEstimate {
    pub value: u32,
    /// Set when the estimate hit the cap: the true multiplicity is >= 3.
    pub at_cap: bool,
}

/// Estimates the cycle multiplicity from a 7-point displacement stencil.
pub fn estimate_multiplicity<F: PlanarField>(
    field: &F,
    cycle: &LimitCycle,
    opts: &CycleScanOptions,
) -> Result<MultiplicityEstimate, CycleError> {
    let section = cycle.section;
    let d = |s: f64| displacement(field, &section, s, opts).ok();
    estimate_multiplicity_from(d, cycle.s_star, opts.return_map_error)
}

/// Core stencil analysis over an arbitrary displacement closure.
///
/// Fits the interpolating polynomial through 7 symmetric samples in scaled
/// coordinates and reports the lowest-order coefficient that rises above
/// the noise it would carry; capped at 3.
pub fn estimate_multiplicity_from(
    mut d: impl FnMut(f64) -> Option<f64>,
    s_star: f64,
    noise_floor: f64,
) -> Result<MultiplicityEstimate, CycleError> {
    let noise = noise_floor.max(1e-15);
    let mut h = 1e-2 * (1.0 + s_star.abs());
    let mut values: Option<[f64; 7]> = None;
    for _ in 0..24 {
        match stencil_values(&mut d, s_star, h) {
            Some(vals) => {
                let max_abs = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                if max_abs > 2e-2 {
                    h *= 0.5;
                    continue;
                }
                values = Some(vals);
                if max_abs < 1e3 * noise && h < 0.3 * (1.0 + s_star.abs()) {
                    h *= 2.0;
                    continue;
                }
                break;
            }
            None => {
                h *= 0.5;
                if h < 1e-10 {
                    break;
                }
            }
        }
    }
    let values = values.ok_or(CycleError::QuadratureFailure {
        reason: "displacement stencil undefined around the cycle".into(),
    })?;

    let coeffs = interpolate_coefficients(&values);
    let threshold_scale = 100.0 * noise;
    // Row 1-norms of the inverse Vandermonde on nodes -3..3: how much
    // sample noise each coefficient absorbs.
    let row_norms = inverse_vandermonde_row_norms();

    let mut above = [false; 7];
    for m in 1..7 {
        above[m] = coeffs[m].abs() > threshold_scale * row_norms[m];
    }
    for (m, flag) in above.iter().enumerate().take(4).skip(1) {
        if *flag {
            return Ok(MultiplicityEstimate {
                value: m as u32,
                at_cap: m == 3,
            });
        }
    }
    if above[4] || above[5] || above[6] {
        return Ok(MultiplicityEstimate {
            value: 3,
            at_cap: true,
        });
    }
    let spread = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Err(CycleError::NoiseDominated {
        spread,
        floor: threshold_scale,
    })
}

fn stencil_values(
    d: &mut impl FnMut(f64) -> Option<f64>,
    s_star: f64,
    h: f64,
) -> Option<[f64; 7]> {
    let mut out = [0.0; 7];
    for (k, t) in (-3..=3).enumerate() {
        out[k] = d(s_star + h * t as f64)?;
    }
    Some(out)
}

/// Coefficients of the degree-6 interpolant through (t, d) at t = -3..3.
fn interpolate_coefficients(values: &[f64; 7]) -> [f64; 7] {
    let inv = inverse_vandermonde();
    let mut coeffs = [0.0; 7];
    for m in 0..7 {
        for k in 0..7 {
            coeffs[m] += inv[m][k] * values[k];
        }
    }
    coeffs
}

fn inverse_vandermonde() -> &'static [[f64; 7]; 7] {
    use std::sync::OnceLock;
    static INV: OnceLock<[[f64; 7]; 7]> = OnceLock::new();
    INV.get_or_init(|| {
        let nodes: [f64; 7] = [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
        let mut v = nalgebra::DMatrix::<f64>::zeros(7, 7);
        for (i, t) in nodes.iter().enumerate() {
            let mut p = 1.0;
            for j in 0..7 {
                v[(i, j)] = p;
                p *= t;
            }
        }
        let inv = v.try_inverse().expect("Vandermonde on distinct nodes");
        let mut out = [[0.0; 7]; 7];
        for m in 0..7 {
            for k in 0..7 {
                out[m][k] = inv[(m, k)];
            }
        }
        out
    })
}

fn inverse_vandermonde_row_norms() -> [f64; 7] {
    let inv = inverse_vandermonde();
    let mut norms = [0.0; 7];
    for m in 0..7 {
        norms[m] = inv[m].iter().map(|v| v.abs()).sum();
    }
    norms
}

/// Rebuilds the cycle on a section normal to the orbit through the point
/// of maximal field speed (the best-conditioned anchor for the wedge
/// quadrature prefactor).
pub fn reanchor<F: PlanarField>(
    field: &F,
    cycle: &LimitCycle,
    opts: &CycleScanOptions,
) -> Result<LimitCycle, CycleError> {
    let best = cycle
        .orbit_samples
        .iter()
        .max_by(|a, b| field.eval(**a).norm().total_cmp(&field.eval(**b).norm()))
        .copied()
        .ok_or(CycleError::BadSection {
            reason: "cycle has no orbit samples".into(),
        })?;
    let f = field.eval(best);
    let norm = f.norm();
    let section = Section::new(best, (-f.q / norm, f.p / norm)).map_err(CycleError::Flow)?;
    // The anchor sits on the cycle, so the root is at s = 0 up to sampling
    // error; bracket a small window around it.
    let w = 1e-3 * (1.0 + best.x.hypot(best.y));
    let d0 = displacement(field, &section, -w, opts).map_err(CycleError::Flow)?;
    let d1 = displacement(field, &section, w, opts).map_err(CycleError::Flow)?;
    let root = if d0 * d1 < 0.0 {
        refine_sign_change(field, &section, (-w, d0), (w, d1), opts)
    } else {
        refine_tangential(field, &section, (-w, w), opts)
    }
    .ok_or(CycleError::BadSection {
        reason: "no displacement root near the re-anchored section".into(),
    })?;
    build_cycle(field, &section, root, opts)
}
