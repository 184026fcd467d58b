//! Adaptive orbit integration with section-crossing events.
//!
//! The integrator is an embedded Dormand-Prince 5(4) pair with PI step
//! control and a fourth-order dense output. Section crossings are found by
//! sign monitoring on the dense output and polished to |offset| < 1e-11.

use crate::error::{FlowError, NoReturnReason};
use crate::vectorfield::{PhasePoint, PlanarField};

/// Blanket impl so fields can be passed by reference everywhere.
impl<F: PlanarField + ?Sized> PlanarField for &F {
    fn eval(&self, pt: PhasePoint) -> crate::vectorfield::FieldValue {
        (**self).eval(pt)
    }

    fn jacobian(&self, pt: PhasePoint) -> crate::vectorfield::Mat2 {
        (**self).jacobian(pt)
    }
}

/// Axis-aligned integration domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    /// Default domain for first-quadrant work, `[0, 50]²` with a margin
    /// below the axes so orbits on the invariant lines stay inside.
    pub fn first_quadrant() -> Self {
        Self::new(-1e-9, 50.0, -1e-9, 50.0)
    }

    /// A square box `[-r, r]²`.
    pub fn centered(r: f64) -> Self {
        Self::new(-r, r, -r, r)
    }

    pub fn contains(&self, pt: PhasePoint) -> bool {
        pt.x >= self.x_min && pt.x <= self.x_max && pt.y >= self.y_min && pt.y <= self.y_max
    }

    /// Radius scale of the box (half diagonal).
    pub fn radius(&self) -> f64 {
        0.5 * (self.x_max - self.x_min).hypot(self.y_max - self.y_min)
    }
}

/// Crossing orientations accepted by a section.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Only crossings in the section's positive transversal direction.
    Positive,
    /// Crossings in either direction.
    Both,
}

/// A straight section line with coordinate `s` along `direction` from
/// `anchor`; the transversal normal is `direction` rotated by +90°.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    anchor: PhasePoint,
    direction: (f64, f64),
    pub orientation: Orientation,
}

impl Section {
    /// Builds a section, normalizing `direction` to unit length.
    pub fn new(anchor: PhasePoint, direction: (f64, f64)) -> Result<Self, FlowError> {
        let norm = direction.0.hypot(direction.1);
        if !norm.is_finite() || norm == 0.0 {
            return Err(FlowError::NoReturn {
                reason: NoReturnReason::StartsAtEquilibrium,
            });
        }
        Ok(Self {
            anchor,
            direction: (direction.0 / norm, direction.1 / norm),
            orientation: Orientation::Positive,
        })
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn anchor(&self) -> PhasePoint {
        self.anchor
    }

    pub fn direction(&self) -> (f64, f64) {
        self.direction
    }

    /// Unit normal (direction rotated by +90°).
    pub fn normal(&self) -> (f64, f64) {
        (-self.direction.1, self.direction.0)
    }

    /// The point at section coordinate `s`.
    pub fn point_at(&self, s: f64) -> PhasePoint {
        PhasePoint::new(
            self.anchor.x + s * self.direction.0,
            self.anchor.y + s * self.direction.1,
        )
    }

    /// Section coordinate of the orthogonal projection of `pt`.
    pub fn coordinate(&self, pt: PhasePoint) -> f64 {
        (pt.x - self.anchor.x) * self.direction.0 + (pt.y - self.anchor.y) * self.direction.1
    }

    /// Signed normal offset of `pt` from the section line.
    pub fn offset(&self, pt: PhasePoint) -> f64 {
        let n = self.normal();
        (pt.x - self.anchor.x) * n.0 + (pt.y - self.anchor.y) * n.1
    }
}

/// A recorded section crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionEvent {
    pub time: f64,
    pub point: PhasePoint,
    pub section_id: usize,
}

/// Why an integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitOutcome {
    ConvergedToPoint,
    EscapedBox,
    CrossedSection,
    MaxTime,
}

/// A time-parameterized trajectory with section-crossing events.
#[derive(Debug, Clone)]
pub struct Orbit {
    pub samples: Vec<(f64, PhasePoint)>,
    pub outcome: OrbitOutcome,
    pub events: Vec<SectionEvent>,
}

impl Orbit {
    pub fn last_point(&self) -> PhasePoint {
        self.samples.last().map(|(_, p)| *p).unwrap_or(PhasePoint::new(f64::NAN, f64::NAN))
    }

    pub fn last_time(&self) -> f64 {
        self.samples.last().map(|(t, _)| *t).unwrap_or(0.0)
    }
}

/// Integrator tolerances and limits.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Field norm below which the orbit is declared converged to a point.
    pub convergence: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            convergence: 1e-12,
            max_steps: 4_000_000,
        }
    }
}

/// Full integration controls; `integrate` fills sensible defaults.
#[derive(Debug, Clone, Copy)]
pub struct IntegrationOptions<'a> {
    pub t_max: f64,
    pub bbox: BoundingBox,
    pub section: Option<&'a Section>,
    /// Stop at the first qualifying crossing (the default). When false,
    /// events accumulate until `max_events`.
    pub stop_on_crossing: bool,
    pub max_events: usize,
    pub store_samples: bool,
    /// Overrides the orientation sign for crossings: +1/-1 select one
    /// transversal direction, None uses the section's own setting.
    pub required_sign: Option<f64>,
    pub tol: Tolerances,
}

impl<'a> IntegrationOptions<'a> {
    pub fn new(t_max: f64, bbox: BoundingBox) -> Self {
        Self {
            t_max,
            bbox,
            section: None,
            stop_on_crossing: true,
            max_events: 64,
            store_samples: true,
            required_sign: None,
            tol: Tolerances::default(),
        }
    }

    pub fn with_section(mut self, section: &'a Section) -> Self {
        self.section = Some(section);
        self
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A21: f64 = 0.2;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Error weights: b5 - b4 rows.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense output weights.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Right-hand side of a first-order system of fixed dimension.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N], out: &mut [f64; N]);
}

struct FieldOde<'a, F> {
    field: &'a F,
}

impl<F: PlanarField> OdeSystem<2> for FieldOde<'_, F> {
    fn rhs(&self, _t: f64, y: &[f64; 2], out: &mut [f64; 2]) {
        let f = self.field.eval(PhasePoint::new(y[0], y[1]));
        out[0] = f.p;
        out[1] = f.q;
    }
}

/// One accepted step with its dense-output interpolant.
pub(crate) struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    /// State at `t0 + theta * h` for `theta` in [0, 1].
    pub fn interpolate(&self, theta: f64) -> [f64; N] {
        let mut out = [0.0; N];
        let th1 = 1.0 - theta;
        for i in 0..N {
            out[i] = self.rcont[0][i]
                + theta
                    * (self.rcont[1][i]
                        + th1
                            * (self.rcont[2][i]
                                + theta * (self.rcont[3][i] + th1 * self.rcont[4][i])));
        }
        out
    }
}

pub(crate) enum StepFlow {
    Continue,
    Stop,
}

/// Core adaptive driver. Calls `on_step` after every accepted step; the
/// callback may stop the integration early.
pub(crate) fn drive_core<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    tol: &Tolerances,
    mut on_step: impl FnMut(&DenseStep<N>) -> StepFlow,
) -> Result<(), FlowError> {
    debug_assert!(t_end > t0);
    let mut t = t0;
    let mut y = y0;
    let mut k1 = [0.0; N];
    sys.rhs(t, &y, &mut k1);

    let mut h = initial_step(sys, t, &y, &k1, t_end - t0, tol);
    let mut facold: f64 = 1e-4;
    let safe = 0.9;
    let beta = 0.04;
    let expo1 = 0.2 - beta * 0.75;
    let mut rejected = false;

    for _ in 0..tol.max_steps {
        if t >= t_end {
            return Ok(());
        }
        let h_min = 1e-14 * t.abs().max(1.0);
        if h < h_min {
            return Err(FlowError::StepSizeUnderflow {
                t,
                x: y[0],
                y: if N > 1 { y[1] } else { 0.0 },
            });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }

        let (y1, err, k3, k4, k5, k6, k7) = dopri5_step(sys, t, &y, h, &k1, tol);

        let fac11 = err.powf(expo1);
        if err <= 1.0 {
            // Accepted: build dense output, hand to the callback.
            let mut rcont = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = y1[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - h * k7[i] - bspl;
                rcont[4][i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                        + D7 * k7[i]);
            }
            let step = DenseStep {
                t0: t,
                h,
                y0: y,
                y1,
                rcont,
            };
            t += h;
            y = y1;
            k1 = k7; // FSAL
            if let StepFlow::Stop = on_step(&step) {
                return Ok(());
            }
            let mut fac = fac11 / facold.powf(beta);
            fac = (fac / safe).clamp(0.2, 10.0);
            let mut h_new = h / fac;
            facold = err.max(1e-4);
            if rejected {
                h_new = h_new.min(h);
            }
            rejected = false;
            h = h_new;
        } else {
            h /= (fac11 / safe).min(5.0);
            rejected = true;
        }
    }
    Err(FlowError::StepSizeUnderflow {
        t,
        x: y[0],
        y: if N > 1 { y[1] } else { 0.0 },
    })
}

#[allow(clippy::type_complexity)]
fn dopri5_step<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    t: f64,
    y: &[f64; N],
    h: f64,
    k1: &[f64; N],
    tol: &Tolerances,
) -> ([f64; N], f64, [f64; N], [f64; N], [f64; N], [f64; N], [f64; N]) {
    let mut yt = [0.0; N];
    let mut k2 = [0.0; N];
    let mut k3 = [0.0; N];
    let mut k4 = [0.0; N];
    let mut k5 = [0.0; N];
    let mut k6 = [0.0; N];
    let mut k7 = [0.0; N];

    for i in 0..N {
        yt[i] = y[i] + h * A21 * k1[i];
    }
    sys.rhs(t + C[1] * h, &yt, &mut k2);
    for i in 0..N {
        yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
    }
    sys.rhs(t + C[2] * h, &yt, &mut k3);
    for i in 0..N {
        yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    }
    sys.rhs(t + C[3] * h, &yt, &mut k4);
    for i in 0..N {
        yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    }
    sys.rhs(t + C[4] * h, &yt, &mut k5);
    for i in 0..N {
        yt[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
    }
    sys.rhs(t + C[5] * h, &yt, &mut k6);
    let mut y1 = [0.0; N];
    for i in 0..N {
        y1[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
    }
    sys.rhs(t + h, &y1, &mut k7);

    // Weighted RMS error of the embedded 4th-order difference.
    let mut err_acc = 0.0;
    for i in 0..N {
        let e = h
            * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sk = tol.atol + tol.rtol * y[i].abs().max(y1[i].abs());
        let r = e / sk;
        err_acc += r * r;
    }
    let err = (err_acc / N as f64).sqrt();
    (y1, err, k3, k4, k5, k6, k7)
}

fn initial_step<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    span: f64,
    tol: &Tolerances,
) -> f64 {
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..N {
        let sk = tol.atol + tol.rtol * y[i].abs();
        dnf += (k1[i] / sk).powi(2);
        dny += (y[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h = h.min(span);
    // One explicit Euler probe to estimate the second derivative scale.
    let mut y1 = [0.0; N];
    for i in 0..N {
        y1[i] = y[i] + h * k1[i];
    }
    let mut k2 = [0.0; N];
    sys.rhs(t + h, &y1, &mut k2);
    let mut der2 = 0.0;
    for i in 0..N {
        let sk = tol.atol + tol.rtol * y[i].abs();
        der2 += ((k2[i] - k1[i]) / sk).powi(2);
    }
    let der2 = der2.sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (1e-6f64).max(h * 1e-3)
    } else {
        (0.01 / der12).powf(0.2)
    };
    h.min(h1).min(span)
}

/// Integrates the field from `start`, stopping at the first terminating
/// condition: convergence to a point, leaving `bbox`, the first qualifying
/// section crossing, or `t_max`.
pub fn integrate<F: PlanarField>(
    field: &F,
    start: PhasePoint,
    t_max: f64,
    bbox: BoundingBox,
    section: Option<&Section>,
) -> Result<Orbit, FlowError> {
    let mut opts = IntegrationOptions::new(t_max, bbox);
    opts.section = section;
    integrate_with(field, start, &opts)
}

/// Integration with full control over events and sampling.
pub fn integrate_with<F: PlanarField>(
    field: &F,
    start: PhasePoint,
    opts: &IntegrationOptions,
) -> Result<Orbit, FlowError> {
    if opts.t_max <= 0.0 {
        return Err(FlowError::NonPositiveHorizon { t_max: opts.t_max });
    }
    if !opts.bbox.contains(start) {
        return Err(FlowError::StartOutsideBox {
            x: start.x,
            y: start.y,
        });
    }
    let tol = opts.tol;
    let mut samples = vec![(0.0, start)];
    let mut events: Vec<SectionEvent> = Vec::new();

    // Immediate convergence check: starting at an equilibrium produces an
    // orbit with zero displacement.
    if field.eval(start).norm() <= tol.convergence {
        return Ok(Orbit {
            samples,
            outcome: OrbitOutcome::ConvergedToPoint,
            events,
        });
    }

    let sys = FieldOde { field };
    let mut outcome = OrbitOutcome::MaxTime;

    // The event detector arms once the orbit has left a small ball around
    // the start, so the departure from a point on the section itself is not
    // mistaken for a return.
    let arm_radius = 1e-7 * (1.0 + start.x.hypot(start.y));
    let mut armed = start_offset_is_clear(opts, start, arm_radius);
    let mut prev_g = opts.section.map(|sec| sec.offset(start));

    let result = drive(
        &sys,
        0.0,
        [start.x, start.y],
        opts.t_max,
        &tol,
        |step| {
            let t1 = step.t0 + step.h;
            let p1 = PhasePoint::new(step.y1[0], step.y1[1]);

            // Section crossings on the dense output, subdivided to catch
            // multiple sign changes within one step. The arming flag flips
            // in position order along the subintervals, so the departure
            // from a start lying on the section is never taken for a
            // return.
            if let Some(sec) = opts.section {
                let mut g_prev = prev_g.unwrap_or_else(|| sec.offset(PhasePoint::new(step.y0[0], step.y0[1])));
                let subdivisions = 6;
                for k in 1..=subdivisions {
                    let theta = k as f64 / subdivisions as f64;
                    let yk = step.interpolate(theta);
                    let pk = PhasePoint::new(yk[0], yk[1]);
                    let gk = sec.offset(pk);
                    if armed && g_prev * gk < 0.0 {
                        let theta_lo = (k - 1) as f64 / subdivisions as f64;
                        if let Some(ev) = polish_crossing(field, sec, step, theta_lo, theta, opts)
                        {
                            events.push(ev);
                            if opts.stop_on_crossing || events.len() >= opts.max_events {
                                // Truncate the trajectory at the crossing.
                                samples.push((ev.time, ev.point));
                                return (StepFlow::Stop, Some(OrbitOutcome::CrossedSection));
                            }
                        }
                    }
                    if !armed && pk.distance(start) > arm_radius {
                        armed = true;
                    }
                    g_prev = gk;
                }
                prev_g = Some(g_prev);
            }

            if !armed && p1.distance(start) > arm_radius {
                armed = true;
            }

            if opts.store_samples {
                samples.push((t1, p1));
            }

            if !opts.bbox.contains(p1) {
                if !opts.store_samples {
                    samples.push((t1, p1));
                }
                return (StepFlow::Stop, Some(OrbitOutcome::EscapedBox));
            }
            if field.eval(p1).norm() <= tol.convergence {
                if !opts.store_samples {
                    samples.push((t1, p1));
                }
                return (StepFlow::Stop, Some(OrbitOutcome::ConvergedToPoint));
            }
            (StepFlow::Continue, None)
        },
        &mut outcome,
    );
    result?;

    if !opts.store_samples && samples.len() == 1 {
        // Keep at least the final state for callers that skipped sampling.
    }
    Ok(Orbit {
        samples,
        outcome,
        events,
    })
}

/// Adapter: the driver callback returns only a flow decision, so thread an
/// outcome slot through.
#[allow(clippy::too_many_arguments)]
fn drive<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    tol: &Tolerances,
    mut on_step: impl FnMut(&DenseStep<N>) -> (StepFlow, Option<OrbitOutcome>),
    outcome: &mut OrbitOutcome,
) -> Result<(), FlowError> {
    drive_core(sys, t0, y0, t_end, tol, |step| {
        let (flow, oc) = on_step(step);
        if let Some(oc) = oc {
            *outcome = oc;
        }
        flow
    })
}

fn polish_crossing<F: PlanarField>(
    field: &F,
    sec: &Section,
    step: &DenseStep<2>,
    theta_lo: f64,
    theta_hi: f64,
    opts: &IntegrationOptions,
) -> Option<SectionEvent> {
    let g = |theta: f64| {
        let y = step.interpolate(theta);
        sec.offset(PhasePoint::new(y[0], y[1]))
    };
    let mut lo = theta_lo;
    let mut hi = theta_hi;
    let mut g_lo = g(lo);
    let mut g_hi = g(hi);
    if g_lo == 0.0 {
        hi = lo;
    } else if g_hi != 0.0 && g_lo * g_hi > 0.0 {
        return None;
    }
    // Bisection with a secant proposal each iteration.
    for _ in 0..200 {
        if (hi - lo).abs() < 1e-16 {
            break;
        }
        let mid = if (g_hi - g_lo).abs() > 1e-300 {
            let sec_theta = lo - g_lo * (hi - lo) / (g_hi - g_lo);
            if sec_theta > lo && sec_theta < hi {
                sec_theta
            } else {
                0.5 * (lo + hi)
            }
        } else {
            0.5 * (lo + hi)
        };
        let g_mid = g(mid);
        if g_mid.abs() < 1e-13 {
            lo = mid;
            hi = mid;
            break;
        }
        if g_lo * g_mid < 0.0 {
            hi = mid;
            g_hi = g_mid;
        } else {
            lo = mid;
            g_lo = g_mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    let y = step.interpolate(theta);
    let point = PhasePoint::new(y[0], y[1]);
    if sec.offset(point).abs() > 1e-11 {
        return None;
    }
    // Orientation filter: transversal component of the field at the
    // crossing.
    let n = sec.normal();
    let f = field.eval(point);
    let transversal = f.p * n.0 + f.q * n.1;
    let accept = match opts.required_sign {
        Some(sign) => transversal * sign > 0.0,
        None => match sec.orientation {
            Orientation::Positive => transversal > 0.0,
            Orientation::Both => transversal != 0.0,
        },
    };
    if !accept {
        return None;
    }
    Some(SectionEvent {
        time: step.t0 + theta * step.h,
        point,
        section_id: 0,
    })
}

fn start_offset_is_clear(opts: &IntegrationOptions, start: PhasePoint, arm_radius: f64) -> bool {
    match opts.section {
        // Starting away from the section line: detector is armed at once.
        Some(sec) => sec.offset(start).abs() > arm_radius,
        None => true,
    }
}

/// First-return map of the section: the coordinate of the next crossing
/// with the same transversal orientation as the departure from `s`.
pub fn return_map<F: PlanarField>(
    field: &F,
    section: &Section,
    s: f64,
    max_period: f64,
) -> Result<f64, FlowError> {
    return_map_in_box(field, section, s, max_period, BoundingBox::first_quadrant())
}

/// Return map with an explicit bounding box.
pub fn return_map_in_box<F: PlanarField>(
    field: &F,
    section: &Section,
    s: f64,
    max_period: f64,
    bbox: BoundingBox,
) -> Result<f64, FlowError> {
    Ok(return_event(field, section, s, max_period, bbox)?.0)
}

/// Return map that also reports the return time (the cycle period when `s`
/// is a fixed point).
pub fn return_event<F: PlanarField>(
    field: &F,
    section: &Section,
    s: f64,
    max_period: f64,
    bbox: BoundingBox,
) -> Result<(f64, f64), FlowError> {
    let start = section.point_at(s);
    let f0 = field.eval(start);
    if f0.norm() <= 1e-12 {
        return Err(FlowError::NoReturn {
            reason: NoReturnReason::StartsAtEquilibrium,
        });
    }
    let n = section.normal();
    let departure = f0.p * n.0 + f0.q * n.1;
    let required = match section.orientation {
        Orientation::Positive => {
            if departure == 0.0 {
                1.0
            } else {
                departure.signum()
            }
        }
        Orientation::Both => 0.0,
    };

    let mut opts = IntegrationOptions::new(max_period, bbox);
    opts.section = Some(section);
    opts.stop_on_crossing = true;
    opts.store_samples = false;
    if required != 0.0 {
        opts.required_sign = Some(required);
    }
    let orbit = integrate_with(field, start, &opts)?;
    match orbit.outcome {
        OrbitOutcome::CrossedSection => {
            let ev = orbit.events.last().expect("crossing outcome implies event");
            Ok((section.coordinate(ev.point), ev.time))
        }
        OrbitOutcome::EscapedBox => Err(FlowError::NoReturn {
            reason: NoReturnReason::EscapedBox,
        }),
        OrbitOutcome::ConvergedToPoint => Err(FlowError::NoReturn {
            reason: NoReturnReason::ConvergedToPoint,
        }),
        OrbitOutcome::MaxTime => Err(FlowError::NoReturn {
            reason: NoReturnReason::MaxPeriodExceeded,
        }),
    }
}

/// Integrates an arbitrary fixed-dimension system over `[0, t_end]` and
/// returns the final state (no events, no sampling). Used by the
/// displacement-derivative quadratures.
pub(crate) fn propagate<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    y0: [f64; N],
    t_end: f64,
    tol: &Tolerances,
) -> Result<[f64; N], FlowError> {
    let mut y = y0;
    drive_core(sys, 0.0, y0, t_end, tol, |step| {
        y = step.y1;
        StepFlow::Continue
    })?;
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{HopfNormalForm, TimeReversed};
    use crate::vectorfield::SystemParams;
    use approx::assert_abs_diff_eq;

    #[test]
    fn orbit_on_invariant_axis_stays_on_axis() {
        let p = SystemParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let orbit = integrate(
            &p,
            PhasePoint::new(0.0, 2.0),
            10.0,
            BoundingBox::first_quadrant(),
            None,
        )
        .unwrap();
        for (_, pt) in &orbit.samples {
            assert_eq!(pt.x, 0.0);
        }
    }

    #[test]
    fn orbit_from_equilibrium_converges_immediately() {
        let p = SystemParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let orbit = integrate(
            &p,
            PhasePoint::new(0.0, 0.0),
            5.0,
            BoundingBox::first_quadrant(),
            None,
        )
        .unwrap();
        assert_eq!(orbit.outcome, OrbitOutcome::ConvergedToPoint);
        assert_eq!(orbit.samples.len(), 1);
    }

    #[test]
    fn hopf_orbit_converges_to_unit_circle() {
        let hopf = HopfNormalForm::new(1.0);
        let section = Section::new(PhasePoint::new(0.0, 0.0), (1.0, 0.0)).unwrap();
        let mut opts = IntegrationOptions::new(200.0, BoundingBox::centered(4.0));
        opts.section = Some(&section);
        opts.stop_on_crossing = false;
        opts.max_events = 20;
        let orbit = integrate_with(&hopf, PhasePoint::new(0.5, 0.0), &opts).unwrap();
        assert!(orbit.events.len() >= 10, "events: {}", orbit.events.len());
        // Radii at successive positive-axis crossings approach 1.
        let last = orbit.events.last().unwrap();
        assert_abs_diff_eq!(last.point.x.hypot(last.point.y), 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(last.point.y, 0.0, epsilon = 1e-11);
    }

    #[test]
    fn hopf_return_map_fixed_point_at_cycle() {
        let hopf = HopfNormalForm::new(1.0);
        let section = Section::new(PhasePoint::new(1.0, 0.0), (1.0, 0.0)).unwrap();
        let h0 = return_map_in_box(&hopf, &section, 0.0, 20.0, BoundingBox::centered(4.0)).unwrap();
        assert_abs_diff_eq!(h0, 0.0, epsilon = 1e-8);
        // Inside the cycle the map moves outward toward it.
        let h_in = return_map_in_box(&hopf, &section, -0.3, 20.0, BoundingBox::centered(4.0)).unwrap();
        assert!(h_in > -0.3 && h_in < 0.0, "h(-0.3) = {h_in}");
        // Outside it moves inward.
        let h_out = return_map_in_box(&hopf, &section, 0.5, 20.0, BoundingBox::centered(4.0)).unwrap();
        assert!(h_out < 0.5 && h_out > 0.0, "h(0.5) = {h_out}");
    }

    #[test]
    fn return_map_is_monotone_on_annulus() {
        let hopf = HopfNormalForm::new(1.0);
        let section = Section::new(PhasePoint::new(1.0, 0.0), (1.0, 0.0)).unwrap();
        let mut prev = None;
        for k in 0..14 {
            let s = -0.6 + k as f64 * 0.1;
            let h = return_map_in_box(&hopf, &section, s, 20.0, BoundingBox::centered(4.0)).unwrap();
            if let Some(p) = prev {
                assert!(h > p, "return map not monotone at s = {s}");
            }
            prev = Some(h);
        }
    }

    #[test]
    fn return_map_period_matches_hopf() {
        let hopf = HopfNormalForm::new(1.0);
        let section = Section::new(PhasePoint::new(1.0, 0.0), (1.0, 0.0)).unwrap();
        let (_, t) = return_event(&hopf, &section, 0.0, 20.0, BoundingBox::centered(4.0)).unwrap();
        assert_abs_diff_eq!(t, 2.0 * std::f64::consts::PI, epsilon = 1e-8);
    }

    #[test]
    fn forward_backward_integration_returns_to_start() {
        let p = SystemParams::new(1.0, -1.0, 0.5, 1.0, 0.5).unwrap();
        let start = PhasePoint::new(0.8, 0.6);
        let t = 10.0;
        let fwd = integrate(&p, start, t, BoundingBox::first_quadrant(), None).unwrap();
        assert_eq!(fwd.outcome, OrbitOutcome::MaxTime);
        let end = fwd.last_point();
        let back = integrate(
            &TimeReversed(&p),
            end,
            t,
            BoundingBox::first_quadrant(),
            None,
        )
        .unwrap();
        assert_eq!(back.outcome, OrbitOutcome::MaxTime);
        assert!(back.last_point().distance(start) < 1e-6);
    }

    #[test]
    fn first_quadrant_is_forward_invariant() {
        let p = SystemParams::new(1.0, -2.5, 0.4, 0.8, 0.3).unwrap();
        for (x0, y0) in [(0.2, 0.2), (1.5, 0.4), (0.7, 2.0), (2.8, 1.1)] {
            let orbit = integrate(
                &p,
                PhasePoint::new(x0, y0),
                40.0,
                BoundingBox::first_quadrant(),
                None,
            )
            .unwrap();
            for (_, pt) in &orbit.samples {
                assert!(pt.x >= 0.0 && pt.y >= 0.0, "left quadrant at {pt:?}");
            }
        }
    }

    #[test]
    fn escape_is_reported() {
        // Strong outward field: no competition, tiny box.
        let hopf = HopfNormalForm::new(4.0);
        let orbit = integrate(
            &hopf,
            PhasePoint::new(0.5, 0.0),
            50.0,
            BoundingBox::centered(1.0),
            None,
        )
        .unwrap();
        assert_eq!(orbit.outcome, OrbitOutcome::EscapedBox);
    }

    #[test]
    fn sample_times_strictly_increase() {
        let hopf = HopfNormalForm::new(1.0);
        let orbit = integrate(
            &hopf,
            PhasePoint::new(0.3, 0.1),
            25.0,
            BoundingBox::centered(4.0),
            None,
        )
        .unwrap();
        for w in orbit.samples.windows(2) {
            assert!(w[1].0 > w[0].0);
        }
    }
}
