//! Propagators for nonautonomous linear systems, and exponential-bound
//! certificates measured against them.
//!
//! The central object is [`TimeVaryingOperator`], a finite description of a
//! time-dependent coefficient `A(t)` acting on a fixed finite-dimensional
//! space.  [`Propagator`] integrates the matrix equation `dS/dt = A(t) S`,
//! `S(s, s) = I`, exploiting whatever structure the operator description
//! exposes: constant stretches become matrix exponentials, periodic stretches
//! are handled by computing one period and powering it, and only genuinely
//! time-varying smooth stretches are integrated numerically.
//!
//! Numerical integration is classical fixed-order Runge-Kutta with step
//! halving until two refinements agree, which keeps results bit-reproducible
//! across runs.  Integration intervals are split exactly at the operator's
//! known discontinuity and kink times, so no step ever straddles a jump.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::{matrix_exp, operator_norm, vec_norm, Matrix};
use crate::scalar::{C, FloatScalar};
use crate::signals::{integrate, Signal, Tail};

/// Default slack accepted by certificates: pass iff `max_ratio <= 1 + tol`.
pub const DEFAULT_CERT_TOL: f64 = 1e-6;

/// Default integration tolerance for propagators.
pub const DEFAULT_PROP_TOL: f64 = 1e-9;

/// Hard cap on uniform steps within a single smooth integration segment.
const STEP_CAP: usize = 1 << 22;

/// Spans longer than this many periods of a periodic tail are propagated by
/// powering a one-period solution instead of stepping straight through.
const POWERING_SPAN_PERIODS: f64 = 6.0;

// ── Time-varying operators ──────────────────────────────────────────────────

#[derive(Clone, Debug)]
enum Kind<T: FloatScalar> {
    /// A(t) = A for all t.
    Constant(Matrix<T>),
    /// A(t) = base + b(t) * factor.
    SignalProduct {
        signal: Signal<T>,
        factor: Matrix<T>,
        base: Matrix<T>,
    },
    /// Piecewise constant and periodic: the given (duration, matrix) segments
    /// repeat forever.  Discontinuous at segment boundaries.
    PeriodicSegments {
        segments: Vec<(T, Matrix<T>)>,
        period: T,
    },
    /// Piecewise linear in t between anchor points `(t_i, A_i)`: constant
    /// before the first anchor and after the last, and linearly interpolated
    /// between consecutive anchors.  Two consecutive anchors holding the same
    /// matrix give an exactly constant stretch; differing anchors give a
    /// linear blend.  Continuous, with kinks at the anchor times.
    Anchors { times: Vec<T>, mats: Vec<Matrix<T>> },
}

/// A finite description of `t -> A(t)`, with its dimension and a bound on
/// `sup_t ||A(t)||`.
#[derive(Clone, Debug)]
pub struct TimeVaryingOperator<T: FloatScalar> {
    kind: Kind<T>,
    dim: usize,
    sup_norm: T,
}

impl<T: FloatScalar> TimeVaryingOperator<T> {
    /// The constant coefficient A(t) = A.
    pub fn constant(a: Matrix<T>) -> Result<Self> {
        a.validate()?;
        let sup = operator_norm(&a)?;
        Ok(TimeVaryingOperator {
            dim: a.dim(),
            sup_norm: sup,
            kind: Kind::Constant(a),
        })
    }

    /// The coefficient A(t) = base + b(t) * factor driven by a scalar signal.
    pub fn signal_product(signal: Signal<T>, factor: Matrix<T>, base: Matrix<T>) -> Result<Self> {
        factor.validate()?;
        base.validate()?;
        if factor.dim() != base.dim() {
            return Err(Error::InvalidInput(format!(
                "factor dimension {} does not match base dimension {}",
                factor.dim(),
                base.dim()
            )));
        }
        let sup_b = signal.sup_bound();
        if !sup_b.is_finite() {
            return Err(Error::Parameter(
                "signal has no finite amplitude bound".into(),
            ));
        }
        let sup = operator_norm(&base)? + sup_b * operator_norm(&factor)?;
        Ok(TimeVaryingOperator {
            dim: base.dim(),
            sup_norm: sup,
            kind: Kind::SignalProduct {
                signal,
                factor,
                base,
            },
        })
    }

    /// A periodic piecewise-constant coefficient: the (duration, matrix)
    /// segments are traversed in order and repeat with period equal to the
    /// total duration.
    pub fn periodic_pulse(segments: Vec<(T, Matrix<T>)>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidInput("no segments given".into()));
        }
        let dim = segments[0].1.dim();
        let mut period = T::zero();
        let mut sup = T::zero();
        for (dur, mat) in &segments {
            mat.validate()?;
            if mat.dim() != dim {
                return Err(Error::InvalidInput(
                    "segment matrices have mismatched dimensions".into(),
                ));
            }
            if !(*dur > T::zero()) || !dur.is_finite() {
                return Err(Error::Parameter(
                    "segment durations must be positive and finite".into(),
                ));
            }
            period += *dur;
            sup = sup.max(operator_norm(mat)?);
        }
        Ok(TimeVaryingOperator {
            dim,
            sup_norm: sup,
            kind: Kind::PeriodicSegments { segments, period },
        })
    }

    /// A piecewise-linear-in-time coefficient through the given anchors,
    /// constant outside the anchored range.  Anchor times must be strictly
    /// increasing.
    pub fn schedule(anchors: Vec<(T, Matrix<T>)>) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::InvalidInput("no anchors given".into()));
        }
        let dim = anchors[0].1.dim();
        let mut sup = T::zero();
        for (i, (t, mat)) in anchors.iter().enumerate() {
            mat.validate()?;
            if !t.is_finite() {
                return Err(Error::Parameter("anchor times must be finite".into()));
            }
            if mat.dim() != dim {
                return Err(Error::InvalidInput(
                    "anchor matrices have mismatched dimensions".into(),
                ));
            }
            if i > 0 && !(*t > anchors[i - 1].0) {
                return Err(Error::Parameter(
                    "anchor times must be strictly increasing".into(),
                ));
            }
            // Blends are convex combinations, so the anchor norms bound the sup.
            sup = sup.max(operator_norm(mat)?);
        }
        let (times, mats) = anchors.into_iter().unzip();
        Ok(TimeVaryingOperator {
            dim,
            sup_norm: sup,
            kind: Kind::Anchors { times, mats },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// A bound on `sup_t ||A(t)||` in the operator norm.
    pub fn sup_norm_bound(&self) -> T {
        self.sup_norm
    }

    /// The coefficient matrix at time t.
    pub fn eval(&self, t: T) -> Matrix<T> {
        match &self.kind {
            Kind::Constant(a) => a.clone(),
            Kind::SignalProduct {
                signal,
                factor,
                base,
            } => base.add(&factor.scale_real(signal.eval(t))),
            Kind::PeriodicSegments { segments, period } => {
                let mut phase = t - *period * (t / *period).floor();
                if phase < T::zero() {
                    phase += *period;
                }
                let mut acc = T::zero();
                for (dur, mat) in segments {
                    acc += *dur;
                    if phase < acc {
                        return mat.clone();
                    }
                }
                segments.last().unwrap().1.clone()
            }
            Kind::Anchors { times, mats } => {
                if t <= times[0] {
                    return mats[0].clone();
                }
                let last = times.len() - 1;
                if t >= times[last] {
                    return mats[last].clone();
                }
                let i = match times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
                    Ok(i) => return mats[i].clone(),
                    Err(i) => i - 1,
                };
                if mats[i] == mats[i + 1] {
                    return mats[i].clone();
                }
                let theta = (t - times[i]) / (times[i + 1] - times[i]);
                mats[i]
                    .scale_real(T::one() - theta)
                    .add(&mats[i + 1].scale_real(theta))
            }
        }
    }

    /// Times in the open interval (s, t) where the coefficient jumps or has a
    /// kink.  The integrator splits at every one of these.
    pub(crate) fn breakpoints(&self, s: T, t: T) -> Vec<T> {
        let mut pts = Vec::new();
        match &self.kind {
            Kind::Constant(_) => {}
            Kind::SignalProduct { signal, .. } => {
                for k in signal.knots() {
                    if k > s && k < t {
                        pts.push(k);
                    }
                }
            }
            Kind::PeriodicSegments { segments, period } => {
                // Boundary times are c_j + k * period for cumulative sums c_j.
                let mut cum = Vec::with_capacity(segments.len());
                let mut acc = T::zero();
                for (dur, _) in segments {
                    acc += *dur;
                    cum.push(acc);
                }
                let k0 = (s / *period).floor();
                let mut k = k0;
                loop {
                    let base = *period * k;
                    if base > t {
                        break;
                    }
                    for c in &cum {
                        let b = base + *c - *period;
                        if b > s && b < t {
                            pts.push(b);
                        }
                        let b = base + *c;
                        if b > s && b < t {
                            pts.push(b);
                        }
                    }
                    k += T::one();
                    if pts.len() > 4_000_000 {
                        break;
                    }
                }
                pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                pts.dedup();
            }
            Kind::Anchors { times, .. } => {
                for &tk in times {
                    if tk > s && tk < t {
                        pts.push(tk);
                    }
                }
            }
        }
        pts
    }

    /// The entrywise integral of the coefficient over [lo, hi], lo <= hi.
    /// Constant, piecewise-constant and piecewise-linear descriptions
    /// integrate exactly; a signal product reduces to a scalar quadrature of
    /// the signal (which handles the bump's square-root kinks by deep local
    /// bisection), so no matrix-valued quadrature is ever needed.
    pub fn integral(&self, lo: T, hi: T, tol: T) -> Result<Matrix<T>> {
        if !(hi >= lo) {
            return Err(Error::InvalidInput(
                "integration interval is reversed".into(),
            ));
        }
        match &self.kind {
            Kind::Constant(a) => Ok(a.scale_real(hi - lo)),
            Kind::SignalProduct { signal, factor, base } => {
                let scale = T::one().max(factor.max_abs());
                let s = integrate(signal, lo, hi, tol / scale)?;
                Ok(base.scale_real(hi - lo).add(&factor.scale_real(s)))
            }
            Kind::PeriodicSegments { segments, period } => {
                let mut per = Matrix::zeros(self.dim);
                for (dur, mat) in segments {
                    per = per.add(&mat.scale_real(*dur));
                }
                // F(x) = k * per + partial(r) for x = k * period + r,
                // r in [0, period); the integral is F(hi) - F(lo)
                let anti = |x: T| -> Matrix<T> {
                    let k = (x / *period).floor();
                    let mut left = x - k * *period;
                    let mut acc = per.scale_real(k);
                    for (dur, mat) in segments {
                        if left <= T::zero() {
                            break;
                        }
                        let take = left.min(*dur);
                        acc = acc.add(&mat.scale_real(take));
                        left -= take;
                    }
                    acc
                };
                Ok(anti(hi).sub(&anti(lo)))
            }
            Kind::Anchors { times, mats } => {
                let last = times.len() - 1;
                let mut acc = Matrix::zeros(self.dim);
                if lo < times[0] {
                    let b = hi.min(times[0]);
                    acc = acc.add(&mats[0].scale_real(b - lo));
                }
                for i in 0..last {
                    let a = lo.max(times[i]);
                    let b = hi.min(times[i + 1]);
                    if b > a {
                        // linear in t, so the trapezoid is exact
                        let ends = self.eval(a).add(&self.eval(b));
                        acc = acc.add(&ends.scale_real((b - a) * T::c(0.5)));
                    }
                }
                if hi > times[last] {
                    let a = lo.max(times[last]);
                    acc = acc.add(&mats[last].scale_real(hi - a));
                }
                Ok(acc)
            }
        }
    }

    /// If the coefficient is exactly constant on [u, v], the constant matrix
    /// together with a stable small integer identifying the stretch (used as
    /// a cache key for exponentials).
    fn constant_span(&self, u: T, v: T) -> Option<(usize, Matrix<T>)> {
        match &self.kind {
            Kind::Constant(a) => Some((0, a.clone())),
            Kind::SignalProduct {
                signal,
                factor,
                base,
            } => match signal.tail() {
                Some(Tail::Constant { value, from }) if u >= from => {
                    Some((usize::MAX, base.add(&factor.scale_real(value))))
                }
                _ => None,
            },
            Kind::PeriodicSegments { segments, period } => {
                let mut phase = u - *period * (u / *period).floor();
                if phase < T::zero() {
                    phase += *period;
                }
                // Segment membership up to float slop at the boundaries: an
                // overlap of at most 1e-12 periods is absorbed rather than
                // sent to the stepper, which cannot converge across a jump.
                let slack = *period * T::c(1e-12);
                if *period - phase <= slack {
                    phase = T::zero();
                }
                let mut acc = T::zero();
                for (i, (dur, mat)) in segments.iter().enumerate() {
                    let next = acc + *dur;
                    if phase < next - slack {
                        if v - u <= next - phase + slack {
                            return Some((i, mat.clone()));
                        }
                        return None;
                    }
                    acc = next;
                }
                None
            }
            Kind::Anchors { times, mats } => {
                let last = times.len() - 1;
                if v <= times[0] {
                    return Some((usize::MAX, mats[0].clone()));
                }
                if u >= times[last] {
                    return Some((usize::MAX - 1, mats[last].clone()));
                }
                let i = match times.binary_search_by(|x| x.partial_cmp(&u).unwrap()) {
                    Ok(i) => i,
                    Err(0) => return None,
                    Err(i) => i - 1,
                };
                if i + 1 <= last && v <= times[i + 1] && mats[i] == mats[i + 1] {
                    return Some((i, mats[i].clone()));
                }
                None
            }
        }
    }

    /// Steps per unit time the fixed-order integrator starts from before any
    /// halving: enough to resolve both the coefficient's size and the fastest
    /// oscillation in its description.
    fn resolution_rate(&self) -> T {
        let base = T::c(4.0).max(T::c(3.0) * self.sup_norm);
        match &self.kind {
            Kind::SignalProduct { signal, .. } => base.max(T::c(2.0) * signal.freq_scale()),
            _ => base,
        }
    }

    /// Periodic structure usable for propagation by powering: an anchor time
    /// from which the coefficient is exactly periodic, and the period.
    fn periodic_structure(&self) -> Option<(T, T)> {
        match &self.kind {
            Kind::PeriodicSegments { period, .. } => Some((T::zero(), *period)),
            Kind::SignalProduct { signal, .. } => match signal.tail() {
                Some(Tail::Periodic { period, from }) => {
                    let anchor = if from.is_finite() { from } else { T::zero() };
                    Some((anchor, period))
                }
                _ => None,
            },
            _ => None,
        }
    }
}

// ── Propagation ─────────────────────────────────────────────────────────────

/// Integrates `dS/dt = A(t) S` for one operator at one tolerance, caching the
/// expensive reusable pieces (one-period solutions, exponentials of constant
/// stretches) across calls.
pub struct Propagator<'a, T: FloatScalar> {
    op: &'a TimeVaryingOperator<T>,
    tol: T,
    /// Cached one-period solution, keyed by (anchor bits, period bits).
    monodromy: RefCell<Option<(u64, u64, Matrix<T>)>>,
    /// Cached partial-period solutions, keyed by (0 for a start-of-period
    /// piece, 1 for an end-of-period piece; offset bits).
    partials: RefCell<HashMap<(u8, u64), Matrix<T>>>,
    /// Cached exponentials of constant stretches, keyed by (stretch id, span bits).
    exps: RefCell<HashMap<(usize, u64), Matrix<T>>>,
}

fn bits<T: FloatScalar>(x: T) -> u64 {
    x.to_f64().map(f64::to_bits).unwrap_or(0)
}

impl<'a, T: FloatScalar> Propagator<'a, T> {
    pub fn new(op: &'a TimeVaryingOperator<T>, tol: T) -> Result<Self> {
        if !(tol > T::zero()) || !tol.is_finite() {
            return Err(Error::Parameter(format!(
                "integration tolerance must be positive and finite, got {tol}"
            )));
        }
        Ok(Propagator {
            op,
            tol,
            monodromy: RefCell::new(None),
            partials: RefCell::new(HashMap::new()),
            exps: RefCell::new(HashMap::new()),
        })
    }

    pub fn operator(&self) -> &TimeVaryingOperator<T> {
        self.op
    }

    pub fn tol(&self) -> T {
        self.tol
    }

    /// The solution operator S(t, s) mapping states at time s to states at
    /// time t.  Requires t >= s; backward propagation is not supported.
    pub fn matrix(&self, s: T, t: T) -> Result<Matrix<T>> {
        if !s.is_finite() || !t.is_finite() {
            return Err(Error::InvalidInput("times must be finite".into()));
        }
        if t < s {
            return Err(Error::InvalidInput(format!(
                "backward propagation requested (s = {s}, t = {t}); only forward \
                 propagation is supported"
            )));
        }
        if t == s {
            return Ok(Matrix::identity(self.op.dim()));
        }
        match self.op.periodic_structure() {
            Some((anchor, period)) => self.periodic_route(s, t, anchor, period),
            None => self.chained(s, t),
        }
    }

    /// Routing for operators that are periodic from `anchor` on: direct
    /// stepping before the anchor and for short spans, one-period powering
    /// for long spans.
    fn periodic_route(&self, s: T, t: T, anchor: T, period: T) -> Result<Matrix<T>> {
        if t <= anchor {
            return self.chained(s, t);
        }
        if s < anchor {
            let head = self.chained(s, anchor)?;
            let tail = self.periodic_route(anchor, t, anchor, period)?;
            return Ok(tail.matmul(&head));
        }
        let piecewise = matches!(self.op.kind, Kind::PeriodicSegments { .. });
        if !piecewise && t - s <= T::c(POWERING_SPAN_PERIODS) * period {
            return self.chained(s, t);
        }
        // Decompose both endpoints as anchor + q * period + r with r in [0, period).
        let (qa, ra) = split_phase(s - anchor, period);
        let (qb, rb) = split_phase(t - anchor, period);
        let hops = qb - qa;
        if hops == 0 {
            return self.chained(s, t);
        }
        // Chronologically: finish the first period from offset ra, cross
        // hops - 1 whole periods, then enter the last period up to offset rb.
        let finish = self.partial(1, ra, anchor, period)?;
        let enter = self.partial(0, rb, anchor, period)?;
        let mono = self.monodromy(anchor, period)?;
        let mid = mono.pow((hops - 1) as usize);
        Ok(enter.matmul(&mid).matmul(&finish))
    }

    /// S(anchor + period, anchor), cached.  Powering amplifies any error in
    /// this matrix by the number of periods crossed, so it is integrated to
    /// far below the propagator tolerance.
    fn monodromy(&self, anchor: T, period: T) -> Result<Matrix<T>> {
        let key = (bits(anchor), bits(period));
        if let Some((a, p, m)) = self.monodromy.borrow().as_ref() {
            if *a == key.0 && *p == key.1 {
                return Ok(m.clone());
            }
        }
        let tol = (self.tol * T::c(1e-6)).max(T::c(64.0) * T::eps());
        let m = self.span_product(anchor, anchor + period, tol)?;
        *self.monodromy.borrow_mut() = Some((key.0, key.1, m.clone()));
        Ok(m)
    }

    /// Partial-period solutions, cached by offset: side 0 is
    /// S(anchor + r, anchor), side 1 is S(anchor + period, anchor + r).
    fn partial(&self, side: u8, r: T, anchor: T, period: T) -> Result<Matrix<T>> {
        let key = (side, bits(r));
        if let Some(m) = self.partials.borrow().get(&key) {
            return Ok(m.clone());
        }
        let tol = self.tol * T::c(0.25);
        let m = if side == 0 {
            self.span_product(anchor, anchor + r, tol)?
        } else {
            self.span_product(anchor + r, anchor + period, tol)?
        };
        self.partials.borrow_mut().insert(key, m.clone());
        Ok(m)
    }

    /// Direct propagation over [s, t]: split at every breakpoint, take the
    /// exact exponential on constant stretches, integrate the rest.
    fn chained(&self, s: T, t: T) -> Result<Matrix<T>> {
        self.span_product(s, t, self.tol)
    }

    fn span_product(&self, s: T, t: T, tol: T) -> Result<Matrix<T>> {
        if t <= s {
            return Ok(Matrix::identity(self.op.dim()));
        }
        let mut pts = self.op.breakpoints(s, t);
        pts.insert(0, s);
        pts.push(t);
        let nseg = pts.len() - 1;
        let seg_tol = tol / T::c(nseg as f64);
        let mut sol = Matrix::identity(self.op.dim());
        for w in pts.windows(2) {
            let (u, v) = (w[0], w[1]);
            if v <= u {
                continue;
            }
            let step = match self.op.constant_span(u, v) {
                Some((id, a)) => self.cached_exp(id, &a, v - u)?,
                None => integrate_matrix(self.op, u, v, seg_tol)?,
            };
            sol = step.matmul(&sol);
        }
        Ok(sol)
    }

    fn cached_exp(&self, id: usize, a: &Matrix<T>, span: T) -> Result<Matrix<T>> {
        let key = (id, bits(span));
        if let Some(m) = self.exps.borrow().get(&key) {
            return Ok(m.clone());
        }
        let m = matrix_exp(&a.scale_real(span))?;
        self.exps.borrow_mut().insert(key, m.clone());
        Ok(m)
    }
}

/// Writes x as q * period + r with r in [0, period), snapping offsets within
/// relative 1e-12 of a period boundary onto it so that lattice-aligned times
/// decompose exactly.
fn split_phase<T: FloatScalar>(x: T, period: T) -> (i64, T) {
    let mut q = (x / period).floor();
    let mut r = x - q * period;
    let snap = period * T::c(1e-12);
    if r < T::zero() {
        r += period;
        q = q - T::one();
    }
    if r <= snap {
        r = T::zero();
    } else if period - r <= snap {
        r = T::zero();
        q = q + T::one();
    }
    (q.to_f64().unwrap().round() as i64, r)
}

/// One-call convenience wrapper: S(t, s) for the given operator and tolerance.
pub fn propagator<T: FloatScalar>(
    op: &TimeVaryingOperator<T>,
    s: T,
    t: T,
    tol: T,
) -> Result<Matrix<T>> {
    Propagator::new(op, tol)?.matrix(s, t)
}

// ── Fixed-order integration with step halving ───────────────────────────────

/// Classical fourth-order step on the matrix equation, n uniform steps over
/// [s, t].  Assumes the coefficient is smooth on the interval; callers split
/// at breakpoints first.
fn rk4_matrix<T: FloatScalar>(op: &TimeVaryingOperator<T>, s: T, t: T, n: usize) -> Matrix<T> {
    let mut sol = Matrix::identity(op.dim());
    let h = (t - s) / T::c(n as f64);
    let half = h * T::c(0.5);
    let sixth = h / T::c(6.0);
    for j in 0..n {
        let t0 = s + h * T::c(j as f64);
        let a0 = op.eval(t0);
        let am = op.eval(t0 + half);
        let a1 = op.eval(t0 + h);
        let k1 = a0.matmul(&sol);
        let k2 = am.matmul(&sol.add(&k1.scale_real(half)));
        let k3 = am.matmul(&sol.add(&k2.scale_real(half)));
        let k4 = a1.matmul(&sol.add(&k3.scale_real(h)));
        let incr = k1
            .add(&k2.scale_real(T::c(2.0)))
            .add(&k3.scale_real(T::c(2.0)))
            .add(&k4);
        sol = sol.add(&incr.scale_real(sixth));
    }
    sol
}

fn initial_steps<T: FloatScalar>(op: &TimeVaryingOperator<T>, span: T) -> Result<usize> {
    let want = (span * op.resolution_rate()).ceil();
    let want = want.to_f64().unwrap_or(f64::INFINITY);
    if !(want < STEP_CAP as f64) {
        return Err(Error::Numeric(format!(
            "integration over a span of {span} would exceed the step cap before \
             refinement; shorten the interval"
        )));
    }
    Ok((want as usize).max(2))
}

/// Integrates the matrix equation over a smooth interval, halving the step
/// until two refinements agree entrywise within tol (relative to the result's
/// magnitude, with an absolute floor at 1), then returns the Richardson
/// extrapolation of the finest pair.
fn integrate_matrix<T: FloatScalar>(
    op: &TimeVaryingOperator<T>,
    s: T,
    t: T,
    tol: T,
) -> Result<Matrix<T>> {
    let mut n = initial_steps(op, t - s)?;
    let mut coarse = rk4_matrix(op, s, t, n);
    loop {
        if n > STEP_CAP / 2 {
            return Err(Error::Numeric(format!(
                "integration over [{s}, {t}] did not converge within the step cap; \
                 increase the tolerance or shorten the interval"
            )));
        }
        n *= 2;
        let fine = rk4_matrix(op, s, t, n);
        let diff = fine.sub(&coarse).max_abs();
        let scale = T::one().max(fine.max_abs());
        if diff <= tol * scale {
            // Fourth-order Richardson extrapolation of the (n, 2n) pair.
            let corr = fine.sub(&coarse).scale_real(T::one() / T::c(15.0));
            return Ok(fine.add(&corr));
        }
        coarse = fine;
    }
}

// ── Trajectories ────────────────────────────────────────────────────────────

/// One sample of a propagated state.
#[derive(Clone, Debug)]
pub struct TrajectoryPoint<T: FloatScalar> {
    pub t: T,
    pub state: Vec<C<T>>,
    pub norm: T,
}

fn rk4_vector<T: FloatScalar>(
    op: &TimeVaryingOperator<T>,
    s: T,
    t: T,
    n: usize,
    x0: &[C<T>],
) -> Vec<C<T>> {
    let mut x = x0.to_vec();
    let h = (t - s) / T::c(n as f64);
    let half = h * T::c(0.5);
    let sixth = h / T::c(6.0);
    let dim = x.len();
    let axpy = |x: &[C<T>], k: &[C<T>], c: T| -> Vec<C<T>> {
        let cc = C::new(c, T::zero());
        (0..dim).map(|i| x[i] + k[i] * cc).collect()
    };
    for j in 0..n {
        let t0 = s + h * T::c(j as f64);
        let a0 = op.eval(t0);
        let am = op.eval(t0 + half);
        let a1 = op.eval(t0 + h);
        let k1 = a0.matvec(&x);
        let k2 = am.matvec(&axpy(&x, &k1, half));
        let k3 = am.matvec(&axpy(&x, &k2, half));
        let k4 = a1.matvec(&axpy(&x, &k3, h));
        let csix = C::new(sixth, T::zero());
        let two = C::new(T::c(2.0), T::zero());
        for i in 0..dim {
            x[i] = x[i] + (k1[i] + two * k2[i] + two * k3[i] + k4[i]) * csix;
        }
    }
    x
}

fn integrate_vector<T: FloatScalar>(
    op: &TimeVaryingOperator<T>,
    s: T,
    t: T,
    tol: T,
    x0: &[C<T>],
) -> Result<Vec<C<T>>> {
    let mut n = initial_steps(op, t - s)?;
    let mut coarse = rk4_vector(op, s, t, n, x0);
    loop {
        if n > STEP_CAP / 2 {
            return Err(Error::Numeric(format!(
                "trajectory integration over [{s}, {t}] did not converge within the \
                 step cap; increase the tolerance or shorten the interval"
            )));
        }
        n *= 2;
        let fine = rk4_vector(op, s, t, n, x0);
        let mut diff = T::zero();
        let mut mag = T::zero();
        for i in 0..fine.len() {
            let d = fine[i] - coarse[i];
            diff = diff.max(d.re.abs().max(d.im.abs()));
            mag = mag.max(fine[i].re.abs().max(fine[i].im.abs()));
        }
        if diff <= tol * T::one().max(mag) {
            let fifteenth = C::new(T::one() / T::c(15.0), T::zero());
            return Ok((0..fine.len())
                .map(|i| fine[i] + (fine[i] - coarse[i]) * fifteenth)
                .collect());
        }
        coarse = fine;
    }
}

/// Propagates x' = A(t) x from `grid[0]` through every grid time, reporting
/// the state and its Euclidean norm at each.  Grid times must be
/// nondecreasing.  Constant stretches advance by cached matrix exponentials;
/// time-varying stretches are integrated with the same step-halving scheme as
/// the matrix propagator.
pub fn trajectory<T: FloatScalar>(
    op: &TimeVaryingOperator<T>,
    x0: &[C<T>],
    grid: &[T],
    tol: T,
) -> Result<Vec<TrajectoryPoint<T>>> {
    if x0.len() != op.dim() {
        return Err(Error::InvalidInput(format!(
            "initial state has length {}, operator dimension is {}",
            x0.len(),
            op.dim()
        )));
    }
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty time grid".into()));
    }
    if !(tol > T::zero()) || !tol.is_finite() {
        return Err(Error::Parameter(format!(
            "integration tolerance must be positive and finite, got {tol}"
        )));
    }
    for w in grid.windows(2) {
        if w[1] < w[0] {
            return Err(Error::InvalidInput(
                "trajectory grid times must be nondecreasing".into(),
            ));
        }
    }
    let mut exps: HashMap<(usize, u64), Matrix<T>> = HashMap::new();
    let mut x = x0.to_vec();
    let mut out = Vec::with_capacity(grid.len());
    out.push(TrajectoryPoint {
        t: grid[0],
        state: x.clone(),
        norm: vec_norm(&x),
    });
    for w in grid.windows(2) {
        let (u, v) = (w[0], w[1]);
        if v > u {
            let mut pts = op.breakpoints(u, v);
            pts.insert(0, u);
            pts.push(v);
            let seg_tol = tol / T::c((pts.len() - 1) as f64);
            for seg in pts.windows(2) {
                let (a, b) = (seg[0], seg[1]);
                if b <= a {
                    continue;
                }
                match op.constant_span(a, b) {
                    Some((id, mat)) => {
                        let key = (id, bits(b - a));
                        let e = match exps.get(&key) {
                            Some(e) => e.clone(),
                            None => {
                                let e = matrix_exp(&mat.scale_real(b - a))?;
                                exps.insert(key, e.clone());
                                e
                            }
                        };
                        x = e.matvec(&x);
                    }
                    None => {
                        x = integrate_vector(op, a, b, seg_tol, &x)?;
                    }
                }
            }
        }
        out.push(TrajectoryPoint {
            t: v,
            state: x.clone(),
            norm: vec_norm(&x),
        });
    }
    Ok(out)
}

// ── Exponential-bound certificates ──────────────────────────────────────────

/// Outcome of checking measured propagator norms against C e^{beta (t - s)}.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

/// One measured grid pair.
#[derive(Clone, Copy, Debug)]
pub struct SamplePair<T> {
    pub s: T,
    pub t: T,
    /// Measured ||S(t, s)||.
    pub norm: T,
    /// C e^{beta (t - s)}.
    pub bound: T,
    pub ratio: T,
}

/// A propagation failure encountered while certifying.
#[derive(Clone, Debug)]
pub struct CertFailure<T> {
    pub s: T,
    pub t: T,
    pub message: String,
}

/// The record of a bound check: every sampled pair, the worst ratio, and the
/// verdict.  Passes iff all pairs were measured and `max_ratio <= 1 + tol`.
#[derive(Clone, Debug)]
pub struct StabilityCertificate<T: FloatScalar> {
    pub c: T,
    pub beta: T,
    pub pairs: Vec<SamplePair<T>>,
    pub max_ratio: T,
    pub tol: T,
    pub verdict: Verdict,
    /// Set when propagation failed on some pair; the certificate is then
    /// incomplete and the verdict is Fail.
    pub failure: Option<CertFailure<T>>,
}

impl<T: FloatScalar> StabilityCertificate<T> {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Measures ||S(t, s)|| on every grid pair and compares against
/// C e^{beta (t - s)}.  C must be at least 1 (S(s, s) = I already has norm 1).
pub fn certify_bound<T: FloatScalar>(
    prop: &Propagator<'_, T>,
    c: T,
    beta: T,
    pairs: &[(T, T)],
    tol_cert: T,
) -> Result<StabilityCertificate<T>> {
    if !(c >= T::one()) {
        return Err(Error::Parameter(format!(
            "certificate prefactor must be at least 1, got {c}"
        )));
    }
    if !beta.is_finite() {
        return Err(Error::Parameter("certificate rate must be finite".into()));
    }
    if !(tol_cert >= T::zero()) || !tol_cert.is_finite() {
        return Err(Error::Parameter(format!(
            "certificate slack must be nonnegative and finite, got {tol_cert}"
        )));
    }
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no certification pairs given".into()));
    }
    let mut out = Vec::with_capacity(pairs.len());
    let mut max_ratio = T::zero();
    let mut failure = None;
    for &(s, t) in pairs {
        let norm = match prop.matrix(s, t).and_then(|m| operator_norm(&m)) {
            Ok(n) => n,
            Err(e) => {
                failure = Some(CertFailure {
                    s,
                    t,
                    message: e.to_string(),
                });
                break;
            }
        };
        let bound = c * (beta * (t - s)).exp();
        let ratio = norm / bound;
        max_ratio = max_ratio.max(ratio);
        out.push(SamplePair {
            s,
            t,
            norm,
            bound,
            ratio,
        });
    }
    let complete = failure.is_none();
    let verdict = if complete && max_ratio <= T::one() + tol_cert {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(StabilityCertificate {
        c,
        beta,
        pairs: out,
        max_ratio,
        tol: tol_cert,
        verdict,
        failure,
    })
}

/// The default certification grid on [0, t_end]: start points 0, h, 2h, ...
/// paired with spans h/4, h/2, h, 2h, 4h, clipped to the domain.
pub fn default_grid<T: FloatScalar>(t_end: T, h: T) -> Result<Vec<(T, T)>> {
    if !(h > T::zero()) || !h.is_finite() || !(t_end > T::zero()) || !t_end.is_finite() {
        return Err(Error::Parameter(format!(
            "grid parameters must be positive and finite, got t_end = {t_end}, h = {h}"
        )));
    }
    let spans = [
        h * T::c(0.25),
        h * T::c(0.5),
        h,
        h * T::c(2.0),
        h * T::c(4.0),
    ];
    let mut pairs = Vec::new();
    let mut j = 0usize;
    loop {
        let s = h * T::c(j as f64);
        if s >= t_end {
            break;
        }
        for &span in &spans {
            let t = (s + span).min(t_end);
            if t > s {
                pairs.push((s, t));
            }
        }
        j += 1;
        if j > 100_000_000 {
            return Err(Error::Numeric(
                "certification grid would have more than 1e8 start points".into(),
            ));
        }
    }
    pairs.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    Ok(pairs)
}

// ── Tests ───────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;

    fn close<T: FloatScalar>(a: &Matrix<T>, b: &Matrix<T>, tol: T) -> bool {
        a.sub(b).max_abs() <= tol
    }

    #[test]
    fn constant_matches_exponential() {
        let a = Matrix::<f64>::from_real_rows(&[
            vec![-0.4, 0.9, 0.1],
            vec![0.0, -0.7, 0.3],
            vec![0.2, -0.1, -0.2],
        ]);
        let op = TimeVaryingOperator::constant(a.clone()).unwrap();
        let s = propagator(&op, 0.3, 1.7, 1e-10).unwrap();
        let want = matrix_exp(&a.scale_real(1.4)).unwrap();
        assert!(close(&s, &want, 1e-10));
    }

    #[test]
    fn zero_coefficient_freezes_the_state() {
        let op = TimeVaryingOperator::constant(Matrix::<f64>::zeros(3)).unwrap();
        let s = propagator(&op, 0.0, 5.0, 1e-10).unwrap();
        assert!(close(&s, &Matrix::identity(3), 1e-14));
    }

    fn oscillating_op() -> TimeVaryingOperator<f64> {
        let base = Matrix::from_real_rows(&[vec![-0.3, 0.2], vec![0.0, -0.5]]);
        let fac = Matrix::from_real_rows(&[vec![0.0, 1.0], vec![-1.0, 0.1]]);
        TimeVaryingOperator::signal_product(Signal::cosine(2.0, 0.0), fac, base).unwrap()
    }

    #[test]
    fn cocycle_law_holds_on_subdivisions() {
        let op = oscillating_op();
        let tol = 1e-9;
        let p = Propagator::new(&op, tol).unwrap();
        let whole = p.matrix(0.0, 2.6).unwrap();
        let first = p.matrix(0.0, 1.3).unwrap();
        let second = p.matrix(1.3, 2.6).unwrap();
        let glued = second.matmul(&first);
        assert!(close(&whole, &glued, 10.0 * tol));
    }

    #[test]
    fn powering_agrees_with_direct_stepping() {
        let op = oscillating_op();
        let p = Propagator::new(&op, 1e-10).unwrap();
        // Period pi; span 13 crosses four whole periods, so matrix() takes
        // the powering route.  Compare against the direct chain.
        let fast = p.matrix(0.4, 13.4).unwrap();
        let slow = p.chained(0.4, 13.4).unwrap();
        assert!(close(&fast, &slow, 1e-7));
    }

    #[test]
    fn halving_the_tolerance_barely_moves_the_norms() {
        let op = oscillating_op();
        let tol = 1e-8;
        let coarse = propagator(&op, 0.0, 3.0, tol).unwrap();
        let fine = propagator(&op, 0.0, 3.0, tol / 2.0).unwrap();
        let d = operator_norm(&coarse).unwrap() - operator_norm(&fine).unwrap();
        assert!(d.abs() < 5.0 * tol);
    }

    #[test]
    fn pulse_one_period_matches_closed_form() {
        // Hold diag(-1, -2) for 1.5 units, then rotate at rate pi for 0.5
        // units (a quarter turn).  One period maps e1 -> e^{-1.5} e2 and
        // e2 -> -e^{-3} e1.
        let hold = Matrix::<f64>::from_real_rows(&[vec![-1.0, 0.0], vec![0.0, -2.0]]);
        let spin = Matrix::<f64>::from_real_rows(&[
            vec![0.0, -std::f64::consts::PI],
            vec![std::f64::consts::PI, 0.0],
        ]);
        let op = TimeVaryingOperator::periodic_pulse(vec![(1.5, hold), (0.5, spin)]).unwrap();
        let m = propagator(&op, 0.0, 2.0, 1e-12).unwrap();
        assert!((m[(0, 0)].re).abs() < 1e-8);
        assert!((m[(1, 1)].re).abs() < 1e-8);
        assert!((m[(1, 0)].re - (-1.5f64).exp()).abs() < 1e-8);
        assert!((m[(0, 1)].re + (-3.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn pulse_powering_matches_segment_chaining() {
        let hold = Matrix::<f64>::from_real_rows(&[vec![-0.2, 0.1], vec![0.0, -0.3]]);
        let spin = Matrix::<f64>::from_real_rows(&[vec![0.0, -1.1], vec![1.1, 0.0]]);
        let op = TimeVaryingOperator::periodic_pulse(vec![(0.7, hold), (0.3, spin)]).unwrap();
        let p = Propagator::new(&op, 1e-11).unwrap();
        let fast = p.matrix(0.35, 7.15).unwrap();
        // Chain ten adjacent sub-period pieces through the cocycle law.
        let mut slow = Matrix::<f64>::identity(2);
        let cuts: Vec<f64> = (0..=17).map(|k| 0.35 + 0.4 * k as f64).collect();
        for w in cuts.windows(2) {
            slow = p.chained(w[0], w[1]).unwrap().matmul(&slow);
        }
        assert!(close(&fast, &slow, 1e-9));
    }

    #[test]
    fn schedule_holds_blends_and_clamps() {
        let a0 = Matrix::<f64>::diag_real(&[-1.0, -2.0]);
        let a1 = Matrix::<f64>::diag_real(&[-3.0, -0.5]);
        let op = TimeVaryingOperator::schedule(vec![
            (0.0, a0.clone()),
            (2.0, a0.clone()),
            (3.0, a1.clone()),
            (5.0, a1.clone()),
        ])
        .unwrap();
        assert!(close(&op.eval(1.0), &a0, 0.0));
        assert!(close(&op.eval(-4.0), &a0, 0.0));
        assert!(close(&op.eval(7.0), &a1, 0.0));
        let mid = a0.scale_real(0.5).add(&a1.scale_real(0.5));
        assert!(close(&op.eval(2.5), &mid, 1e-15));
        // A span inside a constant stretch is a pure matrix exponential.
        let p = Propagator::new(&op, 1e-10).unwrap();
        let s = p.matrix(3.5, 4.5).unwrap();
        assert!(close(&s, &matrix_exp(&a1).unwrap(), 1e-12));
        // And the whole window glues segments and the blend together.
        let whole = p.matrix(0.0, 5.0).unwrap();
        let glued = p
            .matrix(3.0, 5.0)
            .unwrap()
            .matmul(&p.matrix(2.0, 3.0).unwrap())
            .matmul(&p.matrix(0.0, 2.0).unwrap());
        assert!(close(&whole, &glued, 1e-8));
    }

    #[test]
    fn evaluation_stays_within_the_sup_bound() {
        let ops = [
            oscillating_op(),
            TimeVaryingOperator::constant(Matrix::from_real_rows(&[
                vec![0.0, 2.0],
                vec![-1.0, 0.5],
            ]))
            .unwrap(),
        ];
        for op in &ops {
            for k in 0..20 {
                let t = -1.0 + 0.37 * k as f64;
                let n = operator_norm(&op.eval(t)).unwrap();
                assert!(
                    n <= op.sup_norm_bound() + 1e-9,
                    "norm {n} exceeds bound {}",
                    op.sup_norm_bound()
                );
            }
        }
    }

    #[test]
    fn backward_propagation_is_rejected() {
        let op = oscillating_op();
        let e = propagator(&op, 1.0, 0.0, 1e-9).unwrap_err();
        assert!(matches!(e, Error::InvalidInput(_)));
    }

    #[test]
    fn trajectory_matches_closed_form_decay() {
        let op =
            TimeVaryingOperator::constant(Matrix::<f64>::diag_real(&[-1.0, -2.0])).unwrap();
        let x0 = [C::new(3.0, 0.0), C::new(4.0, 0.0)];
        let grid: Vec<f64> = (0..=10).map(|k| 0.5 * k as f64).collect();
        let pts = trajectory(&op, &x0, &grid, 1e-10).unwrap();
        assert_eq!(pts.len(), grid.len());
        for p in &pts {
            let want =
                (9.0 * (-2.0 * p.t).exp() + 16.0 * (-4.0 * p.t).exp()).sqrt();
            assert!((p.norm - want).abs() < 1e-9 * (1.0 + want));
        }
    }

    #[test]
    fn trajectory_agrees_with_matrix_propagator() {
        let op = oscillating_op();
        let x0 = [C::new(1.0, 0.0), C::new(-2.0, 0.0)];
        let grid = [0.0, 0.9, 1.7, 2.4];
        let pts = trajectory(&op, &x0, &grid, 1e-10).unwrap();
        let p = Propagator::new(&op, 1e-10).unwrap();
        for pt in &pts {
            let s = p.matrix(0.0, pt.t).unwrap();
            let want = s.matvec(&x0);
            for i in 0..2 {
                assert!((pt.state[i] - want[i]).norm() < 1e-7);
            }
        }
    }

    #[test]
    fn certificate_accepts_the_true_rate() {
        let op =
            TimeVaryingOperator::constant(Matrix::<f64>::diag_real(&[-1.0, -1.0])).unwrap();
        let p = Propagator::new(&op, 1e-10).unwrap();
        let grid = default_grid(5.0, 1.0).unwrap();
        let cert = certify_bound(&p, 1.0, -1.0, &grid, DEFAULT_CERT_TOL).unwrap();
        assert!(cert.passed());
        assert!((cert.max_ratio - 1.0).abs() < 1e-8);
        assert_eq!(cert.pairs.len(), grid.len());
    }

    #[test]
    fn certificate_rejects_a_rate_below_the_truth() {
        let op =
            TimeVaryingOperator::constant(Matrix::<f64>::diag_real(&[-1.0, -1.0])).unwrap();
        let p = Propagator::new(&op, 1e-10).unwrap();
        let grid = default_grid(5.0, 1.0).unwrap();
        let cert = certify_bound(&p, 1.0, -1.1, &grid, DEFAULT_CERT_TOL).unwrap();
        assert_eq!(cert.verdict, Verdict::Fail);
        assert!(cert.max_ratio > 1.0 + 1e-3);
        assert!(cert.failure.is_none());
    }

    #[test]
    fn certificate_prefactor_below_one_is_rejected() {
        let op = TimeVaryingOperator::constant(Matrix::<f64>::identity(2)).unwrap();
        let p = Propagator::new(&op, 1e-9).unwrap();
        let e = certify_bound(&p, 0.5, 0.0, &[(0.0, 1.0)], 1e-6).unwrap_err();
        assert!(matches!(e, Error::Parameter(_)));
    }

    #[test]
    fn default_grid_clips_to_the_domain() {
        let grid = default_grid(2.0, 1.0).unwrap();
        assert_eq!(
            grid,
            vec![
                (0.0, 0.25),
                (0.0, 0.5),
                (0.0, 1.0),
                (0.0, 2.0),
                (1.0, 1.25),
                (1.0, 1.5),
                (1.0, 2.0),
            ]
        );
    }

    #[test]
    fn propagator_of_an_isometry_generator_is_an_isometry() {
        // A(t) = skew constant: the flow is orthogonal, so S^T S = I.
        let a = Matrix::<f64>::from_real_rows(&[vec![0.0, -1.3], vec![1.3, 0.0]]);
        let op = TimeVaryingOperator::constant(a).unwrap();
        let s = propagator(&op, 0.0, 2.7, 1e-12).unwrap();
        let gram = s.adjoint().matmul(&s);
        assert!(gram.sub(&Matrix::identity(2)).max_abs() < 1e-10);
    }
}
