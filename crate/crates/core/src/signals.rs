//! Scalar driving signals and their averaged behavior.
//!
//! Perturbations in this crate have the separated form b(t) * B with a fixed
//! matrix B, so everything time-dependent funnels through a small class of
//! scalar signals: constants, cosines, a compactly supported bump
//! d(t) = sqrt(1 - t^2) on [-1, 1], and the closure of those under sums,
//! scaling, and time dilation b(t) -> b(w t). The class is deliberately tiny;
//! each member carries a declared sup bound, knows where its derivative has
//! kinks, and can describe its long-time behavior (constant or periodic
//! tail), which downstream propagator code exploits.
//!
//! The quantitative questions asked of a signal are all integral averages:
//! windowed means (1/T) int_a^(a+T) b, the threshold T0 past which every
//! windowed mean stays below a tolerance uniformly in the window start, and
//! the sliding-window integral bound sup |int_(t1)^(t2) b| over t2 - t1 <= h.
//! Those are computed from adaptive Simpson quadrature and cumulative
//! antiderivative tables rather than closed forms, so they work for any
//! member of the class and can be cross-checked against the closed forms in
//! the tests.

use crate::error::{Error, Result};
use crate::scalar::FloatScalar;

// ── Signal expressions ──────────────────────────────────────────────────

/// Expression tree over the signal primitives. Evaluation is exact given the
/// tree; the interesting structure lives in the derived metadata (sup bound,
/// kink locations, tail behavior).
#[derive(Clone, Debug, PartialEq)]
pub enum Signal<T> {
    /// Constant value.
    Const(T),
    /// cos(freq * t + phase), amplitude fixed at 1 (use [`Signal::Scale`]).
    Cos { freq: T, phase: T },
    /// sqrt(1 - t^2) on [-1, 1], zero elsewhere; continuous, with derivative
    /// kinks at the support edges.
    Bump,
    /// c * e(t).
    Scale(T, Box<Signal<T>>),
    /// e1(t) + e2(t).
    Sum(Box<Signal<T>>, Box<Signal<T>>),
    /// e(w * t): time dilation, the rapid-oscillation knob.
    Dilate(T, Box<Signal<T>>),
}

/// Long-time behavior of a signal, when it has a simple one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tail<T> {
    /// Identically equal to `value` for all t >= `from`.
    Constant { value: T, from: T },
    /// Periodic with the given period for all t >= `from`.
    Periodic { period: T, from: T },
}

impl<T: FloatScalar> Signal<T> {
    pub fn eval(&self, t: T) -> T {
        match self {
            Signal::Const(c) => *c,
            Signal::Cos { freq, phase } => (*freq * t + *phase).cos(),
            Signal::Bump => {
                if t.abs() <= T::one() {
                    (T::one() - t * t).max(T::zero()).sqrt()
                } else {
                    T::zero()
                }
            }
            Signal::Scale(c, e) => *c * e.eval(t),
            Signal::Sum(a, b) => a.eval(t) + b.eval(t),
            Signal::Dilate(w, e) => e.eval(*w * t),
        }
    }

    /// Declared sup-norm bound M_b: |eval(t)| <= sup_bound() for all t. For
    /// sums this is the triangle inequality, which may overestimate.
    pub fn sup_bound(&self) -> T {
        match self {
            Signal::Const(c) => c.abs(),
            Signal::Cos { .. } => T::one(),
            Signal::Bump => T::one(),
            Signal::Scale(c, e) => c.abs() * e.sup_bound(),
            Signal::Sum(a, b) => a.sup_bound() + b.sup_bound(),
            Signal::Dilate(_, e) => e.sup_bound(),
        }
    }

    /// Locations where the derivative is discontinuous or unbounded (the
    /// bump's support edges, propagated through the combinators). Quadrature
    /// panels are split here so smooth-integrand error estimates stay valid.
    pub fn knots(&self) -> Vec<T> {
        let mut ks = Vec::new();
        self.collect_knots(T::one(), &mut ks);
        ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ks.dedup();
        ks
    }

    fn collect_knots(&self, time_scale: T, out: &mut Vec<T>) {
        match self {
            Signal::Const(_) | Signal::Cos { .. } => {}
            Signal::Bump => {
                out.push(-T::one() / time_scale);
                out.push(T::one() / time_scale);
            }
            Signal::Scale(_, e) => e.collect_knots(time_scale, out),
            Signal::Sum(a, b) => {
                a.collect_knots(time_scale, out);
                b.collect_knots(time_scale, out);
            }
            Signal::Dilate(w, e) => e.collect_knots(time_scale * *w, out),
        }
    }

    /// Fastest angular frequency appearing anywhere in the tree, with time
    /// dilations folded in; 1 at minimum. Used to pick resolving step sizes.
    pub fn freq_scale(&self) -> T {
        self.freq_scale_inner(T::one()).max(T::one())
    }

    fn freq_scale_inner(&self, time_scale: T) -> T {
        match self {
            Signal::Const(_) => T::zero(),
            Signal::Cos { freq, .. } => freq.abs() * time_scale,
            Signal::Bump => time_scale,
            Signal::Scale(_, e) => e.freq_scale_inner(time_scale),
            Signal::Sum(a, b) => {
                a.freq_scale_inner(time_scale).max(b.freq_scale_inner(time_scale))
            }
            Signal::Dilate(w, e) => e.freq_scale_inner(time_scale * w.abs()),
        }
    }

    /// Eventual behavior for large t, when expressible: a constant value from
    /// some time on, or exact periodicity from some time on. Sums of two
    /// periodic parts with different periods return None (no commensuration
    /// analysis is attempted).
    pub fn tail(&self) -> Option<Tail<T>> {
        match self {
            Signal::Const(c) => {
                Some(Tail::Constant { value: *c, from: T::neg_infinity() })
            }
            Signal::Cos { freq, phase: _ } => {
                if *freq == T::zero() {
                    Some(Tail::Constant { value: self.eval(T::zero()), from: T::neg_infinity() })
                } else {
                    Some(Tail::Periodic {
                        period: T::c(2.0) * T::c(std::f64::consts::PI) / freq.abs(),
                        from: T::neg_infinity(),
                    })
                }
            }
            Signal::Bump => Some(Tail::Constant { value: T::zero(), from: T::one() }),
            Signal::Scale(c, e) => match e.tail()? {
                Tail::Constant { value, from } => {
                    Some(Tail::Constant { value: *c * value, from })
                }
                Tail::Periodic { period, from } => {
                    if *c == T::zero() {
                        Some(Tail::Constant { value: T::zero(), from })
                    } else {
                        Some(Tail::Periodic { period, from })
                    }
                }
            },
            Signal::Sum(a, b) => match (a.tail()?, b.tail()?) {
                (
                    Tail::Constant { value: va, from: fa },
                    Tail::Constant { value: vb, from: fb },
                ) => Some(Tail::Constant { value: va + vb, from: fa.max(fb) }),
                (Tail::Constant { from: fa, .. }, Tail::Periodic { period, from: fb })
                | (Tail::Periodic { period, from: fb }, Tail::Constant { from: fa, .. }) => {
                    Some(Tail::Periodic { period, from: fa.max(fb) })
                }
                (
                    Tail::Periodic { period: pa, from: fa },
                    Tail::Periodic { period: pb, from: fb },
                ) => {
                    if pa == pb {
                        Some(Tail::Periodic { period: pa, from: fa.max(fb) })
                    } else {
                        None
                    }
                }
            },
            Signal::Dilate(w, e) => {
                if *w == T::zero() {
                    return Some(Tail::Constant { value: e.eval(T::zero()), from: T::neg_infinity() });
                }
                match e.tail()? {
                    Tail::Constant { value, from } => Some(Tail::Constant {
                        value,
                        from: if from.is_infinite() { from } else { from / *w },
                    }),
                    Tail::Periodic { period, from } => Some(Tail::Periodic {
                        period: period / w.abs(),
                        from: if from.is_infinite() { from } else { from / *w },
                    }),
                }
            }
        }
    }

    // convenience builders, so call sites read like the formulas they encode

    pub fn constant(c: T) -> Self {
        Signal::Const(c)
    }

    pub fn cosine(freq: T, phase: T) -> Self {
        Signal::Cos { freq, phase }
    }

    pub fn bump() -> Self {
        Signal::Bump
    }

    pub fn plus(self, other: Signal<T>) -> Self {
        Signal::Sum(Box::new(self), Box::new(other))
    }

    pub fn scaled(self, c: T) -> Self {
        Signal::Scale(c, Box::new(self))
    }

    pub fn dilated(self, w: T) -> Self {
        Signal::Dilate(w, Box::new(self))
    }

    /// Serializes back to the expression grammar accepted by
    /// [`parse_signal`]; round-trips exactly.
    pub fn to_expr_string(&self) -> String {
        match self {
            Signal::Const(c) => format!("const({c})"),
            Signal::Cos { freq, phase } => format!("cos({freq},{phase})"),
            Signal::Bump => "bump".to_string(),
            Signal::Scale(c, e) => format!("scale({c},{})", e.to_expr_string()),
            Signal::Sum(a, b) => {
                format!("sum({},{})", a.to_expr_string(), b.to_expr_string())
            }
            Signal::Dilate(w, e) => format!("dilate({w},{})", e.to_expr_string()),
        }
    }
}

// ── Expression grammar ──────────────────────────────────────────────────

/// Parses the textual signal grammar used in experiment configs:
///
/// ```text
/// expr := const(c) | cos(f,p) | bump | scale(c,expr) | sum(expr,expr)
///       | dilate(w,expr)
/// ```
///
/// Numbers are plain decimal literals (scientific notation allowed);
/// whitespace is free.
pub fn parse_signal<T: FloatScalar>(text: &str) -> Result<Signal<T>> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let sig = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(Error::InvalidInput(format!(
            "trailing input at byte {} in signal expression",
            p.pos
        )));
    }
    Ok(sig)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn expect(&mut self, ch: u8) -> Result<()> {
        self.skip_ws();
        if self.pos < self.src.len() && self.src[self.pos] == ch {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "expected '{}' at byte {} in signal expression",
                ch as char, self.pos
            )))
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(Error::InvalidInput(format!(
                "expected a signal name at byte {start}"
            )));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn number<T: FloatScalar>(&mut self) -> Result<T> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_digit()
                || c == b'.'
                || c == b'-'
                || c == b'+'
                || c == b'e'
                || c == b'E'
            {
                self.pos += 1;
            } else {
                break;
            }
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        let v: f64 = s.parse().map_err(|_| {
            Error::InvalidInput(format!("bad number '{s}' at byte {start}"))
        })?;
        Ok(T::c(v))
    }

    fn expr<T: FloatScalar>(&mut self) -> Result<Signal<T>> {
        let name = self.ident()?;
        match name.as_str() {
            "bump" => Ok(Signal::Bump),
            "const" => {
                self.expect(b'(')?;
                let c = self.number()?;
                self.expect(b')')?;
                Ok(Signal::Const(c))
            }
            "cos" => {
                self.expect(b'(')?;
                let f = self.number()?;
                self.expect(b',')?;
                let p = self.number()?;
                self.expect(b')')?;
                Ok(Signal::Cos { freq: f, phase: p })
            }
            "scale" => {
                self.expect(b'(')?;
                let c = self.number()?;
                self.expect(b',')?;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(Signal::Scale(c, Box::new(e)))
            }
            "sum" => {
                self.expect(b'(')?;
                let a = self.expr()?;
                self.expect(b',')?;
                let b = self.expr()?;
                self.expect(b')')?;
                Ok(Signal::Sum(Box::new(a), Box::new(b)))
            }
            "dilate" => {
                self.expect(b'(')?;
                let w = self.number()?;
                self.expect(b',')?;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(Signal::Dilate(w, Box::new(e)))
            }
            other => Err(Error::InvalidInput(format!(
                "unknown signal constructor '{other}'"
            ))),
        }
    }
}

// ── Quadrature ──────────────────────────────────────────────────────────

/// Integral of the signal over [lo, hi] by adaptive Simpson quadrature with
/// panels split at the signal's kinks (and into unit-length chunks, so the
/// error budget spreads evenly over long windows). Absolute error target
/// `tol`; exceeding the refinement depth is a numeric error.
pub fn integrate<T: FloatScalar>(b: &Signal<T>, lo: T, hi: T, tol: T) -> Result<T> {
    if !(hi >= lo) {
        return Err(Error::InvalidInput("integration interval is reversed".into()));
    }
    if hi == lo {
        return Ok(T::zero());
    }
    let mut cuts = vec![lo];
    for k in b.knots() {
        if k > lo && k < hi {
            cuts.push(k);
        }
    }
    cuts.push(hi);
    cuts.sort_by(|a, c| a.partial_cmp(c).unwrap());
    // split long panels into unit chunks
    let mut panels = Vec::new();
    for w in cuts.windows(2) {
        let (a, c) = (w[0], w[1]);
        if c <= a {
            continue;
        }
        let n = ((c - a).to_f64().unwrap()).ceil().max(1.0) as usize;
        let width = (c - a) / T::from_usize(n).unwrap();
        for i in 0..n {
            let s = a + width * T::from_usize(i).unwrap();
            let e = if i + 1 == n { c } else { s + width };
            panels.push((s, e));
        }
    }
    let per_panel = tol / T::from_usize(panels.len().max(1)).unwrap();
    let mut total = T::zero();
    for (s, e) in panels {
        total += adaptive_panel(b, s, e, per_panel)?;
    }
    Ok(total)
}

fn adaptive_panel<T: FloatScalar>(b: &Signal<T>, lo: T, hi: T, tol: T) -> Result<T> {
    let half = T::c(0.5);
    let m = (lo + hi) * half;
    let (fa, fm, fb) = (b.eval(lo), b.eval(m), b.eval(hi));
    let whole = simpson(lo, hi, fa, fm, fb);
    adaptive_rec(b, lo, m, hi, fa, fm, fb, whole, tol, 48)
}

fn simpson<T: FloatScalar>(lo: T, hi: T, fa: T, fm: T, fb: T) -> T {
    (hi - lo) / T::c(6.0) * (fa + T::c(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_rec<T: FloatScalar>(
    b: &Signal<T>,
    lo: T,
    mid: T,
    hi: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
) -> Result<T> {
    let half = T::c(0.5);
    let lm = (lo + mid) * half;
    let rm = (mid + hi) * half;
    let (flm, frm) = (b.eval(lm), b.eval(rm));
    let left = simpson(lo, mid, fa, flm, fm);
    let right = simpson(mid, hi, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= T::c(15.0) * tol || (hi - lo) < T::eps() * (lo.abs() + hi.abs() + T::one())
    {
        return Ok(left + right + delta / T::c(15.0));
    }
    if depth == 0 {
        return Err(Error::Numeric(
            "quadrature failed to converge at requested tolerance".into(),
        ));
    }
    // halve the budget going down, but never below what the arithmetic can
    // resolve: endpoint kinks (the bump edges) otherwise demand depths that
    // only chase rounding noise
    let child_tol = (tol * half).max(T::c(4.0) * T::eps() * (T::one() + whole.abs()));
    let tl = adaptive_rec(b, lo, lm, mid, fa, flm, fm, left, child_tol, depth - 1)?;
    let tr = adaptive_rec(b, mid, rm, hi, fm, frm, fb, right, child_tol, depth - 1)?;
    Ok(tl + tr)
}

// ── Windowed means ──────────────────────────────────────────────────────

/// A windowed-average measurement: the average of (1/T) int_a^(a+T) b over a
/// grid of window starts, with the spread across starts kept alongside.
#[derive(Clone, Debug)]
pub struct MeanValueEstimate<T> {
    pub value: T,
    pub t_used: T,
    pub a_samples: usize,
    /// Largest deviation of a single window mean from the reported value;
    /// a proxy for the uniformity in the window start that the averaged
    /// class demands.
    pub dispersion: T,
}

/// Windowed means (1/T) int_a^(a+T) b for each start in `a_grid`, each mean
/// accurate to 1e-10 absolute, averaged with their max deviation.
pub fn mean_value<T: FloatScalar>(
    b: &Signal<T>,
    t_window: T,
    a_grid: &[T],
) -> Result<MeanValueEstimate<T>> {
    if !(t_window > T::zero()) {
        return Err(Error::Parameter("window length must be positive".into()));
    }
    if a_grid.is_empty() {
        return Err(Error::Parameter("window-start grid must be nonempty".into()));
    }
    // 1e-10 on the mean, so the integral tolerance scales with the window
    let tol = T::c(1e-10) * t_window;
    let mut means = Vec::with_capacity(a_grid.len());
    for &a in a_grid {
        let integral = integrate(b, a, a + t_window, tol)?;
        means.push(integral / t_window);
    }
    let value = means.iter().fold(T::zero(), |s, &m| s + m)
        / T::from_usize(means.len()).unwrap();
    let dispersion = means
        .iter()
        .map(|&m| (m - value).abs())
        .fold(T::zero(), |a, d| a.max(d));
    Ok(MeanValueEstimate { value, t_used: t_window, a_samples: a_grid.len(), dispersion })
}

/// Default window-start grid on [lo, hi]: 64 equispaced starts plus up to 16
/// adversarial starts clustered at the signal's kinks (bump support edges),
/// where windowed means are most sensitive to the start.
pub fn default_window_starts<T: FloatScalar>(b: &Signal<T>, lo: T, hi: T) -> Vec<T> {
    let mut grid = Vec::with_capacity(80);
    let n = 64usize;
    for i in 0..n {
        grid.push(lo + (hi - lo) * T::from_usize(i).unwrap() / T::from_usize(n).unwrap());
    }
    let knots = b.knots();
    let mut extra = Vec::new();
    for &k in &knots {
        for j in 0..4 {
            let off = T::c(0.05) * T::from_usize(j + 1).unwrap();
            for cand in [k - off, k + off] {
                if cand >= lo && cand <= hi {
                    extra.push(cand);
                }
            }
        }
    }
    extra.truncate(16);
    grid.extend(extra);
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    grid
}

// ── Antiderivative tables ───────────────────────────────────────────────

/// Cumulative antiderivative F(t0 + i step) = int_(t0)^(t0 + i step) b,
/// built once and then queried for window differences. Per-interval Simpson
/// is exact enough at the resolving steps used here; intervals containing a
/// kink are integrated adaptively instead.
fn antiderivative_table<T: FloatScalar>(
    b: &Signal<T>,
    t0: T,
    step: T,
    entries: usize,
) -> Result<Vec<T>> {
    let knots = b.knots();
    let mut values = Vec::with_capacity(entries + 1);
    values.push(T::zero());
    let mut acc = T::zero();
    let half = T::c(0.5);
    for i in 0..entries {
        let lo = t0 + step * T::from_usize(i).unwrap();
        let hi = lo + step;
        let crosses_knot = knots.iter().any(|&k| k > lo && k < hi);
        let piece = if crosses_knot {
            integrate(b, lo, hi, T::c(1e-14))?
        } else {
            // two-panel composite Simpson
            let m = (lo + hi) * half;
            let lm = (lo + m) * half;
            let rm = (m + hi) * half;
            simpson(lo, m, b.eval(lo), b.eval(lm), b.eval(m))
                + simpson(m, hi, b.eval(m), b.eval(rm), b.eval(hi))
        };
        acc += piece;
        values.push(acc);
    }
    Ok(values)
}

// ── Integral smallness ──────────────────────────────────────────────────

/// Sliding-window integral bound together with how it was resolved.
#[derive(Clone, Copy, Debug)]
pub struct SmallnessReport<T> {
    /// sup over t1 < t2, t2 - t1 <= h of |int_(t1)^(t2) b| on the sampled
    /// domain, refined past the grid by local parabolic interpolation.
    pub value: T,
    /// Antiderivative table step actually used.
    pub step: T,
    /// Worst-case contribution of the discretization: sup_bound * step.
    pub discretization_bound: T,
}

/// Computes sup |int_(t1)^(t2) b| over window pairs t1 < t2 with
/// t2 - t1 <= h inside `domain`, as the sliding max-minus-min of a cumulative
/// antiderivative table. The default step resolves both the window (h / 1000)
/// and the fastest oscillation in the signal; pass an explicit finer step via
/// [`integral_smallness_with_step`] when more accuracy is wanted.
pub fn integral_smallness<T: FloatScalar>(
    b: &Signal<T>,
    h: T,
    domain: (T, T),
) -> Result<SmallnessReport<T>> {
    let freq = b.freq_scale();
    let step = (h / T::c(1000.0)).min(T::c(0.0625) / freq);
    integral_smallness_with_step(b, h, domain, step)
}

/// As [`integral_smallness`] with an explicit antiderivative-table step.
pub fn integral_smallness_with_step<T: FloatScalar>(
    b: &Signal<T>,
    h: T,
    domain: (T, T),
    step: T,
) -> Result<SmallnessReport<T>> {
    let (lo, hi) = domain;
    if !(h > T::zero()) {
        return Err(Error::Parameter("window bound h must be positive".into()));
    }
    if !(hi - lo >= h) {
        return Err(Error::Parameter(
            "domain must be at least one window long".into(),
        ));
    }
    if !(step > T::zero()) || !step.is_finite() {
        return Err(Error::Parameter("table step must be positive".into()));
    }
    let entries = ((hi - lo) / step).to_f64().unwrap().ceil() as usize;
    if entries < 2 {
        return Err(Error::Parameter("table step too coarse for the domain".into()));
    }
    let table = antiderivative_table(b, lo, step, entries)?;
    let window = ((h / step).to_f64().unwrap().floor() as usize).max(1);
    let value = sliding_extremum_span(&table, window);
    Ok(SmallnessReport {
        value,
        step,
        discretization_bound: b.sup_bound() * step,
    })
}

/// Max over windows of `len + 1` consecutive values of (window max - window
/// min), with each window's extrema refined by a parabola through the three
/// points around the discrete arg-extremum. Monotone deques keep the scan
/// linear.
fn sliding_extremum_span<T: FloatScalar>(values: &[T], len: usize) -> T {
    let n = values.len();
    if n == 0 {
        return T::zero();
    }
    let len = len.min(n - 1);
    let mut maxq: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    let mut minq: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    let mut best = T::zero();
    for i in 0..n {
        while let Some(&j) = maxq.back() {
            if values[j] <= values[i] {
                maxq.pop_back();
            } else {
                break;
            }
        }
        maxq.push_back(i);
        while let Some(&j) = minq.back() {
            if values[j] >= values[i] {
                minq.pop_back();
            } else {
                break;
            }
        }
        minq.push_back(i);
        let lo_idx = i.saturating_sub(len);
        while let Some(&j) = maxq.front() {
            if j < lo_idx {
                maxq.pop_front();
            } else {
                break;
            }
        }
        while let Some(&j) = minq.front() {
            if j < lo_idx {
                minq.pop_front();
            } else {
                break;
            }
        }
        if i >= len {
            let hi = refine_max(values, *maxq.front().unwrap());
            let lo = refine_min(values, *minq.front().unwrap());
            let span = hi - lo;
            if span > best {
                best = span;
            }
        }
    }
    best
}

/// Parabolic vertex through (k-1, k, k+1), used only when it genuinely lies
/// above the discrete maximum; otherwise the discrete value stands.
fn refine_max<T: FloatScalar>(values: &[T], k: usize) -> T {
    if k == 0 || k + 1 >= values.len() {
        return values[k];
    }
    let (a, b, c) = (values[k - 1], values[k], values[k + 1]);
    let denom = a - T::c(2.0) * b + c;
    if denom >= T::zero() {
        return b;
    }
    let num = a - c;
    let offset = num / (T::c(2.0) * denom);
    if offset.abs() > T::one() {
        return b;
    }
    let vertex = b - num * num / (T::c(8.0) * denom);
    vertex.max(b)
}

fn refine_min<T: FloatScalar>(values: &[T], k: usize) -> T {
    if k == 0 || k + 1 >= values.len() {
        return values[k];
    }
    let (a, b, c) = (values[k - 1], values[k], values[k + 1]);
    let denom = a - T::c(2.0) * b + c;
    if denom <= T::zero() {
        return b;
    }
    let num = a - c;
    let offset = num / (T::c(2.0) * denom);
    if offset.abs() > T::one() {
        return b;
    }
    let vertex = b - num * num / (T::c(8.0) * denom);
    vertex.min(b)
}

// ── Oscillation threshold ───────────────────────────────────────────────

/// Smallest sampled window length T such that every sampled windowed mean
/// |(1/T') int_a^(a+T') b| with T' >= T stays at or below `eps`, uniformly
/// over the window-start grid. Conservative in the sense that the scan
/// returns the grid point just past the last observed violation.
///
/// The signal must actually average to zero: a windowed mean at the scan cap
/// above eps / 10 is rejected, as is a scan in which every sampled window
/// violates the tolerance.
pub fn t0_estimate<T: FloatScalar>(b: &Signal<T>, eps: T) -> Result<T> {
    if !(eps > T::zero()) {
        return Err(Error::Parameter("tolerance must be positive".into()));
    }
    let sup = b.sup_bound();
    let cap_f = ((T::c(20.0) * sup + T::c(40.0)) / eps)
        .to_f64()
        .unwrap()
        .ceil()
        .max(400.0);
    let cap = cap_f as usize;
    // window starts live in [0, 20]; the table must reach the farthest end
    let start_span = T::c(20.0);
    let step = T::c(0.05).min(T::c(0.25) / b.freq_scale());
    let per_unit = (T::one() / step).to_f64().unwrap().round() as usize;
    let step = T::one() / T::from_usize(per_unit).unwrap();
    let entries = (start_span.to_f64().unwrap() as usize + cap) * per_unit;
    if entries > 50_000_000 {
        return Err(Error::Parameter(
            "threshold scan table would be enormous; estimate the threshold on \
             the undilated signal and rescale instead"
                .into(),
        ));
    }
    let table = antiderivative_table(b, T::zero(), step, entries)?;
    let starts = default_window_starts(b, T::zero(), start_span);
    // snap starts to table nodes so window reads are exact table lookups
    let start_idx: Vec<usize> = starts
        .iter()
        .map(|&a| {
            ((a / step).to_f64().unwrap().round() as usize).min(table.len() - 1)
        })
        .collect();
    // zero-mean gate at the cap
    let cap_t = T::from_usize(cap).unwrap();
    let mut worst_mean = T::zero();
    for &ia in &start_idx {
        let ib = (ia + cap * per_unit).min(table.len() - 1);
        let mean = (table[ib] - table[ia]).abs()
            / (T::from_usize(ib - ia).unwrap() * step);
        worst_mean = worst_mean.max(mean);
    }
    if worst_mean > eps / T::c(10.0) {
        return Err(Error::Domain(format!(
            "signal is not zero-mean at this tolerance: windowed mean {worst_mean:e} \
             at window length {cap_t} exceeds {:e}",
            eps / T::c(10.0)
        )));
    }
    // scan integer window lengths, remembering the last violation
    let mut last_violation: Option<usize> = None;
    for t_int in 1..=cap {
        let span = t_int * per_unit;
        let t_len = T::from_usize(t_int).unwrap();
        let mut worst = T::zero();
        for &ia in &start_idx {
            let ib = ia + span;
            if ib >= table.len() {
                continue;
            }
            let m = (table[ib] - table[ia]).abs() / t_len;
            if m > worst {
                worst = m;
            }
        }
        if worst > eps {
            last_violation = Some(t_int);
        }
    }
    match last_violation {
        None => Ok(T::one()),
        Some(v) if v >= cap => Err(Error::Domain(
            "no window length below the scan cap meets the tolerance; \
             signal is not zero-mean at this tolerance"
                .into(),
        )),
        Some(v) => Ok(T::from_usize(v + 1).unwrap()),
    }
}

// ── Tests ───────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn bump_plus_cos() -> Signal<f64> {
        Signal::bump().plus(Signal::cosine(1.0, 0.0))
    }

    #[test]
    fn primitive_evaluations() {
        let b = Signal::<f64>::bump();
        assert_eq!(b.eval(0.0), 1.0);
        assert_eq!(b.eval(2.0), 0.0);
        assert_eq!(b.eval(-2.0), 0.0);
        assert_eq!(bump_plus_cos().eval(0.0), 2.0);
        let s = Signal::cosine(2.0, 0.5).scaled(3.0).dilated(2.0);
        assert!((s.eval(1.0) - 3.0 * (4.0f64 + 0.5).cos()).abs() < 1e-15);
    }

    #[test]
    fn sup_bound_dominates_samples() {
        let s = bump_plus_cos().scaled(-1.5).dilated(7.0);
        let m = s.sup_bound();
        for i in 0..2000 {
            let t = -2.0 + 0.002 * i as f64;
            assert!(s.eval(t).abs() <= m + 1e-12);
        }
    }

    #[test]
    fn grammar_round_trip() {
        let src = "sum(scale(0.5,bump),dilate(3,cos(1,0)))";
        let s: Signal<f64> = parse_signal(src).unwrap();
        let back = s.to_expr_string();
        let s2: Signal<f64> = parse_signal(&back).unwrap();
        assert_eq!(s, s2);
        assert!(parse_signal::<f64>("tri(1)").is_err());
        assert!(parse_signal::<f64>("cos(1,0))").is_err());
        assert!(parse_signal::<f64>("cos(1)").is_err());
    }

    #[test]
    fn bump_mass_is_half_pi() {
        let b = Signal::<f64>::bump();
        let integral = integrate(&b, -2.0, 2.0, 1e-10).unwrap();
        assert!((integral - PI / 2.0).abs() < 1e-9, "integral {integral}");
    }

    #[test]
    fn constant_mean_has_no_dispersion() {
        let c = Signal::constant(3.25f64);
        let est = mean_value(&c, 17.0, &[0.0, 1.0, 5.0]).unwrap();
        assert!((est.value - 3.25).abs() < 1e-12);
        assert!(est.dispersion < 1e-12);
    }

    #[test]
    fn cosine_mean_decays_like_two_over_t() {
        let c = Signal::<f64>::cosine(1.0, 0.0);
        let t = 2.0 * PI * 1.0e3;
        let grid = default_window_starts(&c, 0.0, 20.0);
        let est = mean_value(&c, t, &grid).unwrap();
        assert!(est.value.abs() <= 2.0 / t + 1e-9, "mean {:e}", est.value);
    }

    #[test]
    fn bump_plus_cosine_is_zero_mean() {
        let b = bump_plus_cos();
        let t = 1.0e4;
        let grid = default_window_starts(&b, 0.0, 20.0);
        let est = mean_value(&b, t, &grid).unwrap();
        assert!(
            est.value.abs() <= (PI / 2.0 + 2.0) / t + 1e-9,
            "mean {:e}",
            est.value
        );
    }

    #[test]
    fn smallness_of_zero_signal_vanishes() {
        let z = Signal::constant(0.0f64);
        let r = integral_smallness(&z, 1.0, (0.0, 10.0)).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn cosine_smallness_attains_two() {
        let c = Signal::<f64>::cosine(1.0, 0.0);
        let r = integral_smallness(&c, 3.5, (0.0, 25.0)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-6, "value {:.9}", r.value);
    }

    #[test]
    fn dilation_divides_smallness() {
        let c = Signal::<f64>::cosine(1.0, 0.0);
        let fast = c.clone().dilated(3.0);
        let r = integral_smallness(&fast, 2.0, (0.0, 15.0)).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-6, "value {:.9}", r.value);
        // dilation law against the undilated signal at window 3 h
        let slow = integral_smallness(&c, 6.0, (0.0, 45.0)).unwrap();
        assert!(r.value <= slow.value / 3.0 + r.discretization_bound + 1e-9);
    }

    #[test]
    fn short_window_regime_is_linear() {
        // windows shorter than delta / M_b can contribute at most delta
        let c = Signal::<f64>::cosine(1.0, 0.0);
        let delta = 0.4;
        let r = integral_smallness(&c, delta, (0.0, 20.0)).unwrap();
        assert!(r.value <= delta + r.discretization_bound);
        assert!((r.value - 2.0 * (0.2f64).sin()).abs() < 1e-6);
    }

    #[test]
    fn oscillation_threshold_for_unit_cosine() {
        let c = Signal::<f64>::cosine(1.0, 0.0);
        let t0 = t0_estimate(&c, 0.01).unwrap();
        assert!((180.0..=260.0).contains(&t0), "t0 = {t0}");
        let t0_loose = t0_estimate(&c, 0.02).unwrap();
        assert!(t0_loose <= t0, "monotonicity: {t0_loose} vs {t0}");
    }

    #[test]
    fn zero_signal_threshold_is_grid_floor() {
        let z = Signal::constant(0.0f64);
        assert_eq!(t0_estimate(&z, 0.01).unwrap(), 1.0);
    }

    #[test]
    fn nonzero_mean_is_rejected() {
        let c = Signal::constant(1.0f64);
        assert!(t0_estimate(&c, 0.01).is_err());
    }

    #[test]
    fn tails_compose() {
        let b = bump_plus_cos().dilated(4.0);
        match b.tail().unwrap() {
            Tail::Periodic { period, from } => {
                assert!((period - 2.0 * PI / 4.0).abs() < 1e-15);
                assert!((from - 0.25).abs() < 1e-15);
            }
            other => panic!("unexpected tail {other:?}"),
        }
        match Signal::<f64>::bump().tail().unwrap() {
            Tail::Constant { value, from } => {
                assert_eq!(value, 0.0);
                assert_eq!(from, 1.0);
            }
            other => panic!("unexpected tail {other:?}"),
        }
    }
}
