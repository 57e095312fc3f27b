//! Numerical integration engine.
//!
//! * adaptive Gauss–Kronrod (7/15) on finite, semi-infinite and infinite
//!   intervals, for real or complex integrands;
//! * path integrals over piecewise contours made of segments, arcs and
//!   half-infinite rays, the rays being parametrised by `r = h·sinh(v)` so
//!   that algebraic decay becomes exponential in `v`;
//! * fixed node rules on the same contours, for integrands that are summed
//!   many times against cached data;
//! * Taylor coefficients by the trapezoid rule on a circle;
//! * iterated 2D quadrature and Chebyshev interpolants.

use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

type C64 = Complex64;

/// Scalars an adaptive rule can integrate.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    /// Additive identity.
    fn zero() -> Self;
    /// Magnitude used for error control.
    fn magnitude(self) -> f64;
    /// Whether every component is finite.
    fn finite(self) -> bool;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn finite(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Tolerances and budgets of the adaptive routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Relative tolerance.
    pub rel_tol: f64,
    /// Absolute tolerance.
    pub abs_tol: f64,
    /// Maximum number of interval bisections per call.
    pub max_subdivisions: usize,
    /// Tail threshold used to truncate infinite rays.
    pub tail_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, max_subdivisions: 4000, tail_tol: 1e-14 }
    }
}

impl QuadratureSpec {
    /// Default spec with the given relative tolerance.
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }

    /// Same spec with both tolerances multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { rel_tol: self.rel_tol * factor, abs_tol: self.abs_tol * factor, ..*self }
    }

    fn validate(&self) -> Result<()> {
        if self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.tail_tol > 0.0 {
            Ok(())
        } else {
            Err(Error::Validation("quadrature tolerances must be positive".into()))
        }
    }
}

/// Value and error estimate of an integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    /// Integral estimate.
    pub value: T,
    /// Estimated absolute error.
    pub error: f64,
}

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One Gauss–Kronrod 15-point panel: (Kronrod value, |K − G| error).
fn gk15<T: Scalar>(f: &impl Fn(f64) -> T, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k = k + s * WGK[j];
        if j % 2 == 1 {
            g = g + s * WG[j / 2];
        }
    }
    let k = k * h;
    let g = g * h;
    (k, (k - g).magnitude())
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive bisection on a finite interval with an initial split into
/// `pieces` panels.
fn adapt<T: Scalar>(
    f: &impl Fn(f64) -> T,
    a: f64,
    b: f64,
    pieces: usize,
    spec: &QuadratureSpec,
) -> Result<Estimate<T>> {
    spec.validate()?;
    if a == b {
        return Ok(Estimate { value: T::zero(), error: 0.0 });
    }
    let mut heap = BinaryHeap::new();
    let mut total = T::zero();
    let mut err = 0.0;
    let pieces = pieces.max(1);
    for i in 0..pieces {
        let lo = a + (b - a) * i as f64 / pieces as f64;
        let hi = a + (b - a) * (i + 1) as f64 / pieces as f64;
        let (v, e) = gk15(f, lo, hi);
        total = total + v;
        err += e;
        heap.push(Panel { a: lo, b: hi, value: v, error: e });
    }
    let mut splits = 0;
    loop {
        if !total.finite() {
            return Err(Error::Numerical("non-finite integrand value".into()));
        }
        let target = spec.abs_tol.max(spec.rel_tol * total.magnitude());
        if err <= target {
            return Ok(Estimate { value: total, error: err });
        }
        if splits >= spec.max_subdivisions {
            return Err(Error::NonConvergence {
                what: format!("adaptive quadrature on [{a}, {b}]"),
                value: total.magnitude(),
                error: err,
            });
        }
        let Some(p) = heap.pop() else { break };
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b || (p.b - p.a) < 1e-15 * (p.a.abs() + p.b.abs()) {
            // Cannot refine further: accept the panel as is.
            heap.push(Panel { error: 0.0, ..p });
            err = heap.iter().map(|q| q.error).sum();
            if heap.iter().all(|q| q.error == 0.0) {
                break;
            }
            splits += 1;
            continue;
        }
        let (v1, e1) = gk15(f, p.a, mid);
        let (v2, e2) = gk15(f, mid, p.b);
        total = total - p.value + v1 + v2;
        err += e1 + e2 - p.error;
        heap.push(Panel { a: p.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: p.b, value: v2, error: e2 });
        splits += 1;
        if splits % 64 == 0 {
            // Refresh the running sums to avoid drift.
            total = heap.iter().fold(T::zero(), |s, q| s + q.value);
            err = heap.iter().map(|q| q.error).sum();
        }
    }
    Ok(Estimate { value: total, error: err })
}

/// Declared integrable endpoint singularities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoints {
    /// Both ends regular.
    Regular,
    /// Integrable singularity at the left end.
    SingularLeft,
    /// Integrable singularity at the right end.
    SingularRight,
    /// Integrable singularities at both ends.
    SingularBoth,
}

/// `∫_a^b f(x) dx` for finite or infinite limits (`±f64::INFINITY`).
///
/// The error estimate satisfies `error ≤ max(abs_tol, rel_tol·|value|)` on
/// success; budget exhaustion yields [`Error::NonConvergence`] carrying the
/// partial estimate.
pub fn integrate_interval<T: Scalar>(
    f: impl Fn(f64) -> T,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate<T>> {
    integrate_interval_with(f, a, b, Endpoints::Regular, spec)
}

/// [`integrate_interval`] with declared endpoint singularities, removed by
/// the substitutions `x = a + (b−a)u²` (left), `x = b − (b−a)u²` (right) or
/// `x = a + (b−a)(3u² − 2u³)` (both).
pub fn integrate_interval_with<T: Scalar>(
    f: impl Fn(f64) -> T,
    a: f64,
    b: f64,
    ends: Endpoints,
    spec: &QuadratureSpec,
) -> Result<Estimate<T>> {
    dispatch(&f, a, b, ends, spec)
}

fn dispatch<T: Scalar>(
    f: &dyn Fn(f64) -> T,
    a: f64,
    b: f64,
    ends: Endpoints,
    spec: &QuadratureSpec,
) -> Result<Estimate<T>> {
    if a.is_nan() || b.is_nan() {
        return Err(Error::Validation("NaN integration limit".into()));
    }
    if a > b {
        let r = dispatch(f, b, a, swap_ends(ends), spec)?;
        return Ok(Estimate { value: r.value * -1.0, error: r.error });
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => finite_with(&f, a, b, ends, spec),
        (true, false) => {
            // Split off [a, a+1] so that a left singularity is handled on a
            // finite piece, then map [a+1, ∞) onto [0, 1).
            let mut total = Estimate { value: T::zero(), error: 0.0 };
            let mut start = a;
            if matches!(ends, Endpoints::SingularLeft | Endpoints::SingularBoth) {
                let r = finite_with(&f, a, a + 1.0, Endpoints::SingularLeft, spec)?;
                total = r;
                start = a + 1.0;
            }
            let g = |t: f64| {
                let d = 1.0 - t;
                f(start + t / d) * (1.0 / (d * d))
            };
            let r = adapt(&g, 0.0, 1.0, 4, spec)?;
            Ok(Estimate { value: total.value + r.value, error: total.error + r.error })
        }
        (false, true) => {
            let g = |x: f64| f(-x);
            dispatch(&g, -b, f64::INFINITY, swap_ends(ends), spec)
        }
        (false, false) => {
            let g = |t: f64| {
                let d = 1.0 - t * t;
                f(t / d) * ((1.0 + t * t) / (d * d))
            };
            adapt(&g, -1.0, 1.0, 8, spec)
        }
    }
}

fn swap_ends(e: Endpoints) -> Endpoints {
    match e {
        Endpoints::SingularLeft => Endpoints::SingularRight,
        Endpoints::SingularRight => Endpoints::SingularLeft,
        other => other,
    }
}

fn finite_with<T: Scalar>(
    f: &impl Fn(f64) -> T,
    a: f64,
    b: f64,
    ends: Endpoints,
    spec: &QuadratureSpec,
) -> Result<Estimate<T>> {
    let w = b - a;
    match ends {
        Endpoints::Regular => adapt(f, a, b, 1, spec),
        Endpoints::SingularLeft => {
            let g = |u: f64| f(a + w * u * u) * (2.0 * w * u);
            adapt(&g, 0.0, 1.0, 1, spec)
        }
        Endpoints::SingularRight => {
            let g = |u: f64| f(b - w * u * u) * (2.0 * w * u);
            adapt(&g, 0.0, 1.0, 1, spec)
        }
        Endpoints::SingularBoth => {
            let g = |u: f64| f(a + w * u * u * (3.0 - 2.0 * u)) * (6.0 * w * u * (1.0 - u));
            adapt(&g, 0.0, 1.0, 2, spec)
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Newton on the
/// three-term recurrence).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite Gauss–Legendre rule on `[a, b]` with `panels` equal panels of
/// `order` nodes each.
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(order);
    let mut xs = Vec::with_capacity(panels * order);
    let mut ws = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + (b - a) * p as f64 / panels as f64;
        let hi = a + (b - a) * (p + 1) as f64 / panels as f64;
        let h = 0.5 * (hi - lo);
        for (x, w) in gx.iter().zip(&gw) {
            xs.push(lo + h * (x + 1.0));
            ws.push(h * w);
        }
    }
    (xs, ws)
}

/// Gauss–Legendre rule on `[0, xmax]` with panels refined geometrically
/// towards 0 (first panel width `h0`, doubling), then uniform panels of
/// width at most `hmax`.
pub fn graded_rule(xmax: f64, h0: f64, hmax: f64, order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut edges = vec![0.0];
    let mut h = h0;
    while *edges.last().unwrap() < xmax {
        let last = *edges.last().unwrap();
        let step = h.min(hmax);
        edges.push((last + step).min(xmax));
        h *= 2.0;
    }
    let (gx, gw) = gauss_legendre(order);
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for e in edges.windows(2) {
        let half = 0.5 * (e[1] - e[0]);
        for (x, w) in gx.iter().zip(&gw) {
            xs.push(e[0] + half * (x + 1.0));
            ws.push(half * w);
        }
    }
    (xs, ws)
}

/// One piece of a contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathPiece {
    /// Straight segment traversed from `start` to `end`.
    Segment {
        /// Start point.
        start: C64,
        /// End point.
        end: C64,
    },
    /// Half-infinite ray `anchor + r·dir`, `r ≥ 0`. Outbound rays run from
    /// the anchor to infinity, inbound rays from infinity to the anchor.
    Ray {
        /// Finite end point.
        anchor: C64,
        /// Unit direction pointing to infinity.
        dir: C64,
        /// Orientation flag.
        inbound: bool,
        /// Length scale `h` of the map `r = h·sinh(v)`.
        scale: f64,
    },
    /// Circular arc `center + radius·e^{iθ}`, θ from `theta0` to `theta1`.
    Arc {
        /// Centre.
        center: C64,
        /// Radius.
        radius: f64,
        /// Start angle.
        theta0: f64,
        /// End angle.
        theta1: f64,
    },
}

impl PathPiece {
    fn start(&self) -> Option<C64> {
        match *self {
            PathPiece::Segment { start, .. } => Some(start),
            PathPiece::Ray { anchor, inbound, .. } => (!inbound).then_some(anchor),
            PathPiece::Arc { center, radius, theta0, .. } => {
                Some(center + C64::from_polar(radius, theta0))
            }
        }
    }
    fn end(&self) -> Option<C64> {
        match *self {
            PathPiece::Segment { end, .. } => Some(end),
            PathPiece::Ray { anchor, inbound, .. } => inbound.then_some(anchor),
            PathPiece::Arc { center, radius, theta1, .. } => {
                Some(center + C64::from_polar(radius, theta1))
            }
        }
    }
}

/// An oriented piecewise contour.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    /// Pieces in traversal order; consecutive pieces share end points.
    pub pieces: Vec<PathPiece>,
}

/// Sizes of a fixed node rule on a contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeRule {
    /// Gauss–Legendre panels per finite piece.
    pub segment_panels: usize,
    /// Panels on each ray (in the `v` variable).
    pub ray_panels: usize,
    /// Nodes per panel.
    pub order: usize,
    /// Ray truncation `v_max` (the ray is cut at `r = h·sinh(v_max)`).
    pub v_max: f64,
}

impl Default for NodeRule {
    fn default() -> Self {
        Self { segment_panels: 12, ray_panels: 14, order: 16, v_max: 28.0 }
    }
}

impl Contour {
    /// Checks continuity of the piece chain.
    pub fn new(pieces: Vec<PathPiece>) -> Result<Self> {
        for w in pieces.windows(2) {
            match (w[0].end(), w[1].start()) {
                (Some(e), Some(s)) if (e - s).norm() <= 1e-12 * (1.0 + e.norm()) => {}
                _ => {
                    return Err(Error::Validation(
                        "contour pieces must share end points".into(),
                    ))
                }
            }
        }
        Ok(Self { pieces })
    }

    /// The upper regular contour: horizontal segment `Im λ = height` of
    /// half-width `10/height`, continued by an inbound ray at angle `3π/4`
    /// on the left and an outbound ray at `π/4` on the right.
    pub fn regular_upper(height: f64) -> Self {
        let t0 = 10.0 / height;
        let left = C64::new(-t0, height);
        let right = C64::new(t0, height);
        Self {
            pieces: vec![
                PathPiece::Ray {
                    anchor: left,
                    dir: C64::from_polar(1.0, 0.75 * PI),
                    inbound: true,
                    scale: height,
                },
                PathPiece::Segment { start: left, end: right },
                PathPiece::Ray {
                    anchor: right,
                    dir: C64::from_polar(1.0, 0.25 * PI),
                    inbound: false,
                    scale: height,
                },
            ],
        }
    }

    /// Mirror image of [`Contour::regular_upper`] below the real axis, still
    /// oriented from left to right.
    pub fn regular_lower(height: f64) -> Self {
        let t0 = 10.0 / height;
        let left = C64::new(-t0, -height);
        let right = C64::new(t0, -height);
        Self {
            pieces: vec![
                PathPiece::Ray {
                    anchor: left,
                    dir: C64::from_polar(1.0, -0.75 * PI),
                    inbound: true,
                    scale: height,
                },
                PathPiece::Segment { start: left, end: right },
                PathPiece::Ray {
                    anchor: right,
                    dir: C64::from_polar(1.0, -0.25 * PI),
                    inbound: false,
                    scale: height,
                },
            ],
        }
    }

    /// Horizontal line `ℝ + i·height` oriented left to right.
    pub fn horizontal_line(height: f64, scale: f64) -> Self {
        let a = C64::new(0.0, height);
        Self {
            pieces: vec![
                PathPiece::Ray { anchor: a, dir: C64::new(-1.0, 0.0), inbound: true, scale },
                PathPiece::Ray { anchor: a, dir: C64::new(1.0, 0.0), inbound: false, scale },
            ],
        }
    }

    /// Counter-clockwise circle.
    pub fn circle(center: C64, radius: f64) -> Self {
        Self { pieces: vec![PathPiece::Arc { center, radius, theta0: 0.0, theta1: 2.0 * PI }] }
    }

    /// Fixed quadrature nodes `(λ_k, w_k)` with `Σ w_k f(λ_k) ≈ ∫ f dλ`.
    pub fn nodes(&self, rule: &NodeRule) -> Vec<(C64, C64)> {
        let mut out = Vec::new();
        for piece in &self.pieces {
            match *piece {
                PathPiece::Segment { start, end } => {
                    let (xs, ws) = composite_gauss_legendre(0.0, 1.0, rule.segment_panels, rule.order);
                    let d = end - start;
                    for (x, w) in xs.iter().zip(ws) {
                        out.push((start + d * *x, d * w));
                    }
                }
                PathPiece::Arc { center, radius, theta0, theta1 } => {
                    let (xs, ws) =
                        composite_gauss_legendre(theta0, theta1, rule.segment_panels, rule.order);
                    for (t, w) in xs.iter().zip(ws) {
                        let e = C64::from_polar(radius, *t);
                        out.push((center + e, C64::i() * e * w));
                    }
                }
                PathPiece::Ray { anchor, dir, inbound, scale } => {
                    let (vs, ws) = composite_gauss_legendre(0.0, rule.v_max, rule.ray_panels, rule.order);
                    let sign = if inbound { -1.0 } else { 1.0 };
                    for (v, w) in vs.iter().zip(ws) {
                        let r = scale * v.sinh();
                        let dr = scale * v.cosh() * w;
                        out.push((anchor + dir * r, dir * (sign * dr)));
                    }
                }
            }
        }
        out
    }
}

/// `∫_c f(λ) dλ` along the contour, adaptively.
///
/// Rays are integrated in chunks of the `v` variable until a chunk
/// contributes less than `tail_tol` (relative to the running total, or
/// absolutely when the total is tiny); failure to decay by `v = 80` is
/// reported as a decay violation.
pub fn integrate_contour(
    f: impl Fn(C64) -> C64 + Sync,
    c: &Contour,
    spec: &QuadratureSpec,
) -> Result<C64> {
    let mut total = C64::new(0.0, 0.0);
    for piece in &c.pieces {
        total += match *piece {
            PathPiece::Segment { start, end } => {
                let d = end - start;
                integrate_interval(|t: f64| f(start + d * t) * d, 0.0, 1.0, spec)?.value
            }
            PathPiece::Arc { center, radius, theta0, theta1 } => {
                let pieces = (((theta1 - theta0).abs() / (0.25 * PI)).ceil() as usize).max(1);
                let g = |t: f64| {
                    let e = C64::from_polar(radius, t);
                    f(center + e) * (C64::i() * e)
                };
                adapt(&g, theta0, theta1, pieces, spec)?.value
            }
            PathPiece::Ray { anchor, dir, inbound, scale } => {
                let sign = if inbound { -1.0 } else { 1.0 };
                let g = |v: f64| f(anchor + dir * (scale * v.sinh())) * dir * (scale * v.cosh());
                let mut acc = C64::new(0.0, 0.0);
                let chunk = 2.0;
                let mut v = 0.0;
                loop {
                    let part = adapt(&g, v, v + chunk, 1, spec)?.value;
                    acc += part;
                    v += chunk;
                    let small = part.norm() <= spec.tail_tol * acc.norm().max(1e-300)
                        || part.norm() <= spec.tail_tol * 1e-3;
                    if small && v >= 4.0 {
                        break;
                    }
                    if v >= 80.0 {
                        return Err(Error::Numerical(format!(
                            "integrand does not decay along ray from {anchor}"
                        )));
                    }
                }
                acc * sign
            }
        };
    }
    Ok(total)
}

/// Taylor coefficients returned by [`taylor_coeffs`].
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorCoeffs {
    /// `c_0 … c_m`.
    pub coeffs: Vec<C64>,
    /// Set when the discrete spectrum does not decay to the noise floor,
    /// i.e. the radius is too close to a singularity or too few samples were
    /// used.
    pub aliasing_suspected: bool,
}

/// Taylor coefficients of `f` at `z0` from `M ≥ 4(m+1)` samples on the
/// circle `|z − z0| = r` (trapezoid rule, spectrally accurate).
pub fn taylor_coeffs(f: impl Fn(C64) -> C64, z0: C64, r: f64, m: usize) -> Result<TaylorCoeffs> {
    if !(r > 0.0) {
        return Err(Error::Validation("Taylor radius must be positive".into()));
    }
    let big_m = (4 * (m + 1)).max(64);
    let samples: Vec<C64> = (0..big_m)
        .map(|j| f(z0 + C64::from_polar(r, 2.0 * PI * j as f64 / big_m as f64)))
        .collect();
    if samples.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
        return Err(Error::Numerical("non-finite sample in Taylor extraction".into()));
    }
    let dft = |k: usize| -> C64 {
        samples
            .iter()
            .enumerate()
            .map(|(j, s)| s * C64::from_polar(1.0, -2.0 * PI * (j * k % big_m) as f64 / big_m as f64))
            .sum::<C64>()
            / big_m as f64
    };
    let coeffs = (0..=m).map(|k| dft(k) / r.powi(k as i32)).collect();
    let scale = samples.iter().map(|s| s.norm()).fold(0.0, f64::max);
    // The aliasing error of c_k is of the order of the square of the
    // relative size of the highest resolved modes.
    let high = ((big_m / 2 - 4)..(big_m / 2)).map(|k| dft(k).norm()).fold(0.0, f64::max);
    Ok(TaylorCoeffs { coeffs, aliasing_suspected: high > 1e-6 * scale.max(1e-300) })
}

/// Integration domain for [`integrate_2d`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// `[a, b]`.
    Finite(f64, f64),
    /// `[a, ∞)`.
    HalfLine(f64),
    /// `ℝ`.
    RealLine,
}

impl Domain {
    fn limits(self) -> (f64, f64) {
        match self {
            Domain::Finite(a, b) => (a, b),
            Domain::HalfLine(a) => (a, f64::INFINITY),
            Domain::RealLine => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

/// Iterated adaptive `∫_{dx} ∫_{dy} f(x, y) dy dx`.
pub fn integrate_2d(
    f: impl Fn(f64, f64) -> f64 + Sync,
    dx: Domain,
    dy: Domain,
    spec: &QuadratureSpec,
) -> Result<Estimate<f64>> {
    let (xa, xb) = dx.limits();
    let (ya, yb) = dy.limits();
    let inner_spec = spec.scaled(0.1);
    let failure = std::sync::Mutex::new(None);
    let outer = integrate_interval(
        |x: f64| match integrate_interval(|y: f64| f(x, y), ya, yb, &inner_spec) {
            Ok(e) => e.value,
            Err(err) => {
                *failure.lock().unwrap() = Some(err);
                0.0
            }
        },
        xa,
        xb,
        spec,
    )?;
    if let Some(err) = failure.into_inner().unwrap() {
        return Err(err);
    }
    Ok(outer)
}

/// Chebyshev interpolant on `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chebyshev {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
}

impl Chebyshev {
    /// Interpolates `f` at `n` Gauss–Chebyshev (first-kind) nodes.
    pub fn fit(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Self {
        let values: Vec<f64> = Self::nodes(a, b, n).into_iter().map(f).collect();
        Self::from_values(&values, a, b)
    }

    /// First-kind Chebyshev nodes mapped to `[a, b]`, in the order expected by
    /// [`Chebyshev::from_values`].
    pub fn nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| {
                let t = (PI * (k as f64 + 0.5) / n as f64).cos();
                0.5 * (a + b) + 0.5 * (b - a) * t
            })
            .collect()
    }

    /// Interpolant through values sampled at [`Chebyshev::nodes`].
    pub fn from_values(values: &[f64], a: f64, b: f64) -> Self {
        let n = values.len();
        let mut coeffs = vec![0.0; n];
        for (j, c) in coeffs.iter_mut().enumerate() {
            let s: f64 = values
                .iter()
                .enumerate()
                .map(|(k, v)| v * (PI * j as f64 * (k as f64 + 0.5) / n as f64).cos())
                .sum();
            *c = 2.0 * s / n as f64;
        }
        coeffs[0] *= 0.5;
        Self { a, b, coeffs }
    }

    /// Interval of definition.
    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// Chebyshev coefficients.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Clenshaw evaluation (extrapolates outside `[a, b]`).
    pub fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.a - self.b) / (self.b - self.a);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coeffs[0]
    }

    /// Derivative interpolant.
    pub fn derivative(&self) -> Self {
        let n = self.coeffs.len();
        if n <= 1 {
            return Self { a: self.a, b: self.b, coeffs: vec![0.0] };
        }
        let mut d = vec![0.0; n];
        for k in (0..n - 1).rev() {
            let next = if k + 2 < n { d[k + 2] } else { 0.0 };
            d[k] = next + 2.0 * (k + 1) as f64 * self.coeffs[k + 1];
        }
        d[0] *= 0.5;
        d.pop();
        let scale = 2.0 / (self.b - self.a);
        Self { a: self.a, b: self.b, coeffs: d.into_iter().map(|c| c * scale).collect() }
    }

    /// Antiderivative vanishing at `a`.
    pub fn integral(&self) -> Self {
        let n = self.coeffs.len();
        let mut c = vec![0.0; n + 1];
        let get = |k: usize| -> f64 {
            if k < n {
                if k == 0 {
                    2.0 * self.coeffs[0]
                } else {
                    self.coeffs[k]
                }
            } else {
                0.0
            }
        };
        for (k, ck) in c.iter_mut().enumerate().skip(1) {
            *ck = (get(k - 1) - get(k + 1)) / (2.0 * k as f64);
        }
        let scale = 0.5 * (self.b - self.a);
        for ck in c.iter_mut() {
            *ck *= scale;
        }
        let mut out = Self { a: self.a, b: self.b, coeffs: c };
        let at_a = out.eval(self.a);
        out.coeffs[0] -= at_a;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn basic_intervals() {
        let r = integrate_interval(|x: f64| x, 0.0, 1.0, &spec()).unwrap();
        assert!((r.value - 0.5).abs() < 1e-14);
        let r = integrate_interval(|x: f64| (-x).exp(), 0.0, f64::INFINITY, &spec()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-11);
        let r = integrate_interval_with(
            |x: f64| 1.0 / x.sqrt(),
            0.0,
            1.0,
            Endpoints::SingularLeft,
            &spec(),
        )
        .unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        let r = integrate_interval(|x: f64| (-x * x).exp(), f64::NEG_INFINITY, f64::INFINITY, &spec())
            .unwrap();
        assert!((r.value - PI.sqrt()).abs() < 1e-11);
        let r = integrate_interval(|x: f64| x.exp(), f64::NEG_INFINITY, 0.0, &spec()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-11);
        let r = integrate_interval(|x: f64| x, 1.0, 0.0, &spec()).unwrap();
        assert!((r.value + 0.5).abs() < 1e-14);
    }

    #[test]
    fn budget_exhaustion_reports_partial() {
        let tight = QuadratureSpec { max_subdivisions: 3, rel_tol: 1e-15, abs_tol: 1e-300, ..spec() };
        match integrate_interval(|x: f64| (50.0 * x).sin().abs(), 0.0, 10.0, &tight) {
            Err(Error::NonConvergence { value, .. }) => assert!(value.is_finite()),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn gauss_legendre_exactness() {
        for n in [1, 2, 5, 16, 33] {
            let (x, w) = gauss_legendre(n);
            let deg = 2 * n - 1;
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((s - exact).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn residue_on_circle() {
        let c = Contour::circle(C64::new(0.0, 0.0), 0.1);
        let v = integrate_contour(|z| 1.0 / z, &c, &spec()).unwrap();
        assert!((v - C64::new(0.0, 2.0 * PI)).norm() < 1e-12);
        let rule = c.nodes(&NodeRule { segment_panels: 4, ..NodeRule::default() });
        let v: C64 = rule.iter().map(|(z, w)| w / z).sum();
        assert!((v - C64::new(0.0, 2.0 * PI)).norm() < 1e-12);
    }

    #[test]
    fn parallel_lines_agree() {
        // e^{iλ}/(λ−i) has no pole between Im λ = 2 and Im λ = 3.
        let f = |z: C64| (C64::i() * z).exp() / (z - C64::i());
        let a = integrate_contour(f, &Contour::regular_upper(2.0), &spec()).unwrap();
        let b = integrate_contour(f, &Contour::regular_upper(3.0), &spec()).unwrap();
        assert!((a - b).norm() < 1e-10, "{a} vs {b}");
        // closing upward encloses nothing: value 0
        assert!(a.norm() < 1e-10);
    }

    #[test]
    fn contour_validation() {
        let bad = Contour::new(vec![
            PathPiece::Segment { start: C64::new(0.0, 0.0), end: C64::new(1.0, 0.0) },
            PathPiece::Segment { start: C64::new(2.0, 0.0), end: C64::new(3.0, 0.0) },
        ]);
        assert!(bad.is_err());
        assert!(Contour::new(Contour::regular_lower(1.0).pieces).is_ok());
    }

    #[test]
    fn taylor_examples() {
        let t = taylor_coeffs(|z| z.exp(), C64::new(0.0, 0.0), 1.0, 8).unwrap();
        let mut fact = 1.0;
        for (k, c) in t.coeffs.iter().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            assert!((c - 1.0 / fact).norm() < 1e-15);
        }
        let t = taylor_coeffs(|z| 1.0 / (1.0 - z), C64::new(0.0, 0.0), 0.5, 10).unwrap();
        assert!(t.coeffs.iter().all(|c| (c - 1.0).norm() < 1e-13));
        assert!(!t.aliasing_suspected);
        let t = taylor_coeffs(|z| 1.0 / (1.0 - z), C64::new(0.0, 0.0), 0.999, 10).unwrap();
        assert!(t.aliasing_suspected);
        let t = taylor_coeffs(|z| z * z * z - 2.0 * z + 0.5, C64::new(0.0, 0.0), 1.0, 5).unwrap();
        let exact = [0.5, -2.0, 0.0, 1.0, 0.0, 0.0];
        for (c, e) in t.coeffs.iter().zip(exact) {
            assert!((c - e).norm() < 1e-13);
        }
    }

    #[test]
    fn two_dimensional() {
        let s = spec();
        let r = integrate_2d(|x, y| (-x - y).exp(), Domain::HalfLine(0.0), Domain::HalfLine(0.0), &s)
            .unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        let r = integrate_2d(
            |x, y| (-x - y).exp() * (x - y),
            Domain::HalfLine(0.0),
            Domain::HalfLine(0.0),
            &s,
        )
        .unwrap();
        assert!(r.value.abs() < 1e-9);
        let r = integrate_2d(
            |u: f64, v: f64| (-u.abs() - v).exp(),
            Domain::RealLine,
            Domain::HalfLine(0.0),
            &s,
        )
        .unwrap();
        assert!((r.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn chebyshev_calculus() {
        let c = Chebyshev::fit(|x| (2.0 * x).sin(), 0.0, 3.0, 40);
        for &x in &[0.0, 0.7, 2.9] {
            assert!((c.eval(x) - (2.0 * x).sin()).abs() < 1e-14);
            assert!((c.derivative().eval(x) - 2.0 * (2.0 * x).cos()).abs() < 1e-11);
            let anti = (1.0 - (2.0 * x).cos()) / 2.0;
            assert!((c.integral().eval(x) - anti).abs() < 1e-14);
        }
    }

    #[test]
    fn graded_rule_integrates_log() {
        let (x, w) = graded_rule(1.0, 1e-8, 0.25, 16);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.ln()).sum();
        assert!((s + 1.0).abs() < 1e-10);
    }
}
