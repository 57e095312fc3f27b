//! Equilibrium measures: endpoints, densities and leading free energies.
//!
//! At `N = ∞` the equilibrium density of a strictly convex potential is
//! `ρ(ξ) = V″(ξ)/(2πβ(ω₁+ω₂))` on the segment `[a, b]` fixed by
//! `V′(b) = −V′(a) = πβ(ω₁+ω₂)`. At finite `N` the endpoints `(a_N, b_N)`
//! solve a two-equation system (the edge-regularity constraint `𝒳_N[V′] = 0`
//! and the mass constraint `∫𝒲_N[V′] = 1`) which is truncated at order `k` in
//! `N^{−α}` and solved by Newton's method; the density is then the bulk law
//! glued to the edge profile `V″(b_N)·𝔞₀(N^α(b_N − ξ))`.
//!
//! The module also covers the non-rescaled "baby" model with potential
//! `c|ξ|^q`, and a diagnostic for the effective potential outside the
//! support.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::boundary_functions::{shared_table, BoundaryFunctionTable};
use crate::error::{Error, Result};
use crate::model_core::{kernel_s_n, ModelParams, Potential};
use crate::quadrature::{integrate_interval, integrate_interval_with, Endpoints, QuadratureSpec};

/// Largest order of the truncated endpoint system.
pub const MAX_SYSTEM_ORDER: usize = 3;

/// Newton iteration budget of the endpoint solvers.
const NEWTON_ITERATIONS: usize = 50;

/// Endpoints of the equilibrium support at `N = ∞` and at finite `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Support {
    /// Left endpoint at `N = ∞`.
    pub a: f64,
    /// Right endpoint at `N = ∞`.
    pub b: f64,
    /// Left endpoint at the given `N`.
    pub a_n: f64,
    /// Right endpoint at the given `N`.
    pub b_n: f64,
    /// Particle number (`∞` for the limiting support).
    pub n: f64,
    /// First corrections `(a_{N;1}, b_{N;1})` from the closed-form
    /// expression in terms of `V″(a)`, `V″(b)` and the edge constant.
    pub first_corrections: (f64, f64),
    /// First corrections `(a_{N;1}, b_{N;1})` obtained by linearising the
    /// order-1 truncated system around `(a, b)`.
    pub system_first_corrections: (f64, f64),
    /// Order `k` of the truncated system (0 for the limiting support).
    pub order: usize,
}

impl Support {
    /// The limiting support `[a, b]` (no finite-N corrections).
    pub fn infinite(a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::Validation(format!("need a < b (got {a}, {b})")));
        }
        Ok(Self {
            a,
            b,
            a_n: a,
            b_n: b,
            n: f64::INFINITY,
            first_corrections: (0.0, 0.0),
            system_first_corrections: (0.0, 0.0),
            order: 0,
        })
    }

    /// Support with explicitly given finite-N endpoints.
    pub fn with_finite(a: f64, b: f64, a_n: f64, b_n: f64, n: f64) -> Result<Self> {
        let mut s = Self::infinite(a, b)?;
        if !(a_n < b_n) {
            return Err(Error::Validation(format!("need a_N < b_N (got {a_n}, {b_n})")));
        }
        s.a_n = a_n;
        s.b_n = b_n;
        s.n = n;
        Ok(s)
    }

    /// `x̄_N = N^α(b_N − a_N)`.
    pub fn x_bar(&self, params: &ModelParams) -> f64 {
        params.n_alpha(self.n) * (self.b_n - self.a_n)
    }

    /// Finite-N endpoints as a pair.
    pub fn edges(&self) -> (f64, f64) {
        (self.a_n, self.b_n)
    }
}

/// `π β (ω₁+ω₂)`, the common value of `V′(b)` and `−V′(a)`.
fn edge_slope(params: &ModelParams) -> f64 {
    PI * params.beta * params.omega_sum()
}

/// Solves `V′(x) = target` for increasing `V′`, starting from `x0`.
///
/// Brackets by doubling steps in the direction of the root, then runs a
/// Newton iteration safeguarded by bisection.
fn solve_derivative(v: &Potential, target: f64, x0: f64, side: &str) -> Result<f64> {
    let g = |x: f64| v.deriv(1, x) - target;
    let g0 = g(x0);
    if g0 == 0.0 {
        return Ok(x0);
    }
    let dir = if g0 < 0.0 { 1.0 } else { -1.0 };
    let (mut lo, mut hi) = (x0, x0);
    let mut step = 1.0;
    let mut found = false;
    for _ in 0..200 {
        let x = x0 + dir * step;
        if !x.is_finite() || step > 1e12 {
            break;
        }
        let gx = g(x);
        if gx.is_nan() {
            break;
        }
        if gx.signum() != g0.signum() || gx == 0.0 {
            if dir > 0.0 {
                lo = x - dir * step / 2.0;
                hi = x;
            } else {
                lo = x;
                hi = x - dir * step / 2.0;
            }
            found = true;
            break;
        }
        step *= 2.0;
    }
    if !found {
        return Err(Error::Numerical(format!(
            "no root of V′ = {target} on the {side} side of the working window"
        )));
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let gx = g(x);
        if gx == 0.0 {
            return Ok(x);
        }
        if gx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = v.deriv(2, x);
        let newton = x - gx / d;
        let next = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300) || hi - lo <= f64::EPSILON * x.abs()
        {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Checks `V″ > 0` on a sample grid of `[a, b]`.
fn check_convex(v: &Potential, a: f64, b: f64) -> Result<()> {
    let n = 257;
    for i in 0..n {
        let x = a + (b - a) * i as f64 / (n - 1) as f64;
        let d2 = v.deriv(2, x);
        if !(d2 > 0.0) {
            return Err(Error::Validation(format!("V″({x}) = {d2} is not positive on the support")));
        }
    }
    Ok(())
}

/// Endpoints `(a, b)` of the limiting support, from `V′(b) = −V′(a) = πβ(ω₁+ω₂)`.
///
/// Root residuals are below `1e−12·max(1, πβ(ω₁+ω₂))`.
pub fn endpoints_infinite(v: &Potential, params: &ModelParams) -> Result<(f64, f64)> {
    let target = edge_slope(params);
    // Start from the minimiser of V when it can be bracketed; 0 otherwise.
    let x0 = solve_derivative(v, 0.0, 0.0, "central").unwrap_or(0.0);
    let b = solve_derivative(v, target, x0, "right")?;
    let a = solve_derivative(v, -target, x0, "left")?;
    for (x, t, side) in [(a, -target, "left"), (b, target, "right")] {
        let r = (v.deriv(1, x) - t).abs();
        if !(r <= 1e-12 * target.max(1.0)) {
            return Err(Error::Numerical(format!("{side} endpoint residual {r:e} above 1e-12")));
        }
    }
    if !(a < b) {
        return Err(Error::Numerical(format!("degenerate support [{a}, {b}]")));
    }
    check_convex(v, a, b)?;
    Ok((a, b))
}

/// `ρ_eq(ξ) = V″(ξ)/(2πβ(ω₁+ω₂))` on `[a, b]`, zero outside.
pub fn density_infinite(v: &Potential, params: &ModelParams, support: (f64, f64), xi: f64) -> f64 {
    let (a, b) = support;
    if xi < a || xi > b {
        return 0.0;
    }
    v.deriv(2, xi) / (2.0 * edge_slope(params))
}

/// `lim ln Z_N/N^{2+α} = −(V(a)+V(b))/2 + [(V′(b))²(b−a) + ∫_a^b (V′)²]/(4πβ(ω₁+ω₂))`.
pub fn free_energy_leading(v: &Potential, params: &ModelParams) -> Result<f64> {
    let (a, b) = endpoints_infinite(v, params)?;
    let spec = QuadratureSpec { rel_tol: 1e-13, abs_tol: 1e-15, ..QuadratureSpec::default() };
    let int = integrate_interval(|x: f64| v.deriv(1, x).powi(2), a, b, &spec)?.value;
    let vb = v.deriv(1, b);
    Ok(-(v.eval(a) + v.eval(b)) / 2.0 + (vb * vb * (b - a) + int) / (4.0 * edge_slope(params)))
}

/// `∫_lo^hi |ξ − η| ρ(η) dη` by adaptive quadrature split at `ξ` and at the
/// extra breakpoints, with singular-end substitutions where requested.
fn absolute_moment(
    rho: &dyn Fn(f64) -> f64,
    xi: f64,
    breaks: &[f64],
    singular_at: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    let mut pts: Vec<f64> = breaks.to_vec();
    pts.push(xi);
    pts.sort_by(|p, q| p.total_cmp(q));
    pts.dedup();
    let lo = breaks.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = breaks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (p, q) = (w[0], w[1]);
        if p < lo || q > hi || q <= p {
            continue;
        }
        let sl = singular_at.contains(&p);
        let sr = singular_at.contains(&q);
        let ends = match (sl, sr) {
            (true, true) => Endpoints::SingularBoth,
            (true, false) => Endpoints::SingularLeft,
            (false, true) => Endpoints::SingularRight,
            (false, false) => Endpoints::Regular,
        };
        total += integrate_interval_with(|y: f64| (xi - y).abs() * rho(y), p, q, ends, spec)?.value;
    }
    Ok(total)
}

/// `−E_∞[μ]` for a density `ρ` on `[lo, hi]`, where
/// `E_∞[μ] = ∫V dμ − (πβ(ω₁+ω₂)/2)∫∫|ξ−η| dμ dμ`, by nested quadrature.
fn minus_rate(
    v: &dyn Fn(f64) -> f64,
    rho: &dyn Fn(f64) -> f64,
    breaks: &[f64],
    singular_at: &[f64],
    params: &ModelParams,
    rel_tol: f64,
) -> Result<f64> {
    let outer = QuadratureSpec { rel_tol, abs_tol: rel_tol * 1e-3, ..QuadratureSpec::default() };
    let inner = outer.scaled(0.1);
    let failure = std::sync::Mutex::new(None);
    let mut pts = breaks.to_vec();
    pts.sort_by(|p, q| p.total_cmp(q));
    pts.dedup();
    let mut energy = 0.0;
    for w in pts.windows(2) {
        let (p, q) = (w[0], w[1]);
        let ends = match (singular_at.contains(&p), singular_at.contains(&q)) {
            (true, true) => Endpoints::SingularBoth,
            (true, false) => Endpoints::SingularLeft,
            (false, true) => Endpoints::SingularRight,
            (false, false) => Endpoints::Regular,
        };
        let f = |x: f64| {
            let m = match absolute_moment(rho, x, breaks, singular_at, &inner) {
                Ok(m) => m,
                Err(e) => {
                    *failure.lock().unwrap_or_else(|e| e.into_inner()) = Some(e);
                    0.0
                }
            };
            rho(x) * (v(x) - 0.5 * edge_slope(params) * m)
        };
        energy += integrate_interval_with(f, p, q, ends, &outer)?.value;
    }
    if let Some(e) = failure.into_inner().unwrap_or_else(|e| e.into_inner()) {
        return Err(e);
    }
    Ok(-energy)
}

/// Independent value of the leading free energy: `−E_∞[μ_eq]` by direct
/// double quadrature of the rate function at the equilibrium density.
pub fn free_energy_oracle(v: &Potential, params: &ModelParams, rel_tol: f64) -> Result<f64> {
    let (a, b) = endpoints_infinite(v, params)?;
    let rho = |x: f64| density_infinite(v, params, (a, b), x);
    minus_rate(&|x| v.eval(x), &rho, &[a, b], &[], params, rel_tol)
}

/// Results of the baby polynomial model `V(ξ) = c|ξ|^q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BabyModelReport {
    /// Exponent `q > 1`.
    pub q: f64,
    /// Coefficient `c > 0`.
    pub c: f64,
    /// Right endpoint; the support is `[−b, b]`.
    pub b: f64,
    /// Total mass of the density by quadrature.
    pub mass: f64,
    /// The closed-form limit with the factor `(2q²−9q+6)/(2(2q−1))`, as
    /// stated for this model.
    pub limit_stated: f64,
    /// The closed form obtained by evaluating the rate function at the
    /// equilibrium density analytically:
    /// `(πβs/q)^{q/(q−1)} c^{−1/(q−1)} (q−1)²/(2q−1)`.
    pub limit_evaluated: f64,
    /// `−E[μ_eq]` by double quadrature at relative tolerance 1e−12.
    pub oracle: f64,
    /// The same oracle at relative tolerance 1e−10 (self-consistency).
    pub oracle_loose: f64,
    /// Set when the stated closed form and the oracle differ by more than
    /// 1e−6 (relative).
    pub stated_limit_disagrees: bool,
}

fn baby_validate(q: f64, c: f64) -> Result<()> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::Validation(format!("baby model needs q > 1 (got {q})")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Validation(format!("baby model needs c > 0 (got {c})")));
    }
    Ok(())
}

/// Right endpoint `b = (πβs/(cq))^{1/(q−1)}` of the baby model.
pub fn baby_endpoint(q: f64, c: f64, params: &ModelParams) -> Result<f64> {
    baby_validate(q, c)?;
    Ok((edge_slope(params) / (c * q)).powf(1.0 / (q - 1.0)))
}

/// Baby-model density `c q(q−1)|ξ|^{q−2}/(2πβs)` on `[−b, b]`.
pub fn baby_density(q: f64, c: f64, params: &ModelParams, xi: f64) -> Result<f64> {
    let b = baby_endpoint(q, c, params)?;
    if xi.abs() > b {
        return Ok(0.0);
    }
    Ok(c * q * (q - 1.0) * xi.abs().powf(q - 2.0) / (2.0 * edge_slope(params)))
}

/// Endpoints, mass, both closed forms and the double-quadrature oracle of
/// the baby polynomial model.
pub fn baby_model(q: f64, c: f64, params: &ModelParams) -> Result<BabyModelReport> {
    let b = baby_endpoint(q, c, params)?;
    let pb = edge_slope(params);
    let k = c * q * (q - 1.0) / (2.0 * pb);
    let rho = |x: f64| if x == 0.0 && q < 2.0 { 0.0 } else { k * x.abs().powf(q - 2.0) };
    let v = |x: f64| c * x.abs().powf(q);
    let singular: Vec<f64> = if q < 2.0 { vec![0.0] } else { vec![] };
    let spec = QuadratureSpec { rel_tol: 1e-13, abs_tol: 1e-15, ..QuadratureSpec::default() };
    let ends = if q < 2.0 { Endpoints::SingularLeft } else { Endpoints::Regular };
    let mass = 2.0 * integrate_interval_with(rho, 0.0, b, ends, &spec)?.value;
    let breaks = [-b, 0.0, b];
    let oracle = minus_rate(&v, &rho, &breaks, &singular, params, 1e-12)?;
    let oracle_loose = minus_rate(&v, &rho, &breaks, &singular, params, 1e-10)?;
    let limit_stated =
        c.powf(1.0 / q) * (pb / q).powf((q + 1.0) / q) * (2.0 * q * q - 9.0 * q + 6.0) / (2.0 * (2.0 * q - 1.0));
    let limit_evaluated =
        (pb / q).powf(q / (q - 1.0)) * c.powf(-1.0 / (q - 1.0)) * (q - 1.0).powi(2) / (2.0 * q - 1.0);
    Ok(BabyModelReport {
        q,
        c,
        b,
        mass,
        limit_stated,
        limit_evaluated,
        oracle,
        oracle_loose,
        stated_limit_disagrees: (limit_stated - oracle).abs() > 1e-6 * oracle.abs().max(1.0),
    })
}

/// Coefficients of the truncated endpoint system at a given `N`.
#[derive(Debug, Clone)]
struct SystemCoefficients {
    /// `N^{−α}`.
    x: f64,
    /// `i^p ℸ_p`, `p = 0 … k`.
    rotated: Vec<f64>,
    /// `u_ℓ`, `ℓ = 1 … k+1` (index 0 ↦ `u_1`).
    u: Vec<f64>,
    /// `ℸ_{0,p−1}`, `p = 1 … k` (index 0 ↦ `ℸ_{0,0}`).
    d0: Vec<f64>,
}

impl SystemCoefficients {
    fn new(table: &BoundaryFunctionTable, n: f64, k: usize) -> Result<Self> {
        let p = table.params();
        let x = 1.0 / p.n_alpha(n);
        let rotated = (0..=k).map(|q| table.daleth_p_rotated(q)).collect::<Result<Vec<_>>>()?;
        let u = table.u_coeffs(k + 1)?;
        let d0 = (1..=k).map(|q| table.daleth_sl_value(0, q - 1)).collect::<Result<Vec<_>>>()?;
        Ok(Self { x, rotated, u, d0 })
    }

    /// `(E1, E2 − 1)` and the Jacobian `[[∂E1/∂a, ∂E1/∂b], [∂E2/∂a, ∂E2/∂b]]`.
    fn residual(&self, v: &Potential, a: f64, b: f64) -> ([f64; 2], [[f64; 2]; 2]) {
        let k = self.rotated.len() - 1;
        let sgn = |p: usize| if p.is_multiple_of(2) { 1.0 } else { -1.0 };
        let (mut e1, mut e1a, mut e1b) = (0.0, 0.0, 0.0);
        let mut xp = 1.0;
        for p in 0..=k {
            let r = self.rotated[p] * xp;
            e1 += r * (v.deriv(p + 1, a) + sgn(p) * v.deriv(p + 1, b));
            e1a += r * v.deriv(p + 2, a);
            e1b += r * sgn(p) * v.deriv(p + 2, b);
            xp *= self.x;
        }
        let u1 = self.u[0];
        let mut e2 = u1 * (v.deriv(1, b) - v.deriv(1, a));
        let mut e2a = -u1 * v.deriv(2, a);
        let mut e2b = u1 * v.deriv(2, b);
        let mut xp = self.x;
        for p in 1..=k {
            let (up, dp) = (self.u[p], self.d0[p - 1]);
            let s = sgn(p - 1);
            e2 += xp
                * (up * (v.deriv(p + 1, b) - v.deriv(p + 1, a))
                    + dp * (v.deriv(p + 1, b) + s * v.deriv(p + 1, a)));
            e2a += xp * (-up + dp * s) * v.deriv(p + 2, a);
            e2b += xp * (up + dp) * v.deriv(p + 2, b);
            xp *= self.x;
        }
        ([e1, e2 - 1.0], [[e1a, e1b], [e2a, e2b]])
    }
}

/// First corrections `(a_{N;1}, b_{N;1})` from the closed form
/// `b_{N;1} = C·V″(a)/V″(b)`, `a_{N;1} = −C·V″(b)/V″(a)` with `C` the edge
/// constant `Σ_p (1/2πω_p) ln(ω₁ω₂/(ω_p(ω₁+ω₂)))`.
pub fn first_corrections_closed_form(v: &Potential, params: &ModelParams, a: f64, b: f64) -> (f64, f64) {
    let c = params.edge_log_sum();
    let (va, vb) = (v.deriv(2, a), v.deriv(2, b));
    (-c * vb / va, c * va / vb)
}

/// First corrections `(a_{N;1}, b_{N;1})` from the linearisation of the
/// order-1 truncated system around the limiting endpoints.
pub fn first_corrections_from_system(v: &Potential, params: &ModelParams, a: f64, b: f64) -> Result<(f64, f64)> {
    let table = shared_table(params);
    let r0 = table.daleth_p_rotated(0)?;
    let r1 = table.daleth_p_rotated(1)?;
    let u = table.u_coeffs(2)?;
    let d00 = table.daleth_sl_value(0, 0)?;
    let (va, vb) = (v.deriv(2, a), v.deriv(2, b));
    // A = V″(a)a₁, B = V″(b)b₁.
    let sum = -r1 * (va - vb) / r0;
    let diff = -(u[1] * (vb - va) + d00 * (vb + va)) / u[0];
    let bb = 0.5 * (sum + diff);
    let aa = 0.5 * (sum - diff);
    Ok((aa / va, bb / vb))
}

/// Endpoints `(a_N, b_N)` from the order-`k` truncated system, `1 ≤ k ≤ 3`,
/// solved by Newton's method from the `N = ∞` endpoints.
pub fn endpoints_n(v: &Potential, params: &ModelParams, n: f64, order: usize) -> Result<Support> {
    if !(1..=MAX_SYSTEM_ORDER).contains(&order) {
        return Err(Error::Validation(format!("system order must be 1..={MAX_SYSTEM_ORDER} (got {order})")));
    }
    if !(n >= 1.0) {
        return Err(Error::Validation(format!("N must be at least 1 (got {n})")));
    }
    if v.k_max() < order + 2 {
        return Err(Error::Validation(format!(
            "order {order} needs derivatives up to {} (potential provides {})",
            order + 2,
            v.k_max()
        )));
    }
    let (a, b) = endpoints_infinite(v, params)?;
    let mut support = Support::infinite(a, b)?;
    support.first_corrections = first_corrections_closed_form(v, params, a, b);
    support.system_first_corrections = first_corrections_from_system(v, params, a, b)?;
    support.order = order;
    support.n = n;
    if n == f64::INFINITY {
        return Ok(support);
    }
    let table = shared_table(params);
    let coeffs = SystemCoefficients::new(&table, n, order)?;
    let (mut an, mut bn) = (a, b);
    let scale = (b - a).max(1e-300);
    for _ in 0..NEWTON_ITERATIONS {
        let (f, j) = coeffs.residual(v, an, bn);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !(det.abs() > 0.0) || !det.is_finite() {
            return Err(Error::Numerical(format!("singular endpoint Jacobian at ({an}, {bn})")));
        }
        let da = (f[0] * j[1][1] - f[1] * j[0][1]) / det;
        let db = (j[0][0] * f[1] - j[1][0] * f[0]) / det;
        an -= da;
        bn -= db;
        if !(an < bn) {
            return Err(Error::Numerical(format!("Newton produced a degenerate support ({an}, {bn})")));
        }
        if da.abs().max(db.abs()) <= 4.0 * f64::EPSILON * scale.max(an.abs()).max(bn.abs()) {
            support.a_n = an;
            support.b_n = bn;
            return Ok(support);
        }
    }
    let (f, _) = coeffs.residual(v, an, bn);
    let res = f[0].abs().max(f[1].abs());
    if res < 1e-13 {
        support.a_n = an;
        support.b_n = bn;
        return Ok(support);
    }
    Err(Error::NonConvergence {
        what: format!("endpoint system at N = {n}, order {order}"),
        value: bn,
        error: res,
    })
}

/// Richardson extraction of `(a_{N;1}, b_{N;1})` from the solver at two
/// particle numbers: with `f(x) = (b_N − b)/x`, `x = N^{−α}`, linear
/// extrapolation of `f` to `x = 0`.
pub fn richardson_first_corrections(
    v: &Potential,
    params: &ModelParams,
    n1: f64,
    n2: f64,
    order: usize,
) -> Result<(f64, f64)> {
    let s1 = endpoints_n(v, params, n1, order)?;
    let s2 = endpoints_n(v, params, n2, order)?;
    let (x1, x2) = (1.0 / params.n_alpha(n1), 1.0 / params.n_alpha(n2));
    let extrap = |e1: f64, e2: f64, lim: f64| {
        let (f1, f2) = ((e1 - lim) / x1, (e2 - lim) / x2);
        (f1 * x2 - f2 * x1) / (x2 - x1)
    };
    Ok((extrap(s1.a_n, s2.a_n, s1.a), extrap(s1.b_n, s2.b_n, s1.b)))
}

/// An equilibrium density at `N = ∞` or at finite `N`.
///
/// Finite-N densities glue the bulk law to the edge profiles
/// `V″(b_N)𝔞₀(N^α(b_N − ξ))` and `V″(a_N)𝔞₀(N^α(ξ − a_N))`. The switch
/// happens at distance `d = (ln N)²/N^α` from each edge (capped at 45% of the
/// support length), blended linearly over a zone of width `0.1·d`.
#[derive(Clone)]
pub struct EquilibriumDensity {
    /// Support (finite-N endpoints are used when `n` is set).
    pub support: Support,
    /// Particle number; `None` for the limiting density.
    pub n: Option<f64>,
    potential: Potential,
    params: ModelParams,
    table: Option<Arc<BoundaryFunctionTable>>,
}

impl std::fmt::Debug for EquilibriumDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EquilibriumDensity").field("support", &self.support).field("n", &self.n).finish()
    }
}

impl EquilibriumDensity {
    /// The limiting density `V″/(2πβs)` on `[a, b]`.
    pub fn infinite(v: &Potential, params: &ModelParams) -> Result<Self> {
        let (a, b) = endpoints_infinite(v, params)?;
        Ok(Self { support: Support::infinite(a, b)?, n: None, potential: v.clone(), params: *params, table: None })
    }

    /// The finite-N density on a support computed at order ≥ 1.
    pub fn finite(v: &Potential, params: &ModelParams, support: Support) -> Result<Self> {
        if support.order < 1 || !support.n.is_finite() {
            return Err(Error::Validation("finite-N density needs a support of order ≥ 1 and finite N".into()));
        }
        Ok(Self {
            support,
            n: Some(support.n),
            potential: v.clone(),
            params: *params,
            table: Some(shared_table(params)),
        })
    }

    /// Interval `[lo, hi]` carrying the density.
    pub fn interval(&self) -> (f64, f64) {
        match self.n {
            Some(_) => (self.support.a_n, self.support.b_n),
            None => (self.support.a, self.support.b),
        }
    }

    /// Switch distance `d` and blending width `w` of the finite-N density.
    pub fn zones(&self) -> Option<(f64, f64)> {
        let n = self.n?;
        let (lo, hi) = self.interval();
        let d = (n.ln().powi(2) / self.params.n_alpha(n)).min(0.45 * (hi - lo));
        Some((d, 0.1 * d))
    }

    /// Breakpoints of the piecewise definition inside the support.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (lo, hi) = self.interval();
        let mut pts = vec![lo, hi];
        if let Some((d, w)) = self.zones() {
            for off in [d - 0.5 * w, d + 0.5 * w] {
                pts.push(lo + off);
                pts.push(hi - off);
            }
        }
        pts.sort_by(|p, q| p.total_cmp(q));
        pts.dedup();
        pts
    }

    /// Density at `ξ` (zero outside the support).
    pub fn density(&self, xi: f64) -> Result<f64> {
        let (lo, hi) = self.interval();
        if !(xi >= lo && xi <= hi) {
            return Ok(0.0);
        }
        let v = &self.potential;
        let bulk = v.deriv(2, xi) / (2.0 * edge_slope(&self.params));
        let (Some(n), Some(table), Some((d, w))) = (self.n, self.table.as_ref(), self.zones()) else {
            return Ok(bulk);
        };
        let na = self.params.n_alpha(n);
        let (da, db) = (xi - lo, hi - xi);
        let (dist, edge_v2) = if db <= da { (db, v.deriv(2, hi)) } else { (da, v.deriv(2, lo)) };
        if dist >= d + 0.5 * w {
            return Ok(bulk);
        }
        let edge = edge_v2 * table.a0(na * dist)?;
        if dist <= d - 0.5 * w {
            return Ok(edge);
        }
        let t = (dist - (d - 0.5 * w)) / w;
        Ok((1.0 - t) * edge + t * bulk)
    }

    /// Total mass by adaptive quadrature over the pieces.
    pub fn mass(&self, rel_tol: f64) -> Result<f64> {
        let spec = QuadratureSpec { rel_tol, abs_tol: rel_tol * 1e-2, ..QuadratureSpec::default() };
        let pts = self.breakpoints();
        let failure = std::sync::Mutex::new(None);
        let f = |x: f64| match self.density(x) {
            Ok(v) => v,
            Err(e) => {
                *failure.lock().unwrap_or_else(|e| e.into_inner()) = Some(e);
                0.0
            }
        };
        let mut total = 0.0;
        let last = pts.len() - 2;
        for (i, w) in pts.windows(2).enumerate() {
            // The edge profile has a square-root onset at both endpoints.
            let ends = match (i == 0, i == last) {
                (true, true) => Endpoints::SingularBoth,
                (true, false) => Endpoints::SingularLeft,
                (false, true) => Endpoints::SingularRight,
                _ => Endpoints::Regular,
            };
            total += integrate_interval_with(f, w[0], w[1], ends, &spec)?.value;
        }
        if let Some(e) = failure.into_inner().unwrap_or_else(|e| e.into_inner()) {
            return Err(e);
        }
        Ok(total)
    }
}

/// The finite-N density `ρ_eq^{(N)}(ξ)` for a support computed at order ≥ 1.
pub fn density_n(v: &Potential, params: &ModelParams, support: &Support, xi: f64) -> Result<f64> {
    EquilibriumDensity::finite(v, params, *support)?.density(xi)
}

/// Edge slope `N^{α/2}V″(b)/(πβ√(π(ω₁+ω₂)))` of the finite-N density,
/// `ρ(b_N − s) ≈ slope·√s` as `s → 0`.
pub fn edge_slope_coefficient(v: &Potential, params: &ModelParams, n: f64, b: f64) -> f64 {
    params.n_alpha(n).sqrt() * v.deriv(2, b) / (PI * params.beta * (PI * params.omega_sum()).sqrt())
}

/// Values of the effective potential on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectivePotentialReport {
    /// Grid points.
    pub grid: Vec<f64>,
    /// `V(ξ) − 2∫s_N(ξ−η)ρ_N(η)dη − C` at the grid points.
    pub values: Vec<f64>,
    /// Support midpoint where the constant is anchored.
    pub midpoint: f64,
    /// The anchoring constant `C_eq^{(N)}`.
    pub constant: f64,
    /// Minimum over grid points outside the support (`+∞` if none).
    pub min_outside: f64,
}

/// `V(ξ) − 2∫ s_N(ξ−η)ρ_N(η)dη` with the log singularity at `η = ξ` handled
/// by splitting.
fn effective_raw(density: &EquilibriumDensity, params: &ModelParams, n: f64, xi: f64) -> Result<f64> {
    let spec = QuadratureSpec { rel_tol: 1e-10, abs_tol: 1e-13, ..QuadratureSpec::default() };
    let mut pts = density.breakpoints();
    let (lo, hi) = density.interval();
    let inside = xi > lo && xi < hi;
    if inside {
        pts.push(xi);
        pts.sort_by(|p, q| p.total_cmp(q));
        pts.dedup();
    }
    let failure = std::sync::Mutex::new(None);
    let f = |eta: f64| {
        let r = density.density(eta).and_then(|rho| {
            if eta == xi || rho == 0.0 {
                Ok(0.0)
            } else {
                Ok(kernel_s_n(params, n, xi - eta)? * rho)
            }
        });
        r.unwrap_or_else(|e| {
            *failure.lock().unwrap_or_else(|e| e.into_inner()) = Some(e);
            0.0
        })
    };
    let mut total = 0.0;
    let last = pts.len() - 2;
    for (i, w) in pts.windows(2).enumerate() {
        let sl = i == 0 || w[0] == xi;
        let sr = i == last || w[1] == xi;
        let ends = match (sl, sr) {
            (true, true) => Endpoints::SingularBoth,
            (true, false) => Endpoints::SingularLeft,
            (false, true) => Endpoints::SingularRight,
            _ => Endpoints::Regular,
        };
        total += integrate_interval_with(f, w[0], w[1], ends, &spec)?.value;
    }
    if let Some(e) = failure.into_inner().unwrap_or_else(|e| e.into_inner()) {
        return Err(e);
    }
    Ok(density.potential.eval(xi) - 2.0 * total)
}

/// Diagnostic for the effective potential `V − 2 s_N * ρ_N − C_eq^{(N)}`,
/// with the constant fixed so that the value at the support midpoint is 0.
/// It should be non-negative outside the support.
pub fn effective_potential_check(
    v: &Potential,
    params: &ModelParams,
    support: &Support,
    grid: &[f64],
) -> Result<EffectivePotentialReport> {
    let density = EquilibriumDensity::finite(v, params, *support)?;
    let n = support.n;
    let mid = 0.5 * (support.a_n + support.b_n);
    let constant = effective_raw(&density, params, n, mid)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut min_outside = f64::INFINITY;
    for &x in grid {
        let q = if x == mid { 0.0 } else { effective_raw(&density, params, n, x)? - constant };
        if x < support.a_n || x > support.b_n {
            min_outside = min_outside.min(q);
        }
        values.push(q);
    }
    Ok(EffectivePotentialReport { grid: grid.to_vec(), values, midpoint: mid, constant, min_outside })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(alpha: f64) -> ModelParams {
        ModelParams::symmetric_unit(alpha)
    }

    fn quartic() -> Potential {
        Potential::even_polynomial(vec![0.0, 0.0, 0.5, 0.0, 0.25]).unwrap()
    }

    #[test]
    fn gaussian_endpoints_and_density() {
        let p = unit(0.2);
        let v = Potential::quadratic(1.0, 0.0).unwrap();
        let (a, b) = endpoints_infinite(&v, &p).unwrap();
        assert!((a + PI).abs() < 1e-14 && (b - PI).abs() < 1e-14);
        let d = density_infinite(&v, &p, (a, b), 0.3);
        assert!((d - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert_eq!(density_infinite(&v, &p, (a, b), 3.2), 0.0);
        // general quadratic, with β and ω different from 1
        let q = ModelParams::new(0.7, 1.9, 1.3, 0.1).unwrap();
        let w = Potential::quadratic(2.5, -0.4).unwrap();
        let (a, b) = endpoints_infinite(&w, &q).unwrap();
        let ps = PI * 1.3 * 2.6;
        assert!((b - (ps + 0.4) / 5.0).abs() < 1e-13);
        assert!((a - (-ps + 0.4) / 5.0).abs() < 1e-13);
    }

    #[test]
    fn quartic_endpoint_root() {
        let p = unit(0.2);
        let v = quartic();
        let (a, b) = endpoints_infinite(&v, &p).unwrap();
        // b + b³ = 2π
        assert!((b + b.powi(3) - 2.0 * PI).abs() < 1e-12);
        assert!((a + b).abs() < 1e-13);
        let e = EquilibriumDensity::infinite(&v, &p).unwrap();
        assert!((e.mass(1e-12).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn missing_root_is_reported_by_side() {
        // V′ = tanh-like bounded derivative cannot reach 2π
        let v = Potential::custom(
            4,
            Arc::new(|k, x: f64| match k {
                0 => x.cosh().ln(),
                1 => x.tanh(),
                2 => 1.0 / x.cosh().powi(2),
                _ => 0.0,
            }),
        )
        .unwrap();
        let err = endpoints_infinite(&v, &unit(0.2)).unwrap_err();
        assert!(err.to_string().contains("right"), "{err}");
    }

    #[test]
    fn free_energy_closed_form_and_oracle() {
        let p = unit(0.2);
        let v = Potential::quadratic(1.0, 0.0).unwrap();
        let f = free_energy_leading(&v, &p).unwrap();
        assert!((f - PI * PI / 3.0).abs() < 1e-12, "{f}");
        let o = free_energy_oracle(&v, &p, 1e-12).unwrap();
        assert!((f - o).abs() < 1e-8, "{f} {o}");
        // shift by a constant
        let g = free_energy_leading(&v.plus_constant(0.75), &p).unwrap();
        assert!((g - (f - 0.75)).abs() < 1e-12);
        // quartic, non-unit parameters
        let q = ModelParams::new(0.8, 1.3, 0.9, 0.1).unwrap();
        let w = quartic();
        let f = free_energy_leading(&w, &q).unwrap();
        let o = free_energy_oracle(&w, &q, 1e-12).unwrap();
        assert!((f - o).abs() < 1e-8, "{f} {o}");
    }

    #[test]
    fn baby_model_values() {
        let p = unit(0.2);
        let r = baby_model(2.0, 1.0, &p).unwrap();
        assert!((r.b - PI).abs() < 1e-14);
        assert!((baby_density(2.0, 1.0, &p, 1.0).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((r.mass - 1.0).abs() < 1e-10);
        assert!((r.limit_evaluated - PI * PI / 3.0).abs() < 1e-12);
        assert!((r.oracle - r.limit_evaluated).abs() < 1e-8, "{r:?}");
        assert!((r.oracle - r.oracle_loose).abs() < 1e-7);
        for q in [1.5, 3.0] {
            let r = baby_model(q, 1.3, &p).unwrap();
            assert!((r.mass - 1.0).abs() < 1e-10, "{r:?}");
            assert!((r.oracle - r.oracle_loose).abs() < 1e-7, "{r:?}");
            assert!((r.oracle - r.limit_evaluated).abs() < 1e-7 * r.oracle.abs().max(1.0), "{r:?}");
        }
        assert!(baby_model(1.0, 1.0, &p).is_err());
    }

    #[test]
    fn first_corrections_forms() {
        let p = unit(0.1);
        let v = Potential::quadratic(1.0, 0.0).unwrap();
        let (a1, b1) = first_corrections_closed_form(&v, &p, -PI, PI);
        let l = 2f64.ln() / PI;
        assert!((b1 + l).abs() < 1e-15 && (a1 - l).abs() < 1e-15);
        let (a1, b1) = first_corrections_from_system(&v, &p, -PI, PI).unwrap();
        assert!((b1 - l).abs() < 1e-8 && (a1 + l).abs() < 1e-8, "{a1} {b1}");
    }

    #[test]
    fn endpoint_system_solutions() {
        let p = unit(0.1);
        let v = Potential::quadratic(1.0, 0.0).unwrap();
        let s = endpoints_n(&v, &p, 1e6, 1).unwrap();
        // quadratic: the order-1 system is exactly linear in N^{−α}
        let x = 1e6f64.powf(-0.1);
        let l = 2f64.ln() / PI;
        assert!((s.b_n - (PI + l * x)).abs() < 1e-9, "{s:?}");
        assert!((s.a_n + s.b_n).abs() < 1e-10);
        // symmetric for even V and ω₁ = ω₂ at every order
        let w = quartic();
        for k in 1..=3 {
            let s = endpoints_n(&w, &p, 1e4, k).unwrap();
            assert!((s.a_n + s.b_n).abs() < 1e-10, "{s:?}");
        }
        // convergence towards (a, b) at rate N^{−α}
        let ns = [1e4, 1e8, 1e12];
        let gaps: Vec<f64> = ns.iter().map(|&n| (endpoints_n(&w, &p, n, 2).unwrap().b_n - endpoints_n(&w, &p, n, 2).unwrap().b).abs()).collect();
        for (i, g) in gaps.iter().enumerate() {
            let r = g * p.n_alpha(ns[i]);
            assert!(r > 0.05 && r < 1.0, "{r}");
        }
        assert!(endpoints_n(&w, &p, 1e4, 4).is_err());
        // Richardson extraction recovers the system's linear coefficient
        let (_, b1) = richardson_first_corrections(&w, &p, 2f64.powi(40), 2f64.powi(60), 3).unwrap();
        let (_, sb1) = endpoints_n(&w, &p, 1e4, 1).unwrap().system_first_corrections;
        assert!((b1 - sb1).abs() < 0.02 * sb1.abs(), "{b1} {sb1}");
    }

    #[test]
    fn finite_density_edges_slope_and_mass() {
        let p = unit(0.2);
        let v = Potential::quadratic(1.0, 0.0).unwrap();
        let n = 1e4;
        let s = endpoints_n(&v, &p, n, 1).unwrap();
        let d = EquilibriumDensity::finite(&v, &p, s).unwrap();
        assert_eq!(d.density(s.b_n).unwrap(), 0.0);
        assert_eq!(d.density(s.a_n).unwrap(), 0.0);
        let slope = edge_slope_coefficient(&v, &p, n, s.b);
        let h = 1e-6 / p.n_alpha(n);
        let got = d.density(s.b_n - h).unwrap() / h.sqrt();
        assert!((got / slope - 1.0).abs() < 0.01, "{got} {slope}");
        let m = d.mass(1e-9).unwrap();
        assert!((m - 1.0).abs() < 5.0 / p.n_alpha(n), "{m}");
        // non-negative on a grid
        for i in 0..=200 {
            let x = s.a_n + (s.b_n - s.a_n) * i as f64 / 200.0;
            assert!(d.density(x).unwrap() >= 0.0);
        }
    }

    #[test]
    fn effective_potential_diagnostic() {
        let p = unit(0.1);
        let v = Potential::quadratic(1.0, 0.0).unwrap();
        let s = endpoints_n(&v, &p, 100.0, 1).unwrap();
        let mid = 0.5 * (s.a_n + s.b_n);
        let grid = [mid, s.b_n + 1.0, s.b_n + 5.0, s.b_n + 10.0];
        let r = effective_potential_check(&v, &p, &s, &grid).unwrap();
        assert_eq!(r.values[0], 0.0);
        assert!(r.values[1] > 0.0, "{r:?}");
        assert!(r.values[3] / r.values[2] >= 2.0, "{r:?}");
        assert!(r.min_outside > 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn mass_one_for_random_convex_even_polynomials(c2 in 0.2f64..3.0, c4 in 0.0f64..1.0, c6 in 0.0f64..0.2) {
            let p = unit(0.2);
            let v = Potential::even_polynomial(vec![0.0, 0.0, c2, 0.0, c4, 0.0, c6]).unwrap();
            let e = EquilibriumDensity::infinite(&v, &p).unwrap();
            prop_assert!((e.mass(1e-12).unwrap() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn increasing_t_shifts_support_left(g in 0.3f64..3.0, t in -2.0f64..2.0, dt in 0.01f64..1.0) {
            let p = unit(0.2);
            let (a0, b0) = endpoints_infinite(&Potential::quadratic(g, t).unwrap(), &p).unwrap();
            let (a1, b1) = endpoints_infinite(&Potential::quadratic(g, t + dt).unwrap(), &p).unwrap();
            prop_assert!(a1 < a0 && b1 < b0);
        }
    }
}
