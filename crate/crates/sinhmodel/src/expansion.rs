//! Large-N expansion of `ln(Z_N[V]/Z_N[W_{G;N}])` at β = 1.
//!
//! The assembled expansion reads
//!
//! ```text
//! −N^{2+α} Σ_{p=0}^{⌊2/α⌋+1} ♑_p N^{−αp} + N^α ℷ₀ (♌(b_N) − ♌(a_N)) + ℵ₀ (♌′(b_N) + ♌′(a_N))
//! ```
//!
//! where `W_{G;N}` is the Gaussian potential whose finite-N support coincides
//! with that of `V`, `♌ = (V′−W′)/(V″−W″)·ln(V″/W″)`, and the coefficients
//! `♑_p` combine `u_ℓ`, `ℸ_{s,ℓ}` and `V_N^± = V ± W_{G;N}`.
//!
//! The module also exposes the truncated expansions that define the
//! finite-N endpoints (the constraint functional `𝒳_N` and the single
//! integral `𝕴_s`) and the leading asymptotics of the double integral.

use std::f64::consts::PI;

use serde::Serialize;

use crate::boundary_functions::{shared_table, BoundaryFunctionTable};
use crate::equilibrium::Support;
use crate::error::{Error, Result};
use crate::gaussian_exact::{gaussian_log_z_exact, matched_gaussian, w_gn, GaussianSpec};
use crate::model_core::{ModelParams, Potential};
use crate::quadrature::{integrate_interval, QuadratureSpec};

/// A function given through its derivatives: `(k, x) ↦ H^{(k)}(x)`.
pub type DerivativeStack<'a> = &'a dyn Fn(usize, f64) -> f64;

/// Largest particle number for which the absolute variant evaluates the
/// exact Gaussian partition function.
const EXACT_GAUSSIAN_MAX_N: f64 = 1e7;

/// Threshold `|V″−W″| < 1e−6·W″` for the regularised `♌` series.
const LEO_SWITCH: f64 = 1e-6;

/// Imaginary-part tolerance for the rotated `i^p ℸ_p`.
const REALNESS_TOL: f64 = 1e-8;

fn quad_spec() -> QuadratureSpec {
    QuadratureSpec { rel_tol: 1e-12, abs_tol: 1e-14, ..QuadratureSpec::default() }
}

/// One term `coefficient · N^{exponent}` of an expansion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionTerm {
    /// Short name of the term.
    pub label: String,
    /// Power of `N`.
    pub exponent: f64,
    /// Coefficient multiplying `N^{exponent}`.
    pub coefficient: f64,
    /// `coefficient · N^{exponent}`.
    pub value: f64,
}

impl ExpansionTerm {
    fn new(label: impl Into<String>, exponent: f64, coefficient: f64, n: f64) -> Self {
        let value = if coefficient == 0.0 { 0.0 } else { coefficient * n.powf(exponent) };
        Self { label: label.into(), exponent, coefficient, value }
    }
}

/// The assembled expansion at a given `N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionReport {
    /// Terms in the order of the expansion.
    pub terms: Vec<ExpansionTerm>,
    /// Sum of the term values: the expansion of `ln(Z_N[V]/Z_N[W_{G;N}])`.
    pub total: f64,
    /// Upper index `⌊2/α⌋+1` of the `♑_p` sum.
    pub truncation_order: usize,
    /// Size of the neglected remainder.
    pub error_order_label: String,
    /// Particle number.
    pub n: f64,
    /// Support used for `W_{G;N}`.
    pub support: Support,
    /// Coefficients `(g_N, t_N)` of the matched Gaussian.
    pub matched_gaussian: (f64, f64),
    /// `ln Z_N[W_{G;N}]` from the exact Gaussian formula, when `N` is an
    /// integer not above 1e7.
    pub reference_log_z: Option<f64>,
    /// `total + reference_log_z`: the resulting approximation of `ln Z_N[V]`.
    pub absolute_log_z: Option<f64>,
}

/// `♌[V, W](ξ) = (V′−W′)/(V″−W″)·ln(V″/W″)`, with the regularised series
/// `(V′−W′)/W″·(1 − r/2 + r²/3)`, `r = (V″−W″)/W″`, when `|r| < 1e−6`.
pub fn leo(v: &Potential, w: &Potential, xi: f64) -> Result<f64> {
    leo_stack(&|k, x| v.deriv(k, x), &|k, x| w.deriv(k, x), xi)
}

/// `♌′[V, W](ξ)` by analytic differentiation (same regularisation).
pub fn leo_prime(v: &Potential, w: &Potential, xi: f64) -> Result<f64> {
    leo_prime_stack(&|k, x| v.deriv(k, x), &|k, x| w.deriv(k, x), xi)
}

fn convex_at(v2: f64, w2: f64, xi: f64) -> Result<()> {
    if !(v2 > 0.0 && w2 > 0.0) {
        return Err(Error::Domain(format!("♌ needs V″, W″ > 0 at {xi} (got {v2}, {w2})")));
    }
    Ok(())
}

fn leo_stack(v: DerivativeStack, w: DerivativeStack, xi: f64) -> Result<f64> {
    let (v2, w2) = (v(2, xi), w(2, xi));
    convex_at(v2, w2, xi)?;
    let num = v(1, xi) - w(1, xi);
    let e = v2 - w2;
    let r = e / w2;
    if r.abs() < LEO_SWITCH {
        return Ok(num / w2 * (1.0 - r / 2.0 + r * r / 3.0));
    }
    Ok(num / e * (v2 / w2).ln())
}

fn leo_prime_stack(v: DerivativeStack, w: DerivativeStack, xi: f64) -> Result<f64> {
    let (v2, w2) = (v(2, xi), w(2, xi));
    convex_at(v2, w2, xi)?;
    let (v3, w3) = (v(3, xi), w(3, xi));
    let num = v(1, xi) - w(1, xi);
    let e = v2 - w2;
    let de = v3 - w3;
    let r = e / w2;
    if r.abs() < LEO_SWITCH {
        let phi = 1.0 - r / 2.0 + r * r / 3.0;
        let dphi = -0.5 + 2.0 * r / 3.0;
        let dr = (de * w2 - e * w3) / (w2 * w2);
        return Ok((e / w2 - num * w3 / (w2 * w2)) * phi + num / w2 * dphi * dr);
    }
    let l = (v2 / w2).ln();
    let dl = v3 / v2 - w3 / w2;
    let d = num / e;
    let dd = 1.0 - num * de / (e * e);
    Ok(dd * l + d * dl)
}

/// `i^p ℸ_p` with the realness check.
fn rotated_daleth(table: &BoundaryFunctionTable, p: usize) -> Result<f64> {
    let z = table.daleth_p_rotated_complex(p)?;
    if z.im.abs() > REALNESS_TOL * z.re.abs().max(1.0) {
        return Err(Error::Numerical(format!("i^{p}ℸ_{p} = {z} is not real")));
    }
    Ok(z.re)
}

/// Truncated expansion of the constraint functional
/// `𝒳_N[H] = Σ_{p=0}^{k} i^pℸ_p N^{−αp}{H^{(p)}(a_N) + (−1)^p H^{(p)}(b_N)}`.
pub fn constraint_xn_expansion(
    h: DerivativeStack,
    edges: (f64, f64),
    n: f64,
    k: usize,
    params: &ModelParams,
) -> Result<f64> {
    let table = shared_table(params);
    let (a, b) = edges;
    let x = 1.0 / params.n_alpha(n);
    let mut total = 0.0;
    let mut xp = 1.0;
    for p in 0..=k {
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        let bracket = h(p, a) + sign * h(p, b);
        if bracket != 0.0 {
            total += rotated_daleth(&table, p)? * xp * bracket;
        }
        xp *= x;
    }
    Ok(total)
}

/// `∫_a^b f` by adaptive quadrature at the module tolerance.
fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    Ok(integrate_interval(f, a, b, &quad_spec())?.value)
}

/// Truncated expansion of the single integral `∫_{a_N}^{b_N} G·𝒲_N[H]`:
///
/// ```text
/// u₁∫GH′ + Σ_{p=1}^{k} N^{−αp}{u_{p+1}∫GH^{(p+1)}
///     + Σ_{s+ℓ=p−1} (ℸ_{s,ℓ}/s!)[(−1)^s H^{(ℓ+1)}(b)G^{(s)}(b) + (−1)^ℓ H^{(ℓ+1)}(a)G^{(s)}(a)]}
/// ```
pub fn single_integral_is_expansion(
    g: DerivativeStack,
    h: DerivativeStack,
    edges: (f64, f64),
    n: f64,
    k: usize,
    params: &ModelParams,
) -> Result<f64> {
    let table = shared_table(params);
    let (a, b) = edges;
    let x = 1.0 / params.n_alpha(n);
    let u = table.u_coeffs(k + 1)?;
    let sign = |m: usize| if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut total = u[0] * integrate(|y| g(0, y) * h(1, y), a, b)?;
    let mut xp = x;
    #[allow(clippy::needless_range_loop)]
    for p in 1..=k {
        let mut term = 0.0;
        if u[p] != 0.0 {
            term += u[p] * integrate(|y| g(0, y) * h(p + 1, y), a, b)?;
        }
        for s in 0..p {
            let l = p - 1 - s;
            let bracket = sign(s) * h(l + 1, b) * g(s, b) + sign(l) * h(l + 1, a) * g(s, a);
            if bracket != 0.0 {
                term += table.daleth_sl_value(s, l)? / factorial(s) * bracket;
            }
        }
        total += xp * term;
        xp *= x;
    }
    Ok(total)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Leading asymptotics of the double integral:
/// `−2ℷ₀N^α[H′/V″(b_N) − H′/V″(a_N)] + ℵ₀[(H′/V″)′(b_N) + (H′/V″)′(a_N)]`.
pub fn double_integral_id_leading(
    h: DerivativeStack,
    v: DerivativeStack,
    edges: (f64, f64),
    n: f64,
    params: &ModelParams,
) -> Result<f64> {
    let (a, b) = edges;
    for x in [a, b] {
        if v(2, x) == 0.0 {
            return Err(Error::Domain(format!("V″ vanishes at the endpoint {x}")));
        }
    }
    let ratio = |x: f64| h(1, x) / v(2, x);
    let dratio = |x: f64| h(2, x) / v(2, x) - h(1, x) * v(3, x) / v(2, x).powi(2);
    if ratio(a) == 0.0 && ratio(b) == 0.0 && dratio(a) == 0.0 && dratio(b) == 0.0 {
        return Ok(0.0);
    }
    let table = shared_table(params);
    let gimel0 = table.gimel(0)?;
    let aleph0 = table.aleph0()?.value;
    Ok(-2.0 * gimel0 * params.n_alpha(n) * (ratio(b) - ratio(a)) + aleph0 * (dratio(b) + dratio(a)))
}

/// `♑_p` for a given reference potential `W` (normally `W_{G;N}`).
fn capricornus_with(
    p: usize,
    v: &Potential,
    w: &Potential,
    params: &ModelParams,
    support: &Support,
) -> Result<f64> {
    let (a, b) = support.edges();
    let minus = |k: usize, x: f64| v.deriv(k, x) - w.deriv(k, x);
    let plus = |k: usize, x: f64| v.deriv(k, x) + w.deriv(k, x);
    if p == 0 {
        let int = integrate(|x| minus(0, x) * minus(2, x), a, b)?;
        return Ok(-int / (4.0 * PI * params.omega_sum()));
    }
    if v.k_max() < p + 2 {
        return Err(Error::Validation(format!(
            "♑_{p} needs V^({}) (potential provides {})",
            p + 2,
            v.k_max()
        )));
    }
    let table = shared_table(params);
    let sign = |m: usize| if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut total = 0.0;
    let u = table.u_coeffs(p + 1)?[p];
    if u != 0.0 {
        total += u * integrate(|x| minus(0, x) * v.deriv(p + 2, x), a, b)?;
    }
    for s in 0..p {
        let l = p - 1 - s;
        let bracket = sign(l) * minus(l + 1, a) * plus(s + 1, a) + sign(s) * minus(l + 1, b) * plus(s + 1, b);
        if bracket != 0.0 {
            total += table.daleth_sl_value(s, l)? / factorial(s) * bracket;
        }
    }
    Ok(total)
}

/// `♑_p[V]` with `V_N^± = V ± W_{G;N}` built from `support`.
pub fn capricornus(p: usize, v: &Potential, params: &ModelParams, support: &Support) -> Result<f64> {
    let w = w_gn(support.a_n, support.b_n, support.n, params)?;
    capricornus_with(p, v, &w, params, support)
}

/// Both sides of `∫V⁻(V⁻)″ = [V⁻(V⁻)′]_{a_N}^{b_N} − ∫((V⁻)′)²` with
/// `V⁻ = V − W_{G;N}`.
pub fn capricornus0_integration_by_parts(
    v: &Potential,
    params: &ModelParams,
    support: &Support,
) -> Result<(f64, f64)> {
    let w = w_gn(support.a_n, support.b_n, support.n, params)?;
    let (a, b) = support.edges();
    let m = |k: usize, x: f64| v.deriv(k, x) - w.deriv(k, x);
    let lhs = integrate(|x| m(0, x) * m(2, x), a, b)?;
    let rhs = m(0, b) * m(1, b) - m(0, a) * m(1, a) - integrate(|x| m(1, x).powi(2), a, b)?;
    Ok((lhs, rhs))
}

/// Upper index `⌊2/α⌋+1` of the `♑_p` sum.
pub fn truncation_order(alpha: f64) -> usize {
    (2.0 / alpha).floor() as usize + 1
}

/// The expansion of `ln(Z_N[V]/Z_N[W_{G;N}])` at β = 1, with `W_{G;N}`
/// built from the given finite-N support.
pub fn main_expansion(v: &Potential, params: &ModelParams, support: &Support) -> Result<ExpansionReport> {
    let w = w_gn(support.a_n, support.b_n, support.n, params)?;
    main_expansion_with_reference(v, &w, params, support)
}

/// Relative distance, in units of the machine epsilon, below which a
/// quadratic `V` is identified with the quadratic reference.
const SAME_QUADRATIC_ULPS: f64 = 8.0;

/// True when `V` and `W` are quadratics whose coefficients and values at 0
/// agree to rounding on the scale of the support. `W_{G;N}` is obtained from
/// solved endpoints, so for a quadratic `V` equal to its own matched
/// Gaussian the two differ by a few ulps, which the `N^{2+α}` prefactors
/// would otherwise amplify into a spurious non-zero expansion.
fn same_quadratic(v: &Potential, w: &Potential, support: &Support) -> bool {
    let (Some((gv, tv)), Some((gw, tw))) = (v.as_quadratic(), w.as_quadratic()) else {
        return false;
    };
    let tol = SAME_QUADRATIC_ULPS * f64::EPSILON;
    let scale = support.a_n.abs().max(support.b_n.abs()).max(1.0);
    (gv - gw).abs() <= tol * gw.abs()
        && (tv - tw).abs() <= tol * (tw.abs() + gw.abs() * scale)
        && (v.eval(0.0) - w.eval(0.0)).abs() <= tol * w.eval(0.0).abs().max(1.0)
}

/// [`main_expansion`] with an explicit reference quadratic `W` (for
/// instance `W_{G;N}` plus a constant); the absolute variant then uses the
/// exact partition function of `W`. A quadratic `V` that coincides with `W`
/// to rounding is treated as `W` itself, so its expansion vanishes.
pub fn main_expansion_with_reference(
    v: &Potential,
    w: &Potential,
    params: &ModelParams,
    support: &Support,
) -> Result<ExpansionReport> {
    if params.beta != 1.0 {
        return Err(Error::Validation(format!("the expansion is available at β = 1 only (got {})", params.beta)));
    }
    if w.as_quadratic().is_none() {
        return Err(Error::Validation("the reference potential must be quadratic".into()));
    }
    let w = if same_quadratic(v, w, support) { v } else { w };
    let Some((gw, tw)) = w.as_quadratic() else {
        unreachable!("both candidates are quadratic")
    };
    let n = support.n;
    if !(n >= 1.0 && n.is_finite()) {
        return Err(Error::Validation(format!("finite N ≥ 1 required (got {n})")));
    }
    let alpha = params.alpha;
    let top = truncation_order(alpha);
    let mut terms = Vec::with_capacity(top + 3);
    for p in 0..=top {
        let c = capricornus_with(p, v, w, params, support)?;
        terms.push(ExpansionTerm::new(format!("capricornus_{p}"), 2.0 + alpha - alpha * p as f64, -c, n));
    }
    let (a, b) = support.edges();
    let leo_b = leo(v, w, b)?;
    let leo_a = leo(v, w, a)?;
    let dleo = leo_prime(v, w, b)? + leo_prime(v, w, a)?;
    let (gimel0, aleph0) = if leo_b - leo_a == 0.0 && dleo == 0.0 {
        (0.0, 0.0)
    } else {
        let table = shared_table(params);
        (table.gimel(0)?, table.aleph0()?.value)
    };
    terms.push(ExpansionTerm::new("gimel0_leo", alpha, gimel0 * (leo_b - leo_a), n));
    terms.push(ExpansionTerm::new("aleph0_leo_prime", 0.0, aleph0 * dleo, n));
    let total = terms.iter().map(|t| t.value).sum();
    let reference_log_z = if n <= EXACT_GAUSSIAN_MAX_N && n.fract() == 0.0 {
        let spec = GaussianSpec::new(gw, tw, *params, n as u64)?;
        // the additive constant of W contributes −N^{2+α}·W(0)
        Some(gaussian_log_z_exact(&spec)? - n.powf(2.0 + alpha) * w.eval(0.0))
    } else {
        None
    };
    let matched = matched_gaussian(a, b, n, params)?;
    Ok(ExpansionReport {
        terms,
        total,
        truncation_order: top,
        error_order_label: "o(1)".into(),
        n,
        support: *support,
        matched_gaussian: matched,
        reference_log_z,
        absolute_log_z: reference_log_z.map(|r| r + total),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::endpoints_n;
    use crate::gaussian_exact::gaussian_log_z_exact;
    use proptest::prelude::*;

    fn unit(alpha: f64) -> ModelParams {
        ModelParams::symmetric_unit(alpha)
    }

    fn quartic() -> Potential {
        Potential::even_polynomial(vec![0.0, 0.0, 1.0, 0.0, 0.05]).unwrap()
    }

    #[test]
    fn leo_values() {
        let w = Potential::quadratic(1.0, 0.0).unwrap();
        assert_eq!(leo(&w, &w, 0.4).unwrap(), 0.0);
        assert_eq!(leo_prime(&w, &w, 0.4).unwrap(), 0.0);
        // V″ = 2W″ and V′ − W′ = 1 at ξ = 0.5: V = 2ξ² + ξ·(1 − 1) ... choose V = 2ξ² − ξ + 1
        let v = Potential::quadratic(2.0, 0.0).unwrap();
        // V′ − W′ = 4ξ − 2ξ = 2ξ = 1 at ξ = 1/2
        assert!((leo(&v, &w, 0.5).unwrap() - 2f64.ln() / 2.0).abs() < 1e-15);
        // finite differences of ♌
        let v = Potential::even_polynomial(vec![0.0, 0.0, 1.0, 0.0, 0.3]).unwrap();
        let w = Potential::quadratic(1.2, 0.1).unwrap();
        let x = 0.7;
        let h = 1e-5;
        let fd = (leo(&v, &w, x + h).unwrap() - leo(&v, &w, x - h).unwrap()) / (2.0 * h);
        assert!((fd - leo_prime(&v, &w, x).unwrap()).abs() < 1e-7);
        // regularised branch is continuous with the direct one
        let near = Potential::quadratic(1.0 + 2e-7, 0.3).unwrap();
        let w = Potential::quadratic(1.0, 0.0).unwrap();
        let reg = leo(&near, &w, 0.2).unwrap();
        let r = 2e-7;
        let direct = (near.deriv(1, 0.2) - w.deriv(1, 0.2)) / (2.0 * r) * (1.0 + r).ln();
        assert!((reg - direct).abs() < 1e-9 * direct.abs());
        let fd = (leo(&near, &w, 0.2 + h).unwrap() - leo(&near, &w, 0.2 - h).unwrap()) / (2.0 * h);
        assert!((fd - leo_prime(&near, &w, 0.2).unwrap()).abs() < 1e-7);
        let concave = Potential::custom(3, std::sync::Arc::new(|k, x: f64| match k {
            0 => -x * x,
            1 => -2.0 * x,
            2 => -2.0,
            _ => 0.0,
        }))
        .unwrap();
        assert!(matches!(leo(&concave, &w, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn truncation_count() {
        assert_eq!(truncation_order(0.3), 7);
        assert_eq!(truncation_order(0.1), 21);
    }

    #[test]
    fn matched_gaussian_expansion_vanishes() {
        let p = unit(0.1);
        let v = quartic();
        let s = endpoints_n(&v, &p, 1e4, 2).unwrap();
        let w = w_gn(s.a_n, s.b_n, s.n, &p).unwrap();
        let r = main_expansion(&w, &p, &s).unwrap();
        assert_eq!(r.total, 0.0);
        assert!(r.terms.iter().all(|t| t.value == 0.0));
        assert_eq!(r.terms.len(), 21 + 1 + 2);
        assert!(r.absolute_log_z.is_some());
        // a quadratic equal to its matched Gaussian up to rounding
        let q = Potential::quadratic(1.0, 0.0).unwrap();
        for k in 1..=3 {
            let s = endpoints_n(&q, &p, 1e4, k).unwrap();
            assert_eq!(main_expansion(&q, &p, &s).unwrap().total, 0.0);
        }
        // a genuinely different quadratic is not snapped
        let s = endpoints_n(&q, &p, 1e4, 1).unwrap();
        let w = w_gn(s.a_n, s.b_n, s.n, &p).unwrap();
        let near = Potential::quadratic(1.0 + 1e-10, 0.0).unwrap();
        assert!(main_expansion_with_reference(&near, &w, &p, &s).unwrap().total != 0.0);
        for p in 0..4 {
            assert_eq!(capricornus(p, &w, &unit(0.1), &s).unwrap(), 0.0);
        }
    }

    #[test]
    fn values_are_coefficient_times_power() {
        let p = unit(0.1);
        let v = quartic();
        let s = endpoints_n(&v, &p, 1e4, 3).unwrap();
        let r = main_expansion(&v, &p, &s).unwrap();
        let mut sum = 0.0;
        for t in &r.terms {
            assert!((t.value - t.coefficient * 1e4f64.powf(t.exponent)).abs() <= 1e-12 * t.value.abs());
            sum += t.value;
        }
        assert_eq!(sum, r.total);
        assert!(r.total.is_finite());
    }

    #[test]
    fn shift_invariance_with_shifted_reference() {
        let p = unit(0.2);
        let v = quartic();
        let s = endpoints_n(&v, &p, 1e4, 2).unwrap();
        let base = main_expansion(&v, &p, &s).unwrap();
        let c = 0.37;
        let w = w_gn(s.a_n, s.b_n, s.n, &p).unwrap().plus_constant(c);
        let shifted = main_expansion_with_reference(&v.plus_constant(c), &w, &p, &s).unwrap();
        assert!((base.total - shifted.total).abs() < 1e-9 * base.total.abs().max(1.0));
        let (ra, rb) = (base.absolute_log_z.unwrap(), shifted.absolute_log_z.unwrap());
        let expected = ra - 1e4f64.powf(2.2) * c;
        assert!((rb - expected).abs() < 1e-9 * expected.abs());
    }

    #[test]
    fn absolute_variant_for_quadratic_matches_exact() {
        let p = unit(0.2);
        let v = Potential::quadratic(1.0, 0.3).unwrap();
        let n = 1e4;
        let s = endpoints_n(&v, &p, n, 3).unwrap();
        let r = main_expansion(&v, &p, &s).unwrap();
        let exact = gaussian_log_z_exact(&GaussianSpec::new(1.0, 0.3, p, 10_000).unwrap()).unwrap();
        let abs = r.absolute_log_z.unwrap();
        assert!((abs - exact).abs() < 1e-6 * exact.abs(), "{abs} {exact}");
        assert!(r.total.abs() < 1e-3, "{}", r.total);
    }

    #[test]
    fn constraint_expansion_basics() {
        let p = unit(0.2);
        let odd = |k: usize, x: f64| match k {
            0 => x.powi(3),
            1 => 3.0 * x * x,
            2 => 6.0 * x,
            3 => 6.0,
            _ => 0.0,
        };
        let lead = constraint_xn_expansion(&odd, (-1.3, 1.3), 1e4, 0, &p).unwrap();
        assert_eq!(lead, 0.0);
        let one = |k: usize, _x: f64| if k == 0 { 1.0 } else { 0.0 };
        let v = constraint_xn_expansion(&one, (-1.0, 2.0), 1e4, 3, &p).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "{v}");
        // the leading single-integral term
        let g1 = |k: usize, _x: f64| if k == 0 { 1.0 } else { 0.0 };
        let hx = |k: usize, x: f64| match k {
            0 => x,
            1 => 1.0,
            _ => 0.0,
        };
        let u1 = 1.0 / (4.0 * PI);
        let val = single_integral_is_expansion(&g1, &hx, (0.0, 1.0), f64::INFINITY, 0, &p).unwrap();
        assert!((val - u1).abs() < 1e-12);
        let hc = |k: usize, _x: f64| if k == 0 { 2.0 } else { 0.0 };
        let gx = |k: usize, x: f64| match k {
            0 => x * x,
            1 => 2.0 * x,
            2 => 2.0,
            _ => 0.0,
        };
        assert_eq!(single_integral_is_expansion(&gx, &hc, (0.0, 1.0), 1e4, 3, &p).unwrap(), 0.0);
    }

    #[test]
    fn endpoint_equations_are_recovered() {
        let p = unit(0.2);
        let n = 1e4;
        let v = quartic();
        let vp = |k: usize, x: f64| v.deriv(k + 1, x);
        let one = |k: usize, _x: f64| if k == 0 { 1.0 } else { 0.0 };
        let mut prev = f64::INFINITY;
        for k in 1..=3 {
            let s = endpoints_n(&v, &p, n, k).unwrap();
            // same order: the solved system itself
            let x = constraint_xn_expansion(&vp, s.edges(), n, k, &p).unwrap();
            let m = single_integral_is_expansion(&one, &vp, s.edges(), n, k, &p).unwrap();
            assert!(x.abs() < 1e-12 && (m - 1.0).abs() < 1e-12, "{k}: {x} {m}");
            // one order higher: truncation residual shrinks with k
            let x4 = constraint_xn_expansion(&vp, s.edges(), n, 4, &p).unwrap();
            let m4 = single_integral_is_expansion(&one, &vp, s.edges(), n, 4, &p).unwrap();
            let res = x4.abs().max((m4 - 1.0).abs());
            assert!(res < prev, "{k}: {res} {prev}");
            prev = res;
        }
        // quadratic with matched support: the constraint vanishes
        let q = Potential::quadratic(1.0, 0.0).unwrap();
        let s = endpoints_n(&q, &p, n, 1).unwrap();
        let qp = |k: usize, x: f64| q.deriv(k + 1, x);
        assert!(constraint_xn_expansion(&qp, s.edges(), n, 3, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn double_integral_leading_parity() {
        let p = unit(0.2);
        let v = quartic();
        let vs = |k: usize, x: f64| v.deriv(k, x);
        let s = endpoints_n(&v, &p, 1e4, 2).unwrap();
        let d = double_integral_id_leading(&vs, &vs, s.edges(), 1e4, &p).unwrap();
        let table = shared_table(&p);
        let g0 = table.gimel(0).unwrap();
        let a0 = table.aleph0().unwrap().value;
        let b = s.b_n;
        let r = v.deriv(1, b) / v.deriv(2, b);
        let dr = 1.0 - v.deriv(1, b) * v.deriv(3, b) / v.deriv(2, b).powi(2);
        let expect = -2.0 * g0 * p.n_alpha(1e4) * 2.0 * r + a0 * 2.0 * dr;
        assert!((d - expect).abs() < 1e-9 * expect.abs(), "{d} {expect}");
        let flat = |k: usize, _x: f64| if k == 0 { 3.0 } else { 0.0 };
        assert_eq!(double_integral_id_leading(&flat, &vs, s.edges(), 1e4, &p).unwrap(), 0.0);
    }

    #[test]
    fn capricornus_one_pairs_symmetrically() {
        let p = unit(0.2);
        let v = quartic();
        let s = endpoints_n(&v, &p, 1e4, 2).unwrap();
        let w = w_gn(s.a_n, s.b_n, s.n, &p).unwrap();
        let m = |k: usize, x: f64| v.deriv(k, x) - w.deriv(k, x);
        let pl = |k: usize, x: f64| v.deriv(k, x) + w.deriv(k, x);
        let at_a = m(1, s.a_n) * pl(1, s.a_n);
        let at_b = m(1, s.b_n) * pl(1, s.b_n);
        assert!((at_a - at_b).abs() < 1e-10 * at_b.abs().max(1e-300));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn capricornus0_ibp_identity_on_even_polynomials(c2 in 0.3f64..2.0, c4 in 0.0f64..0.5, c6 in 0.0f64..0.1) {
            let p = unit(0.2);
            let v = Potential::even_polynomial(vec![0.0, 0.0, c2, 0.0, c4, 0.0, c6]).unwrap();
            let s = endpoints_n(&v, &p, 1e4, 1).unwrap();
            let (lhs, rhs) = capricornus0_integration_by_parts(&v, &p, &s).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0), "{} {}", lhs, rhs);
        }
    }
}
