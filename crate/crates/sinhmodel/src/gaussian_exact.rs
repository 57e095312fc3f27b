//! Exact Gaussian partition function at β = 1, its large-N asymptotics, the
//! Mellin-transform asymptotics behind them, and support-matched Gaussians.
//!
//! For `V(λ) = gλ² + tλ` and `τ_N = 2π²ω₁ω₂N^α/(gN)`,
//!
//! ```text
//! ln Z_N = ln N! − N(N−1) ln 2 + (N/2) ln(π/(gN^{1+α})) + N^{2+α}t²/(4g)
//!        + π²(ω₁+ω₂)²N^α(N²−1)/(12g) + Σ_{j=1}^{N} (N−j) ln(1 − e^{−jτ_N}).
//! ```
//!
//! The special constants (`ζ(3)`, `ζ′(−1)`, polylogarithms) are computed
//! here by series with Euler–Maclaurin tails.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model_core::{ModelParams, Potential};
use crate::wiener_hopf::log_gamma_complex;

/// Euler–Maclaurin cut-off used by the zeta helpers.
const EM_TERMS: usize = 20;

/// Bernoulli numbers `B_0 … B_n` (with `B_1 = −1/2`), from
/// `B_{2k} = (−1)^{k+1} 2(2k)! ζ(2k)/(2π)^{2k}`, which avoids the
/// cancellation of the additive recurrence.
pub fn bernoulli(n: usize) -> Vec<f64> {
    let mut b = vec![0.0; n + 1];
    b[0] = 1.0;
    if n >= 1 {
        b[1] = -0.5;
    }
    let mut fact = 1.0; // (2k)!
    let mut two_pi_pow = 1.0; // (2π)^{2k}
    for k in 1..=(n / 2) {
        fact *= ((2 * k - 1) * (2 * k)) as f64;
        two_pi_pow *= 4.0 * PI * PI;
        let z = zeta((2 * k) as f64).unwrap_or(f64::NAN);
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        b[2 * k] = sign * 2.0 * fact * z / two_pi_pow;
    }
    b
}

/// Riemann zeta `ζ(s)` for real `s > 1`, by a direct sum over `k < 20` plus
/// an Euler–Maclaurin tail.
pub fn zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::Domain(format!("zeta implemented for s > 1, got {s}")));
    }
    let n = EM_TERMS as f64;
    let mut sum: f64 = (1..EM_TERMS).map(|k| (k as f64).powf(-s)).sum();
    // ∫_n^∞ x^{−s} + n^{−s}/2 + Σ B_{2j}/(2j)! · s(s+1)…(s+2j−2) n^{−s−2j+1}
    sum += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // B_2 … B_16
    const B: [f64; 8] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
    ];
    let mut rising = s; // s(s+1)…(s+2j−2)
    let mut fact = 2.0; // (2j)!
    for (j, bj) in (1..=8).zip(B) {
        let term = bj / fact * rising * n.powf(-s - (2 * j - 1) as f64);
        sum += term;
        rising *= (s + (2 * j - 1) as f64) * (s + (2 * j) as f64);
        fact *= ((2 * j + 1) * (2 * j + 2)) as f64;
    }
    Ok(sum)
}

/// `ζ(−n)` for integers `n ≥ 0`: `−B_{n+1}/(n+1)` (with `ζ(0) = −1/2`).
pub fn zeta_negative_integer(n: usize) -> f64 {
    if n == 0 {
        return -0.5;
    }
    let b = bernoulli(n + 1);
    -b[n + 1] / (n + 1) as f64
}

/// `ζ′(−1) = 1/12 − ln A` with Glaisher's constant from the Euler–Maclaurin
/// expansion of `Σ_{k≤n} k ln k`.
pub fn zeta_prime_minus_one() -> f64 {
    // ln A = Σ_{k≤n} k ln(k/n) − ln(n)/12 + n²/4 − Σ_j B_{2j}/(2j)!·f^{(2j−1)}(n)
    // for f(x) = x ln x, with f^{(m)}(x) = (−1)^m (m−2)!/x^{m−1} (m ≥ 2).
    // Writing the power sum relative to n avoids cancelling large terms.
    let n = 6usize;
    let nf = n as f64;
    let mut sum = Compensated::default();
    for k in 1..n {
        sum.add(k as f64 * (k as f64 / nf).ln());
    }
    let b = bernoulli(24);
    let mut corr = 0.0;
    let mut fact = 24.0; // (2j)! for j = 2
    let mut mfact = 1.0; // (m−2)! for m = 2j−1 = 3
    for j in 2..=12 {
        let m = 2 * j - 1;
        let fm = -mfact / nf.powi(m as i32 - 1);
        corr += b[2 * j] / fact * fm;
        fact *= ((2 * j + 1) * (2 * j + 2)) as f64;
        mfact *= ((m - 1) * m) as f64;
    }
    sum.add(-nf.ln() / 12.0);
    sum.add(nf * nf / 4.0);
    sum.add(-corr);
    1.0 / 12.0 - sum.value()
}

/// `ζ′(0) = −ln(2π)/2`.
pub fn zeta_prime_zero() -> f64 {
    -0.5 * (2.0 * PI).ln()
}

/// Polylogarithm `Li_s(x)` for integer `s ≥ 0` and `0 ≤ x ≤ 1`.
///
/// Direct series for `x ≤ 1/2`; for `x > 1/2` the expansion in
/// `μ = ln x`: `Li_s(e^μ) = μ^{s−1}/(s−1)!·[H_{s−1} − ln(−μ)] + Σ_{k≠s−1} ζ(s−k) μ^k/k!`.
pub fn polylog(s: usize, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("polylog implemented on [0, 1], got {x}")));
    }
    match s {
        0 => {
            return if x == 1.0 {
                Err(Error::Domain("Li_0 diverges at 1".into()))
            } else {
                Ok(x / (1.0 - x))
            }
        }
        1 => {
            return if x == 1.0 {
                Err(Error::Domain("Li_1 diverges at 1".into()))
            } else {
                Ok(-(-x).ln_1p())
            }
        }
        _ => {}
    }
    if x == 1.0 {
        return zeta(s as f64);
    }
    if x <= 0.5 {
        let mut sum: f64 = 0.0;
        let mut p = x;
        let mut k = 1.0f64;
        while p > 1e-18 * sum.max(1e-300) || k < 2.0 {
            sum += p / k.powi(s as i32);
            p *= x;
            k += 1.0;
            if p == 0.0 {
                break;
            }
        }
        return Ok(sum);
    }
    let mu = x.ln();
    let b = bernoulli(60);
    let mut sum = 0.0;
    let mut pw = 1.0; // μ^k / k!
    for k in 0..50usize {
        if k == s - 1 {
            let h: f64 = (1..s).map(|j| 1.0 / j as f64).sum();
            sum += pw * (h - (-mu).ln());
        } else if k < s - 1 {
            sum += pw * zeta((s - k) as f64)?;
        } else {
            // ζ(s−k) at a non-positive integer
            let n = k - s;
            let z = if n == 0 { -0.5 } else { -b[n + 1] / (n + 1) as f64 };
            sum += pw * z;
        }
        pw *= mu / (k + 1) as f64;
        if pw.abs() < 1e-18 && k > s {
            break;
        }
    }
    Ok(sum)
}

/// `ln Γ(x)` for real `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    log_gamma_complex(Complex64::new(x, 0.0)).map(|v| v.re).unwrap_or(f64::NAN)
}

/// Kahan–Babuška compensated sum.
#[derive(Debug, Default, Clone, Copy)]
struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }
    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// A Gaussian potential `gλ² + tλ` with model parameters and particle
/// number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianSpec {
    /// Curvature `g > 0`.
    pub g: f64,
    /// Linear coefficient.
    pub t: f64,
    /// Model parameters (β must be 1 for the exact formula).
    pub params: ModelParams,
    /// Number of particles.
    pub n: u64,
}

impl GaussianSpec {
    /// Validated spec.
    pub fn new(g: f64, t: f64, params: ModelParams, n: u64) -> Result<Self> {
        if !(g > 0.0 && g.is_finite()) || !t.is_finite() {
            return Err(Error::Validation(format!("Gaussian needs g > 0, finite t (g={g}, t={t})")));
        }
        if n == 0 {
            return Err(Error::Validation("N must be ≥ 1".into()));
        }
        Ok(Self { g, t, params, n })
    }

    /// `τ_N = 2π²ω₁ω₂N^α/(gN)`.
    pub fn tau(&self) -> f64 {
        let p = &self.params;
        let n = self.n as f64;
        2.0 * PI * PI * p.omega1 * p.omega2 * p.n_alpha(n) / (self.g * n)
    }
}

/// `ln Z_N[gλ² + tλ]` at β = 1 from the closed formula.
pub fn gaussian_log_z_exact(spec: &GaussianSpec) -> Result<f64> {
    let p = &spec.params;
    if p.beta != 1.0 {
        return Err(Error::Validation("the closed Gaussian formula requires β = 1".into()));
    }
    let n = spec.n as f64;
    let (g, t) = (spec.g, spec.t);
    let na = p.n_alpha(n);
    let s = p.omega_sum();
    let tau = spec.tau();
    let mut acc = Compensated::default();
    acc.add(ln_gamma(n + 1.0));
    acc.add(-n * (n - 1.0) * 2f64.ln());
    acc.add(0.5 * n * (PI / (g * n * na)).ln());
    acc.add(n * n * na * t * t / (4.0 * g));
    acc.add(PI * PI * s * s * na * (n * n - 1.0) / (12.0 * g));
    let mut prod = Compensated::default();
    for j in 1..=spec.n {
        let w = (spec.n - j) as f64;
        if w == 0.0 {
            continue;
        }
        let e = -(-(j as f64) * tau).exp_m1();
        prod.add(w * e.ln());
    }
    acc.add(prod.value());
    Ok(acc.value())
}

/// One labelled term `coefficient · N^{exponent}` (with optional `ln N`
/// factor folded into the coefficient's label).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    /// Human-readable label.
    pub label: String,
    /// Power of N.
    pub exponent: f64,
    /// Coefficient multiplying `N^{exponent}` (including any `ln N`).
    pub coefficient: f64,
    /// Value at the given N.
    pub value: f64,
}

impl Term {
    fn new(label: &str, exponent: f64, coefficient: f64, n: f64) -> Self {
        Self {
            label: label.to_string(),
            exponent,
            coefficient,
            value: coefficient * n.powf(exponent),
        }
    }
}

/// Asymptotic expansion of `ln Z_N` for a Gaussian potential.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianAsymptotics {
    /// The listed terms.
    pub terms: Vec<Term>,
    /// Sum of the listed terms.
    pub total: f64,
    /// The `N^α` contribution `+π²ω₁ω₂N^α/(12g)` absent from the listed
    /// terms (from the `τ¹` pole of the `M₀` Mellin transform times `N`).
    pub missing_term: Term,
    /// `total + missing_term.value`.
    pub corrected_total: f64,
}

/// Evaluates every term of the large-N expansion of the Gaussian `ln Z_N`.
pub fn gaussian_log_z_asymptotic(spec: &GaussianSpec) -> Result<GaussianAsymptotics> {
    let p = &spec.params;
    if !(p.alpha > 0.0 && p.alpha < 1.0) {
        return Err(Error::Validation("the Gaussian asymptotics need 0 < α < 1".into()));
    }
    if p.beta != 1.0 {
        return Err(Error::Validation("the Gaussian asymptotics require β = 1".into()));
    }
    let n = spec.n as f64;
    let (g, t, a) = (spec.g, spec.t, p.alpha);
    let (w1, w2) = (p.omega1, p.omega2);
    let s = w1 + w2;
    let ln_n = n.ln();
    let z3 = zeta(3.0)?;
    let terms = vec![
        Term::new("N^{2+α}[t²/4g + π²s²/12g]", 2.0 + a, t * t / (4.0 * g) + PI * PI * s * s / (12.0 * g), n),
        Term::new("−N² ln 2", 2.0, -(2f64.ln()), n),
        Term::new("−N^{2−α} g/(12ω₁ω₂)", 2.0 - a, -g / (12.0 * w1 * w2), n),
        Term::new(
            "N^{2−2α} g²ζ(3)/(2π²ω₁ω₂)²",
            2.0 - 2.0 * a,
            g * g * z3 / (2.0 * PI * PI * w1 * w2).powi(2),
            n,
        ),
        Term::new("(1−α) N ln N", 1.0, (1.0 - a) * ln_n, n),
        Term::new("N ln(2/(e√(ω₁ω₂)))", 1.0, (2.0 / (std::f64::consts::E * (w1 * w2).sqrt())).ln(), n),
        Term::new("−N^α π²s²/(12g)", a, -PI * PI * s * s / (12.0 * g), n),
        Term::new("ln N (α+5)/12", 0.0, ln_n * (a + 5.0) / 12.0, n),
        Term::new(
            "(1/12) ln(128π⁸ω₁ω₂/g) + ζ′(−1)",
            0.0,
            (128.0 * PI.powi(8) * w1 * w2 / g).ln() / 12.0 + zeta_prime_minus_one(),
            n,
        ),
    ];
    let total = terms.iter().map(|t| t.value).sum();
    let missing_term = Term::new("N^α π²ω₁ω₂/(12g)", a, PI * PI * w1 * w2 / (12.0 * g), n);
    let corrected_total = total + missing_term.value;
    Ok(GaussianAsymptotics { terms, total, missing_term, corrected_total })
}

/// Row of a residual sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualRow {
    /// Particle number.
    #[serde(rename = "N")]
    pub n: u64,
    /// Exact `ln Z_N`.
    pub exact: f64,
    /// Listed asymptotic expansion.
    pub asymptotic: f64,
    /// `|exact − asymptotic|`.
    pub residual: f64,
    /// Expansion including the missing `N^α` term.
    pub corrected_asymptotic: f64,
    /// `|exact − corrected_asymptotic|`.
    pub corrected_residual: f64,
}

/// Exact vs asymptotic `ln Z_N` over a list of N.
pub fn residual_sweep(g: f64, t: f64, params: ModelParams, ns: &[u64]) -> Result<Vec<ResidualRow>> {
    ns.iter()
        .map(|&n| {
            let spec = GaussianSpec::new(g, t, params, n)?;
            let exact = gaussian_log_z_exact(&spec)?;
            let asy = gaussian_log_z_asymptotic(&spec)?;
            Ok(ResidualRow {
                n,
                exact,
                asymptotic: asy.total,
                residual: (exact - asy.total).abs(),
                corrected_asymptotic: asy.corrected_total,
                corrected_residual: (exact - asy.corrected_total).abs(),
            })
        })
        .collect()
}

/// Direct and asymptotic values of `ln M_r(a; e^{−τ}) = −Σ_ℓ ℓ^r ln(1 − a e^{−τℓ})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MellinValue {
    /// Truncated direct sum.
    pub direct: f64,
    /// Small-τ asymptotics.
    pub asymptotic: f64,
}

/// `ln M_r(a; e^{−τ})` for `r ∈ {0, 1}`, `a ∈ (0, 1]`, `τ > 0`.
///
/// The asymptotic form is `r! Li_{2+r}(a)/τ^{1+r} − ζ(−r) ln(1−a)` for
/// `a < 1`, and `r! ζ(2+r)/τ^{1+r} − ζ(−r) ln τ + ζ′(−r)` for `a = 1`
/// (pole of order `1+r` of the Mellin transform at `s = 1+r`).
pub fn mellin_m_log(r: usize, a: f64, tau: f64) -> Result<MellinValue> {
    if r > 1 {
        return Err(Error::Validation("mellin_m_log supports r ∈ {0, 1}".into()));
    }
    if !(a > 0.0 && a <= 1.0) || !(tau > 0.0) {
        return Err(Error::Validation(format!("need 0 < a ≤ 1 and τ > 0 (a={a}, τ={tau})")));
    }
    let mut acc = Compensated::default();
    let mut l = 1u64;
    loop {
        let lf = l as f64;
        // 1 − a e^{−x} = (1 − a) − a·expm1(−x), accurate for a → 1, x → 0
        let term = -lf.powi(r as i32) * ((1.0 - a) - a * (-tau * lf).exp_m1()).ln();
        acc.add(term);
        // the tail beyond ℓ is bounded by term/(1 − e^{−τ}) once τℓ > r + 1
        let tail = term.abs() / -(-tau).exp_m1();
        if tail < 1e-17 * acc.value().abs() && lf * tau > 2.0 {
            break;
        }
        l += 1;
    }
    let fact = 1.0; // r! for r ∈ {0, 1}
    let asymptotic = if a < 1.0 {
        fact * polylog(2 + r, a)? / tau.powi(1 + r as i32) - zeta_negative_integer(r) * (-a).ln_1p()
    } else {
        let zp = if r == 0 { zeta_prime_zero() } else { zeta_prime_minus_one() };
        fact * zeta((2 + r) as f64)? / tau.powi(1 + r as i32) - zeta_negative_integer(r) * tau.ln() + zp
    };
    Ok(MellinValue { direct: acc.value(), asymptotic })
}

/// `Σ_p (1/πω_p) ln(ω₁ω₂/(ω_p(ω₁+ω₂)))`, twice the edge constant.
fn matched_shift(params: &ModelParams) -> f64 {
    2.0 * params.edge_log_sum()
}

/// Coefficients `(g_N, t_N)` of the Gaussian whose finite-N equilibrium
/// support is `[a_N, b_N]`.
pub fn matched_gaussian(a_n: f64, b_n: f64, n: f64, params: &ModelParams) -> Result<(f64, f64)> {
    if !(a_n < b_n) {
        return Err(Error::Validation(format!("need a_N < b_N (got {a_n}, {b_n})")));
    }
    let den = b_n - a_n + matched_shift(params) / params.n_alpha(n);
    if !(den > 0.0) {
        return Err(Error::Numerical(format!("matched Gaussian denominator {den} ≤ 0")));
    }
    let g = PI * params.beta * params.omega_sum() / den;
    Ok((g, -(a_n + b_n) * g))
}

/// `W_{G;N}(ξ) = πβs[ξ² − (a_N+b_N)ξ] / (b_N − a_N + N^{−α}Σ_p(1/πω_p)ln(…))`
/// as a quadratic [`Potential`]. `n = ∞` gives the N = ∞ limit.
pub fn w_gn(a_n: f64, b_n: f64, n: f64, params: &ModelParams) -> Result<Potential> {
    if !(a_n < b_n) {
        return Err(Error::Validation(format!("need a_N < b_N (got {a_n}, {b_n})")));
    }
    let den = b_n - a_n + matched_shift(params) / params.n_alpha(n);
    if !(den > 0.0) {
        return Err(Error::Numerical(format!("W_GN denominator {den} ≤ 0")));
    }
    let k = PI * params.beta * params.omega_sum() / den;
    Potential::quadratic(k, -(a_n + b_n) * k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(alpha: f64) -> ModelParams {
        ModelParams::new(1.0, 1.0, 1.0, alpha).unwrap()
    }

    #[test]
    fn special_constants() {
        assert!((zeta(2.0).unwrap() - PI * PI / 6.0).abs() < 1e-14);
        assert!((zeta(3.0).unwrap() - 1.202_056_903_159_594_2).abs() < 1e-14);
        assert!((zeta_prime_minus_one() + 0.165_421_143_700_450_92).abs() < 1e-14);
        assert_eq!(zeta_negative_integer(0), -0.5);
        assert!((zeta_negative_integer(1) + 1.0 / 12.0).abs() < 1e-15);
        assert!(zeta_negative_integer(2).abs() < 1e-15);
        assert!((zeta_negative_integer(3) - 1.0 / 120.0).abs() < 1e-15);
        // Li₂(1/2) = π²/12 − ln²2/2
        let l2 = PI * PI / 12.0 - 0.5 * 2f64.ln().powi(2);
        assert!((polylog(2, 0.5).unwrap() - l2).abs() < 1e-15);
        // Li₃(1/2) = 7ζ(3)/8 − π² ln2/12 + ln³2/6
        let l3 = 7.0 * zeta(3.0).unwrap() / 8.0 - PI * PI * 2f64.ln() / 12.0 + 2f64.ln().powi(3) / 6.0;
        assert!((polylog(3, 0.5).unwrap() - l3).abs() < 1e-14);
        // continuity across the switch and at 1
        for s in [2, 3] {
            let lo = polylog(s, 0.5).unwrap();
            let hi = polylog(s, 0.500_000_000_001).unwrap();
            assert!((lo - hi).abs() < 1e-11);
            assert!((polylog(s, 1.0 - 1e-12).unwrap() - zeta(s as f64).unwrap()).abs() < 1e-9);
        }
        assert!((polylog(2, 0.9).unwrap() - 1.299_714_723_004_958_8).abs() < 1e-14);
    }

    #[test]
    fn exact_small_cases() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 0.2).unwrap();
        let spec = GaussianSpec::new(1.0, 0.3, p, 2).unwrap();
        assert!((gaussian_log_z_exact(&spec).unwrap() - 11.060_375_359_371_873).abs() < 1e-12);
        // N = 1: single Gaussian integral
        let spec = GaussianSpec::new(1.7, 0.4, p, 1).unwrap();
        let expect = 0.5 * (PI / 1.7).ln() + 0.16 / (4.0 * 1.7);
        assert!((gaussian_log_z_exact(&spec).unwrap() - expect).abs() < 1e-14);
        // β ≠ 1 rejected
        let q = ModelParams::new(1.0, 1.0, 2.0, 0.2).unwrap();
        assert!(gaussian_log_z_exact(&GaussianSpec::new(1.0, 0.0, q, 3).unwrap()).is_err());
    }

    #[test]
    fn t_dependence_is_exact() {
        let p = unit(0.3);
        for n in [2u64, 17, 400] {
            let a = gaussian_log_z_exact(&GaussianSpec::new(1.3, 0.7, p, n).unwrap()).unwrap();
            let b = gaussian_log_z_exact(&GaussianSpec::new(1.3, 0.0, p, n).unwrap()).unwrap();
            let nf = n as f64;
            let expect = nf.powf(2.3) * 0.49 / (4.0 * 1.3);
            assert!((a - b - expect).abs() < 1e-9 * expect.max(1.0));
            let sa = gaussian_log_z_asymptotic(&GaussianSpec::new(1.3, 0.7, p, n).unwrap()).unwrap();
            let sb = gaussian_log_z_asymptotic(&GaussianSpec::new(1.3, 0.0, p, n).unwrap()).unwrap();
            assert!((sa.total - sb.total - expect).abs() < 1e-9 * expect.max(1.0));
        }
    }

    #[test]
    fn scaling_covariance() {
        // λ → λ/c maps (g, t, ω) to (g/c², t/c, ω/c) and adds N ln c.
        let c = 1.7;
        let p = ModelParams::new(0.9, 1.4, 1.0, 0.25).unwrap();
        let q = ModelParams::new(0.9 / c, 1.4 / c, 1.0, 0.25).unwrap();
        let n = 11;
        let a = gaussian_log_z_exact(&GaussianSpec::new(1.2, 0.3, p, n).unwrap()).unwrap();
        let b = gaussian_log_z_exact(&GaussianSpec::new(1.2 / (c * c), 0.3 / c, q, n).unwrap()).unwrap();
        assert!((b - a - n as f64 * c.ln()).abs() < 1e-9);
    }

    #[test]
    fn corrected_asymptotics_converge() {
        let rows = residual_sweep(1.0, 0.0, unit(0.1), &[100, 1000, 10_000, 100_000]).unwrap();
        // decreasing like 1/N while well above the rounding floor of lnZ itself
        for w in rows[..3].windows(2) {
            assert!(w[1].corrected_residual.abs() < 0.2 * w[0].corrected_residual.abs());
        }
        // at N = 1e5 lnZ ~ 1e11: the residual is at the level of a few hundred ulps
        let ulp = rows[3].exact.abs() * f64::EPSILON;
        assert!(rows[3].corrected_residual.abs() < 1e3 * ulp);
        // the listed expansion misses exactly the N^α term
        for r in &rows {
            let miss = PI * PI / 12.0 * (r.n as f64).powf(0.1);
            assert!((r.exact - r.asymptotic - miss).abs() < 0.01);
        }
    }

    #[test]
    fn mellin_examples() {
        let r1 = mellin_m_log(1, 1.0, 1e-2).unwrap();
        let r2 = mellin_m_log(1, 1.0, 1e-3).unwrap();
        let d1 = (r1.direct - r1.asymptotic).abs();
        let d2 = (r2.direct - r2.asymptotic).abs();
        assert!(d2 < d1 / 3.0, "{d1} {d2}");
        let h1 = mellin_m_log(0, 0.5, 1e-2).unwrap();
        let h2 = mellin_m_log(0, 0.5, 1e-3).unwrap();
        let e1 = (h1.direct - h1.asymptotic).abs();
        let e2 = (h2.direct - h2.asymptotic).abs();
        assert!(e2 < e1 / 3.0 && e1 < 1e-2, "{e1} {e2}");
        let tiny = mellin_m_log(0, 1e-12, 0.1).unwrap();
        assert!(tiny.direct.abs() < 1e-10 && tiny.asymptotic.abs() < 1e-9);
        assert!(mellin_m_log(2, 0.5, 0.1).is_err());
    }

    #[test]
    fn matched_gaussian_forms() {
        let p = unit(0.2);
        let (g, t) = matched_gaussian(-PI, PI, f64::INFINITY, &p).unwrap();
        assert!((g - 1.0).abs() < 1e-15 && t.abs() < 1e-15);
        let (g, t) = matched_gaussian(-2.9, 3.3, 1e4, &p).unwrap();
        let w = w_gn(-2.9, 3.3, 1e4, &p).unwrap();
        let (wg, wt) = w.as_quadratic().unwrap();
        assert!((wg - g).abs() < 1e-15 && (wt - t).abs() < 1e-15);
        assert!(matched_gaussian(1.0, 0.0, 10.0, &p).is_err());
    }

    proptest! {
        #[test]
        fn asymptotic_values_are_coefficient_times_power(g in 0.3f64..3.0, n in 10u64..100_000) {
            let spec = GaussianSpec::new(g, 0.1, unit(0.35), n).unwrap();
            let a = gaussian_log_z_asymptotic(&spec).unwrap();
            let total: f64 = a.terms.iter().map(|t| t.coefficient * (n as f64).powf(t.exponent)).sum();
            prop_assert!((total - a.total).abs() <= 1e-12 * total.abs().max(1.0));
        }
    }
}
