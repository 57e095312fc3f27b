//! Parameters, confining potentials and the two-body interaction kernels.
//!
//! Everything here is immutable after construction and cheap to clone, so
//! the other modules pass these values around freely.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The quadruple `(ω₁, ω₂, β, α)` fixing the interaction and the scaling
/// regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// First interaction frequency, `ω₁ > 0`.
    pub omega1: f64,
    /// Second interaction frequency, `ω₂ > 0`.
    pub omega2: f64,
    /// Inverse temperature, `β > 0`.
    pub beta: f64,
    /// Scaling exponent, `0 < α < 1`.
    pub alpha: f64,
}

impl ModelParams {
    /// Builds validated parameters.
    ///
    /// `α ≥ 1/6` is accepted (all formulas remain evaluable) but flagged by
    /// [`ModelParams::outside_proven_regime`].
    pub fn new(omega1: f64, omega2: f64, beta: f64, alpha: f64) -> Result<Self> {
        let finite = [omega1, omega2, beta, alpha].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Validation("parameters must be finite".into()));
        }
        if omega1 <= 0.0 || omega2 <= 0.0 {
            return Err(Error::Validation(format!(
                "frequencies must be positive (omega1={omega1}, omega2={omega2})"
            )));
        }
        if beta <= 0.0 {
            return Err(Error::Validation(format!("beta must be positive (got {beta})")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Validation(format!("alpha must lie in (0,1) (got {alpha})")));
        }
        Ok(Self { omega1, omega2, beta, alpha })
    }

    /// `ω₁ = ω₂ = β = 1` with the given `α`.
    pub fn symmetric_unit(alpha: f64) -> Self {
        Self { omega1: 1.0, omega2: 1.0, beta: 1.0, alpha }
    }

    /// True when `α ≥ 1/6`, outside the regime where the expansion is proven.
    pub fn outside_proven_regime(&self) -> bool {
        self.alpha >= 1.0 / 6.0
    }

    /// `ω₁ + ω₂`.
    pub fn omega_sum(&self) -> f64 {
        self.omega1 + self.omega2
    }

    /// Height of the first pole of `1/R`: `κ₀ = 2πω₁ω₂/(ω₁+ω₂)`.
    pub fn kappa0(&self) -> f64 {
        2.0 * PI * self.omega1 * self.omega2 / self.omega_sum()
    }

    /// Default contour height `ς = κ₀/2`.
    pub fn varsigma(&self) -> f64 {
        0.5 * self.kappa0()
    }

    /// Phase parameter `δ₀ = (ω₂−ω₁)/(ω₁+ω₂)`.
    pub fn delta0(&self) -> f64 {
        (self.omega2 - self.omega1) / self.omega_sum()
    }

    /// `κ = ω₂/(ω₁+ω₂)`.
    pub fn kappa(&self) -> f64 {
        self.omega2 / self.omega_sum()
    }

    /// The edge constant `Σ_p (1/2πω_p) ln(ω₁ω₂/(ω_p(ω₁+ω₂)))`.
    ///
    /// It equals `−ln2/π` for `ω₁ = ω₂ = 1` and controls both the
    /// first endpoint corrections and the matched Gaussian potential.
    pub fn edge_log_sum(&self) -> f64 {
        let s = self.omega_sum();
        let p = self.omega1 * self.omega2;
        [self.omega1, self.omega2]
            .iter()
            .map(|&w| (p / (w * s)).ln() / (2.0 * PI * w))
            .sum()
    }

    /// `N^α` as a float.
    pub fn n_alpha(&self, n: f64) -> f64 {
        n.powf(self.alpha)
    }
}

/// `ln sinh(y)` for `y > 0`, accurate for tiny and huge arguments.
pub fn ln_sinh(y: f64) -> f64 {
    debug_assert!(y > 0.0);
    if y > 1.0 {
        y - std::f64::consts::LN_2 + (-(-2.0 * y).exp()).ln_1p()
    } else {
        // sinh(y)/y is close to 1 here, so expand around it.
        y.ln() + (y.sinh() / y).ln()
    }
}

/// `coth(y)` with the usual odd extension; pole at 0.
fn coth(y: f64) -> f64 {
    if y.abs() < 1e-4 {
        1.0 / y + y / 3.0 - y.powi(3) / 45.0
    } else {
        1.0 / y.tanh()
    }
}

/// The singular kernel `S(x) = Σ_p βπω_p coth(πω_p x)`.
///
/// Odd, with a simple pole at the origin and limits `±πβ(ω₁+ω₂)`.
pub fn kernel_s(params: &ModelParams, x: f64) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        return Err(Error::Domain(format!("S(x) has a simple pole at 0 (x = {x})")));
    }
    Ok([params.omega1, params.omega2]
        .iter()
        .map(|&w| params.beta * PI * w * coth(PI * w * x))
        .sum())
}

/// The rescaled two-body potential
/// `s_N(x) = (β/2N^α) ln[sinh(πω₁N^αx) sinh(πω₂N^αx)]`, evaluated in log
/// space; even in `x`.
pub fn kernel_s_n(params: &ModelParams, n: f64, x: f64) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        return Err(Error::Domain(format!("s_N(x) diverges at 0 (x = {x})")));
    }
    if n < 1.0 {
        return Err(Error::Validation(format!("N must be at least 1 (got {n})")));
    }
    let na = params.n_alpha(n);
    let y = na * x.abs();
    let l = ln_sinh(PI * params.omega1 * y) + ln_sinh(PI * params.omega2 * y);
    Ok(params.beta * l / (2.0 * na))
}

/// Serialized form of the supported potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// `V(x) = g x² + t x`.
    Quadratic {
        /// Curvature coefficient.
        g: f64,
        /// Linear coefficient.
        t: f64,
    },
    /// `V(x) = Σ_k c_k x^k`, even, degree ≤ 8.
    EvenPoly {
        /// Coefficients `c_0 … c_k`.
        coeffs: Vec<f64>,
    },
}

/// Derivative stack of a user-supplied potential: `(k, x) ↦ V^{(k)}(x)`.
pub type DerivativeFn = Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>;

/// Kind tag of a [`Potential`].
#[derive(Clone)]
pub enum PotentialKind {
    /// `g x² + t x`.
    Quadratic {
        /// Curvature coefficient.
        g: f64,
        /// Linear coefficient.
        t: f64,
    },
    /// Even polynomial with coefficients `c_0 … c_k`.
    EvenPolynomial(Vec<f64>),
    /// Arbitrary derivative stack valid up to `k_max`.
    Custom {
        /// Highest available derivative order.
        k_max: usize,
        /// The stack itself.
        deriv: DerivativeFn,
    },
}

impl fmt::Debug for PotentialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialKind::Quadratic { g, t } => write!(f, "Quadratic {{ g: {g}, t: {t} }}"),
            PotentialKind::EvenPolynomial(c) => write!(f, "EvenPolynomial({c:?})"),
            PotentialKind::Custom { k_max, .. } => write!(f, "Custom {{ k_max: {k_max} }}"),
        }
    }
}

/// A confining potential with analytic derivatives.
///
/// An additive constant can be attached without changing the kind; it only
/// affects `deriv(0, ·)`.
#[derive(Debug, Clone)]
pub struct Potential {
    kind: PotentialKind,
    offset: f64,
}

/// Order reported by polynomial potentials, whose derivatives exist to all
/// orders.
pub const POLYNOMIAL_K_MAX: usize = 64;

impl Potential {
    /// `V(x) = g x² + t x`; requires `g > 0`.
    pub fn quadratic(g: f64, t: f64) -> Result<Self> {
        if !(g > 0.0 && g.is_finite() && t.is_finite()) {
            return Err(Error::Validation(format!(
                "quadratic potential needs finite t and g > 0 (g={g}, t={t})"
            )));
        }
        Ok(Self { kind: PotentialKind::Quadratic { g, t }, offset: 0.0 })
    }

    /// `V(x) = Σ c_k x^k` with only even powers and degree ≤ 8.
    pub fn even_polynomial(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() > 9 {
            return Err(Error::Validation(format!(
                "even polynomial needs 1 to 9 coefficients (got {})",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Validation("polynomial coefficients must be finite".into()));
        }
        if coeffs.iter().skip(1).step_by(2).any(|&c| c != 0.0) {
            return Err(Error::Validation(
                "even polynomial must have vanishing odd coefficients".into(),
            ));
        }
        Ok(Self { kind: PotentialKind::EvenPolynomial(coeffs), offset: 0.0 })
    }

    /// Potential defined by an explicit derivative stack.
    pub fn custom(k_max: usize, deriv: DerivativeFn) -> Result<Self> {
        if k_max < 2 {
            return Err(Error::Validation("custom potentials need k_max >= 2".into()));
        }
        Ok(Self { kind: PotentialKind::Custom { k_max, deriv }, offset: 0.0 })
    }

    /// Builds a potential from its serialized form.
    pub fn from_spec(spec: &PotentialSpec) -> Result<Self> {
        match spec {
            PotentialSpec::Quadratic { g, t } => Self::quadratic(*g, *t),
            PotentialSpec::EvenPoly { coeffs } => Self::even_polynomial(coeffs.clone()),
        }
    }

    /// Serialized form, when the kind has one.
    pub fn to_spec(&self) -> Option<PotentialSpec> {
        match &self.kind {
            PotentialKind::Quadratic { g, t } if self.offset == 0.0 => {
                Some(PotentialSpec::Quadratic { g: *g, t: *t })
            }
            PotentialKind::EvenPolynomial(c) => {
                let mut c = c.clone();
                c[0] += self.offset;
                Some(PotentialSpec::EvenPoly { coeffs: c })
            }
            _ => None,
        }
    }

    /// Kind tag.
    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    /// Copy with `c` added to the potential.
    pub fn plus_constant(&self, c: f64) -> Self {
        Self { kind: self.kind.clone(), offset: self.offset + c }
    }

    /// Highest derivative order available.
    pub fn k_max(&self) -> usize {
        match &self.kind {
            PotentialKind::Custom { k_max, .. } => *k_max,
            _ => POLYNOMIAL_K_MAX,
        }
    }

    /// `V(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        self.deriv(0, x)
    }

    /// `V^{(k)}(x)`; orders beyond `k_max` of a custom stack return NaN.
    pub fn deriv(&self, k: usize, x: f64) -> f64 {
        let base = match &self.kind {
            PotentialKind::Quadratic { g, t } => match k {
                0 => g * x * x + t * x,
                1 => 2.0 * g * x + t,
                2 => 2.0 * g,
                _ => 0.0,
            },
            PotentialKind::EvenPolynomial(c) => poly_deriv(c, k, x),
            PotentialKind::Custom { k_max, deriv } => {
                if k > *k_max {
                    f64::NAN
                } else {
                    deriv(k, x)
                }
            }
        };
        if k == 0 {
            base + self.offset
        } else {
            base
        }
    }

    /// Curvature of the quadratic kind, if applicable.
    pub fn as_quadratic(&self) -> Option<(f64, f64)> {
        match self.kind {
            PotentialKind::Quadratic { g, t } => Some((g, t)),
            _ => None,
        }
    }
}

/// k-th derivative of `Σ c_j x^j` by Horner on the differentiated
/// coefficients.
fn poly_deriv(c: &[f64], k: usize, x: f64) -> f64 {
    if k >= c.len() {
        return 0.0;
    }
    let mut acc = 0.0;
    for j in (k..c.len()).rev() {
        let falling: f64 = ((j - k + 1)..=j).map(|m| m as f64).product();
        acc = acc * x + c[j] * falling;
    }
    acc
}

/// Report of [`potential_validate`].
#[derive(Debug, Clone, Serialize)]
pub struct PotentialReport {
    /// Minimum of `V''` on the sampled window.
    pub min_second_derivative: f64,
    /// Whether `V'' > 0` at every sample.
    pub convex: bool,
    /// `V(x)/|x|^{1.1}` at the left window end.
    pub growth_left: f64,
    /// `V(x)/|x|^{1.1}` at the right window end.
    pub growth_right: f64,
    /// Largest relative mismatch between `V^{(k)}` and the central finite
    /// difference of `V^{(k−1)}`, `k = 1 … min(k_max, 4)`.
    pub max_derivative_mismatch: f64,
    /// `max_derivative_mismatch < 1e−6`.
    pub derivatives_consistent: bool,
    /// Largest ratio `|V^{(k)}|/(k!·(1+|V|))` over the window, a crude
    /// sub-exponential growth indicator.
    pub derivative_growth: f64,
}

/// Checks the hypotheses on `V` over `window = (lo, hi)`; report only.
pub fn potential_validate(v: &Potential, window: (f64, f64)) -> Result<PotentialReport> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::Validation(format!("empty window [{lo}, {hi}]")));
    }
    let n = 401;
    let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let min_v2 = xs.iter().map(|&x| v.deriv(2, x)).fold(f64::INFINITY, f64::min);
    let growth = |x: f64| {
        if x == 0.0 {
            f64::NAN
        } else {
            v.eval(x) / x.abs().powf(1.1)
        }
    };
    let kmax = v.k_max().min(4);
    let mut worst: f64 = 0.0;
    let mut dgrowth: f64 = 0.0;
    for &x in &xs {
        for k in 1..=kmax {
            let h = 1e-4 * (1.0 + x.abs());
            let fd = (v.deriv(k - 1, x + h) - v.deriv(k - 1, x - h)) / (2.0 * h);
            let exact = v.deriv(k, x);
            let scale = exact.abs().max(v.deriv(k - 1, x).abs() * 1e-3).max(1e-8);
            worst = worst.max((fd - exact).abs() / scale);
            let fact: f64 = (1..=k).map(|m| m as f64).product();
            dgrowth = dgrowth.max(exact.abs() / (fact * (1.0 + v.eval(x).abs())));
        }
    }
    Ok(PotentialReport {
        min_second_derivative: min_v2,
        convex: min_v2 > 0.0,
        growth_left: growth(lo),
        growth_right: growth(hi),
        max_derivative_mismatch: worst,
        derivatives_consistent: worst < 1e-6,
        derivative_growth: dgrowth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ModelParams {
        ModelParams::symmetric_unit(0.1)
    }

    #[test]
    fn s_is_odd_and_saturates() {
        let p = unit();
        for &x in &[0.1, 1.0, 10.0] {
            assert_eq!(kernel_s(&p, -x).unwrap(), -kernel_s(&p, x).unwrap());
        }
        assert!((kernel_s(&p, 40.0).unwrap() - 2.0 * PI).abs() < 1e-12);
        let s1 = 2.0 * PI * (1.0 + (-2.0 * PI).exp()) / (1.0 - (-2.0 * PI).exp());
        assert!((kernel_s(&p, 1.0).unwrap() - s1).abs() < 1e-12);
        assert!((kernel_s(&p, 1.0).unwrap() - 6.306_696_189_874_324).abs() < 1e-12);
        assert!(kernel_s(&p, 0.0).is_err());
    }

    #[test]
    fn s_n_even_and_asymptotic() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 0.2).unwrap();
        let n = 100.0;
        for &x in &[0.01, 0.3, 2.0] {
            let a = kernel_s_n(&p, n, x).unwrap();
            assert_eq!(a, kernel_s_n(&p, n, -x).unwrap());
        }
        let na = n.powf(0.2);
        let x = 50.0 / na;
        let lim = (PI * 2.0 * x - 2.0 * std::f64::consts::LN_2 / na) / 2.0;
        assert!((kernel_s_n(&p, n, x).unwrap() - lim).abs() < 1e-12);
        // no overflow far out
        assert!(kernel_s_n(&p, n, 1e6 / na).unwrap().is_finite());
    }

    #[test]
    fn s_n_derivative_is_s() {
        let p = ModelParams::new(1.0, 2.0, 1.5, 0.3).unwrap();
        let n: f64 = 7.0;
        let na = n.powf(0.3);
        for &x in &[0.05, 0.4, 1.7, -0.9] {
            let h = 1e-5;
            let fd = (kernel_s_n(&p, n, x + h).unwrap() - kernel_s_n(&p, n, x - h).unwrap())
                / (2.0 * h);
            // 2∂ₓ s_N(x) = β·Σ πω_p coth(πω_p N^α x) = S(N^α x)
            let s = kernel_s(&p, na * x).unwrap();
            assert!((2.0 * fd - s).abs() < 1e-7 * s.abs(), "x={x}: {} vs {s}", 2.0 * fd);
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(ModelParams::new(0.0, 1.0, 1.0, 0.1).is_err());
        assert!(ModelParams::new(1.0, 1.0, -1.0, 0.1).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, 1.0).is_err());
        let p = ModelParams::new(1.0, 1.0, 1.0, 0.2).unwrap();
        assert!(p.outside_proven_regime());
        assert!(!unit().outside_proven_regime());
        assert!((unit().edge_log_sum() + std::f64::consts::LN_2 / PI).abs() < 1e-15);
    }

    #[test]
    fn potential_reports() {
        let q = Potential::quadratic(1.0, 0.0).unwrap();
        let r = potential_validate(&q, (-10.0, 10.0)).unwrap();
        assert_eq!(r.min_second_derivative, 2.0);
        assert!(r.convex && r.derivatives_consistent);
        let quartic = Potential::even_polynomial(vec![0.0, 0.0, 0.5, 0.0, 0.25]).unwrap();
        let r = potential_validate(&quartic, (-3.0, 3.0)).unwrap();
        assert!(r.convex && r.derivatives_consistent, "{r:?}");
        assert!((quartic.deriv(2, 2.0) - (1.0 + 3.0 * 4.0)).abs() < 1e-14);
        let bad = Potential::even_polynomial(vec![0.0, 0.0, 1.0, 0.0, -0.1]).unwrap();
        assert!(!potential_validate(&bad, (-5.0, 5.0)).unwrap().convex);
        assert!(Potential::even_polynomial(vec![0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn potential_json_roundtrip() {
        let spec: PotentialSpec =
            serde_json_like(r#"{"type":"even_poly","coeffs":[0,0,1,0,0.05]}"#);
        let v = Potential::from_spec(&spec).unwrap();
        assert!((v.eval(2.0) - (4.0 + 0.05 * 16.0)).abs() < 1e-14);
        assert_eq!(v.to_spec().unwrap(), spec);
    }

    fn serde_json_like(s: &str) -> PotentialSpec {
        // Tiny hand-rolled parse for the two test shapes, to keep JSON out of
        // the library's dependency list.
        if s.contains("even_poly") {
            let inner = &s[s.find('[').unwrap() + 1..s.find(']').unwrap()];
            PotentialSpec::EvenPoly {
                coeffs: inner.split(',').map(|t| t.trim().parse().unwrap()).collect(),
            }
        } else {
            unreachable!()
        }
    }
}
