//! Edge special functions and spectral constants.
//!
//! Notation: `s = ω₁+ω₂`, `κ₀ = 2πω₁ω₂/s`, `ς = κ₀/2`, `δ₀ = (ω₂−ω₁)/s`,
//! `u₁ = 1/(2πβs)`, and `C₊` / `C₋` are the regular contours above / below
//! the real axis (see [`Contour::regular_upper`]). Integrals written
//! `∫ … dλ/(2iπ)` include that normalisation.
//!
//! * `ϱ₀(x) = (1/2π²β)·[ln|1 + q e^{iπδ₀}| − ln(1 − q)]`, `q = e^{−κ₀x}`,
//!   which equals `−(1/2iπβ)∫_{C₊} e^{iλx}/(λR(λ)) dλ/(2iπ)`;
//! * `J = −2πβ ϱ₀′` (extended oddly), equal to `∫_{C₊} e^{iλx}/R(λ) dλ/(2iπ)`;
//! * `ϖ_ℓ(x) = (1/2πβ)∫_x^∞ y^ℓ J(y) dy`;
//! * `I_p(x) = ∫_{C₊} (e^{iλx}/λ) ∂^p(1/R_↓)(λ) dλ/(2iπ)`, evaluated by
//!   residues at the poles `iκ₀n` of `1/R_↓` when `κ₀x ≥ 0.01` and by a
//!   fixed contour rule otherwise;
//! * `𝔟_ℓ = τ_{ℓ+1}` with
//!   `τ_ℓ(x) = −(i^{ℓ+1}/2πβ) Σ_{a+r+p=ℓ} (ix)^r/(a!p!r!) ∂^a(1/R_↑)(0) I_p(x)`;
//! * `𝔞₀ = 𝔟₀ + u₁ = u₁ − Σ_n 𝔞_{0;n} e^{−κ₀nx}`, `𝔞_ℓ = (𝔟_ℓ + 𝔲_ℓ)/𝔞₀`;
//! * `𝔠 = (𝔟₁ − 𝔟₀𝔞₁)/u₁ = (𝔟₁ + x𝔟₀)/𝔞₀`, `𝔠_p = i^p I_p/(2iπ√s)`,
//!   `𝔯 = (𝔠₁ + C𝔠₀)/(1 + 2πβs𝔠₀)` with `C` the edge constant;
//! * the constants `u_ℓ`, `ℸ_p`, `ℸ_{s,ℓ}`, `ℷ_ℓ` and `ℵ₀`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model_core::ModelParams;
use crate::quadrature::{
    gauss_legendre, graded_rule, integrate_contour, integrate_interval, integrate_interval_with,
    Chebyshev, Contour, Endpoints, NodeRule, QuadratureSpec,
};
use crate::wiener_hopf::{factorial, log_gamma_complex, WienerHopfFactors};

type C64 = Complex64;

/// Residue series are used for `κ₀x` at or above this value.
const SERIES_SWITCH: f64 = 0.01;
/// Number of cached residue coefficients `𝔞_{0;n}`.
const SERIES_TERMS: usize = 4000;
/// `e^{−38}` is below double precision relative to the leading term.
const SERIES_CUTOFF: f64 = 38.0;
/// Chebyshev nodes used for `𝔠` and `𝔯`.
const CHEB_NODES: usize = 96;
/// Largest order of the `ℷ_ℓ` family.
pub const GIMEL_MAX: usize = 9;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Kernel helpers without the pole check of [`crate::model_core::kernel_s`].
#[derive(Debug, Clone, Copy)]
struct Kernel {
    beta: f64,
    omegas: [f64; 2],
}

impl Kernel {
    fn new(p: &ModelParams) -> Self {
        Self { beta: p.beta, omegas: [p.omega1, p.omega2] }
    }

    /// `S(u)`.
    fn s(&self, u: f64) -> f64 {
        self.omegas.iter().map(|w| self.beta * PI * w / (PI * w * u).tanh()).sum()
    }

    /// `S′(u)`.
    fn ds(&self, u: f64) -> f64 {
        self.omegas
            .iter()
            .map(|w| {
                let sh = (PI * w * u).sinh();
                -self.beta * (PI * w).powi(2) / (sh * sh)
            })
            .sum()
    }

    /// `T(u) = u S(u)`, even and regular.
    fn t(&self, u: f64) -> f64 {
        self.omegas
            .iter()
            .map(|w| {
                let z = PI * w * u;
                if z.abs() < 1e-8 {
                    self.beta
                } else {
                    self.beta * z / z.tanh()
                }
            })
            .sum()
    }

    /// `T′(u) = S(u) + u S′(u)`, odd and regular.
    fn dt(&self, u: f64) -> f64 {
        self.omegas
            .iter()
            .map(|w| {
                let z = PI * w * u;
                let core = if z.abs() < 0.05 {
                    let z2 = z * z;
                    z * (2.0 / 3.0 + z2 * (-4.0 / 45.0 + z2 * (4.0 / 315.0 - z2 * 8.0 / 4725.0)))
                } else {
                    let sh = z.sinh();
                    1.0 / z.tanh() - z / (sh * sh)
                };
                self.beta * PI * w * core
            })
            .sum()
    }
}

/// A smooth decaying profile `h` on `[0, ∞)`, stored as a Chebyshev
/// interpolant on `[0, L]` and set to zero beyond.
#[derive(Debug, Clone)]
pub struct Profile {
    f: Chebyshev,
    d1: Chebyshev,
    d2: Chebyshev,
    anti: Chebyshev,
    len: f64,
}

impl Profile {
    fn from_values(values: &[f64], len: f64) -> Self {
        let f = Chebyshev::from_values(values, 0.0, len);
        let d1 = f.derivative();
        let d2 = d1.derivative();
        let anti = f.integral();
        Self { f, d1, d2, anti, len }
    }

    /// `h(x)`.
    pub fn value(&self, x: f64) -> f64 {
        if x < self.len {
            self.f.eval(x.max(0.0))
        } else {
            0.0
        }
    }

    /// `h′(x)`.
    pub fn d1(&self, x: f64) -> f64 {
        if x < self.len {
            self.d1.eval(x.max(0.0))
        } else {
            0.0
        }
    }

    /// `h″(x)`.
    pub fn d2(&self, x: f64) -> f64 {
        if x < self.len {
            self.d2.eval(x.max(0.0))
        } else {
            0.0
        }
    }

    /// `∫₀^x h`.
    pub fn integral(&self, x: f64) -> f64 {
        self.anti.eval(x.clamp(0.0, self.len))
    }

    /// Magnitude of the trailing Chebyshev coefficients relative to the
    /// leading one (resolution diagnostic).
    pub fn tail_ratio(&self) -> f64 {
        let cs = self.f.coeffs();
        let head = cs.iter().map(|c| c.abs()).fold(0.0, f64::max);
        let tail = cs[cs.len() - 4..].iter().map(|c| c.abs()).fold(0.0, f64::max);
        tail / head
    }
}

/// Values of `ℸ_p` from its two contour expressions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DalethP {
    /// Order `p`.
    pub p: usize,
    /// First expression `−(R_↓(0)/2)∫_{ℝ+iε′} μ^{−(p+1)}/R_↓(μ) dμ/(2iπ)`.
    pub value: (f64, f64),
    /// Second expression `(−1)^{p+1}(R_↓(0)/2)∫_{ℝ−iε′} μ^{−(p+2)}/R_↑(μ) dμ/(2iπ)`.
    pub second: (f64, f64),
    /// Residue value `(R_↓(0)/2)·[μ^p](1/R_↓)`.
    pub residue: (f64, f64),
    /// `i^p ℸ_p`, the real combination entering the constraint expansion.
    pub rotated: f64,
    /// Whether `ℸ_p` itself is real (imaginary part below `1e-10`).
    pub is_real: bool,
}

/// The constant `ℸ_{s,ℓ}` by its routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DalethSL {
    /// Moment index `s`.
    pub s: usize,
    /// Order `ℓ`.
    pub l: usize,
    /// Value used downstream (moment route when computed, else explicit).
    pub value: f64,
    /// `∫₀^∞ x^s 𝔟_ℓ(x) dx` by quadrature (when `s+ℓ` is within the table
    /// order).
    pub moment: Option<f64>,
    /// Finite sum over Taylor data of `1/R_↑`, `1/R_↓` at 0 equivalent to
    /// the moment.
    pub explicit: f64,
    /// The printed derivative formula, reported for comparison only.
    pub printed: (f64, f64),
}

/// The constant `ℵ₀` with its constituent pieces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aleph0Report {
    /// Primary value (term 1 + term 2 of the `𝔠` form).
    pub value: f64,
    /// Real double integral involving `J` and `S`.
    pub term1: f64,
    /// Double contour integral.
    pub term2: f64,
    /// Pieces (A)…(E) of term 2.
    pub term2_pieces: [f64; 5],
    /// The alternative `𝔯` form (diagnostic).
    pub alt_value: f64,
    /// Term 1 of the `𝔯` form.
    pub alt_term1: f64,
    /// Term 2 of the `𝔯` form.
    pub alt_term2: f64,
    /// Contour height used.
    pub height: f64,
}

/// Cached values of `1/R_↓` on a fixed node rule over `C₊`.
#[derive(Debug)]
struct ContourCache {
    lambda: Vec<C64>,
    /// `w_j (1/R_↓)(λ_j) / (2iπ)`.
    weight: Vec<C64>,
}

/// Evaluators for the edge functions and memoized constants of one
/// parameter set.
#[derive(Debug)]
pub struct BoundaryFunctionTable {
    params: ModelParams,
    factors: WienerHopfFactors,
    spec: QuadratureSpec,
    max_order: usize,
    kernel: Kernel,
    series: OnceLock<(Vec<f64>, Vec<f64>)>,
    contour: OnceLock<Result<ContourCache>>,
    u: OnceLock<Result<Vec<f64>>>,
    c_profile: OnceLock<Result<Profile>>,
    r_profile: OnceLock<Result<Profile>>,
    daleth_p: Mutex<HashMap<usize, DalethP>>,
    daleth_sl: Mutex<HashMap<(usize, usize), DalethSL>>,
    gimel: OnceLock<Result<Vec<f64>>>,
    aleph0: OnceLock<Result<Aleph0Report>>,
}

fn shared<T: Clone>(cell: &OnceLock<Result<T>>, f: impl FnOnce() -> Result<T>) -> Result<T> {
    cell.get_or_init(f).clone()
}

/// Process-wide table cache keyed by the exact bits of the parameters.
pub fn shared_table(params: &ModelParams) -> Arc<BoundaryFunctionTable> {
    static TABLES: OnceLock<Mutex<HashMap<[u64; 4], Arc<BoundaryFunctionTable>>>> = OnceLock::new();
    let key = [
        params.omega1.to_bits(),
        params.omega2.to_bits(),
        params.beta.to_bits(),
        params.alpha.to_bits(),
    ];
    let map = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = map.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(key)
        .or_insert_with(|| Arc::new(BoundaryFunctionTable::new(*params)))
        .clone()
}

impl BoundaryFunctionTable {
    /// Table with default tolerances and order 4.
    pub fn new(params: ModelParams) -> Self {
        Self::with_spec(params, QuadratureSpec::default(), 4)
    }

    /// Table with explicit quadrature spec and maximal order of `𝔟_ℓ`
    /// (and of `s+ℓ` for the moment route of `ℸ_{s,ℓ}`).
    pub fn with_spec(params: ModelParams, spec: QuadratureSpec, max_order: usize) -> Self {
        Self {
            params,
            factors: WienerHopfFactors::new(params),
            spec,
            max_order,
            kernel: Kernel::new(&params),
            series: OnceLock::new(),
            contour: OnceLock::new(),
            u: OnceLock::new(),
            c_profile: OnceLock::new(),
            r_profile: OnceLock::new(),
            daleth_p: Mutex::new(HashMap::new()),
            daleth_sl: Mutex::new(HashMap::new()),
            gimel: OnceLock::new(),
            aleph0: OnceLock::new(),
        }
    }

    /// Model parameters.
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Wiener–Hopf factors.
    pub fn factors(&self) -> &WienerHopfFactors {
        &self.factors
    }

    /// Quadrature spec.
    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    /// Configured maximal order.
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Contour height `ς`.
    pub fn varsigma(&self) -> f64 {
        self.params.varsigma()
    }

    /// `S(u)` (no pole check; `u ≠ 0` expected).
    pub fn kernel_s(&self, u: f64) -> f64 {
        self.kernel.s(u)
    }

    /// `T(u) = u S(u)`.
    pub fn kernel_t(&self, u: f64) -> f64 {
        self.kernel.t(u)
    }

    /// `T′(u) = u S′(u) + S(u)`.
    pub fn kernel_dt(&self, u: f64) -> f64 {
        self.kernel.dt(u)
    }

    fn kappa0(&self) -> f64 {
        self.params.kappa0()
    }

    fn sqrt_s(&self) -> f64 {
        self.params.omega_sum().sqrt()
    }

    /// Profile support length `L = 45/κ₀` beyond which `𝔠`, `𝔯` are zero to
    /// double precision.
    pub fn profile_length(&self) -> f64 {
        45.0 / self.kappa0()
    }

    // ---------------------------------------------------------------- J, ϱ₀

    /// `ϱ₀(x)` for `x > 0`.
    pub fn rho0(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("rho0 requires x > 0, got {x}")));
        }
        let p = &self.params;
        let q = (-p.kappa0() * x).exp();
        let one_minus_q = -(-p.kappa0() * x).exp_m1();
        let cos = (PI * p.delta0()).cos();
        let num = 0.5 * (2.0 * q * cos + q * q).ln_1p();
        Ok((num - one_minus_q.ln()) / (2.0 * PI * PI * p.beta))
    }

    /// `J(x)`, odd, with `x·J(x) → 1/π` at the origin.
    pub fn j(&self, x: f64) -> Result<f64> {
        if x == 0.0 || !x.is_finite() {
            return Err(Error::Domain(format!("J requires finite x ≠ 0, got {x}")));
        }
        if x < 0.0 {
            return Ok(-self.j(-x)?);
        }
        let p = &self.params;
        let k0 = p.kappa0();
        let q = (-k0 * x).exp();
        let one_minus_q = -(-k0 * x).exp_m1();
        let e = C64::from_polar(1.0, PI * p.delta0());
        let first = (-k0 * q * e / (1.0 + q * e)).re;
        let second = k0 * q / one_minus_q;
        Ok(-(first - second) / PI)
    }

    /// `J(x)` from its contour definition (oracle).
    pub fn j_contour(&self, x: f64) -> Result<f64> {
        let path = Contour::regular_upper(self.varsigma());
        let v = integrate_contour(
            |l| (C64::i() * l * x).exp() * self.factors.inv_r(l).unwrap_or(c(f64::NAN, 0.0)),
            &path,
            &self.spec,
        )?;
        Ok((v / c(0.0, 2.0 * PI)).re)
    }

    /// `ϱ₀(x)` from its contour definition (oracle).
    pub fn rho0_contour(&self, x: f64) -> Result<f64> {
        let path = Contour::regular_upper(self.varsigma());
        let v = integrate_contour(
            |l| (C64::i() * l * x).exp() / l * self.factors.inv_r(l).unwrap_or(c(f64::NAN, 0.0)),
            &path,
            &self.spec,
        )?;
        let beta = self.params.beta;
        Ok((v / c(0.0, 2.0 * PI) * (-1.0) / c(0.0, 2.0 * PI * beta)).re)
    }

    /// `ϖ_ℓ(x) = (1/2πβ)∫_x^∞ y^ℓ J(y) dy`.
    pub fn varpi(&self, l: usize, x: f64) -> Result<f64> {
        if x < 0.0 || (l == 0 && x == 0.0) {
            return Err(Error::Domain(format!("varpi_{l} undefined at x = {x}")));
        }
        let f = |y: f64| if y == 0.0 { 0.0 } else { y.powi(l as i32) * self.j(y).unwrap_or(0.0) };
        let ends = if x == 0.0 { Endpoints::SingularLeft } else { Endpoints::Regular };
        let v = integrate_interval_with(f, x, f64::INFINITY, ends, &self.spec)?;
        Ok(v.value / (2.0 * PI * self.params.beta))
    }

    /// `∫_ℝ y^ℓ J(y) dy` (twice the half-line integral for odd ℓ, zero for
    /// even ℓ).
    pub fn j_moment(&self, l: usize) -> Result<f64> {
        if l == 0 {
            return Err(Error::Domain("zeroth moment of J diverges".into()));
        }
        if l.is_multiple_of(2) {
            return Ok(0.0);
        }
        Ok(2.0 * 2.0 * PI * self.params.beta * self.varpi(l, 0.0)?)
    }

    // ------------------------------------------------------- spectral data

    /// `u_1 … u_{l_max}`.
    pub fn u_coeffs(&self, l_max: usize) -> Result<Vec<f64>> {
        let all = shared(&self.u, || self.factors.u_coeffs(40))?;
        if l_max > all.len() {
            return self.factors.u_coeffs(l_max);
        }
        Ok(all[..l_max].to_vec())
    }

    /// `u_ℓ` (ℓ ≥ 1).
    pub fn u(&self, l: usize) -> Result<f64> {
        if l == 0 {
            return Err(Error::Validation("u_ℓ starts at ℓ = 1".into()));
        }
        Ok(self.u_coeffs(l)?[l - 1])
    }

    /// Residue coefficients `𝔞_{0;n}` (manifestly non-negative Gamma form)
    /// and `α_n = 2πβ√s κ₀ n 𝔞_{0;n}`, for `n = 1 … 4000`.
    fn series(&self) -> &(Vec<f64>, Vec<f64>) {
        self.series.get_or_init(|| {
            let p = &self.params;
            let (w1, w2, beta) = (p.omega1, p.omega2, p.beta);
            let s = p.omega_sum();
            let kap = p.kappa();
            let lg = |x: f64| log_gamma_complex(c(x, 0.0)).map(|v| v.re).unwrap_or(f64::NAN);
            let mut a = Vec::with_capacity(SERIES_TERMS);
            let mut al = Vec::with_capacity(SERIES_TERMS);
            for n in 1..=SERIES_TERMS {
                let nf = n as f64;
                let sin = (PI * kap * nf).sin().abs();
                let v = if sin < 1e-12 {
                    0.0
                } else {
                    let lc = (s / (2.0 * PI * beta * w1 * w2)).ln() + 2.0 * (sin / PI).ln()
                        + lg(1.0 + kap * nf)
                        + lg(1.0 + (1.0 - kap) * nf)
                        - 2.0 * nf.ln()
                        - lg(nf + 1.0)
                        - nf * kap * kap.ln()
                        - nf * (1.0 - kap) * (1.0 - kap).ln();
                    lc.exp()
                };
                a.push(v);
                al.push(2.0 * PI * beta * s.sqrt() * p.kappa0() * nf * v);
            }
            (a, al)
        })
    }

    /// The positive coefficients `𝔞_{0;n}`, `n ≥ 1`.
    pub fn a0_series_coeffs(&self) -> &[f64] {
        &self.series().0
    }

    fn contour_cache(&self) -> Result<&ContourCache> {
        let r = self.contour.get_or_init(|| {
            let path = Contour::regular_upper(self.varsigma());
            let rule = NodeRule { segment_panels: 16, ray_panels: 128, order: 16, v_max: 64.0 };
            let nodes = path.nodes(&rule);
            let mut lambda = Vec::with_capacity(nodes.len());
            let mut weight = Vec::with_capacity(nodes.len());
            for (l, w) in nodes {
                let v = self.factors.inv_r_down(l)?;
                lambda.push(l);
                weight.push(w * v / c(0.0, 2.0 * PI));
            }
            Ok(ContourCache { lambda, weight })
        });
        match r {
            Ok(v) => Ok(v),
            Err(e) => Err(e.clone()),
        }
    }

    /// `S_k(x) = ∫_{C₊} e^{iλx} λ^{−(k+1)} (1/R_↓)(λ) dλ/(2iπ)` for
    /// `k = 0 … kmax`.
    fn s_sums(&self, kmax: usize, x: f64, force_contour: bool) -> Result<Vec<C64>> {
        let k0 = self.kappa0();
        let mut out = vec![c(0.0, 0.0); kmax + 1];
        if k0 * x >= SERIES_SWITCH && !force_contour {
            let (_, al) = self.series();
            let nmax = ((SERIES_CUTOFF / (k0 * x)).ceil() as usize).min(SERIES_TERMS);
            for (i, a) in al.iter().enumerate().take(nmax) {
                if *a == 0.0 {
                    continue;
                }
                let n = (i + 1) as f64;
                let z = c(0.0, k0 * n);
                let mut term = c(a * (-k0 * n * x).exp(), 0.0) / z;
                for o in out.iter_mut() {
                    *o += term;
                    term /= z;
                }
            }
        } else {
            let cache = self.contour_cache()?;
            for (l, w) in cache.lambda.iter().zip(&cache.weight) {
                let mut term = w * (C64::i() * l * x).exp() / l;
                for o in out.iter_mut() {
                    *o += term;
                    term /= l;
                }
            }
        }
        Ok(out)
    }

    /// `I_p(x)` for `p = 0 … pmax`.
    pub fn i_p_all(&self, pmax: usize, x: f64) -> Result<Vec<C64>> {
        self.i_p_all_route(pmax, x, false)
    }

    fn i_p_all_route(&self, pmax: usize, x: f64, force_contour: bool) -> Result<Vec<C64>> {
        if x < 0.0 {
            return Err(Error::Domain(format!("I_p requires x ≥ 0, got {x}")));
        }
        let sk = self.s_sums(pmax, x, force_contour)?;
        let ix = c(0.0, x);
        Ok((0..=pmax)
            .map(|p| {
                let mut v = c(0.0, 0.0);
                for (k, s) in sk.iter().enumerate().take(p + 1) {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    v += binomial(p, k) * ix.powu((p - k) as u32) * sign * factorial(k) * s;
                }
                if p % 2 == 0 {
                    v
                } else {
                    -v
                }
            })
            .collect())
    }

    /// `τ_ℓ(x)` for `ℓ = 0 … lmax`.
    fn tau_all(&self, lmax: usize, x: f64, force_contour: bool) -> Result<Vec<C64>> {
        let ip = self.i_p_all_route(lmax, x, force_contour)?;
        let beta = self.params.beta;
        let ix = c(0.0, x);
        (0..=lmax)
            .map(|l| {
                let mut tot = c(0.0, 0.0);
                for a in 1..=l {
                    let du = self.factors.deriv_inv_up_at_zero(a)?;
                    for r in 0..=(l - a) {
                        let p = l - a - r;
                        tot += ix.powu(r as u32) / (factorial(a) * factorial(p) * factorial(r))
                            * du
                            * ip[p];
                    }
                }
                Ok(-C64::i().powu(l as u32 + 1) / (2.0 * PI * beta) * tot)
            })
            .collect()
    }

    fn check_order(&self, l: usize) -> Result<()> {
        if l > self.max_order {
            Err(Error::Validation(format!(
                "order {l} above the table maximum {}",
                self.max_order
            )))
        } else {
            Ok(())
        }
    }

    /// `𝔟_ℓ(x)`, `x ≥ 0`.
    pub fn b_func(&self, l: usize, x: f64) -> Result<f64> {
        self.check_order(l)?;
        Ok(self.tau_all(l + 1, x, false)?[l + 1].re)
    }

    /// `𝔟_0 … 𝔟_lmax` at `x`, as complex numbers (imaginary parts are
    /// quadrature noise).
    pub fn b_all_complex(&self, lmax: usize, x: f64) -> Result<Vec<C64>> {
        self.check_order(lmax)?;
        Ok(self.tau_all(lmax + 1, x, false)?[1..].to_vec())
    }

    /// `𝔟_ℓ(x)` evaluated on the contour regardless of `x` (test hook).
    pub fn b_func_contour(&self, l: usize, x: f64) -> Result<f64> {
        self.check_order(l)?;
        Ok(self.tau_all(l + 1, x, true)?[l + 1].re)
    }

    /// `𝔲_ℓ(x) = Σ_{s+p=ℓ} (−x)^p u_{s+1}/p!`.
    pub fn u_func(&self, l: usize, x: f64) -> Result<f64> {
        let u = self.u_coeffs(l + 1)?;
        Ok((0..=l).map(|p| (-x).powi(p as i32) / factorial(p) * u[l - p]).sum())
    }

    /// `𝔞₀(x)`: residue form `u₁ − Σ 𝔞_{0;n} e^{−κ₀nx}` for `κ₀x ≥ 0.01`,
    /// contour form `u₁ + 𝔟₀(x)` below.
    pub fn a0(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Err(Error::Domain(format!("a0 requires x ≥ 0, got {x}")));
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        let u1 = self.u(1)?;
        let k0 = self.kappa0();
        if k0 * x >= SERIES_SWITCH {
            let (a, _) = self.series();
            let nmax = ((SERIES_CUTOFF / (k0 * x)).ceil() as usize).min(SERIES_TERMS);
            let mut sum = 0.0;
            // Sum the small terms first.
            for (i, v) in a.iter().enumerate().take(nmax).rev() {
                sum += v * (-k0 * (i + 1) as f64 * x).exp();
            }
            Ok(u1 - sum)
        } else {
            Ok(u1 + self.tau_all(1, x, false)?[1].re)
        }
    }

    /// `𝔞₀(x) = u₁ − i I₀(x)/(2πβ√s)` with `I₀` by adaptive contour
    /// quadrature (independent oracle).
    pub fn a0_integral_representation(&self, x: f64) -> Result<f64> {
        let c0 = Contour::regular_upper(self.varsigma());
        let i0 = integrate_contour(
            |l| (C64::i() * l * x).exp() / l * self.factors.inv_r_down(l).unwrap_or(c(f64::NAN, 0.0)),
            &c0,
            &self.spec,
        )? / c(0.0, 2.0 * PI);
        let u1 = self.u(1)?;
        Ok(u1 - (C64::i() * i0 / (2.0 * PI * self.params.beta * self.sqrt_s())).re)
    }

    /// `𝔞_ℓ(x)`.
    pub fn a_func(&self, l: usize, x: f64) -> Result<f64> {
        if l == 0 {
            return self.a0(x);
        }
        if !(x > 0.0) {
            return Err(Error::Domain(format!("a_{l} requires x > 0")));
        }
        Ok((self.b_func(l, x)? + self.u_func(l, x)?) / self.a0(x)?)
    }

    /// `ϱ_ℓ(x)` for `x > 0` by contour quadrature:
    /// `(i^{ℓ+1}/2πβ)∫_{C₊} e^{iλx}/R_↓ [1/(λ^{ℓ+1}R_↑) − Σ_{a+b=ℓ} c_a λ^{−(b+1)}] dλ/(2iπ)`
    /// with `c_a` the Taylor coefficients of `1/R_↑` at 0.
    pub fn rho(&self, l: usize, x: f64) -> Result<f64> {
        if l == 0 {
            return self.rho0(x);
        }
        if !(x > 0.0) {
            return Err(Error::Domain("rho_ℓ requires x > 0".into()));
        }
        let cu = self.factors.taylor_inv_up()?.to_vec();
        let f = |lam: C64| -> C64 {
            let (Ok(d), Ok(u)) = (self.factors.inv_r_down(lam), self.factors.inv_r_up(lam)) else {
                return c(f64::NAN, 0.0);
            };
            let mut bracket = u / lam.powu(l as u32 + 1);
            for (a, ca) in cu.iter().enumerate().take(l + 1) {
                bracket -= ca / lam.powu((l - a) as u32 + 1);
            }
            (C64::i() * lam * x).exp() * d * bracket
        };
        let v = integrate_contour(f, &Contour::regular_upper(self.varsigma()), &self.spec)?
            / c(0.0, 2.0 * PI);
        Ok((C64::i().powu(l as u32 + 1) / (2.0 * PI * self.params.beta) * v).re)
    }

    /// `𝔟_ℓ` from its defining combination
    /// `ϱ_{ℓ+1} − ((−x)^{ℓ+1}/(ℓ+1)!)ϱ₀ − Σ_{s+p=ℓ} (−x)^p ϖ_{s+1}/(p!(s+1)!)`
    /// (oracle for [`Self::b_func`]).
    pub fn b_func_definition(&self, l: usize, x: f64) -> Result<f64> {
        let mut v = self.rho(l + 1, x)? - (-x).powi(l as i32 + 1) / factorial(l + 1) * self.rho0(x)?;
        for s in 0..=l {
            let p = l - s;
            v -= (-x).powi(p as i32) * self.varpi(s + 1, x)? / (factorial(p) * factorial(s + 1));
        }
        Ok(v)
    }

    // --------------------------------------------------------- 𝔠, 𝔠_p, 𝔯

    /// `𝔠_p(x)` for `p ∈ {0, 1}` (complex; the imaginary part is noise).
    pub fn c_p_complex(&self, p: usize, x: f64) -> Result<C64> {
        if p > 1 {
            return Err(Error::Validation("c_p is defined for p ∈ {0, 1}".into()));
        }
        let ip = self.i_p_all(p, x)?;
        Ok(C64::i().powu(p as u32) * ip[p] / c(0.0, 2.0 * PI * self.sqrt_s()))
    }

    /// `𝔠_p(x)`, `p ∈ {0, 1}`.
    pub fn c_p(&self, p: usize, x: f64) -> Result<f64> {
        Ok(self.c_p_complex(p, x)?.re)
    }

    /// Denominator `1 + 2πβs 𝔠₀(x)` of `𝔯`.
    pub fn r_denominator(&self, x: f64) -> Result<f64> {
        Ok(1.0 + 2.0 * PI * self.params.beta * self.params.omega_sum() * self.c_p(0, x)?)
    }

    /// `𝔯(x)` for `x > 0`.
    pub fn r_func(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain("r requires x > 0".into()));
        }
        let num = self.c_p(1, x)? + self.params.edge_log_sum() * self.c_p(0, x)?;
        Ok(num / self.r_denominator(x)?)
    }

    /// `𝔠(x) = (𝔟₁ + x𝔟₀)/𝔞₀` evaluated directly (x > 0).
    pub fn c_direct(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain("c requires x > 0".into()));
        }
        let b = self.tau_all(2, x, false)?;
        Ok((b[2].re + x * b[1].re) / self.a0(x)?)
    }

    /// Chebyshev profile of `𝔠` on `[0, L]`.
    pub fn c_profile(&self) -> Result<Profile> {
        shared(&self.c_profile, || {
            let len = self.profile_length();
            let xs = Chebyshev::nodes(0.0, len, CHEB_NODES);
            let vals: Result<Vec<f64>> = xs.par_iter().map(|&x| self.c_direct(x)).collect();
            Ok(Profile::from_values(&vals?, len))
        })
    }

    /// `𝔠(x)` from the profile (`𝔠(0)` included).
    pub fn c_func(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Err(Error::Domain("c requires x ≥ 0".into()));
        }
        Ok(self.c_profile()?.value(x))
    }

    /// Chebyshev profile of `𝔯 − 𝔯(∞)` on `[0, L]` (with `𝔯(∞) = 0`, since
    /// both `𝔠_p` decay exponentially).
    pub fn r_profile(&self) -> Result<Profile> {
        shared(&self.r_profile, || {
            let len = self.profile_length();
            let xs = Chebyshev::nodes(0.0, len, CHEB_NODES);
            let vals: Result<Vec<f64>> = xs.par_iter().map(|&x| self.r_func(x)).collect();
            Ok(Profile::from_values(&vals?, len))
        })
    }

    // ---------------------------------------------------------------- ℸ_p

    /// `ℸ_p` by both contour expressions on horizontal lines at `±ε′`.
    pub fn daleth_p_at(&self, p: usize, eps: f64) -> Result<DalethP> {
        let f = &self.factors;
        let rd0 = f.r_down(c(0.0, 0.0))?;
        let upper = Contour::horizontal_line(eps, eps);
        let lower = Contour::horizontal_line(-eps, eps);
        let i1 = integrate_contour(
            |m| f.inv_r_down(m).unwrap_or(c(f64::NAN, 0.0)) / m.powu(p as u32 + 1),
            &upper,
            &self.spec,
        )? / c(0.0, 2.0 * PI);
        let i2 = integrate_contour(
            |m| f.inv_r_up(m).unwrap_or(c(f64::NAN, 0.0)) / m.powu(p as u32 + 2),
            &lower,
            &self.spec,
        )? / c(0.0, 2.0 * PI);
        let v1 = -rd0 / 2.0 * i1;
        let sign = if p.is_multiple_of(2) { -1.0 } else { 1.0 };
        let v2 = sign * rd0 / 2.0 * i2;
        let residue = rd0 / 2.0 * f.taylor_inv_down()?[p];
        if (v1 - v2).norm() > 1e-8 * v1.norm().max(1e-3) {
            return Err(Error::Numerical(format!(
                "daleth_{p}: contour expressions disagree ({v1} vs {v2})"
            )));
        }
        let rotated = C64::i().powu(p as u32) * v1;
        Ok(DalethP {
            p,
            value: (v1.re, v1.im),
            second: (v2.re, v2.im),
            residue: (residue.re, residue.im),
            rotated: rotated.re,
            is_real: v1.im.abs() < 1e-10,
        })
    }

    /// `ℸ_p` at the default `ε′ = ς/2` (memoized).
    pub fn daleth_p(&self, p: usize) -> Result<DalethP> {
        if let Some(v) = self.daleth_p.lock().unwrap_or_else(|e| e.into_inner()).get(&p) {
            return Ok(*v);
        }
        let v = self.daleth_p_at(p, 0.5 * self.varsigma())?;
        self.daleth_p.lock().unwrap_or_else(|e| e.into_inner()).insert(p, v);
        Ok(v)
    }

    /// `i^p ℸ_p` from the Taylor data (fast path used by the expansions).
    pub fn daleth_p_rotated(&self, p: usize) -> Result<f64> {
        Ok(self.daleth_p_rotated_complex(p)?.re)
    }

    /// `i^p ℸ_p` before discarding the (vanishing) imaginary part.
    pub fn daleth_p_rotated_complex(&self, p: usize) -> Result<C64> {
        let taylor = self.factors.taylor_inv_down()?;
        if p >= taylor.len() {
            return Err(Error::Validation(format!(
                "daleth_{p} beyond the Taylor order {}",
                taylor.len() - 1
            )));
        }
        let rd0 = self.factors.r_down(c(0.0, 0.0))?;
        Ok(C64::i().powu(p as u32) * rd0 / 2.0 * taylor[p])
    }

    // ------------------------------------------------------------ ℸ_{s,ℓ}

    /// Explicit route for `ℸ_{s,ℓ}`:
    /// `−(i^{ℓ+2}/2πβ) Σ_{a+r+p=ℓ+1} i^r/(a!p!r!) ∂^a(1/R_↑)(0)
    ///  · [−i^{s+r+1}/(s+r+1) · ∂^{p+s+r+1}(1/R_↓)(0)]`.
    pub fn daleth_sl_explicit(&self, s: usize, l: usize) -> Result<f64> {
        let f = &self.factors;
        let i = C64::i();
        let mut tot = c(0.0, 0.0);
        for a in 0..=(l + 1) {
            let du = f.deriv_inv_up_at_zero(a)?;
            if du == c(0.0, 0.0) {
                continue;
            }
            for r in 0..=(l + 1 - a) {
                let p = l + 1 - a - r;
                let dd = f.deriv_inv_down_at_zero(p + s + r + 1)?;
                let inner = -i.powu((s + r + 1) as u32) / (s + r + 1) as f64 * dd;
                tot += i.powu(r as u32) / (factorial(a) * factorial(p) * factorial(r)) * du * inner;
            }
        }
        let v = -i.powu(l as u32 + 2) / (2.0 * PI * self.params.beta) * tot;
        Ok(v.re)
    }

    /// The printed derivative formula
    /// `(i^{s+ℓ+1}/2π) Σ_{r=1}^{ℓ+1} s!/(r!(s+ℓ+1−r)!) ∂^r(μ/R_↓(−μ))|₀ ∂^{s+ℓ+1−r}(1/R_↓)|₀`.
    pub fn daleth_sl_printed(&self, s: usize, l: usize) -> Result<C64> {
        let f = &self.factors;
        let mut tot = c(0.0, 0.0);
        for r in 1..=(l + 1) {
            // μ/R_↓(−μ) = −1/R_↑(μ)
            let dm = -f.deriv_inv_up_at_zero(r)?;
            let dd = f.deriv_inv_down_at_zero(s + l + 1 - r)?;
            tot += factorial(s) / (factorial(r) * factorial(s + l + 1 - r)) * dm * dd;
        }
        Ok(C64::i().powu((s + l + 1) as u32) / (2.0 * PI) * tot)
    }

    /// Moment route `∫₀^∞ x^s 𝔟_ℓ(x) dx`.
    pub fn daleth_sl_moment(&self, s: usize, l: usize) -> Result<f64> {
        self.check_order(l)?;
        let xs = SERIES_SWITCH / self.kappa0();
        let f = |x: f64| x.powi(s as i32) * self.b_func(l, x).unwrap_or(f64::NAN);
        let near = integrate_interval_with(f, 0.0, xs, Endpoints::SingularLeft, &self.spec)?;
        let far = integrate_interval(f, xs, f64::INFINITY, &self.spec)?;
        Ok(near.value + far.value)
    }

    /// `ℸ_{s,ℓ}` with routes; the moment route is computed (and cross-checked
    /// against the explicit route to 1e−5) when `s+ℓ ≤ max_order`.
    pub fn daleth_sl(&self, s: usize, l: usize) -> Result<DalethSL> {
        if let Some(v) = self.daleth_sl.lock().unwrap_or_else(|e| e.into_inner()).get(&(s, l)) {
            return Ok(*v);
        }
        let explicit = self.daleth_sl_explicit(s, l)?;
        let printed = self.daleth_sl_printed(s, l)?;
        let moment = if s + l <= self.max_order {
            let m = self.daleth_sl_moment(s, l)?;
            if (m - explicit).abs() > 1e-5 * m.abs().max(1e-3) {
                return Err(Error::Numerical(format!(
                    "daleth_({s},{l}): moment {m} vs explicit {explicit}"
                )));
            }
            Some(m)
        } else {
            None
        };
        let v = DalethSL {
            s,
            l,
            value: moment.unwrap_or(explicit),
            moment,
            explicit,
            printed: (printed.re, printed.im),
        };
        self.daleth_sl.lock().unwrap_or_else(|e| e.into_inner()).insert((s, l), v);
        Ok(v)
    }

    /// `ℸ_{s,ℓ}` value only, explicit route (cheap; used for high orders).
    pub fn daleth_sl_value(&self, s: usize, l: usize) -> Result<f64> {
        if s + l <= self.max_order.min(2) {
            return Ok(self.daleth_sl(s, l)?.value);
        }
        self.daleth_sl_explicit(s, l)
    }

    // ------------------------------------------------------------------ ℷ

    /// `ℷ_k`, `k ≤ 9`: `ℷ_{2ℓ} = ∫_ℝ J T′ u^{2ℓ}/(4πβ(2ℓ)!)`,
    /// `ℷ_{2ℓ+1} = ∫_ℝ J T u^{2ℓ+1}/(4πβ(2ℓ+1)!)`.
    pub fn gimel(&self, k: usize) -> Result<f64> {
        if k > GIMEL_MAX {
            return Err(Error::Validation(format!("gimel index {k} above {GIMEL_MAX}")));
        }
        Ok(shared(&self.gimel, || (0..=GIMEL_MAX).map(|k| self.gimel_with(k, &self.spec)).collect())?
            [k])
    }

    /// `ℷ_k` at a caller-chosen tolerance.
    pub fn gimel_with(&self, k: usize, spec: &QuadratureSpec) -> Result<f64> {
        let beta = self.params.beta;
        let f = |u: f64| {
            if u == 0.0 {
                return 0.0;
            }
            let j = self.j(u).unwrap_or(0.0);
            let w = if k.is_multiple_of(2) { self.kernel.dt(u) } else { self.kernel.t(u) };
            j * w * u.powi(k as i32)
        };
        // Even integrand: twice the half line.
        let v = integrate_interval(f, 0.0, f64::INFINITY, spec)?;
        Ok(2.0 * v.value / (4.0 * PI * beta * factorial(k)))
    }

    /// `∫₀^∞ J(u)[uS′(u) + S(u)] du/(2π)`, the half-line expression of `ℷ₀`
    /// at β = 1 (the bracket uses the series of `T′` for `πω|u| < 0.05`).
    pub fn gimel0_half_line(&self) -> Result<f64> {
        let k = self.kernel;
        let f = |u: f64| {
            if u == 0.0 {
                return 0.0;
            }
            let bracket = if u < 0.05 / (PI * self.params.omega1.max(self.params.omega2)) {
                k.dt(u)
            } else {
                u * k.ds(u) + k.s(u)
            };
            self.j(u).unwrap_or(0.0) * bracket
        };
        Ok(integrate_interval(f, 0.0, f64::INFINITY, &self.spec)?.value / (2.0 * PI))
    }

    /// `ℷ₀` from the full-line integral over `ℝ` (no parity reduction).
    pub fn gimel0_full_line(&self) -> Result<f64> {
        let f = |u: f64| if u == 0.0 { 0.0 } else { self.j(u).unwrap_or(0.0) * self.kernel.dt(u) };
        let v = integrate_interval(f, f64::NEG_INFINITY, f64::INFINITY, &self.spec)?;
        Ok(v.value / (4.0 * PI * self.params.beta))
    }

    // ------------------------------------------------------------------ ℵ₀

    /// `ℵ₀` at the default contour height (memoized).
    pub fn aleph0(&self) -> Result<Aleph0Report> {
        shared(&self.aleph0, || self.aleph0_at(self.varsigma()))
    }

    /// `ℵ₀` with the regular contours at height `height ∈ (0, κ₀)`.
    pub fn aleph0_at(&self, height: f64) -> Result<Aleph0Report> {
        if !(height > 0.0 && height < self.kappa0()) {
            return Err(Error::Validation("contour height must lie in (0, κ₀)".into()));
        }
        let beta = self.params.beta;
        let s = self.params.omega_sum();
        let cp = self.c_profile()?;
        let term1 = -self.term1_integral(&cp)? / (2.0 * PI * beta);
        let machine = DoubleContour::new(self, height)?;
        let pieces = machine.pieces(&cp, 1.0)?;
        let term2: f64 = pieces.iter().sum();

        // Alternative form with 𝔯.
        let rp = self.r_profile()?;
        let alt_term1 = -s / (2.0 * PI) * self.term1_integral(&rp)?;
        let r_pieces = machine.pieces(&rp, 0.0)?;
        let r_double: f64 = r_pieces.iter().sum::<f64>() * 2.0 * PI * beta;
        let t_double = machine.dt_double_contour()?;
        let alt_term2 = s * r_double - t_double / (2.0 * PI);
        Ok(Aleph0Report {
            value: term1 + term2,
            term1,
            term2,
            term2_pieces: pieces,
            alt_value: alt_term1 + alt_term2,
            alt_term1,
            alt_term2,
            height,
        })
    }

    /// `∫₀^∞ J(u) [2S′(u)P(u) + S(u)(h(u) + h(0))] du` with `P = ∫₀^u h`,
    /// written as `(T Q + 2uT′P)/u²`, `Q = u(h(u)+h(0)) − 2P` to remove the
    /// cancellation at the origin.
    fn term1_integral(&self, h: &Profile) -> Result<f64> {
        let (gx, gw) = gauss_legendre(16);
        let h0 = h.value(0.0);
        let k = self.kernel;
        let f = |u: f64| -> f64 {
            if u == 0.0 {
                return 0.0;
            }
            let p = h.integral(u);
            let q = if u < 1.0 {
                // Q = u³ ∫₀¹ t(1−t) h″(ut) dt
                let mut acc = 0.0;
                for (x, w) in gx.iter().zip(&gw) {
                    let t = 0.5 * (x + 1.0);
                    acc += 0.5 * w * t * (1.0 - t) * h.d2(u * t);
                }
                u * u * u * acc
            } else {
                u * (h.value(u) + h0) - 2.0 * p
            };
            let inner = (k.t(u) * q + 2.0 * u * k.dt(u) * p) / (u * u);
            self.j(u).unwrap_or(0.0) * inner
        };
        Ok(integrate_interval(f, 0.0, f64::INFINITY, &self.spec)?.value)
    }
}

/// Machinery for double contour integrals
/// `DC[F] = ∫_{C₊}∫_{C₋} F̂(λ,μ)/((λ−μ)R_↓(λ)R_↑(μ)) dλ dμ/(2iπ)²` with
/// `F̂(λ,μ) = ∫∫_{ℝ₊²} e^{iλx−iμy} F(x,y) dx dy`.
struct DoubleContour<'a> {
    table: &'a BoundaryFunctionTable,
    /// Graded grid on `[0, 1.3 L]`.
    xs: Vec<f64>,
    ws: Vec<f64>,
    plus: Vec<(C64, C64)>,
    minus: Vec<(C64, C64)>,
    /// `1/R_↓` on `C₊` and `1/R_↑` on `C₋`.
    inv_down_plus: Vec<C64>,
    inv_up_minus: Vec<C64>,
    /// `e^{iλx} w_x` and `e^{−iμy} w_y`.
    e_plus: Vec<Vec<C64>>,
    e_minus: Vec<Vec<C64>>,
}

impl<'a> DoubleContour<'a> {
    fn new(table: &'a BoundaryFunctionTable, height: f64) -> Result<Self> {
        let len = table.profile_length();
        let (xs, ws) = graded_rule(1.3 * len, 1e-7, 0.5, 16);
        let rule = NodeRule { segment_panels: 10, ray_panels: 12, order: 16, v_max: 24.0 };
        let plus = Contour::regular_upper(height).nodes(&rule);
        let minus = Contour::regular_lower(height).nodes(&rule);
        let f = &table.factors;
        let inv_down_plus: Result<Vec<C64>> = plus.iter().map(|(l, _)| f.inv_r_down(*l)).collect();
        let inv_up_minus: Result<Vec<C64>> = minus.iter().map(|(m, _)| f.inv_r_up(*m)).collect();
        let e_plus = plus
            .par_iter()
            .map(|(l, _)| xs.iter().zip(&ws).map(|(x, w)| (C64::i() * l * x).exp() * w).collect())
            .collect();
        let e_minus = minus
            .par_iter()
            .map(|(m, _)| xs.iter().zip(&ws).map(|(y, w)| (-C64::i() * m * y).exp() * w).collect())
            .collect();
        Ok(Self {
            table,
            xs,
            ws,
            plus,
            minus,
            inv_down_plus: inv_down_plus?,
            inv_up_minus: inv_up_minus?,
            e_plus,
            e_minus,
        })
    }

    fn two_i_pi() -> C64 {
        c(0.0, 2.0 * PI)
    }

    /// `F_d(x, y) = S′(u)(h(x)−h(y)) + S(u)h′(x) + πβs h′(x)`, `u = x−y`,
    /// with the near-diagonal form `T′(u)D + T(u)D_x + πβs h′(x)`.
    fn f_d(&self, h: &Profile, gl: &(Vec<f64>, Vec<f64>), x: f64, y: f64) -> f64 {
        let k = self.table.kernel;
        let p = &self.table.params;
        let u = x - y;
        let shift = PI * p.beta * p.omega_sum() * h.d1(x);
        if u.abs() < 0.3 {
            let (mut d, mut dx) = (0.0, 0.0);
            for (t, w) in gl.0.iter().zip(&gl.1) {
                let t = 0.5 * (t + 1.0);
                let z = y + t * u;
                d += 0.5 * w * h.d1(z);
                dx += 0.5 * w * t * h.d2(z);
            }
            k.dt(u) * d + k.t(u) * dx + shift
        } else {
            k.ds(u) * (h.value(x) - h.value(y)) + k.s(u) * h.d1(x) + shift
        }
    }

    /// Pieces (A)…(E) of `(1/2πβ)·DC[∂ₓ{S(x−y)(h(x)−h(y))} − k]`.
    fn pieces(&self, h: &Profile, k_const: f64) -> Result<[f64; 5]> {
        let t = self.table;
        let p = &t.params;
        let beta = p.beta;
        let pref = 1.0 / (2.0 * PI * beta);
        let f = &t.factors;
        let gamma = p.kappa0();
        let gl = gauss_legendre(16);
        let n = self.xs.len();
        let pis = PI * beta * p.omega_sum();
        let tip = Self::two_i_pi();

        // (A) ∫ F_∞ ϱ₀ with F_∞(x) = −πβs h′(x) − k.
        let mut a = 0.0;
        for (x, w) in self.xs.iter().zip(&self.ws) {
            a += w * (-pis * h.d1(*x) - k_const) * t.rho0(*x)?;
        }

        // (B) constant corner term c·e^{−γ(x+y)}.
        let cc = beta * h.d2(0.0) + pis * h.d1(0.0);
        let inv_up_ig = f.inv_r_up(c(0.0, gamma))?;
        let inv_down_mig = f.inv_r_down(c(0.0, -gamma))?;
        let mut b = c(0.0, 0.0);
        for ((l, w), d) in self.plus.iter().zip(&self.inv_down_plus) {
            let ir = f.inv_r(*l)?;
            b += w * cc / (l * l + gamma * gamma) * (-ir + d * inv_up_ig);
        }
        let b = pref * b / tip;

        // (C), (D) edge terms.
        let f1: Vec<f64> = self
            .xs
            .iter()
            .map(|&x| self.f_d(h, &gl, x, 0.0) - cc * (-gamma * x).exp())
            .collect();
        let g1: Vec<f64> = self
            .xs
            .iter()
            .map(|&y| self.f_d(h, &gl, 0.0, y) - cc * (-gamma * y).exp())
            .collect();
        let i = C64::i();
        let mut cpart = c(0.0, 0.0);
        for (j, ((l, w), d)) in self.plus.iter().zip(&self.inv_down_plus).enumerate() {
            let fh: C64 = self.e_plus[j].iter().zip(&f1).map(|(e, v)| e * v).sum();
            let iu = f.inv_r_up(*l)?;
            cpart += w * fh * d * (-iu / (gamma + i * l) - i * inv_up_ig / (l - i * gamma));
        }
        let cpart = pref * cpart / tip;
        let mut dpart = c(0.0, 0.0);
        for (j, ((m, w), u)) in self.minus.iter().zip(&self.inv_up_minus).enumerate() {
            let gh: C64 = self.e_minus[j].iter().zip(&g1).map(|(e, v)| e * v).sum();
            let id = f.inv_r_down(*m)?;
            dpart += w * gh * u * (-id / (gamma - i * m) + i * inv_down_mig / (m + i * gamma));
        }
        let dpart = pref * dpart / tip;

        // (E) remainder vanishing on both axes, by tensor transform.
        let fx0: Vec<f64> = self.xs.iter().map(|&x| self.f_d(h, &gl, x, 0.0)).collect();
        let ex: Vec<f64> = self.xs.iter().map(|&x| (-gamma * x).exp()).collect();
        let f5: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|ix| {
                let x = self.xs[ix];
                (0..n)
                    .map(|iy| {
                        let y = self.xs[iy];
                        self.f_d(h, &gl, x, y) - fx0[ix] * ex[iy] - g1[iy] * ex[ix]
                    })
                    .collect()
            })
            .collect();
        // G[j][y] = Σ_x e_plus[j][x] f5[x][y]
        let g: Vec<Vec<C64>> = self
            .e_plus
            .par_iter()
            .map(|row| {
                let mut acc = vec![c(0.0, 0.0); n];
                for (e, frow) in row.iter().zip(&f5) {
                    for (a, v) in acc.iter_mut().zip(frow) {
                        *a += e * v;
                    }
                }
                acc
            })
            .collect();
        let e: C64 = self
            .plus
            .par_iter()
            .enumerate()
            .map(|(j, (l, wl))| {
                let mut s = c(0.0, 0.0);
                for (m_idx, (m, wm)) in self.minus.iter().enumerate() {
                    let fh: C64 =
                        g[j].iter().zip(&self.e_minus[m_idx]).map(|(a, b)| a * b).sum();
                    s += wm * fh * self.inv_up_minus[m_idx] / (l - m);
                }
                wl * self.inv_down_plus[j] * s
            })
            .sum();
        let e = pref * e / (tip * tip);
        Ok([a, b.re, cpart.re, dpart.re, e.re])
    }

    /// `DC[T′(x−y)] = ∫_{C₊} i ĝ₊(λ)(1/R_↑)′(λ)/R_↓(λ) dλ/(2iπ)
    ///               − ∫_{C₋} i ĝ₋(μ)(1/R_↓)′(μ)/R_↑(μ) dμ/(2iπ)`,
    /// `ĝ₊(λ) = ∫₀^∞ e^{iλu}T′(u)du`, `ĝ₋(μ) = ∫₀^∞ e^{−iμw}T′(−w)dw`.
    fn dt_double_contour(&self) -> Result<f64> {
        let t = self.table;
        let k = t.kernel;
        let f = &t.factors;
        let lim = PI * t.params.beta * t.params.omega_sum();
        let i = C64::i();
        let rest: Vec<f64> = self.xs.iter().map(|&u| k.dt(u) - lim).collect();
        let mut plus = c(0.0, 0.0);
        for (j, ((l, w), d)) in self.plus.iter().zip(&self.inv_down_plus).enumerate() {
            let gh: C64 = self.e_plus[j].iter().zip(&rest).map(|(e, v)| e * v).sum::<C64>() + lim * i / l;
            plus += w * i * gh * f.d_inv_r_up(*l)? * d;
        }
        let mut minus = c(0.0, 0.0);
        for (j, ((m, w), u)) in self.minus.iter().zip(&self.inv_up_minus).enumerate() {
            let gh: C64 =
                -(self.e_minus[j].iter().zip(&rest).map(|(e, v)| e * v).sum::<C64>() + lim / (i * m));
            minus += w * i * gh * f.d_inv_r_down(*m)? * u;
        }
        Ok(((plus - minus) / Self::two_i_pi()).re)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Arc<BoundaryFunctionTable> {
        shared_table(&ModelParams::new(1.0, 1.0, 1.0, 0.1).unwrap())
    }

    fn generic() -> Arc<BoundaryFunctionTable> {
        shared_table(&ModelParams::new(0.8, 1.5, 1.0, 0.1).unwrap())
    }

    #[test]
    fn j_and_rho0_closed_forms() {
        let t = unit();
        assert!((t.j(1.0).unwrap() - 0.086_589_537_530_046_9).abs() < 1e-15);
        assert!((t.rho0(1.0).unwrap() - 0.004_381_213_929_790_08).abs() < 1e-15);
        assert_eq!(t.j(-0.7).unwrap(), -t.j(0.7).unwrap());
        assert!(t.j(0.0).is_err());
        assert!(t.rho0(0.0).is_err());
        // x·J(x) → 1/π
        let est: Vec<f64> = [1e-3, 1e-4, 1e-5].iter().map(|&x| x * t.j(x).unwrap()).collect();
        assert!((est[2] - 1.0 / PI).abs() < 1e-5);
        // ϱ₀′ = −J/(2πβ)
        let h = 1e-5;
        for x in [0.3, 2.0] {
            let d = (t.rho0(x + h).unwrap() - t.rho0(x - h).unwrap()) / (2.0 * h);
            assert!((d + t.j(x).unwrap() / (2.0 * PI)).abs() < 1e-9);
        }
        // decay
        assert!(t.rho0(30.0).unwrap().abs() < 1e-10);
    }

    #[test]
    fn contour_definitions_match_closed_forms() {
        for t in [unit(), generic()] {
            for x in [0.1, 1.0, 5.0] {
                assert!((t.j_contour(x).unwrap() - t.j(x).unwrap()).abs() < 1e-10, "J at {x}");
            }
            let r = t.rho0_contour(1.0).unwrap();
            assert!((r - t.rho0(1.0).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn series_and_contour_routes_overlap() {
        for t in [unit(), generic()] {
            let k0 = t.params().kappa0();
            for x in [SERIES_SWITCH / k0, 0.05, 0.3] {
                for l in 0..=2 {
                    let a = t.b_func(l, x).unwrap();
                    let b = t.b_func_contour(l, x).unwrap();
                    assert!((a - b).abs() < 1e-11, "b_{l}({x}): {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn a0_properties() {
        let t = unit();
        let u1 = 1.0 / (4.0 * PI);
        assert_eq!(t.a0(0.0).unwrap(), 0.0);
        for x in [1e-6, 1e-3, 0.1, 1.0, 10.0, 50.0] {
            assert!(t.a0(x).unwrap() > 0.0);
        }
        assert!((t.a0(40.0).unwrap() - u1).abs() < 1e-14);
        let slope = t.a0(1e-8).unwrap() / 1e-4;
        let expect = 1.0 / (PI * (2.0 * PI).sqrt());
        assert!((slope / expect - 1.0).abs() < 1e-3, "{slope} vs {expect}");
        // b_0 = a_0 − u_1 across the switch
        for x in [1e-3, 0.5] {
            assert!((t.b_func(0, x).unwrap() + u1 - t.a0(x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn a0_series_vs_integral_representation() {
        let t = generic();
        for x in [0.01, 0.2, 1.0, 4.0, 10.0] {
            let a = t.a0(x).unwrap();
            let b = t.a0_integral_representation(x).unwrap();
            assert!((a - b).abs() < 1e-9, "{x}: {a} vs {b}");
        }
    }

    #[test]
    fn b_func_matches_definition() {
        let t = unit();
        for x in [0.5, 2.0] {
            for l in [0usize, 1] {
                let a = t.b_func(l, x).unwrap();
                let b = t.b_func_definition(l, x).unwrap();
                assert!((a - b).abs() < 1e-8, "b_{l}({x}): {a} vs {b}");
            }
        }
        assert!(t.b_func(1, 30.0).unwrap().abs() < 1e-10);
    }

    #[test]
    fn c_profile_values() {
        let t = unit();
        let cp = t.c_profile().unwrap();
        assert!((cp.value(0.0) + 2f64.ln() / PI).abs() < 1e-7);
        assert!(cp.tail_ratio() < 1e-12);
        for x in [0.05, 1.0, 3.0] {
            assert!((cp.value(x) - t.c_direct(x).unwrap()).abs() < 1e-11);
        }
    }

    #[test]
    fn c_p_and_r() {
        let t = unit();
        assert!((t.c_p(0, 1e-9).unwrap() + 1.0 / (4.0 * PI)).abs() < 1e-4);
        for x in [0.01, 0.5, 2.0] {
            assert!(t.c_p_complex(0, x).unwrap().im.abs() < 1e-9);
            assert!(t.c_p_complex(1, x).unwrap().im.abs() < 1e-9);
        }
        for x in [0.01, 0.1, 1.0, 10.0, 50.0] {
            assert!(t.r_denominator(x).unwrap() > 0.0);
        }
        // 1 + 2πβs𝔠₀ = 𝔞₀/u₁
        for x in [0.2, 3.0] {
            let lhs = t.r_denominator(x).unwrap();
            assert!((lhs - t.a0(x).unwrap() * 4.0 * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn daleth_p_routes() {
        let t = unit();
        let expected = [(0.5, 0.0), (0.0, -0.110_317_800_076_326), (-0.033_003_350_347_013_5, 0.0)];
        for (p, (re, im)) in expected.iter().enumerate() {
            let d = t.daleth_p(p).unwrap();
            assert!((d.value.0 - re).abs() < 1e-9 && (d.value.1 - im).abs() < 1e-9, "{d:?}");
            let other = t.daleth_p_at(p, 0.3 * t.varsigma()).unwrap();
            assert!((other.value.0 - d.value.0).abs() < 1e-9);
            assert!((other.value.1 - d.value.1).abs() < 1e-9);
            assert!((d.rotated - t.daleth_p_rotated(p).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn daleth_sl_routes() {
        let t = unit();
        let d = t.daleth_sl(0, 0).unwrap();
        assert!((d.value + 2f64.ln() / (4.0 * PI * PI)).abs() < 1e-8);
        for (s, l) in [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
            let d = t.daleth_sl(s, l).unwrap();
            let m = d.moment.unwrap();
            assert!((m - d.explicit).abs() < 1e-7 * m.abs().max(1e-3), "({s},{l}) {d:?}");
        }
        let g = generic();
        let d = g.daleth_sl(1, 0).unwrap();
        assert!((d.moment.unwrap() - d.explicit).abs() < 1e-7);
    }

    #[test]
    fn j_moments_match_u() {
        let t = generic();
        let beta = t.params().beta;
        for l in 1..=3 {
            let m = t.j_moment(l).unwrap();
            let u = t.u(l).unwrap();
            let expect = 2.0 * PI * beta * factorial(l) * u;
            assert!((m - expect).abs() < 1e-8 * expect.abs().max(1e-3), "ℓ={l}: {m} vs {expect}");
        }
        let unit = unit();
        assert!((unit.varpi(1, 0.0).unwrap() - 0.5 / (4.0 * PI)).abs() < 1e-10);
        assert!(unit.varpi(1, 40.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn gimel_forms() {
        let t = unit();
        let g0 = t.gimel(0).unwrap();
        assert!((t.gimel0_half_line().unwrap() - g0).abs() < 1e-9);
        assert!((t.gimel0_full_line().unwrap() - g0).abs() < 1e-9);
        let loose = t.gimel_with(0, &QuadratureSpec::with_rel_tol(1e-8)).unwrap();
        assert!((loose - g0).abs() < 1e-7);
    }

    #[test]
    fn term1_inner_vanishes_on_diagonal() {
        let t = unit();
        let cp = t.c_profile().unwrap();
        // S(u)[𝔠((v−u)/2) − 𝔠((v+u)/2)] → 0 as u → 0
        let v = 1.3;
        let u = 1e-7;
        let val = t.kernel_s(u) * (cp.value((v - u) / 2.0) - cp.value((v + u) / 2.0));
        let lim = -t.kernel_s(u) * u * cp.d1(v / 2.0);
        assert!((val - lim).abs() < 1e-6);
        // analytic ∂ₓ of S(x−y)(𝔠(x)−𝔠(y)) against finite differences at (1, 2)
        let g = |x: f64, y: f64| t.kernel_s(x - y) * (cp.value(x) - cp.value(y));
        let h = 1e-5;
        let fd = (g(1.0 + h, 2.0) - g(1.0 - h, 2.0)) / (2.0 * h);
        let k = Kernel::new(t.params());
        let an = k.ds(-1.0) * (cp.value(1.0) - cp.value(2.0)) + k.s(-1.0) * cp.d1(1.0);
        assert!((fd - an).abs() < 1e-6);
    }

    #[test]
    fn aleph0_value_and_contour_stability() {
        let t = unit();
        let a = t.aleph0().unwrap();
        assert!((a.value - 0.091_831_392_7).abs() < 1e-8, "{a:?}");
        let b = t.aleph0_at(0.8 * t.varsigma()).unwrap();
        assert!((a.value - b.value).abs() < 1e-5 * a.value.abs());
    }
}
