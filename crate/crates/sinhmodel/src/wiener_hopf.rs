//! The interaction symbol
//! `R(λ) = sinh(λ(ω₁+ω₂)/2ω₁ω₂) / (2 sinh(λ/2ω₁) sinh(λ/2ω₂))`
//! and its Wiener–Hopf factors `R = R_↑·R_↓`, with `R_↑` analytic and
//! zero-free in the upper half-plane and `R_↓` in the lower one.
//!
//! With `s = ω₁+ω₂`,
//!
//! ```text
//! R_↑(λ) = (i√s/λ) · (ω₂/s)^{iλ/2πω₁} (ω₁/s)^{iλ/2πω₂}
//!          · Γ(1 − iλ/2πω₁) Γ(1 − iλ/2πω₂) / Γ(1 − iλs/2πω₁ω₂),
//! R_↓(λ) = (λ/2π√s) · (ω₂/s)^{−iλ/2πω₁} (ω₁/s)^{−iλ/2πω₂}
//!          · Γ(iλ/2πω₁) Γ(iλ/2πω₂) / Γ(iλs/2πω₁ω₂).
//! ```
//!
//! Both are evaluated in log space through a Lanczos complex log-Gamma.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model_core::ModelParams;
use crate::quadrature::taylor_coeffs;

type C64 = Complex64;

const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_923_517,
    -59.597_960_355_475_491_248,
    14.136_097_974_741_747_174,
    -0.491_913_816_097_620_199_78,
    0.339_946_499_848_118_886_99e-4,
    0.465_236_289_270_485_756_65e-4,
    -0.983_744_753_048_795_646_77e-4,
    0.158_088_703_224_912_488_84e-3,
    -0.210_264_441_724_104_883_19e-3,
    0.217_439_618_115_212_643_20e-3,
    -0.164_318_106_536_763_890_22e-3,
    0.844_182_239_838_527_432_93e-4,
    -0.261_908_384_015_814_086_70e-4,
    0.368_991_826_595_316_227_04e-5,
];

/// Distance below which an argument counts as sitting on a pole.
pub const POLE_PROXIMITY: f64 = 1e-8;

/// Order of the cached Taylor expansions at 0.
const TAYLOR_ORDER: usize = 60;

/// `ln(1 + w)` without cancellation for small `w`.
pub fn complex_ln_1p(w: C64) -> C64 {
    let t = 2.0 * w.re + w.norm_sqr();
    C64::new(0.5 * t.ln_1p(), w.im.atan2(1.0 + w.re))
}

/// `e^z − 1` without cancellation for small `z`.
pub fn complex_exp_m1(z: C64) -> C64 {
    let (s, c) = z.im.sin_cos();
    let h = (0.5 * z.im).sin();
    C64::new(z.re.exp_m1() * c - 2.0 * h * h, z.re.exp() * s)
}

/// Principal branch of `ln Γ(z)` (analytic continuation from the positive
/// real axis, continuous on `ℂ` minus the non-positive real axis, with
/// `Im ln Γ(x ± i0) = ∓kπ`-type jumps only across that axis).
pub fn log_gamma_complex(z: C64) -> Result<C64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("log-Gamma of non-finite argument {z}")));
    }
    if z.re <= 0.5 {
        let k = z.re.round();
        if k <= 0.0 && (z - C64::new(k, 0.0)).norm() < POLE_PROXIMITY {
            return Err(Error::Domain(format!("log-Gamma at pole {k}")));
        }
    }
    if z.im < 0.0 {
        return Ok(log_gamma_complex(z.conj())?.conj());
    }
    if z.re < 0.5 {
        // Γ(z)Γ(1−z) = π / sin(πz), with ln sin(πz) written for Im z ≥ 0 as
        // −iπz + ln(1 − e^{2iπz}) + iπ/2 − ln 2.
        let e = (C64::new(0.0, 2.0 * PI) * z).exp();
        let ln_sin = C64::new(0.0, -PI) * z + complex_ln_1p(-e) + C64::new(-(2f64.ln()), 0.5 * PI);
        return Ok(C64::new(PI.ln(), 0.0) - ln_sin - lanczos(C64::new(1.0, 0.0) - z));
    }
    Ok(lanczos(z))
}

fn lanczos(z: C64) -> C64 {
    let zm = z - 1.0;
    let mut x = C64::new(LANCZOS[0], 0.0);
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (zm + k as f64);
    }
    let t = zm + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (zm + 0.5) * t.ln() - t + x.ln()
}

/// Digamma `ψ(z) = Γ′(z)/Γ(z)` for complex `z` off the poles.
pub fn digamma_complex(z: C64) -> Result<C64> {
    if z.re <= 0.5 {
        let k = z.re.round();
        if k <= 0.0 && (z - C64::new(k, 0.0)).norm() < POLE_PROXIMITY {
            return Err(Error::Domain(format!("digamma at pole {k}")));
        }
    }
    if z.im < 0.0 {
        return Ok(digamma_complex(z.conj())?.conj());
    }
    if z.re < 0.5 {
        // ψ(z) = ψ(1−z) − π cot(πz); for Im z ≥ 0,
        // cot(πz) = −i(1 + e^{2iπz})/(1 − e^{2iπz}).
        let e = (C64::new(0.0, 2.0 * PI) * z).exp();
        let cot = C64::new(0.0, -1.0) * (1.0 + e) / (1.0 - e);
        return Ok(digamma_complex(C64::new(1.0, 0.0) - z)? - PI * cot);
    }
    let mut w = z;
    let mut acc = C64::new(0.0, 0.0);
    while w.norm() < 12.0 {
        acc -= 1.0 / w;
        w += 1.0;
    }
    // Asymptotic series with Bernoulli numbers B₂ … B₁₄.
    const B: [f64; 7] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
    ];
    let inv2 = 1.0 / (w * w);
    let mut pow = inv2;
    let mut series = C64::new(0.0, 0.0);
    for (k, b) in B.iter().enumerate() {
        series += pow * (b / (2.0 * (k + 1) as f64));
        pow *= inv2;
    }
    Ok(acc + w.ln() - 0.5 / w - series)
}

/// The symbol `R`, its factors and their Taylor data at the origin.
#[derive(Debug)]
pub struct WienerHopfFactors {
    params: ModelParams,
    s: f64,
    sqrt_s: f64,
    ln_a1: f64,
    ln_a2: f64,
    taylor_inv_up: OnceLock<Result<Vec<C64>>>,
    taylor_inv_down: OnceLock<Result<Vec<C64>>>,
    taylor_inv_r: OnceLock<Result<Vec<C64>>>,
}

impl Clone for WienerHopfFactors {
    fn clone(&self) -> Self {
        Self::new(self.params)
    }
}

impl WienerHopfFactors {
    /// Factors for the given parameters.
    pub fn new(params: ModelParams) -> Self {
        let s = params.omega_sum();
        Self {
            params,
            s,
            sqrt_s: s.sqrt(),
            ln_a1: (params.omega2 / s).ln(),
            ln_a2: (params.omega1 / s).ln(),
            taylor_inv_up: OnceLock::new(),
            taylor_inv_down: OnceLock::new(),
            taylor_inv_r: OnceLock::new(),
        }
    }

    /// Model parameters.
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// First pole height `κ₀ = 2πω₁ω₂/(ω₁+ω₂)` of `1/R`.
    pub fn kappa0(&self) -> f64 {
        self.params.kappa0()
    }

    fn half_args(&self, lambda: C64) -> (C64, C64) {
        (lambda / (2.0 * self.params.omega1), lambda / (2.0 * self.params.omega2))
    }

    fn check_lattice(&self, lambda: C64, spacing: f64, what: &str, skip_zero: bool) -> Result<()> {
        let k = (lambda.im / spacing).round();
        if skip_zero && k == 0.0 {
            return Ok(());
        }
        if (lambda - C64::new(0.0, k * spacing)).norm() < POLE_PROXIMITY {
            return Err(Error::Domain(format!("{what} evaluated at a pole: λ = {lambda}")));
        }
        Ok(())
    }

    /// `1/R(λ)`, computed as `(1−e^{−2A})(1−e^{−2B})/(1−e^{−2(A+B)})` with
    /// `A = λ/2ω₁`, `B = λ/2ω₂` for `Re λ ≥ 0` (oddness otherwise).
    pub fn inv_r(&self, lambda: C64) -> Result<C64> {
        self.check_lattice(lambda, self.kappa0(), "1/R", true)?;
        if lambda.re < 0.0 {
            return Ok(-self.inv_r(-lambda)?);
        }
        if lambda.norm() == 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        let (a, b) = self.half_args(lambda);
        let num = complex_exp_m1(-2.0 * a) * complex_exp_m1(-2.0 * b);
        let den = -complex_exp_m1(-2.0 * (a + b));
        Ok(num / den)
    }

    /// `R(λ)` (domain error within [`POLE_PROXIMITY`] of `2πiω_p k`).
    pub fn r(&self, lambda: C64) -> Result<C64> {
        self.check_lattice(lambda, 2.0 * PI * self.params.omega1, "R", false)?;
        self.check_lattice(lambda, 2.0 * PI * self.params.omega2, "R", false)?;
        if lambda.re < 0.0 {
            return Ok(-self.r(-lambda)?);
        }
        let (a, b) = self.half_args(lambda);
        let num = -complex_exp_m1(-2.0 * (a + b));
        let den = complex_exp_m1(-2.0 * a) * complex_exp_m1(-2.0 * b);
        Ok(num / den)
    }

    /// `ln E(μ)` with `R_↑(μ) = (i√s/μ)·E(μ)` and `R_↓(λ) = −i√s·E(−λ)`.
    fn ln_e(&self, mu: C64) -> Result<C64> {
        if let Some((v, _)) = self.ln_e_asymptotic(mu) {
            return Ok(v);
        }
        let (w1, w2) = (self.params.omega1, self.params.omega2);
        let i = C64::i();
        let z1 = 1.0 - i * mu / (2.0 * PI * w1);
        let z2 = 1.0 - i * mu / (2.0 * PI * w2);
        let z3 = 1.0 - i * mu * self.s / (2.0 * PI * w1 * w2);
        Ok(i * mu / (2.0 * PI * w1) * self.ln_a1
            + i * mu / (2.0 * PI * w2) * self.ln_a2
            + log_gamma_complex(z1)?
            + log_gamma_complex(z2)?
            - log_gamma_complex(z3)?)
    }

    /// Large-`|μ|` form of `ln E(μ)` and its derivative.
    ///
    /// With `w = −iμ/2π` and `w_p = w/ω_p`, `w₃ = w₁ + w₂`, Stirling's series
    /// cancels the linear terms exactly and leaves
    /// `ln E = ½ ln(2πw/s) + Σ_k B_{2k}/(2k(2k−1))·(w₁^{1−2k} + w₂^{1−2k} − w₃^{1−2k})`,
    /// which avoids the loss of precision of three `O(|w| ln |w|)` terms
    /// cancelling to `O(ln |w|)`. Returns `None` outside its validity region.
    fn ln_e_asymptotic(&self, mu: C64) -> Option<(C64, C64)> {
        const STIRLING: [f64; 8] = [
            1.0 / 12.0,
            -1.0 / 360.0,
            1.0 / 1260.0,
            -1.0 / 1680.0,
            1.0 / 1188.0,
            -691.0 / 360_360.0,
            1.0 / 156.0,
            -3617.0 / 122_400.0,
        ];
        let (o1, o2) = (self.params.omega1, self.params.omega2);
        let w = -C64::i() * mu / (2.0 * PI);
        if w.norm() / o1.max(o2) < 20.0 || w.arg().abs() > 0.9 * PI {
            return None;
        }
        let ws = [w / o1, w / o2, w * self.s / (o1 * o2)];
        let signs = [1.0, 1.0, -1.0];
        let mut val = 0.5 * (2.0 * PI * w / self.s).ln();
        let mut der = C64::new(0.5, 0.0);
        for (k, c) in STIRLING.iter().enumerate() {
            let e = 1 - 2 * (k as i32 + 1);
            let mut t = C64::new(0.0, 0.0);
            for (wj, sg) in ws.iter().zip(signs) {
                t += sg * wj.powi(e);
            }
            val += c * t;
            der += c * e as f64 * t;
        }
        Some((val, der / mu))
    }

    /// `d/dμ ln E(μ)`.
    fn d_ln_e(&self, mu: C64) -> Result<C64> {
        if let Some((_, d)) = self.ln_e_asymptotic(mu) {
            return Ok(d);
        }
        let (w1, w2) = (self.params.omega1, self.params.omega2);
        let i = C64::i();
        let c1 = i / (2.0 * PI * w1);
        let c2 = i / (2.0 * PI * w2);
        let c3 = i * self.s / (2.0 * PI * w1 * w2);
        Ok(c1 * self.ln_a1 + c2 * self.ln_a2
            - c1 * digamma_complex(1.0 - c1 * mu)?
            - c2 * digamma_complex(1.0 - c2 * mu)?
            + c3 * digamma_complex(1.0 - c3 * mu)?)
    }

    /// `R_↑(λ)`; poles at `λ = 0` and `−2πiω_p k`.
    pub fn r_up(&self, lambda: C64) -> Result<C64> {
        if lambda.norm() < POLE_PROXIMITY {
            return Err(Error::Domain("R_up has a pole at 0".into()));
        }
        Ok(C64::new(0.0, self.sqrt_s) / lambda * self.ln_e(lambda)?.exp())
    }

    /// `1/R_↑(λ)`; poles at `−iκ₀n`, `n ≥ 1`.
    pub fn inv_r_up(&self, lambda: C64) -> Result<C64> {
        Ok(C64::new(0.0, -1.0 / self.sqrt_s) * lambda * (-self.ln_e(lambda)?).exp())
    }

    /// `(1/R_↑)′(λ)`.
    pub fn d_inv_r_up(&self, lambda: C64) -> Result<C64> {
        let e = (-self.ln_e(lambda)?).exp();
        Ok(C64::new(0.0, -1.0 / self.sqrt_s) * e * (1.0 - lambda * self.d_ln_e(lambda)?))
    }

    /// `R_↓(λ)` from its Γ-quotient representation (with the removable
    /// singularity at 0 handled by the equivalent form `−i√s·E(−λ)`).
    pub fn r_down(&self, lambda: C64) -> Result<C64> {
        if lambda.norm() < 1e-6 || self.ln_e_asymptotic(-lambda).is_some() {
            return Ok(C64::new(0.0, -self.sqrt_s) * self.ln_e(-lambda)?.exp());
        }
        let (w1, w2) = (self.params.omega1, self.params.omega2);
        let i = C64::i();
        let z1 = i * lambda / (2.0 * PI * w1);
        let z2 = i * lambda / (2.0 * PI * w2);
        let z3 = i * lambda * self.s / (2.0 * PI * w1 * w2);
        let ln = (lambda / (2.0 * PI * self.sqrt_s)).ln() - z1 * self.ln_a1 - z2 * self.ln_a2
            + log_gamma_complex(z1)?
            + log_gamma_complex(z2)?
            - log_gamma_complex(z3)?;
        Ok(ln.exp())
    }

    /// `1/R_↓(λ)`; poles at `iκ₀n`, `n ≥ 1`.
    pub fn inv_r_down(&self, lambda: C64) -> Result<C64> {
        Ok(C64::new(0.0, 1.0 / self.sqrt_s) * (-self.ln_e(-lambda)?).exp())
    }

    /// `(1/R_↓)′(λ)`.
    pub fn d_inv_r_down(&self, lambda: C64) -> Result<C64> {
        Ok(self.inv_r_down(lambda)? * self.d_ln_e(-lambda)?)
    }

    /// The piecewise function `υ`: `1/R_↑` above `ℝ + iε`, `R_↓` below.
    pub fn upsilon(&self, lambda: C64, eps: f64) -> Result<C64> {
        if lambda.im > eps {
            self.inv_r_up(lambda)
        } else {
            self.r_down(lambda)
        }
    }

    fn cached<'a>(
        &'a self,
        cell: &'a OnceLock<Result<Vec<C64>>>,
        f: impl Fn(C64) -> Result<C64>,
    ) -> Result<&'a [C64]> {
        let r = cell.get_or_init(|| {
            let radius = 0.75 * self.kappa0();
            let failure = std::cell::Cell::new(None);
            let t = taylor_coeffs(
                |z| match f(z) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.set(Some(e));
                        C64::new(f64::NAN, 0.0)
                    }
                },
                C64::new(0.0, 0.0),
                radius,
                TAYLOR_ORDER,
            );
            if let Some(e) = failure.take() {
                return Err(e);
            }
            let t = t?;
            if t.aliasing_suspected {
                return Err(Error::Numerical("aliasing in Taylor extraction".into()));
            }
            Ok(t.coeffs)
        });
        match r {
            Ok(v) => Ok(v),
            Err(e) => Err(e.clone()),
        }
    }

    /// Taylor coefficients of `1/R_↑` at 0 (orders `0..=60`).
    pub fn taylor_inv_up(&self) -> Result<&[C64]> {
        self.cached(&self.taylor_inv_up, |z| self.inv_r_up(z))
    }

    /// Taylor coefficients of `1/R_↓` at 0 (orders `0..=60`).
    pub fn taylor_inv_down(&self) -> Result<&[C64]> {
        self.cached(&self.taylor_inv_down, |z| self.inv_r_down(z))
    }

    /// Taylor coefficients of `1/R` at 0 (orders `0..=60`).
    pub fn taylor_inv_r(&self) -> Result<&[C64]> {
        self.cached(&self.taylor_inv_r, |z| self.inv_r(z))
    }

    /// `∂^k (1/R_↑)(0)`.
    pub fn deriv_inv_up_at_zero(&self, k: usize) -> Result<C64> {
        Ok(self.taylor_inv_up()?.get(k).copied().ok_or_else(order_error)? * factorial(k))
    }

    /// `∂^k (1/R_↓)(0)`.
    pub fn deriv_inv_down_at_zero(&self, k: usize) -> Result<C64> {
        Ok(self.taylor_inv_down()?.get(k).copied().ok_or_else(order_error)? * factorial(k))
    }

    /// `u_ℓ = (i^ℓ / 2iπβ ℓ!) ∂^ℓ(1/R)(0)` for `ℓ = 1 … l_max`.
    ///
    /// The values are real; an imaginary part above `1e-12` (relative to
    /// `max(1, |u_ℓ|)`) is reported as a numerical error.
    pub fn u_coeffs(&self, l_max: usize) -> Result<Vec<f64>> {
        if l_max == 0 {
            return Err(Error::Validation("u coefficients start at order 1".into()));
        }
        let t = self.taylor_inv_r()?;
        if l_max >= t.len() {
            return Err(order_error());
        }
        let beta = self.params.beta;
        (1..=l_max)
            .map(|l| {
                let u = C64::i().powu(l as u32) * t[l] / C64::new(0.0, 2.0 * PI * beta);
                if u.im.abs() > 1e-12 * u.re.abs().max(1.0) {
                    Err(Error::Numerical(format!("u_{l} is not real: {u}")))
                } else {
                    Ok(u.re)
                }
            })
            .collect()
    }
}

fn order_error() -> Error {
    Error::Validation(format!("Taylor order above the cached maximum {TAYLOR_ORDER}"))
}

/// `k!` as a float.
pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * j as f64)
}
