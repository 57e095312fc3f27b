//! The acceptance suite: twelve numbered criteria covering the Gaussian
//! family, the Wiener–Hopf factors, the spectral and edge constants, the
//! equilibrium problem, the assembled expansion, the oracles and the Mellin
//! asymptotics.
//!
//! Each criterion is a list of [`Check`]s. Hard checks decide the verdict;
//! soft checks are reported only. A criterion also fails when it exceeds its
//! wall-clock budget. The suite is shared by the `acceptance` integration
//! test and the `selftest` subcommand of the command-line tool.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::boundary_functions::shared_table;
use crate::equilibrium::{
    baby_model, endpoints_n, free_energy_leading, free_energy_oracle, richardson_first_corrections,
    EquilibriumDensity, MAX_SYSTEM_ORDER,
};
use crate::error::Result;
use crate::expansion::{
    capricornus0_integration_by_parts, constraint_xn_expansion, main_expansion, single_integral_is_expansion,
};
use crate::gaussian_exact::{gaussian_log_z_exact, mellin_m_log, residual_sweep, w_gn, GaussianSpec};
use crate::model_core::{ModelParams, Potential};
use crate::reference_oracle::{log_z_quadrature, log_z_ratio_mc, McSettings};
use crate::wiener_hopf::{factorial, WienerHopfFactors};
use crate::C64;

/// Number of criteria in the suite.
pub const CRITERIA: usize = 12;

/// One comparison inside a criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    /// What is compared.
    pub name: String,
    /// Whether the comparison holds.
    pub passed: bool,
    /// Hard checks decide the verdict; soft checks are informational.
    pub hard: bool,
    /// Measured values and thresholds.
    pub detail: String,
}

impl Check {
    fn hard(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, hard: true, detail: detail.into() }
    }

    fn soft(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, hard: false, detail: detail.into() }
    }

    /// `|got − want| < tol`.
    fn close(name: impl Into<String>, got: f64, want: f64, tol: f64) -> Self {
        let err = (got - want).abs();
        Self::hard(name, err < tol, format!("got {got:.17e}, want {want:.17e}, |Δ| = {err:.3e} (tol {tol:.0e})"))
    }
}

/// Verdict of one criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    /// Criterion number, 1…12.
    pub id: usize,
    /// Short title.
    pub title: &'static str,
    /// All hard checks passed within the time budget.
    pub passed: bool,
    /// Individual comparisons.
    pub checks: Vec<Check>,
    /// Wall-clock time in seconds.
    pub elapsed_secs: f64,
}

impl CriterionOutcome {
    /// One-line summary `[PASS] 3 Wiener–Hopf identities (0.01 s)`.
    pub fn summary_line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        format!("[{verdict}] {:>2} {} ({:.2} s)", self.id, self.title, self.elapsed_secs)
    }

    /// Lines describing the failed hard checks.
    pub fn failure_lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| c.hard && !c.passed)
            .map(|c| format!("       ✗ {}: {}", c.name, c.detail))
            .collect()
    }

    /// Lines describing the reported (soft) checks.
    pub fn report_lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.hard)
            .map(|c| {
                let mark = if c.passed { "agrees" } else { "differs" };
                format!("       ~ {} [{mark}]: {}", c.name, c.detail)
            })
            .collect()
    }
}

/// Title of criterion `id`.
pub fn title(id: usize) -> &'static str {
    match id {
        1 => "Gaussian exactness against N-fold quadrature",
        2 => "Gaussian asymptotics residual decay",
        3 => "Wiener–Hopf identities",
        4 => "spectral coefficients u_ℓ and J moments",
        5 => "ℸ constants by independent routes",
        6 => "edge function 𝔞₀",
        7 => "J closed form against contour definition",
        8 => "equilibrium mass, free energy, baby model",
        9 => "first endpoint corrections by Richardson extraction",
        10 => "expansion consistency",
        11 => "Monte Carlo diagnostic",
        12 => "Mellin asymptotics",
        _ => "unknown criterion",
    }
}

/// Wall-clock budget of criterion `id`, when one is imposed.
pub fn budget_secs(id: usize) -> Option<f64> {
    match id {
        1 => Some(60.0),
        2 => Some(10.0),
        3 => Some(1.0),
        11 => Some(900.0),
        _ => None,
    }
}

/// Runs criterion `id` (1…12).
pub fn run_criterion(id: usize) -> CriterionOutcome {
    let start = Instant::now();
    let result = match id {
        1 => gaussian_exactness(),
        2 => gaussian_asymptotics(),
        3 => wiener_hopf_identities(),
        4 => spectral_coefficients(),
        5 => daleth_constants(),
        6 => edge_function_a0(),
        7 => j_closed_form(),
        8 => equilibrium_checks(),
        9 => endpoint_corrections(),
        10 => expansion_consistency(),
        11 => monte_carlo_diagnostic(),
        12 => mellin_asymptotics(),
        _ => Ok(vec![Check::hard("criterion id", false, format!("no criterion {id}"))]),
    };
    let mut checks = result.unwrap_or_else(|e| vec![Check::hard("evaluation", false, e.to_string())]);
    let elapsed_secs = start.elapsed().as_secs_f64();
    if let Some(budget) = budget_secs(id) {
        checks.push(Check::hard(
            "runtime",
            elapsed_secs < budget,
            format!("{elapsed_secs:.2} s (budget {budget} s)"),
        ));
    }
    let passed = checks.iter().filter(|c| c.hard).all(|c| c.passed);
    CriterionOutcome { id, title: title(id), passed, checks, elapsed_secs }
}

/// Runs all criteria in order, calling `report` after each one.
pub fn run_all(mut report: impl FnMut(&CriterionOutcome)) -> Vec<CriterionOutcome> {
    (1..=CRITERIA)
        .map(|id| {
            let o = run_criterion(id);
            report(&o);
            o
        })
        .collect()
}

fn unit(alpha: f64) -> ModelParams {
    ModelParams::symmetric_unit(alpha)
}

/// `ξ² + 0.05ξ⁴`.
fn quartic() -> Result<Potential> {
    Potential::even_polynomial(vec![0.0, 0.0, 1.0, 0.0, 0.05])
}

fn gaussian_exactness() -> Result<Vec<Check>> {
    let p = unit(0.2);
    let v = Potential::quadratic(1.0, 0.3)?;
    let mut checks = Vec::new();
    for n in [2usize, 3] {
        let exact = gaussian_log_z_exact(&GaussianSpec::new(1.0, 0.3, p, n as u64)?)?;
        let quad = log_z_quadrature(&v, &p, n, None, 1e-10)?;
        checks.push(Check::close(format!("N = {n}: closed form vs quadrature"), quad.log_z, exact, 1e-6));
    }
    Ok(checks)
}

fn gaussian_asymptotics() -> Result<Vec<Check>> {
    let ns = [1_000u64, 10_000, 100_000, 1_000_000];
    let rows = residual_sweep(1.0, 0.0, unit(0.1), &ns)?;
    let residuals: Vec<f64> = rows.iter().map(|r| r.residual).collect();
    let listing = rows
        .iter()
        .map(|r| format!("N={}: {:.6e}", r.n, r.residual))
        .collect::<Vec<_>>()
        .join(", ");
    let decreasing = residuals.windows(2).all(|w| w[1] < w[0]);
    let corrected = rows
        .iter()
        .map(|r| format!("N={}: {:.3e}", r.n, r.corrected_residual))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(vec![
        Check::hard("residual strictly decreasing", decreasing, listing.clone()),
        Check::hard(
            "residual(1e6) < residual(1e3)/3",
            residuals[3] < residuals[0] / 3.0,
            format!("{:.6e} vs {:.6e}", residuals[3], residuals[0] / 3.0),
        ),
        // beyond N = 1e4 the restored residual sits at the rounding floor of |ln Z| ~ 1e10
        Check::soft(
            "residual with the N^α π²ω₁ω₂/(12g) term restored falls 3× from N = 1e3 to 1e4",
            rows[1].corrected_residual < rows[0].corrected_residual / 3.0,
            corrected,
        ),
    ])
}

fn wiener_hopf_identities() -> Result<Vec<Check>> {
    let mut worst = [0.0f64; 2];
    let mut count = 0;
    for params in [unit(0.1), ModelParams::new(0.8, 1.5, 1.0, 0.1)?] {
        let wh = WienerHopfFactors::new(params);
        let strip = 0.95 * wh.kappa0();
        for k in 0..50 {
            let x = -25.0 + 50.0 * (k as f64 + 0.5) / 50.0;
            let y = strip * (0.73 * k as f64 + 0.2).sin();
            let lambda = C64::new(x, y);
            let prod = wh.r_up(lambda)? * wh.r_down(lambda)?;
            worst[0] = worst[0].max((prod / wh.r(lambda)? - 1.0).norm());
            let refl = wh.r_up(-lambda)? * lambda;
            worst[1] = worst[1].max((refl / wh.r_down(lambda)? - 1.0).norm());
            count += 1;
        }
    }
    let mut checks = vec![
        Check::hard(
            format!("R = R↑R↓ on {count} strip points"),
            worst[0] < 1e-10,
            format!("max rel. err {:.3e}", worst[0]),
        ),
        Check::hard(
            format!("R↑(−λ)λ = R↓(λ) on {count} strip points"),
            worst[1] < 1e-10,
            format!("max rel. err {:.3e}", worst[1]),
        ),
    ];
    for params in [unit(0.1), ModelParams::new(0.8, 1.5, 1.0, 0.1)?] {
        let wh = WienerHopfFactors::new(params);
        let want = C64::new(0.0, -params.omega_sum().sqrt());
        let got = wh.r_down(C64::new(0.0, 0.0))?;
        let err = ((got - want) / want).norm();
        checks.push(Check::hard(
            format!("R↓(0) = −i√s at s = {}", params.omega_sum()),
            err < 1e-10,
            format!("got {got}, rel. err {err:.3e}"),
        ));
    }
    Ok(checks)
}

fn spectral_coefficients() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for params in [unit(0.1), ModelParams::new(0.8, 1.5, 1.0, 0.1)?] {
        let t = shared_table(&params);
        let s = params.omega_sum();
        let tag = format!("ω = ({}, {})", params.omega1, params.omega2);
        checks.push(Check::close(format!("{tag}: u_1"), t.u(1)?, 1.0 / (2.0 * PI * params.beta * s), 1e-10));
        for l in [2usize, 4] {
            checks.push(Check::close(format!("{tag}: u_{l}"), t.u(l)?, 0.0, 1e-10));
        }
        for l in 1..=3usize {
            let want = 2.0 * PI * params.beta * factorial(l) * t.u(l)?;
            checks.push(Check::close(format!("{tag}: ∫y^{l} J"), t.j_moment(l)?, want, 1e-7));
        }
    }
    Ok(checks)
}

fn daleth_constants() -> Result<Vec<Check>> {
    let p = unit(0.1);
    let t = shared_table(&p);
    let d00 = t.daleth_sl(0, 0)?;
    let mut checks = vec![Check::close("ℸ_{0,0} = −ln2/(2π²β)", d00.value, -(2f64.ln()) / (2.0 * PI * PI), 1e-6)];
    for (s, l) in [(0usize, 0usize), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
        let d = t.daleth_sl(s, l)?;
        match d.moment {
            Some(m) => checks.push(Check::close(format!("ℸ_{{{s},{l}}} moment vs explicit"), m, d.explicit, 1e-5)),
            None => checks.push(Check::hard(format!("ℸ_{{{s},{l}}} moment vs explicit"), false, "moment route unavailable")),
        }
    }
    for p_ord in 0..=2usize {
        let d = t.daleth_p(p_ord)?;
        let err = (C64::new(d.value.0, d.value.1) - C64::new(d.second.0, d.second.1)).norm();
        checks.push(Check::hard(
            format!("ℸ_{p_ord} two contour expressions"),
            err < 1e-8,
            format!("{:?} vs {:?}, |Δ| = {err:.3e}", d.value, d.second),
        ));
    }
    Ok(checks)
}

fn edge_function_a0() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for params in [unit(0.1), ModelParams::new(0.8, 1.5, 1.0, 0.1)?] {
        let t = shared_table(&params);
        let tag = format!("ω = ({}, {})", params.omega1, params.omega2);
        let mut sup = 0.0f64;
        for i in 0..=200 {
            let x = 0.01 * (1000f64).powf(i as f64 / 200.0);
            sup = sup.max((t.a0(x)? - t.a0_integral_representation(x)?).abs());
        }
        checks.push(Check::hard(
            format!("{tag}: series vs integral on [0.01, 10]"),
            sup < 1e-8,
            format!("sup |Δ| = {sup:.3e} over 201 log-spaced points"),
        ));
        let mut min = f64::INFINITY;
        for i in 1..=500 {
            min = min.min(t.a0(50.0 * i as f64 / 500.0)?);
        }
        for x in [1e-8, 1e-5, 1e-3] {
            min = min.min(t.a0(x)?);
        }
        checks.push(Check::hard(format!("{tag}: positivity on (0, 50]"), min > 0.0, format!("min {min:.3e}")));
        let x = 1e-10;
        let slope = t.a0(x)? / x.sqrt();
        let want = 1.0 / (PI * params.beta * (PI * params.omega_sum()).sqrt());
        checks.push(Check::hard(
            format!("{tag}: small-x slope of √x"),
            (slope / want - 1.0).abs() < 0.01,
            format!("{slope:.10} vs {want:.10}"),
        ));
        let u1 = t.u(1)?;
        let sigma = t.varsigma();
        let mut ratio = 0.0f64;
        for x in [5.0, 10.0, 20.0, 30.0, 40.0, 50.0] {
            ratio = ratio.max((t.a0(x)? - u1).abs() / (-sigma * x / 2.0).exp());
        }
        checks.push(Check::hard(
            format!("{tag}: |𝔞₀(x) − u_1| ≤ e^{{−ςx/2}} for x ∈ [5, 50]"),
            ratio <= 1.0,
            format!("max |𝔞₀ − u_1|·e^{{ςx/2}} = {ratio:.3e}"),
        ));
    }
    Ok(checks)
}

fn j_closed_form() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for params in [unit(0.1), ModelParams::new(0.8, 1.5, 1.0, 0.1)?] {
        let t = shared_table(&params);
        for x in [0.1, 1.0, 5.0] {
            checks.push(Check::close(
                format!("ω = ({}, {}), x = {x}", params.omega1, params.omega2),
                t.j_contour(x)?,
                t.j(x)?,
                1e-8,
            ));
        }
    }
    Ok(checks)
}

fn equilibrium_checks() -> Result<Vec<Check>> {
    let p = unit(0.2);
    let mut checks = Vec::new();
    let potentials = [
        ("ξ²", Potential::quadratic(1.0, 0.0)?),
        ("ξ² + 0.05ξ⁴", quartic()?),
        ("0.5ξ² + 0.25ξ⁴ + 0.1ξ⁶", Potential::even_polynomial(vec![0.0, 0.0, 0.5, 0.0, 0.25, 0.0, 0.1])?),
    ];
    for (name, v) in &potentials {
        let m = EquilibriumDensity::infinite(v, &p)?.mass(1e-12)?;
        checks.push(Check::close(format!("{name}: mass"), m, 1.0, 1e-10));
    }
    let q = ModelParams::new(0.8, 1.3, 0.9, 0.1)?;
    for (name, v, params) in [("ξ², unit", &potentials[0].1, p), ("ξ² + 0.05ξ⁴, ω = (0.8, 1.3), β = 0.9", &potentials[1].1, q)] {
        let f = free_energy_leading(v, &params)?;
        let o = free_energy_oracle(v, &params, 1e-12)?;
        checks.push(Check::close(format!("{name}: free energy closed form vs quadrature"), f, o, 1e-8));
    }
    for qexp in [1.5, 2.0, 3.0] {
        let r = baby_model(qexp, 1.0, &p)?;
        checks.push(Check::close(format!("baby q = {qexp}: mass"), r.mass, 1.0, 1e-10));
        checks.push(Check::close(format!("baby q = {qexp}: oracle at two tolerances"), r.oracle, r.oracle_loose, 1e-7));
        checks.push(Check::soft(
            format!("baby q = {qexp}: stated constant vs oracle"),
            !r.stated_limit_disagrees,
            format!(
                "stated {:.12}, evaluated {:.12}, oracle {:.12}",
                r.limit_stated, r.limit_evaluated, r.oracle
            ),
        ));
    }
    Ok(checks)
}

fn endpoint_corrections() -> Result<Vec<Check>> {
    let p = unit(0.1);
    let v = Potential::quadratic(1.0, 0.0)?;
    let (_, b1) = richardson_first_corrections(&v, &p, 2f64.powi(40), 2f64.powi(60), MAX_SYSTEM_ORDER)?;
    let want = -(2f64.ln()) / PI;
    let rel = (b1 / want - 1.0).abs();
    Ok(vec![Check::hard(
        "b_{N;1} for V = ξ² vs −ln2/π",
        rel < 0.02,
        format!("extracted {b1:.12}, want {want:.12}, rel. err {rel:.3e}"),
    )])
}

fn expansion_consistency() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let p = unit(0.2);
    let n = 1e4;
    let v = quartic()?;
    let s = endpoints_n(&v, &p, n, 2)?;
    let w = w_gn(s.a_n, s.b_n, s.n, &p)?;
    let r = main_expansion(&w, &p, &s)?;
    checks.push(Check::hard(
        "expansion of the matched Gaussian",
        r.total == 0.0,
        format!("total = {:e}", r.total),
    ));
    let vp = |k: usize, x: f64| v.deriv(k + 1, x);
    let one = |k: usize, _x: f64| if k == 0 { 1.0 } else { 0.0 };
    let mut residuals = Vec::new();
    for k in 1..=MAX_SYSTEM_ORDER {
        let s = endpoints_n(&v, &p, n, k)?;
        let x = constraint_xn_expansion(&vp, s.edges(), n, k, &p)?;
        let m = single_integral_is_expansion(&one, &vp, s.edges(), n, k, &p)?;
        checks.push(Check::hard(
            format!("order {k}: (constraint, mass) at the solved endpoints"),
            x.abs() < 1e-12 && (m - 1.0).abs() < 1e-12,
            format!("({x:.3e}, 1 + {:.3e})", m - 1.0),
        ));
        let x4 = constraint_xn_expansion(&vp, s.edges(), n, MAX_SYSTEM_ORDER + 1, &p)?;
        let m4 = single_integral_is_expansion(&one, &vp, s.edges(), n, MAX_SYSTEM_ORDER + 1, &p)?;
        residuals.push(x4.abs().max((m4 - 1.0).abs()));
    }
    checks.push(Check::hard(
        "residual at the next order shrinks from k = 1 to k = 3",
        residuals.windows(2).all(|w| w[1] < w[0]),
        residuals.iter().map(|r| format!("{r:.3e}")).collect::<Vec<_>>().join(" → "),
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst = 0.0f64;
    for _ in 0..12 {
        let c = vec![0.0, 0.0, rng.random_range(0.3..2.0), 0.0, rng.random_range(0.0..0.5), 0.0, rng.random_range(0.0..0.1)];
        let v = Potential::even_polynomial(c)?;
        let s = endpoints_n(&v, &p, n, 1)?;
        let (lhs, rhs) = capricornus0_integration_by_parts(&v, &p, &s)?;
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1.0));
    }
    checks.push(Check::hard(
        "♑₀ integration by parts on 12 random even polynomials",
        worst < 1e-9,
        format!("max rel. |Δ| = {worst:.3e}"),
    ));
    Ok(checks)
}

fn monte_carlo_diagnostic() -> Result<Vec<Check>> {
    let p = unit(0.2);
    let v = quartic()?;
    let settings = McSettings::default();
    let mut checks = Vec::new();

    // hard gate: Monte Carlo against quadrature at N = 3
    let v0 = Potential::quadratic(1.0, 0.0)?;
    let q1 = log_z_quadrature(&v, &p, 3, None, 1e-10)?;
    let q0 = log_z_quadrature(&v0, &p, 3, None, 1e-10)?;
    let quad = q1.log_z - q0.log_z;
    let mc = log_z_ratio_mc(&v, &v0, &p, 3, &settings)?;
    let sigma = mc.error_estimate.hypot(q1.error_estimate + q0.error_estimate);
    checks.push(Check::hard(
        "N = 3: Monte Carlo vs quadrature within 3σ",
        (mc.log_z - quad).abs() < 3.0 * sigma,
        format!("MC {:.8} ± {:.2e}, quadrature {quad:.10}", mc.log_z, mc.error_estimate),
    ));

    // soft gate: Monte Carlo against the truncated expansion at N = 12
    let n = 12usize;
    let support = endpoints_n(&v, &p, n as f64, MAX_SYSTEM_ORDER)?;
    let w = w_gn(support.a_n, support.b_n, support.n, &p)?;
    let expansion = main_expansion(&v, &p, &support)?.total;
    let mc = log_z_ratio_mc(&v, &w, &p, n, &settings)?;
    let same_sign = mc.log_z.signum() == expansion.signum();
    let ratio = expansion / mc.log_z;
    let within = (mc.log_z - expansion).abs() <= 3.0 * mc.error_estimate || (0.5..=2.0).contains(&ratio);
    checks.push(Check::soft(
        "N = 12: Monte Carlo vs truncated expansion",
        same_sign && within,
        format!("MC {:.6} ± {:.2e}, expansion {expansion:.6}", mc.log_z, mc.error_estimate),
    ));
    Ok(checks)
}

fn mellin_asymptotics() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (r, a) in [(1usize, 1.0), (0, 0.5)] {
        let res = |tau: f64| -> Result<f64> {
            let m = mellin_m_log(r, a, tau)?;
            Ok((m.direct - m.asymptotic).abs())
        };
        let (r2, r3) = (res(1e-2)?, res(1e-3)?);
        checks.push(Check::hard(
            format!("(r, a) = ({r}, {a}): residual(1e−3) < residual(1e−2)/3"),
            r3 < r2 / 3.0,
            format!("{r3:.3e} vs {r2:.3e}"),
        ));
    }
    Ok(checks)
}
