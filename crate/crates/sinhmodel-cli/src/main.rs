//! `sinhmodel`: command-line front end of the sinhmodel library.
//!
//! Every subcommand prints (or writes to `--out`) a JSON object holding the
//! echoed configuration under `config` next to its results; `density` writes
//! a CSV grid whose first line is a `# config` comment. Exit codes: 0 on
//! success, 2 on invalid input, 3 on numerical failure; `selftest` exits 1
//! when a criterion fails.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use sinhmodel::acceptance;
use sinhmodel::boundary_functions::{shared_table, GIMEL_MAX};
use sinhmodel::equilibrium::{endpoints_infinite, endpoints_n, EquilibriumDensity, MAX_SYSTEM_ORDER};
use sinhmodel::expansion::main_expansion_with_reference;
use sinhmodel::gaussian_exact::{gaussian_log_z_asymptotic, gaussian_log_z_exact, residual_sweep, w_gn, GaussianSpec};
use sinhmodel::model_core::PotentialSpec;
use sinhmodel::reference_oracle::{log_z_quadrature, log_z_ratio_mc, McSettings};
use sinhmodel::{Error, ModelParams, Potential};

/// Numerical toolkit for the sinh-interaction particle model.
#[derive(Parser, Debug)]
#[command(name = "sinhmodel", version, about)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by all subcommands.
#[derive(Args, Debug, Clone)]
struct Common {
    /// First interaction frequency ω₁ > 0.
    #[arg(long, global = true, default_value_t = 1.0)]
    omega1: f64,
    /// Second interaction frequency ω₂ > 0.
    #[arg(long, global = true, default_value_t = 1.0)]
    omega2: f64,
    /// Inverse temperature β > 0.
    #[arg(long, global = true, default_value_t = 1.0)]
    beta: f64,
    /// Scaling exponent 0 < α < 1.
    #[arg(long, global = true, default_value_t = 0.1)]
    alpha: f64,
    /// Particle number (scientific notation accepted, e.g. 1e4).
    #[arg(long = "N", global = true, value_parser = parse_count)]
    n: Option<f64>,
    /// Potential as a JSON file: {"type":"quadratic","g":..,"t":..} or
    /// {"type":"even_poly","coeffs":[..]}. Defaults to V(ξ) = ξ².
    #[arg(long, global = true)]
    potential: Option<PathBuf>,
    /// Output file (standard output when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed of the Monte Carlo oracle.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Relative tolerance of the quadratures exposed to the user.
    #[arg(long = "rel-tol", global = true, default_value_t = 1e-10)]
    rel_tol: f64,
    /// Order k of the truncated endpoint system (1…3).
    #[arg(long, global = true, default_value_t = MAX_SYSTEM_ORDER)]
    order: usize,
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// Spectral and edge constants: u_ℓ, ℸ_p, ℸ_{s,ℓ}, ℷ_ℓ, ℵ₀ and ς.
    Constants,
    /// Truncated expansion of ln(Z_N[V]/Z_N[W_{G;N}]) and the resulting ln Z_N[V].
    Expand {
        /// Reference potential replacing the matched Gaussian (JSON file);
        /// must differ from it by a constant.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Exact and asymptotic ln Z_N for a quadratic potential at β = 1.
    Gaussian {
        /// Emit the exact value at --N.
        #[arg(long)]
        exact: bool,
        /// Emit the asymptotic expansion at --N.
        #[arg(long)]
        asymptotic: bool,
        /// Comma-separated particle numbers, e.g. 1e3,1e4,1e5,1e6.
        #[arg(long = "residual-sweep", value_delimiter = ',', value_parser = parse_integer_count)]
        residual_sweep: Option<Vec<u64>>,
    },
    /// CSV grid of the limiting and finite-N equilibrium densities.
    Density {
        /// Number of grid points.
        #[arg(long, default_value_t = 201)]
        grid: usize,
    },
    /// Endpoints of the equilibrium support at N = ∞ and at --N.
    Endpoints,
    /// Brute-force ln Z_N by quadrature (N ≤ 4) or a Monte Carlo ratio (N ≤ 16).
    #[command(group(ArgGroup::new("method").required(true).args(["quad", "mc"])))]
    Oracle {
        /// Nested adaptive quadrature of ln Z_N[V].
        #[arg(long)]
        quad: bool,
        /// Thermodynamic integration of ln(Z_N[V]/Z_N[V₀]).
        #[arg(long)]
        mc: bool,
        /// Retained sweeps per chain and node (Monte Carlo).
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        /// Independent chains per node (Monte Carlo).
        #[arg(long, default_value_t = 4)]
        chains: usize,
        /// Gauss–Legendre nodes in t (Monte Carlo).
        #[arg(long = "t-nodes", default_value_t = 8)]
        t_nodes: usize,
        /// Reference potential V₀ as a JSON file (Monte Carlo); defaults to
        /// the matched Gaussian W_{G;N}.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Box half-width (quadrature); chosen automatically when absent.
        #[arg(long = "half-width")]
        half_width: Option<f64>,
    },
    /// Runs the acceptance criteria and prints a pass/fail table.
    Selftest {
        /// Comma-separated subset of criteria (default: all).
        #[arg(long, value_delimiter = ',')]
        criteria: Option<Vec<usize>>,
    },
}

/// Failure of a command, mapped onto the exit code.
#[derive(Debug)]
enum CliError {
    /// Invalid input (exit 2).
    Input(String),
    /// Library failure (exit 2 or 3 depending on its kind).
    Library(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Library(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Library(e) if e.is_validation() => 2,
            CliError::Library(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Library(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn parse_count(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: {s}"))?;
    if !(v >= 1.0 && v.is_finite()) {
        return Err(format!("particle number must be a finite value ≥ 1 (got {s})"));
    }
    Ok(v)
}

fn parse_integer_count(s: &str) -> std::result::Result<u64, String> {
    let v = parse_count(s)?;
    if v.fract() != 0.0 || v > 9.007_199_254_740_992e15 {
        return Err(format!("particle number must be an integer (got {s})"));
    }
    Ok(v as u64)
}

/// Validated state shared by the commands.
struct Context {
    common: Common,
    params: ModelParams,
    potential: Potential,
    potential_spec: PotentialSpec,
}

fn read_potential(path: &Path) -> CliResult<(Potential, PotentialSpec)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let spec: PotentialSpec =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((Potential::from_spec(&spec)?, spec))
}

impl Context {
    fn new(common: Common) -> CliResult<Self> {
        let params = ModelParams::new(common.omega1, common.omega2, common.beta, common.alpha)?;
        if !(common.rel_tol > 0.0 && common.rel_tol < 1e-2) {
            return Err(CliError::Input(format!("--rel-tol must lie in (0, 1e-2) (got {})", common.rel_tol)));
        }
        if !(1..=MAX_SYSTEM_ORDER).contains(&common.order) {
            return Err(CliError::Input(format!("--order must lie in 1..={MAX_SYSTEM_ORDER} (got {})", common.order)));
        }
        let (potential, potential_spec) = match &common.potential {
            Some(p) => read_potential(p)?,
            None => {
                let spec = PotentialSpec::Quadratic { g: 1.0, t: 0.0 };
                (Potential::from_spec(&spec)?, spec)
            }
        };
        Ok(Self { common, params, potential, potential_spec })
    }

    fn n(&self) -> CliResult<f64> {
        self.common.n.ok_or_else(|| CliError::Input("--N is required for this subcommand".into()))
    }

    fn n_integer(&self) -> CliResult<usize> {
        let n = self.n()?;
        if n.fract() != 0.0 {
            return Err(CliError::Input(format!("--N must be an integer here (got {n})")));
        }
        Ok(n as usize)
    }

    /// The echoed configuration.
    fn config(&self, command: &str, options: Value) -> Value {
        let c = &self.common;
        json!({
            "command": command,
            "omega1": c.omega1,
            "omega2": c.omega2,
            "beta": c.beta,
            "alpha": c.alpha,
            "N": c.n,
            "potential": serde_json::to_value(&self.potential_spec).unwrap_or(Value::Null),
            "potential_path": c.potential.as_ref().map(|p| p.display().to_string()),
            "out": c.out.as_ref().map(|p| p.display().to_string()),
            "seed": c.seed,
            "rel_tol": c.rel_tol,
            "order": c.order,
            "options": options,
        })
    }

    fn emit(&self, config: Value, fields: Value) -> CliResult<()> {
        let mut obj = Map::new();
        obj.insert("config".into(), config);
        if let Value::Object(m) = fields {
            obj.extend(m);
        }
        output::write_json(self.common.out.as_deref(), &Value::Object(obj))
            .map_err(|e| CliError::Input(format!("cannot write output: {e}")))
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

fn cmd_constants(ctx: &Context) -> CliResult<()> {
    let table = shared_table(&ctx.params);
    let mut fields = Map::new();
    let u = table.u_coeffs(6)?;
    for (i, v) in u.iter().enumerate() {
        fields.insert(format!("u_{}", i + 1), json!(v));
    }
    fields.insert("u".into(), json!(u));
    let daleth_p: Vec<Value> = (0..=3).map(|p| table.daleth_p(p).map(|d| to_value(&d))).collect::<Result<_, _>>()?;
    fields.insert("daleth_p".into(), Value::Array(daleth_p));
    let mut daleth_sl = Vec::new();
    for total in 0..=2usize {
        for s in 0..=total {
            let d = table.daleth_sl(s, total - s)?;
            fields.insert(format!("daleth_{}{}", s, total - s), json!(d.value));
            daleth_sl.push(to_value(&d));
        }
    }
    fields.insert("daleth_sl".into(), Value::Array(daleth_sl));
    let gimel: Vec<f64> = (0..=GIMEL_MAX).map(|k| table.gimel(k)).collect::<Result<_, _>>()?;
    fields.insert("gimel".into(), json!(gimel));
    let aleph0 = table.aleph0()?;
    fields.insert("aleph0".into(), json!(aleph0.value));
    fields.insert("aleph0_alternative".into(), json!(aleph0.alt_value));
    fields.insert("aleph0_report".into(), to_value(&aleph0));
    fields.insert("varsigma".into(), json!(table.varsigma()));
    ctx.emit(ctx.config("constants", json!({})), Value::Object(fields))
}

fn cmd_expand(ctx: &Context, reference: Option<&Path>) -> CliResult<()> {
    let n = ctx.n()?;
    let support = endpoints_n(&ctx.potential, &ctx.params, n, ctx.common.order)?;
    let (w, reference_spec) = match reference {
        Some(p) => {
            let (w, spec) = read_potential(p)?;
            (w, to_value(&spec))
        }
        None => (w_gn(support.a_n, support.b_n, support.n, &ctx.params)?, Value::Null),
    };
    let report = main_expansion_with_reference(&ctx.potential, &w, &ctx.params, &support)?;
    let config = ctx.config("expand", json!({ "reference": reference_spec }));
    ctx.emit(config, to_value(&report))
}

fn cmd_gaussian(ctx: &Context, exact: bool, asymptotic: bool, sweep: Option<&[u64]>) -> CliResult<()> {
    let (g, t) = ctx
        .potential
        .as_quadratic()
        .ok_or_else(|| CliError::Input("gaussian needs a quadratic potential".into()))?;
    let mut fields = Map::new();
    let want_point = exact || asymptotic || sweep.is_none();
    if want_point {
        let n = ctx.n_integer()? as u64;
        let spec = GaussianSpec::new(g, t, ctx.params, n)?;
        if exact || !asymptotic {
            fields.insert("exact".into(), json!(gaussian_log_z_exact(&spec)?));
        }
        if asymptotic || !exact {
            fields.insert("asymptotic".into(), to_value(&gaussian_log_z_asymptotic(&spec)?));
        }
    }
    if let Some(ns) = sweep {
        fields.insert("rows".into(), to_value(&residual_sweep(g, t, ctx.params, ns)?));
    }
    let config = ctx.config(
        "gaussian",
        json!({ "exact": exact, "asymptotic": asymptotic, "residual_sweep": sweep }),
    );
    ctx.emit(config, Value::Object(fields))
}

fn cmd_density(ctx: &Context, grid: usize) -> CliResult<()> {
    if grid < 2 {
        return Err(CliError::Input(format!("--grid needs at least 2 points (got {grid})")));
    }
    let n = ctx.n()?;
    let support = endpoints_n(&ctx.potential, &ctx.params, n, ctx.common.order)?;
    let infinite = EquilibriumDensity::infinite(&ctx.potential, &ctx.params)?;
    let finite = EquilibriumDensity::finite(&ctx.potential, &ctx.params, support)?;
    let lo = support.a.min(support.a_n);
    let hi = support.b.max(support.b_n);
    let rows = (0..grid)
        .map(|i| {
            let xi = lo + (hi - lo) * i as f64 / (grid - 1) as f64;
            Ok(vec![xi, infinite.density(xi)?, finite.density(xi)?])
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let config = ctx.config("density", json!({ "grid": grid }));
    output::write_csv(ctx.common.out.as_deref(), &config, &["xi", "rho_inf", "rho_N"], &rows)
        .map_err(|e| CliError::Input(format!("cannot write output: {e}")))
}

fn cmd_endpoints(ctx: &Context) -> CliResult<()> {
    let (a, b) = endpoints_infinite(&ctx.potential, &ctx.params)?;
    let mut fields = json!({ "a": a, "b": b, "a_N": null, "b_N": null, "a_N1": null, "b_N1": null });
    if let Some(n) = ctx.common.n {
        let s = endpoints_n(&ctx.potential, &ctx.params, n, ctx.common.order)?;
        fields = json!({
            "a": s.a,
            "b": s.b,
            "a_N": s.a_n,
            "b_N": s.b_n,
            "a_N1": s.system_first_corrections.0,
            "b_N1": s.system_first_corrections.1,
            "first_corrections_closed_form": [s.first_corrections.0, s.first_corrections.1],
            "x_bar": s.x_bar(&ctx.params),
        });
    }
    ctx.emit(ctx.config("endpoints", json!({})), fields)
}

struct OracleOptions<'a> {
    quad: bool,
    samples: usize,
    chains: usize,
    t_nodes: usize,
    reference: Option<&'a Path>,
    half_width: Option<f64>,
}

fn cmd_oracle(ctx: &Context, o: OracleOptions) -> CliResult<()> {
    let n = ctx.n_integer()?;
    let (result, reference_spec) = if o.quad {
        (log_z_quadrature(&ctx.potential, &ctx.params, n, o.half_width, ctx.common.rel_tol)?, Value::Null)
    } else {
        let (v0, spec) = match o.reference {
            Some(p) => {
                let (v0, spec) = read_potential(p)?;
                (v0, to_value(&spec))
            }
            None => {
                let s = endpoints_n(&ctx.potential, &ctx.params, n as f64, ctx.common.order)?;
                let w = w_gn(s.a_n, s.b_n, s.n, &ctx.params)?;
                let spec = w.to_spec().map(|s| to_value(&s)).unwrap_or(Value::Null);
                (w, spec)
            }
        };
        let settings = McSettings { samples: o.samples, chains: o.chains, t_nodes: o.t_nodes, seed: ctx.common.seed };
        (log_z_ratio_mc(&ctx.potential, &v0, &ctx.params, n, &settings)?, spec)
    };
    let config = ctx.config(
        "oracle",
        json!({
            "method": if o.quad { "quadrature" } else { "mc" },
            "samples": o.samples,
            "chains": o.chains,
            "t_nodes": o.t_nodes,
            "half_width": o.half_width,
            "reference": reference_spec,
        }),
    );
    ctx.emit(config, to_value(&result))
}

/// Runs the acceptance criteria; returns whether all passed.
fn cmd_selftest(ctx: &Context, criteria: Option<&[usize]>) -> CliResult<bool> {
    let ids: Vec<usize> = criteria.map(<[usize]>::to_vec).unwrap_or_else(|| (1..=acceptance::CRITERIA).collect());
    if let Some(bad) = ids.iter().find(|&&i| !(1..=acceptance::CRITERIA).contains(&i)) {
        return Err(CliError::Input(format!("no criterion {bad} (valid: 1..={})", acceptance::CRITERIA)));
    }
    let mut outcomes = Vec::new();
    for id in ids {
        let o = acceptance::run_criterion(id);
        eprintln!("{}", o.summary_line());
        for line in o.failure_lines().into_iter().chain(o.report_lines()) {
            eprintln!("{line}");
        }
        outcomes.push(o);
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    let config = ctx.config("selftest", json!({ "criteria": criteria }));
    let fields = json!({
        "passed": passed,
        "failed": outcomes.len() - passed,
        "criteria": to_value(&outcomes),
    });
    ctx.emit(config, fields)?;
    Ok(passed == outcomes.len())
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    let ctx = Context::new(cli.common)?;
    match cli.command {
        Command::Constants => cmd_constants(&ctx)?,
        Command::Expand { reference } => cmd_expand(&ctx, reference.as_deref())?,
        Command::Gaussian { exact, asymptotic, residual_sweep } => {
            cmd_gaussian(&ctx, exact, asymptotic, residual_sweep.as_deref())?
        }
        Command::Density { grid } => cmd_density(&ctx, grid)?,
        Command::Endpoints => cmd_endpoints(&ctx)?,
        Command::Oracle { quad, mc: _, samples, chains, t_nodes, reference, half_width } => cmd_oracle(
            &ctx,
            OracleOptions { quad, samples, chains, t_nodes, reference: reference.as_deref(), half_width },
        )?,
        Command::Selftest { criteria } => {
            if !cmd_selftest(&ctx, criteria.as_deref())? {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("sinhmodel: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
