//! Brute-force values of `ln Z_N[V]` at desk scale.
//!
//! Two independent routes are provided:
//!
//! * [`log_z_quadrature`] — nested adaptive quadrature of the N-fold
//!   integral (N ≤ 4) over the ordered simplex of a box, evaluated in log
//!   space with a global shift by the log-maximum of the integrand;
//! * [`log_z_ratio_mc`] — thermodynamic integration of
//!   `∂_t ln Z_N[V_t] = −N^{1+α}⟨Σ_a ∂_tV_t(λ_a)⟩` along
//!   `V_t = (1−t)V₀ + tV₁`, with Metropolis sampling at Gauss–Legendre nodes
//!   (N ≤ 16).
//!
//! Neither route uses any structure of the model beyond the definition of
//! the integrand.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::equilibrium::endpoints_infinite;
use crate::error::{Error, Result};
use crate::gaussian_exact::ln_gamma;
use crate::model_core::{ln_sinh, ModelParams, Potential};
use crate::quadrature::{gauss_legendre, integrate_interval, QuadratureSpec};
use crate::with_thread_cap;

/// Largest particle number of the quadrature oracle.
pub const QUADRATURE_MAX_N: usize = 4;

/// Largest particle number of the Monte Carlo oracle.
pub const MC_MAX_N: usize = 16;

/// `ln(1e−16)`: the boundary threshold of the integration box.
const LN_BOUNDARY_THRESHOLD: f64 = -36.841_361_487_904_734;

/// Which oracle produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMethod {
    /// Nested adaptive quadrature.
    Quadrature,
    /// Monte Carlo thermodynamic integration.
    Mc,
}

/// Grid data of the quadrature oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureData {
    /// Box centre.
    pub center: f64,
    /// Box half-width `L`.
    pub half_width: f64,
    /// Log-maximum of the integrand used as the global shift.
    pub log_peak: f64,
    /// Configuration attaining the log-maximum (ordered).
    pub peak: Vec<f64>,
    /// Largest log-integrand on the box boundary, relative to the peak.
    pub boundary_log_ratio: f64,
}

/// Sampling data of the Monte Carlo oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McData {
    /// Gauss–Legendre nodes in `t ∈ [0, 1]`.
    pub t_nodes: Vec<f64>,
    /// Gauss–Legendre weights.
    pub t_weights: Vec<f64>,
    /// `−N^{1+α}⟨Σ_a (V₁−V₀)(λ_a)⟩` at each node.
    pub derivative: Vec<f64>,
    /// Bootstrap standard error of each node value.
    pub derivative_stderr: Vec<f64>,
    /// Mean acceptance rate after adaptation at each node.
    pub acceptance: Vec<f64>,
    /// Retained sweeps per chain and node.
    pub samples: usize,
    /// Independent chains per node.
    pub chains: usize,
    /// Base seed.
    pub seed: u64,
}

/// Value of an oracle with its uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    /// `ln Z_N[V]` (quadrature) or `ln(Z_N[V₁]/Z_N[V₀])` (Monte Carlo).
    #[serde(rename = "logZ")]
    pub log_z: f64,
    /// Error estimate (one standard error for Monte Carlo).
    pub error_estimate: f64,
    /// Producing method.
    pub method: OracleMethod,
    /// Particle number.
    #[serde(rename = "N")]
    pub n: usize,
    /// Quadrature details.
    pub grid: Option<QuadratureData>,
    /// Monte Carlo details.
    pub samples: Option<McData>,
}

/// The log-integrand `β Σ_{a<b} Σ_p ln|sinh(πω_pN^α(λ_a−λ_b))| − N^{1+α} Σ_a V(λ_a)`.
struct LogIntegrand<'a> {
    v: &'a (dyn Fn(f64) -> f64 + Sync),
    beta: f64,
    c1: f64,
    c2: f64,
    confinement: f64,
}

impl<'a> LogIntegrand<'a> {
    fn new(v: &'a (dyn Fn(f64) -> f64 + Sync), params: &ModelParams, n: usize) -> Self {
        let na = params.n_alpha(n as f64);
        Self {
            v,
            beta: params.beta,
            c1: PI * params.omega1 * na,
            c2: PI * params.omega2 * na,
            confinement: (n as f64).powf(1.0 + params.alpha),
        }
    }

    fn pair(&self, d: f64) -> f64 {
        let d = d.abs();
        if d == 0.0 {
            return f64::NEG_INFINITY;
        }
        self.beta * (ln_sinh(self.c1 * d) + ln_sinh(self.c2 * d))
    }

    fn single(&self, x: f64) -> f64 {
        -self.confinement * (self.v)(x)
    }

    /// Contribution of particle `x` given the others.
    fn particle(&self, x: f64, others: &[f64]) -> f64 {
        self.single(x) + others.iter().map(|&y| self.pair(x - y)).sum::<f64>()
    }

    fn total(&self, xs: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            s += self.single(x);
            for &y in &xs[..i] {
                s += self.pair(x - y);
            }
        }
        s
    }
}

/// Golden-section maximisation of a concave function on `[lo, hi]`.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-13 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Coordinate ascent of the (concave on the ordered simplex) log-integrand.
fn find_peak(li: &LogIntegrand, start: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut xs = start.to_vec();
    let n = xs.len();
    for _ in 0..400 {
        let before = li.total(&xs);
        for i in 0..n {
            let left = if i == 0 { lo } else { xs[i - 1] };
            let right = if i + 1 == n { hi } else { xs[i + 1] };
            let others: Vec<f64> = xs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &y)| y).collect();
            xs[i] = golden_max(|x| li.particle(x, &others), left, right);
        }
        let after = li.total(&xs);
        if (after - before).abs() <= 1e-14 * after.abs().max(1.0) {
            break;
        }
    }
    xs
}

/// Largest log-integrand over configurations with one particle pinned to
/// the box boundary, others at the peak.
fn boundary_log(li: &LogIntegrand, peak: &[f64], lo: f64, hi: f64) -> f64 {
    let n = peak.len();
    let mut worst = f64::NEG_INFINITY;
    for (i, edge) in [(0, lo), (n - 1, hi)] {
        let mut xs = peak.to_vec();
        xs[i] = edge;
        worst = worst.max(li.total(&xs));
    }
    worst
}

/// Offsets, in units of the peak width, of the breakpoints placed around a
/// peak coordinate when the integration range is much wider than the peak.
const PEAK_BREAKS: [f64; 9] = [-16.0, -8.0, -4.0, -2.0, 0.0, 2.0, 4.0, 8.0, 16.0];

/// Where the integrand of one coordinate is concentrated.
#[derive(Clone, Copy)]
struct PeakHint {
    centre: f64,
    width: f64,
}

impl PeakHint {
    /// Sub-interval edges of `[lo, hi]`: the endpoints alone when the range is
    /// comparable to the peak width, otherwise refined around the peak so
    /// that a narrow bump cannot slip between the quadrature nodes.
    fn edges(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut e = vec![lo];
        if hi - lo > 64.0 * self.width {
            e.extend(PEAK_BREAKS.iter().map(|k| self.centre + k * self.width).filter(|&x| x > lo && x < hi));
        }
        e.push(hi);
        e
    }
}

/// Adaptive integral over `[lo, hi]` split at the edges of `hint`; a
/// non-converged piece contributes its best estimate.
fn integrate_hinted(f: impl Fn(f64) -> f64, lo: f64, hi: f64, hint: PeakHint, spec: &QuadratureSpec) -> f64 {
    hint.edges(lo, hi)
        .windows(2)
        .map(|w| match integrate_interval(&f, w[0], w[1], spec) {
            Ok(e) => e.value,
            Err(Error::NonConvergence { value, .. }) => value,
            Err(_) => f64::NAN,
        })
        .sum()
}

/// Nested integral over `x_k ∈ [prev, hi]` of `exp(partial + increments − shift)`.
#[allow(clippy::too_many_arguments)]
fn nested(
    li: &LogIntegrand,
    xs: [f64; QUADRATURE_MAX_N],
    k: usize,
    n: usize,
    partial: f64,
    lo: f64,
    hi: f64,
    shift: f64,
    hints: &[PeakHint],
    spec: &QuadratureSpec,
) -> f64 {
    let inner_spec = spec.scaled(0.3);
    let f = |x: f64| {
        let mut ys = xs;
        ys[k] = x;
        let p = partial + li.particle(x, &xs[..k]);
        if k + 1 == n {
            let e = p - shift;
            if e < -745.0 {
                0.0
            } else {
                e.exp()
            }
        } else {
            nested(li, ys, k + 1, n, p, x, hi, shift, hints, &inner_spec)
        }
    };
    integrate_hinted(f, lo, hi, hints[k], spec)
}

/// `ln Z_N[V]` by nested adaptive quadrature, `N ≤ 4`.
///
/// The box `[c − L, c + L]` is centred on the limiting support; when
/// `half_width` is `None`, `L = (b−a)/2 + 10/√(N^{1+α}·min V″)` and is
/// enlarged until the integrand on the boundary is below `1e−16` of its
/// peak. An explicit `half_width` that fails this test is an error.
pub fn log_z_quadrature(
    v: &Potential,
    params: &ModelParams,
    n: usize,
    half_width: Option<f64>,
    rel_tol: f64,
) -> Result<OracleResult> {
    if n == 0 || n > QUADRATURE_MAX_N {
        return Err(Error::Validation(format!("quadrature oracle supports 1 ≤ N ≤ {QUADRATURE_MAX_N} (got {n})")));
    }
    if !(rel_tol > 0.0 && rel_tol < 1e-2) {
        return Err(Error::Validation(format!("rel_tol must lie in (0, 1e-2) (got {rel_tol})")));
    }
    let (a, b) = endpoints_infinite(v, params)?;
    let center = 0.5 * (a + b);
    let confinement = (n as f64).powf(1.0 + params.alpha);
    let min_v2 = (0..=64).map(|i| v.deriv(2, a + (b - a) * i as f64 / 64.0)).fold(f64::INFINITY, f64::min);
    let vf = |x: f64| v.eval(x);
    let li = LogIntegrand::new(&vf, params, n);
    let mut l = half_width.unwrap_or(0.5 * (b - a) + 10.0 / (confinement * min_v2).sqrt());
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::Validation(format!("box half-width must be positive (got {l})")));
    }
    let (peak, log_peak, boundary, lo, hi) = loop {
        let (lo, hi) = (center - l, center + l);
        let start: Vec<f64> = (0..n).map(|i| a + (b - a) * (i as f64 + 0.5) / n as f64).collect();
        let peak = find_peak(&li, &start, lo, hi);
        let log_peak = li.total(&peak);
        let boundary = boundary_log(&li, &peak, lo, hi) - log_peak;
        if boundary < LN_BOUNDARY_THRESHOLD {
            break (peak, log_peak, boundary, lo, hi);
        }
        if half_width.is_some() {
            return Err(Error::Numerical(format!(
                "box half-width {l} too small: boundary integrand e^{boundary:.2} of the peak"
            )));
        }
        l *= 1.5;
        if l > 1e6 {
            return Err(Error::Numerical("could not find a box enclosing the measure".into()));
        }
    };
    let spec = QuadratureSpec { rel_tol, abs_tol: 1e-300, ..QuadratureSpec::default() };
    let width = 1.0 / (confinement * min_v2).sqrt();
    let hints: Vec<PeakHint> = peak.iter().map(|&centre| PeakHint { centre, width }).collect();
    // Split the outer variable into panels integrated in parallel.
    let panels = 32;
    let mut edges: Vec<f64> = (0..=panels).map(|i| lo + (hi - lo) * i as f64 / panels as f64).collect();
    edges.extend(hints[0].edges(lo, hi));
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let pieces: Vec<Result<(f64, f64)>> = with_thread_cap(|| {
        edges
            .par_windows(2)
            .map(|w| {
                let outer = |x: f64| {
                    let mut xs = [0.0; QUADRATURE_MAX_N];
                    xs[0] = x;
                    let p = li.particle(x, &[]);
                    if n == 1 {
                        let e = p - log_peak;
                        return if e < -745.0 { 0.0 } else { e.exp() };
                    }
                    nested(&li, xs, 1, n, p, x, hi, log_peak, &hints, &spec.scaled(0.3))
                };
                let e = integrate_interval(outer, w[0], w[1], &QuadratureSpec { abs_tol: 1e-30, ..spec })?;
                Ok((e.value, e.error))
            })
            .collect()
    });
    let mut total = 0.0;
    let mut err = 0.0;
    for p in pieces {
        let (v, e) = p?;
        total += v;
        err += e;
    }
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Numerical(format!("quadrature oracle produced {total}")));
    }
    let ln_fact = ln_gamma(n as f64 + 1.0);
    let log_z = log_peak + ln_fact + total.ln();
    // the inner levels are solved to a tighter tolerance than the outer one
    let error_estimate = (err / total).max(rel_tol * 1e-3);
    Ok(OracleResult {
        log_z,
        error_estimate,
        method: OracleMethod::Quadrature,
        n,
        grid: Some(QuadratureData { center, half_width: l, log_peak, peak, boundary_log_ratio: boundary }),
        samples: None,
    })
}

/// Settings of the Monte Carlo oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McSettings {
    /// Retained sweeps per chain and node (a further third of this is
    /// spent on burn-in, i.e. 25% of all sweeps).
    pub samples: usize,
    /// Independent chains per node.
    pub chains: usize,
    /// Gauss–Legendre nodes in `t`.
    pub t_nodes: usize,
    /// Base seed of the generators.
    pub seed: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self { samples: 20_000, chains: 4, t_nodes: 8, seed: 1 }
    }
}

/// Output of one chain: retained observable means per batch, acceptance.
struct ChainOutput {
    batch_means: Vec<f64>,
    acceptance: f64,
}

const BATCHES: usize = 20;
const BOOTSTRAP_RESAMPLES: usize = 400;

#[allow(clippy::too_many_arguments)]
fn run_chain(
    v0: &Potential,
    v1: &Potential,
    t: f64,
    params: &ModelParams,
    n: usize,
    start: &[f64],
    settings: &McSettings,
    stream: u64,
) -> ChainOutput {
    let vt = |x: f64| (1.0 - t) * v0.eval(x) + t * v1.eval(x);
    let li = LogIntegrand::new(&vt, params, n);
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    rng.set_stream(stream);
    let mut xs = start.to_vec();
    let confinement = li.confinement;
    let curvature = (0..n).map(|i| v0.deriv(2, xs[i]).abs().max(v1.deriv(2, xs[i]).abs())).fold(0.0, f64::max);
    let mut step = 1.0 / (confinement * curvature.max(1e-6)).sqrt();
    let burn = settings.samples / 3;
    let mut accepted = 0usize;
    let mut proposed = 0usize;
    let mut window_acc = 0usize;
    let mut window_prop = 0usize;
    let batch_len = (settings.samples / BATCHES).max(1);
    let mut batch_means = Vec::with_capacity(BATCHES);
    let mut batch_sum = 0.0;
    let mut batch_count = 0usize;
    for sweep in 0..(burn + settings.samples) {
        for i in 0..n {
            let old = xs[i];
            let z: f64 = StandardNormal.sample(&mut rng);
            let new = old + step * z;
            let others: Vec<f64> = xs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &y)| y).collect();
            let delta = li.particle(new, &others) - li.particle(old, &others);
            let u: f64 = rng.random();
            let ok = delta >= 0.0 || u.ln() < delta;
            if ok {
                xs[i] = new;
            }
            if sweep < burn {
                window_prop += 1;
                window_acc += ok as usize;
            } else {
                proposed += 1;
                accepted += ok as usize;
            }
        }
        if sweep < burn {
            if window_prop >= 50 * n {
                let rate = window_acc as f64 / window_prop as f64;
                step *= ((rate - 0.3) * 2.0).exp();
                window_acc = 0;
                window_prop = 0;
            }
            continue;
        }
        let obs: f64 = xs.iter().map(|&x| v1.eval(x) - v0.eval(x)).sum();
        batch_sum += obs;
        batch_count += 1;
        if batch_count == batch_len {
            batch_means.push(batch_sum / batch_len as f64);
            batch_sum = 0.0;
            batch_count = 0;
        }
    }
    ChainOutput { batch_means, acceptance: accepted as f64 / proposed.max(1) as f64 }
}

/// Bootstrap standard error of the mean of `values`.
fn bootstrap_stderr(values: &[f64], seed: u64) -> f64 {
    let m = values.len();
    if m < 2 {
        return f64::INFINITY;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_b007);
    let means: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| (0..m).map(|_| values[rng.random_range(0..m)]).sum::<f64>() / m as f64)
        .collect();
    let mu = means.iter().sum::<f64>() / means.len() as f64;
    (means.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (means.len() - 1) as f64).sqrt()
}

/// `ln(Z_N[V₁]/Z_N[V₀])` by thermodynamic integration with Metropolis
/// sampling, `N ≤ 16`.
///
/// Results are bit-reproducible for fixed settings: each chain owns a
/// ChaCha8 stream derived from the seed, node and chain index.
pub fn log_z_ratio_mc(
    v1: &Potential,
    v0: &Potential,
    params: &ModelParams,
    n: usize,
    settings: &McSettings,
) -> Result<OracleResult> {
    if n == 0 || n > MC_MAX_N {
        return Err(Error::Validation(format!("Monte Carlo oracle supports 1 ≤ N ≤ {MC_MAX_N} (got {n})")));
    }
    if settings.samples < 10 * BATCHES || settings.chains == 0 || settings.t_nodes == 0 {
        return Err(Error::Validation(format!(
            "need samples ≥ {} and at least one chain and node",
            10 * BATCHES
        )));
    }
    let (a, b) = endpoints_infinite(v0, params)?;
    let start: Vec<f64> = (0..n).map(|i| a + (b - a) * (i as f64 + 0.5) / n as f64).collect();
    let (gx, gw) = gauss_legendre(settings.t_nodes);
    let ts: Vec<f64> = gx.iter().map(|x| 0.5 * (x + 1.0)).collect();
    let ws: Vec<f64> = gw.iter().map(|w| 0.5 * w).collect();
    let jobs: Vec<(usize, usize)> =
        (0..settings.t_nodes).flat_map(|k| (0..settings.chains).map(move |c| (k, c))).collect();
    let outputs: Vec<ChainOutput> = with_thread_cap(|| {
        jobs.par_iter()
            .map(|&(k, c)| run_chain(v0, v1, ts[k], params, n, &start, settings, (k * settings.chains + c) as u64))
            .collect()
    });
    let confinement = (n as f64).powf(1.0 + params.alpha);
    let mut derivative = Vec::with_capacity(settings.t_nodes);
    let mut stderr = Vec::with_capacity(settings.t_nodes);
    let mut acceptance = Vec::with_capacity(settings.t_nodes);
    for k in 0..settings.t_nodes {
        let outs = &outputs[k * settings.chains..(k + 1) * settings.chains];
        let batches: Vec<f64> = outs.iter().flat_map(|o| o.batch_means.iter().copied()).collect();
        let acc = outs.iter().map(|o| o.acceptance).sum::<f64>() / outs.len() as f64;
        if !(0.1..=0.6).contains(&acc) {
            return Err(Error::Numerical(format!(
                "Metropolis acceptance {acc:.3} outside [0.1, 0.6] at t = {:.4}",
                ts[k]
            )));
        }
        let mean = batches.iter().sum::<f64>() / batches.len() as f64;
        let se = bootstrap_stderr(&batches, settings.seed.wrapping_add(k as u64));
        derivative.push(-confinement * mean);
        stderr.push(confinement * se);
        acceptance.push(acc);
    }
    let log_z: f64 = ws.iter().zip(&derivative).map(|(w, d)| w * d).sum();
    let err = ws.iter().zip(&stderr).map(|(w, s)| (w * s).powi(2)).sum::<f64>().sqrt();
    Ok(OracleResult {
        log_z,
        error_estimate: err.max(f64::MIN_POSITIVE),
        method: OracleMethod::Mc,
        n,
        grid: None,
        samples: Some(McData {
            t_nodes: ts,
            t_weights: ws,
            derivative,
            derivative_stderr: stderr,
            acceptance,
            samples: settings.samples,
            chains: settings.chains,
            seed: settings.seed,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian_exact::{gaussian_log_z_exact, GaussianSpec};

    fn params() -> ModelParams {
        ModelParams::new(1.0, 1.0, 1.0, 0.2).unwrap()
    }

    #[test]
    fn single_particle_gaussian() {
        let p = params();
        let v = Potential::quadratic(1.3, 0.4).unwrap();
        let r = log_z_quadrature(&v, &p, 1, None, 1e-12).unwrap();
        // ∫exp(−(gx² + tx)) = √(π/g)·e^{t²/4g}
        let exact = 0.5 * (PI / 1.3).ln() + 0.16 / (4.0 * 1.3);
        assert!((r.log_z - exact).abs() < 1e-10, "{} {exact}", r.log_z);
    }

    #[test]
    fn two_particles_match_exact_gaussian() {
        let p = params();
        let v = Potential::quadratic(1.0, 0.3).unwrap();
        let r = log_z_quadrature(&v, &p, 2, None, 1e-10).unwrap();
        let exact = gaussian_log_z_exact(&GaussianSpec::new(1.0, 0.3, p, 2).unwrap()).unwrap();
        assert!((r.log_z - exact).abs() < 1e-6, "{} {exact}", r.log_z);
        // t → −t symmetry
        let m = log_z_quadrature(&Potential::quadratic(1.0, -0.3).unwrap(), &p, 2, None, 1e-10).unwrap();
        assert!((m.log_z - r.log_z).abs() < 1e-8);
    }

    #[test]
    fn translation_covariance() {
        let p = params();
        let v = Potential::even_polynomial(vec![0.0, 0.0, 1.0, 0.0, 0.05]).unwrap();
        let c = 0.7;
        let vv = v.clone();
        let shifted = Potential::custom(
            6,
            std::sync::Arc::new(move |k, x: f64| vv.deriv(k, x - c)),
        )
        .unwrap();
        let r0 = log_z_quadrature(&v, &p, 2, None, 1e-11).unwrap();
        let r1 = log_z_quadrature(&shifted, &p, 2, None, 1e-11).unwrap();
        assert!((r0.log_z - r1.log_z).abs() < 1e-8, "{} {}", r0.log_z, r1.log_z);
    }

    #[test]
    fn small_box_is_rejected() {
        let p = params();
        let v = Potential::quadratic(1.0, 0.0).unwrap();
        assert!(matches!(log_z_quadrature(&v, &p, 2, Some(1.0), 1e-8), Err(Error::Numerical(_))));
        assert!(log_z_quadrature(&v, &p, 5, None, 1e-8).is_err());
    }

    #[test]
    fn large_interaction_scale_matches_exact_gaussian() {
        // interaction scale πω N^α of order 10³
        let p = ModelParams::new(300.0, 300.0, 1.0, 0.99).unwrap();
        let v = Potential::quadratic(1.0, 0.0).unwrap();
        let r = log_z_quadrature(&v, &p, 2, None, 1e-8).unwrap();
        let exact = gaussian_log_z_exact(&GaussianSpec::new(1.0, 0.0, p, 2).unwrap()).unwrap();
        assert!((r.log_z - exact).abs() < 1e-6 * exact.abs().max(1.0), "{} {exact}", r.log_z);
    }

    #[test]
    fn mc_trivial_ratios() {
        let p = params();
        let v0 = Potential::quadratic(1.0, 0.0).unwrap();
        let s = McSettings { samples: 4000, chains: 2, t_nodes: 4, seed: 7 };
        let r = log_z_ratio_mc(&v0, &v0, &p, 3, &s).unwrap();
        assert_eq!(r.log_z, 0.0);
        let c = 0.25;
        let r = log_z_ratio_mc(&v0.plus_constant(c), &v0, &p, 3, &s).unwrap();
        let expected = -(3f64).powf(2.2) * c;
        assert!((r.log_z - expected).abs() < 1e-12 * expected.abs());
        // reproducible
        let r2 = log_z_ratio_mc(&v0.plus_constant(c), &v0, &p, 3, &s).unwrap();
        assert_eq!(r.log_z, r2.log_z);
    }

    #[test]
    fn mc_matches_quadrature_at_three_particles() {
        let p = params();
        let v0 = Potential::quadratic(1.0, 0.0).unwrap();
        let v1 = Potential::even_polynomial(vec![0.0, 0.0, 1.0, 0.0, 0.05]).unwrap();
        let q0 = log_z_quadrature(&v0, &p, 3, None, 1e-8).unwrap();
        let q1 = log_z_quadrature(&v1, &p, 3, None, 1e-8).unwrap();
        let s = McSettings { samples: 40_000, chains: 4, t_nodes: 8, seed: 11 };
        let mc = log_z_ratio_mc(&v1, &v0, &p, 3, &s).unwrap();
        let diff = (q1.log_z - q0.log_z) - mc.log_z;
        assert!(diff.abs() < 3.0 * mc.error_estimate, "{diff} ± {}", mc.error_estimate);
    }
}
