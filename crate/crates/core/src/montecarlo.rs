//! Euler–Maruyama simulation of the threshold diffusion and Monte Carlo
//! estimators for the analytic quantities.
//!
//! Randomness comes from ChaCha8 keyed by `seed` with one stream per path
//! (two for the exponential clock and bridge draws), so a path never depends
//! on how work is split across threads. Partial results are reduced in path
//! order.
//!
//! Departures from the plain fixed-step scheme, all switchable in [`SimConfig`]:
//!
//! * `adaptive`: when the state is far from every threshold and stop level
//!   (at least `8σ√h + |μ|h` away), the step is doubled up to `max_step`.
//!   Coefficients are constant there, so the Gaussian increment is exact.
//! * `bridge`: between two grid points on the same side of a stop level the
//!   Brownian-bridge crossing probability `exp(−2d₁d₂/(σ²h))` is sampled,
//!   which removes the `O(√Δt)` late-detection bias of the hitting time.
//! * `refine`: within `3σ√h` of a threshold the step is halved, at most
//!   `refine` times. A step across a volatility jump is where Euler loses
//!   most of its accuracy for these models.
//!
//! Steps are shortened to land exactly on checkpoints and on the exponential
//! clock.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{check_finite, check_rate, Error, Result};
use crate::fundamentals::FundamentalSolution;
use crate::model::ThresholdModel;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub paths: u64,
    pub horizon: f64,
    pub seed: u64,
    pub antithetic: bool,
    pub adaptive: bool,
    pub bridge: bool,
    /// Upper bound on an adaptive step.
    pub max_step: f64,
    /// Near a threshold the step is halved up to this many times so that a
    /// step rarely straddles a jump in the coefficients.
    pub refine: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            paths: 100_000,
            horizon: 50.0,
            seed: 20240607,
            antithetic: false,
            adaptive: true,
            bridge: true,
            max_step: 0.05,
            refine: 4,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!("step size must be positive, got {}", self.dt)));
        }
        if self.paths == 0 {
            return Err(Error::InvalidArgument("path count must be at least 1".into()));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.antithetic && self.paths % 2 == 1 {
            return Err(Error::InvalidArgument("antithetic sampling needs an even path count".into()));
        }
        Ok(())
    }

    /// Independent sampling units: paths, or antithetic pairs.
    fn units(&self) -> u64 {
        if self.antithetic {
            self.paths / 2
        } else {
            self.paths
        }
    }
}

/// Point estimate, its standard error and the number of paths used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithError {
    pub estimate: f64,
    pub std_error: f64,
    pub paths: u64,
}

impl EstimateWithError {
    /// Number of standard errors separating the estimate from `value`.
    pub fn z_score(&self, value: f64) -> f64 {
        if self.std_error == 0.0 {
            if self.estimate == value {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.estimate - value) / self.std_error
        }
    }
}

/// How a simulated path ends.
#[derive(Debug, Clone, PartialEq)]
pub enum StopRule {
    /// First passage to any of these levels, or the horizon.
    Levels(Vec<f64>),
    Horizon,
    /// An independent exponential time of the given rate, or the horizon.
    ExpClock(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Level(usize),
    Horizon,
    ExpClock,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSummary {
    pub terminal: f64,
    pub reason: StopReason,
    pub time: f64,
}

/// Random streams of one path.
struct Streams {
    normal: ChaCha8Rng,
    uniform: ChaCha8Rng,
    sign: f64,
}

impl Streams {
    fn new(seed: u64, path: u64, antithetic: bool) -> Self {
        let (unit, sign) = if antithetic { (path / 2, if path.is_multiple_of(2) { 1.0 } else { -1.0 }) } else { (path, 1.0) };
        let mut normal = ChaCha8Rng::seed_from_u64(seed);
        normal.set_stream(2 * unit);
        let mut uniform = ChaCha8Rng::seed_from_u64(seed);
        uniform.set_stream(2 * unit + 1);
        Self { normal, uniform, sign }
    }

    fn normal(&mut self) -> f64 {
        let z: f64 = self.normal.sample(StandardNormal);
        self.sign * z
    }

    /// Uniform on `(0, 1]`.
    fn uniform(&mut self) -> f64 {
        1.0 - self.uniform.random::<f64>()
    }
}

/// First standard normals of the stream for `(seed, path)`, for pinning the
/// generator in tests.
pub fn normal_test_vector(seed: u64, path: u64, count: usize) -> Vec<f64> {
    let mut s = Streams::new(seed, path, false);
    (0..count).map(|_| s.normal()).collect()
}

struct Walker<'a> {
    model: &'a ThresholdModel,
    cfg: &'a SimConfig,
    levels: Vec<f64>,
    guards: Vec<f64>,
    h_min: f64,
}

/// Width of the refinement zone in units of `σ√h`.
const REFINE_ZONE: f64 = 3.0;

fn nearest(points: &[f64], x: f64) -> f64 {
    let k = points.partition_point(|&g| g < x);
    let mut d = f64::INFINITY;
    if k < points.len() {
        d = points[k] - x;
    }
    if k > 0 {
        d = d.min(x - points[k - 1]);
    }
    d
}

impl<'a> Walker<'a> {
    fn new(model: &'a ThresholdModel, cfg: &'a SimConfig, levels: &[f64]) -> Self {
        let mut guards: Vec<f64> = model.thresholds().iter().chain(levels).copied().collect();
        guards.sort_by(f64::total_cmp);
        let h_min = cfg.dt * 0.5f64.powi(cfg.refine as i32);
        Self { model, cfg, levels: levels.to_vec(), guards, h_min }
    }

    fn step_size(&self, x: f64, mu: f64, sigma: f64) -> f64 {
        let safe = |h: f64, d: f64| 8.0 * sigma * h.sqrt() + mu.abs() * h <= d;
        let mut h = self.cfg.dt;
        if self.cfg.refine > 0 {
            let d = nearest(self.model.thresholds(), x);
            while h > self.h_min && REFINE_ZONE * sigma * h.sqrt() + mu.abs() * h > d {
                h *= 0.5;
            }
        }
        if h == self.cfg.dt && self.cfg.adaptive {
            let d = nearest(&self.guards, x);
            while 2.0 * h <= self.cfg.max_step && safe(2.0 * h, d) {
                h *= 2.0;
            }
        }
        h
    }

    /// Runs until `t_stop` or a stop level; returns the level index on a hit,
    /// leaving `x` at the level and `t` at the crossing time.
    fn advance(&self, st: &mut Streams, x: &mut f64, t: &mut f64, t_stop: f64) -> Result<Option<usize>> {
        while *t < t_stop {
            let i = self.model.regime_index(*x);
            let (mu, sigma) = (self.model.drifts()[i], self.model.vols()[i]);
            let mut h = self.step_size(*x, mu, sigma);
            let last = h >= t_stop - *t;
            if last {
                h = t_stop - *t;
            }
            let z = st.normal();
            let nx = *x + mu * h + sigma * h.sqrt() * z;
            if !nx.is_finite() {
                return Err(Error::Diverged(format!("state became {nx} at t = {t}")));
            }
            for (k, &lev) in self.levels.iter().enumerate() {
                let (d0, d1) = (*x - lev, nx - lev);
                if d0 * d1 <= 0.0 {
                    let frac = if d0 == d1 { 0.0 } else { d0 / (d0 - d1) };
                    *t += h * frac;
                    *x = lev;
                    return Ok(Some(k));
                }
                if self.cfg.bridge {
                    let p = (-2.0 * d0 * d1 / (sigma * sigma * h)).exp();
                    if p > 1e-12 && st.uniform() <= p {
                        *t += 0.5 * h;
                        *x = lev;
                        return Ok(Some(k));
                    }
                }
            }
            *x = nx;
            *t = if last { t_stop } else { *t + h };
        }
        Ok(None)
    }
}

/// Simulates one path. `path` selects the random stream.
pub fn simulate_path(model: &ThresholdModel, x0: f64, config: &SimConfig, stop: &StopRule, path: u64) -> Result<PathSummary> {
    config.validate()?;
    check_finite("x0", x0)?;
    let levels: &[f64] = match stop {
        StopRule::Levels(l) => l,
        _ => &[],
    };
    let walker = Walker::new(model, config, levels);
    let mut st = Streams::new(config.seed, path, config.antithetic);
    let (mut x, mut t) = (x0, 0.0);
    if let Some(k) = levels.iter().position(|&l| l == x0) {
        return Ok(PathSummary { terminal: x0, reason: StopReason::Level(k), time: 0.0 });
    }
    let (t_end, clock) = match stop {
        StopRule::ExpClock(q) => {
            check_rate(*q)?;
            let e = -st.uniform().ln() / q;
            (e.min(config.horizon), e <= config.horizon)
        }
        _ => (config.horizon, false),
    };
    let reason = match walker.advance(&mut st, &mut x, &mut t, t_end)? {
        Some(k) => StopReason::Level(k),
        None if clock => StopReason::ExpClock,
        None => StopReason::Horizon,
    };
    Ok(PathSummary { terminal: x, reason, time: t })
}

const CHUNK: u64 = 512;

/// Evaluates `f` on every unit and returns the per-unit observation vectors
/// in unit order.
fn collect_units<F>(units: u64, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(u64) -> Result<Vec<f64>> + Sync,
{
    let chunks = units.div_ceil(CHUNK);
    let parts: Vec<Result<Vec<Vec<f64>>>> = (0..chunks)
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(units)).map(&f).collect())
        .collect();
    let mut out = Vec::with_capacity(units as usize);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Runs `path_obs` on each path; for antithetic pairs the two observation
/// vectors are averaged into one unit.
fn observe<F>(cfg: &SimConfig, path_obs: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(u64) -> Result<Vec<f64>> + Sync,
{
    cfg.validate()?;
    collect_units(cfg.units(), |u| {
        if cfg.antithetic {
            let (a, b) = (path_obs(2 * u)?, path_obs(2 * u + 1)?);
            Ok(a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect())
        } else {
            path_obs(u)
        }
    })
}

/// Mean and standard error of column `j`, summed in unit order.
fn column_estimate(obs: &[Vec<f64>], j: usize, paths: u64) -> EstimateWithError {
    let n = obs.len() as f64;
    let mean = obs.iter().map(|o| o[j]).sum::<f64>() / n;
    let var = if obs.len() > 1 { obs.iter().map(|o| (o[j] - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    EstimateWithError { estimate: mean, std_error: (var / n).sqrt(), paths }
}

/// Estimate of `E_x[e^{−qτ_target}]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitEstimate {
    pub value: EstimateWithError,
    /// `e^{−qT}`: paths still running at the horizon count as 0, which
    /// understates the transform by at most this much.
    pub truncation_bias: f64,
    pub unresolved: u64,
}

pub fn estimate_hit_laplace(model: &ThresholdModel, q: f64, x: f64, target: f64, config: &SimConfig) -> Result<HitEstimate> {
    check_rate(q)?;
    check_finite("x", x)?;
    check_finite("target", target)?;
    config.validate()?;
    if x == target {
        return Ok(HitEstimate {
            value: EstimateWithError { estimate: 1.0, std_error: 0.0, paths: config.paths },
            truncation_bias: 0.0,
            unresolved: 0,
        });
    }
    let stop = StopRule::Levels(vec![target]);
    let obs = observe(config, |p| {
        let s = simulate_path(model, x, config, &stop, p)?;
        Ok(match s.reason {
            StopReason::Level(_) => vec![(-q * s.time).exp(), 0.0],
            _ => vec![0.0, 1.0],
        })
    })?;
    let unresolved = obs.iter().map(|o| o[1]).sum::<f64>() * if config.antithetic { 2.0 } else { 1.0 };
    Ok(HitEstimate {
        value: column_estimate(&obs, 0, config.paths),
        truncation_bias: (-q * config.horizon).exp(),
        unresolved: unresolved.round() as u64,
    })
}

/// Histogram of `X_{e_q}` and the martingale checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpTimeLaw {
    pub edges: Vec<f64>,
    /// Mass of each bin `(edges[k], edges[k+1]]`.
    pub mass: Vec<EstimateWithError>,
    /// Mass below the first and above the last edge.
    pub below: f64,
    pub above: f64,
    /// Fraction of paths whose clock rang after the horizon.
    pub truncated: f64,
    pub checkpoints: Vec<f64>,
    /// Sample means of `e^{−q(t∧ρ)}g(X_{t∧ρ})/g(x)` for `g⁺` and `g⁻`, where
    /// `ρ` is `e_q` or the first exit from the bin window, whichever comes
    /// first. Both have expectation 1 at every checkpoint.
    pub martingale_plus: Vec<EstimateWithError>,
    pub martingale_minus: Vec<EstimateWithError>,
}

pub fn sample_exponential_time_law(
    model: &ThresholdModel,
    q: f64,
    x: f64,
    config: &SimConfig,
    edges: &[f64],
    checkpoints: &[f64],
) -> Result<ExpTimeLaw> {
    check_rate(q)?;
    check_finite("x", x)?;
    config.validate()?;
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("bin edges must be increasing with at least two entries".into()));
    }
    if checkpoints.windows(2).any(|w| !(w[0] < w[1])) || checkpoints.iter().any(|&c| !(c > 0.0)) {
        return Err(Error::InvalidArgument("checkpoints must be positive and increasing".into()));
    }
    let gp = FundamentalSolution::plus(model, q)?;
    let gm = FundamentalSolution::minus(model, q)?;
    let (lp0, lm0) = (gp.eval_log_g(x)?, gm.eval_log_g(x)?);
    let nb = edges.len() - 1;
    let nc = checkpoints.len();
    let window = [edges[0], edges[nb]];
    let free = Walker::new(model, config, &[]);
    let boxed = Walker::new(model, config, &window);
    let obs = observe(config, |p| {
        let mut st = Streams::new(config.seed, p, config.antithetic);
        let e = -st.uniform().ln() / q;
        let end = e.min(config.horizon);
        let (mut xs, mut t) = (x, 0.0);
        let mut row = vec![0.0; nb + 3 + 2 * nc];
        let mut mart = |k: usize, s: f64, xv: f64| -> Result<()> {
            row[nb + 3 + k] = (-q * s + gp.eval_log_g(xv)? - lp0).exp();
            row[nb + 3 + nc + k] = (-q * s + gm.eval_log_g(xv)? - lm0).exp();
            Ok(())
        };
        // stopped at e_q or on leaving the window, so g stays bounded
        let mut k = 0;
        let mut left = x <= window[0] || x >= window[1];
        while k < nc && checkpoints[k] < end && !left {
            left = boxed.advance(&mut st, &mut xs, &mut t, checkpoints[k])?.is_some();
            if !left {
                mart(k, t, xs)?;
                k += 1;
            }
        }
        if !left && k < nc {
            boxed.advance(&mut st, &mut xs, &mut t, end)?;
        }
        for j in k..nc {
            mart(j, t, xs)?;
        }
        if t < end {
            free.advance(&mut st, &mut xs, &mut t, end)?;
        }
        let bin = if xs <= edges[0] {
            nb
        } else if xs > edges[nb] {
            nb + 1
        } else {
            edges.partition_point(|&v| v < xs) - 1
        };
        row[bin] = 1.0;
        if e > config.horizon {
            row[nb + 2] = 1.0;
        }
        Ok(row)
    })?;
    let paths = config.paths;
    let col = |j| column_estimate(&obs, j, paths);
    Ok(ExpTimeLaw {
        edges: edges.to_vec(),
        mass: (0..nb).map(col).collect(),
        below: col(nb).estimate,
        above: col(nb + 1).estimate,
        truncated: col(nb + 2).estimate,
        checkpoints: checkpoints.to_vec(),
        martingale_plus: (0..nc).map(|k| col(nb + 3 + k)).collect(),
        martingale_minus: (0..nc).map(|k| col(nb + 3 + nc + k)).collect(),
    })
}

/// Frequencies of leaving `[a₁ − M, a_n + M]` and `[a₁ − 2M, a_n + 2M]`
/// through the lower end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeEstimate {
    pub half_width: f64,
    pub inner: EstimateWithError,
    pub outer: EstimateWithError,
    /// Paths that had not left the outer box by the horizon.
    pub unresolved: u64,
}

pub fn estimate_escape(model: &ThresholdModel, half_width: f64, x: f64, config: &SimConfig) -> Result<EscapeEstimate> {
    check_finite("x", x)?;
    config.validate()?;
    let (a1, an) = (model.a(1), model.a(model.n()));
    if !(half_width > 0.0) || x <= a1 - half_width || x >= an + half_width {
        return Err(Error::InvalidArgument(format!(
            "start {x} must lie strictly inside ({}, {})",
            a1 - half_width,
            an + half_width
        )));
    }
    let inner = [a1 - half_width, an + half_width];
    let outer = [a1 - 2.0 * half_width, an + 2.0 * half_width];
    let obs = observe(config, |p| {
        let mut st = Streams::new(config.seed, p, config.antithetic);
        let (mut xs, mut t) = (x, 0.0);
        let w_in = Walker::new(model, config, &inner);
        let Some(k) = w_in.advance(&mut st, &mut xs, &mut t, config.horizon)? else {
            return Ok(vec![0.5, 0.5, 1.0]);
        };
        let low_inner = if k == 0 { 1.0 } else { 0.0 };
        let w_out = Walker::new(model, config, &outer);
        match w_out.advance(&mut st, &mut xs, &mut t, config.horizon)? {
            Some(j) => Ok(vec![low_inner, if j == 0 { 1.0 } else { 0.0 }, 0.0]),
            None => Ok(vec![low_inner, 0.5, 1.0]),
        }
    })?;
    let unresolved = obs.iter().map(|o| o[2]).sum::<f64>() * if config.antithetic { 2.0 } else { 1.0 };
    Ok(EscapeEstimate {
        half_width,
        inner: column_estimate(&obs, 0, config.paths),
        outer: column_estimate(&obs, 1, config.paths),
        unresolved: unresolved.round() as u64,
    })
}

/// Long-run occupation histogram of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub mass: Vec<EstimateWithError>,
}

/// Time-average occupation of bins over `[burn_in, burn_in + horizon]` on a
/// single path with fixed steps `dt`. Standard errors come from 50 batch
/// means.
pub fn estimate_stationary_histogram(
    model: &ThresholdModel,
    x0: f64,
    config: &SimConfig,
    edges: &[f64],
    burn_in: f64,
) -> Result<Histogram> {
    check_finite("x0", x0)?;
    config.validate()?;
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("bin edges must be increasing with at least two entries".into()));
    }
    const BATCHES: usize = 50;
    let fixed = SimConfig { adaptive: false, bridge: false, antithetic: false, refine: 0, ..config.clone() };
    let walker = Walker::new(model, &fixed, &[]);
    let mut st = Streams::new(config.seed, 0, false);
    let (mut x, mut t) = (x0, 0.0);
    walker.advance(&mut st, &mut x, &mut t, burn_in.max(0.0))?;
    let nb = edges.len() - 1;
    let steps = (config.horizon / config.dt).round().max(BATCHES as f64) as u64;
    let per_batch = steps / BATCHES as u64;
    let mut batches = vec![vec![0.0; nb]; BATCHES];
    for batch in batches.iter_mut() {
        for _ in 0..per_batch {
            if x > edges[0] && x <= edges[nb] {
                batch[edges.partition_point(|&v| v < x) - 1] += 1.0;
            }
            let t1 = t + config.dt;
            walker.advance(&mut st, &mut x, &mut t, t1)?;
        }
        for v in batch.iter_mut() {
            *v /= per_batch as f64;
        }
    }
    let mass = (0..nb)
        .map(|k| {
            let mut e = column_estimate(&batches, k, 1);
            e.paths = 1;
            e
        })
        .collect();
    Ok(Histogram { edges: edges.to_vec(), mass })
}
