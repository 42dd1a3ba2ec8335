//! Monte Carlo paths of `X = x0 + K∗b(X) + K∗(σ(X)dW)` with boundary-hit
//! statistics.
//!
//! Every path draws its Gaussian increments from its own ChaCha8 stream
//! (`seed`, stream = path index), so results do not depend on the number of
//! worker threads. `VOLTERRA_FELLER_THREADS` caps the worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feller::{Boundary, BoundaryVerdict, Verdict};
use crate::kernels::{Kernel, KernelSpec};
use crate::scale::{ModelFamily, ModelSpec, Side};

pub const THREADS_ENV: &str = "VOLTERRA_FELLER_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `X_{k+1} = x0 + Σ_{j≤k} K(t_{k+1}-t_j)[b(X̂_j)dt + σ(X̂_j)ΔW_j]`.
    ConvolutionEuler,
    /// One factor per exponential, `Y ← (1 - x·dt)Y + b(X̂)dt + σ(X̂)ΔW`,
    /// `X = x0 + Σ m Y`.
    MarkovianLift,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub model: ModelSpec,
    pub kernel: KernelSpec,
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub scheme: Scheme,
    /// A finite boundary counts as hit within this distance.
    pub hit_eps: f64,
    /// `|X|` at which a path counts as blown up towards an infinite end.
    pub blowup_cap: f64,
}

/// `1e-4` times the interval width, with `max(|x0|, 1)` standing in for the
/// width of unbounded intervals.
pub fn default_hit_eps(model: &ModelSpec) -> f64 {
    let (l, r) = model.interval();
    let width = if l.is_finite() && r.is_finite() {
        r - l
    } else {
        model.x0.abs().max(1.0)
    };
    1e-4 * width
}

pub fn default_blowup_cap(model: &ModelSpec) -> f64 {
    1e6 * model.x0.abs().max(1.0)
}

impl SimConfig {
    pub fn new(model: ModelSpec, kernel: KernelSpec) -> Self {
        SimConfig {
            hit_eps: default_hit_eps(&model),
            blowup_cap: default_blowup_cap(&model),
            model,
            kernel,
            horizon: 1.0,
            dt: 1e-3,
            n_paths: 1000,
            seed: 0,
            scheme: Scheme::ConvolutionEuler,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.kernel.validate()?;
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::param("horizon", "must be positive"));
        }
        if !(self.dt > 0.0 && self.dt < self.horizon) {
            return Err(Error::param("dt", "must be positive and below the horizon"));
        }
        if self.n_paths == 0 {
            return Err(Error::param("n_paths", "must be positive"));
        }
        if !(self.hit_eps.is_finite() && self.hit_eps > 0.0) {
            return Err(Error::param("hit_eps", "must be positive"));
        }
        if !(self.blowup_cap > self.model.x0.abs().max(1.0)) {
            return Err(Error::param("blowup_cap", "must exceed max(|x0|, 1)"));
        }
        if self.scheme == Scheme::MarkovianLift
            && matches!(self.kernel, KernelSpec::TruncatedFractional { .. })
        {
            return Err(Error::Precondition(
                "the Markovian lift needs a constant or sum-of-exponentials kernel".into(),
            ));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hit {
    pub side: Side,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathOutcome {
    pub path: usize,
    pub hit: Option<Hit>,
    /// State at the horizon, or at the hit.
    pub terminal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub hit_fraction_left: f64,
    pub hit_fraction_right: f64,
    /// `(p10, p50, p90)` of first-hit times, when any path hit.
    pub first_hit_quantiles_left: Option<[f64; 3]>,
    pub first_hit_quantiles_right: Option<[f64; 3]>,
    pub surviving: usize,
    /// Over surviving paths; `None` when none survived.
    pub mean_terminal: Option<f64>,
    pub var_terminal: Option<f64>,
    pub scheme: Scheme,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
}

/// How the path state is advanced.
enum Engine {
    /// `K(k·dt)` for `k = 1..=n`.
    Convolution(Vec<f64>),
    Constant(f64),
    Lift {
        m: Vec<f64>,
        decay: Vec<f64>,
    },
}

impl Engine {
    fn build(kernel: &KernelSpec, scheme: Scheme, dt: f64, n: usize) -> Result<Self> {
        match (scheme, kernel) {
            (Scheme::ConvolutionEuler, KernelSpec::Constant { level }) => {
                Ok(Engine::Constant(*level))
            }
            (Scheme::ConvolutionEuler, _) => {
                let vals = (1..=n)
                    .map(|k| kernel.eval(k as f64 * dt))
                    .collect::<Result<_>>()?;
                Ok(Engine::Convolution(vals))
            }
            (Scheme::MarkovianLift, KernelSpec::Constant { level }) => Ok(Engine::Lift {
                m: vec![*level],
                decay: vec![1.0],
            }),
            (Scheme::MarkovianLift, KernelSpec::SumOfExponentials { m, x }) => Ok(Engine::Lift {
                m: m.clone(),
                decay: x.iter().map(|r| 1.0 - r * dt).collect(),
            }),
            (Scheme::MarkovianLift, KernelSpec::TruncatedFractional { .. }) => {
                Err(Error::Precondition(
                    "the Markovian lift needs a constant or sum-of-exponentials kernel".into(),
                ))
            }
        }
    }
}

/// Clamps the state into the closure of the interval for families whose
/// coefficients are only defined there.
fn truncate(model: &ModelSpec, x: f64) -> f64 {
    match model.family {
        ModelFamily::Cir { .. } => x.max(0.0),
        ModelFamily::Jacobi { a, b, .. } => x.clamp(a, b),
        _ => x,
    }
}

struct Barriers {
    lo: f64,
    hi: f64,
}

impl Barriers {
    fn new(cfg: &SimConfig) -> Self {
        let (l, r) = cfg.model.interval();
        Barriers {
            lo: if l.is_finite() {
                l + cfg.hit_eps
            } else {
                -cfg.blowup_cap
            },
            hi: if r.is_finite() {
                r - cfg.hit_eps
            } else {
                cfg.blowup_cap
            },
        }
    }

    fn check(&self, x: f64) -> Option<Side> {
        if x <= self.lo {
            Some(Side::Left)
        } else if x >= self.hi {
            Some(Side::Right)
        } else {
            None
        }
    }
}

/// Runs one path on the increments produced by `dw`; stops at the first hit
/// when `barriers` is given.
fn run_path(
    model: &ModelSpec,
    engine: &Engine,
    dt: f64,
    n: usize,
    path: usize,
    barriers: Option<&Barriers>,
    mut dw: impl FnMut() -> f64,
) -> Result<PathOutcome> {
    let x0 = model.x0;
    let mut x = x0;
    let mut incs: Vec<f64> = match engine {
        Engine::Convolution(_) => Vec::with_capacity(n),
        _ => Vec::new(),
    };
    let mut factors = match engine {
        Engine::Lift { m, .. } => vec![0.0; m.len()],
        _ => Vec::new(),
    };
    for k in 0..n {
        let xt = truncate(model, x);
        let inc = model.drift(xt) * dt + model.diffusion(xt) * dw();
        x = match engine {
            Engine::Constant(level) => x + level * inc,
            Engine::Convolution(kv) => {
                incs.push(inc);
                let mut acc = 0.0;
                for (j, v) in incs.iter().enumerate() {
                    acc += kv[k - j] * v;
                }
                x0 + acc
            }
            Engine::Lift { m, decay } => {
                let mut acc = 0.0;
                for ((y, d), w) in factors.iter_mut().zip(decay).zip(m) {
                    *y = d * *y + inc;
                    acc += w * *y;
                }
                x0 + acc
            }
        };
        if x.is_nan() {
            return Err(Error::SchemeInstability { path, step: k + 1 });
        }
        if let Some(side) = barriers.and_then(|b| b.check(x)) {
            return Ok(PathOutcome {
                path,
                hit: Some(Hit {
                    side,
                    time: (k + 1) as f64 * dt,
                }),
                terminal: x,
            });
        }
    }
    Ok(PathOutcome {
        path,
        hit: None,
        terminal: x,
    })
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

/// Worker count from `VOLTERRA_FELLER_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()?
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
}

fn in_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Numeric(format!("cannot start worker threads: {e}")))?;
    Ok(pool.install(f))
}

/// Outcome of every path, in path order.
pub fn simulate_paths(cfg: &SimConfig) -> Result<Vec<PathOutcome>> {
    cfg.validate()?;
    let n = cfg.n_steps();
    let engine = Engine::build(&cfg.kernel, cfg.scheme, cfg.dt, n)?;
    let barriers = Barriers::new(cfg);
    let sqrt_dt = cfg.dt.sqrt();
    in_pool(|| {
        (0..cfg.n_paths)
            .into_par_iter()
            .map(|p| {
                let mut rng = path_rng(cfg.seed, p);
                let dw = || {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    sqrt_dt * z
                };
                run_path(&cfg.model, &engine, cfg.dt, n, p, Some(&barriers), dw)
            })
            .collect::<Result<Vec<_>>>()
    })?
}

pub fn simulate(cfg: &SimConfig) -> Result<SimulationReport> {
    let paths = simulate_paths(cfg)?;
    Ok(summarize(cfg, &paths))
}

fn quantiles(mut times: Vec<f64>) -> Option<[f64; 3]> {
    if times.is_empty() {
        return None;
    }
    times.sort_by(f64::total_cmp);
    let at = |p: f64| {
        let pos = p * (times.len() - 1) as f64;
        let (i, frac) = (pos.floor() as usize, pos.fract());
        let next = times[(i + 1).min(times.len() - 1)];
        times[i] + frac * (next - times[i])
    };
    Some([at(0.1), at(0.5), at(0.9)])
}

pub fn summarize(cfg: &SimConfig, paths: &[PathOutcome]) -> SimulationReport {
    let total = paths.len() as f64;
    let times = |side: Side| -> Vec<f64> {
        paths
            .iter()
            .filter_map(|p| p.hit.filter(|h| h.side == side).map(|h| h.time))
            .collect()
    };
    let (left, right) = (times(Side::Left), times(Side::Right));
    let survivors: Vec<f64> = paths
        .iter()
        .filter(|p| p.hit.is_none())
        .map(|p| p.terminal)
        .collect();
    let (mean, var) = if survivors.is_empty() {
        (None, None)
    } else {
        let n = survivors.len() as f64;
        let mean = survivors.iter().sum::<f64>() / n;
        let var = if survivors.len() > 1 {
            survivors.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        (Some(mean), Some(var))
    };
    SimulationReport {
        hit_fraction_left: left.len() as f64 / total,
        hit_fraction_right: right.len() as f64 / total,
        first_hit_quantiles_left: quantiles(left),
        first_hit_quantiles_right: quantiles(right),
        surviving: survivors.len(),
        mean_terminal: mean,
        var_terminal: var,
        scheme: cfg.scheme,
        dt: cfg.dt,
        n_paths: cfg.n_paths,
        seed: cfg.seed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeComparison {
    pub dt: f64,
    /// `max_p |X_T^conv - X_T^lift|` over paths, without stopping at hits.
    pub max_discrepancy: f64,
    pub mean_discrepancy: f64,
}

/// Terminal discrepancy between the two schemes on shared noise, for each
/// step in `dts`. Every step must be an integer multiple of the smallest; the
/// Brownian increments are drawn on the finest grid and summed, so all
/// levels see the same paths.
pub fn compare_schemes(cfg: &SimConfig, dts: &[f64]) -> Result<Vec<SchemeComparison>> {
    cfg.validate()?;
    if !matches!(
        cfg.kernel,
        KernelSpec::SumOfExponentials { .. } | KernelSpec::Constant { .. }
    ) {
        return Err(Error::Precondition(
            "scheme comparison needs a constant or sum-of-exponentials kernel".into(),
        ));
    }
    let fine = dts.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(fine > 0.0 && fine < cfg.horizon) {
        return Err(Error::param(
            "dt",
            "steps must be positive and below the horizon",
        ));
    }
    let mut ratios = Vec::with_capacity(dts.len());
    for &dt in dts {
        let r = (dt / fine).round();
        if ((dt / fine) - r).abs() > 1e-9 * r {
            return Err(Error::param(
                "dt",
                "every step must be a multiple of the smallest",
            ));
        }
        ratios.push(r as usize);
    }
    let n_fine = (cfg.horizon / fine).round() as usize;
    let sqrt_fine = fine.sqrt();
    let per_path: Vec<Vec<f64>> = in_pool(|| {
        (0..cfg.n_paths)
            .into_par_iter()
            .map(|p| -> Result<Vec<f64>> {
                let mut rng = path_rng(cfg.seed, p);
                let noise: Vec<f64> = (0..n_fine)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        sqrt_fine * z
                    })
                    .collect();
                let mut out = Vec::with_capacity(dts.len());
                for (&dt, &r) in dts.iter().zip(&ratios) {
                    let n = n_fine / r;
                    let coarse: Vec<f64> =
                        noise.chunks(r).take(n).map(|c| c.iter().sum()).collect();
                    let mut terminal = [0.0; 2];
                    for (slot, scheme) in [Scheme::ConvolutionEuler, Scheme::MarkovianLift]
                        .into_iter()
                        .enumerate()
                    {
                        // the literal convolution, also for constant kernels
                        let engine = match (scheme, &cfg.kernel) {
                            (Scheme::ConvolutionEuler, KernelSpec::Constant { level }) => {
                                Engine::Convolution(vec![*level; n])
                            }
                            _ => Engine::build(&cfg.kernel, scheme, dt, n)?,
                        };
                        let mut it = coarse.iter().copied();
                        let dw = || it.next().unwrap_or(0.0);
                        terminal[slot] =
                            run_path(&cfg.model, &engine, dt, n, p, None, dw)?.terminal;
                    }
                    out.push((terminal[0] - terminal[1]).abs());
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(dts
        .iter()
        .enumerate()
        .map(|(i, &dt)| {
            let d: Vec<f64> = per_path.iter().map(|v| v[i]).collect();
            SchemeComparison {
                dt,
                max_discrepancy: d.iter().cloned().fold(0.0, f64::max),
                mean_discrepancy: d.iter().sum::<f64>() / d.len() as f64,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrosscheckTolerances {
    /// Largest hit fraction compatible with `NoExitAS`.
    pub leak_tol: f64,
    /// Smallest hit fraction compatible with `ExitsWithPositiveProb`.
    pub floor_tol: f64,
}

impl Default for CrosscheckTolerances {
    fn default() -> Self {
        CrosscheckTolerances {
            leak_tol: 0.02,
            floor_tol: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrosscheckRow {
    pub boundary: Boundary,
    pub verdict: Verdict,
    pub rule: String,
    pub hit_fraction: f64,
    /// `"<= tol"`, `">= tol"` or `"none"`.
    pub requirement: String,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrosscheckReport {
    pub simulation: SimulationReport,
    pub tolerances: CrosscheckTolerances,
    pub rows: Vec<CrosscheckRow>,
}

impl CrosscheckReport {
    pub fn consistent(&self) -> bool {
        self.rows.iter().all(|r| r.consistent)
    }
}

/// Compares verdicts with simulated hit fractions. `NoExitAS` needs every
/// covered boundary at or below `leak_tol`; `ExitsWithPositiveProb` needs the
/// combined fraction over the covered boundaries at or above `floor_tol`.
/// Other verdicts make no prediction and always pass.
pub fn verdict_crosscheck(
    model: &ModelSpec,
    kernel: &KernelSpec,
    sim: &SimConfig,
    verdicts: &[BoundaryVerdict],
    tol: CrosscheckTolerances,
) -> Result<CrosscheckReport> {
    if !sim.model.same_model(model) || &sim.kernel != kernel {
        return Err(Error::Precondition(
            "verdicts and simulation refer to different models or kernels".into(),
        ));
    }
    let report = simulate(sim)?;
    let fraction = |b: Boundary| match b {
        Boundary::Left => report.hit_fraction_left,
        Boundary::Right => report.hit_fraction_right,
        Boundary::Both => report.hit_fraction_left + report.hit_fraction_right,
    };
    let rows = verdicts
        .iter()
        .map(|v| {
            let (requirement, consistent, hit) = match v.verdict {
                Verdict::NoExitAS => {
                    let worst = report.hit_fraction_left.max(report.hit_fraction_right);
                    let hit = if v.boundary == Boundary::Both {
                        worst
                    } else {
                        fraction(v.boundary)
                    };
                    (format!("<= {}", tol.leak_tol), hit <= tol.leak_tol, hit)
                }
                Verdict::ExitsWithPositiveProb => {
                    let hit = fraction(v.boundary);
                    (format!(">= {}", tol.floor_tol), hit >= tol.floor_tol, hit)
                }
                _ => ("none".to_string(), true, fraction(v.boundary)),
            };
            CrosscheckRow {
                boundary: v.boundary,
                verdict: v.verdict,
                rule: v.rule.clone(),
                hit_fraction: hit,
                requirement,
                consistent,
            }
        })
        .collect();
    Ok(CrosscheckReport {
        simulation: report,
        tolerances: tol,
        rows,
    })
}
