//! Command-line front end. [`run`] maps arguments to an exit code: 0 on
//! success or a decisive verdict, 2 when a verdict is inconclusive, 1 on
//! error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, OutputFormat, TestKind};
use crate::error::{Error, Result};
use crate::feller::{
    bounded_interval_test, family_test, fractional_condition_study, necessary_test,
    sufficient_test, sup_inf_test, BoundaryVerdict, CirParams, Hypotheses, StudyScheme, Verdict,
};
use crate::fracapprox::{
    approximation_error, build_kernel, ApproxScheme, QuadratureWeight, SchemeKind, DEFAULT_RATIO,
};
use crate::kernels::{Kernel, KernelSpec};
use crate::resolvent::{check_hypotheses, solve_resolvent};
use crate::scale::ScaleContext;
use crate::simulate::{simulate_paths, summarize, verdict_crosscheck, Scheme};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "volterra-feller",
    version,
    about = "Boundary-attainment tests for stochastic Volterra equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Boundary verdicts for the model and kernel of a config file
    Test(TestArgs),
    /// Tabulate p'_c, p_c and v_c on a grid
    Scale(ScaleArgs),
    /// Resolvent density and (K'*L) on a uniform grid
    Resolvent(ResolventArgs),
    /// Nonsingular approximations of the fractional kernel
    Approx(ApproxArgs),
    /// Monte Carlo boundary-hit statistics
    Simulate(SimulateArgs),
    /// Run the configured tests and check them against simulation
    Crosscheck(CrosscheckArgs),
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output format, overriding [output] format
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Output file, overriding [output] path
    #[arg(long, value_name = "PATH")]
    output: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct TestArgs {
    /// Experiment config (TOML, or JSON with a .json extension)
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct ScaleArgs {
    /// Experiment config (TOML, or JSON with a .json extension)
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// First grid point
    #[arg(long, allow_negative_numbers = true)]
    from: f64,
    /// Last grid point
    #[arg(long, allow_negative_numbers = true)]
    to: f64,
    /// Number of grid points
    #[arg(long, default_value_t = 21)]
    points: usize,
    /// Shift applied left of c
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    beta: f64,
    /// Shift applied right of c
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    gamma: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct ResolventArgs {
    /// Experiment config (TOML, or JSON with a .json extension)
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Grid step, overriding [test] resolvent_dt
    #[arg(long)]
    dt: Option<f64>,
    /// Grid end, overriding [test] resolvent_horizon
    #[arg(long)]
    horizon: Option<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum ApproxSchemeArg {
    Truncation,
    Quadrature,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WeightArg {
    Fractional,
    FractionalThenUnit,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ApproxFormat {
    Text,
    Json,
}

#[derive(Args, Debug)]
struct ApproxArgs {
    /// Fractional order in (0, 1)
    #[arg(long)]
    alpha: f64,
    /// Truncated rate integral or per-interval Gaussian rules
    #[arg(long, value_enum)]
    scheme: ApproxSchemeArg,
    /// Truncation level of the rate integral
    #[arg(long = "T", value_name = "T")]
    t_max: Option<f64>,
    /// Explicit node list, e.g. 0,1,6.4
    #[arg(long, value_delimiter = ',')]
    nodes: Option<Vec<f64>>,
    /// First geometric node
    #[arg(long, default_value_t = 1.0)]
    xi1: f64,
    /// Geometric node ratio
    #[arg(long, default_value_t = DEFAULT_RATIO)]
    ratio: f64,
    /// Number of geometric intervals
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Gaussian rule order per interval
    #[arg(long, default_value_t = 1)]
    q: usize,
    /// Measure integrated by the Gaussian rules
    #[arg(long, value_enum, default_value = "fractional")]
    weight: WeightArg,
    /// Sweep values for the CIR condition table: T for truncation, interval
    /// counts for geometric quadrature
    #[arg(long, value_delimiter = ',')]
    study: Option<Vec<f64>>,
    /// CIR mean reversion for --study
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    /// CIR mean level for --study
    #[arg(long, default_value_t = 0.1)]
    theta: f64,
    /// CIR volatility for --study
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Times at which to compare with the exact kernel
    #[arg(long, value_delimiter = ',')]
    error_grid: Option<Vec<f64>>,
    /// Rounded summary with CSV tables, or full-precision JSON
    #[arg(long, value_enum, default_value = "text")]
    format: ApproxFormat,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    ConvolutionEuler,
    MarkovianLift,
}

#[derive(Args, Debug)]
struct SimOverrides {
    /// Simulated time span
    #[arg(long)]
    horizon: Option<f64>,
    /// Time step
    #[arg(long)]
    dt: Option<f64>,
    /// Number of paths
    #[arg(long)]
    n_paths: Option<usize>,
    /// Seed of the per-path random streams
    #[arg(long)]
    seed: Option<u64>,
    /// Discretisation scheme
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    /// Distance at which a finite boundary counts as hit
    #[arg(long)]
    hit_eps: Option<f64>,
    /// Magnitude at which a path counts as exploded
    #[arg(long)]
    blowup_cap: Option<f64>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Experiment config (TOML, or JSON with a .json extension)
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    #[command(flatten)]
    sim: SimOverrides,
    /// Per-path CSV of first hits and terminal values
    #[arg(long, value_name = "PATH")]
    paths_csv: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct CrosscheckArgs {
    /// Experiment config (TOML, or JSON with a .json extension)
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    #[command(flatten)]
    sim: SimOverrides,
    /// Largest hit fraction compatible with no exit
    #[arg(long)]
    leak_tol: Option<f64>,
    /// Smallest hit fraction compatible with exit
    #[arg(long)]
    floor_tol: Option<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

/// Runs the command line `argv` (program name first) against the process
/// standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_ERROR
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let (module, result) = match cli.command {
        Command::Test(a) => ("test", cmd_test(a, out)),
        Command::Scale(a) => ("scale", cmd_scale(a, out)),
        Command::Resolvent(a) => ("resolvent", cmd_resolvent(a, out)),
        Command::Approx(a) => ("approx", cmd_approx(a, out)),
        Command::Simulate(a) => ("simulate", cmd_simulate(a, out)),
        Command::Crosscheck(a) => ("crosscheck", cmd_crosscheck(a, out, err)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error [{module}]: {e}");
            EXIT_ERROR
        }
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Config(format!("cannot write output: {e}"))
}

fn load(path: &Path, out: &OutputArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_path(path)?;
    if let Some(f) = out.format {
        cfg.output.format = match f {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
        };
    }
    if let Some(p) = &out.output {
        cfg.output.path = Some(p.clone());
    }
    Ok(cfg)
}

fn apply_sim(cfg: &mut ExperimentConfig, o: &SimOverrides) {
    let s = &mut cfg.sim;
    if let Some(v) = o.horizon {
        s.horizon = v;
    }
    if let Some(v) = o.dt {
        s.dt = v;
    }
    if let Some(v) = o.n_paths {
        s.n_paths = v;
    }
    if let Some(v) = o.seed {
        s.seed = v;
    }
    if let Some(v) = o.scheme {
        s.scheme = match v {
            SchemeArg::ConvolutionEuler => Scheme::ConvolutionEuler,
            SchemeArg::MarkovianLift => Scheme::MarkovianLift,
        };
    }
    if let Some(v) = o.hit_eps {
        s.hit_eps = Some(v);
    }
    if let Some(v) = o.blowup_cap {
        s.blowup_cap = Some(v);
    }
}

/// `Debug` formatting keeps full precision and switches to exponent form
/// for very large or small magnitudes.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn config_comment(cfg: &ExperimentConfig) -> String {
    cfg.to_toml()
        .lines()
        .map(|l| {
            if l.is_empty() {
                "#\n".to_string()
            } else {
                format!("# {l}\n")
            }
        })
        .collect()
}

fn emit(cfg: &ExperimentConfig, text: String, out: &mut dyn Write) -> Result<()> {
    match &cfg.output.path {
        Some(p) => std::fs::write(p, text).map_err(io_err),
        None => out.write_all(text.as_bytes()).map_err(io_err),
    }
}

fn json_doc(cfg: &ExperimentConfig, body: serde_json::Value) -> String {
    let mut doc = json!({ "config": cfg });
    if let (Some(d), serde_json::Value::Object(b)) = (doc.as_object_mut(), body) {
        d.extend(b);
    }
    let mut s = serde_json::to_string_pretty(&doc).expect("output serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct NamedVerdict {
    test: TestKind,
    #[serde(flatten)]
    verdict: BoundaryVerdict,
}

fn run_tests(cfg: &ExperimentConfig) -> Result<Vec<NamedVerdict>> {
    let model = cfg.model_spec()?;
    let t = &cfg.test;
    let needs_ctx = t.tests.iter().any(|k| *k != TestKind::Family);
    let mut out = Vec::new();
    let generic = if needs_ctx {
        let hyp = Hypotheses::establish(&cfg.kernel, &model, t.resolvent_dt, t.resolvent_horizon);
        let mut ctx =
            ScaleContext::new(model.clone(), &cfg.kernel)?.with_settings(t.scale_settings());
        if let Some(c) = t.base_point {
            ctx = ctx.with_base_point(c)?;
        }
        Some((hyp, ctx))
    } else {
        None
    };
    for &kind in &t.tests {
        let verdicts = match (kind, &generic) {
            (TestKind::Family, _) => family_test(&model, cfg.kernel.scalars())?,
            (TestKind::Necessary, Some((hyp, ctx))) => {
                let eps = t
                    .eps_shift
                    .unwrap_or_else(|| crate::feller::default_eps_shift(&model));
                vec![necessary_test(ctx, hyp, eps)?]
            }
            (TestKind::Sufficient, Some((hyp, ctx))) => vec![sufficient_test(ctx, hyp, t.stages)?],
            (TestKind::BoundedInterval, Some((hyp, ctx))) => vec![bounded_interval_test(ctx, hyp)?],
            (TestKind::SupInf, Some((hyp, ctx))) => vec![sup_inf_test(ctx, hyp)?],
            _ => unreachable!("context is built for generic tests"),
        };
        out.extend(verdicts.into_iter().map(|verdict| NamedVerdict {
            test: kind,
            verdict,
        }));
    }
    Ok(out)
}

fn verdict_code(v: &[NamedVerdict]) -> i32 {
    if v.iter().any(|n| n.verdict.verdict == Verdict::Inconclusive) {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    }
}

fn verdict_csv(verdicts: &[NamedVerdict]) -> String {
    let mut s = String::from("test,boundary,verdict,rule,evidence\n");
    for n in verdicts {
        let v = &n.verdict;
        let evidence: Vec<String> = v
            .evidence
            .iter()
            .map(|e| format!("{}={} vs {}", e.quantity, num(e.value), num(e.threshold)))
            .collect();
        s.push_str(&format!(
            "{},{:?},{:?},{},{}\n",
            serde_json::to_value(n.test)
                .expect("serializes")
                .as_str()
                .unwrap_or_default(),
            v.boundary,
            v.verdict,
            csv_field(&v.rule),
            csv_field(&evidence.join("; "))
        ));
    }
    s
}

fn cmd_test(a: TestArgs, out: &mut dyn Write) -> Result<i32> {
    let mut cfg = load(&a.config, &a.out)?;
    cfg.resolve()?;
    let verdicts = run_tests(&cfg)?;
    let text = match cfg.output.format {
        OutputFormat::Json => json_doc(&cfg, json!({ "verdicts": verdicts })),
        OutputFormat::Csv => config_comment(&cfg) + &verdict_csv(&verdicts),
    };
    emit(&cfg, text, out)?;
    Ok(verdict_code(&verdicts))
}

#[derive(Serialize)]
struct ScaleRow {
    x: f64,
    p_prime: f64,
    p: f64,
    v: f64,
}

fn cmd_scale(a: ScaleArgs, out: &mut dyn Write) -> Result<i32> {
    let mut cfg = load(&a.config, &a.out)?;
    cfg.resolve()?;
    if a.points < 2 {
        return Err(Error::param("points", "need at least 2"));
    }
    if !(a.from < a.to) {
        return Err(Error::param("from", "must be below --to"));
    }
    let model = cfg.model_spec()?;
    let mut ctx = ScaleContext::new(model.clone(), &cfg.kernel)?
        .with_settings(cfg.test.scale_settings())
        .with_shifts(a.beta, a.gamma);
    if let Some(c) = cfg.test.base_point {
        ctx = ctx.with_base_point(c)?;
    }
    let c = ctx.base_point();
    let grid: Vec<f64> = (0..a.points)
        .map(|i| a.from + (a.to - a.from) * i as f64 / (a.points - 1) as f64)
        .collect();
    if let Some(x) = grid.iter().find(|x| !model.contains(**x)) {
        return Err(Error::Domain(format!(
            "grid point {x} outside the state interval"
        )));
    }
    // the profile sweeps away from c, one side at a time
    let mut left: Vec<f64> = grid.iter().copied().filter(|x| *x < c).collect();
    left.reverse();
    let right: Vec<f64> = grid.iter().copied().filter(|x| *x > c).collect();
    let mut rows = Vec::with_capacity(grid.len());
    for side in [left, right] {
        if side.is_empty() {
            continue;
        }
        let prof = ctx.profile(&side)?;
        for (i, &x) in side.iter().enumerate() {
            rows.push(ScaleRow {
                x,
                p_prime: ctx.scale_derivative(x)?,
                p: prof.scale[i],
                v: prof.v[i],
            });
        }
    }
    if grid.contains(&c) {
        rows.push(ScaleRow {
            x: c,
            p_prime: ctx.scale_derivative(c)?,
            p: 0.0,
            v: 0.0,
        });
    }
    rows.sort_by(|r, s| r.x.total_cmp(&s.x));
    let text = match cfg.output.format {
        OutputFormat::Json => json_doc(
            &cfg,
            json!({ "base_point": c, "beta": a.beta, "gamma": a.gamma, "rows": rows }),
        ),
        OutputFormat::Csv => {
            let mut s = config_comment(&cfg);
            s.push_str(&format!(
                "# base_point = {}\n# beta = {}\n# gamma = {}\n",
                num(c),
                num(a.beta),
                num(a.gamma)
            ));
            s.push_str("x,p_prime,p,v\n");
            for r in &rows {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    num(r.x),
                    num(r.p_prime),
                    num(r.p),
                    num(r.v)
                ));
            }
            s
        }
    };
    emit(&cfg, text, out)?;
    Ok(EXIT_OK)
}

fn cmd_resolvent(a: ResolventArgs, out: &mut dyn Write) -> Result<i32> {
    let mut cfg = load(&a.config, &a.out)?;
    if let Some(dt) = a.dt {
        cfg.test.resolvent_dt = dt;
    }
    if let Some(h) = a.horizon {
        cfg.test.resolvent_horizon = h;
    }
    cfg.resolve()?;
    let grid = solve_resolvent(
        &cfg.kernel,
        cfg.test.resolvent_dt,
        cfg.test.resolvent_horizon,
    )?;
    let report = check_hypotheses(&grid);
    let text = match cfg.output.format {
        OutputFormat::Json => json_doc(
            &cfg,
            json!({ "grid": grid, "checks": report, "passed": report.passed() }),
        ),
        OutputFormat::Csv => {
            let mut s = config_comment(&cfg);
            s.push_str(&format!(
                "# atom = {}\n# residual = {}\n# checks_passed = {}\n",
                num(grid.atom),
                num(grid.residual),
                report.passed()
            ));
            s.push_str("t,rho,kprime_conv_l\n");
            for i in 0..grid.times.len() {
                s.push_str(&format!(
                    "{},{},{}\n",
                    num(grid.times[i]),
                    num(grid.density[i]),
                    num(grid.kprime_conv_l[i])
                ));
            }
            s
        }
    };
    emit(&cfg, text, out)?;
    Ok(EXIT_OK)
}

fn cmd_approx(a: ApproxArgs, out: &mut dyn Write) -> Result<i32> {
    let weight = match a.weight {
        WeightArg::Fractional => QuadratureWeight::Fractional,
        WeightArg::FractionalThenUnit => QuadratureWeight::FractionalThenUnit,
    };
    let scheme = match a.scheme {
        ApproxSchemeArg::Truncation => {
            let t = a
                .t_max
                .ok_or_else(|| Error::param("T", "required by the truncation scheme"))?;
            ApproxScheme::truncation(a.alpha, t)?
        }
        ApproxSchemeArg::Quadrature => match &a.nodes {
            Some(nodes) => ApproxScheme::quadrature(a.alpha, nodes.clone(), a.q, weight)?,
            None => ApproxScheme::geometric(a.alpha, a.xi1, a.ratio, a.n, a.q, weight)?,
        },
    };
    let kernel = build_kernel(&scheme)?;
    let scalars = kernel.scalars();
    let pairs: Vec<(f64, f64)> = match &kernel {
        KernelSpec::SumOfExponentials { m, x } => {
            m.iter().copied().zip(x.iter().copied()).collect()
        }
        _ => Vec::new(),
    };
    let study = match &a.study {
        None => None,
        Some(sweep) => {
            let study_scheme = match &scheme.kind {
                SchemeKind::Truncation { .. } => StudyScheme::Truncation,
                SchemeKind::Quadrature { .. } if a.nodes.is_none() => StudyScheme::Geometric {
                    xi1: a.xi1,
                    ratio: a.ratio,
                    q: a.q,
                    weight,
                },
                SchemeKind::Quadrature { .. } => {
                    return Err(Error::param("study", "needs truncation or geometric nodes"));
                }
            };
            let cir = CirParams {
                kappa: a.kappa,
                theta: a.theta,
                sigma: a.sigma,
            };
            Some(fractional_condition_study(
                a.alpha,
                &study_scheme,
                cir,
                sweep,
            )?)
        }
    };
    let errors = match &a.error_grid {
        Some(ts) => Some(approximation_error(&kernel, a.alpha, ts)?),
        None => None,
    };
    let text = match a.format {
        ApproxFormat::Json => {
            let doc = json!({
                "scheme": scheme,
                "k0": scalars.k0,
                "kp0": scalars.kp0,
                "m": pairs.iter().map(|p| p.0).collect::<Vec<_>>(),
                "x": pairs.iter().map(|p| p.1).collect::<Vec<_>>(),
                "study": study,
                "errors": errors,
            });
            serde_json::to_string_pretty(&doc).expect("output serializes") + "\n"
        }
        ApproxFormat::Text => {
            let mut s = format!("K(0)={:.6}\nK'(0)={:.6}\n", scalars.k0, scalars.kp0);
            if !pairs.is_empty() {
                s.push_str("\nn,m,x\n");
                for (i, (m, x)) in pairs.iter().enumerate() {
                    s.push_str(&format!("{},{},{}\n", i + 1, num(*m), num(*x)));
                }
            }
            if let Some(rows) = &study {
                s.push_str("\nsweep,k0,kp0,necessary_threshold,sufficient_gap,regime\n");
                for r in rows {
                    s.push_str(&format!(
                        "{},{},{},{},{},{:?}\n",
                        num(r.sweep),
                        num(r.k0),
                        num(r.kp0),
                        num(r.necessary_threshold),
                        num(r.sufficient_gap),
                        r.regime
                    ));
                }
            }
            if let Some(rows) = &errors {
                s.push_str("\nt,approx,exact,abs_error,rel_error\n");
                for r in rows {
                    s.push_str(&format!(
                        "{},{},{},{},{}\n",
                        num(r.t),
                        num(r.approx),
                        num(r.exact),
                        num(r.abs_error),
                        num(r.rel_error)
                    ));
                }
            }
            s
        }
    };
    out.write_all(text.as_bytes()).map_err(io_err)?;
    Ok(EXIT_OK)
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let mut cfg = load(&a.config, &a.out)?;
    apply_sim(&mut cfg, &a.sim);
    cfg.resolve()?;
    let sim = cfg.sim_config()?;
    let paths = simulate_paths(&sim)?;
    let report = summarize(&sim, &paths);
    if let Some(p) = &a.paths_csv {
        let mut s = String::from("path,side,time,terminal\n");
        for o in &paths {
            let (side, time) = match o.hit {
                Some(h) => (format!("{:?}", h.side), num(h.time)),
                None => (String::new(), String::new()),
            };
            s.push_str(&format!("{},{side},{time},{}\n", o.path, num(o.terminal)));
        }
        std::fs::write(p, s).map_err(io_err)?;
    }
    let text = match cfg.output.format {
        OutputFormat::Json => json_doc(&cfg, json!({ "report": report })),
        OutputFormat::Csv => {
            let q = |v: Option<[f64; 3]>, i: usize| opt(v.map(|a| a[i]));
            let mut s = config_comment(&cfg);
            s.push_str(
                "hit_fraction_left,hit_fraction_right,left_p10,left_p50,left_p90,right_p10,right_p50,right_p90,\
                 surviving,mean_terminal,var_terminal\n",
            );
            let (l, r) = (
                report.first_hit_quantiles_left,
                report.first_hit_quantiles_right,
            );
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                num(report.hit_fraction_left),
                num(report.hit_fraction_right),
                q(l, 0),
                q(l, 1),
                q(l, 2),
                q(r, 0),
                q(r, 1),
                q(r, 2),
                report.surviving,
                opt(report.mean_terminal),
                opt(report.var_terminal)
            ));
            s
        }
    };
    emit(&cfg, text, out)?;
    Ok(EXIT_OK)
}

fn cmd_crosscheck(a: CrosscheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let mut cfg = load(&a.config, &a.out)?;
    apply_sim(&mut cfg, &a.sim);
    if let Some(v) = a.leak_tol {
        cfg.sim.leak_tol = v;
    }
    if let Some(v) = a.floor_tol {
        cfg.sim.floor_tol = v;
    }
    cfg.resolve()?;
    let named = run_tests(&cfg)?;
    let verdicts: Vec<BoundaryVerdict> = named.iter().map(|n| n.verdict.clone()).collect();
    let sim = cfg.sim_config()?;
    let report = verdict_crosscheck(
        &sim.model,
        &cfg.kernel,
        &sim,
        &verdicts,
        cfg.sim.tolerances(),
    )?;
    let text = match cfg.output.format {
        OutputFormat::Json => json_doc(
            &cfg,
            json!({ "verdicts": named, "crosscheck": report, "consistent": report.consistent() }),
        ),
        OutputFormat::Csv => {
            let mut s = config_comment(&cfg);
            s.push_str("test,boundary,verdict,rule,hit_fraction,requirement,status\n");
            for (n, row) in named.iter().zip(&report.rows) {
                s.push_str(&format!(
                    "{},{:?},{:?},{},{},{},{}\n",
                    serde_json::to_value(n.test)
                        .expect("serializes")
                        .as_str()
                        .unwrap_or_default(),
                    row.boundary,
                    row.verdict,
                    csv_field(&row.rule),
                    num(row.hit_fraction),
                    csv_field(&row.requirement),
                    if row.consistent {
                        "CONSISTENT"
                    } else {
                        "INCONSISTENT"
                    }
                ));
            }
            s
        }
    };
    emit(&cfg, text, out)?;
    if !report.consistent() {
        let _ = writeln!(
            err,
            "crosscheck: simulated hit fractions contradict at least one verdict"
        );
        return Ok(EXIT_ERROR);
    }
    Ok(verdict_code(&named))
}
