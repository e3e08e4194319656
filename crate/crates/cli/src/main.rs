mod spec;

use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use fillhull_core::check::{run_checks, Fault};
use fillhull_core::coeffs::p_l1_norm;
use fillhull_core::comass::{calibration_sweep, comass_ir, OptimizerConfig};
use fillhull_core::io::{fmt_sig, round_sig};
use fillhull_core::volumes::{coordinate_filling_area, cone_chart, mass_table, Definition};
use fillhull_core::{random_hull_point, Error, Grid, HullFn};

const EXIT_INPUT: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(name = "fillhull", version, about = "Experiments on the injective hull of the Riemannian circle")]
struct Cli {
    #[command(flatten)]
    run: RunConfig,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct RunConfig {
    /// Grid on which hull points are generated (at least 64).
    #[arg(long, global = true, default_value_t = 512)]
    grid_n: usize,
    /// Quadrature grid for ω, Ψ and p (at least grid-n).
    #[arg(long, global = true, default_value_t = 1024)]
    eval_n: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Projected-gradient tolerance of the η-ascent.
    #[arg(long, global = true, default_value_t = 1e-9)]
    grad_tol: f64,
    #[arg(long, global = true, default_value_t = 500)]
    max_iters: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Inner-Riemannian comass of ω at one hull point.
    Comass {
        /// sphere:TAU,D | random:SEED,ROUGHNESS,EPS | shrink:INNER,LAMBDA | HullFn JSON file
        input: String,
        /// Extra random starts for the ascent.
        #[arg(long, default_value_t = 1)]
        multistart: usize,
    },
    /// Calibration defect along (1 − t)h + t g with a log-log fit.
    Sweep {
        #[arg(long, default_value = "sphere:0.5,0.7")]
        h: String,
        /// Defaults to random:SEED,0.3,0.3 with the global seed.
        #[arg(long)]
        g: Option<String>,
        /// Comma-separated t values.
        #[arg(long, default_value = "0.02,0.04,0.06,0.08,0.1,0.12,0.14,0.16,0.18,0.2")]
        t: String,
    },
    /// Mass of the cone over the boundary circle for the five area definitions.
    Cone {
        /// Parameter nodes per axis of the cone chart.
        #[arg(long, default_value_t = 128)]
        param_n: usize,
    },
    /// Area of the coordinate filling loop at several offsets.
    Lowerbound {
        /// Comma-separated offsets; defaults to kπ/8, k = 0..8.
        #[arg(long)]
        offsets: Option<String>,
    },
    /// ‖p(f)‖₁ over a seeded random corpus.
    L1 {
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 0.3)]
        eps: f64,
        #[arg(long, default_value_t = 0.3)]
        roughness: f64,
    },
    /// Invariant suite over all modules.
    Check {
        /// n = 128 instead of 512.
        #[arg(long)]
        fast: bool,
        #[arg(long, hide = true, value_parser = ["coeff-sign"])]
        inject_fault: Option<String>,
    },
}

/// A JSON document plus the same data as one CSV table.
struct Report {
    json: Value,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    exit: u8,
}

enum Failure {
    Input(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. } => Failure::Numeric(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(round_sig(x))
    } else {
        Value::Null
    }
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, Failure> {
    let vals: Vec<f64> = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Failure::Input(format!("{what}: bad value {p:?}"))))
        .collect::<Result<_, _>>()?;
    if vals.is_empty() {
        return Err(Failure::Input(format!("{what}: empty list")));
    }
    Ok(vals)
}

impl RunConfig {
    fn validate(&self) -> Result<(Grid, Grid), Failure> {
        if self.grid_n < 64 {
            return Err(Failure::Input(format!("--grid-n must be at least 64, got {}", self.grid_n)));
        }
        if self.eval_n < self.grid_n {
            return Err(Failure::Input(format!("--eval-n ({}) must be at least --grid-n ({})", self.eval_n, self.grid_n)));
        }
        Ok((Grid::new(self.grid_n)?, Grid::new(self.eval_n)?))
    }

    fn optimizer(&self, multistart: usize) -> Result<OptimizerConfig, Failure> {
        let cfg = OptimizerConfig { max_iters: self.max_iters, grad_tol: self.grad_tol, multistart, seed: self.seed, ..Default::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Generates on the coarse grid, evaluates on the fine one.
    fn hull(&self, spec: &str) -> Result<HullFn<f64>, Failure> {
        let (g, e) = self.validate()?;
        let f = spec::parse_hull(spec, g)?;
        Ok(if g.n() == e.n() { f } else { HullFn::from_fn(e, |a| f.value(a)) })
    }
}

fn cmd_comass(run: &RunConfig, input: &str, multistart: usize) -> Result<Report, Failure> {
    let f = run.hull(input)?;
    let r = comass_ir(&f, &run.optimizer(multistart)?)?;
    let d = &r.maximizer.diagnostics;
    let json = json!({
        "command": "comass",
        "input": input,
        "grid_n": run.grid_n,
        "eval_n": run.eval_n,
        "value": num(r.value),
        "normalized": num(r.value / PI),
        "hemisphere": { "tau": num(r.hemisphere.tau), "d": num(r.hemisphere.d) },
        "dist": num(r.dist),
        "eta_inf": num(r.maximizer.eta.sup_norm()),
        "diagnostics": {
            "iterations": d.iterations,
            "grad_norm": num(d.grad_norm),
            "cap_active": d.cap_active,
            "converged": d.converged,
        },
    });
    let row = vec![
        fmt_sig(r.value),
        fmt_sig(r.hemisphere.tau),
        fmt_sig(r.hemisphere.d),
        fmt_sig(r.dist),
        d.iterations.to_string(),
        fmt_sig(d.grad_norm),
        d.converged.to_string(),
    ];
    Ok(Report {
        json,
        header: vec!["value", "tau", "d", "dist", "iterations", "grad_norm", "converged"],
        rows: vec![row],
        exit: if d.converged { 0 } else { EXIT_NO_CONVERGENCE },
    })
}

fn cmd_sweep(run: &RunConfig, h: &str, g: Option<&str>, t: &str) -> Result<Report, Failure> {
    let ts = parse_list(t, "--t")?;
    if ts.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Failure::Input("--t values must lie in [0, 1]".into()));
    }
    let hp = spec::parse_sphere(h.strip_prefix("sphere:").ok_or_else(|| Failure::Input(format!("--h must be sphere:TAU,D, got {h:?}")))?)?;
    let g_spec = g.map(str::to_owned).unwrap_or_else(|| format!("random:{},0.3,0.3", run.seed));
    let gf = run.hull(&g_spec)?;
    let rep = calibration_sweep(&hp, &gf, &ts, &run.optimizer(1)?)?;
    let rows_json: Vec<Value> = rep
        .rows
        .iter()
        .map(|r| json!({ "t": num(r.t), "dist": num(r.dist), "defect": num(r.defect), "eta_inf": num(r.eta_inf), "iters": r.iters, "converged": r.converged }))
        .collect();
    let mut json = rep.summary_json();
    json["command"] = json!("sweep");
    json["h"] = json!(h);
    json["g"] = json!(g_spec);
    json["grid_n"] = json!(run.grid_n);
    json["eval_n"] = json!(run.eval_n);
    json["rows"] = Value::Array(rows_json);
    let rows = rep
        .rows
        .iter()
        .map(|r| vec![fmt_sig(r.t), fmt_sig(r.dist), fmt_sig(r.defect), fmt_sig(r.eta_inf), r.iters.to_string(), r.converged.to_string()])
        .collect();
    let any_converged = rep.rows.iter().any(|r| r.converged);
    Ok(Report {
        json,
        header: vec!["t", "dist", "defect", "eta_inf", "iters", "converged"],
        rows,
        exit: if any_converged { 0 } else { EXIT_NO_CONVERGENCE },
    })
}

fn reference(d: Definition) -> f64 {
    match d {
        Definition::Mass => PI * PI / 2.0,
        Definition::MassStar => PI * PI,
        Definition::BusemannHausdorff => PI.powi(3) / 4.0,
        Definition::HolmesThompson => 2.0 * PI,
        Definition::InnerRiemannian => PI * PI,
    }
}

fn cmd_cone(run: &RunConfig, param_n: usize) -> Result<Report, Failure> {
    let (g, _) = run.validate()?;
    if param_n < 8 {
        return Err(Failure::Input(format!("--param-n must be at least 8, got {param_n}")));
    }
    let chart = cone_chart::<f64>(g, param_n, param_n, (0.0, 1.0))?;
    let table = mass_table(&chart)?;
    let entries: Vec<Value> = table
        .iter()
        .map(|r| {
            let want = reference(r.definition);
            json!({
                "definition": r.definition.name(),
                "value": num(r.value),
                "reference": num(want),
                "rel_error": num((r.value - want) / want),
            })
        })
        .collect();
    let json = json!({ "command": "cone", "grid_n": g.n(), "param_n": chart.param_n(), "masses": entries });
    let rows = table
        .iter()
        .map(|r| {
            let want = reference(r.definition);
            vec![r.definition.name().to_owned(), fmt_sig(r.value), fmt_sig(want), fmt_sig((r.value - want) / want), r.grid_n.to_string(), r.param_n.clone()]
        })
        .collect();
    Ok(Report { json, header: vec!["definition", "value", "reference", "rel_error", "grid_n", "param_n"], rows, exit: 0 })
}

fn cmd_lowerbound(offsets: Option<&str>) -> Result<Report, Failure> {
    let offs = match offsets {
        Some(s) => parse_list(s, "--offsets")?,
        None => (0..=8).map(|k| k as f64 * PI / 8.0).collect(),
    };
    let areas: Vec<f64> = offs.iter().map(|o| coordinate_filling_area(0.0, *o)).collect();
    let asym = offs
        .iter()
        .map(|o| (coordinate_filling_area(0.0, *o) - coordinate_filling_area(0.0, PI - *o)).abs())
        .fold(0.0, f64::max);
    let json = json!({
        "command": "lowerbound",
        "rows": offs.iter().zip(&areas).map(|(o, a)| json!({ "offset": num(*o), "area": num(*a) })).collect::<Vec<_>>(),
        "max_asymmetry": num(asym),
        "quarter_area": num(coordinate_filling_area(0.0, PI / 2.0)),
    });
    let rows = offs.iter().zip(&areas).map(|(o, a)| vec![fmt_sig(*o), fmt_sig(*a)]).collect();
    Ok(Report { json, header: vec!["offset", "area"], rows, exit: 0 })
}

fn cmd_l1(run: &RunConfig, count: usize, eps: f64, roughness: f64) -> Result<Report, Failure> {
    let (g, e) = run.validate()?;
    if count == 0 {
        return Err(Failure::Input("--count must be positive".into()));
    }
    let bound = PI * PI / 2.0;
    let mut values = Vec::with_capacity(count);
    let mut worst: Option<(u64, f64, HullFn<f64>)> = None;
    for i in 0..count as u64 {
        let seed = run.seed.wrapping_add(i);
        let f0 = random_hull_point(seed, roughness, eps, g)?;
        let f = if g.n() == e.n() { f0 } else { HullFn::from_fn(e, |a| f0.value(a)) };
        let v = p_l1_norm(&f)?;
        values.push((seed, v));
        if worst.as_ref().is_none_or(|w| v > w.1) {
            worst = Some((seed, v, f));
        }
    }
    let (arg, max, f_max) = worst.expect("count > 0");
    let exceeded = max > bound + 1e-2;
    let mut json = json!({
        "command": "l1",
        "grid_n": run.grid_n,
        "eval_n": run.eval_n,
        "count": count,
        "eps": num(eps),
        "roughness": num(roughness),
        "max": num(max),
        "argmax_seed": arg,
        "bound": num(bound),
        "exceeded": exceeded,
    });
    if exceeded {
        json["counterexample"] = serde_json::from_str(&f_max.to_json()).expect("own json");
    }
    let rows = values.iter().map(|(s, v)| vec![s.to_string(), fmt_sig(*v), (*v > bound + 1e-2).to_string()]).collect();
    Ok(Report { json, header: vec!["seed", "l1", "exceeds"], rows, exit: 0 })
}

fn cmd_check(fast: bool, fault: Option<&str>) -> Result<Report, Failure> {
    let fault = fault.map(|_| Fault::CoeffSign);
    let results = run_checks(fast, fault);
    let ok = results.iter().all(|c| c.passed);
    let json = json!({ "command": "check", "fast": fast, "passed": ok, "checks": results });
    let rows = results.iter().map(|c| vec![c.name.to_owned(), c.passed.to_string(), c.detail.clone()]).collect();
    Ok(Report { json, header: vec!["name", "passed", "detail"], rows, exit: if ok { 0 } else { 1 } })
}

fn emit(report: &Report, run: &RunConfig) -> std::io::Result<()> {
    let mut buf = Vec::new();
    match run.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, &report.json)?;
            buf.push(b'\n');
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&report.header)?;
            for r in &report.rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
    }
    match &run.out {
        Some(p) => std::fs::write(p, buf),
        None => std::io::stdout().write_all(&buf),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = &cli.run;
    let result = run.validate().and_then(|_| match &cli.cmd {
        Cmd::Comass { input, multistart } => cmd_comass(run, input, *multistart),
        Cmd::Sweep { h, g, t } => cmd_sweep(run, h, g.as_deref(), t),
        Cmd::Cone { param_n } => cmd_cone(run, *param_n),
        Cmd::Lowerbound { offsets } => cmd_lowerbound(offsets.as_deref()),
        Cmd::L1 { count, eps, roughness } => cmd_l1(run, *count, *eps, *roughness),
        Cmd::Check { fast, inject_fault } => cmd_check(*fast, inject_fault.as_deref()),
    });
    match result {
        Ok(report) => {
            if let Err(e) = emit(&report, run) {
                eprintln!("fillhull: cannot write output: {e}");
                return ExitCode::from(EXIT_INPUT);
            }
            ExitCode::from(report.exit)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("fillhull: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("fillhull: {msg}");
            ExitCode::from(EXIT_NO_CONVERGENCE)
        }
    }
}
