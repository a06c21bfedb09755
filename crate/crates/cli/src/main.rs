use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::{json, Value};

use rqlab_cli::acceptance::{self, CheckStatus, Expected, Options};
use rqlab_cli::config::{Format, RunConfig};
use rqlab_cli::emit::{render, Output, Table};
use rqlab_cli::reports::{brackets, linear_eps, load_reports, table1_row, EXPERIMENT_SCORES};
use rqlab_cli::{read_input, CliError};
use rqlab_core::bellnet::{
    behavior_from_strategy, bell_score, best_of_seeds, build_optimal_complex_strategy, ns_check,
    optimal_network_strategy, Behavior, NetworkStrategy, Strategy,
};
use rqlab_core::hierarchy::{build_moment_problem, solve_hierarchy_with, Backend, SolveOptions};
use rqlab_core::measures::{
    dind_bounds_with, dsep_two_rebit, ef_two_rebit, linear_bound_epsilon, monotonicity_harness,
    pure_state_sep_distance, DindSettings, FreeOp, LinearBoundInputs, Measure,
};
use rqlab_core::qmat::{DensityMatrix, Field, StateJson};
use rqlab_core::realsim::{broadcast, frame_state, lift_state, simulate_network};

#[derive(Parser, Debug)]
#[command(name = "rqlab", version, about = "Real versus complex quantum theory in a Bell network")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Global {
    /// Flat `key = value` file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// json or csv.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Solver tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// Interior-point cap on the total block side.
    #[arg(long, global = true)]
    cap: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Bell functional and strategies.
    #[command(subcommand)]
    Bell(BellCmd),
    /// Distance measures on two-rebit states.
    #[command(subcommand)]
    Measures(MeasuresCmd),
    /// Real simulation of complex strategies.
    #[command(subcommand)]
    Sim(SimCmd),
    /// Moment relaxations of the separable set.
    #[command(subcommand)]
    Hierarchy(HierarchyCmd),
    /// Distance statements for one score.
    Bound {
        #[arg(long)]
        score: f64,
        /// Directory of saved `hierarchy solve` reports.
        #[arg(long)]
        reports: Option<PathBuf>,
    },
    /// Linear-bound distances for the comparison row.
    Table1,
    /// Distances for the experimental scores.
    Experiments {
        #[arg(long, value_delimiter = ',')]
        scores: Option<Vec<f64>>,
        #[arg(long)]
        reports: Option<PathBuf>,
    },
    /// Runs the acceptance suite; one PASS/FAIL line per criterion.
    Reproduce {
        /// Criterion numbers or modules (bellnet, measures, table1, realsim, hierarchy).
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        /// Flat `id = value` file overriding expected values.
        #[arg(long)]
        expected: Option<PathBuf>,
        /// Also run the long level-2 splitting solve (non-gating).
        #[arg(long)]
        extended: bool,
        /// Keep exported instances here.
        #[arg(long)]
        artifacts: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum BellCmd {
    /// Score of a behavior or strategy file (optimal strategy if none).
    Score { input: Option<PathBuf> },
    /// Best of several seesaw runs.
    Seesaw {
        #[arg(long, value_enum, default_value = "complex")]
        field: FieldArg,
        #[arg(long, value_delimiter = ',', default_value = "2,4,2")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        /// Write the best strategy as JSON.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// The closed-form optimal complex strategy.
    Optimal,
    /// No-signalling and normalization violations of a behavior.
    NsCheck { input: PathBuf },
}

#[derive(Subcommand, Debug)]
enum MeasuresCmd {
    /// Trace distance to two-rebit separable states.
    Dsep { input: PathBuf },
    /// Entanglement of formation of a two-rebit state.
    Ef { input: PathBuf },
    /// Bracket on the distance to product states.
    Dind {
        input: PathBuf,
        #[arg(long)]
        starts: Option<usize>,
    },
    /// Separable distance of a pure bipartite state.
    Pure { input: PathBuf },
    /// Lower bound on the separable distance from a score.
    LinearBound {
        #[arg(long)]
        score: f64,
        #[arg(long)]
        set_sup: Option<f64>,
        #[arg(long)]
        all_sup: Option<f64>,
        #[arg(long)]
        all_inf: Option<f64>,
    },
    /// Random monotonicity trials.
    Harness {
        #[arg(long, value_enum, default_value = "dsep")]
        measure: MeasureArg,
        #[arg(long, value_enum, default_value = "local")]
        op: OpArg,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
}

#[derive(Subcommand, Debug)]
enum SimCmd {
    /// Real carrier of a state with `n` frame rebits.
    Lift {
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
    /// Broadcasts one rebit of the `n`-rebit frame state.
    Broadcast {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        site: usize,
    },
    /// Real simulation of a network strategy (optimal one if none).
    Network { input: Option<PathBuf> },
}

#[derive(Subcommand, Debug)]
enum HierarchyCmd {
    /// Sizes of the moment problem.
    Build(HierArgs),
    /// Solves or exports the moment problem.
    Solve {
        #[command(flatten)]
        args: HierArgs,
        #[arg(long, value_enum, default_value = "interior")]
        backend: BackendArg,
        /// SDPA file for `--backend export`.
        #[arg(long)]
        export: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct HierArgs {
    #[arg(long, default_value_t = 1)]
    level: usize,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    /// Behavior to pin (feasibility mode).
    #[arg(long)]
    pin: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FieldArg {
    Real,
    Complex,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MeasureArg {
    Dsep,
    DindUpper,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OpArg {
    Local,
    Replace,
    Global,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BackendArg {
    Interior,
    Splitting,
    Export,
}

fn input_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

fn read_state(path: &Path) -> Result<DensityMatrix, CliError> {
    let j: StateJson = serde_json::from_str(&read_input(path)?).map_err(|e| input_err(path, e))?;
    j.into_state().map_err(|e| input_err(path, e))
}

fn read_behavior(path: &Path) -> Result<Behavior, CliError> {
    Behavior::from_json(&read_input(path)?).map_err(|e| input_err(path, e))
}

fn config(g: &Global) -> Result<RunConfig, CliError> {
    let mut c = RunConfig::default();
    if let Some(p) = &g.config {
        c.apply_text(&read_input(p)?)?;
    }
    let flags: [(&str, Option<String>); 7] = [
        ("seed", g.seed.map(|v| v.to_string())),
        ("jobs", g.jobs.map(|v| v.to_string())),
        ("format", g.format.clone()),
        ("output", g.output.as_ref().map(|p| p.display().to_string())),
        ("tol", g.tol.map(|v| v.to_string())),
        ("max_iters", g.max_iters.map(|v| v.to_string())),
        ("cap", g.cap.map(|v| v.to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            c.set(k, &v).map_err(|e| match e {
                CliError::Config(m) => CliError::Usage(m),
                other => other,
            })?;
        }
    }
    Ok(c)
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn strategy_json(s: &Strategy) -> Value {
    serde_json::from_str(&s.to_json()).expect("strategy JSON")
}

fn score_of(p: &Behavior) -> Value {
    let r = bell_score(p);
    json!({"score": r.total, "per_b": r.per_b, "correlators": r.correlators})
}

fn bell(cmd: BellCmd, cfg: &RunConfig) -> Result<Output, CliError> {
    Ok(Output::Json(match cmd {
        BellCmd::Score { input } => {
            let p = match input {
                None => behavior_from_strategy(&build_optimal_complex_strategy())?,
                Some(path) => {
                    let text = read_input(&path)?;
                    match Behavior::from_json(&text) {
                        Ok(p) => p,
                        Err(_) => behavior_from_strategy(&Strategy::from_json(&text).map_err(|e| input_err(&path, e))?)?,
                    }
                }
            };
            score_of(&p)
        }
        BellCmd::Seesaw {
            field,
            dims,
            seeds,
            iters,
            save,
        } => {
            let dims: [usize; 3] = dims
                .try_into()
                .map_err(|d: Vec<usize>| CliError::Usage(format!("--dims takes three sizes, got {d:?}")))?;
            if seeds == 0 {
                return Err(CliError::Usage("--seeds must be positive".into()));
            }
            let field = match field {
                FieldArg::Real => Field::Real,
                FieldArg::Complex => Field::Complex,
            };
            let (best, scores) = best_of_seeds(field, dims, cfg.seed..cfg.seed + seeds, iters);
            if let Some(p) = save {
                std::fs::write(&p, best.strategy.to_json())?;
                info!("best strategy written to {}", p.display());
            }
            json!({"best": best.report.total, "best_seed": best.seed, "converged": best.converged, "scores": scores})
        }
        BellCmd::Optimal => {
            let s = build_optimal_complex_strategy();
            let r = bell_score(&behavior_from_strategy(&s)?);
            json!({"score": r.total, "strategy": strategy_json(&s)})
        }
        BellCmd::NsCheck { input } => {
            let text = read_input(&input)?;
            let v: Value = serde_json::from_str(&text).map_err(|e| input_err(&input, e))?;
            let raw: Vec<f64> = match v.get("p") {
                Some(p) => flatten_numbers(p),
                None => flatten_numbers(&v),
            };
            let violations = ns_check(&raw);
            let out = json!({"ok": violations.is_empty(), "violations": to_value(&violations)});
            if !violations.is_empty() {
                println!("{}", render(&Output::Json(out), Format::Json)?.trim_end());
                return Err(CliError::Acceptance(format!("{} violated constraints", violations.len())));
            }
            out
        }
    }))
}

fn flatten_numbers(v: &Value) -> Vec<f64> {
    match v {
        Value::Array(a) => a.iter().flat_map(flatten_numbers).collect(),
        Value::Number(n) => vec![n.as_f64().unwrap_or(f64::NAN)],
        _ => vec![f64::NAN],
    }
}

fn measures(cmd: MeasuresCmd, cfg: &RunConfig) -> Result<Output, CliError> {
    Ok(Output::Json(match cmd {
        MeasuresCmd::Dsep { input } => {
            let r = dsep_two_rebit(&read_state(&input)?)?;
            json!({"distance": r.distance})
        }
        MeasuresCmd::Ef { input } => json!({"ef": ef_two_rebit(&read_state(&input)?)?}),
        MeasuresCmd::Dind { input, starts } => {
            let d = DindSettings::default();
            let s = DindSettings {
                seed: cfg.seed,
                starts: starts.unwrap_or(d.starts),
                ..d
            };
            let b = dind_bounds_with(&read_state(&input)?, &s)?;
            json!({"lower": b.lower, "upper": b.upper})
        }
        MeasuresCmd::Pure { input } => to_value(&pure_state_sep_distance(&read_state(&input)?)?),
        MeasuresCmd::LinearBound {
            score,
            set_sup,
            all_sup,
            all_inf,
        } => {
            let d = LinearBoundInputs::for_score(score);
            let i = LinearBoundInputs {
                score,
                set_sup: set_sup.unwrap_or(d.set_sup),
                all_sup: all_sup.unwrap_or(d.all_sup),
                all_inf: all_inf.unwrap_or(d.all_inf),
            };
            json!({"score": score, "epsilon": linear_bound_epsilon(i)?})
        }
        MeasuresCmd::Harness { measure, op, trials } => {
            let m = match measure {
                MeasureArg::Dsep => Measure::Dsep,
                MeasureArg::DindUpper => Measure::DindUpper { starts: 8 },
            };
            let o = match op {
                OpArg::Local => FreeOp::LocalChannels,
                OpArg::Replace => FreeOp::TraceAndReplace,
                OpArg::Global => FreeOp::GlobalOrthogonal,
            };
            to_value(&monotonicity_harness(m, o, trials, cfg.seed)?)
        }
    }))
}

fn state_value(s: &DensityMatrix) -> Value {
    to_value(&StateJson::from_state(s))
}

fn sim(cmd: SimCmd) -> Result<Output, CliError> {
    Ok(Output::Json(match cmd {
        SimCmd::Lift { input, n } => {
            let l = lift_state(&read_state(&input)?, n)?;
            json!({"n": l.n, "carrier": state_value(&l.carrier)})
        }
        SimCmd::Broadcast { n, site } => {
            let b = broadcast(&frame_state(n)?, site)?;
            let err = b.op().max_abs_diff(frame_state(n + 1)?.op());
            json!({"n": n, "site": site, "max_diff_from_frame_state": err, "state": state_value(&b)})
        }
        SimCmd::Network { input } => {
            let ns = match input {
                None => optimal_network_strategy(),
                Some(p) => NetworkStrategy::from_json(&read_input(&p)?).map_err(|e| input_err(&p, e))?,
            };
            let (p, audit) = simulate_network(&ns)?;
            json!({"score": bell_score(&p).total, "audit": to_value(&audit)})
        }
    }))
}

fn moment_problem(a: &HierArgs) -> Result<rqlab_core::hierarchy::MomentProblem, CliError> {
    let pin = a.pin.as_deref().map(read_behavior).transpose()?;
    build_moment_problem(a.level, a.eps, pin.as_ref()).map_err(|e| CliError::Usage(e.to_string()))
}

fn hierarchy(cmd: HierarchyCmd, cfg: &RunConfig) -> Result<Output, CliError> {
    Ok(Output::Json(match cmd {
        HierarchyCmd::Build(a) => {
            let mp = moment_problem(&a)?;
            let sdp = mp.to_sdp();
            json!({
                "level": mp.level,
                "eps": mp.epsilon,
                "mode": to_value(&mp.mode),
                "alice": mp.alice.len(),
                "charlie": mp.charlie.len(),
                "dim": mp.dim,
                "blocks": mp.block_sizes(),
                "variables": mp.num_vars,
                "constraints": sdp.constraints.len(),
            })
        }
        HierarchyCmd::Solve { args, backend, export } => {
            let b = match (backend, export) {
                (BackendArg::Export, Some(p)) => Backend::Export(p),
                (BackendArg::Export, None) => return Err(CliError::Usage("--backend export needs --export FILE".into())),
                (_, Some(_)) => return Err(CliError::Usage("--export requires --backend export".into())),
                (BackendArg::Interior, None) => Backend::Interior,
                (BackendArg::Splitting, None) => Backend::Splitting,
            };
            let mp = moment_problem(&args)?;
            let opts = SolveOptions {
                tol: cfg.tol.unwrap_or(1e-8),
                max_iters: cfg.max_iters,
                cap: cfg.cap,
            };
            to_value(&solve_hierarchy_with(&mp, &b, &opts)?)
        }
    }))
}

fn bound(score: f64, reports: Option<&Path>) -> Result<Output, CliError> {
    let mut v = json!({"score": score, "linear_epsilon": linear_eps(score)?});
    if let Some(dir) = reports {
        v["hierarchy"] = to_value(&brackets(&load_reports(dir)?, score));
    }
    Ok(Output::Json(v))
}

fn table1() -> Result<Output, CliError> {
    let mut t = Table::new(&["score", "epsilon", "percent"]);
    for (b, e, pct) in table1_row()? {
        t.push(vec![json!(b), json!(e), json!(pct)]);
    }
    Ok(Output::Table(t))
}

fn experiments(scores: Option<Vec<f64>>, reports: Option<&Path>) -> Result<Output, CliError> {
    let saved = reports.map(load_reports).transpose()?;
    let mut t = Table::new(&["score", "linear_epsilon", "level", "dsep_above", "consistent_from"]);
    for s in scores.unwrap_or_else(|| EXPERIMENT_SCORES.to_vec()) {
        let e = linear_eps(s)?;
        let bs = saved.as_deref().map(|r| brackets(r, s)).unwrap_or_default();
        if bs.is_empty() {
            t.push(vec![json!(s), json!(e), Value::Null, Value::Null, Value::Null]);
        }
        for b in bs {
            t.push(vec![json!(s), json!(e), json!(b.level), json!(b.dsep_above), json!(b.consistent_from)]);
        }
    }
    Ok(Output::Table(t))
}

fn reproduce(
    cfg: &RunConfig,
    only: Vec<String>,
    expected: Option<PathBuf>,
    extended: bool,
    artifacts: Option<PathBuf>,
) -> Result<Option<Output>, CliError> {
    acceptance::validate_only(&only)?;
    let mut exp = Expected::default();
    if let Some(p) = &expected {
        exp.apply_text(&read_input(p)?)?;
    }
    let opts = Options {
        seed: cfg.seed,
        extended,
        only,
        expected: exp,
        artifacts,
    };
    let results = acceptance::run(&opts, |r| println!("{}", r.line()))?;
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.passed())
        .map(|r| format!("{} ({})", r.number, r.failing_checks().join(", ")))
        .collect();
    let skipped = results
        .iter()
        .flat_map(|r| &r.checks)
        .filter(|c| c.status == CheckStatus::Skip)
        .count();
    println!(
        "{} of {} criteria passed; {skipped} non-gating checks skipped",
        results.len() - failed.len(),
        results.len()
    );
    if cfg.output.is_some() {
        let mut t = Table::new(&["criterion", "module", "check", "measured", "expected", "status", "gating", "note"]);
        for r in &results {
            for c in &r.checks {
                t.push(vec![
                    json!(r.number),
                    json!(r.module),
                    json!(c.id),
                    json!(c.measured),
                    json!(c.expected),
                    to_value(&c.status),
                    json!(c.gating),
                    json!(c.note),
                ]);
            }
        }
        emit(&Output::Table(t), cfg)?;
    }
    if !failed.is_empty() {
        return Err(CliError::Acceptance(format!("failing criteria: {}", failed.join("; "))));
    }
    Ok(None)
}

fn emit(out: &Output, cfg: &RunConfig) -> Result<(), CliError> {
    let text = render(out, cfg.format)?;
    match &cfg.output {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = config(&cli.global)?;
    if let Some(j) = cfg.jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let out = match cli.cmd {
        Cmd::Bell(c) => Some(bell(c, &cfg)?),
        Cmd::Measures(c) => Some(measures(c, &cfg)?),
        Cmd::Sim(c) => Some(sim(c)?),
        Cmd::Hierarchy(c) => Some(hierarchy(c, &cfg)?),
        Cmd::Bound { score, reports } => Some(bound(score, reports.as_deref())?),
        Cmd::Table1 => Some(table1()?),
        Cmd::Experiments { scores, reports } => Some(experiments(scores, reports.as_deref())?),
        Cmd::Reproduce {
            only,
            expected,
            extended,
            artifacts,
        } => reproduce(&cfg, only, expected, extended, artifacts)?,
    };
    if let Some(o) = out {
        emit(&o, &cfg)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rqlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
