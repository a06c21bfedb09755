//! The acceptance suite. Each criterion runs a list of checks against expected
//! values (overridable from a flat `key = value` file) at fixed tolerances.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rqlab_core::bellnet::{
    behavior_from_strategy, bell_score, best_of_seeds, build_optimal_complex_strategy, complex_optimum,
    optimal_network_strategy,
};
use rqlab_core::hierarchy::{
    build_basis, build_moment_problem, solve_hierarchy, Backend, MomentProblem, PartyLabel,
};
use rqlab_core::measures::{
    dind_bounds_with, dsep_two_rebit, ef_two_rebit, monotonicity_harness, trace_distance_dpi, DindSettings, FreeOp,
    Measure,
};
use rqlab_core::qmat::consts::{basis_state, phi_minus, phi_plus, psi_minus, psi_plus};
use rqlab_core::qmat::random::{complex_state, povm, real_channel, seeded};
use rqlab_core::qmat::{apply_local, eigvalsh, DensityMatrix, Field, Operator};
use rqlab_core::realsim::{
    broadcast, complexified_choi, complexify_and_check_cp, frame_state, lift_state, simulate_measurement,
    simulate_network, simulate_network_model,
};
use rqlab_sdp::sdpa::read_sdpa_file;
use rqlab_sdp::{BlockKind, SdpProblem};
use rand::Rng;
use serde::Serialize;

use crate::config::parse_flat;
use crate::reports::{linear_eps, table1_row};
use crate::CliError;

/// Value of the separable-set Bell bound used as the hierarchy target.
const REAL_BOUND: f64 = 7.66;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Not run (for example an extended, non-gating step).
    Skip,
    /// Reported for context; never gating.
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub id: String,
    pub measured: Option<f64>,
    pub expected: String,
    pub status: CheckStatus,
    pub gating: bool,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub number: u32,
    pub title: &'static str,
    pub module: &'static str,
    pub checks: Vec<Check>,
    pub seconds: f64,
    pub error: Option<String>,
}

impl CriterionResult {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| !c.gating || c.status != CheckStatus::Fail)
    }

    pub fn failing_checks(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| c.gating && c.status == CheckStatus::Fail)
            .map(|c| c.id.as_str())
            .collect()
    }

    /// One summary line.
    pub fn line(&self) -> String {
        let mut parts: Vec<String> = self
            .checks
            .iter()
            .map(|c| {
                let m = c.measured.map_or_else(|| "-".to_string(), |v| format!("{v:.10}"));
                let tag = match (c.status, c.gating) {
                    (CheckStatus::Fail, false) => "FAIL, non-gating".to_string(),
                    (s, _) => format!("{s:?}").to_uppercase(),
                };
                format!("{} = {m} [want {}] {tag}", c.id, c.expected)
            })
            .collect();
        if let Some(e) = &self.error {
            parts.push(format!("error: {e}"));
        }
        format!(
            "{} criterion {:>2} {} ({:.1} s): {}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.number,
            self.title,
            self.seconds,
            parts.join("; ")
        )
    }
}

/// Expected values by check id.
#[derive(Clone, Debug, PartialEq)]
pub struct Expected {
    values: BTreeMap<String, f64>,
}

impl Default for Expected {
    fn default() -> Self {
        let q = complex_optimum();
        let mut v: Vec<(String, f64)> = vec![
            ("c1.seesaw_best".into(), q),
            ("c1.optimal".into(), q),
            ("c1.runtime_s".into(), 60.0),
            ("c2.dsep".into(), 0.5),
            ("c2.dind_lower".into(), 0.5),
            ("c2.dind_upper".into(), 0.5),
            ("c2.runtime_s".into(), 5.0),
            ("c3.ef_rho_bar".into(), 1.0),
            ("c3.ef_00".into(), 0.0),
            ("c4.runtime_s".into(), 1.0),
            ("c5.dsep_phi_plus".into(), 0.5),
            ("c5.dsep_phi_minus".into(), 0.5),
            ("c5.dsep_psi_plus".into(), 0.5),
            ("c5.dsep_psi_minus".into(), 0.5),
            ("c6.prob_err".into(), 1e-10),
            ("c6.network_score".into(), q),
            ("c6.preshared_err".into(), 1e-12),
            ("c6.frame_ac_err".into(), 1e-12),
            ("c7.broadcast_err".into(), 1e-12),
            ("c7.lift_commute_err".into(), 1e-12),
            ("c8.frame_err".into(), 1e-10),
            ("c9.td_violations".into(), 0.0),
            ("c9.dsep_violations".into(), 0.0),
            ("c10.min_choi_eig".into(), -1e-9),
            ("c10.transpose_min_eig".into(), -1e-9),
            ("c11.level2_block".into(), 370.0),
            ("c11.bound_eps0.min".into(), REAL_BOUND),
            ("c11.bound_eps0.max".into(), 12.0),
            ("c11.monotone_min_step".into(), -1e-5),
            ("c11.runtime_s".into(), 600.0),
            ("c12.level2_splitting".into(), REAL_BOUND),
            ("c13.linear_8.09".into(), 0.0253),
            ("c13.linear_7.83".into(), 0.0100),
        ];
        let row = [0.0, 0.4, 0.7, 1.3, 2.4, 3.3, 4.2, 4.9];
        for (b, e) in crate::reports::TABLE1_SCORES.iter().zip(row) {
            v.push((format!("c4.eps2_{b:.2}"), e));
        }
        Expected {
            values: v.into_iter().collect(),
        }
    }
}

impl Expected {
    /// Overrides from a flat file; unknown ids and non-numeric values are errors.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (k, v) in parse_flat(text)? {
            let slot = self
                .values
                .get_mut(&k)
                .ok_or_else(|| CliError::Config(format!("unknown expected-value id '{k}'")))?;
            *slot = v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::Config(format!("bad expected value '{v}' for {k}")))?;
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> f64 {
        *self.values.get(id).unwrap_or_else(|| panic!("no expected value for {id}"))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(|k| k.as_str())
    }
}

#[derive(Clone, Debug, Default)]
pub struct Options {
    pub seed: u64,
    /// Also run the hours-scale, non-gating level-2 splitting solve.
    pub extended: bool,
    /// Module names or criterion numbers; empty runs everything.
    pub only: Vec<String>,
    pub expected: Expected,
    /// Where exported instances are written; a temporary directory otherwise.
    pub artifacts: Option<PathBuf>,
}

struct Ctx<'a> {
    exp: &'a Expected,
    checks: Vec<Check>,
}

impl Ctx<'_> {
    fn push(&mut self, id: &str, measured: Option<f64>, expected: String, status: CheckStatus, gating: bool, note: &str) {
        self.checks.push(Check {
            id: id.into(),
            measured,
            expected,
            status,
            gating,
            note: note.into(),
        });
    }

    fn status(ok: bool) -> CheckStatus {
        if ok {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        }
    }

    fn near(&mut self, id: &str, m: f64, tol: f64) {
        let e = self.exp.get(id);
        let ok = (m - e).abs() <= tol;
        self.push(id, Some(m), format!("{e} +- {tol:e}"), Self::status(ok), true, "");
    }

    fn at_most(&mut self, id: &str, m: f64) {
        let e = self.exp.get(id);
        self.push(id, Some(m), format!("<= {e:e}"), Self::status(m <= e), true, "");
    }

    fn at_least(&mut self, id: &str, m: f64) {
        let e = self.exp.get(id);
        self.push(id, Some(m), format!(">= {e:e}"), Self::status(m >= e), true, "");
    }

    fn within(&mut self, id: &str, m: f64) {
        let (lo, hi) = (self.exp.get(&format!("{id}.min")), self.exp.get(&format!("{id}.max")));
        self.push(id, Some(m), format!("in [{lo}, {hi}]"), Self::status(lo <= m && m <= hi), true, "");
    }

    fn flag(&mut self, id: &str, ok: bool, note: &str) {
        self.push(id, None, "true".into(), Self::status(ok), true, note);
    }

    fn info(&mut self, id: &str, m: Option<f64>, note: &str) {
        self.push(id, m, "-".into(), CheckStatus::Info, false, note);
    }
}

type Run = fn(&mut Ctx, &Env) -> Result<(), CliError>;

struct Env {
    seed: u64,
    extended: bool,
    dir: PathBuf,
}

const CRITERIA: [(u32, &str, &str, Run); 13] = [
    (1, "optimal complex score", "bellnet", c1),
    (2, "self-test state distance", "measures", c2),
    (3, "entanglement of formation", "measures", c3),
    (4, "comparison-row eps2", "table1", c4),
    (5, "Bell-state distances", "measures", c5),
    (6, "real-simulation equivalence", "realsim", c6),
    (7, "broadcasting fixpoint", "realsim", c7),
    (8, "measurement preserves the frame", "realsim", c8),
    (9, "monotonicity suites", "measures", c9),
    (10, "complexification", "realsim", c10),
    (11, "hierarchy structure", "hierarchy", c11),
    (12, "level-2 instance export", "hierarchy", c12),
    (13, "linear bounds for the experiments", "measures", c13),
];

pub const MODULES: [&str; 5] = ["bellnet", "measures", "table1", "realsim", "hierarchy"];

fn selected(only: &[String], number: u32, module: &str) -> bool {
    only.is_empty() || only.iter().any(|o| o == module || o.parse::<u32>() == Ok(number))
}

/// Checks `--only` entries before anything runs.
pub fn validate_only(only: &[String]) -> Result<(), CliError> {
    for o in only {
        let known = MODULES.contains(&o.as_str()) || o.parse::<u32>().is_ok_and(|n| (1..=13).contains(&n));
        if !known {
            return Err(CliError::Usage(format!(
                "--only takes criterion numbers 1-13 or modules ({}), got '{o}'",
                MODULES.join(", ")
            )));
        }
    }
    Ok(())
}

/// Runs the selected criteria in order; `progress` sees each result as it finishes.
pub fn run(opts: &Options, mut progress: impl FnMut(&CriterionResult)) -> Result<Vec<CriterionResult>, CliError> {
    validate_only(&opts.only)?;
    let (dir, cleanup) = match &opts.artifacts {
        Some(d) => {
            std::fs::create_dir_all(d)?;
            (d.clone(), false)
        }
        None => {
            let d = std::env::temp_dir().join(format!("rqlab-acceptance-{}", std::process::id()));
            std::fs::create_dir_all(&d)?;
            (d, true)
        }
    };
    let env = Env {
        seed: opts.seed,
        extended: opts.extended,
        dir: dir.clone(),
    };
    let mut out = Vec::new();
    for (number, title, module, f) in CRITERIA {
        if !selected(&opts.only, number, module) {
            continue;
        }
        let mut ctx = Ctx {
            exp: &opts.expected,
            checks: Vec::new(),
        };
        let t = Instant::now();
        let error = f(&mut ctx, &env).err().map(|e| e.to_string());
        let seconds = t.elapsed().as_secs_f64();
        let limit = format!("c{number}.runtime_s");
        if opts.expected.ids().any(|k| k == limit) {
            ctx.at_most(&limit, seconds);
        }
        let r = CriterionResult {
            number,
            title,
            module,
            checks: ctx.checks,
            seconds,
            error,
        };
        progress(&r);
        out.push(r);
    }
    if cleanup {
        let _ = std::fs::remove_dir_all(&dir);
    }
    Ok(out)
}

fn rho_bar() -> DensityMatrix {
    let m = (phi_minus().op().as_real().expect("real") + psi_plus().op().as_real().expect("real")) * 0.5;
    DensityMatrix::real(vec![2, 2], m).expect("valid state")
}

fn c1(ctx: &mut Ctx, env: &Env) -> Result<(), CliError> {
    let (best, _) = best_of_seeds(Field::Complex, [2, 4, 2], env.seed..env.seed + 50, 500);
    ctx.near("c1.seesaw_best", best.report.total, 1e-6);
    let b = bell_score(&behavior_from_strategy(&build_optimal_complex_strategy())?).total;
    ctx.near("c1.optimal", b, 1e-6);
    Ok(())
}

fn c2(ctx: &mut Ctx, env: &Env) -> Result<(), CliError> {
    let rho = rho_bar();
    ctx.near("c2.dsep", dsep_two_rebit(&rho)?.distance, 1e-6);
    let s = DindSettings {
        seed: env.seed,
        ..DindSettings::default()
    };
    let b = dind_bounds_with(&rho, &s)?;
    ctx.near("c2.dind_lower", b.lower, 1e-5);
    ctx.near("c2.dind_upper", b.upper, 1e-5);
    Ok(())
}

fn c3(ctx: &mut Ctx, _: &Env) -> Result<(), CliError> {
    ctx.near("c3.ef_rho_bar", ef_two_rebit(&rho_bar())?, 1e-12);
    ctx.near("c3.ef_00", ef_two_rebit(&basis_state(vec![2, 2], 0))?, 1e-12);
    Ok(())
}

fn c4(ctx: &mut Ctx, _: &Env) -> Result<(), CliError> {
    for (b, _, pct) in table1_row()? {
        ctx.near(&format!("c4.eps2_{b:.2}"), pct, 1e-9);
    }
    Ok(())
}

fn c5(ctx: &mut Ctx, _: &Env) -> Result<(), CliError> {
    for (name, s) in [("phi_plus", phi_plus()), ("phi_minus", phi_minus()), ("psi_plus", psi_plus()), ("psi_minus", psi_minus())] {
        ctx.near(&format!("c5.dsep_{name}"), dsep_two_rebit(&s)?.distance, 1e-6);
    }
    Ok(())
}

fn born(rho: &DensityMatrix, e: &[Operator], sites: &[usize]) -> Vec<f64> {
    e.iter()
        .map(|x| apply_local(x, rho.op(), rho.dims(), sites).trace_re())
        .collect()
}

fn random_sites(rng: &mut impl Rng) -> Vec<usize> {
    match rng.random_range(0..3) {
        0 => vec![0],
        1 => vec![1],
        _ => vec![0, 1],
    }
}

fn c6(ctx: &mut Ctx, env: &Env) -> Result<(), CliError> {
    let mut rng = seeded(env.seed ^ 0x6);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let dims = vec![rng.random_range(2..=4), rng.random_range(2..=4)];
        let n = rng.random_range(1..=2);
        let rho = complex_state(&dims, &mut rng);
        let sites = random_sites(&mut rng);
        let d: usize = sites.iter().map(|&k| dims[k]).product();
        let outcomes = rng.random_range(2..=4);
        let e = povm(d, outcomes, Field::Complex, &mut rng);
        let sim = simulate_measurement(&lift_state(&rho, n)?, &e, &sites)?;
        for (p, q) in born(&rho, &e, &sites).iter().zip(&sim.probs) {
            worst = worst.max((p - q).abs());
        }
    }
    ctx.at_most("c6.prob_err", worst);

    let ns = optimal_network_strategy();
    let (p, audit) = simulate_network(&ns)?;
    ctx.near("c6.network_score", bell_score(&p).total, 1e-6);
    ctx.flag("c6.local_operations", audit.locality_violations == 0, "audit records no non-local step");
    let rb = rho_bar();
    let rb = rb.op().as_real().expect("real");
    let pre = frame_state(2)?;
    ctx.at_most("c6.preshared_err", (pre.op().as_real().expect("real") - rb).amax());
    let ac = simulate_network_model(&ns)?.frame_marginal(&[0, 2])?;
    ctx.at_most("c6.frame_ac_err", (ac.op().as_real().expect("real") - rb).amax());
    Ok(())
}

fn c7(ctx: &mut Ctx, env: &Env) -> Result<(), CliError> {
    let mut worst = 0.0f64;
    for n in 1..=6 {
        let f = frame_state(n)?;
        let next = frame_state(n + 1)?;
        for site in 0..n {
            worst = worst.max(broadcast(&f, site)?.op().max_abs_diff(next.op()));
        }
    }
    ctx.at_most("c7.broadcast_err", worst);
    let mut rng = seeded(env.seed ^ 0x7);
    let mut worst = 0.0f64;
    for n in 1..=4 {
        for dims in [vec![2], vec![3], vec![2, 2]] {
            let rho = complex_state(&dims, &mut rng);
            let l = lift_state(&rho, n)?;
            let up = lift_state(&rho, n + 1)?;
            for k in 0..n {
                worst = worst.max(l.broadcast(k)?.carrier.op().max_abs_diff(up.carrier.op()));
            }
        }
    }
    ctx.at_most("c7.lift_commute_err", worst);
    Ok(())
}

fn c8(ctx: &mut Ctx, env: &Env) -> Result<(), CliError> {
    let mut rng = seeded(env.seed ^ 0x8);
    let mut worst = 0.0f64;
    let mut kept = true;
    for _ in 0..200 {
        let dims = vec![rng.random_range(2..=3), rng.random_range(2..=3)];
        let n = rng.random_range(1..=3);
        let rho = complex_state(&dims, &mut rng);
        // Measure one factor so a post-measurement state remains.
        let site = rng.random_range(0..2);
        let e = povm(dims[site], rng.random_range(2..=3), Field::Complex, &mut rng);
        let sim = simulate_measurement(&lift_state(&rho, n)?, &e, &[site])?;
        let want = frame_state(n)?;
        for post in sim.post.iter().flatten() {
            kept &= post.n == n;
            worst = worst.max(post.frame_marginal()?.op().max_abs_diff(want.op()));
        }
    }
    ctx.flag("c8.frame_rebits_kept", kept, "every post-measurement state keeps n frame rebits");
    ctx.at_most("c8.frame_err", worst);
    Ok(())
}

fn c9(ctx: &mut Ctx, env: &Env) -> Result<(), CliError> {
    let td = trace_distance_dpi(200, env.seed)?;
    ctx.at_most("c9.td_violations", td.violations as f64);
    ctx.info("c9.td_max_increase", Some(td.max_increase), "largest change seen; violations count > 1e-9");
    let ds = monotonicity_harness(Measure::Dsep, FreeOp::LocalChannels, 200, env.seed)?;
    ctx.at_most("c9.dsep_violations", ds.violations as f64);
    ctx.info("c9.dsep_max_increase", Some(ds.max_increase), "largest change seen; violations count > 1e-6");
    Ok(())
}

fn c10(ctx: &mut Ctx, env: &Env) -> Result<(), CliError> {
    let mut rng = seeded(env.seed ^ 0xA);
    let mut worst = f64::INFINITY;
    for _ in 0..200 {
        let (di, d_out, k) = (rng.random_range(2..=3), rng.random_range(2..=3), rng.random_range(1..=4));
        let ch = real_channel(di, d_out, k, &mut rng);
        worst = worst.min(complexify_and_check_cp(&ch)?.1);
    }
    ctx.at_least("c10.min_choi_eig", worst);
    let choi = complexified_choi(2, |m| m.transpose());
    let min = eigvalsh(&Operator::Real(choi))?[0];
    ctx.at_most("c10.transpose_min_eig", min);
    Ok(())
}

/// Declared sizes and counts of an SDPA file against the builder's problem.
fn sdpa_matches(path: &Path, sdp: &SdpProblem) -> Result<bool, CliError> {
    let text = crate::read_input(path)?;
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('*') && !l.starts_with('"'));
    let m: usize = lines.next().and_then(|l| l.parse().ok()).unwrap_or(usize::MAX);
    let nb: usize = lines.next().and_then(|l| l.parse().ok()).unwrap_or(usize::MAX);
    let sizes: Vec<i64> = lines
        .next()
        .map(|l| {
            l.split(|c: char| c.is_whitespace() || c == ',' || c == '{' || c == '}' || c == '(' || c == ')')
                .filter(|t| !t.is_empty())
                .filter_map(|t| t.parse().ok())
                .collect()
        })
        .unwrap_or_default();
    let want: Vec<i64> = sdp
        .blocks
        .iter()
        .map(|b| match b.kind {
            BlockKind::Psd => b.size as i64,
            BlockKind::Diagonal => -(b.size as i64),
            BlockKind::Free => -(2 * b.size as i64),
        })
        .collect();
    let back = read_sdpa_file(path).map_err(rqlab_core::hierarchy::HierarchyError::from)?;
    let nnz = |p: &SdpProblem| {
        p.constraints
            .iter()
            .map(|c| c.terms.iter().map(|t| t.1.nnz()).sum::<usize>())
            .sum::<usize>()
    };
    Ok(m == sdp.constraints.len()
        && nb == sdp.blocks.len()
        && sizes == want
        && back.constraints.len() == m
        && nnz(&back) == nnz(sdp))
}

fn export_and_verify(mp: &MomentProblem, path: &Path) -> Result<bool, CliError> {
    solve_hierarchy(mp, &Backend::Export(path.to_path_buf()), 1e-3)?;
    sdpa_matches(path, &mp.to_sdp())
}

fn c11(ctx: &mut Ctx, env: &Env) -> Result<(), CliError> {
    let sizes: Vec<usize> = [(PartyLabel::Alice, 1), (PartyLabel::Alice, 2), (PartyLabel::Charlie, 1), (PartyLabel::Charlie, 2)]
        .iter()
        .map(|&(p, n)| build_basis(p, n).map(|b| b.len()))
        .collect::<Result<_, _>>()?;
    ctx.flag("c11.basis_sizes", sizes == [4, 10, 7, 37], &format!("{sizes:?}"));

    let mp2 = build_moment_problem(2, 0.0, None)?;
    let d = mp2.dim;
    ctx.near("c11.level2_block", d as f64, 0.0);
    ctx.flag("c11.level2_blocks", mp2.block_sizes() == vec![d, d, d, d, d, 2 * d], &format!("{:?}", mp2.block_sizes()));
    drop(mp2);

    let mut bounds = Vec::new();
    for eps in [0.0, 0.1, 0.3, 0.5] {
        let r = solve_hierarchy(&build_moment_problem(1, eps, None)?, &Backend::Interior, 1e-8)?;
        bounds.push(r.bound.expect("solved"));
    }
    ctx.within("c11.bound_eps0", bounds[0]);
    let step = bounds.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    ctx.at_least("c11.monotone_min_step", step);

    let fixed = behavior_from_strategy(&build_optimal_complex_strategy())?;
    let l1 = solve_hierarchy(&build_moment_problem(1, 0.0, Some(&fixed))?, &Backend::Interior, 1e-8)?;
    ctx.info(
        "c11.level1_min_eps",
        l1.bound,
        "smallest feasible eps for the 6 sqrt2 behavior at level 1; ~0 means level 1 does not reject it",
    );
    let mp = build_moment_problem(2, 0.0, Some(&fixed))?;
    let pinned = mp.p_map.iter().zip(fixed.raw()).all(|(e, v)| e.is_constant() && (e.c - v).abs() < 1e-12);
    let ok = export_and_verify(&mp, &env.dir.join("level2_feasibility_eps0.dat-s"))?;
    ctx.flag(
        "c11.feasibility_export",
        pinned && ok,
        "level-2 instance with the 6 sqrt2 behavior pinned at eps = 0, exported and structure verified; not solved here",
    );
    Ok(())
}

fn c12(ctx: &mut Ctx, env: &Env) -> Result<(), CliError> {
    let mp = build_moment_problem(2, 0.0, None)?;
    let ok = export_and_verify(&mp, &env.dir.join("level2_eps0.dat-s"))?;
    ctx.flag("c12.export_structure", ok, "declared dimensions, block sizes and entry count match the builder");
    if env.extended {
        let id = "c12.level2_splitting";
        match solve_hierarchy(&mp, &Backend::Splitting, 1e-3) {
            Ok(r) => {
                let b = r.bound.expect("solved");
                let e = ctx.exp.get(id);
                let status = Ctx::status((b - e).abs() <= 0.1);
                ctx.push(id, Some(b), format!("{e} +- 1e-1"), status, false, "extended, non-gating");
            }
            Err(err) => ctx.push(id, None, "7.66 +- 1e-1".into(), CheckStatus::Fail, false, &err.to_string()),
        }
    } else {
        ctx.push(
            "c12.level2_splitting",
            None,
            "7.66 +- 1e-1".into(),
            CheckStatus::Skip,
            false,
            "hours-scale splitting solve, run with --extended",
        );
    }
    Ok(())
}

fn c13(ctx: &mut Ctx, _: &Env) -> Result<(), CliError> {
    ctx.near("c13.linear_8.09", linear_eps(8.09)?, 5e-5);
    ctx.near("c13.linear_7.83", linear_eps(7.83)?, 5e-5);
    ctx.push(
        "c13.hierarchy_statements",
        None,
        "-".into(),
        CheckStatus::Skip,
        false,
        "the 0.2 and 0.05 distance statements need level-2 solves; see the criterion 12 export",
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expected_overrides() {
        let mut e = Expected::default();
        e.apply_text("c2.dsep = 0.4\n").unwrap();
        assert_eq!(e.get("c2.dsep"), 0.4);
        assert!(matches!(e.apply_text("c2.nope = 1"), Err(CliError::Config(_))));
        assert!(matches!(e.apply_text("c2.dsep = abc"), Err(CliError::Config(_))));
        assert!(matches!(e.apply_text("garbage"), Err(CliError::Config(_))));
    }

    #[test]
    fn only_filter() {
        assert!(validate_only(&["measures".into(), "4".into()]).is_ok());
        assert!(validate_only(&["14".into()]).is_err());
        assert!(validate_only(&["physics".into()]).is_err());
        assert!(selected(&["measures".into()], 2, "measures"));
        assert!(!selected(&["measures".into()], 1, "bellnet"));
        assert!(selected(&["1".into()], 1, "bellnet"));
    }

    #[test]
    fn fast_criteria_pass() {
        let opts = Options {
            only: vec!["3".into(), "4".into(), "13".into()],
            ..Options::default()
        };
        let rs = run(&opts, |_| {}).unwrap();
        assert_eq!(rs.iter().map(|r| r.number).collect::<Vec<_>>(), vec![3, 4, 13]);
        assert!(rs.iter().all(|r| r.passed()), "{:?}", rs.iter().map(|r| r.line()).collect::<Vec<_>>());

        let mut wrong = Expected::default();
        wrong.apply_text("c3.ef_rho_bar = 0.9").unwrap();
        let rs = run(
            &Options {
                only: vec!["3".into()],
                expected: wrong,
                ..Options::default()
            },
            |_| {},
        )
        .unwrap();
        assert!(!rs[0].passed());
        assert_eq!(rs[0].failing_checks(), vec!["c3.ef_rho_bar"]);
        assert!(rs[0].line().starts_with("FAIL criterion  3"));
    }
}
