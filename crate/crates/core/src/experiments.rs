//! The five scenario-driven experiments. Each run returns its output files
//! in memory together with the lines to print, so callers decide where (and
//! whether) to write them.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use num_rational::Rational64;
use serde::Serialize;
use serde_json::Value;

use crate::divisors::{fit_generalized_bound, gram_diophantine_probe, survey_divisors};
use crate::error::{Error, Result};
use crate::grid::{unravel, BoxGrid, SpectralShifter, C64};
use crate::lattice::{Closure, ModeSet, WaveVector};
use crate::pipeline::{remainder_report, run_convergence, run_instability, ProfileInput, RowStatus, TorusScenario};
use crate::profile::{
    explicit_euclid_1d, explicit_torus_1d, explicit_two_mode, integrate_euclid, total_mass_euclid, total_mass_torus,
    EuclidMode, ProfileStateEuclid, Record, SimParams, TorusIntegrator,
};
use crate::report::{box_trajectory_bytes, fmt_f64, fmt_opt, write_atomic, Csv, Report};
use crate::scenario::{Domain, Experiment, ProfileSpec, Scenario, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Closure,
    Profiles,
    Converge,
    Instability,
    Smalldiv,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Closure => "closure",
            Command::Profiles => "profiles",
            Command::Converge => "converge",
            Command::Instability => "instability",
            Command::Smalldiv => "smalldiv",
        }
    }
}

/// Closed forms the profiles command can compare against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Oracle {
    ExplicitTorus1d,
    ExplicitTwoMode,
    ExplicitEuclid1d,
}

impl Oracle {
    pub fn name(self) -> &'static str {
        match self {
            Oracle::ExplicitTorus1d => "explicit_torus_1d",
            Oracle::ExplicitTwoMode => "explicit_two_mode",
            Oracle::ExplicitEuclid1d => "explicit_euclid_1d",
        }
    }
}

impl FromStr for Oracle {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "explicit_torus_1d" => Ok(Oracle::ExplicitTorus1d),
            "explicit_two_mode" => Ok(Oracle::ExplicitTwoMode),
            "explicit_euclid_1d" => Ok(Oracle::ExplicitEuclid1d),
            _ => Err(format!(
                "unknown oracle {s:?} (expected explicit_torus_1d, explicit_two_mode or explicit_euclid_1d)"
            )),
        }
    }
}

impl fmt::Display for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub jobs: usize,
    pub oracle: Option<Oracle>,
    /// Fail the converge command when the fitted sup-norm order is below this.
    pub assert_order: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            jobs: 1,
            oracle: None,
            assert_order: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    /// Human-readable result lines.
    pub summary: Vec<String>,
    pub warnings: Vec<String>,
    /// Failed assertions; a nonempty list means a nonzero exit status.
    pub failures: Vec<String>,
}

impl RunOutput {
    fn file(&mut self, name: &str, bytes: Vec<u8>) {
        self.artifacts.push(Artifact {
            name: name.into(),
            bytes,
        });
    }

    pub fn artifact(&self, name: &str) -> Option<&[u8]> {
        self.artifacts.iter().find(|a| a.name == name).map(|a| a.bytes.as_slice())
    }

    /// Writes every artifact atomically under `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        for a in &self.artifacts {
            write_atomic(&dir.join(&a.name), &a.bytes)?;
        }
        Ok(())
    }
}

/// Runs `command` on `scenario`. `closure` accepts any scenario; the other
/// commands require the matching experiment block.
pub fn run(command: Command, scenario: &Scenario, opts: &RunOptions) -> Result<RunOutput> {
    let block = scenario.experiment.name();
    if command != Command::Closure && command.name() != block {
        return Err(Error::Scenario(format!(
            "command {} needs an experiment.{} block, scenario has experiment.{block}",
            command.name(),
            command.name()
        )));
    }
    if opts.jobs == 0 {
        return Err(Error::InvalidParameter("jobs must be at least 1".into()));
    }
    if opts.oracle.is_some() && command != Command::Profiles {
        return Err(Error::InvalidParameter("--oracle applies to the profiles command only".into()));
    }
    let start = Instant::now();
    let mut report = Report::new(command.name(), scenario);
    let mut out = RunOutput::default();
    match command {
        Command::Closure => closure(scenario, &mut report, &mut out)?,
        Command::Profiles => profiles(scenario, opts, &mut report, &mut out)?,
        Command::Converge => converge(scenario, opts, &mut report, &mut out)?,
        Command::Instability => instability(scenario, &mut report, &mut out)?,
        Command::Smalldiv => smalldiv(scenario, &mut report, &mut out)?,
    }
    report.set("warnings", &out.warnings)?;
    report.set("failures", &out.failures)?;
    report.runtime("total", start.elapsed().as_secs_f64());
    out.file("report.json", report.to_json().into_bytes());
    Ok(out)
}

/// A lattice vector of `modes` back in user units.
fn user(modes: &ModeSet, v: &WaveVector) -> Vector {
    Vector(v.coords().iter().map(|&c| Rational64::new(c, modes.scale())).collect())
}

fn vector_text(v: &Vector) -> String {
    let parts: Vec<String> = v.0.iter().map(|c| c.to_string()).collect();
    format!("({})", parts.join(", "))
}

#[derive(Serialize)]
struct ModeDocument {
    dimension: usize,
    sigma: u32,
    vectors: Vec<Vector>,
    generations: Vec<u32>,
    saturated: bool,
}

fn mode_document(modes: &ModeSet) -> ModeDocument {
    ModeDocument {
        dimension: modes.dim(),
        sigma: modes.sigma(),
        vectors: modes.vectors().iter().map(|v| user(modes, v)).collect(),
        generations: modes.generations().to_vec(),
        saturated: modes.saturated(),
    }
}

fn closed_modes(scenario: &Scenario, out: &mut RunOutput) -> Result<Closure> {
    let closure = scenario.closure()?;
    if !closure.modes.saturated() {
        let msg = format!(
            "closure not saturated within {} generations and |κ|∞ ≤ {}; {} vectors rejected by the sup-norm limit",
            scenario.closure_limits.max_generations,
            scenario.closure_limits.max_sup_norm,
            closure.truncated.len()
        );
        out.warnings.push(msg);
    }
    Ok(closure)
}

fn closure(scenario: &Scenario, report: &mut Report, out: &mut RunOutput) -> Result<()> {
    let c = closed_modes(scenario, out)?;
    let m = &c.modes;
    let mut edges = Csv::new(&["generation", "tuple", "created"]);
    #[derive(Serialize)]
    struct Created {
        vector: Vector,
        generation: u32,
        tuple: Vec<Vector>,
    }
    let mut created = Vec::new();
    for e in &c.edges {
        let tuple: Vec<Vector> = e.tuple.iter().map(|v| user(m, v)).collect();
        let text: Vec<String> = tuple.iter().map(vector_text).collect();
        let v = user(m, &e.created);
        edges.row(&[e.generation.to_string(), text.join(" "), vector_text(&v)]);
        out.summary
            .push(format!("created {} at generation {}", vector_text(&v), e.generation));
        created.push(Created {
            vector: v,
            generation: e.generation,
            tuple,
        });
    }
    if created.is_empty() && m.saturated() {
        out.summary.push("saturated, no new vectors".into());
    } else {
        out.summary.push(format!(
            "{} modes, {}",
            m.len(),
            if m.saturated() { "saturated" } else { "not saturated" }
        ));
    }
    let truncated: Vec<Vector> = c.truncated.iter().map(|v| user(m, v)).collect();
    report.set("modes", &mode_document(m))?;
    report.set("created", &created)?;
    report.set("truncated", &truncated)?;
    out.file("modes.json", pretty(&mode_document(m))?);
    out.file("closure_edges.csv", edges.into_bytes());
    Ok(())
}

fn pretty<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn profiles(scenario: &Scenario, opts: &RunOptions, report: &mut Report, out: &mut RunOutput) -> Result<()> {
    let Experiment::Profiles(px) = &scenario.experiment else {
        unreachable!("checked by run")
    };
    let c = closed_modes(scenario, out)?;
    let m = &c.modes;
    let params = SimParams::new(scenario.lambda, scenario.sigma, px.t_final, px.dt)?;
    report.set("modes", &mode_document(m))?;
    match scenario.domain {
        Domain::Torus => {
            let alpha = scenario.torus_amplitudes(m)?;
            let traj = TorusIntegrator::new(m).run(&alpha, &params)?;
            let mut csv = Csv::new(&["t", "j", "re", "im"]);
            let last = traj.len() - 1;
            for (s, state) in traj.iter().enumerate() {
                if s % px.record_stride != 0 && s != last {
                    continue;
                }
                for (j, a) in state.amps.iter().enumerate() {
                    csv.row(&[fmt_f64(state.t), j.to_string(), fmt_f64(a.re), fmt_f64(a.im)]);
                }
            }
            out.file("trajectory.csv", csv.into_bytes());
            let m0 = total_mass_torus(&traj[0]);
            let drift = traj
                .iter()
                .map(|s| (total_mass_torus(s) - m0).abs())
                .fold(0.0, f64::max)
                / m0.max(f64::MIN_POSITIVE);
            let fin = &traj[last];
            out.summary.push(format!("{} modes integrated to t = {}", m.len(), fin.t));
            out.summary.push(format!("relative mass drift {drift:.3e}"));
            report.set("final", &final_amplitudes(m, &fin.amps))?;
            report.set("mass_drift", &drift)?;
            report.set("remainder", &remainder_report(ProfileInput::Torus(fin), m)?)?;
            if let Some(oracle) = opts.oracle {
                let dev = torus_oracle(oracle, scenario, m, &alpha, &traj)?;
                out.summary.push(format!("oracle {oracle}: max deviation {dev:.3e}"));
                report.set("oracle", &serde_json::json!({"name": oracle.name(), "max_deviation": dev}))?;
            }
        }
        Domain::Euclid { .. } => {
            let grid = scenario.box_grid()?;
            let state = ProfileStateEuclid {
                grid,
                fields: scenario.euclid_fields(m)?,
                t: 0.0,
            };
            let frames = integrate_euclid(&state, m, &params, Record::Stride(px.record_stride))?;
            let mut csv = Csv::new(&["t", "j", "l2", "sup"]);
            for f in &frames {
                let w = grid.dx().powi(grid.d as i32);
                for (j, field) in f.fields.iter().enumerate() {
                    let l2 = (field.iter().map(C64::norm_sqr).sum::<f64>() * w).sqrt();
                    let sup = field.iter().map(|z| z.norm()).fold(0.0, f64::max);
                    csv.row(&[fmt_f64(f.t), j.to_string(), fmt_f64(l2), fmt_f64(sup)]);
                }
            }
            out.file("profile_norms.csv", csv.into_bytes());
            out.file("trajectory.bin", box_trajectory_bytes(&grid, &frames));
            let m0 = total_mass_euclid(&frames[0]);
            let drift = frames
                .iter()
                .map(|s| (total_mass_euclid(s) - m0).abs())
                .fold(0.0, f64::max)
                / m0.max(f64::MIN_POSITIVE);
            let fin = frames.last().expect("at least the final frame");
            let times: Vec<f64> = frames.iter().map(|f| f.t).collect();
            let transported = transported_boundary(&state, m, &times)?;
            if transported > BOUNDARY_DECAY {
                out.warnings.push(format!(
                    "transported profiles reach {transported:.2e} at the box boundary (limit {BOUNDARY_DECAY:e}); enlarge the box"
                ));
            }
            let edge = boundary_magnitude(fin);
            out.summary.push(format!("{} modes integrated to t = {}", m.len(), fin.t));
            out.summary.push(format!("relative mass drift {drift:.3e}"));
            report.set("mass_drift", &drift)?;
            report.set("boundary_transported", &transported)?;
            report.set("boundary_magnitude", &edge)?;
            report.set("remainder", &remainder_report(ProfileInput::Euclid(fin), m)?)?;
            if let Some(oracle) = opts.oracle {
                let dev = euclid_oracle(oracle, scenario, m, fin, px.dt)?;
                out.summary.push(format!("oracle {oracle}: max deviation {dev:.3e}"));
                report.set("oracle", &serde_json::json!({"name": oracle.name(), "max_deviation": dev}))?;
            }
        }
    }
    Ok(())
}

fn final_amplitudes(m: &ModeSet, amps: &[C64]) -> Value {
    Value::Array(
        amps.iter()
            .enumerate()
            .map(|(j, a)| {
                serde_json::json!({
                    "vector": user(m, m.vector(j)),
                    "amplitude": [a.re, a.im],
                    "modulus": a.norm(),
                })
            })
            .collect(),
    )
}

/// Largest boundary value the box may carry before it stops standing in for
/// the whole space.
pub const BOUNDARY_DECAY: f64 = 1e-12;

/// Largest boundary value of the initial profiles carried along their
/// transport, α_j(x − tκ_j), over `times`. One spectral shift per value, so
/// this measures the data and not accumulated rounding.
fn transported_boundary(initial: &ProfileStateEuclid, m: &ModeSet, times: &[f64]) -> Result<f64> {
    let grid = initial.grid;
    let mut shifter = SpectralShifter::new(grid)?;
    let mut buf = vec![C64::new(0.0, 0.0); grid.len()];
    let mut worst: f64 = 0.0;
    for &t in times {
        for (j, f) in initial.fields.iter().enumerate() {
            let shift: Vec<f64> = m.user_vector(j).iter().map(|k| k * t).collect();
            shifter.shift(f, &shift, &mut buf);
            worst = worst.max(boundary_max(&grid, &buf));
        }
    }
    Ok(worst)
}

/// Largest |f| on the first grid layer of any axis.
fn boundary_max(grid: &BoxGrid, field: &[C64]) -> f64 {
    let mut bins = vec![0usize; grid.d];
    let mut worst: f64 = 0.0;
    for (flat, z) in field.iter().enumerate() {
        unravel(flat, grid.d, grid.n, &mut bins);
        if bins.contains(&0) {
            worst = worst.max(z.norm());
        }
    }
    worst
}

fn boundary_magnitude(state: &ProfileStateEuclid) -> f64 {
    state
        .fields
        .iter()
        .map(|f| boundary_max(&state.grid, f))
        .fold(0.0, f64::max)
}

fn torus_oracle(
    oracle: Oracle,
    scenario: &Scenario,
    m: &ModeSet,
    alpha: &[C64],
    traj: &[crate::profile::ProfileStateTorus],
) -> Result<f64> {
    let lambda = scenario.lambda;
    let exact: Box<dyn Fn(f64) -> Vec<C64>> = match oracle {
        Oracle::ExplicitTorus1d => {
            if m.dim() != 1 || m.sigma() != 1 {
                return Err(Error::InvalidParameter(
                    "explicit_torus_1d needs dimension 1 and σ = 1".into(),
                ));
            }
            Box::new(move |t| explicit_torus_1d(alpha, lambda, t))
        }
        Oracle::ExplicitTwoMode => {
            if m.len() != 2 {
                return Err(Error::InvalidParameter(format!(
                    "explicit_two_mode needs a closed set of two modes, found {}",
                    m.len()
                )));
            }
            let sigma = m.sigma();
            Box::new(move |t| {
                let (a, b) = explicit_two_mode(alpha[0], alpha[1], sigma, lambda, t);
                vec![a, b]
            })
        }
        Oracle::ExplicitEuclid1d => {
            return Err(Error::InvalidParameter("explicit_euclid_1d needs a euclid domain".into()))
        }
    };
    Ok(traj
        .iter()
        .map(|s| {
            exact(s.t)
                .iter()
                .zip(&s.amps)
                .map(|(e, a)| (e - a).norm())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max))
}

fn euclid_oracle(oracle: Oracle, scenario: &Scenario, m: &ModeSet, fin: &ProfileStateEuclid, dt: f64) -> Result<f64> {
    if oracle != Oracle::ExplicitEuclid1d {
        return Err(Error::InvalidParameter(format!("{oracle} needs a torus domain")));
    }
    if m.dim() != 1 || m.sigma() != 1 {
        return Err(Error::InvalidParameter("explicit_euclid_1d needs dimension 1 and σ = 1".into()));
    }
    if m.len() != scenario.initial_modes.len() {
        return Err(Error::InvalidParameter(
            "explicit_euclid_1d needs a closure that creates no modes".into(),
        ));
    }
    // profiles in mode order, each as an analytic function of x
    let mut specs: Vec<Option<(f64, f64, C64)>> = vec![None; m.len()];
    for spec in &scenario.initial_modes {
        let kappa = spec.vector.0[0];
        let lattice = kappa * Rational64::from_integer(m.scale());
        let j = m
            .index_of(&[lattice.to_integer()])
            .ok_or_else(|| Error::ModeSetMismatch("initial vector missing".into()))?;
        match &spec.profile {
            Some(ProfileSpec::Gaussian {
                center,
                width,
                amplitude,
            }) => specs[j] = Some((center[0], *width, C64::new(amplitude[0], amplitude[1]))),
            _ => {
                return Err(Error::InvalidParameter(
                    "explicit_euclid_1d needs gaussian profiles".into(),
                ))
            }
        }
    }
    let funcs: Vec<Box<dyn Fn(f64) -> C64>> = specs
        .into_iter()
        .map(|s| {
            let (c, w, a) = s.expect("every mode has a profile");
            Box::new(move |x: f64| a * (-(x - c).powi(2) / (2.0 * w * w)).exp()) as Box<dyn Fn(f64) -> C64>
        })
        .collect();
    let modes: Vec<EuclidMode<'_>> = funcs
        .iter()
        .enumerate()
        .map(|(j, f)| EuclidMode {
            kappa: m.user_vector(j)[0],
            alpha: f.as_ref(),
        })
        .collect();
    let grid = fin.grid;
    let mut worst: f64 = 0.0;
    for i in 0..grid.n {
        let e = explicit_euclid_1d(&modes, scenario.lambda, fin.t, grid.coordinate(i), dt);
        for (j, ej) in e.iter().enumerate() {
            worst = worst.max((fin.fields[j][i] - ej).norm());
        }
    }
    Ok(worst)
}

fn converge(scenario: &Scenario, opts: &RunOptions, report: &mut Report, out: &mut RunOutput) -> Result<()> {
    let Experiment::Converge(cx) = &scenario.experiment else {
        unreachable!("checked by run")
    };
    let c = closed_modes(scenario, out)?;
    let alpha = scenario.torus_amplitudes(&c.modes)?;
    let scn = TorusScenario {
        modes: c.modes,
        alpha,
        lambda: scenario.lambda,
        t_final: cx.t_final,
    };
    let copts = scenario.solver.convergence_options(opts.jobs);
    let table = run_convergence(&scn, &scenario.eps_list(), &copts)?;
    let mut csv = Csv::new(&[
        "eps",
        "sup_error",
        "w_error",
        "n",
        "cell",
        "dt",
        "steps",
        "self_consistency",
        "l2_drift",
        "alias_warnings",
        "status",
    ]);
    let mut runtimes = Vec::new();
    for r in &table.rows {
        let status = match &r.status {
            RowStatus::Ok => "ok".to_string(),
            RowStatus::Failed(msg) => format!("failed: {msg}"),
        };
        csv.row(&[
            fmt_f64(r.eps),
            fmt_f64(r.sup_error),
            fmt_f64(r.w_error),
            r.n.to_string(),
            r.cell.to_string(),
            fmt_f64(r.dt),
            r.steps.to_string(),
            fmt_opt(r.self_consistency),
            fmt_f64(r.l2_drift),
            r.alias_warnings.to_string(),
            status.clone(),
        ]);
        out.summary.push(format!(
            "ε = 1/{:<5} sup {:.3e}  W {:.3e}  err/ε {:.3}  n {}  dt {:.2e}  {status}",
            (1.0 / r.eps).round(),
            r.sup_error,
            r.w_error,
            r.sup_error / r.eps,
            r.n,
            r.dt
        ));
        if r.alias_warnings > 0 {
            out.warnings
                .push(format!("ε = {}: {} aliasing warnings", fmt_f64(r.eps), r.alias_warnings));
        }
        if let RowStatus::Failed(msg) = &r.status {
            out.warnings.push(format!("ε = {}: row failed: {msg}", fmt_f64(r.eps)));
        }
        runtimes.push(serde_json::json!({"eps": r.eps, "runtime": r.runtime}));
    }
    out.file("convergence.csv", csv.into_bytes());
    let order_text = |o: Option<f64>| o.map_or("n/a (floor)".to_string(), |v| format!("{v:.3}"));
    out.summary
        .push(format!("fitted order (sup): {}", order_text(table.fitted_order_sup)));
    out.summary
        .push(format!("fitted order (W): {}", order_text(table.fitted_order_w)));
    out.summary.push(format!("max err/ε: {:.3}", table.sup_constant));
    if let Some(p) = opts.assert_order {
        match table.fitted_order_sup {
            Some(o) if o >= p => {}
            other => out
                .failures
                .push(format!("fitted order {} below asserted {p}", order_text(other))),
        }
    }
    // rows without their runtimes, which go to the runtimes block
    let mut tv = serde_json::to_value(&table)?;
    if let Some(rows) = tv.get_mut("rows").and_then(Value::as_array_mut) {
        for r in rows {
            if let Some(o) = r.as_object_mut() {
                o.remove("runtime");
            }
        }
    }
    report.set("modes", &mode_document(&scn.modes))?;
    // the thread count changes timings only, so it stays out of the hashed body
    let mut ov = serde_json::to_value(&copts)?;
    if let Some(o) = ov.as_object_mut() {
        o.remove("jobs");
    }
    report.set("options", &ov)?;
    report.runtime_value("jobs", opts.jobs.into());
    report.set("table", &tv)?;
    report.set(
        "fitted_order_text",
        &serde_json::json!({
            "sup": order_text(table.fitted_order_sup),
            "w": order_text(table.fitted_order_w),
        }),
    )?;
    report.set("assert_order", &opts.assert_order)?;
    let state = crate::profile::ProfileStateTorus {
        amps: scn.alpha.clone(),
        t: 0.0,
    };
    report.set("remainder", &remainder_report(ProfileInput::Torus(&state), &scn.modes)?)?;
    report.runtime_value("rows", Value::Array(runtimes));
    Ok(())
}

fn instability(scenario: &Scenario, report: &mut Report, out: &mut RunOutput) -> Result<()> {
    let p = scenario.instability_params()?;
    let r = run_instability(&p)?;
    let mut csv = Csv::new(&[
        "rho",
        "delta",
        "s",
        "k",
        "eps",
        "t_star",
        "gap",
        "hs_condition_met",
        "solver_gap",
        "solver_formula_diff",
        "solver_formula_max_diff",
    ]);
    csv.row(&[
        fmt_f64(p.rho),
        fmt_f64(p.delta),
        fmt_f64(p.s),
        p.k.to_string(),
        fmt_f64(r.eps),
        fmt_f64(r.t_star),
        fmt_f64(r.gap),
        r.hs_condition_met.to_string(),
        fmt_opt(r.solver_gap),
        fmt_opt(r.solver_formula_diff),
        fmt_opt(r.solver_formula_max_diff),
    ]);
    out.file("instability.csv", csv.into_bytes());
    out.summary
        .push(format!("gap {:.6} at t* = {:.6} (δ = {})", r.gap, r.t_star, p.delta));
    out.summary.push(format!(
        "H^s condition K > δ^(1/s): {}",
        if r.hs_condition_met { "met" } else { "not met" }
    ));
    if let (Some(g), Some(d)) = (r.solver_gap, r.solver_formula_diff) {
        out.summary.push(format!(
            "solver gap {g:.6} at ε = 1/{}, |solver − formula| {d:.3e} ({:.2}ε)",
            (1.0 / r.eps).round(),
            d / r.eps
        ));
    }
    report.set("record", &r)?;
    Ok(())
}

fn smalldiv(scenario: &Scenario, report: &mut Report, out: &mut RunOutput) -> Result<()> {
    let Experiment::Smalldiv(sx) = &scenario.experiment else {
        unreachable!("checked by run")
    };
    let c = closed_modes(scenario, out)?;
    let m = &c.modes;
    let survey = survey_divisors(m)?;
    let fit = fit_generalized_bound(m, &sx.b_grid)?;
    let mut csv = Csv::new(&["b", "c"]);
    for (b, cb) in &fit {
        csv.row(&[fmt_f64(*b), fmt_opt(*cb)]);
    }
    out.file("divisors_fit.csv", csv.into_bytes());
    match survey.min_delta {
        None => out.summary.push("all tuples resonant: no small divisors".into()),
        Some(d) => {
            out.summary.push(format!(
                "{} non-resonant tuples of {}, min δ = {d}",
                survey.tuples_scanned, survey.total_tuples
            ));
            if m.is_integer_lattice() && d < 1.0 {
                out.failures
                    .push(format!("min δ = {d} < 1 on an integer lattice"));
            }
        }
    }
    let argmin: Option<Vec<Vector>> = survey
        .argmin
        .as_ref()
        .map(|idx| idx.iter().map(|&i| user(m, m.vector(i))).collect());
    report.set("modes", &mode_document(m))?;
    report.set("survey", &survey)?;
    report.set("argmin_vectors", &argmin)?;
    report.set(
        "fit",
        &fit.iter()
            .map(|(b, c)| serde_json::json!({"b": b, "c": c}))
            .collect::<Vec<_>>(),
    )?;
    if let Some(g) = &sx.gram {
        let probe = gram_diophantine_probe(&g.generators()?, &g.options())?;
        match (&probe.exact_minimum, probe.minimum) {
            (Some(q), _) => out.summary.push(format!("Gram probe: min |Σβγ| = {q}")),
            (None, Some(v)) => out.summary.push(format!("Gram probe: min |Σβγ| = {v:.6e}")),
            (None, None) => out.summary.push("Gram probe: every combination vanishes".into()),
        }
        if !probe.complete {
            out.warnings
                .push(format!("Gram probe stopped at its budget after {} matrices", probe.scanned));
        }
        report.set("gram_probe", &probe)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Scenario {
        Scenario::parse(s).unwrap()
    }

    #[test]
    fn closure_lists_created_zero_mode() {
        let s = parse(
            r#"{"schema": 1, "dimension": 2, "sigma": 1, "lambda": 1,
                "initial_modes": [{"vector": [0, 1]}, {"vector": [1, 1]}, {"vector": [1, 0]}],
                "experiment": {"closure": {}}}"#,
        );
        let out = run(Command::Closure, &s, &RunOptions::default()).unwrap();
        assert!(out.summary.iter().any(|l| l == "created (0, 0) at generation 1"), "{:?}", out.summary);
        let csv = String::from_utf8(out.artifact("closure_edges.csv").unwrap().to_vec()).unwrap();
        assert!(csv.lines().nth(1).unwrap().ends_with(",\"(0, 0)\""), "{csv}");
    }

    #[test]
    fn command_must_match_block() {
        let s = parse(
            r#"{"schema": 1, "dimension": 1, "sigma": 1, "lambda": 1,
                "initial_modes": [{"vector": [0]}], "experiment": {"closure": {}}}"#,
        );
        assert!(run(Command::Converge, &s, &RunOptions::default()).is_err());
    }

    #[test]
    fn torus_profiles_with_oracle() {
        let s = parse(
            r#"{"schema": 1, "dimension": 1, "sigma": 1, "lambda": 1,
                "initial_modes": [{"vector": [-1], "amplitude": [0.5, 0]},
                                  {"vector": [0], "amplitude": [1, 0]},
                                  {"vector": [1], "amplitude": [0.5, 0.5]}],
                "experiment": {"profiles": {"t_final": 1, "record_stride": 100}}}"#,
        );
        let opts = RunOptions {
            oracle: Some(Oracle::ExplicitTorus1d),
            ..RunOptions::default()
        };
        let out = run(Command::Profiles, &s, &opts).unwrap();
        let line = out.summary.iter().find(|l| l.starts_with("oracle")).unwrap();
        let dev: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
        assert!(dev <= 1e-8, "{line}");
        let csv = String::from_utf8(out.artifact("trajectory.csv").unwrap().to_vec()).unwrap();
        // 11 recorded times × 3 modes + header
        assert_eq!(csv.lines().count(), 34);
    }

    #[test]
    fn euclid_profiles_with_oracle() {
        let s = parse(
            r#"{"schema": 1, "dimension": 1, "sigma": 1, "lambda": 1,
                "domain": {"kind": "euclid", "length": 40, "n": 256},
                "initial_modes": [
                  {"vector": [0], "profile": {"gaussian": {"center": [-2], "width": 1, "amplitude": [0.8, 0]}}},
                  {"vector": [1], "profile": {"gaussian": {"center": [1], "width": 0.7071067811865476, "amplitude": [0, 0.6]}}}],
                "experiment": {"profiles": {"t_final": 0.5, "record_stride": 250}}}"#,
        );
        let opts = RunOptions {
            oracle: Some(Oracle::ExplicitEuclid1d),
            ..RunOptions::default()
        };
        let out = run(Command::Profiles, &s, &opts).unwrap();
        let line = out.summary.iter().find(|l| l.starts_with("oracle")).unwrap();
        let dev: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
        assert!(dev <= 1e-6, "{line}");
        assert_eq!(&out.artifact("trajectory.bin").unwrap()[..4], b"WKBE");
    }

    #[test]
    fn smalldiv_integer_lattice() {
        let s = parse(
            r#"{"schema": 1, "dimension": 1, "sigma": 1, "lambda": 1,
                "initial_modes": [{"vector": [0]}, {"vector": [1]}, {"vector": [3]}],
                "closure_limits": {"max_generations": 1, "max_sup_norm": 4},
                "experiment": {"smalldiv": {"gram": {"generators": [[1, 0], [0, "1/2"]], "beta_bound": 2}}}}"#,
        );
        let out = run(Command::Smalldiv, &s, &RunOptions::default()).unwrap();
        assert!(out.failures.is_empty(), "{:?}", out.failures);
        assert!(out.summary.iter().any(|l| l.contains("min δ")), "{:?}", out.summary);
        assert!(out.summary.iter().any(|l| l.starts_with("Gram probe: min |Σβγ| = 1/4")), "{:?}", out.summary);
    }
}
