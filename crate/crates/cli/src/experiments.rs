//! One function per experiment selector.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Value};

use gripsim_core::cycle::{
    check_cycle_feasibility, payload_estimate, run_cycle, CycleError, CycleTrace, FeasibilityReport, HandConfig,
};
use gripsim_core::finger::{
    design_springs, forward_kinematics, identify_kfs, solve_posture_with, DesignOptions, FingerError, FingerParams,
    IdentificationOptions, PostureConstraints, PostureObservation, PostureSolution,
};
use gripsim_core::grasp::{wrap_simulate, GraspError, WrapResult};
use gripsim_core::trsw::{drive, switching_threshold, DriveTrace, MechanismState};
use gripsim_core::Vec2;

use crate::error::CliError;
use crate::output::{fmt9, num, OutDir, Table};
use crate::scenario::{Experiment, ObjectSpec, Source, SweepParameter};

/// Flags shared by `run` and `sweep`.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub strict: bool,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// Results of an experiment, plus the failure to report once outputs are written.
pub struct Outcome {
    pub results: Value,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn ok(results: Value) -> Self {
        Self { results, failure: None }
    }
}

pub fn finger_error(src: &Source, section: &str, e: FingerError) -> CliError {
    match e {
        FingerError::NotConverged { .. } | FingerError::DesignNotConverged { .. } => CliError::Solver(e.to_string()),
        FingerError::Infeasible(_) => CliError::Infeasible(e.to_string()),
        _ => src.error_at(section, e.to_string()),
    }
}

fn grasp_error(src: &Source, e: GraspError) -> CliError {
    match e {
        GraspError::Solver { .. } => CliError::Solver(e.to_string()),
        _ => src.error_at("object", e.to_string()),
    }
}

fn cycle_error(src: &Source, e: CycleError) -> CliError {
    match e {
        CycleError::Finger(f) => finger_error(src, "finger", f),
        CycleError::Grasp(g) => grasp_error(src, g),
        CycleError::StepBudget(_) => CliError::Solver(e.to_string()),
        CycleError::InvalidStep => src.error_at("motor_step", e.to_string()),
        _ => CliError::Infeasible(e.to_string()),
    }
}

pub fn run_experiment(src: &Source, base: &Path, opts: &RunOptions, out: &mut OutDir) -> Result<Outcome, CliError> {
    let hand = src.hand(opts.seed)?;
    match src.scenario.experiment {
        Experiment::TrswSim => trsw_sim(src, &hand, out),
        Experiment::FingerSolve => finger_solve(src, &hand, out),
        Experiment::IdentifyKfs => identify(src, &hand, base, out),
        Experiment::DesignSprings => design(src, &hand, out),
        Experiment::GraspSim => grasp_sim(src, &hand, out),
        Experiment::CycleSim => cycle_sim(src, &hand, opts, out),
        Experiment::Validate => validate(&hand, opts),
    }
}

fn trsw_trace_table(trace: &DriveTrace<f64>) -> Table {
    let mut t = Table::new(&[
        "step",
        "theta_m_rad",
        "mode",
        "x_shaft_mm",
        "theta_sh_rad",
        "f_ex_N",
        "tau_m_Nmm",
    ]);
    for (i, s) in trace.states.iter().enumerate() {
        t.row(vec![
            i.to_string(),
            fmt9(s.theta_m),
            s.mode.as_str().into(),
            fmt9(s.x_shaft),
            fmt9(s.theta_sh),
            fmt9(s.f_ex),
            fmt9(s.tau_m),
        ]);
    }
    t
}

fn trsw_run(src: &Source, hand: &HandConfig<f64>, tau_pre: f64) -> Result<(DriveTrace<f64>, Value), CliError> {
    let sim = src
        .scenario
        .trsw_sim
        .as_ref()
        .ok_or_else(|| src.error_at("experiment", "trsw-sim needs a trsw_sim section"))?;
    let params = hand
        .trsw
        .with_preload(tau_pre)
        .map_err(|e| src.error_at("tau_pre_max", e.to_string()))?;
    let total = src.angle(sim.motor_travel);
    let step = src.angle(sim.max_step);
    if !(step > 0.0 && step.is_finite()) || !total.is_finite() {
        return Err(src.error_at("max_step", "motor_travel must be finite and max_step positive"));
    }
    let trace = drive(&params, MechanismState::at_rest(), &sim.load.build(), total, step);
    let last = trace.last();
    let switched = trace.states.iter().any(|s| s.mode.as_str() == "rotation");
    let f_sw = switching_threshold(&params).unwrap_or(f64::NAN);
    let summary = json!({
        "tau_pre_max_Nmm": num(tau_pre),
        "switching_threshold_N": num(f_sw),
        "peak_f_ex_N": num(trace.peak_force()),
        "switched_to_rotation": switched,
        "final_mode": last.mode.as_str(),
        "final_x_shaft_mm": num(last.x_shaft),
        "final_theta_sh_rad": num(last.theta_sh),
        "halted": trace.halted.as_ref().map(|e| e.to_string()),
        "steps": trace.states.len() - 1,
    });
    Ok((trace, summary))
}

fn trsw_sim(src: &Source, hand: &HandConfig<f64>, out: &mut OutDir) -> Result<Outcome, CliError> {
    let sim = src
        .scenario
        .trsw_sim
        .as_ref()
        .ok_or_else(|| src.error_at("experiment", "trsw-sim needs a trsw_sim section"))?;
    let mut runs = Vec::new();
    match &sim.preload_values {
        None => {
            let (trace, summary) = trsw_run(src, hand, hand.trsw.tau_pre_max)?;
            out.table("trsw_trace.csv", &trsw_trace_table(&trace))?;
            runs.push(summary);
        }
        Some(values) => {
            if values.is_empty() {
                return Err(src.error_at("preload_values", "preload_values must not be empty"));
            }
            let traces = values
                .iter()
                .map(|&v| trsw_run(src, hand, v))
                .collect::<Result<Vec<_>, _>>()?;
            for (i, (trace, summary)) in traces.into_iter().enumerate() {
                out.table(&format!("trsw_trace_{i}.csv"), &trsw_trace_table(&trace))?;
                runs.push(summary);
            }
        }
    }
    Ok(Outcome::ok(json!({ "runs": runs })))
}

fn solve(src: &Source, hand: &HandConfig<f64>, f: f64) -> Result<PostureSolution<f64>, CliError> {
    if !(f >= 0.0 && f.is_finite()) {
        return Err(src.error_at("forces", format!("insertion force {f} must be finite and >= 0")));
    }
    solve_posture_with(&hand.finger, f, &hand.solver, &PostureConstraints::default())
        .map_err(|e| finger_error(src, "finger", e))
}

fn posture_table(params: &FingerParams<f64>, sol: &PostureSolution<f64>) -> Table {
    let pose = forward_kinematics(params, &sol.posture);
    let mut t = Table::new(&[
        "joint",
        "theta_rad",
        "theta_deg",
        "f_fs_N",
        "joint_torque_Nmm",
        "pin_x_mm",
        "pin_y_mm",
    ]);
    for i in 0..params.n {
        t.row(vec![
            i.to_string(),
            fmt9(sol.posture.theta[i]),
            fmt9(sol.posture.theta[i].to_degrees()),
            fmt9(sol.distribution.forces[i]),
            fmt9(sol.loads.joint_torques[i]),
            fmt9(pose.pins[i].x),
            fmt9(pose.pins[i].y),
        ]);
    }
    t
}

fn tip_of(params: &FingerParams<f64>, sol: &PostureSolution<f64>) -> Vec2<f64> {
    forward_kinematics(params, &sol.posture).tip
}

fn finger_solve(src: &Source, hand: &HandConfig<f64>, out: &mut OutDir) -> Result<Outcome, CliError> {
    let forces = &src
        .scenario
        .finger_solve
        .as_ref()
        .ok_or_else(|| src.error_at("experiment", "finger-solve needs a finger_solve section"))?
        .forces;
    if forces.is_empty() {
        return Err(src.error_at("forces", "forces must not be empty"));
    }
    let mut postures = Vec::new();
    for (i, &f) in forces.iter().enumerate() {
        let sol = solve(src, hand, f)?;
        out.table(&format!("posture_{i}.csv"), &posture_table(&hand.finger, &sol))?;
        let tip = tip_of(&hand.finger, &sol);
        postures.push(json!({
            "f_tr_N": num(f),
            "theta_rad": sol.posture.theta.iter().map(|&t| num(t)).collect::<Vec<_>>(),
            "sum_theta_rad": num(sol.posture.total_bend()),
            "energy_Nmm": num(sol.energy),
            "tip_mm": [num(tip.x), num(tip.y)],
            "iterations": sol.iterations,
        }));
    }
    Ok(Outcome::ok(json!({ "postures": postures })))
}

/// Reads `f_tr_N,pin_index,x_mm,y_mm` rows, grouped by force in file order.
pub fn read_observations(path: &Path, n: usize) -> Result<Vec<PostureObservation<f64>>, CliError> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    let expected = ["f_tr_N", "pin_index", "x_mm", "y_mm"];
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(CliError::config(
            1,
            format!("{}: header must be {}", path.display(), expected.join(",")),
        ));
    }
    let mut groups: Vec<(f64, BTreeMap<usize, Vec2<f64>>)> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record?;
        let bad = |what: &str| CliError::config(line, format!("{}: {what}", path.display()));
        let field = |i: usize| -> Result<f64, CliError> {
            record[i]
                .trim()
                .parse::<f64>()
                .map_err(|_| bad(&format!("column {} is not a number", expected[i])))
        };
        let f = field(0)?;
        let pin: usize = record[1].trim().parse().map_err(|_| bad("pin_index is not an index"))?;
        if pin >= n {
            return Err(bad(&format!("pin_index {pin} out of range for {n} joints")));
        }
        let point = Vec2::new(field(2)?, field(3)?);
        let group = match groups.iter().position(|(g, _)| *g == f) {
            Some(i) => &mut groups[i].1,
            None => {
                groups.push((f, BTreeMap::new()));
                &mut groups.last_mut().unwrap().1
            }
        };
        if group.insert(pin, point).is_some() {
            return Err(bad(&format!("duplicate pin {pin} for f_tr {f}")));
        }
    }
    groups
        .into_iter()
        .map(|(f_tr, pins)| {
            if pins.len() != n {
                return Err(CliError::config(
                    1,
                    format!("{}: force {f_tr} has {} of {n} pins", path.display(), pins.len()),
                ));
            }
            Ok(PostureObservation {
                f_tr,
                pins: pins.into_values().collect(),
            })
        })
        .collect()
}

fn identify(src: &Source, hand: &HandConfig<f64>, base: &Path, out: &mut OutDir) -> Result<Outcome, CliError> {
    let section = src
        .scenario
        .identify
        .as_ref()
        .ok_or_else(|| src.error_at("experiment", "identify-kfs needs an identify section"))?;
    let path = base.join(&section.observations);
    let observations = read_observations(&path, hand.finger.n)?;
    let mut options = IdentificationOptions {
        solver: hand.solver,
        ..IdentificationOptions::default()
    };
    if let Some(k) = section.k_min {
        options.k_min = src.stiffness(k);
    }
    if let Some(k) = section.k_max {
        options.k_max = src.stiffness(k);
    }
    let result = identify_kfs(&hand.finger, &observations, &options).map_err(|e| finger_error(src, "identify", e))?;
    let mut t = Table::new(&[
        "f_tr_N",
        "k_fs_Nmm_per_rad",
        "k_fs_scenario_unit",
        "residual_mm",
        "identifiable",
    ]);
    for fit in &result.fits {
        t.row(vec![
            fmt9(fit.f_tr),
            fmt9(fit.k_fs),
            fmt9(src.stiffness_out(fit.k_fs)),
            fmt9(fit.residual),
            fit.identifiable.to_string(),
        ]);
    }
    out.table("identification.csv", &t)?;
    Ok(Outcome::ok(json!({
        "k_fs_Nmm_per_rad": num(result.k_fs),
        "k_fs_scenario_unit": num(src.stiffness_out(result.k_fs)),
        "identifiable": result.identifiable(),
        "observations": observations.len(),
    })))
}

fn designed_finger(
    src: &Source,
    hand: &HandConfig<f64>,
    objective: crate::scenario::ObjectiveKey,
    f_ref: f64,
) -> Result<FingerParams<f64>, CliError> {
    let mut options = DesignOptions {
        solver: hand.solver,
        ..DesignOptions::default()
    };
    if let Some(d) = &src.scenario.design {
        options.spread_tolerance = d.spread_tolerance.unwrap_or(options.spread_tolerance);
        options.proximal_ratio = d.proximal_ratio.unwrap_or(options.proximal_ratio);
    }
    let springs =
        design_springs(&hand.finger, objective.build(), f_ref, &options).map_err(|e| finger_error(src, "design", e))?;
    hand.finger
        .with_springs(springs)
        .map_err(|e| finger_error(src, "design", e))
}

fn design(src: &Source, hand: &HandConfig<f64>, out: &mut OutDir) -> Result<Outcome, CliError> {
    let section = src
        .scenario
        .design
        .as_ref()
        .ok_or_else(|| src.error_at("experiment", "design-springs needs a design section"))?;
    let f_ref = section.f_ref.unwrap_or_else(|| hand.grasp_force());
    let finger = designed_finger(src, hand, section.objective, f_ref)?;
    let designed = HandConfig {
        finger: finger.clone(),
        ..hand.clone()
    };
    let sol = solve(src, &designed, f_ref)?;
    let mut t = Table::new(&["joint", "k_sp_Nmm_per_rad", "k_sp_scenario_unit", "theta_rad"]);
    for i in 0..finger.n {
        t.row(vec![
            i.to_string(),
            fmt9(finger.spring_stiffness[i]),
            fmt9(src.stiffness_out(finger.spring_stiffness[i])),
            fmt9(sol.posture.theta[i]),
        ]);
    }
    out.table("springs.csv", &t)?;
    Ok(Outcome::ok(json!({
        "f_ref_N": num(f_ref),
        "spring_stiffness_Nmm_per_rad": finger.spring_stiffness.iter().map(|&k| num(k)).collect::<Vec<_>>(),
        "theta_rad": sol.posture.theta.iter().map(|&t| num(t)).collect::<Vec<_>>(),
    })))
}

/// Runs the wrap for one object diameter.
pub fn wrap_once(
    src: &Source,
    hand: &HandConfig<f64>,
    diameter: f64,
) -> Result<(FingerParams<f64>, WrapResult<f64>), CliError> {
    let section = src
        .scenario
        .grasp
        .as_ref()
        .ok_or_else(|| src.error_at("experiment", "grasp-sim needs a grasp section"))?;
    let finger = match section.spring_objective {
        Some(objective) => designed_finger(src, hand, objective, hand.grasp_force())?,
        None => hand.finger.clone(),
    };
    let object = section
        .object
        .build(&finger, diameter)
        .map_err(|e| src.error_at("object", e))?;
    let wrap = wrap_simulate(&finger, &object, &hand.trsw, hand.tau_th, &hand.wrap).map_err(|e| grasp_error(src, e))?;
    Ok((finger, wrap))
}

fn grasp_sim(src: &Source, hand: &HandConfig<f64>, out: &mut OutDir) -> Result<Outcome, CliError> {
    let diameter = src.scenario.grasp.as_ref().map_or(0.0, |g| g.object.diameter);
    let (finger, wrap) = wrap_once(src, hand, diameter)?;
    let mut header = vec![
        "step".to_owned(),
        "f_tr_N".into(),
        "frozen_joints".into(),
        "max_penetration_mm".into(),
    ];
    header.extend((0..finger.n).map(|i| format!("theta_{i}_rad")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut steps = Table::new(&header);
    for (i, s) in wrap.steps.iter().enumerate() {
        let mut row = vec![
            i.to_string(),
            fmt9(s.f_tr),
            s.frozen.iter().filter(|&&b| b).count().to_string(),
            fmt9(s.max_penetration),
        ];
        row.extend(s.theta.iter().map(|&t| fmt9(t)));
        steps.row(row);
    }
    out.table("wrap_steps.csv", &steps)?;

    let pose = forward_kinematics(&finger, &wrap.posture);
    let mut posture = Table::new(&["link", "theta_rad", "pin_x_mm", "pin_y_mm", "contact"]);
    for i in 0..finger.n {
        posture.row(vec![
            i.to_string(),
            fmt9(wrap.posture.theta[i]),
            fmt9(pose.pins[i].x),
            fmt9(pose.pins[i].y),
            wrap.contact_links.contains(&i).to_string(),
        ]);
    }
    out.table("wrap_posture.csv", &posture)?;
    Ok(Outcome::ok(json!({
        "diameter_mm": num(diameter),
        "contact_links": wrap.contact_links,
        "terminated_by": wrap.terminated_by.as_str(),
        "f_tr_final_N": num(wrap.f_tr_final),
        "spring_stiffness_Nmm_per_rad": finger.spring_stiffness.iter().map(|&k| num(k)).collect::<Vec<_>>(),
    })))
}

fn feasibility_json(report: &FeasibilityReport<f64>) -> Value {
    let check = |passed: bool, margin: f64| json!({ "passed": passed, "margin": num(margin) });
    json!({
        "passed": report.passed(),
        "thread_translates": check(report.design.thread_translates.passed, report.design.thread_translates.margin),
        "preload_within_motor": check(report.design.preload_within_motor.passed, report.design.preload_within_motor.margin),
        "translation_window": check(report.design.translation_window.passed, report.design.translation_window.margin),
        "grasp_stays_translational": check(report.grasp_stays_translational.passed, report.grasp_stays_translational.margin),
        "threshold_within_motor": check(report.threshold_within_motor.passed, report.threshold_within_motor.margin),
        "lock_reachable": check(report.lock_reachable.passed, report.lock_reachable.margin),
        "assumptions": report.assumptions,
    })
}

fn validate(hand: &HandConfig<f64>, opts: &RunOptions) -> Result<Outcome, CliError> {
    let report = check_cycle_feasibility(hand);
    let results = json!({
        "feasibility": feasibility_json(&report),
        "grasp_force_N": num(hand.grasp_force()),
        "payload_kg": num(payload_estimate(hand)),
    });
    let failure = (opts.strict && !report.passed()).then(|| CliError::Infeasible("feasibility check failed".into()));
    Ok(Outcome { results, failure })
}

fn cycle_table(trace: &CycleTrace<f64>) -> Table {
    let mut t = Table::new(&[
        "step",
        "phase",
        "theta_m_rad",
        "mode",
        "x_shaft_mm",
        "theta_sh_rad",
        "f_ex_N",
        "lock_engaged",
        "sum_theta_rad",
    ]);
    for r in &trace.records {
        t.row(vec![
            r.step.to_string(),
            r.phase.as_str().into(),
            fmt9(r.theta_m),
            r.mode.as_str().into(),
            fmt9(r.x_shaft),
            fmt9(r.theta_sh),
            fmt9(r.f_ex),
            r.lock_engaged.to_string(),
            fmt9(r.sum_theta),
        ]);
    }
    t
}

fn cycle_object(
    src: &Source,
    hand: &HandConfig<f64>,
    spec: Option<&ObjectSpec>,
    diameter: Option<f64>,
) -> Result<Option<gripsim_core::grasp::CircularObject<f64>>, CliError> {
    match spec {
        None => Ok(None),
        Some(spec) => spec
            .build(&hand.finger, diameter.unwrap_or(spec.diameter))
            .map(Some)
            .map_err(|e| src.error_at("object", e)),
    }
}

fn cycle_sim(src: &Source, hand: &HandConfig<f64>, opts: &RunOptions, out: &mut OutDir) -> Result<Outcome, CliError> {
    let report = check_cycle_feasibility(hand);
    if opts.strict && !report.passed() {
        return Ok(Outcome {
            results: json!({ "feasibility": feasibility_json(&report) }),
            failure: Some(CliError::Infeasible("feasibility check failed".into())),
        });
    }
    let spec = src.scenario.cycle.as_ref().and_then(|c| c.object.as_ref());
    let object = cycle_object(src, hand, spec, None)?;
    let (trace, failure) = match run_cycle(hand, object.as_ref()) {
        Ok(outcome) => (outcome.trace, None),
        Err(failure) => (failure.partial, Some(cycle_error(src, failure.error))),
    };
    out.table("cycle_trace.csv", &cycle_table(&trace))?;
    let last = trace.records.last();
    let results = json!({
        "feasibility": feasibility_json(&report),
        "grasp_force_N": num(hand.grasp_force()),
        "payload_kg": num(payload_estimate(hand)),
        "phases": trace.phases().iter().map(|p| p.as_str()).collect::<Vec<_>>(),
        "mode_transitions": trace.mode_transitions().len(),
        "final_x_shaft_mm": last.map(|r| num(r.x_shaft)),
        "final_sum_theta_rad": last.map(|r| num(r.sum_theta)),
        "error": failure.as_ref().map(|e| e.to_string()),
    });
    Ok(Outcome { results, failure })
}

/// Header of the sweep table for an experiment.
pub fn sweep_header(experiment: Experiment, parameter: SweepParameter) -> Option<Vec<&'static str>> {
    use Experiment as E;
    use SweepParameter as P;
    let metrics: &[&str] = match (experiment, parameter) {
        (E::TrswSim, P::TauPreMax) => &[
            "switching_threshold_N",
            "peak_f_ex_N",
            "final_mode",
            "final_x_shaft_mm",
            "halted",
        ],
        (E::FingerSolve, P::FTr) => &["sum_theta_rad", "energy_Nmm", "tip_x_mm", "tip_y_mm"],
        (E::DesignSprings, P::FTr) => &["spring_stiffness_Nmm_per_rad"],
        (E::GraspSim, P::Diameter | P::TauTh) => &["contact_count", "contact_links", "terminated_by", "f_tr_final_N"],
        (E::Validate, P::TauPreMax | P::TauTh) => &["feasible", "grasp_force_N"],
        (E::CycleSim, P::TauPreMax | P::TauTh | P::Diameter) => {
            &["mode_transitions", "final_x_shaft_mm", "final_sum_theta_rad"]
        }
        _ => return None,
    };
    let mut header = vec![parameter.as_str(), "status"];
    header.extend_from_slice(metrics);
    Some(header)
}

/// Evaluates one grid point. The returned cells follow [`sweep_header`] after
/// the parameter and status columns.
pub fn sweep_point(
    src: &Source,
    opts: &RunOptions,
    parameter: SweepParameter,
    value: f64,
) -> Result<Vec<String>, CliError> {
    let mut hand = src.hand(opts.seed)?;
    match parameter {
        SweepParameter::TauPreMax => {
            hand.trsw = hand
                .trsw
                .with_preload(value)
                .map_err(|e| src.error_at("values", e.to_string()))?;
        }
        SweepParameter::TauTh => hand.tau_th = value,
        SweepParameter::Diameter | SweepParameter::FTr => {}
    }
    match src.scenario.experiment {
        Experiment::TrswSim => {
            let (_, s) = trsw_run(src, &hand, value)?;
            Ok(vec![
                json_cell(&s["switching_threshold_N"]),
                json_cell(&s["peak_f_ex_N"]),
                json_cell(&s["final_mode"]),
                json_cell(&s["final_x_shaft_mm"]),
                json_cell(&s["halted"]),
            ])
        }
        Experiment::FingerSolve => {
            let sol = solve(src, &hand, value)?;
            let tip = tip_of(&hand.finger, &sol);
            Ok(vec![
                fmt9(sol.posture.total_bend()),
                fmt9(sol.energy),
                fmt9(tip.x),
                fmt9(tip.y),
            ])
        }
        Experiment::DesignSprings => {
            let objective = src
                .scenario
                .design
                .as_ref()
                .ok_or_else(|| src.error_at("experiment", "design-springs needs a design section"))?
                .objective;
            let finger = designed_finger(src, &hand, objective, value)?;
            let cells: Vec<String> = finger.spring_stiffness.iter().map(|&k| fmt9(k)).collect();
            Ok(vec![cells.join(";")])
        }
        Experiment::GraspSim => {
            let diameter = match parameter {
                SweepParameter::Diameter => value,
                _ => src.scenario.grasp.as_ref().map_or(0.0, |g| g.object.diameter),
            };
            let (_, wrap) = wrap_once(src, &hand, diameter)?;
            let links: Vec<String> = wrap.contact_links.iter().map(usize::to_string).collect();
            Ok(vec![
                wrap.contact_links.len().to_string(),
                links.join(";"),
                wrap.terminated_by.as_str().into(),
                fmt9(wrap.f_tr_final),
            ])
        }
        Experiment::Validate => {
            let report = check_cycle_feasibility(&hand);
            if opts.strict && !report.passed() {
                return Err(CliError::Infeasible("feasibility check failed".into()));
            }
            Ok(vec![report.passed().to_string(), fmt9(hand.grasp_force())])
        }
        Experiment::CycleSim => {
            let spec = src.scenario.cycle.as_ref().and_then(|c| c.object.as_ref());
            let diameter = (parameter == SweepParameter::Diameter).then_some(value);
            if diameter.is_some() && spec.is_none() {
                return Err(src.error_at("parameter", "a diameter sweep needs cycle.object"));
            }
            let object = cycle_object(src, &hand, spec, diameter)?;
            let outcome = run_cycle(&hand, object.as_ref()).map_err(|f| cycle_error(src, f.error))?;
            let last = outcome.trace.records.last().expect("cycle records its start");
            Ok(vec![
                outcome.trace.mode_transitions().len().to_string(),
                fmt9(last.x_shaft),
                fmt9(last.sum_theta),
            ])
        }
        Experiment::IdentifyKfs => Err(src.error_at("sweep", "identify-kfs cannot be swept")),
    }
}

fn json_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => n.as_f64().map_or_else(|| n.to_string(), fmt9),
        other => other.to_string(),
    }
}
