//! Scenario files: JSON with an explicit `units` block.
//!
//! Every section is optional except `experiment` and `units`; a missing
//! section falls back to the reference hand. Values are read in the units
//! declared by the file and converted to N, mm, rad and N·mm/rad on build.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use gripsim_core::cycle::HandConfig;
use gripsim_core::finger::{ChainConvention, FingerParams, FrameRotation, SolverOptions, SpringObjective, TipForce};
use gripsim_core::grasp::{CircularObject, WrapOptions};
use gripsim_core::lock::LockParams;
use gripsim_core::trsw::{LoadModel, ScrewDriveParams, StopSide};
use gripsim_core::Vec2;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    TrswSim,
    FingerSolve,
    IdentifyKfs,
    DesignSprings,
    GraspSim,
    CycleSim,
    Validate,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::TrswSim => "trsw-sim",
            Experiment::FingerSolve => "finger-solve",
            Experiment::IdentifyKfs => "identify-kfs",
            Experiment::DesignSprings => "design-springs",
            Experiment::GraspSim => "grasp-sim",
            Experiment::CycleSim => "cycle-sim",
            Experiment::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ForceUnit {
    N,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LengthUnit {
    #[serde(rename = "mm")]
    Mm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AngleUnit {
    #[serde(rename = "rad")]
    Rad,
    #[serde(rename = "deg")]
    Deg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TorqueUnit {
    #[serde(rename = "N·mm", alias = "N*mm", alias = "Nmm")]
    NMm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StiffnessUnit {
    #[serde(rename = "N·mm/rad", alias = "N*mm/rad", alias = "Nmm/rad")]
    NMmPerRad,
    #[serde(rename = "N·mm/deg", alias = "N*mm/deg", alias = "Nmm/deg")]
    NMmPerDeg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    pub force: ForceUnit,
    pub length: LengthUnit,
    pub angle: AngleUnit,
    pub torque: TorqueUnit,
    pub stiffness: StiffnessUnit,
}

impl Units {
    fn angle(&self, v: f64) -> f64 {
        match self.angle {
            AngleUnit::Rad => v,
            AngleUnit::Deg => v * PI / 180.0,
        }
    }

    fn stiffness(&self, v: f64) -> f64 {
        match self.stiffness {
            StiffnessUnit::NMmPerRad => v,
            StiffnessUnit::NMmPerDeg => v * 180.0 / PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrswSection {
    pub r_g1: f64,
    pub r_g2: f64,
    pub theta_th: f64,
    pub mu_st: f64,
    pub tau_pre_max: f64,
    pub tau_m_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kinetic_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameRotationKey {
    Adjacent,
    Cumulative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TipForceKey {
    Direct,
    Reaction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FingerSection {
    pub n: usize,
    pub link_length: f64,
    pub shaft_offset: f64,
    pub shaft_stiffness: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spring_stiffness: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tip_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_rotation: Option<FrameRotationKey>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tip_force: Option<TipForceKey>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LockSection {
    pub protrusion_pitch: f64,
    pub protrusion_count: usize,
    /// Two pawls per link are placed at `link * l + offset` and half a pitch beyond.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_pawl_offset: Option<f64>,
    /// Explicit pawl positions per link (mm); overrides `first_pawl_offset`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pawl_positions: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unlock_roll: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roll_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandSection {
    pub tau_th: f64,
    pub finger_count: usize,
    pub finger_strength: f64,
    pub motor_step: f64,
    pub lock_start: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter_starts: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopSideKey {
    Below,
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LoadSpec {
    Free,
    /// `k_env` in N/mm.
    LinearSpring {
        k_env: f64,
        rest: f64,
    },
    Constant {
        force: f64,
    },
    HardStop {
        position: f64,
        side: StopSideKey,
    },
}

impl LoadSpec {
    pub fn build(&self) -> LoadModel<f64> {
        match *self {
            LoadSpec::Free => LoadModel::Free,
            LoadSpec::LinearSpring { k_env, rest } => LoadModel::LinearSpring { k_env, rest },
            LoadSpec::Constant { force } => LoadModel::Constant { force },
            LoadSpec::HardStop { position, side } => LoadModel::HardStop {
                position,
                side: match side {
                    StopSideKey::Below => StopSide::Below,
                    StopSideKey::Above => StopSide::Above,
                },
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrswSimSection {
    pub load: LoadSpec,
    /// Total motor rotation; negative reverses the motor.
    pub motor_travel: f64,
    pub max_step: f64,
    /// Runs one trace per preload torque instead of the `trsw` value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preload_values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FingerSolveSection {
    pub forces: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentifySection {
    /// CSV with columns `f_tr_N,pin_index,x_mm,y_mm`, relative to the scenario file.
    pub observations: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKey {
    UniformBend,
    ProximalFirst,
}

impl ObjectiveKey {
    pub fn build(self) -> SpringObjective {
        match self {
            ObjectiveKey::UniformBend => SpringObjective::UniformBend,
            ObjectiveKey::ProximalFirst => SpringObjective::ProximalFirst,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    pub objective: ObjectiveKey,
    /// Reference insertion force; defaults to the grasp threshold force.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_ref: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spread_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proximal_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub diameter: f64,
    /// Explicit center (mm); otherwise the object sits above the first link.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 2]>,
    /// Gap between the first link and the object when `center` is absent (mm).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clearance: Option<f64>,
}

pub const DEFAULT_CLEARANCE: f64 = 2.0;

impl ObjectSpec {
    pub fn build(&self, finger: &FingerParams<f64>, diameter: f64) -> Result<CircularObject<f64>, String> {
        let object = match self.center {
            Some([x, y]) => CircularObject::new(Vec2::new(x, y), diameter),
            None => CircularObject::above_first_link(finger, diameter, self.clearance.unwrap_or(DEFAULT_CLEARANCE)),
        };
        object.map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspSection {
    pub object: ObjectSpec,
    /// Replaces the finger springs with a design at the grasp threshold force.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spring_objective: Option<ObjectiveKey>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub force_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penetration_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<ObjectSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    TauPreMax,
    TauTh,
    Diameter,
    FTr,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::TauPreMax => "tau_pre_max",
            SweepParameter::TauTh => "tau_th",
            SweepParameter::Diameter => "diameter",
            SweepParameter::FTr => "f_tr",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub experiment: Experiment,
    pub units: Units,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trsw: Option<TrswSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finger: Option<FingerSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lock: Option<LockSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hand: Option<HandSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trsw_sim: Option<TrswSimSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finger_solve: Option<FingerSolveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identify: Option<IdentifySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grasp: Option<GraspSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<CycleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    /// Written into summaries; ignored when read back.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub results: Option<serde_json::Value>,
}

/// A parsed scenario together with its source text, for line-anchored errors.
#[derive(Debug, Clone)]
pub struct Source {
    pub scenario: Scenario,
    pub text: String,
}

impl Source {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value = if text.trim().is_empty() {
            serde_json::Value::Null
        } else {
            serde_json::from_str(text).map_err(|e| CliError::config(e.line().max(1), e.to_string()))?
        };
        if value.get("experiment").is_none() {
            return Err(CliError::config(1, "missing experiment selector"));
        }
        if value.get("units").is_none() {
            return Err(CliError::config(1, "missing units block"));
        }
        let scenario: Scenario =
            serde_json::from_str(text).map_err(|e| CliError::config(e.line().max(1), strip_position(&e)))?;
        Ok(Self {
            scenario,
            text: text.to_owned(),
        })
    }

    /// Line of the first occurrence of `"key"`, or 1.
    pub fn line_of(&self, key: &str) -> usize {
        let needle = format!("\"{key}\"");
        self.text.lines().position(|l| l.contains(&needle)).map_or(1, |i| i + 1)
    }

    pub fn error_at(&self, key: &str, message: impl Into<String>) -> CliError {
        CliError::config(self.line_of(key), message)
    }

    pub fn solver(&self, seed: Option<u64>) -> SolverOptions {
        let mut options = SolverOptions::default();
        if let Some(s) = &self.scenario.solver {
            options.tolerance = s.tolerance.unwrap_or(options.tolerance);
            options.max_iterations = s.max_iterations.unwrap_or(options.max_iterations);
            options.jitter_starts = s.jitter_starts.unwrap_or(options.jitter_starts);
        }
        options.seed = seed.or(self.scenario.seed).unwrap_or(0);
        options
    }

    /// Builds the hand, converting every value to internal units.
    pub fn hand(&self, seed: Option<u64>) -> Result<HandConfig<f64>, CliError> {
        let sc = &self.scenario;
        let u = sc.units;
        let mut hand = HandConfig::reference();
        if let Some(t) = &sc.trsw {
            let mut p = ScrewDriveParams::new(t.r_g1, t.r_g2, u.angle(t.theta_th), t.mu_st, t.tau_pre_max, t.tau_m_max)
                .map_err(|e| self.error_at("trsw", e.to_string()))?;
            if let Some(k) = t.kinetic_ratio {
                p = p
                    .with_kinetic_ratio(k)
                    .map_err(|e| self.error_at("kinetic_ratio", e.to_string()))?;
            }
            hand.trsw = p;
        }
        if let Some(f) = &sc.finger {
            let springs = match &f.spring_stiffness {
                Some(k) => k.iter().map(|&v| u.stiffness(v)).collect(),
                None => vec![0.0; f.n],
            };
            let mut p = FingerParams::new(
                f.n,
                f.link_length,
                f.shaft_offset,
                springs,
                u.stiffness(f.shaft_stiffness),
            )
            .map_err(|e| self.error_at("finger", e.to_string()))?;
            if let Some(tip) = f.tip_length {
                p.tip_length = tip;
            }
            p.convention = ChainConvention {
                frame_rotation: match f.frame_rotation {
                    Some(FrameRotationKey::Cumulative) => FrameRotation::Cumulative,
                    _ => FrameRotation::Adjacent,
                },
                tip_force: match f.tip_force {
                    Some(TipForceKey::Reaction) => TipForce::Reaction,
                    _ => TipForce::Direct,
                },
            };
            p.validate().map_err(|e| self.error_at("finger", e.to_string()))?;
            hand.finger = p;
        }
        if let Some(l) = &sc.lock {
            let mut p = match &l.pawl_positions {
                Some(pawls) => LockParams {
                    pawl_positions: pawls.clone(),
                    protrusion_pitch: l.protrusion_pitch,
                    protrusion_count: l.protrusion_count,
                    ..hand.lock.clone()
                },
                None => LockParams::staggered(
                    hand.finger.n,
                    hand.finger.link_length,
                    l.first_pawl_offset.unwrap_or(3.0),
                    l.protrusion_pitch,
                    l.protrusion_count,
                )
                .map_err(|e| self.error_at("lock", e.to_string()))?,
            };
            if let Some(r) = l.unlock_roll {
                p.unlock_roll = u.angle(r);
            }
            if let Some(r) = l.roll_tolerance {
                p.roll_tolerance = u.angle(r);
            }
            p.validate().map_err(|e| self.error_at("lock", e.to_string()))?;
            hand.lock = p;
        }
        if let Some(h) = &sc.hand {
            let positive = |v: f64| v.is_finite() && v > 0.0;
            if !positive(h.tau_th) {
                return Err(self.error_at("tau_th", "tau_th must be finite and positive"));
            }
            if !positive(h.motor_step) {
                return Err(self.error_at("motor_step", "motor_step must be finite and positive"));
            }
            if !(h.finger_strength.is_finite() && h.finger_strength >= 0.0) {
                return Err(self.error_at("finger_strength", "finger_strength must be finite and >= 0"));
            }
            if !h.lock_start.is_finite() {
                return Err(self.error_at("lock_start", "lock_start must be finite"));
            }
            hand.tau_th = h.tau_th;
            hand.finger_count = h.finger_count;
            hand.finger_strength = h.finger_strength;
            hand.motor_step = u.angle(h.motor_step);
            hand.lock_start = h.lock_start;
        }
        hand.solver = self.solver(seed);
        hand.wrap = WrapOptions {
            solver: hand.solver,
            ..WrapOptions::default()
        };
        if let Some(g) = &sc.grasp {
            if let Some(step) = g.force_step {
                if !(step > 0.0 && step.is_finite()) {
                    return Err(self.error_at("force_step", "force_step must be finite and positive"));
                }
                hand.wrap.force_step = step;
            }
            if let Some(tol) = g.penetration_tolerance {
                if !(tol > 0.0 && tol.is_finite()) {
                    return Err(self.error_at(
                        "penetration_tolerance",
                        "penetration_tolerance must be finite and positive",
                    ));
                }
                hand.wrap.penetration_tolerance = tol;
            }
        }
        Ok(hand)
    }

    pub fn angle(&self, v: f64) -> f64 {
        self.scenario.units.angle(v)
    }

    pub fn stiffness(&self, v: f64) -> f64 {
        self.scenario.units.stiffness(v)
    }

    /// Converts a stiffness in N·mm/rad back to the scenario's unit.
    pub fn stiffness_out(&self, v: f64) -> f64 {
        v / self.scenario.units.stiffness(1.0)
    }
}

/// serde_json appends " at line L column C"; the caller prefixes the line itself.
fn strip_position(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_owned(),
        None => msg,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNITS: &str =
        r#""units": {"force": "N", "length": "mm", "angle": "deg", "torque": "N·mm", "stiffness": "N·mm/deg"}"#;

    #[test]
    fn empty_scenario_reports_missing_selector() {
        let err = Source::parse("").unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("missing experiment selector"));
        assert!(Source::parse("{}")
            .unwrap_err()
            .to_string()
            .contains("missing experiment selector"));
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_line() {
        let text = format!("{{\n \"experiment\": \"validate\",\n {UNITS},\n \"colour\": 3\n}}");
        let err = Source::parse(&text).unwrap_err();
        assert!(err.to_string().starts_with("line 4:"), "{err}");
        assert!(err.to_string().contains("colour"));
    }

    #[test]
    fn degree_stiffness_converts_to_radians() {
        let text = format!(
            r#"{{"experiment": "finger-solve", {UNITS},
              "finger": {{"n": 7, "link_length": 12, "shaft_offset": 13, "shaft_stiffness": 4.5}}}}"#
        );
        let hand = Source::parse(&text).unwrap().hand(None).unwrap();
        assert!((hand.finger.shaft_stiffness - 4.5 * 180.0 / PI).abs() < 1e-12);
        assert_eq!(hand.finger.spring_stiffness, vec![0.0; 7]);
    }

    #[test]
    fn invalid_values_point_at_their_section() {
        let text = format!(
            "{{\"experiment\": \"validate\",\n {UNITS},\n \"finger\": {{\"n\": 0, \"link_length\": 12, \"shaft_offset\": 13, \"shaft_stiffness\": 4.5}}\n}}"
        );
        let err = Source::parse(&text).unwrap().hand(None).unwrap_err();
        assert!(err.to_string().starts_with("line 3:"), "{err}");
    }

    #[test]
    fn units_must_be_tagged() {
        let text = r#"{"experiment": "validate", "units": {"force": "kN", "length": "mm", "angle": "deg", "torque": "N·mm", "stiffness": "N·mm/deg"}}"#;
        assert_eq!(Source::parse(text).unwrap_err().exit_code(), 1);
        assert!(Source::parse(r#"{"experiment": "validate"}"#).is_err());
    }
}
