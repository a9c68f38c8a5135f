//! Grasp and release with a single motor.
//!
//! Forward motor rotation pushes the shaft into the finger until the motor
//! torque reaches the grasp threshold. Reversing the motor first takes up the
//! ratchet backlash; the engaged lock then blocks the shaft, the screw drive
//! switches to rotation, and the shaft roll turns the protrusions clear of
//! the pawls. With the lock open the drive returns to translation and the
//! shaft is pulled back to its origin.
//!
//! Shaft insertion and finger bend are coupled through `x = d_L * Σθ`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::finger::{solve_posture_with, FingerError, FingerParams, PostureConstraints, SolverOptions};
use crate::grasp::{threshold_force, wrap_simulate, CircularObject, GraspError, WrapOptions, WrapResult};
use crate::lock::{advance, backlash, retract, set_roll, LockError, LockMode, LockParams, LockState};
use crate::trsw::{
    step, switching_threshold, validate_design, AxialLoad, DesignReport, DriveMode, LoadForce, MechanismState,
    ScrewDriveParams, TrswError,
};
use crate::Real;

/// Standard gravity (m/s²).
pub const STANDARD_GRAVITY: f64 = 9.806_65;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandConfig<T> {
    pub trsw: ScrewDriveParams<T>,
    pub finger: FingerParams<T>,
    pub lock: LockParams<T>,
    /// Motor torque at which grasping stops (N·mm).
    pub tau_th: T,
    pub finger_count: usize,
    /// Force a single finger withstands before breaking (N).
    pub finger_strength: T,
    /// Motor increment per simulation step (rad).
    pub motor_step: T,
    /// Lock position of the leading protrusion when the shaft is at its origin (mm).
    pub lock_start: T,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub wrap: WrapOptions,
}

impl HandConfig<f64> {
    /// Three fingers of seven links with uniform-bend springs and a 0.1 N·m grasp threshold.
    pub fn reference() -> Self {
        let shaft_stiffness = 257.831_007_808_870_5;
        let springs = vec![0.0, 19.2, 1239.3, 2780.6, 3945.0, 4725.4, 5116.7];
        let finger = FingerParams::new(7, 12.0, 13.0, springs, shaft_stiffness).expect("valid finger");
        let trsw = ScrewDriveParams::new(16.0, 8.0, 14f64.to_radians(), 0.3, 300.0, 250.0).expect("valid drive");
        let lock = LockParams::staggered(7, 12.0, 3.0, 4.0, 30).expect("valid lock");
        Self {
            trsw,
            finger,
            lock,
            tau_th: 100.0,
            finger_count: 3,
            finger_strength: 104.2,
            motor_step: 0.005,
            lock_start: 84.0,
            solver: SolverOptions::default(),
            wrap: WrapOptions::default(),
        }
    }
}

impl<T: Real> HandConfig<T> {
    /// Insertion force at which grasping stops (N).
    pub fn grasp_force(&self) -> T {
        threshold_force(&self.trsw, self.tau_th)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityCheck<T> {
    pub passed: bool,
    pub margin: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport<T> {
    pub design: DesignReport<T>,
    /// The grasp force stays below the (kinetic) switching threshold.
    pub grasp_stays_translational: FeasibilityCheck<T>,
    /// The grasp threshold is within the motor's reach.
    pub threshold_within_motor: FeasibilityCheck<T>,
    /// Some pawl lies behind the leading protrusion, so the lock can engage.
    pub lock_reachable: FeasibilityCheck<T>,
    pub assumptions: Vec<String>,
}

impl<T: Real> FeasibilityReport<T> {
    pub fn passed(&self) -> bool {
        self.design.passed()
            && self.grasp_stays_translational.passed
            && self.threshold_within_motor.passed
            && self.lock_reachable.passed
    }
}

pub fn check_cycle_feasibility<T: Real>(config: &HandConfig<T>) -> FeasibilityReport<T> {
    let design = validate_design(&config.trsw);
    let f_sw = switching_threshold(&config.trsw).unwrap_or_else(|_| T::zero());
    let slip = config.trsw.kinetic_ratio * f_sw - config.grasp_force();
    let motor = config.trsw.tau_m_max - config.tau_th;
    let first_pawl = config
        .lock
        .pawl_positions
        .iter()
        .map(|p| p[0])
        .fold(T::infinity(), T::min);
    let reach = config.lock_start - first_pawl;
    FeasibilityReport {
        design,
        grasp_stays_translational: FeasibilityCheck {
            passed: slip > T::zero(),
            margin: slip,
        },
        threshold_within_motor: FeasibilityCheck {
            passed: motor >= T::zero(),
            margin: motor,
        },
        lock_reachable: FeasibilityCheck {
            passed: reach >= T::zero(),
            margin: reach,
        },
        assumptions: vec![
            "the lock is rigid and holds at least the switching threshold force up to the finger strength".into(),
        ],
    }
}

/// Theoretical payload of the hand (kg).
pub fn payload_estimate<T: Real>(config: &HandConfig<T>) -> T {
    T::from_count(config.finger_count) * config.finger_strength / T::lit(STANDARD_GRAVITY)
}

/// Axial force the finger exerts on the shaft as a function of insertion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerLoad<T> {
    /// Insertion (mm), strictly increasing from 0.
    insertion: Vec<T>,
    /// Force (N), non-decreasing from 0.
    force: Vec<T>,
    shaft_offset: T,
    /// Slope beyond the last sample (N/mm).
    end_stiffness: T,
}

impl<T: Real> FingerLoad<T> {
    /// Builds the load from `(f_tr, Σθ)` samples sorted by force.
    ///
    /// Where more force does not bend the finger further, the insertion is
    /// held at its running maximum, so the load stiffens instead of reversing.
    pub fn from_samples(samples: &[(T, T)], shaft_offset: T, end_stiffness: T) -> Self {
        let mut insertion = vec![T::zero()];
        let mut force = vec![T::zero()];
        for &(f, bend) in samples {
            if f <= *force.last().unwrap() {
                continue;
            }
            let prev = *insertion.last().unwrap();
            let gap = T::lit(1e-6) * (T::one() + prev);
            insertion.push((shaft_offset * bend).max(prev + gap));
            force.push(f);
        }
        Self {
            insertion,
            force,
            shaft_offset,
            end_stiffness,
        }
    }

    pub fn force_at(&self, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        let last = self.insertion.len() - 1;
        if x >= self.insertion[last] {
            return self.force[last] + self.end_stiffness * (x - self.insertion[last]);
        }
        let i = self.insertion.partition_point(|&u| u <= x);
        let (u0, u1) = (self.insertion[i - 1], self.insertion[i]);
        let (f0, f1) = (self.force[i - 1], self.force[i]);
        f0 + (f1 - f0) * (x - u0) / (u1 - u0)
    }

    /// Smallest insertion at which the force reaches `f`.
    pub fn insertion_at(&self, f: T) -> T {
        if f <= T::zero() {
            return T::zero();
        }
        let last = self.force.len() - 1;
        if f >= self.force[last] {
            return self.insertion[last] + (f - self.force[last]) / self.end_stiffness;
        }
        let i = self.force.partition_point(|&g| g < f);
        let (u0, u1) = (self.insertion[i - 1], self.insertion[i]);
        let (f0, f1) = (self.force[i - 1], self.force[i]);
        u0 + (u1 - u0) * (f - f0) / (f1 - f0)
    }

    /// Total finger bend at insertion `x` (rad).
    pub fn bend_at(&self, x: T) -> T {
        let last = *self.insertion.last().unwrap();
        x.max(T::zero()).min(last) / self.shaft_offset
    }
}

impl<T: Real> AxialLoad<T> for FingerLoad<T> {
    fn force(&self, x: T, _direction: T) -> LoadForce<T> {
        LoadForce::Finite(self.force_at(x))
    }

    fn travel_to(&self, x: T, direction: T, limit: T) -> Option<T> {
        if self.force_at(x) >= limit {
            return Some(T::zero());
        }
        if direction > T::zero() {
            Some((self.insertion_at(limit) - x).max(T::zero()))
        } else {
            None
        }
    }

    fn passive_force(&self, x: T) -> T {
        self.force_at(x)
    }
}

/// Finger load plus the lock acting as a rigid stop against retraction.
struct LockedLoad<'a, T> {
    finger: &'a FingerLoad<T>,
    stop: Option<T>,
}

impl<T: Real> AxialLoad<T> for LockedLoad<'_, T> {
    fn force(&self, x: T, direction: T) -> LoadForce<T> {
        match self.stop {
            Some(stop) if direction < T::zero() && x <= stop + T::lit(1e-9) * T::one().max(stop.abs()) => {
                LoadForce::Blocked
            }
            _ => self.finger.force(x, direction),
        }
    }

    fn travel_to(&self, x: T, direction: T, limit: T) -> Option<T> {
        let finger = self.finger.travel_to(x, direction, limit);
        match self.stop {
            Some(stop) if direction < T::zero() => {
                let room = (x - stop).max(T::zero());
                Some(finger.map_or(room, |f| f.min(room)))
            }
            _ => finger,
        }
    }

    fn passive_force(&self, x: T) -> T {
        self.finger.force_at(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CyclePhase {
    Grasp,
    Hold,
    ReleaseRotate,
    Extend,
}

impl CyclePhase {
    pub fn as_str(self) -> &'static str {
        match self {
            CyclePhase::Grasp => "grasp",
            CyclePhase::Hold => "hold",
            CyclePhase::ReleaseRotate => "release-rotate",
            CyclePhase::Extend => "extend",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord<T> {
    pub step: usize,
    pub phase: CyclePhase,
    pub theta_m: T,
    pub mode: DriveMode,
    pub x_shaft: T,
    pub theta_sh: T,
    pub f_ex: T,
    pub lock_engaged: bool,
    pub sum_theta: T,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CycleTrace<T> {
    pub records: Vec<CycleRecord<T>>,
}

impl<T: Real> CycleTrace<T> {
    /// Consecutive distinct phases.
    pub fn phases(&self) -> Vec<CyclePhase> {
        let mut out: Vec<CyclePhase> = Vec::new();
        for r in &self.records {
            if out.last() != Some(&r.phase) {
                out.push(r.phase);
            }
        }
        out
    }

    /// Every change of drive mode between consecutive records.
    pub fn mode_transitions(&self) -> Vec<(DriveMode, DriveMode)> {
        self.records
            .windows(2)
            .filter(|w| w[0].mode != w[1].mode)
            .map(|w| (w[0].mode, w[1].mode))
            .collect()
    }

    fn push(&mut self, phase: CyclePhase, drive: &MechanismState<T>, lock: &LockState<T>, load: &FingerLoad<T>) {
        self.records.push(CycleRecord {
            step: self.records.len(),
            phase,
            theta_m: drive.theta_m,
            mode: drive.mode,
            x_shaft: drive.x_shaft,
            theta_sh: drive.theta_sh,
            f_ex: drive.f_ex,
            lock_engaged: lock.engaged,
            sum_theta: load.bend_at(drive.x_shaft),
        });
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CycleError {
    #[error("screw drive cannot translate: thread self-locks or no preload window")]
    Design(DesignReport<f64>),
    #[error(
        "grasp force {grasp:.6} N reaches the switching threshold {threshold:.6} N; the hand would slip into rotation"
    )]
    SlippedIntoRotation { grasp: f64, threshold: f64 },
    #[error("motor stalled during {phase:?}: {source}")]
    Stall {
        phase: CyclePhase,
        #[source]
        source: TrswError,
    },
    #[error("the lock cannot engage from the hold position")]
    LockNotEngageable,
    #[error("motor step must be finite and positive")]
    InvalidStep,
    #[error("release did not finish within {0} steps")]
    StepBudget(usize),
    #[error(transparent)]
    Drive(TrswError),
    #[error(transparent)]
    Lock(#[from] LockError),
    #[error(transparent)]
    Finger(#[from] FingerError),
    #[error(transparent)]
    Grasp(#[from] GraspError),
}

/// A failed phase together with the records produced before the failure.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleFailure<T> {
    pub error: CycleError,
    pub partial: CycleTrace<T>,
}

impl<T> fmt::Display for CycleFailure<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.error.fmt(f)
    }
}

impl<T: fmt::Debug> std::error::Error for CycleFailure<T> {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl<T> From<CycleError> for CycleFailure<T> {
    fn from(error: CycleError) -> Self {
        Self {
            error,
            partial: CycleTrace { records: Vec::new() },
        }
    }
}

/// State handed from the grasp to the release phase.
#[derive(Debug, Clone, PartialEq)]
pub struct HeldState<T> {
    pub drive: MechanismState<T>,
    pub lock: LockState<T>,
    pub load: FingerLoad<T>,
    pub wrap: Option<WrapResult<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraspOutcome<T> {
    pub trace: CycleTrace<T>,
    pub held: HeldState<T>,
}

/// Samples the free finger from zero to `f_top` in `count` force steps.
fn free_finger_load<T: Real>(
    finger: &FingerParams<T>,
    f_top: T,
    count: usize,
    solver: &SolverOptions,
) -> Result<FingerLoad<T>, FingerError> {
    let mut samples = Vec::with_capacity(count);
    let mut warm: Option<Vec<T>> = None;
    for i in 1..=count {
        let f = f_top * T::from_count(i) / T::from_count(count);
        let constraints = PostureConstraints {
            frozen: Vec::new(),
            warm_start: warm.take(),
        };
        let s = solve_posture_with(finger, f, solver, &constraints)?;
        samples.push((f, s.posture.total_bend()));
        warm = Some(s.distribution.forces);
    }
    Ok(FingerLoad::from_samples(
        &samples,
        finger.shaft_offset,
        end_stiffness(finger),
    ))
}

/// Stiffness used once the finger can bend no further (N/mm).
fn end_stiffness<T: Real>(finger: &FingerParams<T>) -> T {
    T::lit(1e3) * finger.shaft_stiffness / (finger.shaft_offset * finger.shaft_offset)
}

/// Drives the motor forward until the motor torque reaches the grasp threshold.
pub fn grasp_phase<T: Real>(
    config: &HandConfig<T>,
    object: Option<&CircularObject<T>>,
) -> Result<GraspOutcome<T>, CycleFailure<T>> {
    let design = validate_design(&config.trsw);
    if !design.thread_translates.passed || !design.translation_window.passed {
        return Err(CycleError::Design(to_f64_report(&design)).into());
    }
    if !(config.motor_step > T::zero()) || !config.motor_step.is_finite() {
        return Err(CycleError::InvalidStep.into());
    }
    let f_grasp = config.grasp_force();
    let f_sw = switching_threshold(&config.trsw).map_err(CycleError::Drive)?;
    if f_grasp >= f_sw {
        return Err(CycleError::SlippedIntoRotation {
            grasp: f_grasp.as_f64(),
            threshold: f_sw.as_f64(),
        }
        .into());
    }

    let solver = config.solver;
    let (load, wrap) = match object {
        None => {
            let f_top = f_grasp * T::lit(1.25);
            let count = (f_top / T::lit(0.25)).ceil().to_usize().unwrap_or(1).max(1);
            (
                free_finger_load(&config.finger, f_top, count, &solver).map_err(CycleError::from)?,
                None,
            )
        }
        Some(obj) => {
            let wrap = wrap_simulate(&config.finger, obj, &config.trsw, config.tau_th, &config.wrap)
                .map_err(CycleError::from)?;
            let samples: Vec<(T, T)> = wrap
                .steps
                .iter()
                .map(|s| (s.f_tr, s.theta.iter().fold(T::zero(), |a, &t| a + t)))
                .collect();
            let load = FingerLoad::from_samples(&samples, config.finger.shaft_offset, end_stiffness(&config.finger));
            (load, Some(wrap))
        }
    };

    let mut drive = MechanismState::at_rest();
    let mut lock = LockState::new(&config.lock, config.lock_start, T::zero());
    let mut trace = CycleTrace::default();
    trace.push(CyclePhase::Grasp, &drive, &lock, &load);

    let gain = config.trsw.lead_gain();
    let x_goal = load.insertion_at(f_grasp);
    let budget = ((x_goal / (gain * config.motor_step)).ceil().to_usize().unwrap_or(0)) * 2 + 64;
    for _ in 0..budget {
        let room = x_goal - drive.x_shaft;
        if room <= T::lit(1e-12) * T::one().max(x_goal) {
            break;
        }
        let increment = config.motor_step.min(room / gain);
        let next = match step(&config.trsw, &drive, &load, increment) {
            Ok(next) => next,
            Err(source) => {
                return Err(CycleFailure {
                    error: CycleError::Stall {
                        phase: CyclePhase::Grasp,
                        source,
                    },
                    partial: trace,
                })
            }
        };
        if next.mode == DriveMode::Rotation {
            return Err(CycleFailure {
                error: CycleError::SlippedIntoRotation {
                    grasp: f_grasp.as_f64(),
                    threshold: f_sw.as_f64(),
                },
                partial: trace,
            });
        }
        let dx = next.x_shaft - drive.x_shaft;
        if dx > T::zero() {
            lock = match advance(&config.lock, &lock, dx) {
                Ok(l) => l,
                Err(e) => {
                    return Err(CycleFailure {
                        error: e.into(),
                        partial: trace,
                    })
                }
            };
        }
        drive = next;
        trace.push(CyclePhase::Grasp, &drive, &lock, &load);
    }
    Ok(GraspOutcome {
        trace,
        held: HeldState {
            drive,
            lock,
            load,
            wrap,
        },
    })
}

fn to_f64_report<T: Real>(r: &DesignReport<T>) -> DesignReport<f64> {
    let conv = |c: crate::trsw::DesignCheck<T>| crate::trsw::DesignCheck {
        passed: c.passed,
        margin: c.margin.as_f64(),
    };
    DesignReport {
        thread_translates: conv(r.thread_translates),
        preload_within_motor: conv(r.preload_within_motor),
        translation_window: conv(r.translation_window),
    }
}

/// Reverses the motor from the held state until the shaft is back at its origin.
pub fn release_phase<T: Real>(config: &HandConfig<T>, held: &HeldState<T>) -> Result<CycleTrace<T>, CycleFailure<T>> {
    let mut drive = held.drive;
    let mut lock = held.lock.clone();
    let load = &held.load;
    let mut trace = CycleTrace::default();
    trace.push(CyclePhase::Hold, &drive, &lock, load);

    let mut phase = CyclePhase::Hold;
    let stop_for = |lock: &LockState<T>, x: T| -> Result<Option<T>, CycleError> {
        if lock.mode == LockMode::Unlocking {
            return Ok(None);
        }
        let b = backlash(&config.lock, lock)?;
        if !b.is_finite() {
            return Err(CycleError::LockNotEngageable);
        }
        Ok(Some(x - b))
    };
    let mut stop = match stop_for(&lock, drive.x_shaft) {
        Ok(s) => s,
        Err(error) => return Err(CycleFailure { error, partial: trace }),
    };
    if stop.is_none() {
        phase = CyclePhase::Extend;
    }

    let gain = config.trsw.lead_gain();
    let rotation_steps = (config.trsw.r_g1 / config.trsw.r_g2 * T::PI() / config.motor_step)
        .ceil()
        .to_usize()
        .unwrap_or(0);
    let travel_steps = (drive.x_shaft / (gain * config.motor_step))
        .ceil()
        .to_usize()
        .unwrap_or(0);
    let budget = 2 * (rotation_steps + travel_steps) + 64;

    for _ in 0..budget {
        if phase == CyclePhase::Extend && drive.x_shaft <= T::zero() {
            return Ok(trace);
        }
        let increment = if phase == CyclePhase::Extend {
            -config.motor_step.min(drive.x_shaft / gain)
        } else {
            -config.motor_step
        };
        let locked = LockedLoad { finger: load, stop };
        let next = match step(&config.trsw, &drive, &locked, increment) {
            Ok(next) => next,
            Err(source) => {
                let phase = if matches!(source, TrswError::Stall { .. }) && phase == CyclePhase::Hold {
                    CyclePhase::ReleaseRotate
                } else {
                    phase
                };
                return Err(CycleFailure {
                    error: CycleError::Stall { phase, source },
                    partial: trace,
                });
            }
        };

        let dx = drive.x_shaft - next.x_shaft;
        if dx > T::zero() {
            lock = match retract(&config.lock, &lock, dx) {
                Ok(r) => r.state,
                Err(e) => {
                    return Err(CycleFailure {
                        error: e.into(),
                        partial: trace,
                    })
                }
            };
            if lock.mode == LockMode::SelfLocking && stop.is_some_and(|s| next.x_shaft <= s) {
                lock.engaged = true;
            }
        }
        if next.mode == DriveMode::Rotation {
            phase = CyclePhase::ReleaseRotate;
            lock = set_roll(&config.lock, &lock, next.theta_sh);
            if lock.mode == LockMode::Unlocking {
                stop = None;
            }
        } else if stop.is_none() {
            phase = CyclePhase::Extend;
        }
        drive = next;
        trace.push(phase, &drive, &lock, load);
    }
    Err(CycleFailure {
        error: CycleError::StepBudget(budget),
        partial: trace,
    })
}

/// A complete grasp followed by a release.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleOutcome<T> {
    pub trace: CycleTrace<T>,
    pub held: HeldState<T>,
}

pub fn run_cycle<T: Real>(
    config: &HandConfig<T>,
    object: Option<&CircularObject<T>>,
) -> Result<CycleOutcome<T>, CycleFailure<T>> {
    let grasp = grasp_phase(config, object)?;
    let mut trace = grasp.trace;
    let offset = trace.records.len();
    match release_phase(config, &grasp.held) {
        Ok(release) => {
            trace.records.extend(release.records.into_iter().map(|mut r| {
                r.step += offset;
                r
            }));
            Ok(CycleOutcome {
                trace,
                held: grasp.held,
            })
        }
        Err(mut failure) => {
            let mut partial = trace;
            partial.records.extend(failure.partial.records.into_iter().map(|mut r| {
                r.step += offset;
                r
            }));
            failure.partial = partial;
            Err(failure)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn payload_examples() {
        let mut c = HandConfig::reference();
        let kg = payload_estimate(&c);
        assert!((kg - 31.876).abs() < 1e-3 && kg > 30.0);
        c.finger_count = 1;
        assert!((payload_estimate(&c) - 10.625).abs() < 1e-3);
        c.finger_count = 0;
        assert_eq!(payload_estimate(&c), 0.0);
    }

    #[test]
    fn reference_config_is_feasible() {
        let report = check_cycle_feasibility(&HandConfig::reference());
        assert!(report.passed(), "{report:?}");
        assert!(!report.assumptions.is_empty());
    }

    #[test]
    fn low_preload_fails_the_translation_check() {
        let mut c = HandConfig::reference();
        c.trsw.tau_pre_max = 150.0;
        let report = check_cycle_feasibility(&c);
        assert!(!report.grasp_stays_translational.passed);
        c.trsw.tau_pre_max = 0.0;
        assert!(!check_cycle_feasibility(&c).grasp_stays_translational.passed);
    }

    #[test]
    fn finger_load_is_monotone_and_invertible() {
        let samples = [(1.0, 0.1), (2.0, 0.3), (3.0, 0.25), (4.0, 0.5)];
        let load = FingerLoad::from_samples(&samples, 13.0, 1e4);
        let mut prev = 0.0;
        for k in 0..200 {
            let x = k as f64 * 0.05;
            let f = load.force_at(x);
            assert!(f >= prev);
            prev = f;
        }
        for f in [0.5, 1.5, 2.5, 3.5, 10.0] {
            assert!((load.force_at(load.insertion_at(f)) - f).abs() < 1e-6);
        }
    }

    #[test]
    fn reference_cycle_follows_the_phase_grammar() {
        let c = HandConfig::reference();
        let out = run_cycle(&c, None).unwrap();
        let phases = out.trace.phases();
        assert_eq!(
            phases,
            vec![
                CyclePhase::Grasp,
                CyclePhase::Hold,
                CyclePhase::ReleaseRotate,
                CyclePhase::Extend
            ]
        );
        assert_eq!(
            out.trace.mode_transitions(),
            vec![
                (DriveMode::Translation, DriveMode::Rotation),
                (DriveMode::Rotation, DriveMode::Translation)
            ]
        );
        let last = out.trace.records.last().unwrap();
        assert!(last.sum_theta <= 1e-3);
        assert_eq!(last.x_shaft, 0.0);
        let grasp_end = out.held.drive;
        assert!((grasp_end.tau_m - c.tau_th).abs() < 1e-9, "{grasp_end:?}");
    }

    #[test]
    fn excessive_preload_stalls_in_release_rotation() {
        let mut c = HandConfig::reference();
        c.trsw.tau_pre_max = 600.0;
        let failure = run_cycle(&c, None).unwrap_err();
        assert!(matches!(
            failure.error,
            CycleError::Stall {
                phase: CyclePhase::ReleaseRotate,
                ..
            }
        ));
    }

    #[test]
    fn zero_unlock_angle_skips_rotation() {
        let mut c = HandConfig::reference();
        c.lock.unlock_roll = 0.0;
        let out = run_cycle(&c, None).unwrap();
        assert!(out.trace.records.iter().all(|r| r.mode == DriveMode::Translation));
        assert!(!out.trace.phases().contains(&CyclePhase::ReleaseRotate));
        assert_eq!(out.trace.records.last().unwrap().x_shaft, 0.0);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(6))]

        #[test]
        fn feasible_configs_complete_the_cycle(pre in 200.0f64..320.0, tau_th in 40.0f64..140.0) {
            let mut c = HandConfig::reference();
            c.trsw.tau_pre_max = pre;
            c.tau_th = tau_th;
            if check_cycle_feasibility(&c).passed() {
                let out = run_cycle(&c, None);
                proptest::prop_assert!(out.is_ok(), "{:?}", out.err());
            }
        }
    }
}
