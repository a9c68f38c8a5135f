//! Translation/rotation switching screw drive.
//!
//! A motor drives gear 1 through gear 2; gear 1 carries the inner thread that
//! engages the drive shaft. A preloaded slider resists shaft rotation. While
//! the axial load stays below the switching threshold the shaft translates
//! like a lead screw; once the load reaches it, the slider slips and the
//! shaft rotates in place.
//!
//! Units: mm, N, N·mm, rad. The thread radius is taken equal to the gear-1
//! pitch radius in every kinematic and static relation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Real;

/// Default bound on the motor increment of a single [`step`].
pub const DEFAULT_MAX_MOTOR_STEP: f64 = 0.01;

/// Relative slack applied to threshold comparisons.
const THRESHOLD_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrswError {
    #[error("invalid screw-drive parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("lead angle must be positive for a finite switching threshold")]
    DegenerateLeadAngle,
    #[error("motor stall: required motor torque {required:.6} N·mm exceeds the limit {limit:.6} N·mm")]
    Stall { required: f64, limit: f64 },
    #[error("motor increment must be finite")]
    InvalidIncrement,
    #[error("invalid preload calibration: {0}")]
    InvalidCalibration(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DriveMode {
    Translation,
    Rotation,
}

impl DriveMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DriveMode::Translation => "translation",
            DriveMode::Rotation => "rotation",
        }
    }
}

/// Geometry, friction, preload and motor limits of the switching drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScrewDriveParams<T> {
    /// Pitch radius of gear 1 (mm); also the thread radius.
    pub r_g1: T,
    /// Pitch radius of gear 2 on the motor (mm).
    pub r_g2: T,
    /// Thread lead angle (rad).
    pub theta_th: T,
    /// Maximum static friction coefficient on the thread surface.
    pub mu_st: T,
    /// Maximum static friction torque the preloaded slider can hold (N·mm).
    pub tau_pre_max: T,
    /// Maximum motor torque (N·mm).
    pub tau_m_max: T,
    /// Kinetic/static friction ratio at the slider once it slips.
    pub kinetic_ratio: T,
}

impl<T: Real> ScrewDriveParams<T> {
    pub fn new(r_g1: T, r_g2: T, theta_th: T, mu_st: T, tau_pre_max: T, tau_m_max: T) -> Result<Self, TrswError> {
        let params = Self {
            r_g1,
            r_g2,
            theta_th,
            mu_st,
            tau_pre_max,
            tau_m_max,
            kinetic_ratio: T::one(),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_kinetic_ratio(mut self, ratio: T) -> Result<Self, TrswError> {
        self.kinetic_ratio = ratio;
        self.validate()?;
        Ok(self)
    }

    pub fn with_preload(mut self, tau_pre_max: T) -> Result<Self, TrswError> {
        self.tau_pre_max = tau_pre_max;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), TrswError> {
        let bad = |name, reason: &str| {
            Err(TrswError::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        let all = [
            self.r_g1,
            self.r_g2,
            self.theta_th,
            self.mu_st,
            self.tau_pre_max,
            self.tau_m_max,
            self.kinetic_ratio,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("*", "all parameters must be finite");
        }
        if self.r_g1 <= T::zero() {
            return bad("r_g1", "must be > 0");
        }
        if self.r_g2 <= T::zero() {
            return bad("r_g2", "must be > 0");
        }
        if self.theta_th <= T::zero() || self.theta_th >= T::FRAC_PI_2() {
            return bad("theta_th", "must lie in (0, pi/2)");
        }
        if self.mu_st < T::zero() {
            return bad("mu_st", "must be >= 0");
        }
        if self.tau_pre_max < T::zero() {
            return bad("tau_pre_max", "must be >= 0");
        }
        if self.tau_m_max <= T::zero() {
            return bad("tau_m_max", "must be > 0");
        }
        if self.kinetic_ratio <= T::zero() || self.kinetic_ratio > T::one() {
            return bad("kinetic_ratio", "must lie in (0, 1]");
        }
        Ok(())
    }

    /// Gear-1 rotation per radian of motor rotation, `r_g2 / r_g1`.
    pub fn gear_ratio(&self) -> T {
        self.r_g2 / self.r_g1
    }

    /// `r_g2 tan(theta_th)`: shaft travel per motor radian in translation, and
    /// motor torque per newton of axial load.
    pub fn lead_gain(&self) -> T {
        self.r_g2 * self.theta_th.tan()
    }

    /// Axial load at which translation needs the full motor torque.
    pub fn stall_force(&self) -> T {
        self.tau_m_max / self.lead_gain()
    }

    /// Motor torque while the slider slips (rotation plateau).
    pub fn rotation_motor_torque(&self) -> T {
        self.gear_ratio() * self.tau_pre_max * self.kinetic_ratio
    }

    /// Motor torque needed to break the slider loose.
    pub fn breakaway_motor_torque(&self) -> T {
        self.gear_ratio() * self.tau_pre_max
    }

    /// Motor torque needed to translate against an axial load of magnitude `f_ex`.
    pub fn translation_motor_torque(&self, f_ex: T) -> T {
        self.gear_ratio() * required_preload_torque(self, f_ex.abs())
    }
}

/// Monotone map from slider slit width to maximum preload torque.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreloadCalibration<T> {
    points: Vec<(T, T)>,
}

impl<T: Real> PreloadCalibration<T> {
    /// `points` are `(d_slit mm, tau_pre_max N·mm)` with strictly increasing
    /// slit width and non-decreasing torque.
    pub fn new(points: Vec<(T, T)>) -> Result<Self, TrswError> {
        if points.is_empty() {
            return Err(TrswError::InvalidCalibration("table is empty".into()));
        }
        for (i, &(d, tau)) in points.iter().enumerate() {
            if !d.is_finite() || !tau.is_finite() || tau < T::zero() {
                return Err(TrswError::InvalidCalibration(format!(
                    "row {i} must be finite with non-negative torque"
                )));
            }
            if i > 0 {
                let (d_prev, tau_prev) = points[i - 1];
                if d <= d_prev || tau < tau_prev {
                    return Err(TrswError::InvalidCalibration(format!("row {i} breaks monotonicity")));
                }
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }

    /// Linear interpolation; slit widths outside the table are rejected.
    pub fn tau_pre_max(&self, d_slit: T) -> Result<T, TrswError> {
        let first = self.points[0];
        let last = self.points[self.points.len() - 1];
        if d_slit < first.0 || d_slit > last.0 {
            return Err(TrswError::InvalidCalibration(format!(
                "slit width {d_slit} outside the calibrated range [{}, {}]",
                first.0, last.0
            )));
        }
        for w in self.points.windows(2) {
            let ((d0, t0), (d1, t1)) = (w[0], w[1]);
            if d_slit <= d1 {
                return Ok(t0 + (t1 - t0) * (d_slit - d0) / (d1 - d0));
            }
        }
        Ok(last.1)
    }
}

/// Torque delivered to gear 1 (and, by reaction, to the shaft) for motor torque `tau_m`.
pub fn input_torque<T: Real>(params: &ScrewDriveParams<T>, tau_m: T) -> T {
    params.r_g1 * tau_m / params.r_g2
}

/// Thrust and torque on the drive shaft from aggregated thread contact forces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreadForces<T> {
    pub thrust: T,
    pub torque: T,
}

pub fn thread_statics<T: Real>(f_n: T, f_fri: T, theta_th: T, r_g1: T) -> ThreadForces<T> {
    let (s, c) = theta_th.sin_cos();
    ThreadForces {
        thrust: f_n * c - f_fri * s,
        torque: r_g1 * (f_n * s + f_fri * c),
    }
}

/// External load magnitude at which translation yields to rotation.
pub fn switching_threshold<T: Real>(params: &ScrewDriveParams<T>) -> Result<T, TrswError> {
    let lever = params.r_g1 * params.theta_th.tan();
    if lever <= T::zero() || !lever.is_finite() {
        return Err(TrswError::DegenerateLeadAngle);
    }
    Ok(params.tau_pre_max / lever)
}

/// Friction torque the slider must supply to keep the shaft from rotating under `f_ex`.
pub fn required_preload_torque<T: Real>(params: &ScrewDriveParams<T>, f_ex: T) -> T {
    params.r_g1 * params.theta_th.tan() * f_ex
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignCheck<T> {
    pub passed: bool,
    /// Signed distance to the boundary of the condition; positive when it holds.
    pub margin: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignReport<T> {
    /// The thread does not self-lock: `tan(theta_th) < 1/mu_st`.
    pub thread_translates: DesignCheck<T>,
    /// The motor can slip the slider: `tau_pre_max <= (r_g1/r_g2) tau_m_max`.
    pub preload_within_motor: DesignCheck<T>,
    /// Translation holds for loads in `(0, margin)`; empty without preload.
    pub translation_window: DesignCheck<T>,
}

impl<T: Real> DesignReport<T> {
    pub fn passed(&self) -> bool {
        self.thread_translates.passed && self.preload_within_motor.passed && self.translation_window.passed
    }
}

pub fn validate_design<T: Real>(params: &ScrewDriveParams<T>) -> DesignReport<T> {
    let tan = params.theta_th.tan();
    let thread_margin = if params.mu_st > T::zero() {
        T::one() / params.mu_st - tan
    } else {
        T::infinity()
    };
    let bound = params.r_g1 / params.r_g2 * params.tau_m_max;
    let preload_margin = bound - params.tau_pre_max;
    let window = switching_threshold(params).unwrap_or_else(|_| T::zero());
    DesignReport {
        thread_translates: DesignCheck {
            passed: thread_margin > T::zero(),
            margin: thread_margin,
        },
        preload_within_motor: DesignCheck {
            passed: preload_margin >= T::zero(),
            margin: preload_margin,
        },
        translation_window: DesignCheck {
            passed: window > T::zero(),
            margin: window,
        },
    }
}

/// Kinematic and load state of the drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismState<T> {
    /// Mode the drive was in during the step that produced this state.
    pub mode: DriveMode,
    /// Cumulative motor angle (rad).
    pub theta_m: T,
    /// Shaft axial translation (mm), positive toward the finger.
    pub x_shaft: T,
    /// Shaft axial rotation (rad).
    pub theta_sh: T,
    /// Axial load at the shaft tip (N), positive when it pushes the shaft back.
    pub f_ex: T,
    /// Motor torque (N·mm).
    pub tau_m: T,
}

impl<T: Real> MechanismState<T> {
    pub fn at_rest() -> Self {
        Self {
            mode: DriveMode::Translation,
            theta_m: T::zero(),
            x_shaft: T::zero(),
            theta_sh: T::zero(),
            f_ex: T::zero(),
            tau_m: T::zero(),
        }
    }
}

/// Axial reaction seen by the shaft when pushed in some direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoadForce<T> {
    Finite(T),
    /// Rigid contact: translation in the queried direction is impossible.
    Blocked,
}

/// A load acting on the shaft tip.
pub trait AxialLoad<T: Real> {
    /// Load at position `x` while the shaft moves in `direction` (±1).
    fn force(&self, x: T, direction: T) -> LoadForce<T>;

    /// Distance the shaft can travel from `x` in `direction` before the load
    /// magnitude reaches `limit` or a rigid contact is met. `None` means
    /// unbounded.
    fn travel_to(&self, x: T, direction: T, limit: T) -> Option<T>;

    /// Load at `x` excluding rigid-contact reactions.
    fn passive_force(&self, x: T) -> T;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopSide {
    /// The obstacle occupies positions below the stop; retraction is blocked.
    Below,
    /// The obstacle occupies positions above the stop; advance is blocked.
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LoadModel<T> {
    Free,
    /// `f = k_env (x - rest)`; `k_env` in N/mm.
    LinearSpring {
        k_env: T,
        rest: T,
    },
    Constant {
        force: T,
    },
    HardStop {
        position: T,
        side: StopSide,
    },
}

impl<T: Real> LoadModel<T> {
    fn stop_tolerance(position: T) -> T {
        T::lit(1e-9) * T::one().max(position.abs())
    }
}

impl<T: Real> AxialLoad<T> for LoadModel<T> {
    fn force(&self, x: T, direction: T) -> LoadForce<T> {
        match *self {
            LoadModel::Free => LoadForce::Finite(T::zero()),
            LoadModel::LinearSpring { k_env, rest } => LoadForce::Finite(k_env * (x - rest)),
            LoadModel::Constant { force } => LoadForce::Finite(force),
            LoadModel::HardStop { position, side } => {
                let tol = Self::stop_tolerance(position);
                let blocked = match side {
                    StopSide::Below => direction < T::zero() && x <= position + tol,
                    StopSide::Above => direction > T::zero() && x >= position - tol,
                };
                if blocked {
                    LoadForce::Blocked
                } else {
                    LoadForce::Finite(T::zero())
                }
            }
        }
    }

    fn travel_to(&self, x: T, direction: T, limit: T) -> Option<T> {
        match *self {
            LoadModel::Free => None,
            LoadModel::LinearSpring { k_env, rest } => {
                if k_env <= T::zero() {
                    return None;
                }
                let reach = limit / k_env;
                let travel = if direction > T::zero() {
                    rest + reach - x
                } else {
                    x - (rest - reach)
                };
                Some(travel.max(T::zero()))
            }
            LoadModel::Constant { force } => {
                if force.abs() >= limit {
                    Some(T::zero())
                } else {
                    None
                }
            }
            LoadModel::HardStop { position, side } => match side {
                StopSide::Below if direction < T::zero() => Some((x - position).max(T::zero())),
                StopSide::Above if direction > T::zero() => Some((position - x).max(T::zero())),
                _ => None,
            },
        }
    }

    fn passive_force(&self, x: T) -> T {
        match *self {
            LoadModel::Free | LoadModel::HardStop { .. } => T::zero(),
            LoadModel::LinearSpring { k_env, rest } => k_env * (x - rest),
            LoadModel::Constant { force } => force,
        }
    }
}

fn at_or_above<T: Real>(value: T, threshold: T) -> bool {
    value >= threshold * (T::one() - T::lit(THRESHOLD_SLACK))
}

fn next_mode<T: Real>(params: &ScrewDriveParams<T>, current: DriveMode, load: LoadForce<T>, f_sw: T) -> DriveMode {
    match load {
        LoadForce::Blocked => DriveMode::Rotation,
        LoadForce::Finite(f) => match current {
            DriveMode::Translation if at_or_above(f.abs(), f_sw) => DriveMode::Rotation,
            DriveMode::Translation => DriveMode::Translation,
            DriveMode::Rotation if f.abs() < params.kinetic_ratio * f_sw => DriveMode::Translation,
            DriveMode::Rotation => DriveMode::Rotation,
        },
    }
}

/// Advances the drive by at most `d_theta_m` of motor rotation.
///
/// Each call moves in exactly one mode. When a translation step would carry
/// the load past the switching threshold, the step ends at the crossing and
/// the returned `theta_m` shows how much of the increment was consumed; the
/// caller continues from there (see [`drive`]).
pub fn step<T, L>(
    params: &ScrewDriveParams<T>,
    state: &MechanismState<T>,
    load: &L,
    d_theta_m: T,
) -> Result<MechanismState<T>, TrswError>
where
    T: Real,
    L: AxialLoad<T> + ?Sized,
{
    if !d_theta_m.is_finite() {
        return Err(TrswError::InvalidIncrement);
    }
    if d_theta_m == T::zero() {
        return Ok(*state);
    }
    let direction = d_theta_m.signum();
    let f_sw = switching_threshold(params)?;
    let load_now = load.force(state.x_shaft, direction);
    let mut mode = next_mode(params, state.mode, load_now, f_sw);

    if mode == DriveMode::Translation {
        let gain = params.lead_gain();
        let stall = params.stall_force();
        let f_limit = f_sw.min(stall);
        let full = gain * d_theta_m.abs();
        let limit = load.travel_to(state.x_shaft, direction, f_limit);
        let eps = T::lit(1e-12) * T::one().max(state.x_shaft.abs());
        match limit {
            Some(room) if room <= eps => {
                if stall < f_sw {
                    return Err(TrswError::Stall {
                        required: params.translation_motor_torque(f_limit).max(params.tau_m_max).as_f64(),
                        limit: params.tau_m_max.as_f64(),
                    });
                }
                mode = DriveMode::Rotation;
            }
            _ => {
                let (travel, consumed) = match limit {
                    Some(room) if room < full => (room, d_theta_m * room / full),
                    _ => (full, d_theta_m),
                };
                let x_shaft = state.x_shaft + direction * travel;
                let f_ex = match load.force(x_shaft, direction) {
                    LoadForce::Finite(f) => f,
                    LoadForce::Blocked => load.passive_force(x_shaft),
                };
                return Ok(MechanismState {
                    mode,
                    theta_m: state.theta_m + consumed,
                    x_shaft,
                    theta_sh: state.theta_sh,
                    f_ex,
                    tau_m: params.translation_motor_torque(f_ex),
                });
            }
        }
    }

    let breakaway = params.breakaway_motor_torque();
    if breakaway > params.tau_m_max * (T::one() + T::lit(THRESHOLD_SLACK)) {
        return Err(TrswError::Stall {
            required: breakaway.as_f64(),
            limit: params.tau_m_max.as_f64(),
        });
    }
    let f_ex = match load_now {
        LoadForce::Finite(f) => f,
        LoadForce::Blocked => direction * params.kinetic_ratio * f_sw,
    };
    Ok(MechanismState {
        mode,
        theta_m: state.theta_m + d_theta_m,
        x_shaft: state.x_shaft,
        theta_sh: state.theta_sh + params.gear_ratio() * d_theta_m,
        f_ex,
        tau_m: params.rotation_motor_torque(),
    })
}

/// Result of a multi-step motor sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveTrace<T> {
    /// One state per executed step, starting with the initial state.
    pub states: Vec<MechanismState<T>>,
    /// Set when the sweep stopped early.
    pub halted: Option<TrswError>,
}

impl<T: Real> DriveTrace<T> {
    pub fn last(&self) -> &MechanismState<T> {
        self.states.last().expect("trace holds the initial state")
    }

    /// Largest load magnitude reached.
    pub fn peak_force(&self) -> T {
        self.states.iter().fold(T::zero(), |acc, s| acc.max(s.f_ex.abs()))
    }
}

/// Rotates the motor by `total` radians in increments of at most `max_step`.
pub fn drive<T, L>(
    params: &ScrewDriveParams<T>,
    initial: MechanismState<T>,
    load: &L,
    total: T,
    max_step: T,
) -> DriveTrace<T>
where
    T: Real,
    L: AxialLoad<T> + ?Sized,
{
    let mut states = vec![initial];
    let mut halted = None;
    if !(max_step > T::zero()) || !total.is_finite() {
        halted = Some(TrswError::InvalidIncrement);
        return DriveTrace { states, halted };
    }
    let direction = total.signum();
    let mut remaining = total.abs();
    let eps = T::lit(1e-12) * T::one().max(remaining);
    // Each split consumes a crossing; bound the loop generously.
    let budget = (remaining / max_step).ceil().to_usize().unwrap_or(usize::MAX / 4) * 2 + 16;
    for _ in 0..budget {
        if remaining <= eps {
            break;
        }
        let current = *states.last().unwrap();
        let increment = direction * remaining.min(max_step);
        match step(params, &current, load, increment) {
            Ok(next) => {
                remaining = remaining - (next.theta_m - current.theta_m).abs();
                states.push(next);
            }
            Err(err) => {
                halted = Some(err);
                break;
            }
        }
    }
    DriveTrace { states, halted }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(tau_pre: f64) -> ScrewDriveParams<f64> {
        ScrewDriveParams::new(16.0, 8.0, 14f64.to_radians(), 0.3, tau_pre, 250.0).unwrap()
    }

    #[test]
    fn input_torque_examples() {
        let p = ScrewDriveParams::new(20.0, 10.0, 0.1, 0.2, 10.0, 100.0).unwrap();
        assert_eq!(input_torque(&p, 100.0), 200.0);
        assert_eq!(input_torque(&p, 0.0), 0.0);
        let unity = ScrewDriveParams::new(10.0, 10.0, 0.1, 0.2, 10.0, 100.0).unwrap();
        assert_eq!(input_torque(&unity, 37.5), 37.5);
    }

    #[test]
    fn thread_statics_examples() {
        let theta = 0.2f64;
        let frictionless = thread_statics(10.0, 0.0, theta, 7.0);
        assert!((frictionless.thrust - 10.0 * theta.cos()).abs() < 1e-12);
        assert!((frictionless.torque - 70.0 * theta.sin()).abs() < 1e-12);
        assert!((frictionless.torque / frictionless.thrust - 7.0 * theta.tan()).abs() < 1e-12);

        let zero = thread_statics(0.0, 0.0, theta, 7.0);
        assert_eq!((zero.thrust, zero.torque), (0.0, 0.0));

        let loaded = thread_statics(10.0f64, 2.0, 0.1, 10.0);
        assert!((loaded.thrust - 9.750_374_9).abs() < 1e-6, "{}", loaded.thrust);
        assert!((loaded.torque - 29.883_426).abs() < 1e-5, "{}", loaded.torque);
    }

    #[test]
    fn switching_threshold_examples() {
        let theta = 0.05f64.atan();
        let p = ScrewDriveParams::new(10.0, 5.0, theta, 0.2, 50.0, 100.0).unwrap();
        assert!((switching_threshold(&p).unwrap() - 100.0).abs() < 1e-9);
        assert_eq!(switching_threshold(&p.with_preload(0.0).unwrap()).unwrap(), 0.0);
        let doubled = p.with_preload(100.0).unwrap();
        assert!((switching_threshold(&doubled).unwrap() - 200.0).abs() < 1e-9);

        let mut degenerate = p;
        degenerate.theta_th = 0.0;
        assert_eq!(switching_threshold(&degenerate), Err(TrswError::DegenerateLeadAngle));
    }

    #[test]
    fn required_preload_examples() {
        let theta = 0.05f64.atan();
        let p = ScrewDriveParams::new(10.0, 5.0, theta, 0.2, 50.0, 100.0).unwrap();
        assert_eq!(required_preload_torque(&p, 0.0), 0.0);
        assert!((required_preload_torque(&p, 100.0) - 50.0).abs() < 1e-9);
        let f_sw = switching_threshold(&p).unwrap();
        assert!((required_preload_torque(&p, f_sw) - p.tau_pre_max).abs() < 1e-12);
    }

    #[test]
    fn validate_design_examples() {
        let theta = 0.3f64.atan();
        let p = ScrewDriveParams::new(10.0, 5.0, theta, 0.2, 50.0, 100.0).unwrap();
        let report = validate_design(&p);
        assert!(report.thread_translates.passed);
        assert!((report.thread_translates.margin - 4.7).abs() < 1e-12);
        assert!(report.passed());

        // Preload beyond what the motor can slip.
        let heavy = p.with_preload(201.0).unwrap();
        let report = validate_design(&heavy);
        assert!(!report.preload_within_motor.passed);
        assert!((report.preload_within_motor.margin + 1.0).abs() < 1e-12);

        let mut frictionless = p;
        frictionless.mu_st = 0.0;
        frictionless.theta_th = 1.5;
        assert!(validate_design(&frictionless).thread_translates.passed);

        let no_preload = validate_design(&p.with_preload(0.0).unwrap());
        assert!(!no_preload.translation_window.passed);
    }

    #[test]
    fn parameter_validation_rejects_bad_inputs() {
        assert!(ScrewDriveParams::new(0.0, 5.0, 0.1, 0.2, 1.0, 1.0).is_err());
        assert!(ScrewDriveParams::new(1.0, 5.0, 1.6, 0.2, 1.0, 1.0).is_err());
        assert!(ScrewDriveParams::new(1.0, 5.0, 0.1, -0.2, 1.0, 1.0).is_err());
        assert!(ScrewDriveParams::new(1.0, 5.0, 0.1, 0.2, -1.0, 1.0).is_err());
        assert!(params(100.0).with_kinetic_ratio(1.5).is_err());
    }

    #[test]
    fn calibration_interpolates_and_rejects_non_monotone_tables() {
        let cal = PreloadCalibration::new(vec![(0.0, 0.0), (1.0, 100.0), (3.0, 500.0)]).unwrap();
        assert_eq!(cal.tau_pre_max(0.5).unwrap(), 50.0);
        assert_eq!(cal.tau_pre_max(2.0).unwrap(), 300.0);
        assert!(cal.tau_pre_max(3.5).is_err());
        assert!(PreloadCalibration::new(vec![(0.0, 10.0), (1.0, 5.0)]).is_err());
        assert!(PreloadCalibration::new(vec![(1.0, 1.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn free_load_translates_without_rotation() {
        let p = params(300.0);
        let trace = drive(&p, MechanismState::at_rest(), &LoadModel::Free, 2.0, 0.01);
        assert!(trace.halted.is_none());
        let last = trace.last();
        assert_eq!(last.theta_sh, 0.0);
        assert!((last.x_shaft - p.lead_gain() * 2.0).abs() < 1e-12);
        assert!(trace.states.iter().all(|s| s.mode == DriveMode::Translation));
    }

    #[test]
    fn spring_load_switches_at_threshold_and_plateaus() {
        let p = params(300.0);
        let f_sw = switching_threshold(&p).unwrap();
        let load = LoadModel::LinearSpring { k_env: 20.0, rest: 0.0 };
        let trace = drive(&p, MechanismState::at_rest(), &load, 40.0, 0.01);
        assert!(trace.halted.is_none());
        let switch = trace
            .states
            .iter()
            .position(|s| s.mode == DriveMode::Rotation)
            .expect("switches");
        let x_switch = f_sw / 20.0;
        assert!((trace.states[switch - 1].x_shaft - x_switch).abs() < 1e-9);
        for s in &trace.states[switch..] {
            assert_eq!(s.x_shaft, trace.states[switch - 1].x_shaft);
            assert!((s.f_ex - f_sw).abs() < 1e-9 * f_sw);
        }
        assert!(trace.last().theta_sh > 0.0);
    }

    #[test]
    fn zero_preload_rotates_from_first_step() {
        let p = params(0.0);
        let load = LoadModel::LinearSpring { k_env: 20.0, rest: 0.0 };
        let trace = drive(&p, MechanismState::at_rest(), &load, 1.0, 0.01);
        assert!(trace.states[1..].iter().all(|s| s.mode == DriveMode::Rotation));
        assert!(trace.states.iter().all(|s| s.x_shaft == 0.0));
        assert!((trace.last().theta_sh - p.gear_ratio()).abs() < 1e-12);
    }

    #[test]
    fn excessive_preload_stalls_without_switching() {
        let p = params(600.0);
        assert!(!validate_design(&p).preload_within_motor.passed);
        let load = LoadModel::LinearSpring { k_env: 20.0, rest: 0.0 };
        let trace = drive(&p, MechanismState::at_rest(), &load, 40.0, 0.01);
        assert!(matches!(trace.halted, Some(TrswError::Stall { .. })));
        assert!(trace.states.iter().all(|s| s.mode == DriveMode::Translation));
        let peak_torque = trace.states.iter().fold(0.0f64, |a, s| a.max(s.tau_m));
        assert!((peak_torque - p.tau_m_max).abs() < 1e-9);
    }

    #[test]
    fn hard_stop_forces_rotation_when_retracting() {
        let p = params(300.0);
        let stop = LoadModel::HardStop {
            position: 1.0,
            side: StopSide::Below,
        };
        let start = MechanismState {
            x_shaft: 1.5,
            ..MechanismState::at_rest()
        };
        let trace = drive(&p, start, &stop, -1.0, 0.01);
        assert!(trace.halted.is_none());
        let last = trace.last();
        assert!((last.x_shaft - 1.0).abs() < 1e-12);
        assert_eq!(last.mode, DriveMode::Rotation);
        assert!(last.theta_sh < 0.0);
        let f_sw = switching_threshold(&p).unwrap();
        assert!((last.f_ex + f_sw).abs() < 1e-9);
    }

    #[test]
    fn hysteresis_returns_to_translation_below_kinetic_threshold() {
        let p = params(300.0).with_kinetic_ratio(0.8).unwrap();
        let f_sw = switching_threshold(&p).unwrap();
        let rotating = MechanismState {
            mode: DriveMode::Rotation,
            ..MechanismState::at_rest()
        };
        let above = LoadModel::Constant { force: 0.85 * f_sw };
        assert_eq!(step(&p, &rotating, &above, 0.01).unwrap().mode, DriveMode::Rotation);
        let below = LoadModel::Constant { force: 0.75 * f_sw };
        assert_eq!(step(&p, &rotating, &below, 0.01).unwrap().mode, DriveMode::Translation);
    }

    #[test]
    fn works_in_single_precision() {
        let p = ScrewDriveParams::<f32>::new(20.0, 10.0, 0.1, 0.2, 10.0, 100.0).unwrap();
        assert_eq!(input_torque(&p, 100.0f32), 200.0);
        let s = step(&p, &MechanismState::at_rest(), &LoadModel::Free, 0.01f32).unwrap();
        assert!(s.x_shaft > 0.0);
    }

    fn arb_params() -> impl Strategy<Value = ScrewDriveParams<f64>> {
        (
            1.0..30.0f64,
            1.0..30.0f64,
            0.01..1.4f64,
            0.0..1.0f64,
            0.0..500.0f64,
            10.0..1000.0f64,
        )
            .prop_map(|(r1, r2, th, mu, pre, tm)| ScrewDriveParams::new(r1, r2, th, mu, pre, tm).unwrap())
    }

    proptest! {
        #[test]
        fn threshold_round_trips_through_required_preload(p in arb_params()) {
            let f_sw = switching_threshold(&p).unwrap();
            prop_assert!(required_preload_torque(&p, f_sw).approx_eq(p.tau_pre_max, 1e-9));
        }

        #[test]
        fn steps_never_translate_and_rotate_together(
            pre in 0.0..400.0f64,
            k in 0.5..50.0f64,
            sweep in 0.1..30.0f64,
        ) {
            let p = params(pre);
            let load = LoadModel::LinearSpring { k_env: k, rest: 0.0 };
            let trace = drive(&p, MechanismState::at_rest(), &load, sweep, 0.01);
            for w in trace.states.windows(2) {
                let dx = w[1].x_shaft - w[0].x_shaft;
                let dsh = w[1].theta_sh - w[0].theta_sh;
                prop_assert!(dx == 0.0 || dsh == 0.0);
            }
        }

        #[test]
        fn translation_conserves_power(pre in 50.0..400.0f64, k in 0.5..50.0f64, d in 0.0001..0.01f64) {
            let p = params(pre);
            let load = LoadModel::LinearSpring { k_env: k, rest: 0.0 };
            let s = step(&p, &MechanismState::at_rest(), &load, d).unwrap();
            prop_assume!(s.mode == DriveMode::Translation);
            let d_gear = p.gear_ratio() * (s.theta_m - 0.0);
            let work_in = input_torque(&p, s.tau_m) * d_gear;
            let work_out = s.f_ex.abs() * s.x_shaft;
            prop_assert!(work_in.approx_eq(work_out, 1e-9));
        }

        #[test]
        fn peak_force_grows_with_preload(a in 0.0..480.0f64, b in 0.0..480.0f64, k in 1.0..40.0f64) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let load = LoadModel::LinearSpring { k_env: k, rest: 0.0 };
            let peak = |pre| drive(&params(pre), MechanismState::at_rest(), &load, 60.0, 0.01).peak_force();
            prop_assert!(peak(lo) <= peak(hi) + 1e-9);
        }

        #[test]
        fn crossing_position_is_step_size_independent(pre in 50.0..400.0f64, k in 1.0..40.0f64) {
            let p = params(pre);
            let load = LoadModel::LinearSpring { k_env: k, rest: 0.0 };
            let crossing = |h: f64| {
                let t = drive(&p, MechanismState::at_rest(), &load, 80.0, h);
                t.states.iter().map(|s| s.x_shaft).fold(0.0f64, f64::max)
            };
            prop_assert!((crossing(0.01) - crossing(0.005)).abs() <= 1e-6);
        }

        #[test]
        fn free_translation_is_reversible(sweep in 0.01..20.0f64) {
            let p = params(300.0);
            let fwd = drive(&p, MechanismState::at_rest(), &LoadModel::Free, sweep, 0.01);
            let back = drive(&p, *fwd.last(), &LoadModel::Free, -sweep, 0.01);
            prop_assert!(back.last().x_shaft.abs() <= 1e-12);
        }
    }
}
