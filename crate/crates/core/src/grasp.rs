//! Quasi-static wrapping of the finger around a cylinder.
//!
//! The insertion force is ramped in fixed increments. When a link would
//! enter the object, the increment is bisected along the straight line
//! between the last accepted posture and the new solution to find the first
//! touch. The joints from the palm up to the touching link are then frozen
//! at their contact angles and loading continues on the remaining links.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::finger::{
    forward_kinematics, solve_posture_with, FingerError, FingerParams, FingerPosture, PostureConstraints, SolverOptions,
};
use crate::trsw::ScrewDriveParams;
use crate::{Real, Vec2};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraspError {
    #[error("invalid object: {0}")]
    InvalidObject(String),
    #[error("invalid wrap setting `{name}`: {reason}")]
    InvalidSetting { name: &'static str, reason: String },
    #[error("the straight finger already penetrates the object by {0:.6} mm")]
    InitialPenetration(f64),
    #[error("posture solve failed at f_tr = {f_tr:.6} N after {steps} accepted steps: {source}")]
    Solver {
        f_tr: f64,
        steps: usize,
        #[source]
        source: FingerError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircularObject<T> {
    pub center: Vec2<T>,
    pub diameter: T,
}

impl<T: Real> CircularObject<T> {
    pub fn new(center: Vec2<T>, diameter: T) -> Result<Self, GraspError> {
        if !(diameter > T::zero()) || !diameter.is_finite() || !center.x.is_finite() || !center.y.is_finite() {
            return Err(GraspError::InvalidObject(format!(
                "diameter must be positive and finite, center finite (got diameter {diameter})"
            )));
        }
        Ok(Self { center, diameter })
    }

    /// Object resting above the middle of the first link, `clearance` away from it.
    pub fn above_first_link(params: &FingerParams<T>, diameter: T, clearance: T) -> Result<Self, GraspError> {
        let radius = diameter * T::lit(0.5);
        Self::new(
            Vec2::new(params.link_length * T::lit(0.5), radius + clearance),
            diameter,
        )
    }

    pub fn radius(&self) -> T {
        self.diameter * T::lit(0.5)
    }
}

/// Depth by which each link segment (the last one being the fingertip) enters the object.
pub fn link_penetration<T: Real>(
    params: &FingerParams<T>,
    posture: &FingerPosture<T>,
    object: &CircularObject<T>,
) -> Vec<T> {
    let pose = forward_kinematics(params, posture);
    (0..pose.segment_count())
        .map(|i| {
            let (a, b) = pose.segment(i);
            (object.radius() - object.center.distance_to_segment(a, b)).max(T::zero())
        })
        .collect()
}

fn clearances<T: Real>(params: &FingerParams<T>, posture: &FingerPosture<T>, object: &CircularObject<T>) -> Vec<T> {
    let pose = forward_kinematics(params, posture);
    (0..pose.segment_count())
        .map(|i| {
            let (a, b) = pose.segment(i);
            object.center.distance_to_segment(a, b) - object.radius()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WrapTermination {
    TorqueThreshold,
    FullWrap,
    FingertipCollision,
}

impl WrapTermination {
    pub fn as_str(self) -> &'static str {
        match self {
            WrapTermination::TorqueThreshold => "torque-threshold",
            WrapTermination::FullWrap => "full-wrap",
            WrapTermination::FingertipCollision => "fingertip-collision",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WrapOptions {
    /// Insertion force increment (N).
    pub force_step: f64,
    /// Largest allowed penetration (mm).
    pub penetration_tolerance: f64,
    pub solver: SolverOptions,
}

impl Default for WrapOptions {
    fn default() -> Self {
        Self {
            force_step: 0.05,
            penetration_tolerance: 1e-2,
            solver: SolverOptions::default(),
        }
    }
}

/// One accepted state of the loading sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WrapStep<T> {
    pub f_tr: T,
    pub frozen: Vec<bool>,
    pub theta: Vec<T>,
    pub max_penetration: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WrapResult<T> {
    pub posture: FingerPosture<T>,
    /// Links (0-based, the last is the fingertip) within tolerance of the surface.
    pub contact_links: Vec<usize>,
    pub f_tr_final: T,
    pub terminated_by: WrapTermination,
    pub steps: Vec<WrapStep<T>>,
}

impl<T: Real> WrapResult<T> {
    pub fn frozen_joints(&self) -> usize {
        self.steps.last().map_or(0, |s| s.frozen.iter().filter(|&&f| f).count())
    }
}

fn blend<T: Real>(a: &[T], b: &[T], s: T) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + (y - x) * s).collect()
}

fn max_of<T: Real>(v: &[T]) -> T {
    v.iter().copied().fold(T::zero(), T::max)
}

/// Insertion force at which the motor reaches `tau_th` in translation (N).
pub fn threshold_force<T: Real>(trsw: &ScrewDriveParams<T>, tau_th: T) -> T {
    tau_th / trsw.lead_gain()
}

pub fn wrap_simulate<T: Real>(
    params: &FingerParams<T>,
    object: &CircularObject<T>,
    trsw: &ScrewDriveParams<T>,
    tau_th: T,
    options: &WrapOptions,
) -> Result<WrapResult<T>, GraspError> {
    let setting = |name, reason: &str| GraspError::InvalidSetting {
        name,
        reason: reason.to_string(),
    };
    if !(tau_th > T::zero()) || !tau_th.is_finite() {
        return Err(setting("tau_th", "must be finite and > 0"));
    }
    if !(options.force_step > 0.0) || !options.force_step.is_finite() {
        return Err(setting("force_step", "must be finite and > 0"));
    }
    if !(options.penetration_tolerance > 0.0) {
        return Err(setting("penetration_tolerance", "must be > 0"));
    }
    params.validate().map_err(|source| GraspError::Solver {
        f_tr: 0.0,
        steps: 0,
        source,
    })?;

    let n = params.n;
    let tol = T::lit(options.penetration_tolerance);
    let half_tol = tol * T::lit(0.5);
    let step = T::lit(options.force_step);
    let f_max = threshold_force(trsw, tau_th);

    let straight = FingerPosture::straight(n);
    let initial = max_of(&link_penetration(params, &straight, object));
    if initial > T::zero() {
        return Err(GraspError::InitialPenetration(initial.as_f64()));
    }

    let mut frozen: Vec<Option<T>> = vec![None; n];
    let mut theta = straight.theta;
    let mut f = T::zero();
    let mut warm: Option<Vec<T>> = None;
    let mut steps = vec![WrapStep {
        f_tr: f,
        frozen: vec![false; n],
        theta: theta.clone(),
        max_penetration: T::zero(),
    }];

    let finish = |theta: Vec<T>, f: T, why: WrapTermination, steps: Vec<WrapStep<T>>| {
        let posture = FingerPosture { theta };
        let contact_links = clearances(params, &posture, object)
            .iter()
            .enumerate()
            .filter(|(_, &c)| c <= tol)
            .map(|(i, _)| i)
            .collect();
        WrapResult {
            posture,
            contact_links,
            f_tr_final: f,
            terminated_by: why,
            steps,
        }
    };

    loop {
        if f >= f_max {
            return Ok(finish(theta, f_max, WrapTermination::TorqueThreshold, steps));
        }
        let f_next = (f + step).min(f_max);
        let constraints = PostureConstraints {
            frozen: frozen.clone(),
            warm_start: warm.clone(),
        };
        let solution =
            solve_posture_with(params, f_next, &options.solver, &constraints).map_err(|source| GraspError::Solver {
                f_tr: f_next.as_f64(),
                steps: steps.len(),
                source,
            })?;
        let candidate = solution.posture.theta;
        let depth = link_penetration(
            params,
            &FingerPosture {
                theta: candidate.clone(),
            },
            object,
        );
        if max_of(&depth) <= tol {
            theta = candidate;
            f = f_next;
            warm = Some(solution.distribution.forces);
            steps.push(WrapStep {
                f_tr: f,
                frozen: frozen.iter().map(Option::is_some).collect(),
                theta: theta.clone(),
                max_penetration: max_of(&depth),
            });
            continue;
        }

        // Locate the first touch between the accepted and the penetrating posture.
        let mut lo = T::zero();
        let mut hi = T::one();
        for _ in 0..60 {
            let mid = (lo + hi) * T::lit(0.5);
            let probe = FingerPosture {
                theta: blend(&theta, &candidate, mid),
            };
            if max_of(&link_penetration(params, &probe, object)) <= half_tol {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let contact_theta = blend(&theta, &candidate, lo);
        let entering = link_penetration(
            params,
            &FingerPosture {
                theta: blend(&theta, &candidate, hi),
            },
            object,
        );
        let first_free = frozen.iter().position(Option::is_none).unwrap_or(n);
        let link = (first_free..n)
            .filter(|&i| entering[i] > T::zero())
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if entering[b] >= entering[i] => Some(b),
                _ => Some(i),
            })
            .unwrap_or(n - 1);
        let f_contact = f + (f_next - f) * lo;

        if link == n - 1 && first_free < n - 1 {
            steps.push(WrapStep {
                f_tr: f_contact,
                frozen: frozen.iter().map(Option::is_some).collect(),
                theta: contact_theta.clone(),
                max_penetration: max_of(&link_penetration(
                    params,
                    &FingerPosture {
                        theta: contact_theta.clone(),
                    },
                    object,
                )),
            });
            return Ok(finish(
                contact_theta,
                f_contact,
                WrapTermination::FingertipCollision,
                steps,
            ));
        }

        for (j, slot) in frozen.iter_mut().enumerate().take(link + 1) {
            if slot.is_none() {
                *slot = Some(contact_theta[j]);
            }
        }
        theta = contact_theta;
        f = f_contact;
        steps.push(WrapStep {
            f_tr: f,
            frozen: frozen.iter().map(Option::is_some).collect(),
            theta: theta.clone(),
            max_penetration: max_of(&link_penetration(
                params,
                &FingerPosture { theta: theta.clone() },
                object,
            )),
        });
        log::debug!("link {link} touched the object at f_tr = {f}");
        if frozen.iter().all(Option::is_some) {
            return Ok(finish(theta, f, WrapTermination::FullWrap, steps));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finger::solve_posture;

    const K_FS: f64 = 257.831_007_808_870_5;

    fn finger() -> FingerParams<f64> {
        FingerParams::bare(7, 12.0, 13.0, K_FS).unwrap()
    }

    fn drive() -> ScrewDriveParams<f64> {
        ScrewDriveParams::new(16.0, 8.0, 14f64.to_radians(), 0.3, 300.0, 250.0).unwrap()
    }

    #[test]
    fn far_object_has_no_penetration() {
        let obj = CircularObject::new(Vec2::new(0.0, 500.0), 20.0).unwrap();
        assert!(link_penetration(&finger(), &FingerPosture::straight(7), &obj)
            .iter()
            .all(|&d| d == 0.0));
    }

    #[test]
    fn object_on_a_link_penetrates_it() {
        let obj = CircularObject::new(Vec2::new(30.0, 1.0), 10.0).unwrap();
        let depth = link_penetration(&finger(), &FingerPosture::straight(7), &obj);
        assert!((depth[2] - 4.0).abs() < 1e-12);
        assert_eq!(depth[6], 0.0);
    }

    #[test]
    fn depth_is_continuous_in_center() {
        let posture = solve_posture(&finger(), 5.0).unwrap().posture;
        for k in 0..200 {
            let x = 20.0 + 0.3 * k as f64;
            let a = CircularObject::new(Vec2::new(x, 4.0), 12.0).unwrap();
            let b = CircularObject::new(Vec2::new(x + 1e-3, 4.0 - 1e-3), 12.0).unwrap();
            let da = link_penetration(&finger(), &posture, &a);
            let db = link_penetration(&finger(), &posture, &b);
            for (p, q) in da.iter().zip(&db) {
                assert!((p - q).abs() <= 1e-2);
            }
        }
    }

    #[test]
    fn distant_object_runs_to_threshold_like_free_solve() {
        let obj = CircularObject::new(Vec2::new(0.0, 500.0), 20.0).unwrap();
        let opts = WrapOptions {
            force_step: 1.0,
            ..Default::default()
        };
        let res = wrap_simulate(&finger(), &obj, &drive(), 20.0, &opts).unwrap();
        assert_eq!(res.terminated_by, WrapTermination::TorqueThreshold);
        assert!(res.contact_links.is_empty());
        let f_max = threshold_force(&drive(), 20.0);
        assert_eq!(res.f_tr_final, f_max);
        let free = solve_posture(&finger(), f_max).unwrap().posture;
        for (a, b) in res.posture.theta.iter().zip(&free.theta) {
            assert!((a - b).abs() < 1e-6, "{:?} vs {:?}", res.posture.theta, free.theta);
        }
    }

    #[test]
    fn contact_freezes_joints_without_penetration() {
        let obj = CircularObject::new(Vec2::new(60.0, 12.0), 20.0).unwrap();
        let opts = WrapOptions {
            force_step: 0.25,
            ..Default::default()
        };
        let res = wrap_simulate(&finger(), &obj, &drive(), 100.0, &opts).unwrap();
        assert!(!res.contact_links.is_empty(), "{res:?}");
        let depth = link_penetration(&finger(), &res.posture, &obj);
        assert!(depth.iter().all(|&d| d <= 1e-2));
        let counts: Vec<usize> = res
            .steps
            .iter()
            .map(|s| s.frozen.iter().filter(|&&f| f).count())
            .collect();
        assert!(counts.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn overlapping_start_is_rejected() {
        let obj = CircularObject::new(Vec2::new(30.0, 1.0), 10.0).unwrap();
        assert!(matches!(
            wrap_simulate(&finger(), &obj, &drive(), 100.0, &WrapOptions::default()),
            Err(GraspError::InitialPenetration(_))
        ));
    }
}
