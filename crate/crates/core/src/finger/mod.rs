//! Planar statics of the shaft-driven multi-link finger.
//!
//! Joints and links are indexed from 0 at the palm. Joint `i` sits at pin
//! `i` and connects link `i - 1` (or the palm) to link `i`. The last link
//! carries the fingertip. Joint angles are flexion-positive; flexion turns
//! the finger counter-clockwise, toward `+y`.

mod design;
mod identify;
mod solve;
mod statics;

pub use design::{design_springs, DesignOptions, SpringObjective};
pub use identify::{identify_kfs, IdentificationFit, IdentificationOptions, IdentificationResult};
pub use solve::{solve_posture, solve_posture_with, PostureConstraints, PostureSolution, SolverOptions};
pub use statics::{equilibrium_recursion, equilibrium_residuals, EquilibriumResiduals};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Real, Vec2};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FingerError {
    #[error("invalid finger parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("joint index {index} out of range for a {n}-link finger")]
    JointIndex { index: usize, n: usize },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("insertion force must be finite and non-negative, got {0}")]
    InvalidForce(f64),
    #[error("every joint is frozen; no link can take shaft force")]
    NoFreeJoints,
    #[error("posture solver did not converge after {iterations} iterations (KKT residual {residual:.3e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        /// Best force distribution found (N).
        best: Vec<f64>,
    },
    #[error("no observations supplied")]
    NoObservations,
    #[error("every observation has zero insertion force; shaft stiffness is unidentifiable")]
    Degenerate,
    #[error("spring design infeasible: {0}")]
    Infeasible(String),
    #[error("spring design did not converge after {iterations} iterations (spread {spread:.3e} of mean)")]
    DesignNotConverged { iterations: usize, spread: f64 },
}

/// Rotation used to carry a distal joint force into the proximal link frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FrameRotation {
    /// Adjacent frames differ by the single joint angle between them.
    #[default]
    Adjacent,
    /// Rotate by the sum of every distal joint angle.
    Cumulative,
}

/// Sign of the joint force at the distal-most joint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TipForce {
    /// `f_n = [f_FS_n, 0]`.
    #[default]
    Direct,
    /// `f_n = -[f_FS_n, 0]`, the reaction balancing the link's shaft force.
    Reaction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChainConvention {
    pub frame_rotation: FrameRotation,
    pub tip_force: TipForce,
}

/// Geometry and stiffness of an `n`-link finger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerParams<T> {
    pub n: usize,
    /// Distance between consecutive joint pins (mm).
    pub link_length: T,
    /// Offset from the joint pin line to the shaft (mm).
    pub shaft_offset: T,
    /// Torsion spring coefficient at each joint (N·mm/rad).
    pub spring_stiffness: Vec<T>,
    /// Flexural stiffness of the shaft, lumped per joint (N·mm/rad).
    pub shaft_stiffness: T,
    /// Length of the fingertip segment beyond the last pin (mm).
    pub tip_length: T,
    #[serde(default)]
    pub convention: ChainConvention,
}

impl<T: Real> FingerParams<T> {
    /// Finger without torsion springs; the tip segment defaults to one link length.
    pub fn bare(n: usize, link_length: T, shaft_offset: T, shaft_stiffness: T) -> Result<Self, FingerError> {
        Self::new(n, link_length, shaft_offset, vec![T::zero(); n], shaft_stiffness)
    }

    pub fn new(
        n: usize,
        link_length: T,
        shaft_offset: T,
        spring_stiffness: Vec<T>,
        shaft_stiffness: T,
    ) -> Result<Self, FingerError> {
        let params = Self {
            n,
            link_length,
            shaft_offset,
            spring_stiffness,
            shaft_stiffness,
            tip_length: link_length,
            convention: ChainConvention::default(),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_springs(&self, spring_stiffness: Vec<T>) -> Result<Self, FingerError> {
        let params = Self {
            spring_stiffness,
            ..self.clone()
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_shaft_stiffness(&self, shaft_stiffness: T) -> Result<Self, FingerError> {
        let params = Self {
            shaft_stiffness,
            ..self.clone()
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), FingerError> {
        let bad = |name, reason: &str| {
            Err(FingerError::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if self.n == 0 {
            return bad("n", "must be >= 1");
        }
        if !(self.link_length > T::zero()) || !self.link_length.is_finite() {
            return bad("link_length", "must be finite and > 0");
        }
        if !(self.shaft_offset > T::zero()) || !self.shaft_offset.is_finite() {
            return bad("shaft_offset", "must be finite and > 0");
        }
        if !(self.shaft_stiffness > T::zero()) || !self.shaft_stiffness.is_finite() {
            return bad("shaft_stiffness", "must be finite and > 0");
        }
        if !(self.tip_length >= T::zero()) || !self.tip_length.is_finite() {
            return bad("tip_length", "must be finite and >= 0");
        }
        if self.spring_stiffness.len() != self.n {
            return Err(FingerError::LengthMismatch {
                expected: self.n,
                got: self.spring_stiffness.len(),
            });
        }
        if self
            .spring_stiffness
            .iter()
            .any(|k| !(*k >= T::zero()) || !k.is_finite())
        {
            return bad("spring_stiffness", "every coefficient must be finite and >= 0");
        }
        Ok(())
    }

    /// Composite stiffness of every joint.
    pub fn joint_stiffnesses(&self) -> Vec<T> {
        self.spring_stiffness
            .iter()
            .map(|&k| k + self.shaft_stiffness)
            .collect()
    }
}

/// Composite stiffness of joint `index` (0-based): torsion spring plus shaft.
pub fn joint_stiffness<T: Real>(params: &FingerParams<T>, index: usize) -> Result<T, FingerError> {
    params
        .spring_stiffness
        .get(index)
        .map(|&k| k + params.shaft_stiffness)
        .ok_or(FingerError::JointIndex { index, n: params.n })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerPosture<T> {
    /// Joint angles (rad), flexion-positive.
    pub theta: Vec<T>,
}

impl<T: Real> FingerPosture<T> {
    pub fn straight(n: usize) -> Self {
        Self {
            theta: vec![T::zero(); n],
        }
    }

    pub fn total_bend(&self) -> T {
        self.theta.iter().fold(T::zero(), |acc, &t| acc + t)
    }
}

/// Axial friction force the shaft transmits to each link (N).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShaftForceDistribution<T> {
    pub forces: Vec<T>,
}

impl<T: Real> ShaftForceDistribution<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            forces: vec![T::zero(); n],
        }
    }

    pub fn total(&self) -> T {
        self.forces.iter().fold(T::zero(), |acc, &f| acc + f)
    }
}

/// Joint reactions from the equilibrium recursion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointLoads<T> {
    /// Force at each joint, expressed in the frame of the link it belongs to (N).
    pub joint_forces: Vec<Vec2<T>>,
    /// Restoring torque magnitude at each joint (N·mm).
    pub joint_torques: Vec<T>,
}

/// Measured pin positions for one insertion force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostureObservation<T> {
    pub f_tr: T,
    /// Joint pin positions (mm), one per joint, palm pin first.
    pub pins: Vec<Vec2<T>>,
}

/// Pin positions and fingertip point of a posture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerPose<T> {
    pub pins: Vec<Vec2<T>>,
    pub tip: Vec2<T>,
}

impl<T: Real> FingerPose<T> {
    /// Segment `i` runs from pin `i` to pin `i + 1`; the last one ends at the tip.
    pub fn segment(&self, i: usize) -> (Vec2<T>, Vec2<T>) {
        let end = self.pins.get(i + 1).copied().unwrap_or(self.tip);
        (self.pins[i], end)
    }

    pub fn segment_count(&self) -> usize {
        self.pins.len()
    }
}

pub fn forward_kinematics<T: Real>(params: &FingerParams<T>, posture: &FingerPosture<T>) -> FingerPose<T> {
    let mut pins = Vec::with_capacity(params.n);
    let mut point = Vec2::zero();
    let mut heading = T::zero();
    for (i, &theta) in posture.theta.iter().enumerate().take(params.n) {
        heading = heading + theta;
        pins.push(point);
        let length = if i + 1 < params.n {
            params.link_length
        } else {
            params.tip_length
        };
        point = point + Vec2::from_angle(heading).scale(length);
    }
    FingerPose { pins, tip: point }
}

pub fn elastic_energy<T: Real>(params: &FingerParams<T>, posture: &FingerPosture<T>) -> T {
    let half = T::lit(0.5);
    params
        .joint_stiffnesses()
        .iter()
        .zip(&posture.theta)
        .fold(T::zero(), |acc, (&k, &t)| acc + half * k * t * t)
}
