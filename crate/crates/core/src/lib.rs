//! Quasi-static simulation of a single-motor self-adaptive gripper.
//!
//! The crate models the translation/rotation switching screw drive, the
//! shaft-driven multi-link finger, the ratchet lock that holds the grasp,
//! cylinder-wrap adaptation and the full grasp/release cycle. Everything is
//! generic over the scalar type; the aliases below fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cycle;
pub mod finger;
pub mod geom;
pub mod grasp;
pub mod lock;
pub mod scalar;
pub mod trsw;

pub use geom::Vec2;
pub use scalar::Real;

pub type ScrewDrive = trsw::ScrewDriveParams<f64>;
pub type DriveState = trsw::MechanismState<f64>;
pub type AxialLoadModel = trsw::LoadModel<f64>;
pub type Finger = finger::FingerParams<f64>;
pub type Posture = finger::FingerPosture<f64>;
pub type Lock = lock::LockParams<f64>;
pub type Object = grasp::CircularObject<f64>;
pub type Hand = cycle::HandConfig<f64>;
pub type Trace = cycle::CycleTrace<f64>;
