//! Ratchet self-locking between the shaft protrusions and the link pawls.
//!
//! Positions are arc lengths along the shaft path (mm), positive toward the
//! fingertip. The leading protrusion sits at the shaft position `s` and
//! protrusion `j` trails it at `s - j * pitch`. Retracting the shaft moves
//! protrusions toward the palm; a
//! protrusion that reaches a pawl from the distal side is stopped by it
//! unless the shaft has been rolled into the unlocking orientation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Real;

/// Tolerance for a protrusion face to count as touching a pawl (mm).
pub const ENGAGEMENT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LockError {
    #[error("invalid lock parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("displacement must be finite and positive, got {0}")]
    InvalidDisplacement(f64),
    #[error("shaft position {position:.6} mm exceeds the travel range {range:.6} mm")]
    TravelExceeded { position: f64, range: f64 },
    #[error("backlash is undefined in unlocking mode")]
    Unlocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LockMode {
    SelfLocking,
    Unlocking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LockParams<T> {
    pub protrusion_pitch: T,
    pub protrusion_count: usize,
    /// Two pawl positions per link (mm).
    pub pawl_positions: Vec<[T; 2]>,
    /// Shaft roll that turns the protrusions clear of the pawls (rad).
    pub unlock_roll: T,
    pub roll_tolerance: T,
}

impl<T: Real> LockParams<T> {
    /// Two pawls per link, the second offset by half a pitch from the first.
    pub fn staggered(
        links: usize,
        link_length: T,
        first_offset: T,
        pitch: T,
        protrusion_count: usize,
    ) -> Result<Self, LockError> {
        let half = pitch * T::lit(0.5);
        let pawl_positions = (0..links)
            .map(|i| {
                let base = link_length * T::from_count(i) + first_offset;
                [base, base + half]
            })
            .collect();
        let params = Self {
            protrusion_pitch: pitch,
            protrusion_count,
            pawl_positions,
            unlock_roll: T::FRAC_PI_2(),
            roll_tolerance: T::lit(0.1),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), LockError> {
        let bad = |name, reason: &str| {
            Err(LockError::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.protrusion_pitch > T::zero()) || !self.protrusion_pitch.is_finite() {
            return bad("protrusion_pitch", "must be finite and > 0");
        }
        if self.protrusion_count == 0 {
            return bad("protrusion_count", "must be >= 1");
        }
        if self.pawl_positions.is_empty() {
            return bad("pawl_positions", "at least one link needs pawls");
        }
        if self
            .pawl_positions
            .iter()
            .any(|[a, b]| !a.is_finite() || !b.is_finite() || !(a < b))
        {
            return bad(
                "pawl_positions",
                "each link needs two finite, strictly increasing positions",
            );
        }
        if !self.unlock_roll.is_finite() {
            return bad("unlock_roll", "must be finite");
        }
        if !(self.roll_tolerance >= T::zero()) || !self.roll_tolerance.is_finite() {
            return bad("roll_tolerance", "must be finite and >= 0");
        }
        Ok(())
    }

    /// Largest shaft position before the protrusions run out (mm).
    pub fn travel_range(&self) -> T {
        self.protrusion_pitch * T::from_count(self.protrusion_count)
    }

    fn pawls(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.pawl_positions
            .iter()
            .flat_map(|pair| pair.iter().copied())
            .enumerate()
    }

    pub fn mode_for_roll(&self, roll: T) -> LockMode {
        let period = T::PI();
        let delta = roll - self.unlock_roll;
        let offset = delta - period * (delta / period).floor();
        let distance = offset.min(period - offset);
        if distance <= self.roll_tolerance {
            LockMode::Unlocking
        } else {
            LockMode::SelfLocking
        }
    }
}

/// Index of a protrusion and of the pawl blocking it (pawls numbered link by link).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngagedPair {
    pub protrusion: usize,
    pub pawl: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LockState<T> {
    /// Shaft position (mm).
    pub s: T,
    /// Shaft roll (rad).
    pub roll: T,
    pub mode: LockMode,
    pub engaged: bool,
    pub engaged_pair: Option<EngagedPair>,
}

impl<T: Real> LockState<T> {
    pub fn new(params: &LockParams<T>, s: T, roll: T) -> Self {
        Self {
            s,
            roll,
            mode: params.mode_for_roll(roll),
            engaged: false,
            engaged_pair: None,
        }
    }
}

fn check_step<T: Real>(dx: T) -> Result<(), LockError> {
    if dx > T::zero() && dx.is_finite() {
        Ok(())
    } else {
        Err(LockError::InvalidDisplacement(dx.as_f64()))
    }
}

/// Moves the shaft toward the fingertip; the pawls never resist this.
pub fn advance<T: Real>(params: &LockParams<T>, state: &LockState<T>, dx: T) -> Result<LockState<T>, LockError> {
    check_step(dx)?;
    let s = state.s + dx;
    let range = params.travel_range();
    if s > range {
        return Err(LockError::TravelExceeded {
            position: s.as_f64(),
            range: range.as_f64(),
        });
    }
    Ok(LockState {
        s,
        engaged: false,
        engaged_pair: None,
        ..state.clone()
    })
}

/// Nearest engagement reachable by retracting, as `(distance, pair)`.
fn nearest_engagement<T: Real>(params: &LockParams<T>, s: T) -> Option<(T, EngagedPair)> {
    let tol = T::lit(ENGAGEMENT_TOLERANCE);
    let pitch = params.protrusion_pitch;
    let last = params.protrusion_count - 1;
    let mut best: Option<(T, EngagedPair)> = None;
    for (pawl, q) in params.pawls() {
        // Closest protrusion still at or distal to the pawl.
        let reach = (s - q + tol) / pitch;
        if reach < T::zero() {
            continue;
        }
        let j = reach.floor().to_usize().unwrap_or(last).min(last);
        let gap = (s - pitch * T::from_count(j) - q).max(T::zero());
        let gap = if gap <= tol { T::zero() } else { gap };
        if best.is_none_or(|(b, _)| gap < b) {
            best = Some((gap, EngagedPair { protrusion: j, pawl }));
        }
    }
    best
}

/// Retraction available before the next protrusion meets a pawl (mm).
///
/// Infinite when every pawl is distal to the leading protrusion.
pub fn backlash<T: Real>(params: &LockParams<T>, state: &LockState<T>) -> Result<T, LockError> {
    if state.mode == LockMode::Unlocking {
        return Err(LockError::Unlocked);
    }
    if state.engaged {
        return Ok(T::zero());
    }
    Ok(nearest_engagement(params, state.s).map_or(T::infinity(), |(gap, _)| gap))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Retraction<T> {
    pub state: LockState<T>,
    pub blocked: bool,
    /// Distance actually moved (mm).
    pub travel: T,
}

/// Moves the shaft toward the palm by up to `dx`.
pub fn retract<T: Real>(params: &LockParams<T>, state: &LockState<T>, dx: T) -> Result<Retraction<T>, LockError> {
    check_step(dx)?;
    if state.mode == LockMode::Unlocking {
        return Ok(Retraction {
            state: LockState {
                s: state.s - dx,
                ..state.clone()
            },
            blocked: false,
            travel: dx,
        });
    }
    if state.engaged {
        return Ok(Retraction {
            state: state.clone(),
            blocked: true,
            travel: T::zero(),
        });
    }
    match nearest_engagement(params, state.s) {
        Some((gap, pair)) if gap <= dx => Ok(Retraction {
            state: LockState {
                s: state.s - gap,
                engaged: true,
                engaged_pair: Some(pair),
                ..state.clone()
            },
            blocked: gap < dx,
            travel: gap,
        }),
        _ => Ok(Retraction {
            state: LockState {
                s: state.s - dx,
                ..state.clone()
            },
            blocked: false,
            travel: dx,
        }),
    }
}

/// Rolls the shaft; entering the unlocking orientation releases any engagement.
pub fn set_roll<T: Real>(params: &LockParams<T>, state: &LockState<T>, roll: T) -> LockState<T> {
    let mode = params.mode_for_roll(roll);
    let release = mode == LockMode::Unlocking;
    LockState {
        roll,
        mode,
        engaged: state.engaged && !release,
        engaged_pair: if release { None } else { state.engaged_pair },
        s: state.s,
    }
}
