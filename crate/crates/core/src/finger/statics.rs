//! Link-by-link force and moment balance, from the fingertip to the palm.

use crate::{Real, Vec2};

use super::{FingerError, FingerParams, FingerPosture, FrameRotation, JointLoads, ShaftForceDistribution, TipForce};

/// Joint angles, torques and forces produced by one pass of the recursion.
#[derive(Debug, Clone)]
pub(crate) struct Chain<T> {
    pub theta: Vec<T>,
    pub torques: Vec<T>,
    pub forces: Vec<Vec2<T>>,
    /// `jacobian[i][j] = d theta_i / d f_j`, when requested.
    pub jacobian: Option<Vec<Vec<T>>>,
}

fn perp<T: Real>(v: Vec2<T>) -> Vec2<T> {
    Vec2::new(-v.y, v.x)
}

/// Runs the recursion for shaft forces `f`.
///
/// A joint with a `frozen` angle keeps that angle; its torque is still
/// propagated so that proximal balances see the distal load.
pub(crate) fn propagate<T: Real>(
    params: &FingerParams<T>,
    stiffness: &[T],
    f: &[T],
    frozen: Option<&[Option<T>]>,
    with_jacobian: bool,
) -> Chain<T> {
    let n = params.n;
    let d = params.shaft_offset;
    let l = params.link_length;
    let tip_sign = match params.convention.tip_force {
        TipForce::Direct => T::one(),
        TipForce::Reaction => -T::one(),
    };
    let cumulative = params.convention.frame_rotation == FrameRotation::Cumulative;
    let frozen_at = |i: usize| frozen.and_then(|fz| fz.get(i).copied().flatten());

    let mut theta = vec![T::zero(); n];
    let mut torques = vec![T::zero(); n];
    let mut forces = vec![Vec2::zero(); n];

    // Derivative rows for the joint just processed.
    let mut jac = if with_jacobian {
        vec![vec![T::zero(); n]; n]
    } else {
        Vec::new()
    };
    let mut dm = vec![T::zero(); if with_jacobian { n } else { 0 }];
    let mut df: Vec<Vec2<T>> = vec![Vec2::zero(); dm.len()];
    let mut dphi_sum = vec![T::zero(); dm.len()];

    let last = n - 1;
    torques[last] = d * f[last];
    forces[last] = Vec2::new(tip_sign * f[last], T::zero());
    theta[last] = frozen_at(last).unwrap_or(torques[last] / stiffness[last]);
    if with_jacobian {
        dm[last] = d;
        df[last] = Vec2::new(tip_sign, T::zero());
        if frozen_at(last).is_none() {
            jac[last][last] = d / stiffness[last];
        }
    }

    let mut phi_sum = T::zero();
    for i in (0..last).rev() {
        phi_sum = phi_sum + theta[i + 1];
        let phi = if cumulative { phi_sum } else { theta[i + 1] };
        let distal = forces[i + 1];
        let rotated = distal.rotated(phi);
        torques[i] = torques[i + 1] + d * f[i] - l * rotated.y;
        forces[i] = Vec2::new(rotated.x - f[i], rotated.y);
        let fixed = frozen_at(i);
        theta[i] = fixed.unwrap_or(torques[i] / stiffness[i]);

        if with_jacobian {
            let turn = perp(rotated);
            for j in 0..n {
                dphi_sum[j] = dphi_sum[j] + jac[i + 1][j];
                let dphi = if cumulative { dphi_sum[j] } else { jac[i + 1][j] };
                let drot = df[j].rotated(phi) + turn.scale(dphi);
                let delta = if i == j { T::one() } else { T::zero() };
                dm[j] = dm[j] + d * delta - l * drot.y;
                df[j] = Vec2::new(drot.x - delta, drot.y);
                jac[i][j] = if fixed.is_some() {
                    T::zero()
                } else {
                    dm[j] / stiffness[i]
                };
            }
        }
    }

    Chain {
        theta,
        torques,
        forces,
        jacobian: with_jacobian.then_some(jac),
    }
}

/// Posture and joint loads produced by a given shaft force distribution.
pub fn equilibrium_recursion<T: Real>(
    params: &FingerParams<T>,
    dist: &ShaftForceDistribution<T>,
) -> Result<(FingerPosture<T>, JointLoads<T>), FingerError> {
    if dist.forces.len() != params.n {
        return Err(FingerError::LengthMismatch {
            expected: params.n,
            got: dist.forces.len(),
        });
    }
    let chain = propagate(params, &params.joint_stiffnesses(), &dist.forces, None, false);
    Ok((
        FingerPosture { theta: chain.theta },
        JointLoads {
            joint_forces: chain.forces,
            joint_torques: chain.torques,
        },
    ))
}

/// Largest violation of the link force and moment balances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumResiduals<T> {
    /// Force balance, including the fingertip joint force (N).
    pub force: T,
    /// Moment balance, including the fingertip joint torque (N·mm).
    pub moment: T,
}

/// Re-checks every link balance with joint torques taken as `k θ`.
pub fn equilibrium_residuals<T: Real>(
    params: &FingerParams<T>,
    dist: &ShaftForceDistribution<T>,
    posture: &FingerPosture<T>,
    loads: &JointLoads<T>,
) -> Result<EquilibriumResiduals<T>, FingerError> {
    let n = params.n;
    for got in [dist.forces.len(), posture.theta.len(), loads.joint_forces.len()] {
        if got != n {
            return Err(FingerError::LengthMismatch { expected: n, got });
        }
    }
    let k = params.joint_stiffnesses();
    let m = |i: usize| k[i] * posture.theta[i];
    let f = &dist.forces;
    let d = params.shaft_offset;
    let l = params.link_length;
    let tip_sign = match params.convention.tip_force {
        TipForce::Direct => T::one(),
        TipForce::Reaction => -T::one(),
    };

    let last = n - 1;
    let tip_force = loads.joint_forces[last] - Vec2::new(tip_sign * f[last], T::zero());
    let mut force = tip_force.x.abs().max(tip_force.y.abs());
    let mut moment = (m(last) - d * f[last]).abs();

    for (i, &fi) in f.iter().enumerate().take(last) {
        let phi = match params.convention.frame_rotation {
            FrameRotation::Adjacent => posture.theta[i + 1],
            FrameRotation::Cumulative => posture.theta[i + 1..].iter().fold(T::zero(), |a, &t| a + t),
        };
        let carried = loads.joint_forces[i + 1].rotated(phi);
        // Link i: its own joint force, the distal joint's reaction and the shaft force.
        let balance = loads.joint_forces[i] - carried + Vec2::new(fi, T::zero());
        force = force.max(balance.x.abs()).max(balance.y.abs());
        let lever = Vec2::new(l, T::zero()).cross(carried);
        moment = moment.max((m(i) - m(i + 1) - d * fi + lever).abs());
    }
    Ok(EquilibriumResiduals { force, moment })
}

#[cfg(test)]
mod tests {
    use super::super::{ChainConvention, FingerParams};
    use super::*;
    use proptest::prelude::*;

    fn finger(n: usize) -> FingerParams<f64> {
        FingerParams::bare(n, 12.0, 13.0, 257.831).unwrap()
    }

    fn solve(params: &FingerParams<f64>, f: Vec<f64>) -> (FingerPosture<f64>, JointLoads<f64>) {
        equilibrium_recursion(params, &ShaftForceDistribution { forces: f }).unwrap()
    }

    #[test]
    fn unloaded_finger_is_straight() {
        let (posture, loads) = solve(&finger(5), vec![0.0; 5]);
        assert!(posture.theta.iter().all(|&t| t == 0.0));
        assert!(loads.joint_torques.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn single_link_closed_form() {
        let p = finger(1);
        let (posture, _) = solve(&p, vec![4.0]);
        assert_eq!(posture.theta[0], 13.0 * 4.0 / 257.831);
    }

    #[test]
    fn two_link_hand_derivation() {
        // Link 2: m2 = d f2 and the tip joint force is [f2, 0].
        // Link 1: m1 = m2 + d f1 - l (R(theta2) [f2, 0]).y = 13 + 13 - 12 sin(theta2).
        let (posture, loads) = solve(&FingerParams::bare(2, 12.0, 13.0, 257.8).unwrap(), vec![1.0, 1.0]);
        let theta2: f64 = 13.0 / 257.8;
        let theta1 = (26.0 - 12.0 * theta2.sin()) / 257.8;
        assert!((posture.theta[1] - theta2).abs() < 1e-15);
        assert!((posture.theta[0] - theta1).abs() < 1e-15);
        let f1 = loads.joint_forces[0];
        assert!((f1.x - (theta2.cos() - 1.0)).abs() < 1e-15);
        assert!((f1.y - theta2.sin()).abs() < 1e-15);
    }

    #[test]
    fn reaction_tip_force_flips_the_lever_term() {
        let mut p = FingerParams::bare(2, 12.0, 13.0, 257.8).unwrap();
        p.convention = ChainConvention {
            tip_force: TipForce::Reaction,
            ..Default::default()
        };
        let (posture, _) = solve(&p, vec![1.0, 1.0]);
        let theta2: f64 = 13.0 / 257.8;
        assert!((posture.theta[0] - (26.0 + 12.0 * theta2.sin()) / 257.8).abs() < 1e-15);
    }

    #[test]
    fn cumulative_rotation_sums_distal_angles() {
        let mut adjacent = finger(3);
        let mut cumulative = adjacent.clone();
        cumulative.convention.frame_rotation = FrameRotation::Cumulative;
        adjacent.convention.frame_rotation = FrameRotation::Adjacent;
        let f = vec![0.0, 0.0, 2.0];
        let (a, _) = solve(&adjacent, f.clone());
        let (c, _) = solve(&cumulative, f);
        assert_eq!(a.theta[1], c.theta[1]);
        assert_ne!(a.theta[0], c.theta[0]);
    }

    #[test]
    fn recursion_satisfies_balances() {
        let p = finger(7);
        let dist = ShaftForceDistribution {
            forces: vec![1.0, 0.5, 0.0, 2.0, 0.3, 0.0, 1.1],
        };
        let (posture, loads) = equilibrium_recursion(&p, &dist).unwrap();
        let r = equilibrium_residuals(&p, &dist, &posture, &loads).unwrap();
        assert!(r.force <= 1e-12 && r.moment <= 1e-12, "{r:?}");
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let p = finger(3);
        assert!(equilibrium_recursion(&p, &ShaftForceDistribution { forces: vec![1.0] }).is_err());
    }

    proptest! {
        #[test]
        fn jacobian_matches_finite_differences(
            f in proptest::collection::vec(0.0..5.0f64, 2..8),
            cumulative in any::<bool>(),
            reaction in any::<bool>(),
        ) {
            let n = f.len();
            let mut p = finger(n);
            if cumulative { p.convention.frame_rotation = FrameRotation::Cumulative; }
            if reaction { p.convention.tip_force = TipForce::Reaction; }
            let k = p.joint_stiffnesses();
            let chain = propagate(&p, &k, &f, None, true);
            let jac = chain.jacobian.unwrap();
            let h = 1e-6;
            for j in 0..n {
                let mut up = f.clone();
                let mut down = f.clone();
                up[j] += h;
                down[j] -= h;
                let tu = propagate(&p, &k, &up, None, false).theta;
                let td = propagate(&p, &k, &down, None, false).theta;
                for i in 0..n {
                    let fd = (tu[i] - td[i]) / (2.0 * h);
                    prop_assert!((fd - jac[i][j]).abs() <= 1e-7, "i={i} j={j} fd={fd} an={}", jac[i][j]);
                }
            }
        }

        #[test]
        fn frozen_joints_keep_their_angle(f in proptest::collection::vec(0.0..5.0f64, 3..8), angle in 0.0..0.5f64) {
            let n = f.len();
            let p = finger(n);
            let mut frozen = vec![None; n];
            frozen[0] = Some(angle);
            let chain = propagate(&p, &p.joint_stiffnesses(), &f, Some(&frozen), true);
            prop_assert_eq!(chain.theta[0], angle);
            prop_assert!(chain.jacobian.unwrap()[0].iter().all(|&v| v == 0.0));
        }
    }
}
