//! Minimum-energy shaft force distribution.
//!
//! The insertion force is split over the links as `f = f_tr w` with `w` on the
//! unit simplex. The elastic energy of the resulting posture is minimized by a
//! spectral projected gradient method with a nonmonotone line search, started
//! from every vertex, the centroid, an optional warm start and a few seeded
//! random points. The lowest energy wins; ties go to the earliest start.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::Real;

use super::statics::{propagate, Chain};
use super::{FingerError, FingerParams, FingerPosture, JointLoads, ShaftForceDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Relative objective change, over a window of iterations, treated as converged.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Random interior starts in addition to the vertices and the centroid.
    pub jitter_starts: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 5000,
            jitter_starts: 2,
            seed: 0,
        }
    }
}

/// Extra conditions on a posture solve.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PostureConstraints<T> {
    /// Joint angles held fixed (rad). Links whose proximal joint is frozen take
    /// no shaft force, and frozen joints do not count toward the energy.
    pub frozen: Vec<Option<T>>,
    /// Force distribution to try as an additional start (N or any positive scale).
    pub warm_start: Option<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostureSolution<T> {
    pub distribution: ShaftForceDistribution<T>,
    pub posture: FingerPosture<T>,
    pub loads: JointLoads<T>,
    /// Elastic energy of the free joints (N·mm).
    pub energy: T,
    /// Iterations used by the winning start.
    pub iterations: usize,
    /// Relative KKT residual of the winning start.
    pub residual: T,
}

pub fn solve_posture<T: Real>(params: &FingerParams<T>, f_tr: T) -> Result<PostureSolution<T>, FingerError> {
    solve_posture_with(params, f_tr, &SolverOptions::default(), &PostureConstraints::default())
}

struct Problem<'a, T> {
    params: &'a FingerParams<T>,
    stiffness: Vec<T>,
    frozen: Vec<Option<T>>,
    active: Vec<usize>,
    f_tr: T,
}

impl<T: Real> Problem<'_, T> {
    fn forces(&self, w: &[T]) -> Vec<T> {
        let mut f = vec![T::zero(); self.params.n];
        for (&link, &wi) in self.active.iter().zip(w) {
            f[link] = self.f_tr * wi;
        }
        f
    }

    fn energy_of(&self, chain: &Chain<T>) -> T {
        let half = T::lit(0.5);
        (0..self.params.n)
            .filter(|&i| self.frozen[i].is_none())
            .fold(T::zero(), |acc, i| {
                acc + half * self.stiffness[i] * chain.theta[i] * chain.theta[i]
            })
    }

    fn chain(&self, w: &[T], with_jacobian: bool) -> Chain<T> {
        propagate(
            self.params,
            &self.stiffness,
            &self.forces(w),
            Some(&self.frozen),
            with_jacobian,
        )
    }

    fn value(&self, w: &[T]) -> T {
        self.energy_of(&self.chain(w, false))
    }

    fn value_and_gradient(&self, w: &[T]) -> (T, Vec<T>) {
        let chain = self.chain(w, true);
        let jac = chain.jacobian.as_ref().expect("requested");
        let grad = self
            .active
            .iter()
            .map(|&j| {
                let dfj = (0..self.params.n)
                    .filter(|&i| self.frozen[i].is_none())
                    .fold(T::zero(), |acc, i| acc + self.stiffness[i] * chain.theta[i] * jac[i][j]);
                dfj * self.f_tr
            })
            .collect();
        (self.energy_of(&chain), grad)
    }
}

/// Euclidean projection onto `{w >= 0, sum w = 1}`.
pub(crate) fn project_simplex<T: Real>(v: &[T]) -> Vec<T> {
    let mut sorted: Vec<T> = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumulative = T::zero();
    let mut shift = T::zero();
    for (i, &u) in sorted.iter().enumerate() {
        cumulative = cumulative + u;
        let candidate = (cumulative - T::one()) / T::from_count(i + 1);
        if u - candidate > T::zero() {
            shift = candidate;
        }
    }
    v.iter().map(|&x| (x - shift).max(T::zero())).collect()
}

fn kkt_residual<T: Real>(w: &[T], g: &[T]) -> T {
    let min_g = g.iter().copied().fold(T::infinity(), T::min);
    let weighted = w.iter().zip(g).fold(T::zero(), |acc, (&wi, &gi)| acc + wi * gi);
    let scale = w
        .iter()
        .zip(g)
        .fold(T::zero(), |acc, (&wi, &gi)| acc + wi * gi.abs())
        .max(T::min_positive_value());
    ((weighted - min_g) / scale).max(T::zero())
}

struct Run<T> {
    w: Vec<T>,
    energy: T,
    iterations: usize,
    residual: T,
    converged: bool,
}

const HISTORY: usize = 10;

fn spg<T: Real>(problem: &Problem<'_, T>, start: Vec<T>, options: &SolverOptions) -> Run<T> {
    let tol = T::lit(options.tolerance);
    let kkt_tol = T::lit(1e-9);
    let sigma = T::lit(1e-4);
    let alpha_min = T::lit(1e-12);
    let alpha_max = T::lit(1e12);

    let mut w = project_simplex(&start);
    let (mut e, mut g) = problem.value_and_gradient(&w);
    let mut history = vec![e];
    let g_inf = g.iter().fold(T::zero(), |a, &x| a.max(x.abs()));
    let mut alpha = if g_inf > T::zero() { T::one() / g_inf } else { T::one() };
    let mut residual = kkt_residual(&w, &g);

    for iteration in 0..options.max_iterations {
        if e <= T::zero() || residual <= kkt_tol {
            return Run {
                w,
                energy: e,
                iterations: iteration,
                residual,
                converged: true,
            };
        }
        let trial: Vec<T> = w.iter().zip(&g).map(|(&wi, &gi)| wi - alpha * gi).collect();
        let projected = project_simplex(&trial);
        let d: Vec<T> = projected.iter().zip(&w).map(|(&p, &wi)| p - wi).collect();
        let slope = d.iter().zip(&g).fold(T::zero(), |a, (&di, &gi)| a + di * gi);
        if slope >= T::zero() {
            return Run {
                w,
                energy: e,
                iterations: iteration,
                residual,
                converged: true,
            };
        }
        let reference = history.iter().copied().fold(T::neg_infinity(), T::max);
        let mut lambda = T::one();
        let mut accepted = None;
        for _ in 0..60 {
            let candidate: Vec<T> = w.iter().zip(&d).map(|(&wi, &di)| wi + lambda * di).collect();
            let ec = problem.value(&candidate);
            if ec <= reference + sigma * lambda * slope {
                accepted = Some(candidate);
                break;
            }
            lambda = lambda * T::lit(0.5);
        }
        let Some(next) = accepted else {
            return Run {
                w,
                energy: e,
                iterations: iteration,
                residual,
                converged: true,
            };
        };
        let (e_next, g_next) = problem.value_and_gradient(&next);
        let s: Vec<T> = next.iter().zip(&w).map(|(&a, &b)| a - b).collect();
        let y: Vec<T> = g_next.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let sy = s.iter().zip(&y).fold(T::zero(), |a, (&si, &yi)| a + si * yi);
        let ss = s.iter().fold(T::zero(), |a, &si| a + si * si);
        alpha = if sy > T::zero() {
            (ss / sy).max(alpha_min).min(alpha_max)
        } else {
            alpha_max
        };
        w = next;
        e = e_next;
        g = g_next;
        residual = kkt_residual(&w, &g);
        history.push(e);
        if history.len() > HISTORY {
            let oldest = history.remove(0);
            if (oldest - e).abs() <= tol * e.abs().max(T::min_positive_value()) {
                return Run {
                    w,
                    energy: e,
                    iterations: iteration + 1,
                    residual,
                    converged: true,
                };
            }
        }
    }
    Run {
        w,
        energy: e,
        iterations: options.max_iterations,
        residual,
        converged: false,
    }
}

fn jitter_points<T: Real>(m: usize, count: usize, seed: u64) -> Vec<Vec<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let raw: Vec<f64> = (0..m).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let total: f64 = raw.iter().sum();
            raw.iter().map(|&x| T::lit(x / total)).collect()
        })
        .collect()
}

pub fn solve_posture_with<T: Real>(
    params: &FingerParams<T>,
    f_tr: T,
    options: &SolverOptions,
    constraints: &PostureConstraints<T>,
) -> Result<PostureSolution<T>, FingerError> {
    params.validate()?;
    if !f_tr.is_finite() || f_tr < T::zero() {
        return Err(FingerError::InvalidForce(f_tr.as_f64()));
    }
    let n = params.n;
    let frozen = if constraints.frozen.is_empty() {
        vec![None; n]
    } else if constraints.frozen.len() == n {
        constraints.frozen.clone()
    } else {
        return Err(FingerError::LengthMismatch {
            expected: n,
            got: constraints.frozen.len(),
        });
    };
    let active: Vec<usize> = (0..n).filter(|&i| frozen[i].is_none()).collect();
    if active.is_empty() {
        return Err(FingerError::NoFreeJoints);
    }
    let problem = Problem {
        params,
        stiffness: params.joint_stiffnesses(),
        frozen,
        active,
        f_tr,
    };
    let m = problem.active.len();

    let finish = |w: Vec<T>, iterations: usize, residual: T| {
        let chain = problem.chain(&w, false);
        let energy = problem.energy_of(&chain);
        PostureSolution {
            distribution: ShaftForceDistribution {
                forces: problem.forces(&w),
            },
            posture: FingerPosture { theta: chain.theta },
            loads: JointLoads {
                joint_forces: chain.forces,
                joint_torques: chain.torques,
            },
            energy,
            iterations,
            residual,
        }
    };

    if m == 1 || f_tr == T::zero() {
        let mut w = vec![T::zero(); m];
        w[m - 1] = T::one();
        return Ok(finish(w, 0, T::zero()));
    }

    let mut starts: Vec<Vec<T>> = (0..m)
        .map(|j| (0..m).map(|i| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    starts.push(vec![T::one() / T::from_count(m); m]);
    if let Some(warm) = &constraints.warm_start {
        if warm.len() != n {
            return Err(FingerError::LengthMismatch {
                expected: n,
                got: warm.len(),
            });
        }
        let picked: Vec<T> = problem.active.iter().map(|&i| warm[i].max(T::zero())).collect();
        let total = picked.iter().fold(T::zero(), |a, &x| a + x);
        if total > T::zero() && total.is_finite() {
            starts.push(picked.iter().map(|&x| x / total).collect());
        }
    }
    starts.extend(jitter_points(m, options.jitter_starts, options.seed));

    let mut best: Option<Run<T>> = None;
    for start in starts {
        let run = spg(&problem, start, options);
        let better = match &best {
            None => true,
            Some(b) => run.energy < b.energy,
        };
        if better {
            best = Some(run);
        }
    }
    let best = best.expect("at least one start");
    if !best.converged {
        log::debug!(
            "posture solve stopped at {} iterations, residual {}",
            best.iterations,
            best.residual
        );
        return Err(FingerError::NotConverged {
            iterations: best.iterations,
            residual: best.residual.as_f64(),
            best: problem.forces(&best.w).iter().map(|f| f.as_f64()).collect(),
        });
    }
    Ok(finish(best.w, best.iterations, best.residual))
}

#[cfg(test)]
mod tests {
    use super::super::{elastic_energy, equilibrium_residuals, FingerParams};
    use super::*;
    use proptest::prelude::*;

    const K_FS: f64 = 257.831_007_808_870_5;

    fn finger(n: usize) -> FingerParams<f64> {
        FingerParams::bare(n, 12.0, 13.0, K_FS).unwrap()
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_simplex(&[0.2f64, 0.8]), vec![0.2, 0.8]);
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = project_simplex(&[0.5f64, 0.5, 0.5]);
        assert!(p.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn zero_force_gives_straight_finger() {
        let s = solve_posture(&finger(4), 0.0).unwrap();
        assert!(s.posture.theta.iter().all(|&t| t == 0.0));
        assert_eq!(s.energy, 0.0);
    }

    #[test]
    fn negative_force_is_rejected() {
        assert!(matches!(
            solve_posture(&finger(3), -1.0),
            Err(FingerError::InvalidForce(_))
        ));
    }

    #[test]
    fn single_link_matches_closed_form() {
        let s = solve_posture(&finger(1), 5.0).unwrap();
        assert_eq!(s.distribution.forces, vec![5.0]);
        assert_eq!(s.posture.theta[0], 13.0 * 5.0 / K_FS);
    }

    #[test]
    fn seven_link_solution_is_in_equilibrium() {
        let p = finger(7);
        let s = solve_posture(&p, 3.2).unwrap();
        assert!((s.distribution.total() - 3.2).abs() < 1e-12);
        assert!(s.distribution.forces.iter().all(|&f| f >= 0.0));
        assert!((elastic_energy(&p, &s.posture) - s.energy).abs() < 1e-12);
        let r = equilibrium_residuals(&p, &s.distribution, &s.posture, &s.loads).unwrap();
        assert!(r.force <= 1e-9 && r.moment <= 1e-9);
    }

    #[test]
    fn all_frozen_is_rejected() {
        let p = finger(2);
        let c = PostureConstraints {
            frozen: vec![Some(0.1), Some(0.1)],
            warm_start: None,
        };
        assert_eq!(
            solve_posture_with(&p, 1.0, &SolverOptions::default(), &c),
            Err(FingerError::NoFreeJoints)
        );
    }

    #[test]
    fn frozen_prefix_moves_force_to_free_links() {
        let p = finger(4);
        let c = PostureConstraints {
            frozen: vec![Some(0.2), None, None, None],
            warm_start: None,
        };
        let s = solve_posture_with(&p, 3.0, &SolverOptions::default(), &c).unwrap();
        assert_eq!(s.posture.theta[0], 0.2);
        assert_eq!(s.distribution.forces[0], 0.0);
        assert!((s.distribution.total() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn identical_seeds_give_identical_answers() {
        let p = finger(5);
        let opts = SolverOptions {
            jitter_starts: 4,
            seed: 17,
            ..Default::default()
        };
        let a = solve_posture_with(&p, 4.0, &opts, &PostureConstraints::default()).unwrap();
        let b = solve_posture_with(&p, 4.0, &opts, &PostureConstraints::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_precision_solve_runs() {
        let p = FingerParams::<f32>::bare(3, 12.0, 13.0, 257.8).unwrap();
        let s = solve_posture(&p, 3.0f32).unwrap();
        assert!((s.distribution.total() - 3.0f32).abs() < 1e-4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn total_bend_grows_with_load(a in 0.5..8.0f64, b in 0.5..8.0f64) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let p = finger(4);
            let bend = |f| solve_posture(&p, f).unwrap().posture.total_bend();
            prop_assert!(bend(lo) <= bend(hi) + 1e-9);
        }

        #[test]
        fn stiffer_springs_do_not_increase_bend(extra in proptest::collection::vec(0.0..500.0f64, 4), f in 0.5..8.0f64) {
            let soft = finger(4);
            let stiff = soft.with_springs(extra).unwrap();
            let bend = |p: &FingerParams<f64>| solve_posture(p, f).unwrap().posture.total_bend();
            prop_assert!(bend(&stiff) <= bend(&soft) + 1e-9);
        }
    }
}
