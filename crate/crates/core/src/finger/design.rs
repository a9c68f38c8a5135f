//! Torsion spring selection for a target bending pattern.

use serde::{Deserialize, Serialize};

use crate::Real;

use super::{solve_posture_with, FingerError, FingerParams, PostureConstraints, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpringObjective {
    /// Every joint bends by the same angle at the reference load.
    UniformBend,
    /// Bending starts at the palm: angles decrease toward the tip.
    ProximalFirst,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignOptions {
    /// Allowed `(max θ - min θ) / mean θ` for the uniform design.
    pub spread_tolerance: f64,
    pub max_iterations: usize,
    /// Exponent of the multiplicative stiffness update.
    pub damping: f64,
    /// Required `θ_first / θ_last` for the proximal design.
    pub proximal_ratio: f64,
    pub solver: SolverOptions,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            spread_tolerance: 0.01,
            max_iterations: 400,
            damping: 0.5,
            proximal_ratio: 2.0,
            solver: SolverOptions::default(),
        }
    }
}

/// Returns torsion spring coefficients (N·mm/rad) for `objective` at `f_tr_ref`.
///
/// The springs already present in `params` are ignored.
pub fn design_springs<T: Real>(
    params: &FingerParams<T>,
    objective: SpringObjective,
    f_tr_ref: T,
    options: &DesignOptions,
) -> Result<Vec<T>, FingerError> {
    params.validate()?;
    if !(f_tr_ref > T::zero()) || !f_tr_ref.is_finite() {
        return Err(FingerError::InvalidForce(f_tr_ref.as_f64()));
    }
    match objective {
        SpringObjective::UniformBend => uniform(params, f_tr_ref, options),
        SpringObjective::ProximalFirst => proximal(params, f_tr_ref, options),
    }
}

fn angles<T: Real>(
    params: &FingerParams<T>,
    springs: Vec<T>,
    f: T,
    solver: &SolverOptions,
) -> Result<Vec<T>, FingerError> {
    let trial = params.with_springs(springs)?;
    Ok(solve_posture_with(&trial, f, solver, &PostureConstraints::default())?
        .posture
        .theta)
}

fn spread<T: Real>(theta: &[T]) -> (T, T) {
    let mean = theta.iter().fold(T::zero(), |a, &t| a + t) / T::from_count(theta.len());
    let max = theta.iter().copied().fold(T::neg_infinity(), T::max);
    let min = theta.iter().copied().fold(T::infinity(), T::min);
    (mean, (max - min) / mean)
}

fn uniform<T: Real>(params: &FingerParams<T>, f: T, options: &DesignOptions) -> Result<Vec<T>, FingerError> {
    let n = params.n;
    if n == 1 {
        return Ok(vec![T::zero()]);
    }
    let floor = params.shaft_stiffness;
    let tolerance = T::lit(options.spread_tolerance);
    let target = tolerance * T::lit(0.5);
    let alpha = T::lit(options.damping);
    let mut k = vec![floor; n];
    let mut last = (T::zero(), T::infinity(), Vec::new());

    for _ in 0..options.max_iterations {
        let springs: Vec<T> = k.iter().map(|&ki| ki - floor).collect();
        let theta = angles(params, springs.clone(), f, &options.solver)?;
        let (mean, rel) = spread(&theta);
        if !(mean > T::zero()) {
            return Err(FingerError::Infeasible(
                "the reference load produces no net flexion".into(),
            ));
        }
        if rel <= target {
            return Ok(springs);
        }
        let guard = mean * T::lit(1e-6);
        for i in 0..n {
            k[i] = (k[i] * (theta[i].max(guard) / mean).powf(alpha)).max(floor);
        }
        last = (mean, rel, theta);
    }

    let (mean, rel, theta) = last;
    if rel <= tolerance {
        return Ok(k.iter().map(|&ki| ki - floor).collect());
    }
    if let Some(i) = (0..n).find(|&i| k[i] <= floor && theta[i] < mean * (T::one() - tolerance)) {
        return Err(FingerError::Infeasible(format!(
            "joint {i} stays below the mean bend with the shaft alone; it would need a negative spring"
        )));
    }
    Err(FingerError::DesignNotConverged {
        iterations: options.max_iterations,
        spread: rel.as_f64(),
    })
}

fn proximal<T: Real>(params: &FingerParams<T>, f: T, options: &DesignOptions) -> Result<Vec<T>, FingerError> {
    let n = params.n;
    if n == 1 {
        return Err(FingerError::Infeasible(
            "a single joint cannot bend ahead of itself".into(),
        ));
    }
    let floor = params.shaft_stiffness;
    let ratio = T::lit(options.proximal_ratio);
    let slack = T::lit(1e-12);
    for step in 0..=options.max_iterations {
        // Geometric stiffening toward the tip: k_i = k_FS r^i.
        let r = T::one() + T::lit(0.05) * T::from_count(step);
        let springs: Vec<T> = (0..n).map(|i| floor * r.powi(i as i32) - floor).collect();
        let theta = angles(params, springs.clone(), f, &options.solver)?;
        let descending = theta.windows(2).all(|w| w[0] + slack >= w[1]);
        if descending && theta[0] > T::zero() && theta[0] >= ratio * theta[n - 1] {
            return Ok(springs);
        }
    }
    Err(FingerError::Infeasible(
        "no geometric stiffness progression gives a proximal-first bend".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::super::solve_posture;
    use super::*;

    const K_FS: f64 = 257.831_007_808_870_5;

    #[test]
    fn single_joint_needs_no_spring() {
        let p = FingerParams::bare(1, 12.0, 13.0, K_FS).unwrap();
        assert_eq!(
            design_springs(&p, SpringObjective::UniformBend, 5.0, &DesignOptions::default()).unwrap(),
            vec![0.0]
        );
    }

    #[test]
    fn uniform_design_flattens_the_bend() {
        let p = FingerParams::bare(4, 12.0, 13.0, K_FS).unwrap();
        let springs = design_springs(&p, SpringObjective::UniformBend, 50.0, &DesignOptions::default()).unwrap();
        assert!(springs.iter().all(|&k| k >= 0.0));
        let theta = solve_posture(&p.with_springs(springs).unwrap(), 50.0)
            .unwrap()
            .posture
            .theta;
        let (_, rel) = spread(&theta);
        assert!(rel <= 0.01, "{theta:?}");
    }

    #[test]
    fn proximal_design_descends() {
        let p = FingerParams::bare(4, 12.0, 13.0, K_FS).unwrap();
        let springs = design_springs(&p, SpringObjective::ProximalFirst, 10.0, &DesignOptions::default()).unwrap();
        assert!(springs.windows(2).all(|w| w[0] <= w[1]));
        let theta = solve_posture(&p.with_springs(springs).unwrap(), 10.0)
            .unwrap()
            .posture
            .theta;
        assert!(theta.windows(2).all(|w| w[0] + 1e-12 >= w[1]), "{theta:?}");
        assert!(theta[0] >= 2.0 * theta[3]);
    }

    #[test]
    fn light_reference_load_is_infeasible() {
        // Joint 1 bends less than the mean even without a spring at light loads.
        let p = FingerParams::bare(4, 12.0, 13.0, K_FS).unwrap();
        assert!(matches!(
            design_springs(&p, SpringObjective::UniformBend, 10.0, &DesignOptions::default()),
            Err(FingerError::Infeasible(_))
        ));
    }

    #[test]
    fn non_positive_reference_is_rejected() {
        let p = FingerParams::bare(3, 12.0, 13.0, K_FS).unwrap();
        assert!(design_springs(&p, SpringObjective::UniformBend, 0.0, &DesignOptions::default()).is_err());
    }
}
