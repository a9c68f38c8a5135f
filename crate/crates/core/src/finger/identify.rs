//! Shaft stiffness from observed pin positions.
//!
//! Each observation is fitted on its own: the pin-distance misfit is scanned
//! over a logarithmic stiffness grid, then refined by golden-section search
//! around the best grid point. The reported stiffness is the mean of the
//! identifiable fits.

use serde::{Deserialize, Serialize};

use crate::Real;

use super::{
    equilibrium_recursion, forward_kinematics, solve_posture_with, FingerError, FingerParams, PostureConstraints,
    PostureObservation, ShaftForceDistribution, SolverOptions,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentificationOptions {
    /// Stiffness search range (N·mm/rad).
    pub k_min: f64,
    pub k_max: f64,
    pub points_per_decade: usize,
    /// Golden-section stopping width, in decades.
    pub refine_tolerance: f64,
    pub solver: SolverOptions,
}

impl Default for IdentificationOptions {
    fn default() -> Self {
        Self {
            k_min: 1.0,
            k_max: 1e6,
            points_per_decade: 10,
            refine_tolerance: 1e-8,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationFit<T> {
    pub f_tr: T,
    /// Best-fit stiffness; infinite when the fit ran into the top of the range.
    pub k_fs: T,
    /// Sum of pin position errors at the fit (mm).
    pub residual: T,
    pub identifiable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationResult<T> {
    /// Mean of the identifiable fits; infinite when none are.
    pub k_fs: T,
    pub fits: Vec<IdentificationFit<T>>,
}

impl<T: Real> IdentificationResult<T> {
    pub fn identifiable(&self) -> bool {
        self.fits.iter().any(|f| f.identifiable)
    }
}

fn misfit<T: Real>(
    geometry: &FingerParams<T>,
    obs: &PostureObservation<T>,
    log_k: f64,
    solver: &SolverOptions,
) -> Result<T, FingerError> {
    let params = geometry.with_shaft_stiffness(T::lit(10f64.powf(log_k)))?;
    // Very soft trial stiffnesses can stall the solver far from the optimum;
    // the best iterate still scores that grid point.
    let posture = match solve_posture_with(&params, obs.f_tr, solver, &PostureConstraints::default()) {
        Ok(solution) => solution.posture,
        Err(FingerError::NotConverged { best, .. }) => {
            let dist = ShaftForceDistribution {
                forces: best.into_iter().map(T::lit).collect(),
            };
            equilibrium_recursion(&params, &dist)?.0
        }
        Err(e) => return Err(e),
    };
    let pose = forward_kinematics(&params, &posture);
    Ok(pose
        .pins
        .iter()
        .zip(&obs.pins)
        .fold(T::zero(), |acc, (th, act)| acc + th.distance(*act)))
}

fn fit_one<T: Real>(
    geometry: &FingerParams<T>,
    obs: &PostureObservation<T>,
    options: &IdentificationOptions,
) -> Result<IdentificationFit<T>, FingerError> {
    let lo = options.k_min.log10();
    let hi = options.k_max.log10();
    let step = 1.0 / options.points_per_decade.max(1) as f64;
    let count = ((hi - lo) / step).round() as usize + 1;
    let grid: Vec<f64> = (0..count).map(|i| lo + step * i as f64).collect();

    let mut best = (0usize, T::infinity());
    for (i, &g) in grid.iter().enumerate() {
        let value = misfit(geometry, obs, g, &options.solver)?;
        if value < best.1 {
            best = (i, value);
        }
    }
    if best.0 + 1 == count {
        return Ok(IdentificationFit {
            f_tr: obs.f_tr,
            k_fs: T::infinity(),
            residual: best.1,
            identifiable: false,
        });
    }

    let mut a = grid[best.0.saturating_sub(1)];
    let mut b = grid[(best.0 + 1).min(count - 1)];
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = misfit(geometry, obs, c, &options.solver)?;
    let mut fd = misfit(geometry, obs, d, &options.solver)?;
    while b - a > options.refine_tolerance {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = misfit(geometry, obs, c, &options.solver)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = misfit(geometry, obs, d, &options.solver)?;
        }
    }
    let mid = 0.5 * (a + b);
    let mut choice = (grid[best.0], best.1);
    let at_mid = misfit(geometry, obs, mid, &options.solver)?;
    if at_mid <= choice.1 {
        choice = (mid, at_mid);
    }
    Ok(IdentificationFit {
        f_tr: obs.f_tr,
        k_fs: T::lit(10f64.powf(choice.0)),
        residual: choice.1,
        identifiable: true,
    })
}

/// Fits the shaft stiffness of `geometry` to each observation.
///
/// The stiffness in `geometry` is ignored; its springs are kept as given.
/// Observations with zero insertion force carry no information and are skipped.
pub fn identify_kfs<T: Real>(
    geometry: &FingerParams<T>,
    observations: &[PostureObservation<T>],
    options: &IdentificationOptions,
) -> Result<IdentificationResult<T>, FingerError> {
    if observations.is_empty() {
        return Err(FingerError::NoObservations);
    }
    for obs in observations {
        if !obs.f_tr.is_finite() || obs.f_tr < T::zero() {
            return Err(FingerError::InvalidForce(obs.f_tr.as_f64()));
        }
        if obs.pins.len() != geometry.n {
            return Err(FingerError::LengthMismatch {
                expected: geometry.n,
                got: obs.pins.len(),
            });
        }
    }
    let informative: Vec<_> = observations.iter().filter(|o| o.f_tr > T::zero()).collect();
    if informative.is_empty() {
        return Err(FingerError::Degenerate);
    }
    let fits = informative
        .into_iter()
        .map(|obs| fit_one(geometry, obs, options))
        .collect::<Result<Vec<_>, _>>()?;
    let good: Vec<T> = fits.iter().filter(|f| f.identifiable).map(|f| f.k_fs).collect();
    let k_fs = if good.is_empty() {
        T::infinity()
    } else {
        good.iter().fold(T::zero(), |a, &k| a + k) / T::from_count(good.len())
    };
    Ok(IdentificationResult { k_fs, fits })
}
