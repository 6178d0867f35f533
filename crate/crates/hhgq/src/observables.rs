//! Field observables derived from normally ordered moments: quadrature
//! variances over the full phase angle, their extrema, and the second-order
//! coherence g2.

use crate::error::{Error, Result};
use crate::phase_space::FieldMoments;
use std::f64::consts::{FRAC_PI_2, PI};

/// Relative size of <a^2> - <a>^2 below which the variance is treated as
/// phase-isotropic and the extremal angles are undefined.
const ISOTROPY_TOLERANCE: f64 = 1e-12;

/// Extremal quadrature variances of one mode and the angles they occur at.
#[derive(Debug, Clone, Copy)]
pub struct VarianceProfile {
    /// Angle of the minimal variance, in [0, pi).
    pub theta_min: f64,
    /// Angle of the maximal variance, in [0, pi).
    pub theta_max: f64,
    pub var_min: f64,
    pub var_max: f64,
    /// True when the variance is independent of the angle; the angles are
    /// then reported as 0 and pi/2 by convention.
    pub degenerate: bool,
}

/// Variance of the quadrature X_theta = (a e^{-i theta} + a^dag e^{i theta})/2.
///
/// In terms of the normally ordered moments,
/// Var X_theta = 1/4 + (1/2)(<n> - |<a>|^2) + (1/2) Re[e^{-2 i theta}(<a^2> - <a>^2)].
pub fn quadrature_variance(m: &FieldMoments, theta: f64) -> Result<f64> {
    m.validate()?;
    let excess = m.n - m.a.norm_sqr();
    let aniso = m.a2 - m.a * m.a;
    let rot = num_complex::Complex64::from_polar(1.0, -2.0 * theta);
    let var = 0.25 + 0.5 * excess + 0.5 * (rot * aniso).re;
    if var <= 0.0 {
        return Err(Error::InconsistentMoments(format!(
            "quadrature variance {var:e} at theta = {theta} is not positive"
        )));
    }
    Ok(var)
}

/// Minimal and maximal quadrature variance over all angles.
///
/// The extremum angles follow from writing the theta-dependent term as
/// (1/2)|<a^2> - <a>^2| cos(2 theta - arg(<a^2> - <a>^2)): the maximum sits at
/// half the argument, the minimum a quarter period later.
pub fn min_max_variance(m: &FieldMoments) -> Result<VarianceProfile> {
    m.validate()?;
    let excess = m.n - m.a.norm_sqr();
    let aniso = m.a2 - m.a * m.a;
    let base = 0.25 + 0.5 * excess;
    let amp = aniso.norm();
    let degenerate = amp <= ISOTROPY_TOLERANCE * base.abs().max(1.0);
    let (theta_max, theta_min) = if degenerate {
        (0.0, FRAC_PI_2)
    } else {
        let tm = (0.5 * aniso.arg()).rem_euclid(PI);
        (tm, (tm + FRAC_PI_2).rem_euclid(PI))
    };
    let var_min = base - 0.5 * amp;
    let var_max = base + 0.5 * amp;
    if var_min <= 0.0 {
        return Err(Error::InconsistentMoments(format!(
            "minimal quadrature variance {var_min:e} is not positive"
        )));
    }
    Ok(VarianceProfile {
        theta_min,
        theta_max,
        var_min,
        var_max,
        degenerate,
    })
}

/// Second-order coherence g2 = <a^dag a^dag a a> / <a^dag a>^2.
pub fn g2(m: &FieldMoments) -> Result<f64> {
    m.validate()?;
    if m.n == 0.0 {
        return Err(Error::UndefinedStatistics);
    }
    Ok(m.n2_normal / (m.n * m.n))
}
