//! Diagonal-mixture (APP) versus exact observables for the coherently driven
//! one-band model: truncated double sums for the emitted-mode moments, the
//! closed-form Bessel expressions for the leading and second-order variance
//! errors, the system-size sweep behind the quadratic-scaling result, and the
//! smoothed Wigner map of the mixture.

use crate::error::{Error, Result};
use crate::oneband::{c_coefficients, gtilde, renormalize, taylor_coeffs_signed_log, Crystal, LaserConfig};
use crate::phase_space::{DrivingState, Quad, COVERAGE_TOLERANCE};
use crate::quadrature::QuadratureGrid;
use crate::specfun::{a_mu, bessel_j, ln_binomial, ln_factorial};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};

/// Relative size of the last summation shell at which the truncated double
/// sums count as converged.
const SHELL_TOLERANCE: f64 = 1e-12;

/// Exact and diagonal-mixture moments of one emitted harmonic, from direct
/// truncated summation of the power series in |alpha|^2.
#[derive(Debug, Clone, Copy)]
pub struct AppMomentSeries {
    pub n: u32,
    pub m_max: usize,
    /// <a^dag a> under the mixture.
    pub adag_a: f64,
    /// <a^2> under the mixture.
    pub a2: Complex64,
    /// <a> under the mixture.
    pub a: Complex64,
    pub adag_a_exact: f64,
    pub a2_exact: Complex64,
    pub a_exact: Complex64,
    /// Always true on a successfully constructed value; construction fails
    /// with a truncation error otherwise.
    pub converged: bool,
}

/// One row of the error-versus-system-size sweep. Errors are relative to the
/// exact variance 1/4.
#[derive(Debug, Clone, Copy)]
pub struct VarianceErrorRow {
    pub sites: usize,
    pub err_max: f64,
    pub err_min: f64,
    pub theta_max: f64,
    pub theta_min: f64,
    pub err_second_order: f64,
}

/// sum_{q=0}^{top} exp(ln_d + ln C(top,q) + ln (top+off)!/(q+off)! + (q-top) ln x)
fn q_sum(ln_d: f64, top: usize, off: usize, ln_x: f64) -> f64 {
    let mut s = 0.0;
    for q in 0..=top {
        s += (ln_d + ln_binomial(top, q) + ln_factorial(top + off) - ln_factorial(q + off)
            + (q as f64 - top as f64) * ln_x)
            .exp();
    }
    s
}

/// Direct truncated summation of the six emitted-mode moment series: the
/// exact coherent results and their diagonal-mixture counterparts, where each
/// power |alpha|^{2k} picks up the finite q-sum produced by the Gaussian
/// Husimi average.
///
/// Only meaningful in the small-argument regime gtilde * l * |alpha| <~ 10;
/// beyond it the alternating sums cancel below double precision and the
/// closed-form error expressions take over.
pub fn series_moments(
    crystal: &Crystal,
    laser: &LaserConfig,
    n: u32,
    g_n: f64,
    m_max: usize,
) -> Result<AppMomentSeries> {
    let d = taylor_coeffs_signed_log(crystal, laser, n, m_max)?;
    let x = laser.alpha_abs * laser.alpha_abs;
    let phase = Complex64::from_polar(1.0, n as f64 * laser.phi_alpha);
    let phase2 = phase * phase;
    let nn = n as usize;

    if x == 0.0 {
        // Every exact sum and both mixture field amplitudes carry a positive
        // power of |alpha|; only the q = 0 term of <a^dag a> survives, where
        // the x powers cancel exactly against the stored bare coefficients.
        let mut adag = 0.0;
        for s in 0..=m_max {
            let mut shell = 0.0;
            for m1 in 0..=s {
                let m2 = s - m1;
                let (s1, l1) = d[m1];
                let (s2, l2) = d[m2];
                shell += s1 * s2 * (l1 + l2 + ln_factorial(m1 + m2 + nn)).exp();
            }
            adag += shell;
            if s > 0 && shell.abs() <= SHELL_TOLERANCE * adag.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        return Ok(AppMomentSeries {
            n,
            m_max,
            adag_a: g_n * g_n * adag,
            a2: Complex64::new(0.0, 0.0),
            a: Complex64::new(0.0, 0.0),
            adag_a_exact: 0.0,
            a2_exact: Complex64::new(0.0, 0.0),
            a_exact: Complex64::new(0.0, 0.0),
            converged: true,
        });
    }

    let ln_x = x.ln();
    // Fold the |alpha|^{2m+n} powers into the coefficient logs.
    let d: Vec<(f64, f64)> = d
        .iter()
        .enumerate()
        .map(|(m, &(sg, lg))| (sg, lg + (2 * m + nn) as f64 * laser.alpha_abs.ln()))
        .collect();
    // Single sums for <a>.
    let mut a_exact_sum = 0.0;
    let mut a_app_sum = 0.0;
    // Shelled double sums over m1 + m2 = s for the quadratic moments.
    let mut adag_exact = 0.0;
    let mut a2_exact_sum = 0.0;
    let mut adag_app = 0.0;
    let mut a2_app_sum = 0.0;
    let mut worst_tail = 0.0_f64;
    let mut converged = false;
    for s in 0..=m_max {
        let (sg, lg) = d[s];
        let t = sg * lg.exp();
        a_exact_sum += t;
        a_app_sum += sg * q_sum(lg, s, nn, ln_x);
        let mut sh_adx = 0.0;
        let mut sh_a2x = 0.0;
        let mut sh_ada = 0.0;
        let mut sh_a2a = 0.0;
        for m1 in 0..=s {
            let m2 = s - m1;
            let (s1, l1) = d[m1];
            let (s2, l2) = d[m2];
            let sign = s1 * s2;
            if sign == 0.0 {
                continue;
            }
            let exact = sign * (l1 + l2).exp();
            sh_adx += exact;
            sh_a2x += exact;
            sh_ada += sign * q_sum(l1 + l2, s + nn, 0, ln_x);
            sh_a2a += sign * q_sum(l1 + l2, s, 2 * nn, ln_x);
        }
        adag_exact += sh_adx;
        a2_exact_sum += sh_a2x;
        adag_app += sh_ada;
        a2_app_sum += sh_a2a;
        if s > 0 {
            let rel = |shell: f64, total: f64| shell.abs() / total.abs().max(f64::MIN_POSITIVE);
            worst_tail = rel(sh_ada, adag_app)
                .max(rel(sh_a2a, a2_app_sum))
                .max(rel(sh_adx, adag_exact));
            if worst_tail <= SHELL_TOLERANCE {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::Truncation {
            tail: worst_tail,
            terms: m_max,
        });
    }
    let g2 = g_n * g_n;
    Ok(AppMomentSeries {
        n,
        m_max,
        adag_a: g2 * adag_app,
        a2: g2 * a2_app_sum * phase2,
        a: g_n * a_app_sum * phase,
        adag_a_exact: g2 * adag_exact,
        a2_exact: g2 * a2_exact_sum * phase2,
        a_exact: g_n * a_exact_sum * phase,
        converged: true,
    })
}

/// The Bessel-sum combinations S_mu = sum_l C_l A_{n,mu}(gtilde l |alpha|).
fn ladder_sums(crystal: &Crystal, laser: &LaserConfig, n: u32) -> Result<[f64; 4]> {
    let c = c_coefficients(crystal)?;
    let z0 = gtilde(crystal, laser) * laser.alpha_abs;
    let mut s = [0.0; 4];
    for (mu, slot) in s.iter_mut().enumerate() {
        for (i, &cl) in c.iter().enumerate() {
            *slot += cl * a_mu(n, mu as u32, (i + 1) as f64 * z0)?;
        }
    }
    Ok(s)
}

/// Leading (highest-order surviving) error terms of the mixture moments:
/// delta_n = <a^dag a> - |<a>|^2 and delta_a2 = <a^2> - <a>^2, expressed
/// through the ladder sums S_mu with an overall G_n^2/|alpha|^2.
pub fn closed_form_error_terms(
    crystal: &Crystal,
    laser: &LaserConfig,
    n: u32,
    g_n: f64,
) -> Result<(f64, Complex64)> {
    let x = laser.alpha_abs * laser.alpha_abs;
    if x <= 0.0 {
        return Err(Error::domain(
            "closed_form_error_terms",
            "|alpha| must be positive",
        ));
    }
    let s = ladder_sums(crystal, laser, n)?;
    let nf = n as f64;
    let pre = g_n * g_n / x;
    let delta_n = pre * (nf * nf * s[0] * s[0] + 2.0 * s[1] * s[1] + 2.0 * nf * s[0] * s[1]);
    let mag = pre * (2.0 * s[1] * s[1] + 2.0 * nf * s[0] * s[1]);
    let delta_a2 = mag * Complex64::from_polar(1.0, 2.0 * nf * laser.phi_alpha);
    Ok((delta_n, delta_a2))
}

/// Coefficient of m^mu in the cubic Lagrange basis polynomial through the
/// integer nodes 0..3; `LAGRANGE[mu][i]` multiplies the value at node i.
const LAGRANGE: [[f64; 4]; 4] = [
    [1.0, 0.0, 0.0, 0.0],
    [-11.0 / 6.0, 3.0, -1.5, 1.0 / 3.0],
    [1.0, -2.5, 2.0, -0.5],
    [-1.0 / 6.0, 0.5, -0.5, 1.0 / 6.0],
];

/// Second-highest-order error terms, one power of 1/|alpha|^2 below the
/// leading ones.
///
/// The coefficient of D_{m1} D_{m2} x^{m1+m2+n-2} in each difference is a
/// polynomial of degree three per index, so it is interpolated exactly on
/// the 4x4 integer grid and re-expressed through products S_mu S_nu.
pub fn second_order_error_terms(
    crystal: &Crystal,
    laser: &LaserConfig,
    n: u32,
    g_n: f64,
) -> Result<(f64, Complex64)> {
    let x = laser.alpha_abs * laser.alpha_abs;
    if x <= 0.0 {
        return Err(Error::domain(
            "second_order_error_terms",
            "|alpha| must be positive",
        ));
    }
    let s = ladder_sums(crystal, laser, n)?;
    let nf = n as f64;
    let u = |m: f64| m * (m - 1.0) * (m + nf) * (m + nf - 1.0) / 2.0;
    let cross = |m1: f64, m2: f64| m1 * m2 * (m1 + nf) * (m2 + nf);
    let e2n = |m1: f64, m2: f64| {
        let m = m1 + m2 + nf;
        m * m * (m - 1.0) * (m - 1.0) / 2.0 - u(m1) - u(m2) - cross(m1, m2)
    };
    let e2a = |m1: f64, m2: f64| {
        let sm = m1 + m2;
        sm * (sm - 1.0) * (sm + 2.0 * nf) * (sm + 2.0 * nf - 1.0) / 2.0 - u(m1) - u(m2) - cross(m1, m2)
    };
    let contract = |e2: &dyn Fn(f64, f64) -> f64| {
        let c = monomial_coeffs(e2);
        let mut total = 0.0;
        for mu in 0..4 {
            for nu in 0..4 {
                total += c[mu][nu] * s[mu] * s[nu];
            }
        }
        total
    };
    let pre = g_n * g_n / (x * x);
    let delta2_n = pre * contract(&e2n);
    let delta2_a2 =
        pre * contract(&e2a) * Complex64::from_polar(1.0, 2.0 * nf * laser.phi_alpha);
    Ok((delta2_n, delta2_a2))
}

/// Monomial coefficients c[mu][nu] of a bivariate polynomial of degree at
/// most three per variable, from its values on the 4x4 integer grid.
fn monomial_coeffs(p: &dyn Fn(f64, f64) -> f64) -> [[f64; 4]; 4] {
    let mut c = [[0.0; 4]; 4];
    for (mu, row) in c.iter_mut().enumerate() {
        for (nu, slot) in row.iter_mut().enumerate() {
            for i in 0..4 {
                for j in 0..4 {
                    *slot += LAGRANGE[mu][i] * LAGRANGE[nu][j] * p(i as f64, j as f64);
                }
            }
        }
    }
    c
}

/// Variance error of quadrature angle theta from the closed forms:
/// <dX^2(theta)> - 1/4 = (1/4)[2 delta_n + 2 Re(e^{-2 i theta} delta_a2)],
/// returned as (leading, second-order correction).
pub fn variance_error(
    crystal: &Crystal,
    laser: &LaserConfig,
    n: u32,
    g_n: f64,
    theta: f64,
) -> Result<(f64, f64)> {
    let rot = Complex64::from_polar(1.0, -2.0 * theta);
    let (dn, da2) = closed_form_error_terms(crystal, laser, n, g_n)?;
    let (dn2, da22) = second_order_error_terms(crystal, laser, n, g_n)?;
    Ok((
        0.25 * (2.0 * dn + 2.0 * (rot * da2).re),
        0.25 * (2.0 * dn2 + 2.0 * (rot * da22).re),
    ))
}

/// Error-versus-system-size sweep at fixed drive: for each site count the
/// crystal is rebuilt, G_n re-renormalized against the finite-pulse spectrum,
/// and the extremal variance errors evaluated analytically from the phase of
/// delta_a2. Errors are reported relative to the exact variance 1/4.
pub fn sweep_error_vs_l(
    template: &Crystal,
    laser: &LaserConfig,
    n: u32,
    l_values: &[usize],
) -> Result<Vec<VarianceErrorRow>> {
    l_values
        .par_iter()
        .map(|&sites| {
            let crystal = Crystal {
                sites,
                ..template.clone()
            };
            let g_n = renormalize(&crystal, laser, n)?;
            let (dn, da2) = closed_form_error_terms(&crystal, laser, n, g_n)?;
            let (dn2, da22) = second_order_error_terms(&crystal, laser, n, g_n)?;
            let theta_max = (0.5 * da2.arg()).rem_euclid(PI);
            Ok(VarianceErrorRow {
                sites,
                err_max: 2.0 * (dn + da2.norm()),
                err_min: 2.0 * (dn - da2.norm()),
                theta_max,
                theta_min: (theta_max + FRAC_PI_2).rem_euclid(PI),
                err_second_order: 2.0 * (dn2.abs() + da22.norm()),
            })
        })
        .collect()
}

/// The emitted-harmonic output map beta -> gamma_n^beta of the one-band
/// model, suitable for the mixture quadratures and the Wigner map.
pub fn one_band_map(
    crystal: &Crystal,
    laser: &LaserConfig,
    n: u32,
    g_n: f64,
) -> Result<impl Fn(Complex64) -> Complex64 + Sync> {
    crystal.validate()?;
    let c = c_coefficients(crystal)?;
    let z0 = gtilde(crystal, laser);
    Ok(move |beta: Complex64| {
        let r = beta.norm();
        let mut sum = 0.0;
        for (i, &cl) in c.iter().enumerate() {
            sum += cl * bessel_j(n, (i + 1) as f64 * z0 * r).unwrap_or(0.0);
        }
        if r == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        g_n * sum * (beta / r).powu(n)
    })
}

/// Wigner function of the mixture at one point:
/// W(alpha) = (2/pi) integral d^2 beta Q(beta) e^{-2 |alpha - gamma(beta)|^2},
/// i.e. the Husimi-weighted average of coherent-state Wigner functions
/// centered on the mapped amplitudes; manifestly nonnegative for any map.
pub fn wigner_app<F>(
    state: &DrivingState,
    gamma_map: F,
    alpha: Complex64,
    grid: &QuadratureGrid,
) -> Quad<f64>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let q = crate::phase_space::integrate_q(
        state,
        |beta| {
            let g = gamma_map(beta);
            Complex64::new((2.0 / PI) * (-2.0 * (alpha - g).norm_sqr()).exp(), 0.0)
        },
        grid,
    );
    Quad {
        value: q.value.re,
        coverage_defect: q.coverage_defect,
        coverage_warning: q.coverage_warning,
    }
}

/// A full Wigner map over a rectangular output window.
#[derive(Debug, Clone)]
pub struct WignerMap {
    /// (Re alpha, Im alpha, W) per output node, row-major over the window.
    pub points: Vec<(f64, f64, f64)>,
    /// Quadrature of W over the window.
    pub integral: f64,
    pub min_w: f64,
    pub coverage_defect: f64,
    pub coverage_warning: bool,
}

/// Evaluates the mixture Wigner function on the Gauss-Legendre nodes of
/// `out_grid`, sharing one pass over the input-state quadrature nodes.
pub fn wigner_map<F>(
    state: &DrivingState,
    gamma_map: F,
    in_grid: &QuadratureGrid,
    out_grid: &QuadratureGrid,
) -> WignerMap
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    // Precompute the weighted Husimi samples and mapped output amplitudes.
    let (xs, wx) = in_grid.axis(in_grid.center.re);
    let (ys, wy) = in_grid.axis(in_grid.center.im);
    let samples: Vec<(f64, Complex64)> = xs
        .iter()
        .zip(&wx)
        .flat_map(|(&x, &wi)| {
            ys.iter()
                .zip(&wy)
                .map(move |(&y, &wj)| (x, wi, y, wj))
                .collect::<Vec<_>>()
        })
        .map(|(x, wi, y, wj)| {
            let beta = Complex64::new(x, y);
            (state.husimi(beta) * wi * wj, gamma_map(beta))
        })
        .filter(|&(q, _)| q != 0.0)
        .collect();
    let mass: f64 = samples.iter().map(|s| s.0).sum();

    let (oxs, owx) = out_grid.axis(out_grid.center.re);
    let (oys, owy) = out_grid.axis(out_grid.center.im);
    let rows: Vec<(Vec<(f64, f64, f64)>, f64)> = oxs
        .par_iter()
        .zip(owx.par_iter())
        .map(|(&ox, &owi)| {
            let mut row = Vec::with_capacity(oys.len());
            let mut integral = 0.0;
            for (&oy, &owj) in oys.iter().zip(owy.iter()) {
                let alpha = Complex64::new(ox, oy);
                let mut w = 0.0;
                for &(q, g) in &samples {
                    w += q * (-2.0 * (alpha - g).norm_sqr()).exp();
                }
                w *= 2.0 / PI;
                row.push((ox, oy, w));
                integral += owi * owj * w;
            }
            (row, integral)
        })
        .collect();
    let mut points = Vec::with_capacity(oxs.len() * oys.len());
    let mut integral = 0.0;
    for (row, part) in rows {
        points.extend(row);
        integral += part;
    }
    let min_w = points.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);
    let coverage_defect = (1.0 - mass).abs();
    WignerMap {
        points,
        integral,
        min_w,
        coverage_defect,
        coverage_warning: coverage_defect > COVERAGE_TOLERANCE,
    }
}

/// Least-squares slope of ln y against ln x; `None` for fewer than two
/// points or nonpositive data.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    if xs.iter().chain(ys).any(|&v| v <= 0.0) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|&x| (x - mx) * (x - mx)).sum();
    if den == 0.0 {
        return None;
    }
    Some(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oneband::Envelope;
    use crate::phase_space::map_moments;
    use approx::assert_relative_eq;

    /// A drive with order-unity lattice coupling so the series regime covers
    /// |alpha| of a few.
    fn soft_laser(alpha_abs: f64, phi: f64) -> LaserConfig {
        LaserConfig {
            g0: 0.002,
            omega_l: 0.005,
            alpha_abs,
            phi_alpha: phi,
            n_cycles: 20,
            samples_per_cycle: 512,
            envelope: Envelope::Sin2,
        }
    }

    fn soft_crystal() -> Crystal {
        Crystal::zno(100)
    }

    #[test]
    fn exact_side_collapses_to_coherent_relations() {
        let crystal = soft_crystal();
        let cfg = soft_laser(2.0, 0.6);
        let s = series_moments(&crystal, &cfg, 3, 0.8, 60).unwrap();
        assert!(s.converged);
        assert_relative_eq!(s.adag_a_exact, s.a_exact.norm_sqr(), max_relative = 1e-12);
        assert!((s.a2_exact - s.a_exact * s.a_exact).norm() <= 1e-12 * s.a2_exact.norm());
        // And the exact amplitude is the analytic Bessel amplitude.
        let gamma = crate::oneband::gamma_analytic(&crystal, &cfg, 3, 0.8).unwrap();
        assert!((s.a_exact - gamma).norm() < 1e-10 * gamma.norm().max(1e-12));
    }

    #[test]
    fn app_moments_match_phase_space_quadrature() {
        let crystal = soft_crystal();
        let cfg = soft_laser(2.0, 0.4);
        let g_n = 0.7;
        let s = series_moments(&crystal, &cfg, 3, g_n, 60).unwrap();
        let state = DrivingState::Coherent {
            alpha: Complex64::from_polar(cfg.alpha_abs, cfg.phi_alpha),
        };
        let map = one_band_map(&crystal, &cfg, 3, g_n).unwrap();
        let q = map_moments(&state, &map, &state.default_grid());
        assert!((q.moments.n - s.adag_a).abs() < 1e-8 * s.adag_a.max(1e-8));
        assert!((q.moments.a - s.a).norm() < 1e-8 * s.a.norm().max(1e-8));
        assert!((q.moments.a2 - s.a2).norm() < 1e-8 * s.a2.norm().max(1e-8));
    }

    #[test]
    fn vacuum_drive_keeps_only_number_moment() {
        let crystal = soft_crystal();
        let cfg = soft_laser(0.0, 0.0);
        let g_n = 0.5;
        let s = series_moments(&crystal, &cfg, 3, g_n, 40).unwrap();
        assert_eq!(s.a, Complex64::new(0.0, 0.0));
        assert_eq!(s.a2, Complex64::new(0.0, 0.0));
        assert_eq!(s.adag_a_exact, 0.0);
        assert!(s.adag_a > 0.0);
        // Oracle: mixture number moment of the mapped vacuum.
        let state = DrivingState::Fock { n: 0 };
        let map = one_band_map(&crystal, &cfg, 3, g_n).unwrap();
        let q = map_moments(&state, &map, &state.default_grid());
        assert!(
            (q.moments.n - s.adag_a).abs() < 1e-10 * s.adag_a,
            "{} vs {}",
            q.moments.n,
            s.adag_a
        );
    }

    #[test]
    fn termwise_identity_of_highest_q_term() {
        // The q = m1+m2+n term of the mixture number sum is the (m1,m2)
        // term of the exact sum, so the APP excess is strictly lower order
        // in |alpha|^2: relative to the exact value it decays as 1/x.
        let crystal = soft_crystal();
        // Small Bessel arguments keep the series prefactors constant while
        // |alpha| doubles, isolating the 1/x decay.
        let rel_at = |amag: f64| {
            let mut cfg = soft_laser(amag, 0.0);
            cfg.g0 = 2e-5;
            let s = series_moments(&crystal, &cfg, 3, 1.0, 80).unwrap();
            (s.adag_a - s.adag_a_exact) / s.adag_a_exact
        };
        let (r50, r100) = (rel_at(20.0), rel_at(40.0));
        assert!(r50 > 0.0 && r100 > 0.0, "excess not positive: {r50}, {r100}");
        let decay = r100 / r50;
        assert!(
            (decay - 0.25).abs() < 0.05,
            "excess does not decay as 1/x: ratio {decay}"
        );
    }

    #[test]
    fn truncation_error_when_series_cannot_converge() {
        let crystal = soft_crystal();
        let cfg = soft_laser(3.0, 0.0);
        match series_moments(&crystal, &cfg, 3, 1.0, 4) {
            Err(Error::Truncation { terms: 4, .. }) => {}
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn closed_form_matches_series_differences() {
        // The closed forms are the highest surviving order in 1/|alpha|^2, so
        // the agreement with the full series differences improves as 1/x; a
        // weak lattice coupling keeps the Bessel arguments summable while
        // |alpha| grows large enough for three-digit agreement.
        let crystal = soft_crystal();
        for &amag in &[60.0, 100.0] {
            for &phi in &[0.0, 0.7] {
                let mut cfg = soft_laser(amag, phi);
                cfg.g0 = 2e-5; // gtilde ~ 0.003
                let g_n = 0.9;
                let s = series_moments(&crystal, &cfg, 3, g_n, 80).unwrap();
                let (dn, da2) = closed_form_error_terms(&crystal, &cfg, 3, g_n).unwrap();
                let series_dn = s.adag_a - s.a.norm_sqr();
                let series_da2 = s.a2 - s.a * s.a;
                assert!(
                    (dn / series_dn - 1.0).abs() < 1e-3,
                    "|alpha|={amag}: delta_n {dn:e} vs {series_dn:e}"
                );
                assert!(
                    (da2 - series_da2).norm() < 1e-3 * series_da2.norm(),
                    "|alpha|={amag}: delta_a2 {da2} vs {series_da2}"
                );
            }
        }
    }

    #[test]
    fn second_order_closes_the_gap() {
        // Leading + second-order should track the series difference one
        // power of 1/x better than leading alone.
        let crystal = soft_crystal();
        let cfg = soft_laser(5.0, 0.0);
        let g_n = 1.0;
        let s = series_moments(&crystal, &cfg, 3, g_n, 80).unwrap();
        let series_dn = s.adag_a - s.a.norm_sqr();
        let (dn, _) = closed_form_error_terms(&crystal, &cfg, 3, g_n).unwrap();
        let (dn2, _) = second_order_error_terms(&crystal, &cfg, 3, g_n).unwrap();
        let gap1 = (series_dn - dn).abs();
        let gap2 = (series_dn - dn - dn2).abs();
        assert!(
            gap2 < 0.3 * gap1,
            "second order does not improve: {gap1:e} -> {gap2:e}"
        );
    }

    #[test]
    fn interpolated_coefficients_reproduce_polynomials_off_grid() {
        // The error-coefficient polynomials have degree <= 3 per index, so
        // the 4x4 interpolation must reproduce them exactly well beyond the
        // fitting grid.
        let nf = 3.0;
        let u = |m: f64| m * (m - 1.0) * (m + nf) * (m + nf - 1.0) / 2.0;
        let e2n = |m1: f64, m2: f64| {
            let m = m1 + m2 + nf;
            m * m * (m - 1.0) * (m - 1.0) / 2.0
                - u(m1)
                - u(m2)
                - m1 * m2 * (m1 + nf) * (m2 + nf)
        };
        let c = monomial_coeffs(&e2n);
        for m1 in 0..=8 {
            for m2 in 0..=8 {
                let mut val = 0.0;
                for mu in 0..4 {
                    for nu in 0..4 {
                        val += c[mu][nu] * (m1 as f64).powi(mu as i32) * (m2 as f64).powi(nu as i32);
                    }
                }
                let want = e2n(m1 as f64, m2 as f64);
                assert!(
                    (val - want).abs() <= 1e-9 * want.abs().max(1.0),
                    "({m1},{m2}): {val} vs {want}"
                );
            }
        }
    }

    #[test]
    fn error_floor_nonnegative() {
        // delta_n - |delta_a2| reduces to the n^2 S_0^2 term, so the minimal
        // variance error can never be negative.
        let crystal = soft_crystal();
        for &amag in &[0.5, 2.0, 8.0, 8.57e5] {
            let mut cfg = LaserConfig::reference();
            cfg.alpha_abs = amag;
            let (dn, da2) = closed_form_error_terms(&crystal, &cfg, 3, 0.04).unwrap();
            assert!(dn - da2.norm() >= -1e-18, "|alpha| = {amag}");
        }
    }

    #[test]
    fn variance_error_positive_at_reference_parameters() {
        let crystal = soft_crystal();
        let cfg = LaserConfig::reference();
        let g3 = renormalize(&crystal, &cfg, 3).unwrap();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..64 {
            let theta = k as f64 * PI / 64.0;
            let (lead, second) = variance_error(&crystal, &cfg, 3, g3, theta).unwrap();
            assert!(lead > 0.0, "theta = {theta}");
            assert!(second.abs() < 1e-2 * lead, "theta = {theta}");
            lo = lo.min(lead);
            hi = hi.max(lead);
        }
        assert!(hi > lo * (1.0 + 1e-6), "no theta dependence: {lo} vs {hi}");
    }

    #[test]
    fn sweep_scales_quadratically() {
        let cfg = LaserConfig::reference();
        let ls: Vec<usize> = (0..9).map(|k| 100 << k).collect();
        let rows = sweep_error_vs_l(&Crystal::zno(2), &cfg, 3, &ls).unwrap();
        assert!(rows.iter().all(|r| r.err_min > 0.0));
        assert!(rows.iter().all(|r| r.err_max >= r.err_min));
        let xs: Vec<f64> = rows.iter().map(|r| r.sites as f64).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.err_max).collect();
        let slope = log_log_slope(&xs, &ys).unwrap();
        assert!((slope - 2.0).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn slope_fit_edge_cases() {
        assert_eq!(log_log_slope(&[1.0], &[1.0]), None);
        assert_eq!(log_log_slope(&[1.0, 2.0], &[1.0, -2.0]), None);
        let s = log_log_slope(&[1.0, 10.0, 100.0], &[2.0, 200.0, 20000.0]).unwrap();
        assert_relative_eq!(s, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn wigner_identity_map_against_independent_grid() {
        let alpha0 = Complex64::new(1.0, -0.5);
        let state = DrivingState::Coherent { alpha: alpha0 };
        let a = wigner_app(&state, |b| b, alpha0, &state.default_grid());
        let wide = QuadratureGrid::new(alpha0, 7.0, 160).unwrap();
        let b = wigner_app(&state, |b| b, alpha0, &wide);
        assert_relative_eq!(a.value, b.value, max_relative = 1e-8);
        // The mixture adds one unit of vacuum noise to the coherent state, so
        // its peak is the Gaussian-smoothed 2/(3 pi) rather than 2/pi.
        assert_relative_eq!(a.value, 2.0 / (3.0 * PI), max_relative = 1e-6);
    }

    #[test]
    fn wigner_map_nonnegative_and_normalized() {
        let state = DrivingState::Fock { n: 1 };
        let out = QuadratureGrid::new(Complex64::new(0.0, 0.0), 6.0, 64).unwrap();
        let m = wigner_map(&state, |b| b, &state.default_grid(), &out);
        assert!(m.min_w >= -1e-12, "min W = {:e}", m.min_w);
        assert!((m.integral - 1.0).abs() < 1e-6, "integral {}", m.integral);
        assert!(!m.coverage_warning);
    }
}
