//! Driving-field state descriptions, their Husimi functions, exact moment
//! formulas, and numerical integration against the Husimi weight over the
//! complex phase plane.
//!
//! The diagonal coherent-state mixture replaces a field state by its Husimi
//! distribution over coherent amplitudes; every expectation value then
//! becomes an integral of the coherently driven result against that weight.
//! This module provides both sides: exact closed-form moments per state
//! family, and the phase-plane quadrature that evaluates the mixture.

use crate::error::{Error, Result};
use crate::quadrature::QuadratureGrid;
use crate::specfun::ln_factorial;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Mass of the Husimi weight allowed to fall outside the grid window before
/// a coverage warning is raised.
pub const COVERAGE_TOLERANCE: f64 = 1e-10;

/// Quantum state of the single driving-laser mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DrivingState {
    Coherent { alpha: Complex64 },
    Fock { n: u32 },
    SqueezedVacuum { r: f64, phi_s: f64 },
    DisplacedSqueezed { alpha: Complex64, r: f64, phi_s: f64 },
    Thermal { nbar: f64 },
}

/// Normally ordered moment set of one photonic mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldMoments {
    /// <a>
    pub a: Complex64,
    /// <a^2>
    pub a2: Complex64,
    /// <a^dag a>
    pub n: f64,
    /// <a^dag^2 a^2>
    pub n2_normal: f64,
}

impl FieldMoments {
    pub fn validate(&self) -> Result<()> {
        if self.n < 0.0 || self.n2_normal < 0.0 {
            return Err(Error::InconsistentMoments(format!(
                "negative photon-number moment: n = {}, n2 = {}",
                self.n, self.n2_normal
            )));
        }
        if self.a.norm_sqr() > self.n + 1e-9 {
            return Err(Error::InconsistentMoments(format!(
                "|<a>|^2 = {} exceeds <a^dag a> = {}",
                self.a.norm_sqr(),
                self.n
            )));
        }
        Ok(())
    }
}

/// Result of a phase-plane quadrature together with its coverage diagnostic.
#[derive(Debug, Clone, Copy)]
pub struct Quad<T> {
    pub value: T,
    /// |1 - integral of the Husimi weight over the window|.
    pub coverage_defect: f64,
    pub coverage_warning: bool,
}

/// The four mixture moments of a mapped output amplitude, evaluated in one
/// pass over the grid.
#[derive(Debug, Clone, Copy)]
pub struct MappedMoments {
    pub moments: FieldMoments,
    pub norm: f64,
    pub coverage_defect: f64,
    pub coverage_warning: bool,
}

impl DrivingState {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DrivingState::Coherent { alpha } => alpha.re.is_finite() && alpha.im.is_finite(),
            DrivingState::Fock { .. } => true,
            DrivingState::SqueezedVacuum { r, phi_s } => r >= 0.0 && r.is_finite() && phi_s.is_finite(),
            DrivingState::DisplacedSqueezed { alpha, r, phi_s } => {
                alpha.re.is_finite() && alpha.im.is_finite() && r >= 0.0 && r.is_finite() && phi_s.is_finite()
            }
            DrivingState::Thermal { nbar } => nbar >= 0.0 && nbar.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain("DrivingState", format!("invalid parameters: {self:?}")))
        }
    }

    /// Husimi function Q(beta) = <beta| rho |beta> / pi, nonnegative and
    /// normalized to unit integral over the plane.
    pub fn husimi(&self, beta: Complex64) -> f64 {
        match *self {
            DrivingState::Coherent { alpha } => (-(beta - alpha).norm_sqr()).exp() / PI,
            DrivingState::Fock { n } => {
                let b2 = beta.norm_sqr();
                if n == 0 {
                    return (-b2).exp() / PI;
                }
                if b2 == 0.0 {
                    return 0.0;
                }
                // log-domain: |beta|^{2n} e^{-|beta|^2} / (pi n!) overflows
                // term-by-term already around n ~ 170.
                (n as f64 * b2.ln() - b2 - ln_factorial(n as usize) - PI.ln()).exp()
            }
            DrivingState::SqueezedVacuum { r, phi_s } => squeezed_husimi(beta, r, phi_s),
            DrivingState::DisplacedSqueezed { alpha, r, phi_s } => squeezed_husimi(beta - alpha, r, phi_s),
            DrivingState::Thermal { nbar } => {
                let w = nbar + 1.0;
                (-beta.norm_sqr() / w).exp() / (PI * w)
            }
        }
    }

    /// Exact normally ordered moments from the closed forms of each family.
    ///
    /// Squeezed families use the convention <a^2> = alpha^2 - e^{i phi_s}
    /// sinh(r) cosh(r); the Husimi function above follows the same
    /// convention, which the quadrature tests pin down.
    pub fn exact_moments(&self) -> FieldMoments {
        match *self {
            DrivingState::Coherent { alpha } => FieldMoments {
                a: alpha,
                a2: alpha * alpha,
                n: alpha.norm_sqr(),
                n2_normal: alpha.norm_sqr().powi(2),
            },
            DrivingState::Fock { n } => FieldMoments {
                a: Complex64::new(0.0, 0.0),
                a2: Complex64::new(0.0, 0.0),
                n: n as f64,
                n2_normal: n as f64 * (n as f64 - 1.0),
            },
            DrivingState::SqueezedVacuum { r, phi_s } => {
                gaussian_moments(Complex64::new(0.0, 0.0), r, phi_s, 0.0)
            }
            DrivingState::DisplacedSqueezed { alpha, r, phi_s } => gaussian_moments(alpha, r, phi_s, 0.0),
            DrivingState::Thermal { nbar } => gaussian_moments(Complex64::new(0.0, 0.0), 0.0, 0.0, nbar),
        }
    }

    /// A window that keeps the Husimi tail mass below ~1e-13 and enough nodes
    /// to resolve the narrowest feature.
    pub fn default_grid(&self) -> QuadratureGrid {
        let sigma_vac = std::f64::consts::FRAC_1_SQRT_2;
        let (center, half_width) = match *self {
            DrivingState::Coherent { alpha } => (alpha, 8.0 * sigma_vac),
            DrivingState::Fock { n } => (
                Complex64::new(0.0, 0.0),
                ((n as f64) + 1.0).sqrt() + 8.0 * sigma_vac,
            ),
            DrivingState::SqueezedVacuum { r, .. } => {
                (Complex64::new(0.0, 0.0), 8.0 * r.exp() * sigma_vac)
            }
            DrivingState::DisplacedSqueezed { alpha, r, .. } => (alpha, 8.0 * r.exp() * sigma_vac),
            DrivingState::Thermal { nbar } => {
                (Complex64::new(0.0, 0.0), 8.0 * ((nbar + 1.0) / 2.0).sqrt())
            }
        };
        let nodes = 120.max((10.0 * half_width).ceil() as usize);
        QuadratureGrid {
            center,
            half_width,
            nodes_per_axis: nodes,
        }
    }
}

fn squeezed_husimi(d: Complex64, r: f64, phi_s: f64) -> f64 {
    // |<beta|S(r e^{i phi_s})|0>|^2 / pi with d the offset from the center.
    let t = r.tanh();
    let phase = Complex64::from_polar(t, phi_s);
    let expo = -d.norm_sqr() - (phase * d.conj() * d.conj()).re;
    expo.exp() / (PI * r.cosh())
}

fn gaussian_moments(alpha: Complex64, r: f64, phi_s: f64, nbar: f64) -> FieldMoments {
    // Zero-mean Gaussian fluctuation d with <d^dag d> = ns, <d^2> = m,
    // displaced by alpha; Wick contraction gives the fourth moment.
    let ns = r.sinh().powi(2) + nbar;
    let m = -Complex64::from_polar(r.sinh() * r.cosh(), phi_s);
    let n = alpha.norm_sqr() + ns;
    let a2 = alpha * alpha + m;
    let n2 = alpha.norm_sqr().powi(2)
        + 2.0 * (alpha.conj() * alpha.conj() * m).re
        + 4.0 * alpha.norm_sqr() * ns
        + 2.0 * ns * ns
        + m.norm_sqr();
    FieldMoments {
        a: alpha,
        a2,
        n,
        n2_normal: n2,
    }
}

/// Integral of Q(beta) f(beta) over the grid window by tensor-product
/// Gauss-Legendre quadrature. The coverage defect |1 - integral Q| is
/// evaluated with the same rule and reported alongside.
pub fn integrate_q<F>(state: &DrivingState, f: F, grid: &QuadratureGrid) -> Quad<Complex64>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let (xs, wx) = grid.axis(grid.center.re);
    let (ys, wy) = grid.axis(grid.center.im);
    // Row-parallel with an ordered reduction so the result is deterministic.
    let rows: Vec<(Complex64, f64)> = xs
        .par_iter()
        .zip(wx.par_iter())
        .map(|(&x, &wi)| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut mass = 0.0;
            for (&y, &wj) in ys.iter().zip(wy.iter()) {
                let beta = Complex64::new(x, y);
                let q = state.husimi(beta) * wi * wj;
                if q != 0.0 {
                    acc += q * f(beta);
                    mass += q;
                }
            }
            (acc, mass)
        })
        .collect();
    let value = rows.iter().map(|r| r.0).sum();
    let mass: f64 = rows.iter().map(|r| r.1).sum();
    let coverage_defect = (1.0 - mass).abs();
    Quad {
        value,
        coverage_defect,
        coverage_warning: coverage_defect > COVERAGE_TOLERANCE,
    }
}

/// All four mixture moments of a mapped amplitude gamma(beta) in a single
/// pass: integrals of Q times gamma, gamma^2, |gamma|^2 and |gamma|^4.
pub fn map_moments<F>(state: &DrivingState, map: F, grid: &QuadratureGrid) -> MappedMoments
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let (xs, wx) = grid.axis(grid.center.re);
    let (ys, wy) = grid.axis(grid.center.im);
    #[derive(Clone, Copy)]
    struct Acc {
        a: Complex64,
        a2: Complex64,
        n: f64,
        n2: f64,
        mass: f64,
    }
    let rows: Vec<Acc> = xs
        .par_iter()
        .zip(wx.par_iter())
        .map(|(&x, &wi)| {
            let mut acc = Acc {
                a: Complex64::new(0.0, 0.0),
                a2: Complex64::new(0.0, 0.0),
                n: 0.0,
                n2: 0.0,
                mass: 0.0,
            };
            for (&y, &wj) in ys.iter().zip(wy.iter()) {
                let beta = Complex64::new(x, y);
                let q = state.husimi(beta) * wi * wj;
                if q == 0.0 {
                    continue;
                }
                let g = map(beta);
                let g2 = g.norm_sqr();
                acc.a += q * g;
                acc.a2 += q * g * g;
                acc.n += q * g2;
                acc.n2 += q * g2 * g2;
                acc.mass += q;
            }
            acc
        })
        .collect();
    let mut a = Complex64::new(0.0, 0.0);
    let mut a2 = Complex64::new(0.0, 0.0);
    let mut n = 0.0;
    let mut n2 = 0.0;
    let mut mass = 0.0;
    for r in &rows {
        a += r.a;
        a2 += r.a2;
        n += r.n;
        n2 += r.n2;
        mass += r.mass;
    }
    let coverage_defect = (1.0 - mass).abs();
    MappedMoments {
        moments: FieldMoments {
            a,
            a2,
            n,
            n2_normal: n2,
        },
        norm: mass,
        coverage_defect,
        coverage_warning: coverage_defect > COVERAGE_TOLERANCE,
    }
}

/// Moments of the driving field itself under the diagonal mixture: the
/// identity map beta -> beta integrated against the Husimi weight.
///
/// Compared with [`DrivingState::exact_moments`], `n` carries a constant +1
/// offset and `n2_normal` equals the exact anti-normally ordered fourth
/// moment; `a` and `a2` are unchanged.
pub fn app_moments(state: &DrivingState, grid: &QuadratureGrid) -> MappedMoments {
    map_moments(state, |beta| beta, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn coherent_husimi_closed_form() {
        let alpha = c(1.3, -0.4);
        let state = DrivingState::Coherent { alpha };
        let beta = c(0.2, 0.9);
        let want = (-(beta - alpha).norm_sqr()).exp() / PI;
        assert_relative_eq!(state.husimi(beta), want, max_relative = 1e-14);
    }

    #[test]
    fn vacuum_equals_fock_zero() {
        let fock = DrivingState::Fock { n: 0 };
        let beta = c(0.7, -1.1);
        let want = (-beta.norm_sqr()).exp() / PI;
        assert_relative_eq!(fock.husimi(beta), want, max_relative = 1e-14);
    }

    #[test]
    fn fock_husimi_matches_overlap_oracle() {
        // (1/pi) |<beta|n>|^2 via the direct Fock overlap.
        for n in [1u32, 3, 12, 200] {
            let state = DrivingState::Fock { n };
            for &(re, im) in &[(0.5, 0.0), (1.0, 2.0), (3.5, -1.0), (10.0, 10.0)] {
                let beta = c(re, im);
                let b2 = beta.norm_sqr();
                let ln_overlap = n as f64 * b2.ln() - b2 - ln_factorial(n as usize);
                let want = ln_overlap.exp() / PI;
                assert_relative_eq!(state.husimi(beta), want, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn fock_husimi_large_n_is_finite() {
        let state = DrivingState::Fock { n: 400 };
        let beta = c(20.0, 0.0);
        let v = state.husimi(beta);
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn husimi_nonnegative_everywhere() {
        let states = [
            DrivingState::Coherent { alpha: c(2.0, 1.0) },
            DrivingState::Fock { n: 5 },
            DrivingState::SqueezedVacuum { r: 1.2, phi_s: 0.7 },
            DrivingState::DisplacedSqueezed {
                alpha: c(-1.0, 2.0),
                r: 0.8,
                phi_s: -1.1,
            },
            DrivingState::Thermal { nbar: 3.0 },
        ];
        // Deterministic low-discrepancy sweep of the plane.
        let mut x = 0.5_f64;
        let mut y = 0.25_f64;
        for _ in 0..10_000 {
            x = (x + 0.754877666) % 1.0;
            y = (y + 0.569840291) % 1.0;
            let beta = c((x - 0.5) * 12.0, (y - 0.5) * 12.0);
            for s in &states {
                let v = s.husimi(beta);
                assert!(v >= 0.0 && v.is_finite());
            }
        }
    }

    #[test]
    fn normalization_every_family() {
        let states = [
            DrivingState::Coherent { alpha: c(2.0, -1.5) },
            DrivingState::Fock { n: 7 },
            DrivingState::SqueezedVacuum { r: 1.0, phi_s: 0.3 },
            DrivingState::DisplacedSqueezed {
                alpha: c(1.0, 1.0),
                r: 0.9,
                phi_s: 2.0,
            },
            DrivingState::Thermal { nbar: 2.5 },
        ];
        for s in &states {
            let grid = s.default_grid();
            let one = integrate_q(s, |_| c(1.0, 0.0), &grid);
            assert!(
                (one.value.re - 1.0).abs() < 1e-9 && one.value.im.abs() < 1e-12,
                "normalization of {s:?}: {:?}",
                one.value
            );
            assert!(!one.coverage_warning, "coverage warning for {s:?}");
        }
    }

    #[test]
    fn coherent_mean_is_alpha() {
        let alpha = c(1.7, 0.6);
        let state = DrivingState::Coherent { alpha };
        let grid = state.default_grid();
        let got = integrate_q(&state, |b| b, &grid).value;
        assert!((got - alpha).norm() < 1e-10);
    }

    #[test]
    fn fock_two_antinormal_number() {
        // integral Q_n |beta|^2 = n + 1
        let state = DrivingState::Fock { n: 2 };
        let grid = state.default_grid();
        let got = integrate_q(&state, |b| c(b.norm_sqr(), 0.0), &grid).value;
        assert!((got.re - 3.0).abs() < 1e-8);
    }

    #[test]
    fn coverage_warning_on_undersized_window() {
        let state = DrivingState::Coherent { alpha: c(4.0, 0.0) };
        let grid = QuadratureGrid::new(c(0.0, 0.0), 2.0, 60).unwrap();
        let out = integrate_q(&state, |_| c(1.0, 0.0), &grid);
        assert!(out.coverage_warning);
        assert!(out.coverage_defect > 1e-3);
    }

    #[test]
    fn app_offset_identities_all_families() {
        let states = [
            DrivingState::Coherent { alpha: c(1.2, -0.8) },
            DrivingState::Fock { n: 4 },
            DrivingState::SqueezedVacuum { r: 0.9, phi_s: 1.4 },
            DrivingState::DisplacedSqueezed {
                alpha: c(0.5, 1.5),
                r: 0.6,
                phi_s: -0.4,
            },
            DrivingState::Thermal { nbar: 1.7 },
        ];
        for s in &states {
            let exact = s.exact_moments();
            let app = app_moments(s, &s.default_grid());
            let m = app.moments;
            assert!((m.n - exact.n - 1.0).abs() < 1e-8, "n offset for {s:?}");
            assert!((m.a - exact.a).norm() < 1e-9, "a identity for {s:?}");
            assert!((m.a2 - exact.a2).norm() < 1e-8, "a2 identity for {s:?}");
            let antinormal = exact.n2_normal + 4.0 * exact.n + 2.0;
            assert!(
                (m.n2_normal - antinormal).abs() < 1e-6 * antinormal.max(1.0),
                "fourth moment for {s:?}: {} vs {}",
                m.n2_normal,
                antinormal
            );
        }
    }

    #[test]
    fn coherent_moments_vs_closed_form_s() {
        // integral Q(beta) |beta|^{2k} = e^{-|alpha|^2} S_{0,k}(|alpha|^2)
        use crate::specfun::s_func_finite;
        for &amag in &[0.5, 1.5, 3.0] {
            let alpha = Complex64::from_polar(amag, 0.77);
            let state = DrivingState::Coherent { alpha };
            let grid = state.default_grid();
            for k in 0..=6usize {
                let got = integrate_q(&state, |b| c(b.norm_sqr().powi(k as i32), 0.0), &grid)
                    .value
                    .re;
                let want = (-alpha.norm_sqr()).exp() * s_func_finite(0, k, alpha.norm_sqr()).unwrap();
                assert!(
                    (got - want).abs() < 1e-8 * want.max(1.0),
                    "k={k}, |alpha|={amag}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn moments_validate_catches_cauchy_schwarz() {
        let bad = FieldMoments {
            a: c(2.0, 0.0),
            a2: c(0.0, 0.0),
            n: 1.0,
            n2_normal: 1.0,
        };
        assert!(bad.validate().is_err());
    }
}
