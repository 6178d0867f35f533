//! Tensor-product Gauss-Legendre rules over a square window of the complex
//! phase plane.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::Mutex;
use std::sync::OnceLock;

/// A square integration window centered on a point of the phase plane.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureGrid {
    pub center: Complex64,
    pub half_width: f64,
    pub nodes_per_axis: usize,
}

impl QuadratureGrid {
    pub fn new(center: Complex64, half_width: f64, nodes_per_axis: usize) -> Result<Self> {
        let grid = QuadratureGrid {
            center,
            half_width,
            nodes_per_axis,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0) {
            return Err(Error::domain("QuadratureGrid", "half_width must be > 0"));
        }
        if self.nodes_per_axis < 2 {
            return Err(Error::domain("QuadratureGrid", "nodes_per_axis must be >= 2"));
        }
        if !self.center.re.is_finite() || !self.center.im.is_finite() {
            return Err(Error::domain("QuadratureGrid", "center must be finite"));
        }
        Ok(())
    }

    /// Nodes and weights along one axis, mapped onto
    /// [center - half_width, center + half_width].
    pub fn axis(&self, center: f64) -> (Vec<f64>, Vec<f64>) {
        let (x, w) = gauss_legendre(self.nodes_per_axis);
        let nodes = x.iter().map(|&t| center + self.half_width * t).collect();
        let weights = w.iter().map(|&wi| wi * self.half_width).collect();
        (nodes, weights)
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], cached per node count.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&n) {
        return hit.clone();
    }
    let rule = compute_gauss_legendre(n);
    cache.lock().unwrap().insert(n, rule.clone());
    rule
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Chebyshev-based initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0_f64;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [2usize, 5, 32, 121, 200] {
            let (_, w) = gauss_legendre(n);
            let total: f64 = w.iter().sum();
            assert_relative_eq!(total, 2.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn integrates_polynomials_exactly() {
        // Degree 2n-1 exactness: x^6 over [-1,1] with n = 4.
        let (x, w) = gauss_legendre(4);
        let got: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi.powi(6)).sum();
        assert_relative_eq!(got, 2.0 / 7.0, max_relative = 1e-13);
    }

    #[test]
    fn integrates_gaussian_accurately() {
        let grid = QuadratureGrid::new(Complex64::new(0.0, 0.0), 8.0, 80).unwrap();
        let (x, w) = grid.axis(0.0);
        let got: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * (-xi * xi).exp()).sum();
        assert_relative_eq!(got, std::f64::consts::PI.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn rejects_degenerate_grid() {
        assert!(QuadratureGrid::new(Complex64::new(0.0, 0.0), 0.0, 10).is_err());
        assert!(QuadratureGrid::new(Complex64::new(0.0, 0.0), 1.0, 1).is_err());
    }
}
