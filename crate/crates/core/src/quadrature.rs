//! Gauss–Legendre rules and the Poisson-kernel quadrature built on them.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

// Unused only when std is linked into the build (tests).
#[allow(unused_imports)]
use num_traits::Float;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` from the Chebyshev-like initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be >= 1");
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// `∫_a^b f(x) dx`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Settings for kernel-weighted integrals over the real line.
///
/// The substitution `ω = ω0 + σ0 tan φ` turns the Poisson measure into
/// `dφ/π` on `(−π/2, π/2)`. The φ-interval is split at the images of
/// `ω − ω0 = ±σ0·10^k`, `k = −decades..=decades`, and each panel gets a
/// fixed-order Gauss–Legendre rule, so features at any frequency scale
/// within that range are resolved equally well.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureConfig {
    pub nodes_per_panel: usize,
    pub decades: u32,
}

impl Default for QuadratureConfig {
    /// 28 panels of 20 nodes.
    fn default() -> Self {
        QuadratureConfig {
            nodes_per_panel: 20,
            decades: 6,
        }
    }
}

impl QuadratureConfig {
    pub fn total_nodes(&self) -> usize {
        self.panel_breaks().len().saturating_sub(1) * self.nodes_per_panel
    }

    /// Panel boundaries in φ, ascending, from `−π/2` to `π/2`.
    pub fn panel_breaks(&self) -> Vec<f64> {
        let k = self.decades as i32;
        let mut pos: Vec<f64> = (-k..=k).map(|e| 10f64.powi(e).atan()).collect();
        pos.dedup();
        let mut breaks = Vec::with_capacity(2 * pos.len() + 3);
        breaks.push(-FRAC_PI_2);
        breaks.extend(pos.iter().rev().map(|&b| -b));
        breaks.push(0.0);
        breaks.extend(pos.iter().copied());
        breaks.push(FRAC_PI_2);
        breaks
    }

    /// Quadrature points `(φ, weight)` with the weights summing to `π`.
    pub fn phi_rule(&self) -> Vec<(f64, f64)> {
        let gl = GaussLegendre::new(self.nodes_per_panel.max(1));
        let breaks = self.panel_breaks();
        let mut out = Vec::with_capacity(self.total_nodes());
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (&x, &w) in gl.nodes.iter().zip(&gl.weights) {
                out.push((mid + half * x, w * half));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn low_order_rules_match_tables() {
        let g2 = GaussLegendre::new(2);
        assert_relative_eq!(g2.nodes[1], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(g2.weights[0], 1.0, epsilon = 1e-15);
        let g3 = GaussLegendre::new(3);
        assert_relative_eq!(g3.nodes[2], (0.6f64).sqrt(), epsilon = 1e-15);
        assert_eq!(g3.nodes[1], 0.0);
        assert_relative_eq!(g3.weights[1], 8.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(g3.weights[0], 5.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn exact_for_degree_2n_minus_1() {
        for n in [1usize, 4, 20, 64, 512] {
            let g = GaussLegendre::new(n);
            let sum: f64 = g.weights.iter().sum();
            assert_relative_eq!(sum, 2.0, epsilon = 1e-12);
            let deg = 2 * n - 1;
            let got = g.integrate(0.0, 1.0, |x| x.powi(deg as i32));
            assert_relative_eq!(got, 1.0 / (deg as f64 + 1.0), max_relative = 1e-12);
        }
    }

    #[test]
    fn smooth_transcendental_integral() {
        let g = GaussLegendre::new(30);
        assert_relative_eq!(g.integrate(0.0, PI, |x| x.sin()), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn phi_rule_spans_half_period() {
        let cfg = QuadratureConfig::default();
        let rule = cfg.phi_rule();
        assert_eq!(rule.len(), cfg.total_nodes());
        assert_eq!(rule.len(), 560);
        let mass: f64 = rule.iter().map(|&(_, w)| w).sum();
        assert_relative_eq!(mass, PI, epsilon = 1e-13);
        assert!(rule.windows(2).all(|w| w[0].0 < w[1].0));
    }
}
