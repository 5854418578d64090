//! Gauss–Legendre rules, composite panels and a fixed-tree summation.

use std::f64::consts::PI;

use num_complex::Complex64;

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `n`-point rule by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = (n + 1) / 2;
        for i in 0..half {
            // Tricomi initial guess
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
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
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let vals: Vec<f64> = self.mapped(a, b).map(|(x, w)| w * f(x)).collect();
        pairwise_sum(&vals)
    }

    pub fn integrate_complex<F: FnMut(f64) -> Complex64>(&self, a: f64, b: f64, mut f: F) -> Complex64 {
        let vals: Vec<Complex64> = self.mapped(a, b).map(|(x, w)| f(x) * w).collect();
        pairwise_sum_complex(&vals)
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
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

/// Panel boundaries splitting `[a, b]` into equal panels no wider than `max_width`.
pub fn panel_edges(a: f64, b: f64, max_width: f64) -> Vec<f64> {
    let len = b - a;
    if len <= 0.0 {
        return vec![a, a.max(b)];
    }
    let n = ((len / max_width).ceil() as usize).max(1);
    (0..=n).map(|i| a + len * i as f64 / n as f64).collect()
}

/// Composite Gauss–Legendre nodes and weights on `[a, b]`.
pub fn composite_nodes(rule: &GaussLegendre, a: f64, b: f64, max_width: f64) -> Vec<(f64, f64)> {
    let edges = panel_edges(a, b, max_width);
    edges
        .windows(2)
        .flat_map(|w| rule.mapped(w[0], w[1]).collect::<Vec<_>>())
        .collect()
}

/// Panel edges on `[0, b]` refined geometrically towards 0, then uniform.
///
/// Used for integrands with a power-law endpoint behaviour at the origin.
pub fn graded_edges(b: f64, max_width: f64, levels: usize) -> Vec<f64> {
    let first = max_width.min(b);
    let mut edges = Vec::with_capacity(levels + 16);
    edges.push(0.0);
    for l in (1..=levels).rev() {
        edges.push(first * 0.5f64.powi(l as i32));
    }
    edges.extend(panel_edges(first, b, max_width));
    edges.dedup_by(|a, b| (*a - *b).abs() == 0.0);
    edges
}

/// Sum in a fixed binary tree so the result does not depend on how the
/// slice was produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => {
            let (l, r) = xs.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

pub fn pairwise_sum_complex(xs: &[Complex64]) -> Complex64 {
    match xs.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => {
            let (l, r) = xs.split_at(n / 2);
            pairwise_sum_complex(l) + pairwise_sum_complex(r)
        }
    }
}

/// Cubic Hermite interpolation on a uniform grid with known derivatives.
pub(crate) fn hermite<T>(y0: T, d0: T, y1: T, d1: T, h: f64, u: f64) -> T
where
    T: std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + Copy,
{
    let u2 = u * u;
    let u3 = u2 * u;
    let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    let h10 = u3 - 2.0 * u2 + u;
    let h01 = -2.0 * u3 + 3.0 * u2;
    let h11 = u3 - u2;
    y0 * h00 + d0 * (h10 * h) + y1 * h01 + d1 * (h11 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weights_sum_to_two() {
        for n in 1..=20 {
            let gl = GaussLegendre::new(n);
            let s: f64 = gl.weights().iter().sum();
            assert_relative_eq!(s, 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_2n_minus_1() {
        let gl = GaussLegendre::new(8);
        for k in 0..16 {
            let v = gl.integrate(0.0, 1.0, |x| x.powi(k));
            assert_relative_eq!(v, 1.0 / (k as f64 + 1.0), epsilon = 1e-14);
        }
    }

    #[test]
    fn composite_oscillatory() {
        let gl = GaussLegendre::new(8);
        let nodes = composite_nodes(&gl, 0.0, 10.0, 0.25);
        let v: f64 = nodes.iter().map(|&(x, w)| w * (7.0 * x).cos()).sum();
        assert_relative_eq!(v, (70.0f64).sin() / 7.0, epsilon = 1e-13);
    }

    #[test]
    fn graded_edges_handle_sqrt_singularity() {
        let gl = GaussLegendre::new(8);
        let edges = graded_edges(1.0, 0.25, 30);
        let v: f64 = edges.windows(2).map(|w| gl.integrate(w[0], w[1], f64::sqrt)).sum();
        assert_relative_eq!(v, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let f = |x: f64| 1.0 + 2.0 * x - x * x + 0.5 * x * x * x;
        let df = |x: f64| 2.0 - 2.0 * x + 1.5 * x * x;
        let (a, h) = (0.3, 0.2);
        for &u in &[0.0, 0.25, 0.5, 0.9, 1.0] {
            let v = hermite(f(a), df(a), f(a + h), df(a + h), h, u);
            assert_relative_eq!(v, f(a + u * h), epsilon = 1e-14);
        }
    }
}
