//! Composite Gauss–Legendre quadrature.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes increasing.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let Some(n) = NonZeroUsize::new(n) else { return (Vec::new(), Vec::new()) };
    let mut pairs = GaussLegendre::new(n).as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Composite rule: `panels` equal panels of an `order`-point Gauss rule.
#[derive(Clone, Debug)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeRule {
    pub fn new(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for k in 0..panels {
            let lo = a + k as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(lo + 0.5 * h * (xi + 1.0));
                weights.push(0.5 * h * wi);
            }
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }
}

/// Settings for adaptive composite quadrature over a period.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureConfig {
    /// Initial node count (panels × order).
    pub initial_nodes: usize,
    /// Points per panel.
    pub order: usize,
    /// Successive doublings must agree to this (absolute, scaled by `max(1, |I|)`).
    pub tolerance: f64,
    pub max_nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { initial_nodes: 64, order: 8, tolerance: 1e-9, max_nodes: 1 << 14 }
    }
}

impl QuadratureConfig {
    pub fn rule(&self, a: f64, b: f64, nodes: usize) -> CompositeRule {
        CompositeRule::new(a, b, (nodes / self.order).max(1), self.order)
    }

    /// Integrate a batch of integrands sharing node evaluations, doubling the
    /// node count until every component has converged. `f(t)` returns all
    /// integrand values at `t`.
    pub fn integrate_many<F>(&self, a: f64, b: f64, dims: usize, mut f: F) -> Vec<f64>
    where
        F: FnMut(f64) -> Vec<f64>,
    {
        let mut nodes = self.initial_nodes;
        let mut prev: Option<Vec<f64>> = None;
        loop {
            let rule = self.rule(a, b, nodes);
            let mut acc = vec![0.0; dims];
            for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                for (s, v) in acc.iter_mut().zip(f(t)) {
                    *s += w * v;
                }
            }
            if let Some(p) = &prev {
                let done = acc
                    .iter()
                    .zip(p)
                    .all(|(x, y)| (x - y).abs() <= self.tolerance * x.abs().max(1.0));
                if done || nodes * 2 > self.max_nodes {
                    return acc;
                }
            }
            prev = Some(acc);
            nodes *= 2;
        }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.integrate_many(a, b, 1, |t| vec![f(t)])[0]
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    #[test]
    fn gauss_rule_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        // degree 15 is integrated exactly
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((i - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_periodic_integral() {
        let q = QuadratureConfig::default();
        let v = q.integrate(0.0, 2.0 * PI, |t| (t.sin()).exp());
        // 2π I0(1)
        assert!((v - 2.0 * PI * 1.266_065_877_752_008_4).abs() < 1e-10);
    }
}
