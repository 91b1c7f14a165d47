//! Gauss-Legendre rules on [0, 1] and their tensor products over the unit cube.

use crate::error::{MableError, Result};

/// Default number of nodes per axis used for normalization and divergence checks.
pub const DEFAULT_NODES: usize = 64;

/// A Gauss-Legendre rule mapped onto [0, 1].
///
/// An `n`-node rule integrates polynomials of degree up to `2n - 1` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(MableError::InvalidConfig(
                "quadrature needs at least one node".into(),
            ));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        // Roots are symmetric about 0; solve for the upper half by Newton.
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut deriv = 0.0;
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                deriv = dp;
                let dx = p / dp;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    let (_, dp) = legendre_with_derivative(n, x);
                    deriv = dp;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
            // Map [-1, 1] -> [0, 1], ascending order.
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Ok(Self { nodes, weights })
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

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
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
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Tensor-product Gauss-Legendre rule over `[0, 1]^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorQuadrature {
    rule: GaussLegendre,
    dim: usize,
}

impl TensorQuadrature {
    pub fn new(nodes_per_axis: usize, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(MableError::InvalidConfig(
                "quadrature dimension must be at least 1".into(),
            ));
        }
        Ok(Self {
            rule: GaussLegendre::new(nodes_per_axis)?,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.rule.len()
    }

    pub fn rule(&self) -> &GaussLegendre {
        &self.rule
    }

    /// Visits every node in lexicographic order (last axis fastest) with its
    /// product weight.
    pub fn try_for_each_node<E, F>(&self, mut visit: F) -> std::result::Result<(), E>
    where
        F: FnMut(&[f64], f64) -> std::result::Result<(), E>,
    {
        let n = self.rule.len();
        let mut idx = vec![0usize; self.dim];
        let mut point = vec![self.rule.nodes[0]; self.dim];
        loop {
            let w: f64 = idx.iter().map(|&i| self.rule.weights[i]).product();
            visit(&point, w)?;
            // odometer increment
            let mut axis = self.dim;
            loop {
                if axis == 0 {
                    return Ok(());
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < n {
                    point[axis] = self.rule.nodes[idx[axis]];
                    break;
                }
                idx[axis] = 0;
                point[axis] = self.rule.nodes[0];
            }
        }
    }

    /// Integral of `f` over the unit cube.
    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        let mut total = 0.0;
        let _ = self.try_for_each_node::<(), _>(|x, w| {
            total += w * f(x);
            Ok(())
        });
        total
    }

    /// Integral of a fallible integrand; the first error aborts the sweep.
    pub fn try_integrate<E, F>(&self, mut f: F) -> std::result::Result<f64, E>
    where
        F: FnMut(&[f64]) -> std::result::Result<f64, E>,
    {
        let mut total = 0.0;
        self.try_for_each_node(|x, w| {
            total += w * f(x)?;
            Ok(())
        })?;
        Ok(total)
    }
}
