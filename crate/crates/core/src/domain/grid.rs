use std::ops::{Deref, DerefMut};

use crate::error::{invalid, Result};

/// Composite midpoint discretization of a habitat interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    lo: f64,
    hi: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// `x_i = lo + (i + 1/2) h`, `w_i = h`, with `h = (hi - lo) / n`.
    pub fn midpoint(n: usize, lo: f64, hi: f64) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("grid needs at least 2 nodes, got {n}")));
        }
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(invalid(format!("empty or invalid interval [{lo}, {hi}]")));
        }
        let h = (hi - lo) / n as f64;
        let nodes = (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect();
        Ok(Self {
            lo,
            hi,
            nodes,
            weights: vec![h; n],
        })
    }

    /// Single-node degenerate grid; used where the dispersal term vanishes
    /// and the block operator reduces to the local 2x2 matrix.
    pub fn single(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(invalid(format!("empty or invalid interval [{lo}, {hi}]")));
        }
        Ok(Self {
            lo,
            hi,
            nodes: vec![0.5 * (lo + hi)],
            weights: vec![hi - lo],
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// `|Ω|`
    pub fn measure(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Quadrature `Σ w_i f_i`.
    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.len() {
            return Err(invalid(format!(
                "field has {} values, grid has {} nodes",
                f.len(),
                self.len()
            )));
        }
        Ok(self.weights.iter().zip(f).map(|(w, v)| w * v).sum())
    }

    /// Spatial average `(1/|Ω|) ∫ f`.
    pub fn hat_average(&self, f: &[f64]) -> Result<f64> {
        Ok(self.integrate(f)? / self.measure())
    }

    /// Weighted `L²` norm.
    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(f)
            .map(|(w, v)| w * v * v)
            .sum::<f64>()
            .sqrt()
    }
}

/// Real values sampled at the nodes of a [`Grid`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Field(pub Vec<f64>);

impl Field {
    pub fn constant(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        Self(grid.nodes().iter().map(|&x| f(x)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.len(), other.len(), "field length mismatch");
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn add(&self, other: &Field) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn mul(&self, other: &Field) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    /// `max_i |self_i - other_i|`
    pub fn sup_distance(&self, other: &Field) -> f64 {
        self.zip_with(other, |a, b| (a - b).abs()).max().max(0.0)
    }

    /// Exact comparison used for checks such as `r ≢ 0`.
    pub fn is_identically_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }
}

impl Deref for Field {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Field {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Field {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}
