use serde::{Deserialize, Serialize};

use super::StatsError;

/// Counts over `[e0, e1), [e1, e2), …` with explicit under- and overflow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram1D {
    edges: Vec<f64>,
    counts: Vec<u64>,
    underflow: u64,
    overflow: u64,
}

impl Histogram1D {
    pub fn new(edges: Vec<f64>) -> Result<Self, StatsError> {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(StatsError::Edges(format!("{edges:?}")));
        }
        let n = edges.len() - 1;
        Ok(Histogram1D {
            edges,
            counts: vec![0; n],
            underflow: 0,
            overflow: 0,
        })
    }

    /// `n` equal bins over `[lo, hi)`.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self, StatsError> {
        let w = (hi - lo) / n as f64;
        Histogram1D::new((0..=n).map(|i| lo + w * i as f64).collect())
    }

    pub fn bin_index(&self, x: f64) -> Option<usize> {
        if x < self.edges[0] || x >= *self.edges.last().unwrap() || x.is_nan() {
            return None;
        }
        Some(self.edges.partition_point(|&e| e <= x) - 1)
    }

    pub fn add(&mut self, x: f64) {
        self.add_n(x, 1);
    }

    pub fn add_n(&mut self, x: f64, n: u64) {
        match self.bin_index(x) {
            Some(i) => self.counts[i] += n,
            None if x < self.edges[0] => self.underflow += n,
            None => self.overflow += n,
        }
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn underflow(&self) -> u64 {
        self.underflow
    }

    pub fn overflow(&self) -> u64 {
        self.overflow
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    pub fn merge(&mut self, other: &Histogram1D) -> Result<(), StatsError> {
        if self.edges != other.edges {
            return Err(StatsError::Mismatch("histogram edges"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
        Ok(())
    }
}

/// Row-major 2-D counts; anything outside either axis lands in `outside`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram2D {
    x: Histogram1D,
    y: Histogram1D,
    counts: Vec<u64>,
    outside: u64,
}

impl Histogram2D {
    pub fn new(x_edges: Vec<f64>, y_edges: Vec<f64>) -> Result<Self, StatsError> {
        let x = Histogram1D::new(x_edges)?;
        let y = Histogram1D::new(y_edges)?;
        let n = x.counts.len() * y.counts.len();
        Ok(Histogram2D {
            x,
            y,
            counts: vec![0; n],
            outside: 0,
        })
    }

    pub fn add(&mut self, x: f64, y: f64) {
        match (self.x.bin_index(x), self.y.bin_index(y)) {
            (Some(i), Some(j)) => self.counts[i * self.y.counts.len() + j] += 1,
            _ => self.outside += 1,
        }
    }

    pub fn x_edges(&self) -> &[f64] {
        self.x.edges()
    }

    pub fn y_edges(&self) -> &[f64] {
        self.y.edges()
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.y.counts.len() + j]
    }

    pub fn outside(&self) -> u64 {
        self.outside
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.outside
    }

    pub fn merge(&mut self, other: &Histogram2D) -> Result<(), StatsError> {
        if self.x.edges != other.x.edges || self.y.edges != other.y.edges {
            return Err(StatsError::Mismatch("2-D histogram edges"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.outside += other.outside;
        Ok(())
    }
}
