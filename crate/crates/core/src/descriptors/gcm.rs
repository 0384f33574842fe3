//! Graphlet Correlation Matrix and the distance between two of them.

use crate::graph::Graph;
use crate::scalar::{count, real, Scalar};

use super::orbits::orbit_counts;

/// 11x11 Spearman correlation matrix of the reduced orbit columns.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphletCorrelationMatrix<S> {
    m: [[S; 11]; 11],
}

impl<S: Scalar> GraphletCorrelationMatrix<S> {
    pub fn get(&self, i: usize, j: usize) -> S {
        self.m[i][j]
    }

    /// Strictly upper-triangular entries, row-major (55 values).
    pub fn upper_triangle(&self) -> Vec<S> {
        let mut out = Vec::with_capacity(55);
        for i in 0..11 {
            for j in i + 1..11 {
                out.push(self.m[i][j]);
            }
        }
        out
    }

    /// Rebuild a matrix from its 55 upper-triangular entries.
    pub fn from_upper_triangle(upper: &[S]) -> Option<Self> {
        if upper.len() != 55 {
            return None;
        }
        let mut m = [[S::one(); 11]; 11];
        let mut it = upper.iter();
        for i in 0..11 {
            for j in i + 1..11 {
                let v = *it.next()?;
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        Some(GraphletCorrelationMatrix { m })
    }
}

/// Average ranks (1-based) with ties sharing the mean rank of their run.
fn average_ranks<S: Scalar>(values: &[u64]) -> Vec<S> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by_key(|&i| values[i]);
    let mut ranks = vec![S::zero(); values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && values[order[end + 1]] == values[order[start]] {
            end += 1;
        }
        // Mean of the 1-based ranks start+1 ..= end+1.
        let mean = real::<S>((start + end) as f64 / 2.0 + 1.0);
        for &idx in &order[start..=end] {
            ranks[idx] = mean;
        }
        start = end + 1;
    }
    ranks
}

/// Pearson correlation of two rank vectors. A zero-variance rank vector can
/// only come from an all-equal column; such a column correlates 1 with an
/// identically ranked column and 0 with anything else.
fn rank_correlation<S: Scalar>(x: &[S], y: &[S]) -> S {
    let n = count::<S>(x.len());
    let mean_x = x.iter().copied().sum::<S>() / n;
    let mean_y = y.iter().copied().sum::<S>() / n;
    let mut cov = S::zero();
    let mut var_x = S::zero();
    let mut var_y = S::zero();
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == S::zero() || var_y == S::zero() {
        return if x == y { S::one() } else { S::zero() };
    }
    cov / (var_x * var_y).sqrt()
}

/// Graphlet Correlation Matrix: Spearman correlations between the reduced
/// orbit columns after appending one synthetic all-ones row.
pub fn gcm<S: Scalar>(g: &Graph) -> GraphletCorrelationMatrix<S> {
    let reduced = orbit_counts(g).reduced();
    let rows = reduced.len() + 1;
    let mut ranked: Vec<Vec<S>> = Vec::with_capacity(11);
    for col in 0..11 {
        let mut column: Vec<u64> = Vec::with_capacity(rows);
        column.extend(reduced.iter().map(|row| row[col]));
        column.push(1);
        ranked.push(average_ranks(&column));
    }
    let mut m = [[S::one(); 11]; 11];
    for i in 0..11 {
        for j in i + 1..11 {
            let c = rank_correlation(&ranked[i], &ranked[j]);
            m[i][j] = c;
            m[j][i] = c;
        }
    }
    GraphletCorrelationMatrix { m }
}

/// Euclidean norm over the 55 strictly-upper-triangular entry differences.
pub fn gcd_distance<S: Scalar>(
    a: &GraphletCorrelationMatrix<S>,
    b: &GraphletCorrelationMatrix<S>,
) -> S {
    let mut sum = S::zero();
    for i in 0..11 {
        for j in i + 1..11 {
            let d = a.m[i][j] - b.m[i][j];
            sum += d * d;
        }
    }
    sum.sqrt()
}
