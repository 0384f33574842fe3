//! Network portraits and the Jensen-Shannon divergence between them.

use std::collections::BTreeMap;

use crate::graph::Graph;
use crate::scalar::{real, Scalar};

/// Network portrait: `b[l][k]` counts nodes having exactly `k >= 1` nodes at
/// hop distance `l`, together with the joint distribution derived from it.
///
/// The `k = 0` bucket (nodes seeing nothing at distance `l`) is implicit in
/// the stored rows but participates in the distribution, which makes the
/// probabilities sum to exactly one.
#[derive(Clone, Debug, PartialEq)]
pub struct Portrait<S> {
    n: usize,
    /// Rows `l = 0..=max finite distance`; each maps `k >= 1` to `b[l][k]`.
    rows: Vec<BTreeMap<u32, u32>>,
    /// Sum of squared connected-component sizes (ordered reachable pairs,
    /// self-pairs included).
    component_pairs: u64,
    /// Joint distribution over `(l, k)`, `k = 0` bucket included.
    distribution: BTreeMap<(u32, u32), S>,
}

impl<S: Scalar> Portrait<S> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn component_pairs(&self) -> u64 {
        self.component_pairs
    }

    /// Stored (k >= 1) portrait entries as `(l, k, count)` triples.
    pub fn entries(&self) -> impl Iterator<Item = (u32, u32, u32)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(l, row)| row.iter().map(move |(&k, &b)| (l as u32, k, b)))
    }

    pub fn distribution(&self) -> &BTreeMap<(u32, u32), S> {
        &self.distribution
    }

    /// Rebuild a portrait from its stored entries (used when parsing cached
    /// descriptor records).
    pub fn from_entries(
        n: usize,
        component_pairs: u64,
        entries: impl IntoIterator<Item = (u32, u32, u32)>,
    ) -> Self {
        let mut rows: Vec<BTreeMap<u32, u32>> = Vec::new();
        for (l, k, b) in entries {
            let l = l as usize;
            if rows.len() <= l {
                rows.resize_with(l + 1, BTreeMap::new);
            }
            rows[l].insert(k, b);
        }
        let distribution = derive_distribution(n, component_pairs, &rows);
        Portrait {
            n,
            rows,
            component_pairs,
            distribution,
        }
    }
}

fn derive_distribution<S: Scalar>(
    n: usize,
    component_pairs: u64,
    rows: &[BTreeMap<u32, u32>],
) -> BTreeMap<(u32, u32), S> {
    let norm = real::<S>(n as f64) * real::<S>(component_pairs as f64);
    let mut dist = BTreeMap::new();
    for (l, row) in rows.iter().enumerate() {
        // W_l = number of ordered pairs at distance l.
        let pairs_at_l: u64 = row.iter().map(|(&k, &b)| k as u64 * b as u64).sum();
        if pairs_at_l == 0 {
            continue;
        }
        let weight = real::<S>(pairs_at_l as f64) / norm;
        let seen: u64 = row.values().map(|&b| b as u64).sum();
        let zero_bucket = n as u64 - seen;
        if zero_bucket > 0 {
            dist.insert((l as u32, 0), real::<S>(zero_bucket as f64) * weight);
        }
        for (&k, &b) in row {
            dist.insert((l as u32, k), real::<S>(b as f64) * weight);
        }
    }
    dist
}

/// Compute the portrait of a graph.
pub fn portrait<S: Scalar>(g: &Graph) -> Portrait<S> {
    let n = g.node_count();
    let component_pairs: u64 = g.component_sizes().iter().map(|&s| (s * s) as u64).sum();
    let mut rows: Vec<BTreeMap<u32, u32>> = Vec::new();
    let mut shell_counts: Vec<u32> = Vec::new();
    for source in 0..n {
        shell_counts.clear();
        for d in g.bfs_from(source).into_iter().flatten() {
            let d = d as usize;
            if shell_counts.len() <= d {
                shell_counts.resize(d + 1, 0);
            }
            shell_counts[d] += 1;
        }
        if rows.len() < shell_counts.len() {
            rows.resize_with(shell_counts.len(), BTreeMap::new);
        }
        for (l, &k) in shell_counts.iter().enumerate() {
            debug_assert!(k >= 1, "per-source distances are contiguous");
            *rows[l].entry(k).or_insert(0) += 1;
        }
    }
    let distribution = derive_distribution(n, component_pairs, &rows);
    Portrait {
        n,
        rows,
        component_pairs,
        distribution,
    }
}

/// Jensen-Shannon divergence (natural log) between the joint distributions
/// of two portraits; lies in `[0, ln 2]`.
///
/// The union support is walked in key order with both sides contributing per
/// key, so the result is bit-for-bit symmetric in its arguments.
pub fn portrait_divergence<S: Scalar>(a: &Portrait<S>, b: &Portrait<S>) -> S {
    let half = real::<S>(0.5);
    let zero = S::zero();
    let pa = a.distribution();
    let pb = b.distribution();
    let keys: std::collections::BTreeSet<(u32, u32)> =
        pa.keys().chain(pb.keys()).copied().collect();
    let mut div = S::zero();
    for key in keys {
        let p = pa.get(&key).copied().unwrap_or(zero);
        let q = pb.get(&key).copied().unwrap_or(zero);
        let m = half * (p + q);
        let p_term = if p > zero {
            half * p * (p / m).ln()
        } else {
            zero
        };
        let q_term = if q > zero {
            half * q * (q / m).ln()
        } else {
            zero
        };
        div += p_term + q_term;
    }
    div.max(S::zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total_mass(p: &Portrait<f64>) -> f64 {
        p.distribution().values().sum()
    }

    #[test]
    fn row_zero_is_all_self_pairs() {
        use crate::generators::{er_mix, Seed};
        for seed in 0..5 {
            let g = er_mix(12, Seed(seed)).unwrap();
            let p: Portrait<f64> = portrait(&g);
            let row0: Vec<(u32, u32, u32)> = p.entries().filter(|&(l, _, _)| l == 0).collect();
            assert_eq!(row0, vec![(0, 1, 12)]);
        }
    }

    #[test]
    fn distribution_sums_to_one() {
        use crate::generators::{er_mix, Seed};
        for seed in 0..10 {
            let g = er_mix(16, Seed(seed)).unwrap();
            let p: Portrait<f64> = portrait(&g);
            assert!((total_mass(&p) - 1.0).abs() < 1e-12);
        }
        let empty = Graph::empty(7).unwrap();
        assert!((total_mass(&portrait::<f64>(&empty)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pair_accounting_covers_all_ordered_pairs() {
        // Reachable ordered pairs (incl. self) plus unreachable ones is n^2.
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (3, 4)]).unwrap();
        let p: Portrait<f64> = portrait(&g);
        let reachable: u64 = p.entries().map(|(_, k, b)| k as u64 * b as u64).sum();
        assert_eq!(reachable, p.component_pairs());
        // Components of sizes 3, 2, 1 give 9 + 4 + 1 = 14 reachable ordered
        // pairs; the other 22 of the 36 are unreachable.
        assert_eq!(reachable, 14);
        assert_eq!(36 - reachable, 22);
    }

    #[test]
    fn star_portrait_shells() {
        // Star on 4 nodes: leaves see 1 node at distance 1 and 2 at distance
        // 2; the center sees 3 at distance 1 and nothing at distance 2.
        let g = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let p: Portrait<f64> = portrait(&g);
        let entries: Vec<_> = p.entries().collect();
        assert_eq!(entries, vec![(0, 1, 4), (1, 1, 3), (1, 3, 1), (2, 2, 3)]);
        // The center contributes to the implicit zero bucket of row 2.
        assert!(p.distribution().contains_key(&(2, 0)));
    }

    #[test]
    fn divergence_identity_symmetry_bounds() {
        use crate::generators::{er_mix, Seed};
        let a: Portrait<f64> = portrait(&er_mix(16, Seed(1)).unwrap());
        let b: Portrait<f64> = portrait(&er_mix(16, Seed(2)).unwrap());
        assert_eq!(portrait_divergence(&a, &a), 0.0);
        let d = portrait_divergence(&a, &b);
        assert!((portrait_divergence(&b, &a) - d).abs() < 1e-15);
        assert!((0.0..=std::f64::consts::LN_2 + 1e-12).contains(&d));

        let empty: Portrait<f64> = portrait(&Graph::empty(16).unwrap());
        let full: Portrait<f64> = portrait(&Graph::complete(16).unwrap());
        let d = portrait_divergence(&empty, &full);
        assert!(d > 0.0 && d <= std::f64::consts::LN_2);
    }

    #[test]
    fn from_entries_round_trip() {
        use crate::generators::{er_mix, Seed};
        let g = er_mix(10, Seed(9)).unwrap();
        let p: Portrait<f64> = portrait(&g);
        let rebuilt = Portrait::from_entries(p.n(), p.component_pairs(), p.entries());
        assert_eq!(p, rebuilt);
    }
}
