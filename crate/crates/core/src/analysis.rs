//! Structural characteristics of graph sets and the diversity report tables.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::descriptors::{self, Descriptor, DescriptorError, DescriptorKind};
use crate::diversity::{DiversityError, MeasureConfig, PairwiseDistances};
use crate::graph::Graph;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
    #[error(transparent)]
    Diversity(#[from] DiversityError),
}

/// Per-graph structural characteristics (the scatter-plot axes).
#[derive(Clone, Debug, PartialEq)]
pub struct CharacteristicRow {
    pub id: usize,
    pub avg_degree: f64,
    pub avg_clustering: f64,
    pub gini: f64,
    pub efficiency: f64,
    pub edges: usize,
    pub components: usize,
}

/// Compute the characteristics of one graph.
///
/// Conventions: local clustering of a node with degree < 2 is 0 and still
/// enters the mean; the degree Gini is 0 for an edgeless graph; global
/// efficiency averages 1/hop-distance over ordered distinct pairs with 0 for
/// unreachable pairs.
pub fn characteristics(id: usize, g: &Graph) -> CharacteristicRow {
    let n = g.node_count();
    let degrees: Vec<usize> = (0..n).map(|u| g.degree(u)).collect();
    let degree_sum: usize = degrees.iter().sum();
    let avg_degree = degree_sum as f64 / n as f64;

    let avg_clustering = (0..n)
        .map(|u| {
            let d = degrees[u];
            if d < 2 {
                0.0
            } else {
                2.0 * g.triangles_at(u) as f64 / (d * (d - 1)) as f64
            }
        })
        .sum::<f64>()
        / n as f64;

    let gini = if degree_sum == 0 {
        0.0
    } else {
        let mut abs_diffs = 0.0;
        for &di in &degrees {
            for &dj in &degrees {
                abs_diffs += (di as f64 - dj as f64).abs();
            }
        }
        abs_diffs / (2.0 * n as f64 * degree_sum as f64)
    };

    let efficiency = if n < 2 {
        0.0
    } else {
        let dist = g.bfs_all_pairs();
        let mut total = 0.0;
        for u in 0..n {
            for v in 0..n {
                if u != v {
                    if let Some(d) = dist.get(u, v) {
                        total += 1.0 / d as f64;
                    }
                }
            }
        }
        total / (n * (n - 1)) as f64
    };

    CharacteristicRow {
        id,
        avg_degree,
        avg_clustering,
        gini,
        efficiency,
        edges: g.edge_count(),
        components: g.component_sizes().len(),
    }
}

pub const CSV_HEADER: &str = "id,avg_degree,avg_clustering,gini,efficiency,edges,components";

/// One characteristics row per graph as CSV (6-decimal fixed format).
pub fn export_table(graphs: &[Graph]) -> String {
    let rows: Vec<CharacteristicRow> = graphs
        .par_iter()
        .enumerate()
        .map(|(id, g)| characteristics(id, g))
        .collect();
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{},{}\n",
            r.id, r.avg_degree, r.avg_clustering, r.gini, r.efficiency, r.edges, r.components
        ));
    }
    out
}

/// Energy penalty, average pairwise distance, and bottleneck distance of one
/// graph set under one descriptor kind.
#[derive(Clone, Debug)]
pub struct DiversityColumn<S> {
    pub kind: DescriptorKind,
    pub energy_penalty: S,
    pub average_distance: S,
    pub bottleneck: S,
}

/// Diversity report over a graph set, one column per descriptor kind,
/// formatted like the experiment tables.
#[derive(Clone, Debug)]
pub struct DiversityReport<S> {
    pub columns: Vec<DiversityColumn<S>>,
}

impl<S: Scalar> fmt::Display for DiversityReport<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<16}", "measure")?;
        for c in &self.columns {
            write!(f, " {:>14}", c.kind.table_label())?;
        }
        writeln!(f)?;
        let rows: [(&str, fn(&DiversityColumn<S>) -> S); 3] = [
            ("energy_penalty", |c| c.energy_penalty),
            ("avg_distance", |c| c.average_distance),
            ("bottleneck", |c| c.bottleneck),
        ];
        for (label, pick) in rows {
            write!(f, "{label:<16}")?;
            for c in &self.columns {
                write!(f, " {:>14.6}", pick(c).to_f64().unwrap_or(f64::NAN))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Pairwise distance matrix of a graph set under one descriptor kind.
pub fn distance_matrix<S: Scalar>(
    graphs: &[Graph],
    kind: DescriptorKind,
) -> Result<PairwiseDistances<S>, AnalysisError> {
    let descriptors: Vec<Descriptor<S>> = graphs
        .par_iter()
        .map(|g| descriptors::compute(kind, g))
        .collect::<Result<_, _>>()?;
    let n = graphs.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let values: Vec<S> = pairs
        .par_iter()
        .map(|&(i, j)| {
            descriptors[i]
                .distance(&descriptors[j])
                .expect("descriptors share a kind")
        })
        .collect();
    let mut dist = PairwiseDistances::zeros(n);
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        dist.set(i, j, v);
    }
    Ok(dist)
}

/// Diversity report over the given kinds.
pub fn report_diversity<S: Scalar>(
    graphs: &[Graph],
    kinds: &[DescriptorKind],
    cfg: &MeasureConfig<S>,
) -> Result<DiversityReport<S>, AnalysisError> {
    let mut columns = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let dist = distance_matrix::<S>(graphs, kind)?;
        columns.push(DiversityColumn {
            kind,
            energy_penalty: dist.energy_penalty(cfg.epsilon)?,
            average_distance: dist.average()?,
            bottleneck: dist.bottleneck()?,
        });
    }
    Ok(DiversityReport { columns })
}
