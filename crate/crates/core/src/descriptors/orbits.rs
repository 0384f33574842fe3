//! Graphlet orbit counting over connected induced subgraphs on 2-4 nodes.
//!
//! The 15 orbits follow the canonical numbering: 0 edge; 1/2 path ends and
//! middle; 3 triangle; 4/5 four-path ends and middles; 6/7 star leaves and
//! center; 8 four-cycle; 9/10/11 paw pendant, triangle rim, and hinge; 12/13
//! diamond rim and hub; 14 four-clique. Within a connected graphlet the
//! orbit of a node is determined by the edge count and the node's degree,
//! which is what the lookup tables below encode.

use crate::graph::Graph;

/// Orbit count matrix: one row of 15 per-node counts per node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitCountMatrix {
    counts: Vec<[u64; 15]>,
}

/// Columns kept in the reduced 11-orbit view (drops the redundant orbits
/// 3, 12, 13, 14).
pub const REDUCED_ORBITS: [usize; 11] = [0, 1, 2, 4, 5, 6, 7, 8, 9, 10, 11];

impl OrbitCountMatrix {
    pub fn node_count(&self) -> usize {
        self.counts.len()
    }

    /// Full 15-column row for one node.
    pub fn row(&self, node: usize) -> &[u64; 15] {
        &self.counts[node]
    }

    /// Reduced view over the 11 non-redundant orbits.
    pub fn reduced(&self) -> Vec<[u64; 11]> {
        self.counts
            .iter()
            .map(|row| {
                let mut out = [0u64; 11];
                for (slot, &orbit) in REDUCED_ORBITS.iter().enumerate() {
                    out[slot] = row[orbit];
                }
                out
            })
            .collect()
    }
}

/// Orbit assignment per position for every 3-bit triple adjacency mask.
/// Bit order: (0,1), (0,2), (1,2). `-1` marks a disconnected subgraph.
const LUT3: [[i8; 3]; 8] = build_lut3();

/// Orbit assignment per position for every 6-bit quad adjacency mask.
/// Bit order: (0,1), (0,2), (0,3), (1,2), (1,3), (2,3).
const LUT4: [[i8; 4]; 64] = build_lut4();

const fn build_lut3() -> [[i8; 3]; 8] {
    let mut lut = [[-1i8; 3]; 8];
    let mut mask = 0usize;
    while mask < 8 {
        let deg = [
            (mask & 1) + ((mask >> 1) & 1),
            (mask & 1) + ((mask >> 2) & 1),
            ((mask >> 1) & 1) + ((mask >> 2) & 1),
        ];
        let edges = mask.count_ones();
        // Connected on 3 nodes means at least 2 edges.
        if edges == 2 {
            let mut i = 0;
            while i < 3 {
                lut[mask][i] = if deg[i] == 2 { 2 } else { 1 };
                i += 1;
            }
        } else if edges == 3 {
            lut[mask] = [3, 3, 3];
        }
        mask += 1;
    }
    lut
}

const fn build_lut4() -> [[i8; 4]; 64] {
    let mut lut = [[-1i8; 4]; 64];
    let mut mask = 0usize;
    while mask < 64 {
        // Pair bits: (0,1) (0,2) (0,3) (1,2) (1,3) (2,3).
        let adj = [
            [false, mask & 1 != 0, mask & 2 != 0, mask & 4 != 0],
            [mask & 1 != 0, false, mask & 8 != 0, mask & 16 != 0],
            [mask & 2 != 0, mask & 8 != 0, false, mask & 32 != 0],
            [mask & 4 != 0, mask & 16 != 0, mask & 32 != 0, false],
        ];
        let mut reached = [true, false, false, false];
        let mut pass = 0;
        while pass < 4 {
            let mut i = 0;
            while i < 4 {
                if reached[i] {
                    let mut j = 0;
                    while j < 4 {
                        if adj[i][j] {
                            reached[j] = true;
                        }
                        j += 1;
                    }
                }
                i += 1;
            }
            pass += 1;
        }
        if reached[0] && reached[1] && reached[2] && reached[3] {
            let mut deg = [0usize; 4];
            let mut i = 0;
            while i < 4 {
                let mut j = 0;
                while j < 4 {
                    if adj[i][j] {
                        deg[i] += 1;
                    }
                    j += 1;
                }
                i += 1;
            }
            let mut max_deg = 0;
            let mut i = 0;
            while i < 4 {
                if deg[i] > max_deg {
                    max_deg = deg[i];
                }
                i += 1;
            }
            let edges = mask.count_ones();
            let mut i = 0;
            while i < 4 {
                lut[mask][i] = match (edges, max_deg, deg[i]) {
                    (3, 2, 1) => 4,  // four-path end
                    (3, 2, 2) => 5,  // four-path middle
                    (3, 3, 1) => 6,  // star leaf
                    (3, 3, 3) => 7,  // star center
                    (4, 2, 2) => 8,  // four-cycle
                    (4, 3, 1) => 9,  // paw pendant
                    (4, 3, 2) => 10, // paw rim
                    (4, 3, 3) => 11, // paw hinge
                    (5, 3, 2) => 12, // diamond rim
                    (5, 3, 3) => 13, // diamond hub
                    (6, 3, 3) => 14, // four-clique
                    _ => -1,
                } as i8;
                i += 1;
            }
        }
        mask += 1;
    }
    lut
}

/// Exact per-node orbit counts by enumeration of all 2-4 node subsets.
pub fn orbit_counts(g: &Graph) -> OrbitCountMatrix {
    let n = g.node_count();
    let mut counts = vec![[0u64; 15]; n];

    for &(u, v) in g.edges() {
        counts[u as usize][0] += 1;
        counts[v as usize][0] += 1;
    }

    for a in 0..n {
        for b in a + 1..n {
            let ab = g.has_edge(a, b) as usize;
            for c in b + 1..n {
                let mask = ab | (g.has_edge(a, c) as usize) << 1 | (g.has_edge(b, c) as usize) << 2;
                let orbits = LUT3[mask];
                if orbits[0] >= 0 {
                    counts[a][orbits[0] as usize] += 1;
                    counts[b][orbits[1] as usize] += 1;
                    counts[c][orbits[2] as usize] += 1;
                }
            }
        }
    }

    for a in 0..n {
        for b in a + 1..n {
            let ab = g.has_edge(a, b) as usize;
            for c in b + 1..n {
                let abc = ab | (g.has_edge(a, c) as usize) << 1 | (g.has_edge(b, c) as usize) << 3;
                for d in c + 1..n {
                    let mask = abc
                        | (g.has_edge(a, d) as usize) << 2
                        | (g.has_edge(b, d) as usize) << 4
                        | (g.has_edge(c, d) as usize) << 5;
                    let orbits = LUT4[mask];
                    if orbits[0] >= 0 {
                        counts[a][orbits[0] as usize] += 1;
                        counts[b][orbits[1] as usize] += 1;
                        counts[c][orbits[2] as usize] += 1;
                        counts[d][orbits[3] as usize] += 1;
                    }
                }
            }
        }
    }

    OrbitCountMatrix { counts }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_counts() {
        let k3 = Graph::complete(3).unwrap();
        let m = orbit_counts(&k3);
        for v in 0..3 {
            assert_eq!(m.row(v)[0], 2, "degree orbit");
            assert_eq!(m.row(v)[3], 1, "triangle orbit");
            assert_eq!(m.row(v)[1], 0);
            assert_eq!(m.row(v)[2], 0);
        }
    }

    #[test]
    fn empty_graph_all_zero() {
        let m = orbit_counts(&Graph::empty(5).unwrap());
        for v in 0..5 {
            assert_eq!(m.row(v), &[0u64; 15]);
        }
    }

    #[test]
    fn star_center_orbits() {
        // Star on 4 nodes: center 0, leaves 1..3.
        let g = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let m = orbit_counts(&g);
        // Center is the middle of C(3,2) = 3 induced three-paths.
        assert_eq!(m.row(0)[2], 3);
        assert_eq!(m.row(0)[7], 1);
        for leaf in 1..4 {
            assert_eq!(m.row(leaf)[1], 2);
            assert_eq!(m.row(leaf)[6], 1);
        }
    }

    #[test]
    fn degree_column_is_degree_sequence() {
        use crate::generators::{er_mix, Seed};
        for seed in 0..5 {
            let g = er_mix(12, Seed(seed)).unwrap();
            let m = orbit_counts(&g);
            for v in 0..12 {
                assert_eq!(m.row(v)[0], g.degree(v) as u64);
            }
        }
    }

    #[test]
    fn four_cycle_and_clique() {
        let c4 = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let m = orbit_counts(&c4);
        for v in 0..4 {
            assert_eq!(m.row(v)[8], 1);
            assert_eq!(m.row(v)[4], 0);
        }
        let k4 = Graph::complete(4).unwrap();
        let m = orbit_counts(&k4);
        for v in 0..4 {
            assert_eq!(m.row(v)[14], 1);
            assert_eq!(m.row(v)[3], 3);
        }
    }

    #[test]
    fn reduced_view_column_order() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let m = orbit_counts(&g);
        let reduced = m.reduced();
        // Path ends occupy orbit 4 = reduced column 3.
        assert_eq!(reduced[0][3], 1);
        assert_eq!(reduced[0][0], m.row(0)[0]);
    }
}
