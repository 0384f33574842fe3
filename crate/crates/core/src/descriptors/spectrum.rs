//! Normalized Laplacian spectra via a dense symmetric eigensolver.
//!
//! The solver is the classic Householder tridiagonalization followed by QL
//! iteration with implicit shifts (eigenvalues only), the same route as the
//! EISPACK `tred1`/`tql1` pair. It is exact enough for the graph sizes this
//! crate targets (n <= 512) and is shared with the Vendi Score computation.

use crate::graph::Graph;
use crate::scalar::{real, Scalar};

use super::DescriptorError;

const MAX_QL_ITERATIONS: usize = 50;

/// Dense symmetric matrix as rows; only the lower triangle is read.
pub(crate) type DenseSym<S> = Vec<Vec<S>>;

/// Normalized Laplacian `L = I - D^{-1/2} A D^{-1/2}` with the isolated-node
/// convention `L[i][i] = 0` when `deg(i) = 0`.
pub fn normalized_laplacian<S: Scalar>(g: &Graph) -> DenseSym<S> {
    let n = g.node_count();
    let inv_sqrt_deg: Vec<S> = (0..n)
        .map(|u| {
            let d = g.degree(u);
            if d == 0 {
                S::zero()
            } else {
                S::one() / real::<S>(d as f64).sqrt()
            }
        })
        .collect();
    let mut m = vec![vec![S::zero(); n]; n];
    for u in 0..n {
        if g.degree(u) > 0 {
            m[u][u] = S::one();
        }
    }
    for &(u, v) in g.edges() {
        let (u, v) = (u as usize, v as usize);
        let w = -(inv_sqrt_deg[u] * inv_sqrt_deg[v]);
        m[u][v] = w;
        m[v][u] = w;
    }
    m
}

/// All eigenvalues of the normalized Laplacian, ascending.
pub fn normalized_laplacian_spectrum<S: Scalar>(g: &Graph) -> Result<Vec<S>, DescriptorError> {
    symmetric_eigenvalues(normalized_laplacian(g))
}

/// Eigenvalues of a dense symmetric matrix, ascending. Consumes the matrix
/// (it is used as scratch space for the Householder reduction).
pub fn symmetric_eigenvalues<S: Scalar>(mut a: DenseSym<S>) -> Result<Vec<S>, DescriptorError> {
    let n = a.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let (mut d, mut e) = tridiagonalize(&mut a);
    ql_implicit(&mut d, &mut e)?;
    d.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalues are finite"));
    Ok(d)
}

/// Householder reduction to tridiagonal form; returns (diagonal, subdiagonal)
/// with the subdiagonal stored in `e[1..]`.
fn tridiagonalize<S: Scalar>(a: &mut DenseSym<S>) -> (Vec<S>, Vec<S>) {
    let n = a.len();
    let mut d = vec![S::zero(); n];
    let mut e = vec![S::zero(); n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = S::zero();
        if l > 0 {
            let mut scale = S::zero();
            for k in 0..=l {
                scale += a[i][k].abs();
            }
            if scale == S::zero() {
                e[i] = a[i][l];
            } else {
                for k in 0..=l {
                    a[i][k] /= scale;
                    h += a[i][k] * a[i][k];
                }
                let f = a[i][l];
                let g = if f >= S::zero() { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i][l] = f - g;
                let mut f_acc = S::zero();
                for j in 0..=l {
                    let mut g_acc = S::zero();
                    for k in 0..=j {
                        g_acc += a[j][k] * a[i][k];
                    }
                    for k in (j + 1)..=l {
                        g_acc += a[k][j] * a[i][k];
                    }
                    e[j] = g_acc / h;
                    f_acc += e[j] * a[i][j];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let fj = a[i][j];
                    let gj = e[j] - hh * fj;
                    e[j] = gj;
                    for k in 0..=j {
                        let delta = fj * e[k] + gj * a[i][k];
                        a[j][k] -= delta;
                    }
                }
            }
        } else {
            e[i] = a[i][l];
        }
    }
    for i in 0..n {
        d[i] = a[i][i];
    }
    e[0] = S::zero();
    (d, e)
}

/// QL iteration with implicit shifts on a tridiagonal matrix.
fn ql_implicit<S: Scalar>(d: &mut [S], e: &mut [S]) -> Result<(), DescriptorError> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = S::zero();
    let two = real::<S>(2.0);
    for l in 0..n {
        let mut iterations = 0;
        loop {
            // Look for a negligible subdiagonal element to split at.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= S::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > MAX_QL_ITERATIONS {
                return Err(DescriptorError::EigenNonConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(S::one());
            let denom = g + if g >= S::zero() { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / denom;
            let mut s = S::one();
            let mut c = S::one();
            let mut p = S::zero();
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == S::zero() {
                    d[i + 1] -= p;
                    e[m] = S::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            let _ = i;
            d[l] -= p;
            e[l] = g;
            e[m] = S::zero();
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_spectrum_close(actual: &[f64], expected: &[f64]) {
        assert_eq!(actual.len(), expected.len());
        for (a, b) in actual.iter().zip(expected) {
            assert!((a - b).abs() < 1e-9, "{actual:?} vs {expected:?}");
        }
    }

    #[test]
    fn single_edge_spectrum() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let s: Vec<f64> = normalized_laplacian_spectrum(&g).unwrap();
        assert_spectrum_close(&s, &[0.0, 2.0]);
    }

    #[test]
    fn empty_graph_spectrum_is_zero() {
        let g = Graph::empty(4).unwrap();
        let s: Vec<f64> = normalized_laplacian_spectrum(&g).unwrap();
        assert_spectrum_close(&s, &[0.0; 4]);
    }

    #[test]
    fn complete_graph_closed_form() {
        // K_n has eigenvalue 0 once and n/(n-1) with multiplicity n-1.
        for n in [3usize, 5, 8] {
            let g = Graph::complete(n).unwrap();
            let s: Vec<f64> = normalized_laplacian_spectrum(&g).unwrap();
            let mut expected = vec![n as f64 / (n as f64 - 1.0); n];
            expected[0] = 0.0;
            assert_spectrum_close(&s, &expected);
        }
    }

    #[test]
    fn cycle_closed_form() {
        // C_n is 2-regular: eigenvalues 1 - cos(2 pi k / n).
        let n = 12usize;
        let edges = (0..n).map(|i| (i, (i + 1) % n));
        let g = Graph::from_edges(n, edges).unwrap();
        let s: Vec<f64> = normalized_laplacian_spectrum(&g).unwrap();
        let mut expected: Vec<f64> = (0..n)
            .map(|k| 1.0 - (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos())
            .collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_spectrum_close(&s, &expected);
    }

    #[test]
    fn trace_and_range_invariants() {
        use crate::generators::{ensemble_grid, sample, Seed};
        for (i, spec) in ensemble_grid(16).iter().enumerate() {
            let g = match sample(spec, 16, Seed(100 + i as u64)) {
                Ok(g) => g,
                Err(_) => continue,
            };
            let s: Vec<f64> = normalized_laplacian_spectrum(&g).unwrap();
            let trace = (0..16).filter(|&u| g.degree(u) > 0).count() as f64;
            let sum: f64 = s.iter().sum();
            assert!((sum - trace).abs() < 1e-6, "{}", spec.label());
            for &lambda in &s {
                assert!((-1e-9..=2.0 + 1e-9).contains(&lambda), "{lambda}");
            }
        }
    }

    #[test]
    fn converges_at_n_256() {
        use crate::generators::{sample, GeneratorSpec, Seed};
        let g = sample(&GeneratorSpec::Er { p: 0.05 }, 256, Seed(1)).unwrap();
        let s: Vec<f64> = normalized_laplacian_spectrum(&g).unwrap();
        assert_eq!(s.len(), 256);
        let trace = (0..256).filter(|&u| g.degree(u) > 0).count() as f64;
        let sum: f64 = s.iter().sum();
        assert!((sum - trace).abs() < 1e-6);
    }

    #[test]
    fn works_in_f32_too() {
        let g = Graph::complete(4).unwrap();
        let s: Vec<f32> = normalized_laplacian_spectrum(&g).unwrap();
        assert!((s[0]).abs() < 1e-5);
        assert!((s[3] - 4.0 / 3.0).abs() < 1e-5);
    }
}
