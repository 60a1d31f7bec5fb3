//! Graph Laplacians, dense symmetric eigendecomposition, Laplacian positional
//! encodings, and the spectral layout.
//!
//! The eigensolver is a cyclic Jacobi sweep: dependency-free, deterministic,
//! and accurate to ~1e-14 at the few-hundred-node scale this engine targets.

use crate::diff::Matrix;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::layout::Layout;

/// Relative threshold below which an eigenvalue counts as the trivial zero
/// mode of a connected graph's Laplacian.
const TRIVIAL_EIGENVALUE_FACTOR: f64 = 1e-8;

/// `L = I - D^{-1/2} A D^{-1/2}`.
pub fn normalized_laplacian(g: &Graph) -> Result<Matrix> {
    let n = g.node_count();
    let mut inv_sqrt_deg = vec![0.0; n];
    for v in 0..n {
        let d = g.degree(v);
        if d == 0 {
            return Err(Error::IsolatedNode { node: v });
        }
        inv_sqrt_deg[v] = 1.0 / (d as f64).sqrt();
    }
    let mut l = Matrix::identity(n);
    for &(u, v) in g.edges() {
        let w = -inv_sqrt_deg[u] * inv_sqrt_deg[v];
        l.set(u, v, w);
        l.set(v, u, w);
    }
    Ok(l)
}

/// `L = D - A`.
pub fn unnormalized_laplacian(g: &Graph) -> Matrix {
    let n = g.node_count();
    let mut l = Matrix::zeros(n, n);
    for v in 0..n {
        l.set(v, v, g.degree(v) as f64);
    }
    for &(u, v) in g.edges() {
        l.set(u, v, -1.0);
        l.set(v, u, -1.0);
    }
    l
}

/// Full spectrum of a symmetric matrix, eigenvalues ascending and
/// eigenvectors stored as the matching columns of an orthonormal matrix.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl EigenDecomposition {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Column `i` as a vector.
    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        (0..self.n()).map(|r| self.eigenvectors.get(r, i)).collect()
    }

    /// `max |V diag(lambda) V^T - m|`, the reconstruction residual.
    pub fn reconstruction_residual(&self, m: &Matrix) -> f64 {
        let n = self.n();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += self.eigenvectors.get(i, k)
                        * self.eigenvalues[k]
                        * self.eigenvectors.get(j, k);
                }
                worst = worst.max((acc - m.get(i, j)).abs());
            }
        }
        worst
    }

    /// `max |V^T V - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += self.eigenvectors.get(k, i) * self.eigenvectors.get(k, j);
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - target).abs());
            }
        }
        worst
    }
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn eigendecompose(m: &Matrix) -> Result<EigenDecomposition> {
    let n = m.rows();
    if n != m.cols() {
        return Err(Error::ShapeMismatch {
            op: "eigendecompose",
            lhs: m.shape_str(),
            rhs: "square".into(),
        });
    }
    let scale = m.max_abs();
    let mut max_asym = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            max_asym = max_asym.max((m.get(i, j) - m.get(j, i)).abs());
        }
    }
    if max_asym > 1e-12 * (1.0 + scale) {
        return Err(Error::NotSymmetric { max_asym });
    }

    let mut a = m.clone();
    let mut v = Matrix::identity(n);
    let stop = 1e-15 * (1.0 + scale);
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                off = off.max(a.get(i, j).abs());
            }
        }
        if off <= stop {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq.abs() <= stop * 1e-2 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // A <- J^T A J on rows/columns p and q
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                // keep the pair exactly symmetric against rounding drift
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).partial_cmp(&a.get(j, j)).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            eigenvectors.set(r, dst, v.get(r, src));
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Flip each column so its largest-magnitude entry is positive, earliest
/// index winning magnitude ties. Entries within a relative hair of the max
/// count as tied so that exactly symmetric eigenvectors resolve the same way
/// regardless of rounding noise.
fn fix_column_signs(m: &mut Matrix) {
    for c in 0..m.cols() {
        let mut max_abs = 0.0f64;
        for r in 0..m.rows() {
            max_abs = max_abs.max(m.get(r, c).abs());
        }
        let cutoff = max_abs * (1.0 - 1e-9);
        let best = (0..m.rows())
            .find(|&r| m.get(r, c).abs() >= cutoff)
            .unwrap_or(0);
        if m.get(best, c) < 0.0 {
            for r in 0..m.rows() {
                let v = m.get(r, c);
                m.set(r, c, -v);
            }
        }
    }
}

/// Per-node positional features from the k smallest non-trivial eigenvectors
/// of the normalized Laplacian.
#[derive(Clone, Debug, PartialEq)]
pub struct LaplacianPe {
    pub features: Matrix,
    pub k: usize,
}

pub fn laplacian_pe(g: &Graph, k: usize) -> Result<LaplacianPe> {
    let n = g.node_count();
    if k >= n {
        return Err(Error::PeDimensionTooLarge { k, n, max: n - 1 });
    }
    let decomp = eigendecompose(&normalized_laplacian(g)?)?;
    let lambda_max = decomp.eigenvalues.last().copied().unwrap_or(0.0);
    let threshold = TRIVIAL_EIGENVALUE_FACTOR * lambda_max.max(f64::MIN_POSITIVE);
    let first_nontrivial = decomp
        .eigenvalues
        .iter()
        .position(|&l| l >= threshold)
        .unwrap_or(decomp.n());
    if first_nontrivial + k > n {
        return Err(Error::PeDimensionTooLarge {
            k,
            n,
            max: n - first_nontrivial,
        });
    }
    let mut features = Matrix::zeros(n, k);
    for col in 0..k {
        let src = first_nontrivial + col;
        for r in 0..n {
            features.set(r, col, decomp.eigenvectors.get(r, src));
        }
    }
    fix_column_signs(&mut features);
    Ok(LaplacianPe { features, k })
}

/// Span below which a layout axis counts as constant and collapses to 0.
fn degenerate_span(span: f64, scale: f64) -> bool {
    span <= 1e-12 * (1.0 + scale)
}

/// Coordinates from the first two non-trivial eigenvectors of the
/// unnormalized Laplacian, each axis affinely rescaled into [-1, 1].
pub fn spectral_layout(g: &Graph) -> Result<Layout> {
    let n = g.node_count();
    if n < 3 {
        return Err(Error::GraphTooSmall { n });
    }
    let decomp = eigendecompose(&unnormalized_laplacian(g))?;
    let lambda_max = decomp.eigenvalues.last().copied().unwrap_or(0.0);
    let threshold = TRIVIAL_EIGENVALUE_FACTOR * lambda_max.max(f64::MIN_POSITIVE);
    let first_nontrivial = decomp
        .eigenvalues
        .iter()
        .position(|&l| l >= threshold)
        .unwrap_or(decomp.n());
    if first_nontrivial + 2 > n {
        return Err(Error::GraphTooSmall { n });
    }
    let mut axes = Matrix::zeros(n, 2);
    for col in 0..2 {
        for r in 0..n {
            axes.set(r, col, decomp.eigenvectors.get(r, first_nontrivial + col));
        }
    }
    fix_column_signs(&mut axes);
    let mut coords = Matrix::zeros(n, 2);
    for col in 0..2 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in 0..n {
            lo = lo.min(axes.get(r, col));
            hi = hi.max(axes.get(r, col));
        }
        let span = hi - lo;
        if degenerate_span(span, lo.abs().max(hi.abs())) {
            continue; // constant axis stays at 0
        }
        for r in 0..n {
            let v = 2.0 * (axes.get(r, col) - lo) / span - 1.0;
            coords.set(r, col, v);
        }
    }
    Ok(Layout::new(coords))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_er_sparse;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent eigenvalue oracle for small symmetric matrices: bisection
    /// on the characteristic polynomial, evaluated as an LU determinant.
    /// Only valid when all eigenvalues are simple.
    mod oracle {
        use crate::diff::Matrix;

        pub fn det(m: &Matrix) -> f64 {
            let n = m.rows();
            let mut a: Vec<Vec<f64>> = (0..n).map(|r| m.row(r).to_vec()).collect();
            let mut det = 1.0;
            for col in 0..n {
                let pivot = (col..n)
                    .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                    .unwrap();
                if a[pivot][col] == 0.0 {
                    return 0.0;
                }
                if pivot != col {
                    a.swap(pivot, col);
                    det = -det;
                }
                det *= a[col][col];
                for row in col + 1..n {
                    let f = a[row][col] / a[col][col];
                    for k in col..n {
                        a[row][k] -= f * a[col][k];
                    }
                }
            }
            det
        }

        fn char_poly(m: &Matrix, lambda: f64) -> f64 {
            let n = m.rows();
            let mut shifted = m.clone();
            for i in 0..n {
                let v = shifted.get(i, i);
                shifted.set(i, i, v - lambda);
            }
            det(&shifted)
        }

        /// All real roots of det(M - lambda I) found by scanning for sign
        /// changes over the Gershgorin interval and bisecting each bracket.
        pub fn eigenvalues(m: &Matrix) -> Vec<f64> {
            let n = m.rows();
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for i in 0..n {
                let radius: f64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| m.get(i, j).abs())
                    .sum();
                lo = lo.min(m.get(i, i) - radius);
                hi = hi.max(m.get(i, i) + radius);
            }
            lo -= 1e-6;
            hi += 1e-6;
            let samples = 20_000;
            let step = (hi - lo) / samples as f64;
            let mut roots = Vec::new();
            let mut prev = char_poly(m, lo);
            for i in 1..=samples {
                let x = lo + step * i as f64;
                let cur = char_poly(m, x);
                if prev == 0.0 {
                    roots.push(lo + step * (i - 1) as f64);
                } else if prev * cur < 0.0 {
                    let mut a = lo + step * (i - 1) as f64;
                    let mut b = x;
                    let mut fa = prev;
                    for _ in 0..200 {
                        let mid = 0.5 * (a + b);
                        let fm = char_poly(m, mid);
                        if fa * fm <= 0.0 {
                            b = mid;
                        } else {
                            a = mid;
                            fa = fm;
                        }
                    }
                    roots.push(0.5 * (a + b));
                }
                prev = cur;
            }
            roots
        }
    }

    fn path3() -> Graph {
        Graph::new(3, &[(0, 1), (1, 2)]).unwrap()
    }

    fn k4() -> Graph {
        Graph::new(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap()
    }

    fn cycle(n: usize) -> Graph {
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::new(n, &edges).unwrap()
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn normalized_p3_spectrum_matches_oracle() {
        let l = normalized_laplacian(&path3()).unwrap();
        let roots = oracle::eigenvalues(&l);
        assert_eq!(roots.len(), 3);
        for (root, expect) in roots.iter().zip([0.0, 1.0, 2.0]) {
            assert_close(*root, expect, 1e-9);
        }
        let decomp = eigendecompose(&l).unwrap();
        for (have, want) in decomp.eigenvalues.iter().zip(roots) {
            assert_close(*have, want, 1e-9);
        }
    }

    #[test]
    fn normalized_k4_spectrum_closed_form() {
        let l = normalized_laplacian(&k4()).unwrap();
        let decomp = eigendecompose(&l).unwrap();
        let expect = [0.0, 4.0 / 3.0, 4.0 / 3.0, 4.0 / 3.0];
        for (have, want) in decomp.eigenvalues.iter().zip(expect) {
            assert_close(*have, want, 1e-12);
        }
        // oracle cross-check: the claimed eigenvalues are roots of det(L - x I)
        for x in [0.0, 4.0 / 3.0] {
            let mut shifted = l.clone();
            for i in 0..4 {
                let v = shifted.get(i, i);
                shifted.set(i, i, v - x);
            }
            assert!(oracle::det(&shifted).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_null_vector_is_sqrt_degrees() {
        let g = generate_er_sparse(12, 0.4, 3).unwrap();
        let l = normalized_laplacian(&g).unwrap();
        let decomp = eigendecompose(&l).unwrap();
        assert!(decomp.eigenvalues[0].abs() < 1e-10);
        let v0 = decomp.eigenvector(0);
        let expect: Vec<f64> = (0..g.node_count())
            .map(|i| (g.degree(i) as f64).sqrt())
            .collect();
        let norm: f64 = expect.iter().map(|x| x * x).sum::<f64>().sqrt();
        let sign = if v0[0] >= 0.0 { 1.0 } else { -1.0 };
        for (have, want) in v0.iter().zip(&expect) {
            assert_close(sign * have, want / norm, 1e-9);
        }
    }

    #[test]
    fn normalized_eigenvalues_within_spectral_bound() {
        for seed in 0..10 {
            let g = generate_er_sparse(25, 0.15, seed).unwrap();
            let decomp = eigendecompose(&normalized_laplacian(&g).unwrap()).unwrap();
            for &l in &decomp.eigenvalues {
                assert!((-1e-10..=2.0 + 1e-10).contains(&l), "{l}");
            }
        }
    }

    #[test]
    fn unnormalized_p3_matrix_and_spectrum() {
        let l = unnormalized_laplacian(&path3());
        let expect = Matrix::from_rows(&[
            vec![1.0, -1.0, 0.0],
            vec![-1.0, 2.0, -1.0],
            vec![0.0, -1.0, 1.0],
        ]);
        assert_eq!(l, expect);
        let roots = oracle::eigenvalues(&l);
        for (root, want) in roots.iter().zip([0.0, 1.0, 3.0]) {
            assert_close(*root, want, 1e-9);
        }
    }

    #[test]
    fn unnormalized_kills_constant_vector() {
        let g = generate_er_sparse(15, 0.3, 9).unwrap();
        let l = unnormalized_laplacian(&g);
        for r in 0..l.rows() {
            assert_close(l.row(r).iter().sum::<f64>(), 0.0, 1e-12);
        }
    }

    #[test]
    fn eigendecompose_identity_and_diagonal() {
        let decomp = eigendecompose(&Matrix::identity(5)).unwrap();
        for &l in &decomp.eigenvalues {
            assert_close(l, 1.0, 1e-14);
        }
        let d = Matrix::from_rows(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ]);
        let decomp = eigendecompose(&d).unwrap();
        assert_eq!(decomp.eigenvalues, vec![1.0, 2.0, 3.0]);
        for (col, expect_row) in [(0, 1), (1, 2), (2, 0)] {
            let v = decomp.eigenvector(col);
            assert_close(v[expect_row].abs(), 1.0, 1e-12);
        }
    }

    #[test]
    fn eigendecompose_random8_matches_char_poly_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let raw = Matrix::uniform(8, 8, -1.0, 1.0, &mut rng);
        let mut sym = Matrix::zeros(8, 8);
        for i in 0..8 {
            for j in 0..8 {
                sym.set(i, j, 0.5 * (raw.get(i, j) + raw.get(j, i)));
            }
        }
        let decomp = eigendecompose(&sym).unwrap();
        let roots = oracle::eigenvalues(&sym);
        assert_eq!(roots.len(), 8, "oracle must bracket all roots");
        for (have, want) in decomp.eigenvalues.iter().zip(roots) {
            assert_close(*have, want, 1e-8);
        }
    }

    #[test]
    fn eigendecompose_rejects_asymmetric() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.5, 1.0]]);
        assert!(matches!(eigendecompose(&m), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn eigendecompose_residuals_on_random_graphs() {
        for seed in 0..20 {
            let g = generate_er_sparse(30 + (seed as usize % 21), 0.12, seed).unwrap();
            let l = normalized_laplacian(&g).unwrap();
            let decomp = eigendecompose(&l).unwrap();
            let tol = 1e-8 * (1.0 + l.max_abs());
            assert!(decomp.reconstruction_residual(&l) <= tol);
            assert!(decomp.orthonormality_error() <= 1e-8);
        }
    }

    #[test]
    fn pe_p3_single_column() {
        let pe = laplacian_pe(&path3(), 1).unwrap();
        // eigenvalue-1 eigenvector of the normalized Laplacian, sign-fixed
        let s = 1.0 / 2.0f64.sqrt();
        let expect = [s, 0.0, -s];
        for (r, want) in expect.iter().enumerate() {
            assert_close(pe.features.get(r, 0), *want, 1e-10);
        }
    }

    #[test]
    fn pe_columns_unit_norm_and_deterministic() {
        let g = generate_er_sparse(18, 0.25, 4).unwrap();
        let pe = laplacian_pe(&g, 5).unwrap();
        for c in 0..5 {
            let norm: f64 = (0..g.node_count())
                .map(|r| pe.features.get(r, c).powi(2))
                .sum::<f64>()
                .sqrt();
            assert_close(norm, 1.0, 1e-8);
        }
        let again = laplacian_pe(&g, 5).unwrap();
        assert_eq!(pe, again, "bit-identical across calls");
    }

    #[test]
    fn pe_k_too_large_is_error() {
        let err = laplacian_pe(&path3(), 3).unwrap_err();
        assert!(matches!(err, Error::PeDimensionTooLarge { .. }), "{err}");
    }

    /// Smallest gap between consecutive eigenvalues of the normalized
    /// Laplacian; equivariance tests need simple spectra.
    fn min_gap(g: &Graph) -> f64 {
        let d = eigendecompose(&normalized_laplacian(g).unwrap()).unwrap();
        d.eigenvalues
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn pe_rows_permute_with_nodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut checked = 0;
        for seed in 0..60 {
            let g = generate_er_sparse(10, 0.35, seed).unwrap();
            if g.node_count() != 10 || min_gap(&g) < 1e-3 {
                continue;
            }
            let mut perm: Vec<usize> = (0..10).collect();
            for i in (1..10).rev() {
                let j = rng.gen_range(0..=i);
                perm.swap(i, j);
            }
            let gp = g.permuted(&perm).unwrap();
            let pe = laplacian_pe(&g, 3).unwrap();
            let pe_p = laplacian_pe(&gp, 3).unwrap();
            // rows follow the permutation, up to per-column sign re-evaluation
            for c in 0..3 {
                let mut max_same = 0.0f64;
                let mut max_flip = 0.0f64;
                for v in 0..10 {
                    let a = pe.features.get(v, c);
                    let b = pe_p.features.get(perm[v], c);
                    max_same = max_same.max((a - b).abs());
                    max_flip = max_flip.max((a + b).abs());
                }
                assert!(
                    max_same < 1e-8 || max_flip < 1e-8,
                    "column {c} is not a signed permutation (same {max_same:e}, flip {max_flip:e})"
                );
            }
            checked += 1;
            if checked >= 10 {
                break;
            }
        }
        assert!(checked >= 5, "too few graphs with simple spectra");
    }

    #[test]
    fn spectral_layout_c4_extremes() {
        let g = cycle(4);
        let l = unnormalized_laplacian(&g);
        let roots = oracle::eigenvalues(&l);
        // C4 spectrum is {0, 2, 2, 4}; the oracle sees sign changes at the
        // simple roots only
        assert!(roots.iter().any(|&r| r.abs() < 1e-9));
        assert!(roots.iter().any(|&r| (r - 4.0).abs() < 1e-9));
        let layout = spectral_layout(&g).unwrap();
        for axis in 0..2 {
            let vals: Vec<f64> = (0..4).map(|i| layout.coords().get(i, axis)).collect();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert_close(lo, -1.0, 1e-9);
            assert_close(hi, 1.0, 1e-9);
        }
        // opposite cycle nodes stay antipodal through the rescale
        for (a, b) in [(0, 2), (1, 3)] {
            let pa = layout.point(a);
            let pb = layout.point(b);
            assert_close(pa.0 + pb.0, 0.0, 1e-9);
            assert_close(pa.1 + pb.1, 0.0, 1e-9);
        }
    }

    #[test]
    fn spectral_layout_p3_frozen_oracle_coordinates() {
        // Oracle-derived: eigenvector(1) = (1, 0, -1)/sqrt(2) and
        // eigenvector(3) = (1, -2, 1)/sqrt(6), sign convention flips the
        // second; rescaling each axis to [-1, 1] gives these points.
        let layout = spectral_layout(&path3()).unwrap();
        let expect = [(1.0, -1.0), (0.0, 1.0), (-1.0, -1.0)];
        for (i, want) in expect.iter().enumerate() {
            let p = layout.point(i);
            assert_close(p.0, want.0, 1e-9);
            assert_close(p.1, want.1, 1e-9);
        }
    }

    #[test]
    fn spectral_layout_rescale_contract() {
        let g = generate_er_sparse(20, 0.2, 13).unwrap();
        let layout = spectral_layout(&g).unwrap();
        for axis in 0..2 {
            let vals: Vec<f64> = (0..g.node_count())
                .map(|i| layout.coords().get(i, axis))
                .collect();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert_close(lo, -1.0, 1e-9);
            assert_close(hi, 1.0, 1e-9);
        }
    }

    #[test]
    fn spectral_layout_too_small_is_error() {
        let g = Graph::new(2, &[(0, 1)]).unwrap();
        assert!(matches!(
            spectral_layout(&g),
            Err(Error::GraphTooSmall { n: 2 })
        ));
    }

    #[test]
    fn spectral_layout_follows_relabeling() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        for seed in 100..160 {
            let g = generate_er_sparse(12, 0.3, seed).unwrap();
            if g.node_count() != 12 {
                continue;
            }
            let d = eigendecompose(&unnormalized_laplacian(&g)).unwrap();
            let gap = d.eigenvalues.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            if gap < 1e-3 {
                continue;
            }
            let mut perm: Vec<usize> = (0..12).collect();
            for i in (1..12).rev() {
                let j = rng.gen_range(0..=i);
                perm.swap(i, j);
            }
            let gp = g.permuted(&perm).unwrap();
            let a = spectral_layout(&g).unwrap();
            let b = spectral_layout(&gp).unwrap();
            for axis in 0..2 {
                let mut same = 0.0f64;
                let mut flip = 0.0f64;
                for v in 0..12 {
                    let x = a.coords().get(v, axis);
                    let y = b.coords().get(perm[v], axis);
                    same = same.max((x - y).abs());
                    // sign re-evaluation mirrors the axis: x' = -x maps
                    // through the [-1, 1] rescale to exactly -x
                    flip = flip.max((x + y).abs());
                }
                assert!(same < 1e-8 || flip < 1e-8);
            }
            checked += 1;
            if checked >= 8 {
                break;
            }
        }
        assert!(checked >= 4);
    }
}
