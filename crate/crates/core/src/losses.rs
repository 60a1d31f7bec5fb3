//! Layout criteria: stress, the Procrustes shape statistic, the exact
//! crossing count, and the stress + crossing-loss combination.

use crate::aesthete::{self, AestheteLossConfig, AestheteModel};
use crate::diff::{Matrix, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::DistanceMatrix;
use crate::layout::Layout;

/// Smoothing inside the pairwise norm: sqrt(x + eps) keeps the gradient
/// finite when two nodes coincide.
pub const NORM_EPS: f64 = 1e-12;

/// Guard inside the singular-value square roots of the Procrustes statistic.
const SV_EPS: f64 = 1e-24;

/// Stress weighting `w_ij = d_ij^-alpha` and the averaging flag.
#[derive(Clone, Copy, Debug)]
pub struct StressConfig {
    pub alpha: u8,
    pub averaged: bool,
}

impl StressConfig {
    pub fn raw(alpha: u8) -> StressConfig {
        StressConfig {
            alpha,
            averaged: false,
        }
    }
}

impl Default for StressConfig {
    /// alpha = 1 and averaging on, the stress-training convention.
    fn default() -> Self {
        StressConfig {
            alpha: 1,
            averaged: true,
        }
    }
}

fn weight(d: u32, alpha: u8) -> f64 {
    match alpha {
        0 => 1.0,
        1 => 1.0 / d as f64,
        2 => 1.0 / (d as f64 * d as f64),
        other => panic!("alpha must be 0, 1 or 2, got {other}"),
    }
}

fn pair_indices(n: usize) -> (Vec<usize>, Vec<usize>) {
    let mut is = Vec::with_capacity(n * (n - 1) / 2);
    let mut js = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            is.push(i);
            js.push(j);
        }
    }
    (is, js)
}

/// Differentiable stress of the layout variable `p` (N x 2):
/// `sum_{i<j} w_ij (||p_i - p_j|| - d_ij)^2`, divided by the pair count when
/// averaging is on.
pub fn stress_var(p: &Var, d: &DistanceMatrix, cfg: &StressConfig) -> Result<Var> {
    let n = d.n();
    if p.rows() != n || p.cols() != 2 {
        return Err(Error::ShapeMismatch {
            op: "stress",
            lhs: format!("{}x{}", p.rows(), p.cols()),
            rhs: format!("{n}x2"),
        });
    }
    let (is, js) = pair_indices(n);
    let m = is.len();
    let tape = p.tape();
    let mut dvec = Matrix::zeros(m, 1);
    let mut wvec = Matrix::zeros(m, 1);
    for r in 0..m {
        let dij = d.get(is[r], js[r]);
        dvec.set(r, 0, f64::from(dij));
        wvec.set(r, 0, weight(dij, cfg.alpha));
    }
    let pi = p.gather_rows(&is)?;
    let pj = p.gather_rows(&js)?;
    let diff = pi.sub(&pj)?;
    let dist = diff
        .mul(&diff)?
        .row_sum()
        .affine(1.0, NORM_EPS)
        .sqrt();
    let err = dist.sub(&tape.constant(dvec))?;
    let weighted = err.mul(&err)?.mul(&tape.constant(wvec))?;
    let total = weighted.sum();
    Ok(if cfg.averaged {
        total.affine(1.0 / m as f64, 0.0)
    } else {
        total
    })
}

/// Stress evaluated directly, no tape. Matches [`stress_var`] bit-for-bit on
/// the same inputs.
pub fn stress_value(layout: &Layout, d: &DistanceMatrix, cfg: &StressConfig) -> f64 {
    let n = d.n();
    assert_eq!(layout.n(), n, "layout/distance size mismatch");
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let (xi, yi) = layout.point(i);
            let (xj, yj) = layout.point(j);
            let dist = ((xi - xj).powi(2) + (yi - yj).powi(2) + NORM_EPS).sqrt();
            let dij = d.get(i, j);
            let err = dist - f64::from(dij);
            total += weight(dij, cfg.alpha) * err * err;
        }
    }
    if cfg.averaged {
        total / d.pair_count() as f64
    } else {
        total
    }
}

/// Scalar extraction helpers for the 2x2 cross-covariance block.
fn quarter_combination(m4: &Var, rows: [usize; 2], signs: [f64; 2]) -> Result<Var> {
    let tape = m4.tape();
    let picked = m4.gather_rows(&rows)?;
    let coeff = tape.constant(Matrix::from_vec(2, 1, vec![0.5 * signs[0], 0.5 * signs[1]]));
    Ok(picked.mul(&coeff)?.sum())
}

/// Differentiable Procrustes statistic between layouts `p` and `q`
/// (both N x 2): `1 - (sum of singular values of Pc^T Qc)^2 /
/// (tr(Pc^T Pc) tr(Qc^T Qc))` after column-centering both sides.
pub fn procrustes_var(p: &Var, q: &Var) -> Result<Var> {
    if p.rows() != q.rows() || p.cols() != 2 || q.cols() != 2 {
        return Err(Error::ShapeMismatch {
            op: "procrustes",
            lhs: format!("{}x{}", p.rows(), p.cols()),
            rhs: format!("{}x{}", q.rows(), q.cols()),
        });
    }
    let pc = p.sub(&p.col_mean())?;
    let qc = q.sub(&q.col_mean())?;
    let den_p = pc.mul(&pc)?.sum();
    let den_q = qc.mul(&qc)?.sum();
    if den_p.scalar_value() < 1e-30 || den_q.scalar_value() < 1e-30 {
        return Err(Error::DegenerateLayout);
    }
    let m = pc.transpose().matmul(&qc)?.reshape(4, 1)?;
    // 2x2 singular values: s1 + s2 = 2 max(Q, R) with
    // Q = sqrt(E^2 + H^2), R = sqrt(F^2 + G^2)
    let e = quarter_combination(&m, [0, 3], [1.0, 1.0])?;
    let f = quarter_combination(&m, [0, 3], [1.0, -1.0])?;
    let g = quarter_combination(&m, [2, 1], [1.0, 1.0])?;
    let h = quarter_combination(&m, [2, 1], [1.0, -1.0])?;
    let qq = e.mul(&e)?.add(&h.mul(&h)?)?.affine(1.0, SV_EPS).sqrt();
    let rr = f.mul(&f)?.add(&g.mul(&g)?)?.affine(1.0, SV_EPS).sqrt();
    let nuclear = qq.maximum(&rr)?.affine(2.0, 0.0);
    let num = nuclear.mul(&nuclear)?;
    let den = den_p.mul(&den_q)?;
    Ok(num.div(&den)?.affine(-1.0, 1.0))
}

/// Procrustes statistic of two layouts, clamped into [0, 1].
pub fn procrustes(a: &Layout, b: &Layout) -> Result<f64> {
    let tape = Tape::new();
    let p = tape.constant(a.coords().clone());
    let q = tape.constant(b.coords().clone());
    let r2 = procrustes_var(&p, &q)?.scalar_value();
    Ok(r2.clamp(0.0, 1.0))
}

/// Exact number of crossing edge pairs (pairs sharing an endpoint excluded).
pub fn count_crossings(layout: &Layout, edges: &[(usize, usize)]) -> usize {
    let mut count = 0;
    for a in 0..edges.len() {
        let (i, j) = edges[a];
        for &(h, k) in &edges[a + 1..] {
            if i == h || i == k || j == h || j == k {
                continue;
            }
            if aesthete::segments_intersect_points(
                layout.point(i),
                layout.point(j),
                layout.point(h),
                layout.point(k),
            ) {
                count += 1;
            }
        }
    }
    count
}

/// `stress(P) + lambda * H(P)` over the given pair batch; stress is averaged
/// under the default config.
#[allow(clippy::too_many_arguments)]
pub fn combined_loss_var(
    p: &Var,
    d: &DistanceMatrix,
    stress_cfg: &StressConfig,
    model: &AestheteModel,
    edges: &[(usize, usize)],
    pairs: &[(usize, usize)],
    lambda: f64,
    aesthete_cfg: &AestheteLossConfig,
) -> Result<Var> {
    assert!(lambda >= 0.0, "lambda must be nonnegative");
    let stress = stress_var(p, d, stress_cfg)?;
    if lambda == 0.0 {
        return Ok(stress);
    }
    let crossing = aesthete::aesthete_loss_var(model, p, edges, pairs, aesthete_cfg)?;
    stress.add(&crossing.affine(lambda, 0.0))
}
