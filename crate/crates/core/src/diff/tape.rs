//! Tape-based reverse-mode automatic differentiation over dense matrices.
//!
//! A [`Tape`] records every operation whose inputs require gradients; calling
//! [`Var::backward`] on a scalar walks the tape in exact reverse recording
//! order and accumulates adjoints additively. Summation order is fixed, so
//! identical inputs give bit-identical gradients.

use std::cell::RefCell;
use std::rc::Rc;

use crate::diff::matrix::Matrix;
use crate::error::{Error, Result};

/// Per-row bookkeeping saved by the arc-pair normalization op.
#[derive(Clone, Debug)]
struct ArcNorm {
    /// Column index (0..8) of the min/max coordinate on each axis.
    min_x: usize,
    max_x: usize,
    min_y: usize,
    max_y: usize,
    /// True when the square side came from the x range.
    side_from_x: bool,
    side: f64,
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Matmul(usize, usize),
    Add(usize, usize),
    /// `a (r x c) + b (1 x c)` broadcast over rows.
    AddRow(usize, usize),
    Mul(usize, usize),
    /// `a (r x c)` with row i scaled by `b[i]` where `b` is `r x 1`.
    ScaleRows(usize, usize),
    Div(usize, usize),
    Maximum(usize, usize),
    /// `a * mul + add` elementwise.
    Affine(usize, f64, f64),
    Relu(usize),
    LeakyRelu(usize, f64),
    Sigmoid(usize),
    Log(usize),
    Exp(usize),
    Sqrt(usize),
    Sum(usize),
    Mean(usize),
    /// Row-wise sum: `r x c -> r x 1`.
    RowSum(usize),
    /// Column means: `r x c -> 1 x c`.
    ColMean(usize),
    ConcatCols(Vec<usize>),
    GatherRows(usize, Rc<Vec<usize>>),
    Transpose(usize),
    Reshape(usize),
    SegmentSum(usize, Rc<Vec<usize>>),
    SegmentSoftmax(usize, Rc<Vec<usize>>),
    NormalizeArcs(usize, Vec<ArcNorm>),
}

struct Node {
    value: Matrix,
    requires_grad: bool,
    op: Op,
}

#[derive(Default)]
struct TapeInner {
    nodes: Vec<Node>,
}

/// Recording tape. Cheap to clone; clones share the same node list.
#[derive(Clone, Default)]
pub struct Tape {
    inner: Rc<RefCell<TapeInner>>,
}

/// Handle to a value recorded on a tape.
#[derive(Clone)]
pub struct Var {
    tape: Tape,
    id: usize,
}

impl std::fmt::Debug for Var {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (r, c) = self.tape.shape_of(self.id);
        write!(f, "Var(#{}, {}x{})", self.id, r, c)
    }
}

/// Gradients produced by a backward pass, indexed by tape node.
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    /// Gradient of the loss with respect to `v`. Leaves that did not
    /// participate in the loss get a zero gradient.
    pub fn wrt(&self, v: &Var) -> Matrix {
        match &self.grads[v.id] {
            Some(g) => g.clone(),
            None => {
                let (r, c) = self.shapes[v.id];
                Matrix::zeros(r, c)
            }
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.inner.borrow().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: Matrix, requires_grad: bool, op: Op) -> Var {
        let mut inner = self.inner.borrow_mut();
        let id = inner.nodes.len();
        inner.nodes.push(Node {
            value,
            requires_grad,
            op,
        });
        Var {
            tape: self.clone(),
            id,
        }
    }

    /// Constant leaf: participates in forward values but receives no gradient.
    pub fn constant(&self, value: Matrix) -> Var {
        self.push(value, false, Op::Leaf)
    }

    /// Differentiable leaf.
    pub fn leaf(&self, value: Matrix) -> Var {
        self.push(value, true, Op::Leaf)
    }

    fn value_of(&self, id: usize) -> Matrix {
        self.inner.borrow().nodes[id].value.clone()
    }

    fn shape_of(&self, id: usize) -> (usize, usize) {
        let inner = self.inner.borrow();
        let v = &inner.nodes[id].value;
        (v.rows(), v.cols())
    }

    fn requires_grad(&self, id: usize) -> bool {
        self.inner.borrow().nodes[id].requires_grad
    }
}

impl Var {
    pub fn value(&self) -> Matrix {
        self.tape.value_of(self.id)
    }

    /// The tape this var is recorded on.
    pub fn tape(&self) -> Tape {
        self.tape.clone()
    }

    pub fn rows(&self) -> usize {
        self.tape.shape_of(self.id).0
    }

    pub fn cols(&self) -> usize {
        self.tape.shape_of(self.id).1
    }

    /// Value of a 1x1 tensor.
    pub fn scalar_value(&self) -> f64 {
        let v = self.value();
        assert_eq!((v.rows(), v.cols()), (1, 1), "scalar_value on non-scalar");
        v.get(0, 0)
    }

    pub fn requires_grad(&self) -> bool {
        self.tape.requires_grad(self.id)
    }

    fn same_tape(&self, other: &Var) {
        assert!(
            Rc::ptr_eq(&self.tape.inner, &other.tape.inner),
            "vars recorded on different tapes"
        );
    }

    fn push_binary(&self, other: &Var, value: Matrix, op: Op) -> Var {
        self.same_tape(other);
        let rg = self.requires_grad() || other.requires_grad();
        self.tape.push(value, rg, op)
    }

    fn push_unary(&self, value: Matrix, op: Op) -> Var {
        self.tape.push(value, self.requires_grad(), op)
    }

    pub fn matmul(&self, other: &Var) -> Result<Var> {
        let value = self.value().matmul(&other.value())?;
        Ok(self.push_binary(other, value, Op::Matmul(self.id, other.id)))
    }

    pub fn add(&self, other: &Var) -> Result<Var> {
        let a = self.value();
        let b = other.value();
        if b.rows() == 1 && a.rows() > 1 && a.cols() == b.cols() {
            // broadcast over the leading dimension
            let mut out = a.clone();
            for r in 0..out.rows() {
                let row = out.row_mut(r);
                for (o, &x) in row.iter_mut().zip(b.row(0)) {
                    *o += x;
                }
            }
            return Ok(self.push_binary(other, out, Op::AddRow(self.id, other.id)));
        }
        let value = a.add(&b)?;
        Ok(self.push_binary(other, value, Op::Add(self.id, other.id)))
    }

    pub fn sub(&self, other: &Var) -> Result<Var> {
        let negated = other.affine(-1.0, 0.0);
        self.add(&negated)
    }

    pub fn mul(&self, other: &Var) -> Result<Var> {
        let value = self.value().hadamard(&other.value())?;
        Ok(self.push_binary(other, value, Op::Mul(self.id, other.id)))
    }

    /// Scale row i of `self` by the scalar `scales[i]` (`scales` is r x 1).
    pub fn scale_rows(&self, scales: &Var) -> Result<Var> {
        let a = self.value();
        let sv = scales.value();
        let s = s_col(&sv, &a, "scale_rows")?;
        let mut out = a.clone();
        for r in 0..out.rows() {
            let f = s[r];
            for v in out.row_mut(r) {
                *v *= f;
            }
        }
        Ok(self.push_binary(scales, out, Op::ScaleRows(self.id, scales.id)))
    }

    pub fn div(&self, other: &Var) -> Result<Var> {
        let a = self.value();
        let b = other.value();
        if !a.same_shape(&b) {
            return Err(Error::ShapeMismatch {
                op: "div",
                lhs: a.shape_str(),
                rhs: b.shape_str(),
            });
        }
        let mut out = a.clone();
        for (o, &d) in out.as_mut_slice().iter_mut().zip(b.as_slice()) {
            *o /= d;
        }
        Ok(self.push_binary(other, out, Op::Div(self.id, other.id)))
    }

    pub fn maximum(&self, other: &Var) -> Result<Var> {
        let a = self.value();
        let b = other.value();
        if !a.same_shape(&b) {
            return Err(Error::ShapeMismatch {
                op: "maximum",
                lhs: a.shape_str(),
                rhs: b.shape_str(),
            });
        }
        let mut out = a.clone();
        for (o, &x) in out.as_mut_slice().iter_mut().zip(b.as_slice()) {
            if x > *o {
                *o = x;
            }
        }
        Ok(self.push_binary(other, out, Op::Maximum(self.id, other.id)))
    }

    /// `self * mul + add` elementwise.
    pub fn affine(&self, mul: f64, add: f64) -> Var {
        let value = self.value().map(|v| v * mul + add);
        self.push_unary(value, Op::Affine(self.id, mul, add))
    }

    pub fn relu(&self) -> Var {
        let value = self.value().map(|v| v.max(0.0));
        self.push_unary(value, Op::Relu(self.id))
    }

    pub fn leaky_relu(&self, slope: f64) -> Var {
        let value = self.value().map(|v| if v > 0.0 { v } else { slope * v });
        self.push_unary(value, Op::LeakyRelu(self.id, slope))
    }

    pub fn sigmoid(&self) -> Var {
        let value = self.value().map(|v| 1.0 / (1.0 + (-v).exp()));
        self.push_unary(value, Op::Sigmoid(self.id))
    }

    pub fn log(&self) -> Var {
        let value = self.value().map(f64::ln);
        self.push_unary(value, Op::Log(self.id))
    }

    pub fn exp(&self) -> Var {
        let value = self.value().map(f64::exp);
        self.push_unary(value, Op::Exp(self.id))
    }

    pub fn sqrt(&self) -> Var {
        let value = self.value().map(f64::sqrt);
        self.push_unary(value, Op::Sqrt(self.id))
    }

    pub fn sum(&self) -> Var {
        let value = Matrix::scalar(self.value().sum());
        self.push_unary(value, Op::Sum(self.id))
    }

    pub fn mean(&self) -> Var {
        let v = self.value();
        let value = Matrix::scalar(v.sum() / v.len() as f64);
        self.push_unary(value, Op::Mean(self.id))
    }

    /// Row-wise sums: `r x c -> r x 1`.
    pub fn row_sum(&self) -> Var {
        let v = self.value();
        let mut out = Matrix::zeros(v.rows(), 1);
        for r in 0..v.rows() {
            out.set(r, 0, v.row(r).iter().sum());
        }
        self.push_unary(out, Op::RowSum(self.id))
    }

    /// Column means: `r x c -> 1 x c`.
    pub fn col_mean(&self) -> Var {
        let v = self.value();
        let mut out = Matrix::zeros(1, v.cols());
        for r in 0..v.rows() {
            for (o, &x) in out.row_mut(0).iter_mut().zip(v.row(r)) {
                *o += x;
            }
        }
        let inv = 1.0 / v.rows() as f64;
        for o in out.as_mut_slice() {
            *o *= inv;
        }
        self.push_unary(out, Op::ColMean(self.id))
    }

    /// Concatenate along columns; all parts must share the row count.
    pub fn concat_cols(parts: &[Var]) -> Result<Var> {
        assert!(!parts.is_empty(), "concat of zero parts");
        let first = &parts[0];
        let rows = first.rows();
        let mut cols = 0;
        for p in parts {
            first.same_tape(p);
            if p.rows() != rows {
                return Err(Error::ShapeMismatch {
                    op: "concat",
                    lhs: format!("{}x{}", rows, cols),
                    rhs: format!("{}x{}", p.rows(), p.cols()),
                });
            }
            cols += p.cols();
        }
        let values: Vec<Matrix> = parts.iter().map(|p| p.value()).collect();
        let mut out = Matrix::zeros(rows, cols);
        for r in 0..rows {
            let orow = out.row_mut(r);
            let mut off = 0;
            for v in &values {
                orow[off..off + v.cols()].copy_from_slice(v.row(r));
                off += v.cols();
            }
        }
        let rg = parts.iter().any(|p| p.requires_grad());
        let ids = parts.iter().map(|p| p.id).collect();
        Ok(first.tape.push(out, rg, Op::ConcatCols(ids)))
    }

    /// Select rows by index, duplicates allowed.
    pub fn gather_rows(&self, idx: &[usize]) -> Result<Var> {
        let v = self.value();
        for &i in idx {
            if i >= v.rows() {
                return Err(Error::InvalidArgument(format!(
                    "gather_rows index {} out of range for {} rows",
                    i,
                    v.rows()
                )));
            }
        }
        let mut out = Matrix::zeros(idx.len(), v.cols());
        for (r, &i) in idx.iter().enumerate() {
            out.row_mut(r).copy_from_slice(v.row(i));
        }
        Ok(self.push_unary(out, Op::GatherRows(self.id, Rc::new(idx.to_vec()))))
    }

    pub fn transpose(&self) -> Var {
        let value = self.value().transpose();
        self.push_unary(value, Op::Transpose(self.id))
    }

    pub fn reshape(&self, rows: usize, cols: usize) -> Result<Var> {
        let v = self.value();
        if rows * cols != v.len() {
            return Err(Error::ShapeMismatch {
                op: "reshape",
                lhs: v.shape_str(),
                rhs: format!("{}x{}", rows, cols),
            });
        }
        let value = Matrix::from_vec(rows, cols, v.into_vec());
        Ok(self.push_unary(value, Op::Reshape(self.id)))
    }

    /// Sum rows into `n_segments` buckets: `out[s] = sum over i with ids[i] == s`.
    pub fn segment_sum(&self, ids: &[usize], n_segments: usize) -> Result<Var> {
        let v = self.value();
        check_segments(ids, v.rows(), n_segments, "segment_sum")?;
        let mut out = Matrix::zeros(n_segments, v.cols());
        for (i, &s) in ids.iter().enumerate() {
            let src = v.row(i);
            let dst = out.row_mut(s);
            for (d, &x) in dst.iter_mut().zip(src) {
                *d += x;
            }
        }
        Ok(self.push_unary(out, Op::SegmentSum(self.id, Rc::new(ids.to_vec()))))
    }

    /// Softmax of an `m x 1` score column within each segment.
    pub fn softmax_over_segments(&self, ids: &[usize], n_segments: usize) -> Result<Var> {
        let v = self.value();
        if v.cols() != 1 {
            return Err(Error::ShapeMismatch {
                op: "softmax_over_segments",
                lhs: v.shape_str(),
                rhs: "m x 1".into(),
            });
        }
        check_segments(ids, v.rows(), n_segments, "softmax_over_segments")?;
        let mut seg_max = vec![f64::NEG_INFINITY; n_segments];
        for (i, &s) in ids.iter().enumerate() {
            seg_max[s] = seg_max[s].max(v.get(i, 0));
        }
        let mut out = Matrix::zeros(v.rows(), 1);
        let mut seg_sum = vec![0.0; n_segments];
        for (i, &s) in ids.iter().enumerate() {
            let e = (v.get(i, 0) - seg_max[s]).exp();
            out.set(i, 0, e);
            seg_sum[s] += e;
        }
        for (i, &s) in ids.iter().enumerate() {
            out.set(i, 0, out.get(i, 0) / seg_sum[s]);
        }
        Ok(self.push_unary(out, Op::SegmentSoftmax(self.id, Rc::new(ids.to_vec()))))
    }

    /// Min-max normalize each row of an `m x 8` arc pair into its own bounding
    /// square: columns {0,2,4,6} are x coordinates, {1,3,5,7} are y. The
    /// shorter axis is centered, so a degenerate pair maps to 0.5 everywhere.
    pub fn normalize_arc_pairs(&self) -> Result<Var> {
        let v = self.value();
        if v.cols() != 8 {
            return Err(Error::ShapeMismatch {
                op: "normalize_arc_pairs",
                lhs: v.shape_str(),
                rhs: "m x 8".into(),
            });
        }
        let mut out = Matrix::zeros(v.rows(), 8);
        let mut infos = Vec::with_capacity(v.rows());
        for r in 0..v.rows() {
            let row = v.row(r);
            let (min_x, max_x) = extreme_cols(row, &[0, 2, 4, 6]);
            let (min_y, max_y) = extreme_cols(row, &[1, 3, 5, 7]);
            let rx = row[max_x] - row[min_x];
            let ry = row[max_y] - row[min_y];
            let side_from_x = rx >= ry;
            let side = if side_from_x { rx } else { ry };
            let orow = out.row_mut(r);
            if side == 0.0 {
                for o in orow.iter_mut() {
                    *o = 0.5;
                }
            } else {
                let off_x = 0.5 * (side - rx);
                let off_y = 0.5 * (side - ry);
                for c in 0..8 {
                    orow[c] = if c % 2 == 0 {
                        (row[c] - row[min_x] + off_x) / side
                    } else {
                        (row[c] - row[min_y] + off_y) / side
                    };
                }
            }
            infos.push(ArcNorm {
                min_x,
                max_x,
                min_y,
                max_y,
                side_from_x,
                side,
            });
        }
        Ok(self.push_unary(out, Op::NormalizeArcs(self.id, infos)))
    }

    /// Reverse pass from a scalar loss. Every requires-grad node reachable
    /// from the loss receives its adjoint; query results with
    /// [`Gradients::wrt`].
    pub fn backward(&self) -> Result<Gradients> {
        let inner = self.tape.inner.borrow();
        let nodes = &inner.nodes;
        let loss = &nodes[self.id].value;
        if loss.rows() != 1 || loss.cols() != 1 {
            return Err(Error::NonScalarLoss {
                rows: loss.rows(),
                cols: loss.cols(),
            });
        }
        let mut grads: Vec<Option<Matrix>> = vec![None; nodes.len()];
        grads[self.id] = Some(Matrix::scalar(1.0));

        for id in (0..=self.id).rev() {
            if !nodes[id].requires_grad {
                continue;
            }
            let Some(g) = grads[id].take() else { continue };
            propagate(nodes, &mut grads, id, &g);
            grads[id] = Some(g);
        }

        let shapes = nodes
            .iter()
            .map(|n| (n.value.rows(), n.value.cols()))
            .collect();
        Ok(Gradients { grads, shapes })
    }
}

fn s_col<'a>(s: &'a Matrix, a: &Matrix, op: &'static str) -> Result<&'a [f64]> {
    if s.cols() != 1 || s.rows() != a.rows() {
        return Err(Error::ShapeMismatch {
            op,
            lhs: a.shape_str(),
            rhs: s.shape_str(),
        });
    }
    Ok(s.as_slice())
}

fn check_segments(ids: &[usize], rows: usize, n_segments: usize, op: &'static str) -> Result<()> {
    if ids.len() != rows {
        return Err(Error::ShapeMismatch {
            op,
            lhs: format!("{} rows", rows),
            rhs: format!("{} segment ids", ids.len()),
        });
    }
    if let Some(&bad) = ids.iter().find(|&&s| s >= n_segments) {
        return Err(Error::InvalidArgument(format!(
            "{op}: segment id {bad} out of range 0..{n_segments}"
        )));
    }
    Ok(())
}

/// Min and max column index among `cols`, earliest index winning ties.
fn extreme_cols(row: &[f64], cols: &[usize]) -> (usize, usize) {
    let mut min_c = cols[0];
    let mut max_c = cols[0];
    for &c in &cols[1..] {
        if row[c] < row[min_c] {
            min_c = c;
        }
        if row[c] > row[max_c] {
            max_c = c;
        }
    }
    (min_c, max_c)
}

fn add_grad(grads: &mut [Option<Matrix>], id: usize, delta: Matrix) {
    match &mut grads[id] {
        Some(existing) => existing.add_scaled_assign(&delta, 1.0),
        slot @ None => *slot = Some(delta),
    }
}

fn wants(nodes: &[Node], id: usize) -> bool {
    nodes[id].requires_grad
}

/// Push the adjoint `g` of node `id` into its parents.
fn propagate(nodes: &[Node], grads: &mut Vec<Option<Matrix>>, id: usize, g: &Matrix) {
    match &nodes[id].op {
        Op::Leaf => {}
        Op::Matmul(a, b) => {
            if wants(nodes, *a) {
                let da = g.matmul_nt(&nodes[*b].value).expect("matmul backward");
                add_grad(grads, *a, da);
            }
            if wants(nodes, *b) {
                let db = nodes[*a].value.matmul_tn(g).expect("matmul backward");
                add_grad(grads, *b, db);
            }
        }
        Op::Add(a, b) => {
            if wants(nodes, *a) {
                add_grad(grads, *a, g.clone());
            }
            if wants(nodes, *b) {
                add_grad(grads, *b, g.clone());
            }
        }
        Op::AddRow(a, b) => {
            if wants(nodes, *a) {
                add_grad(grads, *a, g.clone());
            }
            if wants(nodes, *b) {
                let mut db = Matrix::zeros(1, g.cols());
                for r in 0..g.rows() {
                    for (d, &x) in db.row_mut(0).iter_mut().zip(g.row(r)) {
                        *d += x;
                    }
                }
                add_grad(grads, *b, db);
            }
        }
        Op::Mul(a, b) => {
            if wants(nodes, *a) {
                add_grad(grads, *a, g.hadamard(&nodes[*b].value).expect("mul backward"));
            }
            if wants(nodes, *b) {
                add_grad(grads, *b, g.hadamard(&nodes[*a].value).expect("mul backward"));
            }
        }
        Op::ScaleRows(a, s) => {
            let scales = &nodes[*s].value;
            if wants(nodes, *a) {
                let mut da = g.clone();
                for r in 0..da.rows() {
                    let f = scales.get(r, 0);
                    for v in da.row_mut(r) {
                        *v *= f;
                    }
                }
                add_grad(grads, *a, da);
            }
            if wants(nodes, *s) {
                let av = &nodes[*a].value;
                let mut ds = Matrix::zeros(av.rows(), 1);
                for r in 0..av.rows() {
                    let dot: f64 = g.row(r).iter().zip(av.row(r)).map(|(&x, &y)| x * y).sum();
                    ds.set(r, 0, dot);
                }
                add_grad(grads, *s, ds);
            }
        }
        Op::Div(a, b) => {
            let bv = &nodes[*b].value;
            if wants(nodes, *a) {
                let mut da = g.clone();
                for (v, &d) in da.as_mut_slice().iter_mut().zip(bv.as_slice()) {
                    *v /= d;
                }
                add_grad(grads, *a, da);
            }
            if wants(nodes, *b) {
                let av = &nodes[*a].value;
                let mut db = g.clone();
                for ((v, &x), &d) in db
                    .as_mut_slice()
                    .iter_mut()
                    .zip(av.as_slice())
                    .zip(bv.as_slice())
                {
                    *v *= -x / (d * d);
                }
                add_grad(grads, *b, db);
            }
        }
        Op::Maximum(a, b) => {
            let av = &nodes[*a].value;
            let bv = &nodes[*b].value;
            // ties route to the first argument
            if wants(nodes, *a) {
                let mut da = g.clone();
                for ((v, &x), &y) in da
                    .as_mut_slice()
                    .iter_mut()
                    .zip(av.as_slice())
                    .zip(bv.as_slice())
                {
                    if x < y {
                        *v = 0.0;
                    }
                }
                add_grad(grads, *a, da);
            }
            if wants(nodes, *b) {
                let mut db = g.clone();
                for ((v, &x), &y) in db
                    .as_mut_slice()
                    .iter_mut()
                    .zip(av.as_slice())
                    .zip(bv.as_slice())
                {
                    if x >= y {
                        *v = 0.0;
                    }
                }
                add_grad(grads, *b, db);
            }
        }
        Op::Affine(a, mul, _) => {
            if wants(nodes, *a) {
                add_grad(grads, *a, g.scale(*mul));
            }
        }
        Op::Relu(a) => {
            if wants(nodes, *a) {
                let av = &nodes[*a].value;
                let mut da = g.clone();
                for (v, &x) in da.as_mut_slice().iter_mut().zip(av.as_slice()) {
                    if x <= 0.0 {
                        *v = 0.0;
                    }
                }
                add_grad(grads, *a, da);
            }
        }
        Op::LeakyRelu(a, slope) => {
            if wants(nodes, *a) {
                let av = &nodes[*a].value;
                let mut da = g.clone();
                for (v, &x) in da.as_mut_slice().iter_mut().zip(av.as_slice()) {
                    if x <= 0.0 {
                        *v *= slope;
                    }
                }
                add_grad(grads, *a, da);
            }
        }
        Op::Sigmoid(a) => {
            if wants(nodes, *a) {
                let y = &nodes[id].value;
                let mut da = g.clone();
                for (v, &s) in da.as_mut_slice().iter_mut().zip(y.as_slice()) {
                    *v *= s * (1.0 - s);
                }
                add_grad(grads, *a, da);
            }
        }
        Op::Log(a) => {
            if wants(nodes, *a) {
                let av = &nodes[*a].value;
                let mut da = g.clone();
                for (v, &x) in da.as_mut_slice().iter_mut().zip(av.as_slice()) {
                    *v /= x;
                }
                add_grad(grads, *a, da);
            }
        }
        Op::Exp(a) => {
            if wants(nodes, *a) {
                let y = &nodes[id].value;
                add_grad(grads, *a, g.hadamard(y).expect("exp backward"));
            }
        }
        Op::Sqrt(a) => {
            if wants(nodes, *a) {
                let y = &nodes[id].value;
                let mut da = g.clone();
                for (v, &s) in da.as_mut_slice().iter_mut().zip(y.as_slice()) {
                    *v *= 0.5 / s;
                }
                add_grad(grads, *a, da);
            }
        }
        Op::Sum(a) => {
            if wants(nodes, *a) {
                let av = &nodes[*a].value;
                let go = g.get(0, 0);
                add_grad(grads, *a, Matrix::zeros(av.rows(), av.cols()).map(|_| go));
            }
        }
        Op::Mean(a) => {
            if wants(nodes, *a) {
                let av = &nodes[*a].value;
                let go = g.get(0, 0) / av.len() as f64;
                add_grad(grads, *a, Matrix::zeros(av.rows(), av.cols()).map(|_| go));
            }
        }
        Op::RowSum(a) => {
            if wants(nodes, *a) {
                let av = &nodes[*a].value;
                let mut da = Matrix::zeros(av.rows(), av.cols());
                for r in 0..av.rows() {
                    let go = g.get(r, 0);
                    for v in da.row_mut(r) {
                        *v = go;
                    }
                }
                add_grad(grads, *a, da);
            }
        }
        Op::ColMean(a) => {
            if wants(nodes, *a) {
                let av = &nodes[*a].value;
                let inv = 1.0 / av.rows() as f64;
                let mut da = Matrix::zeros(av.rows(), av.cols());
                for r in 0..av.rows() {
                    for (v, &x) in da.row_mut(r).iter_mut().zip(g.row(0)) {
                        *v = x * inv;
                    }
                }
                add_grad(grads, *a, da);
            }
        }
        Op::ConcatCols(parts) => {
            let mut off = 0;
            for &p in parts {
                let pc = nodes[p].value.cols();
                if wants(nodes, p) {
                    let mut dp = Matrix::zeros(g.rows(), pc);
                    for r in 0..g.rows() {
                        dp.row_mut(r).copy_from_slice(&g.row(r)[off..off + pc]);
                    }
                    add_grad(grads, p, dp);
                }
                off += pc;
            }
        }
        Op::GatherRows(a, idx) => {
            if wants(nodes, *a) {
                let av = &nodes[*a].value;
                let mut da = Matrix::zeros(av.rows(), av.cols());
                for (r, &i) in idx.iter().enumerate() {
                    let src = g.row(r);
                    let dst = da.row_mut(i);
                    for (d, &x) in dst.iter_mut().zip(src) {
                        *d += x;
                    }
                }
                add_grad(grads, *a, da);
            }
        }
        Op::Transpose(a) => {
            if wants(nodes, *a) {
                add_grad(grads, *a, g.transpose());
            }
        }
        Op::Reshape(a) => {
            if wants(nodes, *a) {
                let av = &nodes[*a].value;
                let da = Matrix::from_vec(av.rows(), av.cols(), g.clone().into_vec());
                add_grad(grads, *a, da);
            }
        }
        Op::SegmentSum(a, ids) => {
            if wants(nodes, *a) {
                let av = &nodes[*a].value;
                let mut da = Matrix::zeros(av.rows(), av.cols());
                for (i, &s) in ids.iter().enumerate() {
                    da.row_mut(i).copy_from_slice(g.row(s));
                }
                add_grad(grads, *a, da);
            }
        }
        Op::SegmentSoftmax(a, ids) => {
            if wants(nodes, *a) {
                let y = &nodes[id].value;
                let n_seg = ids.iter().copied().max().map_or(0, |m| m + 1);
                let mut seg_dot = vec![0.0; n_seg];
                for (i, &s) in ids.iter().enumerate() {
                    seg_dot[s] += g.get(i, 0) * y.get(i, 0);
                }
                let mut da = Matrix::zeros(y.rows(), 1);
                for (i, &s) in ids.iter().enumerate() {
                    da.set(i, 0, y.get(i, 0) * (g.get(i, 0) - seg_dot[s]));
                }
                add_grad(grads, *a, da);
            }
        }
        Op::NormalizeArcs(a, infos) => {
            if wants(nodes, *a) {
                let av = &nodes[*a].value;
                let y = &nodes[id].value;
                let mut da = Matrix::zeros(av.rows(), 8);
                for (r, info) in infos.iter().enumerate() {
                    if info.side == 0.0 {
                        continue;
                    }
                    let s = info.side;
                    let grow = g.row(r);
                    let yrow = y.row(r);
                    let drow = da.row_mut(r);
                    // x' = (x - mn + 0.5 s - 0.5 range) / s, per axis; gradients
                    // accumulate into the coordinate, its axis extremes, and the
                    // extremes of the side-defining axis.
                    let (side_min, side_max) = if info.side_from_x {
                        (info.min_x, info.max_x)
                    } else {
                        (info.min_y, info.max_y)
                    };
                    for c in 0..8 {
                        let gc = grow[c];
                        if gc == 0.0 {
                            continue;
                        }
                        let (axis_min, axis_max) = if c % 2 == 0 {
                            (info.min_x, info.max_x)
                        } else {
                            (info.min_y, info.max_y)
                        };
                        drow[c] += gc / s;
                        drow[axis_min] -= gc / s;
                        // -0.5 * d(range_axis) / s
                        drow[axis_max] -= 0.5 * gc / s;
                        drow[axis_min] += 0.5 * gc / s;
                        // ds terms: d(u/s) has +0.5 ds / s - u ds / s^2, and
                        // u / s is the stored output.
                        let w = gc * (0.5 / s - yrow[c] / s);
                        drow[side_max] += w;
                        drow[side_min] -= w;
                    }
                }
                add_grad(grads, *a, da);
            }
        }
    }
}
