//! The edge-crossing aesthete: an exact intersection predicate, a balanced
//! synthetic dataset, an 8-100-100-1 MLP trained to recognize crossings, and
//! the differentiable non-intersection loss it induces over a layout.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diff::{AdamConfig, AdamState, Matrix, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Two arcs as eight reals: `[p_i, p_j, p_h, p_k]` for arcs
/// `(p_i, p_j)` and `(p_h, p_k)`.
pub type ArcPair = [f64; 8];

/// Guard inside `log(1 - y)`; the sigmoid can saturate to 1.0 in doubles.
pub const LOG_EPS: f64 = 1e-12;

type Point = (f64, f64);

/// Sign of the cross product (q - p) x (r - p): counterclockwise positive.
fn orientation(p: Point, q: Point, r: Point) -> i8 {
    let v = (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0);
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Whether q lies on the closed segment p-r, given the three are collinear.
fn on_segment(p: Point, q: Point, r: Point) -> bool {
    q.0 <= p.0.max(r.0) && q.0 >= p.0.min(r.0) && q.1 <= p.1.max(r.1) && q.1 >= p.1.min(r.1)
}

/// True iff the closed segments a1-a2 and b1-b2 share at least one point.
/// Pure orientation tests: collinear overlap and shared endpoints count.
pub fn segments_intersect_points(a1: Point, a2: Point, b1: Point, b2: Point) -> bool {
    let o1 = orientation(a1, a2, b1);
    let o2 = orientation(a1, a2, b2);
    let o3 = orientation(b1, b2, a1);
    let o4 = orientation(b1, b2, a2);

    (o1 != o2 && o3 != o4)
        || (o1 == 0 && on_segment(a1, b1, a2))
        || (o2 == 0 && on_segment(a1, b2, a2))
        || (o3 == 0 && on_segment(b1, a1, b2))
        || (o4 == 0 && on_segment(b1, a2, b2))
}

pub fn segments_intersect(pair: &ArcPair) -> bool {
    segments_intersect_points(
        (pair[0], pair[1]),
        (pair[2], pair[3]),
        (pair[4], pair[5]),
        (pair[6], pair[7]),
    )
}

/// A labeled arc pair; the target is the exact oracle's verdict.
#[derive(Clone, Debug)]
pub struct CrossingExample {
    pub input: ArcPair,
    pub target: bool,
}

/// Balanced dataset of arc pairs with coordinates uniform in [0, 1]:
/// rejection-sampled until each class holds exactly `size / 2` examples.
pub fn build_crossing_dataset(size: usize, seed: u64) -> Vec<CrossingExample> {
    assert!(size % 2 == 0, "dataset size must be even");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = size / 2;
    let mut positives = 0usize;
    let mut negatives = 0usize;
    let mut out = Vec::with_capacity(size);
    while out.len() < size {
        let mut input = [0.0; 8];
        for v in &mut input {
            *v = rng.gen_range(0.0..1.0);
        }
        let target = segments_intersect(&input);
        let quota = if target { &mut positives } else { &mut negatives };
        if *quota < half {
            *quota += 1;
            out.push(CrossingExample { input, target });
        }
    }
    out
}

pub const HIDDEN_WIDTH: usize = 100;

/// MLP scoring the crossing probability of an arc pair: layers
/// 8 -> 100 -> 100 -> 1, relu activations, sigmoid output.
#[derive(Clone, Debug)]
pub struct AestheteModel {
    pub w1: Matrix,
    pub b1: Matrix,
    pub w2: Matrix,
    pub b2: Matrix,
    pub w3: Matrix,
    pub b3: Matrix,
}

impl AestheteModel {
    /// Glorot-uniform weights, zero biases, deterministic per seed.
    pub fn init(seed: u64) -> AestheteModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AestheteModel {
            w1: Matrix::glorot(8, HIDDEN_WIDTH, &mut rng),
            b1: Matrix::zeros(1, HIDDEN_WIDTH),
            w2: Matrix::glorot(HIDDEN_WIDTH, HIDDEN_WIDTH, &mut rng),
            b2: Matrix::zeros(1, HIDDEN_WIDTH),
            w3: Matrix::glorot(HIDDEN_WIDTH, 1, &mut rng),
            b3: Matrix::zeros(1, 1),
        }
    }

    /// Parameters in checkpoint order.
    pub fn params(&self) -> Vec<&Matrix> {
        vec![&self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Matrix> {
        vec![
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.w3,
            &mut self.b3,
        ]
    }

    pub fn from_params(params: Vec<Matrix>) -> Result<AestheteModel> {
        let mut it = params.into_iter();
        let mut next = |what: &str| {
            it.next()
                .ok_or_else(|| Error::Checkpoint(format!("missing parameter {what}")))
        };
        Ok(AestheteModel {
            w1: next("w1")?,
            b1: next("b1")?,
            w2: next("w2")?,
            b2: next("b2")?,
            w3: next("w3")?,
            b3: next("b3")?,
        })
    }

    /// Forward pass from already-recorded parameter vars; `x` is `m x 8`.
    pub fn forward_from_vars(params: &[Var], x: &Var, normalize: bool) -> Result<Var> {
        let x = if normalize { x.normalize_arc_pairs()? } else { x.clone() };
        let h1 = x.matmul(&params[0])?.add(&params[1])?.relu();
        let h2 = h1.matmul(&params[2])?.add(&params[3])?.relu();
        let logits = h2.matmul(&params[4])?.add(&params[5])?;
        Ok(logits.sigmoid())
    }

    /// Record parameters as constants and score a batch of pairs on `tape`;
    /// gradients flow only into `x`.
    pub fn score_var(&self, tape: &Tape, x: &Var, normalize: bool) -> Result<Var> {
        let params: Vec<Var> = self.params().into_iter().map(|p| tape.constant(p.clone())).collect();
        Self::forward_from_vars(&params, x, normalize)
    }

    /// Crossing probability of a single pair.
    pub fn score_pair(&self, pair: &ArcPair, normalize: bool) -> f64 {
        let tape = Tape::new();
        let x = tape.constant(Matrix::from_vec(1, 8, pair.to_vec()));
        self.score_var(&tape, &x, normalize)
            .expect("fixed shapes")
            .scalar_value()
    }

    /// Crossing probabilities for a batch given as an `m x 8` matrix.
    pub fn score_batch(&self, inputs: &Matrix, normalize: bool) -> Result<Matrix> {
        let tape = Tape::new();
        let x = tape.constant(inputs.clone());
        Ok(self.score_var(&tape, &x, normalize)?.value())
    }
}

#[derive(Clone, Debug)]
pub struct AestheteTrainConfig {
    pub batch_size: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for AestheteTrainConfig {
    fn default() -> Self {
        AestheteTrainConfig {
            batch_size: 256,
            lr: 1e-3,
            epochs: 20,
            seed: 0,
        }
    }
}

fn examples_to_matrices(examples: &[CrossingExample]) -> (Matrix, Matrix) {
    let mut x = Matrix::zeros(examples.len(), 8);
    let mut t = Matrix::zeros(examples.len(), 1);
    for (i, ex) in examples.iter().enumerate() {
        x.row_mut(i).copy_from_slice(&ex.input);
        t.set(i, 0, f64::from(ex.target));
    }
    (x, t)
}

/// Binary cross-entropy of predictions `y` against constant targets `t`.
fn bce_loss(y: &Var, t: &Var, one_minus_t: &Var) -> Result<Var> {
    let log_y = y.affine(1.0, LOG_EPS).log();
    let log_not_y = y.affine(-1.0, 1.0 + LOG_EPS).log();
    let pos = t.mul(&log_y)?;
    let neg = one_minus_t.mul(&log_not_y)?;
    Ok(pos.add(&neg)?.mean().affine(-1.0, 0.0))
}

/// Train the crossing classifier with Adam on mini-batches.
/// Inputs enter the MLP raw; coordinates are already in [0, 1].
pub fn train_aesthete(
    examples: &[CrossingExample],
    cfg: &AestheteTrainConfig,
) -> Result<AestheteModel> {
    assert!(!examples.is_empty(), "empty training set");
    let mut model = AestheteModel::init(cfg.seed);
    let mut adam = AdamState::for_params(AdamConfig::with_lr(cfg.lr), &model.params());
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut step = 0usize;
    for _epoch in 0..cfg.epochs {
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<CrossingExample> =
                chunk.iter().map(|&i| examples[i].clone()).collect();
            let (x, t) = examples_to_matrices(&batch);
            let tape = Tape::new();
            let params: Vec<Var> =
                model.params().into_iter().map(|p| tape.leaf(p.clone())).collect();
            let xv = tape.constant(x);
            let tv = tape.constant(t.clone());
            let not_tv = tape.constant(t.map(|v| 1.0 - v));
            let y = AestheteModel::forward_from_vars(&params, &xv, false)?;
            let loss = bce_loss(&y, &tv, &not_tv)?;
            step += 1;
            if !loss.scalar_value().is_finite() {
                return Err(Error::NonFiniteLoss { step });
            }
            let grads_map = loss.backward()?;
            let grads: Vec<Matrix> = params.iter().map(|p| grads_map.wrt(p)).collect();
            adam.step(&mut model.params_mut(), &grads);
        }
    }
    Ok(model)
}

/// Fraction of examples classified correctly at the 0.5 threshold.
pub fn accuracy(model: &AestheteModel, examples: &[CrossingExample]) -> f64 {
    let mut correct = 0usize;
    for chunk in examples.chunks(8192) {
        let (x, _) = examples_to_matrices(chunk);
        let y = model.score_batch(&x, false).expect("fixed shapes");
        for (i, ex) in chunk.iter().enumerate() {
            if (y.get(i, 0) > 0.5) == ex.target {
                correct += 1;
            }
        }
    }
    correct as f64 / examples.len() as f64
}

/// Unordered pairs of edge indices that do not share an endpoint; only these
/// enter the drawing loss.
pub fn disjoint_edge_pairs(g: &Graph) -> Vec<(usize, usize)> {
    let edges = g.edges();
    let mut pairs = Vec::new();
    for a in 0..edges.len() {
        let (i, j) = edges[a];
        for (offset, &(h, k)) in edges[a + 1..].iter().enumerate() {
            if i != h && i != k && j != h && j != k {
                pairs.push((a, a + 1 + offset));
            }
        }
    }
    pairs
}

#[derive(Clone, Copy, Debug)]
pub struct AestheteLossConfig {
    /// Min-max normalize each pair into its bounding square before scoring,
    /// with gradients flowing through; off reproduces raw-coordinate scoring.
    pub normalize_inputs: bool,
}

impl Default for AestheteLossConfig {
    fn default() -> Self {
        AestheteLossConfig {
            normalize_inputs: true,
        }
    }
}

/// Build the `m x 8` arc-pair tensor for the given edge-index pairs by
/// gathering rows of the layout variable `p`.
pub fn arc_pair_inputs(p: &Var, edges: &[(usize, usize)], pairs: &[(usize, usize)]) -> Result<Var> {
    let mut ii = Vec::with_capacity(pairs.len());
    let mut jj = Vec::with_capacity(pairs.len());
    let mut hh = Vec::with_capacity(pairs.len());
    let mut kk = Vec::with_capacity(pairs.len());
    for &(a, b) in pairs {
        let (i, j) = edges[a];
        let (h, k) = edges[b];
        ii.push(i);
        jj.push(j);
        hh.push(h);
        kk.push(k);
    }
    Var::concat_cols(&[
        p.gather_rows(&ii)?,
        p.gather_rows(&jj)?,
        p.gather_rows(&hh)?,
        p.gather_rows(&kk)?,
    ])
}

/// Sum over the pair batch of `-log(1 - y + eps)`: cross-entropy toward the
/// no-intersection target, differentiable into the participating layout rows.
pub fn aesthete_loss_var(
    model: &AestheteModel,
    p: &Var,
    edges: &[(usize, usize)],
    pairs: &[(usize, usize)],
    cfg: &AestheteLossConfig,
) -> Result<Var> {
    if pairs.is_empty() {
        // constant zero that still depends on p so backward finds a path
        return Ok(p.affine(0.0, 0.0).sum());
    }
    let x = arc_pair_inputs(p, edges, pairs)?;
    let tape = p.tape();
    let params: Vec<Var> = model
        .params()
        .into_iter()
        .map(|m| tape.constant(m.clone()))
        .collect();
    let y = AestheteModel::forward_from_vars(&params, &x, cfg.normalize_inputs)?;
    Ok(y.affine(-1.0, 1.0 + LOG_EPS).log().sum().affine(-1.0, 0.0))
}
