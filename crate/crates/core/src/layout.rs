//! 2D node layouts: the optimization variable of every drawing method.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diff::Matrix;
use crate::graph::Graph;

/// An N x 2 matrix of node coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    coords: Matrix,
}

impl Layout {
    pub fn new(coords: Matrix) -> Layout {
        assert_eq!(coords.cols(), 2, "layouts are N x 2");
        Layout { coords }
    }

    pub fn from_points(points: &[(f64, f64)]) -> Layout {
        let mut m = Matrix::zeros(points.len(), 2);
        for (i, &(x, y)) in points.iter().enumerate() {
            m.set(i, 0, x);
            m.set(i, 1, y);
        }
        Layout { coords: m }
    }

    /// Coordinates i.i.d. uniform in [0, 1]^2, deterministic per seed.
    pub fn random(g: &Graph, seed: u64) -> Layout {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Matrix::zeros(g.node_count(), 2);
        for i in 0..g.node_count() {
            let x = rng.gen_range(0.0..1.0);
            let y = rng.gen_range(0.0..1.0);
            m.set(i, 0, x);
            m.set(i, 1, y);
        }
        Layout { coords: m }
    }

    pub fn n(&self) -> usize {
        self.coords.rows()
    }

    pub fn point(&self, i: usize) -> (f64, f64) {
        (self.coords.get(i, 0), self.coords.get(i, 1))
    }

    pub fn coords(&self) -> &Matrix {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut Matrix {
        &mut self.coords
    }

    pub fn into_coords(self) -> Matrix {
        self.coords
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        (0..self.n()).map(|i| self.point(i)).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.coords.all_finite()
    }

    /// Axis-aligned bounding box as ((min_x, min_y), (max_x, max_y)).
    pub fn bounding_box(&self) -> ((f64, f64), (f64, f64)) {
        let mut min = (f64::INFINITY, f64::INFINITY);
        let mut max = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for i in 0..self.n() {
            let (x, y) = self.point(i);
            min.0 = min.0.min(x);
            min.1 = min.1.min(y);
            max.0 = max.0.max(x);
            max.1 = max.1.max(y);
        }
        (min, max)
    }
}
