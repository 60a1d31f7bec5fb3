//! Central finite-difference gradient verification.
//!
//! Every differentiable path in the engine is expected to agree with central
//! differences to 1e-4 relative error at step 1e-5 in double precision. The
//! checker is exposed as library code so the `gradcheck` CLI command can run
//! the full suite outside the test harness.

use crate::diff::matrix::Matrix;

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-4;

/// Maximum relative disagreement between the analytic gradients returned by
/// `eval` and central finite differences of its scalar output.
///
/// `eval` maps the current inputs to the loss value and one analytic gradient
/// per input. Relative error uses `max(|analytic|, |fd|, 1e-3)` as the
/// denominator so near-zero gradients are compared absolutely.
pub fn max_relative_error<F>(inputs: &[Matrix], eval: F) -> f64
where
    F: Fn(&[Matrix]) -> (f64, Vec<Matrix>),
{
    let (_, analytic) = eval(inputs);
    assert_eq!(analytic.len(), inputs.len(), "one gradient per input");
    let mut worst = 0.0f64;
    let mut probe: Vec<Matrix> = inputs.to_vec();
    for (which, input) in inputs.iter().enumerate() {
        for i in 0..input.len() {
            let orig = probe[which].as_slice()[i];
            probe[which].as_mut_slice()[i] = orig + FD_STEP;
            let (up, _) = eval(&probe);
            probe[which].as_mut_slice()[i] = orig - FD_STEP;
            let (down, _) = eval(&probe);
            probe[which].as_mut_slice()[i] = orig;
            let fd = (up - down) / (2.0 * FD_STEP);
            let a = analytic[which].as_slice()[i];
            let denom = a.abs().max(fd.abs()).max(1e-3);
            worst = worst.max((a - fd).abs() / denom);
        }
    }
    worst
}

/// One named gradient check outcome.
#[derive(Clone, Debug)]
pub struct CheckReport {
    pub name: String,
    pub max_rel_err: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err <= FD_TOLERANCE
    }
}

pub fn run_check<F>(name: &str, inputs: &[Matrix], eval: F) -> CheckReport
where
    F: Fn(&[Matrix]) -> (f64, Vec<Matrix>),
{
    CheckReport {
        name: name.to_string(),
        max_rel_err: max_relative_error(inputs, eval),
    }
}
