use super::{Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Compares reverse-mode gradients of a scalar function against central
/// finite differences in 64-bit mode.
///
/// `f` records its computation on the given tape starting from the input
/// variable. Returns `max_i |analytic_i - numeric_i| / max(1, |analytic_i|)`.
/// Points closer than `10·epsilon` to the rectifier kink are rejected.
pub fn gradcheck<F>(f: F, point: &Tensor<f64>, epsilon: f64) -> Result<f64>
where
    F: Fn(&mut Tape<f64>, Var) -> Result<Var>,
{
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::arg("epsilon must be positive"));
    }
    let mut tape = Tape::new();
    let x = tape.param(point.clone());
    let out = f(&mut tape, x)?;
    if tape.value(out).numel() != 1 {
        return Err(Error::arg("gradcheck needs a scalar function"));
    }
    if !tape.value(out).is_finite() {
        return Err(Error::Evaluation(
            "function value is not finite at the base point".into(),
        ));
    }
    if let Some(m) = tape.min_rectifier_input() {
        if m <= 10.0 * epsilon {
            return Err(Error::Precondition(format!(
                "rectifier input {m:e} within 10·epsilon of the kink"
            )));
        }
    }

    let leaves = tape.leaf_vars();
    let mut inputs: Vec<Tensor<f64>> = leaves.iter().map(|&l| tape.value(l).clone()).collect();
    let slot = leaves
        .iter()
        .position(|&l| l == x)
        .expect("input is a leaf");
    let grads = tape.backward(out)?;
    let analytic = grads.get(x).data().to_vec();

    let mut worst = 0.0f64;
    for (i, (&base, &grad)) in point.data().iter().zip(&analytic).enumerate() {
        inputs[slot].data_mut()[i] = base + epsilon;
        let up = tape.replay(&inputs, out)?.data()[0];
        inputs[slot].data_mut()[i] = base - epsilon;
        let down = tape.replay(&inputs, out)?.data()[0];
        inputs[slot].data_mut()[i] = base;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::Evaluation(format!(
                "non-finite value perturbing coordinate {i}"
            )));
        }
        let numeric = (up - down) / (2.0 * epsilon);
        let err = (grad - numeric).abs() / grad.abs().max(1.0);
        worst = worst.max(err);
    }
    Ok(worst)
}
