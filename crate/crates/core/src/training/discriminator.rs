use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::tensor::{Real, Tape, Tensor, Var};

const SLOPE: f64 = 0.2;

/// Three-layer perceptron over flattened RGB images, producing one logit
/// per image. Weights are stored `(out × in)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Discriminator<T: Real = f32> {
    height: usize,
    width: usize,
    hidden: usize,
    params: Vec<Tensor<T>>,
}

/// Intermediate values of a recorded discriminator pass.
pub struct DiscriminatorPass {
    pub logits: Var,
    pre1: Var,
    pre2: Var,
}

impl<T: Real> Discriminator<T> {
    pub fn new<R: Rng>(height: usize, width: usize, hidden: usize, rng: &mut R) -> Result<Self> {
        if height == 0 || width == 0 || hidden == 0 {
            return Err(Error::arg("discriminator dimensions must be positive"));
        }
        let input = 3 * height * width;
        let mut layer = |out: usize, inp: usize| -> Vec<Tensor<T>> {
            let dist = Normal::new(0.0, 1.0 / (inp as f64).sqrt()).expect("positive std");
            let w = (0..out * inp)
                .map(|_| T::from_f64_lossy(dist.sample(rng)))
                .collect();
            vec![
                Tensor::new(vec![out, inp], w).expect("shape"),
                Tensor::zeros(&[out]),
            ]
        };
        let mut params = layer(hidden, input);
        params.extend(layer(hidden, hidden));
        params.extend(layer(1, hidden));
        Ok(Discriminator {
            height,
            width,
            hidden,
            params,
        })
    }

    pub fn resolution(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn params(&self) -> &[Tensor<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.params
    }

    pub fn input_len(&self) -> usize {
        3 * self.height * self.width
    }

    pub fn register(&self, tape: &mut Tape<T>, trainable: bool) -> Vec<Var> {
        self.params
            .iter()
            .map(|p| tape.leaf(p.clone(), trainable))
            .collect()
    }

    /// Logits (`B × 1`) for a `B × 3HW` batch of flattened images.
    pub fn forward_graph(
        &self,
        tape: &mut Tape<T>,
        vars: &[Var],
        images: Var,
    ) -> Result<DiscriminatorPass> {
        let cols = tape.value(images).dims2().1;
        if cols != self.input_len() {
            return Err(Error::arg(format!(
                "discriminator expects {}×{} images ({} values), got {cols}",
                self.height,
                self.width,
                self.input_len()
            )));
        }
        let slope = T::from_f64_lossy(SLOPE);
        let pre1 = tape.linear(images, vars[0], vars[1])?;
        let a1 = tape.leaky_relu(pre1, slope)?;
        let pre2 = tape.linear(a1, vars[2], vars[3])?;
        let a2 = tape.leaky_relu(pre2, slope)?;
        let logits = tape.linear(a2, vars[4], vars[5])?;
        Ok(DiscriminatorPass { logits, pre1, pre2 })
    }

    /// Gradient of each logit with respect to its input image (`B × 3HW`),
    /// recorded so that it can itself be differentiated w.r.t. the weights.
    ///
    /// The rectifier derivative is piecewise constant, so the input gradient
    /// is `((1·w₃ ⊙ M₂)·W₂ ⊙ M₁)·W₁` with masks `M` frozen at the forward pass.
    pub fn input_gradient_graph(
        &self,
        tape: &mut Tape<T>,
        vars: &[Var],
        pass: &DiscriminatorPass,
    ) -> Result<Var> {
        let slope = T::from_f64_lossy(SLOPE);
        let mask = |t: &Tensor<T>| t.map(|v| if v > T::zero() { T::one() } else { slope });
        let m1 = mask(tape.value(pass.pre1));
        let m2 = mask(tape.value(pass.pre2));
        let batch = m1.dims2().0;
        let m1 = tape.constant(m1);
        let m2 = tape.constant(m2);
        let ones = tape.constant(Tensor::full(&[batch, 1], T::one()));
        let d_out = tape.matmul(ones, vars[4])?;
        let d_pre2 = tape.mul(d_out, m2)?;
        let d_a1 = tape.matmul(d_pre2, vars[2])?;
        let d_pre1 = tape.mul(d_a1, m1)?;
        tape.matmul(d_pre1, vars[0])
    }

    /// `γ/2 · mean_b ‖∇ₓD(x_b)‖²` on a batch of real images.
    pub fn r1_penalty_graph(
        &self,
        tape: &mut Tape<T>,
        vars: &[Var],
        pass: &DiscriminatorPass,
        gamma: f64,
    ) -> Result<Var> {
        let g = self.input_gradient_graph(tape, vars, pass)?;
        let batch = tape.value(g).dims2().0;
        let sq = tape.mul(g, g)?;
        let total = tape.sum(sq)?;
        tape.scale(total, T::from_f64_lossy(gamma / 2.0 / batch as f64))
    }

    /// Logit for a single image.
    pub fn forward(&self, image: &ImageBuffer<T>) -> Result<T> {
        if image.dims() != (self.height, self.width) {
            return Err(Error::arg(format!(
                "discriminator bound to {}×{}, image is {}×{}",
                self.height,
                self.width,
                image.height(),
                image.width()
            )));
        }
        let mut tape = Tape::new();
        let vars = self.register(&mut tape, false);
        let x = tape.constant(Tensor::row(image.data().to_vec()));
        let pass = self.forward_graph(&mut tape, &vars, x)?;
        Ok(tape.value(pass.logits).data()[0])
    }
}
