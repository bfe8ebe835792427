use super::{Real, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op<T> {
    Leaf {
        slot: usize,
    },
    MatMul {
        a: usize,
        b: usize,
        trans_a: bool,
        trans_b: bool,
    },
    Add {
        a: usize,
        b: usize,
    },
    Sub {
        a: usize,
        b: usize,
    },
    Mul {
        a: usize,
        b: usize,
    },
    AddRow {
        a: usize,
        bias: usize,
    },
    Scale {
        a: usize,
        s: T,
    },
    AddScalar {
        a: usize,
        s: T,
    },
    LeakyRelu {
        a: usize,
        slope: T,
    },
    Sum {
        a: usize,
    },
    Mean {
        a: usize,
    },
    Mse {
        a: usize,
        b: usize,
    },
    Softplus {
        a: usize,
    },
    GatherRows {
        a: usize,
        rows: Vec<usize>,
    },
    Reshape {
        a: usize,
        shape: Vec<usize>,
    },
    ConcatRows {
        parts: Vec<usize>,
    },
    ConcatCols {
        a: usize,
        b: usize,
    },
}

impl<T> Op<T> {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf { .. } => "leaf",
            Op::MatMul { .. } => "matmul",
            Op::Add { .. } => "add",
            Op::Sub { .. } => "sub",
            Op::Mul { .. } => "mul",
            Op::AddRow { .. } => "add_row",
            Op::Scale { .. } => "scale",
            Op::AddScalar { .. } => "add_scalar",
            Op::LeakyRelu { .. } => "leaky_relu",
            Op::Sum { .. } => "sum",
            Op::Mean { .. } => "mean",
            Op::Mse { .. } => "mse",
            Op::Softplus { .. } => "softplus",
            Op::GatherRows { .. } => "gather_rows",
            Op::Reshape { .. } => "reshape",
            Op::ConcatRows { .. } => "concat_rows",
            Op::ConcatCols { .. } => "concat_cols",
        }
    }

    fn inputs(&self) -> Vec<usize> {
        match self {
            Op::Leaf { .. } => vec![],
            Op::MatMul { a, b, .. }
            | Op::Add { a, b }
            | Op::Sub { a, b }
            | Op::Mul { a, b }
            | Op::Mse { a, b }
            | Op::ConcatCols { a, b } => vec![*a, *b],
            Op::AddRow { a, bias } => vec![*a, *bias],
            Op::Scale { a, .. }
            | Op::AddScalar { a, .. }
            | Op::LeakyRelu { a, .. }
            | Op::Sum { a }
            | Op::Mean { a }
            | Op::Softplus { a }
            | Op::GatherRows { a, .. }
            | Op::Reshape { a, .. } => vec![*a],
            Op::ConcatRows { parts } => parts.clone(),
        }
    }
}

struct Node<T> {
    op: Op<T>,
    value: Tensor<T>,
    requires_grad: bool,
}

/// Define-by-run record of primitive operations.
///
/// Every op is evaluated eagerly when it is pushed; the record can later be
/// replayed on fresh leaf values with [`Tape::replay`] or differentiated once
/// with [`Tape::backward`].
pub struct Tape<T: Real = f32> {
    nodes: Vec<Node<T>>,
    leaves: Vec<usize>,
    consumed: bool,
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Strided read-only matrix view used to feed `gemm`.
#[derive(Clone, Copy)]
struct View<'a, T> {
    data: &'a [T],
    rows: usize,
    cols: usize,
    rs: isize,
    cs: isize,
}

fn view<T: Real>(t: &Tensor<T>, trans: bool) -> View<'_, T> {
    let (r, c) = t.dims2();
    view_raw(t.data(), r, c, trans)
}

fn view_raw<T>(data: &[T], r: usize, c: usize, trans: bool) -> View<'_, T> {
    if trans {
        View {
            data,
            rows: c,
            cols: r,
            rs: 1,
            cs: c as isize,
        }
    } else {
        View {
            data,
            rows: r,
            cols: c,
            rs: c as isize,
            cs: 1,
        }
    }
}

/// `out (row-major a.rows × b.cols) = a·b + beta·out`.
fn gemm_into<T: Real>(a: View<'_, T>, b: View<'_, T>, beta: T, out: &mut [T]) {
    debug_assert_eq!(a.cols, b.rows);
    debug_assert_eq!(out.len(), a.rows * b.cols);
    debug_assert!(a.data.len() >= a.rows * a.cols && b.data.len() >= b.rows * b.cols);
    T::gemm(
        a.rows,
        a.cols,
        b.cols,
        a.data,
        a.rs,
        a.cs,
        b.data,
        b.rs,
        b.cs,
        beta,
        out,
        b.cols as isize,
        1,
    );
}

fn leaky<T: Real>(x: T, slope: T) -> T {
    if x > T::zero() {
        x
    } else {
        x * slope
    }
}

fn softplus<T: Real>(x: T) -> T {
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

fn is_matrix<T: Real>(t: &Tensor<T>) -> bool {
    t.shape().len() == 2
}

/// Evaluates one non-leaf op given the values of earlier nodes.
fn eval<'a, T: Real + 'a>(
    node: usize,
    op: &Op<T>,
    vals: &dyn Fn(usize) -> &'a Tensor<T>,
) -> Result<Tensor<T>> {
    let dim_err = |detail: String| Error::Dimension {
        node,
        op: op.name(),
        detail,
    };
    let same_shape = |a: usize, b: usize| -> Result<()> {
        if vals(a).shape() != vals(b).shape() {
            return Err(dim_err(format!(
                "{:?} vs {:?}",
                vals(a).shape(),
                vals(b).shape()
            )));
        }
        Ok(())
    };
    let zip = |a: usize, b: usize, f: &dyn Fn(T, T) -> T| -> Result<Tensor<T>> {
        same_shape(a, b)?;
        let (x, y) = (vals(a), vals(b));
        let data = x
            .data()
            .iter()
            .zip(y.data())
            .map(|(&p, &q)| f(p, q))
            .collect();
        Tensor::new(x.shape().to_vec(), data)
    };
    match op {
        Op::Leaf { .. } => unreachable!("leaves carry their own value"),
        Op::MatMul {
            a,
            b,
            trans_a,
            trans_b,
        } => {
            let (x, y) = (vals(*a), vals(*b));
            if !is_matrix(x) || !is_matrix(y) {
                return Err(dim_err(format!(
                    "operands must be 2-D, got {:?} and {:?}",
                    x.shape(),
                    y.shape()
                )));
            }
            let (va, vb) = (view(x, *trans_a), view(y, *trans_b));
            if va.cols != vb.rows {
                return Err(dim_err(format!(
                    "inner dims {}×{} · {}×{}",
                    va.rows, va.cols, vb.rows, vb.cols
                )));
            }
            let mut out = vec![T::zero(); va.rows * vb.cols];
            gemm_into(va, vb, T::zero(), &mut out);
            Tensor::new(vec![va.rows, vb.cols], out)
        }
        Op::Add { a, b } => zip(*a, *b, &|p, q| p + q),
        Op::Sub { a, b } => zip(*a, *b, &|p, q| p - q),
        Op::Mul { a, b } => zip(*a, *b, &|p, q| p * q),
        Op::AddRow { a, bias } => {
            let (x, bv) = (vals(*a), vals(*bias));
            let cols = x.dims2().1;
            if !is_matrix(x) || bv.numel() != cols {
                return Err(dim_err(format!(
                    "bias {:?} for matrix {:?}",
                    bv.shape(),
                    x.shape()
                )));
            }
            let mut data = x.data().to_vec();
            for row in data.chunks_exact_mut(cols) {
                row.iter_mut()
                    .zip(bv.data())
                    .for_each(|(v, &c)| *v = *v + c);
            }
            Tensor::new(x.shape().to_vec(), data)
        }
        Op::Scale { a, s } => Ok(vals(*a).map(|v| v * *s)),
        Op::AddScalar { a, s } => Ok(vals(*a).map(|v| v + *s)),
        Op::LeakyRelu { a, slope } => Ok(vals(*a).map(|v| leaky(v, *slope))),
        Op::Sum { a } => Ok(Tensor::scalar(vals(*a).data().iter().copied().sum())),
        Op::Mean { a } => {
            let x = vals(*a);
            if x.numel() == 0 {
                return Err(dim_err("mean of empty tensor".into()));
            }
            let n = T::from_usize(x.numel()).expect("count fits");
            Ok(Tensor::scalar(x.data().iter().copied().sum::<T>() / n))
        }
        Op::Mse { a, b } => {
            same_shape(*a, *b)?;
            let (x, y) = (vals(*a), vals(*b));
            if x.numel() == 0 {
                return Err(dim_err("mse of empty tensor".into()));
            }
            let n = T::from_usize(x.numel()).expect("count fits");
            let s: T = x
                .data()
                .iter()
                .zip(y.data())
                .map(|(&p, &q)| (p - q) * (p - q))
                .sum();
            Ok(Tensor::scalar(s / n))
        }
        Op::Softplus { a } => Ok(vals(*a).map(softplus)),
        Op::GatherRows { a, rows } => {
            let x = vals(*a);
            let (r, c) = x.dims2();
            if !is_matrix(x) {
                return Err(dim_err(format!(
                    "gather needs a matrix, got {:?}",
                    x.shape()
                )));
            }
            let mut data = Vec::with_capacity(rows.len() * c);
            for &i in rows {
                if i >= r {
                    return Err(dim_err(format!("row {i} out of range for {r} rows")));
                }
                data.extend_from_slice(&x.data()[i * c..(i + 1) * c]);
            }
            Tensor::new(vec![rows.len(), c], data)
        }
        Op::Reshape { a, shape } => {
            let x = vals(*a);
            x.clone()
                .reshape(shape.clone())
                .map_err(|_| dim_err(format!("cannot reshape {:?} into {shape:?}", x.shape())))
        }
        Op::ConcatRows { parts } => {
            let first = vals(*parts.first().ok_or_else(|| dim_err("no parts".into()))?);
            let cols = first.dims2().1;
            let mut rows = 0;
            let mut data = Vec::new();
            for &p in parts {
                let x = vals(p);
                if !is_matrix(x) || x.dims2().1 != cols {
                    return Err(dim_err(format!(
                        "part {:?} does not have {cols} columns",
                        x.shape()
                    )));
                }
                rows += x.dims2().0;
                data.extend_from_slice(x.data());
            }
            Tensor::new(vec![rows, cols], data)
        }
        Op::ConcatCols { a, b } => {
            let (x, y) = (vals(*a), vals(*b));
            let ((rx, cx), (ry, cy)) = (x.dims2(), y.dims2());
            if !is_matrix(x) || !is_matrix(y) || rx != ry {
                return Err(dim_err(format!("{:?} and {:?}", x.shape(), y.shape())));
            }
            let mut data = Vec::with_capacity(rx * (cx + cy));
            for r in 0..rx {
                data.extend_from_slice(&x.data()[r * cx..(r + 1) * cx]);
                data.extend_from_slice(&y.data()[r * cy..(r + 1) * cy]);
            }
            Tensor::new(vec![rx, cx + cy], data)
        }
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            leaves: Vec::new(),
            consumed: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Records an input. Leaves are numbered in creation order for [`Tape::replay`].
    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        let slot = self.leaves.len();
        self.leaves.push(self.nodes.len());
        self.nodes.push(Node {
            op: Op::Leaf { slot },
            value,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn param(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Inputs of the tape in the order they were recorded.
    pub fn leaf_vars(&self) -> Vec<Var> {
        self.leaves.iter().map(|&i| Var(i)).collect()
    }

    fn push(&mut self, op: Op<T>) -> Result<Var> {
        let idx = self.nodes.len();
        let requires_grad = op.inputs().iter().any(|&i| self.nodes[i].requires_grad);
        let nodes = &self.nodes;
        let value = eval(idx, &op, &|i| &nodes[i].value)?;
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
        });
        Ok(Var(idx))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.push(Op::MatMul {
            a: a.0,
            b: b.0,
            trans_a: false,
            trans_b: false,
        })
    }

    /// `a · bᵀ`, the layout of a linear layer with `(out × in)` weights.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var> {
        self.push(Op::MatMul {
            a: a.0,
            b: b.0,
            trans_a: false,
            trans_b: true,
        })
    }

    pub fn matmul_ex(&mut self, a: Var, b: Var, trans_a: bool, trans_b: bool) -> Result<Var> {
        self.push(Op::MatMul {
            a: a.0,
            b: b.0,
            trans_a,
            trans_b,
        })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.push(Op::Add { a: a.0, b: b.0 })
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.push(Op::Sub { a: a.0, b: b.0 })
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.push(Op::Mul { a: a.0, b: b.0 })
    }

    /// Adds `bias` (length = columns) to every row of `a`.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Result<Var> {
        self.push(Op::AddRow {
            a: a.0,
            bias: bias.0,
        })
    }

    pub fn scale(&mut self, a: Var, s: T) -> Result<Var> {
        self.push(Op::Scale { a: a.0, s })
    }

    pub fn add_scalar(&mut self, a: Var, s: T) -> Result<Var> {
        self.push(Op::AddScalar { a: a.0, s })
    }

    pub fn leaky_relu(&mut self, a: Var, slope: T) -> Result<Var> {
        self.push(Op::LeakyRelu { a: a.0, slope })
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Sum { a: a.0 })
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Mean { a: a.0 })
    }

    pub fn mse(&mut self, a: Var, b: Var) -> Result<Var> {
        self.push(Op::Mse { a: a.0, b: b.0 })
    }

    pub fn softplus(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Softplus { a: a.0 })
    }

    pub fn gather_rows(&mut self, a: Var, rows: Vec<usize>) -> Result<Var> {
        self.push(Op::GatherRows { a: a.0, rows })
    }

    pub fn reshape(&mut self, a: Var, shape: Vec<usize>) -> Result<Var> {
        self.push(Op::Reshape { a: a.0, shape })
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        self.push(Op::ConcatRows {
            parts: parts.iter().map(|v| v.0).collect(),
        })
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        self.push(Op::ConcatCols { a: a.0, b: b.0 })
    }

    /// `x · wᵀ + bias` for a weight stored `(out × in)`.
    pub fn linear(&mut self, x: Var, weight: Var, bias: Var) -> Result<Var> {
        let y = self.matmul_t(x, weight)?;
        self.add_row(y, bias)
    }

    /// Smallest `|x|` fed into any leaky rectifier on this tape.
    pub fn min_rectifier_input(&self) -> Option<T> {
        self.nodes
            .iter()
            .filter_map(|n| match n.op {
                Op::LeakyRelu { a, .. } => self.nodes[a]
                    .value
                    .data()
                    .iter()
                    .map(|v| v.abs())
                    .reduce(T::min),
                _ => None,
            })
            .reduce(T::min)
    }

    /// Re-evaluates the recorded graph with new leaf values and returns the
    /// value of `output`.
    pub fn replay(&self, inputs: &[Tensor<T>], output: Var) -> Result<Tensor<T>> {
        if inputs.len() != self.leaves.len() {
            return Err(Error::arg(format!(
                "tape has {} inputs, {} supplied",
                self.leaves.len(),
                inputs.len()
            )));
        }
        let mut vals: Vec<Tensor<T>> = Vec::with_capacity(output.0 + 1);
        for (idx, node) in self.nodes.iter().enumerate().take(output.0 + 1) {
            let v = match &node.op {
                Op::Leaf { slot } => {
                    let input = &inputs[*slot];
                    if input.shape() != node.value.shape() {
                        return Err(Error::Dimension {
                            node: idx,
                            op: "leaf",
                            detail: format!(
                                "input {slot} has shape {:?}, recorded {:?}",
                                input.shape(),
                                node.value.shape()
                            ),
                        });
                    }
                    input.clone()
                }
                op => eval(idx, op, &|i| &vals[i])?,
            };
            vals.push(v);
        }
        Ok(vals.swap_remove(output.0))
    }

    /// Reverse pass from a scalar output. A tape can be differentiated once.
    pub fn backward(&mut self, output: Var) -> Result<Gradients<T>> {
        if self.consumed {
            return Err(Error::State("backward called on a consumed tape".into()));
        }
        let out_val = &self.nodes[output.0].value;
        if out_val.numel() != 1 {
            return Err(Error::arg(format!(
                "backward needs a scalar output, got shape {:?}",
                out_val.shape()
            )));
        }
        self.consumed = true;

        let n = self.nodes.len();
        let mut grads: Vec<Option<Vec<T>>> = vec![None; n];
        if self.nodes[output.0].requires_grad {
            grads[output.0] = Some(vec![T::one()]);
        }
        for i in (0..=output.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad || matches!(node.op, Op::Leaf { .. }) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
        }

        let mut leaf_grads = vec![None; n];
        for &l in &self.leaves {
            let shape = self.nodes[l].value.shape().to_vec();
            let data = grads[l]
                .take()
                .unwrap_or_else(|| vec![T::zero(); self.nodes[l].value.numel()]);
            leaf_grads[l] = Some(Tensor::new(shape, data).expect("gradient matches leaf shape"));
        }
        Ok(Gradients { grads: leaf_grads })
    }

    fn propagate(&self, i: usize, g: &[T], grads: &mut [Option<Vec<T>>]) {
        let nodes = &self.nodes;
        let wants = |j: usize| nodes[j].requires_grad;
        let acc = |j: usize, grads: &mut [Option<Vec<T>>], f: &mut dyn FnMut(&mut [T])| {
            let buf = grads[j].get_or_insert_with(|| vec![T::zero(); nodes[j].value.numel()]);
            f(buf);
        };
        let val = |j: usize| &nodes[j].value;
        match &nodes[i].op {
            Op::Leaf { .. } => {}
            Op::MatMul {
                a,
                b,
                trans_a,
                trans_b,
            } => {
                let (va, vb) = (view(val(*a), *trans_a), view(val(*b), *trans_b));
                let (m, nn) = (va.rows, vb.cols);
                let dc = view_raw(g, m, nn, false);
                let dct = view_raw(g, m, nn, true);
                if wants(*a) {
                    let vbt = view(val(*b), !*trans_b);
                    acc(*a, grads, &mut |buf| {
                        if *trans_a {
                            gemm_into(vb, dct, T::one(), buf);
                        } else {
                            gemm_into(dc, vbt, T::one(), buf);
                        }
                    });
                }
                if wants(*b) {
                    let vat = view(val(*a), !*trans_a);
                    acc(*b, grads, &mut |buf| {
                        if *trans_b {
                            gemm_into(dct, va, T::one(), buf);
                        } else {
                            gemm_into(vat, dc, T::one(), buf);
                        }
                    });
                }
            }
            Op::Add { a, b } | Op::Sub { a, b } => {
                let sign = if matches!(nodes[i].op, Op::Sub { .. }) {
                    -T::one()
                } else {
                    T::one()
                };
                if wants(*a) {
                    acc(*a, grads, &mut |buf| {
                        buf.iter_mut().zip(g).for_each(|(d, &v)| *d = *d + v)
                    });
                }
                if wants(*b) {
                    acc(*b, grads, &mut |buf| {
                        buf.iter_mut().zip(g).for_each(|(d, &v)| *d = *d + sign * v)
                    });
                }
            }
            Op::Mul { a, b } => {
                if wants(*a) {
                    let other = val(*b).data();
                    acc(*a, grads, &mut |buf| {
                        for ((d, &v), &o) in buf.iter_mut().zip(g).zip(other) {
                            *d = *d + v * o;
                        }
                    });
                }
                if wants(*b) {
                    let other = val(*a).data();
                    acc(*b, grads, &mut |buf| {
                        for ((d, &v), &o) in buf.iter_mut().zip(g).zip(other) {
                            *d = *d + v * o;
                        }
                    });
                }
            }
            Op::AddRow { a, bias } => {
                if wants(*a) {
                    acc(*a, grads, &mut |buf| {
                        buf.iter_mut().zip(g).for_each(|(d, &v)| *d = *d + v)
                    });
                }
                if wants(*bias) {
                    let cols = val(*a).dims2().1;
                    acc(*bias, grads, &mut |buf| {
                        for row in g.chunks_exact(cols) {
                            buf.iter_mut().zip(row).for_each(|(d, &v)| *d = *d + v);
                        }
                    });
                }
            }
            Op::Scale { a, s } => {
                if wants(*a) {
                    acc(*a, grads, &mut |buf| {
                        buf.iter_mut().zip(g).for_each(|(d, &v)| *d = *d + v * *s)
                    });
                }
            }
            Op::AddScalar { a, .. } | Op::Reshape { a, .. } => {
                if wants(*a) {
                    acc(*a, grads, &mut |buf| {
                        buf.iter_mut().zip(g).for_each(|(d, &v)| *d = *d + v)
                    });
                }
            }
            Op::LeakyRelu { a, slope } => {
                if wants(*a) {
                    let x = val(*a).data();
                    acc(*a, grads, &mut |buf| {
                        for ((d, &v), &xi) in buf.iter_mut().zip(g).zip(x) {
                            // subgradient at 0 is the negative-side slope
                            *d = *d + if xi > T::zero() { v } else { v * *slope };
                        }
                    });
                }
            }
            Op::Sum { a } | Op::Mean { a } => {
                if wants(*a) {
                    let numel = val(*a).numel();
                    let mut s = g[0];
                    if matches!(nodes[i].op, Op::Mean { .. }) {
                        s = s / T::from_usize(numel).expect("count fits");
                    }
                    acc(*a, grads, &mut |buf| {
                        buf.iter_mut().for_each(|d| *d = *d + s)
                    });
                }
            }
            Op::Mse { a, b } => {
                let (x, y) = (val(*a).data(), val(*b).data());
                let k = T::from_f64_lossy(2.0) * g[0] / T::from_usize(x.len()).expect("count fits");
                if wants(*a) {
                    acc(*a, grads, &mut |buf| {
                        for ((d, &p), &q) in buf.iter_mut().zip(x).zip(y) {
                            *d = *d + k * (p - q);
                        }
                    });
                }
                if wants(*b) {
                    acc(*b, grads, &mut |buf| {
                        for ((d, &p), &q) in buf.iter_mut().zip(x).zip(y) {
                            *d = *d - k * (p - q);
                        }
                    });
                }
            }
            Op::Softplus { a } => {
                if wants(*a) {
                    let x = val(*a).data();
                    acc(*a, grads, &mut |buf| {
                        for ((d, &v), &xi) in buf.iter_mut().zip(g).zip(x) {
                            *d = *d + v * sigmoid(xi);
                        }
                    });
                }
            }
            Op::GatherRows { a, rows } => {
                if wants(*a) {
                    let cols = val(*a).dims2().1;
                    acc(*a, grads, &mut |buf| {
                        for (r, &src) in rows.iter().enumerate() {
                            let dst = &mut buf[src * cols..(src + 1) * cols];
                            dst.iter_mut()
                                .zip(&g[r * cols..(r + 1) * cols])
                                .for_each(|(d, &v)| *d = *d + v);
                        }
                    });
                }
            }
            Op::ConcatRows { parts } => {
                let mut offset = 0;
                for &p in parts {
                    let len = val(p).numel();
                    if wants(p) {
                        let chunk = &g[offset..offset + len];
                        acc(p, grads, &mut |buf| {
                            buf.iter_mut().zip(chunk).for_each(|(d, &v)| *d = *d + v)
                        });
                    }
                    offset += len;
                }
            }
            Op::ConcatCols { a, b } => {
                let (rows, ca) = val(*a).dims2();
                let cb = val(*b).dims2().1;
                let width = ca + cb;
                if wants(*a) {
                    acc(*a, grads, &mut |buf| {
                        for r in 0..rows {
                            for c in 0..ca {
                                buf[r * ca + c] = buf[r * ca + c] + g[r * width + c];
                            }
                        }
                    });
                }
                if wants(*b) {
                    acc(*b, grads, &mut |buf| {
                        for r in 0..rows {
                            for c in 0..cb {
                                buf[r * cb + c] = buf[r * cb + c] + g[r * width + ca + c];
                            }
                        }
                    });
                }
            }
        }
    }
}

/// Gradients of every leaf of a differentiated tape.
pub struct Gradients<T: Real = f32> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Real> Gradients<T> {
    /// Gradient for a leaf; leaves that did not take part in the output get zeros.
    ///
    /// # Panics
    /// If `v` is not a leaf of the differentiated tape.
    pub fn get(&self, v: Var) -> &Tensor<T> {
        self.grads
            .get(v.0)
            .and_then(Option::as_ref)
            .expect("gradient requested for a non-leaf variable")
    }

    pub fn try_get(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor<f64> {
        Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn matmul_hand_product() {
        let mut tape = Tape::<f64>::new();
        let a = tape.constant(t(&[2, 2], &[1., 2., 3., 4.]));
        let b = tape.constant(t(&[2, 1], &[1., 1.]));
        let c = tape.matmul(a, b).unwrap();
        assert_eq!(tape.value(c), &t(&[2, 1], &[3., 7.]));
    }

    #[test]
    fn leaky_rectifier_negative_side() {
        let mut tape = Tape::<f64>::new();
        let x = tape.constant(Tensor::scalar(-1.0));
        let y = tape.leaky_relu(x, 0.2).unwrap();
        assert_eq!(tape.value(y).data(), &[-0.2]);
    }

    #[test]
    fn leaky_rectifier_subgradient_at_zero_is_slope() {
        let mut tape = Tape::<f64>::new();
        let x = tape.param(Tensor::scalar(0.0));
        let y = tape.leaky_relu(x, 0.2).unwrap();
        let g = tape.backward(y).unwrap();
        assert_eq!(g.get(x).data(), &[0.2]);
    }

    #[test]
    fn multiply_by_ones_is_identity() {
        let mut tape = Tape::<f64>::new();
        let av = t(&[2, 3], &[1., -2., 3.5, 0., 7., -1.]);
        let a = tape.constant(av.clone());
        let ones = tape.constant(av.ones_like());
        let c = tape.mul(a, ones).unwrap();
        assert_eq!(tape.value(c), &av);
    }

    #[test]
    fn square_gradient() {
        let mut tape = Tape::<f64>::new();
        let x = tape.param(Tensor::scalar(3.0));
        let y = tape.mul(x, x).unwrap();
        let g = tape.backward(y).unwrap();
        assert_eq!(g.get(x).data(), &[6.0]);
    }

    #[test]
    fn bilinear_gradient() {
        let mut tape = Tape::<f64>::new();
        let av = t(&[3], &[1., 2., 3.]);
        let bv = t(&[3], &[-4., 5., 0.5]);
        let a = tape.param(av.clone());
        let b = tape.param(bv.clone());
        let p = tape.mul(a, b).unwrap();
        let s = tape.sum(p).unwrap();
        let g = tape.backward(s).unwrap();
        assert_eq!(g.get(a), &bv);
        assert_eq!(g.get(b), &av);
    }

    #[test]
    fn stacked_linear_jacobian_chain() {
        // f(x) = sum(W2 W1 x); df/dx = W1ᵀ W2ᵀ 1, worked by hand.
        let w1 = t(&[2, 2], &[1., 2., 3., 4.]);
        let w2 = t(&[2, 2], &[0.5, -1., 2., 0.]);
        let mut tape = Tape::<f64>::new();
        let x = tape.param(t(&[1, 2], &[0.3, -0.7]));
        let a = tape.constant(w1);
        let b = tape.constant(w2);
        let h = tape.matmul_t(x, a).unwrap();
        let y = tape.matmul_t(h, b).unwrap();
        let s = tape.sum(y).unwrap();
        let g = tape.backward(s).unwrap();
        // W2ᵀ·1 = [2.5, -1]; W1ᵀ·[2.5,-1] = [2.5-3, 5-4] = [-0.5, 1]
        assert_eq!(g.get(x).data(), &[-0.5, 1.0]);
    }

    #[test]
    fn second_backward_is_a_state_error() {
        let mut tape = Tape::<f64>::new();
        let x = tape.param(Tensor::scalar(1.0));
        let y = tape.mul(x, x).unwrap();
        tape.backward(y).unwrap();
        assert!(matches!(tape.backward(y), Err(Error::State(_))));
    }

    #[test]
    fn unused_leaf_gets_zeros() {
        let mut tape = Tape::<f64>::new();
        let x = tape.param(Tensor::scalar(2.0));
        let unused = tape.param(t(&[2], &[1., 1.]));
        let y = tape.mul(x, x).unwrap();
        let g = tape.backward(y).unwrap();
        assert_eq!(g.get(unused).data(), &[0.0, 0.0]);
    }

    #[test]
    fn shape_error_names_node() {
        let mut tape = Tape::<f64>::new();
        let a = tape.constant(t(&[2, 3], &[0.; 6]));
        let b = tape.constant(t(&[2, 3], &[0.; 6]));
        match tape.matmul(a, b) {
            Err(Error::Dimension { node, op, .. }) => {
                assert_eq!(node, 2);
                assert_eq!(op, "matmul");
            }
            other => panic!("expected dimension error, got {other:?}"),
        }
    }

    #[test]
    fn replay_reproduces_and_checks_shapes() {
        let mut tape = Tape::<f64>::new();
        let x = tape.param(t(&[1, 2], &[1., 2.]));
        let w = tape.constant(t(&[2, 2], &[1., 0., 0.5, 3.]));
        let h = tape.matmul_t(x, w).unwrap();
        let y = tape.leaky_relu(h, 0.2).unwrap();
        let recorded = tape.value(y).clone();
        let replayed = tape
            .replay(&[t(&[1, 2], &[1., 2.]), t(&[2, 2], &[1., 0., 0.5, 3.])], y)
            .unwrap();
        assert_eq!(replayed, recorded);
        let bad = tape.replay(&[t(&[1, 3], &[1., 2., 3.]), t(&[2, 2], &[0.; 4])], y);
        assert!(matches!(bad, Err(Error::Dimension { node: 0, .. })));
    }

    #[test]
    fn concat_and_gather_gradients() {
        let mut tape = Tape::<f64>::new();
        let a = tape.param(t(&[1, 2], &[1., 2.]));
        let b = tape.param(t(&[1, 1], &[3.]));
        let c = tape.concat_cols(a, b).unwrap();
        let stacked = tape.concat_rows(&[c, c]).unwrap();
        let picked = tape.gather_rows(stacked, vec![1, 1, 0]).unwrap();
        let s = tape.sum(picked).unwrap();
        let g = tape.backward(s).unwrap();
        assert_eq!(g.get(a).data(), &[3., 3.]);
        assert_eq!(g.get(b).data(), &[3.]);
    }
}
