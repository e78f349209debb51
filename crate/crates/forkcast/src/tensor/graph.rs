//! Reverse-mode autodiff over a flat operation tape.
//!
//! Tensors live inside a [`Graph`]; ops append nodes, so the tape is
//! topologically ordered by construction and one backward pass visits each
//! recorded op exactly once. Parameters are created first and the tape can be
//! truncated back to them between training steps with [`Graph::reset_to`].
//!
//! Backward semantics: gradients of leaf tensors accumulate across calls;
//! gradients of intermediate nodes are recomputed per call.

use super::kernels;
use super::scalar::Scalar;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("{op}: dimension mismatch on {axis}: {detail}")]
    ShapeMismatch { op: &'static str, axis: &'static str, detail: String },
    #[error("{op}: axis {axis} out of range for rank {rank}")]
    AxisOutOfRange { op: &'static str, axis: usize, rank: usize },
    #[error("shape {shape:?} implies {expected} elements but data holds {actual}")]
    DataLength { shape: Vec<usize>, expected: usize, actual: usize },
    #[error("backward requires a scalar loss, got {numel} elements")]
    NonScalarLoss { numel: usize },
    #[error("batchnorm train mode needs at least 2 values per channel, got {count}")]
    DegenerateBatch { count: usize },
    #[error("{op}: {detail}")]
    InvalidArgument { op: &'static str, detail: String },
}

/// Handle to a tensor stored in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TensorId(pub(crate) usize);

enum Op<T: Scalar> {
    Leaf,
    Conv2d { input: TensorId, weight: TensorId, bias: TensorId, stride: usize, pad: usize },
    BatchNormTrain { input: TensorId, gamma: TensorId, beta: TensorId, mean: Vec<T>, invstd: Vec<T> },
    BatchNormEval { input: TensorId, gamma: TensorId, beta: TensorId, mean: Vec<T>, var: Vec<T>, eps: f64 },
    Relu { input: TensorId },
    MaxPool { input: TensorId, k: usize, stride: usize, argmax: Vec<u32> },
    Linear { input: TensorId, weight: TensorId, bias: TensorId },
    Concat { a: TensorId, b: TensorId, axis: usize },
    Reshape { input: TensorId },
    SmoothL1 { pred: TensorId, target: TensorId, diffs: Vec<T> },
    Softmax { input: TensorId, axis: usize },
    SumAll { input: TensorId },
}

struct Node<T: Scalar> {
    data: Vec<T>,
    shape: Vec<usize>,
    grad: Option<Vec<T>>,
    requires_grad: bool,
    needs_grad: bool,
    op: Op<T>,
}

pub struct Graph<T: Scalar> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Insert a leaf tensor. Fails if `data` does not fill `shape`.
    pub fn leaf(&mut self, data: Vec<T>, shape: Vec<usize>, requires_grad: bool) -> Result<TensorId, TensorError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() || shape.iter().any(|&d| d == 0) {
            return Err(TensorError::DataLength { shape, expected, actual: data.len() });
        }
        Ok(self.push(data, shape, requires_grad, Op::Leaf))
    }

    fn push(&mut self, data: Vec<T>, shape: Vec<usize>, requires_grad: bool, op: Op<T>) -> TensorId {
        let needs_grad = requires_grad
            || match &op {
                Op::Leaf => false,
                _ => self.op_inputs(&op).iter().any(|id| self.nodes[id.0].needs_grad),
            };
        self.nodes.push(Node { data, shape, grad: None, requires_grad, needs_grad, op });
        TensorId(self.nodes.len() - 1)
    }

    fn op_inputs(&self, op: &Op<T>) -> Vec<TensorId> {
        match op {
            Op::Leaf => vec![],
            Op::Conv2d { input, weight, bias, .. } => vec![*input, *weight, *bias],
            Op::BatchNormTrain { input, gamma, beta, .. } => vec![*input, *gamma, *beta],
            Op::BatchNormEval { input, gamma, beta, .. } => vec![*input, *gamma, *beta],
            Op::Relu { input } | Op::Reshape { input } | Op::SumAll { input } => vec![*input],
            Op::MaxPool { input, .. } | Op::Softmax { input, .. } => vec![*input],
            Op::Linear { input, weight, bias } => vec![*input, *weight, *bias],
            Op::Concat { a, b, .. } => vec![*a, *b],
            Op::SmoothL1 { pred, target, .. } => vec![*pred, *target],
        }
    }

    pub fn data(&self, id: TensorId) -> &[T] {
        &self.nodes[id.0].data
    }

    pub fn data_mut(&mut self, id: TensorId) -> &mut Vec<T> {
        &mut self.nodes[id.0].data
    }

    pub fn shape(&self, id: TensorId) -> &[usize] {
        &self.nodes[id.0].shape
    }

    pub fn numel(&self, id: TensorId) -> usize {
        self.nodes[id.0].data.len()
    }

    pub fn grad(&self, id: TensorId) -> Option<&[T]> {
        self.nodes[id.0].grad.as_deref()
    }

    pub fn scalar(&self, id: TensorId) -> T {
        self.nodes[id.0].data[0]
    }

    /// Current tape length; pass to [`Graph::reset_to`] to drop later nodes.
    pub fn watermark(&self) -> usize {
        self.nodes.len()
    }

    /// Truncate the tape, dropping every node at or past `mark`.
    pub fn reset_to(&mut self, mark: usize) {
        self.nodes.truncate(mark);
    }

    pub fn zero_grad(&mut self, id: TensorId) {
        self.nodes[id.0].grad = None;
    }

    pub fn zero_all_grads(&mut self) {
        for node in &mut self.nodes {
            node.grad = None;
        }
    }

    // ── Ops ──────────────────────────────────────────────────────────

    pub fn conv2d(
        &mut self,
        input: TensorId,
        weight: TensorId,
        bias: TensorId,
        stride: usize,
        pad: usize,
    ) -> Result<TensorId, TensorError> {
        let ishape = self.shape(input).to_vec();
        let wshape = self.shape(weight).to_vec();
        if ishape.len() != 4 {
            return Err(TensorError::ShapeMismatch {
                op: "conv2d",
                axis: "input rank",
                detail: format!("expected [N,C,H,W], got {ishape:?}"),
            });
        }
        if wshape.len() != 4 {
            return Err(TensorError::ShapeMismatch {
                op: "conv2d",
                axis: "weight rank",
                detail: format!("expected [O,C,kH,kW], got {wshape:?}"),
            });
        }
        let (n, c, h, w) = (ishape[0], ishape[1], ishape[2], ishape[3]);
        let (o, wc, kh, kw) = (wshape[0], wshape[1], wshape[2], wshape[3]);
        if c != wc {
            return Err(TensorError::ShapeMismatch {
                op: "conv2d",
                axis: "channel axis 1",
                detail: format!("input has {c} channels, weight expects {wc}"),
            });
        }
        if self.numel(bias) != o {
            return Err(TensorError::ShapeMismatch {
                op: "conv2d",
                axis: "bias axis 0",
                detail: format!("bias has {} entries, weight produces {o} channels", self.numel(bias)),
            });
        }
        if stride == 0 {
            return Err(TensorError::InvalidArgument { op: "conv2d", detail: "stride must be positive".into() });
        }
        if h + 2 * pad < kh || w + 2 * pad < kw {
            return Err(TensorError::ShapeMismatch {
                op: "conv2d",
                axis: "spatial axes 2,3",
                detail: format!("padded input {}x{} smaller than kernel {kh}x{kw}", h + 2 * pad, w + 2 * pad),
            });
        }
        let oh = kernels::conv_out_dim(h, kh, stride, pad);
        let ow = kernels::conv_out_dim(w, kw, stride, pad);
        let out = kernels::conv2d_forward(
            self.data(input),
            self.data(weight),
            self.data(bias),
            n,
            c,
            h,
            w,
            o,
            kh,
            kw,
            stride,
            pad,
        );
        Ok(self.push(out, vec![n, o, oh, ow], false, Op::Conv2d { input, weight, bias, stride, pad }))
    }

    /// Training-mode batchnorm. Returns the output node plus the biased batch
    /// mean/variance per channel so callers can update running statistics.
    pub fn batchnorm2d_train(
        &mut self,
        input: TensorId,
        gamma: TensorId,
        beta: TensorId,
        eps: f64,
    ) -> Result<(TensorId, Vec<T>, Vec<T>), TensorError> {
        let ishape = self.shape(input).to_vec();
        if ishape.len() != 4 {
            return Err(TensorError::ShapeMismatch {
                op: "batchnorm2d",
                axis: "input rank",
                detail: format!("expected [N,C,H,W], got {ishape:?}"),
            });
        }
        let (n, c, h, w) = (ishape[0], ishape[1], ishape[2], ishape[3]);
        self.check_bn_params(c, gamma, beta)?;
        let count = n * h * w;
        if count < 2 {
            return Err(TensorError::DegenerateBatch { count });
        }
        let (out, mean, invstd) =
            kernels::batchnorm_forward_train(self.data(input), self.data(gamma), self.data(beta), n, c, h * w, eps);
        let batch_mean = mean.clone();
        let eps_t = T::from_f64(eps);
        let batch_var: Vec<T> = invstd.iter().map(|&is| (is * is).recip() - eps_t).collect();
        let id = self.push(out, ishape, false, Op::BatchNormTrain { input, gamma, beta, mean, invstd });
        Ok((id, batch_mean, batch_var))
    }

    /// Evaluation-mode batchnorm with frozen running statistics.
    pub fn batchnorm2d_eval(
        &mut self,
        input: TensorId,
        gamma: TensorId,
        beta: TensorId,
        running_mean: &[T],
        running_var: &[T],
        eps: f64,
    ) -> Result<TensorId, TensorError> {
        let ishape = self.shape(input).to_vec();
        if ishape.len() != 4 {
            return Err(TensorError::ShapeMismatch {
                op: "batchnorm2d",
                axis: "input rank",
                detail: format!("expected [N,C,H,W], got {ishape:?}"),
            });
        }
        let c = ishape[1];
        self.check_bn_params(c, gamma, beta)?;
        if running_mean.len() != c || running_var.len() != c {
            return Err(TensorError::ShapeMismatch {
                op: "batchnorm2d",
                axis: "channel axis 1",
                detail: format!(
                    "running stats hold {}/{} channels, input has {c}",
                    running_mean.len(),
                    running_var.len()
                ),
            });
        }
        let out = kernels::batchnorm_forward_eval(
            self.data(input),
            self.data(gamma),
            self.data(beta),
            running_mean,
            running_var,
            c,
            ishape[2] * ishape[3],
            eps,
        );
        let op = Op::BatchNormEval {
            input,
            gamma,
            beta,
            mean: running_mean.to_vec(),
            var: running_var.to_vec(),
            eps,
        };
        Ok(self.push(out, ishape, false, op))
    }

    fn check_bn_params(&self, c: usize, gamma: TensorId, beta: TensorId) -> Result<(), TensorError> {
        if self.numel(gamma) != c || self.numel(beta) != c {
            return Err(TensorError::ShapeMismatch {
                op: "batchnorm2d",
                axis: "channel axis 1",
                detail: format!(
                    "gamma/beta hold {}/{} entries, input has {c} channels",
                    self.numel(gamma),
                    self.numel(beta)
                ),
            });
        }
        Ok(())
    }

    pub fn relu(&mut self, input: TensorId) -> TensorId {
        let out = kernels::relu_forward(self.data(input));
        let shape = self.shape(input).to_vec();
        self.push(out, shape, false, Op::Relu { input })
    }

    pub fn maxpool2d(&mut self, input: TensorId, k: usize, stride: usize) -> Result<TensorId, TensorError> {
        let ishape = self.shape(input).to_vec();
        if ishape.len() != 4 {
            return Err(TensorError::ShapeMismatch {
                op: "maxpool2d",
                axis: "input rank",
                detail: format!("expected [N,C,H,W], got {ishape:?}"),
            });
        }
        let (n, c, h, w) = (ishape[0], ishape[1], ishape[2], ishape[3]);
        if k == 0 || stride == 0 || h < k || w < k {
            return Err(TensorError::InvalidArgument {
                op: "maxpool2d",
                detail: format!("window {k} stride {stride} does not fit {h}x{w}"),
            });
        }
        let (out, argmax) = kernels::maxpool2d_forward(self.data(input), n, c, h, w, k, stride);
        let oh = (h - k) / stride + 1;
        let ow = (w - k) / stride + 1;
        Ok(self.push(out, vec![n, c, oh, ow], false, Op::MaxPool { input, k, stride, argmax }))
    }

    pub fn linear(&mut self, input: TensorId, weight: TensorId, bias: TensorId) -> Result<TensorId, TensorError> {
        let ishape = self.shape(input).to_vec();
        let wshape = self.shape(weight).to_vec();
        if ishape.len() != 2 || wshape.len() != 2 {
            return Err(TensorError::ShapeMismatch {
                op: "linear",
                axis: "rank",
                detail: format!("expected input [N,F] and weight [G,F], got {ishape:?} and {wshape:?}"),
            });
        }
        let (n, f) = (ishape[0], ishape[1]);
        let (g, wf) = (wshape[0], wshape[1]);
        if f != wf {
            return Err(TensorError::ShapeMismatch {
                op: "linear",
                axis: "feature axis 1",
                detail: format!("input has {f} features, weight expects {wf}"),
            });
        }
        if self.numel(bias) != g {
            return Err(TensorError::ShapeMismatch {
                op: "linear",
                axis: "bias axis 0",
                detail: format!("bias has {} entries, weight produces {g}", self.numel(bias)),
            });
        }
        let out = kernels::linear_forward(self.data(input), self.data(weight), self.data(bias), n, f, g);
        Ok(self.push(out, vec![n, g], false, Op::Linear { input, weight, bias }))
    }

    pub fn concat(&mut self, a: TensorId, b: TensorId, axis: usize) -> Result<TensorId, TensorError> {
        let sa = self.shape(a).to_vec();
        let sb = self.shape(b).to_vec();
        if sa.len() != sb.len() {
            return Err(TensorError::ShapeMismatch {
                op: "concat",
                axis: "rank",
                detail: format!("ranks differ: {sa:?} vs {sb:?}"),
            });
        }
        if axis >= sa.len() {
            return Err(TensorError::AxisOutOfRange { op: "concat", axis, rank: sa.len() });
        }
        for (d, (&da, &db)) in sa.iter().zip(&sb).enumerate() {
            if d != axis && da != db {
                return Err(TensorError::ShapeMismatch {
                    op: "concat",
                    axis: "non-concat axis",
                    detail: format!("axis {d} differs: {da} vs {db}"),
                });
            }
        }
        let out = kernels::concat_forward(self.data(a), self.data(b), &sa, &sb, axis);
        let mut shape = sa.clone();
        shape[axis] += sb[axis];
        Ok(self.push(out, shape, false, Op::Concat { a, b, axis }))
    }

    pub fn reshape(&mut self, input: TensorId, shape: Vec<usize>) -> Result<TensorId, TensorError> {
        let expected: usize = shape.iter().product();
        if expected != self.numel(input) {
            return Err(TensorError::DataLength { shape, expected, actual: self.numel(input) });
        }
        let data = self.data(input).to_vec();
        Ok(self.push(data, shape, false, Op::Reshape { input }))
    }

    /// Mean-reduced smooth L1 loss; output is a scalar node.
    pub fn smooth_l1_loss(&mut self, pred: TensorId, target: TensorId) -> Result<TensorId, TensorError> {
        if self.shape(pred) != self.shape(target) {
            return Err(TensorError::ShapeMismatch {
                op: "smooth_l1_loss",
                axis: "all",
                detail: format!("{:?} vs {:?}", self.shape(pred), self.shape(target)),
            });
        }
        let (loss, diffs) = kernels::smooth_l1_forward(self.data(pred), self.data(target));
        Ok(self.push(vec![loss], vec![1], false, Op::SmoothL1 { pred, target, diffs }))
    }

    pub fn softmax(&mut self, input: TensorId, axis: usize) -> Result<TensorId, TensorError> {
        let shape = self.shape(input).to_vec();
        if axis >= shape.len() {
            return Err(TensorError::AxisOutOfRange { op: "softmax", axis, rank: shape.len() });
        }
        let out = kernels::softmax_forward(self.data(input), &shape, axis);
        Ok(self.push(out, shape, false, Op::Softmax { input, axis }))
    }

    pub fn sum_all(&mut self, input: TensorId) -> TensorId {
        let total: T = self.data(input).iter().copied().sum();
        self.push(vec![total], vec![1], false, Op::SumAll { input })
    }

    // ── Backward ─────────────────────────────────────────────────────

    /// Populate gradients of everything reachable from `loss`.
    ///
    /// Leaf gradients accumulate across calls; intermediate gradients are
    /// cleared at the start of each pass.
    pub fn backward(&mut self, loss: TensorId) -> Result<(), TensorError> {
        if self.numel(loss) != 1 {
            return Err(TensorError::NonScalarLoss { numel: self.numel(loss) });
        }
        for node in &mut self.nodes {
            if !matches!(node.op, Op::Leaf) {
                node.grad = None;
            }
        }
        accumulate(&mut self.nodes[loss.0].grad, &[T::one()]);

        for i in (0..=loss.0).rev() {
            if matches!(self.nodes[i].op, Op::Leaf) {
                continue;
            }
            let Some(grad) = self.nodes[i].grad.take() else { continue };
            self.propagate(i, &grad);
            self.nodes[i].grad = Some(grad);
        }
        Ok(())
    }

    fn needs(&self, id: TensorId) -> bool {
        self.nodes[id.0].needs_grad
    }

    fn propagate(&mut self, i: usize, grad: &[T]) {
        // Split so the current node is readable while input grads mutate;
        // every input id is strictly below i on the tape.
        let (inputs, rest) = self.nodes.split_at_mut(i);
        let node = &rest[0];
        match &node.op {
            Op::Leaf => {}
            Op::Conv2d { input, weight, bias, stride, pad } => {
                let ishape = &inputs[input.0].shape;
                let wshape = &inputs[weight.0].shape;
                let (n, c, h, w) = (ishape[0], ishape[1], ishape[2], ishape[3]);
                let (o, kh, kw) = (wshape[0], wshape[2], wshape[3]);
                let plane = node.shape[2] * node.shape[3];
                if inputs[input.0].needs_grad {
                    let din = kernels::conv2d_backward_input(grad, &inputs[weight.0].data, n, c, h, w, o, kh, kw, *stride, *pad);
                    accumulate(&mut inputs[input.0].grad, &din);
                }
                if inputs[weight.0].needs_grad {
                    let dw = kernels::conv2d_backward_weight(grad, &inputs[input.0].data, n, c, h, w, o, kh, kw, *stride, *pad);
                    accumulate(&mut inputs[weight.0].grad, &dw);
                }
                if inputs[bias.0].needs_grad {
                    let db = kernels::conv2d_backward_bias(grad, n, o, plane);
                    accumulate(&mut inputs[bias.0].grad, &db);
                }
            }
            Op::BatchNormTrain { input, gamma, beta, mean, invstd } => {
                let ishape = &inputs[input.0].shape;
                let (n, c, h, w) = (ishape[0], ishape[1], ishape[2], ishape[3]);
                let (din, dgamma, dbeta) = kernels::batchnorm_backward(
                    grad,
                    &inputs[input.0].data,
                    &inputs[gamma.0].data,
                    mean,
                    invstd,
                    n,
                    c,
                    h * w,
                );
                if inputs[input.0].needs_grad {
                    accumulate(&mut inputs[input.0].grad, &din);
                }
                if inputs[gamma.0].needs_grad {
                    accumulate(&mut inputs[gamma.0].grad, &dgamma);
                }
                if inputs[beta.0].needs_grad {
                    accumulate(&mut inputs[beta.0].grad, &dbeta);
                }
            }
            Op::BatchNormEval { input, gamma, beta, mean, var, eps } => {
                let ishape = &inputs[input.0].shape;
                let c = ishape[1];
                let plane = ishape[2] * ishape[3];
                let planes = ishape[0] * c;
                let eps_t = T::from_f64(*eps);
                if inputs[input.0].needs_grad {
                    let mut din = vec![T::zero(); grad.len()];
                    for p in 0..planes {
                        let ci = p % c;
                        let scale = inputs[gamma.0].data[ci] * (var[ci] + eps_t).sqrt().recip();
                        for j in 0..plane {
                            din[p * plane + j] = grad[p * plane + j] * scale;
                        }
                    }
                    accumulate(&mut inputs[input.0].grad, &din);
                }
                if inputs[gamma.0].needs_grad || inputs[beta.0].needs_grad {
                    let mut dgamma = vec![T::zero(); c];
                    let mut dbeta = vec![T::zero(); c];
                    for p in 0..planes {
                        let ci = p % c;
                        let invstd = (var[ci] + eps_t).sqrt().recip();
                        for j in 0..plane {
                            let g = grad[p * plane + j];
                            let xhat = (inputs[input.0].data[p * plane + j] - mean[ci]) * invstd;
                            dgamma[ci] += g * xhat;
                            dbeta[ci] += g;
                        }
                    }
                    if inputs[gamma.0].needs_grad {
                        accumulate(&mut inputs[gamma.0].grad, &dgamma);
                    }
                    if inputs[beta.0].needs_grad {
                        accumulate(&mut inputs[beta.0].grad, &dbeta);
                    }
                }
            }
            Op::Relu { input } => {
                if inputs[input.0].needs_grad {
                    let din = kernels::relu_backward(grad, &inputs[input.0].data);
                    accumulate(&mut inputs[input.0].grad, &din);
                }
            }
            Op::MaxPool { input, argmax, .. } => {
                if inputs[input.0].needs_grad {
                    let ishape = &inputs[input.0].shape;
                    let planes = ishape[0] * ishape[1];
                    let in_plane = ishape[2] * ishape[3];
                    let out_plane = node.shape[2] * node.shape[3];
                    let din = kernels::maxpool2d_backward(grad, argmax, planes, in_plane, out_plane);
                    accumulate(&mut inputs[input.0].grad, &din);
                }
            }
            Op::Linear { input, weight, bias } => {
                let (n, f) = (inputs[input.0].shape[0], inputs[input.0].shape[1]);
                let g = node.shape[1];
                if inputs[input.0].needs_grad {
                    let din = kernels::linear_backward_input(grad, &inputs[weight.0].data, n, f, g);
                    accumulate(&mut inputs[input.0].grad, &din);
                }
                if inputs[weight.0].needs_grad {
                    let dw = kernels::linear_backward_weight(grad, &inputs[input.0].data, n, f, g);
                    accumulate(&mut inputs[weight.0].grad, &dw);
                }
                if inputs[bias.0].needs_grad {
                    let db = kernels::linear_backward_bias(grad, n, g);
                    accumulate(&mut inputs[bias.0].grad, &db);
                }
            }
            Op::Concat { a, b, axis } => {
                let (da, db) = kernels::concat_backward(grad, &inputs[a.0].shape, &inputs[b.0].shape, *axis);
                if inputs[a.0].needs_grad {
                    accumulate(&mut inputs[a.0].grad, &da);
                }
                if inputs[b.0].needs_grad {
                    accumulate(&mut inputs[b.0].grad, &db);
                }
            }
            Op::Reshape { input } => {
                if inputs[input.0].needs_grad {
                    accumulate(&mut inputs[input.0].grad, grad);
                }
            }
            Op::SmoothL1 { pred, target, diffs } => {
                let dpred = kernels::smooth_l1_backward(grad[0], diffs);
                if inputs[pred.0].needs_grad {
                    accumulate(&mut inputs[pred.0].grad, &dpred);
                }
                if inputs[target.0].needs_grad {
                    let dtarget: Vec<T> = dpred.iter().map(|&v| -v).collect();
                    accumulate(&mut inputs[target.0].grad, &dtarget);
                }
            }
            Op::Softmax { input, axis } => {
                if inputs[input.0].needs_grad {
                    let din = kernels::softmax_backward(grad, &node.data, &node.shape, *axis);
                    accumulate(&mut inputs[input.0].grad, &din);
                }
            }
            Op::SumAll { input } => {
                if inputs[input.0].needs_grad {
                    let din = vec![grad[0]; inputs[input.0].data.len()];
                    accumulate(&mut inputs[input.0].grad, &din);
                }
            }
        }
    }
}

fn accumulate<T: Scalar>(slot: &mut Option<Vec<T>>, src: &[T]) {
    match slot {
        Some(buf) => {
            for (a, b) in buf.iter_mut().zip(src) {
                *a += *b;
            }
        }
        None => *slot = Some(src.to_vec()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_backward_gives_ones() {
        let mut g: Graph<f64> = Graph::new();
        let x = g.leaf(vec![0.3, -1.2, 4.0, 0.0], vec![2, 2], true).unwrap();
        let loss = g.sum_all(x);
        g.backward(loss).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn smooth_l1_linear_branch_gradient() {
        let mut g: Graph<f64> = Graph::new();
        let x = g.leaf(vec![2.0], vec![1], true).unwrap();
        let zero = g.leaf(vec![0.0], vec![1], false).unwrap();
        let loss = g.smooth_l1_loss(x, zero).unwrap();
        assert!((g.scalar(loss) - 1.5).abs() < 1e-12);
        g.backward(loss).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[1.0]);
    }

    #[test]
    fn repeated_backward_accumulates_leaf_grads() {
        let mut g: Graph<f64> = Graph::new();
        let x = g.leaf(vec![1.0, 2.0], vec![2], true).unwrap();
        let loss = g.sum_all(x);
        g.backward(loss).unwrap();
        g.backward(loss).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[2.0, 2.0]);
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let mut g: Graph<f64> = Graph::new();
        let x = g.leaf(vec![1.0, 2.0], vec![2], true).unwrap();
        assert!(matches!(g.backward(x), Err(TensorError::NonScalarLoss { numel: 2 })));
    }

    #[test]
    fn conv_shape_errors_name_the_axis() {
        let mut g: Graph<f64> = Graph::new();
        let x = g.leaf(vec![0.0; 2 * 3 * 3], vec![1, 2, 3, 3], false).unwrap();
        let w = g.leaf(vec![0.0; 3 * 9], vec![1, 3, 3, 3], true).unwrap();
        let b = g.leaf(vec![0.0], vec![1], true).unwrap();
        let err = g.conv2d(x, w, b, 1, 1).unwrap_err();
        assert!(err.to_string().contains("channel axis 1"), "got: {err}");
    }

    #[test]
    fn concat_feature_axis() {
        let mut g: Graph<f64> = Graph::new();
        let a = g.leaf(vec![0.0; 2 * 5], vec![2, 5], false).unwrap();
        let b = g.leaf(vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0], vec![2, 3], false).unwrap();
        let c = g.concat(a, b, 1).unwrap();
        assert_eq!(g.shape(c), &[2, 8]);
        assert!(g.concat(a, b, 2).is_err());
    }

    #[test]
    fn batchnorm_train_normalizes_and_rejects_degenerate_batch() {
        let mut g: Graph<f64> = Graph::new();
        let x = g
            .leaf((0..16).map(|v| v as f64 * 0.37 - 2.0).collect(), vec![2, 2, 2, 2], true)
            .unwrap();
        let gamma = g.leaf(vec![1.0, 1.0], vec![2], true).unwrap();
        let beta = g.leaf(vec![0.0, 0.0], vec![2], true).unwrap();
        let (y, _, _) = g.batchnorm2d_train(x, gamma, beta, 1e-5).unwrap();
        // per-channel mean ~ 0, variance ~ 1
        for c in 0..2 {
            let vals: Vec<f64> = (0..2)
                .flat_map(|n| g.data(y)[(n * 2 + c) * 4..][..4].to_vec())
                .collect();
            let mean: f64 = vals.iter().sum::<f64>() / 8.0;
            let var: f64 = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 8.0;
            assert!(mean.abs() < 1e-6, "channel {c} mean {mean}");
            assert!((var - 1.0).abs() < 1e-5, "channel {c} var {var}");
        }

        let single = g.leaf(vec![1.0], vec![1, 1, 1, 1], false).unwrap();
        let g1 = g.leaf(vec![1.0], vec![1], false).unwrap();
        let b1 = g.leaf(vec![0.0], vec![1], false).unwrap();
        assert!(matches!(
            g.batchnorm2d_train(single, g1, b1, 1e-5),
            Err(TensorError::DegenerateBatch { count: 1 })
        ));
    }

    #[test]
    fn batchnorm_eval_with_unit_stats_is_identity_up_to_eps() {
        let mut g: Graph<f64> = Graph::new();
        let x = g.leaf(vec![0.5, -1.5, 2.5, 0.0], vec![1, 1, 2, 2], false).unwrap();
        let gamma = g.leaf(vec![1.0], vec![1], false).unwrap();
        let beta = g.leaf(vec![0.0], vec![1], false).unwrap();
        let y = g.batchnorm2d_eval(x, gamma, beta, &[0.0], &[1.0], 1e-5).unwrap();
        for (a, b) in g.data(x).to_vec().iter().zip(g.data(y)) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn reset_to_truncates_activations() {
        let mut g: Graph<f64> = Graph::new();
        let x = g.leaf(vec![1.0, -1.0], vec![2], true).unwrap();
        let mark = g.watermark();
        let y = g.relu(x);
        let _loss = g.sum_all(y);
        assert_eq!(g.len(), 3);
        g.reset_to(mark);
        assert_eq!(g.len(), 1);
        assert_eq!(g.data(x), &[1.0, -1.0]);
    }
}
