use super::gemm::{gemm_acc, runs, MatRef};
use super::sparse::SparseRows;
use super::tensor::Tensor;
use super::AutodiffError;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DiffTensor(usize);

/// Handle to a constant sparse binary input registered on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SparseInput(usize);

/// First argument of the convolution ops: a recorded dense value or a
/// constant sparse binary input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Input {
    Dense(DiffTensor),
    Sparse(SparseInput),
}

impl From<DiffTensor> for Input {
    fn from(x: DiffTensor) -> Self {
        Input::Dense(x)
    }
}

impl From<SparseInput> for Input {
    fn from(x: SparseInput) -> Self {
        Input::Sparse(x)
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Linear { x: DiffTensor, w: DiffTensor },
    ConvTime { x: Input, w: DiffTensor, window: usize },
    ConvPitch { f: Input, w: DiffTensor, window: usize },
    Relu(DiffTensor),
    MeanPool { x: DiffTensor, axes: Vec<usize> },
    Add(DiffTensor, DiffTensor),
    Sum(DiffTensor),
    SoftmaxCe { logits: DiffTensor, label: usize, probs: Vec<f64> },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Records operations in execution order so gradients can be propagated
/// backwards in a single reverse sweep.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    sparse: Vec<SparseRows>,
}

fn mismatch(msg: String) -> AutodiffError {
    AutodiffError::ShapeMismatch(msg)
}

/// Dimensions of a convolution input viewed as `[groups, rows, cols]`.
#[derive(Debug, Clone, Copy)]
struct Dims3 {
    groups: usize,
    rows: usize,
    cols: usize,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Records a leaf value. Parameters use `requires_grad = true`.
    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Result<DiffTensor, AutodiffError> {
        self.push(value, Op::Leaf, requires_grad, "leaf")
    }

    pub fn param(&mut self, value: Tensor) -> Result<DiffTensor, AutodiffError> {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor) -> Result<DiffTensor, AutodiffError> {
        self.leaf(value, false)
    }

    pub fn sparse(&mut self, rows: SparseRows) -> SparseInput {
        self.sparse.push(rows);
        SparseInput(self.sparse.len() - 1)
    }

    pub fn value(&self, x: DiffTensor) -> &Tensor {
        &self.nodes[x.0].value
    }

    pub fn requires_grad(&self, x: DiffTensor) -> bool {
        self.nodes[x.0].requires_grad
    }

    fn push(
        &mut self,
        value: Tensor,
        op: Op,
        requires_grad: bool,
        name: &'static str,
    ) -> Result<DiffTensor, AutodiffError> {
        if !value.is_finite() {
            return Err(AutodiffError::NonFinite(name));
        }
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Ok(DiffTensor(self.nodes.len() - 1))
    }

    fn input_dims(&self, x: Input, rank2_ok: bool) -> Result<Dims3, AutodiffError> {
        match x {
            Input::Sparse(s) => {
                let [groups, rows, cols] = self.sparse[s.0].shape();
                Ok(Dims3 { groups, rows, cols })
            }
            Input::Dense(d) => match *self.value(d).shape() {
                [rows, cols] if rank2_ok => Ok(Dims3 {
                    groups: 1,
                    rows,
                    cols,
                }),
                [groups, rows, cols] => Ok(Dims3 { groups, rows, cols }),
                ref other => Err(mismatch(format!("convolution input of shape {other:?}"))),
            },
        }
    }

    fn input_requires_grad(&self, x: Input) -> bool {
        match x {
            Input::Dense(d) => self.requires_grad(d),
            Input::Sparse(_) => false,
        }
    }

    /// Matrix product along the last axis: `[.., a] × [a, b] → [.., b]`.
    pub fn linear(&mut self, x: DiffTensor, w: DiffTensor) -> Result<DiffTensor, AutodiffError> {
        let xs = self.value(x).shape().to_vec();
        let ws = self.value(w).shape().to_vec();
        let (Some(&a), [wa, b]) = (xs.last(), ws.as_slice()) else {
            return Err(mismatch(format!("linear {xs:?} × {ws:?}")));
        };
        if a != *wa {
            return Err(mismatch(format!("linear {xs:?} × {ws:?}")));
        }
        let b = *b;
        let m = self.value(x).len() / a.max(1);
        let mut out_shape = xs[..xs.len() - 1].to_vec();
        out_shape.push(b);
        let mut out = Tensor::zeros(&out_shape);
        gemm_acc(
            MatRef::row_major(self.value(x).data(), m, a),
            MatRef::row_major(self.value(w).data(), a, b),
            out.data_mut(),
            b,
        );
        let rg = self.requires_grad(x) || self.requires_grad(w);
        self.push(out, Op::Linear { x, w }, rg, "linear")
    }

    /// Width-`window` convolution along the row (time) axis, applied to every
    /// group independently with shared weights and no bias.
    ///
    /// Input `[T, c]` or `[G, T, c]`, weights `[window·c, k]`, output `[T, k]`
    /// or `[G, T, k]`. Output row t sees input rows `t..t+window`; rows past
    /// the end read as zero.
    pub fn conv_time(
        &mut self,
        x: impl Into<Input>,
        w: DiffTensor,
        window: usize,
    ) -> Result<DiffTensor, AutodiffError> {
        let x = x.into();
        let d = self.input_dims(x, true)?;
        let ws = self.value(w).shape().to_vec();
        if window == 0 || ws.len() != 2 || ws[0] != window * d.cols {
            return Err(mismatch(format!(
                "conv_time window {window} over {} channels with weights {ws:?}",
                d.cols
            )));
        }
        let k = ws[1];
        let out_shape = match x {
            Input::Dense(v) if self.value(v).shape().len() == 2 => vec![d.rows, k],
            _ => vec![d.groups, d.rows, k],
        };
        let mut out = Tensor::zeros(&out_shape);
        let wv = self.value(w).data();
        let (c, rows) = (d.cols, d.rows);
        match x {
            Input::Dense(xv) => {
                let xd = self.value(xv).data();
                for g in 0..d.groups {
                    let xg = &xd[g * rows * c..(g + 1) * rows * c];
                    let og = &mut out.data_mut()[g * rows * k..(g + 1) * rows * k];
                    let live = runs(rows, |r| xg[r * c..(r + 1) * c].iter().any(|&v| v != 0.0));
                    for o in 0..window {
                        let wo = MatRef::row_major(&wv[o * c * k..(o + 1) * c * k], c, k);
                        for &(r0, r1) in &live {
                            let r0 = r0.max(o);
                            if r0 >= r1 {
                                continue;
                            }
                            let a = MatRef::row_major(&xg[r0 * c..r1 * c], r1 - r0, c);
                            gemm_acc(a, wo, &mut og[(r0 - o) * k..], k);
                        }
                    }
                }
            }
            Input::Sparse(s) => {
                let sp = &self.sparse[s.0];
                let od = out.data_mut();
                for g in 0..d.groups {
                    for r in 0..rows {
                        for &ch in sp.row(g, r) {
                            for o in 0..window.min(r + 1) {
                                let t = r - o;
                                let wrow = &wv[(o * c + ch as usize) * k..][..k];
                                let orow = &mut od[(g * rows + t) * k..][..k];
                                for (acc, wt) in orow.iter_mut().zip(wrow) {
                                    *acc += wt;
                                }
                            }
                        }
                    }
                }
            }
        }
        let rg = self.input_requires_grad(x) || self.requires_grad(w);
        self.push(out, Op::ConvTime { x, w, window }, rg, "conv_time")
    }

    /// Width-`window` convolution along the pitch axis.
    ///
    /// Input `[T, P, N]`, weights `[window·P, k]` with row `p·window + o`
    /// applied to pitch `u + o` of spine p, output `[T, N, k]`. Pitches at or
    /// above N read as zero; there is no padding below pitch 0.
    pub fn conv_pitch(
        &mut self,
        f: impl Into<Input>,
        w: DiffTensor,
        window: usize,
    ) -> Result<DiffTensor, AutodiffError> {
        let f = f.into();
        let d = self.input_dims(f, false)?;
        let (times, spines, pitches) = (d.groups, d.rows, d.cols);
        let ws = self.value(w).shape().to_vec();
        if window == 0 || window > pitches || ws.len() != 2 || ws[0] != window * spines {
            return Err(mismatch(format!(
                "conv_pitch window {window} over [{times}, {spines}, {pitches}] with weights {ws:?}"
            )));
        }
        let k = ws[1];
        let mut out = Tensor::zeros(&[times, pitches, k]);
        {
            let wv = self.value(w).data();
            let od = out.data_mut();
            let mut add_bit = |t: usize, p: usize, n: usize, v: f64| {
                for o in 0..window.min(n + 1) {
                    let u = n - o;
                    let wrow = &wv[(p * window + o) * k..][..k];
                    let orow = &mut od[(t * pitches + u) * k..][..k];
                    for (acc, wt) in orow.iter_mut().zip(wrow) {
                        *acc += v * wt;
                    }
                }
            };
            match f {
                Input::Sparse(s) => {
                    let sp = &self.sparse[s.0];
                    for t in 0..times {
                        for p in 0..spines {
                            for &n in sp.row(t, p) {
                                add_bit(t, p, n as usize, 1.0);
                            }
                        }
                    }
                }
                Input::Dense(fv) => {
                    let fd = self.value(fv).data();
                    for t in 0..times {
                        for p in 0..spines {
                            for n in 0..pitches {
                                let v = fd[(t * spines + p) * pitches + n];
                                if v != 0.0 {
                                    add_bit(t, p, n, v);
                                }
                            }
                        }
                    }
                }
            }
        }
        let rg = self.input_requires_grad(f) || self.requires_grad(w);
        self.push(out, Op::ConvPitch { f, w, window }, rg, "conv_pitch")
    }

    /// Elementwise `max(0, x)`.
    pub fn relu(&mut self, x: DiffTensor) -> Result<DiffTensor, AutodiffError> {
        let xv = self.value(x);
        let data = xv.data().iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
        let out = Tensor::from_vec(xv.shape(), data)?;
        let rg = self.requires_grad(x);
        self.push(out, Op::Relu(x), rg, "relu")
    }

    /// Mean over `axes`, dividing by the full extent of the pooled axes.
    pub fn mean_pool(&mut self, x: DiffTensor, axes: &[usize]) -> Result<DiffTensor, AutodiffError> {
        let shape = self.value(x).shape().to_vec();
        let mut axes = axes.to_vec();
        axes.sort_unstable();
        axes.dedup();
        if axes.is_empty() || axes.iter().any(|&a| a >= shape.len()) {
            return Err(mismatch(format!("mean_pool axes {axes:?} on shape {shape:?}")));
        }
        let denom: usize = axes.iter().map(|&a| shape[a]).product();
        let mut data = self.value(x).data().to_vec();
        let mut cur = shape.clone();
        for &axis in axes.iter().rev() {
            data = sum_axis(&data, &cur, axis);
            cur.remove(axis);
        }
        let scale = if denom == 0 { 0.0 } else { 1.0 / denom as f64 };
        let mut out = Tensor::from_vec(&cur, data)?;
        out.scale(scale);
        let rg = self.requires_grad(x);
        self.push(out, Op::MeanPool { x, axes }, rg, "mean_pool")
    }

    pub fn add(&mut self, a: DiffTensor, b: DiffTensor) -> Result<DiffTensor, AutodiffError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(mismatch(format!("add {:?} + {:?}", av.shape(), bv.shape())));
        }
        let data = av.data().iter().zip(bv.data()).map(|(x, y)| x + y).collect();
        let out = Tensor::from_vec(av.shape(), data)?;
        let rg = self.requires_grad(a) || self.requires_grad(b);
        self.push(out, Op::Add(a, b), rg, "add")
    }

    /// Sum of all elements, as a scalar.
    pub fn sum(&mut self, x: DiffTensor) -> Result<DiffTensor, AutodiffError> {
        let total = self.value(x).data().iter().sum();
        let rg = self.requires_grad(x);
        self.push(Tensor::scalar(total), Op::Sum(x), rg, "sum")
    }

    /// Negative log of the softmax probability of `label`.
    pub fn softmax_cross_entropy(
        &mut self,
        logits: DiffTensor,
        label: usize,
    ) -> Result<DiffTensor, AutodiffError> {
        let z = self.value(logits).data();
        if z.len() < 2 {
            return Err(mismatch(format!("softmax over {} classes", z.len())));
        }
        if label >= z.len() {
            return Err(AutodiffError::LabelOutOfRange {
                label,
                classes: z.len(),
            });
        }
        let (arg_max, max) = z
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
        // ln Σ exp(z − max) = ln(1 + rest); ln_1p keeps tiny losses accurate.
        let rest: f64 = z
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != arg_max)
            .map(|(_, v)| (v - max).exp())
            .sum();
        let log_sum = rest.ln_1p();
        let probs: Vec<f64> = z.iter().map(|v| (v - max - log_sum).exp()).collect();
        let loss = (max - z[label]) + log_sum;
        let rg = self.requires_grad(logits);
        self.push(
            Tensor::scalar(loss),
            Op::SoftmaxCe {
                logits,
                label,
                probs,
            },
            rg,
            "softmax_cross_entropy",
        )
    }

    /// Reverse sweep from a one-element output with seed gradient 1.
    pub fn backward(&self, output: DiffTensor) -> Result<Gradients, AutodiffError> {
        self.backward_with_seed(output, 1.0)
    }

    /// Reverse sweep with `d output = seed`; used to scale per-example losses
    /// by 1 / batch size.
    pub fn backward_with_seed(&self, output: DiffTensor, seed: f64) -> Result<Gradients, AutodiffError> {
        let out_len = self.value(output).len();
        if out_len != 1 {
            return Err(mismatch(format!("backward from a tensor of {out_len} elements")));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        let mut seed_t = Tensor::zeros(self.value(output).shape());
        seed_t.data_mut()[0] = seed;
        grads[output.0] = Some(seed_t);

        for id in (0..=output.0).rev() {
            let node = &self.nodes[id];
            if !node.requires_grad {
                continue;
            }
            if let Op::Leaf = node.op {
                continue;
            }
            let Some(g) = grads[id].take() else { continue };
            self.propagate(&node.op, &node.value, &g, &mut grads);
        }
        Ok(Gradients { grads })
    }

    fn grad_slot<'g>(&self, grads: &'g mut [Option<Tensor>], x: DiffTensor) -> &'g mut Tensor {
        grads[x.0].get_or_insert_with(|| Tensor::zeros(self.value(x).shape()))
    }

    fn propagate(&self, op: &Op, value: &Tensor, g: &Tensor, grads: &mut [Option<Tensor>]) {
        match op {
            Op::Leaf => {}
            Op::Linear { x, w } => {
                let (xv, wv) = (self.value(*x), self.value(*w));
                let (a, b) = (wv.shape()[0], wv.shape()[1]);
                let m = xv.len() / a.max(1);
                let gm = MatRef::row_major(g.data(), m, b);
                if self.requires_grad(*x) {
                    let dx = self.grad_slot(grads, *x);
                    gemm_acc(gm, MatRef::row_major(wv.data(), a, b).t(), dx.data_mut(), a);
                }
                if self.requires_grad(*w) {
                    let dw = self.grad_slot(grads, *w);
                    gemm_acc(MatRef::row_major(xv.data(), m, a).t(), gm, dw.data_mut(), b);
                }
            }
            Op::ConvTime { x, w, window } => self.conv_time_backward(*x, *w, *window, g, grads),
            Op::ConvPitch { f, w, window } => self.conv_pitch_backward(*f, *w, *window, g, grads),
            Op::Relu(x) => {
                if self.requires_grad(*x) {
                    let xd = self.value(*x).data().to_vec();
                    let dx = self.grad_slot(grads, *x);
                    for ((d, &xv), &gv) in dx.data_mut().iter_mut().zip(&xd).zip(g.data()) {
                        if xv > 0.0 {
                            *d += gv;
                        }
                    }
                }
            }
            Op::MeanPool { x, axes } => {
                let in_shape = self.value(*x).shape().to_vec();
                let denom: usize = axes.iter().map(|&a| in_shape[a]).product();
                let scale = if denom == 0 { 0.0 } else { 1.0 / denom as f64 };
                let mut data: Vec<f64> = g.data().iter().map(|v| v * scale).collect();
                let mut cur = value.shape().to_vec();
                for &axis in axes {
                    data = broadcast_axis(&data, &cur, axis, in_shape[axis]);
                    cur.insert(axis, in_shape[axis]);
                }
                let dx = self.grad_slot(grads, *x);
                for (d, v) in dx.data_mut().iter_mut().zip(&data) {
                    *d += v;
                }
            }
            Op::Add(a, b) => {
                for x in [*a, *b] {
                    if self.requires_grad(x) {
                        self.grad_slot(grads, x).add_assign(g);
                    }
                }
            }
            Op::Sum(x) => {
                let gv = g.item();
                for d in self.grad_slot(grads, *x).data_mut() {
                    *d += gv;
                }
            }
            Op::SoftmaxCe {
                logits,
                label,
                probs,
            } => {
                let gv = g.item();
                let dz = self.grad_slot(grads, *logits);
                for (i, (d, p)) in dz.data_mut().iter_mut().zip(probs).enumerate() {
                    let onehot = if i == *label { 1.0 } else { 0.0 };
                    *d += gv * (p - onehot);
                }
            }
        }
    }

    fn conv_time_backward(
        &self,
        x: Input,
        w: DiffTensor,
        window: usize,
        g: &Tensor,
        grads: &mut [Option<Tensor>],
    ) {
        let d = self.input_dims(x, true).expect("validated in forward");
        let (c, rows) = (d.cols, d.rows);
        let wv = self.value(w);
        let k = wv.shape()[1];
        let gd = g.data();

        if self.requires_grad(w) {
            let dwd = self.grad_slot(grads, w).data_mut();
            match x {
                Input::Dense(xv) => {
                    let xd = self.value(xv).data();
                    for gi in 0..d.groups {
                        let xg = &xd[gi * rows * c..(gi + 1) * rows * c];
                        let gg = &gd[gi * rows * k..(gi + 1) * rows * k];
                        let live = runs(rows, |r| xg[r * c..(r + 1) * c].iter().any(|&v| v != 0.0));
                        for o in 0..window {
                            for &(r0, r1) in &live {
                                let r0 = r0.max(o);
                                if r0 >= r1 {
                                    continue;
                                }
                                let len = r1 - r0;
                                let a = MatRef::row_major(&xg[r0 * c..r1 * c], len, c).t();
                                let b = MatRef::row_major(&gg[(r0 - o) * k..(r1 - o) * k], len, k);
                                gemm_acc(a, b, &mut dwd[o * c * k..(o + 1) * c * k], k);
                            }
                        }
                    }
                }
                Input::Sparse(s) => {
                    let sp = &self.sparse[s.0];
                    for gi in 0..d.groups {
                        for r in 0..rows {
                            for &ch in sp.row(gi, r) {
                                for o in 0..window.min(r + 1) {
                                    let t = r - o;
                                    let grow = &gd[(gi * rows + t) * k..][..k];
                                    let wrow = &mut dwd[(o * c + ch as usize) * k..][..k];
                                    for (acc, gv) in wrow.iter_mut().zip(grow) {
                                        *acc += gv;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }

        if let Input::Dense(xv) = x {
            if self.requires_grad(xv) {
                let wd = wv.data();
                let dx = self.grad_slot(grads, xv);
                let dxd = dx.data_mut();
                for gi in 0..d.groups {
                    let gg = &gd[gi * rows * k..(gi + 1) * rows * k];
                    let dxg = &mut dxd[gi * rows * c..(gi + 1) * rows * c];
                    let live = runs(rows, |t| gg[t * k..(t + 1) * k].iter().any(|&v| v != 0.0));
                    for o in 0..window {
                        let wo = MatRef::row_major(&wd[o * c * k..(o + 1) * c * k], c, k).t();
                        for &(q0, q1) in &live {
                            // Output row q feeds input row q + o.
                            let q1 = q1.min(rows.saturating_sub(o));
                            if q0 >= q1 {
                                continue;
                            }
                            let a = MatRef::row_major(&gg[q0 * k..q1 * k], q1 - q0, k);
                            gemm_acc(a, wo, &mut dxg[(q0 + o) * c..], c);
                        }
                    }
                }
            }
        }
    }

    fn conv_pitch_backward(
        &self,
        f: Input,
        w: DiffTensor,
        window: usize,
        g: &Tensor,
        grads: &mut [Option<Tensor>],
    ) {
        let d = self.input_dims(f, false).expect("validated in forward");
        let (times, spines, pitches) = (d.groups, d.rows, d.cols);
        let wv = self.value(w);
        let k = wv.shape()[1];
        let gd = g.data();

        if self.requires_grad(w) {
            let dw = self.grad_slot(grads, w);
            let dwd = dw.data_mut();
            let mut add_bit = |t: usize, p: usize, n: usize, v: f64| {
                for o in 0..window.min(n + 1) {
                    let u = n - o;
                    let grow = &gd[(t * pitches + u) * k..][..k];
                    let wrow = &mut dwd[(p * window + o) * k..][..k];
                    for (acc, gv) in wrow.iter_mut().zip(grow) {
                        *acc += v * gv;
                    }
                }
            };
            match f {
                Input::Sparse(s) => {
                    let sp = &self.sparse[s.0];
                    for t in 0..times {
                        for p in 0..spines {
                            for &n in sp.row(t, p) {
                                add_bit(t, p, n as usize, 1.0);
                            }
                        }
                    }
                }
                Input::Dense(fv) => {
                    let fd = self.value(fv).data();
                    for t in 0..times {
                        for p in 0..spines {
                            for n in 0..pitches {
                                let v = fd[(t * spines + p) * pitches + n];
                                if v != 0.0 {
                                    add_bit(t, p, n, v);
                                }
                            }
                        }
                    }
                }
            }
        }

        if let Input::Dense(fv) = f {
            if self.requires_grad(fv) {
                let wd = wv.data();
                let df = self.grad_slot(grads, fv);
                let dfd = df.data_mut();
                for t in 0..times {
                    for p in 0..spines {
                        for n in 0..pitches {
                            let mut acc = 0.0;
                            for o in 0..window.min(n + 1) {
                                let grow = &gd[(t * pitches + n - o) * k..][..k];
                                let wrow = &wd[(p * window + o) * k..][..k];
                                acc += grow.iter().zip(wrow).map(|(a, b)| a * b).sum::<f64>();
                            }
                            dfd[(t * spines + p) * pitches + n] += acc;
                        }
                    }
                }
            }
        }
    }
}

fn split_at_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let pre = shape[..axis].iter().product();
    let post = shape[axis + 1..].iter().product();
    (pre, shape[axis], post)
}

fn sum_axis(data: &[f64], shape: &[usize], axis: usize) -> Vec<f64> {
    let (pre, len, post) = split_at_axis(shape, axis);
    let mut out = vec![0.0; pre * post];
    for i in 0..pre {
        for j in 0..len {
            let src = &data[(i * len + j) * post..][..post];
            let dst = &mut out[i * post..][..post];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }
    out
}

/// Inverse of [`sum_axis`]'s shape change: repeats `data` `len` times along a
/// new axis inserted at `axis` of `shape`.
fn broadcast_axis(data: &[f64], shape: &[usize], axis: usize, len: usize) -> Vec<f64> {
    let pre: usize = shape[..axis].iter().product();
    let post: usize = shape[axis..].iter().product();
    let mut out = vec![0.0; pre * len * post];
    for i in 0..pre {
        let src = &data[i * post..][..post];
        for j in 0..len {
            out[(i * len + j) * post..][..post].copy_from_slice(src);
        }
    }
    out
}

/// Gradients produced by one reverse sweep.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of a leaf, or `None` if nothing flowed into it.
    pub fn get(&self, x: DiffTensor) -> Option<&Tensor> {
        self.grads.get(x.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, x: DiffTensor) -> Option<Tensor> {
        self.grads.get_mut(x.0).and_then(Option::take)
    }
}
