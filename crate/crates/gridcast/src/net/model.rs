//! The occupancy prediction network.
//!
//! A U-shaped convolutional encoder–decoder maps a single dynamic grid
//! frame to `1 + K` occupancy channels: the static environment map plus the
//! predicted occupancy at `K` future times. Each encoder stage runs two
//! stride-1 convolutions and one stride-2 downsampling convolution; each
//! decoder stage mirrors it with a stride-2 transpose convolution, a skip
//! concatenation from the matching encoder stage, and two stride-1 mixing
//! convolutions. Every convolution is followed by a rectifier except the
//! final 1x1 head, which applies the logistic function so the outputs are
//! probabilities.
//!
//! All arithmetic is `f64`; layers are stored in one flat parameter vector
//! so the optimizer and the checkpoint format can treat the network as a
//! single array.

use std::ops::Range;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::grid::{Channel, DogmaFrame, CHANNEL_COUNT};

use super::act::{logistic_backward, logistic_forward, relu_backward, relu_forward};
use super::conv::{conv_backward, conv_forward, deconv_backward, deconv_forward, ConvGrads};
use super::tensor::Tensor;
use super::NetError;

/// Per-channel scale applied when a grid frame becomes network input.
/// Masses already live in [0, 1]; velocities (a few m/s) and velocity
/// variances (prior 10) are brought into a comparable range so no input
/// channel dwarfs the others at initialization.
pub const INPUT_SCALE: [f64; CHANNEL_COUNT] = [1.0, 1.0, 0.25, 0.25, 0.1, 0.1, 0.1];

/// Network topology. The spatial extent is not part of the spec: the same
/// weights run on any grid whose sides are divisible by `2^widths.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    /// Input channels; grid frames have [`CHANNEL_COUNT`].
    pub in_channels: usize,
    /// Number of future-occupancy output channels.
    pub horizon_steps: usize,
    /// Time spacing of those channels in seconds; carried along so a
    /// checkpoint knows what its outputs mean.
    pub step_seconds: f32,
    /// Channel width of each encoder stage, shallow to deep.
    pub widths: Vec<usize>,
    /// Side length of every non-head convolution kernel; must be odd.
    pub kernel: usize,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        NetworkSpec {
            in_channels: CHANNEL_COUNT,
            horizon_steps: 6,
            step_seconds: 0.5,
            widths: vec![16, 32, 64],
            kernel: 3,
        }
    }
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<(), NetError> {
        if self.in_channels == 0 || self.horizon_steps == 0 {
            return Err(NetError::BadSpec(format!(
                "need at least one input and one horizon channel, got {} and {}",
                self.in_channels, self.horizon_steps
            )));
        }
        if !(self.step_seconds > 0.0) {
            return Err(NetError::BadSpec(format!(
                "horizon step must be positive, got {}",
                self.step_seconds
            )));
        }
        if self.widths.is_empty() || self.widths.iter().any(|&w| w == 0) {
            return Err(NetError::BadSpec(format!(
                "stage widths must be non-empty and positive, got {:?}",
                self.widths
            )));
        }
        if self.kernel % 2 == 0 {
            return Err(NetError::BadSpec(format!(
                "kernel must be odd, got {}",
                self.kernel
            )));
        }
        Ok(())
    }

    /// Output channels: one static map plus one map per horizon step.
    pub fn out_channels(&self) -> usize {
        1 + self.horizon_steps
    }

    /// Factor by which input sides must be divisible.
    pub fn spatial_divisor(&self) -> usize {
        1 << self.widths.len()
    }

    /// The layer sequence in execution order.
    pub fn layers(&self) -> Vec<LayerDef> {
        let s = self.widths.len();
        let k = self.kernel;
        let mut defs = Vec::with_capacity(6 * s + 1);
        let mut prev = self.in_channels;
        for (i, &w) in self.widths.iter().enumerate() {
            defs.push(LayerDef::conv(format!("enc{i}_a"), prev, w, k, 1));
            defs.push(LayerDef::conv(format!("enc{i}_b"), w, w, k, 1));
            defs.push(LayerDef::conv(format!("enc{i}_down"), w, w, k, 2));
            prev = w;
        }
        for j in 0..s {
            let stage = s - 1 - j;
            let w = self.widths[stage];
            let below = if stage + 1 < s { self.widths[stage + 1] } else { self.widths[s - 1] };
            defs.push(LayerDef::deconv(format!("dec{stage}_up"), below, w, k, 2));
            defs.push(LayerDef::conv(format!("dec{stage}_mix_a"), 2 * w, w, k, 1));
            defs.push(LayerDef::conv(format!("dec{stage}_mix_b"), w, w, k, 1));
        }
        defs.push(LayerDef::conv(
            "head".to_string(),
            self.widths[0],
            self.out_channels(),
            1,
            1,
        ));
        defs
    }

    /// Total scalar parameters across all layers.
    pub fn parameter_count(&self) -> usize {
        self.layers().iter().map(|l| l.weight_len() + l.bias_len()).sum()
    }
}

/// One convolution or transpose-convolution layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerDef {
    pub name: String,
    /// True for transpose convolutions (the decoder upsamplers).
    pub deconv: bool,
    pub in_c: usize,
    pub out_c: usize,
    pub kernel: usize,
    pub stride: usize,
}

impl LayerDef {
    fn conv(name: String, in_c: usize, out_c: usize, kernel: usize, stride: usize) -> Self {
        LayerDef {
            name,
            deconv: false,
            in_c,
            out_c,
            kernel,
            stride,
        }
    }

    fn deconv(name: String, in_c: usize, out_c: usize, kernel: usize, stride: usize) -> Self {
        LayerDef {
            name,
            deconv: true,
            in_c,
            out_c,
            kernel,
            stride,
        }
    }

    pub fn weight_len(&self) -> usize {
        self.in_c * self.out_c * self.kernel * self.kernel
    }

    pub fn bias_len(&self) -> usize {
        self.out_c
    }
}

/// Network weights as one flat `f64` vector with a per-layer index.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    spec: NetworkSpec,
    data: Vec<f64>,
    layers: Vec<LayerDef>,
    offsets: Vec<(Range<usize>, Range<usize>)>,
}

impl NetworkParams {
    /// He-initialized weights (normal with variance `2 / fan_in`) and zero
    /// biases, drawn from one seeded stream in layer order.
    pub fn init(spec: NetworkSpec, seed: u64) -> Result<Self, NetError> {
        spec.validate()?;
        let layers = spec.layers();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::with_capacity(spec.parameter_count());
        let mut offsets = Vec::with_capacity(layers.len());
        for layer in &layers {
            let std = (2.0 / (layer.in_c * layer.kernel * layer.kernel) as f64).sqrt();
            let w_start = data.len();
            for _ in 0..layer.weight_len() {
                let z: f64 = StandardNormal.sample(&mut rng);
                data.push(z * std);
            }
            let b_start = data.len();
            data.extend(std::iter::repeat(0.0).take(layer.bias_len()));
            offsets.push((w_start..b_start, b_start..data.len()));
        }
        Ok(NetworkParams {
            spec,
            data,
            layers,
            offsets,
        })
    }

    /// Rebuilds parameters from a flat vector laid out like [`Self::data`].
    pub(super) fn from_raw(spec: NetworkSpec, data: Vec<f64>) -> Result<Self, NetError> {
        spec.validate()?;
        if data.len() != spec.parameter_count() {
            return Err(NetError::BadSpec(format!(
                "parameter vector has {} values, topology needs {}",
                data.len(),
                spec.parameter_count()
            )));
        }
        let layers = spec.layers();
        let mut offsets = Vec::with_capacity(layers.len());
        let mut at = 0;
        for layer in &layers {
            let w_end = at + layer.weight_len();
            let b_end = w_end + layer.bias_len();
            offsets.push((at..w_end, w_end..b_end));
            at = b_end;
        }
        Ok(NetworkParams {
            spec,
            data,
            layers,
            offsets,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[LayerDef] {
        &self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable view for the optimizer; the length is fixed by the topology.
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn weight(&self, layer: usize) -> &[f64] {
        &self.data[self.offsets[layer].0.clone()]
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        &self.data[self.offsets[layer].1.clone()]
    }

    fn accumulate(&self, grad: &mut [f64], layer: usize, grads: &ConvGrads) {
        let (w_range, b_range) = &self.offsets[layer];
        for (dst, src) in grad[w_range.clone()].iter_mut().zip(&grads.weight) {
            *dst += src;
        }
        for (dst, src) in grad[b_range.clone()].iter_mut().zip(&grads.bias) {
            *dst += src;
        }
    }
}

/// Every intermediate activation of one forward pass, kept for backprop.
pub struct ForwardTrace {
    input: Tensor,
    enc_a: Vec<Tensor>,
    enc_b: Vec<Tensor>,
    enc_down: Vec<Tensor>,
    // Decoder tensors in execution order: index j handles stage s-1-j.
    dec_up: Vec<Tensor>,
    dec_cat: Vec<Tensor>,
    dec_mix_a: Vec<Tensor>,
    dec_mix_b: Vec<Tensor>,
    output: Tensor,
}

impl ForwardTrace {
    pub fn output(&self) -> &Tensor {
        &self.output
    }

    pub fn into_output(self) -> Tensor {
        self.output
    }
}

/// Runs the network, keeping every activation.
pub fn forward_trace(params: &NetworkParams, input: &Tensor) -> ForwardTrace {
    let spec = params.spec();
    let s = spec.widths.len();
    let k = spec.kernel;
    assert_eq!(input.c(), spec.in_channels, "input channel count mismatch");
    assert!(
        input.h() % spec.spatial_divisor() == 0 && input.w() % spec.spatial_divisor() == 0,
        "input {}x{} not divisible by {}",
        input.h(),
        input.w(),
        spec.spatial_divisor()
    );

    let mut enc_a = Vec::with_capacity(s);
    let mut enc_b = Vec::with_capacity(s);
    let mut enc_down = Vec::with_capacity(s);
    let mut cur = input.clone();
    for (i, &w) in spec.widths.iter().enumerate() {
        let li = 3 * i;
        let mut a = conv_forward(&cur, params.weight(li), params.bias(li), w, k, 1);
        relu_forward(&mut a);
        let mut b = conv_forward(&a, params.weight(li + 1), params.bias(li + 1), w, k, 1);
        relu_forward(&mut b);
        let mut d = conv_forward(&b, params.weight(li + 2), params.bias(li + 2), w, k, 2);
        relu_forward(&mut d);
        cur = d.clone();
        enc_a.push(a);
        enc_b.push(b);
        enc_down.push(d);
    }

    let mut dec_up = Vec::with_capacity(s);
    let mut dec_cat = Vec::with_capacity(s);
    let mut dec_mix_a = Vec::with_capacity(s);
    let mut dec_mix_b = Vec::with_capacity(s);
    for j in 0..s {
        let stage = s - 1 - j;
        let w = spec.widths[stage];
        let li = 3 * s + 3 * j;
        let mut up = deconv_forward(&cur, params.weight(li), params.bias(li), w, k, 2);
        relu_forward(&mut up);
        let cat = Tensor::concat_channels(&up, &enc_b[stage]);
        let mut m1 = conv_forward(&cat, params.weight(li + 1), params.bias(li + 1), w, k, 1);
        relu_forward(&mut m1);
        let mut m2 = conv_forward(&m1, params.weight(li + 2), params.bias(li + 2), w, k, 1);
        relu_forward(&mut m2);
        cur = m2.clone();
        dec_up.push(up);
        dec_cat.push(cat);
        dec_mix_a.push(m1);
        dec_mix_b.push(m2);
    }

    let li = 6 * s;
    let mut output = conv_forward(&cur, params.weight(li), params.bias(li), spec.out_channels(), 1, 1);
    logistic_forward(&mut output);

    ForwardTrace {
        input: input.clone(),
        enc_a,
        enc_b,
        enc_down,
        dec_up,
        dec_cat,
        dec_mix_a,
        dec_mix_b,
        output,
    }
}

/// Runs the network and returns only the `(n, 1 + K, h, w)` prediction.
pub fn forward(params: &NetworkParams, input: &Tensor) -> Tensor {
    forward_trace(params, input).into_output()
}

/// Backpropagates `grad_output` (the loss gradient at the prediction)
/// through the trace, returning the flat parameter gradient.
pub fn backward(params: &NetworkParams, trace: &ForwardTrace, grad_output: &Tensor) -> Vec<f64> {
    let spec = params.spec();
    let s = spec.widths.len();
    let k = spec.kernel;
    assert_eq!(
        grad_output.dims(),
        trace.output.dims(),
        "output gradient shape mismatch"
    );
    let mut grad = vec![0.0; params.parameter_count()];

    let mut g = grad_output.clone();
    logistic_backward(&trace.output, &mut g);
    let li = 6 * s;
    let gr = conv_backward(
        &trace.dec_mix_b[s - 1],
        params.weight(li),
        spec.out_channels(),
        1,
        1,
        &g,
    );
    params.accumulate(&mut grad, li, &gr);
    let mut g = gr.input;

    // Gradient flowing into each encoder stage's skip output, collected
    // while walking the decoder.
    let mut skip_grad: Vec<Tensor> = trace
        .enc_b
        .iter()
        .map(|t| Tensor::zeros(t.n(), t.c(), t.h(), t.w()))
        .collect();

    for j in (0..s).rev() {
        let stage = s - 1 - j;
        let w = spec.widths[stage];
        let li = 3 * s + 3 * j;
        relu_backward(&trace.dec_mix_b[j], &mut g);
        let gr = conv_backward(&trace.dec_mix_a[j], params.weight(li + 2), w, k, 1, &g);
        params.accumulate(&mut grad, li + 2, &gr);
        let mut g_mix = gr.input;
        relu_backward(&trace.dec_mix_a[j], &mut g_mix);
        let gr = conv_backward(&trace.dec_cat[j], params.weight(li + 1), w, k, 1, &g_mix);
        params.accumulate(&mut grad, li + 1, &gr);
        let (mut g_up, g_skip) = gr.input.split_channels(w);
        skip_grad[stage].add_assign(&g_skip);
        relu_backward(&trace.dec_up[j], &mut g_up);
        let below = if j == 0 {
            &trace.enc_down[s - 1]
        } else {
            &trace.dec_mix_b[j - 1]
        };
        let gr = deconv_backward(below, params.weight(li), w, k, 2, &g_up);
        params.accumulate(&mut grad, li, &gr);
        g = gr.input;
    }

    for i in (0..s).rev() {
        let w = spec.widths[i];
        let li = 3 * i;
        relu_backward(&trace.enc_down[i], &mut g);
        let gr = conv_backward(&trace.enc_b[i], params.weight(li + 2), w, k, 2, &g);
        params.accumulate(&mut grad, li + 2, &gr);
        let mut g_b = gr.input;
        g_b.add_assign(&skip_grad[i]);
        relu_backward(&trace.enc_b[i], &mut g_b);
        let gr = conv_backward(&trace.enc_a[i], params.weight(li + 1), w, k, 1, &g_b);
        params.accumulate(&mut grad, li + 1, &gr);
        let mut g_a = gr.input;
        relu_backward(&trace.enc_a[i], &mut g_a);
        let below = if i == 0 { &trace.input } else { &trace.enc_down[i - 1] };
        let gr = conv_backward(below, params.weight(li), w, k, 1, &g_a);
        params.accumulate(&mut grad, li, &gr);
        g = gr.input;
    }

    grad
}

/// Converts a grid frame to a `(1, 7, h, w)` network input with
/// [`INPUT_SCALE`] applied per channel.
pub fn frame_to_input(frame: &DogmaFrame) -> Tensor {
    let spec = frame.spec;
    let mut t = Tensor::zeros(1, CHANNEL_COUNT, spec.height, spec.width);
    for (ci, channel) in Channel::ALL.iter().enumerate() {
        let src = frame.plane(*channel);
        let dst = t.plane_mut(0, ci);
        for (d, &v) in dst.iter_mut().zip(src) {
            *d = v as f64 * INPUT_SCALE[ci];
        }
    }
    t
}

/// Predicts the `(1, 1 + K, h, w)` occupancy channels for one frame.
pub fn predict(params: &NetworkParams, frame: &DogmaFrame) -> Result<Tensor, NetError> {
    let spec = params.spec();
    if spec.in_channels != CHANNEL_COUNT {
        return Err(NetError::BadInput(format!(
            "network expects {} input channels, grid frames have {}",
            spec.in_channels, CHANNEL_COUNT
        )));
    }
    let d = spec.spatial_divisor();
    if frame.spec.height % d != 0 || frame.spec.width % d != 0 {
        return Err(NetError::BadInput(format!(
            "grid {}x{} not divisible by the network's downsampling factor {}",
            frame.spec.width, frame.spec.height, d
        )));
    }
    Ok(forward(params, &frame_to_input(frame)))
}
