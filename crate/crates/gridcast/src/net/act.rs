//! Pointwise activations, forward and backward.
//!
//! Backward passes take the layer *output* rather than its input: the
//! rectifier mask is recoverable from the output alone, and the logistic
//! derivative is `out * (1 - out)`. That lets the forward trace keep one
//! tensor per layer instead of two.

use super::tensor::Tensor;

/// `x -> max(x, 0)`, in place.
pub fn relu_forward(t: &mut Tensor) {
    for v in &mut t.data {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Zeroes the gradient wherever the rectifier clipped. A stored output of
/// exactly zero is treated as clipped; for continuous inputs the boundary
/// case carries no mass.
pub fn relu_backward(output: &Tensor, grad: &mut Tensor) {
    assert_eq!(output.dims(), grad.dims(), "relu shape mismatch");
    for (g, o) in grad.data.iter_mut().zip(output.data.iter()) {
        if *o <= 0.0 {
            *g = 0.0;
        }
    }
}

/// `x -> 1 / (1 + exp(-x))`, in place.
pub fn logistic_forward(t: &mut Tensor) {
    for v in &mut t.data {
        *v = 1.0 / (1.0 + (-*v).exp());
    }
}

/// Scales the gradient by the logistic derivative `out * (1 - out)`.
pub fn logistic_backward(output: &Tensor, grad: &mut Tensor) {
    assert_eq!(output.dims(), grad.dims(), "logistic shape mismatch");
    for (g, o) in grad.data.iter_mut().zip(output.data.iter()) {
        *g *= o * (1.0 - o);
    }
}
