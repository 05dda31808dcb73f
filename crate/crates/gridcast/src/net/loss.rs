//! Class-balanced squared-error loss over the prediction channels.
//!
//! Channel 0 is the static occupancy map; channels `1..=K` are the future
//! occupancy maps at increasing horizons. Dynamic cells are rare (moving
//! objects cover well under a percent of a street scene), so plain squared
//! error lets a network win by predicting "nothing moves". Each dynamic
//! cell's error is therefore scaled by `|1 + lambda_k * P|`, where `P` is the
//! cell's target occupancy and `lambda_k` grows linearly with the horizon
//! index: empty cells keep weight 1 while genuinely occupied dynamic cells
//! at the far horizon count hundreds of times more.

use super::tensor::Tensor;
use serde::{Deserialize, Serialize};

/// Scale factors of the balanced loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// Weight of every static-channel error.
    pub lambda_static: f64,
    /// Per-horizon-step slope of the dynamic weight: channel `k` uses
    /// `lambda_k = lambda_dynamic * k`.
    pub lambda_dynamic: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_static: 1.0,
            lambda_dynamic: 100.0,
        }
    }
}

/// Loss split by channel group. `total = static_part + dynamic_part`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub total: f64,
    pub static_part: f64,
    pub dynamic_part: f64,
}

/// Sum of `1/2 * lambda * (target - pred)^2` over all unmasked elements,
/// plus the gradient with respect to `pred`.
///
/// `pred` and `target` share the shape `(n, 1 + K, h, w)`; `mask` is one
/// flag per element in the same layout (false = no supervision, zero loss
/// and zero gradient). The loss is a sum, not a mean, so the worked unit
/// cases below hold exactly: a static cell with target 1 predicted as 0
/// costs 1/2, and a dynamic cell with target 1, prediction 1/2 and
/// `lambda_k = 3` costs `1/2 * |1 + 3| * 1/4 = 1/2` with gradient -2.
pub fn balanced_loss(
    pred: &Tensor,
    target: &Tensor,
    mask: &[bool],
    weights: &LossWeights,
) -> (LossValue, Tensor) {
    assert_eq!(pred.dims(), target.dims(), "prediction/target shape mismatch");
    assert_eq!(mask.len(), pred.len(), "mask length mismatch");
    assert!(pred.c() >= 1, "need at least the static channel");
    let mut grad = Tensor::zeros(pred.n(), pred.c(), pred.h(), pred.w());
    let mut static_part = 0.0;
    let mut dynamic_part = 0.0;
    let plane = pred.h() * pred.w();
    for n in 0..pred.n() {
        for c in 0..pred.c() {
            let base = (n * pred.c() + c) * plane;
            for i in base..base + plane {
                if !mask[i] {
                    continue;
                }
                let t = target.data[i];
                let p = pred.data[i];
                let lambda = if c == 0 {
                    weights.lambda_static
                } else {
                    (1.0 + weights.lambda_dynamic * c as f64 * t).abs()
                };
                let d = t - p;
                let contribution = 0.5 * lambda * d * d;
                if c == 0 {
                    static_part += contribution;
                } else {
                    dynamic_part += contribution;
                }
                grad.data[i] = -lambda * d;
            }
        }
    }
    (
        LossValue {
            total: static_part + dynamic_part,
            static_part,
            dynamic_part,
        },
        grad,
    )
}
