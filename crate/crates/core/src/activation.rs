//! Sigmoid, its inverse, the degree-3 polynomial surrogate used in the
//! encrypted domain, and grid oracles for the curvature bound and the
//! surrogate's approximation error.

use thiserror::Error;

/// Linear coefficient of the degree-3 sigmoid surrogate.
pub const POLY_C1: f64 = 0.19824;
/// Cubic coefficient (subtracted) of the degree-3 sigmoid surrogate.
pub const POLY_C3: f64 = 0.0044650;
/// Interval on which the surrogate's accuracy contract holds.
pub const POLY_INTERVAL: (f64, f64) = (-5.0, 5.0);

/// Global bound on |delta|; the SFH curvature constant for the sigmoid
/// regression loss.
pub const DELTA_BOUND: f64 = 0.155;

#[derive(Debug, Error, PartialEq)]
pub enum ActivationError {
    #[error("logit domain requires 0 < y < 1, got {value}")]
    Domain { value: f64 },
}

/// Numerically stable logistic function; never overflows, output strictly
/// inside (0,1): saturated tails clamp to the nearest representable
/// values next to 0 and 1.
pub fn sigmoid(x: f64) -> f64 {
    let v = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    v.max(f64::MIN_POSITIVE).min(1.0 - f64::EPSILON / 2.0)
}

/// Inverse sigmoid, defined strictly inside (0,1).
pub fn logit(y: f64) -> Result<f64, ActivationError> {
    if !(y > 0.0 && y < 1.0) {
        return Err(ActivationError::Domain { value: y });
    }
    Ok((y / (1.0 - y)).ln())
}

/// g(x) = 0.5 + 0.19824 x - 0.0044650 x^3, the encrypted-domain surrogate.
/// Accuracy is guaranteed only on [`POLY_INTERVAL`]. The odd part is
/// evaluated first, so it is antisymmetric to the bit.
pub fn poly_sigmoid(x: f64) -> f64 {
    0.5 + (POLY_C1 * x - POLY_C3 * x * x * x)
}

/// Per-sample curvature coefficient of the squared sigmoid-link loss:
/// delta = (4s - 6s^2 - 2y + 4ys) s (1 - s). Equal to the exact second
/// derivative d^2/dz^2 (sigmoid(z) - y)^2 evaluated at s = sigmoid(z).
pub fn delta(sigma_val: f64, y: f64) -> f64 {
    let s = sigma_val;
    (4.0 * s - 6.0 * s * s - 2.0 * y + 4.0 * y * s) * s * (1.0 - s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureBoundReport {
    pub max_abs_delta: f64,
    pub argmax_sigma: f64,
    pub argmax_y: f64,
    pub grid_step: f64,
}

/// Exhaustive grid maximum of |delta| over [0,1] x [0,1].
pub fn delta_bound_oracle(grid_step: f64) -> CurvatureBoundReport {
    assert!(
        grid_step > 0.0 && grid_step <= 1e-3,
        "grid_step must be in (0, 1e-3]"
    );
    let steps = (1.0 / grid_step).round() as usize;
    let mut report = CurvatureBoundReport {
        max_abs_delta: 0.0,
        argmax_sigma: 0.0,
        argmax_y: 0.0,
        grid_step,
    };
    for i in 0..=steps {
        let s = (i as f64 * grid_step).min(1.0);
        for j in 0..=steps {
            let y = (j as f64 * grid_step).min(1.0);
            let d = delta(s, y).abs();
            if d > report.max_abs_delta {
                report.max_abs_delta = d;
                report.argmax_sigma = s;
                report.argmax_y = y;
            }
        }
    }
    report
}

/// Grid maximum of |poly_sigmoid - sigmoid| over [-5, 5], endpoints
/// included.
pub fn poly_sigmoid_error_oracle(grid_step: f64) -> f64 {
    assert!(
        grid_step > 0.0 && grid_step <= 0.01,
        "grid_step must be in (0, 0.01]"
    );
    let (lo, hi) = POLY_INTERVAL;
    let steps = ((hi - lo) / grid_step).round() as usize;
    let mut max_err = 0.0f64;
    for i in 0..=steps {
        let x = (lo + i as f64 * grid_step).min(hi);
        max_err = max_err.max((poly_sigmoid(x) - sigmoid(x)).abs());
    }
    max_err
}
