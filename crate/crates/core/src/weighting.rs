//! Weighting functions applied to each co-occurrence term of the cost.
//!
//! Two families are compared:
//!
//! * power-clip, `f(x) = min(1, (x / x_max)^alpha)`, with two empirical
//!   parameters;
//! * exponential saturation, `g(x) = 1 - exp(-lambda * x)` with
//!   `lambda = 0.165`, which approaches 1 without a cutoff.
//!
//! `Constant` is an ablation baseline that weights every nonzero cell equally.

use std::fmt;

use crate::error::{Error, Result};

/// Default rate of the exponential weighting.
pub const DEFAULT_LAMBDA: f64 = 0.165;
pub const DEFAULT_X_MAX: f64 = 10.0;
pub const DEFAULT_ALPHA: f64 = 0.75;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightingSpec {
    PowerClip { x_max: f64, alpha: f64 },
    ExpSaturating { lambda: f64 },
    Constant,
}

impl WeightingSpec {
    pub fn power_clip(x_max: f64, alpha: f64) -> Result<Self> {
        let spec = WeightingSpec::PowerClip { x_max, alpha };
        spec.validate()?;
        Ok(spec)
    }

    pub fn exp_saturating(lambda: f64) -> Result<Self> {
        let spec = WeightingSpec::ExpSaturating { lambda };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightingSpec::PowerClip { x_max, alpha } => {
                if !(x_max > 0.0 && x_max.is_finite()) {
                    return Err(Error::Config(format!("x_max must be positive, got {x_max}")));
                }
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return Err(Error::Config(format!("alpha must be in (0, 1], got {alpha}")));
                }
            }
            WeightingSpec::ExpSaturating { lambda } => {
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return Err(Error::Config(format!("lambda must be positive, got {lambda}")));
                }
            }
            WeightingSpec::Constant => {}
        }
        Ok(())
    }

    /// Weight for a cell value `x >= 0`.
    pub fn weight(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::Domain(x));
        }
        Ok(self.weight_unchecked(x))
    }

    /// Inner-loop variant; `x` must be non-negative.
    #[inline]
    pub fn weight_unchecked(&self, x: f64) -> f64 {
        match *self {
            WeightingSpec::PowerClip { x_max, alpha } => {
                if x < x_max {
                    (x / x_max).powf(alpha)
                } else {
                    1.0
                }
            }
            WeightingSpec::ExpSaturating { lambda } => -(-lambda * x).exp_m1(),
            WeightingSpec::Constant => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Short name used in file names and reports.
    pub fn label(&self) -> &'static str {
        match self {
            WeightingSpec::PowerClip { .. } => "power-clip",
            WeightingSpec::ExpSaturating { .. } => "exp",
            WeightingSpec::Constant => "constant",
        }
    }
}

impl Default for WeightingSpec {
    fn default() -> Self {
        WeightingSpec::PowerClip {
            x_max: DEFAULT_X_MAX,
            alpha: DEFAULT_ALPHA,
        }
    }
}

impl fmt::Display for WeightingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightingSpec::PowerClip { x_max, alpha } => {
                write!(f, "power-clip(x_max={x_max}, alpha={alpha})")
            }
            WeightingSpec::ExpSaturating { lambda } => write!(f, "exp(lambda={lambda})"),
            WeightingSpec::Constant => f.write_str("constant"),
        }
    }
}

/// Result of a single property check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropertyCheck {
    pub passed: bool,
    /// First grid point where the property fails.
    pub first_violation: Option<f64>,
}

impl PropertyCheck {
    fn from_violation(first_violation: Option<f64>) -> Self {
        PropertyCheck {
            passed: first_violation.is_none(),
            first_violation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropertyReport {
    pub zero_at_origin: PropertyCheck,
    pub non_decreasing: PropertyCheck,
    pub unit_range: PropertyCheck,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        self.zero_at_origin.passed && self.non_decreasing.passed && self.unit_range.passed
    }
}

/// Evaluate `spec` on an ascending grid starting at 0 and check that it
/// vanishes at 0, never decreases, and stays within `[0, 1]`.
///
/// Specs are not validated first, so deliberately broken parameters can be
/// probed.
pub fn check_properties(spec: &WeightingSpec, grid: &[f64]) -> Result<PropertyReport> {
    if grid.first() != Some(&0.0) {
        return Err(Error::Config("grid must start at 0".into()));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Config("grid must be sorted ascending".into()));
    }
    let values: Vec<f64> = grid.iter().map(|&x| spec.weight_unchecked(x)).collect();

    let zero = (values[0] != 0.0).then_some(0.0);
    let decreasing = values
        .windows(2)
        .position(|w| !(w[1] >= w[0]))
        .map(|n| grid[n + 1]);
    let out_of_range = values
        .iter()
        .position(|v| !(0.0..=1.0).contains(v))
        .map(|n| grid[n]);

    Ok(PropertyReport {
        zero_at_origin: PropertyCheck::from_violation(zero),
        non_decreasing: PropertyCheck::from_violation(decreasing),
        unit_range: PropertyCheck::from_violation(out_of_range),
    })
}
