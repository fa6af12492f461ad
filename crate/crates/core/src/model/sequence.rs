use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A deterministic `[0, 1]`-valued sequence, indexed from `n = 1`.
///
/// Limits are a symbolic property of each variant and are never obtained
/// by scanning values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SequenceSpec {
    Constant {
        value: f64,
    },
    /// `head[n - 1]` for `n <= head.len()`, `tail` afterwards.
    Explicit {
        head: Vec<f64>,
        tail: f64,
    },
    /// `clamp(limit + amplitude * n^(-exponent), 0, 1)`.
    PowerConvergent {
        limit: f64,
        amplitude: f64,
        exponent: f64,
    },
    /// `values[(n - 1) mod len]`.
    Periodic {
        values: Vec<f64>,
    },
    /// Observable `lo + (hi - lo) * frac(n * theta)` along an orbit of the
    /// circle rotation by `theta`. Irrationality of `theta` cannot be decided
    /// numerically, so the caller asserts it.
    Rotation {
        theta: f64,
        lo: f64,
        hi: f64,
        #[serde(default)]
        irrational: bool,
    },
}

fn unit(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {x} is outside [0, 1]")))
    }
}

/// `frac(n * theta)` with the rounding error of the product folded back in,
/// so long orbits do not drift.
fn rotation_phase(n: usize, theta: f64) -> f64 {
    let n = n as f64;
    let prod = n * theta;
    let err = n.mul_add(theta, -prod);
    let mut phase = (prod - prod.floor()) + err;
    phase -= phase.floor();
    if phase >= 1.0 {
        0.0
    } else {
        phase
    }
}

impl SequenceSpec {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Constant { value } => unit("constant value", *value),
            Self::Explicit { head, tail } => {
                for (i, v) in head.iter().enumerate() {
                    unit(&format!("explicit head[{i}]"), *v)?;
                }
                unit("explicit tail", *tail)
            }
            Self::PowerConvergent {
                limit,
                amplitude,
                exponent,
            } => {
                unit("power-convergent limit", *limit)?;
                if !amplitude.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "power-convergent amplitude = {amplitude} is not finite"
                    )));
                }
                if !(exponent.is_finite() && *exponent > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "power-convergent exponent = {exponent} must be positive"
                    )));
                }
                Ok(())
            }
            Self::Periodic { values } => {
                if values.is_empty() {
                    return Err(Error::InvalidParameter(
                        "periodic sequence needs at least one value".into(),
                    ));
                }
                for (i, v) in values.iter().enumerate() {
                    unit(&format!("periodic values[{i}]"), *v)?;
                }
                Ok(())
            }
            Self::Rotation { theta, lo, hi, .. } => {
                if !theta.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "rotation theta = {theta} is not finite"
                    )));
                }
                unit("rotation lo", *lo)?;
                unit("rotation hi", *hi)?;
                if lo > hi {
                    return Err(Error::InvalidParameter(format!(
                        "rotation lo = {lo} exceeds hi = {hi}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Value at index `n >= 1`.
    pub fn value(&self, n: usize) -> f64 {
        debug_assert!(n >= 1, "sequences are indexed from 1");
        match self {
            Self::Constant { value } => *value,
            Self::Explicit { head, tail } => head.get(n.wrapping_sub(1)).copied().unwrap_or(*tail),
            Self::PowerConvergent {
                limit,
                amplitude,
                exponent,
            } => (limit + amplitude * (n as f64).powf(-exponent)).clamp(0.0, 1.0),
            Self::Periodic { values } => values[(n - 1) % values.len()],
            Self::Rotation { theta, lo, hi, .. } => lo + (hi - lo) * rotation_phase(n, *theta),
        }
    }

    /// `(liminf, limsup)`.
    pub fn limits(&self) -> Result<(f64, f64)> {
        match self {
            Self::Constant { value } => Ok((*value, *value)),
            Self::Explicit { tail, .. } => Ok((*tail, *tail)),
            Self::PowerConvergent { limit, .. } => Ok((*limit, *limit)),
            Self::Periodic { values } => Ok(values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                })),
            Self::Rotation {
                theta,
                lo,
                hi,
                irrational,
            } => {
                if *irrational {
                    Ok((*lo, *hi))
                } else {
                    Err(Error::RationalRotationUnsupported { theta: *theta })
                }
            }
        }
    }

    /// `inf_{k >= m} value(k)`, exact per variant.
    pub fn inf_from(&self, m: usize) -> Result<f64> {
        let m = m.max(1);
        match self {
            Self::Constant { value } => Ok(*value),
            Self::Explicit { head, tail } => Ok(head
                .iter()
                .skip(m - 1)
                .fold(*tail, |acc, &v| acc.min(v))),
            Self::PowerConvergent {
                limit, amplitude, ..
            } => {
                if *amplitude >= 0.0 {
                    Ok(*limit)
                } else {
                    // increasing towards the limit
                    Ok(self.value(m))
                }
            }
            Self::Periodic { .. } => self.limits().map(|(lo, _)| lo),
            Self::Rotation { .. } => self.limits().map(|(lo, _)| lo),
        }
    }

    /// True when liminf equals limsup.
    pub fn is_convergent(&self) -> Result<bool> {
        let (lo, hi) = self.limits()?;
        Ok(lo == hi)
    }
}
