//! Phase classification and theorem-applicability flags.
//!
//! Every flag is an exact comparison of `p` and the symbolic sequence limits
//! against the thresholds `1/(4p − 2)`, `1` and
//! `(1 − limsup α) / (1 − liminf α)`. Equality never licenses a theorem.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::params::ModelParams;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Diffusivity {
    Diffusive,
    Critical,
    Superdiffusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElephantStrength {
    Weak,
    Strong,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Finiteness {
    Finite,
    Infinite,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Applicability {
    CondI,
    CondII,
    No,
}

impl Applicability {
    pub fn applies(self) -> bool {
        self != Self::No
    }

    fn label(self) -> &'static str {
        match self {
            Self::CondI => "I",
            Self::CondII => "II",
            Self::No => "no",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub diffusivity: Diffusivity,
    pub elephant_strength: ElephantStrength,
    pub b_inf_finite: Finiteness,
    pub thm1_applicable: Applicability,
    pub thm3_applicable: Applicability,
    pub variance_floor_expected: bool,
    /// `1/(4p − 2)`; infinite or negative for `p <= 1/2`.
    pub threshold: f64,
    pub alpha_limits: (f64, f64),
    pub beta_limits: (f64, f64),
}

/// The strong/weak elephant threshold `1/(4p − 2)`.
#[inline]
pub fn elephant_threshold(p: f64) -> f64 {
    1.0 / (4.0 * p - 2.0)
}

pub fn classify_regime(params: &ModelParams) -> Result<RegimeReport> {
    let p = params.p;
    let (a_inf, a_sup) = params.alpha.limits()?;
    let (b_inf, b_sup) = params.beta.limits()?;
    let threshold = elephant_threshold(p);
    let superdiffusive = p > 0.75;

    let diffusivity = if p < 0.75 {
        Diffusivity::Diffusive
    } else if p == 0.75 {
        Diffusivity::Critical
    } else {
        Diffusivity::Superdiffusive
    };

    // For p <= 1/2 the threshold is infinite or negative and the split is void.
    let elephant_strength = if p <= 0.5 {
        ElephantStrength::Indeterminate
    } else if a_sup < threshold {
        ElephantStrength::Weak
    } else if a_inf > threshold {
        ElephantStrength::Strong
    } else {
        ElephantStrength::Indeterminate
    };

    let b_inf_finite = if !superdiffusive || a_sup < threshold {
        Finiteness::Infinite
    } else if a_inf > threshold {
        Finiteness::Finite
    } else {
        Finiteness::Unknown
    };

    // 0 < liminf β <= limsup β < (1 − limsup α)/(1 − liminf α)
    let beta_window = a_inf < 1.0 && b_inf > 0.0 && b_sup < (1.0 - a_sup) / (1.0 - a_inf);

    let thm1_applicable = if superdiffusive && p < 1.0 && a_inf > 0.0 && a_sup < threshold {
        Applicability::CondI
    } else if p == 1.0 && a_inf > 0.0 && a_sup < 1.0 && beta_window {
        Applicability::CondII
    } else {
        Applicability::No
    };

    let thm3_applicable = if superdiffusive && p < 1.0 && a_inf > threshold {
        Applicability::CondI
    } else if p == 1.0 && threshold < a_inf && a_sup < 1.0 && beta_window {
        Applicability::CondII
    } else {
        Applicability::No
    };

    let variance_floor_expected = (p < 1.0 && a_inf > 0.0)
        || (p == 1.0 && a_inf > 0.0 && a_sup < 1.0 && beta_window)
        || (a_inf == 0.0 && a_sup < 1.0 && b_inf > 0.0 && b_sup < 1.0 - p * a_sup);

    Ok(RegimeReport {
        diffusivity,
        elephant_strength,
        b_inf_finite,
        thm1_applicable,
        thm3_applicable,
        variance_floor_expected,
        threshold,
        alpha_limits: (a_inf, a_sup),
        beta_limits: (b_inf, b_sup),
    })
}

impl fmt::Display for RegimeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let phase = match self.diffusivity {
            Diffusivity::Diffusive => "diffusive",
            Diffusivity::Critical => "critical",
            Diffusivity::Superdiffusive => "superdiffusive",
        };
        write!(f, "{phase}")?;
        if self.diffusivity == Diffusivity::Superdiffusive {
            match self.elephant_strength {
                ElephantStrength::Weak => write!(f, ", weak elephant")?,
                ElephantStrength::Strong => write!(f, ", strong elephant")?,
                ElephantStrength::Indeterminate => write!(f, ", elephant strength indeterminate")?,
            }
        }
        let mut theorems = Vec::new();
        if self.thm3_applicable.applies() {
            theorems.push(format!("Theorem 3({})", self.thm3_applicable.label()));
        }
        if self.thm1_applicable.applies() {
            theorems.push(format!("Theorem 1({})", self.thm1_applicable.label()));
        }
        if theorems.is_empty() {
            write!(f, ", no theorem applies")
        } else {
            write!(f, ", {}", theorems.join(", "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SequenceSpec;
    use proptest::prelude::*;

    fn constant(p: f64, alpha: f64, beta: f64) -> RegimeReport {
        classify_regime(&ModelParams::constant(p, 0.5, alpha, beta).unwrap()).unwrap()
    }

    #[test]
    fn strong_elephant_condition_one() {
        let r = constant(0.8, 0.9, 0.5);
        assert_eq!(r.diffusivity, Diffusivity::Superdiffusive);
        assert_eq!(r.elephant_strength, ElephantStrength::Strong);
        assert_eq!(r.b_inf_finite, Finiteness::Finite);
        assert_eq!(r.thm3_applicable, Applicability::CondI);
        assert_eq!(r.thm1_applicable, Applicability::No);
        assert_eq!(r.to_string(), "superdiffusive, strong elephant, Theorem 3(I)");
    }

    #[test]
    fn weak_elephant_condition_one() {
        let r = constant(0.8, 0.5, 0.5);
        assert_eq!(r.elephant_strength, ElephantStrength::Weak);
        assert_eq!(r.b_inf_finite, Finiteness::Infinite);
        assert_eq!(r.thm1_applicable, Applicability::CondI);
        assert_eq!(r.thm3_applicable, Applicability::No);
    }

    #[test]
    fn strong_elephant_condition_two() {
        let r = constant(1.0, 0.8, 0.7);
        assert_eq!(r.thm3_applicable, Applicability::CondII);
        assert_eq!(r.b_inf_finite, Finiteness::Finite);
    }

    #[test]
    fn diffusive_and_critical() {
        let r = constant(0.5, 0.9, 0.5);
        assert_eq!(r.to_string(), "diffusive, no theorem applies");
        let r = constant(0.75, 0.9, 0.5);
        assert_eq!(r.diffusivity, Diffusivity::Critical);
        assert_eq!(r.to_string(), "critical, no theorem applies");
        assert_eq!(r.elephant_strength, ElephantStrength::Weak);
        assert_eq!(constant(0.5, 0.9, 0.5).elephant_strength, ElephantStrength::Indeterminate);
    }

    #[test]
    fn threshold_above_one_forces_weak() {
        // 1/(4*0.7 - 2) = 1.25 > 1 >= alpha
        let r = constant(0.7, 0.99, 0.5);
        assert_eq!(r.elephant_strength, ElephantStrength::Weak);
        assert_eq!(r.b_inf_finite, Finiteness::Infinite);
        assert_eq!(r.thm3_applicable, Applicability::No);
    }

    #[test]
    fn equality_is_indeterminate() {
        // p = 1 puts the threshold exactly at 1/2
        let r = constant(1.0, 0.5, 0.5);
        assert_eq!(r.elephant_strength, ElephantStrength::Indeterminate);
        assert_eq!(r.b_inf_finite, Finiteness::Unknown);
        assert_eq!(r.thm3_applicable, Applicability::No);
    }

    #[test]
    fn oscillating_alpha_straddling_threshold() {
        let params = ModelParams::new(
            0.9,
            0.5,
            SequenceSpec::Periodic {
                values: vec![0.5, 0.9],
            },
            SequenceSpec::constant(0.5),
        )
        .unwrap();
        let r = classify_regime(&params).unwrap();
        assert_eq!(r.elephant_strength, ElephantStrength::Indeterminate);
        assert_eq!(r.b_inf_finite, Finiteness::Unknown);
    }

    #[test]
    fn variance_floor_conditions() {
        assert!(!constant(1.0, 1.0, 0.5).variance_floor_expected);
        assert!(constant(0.9, 0.8, 0.7).variance_floor_expected);
        // third condition: alpha -> 0 and beta below 1 - p limsup alpha
        assert!(constant(0.9, 0.0, 0.7).variance_floor_expected);
    }

    #[test]
    fn rational_rotation_propagates() {
        let params = ModelParams::new(
            0.9,
            0.5,
            SequenceSpec::constant(0.8),
            SequenceSpec::Rotation {
                theta: 0.5,
                lo: 0.2,
                hi: 0.4,
                irrational: false,
            },
        )
        .unwrap();
        assert!(classify_regime(&params).is_err());
    }

    proptest! {
        #[test]
        fn only_limits_matter(
            p in 0.0..=1.0f64,
            alpha in 0.0..=1.0f64,
            beta in 0.0..=1.0f64,
            head in prop::collection::vec(0.0..=1.0f64, 0..8),
            beta_head in prop::collection::vec(0.0..=1.0f64, 0..8),
        ) {
            let plain = ModelParams::constant(p, 0.5, alpha, beta).unwrap();
            let padded = ModelParams::new(
                p,
                0.5,
                SequenceSpec::Explicit { head, tail: alpha },
                SequenceSpec::Explicit { head: beta_head, tail: beta },
            )
            .unwrap();
            prop_assert_eq!(classify_regime(&plain).unwrap(), classify_regime(&padded).unwrap());
        }

        #[test]
        fn thm3_implies_finite(p in 0.0..=1.0f64, alpha in 0.0..=1.0f64, beta in 0.0..=1.0f64) {
            let r = constant(p, alpha, beta);
            if r.thm3_applicable.applies() {
                prop_assert_eq!(r.b_inf_finite, Finiteness::Finite);
            }
            if r.elephant_strength == ElephantStrength::Strong {
                prop_assert!(p > 0.75);
            }
        }
    }
}
