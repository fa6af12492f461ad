use serde::{Deserialize, Serialize};

use crate::summation::CompensatedSum;

/// Mean, unbiased variance, skewness `g1` and excess kurtosis `g2`.
///
/// `g1` and `g2` use population central moments. A constant sample reports
/// zero for both rather than NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl SampleMoments {
    pub fn from_slice(xs: &[f64]) -> Self {
        let count = xs.len();
        if count == 0 {
            return SampleMoments {
                count,
                mean: f64::NAN,
                variance: f64::NAN,
                skewness: f64::NAN,
                excess_kurtosis: f64::NAN,
            };
        }
        let n = count as f64;
        let mean = xs.iter().sum::<CompensatedSum>().value() / n;
        let (mut m2, mut m3, mut m4) = (
            CompensatedSum::new(),
            CompensatedSum::new(),
            CompensatedSum::new(),
        );
        for &x in xs {
            let d = x - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        let (m2, m3, m4) = (m2.value() / n, m3.value() / n, m4.value() / n);
        let variance = if count > 1 { m2 * n / (n - 1.0) } else { 0.0 };
        let (skewness, excess_kurtosis) = if m2 > 0.0 {
            (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
        } else {
            (0.0, 0.0)
        };
        SampleMoments {
            count,
            mean,
            variance,
            skewness,
            excess_kurtosis,
        }
    }

    pub fn std_error_of_mean(&self) -> f64 {
        (self.variance / self.count as f64).sqrt()
    }
}

/// Linear-interpolation quantile of an ascending slice (type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        len => {
            let h = q.clamp(0.0, 1.0) * (len - 1) as f64;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(len - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}
