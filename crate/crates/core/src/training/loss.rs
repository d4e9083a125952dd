use crate::error::{Error, Result};
use crate::represent::sampling::log_sigmoid;
use crate::taxonomy::N_LABELS;

/// Probabilities are clamped to `[CLAMP, 1 - CLAMP]` before taking logs.
pub const CLAMP: f64 = 1e-12;

/// Per-entry weights on positive (`w1`) and negative (`w0`) targets.
///
/// With `w1 = w0 = 0.5` the weighted loss is exactly half the ordinary mean
/// binary cross-entropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub w1: f64,
    pub w0: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { w1: 0.82, w0: 0.18 }
    }
}

impl LossWeights {
    pub fn new(w1: f64, w0: f64) -> Result<Self> {
        let w = Self { w1, w0 };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w1 >= 0.0 && self.w0 >= 0.0) || (self.w1 + self.w0 - 1.0).abs() > 1e-9 {
            return Err(Error::Argument(format!(
                "loss weights must be non-negative and sum to 1, got w1={} w0={}",
                self.w1, self.w0
            )));
        }
        Ok(())
    }

    /// Loss of one entry given probability `p`, with clamping.
    pub fn entry(&self, p: f64, y: bool) -> f64 {
        let p = p.clamp(CLAMP, 1.0 - CLAMP);
        if y {
            -self.w1 * p.ln()
        } else {
            -self.w0 * (1.0 - p).ln()
        }
    }

    /// Loss of one entry from its logit, and the derivative with respect to the logit.
    ///
    /// Working in log space keeps `ln p` accurate when `p` is near 0 or 1; the
    /// clamp becomes a floor on the log-probability, where the gradient is zero.
    pub(crate) fn entry_from_logit(&self, z: f64, y: bool) -> (f64, f64) {
        if z.is_nan() {
            return (f64::NAN, f64::NAN);
        }
        let floor = CLAMP.ln();
        if y {
            let lp = log_sigmoid(z);
            if lp > floor {
                (-self.w1 * lp, -self.w1 * (1.0 - lp.exp()))
            } else {
                (-self.w1 * floor, 0.0)
            }
        } else {
            let lq = log_sigmoid(-z);
            if lq > floor {
                (-self.w0 * lq, self.w0 * (1.0 - lq.exp()))
            } else {
                (-self.w0 * floor, 0.0)
            }
        }
    }
}

/// Weighted binary cross-entropy, averaged over every (sample, label) entry.
pub fn weighted_bce<P, Y>(p: &[P], y: &[Y], w: LossWeights) -> Result<f64>
where
    P: AsRef<[f64]>,
    Y: AsRef<[u8]>,
{
    if p.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: p.len(),
        });
    }
    let mut total = 0.0;
    let mut entries = 0usize;
    for (pr, yr) in p.iter().zip(y) {
        let (pr, yr) = (pr.as_ref(), yr.as_ref());
        if pr.len() != yr.len() {
            return Err(Error::DimensionMismatch {
                expected: yr.len(),
                got: pr.len(),
            });
        }
        for (&pi, &yi) in pr.iter().zip(yr) {
            total += w.entry(pi, yi == 1);
        }
        entries += pr.len();
    }
    Ok(if entries == 0 { 0.0 } else { total / entries as f64 })
}

/// Mean entry loss of a single 9-label prediction given its logits.
pub(crate) fn sample_loss_from_logits(z: &[f64; N_LABELS], y: &crate::LabelVector, w: &LossWeights) -> f64 {
    (0..N_LABELS).map(|l| w.entry_from_logit(z[l], y.get(l)).0).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_entry() {
        let l = weighted_bce(&[[0.9]], &[[1u8]], LossWeights::default()).unwrap();
        assert!((l - 0.82 * -(0.9f64.ln())).abs() < 1e-15);
        assert!((l - 0.0864).abs() < 1e-4);
    }

    #[test]
    fn uniform_prediction_closed_form() {
        // 50 samples of 9 labels with 81 positives: r1 = 1.62 / 9.
        let mut y = vec![[0u8; 9]; 50];
        for k in 0..81 {
            y[k / 9 * 2 % 50][k % 9] = 1;
        }
        let ones: usize = y.iter().flatten().map(|&b| b as usize).sum();
        assert_eq!(ones, 81);
        let p = vec![[0.5; 9]; 50];
        let l = weighted_bce(&p, &y, LossWeights::default()).unwrap();
        let r1 = 1.62 / 9.0;
        let expected = std::f64::consts::LN_2 * (0.82 * r1 + 0.18 * (1.0 - r1));
        assert!((l - expected).abs() < 1e-12);
        assert!((l - 0.2046).abs() < 1e-4);
    }

    #[test]
    fn perfect_prediction_is_near_zero_and_clamped() {
        let y = [[1u8, 0, 1]];
        let l = weighted_bce(&[[1.0, 0.0, 1.0]], &y, LossWeights::default()).unwrap();
        assert!(l >= 0.0 && l <= 0.82 * -(1.0 - CLAMP).ln() + 1e-18);
        let worst = weighted_bce(&[[0.0]], &[[1u8]], LossWeights::default()).unwrap();
        assert!(worst.is_finite());
        assert!((worst - 0.82 * -(CLAMP.ln())).abs() < 1e-9);
    }

    #[test]
    fn shape_mismatch() {
        let w = LossWeights::default();
        assert!(weighted_bce(&[[0.5, 0.5]], &[[1u8]], w).is_err());
        assert!(weighted_bce::<[f64; 1], [u8; 1]>(&[[0.5]], &[], w).is_err());
    }

    #[test]
    fn weights_validation() {
        assert!(LossWeights::new(0.5, 0.5).is_ok());
        assert!(LossWeights::new(0.9, 0.2).is_err());
        assert!(LossWeights::new(1.2, -0.2).is_err());
    }

    #[test]
    fn logit_form_matches_probability_form() {
        let w = LossWeights::default();
        // Past about |z| = 15 the probability form loses digits to `1 - p`.
        for &z in &[-40.0, -30.0, -3.0, -0.1, 0.0, 0.7, 5.0, 15.0] {
            let p = crate::models::sigmoid(z);
            for y in [false, true] {
                let (l, _) = w.entry_from_logit(z, y);
                assert!((l - w.entry(p, y)).abs() < 1e-7, "z={z} y={y}");
            }
        }
    }

    proptest! {
        #[test]
        fn non_negative(p in proptest::collection::vec(0.0f64..=1.0, 9), bits in proptest::collection::vec(0u8..2, 9)) {
            prop_assert!(weighted_bce(&[p], &[bits], LossWeights::default()).unwrap() >= 0.0);
        }

        #[test]
        fn equal_weights_halve_plain_bce(p in proptest::collection::vec(0.001f64..0.999, 9), bits in proptest::collection::vec(0u8..2, 9)) {
            let plain: f64 = p.iter().zip(&bits).map(|(&pi, &yi)| {
                if yi == 1 { -pi.ln() } else { -(1.0 - pi).ln() }
            }).sum::<f64>() / 9.0;
            let half = weighted_bce(&[p], &[bits], LossWeights::new(0.5, 0.5).unwrap()).unwrap();
            prop_assert!((half - 0.5 * plain).abs() < 1e-12);
        }

        #[test]
        fn logit_derivative_matches_finite_difference(z in -8.0f64..8.0, y in any::<bool>()) {
            let w = LossWeights::default();
            let h = 1e-6;
            let num = (w.entry_from_logit(z + h, y).0 - w.entry_from_logit(z - h, y).0) / (2.0 * h);
            prop_assert!((num - w.entry_from_logit(z, y).1).abs() < 1e-7);
        }
    }
}
