//! Weighted Hamming score, support-weighted precision/recall/F1 and the
//! per-model report.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights on the false-negative rate (`w1`) and false-positive rate (`w0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricWeights {
    pub w1: f64,
    pub w0: f64,
}

impl Default for MetricWeights {
    fn default() -> Self {
        Self { w1: 0.82, w0: 0.18 }
    }
}

fn check_shapes<P: AsRef<[u8]>, T: AsRef<[u8]>>(pred: &[P], truth: &[T]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    for (p, t) in pred.iter().zip(truth) {
        let (p, t) = (p.as_ref(), t.as_ref());
        if p.len() != t.len() {
            return Err(Error::DimensionMismatch {
                expected: t.len(),
                got: p.len(),
            });
        }
        if p.iter().chain(t).any(|&b| b > 1) {
            return Err(Error::Argument("label matrices must be binary".into()));
        }
    }
    Ok(())
}

/// `1 - (w1 * FNR + w0 * FPR)` over every entry of the matrices, where a rate
/// with an empty denominator counts as 0.
pub fn weighted_hamming_score<P, T>(pred: &[P], truth: &[T], w: MetricWeights) -> Result<f64>
where
    P: AsRef<[u8]>,
    T: AsRef<[u8]>,
{
    check_shapes(pred, truth)?;
    let (mut pos, mut neg, mut fneg, mut fpos) = (0usize, 0usize, 0usize, 0usize);
    for (p, t) in pred.iter().zip(truth) {
        for (&pi, &ti) in p.as_ref().iter().zip(t.as_ref()) {
            if ti == 1 {
                pos += 1;
                fneg += (pi == 0) as usize;
            } else {
                neg += 1;
                fpos += pi as usize;
            }
        }
    }
    let rate = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    Ok(1.0 - (w.w1 * rate(fneg, pos) + w.w0 * rate(fpos, neg)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Per-label precision, recall and F1, averaged with each label weighted by
/// its support. Labels with no true positives-class entries are left out; a
/// per-label `0/0` is 0. All three are 0 when no label has support.
pub fn avg_prf<P, T>(pred: &[P], truth: &[T]) -> Result<Prf>
where
    P: AsRef<[u8]>,
    T: AsRef<[u8]>,
{
    check_shapes(pred, truth)?;
    let k = truth.first().map_or(0, |t| t.as_ref().len());
    let (mut tp, mut fp, mut fneg) = (vec![0usize; k], vec![0usize; k], vec![0usize; k]);
    for (p, t) in pred.iter().zip(truth) {
        for (l, (&pi, &ti)) in p.as_ref().iter().zip(t.as_ref()).enumerate() {
            match (pi, ti) {
                (1, 1) => tp[l] += 1,
                (1, 0) => fp[l] += 1,
                (0, 1) => fneg[l] += 1,
                _ => {}
            }
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let (mut sp, mut sr, mut sf, mut total) = (0.0, 0.0, 0.0, 0usize);
    for l in 0..k {
        let support = tp[l] + fneg[l];
        if support == 0 {
            continue;
        }
        let p = ratio(tp[l], tp[l] + fp[l]);
        let r = ratio(tp[l], support);
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        let s = support as f64;
        sp += s * p;
        sr += s * r;
        sf += s * f;
        total += support;
    }
    if total == 0 {
        return Ok(Prf {
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
        });
    }
    let t = total as f64;
    Ok(Prf {
        precision: sp / t,
        recall: sr / t,
        f1: sf / t,
    })
}

/// Mean number of predicted ones per row; 0 for an empty matrix.
pub fn avg_ones<P: AsRef<[u8]>>(pred: &[P]) -> f64 {
    if pred.is_empty() {
        return 0.0;
    }
    let ones: usize = pred
        .iter()
        .map(|p| p.as_ref().iter().filter(|&&b| b == 1).count())
        .sum();
    ones as f64 / pred.len() as f64
}

/// Test-set results for one model. Serialized keys follow field order; absent
/// options are omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    pub weighted_hamming_score: f64,
    pub avg_precision: f64,
    pub avg_recall: f64,
    pub avg_f1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<f64>,
    pub avg_ones_per_sample: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_trainable_params: Option<usize>,
}

impl MetricsReport {
    pub fn from_predictions<P, T>(
        model: impl Into<String>,
        pred: &[P],
        truth: &[T],
        loss: Option<f64>,
        n_trainable_params: Option<usize>,
    ) -> Result<Self>
    where
        P: AsRef<[u8]>,
        T: AsRef<[u8]>,
    {
        let prf = avg_prf(pred, truth)?;
        Ok(Self {
            model: model.into(),
            weighted_hamming_score: weighted_hamming_score(pred, truth, MetricWeights::default())?,
            avg_precision: prf.precision,
            avg_recall: prf.recall,
            avg_f1: prf.f1,
            loss,
            avg_ones_per_sample: avg_ones(pred),
            n_trainable_params,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Serializes several reports as a JSON array.
pub fn reports_to_json(reports: &[MetricsReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize") + "\n"
}

/// Aligned plain-text table, one row per report.
pub fn render_table(reports: &[MetricsReport]) -> String {
    let header = ["Model", "WHS", "Precision", "Recall", "F1", "Loss", "Avg ones", "Params"];
    let rows: Vec<[String; 8]> = reports
        .iter()
        .map(|r| {
            [
                r.model.clone(),
                format!("{:.3}", r.weighted_hamming_score),
                format!("{:.3}", r.avg_precision),
                format!("{:.3}", r.avg_recall),
                format!("{:.3}", r.avg_f1),
                r.loss.map_or("-".into(), |l| format!("{l:.3}")),
                format!("{:.2}", r.avg_ones_per_sample),
                r.n_trainable_params.map_or("-".into(), |n| n.to_string()),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i == 0 {
                s += &format!("{c:<w$}");
            } else {
                s += &format!("  {c:>w$}");
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    out += &line(widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().iter().map(String::as_str).collect());
    for row in &rows {
        out += &line(row.iter().map(String::as_str).collect());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(ones: &[usize]) -> [u8; 9] {
        let mut r = [0u8; 9];
        for &i in ones {
            r[i] = 1;
        }
        r
    }

    #[test]
    fn whs_examples() {
        let truth = [row(&[0]), row(&[0, 1])];
        let pred = [row(&[0]), row(&[1, 2])];
        let s = weighted_hamming_score(&pred, &truth, MetricWeights::default()).unwrap();
        assert!((s - (1.0 - (0.82 / 3.0 + 0.18 / 15.0))).abs() < 1e-15);
        assert!((s - 0.7147).abs() < 1e-4);
        assert_eq!(weighted_hamming_score(&truth, &truth, MetricWeights::default()).unwrap(), 1.0);
    }

    #[test]
    fn zero_denominators_contribute_nothing() {
        let zeros = [row(&[]); 3];
        let mut some = zeros;
        some[1][4] = 1;
        // No positives in truth: only the false-positive rate counts.
        let s = weighted_hamming_score(&some, &zeros, MetricWeights::default()).unwrap();
        assert!((s - (1.0 - 0.18 / 27.0)).abs() < 1e-15);
        assert_eq!(weighted_hamming_score::<[u8; 9], [u8; 9]>(&[], &[], MetricWeights::default()).unwrap(), 1.0);
    }

    #[test]
    fn shape_and_value_errors() {
        let w = MetricWeights::default();
        assert!(weighted_hamming_score(&[row(&[])], &[row(&[]), row(&[])], w).is_err());
        assert!(weighted_hamming_score(&[[0u8, 2]], &[[0u8, 1]], w).is_err());
        assert!(avg_prf(&[[1u8]], &[[1u8, 0]]).is_err());
    }

    #[test]
    fn prf_examples() {
        let truth = [row(&[0, 3]), row(&[1]), row(&[])];
        let p = avg_prf(&truth, &truth).unwrap();
        assert_eq!((p.precision, p.recall, p.f1), (1.0, 1.0, 1.0));
        let full = [row(&[0, 1, 2, 3, 4, 5, 6, 7, 8]); 2];
        let comp = [row(&[]); 2];
        let p = avg_prf(&comp, &full).unwrap();
        assert_eq!((p.precision, p.recall, p.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn prf_support_weighting() {
        let mut truth = Vec::new();
        let mut pred = Vec::new();
        // label 0: tp=2, fn=1, fp=0 -> p=1, r=2/3, f1=0.8
        truth.extend([[1u8, 0], [1, 0], [1, 0]]);
        pred.extend([[1u8, 0], [1, 0], [0, 0]]);
        // label 1: tp=1, fn=0, fp=4 -> p=0.2, r=1, f1=1/3
        truth.extend([[0u8, 1], [0, 0], [0, 0], [0, 0], [0, 0]]);
        pred.extend([[0u8, 1], [0, 1], [0, 1], [0, 1], [0, 1]]);
        let p = avg_prf(&pred, &truth).unwrap();
        let f1_1 = 2.0 * 0.2 * 1.0 / 1.2;
        assert!((p.f1 - (3.0 * 0.8 + f1_1) / 4.0).abs() < 1e-12);
        assert!((p.precision - (3.0 * 1.0 + 0.2) / 4.0).abs() < 1e-12);
        assert!((p.recall - (3.0 * 2.0 / 3.0 + 1.0) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn avg_ones_examples() {
        assert_eq!(avg_ones(&[row(&[]); 4]), 0.0);
        assert_eq!(avg_ones(&[row(&[0, 1, 2, 3, 4, 5, 6, 7, 8]); 4]), 9.0);
        assert_eq!(avg_ones::<[u8; 9]>(&[]), 0.0);
    }

    #[test]
    fn report_json_key_order_and_omissions() {
        let r = MetricsReport::from_predictions("random", &[row(&[0])], &[row(&[0])], None, None).unwrap();
        let j = r.to_json();
        assert!(!j.contains("loss") && !j.contains("n_trainable_params"));
        let keys = ["\"model\"", "\"weighted_hamming_score\"", "\"avg_precision\"", "\"avg_recall\"", "\"avg_f1\"", "\"avg_ones_per_sample\""];
        let pos: Vec<usize> = keys.iter().map(|k| j.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        let full = MetricsReport {
            loss: Some(0.1),
            n_trainable_params: Some(649),
            ..r
        };
        let j = full.to_json();
        assert!(j.find("\"avg_f1\"").unwrap() < j.find("\"loss\"").unwrap());
        assert!(j.find("\"avg_ones_per_sample\"").unwrap() < j.find("\"n_trainable_params\"").unwrap());
        let back: MetricsReport = serde_json::from_str(&j).unwrap();
        assert_eq!(back, full);
    }

    #[test]
    fn table_is_aligned() {
        let a = MetricsReport::from_predictions("doc2vec+ffnn", &[row(&[0])], &[row(&[0])], Some(0.2), Some(649)).unwrap();
        let b = MetricsReport::from_predictions("random", &[row(&[1])], &[row(&[0])], None, None).unwrap();
        let t = render_table(&[a, b]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[3].contains(" - "));
        let col = lines[0].find("WHS").unwrap() + 3;
        assert!(lines[2..].iter().all(|l| l[..col].ends_with(|c: char| c.is_ascii_digit())));
    }

    fn brute_whs(pred: &[Vec<u8>], truth: &[Vec<u8>], w1: f64, w0: f64) -> f64 {
        let (mut fnr_n, mut fnr_d, mut fpr_n, mut fpr_d) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..pred.len() {
            for j in 0..pred[i].len() {
                if truth[i][j] == 1 {
                    fnr_d += 1.0;
                    if pred[i][j] == 0 {
                        fnr_n += 1.0;
                    }
                } else {
                    fpr_d += 1.0;
                    if pred[i][j] == 1 {
                        fpr_n += 1.0;
                    }
                }
            }
        }
        let fnr = if fnr_d > 0.0 { fnr_n / fnr_d } else { 0.0 };
        let fpr = if fpr_d > 0.0 { fpr_n / fpr_d } else { 0.0 };
        1.0 - (w1 * fnr + w0 * fpr)
    }

    fn matrix() -> impl Strategy<Value = (Vec<Vec<u8>>, Vec<Vec<u8>>)> {
        (1usize..12).prop_flat_map(|n| {
            let m = proptest::collection::vec(proptest::collection::vec(0u8..2, 9), n);
            (m.clone(), m)
        })
    }

    proptest! {
        #[test]
        fn whs_matches_brute_force((pred, truth) in matrix()) {
            let s = weighted_hamming_score(&pred, &truth, MetricWeights::default()).unwrap();
            prop_assert!((s - brute_whs(&pred, &truth, 0.82, 0.18)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&s));
        }

        #[test]
        fn fixing_an_entry_never_lowers_whs((pred, truth) in matrix(), pick in any::<usize>()) {
            let mut wrong = Vec::new();
            for i in 0..pred.len() {
                for j in 0..9 {
                    if pred[i][j] != truth[i][j] {
                        wrong.push((i, j));
                    }
                }
            }
            prop_assume!(!wrong.is_empty());
            let (i, j) = wrong[pick % wrong.len()];
            let mut fixed = pred.clone();
            fixed[i][j] = truth[i][j];
            let w = MetricWeights::default();
            prop_assert!(weighted_hamming_score(&fixed, &truth, w).unwrap() >= weighted_hamming_score(&pred, &truth, w).unwrap());
        }

        #[test]
        fn equal_weights_average_the_rates((pred, truth) in matrix()) {
            let s = weighted_hamming_score(&pred, &truth, MetricWeights { w1: 0.5, w0: 0.5 }).unwrap();
            prop_assert!((s - brute_whs(&pred, &truth, 0.5, 0.5)).abs() < 1e-12);
        }

        #[test]
        fn prf_bounded((pred, truth) in matrix()) {
            let p = avg_prf(&pred, &truth).unwrap();
            for v in [p.precision, p.recall, p.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
