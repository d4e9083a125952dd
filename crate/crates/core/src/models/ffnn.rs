use std::ops::Range;

use rand::Rng;

use crate::error::{Error, Result};
use crate::io::{BinReader, BinWriter};
use crate::rng;
use crate::taxonomy::{LabelVector, N_LABELS};
use crate::training::LossWeights;

use super::Network;

pub const FFNN_INPUT: usize = 30;
pub const FFNN_HIDDEN: usize = 16;

/// Two dense layers, ReLU then sigmoid. Parameters live in one flat buffer:
/// `W1` (`n_in x hidden`, input-major), `b1`, `W2` (`hidden x 9`), `b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FfnnModel {
    n_in: usize,
    hidden: usize,
    params: Vec<f64>,
}

impl FfnnModel {
    pub fn param_count(n_in: usize, hidden: usize) -> usize {
        n_in * hidden + hidden + hidden * N_LABELS + N_LABELS
    }

    pub fn zeros(n_in: usize, hidden: usize) -> Self {
        Self {
            n_in,
            hidden,
            params: vec![0.0; Self::param_count(n_in, hidden)],
        }
    }

    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn new(n_in: usize, hidden: usize, seed: u64) -> Self {
        let mut m = Self::zeros(n_in, hidden);
        let mut r = rng::seeded(seed);
        let (w1, w2) = (m.w1(), m.w2());
        let b1 = 1.0 / (n_in as f64).sqrt();
        let b2 = 1.0 / (hidden as f64).sqrt();
        for p in &mut m.params[w1] {
            *p = r.gen_range(-b1..b1);
        }
        for p in &mut m.params[w2] {
            *p = r.gen_range(-b2..b2);
        }
        m
    }

    pub fn from_params(n_in: usize, hidden: usize, params: Vec<f64>) -> Result<Self> {
        let expected = Self::param_count(n_in, hidden);
        if params.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: params.len(),
            });
        }
        Ok(Self { n_in, hidden, params })
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    fn w1(&self) -> Range<usize> {
        0..self.n_in * self.hidden
    }

    fn b1(&self) -> Range<usize> {
        let s = self.w1().end;
        s..s + self.hidden
    }

    fn w2(&self) -> Range<usize> {
        let s = self.b1().end;
        s..s + self.hidden * N_LABELS
    }

    fn b2(&self) -> Range<usize> {
        let s = self.w2().end;
        s..s + N_LABELS
    }

    fn hidden_pre(&self, x: &[f64]) -> Vec<f64> {
        let h = self.hidden;
        let w1 = &self.params[self.w1()];
        let mut a = self.params[self.b1()].to_vec();
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                for (aj, wij) in a.iter_mut().zip(&w1[i * h..(i + 1) * h]) {
                    *aj += xi * wij;
                }
            }
        }
        a
    }

    fn output_logits(&self, hid: &[f64]) -> [f64; N_LABELS] {
        let w2 = &self.params[self.w2()];
        let mut z: [f64; N_LABELS] = self.params[self.b2()].try_into().unwrap();
        for (k, &hk) in hid.iter().enumerate() {
            if hk != 0.0 {
                for (zj, w) in z.iter_mut().zip(&w2[k * N_LABELS..(k + 1) * N_LABELS]) {
                    *zj += hk * w;
                }
            }
        }
        z
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_in {
            return Err(Error::DimensionMismatch {
                expected: self.n_in,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn write(&self, w: &mut BinWriter) {
        w.len32(self.n_in);
        w.len32(self.hidden);
        w.f64s(&self.params);
    }

    pub(crate) fn read(r: &mut BinReader) -> Result<Self> {
        let n_in = r.len32()?;
        let hidden = r.len32()?;
        let params = r.f64s(Self::param_count(n_in, hidden))?;
        Self::from_params(n_in, hidden, params)
    }
}

/// Keeps NaN so a corrupted weight surfaces as a non-finite loss.
fn relu(a: f64) -> f64 {
    if a < 0.0 {
        0.0
    } else {
        a
    }
}

pub fn ffnn_forward(m: &FfnnModel, x: &[f64]) -> Result<[f64; N_LABELS]> {
    m.predict_proba(x)
}

impl Network for FfnnModel {
    type Input = [f64];

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn tensors(&self) -> Vec<(&'static str, Range<usize>)> {
        vec![("w1", self.w1()), ("b1", self.b1()), ("w2", self.w2()), ("b2", self.b2())]
    }

    fn logits(&self, x: &[f64]) -> Result<[f64; N_LABELS]> {
        self.check(x)?;
        let hid: Vec<f64> = self.hidden_pre(x).into_iter().map(relu).collect();
        Ok(self.output_logits(&hid))
    }

    fn backprop(
        &self,
        x: &[f64],
        y: &LabelVector,
        w: &LossWeights,
        scale: f64,
        grad: &mut [f64],
    ) -> Result<f64> {
        self.check(x)?;
        let h = self.hidden;
        let pre = self.hidden_pre(x);
        let hid: Vec<f64> = pre.iter().map(|&a| relu(a)).collect();
        let z = self.output_logits(&hid);

        let mut loss = 0.0;
        let mut dz = [0.0; N_LABELS];
        for l in 0..N_LABELS {
            let (e, d) = w.entry_from_logit(z[l], y.get(l));
            loss += e;
            dz[l] = d * scale;
        }

        let w2 = &self.params[self.w2()];
        let (w2r, b2r) = (self.w2(), self.b2());
        for (g, d) in grad[b2r].iter_mut().zip(&dz) {
            *g += d;
        }
        let mut da = vec![0.0; h];
        for k in 0..h {
            let row = k * N_LABELS;
            let mut dh = 0.0;
            for j in 0..N_LABELS {
                grad[w2r.start + row + j] += hid[k] * dz[j];
                dh += w2[row + j] * dz[j];
            }
            da[k] = if pre[k] > 0.0 { dh } else { 0.0 };
        }
        for (g, d) in grad[self.b1()].iter_mut().zip(&da) {
            *g += d;
        }
        let w1r = self.w1();
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                let g = &mut grad[w1r.start + i * h..w1r.start + (i + 1) * h];
                for (gk, dk) in g.iter_mut().zip(&da) {
                    *gk += xi * dk;
                }
            }
        }
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Straight transcription of `sigmoid(W2^T relu(W1^T x + b1) + b2)` with
    /// explicit 2-D indexing, independent of the flat layout helpers.
    fn oracle(w1: &[Vec<f64>], b1: &[f64], w2: &[Vec<f64>], b2: &[f64], x: &[f64]) -> Vec<f64> {
        let h: Vec<f64> = (0..b1.len())
            .map(|j| {
                let mut s = b1[j];
                for i in 0..x.len() {
                    s += w1[i][j] * x[i];
                }
                if s > 0.0 {
                    s
                } else {
                    0.0
                }
            })
            .collect();
        (0..b2.len())
            .map(|j| {
                let mut s = b2[j];
                for k in 0..h.len() {
                    s += w2[k][j] * h[k];
                }
                1.0 / (1.0 + (-s).exp())
            })
            .collect()
    }

    #[test]
    fn zero_parameters_give_one_half() {
        let m = FfnnModel::zeros(FFNN_INPUT, FFNN_HIDDEN);
        assert_eq!(ffnn_forward(&m, &[0.3; FFNN_INPUT]).unwrap(), [0.5; N_LABELS]);
        let m = FfnnModel::new(FFNN_INPUT, FFNN_HIDDEN, 1);
        assert_eq!(ffnn_forward(&m, &[0.0; FFNN_INPUT]).unwrap(), [0.5; N_LABELS]);
    }

    #[test]
    fn matches_hand_rolled_oracle() {
        let mut r = rng::seeded(5);
        let mut u = || r.gen_range(-1.0..1.0);
        let w1: Vec<Vec<f64>> = (0..FFNN_INPUT).map(|_| (0..FFNN_HIDDEN).map(|_| u()).collect()).collect();
        let b1: Vec<f64> = (0..FFNN_HIDDEN).map(|_| u()).collect();
        let w2: Vec<Vec<f64>> = (0..FFNN_HIDDEN).map(|_| (0..N_LABELS).map(|_| u()).collect()).collect();
        let b2: Vec<f64> = (0..N_LABELS).map(|_| u()).collect();
        let x: Vec<f64> = (0..FFNN_INPUT).map(|_| u()).collect();
        let mut flat: Vec<f64> = w1.iter().flatten().copied().collect();
        flat.extend(&b1);
        flat.extend(w2.iter().flatten());
        flat.extend(&b2);
        let m = FfnnModel::from_params(FFNN_INPUT, FFNN_HIDDEN, flat).unwrap();
        let got = ffnn_forward(&m, &x).unwrap();
        for (g, e) in got.iter().zip(oracle(&w1, &b1, &w2, &b2, &x)) {
            assert!((g - e).abs() < 1e-12);
            assert!(*g > 0.0 && *g < 1.0);
        }
    }

    #[test]
    fn param_count_and_layout() {
        let m = FfnnModel::new(FFNN_INPUT, FFNN_HIDDEN, 0);
        assert_eq!(m.params().len(), 649);
        let total: usize = m.tensors().iter().map(|(_, r)| r.len()).sum();
        assert_eq!(total, 649);
        assert!(m.params()[m.b1()].iter().all(|&b| b == 0.0));
        let bound = 1.0 / (FFNN_INPUT as f64).sqrt();
        assert!(m.params()[m.w1()].iter().all(|w| w.abs() <= bound));
    }

    #[test]
    fn dimension_mismatch() {
        let m = FfnnModel::zeros(3, 2);
        assert!(ffnn_forward(&m, &[1.0]).is_err());
        assert!(FfnnModel::from_params(3, 2, vec![0.0; 5]).is_err());
    }

    #[test]
    fn binary_round_trip() {
        let m = FfnnModel::new(4, 3, 2);
        let mut w = BinWriter::new();
        m.write(&mut w);
        let bytes = w.into_bytes();
        let mut r = BinReader::new(&bytes);
        assert_eq!(FfnnModel::read(&mut r).unwrap(), m);
    }
}
