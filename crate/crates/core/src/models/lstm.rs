use std::ops::Range;

use rand::Rng;

use crate::error::{Error, Result};
use crate::io::{BinReader, BinWriter};
use crate::represent::{Frame, Sequence};
use crate::rng;
use crate::taxonomy::{LabelVector, N_LABELS};
use crate::training::{pad_batch, LossWeights};

use super::{sigmoid, Network};

pub const LSTM_HIDDEN: usize = 16;

/// Single-layer LSTM with gate blocks ordered input, forget, candidate, output,
/// followed by a dense sigmoid layer on the last hidden state.
///
/// Flat layout: `W_ih` (`I x 4H`, input-major so a one-hot frame selects a row),
/// `W_hh` (`H x 4H`), `b_ih` (4H), `b_hh` (4H), `W_out` (`H x 9`), `b_out` (9).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    n_in: usize,
    hidden: usize,
    params: Vec<f64>,
}

struct Trace {
    /// Gate activations per step: `[i, f, g, o]`, each `H` wide.
    gates: Vec<f64>,
    /// Cell states, `len + 1` rows; row 0 is the zero initial state.
    cells: Vec<f64>,
    /// Hidden states, `len + 1` rows; row 0 is the zero initial state.
    hiddens: Vec<f64>,
}

impl LstmModel {
    pub fn param_count(n_in: usize, hidden: usize) -> usize {
        4 * ((n_in + hidden) * hidden + 2 * hidden) + hidden * N_LABELS + N_LABELS
    }

    pub fn zeros(n_in: usize, hidden: usize) -> Self {
        Self {
            n_in,
            hidden,
            params: vec![0.0; Self::param_count(n_in, hidden)],
        }
    }

    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero except `b_ih` of the
    /// forget block, which starts at 1.
    pub fn new(n_in: usize, hidden: usize, seed: u64) -> Self {
        let mut m = Self::zeros(n_in, hidden);
        let mut r = rng::seeded(seed);
        for (range, fan_in) in [(m.w_ih(), n_in), (m.w_hh(), hidden), (m.w_out(), hidden)] {
            let b = 1.0 / (fan_in as f64).sqrt();
            for p in &mut m.params[range] {
                *p = r.gen_range(-b..b);
            }
        }
        let f = m.b_ih().start + hidden;
        m.params[f..f + hidden].fill(1.0);
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

    fn w_ih(&self) -> Range<usize> {
        0..self.n_in * 4 * self.hidden
    }

    fn w_hh(&self) -> Range<usize> {
        let s = self.w_ih().end;
        s..s + self.hidden * 4 * self.hidden
    }

    fn b_ih(&self) -> Range<usize> {
        let s = self.w_hh().end;
        s..s + 4 * self.hidden
    }

    fn b_hh(&self) -> Range<usize> {
        let s = self.b_ih().end;
        s..s + 4 * self.hidden
    }

    fn w_out(&self) -> Range<usize> {
        let s = self.b_hh().end;
        s..s + self.hidden * N_LABELS
    }

    fn b_out(&self) -> Range<usize> {
        let s = self.w_out().end;
        s..s + N_LABELS
    }

    fn check(&self, seq: &Sequence, length: usize) -> Result<()> {
        if seq.dim() != self.n_in {
            return Err(Error::DimensionMismatch {
                expected: self.n_in,
                got: seq.dim(),
            });
        }
        if length == 0 {
            return Err(Error::Argument("lstm input length must be at least 1".into()));
        }
        if length > seq.len() {
            return Err(Error::Argument(format!(
                "length {length} exceeds sequence capacity {}",
                seq.len()
            )));
        }
        Ok(())
    }

    fn run(&self, seq: &Sequence, length: usize) -> Trace {
        let h = self.hidden;
        let g4 = 4 * h;
        let w_ih = &self.params[self.w_ih()];
        let w_hh = &self.params[self.w_hh()];
        let b_ih = &self.params[self.b_ih()];
        let b_hh = &self.params[self.b_hh()];
        let mut t = Trace {
            gates: vec![0.0; length * g4],
            cells: vec![0.0; (length + 1) * h],
            hiddens: vec![0.0; (length + 1) * h],
        };
        let mut a = vec![0.0; g4];
        for (step, frame) in seq.frames()[..length].iter().enumerate() {
            for r in 0..g4 {
                a[r] = b_ih[r] + b_hh[r];
            }
            match frame {
                Frame::OneHot(i) => {
                    for (ar, w) in a.iter_mut().zip(&w_ih[i * g4..(i + 1) * g4]) {
                        *ar += w;
                    }
                }
                Frame::Dense(x) => {
                    for (i, &xi) in x.iter().enumerate() {
                        if xi != 0.0 {
                            for (ar, w) in a.iter_mut().zip(&w_ih[i * g4..(i + 1) * g4]) {
                                *ar += xi * w;
                            }
                        }
                    }
                }
                Frame::Zero => {}
            }
            let h_prev = &t.hiddens[step * h..(step + 1) * h];
            for (k, &hk) in h_prev.iter().enumerate() {
                if hk != 0.0 {
                    for (ar, w) in a.iter_mut().zip(&w_hh[k * g4..(k + 1) * g4]) {
                        *ar += hk * w;
                    }
                }
            }
            let gates = &mut t.gates[step * g4..(step + 1) * g4];
            for u in 0..h {
                gates[u] = sigmoid(a[u]);
                gates[h + u] = sigmoid(a[h + u]);
                gates[2 * h + u] = a[2 * h + u].tanh();
                gates[3 * h + u] = sigmoid(a[3 * h + u]);
            }
            for u in 0..h {
                let c_prev = t.cells[step * h + u];
                let c = gates[h + u] * c_prev + gates[u] * gates[2 * h + u];
                t.cells[(step + 1) * h + u] = c;
                t.hiddens[(step + 1) * h + u] = gates[3 * h + u] * c.tanh();
            }
        }
        t
    }

    fn output_logits(&self, hid: &[f64]) -> [f64; N_LABELS] {
        let w = &self.params[self.w_out()];
        let mut z: [f64; N_LABELS] = self.params[self.b_out()].try_into().unwrap();
        for (k, &hk) in hid.iter().enumerate() {
            for (zj, wk) in z.iter_mut().zip(&w[k * N_LABELS..(k + 1) * N_LABELS]) {
                *zj += hk * wk;
            }
        }
        z
    }

    /// Logits from the hidden state after `length` steps; frames beyond are ignored.
    pub fn logits_at(&self, seq: &Sequence, length: usize) -> Result<[f64; N_LABELS]> {
        self.check(seq, length)?;
        let t = self.run(seq, length);
        Ok(self.output_logits(&t.hiddens[length * self.hidden..]))
    }

    pub fn backprop_at(
        &self,
        seq: &Sequence,
        length: usize,
        y: &LabelVector,
        w: &LossWeights,
        scale: f64,
        grad: &mut [f64],
    ) -> Result<f64> {
        self.check(seq, length)?;
        let h = self.hidden;
        let g4 = 4 * h;
        let t = self.run(seq, length);
        let h_last = &t.hiddens[length * h..];
        let z = self.output_logits(h_last);

        let mut loss = 0.0;
        let mut dz = [0.0; N_LABELS];
        for l in 0..N_LABELS {
            let (e, d) = w.entry_from_logit(z[l], y.get(l));
            loss += e;
            dz[l] = d * scale;
        }

        let w_out = &self.params[self.w_out()];
        let (w_out_r, b_out_r) = (self.w_out(), self.b_out());
        for (g, d) in grad[b_out_r].iter_mut().zip(&dz) {
            *g += d;
        }
        let mut dh = vec![0.0; h];
        for k in 0..h {
            for j in 0..N_LABELS {
                grad[w_out_r.start + k * N_LABELS + j] += h_last[k] * dz[j];
                dh[k] += w_out[k * N_LABELS + j] * dz[j];
            }
        }

        let w_hh = &self.params[self.w_hh()];
        let (w_ih_s, w_hh_s, b_ih_s, b_hh_s) =
            (self.w_ih().start, self.w_hh().start, self.b_ih().start, self.b_hh().start);
        let mut dc = vec![0.0; h];
        let mut da = vec![0.0; g4];
        for step in (0..length).rev() {
            let gates = &t.gates[step * g4..(step + 1) * g4];
            let c_prev = &t.cells[step * h..(step + 1) * h];
            let c = &t.cells[(step + 1) * h..(step + 2) * h];
            for u in 0..h {
                let (i, f, g, o) = (gates[u], gates[h + u], gates[2 * h + u], gates[3 * h + u]);
                let tc = c[u].tanh();
                let d_o = dh[u] * tc;
                dc[u] += dh[u] * o * (1.0 - tc * tc);
                da[u] = dc[u] * g * i * (1.0 - i);
                da[h + u] = dc[u] * c_prev[u] * f * (1.0 - f);
                da[2 * h + u] = dc[u] * i * (1.0 - g * g);
                da[3 * h + u] = d_o * o * (1.0 - o);
                dc[u] *= f;
            }
            for r in 0..g4 {
                grad[b_ih_s + r] += da[r];
                grad[b_hh_s + r] += da[r];
            }
            match &seq.frames()[step] {
                Frame::OneHot(i) => {
                    let row = &mut grad[w_ih_s + i * g4..w_ih_s + (i + 1) * g4];
                    for (gr, d) in row.iter_mut().zip(&da) {
                        *gr += d;
                    }
                }
                Frame::Dense(x) => {
                    for (i, &xi) in x.iter().enumerate() {
                        if xi != 0.0 {
                            let row = &mut grad[w_ih_s + i * g4..w_ih_s + (i + 1) * g4];
                            for (gr, d) in row.iter_mut().zip(&da) {
                                *gr += xi * d;
                            }
                        }
                    }
                }
                Frame::Zero => {}
            }
            let h_prev = &t.hiddens[step * h..(step + 1) * h];
            for k in 0..h {
                let row = w_hh_s + k * g4;
                let mut acc = 0.0;
                for r in 0..g4 {
                    grad[row + r] += h_prev[k] * da[r];
                    acc += w_hh[k * g4 + r] * da[r];
                }
                dh[k] = acc;
            }
        }
        Ok(loss)
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

pub fn lstm_forward(m: &LstmModel, seq: &Sequence, length: usize) -> Result<[f64; N_LABELS]> {
    Ok(m.logits_at(seq, length)?.map(sigmoid))
}

impl Network for LstmModel {
    type Input = Sequence;

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn tensors(&self) -> Vec<(&'static str, Range<usize>)> {
        vec![
            ("w_ih", self.w_ih()),
            ("w_hh", self.w_hh()),
            ("b_ih", self.b_ih()),
            ("b_hh", self.b_hh()),
            ("w_out", self.w_out()),
            ("b_out", self.b_out()),
        ]
    }

    fn logits(&self, x: &Sequence) -> Result<[f64; N_LABELS]> {
        self.logits_at(x, x.len())
    }

    fn backprop(
        &self,
        x: &Sequence,
        y: &LabelVector,
        w: &LossWeights,
        scale: f64,
        grad: &mut [f64],
    ) -> Result<f64> {
        self.backprop_at(x, x.len(), y, w, scale, grad)
    }

    /// Pads the batch to its longest sequence and runs each sample to its own length.
    fn backprop_batch(
        &self,
        xs: &[&Sequence],
        ys: &[&LabelVector],
        w: &LossWeights,
        scale: f64,
        grad: &mut [f64],
    ) -> Result<Vec<f64>> {
        let (padded, lengths) = pad_batch(xs)?;
        padded
            .iter()
            .zip(&lengths)
            .zip(ys)
            .map(|((s, &len), y)| self.backprop_at(s, len, y, w, scale, grad))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(LstmModel::param_count(300, LSTM_HIDDEN), 20_505);
        assert_eq!(LstmModel::param_count(6_259, LSTM_HIDDEN), 401_881);
        let m = LstmModel::new(7, 3, 0);
        let total: usize = m.tensors().iter().map(|(_, r)| r.len()).sum();
        assert_eq!(total, m.params().len());
    }

    #[test]
    fn zero_parameters_give_one_half() {
        let m = LstmModel::zeros(3, 4);
        let s = Sequence::from_dense(3, &[vec![1.0, -2.0, 0.5], vec![3.0, 0.0, 1.0]]).unwrap();
        assert_eq!(lstm_forward(&m, &s, 2).unwrap(), [0.5; N_LABELS]);
    }

    #[test]
    fn forget_bias_initialization() {
        let m = LstmModel::new(5, 4, 1);
        let b = &m.params()[m.b_ih()];
        assert_eq!(&b[..4], &[0.0; 4]);
        assert_eq!(&b[4..8], &[1.0; 4]);
        assert_eq!(&b[8..], &[0.0; 8]);
        assert!(m.params()[m.b_hh()].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn length_errors() {
        let m = LstmModel::new(2, 2, 0);
        let s = Sequence::from_dense(2, &[vec![1.0, 0.0]]).unwrap();
        assert!(lstm_forward(&m, &s, 0).is_err());
        assert!(lstm_forward(&m, &s, 2).is_err());
        assert!(lstm_forward(&m, &Sequence::from_dense(3, &[vec![0.0; 3]]).unwrap(), 1).is_err());
    }

    #[test]
    fn padding_is_ignored() {
        let m = LstmModel::new(4, 3, 9);
        let s = Sequence::from_dense(4, &[vec![0.1, 0.2, -0.3, 0.4], vec![1.0, 0.0, 0.0, -1.0]]).unwrap();
        let mut padded = s.clone();
        padded.pad_to(6);
        assert_eq!(lstm_forward(&m, &s, 2).unwrap(), lstm_forward(&m, &padded, 2).unwrap());
    }

    #[test]
    fn one_hot_frames_match_dense() {
        let m = LstmModel::new(4, 3, 2);
        let mut onehot = Sequence::new(4);
        onehot.push(Frame::OneHot(2)).unwrap();
        onehot.push(Frame::OneHot(0)).unwrap();
        let dense = Sequence::from_dense(4, &onehot.to_dense()).unwrap();
        let a = lstm_forward(&m, &onehot, 2).unwrap();
        let b = lstm_forward(&m, &dense, 2).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    /// Unrolls two steps of the cell by hand with explicit matrices in the
    /// conventional `W: 4H x I` orientation.
    #[test]
    fn two_step_manual_unroll() {
        let (i_dim, h) = (2, 2);
        let mut r = rng::seeded(21);
        let mut u = || r.gen_range(-0.5..0.5);
        let w: Vec<Vec<f64>> = (0..4 * h).map(|_| (0..i_dim).map(|_| u()).collect()).collect();
        let uu: Vec<Vec<f64>> = (0..4 * h).map(|_| (0..h).map(|_| u()).collect()).collect();
        let b_in: Vec<f64> = (0..4 * h).map(|_| u()).collect();
        let b_rec: Vec<f64> = (0..4 * h).map(|_| u()).collect();
        let w_out: Vec<Vec<f64>> = (0..N_LABELS).map(|_| (0..h).map(|_| u()).collect()).collect();
        let b_out: Vec<f64> = (0..N_LABELS).map(|_| u()).collect();
        let xs = [vec![0.7, -1.2], vec![0.3, 0.9]];

        let mut hs = vec![0.0; h];
        let mut cs = vec![0.0; h];
        for x in &xs {
            let pre = |row: usize| -> f64 {
                let mut s = b_in[row] + b_rec[row];
                for k in 0..i_dim {
                    s += w[row][k] * x[k];
                }
                for k in 0..h {
                    s += uu[row][k] * hs[k];
                }
                s
            };
            let ig: Vec<f64> = (0..h).map(|j| sig(pre(j))).collect();
            let fg: Vec<f64> = (0..h).map(|j| sig(pre(h + j))).collect();
            let gg: Vec<f64> = (0..h).map(|j| pre(2 * h + j).tanh()).collect();
            let og: Vec<f64> = (0..h).map(|j| sig(pre(3 * h + j))).collect();
            for j in 0..h {
                cs[j] = fg[j] * cs[j] + ig[j] * gg[j];
            }
            hs = (0..h).map(|j| og[j] * cs[j].tanh()).collect();
        }
        let expected: Vec<f64> = (0..N_LABELS)
            .map(|j| sig(b_out[j] + (0..h).map(|k| w_out[j][k] * hs[k]).sum::<f64>()))
            .collect();

        let mut flat = Vec::new();
        for k in 0..i_dim {
            flat.extend((0..4 * h).map(|row| w[row][k]));
        }
        for k in 0..h {
            flat.extend((0..4 * h).map(|row| uu[row][k]));
        }
        flat.extend(&b_in);
        flat.extend(&b_rec);
        for k in 0..h {
            flat.extend((0..N_LABELS).map(|j| w_out[j][k]));
        }
        flat.extend(&b_out);
        let m = LstmModel::from_params(i_dim, h, flat).unwrap();
        let got = lstm_forward(&m, &Sequence::from_dense(i_dim, &xs).unwrap(), 2).unwrap();
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-12, "{g} vs {e}");
        }
    }

    #[test]
    fn binary_round_trip() {
        let m = LstmModel::new(3, 2, 4);
        let mut w = BinWriter::new();
        m.write(&mut w);
        let bytes = w.into_bytes();
        let mut r = BinReader::new(&bytes);
        assert_eq!(LstmModel::read(&mut r).unwrap(), m);
    }
}
