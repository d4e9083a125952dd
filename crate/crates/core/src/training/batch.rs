use crate::error::{Error, Result};
use crate::represent::Sequence;

/// Zero-pads every sequence to the longest in the batch and records the true lengths.
pub fn pad_batch(seqs: &[&Sequence]) -> Result<(Vec<Sequence>, Vec<usize>)> {
    let max_len = seqs.iter().map(|s| s.len()).max().unwrap_or(0);
    if max_len == 0 {
        return Err(Error::Argument("cannot pad a batch with no non-empty sequence".into()));
    }
    let dim = seqs[0].dim();
    if let Some(bad) = seqs.iter().find(|s| s.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bad.dim(),
        });
    }
    let lengths = seqs.iter().map(|s| s.len()).collect();
    let padded = seqs
        .iter()
        .map(|s| {
            let mut p = (*s).clone();
            p.pad_to(max_len);
            p
        })
        .collect();
    Ok((padded, lengths))
}

pub fn unpad(padded: &[Sequence], lengths: &[usize]) -> Vec<Sequence> {
    padded.iter().zip(lengths).map(|(s, &n)| s.truncated(n)).collect()
}
