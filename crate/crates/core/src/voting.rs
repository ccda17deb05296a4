//! Stream-level decisions: average the fragment probabilities of a stream
//! and take the argmax.

use crate::error::{Error, Result};
use crate::heads::{argmax, on_simplex, ClassProbs};

#[derive(Debug, Clone, PartialEq)]
pub struct StreamVerdict {
    pub predicted_class: usize,
    pub mean_probs: Vec<f64>,
    pub fragment_count: usize,
    /// How many fragments had each class as their own argmax.
    pub histogram: Vec<usize>,
}

impl StreamVerdict {
    /// Gap between the largest and second-largest mean probability.
    pub fn margin(&self) -> f64 {
        let mut sorted = self.mean_probs.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        sorted[0] - sorted.get(1).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdVerdict {
    Decided(StreamVerdict),
    Abstain(StreamVerdict),
}

fn check(fragment_probs: &[ClassProbs]) -> Result<usize> {
    let first = fragment_probs.first().ok_or_else(|| Error::invalid("cannot vote over zero fragments"))?;
    let classes = first.probs.len();
    for (i, p) in fragment_probs.iter().enumerate() {
        if p.probs.len() != classes {
            return Err(Error::dims(format!("{classes} classes"), p.probs.len()));
        }
        if !on_simplex(&p.probs) {
            return Err(Error::invalid(format!("fragment {i} probabilities are not on the simplex")));
        }
    }
    Ok(classes)
}

/// Sums probability vectors on a fixed 2^-62 grid, so the result does not
/// depend on the order of the fragments.
fn exact_sum(fragment_probs: &[ClassProbs], classes: usize) -> Vec<f64> {
    let mut acc = vec![0i128; classes];
    for p in fragment_probs {
        for (a, &v) in acc.iter_mut().zip(&p.probs) {
            let (m, e) = decompose(v);
            let shift = e + 62;
            if shift >= 0 {
                *a += (m as i128) << shift;
            } else if shift > -64 {
                *a += (m >> (-shift) as u32) as i128;
            }
        }
    }
    acc.iter().map(|&a| a as f64 / (1u64 << 62) as f64).collect()
}

fn decompose(v: f64) -> (u64, i32) {
    if v == 0.0 {
        return (0, 0);
    }
    let bits = v.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    }
}

/// Mean of the fragment probabilities, with its argmax as the class.
///
/// The divisor is the fragment count; any positive divisor gives the same
/// class. Accumulation is exact on a 2^-62 grid, so every permutation of the
/// input yields a bit-identical verdict.
pub fn vote_stream(fragment_probs: &[ClassProbs]) -> Result<StreamVerdict> {
    let classes = check(fragment_probs)?;
    let n = fragment_probs.len();
    let sums = exact_sum(fragment_probs, classes);
    let mean_probs: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
    let mut histogram = vec![0; classes];
    for p in fragment_probs {
        histogram[p.argmax()] += 1;
    }
    Ok(StreamVerdict {
        predicted_class: argmax(&mean_probs),
        mean_probs,
        fragment_count: n,
        histogram,
    })
}

/// Like [`vote_stream`], but abstains when the top two mean probabilities
/// are closer than `min_margin`.
pub fn vote_with_threshold(fragment_probs: &[ClassProbs], min_margin: f64) -> Result<ThresholdVerdict> {
    if !(0.0..1.0).contains(&min_margin) {
        return Err(Error::invalid(format!("min_margin {min_margin} outside [0, 1)")));
    }
    let verdict = vote_stream(fragment_probs)?;
    Ok(if verdict.margin() < min_margin {
        ThresholdVerdict::Abstain(verdict)
    } else {
        ThresholdVerdict::Decided(verdict)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heads::ProbSource;

    fn cp(p: &[f64]) -> ClassProbs {
        ClassProbs {
            probs: p.to_vec(),
            source: ProbSource::Softmax,
        }
    }

    #[test]
    fn majority_example() {
        let v = vote_stream(&[cp(&[1.0, 0.0, 0.0]), cp(&[1.0, 0.0, 0.0]), cp(&[0.0, 1.0, 0.0])]).unwrap();
        assert_eq!(v.predicted_class, 0);
        assert!((v.mean_probs[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(v.histogram, vec![2, 1, 0]);
        assert_eq!(v.fragment_count, 3);
        assert!(vote_stream(&[]).is_err());
    }

    #[test]
    fn threshold_examples() {
        let p = [cp(&[0.34, 0.33, 0.33])];
        assert!(matches!(vote_with_threshold(&p, 0.05).unwrap(), ThresholdVerdict::Abstain(_)));
        match vote_with_threshold(&p, 0.0).unwrap() {
            ThresholdVerdict::Decided(v) => assert_eq!(v, vote_stream(&p).unwrap()),
            other => panic!("{other:?}"),
        }
        match vote_with_threshold(&[cp(&[0.8, 0.1, 0.1])], 0.5).unwrap() {
            ThresholdVerdict::Decided(v) => assert_eq!(v.predicted_class, 0),
            other => panic!("{other:?}"),
        }
        assert!(vote_with_threshold(&p, 1.0).is_err());
    }

    #[test]
    fn permutation_gives_identical_bits() {
        let a = [cp(&[0.1, 0.2, 0.7]), cp(&[0.3, 0.3, 0.4]), cp(&[1e-17, 0.5, 0.5 - 1e-17])];
        let b = [a[2].clone(), a[0].clone(), a[1].clone()];
        assert_eq!(vote_stream(&a).unwrap(), vote_stream(&b).unwrap());
    }
}
