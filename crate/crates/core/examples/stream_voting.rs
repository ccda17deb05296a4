//! Combine noisy per-fragment probabilities into one stream verdict, with and
//! without an abstention margin.

use eegclf::heads::{softmax_probs, ClassProbs};
use eegclf::voting::{vote_stream, vote_with_threshold, ThresholdVerdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fragments(rng: &mut ChaCha8Rng, truth: usize, n: usize, signal: f64) -> Vec<ClassProbs> {
    (0..n)
        .map(|_| {
            let logits: Vec<f64> = (0..3)
                .map(|c| rng.random_range(-1.0..1.0) + if c == truth { signal } else { 0.0 })
                .collect();
            softmax_probs(&logits).unwrap()
        })
        .collect()
}

fn main() -> eegclf::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (signal, n) in [(0.3, 5), (0.3, 150), (0.05, 150)] {
        let probs = fragments(&mut rng, 2, n, signal);
        let single_hits = probs.iter().filter(|p| p.argmax() == 2).count();
        let verdict = vote_stream(&probs)?;
        let gated = match vote_with_threshold(&probs, 0.05)? {
            ThresholdVerdict::Decided(v) => format!("decided {}", v.predicted_class),
            ThresholdVerdict::Abstain(v) => format!("abstain (margin {:.3})", v.margin()),
        };
        println!(
            "signal {signal:<4} n {n:>3}: single-fragment hits {single_hits:>3}/{n}, vote -> class {} \
             (mean {:.3?}, histogram {:?}), margin 0.05 -> {gated}",
            verdict.predicted_class, verdict.mean_probs, verdict.histogram
        );
    }
    Ok(())
}
