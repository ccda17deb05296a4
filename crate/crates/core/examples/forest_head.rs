//! Random forest on two-dimensional toy features: class probabilities, a
//! single tree's weight function and a save/load round trip.

use std::path::Path;

use eegclf::heads::{train_forest, ForestModel, ForestParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> eegclf::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let centers = [(0.0, 0.0), (3.0, 0.0), (0.0, 3.0)];
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (c, &(cx, cy)) in centers.iter().enumerate() {
        for _ in 0..60 {
            x.push(vec![cx + rng.random_range(-1.2..1.2), cy + rng.random_range(-1.2..1.2)]);
            y.push(c);
        }
    }

    let params = ForestParams { trees: 50, seed: 7, ..ForestParams::default() };
    let forest = train_forest(&x, &y, 3, &params)?;
    let depths: Vec<usize> = forest.trees.iter().map(|t| t.depth()).collect();
    println!(
        "{} trees, depth {}..={}",
        forest.trees.len(),
        depths.iter().min().unwrap(),
        depths.iter().max().unwrap()
    );

    for q in [[0.1, 0.2], [1.5, 0.0], [1.5, 1.5], [0.0, 2.8]] {
        let p = forest.probs(&q)?;
        println!("x = {q:?}  probs {:.3?}  -> class {}", p.probs, p.argmax());
    }

    let w = forest.tree_weights(0, &x, &[1.5, 1.5])?;
    let support = w.iter().filter(|&&v| v > 0.0).count();
    println!("tree 0 spreads weight over {support} training points, sum {:.3}", w.iter().sum::<f64>());

    let back = ForestModel::from_bytes(&forest.to_bytes(), Path::new("<memory>"))?;
    assert_eq!(back, forest);
    println!("serialized forest: {} bytes", forest.to_bytes().len());
    Ok(())
}
