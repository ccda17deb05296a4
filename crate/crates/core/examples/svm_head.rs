//! Multi-class linear SVM on toy features, with the effect of the
//! regularization strength on the weight norm.

use eegclf::heads::{train_msvm, SvmParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> eegclf::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..300 {
        let c = i % 3;
        let angle = c as f64 * 2.1;
        x.push(vec![
            angle.cos() * 2.0 + rng.random_range(-1.0..1.0),
            angle.sin() * 2.0 + rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ]);
        y.push(c);
    }

    for lambda in [1e-4, 1e-2, 1.0] {
        let model = train_msvm(&x, &y, 3, &SvmParams { lambda, seed: 1, ..SvmParams::default() })?;
        let acc = x.iter().zip(&y).filter(|(xi, &yi)| model.predict(xi).unwrap() == yi).count() as f64 / x.len() as f64;
        println!("lambda {lambda:<7} train accuracy {acc:.3}  |W| {:.3}", model.weight_norm());
    }

    let model = train_msvm(&x, &y, 3, &SvmParams::default())?;
    let p = model.probs(&[2.0, 0.0, 0.0])?;
    println!("scores {:.3?}  probs {:.3?}", model.scores(&[2.0, 0.0, 0.0])?, p.probs);
    Ok(())
}
