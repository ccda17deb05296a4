//! Compare backpropagated gradients with central finite differences on a
//! small CNN in double precision.

use eegclf::nn::{Gradients, Mode, NetModel, NetworkKind, NetworkSpec, SpecOptions, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn loss(model: &NetModel<f64>, x: &Tensor<f64>, target: usize, dropout_seed: u64) -> f64 {
    let out = model.forward(x, Mode::Train, dropout_seed).unwrap();
    eegclf::nn::softmax_cross_entropy(&out.logits, target).0
}

fn main() -> eegclf::Result<()> {
    let opts = SpecOptions { conv_filters: [4, 4, 4], ..SpecOptions::default() };
    let spec = NetworkSpec::template(NetworkKind::Cnn, &opts);
    let mut model: NetModel<f64> = NetModel::<f32>::new(&spec, (8, 20), 1)?.cast();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = Tensor::from_vec(&model.input_shape(), (0..160).map(|_| rng.random_range(-1.0..1.0)).collect());
    let (target, dseed) = (1, 9);

    let trace = model.trace(&x, Mode::Train, dseed)?;
    let mut grads = Gradients::zeros_like(&model);
    model.backward(&trace, target, &mut grads)?;

    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for li in 0..model.layers.len() {
        let count = model.layers[li].params().len();
        for pi in 0..count {
            let len = model.layers[li].params()[pi].len();
            for _ in 0..3 {
                let k = rng.random_range(0..len);
                let orig = model.layers[li].params_mut()[pi].data[k];
                model.layers[li].params_mut()[pi].data[k] = orig + h;
                let up = loss(&model, &x, target, dseed);
                model.layers[li].params_mut()[pi].data[k] = orig - h;
                let down = loss(&model, &x, target, dseed);
                model.layers[li].params_mut()[pi].data[k] = orig;
                let numeric = (up - down) / (2.0 * h);
                let analytic = grads.params[li][pi].data[k];
                let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
                worst = worst.max(rel);
                println!(
                    "{:<8} param {pi} [{k:>4}]  analytic {analytic:>12.4e}  numeric {numeric:>12.4e}  rel {rel:.1e}",
                    model.layers[li].name()
                );
            }
        }
    }
    println!("worst relative error {worst:.2e}");
    Ok(())
}
