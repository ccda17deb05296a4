use eegclf::heads::{
    argmax, on_simplex, softmax_probs, train_forest, ForestModel, ForestParams, Head, ProbSource, SvmModel,
};
use eegclf::nn::{softmax, Layer, Tensor};
use eegclf::voting::vote_stream;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// An SVM whose scores are exactly `bias`: zero weights, identity scaling.
fn constant_svm(bias: &[f64], dim: usize) -> SvmModel {
    SvmModel {
        weight: vec![0.0; bias.len() * dim],
        bias: bias.to_vec(),
        lambda: 1e-3,
        classes: bias.len(),
        dim,
        mean: vec![0.0; dim],
        scale: vec![1.0; dim],
    }
}

#[test]
fn softmax_reference_values() {
    let p = softmax(&[1.0f64, 2.0, 3.0]);
    assert!(close(&p, &[0.09003057, 0.24472847, 0.66524096], 1e-8), "{p:?}");
    let shifted = softmax(&[1001.0f64, 1002.0, 1003.0]);
    assert!(close(&p, &shifted, 1e-12));
}

#[test]
fn svm_scores_map_to_reference_probabilities() {
    let svm = constant_svm(&[10.0, 0.0, -10.0], 4);
    let x = [0.3, -1.0, 2.0, 5.0];
    assert_eq!(svm.scores(&x).unwrap(), vec![10.0, 0.0, -10.0]);
    let p = svm.probs(&x).unwrap();
    assert_eq!(p.source, ProbSource::SvmCalibrated);
    let expected = [9.99954600e-01, 4.53978686e-05, 2.06106005e-09];
    for (a, b) in p.probs.iter().zip(expected) {
        assert!((a - b).abs() <= 1e-9 * b.max(1e-3), "{a} vs {b}");
    }
    assert!(p.on_simplex());
}

#[test]
fn svm_probs_preserve_score_argmax() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..500 {
        let bias: Vec<f64> = (0..4).map(|_| rng.random_range(-50.0..50.0)).collect();
        let svm = constant_svm(&bias, 2);
        let p = svm.probs(&[0.0, 0.0]).unwrap();
        assert_eq!(p.argmax(), argmax(&bias));
        assert_eq!(svm.predict(&[0.0, 0.0]).unwrap(), argmax(&bias));
    }
}

#[test]
fn tied_scores_give_uniform_probabilities() {
    let p = constant_svm(&[2.5; 3], 1).probs(&[7.0]).unwrap();
    assert!(close(&p.probs, &[1.0 / 3.0; 3], 1e-15));
    let p = softmax_probs(&[-4.0; 5]).unwrap();
    assert!(close(&p.probs, &[0.2; 5], 1e-15));
    assert_eq!(p.argmax(), 0);
}

#[test]
fn forest_of_identical_trees_matches_one_tree() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let x: Vec<Vec<f64>> = (0..60).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let y: Vec<usize> = x.iter().map(|r| usize::from(r[0] > 0.0) + usize::from(r[1] > 0.5)).collect();
    let params = ForestParams {
        trees: 1,
        min_leaf: 3,
        ..ForestParams::default()
    };
    let one = train_forest(&x, &y, 3, &params).unwrap();
    let many = ForestModel {
        trees: vec![one.trees[0].clone(); 25],
        ..one.clone()
    };
    for q in x.iter().take(20) {
        let a = one.probs(q).unwrap();
        let b = many.probs(q).unwrap();
        assert!(close(&a.probs, &b.probs, 1e-12));
        assert!(b.on_simplex());
        assert_eq!(Head::Forest(many.clone()).probs(q).unwrap().probs, b.probs);
    }
}

#[test]
fn dropout_keeps_the_expectation() {
    let layer: Layer<f64> = Layer::Dropout { rate: 0.5 };
    let x = Tensor::from_vec(&[8], vec![1.0, -2.0, 0.5, 3.0, 1.0, 1.0, -1.0, 4.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let masks = 10_000;
    let mut sums = [0.0; 8];
    let mut zeros = 0usize;
    for _ in 0..masks {
        let (y, _) = layer.forward(&x, Some(&mut rng)).unwrap();
        zeros += y.data.iter().filter(|v| **v == 0.0).count();
        for (s, v) in sums.iter_mut().zip(&y.data) {
            *s += v;
        }
    }
    let scaled: f64 = sums.iter().zip(&x.data).map(|(s, v)| s / masks as f64 / v).sum::<f64>() / 8.0;
    assert!((scaled - 1.0).abs() <= 0.02, "mean output / input = {scaled}");
    let drop_rate = zeros as f64 / (8 * masks) as f64;
    assert!((drop_rate - 0.5).abs() <= 0.02, "drop rate {drop_rate}");
    assert_eq!(layer.forward(&x, None).unwrap().0, x);
}

#[test]
fn random_heads_stay_on_the_simplex() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let scores: Vec<f64> = (0..3).map(|_| rng.random_range(-1e3..1e3)).collect();
        let p = softmax_probs(&scores).unwrap();
        assert!(on_simplex(&p.probs));
        assert_eq!(p.argmax(), argmax(&scores));
    }
    assert!(softmax_probs(&[1.0, f64::NAN]).is_err());
    assert!(softmax_probs(&[]).is_err());
}

#[test]
fn voting_averages_fragment_probabilities() {
    let frags: Vec<_> = [[0.6, 0.3, 0.1], [0.2, 0.7, 0.1], [0.5, 0.1, 0.4]]
        .iter()
        .map(|p| softmax_probs(&p.map(f64::ln)).unwrap())
        .collect();
    let v = vote_stream(&frags).unwrap();
    assert_eq!(v.fragment_count, 3);
    assert!(close(&v.mean_probs, &[1.3 / 3.0, 1.1 / 3.0, 0.6 / 3.0], 1e-12));
    assert_eq!(v.predicted_class, 0);
    assert!(vote_stream(&[]).is_err());
}
