mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tann::netcore::*;

use common::{fd_jacobian, fd_param_gradient, random_net, relative_error, smooth_at};

#[test]
fn activation_derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut kinds = Activation::STUDY_SET.to_vec();
    kinds.push(Activation::leaky_relu());
    kinds.push(Activation::Linear);
    for kind in kinds {
        for _ in 0..1000 {
            let mut z: f64 = rng.random_range(-3.0..3.0);
            if z.abs() <= 0.01 {
                z = 0.5;
            }
            let h = 1e-6 * z.abs().max(1.0);
            let (p, m) = (kind.eval(z + h), kind.eval(z - h));
            let v = kind.eval(z);
            let fd1 = (p.a - m.a) / (2.0 * h);
            let fd2 = (p.da - m.da) / (2.0 * h);
            assert!(
                relative_error(v.da, fd1) < 1e-6,
                "{kind} A' at {z}: {} vs {fd1}",
                v.da
            );
            assert!(
                relative_error(v.d2a, fd2) < 1e-6,
                "{kind} A'' at {z}: {} vs {fd2}",
                v.d2a
            );
        }
    }
}

#[test]
fn jacobian_matches_finite_differences_with_normalization() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    while checked < 50 {
        let net = random_net(&mut rng, 3, &[5, 4], Activation::EluZ2, 2, true);
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        if !smooth_at(&net, &x) {
            continue;
        }
        let jac = net.input_jacobian(&x).unwrap();
        let fd = fd_jacobian(&net, &x, 1e-5);
        for (a, b) in jac.iter().zip(&fd) {
            assert!(relative_error(*a, *b) < 1e-5, "{a} vs {b}");
        }
        checked += 1;
    }
}

#[test]
fn composite_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let spec = LossSpec::new(vec![
        LossTerm {
            name: "out".into(),
            selectors: vec![Selector::Output(0), Selector::Output(1)],
            weight: 0.7,
        },
        LossTerm {
            name: "grad".into(),
            selectors: vec![
                Selector::Jacobian { output: 0, input: 1 },
                Selector::Jacobian { output: 1, input: 0 },
            ],
            weight: 1.3,
        },
    ]);
    let mut checked = 0;
    while checked < 20 {
        let net = random_net(&mut rng, 2, &[3], Activation::EluZ2, 2, false);
        let batch: Vec<Example> = (0..4)
            .map(|_| Example {
                input: (0..2).map(|_| rng.random_range(-1.5..1.5)).collect(),
                targets: (0..4).map(|_| rng.random_range(-1.0..1.0)).collect(),
            })
            .collect();
        if !batch.iter().all(|e| smooth_at(&net, &e.input)) {
            continue;
        }
        let refs: Vec<&Example> = batch.iter().collect();
        let g = param_gradients(&net, &refs, &spec).unwrap();
        let fd = fd_param_gradient(&net, &batch, &spec, 1e-6);
        for (a, b) in g.iter().zip(&fd) {
            assert!(relative_error(*a, *b) < 1e-4, "{a} vs {b}");
        }
        checked += 1;
    }
}

#[test]
fn trainable_output_bias_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut net = random_net(&mut rng, 2, &[4], Activation::EluZ2, 1, false);
    net.train_output_bias = true;
    net.layers[1].biases[0] = 0.05;
    let spec = LossSpec::new(vec![LossTerm {
        name: "y".into(),
        selectors: vec![Selector::Output(0)],
        weight: 1.0,
    }]);
    let batch: Vec<Example> = (0..6)
        .map(|i| Example {
            input: vec![0.1 * i as f64, -0.2],
            targets: vec![if i % 2 == 0 { 10.0 } else { -10.0 }],
        })
        .collect();
    let refs: Vec<&Example> = batch.iter().collect();
    let g = param_gradients(&net, &refs, &spec).unwrap();
    let expected: f64 = batch
        .iter()
        .map(|e| mae_sign(net.forward(&e.input).unwrap()[0] - e.targets[0]))
        .sum::<f64>()
        / batch.len() as f64;
    assert_eq!(*g.last().unwrap(), expected);
}

#[test]
fn evaluation_is_pure() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let net = random_net(&mut rng, 4, &[7, 3], Activation::EluZ4HalfZ2Z, 2, true);
    let x = [0.3, -0.1, 2.0, 0.0];
    assert_eq!(net.forward(&x).unwrap(), net.forward(&x).unwrap());
    assert_eq!(net.input_jacobian(&x).unwrap(), net.input_jacobian(&x).unwrap());
}

#[test]
fn model_file_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let net = random_net(&mut rng, 3, &[4], Activation::leaky_relu(), 2, true);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.json");
    net.save(&path).unwrap();
    assert_eq!(Network::load(&path).unwrap(), net);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["layers"][0]["activation"], "leaky_relu(0.01)");
    assert_eq!(doc["layers"][0]["rows"], 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jacobian_of_random_nets(seed in 0u64..10_000, x0 in -2.0f64..2.0, x1 in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_net(&mut rng, 2, &[4], Activation::EluZ2, 1, true);
        let x = [x0, x1];
        prop_assume!(smooth_at(&net, &x));
        let jac = net.input_jacobian(&x).unwrap();
        let fd = fd_jacobian(&net, &x, 1e-5);
        for (a, b) in jac.iter().zip(&fd) {
            prop_assert!(relative_error(*a, *b) < 1e-5);
        }
    }

    #[test]
    fn zero_gradient_never_moves_parameters(n in 1usize..50, lr in 1e-6f64..1.0) {
        let mut opt = Nadam::new(n, lr);
        let mut p: Vec<f64> = (0..n).map(|i| i as f64 - 3.0).collect();
        let before = p.clone();
        for _ in 0..5 {
            opt.step(&mut p, &vec![0.0; n]).unwrap();
        }
        prop_assert_eq!(p, before);
    }
}
