mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tann::hyperplast::{generate_dataset, GenConfig, Material, Sample};
use tann::netcore::{Activation, Objective, TrainConfig};
use tann::tann::{consistency_check, LossWeights, TannArchitecture, TannModel, TannObjective};
use tann::Error;

fn random_sample(rng: &mut ChaCha8Rng, dim: usize) -> Sample {
    let mut v = |s: f64| -> Vec<f64> { (0..dim).map(|_| rng.random_range(-s..s)).collect() };
    Sample {
        eps_t: v(2e-3),
        d_eps: v(1e-3),
        sigma_t: v(2e8),
        zeta_t: v(1e-3),
        d_zeta: v(1e-4),
        d_sigma: v(1e7),
        f_next: rng.random_range(0.0..1e5),
        d_next: rng.random_range(0.0..1e4),
        on_yield: false,
        energy: None,
    }
}

fn randomized_model(dim: usize, seed: u64) -> TannModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arch = if dim == 1 {
        TannArchitecture::default_for(1)
    } else {
        TannArchitecture { zeta_hidden: vec![5, 4], f_hidden: vec![6], ..TannArchitecture::default_for(3) }
    };
    let arch = TannArchitecture { zeta_activation: Activation::EluZ2, ..arch };
    let mut m = TannModel::new(dim, &arch, 1.0, seed).unwrap();
    let set: Vec<Sample> = (0..50).map(|_| random_sample(&mut rng, dim)).collect();
    m.fit_normalization(&set);
    for net in [&mut m.snn_zeta, &mut m.snn_f] {
        let last = net.layers.len() - 1;
        for l in &mut net.layers[..last] {
            l.biases.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
        }
    }
    m
}

fn total(obj: &TannObjective, batch: &[Sample]) -> f64 {
    obj.total(&obj.term_errors(batch).unwrap())
}

#[test]
fn coupled_gradient_matches_finite_differences() {
    for (dim, seed) in [(1, 3u64), (1, 4), (3, 5)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let model = randomized_model(dim, seed);
        let batch: Vec<Sample> = (0..4).map(|_| random_sample(&mut rng, dim)).collect();
        let weights = LossWeights::from_targets(&batch);
        let obj = TannObjective { model, weights };
        let p0 = obj.params();
        let mut g = vec![0.0; p0.len()];
        let refs: Vec<&Sample> = batch.iter().collect();
        obj.accumulate_gradient(&refs, &mut g).unwrap();
        let mut probe = obj.clone();
        let mut worst = 0.0f64;
        let mut checked = 0;
        for i in 0..p0.len() {
            let h = 1e-6 * p0[i].abs().max(1e-2);
            let mut p = p0.clone();
            p[i] += h;
            probe.set_params(&p);
            let lp = total(&probe, &batch);
            p[i] -= 2.0 * h;
            probe.set_params(&p);
            let lm = total(&probe, &batch);
            let l0 = total(&obj, &batch);
            let (fwd, bwd) = ((lp - l0) / h, (l0 - lm) / h);
            // An absolute-error kink between the probes makes the difference meaningless.
            if (fwd - bwd).abs() > 1e-3 * (fwd.abs() + bwd.abs()) + 1e-12 {
                continue;
            }
            let fd = (lp - lm) / (2.0 * h);
            let scale = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
            worst = worst.max((fd - g[i]).abs() / (g[i].abs() + 1e-6 * scale));
            checked += 1;
        }
        assert!(checked * 4 >= p0.len() * 3, "only {checked} of {} checked", p0.len());
        assert!(worst < 1e-4, "dim {dim}: worst relative error {worst}");
    }
}

#[test]
fn zero_epoch_budget_leaves_model_unchanged() {
    let m = Material::case("1D-1").unwrap();
    let ds = generate_dataset(&m, &GenConfig { n_samples: 40, ..GenConfig::for_material(&m) }).unwrap();
    let model = TannModel::new(1, &TannArchitecture::default_for(1), 1.0, 9).unwrap();
    let mut trained = model.clone();
    let cfg = TrainConfig { max_epochs: 0, ..TrainConfig::default() };
    let (hist, _) = tann::tann::train(&mut trained, &ds.samples[..20], &ds.samples[20..], &cfg, None).unwrap();
    assert_eq!(trained, model);
    assert!(hist.rows.is_empty());
}

#[test]
fn one_negated_record_is_rejected() {
    let m = Material::case("1D-1").unwrap();
    let mut ds = generate_dataset(&m, &GenConfig { n_samples: 60, ..GenConfig::for_material(&m) }).unwrap();
    let i = ds.samples.iter().position(|s| s.d_next > 0.0).unwrap();
    ds.samples[i].d_next = -ds.samples[i].d_next;
    let mut model = TannModel::new(1, &TannArchitecture::default_for(1), 1.0, 0).unwrap();
    let err = tann::tann::train(&mut model, &ds.samples, &ds.samples[..5], &TrainConfig::default(), None)
        .unwrap_err();
    assert!(matches!(err, Error::InconsistentTrainingSet { index, .. } if index == i));
    assert!(err.to_string().contains("thermodynamically inconsistent training set"));
}

#[test]
fn short_training_is_reproducible() {
    let m = Material::case("1D-2").unwrap();
    let ds = generate_dataset(&m, &GenConfig { n_samples: 200, seed: 1, ..GenConfig::for_material(&m) }).unwrap();
    let cfg = TrainConfig { max_epochs: 5, learning_rate: 1e-3, ..TrainConfig::default() };
    let run = || {
        let mut model = TannModel::new(1, &TannArchitecture::default_for(1), 1.0, 2).unwrap();
        let (h, _) = tann::tann::train(&mut model, &ds.samples[..100], &ds.samples[100..], &cfg, None).unwrap();
        (model, h)
    };
    let (a, ha) = run();
    let (b, hb) = run();
    assert_eq!(a, b);
    assert_eq!(ha, hb);
    assert_eq!(ha.series("train", "total").len(), 5);
}

#[test]
fn recall_bookkeeping() {
    let model = randomized_model(1, 8);
    let path: Vec<Vec<f64>> = (0..25).map(|i| vec![if i < 12 { 1e-4 } else { -1e-4 }]).collect();
    let traj = model.recall(&[0.0], &[0.0], &[0.0], &path).unwrap();
    assert_eq!(traj.len(), 26);
    let mut eps = 0.0;
    for d in &path {
        eps += d[0];
    }
    assert_eq!(traj.points.last().unwrap().eps[0], eps);
    let again = model.recall(&[0.0], &[0.0], &[0.0], &path).unwrap();
    assert_eq!(traj, again);
    let report = consistency_check(&traj, 1.0);
    assert_eq!(report.steps, 25);
    assert!(report.max_sigma_route_gap <= 1e-9 * 200e6);
}

#[test]
fn zero_path_with_zero_flow_is_constant() {
    let mut model = randomized_model(1, 2);
    for l in &mut model.snn_zeta.layers {
        l.weights.iter_mut().for_each(|w| *w = 0.0);
    }
    model.snn_zeta.output_norm.shift = vec![0.0];
    let sigma0 = model.snn_f.input_jacobian(&[1e-3, 0.0]).unwrap()[0];
    let traj = model.recall(&[1e-3], &[sigma0], &[0.0], &vec![vec![0.0]; 10]).unwrap();
    for p in &traj.points[1..] {
        assert_eq!(p.sigma[0], sigma0);
        assert_eq!(p.zeta[0], 0.0);
        assert_eq!(p.d, 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stress_matches_energy_differences(seed in 0u64..1000, e in -3e-3f64..3e-3, de in -1e-3f64..1e-3, z in -1e-3f64..1e-3) {
        let model = randomized_model(1, seed);
        let out = model.forward(&[e], &[de], &[1e8], &[z]).unwrap();
        let zn = z + out.d_zeta[0];
        let en = e + de;
        let h = 1e-7 * en.abs().max(1e-3);
        let fp = model.snn_f.forward(&[en + h, zn]).unwrap()[0];
        let fm = model.snn_f.forward(&[en - h, zn]).unwrap()[0];
        let fd = (fp - fm) / (2.0 * h);
        prop_assert!((fd - out.sigma_next[0]).abs() <= 1e-5 * out.sigma_next[0].abs() + 1e-6 * 1e8);
    }
}
