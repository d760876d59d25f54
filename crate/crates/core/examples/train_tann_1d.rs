//! Trains the 72-parameter TANN on case 1D-1 and recalls a strain cycle.
//!
//! Run with `cargo run --release --example train_tann_1d [epochs]`.

use tann::hyperplast::{generate_dataset, loading_path, GenConfig, Material, MaterialState, PathKind, PathSpec, Split};
use tann::netcore::TrainConfig;
use tann::tann::{self as tnn, consistency_check, TannArchitecture, TannModel, TERM_NAMES};
use tann::trajectory::{stress_rmse, Trajectory};

fn main() -> tann::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let m = Material::case("1D-1")?;
    let ds = generate_dataset(&m, &GenConfig::for_material(&m))?;
    let split = Split::new(ds.len(), 0);
    let (train, val, test) = (ds.subset(&split.train), ds.subset(&split.val), ds.subset(&split.test));

    let mut model = TannModel::new(1, &TannArchitecture::default_for(1), 1.0, 0)?;
    let cfg = TrainConfig { learning_rate: 1e-3, batch_size: 10, max_epochs: epochs, patience: 5000, seed: 0 };
    let (hist, weights) = tnn::train(&mut model, &train, &val, &cfg, None)?;
    println!("{} trainables, {} epochs, best {}", model.trainable_count(), hist.epochs_run, hist.best_epoch);
    for (name, mae) in TERM_NAMES.iter().zip(tnn::evaluate(&model, &test, weights)?) {
        println!("  test MAE {name:<8} {mae:.3e}");
    }

    let path = loading_path(&PathSpec::cyclic(PathKind::Cyclic, 1e-4, 2e-3))?;
    let reference = Trajectory::reference(&m, &MaterialState::origin(&m), &path, 1.0)?;
    let traj = model.recall(&[0.0], &[0.0], &[0.0], &path)?;
    let report = consistency_check(&traj, 1e-3 * train.iter().map(|s| s.d_next).fold(0.0, f64::max));
    println!(
        "cyclic recall: stress RMSE {:.3} MPa, min D {:.3e}, {} violations",
        stress_rmse(&reference, &traj, 0) / 1e6,
        report.min_d,
        report.violations
    );
    for (i, (r, p)) in reference.points.iter().zip(&traj.points).enumerate().step_by(10) {
        println!("  {i:>3} ε={:+.1e} σ_ref={:+8.2} σ_tann={:+8.2} MPa D={:.2e}", p.eps[0], r.sigma[0] / 1e6, p.sigma[0] / 1e6, p.d);
    }
    Ok(())
}
