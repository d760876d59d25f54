//! Principal-stress TANN for the von Mises material 3D-1, recalled on the three
//! cyclic strain paths.

use tann::hyperplast::{generate_dataset, loading_path, GenConfig, Material, MaterialState, PathKind, PathSpec, Split};
use tann::netcore::TrainConfig;
use tann::tann::{self as tnn, consistency_check, TannArchitecture, TannModel};
use tann::trajectory::{stress_rmse, Trajectory};

fn main() -> tann::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6000);
    let m = Material::case("3D-1")?;
    let ds = generate_dataset(&m, &GenConfig::for_material(&m))?;
    let split = Split::new(ds.len(), 0);
    let (train, val) = (ds.subset(&split.train), ds.subset(&split.val));
    let mut model = TannModel::new(3, &TannArchitecture::default_for(3), 1.0, 0)?;
    let cfg = TrainConfig { learning_rate: 1e-3, batch_size: 10, max_epochs: epochs, patience: 1000, seed: 0 };
    let (hist, _) = tnn::train(&mut model, &train, &val, &cfg, None)?;
    println!("{} trainables, {} samples, {} epochs", model.trainable_count(), ds.len(), hist.epochs_run);
    let tol = 1e-3 * train.iter().map(|s| s.d_next).fold(0.0, f64::max);
    for kind in [PathKind::Uniaxial, PathKind::Biaxial, PathKind::Triaxial] {
        let path = loading_path(&PathSpec::cyclic(kind, 4e-5, 4e-3))?;
        let reference = Trajectory::reference(&m, &MaterialState::origin(&m), &path, 1.0)?;
        let traj = model.recall(&[0.0; 3], &[0.0; 3], &[0.0; 3], &path)?;
        let rmse: Vec<String> = (0..3).map(|c| format!("{:.2}", stress_rmse(&reference, &traj, c) / 1e6)).collect();
        let report = consistency_check(&traj, tol);
        println!("{kind:<9} stress RMSE [{}] MPa, min D {:.3e}, violations {}", rmse.join(", "), report.min_d, report.violations);
    }
    Ok(())
}
