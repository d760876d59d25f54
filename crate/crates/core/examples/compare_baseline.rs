//! TANN against a thermodynamics-agnostic ANN with the same parameter count,
//! over strain increments from 1e-5 to 1.

use tann::baseline::{self, BaselineArchitecture, BaselineModel};
use tann::experiment::compare_models;
use tann::hyperplast::{generate_dataset, GenConfig, Material, PathKind, Split};
use tann::netcore::TrainConfig;
use tann::tann::{self as tnn, TannArchitecture, TannModel};

fn main() -> tann::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let m = Material::case("1D-1")?;
    let ds = generate_dataset(&m, &GenConfig::for_material(&m))?;
    let split = Split::new(ds.len(), 0);
    let (train, val) = (ds.subset(&split.train), ds.subset(&split.val));
    let cfg = TrainConfig { learning_rate: 1e-3, batch_size: 10, max_epochs: epochs, patience: 5000, seed: 0 };

    let mut t = TannModel::new(1, &TannArchitecture::default_for(1), 1.0, 0)?;
    tnn::train(&mut t, &train, &val, &cfg, None)?;
    let mut a = BaselineModel::new(1, &BaselineArchitecture::default_for(1), 1.0, 0)?;
    baseline::train(&mut a, &train, &val, &cfg)?;

    let tol = 1e-3 * train.iter().map(|s| s.d_next).fold(0.0, f64::max);
    let grid = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0];
    let (rows, _) = compare_models(&m, &t, &a, &grid, PathKind::Uniaxial, tol)?;
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "Δε", "RMSE tann", "RMSE ann", "min D tann", "min D ann");
    for r in rows {
        println!(
            "{:>6.0e} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e}",
            r.d_eps, r.tann_sigma_rmse, r.ann_sigma_rmse, r.tann_min_d, r.ann_min_d
        );
    }
    Ok(())
}
