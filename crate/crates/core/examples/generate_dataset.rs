//! Samples a 1D-1 dataset, checks its dissipation targets and writes it as CSV.

use tann::hyperplast::{generate_dataset, GenConfig, Material, Split};

fn main() -> tann::Result<()> {
    let m = Material::case("1D-1")?;
    let ds = generate_dataset(&m, &GenConfig::for_material(&m))?;
    let split = Split::new(ds.len(), 0);
    let d_max = ds.samples.iter().map(|s| s.d_next).fold(0.0, f64::max);
    println!(
        "{} samples ({} / {} / {}), on-yield fraction {:.3}, D_next in [0, {:.3e}] W/m³",
        ds.len(),
        split.train.len(),
        split.val.len(),
        split.test.len(),
        ds.on_yield_fraction(),
        d_max
    );
    let out = std::env::temp_dir().join("tann_1d1_dataset.csv");
    ds.save_csv(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}
