//! Drives the reference material along the standard loading paths and prints
//! the stress at the turning points.

use tann::hyperplast::{integrate_path, loading_path, Material, MaterialState, PathKind, PathSpec};

fn main() -> tann::Result<()> {
    for (case, kind, d, amp) in [
        ("1D-1", PathKind::Cyclic, 1e-4, 2e-3),
        ("1D-2", PathKind::Cyclic, 1e-4, 2e-3),
        ("1D-3", PathKind::Cyclic, 1e-4, 2e-3),
        ("3D-1", PathKind::Uniaxial, 5e-5, 4e-3),
        ("3D-2", PathKind::Biaxial, 5e-5, 4e-3),
        ("3D-3", PathKind::Triaxial, 5e-5, 4e-3),
    ] {
        let m = Material::case(case)?;
        let spec = PathSpec::cyclic(kind, d, amp);
        let path = loading_path(&spec)?;
        let states = integrate_path(&m, &MaterialState::origin(&m), &path, 1.0)?;
        let n = path.len() / 4;
        print!("{case} {kind:<9}");
        for i in [n, 3 * n, 4 * n] {
            let s = &states[i];
            let sig: Vec<String> = s.sigma.iter().map(|v| format!("{:8.2}", v / 1e6)).collect();
            print!(" | step {i:>3}: σ = [{}] MPa", sig.join(","));
        }
        println!();
    }
    Ok(())
}
