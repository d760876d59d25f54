//! Trains the x² / 2x network once per activation and prints the test errors.
//!
//! Run with `cargo run --release --example activation_study [epochs]`.

use tann::experiment::{run_study, StudyConfig};

fn main() -> tann::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let cfg = StudyConfig { batch_size: 1, max_epochs: epochs, patience: 500, ..StudyConfig::default() };
    println!("{:<16} {:>11} {:>11} {:>11} {:>7}", "activation", "L", "L_O", "L_grad", "epochs");
    for r in run_study(&cfg, 4)? {
        println!(
            "{:<16} {:>11.3e} {:>11.3e} {:>11.3e} {:>7}",
            r.activation.to_string(),
            r.loss,
            r.loss_o,
            r.loss_grad,
            r.epochs
        );
    }
    Ok(())
}
