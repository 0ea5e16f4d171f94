//! Decay-bound sweeps over viscosity and over a velocity mismatch.

use transport_spectra::analysis::{theorem1_check, theorem2_sweep, DEFAULT_DELTA};
use transport_spectra::roots::{RootOptions, SearchWindow};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let opts = RootOptions::default();

    let nominal = theorem1_check(&[0.02, 0.05, 0.1, 0.2], DEFAULT_DELTA, &SearchWindow::deadbeat(), &opts)?;
    let perturbed = theorem2_sweep(
        0.1,
        &[-0.05, -0.02, 0.0, 0.02, 0.05],
        DEFAULT_DELTA,
        &SearchWindow::perturbed(),
        &opts,
    )?;

    for sweep in [&nominal, &perturbed] {
        println!("{}", serde_json::to_string_pretty(sweep)?);
        println!("all satisfied: {}\n", sweep.all_satisfied());
    }
    nominal.write_csv(std::io::stdout())?;
    Ok(())
}
