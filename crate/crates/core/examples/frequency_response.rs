//! Gain and phase of one advection-diffusion channel against pure
//! transport, along the imaginary axis.

use num_complex::Complex64;
use transport_spectra::model::{f_transport, f_viscous, SystemParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>6} {:>12} {:>12} {:>12} {:>12} {:>12}", "omega", "|f| 0.02", "|f| 0.1", "|f| 1", "arg f 0.1", "arg e^-s");
    for k in 0..=12 {
        let omega = 2.5 * k as f64;
        let s = Complex64::new(0.0, omega);
        let mut gains = Vec::new();
        for eta in [0.02, 0.1, 1.0] {
            gains.push(f_viscous(s, &SystemParams::unit().eta(eta)?)?.to_complex());
        }
        println!(
            "{omega:>6.1} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
            gains[0].norm(),
            gains[1].norm(),
            gains[2].norm(),
            gains[1].arg(),
            f_transport(s, 1.0).arg()
        );
    }
    Ok(())
}
