//! Delay-robustness margins of a few boundary coupling matrices.

use transport_spectra::margin::{self, BoundaryMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (k1, k2) in [(0.0, 1.0), (1.0, 2.0), (-0.5, 0.25), (0.0, 0.0)] {
        let m = margin::margin_for_gains(k1, k2)?;
        println!(
            "k1 = {k1:>5}, k2 = {k2:>5}: closed form {:.6}, numeric {}",
            margin::rho2_closed_form(k1, k2),
            m.to_json()
        );
    }

    // the one-viscous-channel loop and a plain identity
    for k in [BoundaryMatrix::simpler(), BoundaryMatrix::identity(3)?, BoundaryMatrix::parse("0.5,0.2;-0.3,0.4")?] {
        println!("{:?} -> {}", k.entries(), margin::margin(&k)?.to_json());
    }
    Ok(())
}
