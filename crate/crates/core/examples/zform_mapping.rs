//! Every zero s of the dead-beat viscous loop maps to a zero of the
//! z-form under z = √(1 + 4ηs).

use num_complex::Complex64;
use transport_spectra::charfun::{char_zform, CharFn, Variant};
use transport_spectra::model::SystemParams;
use transport_spectra::roots::{find_roots, RootOptions, SearchWindow};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let eta = 0.05;
    let params = SystemParams::unit().eta(eta)?;
    let f = CharFn::new(Variant::DeadbeatViscous, params)?;
    let spec = find_roots(&f, &SearchWindow::new(-4.0, 0.5, -30.0, 30.0)?, &RootOptions::default())?;

    for r in &spec.roots {
        let z: Complex64 = (1.0 + 4.0 * eta * r.s).sqrt();
        let residual = CharFn::new(Variant::ZForm, params)?.eval(z).relative();
        println!(
            "s = {:>26.12}  z = {:>26.12}  |Z(z)| = {:.2e}  rel = {residual:.1e}",
            r.s,
            z,
            char_zform(z, eta)?.to_complex().norm()
        );
    }
    Ok(())
}
