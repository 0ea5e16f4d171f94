//! Zeros of the dead-beat viscous loop in a rectangle, with the rightmost one.
//!
//!     cargo run --example spectrum -- 0.1

use transport_spectra::charfun::{CharFn, Variant};
use transport_spectra::model::SystemParams;
use transport_spectra::roots::{find_roots, RootOptions, SearchWindow};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let eta: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.1);
    let params = SystemParams::unit().eta(eta)?;
    let f = CharFn::new(Variant::DeadbeatViscous, params)?;
    let spec = find_roots(&f, &SearchWindow::deadbeat(), &RootOptions::default())?;

    println!("{:>22} {:>22} {:>4} {:>10}", "re", "im", "mult", "residual");
    for r in &spec.roots {
        println!("{:>22.15} {:>22.15} {:>4} {:>10.1e}", r.s.re, r.s.im, r.multiplicity, r.residual);
    }
    println!("sigma_hat = {:.12} ({} zeros)", spec.abscissa().sigma(), spec.roots.len());
    Ok(())
}
