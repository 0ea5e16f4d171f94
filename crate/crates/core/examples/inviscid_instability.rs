//! Without viscosity a small velocity error destabilises dead-beat control.
//! At ε = 0.1 the loop delays are 10/11 and 1, so with q = e^{−s/22} the
//! characteristic function becomes the trinomial q⁴⁰ − q⁴² − 1.

use transport_spectra::charfun::{CharFn, Variant};
use transport_spectra::model::SystemParams;
use transport_spectra::poly::real_polynomial_roots;
use transport_spectra::roots::{find_roots, RootOptions, SearchWindow};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut coeffs = vec![0.0; 43];
    coeffs[0] = -1.0;
    coeffs[40] = 1.0;
    coeffs[42] = -1.0;
    let qmin = real_polynomial_roots(&coeffs)
        .iter()
        .map(|q| q.norm())
        .fold(f64::INFINITY, f64::min);
    println!("min |q| = {qmin:.12}, so sigma = {:.12}", -22.0 * qmin.ln());

    // the unstable zeros climb the imaginary axis as ε shrinks
    let window = SearchWindow::new(-1.0, 1.0, -400.0, 400.0)?;
    for eps in [0.02, 0.05, 0.1] {
        let f = CharFn::new(Variant::DeadbeatInviscidPerturbed, SystemParams::unit().eps(eps)?)?;
        let spec = find_roots(&f, &window, &RootOptions::default())?;
        println!("eps = {eps}: sigma_hat = {:.12}", spec.abscissa().sigma());
    }
    Ok(())
}
