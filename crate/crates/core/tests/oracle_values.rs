//! Rightmost zeros frozen from an independent high-precision solver
//! (`tools/oracle.py`: grid minima of the meromorphic form, refined with
//! mpmath at 30 digits).

use transport_spectra::charfun::{CharFn, Variant};
use transport_spectra::model::SystemParams;
use transport_spectra::poly::real_polynomial_roots;
use transport_spectra::roots::{find_roots, RootOptions, SearchWindow};

const TOL: f64 = 1e-9;

fn rightmost(variant: Variant, p: SystemParams, w: &SearchWindow) -> f64 {
    let f = CharFn::new(variant, p).unwrap();
    find_roots(&f, w, &RootOptions::default()).unwrap().abscissa().sigma()
}

#[test]
fn deadbeat_viscous_abscissae() {
    let cases = [
        (0.02, -0.733_659_392_561_493_9),
        (0.05, -0.694_911_155_792_249_8),
        (0.1, -0.818_804_440_530_325_3),
        (0.2, -0.711_161_775_229_304),
    ];
    for (eta, want) in cases {
        let p = SystemParams::unit().eta(eta).unwrap();
        let got = rightmost(Variant::DeadbeatViscous, p, &SearchWindow::deadbeat());
        assert!((got - want).abs() < TOL, "eta {eta}: {got} vs {want}");
    }
}

#[test]
fn perturbed_viscous_abscissae() {
    let cases = [
        (-0.05, -0.808_166_205_844_462),
        (-0.02, -0.828_688_208_454_140_8),
        (0.02, -0.793_628_603_305_475_2),
        (0.05, -0.755_563_472_234_245_7),
    ];
    for (eps, want) in cases {
        let p = SystemParams::unit().eta(0.1).unwrap().eps(eps).unwrap();
        let got = rightmost(Variant::DeadbeatViscousPerturbed, p, &SearchWindow::perturbed());
        assert!((got - want).abs() < TOL, "eps {eps}: {got} vs {want}");
    }
}

#[test]
fn simpler_loop_abscissae() {
    let cases = [
        (0.02, 0.018_543_425_783_120_21),
        (0.05, 0.054_808_796_390_556_636),
        (0.1, 0.071_960_879_383_105_33),
    ];
    for (eta, want) in cases {
        let p = SystemParams::unit().eta(eta).unwrap();
        let got = rightmost(Variant::SimplerSystem, p, &SearchWindow::simpler());
        assert!((got - want).abs() < TOL, "eta {eta}: {got} vs {want}");
    }
}

#[test]
fn inviscid_perturbed_trinomial() {
    let mut c = vec![0.0; 43];
    c[0] = -1.0;
    c[40] = 1.0;
    c[42] = -1.0;
    let qmin = real_polynomial_roots(&c).iter().map(|q| q.norm()).fold(f64::INFINITY, f64::min);
    assert!((qmin - 0.983_232_647_826_006_3).abs() < 1e-12);
    let p = SystemParams::unit().eps(0.1).unwrap();
    let got = rightmost(Variant::DeadbeatInviscidPerturbed, p, &SearchWindow::perturbed());
    assert!((got - 0.372_009_343_203_381_4).abs() < TOL, "{got}");
}
