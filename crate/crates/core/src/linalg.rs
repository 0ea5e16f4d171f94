//! Dense linear algebra for the tiny matrices (n ≤ 8) used by the margin
//! computations. Matrices are row-major slices of length `n²`.

use num_complex::Complex64;

use crate::poly::polynomial_roots;

const JACOBI_SWEEPS: usize = 64;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    for _ in 0..JACOBI_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        let diag: f64 = (0..n).map(|i| m[i * n + i] * m[i * n + i]).sum();
        if off <= 1e-32 * diag || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// `AᵀA` for a real square matrix.
pub fn gram(a: &[f64], n: usize) -> Vec<f64> {
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v: f64 = (0..n).map(|k| a[k * n + i] * a[k * n + j]).sum();
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
    }
    g
}

/// Largest singular value.
pub fn spectral_norm(a: &[f64], n: usize) -> f64 {
    let eig = symmetric_eigenvalues(&gram(a, n), n);
    eig.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Characteristic polynomial `det(λI - A)` by Faddeev–LeVerrier, ascending
/// coefficients, monic.
pub fn char_poly(a: &[Complex64], n: usize) -> Vec<Complex64> {
    assert_eq!(a.len(), n * n);
    let zero = Complex64::new(0.0, 0.0);
    let mut coeffs = vec![zero; n + 1];
    coeffs[n] = Complex64::new(1.0, 0.0);
    // M_k = A M_{k-1} + c_{n-k+1} I, c_{n-k} = -tr(A M_k)/k
    let mut mk = vec![zero; n * n];
    let mut am = vec![zero; n * n];
    for k in 1..=n {
        for i in 0..n {
            mk[i * n + i] += coeffs[n - k + 1];
        }
        for i in 0..n {
            for j in 0..n {
                am[i * n + j] = (0..n).map(|l| a[i * n + l] * mk[l * n + j]).sum();
            }
        }
        let trace: Complex64 = (0..n).map(|i| am[i * n + i]).sum();
        coeffs[n - k] = -trace / k as f64;
        mk.copy_from_slice(&am);
    }
    coeffs
}

/// Eigenvalues of a general complex matrix by shifted QR on its Hessenberg
/// form. Unlike the characteristic polynomial route this stays accurate for
/// repeated eigenvalues of normal matrices. Falls back to the polynomial
/// when QR fails to deflate.
pub fn eigenvalues(a: &[Complex64], n: usize) -> Vec<Complex64> {
    match n {
        0 => Vec::new(),
        1 => vec![a[0]],
        _ => hessenberg_qr(a, n).unwrap_or_else(|| polynomial_roots(&char_poly(a, n))),
    }
}

fn hessenberg_reduce(h: &mut [Complex64], n: usize) {
    let zero = Complex64::new(0.0, 0.0);
    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| h[i * n + k]).collect();
        let alpha = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        let phase = if v[0].norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            v[0] / v[0].norm()
        };
        v[0] += phase * alpha;
        let vn2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vn2 == 0.0 {
            continue;
        }
        for j in 0..n {
            let s: Complex64 = v.iter().enumerate().map(|(i, vi)| vi.conj() * h[(k + 1 + i) * n + j]).sum();
            let f = s * (2.0 / vn2);
            for (i, vi) in v.iter().enumerate() {
                h[(k + 1 + i) * n + j] -= f * vi;
            }
        }
        for i in 0..n {
            let s: Complex64 = v.iter().enumerate().map(|(j, vj)| h[i * n + k + 1 + j] * vj).sum();
            let f = s * (2.0 / vn2);
            for (j, vj) in v.iter().enumerate() {
                h[i * n + k + 1 + j] -= f * vj.conj();
            }
        }
        for i in k + 2..n {
            h[i * n + k] = zero;
        }
    }
}

fn hessenberg_qr(a: &[Complex64], n: usize) -> Option<Vec<Complex64>> {
    let mut h = a.to_vec();
    hessenberg_reduce(&mut h, n);
    let at = |h: &[Complex64], i: usize, j: usize| h[i * n + j];
    let mut eig = vec![Complex64::new(0.0, 0.0); n];
    let mut hi = n - 1;
    let mut iter = 0;
    loop {
        if hi == 0 {
            eig[0] = at(&h, 0, 0);
            break;
        }
        let mut lo = hi;
        while lo > 0 {
            let scale = at(&h, lo, lo).norm() + at(&h, lo - 1, lo - 1).norm();
            let scale = if scale == 0.0 { 1.0 } else { scale };
            if at(&h, lo, lo - 1).norm() <= f64::EPSILON * scale {
                h[lo * n + lo - 1] = Complex64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = at(&h, hi, hi);
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > 60 * n {
            return None;
        }
        let (p, q, r, d) = (
            at(&h, hi - 1, hi - 1),
            at(&h, hi - 1, hi),
            at(&h, hi, hi - 1),
            at(&h, hi, hi),
        );
        let mu = if iter % 10 == 0 {
            // exceptional shift breaks cycles such as permutation matrices
            d + Complex64::new(0.75 * r.norm(), 0.35 * r.norm())
        } else {
            let half = 0.5 * (p - d);
            let root = (half * half + q * r).sqrt();
            let m1 = d - q * r / (half + root);
            let m2 = d - q * r / (half - root);
            let pick = |m: Complex64| if m.is_finite() { (m - d).norm() } else { f64::INFINITY };
            if pick(m1) <= pick(m2) && m1.is_finite() {
                m1
            } else if m2.is_finite() {
                m2
            } else {
                d
            }
        };
        for k in lo..=hi {
            h[k * n + k] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let x = at(&h, k, k);
            let y = at(&h, k + 1, k);
            let rr = x.norm().hypot(y.norm());
            let (c, s) = if rr == 0.0 {
                (1.0, Complex64::new(0.0, 0.0))
            } else if x.norm() == 0.0 {
                (0.0, Complex64::new(1.0, 0.0))
            } else {
                (x.norm() / rr, (x / x.norm()) * y.conj() / rr)
            };
            for j in k..=hi {
                let (u, v) = (at(&h, k, j), at(&h, k + 1, j));
                h[k * n + j] = u * c + s * v;
                h[(k + 1) * n + j] = -s.conj() * u + v * c;
            }
            rots.push((c, s));
        }
        for (idx, (c, s)) in rots.into_iter().enumerate() {
            let k = lo + idx;
            for i in lo..=(k + 2).min(hi) {
                let (u, v) = (at(&h, i, k), at(&h, i, k + 1));
                h[i * n + k] = u * c + v * s.conj();
                h[i * n + k + 1] = -u * s + v * c;
            }
        }
        for k in lo..=hi {
            h[k * n + k] += mu;
        }
    }
    Some(eig)
}

pub fn spectral_radius(a: &[Complex64], n: usize) -> f64 {
    eigenvalues(a, n).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn jacobi_diagonal_and_2x2() {
        assert_eq!(symmetric_eigenvalues(&[3.0, 0.0, 0.0, -1.0], 2), vec![-1.0, 3.0]);
        let e = symmetric_eigenvalues(&[2.0, 1.0, 1.0, 2.0], 2);
        assert!((e[0] - 1.0).abs() < 1e-15 && (e[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn jacobi_preserves_trace_and_frobenius() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..=8 {
            let mut a = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let v = rng.gen_range(-3.0..3.0);
                    a[i * n + j] = v;
                    a[j * n + i] = v;
                }
            }
            let e = symmetric_eigenvalues(&a, n);
            let tr: f64 = (0..n).map(|i| a[i * n + i]).sum();
            let fro: f64 = a.iter().map(|x| x * x).sum();
            assert!((e.iter().sum::<f64>() - tr).abs() < 1e-12);
            assert!((e.iter().map(|x| x * x).sum::<f64>() - fro).abs() < 1e-10);
        }
    }

    #[test]
    fn spectral_norm_of_rank_one() {
        // u vᵀ has norm |u||v|
        let u = [1.0, 2.0, 2.0];
        let v = [3.0, 0.0, 4.0];
        let a: Vec<f64> = (0..9).map(|k| u[k / 3] * v[k % 3]).collect();
        assert!((spectral_norm(&a, 3) - 15.0).abs() < 1e-12);
    }

    #[test]
    fn char_poly_matches_eigenvalues() {
        let c = |x: f64| Complex64::new(x, 0.0);
        // upper triangular with diagonal 1, 2, 3
        let a = [c(1.0), c(5.0), c(-2.0), c(0.0), c(2.0), c(7.0), c(0.0), c(0.0), c(3.0)];
        let p = char_poly(&a, 3);
        let expect = [c(-6.0), c(11.0), c(-6.0), c(1.0)];
        for (x, y) in p.iter().zip(expect) {
            assert!((x - y).norm() < 1e-12);
        }
        assert!((spectral_radius(&a, 3) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn repeated_unimodular_eigenvalues_are_exact() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let mut a = vec![c(0.0); 9];
        for i in 0..3 {
            a[i * 3 + i] = c(1.0);
        }
        assert!((spectral_radius(&a, 3) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn qr_matches_polynomial_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=8 {
            for _ in 0..20 {
                let a: Vec<Complex64> = (0..n * n)
                    .map(|_| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
                    .collect();
                let ev = hessenberg_qr(&a, n).expect("QR converges");
                let p = char_poly(&a, n);
                for z in ev {
                    let (v, _) = crate::poly::eval_with_derivative(&p, z);
                    let scale: f64 = p.iter().enumerate().map(|(k, c)| c.norm() * z.norm().powi(k as i32)).sum();
                    assert!(v.norm() < 1e-9 * scale, "n={n} {z}");
                }
            }
        }
    }

    #[test]
    fn qr_handles_cyclic_permutations() {
        for n in 2..=8 {
            for th in [0.0, 0.3, 1.0] {
                let mut a = vec![Complex64::new(0.0, 0.0); n * n];
                for i in 0..n {
                    a[i * n + (i + 1) % n] = Complex64::from_polar(2.0, -th * i as f64);
                }
                let ev = hessenberg_qr(&a, n).expect("QR converges");
                for z in ev {
                    assert!((z.norm() - 2.0).abs() < 1e-12, "n={n} th={th} {z}");
                }
            }
        }
    }

    #[test]
    fn rotation_spectral_radius() {
        let (s, co) = 0.3f64.sin_cos();
        let a: Vec<Complex64> = [co, -s, s, co].iter().map(|&x| Complex64::new(2.0 * x, 0.0)).collect();
        assert!((spectral_radius(&a, 2) - 2.0).abs() < 1e-14);
    }
}
