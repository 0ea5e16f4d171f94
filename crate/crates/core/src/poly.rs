//! Simultaneous polynomial root finding (Aberth–Ehrlich).

use num_complex::Complex64;

const MAX_ITER: usize = 500;

/// All roots of `Σ coeffs[k] zᵏ` (ascending order), with multiplicity.
///
/// Leading zero coefficients are dropped; exact zero roots are split off
/// before iterating. Returns an empty vector for constants.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut hi = coeffs.len();
    while hi > 0 && coeffs[hi - 1] == Complex64::new(0.0, 0.0) {
        hi -= 1;
    }
    let mut lo = 0;
    while lo < hi && coeffs[lo] == Complex64::new(0.0, 0.0) {
        lo += 1;
    }
    let mut roots = vec![Complex64::new(0.0, 0.0); lo];
    if hi == 0 {
        return roots;
    }
    let p: Vec<Complex64> = coeffs[lo..hi].to_vec();
    let degree = p.len() - 1;
    if degree == 0 {
        return roots;
    }
    if degree == 1 {
        roots.push(-p[0] / p[1]);
        return roots;
    }
    if degree == 2 {
        let (a, b, c) = (p[2], p[1], p[0]);
        let disc = (b * b - 4.0 * a * c).sqrt();
        // choose the sign that avoids cancellation
        let q = if (b.conj() * disc).re >= 0.0 {
            -0.5 * (b + disc)
        } else {
            -0.5 * (b - disc)
        };
        if q.norm() == 0.0 {
            roots.extend([Complex64::new(0.0, 0.0); 2]);
        } else {
            roots.push(q / a);
            roots.push(c / q);
        }
        return roots;
    }
    roots.extend(aberth(&p));
    roots
}

/// Real-coefficient convenience wrapper.
pub fn real_polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let c: Vec<Complex64> = coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    polynomial_roots(&c)
}

/// `p(z)` and `p'(z)` by Horner's rule.
pub fn eval_with_derivative(p: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::new(0.0, 0.0);
    let mut d = Complex64::new(0.0, 0.0);
    for &c in p.iter().rev() {
        d = d * z + v;
        v = v * z + c;
    }
    (v, d)
}

fn aberth(p: &[Complex64]) -> Vec<Complex64> {
    let n = p.len() - 1;
    // initial guesses on a circle whose radius is the geometric mean of the
    // root moduli, rotated off the real axis to break symmetry
    let radius = (p[0].norm() / p[n].norm()).powf(1.0 / n as f64).max(f64::MIN_POSITIVE);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let angle = std::f64::consts::TAU * k as f64 / n as f64 + 0.4;
            Complex64::from_polar(radius, angle)
        })
        .collect();
    let mut done = vec![false; n];
    for _ in 0..MAX_ITER {
        let mut all_done = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (v, d) = eval_with_derivative(p, z[i]);
            if v.norm() == 0.0 {
                done[i] = true;
                continue;
            }
            let ratio = v / d;
            let mut repulsion = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    let diff = z[i] - z[j];
                    if diff.norm() > 0.0 {
                        repulsion += 1.0 / diff;
                    }
                }
            }
            let step = ratio / (1.0 - ratio * repulsion);
            let step = if step.is_finite() { step } else { ratio };
            z[i] -= step;
            if step.norm() <= 4.0 * f64::EPSILON * z[i].norm().max(f64::MIN_POSITIVE) {
                done[i] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            break;
        }
    }
    // a couple of plain Newton steps to clean up the last ulp
    for zi in z.iter_mut() {
        for _ in 0..2 {
            let (v, d) = eval_with_derivative(p, *zi);
            if d.norm() == 0.0 {
                break;
            }
            let step = v / d;
            if !step.is_finite() || step.norm() > 1e-8 * zi.norm().max(1e-300) {
                break;
            }
            *zi -= step;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn low_degree() {
        assert!(polynomial_roots(&[c(3.0, 0.0)]).is_empty());
        let r = real_polynomial_roots(&[-2.0, 1.0]);
        assert_eq!(r, vec![c(2.0, 0.0)]);
        let r = sorted(real_polynomial_roots(&[1.0, 0.0, 1.0]));
        assert!((r[0] - c(0.0, -1.0)).norm() < 1e-15 && (r[1] - c(0.0, 1.0)).norm() < 1e-15);
        let r = sorted(real_polynomial_roots(&[0.0, 0.0, 1.0]));
        assert_eq!(r, vec![c(0.0, 0.0); 2]);
    }

    #[test]
    fn zero_roots_are_split_off() {
        let r = sorted(real_polynomial_roots(&[0.0, 0.0, -1.0, 0.0, 1.0, 0.0]));
        assert_eq!(r.len(), 4);
        assert!((r[0] + 1.0).norm() < 1e-14);
        assert_eq!(r[1], c(0.0, 0.0));
        assert!((r[3] - 1.0).norm() < 1e-14);
    }

    #[test]
    fn roots_of_unity() {
        let mut p = vec![c(0.0, 0.0); 13];
        p[0] = c(-1.0, 0.0);
        p[12] = c(1.0, 0.0);
        for z in polynomial_roots(&p) {
            assert!((z.powu(12) - 1.0).norm() < 1e-13);
            assert!((z.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn wilkinson_like_degree_ten() {
        // ∏ (z - k), k = 1..10
        let mut p = vec![c(1.0, 0.0)];
        for k in 1..=10 {
            let mut next = vec![c(0.0, 0.0); p.len() + 1];
            for (i, &a) in p.iter().enumerate() {
                next[i + 1] += a;
                next[i] -= a * k as f64;
            }
            p = next;
        }
        let r = sorted(polynomial_roots(&p));
        for (k, z) in r.iter().enumerate() {
            assert!((z - (k + 1) as f64).norm() < 1e-7, "{z}");
        }
    }

    #[test]
    fn trinomial_degree_42() {
        // q⁴⁰ - q⁴² - 1
        let mut p = vec![0.0; 43];
        p[0] = -1.0;
        p[40] = 1.0;
        p[42] = -1.0;
        let roots = real_polynomial_roots(&p);
        assert_eq!(roots.len(), 42);
        for q in &roots {
            let v = q.powu(40) - q.powu(42) - 1.0;
            assert!(v.norm() < 1e-12, "{q}: {v}");
        }
        let min = roots.iter().map(|q| q.norm()).fold(f64::INFINITY, f64::min);
        assert!(min < 1.0);
    }
}
