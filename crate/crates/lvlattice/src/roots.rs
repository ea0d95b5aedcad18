//! Simultaneous root finding for complex polynomials.

use crate::error::{Error, Result};
use num_complex::Complex64;

fn eval(coeffs: &[Complex64], x: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

fn eval_deriv(coeffs: &[Complex64], x: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = acc * x + c * (k as f64);
    }
    acc
}

/// Backward-error bound at x: sum |c_j| |x|^j.
fn residual_scale(coeffs: &[Complex64], x: Complex64) -> f64 {
    let ax = x.norm();
    let mut acc = 0.0;
    let mut p = 1.0;
    for c in coeffs {
        acc += c.norm() * p;
        p *= ax;
    }
    acc.max(1e-300)
}

/// All roots of the polynomial with the given ascending coefficients.
///
/// Leading zeros at the origin are split off exactly: a coefficient vector
/// starting with k (numerically negligible) zeros contributes k roots at 0,
/// and the deflated polynomial is solved by Aberth-Ehrlich iteration.
pub fn all_roots(coeffs: &[Complex64], tol: f64) -> Result<Vec<Complex64>> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::NoConvergence("zero polynomial has no isolated roots".into()));
    }
    let mut lo = 0;
    while lo < coeffs.len() && coeffs[lo].norm() <= 1e-14 * scale {
        lo += 1;
    }
    let mut hi = coeffs.len();
    while hi > lo && coeffs[hi - 1].norm() <= 1e-14 * scale {
        hi -= 1;
    }
    let body = &coeffs[lo..hi];
    let mut roots = vec![Complex64::new(0.0, 0.0); lo];
    if body.len() <= 1 {
        return Ok(roots);
    }
    roots.extend(aberth(body, tol)?);
    Ok(roots)
}

fn aberth(coeffs: &[Complex64], tol: f64) -> Result<Vec<Complex64>> {
    let n = coeffs.len() - 1;
    // Fujiwara bound on root magnitude as starting radius.
    let lead = coeffs[n].norm();
    let radius = (1..=n)
        .map(|k| (coeffs[n - k].norm() / lead).powf(1.0 / k as f64))
        .fold(0.0, f64::max)
        .max(0.25)
        * 2.0;
    let mut xs: Vec<Complex64> = (0..n)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64) + 0.4;
            Complex64::from_polar(radius, th)
        })
        .collect();
    // Every point stays active each sweep; the pairwise repulsion keeps two
    // points from settling on one simple root.
    for _iter in 0..1000 {
        let mut max_rel_step = 0.0f64;
        for i in 0..n {
            let p = eval(coeffs, xs[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let dp = eval_deriv(coeffs, xs[i]);
            let newton = if dp.norm() > 0.0 { p / dp } else { Complex64::new(1e-6, 1e-6) };
            let mut sum = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    let d = xs[i] - xs[j];
                    if d.norm() > 1e-300 {
                        sum += Complex64::new(1.0, 0.0) / d;
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - newton * sum;
            let step = if denom.norm() > 1e-300 { newton / denom } else { newton };
            xs[i] -= step;
            max_rel_step = max_rel_step.max(step.norm() / xs[i].norm().max(1.0));
        }
        if max_rel_step < 1e-15 {
            break;
        }
    }
    // Final residual check: accept if every point meets the bound.
    for (i, &x) in xs.iter().enumerate() {
        if eval(coeffs, x).norm() > tol * residual_scale(coeffs, x) {
            return Err(Error::NoConvergence(format!(
                "root {} stalled at {:.3e}+{:.3e}i with residual {:.3e}",
                i,
                x.re,
                x.im,
                eval(coeffs, x).norm()
            )));
        }
    }
    Ok(xs)
}

/// Group nearly-equal roots; returns (representative, multiplicity), sorted
/// by real part then imaginary part.
pub fn cluster_roots(roots: &[Complex64], tol: f64) -> Vec<(Complex64, usize)> {
    let merge = 1e3 * tol;
    let mut sorted: Vec<Complex64> = roots.to_vec();
    sorted.sort_by(|a, b| {
        a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap())
    });
    let mut out: Vec<(Complex64, usize)> = Vec::new();
    'next: for r in sorted {
        for (rep, count) in out.iter_mut() {
            let scale = rep.norm().max(r.norm()).max(1.0);
            if (*rep - r).norm() <= merge * scale {
                *rep = (*rep * (*count as f64) + r) / (*count as f64 + 1.0);
                *count += 1;
                continue 'next;
            }
        }
        out.push((r, 1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn near(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-8
    }

    // (x-1)(x-2)(x-3) = x^3 - 6x^2 + 11x - 6, ascending [-6, 11, -6, 1].
    #[test]
    fn cubic_with_known_roots() {
        let coeffs: Vec<Complex64> =
            [-6.0, 11.0, -6.0, 1.0].iter().map(|&c| Complex64::new(c, 0.0)).collect();
        let mut roots = all_roots(&coeffs, 1e-12).unwrap();
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!(near(roots[0], Complex64::new(1.0, 0.0)));
        assert!(near(roots[1], Complex64::new(2.0, 0.0)));
        assert!(near(roots[2], Complex64::new(3.0, 0.0)));
    }

    #[test]
    fn origin_multiplicity_split_off() {
        // z^2 (z - 5): ascending [0, 0, -5, 1]
        let coeffs: Vec<Complex64> =
            [0.0, 0.0, -5.0, 1.0].iter().map(|&c| Complex64::new(c, 0.0)).collect();
        let mut roots = all_roots(&coeffs, 1e-12).unwrap();
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert_eq!(roots.len(), 3);
        assert!(near(roots[0], Complex64::new(0.0, 0.0)));
        assert!(near(roots[1], Complex64::new(0.0, 0.0)));
        assert!(near(roots[2], Complex64::new(5.0, 0.0)));
    }

    #[test]
    fn complex_pair() {
        // x^2 + 1
        let coeffs: Vec<Complex64> =
            [1.0, 0.0, 1.0].iter().map(|&c| Complex64::new(c, 0.0)).collect();
        let mut roots = all_roots(&coeffs, 1e-12).unwrap();
        roots.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!(near(roots[0], Complex64::new(0.0, -1.0)));
        assert!(near(roots[1], Complex64::new(0.0, 1.0)));
    }

    #[test]
    fn random_reconstruction() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let n = rng.gen_range(2..9);
            let true_roots: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)))
                .collect();
            // expand the product
            let mut coeffs = vec![Complex64::new(1.0, 0.0)];
            for r in &true_roots {
                let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
                for (k, c) in coeffs.iter().enumerate() {
                    next[k + 1] += c;
                    next[k] -= c * r;
                }
                coeffs = next;
            }
            let found = all_roots(&coeffs, 1e-12).unwrap();
            assert_eq!(found.len(), n);
            // each true root should be hit by some found root
            for t in &true_roots {
                let best = found.iter().map(|f| (f - t).norm()).fold(f64::INFINITY, f64::min);
                assert!(
                    best < 1e-6,
                    "missed root {} by {}\ntrue: {:?}\nfound: {:?}",
                    t,
                    best,
                    true_roots,
                    found
                );
            }
        }
    }

    #[test]
    fn clustering_merges_close_points() {
        let pts = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0 + 1e-11, 0.0),
            Complex64::new(2.0, 0.0),
        ];
        let cl = cluster_roots(&pts, 1e-12);
        assert_eq!(cl.len(), 2);
        assert_eq!(cl[0].1, 2);
        assert_eq!(cl[1].1, 1);
    }
}
