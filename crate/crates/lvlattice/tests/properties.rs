//! Randomized structural laws: the quadratic bracket is a Poisson bracket,
//! determinants multiply, spectral invariants survive conjugation, and the
//! root finder inverts polynomial expansion.

use lvlattice::bracket::{BracketStructure, LaurentPoly};
use lvlattice::poly::{PolyMatrix, ScalarMat, UniPoly};
use lvlattice::roots::all_roots;
use lvlattice::scalar::{GaussRat, Mode, Scalar};
use lvlattice::sympoly::{SymMatrix, SymPoly};
use num_complex::Complex64;
use proptest::prelude::*;

fn gauss_rat() -> impl Strategy<Value = GaussRat> {
    (-9i64..=9, 1i64..=3, prop::bool::ANY).prop_map(|(num, den, imag)| {
        let num = if num == 0 { 1 } else { num };
        if imag {
            GaussRat::from_parts(0, 1, num, den)
        } else {
            GaussRat::from_ratio(num, den)
        }
    })
}

fn lattice() -> impl Strategy<Value = BracketStructure> {
    (3usize..=6).prop_map(|l| BracketStructure::lattice(2, l).unwrap())
}

proptest! {
    #[test]
    fn bracket_is_antisymmetric(
        st in lattice(),
        seedf in prop::collection::vec((gauss_rat(), prop::collection::vec(-2i32..=2, 7)), 1..=3),
        seedg in prop::collection::vec((gauss_rat(), prop::collection::vec(-2i32..=2, 7)), 1..=3),
    ) {
        let nv = st.nvars();
        let build = |terms: &[(GaussRat, Vec<i32>)]| {
            let mut p = LaurentPoly::zero(nv);
            for (c, exps) in terms {
                let mut e = exps.clone();
                e.truncate(nv);
                e.resize(nv, 0);
                p = p.add(&LaurentPoly::monomial(nv, c.clone(), e));
            }
            p
        };
        let f = build(&seedf);
        let g = build(&seedg);
        let fg = st.bracket(&f, &g);
        let gf = st.bracket(&g, &f);
        prop_assert!(fg.add(&gf).is_zero());
    }

    #[test]
    fn bracket_satisfies_leibniz(
        st in lattice(),
        seedf in prop::collection::vec((gauss_rat(), prop::collection::vec(-2i32..=2, 7)), 1..=3),
        seedg in prop::collection::vec((gauss_rat(), prop::collection::vec(-2i32..=2, 7)), 1..=2),
        seedh in prop::collection::vec((gauss_rat(), prop::collection::vec(-2i32..=2, 7)), 1..=2),
    ) {
        let nv = st.nvars();
        let build = |terms: &[(GaussRat, Vec<i32>)]| {
            let mut p = LaurentPoly::zero(nv);
            for (c, exps) in terms {
                let mut e = exps.clone();
                e.truncate(nv);
                e.resize(nv, 0);
                p = p.add(&LaurentPoly::monomial(nv, c.clone(), e));
            }
            p
        };
        let f = build(&seedf);
        let g = build(&seedg);
        let h = build(&seedh);
        let lhs = st.bracket(&f, &g.mul(&h));
        let rhs = st.bracket(&f, &g).mul(&h).add(&g.mul(&st.bracket(&f, &h)));
        prop_assert!(lhs.sub(&rhs).is_zero());
    }

    #[test]
    fn bracket_satisfies_jacobi(
        st in lattice(),
        ef in prop::collection::vec(-2i32..=2, 7),
        eg in prop::collection::vec(-2i32..=2, 7),
        eh in prop::collection::vec(-2i32..=2, 7),
    ) {
        let nv = st.nvars();
        let mono = |exps: &[i32]| {
            let mut e = exps.to_vec();
            e.truncate(nv);
            e.resize(nv, 0);
            LaurentPoly::monomial(nv, GaussRat::from_ratio(1, 1), e)
        };
        let f = mono(&ef);
        let g = mono(&eg);
        let h = mono(&eh);
        let s = st
            .bracket(&f, &st.bracket(&g, &h))
            .add(&st.bracket(&g, &st.bracket(&h, &f)))
            .add(&st.bracket(&h, &st.bracket(&f, &g)));
        prop_assert!(s.is_zero());
    }

    #[test]
    fn symbolic_determinant_multiplies(
        ea in prop::collection::vec((gauss_rat(), prop::collection::vec(-1i32..=1, 3), 0usize..=1), 4),
        eb in prop::collection::vec((gauss_rat(), prop::collection::vec(-1i32..=1, 3), 0usize..=1), 4),
    ) {
        let nv = 3usize;
        let build = |cells: &[(GaussRat, Vec<i32>, usize)]| {
            let mut m = SymMatrix::zero(2, nv);
            for (i, (c, exps, pow)) in cells.iter().enumerate() {
                let mono = LaurentPoly::monomial(nv, c.clone(), exps.clone());
                m.set(i / 2, i % 2, SymPoly::monomial(mono, *pow));
            }
            m
        };
        let a = build(&ea);
        let b = build(&eb);
        let lhs = a.mul(&b).det();
        let rhs = a.det().mul(&b.det());
        prop_assert!(lhs.sub(&rhs).is_zero());
    }

    #[test]
    fn invariants_survive_conjugation(
        tc in prop::collection::vec(prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 3), 9),
        sc in prop::collection::vec(-2.0f64..2.0, 9),
    ) {
        let n = 3usize;
        let mut t = PolyMatrix::zero(n, Mode::Float);
        for (i, coeffs) in tc.iter().enumerate() {
            let cs: Vec<Scalar> = coeffs
                .iter()
                .map(|&(re, im)| Scalar::Float(Complex64::new(re, im)))
                .collect();
            t.set(i / n, i % n, UniPoly::new(Mode::Float, 'z', cs).unwrap());
        }
        let mut s = ScalarMat::zero(n, Mode::Float);
        for (i, &x) in sc.iter().enumerate() {
            let boost = if i % (n + 1) == 0 { 3.0 } else { 0.0 };
            s.set(i / n, i % n, Scalar::Float(Complex64::new(x + boost, 0.0)));
        }
        let s_inv = match s.inverse() {
            Ok(inv) => inv,
            Err(_) => return Ok(()),
        };
        let conj = t.mul_const_left(&s).mul_const_right(&s_inv);
        let fa = t.char_coeffs().unwrap();
        let fb = conj.char_coeffs().unwrap();
        let mut scale = 1.0f64;
        for f in &fa {
            for c in f.to_complex_coeffs() {
                scale = scale.max(c.norm());
            }
        }
        for (a, b) in fa.iter().zip(&fb) {
            let ca = a.to_complex_coeffs();
            let cb = b.to_complex_coeffs();
            let len = ca.len().max(cb.len());
            for k in 0..len {
                let x = ca.get(k).copied().unwrap_or_default();
                let y = cb.get(k).copied().unwrap_or_default();
                prop_assert!((x - y).norm() <= 1e-7 * scale, "coefficient {} moved", k);
            }
        }
    }

    #[test]
    fn roots_reconstruct_polynomials(
        raw in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..=6),
    ) {
        let roots: Vec<Complex64> =
            raw.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        let mut separated = true;
        for i in 0..roots.len() {
            for j in 0..i {
                if (roots[i] - roots[j]).norm() < 0.1 {
                    separated = false;
                }
            }
        }
        prop_assume!(separated);
        let mut coeffs = vec![Complex64::new(1.0, 0.0)];
        for r in &roots {
            let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
            for (k, &c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * r;
            }
            coeffs = next;
        }
        let found = all_roots(&coeffs, 1e-12).unwrap();
        prop_assert_eq!(found.len(), roots.len());
        let mut used = vec![false; roots.len()];
        for f in &found {
            let mut best = None;
            for (i, r) in roots.iter().enumerate() {
                if used[i] {
                    continue;
                }
                let d = (f - r).norm();
                if best.map_or(true, |(bd, _)| d < bd) {
                    best = Some((d, i));
                }
            }
            let (d, i) = best.unwrap();
            prop_assert!(d <= 1e-6, "root {} off by {}", f, d);
            used[i] = true;
        }
    }
}
