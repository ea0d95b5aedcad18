//! Log-canonical Poisson structures and exact Laurent polynomials over them.
//!
//! Every structure here has brackets of the form {x_a, x_b} = C_ab x_a x_b
//! with an integer antisymmetric matrix C, which covers the lattice
//! variables, the local Lax entries, and the canonical realization alike.

use crate::error::{Error, Result};
use crate::scalar::GaussRat;
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;

/// Multiplicative constraint x_index^power * prod(vars) = 1 adjoined to a
/// structure; lets monomials trade high powers of the extra generator for
/// inverse powers of the product.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductLink {
    pub index: usize,
    pub power: usize,
    pub vars: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BracketStructure {
    pub names: Vec<String>,
    c: Vec<i64>,
    pub link: Option<ProductLink>,
}

impl BracketStructure {
    pub fn nvars(&self) -> usize {
        self.names.len()
    }

    pub fn coupling(&self, a: usize, b: usize) -> i64 {
        self.c[a * self.nvars() + b]
    }

    fn set_coupling(&mut self, a: usize, b: usize, v: i64) {
        let k = self.nvars();
        self.c[a * k + b] = v;
        self.c[b * k + a] = -v;
    }

    /// Lattice structure: product-constraint generator at index 0, then the
    /// site variables V_1..V_L with
    /// {V_n, V_m} = 2 V_n V_m sum_{k=1}^{N-1} (d(m,n+k) - d(m,n-k)) mod L.
    pub fn lattice(n: usize, l: usize) -> Result<BracketStructure> {
        if n < 2 {
            return Err(Error::InvalidPeriod(format!("order {} below 2", n)));
        }
        if l < 2 * n - 1 {
            return Err(Error::InvalidPeriod(format!(
                "period {} below {} required for order {}",
                l,
                2 * n - 1,
                n
            )));
        }
        let mut names = vec!["P0".to_string()];
        for i in 1..=l {
            names.push(format!("V_{}", i));
        }
        let k = names.len();
        let mut s = BracketStructure { names, c: vec![0; k * k], link: None };
        for a in 1..=l {
            for b in 1..=l {
                if a == b {
                    continue;
                }
                let mut v = 0i64;
                for d in 1..n {
                    if (a + d - 1) % l + 1 == b {
                        v += 2;
                    }
                    if (a + l - d - 1) % l + 1 == b {
                        v -= 2;
                    }
                }
                if v != 0 {
                    s.set_coupling(a, b, v);
                }
            }
        }
        s.link = Some(ProductLink { index: 0, power: n, vars: (1..=l).collect() });
        Ok(s)
    }

    /// Canonical multiplicative pairs: P_1..P_L, Q_1..Q_L with
    /// {P_i, Q_i} = P_i Q_i and all other pairs commuting.
    pub fn canonical_pairs(l: usize) -> BracketStructure {
        let mut names = Vec::with_capacity(2 * l);
        for i in 1..=l {
            names.push(format!("P_{}", i));
        }
        for i in 1..=l {
            names.push(format!("Q_{}", i));
        }
        let k = names.len();
        let mut s = BracketStructure { names, c: vec![0; k * k], link: None };
        for i in 0..l {
            s.set_coupling(i, l + i, 1);
        }
        s
    }

    /// Entries of local transfer factors at the given number of sites: per
    /// site the variables l^(0), l^(1), ..., l^(order), with
    /// {l^(0), l^(1)} = -l^(0) l^(1) and {l^(0), l^(order)} = l^(0) l^(order)
    /// inside one site, everything across sites commuting.
    pub fn local_entries(order: usize, sites: usize) -> BracketStructure {
        let per = order + 1;
        let mut names = Vec::with_capacity(per * sites);
        for s in 1..=sites {
            for k in 0..=order {
                names.push(format!("l{}_{}", s, k));
            }
        }
        let k = names.len();
        let mut st = BracketStructure { names, c: vec![0; k * k], link: None };
        for s in 0..sites {
            let base = s * per;
            st.set_coupling(base, base + 1, -1);
            st.set_coupling(base, base + order, 1);
        }
        st
    }

    pub fn var(&self, index: usize) -> LaurentPoly {
        let mut e = vec![0i32; self.nvars()];
        e[index] = 1;
        LaurentPoly::monomial(self.nvars(), GaussRat::one(), e)
    }

    /// Index of a named variable.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// {f, g} expanded monomial by monomial.
    pub fn bracket(&self, f: &LaurentPoly, g: &LaurentPoly) -> LaurentPoly {
        assert!(f.nvars == self.nvars() && g.nvars == self.nvars(), "variable count mismatch");
        let k = self.nvars();
        let mut out = LaurentPoly::zero(k);
        for (be, bc) in g.terms() {
            // cb[a] = sum_m C_am b_m
            let mut cb = vec![0i64; k];
            for (m, &bm) in be.iter().enumerate() {
                if bm == 0 {
                    continue;
                }
                for a in 0..k {
                    let c = self.coupling(a, m);
                    if c != 0 {
                        cb[a] += c * bm as i64;
                    }
                }
            }
            for (ae, ac) in f.terms() {
                let mut pair = 0i64;
                for (a, &aa) in ae.iter().enumerate() {
                    if aa != 0 && cb[a] != 0 {
                        pair += aa as i64 * cb[a];
                    }
                }
                if pair == 0 {
                    continue;
                }
                let mut e = ae.clone();
                for (i, x) in e.iter_mut().enumerate() {
                    *x += be[i];
                }
                let coef = ac.mul(bc).mul(&GaussRat::from_int(pair));
                out.add_term(e, coef);
            }
        }
        out
    }

    /// {x_n, g} without building the monomial x_n as a polynomial.
    pub fn bracket_var(&self, n: usize, g: &LaurentPoly) -> LaurentPoly {
        self.bracket(&self.var(n), g)
    }

    /// Rewrite powers of the linked generator: with x_j^p * prod(vars) = 1,
    /// every exponent e of x_j becomes e mod p while each linked variable
    /// picks up -(e div p).
    pub fn reduce_link(&self, f: &LaurentPoly) -> LaurentPoly {
        let link = match &self.link {
            None => return f.clone(),
            Some(l) => l,
        };
        let mut out = LaurentPoly::zero(f.nvars);
        for (e, c) in f.terms() {
            let e0 = e[link.index];
            let p = link.power as i32;
            let r = e0.rem_euclid(p);
            let q = (e0 - r) / p;
            if q == 0 {
                out.add_term(e.clone(), c.clone());
                continue;
            }
            let mut en = e.clone();
            en[link.index] = r;
            for &v in &link.vars {
                en[v] -= q;
            }
            out.add_term(en, c.clone());
        }
        out
    }
}

/// Exact multivariate Laurent polynomial: exponent vector -> coefficient.
#[derive(Clone, PartialEq)]
pub struct LaurentPoly {
    pub nvars: usize,
    terms: BTreeMap<Vec<i32>, GaussRat>,
}

impl LaurentPoly {
    pub fn zero(nvars: usize) -> Self {
        LaurentPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: GaussRat) -> Self {
        let mut p = LaurentPoly::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        LaurentPoly::constant(nvars, GaussRat::one())
    }

    pub fn monomial(nvars: usize, c: GaussRat, exps: Vec<i32>) -> Self {
        assert_eq!(exps.len(), nvars, "exponent vector length mismatch");
        let mut p = LaurentPoly::zero(nvars);
        p.add_term(exps, c);
        p
    }

    pub fn add_term(&mut self, exps: Vec<i32>, c: GaussRat) {
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&exps) {
            None => {
                self.terms.insert(exps, c);
            }
            Some(old) => {
                let s = old.add(&c);
                if !s.is_zero() {
                    self.terms.insert(exps, s);
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i32>, &GaussRat)> {
        self.terms.iter()
    }

    pub fn add(&self, o: &LaurentPoly) -> LaurentPoly {
        assert_eq!(self.nvars, o.nvars);
        let mut out = self.clone();
        for (e, c) in o.terms() {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> LaurentPoly {
        LaurentPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.neg())).collect(),
        }
    }

    pub fn sub(&self, o: &LaurentPoly) -> LaurentPoly {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &LaurentPoly) -> LaurentPoly {
        assert_eq!(self.nvars, o.nvars);
        let mut out = LaurentPoly::zero(self.nvars);
        for (ea, ca) in self.terms() {
            for (eb, cb) in o.terms() {
                let e: Vec<i32> = ea.iter().zip(eb.iter()).map(|(a, b)| a + b).collect();
                out.add_term(e, ca.mul(cb));
            }
        }
        out
    }

    pub fn scale(&self, c: &GaussRat) -> LaurentPoly {
        if c.is_zero() {
            return LaurentPoly::zero(self.nvars);
        }
        LaurentPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, x)| (e.clone(), x.mul(c))).collect(),
        }
    }

    /// Multiply by a single monomial.
    pub fn mul_monomial(&self, c: &GaussRat, exps: &[i32]) -> LaurentPoly {
        if c.is_zero() {
            return LaurentPoly::zero(self.nvars);
        }
        LaurentPoly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, x)| {
                    let en: Vec<i32> = e.iter().zip(exps.iter()).map(|(a, b)| a + b).collect();
                    (en, x.mul(c))
                })
                .collect(),
        }
    }

    /// Partial derivative with respect to one variable.
    pub fn partial(&self, var: usize) -> LaurentPoly {
        let mut out = LaurentPoly::zero(self.nvars);
        for (e, c) in self.terms() {
            let k = e[var];
            if k == 0 {
                continue;
            }
            let mut en = e.clone();
            en[var] -= 1;
            out.add_term(en, c.mul(&GaussRat::from_int(k as i64)));
        }
        out
    }

    pub fn eval_complex(&self, values: &[Complex64]) -> Complex64 {
        assert_eq!(values.len(), self.nvars);
        let mut acc = Complex64::new(0.0, 0.0);
        for (e, c) in self.terms() {
            let mut t = c.to_complex();
            for (v, &k) in values.iter().zip(e.iter()) {
                if k != 0 {
                    t *= v.powi(k);
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval_exact(&self, values: &[GaussRat]) -> Result<GaussRat> {
        assert_eq!(values.len(), self.nvars);
        let mut acc = GaussRat::zero();
        for (e, c) in self.terms() {
            let mut t = c.clone();
            for (v, &k) in values.iter().zip(e.iter()) {
                if k > 0 {
                    for _ in 0..k {
                        t = t.mul(v);
                    }
                } else if k < 0 {
                    if v.is_zero() {
                        return Err(Error::NonGenericPoint(
                            "negative power of zero in exact evaluation".into(),
                        ));
                    }
                    let inv = v.inv();
                    for _ in 0..-k {
                        t = t.mul(&inv);
                    }
                }
            }
            acc = acc.add(&t);
        }
        Ok(acc)
    }

    /// If every term carries the same exponent of `var`, return that exponent
    /// and the polynomial with it removed.
    pub fn strip_common_var(&self, var: usize) -> Option<(i32, LaurentPoly)> {
        let mut it = self.terms();
        let first = it.next()?;
        let e0 = first.0[var];
        for (e, _) in self.terms() {
            if e[var] != e0 {
                return None;
            }
        }
        let mut out = LaurentPoly::zero(self.nvars);
        for (e, c) in self.terms() {
            let mut en = e.clone();
            en[var] = 0;
            out.add_term(en, c.clone());
        }
        Some((e0, out))
    }

    /// Componentwise minimum exponent over all terms.
    pub fn monomial_gcd(&self) -> Vec<i32> {
        let mut gcd = vec![i32::MAX; self.nvars];
        for (e, _) in self.terms() {
            for (g, &x) in gcd.iter_mut().zip(e.iter()) {
                *g = (*g).min(x);
            }
        }
        if self.is_zero() {
            gcd = vec![0; self.nvars];
        }
        gcd
    }

    /// Divide out the monomial gcd, leaving minimum exponent zero in every
    /// variable that appears.
    pub fn primitive(&self) -> LaurentPoly {
        let g = self.monomial_gcd();
        let mut out = LaurentPoly::zero(self.nvars);
        for (e, c) in self.terms() {
            let en: Vec<i32> = e.iter().zip(g.iter()).map(|(a, b)| a - b).collect();
            out.add_term(en, c.clone());
        }
        out
    }

    /// Common total degree over the listed variables, if all terms agree.
    pub fn homogeneous_degree(&self, vars: &[usize]) -> Option<i64> {
        let mut deg = None;
        for (e, _) in self.terms() {
            let d: i64 = vars.iter().map(|&v| e[v] as i64).sum();
            match deg {
                None => deg = Some(d),
                Some(prev) if prev != d => return None,
                _ => {}
            }
        }
        deg
    }

    /// Flip the overall sign if the first term's coefficient points negative,
    /// so that plus-or-minus pairs compare equal.
    pub fn sign_normal(&self) -> LaurentPoly {
        match self.terms.values().next() {
            None => self.clone(),
            Some(c) => {
                if c.signum() < 0 {
                    self.neg()
                } else {
                    self.clone()
                }
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.to_complex().norm()).fold(0.0, f64::max)
    }

    pub fn render(&self, names: &[String]) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for (e, c) in self.terms() {
            let mut s = format!("({})", c);
            for (i, &k) in e.iter().enumerate() {
                if k == 1 {
                    s.push_str(&format!("*{}", names[i]));
                } else if k != 0 {
                    s.push_str(&format!("*{}^{}", names[i], k));
                }
            }
            parts.push(s);
        }
        parts.join(" + ")
    }
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({})*x^{:?}", c, e)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &BracketStructure, i: usize) -> LaurentPoly {
        s.var(i)
    }

    // Nearest neighbors couple with +2, the wrap-around neighbor with -2,
    // and the across pair commutes, read off the defining relations at
    // order 2, period 4.
    #[test]
    fn lattice_couplings_order_two() {
        let s = BracketStructure::lattice(2, 4).unwrap();
        let v1 = v(&s, 1);
        let b12 = s.bracket(&v1, &v(&s, 2));
        assert_eq!(b12, v1.mul(&v(&s, 2)).scale(&GaussRat::from_int(2)));
        assert!(s.bracket(&v1, &v(&s, 3)).is_zero());
        let b14 = s.bracket(&v1, &v(&s, 4));
        assert_eq!(b14, v1.mul(&v(&s, 4)).scale(&GaussRat::from_int(-2)));
        // the linked generator commutes with everything
        assert!(s.bracket(&v(&s, 0), &v1).is_zero());
    }

    // Flow of V_1 under the total sum: dV_1/dt = 2 V_1 (V_2 - V_4) at
    // order 2, period 4.
    #[test]
    fn lattice_flow_of_first_site() {
        let s = BracketStructure::lattice(2, 4).unwrap();
        let h = v(&s, 1).add(&v(&s, 2)).add(&v(&s, 3)).add(&v(&s, 4));
        let flow = s.bracket_var(1, &h);
        let expect = v(&s, 1)
            .mul(&v(&s, 2))
            .scale(&GaussRat::from_int(2))
            .add(&v(&s, 1).mul(&v(&s, 4)).scale(&GaussRat::from_int(-2)));
        assert_eq!(flow, expect);
    }

    #[test]
    fn period_bound_enforced() {
        assert!(BracketStructure::lattice(3, 4).is_err());
        assert!(BracketStructure::lattice(3, 5).is_ok());
    }

    #[test]
    fn antisymmetry_and_leibniz() {
        let s = BracketStructure::lattice(3, 7).unwrap();
        let f = v(&s, 1).mul(&v(&s, 3)).add(&v(&s, 5).scale(&GaussRat::from_int(4)));
        let g = v(&s, 2).add(&v(&s, 6).mul(&v(&s, 7)));
        let h = v(&s, 4).add(&v(&s, 1));
        let fg = s.bracket(&f, &g);
        assert_eq!(fg, s.bracket(&g, &f).neg());
        // {f, g h} = g {f, h} + {f, g} h
        let lhs = s.bracket(&f, &g.mul(&h));
        let rhs = g.mul(&s.bracket(&f, &h)).add(&s.bracket(&f, &g).mul(&h));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn jacobi_identity() {
        let s = BracketStructure::lattice(3, 7).unwrap();
        let f = v(&s, 1).add(&v(&s, 2).mul(&v(&s, 4)));
        let g = v(&s, 3).mul(&v(&s, 5));
        let h = v(&s, 6).add(&v(&s, 7));
        let total = s
            .bracket(&f, &s.bracket(&g, &h))
            .add(&s.bracket(&g, &s.bracket(&h, &f)))
            .add(&s.bracket(&h, &s.bracket(&f, &g)));
        assert!(total.is_zero());
    }

    #[test]
    fn local_entry_relations() {
        let s = BracketStructure::local_entries(3, 2);
        // site 1: l1_0 at 0, l1_1 at 1, l1_3 at 3; site 2 starts at 4
        let b = s.bracket(&v(&s, 0), &v(&s, 1));
        assert_eq!(b, v(&s, 0).mul(&v(&s, 1)).neg());
        let b = s.bracket(&v(&s, 0), &v(&s, 3));
        assert_eq!(b, v(&s, 0).mul(&v(&s, 3)));
        assert!(s.bracket(&v(&s, 0), &v(&s, 2)).is_zero());
        // across sites everything commutes
        for a in 0..4 {
            for b in 4..8 {
                assert!(s.bracket(&v(&s, a), &v(&s, b)).is_zero());
            }
        }
    }

    #[test]
    fn canonical_pair_relations() {
        let s = BracketStructure::canonical_pairs(3);
        let b = s.bracket(&v(&s, 0), &v(&s, 3));
        assert_eq!(b, v(&s, 0).mul(&v(&s, 3)));
        assert!(s.bracket(&v(&s, 0), &v(&s, 4)).is_zero());
        assert!(s.bracket(&v(&s, 0), &v(&s, 1)).is_zero());
    }

    // P0^2 V_1 with P0^2 V_1 V_2 V_3 V_4 = 1 rewrites to
    // V_2^-1 V_3^-1 V_4^-1.
    #[test]
    fn link_reduction() {
        let s = BracketStructure::lattice(2, 4).unwrap();
        let f = LaurentPoly::monomial(5, GaussRat::one(), vec![2, 1, 0, 0, 0]);
        let red = s.reduce_link(&f);
        assert_eq!(red, LaurentPoly::monomial(5, GaussRat::one(), vec![0, 0, -1, -1, -1]));
        // powers below the link order pass through unchanged
        let g = LaurentPoly::monomial(5, GaussRat::one(), vec![1, 1, 0, 0, 0]);
        assert_eq!(s.reduce_link(&g), g);
    }

    #[test]
    fn primitive_and_homogeneous() {
        let s = BracketStructure::lattice(2, 4).unwrap();
        // V_1^2 V_2 + V_1 V_2^2: gcd V_1 V_2, primitive V_1 + V_2
        let f = v(&s, 1).mul(&v(&s, 1)).mul(&v(&s, 2)).add(&v(&s, 1).mul(&v(&s, 2)).mul(&v(&s, 2)));
        let p = f.primitive();
        assert_eq!(p, v(&s, 1).add(&v(&s, 2)));
        assert_eq!(f.homogeneous_degree(&[1, 2, 3, 4]), Some(3));
        assert_eq!(p.homogeneous_degree(&[1, 2, 3, 4]), Some(1));
    }

    #[test]
    fn sign_normalization_pairs_match() {
        let s = BracketStructure::lattice(2, 4).unwrap();
        let f = v(&s, 1).add(&v(&s, 2));
        assert_eq!(f.neg().sign_normal(), f.sign_normal());
    }
}
