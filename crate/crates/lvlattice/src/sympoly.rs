//! Polynomials in the spectral parameter whose coefficients are exact
//! Laurent polynomials in lattice variables, and square matrices of them.

use crate::bracket::LaurentPoly;
use crate::error::{Error, Result};
use crate::poly::{PolyMatrix, UniPoly};
use crate::scalar::{GaussRat, Mode, Scalar};
use num_complex::Complex64;

/// Polynomial in z with Laurent-polynomial coefficients, ascending, trimmed.
#[derive(Clone, PartialEq, Debug)]
pub struct SymPoly {
    pub nvars: usize,
    coeffs: Vec<LaurentPoly>,
}

impl SymPoly {
    pub fn zero(nvars: usize) -> Self {
        SymPoly { nvars, coeffs: Vec::new() }
    }

    pub fn constant(c: LaurentPoly) -> Self {
        let nvars = c.nvars;
        let coeffs = if c.is_zero() { Vec::new() } else { vec![c] };
        SymPoly { nvars, coeffs }
    }

    pub fn monomial(c: LaurentPoly, power: usize) -> Self {
        let nvars = c.nvars;
        if c.is_zero() {
            return SymPoly::zero(nvars);
        }
        let mut coeffs = vec![LaurentPoly::zero(nvars); power + 1];
        coeffs[power] = c;
        SymPoly { nvars, coeffs }
    }

    pub fn from_coeffs(nvars: usize, coeffs: Vec<LaurentPoly>) -> Self {
        let mut p = SymPoly { nvars, coeffs };
        p.trim();
        p
    }

    fn trim(&mut self) {
        while matches!(self.coeffs.last(), Some(c) if c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() { None } else { Some(self.coeffs.len() - 1) }
    }

    pub fn ord(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn coeff(&self, k: usize) -> LaurentPoly {
        self.coeffs.get(k).cloned().unwrap_or_else(|| LaurentPoly::zero(self.nvars))
    }

    pub fn coeffs(&self) -> &[LaurentPoly] {
        &self.coeffs
    }

    pub fn add(&self, o: &SymPoly) -> SymPoly {
        assert_eq!(self.nvars, o.nvars);
        let n = self.coeffs.len().max(o.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k).add(&o.coeff(k))).collect();
        SymPoly::from_coeffs(self.nvars, coeffs)
    }

    pub fn neg(&self) -> SymPoly {
        SymPoly { nvars: self.nvars, coeffs: self.coeffs.iter().map(|c| c.neg()).collect() }
    }

    pub fn sub(&self, o: &SymPoly) -> SymPoly {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &SymPoly) -> SymPoly {
        assert_eq!(self.nvars, o.nvars);
        if self.is_zero() || o.is_zero() {
            return SymPoly::zero(self.nvars);
        }
        let mut coeffs =
            vec![LaurentPoly::zero(self.nvars); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                coeffs[i + j] = coeffs[i + j].add(&a.mul(b));
            }
        }
        SymPoly::from_coeffs(self.nvars, coeffs)
    }

    pub fn scale(&self, c: &LaurentPoly) -> SymPoly {
        SymPoly::from_coeffs(self.nvars, self.coeffs.iter().map(|x| x.mul(c)).collect())
    }

    pub fn scale_rat(&self, c: &GaussRat) -> SymPoly {
        SymPoly::from_coeffs(self.nvars, self.coeffs.iter().map(|x| x.scale(c)).collect())
    }

    pub fn shift_up(&self, k: usize) -> SymPoly {
        if self.is_zero() {
            return self.clone();
        }
        let mut coeffs = vec![LaurentPoly::zero(self.nvars); k];
        coeffs.extend(self.coeffs.iter().cloned());
        SymPoly { nvars: self.nvars, coeffs }
    }

    /// Divide by z^k; the k lowest coefficients must vanish.
    pub fn shift_down_exact(&self, k: usize) -> Result<SymPoly> {
        if self.is_zero() {
            return Ok(self.clone());
        }
        for j in 0..k.min(self.coeffs.len()) {
            if !self.coeffs[j].is_zero() {
                return Err(Error::Internal(format!(
                    "expected vanishing coefficient at power {} when dividing by z^{}",
                    j, k
                )));
            }
        }
        if self.coeffs.len() <= k {
            return Ok(SymPoly::zero(self.nvars));
        }
        Ok(SymPoly { nvars: self.nvars, coeffs: self.coeffs[k..].to_vec() })
    }

    pub fn z_derivative(&self) -> SymPoly {
        if self.coeffs.len() <= 1 {
            return SymPoly::zero(self.nvars);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c.scale(&GaussRat::from_int(k as i64)))
            .collect();
        SymPoly::from_coeffs(self.nvars, coeffs)
    }

    /// Partial derivative in one lattice variable, coefficient by
    /// coefficient.
    pub fn partial_var(&self, var: usize) -> SymPoly {
        SymPoly::from_coeffs(self.nvars, self.coeffs.iter().map(|c| c.partial(var)).collect())
    }

    /// Numeric univariate polynomial at the given variable values.
    pub fn to_unipoly_float(&self, values: &[Complex64]) -> UniPoly {
        let coeffs: Vec<Scalar> = self
            .coeffs
            .iter()
            .map(|c| Scalar::Float(c.eval_complex(values)))
            .collect();
        UniPoly::new(Mode::Float, 'z', coeffs).expect("uniform float mode")
    }

    pub fn to_unipoly_exact(&self, values: &[GaussRat]) -> Result<UniPoly> {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for c in &self.coeffs {
            coeffs.push(Scalar::Exact(c.eval_exact(values)?));
        }
        UniPoly::new(Mode::Exact, 'z', coeffs)
    }

    /// Full evaluation at a spectral value and variable values.
    pub fn eval_full(&self, z: Complex64, values: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c.eval_complex(values);
        }
        acc
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.iter().map(|c| c.num_terms()).sum()
    }
}

/// Square matrix of spectral-parameter polynomials with symbolic
/// coefficients.
#[derive(Clone, PartialEq, Debug)]
pub struct SymMatrix {
    pub n: usize,
    pub nvars: usize,
    entries: Vec<SymPoly>,
}

impl SymMatrix {
    pub fn zero(n: usize, nvars: usize) -> Self {
        SymMatrix { n, nvars, entries: vec![SymPoly::zero(nvars); n * n] }
    }

    pub fn identity(n: usize, nvars: usize) -> Self {
        let mut m = SymMatrix::zero(n, nvars);
        for i in 0..n {
            m.set(i, i, SymPoly::constant(LaurentPoly::one(nvars)));
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> &SymPoly {
        &self.entries[r * self.n + c]
    }

    pub fn set(&mut self, r: usize, c: usize, p: SymPoly) {
        assert_eq!(p.nvars, self.nvars);
        self.entries[r * self.n + c] = p;
    }

    pub fn mul(&self, o: &SymMatrix) -> SymMatrix {
        assert!(self.n == o.n && self.nvars == o.nvars);
        let mut out = SymMatrix::zero(self.n, self.nvars);
        for r in 0..self.n {
            for c in 0..self.n {
                let mut acc = SymPoly::zero(self.nvars);
                for k in 0..self.n {
                    let a = self.get(r, k);
                    if a.is_zero() {
                        continue;
                    }
                    let b = o.get(k, c);
                    if b.is_zero() {
                        continue;
                    }
                    acc = acc.add(&a.mul(b));
                }
                out.set(r, c, acc);
            }
        }
        out
    }

    pub fn scale(&self, c: &LaurentPoly) -> SymMatrix {
        SymMatrix {
            n: self.n,
            nvars: self.nvars,
            entries: self.entries.iter().map(|p| p.scale(c)).collect(),
        }
    }

    pub fn shift_down_exact(&self, k: usize) -> Result<SymMatrix> {
        let mut out = SymMatrix::zero(self.n, self.nvars);
        for r in 0..self.n {
            for c in 0..self.n {
                out.set(r, c, self.get(r, c).shift_down_exact(k)?);
            }
        }
        Ok(out)
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> SymMatrix {
        let k = rows.len();
        let mut entries = Vec::with_capacity(k * k);
        for &r in rows {
            for &c in cols {
                entries.push(self.get(r, c).clone());
            }
        }
        SymMatrix { n: k, nvars: self.nvars, entries }
    }

    pub fn det(&self) -> SymPoly {
        match self.n {
            0 => SymPoly::constant(LaurentPoly::one(self.nvars)),
            1 => self.get(0, 0).clone(),
            _ => {
                let mut acc = SymPoly::zero(self.nvars);
                for c in 0..self.n {
                    let a = self.get(0, c);
                    if a.is_zero() {
                        continue;
                    }
                    let rows: Vec<usize> = (1..self.n).collect();
                    let cols: Vec<usize> = (0..self.n).filter(|&x| x != c).collect();
                    let term = a.mul(&self.submatrix(&rows, &cols).det());
                    acc = if c % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
                }
                acc
            }
        }
    }

    /// Invariants f_1..f_n as sums of principal minors.
    pub fn char_coeffs(&self) -> Vec<SymPoly> {
        let n = self.n;
        let mut out = Vec::with_capacity(n);
        for i in 1..=n {
            let mut acc = SymPoly::zero(self.nvars);
            for subset in subsets_of_size(n, i) {
                acc = acc.add(&self.submatrix(&subset, &subset).det());
            }
            out.push(acc);
        }
        out
    }

    pub fn eval_float(&self, values: &[Complex64]) -> PolyMatrix {
        let mut out = PolyMatrix::zero(self.n, Mode::Float);
        for r in 0..self.n {
            for c in 0..self.n {
                out.set(r, c, self.get(r, c).to_unipoly_float(values));
            }
        }
        out
    }

    pub fn eval_exact(&self, values: &[GaussRat]) -> Result<PolyMatrix> {
        let mut out = PolyMatrix::zero(self.n, Mode::Exact);
        for r in 0..self.n {
            for c in 0..self.n {
                out.set(r, c, self.get(r, c).to_unipoly_exact(values)?);
            }
        }
        Ok(out)
    }

    pub fn max_degree(&self) -> usize {
        self.entries.iter().filter_map(|p| p.degree()).max().unwrap_or(0)
    }

    pub fn total_terms(&self) -> usize {
        self.entries.iter().map(|p| p.num_terms()).sum()
    }
}

pub(crate) fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bracket::BracketStructure;

    fn lattice24() -> BracketStructure {
        BracketStructure::lattice(2, 4).unwrap()
    }

    fn local_factor(s: &BracketStructure, site: usize) -> SymMatrix {
        // [[0, V_site], [-z, z]]
        let mut m = SymMatrix::zero(2, s.nvars());
        m.set(0, 1, SymPoly::constant(s.var(site)));
        m.set(1, 0, SymPoly::monomial(LaurentPoly::one(s.nvars()), 1).neg());
        m.set(1, 1, SymPoly::monomial(LaurentPoly::one(s.nvars()), 1));
        m
    }

    // Hand product of two local factors:
    // [[0,V1],[-z,z]] [[0,V2],[-z,z]] = [[-z V1, z V1], [-z^2, z^2 - z V2]].
    #[test]
    fn two_site_product_by_hand() {
        let s = lattice24();
        let p = local_factor(&s, 1).mul(&local_factor(&s, 2));
        let z1 = |c: LaurentPoly| SymPoly::monomial(c, 1);
        assert_eq!(*p.get(0, 0), z1(s.var(1)).neg());
        assert_eq!(*p.get(0, 1), z1(s.var(1)));
        assert_eq!(*p.get(1, 0), SymPoly::monomial(LaurentPoly::one(s.nvars()), 2).neg());
        let expect = SymPoly::monomial(LaurentPoly::one(s.nvars()), 2).sub(&z1(s.var(2)));
        assert_eq!(*p.get(1, 1), expect);
    }

    #[test]
    fn product_det_is_z2_v1v2() {
        let s = lattice24();
        let p = local_factor(&s, 1).mul(&local_factor(&s, 2));
        let d = p.det();
        let expect = SymPoly::monomial(s.var(1).mul(&s.var(2)), 2);
        assert_eq!(d, expect);
    }

    #[test]
    fn shift_down_checks_low_coefficients() {
        let s = lattice24();
        let p = local_factor(&s, 1).mul(&local_factor(&s, 2));
        // minimum order over entries is 1, so dividing by z works once
        let shifted = p.shift_down_exact(1).unwrap();
        assert_eq!(*shifted.get(0, 0), SymPoly::constant(s.var(1).neg()));
        assert!(p.shift_down_exact(2).is_err());
    }

    #[test]
    fn char_coeffs_match_trace_and_det() {
        let s = lattice24();
        let p = local_factor(&s, 1).mul(&local_factor(&s, 2));
        let f = p.char_coeffs();
        let trace = p.get(0, 0).add(p.get(1, 1));
        assert_eq!(f[0], trace);
        assert_eq!(f[1], p.det());
    }

    #[test]
    fn float_and_exact_evaluation_agree() {
        let s = lattice24();
        let p = local_factor(&s, 1).mul(&local_factor(&s, 3));
        let exact_vals: Vec<GaussRat> = vec![
            GaussRat::one(),
            GaussRat::from_int(2),
            GaussRat::from_int(3),
            GaussRat::from_ratio(1, 2),
            GaussRat::from_int(-1),
        ];
        let float_vals: Vec<Complex64> = exact_vals.iter().map(|v| v.to_complex()).collect();
        let ex = p.eval_exact(&exact_vals).unwrap();
        let fl = p.eval_float(&float_vals);
        for r in 0..2 {
            for c in 0..2 {
                let a = ex.get(r, c).to_float();
                let b = fl.get(r, c);
                let diff: f64 = (0..4)
                    .map(|k| (a.coeff(k).to_complex() - b.coeff(k).to_complex()).norm())
                    .sum();
                assert!(diff < 1e-12);
            }
        }
    }

    #[test]
    fn partials_commute_with_z_derivative() {
        let s = lattice24();
        let p = local_factor(&s, 1).mul(&local_factor(&s, 2));
        let e = p.get(1, 1);
        let a = e.partial_var(2).z_derivative();
        let b = e.z_derivative().partial_var(2);
        assert_eq!(a, b);
    }
}
