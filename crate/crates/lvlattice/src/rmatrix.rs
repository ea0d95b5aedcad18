//! Quadratic Poisson relation for transfer matrices: the cleared-denominator
//! classical r-matrix, the tensor-bracket residual, determinant centrality,
//! and involution of the spectral invariants. All checks are exact symbolic
//! identities; a residual either vanishes or the check fails.

use crate::bracket::{BracketStructure, LaurentPoly};
use crate::error::{Error, Result};
use crate::scalar::GaussRat;
use crate::sympoly::SymMatrix;
use std::collections::BTreeMap;

/// Polynomial in the two spectral parameters with Laurent coefficients,
/// keyed by (power of z, power of z').
#[derive(Clone, PartialEq, Debug)]
pub struct ZzPoly {
    pub nvars: usize,
    terms: BTreeMap<(u32, u32), LaurentPoly>,
}

impl ZzPoly {
    pub fn zero(nvars: usize) -> Self {
        ZzPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn insert(&mut self, key: (u32, u32), c: LaurentPoly) {
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&key) {
            None => {
                self.terms.insert(key, c);
            }
            Some(old) => {
                let s = old.add(&c);
                if !s.is_zero() {
                    self.terms.insert(key, s);
                }
            }
        }
    }

    pub fn constant(nvars: usize, c: GaussRat) -> Self {
        let mut p = ZzPoly::zero(nvars);
        p.insert((0, 0), LaurentPoly::constant(nvars, c));
        p
    }

    /// c * z^a * z'^b with unit symbolic part.
    pub fn spectral_monomial(nvars: usize, c: GaussRat, a: u32, b: u32) -> Self {
        let mut p = ZzPoly::zero(nvars);
        p.insert((a, b), LaurentPoly::constant(nvars, c));
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &ZzPoly) -> ZzPoly {
        let mut out = self.clone();
        for (k, c) in &o.terms {
            out.insert(*k, c.clone());
        }
        out
    }

    pub fn neg(&self) -> ZzPoly {
        ZzPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(k, c)| (*k, c.neg())).collect(),
        }
    }

    pub fn sub(&self, o: &ZzPoly) -> ZzPoly {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &ZzPoly) -> ZzPoly {
        let mut out = ZzPoly::zero(self.nvars);
        for (ka, a) in &self.terms {
            for (kb, b) in &o.terms {
                out.insert((ka.0 + kb.0, ka.1 + kb.1), a.mul(b));
            }
        }
        out
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &LaurentPoly)> {
        self.terms.iter()
    }
}

/// Square matrix over ZzPoly, dimension dim.
#[derive(Clone, PartialEq, Debug)]
pub struct ZzMatrix {
    pub dim: usize,
    pub nvars: usize,
    entries: Vec<ZzPoly>,
}

impl ZzMatrix {
    pub fn zero(dim: usize, nvars: usize) -> Self {
        ZzMatrix { dim, nvars, entries: vec![ZzPoly::zero(nvars); dim * dim] }
    }

    pub fn get(&self, r: usize, c: usize) -> &ZzPoly {
        &self.entries[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, p: ZzPoly) {
        self.entries[r * self.dim + c] = p;
    }

    pub fn add_to(&mut self, r: usize, c: usize, p: &ZzPoly) {
        let cur = self.get(r, c).add(p);
        self.set(r, c, cur);
    }

    pub fn mul(&self, o: &ZzMatrix) -> ZzMatrix {
        assert_eq!(self.dim, o.dim);
        let mut out = ZzMatrix::zero(self.dim, self.nvars);
        for r in 0..self.dim {
            for c in 0..self.dim {
                let mut acc = ZzPoly::zero(self.nvars);
                for k in 0..self.dim {
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

    pub fn sub(&self, o: &ZzMatrix) -> ZzMatrix {
        assert_eq!(self.dim, o.dim);
        let mut out = self.clone();
        for r in 0..self.dim {
            for c in 0..self.dim {
                out.set(r, c, self.get(r, c).sub(o.get(r, c)));
            }
        }
        out
    }

    pub fn first_nonzero(&self) -> Option<(usize, usize)> {
        for r in 0..self.dim {
            for c in 0..self.dim {
                if !self.get(r, c).is_zero() {
                    return Some((r, c));
                }
            }
        }
        None
    }
}

/// The cleared r-matrix rho(z, z') = (z - z') r(z/z') as an N^2 x N^2
/// matrix: (z + z') on the diagonal pairs, 2z and 2z' on the mixed pairs.
/// Tensor index (i, k) flattens to (i-1) N + (k-1).
pub fn cleared_r(order: usize, nvars: usize) -> ZzMatrix {
    let n = order;
    let mut rho = ZzMatrix::zero(n * n, nvars);
    let two = GaussRat::from_int(2);
    for c in 0..n {
        let row = c * n + c;
        let mut p = ZzPoly::spectral_monomial(nvars, GaussRat::one(), 1, 0);
        p.insert((0, 1), LaurentPoly::one(nvars));
        rho.add_to(row, row, &p);
    }
    for j in 0..n {
        for k in j + 1..n {
            // 2z at row (k,j), col (j,k)
            let p = ZzPoly::spectral_monomial(nvars, two.clone(), 1, 0);
            rho.add_to(k * n + j, j * n + k, &p);
            // 2z' at row (j,k), col (k,j)
            let p = ZzPoly::spectral_monomial(nvars, two.clone(), 0, 1);
            rho.add_to(j * n + k, k * n + j, &p);
        }
    }
    rho
}

/// Tensor product T(z) (x) T(z'): entry ((i,k),(j,l)) = T_ij(z) T_kl(z').
pub fn tensor_square(t: &SymMatrix) -> ZzMatrix {
    let n = t.n;
    let mut out = ZzMatrix::zero(n * n, t.nvars);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut p = ZzPoly::zero(t.nvars);
                    for (a, ca) in t.get(i, j).coeffs().iter().enumerate() {
                        if ca.is_zero() {
                            continue;
                        }
                        for (b, cb) in t.get(k, l).coeffs().iter().enumerate() {
                            if cb.is_zero() {
                                continue;
                            }
                            p.insert((a as u32, b as u32), ca.mul(cb));
                        }
                    }
                    out.set(i * n + k, j * n + l, p);
                }
            }
        }
    }
    out
}

/// Entry-wise tensor bracket { T(z) (x), T(z') }: entry ((i,k),(j,l)) =
/// { T_ij(z), T_kl(z') }.
pub fn tensor_bracket(st: &BracketStructure, t: &SymMatrix) -> ZzMatrix {
    let n = t.n;
    let mut out = ZzMatrix::zero(n * n, t.nvars);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut p = ZzPoly::zero(t.nvars);
                    for (a, ca) in t.get(i, j).coeffs().iter().enumerate() {
                        if ca.is_zero() {
                            continue;
                        }
                        for (b, cb) in t.get(k, l).coeffs().iter().enumerate() {
                            if cb.is_zero() {
                                continue;
                            }
                            p.insert((a as u32, b as u32), st.bracket(ca, cb));
                        }
                    }
                    out.set(i * n + k, j * n + l, p);
                }
            }
        }
    }
    out
}

/// Residual of the quadratic relation:
/// (z - z') {T (x), T'} - [rho, T (x) T'], which must vanish identically.
pub fn quadratic_residual(st: &BracketStructure, t: &SymMatrix) -> ZzMatrix {
    let n = t.n;
    let bkt = tensor_bracket(st, t);
    let dim = n * n;
    let mut lhs = ZzMatrix::zero(dim, t.nvars);
    let z_minus_zp = {
        let mut p = ZzPoly::spectral_monomial(t.nvars, GaussRat::one(), 1, 0);
        p.insert((0, 1), LaurentPoly::constant(t.nvars, GaussRat::from_int(-1)));
        p
    };
    for r in 0..dim {
        for c in 0..dim {
            lhs.set(r, c, z_minus_zp.mul(bkt.get(r, c)));
        }
    }
    let rho = cleared_r(n, t.nvars);
    let tt = tensor_square(t);
    let comm = rho.mul(&tt).sub(&tt.mul(&rho));
    lhs.sub(&comm)
}

/// Verify the quadratic relation holds exactly.
pub fn quadratic_check(st: &BracketStructure, t: &SymMatrix) -> Result<()> {
    let res = quadratic_residual(st, t);
    match res.first_nonzero() {
        None => Ok(()),
        Some((r, c)) => {
            let n = t.n;
            Err(Error::Internal(format!(
                "quadratic relation fails at tensor entry ({},{}),({},{})",
                r / n + 1,
                r % n + 1,
                c / n + 1,
                c % n + 1
            )))
        }
    }
}

/// Verify the determinant is central: {Det T(z), T_kl(z')} = 0 for every
/// entry.
pub fn det_central_check(st: &BracketStructure, t: &SymMatrix) -> Result<()> {
    let d = t.det();
    for k in 0..t.n {
        for l in 0..t.n {
            for dp in d.coeffs() {
                if dp.is_zero() {
                    continue;
                }
                for cq in t.get(k, l).coeffs() {
                    if cq.is_zero() {
                        continue;
                    }
                    if !st.bracket(dp, cq).is_zero() {
                        return Err(Error::Internal(format!(
                            "determinant fails to commute with entry ({},{})",
                            k + 1,
                            l + 1
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Verify all spectral invariants Poisson-commute coefficient by
/// coefficient: {f_i(z), f_j(z')} = 0.
pub fn invariants_commute_check(st: &BracketStructure, t: &SymMatrix) -> Result<()> {
    let fs = t.char_coeffs();
    for (i, fi) in fs.iter().enumerate() {
        for (j, fj) in fs.iter().enumerate().skip(i) {
            for (p, cp) in fi.coeffs().iter().enumerate() {
                if cp.is_zero() {
                    continue;
                }
                for (q, cq) in fj.coeffs().iter().enumerate() {
                    if cq.is_zero() {
                        continue;
                    }
                    if !st.bracket(cp, cq).is_zero() {
                        return Err(Error::Internal(format!(
                            "invariants {} and {} fail to commute at powers {} and {}",
                            i + 1,
                            j + 1,
                            p,
                            q
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monodromy::{chain_transfer, local_factor};

    #[test]
    fn single_factor_residual_vanishes_orders_2_3() {
        for n in [2usize, 3] {
            let st = BracketStructure::local_entries(n, 1);
            let f = local_factor(&st, n, 1);
            quadratic_check(&st, &f).unwrap();
        }
    }

    // Dropping one term of rho must break the relation: the check has teeth.
    #[test]
    fn perturbed_r_matrix_fails() {
        let n = 2usize;
        let st = BracketStructure::local_entries(n, 1);
        let t = local_factor(&st, n, 1);
        let bkt = tensor_bracket(&st, &t);
        let dim = n * n;
        let z_minus_zp = {
            let mut p = ZzPoly::spectral_monomial(t.nvars, GaussRat::one(), 1, 0);
            p.insert((0, 1), LaurentPoly::constant(t.nvars, GaussRat::from_int(-1)));
            p
        };
        let mut lhs = ZzMatrix::zero(dim, t.nvars);
        for r in 0..dim {
            for c in 0..dim {
                lhs.set(r, c, z_minus_zp.mul(bkt.get(r, c)));
            }
        }
        let mut rho = cleared_r(n, t.nvars);
        // erase the 2z' coupling
        rho.set(0 * n + 1, 1 * n + 0, ZzPoly::zero(t.nvars));
        let tt = tensor_square(&t);
        let comm = rho.mul(&tt).sub(&tt.mul(&rho));
        let res = lhs.sub(&comm);
        assert!(res.first_nonzero().is_some());
    }

    #[test]
    fn product_residual_vanishes() {
        // raw products before the z^-m2 normalization; the relation is
        // quadratic, so the scaling drops out
        for (n, l) in [(2usize, 3usize), (3, 4)] {
            let st = BracketStructure::local_entries(n, l);
            let mut prod = SymMatrix::identity(n, st.nvars());
            for site in 1..=l {
                prod = prod.mul(&local_factor(&st, n, site));
            }
            quadratic_check(&st, &prod).unwrap();
        }
    }

    #[test]
    fn determinant_central_on_chain() {
        let (st, t, _, _) = chain_transfer(3, 4).unwrap();
        det_central_check(&st, &t).unwrap();
    }

    #[test]
    fn invariants_commute_on_chain() {
        for (n, l) in [(2usize, 4usize), (3, 5)] {
            let (st, t, _, _) = chain_transfer(n, l).unwrap();
            invariants_commute_check(&st, &t).unwrap();
        }
    }
}
