//! Dense univariate polynomials, sparse bivariate polynomials, and square
//! polynomial matrices over a single arithmetic mode.

use crate::error::{Error, Result};
use crate::scalar::{Mode, Scalar};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;

/// Dense polynomial, coefficients ascending, trailing zeros trimmed.
#[derive(Clone, PartialEq)]
pub struct UniPoly {
    pub mode: Mode,
    pub var: char,
    coeffs: Vec<Scalar>,
}

impl UniPoly {
    pub fn new(mode: Mode, var: char, coeffs: Vec<Scalar>) -> Result<Self> {
        for c in &coeffs {
            if c.mode() != mode {
                return Err(Error::ModeMismatch);
            }
        }
        let mut p = UniPoly { mode, var, coeffs };
        p.trim();
        Ok(p)
    }

    pub fn zero(mode: Mode) -> Self {
        UniPoly { mode, var: 'z', coeffs: Vec::new() }
    }

    pub fn constant(c: Scalar) -> Self {
        let mode = c.mode();
        let coeffs = if c.is_zero() { Vec::new() } else { vec![c] };
        UniPoly { mode, var: 'z', coeffs }
    }

    pub fn monomial(c: Scalar, power: usize) -> Self {
        let mode = c.mode();
        if c.is_zero() {
            return UniPoly::zero(mode);
        }
        let mut coeffs = vec![Scalar::zero(mode); power + 1];
        coeffs[power] = c;
        UniPoly { mode, var: 'z', coeffs }
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

    /// Lowest power with a nonzero coefficient.
    pub fn ord(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn coeff(&self, k: usize) -> Scalar {
        self.coeffs.get(k).cloned().unwrap_or_else(|| Scalar::zero(self.mode))
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn leading(&self) -> Option<&Scalar> {
        self.coeffs.last()
    }

    fn check_compat(&self, o: &UniPoly) {
        assert!(self.mode == o.mode, "mode mismatch in polynomial arithmetic");
        assert!(self.var == o.var, "variable mismatch in polynomial arithmetic");
    }

    pub fn add(&self, o: &UniPoly) -> UniPoly {
        self.check_compat(o);
        let n = self.coeffs.len().max(o.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            out.push(self.coeff(k).add(&o.coeff(k)));
        }
        let mut p = UniPoly { mode: self.mode, var: self.var, coeffs: out };
        p.trim();
        p
    }

    pub fn sub(&self, o: &UniPoly) -> UniPoly {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> UniPoly {
        UniPoly {
            mode: self.mode,
            var: self.var,
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
        }
    }

    pub fn mul(&self, o: &UniPoly) -> UniPoly {
        self.check_compat(o);
        if self.is_zero() || o.is_zero() {
            return UniPoly::zero(self.mode);
        }
        let mut out = vec![Scalar::zero(self.mode); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        let mut p = UniPoly { mode: self.mode, var: self.var, coeffs: out };
        p.trim();
        p
    }

    pub fn scale(&self, c: &Scalar) -> UniPoly {
        let mut p = UniPoly {
            mode: self.mode,
            var: self.var,
            coeffs: self.coeffs.iter().map(|x| x.mul(c)).collect(),
        };
        p.trim();
        p
    }

    /// Multiply by `var^k`.
    pub fn shift_up(&self, k: usize) -> UniPoly {
        if self.is_zero() {
            return self.clone();
        }
        let mut coeffs = vec![Scalar::zero(self.mode); k];
        coeffs.extend(self.coeffs.iter().cloned());
        UniPoly { mode: self.mode, var: self.var, coeffs }
    }

    pub fn eval(&self, x: &Scalar) -> Scalar {
        let mut acc = Scalar::zero(self.mode);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(c);
        }
        acc
    }

    pub fn derivative(&self) -> UniPoly {
        if self.coeffs.len() <= 1 {
            return UniPoly::zero(self.mode);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c.mul(&Scalar::from_int(k as i64, self.mode)))
            .collect();
        let mut p = UniPoly { mode: self.mode, var: self.var, coeffs };
        p.trim();
        p
    }

    /// Quotient and remainder; exact mode only.
    pub fn div_rem(&self, d: &UniPoly) -> Result<(UniPoly, UniPoly)> {
        self.check_compat(d);
        if self.mode != Mode::Exact {
            return Err(Error::ModeMismatch);
        }
        let dd = match d.degree() {
            None => return Err(Error::ShapeMismatch("division by zero polynomial".into())),
            Some(k) => k,
        };
        let lead = d.leading().unwrap().clone();
        let mut rem = self.clone();
        let mut quot = vec![Scalar::zero(self.mode); self.coeffs.len().saturating_sub(dd)];
        while let Some(rd) = rem.degree() {
            if rd < dd {
                break;
            }
            let q = rem.leading().unwrap().div(&lead);
            let k = rd - dd;
            quot[k] = q.clone();
            rem = rem.sub(&d.mul(&UniPoly::monomial(q, k)));
        }
        let mut qp = UniPoly { mode: self.mode, var: self.var, coeffs: quot };
        qp.trim();
        Ok((qp, rem))
    }

    /// Division that must come out even.
    pub fn div_exact(&self, d: &UniPoly) -> Result<UniPoly> {
        let (q, r) = self.div_rem(d)?;
        if r.is_zero() { Ok(q) } else { Err(Error::InexactDivision) }
    }

    pub fn to_complex_coeffs(&self) -> Vec<Complex64> {
        self.coeffs.iter().map(|c| c.to_complex()).collect()
    }

    pub fn to_float(&self) -> UniPoly {
        UniPoly {
            mode: Mode::Float,
            var: self.var,
            coeffs: self.coeffs.iter().map(|c| Scalar::Float(c.to_complex())).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max)
    }
}

impl fmt::Debug for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if k == 0 {
                write!(f, "({})", c)?;
            } else {
                write!(f, "({})*{}^{}", c, self.var, k)?;
            }
        }
        Ok(())
    }
}

/// Sparse bivariate polynomial keyed by `(z_power, w_power)`.
#[derive(Clone, PartialEq)]
pub struct BiPoly {
    pub mode: Mode,
    terms: BTreeMap<(u32, u32), Scalar>,
}

impl BiPoly {
    pub fn zero(mode: Mode) -> Self {
        BiPoly { mode, terms: BTreeMap::new() }
    }

    pub fn insert(&mut self, key: (u32, u32), c: Scalar) -> Result<()> {
        if c.mode() != self.mode {
            return Err(Error::ModeMismatch);
        }
        if c.is_zero() {
            return Ok(());
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
        Ok(())
    }

    pub fn from_terms(mode: Mode, terms: Vec<((u32, u32), Scalar)>) -> Result<Self> {
        let mut p = BiPoly::zero(mode);
        for (k, c) in terms {
            p.insert(k, c)?;
        }
        Ok(p)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &Scalar)> {
        self.terms.iter()
    }

    pub fn add(&self, o: &BiPoly) -> BiPoly {
        assert!(self.mode == o.mode, "mode mismatch");
        let mut out = self.clone();
        for (k, c) in &o.terms {
            out.insert(*k, c.clone()).expect("mode checked");
        }
        out
    }

    pub fn neg(&self) -> BiPoly {
        BiPoly {
            mode: self.mode,
            terms: self.terms.iter().map(|(k, c)| (*k, c.neg())).collect(),
        }
    }

    pub fn sub(&self, o: &BiPoly) -> BiPoly {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &BiPoly) -> BiPoly {
        assert!(self.mode == o.mode, "mode mismatch");
        let mut out = BiPoly::zero(self.mode);
        for (ka, a) in &self.terms {
            for (kb, b) in &o.terms {
                out.insert((ka.0 + kb.0, ka.1 + kb.1), a.mul(b)).expect("mode checked");
            }
        }
        out
    }

    pub fn scale(&self, c: &Scalar) -> BiPoly {
        let mut out = BiPoly::zero(self.mode);
        for (k, a) in &self.terms {
            out.insert(*k, a.mul(c)).expect("mode checked");
        }
        out
    }

    /// Direct term-by-term evaluation.
    pub fn eval(&self, z: &Scalar, w: &Scalar) -> Scalar {
        let mut acc = Scalar::zero(self.mode);
        for (&(a, b), c) in &self.terms {
            let mut t = c.clone();
            for _ in 0..a {
                t = t.mul(z);
            }
            for _ in 0..b {
                t = t.mul(w);
            }
            acc = acc.add(&t);
        }
        acc
    }

    /// Horner evaluation of the w-collected form; agrees with `eval`.
    pub fn eval_horner(&self, z: &Scalar, w: &Scalar) -> Scalar {
        let rows = self.collect_w();
        let mut acc = Scalar::zero(self.mode);
        let max_w = rows.iter().map(|(b, _)| *b).max().unwrap_or(0);
        for b in (0..=max_w).rev() {
            acc = acc.mul(w);
            if let Some((_, p)) = rows.iter().find(|(bb, _)| *bb == b) {
                acc = acc.add(&p.eval(z));
            }
        }
        acc
    }

    /// Coefficients of each power of w, as polynomials in z.
    pub fn collect_w(&self) -> Vec<(u32, UniPoly)> {
        let mut by_w: BTreeMap<u32, Vec<(u32, Scalar)>> = BTreeMap::new();
        for (&(a, b), c) in &self.terms {
            by_w.entry(b).or_default().push((a, c.clone()));
        }
        by_w
            .into_iter()
            .map(|(b, cells)| {
                let top = cells.iter().map(|(a, _)| *a).max().unwrap() as usize;
                let mut coeffs = vec![Scalar::zero(self.mode); top + 1];
                for (a, c) in cells {
                    coeffs[a as usize] = c;
                }
                let mut p = UniPoly { mode: self.mode, var: 'z', coeffs };
                p.trim();
                (b, p)
            })
            .collect()
    }

    pub fn coeff_of_w(&self, b: u32) -> UniPoly {
        self.collect_w()
            .into_iter()
            .find(|(bb, _)| *bb == b)
            .map(|(_, p)| p)
            .unwrap_or_else(|| UniPoly::zero(self.mode))
    }

    pub fn support(&self) -> Vec<(i64, i64)> {
        self.terms.keys().map(|&(a, b)| (a as i64, b as i64)).collect()
    }

    pub fn to_float(&self) -> BiPoly {
        BiPoly {
            mode: Mode::Float,
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (*k, Scalar::Float(c.to_complex())))
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).fold(0.0, f64::max)
    }

    /// Evaluation-scale |F| built from term magnitudes at a point; used to
    /// normalize residuals.
    pub fn eval_scale(&self, z: Complex64, w: Complex64) -> f64 {
        let mut acc = 0.0;
        for (&(a, b), c) in &self.terms {
            acc += c.abs() * z.norm().powi(a as i32) * w.norm().powi(b as i32);
        }
        acc
    }
}

impl fmt::Debug for BiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(a, b), c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({})*z^{}*w^{}", c, a, b)?;
        }
        Ok(())
    }
}

/// Square matrix of constants in one mode; used for gauge transformations.
#[derive(Clone, PartialEq, Debug)]
pub struct ScalarMat {
    pub n: usize,
    pub mode: Mode,
    entries: Vec<Scalar>,
}

impl ScalarMat {
    pub fn new(n: usize, entries: Vec<Scalar>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::ShapeMismatch(format!("expected {} entries", n * n)));
        }
        let mode = entries.first().map(|s| s.mode()).unwrap_or(Mode::Exact);
        for e in &entries {
            if e.mode() != mode {
                return Err(Error::ModeMismatch);
            }
        }
        Ok(ScalarMat { n, mode, entries })
    }

    pub fn zero(n: usize, mode: Mode) -> Self {
        ScalarMat { n, mode, entries: vec![Scalar::zero(mode); n * n] }
    }

    pub fn identity(n: usize, mode: Mode) -> Self {
        let mut m = ScalarMat::zero(n, mode);
        for i in 0..n {
            m.set(i, i, Scalar::one(mode));
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> &Scalar {
        &self.entries[r * self.n + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Scalar) {
        self.entries[r * self.n + c] = v;
    }

    pub fn mul(&self, o: &ScalarMat) -> ScalarMat {
        assert!(self.n == o.n && self.mode == o.mode, "shape or mode mismatch");
        let mut out = ScalarMat::zero(self.n, self.mode);
        for r in 0..self.n {
            for c in 0..self.n {
                let mut acc = Scalar::zero(self.mode);
                for k in 0..self.n {
                    acc = acc.add(&self.get(r, k).mul(o.get(k, c)));
                }
                out.set(r, c, acc);
            }
        }
        out
    }

    pub fn det(&self) -> Scalar {
        match self.n {
            0 => Scalar::one(self.mode),
            1 => self.get(0, 0).clone(),
            _ => {
                let mut acc = Scalar::zero(self.mode);
                for c in 0..self.n {
                    let a = self.get(0, c);
                    if a.is_zero() {
                        continue;
                    }
                    let minor = self.minor(0, c).det();
                    let term = a.mul(&minor);
                    acc = if c % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
                }
                acc
            }
        }
    }

    fn minor(&self, row: usize, col: usize) -> ScalarMat {
        let mut entries = Vec::with_capacity((self.n - 1) * (self.n - 1));
        for r in 0..self.n {
            if r == row {
                continue;
            }
            for c in 0..self.n {
                if c == col {
                    continue;
                }
                entries.push(self.get(r, c).clone());
            }
        }
        ScalarMat { n: self.n - 1, mode: self.mode, entries }
    }

    /// Inverse via the adjugate; errors when the determinant vanishes (or is
    /// negligible in float mode).
    pub fn inverse(&self) -> Result<ScalarMat> {
        let d = self.det();
        let singular = match self.mode {
            Mode::Exact => d.is_zero(),
            Mode::Float => {
                let scale = self.entries.iter().map(|e| e.abs()).fold(0.0, f64::max);
                d.abs() <= 1e-12 * scale.powi(self.n as i32).max(1e-300)
            }
        };
        if singular {
            return Err(Error::NonGenericPoint("singular gauge matrix".into()));
        }
        let mut out = ScalarMat::zero(self.n, self.mode);
        for r in 0..self.n {
            for c in 0..self.n {
                let cof = self.minor(c, r).det();
                let signed = if (r + c) % 2 == 0 { cof } else { cof.neg() };
                out.set(r, c, signed.div(&d));
            }
        }
        Ok(out)
    }

    pub fn to_float(&self) -> ScalarMat {
        ScalarMat {
            n: self.n,
            mode: Mode::Float,
            entries: self.entries.iter().map(|c| Scalar::Float(c.to_complex())).collect(),
        }
    }
}

/// Square matrix of univariate polynomials.
#[derive(Clone, PartialEq)]
pub struct PolyMatrix {
    pub n: usize,
    pub mode: Mode,
    entries: Vec<UniPoly>,
}

impl PolyMatrix {
    pub fn new(n: usize, entries: Vec<UniPoly>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::ShapeMismatch(format!("expected {} entries", n * n)));
        }
        let mode = entries
            .iter()
            .map(|p| p.mode)
            .next()
            .ok_or_else(|| Error::ShapeMismatch("empty matrix".into()))?;
        for p in &entries {
            if p.mode != mode {
                return Err(Error::ModeMismatch);
            }
        }
        Ok(PolyMatrix { n, mode, entries })
    }

    pub fn zero(n: usize, mode: Mode) -> Self {
        PolyMatrix { n, mode, entries: vec![UniPoly::zero(mode); n * n] }
    }

    pub fn identity(n: usize, mode: Mode) -> Self {
        let mut m = PolyMatrix::zero(n, mode);
        for i in 0..n {
            m.set(i, i, UniPoly::constant(Scalar::one(mode)));
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> &UniPoly {
        &self.entries[r * self.n + c]
    }

    pub fn set(&mut self, r: usize, c: usize, p: UniPoly) {
        assert!(p.mode == self.mode, "mode mismatch");
        self.entries[r * self.n + c] = p;
    }

    pub fn mul(&self, o: &PolyMatrix) -> PolyMatrix {
        assert!(self.n == o.n && self.mode == o.mode, "shape or mode mismatch");
        let mut out = PolyMatrix::zero(self.n, self.mode);
        for r in 0..self.n {
            for c in 0..self.n {
                let mut acc = UniPoly::zero(self.mode);
                for k in 0..self.n {
                    let a = self.get(r, k);
                    if a.is_zero() {
                        continue;
                    }
                    acc = acc.add(&a.mul(o.get(k, c)));
                }
                out.set(r, c, acc);
            }
        }
        out
    }

    pub fn add(&self, o: &PolyMatrix) -> PolyMatrix {
        assert!(self.n == o.n && self.mode == o.mode, "shape or mode mismatch");
        let mut out = PolyMatrix::zero(self.n, self.mode);
        for i in 0..self.n * self.n {
            out.entries[i] = self.entries[i].add(&o.entries[i]);
        }
        out
    }

    pub fn mul_const_left(&self, s: &ScalarMat) -> PolyMatrix {
        assert!(self.n == s.n && self.mode == s.mode, "shape or mode mismatch");
        let mut out = PolyMatrix::zero(self.n, self.mode);
        for r in 0..self.n {
            for c in 0..self.n {
                let mut acc = UniPoly::zero(self.mode);
                for k in 0..self.n {
                    if s.get(r, k).is_zero() {
                        continue;
                    }
                    acc = acc.add(&self.get(k, c).scale(s.get(r, k)));
                }
                out.set(r, c, acc);
            }
        }
        out
    }

    pub fn mul_const_right(&self, s: &ScalarMat) -> PolyMatrix {
        assert!(self.n == s.n && self.mode == s.mode, "shape or mode mismatch");
        let mut out = PolyMatrix::zero(self.n, self.mode);
        for r in 0..self.n {
            for c in 0..self.n {
                let mut acc = UniPoly::zero(self.mode);
                for k in 0..self.n {
                    if s.get(k, c).is_zero() {
                        continue;
                    }
                    acc = acc.add(&self.get(r, k).scale(s.get(k, c)));
                }
                out.set(r, c, acc);
            }
        }
        out
    }

    /// Coefficient matrix of one power of the variable.
    pub fn coefficient_matrix(&self, power: usize) -> ScalarMat {
        let mut m = ScalarMat::zero(self.n, self.mode);
        for r in 0..self.n {
            for c in 0..self.n {
                m.set(r, c, self.get(r, c).coeff(power));
            }
        }
        m
    }

    pub fn from_slots(slots: &[ScalarMat]) -> Result<PolyMatrix> {
        let n = slots.first().map(|s| s.n).ok_or_else(|| Error::ShapeMismatch("no slots".into()))?;
        let mode = slots[0].mode;
        let mut out = PolyMatrix::zero(n, mode);
        for r in 0..n {
            for c in 0..n {
                let coeffs: Vec<Scalar> = slots.iter().map(|s| s.get(r, c).clone()).collect();
                out.set(r, c, UniPoly::new(mode, 'z', coeffs)?);
            }
        }
        Ok(out)
    }

    pub fn max_degree(&self) -> usize {
        self.entries.iter().filter_map(|p| p.degree()).max().unwrap_or(0)
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> PolyMatrix {
        let k = rows.len();
        let mut entries = Vec::with_capacity(k * k);
        for &r in rows {
            for &c in cols {
                entries.push(self.get(r, c).clone());
            }
        }
        PolyMatrix { n: k, mode: self.mode, entries }
    }

    pub fn eval(&self, z: &Scalar) -> ScalarMat {
        let mut m = ScalarMat::zero(self.n, self.mode);
        for r in 0..self.n {
            for c in 0..self.n {
                m.set(r, c, self.get(r, c).eval(z));
            }
        }
        m
    }

    pub fn to_float(&self) -> PolyMatrix {
        PolyMatrix {
            n: self.n,
            mode: Mode::Float,
            entries: self.entries.iter().map(|p| p.to_float()).collect(),
        }
    }

    /// Determinant. Cofactor expansion up to 4x4; larger exact matrices go
    /// through fraction-free elimination, larger float matrices through a
    /// subset recursion.
    pub fn det(&self) -> Result<UniPoly> {
        if self.n <= 4 {
            return Ok(self.det_cofactor());
        }
        match self.mode {
            Mode::Exact => self.det_bareiss(),
            Mode::Float => Ok(self.det_subsets()),
        }
    }

    fn det_cofactor(&self) -> UniPoly {
        match self.n {
            0 => UniPoly::constant(Scalar::one(self.mode)),
            1 => self.get(0, 0).clone(),
            _ => {
                let mut acc = UniPoly::zero(self.mode);
                for c in 0..self.n {
                    let a = self.get(0, c);
                    if a.is_zero() {
                        continue;
                    }
                    let rows: Vec<usize> = (1..self.n).collect();
                    let cols: Vec<usize> = (0..self.n).filter(|&x| x != c).collect();
                    let minor = self.submatrix(&rows, &cols).det_cofactor();
                    let term = a.mul(&minor);
                    acc = if c % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
                }
                acc
            }
        }
    }

    /// Fraction-free elimination: every division is exact by construction.
    fn det_bareiss(&self) -> Result<UniPoly> {
        let n = self.n;
        let mut a: Vec<UniPoly> = self.entries.clone();
        let mut sign = false;
        let mut prev = UniPoly::constant(Scalar::one(self.mode));
        for k in 0..n - 1 {
            if a[k * n + k].is_zero() {
                let swap = (k + 1..n).find(|&r| !a[r * n + k].is_zero());
                match swap {
                    None => return Ok(UniPoly::zero(self.mode)),
                    Some(r) => {
                        for c in 0..n {
                            a.swap(k * n + c, r * n + c);
                        }
                        sign = !sign;
                    }
                }
            }
            let pivot = a[k * n + k].clone();
            for r in k + 1..n {
                for c in k + 1..n {
                    let num = a[r * n + c].mul(&pivot).sub(&a[r * n + k].mul(&a[k * n + c]));
                    a[r * n + c] = num.div_exact(&prev)?;
                }
                a[r * n + k] = UniPoly::zero(self.mode);
            }
            prev = pivot;
        }
        let d = a[(n - 1) * n + (n - 1)].clone();
        Ok(if sign { d.neg() } else { d })
    }

    /// Laplace recursion memoized on column subsets.
    fn det_subsets(&self) -> UniPoly {
        let n = self.n;
        let mut memo: Vec<Option<UniPoly>> = vec![None; 1 << n];
        memo[0] = Some(UniPoly::constant(Scalar::one(self.mode)));
        self.det_subsets_rec(0, (1 << n) - 1, &mut memo)
    }

    fn det_subsets_rec(&self, row: usize, cols: usize, memo: &mut Vec<Option<UniPoly>>) -> UniPoly {
        if let Some(p) = &memo[cols] {
            return p.clone();
        }
        let mut acc = UniPoly::zero(self.mode);
        let mut parity = 0usize;
        for c in 0..self.n {
            if cols & (1 << c) == 0 {
                continue;
            }
            let a = self.get(row, c);
            if !a.is_zero() {
                let sub = self.det_subsets_rec(row + 1, cols & !(1 << c), memo);
                let term = a.mul(&sub);
                acc = if parity % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
            }
            parity += 1;
        }
        memo[cols] = Some(acc.clone());
        acc
    }

    /// Characteristic polynomial `Det(w I - M(z))`, collected so that the
    /// coefficient of `w^(n-i)` is `(-1)^i` times the i-th invariant.
    pub fn char_poly(&self) -> Result<BiPoly> {
        let mut f = BiPoly::zero(self.mode);
        f.insert((0, self.n as u32), Scalar::one(self.mode))?;
        for (i, e) in self.char_coeffs()?.into_iter().enumerate() {
            let wb = (self.n - 1 - i) as u32;
            let sign = if (i + 1) % 2 == 0 { 1 } else { -1 };
            for (k, c) in e.coeffs().iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let v = if sign > 0 { c.clone() } else { c.neg() };
                f.insert((k as u32, wb), v)?;
            }
        }
        Ok(f)
    }

    /// The invariants f_1..f_n: sums of principal minors of each order.
    pub fn char_coeffs(&self) -> Result<Vec<UniPoly>> {
        let n = self.n;
        let mut out = Vec::with_capacity(n);
        for i in 1..=n {
            let mut acc = UniPoly::zero(self.mode);
            for subset in subsets_of_size(n, i) {
                acc = acc.add(&self.submatrix(&subset, &subset).det()?);
            }
            out.push(acc);
        }
        Ok(out)
    }
}

impl fmt::Debug for PolyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.n {
            write!(f, "[")?;
            for c in 0..self.n {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:?}", self.get(r, c))?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

/// Expected f_i read off a characteristic polynomial in the sign convention
/// above: `f_i = (-1)^i * [w^(n-i)] F`.
pub fn char_coeffs_of(f: &BiPoly, n: usize) -> Vec<UniPoly> {
    (1..=n)
        .map(|i| {
            let p = f.coeff_of_w((n - i) as u32);
            if i % 2 == 0 { p } else { p.neg() }
        })
        .collect()
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
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
    use crate::scalar::GaussRat;

    fn z() -> UniPoly {
        UniPoly::monomial(Scalar::from_int(1, Mode::Exact), 1)
    }

    fn c(v: i64) -> UniPoly {
        UniPoly::constant(Scalar::from_int(v, Mode::Exact))
    }

    #[test]
    fn identity_det_is_one() {
        let m = PolyMatrix::identity(3, Mode::Exact);
        let d = m.det().unwrap();
        assert_eq!(d, c(1));
    }

    // Cofactor by hand: det [[0,2],[-z,z]] = 0*z - 2*(-z) = 2z.
    #[test]
    fn small_det_matches_hand_expansion() {
        let m = PolyMatrix::new(
            2,
            vec![c(0), c(2), z().neg(), z()],
        )
        .unwrap();
        assert_eq!(m.det().unwrap(), z().scale(&Scalar::from_int(2, Mode::Exact)));
    }

    // Four factors [[0,V_n],[-z,z]] with V = 1..4: per-factor determinants
    // multiply to 24 z^4, and the product's determinant must agree.
    #[test]
    fn product_det_is_product_of_dets() {
        let mut prod = PolyMatrix::identity(2, Mode::Exact);
        let mut oracle = UniPoly::constant(Scalar::one(Mode::Exact));
        for v in 1..=4i64 {
            let f = PolyMatrix::new(2, vec![c(0), c(v), z().neg(), z()]).unwrap();
            oracle = oracle.mul(&f.det().unwrap());
            prod = prod.mul(&f);
        }
        assert_eq!(prod.det().unwrap(), oracle);
        assert_eq!(oracle, UniPoly::monomial(Scalar::from_int(24, Mode::Exact), 4));
    }

    #[test]
    fn char_poly_of_1x1() {
        let p = z().add(&c(3));
        let m = PolyMatrix::new(1, vec![p.clone()]).unwrap();
        let f = m.char_poly().unwrap();
        // w - (z + 3)
        let f1 = char_coeffs_of(&f, 1);
        assert_eq!(f1[0], p);
    }

    #[test]
    fn division_round_trip() {
        let a = z().add(&c(2)).mul(&z().add(&c(-5))).mul(&z());
        let d = z().add(&c(2));
        let q = a.div_exact(&d).unwrap();
        assert_eq!(q.mul(&d), a);
        let bad = a.add(&c(1)).div_exact(&d);
        assert!(bad.is_err());
    }

    #[test]
    fn bareiss_matches_cofactor() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let n = 5;
            let entries: Vec<UniPoly> = (0..n * n)
                .map(|_| {
                    let coeffs: Vec<Scalar> = (0..3)
                        .map(|_| {
                            Scalar::Exact(GaussRat::from_int(rng.gen_range(-4..=4)))
                        })
                        .collect();
                    UniPoly::new(Mode::Exact, 'z', coeffs).unwrap()
                })
                .collect();
            let m = PolyMatrix::new(n, entries).unwrap();
            let bare = m.det_bareiss().unwrap();
            // brute cofactor on 5x5 for the cross-check
            let mut cof = UniPoly::zero(Mode::Exact);
            for c0 in 0..n {
                let a = m.get(0, c0);
                if a.is_zero() {
                    continue;
                }
                let rows: Vec<usize> = (1..n).collect();
                let cols: Vec<usize> = (0..n).filter(|&x| x != c0).collect();
                let term = a.mul(&m.submatrix(&rows, &cols).det_cofactor());
                cof = if c0 % 2 == 0 { cof.add(&term) } else { cof.sub(&term) };
            }
            assert_eq!(bare, cof);
        }
    }

    #[test]
    fn bipoly_eval_matches_horner() {
        let mut f = BiPoly::zero(Mode::Exact);
        f.insert((0, 2), Scalar::from_int(1, Mode::Exact)).unwrap();
        f.insert((3, 1), Scalar::from_int(-2, Mode::Exact)).unwrap();
        f.insert((1, 0), Scalar::from_int(5, Mode::Exact)).unwrap();
        let z0 = Scalar::Exact(GaussRat::from_ratio(3, 2));
        let w0 = Scalar::Exact(GaussRat::from_ratio(-1, 3));
        assert_eq!(f.eval(&z0, &w0), f.eval_horner(&z0, &w0));
    }

    #[test]
    fn scalar_mat_inverse() {
        let m = ScalarMat::new(
            3,
            vec![1, 2, 0, 0, 1, 4, 5, 6, 1]
                .into_iter()
                .map(|v| Scalar::from_int(v, Mode::Exact))
                .collect(),
        )
        .unwrap();
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), ScalarMat::identity(3, Mode::Exact));
    }
}
