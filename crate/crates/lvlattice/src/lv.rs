//! The periodic extended Lotka-Volterra lattice: transfer matrix over the
//! lattice variables, integrals of motion read off the spectral invariants,
//! the center of the bracket algebra, and the counting identity that ties
//! the curve genus to the number of independent integrals.

use crate::bracket::{BracketStructure, LaurentPoly};
use crate::error::{Error, Result};
use crate::linalg::complex_rank;
use crate::monodromy::{chain_class, ChainData, MonodromyClass};
use crate::newton::NewtonPolygon;
use crate::scalar::GaussRat;
use crate::sympoly::{SymMatrix, SymPoly};
use num_complex::Complex64;

/// Largest period kept symbolic per matrix size; beyond this the term count
/// makes exact arithmetic unreasonable on a desktop.
pub fn symbolic_cap(n: usize) -> usize {
    match n {
        2 => 24,
        3 => 18,
        _ => 2 * n * (n - 1),
    }
}

/// Largest period for the pairwise involution battery.  Tighter than
/// [`symbolic_cap`] at size 2, where bracketing pairs of invariants grows
/// about threefold per added site: seconds at period 17, near a minute at 19,
/// minutes past that.
pub fn involution_cap(n: usize) -> usize {
    if n == 2 { 19 } else { symbolic_cap(n) }
}

/// Largest period for the exact exchange-relation check on the whole product.
/// Much tighter than [`symbolic_cap`] at size 2: the tensor bracket of the
/// full product takes seconds at period 12, half a minute and close to three
/// gigabytes at 14, and more memory than a small machine has at 15.
pub fn product_check_cap(n: usize) -> usize {
    if n == 2 { 14 } else { symbolic_cap(n) }
}

/// Local factor at one site: V on the superdiagonal, signed z entries in the
/// last row.
pub fn site_factor(st: &BracketStructure, order: usize, site: usize) -> SymMatrix {
    let mut m = SymMatrix::zero(order, st.nvars());
    for k in 1..order {
        m.set(k - 1, k, SymPoly::constant(st.var(site)));
    }
    let corner = if order % 2 == 1 { 1 } else { -1 };
    let next = -corner;
    m.set(
        order - 1,
        0,
        SymPoly::monomial(LaurentPoly::constant(st.nvars(), GaussRat::from_int(corner)), 1),
    );
    m.set(
        order - 1,
        1,
        SymPoly::monomial(LaurentPoly::constant(st.nvars(), GaussRat::from_int(next)), 1),
    );
    m
}

/// One integral of motion: the primitive, sign-normalized polynomial, its
/// degree in the lattice variables, and whether it is central.
#[derive(Clone, Debug, PartialEq)]
pub struct Integral {
    pub poly: LaurentPoly,
    pub degree: i64,
    pub central: bool,
}

#[derive(Clone, Debug)]
pub struct LvModel {
    pub n: usize,
    pub l: usize,
    pub structure: BracketStructure,
    pub class: MonodromyClass,
    pub chain: ChainData,
    pub transfer: SymMatrix,
    /// Spectral invariants f_1..f_N of the transfer matrix, unreduced.
    pub invariants: Vec<SymPoly>,
    /// Non-central integrals, ascending by degree.
    pub ims: Vec<Integral>,
    /// Central combinations found among the invariant coefficients.
    pub central_ims: Vec<Integral>,
}

impl LvModel {
    pub fn build(n: usize, l: usize) -> Result<LvModel> {
        let structure = BracketStructure::lattice(n, l)?;
        if l > symbolic_cap(n) {
            return Err(Error::CapExceeded(format!(
                "period {} beyond the symbolic cap {} for size {}",
                l,
                symbolic_cap(n),
                n
            )));
        }
        let (class, chain) = chain_class(n, l)?;
        let mut prod = SymMatrix::identity(n, structure.nvars());
        for site in 1..=l {
            prod = prod.mul(&site_factor(&structure, n, site));
        }
        let shifted = prod.shift_down_exact(chain.m2)?;
        let mut p0_exp = vec![0i32; structure.nvars()];
        p0_exp[0] = (n - 1) as i32;
        let prefactor = LaurentPoly::monomial(structure.nvars(), GaussRat::one(), p0_exp);
        let transfer = shifted.scale(&prefactor);

        let invariants = Self::invariants_of(&structure, &transfer, n, l, &chain);
        let (ims, central_ims) = extract_integrals(&structure, &invariants, l)?;
        Ok(LvModel { n, l, structure, class, chain, transfer, invariants, ims, central_ims })
    }

    /// f_1..f_(N-1) by principal minors; f_N by the product of the site
    /// determinants, each z V^(N-1), with the overall prefactor.  The full
    /// cofactor determinant is avoided here because its intermediate
    /// products dwarf the final monomial at large periods.
    fn invariants_of(
        st: &BracketStructure,
        transfer: &SymMatrix,
        n: usize,
        l: usize,
        chain: &ChainData,
    ) -> Vec<SymPoly> {
        let mut fs = Vec::with_capacity(n);
        for i in 1..n {
            let mut acc = SymPoly::zero(st.nvars());
            for subset in crate::sympoly::subsets_of_size(n, i) {
                acc = acc.add(&transfer.submatrix(&subset, &subset).det());
            }
            fs.push(acc);
        }
        let mut exps = vec![0i32; st.nvars()];
        exps[0] = (n * (n - 1)) as i32;
        for v in 1..=l {
            exps[v] = (n - 1) as i32;
        }
        let mono = LaurentPoly::monomial(st.nvars(), GaussRat::one(), exps);
        fs.push(SymPoly::monomial(mono, l - n * chain.m2));
        fs
    }

    /// The determinant of the transfer matrix collapses to z^k2 once the
    /// product constraint is applied.
    pub fn det_normalization_check(&self) -> Result<()> {
        let det = &self.invariants[self.n - 1];
        let reduced = SymPoly::from_coeffs(
            det.nvars,
            det.coeffs().iter().map(|c| self.structure.reduce_link(c)).collect(),
        );
        let expect = SymPoly::monomial(LaurentPoly::one(self.structure.nvars()), self.chain.k2);
        if reduced == expect {
            Ok(())
        } else {
            Err(Error::Internal("determinant does not reduce to the pure power z^k2".into()))
        }
    }

    /// Cofactor expansion of the full determinant against the product of
    /// site determinants.  Exercises multiplicativity on the real transfer
    /// matrix; cost grows fast, so callers gate this by period.
    pub fn det_matches_closed_form_check(&self) -> Result<()> {
        if self.transfer.det() == self.invariants[self.n - 1] {
            Ok(())
        } else {
            Err(Error::Internal(
                "cofactor determinant disagrees with the product of site determinants".into(),
            ))
        }
    }

    /// Number of independent non-central integrals.
    pub fn im_count(&self) -> usize {
        self.ims.len()
    }

    /// Genus of the spectral curve from the Newton polygon of the symbolic
    /// support of Det(w I - T(z)).
    pub fn genus(&self) -> usize {
        self.spectral_polygon().genus()
    }

    pub fn spectral_polygon(&self) -> NewtonPolygon {
        let mut support = vec![(0i64, self.n as i64)];
        for (i, f) in self.invariants.iter().enumerate() {
            for (p, c) in f.coeffs().iter().enumerate() {
                if !c.is_zero() {
                    support.push((p as i64, (self.n - 1 - i) as i64));
                }
            }
        }
        NewtonPolygon::from_support(support)
    }

    /// Bracket of one site variable with an integral.
    pub fn site_flow(&self, site: usize, h: &LaurentPoly) -> LaurentPoly {
        self.structure.bracket_var(site, h)
    }

    /// The lowest flow must reproduce the defining equations of motion
    /// exactly: {V_site, H_1} = 2 V_site sum_k (V_(site+k) - V_(site-k)).
    pub fn flow_one_closed_form_check(&self) -> Result<()> {
        let h1 = &self
            .ims
            .first()
            .ok_or_else(|| Error::Internal("no integrals extracted".into()))?
            .poly;
        for site in 1..=self.l {
            let flow = self.site_flow(site, h1);
            let closed = closed_flow_one(&self.structure, self.n, self.l, site);
            if flow != closed {
                return Err(Error::Internal(format!(
                    "flow of site {} disagrees with the closed-form equations of motion",
                    site
                )));
            }
        }
        Ok(())
    }

    /// All integrals commute with the Hamiltonian, exactly.
    pub fn hamiltonian_involution_check(&self) -> Result<()> {
        if self.l > involution_cap(self.n) {
            return Err(Error::CapExceeded(format!(
                "period {} beyond the involution cap {} for size {}",
                self.l,
                involution_cap(self.n),
                self.n
            )));
        }
        let h1 = &self
            .ims
            .first()
            .ok_or_else(|| Error::Internal("no integrals extracted".into()))?
            .poly;
        for (j, im) in self.ims.iter().enumerate() {
            if !self.structure.bracket(h1, &im.poly).is_zero() {
                return Err(Error::Internal(format!(
                    "integral {} fails to commute with the Hamiltonian",
                    j + 1
                )));
            }
        }
        for (j, im) in self.central_ims.iter().enumerate() {
            if !self.structure.bracket(h1, &im.poly).is_zero() {
                return Err(Error::Internal(format!(
                    "central combination {} fails to commute with the Hamiltonian",
                    j + 1
                )));
            }
        }
        Ok(())
    }

    /// Full pairwise involution of the integrals; cost grows quickly with
    /// the period, so callers gate this by size.
    pub fn pairwise_involution_check(&self) -> Result<()> {
        if self.l > involution_cap(self.n) {
            return Err(Error::CapExceeded(format!(
                "period {} beyond the involution cap {} for size {}",
                self.l,
                involution_cap(self.n),
                self.n
            )));
        }
        for i in 0..self.ims.len() {
            for j in i + 1..self.ims.len() {
                if !self.structure.bracket(&self.ims[i].poly, &self.ims[j].poly).is_zero() {
                    return Err(Error::Internal(format!(
                        "integrals {} and {} fail to commute",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Rank of the gradient matrix of the integrals at a positive point;
    /// equality with the integral count certifies generic independence.
    pub fn independence_rank(&self, values: &[f64]) -> usize {
        assert_eq!(values.len(), self.l);
        let mut point = vec![Complex64::new(1.0, 0.0); self.structure.nvars()];
        for (i, &v) in values.iter().enumerate() {
            point[i + 1] = Complex64::new(v, 0.0);
        }
        let rows: Vec<Vec<Complex64>> = self
            .ims
            .iter()
            .map(|im| {
                (1..=self.l).map(|s| im.poly.partial(s).eval_complex(&point)).collect()
            })
            .collect();
        complex_rank(rows, 1e-8)
    }
}

/// 2 V_site sum_{k=1}^{N-1} (V_(site+k) - V_(site-k)) with periodic indices.
pub fn closed_flow_one(
    st: &BracketStructure,
    order: usize,
    l: usize,
    site: usize,
) -> LaurentPoly {
    let mut out = LaurentPoly::zero(st.nvars());
    for k in 1..order {
        let plus = (site + k - 1) % l + 1;
        let minus = (site + l - k - 1) % l + 1;
        let mut ep = vec![0i32; st.nvars()];
        ep[site] += 1;
        ep[plus] += 1;
        out.add_term(ep, GaussRat::from_int(2));
        let mut em = vec![0i32; st.nvars()];
        em[site] += 1;
        em[minus] += 1;
        out.add_term(em, GaussRat::from_int(-2));
    }
    out
}

fn canonical_key(p: &LaurentPoly) -> Vec<(Vec<i32>, GaussRat)> {
    p.terms().map(|(e, c)| (e.clone(), c.clone())).collect()
}

/// Pull the integrals out of the spectral invariants: reduce the product
/// constraint, strip the common power of the extra generator, divide out the
/// monomial gcd, fix the sign, then split central from non-central and
/// deduplicate.
fn extract_integrals(
    st: &BracketStructure,
    invariants: &[SymPoly],
    l: usize,
) -> Result<(Vec<Integral>, Vec<Integral>)> {
    let vsites: Vec<usize> = (1..=l).collect();
    let mut seen = std::collections::BTreeSet::new();
    let mut ims = Vec::new();
    let mut central = Vec::new();
    for f in invariants {
        for c in f.coeffs() {
            if c.is_zero() {
                continue;
            }
            let reduced = st.reduce_link(c);
            let (_, stripped) = reduced.strip_common_var(0).ok_or_else(|| {
                Error::Internal("invariant coefficient mixes powers of the linked generator".into())
            })?;
            let prim = stripped.primitive().sign_normal();
            if prim.num_terms() <= 1 {
                continue;
            }
            let degree = prim.homogeneous_degree(&vsites).ok_or_else(|| {
                Error::Internal("invariant coefficient is not homogeneous".into())
            })?;
            if !seen.insert(canonical_key(&prim)) {
                continue;
            }
            let is_central = vsites.iter().all(|&s| st.bracket_var(s, &prim).is_zero());
            let entry = Integral { poly: prim, degree, central: is_central };
            if is_central {
                central.push(entry);
            } else {
                ims.push(entry);
            }
        }
    }
    ims.sort_by(|a, b| a.degree.cmp(&b.degree).then_with(|| canonical_key(&a.poly).cmp(&canonical_key(&b.poly))));
    central.sort_by(|a, b| a.degree.cmp(&b.degree).then_with(|| canonical_key(&a.poly).cmp(&canonical_key(&b.poly))));
    Ok((ims, central))
}

/// Step sizes k whose site products close up and stay central: k divides the
/// period and also the matrix size or the size less one.
pub fn center_divisors(order: usize, l: usize) -> Vec<usize> {
    (1..=order)
        .filter(|&k| (order % k == 0 || (order - 1) % k == 0) && l % k == 0)
        .collect()
}

/// The product over every k-th site starting at i, one generator per residue
/// class.
pub fn center_generator(
    st: &BracketStructure,
    l: usize,
    k: usize,
    i: usize,
) -> LaurentPoly {
    let mut exps = vec![0i32; st.nvars()];
    let mut s = i;
    for _ in 0..l / k {
        exps[s] += 1;
        s += k;
        if s > l {
            s -= l;
        }
    }
    LaurentPoly::monomial(st.nvars(), GaussRat::one(), exps)
}

/// Predicted number of independent central generators.
pub fn predicted_center_rank(order: usize, l: usize) -> usize {
    let ks = center_divisors(order, l);
    let a = ks.iter().copied().filter(|&k| order % k == 0).max().unwrap_or(1);
    let b = ks.iter().copied().filter(|&k| (order - 1) % k == 0).max().unwrap_or(1);
    if a == b {
        a
    } else {
        a + b - 1
    }
}

/// Predicted count of independent non-central integrals.
pub fn predicted_im_count(order: usize, l: usize) -> Result<usize> {
    let n0 = predicted_center_rank(order, l);
    if (l - n0) % 2 != 0 {
        return Err(Error::Internal(format!(
            "period {} and center rank {} have different parity",
            l, n0
        )));
    }
    Ok((l - n0) / 2)
}

/// Closed-form genus of a generic member of the class, where one is known:
/// any size-2 class, all size-3 classes, and the (m;1,1) class at larger
/// sizes.
pub fn predicted_genus(class: &MonodromyClass) -> Option<usize> {
    let m = class.m;
    match class.n {
        2 => Some(m - 1),
        3 => {
            let g = match (class.n1, class.n2) {
                (1, 1) | (1, 2) => (3 * m).checked_sub(2),
                (2, 2) | (1, 3) | (2, 1) => (3 * m).checked_sub(3),
                (2, 3) => (3 * m).checked_sub(4),
                _ => return None,
            };
            g
        }
        n => {
            if (class.n1, class.n2) == (1, 1) {
                Some((n - 1) * (n * m - 2) / 2)
            } else {
                None
            }
        }
    }
}

/// Verify the predicted central generators: each commutes with every site
/// variable, and their exponent vectors have exactly the predicted rank.
pub fn center_check(st: &BracketStructure, order: usize, l: usize) -> Result<()> {
    let ks = center_divisors(order, l);
    let mut exponent_rows: Vec<Vec<i128>> = Vec::new();
    for &k in &ks {
        for i in 1..=k {
            let gen = center_generator(st, l, k, i);
            for s in 1..=l {
                if !st.bracket_var(s, &gen).is_zero() {
                    return Err(Error::Internal(format!(
                        "predicted central product with step {} offset {} fails to commute",
                        k, i
                    )));
                }
            }
            let (e, _) = gen.terms().next().expect("monomial");
            exponent_rows.push(e[1..=l].iter().map(|&x| x as i128).collect());
        }
    }
    let rank = integer_rank(exponent_rows);
    let predicted = predicted_center_rank(order, l);
    if rank != predicted {
        return Err(Error::Internal(format!(
            "central generators have rank {} but {} was predicted",
            rank, predicted
        )));
    }
    Ok(())
}

/// Exact rank of an integer matrix by fraction-free elimination.
pub fn integer_rank(mut rows: Vec<Vec<i128>>) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let cols = rows[0].len();
    let mut rank = 0;
    let mut col = 0;
    while rank < rows.len() && col < cols {
        let pivot = (rank..rows.len()).find(|&r| rows[r][col] != 0);
        match pivot {
            None => {
                col += 1;
                continue;
            }
            Some(p) => rows.swap(rank, p),
        }
        for r in rank + 1..rows.len() {
            if rows[r][col] == 0 {
                continue;
            }
            let a = rows[rank][col];
            let b = rows[r][col];
            let g = gcd_i128(a.abs(), b.abs()).max(1);
            let (fa, fb) = (b / g, a / g);
            for c in col..cols {
                rows[r][c] = rows[r][c] * fb - rows[rank][c] * fa;
            }
        }
        rank += 1;
        col += 1;
    }
    rank
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    if b == 0 { a } else { gcd_i128(b, a % b) }
}

/// The multiplicative canonical realization: site variables built from
/// paired P, Q generators reproduce the lattice brackets exactly.
pub fn canonical_realization_check(order: usize, l: usize) -> Result<()> {
    let lattice = BracketStructure::lattice(order, l)?;
    let pq = BracketStructure::canonical_pairs(l);
    let nv = pq.nvars();
    let site_var = |s: usize| -> LaurentPoly {
        // V_s = (P_s P_(s+1) ... P_(s+order-1))^-1 Q_s^-1 Q_(s+order-1)
        let mut exps = vec![0i32; nv];
        for j in 0..order {
            let p = (s - 1 + j) % l;
            exps[p] -= 1;
        }
        let q_lo = s - 1;
        let q_hi = (s - 1 + order - 1) % l;
        exps[l + q_lo] -= 1;
        exps[l + q_hi] += 1;
        LaurentPoly::monomial(nv, GaussRat::one(), exps)
    };
    for a in 1..=l {
        for b in 1..=l {
            let va = site_var(a);
            let vb = site_var(b);
            let got = pq.bracket(&va, &vb);
            let expect = va.mul(&vb).scale(&GaussRat::from_int(lattice.coupling(a, b)));
            if got != expect {
                return Err(Error::Internal(format!(
                    "canonical realization breaks the bracket of sites {} and {}",
                    a, b
                )));
            }
        }
    }
    Ok(())
}
