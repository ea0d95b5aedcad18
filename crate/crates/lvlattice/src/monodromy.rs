//! Structured polynomial transfer matrices: the block masks that cut out the
//! family, the class arithmetic that names its members, products of local
//! factors, and classification of a given matrix back into the family.

use crate::bracket::BracketStructure;
use crate::error::{Error, Result};
use crate::poly::{PolyMatrix, ScalarMat, UniPoly};
use crate::scalar::{GaussRat, Mode, Scalar};
use crate::sympoly::{SymMatrix, SymPoly};
use rand::Rng;

/// Shape of one coefficient block. Indices follow the band structure: Lower
/// and Upper cut strict staircase bands, the Wide variants relax them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    Lower(usize),
    Upper(usize),
    LowerWide(usize),
    UpperWide(usize),
    Full,
}

/// Row-major boolean mask of the free entries of an n x n block.
pub fn block_mask(n: usize, kind: BlockKind) -> Vec<bool> {
    let mut mask = vec![false; n * n];
    for r in 0..n {
        for c in 0..n {
            let free = match kind {
                BlockKind::Lower(i) => r >= i && c + i <= r + 1,
                BlockKind::Upper(i) => c + 1 >= r + i,
                BlockKind::LowerWide(i) => c <= r + i + 1,
                BlockKind::UpperWide(i) => r <= c + i + 1,
                BlockKind::Full => true,
            };
            mask[r * n + c] = free;
        }
    }
    mask
}

pub fn mask_and(a: &[bool], b: &[bool]) -> Vec<bool> {
    a.iter().zip(b.iter()).map(|(x, y)| x & y).collect()
}

pub fn mask_count(m: &[bool]) -> usize {
    m.iter().filter(|&&x| x).count()
}

/// A member class of the transfer-matrix family: matrix size n, spectral
/// degree m, and the two band offsets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonodromyClass {
    pub n: usize,
    pub m: usize,
    pub n1: usize,
    pub n2: usize,
}

impl MonodromyClass {
    pub fn new(n: usize, m: usize, n1: usize, n2: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidClass(format!("matrix size {} below 2", n)));
        }
        if m < 1 {
            return Err(Error::InvalidClass("degree must be at least 1".into()));
        }
        if n1 < 1 || n1 > n - 1 {
            return Err(Error::InvalidClass(format!(
                "first band offset {} outside 1..={}",
                n1,
                n - 1
            )));
        }
        if n2 < 1 || n2 > n {
            return Err(Error::InvalidClass(format!(
                "second band offset {} outside 1..={}",
                n2, n
            )));
        }
        Ok(MonodromyClass { n, m, n1, n2 })
    }

    fn lower_mid(&self) -> BlockKind {
        if self.n1 >= 2 && self.n >= 3 {
            BlockKind::LowerWide(self.n - 1 - self.n1)
        } else {
            BlockKind::Full
        }
    }

    fn upper_mid(&self) -> BlockKind {
        if self.n2 >= 3 {
            BlockKind::UpperWide(self.n - self.n2)
        } else {
            BlockKind::Full
        }
    }

    /// Free-entry masks per power of z, ascending, length m+1.
    pub fn slot_masks(&self) -> Vec<Vec<bool>> {
        let n = self.n;
        let top = block_mask(n, BlockKind::Lower(self.n1));
        let bottom = block_mask(n, BlockKind::Upper(self.n2));
        let lower_mid = block_mask(n, self.lower_mid());
        let upper_mid = block_mask(n, self.upper_mid());
        match self.m {
            1 => vec![mask_and(&lower_mid, &bottom), mask_and(&top, &upper_mid)],
            2 => vec![bottom, mask_and(&lower_mid, &upper_mid), top],
            m => {
                let mut slots = Vec::with_capacity(m + 1);
                slots.push(bottom);
                slots.push(upper_mid);
                for _ in 2..=m - 2 {
                    slots.push(block_mask(n, BlockKind::Full));
                }
                slots.push(lower_mid);
                slots.push(top);
                slots
            }
        }
    }

    /// Number of free coefficients across all slots.
    pub fn param_count(&self) -> usize {
        self.slot_masks().iter().map(|m| mask_count(m)).sum()
    }
}

/// Division data tying a period L to its class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainData {
    pub l: usize,
    pub m1: usize,
    pub m2: usize,
    pub k: usize,
    pub k1: usize,
    pub k2: usize,
}

/// Class of the product of l local factors of size n, after the z^(-m2)
/// normalization.
pub fn chain_class(n: usize, l: usize) -> Result<(MonodromyClass, ChainData)> {
    if n < 2 {
        return Err(Error::InvalidClass(format!("matrix size {} below 2", n)));
    }
    if l < 1 {
        return Err(Error::InvalidPeriod("need at least one factor".into()));
    }
    let m2 = l / n;
    let k2 = l % n;
    let mut m1 = l / (n - 1);
    let mut k1 = l % (n - 1);
    if k1 == 0 && k2 != 0 {
        k1 = n - 1;
        m1 -= 1;
    }
    let m = l / (n * (n - 1));
    let k = l % (n * (n - 1));
    let data = ChainData { l, m1, m2, k, k1, k2 };
    let class = if k1 == 0 && k2 == 0 {
        MonodromyClass::new(n, m, 1, 1)?
    } else if k1 >= k2 && k1 - k2 <= n - 2 {
        MonodromyClass::new(n, m + 1, n - k1, k2 + 1)?
    } else {
        MonodromyClass::new(n, m + 2, n - k1, k2 + 1)?
    };
    Ok((class, data))
}

/// Symbolic local factor at one site: superdiagonal entries l^(1)..l^(n-1),
/// plus z l^(n) in the lower-left corner and z l^(0) next to it.
pub fn local_factor(st: &BracketStructure, order: usize, site: usize) -> SymMatrix {
    let per = order + 1;
    let base = (site - 1) * per;
    let mut mat = SymMatrix::zero(order, st.nvars());
    for k in 1..order {
        mat.set(k - 1, k, SymPoly::constant(st.var(base + k)));
    }
    mat.set(order - 1, 0, SymPoly::monomial(st.var(base + order), 1));
    mat.set(order - 1, 1, SymPoly::monomial(st.var(base), 1));
    mat
}

/// Product of l local factors in site order, divided by z^m2.
pub fn chain_transfer(
    order: usize,
    l: usize,
) -> Result<(BracketStructure, SymMatrix, MonodromyClass, ChainData)> {
    let (class, data) = chain_class(order, l)?;
    let st = BracketStructure::local_entries(order, l);
    let mut prod = SymMatrix::identity(order, st.nvars());
    for site in 1..=l {
        prod = prod.mul(&local_factor(&st, order, site));
    }
    let shifted = prod.shift_down_exact(data.m2)?;
    Ok((st, shifted, class, data))
}

/// Check a symbolic matrix against the masks of a class: entries outside a
/// slot mask must vanish, entries inside must be present.
pub fn pattern_matches(mat: &SymMatrix, class: &MonodromyClass) -> bool {
    let n = class.n;
    let masks = class.slot_masks();
    let deg = mat.max_degree();
    if deg > class.m {
        return false;
    }
    for p in 0..=class.m {
        for r in 0..n {
            for c in 0..n {
                let coeff = mat.get(r, c).coeff(p);
                let free = masks[p][r * n + c];
                if free != !coeff.is_zero() {
                    return false;
                }
            }
        }
    }
    true
}

/// Nonzero pattern of the normalized product computed by pure path counting:
/// all symbols set to 1, so no cancellation can hide a free entry.
pub fn chain_pattern_counts(order: usize, l: usize) -> Result<Vec<Vec<i128>>> {
    let n = order;
    // polynomial in z with i128 matrix coefficients, ascending
    let mut prod: Vec<Vec<i128>> = vec![{
        let mut id = vec![0i128; n * n];
        for i in 0..n {
            id[i * n + i] = 1;
        }
        id
    }];
    for _site in 1..=l {
        // local factor: slot0 has the superdiagonal, slot1 the two corner
        // entries
        let mut slot0 = vec![0i128; n * n];
        for k in 1..n {
            slot0[(k - 1) * n + k] = 1;
        }
        let mut slot1 = vec![0i128; n * n];
        slot1[(n - 1) * n] = 1;
        slot1[(n - 1) * n + 1] = 1;
        let factor = vec![slot0, slot1];
        let mut next: Vec<Vec<i128>> = vec![vec![0i128; n * n]; prod.len() + 1];
        for (i, a) in prod.iter().enumerate() {
            for (j, b) in factor.iter().enumerate() {
                for r in 0..n {
                    for c in 0..n {
                        let mut acc = 0i128;
                        for k in 0..n {
                            acc += a[r * n + k] * b[k * n + c];
                        }
                        next[i + j][r * n + c] += acc;
                    }
                }
            }
        }
        prod = next;
    }
    let m2 = l / n;
    for slot in prod.iter().take(m2) {
        if slot.iter().any(|&x| x != 0) {
            return Err(Error::Internal(
                "nonzero coefficient below the normalizing power".into(),
            ));
        }
    }
    let mut out: Vec<Vec<i128>> = prod[m2..].to_vec();
    while matches!(out.last(), Some(s) if s.iter().all(|&x| x == 0)) {
        out.pop();
    }
    Ok(out)
}

/// Compare the path-count pattern of the l-factor product against the masks
/// of its class.
pub fn chain_pattern_check(order: usize, l: usize) -> Result<()> {
    let (class, _) = chain_class(order, l)?;
    let counts = chain_pattern_counts(order, l)?;
    let masks = class.slot_masks();
    if counts.len() > masks.len() {
        return Err(Error::ClassifyDisagreement(format!(
            "product degree {} exceeds class degree {} for size {} period {}",
            counts.len() - 1,
            class.m,
            order,
            l
        )));
    }
    for p in 0..masks.len() {
        for idx in 0..order * order {
            let have = counts.get(p).map(|s| s[idx] != 0).unwrap_or(false);
            if have != masks[p][idx] {
                return Err(Error::ClassifyDisagreement(format!(
                    "size {} period {}: power {} cell ({},{}) pattern {} but mask {}",
                    order,
                    l,
                    p,
                    idx / order + 1,
                    idx % order + 1,
                    have,
                    masks[p][idx]
                )));
            }
        }
    }
    Ok(())
}

/// Random nonzero rational, mostly integral, with an occasional imaginary
/// part.
pub fn sample_coefficient<R: Rng>(rng: &mut R) -> GaussRat {
    let draw_part = |rng: &mut R| {
        let mut num = 0i64;
        while num == 0 {
            num = rng.gen_range(-9..=9);
        }
        let den = match rng.gen_range(0..6) {
            0 => 2,
            1 => 3,
            _ => 1,
        };
        (num, den)
    };
    let (re_n, re_d) = draw_part(rng);
    if rng.gen_range(0..4) < 3 {
        GaussRat::from_ratio(re_n, re_d)
    } else {
        let (im_n, im_d) = draw_part(rng);
        GaussRat::from_parts(re_n, re_d, im_n, im_d)
    }
}

/// Random member of a class: free entries drawn by `sample_coefficient`,
/// everything else zero.
pub fn random_instance<R: Rng>(class: &MonodromyClass, mode: Mode, rng: &mut R) -> PolyMatrix {
    let n = class.n;
    let slots: Vec<ScalarMat> = class
        .slot_masks()
        .iter()
        .map(|mask| {
            let mut s = ScalarMat::zero(n, Mode::Exact);
            for r in 0..n {
                for c in 0..n {
                    if mask[r * n + c] {
                        s.set(r, c, Scalar::Exact(sample_coefficient(rng)));
                    }
                }
            }
            s
        })
        .collect();
    let mat = PolyMatrix::from_slots(&slots).expect("slot shapes agree");
    match mode {
        Mode::Exact => mat,
        Mode::Float => mat.to_float(),
    }
}

/// Random member that classifies back to its own class. Occasional draws
/// land on non-generic coefficient sums (a vanishing leading or trailing
/// invariant coefficient); those are discarded and redrawn a bounded number
/// of times.
pub fn random_instance_generic<R: Rng>(
    class: &MonodromyClass,
    mode: Mode,
    rng: &mut R,
) -> Result<PolyMatrix> {
    for _ in 0..20 {
        let inst = random_instance(class, mode, rng);
        if classify_transfer(&inst) == Ok(*class) {
            return Ok(inst);
        }
    }
    Err(Error::DegenerateCoefficients(format!(
        "20 draws for {:?} all hit non-generic coefficient sums",
        class
    )))
}

fn degree_and_ord(p: &UniPoly) -> Option<(usize, usize)> {
    Some((p.degree()?, p.ord()?))
}

/// Read the class of a polynomial matrix off its invariants, then confirm
/// the entry pattern fits the class masks.
pub fn classify_transfer(mat: &PolyMatrix) -> Result<MonodromyClass> {
    let n = mat.n;
    if n < 2 {
        return Err(Error::NotInFamily("matrix size below 2".into()));
    }
    let fs = mat.char_coeffs()?;
    let mut m = 0usize;
    let mut any = false;
    for (i, f) in fs.iter().enumerate() {
        if let Some(d) = f.degree() {
            any = true;
            m = m.max(d.div_ceil(i + 1));
        }
    }
    if !any {
        return Err(Error::NotInFamily("all invariants vanish".into()));
    }
    if m == 0 {
        return Err(Error::NotInFamily("constant matrix".into()));
    }
    let (dg, ord) = match degree_and_ord(&fs[n - 2]) {
        Some(x) => x,
        None => {
            return Err(Error::NotInFamily(
                "the next-to-last invariant vanishes; band offsets unreadable".into(),
            ))
        }
    };
    let want = (n - 1) * m + 1;
    if dg + 1 > want {
        return Err(Error::NotInFamily(format!(
            "next-to-last invariant degree {} too high for spectral degree {}",
            dg, m
        )));
    }
    let n1 = want - dg;
    let n2 = ord + 1;
    let class = MonodromyClass::new(n, m, n1, n2)
        .map_err(|e| Error::NotInFamily(format!("derived offsets invalid: {}", e)))?;
    // the matrix must actually fit the masks of the derived class
    let masks = class.slot_masks();
    if mat.max_degree() > class.m {
        return Err(Error::ClassifyDisagreement(format!(
            "entry degree {} exceeds derived spectral degree {}",
            mat.max_degree(),
            class.m
        )));
    }
    for p in 0..=class.m {
        for r in 0..n {
            for c in 0..n {
                if masks[p][r * n + c] {
                    continue;
                }
                let coeff = mat.get(r, c).coeff(p);
                let bad = match coeff {
                    Scalar::Exact(ref g) => !g.is_zero(),
                    Scalar::Float(v) => v.norm() > 1e-9 * mat.get(r, c).max_abs().max(1.0),
                };
                if bad {
                    return Err(Error::ClassifyDisagreement(format!(
                        "entry ({},{}) has a power-{} coefficient outside the mask of {:?}",
                        r + 1,
                        c + 1,
                        p,
                        class
                    )));
                }
            }
        }
    }
    Ok(class)
}
