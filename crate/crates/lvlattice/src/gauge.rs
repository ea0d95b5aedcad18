//! Constant gauge transformations built from a matrix's own coefficient
//! slots, pressing it into a representative shape, together with dimension
//! counts for the level sets of the spectral invariants before and after.

use crate::error::{Error, Result};
use crate::linalg::{complex_null_space, complex_rank};
use crate::monodromy::{random_instance_generic, MonodromyClass};
use crate::poly::{BiPoly, PolyMatrix, ScalarMat, UniPoly};
use crate::scalar::{Mode, Scalar};
use num_complex::Complex64;
use rand::Rng;

/// One gauge row: start from a basis row and multiply coefficient matrices
/// of the listed powers on the right.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecipeRow {
    pub base: usize,
    pub word: Vec<usize>,
}

fn row(base: usize, word: Vec<usize>) -> RecipeRow {
    RecipeRow { base, word }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaugeRecipe {
    pub rows: Vec<RecipeRow>,
}

/// Gauge words per class.  Every size-2 and size-3 class has one (the
/// smallest size-3 class with both offsets maximal needs degree at least
/// two); larger sizes are covered only for offsets (1,1).
pub fn gauge_recipe(class: &MonodromyClass) -> Result<GaugeRecipe> {
    let m = class.m;
    let describe = || format!("class ({};{},{})", class.m, class.n1, class.n2);
    let rows = match (class.n, class.n1, class.n2) {
        (2, 1, 1) => vec![row(0, vec![]), row(0, vec![m - 1])],
        (2, 1, 2) => vec![row(1, vec![m]), row(1, vec![])],
        (3, 1, 1) => vec![row(0, vec![]), row(0, vec![m - 1, m]), row(0, vec![m - 1])],
        (3, 2, 2) => vec![row(2, vec![m]), row(2, vec![m, 0]), row(2, vec![])],
        (3, 1, 3) => vec![row(0, vec![]), row(0, vec![0, 1]), row(0, vec![0])],
        (3, 2, 1) => vec![row(2, vec![m]), row(2, vec![m, 0]), row(2, vec![])],
        (3, 1, 2) => vec![row(0, vec![]), row(0, vec![0, 0]), row(0, vec![0])],
        (3, 2, 3) if m >= 2 => vec![row(2, vec![1]), row(2, vec![1, m]), row(2, vec![])],
        (n, 1, 1) => {
            let mut rows = vec![row(0, vec![])];
            for j in 2..=n {
                let mut word = vec![m - 1];
                word.extend(std::iter::repeat(m).take(n - j));
                rows.push(RecipeRow { base: 0, word });
            }
            rows
        }
        _ => return Err(Error::UnsupportedGauge(describe())),
    };
    Ok(GaugeRecipe { rows })
}

/// Assemble the gauge matrix from the recipe and the matrix's own
/// coefficient slots.
pub fn gauge_matrix(t: &PolyMatrix, recipe: &GaugeRecipe) -> ScalarMat {
    let n = t.n;
    let mode = t.mode;
    let mut s = ScalarMat::zero(n, mode);
    for (j, rr) in recipe.rows.iter().enumerate() {
        let mut v: Vec<Scalar> = (0..n)
            .map(|c| if c == rr.base { Scalar::one(mode) } else { Scalar::zero(mode) })
            .collect();
        for &p in &rr.word {
            let cmat = t.coefficient_matrix(p);
            v = row_times(&v, &cmat);
        }
        for (c, val) in v.into_iter().enumerate() {
            s.set(j, c, val);
        }
    }
    s
}

fn row_times(v: &[Scalar], mat: &ScalarMat) -> Vec<Scalar> {
    let n = mat.n;
    let mut out = vec![Scalar::zero(mat.mode); n];
    for c in 0..n {
        for (k, vk) in v.iter().enumerate() {
            if vk.is_zero() {
                continue;
            }
            out[c] = out[c].add(&vk.mul(mat.get(k, c)));
        }
    }
    out
}

/// Conjugate by the recipe's gauge: returns the transformed matrix and the
/// gauge used.
pub fn apply_gauge(t: &PolyMatrix, class: &MonodromyClass) -> Result<(PolyMatrix, ScalarMat)> {
    let recipe = gauge_recipe(class)?;
    let s = gauge_matrix(t, &recipe);
    let s_inv = s.inverse()?;
    let m = t.mul_const_left(&s).mul_const_right(&s_inv);
    Ok((m, s))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Cell {
    Zero,
    One,
    Free,
}

#[derive(Clone, Debug)]
pub struct SlotPattern {
    pub power: usize,
    /// Row-major, size n*n.
    pub cells: Vec<Cell>,
}

fn cells(text: &str) -> Vec<Cell> {
    text.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Cell::Zero,
            '1' => Cell::One,
            '*' => Cell::Free,
            other => panic!("bad pattern cell {:?}", other),
        })
        .collect()
}

/// Slot patterns the gauged matrix must show, where established: all size-2
/// classes, and size-3 classes of degree at least two.  Slots not listed are
/// unconstrained.
pub fn eta_patterns(class: &MonodromyClass) -> Option<Vec<SlotPattern>> {
    let m = class.m;
    let pat = |power: usize, text: &str| SlotPattern { power, cells: cells(text) };
    let list = match (class.n, class.n1, class.n2) {
        (2, 1, 1) => vec![pat(m, "00 **"), pat(m - 1, "01 **")],
        (2, 1, 2) => vec![pat(m, "*0 10"), pat(0, "0* 00")],
        (3, _, _) if m < 2 => return None,
        (3, 1, 1) => vec![pat(m, "000 *** 010"), pat(m - 1, "001 *** ***")],
        (3, 2, 2) => vec![pat(m, "000 *00 100"), pat(0, "010 00* 000")],
        (3, 1, 3) => vec![pat(m, "000 *** ***"), pat(1, "*** *** 010"), pat(0, "001 000 000")],
        (3, 2, 1) => vec![pat(m, "000 *00 100"), pat(0, "010 *** 00*")],
        (3, 1, 2) => vec![pat(m, "000 *** ***"), pat(0, "001 000 010")],
        (3, 2, 3) => vec![pat(m, "010 000 0*0"), pat(1, "*** *** 100"), pat(0, "000 00* 000")],
        _ => return None,
    };
    let mut powers: Vec<usize> = list.iter().map(|p| p.power).collect();
    powers.sort_unstable();
    powers.dedup();
    if powers.len() < list.len() {
        return None;
    }
    Some(list)
}

/// Check a gauged matrix against the slot patterns for its class.  Returns
/// false when no pattern is established for the class, true after a passing
/// check; exact entries are compared exactly, float entries to a relative
/// tolerance.
pub fn eta_pattern_check(mat: &PolyMatrix, class: &MonodromyClass) -> Result<bool> {
    let pats = match eta_patterns(class) {
        None => return Ok(false),
        Some(p) => p,
    };
    let n = mat.n;
    let scale = (0..n * n)
        .flat_map(|i| {
            let r = i / n;
            let c = i % n;
            mat.get(r, c).coeffs().iter().map(|s| s.to_complex().norm()).collect::<Vec<_>>()
        })
        .fold(0.0f64, f64::max)
        .max(1.0);
    let tol = 1e-9 * scale;
    for p in &pats {
        let cmat = mat.coefficient_matrix(p.power);
        for r in 0..n {
            for c in 0..n {
                let v = cmat.get(r, c);
                let ok = match (p.cells[r * n + c], mat.mode) {
                    (Cell::Free, _) => true,
                    (Cell::Zero, Mode::Exact) => v.is_zero(),
                    (Cell::One, Mode::Exact) => v.is_one(),
                    (Cell::Zero, Mode::Float) => v.to_complex().norm() <= tol,
                    (Cell::One, Mode::Float) => {
                        (v.to_complex() - Complex64::new(1.0, 0.0)).norm() <= tol
                    }
                };
                if !ok {
                    return Err(Error::Internal(format!(
                        "gauged matrix breaks the slot pattern at power {} cell ({}, {})",
                        p.power, r, c
                    )));
                }
            }
        }
    }
    Ok(true)
}

/// Spectral invariants of two matrices compared coefficient by coefficient:
/// exactly in exact mode, to a relative tolerance in float mode.
pub fn invariants_match(a: &PolyMatrix, b: &PolyMatrix, tol: f64) -> Result<()> {
    let fa = a.char_coeffs()?;
    let fb = b.char_coeffs()?;
    let scale = fa
        .iter()
        .chain(fb.iter())
        .map(|p| p.max_abs())
        .fold(0.0f64, f64::max)
        .max(1.0);
    for (i, (pa, pb)) in fa.iter().zip(fb.iter()).enumerate() {
        let diff = pa.sub(pb);
        let bad = match a.mode {
            Mode::Exact => !diff.is_zero(),
            Mode::Float => diff.max_abs() > tol * scale,
        };
        if bad {
            return Err(Error::Internal(format!(
                "invariant {} changed under the gauge transformation",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Free coefficient positions (power, row, column) of the class family.
pub fn transfer_params(class: &MonodromyClass) -> Vec<(usize, usize, usize)> {
    let n = class.n;
    let mut out = Vec::new();
    for (p, mask) in class.slot_masks().iter().enumerate() {
        for i in 0..n * n {
            if mask[i] {
                out.push((p, i / n, i % n));
            }
        }
    }
    out
}

/// Free coefficient positions of the gauged family: every slot cell except
/// those pinned by the patterns.
pub fn eta_free_params(class: &MonodromyClass) -> Option<Vec<(usize, usize, usize)>> {
    let pats = eta_patterns(class)?;
    let n = class.n;
    let mut out = Vec::new();
    for p in 0..=class.m {
        let pat = pats.iter().find(|q| q.power == p);
        for i in 0..n * n {
            let free = match pat {
                None => true,
                Some(q) => q.cells[i] == Cell::Free,
            };
            if free {
                out.push((p, i / n, i % n));
            }
        }
    }
    Some(out)
}

/// Entries of w I - M as polynomials in both variables.
fn char_entries(mat: &PolyMatrix) -> Vec<BiPoly> {
    let n = mat.n;
    let mode = mat.mode;
    let mut out = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            let mut p = BiPoly::zero(mode);
            for (k, coef) in mat.get(r, c).coeffs().iter().enumerate() {
                p.insert((k as u32, 0), coef.neg()).expect("uniform mode");
            }
            if r == c {
                p.insert((0, 1), Scalar::one(mode)).expect("uniform mode");
            }
            out.push(p);
        }
    }
    out
}

fn bipoly_minor_det(entries: &[BiPoly], n: usize, rows: &[usize], cols: &[usize], mode: Mode) -> BiPoly {
    if rows.is_empty() {
        let mut one = BiPoly::zero(mode);
        one.insert((0, 0), Scalar::one(mode)).expect("uniform mode");
        return one;
    }
    let mut acc = BiPoly::zero(mode);
    let r0 = rows[0];
    for (j, &c0) in cols.iter().enumerate() {
        let e = &entries[r0 * n + c0];
        if e.is_zero() {
            continue;
        }
        let sub_rows: Vec<usize> = rows[1..].to_vec();
        let sub_cols: Vec<usize> = cols.iter().copied().filter(|&c| c != c0).collect();
        let term = e.mul(&bipoly_minor_det(entries, n, &sub_rows, &sub_cols, mode));
        acc = if j % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
    }
    acc
}

/// Adjugate of w I - M, row-major.
pub fn char_adjugate(mat: &PolyMatrix) -> Vec<BiPoly> {
    let n = mat.n;
    let entries = char_entries(mat);
    let mut out = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            let rows: Vec<usize> = (0..n).filter(|&x| x != c).collect();
            let cols: Vec<usize> = (0..n).filter(|&x| x != r).collect();
            let minor = bipoly_minor_det(&entries, n, &rows, &cols, mat.mode);
            let sign = if (r + c) % 2 == 0 { 1 } else { -1 };
            out.push(minor.scale(&Scalar::from_int(sign, mat.mode)));
        }
    }
    out
}

/// Rows of the Jacobian of the curve coefficients with respect to the given
/// matrix coefficients: the derivative in the (power, r, c) coefficient is
/// minus the (c, r) adjugate entry times that power of z.
pub fn invariant_jacobian_rows(
    mat: &PolyMatrix,
    params: &[(usize, usize, usize)],
) -> Vec<Vec<Complex64>> {
    let n = mat.n;
    let adj = char_adjugate(mat);
    let mut support = std::collections::BTreeMap::new();
    let derivs: Vec<BiPoly> = params
        .iter()
        .map(|&(p, r, c)| {
            let base = adj[c * n + r].neg();
            let mut shifted = BiPoly::zero(mat.mode);
            for (&(a, b), coef) in base.terms() {
                shifted.insert((a + p as u32, b), coef.clone()).expect("uniform mode");
            }
            shifted
        })
        .collect();
    for d in &derivs {
        for (&k, _) in d.terms() {
            let next = support.len();
            support.entry(k).or_insert(next);
        }
    }
    derivs
        .iter()
        .map(|d| {
            let mut row = vec![Complex64::new(0.0, 0.0); support.len()];
            for (k, coef) in d.terms() {
                row[support[k]] = coef.to_complex();
            }
            row
        })
        .collect()
}

/// Dimension of the level set of the invariant map through a generic member
/// of the class family.  The coefficient draws are discrete, so a single
/// sample can land on a rank-drop coincidence; the minimum over a few draws
/// is the generic value.
pub fn transfer_level_dim<R: Rng>(class: &MonodromyClass, rng: &mut R) -> Result<usize> {
    let params = transfer_params(class);
    let mut dim = None;
    for _ in 0..3 {
        let t = random_instance_generic(class, Mode::Float, rng)?;
        let rows = invariant_jacobian_rows(&t, &params);
        let d = params.len() - complex_rank(rows, 1e-8);
        dim = Some(dim.map_or(d, |b: usize| b.min(d)));
    }
    Ok(dim.expect("at least one draw"))
}

/// Dimension of the level set inside the gauged family, using the pattern's
/// own free cells as coordinates.  None when no pattern is established.
/// Minimized over a few draws for the same reason as the transfer-level
/// count.
pub fn gauged_level_dim_direct<R: Rng>(
    class: &MonodromyClass,
    rng: &mut R,
) -> Result<Option<usize>> {
    let params = match eta_free_params(class) {
        None => return Ok(None),
        Some(p) => p,
    };
    let mut dim = None;
    for _ in 0..3 {
        let t = random_instance_generic(class, Mode::Float, rng)?;
        let (m, _) = apply_gauge(&t, class)?;
        let rows = invariant_jacobian_rows(&m, &params);
        let d = params.len() - complex_rank(rows, 1e-8);
        dim = Some(dim.map_or(d, |b: usize| b.min(d)));
    }
    Ok(Some(dim.expect("at least one draw")))
}

fn poly_sub(a: &PolyMatrix, b: &PolyMatrix) -> PolyMatrix {
    let mut out = PolyMatrix::zero(a.n, a.mode);
    for r in 0..a.n {
        for c in 0..a.n {
            out.set(r, c, a.get(r, c).sub(b.get(r, c)));
        }
    }
    out
}

fn matrix_from_param(
    n: usize,
    top: usize,
    p: usize,
    r: usize,
    c: usize,
    weight: Complex64,
) -> PolyMatrix {
    let mut out = PolyMatrix::zero(n, Mode::Float);
    let mut coeffs = vec![Scalar::zero(Mode::Float); top + 1];
    coeffs[p] = Scalar::Float(weight);
    out.set(r, c, UniPoly::new(Mode::Float, 'z', coeffs).expect("uniform mode"));
    out
}

/// Derivative of the gauge matrix along one coefficient direction, by the
/// product rule over each recipe word.
fn gauge_matrix_derivative(
    t: &PolyMatrix,
    recipe: &GaugeRecipe,
    p: usize,
    r: usize,
    c: usize,
) -> ScalarMat {
    let n = t.n;
    let mode = t.mode;
    let mut out = ScalarMat::zero(n, mode);
    for (j, rr) in recipe.rows.iter().enumerate() {
        let mut acc = vec![Scalar::zero(mode); n];
        for (i, &s) in rr.word.iter().enumerate() {
            if s != p {
                continue;
            }
            // prefix up to position i
            let mut v: Vec<Scalar> = (0..n)
                .map(|k| if k == rr.base { Scalar::one(mode) } else { Scalar::zero(mode) })
                .collect();
            for &q in &rr.word[..i] {
                v = row_times(&v, &t.coefficient_matrix(q));
            }
            // the unit direction at (r, c) routes component r to slot c
            let mut w = vec![Scalar::zero(mode); n];
            w[c] = v[r].clone();
            for &q in &rr.word[i + 1..] {
                w = row_times(&w, &t.coefficient_matrix(q));
            }
            for k in 0..n {
                acc[k] = acc[k].add(&w[k]);
            }
        }
        for (k, val) in acc.into_iter().enumerate() {
            out.set(j, k, val);
        }
    }
    out
}

/// Dimension of the image of the level-set tangent space under the gauge
/// map: directions that keep the invariants fixed, pushed through the
/// conjugation, counted after collapse.
pub fn gauged_level_dim_pushforward<R: Rng>(
    class: &MonodromyClass,
    rng: &mut R,
) -> Result<usize> {
    let params = transfer_params(class);
    // keep the draw with the highest invariant-Jacobian rank; discrete
    // coefficient draws occasionally land on rank-drop coincidences
    let mut best: Option<(usize, PolyMatrix)> = None;
    for _ in 0..3 {
        let cand = random_instance_generic(class, Mode::Float, rng)?;
        let r = complex_rank(invariant_jacobian_rows(&cand, &params), 1e-8);
        if best.as_ref().map_or(true, |(br, _)| r > *br) {
            best = Some((r, cand));
        }
    }
    let t = best.expect("at least one draw").1;
    let recipe = gauge_recipe(class)?;
    let s = gauge_matrix(&t, &recipe);
    let s_inv = s.inverse()?;
    let m = t.mul_const_left(&s).mul_const_right(&s_inv);
    let jrows = invariant_jacobian_rows(&t, &params);
    // transpose: one equation per curve coefficient
    let ncols = jrows.first().map(|r| r.len()).unwrap_or(0);
    let eqs: Vec<Vec<Complex64>> = (0..ncols)
        .map(|c| jrows.iter().map(|row| row[c]).collect())
        .collect();
    let kernel = complex_null_space(&eqs, 1e-8);
    let top = class.m;
    let mut pushed = Vec::new();
    for x in &kernel {
        let mut dt = PolyMatrix::zero(t.n, Mode::Float);
        let mut ds = ScalarMat::zero(t.n, Mode::Float);
        for (k, &(p, r, c)) in params.iter().enumerate() {
            if x[k].norm() == 0.0 {
                continue;
            }
            dt = dt.add(&matrix_from_param(t.n, top, p, r, c, x[k]));
            let dsk = gauge_matrix_derivative(&t, &recipe, p, r, c);
            let mut scaled = ScalarMat::zero(t.n, Mode::Float);
            for rr in 0..t.n {
                for cc in 0..t.n {
                    scaled.set(rr, cc, dsk.get(rr, cc).mul(&Scalar::Float(x[k])));
                }
            }
            let mut sum = ScalarMat::zero(t.n, Mode::Float);
            for rr in 0..t.n {
                for cc in 0..t.n {
                    sum.set(rr, cc, ds.get(rr, cc).add(scaled.get(rr, cc)));
                }
            }
            ds = sum;
        }
        let ds_sinv = ds.mul(&s_inv);
        let conjugated = dt.mul_const_left(&s).mul_const_right(&s_inv);
        let left = m.mul_const_left(&ds_sinv);
        let right = m.mul_const_right(&ds_sinv);
        let dm = poly_sub(&conjugated.add(&left), &right);
        let mut flat = Vec::with_capacity(t.n * t.n * (top + 1));
        for r in 0..t.n {
            for c in 0..t.n {
                for p in 0..=top {
                    flat.push(dm.get(r, c).coeff(p).to_complex());
                }
            }
        }
        pushed.push(flat);
    }
    Ok(complex_rank(pushed, 1e-8))
}
