//! Separated variables for the monodromy family: the separating polynomial
//! B(z), the paired eigenvalue w(z_i), divisor extraction with on-curve
//! residuals, a numeric probe of the canonical bracket relations, and the
//! straight-line (Abel velocity) test along a flow.

use num_complex::Complex64;

use crate::bracket::{BracketStructure, LaurentPoly, ProductLink};
use crate::error::{Error, Result};
use crate::flow::Trajectory;
use crate::linalg::complex_null_space;
use crate::lv::{predicted_genus, LvModel};
use crate::monodromy::{chain_transfer, MonodromyClass};
use crate::poly::{PolyMatrix, UniPoly};
use crate::roots::all_roots;
use crate::scalar::Scalar;
use crate::sympoly::{SymMatrix, SymPoly};

/// Which unit vector normalizes the eigenvector.  The first-row choice kills
/// the leading component, the last-row choice the trailing one; which of the
/// two produces a separating polynomial with exactly g nontrivial roots
/// depends on the corner blocks of the class.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Normalization {
    FirstRow,
    LastRow,
}

pub fn normalization_for(class: &MonodromyClass) -> Result<Normalization> {
    match class.n {
        2 => Ok(if class.n2 == 1 { Normalization::FirstRow } else { Normalization::LastRow }),
        3 => Ok(if class.n1 == 1 { Normalization::FirstRow } else { Normalization::LastRow }),
        _ if class.n1 == 1 && class.n2 == 1 => Ok(Normalization::FirstRow),
        _ => Err(Error::UnsupportedGauge(format!(
            "size {} class ({};{},{}) has no verified normalization",
            class.n, class.m, class.n1, class.n2
        ))),
    }
}

// The same determinant assembly runs over symbolic entries, univariate
// numeric polynomials, and first-order jets, so the small amount of algebra
// they share lives behind one trait.
trait Ring: Clone {
    fn radd(&self, o: &Self) -> Self;
    fn rsub(&self, o: &Self) -> Self;
    fn rmul(&self, o: &Self) -> Self;
}

impl Ring for SymPoly {
    fn radd(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn rsub(&self, o: &Self) -> Self {
        self.sub(o)
    }
    fn rmul(&self, o: &Self) -> Self {
        self.mul(o)
    }
}

impl Ring for UniPoly {
    fn radd(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn rsub(&self, o: &Self) -> Self {
        self.sub(o)
    }
    fn rmul(&self, o: &Self) -> Self {
        self.mul(o)
    }
}

fn laplace_det<T: Ring>(rows: &[Vec<T>], zero: &T) -> T {
    let k = rows.len();
    if k == 1 {
        return rows[0][0].clone();
    }
    let mut acc = zero.clone();
    for (j, pivot) in rows[0].iter().enumerate() {
        let minor: Vec<Vec<T>> = rows[1..]
            .iter()
            .map(|r| {
                r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, e)| e.clone()).collect()
            })
            .collect();
        let term = pivot.rmul(&laplace_det(&minor, zero));
        acc = if j % 2 == 0 { acc.radd(&term) } else { acc.rsub(&term) };
    }
    acc
}

// Rows b, b d, ..., b d^(k-1) of the Krylov chain generated by the border
// vector against the complementary block.
fn krylov_rows<T: Ring>(b: Vec<T>, d: &[Vec<T>], zero: &T) -> Vec<Vec<T>> {
    let k = b.len();
    let mut rows = vec![b];
    for _ in 1..k {
        let prev = rows.last().unwrap();
        let mut next = Vec::with_capacity(k);
        for j in 0..k {
            let mut acc = zero.clone();
            for i in 0..k {
                acc = acc.radd(&prev[i].rmul(&d[i][j]));
            }
            next.push(acc);
        }
        rows.push(next);
    }
    rows
}

// Border vector and complementary block for the chosen normalization: the
// first-row split takes row 0 against the lower-right block, the last-row
// split takes the bottom row against the upper-left block.
fn split_blocks<T, F: Fn(usize, usize) -> T>(
    n: usize,
    norm: Normalization,
    get: F,
) -> (Vec<T>, Vec<Vec<T>>) {
    match norm {
        Normalization::FirstRow => {
            let b = (1..n).map(|j| get(0, j)).collect();
            let d = (1..n).map(|i| (1..n).map(|j| get(i, j)).collect()).collect();
            (b, d)
        }
        Normalization::LastRow => {
            let b = (0..n - 1).map(|j| get(n - 1, j)).collect();
            let d = (0..n - 1).map(|i| (0..n - 1).map(|j| get(i, j)).collect()).collect();
            (b, d)
        }
    }
}

fn separating_det<T: Ring>(n: usize, norm: Normalization, zero: &T, get: impl Fn(usize, usize) -> T) -> T {
    let (b, d) = split_blocks(n, norm, get);
    let rows = krylov_rows(b, &d, zero);
    laplace_det(&rows, zero)
}

// Closed eigenvalue ratio w = num/den at a root of B, available for sizes 2
// and 3.  At a root the border vector is annihilated by one eigendirection
// of the block; w is that eigenvalue, and for these sizes it collapses to a
// ratio of entry products.
fn eigen_ratio<T: Ring>(
    n: usize,
    norm: Normalization,
    one: &T,
    get: impl Fn(usize, usize) -> T,
) -> Option<(T, T)> {
    match (n, norm) {
        (2, Normalization::FirstRow) => Some((get(1, 1), one.clone())),
        (2, Normalization::LastRow) => Some((get(0, 0), one.clone())),
        (3, Normalization::FirstRow) => {
            let num = get(0, 1).rmul(&get(2, 2)).rsub(&get(0, 2).rmul(&get(2, 1)));
            Some((num, get(0, 1)))
        }
        (3, Normalization::LastRow) => {
            let num = get(0, 0).rmul(&get(2, 1)).rsub(&get(0, 1).rmul(&get(2, 0)));
            Some((num, get(2, 1)))
        }
        _ => None,
    }
}

/// Separating polynomial and eigenvalue ratio as symbolic data.  The ratio
/// is absent for sizes past 3, where the eigenvalue is picked numerically.
pub struct SeparationParts {
    pub normalization: Normalization,
    pub b: SymPoly,
    pub w_num: Option<SymPoly>,
    pub w_den: Option<SymPoly>,
}

pub fn separation_parts(t: &SymMatrix, class: &MonodromyClass) -> Result<SeparationParts> {
    let norm = normalization_for(class)?;
    let nv = t.get(0, 0).coeff(0).nvars;
    let zero = SymPoly::zero(nv);
    let one = SymPoly::constant(LaurentPoly::one(nv));
    let b = separating_det(class.n, norm, &zero, |r, c| t.get(r, c).clone());
    let ratio = eigen_ratio(class.n, norm, &one, |r, c| t.get(r, c).clone());
    let (w_num, w_den) = match ratio {
        Some((num, den)) => (Some(num), Some(den)),
        None => (None, None),
    };
    Ok(SeparationParts { normalization: norm, b, w_num, w_den })
}

struct PolyParts {
    normalization: Normalization,
    b: UniPoly,
    w_num: Option<UniPoly>,
    w_den: Option<UniPoly>,
}

fn separation_parts_poly(t: &PolyMatrix, class: &MonodromyClass) -> Result<PolyParts> {
    let norm = normalization_for(class)?;
    let mode = t.mode;
    let zero = UniPoly::zero(mode);
    let one = UniPoly::constant(Scalar::one(mode));
    let b = separating_det(class.n, norm, &zero, |r, c| t.get(r, c).clone());
    let ratio = eigen_ratio(class.n, norm, &one, |r, c| t.get(r, c).clone());
    let (w_num, w_den) = match ratio {
        Some((num, den)) => (Some(num), Some(den)),
        None => (None, None),
    };
    Ok(PolyParts { normalization: norm, b, w_num, w_den })
}

#[derive(Clone, Copy, Debug)]
pub struct DivisorPoint {
    pub z: Complex64,
    pub w: Complex64,
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

fn horner_deriv(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = acc * z + c * (k as f64);
    }
    acc
}

// A couple of Newton corrections on the full polynomial; the solver hands
// back roots of the deflated body, which lose a little accuracy when the
// trivial factor z^f is split off.
fn polish_root(coeffs: &[Complex64], mut z: Complex64) -> Complex64 {
    for _ in 0..3 {
        let d = horner_deriv(coeffs, z);
        if d.norm() == 0.0 {
            break;
        }
        let step = horner(coeffs, z) / d;
        z -= step;
        if step.norm() <= 1e-15 * z.norm().max(1.0) {
            break;
        }
    }
    z
}

fn sort_points(points: &mut [DivisorPoint]) {
    points.sort_by(|a, b| {
        a.z.re.total_cmp(&b.z.re).then(a.z.im.total_cmp(&b.z.im)).then(a.w.re.total_cmp(&b.w.re))
    });
}

/// Divisor of a realized matrix: the nontrivial roots of B(z) paired with
/// the eigenvalue singled out by the normalization.  The root count must
/// match the genus of the class; fewer means the coefficients are
/// degenerate, and such instances are rejected rather than padded.
pub fn divisor_of_matrix(t: &PolyMatrix, class: &MonodromyClass, tol: f64) -> Result<Vec<DivisorPoint>> {
    let parts = separation_parts_poly(t, class)?;
    let coeffs = parts.b.to_complex_coeffs();
    let roots = all_roots(&coeffs, 1e-13)?;
    let mut zs: Vec<Complex64> = roots
        .into_iter()
        .filter(|z| z.norm() > 0.0)
        .map(|z| polish_root(&coeffs, z))
        .collect();
    if let Some(g) = predicted_genus(class) {
        if zs.len() != g {
            return Err(Error::DegenerateCoefficients(format!(
                "separating polynomial has {} nontrivial roots, genus is {}",
                zs.len(),
                g
            )));
        }
    }
    zs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut points = Vec::with_capacity(zs.len());
    for z in zs {
        let w = match (&parts.w_num, &parts.w_den) {
            (Some(num), Some(den)) => {
                let nc = num.to_complex_coeffs();
                let dc = den.to_complex_coeffs();
                let dv = horner(&dc, z);
                let scale = dc.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
                if dv.norm() <= tol * scale {
                    return Err(Error::NonGenericPoint(format!(
                        "eigenvalue denominator vanishes at z = {}",
                        z
                    )));
                }
                horner(&nc, z) / dv
            }
            _ => eigen_select(t, z, parts.normalization)?,
        };
        points.push(DivisorPoint { z, w });
    }
    sort_points(&mut points);
    Ok(points)
}

// Eigenvalue selection for sizes without a closed ratio: among the
// eigenvalues of the complementary block, exactly one has its eigenvector
// orthogonal to the border vector at a root of B; that one is the paired w.
fn eigen_select(t: &PolyMatrix, z: Complex64, norm: Normalization) -> Result<Complex64> {
    let n = t.n;
    let at = |r: usize, c: usize| horner(&t.get(r, c).to_complex_coeffs(), z);
    let (b, d) = split_blocks(n, norm, at);
    let k = b.len();
    let eigs = {
        // Faddeev-LeVerrier characteristic coefficients of the block.
        let mut cs = vec![Complex64::new(1.0, 0.0)];
        let mut m = vec![vec![Complex64::new(0.0, 0.0); k]; k];
        for j in 1..=k {
            for (r, row) in m.iter_mut().enumerate() {
                row[r] += cs[j - 1];
            }
            let am: Vec<Vec<Complex64>> = (0..k)
                .map(|r| (0..k).map(|c| (0..k).map(|s| d[r][s] * m[s][c]).sum()).collect())
                .collect();
            let tr: Complex64 = (0..k).map(|r| am[r][r]).sum();
            cs.push(-tr / j as f64);
            m = am;
        }
        cs.reverse();
        all_roots(&cs, 1e-13)?
    };
    let bnorm = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
    let mut scored: Vec<(f64, Complex64)> = Vec::with_capacity(k);
    for lam in eigs {
        let rows: Vec<Vec<Complex64>> = (0..k)
            .map(|r| {
                (0..k)
                    .map(|c| if r == c { d[r][c] - lam } else { d[r][c] })
                    .collect()
            })
            .collect();
        let kernel = complex_null_space(&rows, 1e-8);
        let Some(v) = kernel.first() else {
            continue;
        };
        let vnorm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
        let dot: Complex64 = b.iter().zip(v).map(|(a, x)| a * x).sum();
        scored.push((dot.norm() / (bnorm * vnorm), lam));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    match scored.as_slice() {
        [] => Err(Error::NonGenericPoint("no eigenvector found at separation root".into())),
        [(best, lam)] => {
            if *best <= 1e-5 {
                Ok(*lam)
            } else {
                Err(Error::NonGenericPoint(format!(
                    "no eigenvector annihilates the border vector (score {:.2e})",
                    best
                )))
            }
        }
        [(best, lam), (second, _), ..] => {
            if *best <= 1e-5 && *second >= 50.0 * *best {
                Ok(*lam)
            } else {
                Err(Error::NonGenericPoint(format!(
                    "ambiguous eigenvector selection (scores {:.2e}, {:.2e})",
                    best, second
                )))
            }
        }
    }
}

fn jet_zero(nv: usize) -> Jet {
    Jet { val: Complex64::new(0.0, 0.0), dz: Complex64::new(0.0, 0.0), grad: vec![Complex64::new(0.0, 0.0); nv] }
}

#[derive(Clone)]
struct Jet {
    val: Complex64,
    dz: Complex64,
    grad: Vec<Complex64>,
}

impl Ring for Jet {
    fn radd(&self, o: &Self) -> Self {
        Jet {
            val: self.val + o.val,
            dz: self.dz + o.dz,
            grad: self.grad.iter().zip(&o.grad).map(|(a, b)| a + b).collect(),
        }
    }
    fn rsub(&self, o: &Self) -> Self {
        Jet {
            val: self.val - o.val,
            dz: self.dz - o.dz,
            grad: self.grad.iter().zip(&o.grad).map(|(a, b)| a - b).collect(),
        }
    }
    fn rmul(&self, o: &Self) -> Self {
        Jet {
            val: self.val * o.val,
            dz: self.dz * o.val + self.val * o.dz,
            grad: self
                .grad
                .iter()
                .zip(&o.grad)
                .map(|(a, b)| a * o.val + self.val * b)
                .collect(),
        }
    }
}

// Value, z-derivative and coordinate gradient of a symbolic entry at one
// point, in a single pass over its terms.
fn sym_jet(f: &SymPoly, z: Complex64, values: &[Complex64]) -> Jet {
    let nv = values.len();
    let mut out = jet_zero(nv);
    let mut zp = Complex64::new(1.0, 0.0);
    let mut zp_prev = Complex64::new(0.0, 0.0);
    for (p, lp) in f.coeffs().iter().enumerate() {
        for (exps, c) in lp.terms() {
            let mut tv = c.to_complex();
            for (m, &e) in exps.iter().enumerate() {
                if e != 0 {
                    tv *= values[m].powi(e);
                }
            }
            out.val += zp * tv;
            if p > 0 {
                out.dz += zp_prev * tv * (p as f64);
            }
            for (m, &e) in exps.iter().enumerate() {
                if e != 0 {
                    out.grad[m] += zp * tv * (e as f64) / values[m];
                }
            }
        }
        zp_prev = zp;
        zp *= z;
    }
    out
}

// Pull the gradient back through the product constraint: the linked
// variable is a function of the others with log-derivative -1/(power x_m).
fn fold_link(grad: &mut [Complex64], values: &[Complex64], link: &Option<ProductLink>) {
    if let Some(link) = link {
        let gi = grad[link.index];
        grad[link.index] = Complex64::new(0.0, 0.0);
        if gi.norm() == 0.0 {
            return;
        }
        let scale = -values[link.index] / (link.power as f64);
        for &m in &link.vars {
            grad[m] += gi * scale / values[m];
        }
    }
}

/// Pairwise brackets of the separated variables, computed by implicit
/// differentiation of B and the eigenvalue ratio through the quadratic
/// bracket of the realization.  The diagonal {z_i, w_i} is reported as a
/// multiple of z_i w_i; its magnitude is 2 for every realization in the
/// family, while its sign tracks the order the site factors are multiplied
/// in (reversing the lattice negates the bracket but keeps the same roots).
pub struct CanonicalReport {
    pub points: Vec<DivisorPoint>,
    pub zz: Vec<Vec<Complex64>>,
    pub zw: Vec<Vec<Complex64>>,
    pub ww: Vec<Vec<Complex64>>,
    pub pair_scale: f64,
    pub diagonal_constant: Complex64,
}

impl CanonicalReport {
    fn off_scale(points: &[DivisorPoint], f: impl Fn(&DivisorPoint) -> f64) -> f64 {
        2.0 * points.iter().map(|p| f(p)).fold(0.0, f64::max).powi(2).max(1e-300)
    }

    pub fn zz_rel(&self) -> f64 {
        let s = Self::off_scale(&self.points, |p| p.z.norm());
        self.zz.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max) / s
    }

    pub fn ww_rel(&self) -> f64 {
        let s = Self::off_scale(&self.points, |p| p.w.norm());
        self.ww.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max) / s
    }

    /// Worst deviation of {z_i, w_j} from c δ_ij z_i w_i, relative to the
    /// largest diagonal scale.
    pub fn conjugacy_residual(&self, c: f64) -> f64 {
        let g = self.points.len();
        let mut worst = 0.0f64;
        for i in 0..g {
            for j in 0..g {
                let target = if i == j {
                    self.points[i].z * self.points[i].w * c
                } else {
                    Complex64::new(0.0, 0.0)
                };
                worst = worst.max((self.zw[i][j] - target).norm());
            }
        }
        worst / self.pair_scale
    }
}

pub fn canonical_bracket_report(
    t: &SymMatrix,
    class: &MonodromyClass,
    st: &BracketStructure,
    values: &[Complex64],
    tol: f64,
) -> Result<CanonicalReport> {
    let n = class.n;
    if n > 3 {
        return Err(Error::UnsupportedGauge(
            "bracket probe needs the closed eigenvalue ratio of sizes 2 and 3".into(),
        ));
    }
    let norm = normalization_for(class)?;
    let t_num = t.eval_float(values);
    let points = divisor_of_matrix(&t_num, class, tol)?;
    let nv = values.len();
    let g = points.len();

    // Total z- and w-gradients per divisor point, with the root moving as
    // the coordinates move: dz_i/dx_m = -(dB/dx_m)/(dB/dz) at z_i.
    let mut zgrads: Vec<Vec<Complex64>> = Vec::with_capacity(g);
    let mut wgrads: Vec<Vec<Complex64>> = Vec::with_capacity(g);
    for p in &points {
        let jets: Vec<Vec<Jet>> =
            (0..n).map(|r| (0..n).map(|c| sym_jet(t.get(r, c), p.z, values)).collect()).collect();
        let zero = jet_zero(nv);
        let one = Jet { val: Complex64::new(1.0, 0.0), ..jet_zero(nv) };
        let mut bj = separating_det(n, norm, &zero, |r, c| jets[r][c].clone());
        let (mut numj, mut denj) = eigen_ratio(n, norm, &one, |r, c| jets[r][c].clone())
            .expect("closed ratio exists for sizes 2 and 3");
        fold_link(&mut bj.grad, values, &st.link);
        fold_link(&mut numj.grad, values, &st.link);
        fold_link(&mut denj.grad, values, &st.link);

        let bscale = bj.grad.iter().map(|v| v.norm()).fold(bj.dz.norm(), f64::max).max(1e-300);
        if bj.dz.norm() <= 1e-9 * bscale {
            return Err(Error::NonGenericPoint(format!(
                "near-multiple separation root at z = {}: |dB/dz| too small",
                p.z
            )));
        }
        let zg: Vec<Complex64> = bj.grad.iter().map(|gm| -gm / bj.dz).collect();

        let den2 = denj.val * denj.val;
        let wz = (numj.dz * denj.val - numj.val * denj.dz) / den2;
        let wg: Vec<Complex64> = (0..nv)
            .map(|m| {
                let partial = (numj.grad[m] * denj.val - numj.val * denj.grad[m]) / den2;
                partial + wz * zg[m]
            })
            .collect();
        zgrads.push(zg);
        wgrads.push(wg);
    }

    let couplings: Vec<(usize, usize, f64)> = (0..nv)
        .flat_map(|a| (0..nv).map(move |b| (a, b)))
        .filter_map(|(a, b)| {
            let c = st.coupling(a, b);
            if c == 0 {
                None
            } else {
                Some((a, b, c as f64))
            }
        })
        .collect();
    let pair = |fa: &[Complex64], fb: &[Complex64]| -> Complex64 {
        couplings
            .iter()
            .map(|&(a, b, c)| fa[a] * fb[b] * c * values[a] * values[b])
            .sum()
    };

    let zz: Vec<Vec<Complex64>> =
        (0..g).map(|i| (0..g).map(|j| pair(&zgrads[i], &zgrads[j])).collect()).collect();
    let zw: Vec<Vec<Complex64>> =
        (0..g).map(|i| (0..g).map(|j| pair(&zgrads[i], &wgrads[j])).collect()).collect();
    let ww: Vec<Vec<Complex64>> =
        (0..g).map(|i| (0..g).map(|j| pair(&wgrads[i], &wgrads[j])).collect()).collect();

    let pair_scale = points
        .iter()
        .map(|p| 2.0 * (p.z * p.w).norm())
        .fold(0.0, f64::max)
        .max(1e-300);
    let diagonal_constant = if g > 0 {
        points
            .iter()
            .enumerate()
            .map(|(i, p)| zw[i][i] / (p.z * p.w))
            .sum::<Complex64>()
            / (g as f64)
    } else {
        Complex64::new(0.0, 0.0)
    };

    Ok(CanonicalReport { points, zz, zw, ww, pair_scale, diagonal_constant })
}

/// Coordinate vector for a lattice state: the central prefactor generator
/// first, then the site variables.
pub fn lv_values(model: &LvModel, v: &[f64]) -> Result<Vec<Complex64>> {
    if v.len() != model.l {
        return Err(Error::ShapeMismatch(format!(
            "state has {} sites, period is {}",
            v.len(),
            model.l
        )));
    }
    let mut prod = 1.0f64;
    for &x in v {
        if x <= 0.0 {
            return Err(Error::NonGenericPoint("site variables must stay positive".into()));
        }
        prod *= x;
    }
    let p0 = prod.powf(-1.0 / model.n as f64);
    let mut out = Vec::with_capacity(v.len() + 1);
    out.push(Complex64::new(p0, 0.0));
    out.extend(v.iter().map(|&x| Complex64::new(x, 0.0)));
    Ok(out)
}

pub fn lv_divisor(model: &LvModel, v: &[f64], tol: f64) -> Result<Vec<DivisorPoint>> {
    let values = lv_values(model, v)?;
    divisor_of_matrix(&model.transfer.eval_float(&values), &model.class, tol)
}

pub fn lv_canonical_report(model: &LvModel, v: &[f64], tol: f64) -> Result<CanonicalReport> {
    let values = lv_values(model, v)?;
    canonical_bracket_report(&model.transfer, &model.class, &model.structure, &values, tol)
}

/// Same probe over the generic chain realization with ultralocal site
/// generators; this is the realization in which the diagonal constant is +2.
pub fn chain_canonical_report(order: usize, l: usize, gens: &[f64], tol: f64) -> Result<CanonicalReport> {
    let (st, t, class, _) = chain_transfer(order, l)?;
    if gens.len() != st.nvars() {
        return Err(Error::ShapeMismatch(format!(
            "{} generator values for {} generators",
            gens.len(),
            st.nvars()
        )));
    }
    let values: Vec<Complex64> = gens.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    canonical_bracket_report(&t, &class, &st, &values, tol)
}

/// Spectral-curve coefficients f_1..f_N at a state, as numeric polynomials.
pub fn lv_curve_polys(model: &LvModel, values: &[Complex64]) -> Vec<UniPoly> {
    model.invariants.iter().map(|f| f.to_unipoly_float(values)).collect()
}

/// Characteristic coefficients f_1..f_N of a realized matrix, by sums of
/// principal minors.
pub fn poly_char_coeffs(t: &PolyMatrix) -> Vec<UniPoly> {
    let n = t.n;
    let zero = UniPoly::zero(t.mode);
    (1..=n)
        .map(|i| {
            let mut acc = zero.clone();
            for subset in crate::sympoly::subsets_of_size(n, i) {
                let rows: Vec<Vec<UniPoly>> = subset
                    .iter()
                    .map(|&r| subset.iter().map(|&c| t.get(r, c).clone()).collect())
                    .collect();
                acc = acc.add(&laplace_det(&rows, &zero));
            }
            acc
        })
        .collect()
}

/// On-curve residual against coefficients taken straight from the matrix.
pub fn matrix_curve_residual(t: &PolyMatrix, p: &DivisorPoint) -> f64 {
    curve_residual(&poly_char_coeffs(t), p)
}

/// Relative residual of w^N - f_1 w^(N-1) + ... +- f_N at one point.
pub fn curve_residual(fs: &[UniPoly], p: &DivisorPoint) -> f64 {
    let n = fs.len();
    let mut acc = p.w.powi(n as i32);
    let mut scale = acc.norm();
    let mut sign = -1.0;
    for (i, f) in fs.iter().enumerate() {
        let term = sign * horner(&f.to_complex_coeffs(), p.z) * p.w.powi((n - 1 - i) as i32);
        acc += term;
        scale = scale.max(term.norm());
        sign = -sign;
    }
    acc.norm() / scale.max(1e-300)
}

/// Largest relative mismatch between two divisors after canonical sorting.
pub fn divisor_distance(a: &[DivisorPoint], b: &[DivisorPoint]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    for (p, q) in a.iter().zip(b) {
        worst = worst.max((p.z - q.z).norm() / p.z.norm().max(1.0));
        worst = worst.max((p.w - q.w).norm() / p.w.norm().max(1.0));
    }
    worst
}

/// Determinant test for a special divisor: the matrix of one-form numerators
/// z^a w^b evaluated at the points drops rank exactly on the theta divisor.
pub fn theta_residual(points: &[DivisorPoint], exps: &[(u32, u32)]) -> f64 {
    let g = points.len();
    assert_eq!(exps.len(), g, "one form per divisor point");
    let mut rows: Vec<Vec<Complex64>> = exps
        .iter()
        .map(|&(a, b)| {
            points.iter().map(|p| p.z.powi(a as i32) * p.w.powi(b as i32)).collect()
        })
        .collect();
    // Hadamard-style scale: product of row norms bounds |det|.
    let mut scale = 1.0f64;
    for row in &rows {
        scale *= row.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
    }
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..g {
        let (pivot_row, pivot_norm) = (k..g)
            .map(|r| (r, rows[r][k].norm()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if pivot_norm == 0.0 {
            return 0.0;
        }
        if pivot_row != k {
            rows.swap(pivot_row, k);
            det = -det;
        }
        det *= rows[k][k];
        for r in k + 1..g {
            let f = rows[r][k] / rows[k][k];
            for c in k..g {
                let sub = f * rows[k][c];
                rows[r][c] -= sub;
            }
        }
    }
    det.norm() / scale
}

pub fn theta_flag(points: &[DivisorPoint], exps: &[(u32, u32)], tol: f64) -> bool {
    theta_residual(points, exps) <= tol
}

/// Divisor trajectory along an integrated flow, tracked by nearest-root
/// matching from one sample to the next.
pub struct DivisorTrajectory {
    pub times: Vec<f64>,
    pub points: Vec<Vec<DivisorPoint>>,
    /// Sample index the trajectory was truncated at, if a collision of
    /// separation roots cut it short.
    pub truncated: Option<usize>,
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        let mut next = Vec::new();
        for p in &out {
            for v in 0..k {
                if !p.contains(&v) {
                    let mut q = p.clone();
                    q.push(v);
                    next.push(q);
                }
            }
        }
        out = next;
    }
    out
}

fn match_points(prev: &[DivisorPoint], cur: Vec<DivisorPoint>) -> Vec<DivisorPoint> {
    let g = cur.len();
    if g <= 1 || g != prev.len() {
        return cur;
    }
    if g <= 6 {
        let mut best: Option<(f64, Vec<usize>)> = None;
        for perm in permutations(g) {
            let cost: f64 =
                perm.iter().enumerate().map(|(i, &j)| (prev[i].z - cur[j].z).norm()).sum();
            if best.as_ref().map_or(true, |(c, _)| cost < *c) {
                best = Some((cost, perm));
            }
        }
        let (_, perm) = best.unwrap();
        perm.into_iter().map(|j| cur[j]).collect()
    } else {
        let mut taken = vec![false; g];
        let mut out = Vec::with_capacity(g);
        for p in prev {
            let (j, _) = cur
                .iter()
                .enumerate()
                .filter(|(j, _)| !taken[*j])
                .map(|(j, q)| (j, (p.z - q.z).norm()))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            taken[j] = true;
            out.push(cur[j]);
        }
        out
    }
}

pub fn divisor_trajectory(model: &LvModel, traj: &Trajectory, tol: f64) -> Result<DivisorTrajectory> {
    let mut times = Vec::with_capacity(traj.states.len());
    let mut points: Vec<Vec<DivisorPoint>> = Vec::with_capacity(traj.states.len());
    let mut truncated = None;
    for (idx, state) in traj.states.iter().enumerate() {
        let div = lv_divisor(model, state, tol)?;
        let zscale = div.iter().map(|p| p.z.norm()).fold(0.0, f64::max).max(1.0);
        let mut collided = false;
        for i in 0..div.len() {
            for j in i + 1..div.len() {
                if (div[i].z - div[j].z).norm() <= 1e-8 * zscale {
                    collided = true;
                }
            }
        }
        if collided {
            truncated = Some(idx);
            break;
        }
        let matched = match points.last() {
            Some(prev) => match_points(prev, div),
            None => div,
        };
        times.push(traj.times[idx]);
        points.push(matched);
    }
    Ok(DivisorTrajectory { times, points, truncated })
}

/// Flatness of the one-form velocity sums along a divisor trajectory.  For
/// each one-form numerator h the probe accumulates h(z_i, w_i) dz_i/dt over
/// the divisor, divided by the w-derivative of the curve; on a linearized
/// flow each sum is constant in time.
pub struct ProbeReport {
    pub flatness: Vec<f64>,
    pub means: Vec<Complex64>,
    pub samples: usize,
}

impl ProbeReport {
    pub fn worst(&self) -> f64 {
        self.flatness.iter().fold(0.0f64, |a, &b| a.max(b))
    }
}

pub fn abel_linearity_probe(
    model: &LvModel,
    div: &DivisorTrajectory,
    fs: &[UniPoly],
) -> Result<ProbeReport> {
    let samples = div.points.len();
    if samples < 5 {
        return Err(Error::NonGenericPoint(
            "divisor trajectory too short for central differences".into(),
        ));
    }
    let g = div.points[0].len();
    let exps = model.spectral_polygon().one_form_exponents();
    if exps.len() != g {
        return Err(Error::Internal(format!(
            "{} one-forms for genus {}",
            exps.len(),
            g
        )));
    }
    let n = model.n;
    let fcs: Vec<Vec<Complex64>> = fs.iter().map(|f| f.to_complex_coeffs()).collect();
    // dF/dw at a point, from the frozen curve coefficients.
    let fw = |p: &DivisorPoint| -> Complex64 {
        let mut acc = p.w.powi(n as i32 - 1) * (n as f64);
        let mut sign = -1.0;
        for (i, fc) in fcs.iter().enumerate().take(n - 1) {
            let k = (n - 1 - i) as f64;
            acc += sign * horner(fc, p.z) * p.w.powi(n as i32 - 2 - i as i32) * k;
            sign = -sign;
        }
        acc
    };

    let dt = div.times[1] - div.times[0];
    let mut vels: Vec<Vec<Complex64>> = vec![Vec::new(); exps.len()];
    let mut hsum = vec![0.0f64; exps.len()];
    let mut zmax = 0.0f64;
    for j in 2..samples - 2 {
        for (k, &(a, b)) in exps.iter().enumerate() {
            let mut sum = Complex64::new(0.0, 0.0);
            let mut habs = 0.0f64;
            for i in 0..g {
                let zdot = (div.points[j - 2][i].z - 8.0 * div.points[j - 1][i].z
                    + 8.0 * div.points[j + 1][i].z
                    - div.points[j + 2][i].z)
                    / (12.0 * dt);
                let p = &div.points[j][i];
                zmax = zmax.max(p.z.norm());
                let term = p.z.powi(a as i32) * p.w.powi(b as i32) / fw(p);
                habs += term.norm();
                sum += term * zdot;
            }
            hsum[k] = hsum[k].max(habs);
            vels[k].push(sum);
        }
    }
    let mut flatness = Vec::with_capacity(exps.len());
    let mut means = Vec::with_capacity(exps.len());
    for (k, vk) in vels.iter().enumerate() {
        let mean = vk.iter().sum::<Complex64>() / vk.len() as f64;
        let dev = vk.iter().map(|v| (v - mean).norm()).fold(0.0, f64::max);
        // Separation roots carry the solver's convergence noise, which the
        // difference quotient amplifies by 1/dt; deviations below that
        // floor are indistinguishable from a constant.
        let noise = 5e-12 * zmax / dt * hsum[k];
        flatness.push(if dev <= noise { 0.0 } else { dev / mean.norm().max(noise).max(1e-300) });
        means.push(mean);
    }
    Ok(ProbeReport { flatness, means, samples })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{integrate, FlowSystem, Method};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(l: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..l).map(|_| rng.gen_range(0.5..2.0)).collect()
    }

    // Period 4, size 2, V = (1,2,3,4): the separating entry works out to
    // P0 V1 (z - V3 - V4) by hand, so the single separation root sits at
    // V3 + V4 = 7 and the paired eigenvalue at -P0 V2 V3 = -6 P0.
    #[test]
    fn frozen_small_lattice_divisor() {
        let model = LvModel::build(2, 4).unwrap();
        let v = [1.0, 2.0, 3.0, 4.0];
        let div = lv_divisor(&model, &v, 1e-9).unwrap();
        assert_eq!(div.len(), 1);
        let p0 = 24.0f64.powf(-0.5);
        assert!((div[0].z - Complex64::new(7.0, 0.0)).norm() < 1e-12);
        assert!((div[0].w - Complex64::new(-6.0 * p0, 0.0)).norm() < 1e-12);
        let fs = lv_curve_polys(&model, &lv_values(&model, &v).unwrap());
        assert!(curve_residual(&fs, &div[0]) < 1e-12);
    }

    // The symbolic separating polynomial at (2,4) is linear with the exact
    // coefficients P0 V1 and -P0 V1 (V3 + V4).
    #[test]
    fn frozen_small_lattice_symbolic_parts() {
        let model = LvModel::build(2, 4).unwrap();
        let parts = separation_parts(&model.transfer, &model.class).unwrap();
        assert_eq!(parts.normalization, Normalization::FirstRow);
        assert_eq!(parts.b.degree(), Some(1));
        let nv = model.structure.nvars();
        let mono = |exps: Vec<i32>, c: i64| {
            LaurentPoly::monomial(nv, crate::scalar::GaussRat::from_int(c), exps)
        };
        let lead = mono(vec![1, 1, 0, 0, 0], 1);
        assert!(parts.b.coeff(1) == lead);
        let low = mono(vec![1, 1, 0, 1, 0], -1).add(&mono(vec![1, 1, 0, 0, 1], -1));
        assert!(parts.b.coeff(0) == low);
    }

    // The diagonal pairing constant is -2 for the lattice realization: the
    // site factors are multiplied in ascending order, and reversing the
    // lattice negates every bracket while keeping the separation roots.
    #[test]
    fn lattice_pairing_constant_is_minus_two() {
        for (n, l, seed) in [(2usize, 4usize, 11u64), (2, 6, 12), (3, 7, 13)] {
            let model = LvModel::build(n, l).unwrap();
            let v = random_state(l, seed);
            let r = lv_canonical_report(&model, &v, 1e-9).unwrap();
            assert!(r.zz_rel() < 1e-12, "({}, {}): zz {:.2e}", n, l, r.zz_rel());
            assert!(r.ww_rel() < 1e-12, "({}, {}): ww {:.2e}", n, l, r.ww_rel());
            let res = r.conjugacy_residual(-2.0);
            assert!(res < 1e-12, "({}, {}): residual {:.2e}", n, l, res);
            assert!((r.diagonal_constant + 2.0).norm() < 1e-10);
        }
    }

    // In the ultralocal chain realization the same probe lands on +2.
    #[test]
    fn chain_pairing_constant_is_plus_two() {
        for (order, l, seed) in [(2usize, 6usize, 21u64), (3, 7, 22)] {
            let (st, _, _, _) = chain_transfer(order, l).unwrap();
            let gens = random_state(st.nvars(), seed);
            let r = chain_canonical_report(order, l, &gens, 1e-9).unwrap();
            assert!(r.zz_rel() < 1e-12);
            assert!(r.ww_rel() < 1e-12);
            let res = r.conjugacy_residual(2.0);
            assert!(res < 1e-12, "chain ({}, {}): residual {:.2e}", order, l, res);
        }
    }

    #[test]
    fn divisor_on_curve_and_gauge_invariant() {
        for (n, l, seed) in [(2usize, 6usize, 31u64), (3, 7, 32)] {
            let model = LvModel::build(n, l).unwrap();
            let v = random_state(l, seed);
            let values = lv_values(&model, &v).unwrap();
            let t = model.transfer.eval_float(&values);
            let div = divisor_of_matrix(&t, &model.class, 1e-9).unwrap();
            assert_eq!(div.len(), model.genus());
            let fs = lv_curve_polys(&model, &values);
            for p in &div {
                assert!(curve_residual(&fs, p) < 1e-10);
            }

            let (gauged, _) = crate::gauge::apply_gauge(&t, &model.class).unwrap();
            let div_g = divisor_of_matrix(&gauged, &model.class, 1e-9).unwrap();
            assert!(divisor_distance(&div, &div_g) < 1e-10);

            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            let diag: Vec<Scalar> = (0..n * n)
                .map(|i| {
                    if i % (n + 1) == 0 {
                        Scalar::Float(Complex64::new(rng.gen_range(0.5..2.0), 0.0))
                    } else {
                        Scalar::zero(crate::scalar::Mode::Float)
                    }
                })
                .collect();
            let s = crate::poly::ScalarMat::new(n, diag).unwrap();
            let conj = t.mul_const_left(&s).mul_const_right(&s.inverse().unwrap());
            let div_c = divisor_of_matrix(&conj, &model.class, 1e-9).unwrap();
            assert!(divisor_distance(&div, &div_c) < 1e-10);
        }
    }

    // The numeric eigenvector selection must agree with the closed ratio
    // wherever both apply.
    #[test]
    fn eigen_selection_matches_closed_ratio() {
        let model = LvModel::build(3, 7).unwrap();
        let v = random_state(7, 41);
        let values = lv_values(&model, &v).unwrap();
        let t = model.transfer.eval_float(&values);
        let div = divisor_of_matrix(&t, &model.class, 1e-9).unwrap();
        let norm = normalization_for(&model.class).unwrap();
        for p in &div {
            let w = eigen_select(&t, p.z, norm).unwrap();
            assert!((w - p.w).norm() < 1e-8 * p.w.norm().max(1.0));
        }
    }

    // Size 4 has no closed ratio; the Krylov separating determinant and the
    // eigenvector selection carry the whole divisor, which must still land
    // on the curve with the genus-count of roots.
    #[test]
    fn size_four_chain_divisor_on_curve() {
        let (st, t, class, _) = chain_transfer(4, 12).unwrap();
        assert_eq!((class.m, class.n1, class.n2), (1, 1, 1));
        let gens = random_state(st.nvars(), 51);
        let values: Vec<Complex64> =
            gens.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let tn = t.eval_float(&values);
        let div = divisor_of_matrix(&tn, &class, 1e-9).unwrap();
        assert_eq!(div.len(), 3);
        for p in &div {
            assert!(matrix_curve_residual(&tn, p) < 1e-9);
        }
    }

    #[test]
    fn theta_flags_follow_rank() {
        // Genus one: the single numerator is the constant 1.
        let p = DivisorPoint { z: Complex64::new(3.0, 0.0), w: Complex64::new(-1.0, 0.0) };
        assert!(!theta_flag(&[p], &[(0, 0)], 1e-8));
        // Equal separation roots force the rank drop.
        let q1 = DivisorPoint { z: Complex64::new(2.0, 0.0), w: Complex64::new(1.0, 0.0) };
        let q2 = DivisorPoint { z: Complex64::new(2.0, 0.0), w: Complex64::new(-1.5, 0.0) };
        assert!(theta_flag(&[q1, q2], &[(0, 0), (1, 0)], 1e-8));
        // A generic computed divisor stays off the theta locus.
        let model = LvModel::build(2, 6).unwrap();
        let div = lv_divisor(&model, &random_state(6, 61), 1e-9).unwrap();
        let exps = model.spectral_polygon().one_form_exponents();
        assert!(!theta_flag(&div, &exps, 1e-8));
    }

    // Alternating states are fixed points of the first flow, so the divisor
    // freezes and every probe velocity is exactly zero.
    #[test]
    fn stationary_state_has_flat_probe() {
        let model = LvModel::build(2, 6).unwrap();
        let v0 = [1.3, 0.8, 1.3, 0.8, 1.3, 0.8];
        let system = FlowSystem::new(&model, 1).unwrap();
        let traj = integrate(&system, &v0, 0.2, 1e-2, Method::FixedRk4).unwrap();
        assert!(traj.aborted.is_none());
        let div = divisor_trajectory(&model, &traj, 1e-9).unwrap();
        assert!(div.truncated.is_none());
        let fs = lv_curve_polys(&model, &lv_values(&model, &v0).unwrap());
        let probe = abel_linearity_probe(&model, &div, &fs).unwrap();
        assert_eq!(probe.worst(), 0.0);
    }

    // At (2,4) the separation root is V3 + V4, whose time derivative along
    // the first flow collapses to 2 (V1 V4 - V2 V3); the tracked divisor
    // velocity must reproduce that closed form.
    #[test]
    fn probe_velocity_matches_closed_form() {
        let model = LvModel::build(2, 4).unwrap();
        let v0 = [1.0, 2.0, 3.0, 4.0];
        let system = FlowSystem::new(&model, 1).unwrap();
        let traj = integrate(&system, &v0, 1.0, 1e-3, Method::FixedRk4).unwrap();
        assert!(traj.aborted.is_none());
        let div = divisor_trajectory(&model, &traj, 1e-9).unwrap();
        assert!(div.truncated.is_none());
        for j in (2..div.points.len() - 2).step_by(50) {
            let zdot = (div.points[j - 2][0].z - 8.0 * div.points[j - 1][0].z
                + 8.0 * div.points[j + 1][0].z
                - div.points[j + 2][0].z)
                / (12.0 * 1e-3);
            let s = &traj.states[j];
            let closed = 2.0 * (s[0] * s[3] - s[1] * s[2]);
            assert!(
                (zdot - closed).norm() < 1e-7 * closed.abs().max(1.0),
                "t = {}: {} vs {}",
                traj.times[j],
                zdot,
                closed
            );
        }
        let fs = lv_curve_polys(&model, &lv_values(&model, &v0).unwrap());
        let probe = abel_linearity_probe(&model, &div, &fs).unwrap();
        assert!(probe.worst() < 1e-6, "flatness {:.2e}", probe.worst());
    }

    #[test]
    fn probe_flat_on_moving_flows() {
        let cases: [(usize, usize, Vec<f64>); 3] = [
            (2, 5, vec![1.2, 0.7, 1.5, 0.9, 1.1]),
            (2, 6, vec![1.4, 0.6, 1.1, 0.9, 1.6, 0.8]),
            (3, 7, vec![1.1, 0.6, 1.9, 0.8, 1.4, 0.9, 1.2]),
        ];
        for (n, l, v0) in cases {
            let model = LvModel::build(n, l).unwrap();
            let system = FlowSystem::new(&model, 1).unwrap();
            let traj = integrate(&system, &v0, 1.0, 1e-3, Method::FixedRk4).unwrap();
            assert!(traj.aborted.is_none());
            let div = divisor_trajectory(&model, &traj, 1e-9).unwrap();
            assert!(div.truncated.is_none());
            let fs = lv_curve_polys(&model, &lv_values(&model, &v0).unwrap());
            let probe = abel_linearity_probe(&model, &div, &fs).unwrap();
            assert_eq!(probe.flatness.len(), model.genus());
            assert!(probe.worst() < 1e-6, "({}, {}) flatness {:.2e}", n, l, probe.worst());
        }
    }
}
