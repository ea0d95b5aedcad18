//! Serializable reports behind the command-line tools: classification
//! records, verification suites, conservation summaries, divisor runs, and
//! the integrability certificate.  Floating values are rendered as decimal
//! strings so the JSON round-trips exactly, and nothing here reads the
//! clock, so equal inputs give byte-equal output.

use crate::error::{Error, Result};
use crate::flow::{Method, Trajectory};
use crate::gauge::{
    apply_gauge, eta_pattern_check, eta_patterns, gauged_level_dim_direct,
    gauged_level_dim_pushforward, transfer_level_dim,
};
use crate::lv::{
    canonical_realization_check, center_check, involution_cap, predicted_center_rank,
    predicted_genus, predicted_im_count, product_check_cap, LvModel,
};
use crate::monodromy::{chain_class, chain_pattern_check, chain_transfer, random_instance};
use crate::poly::UniPoly;
use crate::rmatrix::{det_central_check, quadratic_check};
use crate::scalar::Mode;
use crate::sov::{theta_flag, DivisorTrajectory, ProbeReport};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt::Write as _;

/// Decimal rendering that round-trips: plain notation in a middling range,
/// exponent notation outside it.
pub fn dec(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let a = x.abs();
    if (1e-4..1e15).contains(&a) {
        format!("{}", x)
    } else {
        format!("{:e}", x)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialization");
    s.push('\n');
    s
}

/// Everything the period determines before any symbolic work: the class,
/// the division data behind it, and the three counts tied by the counting
/// identity.  Genus is absent when no closed form covers the class.
#[derive(Serialize)]
pub struct ClassifyRecord {
    pub n: usize,
    pub l: usize,
    pub m: usize,
    pub n1: usize,
    pub n2: usize,
    pub m1: usize,
    pub m2: usize,
    pub k: usize,
    pub k1: usize,
    pub k2: usize,
    pub g: Option<usize>,
    #[serde(rename = "n_H")]
    pub n_h: usize,
    pub n0: usize,
}

pub fn classify_record(n: usize, l: usize) -> Result<ClassifyRecord> {
    if n < 2 {
        return Err(Error::InvalidClass(format!("matrix size {} below 2", n)));
    }
    if l < 2 * n - 1 {
        return Err(Error::InvalidPeriod(format!(
            "period {} below the minimum {} for size {}",
            l,
            2 * n - 1,
            n
        )));
    }
    let (class, data) = chain_class(n, l)?;
    let n0 = predicted_center_rank(n, l);
    let n_h = predicted_im_count(n, l)?;
    Ok(ClassifyRecord {
        n,
        l,
        m: class.m,
        n1: class.n1,
        n2: class.n2,
        m1: data.m1,
        m2: data.m2,
        k: data.k,
        k1: data.k1,
        k2: data.k2,
        g: predicted_genus(&class),
        n_h,
        n0,
    })
}

/// One row of the period table: the counts for a single lattice.
#[derive(Serialize)]
pub struct TableRow {
    pub l: usize,
    pub g: usize,
    #[serde(rename = "n_H")]
    pub n_h: usize,
    pub n0: usize,
}

#[derive(Serialize)]
pub struct TableReport {
    pub n: usize,
    pub rows: Vec<TableRow>,
}

pub fn period_table(n: usize, lmin: usize, lmax: usize) -> Result<TableReport> {
    if lmin > lmax {
        return Err(Error::InvalidPeriod(format!("empty range {}..{}", lmin, lmax)));
    }
    let mut rows = Vec::new();
    for l in lmin..=lmax {
        let rec = classify_record(n, l)?;
        let g = rec.g.ok_or_else(|| {
            Error::InvalidClass(format!("no closed genus for size {} period {}", n, l))
        })?;
        rows.push(TableRow { l, g, n_h: rec.n_h, n0: rec.n0 });
    }
    Ok(TableReport { n, rows })
}

#[derive(Serialize)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckLine {
    fn from_result(name: &str, r: Result<()>, ok_detail: String) -> CheckLine {
        match r {
            Ok(()) => CheckLine { name: name.into(), pass: true, detail: ok_detail },
            Err(e) => CheckLine { name: name.into(), pass: false, detail: format!("{}", e) },
        }
    }
}

#[derive(Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub n: usize,
    pub l: usize,
    pub checks: Vec<CheckLine>,
    pub pass: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Suite {
    Rtt,
    Involution,
    Center,
    Pattern,
    Pq,
    Dimension,
}

impl std::fmt::Display for Suite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Suite::Rtt => "rtt",
            Suite::Involution => "involution",
            Suite::Center => "center",
            Suite::Pattern => "pattern",
            Suite::Pq => "pq",
            Suite::Dimension => "dimension",
        };
        f.write_str(s)
    }
}

fn seal(suite: Suite, n: usize, l: usize, checks: Vec<CheckLine>) -> SuiteReport {
    let pass = checks.iter().all(|c| c.pass);
    SuiteReport { suite: suite.to_string(), n, l, checks, pass }
}

/// Run one verification suite against the size-n period-l chain.  The seed
/// only matters for the suites that sample a random member of the class.
pub fn run_suite(suite: Suite, n: usize, l: usize, seed: u64) -> Result<SuiteReport> {
    if n < 2 {
        return Err(Error::InvalidClass(format!("matrix size {} below 2", n)));
    }
    if l < 1 {
        return Err(Error::InvalidPeriod("period must be positive".into()));
    }
    let mut checks = Vec::new();
    match suite {
        Suite::Rtt => {
            if l > product_check_cap(n) {
                return Err(Error::CapExceeded(format!(
                    "period {} beyond the product relation cap {} for size {}",
                    l,
                    product_check_cap(n),
                    n
                )));
            }
            let (st1, site, _, _) = chain_transfer(n, 1)?;
            checks.push(CheckLine::from_result(
                "site_relation",
                quadratic_check(&st1, &site),
                "single-site exchange relation holds exactly".into(),
            ));
            let (st, prod, _, _) = chain_transfer(n, l)?;
            checks.push(CheckLine::from_result(
                "product_relation",
                quadratic_check(&st, &prod),
                format!("exchange relation holds exactly for the {}-site product", l),
            ));
            checks.push(CheckLine::from_result(
                "central_determinant",
                det_central_check(&st, &prod),
                "determinant commutes with every site variable".into(),
            ));
        }
        Suite::Involution => {
            if l > involution_cap(n) {
                return Err(Error::CapExceeded(format!(
                    "period {} beyond the involution cap {} for size {}",
                    l,
                    involution_cap(n),
                    n
                )));
            }
            let model = LvModel::build(n, l)?;
            let k = model.im_count();
            checks.push(CheckLine::from_result(
                "hamiltonian_pairs",
                model.hamiltonian_involution_check(),
                format!("brackets of the {} integrals with the flow Hamiltonian vanish", k),
            ));
            checks.push(CheckLine::from_result(
                "invariant_pairs",
                model.pairwise_involution_check(),
                format!("all {} pairwise brackets vanish exactly", k * (k + 1) / 2),
            ));
        }
        Suite::Center => {
            let model = LvModel::build(n, l)?;
            let n0 = predicted_center_rank(n, l);
            checks.push(CheckLine::from_result(
                "center_generators",
                center_check(&model.structure, n, l),
                format!("center generated by {} elements, each commuting with every site", n0),
            ));
        }
        Suite::Pattern => {
            checks.push(CheckLine::from_result(
                "chain_pattern",
                chain_pattern_check(n, l),
                "chain products fill exactly the slots of the class".into(),
            ));
            let (class, _) = chain_class(n, l)?;
            if eta_patterns(&class).is_none() {
                checks.push(CheckLine {
                    name: "gauged_pattern".into(),
                    pass: true,
                    detail: "no representative shape established for this class; chain pattern only"
                        .into(),
                });
                return Ok(seal(suite, n, l, checks));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_instance(&class, Mode::Float, &mut rng);
            let gauged = match apply_gauge(&t, &class) {
                Ok((m, _)) => m,
                Err(e) => {
                    checks.push(CheckLine {
                        name: "gauged_pattern".into(),
                        pass: false,
                        detail: format!("{}", e),
                    });
                    return Ok(seal(suite, n, l, checks));
                }
            };
            match eta_pattern_check(&gauged, &class) {
                Ok(true) => checks.push(CheckLine {
                    name: "gauged_pattern".into(),
                    pass: true,
                    detail: "gauged matrix lands on an established representative shape".into(),
                }),
                Ok(false) => checks.push(CheckLine {
                    name: "gauged_pattern".into(),
                    pass: false,
                    detail: "gauged matrix misses every representative shape".into(),
                }),
                Err(e) => checks.push(CheckLine {
                    name: "gauged_pattern".into(),
                    pass: false,
                    detail: format!("{}", e),
                }),
            }
        }
        Suite::Pq => {
            checks.push(CheckLine::from_result(
                "canonical_realization",
                canonical_realization_check(n, l),
                "canonical coordinates reproduce the chain bracket".into(),
            ));
        }
        Suite::Dimension => {
            let (class, _) = chain_class(n, l)?;
            let g = predicted_genus(&class).ok_or_else(|| {
                Error::InvalidClass(format!("no closed genus for size {} period {}", n, l))
            })?;
            let drop = n - 1;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tdim = transfer_level_dim(&class, &mut rng)?;
            checks.push(CheckLine {
                name: "transfer_level".into(),
                pass: tdim == g + drop,
                detail: format!("level-set dimension {} against genus {} plus {}", tdim, g, drop),
            });
            let (mdim, route) = match gauged_level_dim_direct(&class, &mut rng)? {
                Some(d) => (d, "direct chart"),
                None => (gauged_level_dim_pushforward(&class, &mut rng)?, "pushforward"),
            };
            checks.push(CheckLine {
                name: "gauged_level".into(),
                pass: mdim == g,
                detail: format!("gauged dimension {} against genus {} ({})", mdim, g, route),
            });
        }
    }
    Ok(seal(suite, n, l, checks))
}

/// Certificate tying the whole construction together for one lattice: the
/// class and its pattern, exact determinant and flow identities, involution
/// and center, numeric independence, and the genus count identity.
#[derive(Serialize)]
pub struct Certificate {
    pub n: usize,
    pub l: usize,
    pub class: ClassifyRecord,
    pub genus: usize,
    #[serde(rename = "n_H")]
    pub n_h: usize,
    pub n0: usize,
    pub identity: String,
    pub checks: Vec<CheckLine>,
    pub pass: bool,
}

pub fn certify(n: usize, l: usize, seed: u64) -> Result<Certificate> {
    let record = classify_record(n, l)?;
    if l > involution_cap(n) {
        return Err(Error::CapExceeded(format!(
            "period {} beyond the involution cap {} for size {}; \
             a certificate needs the full exact battery",
            l,
            involution_cap(n),
            n
        )));
    }
    let model = LvModel::build(n, l)?;
    let mut checks = Vec::new();
    checks.push(CheckLine::from_result(
        "chain_pattern",
        chain_pattern_check(n, l),
        "transfer matrix fills exactly the slots of its class".into(),
    ));
    checks.push(CheckLine::from_result(
        "det_normalization",
        model.det_normalization_check(),
        format!("determinant reduces to the pure power with exponent {}", model.chain.k2),
    ));
    checks.push(CheckLine::from_result(
        "det_closed_form",
        model.det_matches_closed_form_check(),
        "cofactor determinant matches the product of site determinants".into(),
    ));
    checks.push(CheckLine::from_result(
        "flow_closed_form",
        model.flow_one_closed_form_check(),
        "first flow reproduces the lattice equations exactly".into(),
    ));
    checks.push(CheckLine::from_result(
        "hamiltonian_involution",
        model.hamiltonian_involution_check(),
        "every integral commutes with the flow Hamiltonian".into(),
    ));
    checks.push(CheckLine::from_result(
        "pairwise_involution",
        model.pairwise_involution_check(),
        "all integral pairs are in involution exactly".into(),
    ));
    checks.push(CheckLine::from_result(
        "center",
        center_check(&model.structure, n, l),
        format!("{} central generators commute with every site", record.n0),
    ));
    let k = model.im_count();
    checks.push(CheckLine {
        name: "im_count".into(),
        pass: k == record.n_h,
        detail: format!("{} integrals extracted against {} predicted", k, record.n_h),
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..l).map(|_| rand::Rng::gen_range(&mut rng, 0.5..2.0)).collect();
    let rank = model.independence_rank(&values);
    checks.push(CheckLine {
        name: "independence".into(),
        pass: rank == k,
        detail: format!("gradient rank {} of {} at a sampled point", rank, k),
    });
    let gm = model.genus();
    let gc = record.g;
    checks.push(CheckLine {
        name: "genus_closed_form".into(),
        pass: Some(gm) == gc,
        detail: match gc {
            Some(g) => format!("polygon genus {} against closed form {}", gm, g),
            None => format!("polygon genus {} with no closed form for this class", gm),
        },
    });
    let identity_holds = Some(gm) == gc && gm == record.n_h && 2 * gm == l - record.n0;
    checks.push(CheckLine {
        name: "count_identity".into(),
        pass: identity_holds,
        detail: format!(
            "g = {}, n_H = {}, (L - n0)/2 = ({} - {})/2 = {}",
            gm,
            record.n_h,
            l,
            record.n0,
            (l - record.n0) / 2
        ),
    });
    let pass = checks.iter().all(|c| c.pass);
    Ok(Certificate {
        n,
        l,
        genus: gm,
        n_h: record.n_h,
        n0: record.n0,
        identity: format!("g = n_H = (L - n0)/2 = {}", (l - record.n0) / 2),
        class: record,
        checks,
        pass,
    })
}

#[derive(Serialize)]
pub struct MonitorDrift {
    pub name: String,
    pub initial: String,
    pub drift: String,
}

/// Conservation summary of one integrated run: per-integral relative drift
/// plus the worst over all of them.
#[derive(Serialize)]
pub struct RunSummary {
    pub n: usize,
    pub l: usize,
    pub flow: usize,
    pub method: String,
    pub dt: String,
    pub t_end: String,
    pub samples: usize,
    pub aborted: Option<String>,
    pub integrals: Vec<MonitorDrift>,
    pub worst_drift: String,
}

pub fn method_name(m: Method) -> &'static str {
    match m {
        Method::FixedRk4 => "rk4",
        Method::Adaptive54 => "adaptive",
    }
}

pub fn run_summary(
    model: &LvModel,
    traj: &Trajectory,
    flow: usize,
    method: Method,
    dt: f64,
    t_end: f64,
) -> RunSummary {
    let first = traj.monitors.first().cloned().unwrap_or_default();
    let mut integrals = Vec::new();
    let mut worst = 0.0f64;
    for (j, &h0) in first.iter().enumerate() {
        let mut d = 0.0f64;
        for row in &traj.monitors {
            d = d.max((row[j] - h0).abs() / h0.abs().max(1.0));
        }
        worst = worst.max(d);
        integrals.push(MonitorDrift {
            name: format!("H{}", j + 1),
            initial: dec(h0),
            drift: dec(d),
        });
    }
    RunSummary {
        n: model.n,
        l: model.l,
        flow,
        method: method_name(method).into(),
        dt: dec(dt),
        t_end: dec(t_end),
        samples: traj.times.len(),
        aborted: traj.aborted.clone(),
        integrals,
        worst_drift: dec(worst),
    }
}

/// Divisor run summary: how far the tracked points sit from the frozen
/// curve, which samples look degenerate, and how flat the probe velocities
/// come out.
#[derive(Serialize)]
pub struct DivisorReport {
    pub n: usize,
    pub l: usize,
    pub flow: usize,
    pub genus: usize,
    pub samples: usize,
    pub truncated: Option<usize>,
    pub on_curve_worst: String,
    pub theta_flagged: Vec<usize>,
    pub flatness: Vec<String>,
    pub worst_flatness: String,
}

pub fn divisor_report(
    model: &LvModel,
    div: &DivisorTrajectory,
    fs: &[UniPoly],
    probe: &ProbeReport,
    flow: usize,
    theta_tol: f64,
) -> DivisorReport {
    let exps = model.spectral_polygon().one_form_exponents();
    let mut on_curve = 0.0f64;
    let mut flagged = Vec::new();
    for (i, pts) in div.points.iter().enumerate() {
        for p in pts {
            on_curve = on_curve.max(crate::sov::curve_residual(fs, p));
        }
        if theta_flag(pts, &exps, theta_tol) {
            flagged.push(i);
        }
    }
    DivisorReport {
        n: model.n,
        l: model.l,
        flow,
        genus: div.points.first().map(|p| p.len()).unwrap_or(0),
        samples: div.points.len(),
        truncated: div.truncated,
        on_curve_worst: dec(on_curve),
        theta_flagged: flagged,
        flatness: probe.flatness.iter().map(|&f| dec(f)).collect(),
        worst_flatness: dec(probe.worst()),
    }
}

/// Trajectory table: time, every site value, every monitored integral.
pub fn trajectory_csv(traj: &Trajectory, l: usize) -> String {
    let mut out = String::new();
    out.push('t');
    for i in 1..=l {
        let _ = write!(out, ",V{}", i);
    }
    let k = traj.monitors.first().map(|m| m.len()).unwrap_or(0);
    for j in 1..=k {
        let _ = write!(out, ",H{}", j);
    }
    out.push('\n');
    for (i, t) in traj.times.iter().enumerate() {
        out.push_str(&dec(*t));
        for v in &traj.states[i] {
            out.push(',');
            out.push_str(&dec(*v));
        }
        for h in &traj.monitors[i] {
            out.push(',');
            out.push_str(&dec(*h));
        }
        out.push('\n');
    }
    out
}

/// Divisor table: time, then real and imaginary parts of each tracked
/// point's position and eigenvalue.
pub fn divisor_csv(div: &DivisorTrajectory) -> String {
    let g = div.points.first().map(|p| p.len()).unwrap_or(0);
    let mut out = String::new();
    out.push('t');
    for i in 1..=g {
        let _ = write!(out, ",re_z{},im_z{},re_w{},im_w{}", i, i, i, i);
    }
    out.push('\n');
    for (i, t) in div.times.iter().enumerate() {
        out.push_str(&dec(*t));
        for p in &div.points[i] {
            for x in [p.z.re, p.z.im, p.w.re, p.w.im] {
                out.push(',');
                out.push_str(&dec(x));
            }
        }
        out.push('\n');
    }
    out
}
