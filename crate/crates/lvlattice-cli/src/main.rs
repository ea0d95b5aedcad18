use clap::{Parser, Subcommand, ValueEnum};
use lvlattice::flow::{integrate, FlowSystem, Method};
use lvlattice::lv::LvModel;
use lvlattice::report::{
    certify, classify_record, divisor_csv, divisor_report, period_table, run_suite, run_summary,
    to_json, trajectory_csv, Suite,
};
use lvlattice::sov::{abel_linearity_probe, divisor_trajectory, lv_curve_polys, lv_values};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "lvlattice",
    version,
    about = "Classification, verification, flows, divisor tracking and certificates \
             for periodic extended Lotka-Volterra lattices"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(ValueEnum, Clone, Copy)]
enum MethodArg {
    Rk4,
    Adaptive,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Rk4 => Method::FixedRk4,
            MethodArg::Adaptive => Method::Adaptive54,
        }
    }
}

#[derive(ValueEnum, Clone, Copy)]
enum SuiteArg {
    Rtt,
    Involution,
    Center,
    Pattern,
    Pq,
    Dimension,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Suite {
        match s {
            SuiteArg::Rtt => Suite::Rtt,
            SuiteArg::Involution => Suite::Involution,
            SuiteArg::Center => Suite::Center,
            SuiteArg::Pattern => Suite::Pattern,
            SuiteArg::Pq => Suite::Pq,
            SuiteArg::Dimension => Suite::Dimension,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Class and counts determined by the matrix size and period
    Classify {
        #[arg(long = "N")]
        n: usize,
        #[arg(long = "L")]
        l: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Genus and integral counts across a range of periods
    Table {
        #[arg(long = "N")]
        n: usize,
        #[arg(long = "Lmin")]
        lmin: usize,
        #[arg(long = "Lmax")]
        lmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one verification suite; exits zero only if every check passes
    Verify {
        #[arg(value_enum)]
        suite: SuiteArg,
        #[arg(long = "N")]
        n: usize,
        #[arg(long = "L")]
        l: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate one flow and report conservation of every integral
    Simulate {
        #[arg(long = "N")]
        n: usize,
        #[arg(long = "L")]
        l: usize,
        /// 1-based index into the integrals, ascending by degree
        #[arg(long, default_value_t = 1)]
        flow: usize,
        #[arg(long = "t-end", default_value_t = 10.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::Rk4)]
        method: MethodArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON file with {"V": [...]} giving the initial site values
        #[arg(long)]
        init: Option<PathBuf>,
        /// Destination of the trajectory table
        #[arg(long)]
        out: PathBuf,
    },
    /// Track the separation divisor along a flow and probe its linearity
    Divisor {
        #[arg(long = "N")]
        n: usize,
        #[arg(long = "L")]
        l: usize,
        #[arg(long, default_value_t = 1)]
        flow: usize,
        #[arg(long = "t-end", default_value_t = 5.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::Rk4)]
        method: MethodArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        init: Option<PathBuf>,
        /// Destination of the divisor table
        #[arg(long)]
        out: PathBuf,
    },
    /// Full certificate for one lattice; exits zero only if it passes
    Certify {
        #[arg(long = "N")]
        n: usize,
        #[arg(long = "L")]
        l: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {}", msg);
            ExitCode::FAILURE
        }
    }
}

fn lv<T>(r: lvlattice::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn emit(json: String, out: Option<&PathBuf>) -> Result<(), String> {
    match out {
        Some(p) => fs::write(p, json).map_err(|e| format!("writing {}: {}", p.display(), e)),
        None => {
            print!("{}", json);
            Ok(())
        }
    }
}

fn initial_state(init: Option<&PathBuf>, l: usize, seed: u64) -> Result<Vec<f64>, String> {
    let path = match init {
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            return Ok((0..l).map(|_| rng.gen_range(0.5..2.0)).collect());
        }
        Some(p) => p,
    };
    let text =
        fs::read_to_string(path).map_err(|e| format!("reading {}: {}", path.display(), e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("{}: {}", path.display(), e))?;
    let arr = value
        .get("V")
        .and_then(|v| v.as_array())
        .ok_or_else(|| format!("{}: expected an object with a V array", path.display()))?;
    let mut out = Vec::with_capacity(arr.len());
    for (i, x) in arr.iter().enumerate() {
        let v = match x {
            serde_json::Value::Number(num) => num.as_f64(),
            serde_json::Value::String(s) => s.parse::<f64>().ok(),
            _ => None,
        }
        .ok_or_else(|| format!("{}: V[{}] is not a number", path.display(), i))?;
        out.push(v);
    }
    if out.len() != l {
        return Err(format!("{}: {} values for period {}", path.display(), out.len(), l));
    }
    Ok(out)
}

fn build_run(
    n: usize,
    l: usize,
    flow: usize,
    t_end: f64,
    dt: f64,
    method: Method,
    init: Option<&PathBuf>,
    seed: u64,
) -> Result<(LvModel, Vec<f64>, lvlattice::flow::Trajectory), String> {
    let model = lv(LvModel::build(n, l))?;
    if flow < 1 || flow > model.im_count() {
        return Err(format!(
            "flow {} out of range 1..={} for this lattice",
            flow,
            model.im_count()
        ));
    }
    if dt <= 0.0 || t_end < 0.0 {
        return Err("need a positive dt and a nonnegative t-end".into());
    }
    let v0 = initial_state(init, l, seed)?;
    if v0.iter().any(|&v| v <= 0.0) {
        return Err("initial site values must be positive".into());
    }
    let system = lv(FlowSystem::new(&model, flow))?;
    let traj = lv(integrate(&system, &v0, t_end, dt, method))?;
    Ok((model, v0, traj))
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.cmd {
        Cmd::Classify { n, l, out } => {
            let rec = lv(classify_record(n, l))?;
            emit(to_json(&rec), out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Table { n, lmin, lmax, out } => {
            let table = lv(period_table(n, lmin, lmax))?;
            emit(to_json(&table), out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify { suite, n, l, seed, out } => {
            let report = lv(run_suite(suite.into(), n, l, seed))?;
            let pass = report.pass;
            emit(to_json(&report), out.as_ref())?;
            Ok(if pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Cmd::Certify { n, l, seed, out } => {
            let cert = lv(certify(n, l, seed))?;
            let pass = cert.pass;
            emit(to_json(&cert), out.as_ref())?;
            Ok(if pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Cmd::Simulate { n, l, flow, t_end, dt, method, seed, init, out } => {
            let method = Method::from(method);
            let (model, _, traj) =
                build_run(n, l, flow, t_end, dt, method, init.as_ref(), seed)?;
            fs::write(&out, trajectory_csv(&traj, l))
                .map_err(|e| format!("writing {}: {}", out.display(), e))?;
            let summary = run_summary(&model, &traj, flow, method, dt, t_end);
            print!("{}", to_json(&summary));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Divisor { n, l, flow, t_end, dt, method, seed, tol, init, out } => {
            let method = Method::from(method);
            let (model, v0, traj) =
                build_run(n, l, flow, t_end, dt, method, init.as_ref(), seed)?;
            let values = lv(lv_values(&model, &v0))?;
            let curve = lv_curve_polys(&model, &values);
            let div = lv(divisor_trajectory(&model, &traj, tol))?;
            let probe = lv(abel_linearity_probe(&model, &div, &curve))?;
            fs::write(&out, divisor_csv(&div))
                .map_err(|e| format!("writing {}: {}", out.display(), e))?;
            let report = divisor_report(&model, &div, &curve, &probe, flow, tol);
            print!("{}", to_json(&report));
            Ok(ExitCode::SUCCESS)
        }
    }
}
