//! Compiled evaluation of lattice polynomials and time integration of the
//! commuting flows, with the integrals themselves monitored along the way.

use crate::bracket::LaurentPoly;
use crate::error::{Error, Result};
use crate::lv::LvModel;

struct PlanTerm {
    coef: f64,
    powers: Vec<(usize, i32)>,
}

/// A lattice polynomial flattened to coefficient-and-exponent form for fast
/// repeated evaluation at real site values.
pub struct EvalPlan {
    terms: Vec<PlanTerm>,
}

impl EvalPlan {
    /// Rejects dependence on the extra linked generator and complex
    /// coefficients; flows and integrals carry neither.
    pub fn compile(poly: &LaurentPoly, l: usize) -> Result<EvalPlan> {
        let mut terms = Vec::new();
        for (exps, c) in poly.terms() {
            if exps[0] != 0 {
                return Err(Error::Internal(
                    "evaluation plan built from a polynomial with linked-generator powers".into(),
                ));
            }
            let z = c.to_complex();
            if z.im != 0.0 {
                return Err(Error::Internal(
                    "evaluation plan built from a polynomial with complex coefficients".into(),
                ));
            }
            let powers: Vec<(usize, i32)> = (1..=l)
                .filter(|&v| exps[v] != 0)
                .map(|v| (v - 1, exps[v]))
                .collect();
            terms.push(PlanTerm { coef: z.re, powers });
        }
        Ok(EvalPlan { terms })
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for t in &self.terms {
            let mut m = t.coef;
            for &(i, e) in &t.powers {
                m *= match e {
                    1 => v[i],
                    2 => v[i] * v[i],
                    _ => v[i].powi(e),
                };
            }
            acc += m;
        }
        acc
    }
}

/// One Hamiltonian flow of the lattice, with every integral compiled as a
/// monitor.
pub struct FlowSystem {
    pub l: usize,
    pub flow_index: usize,
    vector: Vec<EvalPlan>,
    monitors: Vec<EvalPlan>,
}

impl FlowSystem {
    /// `flow` is the 1-based index into the non-central integrals, ascending
    /// by degree; flow 1 is the Lotka-Volterra flow itself.
    pub fn new(model: &LvModel, flow: usize) -> Result<FlowSystem> {
        assert!(
            flow >= 1 && flow <= model.im_count(),
            "flow index {} out of range 1..={}",
            flow,
            model.im_count()
        );
        let h = &model.ims[flow - 1].poly;
        let vector = (1..=model.l)
            .map(|s| EvalPlan::compile(&model.site_flow(s, h), model.l))
            .collect::<Result<Vec<_>>>()?;
        let monitors = model
            .ims
            .iter()
            .map(|im| EvalPlan::compile(&im.poly, model.l))
            .collect::<Result<Vec<_>>>()?;
        Ok(FlowSystem { l: model.l, flow_index: flow, vector, monitors })
    }

    pub fn derivative(&self, v: &[f64], out: &mut [f64]) {
        for (i, plan) in self.vector.iter().enumerate() {
            out[i] = plan.eval(v);
        }
    }

    pub fn monitor_values(&self, v: &[f64]) -> Vec<f64> {
        self.monitors.iter().map(|p| p.eval(v)).collect()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Method {
    FixedRk4,
    Adaptive54,
}

pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub monitors: Vec<Vec<f64>>,
    /// Reason integration stopped early, if it did.
    pub aborted: Option<String>,
}

impl Trajectory {
    /// Worst relative wander of any monitored integral from its initial
    /// value.
    pub fn monitor_drift(&self) -> f64 {
        if self.monitors.is_empty() {
            return 0.0;
        }
        let first = &self.monitors[0];
        let mut worst = 0.0f64;
        for row in &self.monitors {
            for (j, &h) in row.iter().enumerate() {
                let rel = (h - first[j]).abs() / first[j].abs().max(1.0);
                worst = worst.max(rel);
            }
        }
        worst
    }
}

const FLOOR: f64 = 1e-12;

fn floor_hit(v: &[f64]) -> Option<usize> {
    v.iter().position(|x| x.abs() < FLOOR)
}

/// Advance to every multiple of `dt` up to `t_end`, recording state and
/// monitors at each grid point.  The fixed method takes one classical
/// fourth-order step per grid interval; the adaptive method sub-steps with
/// embedded error control and lands exactly on the grid.
pub fn integrate(
    system: &FlowSystem,
    v0: &[f64],
    t_end: f64,
    dt: f64,
    method: Method,
) -> Result<Trajectory> {
    assert_eq!(v0.len(), system.l, "state size does not match the period");
    assert!(dt > 0.0 && t_end >= 0.0, "nonpositive step or span");
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![v0.to_vec()],
        monitors: vec![system.monitor_values(v0)],
        aborted: None,
    };
    if let Some(i) = floor_hit(v0) {
        traj.aborted = Some(format!("site {} vanished at t = 0", i + 1));
        return Ok(traj);
    }
    let steps = (t_end / dt).ceil() as usize;
    let mut v = v0.to_vec();
    let mut t = 0.0f64;
    let mut h_adaptive = dt;
    for k in 1..=steps {
        let target = (k as f64 * dt).min(t_end);
        match method {
            Method::FixedRk4 => {
                rk4_step(system, &mut v, target - t);
            }
            Method::Adaptive54 => {
                adaptive_to(system, &mut v, t, target, &mut h_adaptive)?;
            }
        }
        t = target;
        if let Some(i) = floor_hit(&v) {
            traj.aborted = Some(format!("site {} vanished near t = {:.6}", i + 1, t));
            return Ok(traj);
        }
        traj.times.push(t);
        traj.states.push(v.clone());
        traj.monitors.push(system.monitor_values(&v));
    }
    Ok(traj)
}

fn rk4_step(system: &FlowSystem, v: &mut [f64], h: f64) {
    let n = v.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    system.derivative(v, &mut k1);
    for i in 0..n {
        tmp[i] = v[i] + 0.5 * h * k1[i];
    }
    system.derivative(&tmp, &mut k2);
    for i in 0..n {
        tmp[i] = v[i] + 0.5 * h * k2[i];
    }
    system.derivative(&tmp, &mut k3);
    for i in 0..n {
        tmp[i] = v[i] + h * k3[i];
    }
    system.derivative(&tmp, &mut k4);
    for i in 0..n {
        v[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

const RTOL: f64 = 1e-9;
const ATOL: f64 = 1e-12;

fn adaptive_to(
    system: &FlowSystem,
    v: &mut Vec<f64>,
    t_from: f64,
    t_to: f64,
    h_next: &mut f64,
) -> Result<()> {
    let mut t = t_from;
    let mut attempts = 0usize;
    while t < t_to {
        let h = h_next.min(t_to - t).max(1e-14);
        let (candidate, err) = dopri_step(system, v, h);
        if err <= 1.0 || h <= 1e-13 {
            t += h;
            *v = candidate;
            let grow = 0.9 * err.max(1e-10).powf(-0.2);
            *h_next = h * grow.clamp(0.2, 5.0);
        } else {
            let shrink = 0.9 * err.powf(-0.2);
            *h_next = h * shrink.clamp(0.1, 0.9);
        }
        attempts += 1;
        if attempts > 2_000_000 {
            return Err(Error::NoConvergence(
                "adaptive step control failed to reach the next grid point".into(),
            ));
        }
    }
    Ok(())
}

/// One Dormand-Prince 5(4) step; returns the fifth-order state and the
/// scaled error estimate.
fn dopri_step(system: &FlowSystem, v: &[f64], h: f64) -> (Vec<f64>, f64) {
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let n = v.len();
    let mut k = vec![vec![0.0; n]; 7];
    system.derivative(v, &mut k[0]);
    let mut tmp = vec![0.0; n];
    for s in 0..6 {
        for i in 0..n {
            let mut acc = v[i];
            for j in 0..=s {
                acc += h * A[s][j] * k[j][i];
            }
            tmp[i] = acc;
        }
        system.derivative(&tmp, &mut k[s + 1]);
    }
    // stage 7 input is the fifth-order result
    let out = tmp;
    let mut err_sq = 0.0;
    for i in 0..n {
        let mut e = 0.0;
        for s in 0..7 {
            e += E[s] * k[s][i];
        }
        e *= h;
        let scale = ATOL + RTOL * v[i].abs().max(out[i].abs());
        let r = e / scale;
        err_sq += r * r;
    }
    (out, (err_sq / n as f64).sqrt())
}
