//! Ribosome flow model on a ring.
//!
//! `n` sites with occupancies `x_i ∈ [0,1]` and link rates `λ_i > 0`; indices
//! wrap around the ring:
//!
//! ```text
//! ẋ_i = λ_{i-1} x_{i-1} (1 - x_i) - λ_i x_i (1 - x_{i+1})
//! ```
//!
//! The total occupancy is conserved and the Jacobian lies in Q at every state
//! of the cube, so the variational system `ż = J(x(t)) z` never increases the
//! cyclic sign count of `z`.

use serde::{Deserialize, Serialize};

use crate::classify::is_irreducible;
use crate::compound::Matrix;
use crate::error::{Error, Result};
use crate::monitor::{monitor, MonitorOptions, Propagator, Trajectory};

/// Largest excursion outside `[0,1]` that is clamped back after a step.
pub const CLAMP_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfmrParams {
    lambda: Vec<f64>,
}

impl RfmrParams {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.len() < 2 {
            return Err(Error::Shape(format!("a ring needs at least 2 sites, got {}", lambda.len())));
        }
        if let Some(&bad) = lambda.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::NonpositiveParameter(bad));
        }
        Ok(Self { lambda })
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }
}

fn check_cube(x: &[f64]) -> Result<()> {
    match x.iter().position(|&v| !(0.0..=1.0).contains(&v)) {
        Some(index) => Err(Error::OutOfUnitCube { index, value: x[index] }),
        None => Ok(()),
    }
}

fn check_dim(p: &RfmrParams, len: usize) -> Result<()> {
    if len != p.n() {
        return Err(Error::DimensionMismatch(format!("state of length {len} for {} sites", p.n())));
    }
    Ok(())
}

fn rhs_unchecked(lambda: &[f64], x: &[f64], out: &mut [f64]) {
    let n = x.len();
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let next = (i + 1) % n;
        out[i] = lambda[prev] * x[prev] * (1.0 - x[i]) - lambda[i] * x[i] * (1.0 - x[next]);
    }
}

/// `J(x) z` without forming `J`.
fn jvp_unchecked(lambda: &[f64], x: &[f64], z: &[f64], out: &mut [f64]) {
    let n = x.len();
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let next = (i + 1) % n;
        let diag = -(lambda[prev] * x[prev] + lambda[i] * (1.0 - x[next]));
        out[i] = diag * z[i] + lambda[prev] * (1.0 - x[i]) * z[prev] + lambda[i] * x[i] * z[next];
    }
}

pub fn rfmr_rhs(p: &RfmrParams, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(p, x.len())?;
    check_cube(x)?;
    let mut out = vec![0.0; x.len()];
    rhs_unchecked(&p.lambda, x, &mut out);
    Ok(out)
}

/// `J = M − D`: `M` holds `λ_i x_i` above the diagonal, `λ_{i-1}(1 − x_i)`
/// below it (both wrapping to the corners), and
/// `D = diag(λ_{i-1} x_{i-1} + λ_i (1 − x_{i+1}))`.
pub fn rfmr_jacobian(p: &RfmrParams, x: &[f64]) -> Result<Matrix> {
    check_dim(p, x.len())?;
    check_cube(x)?;
    let n = x.len();
    let l = &p.lambda;
    let mut j = Matrix::zeros(n, n);
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let next = (i + 1) % n;
        j[(i, i)] -= l[prev] * x[prev] + l[i] * (1.0 - x[next]);
        j[(i, next)] += l[i] * x[i];
        j[(i, prev)] += l[prev] * (1.0 - x[i]);
    }
    Ok(j)
}

/// Flow `λ_i x_i (1 − x_{i+1})` from site `i` to site `i+1`.
pub fn link_flows(p: &RfmrParams, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n).map(|i| p.lambda[i] * x[i] * (1.0 - x[(i + 1) % n])).collect()
}

/// Joint `(x, z)` flow; the state is `[x; z]`.
struct Variational<'a> {
    p: &'a RfmrParams,
    step: f64,
}

impl Variational<'_> {
    fn field(&self, s: &[f64], out: &mut [f64]) {
        let n = self.p.n();
        let (x, z) = s.split_at(n);
        let (dx, dz) = out.split_at_mut(n);
        rhs_unchecked(&self.p.lambda, x, dx);
        jvp_unchecked(&self.p.lambda, x, z, dz);
    }

    fn rk4_step(&self, s: &[f64], h: f64) -> Vec<f64> {
        let m = s.len();
        let mut k1 = vec![0.0; m];
        let mut k2 = vec![0.0; m];
        let mut k3 = vec![0.0; m];
        let mut k4 = vec![0.0; m];
        let mut tmp = vec![0.0; m];
        self.field(s, &mut k1);
        for i in 0..m {
            tmp[i] = s[i] + 0.5 * h * k1[i];
        }
        self.field(&tmp, &mut k2);
        for i in 0..m {
            tmp[i] = s[i] + 0.5 * h * k2[i];
        }
        self.field(&tmp, &mut k3);
        for i in 0..m {
            tmp[i] = s[i] + h * k3[i];
        }
        self.field(&tmp, &mut k4);
        (0..m).map(|i| s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
    }
}

impl Propagator for Variational<'_> {
    type State = Vec<f64>;

    fn advance(&self, s: &Vec<f64>, t: f64, dt: f64) -> Result<Vec<f64>> {
        let n = self.p.n();
        let steps = (dt / self.step).ceil().max(1.0) as usize;
        let h = dt / steps as f64;
        let mut cur = s.clone();
        for k in 0..steps {
            cur = self.rk4_step(&cur, h);
            for (i, v) in cur[..n].iter_mut().enumerate() {
                if *v < -CLAMP_SLACK || *v > 1.0 + CLAMP_SLACK {
                    return Err(Error::NumericalAbort(format!(
                        "x{} = {v} left the unit cube near t = {}; reduce the step",
                        i + 1,
                        t + (k + 1) as f64 * h
                    )));
                }
                *v = v.clamp(0.0, 1.0);
            }
        }
        Ok(cur)
    }

    fn observe<'a>(&self, s: &'a Vec<f64>) -> &'a [f64] {
        &s[self.p.n()..]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfmrRun {
    pub x: Trajectory,
    pub z: Trajectory,
    /// Per-link flows at each grid time.
    pub flows: Vec<Vec<f64>>,
    /// Grid times at which `J(x(t))` was reducible.
    pub reducible_times: Vec<f64>,
}

impl RfmrRun {
    /// Columns `t, x.., z.., flow.., s_minus, s_plus, sc_minus, sc_plus` (counts of `z`).
    pub fn to_csv(&self) -> String {
        let n = self.x.states.first().map_or(0, Vec::len);
        let mut out = String::from("t");
        for prefix in ["x", "z", "flow"] {
            for i in 1..=n {
                out.push_str(&format!(",{prefix}{i}"));
            }
        }
        out.push_str(",s_minus,s_plus,sc_minus,sc_plus\n");
        for k in 0..self.x.times.len() {
            out.push_str(&format!("{:?}", self.x.times[k]));
            for v in self.x.states[k].iter().chain(&self.z.states[k]).chain(&self.flows[k]) {
                out.push_str(&format!(",{v:?}"));
            }
            let c = &self.z.counts[k];
            out.push_str(&format!(",{},{},{},{}\n", c.s_minus, c.s_plus, c.sc_minus, c.sc_plus));
        }
        out
    }
}

/// Co-integrate the RFMR and its variational system from `t = 0` to `t1`,
/// monitoring the sign counts of `z`.
pub fn simulate_with_variational(
    p: &RfmrParams,
    x0: &[f64],
    z0: &[f64],
    t1: f64,
    opts: &MonitorOptions,
) -> Result<RfmrRun> {
    check_dim(p, x0.len())?;
    check_dim(p, z0.len())?;
    if !x0.iter().all(|v| (0.0..=1.0).contains(v)) {
        return Err(Error::InadmissibleState("x0 must lie in [0,1]^n".into()));
    }
    if x0.iter().all(|&v| v == 0.0) || x0.iter().all(|&v| v == 1.0) {
        return Err(Error::InadmissibleState("x0 is an equilibrium (all empty or all full)".into()));
    }
    if z0.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroInitialCondition);
    }
    let n = p.n();
    let flow = Variational { p, step: opts.step };
    let initial: Vec<f64> = x0.iter().chain(z0).copied().collect();
    let run = monitor(&flow, initial, 0.0, t1, opts)?;
    let xs: Vec<Vec<f64>> = run.states.iter().map(|s| s[..n].to_vec()).collect();
    let flows = xs.iter().map(|x| link_flows(p, x)).collect();
    let times = run.trajectory.times.clone();
    let reducible_times = times
        .iter()
        .zip(&xs)
        .filter(|(_, x)| !is_irreducible(&rfmr_jacobian(p, x).expect("state clamped to the cube"), 0.0))
        .map(|(&t, _)| t)
        .collect();
    Ok(RfmrRun {
        x: Trajectory::from_samples(times, xs, opts.zero_tol),
        z: run.trajectory,
        flows,
        reducible_times,
    })
}

/// Parameter file schema for the `rfmr` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfmrConfig {
    pub lambda: Vec<f64>,
    pub x0: Vec<f64>,
    /// Defaults to `ẋ(0)` when absent.
    #[serde(default)]
    pub z0: Option<Vec<f64>>,
    pub horizon: f64,
    #[serde(default)]
    pub step: Option<f64>,
}
