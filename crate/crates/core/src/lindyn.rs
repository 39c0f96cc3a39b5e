//! Linear time-varying systems `ẋ = A(t) x`.
//!
//! Two routes to the transition matrix `Φ(t, t0)` are provided:
//!
//! * [`transition_matrix`]: fixed-step classical RK4 on `Φ̇ = A(t) Φ`, `Φ(t0) = I`,
//!   restarted at every switching time of the generator;
//! * [`transition`]: exact per-piece matrix exponentials when the generator is
//!   piecewise constant, RK4 otherwise.
//!
//! [`compound_transition`] integrates `d/dt Φ^(p) = A^[p](t) Φ^(p)` directly and
//! serves as a cross-check of minors computed from `Φ`.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::metzler_violation;
use crate::compound::{add_compound, mult_compound, CompoundKind, CompoundMatrix, IndexSet, Matrix};
use crate::error::{Error, Result};
use crate::io::{matrix_from_rows, matrix_to_rows};
use crate::monitor::{monitor, MonitorOptions, Propagator, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Hold,
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Constant(Matrix),
    /// `matrices[0]` before `breakpoints[0]`, `matrices[k]` on
    /// `[breakpoints[k-1], breakpoints[k])`, the last one afterwards.
    PiecewiseConstant { breakpoints: Vec<f64>, matrices: Vec<Matrix> },
    /// Samples at `times`, held or linearly interpolated in between and held
    /// constant outside the sampled range.
    Sampled { times: Vec<f64>, matrices: Vec<Matrix>, interpolation: Interpolation },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LtvSystem {
    dim: usize,
    generator: Generator,
}

fn check_square(ms: &[Matrix]) -> Result<usize> {
    let n = ms.first().ok_or_else(|| Error::Shape("generator has no matrices".into()))?.nrows();
    if n == 0 {
        return Err(Error::Shape("empty generator matrix".into()));
    }
    if let Some(m) = ms.iter().find(|m| m.shape() != (n, n)) {
        return Err(Error::Shape(format!(
            "generator matrix is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(n)
}

fn check_increasing(ts: &[f64], what: &str) -> Result<()> {
    if ts.iter().any(|t| !t.is_finite()) || ts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Shape(format!("{what} must be finite and strictly increasing")));
    }
    Ok(())
}

impl LtvSystem {
    pub fn constant(a: Matrix) -> Result<Self> {
        let dim = check_square(std::slice::from_ref(&a))?;
        Ok(Self { dim, generator: Generator::Constant(a) })
    }

    pub fn piecewise_constant(breakpoints: Vec<f64>, matrices: Vec<Matrix>) -> Result<Self> {
        let dim = check_square(&matrices)?;
        check_increasing(&breakpoints, "breakpoints")?;
        if breakpoints.len() + 1 != matrices.len() {
            return Err(Error::Shape(format!(
                "{} breakpoints need {} matrices, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                matrices.len()
            )));
        }
        Ok(Self { dim, generator: Generator::PiecewiseConstant { breakpoints, matrices } })
    }

    pub fn sampled(times: Vec<f64>, matrices: Vec<Matrix>, interpolation: Interpolation) -> Result<Self> {
        let dim = check_square(&matrices)?;
        check_increasing(&times, "sample times")?;
        if times.len() != matrices.len() {
            return Err(Error::Shape(format!(
                "{} sample times for {} matrices",
                times.len(),
                matrices.len()
            )));
        }
        Ok(Self { dim, generator: Generator::Sampled { times, matrices, interpolation } })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn is_piecewise_constant(&self) -> bool {
        matches!(self.generator, Generator::Constant(_) | Generator::PiecewiseConstant { .. })
    }

    /// `A(t)`, right-continuous at switching times.
    pub fn eval(&self, t: f64) -> Matrix {
        self.eval_within(t, t, t)
    }

    /// `A(t)` for `t` in a segment `[lo, hi]` free of switching times; the
    /// piece (or held sample) is chosen by the segment midpoint so that stage
    /// evaluations at segment endpoints stay on the same piece.
    fn eval_within(&self, t: f64, lo: f64, hi: f64) -> Matrix {
        let mid = 0.5 * (lo + hi);
        match &self.generator {
            Generator::Constant(a) => a.clone(),
            Generator::PiecewiseConstant { breakpoints, matrices } => {
                matrices[breakpoints.partition_point(|&b| b <= mid)].clone()
            }
            Generator::Sampled { times, matrices, interpolation } => {
                let k = times.partition_point(|&s| s <= mid);
                if k == 0 {
                    return matrices[0].clone();
                }
                if k == times.len() {
                    return matrices[k - 1].clone();
                }
                match interpolation {
                    Interpolation::Hold => matrices[k - 1].clone(),
                    Interpolation::Linear => {
                        let w = ((t - times[k - 1]) / (times[k] - times[k - 1])).clamp(0.0, 1.0);
                        &matrices[k - 1] * (1.0 - w) + &matrices[k] * w
                    }
                }
            }
        }
    }

    fn switch_times(&self) -> &[f64] {
        match &self.generator {
            Generator::Constant(_) => &[],
            Generator::PiecewiseConstant { breakpoints, .. } => breakpoints,
            Generator::Sampled { times, .. } => times,
        }
    }

    /// `[t0, t]` cut at every switching time strictly inside it.
    fn segments(&self, t0: f64, t: f64) -> Vec<(f64, f64)> {
        let mut cuts = vec![t0];
        cuts.extend(self.switch_times().iter().copied().filter(|&s| s > t0 && s < t));
        cuts.push(t);
        cuts.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// Generator samples a Metzler check must cover on `[t0, t]`.
    fn generator_samples(&self, t0: f64, t: f64) -> Vec<(f64, Matrix)> {
        match &self.generator {
            Generator::Constant(a) => vec![(t0, a.clone())],
            Generator::PiecewiseConstant { .. } => {
                self.segments(t0, t).into_iter().map(|(lo, hi)| (lo, self.eval_within(lo, lo, hi))).collect()
            }
            Generator::Sampled { times, .. } => {
                let mut out = vec![(t0, self.eval(t0))];
                out.extend(times.iter().filter(|&&s| s > t0 && s < t).map(|&s| (s, self.eval(s))));
                out.push((t, self.eval(t)));
                out
            }
        }
    }
}

fn check_horizon(t0: f64, t: f64, step: f64) -> Result<()> {
    if !(step > 0.0) {
        return Err(Error::NonpositiveParameter(step));
    }
    if !(t >= t0) {
        return Err(Error::Shape(format!("final time {t} precedes initial time {t0}")));
    }
    Ok(())
}

/// Fixed-step RK4 for `Ẋ = G(A(τ)) X` over `[t0, t]`, restarted at each
/// switching time, with sub-steps no longer than `step`.
fn rk4_linear(
    sys: &LtvSystem,
    t0: f64,
    t: f64,
    step: f64,
    mut x: Matrix,
    lift: &dyn Fn(&Matrix) -> Matrix,
) -> Matrix {
    for (lo, hi) in sys.segments(t0, t) {
        let len = hi - lo;
        if len <= 0.0 {
            continue;
        }
        let n = (len / step).ceil().max(1.0) as usize;
        let h = len / n as f64;
        let g = |tau: f64| lift(&sys.eval_within(tau, lo, hi));
        let constant = !matches!(
            sys.generator,
            Generator::Sampled { interpolation: Interpolation::Linear, .. }
        );
        let fixed = constant.then(|| g(lo));
        for k in 0..n {
            let tau = lo + k as f64 * h;
            let (g0, gm, g1) = match &fixed {
                Some(a) => (a.clone(), a.clone(), a.clone()),
                None => (g(tau), g(tau + 0.5 * h), g(tau + h)),
            };
            let k1 = &g0 * &x;
            let k2 = &gm * (&x + &k1 * (0.5 * h));
            let k3 = &gm * (&x + &k2 * (0.5 * h));
            let k4 = &g1 * (&x + &k3 * h);
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
    }
    x
}

/// `Φ(t, t0)` by classical fixed-step RK4.
pub fn transition_matrix(sys: &LtvSystem, t0: f64, t: f64, step: f64) -> Result<Matrix> {
    check_horizon(t0, t, step)?;
    let n = sys.dim;
    if t == t0 {
        return Ok(Matrix::identity(n, n));
    }
    if step > t - t0 {
        return Err(Error::StepTooLarge { step, horizon: t - t0 });
    }
    Ok(rk4_linear(sys, t0, t, step, Matrix::identity(n, n), &|a| a.clone()))
}

/// `Φ(t, t0)` as a product of per-piece exponentials; piecewise-constant
/// generators only.
pub fn transition_matrix_exact(sys: &LtvSystem, t0: f64, t: f64) -> Result<Matrix> {
    if !sys.is_piecewise_constant() {
        return Err(Error::Shape("exact transition needs a piecewise-constant generator".into()));
    }
    if !(t >= t0) {
        return Err(Error::Shape(format!("final time {t} precedes initial time {t0}")));
    }
    let n = sys.dim;
    let mut phi = Matrix::identity(n, n);
    for (lo, hi) in sys.segments(t0, t) {
        if hi > lo {
            phi = (sys.eval_within(lo, lo, hi) * (hi - lo)).exp() * phi;
        }
    }
    Ok(phi)
}

/// Exact for piecewise-constant generators, RK4 otherwise.
pub fn transition(sys: &LtvSystem, t0: f64, t: f64, step: f64) -> Result<Matrix> {
    check_horizon(t0, t, step)?;
    if sys.is_piecewise_constant() {
        transition_matrix_exact(sys, t0, t)
    } else {
        let n = sys.dim;
        Ok(rk4_linear(sys, t0, t, step, Matrix::identity(n, n), &|a| a.clone()))
    }
}

/// `Φ^(p)(t, t0)` by RK4 on the compound dynamics `A^[p](t)`.
pub fn compound_transition(sys: &LtvSystem, p: usize, t0: f64, t: f64, step: f64) -> Result<CompoundMatrix> {
    let n = sys.dim;
    if p == 0 || p > n {
        return Err(Error::OrderOutOfRange { order: p, max: n });
    }
    check_horizon(t0, t, step)?;
    if t > t0 && step > t - t0 {
        return Err(Error::StepTooLarge { step, horizon: t - t0 });
    }
    // validates the size cap once
    let size = add_compound(&sys.eval(t0), p)?.entries.nrows();
    let lift = |a: &Matrix| add_compound(a, p).expect("order and size validated").entries;
    let entries = rk4_linear(sys, t0, t, step, Matrix::identity(size, size), &lift);
    Ok(CompoundMatrix { kind: CompoundKind::Multiplicative, order: p, ambient_dim: n, ambient_cols: n, entries })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinorViolation {
    pub t: f64,
    pub order: usize,
    pub rows: IndexSet,
    pub cols: IndexSet,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinorVerification {
    pub holds: bool,
    pub orders: Vec<usize>,
    pub first_violation: Option<MinorViolation>,
}

fn first_nonpositive_minor(phi: &Matrix, p: usize, t: f64, tol: f64) -> Result<Option<MinorViolation>> {
    let n = phi.nrows();
    let c = mult_compound(phi, p)?;
    let size = c.entries.nrows();
    let hit = (0..size).flat_map(|r| (0..size).map(move |k| (r, k))).find(|&(r, k)| c.entries[(r, k)] <= tol);
    Ok(hit.map(|(r, k)| MinorViolation {
        t,
        order: p,
        rows: IndexSet::from_rank(r, n, p).expect("rank within bounds"),
        cols: IndexSet::from_rank(k, n, p).expect("rank within bounds"),
        value: c.entries[(r, k)],
    }))
}

/// Check that every minor of the listed orders of `Φ(t, t0)` exceeds `tol` at
/// each grid time. Minors are computed from `Φ` itself.
pub fn verify_minors(
    sys: &LtvSystem,
    t0: f64,
    t_grid: &[f64],
    step: f64,
    tol: f64,
    orders: &[usize],
) -> Result<MinorVerification> {
    if let Some(&t) = t_grid.iter().find(|&&t| !(t > t0)) {
        return Err(Error::Shape(format!("grid time {t} is not after t0 = {t0}")));
    }
    check_increasing(t_grid, "grid")?;
    let per_time: Vec<Option<MinorViolation>> = t_grid
        .par_iter()
        .map(|&t| -> Result<Option<MinorViolation>> {
            let phi = transition(sys, t0, t, step)?;
            for &p in orders {
                if let Some(v) = first_nonpositive_minor(&phi, p, t, tol)? {
                    return Ok(Some(v));
                }
            }
            Ok(None)
        })
        .collect::<Result<_>>()?;
    let first_violation = per_time.into_iter().flatten().next();
    Ok(MinorVerification { holds: first_violation.is_none(), orders: orders.to_vec(), first_violation })
}

/// All odd-order minors positive at every grid time.
pub fn verify_cvds(sys: &LtvSystem, t0: f64, t_grid: &[f64], step: f64, tol: f64) -> Result<MinorVerification> {
    let orders: Vec<usize> = (1..=sys.dim).step_by(2).collect();
    verify_minors(sys, t0, t_grid, step, tol, &orders)
}

/// All minors positive at every grid time.
pub fn verify_tpds(sys: &LtvSystem, t0: f64, t_grid: &[f64], step: f64, tol: f64) -> Result<MinorVerification> {
    let orders: Vec<usize> = (1..=sys.dim).collect();
    verify_minors(sys, t0, t_grid, step, tol, &orders)
}

/// `Φ(t, t0) ≫ 0` (every entry above `tol`) for a Metzler generator.
pub fn check_positivity_condition(sys: &LtvSystem, t0: f64, t: f64, step: f64, tol: f64) -> Result<bool> {
    check_horizon(t0, t, step)?;
    for (ts, a) in sys.generator_samples(t0, t) {
        if let Some((row, col, value)) = metzler_violation(&a, tol) {
            return Err(Error::NotMetzler { t: ts, row: row + 1, col: col + 1, value });
        }
    }
    let phi = transition(sys, t0, t, step)?;
    Ok(phi.iter().all(|&x| x > tol))
}

struct LinearFlow<'a> {
    sys: &'a LtvSystem,
    step: f64,
    /// `exp(A·step)` for constant generators.
    unit: Option<Matrix>,
}

impl Propagator for LinearFlow<'_> {
    type State = DVector<f64>;

    fn advance(&self, x: &DVector<f64>, t: f64, dt: f64) -> Result<DVector<f64>> {
        if let Some(u) = self.unit.as_ref().filter(|_| dt == self.step) {
            return Ok(u * x);
        }
        if self.sys.is_piecewise_constant() {
            return Ok(transition_matrix_exact(self.sys, t, t + dt)? * x);
        }
        let x = Matrix::from_column_slice(x.len(), 1, x.as_slice());
        let y = rk4_linear(self.sys, t, t + dt, self.step, x, &|a| a.clone());
        Ok(DVector::from_column_slice(y.as_slice()))
    }

    fn observe<'a>(&self, x: &'a DVector<f64>) -> &'a [f64] {
        x.as_slice()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub monitor: MonitorOptions,
    /// Also store `Φ(t_k, t0)` at each grid time.
    pub record_phi: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { monitor: MonitorOptions::default(), record_phi: false }
    }
}

/// Integrate `ẋ = A(t) x` on a uniform grid and monitor all sign counters.
pub fn simulate(sys: &LtvSystem, x0: &[f64], t0: f64, t1: f64, opts: &SimOptions) -> Result<Trajectory> {
    if x0.len() != sys.dim {
        return Err(Error::DimensionMismatch(format!(
            "initial state of length {} for a {}-dimensional system",
            x0.len(),
            sys.dim
        )));
    }
    if x0.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroInitialCondition);
    }
    let step = opts.monitor.step;
    let unit = match &sys.generator {
        Generator::Constant(a) => Some((a * step).exp()),
        _ => None,
    };
    let flow = LinearFlow { sys, step, unit };
    let run = monitor(&flow, DVector::from_column_slice(x0), t0, t1, &opts.monitor)?;
    let mut traj = run.trajectory;
    if opts.record_phi {
        let mut phi = Matrix::identity(sys.dim, sys.dim);
        let mut out = vec![matrix_to_rows(&phi)];
        for w in traj.times.windows(2) {
            phi = transition(sys, w[0], w[1], step)? * phi;
            out.push(matrix_to_rows(&phi));
        }
        traj.phi = Some(out);
    }
    Ok(traj)
}

/// JSON schema of a system file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Constant { matrix: Vec<Vec<f64>> },
    PiecewiseConstant { breakpoints: Vec<f64>, matrices: Vec<Vec<Vec<f64>>> },
    Sampled { times: Vec<f64>, matrices: Vec<Vec<Vec<f64>>>, interpolation: Interpolation },
}

impl GeneratorSpec {
    pub fn build(&self) -> Result<LtvSystem> {
        let conv = |ms: &[Vec<Vec<f64>>]| ms.iter().map(|m| matrix_from_rows(m)).collect::<Result<Vec<_>>>();
        match self {
            GeneratorSpec::Constant { matrix } => LtvSystem::constant(matrix_from_rows(matrix)?),
            GeneratorSpec::PiecewiseConstant { breakpoints, matrices } => {
                LtvSystem::piecewise_constant(breakpoints.clone(), conv(matrices)?)
            }
            GeneratorSpec::Sampled { times, matrices, interpolation } => {
                LtvSystem::sampled(times.clone(), conv(matrices)?, *interpolation)
            }
        }
    }
}

impl From<&LtvSystem> for GeneratorSpec {
    fn from(sys: &LtvSystem) -> Self {
        let conv = |ms: &[Matrix]| ms.iter().map(matrix_to_rows).collect();
        match &sys.generator {
            Generator::Constant(a) => GeneratorSpec::Constant { matrix: matrix_to_rows(a) },
            Generator::PiecewiseConstant { breakpoints, matrices } => GeneratorSpec::PiecewiseConstant {
                breakpoints: breakpoints.clone(),
                matrices: conv(matrices),
            },
            Generator::Sampled { times, matrices, interpolation } => GeneratorSpec::Sampled {
                times: times.clone(),
                matrices: conv(matrices),
                interpolation: *interpolation,
            },
        }
    }
}
