//! Sign-count monitoring along a trajectory.
//!
//! A [`Propagator`] advances some state; the monitor samples it on a uniform
//! grid, evaluates every sign counter of the observed vector, and localizes
//! each change of `s_c⁻` or `s⁻` to a bracket by bisection. Counters are
//! integers, so the bracket is all that is needed, not the crossing time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signvar::{sign_report, SignCountReport, DEFAULT_ZERO_TOL};

pub trait Propagator {
    type State: Clone;

    /// State at `t + dt` starting from `state` at `t`.
    fn advance(&self, state: &Self::State, t: f64, dt: f64) -> Result<Self::State>;

    /// The vector whose sign pattern is monitored.
    fn observe<'a>(&self, state: &'a Self::State) -> &'a [f64];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorOptions {
    pub step: f64,
    pub zero_tol: f64,
    /// Width at which event bisection stops.
    pub bracket_tol: f64,
    /// Abort when the observed vector exceeds this max-abs norm.
    pub max_norm: f64,
}

impl Default for MonitorOptions {
    fn default() -> Self {
        Self { step: 1e-3, zero_tol: DEFAULT_ZERO_TOL, bracket_tol: 1e-6, max_norm: 1e12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    ScMinusDrop,
    ScMinusRise,
    SMinusIncrease,
    SMinusDecrease,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignEvent {
    pub t_lo: f64,
    pub t_hi: f64,
    pub kind: EventKind,
    pub before: SignCountReport,
    pub after: SignCountReport,
}

/// Sampled sign counts along a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub counts: Vec<SignCountReport>,
    /// Ordered by `t_lo`.
    pub events: Vec<SignEvent>,
    /// Earliest grid time from which `s_c⁻ = s_c⁺` holds on every later sample.
    pub observed_settling_time: Option<f64>,
    /// Transition matrix per grid time, when recorded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<Vec<Vec<f64>>>>,
}

impl Trajectory {
    pub fn from_samples(times: Vec<f64>, states: Vec<Vec<f64>>, zero_tol: f64) -> Self {
        let counts = states.iter().map(|x| sign_report(x, zero_tol)).collect();
        let mut t = Trajectory { times, states, counts, events: Vec::new(), observed_settling_time: None, phi: None };
        t.observed_settling_time = t.settling_time();
        t
    }

    fn settling_time(&self) -> Option<f64> {
        let unsettled = self.counts.iter().rposition(|c| c.sc_minus != c.sc_plus);
        match unsettled {
            None => self.times.first().copied(),
            Some(k) => self.times.get(k + 1).copied(),
        }
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &SignEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn sc_minus_series(&self) -> Vec<usize> {
        self.counts.iter().map(|c| c.sc_minus).collect()
    }

    pub fn sc_plus_series(&self) -> Vec<usize> {
        self.counts.iter().map(|c| c.sc_plus).collect()
    }

    pub fn s_minus_series(&self) -> Vec<usize> {
        self.counts.iter().map(|c| c.s_minus).collect()
    }

    /// CSV with columns `t, x1..xn, s_minus, s_plus, sc_minus, sc_plus`.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, Vec::len);
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",x{i}"));
        }
        out.push_str(",s_minus,s_plus,sc_minus,sc_plus\n");
        for ((t, x), c) in self.times.iter().zip(&self.states).zip(&self.counts) {
            out.push_str(&format!("{t:?}"));
            for v in x {
                out.push_str(&format!(",{v:?}"));
            }
            out.push_str(&format!(",{},{},{},{}\n", c.s_minus, c.s_plus, c.sc_minus, c.sc_plus));
        }
        out
    }
}

/// Uniform grid `t0, t0 + step, …, t1` (last step shortened if needed).
pub fn uniform_grid(t0: f64, t1: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::NonpositiveParameter(step));
    }
    if !(t1 > t0) {
        return Err(Error::Shape(format!("horizon [{t0}, {t1}] is empty")));
    }
    let n = ((t1 - t0) / step - 1e-9).ceil().max(1.0) as usize;
    let mut grid: Vec<f64> = (0..n).map(|k| t0 + k as f64 * step).collect();
    grid.push(t1);
    Ok(grid)
}

/// Full monitored run: the raw states on the grid and the trajectory of the
/// observed vector.
pub struct MonitoredRun<S> {
    pub states: Vec<S>,
    pub trajectory: Trajectory,
}

pub fn monitor<P: Propagator>(
    prop: &P,
    initial: P::State,
    t0: f64,
    t1: f64,
    opts: &MonitorOptions,
) -> Result<MonitoredRun<P::State>> {
    let grid = uniform_grid(t0, t1, opts.step)?;
    let mut states = Vec::with_capacity(grid.len());
    states.push(initial);
    for w in grid.windows(2) {
        let next = prop.advance(states.last().expect("nonempty"), w[0], w[1] - w[0])?;
        check_norm(prop.observe(&next), w[1], opts.max_norm)?;
        states.push(next);
    }
    let observed = states.iter().map(|s| prop.observe(s).to_vec()).collect();
    let mut trajectory = Trajectory::from_samples(grid, observed, opts.zero_tol);

    let mut events = Vec::new();
    for k in 0..trajectory.times.len() - 1 {
        let (a, b) = (&trajectory.counts[k], &trajectory.counts[k + 1]);
        let tk = trajectory.times[k];
        let tk1 = trajectory.times[k + 1];
        if a.sc_minus != b.sc_minus {
            let (lo, hi, before, after) =
                bisect(prop, &states[k], tk, tk1, *b, opts, |c| c.sc_minus)?;
            let kind = if after.sc_minus < before.sc_minus {
                EventKind::ScMinusDrop
            } else {
                EventKind::ScMinusRise
            };
            events.push(SignEvent { t_lo: lo, t_hi: hi, kind, before, after });
        }
        if a.s_minus != b.s_minus {
            let (lo, hi, before, after) =
                bisect(prop, &states[k], tk, tk1, *b, opts, |c| c.s_minus)?;
            let kind = if after.s_minus > before.s_minus {
                EventKind::SMinusIncrease
            } else {
                EventKind::SMinusDecrease
            };
            events.push(SignEvent { t_lo: lo, t_hi: hi, kind, before, after });
        }
    }
    events.sort_by(|x, y| x.t_lo.total_cmp(&y.t_lo));
    trajectory.events = events;
    Ok(MonitoredRun { states, trajectory })
}

fn check_norm(x: &[f64], t: f64, max_norm: f64) -> Result<()> {
    let norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(norm <= max_norm) {
        return Err(Error::NumericalAbort(format!(
            "state norm {norm:e} exceeds {max_norm:e} at t = {t}"
        )));
    }
    Ok(())
}

/// Shrink `[lo, hi]` around a change of `counter`, re-integrating from the
/// left endpoint each time.
fn bisect<P: Propagator>(
    prop: &P,
    left: &P::State,
    t_lo: f64,
    t_hi: f64,
    report_hi: SignCountReport,
    opts: &MonitorOptions,
    counter: impl Fn(&SignCountReport) -> usize,
) -> Result<(f64, f64, SignCountReport, SignCountReport)> {
    let mut lo = t_lo;
    let mut hi = t_hi;
    let mut state_lo = left.clone();
    let mut rep_lo = sign_report(prop.observe(&state_lo), opts.zero_tol);
    let mut rep_hi = report_hi;
    let target = counter(&rep_lo);
    while hi - lo > opts.bracket_tol {
        let mid = 0.5 * (lo + hi);
        let state_mid = prop.advance(&state_lo, lo, mid - lo)?;
        let rep_mid = sign_report(prop.observe(&state_mid), opts.zero_tol);
        if counter(&rep_mid) == target {
            lo = mid;
            state_lo = state_mid;
            rep_lo = rep_mid;
        } else {
            hi = mid;
            rep_hi = rep_mid;
        }
    }
    Ok((lo, hi, rep_lo, rep_hi))
}
