//! Variation diminishing property checkers.
//!
//! For a nonsingular square `A` the properties below are decided exactly from
//! the signs of its minors:
//!
//! | property | inequality | structural condition |
//! |---|---|---|
//! | non-standard VDP(p) | `s⁻(c) ≤ p ⇒ s⁺(Ac) ≤ p` | `SSR_{p+1}` |
//! | SVDP | `s⁺(Ax) ≤ s⁻(x)` | `SSR_k` for every `k` |
//! | SCVDP | `s_c⁺(Ax) ≤ s_c⁻(x)` | `SSR_r` for every odd `r` |
//! | weak CVDP | `s_c⁻(Ax) ≤ s_c⁻(x)` | `SR_r` for every odd `r` |
//!
//! The structural verdict is authoritative. When it fails, a randomized search
//! looks for a vector witnessing the violated inequality.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{ssr_verdict, SsrVerdict};
use crate::compound::{det, Matrix};
use crate::error::{Error, Result};
use crate::signvar::{s_minus, s_plus, sc_minus, sc_plus};

/// Probability that a sampled entry is replaced by an exact zero.
pub const ZERO_PROBABILITY: f64 = 0.2;

const CHUNK: usize = 2048;

/// The inequality a sampled vector is tested against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "relation", content = "p", rename_all = "snake_case")]
pub enum Relation {
    /// `s_c⁺(Ax) ≤ s_c⁻(x)`
    Scvdp,
    /// `s_c⁻(Ax) ≤ s_c⁻(x)`
    WeakCvdp,
    /// `s⁺(Ax) ≤ s⁻(x)`
    Svdp,
    /// `s⁻(x) ≤ p ⇒ s⁺(Ax) ≤ p`
    Nonstandard(usize),
    /// `s⁺(Ax) ≤ p`, for any `x ≠ 0`
    Bounded(usize),
}

impl Relation {
    /// `(before, after)` when `(x, ax)` violates the relation.
    pub fn violation(self, x: &[f64], ax: &[f64], tol: f64) -> Option<(usize, usize)> {
        let (before, after, bad) = match self {
            Relation::Scvdp => {
                let (b, a) = (sc_minus(x, tol), sc_plus(ax, tol));
                (b, a, a > b)
            }
            Relation::WeakCvdp => {
                let (b, a) = (sc_minus(x, tol), sc_minus(ax, tol));
                (b, a, a > b)
            }
            Relation::Svdp => {
                let (b, a) = (s_minus(x, tol), s_plus(ax, tol));
                (b, a, a > b)
            }
            Relation::Nonstandard(p) => {
                let (b, a) = (s_minus(x, tol), s_plus(ax, tol));
                (b, a, b <= p && a > p)
            }
            Relation::Bounded(p) => {
                let (b, a) = (s_minus(x, tol), s_plus(ax, tol));
                (b, a, a > p)
            }
        };
        bad.then_some((before, after))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub x: Vec<f64>,
    pub ax: Vec<f64>,
    /// Counter of `x` on the left of the inequality.
    pub before: usize,
    /// Counter of `Ax` on the right of the inequality.
    pub after: usize,
    /// Position of the witness in the sample stream.
    pub sample_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleBudget {
    pub num_samples: usize,
    pub seed: u64,
}

impl Default for SampleBudget {
    fn default() -> Self {
        Self { num_samples: 10_000, seed: 0 }
    }
}

/// Entries i.i.d. standard normal, each zeroed with probability 0.2; the zero
/// vector is redrawn. The draw is scaled to unit max-norm, which leaves every
/// sign pattern alone but keeps genuine entries of `Ax` from sliding under the
/// absolute zero threshold when the surviving entries happen to be tiny.
pub fn sample_vector<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..n)
            .map(|_| {
                let v: f64 = rng.sample(StandardNormal);
                if rng.random_bool(ZERO_PROBABILITY) { 0.0 } else { v }
            })
            .collect();
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale > 0.0 {
            return x.into_iter().map(|v| v / scale).collect();
        }
    }
}

/// Random `x ≠ 0` with exact zeros forced into `x` and `Ax`.
///
/// A random set `S` of rows and a random set `T` of coordinates, with
/// `|S| ≥ 1` and `|S| + |T| < m`, are chosen and a Gaussian draw is projected
/// onto `{x : (Ax)_S = 0, x_T = 0}`. Witnesses of a failing property often
/// need such zeros, which plain Gaussian draws never produce. Returns `None`
/// when `m < 2` or the constraints are degenerate.
pub fn sample_constrained<R: Rng>(rng: &mut R, a: &Matrix) -> Option<Vec<f64>> {
    let (n, m) = a.shape();
    if m < 2 {
        return None;
    }
    let rows = rng.random_range(1..=(m - 1).min(n));
    let coords = rng.random_range(0..=(m - 1 - rows));
    let s = rand::seq::index::sample(rng, n, rows);
    let t = rand::seq::index::sample(rng, m, coords);
    let k = rows + coords;
    let mut c = Matrix::zeros(k, m);
    for (r, i) in s.iter().enumerate() {
        c.row_mut(r).copy_from(&a.row(i));
    }
    for (r, j) in t.iter().enumerate() {
        c[(rows + r, j)] = 1.0;
    }
    let g = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = (&c * c.transpose()).lu().solve(&(&c * &g))?;
    let mut x = g - c.transpose() * y;
    for j in t.iter() {
        x[j] = 0.0;
    }
    let scale = x.amax();
    if !(scale > 1e-8) {
        return None;
    }
    Some((x / scale).as_slice().to_vec())
}

/// Search `num_samples` random vectors for a violation of `relation`.
///
/// Even sample indices use [`sample_vector`]; odd ones use
/// [`sample_constrained`], falling back to [`sample_vector`]. The stream is
/// split into fixed chunks, each with its own ChaCha stream, and the witness
/// with the smallest sample index is returned, so the result does not depend
/// on the thread count.
pub fn sample_vdp_counterexample(
    a: &Matrix,
    relation: Relation,
    budget: SampleBudget,
    tol: f64,
) -> Option<Counterexample> {
    let m = a.ncols();
    let chunks = budget.num_samples.div_ceil(CHUNK);
    (0..chunks).into_par_iter().find_map_first(|chunk| {
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
        rng.set_stream(chunk as u64);
        let start = chunk * CHUNK;
        let end = (start + CHUNK).min(budget.num_samples);
        (start..end).find_map(|index| {
            let x = match index % 2 {
                0 => sample_vector(&mut rng, m),
                _ => sample_constrained(&mut rng, a).unwrap_or_else(|| sample_vector(&mut rng, m)),
            };
            let ax = a * DVector::from_column_slice(&x);
            let ax = ax.as_slice();
            relation.violation(&x, ax, tol).map(|(before, after)| Counterexample {
                x: x.clone(),
                ax: ax.to_vec(),
                before,
                after,
                sample_index: index,
            })
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Property {
    Nonstandard { p: usize },
    Svdp,
    Scvdp,
    WeakCvdp,
    /// `s⁺(Uc) ≤ m − 1` for an `n × m` matrix `U`, `m < n`.
    PropSv1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Structural,
    /// Structural verdict plus a sampled witness search.
    Sampled { num_samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VdpVerdict {
    pub property: Property,
    pub holds: bool,
    /// Sign-regularity verdicts the decision was read from.
    pub ssr: Vec<SsrVerdict>,
    pub counterexample: Option<Counterexample>,
    pub method: Method,
    /// Whether sampling is consistent with the structural verdict: a found
    /// witness for a failing property, no witness for a holding one.
    pub sample_agrees: Option<bool>,
}

fn row_scale(a: &Matrix) -> f64 {
    a.row_iter().map(|r| r.amax()).product()
}

/// Rejects non-square input and `|det A| <= tol · Π_i max_j |a_ij|`.
pub fn check_nonsingular(a: &Matrix, tol: f64) -> Result<()> {
    if !a.is_square() {
        return Err(Error::Shape(format!("{}x{} matrix is not square", a.nrows(), a.ncols())));
    }
    let d = det(a)?;
    let threshold = tol * row_scale(a);
    if !(d.abs() > threshold) {
        return Err(Error::SingularMatrix { det: d, threshold });
    }
    Ok(())
}

fn finish(
    a: &Matrix,
    property: Property,
    relation: Relation,
    holds: bool,
    ssr: Vec<SsrVerdict>,
    budget: Option<SampleBudget>,
    tol: f64,
) -> VdpVerdict {
    let Some(budget) = budget else {
        return VdpVerdict {
            property,
            holds,
            ssr,
            counterexample: None,
            method: Method::Structural,
            sample_agrees: None,
        };
    };
    let counterexample = sample_vdp_counterexample(a, relation, budget, tol);
    let sample_agrees = Some(holds == counterexample.is_none());
    VdpVerdict {
        property,
        holds,
        ssr,
        counterexample,
        method: Method::Sampled { num_samples: budget.num_samples, seed: budget.seed },
        sample_agrees,
    }
}

/// `s⁻(c) ≤ p ⇒ s⁺(Ac) ≤ p` holds iff `A` is `SSR_{p+1}`.
pub fn check_nonstandard_vdp(a: &Matrix, p: usize, tol: f64, budget: Option<SampleBudget>) -> Result<VdpVerdict> {
    check_nonsingular(a, tol)?;
    let n = a.nrows();
    if p >= n {
        return Err(Error::OrderOutOfRange { order: p, max: n - 1 });
    }
    let v = ssr_verdict(a, p + 1, tol)?;
    let holds = v.is_strict();
    Ok(finish(a, Property::Nonstandard { p }, Relation::Nonstandard(p), holds, vec![v], budget, tol))
}

/// SVDP holds iff `A` is `SSR_k` for every `k`.
pub fn check_svdp(a: &Matrix, tol: f64, budget: Option<SampleBudget>) -> Result<VdpVerdict> {
    check_nonsingular(a, tol)?;
    let ssr = (1..=a.nrows()).map(|k| ssr_verdict(a, k, tol)).collect::<Result<Vec<_>>>()?;
    let holds = ssr.iter().all(SsrVerdict::is_strict);
    Ok(finish(a, Property::Svdp, Relation::Svdp, holds, ssr, budget, tol))
}

/// SCVDP holds iff `A` is `SSR_r` for every odd `r`.
pub fn check_scvdp(a: &Matrix, tol: f64, budget: Option<SampleBudget>) -> Result<VdpVerdict> {
    check_nonsingular(a, tol)?;
    let ssr = odd_verdicts(a, tol)?;
    let holds = ssr.iter().all(SsrVerdict::is_strict);
    Ok(finish(a, Property::Scvdp, Relation::Scvdp, holds, ssr, budget, tol))
}

/// Weak CVDP holds iff `A` is `SR_r` for every odd `r`.
pub fn check_weak_cvdp(a: &Matrix, tol: f64, budget: Option<SampleBudget>) -> Result<VdpVerdict> {
    check_nonsingular(a, tol)?;
    let ssr = odd_verdicts(a, tol)?;
    let holds = ssr.iter().all(SsrVerdict::is_sign_regular);
    Ok(finish(a, Property::WeakCvdp, Relation::WeakCvdp, holds, ssr, budget, tol))
}

fn odd_verdicts(a: &Matrix, tol: f64) -> Result<Vec<SsrVerdict>> {
    (1..=a.nrows()).step_by(2).map(|r| ssr_verdict(a, r, tol)).collect()
}

/// For `U ∈ R^{n×m}` with `m < n`: `s⁺(Uc) ≤ m − 1` for all `c ≠ 0` iff `U` is
/// `SSR_m`. Sampling draws coefficient vectors `c`.
pub fn check_prop_sv1(u: &Matrix, tol: f64, budget: Option<SampleBudget>) -> Result<VdpVerdict> {
    let (n, m) = u.shape();
    if m >= n {
        return Err(Error::Shape(format!("need fewer columns than rows, got {n}x{m}")));
    }
    let v = ssr_verdict(u, m, tol)?;
    let holds = v.is_strict();
    Ok(finish(u, Property::PropSv1, Relation::Bounded(m - 1), holds, vec![v], budget, tol))
}

/// `F(y)_{ij} = exp(−(i−j)² y)`: totally positive for every `y > 0`, tends to
/// the identity as `y → ∞`.
pub fn gaussian_kernel(n: usize, y: f64) -> Result<Matrix> {
    if !(y > 0.0) {
        return Err(Error::NonpositiveParameter(y));
    }
    Ok(Matrix::from_fn(n, n, |i, j| {
        let d = i as f64 - j as f64;
        (-d * d * y).exp()
    }))
}
