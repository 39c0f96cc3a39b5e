//! Static matrix classification.
//!
//! Sign regularity of each order, the Metzler property, irreducibility, and the
//! structural classes
//!
//! * `M`: Metzler tridiagonal; `M⁺`: tridiagonal with positive off-diagonals,
//! * `Q`: Metzler with nonzeros only on the three central diagonals and the
//!   corners `(1,n)`, `(n,1)`; `Q⁺`: `Q` and irreducible.
//!
//! For a constant generator `A`, `ẋ = Ax` is TPDS iff `A ∈ M⁺` and CVDS iff
//! `A ∈ Q⁺`. [`cvds_tpds_flowchart`] decides the latter through `A` and `A^[3]`
//! alone.

use serde::{Deserialize, Serialize};

use crate::compound::{add_compound_uncapped, index_sets, minor_raw, IndexSet, Matrix};
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinorWitness {
    pub rows: IndexSet,
    pub cols: IndexSet,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SsrStatus {
    /// Every minor exceeds the threshold in magnitude, all with `sign`.
    StrictlySigned { sign: i8 },
    /// No two minors of opposite strict sign; `sign` is 0 when all vanish.
    WeaklySigned { sign: i8 },
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsrVerdict {
    pub order: usize,
    #[serde(flatten)]
    pub status: SsrStatus,
    /// Strict: the smallest-magnitude minor. Weak: one signed and one vanishing
    /// minor. Mixed: the first positive and first negative minor.
    pub witness: Vec<MinorWitness>,
}

impl SsrVerdict {
    pub fn is_strict(&self) -> bool {
        matches!(self.status, SsrStatus::StrictlySigned { .. })
    }

    /// Strictly or weakly signed.
    pub fn is_sign_regular(&self) -> bool {
        !matches!(self.status, SsrStatus::Mixed)
    }
}

/// Product of the row-wise max-abs entries of the submatrix; bounds every
/// term of the determinant expansion.
fn submatrix_scale(a: &Matrix, rows: &[usize], cols: &[usize]) -> f64 {
    rows.iter()
        .map(|&r| cols.iter().map(|&c| a[(r, c)].abs()).fold(0.0, f64::max))
        .product()
}

/// Largest `Π_i |a_{r_i, c_σ(i)}|` over permutations `σ`, by dynamic
/// programming over column subsets. Invariant under diagonal row and column
/// scaling in the same way as the minor itself.
fn max_term(a: &Matrix, rows: &[usize], cols: &[usize], dp: &mut Vec<f64>) -> f64 {
    let k = rows.len();
    dp.clear();
    dp.resize(1 << k, 0.0);
    dp[0] = 1.0;
    for mask in 0usize..(1 << k) {
        let i = mask.count_ones() as usize;
        if i == k || dp[mask] == 0.0 {
            continue;
        }
        for j in (0..k).filter(|j| mask >> j & 1 == 0) {
            let v = dp[mask] * a[(rows[i], cols[j])].abs();
            let next = &mut dp[mask | 1 << j];
            *next = next.max(v);
        }
    }
    dp[(1 << k) - 1]
}

/// Classify all order-`k` minors of `a`.
///
/// A minor counts as zero when `|minor| <= tol · T`, where `T` is the largest
/// single term of its permutation expansion. Minors are visited with row sets outer, column sets inner, both
/// lexicographic; the scan stops once a positive and a negative minor are seen.
pub fn ssr_verdict(a: &Matrix, k: usize, tol: f64) -> Result<SsrVerdict> {
    let (n, m) = a.shape();
    let max = n.min(m);
    if k == 0 || k > max {
        return Err(Error::OrderOutOfRange { order: k, max });
    }
    let rows = index_sets(n, k);
    let cols = index_sets(m, k);
    let witness = |r: &Vec<usize>, c: &Vec<usize>, v: f64| MinorWitness {
        rows: IndexSet::new(r.clone(), n).expect("lexicographic set"),
        cols: IndexSet::new(c.clone(), m).expect("lexicographic set"),
        value: v,
    };
    let mut buf = Vec::with_capacity(k * k);
    let mut dp = Vec::new();
    let mut first_pos = None;
    let mut first_neg = None;
    let mut first_zero = None;
    let mut smallest: Option<(f64, MinorWitness)> = None;
    'scan: for r in &rows {
        for c in &cols {
            let v = minor_raw(a, r, c, &mut buf);
            // T never exceeds the row-max product, so the cheap bound settles
            // most minors
            let vanishes = v.abs() <= tol * submatrix_scale(a, r, c) && v.abs() <= tol * max_term(a, r, c, &mut dp);
            if vanishes {
                if first_zero.is_none() {
                    first_zero = Some(witness(r, c, v));
                }
                continue;
            }
            if v > 0.0 && first_pos.is_none() {
                first_pos = Some(witness(r, c, v));
            } else if v < 0.0 && first_neg.is_none() {
                first_neg = Some(witness(r, c, v));
            }
            if first_pos.is_some() && first_neg.is_some() {
                break 'scan;
            }
            if first_zero.is_none() && smallest.as_ref().is_none_or(|(s, _)| v.abs() < *s) {
                smallest = Some((v.abs(), witness(r, c, v)));
            }
        }
    }
    let (status, witness) = match (first_pos, first_neg, first_zero) {
        (Some(p), Some(q), _) => (SsrStatus::Mixed, vec![p, q]),
        (p, q, None) => {
            let sign = if p.is_some() { 1 } else { -1 };
            debug_assert!(p.is_some() || q.is_some());
            let w = smallest.map(|(_, w)| vec![w]).unwrap_or_default();
            (SsrStatus::StrictlySigned { sign }, w)
        }
        (p, q, Some(z)) => {
            let (sign, mut w) = match (p, q) {
                (Some(p), None) => (1, vec![p]),
                (None, Some(q)) => (-1, vec![q]),
                _ => (0, vec![]),
            };
            w.push(z);
            (SsrStatus::WeaklySigned { sign }, w)
        }
    };
    Ok(SsrVerdict { order: k, status, witness })
}

pub fn is_metzler(a: &Matrix, tol: f64) -> bool {
    a.is_square() && metzler_violation(a, tol).is_none()
}

/// First off-diagonal entry below `-tol`, row-major.
pub fn metzler_violation(a: &Matrix, tol: f64) -> Option<(usize, usize, f64)> {
    let n = a.nrows();
    (0..n)
        .flat_map(|i| (0..a.ncols()).map(move |j| (i, j)))
        .find(|&(i, j)| i != j && a[(i, j)] < -tol)
        .map(|(i, j)| (i, j, a[(i, j)]))
}

fn reaches_all(n: usize, edge: impl Fn(usize, usize) -> bool) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for v in 0..n {
            if !seen[v] && u != v && edge(u, v) {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Strong connectivity of the digraph with an edge `i → j` whenever `i ≠ j`
/// and `|a_ij| > tol`: node 1 must reach every node in the graph and in its
/// transpose. A 1×1 matrix is irreducible.
pub fn is_irreducible(a: &Matrix, tol: f64) -> bool {
    if !a.is_square() || a.nrows() == 0 {
        return false;
    }
    let n = a.nrows();
    reaches_all(n, |i, j| a[(i, j)].abs() > tol) && reaches_all(n, |i, j| a[(j, i)].abs() > tol)
}

fn in_cyclic_band(i: usize, j: usize, n: usize) -> bool {
    i.abs_diff(j) <= 1 || (i == 0 && j == n - 1) || (i == n - 1 && j == 0)
}

fn off_pattern(a: &Matrix, tol: f64, allowed: impl Fn(usize, usize) -> bool) -> Option<(usize, usize)> {
    let n = a.nrows();
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .find(|&(i, j)| a[(i, j)].abs() > tol && !allowed(i, j))
}

pub fn in_q(a: &Matrix, tol: f64) -> bool {
    let n = a.nrows();
    is_metzler(a, tol) && off_pattern(a, tol, |i, j| in_cyclic_band(i, j, n)).is_none()
}

pub fn in_q_plus(a: &Matrix, tol: f64) -> bool {
    in_q(a, tol) && is_irreducible(a, tol)
}

pub fn in_m(a: &Matrix, tol: f64) -> bool {
    is_metzler(a, tol) && off_pattern(a, tol, |i, j| i.abs_diff(j) <= 1).is_none()
}

pub fn in_m_plus(a: &Matrix, tol: f64) -> bool {
    in_m(a, tol) && (1..a.nrows()).all(|i| a[(i - 1, i)] > tol && a[(i, i - 1)] > tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowchartCheck {
    AMetzler,
    AIrreducible,
    A3Metzler,
    A3Irreducible,
    Structure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowchartVerdict {
    pub cvds: bool,
    pub tpds: bool,
    /// First failed check, `None` when the system is TPDS.
    pub failed_check: Option<FlowchartCheck>,
    pub reason: String,
}

/// Decide CVDS (via `A` and `A^[3]` Metzler and irreducible) and TPDS
/// (additionally tridiagonal with positive off-diagonals) for `ẋ = Ax`.
pub fn cvds_tpds_flowchart(a: &Matrix, tol: f64) -> Result<FlowchartVerdict> {
    if !a.is_square() {
        return Err(Error::Shape(format!("{}x{} generator is not square", a.nrows(), a.ncols())));
    }
    let n = a.nrows();
    let fail = |check, reason: String| FlowchartVerdict {
        cvds: false,
        tpds: false,
        failed_check: Some(check),
        reason,
    };
    if let Some((i, j, v)) = metzler_violation(a, tol) {
        return Ok(fail(
            FlowchartCheck::AMetzler,
            format!("A is not Metzler: a({},{}) = {v}", i + 1, j + 1),
        ));
    }
    if !is_irreducible(a, tol) {
        return Ok(fail(FlowchartCheck::AIrreducible, "A is reducible".into()));
    }
    if n >= 3 {
        let a3 = add_compound_uncapped(a, 3)?;
        if let Some((i, j, v)) = metzler_violation(&a3.entries, tol) {
            return Ok(fail(
                FlowchartCheck::A3Metzler,
                format!(
                    "A^[3] is not Metzler: entry ({:?}|{:?}) = {v}",
                    a3.row_label(i),
                    a3.col_label(j)
                ),
            ));
        }
        if !is_irreducible(&a3.entries, tol) {
            return Ok(fail(FlowchartCheck::A3Irreducible, "A^[3] is reducible".into()));
        }
    }
    if let Some((i, j)) = off_pattern(a, tol, |i, j| i.abs_diff(j) <= 1) {
        return Ok(FlowchartVerdict {
            cvds: true,
            tpds: false,
            failed_check: Some(FlowchartCheck::Structure),
            reason: format!("CVDS; not TPDS: a({},{}) lies outside the tridiagonal band", i + 1, j + 1),
        });
    }
    if let Some(i) = (1..n).find(|&i| a[(i - 1, i)] <= tol || a[(i, i - 1)] <= tol) {
        return Ok(FlowchartVerdict {
            cvds: true,
            tpds: false,
            failed_check: Some(FlowchartCheck::Structure),
            reason: format!("CVDS; not TPDS: off-diagonal pair at ({},{}) is not positive", i, i + 1),
        });
    }
    Ok(FlowchartVerdict { cvds: true, tpds: true, failed_check: None, reason: "A is in M+: TPDS and CVDS".into() })
}

/// `D A D⁻¹` with `D = diag(d)`.
pub fn diag_scale(a: &Matrix, d: &[f64]) -> Result<Matrix> {
    if !a.is_square() || d.len() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "scaling vector of length {} for a {}x{} matrix",
            d.len(),
            a.nrows(),
            a.ncols()
        )));
    }
    if let Some(&bad) = d.iter().find(|&&x| !(x > 0.0)) {
        return Err(Error::NonpositiveScale(bad));
    }
    Ok(Matrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * d[i] / d[j]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub ssr: Vec<SsrVerdict>,
    pub metzler: bool,
    pub irreducible: bool,
    #[serde(rename = "in_M")]
    pub in_m: bool,
    #[serde(rename = "in_M_plus")]
    pub in_m_plus: bool,
    #[serde(rename = "in_Q")]
    pub in_q: bool,
    #[serde(rename = "in_Q_plus")]
    pub in_q_plus: bool,
    pub cvds: bool,
    pub tpds: bool,
    /// Flowchart explanation; absent for rectangular input.
    pub reason: Option<String>,
}

/// Full report. Rectangular matrices get sign-regularity verdicts only.
pub fn classify(a: &Matrix, tol: f64) -> Result<ClassificationReport> {
    let max = a.nrows().min(a.ncols());
    let ssr = (1..=max).map(|k| ssr_verdict(a, k, tol)).collect::<Result<Vec<_>>>()?;
    if !a.is_square() {
        return Ok(ClassificationReport {
            ssr,
            metzler: false,
            irreducible: false,
            in_m: false,
            in_m_plus: false,
            in_q: false,
            in_q_plus: false,
            cvds: false,
            tpds: false,
            reason: None,
        });
    }
    let flow = cvds_tpds_flowchart(a, tol)?;
    Ok(ClassificationReport {
        ssr,
        metzler: is_metzler(a, tol),
        irreducible: is_irreducible(a, tol),
        in_m: in_m(a, tol),
        in_m_plus: in_m_plus(a, tol),
        in_q: in_q(a, tol),
        in_q_plus: in_q_plus(a, tol),
        cvds: flow.cvds,
        tpds: flow.tpds,
        reason: Some(flow.reason),
    })
}
