//! Sign variation counters.
//!
//! For a real vector `y` of length `n`:
//!
//! * `s⁻(y)` counts sign changes after deleting zero entries,
//! * `s⁺(y)` is the largest count obtainable by replacing every zero with `±1`,
//! * `s_c⁻`, `s_c⁺` are the cyclic versions, where `y_n` is followed by `y_1`.
//!
//! An entry is treated as zero iff `|y_i| <= zero_tol`. The cyclic counters are
//! computed from the linear ones: a cyclic count equals the linear count rounded
//! up to the next even number.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

/// Sign of `x` as -1, 0 or 1 with `|x| <= zero_tol` mapped to 0.
#[inline]
pub fn sign(x: f64, zero_tol: f64) -> i8 {
    if x.abs() <= zero_tol {
        0
    } else if x > 0.0 {
        1
    } else {
        -1
    }
}

pub fn signs(v: &[f64], zero_tol: f64) -> Vec<i8> {
    v.iter().map(|&x| sign(x, zero_tol)).collect()
}

/// Membership in V: nonzero endpoints, and every interior zero is flanked by
/// neighbours of strictly opposite sign. For `n = 1` there are no adjacent
/// pairs, `σ ≡ 0` extends to all of `R¹`, and V is taken to be `R¹`.
pub fn in_v(v: &[f64], zero_tol: f64) -> bool {
    v_violation(&signs(v, zero_tol)).is_none()
}

fn v_violation(s: &[i8]) -> Option<String> {
    let n = s.len();
    if n == 0 {
        return Some("empty vector".into());
    }
    if n == 1 {
        return None;
    }
    if s[0] == 0 {
        return Some("first entry is zero".into());
    }
    if s[n - 1] == 0 {
        return Some("last entry is zero".into());
    }
    (1..n - 1)
        .find(|&i| s[i] == 0 && s[i - 1] * s[i + 1] >= 0)
        .map(|i| format!("interior zero at position {} is not bridged by opposite signs", i + 1))
}

/// Number of sign alternations of a vector in V.
pub fn sigma(v: &[f64], zero_tol: f64) -> Result<usize> {
    let s = signs(v, zero_tol);
    if let Some(why) = v_violation(&s) {
        return Err(Error::NotInV(why));
    }
    Ok(count_changes(s.iter().copied().filter(|&x| x != 0)))
}

fn count_changes(mut nonzero: impl Iterator<Item = i8>) -> usize {
    let Some(mut prev) = nonzero.next() else {
        return 0;
    };
    let mut count = 0;
    for s in nonzero {
        if s != prev {
            count += 1;
            prev = s;
        }
    }
    count
}

pub fn s_minus(v: &[f64], zero_tol: f64) -> usize {
    s_minus_signs(&signs(v, zero_tol))
}

pub fn s_plus(v: &[f64], zero_tol: f64) -> usize {
    s_plus_signs(&signs(v, zero_tol))
}

pub fn sc_minus(v: &[f64], zero_tol: f64) -> usize {
    round_up_even(s_minus(v, zero_tol))
}

pub fn sc_plus(v: &[f64], zero_tol: f64) -> usize {
    round_up_even(s_plus(v, zero_tol))
}

pub(crate) fn s_minus_signs(s: &[i8]) -> usize {
    count_changes(s.iter().copied().filter(|&x| x != 0))
}

/// Linear scan over maximal zero runs.
///
/// A boundary run of length `L` contributes `L` changes. An interior run of
/// length `L` between signs `a` and `b` spans `L + 1` transitions; all of them
/// can alternate iff `b == a·(-1)^(L+1)`, otherwise one is lost.
pub(crate) fn s_plus_signs(s: &[i8]) -> usize {
    let n = s.len();
    let mut count = 0usize;
    let mut last_sign: Option<i8> = None;
    let mut run = 0usize;
    for &x in s {
        if x == 0 {
            run += 1;
            continue;
        }
        match last_sign {
            None => count += run,
            Some(a) => {
                let parity_ok = if (run + 1) % 2 == 0 { a == x } else { a != x };
                count += if parity_ok { run + 1 } else { run };
            }
        }
        last_sign = Some(x);
        run = 0;
    }
    match last_sign {
        None => n.saturating_sub(1),
        Some(_) => count + run,
    }
}

#[inline]
pub(crate) fn round_up_even(k: usize) -> usize {
    k + (k % 2)
}

/// All sign counters of one vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignCountReport {
    /// Present only when the vector lies in V.
    pub sigma: Option<usize>,
    pub s_minus: usize,
    pub s_plus: usize,
    pub sc_minus: usize,
    pub sc_plus: usize,
    #[serde(rename = "in_V")]
    pub in_v: bool,
    #[serde(rename = "in_Vc")]
    pub in_vc: bool,
}

pub fn sign_report(v: &[f64], zero_tol: f64) -> SignCountReport {
    let s = signs(v, zero_tol);
    let s_minus = s_minus_signs(&s);
    let s_plus = s_plus_signs(&s);
    let sc_minus = round_up_even(s_minus);
    let sc_plus = round_up_even(s_plus);
    let in_v = v_violation(&s).is_none();
    SignCountReport {
        sigma: in_v.then_some(s_minus),
        s_minus,
        s_plus,
        sc_minus,
        sc_plus,
        in_v,
        in_vc: sc_minus == sc_plus,
    }
}
