//! Test-side oracles and generators. Everything here is written from the
//! definitions, independently of the library code paths it checks.
#![allow(dead_code)]

use cvdp::Matrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sgn(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Sign changes after deleting zeros.
pub fn s_minus_oracle(v: &[f64]) -> usize {
    let nz: Vec<i8> = v.iter().map(|&x| sgn(x)).filter(|&s| s != 0).collect();
    nz.windows(2).filter(|w| w[0] != w[1]).count()
}

fn changes(s: &[i8]) -> usize {
    s.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Maximum over every ±1 replacement of the zero entries.
pub fn s_plus_brute(v: &[f64]) -> usize {
    let base: Vec<i8> = v.iter().map(|&x| sgn(x)).collect();
    let zeros: Vec<usize> = (0..v.len()).filter(|&i| base[i] == 0).collect();
    assert!(zeros.len() <= 20, "brute force limited to 20 zeros");
    let mut best = 0;
    for mask in 0u32..(1 << zeros.len()) {
        let mut s = base.clone();
        for (b, &i) in zeros.iter().enumerate() {
            s[i] = if mask >> b & 1 == 1 { 1 } else { -1 };
        }
        best = best.max(changes(&s));
    }
    best
}

/// `(v_i, …, v_n, v_1, …, v_i)` for every `i`.
fn rotations(v: &[f64]) -> impl Iterator<Item = Vec<f64>> + '_ {
    let n = v.len();
    (0..n).map(move |i| (0..=n).map(|k| v[(i + k) % n]).collect())
}

/// Cyclic `s⁻` as the maximum over rotations with the wrap entry repeated.
pub fn sc_minus_rotation(v: &[f64]) -> usize {
    rotations(v).map(|r| s_minus_oracle(&r)).max().unwrap_or(0)
}

/// Cyclic `s⁺` over rotations; a zero at the repeated endpoint takes the same
/// replacement at both ends.
pub fn sc_plus_rotation(v: &[f64]) -> usize {
    let n = v.len();
    rotations(v)
        .map(|r| {
            let base: Vec<i8> = r.iter().map(|&x| sgn(x)).collect();
            // positions 0 and n are tied together
            let free: Vec<usize> = (0..n).filter(|&i| base[i] == 0).collect();
            let mut best = 0;
            for mask in 0u32..(1 << free.len()) {
                let mut s = base.clone();
                for (b, &i) in free.iter().enumerate() {
                    s[i] = if mask >> b & 1 == 1 { 1 } else { -1 };
                }
                s[n] = s[0];
                best = best.max(changes(&s));
            }
            best
        })
        .max()
        .unwrap_or(0)
}

/// Vector with entries drawn from `alphabet`.
pub fn small_alphabet_vector<R: Rng>(rng: &mut R, n: usize, alphabet: &[f64]) -> Vec<f64> {
    (0..n).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect()
}

/// Determinant by cofactor expansion along the first row.
pub fn det_laplace(a: &Matrix) -> f64 {
    let n = a.nrows();
    match n {
        0 => 1.0,
        1 => a[(0, 0)],
        _ => (0..n)
            .map(|j| {
                let sub = a.clone().remove_row(0).remove_column(j);
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                s * a[(0, j)] * det_laplace(&sub)
            })
            .sum(),
    }
}

/// `exp(A)` by scaling so that `‖A‖/2^s ≤ 1/2`, a 20-term Taylor series, and
/// `s` squarings.
pub fn expm_taylor(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let norm = a.iter().fold(0.0f64, |m, x| m.max(x.abs())) * n as f64;
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.5 {
        s += 1;
    }
    let b = a / 2f64.powi(s);
    let mut term = Matrix::identity(n, n);
    let mut sum = Matrix::identity(n, n);
    for k in 1..=20 {
        term = &term * &b / k as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, n: usize, m: usize) -> Matrix {
    Matrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal))
}

pub fn uniform_matrix<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_fn(n, n, |_, _| rng.random_range(lo..hi))
}

/// `D₁ K D₂` with `K_ij = exp(−γ (x_i − y_j)²)` on increasing nodes and
/// positive diagonals `D₁`, `D₂`: totally positive.
pub fn tp_matrix<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    let nodes = |rng: &mut R| -> Vec<f64> { (0..n).map(|i| i as f64 + rng.random_range(-0.3..0.3)).collect() };
    let x = nodes(rng);
    let y = nodes(rng);
    let gamma = rng.random_range(0.3..1.0);
    let d1: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let d2: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    Matrix::from_fn(n, n, |i, j| d1[i] * d2[j] * (-gamma * (x[i] - y[j]).powi(2)).exp())
}

/// Cyclic shift permutation `P` with `(Px)_i = x_{i+k}`.
pub fn cyclic_permutation(n: usize, k: usize) -> Matrix {
    Matrix::from_fn(n, n, |i, j| if j == (i + k) % n { 1.0 } else { 0.0 })
}

fn allowed_q(n: usize, i: usize, j: usize) -> bool {
    i.abs_diff(j) <= 1 || (i == 0 && j == n - 1) || (i == n - 1 && j == 0)
}

/// Metzler with off-diagonal nonzeros only on the cyclic tridiagonal pattern,
/// each allowed entry zero with probability 0.3, strongly connected.
pub fn q_plus_matrix<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    loop {
        let a = Matrix::from_fn(n, n, |i, j| {
            if i == j {
                rng.random_range(-3.0..1.0)
            } else if allowed_q(n, i, j) && !rng.random_bool(0.3) {
                rng.random_range(0.1..2.0)
            } else {
                0.0
            }
        });
        if strongly_connected(&a) {
            return a;
        }
    }
}

/// A Q⁺ matrix plus one positive entry outside the cyclic tridiagonal
/// pattern. Needs `n ≥ 4`.
pub fn metzler_outside_q<R: Rng>(rng: &mut R, n: usize) -> (Matrix, (usize, usize)) {
    assert!(n >= 4);
    let mut a = q_plus_matrix(rng, n);
    loop {
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        if i != j && !allowed_q(n, i, j) {
            a[(i, j)] = rng.random_range(0.5..2.0);
            return (a, (i, j));
        }
    }
}

/// Reachability via repeated boolean squaring of `I + |A|`.
pub fn strongly_connected(a: &Matrix) -> bool {
    let n = a.nrows();
    let mut r: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j || a[(i, j)] != 0.0).collect()).collect();
    for _ in 0..n {
        let next: Vec<Vec<bool>> =
            (0..n).map(|i| (0..n).map(|j| (0..n).any(|k| r[i][k] && r[k][j])).collect()).collect();
        r = next;
    }
    r.iter().all(|row| row.iter().all(|&b| b))
}

/// All `p`-subsets of `0..n` in lexicographic order, by recursion.
pub fn subsets(n: usize, p: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, p: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, p, &mut Vec::new(), &mut out);
    out
}

pub fn submatrix(a: &Matrix, rows: &[usize], cols: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}

/// Every order-`p` minor by cofactor expansion.
pub fn minors_laplace(a: &Matrix, p: usize) -> Vec<f64> {
    let rs = subsets(a.nrows(), p);
    let cs = subsets(a.ncols(), p);
    rs.iter().flat_map(|r| cs.iter().map(move |c| det_laplace(&submatrix(a, r, c)))).collect()
}
