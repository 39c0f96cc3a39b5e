//! Minors, lexicographic index sets and compound matrices.
//!
//! The `p`-th multiplicative compound `A^(p)` collects every `p × p` minor of
//! `A`, rows and columns indexed by `p`-subsets in lexicographic order. It is
//! multiplicative, `(AB)^(p) = A^(p) B^(p)` (Cauchy–Binet).
//!
//! The `p`-th additive compound `A^[p]` is the derivative of `(I + hA)^(p)` at
//! `h = 0`; it generates the dynamics of the order-`p` minors of a transition
//! matrix. It is built here from its closed-form entry rule, and
//! [`add_compound_fd`] / [`add_compound_richardson`] recover it from the
//! defining limit instead.

use itertools::Itertools;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Largest ambient dimension accepted by the capped compound constructors.
pub const MAX_COMPOUND_DIM: usize = 14;

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// All `p`-subsets of `0..n` in lexicographic order (0-based).
pub fn index_sets(n: usize, p: usize) -> Vec<Vec<usize>> {
    (0..n).combinations(p).collect()
}

/// Lexicographic rank of a strictly increasing 0-based index set among all
/// `p`-subsets of `0..n`.
pub fn lex_rank(indices: &[usize], n: usize) -> Result<usize> {
    let p = indices.len();
    if indices.windows(2).any(|w| w[0] >= w[1]) || indices.last().is_some_and(|&l| l >= n) {
        return Err(Error::Shape(format!(
            "index set {indices:?} is not strictly increasing within 0..{n}"
        )));
    }
    let mut rank = 0;
    let mut start = 0;
    for (k, &c) in indices.iter().enumerate() {
        for j in start..c {
            rank += binomial(n - 1 - j, p - 1 - k);
        }
        start = c + 1;
    }
    Ok(rank)
}

pub fn lex_unrank(rank: usize, n: usize, p: usize) -> Result<Vec<usize>> {
    let count = binomial(n, p);
    if rank >= count {
        return Err(Error::RankOutOfRange { rank, n, p, count });
    }
    let mut out = Vec::with_capacity(p);
    let mut r = rank;
    let mut j = 0;
    for k in 0..p {
        loop {
            let block = binomial(n - 1 - j, p - 1 - k);
            if r < block {
                break;
            }
            r -= block;
            j += 1;
        }
        out.push(j);
        j += 1;
    }
    Ok(out)
}

/// A strictly increasing set of row or column indices.
///
/// Stored 0-based; serialized 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "IndexSetRepr", try_from = "IndexSetRepr")]
pub struct IndexSet {
    indices: Vec<usize>,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct IndexSetRepr {
    indices: Vec<usize>,
    n: usize,
    rank: usize,
}

impl From<IndexSet> for IndexSetRepr {
    fn from(s: IndexSet) -> Self {
        let rank = s.rank();
        IndexSetRepr { indices: s.one_based(), n: s.n, rank }
    }
}

impl TryFrom<IndexSetRepr> for IndexSet {
    type Error = Error;
    fn try_from(r: IndexSetRepr) -> Result<Self> {
        if r.indices.contains(&0) {
            return Err(Error::Parse("index sets are 1-based".into()));
        }
        let s = IndexSet::new(r.indices.iter().map(|i| i - 1).collect(), r.n)?;
        if s.rank() != r.rank {
            return Err(Error::Parse(format!("rank {} inconsistent with {:?}", r.rank, r.indices)));
        }
        Ok(s)
    }
}

impl IndexSet {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        lex_rank(&indices, n)?;
        Ok(Self { indices, n })
    }

    pub fn from_one_based(indices: &[usize], n: usize) -> Result<Self> {
        if indices.contains(&0) {
            return Err(Error::Shape("index sets are 1-based".into()));
        }
        Self::new(indices.iter().map(|i| i - 1).collect(), n)
    }

    pub fn from_rank(rank: usize, n: usize, p: usize) -> Result<Self> {
        Ok(Self { indices: lex_unrank(rank, n, p)?, n })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        lex_rank(&self.indices, self.n).expect("validated on construction")
    }
}

/// Determinant of a `p × p` row-major buffer; closed forms for `p <= 3`,
/// LU with partial pivoting otherwise. The buffer is overwritten.
pub(crate) fn det_in_place(m: &mut [f64], p: usize) -> f64 {
    match p {
        0 => 1.0,
        1 => m[0],
        2 => m[0] * m[3] - m[1] * m[2],
        3 => {
            m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
                + m[2] * (m[3] * m[7] - m[4] * m[6])
        }
        _ => {
            let mut det = 1.0;
            for k in 0..p {
                let (piv, pmax) = (k..p)
                    .map(|r| (r, m[r * p + k].abs()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
                if pmax == 0.0 {
                    return 0.0;
                }
                if piv != k {
                    for c in 0..p {
                        m.swap(k * p + c, piv * p + c);
                    }
                    det = -det;
                }
                let d = m[k * p + k];
                det *= d;
                for r in k + 1..p {
                    let f = m[r * p + k] / d;
                    if f != 0.0 {
                        for c in k + 1..p {
                            m[r * p + c] -= f * m[k * p + c];
                        }
                    }
                }
            }
            det
        }
    }
}

pub fn det(a: &Matrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "determinant of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let p = a.nrows();
    let mut buf: Vec<f64> = (0..p * p).map(|k| a[(k / p, k % p)]).collect();
    Ok(det_in_place(&mut buf, p))
}

/// Minor on 0-based row and column index slices; no validation.
pub(crate) fn minor_raw(a: &Matrix, rows: &[usize], cols: &[usize], buf: &mut Vec<f64>) -> f64 {
    let p = rows.len();
    buf.clear();
    for &r in rows {
        for &c in cols {
            buf.push(a[(r, c)]);
        }
    }
    det_in_place(buf, p)
}

/// The minor `A(rows | cols)`.
pub fn minor(a: &Matrix, rows: &IndexSet, cols: &IndexSet) -> Result<f64> {
    if rows.len() != cols.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows vs {} columns",
            rows.len(),
            cols.len()
        )));
    }
    if rows.ambient_dim() != a.nrows() || cols.ambient_dim() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "index sets over {}x{} for a {}x{} matrix",
            rows.ambient_dim(),
            cols.ambient_dim(),
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(minor_raw(a, rows.indices(), cols.indices(), &mut Vec::new()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompoundKind {
    Multiplicative,
    Additive,
}

/// A multiplicative or additive compound together with its index-set labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CompoundMatrix {
    pub kind: CompoundKind,
    pub order: usize,
    /// Row count of the source matrix.
    pub ambient_dim: usize,
    /// Column count of the source matrix (equal to `ambient_dim` when square).
    pub ambient_cols: usize,
    pub entries: Matrix,
}

impl CompoundMatrix {
    pub fn row_label(&self, rank: usize) -> Vec<usize> {
        lex_unrank(rank, self.ambient_dim, self.order)
            .expect("rank within compound bounds")
            .into_iter()
            .map(|i| i + 1)
            .collect()
    }

    pub fn col_label(&self, rank: usize) -> Vec<usize> {
        lex_unrank(rank, self.ambient_cols, self.order)
            .expect("rank within compound bounds")
            .into_iter()
            .map(|i| i + 1)
            .collect()
    }

    /// Entry at the given 1-based row and column index sets.
    pub fn get(&self, rows: &[usize], cols: &[usize]) -> Result<f64> {
        let r = IndexSet::from_one_based(rows, self.ambient_dim)?.rank();
        let c = IndexSet::from_one_based(cols, self.ambient_cols)?.rank();
        if rows.len() != self.order || cols.len() != self.order {
            return Err(Error::DimensionMismatch(format!(
                "compound of order {} addressed with {} rows / {} cols",
                self.order,
                rows.len(),
                cols.len()
            )));
        }
        Ok(self.entries[(r, c)])
    }

    /// Dense entries as a row-major CSV block.
    pub fn to_csv(&self) -> String {
        crate::io::matrix_to_csv(&self.entries)
    }
}

#[derive(Serialize, Deserialize)]
struct CompoundRepr {
    kind: CompoundKind,
    order: usize,
    ambient_dim: usize,
    ambient_cols: usize,
    row_labels: Vec<Vec<usize>>,
    col_labels: Vec<Vec<usize>>,
    entries: Vec<Vec<f64>>,
}

impl Serialize for CompoundMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CompoundRepr {
            kind: self.kind,
            order: self.order,
            ambient_dim: self.ambient_dim,
            ambient_cols: self.ambient_cols,
            row_labels: (0..self.entries.nrows()).map(|r| self.row_label(r)).collect(),
            col_labels: (0..self.entries.ncols()).map(|c| self.col_label(c)).collect(),
            entries: crate::io::matrix_to_rows(&self.entries),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CompoundMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = CompoundRepr::deserialize(d)?;
        let entries = crate::io::matrix_from_rows(&r.entries).map_err(D::Error::custom)?;
        if entries.nrows() != binomial(r.ambient_dim, r.order)
            || entries.ncols() != binomial(r.ambient_cols, r.order)
        {
            return Err(D::Error::custom("compound entries do not match C(n,p)"));
        }
        Ok(CompoundMatrix {
            kind: r.kind,
            order: r.order,
            ambient_dim: r.ambient_dim,
            ambient_cols: r.ambient_cols,
            entries,
        })
    }
}

fn check_cap(a: &Matrix) -> Result<()> {
    let dim = a.nrows().max(a.ncols());
    if dim > MAX_COMPOUND_DIM {
        return Err(Error::TooLarge { dim, cap: MAX_COMPOUND_DIM });
    }
    Ok(())
}

/// `A^(p)` for an `n × m` matrix, `1 <= p <= min(n, m)`, capped at
/// [`MAX_COMPOUND_DIM`].
pub fn mult_compound(a: &Matrix, p: usize) -> Result<CompoundMatrix> {
    check_cap(a)?;
    mult_compound_uncapped(a, p)
}

pub fn mult_compound_uncapped(a: &Matrix, p: usize) -> Result<CompoundMatrix> {
    let (n, m) = a.shape();
    let max = n.min(m);
    if p == 0 || p > max {
        return Err(Error::OrderOutOfRange { order: p, max });
    }
    let row_sets = index_sets(n, p);
    let col_sets = index_sets(m, p);
    let nr = row_sets.len();
    let mut data = vec![0.0; nr * col_sets.len()];
    // column-major: one chunk per column index set
    data.par_chunks_mut(nr).zip(col_sets.par_iter()).for_each(|(col, beta)| {
        let mut buf = Vec::with_capacity(p * p);
        for (slot, alpha) in col.iter_mut().zip(&row_sets) {
            *slot = minor_raw(a, alpha, beta, &mut buf);
        }
    });
    Ok(CompoundMatrix {
        kind: CompoundKind::Multiplicative,
        order: p,
        ambient_dim: n,
        ambient_cols: m,
        entries: Matrix::from_vec(nr, col_sets.len(), data),
    })
}

/// `A^[p]` from the closed-form entry rule:
///
/// * diagonal entry `(α|α)` is `Σ_k a_{i_k i_k}`,
/// * if `α` and `β` share all but one index, `i_ℓ ∈ α` and `j_m ∈ β`, the entry
///   is `(-1)^(ℓ+m) a_{i_ℓ j_m}`,
/// * every other entry is zero.
pub fn add_compound(a: &Matrix, p: usize) -> Result<CompoundMatrix> {
    check_cap(a)?;
    add_compound_uncapped(a, p)
}

pub fn add_compound_uncapped(a: &Matrix, p: usize) -> Result<CompoundMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("additive compound needs a square matrix".into()));
    }
    let n = a.nrows();
    if p == 0 || p > n {
        return Err(Error::OrderOutOfRange { order: p, max: n });
    }
    let size = binomial(n, p);
    let mut out = Matrix::zeros(size, size);
    let mut beta = Vec::with_capacity(p);
    for (r, alpha) in index_sets(n, p).into_iter().enumerate() {
        out[(r, r)] = alpha.iter().map(|&i| a[(i, i)]).sum();
        for (l, &i) in alpha.iter().enumerate() {
            for j in (0..n).filter(|j| !alpha.contains(j)) {
                beta.clear();
                beta.extend(alpha.iter().copied().filter(|&x| x != i));
                let m = beta.partition_point(|&x| x < j);
                beta.insert(m, j);
                let c = lex_rank(&beta, n).expect("valid index set");
                let sign = if (l + m) % 2 == 0 { 1.0 } else { -1.0 };
                out[(r, c)] = sign * a[(i, j)];
            }
        }
    }
    Ok(CompoundMatrix {
        kind: CompoundKind::Additive,
        order: p,
        ambient_dim: n,
        ambient_cols: n,
        entries: out,
    })
}

/// Forward difference `((I + hA)^(p) − I) / h`.
pub fn add_compound_fd(a: &Matrix, p: usize, h: f64) -> Result<CompoundMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("additive compound needs a square matrix".into()));
    }
    if !(h > 0.0) {
        return Err(Error::NonpositiveParameter(h));
    }
    let n = a.nrows();
    let shifted = Matrix::identity(n, n) + a * h;
    let c = mult_compound(&shifted, p)?;
    let size = c.entries.nrows();
    let entries = (&c.entries - Matrix::identity(size, size)) / h;
    Ok(CompoundMatrix { kind: CompoundKind::Additive, ..c }.with_entries(entries))
}

/// Richardson extrapolation `2 D(h/2) − D(h)` of the forward difference,
/// removing its first-order error term.
pub fn add_compound_richardson(a: &Matrix, p: usize, h: f64) -> Result<CompoundMatrix> {
    let coarse = add_compound_fd(a, p, h)?;
    let fine = add_compound_fd(a, p, h / 2.0)?;
    let entries = &fine.entries * 2.0 - &coarse.entries;
    Ok(fine.with_entries(entries))
}

impl CompoundMatrix {
    fn with_entries(self, entries: Matrix) -> Self {
        Self { entries, ..self }
    }
}
