//! Matrix and vector ingestion (CSV or JSON nested arrays) and dense emission.

use crate::compound::Matrix;
use crate::error::{Error, Result};

pub fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(Error::Shape("matrix has no rows".into()));
    }
    let ncols = rows[0].len();
    if ncols == 0 {
        return Err(Error::Shape("matrix has no columns".into()));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(Error::Shape(format!(
            "row {} has {} entries, expected {ncols}",
            i + 1,
            r.len()
        )));
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn parse_number(tok: &str, line: usize) -> Result<f64> {
    let t = tok.trim();
    t.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Parse(format!("line {line}: '{t}' is not a finite number")))
}

fn csv_fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|t| !t.is_empty())
}

/// Rows as lines, entries separated by commas, semicolons or whitespace.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_matrix_csv(text: &str) -> Result<Matrix> {
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        rows.push(csv_fields(line).map(|t| parse_number(t, k + 1)).collect::<Result<Vec<_>>>()?);
    }
    matrix_from_rows(&rows)
}

pub fn parse_matrix_json(text: &str) -> Result<Matrix> {
    let rows: Vec<Vec<f64>> =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("matrix JSON: {e}")))?;
    matrix_from_rows(&rows)
}

/// JSON when the first non-blank character is `[`, CSV otherwise.
pub fn parse_matrix_auto(text: &str) -> Result<Matrix> {
    if text.trim_start().starts_with('[') {
        parse_matrix_json(text)
    } else {
        parse_matrix_csv(text)
    }
}

/// A JSON array or a single CSV line.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let t = text.trim();
    let v: Vec<f64> = if t.starts_with('[') {
        serde_json::from_str(t).map_err(|e| Error::Parse(format!("vector JSON: {e}")))?
    } else {
        let lines: Vec<&str> = t.lines().filter(|l| !l.trim().is_empty()).collect();
        if lines.len() != 1 {
            return Err(Error::Parse(format!("expected a single CSV line, got {}", lines.len())));
        }
        csv_fields(lines[0]).map(|tok| parse_number(tok, 1)).collect::<Result<_>>()?
    };
    if v.is_empty() {
        return Err(Error::Shape("vector is empty".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Parse("vector has non-finite entries".into()));
    }
    Ok(v)
}

/// Row-major CSV with shortest round-trip float formatting.
pub fn matrix_to_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for r in m.row_iter() {
        let line: Vec<String> = r.iter().map(|x| format!("{x:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_agree() {
        let csv = "1, 2, 3\n# comment\n4 5 6\n";
        let json = "[[1,2,3],[4,5,6]]";
        assert_eq!(parse_matrix_auto(csv).unwrap(), parse_matrix_auto(json).unwrap());
    }

    #[test]
    fn ragged_rows_are_shape_errors() {
        assert!(matches!(parse_matrix_csv("1,2\n3\n"), Err(Error::Shape(_))));
        assert!(matches!(parse_matrix_json("[[1,2],[3]]"), Err(Error::Shape(_))));
        assert!(matches!(parse_matrix_csv(""), Err(Error::Shape(_))));
    }

    #[test]
    fn bad_numbers_are_parse_errors() {
        assert!(matches!(parse_matrix_csv("1,x\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_matrix_csv("1,inf\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_vector("[1, 2"), Err(Error::Parse(_))));
    }

    #[test]
    fn vectors() {
        assert_eq!(parse_vector("[0, 1, -2]").unwrap(), vec![0.0, 1.0, -2.0]);
        assert_eq!(parse_vector("0,1,-2\n").unwrap(), vec![0.0, 1.0, -2.0]);
        assert!(parse_vector("1,2\n3,4").is_err());
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let m = Matrix::from_row_slice(2, 2, &[0.1, -1e-300, 1.0 / 3.0, 7.0]);
        assert_eq!(parse_matrix_csv(&matrix_to_csv(&m)).unwrap(), m);
    }
}
