//! Line-oriented text helpers shared by the file formats.

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Shortest round-trip decimal form of an `f64`.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

/// Cursor over the non-empty, non-comment lines of a document.
pub(crate) struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
        }
    }

    /// Next meaningful line with its 1-based number.
    pub(crate) fn next_line(&mut self) -> Option<(usize, &'a str)> {
        for (i, line) in self.inner.by_ref() {
            let t = line.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Some((i + 1, t));
            }
        }
        None
    }

    pub(crate) fn expect_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next_line()
            .ok_or_else(|| Error::parse(0, format!("unexpected end of input, expected {what}")))
    }

    /// Reads `rows` lines of `cols` numbers each.
    pub(crate) fn read_matrix(&mut self, rows: usize, cols: usize) -> Result<Matrix> {
        if rows == 0 || cols == 0 {
            return Err(Error::parse(0, "matrix block with an empty dimension"));
        }
        let mut data = Vec::new();
        for _ in 0..rows {
            let (ln, line) = self.expect_line("matrix row")?;
            let before = data.len();
            for tok in line.split_whitespace() {
                data.push(parse_f64(ln, tok)?);
            }
            if data.len() - before != cols {
                return Err(Error::parse(
                    ln,
                    format!("expected {cols} entries, found {}", data.len() - before),
                ));
            }
        }
        Matrix::new(rows, cols, data).map_err(|e| Error::parse(0, e.to_string()))
    }
}

pub(crate) fn parse_f64(line: usize, tok: &str) -> Result<f64> {
    let x: f64 = tok
        .parse()
        .map_err(|_| Error::parse(line, format!("`{tok}` is not a number")))?;
    if !x.is_finite() {
        return Err(Error::parse(line, format!("`{tok}` is not finite")));
    }
    Ok(x)
}

pub(crate) fn parse_usize(line: usize, tok: &str) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("`{tok}` is not a non-negative integer")))
}

pub(crate) fn write_matrix(out: &mut String, m: &Matrix) {
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|&x| fmt_f64(x)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}
