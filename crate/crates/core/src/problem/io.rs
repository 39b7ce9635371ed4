//! Text container for replaying a trial's instance and sketches.
//!
//! ```text
//! dlrcs-instance 1
//! dims <n> <q> <r>
//! u_star
//! <n lines of r numbers>
//! b_tilde_star
//! <r lines of q numbers>
//! sketches <m>            # optional from here on
//! y
//! <q lines of m numbers>  # line k holds y_k
//! a <k>                   # repeated for k = 1..q
//! <m lines of n numbers>
//! ```
//!
//! Numbers use Rust's shortest round-trip exponent form, so writing and
//! re-reading is exact and the bytes are stable for equal inputs. Blank lines
//! and lines starting with `#` are ignored.

use super::{MeasurementSet, ProblemInstance};
use crate::error::{Error, Result};
use crate::numerics::{norm, OrthonormalBasis};
use crate::textio::{fmt_f64, parse_usize, write_matrix, Lines};

const MAGIC: &str = "dlrcs-instance 1";

#[derive(Clone, Debug)]
pub struct InstanceFile {
    pub instance: ProblemInstance,
    pub measurements: Option<MeasurementSet>,
}

pub fn write_instance(inst: &ProblemInstance, ms: Option<&MeasurementSet>) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&format!("dims {} {} {}\n", inst.n, inst.q, inst.r));
    out.push_str("u_star\n");
    write_matrix(&mut out, inst.u_star.matrix());
    out.push_str("b_tilde_star\n");
    write_matrix(&mut out, &inst.b_tilde_star);
    if let Some(ms) = ms {
        out.push_str(&format!("sketches {}\n", ms.m));
        out.push_str("y\n");
        for yk in &ms.y {
            let row: Vec<String> = yk.iter().map(|&x| fmt_f64(x)).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        for (k, ak) in ms.a.iter().enumerate() {
            out.push_str(&format!("a {}\n", k + 1));
            write_matrix(&mut out, ak);
        }
    }
    out
}

fn keyword<'a>(lines: &mut Lines<'a>, word: &str) -> Result<(usize, Vec<&'a str>)> {
    let (ln, line) = lines.expect_line(word)?;
    let mut toks = line.split_whitespace();
    if toks.next() != Some(word) {
        return Err(Error::parse(
            ln,
            format!("expected `{word}`, found `{line}`"),
        ));
    }
    Ok((ln, toks.collect()))
}

fn counts(ln: usize, toks: &[&str], expected: usize) -> Result<Vec<usize>> {
    if toks.len() != expected {
        return Err(Error::parse(ln, format!("expected {expected} integers")));
    }
    toks.iter().map(|t| parse_usize(ln, t)).collect()
}

/// Parses an instance file. Rejects malformed text, non-orthonormal `U*`, and
/// sketches that disagree with `A_k x*_k` beyond `1e-9` relative.
pub fn parse_instance(text: &str) -> Result<InstanceFile> {
    let mut lines = Lines::new(text);
    let (ln, first) = lines.expect_line("header")?;
    if first != MAGIC {
        return Err(Error::parse(ln, format!("expected `{MAGIC}` header")));
    }
    let (ln, toks) = keyword(&mut lines, "dims")?;
    let dims = counts(ln, &toks, 3)?;
    let (n, q, r) = (dims[0], dims[1], dims[2]);

    let (ln, _) = keyword(&mut lines, "u_star")?;
    let u = lines.read_matrix(n, r)?;
    let u_star = OrthonormalBasis::new(u).map_err(|e| Error::parse(ln, e.to_string()))?;
    let (ln, _) = keyword(&mut lines, "b_tilde_star")?;
    let b = lines.read_matrix(r, q)?;
    let instance =
        ProblemInstance::from_factors(u_star, b).map_err(|e| Error::parse(ln, e.to_string()))?;

    let Some((ln, line)) = lines.next_line() else {
        return Ok(InstanceFile {
            instance,
            measurements: None,
        });
    };
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.first() != Some(&"sketches") {
        return Err(Error::parse(
            ln,
            format!("expected `sketches`, found `{line}`"),
        ));
    }
    let m = counts(ln, &toks[1..], 1)?[0];
    keyword(&mut lines, "y")?;
    let y_mat = lines.read_matrix(q, m)?;
    let mut a = Vec::with_capacity(q.min(1024));
    for k in 0..q {
        let (ln, toks) = keyword(&mut lines, "a")?;
        if counts(ln, &toks, 1)?[0] != k + 1 {
            return Err(Error::parse(ln, format!("expected operator {}", k + 1)));
        }
        a.push(lines.read_matrix(m, n)?);
    }
    if let Some((ln, _)) = lines.next_line() {
        return Err(Error::parse(ln, "trailing content after last operator"));
    }
    let y: Vec<Vec<f64>> = (0..q).map(|k| y_mat.row(k).to_vec()).collect();
    for (k, (ak, yk)) in a.iter().zip(&y).enumerate() {
        let expect = ak.matvec(&instance.column(k));
        let diff: Vec<f64> = expect.iter().zip(yk).map(|(e, s)| e - s).collect();
        if norm(&diff) > 1e-9 * norm(&expect).max(1e-300) && norm(&diff) > 0.0 {
            return Err(Error::parse(
                0,
                format!("sketch {} disagrees with A_k x*_k", k + 1),
            ));
        }
    }
    Ok(InstanceFile {
        instance,
        measurements: Some(MeasurementSet { m, a, y }),
    })
}
