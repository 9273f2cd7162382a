//! Plain-text file formats.
//!
//! Matrices: a line `n`, then one line `i j value` (or `i j re im`) per
//! stored entry with 1-based indices and `i <= j`; unlisted entries are zero
//! and the lower triangle is filled by symmetry. Sign vectors: a line `n`,
//! then `n` lines of `+1` / `-1`. Configurations: a line `n r`, then `n`
//! rows of `r` numbers. Blank lines and lines starting with `#` are skipped
//! everywhere.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::kuramoto::Trajectory;
use crate::problem::{AnyCost, SignVector, SphereConfig, SymmetricCost};
use crate::scalar::{Complex64, Scalar};

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn content_lines(reader: impl Read) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push((idx + 1, trimmed.to_string()));
    }
    Ok(out)
}

fn parse_number<F: std::str::FromStr>(token: &str, line: usize, what: &str) -> Result<F> {
    token
        .parse()
        .map_err(|_| parse_error(line, format!("cannot parse {what} from {token:?}")))
}

fn parse_size(lines: &[(usize, String)]) -> Result<usize> {
    let (line, text) = lines.first().ok_or_else(|| parse_error(1, "missing size line"))?;
    let n: usize = parse_number(text, *line, "matrix size")?;
    if n == 0 {
        return Err(parse_error(*line, "size must be positive"));
    }
    Ok(n)
}

pub fn parse_cost(reader: impl Read) -> Result<AnyCost> {
    let lines = content_lines(reader)?;
    let n = parse_size(&lines)?;
    let mut complex = None;
    let mut entries: Vec<(usize, usize, f64, f64)> = Vec::with_capacity(lines.len());
    let mut seen = std::collections::HashSet::new();
    for (line, text) in &lines[1..] {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let is_complex = match tokens.len() {
            3 => false,
            4 => true,
            k => return Err(parse_error(*line, format!("expected 3 or 4 fields, found {k}"))),
        };
        if *complex.get_or_insert(is_complex) != is_complex {
            return Err(parse_error(*line, "mixed real and complex entry lines"));
        }
        let i: usize = parse_number(tokens[0], *line, "row index")?;
        let j: usize = parse_number(tokens[1], *line, "column index")?;
        if i == 0 || j == 0 || i > n || j > n {
            return Err(parse_error(*line, format!("index ({i}, {j}) outside 1..={n}")));
        }
        if i > j {
            return Err(parse_error(*line, format!("entry ({i}, {j}) is below the diagonal; store i <= j")));
        }
        if !seen.insert((i, j)) {
            return Err(parse_error(*line, format!("duplicate entry ({i}, {j})")));
        }
        let re: f64 = parse_number(tokens[2], *line, "value")?;
        let im: f64 = if is_complex { parse_number(tokens[3], *line, "imaginary part")? } else { 0.0 };
        if !re.is_finite() || !im.is_finite() {
            return Err(parse_error(*line, "non-finite value"));
        }
        if i == j && im != 0.0 {
            return Err(parse_error(*line, "diagonal entries of a Hermitian matrix must be real"));
        }
        entries.push((i - 1, j - 1, re, im));
    }
    if complex == Some(true) {
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for (i, j, re, im) in entries {
            m[(i, j)] = Complex64::new(re, im);
            m[(j, i)] = Complex64::new(re, -im);
        }
        Ok(AnyCost::Complex(SymmetricCost::new(m)?))
    } else {
        let mut m = DMatrix::<f64>::zeros(n, n);
        for (i, j, re, _) in entries {
            m[(i, j)] = re;
            m[(j, i)] = re;
        }
        Ok(AnyCost::Real(SymmetricCost::new(m)?))
    }
}

pub fn read_cost(path: impl AsRef<Path>) -> Result<AnyCost> {
    parse_cost(File::open(path)?)
}

/// Writes the upper triangle, skipping exact zeros. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn format_cost<T: Scalar>(c: &SymmetricCost<T>, mut out: impl Write) -> Result<()> {
    let n = c.n();
    writeln!(out, "{n}")?;
    for i in 0..n {
        for j in i..n {
            let (re, im) = c.entries()[(i, j)].parts();
            if T::IS_COMPLEX {
                if re != 0.0 || im != 0.0 {
                    writeln!(out, "{} {} {re:?} {im:?}", i + 1, j + 1)?;
                }
            } else if re != 0.0 {
                writeln!(out, "{} {} {re:?}", i + 1, j + 1)?;
            }
        }
    }
    Ok(())
}

pub fn write_cost<T: Scalar>(c: &SymmetricCost<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    format_cost(c, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn parse_signs(reader: impl Read) -> Result<SignVector> {
    let lines = content_lines(reader)?;
    let n = parse_size(&lines)?;
    if lines.len() - 1 != n {
        return Err(invalid(format!("sign file declares {n} entries but lists {}", lines.len() - 1)));
    }
    let mut signs = Vec::with_capacity(n);
    for (line, text) in &lines[1..] {
        let v: f64 = parse_number(text, *line, "sign")?;
        if v != 1.0 && v != -1.0 {
            return Err(parse_error(*line, format!("sign must be +1 or -1, got {text}")));
        }
        signs.push(v);
    }
    SignVector::from_signs(&signs)
}

pub fn read_signs(path: impl AsRef<Path>) -> Result<SignVector> {
    parse_signs(File::open(path)?)
}

pub fn format_signs(z: &SignVector, mut out: impl Write) -> Result<()> {
    writeln!(out, "{}", z.n())?;
    for s in z.entries().iter() {
        writeln!(out, "{}", if *s > 0.0 { "1" } else { "-1" })?;
    }
    Ok(())
}

pub fn write_signs(z: &SignVector, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    format_signs(z, &mut out)?;
    out.flush()?;
    Ok(())
}

/// Real configurations only; complex rows would need a separate layout.
pub fn format_config(y: &SphereConfig<f64>, mut out: impl Write) -> Result<()> {
    writeln!(out, "{} {}", y.n(), y.r())?;
    for row in y.rows().row_iter() {
        let fields: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        writeln!(out, "{}", fields.join(" "))?;
    }
    Ok(())
}

pub fn write_config(y: &SphereConfig<f64>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    format_config(y, &mut out)?;
    out.flush()?;
    Ok(())
}

/// Rows are renormalized, so hand-written files need not be exact.
pub fn parse_config(reader: impl Read) -> Result<SphereConfig<f64>> {
    let lines = content_lines(reader)?;
    let (line, header) = lines.first().ok_or_else(|| parse_error(1, "missing header line"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(parse_error(*line, "header must be \"n r\""));
    }
    let n: usize = parse_number(dims[0], *line, "n")?;
    let r: usize = parse_number(dims[1], *line, "r")?;
    if lines.len() - 1 != n {
        return Err(invalid(format!("configuration declares {n} rows but lists {}", lines.len() - 1)));
    }
    let mut m = DMatrix::zeros(n, r);
    for (i, (line, text)) in lines[1..].iter().enumerate() {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() != r {
            return Err(parse_error(*line, format!("expected {r} values, found {}", tokens.len())));
        }
        for (k, t) in tokens.iter().enumerate() {
            m[(i, k)] = parse_number(t, *line, "entry")?;
        }
    }
    SphereConfig::normalize(m)
}

pub fn read_config(path: impl AsRef<Path>) -> Result<SphereConfig<f64>> {
    parse_config(File::open(path)?)
}

/// CSV with header `t,theta_1,...,theta_n`.
pub fn write_trajectory(tr: &Trajectory, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = tr.states.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("theta_{i}")));
    w.write_record(&header)?;
    for (t, state) in tr.times.iter().zip(&tr.states) {
        let mut record = vec![format!("{t:?}")];
        record.extend(state.iter().map(|x| format!("{x:?}")));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
