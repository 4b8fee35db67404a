//! CSV output and input.
//!
//! Files are comma-separated with a header row and LF line endings. Floats are
//! written in scientific notation with 17 significant digits, so every value
//! parses back to the same bits. Optional values are written as empty
//! fields. Metadata lines start with `#` and precede the header.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{CliError, CliResult};

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Writes a header, optional `# key=value` metadata lines, and rows.
pub struct CsvOut {
    writer: csv::Writer<BufWriter<File>>,
    path: std::path::PathBuf,
}

impl CsvOut {
    pub fn create(path: &Path, header: &[&str], metadata: &[(String, String)]) -> CliResult<Self> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut buf = BufWriter::new(file);
        for (k, v) in metadata {
            writeln!(buf, "# {k}={v}").map_err(|e| CliError::io(path, e))?;
        }
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf);
        writer.write_record(header).map_err(|e| CliError::csv(path, e))?;
        Ok(CsvOut { writer, path: path.to_path_buf() })
    }

    pub fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(|e| CliError::csv(&self.path, e))
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.writer.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

/// `iter,theta_1..theta_d` table of a sample matrix. `first_iter` labels row 0.
pub fn write_matrix(path: &Path, prefix: &str, m: &Array2<f64>, first_iter: usize) -> CliResult<()> {
    let mut header = vec!["iter".to_string()];
    header.extend((1..=m.ncols()).map(|j| format!("{prefix}_{j}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut out = CsvOut::create(path, &header, &[])?;
    for (k, row) in m.outer_iter().enumerate() {
        let mut fields = vec![(first_iter + k).to_string()];
        fields.extend(row.iter().map(|&x| fmt_f64(x)));
        out.row(&fields)?;
    }
    out.finish()
}

/// A parsed CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Column as floats; empty fields become NaN.
    pub fn f64_column(&self, name: &str) -> CliResult<Vec<f64>> {
        let j = self.column(name).ok_or_else(|| CliError::Config(format!("missing column `{name}`")))?;
        self.rows
            .iter()
            .map(|r| {
                let s = r[j].as_str();
                if s.is_empty() {
                    Ok(f64::NAN)
                } else {
                    s.parse().map_err(|_| CliError::Config(format!("bad number `{s}` in column `{name}`")))
                }
            })
            .collect()
    }
}

pub fn read_table(path: &Path) -> CliResult<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let metadata = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l[1..].trim().split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| CliError::csv(path, e))?.iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(String::from).collect()).map_err(|e| CliError::csv(path, e)))
        .collect::<CliResult<_>>()?;
    Ok(Table { metadata, header, rows })
}

/// Reads a `iter,theta_1..theta_d`-style table back into a matrix, dropping
/// the first column.
pub fn read_matrix(path: &Path) -> CliResult<Array2<f64>> {
    let t = read_table(path)?;
    let d = t.header.len().saturating_sub(1);
    let mut m = Array2::zeros((t.rows.len(), d));
    for (i, row) in t.rows.iter().enumerate() {
        for j in 0..d {
            m[[i, j]] = row[j + 1]
                .parse()
                .map_err(|_| CliError::Config(format!("{}: bad number `{}`", path.display(), row[j + 1])))?;
        }
    }
    Ok(m)
}

/// Logistic-regression data: header `y,x1,..,xd`, labels in {0, 1}.
pub fn read_logistic_data(path: &Path) -> CliResult<(Array2<f64>, ndarray::Array1<f64>)> {
    let t = read_table(path)?;
    let d = t.header.len().saturating_sub(1);
    let expected: Vec<String> =
        std::iter::once("y".to_string()).chain((1..=d).map(|j| format!("x{j}"))).collect();
    if d == 0 || t.header != expected {
        return Err(CliError::Config(format!("{}: header must be y,x1,..,xd", path.display())));
    }
    let m = read_all_numbers(&t, path)?;
    let y = m.column(0).to_owned();
    let x = m.slice(ndarray::s![.., 1..]).to_owned();
    Ok((x, y))
}

fn read_all_numbers(t: &Table, path: &Path) -> CliResult<Array2<f64>> {
    let cols = t.header.len();
    let mut m = Array2::zeros((t.rows.len(), cols));
    for (i, row) in t.rows.iter().enumerate() {
        for j in 0..cols {
            m[[i, j]] = row[j].trim().parse().map_err(|_| {
                CliError::Config(format!("{}: row {}: bad number `{}`", path.display(), i + 1, row[j]))
            })?;
        }
    }
    Ok(m)
}
