//! CSV and text emission. Files are written under a `.partial` name and only
//! renamed to their final name once complete.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

/// A value with fixed, locale-free formatting: integers verbatim, reals with
/// 17 significant digits.
#[derive(Clone, Copy, Debug)]
pub enum Cell {
    Int(i64),
    Real(f64),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<i64> for Cell {
    fn from(n: i64) -> Self {
        Cell::Int(n)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as i64)
    }
}

pub struct CsvWriter {
    out: BufWriter<File>,
    partial: PathBuf,
    target: PathBuf,
    columns: usize,
}

fn partial_name(target: &Path) -> PathBuf {
    let mut name = target.file_name().unwrap_or_default().to_os_string();
    name.push(".partial");
    target.with_file_name(name)
}

impl CsvWriter {
    pub fn create(target: PathBuf, header: &[&str]) -> io::Result<Self> {
        let partial = partial_name(&target);
        let mut out = BufWriter::new(File::create(&partial)?);
        writeln!(out, "{}", header.join(","))?;
        Ok(Self { out, partial, target, columns: header.len() })
    }

    pub fn row(&mut self, cells: &[Cell]) -> io::Result<()> {
        debug_assert_eq!(cells.len(), self.columns);
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.out.write_all(b",")?;
            }
            match c {
                Cell::Int(n) => write!(self.out, "{n}")?,
                Cell::Real(x) => write!(self.out, "{x:.16e}")?,
            }
        }
        self.out.write_all(b"\n")
    }

    pub fn finish(self) -> io::Result<PathBuf> {
        let Self { out, partial, target, .. } = self;
        out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&partial, &target)?;
        Ok(target)
    }
}

/// Writes a whole text file through the same `.partial` protocol.
pub fn write_text(target: PathBuf, text: &str) -> io::Result<PathBuf> {
    let partial = partial_name(&target);
    fs::write(&partial, text)?;
    fs::rename(&partial, &target)?;
    Ok(target)
}
