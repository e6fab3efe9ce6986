//! CSV tables and gnuplot scripts for experiment reports.
//!
//! Scalars use the header `key,value`; histograms use `rank,count,fraction`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::io::IoError;

pub fn scalar_csv(rows: &[(String, String)]) -> String {
    let mut s = String::from("key,value\n");
    for (k, v) in rows {
        let _ = writeln!(s, "{k},{v}");
    }
    s
}

pub fn histogram_csv(rows: &[(usize, usize, f64)]) -> String {
    let mut s = String::from("rank,count,fraction\n");
    for (r, c, f) in rows {
        let _ = writeln!(s, "{r},{c},{f}");
    }
    s
}

/// Gnuplot script drawing the histogram stored in `csv_name`.
pub fn histogram_gnuplot(csv_name: &str, title: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set title '{title}'\n\
         set xlabel 'rank'\n\
         set ylabel 'fraction'\n\
         set yrange [0:1]\n\
         set style fill solid 0.6\n\
         set boxwidth 0.8\n\
         plot '{csv_name}' using 1:3 skip 1 with boxes notitle\n"
    )
}

fn write(path: &Path, contents: &str) -> Result<(), IoError> {
    fs::write(path, contents).map_err(|source| IoError::Write { path: path.into(), source })
}

pub fn write_scalars(path: &Path, rows: &[(String, String)]) -> Result<(), IoError> {
    write(path, &scalar_csv(rows))
}

/// Writes the histogram CSV and a `.gp` script next to it; returns the script path.
pub fn write_histogram(path: &Path, rows: &[(usize, usize, f64)], title: &str) -> Result<PathBuf, IoError> {
    write(path, &histogram_csv(rows))?;
    let script = path.with_extension("gp");
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    write(&script, &histogram_gnuplot(&name, title))?;
    Ok(script)
}
