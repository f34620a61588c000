//! CSV persistence for trajectory series: header `t,<obs1>,<obs2>,...`,
//! floats printed in their shortest round-trip form, so
//! read(write(x)) == x exactly.

use std::path::Path;

use crate::dynamics::SeriesRecord;
use crate::error::{Result, SwError};

pub fn series_to_csv(record: &SeriesRecord) -> Result<String> {
    for name in &record.names {
        if name.is_empty() || name.contains(',') || name.contains('\n') || name == "t" {
            return Err(SwError::Parameter(format!("invalid column name {name:?}")));
        }
    }
    let mut out = String::from("t");
    for name in &record.names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for t in 0..record.rows() {
        out.push_str(&t.to_string());
        for col in &record.columns {
            out.push(',');
            out.push_str(&format!("{}", col[t]));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn series_from_csv(text: &str) -> Result<SeriesRecord> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| SwError::Parse { line: 1, message: "empty file".into() })?;
    let mut fields = header.split(',');
    if fields.next() != Some("t") {
        return Err(SwError::Parse { line: 1, message: "header must start with 't'".into() });
    }
    let names: Vec<String> = fields.map(str::to_owned).collect();
    let mut columns: Vec<Vec<f64>> = names.iter().map(|_| Vec::new()).collect();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let t: usize = parts
            .next()
            .unwrap()
            .parse()
            .map_err(|e| SwError::Parse { line: lineno, message: format!("bad index: {e}") })?;
        if t != columns.first().map_or(0, Vec::len) {
            return Err(SwError::Parse {
                line: lineno,
                message: format!("row index {t} out of order"),
            });
        }
        let mut count = 0;
        for (k, part) in parts.enumerate() {
            if k >= columns.len() {
                return Err(SwError::Parse { line: lineno, message: "too many fields".into() });
            }
            let v: f64 = part.parse().map_err(|e| SwError::Parse {
                line: lineno,
                message: format!("bad value {part:?}: {e}"),
            })?;
            columns[k].push(v);
            count += 1;
        }
        if count != columns.len() {
            return Err(SwError::Parse {
                line: lineno,
                message: format!("{count} fields for {} columns", columns.len()),
            });
        }
    }
    Ok(SeriesRecord { names, columns })
}

pub fn write_series(path: &Path, record: &SeriesRecord) -> Result<()> {
    std::fs::write(path, series_to_csv(record)?)?;
    Ok(())
}

pub fn read_series(path: &Path) -> Result<SeriesRecord> {
    series_from_csv(&std::fs::read_to_string(path)?)
}
