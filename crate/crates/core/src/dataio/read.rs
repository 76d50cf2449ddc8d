use std::io::Read;
use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};

fn numeric(field: &str) -> bool {
    let f = field.trim().trim_matches('"');
    !f.is_empty() && f.parse::<f64>().is_ok()
}

fn digits(field: &str) -> bool {
    let f = field.trim();
    !f.is_empty() && f.bytes().all(|b| b.is_ascii_digit())
}

fn check_separators(line: &str) -> Result<()> {
    if let Some((a, b)) = line.split_once(',') {
        if !b.contains(',') && digits(a.trim_start_matches(['-', '+'])) && digits(b) {
            return Err(Error::Format("decimal separator must be '.'".into()));
        }
    }
    for sep in [',', ';', '\t'] {
        let fields: Vec<&str> = line.split(sep).collect();
        if fields.len() > 1 && fields.iter().filter(|f| numeric(f)).count() >= 2 {
            return Err(Error::Format("single column required".into()));
        }
    }
    Ok(())
}

/// Parses a single-column file whose first line is a header.
pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate().skip(1) {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        check_separators(line).map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("line {lineno}: {msg}")),
            other => other,
        })?;
        let field = line.trim_matches('"').trim();
        let v: f64 = field
            .parse()
            .map_err(|_| Error::Format(format!("line {lineno}: cannot parse '{field}' as a number")))?;
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::data(lineno, format!("observation {v} is not a positive finite number")));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Dataset::new(values)
}

pub fn read_dataset(mut reader: impl Read) -> Result<Dataset> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let text = String::from_utf8(bytes).map_err(|_| Error::Format("file is not valid UTF-8".into()))?;
    parse_dataset(&text)
}

pub fn read_dataset_file(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(read_dataset(file)?.with_source(path.display().to_string()))
}

/// Single-column text with a quoted header; values in shortest round-trip form.
pub fn format_dataset(data: &Dataset, header: &str) -> String {
    let mut out = format!("\"{header}\"\n");
    for v in data.values() {
        out.push_str(&format!("{v:?}\n"));
    }
    out
}
