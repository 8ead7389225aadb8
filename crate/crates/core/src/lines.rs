//! Line-oriented reading shared by the corpus, association, query, run and qrels readers.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{FusionError, Result};

/// A non-comment, non-blank input line with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataLine {
    pub number: usize,
    pub text: String,
}

/// Reads all data lines, skipping blank lines and lines starting with `#`.
pub fn read_data_lines<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<DataLine>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let number = i + 1;
        let mut text =
            line.map_err(|e| FusionError::parse(source_name, number, format!("unreadable line: {e}")))?;
        if text.ends_with('\r') {
            text.pop();
        }
        if text.trim().is_empty() || text.starts_with('#') {
            continue;
        }
        out.push(DataLine { number, text });
    }
    Ok(out)
}

pub fn read_data_file(path: &Path) -> Result<Vec<DataLine>> {
    let file = File::open(path).map_err(|e| FusionError::io(path, e))?;
    read_data_lines(BufReader::new(file), &path.display().to_string())
}

/// Splits a `key<TAB>rest` record.
pub fn split_tab_record<'a>(line: &'a DataLine, source_name: &str) -> Result<(&'a str, &'a str)> {
    let (key, rest) = line
        .text
        .split_once('\t')
        .ok_or_else(|| FusionError::parse(source_name, line.number, "expected `id<TAB>text`"))?;
    if key.is_empty() {
        return Err(FusionError::parse(source_name, line.number, "empty id"));
    }
    Ok((key, rest))
}
