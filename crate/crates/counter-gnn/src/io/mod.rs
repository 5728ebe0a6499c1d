//! File formats. Line-oriented formats are JSON Lines; the model weight file
//! is binary.

pub mod dataset;
pub mod events;
pub mod frames;
pub mod tracking;
pub mod weights;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Non-blank lines with their 1-based line numbers.
pub(crate) fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

/// Parse one JSON value, reporting the path of the offending field.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> std::result::Result<T, (Option<String>, String)> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let field = (field != ".").then_some(field);
        (field, e.into_inner().to_string())
    })
}

pub(crate) fn parse_line<T: DeserializeOwned>(path: &Path, line: usize, text: &str) -> Result<T> {
    parse_json(text).map_err(|(field, message)| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: match &field {
            Some(f) => format!("field `{f}`: {message}"),
            None => message,
        },
        field,
    })
}

pub(crate) fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_lines(path)?
        .into_iter()
        .map(|(line, text)| parse_line(path, line, &text))
        .collect()
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

pub(crate) fn write_jsonl<'a, T, I>(path: &Path, items: I) -> Result<()>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| Error::format(path, e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Pretty-printed JSON document.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::format(path, e.to_string()))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_line(path, 1, &text)
}
