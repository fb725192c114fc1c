//! Append-only newline-delimited JSON logs.
//!
//! Each record is written with a single `write` of the serialized line plus
//! its newline, so readers never observe a partially written record except
//! after a crash. A torn final line is reported and skipped on load; the
//! next append starts on a fresh line.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

/// A line that could not be decoded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedLine {
    /// 1-based.
    pub line: usize,
    pub error: String,
}

fn ends_with_newline(file: &mut File) -> io::Result<bool> {
    let len = file.metadata()?.len();
    if len == 0 {
        return Ok(true);
    }
    file.seek(SeekFrom::Start(len - 1))?;
    let mut last = [0u8; 1];
    file.read_exact(&mut last)?;
    Ok(last[0] == b'\n')
}

pub fn append<T: Serialize>(path: &Path, records: &[T]) -> io::Result<()> {
    if records.is_empty() {
        return Ok(());
    }
    let mut file = OpenOptions::new().read(true).append(true).create(true).open(path)?;
    let mut buf = Vec::new();
    if !ends_with_newline(&mut file)? {
        buf.push(b'\n');
    }
    for r in records {
        serde_json::to_writer(&mut buf, r).map_err(io::Error::other)?;
        buf.push(b'\n');
    }
    file.write_all(&buf)?;
    file.sync_data()
}

/// Decodes every line; undecodable lines are returned separately.
pub fn read<T: DeserializeOwned>(path: &Path) -> io::Result<(Vec<T>, Vec<SkippedLine>)> {
    let text = fs::read_to_string(path)?;
    Ok(parse(&text))
}

pub fn parse<T: DeserializeOwned>(text: &str) -> (Vec<T>, Vec<SkippedLine>) {
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(r) => records.push(r),
            Err(e) => skipped.push(SkippedLine { line: i + 1, error: e.to_string() }),
        }
    }
    (records, skipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct R {
        x: f64,
    }

    #[test]
    fn torn_line_is_skipped_and_not_extended() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("log.ndjson");
        append(&p, &[R { x: 0.1 }, R { x: 0.2 }]).unwrap();
        let mut f = OpenOptions::new().append(true).open(&p).unwrap();
        f.write_all(b"{\"x\": 0.").unwrap();
        drop(f);
        let (recs, skipped) = read::<R>(&p).unwrap();
        assert_eq!(recs, vec![R { x: 0.1 }, R { x: 0.2 }]);
        assert_eq!(skipped.len(), 1);
        assert_eq!(skipped[0].line, 3);

        append(&p, &[R { x: 0.3 }]).unwrap();
        let (recs, skipped) = read::<R>(&p).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(skipped.len(), 1);
    }
}
