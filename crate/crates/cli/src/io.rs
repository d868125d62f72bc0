//! Input/output plumbing: `-`/absent paths mean stdin/stdout.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use pivotmap::clip::clip_to_range;
use pivotmap::map::LocalMapReader;
use pivotmap::{Error, LocalMap, Result};

pub fn open_input(path: Option<&Path>) -> Result<Box<dyn BufRead>> {
    match path {
        None => Ok(Box::new(BufReader::new(io::stdin()))),
        Some(p) if p == Path::new("-") => Ok(Box::new(BufReader::new(io::stdin()))),
        Some(p) => {
            let f = File::open(p).map_err(|e| with_path(e, p))?;
            Ok(Box::new(BufReader::new(f)))
        }
    }
}

pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
        Some(p) if p == Path::new("-") => Ok(Box::new(BufWriter::new(io::stdout()))),
        Some(p) => create_file(p),
    }
}

pub fn create_file(p: &Path) -> Result<Box<dyn Write>> {
    let f = File::create(p).map_err(|e| with_path(e, p))?;
    Ok(Box::new(BufWriter::new(f)))
}

pub fn write_file(p: &PathBuf, contents: &[u8]) -> Result<()> {
    std::fs::write(p, contents).map_err(|e| with_path(e, p))
}

pub fn read_file(p: &Path) -> Result<String> {
    std::fs::read_to_string(p).map_err(|e| with_path(e, p))
}

fn with_path(e: io::Error, p: &Path) -> Error {
    Error::Io(io::Error::new(e.kind(), format!("{}: {e}", p.display())))
}

/// Stream of frames from a JSONL file, each clipped to its range.
pub fn clipped_maps(path: Option<&Path>) -> Result<impl Iterator<Item = Result<LocalMap>>> {
    let reader = LocalMapReader::new(open_input(path)?);
    Ok(reader.map(|m| m.map(|m| clip_to_range(&m))))
}

pub fn write_json_line<T: serde::Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string(value)
        .map_err(|e| Error::InvalidInput(format!("serialization: {e}")))?;
    out.write_all(text.as_bytes())?;
    out.write_all(b"\n")?;
    Ok(())
}
