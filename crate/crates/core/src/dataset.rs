//! Loading tick-data CSV files from disk: a single file or a directory of
//! per-day files (sorted by name, i.e. chronologically for `YYYY-MM-DD.csv`).

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::marketdata::{classify, parse_csv_line, Classified, MarketDataError, TickEvent};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}: no .csv files")]
    NoFiles { path: PathBuf },
    #[error("{file}:{line}: {source}")]
    Malformed {
        file: PathBuf,
        line: usize,
        source: MarketDataError,
    },
}

pub fn csv_files(path: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(DatasetError::NoFiles {
            path: path.to_path_buf(),
        });
    }
    Ok(files)
}

/// Reads all price events in file order, silently passing over non-price
/// rows. With `header` set, a first line beginning `ID.` is skipped per file.
pub fn load_events(path: &Path, header: bool) -> Result<Vec<TickEvent>, DatasetError> {
    let mut events = Vec::new();
    for file in csv_files(path)? {
        let text = fs::read_to_string(&file)?;
        for (lineno, line) in text.lines().enumerate() {
            if header && lineno == 0 && line.starts_with("ID.") {
                continue;
            }
            let row = parse_csv_line(line)
                .and_then(|record| classify(&record))
                .map_err(|source| DatasetError::Malformed {
                    file: file.clone(),
                    line: lineno + 1,
                    source,
                })?;
            if let Classified::Price(event) = row {
                events.push(event);
            }
        }
    }
    Ok(events)
}
