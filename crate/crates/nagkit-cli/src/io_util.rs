//! Line-oriented I/O with a worker pool: input is read in bounded batches,
//! mapped in parallel, and written back in input order.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::CliError;

const BATCH_LINES: usize = 4096;

pub fn open_input(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))
}

/// Writer to `--out` or stdout.
pub fn open_output(path: Option<&PathBuf>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| {
                CliError::Usage(format!("cannot create {}: {e}", p.display()))
            })?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

/// Map lines of `path` through `map` with batch-level parallelism, feeding
/// results to `sink` in input order. Returns the number of lines read.
pub fn map_lines_ordered<T: Send>(
    path: &Path,
    map: impl Fn(usize, &str) -> T + Sync,
    mut sink: impl FnMut(usize, T) -> Result<(), CliError>,
) -> Result<usize, CliError> {
    let reader = open_input(path)?;
    let mut lines = reader.lines();
    let mut next_index = 0usize;
    loop {
        let mut batch = Vec::with_capacity(BATCH_LINES);
        for line in lines.by_ref().take(BATCH_LINES) {
            batch.push(line.map_err(|e| CliError::Data(format!("read error: {e}")))?);
        }
        if batch.is_empty() {
            return Ok(next_index);
        }
        let base = next_index;
        let outputs: Vec<T> = batch
            .par_iter()
            .enumerate()
            .map(|(offset, line)| map(base + offset, line))
            .collect();
        for (offset, out) in outputs.into_iter().enumerate() {
            sink(base + offset, out)?;
        }
        next_index += batch.len();
    }
}

pub fn write_line(out: &mut dyn Write, line: &str) -> Result<(), CliError> {
    writeln!(out, "{line}").map_err(|e| CliError::Data(format!("write error: {e}")))
}
