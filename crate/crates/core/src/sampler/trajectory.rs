use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{run_chain_observed, ChainConfig, ChainRun};
use crate::error::{param, Result};
use crate::potentials::Potential;

/// JSON header written next to a binary trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub d: usize,
    pub gamma: f64,
    pub stride: usize,
    pub seed: u64,
}

/// Runs a chain and writes every `stride`-th averaged state `X_k`
/// (`k = 0, stride, 2·stride, … < N`) to `path` as little-endian `f64`
/// frames of `d` values, with the header at `path` + `.json`.
pub fn run_chain_dumped<P: Potential + ?Sized>(
    p: &P,
    config: &ChainConfig,
    stride: usize,
    path: &Path,
) -> Result<ChainRun> {
    if stride == 0 {
        return param("trajectory stride must be at least 1");
    }
    let mut out = BufWriter::new(File::create(path)?);
    let mut io_err = None;
    let run = run_chain_observed(p, config, &mut |k, x, _| {
        if k % stride == 0 && io_err.is_none() {
            for v in x {
                if let Err(e) = out.write_all(&v.to_le_bytes()) {
                    io_err = Some(e);
                    return;
                }
            }
        }
    });
    if let Some(e) = io_err {
        return Err(e.into());
    }
    out.flush()?;
    let header = TrajectoryHeader {
        d: p.dim(),
        gamma: config.gamma,
        stride,
        seed: config.seed,
    };
    std::fs::write(header_path(path), serde_json::to_vec_pretty(&header)?)?;
    run
}

fn header_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

/// Reads a trajectory written by [`run_chain_dumped`].
pub fn read_trajectory(path: &Path) -> Result<(TrajectoryHeader, Vec<Vec<f64>>)> {
    let header: TrajectoryHeader = serde_json::from_slice(&std::fs::read(header_path(path))?)?;
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    let frame = 8 * header.d;
    if header.d == 0 || bytes.len() % frame != 0 {
        return param("trajectory file length is not a whole number of frames");
    }
    let frames = bytes
        .chunks_exact(frame)
        .map(|f| {
            f.chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
                .collect()
        })
        .collect();
    Ok((header, frames))
}
