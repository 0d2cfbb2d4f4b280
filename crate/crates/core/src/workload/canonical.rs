//! Canonical job list format:
//!
//! ```json
//! { "version": 1,
//!   "jobs": [ { "id": "42", "submit": 0, "nodes": 4, "runtime": 600, "time_limit": 750 } ] }
//! ```
//!
//! Jobs are written sorted by `submit`, then `id`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{duplicate_ids, sort_jobs, RigidJobSpec, WorkloadError};

pub const CANONICAL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalFile {
    pub version: u32,
    pub jobs: Vec<RigidJobSpec>,
}

pub fn write_canonical<W: Write>(jobs: &[RigidJobSpec], mut w: W) -> Result<(), std::io::Error> {
    let mut sorted = jobs.to_vec();
    sort_jobs(&mut sorted);
    let file = CanonicalFile {
        version: CANONICAL_VERSION,
        jobs: sorted,
    };
    serde_json::to_writer_pretty(&mut w, &file)?;
    w.write_all(b"\n")?;
    w.flush()
}

pub fn read_canonical<R: Read>(r: R) -> Result<Vec<RigidJobSpec>, WorkloadError> {
    let file: CanonicalFile =
        serde_json::from_reader(r).map_err(|e| WorkloadError::Canonical(e.to_string()))?;
    if file.version != CANONICAL_VERSION {
        return Err(WorkloadError::Canonical(format!(
            "unsupported version {}",
            file.version
        )));
    }
    let bad: Vec<String> = file
        .jobs
        .iter()
        .filter(|j| j.requested_nodes == 0 || j.runtime == 0 || j.time_limit < j.runtime)
        .map(|j| j.id.clone())
        .collect();
    if !bad.is_empty() {
        return Err(WorkloadError::InvalidJobs(bad));
    }
    let dups = duplicate_ids(&file.jobs);
    if !dups.is_empty() {
        return Err(WorkloadError::Canonical(format!("duplicate ids {dups:?}")));
    }
    let mut jobs = file.jobs;
    sort_jobs(&mut jobs);
    Ok(jobs)
}

pub fn emit_canonical(jobs: &[RigidJobSpec], path: &Path) -> Result<(), WorkloadError> {
    let write_err = |source| WorkloadError::Write {
        path: path.display().to_string(),
        source,
    };
    let f = File::create(path).map_err(write_err)?;
    write_canonical(jobs, BufWriter::new(f)).map_err(write_err)
}

pub fn load_canonical(path: &Path) -> Result<Vec<RigidJobSpec>, WorkloadError> {
    let f = File::open(path).map_err(|source| WorkloadError::Read {
        path: path.display().to_string(),
        source,
    })?;
    read_canonical(BufReader::new(f))
}
