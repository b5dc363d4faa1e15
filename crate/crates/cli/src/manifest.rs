//! The run manifest: resolved configuration, artifact hashes, grid
//! fingerprints, and stage diagnostics, written as the last artifact of every
//! run. Two runs that produce the same manifest hashes produced the same
//! numbers.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use idlab_core::fmtnum::fmt_sig12;
use idlab_core::numerics::Grid1D;

use crate::config::RunConfig;

#[derive(Serialize)]
pub struct Manifest<'a> {
    pub command: &'static str,
    pub versions: BTreeMap<&'static str, &'static str>,
    pub config: &'a RunConfig,
    pub grid_hashes: &'a BTreeMap<String, String>,
    pub outputs: &'a BTreeMap<String, OutputRecord>,
    pub diagnostics: &'a serde_json::Map<String, Value>,
    pub flagged: &'a [String],
}

#[derive(Serialize)]
pub struct OutputRecord {
    pub sha256: String,
    pub bytes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<&'static str>>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Hash of a grid's printed nodes, at the same 12-significant-digit precision
/// the CSV artifacts use.
pub fn grid_fingerprint(grid: &Grid1D) -> String {
    let nodes: Vec<String> = (0..grid.len()).map(|i| fmt_sig12(grid.node(i))).collect();
    sha256_hex(nodes.join(",").as_bytes())
}
