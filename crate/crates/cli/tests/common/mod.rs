//! Builders and process plumbing shared by the binary's test targets.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use idlab_core::games::{GameStructure, SolutionConcept};
use idlab_core::model::{Family, GDistribution, GMixture, IndexModel, ModelSpec, SignInfo};
use idlab_core::numerics::Grid1D;

/// Binary single-agent model with standard normal heterogeneity on a uniform
/// z1 x z2 design.
pub fn binary_model(beta0: f64, beta1: f64, n_z1: usize, z2: &[f64]) -> ModelSpec {
    let w = vec!["w0".to_string()];
    ModelSpec {
        family: Family::Binary,
        index: IndexModel::single(beta0, beta1, SignInfo::SignOfBeta1(1)).unwrap(),
        g: GDistribution::homogeneous(1, &w, GMixture::standard_normal(1)).unwrap(),
        w_levels: w,
        z1_grid: Grid1D::new(-1.0, 1.0, n_z1).unwrap(),
        z2_points: z2.iter().map(|&v| vec![v]).collect(),
    }
}

/// Uniformly spaced scalar z2 design points.
pub fn z2_span(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|j| lo + step * j as f64).collect()
}

/// Two-player entry game where each player's index is z_i + e_i.
pub fn entry_game(
    alpha: [f64; 2],
    delta: [f64; 2],
    concept: SolutionConcept,
    lambda_sel: f64,
) -> GameStructure {
    let index = || IndexModel::single(0.0, 1.0, SignInfo::SignOfBeta1(1)).unwrap();
    GameStructure::new(
        BTreeMap::from([("w0".to_string(), alpha)]),
        BTreeMap::from([("w0".to_string(), delta)]),
        [index(), index()],
        concept,
        lambda_sel,
    )
    .unwrap()
}

pub struct Scratch {
    pub dir: tempfile::TempDir,
}

impl Scratch {
    pub fn new() -> Scratch {
        Scratch { dir: tempfile::tempdir().unwrap() }
    }

    pub fn config(&self, value: &Value) -> PathBuf {
        let path = self.dir.path().join("config.json");
        std::fs::write(&path, serde_json::to_vec_pretty(value).unwrap()).unwrap();
        path
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

pub fn idlab(subcommand: &str, config: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_idlab"))
        .arg(subcommand)
        .arg("--config")
        .arg(config)
        .args(extra)
        .output()
        .expect("spawning the idlab binary")
}

pub fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("idlab exited without a code")
}

pub fn stderr_text(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

pub fn read_json(path: &Path) -> Value {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn read_bytes(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}
