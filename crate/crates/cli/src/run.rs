//! The six run pipelines. Each stage writes its artifacts as soon as they
//! exist, accumulates diagnostics and grid fingerprints, and the manifest
//! goes out last. Flagged diagnostics (a kernel recovery that cannot
//! rationalize the data) still produce their artifacts; the run then exits
//! nonzero so a caller scripting over many configs cannot miss them.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use idlab_core::betaid::{build_eta, identify_beta};
use idlab_core::deconv::{
    default_v_grid, recover_h, recover_h2, DeconvDiagnostics, KernelSpace,
};
use idlab_core::fmtnum::fmt_sig12;
use idlab_core::games::game_ccp_exact;
use idlab_core::model::{ccp_exact, simulate, CCPTable, ModelSpec, SimDataset};
use idlab_core::recover::{concept_report, recover_fg};

use crate::config::{Resolved, RunKind};
use crate::manifest::{grid_fingerprint, sha256_hex, Manifest, OutputRecord};
use crate::CliError;

const CCP_COLUMNS: [&str; 5] = ["y", "w", "z2_index", "z1", "mu"];
const KERNEL1_COLUMNS: [&str; 4] = ["y", "w", "v", "h"];
const KERNEL2_COLUMNS: [&str; 5] = ["y", "w", "v1", "v2", "h"];
const RAY_COLUMNS: [&str; 4] = ["w", "direction", "lambda", "F"];
const DRAWS_COLUMNS: [&str; 4] = ["w", "z2_index", "z1", "y"];

struct Emitter {
    out_dir: PathBuf,
    outputs: BTreeMap<String, OutputRecord>,
}

impl Emitter {
    fn new(out_dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(out_dir).map_err(|e| {
            CliError::Schema(format!("output directory {} is not writable: {e}", out_dir.display()))
        })?;
        Ok(Emitter { out_dir: out_dir.to_path_buf(), outputs: BTreeMap::new() })
    }

    fn emit(&mut self, name: &str, bytes: &[u8], columns: Option<&[&'static str]>) -> Result<(), CliError> {
        fs::write(self.out_dir.join(name), bytes)
            .map_err(|e| CliError::Failure(format!("cannot write {name}: {e}")))?;
        self.outputs.insert(
            name.to_string(),
            OutputRecord {
                sha256: sha256_hex(bytes),
                bytes: bytes.len(),
                columns: columns.map(|c| c.to_vec()),
            },
        );
        Ok(())
    }
}

struct Run<'a> {
    r: &'a Resolved,
    em: Emitter,
    diagnostics: serde_json::Map<String, Value>,
    grid_hashes: BTreeMap<String, String>,
    flagged: Vec<String>,
}

pub fn execute(r: &Resolved) -> Result<(), CliError> {
    let mut run = Run {
        r,
        em: Emitter::new(&r.out_dir)?,
        diagnostics: serde_json::Map::new(),
        grid_hashes: BTreeMap::new(),
        flagged: Vec::new(),
    };

    match r.kind {
        RunKind::Forward => {
            let model = r.config.model.as_ref().unwrap();
            run.forward(model)?;
            run.simulate(model)?;
        }
        RunKind::RecoverH => {
            let model = r.config.model.as_ref().unwrap();
            let mu = run.forward(model)?;
            let blocks: Vec<usize> = (0..mu.z2_points().len()).collect();
            run.kernels(model, &mu, &blocks)?;
        }
        RunKind::IdentBeta => {
            let model = r.config.model.as_ref().unwrap();
            let mu = run.forward(model)?;
            run.beta(model, &mu)?;
        }
        RunKind::RecoverFg => {
            let model = r.config.model.as_ref().unwrap();
            let mu = run.forward(model)?;
            run.heterogeneity_cdf(model, &mu)?;
        }
        RunKind::GameClassify => run.game()?,
        RunKind::FullPipeline => {
            let model = r.config.model.as_ref().unwrap();
            let mu = run.forward(model)?;
            run.simulate(model)?;
            run.kernels(model, &mu, &[0])?;
            run.beta(model, &mu)?;
        }
    }

    run.finish()
}

impl Run<'_> {
    fn forward(&mut self, model: &ModelSpec) -> Result<CCPTable, CliError> {
        let mu = ccp_exact(model)?;
        self.em.emit("ccp.csv", mu.to_csv_string()?.as_bytes(), Some(&CCP_COLUMNS))?;
        self.grid_hashes.insert("z1_grid".into(), grid_fingerprint(&model.z1_grid));
        self.diagnostics
            .insert("forward".into(), json!({ "max_row_sum_error": mu.max_row_sum_error() }));
        Ok(mu)
    }

    fn simulate(&mut self, model: &ModelSpec) -> Result<(), CliError> {
        let Some(sim) = &self.r.config.simulate else { return Ok(()) };
        let data = simulate(model, sim.n_draws, self.r.seed)?;
        self.em.emit("draws.csv", &draws_csv(&data)?, Some(&DRAWS_COLUMNS))?;
        self.diagnostics
            .insert("simulate".into(), json!({ "n_draws": sim.n_draws, "seed": self.r.seed }));
        Ok(())
    }

    /// Recovers the product-space kernel for each requested z2 block. A lone
    /// block writes h.csv; several write h_<block>.csv apiece.
    fn kernels(
        &mut self,
        model: &ModelSpec,
        mu: &CCPTable,
        blocks: &[usize],
    ) -> Result<(), CliError> {
        let mut entries = Vec::with_capacity(blocks.len());
        for &k in blocks {
            let v_grid = match self.r.config.v_grid {
                Some(g) => g,
                None => {
                    let z2 = scalar_z2(mu, k)?;
                    default_v_grid(&model.index, &self.r.w, z2, &model.z1_grid)?
                }
            };
            let (h, d) = recover_h(
                mu,
                &model.index,
                &self.r.w,
                k,
                KernelSpace::Product,
                &v_grid,
                &self.r.reg,
            )?;
            let name =
                if blocks.len() == 1 { "h.csv".to_string() } else { format!("h_{k}.csv") };
            self.em.emit(&name, h.to_csv_string()?.as_bytes(), Some(&KERNEL1_COLUMNS))?;
            self.grid_hashes.insert(format!("v_grid[{k}]"), grid_fingerprint(&v_grid));
            self.note_kernel_flags(&d, &format!("z2 block {k}"));
            entries.push(kernel_entry(k, &name, &d)?);
        }
        self.diagnostics.insert("kernel_recovery".into(), Value::Array(entries));
        Ok(())
    }

    fn beta(&mut self, model: &ModelSpec, mu: &CCPTable) -> Result<(), CliError> {
        let y_star = self.r.y_star.as_ref().unwrap();
        let surface = build_eta(mu, y_star, &self.r.w)?;
        let est = identify_beta(&surface, model.index.sign_info(&self.r.w)?)?;
        self.em.emit("beta.json", &pretty_json(&est)?, None)?;
        self.diagnostics.insert(
            "index_coefficients".into(),
            json!({
                "y_star": y_star.to_string(),
                "n_cells": est.n_cells,
                "rms_residual": est.rms_residual,
                "max_abs_residual": est.max_abs_residual,
                "degeneracy_statistic": est.degeneracy_statistic,
            }),
        );
        Ok(())
    }

    /// Index-space kernel per z2 block, then the heterogeneity CDF along the
    /// instrument rays those blocks define.
    fn heterogeneity_cdf(&mut self, model: &ModelSpec, mu: &CCPTable) -> Result<(), CliError> {
        let v_grid = match self.r.config.v_grid {
            Some(g) => g,
            None => default_v_grid(&model.index, &self.r.w, 1.0, &model.z1_grid)?,
        };
        self.grid_hashes.insert("v_grid".into(), grid_fingerprint(&v_grid));
        let mut kernels = Vec::with_capacity(mu.z2_points().len());
        let mut entries = Vec::with_capacity(mu.z2_points().len());
        for k in 0..mu.z2_points().len() {
            let (h, d) = recover_h(
                mu,
                &model.index,
                &self.r.w,
                k,
                KernelSpace::Index,
                &v_grid,
                &self.r.reg,
            )?;
            self.note_kernel_flags(&d, &format!("z2 block {k}"));
            entries.push(kernel_entry(k, "fg.csv", &d)?);
            kernels.push(h);
        }
        self.diagnostics.insert("kernel_recovery".into(), Value::Array(entries));
        let (rays, ray_diags) = recover_fg(&kernels, mu.z2_points())?;
        self.em.emit("fg.csv", rays.to_csv_string()?.as_bytes(), Some(&RAY_COLUMNS))?;
        self.diagnostics.insert("rays".into(), serde_json::to_value(&ray_diags).map_err(internal)?);
        Ok(())
    }

    fn game(&mut self) -> Result<(), CliError> {
        let game = self.r.config.game.as_ref().unwrap();
        let z_grids = self.r.config.z_grids.as_ref().unwrap();
        let mu = game_ccp_exact(game, z_grids, &self.r.w)?;
        self.em.emit("ccp.csv", mu.to_csv_string()?.as_bytes(), Some(&CCP_COLUMNS))?;
        self.diagnostics
            .insert("forward".into(), json!({ "max_row_sum_error": mu.max_row_sum_error() }));

        let mut v_grids = [z_grids[0], z_grids[1]];
        for i in 0..2 {
            v_grids[i] = match self.r.config.v_grid {
                Some(g) => g,
                None => default_v_grid(game.index(i), &self.r.w, 1.0, &z_grids[i])?,
            };
            self.grid_hashes.insert(format!("z_grid[{i}]"), grid_fingerprint(&z_grids[i]));
            self.grid_hashes.insert(format!("v_grid[{i}]"), grid_fingerprint(&v_grids[i]));
        }
        let (h2, d) =
            recover_h2(&mu, [game.index(0), game.index(1)], &self.r.w, v_grids, &self.r.reg)?;
        self.em.emit("h2.csv", h2.to_csv_string()?.as_bytes(), Some(&KERNEL2_COLUMNS))?;
        // A game's kernel is an indicator surface, so truncation overshoot is
        // expected here; only the residual test signals a bad index.
        if d.residual_flag {
            self.flagged.push(format!(
                "two-axis kernel recovery cannot fit the table: max residual {:.3e}",
                d.max_residual
            ));
        }
        self.diagnostics
            .insert("kernel_recovery".into(), serde_json::to_value(&d).map_err(internal)?);

        let report = concept_report(&h2, self.r.config.tolerance)?;
        self.em.emit("report.json", &pretty_json(&report)?, None)?;
        self.diagnostics.insert(
            "classification".into(),
            json!({ "concept": report.concept, "squareness": report.squareness }),
        );
        Ok(())
    }

    fn note_kernel_flags(&mut self, d: &DeconvDiagnostics, which: &str) {
        if d.misspecification_flag {
            self.flagged.push(format!(
                "kernel recovery ({which}) cannot rationalize the table: max residual {:.3e}, overshoot {:.3e}",
                d.max_residual, d.overshoot
            ));
        }
    }

    fn finish(mut self) -> Result<(), CliError> {
        let manifest = Manifest {
            command: self.r.kind.command_name(),
            versions: BTreeMap::from([
                ("idlab", env!("CARGO_PKG_VERSION")),
                ("idlab-core", idlab_core::VERSION),
            ]),
            config: &self.r.config,
            grid_hashes: &self.grid_hashes,
            outputs: &self.em.outputs,
            diagnostics: &self.diagnostics,
            flagged: &self.flagged,
        };
        let bytes = pretty_json(&manifest)?;
        self.em.emit("manifest.json", &bytes, None)?;
        if self.flagged.is_empty() {
            Ok(())
        } else {
            Err(CliError::Failure(format!("flagged: {}", self.flagged.join("; "))))
        }
    }
}

fn scalar_z2(mu: &CCPTable, k: usize) -> Result<f64, CliError> {
    match mu.z2_points()[k].as_slice() {
        [z2] => Ok(*z2),
        other => Err(CliError::Schema(format!(
            "the default kernel grid needs scalar z2, got dimension {}; set v_grid in the config",
            other.len()
        ))),
    }
}

fn kernel_entry(k: usize, file: &str, d: &DeconvDiagnostics) -> Result<Value, CliError> {
    let mut value = serde_json::to_value(d).map_err(internal)?;
    if let Value::Object(map) = &mut value {
        map.insert("z2_index".into(), Value::from(k));
        map.insert("file".into(), Value::from(file));
    }
    Ok(value)
}

fn draws_csv(data: &SimDataset) -> Result<Vec<u8>, CliError> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(DRAWS_COLUMNS).map_err(|e| CliError::Failure(e.to_string()))?;
    for row in &data.rows {
        wtr.write_record([
            data.w_levels[row.w_index].as_str(),
            &row.z2_index.to_string(),
            &fmt_sig12(data.z1_grid.node(row.z1_index)),
            &data.outcomes[row.outcome_position].to_string(),
        ])
        .map_err(|e| CliError::Failure(e.to_string()))?;
    }
    wtr.into_inner().map_err(|e| CliError::Failure(e.to_string()))
}

fn pretty_json<T: serde::Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(internal)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn internal(e: serde_json::Error) -> CliError {
    CliError::Failure(format!("cannot serialize diagnostics: {e}"))
}
