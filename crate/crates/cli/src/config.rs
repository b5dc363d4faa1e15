//! Run configuration: one JSON file per run, plus a handful of flag
//! overrides. Everything a run needs is resolved here up front so the
//! pipelines in `run` never consult the environment, and the manifest can
//! echo the exact configuration that produced the artifacts.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use idlab_core::games::GameStructure;
use idlab_core::model::{ModelSpec, Outcome};
use idlab_core::numerics::{Grid1D, Regularization};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunKind {
    Forward,
    RecoverH,
    IdentBeta,
    RecoverFg,
    GameClassify,
    FullPipeline,
}

impl RunKind {
    pub fn command_name(self) -> &'static str {
        match self {
            RunKind::Forward => "forward",
            RunKind::RecoverH => "recover-h",
            RunKind::IdentBeta => "ident-beta",
            RunKind::RecoverFg => "recover-fg",
            RunKind::GameClassify => "game-classify",
            RunKind::FullPipeline => "full-pipeline",
        }
    }
}

/// Monte Carlo block for forward runs that should also emit draws.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateBlock {
    pub n_draws: usize,
}

/// The on-disk run configuration. `kind` must match the subcommand; the
/// remaining sections are required or rejected per kind, so a config cannot
/// silently carry settings the run would ignore.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kind: RunKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub game: Option<GameStructure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_star: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_grid: Option<Grid1D>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_grids: Option<[Grid1D; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularization: Option<Regularization>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

/// Flags shared by every subcommand. Flag values override the corresponding
/// config fields.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON run configuration
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
    /// Output directory (overrides out_dir in the config)
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// RNG seed for the simulate block (overrides seed in the config)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Regularization override: tsvd:THRESHOLD, tikhonov:LAMBDA, or rank:K
    #[arg(long, value_parser = parse_reg, value_name = "SPEC")]
    pub reg: Option<Regularization>,
}

pub fn parse_reg(s: &str) -> Result<Regularization, String> {
    let (kind, value) = s
        .split_once(':')
        .ok_or_else(|| "expected KIND:VALUE, e.g. tsvd:1e-6 or tikhonov:0.5".to_string())?;
    match kind.trim() {
        "rank" => {
            let k: usize = value.trim().parse().map_err(|_| format!("{value:?} is not a rank"))?;
            if k == 0 {
                return Err("rank must be at least 1".into());
            }
            Ok(Regularization::TsvdRank { k })
        }
        "tsvd" | "tikhonov" => {
            let x: f64 = value.trim().parse().map_err(|_| format!("{value:?} is not a number"))?;
            if !x.is_finite() || x < 0.0 {
                return Err(format!("{value} must be finite and nonnegative"));
            }
            if kind.trim() == "tsvd" {
                Ok(Regularization::TsvdThreshold { threshold: x })
            } else {
                Ok(Regularization::Tikhonov { lambda: x })
            }
        }
        other => Err(format!("unknown regularization {other:?}; use tsvd, tikhonov, or rank")),
    }
}

/// A run configuration with flag overrides and defaults folded in. `config`
/// is what the manifest echoes, so every default that bit during the run is
/// visible there.
#[derive(Debug)]
pub struct Resolved {
    pub kind: RunKind,
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub reg: Regularization,
    pub w: String,
    pub y_star: Option<Outcome>,
}

pub fn resolve(kind: RunKind, args: &RunArgs) -> Result<Resolved, CliError> {
    let text = fs::read_to_string(&args.config).map_err(|e| {
        CliError::Schema(format!("cannot read config {}: {e}", args.config.display()))
    })?;
    let mut config: RunConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Schema(format!("config does not parse: {e}")))?;

    if config.kind != kind {
        return Err(CliError::Schema(format!(
            "config kind {:?} does not match the {} command",
            config.kind.command_name(),
            kind.command_name()
        )));
    }

    if let Some(out) = &args.out {
        config.out_dir = Some(out.clone());
    }
    if let Some(seed) = args.seed {
        config.seed = Some(seed);
    }
    if let Some(reg) = args.reg {
        config.regularization = Some(reg);
    }
    config.seed.get_or_insert(0);
    config.regularization.get_or_insert_with(Regularization::default);

    check_sections(kind, &config)?;

    let reg = config.regularization.unwrap();
    check_reg(&reg)?;

    let w = resolve_w(kind, &mut config)?;
    let y_star = resolve_y_star(kind, &mut config)?;

    if let Some(tol) = config.tolerance {
        if !tol.is_finite() || tol <= 0.0 {
            return Err(CliError::Schema(format!(
                "tolerance must be finite and positive, got {tol}"
            )));
        }
    }
    if let Some(sim) = &config.simulate {
        if sim.n_draws == 0 {
            return Err(CliError::Schema("simulate.n_draws must be at least 1".into()));
        }
    }

    let out_dir = config.out_dir.clone().ok_or_else(|| {
        CliError::Schema("no output directory: set out_dir in the config or pass --out".into())
    })?;

    Ok(Resolved {
        kind,
        seed: config.seed.unwrap(),
        reg,
        w,
        y_star,
        out_dir,
        config,
    })
}

fn check_sections(kind: RunKind, config: &RunConfig) -> Result<(), CliError> {
    let reject = |present: bool, field: &str, why: &str| {
        if present {
            Err(CliError::Schema(format!(
                "{field} has no role in {} runs: {why}",
                kind.command_name()
            )))
        } else {
            Ok(())
        }
    };

    match kind {
        RunKind::GameClassify => {
            if config.game.is_none() {
                return Err(CliError::Schema("game-classify needs a game section".into()));
            }
            if config.z_grids.is_none() {
                return Err(CliError::Schema(
                    "game-classify needs z_grids, one grid per player".into(),
                ));
            }
            reject(config.model.is_some(), "model", "the game section drives this run")?;
            reject(config.simulate.is_some(), "simulate", "only forward runs draw data")?;
            reject(config.y_star.is_some(), "y_star", "games classify all outcomes jointly")?;
        }
        _ => {
            if config.model.is_none() {
                return Err(CliError::Schema(format!(
                    "{} needs a model section",
                    kind.command_name()
                )));
            }
            reject(config.game.is_some(), "game", "games run under game-classify")?;
            reject(config.z_grids.is_some(), "z_grids", "the model carries its own z1_grid")?;
            reject(config.tolerance.is_some(), "tolerance", "only game-classify classifies")?;
            let sim_ok = matches!(kind, RunKind::Forward | RunKind::FullPipeline);
            reject(config.simulate.is_some() && !sim_ok, "simulate", "this run draws no data")?;
            let ystar_ok = matches!(kind, RunKind::IdentBeta | RunKind::FullPipeline);
            reject(
                config.y_star.is_some() && !ystar_ok,
                "y_star",
                "only index-coefficient runs fix a reference outcome",
            )?;
            let vgrid_ok = matches!(
                kind,
                RunKind::RecoverH | RunKind::RecoverFg | RunKind::FullPipeline
            );
            reject(
                config.v_grid.is_some() && !vgrid_ok,
                "v_grid",
                "this run recovers no kernel",
            )?;
        }
    }
    Ok(())
}

fn check_reg(reg: &Regularization) -> Result<(), CliError> {
    let bad = match *reg {
        Regularization::Tikhonov { lambda } => !lambda.is_finite() || lambda < 0.0,
        Regularization::TsvdThreshold { threshold } => !threshold.is_finite() || threshold < 0.0,
        Regularization::TsvdRank { k } => k == 0,
    };
    if bad {
        return Err(CliError::Schema(format!("regularization {reg:?} is out of range")));
    }
    Ok(())
}

fn resolve_w(kind: RunKind, config: &mut RunConfig) -> Result<String, CliError> {
    let levels: Vec<String> = match kind {
        RunKind::GameClassify => {
            config.game.as_ref().unwrap().w_levels().map(str::to_string).collect()
        }
        _ => config.model.as_ref().unwrap().w_levels.clone(),
    };
    let w = match &config.w {
        Some(w) => {
            if !levels.iter().any(|l| l == w) {
                return Err(CliError::Schema(format!(
                    "w level {w:?} is not in the configured levels {levels:?}"
                )));
            }
            w.clone()
        }
        None => levels[0].clone(),
    };
    config.w = Some(w.clone());
    Ok(w)
}

fn resolve_y_star(kind: RunKind, config: &mut RunConfig) -> Result<Option<Outcome>, CliError> {
    if !matches!(kind, RunKind::IdentBeta | RunKind::FullPipeline) {
        return Ok(None);
    }
    let model = config.model.as_ref().unwrap();
    let outcomes = model.outcomes();
    let y = match &config.y_star {
        Some(text) => {
            let y: Outcome = text
                .parse()
                .map_err(|e| CliError::Schema(format!("y_star does not parse: {e}")))?;
            if !outcomes.contains(&y) {
                return Err(CliError::Schema(format!(
                    "y_star {y} is not an outcome of this family"
                )));
            }
            y
        }
        None => outcomes[1].clone(),
    };
    config.y_star = Some(y.to_string());
    Ok(Some(y))
}
