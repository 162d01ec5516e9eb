use std::path::{Path, PathBuf};

use blockland_core::{Error, LevelSpec, PpoConfig, Result};

use crate::args::{LevelArg, PpoArgs};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "BLOCKLAND_OUT";

/// Built-in defaults, then the config file, then flags.
pub fn resolve_ppo(
    file: Option<&Path>,
    preset_steps: Option<u64>,
    flags: &PpoArgs,
) -> Result<PpoConfig> {
    let mut cfg = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?
        }
        None => PpoConfig::default(),
    };
    if let Some(steps) = preset_steps {
        cfg.total_steps = steps;
    }
    macro_rules! apply {
        ($($field:ident),*) => {
            $(if let Some(v) = flags.$field { cfg.$field = v; })*
        };
    }
    apply!(
        total_steps,
        n_envs,
        rollout_len,
        lr,
        minibatch_size,
        epochs,
        gamma,
        gae_lambda,
        clip_range,
        ent_coef,
        vf_coef,
        max_grad_norm,
        checkpoint_every
    );
    cfg.validate()?;
    Ok(cfg)
}

pub fn resolve_level(arg: &LevelArg) -> Result<LevelSpec> {
    match &arg.level {
        Some(path) => {
            require_file(path)?;
            LevelSpec::load(path)
        }
        None => Ok(LevelSpec::twosides()),
    }
}

/// `explicit`, else `$BLOCKLAND_OUT/<leaf>`, else `runs/<leaf>`.
pub fn out_dir(explicit: &Option<PathBuf>, leaf: &str) -> PathBuf {
    if let Some(p) = explicit {
        return p.clone();
    }
    let root = std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
    root.join(leaf)
}

pub fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Usage(format!(
            "{} is not a readable file",
            path.display()
        )))
    }
}

pub fn require_dir(path: &Path) -> Result<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Error::Usage(format!(
            "{} is not a directory",
            path.display()
        )))
    }
}
