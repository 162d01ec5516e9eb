use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use crate::checkpoint::{save_checkpoint, Checkpoint, CheckpointMeta};
use crate::env::{Agent, LevelSpec};
use crate::error::{Error, Result};
use crate::manifest::{write_json, OpponentIdentity, RunManifest, RunStatus};
use crate::nn::{ActorCriticParams, AdamState};
use crate::policy::{Controller, ScriptedKind};
use crate::rng::{self, domain};

use super::buffer::RolloutBuffer;
use super::collect::{collect_rollout, EnvSlot, Stepping};
use super::config::PpoConfig;
use super::gae::compute_gae;
use super::update::ppo_update;

pub const CONFIG_FILE: &str = "config.json";
pub const FINAL_FILE: &str = "final.json";
pub const LOG_FILE: &str = "training_log.csv";
pub const CHECKPOINT_DIR: &str = "checkpoints";

pub fn checkpoint_name(rollout: usize) -> String {
    format!("ckpt_{rollout:04}.json")
}

/// The fixed partner during training.
#[derive(Clone, Debug)]
pub enum OpponentSpec {
    Scripted(ScriptedKind),
    /// A frozen checkpoint, sampled stochastically.
    Frozen {
        params: Arc<ActorCriticParams>,
        tag: String,
        path: Option<String>,
        digest: Option<String>,
    },
}

impl OpponentSpec {
    pub fn tag(&self) -> &str {
        match self {
            OpponentSpec::Scripted(k) => k.tag(),
            OpponentSpec::Frozen { tag, .. } => tag,
        }
    }

    fn controller(&self) -> Controller {
        match self {
            OpponentSpec::Scripted(k) => Controller::scripted(*k),
            OpponentSpec::Frozen { params, .. } => Controller::Frozen(Arc::clone(params)),
        }
    }

    fn identity(&self) -> OpponentIdentity {
        match self {
            OpponentSpec::Scripted(k) => OpponentIdentity {
                tag: k.tag().to_string(),
                checkpoint: None,
                digest: None,
            },
            OpponentSpec::Frozen {
                tag, path, digest, ..
            } => OpponentIdentity {
                tag: tag.clone(),
                checkpoint: path.clone(),
                digest: digest.clone(),
            },
        }
    }
}

/// Everything one training run needs.
#[derive(Clone, Debug)]
pub struct TrainRequest {
    pub level: LevelSpec,
    pub learner: Agent,
    pub opponent: OpponentSpec,
    pub config: PpoConfig,
    pub seed: u64,
    pub run_dir: PathBuf,
    pub stepping: Stepping,
    /// Command line or description recorded in the manifest.
    pub command: String,
    pub labels: BTreeMap<String, String>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub final_checkpoint: PathBuf,
    pub final_digest: String,
    pub checkpoints: Vec<PathBuf>,
    pub rollouts: usize,
    pub env_steps: u64,
}

#[derive(Serialize)]
struct LogRow {
    rollout: usize,
    env_steps: u64,
    mean_episode_return: Option<f64>,
    policy_loss: f64,
    value_loss: f64,
    entropy: f64,
    clip_fraction: f64,
    kl: f64,
}

/// Collect → GAE → update until the step budget is reached, writing
/// checkpoints, a training log, and a manifest into `run_dir`.
pub fn train(req: &TrainRequest) -> Result<TrainOutcome> {
    req.config.validate()?;
    req.level.validate()?;
    let ckpt_dir = req.run_dir.join(CHECKPOINT_DIR);
    std::fs::create_dir_all(&ckpt_dir).map_err(|e| Error::io(&ckpt_dir, e))?;

    let config_value = serde_json::to_value(&req.config).expect("config serializes");
    write_json(&req.run_dir.join(CONFIG_FILE), &req.config)?;
    let mut manifest = RunManifest::new(
        req.command.clone(),
        config_value,
        req.level.clone(),
        vec![req.seed],
    )
    .label("learner", req.learner.to_string())
    .label("opponent_sampling", "stochastic");
    manifest.labels.extend(req.labels.clone());
    manifest.opponent = Some(req.opponent.identity());
    manifest.write(&req.run_dir)?;

    let mut last_checkpoint = None;
    match run(req, &mut manifest, &mut last_checkpoint) {
        Ok(outcome) => {
            manifest.finish(RunStatus::Complete);
            manifest.write(&req.run_dir)?;
            Ok(outcome)
        }
        Err(e) => {
            manifest.finish(RunStatus::Failed {
                reason: e.to_string(),
                last_checkpoint,
            });
            // Best effort; the original error matters more.
            let _ = manifest.write(&req.run_dir);
            Err(e)
        }
    }
}

fn run(
    req: &TrainRequest,
    manifest: &mut RunManifest,
    last_checkpoint: &mut Option<String>,
) -> Result<TrainOutcome> {
    let cfg = &req.config;
    let mut params = ActorCriticParams::init(req.seed);
    let mut adam = AdamState::new(&params);
    let mut shuffle_rng = rng::stream(req.seed, domain::SHUFFLE, 0);
    let mut slots = (0..cfg.n_envs)
        .map(|i| EnvSlot::new(&req.level, req.opponent.controller(), req.seed, i))
        .collect::<Result<Vec<_>>>()?;
    let mut buffer = RolloutBuffer::new(cfg.n_envs, cfg.rollout_len);
    let mut meta = CheckpointMeta::new(req.seed, req.learner, req.opponent.tag());

    let log_path = req.run_dir.join(LOG_FILE);
    let mut log =
        csv::Writer::from_path(&log_path).map_err(|e| Error::format("training log", e))?;
    manifest.artifacts = vec![CONFIG_FILE.into(), LOG_FILE.into()];

    let mut checkpoints = Vec::new();
    let save = |name: String,
                meta: &CheckpointMeta,
                params: &ActorCriticParams,
                manifest: &mut RunManifest|
     -> Result<PathBuf> {
        let path = req.run_dir.join(CHECKPOINT_DIR).join(&name);
        save_checkpoint(&path, &Checkpoint::new(meta.clone(), params.clone(), None))?;
        manifest.artifacts.push(format!("{CHECKPOINT_DIR}/{name}"));
        Ok(path)
    };
    checkpoints.push(save(checkpoint_name(0), &meta, &params, manifest)?);
    *last_checkpoint = Some(checkpoint_name(0));

    let n_rollouts = cfg.n_rollouts();
    let mut env_steps = 0u64;
    for rollout in 1..=n_rollouts {
        let stats = collect_rollout(&mut slots, &params, req.learner, &mut buffer, req.stepping)?;
        compute_gae(
            &mut buffer,
            &stats.bootstrap_values,
            cfg.gamma,
            cfg.gae_lambda,
        )?;
        let upd = ppo_update(&mut params, &buffer, &mut adam, cfg, &mut shuffle_rng)?;
        env_steps += cfg.steps_per_rollout() as u64;

        let returns = &stats.completed_learner_returns;
        let mean_return =
            (!returns.is_empty()).then(|| returns.iter().sum::<f64>() / returns.len() as f64);
        log.serialize(LogRow {
            rollout,
            env_steps,
            mean_episode_return: mean_return,
            policy_loss: upd.policy_loss,
            value_loss: upd.value_loss,
            entropy: upd.entropy,
            clip_fraction: upd.clip_fraction,
            kl: upd.approx_kl,
        })
        .map_err(|e| Error::format("training log", e))?;
        log.flush().map_err(|e| Error::io(&log_path, e))?;
        log::debug!(
            "rollout {rollout}/{n_rollouts}: steps {env_steps}, return {:?}, entropy {:.3}",
            mean_return,
            upd.entropy
        );

        meta.trained_env_steps = env_steps;
        meta.rollout = rollout;
        if rollout % cfg.checkpoint_every == 0 {
            checkpoints.push(save(checkpoint_name(rollout), &meta, &params, manifest)?);
            *last_checkpoint = Some(checkpoint_name(rollout));
        }
    }

    let final_path = req.run_dir.join(FINAL_FILE);
    let final_digest = save_checkpoint(&final_path, &Checkpoint::new(meta, params, Some(adam)))?;
    manifest.artifacts.push(FINAL_FILE.into());
    manifest
        .labels
        .insert("final_digest".into(), final_digest.clone());
    Ok(TrainOutcome {
        final_checkpoint: final_path,
        final_digest,
        checkpoints,
        rollouts: n_rollouts,
        env_steps,
    })
}

/// Run directories whose manifest reports completion and whose final
/// checkpoint exists can be reused.
pub fn is_complete_run(run_dir: &Path) -> bool {
    run_dir.join(FINAL_FILE).is_file()
        && RunManifest::read(run_dir)
            .map(|m| m.is_complete())
            .unwrap_or(false)
}
