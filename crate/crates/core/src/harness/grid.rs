use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use crate::analysis::{
    return_report, visitation_heatmap, weight_norm_series, Heatmap, ReturnReport,
};
use crate::checkpoint::{file_digest, load_checkpoint};
use crate::env::{Agent, LevelSpec};
use crate::error::{Error, Result};
use crate::manifest::{RunManifest, RunStatus};
use crate::policy::{Controller, ScriptedKind};
use crate::ppo::{
    is_complete_run, train, OpponentSpec, PpoConfig, Stepping, TrainRequest, FINAL_FILE,
};

use super::agent::AgentRef;
use super::eval::{build_transfer_matrix, AdversaryEntry, TransferMatrix};

/// Episodes per heatmap.
pub const HEATMAP_EPISODES: usize = 100;

pub fn victim_id(i: usize) -> String {
    format!("v{i:02}")
}

pub fn adversary_id(victim: &str, j: usize) -> String {
    format!("{victim}-a{j:02}")
}

/// Outcome of one training run.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub id: String,
    pub dir: PathBuf,
    /// Final checkpoint, or the failure message.
    pub result: std::result::Result<PathBuf, String>,
    /// The run was already complete on disk and was not retrained.
    pub reused: bool,
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn run_or_reuse(id: String, req: TrainRequest) -> RunRecord {
    let dir = req.run_dir.clone();
    if is_complete_run(&dir) {
        log::info!("{id}: reusing complete run in {}", dir.display());
        return RunRecord {
            id,
            result: Ok(dir.join(FINAL_FILE)),
            dir,
            reused: true,
        };
    }
    log::info!("{id}: training in {}", dir.display());
    let result = train(&req).map(|o| o.final_checkpoint).map_err(|e| {
        log::error!("{id}: training failed: {e}");
        e.to_string()
    });
    RunRecord {
        id,
        dir,
        result,
        reused: false,
    }
}

/// A robot run against a scripted human.
pub fn victim_request(
    level: &LevelSpec,
    opponent: ScriptedKind,
    id: &str,
    seed: u64,
    run_dir: PathBuf,
    config: &PpoConfig,
    command: &str,
) -> TrainRequest {
    let mut labels = BTreeMap::new();
    labels.insert("run_id".to_string(), id.to_string());
    labels.insert("role".to_string(), "victim".to_string());
    TrainRequest {
        level: level.clone(),
        learner: Agent::Robot,
        opponent: OpponentSpec::Scripted(opponent),
        config: config.clone(),
        seed,
        run_dir,
        stepping: Stepping::Sequential,
        command: command.to_string(),
        labels,
    }
}

/// A human run against the frozen robot in `victim_ckpt`, which samples
/// stochastically. The victim's digest is recorded in the manifest.
#[allow(clippy::too_many_arguments)]
pub fn adversary_request(
    level: &LevelSpec,
    victim_id: &str,
    victim_ckpt: &Path,
    id: &str,
    seed: u64,
    run_dir: PathBuf,
    config: &PpoConfig,
    command: &str,
) -> Result<TrainRequest> {
    let digest = file_digest(victim_ckpt)?;
    let ckpt = load_checkpoint(victim_ckpt)?;
    if ckpt.meta.role != Agent::Robot {
        return Err(Error::Usage(format!(
            "{} is not a robot checkpoint",
            victim_ckpt.display()
        )));
    }
    let mut labels = BTreeMap::new();
    labels.insert("run_id".to_string(), id.to_string());
    labels.insert("role".to_string(), "adversary".to_string());
    labels.insert("victim_id".to_string(), victim_id.to_string());
    labels.insert("victim_sampling".to_string(), "stochastic".to_string());
    Ok(TrainRequest {
        level: level.clone(),
        learner: Agent::Human,
        opponent: OpponentSpec::Frozen {
            params: Arc::new(ckpt.into_params()),
            tag: victim_id.to_string(),
            path: Some(victim_ckpt.display().to_string()),
            digest: Some(digest),
        },
        config: config.clone(),
        seed,
        run_dir,
        stepping: Stepping::Sequential,
        command: command.to_string(),
        labels,
    })
}

/// One robot run per `(id, seed)` against a scripted human, each in
/// `out_dir/<id>`. A failing run does not stop the others.
pub fn train_victims(
    level: &LevelSpec,
    opponent: ScriptedKind,
    runs: &[(String, u64)],
    out_dir: &Path,
    config: &PpoConfig,
    jobs: usize,
    command: &str,
) -> Result<Vec<RunRecord>> {
    let mut seeds: Vec<u64> = runs.iter().map(|r| r.1).collect();
    seeds.sort_unstable();
    seeds.dedup();
    if seeds.len() != runs.len() {
        return Err(Error::Config("victim seeds must be distinct".into()));
    }
    let requests: Vec<(String, TrainRequest)> = runs
        .iter()
        .map(|(id, seed)| {
            let req = victim_request(
                level,
                opponent,
                id,
                *seed,
                out_dir.join(id),
                config,
                command,
            );
            (id.clone(), req)
        })
        .collect();
    Ok(pool(jobs)?.install(|| {
        requests
            .into_par_iter()
            .map(|(id, req)| run_or_reuse(id, req))
            .collect()
    }))
}

/// Human runs against a frozen victim. The victim file is hashed before
/// and after; any change is an error.
#[allow(clippy::too_many_arguments)]
pub fn train_adversaries(
    level: &LevelSpec,
    victim_id: &str,
    victim_ckpt: &Path,
    runs: &[(String, u64)],
    out_dir: &Path,
    config: &PpoConfig,
    jobs: usize,
    command: &str,
) -> Result<Vec<RunRecord>> {
    let digest = file_digest(victim_ckpt)?;
    let requests: Vec<(String, TrainRequest)> = runs
        .iter()
        .map(|(id, seed)| {
            let req = adversary_request(
                level,
                victim_id,
                victim_ckpt,
                id,
                *seed,
                out_dir.join(id),
                config,
                command,
            )?;
            Ok((id.clone(), req))
        })
        .collect::<Result<_>>()?;
    let records = pool(jobs)?.install(|| {
        requests
            .into_par_iter()
            .map(|(id, req)| run_or_reuse(id, req))
            .collect()
    });
    let after = file_digest(victim_ckpt)?;
    if after != digest {
        return Err(Error::Config(format!(
            "victim checkpoint {} changed during adversary training",
            victim_ckpt.display()
        )));
    }
    Ok(records)
}

fn complete_subdirs(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out: Vec<(String, PathBuf)> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .filter(|p| {
            let ok = is_complete_run(p);
            if !ok {
                log::warn!("skipping incomplete run {}", p.display());
            }
            ok
        })
        .filter_map(|p| Some((p.file_name()?.to_string_lossy().into_owned(), p)))
        .collect();
    out.sort();
    Ok(out)
}

/// Completed robot runs directly under `dir`, by directory name.
pub fn discover_victims(dir: &Path) -> Result<Vec<(String, AgentRef)>> {
    Ok(complete_subdirs(dir)?
        .into_iter()
        .map(|(id, p)| {
            let agent = AgentRef::Checkpoint {
                path: p.join(FINAL_FILE),
                role: Agent::Robot,
            };
            (id, agent)
        })
        .collect())
}

/// Completed human runs under `dir`, paired with the victim recorded in
/// their manifests.
pub fn discover_adversaries(dir: &Path) -> Result<Vec<AdversaryEntry>> {
    complete_subdirs(dir)?
        .into_iter()
        .map(|(id, p)| {
            let m = RunManifest::read(&p)?;
            let victim_id = m.labels.get("victim_id").cloned().ok_or_else(|| {
                Error::format(format!("manifest in {}", p.display()), "no victim_id label")
            })?;
            Ok(AdversaryEntry {
                id,
                victim_id,
                agent: AgentRef::Checkpoint {
                    path: p.join(FINAL_FILE),
                    role: Agent::Human,
                },
            })
        })
        .collect()
}

/// Grid sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridPreset {
    pub name: &'static str,
    pub victims: usize,
    pub adversaries_per_victim: usize,
    pub total_steps: u64,
    pub episodes: usize,
}

impl GridPreset {
    pub const FULL: GridPreset = GridPreset {
        name: "full",
        victims: 5,
        adversaries_per_victim: 3,
        total_steps: 800_000,
        episodes: 30,
    };
    pub const SMOKE: GridPreset = GridPreset {
        name: "smoke",
        victims: 2,
        adversaries_per_victim: 1,
        total_steps: 200_000,
        episodes: 10,
    };

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "full" => Ok(Self::FULL),
            "smoke" => Ok(Self::SMOKE),
            other => Err(Error::Usage(format!(
                "unknown preset `{other}` (expected full or smoke)"
            ))),
        }
    }

    /// Victim `i` (1-based) trains with seed `i`.
    pub fn victim_runs(&self) -> Vec<(String, u64)> {
        (1..=self.victims)
            .map(|i| (victim_id(i), i as u64))
            .collect()
    }

    /// Adversary `j` of victim `i` trains with seed `100·i + j`.
    pub fn adversary_runs(&self, victim_index: usize) -> Vec<(String, u64)> {
        let vid = victim_id(victim_index);
        (1..=self.adversaries_per_victim)
            .map(|j| (adversary_id(&vid, j), (100 * victim_index + j) as u64))
            .collect()
    }
}

/// Everything `run_grid` needs. `config` is used unchanged for every run.
#[derive(Clone, Debug)]
pub struct GridPlan {
    pub out: PathBuf,
    pub level: LevelSpec,
    pub config: PpoConfig,
    pub preset: GridPreset,
    /// Scripted opponents the victims are trained against; one arm each.
    pub arms: Vec<ScriptedKind>,
    pub jobs: usize,
    pub seed_base: u64,
    pub command: String,
}

#[derive(Clone, Debug)]
pub struct ArmResult {
    pub arm: ScriptedKind,
    pub victims: Vec<RunRecord>,
    pub adversaries: Vec<RunRecord>,
    pub matrix: TransferMatrix,
    pub report: ReturnReport,
}

#[derive(Clone, Debug)]
pub struct GridResult {
    pub arms: Vec<ArmResult>,
    pub heatmaps: Vec<Heatmap>,
}

fn write_manifest(
    dir: &Path,
    command: &str,
    config: serde_json::Value,
    plan: &GridPlan,
    artifacts: Vec<String>,
    labels: BTreeMap<String, String>,
) -> Result<()> {
    let mut m = RunManifest::new(command, config, plan.level.clone(), vec![plan.seed_base]);
    m.artifacts = artifacts;
    m.labels = labels;
    m.finish(RunStatus::Complete);
    m.write(dir)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn run_arm(plan: &GridPlan, arm: ScriptedKind) -> Result<ArmResult> {
    let arm_dir = plan.out.join(arm.tag());
    let victims_dir = arm_dir.join("victims");
    let adversaries_dir = arm_dir.join("adversaries");
    let victims = train_victims(
        &plan.level,
        arm,
        &plan.preset.victim_runs(),
        &victims_dir,
        &plan.config,
        plan.jobs,
        &plan.command,
    )?;

    let mut adversaries = Vec::new();
    for (i, v) in victims.iter().enumerate() {
        let Ok(ckpt) = &v.result else {
            log::warn!("{}: no victim checkpoint, skipping its adversaries", v.id);
            continue;
        };
        adversaries.extend(train_adversaries(
            &plan.level,
            &v.id,
            ckpt,
            &plan.preset.adversary_runs(i + 1),
            &adversaries_dir,
            &plan.config,
            plan.jobs,
            &plan.command,
        )?);
    }

    let victim_refs: Vec<(String, AgentRef)> = victims
        .iter()
        .map(|v| {
            let path = v.dir.join(FINAL_FILE);
            (
                v.id.clone(),
                AgentRef::Checkpoint {
                    path,
                    role: Agent::Robot,
                },
            )
        })
        .collect();
    let adversary_refs: Vec<AdversaryEntry> = adversaries
        .iter()
        .map(|a| AdversaryEntry {
            id: a.id.clone(),
            victim_id: a.id.split("-a").next().unwrap_or_default().to_string(),
            agent: AgentRef::Checkpoint {
                path: a.dir.join(FINAL_FILE),
                role: Agent::Human,
            },
        })
        .collect();
    let matrix = build_transfer_matrix(
        &plan.level,
        &victim_refs,
        &adversary_refs,
        &AgentRef::Scripted(ScriptedKind::Arand),
        plan.preset.episodes,
        plan.seed_base,
        plan.jobs,
    )?;
    let eval_dir = arm_dir.join("eval");
    let artifacts = matrix.write(&eval_dir)?;
    let mut labels = BTreeMap::new();
    labels.insert("arm".to_string(), arm.tag().to_string());
    let named = victim_refs
        .iter()
        .map(|(id, a)| (id, a))
        .chain(adversary_refs.iter().map(|a| (&a.id, &a.agent)));
    for (id, agent) in named {
        if let AgentRef::Checkpoint { path, .. } = agent {
            if let Ok(d) = file_digest(path) {
                labels.insert(format!("digest_{id}"), d);
            }
        }
    }
    write_manifest(
        &eval_dir,
        &plan.command,
        serde_json::json!({ "episodes": plan.preset.episodes, "seed_base": plan.seed_base }),
        plan,
        artifacts,
        labels,
    )?;

    let reports_dir = arm_dir.join("reports");
    let report = return_report(&eval_dir.join("pairings.csv"))?;
    report.write(&reports_dir)?;
    let mut artifacts = vec![
        "summary.csv".to_string(),
        "violin.svg".to_string(),
        "bars.svg".to_string(),
    ];
    let norms_dir = reports_dir.join("weight_norms");
    std::fs::create_dir_all(&norms_dir).map_err(|e| Error::io(&norms_dir, e))?;
    for v in &victims {
        match weight_norm_series(&v.dir) {
            Ok(series) => {
                series.write_csv(&norms_dir.join(format!("{}.csv", v.id)))?;
                write_text(&norms_dir.join(format!("{}.svg", v.id)), &series.to_svg())?;
                artifacts.push(format!("weight_norms/{}.csv", v.id));
                artifacts.push(format!("weight_norms/{}.svg", v.id));
            }
            Err(e) => log::warn!("{}: no weight-norm series: {e}", v.id),
        }
    }
    let mut labels = BTreeMap::new();
    labels.insert("arm".to_string(), arm.tag().to_string());
    labels.insert("pairings".to_string(), "../eval/pairings.csv".to_string());
    write_manifest(
        &reports_dir,
        &plan.command,
        serde_json::Value::Null,
        plan,
        artifacts,
        labels,
    )?;

    Ok(ArmResult {
        arm,
        victims,
        adversaries,
        matrix,
        report,
    })
}

/// The whole pipeline: per arm, victims, adversaries, the transfer matrix and
/// its reports; then the visitation heatmaps of both scripted walkers.
/// Completed runs already on disk are reused.
pub fn run_grid(plan: &GridPlan) -> Result<GridResult> {
    plan.config.validate()?;
    plan.level.validate()?;
    std::fs::create_dir_all(&plan.out).map_err(|e| Error::io(&plan.out, e))?;
    let arms = plan
        .arms
        .iter()
        .map(|&arm| run_arm(plan, arm))
        .collect::<Result<Vec<_>>>()?;

    let heat_dir = plan.out.join("heatmaps");
    std::fs::create_dir_all(&heat_dir).map_err(|e| Error::io(&heat_dir, e))?;
    let mut heatmaps = Vec::new();
    let mut artifacts = Vec::new();
    for kind in [ScriptedKind::Arand, ScriptedKind::Natural] {
        let map = visitation_heatmap(
            &plan.level,
            Controller::scripted(kind),
            kind.tag(),
            HEATMAP_EPISODES,
            0.5,
            plan.seed_base,
        )?;
        map.write_csv(&heat_dir.join(format!("{}.csv", kind.tag())))?;
        write_text(&heat_dir.join(format!("{}.svg", kind.tag())), &map.to_svg())?;
        artifacts.push(format!("{}.csv", kind.tag()));
        artifacts.push(format!("{}.svg", kind.tag()));
        heatmaps.push(map);
    }
    write_manifest(
        &heat_dir,
        &plan.command,
        serde_json::json!({ "episodes": HEATMAP_EPISODES, "cell_size": 0.5, "seed": plan.seed_base }),
        plan,
        artifacts,
        BTreeMap::new(),
    )?;
    Ok(GridResult { arms, heatmaps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_seeds() {
        let p = GridPreset::FULL;
        let v = p.victim_runs();
        assert_eq!(v.len(), 5);
        assert_eq!(v[2], ("v03".to_string(), 3));
        let a = p.adversary_runs(4);
        assert_eq!(a[1], ("v04-a02".to_string(), 402));
        assert_eq!(GridPreset::by_name("smoke").unwrap(), GridPreset::SMOKE);
        assert!(GridPreset::by_name("huge").is_err());
    }
}
