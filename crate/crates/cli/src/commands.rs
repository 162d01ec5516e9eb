use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use blockland_core::analysis::{return_report, visitation_heatmap, weight_norm_series};
use blockland_core::checkpoint::file_digest;
use blockland_core::harness::{
    adversary_request, build_transfer_matrix, discover_adversaries, discover_victims,
    evaluate_pair, run_grid, victim_request, write_pairings_csv, AgentRef, GridPlan, GridPreset,
};
use blockland_core::manifest::{RunManifest, RunStatus, MANIFEST_FILE};
use blockland_core::policy::ScriptedKind;
use blockland_core::ppo::{train, Stepping, FINAL_FILE};
use blockland_core::{Agent, Error, LevelSpec, PpoConfig, Result};

use crate::args::{Cli, Command, PpoArgs};
use crate::config::{out_dir, require_dir, require_file, resolve_level, resolve_ppo};

fn command_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn stepping(threads: usize) -> Stepping {
    if threads > 1 {
        Stepping::Parallel { threads }
    } else {
        Stepping::Sequential
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Manifest for a command that reads artifacts and writes derived ones.
fn write_manifest(
    dir: &Path,
    config: serde_json::Value,
    level: LevelSpec,
    seeds: Vec<u64>,
    artifacts: Vec<String>,
    labels: BTreeMap<String, String>,
) -> Result<()> {
    let mut m = RunManifest::new(command_line(), config, level, seeds);
    m.artifacts = artifacts;
    m.labels = labels;
    m.finish(RunStatus::Complete);
    m.write(dir)
}

fn dump(value: serde_json::Value) -> Result<()> {
    println!(
        "{}",
        serde_json::to_string_pretty(&value).expect("config serializes")
    );
    Ok(())
}

fn ppo(
    cli_config: &Option<PathBuf>,
    preset_steps: Option<u64>,
    flags: &PpoArgs,
) -> Result<PpoConfig> {
    resolve_ppo(cli_config.as_deref(), preset_steps, flags)
}

fn checkpoint_ref(text: &str, role: Agent) -> Result<AgentRef> {
    let r = AgentRef::parse(text, role);
    if let AgentRef::Checkpoint { path, .. } = &r {
        require_file(path)?;
    }
    Ok(r)
}

fn digest_labels<'a>(agents: impl IntoIterator<Item = &'a AgentRef>) -> BTreeMap<String, String> {
    let mut labels = BTreeMap::new();
    for a in agents {
        if let AgentRef::Checkpoint { path, .. } = a {
            if let Ok(d) = file_digest(path) {
                labels.insert(format!("digest_{}", a.id()), d);
            }
        }
    }
    labels
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::TrainVictim(a) => {
            let config = ppo(&cli.config, None, &a.ppo)?;
            if cli.dump_config {
                return dump(serde_json::to_value(&config).expect("config serializes"));
            }
            let level = resolve_level(&a.level)?;
            let kind: ScriptedKind = a.opponent.parse()?;
            let dir = out_dir(&a.out, &format!("victim-{}-s{}", kind.tag(), a.seed));
            let id = dir
                .file_name()
                .map_or("victim".into(), |n| n.to_string_lossy().into_owned());
            let mut req = victim_request(&level, kind, &id, a.seed, dir, &config, &command_line());
            req.stepping = stepping(a.threads);
            let outcome = train(&req)?;
            println!(
                "{} {}",
                outcome.final_checkpoint.display(),
                outcome.final_digest
            );
            Ok(())
        }
        Command::TrainAdversary(a) => {
            let config = ppo(&cli.config, None, &a.ppo)?;
            if cli.dump_config {
                return dump(serde_json::to_value(&config).expect("config serializes"));
            }
            let level = resolve_level(&a.level)?;
            let victim = checkpoint_ref(&a.victim.to_string_lossy(), Agent::Robot)?;
            let AgentRef::Checkpoint {
                path: victim_path, ..
            } = &victim
            else {
                return Err(Error::Usage(
                    "--victim must be a checkpoint or run directory".into(),
                ));
            };
            let victim_id = a.victim_id.clone().unwrap_or_else(|| victim.id());
            let dir = out_dir(&a.out, &format!("{victim_id}-adv-s{}", a.seed));
            let id = dir
                .file_name()
                .map_or("adversary".into(), |n| n.to_string_lossy().into_owned());
            let before = file_digest(victim_path)?;
            let mut req = adversary_request(
                &level,
                &victim_id,
                victim_path,
                &id,
                a.seed,
                dir,
                &config,
                &command_line(),
            )?;
            req.stepping = stepping(a.threads);
            let outcome = train(&req)?;
            if file_digest(victim_path)? != before {
                return Err(Error::Config(
                    "victim checkpoint changed during adversary training".into(),
                ));
            }
            println!(
                "{} {}",
                outcome.final_checkpoint.display(),
                outcome.final_digest
            );
            Ok(())
        }
        Command::Evaluate(a) => {
            let config = serde_json::json!({ "episodes": a.episodes, "seed_base": a.seed_base });
            if cli.dump_config {
                return dump(serde_json::to_value(&config).expect("config serializes"));
            }
            let level = resolve_level(&a.level)?;
            let victim = checkpoint_ref(&a.victim, Agent::Robot)?;
            let opponent = checkpoint_ref(&a.opponent, Agent::Human)?;
            let result = evaluate_pair(&level, &victim, &opponent, a.episodes, a.seed_base)?;
            let dir = out_dir(
                &a.out,
                &format!("eval-{}-vs-{}", result.victim_id, result.opponent_id),
            );
            create_dir(&dir)?;
            write_pairings_csv(
                &dir.join("pairings.csv"),
                [(
                    result.victim_id.as_str(),
                    result.opponent_id.as_str(),
                    Some(&result),
                )],
            )?;
            let seeds = (0..a.episodes as u64).map(|k| a.seed_base + k).collect();
            let labels = digest_labels([&victim, &opponent]);
            write_manifest(
                &dir,
                config,
                level,
                seeds,
                vec!["pairings.csv".into()],
                labels,
            )?;
            let s = result.summary;
            println!(
                "{} vs {}: mean {:.4} std {:.4} min {:.4} max {:.4} over {} episodes",
                result.victim_id, result.opponent_id, s.mean, s.std, s.min, s.max, s.n
            );
            Ok(())
        }
        Command::Matrix(a) => {
            let config = serde_json::json!({ "episodes": a.episodes, "seed_base": a.seed_base });
            if cli.dump_config {
                return dump(serde_json::to_value(&config).expect("config serializes"));
            }
            let level = resolve_level(&a.level)?;
            require_dir(&a.victims_dir)?;
            require_dir(&a.adversaries_dir)?;
            let victims = discover_victims(&a.victims_dir)?;
            let adversaries = discover_adversaries(&a.adversaries_dir)?;
            if victims.is_empty() {
                return Err(Error::Usage(format!(
                    "no completed victim runs in {}",
                    a.victims_dir.display()
                )));
            }
            let baseline = AgentRef::Scripted(ScriptedKind::Arand);
            let matrix = build_transfer_matrix(
                &level,
                &victims,
                &adversaries,
                &baseline,
                a.episodes,
                a.seed_base,
                a.jobs,
            )?;
            let dir = out_dir(&a.out, "eval");
            let artifacts = matrix.write(&dir)?;
            let labels = digest_labels(
                victims
                    .iter()
                    .map(|(_, r)| r)
                    .chain(adversaries.iter().map(|e| &e.agent)),
            );
            write_manifest(&dir, config, level, vec![a.seed_base], artifacts, labels)?;
            println!(
                "{} victims x {} opponents -> {}",
                matrix.victims.len(),
                matrix.opponents.len(),
                dir.display()
            );
            Ok(())
        }
        Command::WeightNorms(a) => {
            if cli.dump_config {
                return dump(serde_json::json!({ "run": a.run }));
            }
            require_dir(&a.run)?;
            let series = weight_norm_series(&a.run)?;
            let leaf = a
                .run
                .file_name()
                .map_or("run".into(), |n| n.to_string_lossy().into_owned());
            let dir = out_dir(&a.out, &format!("weight-norms-{leaf}"));
            create_dir(&dir)?;
            series.write_csv(&dir.join("weight_norms.csv"))?;
            write_text(&dir.join("weight_norms.svg"), &series.to_svg())?;
            let level = RunManifest::read(&a.run)
                .map(|m| m.level)
                .unwrap_or_else(|_| LevelSpec::twosides());
            let mut labels = BTreeMap::new();
            labels.insert("run".to_string(), a.run.display().to_string());
            if let Ok(d) = file_digest(&a.run.join(FINAL_FILE)) {
                labels.insert("digest_final".to_string(), d);
            }
            let artifacts = vec!["weight_norms.csv".into(), "weight_norms.svg".into()];
            write_manifest(
                &dir,
                serde_json::Value::Null,
                level,
                vec![],
                artifacts,
                labels,
            )?;
            println!("{} rows -> {}", series.points.len(), dir.display());
            Ok(())
        }
        Command::Heatmap(a) => {
            let config = serde_json::json!({ "episodes": a.episodes, "cell_size": a.cell_size, "seed": a.seed });
            if cli.dump_config {
                return dump(serde_json::to_value(&config).expect("config serializes"));
            }
            let level = resolve_level(&a.level)?;
            let policy = checkpoint_ref(&a.policy, Agent::Human)?;
            let resolved = policy.resolve()?;
            let map = visitation_heatmap(
                &level,
                resolved.controller,
                &resolved.id,
                a.episodes,
                a.cell_size,
                a.seed,
            )?;
            let dir = out_dir(&a.out, &format!("heatmap-{}", resolved.id));
            create_dir(&dir)?;
            map.write_csv(&dir.join("heatmap.csv"))?;
            write_text(&dir.join("heatmap.svg"), &map.to_svg())?;
            let artifacts = vec!["heatmap.csv".into(), "heatmap.svg".into()];
            write_manifest(
                &dir,
                config,
                level,
                vec![a.seed],
                artifacts,
                digest_labels([&policy]),
            )?;
            println!(
                "{}: {} distinct cells overall, {:.2} per episode",
                resolved.id,
                map.distinct_cells(),
                map.mean_distinct_per_episode()
            );
            Ok(())
        }
        Command::Report(a) => {
            if cli.dump_config {
                return dump(serde_json::json!({ "pairings": a.pairings }));
            }
            require_file(&a.pairings)?;
            let source_dir = a.pairings.parent().unwrap_or(Path::new("."));
            let has_manifest = source_dir.join(MANIFEST_FILE).is_file();
            if !has_manifest && !a.allow_unmanifested {
                return Err(Error::Usage(format!(
                    "{} has no {MANIFEST_FILE} beside it; pass --unsafe to report on it anyway",
                    a.pairings.display()
                )));
            }
            let report = return_report(&a.pairings)?;
            let dir = out_dir(&a.out, "reports");
            report.write(&dir)?;
            let mut labels = BTreeMap::new();
            labels.insert("pairings".to_string(), a.pairings.display().to_string());
            if let Ok(d) = file_digest(&a.pairings) {
                labels.insert("digest_pairings".to_string(), d);
            }
            if !has_manifest {
                labels.insert("unsafe".to_string(), "true".to_string());
            }
            let artifacts = vec!["summary.csv".into(), "violin.svg".into(), "bars.svg".into()];
            write_manifest(
                &dir,
                serde_json::Value::Null,
                LevelSpec::twosides(),
                vec![],
                artifacts,
                labels,
            )?;
            println!(
                "{} pairings ({} omitted) -> {}",
                report.pairings.len(),
                report.omitted.len(),
                dir.display()
            );
            Ok(())
        }
        Command::Grid(a) => {
            let preset = GridPreset::by_name(&a.preset)?;
            let config = ppo(&cli.config, Some(preset.total_steps), &a.ppo)?;
            if cli.dump_config {
                return dump(serde_json::to_value(&config).expect("config serializes"));
            }
            let arms = a
                .arms
                .iter()
                .map(|s| s.parse())
                .collect::<Result<Vec<ScriptedKind>>>()?;
            let plan = GridPlan {
                out: out_dir(&a.out, &format!("grid-{}", preset.name)),
                level: resolve_level(&a.level)?,
                config,
                preset,
                arms,
                jobs: a.jobs,
                seed_base: a.seed_base,
                command: command_line(),
            };
            let result = run_grid(&plan)?;
            for arm in &result.arms {
                let failed = arm
                    .victims
                    .iter()
                    .chain(&arm.adversaries)
                    .filter(|r| r.result.is_err())
                    .count();
                println!(
                    "{}: {} victims, {} adversaries, {} failed runs, {} pairings",
                    arm.arm,
                    arm.victims.len(),
                    arm.adversaries.len(),
                    failed,
                    arm.report.pairings.len()
                );
            }
            println!("outputs in {}", plan.out.display());
            Ok(())
        }
    }
}
