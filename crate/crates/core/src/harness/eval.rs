use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::Summary;
use crate::env::{Blockland, LevelSpec};
use crate::error::{Error, Result};
use crate::rng::{self, domain};

use super::agent::{AgentRef, ResolvedAgent};

pub const DEFAULT_EPISODES: usize = 30;
/// Evaluation seeds start here, away from the training seeds.
pub const DEFAULT_SEED_BASE: u64 = 1000;

/// Robot returns of one victim against one opponent.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairingResult {
    pub victim_id: String,
    pub opponent_id: String,
    pub seed_base: u64,
    pub returns: Vec<f64>,
    pub summary: Summary,
}

/// Play `episodes` episodes with the victim as robot and the opponent as
/// human, both sampling stochastically. Episode `k` uses seed
/// `seed_base + k` for the reset and for both agents' action streams.
pub fn evaluate_resolved(
    level: &LevelSpec,
    victim: &ResolvedAgent,
    opponent: &ResolvedAgent,
    episodes: usize,
    seed_base: u64,
) -> Result<PairingResult> {
    if episodes == 0 {
        return Err(Error::Config(
            "evaluation needs at least one episode".into(),
        ));
    }
    let mut env = Blockland::new(level.clone())?;
    let mut robot = victim.controller.clone();
    let mut human = opponent.controller.clone();
    let mut returns = Vec::with_capacity(episodes);
    for k in 0..episodes {
        let seed = seed_base + k as u64;
        let mut robot_rng = rng::stream(seed, domain::EVAL_ROBOT, 0);
        let mut human_rng = rng::stream(seed, domain::EVAL_HUMAN, 0);
        let (mut obs_r, mut obs_h) = env.reset(seed)?;
        robot.begin_episode();
        human.begin_episode();
        let mut total = 0.0;
        loop {
            let a_r = robot.act(&obs_r, &mut robot_rng);
            let a_h = human.act(&obs_h, &mut human_rng);
            let step = env.step(a_r, a_h)?;
            total += step.reward_robot;
            if step.terminated || step.truncated {
                break;
            }
            obs_r = step.obs_robot;
            obs_h = step.obs_human;
        }
        returns.push(total);
    }
    let summary = Summary::of(&returns).expect("at least one episode");
    Ok(PairingResult {
        victim_id: victim.id.clone(),
        opponent_id: opponent.id.clone(),
        seed_base,
        returns,
        summary,
    })
}

pub fn evaluate_pair(
    level: &LevelSpec,
    victim: &AgentRef,
    opponent: &AgentRef,
    episodes: usize,
    seed_base: u64,
) -> Result<PairingResult> {
    evaluate_resolved(
        level,
        &victim.resolve()?,
        &opponent.resolve()?,
        episodes,
        seed_base,
    )
}

/// Victims × opponents grid of mean returns.
#[derive(Clone, Debug)]
pub struct TransferMatrix {
    pub victims: Vec<String>,
    /// `arand` first, then every adversary.
    pub opponents: Vec<String>,
    /// `cells[v][o]`; `Err` holds the failure message of a pairing that could not run.
    pub cells: Vec<Vec<std::result::Result<PairingResult, String>>>,
    /// `direct[v][o]`: the opponent was trained against this victim.
    pub direct: Vec<Vec<bool>>,
}

/// A trained adversary and the victim it was trained against.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdversaryEntry {
    pub id: String,
    pub victim_id: String,
    pub agent: AgentRef,
}

pub fn build_transfer_matrix(
    level: &LevelSpec,
    victims: &[(String, AgentRef)],
    adversaries: &[AdversaryEntry],
    baseline: &AgentRef,
    episodes: usize,
    seed_base: u64,
    jobs: usize,
) -> Result<TransferMatrix> {
    let resolve = |id: &str, a: &AgentRef| {
        a.resolve().map(|mut r| {
            r.id = id.to_string();
            r
        })
    };
    let victims_r: Vec<_> = victims
        .iter()
        .map(|(id, a)| (id.clone(), resolve(id, a)))
        .collect();
    let mut opponents_r = vec![(baseline.id(), resolve(&baseline.id(), baseline))];
    opponents_r.extend(
        adversaries
            .iter()
            .map(|a| (a.id.clone(), resolve(&a.id, &a.agent))),
    );

    let jobs_list: Vec<(usize, usize)> = (0..victims_r.len())
        .flat_map(|v| (0..opponents_r.len()).map(move |o| (v, o)))
        .collect();
    let run = |&(v, o): &(usize, usize)| -> std::result::Result<PairingResult, String> {
        let victim = victims_r[v].1.as_ref().map_err(|e| e.to_string())?;
        let opponent = opponents_r[o].1.as_ref().map_err(|e| e.to_string())?;
        evaluate_resolved(level, victim, opponent, episodes, seed_base).map_err(|e| e.to_string())
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let flat: Vec<_> = pool.install(|| jobs_list.par_iter().map(run).collect());

    let n_opp = opponents_r.len();
    let mut cells: Vec<Vec<_>> = Vec::with_capacity(victims_r.len());
    let mut it = flat.into_iter();
    for _ in 0..victims_r.len() {
        cells.push(it.by_ref().take(n_opp).collect());
    }
    for (row, (vid, _)) in cells.iter().zip(&victims_r) {
        for (cell, (oid, _)) in row.iter().zip(&opponents_r) {
            if let Err(e) = cell {
                log::warn!("pairing {vid} vs {oid} failed: {e}");
            }
        }
    }
    let direct = victims_r
        .iter()
        .map(|(vid, _)| {
            let mut row = vec![false];
            row.extend(adversaries.iter().map(|a| a.victim_id == *vid));
            row
        })
        .collect();
    Ok(TransferMatrix {
        victims: victims_r.into_iter().map(|(id, _)| id).collect(),
        opponents: opponents_r.into_iter().map(|(id, _)| id).collect(),
        cells,
        direct,
    })
}

fn csv_err(e: csv::Error) -> Error {
    Error::format("csv output", e)
}

/// `victim_id, opponent_id, episode_idx, return`; a failed pairing
/// contributes a single row with blank episode and return.
pub fn write_pairings_csv<'a>(
    path: &Path,
    results: impl IntoIterator<Item = (&'a str, &'a str, Option<&'a PairingResult>)>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["victim_id", "opponent_id", "episode_idx", "return"])
        .map_err(csv_err)?;
    for (victim, opponent, res) in results {
        match res {
            Some(r) => {
                for (k, ret) in r.returns.iter().enumerate() {
                    w.write_record([victim, opponent, &k.to_string(), &ret.to_string()])
                        .map_err(csv_err)?;
                }
            }
            None => w
                .write_record([victim, opponent, "", ""])
                .map_err(csv_err)?,
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

impl TransferMatrix {
    pub fn cell(&self, victim: &str, opponent: &str) -> Option<&PairingResult> {
        let v = self.victims.iter().position(|x| x == victim)?;
        let o = self.opponents.iter().position(|x| x == opponent)?;
        self.cells[v][o].as_ref().ok()
    }

    fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.victims.len()).flat_map(move |v| (0..self.opponents.len()).map(move |o| (v, o)))
    }

    /// Writes `pairings.csv`, the wide `matrix.csv` and `matrix_long.csv`
    /// (one row per cell with its direct flag and status).
    pub fn write(&self, out_dir: &Path) -> Result<Vec<String>> {
        std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        write_pairings_csv(
            &out_dir.join("pairings.csv"),
            self.entries().map(|(v, o)| {
                (
                    self.victims[v].as_str(),
                    self.opponents[o].as_str(),
                    self.cells[v][o].as_ref().ok(),
                )
            }),
        )?;

        let path = out_dir.join("matrix.csv");
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        let mut header = vec!["victim_id".to_string()];
        header.extend(self.opponents.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for (v, row) in self.cells.iter().enumerate() {
            let mut rec = vec![self.victims[v].clone()];
            rec.extend(row.iter().map(|c| {
                c.as_ref()
                    .map_or(String::new(), |r| r.summary.mean.to_string())
            }));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = out_dir.join("matrix_long.csv");
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record([
            "victim_id",
            "opponent_id",
            "episodes",
            "mean",
            "direct",
            "status",
        ])
        .map_err(csv_err)?;
        for (v, o) in self.entries() {
            let (episodes, mean, status) = match &self.cells[v][o] {
                Ok(r) => (
                    r.returns.len().to_string(),
                    r.summary.mean.to_string(),
                    "ok".to_string(),
                ),
                Err(e) => (String::new(), String::new(), format!("failed: {e}")),
            };
            w.write_record([
                self.victims[v].as_str(),
                &self.opponents[o],
                &episodes,
                &mean,
                if self.direct[v][o] { "true" } else { "false" },
                &status,
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        Ok(vec![
            "pairings.csv".into(),
            "matrix.csv".into(),
            "matrix_long.csv".into(),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::ScriptedKind;

    #[test]
    fn scripted_pairing_is_reproducible() {
        let level = LevelSpec::twosides();
        let a = AgentRef::Scripted(ScriptedKind::Arand);
        let n = AgentRef::Scripted(ScriptedKind::Natural);
        let r1 = evaluate_pair(&level, &a, &n, 5, 1000).unwrap();
        let r2 = evaluate_pair(&level, &a, &n, 5, 1000).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.returns.len(), 5);
        let mean = r1.returns.iter().sum::<f64>() / 5.0;
        assert!((mean - r1.summary.mean).abs() < 1e-12);
        assert_ne!(
            r1.returns,
            evaluate_pair(&level, &a, &n, 5, 2000).unwrap().returns
        );
    }

    #[test]
    fn failed_cells_stay_flagged() {
        let level = LevelSpec::twosides();
        let victims = vec![("v01".to_string(), AgentRef::Scripted(ScriptedKind::Arand))];
        let adversaries = vec![AdversaryEntry {
            id: "v01-a01".into(),
            victim_id: "v01".into(),
            agent: AgentRef::Checkpoint {
                path: "/nonexistent/final.json".into(),
                role: crate::Agent::Human,
            },
        }];
        let m = build_transfer_matrix(
            &level,
            &victims,
            &adversaries,
            &AgentRef::Scripted(ScriptedKind::Arand),
            3,
            1000,
            1,
        )
        .unwrap();
        assert_eq!(m.opponents, vec!["arand", "v01-a01"]);
        assert!(m.cells[0][0].is_ok());
        assert!(m.cells[0][1].is_err());
        assert_eq!(m.direct, vec![vec![false, true]]);
    }
}
