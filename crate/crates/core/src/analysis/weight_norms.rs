//! L1 norms of the first-layer weights attached to each observation input,
//! tracked across a run's checkpoints.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::checkpoint::{load_checkpoint, Checkpoint};
use crate::env::OBS_DIM;
use crate::error::{Error, Result};
use crate::manifest::RunManifest;
use crate::nn::Mlp;
use crate::ppo::{CHECKPOINT_DIR, FINAL_FILE};

use super::svg::{style, Scale, Svg};

/// Semantic groups of observation dimensions, in observation order.
pub const BLOCKS: [(&str, std::ops::Range<usize>); 5] = [
    ("self_pos", 0..2),
    ("other_pos", 2..4),
    ("boxes", 4..8),
    ("cart", 8..10),
    ("held", 10..12),
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlockNorms {
    pub self_pos: f64,
    pub other_pos: f64,
    pub boxes: f64,
    pub cart: f64,
    pub held: f64,
}

impl BlockNorms {
    pub fn from_columns(cols: &[f64; OBS_DIM]) -> Self {
        let sum = |i: usize| BLOCKS[i].1.clone().map(|j| cols[j]).sum::<f64>();
        BlockNorms {
            self_pos: sum(0),
            other_pos: sum(1),
            boxes: sum(2),
            cart: sum(3),
            held: sum(4),
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [
            self.self_pos,
            self.other_pos,
            self.boxes,
            self.cart,
            self.held,
        ]
    }
}

/// Per-column norms and block sums for one network.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetNorms {
    pub columns: [f64; OBS_DIM],
    pub blocks: BlockNorms,
}

impl NetNorms {
    /// `columns[j] = Σ_i |W[i][j]|` over the first layer's rows.
    pub fn of(net: &Mlp) -> Result<Self> {
        let layer = net.first_layer();
        if layer.n_in != OBS_DIM {
            return Err(Error::shape(
                "first layer",
                format!("{} inputs, expected {OBS_DIM}", layer.n_in),
            ));
        }
        let mut columns = [0.0; OBS_DIM];
        for row in 0..layer.n_out {
            for (j, c) in columns.iter_mut().enumerate() {
                *c += layer.weight(row, j).abs();
            }
        }
        Ok(NetNorms {
            columns,
            blocks: BlockNorms::from_columns(&columns),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InputNorms {
    pub actor: NetNorms,
    pub critic: NetNorms,
}

pub fn input_weight_l1(ckpt: &Checkpoint) -> Result<InputNorms> {
    Ok(InputNorms {
        actor: NetNorms::of(&ckpt.actor)?,
        critic: NetNorms::of(&ckpt.critic)?,
    })
}

/// One checkpoint of a series; `norms` is `None` for skipped entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesPoint {
    pub checkpoint: String,
    pub rollout: Option<usize>,
    pub env_steps: Option<u64>,
    pub norms: Option<InputNorms>,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightNormSeries {
    /// Loaded points ordered by env steps, followed by skipped entries.
    pub points: Vec<SeriesPoint>,
}

impl WeightNormSeries {
    pub fn loaded(&self) -> impl Iterator<Item = (&SeriesPoint, &InputNorms)> {
        self.points
            .iter()
            .filter_map(|p| p.norms.as_ref().map(|n| (p, n)))
    }

    pub fn first(&self) -> Option<&InputNorms> {
        self.loaded().next().map(|(_, n)| n)
    }

    pub fn last(&self) -> Option<&InputNorms> {
        self.loaded().last().map(|(_, n)| n)
    }

    pub fn csv_header() -> Vec<String> {
        let mut h: Vec<String> = ["checkpoint", "rollout", "env_steps", "status"]
            .map(String::from)
            .to_vec();
        for net in ["actor", "critic"] {
            h.extend((0..OBS_DIM).map(|j| format!("{net}_d{j}")));
            h.extend(BLOCKS.iter().map(|(name, _)| format!("{net}_{name}")));
        }
        h
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w =
            csv::Writer::from_path(path).map_err(|e| Error::format("weight norm csv", e))?;
        let width = Self::csv_header().len();
        w.write_record(Self::csv_header())
            .map_err(|e| Error::format("weight norm csv", e))?;
        for p in &self.points {
            let mut row = vec![
                p.checkpoint.clone(),
                p.rollout.map_or(String::new(), |r| r.to_string()),
                p.env_steps.map_or(String::new(), |s| s.to_string()),
                p.status.clone(),
            ];
            if let Some(n) = &p.norms {
                for net in [&n.actor, &n.critic] {
                    row.extend(net.columns.iter().map(f64::to_string));
                    row.extend(net.blocks.as_array().iter().map(f64::to_string));
                }
            }
            row.resize(width, String::new());
            w.write_record(&row)
                .map_err(|e| Error::format("weight norm csv", e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Two panels (actor above critic), one line per block.
    pub fn to_svg(&self) -> String {
        let (w, panel_h, margin) = (720.0, 260.0, 60.0);
        let mut svg = Svg::new(w, 2.0 * panel_h + 60.0);
        let pts: Vec<_> = self.loaded().collect();
        let x_max = pts
            .iter()
            .filter_map(|(p, _)| p.env_steps)
            .max()
            .unwrap_or(1) as f64;
        let xs = Scale::new(0.0, x_max, margin, w - 150.0);
        for (k, (title, pick)) in [
            (
                "actor input-layer L1 norm",
                (|n: &InputNorms| n.actor) as fn(&InputNorms) -> NetNorms,
            ),
            ("critic input-layer L1 norm", |n: &InputNorms| n.critic),
        ]
        .into_iter()
        .enumerate()
        {
            let top = 30.0 + k as f64 * panel_h;
            let bottom = top + panel_h - 50.0;
            let y_max = pts
                .iter()
                .flat_map(|(_, n)| pick(n).blocks.as_array())
                .fold(0.0f64, f64::max)
                .max(1e-9);
            let ys = Scale::new(0.0, y_max * 1.05, bottom, top);
            svg.text(w / 2.0, top - 8.0, 14.0, "middle", title);
            svg.line(margin, bottom, w - 150.0, bottom, style::AXIS, 1.0);
            svg.line(margin, bottom, margin, top, style::AXIS, 1.0);
            for i in 0..=4 {
                let v = y_max * 1.05 * i as f64 / 4.0;
                let y = ys.map(v);
                svg.line(margin, y, w - 150.0, y, style::GRID, 0.5);
                svg.text(margin - 6.0, y + 4.0, 10.0, "end", &format!("{v:.1}"));
            }
            svg.text(margin, bottom + 28.0, 10.0, "start", "0");
            svg.text(
                w - 150.0,
                bottom + 28.0,
                10.0,
                "end",
                &format!("{x_max:.0} env steps"),
            );
            for (b, (name, _)) in BLOCKS.iter().enumerate() {
                let line: Vec<(f64, f64)> = pts
                    .iter()
                    .map(|(p, n)| {
                        (
                            xs.map(p.env_steps.unwrap_or(0) as f64),
                            ys.map(pick(n).blocks.as_array()[b]),
                        )
                    })
                    .collect();
                svg.polyline(&line, style::SERIES[b], 2.0);
                let ly = top + 14.0 + b as f64 * 16.0;
                svg.line(
                    w - 140.0,
                    ly - 4.0,
                    w - 120.0,
                    ly - 4.0,
                    style::SERIES[b],
                    3.0,
                );
                svg.text(w - 115.0, ly, 11.0, "start", name);
            }
        }
        svg.finish()
    }
}

fn checkpoint_candidates(run_dir: &Path) -> Result<Vec<String>> {
    if let Ok(m) = RunManifest::read(run_dir) {
        let listed: Vec<String> = m
            .artifacts
            .into_iter()
            .filter(|a| a.starts_with(&format!("{CHECKPOINT_DIR}/")) || a == FINAL_FILE)
            .collect();
        if !listed.is_empty() {
            return Ok(listed);
        }
    }
    let dir = run_dir.join(CHECKPOINT_DIR);
    let mut names: Vec<String> = std::fs::read_dir(&dir)
        .map_err(|e| Error::io(&dir, e))?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n.ends_with(".json"))
        .map(|n| format!("{CHECKPOINT_DIR}/{n}"))
        .collect();
    names.sort();
    if run_dir.join(FINAL_FILE).is_file() {
        names.push(FINAL_FILE.to_string());
    }
    Ok(names)
}

/// Norms for every checkpoint of a run directory (its `checkpoints/` files
/// plus `final.json`). Checkpoints named in the manifest but missing or
/// unreadable become warning rows.
pub fn weight_norm_series(run_dir: &Path) -> Result<WeightNormSeries> {
    let mut loaded = Vec::new();
    let mut skipped = Vec::new();
    for name in checkpoint_candidates(run_dir)? {
        let path: PathBuf = run_dir.join(&name);
        match load_checkpoint(&path).and_then(|c| Ok((input_weight_l1(&c)?, c.meta))) {
            Ok((norms, meta)) => loaded.push(SeriesPoint {
                checkpoint: name,
                rollout: Some(meta.rollout),
                env_steps: Some(meta.trained_env_steps),
                norms: Some(norms),
                status: "ok".into(),
            }),
            Err(e) => {
                log::warn!("skipping checkpoint {}: {e}", path.display());
                skipped.push(SeriesPoint {
                    checkpoint: name,
                    rollout: None,
                    env_steps: None,
                    norms: None,
                    status: format!("skipped: {e}"),
                });
            }
        }
    }
    // Stable sort keeps a periodic checkpoint ahead of a final one at the same step.
    loaded.sort_by_key(|p| p.env_steps);
    if loaded.len() < 2 {
        return Err(Error::Usage(format!(
            "{} has {} readable checkpoints; a series needs at least 2",
            run_dir.display(),
            loaded.len()
        )));
    }
    loaded.extend(skipped);
    Ok(WeightNormSeries { points: loaded })
}
