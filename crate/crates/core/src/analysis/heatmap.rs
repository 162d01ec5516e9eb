//! Where a human-side policy spends its time when the robot stands still.

use std::path::Path;

use serde::Serialize;

use crate::env::{Action, Agent, Blockland, LevelSpec, Point};
use crate::error::{Error, Result};
use crate::policy::Controller;
use crate::rng::{self, domain};

use super::svg::{ramp, style, Svg};

/// Visit counts over the human's accessible region.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Heatmap {
    pub policy: String,
    pub cell_size: f64,
    /// World coordinates of the region's lower-left corner.
    pub origin: Point,
    pub nx: usize,
    pub ny: usize,
    /// Row-major, `counts[iy * nx + ix]`.
    pub counts: Vec<u64>,
    pub episodes: usize,
    /// Total steps counted over all episodes.
    pub steps: u64,
    /// Distinct cells visited in each episode.
    pub per_episode_distinct: Vec<usize>,
}

impl Heatmap {
    fn empty(policy: &str, spec: &LevelSpec, cell_size: f64) -> Self {
        let (x0, x1) = spec.x_bounds(Agent::Human);
        let nx = ((x1 - x0) / cell_size).ceil().max(1.0) as usize;
        let ny = (spec.world_extent.y / cell_size).ceil().max(1.0) as usize;
        Heatmap {
            policy: policy.to_string(),
            cell_size,
            origin: Point::new(x0, 0.0),
            nx,
            ny,
            counts: vec![0; nx * ny],
            episodes: 0,
            steps: 0,
            per_episode_distinct: Vec::new(),
        }
    }

    /// Cell containing `p`; points on the far edges fall in the last cell.
    pub fn cell_of(&self, p: Point) -> (usize, usize) {
        let ix = ((p.x - self.origin.x) / self.cell_size).floor().max(0.0) as usize;
        let iy = ((p.y - self.origin.y) / self.cell_size).floor().max(0.0) as usize;
        (ix.min(self.nx - 1), iy.min(self.ny - 1))
    }

    pub fn count(&self, ix: usize, iy: usize) -> u64 {
        self.counts[iy * self.nx + ix]
    }

    /// Cells visited at least once over all episodes.
    pub fn distinct_cells(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn mean_distinct_per_episode(&self) -> f64 {
        if self.per_episode_distinct.is_empty() {
            return 0.0;
        }
        self.per_episode_distinct.iter().sum::<usize>() as f64
            / self.per_episode_distinct.len() as f64
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::format("heatmap csv", e))?;
        w.write_record(["ix", "iy", "x_center", "y_center", "count"])
            .map_err(|e| Error::format("heatmap csv", e))?;
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let xc = self.origin.x + (ix as f64 + 0.5) * self.cell_size;
                let yc = self.origin.y + (iy as f64 + 0.5) * self.cell_size;
                w.write_record([
                    ix.to_string(),
                    iy.to_string(),
                    xc.to_string(),
                    yc.to_string(),
                    self.count(ix, iy).to_string(),
                ])
                .map_err(|e| Error::format("heatmap csv", e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn to_svg(&self) -> String {
        let px = 28.0;
        let (left, top) = (50.0, 40.0);
        let (w, h) = (self.nx as f64 * px, self.ny as f64 * px);
        let mut svg = Svg::new(left + w + 90.0, top + h + 50.0);
        svg.text(
            left + w / 2.0,
            22.0,
            13.0,
            "middle",
            &format!("{} visitation, {} episodes", self.policy, self.episodes),
        );
        let max = self.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let c = self.count(ix, iy);
                // World y grows upwards; SVG y grows downwards.
                let y = top + (self.ny - 1 - iy) as f64 * px;
                let fill = if c == 0 {
                    style::BACKGROUND.to_string()
                } else {
                    ramp(c as f64 / max)
                };
                svg.rect(left + ix as f64 * px, y, px, px, &fill, Some(style::GRID));
            }
        }
        svg.text(
            left,
            top + h + 16.0,
            10.0,
            "start",
            &format!("x={}", self.origin.x),
        );
        svg.text(
            left + w,
            top + h + 16.0,
            10.0,
            "end",
            &format!("x={}", self.origin.x + self.nx as f64 * self.cell_size),
        );
        svg.text(
            left + w / 2.0,
            top + h + 36.0,
            11.0,
            "middle",
            &format!(
                "distinct cells {} of {}",
                self.distinct_cells(),
                self.nx * self.ny
            ),
        );
        for i in 0..=5 {
            let t = i as f64 / 5.0;
            let y = top + h - (i + 1) as f64 * h / 6.0;
            svg.rect(left + w + 20.0, y, 16.0, h / 6.0, &ramp(t), None);
            svg.text(
                left + w + 42.0,
                y + h / 12.0 + 4.0,
                10.0,
                "start",
                &format!("{:.0}", t * max),
            );
        }
        svg.finish()
    }
}

/// Run `episodes` episodes of `human` against a robot that always emits
/// `NoOp`, counting the human's cell after every step. Episode `k` draws the
/// human's actions from stream `(seed, EVAL_HUMAN, k)`.
pub fn visitation_heatmap(
    spec: &LevelSpec,
    human: Controller,
    policy_id: &str,
    episodes: usize,
    cell_size: f64,
    seed: u64,
) -> Result<Heatmap> {
    if cell_size.is_nan() || cell_size <= 0.0 {
        return Err(Error::Config(format!(
            "cell size must be positive, got {cell_size}"
        )));
    }
    let mut map = Heatmap::empty(policy_id, spec, cell_size);
    let mut env = Blockland::new(spec.clone())?;
    let mut human = human;
    let mut seen = vec![false; map.counts.len()];
    for k in 0..episodes {
        let mut rng = rng::stream(seed, domain::EVAL_HUMAN, k as u64);
        let (_, mut obs) = env.reset(seed + k as u64)?;
        human.begin_episode();
        seen.fill(false);
        loop {
            let a = human.act(&obs, &mut rng);
            let step = env.step(Action::NoOp, a)?;
            let (ix, iy) = map.cell_of(env.state().human_pos);
            map.counts[iy * map.nx + ix] += 1;
            seen[iy * map.nx + ix] = true;
            map.steps += 1;
            if step.terminated || step.truncated {
                break;
            }
            obs = step.obs_human;
        }
        map.per_episode_distinct
            .push(seen.iter().filter(|&&s| s).count());
        map.episodes += 1;
    }
    Ok(map)
}
