//! Summaries and figures over a `pairings.csv` of per-episode returns.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::stats::{kde, silverman_bandwidth, Summary};
use super::svg::{style, Scale, Svg};

/// Opponent id whose mean serves as each victim's baseline.
pub const BASELINE_OPPONENT: &str = "arand";
/// Density evaluation points per violin.
const KDE_POINTS: usize = 64;

/// One row of `pairings.csv`. A blank return marks a pairing that produced
/// no episodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingRow {
    pub victim_id: String,
    pub opponent_id: String,
    pub episode_idx: Option<usize>,
    #[serde(rename = "return")]
    pub ret: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairingSummary {
    pub victim_id: String,
    pub opponent_id: String,
    pub returns: Vec<f64>,
    pub summary: Summary,
    pub baseline_mean: Option<f64>,
}

impl PairingSummary {
    /// `(baseline − mean) / baseline × 100`.
    pub fn pct_decrease(&self) -> Option<f64> {
        self.baseline_mean
            .map(|b| (b - self.summary.mean) / b * 100.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReturnReport {
    /// In order of first appearance in the input.
    pub pairings: Vec<PairingSummary>,
    /// `(victim, opponent)` pairs with no returns.
    pub omitted: Vec<(String, String)>,
}

pub fn read_pairings(path: &Path) -> Result<Vec<PairingRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::Usage(format!("cannot read {}: {e}", path.display())),
        _ => Error::format("pairings csv", e),
    })?;
    r.deserialize()
        .collect::<std::result::Result<Vec<PairingRow>, _>>()
        .map_err(|e| Error::format(format!("pairings csv {}", path.display()), e))
}

impl ReturnReport {
    pub fn from_rows(rows: &[PairingRow]) -> Self {
        let mut groups: Vec<((String, String), Vec<f64>)> = Vec::new();
        for row in rows {
            let key = (row.victim_id.clone(), row.opponent_id.clone());
            let idx = match groups.iter().position(|(k, _)| *k == key) {
                Some(i) => i,
                None => {
                    groups.push((key, Vec::new()));
                    groups.len() - 1
                }
            };
            if let Some(v) = row.ret {
                groups[idx].1.push(v);
            }
        }
        let mut pairings = Vec::new();
        let mut omitted = Vec::new();
        for ((victim_id, opponent_id), returns) in groups {
            match Summary::of(&returns) {
                Some(summary) => pairings.push(PairingSummary {
                    victim_id,
                    opponent_id,
                    returns,
                    summary,
                    baseline_mean: None,
                }),
                None => {
                    log::warn!("pairing {victim_id} vs {opponent_id} has no returns; omitted");
                    omitted.push((victim_id, opponent_id));
                }
            }
        }
        let baselines: Vec<(String, f64)> = pairings
            .iter()
            .filter(|p| p.opponent_id == BASELINE_OPPONENT)
            .map(|p| (p.victim_id.clone(), p.summary.mean))
            .collect();
        for p in &mut pairings {
            p.baseline_mean = baselines
                .iter()
                .find(|(v, _)| *v == p.victim_id)
                .map(|(_, m)| *m);
        }
        ReturnReport { pairings, omitted }
    }

    pub fn get(&self, victim: &str, opponent: &str) -> Option<&PairingSummary> {
        self.pairings
            .iter()
            .find(|p| p.victim_id == victim && p.opponent_id == opponent)
    }

    fn victims(&self) -> Vec<&str> {
        let mut v: Vec<&str> = Vec::new();
        for p in &self.pairings {
            if !v.contains(&p.victim_id.as_str()) {
                v.push(&p.victim_id);
            }
        }
        v
    }

    pub fn write_summary_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::format("summary csv", e))?;
        w.write_record([
            "victim_id",
            "opponent_id",
            "episodes",
            "mean",
            "std",
            "min",
            "q1",
            "median",
            "q3",
            "max",
            "baseline_mean",
            "pct_decrease",
        ])
        .map_err(|e| Error::format("summary csv", e))?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for p in &self.pairings {
            let s = &p.summary;
            w.write_record([
                p.victim_id.clone(),
                p.opponent_id.clone(),
                s.n.to_string(),
                s.mean.to_string(),
                s.std.to_string(),
                s.min.to_string(),
                s.q1.to_string(),
                s.median.to_string(),
                s.q3.to_string(),
                s.max.to_string(),
                opt(p.baseline_mean),
                opt(p.pct_decrease()),
            ])
            .map_err(|e| Error::format("summary csv", e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    fn value_range(&self) -> (f64, f64) {
        let lo = self
            .pairings
            .iter()
            .map(|p| p.summary.min)
            .fold(0.0f64, f64::min);
        let hi = self
            .pairings
            .iter()
            .map(|p| p.summary.max)
            .fold(0.0f64, f64::max);
        (lo.floor() - 0.5, hi.ceil() + 0.5)
    }

    /// One row of violins per victim. Densities come from a Gaussian KDE with
    /// Silverman's bandwidth; a sample with no spread is drawn as a bar.
    pub fn violin_svg(&self) -> String {
        let victims = self.victims();
        let per_row = victims
            .iter()
            .map(|v| self.pairings.iter().filter(|p| p.victim_id == *v).count())
            .max()
            .unwrap_or(1);
        let (slot, row_h, left, top) = (54.0, 200.0, 60.0, 30.0);
        let width = left + per_row as f64 * slot + 20.0;
        let mut svg = Svg::new(width, top + victims.len() as f64 * row_h + 10.0);
        let (lo, hi) = self.value_range();
        for (r, victim) in victims.iter().enumerate() {
            let y0 = top + r as f64 * row_h;
            let ys = Scale::new(lo, hi, y0 + row_h - 50.0, y0 + 20.0);
            svg.text(left, y0 + 12.0, 12.0, "start", &format!("victim {victim}"));
            for v in [lo, 0.0, hi] {
                svg.line(left, ys.map(v), width - 20.0, ys.map(v), style::GRID, 0.5);
                svg.text(left - 6.0, ys.map(v) + 4.0, 10.0, "end", &format!("{v:.1}"));
            }
            for (k, p) in self
                .pairings
                .iter()
                .filter(|p| p.victim_id == *victim)
                .enumerate()
            {
                let cx = left + (k as f64 + 0.5) * slot;
                let colour = if p.opponent_id == BASELINE_OPPONENT {
                    style::BASELINE
                } else {
                    style::ADVERSARY
                };
                let half = slot * 0.42;
                match silverman_bandwidth(&p.returns) {
                    None => {
                        let y = ys.map(p.summary.mean);
                        svg.rect(
                            cx - half,
                            y - 1.5,
                            2.0 * half,
                            3.0,
                            colour,
                            Some(style::AXIS),
                        );
                    }
                    Some(h) => {
                        let a = p.summary.min - 2.0 * h;
                        let b = p.summary.max + 2.0 * h;
                        let grid: Vec<f64> = (0..KDE_POINTS)
                            .map(|i| a + (b - a) * i as f64 / (KDE_POINTS - 1) as f64)
                            .collect();
                        let dens = kde(&p.returns, h, &grid);
                        let peak = dens.iter().copied().fold(0.0f64, f64::max).max(1e-300);
                        let mut outline: Vec<(f64, f64)> = grid
                            .iter()
                            .zip(&dens)
                            .map(|(&g, &d)| (cx + half * d / peak, ys.map(g)))
                            .collect();
                        outline.extend(
                            grid.iter()
                                .zip(&dens)
                                .rev()
                                .map(|(&g, &d)| (cx - half * d / peak, ys.map(g))),
                        );
                        svg.polygon(&outline, colour, style::AXIS);
                    }
                }
                let my = ys.map(p.summary.median);
                svg.line(cx - 6.0, my, cx + 6.0, my, style::AXIS, 2.0);
                svg.text(cx, y0 + row_h - 34.0, 9.0, "middle", &p.opponent_id);
            }
        }
        svg.finish()
    }

    /// Grouped bars of mean return: one group per victim, one bar per opponent.
    pub fn bar_svg(&self) -> String {
        let victims = self.victims();
        let per_group = victims
            .iter()
            .map(|v| self.pairings.iter().filter(|p| p.victim_id == *v).count())
            .max()
            .unwrap_or(1);
        let (bar, gap, left, top, plot_h) = (12.0, 24.0, 60.0, 30.0, 260.0);
        let group_w = per_group as f64 * bar + gap;
        let width = left + victims.len() as f64 * group_w + 20.0;
        let mut svg = Svg::new(width, top + plot_h + 60.0);
        let lo = self
            .pairings
            .iter()
            .map(|p| p.summary.mean)
            .fold(0.0f64, f64::min)
            .floor();
        let hi = self
            .pairings
            .iter()
            .map(|p| p.summary.mean)
            .fold(0.0f64, f64::max)
            .ceil();
        let ys = Scale::new(lo, hi, top + plot_h, top);
        svg.text(left, 18.0, 13.0, "start", "mean victim return per opponent");
        let steps = ((hi - lo).round() as i64).max(1);
        for i in 0..=steps {
            let v = lo + i as f64;
            svg.line(left, ys.map(v), width - 20.0, ys.map(v), style::GRID, 0.5);
            svg.text(left - 6.0, ys.map(v) + 4.0, 10.0, "end", &format!("{v:.0}"));
        }
        let zero = ys.map(0.0);
        for (g, victim) in victims.iter().enumerate() {
            let x0 = left + g as f64 * group_w + gap / 2.0;
            for (k, p) in self
                .pairings
                .iter()
                .filter(|p| p.victim_id == *victim)
                .enumerate()
            {
                let y = ys.map(p.summary.mean);
                let colour = if p.opponent_id == BASELINE_OPPONENT {
                    style::BASELINE
                } else {
                    style::ADVERSARY
                };
                svg.rect(
                    x0 + k as f64 * bar,
                    y.min(zero),
                    bar - 1.0,
                    (y - zero).abs(),
                    colour,
                    None,
                );
            }
            svg.text(
                x0 + per_group as f64 * bar / 2.0,
                top + plot_h + 20.0,
                11.0,
                "middle",
                victim,
            );
        }
        svg.line(left, zero, width - 20.0, zero, style::AXIS, 1.0);
        svg.rect(left, top + plot_h + 34.0, 10.0, 10.0, style::BASELINE, None);
        svg.text(
            left + 14.0,
            top + plot_h + 43.0,
            10.0,
            "start",
            BASELINE_OPPONENT,
        );
        svg.rect(
            left + 70.0,
            top + plot_h + 34.0,
            10.0,
            10.0,
            style::ADVERSARY,
            None,
        );
        svg.text(
            left + 84.0,
            top + plot_h + 43.0,
            10.0,
            "start",
            "adversaries",
        );
        svg.finish()
    }

    /// Writes `summary.csv`, `violin.svg` and `bars.svg` into `out_dir`.
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        self.write_summary_csv(&out_dir.join("summary.csv"))?;
        for (name, body) in [
            ("violin.svg", self.violin_svg()),
            ("bars.svg", self.bar_svg()),
        ] {
            let path = out_dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

pub fn return_report(pairings_csv: &Path) -> Result<ReturnReport> {
    Ok(ReturnReport::from_rows(&read_pairings(pairings_csv)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: &str, o: &str, k: usize, r: Option<f64>) -> PairingRow {
        PairingRow {
            victim_id: v.into(),
            opponent_id: o.into(),
            episode_idx: Some(k),
            ret: r,
        }
    }

    #[test]
    fn baseline_and_decrease() {
        let mut rows: Vec<_> = (0..4).map(|k| row("v01", "arand", k, Some(6.0))).collect();
        rows.extend((0..4).map(|k| row("v01", "v01-a01", k, Some(-1.5))));
        rows.push(row("v01", "v02-a01", 0, None));
        let rep = ReturnReport::from_rows(&rows);
        assert_eq!(rep.pairings.len(), 2);
        assert_eq!(
            rep.omitted,
            vec![("v01".to_string(), "v02-a01".to_string())]
        );
        let attacked = rep.get("v01", "v01-a01").unwrap();
        assert_eq!(attacked.pct_decrease(), Some(125.0));
        assert_eq!(rep.get("v01", "arand").unwrap().summary.std, 0.0);
        // Degenerate samples render as bars rather than polygons.
        let svg = rep.violin_svg();
        assert!(!svg.contains("<polygon"));
    }
}
