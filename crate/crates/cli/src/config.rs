use std::path::PathBuf;

use maxreg::enumerate::Window;
use maxreg::init::InitSpec;
use maxreg::net::Architecture;
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

/// Hidden-layer layout: explicit widths, or a depth and a unit budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum Shape {
    Widths { widths: Vec<usize> },
    Budget { depth: usize, total: usize },
}

impl Shape {
    pub fn widths(&self) -> Result<Vec<usize>> {
        match *self {
            Shape::Widths { ref widths } => Ok(widths.clone()),
            Shape::Budget { depth, total } => split_units(depth, total),
        }
    }
}

/// `total` units over `depth` layers, the remainder going one per layer from the bottom.
pub fn split_units(depth: usize, total: usize) -> Result<Vec<usize>> {
    if depth == 0 || total < depth {
        return Err(CliError::Config(format!(
            "cannot spread {total} units over {depth} layers"
        )));
    }
    let (q, r) = (total / depth, total % depth);
    Ok((0..depth).map(|l| q + usize::from(l < r)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Counter {
    Exact,
    Grid,
    Db,
}

fn default_trials() -> usize {
    30
}

fn default_counters() -> Vec<Counter> {
    vec![Counter::Exact]
}

fn default_grid_pts() -> usize {
    512
}

fn default_output() -> PathBuf {
    PathBuf::from("results.csv")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n0s: Vec<usize>,
    pub shapes: Vec<Shape>,
    pub ranks: Vec<usize>,
    #[serde(default = "one")]
    pub out_dims: Vec<usize>,
    pub init: InitSpec,
    /// One interval per input coordinate, or a single interval used for all.
    pub window: Window,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_counters")]
    pub counters: Vec<Counter>,
    #[serde(default = "default_grid_pts")]
    pub grid_pts: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub workers: Option<usize>,
    /// Master seed; per-trial seeds are derived from it.
    #[serde(default)]
    pub seed: u64,
}

fn one() -> Vec<usize> {
    vec![1]
}

/// One point of the architecture grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigPoint {
    pub index: usize,
    pub arch: Architecture,
    pub window: Window,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("bad experiment config: {e}")))?;
        cfg.points()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Cartesian product `n0 × shape × rank × out_dim`, in that nesting order.
    pub fn points(&self) -> Result<Vec<ConfigPoint>> {
        if self.trials == 0 || self.counters.is_empty() {
            return Err(CliError::Config("need at least one trial and one counter".into()));
        }
        if [self.n0s.len(), self.shapes.len(), self.ranks.len(), self.out_dims.len()].contains(&0) {
            return Err(CliError::Config("architecture grid has an empty axis".into()));
        }
        let mut points = Vec::new();
        for &n0 in &self.n0s {
            let window = self.window.fit_to(n0)?;
            for shape in &self.shapes {
                let widths = shape.widths()?;
                for &rank in &self.ranks {
                    for &m in &self.out_dims {
                        let arch = Architecture::new(n0, widths.clone(), rank, m)?;
                        self.init.validate(&arch)?;
                        if self.counters.contains(&Counter::Db) && m < 2 {
                            return Err(CliError::Config("the db counter needs out_dims ≥ 2".into()));
                        }
                        points.push(ConfigPoint {
                            index: points.len(),
                            arch,
                            window: window.clone(),
                        });
                    }
                }
            }
        }
        Ok(points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_split() {
        assert_eq!(split_units(3, 110).unwrap(), vec![37, 37, 36]);
        assert_eq!(split_units(4, 30).unwrap(), vec![8, 8, 7, 7]);
        assert_eq!(split_units(1, 5).unwrap(), vec![5]);
        assert!(split_units(3, 2).is_err());
        assert!(split_units(0, 2).is_err());
    }

    #[test]
    fn parse_minimal_config() {
        let cfg = ExperimentConfig::from_json(
            r#"{"n0s":[2],"shapes":[{"widths":[3]},{"depth":3,"total":12}],"ranks":[2,3],
                "init":{"scheme":"maxout-he"},"window":[[-50,50]]}"#,
        )
        .unwrap();
        assert_eq!(cfg.trials, 30);
        assert_eq!(cfg.counters, vec![Counter::Exact]);
        let pts = cfg.points().unwrap();
        assert_eq!(pts.len(), 4);
        assert_eq!(pts[2].arch.widths, vec![4, 4, 4]);
        assert_eq!(pts[2].arch.rank, 2);
        assert_eq!(pts[0].window.dim(), 2);
    }

    #[test]
    fn reject_bad_configs() {
        let bad = [
            r#"{"n0s":[2],"shapes":[{"widths":[3]}],"ranks":[2],"init":{"scheme":"maxout-he"},"window":[[-1,1]],"bogus":1}"#,
            r#"{"n0s":[2],"shapes":[{"widths":[3]}],"ranks":[9],"init":{"scheme":"maxout-he"},"window":[[-1,1]]}"#,
            r#"{"n0s":[2],"shapes":[{"widths":[3]}],"ranks":[2],"init":{"scheme":"maxout-he"},"window":[[1,-1]]}"#,
            r#"{"n0s":[2],"shapes":[{"widths":[3]}],"ranks":[2],"init":{"scheme":"maxout-he"},"window":[[-1,1]],"counters":["db"]}"#,
            r#"{"n0s":[3],"shapes":[{"widths":[3]}],"ranks":[2],"init":{"scheme":"maxout-he"},"window":[[-1,1],[-1,1]]}"#,
        ];
        for text in bad {
            assert!(ExperimentConfig::from_json(text).is_err(), "{text}");
        }
    }
}
