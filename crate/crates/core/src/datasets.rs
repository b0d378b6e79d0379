//! Canonical datasets, JSON interchange, and the decency predicate.
//!
//! A [`Dataset`] is an immutable list of `(x, y)` pairs with a task kind.
//! Classification datasets have labels in `{0, 1}`; regression datasets
//! have real targets. Invariants (consistent dimension, finite values,
//! nonempty, valid labels) are enforced at every construction site,
//! including JSON deserialization.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Regression,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::Classification => write!(f, "classification"),
            Task::Regression => write!(f, "regression"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub x: Vec<f64>,
    pub y: f64,
}

/// Immutable dataset. Construct through [`Dataset::new`] or [`load_json`];
/// both enforce the invariants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    task: Task,
    d: usize,
    points: Vec<DataPoint>,
}

impl<'de> Deserialize<'de> for Dataset {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw {
            task: Task,
            d: usize,
            points: Vec<DataPoint>,
        }
        let raw = Raw::deserialize(deserializer)?;
        Dataset::new(raw.task, raw.d, raw.points).map_err(serde::de::Error::custom)
    }
}

impl Dataset {
    pub fn new(task: Task, d: usize, points: Vec<DataPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("dataset is empty".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.x.len() != d {
                return Err(Error::InvalidInput(format!(
                    "point {i} has {} coordinates, expected {d}",
                    p.x.len()
                )));
            }
            if !p.x.iter().all(|v| v.is_finite()) || !p.y.is_finite() {
                return Err(Error::InvalidInput(format!("point {i} has non-finite values")));
            }
            if task == Task::Classification && p.y != 0.0 && p.y != 1.0 {
                return Err(Error::InvalidInput(format!(
                    "classification label of point {i} is {}, expected 0 or 1",
                    p.y
                )));
            }
        }
        Ok(Self { task, d, points })
    }

    pub fn classification(points: Vec<(Vec<f64>, f64)>, d: usize) -> Result<Self> {
        Self::new(
            Task::Classification,
            d,
            points.into_iter().map(|(x, y)| DataPoint { x, y }).collect(),
        )
    }

    pub fn regression(points: Vec<(Vec<f64>, f64)>, d: usize) -> Result<Self> {
        Self::new(
            Task::Regression,
            d,
            points.into_iter().map(|(x, y)| DataPoint { x, y }).collect(),
        )
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    /// Same labels and task, new inputs. Used by the forging loop, which
    /// moves datapoints but never touches labels or the point count.
    pub fn with_inputs(&self, xs: Vec<Vec<f64>>) -> Result<Self> {
        if xs.len() != self.points.len() {
            return Err(Error::InvalidInput("point count changed".into()));
        }
        let points = xs
            .into_iter()
            .zip(&self.points)
            .map(|(x, p)| DataPoint { x, y: p.y })
            .collect();
        Self::new(self.task, self.d, points)
    }

    /// All input coordinates flattened point-major, for data-space descent.
    pub fn flat_inputs(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| p.x.iter().copied()).collect()
    }
}

/// Named datasets with the exact constants used throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinDataset {
    /// The 10-point, two-class planar dataset on which the 2-2-1 sigmoid
    /// network has a certified suboptimal local minimum.
    Sigmoid10,
    /// Five 1-D regression points trapping a single ReLU unit at loss 18.
    D1,
    /// Six 1-D regression points with a perfect two-unit fit and a
    /// suboptimal two-unit minimum.
    D2,
    /// Six 1-D regression points with two three-unit minima of different
    /// quality (region assignment decides which).
    D3,
    /// Four-corner XOR: (0,0) and (1,1) positive, (0,1) and (1,0) negative.
    Xor,
    /// Flattened XOR: positive class (1.0, 0.0), (0.2, 0.6); negative class
    /// (0.0, 1.0), (0.6, 0.2).
    Fxor,
}

impl BuiltinDataset {
    pub const ALL: [BuiltinDataset; 6] = [
        BuiltinDataset::Sigmoid10,
        BuiltinDataset::D1,
        BuiltinDataset::D2,
        BuiltinDataset::D3,
        BuiltinDataset::Xor,
        BuiltinDataset::Fxor,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BuiltinDataset::Sigmoid10 => "sigmoid10",
            BuiltinDataset::D1 => "d1",
            BuiltinDataset::D2 => "d2",
            BuiltinDataset::D3 => "d3",
            BuiltinDataset::Xor => "xor",
            BuiltinDataset::Fxor => "fxor",
        }
    }
}

impl FromStr for BuiltinDataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BuiltinDataset::ALL
            .iter()
            .copied()
            .find(|b| b.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidInput(format!("unknown builtin dataset '{s}'")))
    }
}

pub fn builtin(name: BuiltinDataset) -> Dataset {
    let ds = match name {
        BuiltinDataset::Sigmoid10 => Dataset::classification(
            vec![
                (vec![2.8, 0.4], 1.0),
                (vec![3.1, 4.3], 1.0),
                (vec![0.1, -3.4], 1.0),
                (vec![-4.2, -3.3], 1.0),
                (vec![-0.5, 0.2], 1.0),
                (vec![-2.7, -0.4], 0.0),
                (vec![-3.0, -4.3], 0.0),
                (vec![-0.1, 3.4], 0.0),
                (vec![4.2, 3.2], 0.0),
                (vec![0.4, -0.1], 0.0),
            ],
            2,
        ),
        BuiltinDataset::D1 => Dataset::regression(
            vec![
                (vec![5.0], 2.0),
                (vec![4.0], 1.0),
                (vec![3.0], 0.0),
                (vec![1.0], -3.0),
                (vec![-1.0], 3.0),
            ],
            1,
        ),
        BuiltinDataset::D2 => Dataset::regression(
            vec![
                (vec![-1.0], 5.0),
                (vec![0.0], 0.0),
                (vec![1.0], -1.0),
                (vec![10.0], -3.0),
                (vec![11.0], -4.0),
                (vec![12.0], -5.0),
            ],
            1,
        ),
        BuiltinDataset::D3 => Dataset::regression(
            vec![
                (vec![-1.0], 3.0),
                (vec![0.0], 0.0),
                (vec![1.0], -1.0),
                (vec![10.0], -3.0),
                (vec![11.0], -4.0),
                (vec![12.0], -6.0),
            ],
            1,
        ),
        BuiltinDataset::Xor => Dataset::classification(
            vec![
                (vec![0.0, 0.0], 1.0),
                (vec![1.0, 1.0], 1.0),
                (vec![0.0, 1.0], 0.0),
                (vec![1.0, 0.0], 0.0),
            ],
            2,
        ),
        BuiltinDataset::Fxor => Dataset::classification(
            vec![
                (vec![1.0, 0.0], 1.0),
                (vec![0.2, 0.6], 1.0),
                (vec![0.0, 1.0], 0.0),
                (vec![0.6, 0.2], 0.0),
            ],
            2,
        ),
    };
    ds.expect("builtin datasets satisfy the invariants")
}

pub fn save_json(d: &Dataset, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(d)
        .map_err(|e| Error::Parse(format!("serializing dataset: {e}")))?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}

pub fn load_json(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Neumaier compensated sum; keeps group/global means stable under
/// permutation of the points.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + comp
}

/// Arithmetic mean of all labels.
pub fn mean_label(d: &Dataset) -> f64 {
    compensated_sum(d.points().iter().map(|p| p.y)) / d.len() as f64
}

fn group_key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

/// First point index whose input-group label mean differs from the global
/// label mean, or `None` if no group does.
///
/// Groups are formed by exact bitwise equality of the input coordinates;
/// means are compared with tolerance `1e-12 * (1 + |global mean|)`.
pub fn decency_witness(d: &Dataset) -> Option<usize> {
    let global = mean_label(d);
    let tol = 1e-12 * (1.0 + global.abs());
    let mut groups: HashMap<Vec<u64>, Vec<f64>> = HashMap::new();
    for p in d.points() {
        groups.entry(group_key(&p.x)).or_default().push(p.y);
    }
    d.points().iter().position(|p| {
        let ys = &groups[&group_key(&p.x)];
        let mean = compensated_sum(ys.iter().copied()) / ys.len() as f64;
        (mean - global).abs() > tol
    })
}

/// Whether some input-group's label mean differs from the global mean.
pub fn is_decent(d: &Dataset) -> bool {
    decency_witness(d).is_some()
}

/// Label means of the witness group and its complement: `(nu, mu)` where
/// `nu` is the mean over points equal to `x_r` and `mu` over the rest.
/// `mu` is `None` when every point equals `x_r`.
pub fn group_means(d: &Dataset, r: usize) -> (f64, Option<f64>) {
    let key = group_key(&d.points()[r].x);
    let (mut inside, mut outside) = (Vec::new(), Vec::new());
    for p in d.points() {
        if group_key(&p.x) == key {
            inside.push(p.y);
        } else {
            outside.push(p.y);
        }
    }
    let nu = compensated_sum(inside.iter().copied()) / inside.len() as f64;
    let mu = if outside.is_empty() {
        None
    } else {
        Some(compensated_sum(outside.iter().copied()) / outside.len() as f64)
    };
    (nu, mu)
}
