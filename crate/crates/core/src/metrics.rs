//! Quality indicators over approximation sets: mean Euclidean distance to
//! ray-matched targets, exact hypervolume (two and three objectives), the
//! spacing indicator and Pareto dominance filtering.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::ObjectiveVector;

/// A set of objective vectors sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontSet {
    points: Vec<ObjectiveVector>,
    m: usize,
}

impl FrontSet {
    pub fn new(points: Vec<ObjectiveVector>) -> Result<Self> {
        let m = points.first().map_or(0, |p| p.len());
        Self::with_dim(points, m)
    }

    pub fn with_dim(points: Vec<ObjectiveVector>, m: usize) -> Result<Self> {
        for p in &points {
            if p.len() != m {
                return Err(Error::shape("front point", m, p.len()));
            }
            if let Some(index) = p.iter().position(|v| !v.is_finite()) {
                return Err(Error::Numeric {
                    what: "front point".into(),
                    index,
                });
            }
        }
        Ok(FrontSet { points, m })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows.into_iter().map(ObjectiveVector).collect())
    }

    pub fn points(&self) -> &[ObjectiveVector] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.m
    }
}

/// Indicator values for one approximation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub med: Option<f64>,
    pub hv: f64,
    pub spacing: f64,
    pub n_nondominated: usize,
}

/// `a` Pareto-dominates `b`: no worse anywhere, strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Non-dominated subset, in input order. Duplicates survive.
pub fn dominance_filter(set: &FrontSet) -> FrontSet {
    let pts = &set.points;
    let kept = pts
        .iter()
        .filter(|p| !pts.iter().any(|q| dominates(q, p)))
        .cloned()
        .collect();
    FrontSet {
        points: kept,
        m: set.m,
    }
}

/// Mean Euclidean distance between index-paired truth and approximation points.
pub fn med(truth: &FrontSet, approx: &FrontSet) -> Result<f64> {
    if truth.len() != approx.len() {
        return Err(Error::Contract(format!(
            "MED needs paired sets, got {} truth points and {} approximations",
            truth.len(),
            approx.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Contract("MED of empty sets".into()));
    }
    if truth.dim() != approx.dim() {
        return Err(Error::shape("objective dimension", truth.dim(), approx.dim()));
    }
    let total: f64 = truth
        .points
        .iter()
        .zip(&approx.points)
        .map(|(a, b)| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        })
        .sum();
    Ok(total / truth.len() as f64)
}

fn strictly_inside(p: &[f64], reference: &[f64]) -> bool {
    p.iter().zip(reference).all(|(x, r)| x < r)
}

/// Exact hypervolume dominated by `set` and bounded by `reference`.
///
/// Points that do not strictly dominate the reference point contribute
/// nothing. Two objectives use a sort-and-sweep, three a dimension sweep over
/// an ordered staircase, both `O(n log n)`.
pub fn hypervolume(set: &FrontSet, reference: &[f64]) -> Result<f64> {
    if reference.len() != set.dim() && !set.is_empty() {
        return Err(Error::shape("reference point", set.dim(), reference.len()));
    }
    let inside: Vec<&[f64]> = set
        .points
        .iter()
        .map(|p| &p[..])
        .filter(|p| strictly_inside(p, reference))
        .collect();
    if inside.is_empty() {
        warn!("hypervolume: no point strictly dominates the reference point");
        return Ok(0.0);
    }
    match reference.len() {
        2 => Ok(hv2(inside, reference)),
        3 => Ok(hv3(inside, reference)),
        m => Err(Error::Unsupported(format!(
            "exact hypervolume for {m} objectives"
        ))),
    }
}

fn hv2(mut pts: Vec<&[f64]>, reference: &[f64]) -> f64 {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut ceiling = reference[1];
    for p in pts {
        if p[1] < ceiling {
            area += (reference[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    area
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Two-dimensional non-dominated staircase with incrementally tracked area.
/// Keys (first coordinate) increase while values (second) strictly decrease.
struct Staircase {
    steps: BTreeMap<Key, f64>,
    area: f64,
    rx: f64,
    ry: f64,
}

impl Staircase {
    fn new(rx: f64, ry: f64) -> Self {
        Staircase {
            steps: BTreeMap::new(),
            area: 0.0,
            rx,
            ry,
        }
    }

    fn insert(&mut self, x: f64, y: f64) {
        // Height of the staircase just left of x (strictly smaller keys).
        let prev_y = self
            .steps
            .range(..Key(x))
            .next_back()
            .map_or(self.ry, |(_, &v)| v);
        if prev_y <= y {
            return;
        }
        if let Some(&same) = self.steps.get(&Key(x)) {
            if same <= y {
                return;
            }
        }
        let mut removed = Vec::new();
        let mut next_x = self.rx;
        for (k, &v) in self.steps.range(Key(x)..) {
            if v >= y {
                removed.push((k.0, v));
            } else {
                next_x = k.0;
                break;
            }
        }
        let mut added = 0.0;
        let mut left = x;
        let mut height = prev_y;
        for &(kx, ky) in &removed {
            added += (kx - left) * (height - y);
            left = kx;
            height = ky;
            self.steps.remove(&Key(kx));
        }
        added += (next_x - left) * (height - y);
        self.area += added;
        self.steps.insert(Key(x), y);
    }
}

fn hv3(mut pts: Vec<&[f64]>, reference: &[f64]) -> f64 {
    pts.sort_by(|a, b| a[2].total_cmp(&b[2]));
    let mut stairs = Staircase::new(reference[0], reference[1]);
    let mut volume = 0.0;
    for (i, p) in pts.iter().enumerate() {
        stairs.insert(p[0], p[1]);
        let next_z = pts.get(i + 1).map_or(reference[2], |q| q[2]);
        volume += stairs.area * (next_z - p[2]);
    }
    volume
}

/// Monte-Carlo hypervolume estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_err: f64,
}

/// Samples the box spanned by the component-wise minimum of the set and the
/// reference point and counts dominated samples.
pub fn mc_hypervolume(
    set: &FrontSet,
    reference: &[f64],
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::Config("Monte-Carlo hypervolume needs samples >= 1".into()));
    }
    let inside: Vec<&[f64]> = set
        .points
        .iter()
        .map(|p| &p[..])
        .filter(|p| strictly_inside(p, reference))
        .collect();
    if inside.is_empty() {
        return Ok(McEstimate {
            value: 0.0,
            std_err: 0.0,
        });
    }
    let m = reference.len();
    let lower: Vec<f64> = (0..m)
        .map(|j| inside.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min))
        .collect();
    let box_volume: f64 = (0..m).map(|j| reference[j] - lower[j]).product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = vec![0.0; m];
    let mut hits = 0usize;
    for _ in 0..samples {
        for j in 0..m {
            u[j] = rng.random_range(lower[j]..reference[j]);
        }
        if inside.iter().any(|p| p.iter().zip(&u).all(|(a, b)| a <= b)) {
            hits += 1;
        }
    }
    let frac = hits as f64 / samples as f64;
    Ok(McEstimate {
        value: box_volume * frac,
        std_err: box_volume * (frac * (1.0 - frac) / samples as f64).sqrt(),
    })
}

/// Spacing: sample deviation of nearest-neighbour L1 distances.
///
/// Exact duplicates are collapsed first so repeated points do not produce
/// artificial zero distances.
pub fn spacing(set: &FrontSet) -> Result<f64> {
    if set.len() < 2 {
        return Err(Error::Contract(format!(
            "spacing needs at least 2 points, got {}",
            set.len()
        )));
    }
    let mut unique: Vec<&[f64]> = Vec::with_capacity(set.len());
    for p in &set.points {
        if !unique.iter().any(|q| *q == &p[..]) {
            unique.push(p);
        }
    }
    let n = unique.len();
    if n < 2 {
        return Ok(0.0);
    }
    let d: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    unique[i]
                        .iter()
                        .zip(unique[j])
                        .map(|(a, b)| (a - b).abs())
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let ss: f64 = d.iter().map(|v| (mean - v) * (mean - v)).sum();
    Ok((ss / (n - 1) as f64).sqrt())
}

/// All indicators for one approximation set. `truth` enables MED.
pub fn report(
    approx: &FrontSet,
    truth: Option<&FrontSet>,
    reference: &[f64],
) -> Result<MetricsReport> {
    let med = truth.map(|t| med(t, approx)).transpose()?;
    let hv = hypervolume(approx, reference)?;
    let spacing = if approx.len() >= 2 { spacing(approx)? } else { 0.0 };
    Ok(MetricsReport {
        med,
        hv,
        spacing,
        n_nondominated: dominance_filter(approx).len(),
    })
}
