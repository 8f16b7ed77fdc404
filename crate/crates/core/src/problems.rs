//! Differentiable benchmark problems: ZDT1, ZDT2 and the RE21 / RE37
//! engineering instances.
//!
//! RE objectives are returned already normalised to roughly `[0, 1]` using
//! fixed ideal / nadir estimates of their Pareto fronts, so every problem
//! here shares the ideal hint `0` and the hypervolume reference point `1.1`.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nnet::{DecisionBox, PreferenceRay};
use crate::scalarize::{IdealPoint, ScalarizationKind, ScalarizationSpec};

/// Lower clamp for the ZDT1 `sqrt(f1 / g)` argument.
pub const ZDT_SQRT_FLOOR: f64 = 1e-12;

/// An objective-space point `F(x)`; one particle of the SVGD batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectiveVector(pub Vec<f64>);

impl ObjectiveVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                what: "objective value".into(),
                index,
            });
        }
        Ok(ObjectiveVector(values))
    }
}

impl Deref for ObjectiveVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for ObjectiveVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ObjectiveVector {
    fn from(v: Vec<f64>) -> Self {
        ObjectiveVector(v)
    }
}

/// Dense row-major `m x n` matrix of `d f_j / d x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Jacobian {
    fn zeros(rows: usize, cols: usize) -> Self {
        Jacobian {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.cols..(j + 1) * self.cols]
    }

    fn row_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.cols..(j + 1) * self.cols]
    }

    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.data[j * self.cols + i]
    }

    /// `J^T c`: pulls an objective-space cotangent back to decision space.
    pub fn transpose_mul(&self, cot: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (j, c) in cot.iter().enumerate().take(self.rows) {
            if *c == 0.0 {
                continue;
            }
            for (o, d) in out.iter_mut().zip(self.row(j)) {
                *o += c * d;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Zdt1,
    Zdt2,
    Re21,
    Re37,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 4] = [
        ProblemKind::Zdt1,
        ProblemKind::Zdt2,
        ProblemKind::Re21,
        ProblemKind::Re37,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Zdt1 => "zdt1",
            ProblemKind::Zdt2 => "zdt2",
            ProblemKind::Re21 => "re21",
            ProblemKind::Re37 => "re37",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ProblemKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown problem '{s}' (expected one of zdt1, zdt2, re21, re37)"
                ))
            })
    }
}

// RE21: four-bar truss. F = 10, sigma = 10, E = 2e5, L = 200.
const RE21_L: f64 = 200.0;
const RE21_FLE: f64 = 10.0 * 200.0 / 2.0e5;
// Pareto-front extremes: f1 is minimal at x = (1, sqrt2, sqrt2, 1), f2 at
// x = (3, 3, sqrt2, 3); each extreme fixes the other objective's nadir.
const RE21_IDEAL: [f64; 2] = [1_237.841_423_000_574_2, 0.002_761_423_749_153_967];
const RE21_NADIR: [f64; 2] = [2_886.369_560_423_601_3, 0.04];

// RE37: rocket injector. Ideal from per-objective minimisation over the box,
// nadir from the maxima of a dense non-dominated sample (590k points).
const RE37_IDEAL: [f64; 3] = [0.008_893_413_911_060_315, 0.00488, -0.4315];
const RE37_NADIR: [f64; 3] = [1.002, 1.0969, 1.0965];

/// A registered benchmark problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub n: usize,
    pub m: usize,
    pub bounds: DecisionBox,
    pub reference_point: Vec<f64>,
    pub ideal_hint: Option<Vec<f64>>,
}

impl ProblemSpec {
    /// The standard instance: ZDT with 30 variables, RE at their native size.
    pub fn new(kind: ProblemKind) -> Self {
        match kind {
            ProblemKind::Zdt1 | ProblemKind::Zdt2 => Self::zdt(kind, 30).unwrap(),
            ProblemKind::Re21 => {
                let s2 = std::f64::consts::SQRT_2;
                ProblemSpec {
                    kind,
                    n: 4,
                    m: 2,
                    bounds: DecisionBox::new(vec![1.0, s2, s2, 1.0], vec![3.0; 4]).unwrap(),
                    reference_point: vec![1.1; 2],
                    ideal_hint: Some(vec![0.0; 2]),
                }
            }
            ProblemKind::Re37 => ProblemSpec {
                kind,
                n: 4,
                m: 3,
                bounds: DecisionBox::unit(4),
                reference_point: vec![1.1; 3],
                ideal_hint: Some(vec![0.0; 3]),
            },
        }
    }

    /// ZDT instance with a custom number of decision variables.
    pub fn zdt(kind: ProblemKind, n: usize) -> Result<Self> {
        if !matches!(kind, ProblemKind::Zdt1 | ProblemKind::Zdt2) {
            return Err(Error::Config(format!("{kind} has a fixed dimension")));
        }
        if n < 2 {
            return Err(Error::Config(format!("ZDT needs n >= 2, got {n}")));
        }
        Ok(ProblemSpec {
            kind,
            n,
            m: 2,
            bounds: DecisionBox::unit(n),
            reference_point: vec![1.1; 2],
            ideal_hint: Some(vec![0.0; 2]),
        })
    }

    /// Registry lookup by name, e.g. `"zdt1"` or `"re37"`.
    pub fn by_name(name: &str) -> Result<Self> {
        Ok(Self::new(name.parse()?))
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    fn check_domain(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::shape("decision vector", self.n, x.len()));
        }
        if let Some(i) = (0..self.n)
            .find(|&i| !(x[i] >= self.bounds.lower[i] && x[i] <= self.bounds.upper[i]))
        {
            return Err(Error::Domain(format!(
                "{}: x[{i}] = {} outside [{}, {}]",
                self.name(),
                x[i],
                self.bounds.lower[i],
                self.bounds.upper[i]
            )));
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<ObjectiveVector> {
        self.check_domain(x)?;
        let f = match self.kind {
            ProblemKind::Zdt1 => {
                let g = zdt_g(x);
                let q = (x[0] / g).max(ZDT_SQRT_FLOOR);
                vec![x[0], g * (1.0 - q.sqrt())]
            }
            ProblemKind::Zdt2 => {
                let g = zdt_g(x);
                let q = x[0] / g;
                vec![x[0], g * (1.0 - q * q)]
            }
            ProblemKind::Re21 => normalise(&re21_raw(x), &RE21_IDEAL, &RE21_NADIR),
            ProblemKind::Re37 => normalise(&re37_raw(x), &RE37_IDEAL, &RE37_NADIR),
        };
        ObjectiveVector::new(f)
    }

    /// Objectives before normalisation (identical to `evaluate` for ZDT).
    pub fn evaluate_raw(&self, x: &[f64]) -> Result<ObjectiveVector> {
        self.check_domain(x)?;
        match self.kind {
            ProblemKind::Re21 => ObjectiveVector::new(re21_raw(x).to_vec()),
            ProblemKind::Re37 => ObjectiveVector::new(re37_raw(x).to_vec()),
            _ => self.evaluate(x),
        }
    }

    pub fn jacobian(&self, x: &[f64]) -> Result<Jacobian> {
        self.check_domain(x)?;
        let n = self.n;
        let mut jac = Jacobian::zeros(self.m, n);
        match self.kind {
            ProblemKind::Zdt1 => {
                let g = zdt_g(x);
                let dg = 9.0 / (n - 1) as f64;
                let sq = (x[0] / g).max(ZDT_SQRT_FLOOR).sqrt();
                jac.row_mut(0)[0] = 1.0;
                let row = jac.row_mut(1);
                row[0] = -0.5 / sq;
                for d in &mut row[1..] {
                    *d = dg * (1.0 - 0.5 * sq);
                }
            }
            ProblemKind::Zdt2 => {
                let g = zdt_g(x);
                let dg = 9.0 / (n - 1) as f64;
                let q = x[0] / g;
                jac.row_mut(0)[0] = 1.0;
                let row = jac.row_mut(1);
                row[0] = -2.0 * q;
                for d in &mut row[1..] {
                    *d = dg * (1.0 + q * q);
                }
            }
            ProblemKind::Re21 => {
                let raw = re21_raw_jacobian(x);
                fill_normalised(&mut jac, &raw, &RE21_IDEAL, &RE21_NADIR);
            }
            ProblemKind::Re37 => {
                let raw = re37_raw_jacobian(x);
                fill_normalised(&mut jac, &raw, &RE37_IDEAL, &RE37_NADIR);
            }
        }
        Ok(jac)
    }

    pub fn has_analytic_front(&self) -> bool {
        matches!(self.kind, ProblemKind::Zdt1 | ProblemKind::Zdt2)
    }

    fn front_f2(&self, f1: f64) -> f64 {
        match self.kind {
            ProblemKind::Zdt1 => 1.0 - f1.sqrt(),
            _ => 1.0 - f1 * f1,
        }
    }

    fn require_front(&self) -> Result<()> {
        if self.has_analytic_front() {
            Ok(())
        } else {
            Err(Error::Unsupported(format!(
                "{} has no analytic Pareto front",
                self.name()
            )))
        }
    }

    /// Front point at a given `f1` in `[0, 1]`.
    pub fn front_point(&self, f1: f64) -> Result<ObjectiveVector> {
        self.require_front()?;
        if !(0.0..=1.0).contains(&f1) {
            return Err(Error::Domain(format!("front parameter {f1} outside [0, 1]")));
        }
        ObjectiveVector::new(vec![f1, self.front_f2(f1)])
    }

    /// `count` front points evenly spaced in `f1`.
    pub fn front_samples(&self, count: usize) -> Result<Vec<ObjectiveVector>> {
        self.require_front()?;
        if count < 2 {
            return Err(Error::Config("need at least 2 front samples".into()));
        }
        (0..count)
            .map(|i| self.front_point(i as f64 / (count - 1) as f64))
            .collect()
    }

    /// The front point each ray should map to when the learner minimises
    /// `scal`: the exact minimiser of the scalarisation over the front. For
    /// TCH that is the point balancing `r_j (f_j - z_j)`.
    pub fn ray_matched_front(
        &self,
        rays: &[PreferenceRay],
        scal: &ScalarizationSpec,
        ideal: &[f64],
    ) -> Result<Vec<ObjectiveVector>> {
        self.require_front()?;
        if ideal.len() != 2 {
            return Err(Error::shape("ideal point", 2, ideal.len()));
        }
        let z = IdealPoint::fixed(ideal.to_vec());
        rays.iter()
            .map(|ray| {
                if ray.dim() != 2 {
                    return Err(Error::shape("ray length", 2, ray.dim()));
                }
                let (r1, r2) = (ray.weights()[0], ray.weights()[1]);
                let f1 = match scal.kind {
                    ScalarizationKind::Ls => self.linear_optimum(r1, r2),
                    ScalarizationKind::Tch => self.balance_point(r1, r2, ideal),
                    ScalarizationKind::Stch => {
                        let along = |t: f64| scal.value(ray, &[t, self.front_f2(t)], &z);
                        minimise_on_unit(along)?
                    }
                };
                self.front_point(f1)
            })
            .collect()
    }

    fn linear_optimum(&self, r1: f64, r2: f64) -> f64 {
        match self.kind {
            // d/df1 [r1 f1 + r2 (1 - sqrt f1)] = 0  =>  f1 = (r2 / 2 r1)^2
            ProblemKind::Zdt1 => (r2 / (2.0 * r1)).powi(2).min(1.0),
            // concave front: the weighted sum is minimised at an endpoint;
            // ties go to f1 = 0.
            _ => {
                if r1 < r2 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Solves `r1 (f1 - z1) = r2 (f2(f1) - z2)` on the front by bisection;
    /// clamps to an endpoint when no crossing exists.
    fn balance_point(&self, r1: f64, r2: f64, z: &[f64]) -> f64 {
        let gap = |t: f64| r1 * (t - z[0]) - r2 * (self.front_f2(t) - z[1]);
        if gap(0.0) >= 0.0 {
            return 0.0;
        }
        if gap(1.0) <= 0.0 {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if gap(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Global minimiser of `h` on `[0, 1]`: dense scan, then golden-section
/// refinement around the best grid point.
fn minimise_on_unit<H: Fn(f64) -> Result<f64>>(h: H) -> Result<f64> {
    const GRID: usize = 4000;
    let mut best = (0usize, f64::INFINITY);
    for i in 0..=GRID {
        let v = h(i as f64 / GRID as f64)?;
        if v < best.1 {
            best = (i, v);
        }
    }
    let mut lo = best.0.saturating_sub(1) as f64 / GRID as f64;
    let mut hi = (best.0 + 1).min(GRID) as f64 / GRID as f64;
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - phi * (hi - lo);
    let mut b = lo + phi * (hi - lo);
    let (mut ha, mut hb) = (h(a)?, h(b)?);
    for _ in 0..100 {
        if ha <= hb {
            hi = b;
            b = a;
            hb = ha;
            a = hi - phi * (hi - lo);
            ha = h(a)?;
        } else {
            lo = a;
            a = b;
            ha = hb;
            b = lo + phi * (hi - lo);
            hb = h(b)?;
        }
    }
    let t = 0.5 * (lo + hi);
    // the endpoints are not probed by the golden section itself
    let mut cands = [(t, h(t)?), (0.0, h(0.0)?), (1.0, h(1.0)?)];
    cands.sort_by(|x, y| x.1.total_cmp(&y.1));
    Ok(cands[0].0)
}

fn zdt_g(x: &[f64]) -> f64 {
    let n = x.len();
    1.0 + 9.0 * x[1..].iter().sum::<f64>() / (n - 1) as f64
}

fn normalise(raw: &[f64], ideal: &[f64], nadir: &[f64]) -> Vec<f64> {
    raw.iter()
        .zip(ideal.iter().zip(nadir))
        .map(|(f, (lo, hi))| (f - lo) / (hi - lo))
        .collect()
}

fn fill_normalised(jac: &mut Jacobian, raw: &[Vec<f64>], ideal: &[f64], nadir: &[f64]) {
    for (j, row) in raw.iter().enumerate() {
        let scale = 1.0 / (nadir[j] - ideal[j]);
        for (d, r) in jac.row_mut(j).iter_mut().zip(row) {
            *d = r * scale;
        }
    }
}

fn re21_raw(x: &[f64]) -> [f64; 2] {
    let s2 = std::f64::consts::SQRT_2;
    let f1 = RE21_L * (2.0 * x[0] + s2 * x[1] + x[2].sqrt() + x[3]);
    let f2 = RE21_FLE * (2.0 / x[0] + 2.0 * s2 / x[1] - 2.0 * s2 / x[2] + 2.0 / x[3]);
    [f1, f2]
}

fn re21_raw_jacobian(x: &[f64]) -> Vec<Vec<f64>> {
    let s2 = std::f64::consts::SQRT_2;
    vec![
        vec![
            2.0 * RE21_L,
            s2 * RE21_L,
            0.5 * RE21_L / x[2].sqrt(),
            RE21_L,
        ],
        vec![
            -2.0 * RE21_FLE / (x[0] * x[0]),
            -2.0 * s2 * RE21_FLE / (x[1] * x[1]),
            2.0 * s2 * RE21_FLE / (x[2] * x[2]),
            -2.0 * RE21_FLE / (x[3] * x[3]),
        ],
    ]
}

fn re37_raw(x: &[f64]) -> [f64; 3] {
    let (a, h, o, p) = (x[0], x[1], x[2], x[3]);
    let f1 = 0.692 + 0.477 * a - 0.687 * h - 0.080 * o - 0.0650 * p - 0.167 * a * a
        - 0.0129 * h * a
        + 0.0796 * h * h
        - 0.0634 * o * a
        - 0.0257 * o * h
        + 0.0877 * o * o
        - 0.0521 * p * a
        + 0.00156 * p * h
        + 0.00198 * p * o
        + 0.0184 * p * p;
    let f2 = 0.153 - 0.322 * a + 0.396 * h + 0.424 * o + 0.0226 * p + 0.175 * a * a
        + 0.0185 * h * a
        - 0.0701 * h * h
        - 0.251 * o * a
        + 0.179 * o * h
        + 0.0150 * o * o
        + 0.0134 * p * a
        + 0.0296 * p * h
        + 0.0752 * p * o
        + 0.0192 * p * p;
    let f3 = 0.370 - 0.205 * a + 0.0307 * h + 0.108 * o + 1.019 * p - 0.135 * a * a
        + 0.0141 * h * a
        + 0.0998 * h * h
        + 0.208 * o * a
        - 0.0301 * o * h
        - 0.226 * o * o
        + 0.353 * p * a
        - 0.0497 * p * o
        - 0.423 * p * p
        + 0.202 * h * a * a
        - 0.281 * o * a * a
        - 0.342 * h * h * a
        - 0.245 * h * h * o
        + 0.281 * o * o * h
        - 0.184 * p * p * a
        - 0.281 * h * a * o;
    [f1, f2, f3]
}

fn re37_raw_jacobian(x: &[f64]) -> Vec<Vec<f64>> {
    let (a, h, o, p) = (x[0], x[1], x[2], x[3]);
    vec![
        vec![
            0.477 - 0.334 * a - 0.0129 * h - 0.0634 * o - 0.0521 * p,
            -0.687 - 0.0129 * a + 0.1592 * h - 0.0257 * o + 0.00156 * p,
            -0.080 - 0.0634 * a - 0.0257 * h + 0.1754 * o + 0.00198 * p,
            -0.0650 - 0.0521 * a + 0.00156 * h + 0.00198 * o + 0.0368 * p,
        ],
        vec![
            -0.322 + 0.35 * a + 0.0185 * h - 0.251 * o + 0.0134 * p,
            0.396 + 0.0185 * a - 0.1402 * h + 0.179 * o + 0.0296 * p,
            0.424 - 0.251 * a + 0.179 * h + 0.030 * o + 0.0752 * p,
            0.0226 + 0.0134 * a + 0.0296 * h + 0.0752 * o + 0.0384 * p,
        ],
        vec![
            -0.205 - 0.27 * a + 0.0141 * h + 0.208 * o + 0.353 * p + 0.404 * h * a
                - 0.562 * o * a
                - 0.342 * h * h
                - 0.184 * p * p
                - 0.281 * h * o,
            0.0307 + 0.0141 * a + 0.1996 * h - 0.0301 * o + 0.202 * a * a - 0.684 * h * a
                - 0.49 * h * o
                + 0.281 * o * o
                - 0.281 * a * o,
            0.108 + 0.208 * a - 0.0301 * h - 0.452 * o - 0.0497 * p - 0.281 * a * a
                - 0.245 * h * h
                + 0.562 * o * h
                - 0.281 * h * a,
            1.019 + 0.353 * a - 0.0497 * o - 0.846 * p - 0.368 * p * a,
        ],
    ]
}
