use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor on the median-heuristic squared bandwidth.
pub const MIN_BANDWIDTH_SQ: f64 = 1e-8;

/// Gaussian kernel bandwidth policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSpec {
    Fixed(f64),
    MedianHeuristic,
    /// `k = I`: particles do not interact. Used by the plain PSL baseline.
    Identity,
}

impl KernelSpec {
    pub fn fixed(h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Config(format!("kernel bandwidth must be > 0, got {h}")));
        }
        Ok(KernelSpec::Fixed(h))
    }
}

/// Symmetric kernel matrix over a particle batch plus the bandwidth used.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub n: usize,
    pub values: Vec<f64>,
    /// `NaN`-free bandwidth; `0` for the identity kernel.
    pub h: f64,
    pub identity: bool,
    /// Set when the median heuristic had no spread to work with.
    pub fell_back: bool,
}

impl KernelMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Symmetric, unit diagonal, entries in `(0, 1]` (identity kernels excepted).
    pub fn satisfies_invariants(&self) -> bool {
        (0..self.n).all(|i| {
            self.get(i, i) == 1.0
                && (0..self.n).all(|j| {
                    let v = self.get(i, j);
                    v == self.get(j, i) && v <= 1.0 && (self.identity || v > 0.0)
                })
        })
    }

    /// Mean of the off-diagonal entries.
    pub fn mean_off_diagonal(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let total: f64 = (0..self.n)
            .flat_map(|i| (0..self.n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .sum();
        total / (self.n * (self.n - 1)) as f64
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// `k(F_i, F_j) = exp(-|F_i - F_j|^2 / (2 h^2))`.
///
/// The median heuristic uses `h^2 = median(d^2) / (2 ln(n + 1))` over the
/// pairwise squared distances, floored at [`MIN_BANDWIDTH_SQ`]; a batch of
/// identical particles falls back to `h = 1`.
pub fn kernel_matrix<P: AsRef<[f64]>>(particles: &[P], spec: KernelSpec) -> Result<KernelMatrix> {
    let n = particles.len();
    if n == 0 {
        return Err(Error::Contract("kernel matrix of an empty batch".into()));
    }
    if spec == KernelSpec::Identity {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
        }
        return Ok(KernelMatrix {
            n,
            values,
            h: 0.0,
            identity: true,
            fell_back: false,
        });
    }

    let mut d2 = vec![0.0; n * n];
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d = squared_distance(particles[i].as_ref(), particles[j].as_ref());
            d2[i * n + j] = d;
            d2[j * n + i] = d;
            pairs.push(d);
        }
    }

    let mut fell_back = false;
    let h = match spec {
        KernelSpec::Fixed(h) => h,
        KernelSpec::MedianHeuristic => {
            if pairs.iter().all(|d| *d == 0.0) {
                if n > 1 {
                    warn!("kernel: all {n} particles coincide; falling back to h = 1");
                    fell_back = true;
                }
                1.0
            } else {
                let h2 = (median(&mut pairs) / (2.0 * ((n + 1) as f64).ln())).max(MIN_BANDWIDTH_SQ);
                h2.sqrt()
            }
        }
        KernelSpec::Identity => unreachable!(),
    };

    let inv = 1.0 / (2.0 * h * h);
    let mut values = vec![1.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let k = (-d2[i * n + j] * inv).exp().max(f64::MIN_POSITIVE);
            values[i * n + j] = k;
            values[j * n + i] = k;
        }
    }
    Ok(KernelMatrix {
        n,
        values,
        h,
        identity: false,
        fell_back,
    })
}
