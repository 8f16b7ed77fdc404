//! A small reverse-mode differentiable MLP used as the preference-conditioned
//! hypernetwork, plus the preference-ray types it consumes.
//!
//! Parameters live in one flat vector. Layer `l` stores its `out x in` weight
//! matrix row-major followed by its `out` biases, so the total length is
//! `sum((in + 1) * out)` over the layers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest weight any ray component may carry. Tchebyshev weights of exactly
/// zero would drop an objective, so rays are mapped into the shrunken simplex
/// `floor + (1 - m * floor) * r`.
pub const RAY_FLOOR: f64 = 1e-3;

const SUM_TOL: f64 = 1e-9;

/// A strictly positive point on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceRay(Vec<f64>);

impl PreferenceRay {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::Config(format!(
                "preference ray needs at least 2 components, got {}",
                weights.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Domain(format!(
                "ray component {i} is {} (must be finite and > 0)",
                weights[i]
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::Domain(format!("ray sums to {sum}, expected 1")));
        }
        Ok(PreferenceRay(weights))
    }

    /// Maps an arbitrary nonnegative weight vector onto the floored simplex.
    pub fn from_simplex_point(raw: &[f64]) -> Result<Self> {
        let m = raw.len();
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) || raw.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::Domain(format!("cannot normalise weights {raw:?}")));
        }
        let scale = 1.0 - m as f64 * RAY_FLOOR;
        let mut w: Vec<f64> = raw.iter().map(|r| RAY_FLOOR + scale * r / total).collect();
        // Push rounding residue into the largest component.
        let resid = 1.0 - w.iter().sum::<f64>();
        let imax = argmax(&w);
        w[imax] += resid;
        PreferenceRay::new(w)
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Per-dimension closed interval bounds for decision vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DecisionBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::shape("box bounds", lower.len(), upper.len()));
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] < upper[i])) {
            return Err(Error::Config(format!(
                "box dimension {i} has empty interval [{}, {}]",
                lower[i], upper[i]
            )));
        }
        Ok(DecisionBox { lower, upper })
    }

    pub fn unit(n: usize) -> Self {
        DecisionBox {
            lower: vec![0.0; n],
            upper: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }
}

/// A point in decision space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionVector {
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::Config(format!("unknown activation '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputSquash {
    /// `lo + (hi - lo) * sigmoid(z)` per output dimension.
    SigmoidBox,
    None,
}

impl OutputSquash {
    pub fn name(self) -> &'static str {
        match self {
            OutputSquash::SigmoidBox => "sigmoid_box",
            OutputSquash::None => "none",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "sigmoid_box" => Ok(OutputSquash::SigmoidBox),
            "none" => Ok(OutputSquash::None),
            other => Err(Error::Config(format!("unknown output squash '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Optimizer {
    /// `params -= step * grad`.
    Plain,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// The hypernetwork: architecture, flat parameters and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypernet {
    layer_sizes: Vec<usize>,
    activation: Activation,
    squash: OutputSquash,
    seed: u64,
    optimizer: Optimizer,
    params: Vec<f64>,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    steps: u64,
    // Bumped on every parameter change so stale tapes are rejected.
    version: u64,
}

/// Number of parameters implied by a layer-size list.
pub fn param_count(layer_sizes: &[usize]) -> usize {
    layer_sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
}

fn check_layer_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::Config(format!(
            "a network needs at least an input and an output layer, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::Config(format!(
            "layer sizes must be positive, got {layer_sizes:?}"
        )));
    }
    Ok(())
}

impl Hypernet {
    /// Fan-based uniform initialisation: weights of each layer are drawn from
    /// `U[-s, s]` with `s = sqrt(6 / (fan_in + fan_out))`; biases start at 0.
    pub fn init(
        layer_sizes: &[usize],
        activation: Activation,
        squash: OutputSquash,
        optimizer: Optimizer,
        seed: u64,
    ) -> Result<Self> {
        check_layer_sizes(layer_sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(param_count(layer_sizes));
        for w in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for _ in 0..fan_in * fan_out {
                params.push(rng.random_range(-s..=s));
            }
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Self::from_parts(layer_sizes, activation, squash, optimizer, seed, params)
    }

    /// Assembles a network from explicit parameters with fresh optimizer state.
    pub fn from_parts(
        layer_sizes: &[usize],
        activation: Activation,
        squash: OutputSquash,
        optimizer: Optimizer,
        seed: u64,
        params: Vec<f64>,
    ) -> Result<Self> {
        check_layer_sizes(layer_sizes)?;
        let expected = param_count(layer_sizes);
        if params.len() != expected {
            return Err(Error::shape("parameter vector", expected, params.len()));
        }
        if let Some(i) = params.iter().position(|p| !p.is_finite()) {
            return Err(Error::Numeric {
                what: "initial parameter".into(),
                index: i,
            });
        }
        let len = params.len();
        Ok(Hypernet {
            layer_sizes: layer_sizes.to_vec(),
            activation,
            squash,
            seed,
            optimizer,
            params,
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
            steps: 0,
            version: 0,
        })
    }

    /// Restores optimizer moments and step counter (checkpoint loading).
    pub fn with_optimizer_state(
        mut self,
        first_moment: Vec<f64>,
        second_moment: Vec<f64>,
        steps: u64,
    ) -> Result<Self> {
        let n = self.params.len();
        if first_moment.len() != n {
            return Err(Error::shape("first moment", n, first_moment.len()));
        }
        if second_moment.len() != n {
            return Err(Error::shape("second moment", n, second_moment.len()));
        }
        self.first_moment = first_moment;
        self.second_moment = second_moment;
        self.steps = steps;
        Ok(self)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }
    pub fn activation(&self) -> Activation {
        self.activation
    }
    pub fn squash(&self) -> OutputSquash {
        self.squash
    }
    pub fn optimizer(&self) -> Optimizer {
        self.optimizer
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn params(&self) -> &[f64] {
        &self.params
    }
    pub fn first_moment(&self) -> &[f64] {
        &self.first_moment
    }
    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }
    pub fn steps(&self) -> u64 {
        self.steps
    }
    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }
    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }
    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Evaluates `x_r = h(r; params)` and records the tape in `ws`.
    pub fn forward(
        &self,
        ray: &PreferenceRay,
        bounds: &DecisionBox,
        ws: &mut Workspace,
    ) -> Result<DecisionVector> {
        if ray.dim() != self.input_dim() {
            return Err(Error::shape("ray length", self.input_dim(), ray.dim()));
        }
        if bounds.dim() != self.output_dim() {
            return Err(Error::shape("decision box", self.output_dim(), bounds.dim()));
        }
        let layers = self.layer_sizes.len() - 1;
        ws.pre.clear();
        ws.post.clear();
        ws.post.push(ray.weights().to_vec());

        let mut offset = 0;
        for l in 0..layers {
            let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let weights = &self.params[offset..offset + fan_in * fan_out];
            let bias = &self.params[offset + fan_in * fan_out..offset + (fan_in + 1) * fan_out];
            offset += (fan_in + 1) * fan_out;

            let input = &ws.post[l];
            let z: Vec<f64> = (0..fan_out)
                .map(|o| {
                    let row = &weights[o * fan_in..(o + 1) * fan_in];
                    bias[o] + row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>()
                })
                .collect();
            let a = if l + 1 < layers {
                z.iter().map(|&v| self.activation.apply(v)).collect()
            } else {
                z.clone()
            };
            ws.pre.push(z);
            ws.post.push(a);
        }

        let logits = ws.post.last().unwrap();
        let values = match self.squash {
            OutputSquash::None => logits.clone(),
            OutputSquash::SigmoidBox => logits
                .iter()
                .enumerate()
                .map(|(i, &z)| {
                    let (lo, hi) = (bounds.lower[i], bounds.upper[i]);
                    (lo + (hi - lo) * sigmoid(z)).clamp(lo, hi)
                })
                .collect(),
        };
        ws.widths = bounds
            .upper
            .iter()
            .zip(&bounds.lower)
            .map(|(hi, lo)| hi - lo)
            .collect();
        ws.version = Some(self.version);
        Ok(DecisionVector { values })
    }

    /// Gradient of `<cotangent, x_r>` with respect to the parameters, using the
    /// tape of the most recent `forward` into `ws`.
    pub fn backward(&self, ws: &Workspace, cotangent: &[f64]) -> Result<Vec<f64>> {
        let mut grad = vec![0.0; self.params.len()];
        self.backward_accumulate(ws, cotangent, &mut grad)?;
        Ok(grad)
    }

    /// Like [`Hypernet::backward`] but adds into an existing buffer.
    pub fn backward_accumulate(
        &self,
        ws: &Workspace,
        cotangent: &[f64],
        grad: &mut [f64],
    ) -> Result<()> {
        match ws.version {
            None => {
                return Err(Error::State(
                    "backward called before any forward pass on this workspace".into(),
                ))
            }
            Some(v) if v != self.version => {
                return Err(Error::State(
                    "workspace tape is stale: parameters changed since forward".into(),
                ))
            }
            _ => {}
        }
        if cotangent.len() != self.output_dim() {
            return Err(Error::shape("cotangent", self.output_dim(), cotangent.len()));
        }
        if grad.len() != self.params.len() {
            return Err(Error::shape("gradient buffer", self.params.len(), grad.len()));
        }
        let layers = self.layer_sizes.len() - 1;

        let logits = &ws.pre[layers - 1];
        let mut delta: Vec<f64> = match self.squash {
            OutputSquash::None => cotangent.to_vec(),
            OutputSquash::SigmoidBox => cotangent
                .iter()
                .zip(logits)
                .zip(&ws.widths)
                .map(|((c, &z), w)| {
                    let s = sigmoid(z);
                    c * w * s * (1.0 - s)
                })
                .collect(),
        };

        let mut offset = self.params.len();
        for l in (0..layers).rev() {
            let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            offset -= (fan_in + 1) * fan_out;
            let input = &ws.post[l];
            {
                let (gw, gb) = grad[offset..offset + (fan_in + 1) * fan_out].split_at_mut(fan_in * fan_out);
                for o in 0..fan_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    for (g, a) in gw[o * fan_in..(o + 1) * fan_in].iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
            }
            if l == 0 {
                break;
            }
            let weights = &self.params[offset..offset + fan_in * fan_out];
            let mut upstream = vec![0.0; fan_in];
            for o in 0..fan_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                for (u, w) in upstream.iter_mut().zip(&weights[o * fan_in..(o + 1) * fan_in]) {
                    *u += d * w;
                }
            }
            let z = &ws.pre[l - 1];
            let a = &ws.post[l];
            delta = upstream
                .iter()
                .enumerate()
                .map(|(i, u)| u * self.activation.derivative(z[i], a[i]))
                .collect();
        }
        Ok(())
    }

    /// One optimizer step against `grad`.
    pub fn apply_step(&mut self, grad: &[f64], step_size: f64) -> Result<()> {
        if grad.len() != self.params.len() {
            return Err(Error::shape("gradient", self.params.len(), grad.len()));
        }
        if let Some(index) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::Numeric {
                what: "gradient entry".into(),
                index,
            });
        }
        self.steps += 1;
        match self.optimizer {
            Optimizer::Plain => {
                for (p, g) in self.params.iter_mut().zip(grad) {
                    *p -= step_size * g;
                }
            }
            Optimizer::Adam { beta1, beta2, eps } => {
                let t = self.steps as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for (i, &g) in grad.iter().enumerate() {
                    let m = beta1 * self.first_moment[i] + (1.0 - beta1) * g;
                    let v = beta2 * self.second_moment[i] + (1.0 - beta2) * g * g;
                    self.first_moment[i] = m;
                    self.second_moment[i] = v;
                    self.params[i] -= step_size * (m / c1) / ((v / c2).sqrt() + eps);
                }
            }
        }
        if let Some(index) = self.params.iter().position(|p| !p.is_finite()) {
            return Err(Error::Numeric {
                what: "parameter after update".into(),
                index,
            });
        }
        self.version += 1;
        Ok(())
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Forward-pass tape. One workspace per in-flight ray.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    widths: Vec<f64>,
    version: Option<u64>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Draws `count` rays from a symmetric Dirichlet, mapped onto the floored simplex.
pub fn sample_rays<R: Rng + ?Sized>(
    m: usize,
    count: usize,
    concentration: f64,
    rng: &mut R,
) -> Result<Vec<PreferenceRay>> {
    if m < 2 {
        return Err(Error::Config(format!("need at least 2 objectives, got {m}")));
    }
    if count == 0 {
        return Err(Error::Config("ray count must be at least 1".into()));
    }
    let gamma = Gamma::new(concentration, 1.0)
        .map_err(|e| Error::Config(format!("dirichlet concentration {concentration}: {e}")))?;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let draw: Vec<f64> = (0..m).map(|_| gamma.sample(rng)).collect();
        // All-zero draws only happen when every gamma variate underflows.
        if draw.iter().sum::<f64>() > 0.0 {
            out.push(PreferenceRay::from_simplex_point(&draw)?);
        }
    }
    Ok(out)
}

/// Seeded convenience wrapper around [`sample_rays`].
pub fn sample_rays_seeded(
    m: usize,
    count: usize,
    concentration: f64,
    seed: u64,
) -> Result<Vec<PreferenceRay>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_rays(m, count, concentration, &mut rng)
}

/// Evenly spaced evaluation rays.
///
/// For two objectives this returns exactly `count` rays, from `(0.999, 0.001)`
/// to `(0.001, 0.999)`. For `m >= 3` it returns the largest simplex lattice
/// (Das-Dennis) whose size does not exceed `count`, with at least one division.
pub fn simplex_grid(m: usize, count: usize) -> Result<Vec<PreferenceRay>> {
    if m < 2 {
        return Err(Error::Config(format!("need at least 2 objectives, got {m}")));
    }
    if count == 0 {
        return Err(Error::Config("ray count must be at least 1".into()));
    }
    if m == 2 {
        if count == 1 {
            return Ok(vec![PreferenceRay::new(vec![0.5, 0.5])?]);
        }
        return (0..count)
            .map(|i| {
                let t = i as f64 / (count - 1) as f64;
                PreferenceRay::from_simplex_point(&[1.0 - t, t])
            })
            .collect();
    }
    let mut divisions = 1;
    while lattice_size(m, divisions + 1) <= count {
        divisions += 1;
    }
    let mut out = Vec::new();
    let mut current = vec![0usize; m];
    lattice_points(m, 0, divisions, &mut current, &mut out);
    out.iter()
        .map(|p| {
            let raw: Vec<f64> = p.iter().map(|&k| k as f64 / divisions as f64).collect();
            PreferenceRay::from_simplex_point(&raw)
        })
        .collect()
}

fn lattice_size(m: usize, divisions: usize) -> usize {
    // C(divisions + m - 1, m - 1)
    let mut c: usize = 1;
    for k in 1..m {
        c = c * (divisions + k) / k;
    }
    c
}

fn lattice_points(
    m: usize,
    dim: usize,
    left: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if dim == m - 1 {
        current[dim] = left;
        out.push(current.clone());
        return;
    }
    for k in (0..=left).rev() {
        current[dim] = k;
        lattice_points(m, dim + 1, left - k, current, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(sizes: &[usize], act: Activation, squash: OutputSquash, seed: u64) -> Hypernet {
        Hypernet::init(sizes, act, squash, Optimizer::Plain, seed).unwrap()
    }

    #[test]
    fn param_count_matches_layout() {
        let n = net(&[2, 4, 3], Activation::Relu, OutputSquash::SigmoidBox, 3);
        assert_eq!(n.num_params(), 27);
        assert_eq!(param_count(&[2, 128, 128, 30]), 3 * 128 + 129 * 128 + 129 * 30);
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = net(&[2, 16, 5], Activation::Relu, OutputSquash::SigmoidBox, 7);
        let b = net(&[2, 16, 5], Activation::Relu, OutputSquash::SigmoidBox, 7);
        assert_eq!(a.params(), b.params());
        let c = net(&[2, 16, 5], Activation::Relu, OutputSquash::SigmoidBox, 8);
        assert_ne!(a.params(), c.params());
        let s = (6.0f64 / 18.0).sqrt();
        assert!(a.params()[..32].iter().all(|p| p.abs() <= s));
    }

    #[test]
    fn degenerate_layer_sizes_rejected() {
        for sizes in [&[2usize][..], &[][..], &[2, 0, 3][..]] {
            let err = Hypernet::init(sizes, Activation::Relu, OutputSquash::None, Optimizer::Plain, 0);
            assert!(matches!(err, Err(Error::Config(_))), "{sizes:?}");
        }
    }

    #[test]
    fn zero_params_squash_to_midpoint() {
        let sizes = [2, 5, 4];
        let n = Hypernet::from_parts(
            &sizes,
            Activation::Relu,
            OutputSquash::SigmoidBox,
            Optimizer::Plain,
            0,
            vec![0.0; param_count(&sizes)],
        )
        .unwrap();
        let mut ws = Workspace::new();
        let ray = PreferenceRay::new(vec![0.3, 0.7]).unwrap();
        let x = n.forward(&ray, &DecisionBox::unit(4), &mut ws).unwrap();
        assert_eq!(x.values, vec![0.5; 4]);
    }

    #[test]
    fn forward_is_pure_and_checks_shapes() {
        let n = net(&[2, 8, 3], Activation::Tanh, OutputSquash::SigmoidBox, 1);
        let ray = PreferenceRay::new(vec![0.4, 0.6]).unwrap();
        let b = DecisionBox::unit(3);
        let x1 = n.forward(&ray, &b, &mut Workspace::new()).unwrap();
        let x2 = n.forward(&ray, &b, &mut Workspace::new()).unwrap();
        assert_eq!(x1, x2);

        let ray3 = PreferenceRay::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!(matches!(
            n.forward(&ray3, &b, &mut Workspace::new()),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn backward_requires_fresh_forward() {
        let mut n = net(&[2, 4, 2], Activation::Relu, OutputSquash::SigmoidBox, 1);
        let ws = Workspace::new();
        assert!(matches!(n.backward(&ws, &[1.0, 0.0]), Err(Error::State(_))));

        let mut ws = Workspace::new();
        let ray = PreferenceRay::new(vec![0.5, 0.5]).unwrap();
        n.forward(&ray, &DecisionBox::unit(2), &mut ws).unwrap();
        let g = n.backward(&ws, &[0.0, 0.0]).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
        n.apply_step(&vec![0.1; n.num_params()], 0.01).unwrap();
        assert!(matches!(n.backward(&ws, &[1.0, 0.0]), Err(Error::State(_))));
    }

    #[test]
    fn backward_is_linear_in_cotangent() {
        let n = net(&[3, 7, 6, 4], Activation::Tanh, OutputSquash::SigmoidBox, 11);
        let mut ws = Workspace::new();
        let ray = PreferenceRay::new(vec![0.2, 0.5, 0.3]).unwrap();
        n.forward(&ray, &DecisionBox::unit(4), &mut ws).unwrap();
        let c1 = [0.3, -1.0, 2.0, 0.5];
        let c2 = [-0.7, 0.25, 1.0, -2.0];
        let c12: Vec<f64> = c1.iter().zip(&c2).map(|(a, b)| a + b).collect();
        let g1 = n.backward(&ws, &c1).unwrap();
        let g2 = n.backward(&ws, &c2).unwrap();
        let g12 = n.backward(&ws, &c12).unwrap();
        for i in 0..g1.len() {
            assert!((g12[i] - g1[i] - g2[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn plain_step_arithmetic() {
        let sizes = [1, 1];
        let mut n = Hypernet::from_parts(
            &sizes,
            Activation::Relu,
            OutputSquash::None,
            Optimizer::Plain,
            0,
            vec![1.0, 1.0],
        )
        .unwrap();
        n.apply_step(&[0.0, 0.0], 0.1).unwrap();
        assert_eq!(n.params(), &[1.0, 1.0]);
        n.apply_step(&[1.0, 2.0], 0.1).unwrap();
        assert!((n.params()[0] - 0.9).abs() < 1e-15);
        assert!((n.params()[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn nan_gradient_names_index() {
        let mut n = net(&[2, 3, 2], Activation::Relu, OutputSquash::None, 0);
        let mut g = vec![0.0; n.num_params()];
        g[4] = f64::NAN;
        g[6] = f64::INFINITY;
        assert_eq!(
            n.apply_step(&g, 0.1),
            Err(Error::Numeric {
                what: "gradient entry".into(),
                index: 4
            })
        );
    }

    #[test]
    fn adam_moves_each_param_by_at_most_step() {
        let mut n = Hypernet::init(&[2, 3, 2], Activation::Relu, OutputSquash::None, Optimizer::default(), 0).unwrap();
        let before = n.params().to_vec();
        let g: Vec<f64> = (0..n.num_params()).map(|i| (i as f64 - 5.0) * 10.0).collect();
        n.apply_step(&g, 0.01).unwrap();
        for (a, b) in before.iter().zip(n.params()) {
            assert!((a - b).abs() <= 0.01 + 1e-12);
        }
        assert_eq!(n.steps(), 1);
        assert!(n.first_moment().iter().any(|m| *m != 0.0));
    }

    #[test]
    fn grid_endpoints_are_clamped() {
        let rays = simplex_grid(2, 3).unwrap();
        assert_eq!(rays.len(), 3);
        assert!((rays[0].weights()[0] - 0.999).abs() < 1e-12);
        assert!((rays[0].weights()[1] - 0.001).abs() < 1e-12);
        assert!((rays[1].weights()[0] - 0.5).abs() < 1e-12);
        assert!((rays[2].weights()[1] - 0.999).abs() < 1e-12);
    }

    #[test]
    fn three_objective_grid_is_a_lattice() {
        // C(5 + 2, 2) = 21 <= 25 < C(6 + 2, 2) = 28
        let rays = simplex_grid(3, 25).unwrap();
        assert_eq!(rays.len(), 21);
        for r in &rays {
            assert!((r.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(r.weights().iter().all(|w| *w >= RAY_FLOOR - 1e-15));
        }
        assert_eq!(simplex_grid(3, 2).unwrap().len(), 3);
    }

    #[test]
    fn sampled_rays_are_valid_and_reproducible() {
        let a = sample_rays_seeded(3, 50, 1.0, 42).unwrap();
        let b = sample_rays_seeded(3, 50, 1.0, 42).unwrap();
        assert_eq!(a, b);
        for r in &a {
            assert!((r.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(r.weights().iter().all(|w| *w > 0.0));
        }
        // Tiny concentrations push most mass to a single vertex; the floor still holds.
        for r in sample_rays_seeded(2, 100, 0.01, 3).unwrap() {
            assert!(r.weights().iter().all(|w| *w >= RAY_FLOOR - 1e-15));
        }
        assert!(matches!(sample_rays_seeded(1, 3, 1.0, 0), Err(Error::Config(_))));
    }

    #[test]
    fn ray_validation() {
        assert!(PreferenceRay::new(vec![0.5, 0.5]).is_ok());
        assert!(PreferenceRay::new(vec![1.0, 0.0]).is_err());
        assert!(PreferenceRay::new(vec![0.6, 0.6]).is_err());
        assert!(PreferenceRay::new(vec![1.0]).is_err());
    }

    #[test]
    fn sigmoid_box_respects_bounds() {
        let b = DecisionBox::new(vec![2f64.sqrt(), 1.0], vec![3.0, 3.0]).unwrap();
        let ray = PreferenceRay::new(vec![0.5, 0.5]).unwrap();
        for bias in [-800.0, -40.0, 0.0, 40.0, 800.0] {
            let n = Hypernet::from_parts(
                &[2, 2],
                Activation::Relu,
                OutputSquash::SigmoidBox,
                Optimizer::Plain,
                0,
                vec![0.0, 0.0, 0.0, 0.0, bias, -bias],
            )
            .unwrap();
            let x = n.forward(&ray, &b, &mut Workspace::new()).unwrap();
            assert!(b.contains(&x.values), "{x:?}");
        }
    }
}
