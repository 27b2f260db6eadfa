//! Fully connected networks with tanh hidden layers and a linear output,
//! trained on mean squared error with Adam.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};

/// Hidden layer widths used for the local coarse-operator surrogates.
pub const HIDDEN_LAYERS: [usize; 3] = [16, 16, 16];

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn affine(&self, x: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out
            .iter_mut()
            .zip(self.weights.chunks_exact(self.inputs).zip(&self.bias))
        {
            *o = b + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new(dims: &[usize], seed: u64) -> Self {
        assert!(dims.len() >= 2 && dims.iter().all(|&d| d > 0), "invalid layer dimensions");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .map(|w| {
                let mut layer = Layer::zeros(w[0], w[1]);
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                for x in &mut layer.weights {
                    *x = rng.random_range(-limit..limit);
                }
                layer
            })
            .collect();
        Self { layers }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        assert!(dims.len() >= 2, "need at least input and output widths");
        Self {
            layers: dims.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        }
    }

    /// `[2 n, 16, 16, 16, n]` for `n` local coarse dofs.
    pub fn surrogate_dims(n: usize) -> Vec<usize> {
        let mut dims = vec![2 * n];
        dims.extend(HIDDEN_LAYERS);
        dims.push(n);
        dims
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig("network needs at least one layer".into()));
        }
        for w in layers.windows(2) {
            check_len("layer chain", w[0].outputs, w[1].inputs)?;
        }
        for l in &layers {
            check_len("layer weights", l.inputs * l.outputs, l.weights.len())?;
            check_len("layer bias", l.outputs, l.bias.len())?;
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers[0].inputs];
        d.extend(self.layers.iter().map(|l| l.outputs));
        d
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Parameters in layer order, weights before biases.
    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|p| p.is_finite())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("network input", self.input_dim(), x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network input"));
        }
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.outputs];
            layer.affine(&cur, &mut next);
            if i < last {
                next.iter_mut().for_each(|v| *v = v.tanh());
            }
            cur = next;
        }
        cur
    }

    /// Mean squared error over every row and output coordinate.
    pub fn mse(&self, data: &Dataset, rows: &[usize]) -> f64 {
        let n_out = self.output_dim() as f64;
        let total: f64 = rows
            .iter()
            .map(|&r| {
                let y = self.forward_unchecked(&data.inputs[r]);
                y.iter()
                    .zip(&data.targets[r])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .sum();
        total / (rows.len() as f64 * n_out)
    }

    /// Gradient of [`Mlp::mse`] over the given rows.
    pub fn gradient(&self, data: &Dataset, rows: &[usize]) -> Result<Gradient> {
        if rows.is_empty() {
            return Err(Error::EmptyData);
        }
        let mut grad = Gradient::zeros_like(self);
        let mut ws = Workspace::new(self);
        self.accumulate_gradient(data, rows, &mut ws, &mut grad);
        Ok(grad)
    }

    fn accumulate_gradient(&self, data: &Dataset, rows: &[usize], ws: &mut Workspace, grad: &mut Gradient) {
        grad.clear();
        let last = self.layers.len() - 1;
        let scale = 2.0 / (rows.len() as f64 * self.output_dim() as f64);
        for &r in rows {
            ws.acts[0].copy_from_slice(&data.inputs[r]);
            for (i, layer) in self.layers.iter().enumerate() {
                let (before, after) = ws.acts.split_at_mut(i + 1);
                layer.affine(&before[i], &mut after[0]);
                if i < last {
                    after[0].iter_mut().for_each(|v| *v = v.tanh());
                }
            }
            for ((d, y), t) in ws.deltas[last].iter_mut().zip(&ws.acts[last + 1]).zip(&data.targets[r]) {
                *d = scale * (y - t);
            }
            for i in (0..=last).rev() {
                let layer = &self.layers[i];
                let g = &mut grad.layers[i];
                let a_prev = &ws.acts[i];
                for (o, &d) in ws.deltas[i].iter().enumerate() {
                    g.bias[o] += d;
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gw, a) in row.iter_mut().zip(a_prev) {
                        *gw += d * a;
                    }
                }
                if i > 0 {
                    let (lo, hi) = ws.deltas.split_at_mut(i);
                    let prev = &mut lo[i - 1];
                    prev.iter_mut().for_each(|v| *v = 0.0);
                    for (o, &d) in hi[0].iter().enumerate() {
                        let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                        for (p, w) in prev.iter_mut().zip(row) {
                            *p += w * d;
                        }
                    }
                    for (p, a) in prev.iter_mut().zip(a_prev) {
                        *p *= 1.0 - a * a;
                    }
                }
            }
        }
    }
}

struct Workspace {
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl Workspace {
    fn new(net: &Mlp) -> Self {
        let dims = net.dims();
        Self {
            acts: dims.iter().map(|&d| vec![0.0; d]).collect(),
            deltas: dims[1..].iter().map(|&d| vec![0.0; d]).collect(),
        }
    }
}

/// Parameter-shaped gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub layers: Vec<Layer>,
}

impl Gradient {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect(),
        }
    }

    fn clear(&mut self) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|v| *v = 0.0);
            l.bias.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias))
    }
}

/// Adam optimizer state (bias-corrected moments).
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(num_params: usize) -> Self {
        Self {
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
            alpha: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(&mut self, net: &mut Mlp, grad: &Gradient) -> Result<()> {
        check_len("adam parameters", self.m.len(), net.num_params())?;
        check_len("adam gradient", self.m.len(), grad.values().count())?;
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for (((p, g), m), v) in net
            .params_mut()
            .zip(grad.values())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.alpha * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Input/target rows for supervised training.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Self> {
        check_len("dataset rows", inputs.len(), targets.len())?;
        if let (Some(x), Some(y)) = (inputs.first(), targets.first()) {
            if inputs.iter().any(|r| r.len() != x.len()) || targets.iter().any(|r| r.len() != y.len()) {
                return Err(Error::InvalidConfig("ragged dataset rows".into()));
            }
        }
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            inputs: rows.iter().map(|&r| self.inputs[r].clone()).collect(),
            targets: rows.iter().map(|&r| self.targets[r].clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Fraction of rows used for training; the rest is the held-out test split.
    pub train_fraction: f64,
    /// Test loss is recorded every this many epochs.
    pub test_interval: usize,
    /// Adam step size.
    pub learning_rate: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            batch_size: 10,
            seed: 0,
            train_fraction: 0.8,
            test_interval: 50,
            learning_rate: 1e-3,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.test_interval == 0 {
            return Err(Error::InvalidConfig("epochs, batch size and test interval must be >= 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(Error::InvalidConfig("train fraction must lie in (0, 1]".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    /// Training-split MSE after each epoch.
    pub train_loss: Vec<f64>,
    /// `(epoch, test MSE)` at every test interval.
    pub test_loss: Vec<(usize, f64)>,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

/// Mini-batch Adam training with a seeded split and per-epoch reshuffle.
pub fn train(net: &mut Mlp, data: &Dataset, cfg: &TrainingConfig) -> Result<TrainingReport> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    check_len("dataset input width", net.input_dim(), data.inputs[0].len())?;
    check_len("dataset target width", net.output_dim(), data.targets[0].len())?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    let n_train = ((data.len() as f64 * cfg.train_fraction).floor() as usize).clamp(1, data.len());
    let test_rows = order[n_train..].to_vec();
    let mut train_rows = order[..n_train].to_vec();
    let kept_train = train_rows.clone();

    let mut adam = AdamState::new(net.num_params());
    adam.alpha = cfg.learning_rate;
    let mut grad = Gradient::zeros_like(net);
    let mut ws = Workspace::new(net);
    let mut train_loss = Vec::with_capacity(cfg.epochs);
    let mut test_loss = Vec::new();

    for epoch in 1..=cfg.epochs {
        train_rows.shuffle(&mut rng);
        for batch in train_rows.chunks(cfg.batch_size) {
            net.accumulate_gradient(data, batch, &mut ws, &mut grad);
            adam.step(net, &grad)?;
        }
        if !net.is_finite() {
            return Err(Error::NonFinite("network parameters during training"));
        }
        train_loss.push(net.mse(data, &kept_train));
        if epoch % cfg.test_interval == 0 && !test_rows.is_empty() {
            test_loss.push((epoch, net.mse(data, &test_rows)));
        }
    }

    Ok(TrainingReport {
        train_loss,
        test_loss,
        train_rows: kept_train,
        test_rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeErrors {
    pub l2: f64,
    pub linf: f64,
    /// Rows skipped because their target norm is zero.
    pub skipped: usize,
}

/// Mean relative l2 and l-infinity errors of predictions against targets.
pub fn relative_errors_of(predictions: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<RelativeErrors> {
    check_len("relative error rows", targets.len(), predictions.len())?;
    let (mut l2, mut linf, mut used) = (0.0, 0.0, 0usize);
    for (p, y) in predictions.iter().zip(targets) {
        let y2 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let yinf = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if y2 == 0.0 {
            continue;
        }
        let e2 = p.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let einf = p.iter().zip(y).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        l2 += e2 / y2;
        linf += einf / yinf;
        used += 1;
    }
    if used == 0 {
        return Err(Error::AllZeroTargets);
    }
    Ok(RelativeErrors {
        l2: l2 / used as f64,
        linf: linf / used as f64,
        skipped: targets.len() - used,
    })
}

pub fn relative_errors(net: &Mlp, eval_set: &Dataset) -> Result<RelativeErrors> {
    let preds = eval_set
        .inputs
        .iter()
        .map(|x| net.forward(x))
        .collect::<Result<Vec<_>>>()?;
    relative_errors_of(&preds, &eval_set.targets)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_dataset(rows: usize, seed: u64, f: impl Fn(&[f64]) -> Vec<f64>) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs: Vec<Vec<f64>> = (0..rows)
            .map(|_| (0..8).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let targets = inputs.iter().map(|x| f(x)).collect();
        Dataset::new(inputs, targets).unwrap()
    }

    /// Loop-based re-evaluation, independent of `Layer::affine`.
    fn naive_forward(net: &Mlp, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        let n = net.layers().len();
        for (li, l) in net.layers().iter().enumerate() {
            let mut z = vec![0.0; l.outputs];
            for o in 0..l.outputs {
                let mut s = l.bias[o];
                for i in 0..l.inputs {
                    s += l.weights[o * l.inputs + i] * a[i];
                }
                z[o] = if li + 1 < n { s.tanh() } else { s };
            }
            a = z;
        }
        a
    }

    #[test]
    fn zero_network_outputs_bias() {
        let mut net = Mlp::zeros(&Mlp::surrogate_dims(4));
        assert_eq!(net.forward(&[0.3; 8]).unwrap(), vec![0.0; 4]);
        net.layers_mut().last_mut().unwrap().bias = vec![1.5, -2.0, 0.0, 3.0];
        assert_eq!(net.forward(&[0.3; 8]).unwrap(), vec![1.5, -2.0, 0.0, 3.0]);
    }

    #[test]
    fn forward_matches_naive_loops() {
        let net = Mlp::new(&Mlp::surrogate_dims(4), 9);
        for k in 0..10 {
            let x: Vec<f64> = (0..8).map(|i| ((i + k) as f64 * 0.77).sin()).collect();
            let a = net.forward(&x).unwrap();
            let b = naive_forward(&net, &x);
            for (p, q) in a.iter().zip(&b) {
                assert!((p - q).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn forward_rejects_bad_input() {
        let net = Mlp::new(&[2, 3, 1], 0);
        assert!(net.forward(&[1.0]).is_err());
        assert!(matches!(net.forward(&[1.0, f64::NAN]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn seeded_construction_is_reproducible() {
        let dims = Mlp::surrogate_dims(4);
        assert_eq!(Mlp::new(&dims, 3), Mlp::new(&dims, 3));
        assert_ne!(Mlp::new(&dims, 3), Mlp::new(&dims, 4));
        assert_eq!(Mlp::new(&dims, 3).num_params(), 8 * 16 + 16 + 2 * (16 * 16 + 16) + 16 * 4 + 4);
    }

    #[test]
    fn gradient_zero_at_exact_fit() {
        let net = Mlp::new(&Mlp::surrogate_dims(4), 1);
        let data = random_dataset(7, 2, |x| net.forward(x).unwrap());
        let rows: Vec<usize> = (0..7).collect();
        let g = net.gradient(&data, &rows).unwrap();
        assert!(g.values().all(|v| v.abs() < 1e-15));
        assert!(matches!(net.gradient(&data, &[]), Err(Error::EmptyData)));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let net = Mlp::new(&[8, 6, 5, 4], 17);
        let data = random_dataset(5, 3, |x| vec![x[0] * x[1], x[2].sin(), x[3] - x[4], 0.5]);
        let rows: Vec<usize> = (0..5).collect();
        let g: Vec<f64> = net.gradient(&data, &rows).unwrap().values().copied().collect();
        let eps = 1e-6;
        for k in 0..net.num_params() {
            let mut plus = net.clone();
            *plus.params_mut().nth(k).unwrap() += eps;
            let mut minus = net.clone();
            *minus.params_mut().nth(k).unwrap() -= eps;
            let fd = (plus.mse(&data, &rows) - minus.mse(&data, &rows)) / (2.0 * eps);
            let rel = (fd - g[k]).abs() / g[k].abs().max(1e-4);
            assert!(rel <= 1e-5, "param {k}: fd {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn negated_targets_negate_output_bias_gradient() {
        let net = Mlp::zeros(&[8, 16, 4]);
        let data = random_dataset(6, 4, |x| vec![x[0], x[1], x[2], x[3]]);
        let neg = Dataset::new(
            data.inputs.clone(),
            data.targets.iter().map(|t| t.iter().map(|v| -v).collect()).collect(),
        )
        .unwrap();
        let rows: Vec<usize> = (0..6).collect();
        let a = net.gradient(&data, &rows).unwrap();
        let b = net.gradient(&neg, &rows).unwrap();
        for (p, q) in a.layers[1].bias.iter().zip(&b.layers[1].bias) {
            assert_eq!(*p, -q);
        }
    }

    #[test]
    fn adam_zero_gradient_keeps_parameters() {
        let mut net = Mlp::new(&[3, 4, 2], 5);
        let before = net.clone();
        let mut adam = AdamState::new(net.num_params());
        let g = Gradient::zeros_like(&net);
        for _ in 0..5 {
            adam.step(&mut net, &g).unwrap();
        }
        assert_eq!(net, before);
        assert_eq!(adam.t, 5);
    }

    #[test]
    fn adam_first_step_is_alpha_sized() {
        let mut net = Mlp::zeros(&[2, 1]);
        let mut g = Gradient::zeros_like(&net);
        g.layers[0].weights = vec![0.37, -12.0];
        g.layers[0].bias = vec![1e-3];
        let mut adam = AdamState::new(net.num_params());
        adam.step(&mut net, &g).unwrap();
        let expected = |gi: f64| -1e-3 * gi / (gi.abs() + 1e-8);
        let p: Vec<f64> = net.params().copied().collect();
        for (pi, gi) in p.iter().zip([0.37, -12.0, 1e-3]) {
            assert!((pi - expected(gi)).abs() < 1e-15);
        }
    }

    #[test]
    fn adam_on_scalar_quadratic() {
        // minimise p^2 with p stored as the single bias of a 1 -> 1 network
        let mut net = Mlp::zeros(&[1, 1]);
        net.layers_mut()[0].bias[0] = 1.0;
        let mut adam = AdamState::new(2);
        let mut trace = vec![1.0];
        for _ in 0..200 {
            let p = net.layers()[0].bias[0];
            let mut g = Gradient::zeros_like(&net);
            g.layers[0].bias[0] = 2.0 * p;
            adam.step(&mut net, &g).unwrap();
            trace.push(net.layers()[0].bias[0]);
        }
        let last = *trace.last().unwrap();
        assert!(last.abs() < 0.9);
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn training_drives_zero_targets_to_zero() {
        let data = random_dataset(100, 6, |_| vec![0.0; 4]);
        let mut net = Mlp::new(&Mlp::surrogate_dims(4), 2);
        let initial = net.mse(&data, &(0..100).collect::<Vec<_>>());
        let report = train(&mut net, &data, &TrainingConfig::default()).unwrap();
        let last = *report.train_loss.last().unwrap();
        assert!(last <= 1e-3 * initial, "initial {initial}, final {last}");
        assert!(last < 1e-4, "final loss {last}");
        assert_eq!(report.test_loss.len(), 10);
        assert_eq!(report.test_loss[0].0, 50);
    }

    #[test]
    fn training_is_deterministic() {
        let data = random_dataset(60, 8, |x| vec![x[0] + x[5], x[1], -x[2], x[3] * 0.5]);
        let cfg = TrainingConfig {
            epochs: 20,
            ..TrainingConfig::default()
        };
        let mut a = Mlp::new(&Mlp::surrogate_dims(4), 1);
        let mut b = a.clone();
        let ra = train(&mut a, &data, &cfg).unwrap();
        let rb = train(&mut b, &data, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn training_learns_linear_map() {
        let a = [
            [0.5, -0.2, 0.1, 0.0, 0.3, 0.0, -0.1, 0.2],
            [0.0, 0.4, 0.0, -0.3, 0.1, 0.2, 0.0, 0.0],
            [0.2, 0.0, -0.5, 0.1, 0.0, 0.0, 0.3, -0.1],
            [-0.1, 0.1, 0.0, 0.2, 0.0, -0.4, 0.0, 0.5],
        ];
        let data = random_dataset(500, 10, |x| {
            a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
        });
        let mut net = Mlp::new(&Mlp::surrogate_dims(4), 3);
        let report = train(&mut net, &data, &TrainingConfig::default()).unwrap();
        let test = data.subset(&report.test_rows);
        let err = relative_errors(&net, &test).unwrap();
        assert!(err.l2 <= 5e-2, "test relative l2 {}", err.l2);

        let mono = report.train_loss.windows(2).filter(|w| w[1] <= w[0]).count();
        assert!(mono as f64 >= 0.5 * (report.train_loss.len() - 1) as f64);
    }

    #[test]
    fn training_errors() {
        let mut net = Mlp::new(&[8, 4], 0);
        assert!(matches!(
            train(&mut net, &Dataset::default(), &TrainingConfig::default()),
            Err(Error::EmptyData)
        ));
        let bad = TrainingConfig {
            train_fraction: 0.0,
            ..TrainingConfig::default()
        };
        let data = random_dataset(10, 0, |_| vec![0.0; 4]);
        assert!(train(&mut net, &data, &bad).is_err());
    }

    #[test]
    fn relative_error_identities() {
        let y = vec![vec![1.0, -2.0, 3.0], vec![0.5, 0.5, 0.0], vec![0.0; 3]];
        let same = relative_errors_of(&y, &y).unwrap();
        assert_eq!((same.l2, same.linf, same.skipped), (0.0, 0.0, 1));
        let doubled: Vec<Vec<f64>> = y.iter().map(|r| r.iter().map(|v| 2.0 * v).collect()).collect();
        let e = relative_errors_of(&doubled, &y).unwrap();
        assert!((e.l2 - 1.0).abs() < 1e-15 && (e.linf - 1.0).abs() < 1e-15);
        let shifted: Vec<Vec<f64>> = y[..2]
            .iter()
            .map(|r| {
                let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                let mut s = r.clone();
                s[0] += n;
                s
            })
            .collect();
        let e = relative_errors_of(&shifted, &y[..2]).unwrap();
        assert!((e.l2 - 1.0).abs() < 1e-15);
        assert!(matches!(
            relative_errors_of(&[vec![1.0]], &[vec![0.0]]),
            Err(Error::AllZeroTargets)
        ));
    }
}
