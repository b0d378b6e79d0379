//! Full-batch Gradient Descent and Adam, the seeded multi-trial training
//! harness behind the convergence-rate table, and the decision-surface
//! grid sampler.
//!
//! Determinism contract: a trial is a pure function of
//! `(seed, config, dataset)`. Trial seeds are derived as
//! `mix_seed(base_seed, cell_index, trial_index)`, so tables are
//! bit-identical regardless of thread count or execution order.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::datasets::{Dataset, Task};
use crate::error::{Error, Result};
use crate::rng::{mix_seed, SplitMix64};
use crate::tinynet::{nll_term, sigmoid, Activation, ParamVector, TwoH1Params};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Gd,
    Adam,
    /// Per-point updates cycling through the dataset in order; kept out of
    /// the default grid, available behind a flag.
    Sgd,
}

impl OptimizerKind {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::Gd => "gd",
            OptimizerKind::Adam => "adam",
            OptimizerKind::Sgd => "sgd",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SuccessRule {
    /// Every point on the correct side of 0.5.
    ZeroTrainError,
    LossBelow(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub max_steps: usize,
    pub success_rule: SuccessRule,
}

impl OptimizerConfig {
    pub fn gd(learning_rate: f64, max_steps: usize) -> Self {
        Self {
            kind: OptimizerKind::Gd,
            learning_rate,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            max_steps,
            success_rule: SuccessRule::ZeroTrainError,
        }
    }

    pub fn adam(learning_rate: f64, max_steps: usize) -> Self {
        Self { kind: OptimizerKind::Adam, ..Self::gd(learning_rate, max_steps) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidInput("learning_rate must be positive".into()));
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::InvalidInput(format!("{name} must lie in [0, 1)")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidInput("max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Plain full-batch gradient descent step: `p <- p - lr * g`.
#[derive(Debug, Clone)]
pub struct GradientDescent {
    pub learning_rate: f64,
}

impl GradientDescent {
    pub fn step(&self, params: &mut [f64], grad: &[f64]) {
        for (p, g) in params.iter_mut().zip(grad) {
            *p -= self.learning_rate * g;
        }
    }
}

/// Adam with bias correction:
/// `m <- b1 m + (1-b1) g`, `v <- b2 v + (1-b2) g^2`,
/// `p <- p - lr * m_hat / (sqrt(v_hat) + eps)`.
#[derive(Debug, Clone)]
pub struct Adam {
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

impl Adam {
    pub fn new(learning_rate: f64, beta1: f64, beta2: f64, eps: f64, dim: usize) -> Self {
        Self { learning_rate, beta1, beta2, eps, m: vec![0.0; dim], v: vec![0.0; dim], t: 0 }
    }

    pub fn from_config(cfg: &OptimizerConfig, dim: usize) -> Self {
        Self::new(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, dim)
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialResult {
    pub seed: u64,
    pub converged: bool,
    /// Loss or parameters became non-finite; recorded, not a crash.
    pub diverged: bool,
    pub final_loss: f64,
    pub final_accuracy: f64,
    pub steps_used: usize,
    pub terminal_grad_norm: f64,
}

/// Every parameter i.i.d. uniform on `[-1, 1)` from the SplitMix64 stream
/// of `seed`, drawn in flat order (first-layer weights row-major, hidden
/// biases, output weights, output bias).
pub fn init_params(activation: Activation, h: usize, seed: u64) -> Result<TwoH1Params> {
    if h == 0 {
        return Err(Error::Architecture("hidden width must be at least 1".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let p = TwoH1Params {
        activation,
        w1: (0..h).map(|_| [rng.next_symmetric(), rng.next_symmetric()]).collect(),
        b1: (0..h).map(|_| rng.next_symmetric()).collect(),
        v: (0..h).map(|_| rng.next_symmetric()).collect(),
        c: rng.next_symmetric(),
    };
    p.validate()?;
    Ok(p)
}

/// One pass over the dataset: mean-NLL loss, analytic gradient, and
/// whether every point is classified correctly.
fn batch_eval(p: &TwoH1Params, d: &Dataset) -> (f64, Vec<f64>, bool) {
    let h = p.hidden_units();
    let n = d.len() as f64;
    let mut grad = vec![0.0; 4 * h + 1];
    let mut loss = 0.0;
    let mut all_correct = true;
    for point in d.points() {
        let (x0, x1) = (point.x[0], point.x[1]);
        let mut u = 0.0;
        let mut zs = [0.0f64; 16];
        let mut acts = [0.0f64; 16];
        debug_assert!(h <= 16);
        for j in 0..h {
            let z = p.w1[j][0] * x0 + p.w1[j][1] * x1 + p.b1[j];
            let a = p.activation.apply(z);
            zs[j] = z;
            acts[j] = a;
            u += p.v[j] * a;
        }
        let logit = u + p.c;
        let m = sigmoid(logit);
        loss += nll_term(logit, point.y);
        all_correct &= (m > 0.5) == (point.y == 1.0);
        let du = (m - point.y) / n;
        for j in 0..h {
            let dz = match p.activation {
                Activation::Relu => {
                    if zs[j] > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                Activation::Sigmoid => acts[j] * (1.0 - acts[j]),
            };
            let t = du * p.v[j] * dz;
            grad[2 * j] += t * x0;
            grad[2 * j + 1] += t * x1;
            grad[2 * h + j] += t;
            grad[3 * h + j] += du * acts[j];
        }
        grad[4 * h] += du;
    }
    (loss / n, grad, all_correct)
}

fn success(rule: SuccessRule, loss: f64, all_correct: bool) -> bool {
    match rule {
        SuccessRule::ZeroTrainError => all_correct,
        SuccessRule::LossBelow(t) => loss < t,
    }
}

/// Runs full-batch (or per-point, for [`OptimizerKind::Sgd`]) updates for
/// at most `cfg.max_steps` steps, checking the success rule every step and
/// stopping early on success. Non-finite loss or parameters mark the
/// trial diverged instead of crashing. `seed` is recorded in the result.
pub fn train(
    p0: &TwoH1Params,
    d: &Dataset,
    cfg: &OptimizerConfig,
    seed: u64,
) -> Result<(TrialResult, TwoH1Params)> {
    cfg.validate()?;
    p0.validate()?;
    if d.task() != Task::Classification || d.dim() != 2 {
        return Err(Error::InvalidInput("training needs a 2-D classification dataset".into()));
    }
    if p0.hidden_units() > 16 {
        return Err(Error::Architecture("training harness supports widths up to 16".into()));
    }

    let mut p = p0.clone();
    let mut adam = Adam::from_config(cfg, p.param_count());
    let gd = GradientDescent { learning_rate: cfg.learning_rate };
    // per-point mode draws its point sequence from a dedicated stream, so
    // the trial stays a pure function of (seed, cfg, dataset)
    let mut point_stream = SplitMix64::new(mix_seed(seed, 0x5d9, 0));

    let mut converged = false;
    let mut diverged = false;
    let mut steps_used = 0;
    let mut last = batch_eval(&p, d);

    for _ in 0..cfg.max_steps {
        let (loss, ref grad, all_correct) = last;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            diverged = true;
            break;
        }
        if success(cfg.success_rule, loss, all_correct) {
            converged = true;
            break;
        }
        let mut flat = p.flatten();
        match cfg.kind {
            OptimizerKind::Gd => gd.step(&mut flat, grad),
            OptimizerKind::Adam => adam.step(&mut flat, grad),
            OptimizerKind::Sgd => {
                let i = (point_stream.next_u64() % d.len() as u64) as usize;
                let g = p.grad_nll_weighted(d, 1.0, Some(i))?;
                gd.step(&mut flat, &g);
            }
        }
        if flat.iter().any(|v| !v.is_finite()) {
            diverged = true;
            break;
        }
        p = p.with_flat(&flat)?;
        steps_used += 1;
        last = batch_eval(&p, d);
    }
    let (final_loss, ref grad, all_correct) = last;
    if !converged && !diverged {
        converged = success(cfg.success_rule, final_loss, all_correct);
    }

    let result = TrialResult {
        seed,
        converged,
        diverged,
        final_loss,
        final_accuracy: p.accuracy(d)?,
        steps_used,
        terminal_grad_norm: grad.iter().fold(0.0f64, |a, b| a.max(b.abs())),
    };
    Ok((result, p))
}

/// Hyperparameters of the convergence-rate table. The defaults reproduce
/// the qualitative contrasts (full-batch sigmoid failure on flattened XOR
/// at small widths, near-certain GD success for h >= 3) and are
/// overridable from the command line; every run echoes them into its
/// provenance sidecar.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableHyper {
    pub gd_lr_sigmoid: f64,
    pub gd_lr_relu: f64,
    pub sgd_lr_sigmoid: f64,
    pub sgd_lr_relu: f64,
    pub adam_lr: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub max_steps: usize,
}

impl Default for TableHyper {
    fn default() -> Self {
        Self {
            gd_lr_sigmoid: 0.5,
            gd_lr_relu: 0.05,
            sgd_lr_sigmoid: 0.5,
            sgd_lr_relu: 0.05,
            adam_lr: 1e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            max_steps: 50_000,
        }
    }
}

impl TableHyper {
    pub fn config_for(&self, optimizer: OptimizerKind, activation: Activation) -> OptimizerConfig {
        let lr = match (optimizer, activation) {
            (OptimizerKind::Gd, Activation::Sigmoid) => self.gd_lr_sigmoid,
            (OptimizerKind::Gd, Activation::Relu) => self.gd_lr_relu,
            (OptimizerKind::Sgd, Activation::Sigmoid) => self.sgd_lr_sigmoid,
            (OptimizerKind::Sgd, Activation::Relu) => self.sgd_lr_relu,
            (OptimizerKind::Adam, _) => self.adam_lr,
        };
        OptimizerConfig {
            kind: optimizer,
            learning_rate: lr,
            adam_beta1: self.adam_beta1,
            adam_beta2: self.adam_beta2,
            adam_eps: self.adam_eps,
            max_steps: self.max_steps,
            success_rule: SuccessRule::ZeroTrainError,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TableSpec {
    pub h_min: usize,
    pub h_max: usize,
    pub datasets: Vec<(String, Dataset)>,
    pub activations: Vec<Activation>,
    pub optimizers: Vec<OptimizerKind>,
    pub trials: usize,
    pub base_seed: u64,
    pub hyper: TableHyper,
}

impl TableSpec {
    /// The full 6x8 grid: h in 2..=7, {xor, fxor} x {relu, sigmoid} x
    /// {adam, gd}.
    pub fn full_grid(trials: usize, base_seed: u64) -> Self {
        use crate::datasets::{builtin, BuiltinDataset};
        Self {
            h_min: 2,
            h_max: 7,
            datasets: vec![
                ("xor".into(), builtin(BuiltinDataset::Xor)),
                ("fxor".into(), builtin(BuiltinDataset::Fxor)),
            ],
            activations: vec![Activation::Relu, Activation::Sigmoid],
            optimizers: vec![OptimizerKind::Adam, OptimizerKind::Gd],
            trials,
            base_seed,
            hyper: TableHyper::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        if self.h_min == 0 || self.h_max < self.h_min {
            return Err(Error::InvalidInput("invalid hidden-width range".into()));
        }
        if self.h_max > 16 {
            return Err(Error::InvalidInput("the trial harness supports widths up to 16".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub h: usize,
    pub dataset: String,
    pub activation: Activation,
    pub optimizer: OptimizerKind,
    pub trials: usize,
    pub successes: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub cells: Vec<CellResult>,
}

impl ConvergenceTable {
    pub fn cell(
        &self,
        h: usize,
        dataset: &str,
        activation: Activation,
        optimizer: OptimizerKind,
    ) -> Option<&CellResult> {
        self.cells.iter().find(|c| {
            c.h == h && c.dataset == dataset && c.activation == activation && c.optimizer == optimizer
        })
    }

    /// `h,dataset,activation,optimizer,trials,successes,fraction` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("h,dataset,activation,optimizer,trials,successes,fraction\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                c.h,
                c.dataset,
                c.activation.name(),
                c.optimizer.name(),
                c.trials,
                c.successes,
                c.fraction
            ));
        }
        out
    }
}

/// Runs the full cross-product grid. Trials execute in parallel; each
/// trial's seed is `mix_seed(base_seed, cell_index, trial_index)`, so the
/// table is identical for any thread count.
pub fn run_table(spec: &TableSpec) -> Result<ConvergenceTable> {
    spec.validate()?;
    struct Cell<'a> {
        h: usize,
        dataset: &'a (String, Dataset),
        activation: Activation,
        optimizer: OptimizerKind,
        cfg: OptimizerConfig,
    }
    let mut cells = Vec::new();
    for h in spec.h_min..=spec.h_max {
        for dataset in &spec.datasets {
            for &activation in &spec.activations {
                for &optimizer in &spec.optimizers {
                    cells.push(Cell {
                        h,
                        dataset,
                        activation,
                        optimizer,
                        cfg: spec.hyper.config_for(optimizer, activation),
                    });
                }
            }
        }
    }

    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..spec.trials).map(move |t| (c, t)))
        .collect();
    let outcomes: Vec<(usize, bool)> = jobs
        .par_iter()
        .map(|&(c, t)| {
            let cell = &cells[c];
            let seed = mix_seed(spec.base_seed, c as u64, t as u64);
            let p0 = init_params(cell.activation, cell.h, seed)
                .expect("grid widths are positive");
            let (result, _) = train(&p0, &cell.dataset.1, &cell.cfg, seed)
                .expect("grid datasets are valid");
            (c, result.converged)
        })
        .collect();

    let mut successes = vec![0usize; cells.len()];
    for (c, ok) in outcomes {
        if ok {
            successes[c] += 1;
        }
    }
    Ok(ConvergenceTable {
        cells: cells
            .iter()
            .zip(successes)
            .map(|(cell, s)| CellResult {
                h: cell.h,
                dataset: cell.dataset.0.clone(),
                activation: cell.activation,
                optimizer: cell.optimizer,
                trials: spec.trials,
                successes: s,
                fraction: s as f64 / spec.trials as f64,
            })
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridBounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl GridBounds {
    pub fn unit() -> Self {
        Self { x_min: 0.0, x_max: 1.0, y_min: 0.0, y_max: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Grid {
    pub bounds: GridBounds,
    pub resolution: usize,
    /// Row-major: y varies over rows (outer), x over columns (inner).
    pub values: Vec<f64>,
}

impl Grid {
    fn coord(lo: f64, hi: f64, i: usize, res: usize) -> f64 {
        lo + (hi - lo) * i as f64 / (res - 1) as f64
    }

    /// `x,y,output` lines in row-major order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,output\n");
        for iy in 0..self.resolution {
            let y = Self::coord(self.bounds.y_min, self.bounds.y_max, iy, self.resolution);
            for ix in 0..self.resolution {
                let x = Self::coord(self.bounds.x_min, self.bounds.x_max, ix, self.resolution);
                out.push_str(&format!("{},{},{}\n", x, y, self.values[iy * self.resolution + ix]));
            }
        }
        out
    }
}

/// Model outputs over `[x_min, x_max] x [y_min, y_max]` at `resolution`
/// points per axis (endpoints included). 2-D input models only.
pub fn sample_grid(p: &ParamVector, bounds: GridBounds, resolution: usize) -> Result<Grid> {
    if resolution < 2 {
        return Err(Error::InvalidInput("grid resolution must be at least 2".into()));
    }
    if p.input_dim() != 2 {
        return Err(Error::InvalidInput("grid sampling needs a 2-D input model".into()));
    }
    if !(bounds.x_min < bounds.x_max && bounds.y_min < bounds.y_max) {
        return Err(Error::InvalidInput("grid bounds must be nonempty intervals".into()));
    }
    let mut values = Vec::with_capacity(resolution * resolution);
    for iy in 0..resolution {
        let y = Grid::coord(bounds.y_min, bounds.y_max, iy, resolution);
        for ix in 0..resolution {
            let x = Grid::coord(bounds.x_min, bounds.x_max, ix, resolution);
            values.push(p.output(&[x, y])?);
        }
    }
    Ok(Grid { bounds, resolution, values })
}
