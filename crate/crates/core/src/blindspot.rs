//! Blind-spot (saturation) analysis for deep ReLU regression.
//!
//! A layer is saturated on a dataset when every unit's pre-activation is
//! strictly negative on every datapoint: no gradient flows into it, local
//! optimization freezes it, and the model output is constant. Such
//! points are local minima of the error surface; on a *decent* dataset
//! (one input-group's label mean differs from the global mean) they are
//! not global, and [`construct_better`] builds an explicit better point:
//! three first-layer units carve out the witness group with a hat
//! function and the next layer maps it to the group mean `nu` against the
//! complement mean `mu`.

use serde::Serialize;

use crate::datasets::{decency_witness, group_means, mean_label, Dataset, Task};
use crate::error::{Error, Result};
use crate::optim::GradientDescent;
use crate::rng::SplitMix64;
use crate::tinynet::{DeepReluParams, LayerParams};

/// 1-based indices of ReLU layers whose every unit has strictly negative
/// pre-activation on every datapoint.
pub fn detect_saturation(p: &DeepReluParams, d: &Dataset) -> Result<Vec<usize>> {
    if d.task() != Task::Regression || d.dim() != p.input_dim() {
        return Err(Error::InvalidInput(format!(
            "expected a {}-D regression dataset",
            p.input_dim()
        )));
    }
    let k = p.depth();
    let mut saturated = vec![true; k.saturating_sub(1)];
    for point in d.points() {
        let mut h = point.x.clone();
        for (n, layer) in p.layers()[..k - 1].iter().enumerate() {
            let mut next = Vec::with_capacity(layer.out_dim());
            for (row, &b) in layer.w.iter().zip(&layer.b) {
                let z = row.iter().zip(&h).map(|(&w, &x)| w * x).sum::<f64>() + b;
                if z >= 0.0 {
                    saturated[n] = false;
                }
                next.push(if z > 0.0 { z } else { 0.0 });
            }
            h = next;
        }
    }
    Ok((0..k - 1).filter(|&n| saturated[n]).map(|n| n + 1).collect())
}

/// Deep-ReLU parameters whose first layer is saturated on `d`: random
/// weights, biases set to `-(2 * max |W x|_inf + 1)` from the data bounds.
pub fn saturated_params(d: &Dataset, hidden_widths: &[usize], seed: u64) -> Result<DeepReluParams> {
    if hidden_widths.is_empty() {
        return Err(Error::Architecture("need at least one hidden layer".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let mut layers = Vec::with_capacity(hidden_widths.len() + 1);
    let mut in_dim = d.dim();
    for (n, &width) in hidden_widths.iter().enumerate() {
        let w: Vec<Vec<f64>> =
            (0..width).map(|_| (0..in_dim).map(|_| rng.next_symmetric()).collect()).collect();
        let b = if n == 0 {
            let mut max_abs = 0.0f64;
            for point in d.points() {
                for row in &w {
                    let z: f64 = row.iter().zip(&point.x).map(|(&wi, &xi)| wi * xi).sum();
                    max_abs = max_abs.max(z.abs());
                }
            }
            vec![-(2.0 * max_abs + 1.0); width]
        } else {
            (0..width).map(|_| rng.next_symmetric()).collect()
        };
        layers.push(LayerParams { w, b });
        in_dim = width;
    }
    layers.push(LayerParams {
        w: vec![(0..in_dim).map(|_| rng.next_symmetric()).collect()],
        b: vec![rng.next_symmetric()],
    });
    DeepReluParams::new(layers)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainingProbe {
    pub saturated_layers: Vec<usize>,
    /// Saturated layers' weights and biases unchanged bit for bit.
    pub weights_frozen: bool,
    /// Model output identical (exactly) across the dataset after training.
    pub constant_output: bool,
    pub final_output: f64,
    pub label_mean: f64,
    pub final_loss: f64,
    pub steps_run: usize,
}

/// Adaptive full-batch gradient descent on the squared-error loss: the
/// step halves on loss increase (or non-finite trial points) and slowly
/// regrows on acceptance, so the probe needs no tuned learning rate.
fn descend(p: &DeepReluParams, d: &Dataset, steps: usize) -> Result<(DeepReluParams, usize)> {
    let mut flat = p.flatten();
    let mut current = p.clone();
    let mut loss = current.loss(d)?;
    let mut lr = 0.5 / d.len() as f64;
    let lr_cap = lr * 1e9;
    let mut run = 0;
    for _ in 0..steps {
        let grad = current.grad(d)?;
        let gd = GradientDescent { learning_rate: lr };
        let mut candidate = flat.clone();
        gd.step(&mut candidate, &grad);
        let accepted = if candidate.iter().all(|v| v.is_finite()) {
            let next = current.with_flat(&candidate)?;
            let next_loss = next.loss(d)?;
            if next_loss.is_finite() && next_loss < loss {
                flat = candidate;
                current = next;
                loss = next_loss;
                true
            } else {
                false
            }
        } else {
            false
        };
        if accepted {
            lr = (lr * 1.1).min(lr_cap);
        } else {
            lr *= 0.5;
            if lr < 1e-300 {
                break;
            }
        }
        run += 1;
    }
    Ok((current, run))
}

/// Trains `p` for up to `steps` descent steps and checks the saturation
/// consequences: frozen saturated layers (bit for bit), constant model
/// output, and convergence of that constant toward the label mean.
///
/// Precondition: some layer of `p` is saturated on `d`.
pub fn saturated_training_probe(
    p: &DeepReluParams,
    d: &Dataset,
    steps: usize,
) -> Result<TrainingProbe> {
    let saturated_layers = detect_saturation(p, d)?;
    if saturated_layers.is_empty() {
        return Err(Error::InvalidInput("no layer is saturated on this dataset".into()));
    }
    let snapshot: Vec<Vec<u64>> = saturated_layers
        .iter()
        .map(|&n| {
            let layer = &p.layers()[n - 1];
            layer
                .w
                .iter()
                .flatten()
                .chain(layer.b.iter())
                .map(|v| v.to_bits())
                .collect()
        })
        .collect();

    let (trained, steps_run) = descend(p, d, steps)?;

    let weights_frozen = saturated_layers.iter().zip(&snapshot).all(|(&n, bits)| {
        let layer = &trained.layers()[n - 1];
        layer
            .w
            .iter()
            .flatten()
            .chain(layer.b.iter())
            .map(|v| v.to_bits())
            .eq(bits.iter().copied())
    });

    let outputs: Result<Vec<f64>> =
        d.points().iter().map(|pt| trained.forward(&pt.x)).collect();
    let outputs = outputs?;
    let constant_output = outputs.iter().all(|&o| o == outputs[0]);

    Ok(TrainingProbe {
        saturated_layers,
        weights_frozen,
        constant_output,
        final_output: outputs[0],
        label_mean: mean_label(d),
        final_loss: trained.loss(d)?,
        steps_run,
    })
}

/// Trains from `p0` until the squared-error loss stops improving; used by
/// the constant-input check, where the optimum is the label mean.
pub fn train_to_mean(p0: &DeepReluParams, d: &Dataset, steps: usize) -> Result<DeepReluParams> {
    Ok(descend(p0, d, steps)?.0)
}

/// A vector `v` with `|v . (x_s - x_r)| > 2` for every `x_s != x_r`, and
/// `gamma = v . x_r`.
///
/// Draws seeded random unit directions until every projection clears a
/// near-tie tolerance of `1e-9`, then rescales by `2.5 / min gap`. When
/// every point equals `x_r` the constraint set is empty and the first
/// coordinate direction is returned.
pub fn find_separating_vector(d: &Dataset, r: usize, seed: u64) -> Result<(Vec<f64>, f64)> {
    if r >= d.len() {
        return Err(Error::InvalidInput(format!("witness index {r} out of range")));
    }
    let x_r = &d.points()[r].x;
    let dim = d.dim();
    let others: Vec<&Vec<f64>> = d
        .points()
        .iter()
        .map(|p| &p.x)
        .filter(|x| x.iter().zip(x_r).any(|(a, b)| a.to_bits() != b.to_bits()))
        .collect();

    if others.is_empty() {
        let mut v = vec![0.0; dim];
        v[0] = 1.0;
        let gamma = x_r[0];
        return Ok((v, gamma));
    }

    let mut rng = SplitMix64::new(seed);
    for _ in 0..1000 {
        let u = rng.next_unit_vector(dim);
        let mut min_gap = f64::INFINITY;
        for x in &others {
            let gap: f64 =
                u.iter().zip(x.iter().zip(x_r)).map(|(&ui, (&xi, &ri))| ui * (xi - ri)).sum();
            min_gap = min_gap.min(gap.abs());
        }
        if min_gap > 1e-9 {
            let scale = 2.5 / min_gap;
            let v: Vec<f64> = u.iter().map(|ui| ui * scale).collect();
            let gamma: f64 = v.iter().zip(x_r).map(|(a, b)| a * b).sum();
            return Ok((v, gamma));
        }
    }
    Err(Error::Unsupported("could not separate the witness group".into()))
}

/// Builds parameters that output the witness group's label mean `nu` on
/// the group and the complement mean `mu` everywhere else, for the given
/// hidden widths (first width must be at least 3). The resulting loss is
/// strictly below the best constant predictor's.
///
/// For depth above two the scalar signal is carried as `value + offset`
/// with `offset = 1 + |mu| + |nu|` through identity ReLU layers and the
/// offset removed in the final affine layer, keeping intermediate values
/// nonnegative for any label signs.
pub fn construct_better(
    d: &Dataset,
    hidden_widths: &[usize],
    seed: u64,
) -> Result<DeepReluParams> {
    if d.task() != Task::Regression {
        return Err(Error::InvalidInput("expected a regression dataset".into()));
    }
    if hidden_widths.is_empty() || hidden_widths[0] < 3 {
        return Err(Error::Architecture("first hidden layer needs at least 3 units".into()));
    }
    let r = decency_witness(d).ok_or(Error::NotDecent)?;
    let (nu, mu) = group_means(d, r);
    let mu = mu.ok_or(Error::NotDecent)?;
    let (v, gamma) = find_separating_vector(d, r, seed)?;
    let dim = d.dim();
    let m1 = hidden_widths[0];

    // first layer: rows v, 2v, v carve the hat; remaining units dead
    let mut w1: Vec<Vec<f64>> = Vec::with_capacity(m1);
    w1.push(v.clone());
    w1.push(v.iter().map(|a| 2.0 * a).collect());
    w1.push(v.clone());
    for _ in 3..m1 {
        w1.push(vec![0.0; dim]);
    }
    let mut b1 = vec![0.0; m1];
    b1[0] = -gamma + 1.0;
    b1[1] = -2.0 * gamma;
    b1[2] = -gamma - 1.0;

    let mut layers = vec![LayerParams { w: w1, b: b1 }];
    let deep = hidden_widths.len() > 1;
    let offset = if deep { 1.0 + mu.abs() + nu.abs() } else { 0.0 };

    // combining row: (nu-mu, mu-nu, nu-mu, 0, ..) with bias mu (+ offset)
    let mut combine = vec![0.0; m1];
    combine[0] = nu - mu;
    combine[1] = mu - nu;
    combine[2] = nu - mu;

    if deep {
        let m2 = hidden_widths[1];
        let mut w2 = vec![vec![0.0; m1]; m2];
        w2[0] = combine;
        let mut b2 = vec![0.0; m2];
        b2[0] = mu + offset;
        layers.push(LayerParams { w: w2, b: b2 });

        let mut prev = m2;
        for &width in &hidden_widths[2..] {
            let w = (0..width)
                .map(|i| {
                    let mut row = vec![0.0; prev];
                    if i < prev {
                        row[i] = 1.0;
                    }
                    row
                })
                .collect();
            layers.push(LayerParams { w, b: vec![0.0; width] });
            prev = width;
        }
        let mut w_out = vec![0.0; prev];
        w_out[0] = 1.0;
        layers.push(LayerParams { w: vec![w_out], b: vec![-offset] });
    } else {
        layers.push(LayerParams { w: vec![combine], b: vec![mu] });
    }
    DeepReluParams::new(layers)
}

/// Saturation flags, decency, and the constructed improvement for a
/// parameter point on a dataset.
#[derive(Debug, Clone, Serialize)]
pub struct BlindSpotReport {
    pub saturated_layers: Vec<usize>,
    pub is_decent: bool,
    pub witness_r: Option<usize>,
    pub loss_at_theta: f64,
    pub loss_at_constructed: Option<f64>,
    pub constructed: Option<DeepReluParams>,
}

/// Assembles a [`BlindSpotReport`] for `theta`. The constructed
/// parameters are attached only when their loss strictly beats
/// `loss_at_theta`, which is guaranteed for a saturated `theta` on a
/// decent dataset with first-layer width at least 3.
pub fn blind_spot_report(theta: &DeepReluParams, d: &Dataset, seed: u64) -> Result<BlindSpotReport> {
    let saturated_layers = detect_saturation(theta, d)?;
    let witness_r = decency_witness(d);
    let loss_at_theta = theta.loss(d)?;
    let widths: Vec<usize> =
        theta.layers()[..theta.depth() - 1].iter().map(|l| l.out_dim()).collect();

    let mut loss_at_constructed = None;
    let mut constructed = None;
    if witness_r.is_some() && widths.first().is_some_and(|&w| w >= 3) {
        let candidate = construct_better(d, &widths, seed)?;
        let loss = candidate.loss(d)?;
        if loss < loss_at_theta {
            loss_at_constructed = Some(loss);
            constructed = Some(candidate);
        }
    }
    Ok(BlindSpotReport {
        saturated_layers,
        is_decent: witness_r.is_some(),
        witness_r,
        loss_at_theta,
        loss_at_constructed,
        constructed,
    })
}
