//! Counterexample forging: gradient descent in data space.
//!
//! Fix a parameter point `p` and minimize `F(d) = ||grad_p L(p, d)||_2^2`
//! over the datapoint coordinates (labels frozen). Driving `F` to zero
//! turns `p` into a critical point of the error surface for the forged
//! dataset; started from a random dataset this almost always yields a
//! saddle, started near a known deadlock configuration it can yield a
//! genuine local minimum.
//!
//! `grad_d F` is computed by central finite differences over all data
//! coordinates rather than deriving the mixed second-derivative tensor:
//! the data dimension is tiny and one hand derivation is enough to trust.

use serde::Serialize;

use crate::certify::{classify_critical_default, Certificate};
use crate::datasets::{Dataset, Task};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::tinynet::{LossKind, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForgeConfig {
    /// Initial step size; each iteration restarts from it and halves on
    /// objective increase.
    pub step_size: f64,
    pub max_iters: usize,
    /// Target on `||grad_p L||_2` (the loop stops when `F` falls below its
    /// square).
    pub target_gradnorm: f64,
    /// Central-difference step over data coordinates.
    pub fd_step: f64,
    /// Labels are never optimized; the flag is informational.
    pub freeze_labels: bool,
}

impl Default for ForgeConfig {
    fn default() -> Self {
        Self {
            step_size: 100.0,
            max_iters: 100_000,
            target_gradnorm: 1e-8,
            fd_step: 1e-6,
            freeze_labels: true,
        }
    }
}

impl ForgeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) {
            return Err(Error::InvalidInput("step_size must be positive".into()));
        }
        if !(self.target_gradnorm > 0.0) {
            return Err(Error::InvalidInput("target_gradnorm must be positive".into()));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::InvalidInput("fd_step must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ForgeResult {
    pub dataset: Dataset,
    /// Objective `F` at the start and after every accepted step;
    /// non-increasing by the backtracking contract.
    pub objective_trace: Vec<f64>,
    pub final_gradnorm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Spectral classification of `(p_fixed, final dataset)`.
    pub certificate: Certificate,
}

fn check_forgeable(p: &ParamVector, d: &Dataset) -> Result<LossKind> {
    if d.task() != Task::Classification {
        return Err(Error::InvalidInput("forging operates on classification datasets".into()));
    }
    match p {
        ParamVector::Sigmoid221(_) | ParamVector::TwoH1(_) => Ok(LossKind::Nll),
        other => Err(Error::Unsupported(format!(
            "forging needs a smooth classifier, got '{}'",
            other.arch_name()
        ))),
    }
}

/// `F(d) = ||grad_p L(p_fixed, d)||_2^2`, the squared norm of the exact
/// analytic weight-space gradient.
pub fn grad_norm_objective(p_fixed: &ParamVector, d: &Dataset) -> Result<f64> {
    let kind = check_forgeable(p_fixed, d)?;
    let g = p_fixed.grad(kind, d)?;
    Ok(g.iter().map(|v| v * v).sum())
}

fn objective_at(p: &ParamVector, template: &Dataset, coords: &[f64]) -> Result<f64> {
    let dim = template.dim();
    let xs: Vec<Vec<f64>> = coords.chunks(dim).map(|c| c.to_vec()).collect();
    grad_norm_objective(p, &template.with_inputs(xs)?)
}

/// Data-space gradient descent on [`grad_norm_objective`].
///
/// Iterates `d <- d - step * grad_d F` with `grad_d F` by central finite
/// differences over all data coordinates, halving the step on objective
/// increase (reset each iteration). Stops when `F < target_gradnorm^2`,
/// the iteration budget runs out, or no decrease is possible at the
/// smallest step; the result is flagged rather than an error. The final
/// `(p_fixed, dataset)` pair is classified spectrally and the certificate
/// attached.
pub fn forge(p_fixed: &ParamVector, d0: &Dataset, cfg: &ForgeConfig) -> Result<ForgeResult> {
    cfg.validate()?;
    let kind = check_forgeable(p_fixed, d0)?;
    let target_sq = cfg.target_gradnorm * cfg.target_gradnorm;

    let mut coords = d0.flat_inputs();
    let mut f = objective_at(p_fixed, d0, &coords)?;
    let mut trace = vec![f];
    let mut iterations = 0;

    while f >= target_sq && iterations < cfg.max_iters {
        iterations += 1;
        // central FD gradient of F over the data coordinates
        let mut g = vec![0.0; coords.len()];
        for i in 0..coords.len() {
            let saved = coords[i];
            coords[i] = saved + cfg.fd_step;
            let fp = objective_at(p_fixed, d0, &coords)?;
            coords[i] = saved - cfg.fd_step;
            let fm = objective_at(p_fixed, d0, &coords)?;
            coords[i] = saved;
            g[i] = (fp - fm) / (2.0 * cfg.fd_step);
        }

        let mut step = cfg.step_size;
        let mut accepted = false;
        let mut candidate = vec![0.0; coords.len()];
        for _ in 0..80 {
            for (c, (x, gi)) in candidate.iter_mut().zip(coords.iter().zip(&g)) {
                *c = x - step * gi;
            }
            let fc = objective_at(p_fixed, d0, &candidate)?;
            if fc < f {
                coords.copy_from_slice(&candidate);
                f = fc;
                trace.push(f);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // no decrease at any step size: stalled at a local minimum of F
            break;
        }
    }

    let dim = d0.dim();
    let dataset = d0.with_inputs(coords.chunks(dim).map(|c| c.to_vec()).collect())?;
    let certificate = classify_critical_default(p_fixed, &dataset, kind)?;
    Ok(ForgeResult {
        final_gradnorm: f.sqrt(),
        converged: f < target_sq,
        objective_trace: trace,
        iterations,
        dataset,
        certificate,
    })
}

/// Empirical minimality probe: loss evaluated along random unit
/// directions and single coordinates at the given radius.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub n_directions: usize,
    pub radius: f64,
    /// Directions with `loss(p + radius*u) < loss(p) - 1e-12`.
    pub descending_directions: usize,
    pub descending_fraction: f64,
    /// Of the `2n` one-sided coordinate probes, how many descend.
    pub descending_coordinates: usize,
}

/// Probes `loss` around `p` along `n_directions` seeded random unit
/// directions plus every signed coordinate direction. For a genuine local
/// minimum at a radius below its basin scale, no probe descends.
pub fn escape_probe(
    p: &ParamVector,
    d: &Dataset,
    n_directions: usize,
    radius: f64,
    seed: u64,
) -> Result<ProbeReport> {
    let kind = p.natural_loss_kind();
    let loss0 = p.loss(kind, d)?;
    let flat = p.flatten();
    let n = flat.len();
    let mut rng = SplitMix64::new(seed);

    let probe = |direction: &[f64]| -> Result<bool> {
        let moved: Vec<f64> =
            flat.iter().zip(direction).map(|(x, u)| x + radius * u).collect();
        let loss = p.with_flat(&moved)?.loss(kind, d)?;
        Ok(loss < loss0 - 1e-12)
    };

    let mut descending_directions = 0;
    for _ in 0..n_directions {
        let u = rng.next_unit_vector(n);
        if probe(&u)? {
            descending_directions += 1;
        }
    }
    let mut descending_coordinates = 0;
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = sign;
            if probe(&e)? {
                descending_coordinates += 1;
            }
        }
    }
    Ok(ProbeReport {
        n_directions,
        radius,
        descending_directions,
        descending_fraction: if n_directions == 0 {
            0.0
        } else {
            descending_directions as f64 / n_directions as f64
        },
        descending_coordinates,
    })
}
