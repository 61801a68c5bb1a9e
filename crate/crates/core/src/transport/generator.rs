//! Random transport instances with known structure.

use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::{hungarian, DiscreteMeasure, TransportInstance};
use crate::cost::CostFunction;
use crate::error::{usage, Error, Result};
use crate::group::{GroupModel, GroupPoint, HorizontalVector};
use crate::sampling::{sample_rng, uniform_disc};

const MAX_RESAMPLES: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InstanceMode {
    /// `nu` is the image of `mu` under `g -> g exp(w0)`, with `mu` on one
    /// horizontal line parallel to `w0`.
    Pushforward,
    /// `mu` on a horizontal line; each `nu` atom either on that line or on
    /// the horizontal plane of one `mu` atom only. Resampled until the
    /// restricted optimum also solves the problem with every cell admitted.
    RandomHorizontal,
    /// A pushforward instance with one `nu` atom lifted off every
    /// horizontal plane of `mu`.
    Adversarial,
}

impl FromStr for InstanceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pushforward" => Ok(InstanceMode::Pushforward),
            "random-horizontal" => Ok(InstanceMode::RandomHorizontal),
            "adversarial" => Ok(InstanceMode::Adversarial),
            other => Err(usage(format!("unknown instance mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub instance: TransportInstance,
    /// A plan known to be optimal, as `mu index -> nu index`.
    pub generator_map: Option<Vec<usize>>,
    /// The horizontal shift of pushforward instances.
    pub shift: Option<HorizontalVector>,
    /// Atom lifted off the horizontal planes in adversarial mode.
    pub isolated_nu: Option<usize>,
}

/// `nu = (g -> g exp(w0))_# mu`.
pub fn generate_pushforward(mu: &DiscreteMeasure, w0: HorizontalVector) -> Result<DiscreteMeasure> {
    DiscreteMeasure::new(
        mu.atoms()
            .iter()
            .map(|(g, w)| (g.translate_horizontal(w0), *w))
            .collect(),
    )
}

/// Points `base exp(s_k dir)` for `n` distinct sorted parameters in
/// `[-1, 1]`, shuffled.
fn line_points<R: Rng>(rng: &mut R, n: usize) -> (Vec<GroupPoint>, HorizontalVector) {
    let base = GroupModel::Heisenberg
        .point(&[
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ])
        .expect("finite coordinates");
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    let dir = HorizontalVector::new(theta.cos(), theta.sin());
    // Stratified parameters keep atoms well separated.
    let mut params: Vec<f64> = (0..n)
        .map(|k| -1.0 + (2.0 * k as f64 + rng.gen_range(0.2..0.8)) / n as f64)
        .collect();
    params.shuffle(rng);
    (
        params.iter().map(|s| base.translate_horizontal(dir * *s)).collect(),
        dir,
    )
}

/// Maximizer of `sum C_{i sigma(i)}` over permutations, as `sigma`.
fn best_assignment(profits: &[Vec<Option<f64>>]) -> Option<Vec<usize>> {
    let cost: Vec<Vec<Option<f64>>> = profits
        .iter()
        .map(|row| row.iter().map(|c| c.map(|c| -c)).collect())
        .collect();
    hungarian::solve_min(&cost).map(|a| a.row_to_col)
}

fn total(profits: &[Vec<Option<f64>>], sigma: &[usize]) -> f64 {
    sigma
        .iter()
        .enumerate()
        .map(|(i, &j)| profits[i][j].unwrap_or(f64::NEG_INFINITY))
        .sum()
}

/// Generates a uniform `n x n` Heisenberg instance.
pub fn generate_instance(
    n: usize,
    seed: u64,
    mode: InstanceMode,
    cost: Arc<dyn CostFunction>,
) -> Result<GeneratedInstance> {
    if n == 0 {
        return Err(usage("instances need at least one atom"));
    }
    match mode {
        InstanceMode::Pushforward | InstanceMode::Adversarial => {
            let mut rng = sample_rng(seed, 0);
            let (points, dir) = line_points(&mut rng, n);
            let w0 = dir * rng.gen_range(0.1..1.0);
            let mu = DiscreteMeasure::uniform(points)?;
            let mut nu_points: Vec<GroupPoint> = mu.atoms().iter().map(|(g, _)| g.translate_horizontal(w0)).collect();
            let mut isolated_nu = None;
            if mode == InstanceMode::Adversarial {
                let k = rng.gen_range(0..n);
                let c = nu_points[k].coords();
                nu_points[k] = GroupModel::Heisenberg
                    .point(&[c[0], c[1], c[2] + 1.0])
                    .expect("finite coordinates");
                isolated_nu = Some(k);
            }
            let nu = DiscreteMeasure::uniform(nu_points)?;
            let instance = TransportInstance::new(mu, nu, cost)?;
            let generator_map = (mode == InstanceMode::Pushforward).then(|| (0..n).collect());
            Ok(GeneratedInstance {
                instance,
                generator_map,
                shift: Some(w0),
                isolated_nu,
            })
        }
        InstanceMode::RandomHorizontal => {
            for attempt in 0..MAX_RESAMPLES {
                let mut rng = sample_rng(seed, attempt);
                let (points, dir) = line_points(&mut rng, n);
                let nu_points: Vec<GroupPoint> = points
                    .iter()
                    .map(|g| {
                        if rng.gen_bool(0.5) {
                            g.translate_horizontal(dir * rng.gen_range(-0.6..0.6))
                        } else {
                            g.translate_horizontal(uniform_disc(&mut rng, 0.6))
                        }
                    })
                    .collect();
                let mu = DiscreteMeasure::uniform(points)?;
                let nu = DiscreteMeasure::uniform(nu_points)?;
                if mu.len() != n || nu.len() != n {
                    continue;
                }
                let instance = TransportInstance::new(mu, nu, cost.clone())?;
                let restricted = instance.profit_matrix();
                let relaxed: Vec<Vec<Option<f64>>> = (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| Some(cost.eval(&instance.mu.point(i), instance.nu.point(j).horizontal())))
                            .collect()
                    })
                    .collect();
                let (Some(sigma), Some(sigma_relaxed)) = (best_assignment(&restricted), best_assignment(&relaxed))
                else {
                    continue;
                };
                let value = total(&restricted, &sigma);
                let relaxed_value = total(&relaxed, &sigma_relaxed);
                if (value - relaxed_value).abs() <= 1e-12 * relaxed_value.abs().max(1.0) {
                    return Ok(GeneratedInstance {
                        instance,
                        generator_map: Some(sigma),
                        shift: None,
                        isolated_nu: None,
                    });
                }
            }
            Err(usage(format!(
                "no random-horizontal instance of size {n} found for seed {seed}"
            )))
        }
    }
}
