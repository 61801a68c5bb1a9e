//! Sampling regions and horizontal moves with per-sample deterministic
//! randomness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{usage, Result};
use crate::group::{GroupModel, GroupPoint, HorizontalVector};

/// Gauge radius used to draw points when the region is the whole group.
pub const WHOLE_GROUP_SAMPLING_RADIUS: f64 = 2.0;

/// Default radius of the `V_1` ball from which horizontal moves are drawn.
pub const DEFAULT_PLANE_RADIUS: f64 = 2.0;

/// A gauge ball or the whole group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Region {
    center: GroupPoint,
    radius: Option<f64>,
}

impl Region {
    pub fn whole(model: GroupModel) -> Self {
        Region {
            center: model.identity(),
            radius: None,
        }
    }

    pub fn ball(center: GroupPoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(usage(format!(
                "region radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Region {
            center,
            radius: Some(radius),
        })
    }

    pub fn model(&self) -> GroupModel {
        self.center.model()
    }

    pub fn center(&self) -> GroupPoint {
        self.center
    }

    pub fn radius(&self) -> Option<f64> {
        self.radius
    }

    pub fn contains(&self, g: &GroupPoint) -> bool {
        match self.radius {
            None => true,
            Some(r) => self.center.gauge_distance(g) <= r,
        }
    }

    fn sampling_radius(&self) -> f64 {
        self.radius.unwrap_or(WHOLE_GROUP_SAMPLING_RADIUS)
    }

    /// Draws a point of the region (of the default ball when the region is
    /// the whole group) by rejection from the enclosing coordinate box.
    pub fn sample_point<R: Rng>(&self, rng: &mut R) -> GroupPoint {
        let model = self.model();
        let r = self.sampling_radius();
        let degrees = model.coordinate_degrees();
        let mut buf = [0.0; 4];
        loop {
            for (c, deg) in buf.iter_mut().zip(degrees) {
                let half = r.powi(*deg as i32);
                *c = rng.gen_range(-half..=half);
            }
            let z = model.point(&buf[..degrees.len()]).expect("box samples are finite");
            if z.gauge_norm() <= r {
                return self.center.compose(&z);
            }
        }
    }

    /// Draws `w` uniformly from the `V_1` disc of radius `plane_radius` such
    /// that `g exp(w)` stays in the region. Falls back to shrinking `w`.
    pub fn sample_horizontal_move<R: Rng>(&self, g: &GroupPoint, plane_radius: f64, rng: &mut R) -> HorizontalVector {
        let mut w = uniform_disc(rng, plane_radius);
        for _ in 0..64 {
            if self.contains(&g.translate_horizontal(w)) {
                return w;
            }
            w = uniform_disc(rng, plane_radius);
        }
        for _ in 0..64 {
            w = w * 0.5;
            if self.contains(&g.translate_horizontal(w)) {
                return w;
            }
        }
        HorizontalVector::ZERO
    }
}

pub fn uniform_disc<R: Rng>(rng: &mut R, radius: f64) -> HorizontalVector {
    let rho = radius * rng.gen::<f64>().sqrt();
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    HorizontalVector::new(rho * theta.cos(), rho * theta.sin())
}

/// Sampling budget shared by the verifiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sampling {
    pub samples: usize,
    pub seed: u64,
    /// Radius of the `V_1` ball used to reach `H_g`.
    pub plane_radius: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            samples: 2000,
            seed: 0,
            plane_radius: DEFAULT_PLANE_RADIUS,
        }
    }
}

impl Sampling {
    pub fn new(samples: usize, seed: u64) -> Self {
        Sampling {
            samples,
            seed,
            ..Default::default()
        }
    }

    pub fn with_plane_radius(mut self, plane_radius: f64) -> Self {
        self.plane_radius = plane_radius;
        self
    }

    /// Plane radius for membership sample `index`. A quarter of the samples
    /// use the full radius; the rest cycle through radii shrunk by powers of
    /// ten down to `1e-6`, which resolves subgradients that are off by a
    /// small amount.
    pub fn membership_radius(&self, index: u64) -> f64 {
        match index % 8 {
            k @ 2..=7 => self.plane_radius * 10f64.powi(1 - k as i32),
            _ => self.plane_radius,
        }
    }
}

/// Generator for sample `index`; independent of evaluation order, so
/// parallel loops produce the same verdicts as sequential ones.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
