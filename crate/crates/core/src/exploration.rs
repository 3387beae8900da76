//! Motor babbling policy and the sampling loop that records the agent's
//! experience.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bounds::reflect;
use crate::rng::{stream, Stream};
use crate::wallworld::{Latent, LatentState, WorldConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Reflect,
    Clamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    /// Step scale of the Gaussian random walk over the motor angle.
    pub sigma_m: f64,
    pub boundary: Boundary,
}

impl Default for PolicyConfig {
    /// The walk mixes across the motor range within a few steps. A slower
    /// walk makes motor position, not the wall, the slowest mode of the
    /// transition graph.
    fn default() -> Self {
        Self { sigma_m: 1.0, boundary: Boundary::Reflect }
    }
}

/// One step of the motor random walk, kept inside `[m_min, m_max]`.
pub fn step_policy<R: Rng + ?Sized>(m: f64, cfg: &PolicyConfig, m_min: f64, m_max: f64, rng: &mut R) -> f64 {
    let draw: f64 = StandardNormal.sample(rng);
    bound(m + cfg.sigma_m * draw, cfg.boundary, m_min, m_max)
}

fn bound(m: f64, boundary: Boundary, lo: f64, hi: f64) -> f64 {
    match boundary {
        Boundary::Reflect => reflect(m, lo, hi),
        Boundary::Clamp => m.clamp(lo, hi),
    }
}

/// A point in the joint motor-sensor plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub m: f64,
    pub s: f64,
}

/// One time step of experience plus the ground truth that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRecord {
    pub t: usize,
    pub m: f64,
    pub s: f64,
    pub latent: LatentState,
    /// Index into the discrete latent set; `None` in continuous worlds.
    pub latent_id: Option<usize>,
}

impl SampleRecord {
    pub fn observation(&self) -> Observation {
        Observation { m: self.m, s: self.s }
    }
}

/// Time-ordered experience log. Learning code only ever sees
/// [`SampleLog::observations`]; the latent fields are for scoring.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleLog {
    records: Vec<SampleRecord>,
}

impl SampleLog {
    pub fn records(&self) -> &[SampleRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn observations(&self) -> Vec<Observation> {
        self.records.iter().map(SampleRecord::observation).collect()
    }

    /// Splits into the first `n` records and the rest; the second log keeps
    /// its original time indices.
    pub fn split_at(&self, n: usize) -> (&[SampleRecord], &[SampleRecord]) {
        self.records.split_at(n.min(self.records.len()))
    }
}

/// Runs the coupled motor/wall loop for `n_steps` steps.
pub fn collect(n_steps: usize, world: &WorldConfig, policy: &PolicyConfig, seed: u64) -> SampleLog {
    let mut init_rng = stream(seed, Stream::Init);
    let mut policy_rng = stream(seed, Stream::Policy);
    let mut latent_rng = stream(seed, Stream::Latent);
    let mut noise_rng = stream(seed, Stream::SensorNoise);

    let mut m = 0.5 * (world.m_min + world.m_max);
    let mut latent: Latent = world.initial_latent(&mut init_rng);
    let mut records = Vec::with_capacity(n_steps);
    for t in 0..n_steps {
        if t > 0 {
            m = step_policy(m, policy, world.m_min, world.m_max, &mut policy_rng);
            latent = world.step_latent(&latent, &mut latent_rng);
        }
        let s = world.sense_noisy(m, &latent.state, &mut noise_rng);
        records.push(SampleRecord { t, m, s, latent: latent.state, latent_id: latent.id });
    }
    SampleLog { records }
}
