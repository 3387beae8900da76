//! Vector quantization of the sensorimotor plane into prototype states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exploration::Observation;
use crate::kmeans::{self, KMeansParams};

/// Per-axis min-max normalization fitted on training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub m_offset: f64,
    pub m_span: f64,
    pub s_offset: f64,
    pub s_span: f64,
}

impl Scaling {
    pub fn fit(samples: &[Observation]) -> Self {
        let (mut m_lo, mut m_hi, mut s_lo, mut s_hi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for o in samples {
            m_lo = m_lo.min(o.m);
            m_hi = m_hi.max(o.m);
            s_lo = s_lo.min(o.s);
            s_hi = s_hi.max(o.s);
        }
        // a constant axis keeps unit span so normalization stays finite
        let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
        Self { m_offset: m_lo, m_span: span(m_lo, m_hi), s_offset: s_lo, s_span: span(s_lo, s_hi) }
    }

    pub fn normalize(&self, o: &Observation) -> [f64; 2] {
        [(o.m - self.m_offset) / self.m_span, (o.s - self.s_offset) / self.s_span]
    }

    pub fn denormalize(&self, p: &[f64]) -> Observation {
        Observation { m: p[0] * self.m_span + self.m_offset, s: p[1] * self.s_span + self.s_offset }
    }
}

/// The discrete sensorimotor state set: `r` prototypes in the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeSet {
    /// Row-major normalized centers, two columns.
    normalized: Vec<f64>,
    pub scaling: Scaling,
    pub inertia: f64,
}

impl PrototypeSet {
    pub fn len(&self) -> usize {
        self.normalized.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.normalized.is_empty()
    }

    /// Prototype positions in raw (unnormalized) coordinates.
    pub fn centers(&self) -> Vec<Observation> {
        self.normalized.chunks_exact(2).map(|c| self.scaling.denormalize(c)).collect()
    }

    /// Nearest prototype in normalized coordinates, lowest index on ties.
    pub fn classify(&self, point: &Observation) -> usize {
        kmeans::nearest(&self.scaling.normalize(point), &self.normalized, 2)
    }

    pub fn classify_all(&self, points: &[Observation]) -> Vec<usize> {
        points.iter().map(|p| self.classify(p)).collect()
    }
}

/// Fits `r` prototypes with the default K-means schedule.
pub fn fit(samples: &[Observation], r: usize, seed: u64) -> Result<PrototypeSet> {
    fit_with(samples, &KMeansParams::new(r), seed)
}

pub fn fit_with(samples: &[Observation], params: &KMeansParams, seed: u64) -> Result<PrototypeSet> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if params.k < 2 {
        return Err(Error::InvalidConfig(vec!["r >= 2 required".into()]));
    }
    let scaling = Scaling::fit(samples);
    let flat: Vec<f64> = samples.iter().flat_map(|o| scaling.normalize(o)).collect();
    let fit = kmeans::fit(&flat, 2, params, seed)?;
    Ok(PrototypeSet { normalized: fit.centers, scaling, inertia: fit.inertia })
}
