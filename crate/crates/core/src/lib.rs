//! Discovery of latent sensorimotor contexts.
//!
//! A simulated agent sweeps a distance sensor across a wall whose pose
//! changes now and then. Sensorimotor samples are discretized into
//! prototypes, the prototype sequence becomes a Markov transition graph, and
//! a spectral partition of that graph recovers the hidden wall poses as
//! contexts.

mod bounds;

pub mod artifacts;
pub mod config;
pub mod discretizer;
pub mod error;
pub mod evaluation;
pub mod exploration;
pub mod kmeans;
pub mod pipeline;
pub mod rng;
pub mod spectral;
pub mod transition_graph;
pub mod wallworld;

pub use config::{Experiment, ExperimentConfig};
pub use discretizer::PrototypeSet;
pub use error::{Error, Result};
pub use evaluation::{ContextModels, ScoreReport};
pub use exploration::{collect, Observation, PolicyConfig, SampleLog, SampleRecord};
pub use pipeline::{run_experiment, RunOutput};
pub use spectral::{ContextPartition, SpectralEmbedding};
pub use transition_graph::{StateSequence, TransitionMatrix};
pub use wallworld::{LatentState, WorldConfig};
