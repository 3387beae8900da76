//! End-to-end experiment: explore, discretize, build the transition graph,
//! partition it, and score the partition.

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::discretizer::{self, PrototypeSet};
use crate::error::Result;
use crate::evaluation::{self, ContextModels, EntropyReport, PredictionAccuracy, ScoreReport};
use crate::exploration::{collect, SampleLog, SampleRecord};
use crate::kmeans::KMeansParams;
use crate::rng::GENERATOR;
use crate::spectral::{self, ContextPartition, SpectralEmbedding};
use crate::transition_graph::{build_matrix, dedup_runs, lift, Lifted, StateSequence, TransitionMatrix};

/// Ground truth attached to one element of the collapsed sequence the graph
/// was built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Occurrence {
    pub state: usize,
    /// Discrete latent id when the element was entered.
    pub label: Option<usize>,
    /// Wall distance when the element was entered.
    pub d: f64,
    /// The latent state stayed fixed for the whole element.
    pub clean: bool,
}

/// Everything one run produces, in memory.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub log: SampleLog,
    pub prototypes: PrototypeSet,
    /// Collapsed prototype sequence of the transition phase.
    pub prototype_sequence: StateSequence,
    pub lifted: Option<Lifted>,
    /// The matrix that was partitioned (over pair states when lifted).
    pub matrix: TransitionMatrix,
    pub embedding: SpectralEmbedding,
    pub partition: ContextPartition,
    pub models: ContextModels,
    pub occurrences: Vec<Occurrence>,
    pub entropy: EntropyReport,
    pub prediction: PredictionAccuracy,
    pub scores: ScoreReport,
    /// Purity of plain K-means with `k` clusters on the raw transition-phase
    /// samples, for discrete-latent worlds.
    pub baseline_kmeans_purity: Option<f64>,
}

impl RunOutput {
    pub fn holdout_seed(&self) -> u64 {
        holdout_seed(self.config.seed)
    }

    pub fn report(&self) -> RunReport<'_> {
        RunReport {
            experiment: self.config.experiment.to_string(),
            seed: self.config.seed,
            holdout_seed: self.holdout_seed(),
            generator: GENERATOR,
            lifted: self.config.lifted,
            symmetrize: self.config.symmetrize,
            r: self.prototypes.len(),
            k: self.partition.k(),
            n_states: self.matrix.n(),
            n_visited: self.embedding.visited.len(),
            n_transitions: self.matrix.total_count(),
            eigenvalues: self.embedding.eigenvalues.clone(),
            scores: self.scores.clone(),
            baseline_kmeans_purity: self.baseline_kmeans_purity,
            prediction_scored: self.prediction.scored,
            context_occupancy: self.models.occupancy.clone(),
            metrics: METRICS_NOTE,
            config: &self.config,
        }
    }
}

/// Serialized summary of a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport<'a> {
    pub experiment: String,
    pub seed: u64,
    pub holdout_seed: u64,
    pub generator: &'static str,
    pub lifted: bool,
    pub symmetrize: bool,
    pub r: usize,
    pub k: usize,
    pub n_states: usize,
    pub n_visited: usize,
    pub n_transitions: u64,
    pub eigenvalues: Vec<f64>,
    #[serde(flatten)]
    pub scores: ScoreReport,
    pub baseline_kmeans_purity: Option<f64>,
    pub prediction_scored: usize,
    pub context_occupancy: Vec<f64>,
    pub metrics: &'static str,
    pub config: &'a ExperimentConfig,
}

const METRICS_NOTE: &str = "purity, band_spread, entropies and prediction accuracies are evaluation \
instrumentation scored against the simulator's ground truth; the agent never sees it";

/// Seed of the held-out log used for prediction scoring.
pub fn holdout_seed(seed: u64) -> u64 {
    seed.wrapping_add(1)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let world = cfg.world();
    let policy = cfg.policy();

    let log = collect(cfg.n_explore + cfg.n_transition, &world, &policy, cfg.seed);
    let (explore, transition) = log.split_at(cfg.n_explore);
    let explore_obs: Vec<_> = explore.iter().map(SampleRecord::observation).collect();
    let params = KMeansParams { restarts: cfg.kmeans_restarts, ..KMeansParams::new(cfg.r) };
    let prototypes = discretizer::fit_with(&explore_obs, &params, cfg.seed)?;

    let raw_ids: Vec<usize> = transition.iter().map(|r| prototypes.classify(&r.observation())).collect();
    let (prototype_sequence, starts) = dedup_runs(&raw_ids);

    let (lifted, matrix, graph_sequence) = if cfg.lifted {
        let lifted = lift(&prototype_sequence)?;
        let matrix = lifted.matrix.clone();
        let seq = lifted.sequence.clone();
        (Some(lifted), matrix, seq)
    } else {
        (None, build_matrix(&prototype_sequence, prototypes.len())?, prototype_sequence.clone())
    };

    let embedding = spectral::embed(&matrix, cfg.k, cfg.symmetrize)?;
    let cluster_params = KMeansParams { restarts: cfg.kmeans_restarts, ..KMeansParams::new(cfg.k) };
    let partition = spectral::cluster_with(&embedding, &cluster_params, cfg.seed)?;
    let models = evaluation::fit_context_models(&graph_sequence, &partition)?;
    let entropy = evaluation::entropy_report(&matrix, &models);
    let cut_value = spectral::cut_value(&matrix, &partition)?;

    let occurrences = occurrences(transition, &graph_sequence, &starts, cfg.lifted);

    // held-out log from a fresh seed, mapped through the learned states
    let holdout_log = collect(cfg.n_transition, &world, &policy, holdout_seed(cfg.seed));
    let holdout_ids: Vec<usize> = holdout_log.records().iter().map(|r| prototypes.classify(&r.observation())).collect();
    let (holdout_protos, _) = dedup_runs(&holdout_ids);
    let holdout: Vec<Option<usize>> = match &lifted {
        Some(l) => l.index.map_sequence(&holdout_protos),
        None => holdout_protos.ids().iter().map(|&s| Some(s)).collect(),
    };
    let prediction = evaluation::prediction_accuracy(&holdout, &matrix, &models, &partition);

    let discrete = world.latent_states().is_some();
    let (purity, purity_clean, band_spread, baseline_kmeans_purity) = if discrete {
        let all: Vec<(usize, Option<usize>)> = occurrences.iter().map(|o| (o.state, o.label)).collect();
        let clean: Vec<(usize, Option<usize>)> = occurrences.iter().filter(|o| o.clean).map(|o| (o.state, o.label)).collect();
        let baseline = baseline_purity(&explore_obs, transition, cfg)?;
        (
            Some(evaluation::purity(&partition, &all)?),
            Some(evaluation::purity(&partition, &clean)?),
            None,
            Some(baseline),
        )
    } else {
        let ds: Vec<(usize, f64)> = occurrences.iter().map(|o| (o.state, o.d)).collect();
        (None, None, Some(evaluation::band_spread(&partition, &ds)), None)
    };

    let scores = ScoreReport {
        purity,
        purity_clean,
        band_spread,
        marginal_entropy: entropy.marginal_entropy,
        posterior_entropy: entropy.posterior_entropy,
        entropy_reduction: entropy.entropy_reduction,
        prediction_accuracy_marginal: prediction.marginal,
        prediction_accuracy_contextual: prediction.contextual,
        cut_value,
    };

    Ok(RunOutput {
        config: cfg.clone(),
        log,
        prototypes,
        prototype_sequence,
        lifted,
        matrix,
        embedding,
        partition,
        models,
        occurrences,
        entropy,
        prediction,
        scores,
        baseline_kmeans_purity,
    })
}

/// Attaches ground truth to each element of the graph sequence. A prototype
/// element spans its run of raw samples; a pair element spans from the start
/// of its first run to the start of its second.
fn occurrences(records: &[SampleRecord], graph_sequence: &StateSequence, starts: &[usize], lifted: bool) -> Vec<Occurrence> {
    let constant = |from: usize, to: usize| records[from..=to].windows(2).all(|w| w[0].latent == w[1].latent);
    graph_sequence
        .ids()
        .iter()
        .enumerate()
        .map(|(i, &state)| {
            let (from, entry, to) = if lifted {
                (starts[i], starts[i + 1], starts[i + 1])
            } else {
                let end = starts.get(i + 1).map_or(records.len() - 1, |&s| s - 1);
                (starts[i], starts[i], end)
            };
            Occurrence {
                state,
                label: records[entry].latent_id,
                d: records[entry].latent.d,
                clean: constant(from, to),
            }
        })
        .collect()
}

/// Plain K-means with `k` clusters in the sensorimotor plane, scored on the
/// raw transition-phase samples.
fn baseline_purity(explore: &[crate::exploration::Observation], transition: &[SampleRecord], cfg: &ExperimentConfig) -> Result<f64> {
    let params = KMeansParams { restarts: cfg.kmeans_restarts, ..KMeansParams::new(cfg.k) };
    let clusters = discretizer::fit_with(explore, &params, cfg.seed)?;
    let identity = ContextPartition::new((0..clusters.len()).map(Some).collect(), clusters.len());
    let occ: Vec<(usize, Option<usize>)> = transition
        .iter()
        .map(|r| (clusters.classify(&r.observation()), r.latent_id))
        .collect();
    evaluation::purity(&identity, &occ)
}
