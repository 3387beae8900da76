use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use smcontext::discretizer;
use smcontext::kmeans::{self, KMeansParams};
use smcontext::spectral;
use smcontext::transition_graph::{build_matrix, dedup, lift};
use smcontext::{collect, run_experiment, Experiment, ExperimentConfig, Observation};

fn sim_log(experiment: Experiment, n: usize) -> (ExperimentConfig, Vec<Observation>) {
    let cfg = ExperimentConfig::preset(experiment);
    let log = collect(n, &cfg.world(), &cfg.policy(), cfg.seed);
    (cfg, log.observations())
}

fn bench_kmeans(c: &mut Criterion) {
    let (_, obs) = sim_log(Experiment::Sim1, 20_000);
    let flat: Vec<f64> = obs.iter().flat_map(|o| [o.m, o.s]).collect();
    let mut g = c.benchmark_group("kmeans");
    g.sample_size(10);
    g.bench_function("r100_n20000_single_restart", |b| {
        let params = KMeansParams { restarts: 1, ..KMeansParams::new(100) };
        b.iter(|| kmeans::fit(&flat, 2, &params, 1).unwrap())
    });
    g.finish();
}

fn bench_embed(c: &mut Criterion) {
    let (cfg, obs) = sim_log(Experiment::Sim3, 70_000);
    let protos = discretizer::fit(&obs[..cfg.n_explore], cfg.r, cfg.seed).unwrap();
    let seq = dedup(&protos.classify_all(&obs[cfg.n_explore..]));
    let flat = build_matrix(&seq, cfg.r).unwrap();
    let lifted = lift(&seq).unwrap();

    let mut g = c.benchmark_group("embed");
    g.sample_size(10);
    g.bench_function("dense_r100_k6", |b| b.iter(|| spectral::embed(&flat, 6, true).unwrap()));
    g.bench_function(format!("lanczos_pairs{}_k6", lifted.matrix.n()), |b| {
        b.iter(|| spectral::embed(&lifted.matrix, 6, true).unwrap())
    });
    g.finish();
}

fn bench_pipeline(c: &mut Criterion) {
    let mut g = c.benchmark_group("pipeline");
    g.sample_size(10);
    for experiment in [Experiment::Sim1, Experiment::Sim3] {
        g.bench_function(experiment.to_string(), |b| {
            b.iter_batched(
                || ExperimentConfig::preset(experiment),
                |cfg| run_experiment(&cfg).unwrap(),
                BatchSize::PerIteration,
            )
        });
    }
    g.finish();
}

criterion_group!(benches, bench_kmeans, bench_embed, bench_pipeline);
criterion_main!(benches);
