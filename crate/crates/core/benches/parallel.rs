//! Sequential against rayon execution for the three hot loops: mini-batch
//! gradients, the forecast pipeline and MCS evaluation.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fallpred::classifier::ClassifierParams;
use fallpred::dataset::{synth_corpus, CorpusSpec};
use fallpred::exec::Execution;
use fallpred::pipeline::{prepare_segments, run_forecast_pipeline, PipelineConfig};
use fallpred::predictor::{batch_gradient, evaluate_mcs, make_training_windows, PredictorConfig, PredictorParams};
use fallpred::vectorize::PoseVectorSequence;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn segments() -> Vec<PoseVectorSequence> {
    let spec = CorpusSpec {
        count: 8,
        duration: 200,
        ..CorpusSpec::default()
    };
    let corpus = synth_corpus(&spec, Execution::Parallel).expect("synthetic corpus");
    let tracks: Vec<_> = corpus.into_iter().map(|v| v.sequence).collect();
    prepare_segments(&tracks)
}

fn config() -> PredictorConfig {
    PredictorConfig {
        hidden_size: 64,
        ..PredictorConfig::default()
    }
}

fn bench_batch_gradient(c: &mut Criterion) {
    let segs = segments();
    let cfg = config();
    let params = PredictorParams::init(&cfg, 0);
    let windows = make_training_windows(&segs, &cfg);
    let batch: Vec<_> = windows.iter().step_by(7).take(32).copied().collect();
    let mut group = c.benchmark_group("batch_gradient");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| batch_gradient(&params, &cfg, black_box(&batch), exec).expect("gradient"))
        });
    }
    group.finish();
}

fn bench_forecast_pipeline(c: &mut Criterion) {
    let segs = segments();
    let cfg = config();
    let predictor = PredictorParams::init(&cfg, 0);
    let classifier = ClassifierParams::init(0);
    let mut group = c.benchmark_group("forecast_pipeline");
    group.sample_size(10);
    for (name, exec) in MODES {
        let pc = PipelineConfig {
            predictor: cfg,
            emit_unknowns: false,
            execution: exec,
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_forecast_pipeline(&predictor, &classifier, &pc, black_box(&segs)).expect("verdicts"))
        });
    }
    group.finish();
}

fn bench_mcs(c: &mut Criterion) {
    let segs = segments();
    let cfg = config();
    let params = PredictorParams::init(&cfg, 0);
    let windows: Vec<_> = make_training_windows(&segs, &cfg).into_iter().step_by(5).collect();
    let mut group = c.benchmark_group("evaluate_mcs");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| evaluate_mcs(&params, &cfg, black_box(&windows), exec).expect("mcs"))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_batch_gradient, bench_forecast_pipeline, bench_mcs);
criterion_main!(benches);
