use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use ghz_qkd::channel::{ChannelModel, EveStrategy};
use ghz_qkd::config::{load_config, ConfigSource};
use ghz_qkd::experiment::{simulate, Execution};
use ghz_qkd::protocol::{run_round, ProtocolKind};
use ghz_qkd::streams::RoundStreams;
use std::hint::black_box;

fn rounds(c: &mut Criterion) {
    let mut group = c.benchmark_group("round");
    for kind in ProtocolKind::ALL {
        let mut i = 0u64;
        group.bench_function(kind.to_string(), |b| {
            b.iter(|| {
                i += 1;
                let streams = RoundStreams { seed: 1, trial: 0, round: i };
                black_box(run_round(kind, i, ChannelModel::IDEAL, &EveStrategy::None, &streams).unwrap())
            })
        });
    }
    group.finish();
}

fn trials(c: &mut Criterion) {
    let mut group = c.benchmark_group("trials");
    group.sample_size(10);
    for protocol in ["bb84", "mks", "mkc"] {
        let text = format!("protocol = \"{protocol}\"\nrounds = 2000\ntrials = 64\nseed = 5\neve = \"intercept\"\n");
        let config = load_config(&ConfigSource::Inline(text)).unwrap();
        group.throughput(Throughput::Elements(config.trials * config.rounds));
        for (name, execution) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            group.bench_with_input(BenchmarkId::new(name, protocol), &config, |b, config| {
                b.iter(|| black_box(simulate(config, execution, false).unwrap().stats))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, rounds, trials);
criterion_main!(benches);
