//! Proof benchmarks over the bundled configurations.

use criterion::{criterion_group, criterion_main, Criterion};
use nba::breefs::{prove, DEFAULT_SEED};
use nba::construct::{parse_config, random_instance, Configuration};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn load(name: &str) -> Configuration {
    let path = format!("{}/../../configs/{name}.nba", env!("CARGO_MANIFEST_DIR"));
    parse_config(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn bench_proofs(c: &mut Criterion) {
    let mut group = c.benchmark_group("prove");
    group.sample_size(10);
    for name in [
        "three-circles",
        "secants",
        "triangle-circles",
        "miquel4",
        "miquel5",
    ] {
        let cfg = load(name);
        group.bench_function(name, |b| {
            b.iter(|| prove(&cfg, 1, DEFAULT_SEED).unwrap())
        });
    }
    group.finish();
}

fn bench_instances(c: &mut Criterion) {
    let cfg = load("miquel5");
    c.bench_function("random-instance/miquel5", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
        b.iter(|| random_instance(&cfg, &mut rng, 500).unwrap())
    });
}

criterion_group!(benches, bench_proofs, bench_instances);
criterion_main!(benches);
