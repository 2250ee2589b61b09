//! Sequential versus parallel population evaluation.
//!
//! Without the `parallel` feature both modes run on one thread, which makes
//! this suite a quick check of the fallback's overhead as well.

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use pitl_core::attack::{AttackConfig, AttackRunner};
use pitl_core::functions::rosenbrock;
use pitl_core::optimizer::{minimize, MinimizeOptions};
use pitl_core::presets::{self, Preset};
use pitl_core::EvalMode;

const MODES: [(&str, EvalMode); 2] = [
    ("sequential", EvalMode::Sequential),
    ("parallel", EvalMode::Parallel),
];

fn attack_generation(c: &mut Criterion) {
    let mut group = c.benchmark_group("attack_generation");
    group.sample_size(20);
    for size in [32usize, 96] {
        let bundle = presets::generate(Preset::Locker, size, 1).unwrap();
        let scene = bundle.scene(presets::DEFAULT_GRID).unwrap();
        let config = AttackConfig::new(1, bundle.victim.clone());
        let victim = config.victim.instantiate(&scene).unwrap();
        for (label, mode) in MODES {
            group.bench_with_input(BenchmarkId::new(label, size), &mode, |b, &mode| {
                b.iter_batched(
                    || {
                        AttackRunner::new(config.clone(), &scene, victim.as_ref())
                            .unwrap()
                            .with_eval_mode(mode)
                    },
                    |mut runner| {
                        runner.step().unwrap();
                    },
                    BatchSize::SmallInput,
                )
            });
        }
    }
    group.finish();
}

fn minimize_rosenbrock(c: &mut Criterion) {
    let mut group = c.benchmark_group("minimize_rosenbrock");
    for n in [10usize, 100] {
        for (label, mode) in MODES {
            let opts = MinimizeOptions {
                max_generations: 50,
                eval_mode: mode,
                ..Default::default()
            };
            group.bench_with_input(BenchmarkId::new(label, n), &n, |b, &n| {
                b.iter(|| minimize(rosenbrock, vec![0.0; n], 0.5, 1, &opts).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, attack_generation, minimize_rosenbrock);
criterion_main!(benches);
