// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spinscale_core::exec::{map_ordered, Execution};
use spinscale_core::protocols::{magnetization_decay, stroboscopic_times, Dynamics};
use spinscale_core::sequence::{build_sequence, Direction, SequenceKind, SequenceSpec};
use spinscale_core::spin::{CouplingRule, SpinSystem};

/// Pulsed decay curves for a sweep of scaling factors, one cell per factor.
fn sweep(c: &mut Criterion) {
    let system = SpinSystem::random_cluster(7, 1.0, CouplingRule::DipolarAngular, 1).unwrap().normalized_to(1e4).unwrap();
    let deltas = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8];
    let mut group = c.benchmark_group("delta_sweep");
    group.sample_size(10);
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel(None))] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                map_ordered(exec, &deltas, |&delta| {
                    let seq = build_sequence(&SequenceSpec::new(SequenceKind::P8, delta, 2e-6, Direction::Forward)).unwrap();
                    let times = stroboscopic_times(seq.cycle_time, 40, 1);
                    magnetization_decay(&system, &Dynamics::pulsed(seq), &times).unwrap().values
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
