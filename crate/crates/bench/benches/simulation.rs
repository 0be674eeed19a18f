use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use std::hint::black_box;
use sticky_core::sim::{run_replication, AccumSpec, Accumulator, Functional, PathObserver, StepRecord};
use sticky_core::{Model, ModelParams, SimConfig};

struct Sink(f64);

impl PathObserver for Sink {
    fn observe(&mut self, s: &StepRecord) {
        self.0 += s.z[0] + s.dl[1];
    }
}

fn m0() -> Model {
    let id = [[1.0, 0.0], [0.0, 1.0]];
    ModelParams::new([-1.0, -1.0], id, id, [1.0, 1.0]).validate().unwrap()
}

fn simulation(c: &mut Criterion) {
    let m = m0();
    let cfg = SimConfig { dt: 1e-3, horizon: 100.0, burn_in: 0.0, replications: 1, ..Default::default() };
    let mut g = c.benchmark_group("simulation");
    g.throughput(Throughput::Elements(cfg.steps()));
    g.sample_size(20);
    g.bench_function("euler_steps_bare", |b| {
        b.iter(|| {
            let mut s = Sink(0.0);
            run_replication(&m, &cfg, 0, &mut s).unwrap();
            black_box(s.0)
        })
    });
    let spec = AccumSpec {
        functionals: vec![
            Functional { name: "axis1".into(), weights: [1.0, 0.0], extent: 6.0 },
            Functional { name: "sum".into(), weights: [1.0, 1.0], extent: 8.0 },
        ],
        survival_bins: 4000,
        theta: vec![[0.5, 0.5], [1.0, 0.0]],
        sample_spacing: Some(0.1),
        ..AccumSpec::minimal(&m, [4.0, 4.0])
    };
    g.bench_function("euler_steps_full_accumulator", |b| {
        b.iter(|| {
            let mut acc = Accumulator::new(spec.clone());
            run_replication(&m, &cfg, 0, &mut acc).unwrap();
            black_box(acc)
        })
    });
    g.finish();
}

criterion_group!(benches, simulation);
criterion_main!(benches);
