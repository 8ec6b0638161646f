use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wavetrace_bench::cornell_workload;
use wavetrace_core::{make_integrator, Film, IntegratorKind};

fn frames(c: &mut Criterion) {
    let mut group = c.benchmark_group("frame");
    group.sample_size(20);
    for nee in [false, true] {
        let (scene, config) = cornell_workload(64, 5, nee);
        for kind in IntegratorKind::ALL {
            let mut integrator = make_integrator(kind, &config);
            let mut film = Film::new(64, 64);
            let id = BenchmarkId::new(kind.name(), if nee { "nee" } else { "pt" });
            group.bench_function(id, |b| {
                let mut s = 0;
                b.iter(|| {
                    integrator.render_frame(&scene, &mut film, s).unwrap();
                    s += 1;
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, frames);
criterion_main!(benches);
