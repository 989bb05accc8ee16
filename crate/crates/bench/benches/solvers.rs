use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use concomitant::ops::sigma_update_full;
use concomitant::sbhcl::{bcd_epoch_sbhcl, SbhclState};
use concomitant::sgcl::{bcd_epoch_sgcl, SgclState};
use concomitant::{fit, SolverKind};
use concomitant_bench::{config_at, problem};

fn epochs(c: &mut Criterion) {
    let (x, y) = problem(120, 300, 30, 0);
    let mut group = c.benchmark_group("epoch");

    let cfg = config_at(SolverKind::Sbhcl, &x, &y, 0.2);
    let floors = cfg.sigma_floor.per_block_values(x.n_blocks()).unwrap();
    group.bench_function("sbhcl", |b| {
        b.iter_batched_ref(
            || SbhclState::new(&x, &y, x.block_sizes(), &floors, None, None, true).unwrap(),
            |s| bcd_epoch_sbhcl(s, &x, cfg.lambda),
            BatchSize::SmallInput,
        )
    });

    let cfg = config_at(SolverKind::Sgcl, &x, &y, 0.2);
    let floor = cfg.sigma_floor.scalar_value().unwrap();
    group.bench_function("sgcl", |b| {
        b.iter_batched_ref(
            || {
                let mut s = SgclState::new(&x, &y, floor, None, None).unwrap();
                s.refresh_noise(&x, &y, floor).unwrap();
                s
            },
            |s| bcd_epoch_sgcl(s, &x, cfg.lambda),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

fn noise_update(c: &mut Criterion) {
    let (_, y) = problem(120, 30, 30, 1);
    let floor = 1e-3;
    c.bench_function("sigma_update_full/n120_q30", |b| {
        b.iter(|| sigma_update_full(y.values(), floor).unwrap())
    });
}

fn full_fits(c: &mut Criterion) {
    let (x, y) = problem(60, 120, 10, 2);
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    for kind in [SolverKind::Sbhcl, SolverKind::Sgcl] {
        let cfg = config_at(kind, &x, &y, 0.2);
        group.bench_function(kind.name(), |b| b.iter(|| fit(kind, &x, &y, &cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, epochs, noise_update, full_fits);
criterion_main!(benches);
