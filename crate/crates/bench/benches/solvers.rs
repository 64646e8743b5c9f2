use criterion::{black_box, criterion_group, criterion_main, Criterion};
use robinspec_bench::{flat_chart, light_ball};
use robinspec_core::asymfit::fit_expansion;
use robinspec_core::ball::{ball_ground, ball_mode_spectrum, AngularProblem};
use robinspec_core::effective2d::{assemble_coefficients, effective_spectrum};
use robinspec_core::geometry::{effective_energy_with, EnergyOptions, Ellipsoid, MagneticField};
use robinspec_core::model1d::{montgomery_lambda, robin_transverse_energy, TransverseGrid};

fn model1d(c: &mut Criterion) {
    c.bench_function("montgomery_lambda 14000 cells", |b| {
        b.iter(|| montgomery_lambda(black_box(-0.35), 7.0, 14_000).unwrap())
    });
    c.bench_function("robin_transverse_energy h=0.01", |b| {
        b.iter(|| robin_transverse_energy(black_box(1.0), 1.0, 1.0, 0.01, 0.4, TransverseGrid::default()).unwrap())
    });
}

fn angular(c: &mut Criterion) {
    let problem = AngularProblem::new(1024).unwrap();
    c.bench_function("lambda_m 1024 cells", |b| b.iter(|| problem.lambda(black_box(3), 6.0).unwrap()));
    c.bench_function("effective_energy b=6", |b| b.iter(|| problem.effective_energy(black_box(6.0)).unwrap()));
}

fn ball(c: &mut Criterion) {
    let p = light_ball(0.05, 1.0);
    c.bench_function("ball_mode_spectrum light grid", |b| {
        b.iter(|| ball_mode_spectrum(&p, black_box(6), 1).unwrap())
    });
    let mut group = c.benchmark_group("slow");
    group.sample_size(10);
    group.bench_function("ball_ground light grid h=0.05", |b| b.iter(|| ball_ground(black_box(&p)).unwrap()));
    let chart = flat_chart(0.05, 0.5, 16);
    group.bench_function("effective_spectrum 16x16 flat", |b| {
        b.iter(|| {
            let coeffs = assemble_coefficients(&chart).unwrap();
            effective_spectrum(&coeffs, &chart, 3).unwrap()
        })
    });
    let e = Ellipsoid::new(1.0, 1.1, 1.3);
    let field = MagneticField::uniform(0.0, 0.0, 0.5);
    let options = EnergyOptions {
        scan: [64, 128],
        ..EnergyOptions::default()
    };
    group.bench_function("effective_energy ellipsoid 64x128 scan", |b| {
        b.iter(|| effective_energy_with(&e, &field, 1.0, 1.0, &options).unwrap())
    });
    group.finish();
}

fn fitting(c: &mut Criterion) {
    let samples: Vec<(f64, f64)> = [0.04, 0.028, 0.02, 0.014, 0.01]
        .iter()
        .map(|&h: &f64| (h, -1.0 - 2.0 * h + 0.57 * h.powf(4.0 / 3.0)))
        .collect();
    c.bench_function("fit_expansion 5 samples", |b| {
        b.iter(|| fit_expansion(black_box(&samples), &[0.0, 1.0, 4.0 / 3.0]).unwrap())
    });
}

criterion_group!(benches, model1d, angular, ball, fitting);
criterion_main!(benches);
