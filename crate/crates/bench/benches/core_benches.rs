//! Criterion benchmarks for the numeric kernels: chain cascade, Bloch
//! dispersion, parametric gain, resonator fitting, and shot generation.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use readout_core::calfit::{fit_resonator, synth_s21_trace};
use readout_core::config::RunConfig;
use readout_core::cqed::QubitState;
use readout_core::rfchain::cascade;
use readout_core::shots::{simulate_shots, ShotOptions};
use readout_core::twline::{dispersion_sweep, gain_profile};

fn sweep(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn bench_cascade(c: &mut Criterion) {
    let cfg = RunConfig::demo();
    let chain = cfg.chain("amp_on").unwrap();
    c.bench_function("cascade_amp_on", |b| {
        b.iter(|| cascade(black_box(chain), black_box(6.5e9)).unwrap())
    });
}

fn bench_twline(c: &mut Criterion) {
    let cfg = RunConfig::demo();
    let line = &cfg.twline;
    let freqs = sweep(4.0e9, 8.5e9, 901);
    c.bench_function("dispersion_sweep_901", |b| {
        b.iter(|| dispersion_sweep(black_box(&line.supercell), black_box(&freqs)).unwrap())
    });
    c.bench_function("gain_profile_901", |b| {
        b.iter(|| {
            gain_profile(
                black_box(&line.supercell),
                black_box(&line.pump),
                black_box(&line.loss),
                black_box(&freqs),
            )
            .unwrap()
        })
    });
}

fn bench_fit_resonator(c: &mut Criterion) {
    let cfg = RunConfig::demo();
    let p = cfg.qubit("q1").unwrap().to_params();
    let fwhm = p.f_res_hz / p.q_total();
    let freqs = sweep(p.f_res_hz - 8.0 * fwhm, p.f_res_hz + 8.0 * fwhm, 601);
    let trace = synth_s21_trace(&p, QubitState::Ground, &freqs, 0.01, 7).unwrap();
    c.bench_function("fit_resonator_601", |b| {
        b.iter(|| fit_resonator(black_box(&trace)).unwrap())
    });
}

fn bench_shots(c: &mut Criterion) {
    let cfg = RunConfig::demo();
    let p = cfg.qubit("q1").unwrap().to_params();
    let opts = ShotOptions::default();
    let f_ro = p.f_res_hz - p.chi_hz;
    let system = cascade(cfg.chain("amp_on").unwrap(), f_ro).unwrap();
    c.bench_function("simulate_shots_10k", |b| {
        b.iter(|| {
            simulate_shots(
                black_box(&p),
                black_box(&system),
                10_000,
                1e-6,
                black_box(&opts),
            )
            .unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_cascade,
    bench_twline,
    bench_fit_resonator,
    bench_shots
);
criterion_main!(benches);
