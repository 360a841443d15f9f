use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use urbmag::correlate::cross_correlate;
use urbmag::preprocess::StreamingDecimator;
use urbmag::spectral::{psd_welch, Taper};
use urbmag::stats::{fit_skew_gauss, Binning, Histogram, SkewGaussParams};
use urbmag::synth::sample_skew_normal;
use urbmag::TimeSeries;

fn noise(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = Normal::new(0.0, 1.0).unwrap();
    (0..n).map(|_| d.sample(&mut rng)).collect()
}

fn decimation(c: &mut Criterion) {
    let chunk = noise(1, 3960 * 60);
    c.bench_function("decimate 3960->1 Hz, one minute", |b| {
        b.iter_batched(
            || StreamingDecimator::new(3960).unwrap(),
            |mut d| {
                d.push(&chunk);
                black_box(d.finish())
            },
            BatchSize::SmallInput,
        )
    });
}

fn welch(c: &mut Criterion) {
    let s = TimeSeries::new(0.0, 3960.0, noise(2, 3960 * 120), "n").unwrap();
    c.bench_function("welch 2 min at 3960 Hz, 2^16 segments", |b| {
        b.iter(|| black_box(psd_welch(&s, 1 << 16, 0.5, Taper::Hann).unwrap()))
    });
}

fn fit(c: &mut Criterion) {
    let p = SkewGaussParams::new(1.0, 92.8, 0.93, -1.15);
    let h = Histogram::from_samples(&sample_skew_normal(&p, 100_000, 3).unwrap(), Binning::FreedmanDiaconis).unwrap();
    c.bench_function("skew-gaussian fit, 1e5 draws", |b| b.iter(|| black_box(fit_skew_gauss(&h, None).unwrap())));
}

fn xcorr(c: &mut Criterion) {
    let a = TimeSeries::new(0.0, 1.0, noise(4, 86_400), "a").unwrap();
    let b = TimeSeries::new(0.0, 1.0, noise(5, 86_400), "b").unwrap();
    c.bench_function("xcorr one day at 1 Hz, +-300 s", |bch| {
        bch.iter(|| black_box(cross_correlate(&a, &b, 300.0, None, None).unwrap()))
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = decimation, welch, fit, xcorr
}
criterion_main!(benches);
