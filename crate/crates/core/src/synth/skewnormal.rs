use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::stats::SkewGaussParams;

/// Independent draws from the skew-normal law with location `mu`, scale
/// `sigma` and shape `gamma`; the amplitude is ignored.
pub fn sample_skew_normal(p: &SkewGaussParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    if !(p.sigma > 0.0 && p.sigma.is_finite()) || !p.mu.is_finite() || !p.gamma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "skew-normal needs finite mu, gamma and positive sigma, got {p:?}"
        )));
    }
    let delta = p.gamma / (1.0 + p.gamma * p.gamma).sqrt();
    let comp = (1.0 - delta * delta).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let u0: f64 = StandardNormal.sample(&mut rng);
            let v: f64 = StandardNormal.sample(&mut rng);
            let u1 = delta * u0 + comp * v;
            let z = if u0 >= 0.0 { u1 } else { -u1 };
            p.mu + p.sigma * z
        })
        .collect())
}
