use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::Matrix;
use crate::error::{Error, Result};

/// Scales every demand entry by `max(0, 1 + e)` with `e ~ N(mean_frac, sd_frac)`.
///
/// A positive error overestimates demand. Entries are drawn row-major from a
/// ChaCha8 stream seeded with `seed`.
pub fn perturb_demand(z: &Matrix, mean_frac: f64, sd_frac: f64, seed: u64) -> Result<Matrix> {
    if !(mean_frac.is_finite() && mean_frac >= 0.0) {
        return Err(Error::invalid("mean_frac", "must be finite and >= 0"));
    }
    let normal = Normal::new(mean_frac, sd_frac)
        .map_err(|_| Error::invalid("sd_frac", "must be finite and >= 0"))?;
    if sd_frac < 0.0 {
        return Err(Error::invalid("sd_frac", "must be finite and >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(z.iter()
        .map(|row| {
            row.iter()
                .map(|&v| v * (1.0 + normal.sample(&mut rng)).max(0.0))
                .collect()
        })
        .collect())
}
