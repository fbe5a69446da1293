//! Definition-based sampler of the `α/2`-stable limit
//! `S ≈ a_N^{−2} Σ_{t≤N} (Z_t² − b_N)` at a large `N`.

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Schedule};
use crate::innovations::InnovationModel;
use crate::streams::{rng_from, salt};

/// Smallest accepted `N_big`.
pub const MIN_STABLE_N: usize = 100_000;

pub fn sample_stable_s(innov: &InnovationModel, n: usize, seed: u64, n_big: usize) -> Result<Vec<f64>> {
    sample_stable_s_with(innov, n, seed, n_big, Schedule::default())
}

pub fn sample_stable_s_with(
    innov: &InnovationModel,
    n: usize,
    seed: u64,
    n_big: usize,
    schedule: Schedule,
) -> Result<Vec<f64>> {
    innov.validate()?;
    if n_big < MIN_STABLE_N {
        return Err(Error::invalid("N_big", format!("N_big must be at least {MIN_STABLE_N}")));
    }
    let a = innov.norming_a(n_big)?;
    let b = innov.truncated_b(n_big)?;
    let inv_a2 = 1.0 / (a * a);
    Ok(map_indexed(n, schedule, |i| {
        let mut rng = rng_from(seed, &[salt::STABLE, i as u64]);
        inv_a2 * innov.sum_centered_squares(&mut rng, n_big, b)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_light_tails_and_small_n() {
        let g = InnovationModel::gaussian(1.0).unwrap();
        assert_eq!(sample_stable_s(&g, 10, 1, MIN_STABLE_N), Err(Error::NoTailIndex));
        let p = InnovationModel::pareto(3.0, 0.5).unwrap();
        assert!(sample_stable_s(&p, 10, 1, 1000).is_err());
    }

    #[test]
    fn schedules_agree() {
        let p = InnovationModel::pareto(2.5, 0.7).unwrap();
        let a = sample_stable_s_with(&p, 6, 3, MIN_STABLE_N, Schedule::Sequential).unwrap();
        let b = sample_stable_s_with(&p, 6, 3, MIN_STABLE_N, Schedule::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
