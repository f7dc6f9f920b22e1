//! Small numeric helpers shared across modules.

use rand::Rng;

/// Uniform draw from `[lo, hi)`, degenerating to `lo` when the interval is
/// empty. `gen_range` panics on empty ranges, and degenerate bounds are
/// legitimate here (e.g. a queue envelope of `(0, 0)`).
pub(crate) fn uniform_in<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

/// Clamp to the unit interval.
pub(crate) fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// In-place Fisher-Yates shuffle. `rand`'s `SliceRandom::shuffle` would do,
/// but writing the loop keeps the exact draw order pinned in this crate
/// rather than in a dependency's implementation detail.
pub(crate) fn shuffle<R: Rng + ?Sized, T>(rng: &mut R, xs: &mut [T]) {
    for i in (1..xs.len()).rev() {
        let j = rng.gen_range(0..=i);
        xs.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_in_degenerate_interval_returns_lo() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(uniform_in(&mut rng, 2.5, 2.5), 2.5);
        assert_eq!(uniform_in(&mut rng, 0.0, 0.0), 0.0);
    }

    #[test]
    fn uniform_in_respects_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x = uniform_in(&mut rng, -1.0, 3.0);
            assert!((-1.0..3.0).contains(&x));
        }
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut xs: Vec<usize> = (0..50).collect();
        shuffle(&mut rng, &mut xs);
        let mut sorted = xs.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_ne!(xs, (0..50).collect::<Vec<_>>());
    }
}
