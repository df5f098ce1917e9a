//! Compensated summation with a fixed chunk structure.
//!
//! Both backends reduce per-node/per-particle weights in two stages: workers
//! sum fixed, index-aligned chunks with Kahan compensation, and the chunk
//! totals are folded sequentially in chunk order. Because the chunk
//! boundaries depend only on the configuration (never on the worker count),
//! the reduction is bitwise reproducible for any thread-pool size.

/// Kahan compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub(crate) fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(self) -> f64 {
        self.sum
    }
}

/// Chunk length for grid-node reduction.
pub(crate) const QUAD_CHUNK: u64 = 1 << 16;

/// Chunk length for particle reduction.
pub(crate) const MC_CHUNK: u64 = 1 << 12;

/// The half-open index ranges `[k*chunk, min((k+1)*chunk, total))`.
pub(crate) fn chunk_ranges(total: u64, chunk: u64) -> Vec<(u64, u64)> {
    (0..total.div_ceil(chunk))
        .map(|k| (k * chunk, total.min((k + 1) * chunk)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_small_terms() {
        let mut k = Kahan::default();
        k.add(1.0);
        for _ in 0..10_000_000 {
            k.add(1e-16);
        }
        assert!((k.value() - (1.0 + 1e-9)).abs() < 1e-12);
    }

    #[test]
    fn chunk_ranges_cover_exactly() {
        let ranges = chunk_ranges(10, 4);
        assert_eq!(ranges, vec![(0, 4), (4, 8), (8, 10)]);
        assert_eq!(chunk_ranges(0, 4), Vec::<(u64, u64)>::new());
    }
}
