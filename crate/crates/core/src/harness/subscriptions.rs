//! Dynamic lookup-symbol subscriptions: unpredictable but reproducible.
//!
//! Every batch sequence id gets its own ChaCha20 stream derived from the
//! schedule seed, so the subset for `(seed, seq_id)` is the same no matter
//! how or when it is computed. Per id, one uniform roll decides whether the
//! previous subset is replaced (probability `p_change`; id 0 always draws);
//! on a change, `k` symbols are drawn uniformly without replacement.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub const DEFAULT_P_CHANGE: f64 = 0.1;
pub const DEFAULT_SUBSET_SIZE: usize = 100;

pub struct SubscriptionSchedule {
    seed: u64,
    p_change: f64,
    subset_size: usize,
    universe: Arc<Vec<String>>,
    cached: Option<(u64, Arc<Vec<String>>)>,
    warned_whole_universe: bool,
}

impl SubscriptionSchedule {
    pub fn new(
        seed: u64,
        p_change: f64,
        subset_size: usize,
        universe: Arc<Vec<String>>,
    ) -> SubscriptionSchedule {
        SubscriptionSchedule {
            seed,
            p_change,
            subset_size,
            universe,
            cached: None,
            warned_whole_universe: false,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// RNG stream for one sequence id. Stream ids are offset by one so the
    /// default stream stays unused.
    fn rng_for(&self, seq_id: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(seq_id.wrapping_add(1));
        rng
    }

    /// Whether the subset changes at `seq_id`; returns the rng positioned
    /// after the decision roll so a draw continues the same stream.
    fn change_at(&self, seq_id: u64) -> (bool, ChaCha20Rng) {
        let mut rng = self.rng_for(seq_id);
        let roll: f64 = rng.gen();
        (seq_id == 0 || roll < self.p_change, rng)
    }

    fn draw(&mut self, rng: &mut ChaCha20Rng) -> Arc<Vec<String>> {
        let n = self.universe.len();
        let k = self.subset_size.min(n);
        if self.subset_size >= n && !self.warned_whole_universe {
            log::warn!(
                "subscription size {} covers the whole universe of {n}; proper-subset requirement waived",
                self.subset_size
            );
            self.warned_whole_universe = true;
        }
        // partial Fisher-Yates: first k slots are a uniform k-subset
        let mut indices: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = rng.gen_range(i..n);
            indices.swap(i, j);
        }
        Arc::new(
            indices[..k]
                .iter()
                .map(|&i| self.universe[i].clone())
                .collect(),
        )
    }

    /// The lookup symbols attached to batch `seq_id`. Sequential calls are
    /// O(1); random access rescans back to the most recent change.
    pub fn subscriptions_for(&mut self, seq_id: u64) -> Arc<Vec<String>> {
        if let Some((cached_seq, subset)) = &self.cached {
            if *cached_seq == seq_id {
                return Arc::clone(subset);
            }
            if seq_id == cached_seq + 1 {
                let (changed, mut rng) = self.change_at(seq_id);
                let subset = if changed {
                    self.draw(&mut rng)
                } else {
                    Arc::clone(&self.cached.as_ref().expect("cached").1)
                };
                self.cached = Some((seq_id, Arc::clone(&subset)));
                return subset;
            }
        }
        // find the latest change at or before seq_id (id 0 always changes)
        let mut at = seq_id;
        let mut rng = loop {
            let (changed, rng) = self.change_at(at);
            if changed {
                break rng;
            }
            at -= 1;
        };
        let subset = self.draw(&mut rng);
        self.cached = Some((seq_id, Arc::clone(&subset)));
        subset
    }
}
