use std::collections::VecDeque;

use rand::Rng;

use super::features::FeatureVector;
use crate::energy::OffloadDecision;

/// A training pair: frame features and the reference decision for that frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: FeatureVector,
    pub reference: OffloadDecision,
}

/// Bounded FIFO memory; pushing at capacity evicts the oldest sample.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Sample>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "buffer capacity must be positive");
        Self {
            capacity,
            items: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, sample: Sample) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(sample);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Sample> {
        self.items.iter()
    }

    /// Uniform sample without replacement, or `None` while fewer than `batch`
    /// samples are stored.
    pub fn sample<R: Rng>(&self, batch: usize, rng: &mut R) -> Option<Vec<&Sample>> {
        if batch == 0 || self.items.len() < batch {
            return None;
        }
        Some(
            rand::seq::index::sample(rng, self.items.len(), batch)
                .into_iter()
                .map(|i| &self.items[i])
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn item(tag: f64) -> Sample {
        Sample {
            features: FeatureVector(vec![tag]),
            reference: OffloadDecision::all_local(1, 1),
        }
    }

    fn tags<'a>(it: impl Iterator<Item = &'a Sample>) -> Vec<f64> {
        it.map(|s| s.features.0[0]).collect()
    }

    #[test]
    fn evicts_oldest() {
        let mut b = ReplayBuffer::new(3);
        for t in 0..4 {
            b.push(item(t as f64));
        }
        assert_eq!(tags(b.iter()), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn full_sample_is_permutation() {
        let mut b = ReplayBuffer::new(5);
        for t in 0..5 {
            b.push(item(t as f64));
        }
        let mut got = tags(
            b.sample(5, &mut ChaCha8Rng::seed_from_u64(1))
                .unwrap()
                .into_iter(),
        );
        got.sort_by(f64::total_cmp);
        assert_eq!(got, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn underfilled_signals_skip() {
        let mut b = ReplayBuffer::new(5);
        b.push(item(0.0));
        assert!(b.sample(2, &mut ChaCha8Rng::seed_from_u64(1)).is_none());
    }

    proptest! {
        #[test]
        fn bounded_and_ordered(cap in 1usize..20, pushes in 0usize..60) {
            let mut b = ReplayBuffer::new(cap);
            for t in 0..pushes {
                b.push(item(t as f64));
                prop_assert!(b.len() <= cap);
            }
            let expected: Vec<f64> = (pushes.saturating_sub(cap)..pushes).map(|t| t as f64).collect();
            prop_assert_eq!(tags(b.iter()), expected);
        }
    }
}
