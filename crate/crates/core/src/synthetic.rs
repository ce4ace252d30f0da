//! Synthetic typing corpora with known structure, for tests and benchmarks.
//!
//! Group `i` owns the tokens `g{i}_{j}`; the tokens `n_{j}` are shared noise.
//! Every example draws its mention and context from its own group's
//! vocabulary plus noise, so the groups are linearly separable in the hashed
//! feature space up to hash collisions.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::typer::{MentionContext, TrainingExample};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    pub vocab_per_group: usize,
    pub noise_vocab: usize,
    pub mention_len: usize,
    /// Group tokens per side of the mention.
    pub context_len: usize,
    /// Noise tokens per side of the mention.
    pub noise_len: usize,
}

impl Default for SyntheticTask {
    fn default() -> Self {
        Self {
            vocab_per_group: 20,
            noise_vocab: 50,
            mention_len: 2,
            context_len: 4,
            noise_len: 4,
        }
    }
}

/// Pretraining pool, small target training set and target test set.
#[derive(Debug, Clone)]
pub struct TransferSplit {
    pub silver: Vec<TrainingExample>,
    pub target_train: Vec<TrainingExample>,
    pub target_test: Vec<TrainingExample>,
}

impl SyntheticTask {
    /// Sparse-vocabulary setting in which a few target examples per group
    /// cannot cover the vocabulary but a larger silver pool can.
    pub fn transfer_task() -> Self {
        Self {
            vocab_per_group: 100,
            noise_vocab: 200,
            mention_len: 2,
            context_len: 4,
            noise_len: 4,
        }
    }

    fn example(&self, rng: &mut ChaCha8Rng, gi: usize, label: &str) -> TrainingExample {
        let mut draw_group = |n: usize| -> Vec<String> {
            (0..n)
                .map(|_| format!("g{gi}_{}", rng.random_range(0..self.vocab_per_group)))
                .collect()
        };
        let mention = draw_group(self.mention_len.max(1));
        let mut left = draw_group(self.context_len);
        let mut right = draw_group(self.context_len);
        for side in [&mut left, &mut right] {
            for _ in 0..self.noise_len {
                let tok = format!("n_{}", rng.random_range(0..self.noise_vocab.max(1)));
                let at = rng.random_range(0..=side.len());
                side.insert(at, tok);
            }
        }
        TrainingExample {
            context: MentionContext { left, mention, right },
            labels: BTreeSet::from([label.to_string()]),
        }
    }

    /// `per_group` single-label examples for every group, interleaved by group.
    pub fn separable(&self, groups: &[String], per_group: usize, seed: u64) -> Vec<TrainingExample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(groups.len() * per_group);
        for _ in 0..per_group {
            for (gi, g) in groups.iter().enumerate() {
                out.push(self.example(&mut rng, gi, g));
            }
        }
        out
    }

    /// Like [`Self::separable`], but each label is replaced by a uniformly
    /// drawn different group with probability `noise`.
    pub fn noisy(&self, groups: &[String], per_group: usize, noise: f64, seed: u64) -> Vec<TrainingExample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.separable(groups, per_group, rng.random());
        if groups.len() < 2 {
            return out;
        }
        for ex in &mut out {
            if rng.random_bool(noise) {
                let current = ex.labels.iter().next().cloned().unwrap_or_default();
                let others: Vec<&String> = groups.iter().filter(|g| **g != current).collect();
                let replacement = (*others.choose(&mut rng).expect("at least one other group")).clone();
                ex.labels = BTreeSet::from([replacement]);
            }
        }
        out
    }

    pub fn transfer_split(
        &self,
        groups: &[String],
        silver_per_group: usize,
        target_per_group: usize,
        test_per_group: usize,
        noise: f64,
        seed: u64,
    ) -> TransferSplit {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TransferSplit {
            silver: self.noisy(groups, silver_per_group, noise, rng.random()),
            target_train: self.separable(groups, target_per_group, rng.random()),
            target_test: self.separable(groups, test_per_group, rng.random()),
        }
    }
}
