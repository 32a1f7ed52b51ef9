use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::DrqnError;

/// One transition; observations are normalized feature vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experience {
    pub observation: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_observation: Vec<f64>,
    pub terminal: bool,
}

/// Bounded store of whole episodes with oldest-first eviction.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    episodes: VecDeque<Vec<Experience>>,
    len: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            episodes: VecDeque::new(),
            len: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Stored transitions.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn n_episodes(&self) -> usize {
        self.episodes.len()
    }

    pub fn episodes(&self) -> impl Iterator<Item = &[Experience]> {
        self.episodes.iter().map(|e| e.as_slice())
    }

    /// Appends an episode and evicts whole episodes from the front until the
    /// capacity holds. An episode longer than the capacity keeps only its tail.
    pub fn store_episode(&mut self, mut episode: Vec<Experience>) {
        if episode.is_empty() || self.capacity == 0 {
            return;
        }
        if episode.len() > self.capacity {
            episode.drain(..episode.len() - self.capacity);
        }
        self.len += episode.len();
        self.episodes.push_back(episode);
        while self.len > self.capacity {
            let old = self.episodes.pop_front().expect("len > 0");
            self.len -= old.len();
        }
    }

    /// `batch_size` contiguous windows of at most `seq_len` transitions, each
    /// ending at a uniform position of a uniformly chosen episode.
    pub fn sample_sequences<R: Rng + ?Sized>(
        &self,
        batch_size: usize,
        seq_len: usize,
        rng: &mut R,
    ) -> Result<Vec<&[Experience]>, DrqnError> {
        if self.episodes.is_empty() {
            return Err(DrqnError::NotReady);
        }
        let seq_len = seq_len.max(1);
        Ok((0..batch_size)
            .map(|_| {
                let episode = &self.episodes[rng.random_range(0..self.episodes.len())];
                let end = rng.random_range(0..episode.len());
                let start = (end + 1).saturating_sub(seq_len);
                &episode[start..=end]
            })
            .collect())
    }
}
