use std::collections::VecDeque;

use rand::Rng as _;

use crate::envs::EpisodeRecord;
use crate::error::{Error, Result};
use crate::seed::Rng;

/// FIFO store of whole episodes; the oldest episode is evicted first.
#[derive(Debug, Clone)]
pub struct EpisodicReplay {
    capacity: usize,
    episodes: VecDeque<EpisodeRecord>,
}

impl EpisodicReplay {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidInput("replay capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            episodes: VecDeque::with_capacity(capacity),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    /// Empty episodes are dropped.
    pub fn push(&mut self, episode: EpisodeRecord) {
        if episode.is_empty() {
            return;
        }
        if self.episodes.len() == self.capacity {
            self.episodes.pop_front();
        }
        self.episodes.push_back(episode);
    }

    pub fn sample(&self, rng: &mut Rng) -> Result<&EpisodeRecord> {
        if self.episodes.is_empty() {
            return Err(Error::ContractViolation("sampling from an empty replay".into()));
        }
        Ok(&self.episodes[rng.random_range(0..self.episodes.len())])
    }

    pub fn iter(&self) -> impl Iterator<Item = &EpisodeRecord> {
        self.episodes.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::Transition;
    use crate::seed::rng_from;

    fn episode(tag: f64) -> EpisodeRecord {
        EpisodeRecord {
            transitions: vec![Transition {
                state: vec![tag],
                action: 0,
                reward: tag,
                next_state: vec![tag],
                terminal: true,
            }],
        }
    }

    #[test]
    fn evicts_oldest_first() {
        let mut replay = EpisodicReplay::new(2).unwrap();
        for i in 0..3 {
            replay.push(episode(i as f64));
        }
        let tags: Vec<f64> = replay.iter().map(|e| e.total_reward()).collect();
        assert_eq!(tags, vec![1.0, 2.0]);
        replay.push(EpisodeRecord::new());
        assert_eq!(replay.len(), 2);
    }

    #[test]
    fn sampling_is_uniform() {
        let mut replay = EpisodicReplay::new(4).unwrap();
        for i in 0..4 {
            replay.push(episode(i as f64));
        }
        let mut rng = rng_from(3);
        let mut counts = [0usize; 4];
        for _ in 0..20_000 {
            counts[replay.sample(&mut rng).unwrap().total_reward() as usize] += 1;
        }
        assert!(counts.iter().all(|&c| (c as f64 / 20_000.0 - 0.25).abs() < 0.015));
    }

    #[test]
    fn empty_replay_cannot_be_sampled() {
        let replay = EpisodicReplay::new(1).unwrap();
        assert!(replay.sample(&mut rng_from(0)).is_err());
        assert!(EpisodicReplay::new(0).is_err());
    }
}
