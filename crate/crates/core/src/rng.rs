//! Seeded random streams.
//!
//! Every run draws from ChaCha8 (a counter-based stream cipher generator)
//! seeded with the run seed via `seed_from_u64`. Independent sub-streams for
//! the environment, the offline collector and the agent are selected with
//! `set_stream`, so adding draws to one never perturbs another. A port that
//! wants bit-compatible traces must reproduce `rand_chacha::ChaCha8Rng`
//! together with the `rand_distr` samplers used here.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type LabRng = ChaCha8Rng;

/// Named sub-streams of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Environment,
    Offline,
    Agent,
    Evaluation,
    Mask,
    /// Per-draw stream for Monte-Carlo replications.
    Replicate(u64),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Environment => 1,
            Stream::Offline => 2,
            Stream::Agent => 3,
            Stream::Evaluation => 4,
            Stream::Mask => 5,
            Stream::Replicate(i) => 1_000 + i,
        }
    }
}

pub fn stream_rng(seed: u64, stream: Stream) -> LabRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}

pub fn seeded(seed: u64) -> LabRng {
    ChaCha8Rng::seed_from_u64(seed)
}
