//! Reproducible random streams.
//!
//! Every variable of every replicate draws from its own ChaCha8 stream:
//! the key is the replicate seed and the stream id names the variable, so
//! adding draws to one variable never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Covariates = 1,
    Treatment = 2,
    Latent = 3,
    Mediator = 4,
    Outcome = 5,
    Oracle = 6,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
