//! Counter-based random streams.
//!
//! Every replication and every purpose inside a replication gets its own
//! ChaCha stream, keyed by the master seed and the replication index and
//! selected by the purpose code. Results therefore do not depend on how
//! replications are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for; distinct purposes never share randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Trajectory,
    Marks,
    Probe,
    Pilot,
    Oracle,
    Bootstrap,
    Insertion,
    Custom(u32),
}

impl Purpose {
    fn code(self) -> u64 {
        match self {
            Purpose::Trajectory => 1,
            Purpose::Marks => 2,
            Purpose::Probe => 3,
            Purpose::Pilot => 4,
            Purpose::Oracle => 5,
            Purpose::Bootstrap => 6,
            Purpose::Insertion => 7,
            Purpose::Custom(c) => 0x1_0000_0000 | u64::from(c),
        }
    }
}

/// Factory for reproducible per-(replication, purpose) generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFactory {
    seed: u64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generator for replication `rep` and the given purpose.
    pub fn stream(&self, rep: u64, purpose: Purpose) -> ChaCha8Rng {
        let mut state = self.seed ^ rep.wrapping_mul(0xD1B5_4A32_D192_ED03);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(purpose.code());
        rng
    }

    /// Derived factory, e.g. one per λ in an experiment grid.
    pub fn child(&self, label: u64) -> StreamFactory {
        let mut state = self.seed ^ label.wrapping_mul(0xA24B_AED4_963E_E407);
        StreamFactory::new(splitmix64(&mut state))
    }
}
