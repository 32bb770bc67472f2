use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Master seed for every stochastic operation in the crate.
///
/// Sub-streams are derived with [`RngSeed::derive`], so a run is reproducible
/// from one integer regardless of evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Independent child seed for stream `index`.
    pub fn derive(self, index: u64) -> RngSeed {
        // SplitMix64 finaliser over the pair.
        let mut z = self
            .0
            .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        RngSeed(z ^ (z >> 31))
    }

    /// Derive along a labelled stream, e.g. `seed.stream(b"plan")`.
    pub fn stream(self, label: &[u8]) -> RngSeed {
        label
            .iter()
            .fold(self.derive(u64::MAX), |s, &b| s.derive(u64::from(b)))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for RngSeed {
    fn from(v: u64) -> Self {
        RngSeed(v)
    }
}
