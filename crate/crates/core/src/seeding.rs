//! Deterministic seed derivation for independently seeded sub-streams.
//!
//! Every stochastic component seeds its own generator from the run seed plus
//! structural coordinates (node index, walk index, stage tag), so results do
//! not depend on scheduling or iteration interleaving.

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a base seed with two stream coordinates.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(a)) ^ splitmix64(b ^ 0x5851_F42D_4C95_7F2D))
}
