use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for every sampled object in the crate.
///
/// ChaCha8 has a fixed, platform-independent output stream for a given seed,
/// which is what makes trees, codings and Monte Carlo tallies bit-reproducible.
pub type Rng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// The splitmix64 finalizer. A bijection on `u64` with full avalanche.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over the tag bytes.
fn tag_hash(tag: &str) -> u64 {
    tag.bytes().fold(0xCBF2_9CE4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Seed for trial `index` of stream `tag` under `master`.
///
/// `seed = mix64(mix64(master ⊕ mix64(tag_hash(tag) + φ)) ⊕ index)` where `φ`
/// is the 64-bit golden-ratio constant. For fixed `(master, tag)` this is a
/// bijection of `index`, so trial seeds never collide. Only wrapping integer
/// arithmetic is used, so results are identical on every platform.
pub fn derive_seed(master: u64, index: u64, tag: &str) -> u64 {
    let stream = mix64(master ^ mix64(tag_hash(tag).wrapping_add(GOLDEN)));
    mix64(stream ^ index)
}
