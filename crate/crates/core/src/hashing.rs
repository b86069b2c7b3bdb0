//! Stable 64-bit hashing primitives.
//!
//! Everything that ends up in a file (manifest checksums, band digests,
//! classifier feature indices) or in a signature must hash identically
//! across runs, platforms and Rust versions, so we avoid
//! `std::hash::DefaultHasher` and use FNV-1a with an explicit layout.

/// Offset basis of 64-bit FNV-1a.
pub const FNV_OFFSET: u64 = 0xcbf29ce484222325;
/// Prime of 64-bit FNV-1a.
pub const FNV_PRIME: u64 = 0x100000001b3;

/// Plain 64-bit FNV-1a over a byte slice.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    fnv1a64_extend(FNV_OFFSET, bytes)
}

/// Continue an FNV-1a digest with more bytes (for streaming checksums).
pub fn fnv1a64_extend(state: u64, bytes: &[u8]) -> u64 {
    let mut h = state;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// SplitMix64 finalizer; improves avalanche of short FNV inputs.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// General-purpose stable string/byte hash: FNV-1a mixed through SplitMix64.
pub fn hash64(bytes: &[u8]) -> u64 {
    splitmix64(fnv1a64(bytes))
}

/// Seeded variant of [`hash64`]; the seed is folded in before the payload.
pub fn hash64_seeded(seed: u64, bytes: &[u8]) -> u64 {
    let state = fnv1a64_extend(FNV_OFFSET, &seed.to_le_bytes());
    splitmix64(fnv1a64_extend(state, bytes))
}

/// Digest a slice of u64 values (little-endian) into one stable u64.
pub fn hash64_values(values: &[u64]) -> u64 {
    let mut h = FNV_OFFSET;
    for v in values {
        h = fnv1a64_extend(h, &v.to_le_bytes());
    }
    splitmix64(h)
}

/// The Mersenne prime 2^61 - 1 used as the MinHash permutation modulus.
pub const MERSENNE_PRIME_61: u64 = (1 << 61) - 1;

/// Reduce a 128-bit product modulo 2^61 - 1.
///
/// Valid for any `x < 2^122`, which covers `a * x + b` with
/// `a, b, x < 2^61`.
pub fn mod_mersenne61(x: u128) -> u64 {
    const P: u128 = MERSENNE_PRIME_61 as u128;
    // x = hi * 2^61 + lo, and 2^61 ≡ 1 (mod p)
    let folded = (x >> 61) + (x & P);
    let folded = (folded >> 61) + (folded & P);
    let mut r = folded as u64;
    if r >= MERSENNE_PRIME_61 {
        r -= MERSENNE_PRIME_61;
    }
    r
}

/// One universal-family hash h(x) = (a*x + b) mod (2^61 - 1).
#[derive(Debug, Clone, Copy)]
pub struct LinearHash {
    pub a: u64,
    pub b: u64,
}

impl LinearHash {
    pub fn eval(&self, x: u64) -> u64 {
        let x = x % MERSENNE_PRIME_61;
        mod_mersenne61(self.a as u128 * x as u128 + self.b as u128)
    }
}
