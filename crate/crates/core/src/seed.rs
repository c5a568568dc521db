//! Stable derivation of purpose-specific sub-seeds from one master seed.
//!
//! Experiments need several independent streams (initialization, data,
//! layer selection, re-init sweeps) that must not collide and must stay
//! reproducible from a single recorded master seed. Sub-seeds are derived
//! by absorbing the master seed and a purpose label into an FNV-1a hash
//! and finishing with the splitmix64 mixer. The mapping is part of the
//! on-disk reproducibility contract: changing it changes every derived
//! stream, so treat it as frozen.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sub-seed for `purpose` under `master`.
pub fn derive_seed(master: u64, purpose: &str) -> u64 {
    let h = fnv1a(FNV_OFFSET, &master.to_le_bytes());
    splitmix64(fnv1a(h, purpose.as_bytes()))
}

/// Indexed variant for families of streams (one seed per sweep arm).
pub fn derive_seed_indexed(master: u64, purpose: &str, index: u64) -> u64 {
    let h = fnv1a(FNV_OFFSET, &master.to_le_bytes());
    let h = fnv1a(h, purpose.as_bytes());
    splitmix64(fnv1a(h, &index.to_le_bytes()))
}
