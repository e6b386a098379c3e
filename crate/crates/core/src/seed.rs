//! Child-seed derivation for parallel replications and restarts.
//!
//! Child seeds come from splitmix64 applied to the master seed xored with
//! the stream index, so (seed, index) -> child is a pure function and
//! independent of scheduling order.

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index.wrapping_mul(0xA24B_AED4_963E_E407))
}
