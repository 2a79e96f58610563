//! Deterministic derivation of child seeds from a base seed, so independent
//! random streams (instance generation, rollout sampling, evaluation sets)
//! never collide or depend on call order.

/// One round of the splitmix64 output function.
pub fn mix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `tag`, element `index`, of a base seed.
pub fn derive(base: u64, tag: u64, index: u64) -> u64 {
    mix(mix(base ^ mix(tag)) ^ mix(index))
}
