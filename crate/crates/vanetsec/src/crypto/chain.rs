//! One-way key-chain step.

use super::{prf, ChainKey};

/// The one-way function F linking chain elements: given K_{i+1}, produce K_i.
/// The 8-byte element is zero-extended to a PRF key and evaluated on the
/// single byte 0x00.
pub fn chain_step(k_next: &ChainKey) -> ChainKey {
    let mut key = [0u8; 16];
    key[..8].copy_from_slice(k_next.as_bytes());
    ChainKey::new(prf(&key, &[0x00]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_length_preserving() {
        let k = ChainKey::new([0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08]);
        assert_eq!(chain_step(&k), chain_step(&k));
        assert_eq!(chain_step(&k).as_bytes().len(), 8);
    }

    #[test]
    fn matches_prf_composition() {
        let k = ChainKey::new([0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08]);
        let mut key = [0u8; 16];
        key[..8].copy_from_slice(k.as_bytes());
        assert_eq!(*chain_step(&k).as_bytes(), prf(&key, &[0x00]));
    }

    #[test]
    fn composition_is_iterated_application() {
        let k = ChainKey::new([0xAA; 8]);
        let twice = chain_step(&chain_step(&k));
        let mut walk = k;
        for _ in 0..2 {
            walk = chain_step(&walk);
        }
        assert_eq!(twice, walk);
    }
}
