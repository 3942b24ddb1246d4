//! Pair-key derivation from a master key.
//!
//! The pair key K_AB is derived over the ordered pair (min_id, max_id), so
//! both sides compute the same material regardless of argument order. Four
//! directional keys (encryption and MAC for each direction) hang off K_AB
//! under fixed labels.

use super::{prf, prf_expand16, CipherKey, CryptoError, MacKey, MasterKey};

const LABEL_PAIR_LO: u8 = 0x01;
const LABEL_PAIR_HI: u8 = 0x02;
const LABEL_ENC_LOW_TO_HIGH: u8 = 0x11;
const LABEL_MAC_LOW_TO_HIGH: u8 = 0x12;
const LABEL_ENC_HIGH_TO_LOW: u8 = 0x13;
const LABEL_MAC_HIGH_TO_LOW: u8 = 0x14;

/// Key material for one node pair. "Low" and "high" refer to the numeric
/// order of the two ids.
#[derive(Debug, Clone)]
pub struct PairKeys {
    pub k_ab: [u8; 16],
    pub enc_low_to_high: CipherKey,
    pub mac_low_to_high: MacKey,
    pub enc_high_to_low: CipherKey,
    pub mac_high_to_low: MacKey,
}

/// Derive the full key set for the pair (id_a, id_b) from the master key.
pub fn derive_pair_keys(km: &MasterKey, id_a: u32, id_b: u32) -> Result<PairKeys, CryptoError> {
    if id_a == id_b {
        return Err(CryptoError::IdenticalNodeIds);
    }
    let (low, high) = (id_a.min(id_b), id_a.max(id_b));
    let mut ids = [0u8; 8];
    ids[..4].copy_from_slice(&low.to_be_bytes());
    ids[4..].copy_from_slice(&high.to_be_bytes());

    let mut input = Vec::with_capacity(9);
    input.push(LABEL_PAIR_LO);
    input.extend_from_slice(&ids);
    let lo = prf(km.as_bytes(), &input);
    input[0] = LABEL_PAIR_HI;
    let hi = prf(km.as_bytes(), &input);

    let mut k_ab = [0u8; 16];
    k_ab[..8].copy_from_slice(&lo);
    k_ab[8..].copy_from_slice(&hi);

    Ok(pair_keys_from_shared(k_ab))
}

/// Build the directional key set from an already-shared pair key.
pub fn pair_keys_from_shared(k_ab: [u8; 16]) -> PairKeys {
    PairKeys {
        k_ab,
        enc_low_to_high: CipherKey::new(prf_expand16(&k_ab, LABEL_ENC_LOW_TO_HIGH, &[])),
        mac_low_to_high: MacKey::new(prf_expand16(&k_ab, LABEL_MAC_LOW_TO_HIGH, &[])),
        enc_high_to_low: CipherKey::new(prf_expand16(&k_ab, LABEL_ENC_HIGH_TO_LOW, &[])),
        mac_high_to_low: MacKey::new(prf_expand16(&k_ab, LABEL_MAC_HIGH_TO_LOW, &[])),
    }
}
