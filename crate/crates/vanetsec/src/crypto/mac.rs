//! CBC-MAC over RC5 and the PRF built on it.
//!
//! Raw CBC-MAC is forgeable for variable-length messages, so the MAC input is
//! formed as one 8-byte big-endian length block followed by the data
//! zero-padded to a block multiple. The tag is the final 8-byte CBC block.

use super::{rc5_encrypt_block, rc5_setup, Block, CipherKey, Mac, MacKey, DEFAULT_ROUNDS};

const BLOCK_LEN: usize = 8;

/// CBC-MAC with zero IV and a prepended length block.
pub fn cbc_mac(key: &MacKey, data: &[u8]) -> Mac {
    // 16-byte keys are valid for both roles; round count is in range.
    let sched = rc5_setup(&CipherKey::new(*key.as_bytes()), DEFAULT_ROUNDS)
        .expect("default parameters are valid");

    let mut state = [0u8; BLOCK_LEN];
    let mut absorb = |block: &[u8]| {
        let mut x = [0u8; BLOCK_LEN];
        for (i, b) in block.iter().enumerate() {
            x[i] = state[i] ^ b;
        }
        for i in block.len()..BLOCK_LEN {
            x[i] = state[i]; // zero padding of a short final chunk
        }
        state = rc5_encrypt_block(&sched, &Block(x)).0;
    };

    absorb(&(data.len() as u64).to_be_bytes());
    for chunk in data.chunks(BLOCK_LEN) {
        absorb(chunk);
    }
    state
}

/// MAC-based pseudorandom function; all key derivations go through this.
pub fn prf(key: &[u8; 16], data: &[u8]) -> [u8; 8] {
    cbc_mac(&MacKey::new(*key), data)
}

/// Expand to 16 bytes with two PRF calls distinguished by a trailing
/// sub-label.
pub fn prf_expand16(key: &[u8; 16], label: u8, data: &[u8]) -> [u8; 16] {
    let mut input = Vec::with_capacity(2 + data.len());
    input.push(label);
    input.push(0x01);
    input.extend_from_slice(data);
    let lo = prf(key, &input);
    input[1] = 0x02;
    let hi = prf(key, &input);
    let mut out = [0u8; 16];
    out[..8].copy_from_slice(&lo);
    out[8..].copy_from_slice(&hi);
    out
}
