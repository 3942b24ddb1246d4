//! Counter-mode keystream encryption.
//!
//! Keystream block j for message counter `ctr` is the RC5 encryption of the
//! 8-byte big-endian encoding of `ctr * 2^16 + j`. Within one session
//! direction no counter block is ever reused while the message counter stays
//! below 2^32 and per-message blocks below 2^16.

use super::{rc5_encrypt_block, rc5_setup, Block, CipherKey, Counter, CryptoError, DEFAULT_ROUNDS};

const BLOCK_LEN: usize = 8;
const MAX_BLOCKS: usize = 1 << 16;

/// Encrypt or decrypt `data` (the operation is its own inverse). Output length
/// equals input length.
pub fn ctr_apply(key: &CipherKey, ctr: Counter, data: &[u8]) -> Result<Vec<u8>, CryptoError> {
    if data.len() >= MAX_BLOCKS * BLOCK_LEN {
        return Err(CryptoError::MessageTooLong);
    }
    let sched = rc5_setup(key, DEFAULT_ROUNDS)?;
    let base = u64::from(ctr.value()) << 16;
    let mut out = Vec::with_capacity(data.len());
    for (j, chunk) in data.chunks(BLOCK_LEN).enumerate() {
        let counter_block = Block((base | j as u64).to_be_bytes());
        let keystream = rc5_encrypt_block(&sched, &counter_block);
        out.extend(chunk.iter().zip(keystream.0.iter()).map(|(d, k)| d ^ k));
    }
    Ok(out)
}
