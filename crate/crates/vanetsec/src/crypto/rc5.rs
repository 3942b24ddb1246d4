//! RC5-32/r/16 block cipher.
//!
//! Word size is fixed at 32 bits and key size at 16 bytes; the round count is
//! configurable within 8..=16 with 12 as the canonical default. Words are
//! loaded from block bytes little-endian, matching the published reference
//! code and its test vectors.

use super::{Block, CipherKey, CryptoError};

/// Magic constants for 32-bit words: Odd((e-2)*2^32) and Odd((phi-1)*2^32).
const P32: u32 = 0xB7E1_5163;
const Q32: u32 = 0x9E37_79B9;

/// Key bytes per key word.
const KEY_WORDS: usize = 4;

pub const DEFAULT_ROUNDS: u32 = 12;

/// Expanded key table of 2*rounds+2 words.
#[derive(Clone)]
pub struct RoundKeySchedule {
    words: Vec<u32>,
    rounds: u32,
}

impl RoundKeySchedule {
    pub fn rounds(&self) -> u32 {
        self.rounds
    }

    pub fn words(&self) -> &[u32] {
        &self.words
    }
}

impl std::fmt::Debug for RoundKeySchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RoundKeySchedule(rounds={})", self.rounds)
    }
}

/// RC5 key expansion.
pub fn rc5_setup(key: &CipherKey, rounds: u32) -> Result<RoundKeySchedule, CryptoError> {
    if !(8..=16).contains(&rounds) {
        return Err(CryptoError::RoundsOutOfRange(rounds));
    }
    let kb = key.as_bytes();

    // Secret key bytes into words, low byte first within each word.
    let mut l = [0u32; KEY_WORDS];
    for i in (0..kb.len()).rev() {
        l[i / 4] = (l[i / 4] << 8).wrapping_add(u32::from(kb[i]));
    }

    let t = 2 * (rounds as usize) + 2;
    let mut s: Vec<u32> = Vec::with_capacity(t);
    s.push(P32);
    for i in 1..t {
        s.push(s[i - 1].wrapping_add(Q32));
    }

    // Mix the secret key over 3*max(t, c) iterations.
    let (mut a, mut b) = (0u32, 0u32);
    let (mut i, mut j) = (0usize, 0usize);
    for _ in 0..3 * t.max(KEY_WORDS) {
        a = s[i].wrapping_add(a).wrapping_add(b).rotate_left(3);
        s[i] = a;
        b = l[j]
            .wrapping_add(a)
            .wrapping_add(b)
            .rotate_left(a.wrapping_add(b));
        l[j] = b;
        i = (i + 1) % t;
        j = (j + 1) % KEY_WORDS;
    }

    Ok(RoundKeySchedule { words: s, rounds })
}

fn load_words(block: &Block) -> (u32, u32) {
    let a = u32::from_le_bytes(block.0[0..4].try_into().unwrap());
    let b = u32::from_le_bytes(block.0[4..8].try_into().unwrap());
    (a, b)
}

fn store_words(a: u32, b: u32) -> Block {
    let mut out = [0u8; 8];
    out[0..4].copy_from_slice(&a.to_le_bytes());
    out[4..8].copy_from_slice(&b.to_le_bytes());
    Block(out)
}

/// Encrypt one 8-byte block. Bijective on the 64-bit block space for a fixed
/// schedule.
pub fn rc5_encrypt_block(sched: &RoundKeySchedule, pt: &Block) -> Block {
    let s = &sched.words;
    let (mut a, mut b) = load_words(pt);
    a = a.wrapping_add(s[0]);
    b = b.wrapping_add(s[1]);
    for i in 1..=sched.rounds as usize {
        a = (a ^ b).rotate_left(b).wrapping_add(s[2 * i]);
        b = (b ^ a).rotate_left(a).wrapping_add(s[2 * i + 1]);
    }
    store_words(a, b)
}

/// Inverse of [`rc5_encrypt_block`].
pub fn rc5_decrypt_block(sched: &RoundKeySchedule, ct: &Block) -> Block {
    let s = &sched.words;
    let (mut a, mut b) = load_words(ct);
    for i in (1..=sched.rounds as usize).rev() {
        b = b.wrapping_sub(s[2 * i + 1]).rotate_right(a) ^ a;
        a = a.wrapping_sub(s[2 * i]).rotate_right(b) ^ b;
    }
    b = b.wrapping_sub(s[1]);
    a = a.wrapping_sub(s[0]);
    store_words(a, b)
}
