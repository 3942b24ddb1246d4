//! Deterministic cryptographic primitives.
//!
//! Everything here is a pure function of its inputs: the RC5-32/12/16 block
//! cipher, counter-mode keystream encryption, a length-prepended CBC-MAC, a
//! MAC-based PRF, the one-way key-chain step, and master-key pair derivation.
//! All multi-byte integers entering key derivation or the wire are big-endian.

mod chain;
mod ctr;
mod derive;
mod mac;
mod rc5;

pub use chain::chain_step;
pub use ctr::ctr_apply;
pub use derive::{derive_pair_keys, pair_keys_from_shared, PairKeys};
pub use mac::{cbc_mac, prf, prf_expand16};
pub use rc5::{rc5_decrypt_block, rc5_encrypt_block, rc5_setup, RoundKeySchedule, DEFAULT_ROUNDS};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CryptoError {
    #[error("key must be {expected} bytes, got {got}")]
    KeyLength { expected: usize, got: usize },
    #[error("round count {0} outside supported range 8..=16")]
    RoundsOutOfRange(u32),
    #[error("message exceeds counter-mode block space")]
    MessageTooLong,
    #[error("message counter exhausted; session must be re-keyed")]
    CounterExhausted,
    #[error("pair derivation requires two distinct node ids")]
    IdenticalNodeIds,
}

macro_rules! key_newtype {
    ($(#[$doc:meta])* $name:ident, $len:expr) => {
        $(#[$doc])*
        #[derive(Clone, Copy, PartialEq, Eq, Hash)]
        pub struct $name([u8; $len]);

        impl $name {
            pub const LEN: usize = $len;

            pub fn new(bytes: [u8; $len]) -> Self {
                Self(bytes)
            }

            pub fn from_slice(bytes: &[u8]) -> Result<Self, CryptoError> {
                let arr: [u8; $len] = bytes.try_into().map_err(|_| CryptoError::KeyLength {
                    expected: $len,
                    got: bytes.len(),
                })?;
                Ok(Self(arr))
            }

            pub fn as_bytes(&self) -> &[u8; $len] {
                &self.0
            }
        }

        impl std::fmt::Debug for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                // never leak key bytes through Debug output
                write!(f, concat!(stringify!($name), "(..)"))
            }
        }
    };
}

key_newtype!(
    /// 16-byte secret key for the block cipher.
    CipherKey,
    16
);
key_newtype!(
    /// 16-byte secret key for CBC-MAC.
    MacKey,
    16
);
key_newtype!(
    /// 16-byte root secret shared between infrastructure and vehicle at
    /// provisioning. Never appears on the wire.
    MasterKey,
    16
);
key_newtype!(
    /// 8-byte key-chain element.
    ChainKey,
    8
);

/// 8-byte cipher block (two 32-bit words).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block(pub [u8; 8]);

/// 8-byte message authentication tag.
pub type Mac = [u8; 8];

/// 32-bit implicit message counter. Monotonically non-decreasing within a
/// session direction; wrapping is an error (the session must be re-keyed
/// before 2^32 messages).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Counter(u32);

impl Counter {
    pub fn new(value: u32) -> Self {
        Self(value)
    }

    pub fn value(&self) -> u32 {
        self.0
    }

    /// Advance by one, failing instead of wrapping.
    pub fn increment(&mut self) -> Result<(), CryptoError> {
        self.0 = self.0.checked_add(1).ok_or(CryptoError::CounterExhausted)?;
        Ok(())
    }

    /// Raise to `value` if it is larger; counters never move backwards.
    pub fn advance_to(&mut self, value: u32) {
        if value > self.0 {
            self.0 = value;
        }
    }
}
