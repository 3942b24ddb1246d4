//! Independent straight-line RC5-32/12/16 reference used as an oracle by the
//! acceptance suite. Deliberately written as a direct transcription of the
//! cipher's published C reference code, sharing nothing with the library
//! implementation.

/// Key expansion: 16 key bytes into 2*12+2 round words.
pub fn reference_setup(key: &[u8; 16]) -> [u32; 26] {
    const P: u32 = 0xb7e15163;
    const Q: u32 = 0x9e3779b9;

    let mut l = [0u32; 4];
    let mut i = 15usize;
    loop {
        l[i / 4] = l[i / 4].wrapping_shl(8).wrapping_add(key[i] as u32);
        if i == 0 {
            break;
        }
        i -= 1;
    }

    let mut s = [0u32; 26];
    s[0] = P;
    for i in 1..26 {
        s[i] = s[i - 1].wrapping_add(Q);
    }

    let mut a = 0u32;
    let mut b = 0u32;
    let mut i = 0usize;
    let mut j = 0usize;
    for _ in 0..78 {
        a = s[i].wrapping_add(a).wrapping_add(b).rotate_left(3);
        s[i] = a;
        b = l[j]
            .wrapping_add(a)
            .wrapping_add(b)
            .rotate_left((a.wrapping_add(b)) & 31);
        l[j] = b;
        i = (i + 1) % 26;
        j = (j + 1) % 4;
    }
    s
}

/// Encrypt one block; words are little-endian in the byte representation.
pub fn reference_encrypt(s: &[u32; 26], pt: [u8; 8]) -> [u8; 8] {
    let mut a = u32::from_le_bytes([pt[0], pt[1], pt[2], pt[3]]).wrapping_add(s[0]);
    let mut b = u32::from_le_bytes([pt[4], pt[5], pt[6], pt[7]]).wrapping_add(s[1]);
    for i in 1..=12 {
        a = (a ^ b).rotate_left(b & 31).wrapping_add(s[2 * i]);
        b = (b ^ a).rotate_left(a & 31).wrapping_add(s[2 * i + 1]);
    }
    let mut out = [0u8; 8];
    out[..4].copy_from_slice(&a.to_le_bytes());
    out[4..].copy_from_slice(&b.to_le_bytes());
    out
}

/// Decrypt one block.
pub fn reference_decrypt(s: &[u32; 26], ct: [u8; 8]) -> [u8; 8] {
    let mut a = u32::from_le_bytes([ct[0], ct[1], ct[2], ct[3]]);
    let mut b = u32::from_le_bytes([ct[4], ct[5], ct[6], ct[7]]);
    for i in (1..=12).rev() {
        b = b.wrapping_sub(s[2 * i + 1]).rotate_right(a & 31) ^ a;
        a = a.wrapping_sub(s[2 * i]).rotate_right(b & 31) ^ b;
    }
    b = b.wrapping_sub(s[1]);
    a = a.wrapping_sub(s[0]);
    let mut out = [0u8; 8];
    out[..4].copy_from_slice(&a.to_le_bytes());
    out[4..].copy_from_slice(&b.to_le_bytes());
    out
}

/// The chained test vectors published with the cipher: each row's plaintext
/// is the previous row's ciphertext.
pub const PUBLISHED_VECTORS: [([u8; 16], [u8; 8], [u8; 8]); 5] = [
    (
        [0x00; 16],
        [0x00; 8],
        [0x21, 0xA5, 0xDB, 0xEE, 0x15, 0x4B, 0x8F, 0x6D],
    ),
    (
        [
            0x91, 0x5F, 0x46, 0x19, 0xBE, 0x41, 0xB2, 0x51, 0x63, 0x55, 0xA5, 0x01, 0x10, 0xA9,
            0xCE, 0x91,
        ],
        [0x21, 0xA5, 0xDB, 0xEE, 0x15, 0x4B, 0x8F, 0x6D],
        [0xF7, 0xC0, 0x13, 0xAC, 0x5B, 0x2B, 0x89, 0x52],
    ),
    (
        [
            0x78, 0x33, 0x48, 0xE7, 0x5A, 0xEB, 0x0F, 0x2F, 0xD7, 0xB1, 0x69, 0xBB, 0x8D, 0xC1,
            0x67, 0x87,
        ],
        [0xF7, 0xC0, 0x13, 0xAC, 0x5B, 0x2B, 0x89, 0x52],
        [0x2F, 0x42, 0xB3, 0xB7, 0x03, 0x69, 0xFC, 0x92],
    ),
    (
        [
            0xDC, 0x49, 0xDB, 0x13, 0x75, 0xA5, 0x58, 0x4F, 0x64, 0x85, 0xB4, 0x13, 0xB5, 0xF1,
            0x2B, 0xAF,
        ],
        [0x2F, 0x42, 0xB3, 0xB7, 0x03, 0x69, 0xFC, 0x92],
        [0x65, 0xC1, 0x78, 0xB2, 0x84, 0xD1, 0x97, 0xCC],
    ),
    (
        [
            0x52, 0x69, 0xF1, 0x49, 0xD4, 0x1B, 0xA0, 0x15, 0x24, 0x97, 0x57, 0x4D, 0x7F, 0x15,
            0x31, 0x25,
        ],
        [0x65, 0xC1, 0x78, 0xB2, 0x84, 0xD1, 0x97, 0xCC],
        [0xEB, 0x44, 0xE4, 0x15, 0xDA, 0x31, 0x98, 0x24],
    ),
];
