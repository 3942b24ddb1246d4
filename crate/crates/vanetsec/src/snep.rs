//! SNEP unicast channel: encrypt-then-MAC with implicit synchronized
//! counters, replay rejection, nonce-based strong freshness, and explicit
//! counter resynchronization.
//!
//! The counter contributes 4 bytes to the MAC input but never appears on the
//! wire; both endpoints advance it in lockstep, which is what provides
//! semantic security and replay protection. A bounded window search on the
//! receiver side tolerates short loss bursts; anything beyond the window
//! requires an explicit [`SecurityAssociation::sync_request`] exchange.

use rand::RngCore;

use crate::crypto::{
    cbc_mac, ctr_apply, derive_pair_keys, pair_keys_from_shared, CipherKey, Counter, CryptoError,
    Mac, MacKey, MasterKey, PairKeys,
};
use thiserror::Error;

/// Packet type codes.
pub const PTYPE_DATA: u8 = 0x01;
pub const PTYPE_NONCE_REQ: u8 = 0x02;
pub const PTYPE_NONCE_RESP: u8 = 0x03;
pub const PTYPE_CTR_SYNC: u8 = 0x04;
pub const PTYPE_TESLA_BCAST: u8 = 0x10;
pub const PTYPE_TESLA_DISCLOSE: u8 = 0x11;

pub const WIRE_VERSION: u8 = 0x01;
pub const BROADCAST_ID: u32 = 0xFFFF_FFFF;
/// Simulation MTU for sealed payloads.
pub const MTU: usize = 1024;
/// Receiver-side counter resynchronization window: offsets 0..W are tried, so
/// bursts of up to W-1 consecutive losses are absorbed.
pub const RESYNC_WINDOW: u32 = 16;

pub const HEADER_LEN: usize = 12;
pub const TAG_LEN: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SnepError {
    #[error("MAC verification failed")]
    MacMismatch,
    #[error("response does not bind the pending nonce")]
    FreshnessFailure,
    #[error("packet addressed to {got}, not this endpoint ({expected})")]
    WrongAddressee { expected: u32, got: u32 },
    #[error("unexpected packet type {0:#04x}")]
    WrongPacketType(u8),
    #[error("plaintext exceeds MTU of {MTU} bytes")]
    OversizePlaintext,
    #[error("malformed packet: {0}")]
    Malformed(&'static str),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// Wire representation of every protocol message.
///
/// Layout, big-endian throughout:
/// `version(1) ptype(1) src_id(4) dst_id(4) payload_len(2) payload tag(8)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecurePacket {
    pub version: u8,
    pub ptype: u8,
    pub src_id: u32,
    pub dst_id: u32,
    pub payload: Vec<u8>,
    pub tag: Mac,
}

impl SecurePacket {
    pub fn wire_len(&self) -> usize {
        HEADER_LEN + self.payload.len() + TAG_LEN
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.wire_len());
        out.push(self.version);
        out.push(self.ptype);
        out.extend_from_slice(&self.src_id.to_be_bytes());
        out.extend_from_slice(&self.dst_id.to_be_bytes());
        out.extend_from_slice(&(self.payload.len() as u16).to_be_bytes());
        out.extend_from_slice(&self.payload);
        out.extend_from_slice(&self.tag);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SnepError> {
        if bytes.len() < HEADER_LEN + TAG_LEN {
            return Err(SnepError::Malformed("packet shorter than header plus tag"));
        }
        let version = bytes[0];
        if version != WIRE_VERSION {
            return Err(SnepError::Malformed("unknown wire version"));
        }
        let ptype = bytes[1];
        let src_id = u32::from_be_bytes(bytes[2..6].try_into().unwrap());
        let dst_id = u32::from_be_bytes(bytes[6..10].try_into().unwrap());
        let payload_len = u16::from_be_bytes(bytes[10..12].try_into().unwrap()) as usize;
        if bytes.len() != HEADER_LEN + payload_len + TAG_LEN {
            return Err(SnepError::Malformed("length field disagrees with packet size"));
        }
        let payload = bytes[HEADER_LEN..HEADER_LEN + payload_len].to_vec();
        let tag = bytes[HEADER_LEN + payload_len..].try_into().unwrap();
        Ok(Self {
            version,
            ptype,
            src_id,
            dst_id,
            payload,
            tag,
        })
    }

    /// The MAC input: header fields, then the implicit counter (4 bytes, not
    /// on the wire), then the payload. `nonce` is prepended for the
    /// freshness-bound forms; `ctr` is omitted for counter-sync messages.
    fn mac_input(&self, nonce: Option<&Nonce>, ctr: Option<u32>) -> Vec<u8> {
        let mut input = Vec::with_capacity(8 + HEADER_LEN + 4 + self.payload.len());
        if let Some(n) = nonce {
            input.extend_from_slice(&n.0);
        }
        input.push(self.version);
        input.push(self.ptype);
        input.extend_from_slice(&self.src_id.to_be_bytes());
        input.extend_from_slice(&self.dst_id.to_be_bytes());
        input.extend_from_slice(&(self.payload.len() as u16).to_be_bytes());
        if let Some(c) = ctr {
            input.extend_from_slice(&c.to_be_bytes());
        }
        input.extend_from_slice(&self.payload);
        input
    }
}

/// 8-byte freshness nonce, generated fresh per request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Nonce(pub [u8; 8]);

impl Nonce {
    pub fn generate<R: RngCore>(rng: &mut R) -> Self {
        let mut bytes = [0u8; 8];
        rng.fill_bytes(&mut bytes);
        Nonce(bytes)
    }
}

/// Per-pair SNEP state: directional keys plus the implicit counters.
///
/// Owned by exactly one logical endpoint; operations on one association are
/// serialized. Distinct associations are independent.
#[derive(Debug)]
pub struct SecurityAssociation {
    local_id: u32,
    peer_id: u32,
    k_enc_send: CipherKey,
    k_mac_send: MacKey,
    k_enc_recv: CipherKey,
    k_mac_recv: MacKey,
    ctr_send: Counter,
    ctr_recv: Counter,
}

impl SecurityAssociation {
    /// Build the local endpoint's view from a directional key set. `local_id`
    /// must be one of the two ids the keys were derived for.
    pub fn new(keys: &PairKeys, local_id: u32, peer_id: u32) -> Self {
        let local_is_low = local_id < peer_id;
        let (k_enc_send, k_mac_send, k_enc_recv, k_mac_recv) = if local_is_low {
            (
                keys.enc_low_to_high,
                keys.mac_low_to_high,
                keys.enc_high_to_low,
                keys.mac_high_to_low,
            )
        } else {
            (
                keys.enc_high_to_low,
                keys.mac_high_to_low,
                keys.enc_low_to_high,
                keys.mac_low_to_high,
            )
        };
        // A collision here would mean a broken derivation, not bad luck.
        assert!(
            k_enc_send != k_enc_recv
                && k_mac_send.as_bytes() != k_mac_recv.as_bytes()
                && k_enc_send.as_bytes() != k_mac_send.as_bytes()
                && k_enc_recv.as_bytes() != k_mac_recv.as_bytes(),
            "directional keys must be pairwise distinct"
        );
        Self {
            local_id,
            peer_id,
            k_enc_send,
            k_mac_send,
            k_enc_recv,
            k_mac_recv,
            ctr_send: Counter::default(),
            ctr_recv: Counter::default(),
        }
    }

    /// Derive an association directly from a master key.
    pub fn from_master(km: &MasterKey, local_id: u32, peer_id: u32) -> Result<Self, SnepError> {
        let keys = derive_pair_keys(km, local_id, peer_id)?;
        Ok(Self::new(&keys, local_id, peer_id))
    }

    /// Association from an already-shared 16-byte pair key (as delivered by a
    /// base station for vehicle-to-vehicle traffic).
    pub fn from_pair_key(k_ab: [u8; 16], local_id: u32, peer_id: u32) -> Self {
        Self::new(&pair_keys_from_shared(k_ab), local_id, peer_id)
    }

    pub fn local_id(&self) -> u32 {
        self.local_id
    }

    pub fn peer_id(&self) -> u32 {
        self.peer_id
    }

    /// Resume the association at explicit counter values, as when reloading
    /// persisted state or sealing a single message offline.
    pub fn at_counters(mut self, ctr_send: u32, ctr_recv: u32) -> Self {
        self.ctr_send = Counter::new(ctr_send);
        self.ctr_recv = Counter::new(ctr_recv);
        self
    }

    pub fn ctr_send(&self) -> u32 {
        self.ctr_send.value()
    }

    pub fn ctr_recv(&self) -> u32 {
        self.ctr_recv.value()
    }

    /// Key material and counters, for session transfer over the
    /// infrastructure backbone. Order: four 16-byte keys, then the two
    /// counters.
    pub(crate) fn export_state(&self) -> ([u8; 16], [u8; 16], [u8; 16], [u8; 16], u32, u32) {
        (
            *self.k_enc_send.as_bytes(),
            *self.k_mac_send.as_bytes(),
            *self.k_enc_recv.as_bytes(),
            *self.k_mac_recv.as_bytes(),
            self.ctr_send.value(),
            self.ctr_recv.value(),
        )
    }

    pub(crate) fn import_state(
        local_id: u32,
        peer_id: u32,
        keys: ([u8; 16], [u8; 16], [u8; 16], [u8; 16]),
        ctr_send: u32,
        ctr_recv: u32,
    ) -> Self {
        Self {
            local_id,
            peer_id,
            k_enc_send: CipherKey::new(keys.0),
            k_mac_send: MacKey::new(keys.1),
            k_enc_recv: CipherKey::new(keys.2),
            k_mac_recv: MacKey::new(keys.3),
            ctr_send: Counter::new(ctr_send),
            ctr_recv: Counter::new(ctr_recv),
        }
    }

    fn build_sealed(
        &mut self,
        ptype: u8,
        plaintext: &[u8],
        nonce: Option<&Nonce>,
    ) -> Result<SecurePacket, SnepError> {
        if plaintext.len() > MTU {
            return Err(SnepError::OversizePlaintext);
        }
        if self.ctr_send.value() >= u32::MAX - 1 {
            return Err(SnepError::Crypto(CryptoError::CounterExhausted));
        }
        let ctr = self.ctr_send.value();
        let payload = ctr_apply(&self.k_enc_send, Counter::new(ctr), plaintext)?;
        let mut pkt = SecurePacket {
            version: WIRE_VERSION,
            ptype,
            src_id: self.local_id,
            dst_id: self.peer_id,
            payload,
            tag: [0u8; 8],
        };
        pkt.tag = cbc_mac(&self.k_mac_send, &pkt.mac_input(nonce, Some(ctr)));
        self.ctr_send.increment()?;
        Ok(pkt)
    }

    /// Window search over candidate receive counters. On the first tag match,
    /// advances `ctr_recv` past the matched value and returns it. A packet
    /// accepted once can never verify again.
    fn verify_window(
        &mut self,
        pkt: &SecurePacket,
        nonce: Option<&Nonce>,
    ) -> Result<u32, SnepError> {
        for offset in 0..RESYNC_WINDOW {
            let Some(candidate) = self.ctr_recv.value().checked_add(offset) else {
                break;
            };
            let expected = cbc_mac(&self.k_mac_recv, &pkt.mac_input(nonce, Some(candidate)));
            if expected == pkt.tag {
                self.ctr_recv = Counter::new(candidate);
                self.ctr_recv.increment()?;
                return Ok(candidate);
            }
        }
        Err(SnepError::MacMismatch)
    }

    /// Encrypt-then-MAC `plaintext` into a DATA packet, advancing the send
    /// counter.
    pub fn seal(&mut self, plaintext: &[u8]) -> Result<SecurePacket, SnepError> {
        self.build_sealed(PTYPE_DATA, plaintext, None)
    }

    /// Verify and decrypt a DATA packet. No plaintext is released unless the
    /// MAC verified under some counter in the window.
    pub fn open(&mut self, pkt: &SecurePacket) -> Result<Vec<u8>, SnepError> {
        if pkt.ptype != PTYPE_DATA {
            return Err(SnepError::WrongPacketType(pkt.ptype));
        }
        if pkt.dst_id != self.local_id {
            return Err(SnepError::WrongAddressee {
                expected: self.local_id,
                got: pkt.dst_id,
            });
        }
        let matched = self.verify_window(pkt, None)?;
        Ok(ctr_apply(&self.k_enc_recv, Counter::new(matched), &pkt.payload)?)
    }

    /// Start a strong-freshness exchange: the nonce travels in the clear (it
    /// carries no secret) but the response MAC must bind it.
    pub fn nonce_request<R: RngCore>(&mut self, rng: &mut R) -> Result<(SecurePacket, Nonce), SnepError> {
        let nonce = Nonce::generate(rng);
        let ctr = self.ctr_send.value();
        let mut pkt = SecurePacket {
            version: WIRE_VERSION,
            ptype: PTYPE_NONCE_REQ,
            src_id: self.local_id,
            dst_id: self.peer_id,
            payload: nonce.0.to_vec(),
            tag: [0u8; 8],
        };
        pkt.tag = cbc_mac(&self.k_mac_send, &pkt.mac_input(None, Some(ctr)));
        self.ctr_send.increment()?;
        Ok((pkt, nonce))
    }

    /// Answer a nonce request with a sealed response whose MAC additionally
    /// binds the requester's nonce.
    pub fn nonce_respond(
        &mut self,
        request: &SecurePacket,
        body: &[u8],
    ) -> Result<SecurePacket, SnepError> {
        if request.ptype != PTYPE_NONCE_REQ {
            return Err(SnepError::WrongPacketType(request.ptype));
        }
        if request.payload.len() != 8 {
            return Err(SnepError::Malformed("nonce request payload must be 8 bytes"));
        }
        self.verify_window(request, None)?;
        let nonce = Nonce(request.payload.as_slice().try_into().unwrap());
        self.build_sealed(PTYPE_NONCE_RESP, body, Some(&nonce))
    }

    /// Verify a response against the pending nonce. Success proves the
    /// response postdates the request.
    pub fn nonce_verify(
        &mut self,
        pending: &Nonce,
        response: &SecurePacket,
    ) -> Result<Vec<u8>, SnepError> {
        if response.ptype != PTYPE_NONCE_RESP {
            return Err(SnepError::WrongPacketType(response.ptype));
        }
        let matched = self
            .verify_window(response, Some(pending))
            .map_err(|_| SnepError::FreshnessFailure)?;
        Ok(ctr_apply(&self.k_enc_recv, Counter::new(matched), &response.payload)?)
    }

    /// Begin counter resynchronization. The request carries a fresh nonce and
    /// this side's send counter; its MAC is counterless, since the exchange
    /// exists precisely when counters may be arbitrarily far apart.
    pub fn sync_request<R: RngCore>(&mut self, rng: &mut R) -> (SecurePacket, Nonce) {
        let nonce = Nonce::generate(rng);
        let mut payload = nonce.0.to_vec();
        payload.extend_from_slice(&self.ctr_send.value().to_be_bytes());
        let mut pkt = SecurePacket {
            version: WIRE_VERSION,
            ptype: PTYPE_CTR_SYNC,
            src_id: self.local_id,
            dst_id: self.peer_id,
            payload,
            tag: [0u8; 8],
        };
        pkt.tag = cbc_mac(&self.k_mac_send, &pkt.mac_input(None, None));
        (pkt, nonce)
    }

    /// Accept a sync request: adopt the peer's send counter (never moving the
    /// receive counter backwards) and answer with this side's counter, bound
    /// to the request nonce.
    pub fn sync_respond(&mut self, request: &SecurePacket) -> Result<SecurePacket, SnepError> {
        if request.ptype != PTYPE_CTR_SYNC {
            return Err(SnepError::WrongPacketType(request.ptype));
        }
        if request.payload.len() != 12 {
            return Err(SnepError::Malformed("sync request payload must be 12 bytes"));
        }
        let expected = cbc_mac(&self.k_mac_recv, &request.mac_input(None, None));
        if expected != request.tag {
            return Err(SnepError::MacMismatch);
        }
        let nonce = Nonce(request.payload[..8].try_into().unwrap());
        let peer_ctr = u32::from_be_bytes(request.payload[8..12].try_into().unwrap());
        self.ctr_recv.advance_to(peer_ctr);

        let mut pkt = SecurePacket {
            version: WIRE_VERSION,
            ptype: PTYPE_CTR_SYNC,
            src_id: self.local_id,
            dst_id: self.peer_id,
            payload: self.ctr_send.value().to_be_bytes().to_vec(),
            tag: [0u8; 8],
        };
        pkt.tag = cbc_mac(&self.k_mac_send, &pkt.mac_input(Some(&nonce), None));
        Ok(pkt)
    }

    /// Complete the exchange: verify the nonce-bound response and adopt the
    /// peer's send counter.
    pub fn sync_finish(
        &mut self,
        pending: &Nonce,
        response: &SecurePacket,
    ) -> Result<(), SnepError> {
        if response.ptype != PTYPE_CTR_SYNC {
            return Err(SnepError::WrongPacketType(response.ptype));
        }
        if response.payload.len() != 4 {
            return Err(SnepError::Malformed("sync response payload must be 4 bytes"));
        }
        let expected = cbc_mac(&self.k_mac_recv, &response.mac_input(Some(pending), None));
        if expected != response.tag {
            return Err(SnepError::MacMismatch);
        }
        let peer_ctr = u32::from_be_bytes(response.payload.as_slice().try_into().unwrap());
        self.ctr_recv.advance_to(peer_ctr);
        Ok(())
    }
}

/// Block-cipher invocations needed to seal and open one DATA packet with a
/// `payload_len`-byte plaintext, both endpoints combined: keystream blocks
/// plus MAC blocks (length block included), each computed twice.
pub fn snep_block_ops(payload_len: usize) -> usize {
    let keystream = payload_len.div_ceil(8);
    let mac_input = HEADER_LEN + 4 + payload_len;
    let mac_blocks = 1 + mac_input.div_ceil(8);
    2 * (keystream + mac_blocks)
}

/// Run a full counter_sync exchange between two live endpoints in memory.
pub fn counter_sync<R: RngCore>(
    a: &mut SecurityAssociation,
    b: &mut SecurityAssociation,
    rng: &mut R,
) -> Result<(), SnepError> {
    let (req, pending) = a.sync_request(rng);
    let resp = b.sync_respond(&req)?;
    a.sync_finish(&pending, &resp)
}
