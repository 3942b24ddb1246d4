//! Authenticated broadcast through a one-way key chain with delayed key
//! disclosure.
//!
//! The sender holds a chain K_0..K_n with K_i = F(K_{i+1}); K_0 is the public
//! commitment. Broadcasts in interval i are MACed under a key derived from
//! K_i, and K_i itself is only disclosed d intervals later. A receiver
//! buffers packets that pass the safety test (the key cannot yet have been
//! disclosed under worst-case clock skew) and authenticates them once a
//! disclosed key chains back to its commitment.

use std::collections::BTreeMap;

use rand::RngCore;

use crate::crypto::{cbc_mac, chain_step, prf, ChainKey, Mac, MacKey};
use crate::snep::{
    Nonce, SecurePacket, SecurityAssociation, SnepError, BROADCAST_ID, PTYPE_TESLA_BCAST,
    PTYPE_TESLA_DISCLOSE, WIRE_VERSION,
};
use thiserror::Error;

/// Receiver buffer cap, in packets. Eviction drops the oldest interval.
pub const BUFFER_CAP: usize = 4096;

const LABEL_INTERVAL_MAC_LO: u8 = 0x05;
const LABEL_INTERVAL_MAC_HI: u8 = 0x06;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TeslaError {
    #[error("chain length must be at least d + 1")]
    ChainTooShort,
    #[error("time {0} precedes the schedule epoch")]
    BeforeEpoch(u64),
    #[error("chain interval index {0} out of range")]
    IndexOutOfRange(u32),
    #[error("chain exhausted; roll a new chain and re-commit")]
    ChainExhausted,
    #[error("disclosed key does not chain to the commitment")]
    ChainMismatch,
    #[error(transparent)]
    Snep(#[from] SnepError),
}

/// Interval schedule shared by sender and receivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainSchedule {
    /// Epoch start, ms.
    pub t0: u64,
    /// Interval duration, ms.
    pub t_int: u64,
    /// Disclosure delay, intervals.
    pub d: u32,
}

impl ChainSchedule {
    /// Interval index containing time `t` (ms). Errors before the epoch.
    pub fn interval_of(&self, t: u64) -> Result<u32, TeslaError> {
        if t < self.t0 {
            return Err(TeslaError::BeforeEpoch(t));
        }
        Ok(((t - self.t0) / self.t_int) as u32)
    }

    /// Like [`interval_of`](Self::interval_of) but treating pre-epoch times
    /// as "before interval 0", which is always on the safe side of the
    /// disclosure test.
    fn interval_of_saturating(&self, t: u64) -> i64 {
        if t < self.t0 {
            -1
        } else {
            ((t - self.t0) / self.t_int) as i64
        }
    }
}

/// Sender-side key chain K_0..K_n plus its schedule.
///
/// Immutable after generation; every base station of one infrastructure holds
/// the identical chain.
#[derive(Debug)]
pub struct KeyChain {
    keys: Vec<ChainKey>,
    schedule: ChainSchedule,
}

impl KeyChain {
    /// Generate a chain of n+1 elements with K_n = seed, walking the one-way
    /// function down to the commitment K_0.
    pub fn generate(
        seed: ChainKey,
        n: u32,
        t0: u64,
        t_int: u64,
        d: u32,
    ) -> Result<Self, TeslaError> {
        if n < d + 1 || t_int == 0 || d < 2 {
            return Err(TeslaError::ChainTooShort);
        }
        let mut keys = vec![seed; n as usize + 1];
        for i in (0..n as usize).rev() {
            keys[i] = chain_step(&keys[i + 1]);
        }
        Ok(Self {
            keys,
            schedule: ChainSchedule { t0, t_int, d },
        })
    }

    pub fn schedule(&self) -> ChainSchedule {
        self.schedule
    }

    /// Highest interval index.
    pub fn n(&self) -> u32 {
        (self.keys.len() - 1) as u32
    }

    /// The public commitment K_0.
    pub fn commitment(&self) -> ChainKey {
        self.keys[0]
    }

    pub fn key(&self, i: u32) -> Result<ChainKey, TeslaError> {
        self.keys
            .get(i as usize)
            .copied()
            .ok_or(TeslaError::IndexOutOfRange(i))
    }

    /// MAC key for interval i. Chain elements are never used directly as MAC
    /// keys.
    pub fn interval_mac_key(&self, i: u32) -> Result<MacKey, TeslaError> {
        Ok(interval_mac_key_from(&self.key(i)?))
    }

    /// Seal a broadcast for the interval containing `t_now`. The packet
    /// piggybacks the key disclosed for interval i - d (all-zero sentinel
    /// while i < d).
    pub fn bcast_seal(
        &self,
        t_now: u64,
        src_id: u32,
        body: &[u8],
    ) -> Result<SecurePacket, TeslaError> {
        let i = self.schedule.interval_of(t_now)?;
        if i > self.n() - 1 {
            return Err(TeslaError::ChainExhausted);
        }
        let disclosed_index = i.saturating_sub(self.schedule.d);
        let disclosed_key = if i < self.schedule.d {
            ChainKey::new([0u8; 8])
        } else {
            self.keys[disclosed_index as usize]
        };

        let mut payload = Vec::with_capacity(16 + body.len());
        payload.extend_from_slice(&i.to_be_bytes());
        payload.extend_from_slice(&disclosed_index.to_be_bytes());
        payload.extend_from_slice(disclosed_key.as_bytes());
        payload.extend_from_slice(body);

        let mut pkt = SecurePacket {
            version: WIRE_VERSION,
            ptype: PTYPE_TESLA_BCAST,
            src_id,
            dst_id: BROADCAST_ID,
            payload,
            tag: [0u8; 8],
        };
        pkt.tag = tesla_mac(&self.interval_mac_key(i)?, &pkt, i);
        Ok(pkt)
    }

    /// Standalone disclosure packet for the key of interval
    /// `interval_of(t_now) - d`, or None while nothing is disclosable. The
    /// key authenticates itself through the chain, so the packet carries no
    /// MAC.
    pub fn disclosure_packet(&self, t_now: u64, src_id: u32) -> Option<SecurePacket> {
        let i = self.schedule.interval_of(t_now).ok()?;
        if i < self.schedule.d {
            return None;
        }
        let j = (i - self.schedule.d).min(self.n());
        let mut payload = Vec::with_capacity(12);
        payload.extend_from_slice(&j.to_be_bytes());
        payload.extend_from_slice(self.keys[j as usize].as_bytes());
        Some(SecurePacket {
            version: WIRE_VERSION,
            ptype: PTYPE_TESLA_DISCLOSE,
            src_id,
            dst_id: BROADCAST_ID,
            payload,
            tag: [0u8; 8],
        })
    }
}

/// MAC key derived from a chain element.
pub fn interval_mac_key_from(k: &ChainKey) -> MacKey {
    let mut key = [0u8; 16];
    key[..8].copy_from_slice(k.as_bytes());
    let lo = prf(&key, &[LABEL_INTERVAL_MAC_LO]);
    let hi = prf(&key, &[LABEL_INTERVAL_MAC_HI]);
    let mut out = [0u8; 16];
    out[..8].copy_from_slice(&lo);
    out[8..].copy_from_slice(&hi);
    MacKey::new(out)
}

/// Broadcast MAC input: header fields, claimed interval, payload.
fn tesla_mac(key: &MacKey, pkt: &SecurePacket, interval: u32) -> Mac {
    let mut input = Vec::with_capacity(16 + pkt.payload.len());
    input.push(pkt.version);
    input.push(pkt.ptype);
    input.extend_from_slice(&pkt.src_id.to_be_bytes());
    input.extend_from_slice(&pkt.dst_id.to_be_bytes());
    input.extend_from_slice(&(pkt.payload.len() as u16).to_be_bytes());
    input.extend_from_slice(&interval.to_be_bytes());
    input.extend_from_slice(&pkt.payload);
    cbc_mac(key, &input)
}

/// Parsed broadcast payload.
#[derive(Debug, Clone)]
pub struct TeslaFrame {
    pub interval: u32,
    pub disclosed_index: u32,
    pub disclosed_key: ChainKey,
    pub body: Vec<u8>,
}

impl TeslaFrame {
    pub fn parse(pkt: &SecurePacket) -> Result<Self, TeslaError> {
        if pkt.ptype != PTYPE_TESLA_BCAST {
            return Err(SnepError::WrongPacketType(pkt.ptype).into());
        }
        if pkt.payload.len() < 16 {
            return Err(SnepError::Malformed("broadcast payload shorter than its fixed fields").into());
        }
        Ok(Self {
            interval: u32::from_be_bytes(pkt.payload[0..4].try_into().unwrap()),
            disclosed_index: u32::from_be_bytes(pkt.payload[4..8].try_into().unwrap()),
            disclosed_key: ChainKey::new(pkt.payload[8..16].try_into().unwrap()),
            body: pkt.payload[16..].to_vec(),
        })
    }
}

/// Outcome of presenting one broadcast packet to the receiver state.
#[derive(Debug, PartialEq, Eq)]
pub enum RecvOutcome {
    /// Passed the safety test; awaiting key disclosure.
    Buffered,
    /// The key for this interval could already have been disclosed at
    /// arrival; accepting it would let an eavesdropper forge.
    RejectedUnsafe,
    /// The key for this interval is already disclosed and public, so a valid
    /// MAC no longer proves who sent the packet.
    RejectedStale,
}

/// What a disclosure released.
#[derive(Debug, Default)]
pub struct DisclosureReport {
    /// Authenticated bodies in non-decreasing interval order.
    pub authenticated: Vec<(u32, Vec<u8>)>,
    /// Buffered packets whose MAC failed under the now-known key.
    pub auth_failed: usize,
}

/// Receiver-side broadcast authentication state, owned by one endpoint.
#[derive(Debug)]
pub struct BroadcastAuthState {
    commit_index: u32,
    commit_key: ChainKey,
    schedule: ChainSchedule,
    /// Worst-case clock error plus propagation bound, ms.
    max_skew: u64,
    buffer: BTreeMap<u32, Vec<SecurePacket>>,
    buffered_packets: usize,
    buffered_bytes: usize,
}

impl BroadcastAuthState {
    pub fn new(commitment: ChainKey, schedule: ChainSchedule, max_skew: u64) -> Self {
        Self {
            commit_index: 0,
            commit_key: commitment,
            schedule,
            max_skew,
            buffer: BTreeMap::new(),
            buffered_packets: 0,
            buffered_bytes: 0,
        }
    }

    pub fn commit_index(&self) -> u32 {
        self.commit_index
    }

    pub fn commit_key(&self) -> ChainKey {
        self.commit_key
    }

    pub fn schedule(&self) -> ChainSchedule {
        self.schedule
    }

    pub fn buffered_packets(&self) -> usize {
        self.buffered_packets
    }

    /// Wire bytes currently held in the buffer.
    pub fn buffered_bytes(&self) -> usize {
        self.buffered_bytes
    }

    /// Safety test and buffering for one broadcast packet. `t_arrival` is the
    /// receiver's local clock in ms.
    pub fn recv_check_and_buffer(
        &mut self,
        pkt: &SecurePacket,
        t_arrival: u64,
    ) -> Result<RecvOutcome, TeslaError> {
        let frame = TeslaFrame::parse(pkt)?;
        let i = frame.interval;

        if i <= self.commit_index {
            // The key for this interval is public knowledge by now, so even a
            // valid MAC could have been produced by anyone.
            return Ok(RecvOutcome::RejectedStale);
        }

        // The sender discloses K_i at interval i + d. Under worst-case skew
        // our clock may lag by max_skew, so the packet is only safe if even
        // the advanced clock is still before that disclosure interval.
        let worst_case = self.schedule.interval_of_saturating(t_arrival + self.max_skew);
        if worst_case >= i as i64 + self.schedule.d as i64 {
            return Ok(RecvOutcome::RejectedUnsafe);
        }

        if self.buffered_packets >= BUFFER_CAP {
            self.evict_oldest_interval();
        }
        self.buffered_packets += 1;
        self.buffered_bytes += pkt.wire_len();
        self.buffer.entry(i).or_default().push(pkt.clone());
        Ok(RecvOutcome::Buffered)
    }

    fn evict_oldest_interval(&mut self) {
        if let Some((&oldest, _)) = self.buffer.iter().next() {
            if let Some(dropped) = self.buffer.remove(&oldest) {
                self.buffered_packets -= dropped.len();
                self.buffered_bytes -= dropped.iter().map(|p| p.wire_len()).sum::<usize>();
            }
        }
    }

    /// Verify a disclosed key against the commitment and authenticate every
    /// buffered packet it unlocks. On [`TeslaError::ChainMismatch`] the state
    /// is unchanged and the key discarded.
    pub fn process_disclosure(
        &mut self,
        disclosed_index: u32,
        disclosed_key: ChainKey,
    ) -> Result<DisclosureReport, TeslaError> {
        if disclosed_index <= self.commit_index {
            // Nothing new; tolerate duplicate disclosures silently.
            return Ok(DisclosureReport::default());
        }
        let steps = disclosed_index - self.commit_index;
        let mut walk = disclosed_key;
        for _ in 0..steps {
            walk = chain_step(&walk);
        }
        if walk != self.commit_key {
            return Err(TeslaError::ChainMismatch);
        }

        // Reconstruct K_{commit_index}..K_{disclosed_index} so intermediate
        // intervals whose own disclosures were lost still authenticate.
        let mut keys = vec![disclosed_key; steps as usize + 1];
        for idx in (0..steps as usize).rev() {
            keys[idx] = chain_step(&keys[idx + 1]);
        }
        let base = self.commit_index;
        self.commit_index = disclosed_index;
        self.commit_key = disclosed_key;

        let mut report = DisclosureReport::default();
        let unlocked: Vec<u32> = self
            .buffer
            .range(..=disclosed_index)
            .map(|(&i, _)| i)
            .collect();
        for i in unlocked {
            let packets = self.buffer.remove(&i).unwrap();
            self.buffered_packets -= packets.len();
            self.buffered_bytes -= packets.iter().map(|p| p.wire_len()).sum::<usize>();
            let key = interval_mac_key_from(&keys[(i - base) as usize]);
            for pkt in packets {
                let frame = TeslaFrame::parse(&pkt)?;
                if tesla_mac(&key, &pkt, i) == pkt.tag {
                    report.authenticated.push((i, frame.body));
                } else {
                    report.auth_failed += 1;
                }
            }
        }
        Ok(report)
    }

    /// Full receive path for one broadcast: first fold in the piggybacked
    /// disclosure (a key that does not chain is dropped), then run the safety
    /// test on the packet itself.
    pub fn handle_broadcast(
        &mut self,
        pkt: &SecurePacket,
        t_arrival: u64,
    ) -> Result<(RecvOutcome, DisclosureReport), TeslaError> {
        let frame = TeslaFrame::parse(pkt)?;
        let mut report = DisclosureReport::default();
        if frame.disclosed_key.as_bytes() != &[0u8; 8] {
            match self.process_disclosure(frame.disclosed_index, frame.disclosed_key) {
                Ok(r) => report = r,
                Err(TeslaError::ChainMismatch) => {}
                Err(e) => return Err(e),
            }
        }
        let outcome = self.recv_check_and_buffer(pkt, t_arrival)?;
        Ok((outcome, report))
    }

    /// Receive path for a standalone disclosure packet.
    pub fn handle_disclosure_packet(
        &mut self,
        pkt: &SecurePacket,
    ) -> Result<DisclosureReport, TeslaError> {
        if pkt.ptype != PTYPE_TESLA_DISCLOSE {
            return Err(SnepError::WrongPacketType(pkt.ptype).into());
        }
        if pkt.payload.len() != 12 {
            return Err(SnepError::Malformed("disclosure payload must be 12 bytes").into());
        }
        let index = u32::from_be_bytes(pkt.payload[0..4].try_into().unwrap());
        let key = ChainKey::new(pkt.payload[4..12].try_into().unwrap());
        match self.process_disclosure(index, key) {
            Ok(r) => Ok(r),
            Err(TeslaError::ChainMismatch) => Err(TeslaError::ChainMismatch),
            Err(e) => Err(e),
        }
    }
}

/// Commitment parameters delivered over SNEP during bootstrap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainParams {
    pub commitment: ChainKey,
    pub t0: u64,
    pub t_int: u64,
    pub d: u32,
    pub n: u32,
}

impl ChainParams {
    pub const WIRE_LEN: usize = 8 + 8 + 8 + 4 + 4;

    pub fn for_chain(chain: &KeyChain) -> Self {
        let s = chain.schedule();
        Self {
            commitment: chain.commitment(),
            t0: s.t0,
            t_int: s.t_int,
            d: s.d,
            n: chain.n(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::WIRE_LEN);
        out.extend_from_slice(self.commitment.as_bytes());
        out.extend_from_slice(&self.t0.to_be_bytes());
        out.extend_from_slice(&self.t_int.to_be_bytes());
        out.extend_from_slice(&self.d.to_be_bytes());
        out.extend_from_slice(&self.n.to_be_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, TeslaError> {
        if bytes.len() != Self::WIRE_LEN {
            return Err(SnepError::Malformed("chain parameter block has wrong length").into());
        }
        Ok(Self {
            commitment: ChainKey::new(bytes[0..8].try_into().unwrap()),
            t0: u64::from_be_bytes(bytes[8..16].try_into().unwrap()),
            t_int: u64::from_be_bytes(bytes[16..24].try_into().unwrap()),
            d: u32::from_be_bytes(bytes[24..28].try_into().unwrap()),
            n: u32::from_be_bytes(bytes[28..32].try_into().unwrap()),
        })
    }

    pub fn schedule(&self) -> ChainSchedule {
        ChainSchedule {
            t0: self.t0,
            t_int: self.t_int,
            d: self.d,
        }
    }
}

/// Vehicle side of commitment bootstrap: a nonce request over the live SNEP
/// association.
pub fn request_commitment<R: RngCore>(
    assoc: &mut SecurityAssociation,
    rng: &mut R,
) -> Result<(SecurePacket, Nonce), TeslaError> {
    Ok(assoc.nonce_request(rng)?)
}

/// Base-station side: answer a commitment request with the chain parameters,
/// nonce-bound for strong freshness.
pub fn serve_commitment(
    assoc: &mut SecurityAssociation,
    request: &SecurePacket,
    chain: &KeyChain,
) -> Result<SecurePacket, TeslaError> {
    let params = ChainParams::for_chain(chain);
    Ok(assoc.nonce_respond(request, &params.to_bytes())?)
}

/// Vehicle side: verify the nonce-bound response and initialize receiver
/// state with commit_index 0.
pub fn accept_commitment(
    assoc: &mut SecurityAssociation,
    pending: &Nonce,
    response: &SecurePacket,
    max_skew: u64,
) -> Result<BroadcastAuthState, TeslaError> {
    let body = assoc.nonce_verify(pending, response)?;
    let params = ChainParams::from_bytes(&body)?;
    Ok(BroadcastAuthState::new(
        params.commitment,
        params.schedule(),
        max_skew,
    ))
}
