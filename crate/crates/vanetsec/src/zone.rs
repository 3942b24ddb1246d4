//! Sub-VANET zones and session inheritance.
//!
//! Every base station of one road operator holds the same master key and the
//! same broadcast key chain, so the vehicle's security association is
//! logically with "the infrastructure" and survives zone crossings. The first
//! join runs a four-message bootstrap; afterwards the serving station ships
//! the session record to the next station over the backbone and a single
//! over-the-air hello resumes the session there. Counters and the broadcast
//! commitment are never reset.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::RngCore;

use crate::crypto::{ChainKey, MasterKey};
use crate::mutesla::{
    accept_commitment, request_commitment, serve_commitment, BroadcastAuthState, KeyChain,
    TeslaError,
};
use crate::snep::{SecurityAssociation, SnepError};
use thiserror::Error;

/// Logical address of the infrastructure endpoint; vehicle ids must differ.
pub const INFRASTRUCTURE_ID: u32 = 0;

/// Number of over-the-air messages in a full bootstrap.
pub const BOOTSTRAP_OTA_MESSAGES: u32 = 4;
/// Number of over-the-air messages in an inherited-session handoff.
pub const HANDOFF_OTA_MESSAGES: u32 = 1;

const HELLO_BODY: &[u8] = b"HANDOFF-HELLO";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ZoneError {
    #[error("vehicle {vehicle} is outside the zone of station {station}")]
    OutOfRange { vehicle: u32, station: u32 },
    #[error("no session for vehicle {0} at this station")]
    NoSession(u32),
    #[error("handoff ticket malformed: {0}")]
    BadTicket(&'static str),
    #[error("vehicle id {0} collides with the infrastructure address")]
    ReservedId(u32),
    #[error(transparent)]
    Snep(#[from] SnepError),
    #[error(transparent)]
    Tesla(#[from] TeslaError),
}

/// Transferable vehicle-to-infrastructure state held by the serving station.
#[derive(Debug)]
pub struct SessionRecord {
    pub vehicle_id: u32,
    /// Infrastructure-side association (local = infrastructure, peer =
    /// vehicle).
    pub association: SecurityAssociation,
    /// (commit_index, commit_key) the vehicle reported at bootstrap or the
    /// last handoff; retained so the next station can audit chain continuity.
    pub auth_state_snapshot: (u32, ChainKey),
    pub created_at: u64,
    pub last_handoff_at: u64,
}

/// One roadside gateway anchoring a zone.
pub struct BaseStation {
    pub id: u32,
    /// Meters along the road.
    pub position: f64,
    pub radius: f64,
    master_key: MasterKey,
    chain: Arc<KeyChain>,
    sessions: BTreeMap<u32, SessionRecord>,
    /// Skew bound advertised to joining vehicles, ms.
    max_skew_ms: u64,
}

impl BaseStation {
    pub fn new(id: u32, position: f64, radius: f64, master_key: MasterKey, chain: Arc<KeyChain>) -> Self {
        Self {
            id,
            position,
            radius,
            master_key,
            chain,
            sessions: BTreeMap::new(),
            max_skew_ms: DEFAULT_MAX_SKEW_MS,
        }
    }

    pub fn with_max_skew(mut self, max_skew_ms: u64) -> Self {
        self.max_skew_ms = max_skew_ms;
        self
    }

    pub fn chain(&self) -> &Arc<KeyChain> {
        &self.chain
    }

    pub fn covers(&self, position: f64) -> bool {
        (position - self.position).abs() <= self.radius
    }

    pub fn session(&self, vehicle_id: u32) -> Option<&SessionRecord> {
        self.sessions.get(&vehicle_id)
    }

    pub fn session_mut(&mut self, vehicle_id: u32) -> Option<&mut SessionRecord> {
        self.sessions.get_mut(&vehicle_id)
    }

    pub fn session_count(&self) -> usize {
        self.sessions.len()
    }

    /// Zone-scoped secret for vehicle-to-vehicle pair derivation.
    fn zone_pair_secret(&self) -> MasterKey {
        MasterKey::new(crate::crypto::prf_expand16(
            self.master_key.as_bytes(),
            0x20,
            &self.id.to_be_bytes(),
        ))
    }
}

/// Vehicle-side live session.
#[derive(Debug)]
pub struct VehicleSession {
    pub vehicle_id: u32,
    pub association: SecurityAssociation,
    pub auth_state: BroadcastAuthState,
    pub current_station: u32,
}

/// Result of a completed bootstrap, with the exchange audit.
#[derive(Debug)]
pub struct BootstrapOutcome {
    pub session: VehicleSession,
    pub ota_messages: u32,
}

/// Full first-join exchange between a provisioned vehicle and a base station.
///
/// Four over-the-air messages: (1) join beacon carrying a fresh nonce, (2)
/// nonce-bound schedule-and-counter response, (3) counter sync from the
/// vehicle, (4) sealed chain commitment. Both endpoints are driven here so
/// every packet is actually built and verified; a wrong vehicle master key
/// fails at message 2.
pub fn bootstrap<R: RngCore>(
    vehicle_id: u32,
    vehicle_km: &MasterKey,
    position: f64,
    bs: &mut BaseStation,
    t_now: u64,
    rng: &mut R,
) -> Result<BootstrapOutcome, ZoneError> {
    if vehicle_id == INFRASTRUCTURE_ID {
        return Err(ZoneError::ReservedId(vehicle_id));
    }
    if !bs.covers(position) {
        return Err(ZoneError::OutOfRange {
            vehicle: vehicle_id,
            station: bs.id,
        });
    }

    let mut vehicle_assoc =
        SecurityAssociation::from_master(vehicle_km, vehicle_id, INFRASTRUCTURE_ID)?;
    let mut bs_assoc =
        SecurityAssociation::from_master(&bs.master_key, INFRASTRUCTURE_ID, vehicle_id)?;

    // M1: join beacon (nonce request, vehicle -> station).
    let (m1, pending) = request_commitment(&mut vehicle_assoc, rng)?;

    // M2: nonce-bound parameter response. A re-join after a road wrap keeps
    // the infrastructure-side counters, so the station's send counter rides
    // along for the vehicle to adopt.
    let m2 = serve_commitment(&mut bs_assoc, &m1, &bs.chain)?;
    let auth_state = accept_commitment(&mut vehicle_assoc, &pending, &m2, bs.max_skew_ms)?;

    // M3 + M4: counter sync both ways.
    let (m3, sync_pending) = vehicle_assoc.sync_request(rng);
    let m4 = bs_assoc.sync_respond(&m3)?;
    vehicle_assoc.sync_finish(&sync_pending, &m4)?;

    let snapshot = (auth_state.commit_index(), auth_state.commit_key());
    bs.sessions.insert(
        vehicle_id,
        SessionRecord {
            vehicle_id,
            association: bs_assoc,
            auth_state_snapshot: snapshot,
            created_at: t_now,
            last_handoff_at: t_now,
        },
    );

    Ok(BootstrapOutcome {
        session: VehicleSession {
            vehicle_id,
            association: vehicle_assoc,
            auth_state,
            current_station: bs.id,
        },
        ota_messages: BOOTSTRAP_OTA_MESSAGES,
    })
}

/// Worst-case clock error plus propagation bound used for fresh receiver
/// state, ms.
pub const DEFAULT_MAX_SKEW_MS: u64 = 100;

/// Serialized session state moving over the infrastructure backbone (modeled
/// as reliable and confidential). Length-prefixed big-endian fields in
/// declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandoffTicket {
    pub vehicle_id: u32,
    pub session_blob: Vec<u8>,
    pub issuing_station: u32,
    pub target_station: u32,
}

fn put_field(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(&(bytes.len() as u16).to_be_bytes());
    out.extend_from_slice(bytes);
}

fn take_field<'a>(bytes: &mut &'a [u8]) -> Result<&'a [u8], ZoneError> {
    if bytes.len() < 2 {
        return Err(ZoneError::BadTicket("truncated length prefix"));
    }
    let len = u16::from_be_bytes(bytes[..2].try_into().unwrap()) as usize;
    if bytes.len() < 2 + len {
        return Err(ZoneError::BadTicket("truncated field"));
    }
    let (field, rest) = bytes[2..].split_at(len);
    *bytes = rest;
    Ok(field)
}

fn serialize_session(record: &SessionRecord) -> Vec<u8> {
    let (ke_s, km_s, ke_r, km_r, ctr_send, ctr_recv) = record.association.export_state();
    let mut out = Vec::new();
    put_field(&mut out, &record.vehicle_id.to_be_bytes());
    put_field(&mut out, &ke_s);
    put_field(&mut out, &km_s);
    put_field(&mut out, &ke_r);
    put_field(&mut out, &km_r);
    put_field(&mut out, &ctr_send.to_be_bytes());
    put_field(&mut out, &ctr_recv.to_be_bytes());
    put_field(&mut out, &record.auth_state_snapshot.0.to_be_bytes());
    put_field(&mut out, record.auth_state_snapshot.1.as_bytes());
    put_field(&mut out, &record.created_at.to_be_bytes());
    put_field(&mut out, &record.last_handoff_at.to_be_bytes());
    out
}

fn deserialize_session(blob: &[u8]) -> Result<SessionRecord, ZoneError> {
    let mut rest = blob;
    let u32_field = |b: &[u8]| -> Result<u32, ZoneError> {
        Ok(u32::from_be_bytes(
            b.try_into().map_err(|_| ZoneError::BadTicket("bad u32 field"))?,
        ))
    };
    let u64_field = |b: &[u8]| -> Result<u64, ZoneError> {
        Ok(u64::from_be_bytes(
            b.try_into().map_err(|_| ZoneError::BadTicket("bad u64 field"))?,
        ))
    };
    let key_field = |b: &[u8]| -> Result<[u8; 16], ZoneError> {
        b.try_into().map_err(|_| ZoneError::BadTicket("bad key field"))
    };

    let vehicle_id = u32_field(take_field(&mut rest)?)?;
    let ke_s = key_field(take_field(&mut rest)?)?;
    let km_s = key_field(take_field(&mut rest)?)?;
    let ke_r = key_field(take_field(&mut rest)?)?;
    let km_r = key_field(take_field(&mut rest)?)?;
    let ctr_send = u32_field(take_field(&mut rest)?)?;
    let ctr_recv = u32_field(take_field(&mut rest)?)?;
    let commit_index = u32_field(take_field(&mut rest)?)?;
    let commit_key: [u8; 8] = take_field(&mut rest)?
        .try_into()
        .map_err(|_| ZoneError::BadTicket("bad chain key field"))?;
    let created_at = u64_field(take_field(&mut rest)?)?;
    let last_handoff_at = u64_field(take_field(&mut rest)?)?;
    if !rest.is_empty() {
        return Err(ZoneError::BadTicket("trailing bytes"));
    }

    Ok(SessionRecord {
        vehicle_id,
        association: SecurityAssociation::import_state(
            INFRASTRUCTURE_ID,
            vehicle_id,
            (ke_s, km_s, ke_r, km_r),
            ctr_send,
            ctr_recv,
        ),
        auth_state_snapshot: (commit_index, ChainKey::new(commit_key)),
        created_at,
        last_handoff_at,
    })
}

impl HandoffTicket {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        put_field(&mut out, &self.vehicle_id.to_be_bytes());
        put_field(&mut out, &self.session_blob);
        put_field(&mut out, &self.issuing_station.to_be_bytes());
        put_field(&mut out, &self.target_station.to_be_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ZoneError> {
        let mut rest = bytes;
        let vehicle_id = u32::from_be_bytes(
            take_field(&mut rest)?
                .try_into()
                .map_err(|_| ZoneError::BadTicket("bad vehicle id"))?,
        );
        let session_blob = take_field(&mut rest)?.to_vec();
        let issuing_station = u32::from_be_bytes(
            take_field(&mut rest)?
                .try_into()
                .map_err(|_| ZoneError::BadTicket("bad issuing station"))?,
        );
        let target_station = u32::from_be_bytes(
            take_field(&mut rest)?
                .try_into()
                .map_err(|_| ZoneError::BadTicket("bad target station"))?,
        );
        if !rest.is_empty() {
            return Err(ZoneError::BadTicket("trailing bytes"));
        }
        Ok(Self {
            vehicle_id,
            session_blob,
            issuing_station,
            target_station,
        })
    }
}

/// Detach the vehicle's session for transfer to `target_station`.
pub fn issue_ticket(
    from_bs: &mut BaseStation,
    vehicle_id: u32,
    target_station: u32,
) -> Result<HandoffTicket, ZoneError> {
    let record = from_bs
        .sessions
        .remove(&vehicle_id)
        .ok_or(ZoneError::NoSession(vehicle_id))?;
    Ok(HandoffTicket {
        vehicle_id,
        session_blob: serialize_session(&record),
        issuing_station: from_bs.id,
        target_station,
    })
}

/// Install a received ticket at the target station.
pub fn install_ticket(to_bs: &mut BaseStation, ticket: &HandoffTicket) -> Result<(), ZoneError> {
    let record = deserialize_session(&ticket.session_blob)?;
    if record.vehicle_id != ticket.vehicle_id {
        return Err(ZoneError::BadTicket("vehicle id mismatch"));
    }
    to_bs.sessions.insert(record.vehicle_id, record);
    Ok(())
}

/// How a crossing was resolved.
pub struct HandoffOutcome {
    pub ota_messages: u32,
    pub fell_back_to_bootstrap: bool,
}

/// Resume the session at `to_bs`: ship the ticket over the backbone, then one
/// sealed over-the-air hello from the vehicle. Any failure on the inherited
/// path falls back to a full bootstrap.
pub fn handoff<R: RngCore>(
    from_bs: &mut BaseStation,
    to_bs: &mut BaseStation,
    vehicle: &mut VehicleSession,
    vehicle_km: &MasterKey,
    position: f64,
    t_now: u64,
    rng: &mut R,
) -> Result<HandoffOutcome, ZoneError> {
    if !to_bs.covers(position) {
        return Err(ZoneError::OutOfRange {
            vehicle: vehicle.vehicle_id,
            station: to_bs.id,
        });
    }

    let inherited = issue_ticket(from_bs, vehicle.vehicle_id, to_bs.id)
        .and_then(|ticket| install_ticket(to_bs, &ticket));

    if inherited.is_ok() {
        // One over-the-air message: sealed hello verified with the inherited
        // association.
        let hello = vehicle.association.seal(HELLO_BODY)?;
        let record = to_bs.session_mut(vehicle.vehicle_id).unwrap();
        match record.association.open(&hello) {
            Ok(body) if body == HELLO_BODY => {
                record.last_handoff_at = t_now;
                record.auth_state_snapshot =
                    (vehicle.auth_state.commit_index(), vehicle.auth_state.commit_key());
                vehicle.current_station = to_bs.id;
                return Ok(HandoffOutcome {
                    ota_messages: HANDOFF_OTA_MESSAGES,
                    fell_back_to_bootstrap: false,
                });
            }
            _ => {
                to_bs.sessions.remove(&vehicle.vehicle_id);
            }
        }
    }

    // Fallback: full bootstrap at the new station. The failed hello still
    // went over the air.
    let attempted_hello = u32::from(inherited.is_ok());
    let outcome = bootstrap(vehicle.vehicle_id, vehicle_km, position, to_bs, t_now, rng)?;
    *vehicle = outcome.session;
    Ok(HandoffOutcome {
        ota_messages: attempted_hello + BOOTSTRAP_OTA_MESSAGES,
        fell_back_to_bootstrap: true,
    })
}

/// Broker a vehicle-to-vehicle association through the serving station: two
/// sealed over-the-air messages, one per vehicle, each carrying the
/// zone-scoped pair key.
pub fn v2v_association(
    bs: &mut BaseStation,
    vehicle_a: &mut VehicleSession,
    vehicle_b: &mut VehicleSession,
) -> Result<(SecurityAssociation, SecurityAssociation, u32), ZoneError> {
    let id_a = vehicle_a.vehicle_id;
    let id_b = vehicle_b.vehicle_id;
    if bs.session(id_a).is_none() {
        return Err(ZoneError::NoSession(id_a));
    }
    if bs.session(id_b).is_none() {
        return Err(ZoneError::NoSession(id_b));
    }

    let pair = crate::crypto::derive_pair_keys(&bs.zone_pair_secret(), id_a, id_b)
        .map_err(SnepError::from)?;

    let pkt_a = bs
        .session_mut(id_a)
        .unwrap()
        .association
        .seal(&pair.k_ab)?;
    let delivered_a = vehicle_a.association.open(&pkt_a)?;
    let pkt_b = bs
        .session_mut(id_b)
        .unwrap()
        .association
        .seal(&pair.k_ab)?;
    let delivered_b = vehicle_b.association.open(&pkt_b)?;

    let k_ab_a: [u8; 16] = delivered_a
        .as_slice()
        .try_into()
        .map_err(|_| ZoneError::BadTicket("pair key delivery has wrong length"))?;
    let k_ab_b: [u8; 16] = delivered_b
        .as_slice()
        .try_into()
        .map_err(|_| ZoneError::BadTicket("pair key delivery has wrong length"))?;

    Ok((
        SecurityAssociation::from_pair_key(k_ab_a, id_a, id_b),
        SecurityAssociation::from_pair_key(k_ab_b, id_b, id_a),
        2,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::ChainKey;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn infrastructure() -> (MasterKey, Arc<KeyChain>) {
        let km = MasterKey::new([0x33; 16]);
        let chain =
            Arc::new(KeyChain::generate(ChainKey::new([9u8; 8]), 60, 0, 1000, 2).unwrap());
        (km, chain)
    }

    fn station(id: u32, position: f64, km: &MasterKey, chain: &Arc<KeyChain>) -> BaseStation {
        BaseStation::new(id, position, 300.0, *km, chain.clone())
    }

    #[test]
    fn bootstrap_takes_four_messages_and_goes_live() {
        let (km, chain) = infrastructure();
        let mut bs = station(1, 250.0, &km, &chain);
        let mut rng = ChaCha20Rng::seed_from_u64(30);
        let outcome = bootstrap(42, &km, 200.0, &mut bs, 1000, &mut rng).unwrap();
        assert_eq!(outcome.ota_messages, 4);
        assert_eq!(outcome.session.auth_state.commit_key(), chain.commitment());

        // session is live both ways
        let mut session = outcome.session;
        let pkt = session.association.seal(b"report").unwrap();
        let record = bs.session_mut(42).unwrap();
        assert_eq!(record.association.open(&pkt).unwrap(), b"report");
    }

    #[test]
    fn bootstrap_with_wrong_master_key_fails_at_message_two() {
        let (km, chain) = infrastructure();
        let mut bs = station(1, 250.0, &km, &chain);
        let wrong = MasterKey::new([0xBB; 16]);
        let mut rng = ChaCha20Rng::seed_from_u64(31);
        let err = bootstrap(42, &wrong, 200.0, &mut bs, 1000, &mut rng).unwrap_err();
        // The station rejects the join request before M2 can verify.
        assert!(matches!(
            err,
            ZoneError::Tesla(TeslaError::Snep(
                SnepError::MacMismatch | SnepError::FreshnessFailure
            ))
        ));
        assert!(bs.session(42).is_none());
    }

    #[test]
    fn out_of_range_bootstrap_rejected() {
        let (km, chain) = infrastructure();
        let mut bs = station(1, 250.0, &km, &chain);
        let mut rng = ChaCha20Rng::seed_from_u64(32);
        assert!(matches!(
            bootstrap(42, &km, 900.0, &mut bs, 0, &mut rng).unwrap_err(),
            ZoneError::OutOfRange { .. }
        ));
    }

    #[test]
    fn handoff_is_one_message_with_continuous_counters() {
        let (km, chain) = infrastructure();
        let mut bs_a = station(1, 250.0, &km, &chain);
        let mut bs_b = station(2, 750.0, &km, &chain);
        let mut rng = ChaCha20Rng::seed_from_u64(33);

        let mut vehicle = bootstrap(42, &km, 200.0, &mut bs_a, 0, &mut rng)
            .unwrap()
            .session;
        for _ in 0..7 {
            let pkt = vehicle.association.seal(b"zone a traffic").unwrap();
            bs_a.session_mut(42).unwrap().association.open(&pkt).unwrap();
        }
        let ctr_before = vehicle.association.ctr_send();
        let commit_before = vehicle.auth_state.commit_index();

        let outcome =
            handoff(&mut bs_a, &mut bs_b, &mut vehicle, &km, 600.0, 5000, &mut rng).unwrap();
        assert_eq!(outcome.ota_messages, 1);
        assert!(!outcome.fell_back_to_bootstrap);
        assert!(bs_a.session(42).is_none());

        // hello consumed one counter; no reset
        assert_eq!(vehicle.association.ctr_send(), ctr_before + 1);
        assert!(vehicle.auth_state.commit_index() >= commit_before);

        let pkt = vehicle.association.seal(b"zone b traffic").unwrap();
        assert_eq!(
            bs_b.session_mut(42).unwrap().association.open(&pkt).unwrap(),
            b"zone b traffic"
        );
    }

    #[test]
    fn broadcast_authenticates_across_handoff_with_shared_chain() {
        let (km, chain) = infrastructure();
        let mut bs_a = station(1, 250.0, &km, &chain);
        let mut bs_b = station(2, 750.0, &km, &chain);
        let mut rng = ChaCha20Rng::seed_from_u64(34);

        let mut vehicle = bootstrap(42, &km, 200.0, &mut bs_a, 0, &mut rng)
            .unwrap()
            .session;
        handoff(&mut bs_a, &mut bs_b, &mut vehicle, &km, 600.0, 5000, &mut rng).unwrap();

        // New station broadcasts immediately; same chain, so the existing
        // receiver state applies.
        let bcast = bs_b.chain().bcast_seal(5100, bs_b.id, b"zone b alert").unwrap();
        let (outcome, _) = vehicle.auth_state.handle_broadcast(&bcast, 5105).unwrap();
        assert_eq!(outcome, crate::mutesla::RecvOutcome::Buffered);
        let disclose = bs_b.chain().disclosure_packet(7200, bs_b.id).unwrap();
        let report = vehicle.auth_state.handle_disclosure_packet(&disclose).unwrap();
        assert_eq!(report.authenticated, vec![(5, b"zone b alert".to_vec())]);
    }

    #[test]
    fn corrupted_ticket_falls_back_to_bootstrap() {
        let (km, chain) = infrastructure();
        let mut bs_a = station(1, 250.0, &km, &chain);
        let mut bs_b = station(2, 750.0, &km, &chain);
        let mut rng = ChaCha20Rng::seed_from_u64(35);

        let mut vehicle = bootstrap(42, &km, 200.0, &mut bs_a, 0, &mut rng)
            .unwrap()
            .session;

        // Corrupt a byte of the receive MAC key (fifth length-prefixed field)
        // in the serialized session before installing.
        let mut ticket = issue_ticket(&mut bs_a, 42, bs_b.id).unwrap();
        ticket.session_blob[70] ^= 0xFF;
        install_ticket(&mut bs_b, &ticket).unwrap();

        let hello = vehicle.association.seal(HELLO_BODY).unwrap();
        let record = bs_b.session_mut(42).unwrap();
        assert!(record.association.open(&hello).is_err());
        bs_b.sessions.remove(&42);

        // Fresh bootstrap still succeeds at the new station.
        let outcome = bootstrap(42, &km, 600.0, &mut bs_b, 5000, &mut rng).unwrap();
        assert_eq!(outcome.ota_messages, 4);
    }

    #[test]
    fn missing_ticket_falls_back_inside_handoff() {
        let (km, chain) = infrastructure();
        let mut bs_a = station(1, 250.0, &km, &chain);
        let mut bs_b = station(2, 750.0, &km, &chain);
        let mut rng = ChaCha20Rng::seed_from_u64(36);

        let mut vehicle = bootstrap(42, &km, 200.0, &mut bs_a, 0, &mut rng)
            .unwrap()
            .session;
        // Drop the serving station's record to simulate a lost ticket.
        bs_a.sessions.remove(&42);

        let outcome =
            handoff(&mut bs_a, &mut bs_b, &mut vehicle, &km, 600.0, 5000, &mut rng).unwrap();
        assert!(outcome.fell_back_to_bootstrap);
        assert_eq!(outcome.ota_messages, BOOTSTRAP_OTA_MESSAGES);
        assert!(bs_b.session(42).is_some());
    }

    #[test]
    fn ticket_serialization_round_trips() {
        let (km, chain) = infrastructure();
        let mut bs_a = station(1, 250.0, &km, &chain);
        let mut rng = ChaCha20Rng::seed_from_u64(37);
        bootstrap(42, &km, 200.0, &mut bs_a, 123, &mut rng).unwrap();

        let ticket = issue_ticket(&mut bs_a, 42, 2).unwrap();
        let reparsed = HandoffTicket::from_bytes(&ticket.to_bytes()).unwrap();
        assert_eq!(reparsed, ticket);
        assert!(HandoffTicket::from_bytes(&ticket.to_bytes()[..5]).is_err());
    }

    #[test]
    fn v2v_round_trip_and_outsider_cannot_forge() {
        let (km, chain) = infrastructure();
        let mut bs = station(1, 250.0, &km, &chain);
        let mut rng = ChaCha20Rng::seed_from_u64(38);

        let mut va = bootstrap(10, &km, 200.0, &mut bs, 0, &mut rng).unwrap().session;
        let mut vb = bootstrap(11, &km, 220.0, &mut bs, 0, &mut rng).unwrap().session;

        let (mut assoc_a, mut assoc_b, ota) = v2v_association(&mut bs, &mut va, &mut vb).unwrap();
        assert_eq!(ota, 2);
        let pkt = assoc_a.seal(b"brake warning").unwrap();
        assert_eq!(assoc_b.open(&pkt).unwrap(), b"brake warning");

        // A third vehicle without the delivered key cannot forge.
        let mut mallory = SecurityAssociation::from_pair_key([0xAA; 16], 10, 11);
        let forged = mallory.seal(b"brake warning").unwrap();
        let mut assoc_b2 = assoc_b; // counters already advanced
        assert_eq!(assoc_b2.open(&forged).unwrap_err(), SnepError::MacMismatch);
    }

    #[test]
    fn v2v_requires_both_sessions() {
        let (km, chain) = infrastructure();
        let mut bs = station(1, 250.0, &km, &chain);
        let mut rng = ChaCha20Rng::seed_from_u64(39);
        let mut va = bootstrap(10, &km, 200.0, &mut bs, 0, &mut rng).unwrap().session;
        let mut vb = bootstrap(11, &km, 220.0, &mut bs, 0, &mut rng).unwrap().session;
        bs.sessions.remove(&11);
        assert_eq!(
            v2v_association(&mut bs, &mut va, &mut vb).unwrap_err(),
            ZoneError::NoSession(11)
        );
    }
}
