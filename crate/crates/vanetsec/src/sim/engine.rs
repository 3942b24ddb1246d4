//! The discrete-event loop behind one (load, mode) run.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::crypto::{ChainKey, MasterKey};
use crate::mutesla::KeyChain;
use crate::snep::{snep_block_ops, SecurePacket};
use crate::zone::{self, BaseStation, VehicleSession, BOOTSTRAP_OTA_MESSAGES};

use super::baseline::{greedy_route, neighbors, DsdvTable};
use super::{HandoffAudit, MetricsRecord, ProtocolMode, ScenarioConfig};

const MOVE_TICK_US: u64 = 100_000;
const BEACON_US: u64 = 1_000_000;
/// Application plaintext size, bytes.
const APP_MSG_LEN: usize = 30;
/// Broadcast body: 8-byte packet record id plus 8 bytes of report fields.
const BCAST_BODY_LEN: usize = 16;

/// Fixed secure-mode state: four 16-byte association keys, two 4-byte
/// counters, the 8-byte chain commitment, and the 20-byte schedule record.
const SECURE_FIXED_BYTES: u64 = 4 * 16 + 8 + 8 + 20;
const DSDV_ENTRY_BYTES: u64 = 16;
const DSDV_ADVERT_ENTRY_BYTES: u64 = 12;
const NEIGHBOR_ENTRY_BYTES: u64 = 20;
const GPSR_PACKET_STATE_BYTES: u64 = 12;
const BMFR_PACKET_STATE_BYTES: u64 = 20;

enum Kind {
    MoveTick,
    Beacon,
    TableUpdate,
    AppSend { src: usize, dst: usize },
    SecureDeliver { src: usize, pkt: SecurePacket, sent_us: u64 },
    BaselineDeliver { src: usize, sent_us: u64 },
    Broadcast { station: usize },
    BcastArrive { vehicle: usize, pkt: SecurePacket, sent_us: u64 },
    Disclose { station: usize },
    DiscArrive { vehicle: usize, pkt: SecurePacket },
}

struct Event {
    time_us: u64,
    seq: u64,
    kind: Kind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        (self.time_us, self.seq) == (other.time_us, other.seq)
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    // Reversed so the BinaryHeap pops the earliest (time, seq) first.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time_us, other.seq).cmp(&(self.time_us, self.seq))
    }
}

struct Vehicle {
    id: u32,
    pos: f64,
    speed: f64,
    clock_offset_ms: i64,
    serving: usize,
    session: Option<VehicleSession>,
    neighbor_count: u64,
    held_packets: u64,
    dsdv: DsdvTable,
    pending_update_bytes: u64,
}

impl Vehicle {
    fn local_clock_ms(&self, t_us: u64) -> u64 {
        ((t_us / 1000) as i64 + self.clock_offset_ms).max(0) as u64
    }
}

fn stream(seed: u64, load_idx: u64, which: u64) -> ChaCha20Rng {
    let mut s = [0u8; 32];
    s[0..8].copy_from_slice(&seed.to_le_bytes());
    s[8..16].copy_from_slice(&load_idx.to_le_bytes());
    s[16..24].copy_from_slice(&which.to_le_bytes());
    ChaCha20Rng::from_seed(s)
}

struct Sim<'a> {
    cfg: &'a ScenarioConfig,
    mode: ProtocolMode,
    end_us: u64,
    queue: BinaryHeap<Event>,
    next_seq: u64,
    loss_rng: ChaCha20Rng,
    crypto_rng: ChaCha20Rng,
    vehicles: Vec<Vehicle>,
    stations: Vec<BaseStation>,
    infrastructure_km: MasterKey,
    trace: Option<Vec<String>>,
    // counters and accumulators
    sent: u64,
    delivered: u64,
    lost: u64,
    in_flight: u64,
    e2e_sum_ms: f64,
    crypto_sum_ms: f64,
    auth_sum_ms: f64,
    auth_count: u64,
    storage_sum: u64,
    storage_samples: u64,
    storage_max: u64,
    audit: HandoffAudit,
    /// Broadcast record id -> send time, for authenticate-delay accounting.
    bcast_sent_us: HashMap<u64, u64>,
    next_bcast_id: u64,
}

pub fn run_single(
    cfg: &ScenarioConfig,
    load: f64,
    load_idx: usize,
    mode: ProtocolMode,
    trace_out: &mut Option<Vec<String>>,
) -> MetricsRecord {
    let mut mobility_rng = stream(cfg.rng_seed, load_idx as u64, 0);
    let traffic_rng = stream(cfg.rng_seed, load_idx as u64, 1);
    let loss_rng = stream(cfg.rng_seed, load_idx as u64, 2);
    let mut crypto_rng = stream(cfg.rng_seed, load_idx as u64, 3);

    let end_us = (cfg.sim_duration * 1e6) as u64;
    let duration_ms = end_us / 1000;
    let n_intervals = (duration_ms / cfg.t_int) as u32 + cfg.disclosure_delay + 4;

    let infrastructure_km = MasterKey::new(crypto_rng.random());
    let chain = Arc::new(
        KeyChain::generate(
            ChainKey::new(crypto_rng.random()),
            n_intervals,
            0,
            cfg.t_int,
            cfg.disclosure_delay,
        )
        .expect("validated schedule parameters"),
    );

    let station_count = (cfg.road_length / cfg.bs_spacing).ceil() as usize;
    let stations: Vec<BaseStation> = (0..station_count)
        .map(|k| {
            BaseStation::new(
                k as u32 + 1,
                (k as f64 + 0.5) * cfg.bs_spacing,
                cfg.bs_radius,
                infrastructure_km,
                chain.clone(),
            )
            .with_max_skew(cfg.receiver_max_skew() as u64)
        })
        .collect();

    let skew = cfg.clock_skew as i64;
    let vehicles: Vec<Vehicle> = (0..cfg.vehicle_count)
        .map(|i| {
            let pos = mobility_rng.random_range(0.0..cfg.road_length);
            let speed = if cfg.speed_min < cfg.speed_max {
                mobility_rng.random_range(cfg.speed_min..cfg.speed_max)
            } else {
                cfg.speed_min
            };
            let clock_offset_ms = if skew > 0 {
                mobility_rng.random_range(-skew..=skew)
            } else {
                0
            };
            Vehicle {
                id: 1000 + i,
                pos,
                speed,
                clock_offset_ms,
                serving: 0,
                session: None,
                neighbor_count: 0,
                held_packets: 0,
                dsdv: DsdvTable::new(1000 + i),
                pending_update_bytes: 0,
            }
        })
        .collect();

    let mut sim = Sim {
        cfg,
        mode,
        end_us,
        queue: BinaryHeap::new(),
        next_seq: 0,
        loss_rng,
        crypto_rng,
        vehicles,
        stations,
        infrastructure_km,
        trace: trace_out.as_ref().map(|_| Vec::new()),
        sent: 0,
        delivered: 0,
        lost: 0,
        in_flight: 0,
        e2e_sum_ms: 0.0,
        crypto_sum_ms: 0.0,
        auth_sum_ms: 0.0,
        auth_count: 0,
        storage_sum: 0,
        storage_samples: 0,
        storage_max: 0,
        audit: HandoffAudit::default(),
        bcast_sent_us: HashMap::new(),
        next_bcast_id: 0,
    };

    sim.schedule_all(traffic_rng, load);
    sim.join_all();
    sim.run_loop();

    if let Some(out) = trace_out.as_mut() {
        out.push(format!("# run load={load} mode={mode}"));
        out.extend(sim.trace.take().unwrap());
    }
    sim.finish(load)
}

impl Sim<'_> {
    fn push(&mut self, time_us: u64, kind: Kind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Event { time_us, seq, kind });
    }

    fn note(&mut self, t_us: u64, line: impl FnOnce() -> String) {
        if let Some(trace) = self.trace.as_mut() {
            trace.push(format!("t={t_us} {}", line()));
        }
    }

    fn schedule_all(&mut self, mut traffic_rng: ChaCha20Rng, load: f64) {
        for k in 0..=self.end_us / MOVE_TICK_US {
            self.push(k * MOVE_TICK_US, Kind::MoveTick);
        }
        for k in 1..=self.end_us / BEACON_US {
            self.push(k * BEACON_US, Kind::Beacon);
            if self.mode == ProtocolMode::Dsdv {
                self.push(k * BEACON_US, Kind::TableUpdate);
            }
        }
        if self.mode == ProtocolMode::SecurePrimitives {
            let bcast_us = (self.cfg.bcast_interval * 1000.0) as u64;
            for station in 0..self.stations.len() {
                // Interval 0's MAC key derives from the public commitment, so
                // broadcasting starts in interval 1.
                let mut t = self.cfg.t_int * 1000 + 500_000;
                while t < self.end_us {
                    self.push(t, Kind::Broadcast { station });
                    t += bcast_us;
                }
                let mut t = 20_000u64;
                while t < self.end_us {
                    self.push(t, Kind::Disclose { station });
                    t += self.cfg.t_int * 1000;
                }
            }
        }

        // Poisson application arrivals, one stream per vehicle. The
        // destination draw happens in every mode so the traffic stream is
        // consumed identically across modes.
        let n = self.vehicles.len();
        for src in 0..n {
            let mut t = 0.0f64;
            loop {
                let u: f64 = traffic_rng.random();
                t += -u.max(f64::MIN_POSITIVE).ln() / load;
                let t_us = (t * 1e6) as u64;
                if t_us >= self.end_us {
                    break;
                }
                let dst = if n > 1 {
                    let mut d = traffic_rng.random_range(0..n - 1);
                    if d >= src {
                        d += 1;
                    }
                    d
                } else {
                    src
                };
                self.push(t_us, Kind::AppSend { src, dst });
            }
        }
    }

    fn nearest_station(&self, pos: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, s) in self.stations.iter().enumerate() {
            let d = (pos - s.position).abs();
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        best
    }

    fn join_all(&mut self) {
        if self.mode != ProtocolMode::SecurePrimitives {
            return;
        }
        for v in 0..self.vehicles.len() {
            let serving = self.nearest_station(self.vehicles[v].pos);
            let pos = self.vehicles[v].pos;
            let id = self.vehicles[v].id;
            let outcome = zone::bootstrap(
                id,
                &self.infrastructure_km,
                pos,
                &mut self.stations[serving],
                0,
                &mut self.crypto_rng,
            )
            .expect("initial join inside full road coverage");
            self.vehicles[v].serving = serving;
            self.vehicles[v].session = Some(outcome.session);
            self.audit.bootstraps += 1;
            self.audit.bootstrap_ota = BOOTSTRAP_OTA_MESSAGES;
        }
    }

    fn run_loop(&mut self) {
        while let Some(ev) = self.queue.pop() {
            if ev.time_us > self.end_us {
                continue;
            }
            self.handle(ev);
        }
        self.in_flight = self.sent - self.delivered - self.lost;
    }

    fn handle(&mut self, ev: Event) {
        let t = ev.time_us;
        match ev.kind {
            Kind::MoveTick => self.move_tick(t),
            Kind::Beacon => self.beacon(t),
            Kind::TableUpdate => self.table_update(t),
            Kind::AppSend { src, dst } => self.app_send(t, src, dst),
            Kind::SecureDeliver { src, pkt, sent_us } => self.secure_deliver(t, src, &pkt, sent_us),
            Kind::BaselineDeliver { src, sent_us } => {
                self.vehicles[src].held_packets -= 1;
                self.delivered += 1;
                self.e2e_sum_ms += (t - sent_us) as f64 / 1000.0;
                self.note(t, || format!("deliver src={src}"));
            }
            Kind::Broadcast { station } => self.broadcast(t, station),
            Kind::BcastArrive { vehicle, pkt, sent_us } => self.bcast_arrive(t, vehicle, &pkt, sent_us),
            Kind::Disclose { station } => self.disclose(t, station),
            Kind::DiscArrive { vehicle, pkt } => self.disc_arrive(t, vehicle, &pkt),
        }
    }

    fn move_tick(&mut self, t: u64) {
        self.note(t, || "move_tick".to_string());
        let dt = MOVE_TICK_US as f64 / 1e6;
        for v in 0..self.vehicles.len() {
            if t > 0 {
                let p = (self.vehicles[v].pos + self.vehicles[v].speed * dt)
                    .rem_euclid(self.cfg.road_length);
                self.vehicles[v].pos = p;
            }
            if self.mode == ProtocolMode::SecurePrimitives {
                let target = self.nearest_station(self.vehicles[v].pos);
                if target != self.vehicles[v].serving && self.vehicles[v].session.is_some() {
                    self.cross_zone(t, v, target);
                }
            }
        }
        self.sample_storage();
    }

    fn cross_zone(&mut self, t: u64, v: usize, target: usize) {
        let from = self.vehicles[v].serving;
        let vehicle = &mut self.vehicles[v];
        let session = vehicle.session.as_mut().unwrap();
        let ctr_before = session.association.ctr_send();
        let commit_before = session.auth_state.commit_index();

        let (from_bs, to_bs) = two_mut(&mut self.stations, from, target);
        let outcome = zone::handoff(
            from_bs,
            to_bs,
            session,
            &self.infrastructure_km,
            vehicle.pos,
            t / 1000,
            &mut self.crypto_rng,
        )
        .expect("target station covers the crossing position");

        vehicle.serving = target;
        self.audit.handoffs += 1;
        self.audit.handoff_ota_max = self.audit.handoff_ota_max.max(outcome.ota_messages);
        if outcome.fell_back_to_bootstrap {
            self.audit.bootstraps += 1;
            self.audit.bootstrap_ota = BOOTSTRAP_OTA_MESSAGES;
        }
        let session = self.vehicles[v].session.as_ref().unwrap();
        if session.association.ctr_send() < ctr_before {
            self.audit.counter_resets += 1;
        }
        if session.auth_state.commit_index() < commit_before {
            self.audit.commit_regressions += 1;
        }
        self.note(t, || format!("zone_cross vehicle={v} from={from} to={target}"));
    }

    fn sample_storage(&mut self) {
        for v in &self.vehicles {
            let bytes = match self.mode {
                ProtocolMode::SecurePrimitives => {
                    SECURE_FIXED_BYTES
                        + v.session
                            .as_ref()
                            .map_or(0, |s| s.auth_state.buffered_bytes() as u64)
                }
                ProtocolMode::Dsdv => {
                    v.dsdv.len() as u64 * DSDV_ENTRY_BYTES + v.pending_update_bytes
                }
                ProtocolMode::Gpsr => {
                    v.neighbor_count * NEIGHBOR_ENTRY_BYTES
                        + v.held_packets * GPSR_PACKET_STATE_BYTES
                }
                ProtocolMode::Bmfr => {
                    v.neighbor_count * NEIGHBOR_ENTRY_BYTES
                        + v.held_packets * BMFR_PACKET_STATE_BYTES
                }
            };
            self.storage_sum += bytes;
            self.storage_samples += 1;
            self.storage_max = self.storage_max.max(bytes);
        }
    }

    fn positions(&self) -> Vec<f64> {
        self.vehicles.iter().map(|v| v.pos).collect()
    }

    fn beacon(&mut self, t: u64) {
        self.note(t, || "beacon".to_string());
        if matches!(self.mode, ProtocolMode::Gpsr | ProtocolMode::Bmfr) {
            let positions = self.positions();
            for v in 0..self.vehicles.len() {
                self.vehicles[v].neighbor_count =
                    neighbors(&positions, v, self.cfg.v2v_radius).len() as u64;
            }
        }
    }

    fn table_update(&mut self, t: u64) {
        self.note(t, || "table_update".to_string());
        let positions = self.positions();
        let adverts: Vec<_> = self.vehicles.iter_mut().map(|v| v.dsdv.advertise()).collect();
        for v in 0..self.vehicles.len() {
            let mut pending = 0u64;
            for j in neighbors(&positions, v, self.cfg.v2v_radius) {
                pending += adverts[j].len() as u64 * DSDV_ADVERT_ENTRY_BYTES;
                self.vehicles[v].dsdv.merge(&adverts[j]);
            }
            self.vehicles[v].pending_update_bytes = pending;
        }
    }

    fn app_send(&mut self, t: u64, src: usize, dst: usize) {
        self.sent += 1;
        self.note(t, || format!("app_send src={src} dst={dst}"));
        match self.mode {
            ProtocolMode::SecurePrimitives => self.secure_send(t, src),
            ProtocolMode::Dsdv => {
                let dst_id = self.vehicles[dst].id;
                if !self.vehicles[src].dsdv.contains(dst_id) {
                    self.lost += 1; // no route yet
                    return;
                }
                self.baseline_forward(t, src, dst);
            }
            ProtocolMode::Gpsr | ProtocolMode::Bmfr => self.baseline_forward(t, src, dst),
        }
    }

    fn secure_send(&mut self, t: u64, src: usize) {
        let mut body = [0u8; APP_MSG_LEN];
        body[..8].copy_from_slice(&t.to_be_bytes());
        let session = self.vehicles[src].session.as_mut().unwrap();
        let pkt = match session.association.seal(&body) {
            Ok(p) => p,
            Err(_) => {
                self.lost += 1;
                return;
            }
        };
        if self.loss_rng.random::<f64>() < self.cfg.loss_prob {
            self.lost += 1;
            return;
        }
        let crypto_us = (snep_block_ops(APP_MSG_LEN) as f64 * self.cfg.crypto_cost) as u64;
        let arrive = t + (self.cfg.per_hop_latency * 1000.0) as u64 + crypto_us;
        self.push(arrive, Kind::SecureDeliver { src, pkt, sent_us: t });
    }

    fn secure_deliver(&mut self, t: u64, src: usize, pkt: &SecurePacket, sent_us: u64) {
        let id = self.vehicles[src].id;
        let opened = self
            .stations
            .iter_mut()
            .find_map(|s| s.session_mut(id))
            .and_then(|record| record.association.open(pkt).ok());
        match opened {
            Some(_) => {
                self.delivered += 1;
                self.e2e_sum_ms += (t - sent_us) as f64 / 1000.0;
                self.crypto_sum_ms += snep_block_ops(APP_MSG_LEN) as f64 * self.cfg.crypto_cost / 1000.0;
                self.note(t, || format!("deliver src={src}"));
            }
            None => {
                // The session moved or the counter window was outrun while
                // the packet was in flight.
                self.lost += 1;
                self.note(t, || format!("deliver_failed src={src}"));
            }
        }
    }

    fn broadcast(&mut self, t: u64, station: usize) {
        let id = self.next_bcast_id;
        self.next_bcast_id += 1;
        let mut body = [0u8; BCAST_BODY_LEN];
        body[..8].copy_from_slice(&id.to_be_bytes());
        let bs = &self.stations[station];
        let pkt = match bs.chain().bcast_seal(t / 1000, bs.id, &body) {
            Ok(p) => p,
            Err(_) => return, // chain exhausted at the very end of the run
        };
        self.bcast_sent_us.insert(id, t);
        self.note(t, || format!("bcast station={station} id={id}"));

        let arrive = t + (self.cfg.per_hop_latency * 1000.0) as u64;
        for v in 0..self.vehicles.len() {
            if self.vehicles[v].serving != station || self.vehicles[v].session.is_none() {
                continue;
            }
            if self.loss_rng.random::<f64>() < self.cfg.loss_prob {
                continue;
            }
            self.push(
                arrive,
                Kind::BcastArrive {
                    vehicle: v,
                    pkt: pkt.clone(),
                    sent_us: t,
                },
            );
        }
    }

    fn bcast_arrive(&mut self, t: u64, vehicle: usize, pkt: &SecurePacket, sent_us: u64) {
        let local = self.vehicles[vehicle].local_clock_ms(t);
        let Some(session) = self.vehicles[vehicle].session.as_mut() else {
            return;
        };
        let Ok((_outcome, report)) = session.auth_state.handle_broadcast(pkt, local) else {
            return;
        };
        for (_, body) in &report.authenticated {
            if let Some(&s) = body_record(body).and_then(|id| self.bcast_sent_us.get(&id)) {
                self.auth_sum_ms += (t - s) as f64 / 1000.0;
                self.auth_count += 1;
            }
        }
        self.note(t, || format!("bcast_arrive vehicle={vehicle} sent={sent_us}"));
    }

    fn disclose(&mut self, t: u64, station: usize) {
        let bs = &self.stations[station];
        let Some(pkt) = bs.chain().disclosure_packet(t / 1000, bs.id) else {
            return;
        };
        self.note(t, || format!("disclose station={station}"));
        let arrive = t + (self.cfg.per_hop_latency * 1000.0) as u64;
        for v in 0..self.vehicles.len() {
            if self.vehicles[v].serving != station || self.vehicles[v].session.is_none() {
                continue;
            }
            if self.loss_rng.random::<f64>() < self.cfg.loss_prob {
                continue;
            }
            self.push(
                arrive,
                Kind::DiscArrive {
                    vehicle: v,
                    pkt: pkt.clone(),
                },
            );
        }
    }

    fn disc_arrive(&mut self, t: u64, vehicle: usize, pkt: &SecurePacket) {
        let Some(session) = self.vehicles[vehicle].session.as_mut() else {
            return;
        };
        let Ok(report) = session.auth_state.handle_disclosure_packet(pkt) else {
            return;
        };
        for (_, body) in &report.authenticated {
            if let Some(&s) = body_record(body).and_then(|id| self.bcast_sent_us.get(&id)) {
                self.auth_sum_ms += (t - s) as f64 / 1000.0;
                self.auth_count += 1;
            }
        }
    }

    fn baseline_forward(&mut self, t: u64, src: usize, dst: usize) {
        let positions = self.positions();
        let Some(hops) = greedy_route(&positions, src, dst, self.cfg.v2v_radius) else {
            self.lost += 1;
            return;
        };
        for _ in 0..hops {
            if self.loss_rng.random::<f64>() < self.cfg.loss_prob {
                self.lost += 1;
                return;
            }
        }
        let arrive = t + (hops as u64).max(1) * (self.cfg.per_hop_latency * 1000.0) as u64;
        self.vehicles[src].held_packets += 1;
        self.push(arrive, Kind::BaselineDeliver { src, sent_us: t });
    }

    fn finish(self, load: f64) -> MetricsRecord {
        let delivered = self.delivered;
        let avg = |sum: f64, n: u64| if n > 0 { sum / n as f64 } else { 0.0 };
        MetricsRecord {
            load,
            mode: self.mode,
            avg_e2e_delay_ms: avg(self.e2e_sum_ms, delivered),
            avg_auth_delay_ms: avg(self.auth_sum_ms, self.auth_count),
            delivery_ratio: if self.sent > 0 {
                delivered as f64 / self.sent as f64
            } else {
                0.0
            },
            avg_storage_bytes: if self.storage_samples > 0 {
                self.storage_sum as f64 / self.storage_samples as f64
            } else {
                0.0
            },
            max_storage_bytes: self.storage_max,
            packets_sent: self.sent,
            packets_delivered: delivered,
            packets_lost: self.lost,
            in_flight_at_end: self.in_flight,
            avg_crypto_delay_ms: avg(self.crypto_sum_ms, delivered),
            handoff_audit: self.audit,
        }
    }
}

fn body_record(body: &[u8]) -> Option<u64> {
    body.get(..8).map(|b| u64::from_be_bytes(b.try_into().unwrap()))
}

fn two_mut<T>(slice: &mut [T], a: usize, b: usize) -> (&mut T, &mut T) {
    assert_ne!(a, b);
    if a < b {
        let (lo, hi) = slice.split_at_mut(b);
        (&mut lo[a], &mut hi[0])
    } else {
        let (lo, hi) = slice.split_at_mut(a);
        (&mut hi[0], &mut lo[b])
    }
}
