//! A vehicle bootstraps at one base station, crosses into the next zone, and
//! resumes its session with a single over-the-air message because the session
//! record traveled over the infrastructure backbone. Counters and the
//! broadcast commitment carry over untouched.
//!
//! Run with `cargo run --example zone_handoff`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use vanetsec::crypto::{ChainKey, MasterKey};
use vanetsec::mutesla::KeyChain;
use vanetsec::zone::{bootstrap, handoff, v2v_association, BaseStation};

fn main() {
    // One road operator: every station shares the master key and the
    // broadcast chain, so the vehicle's association is with the
    // infrastructure, not with any single station.
    let km = MasterKey::new([0x33; 16]);
    let chain = Arc::new(KeyChain::generate(ChainKey::new([9; 8]), 120, 0, 1000, 2).unwrap());
    let mut bs_a = BaseStation::new(1, 250.0, 300.0, km, chain.clone());
    let mut bs_b = BaseStation::new(2, 750.0, 300.0, km, chain.clone());
    let mut rng = ChaCha20Rng::seed_from_u64(5);

    // First join: the full four-message exchange.
    let outcome = bootstrap(42, &km, 200.0, &mut bs_a, 0, &mut rng).unwrap();
    let mut vehicle = outcome.session;
    println!("bootstrap at station 1: {} over-the-air messages", outcome.ota_messages);

    // Some traffic in zone A moves the counters along.
    for i in 0..6 {
        let pkt = vehicle.association.seal(format!("report {i}").as_bytes()).unwrap();
        bs_a.session_mut(42).unwrap().association.open(&pkt).unwrap();
    }
    println!("vehicle send counter after zone A traffic: {}", vehicle.association.ctr_send());

    // Zone crossing: the ticket moves over the backbone, one sealed hello
    // moves over the air.
    let crossing = handoff(&mut bs_a, &mut bs_b, &mut vehicle, &km, 700.0, 6000, &mut rng).unwrap();
    println!(
        "handoff to station 2: {} over-the-air message(s), bootstrap fallback: {}",
        crossing.ota_messages, crossing.fell_back_to_bootstrap
    );
    println!("send counter after handoff: {} (hello consumed one, nothing reset)", vehicle.association.ctr_send());

    // The session is immediately live at the new station.
    let pkt = vehicle.association.seal(b"hello zone B").unwrap();
    let body = bs_b.session_mut(42).unwrap().association.open(&pkt).unwrap();
    println!("station 2 opened: {:?}", String::from_utf8_lossy(&body));

    // Broadcasts keep authenticating across the boundary because both
    // stations run the same chain.
    let bcast = bs_b.chain().bcast_seal(6100, 2, b"zone B advisory").unwrap();
    let (outcome, _) = vehicle.auth_state.handle_broadcast(&bcast, 6110).unwrap();
    println!("zone B broadcast outcome: {outcome:?}");
    let disclose = bs_b.chain().disclosure_packet(8200, 2).unwrap();
    let report = vehicle.auth_state.handle_disclosure_packet(&disclose).unwrap();
    println!(
        "authenticated after disclosure: {:?}",
        report
            .authenticated
            .iter()
            .map(|(_, b)| String::from_utf8_lossy(b).into_owned())
            .collect::<Vec<_>>()
    );

    // Two vehicles in the same zone get a brokered pair key for direct
    // vehicle-to-vehicle traffic: two sealed messages from the station.
    let mut other = bootstrap(43, &km, 720.0, &mut bs_b, 9000, &mut rng).unwrap().session;
    let (mut assoc_42, mut assoc_43, ota) =
        v2v_association(&mut bs_b, &mut vehicle, &mut other).unwrap();
    println!("vehicle-to-vehicle association brokered in {ota} messages");
    let warn = assoc_42.seal(b"hard braking ahead").unwrap();
    println!(
        "vehicle 43 received directly: {:?}",
        String::from_utf8_lossy(&assoc_43.open(&warn).unwrap())
    );
}
