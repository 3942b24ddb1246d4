//! A base station broadcasts with delayed key disclosure; a receiver buffers
//! packets that pass the safety test and authenticates them once the interval
//! key is disclosed. Forged packets are flushed out at the same moment.
//!
//! Run with `cargo run --example broadcast_auth`.

use vanetsec::crypto::ChainKey;
use vanetsec::mutesla::{BroadcastAuthState, KeyChain, RecvOutcome};

fn main() {
    // 1-second intervals, keys disclosed 2 intervals late.
    let chain = KeyChain::generate(ChainKey::new([3; 8]), 20, 0, 1000, 2).unwrap();
    let mut receiver = BroadcastAuthState::new(chain.commitment(), chain.schedule(), 100);

    // Interval 2: a genuine alert arrives promptly and is buffered. It cannot
    // be trusted yet because nobody but the sender knows K_2 at this point.
    let alert = chain.bcast_seal(2100, 1, b"ice on bridge").unwrap();
    let (outcome, _) = receiver.handle_broadcast(&alert, 2110).unwrap();
    assert_eq!(outcome, RecvOutcome::Buffered);
    println!("interval 2 alert buffered, awaiting key disclosure");

    // An attacker forges a packet for the same interval. Without K_2 the tag
    // is a guess; it buffers like anything else that passes the safety test.
    let mut forged = alert.clone();
    forged.payload.truncate(16);
    forged.payload.extend_from_slice(b"road is clear");
    forged.tag = [0xBB; 8];
    let (outcome, _) = receiver.handle_broadcast(&forged, 2120).unwrap();
    assert_eq!(outcome, RecvOutcome::Buffered);
    println!("forged packet also buffered; verdicts wait for the key");

    // The same packet arriving too late is refused outright: by then the key
    // could already be public, so a valid tag would prove nothing.
    let mut late_receiver = BroadcastAuthState::new(chain.commitment(), chain.schedule(), 100);
    let (outcome, _) = late_receiver.handle_broadcast(&alert, 4300).unwrap();
    assert_eq!(outcome, RecvOutcome::RejectedUnsafe);
    println!("same packet at t=4300 fails the safety test: rejected");

    // Interval 4: the station's broadcast piggybacks K_2. The genuine alert
    // authenticates; the forgery is exposed.
    let later = chain.bcast_seal(4100, 1, b"traffic normal").unwrap();
    let (_, report) = receiver.handle_broadcast(&later, 4110).unwrap();
    for (interval, body) in &report.authenticated {
        println!(
            "authenticated from interval {interval}: {:?}",
            String::from_utf8_lossy(body)
        );
    }
    println!("forgeries caught: {}", report.auth_failed);
    assert_eq!(report.auth_failed, 1);

    // Standalone disclosure packets close the loop when broadcasts are
    // sparse: this one discloses K_4 and releases the buffered interval-4
    // broadcast.
    let disclose = chain.disclosure_packet(6100, 1).unwrap();
    let report = receiver.handle_disclosure_packet(&disclose).unwrap();
    for (interval, body) in &report.authenticated {
        println!(
            "authenticated from interval {interval}: {:?}",
            String::from_utf8_lossy(body)
        );
    }
}
