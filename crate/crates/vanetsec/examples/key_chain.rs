//! Builds a one-way key chain and shows why disclosure order matters: any
//! later key re-derives every earlier one, but the walk never goes forward.
//!
//! Run with `cargo run --example key_chain`.

use vanetsec::crypto::{chain_step, ChainKey};
use vanetsec::mutesla::KeyChain;

fn main() {
    // K_8 is the secret seed; K_0 is the public commitment handed to
    // receivers at bootstrap.
    let seed = ChainKey::new([7; 8]);
    let chain = KeyChain::generate(seed, 8, 0, 1000, 2).unwrap();

    println!("index  key (hex)          interval start (ms)");
    for i in 0..=chain.n() {
        println!(
            "{i:>5}  {}  {}",
            hex::encode(chain.key(i).unwrap().as_bytes()),
            i as u64 * 1000
        );
    }

    // Anyone holding K_5 can walk down to K_0 and check it against the
    // commitment; that is the whole authentication argument.
    let mut walk = chain.key(5).unwrap();
    for _ in 0..5 {
        walk = chain_step(&walk);
    }
    assert_eq!(walk, chain.commitment());
    println!("\nK_5 walks down to the commitment in 5 steps: chain verified");

    // The other direction is blocked: K_4 gives no path to K_5. The best an
    // attacker can do is guess, and stepping the guess will not land on the
    // commitment chain.
    let guess = ChainKey::new([0xAA; 8]);
    assert_ne!(chain_step(&guess), chain.key(4).unwrap());
    println!("a guessed K_5 fails to produce K_4: forward derivation blocked");
}
