//! Security primitives for vehicular ad hoc networks.
//!
//! The building blocks are the ones proven workable on sensor-class hardware:
//! an RC5-based block cipher driving counter-mode encryption and CBC-MAC,
//! a unicast channel with implicit synchronized counters ([`snep`]), and
//! authenticated broadcast through one-way key chains with delayed key
//! disclosure ([`mutesla`]). On top of those, [`zone`] models roadside base
//! stations and lets an established session follow a vehicle across zone
//! boundaries with a single over-the-air message instead of a full bootstrap.
//!
//! [`sim`] is a deterministic discrete-event simulator for a road populated
//! with vehicles and base stations; it produces storage and end-to-end delay
//! metrics for the secure channel and for simplified DSDV/GPSR/BMFR baselines.
//!
//! See the `examples/` directory for a runnable tour of each capability; the
//! `vanetsec` binary exposes the same operations on the command line.

pub mod cli;
pub mod crypto;
pub mod mutesla;
pub mod sim;
pub mod snep;
pub mod zone;
