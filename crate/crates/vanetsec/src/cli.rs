//! Command-line front end: key and chain inspection, single-message seal and
//! open for debugging, scenario execution, and plot-ready report pivoting.
//!
//! Exit codes: 0 on success, 1 on protocol or verification failure, 2 on
//! usage errors (including unreadable inputs and bad configuration).

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::crypto::{chain_step, ChainKey, MasterKey};
use crate::mutesla::KeyChain;
use crate::sim::{self, ProtocolMode, ScenarioConfig, CSV_HEADER};
use crate::snep::{SecurePacket, SecurityAssociation};

#[derive(Parser)]
#[command(name = "vanetsec", version, about = "Sensor-network security primitives adapted to vehicular networks", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a 16-byte master key and print it as hex
    Keygen(KeygenArgs),
    /// Generate or verify a one-way key chain table
    Chain(ChainArgs),
    /// Seal one message file into a wire packet
    Seal(SealArgs),
    /// Verify and decrypt one packet file
    Open(OpenArgs),
    /// Run the road/zone simulation sweep from a scenario config
    RunSim(RunSimArgs),
    /// Pivot run-sim CSVs into one plot-ready comparison table
    Report(ReportArgs),
}

#[derive(Args)]
struct KeygenArgs {
    /// Derive the key deterministically from this seed instead of system
    /// randomness
    #[arg(long)]
    seed: Option<u64>,
    /// Write the hex key here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ChainArgs {
    /// 8-byte hex seed; generates and prints the chain table
    #[arg(long, conflicts_with = "verify")]
    seed: Option<String>,
    /// Highest chain index
    #[arg(long, default_value_t = 8)]
    n: u32,
    /// Schedule epoch, ms
    #[arg(long, default_value_t = 0)]
    t0: u64,
    /// Interval duration, ms
    #[arg(long, default_value_t = 1000)]
    t_int: u64,
    /// Disclosure delay, intervals
    #[arg(long, default_value_t = 2)]
    d: u32,
    /// Verify the one-way linkage of a previously printed chain table
    #[arg(long)]
    verify: Option<PathBuf>,
    /// Write the table here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SealArgs {
    /// File holding the 16-byte master key as hex
    #[arg(long)]
    key: PathBuf,
    /// Sender id
    #[arg(long)]
    local_id: u32,
    /// Receiver id
    #[arg(long)]
    peer_id: u32,
    /// Send counter value to seal under
    #[arg(long)]
    counter: u32,
    /// Plaintext message file
    #[arg(long)]
    message: PathBuf,
    /// Packet output file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OpenArgs {
    /// File holding the 16-byte master key as hex
    #[arg(long)]
    key: PathBuf,
    /// Receiver id (this endpoint)
    #[arg(long)]
    local_id: u32,
    /// Sender id
    #[arg(long)]
    peer_id: u32,
    /// Expected receive counter
    #[arg(long)]
    counter: u32,
    /// Packet file to verify and decrypt
    #[arg(long)]
    packet: PathBuf,
    /// Write the plaintext here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunSimArgs {
    /// Scenario file with `key = value` lines
    #[arg(long)]
    config: PathBuf,
    /// Override the scenario's rng_seed
    #[arg(long)]
    seed: Option<u64>,
    /// Metrics CSV output path
    #[arg(long)]
    out: PathBuf,
    /// Also write the full event trace here
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Metrics CSVs produced by run-sim
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Write the pivoted table here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    /// Bad invocation or unreadable/ill-formed input: exit 2.
    Usage(String),
    /// The inputs were well-formed but verification failed: exit 1.
    Protocol(String),
}

type CliResult = Result<(), CliError>;

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Keygen(a) => keygen(&a),
        Cmd::Chain(a) => chain(&a),
        Cmd::Seal(a) => seal(&a),
        Cmd::Open(a) => open(&a),
        Cmd::RunSim(a) => run_sim(&a),
        Cmd::Report(a) => report(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Protocol(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> CliResult {
    match path {
        Some(p) => fs::write(p, bytes)
            .map_err(|e| usage(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| usage(format!("cannot write to stdout: {e}"))),
    }
}

fn master_key_from_file(path: &Path) -> Result<MasterKey, CliError> {
    let text = String::from_utf8(read_file(path)?)
        .map_err(|_| usage(format!("{} is not a hex text file", path.display())))?;
    let bytes = hex::decode(text.trim())
        .map_err(|_| usage(format!("{} does not contain valid hex", path.display())))?;
    let key: [u8; 16] = bytes
        .try_into()
        .map_err(|_| usage(format!("{} must hold exactly 16 key bytes", path.display())))?;
    Ok(MasterKey::new(key))
}

fn keygen(args: &KeygenArgs) -> CliResult {
    let mut key = [0u8; 16];
    match args.seed {
        Some(seed) => ChaCha20Rng::seed_from_u64(seed).fill_bytes(&mut key),
        None => rand::rng().fill_bytes(&mut key),
    }
    let line = format!("{}\n", hex::encode(key));
    write_output(args.out.as_deref(), line.as_bytes())
}

fn chain(args: &ChainArgs) -> CliResult {
    match (&args.seed, &args.verify) {
        (Some(seed_hex), None) => chain_generate(args, seed_hex),
        (None, Some(path)) => chain_verify(path),
        _ => Err(usage("pass exactly one of --seed or --verify")),
    }
}

fn chain_generate(args: &ChainArgs, seed_hex: &str) -> CliResult {
    let bytes = hex::decode(seed_hex).map_err(|_| usage("--seed must be valid hex"))?;
    let seed: [u8; 8] = bytes
        .try_into()
        .map_err(|_| usage("--seed must be exactly 8 bytes (16 hex digits)"))?;
    let chain = KeyChain::generate(ChainKey::new(seed), args.n, args.t0, args.t_int, args.d)
        .map_err(|e| usage(format!("invalid chain parameters: {e}")))?;

    let mut table = String::new();
    for i in 0..=args.n {
        let key = chain.key(i).expect("index within generated chain");
        // One-way linkage check before anything is printed.
        if i < args.n {
            let next = chain.key(i + 1).unwrap();
            assert_eq!(chain_step(&next), key, "generated chain must be linked");
        }
        let t_start = args.t0 + u64::from(i) * args.t_int;
        writeln!(table, "{i} {} {t_start}", hex::encode(key.as_bytes())).unwrap();
    }
    write_output(args.out.as_deref(), table.as_bytes())
}

fn chain_verify(path: &Path) -> CliResult {
    let text = String::from_utf8(read_file(path)?)
        .map_err(|_| usage(format!("{} is not a text file", path.display())))?;
    let mut rows: Vec<(u32, ChainKey)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let parse = || usage(format!("line {}: expected `index key_hex t_start`", lineno + 1));
        let index: u32 = fields.next().ok_or_else(parse)?.parse().map_err(|_| parse())?;
        let key_bytes = hex::decode(fields.next().ok_or_else(parse)?).map_err(|_| parse())?;
        let key: [u8; 8] = key_bytes.try_into().map_err(|_| parse())?;
        let _t_start: u64 = fields.next().ok_or_else(parse)?.parse().map_err(|_| parse())?;
        rows.push((index, ChainKey::new(key)));
    }
    if rows.len() < 2 {
        return Err(usage("chain table needs at least two rows"));
    }
    for pair in rows.windows(2) {
        let ((i, key), (j, next)) = (pair[0], pair[1]);
        if j != i + 1 {
            return Err(usage(format!("row order broken: index {j} follows {i}")));
        }
        if chain_step(&next) != key {
            return Err(CliError::Protocol(format!(
                "key chain linkage broken between indices {i} and {j}"
            )));
        }
    }
    println!("chain ok: {} keys verified", rows.len());
    Ok(())
}

fn association(
    key_path: &Path,
    local_id: u32,
    peer_id: u32,
) -> Result<SecurityAssociation, CliError> {
    let km = master_key_from_file(key_path)?;
    SecurityAssociation::from_master(&km, local_id, peer_id)
        .map_err(|e| usage(format!("cannot derive keys: {e}")))
}

fn seal(args: &SealArgs) -> CliResult {
    let mut assoc = association(&args.key, args.local_id, args.peer_id)?.at_counters(args.counter, 0);
    let message = read_file(&args.message)?;
    let pkt = assoc
        .seal(&message)
        .map_err(|e| usage(format!("cannot seal: {e}")))?;
    write_output(Some(&args.out), &pkt.to_bytes())
}

fn open(args: &OpenArgs) -> CliResult {
    let mut assoc = association(&args.key, args.local_id, args.peer_id)?.at_counters(0, args.counter);
    let bytes = read_file(&args.packet)?;
    let pkt = SecurePacket::from_bytes(&bytes)
        .map_err(|e| CliError::Protocol(format!("packet rejected: {e}")))?;
    let plaintext = assoc
        .open(&pkt)
        .map_err(|e| CliError::Protocol(format!("packet rejected: {e}")))?;
    write_output(args.out.as_deref(), &plaintext)
}

fn run_sim(args: &RunSimArgs) -> CliResult {
    let text = String::from_utf8(read_file(&args.config)?)
        .map_err(|_| usage(format!("{} is not a text file", args.config.display())))?;
    let mut cfg = ScenarioConfig::from_config_text(&text).map_err(|e| usage(e.to_string()))?;
    if let Some(seed) = args.seed {
        cfg.rng_seed = seed;
    }

    let (records, trace) = if args.trace.is_some() {
        let (r, t) = sim::run_traced(&cfg).map_err(|e| usage(e.to_string()))?;
        (r, Some(t))
    } else {
        (sim::run(&cfg).map_err(|e| usage(e.to_string()))?, None)
    };

    write_output(Some(&args.out), sim::to_csv(&records).as_bytes())?;
    if let (Some(path), Some(lines)) = (args.trace.as_deref(), trace) {
        write_output(Some(path), (lines.join("\n") + "\n").as_bytes())?;
    }

    for &load in &cfg.traffic_load {
        let mut line = format!("load {load}:");
        for r in records.iter().filter(|r| r.load == load) {
            write!(
                line,
                " {}(delivery {:.2}, storage {:.0} B)",
                r.mode, r.delivery_ratio, r.avg_storage_bytes
            )
            .unwrap();
        }
        println!("{line}");
    }
    Ok(())
}

/// One parsed run-sim CSV row, metric values kept verbatim.
struct ReportRow {
    load: String,
    e2e: String,
    auth: String,
    delivery: String,
    storage: String,
}

fn report(args: &ReportArgs) -> CliResult {
    let mut by_mode: Vec<(ProtocolMode, Vec<ReportRow>)> = Vec::new();
    for path in &args.inputs {
        let text = String::from_utf8(read_file(path)?)
            .map_err(|_| usage(format!("{} is not a text file", path.display())))?;
        let mut lines = text.lines();
        if lines.next() != Some(CSV_HEADER) {
            return Err(usage(format!(
                "{} does not carry the expected metrics header",
                path.display()
            )));
        }
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 9 {
                return Err(usage(format!("{}: malformed row `{line}`", path.display())));
            }
            let mode = ProtocolMode::parse(fields[1])
                .ok_or_else(|| usage(format!("{}: unknown mode `{}`", path.display(), fields[1])))?;
            let row = ReportRow {
                load: fields[0].to_string(),
                e2e: fields[2].to_string(),
                auth: fields[3].to_string(),
                delivery: fields[4].to_string(),
                storage: fields[5].to_string(),
            };
            match by_mode.iter_mut().find(|(m, _)| *m == mode) {
                Some((_, rows)) => rows.push(row),
                None => by_mode.push((mode, vec![row])),
            }
        }
    }
    if by_mode.is_empty() {
        return Err(usage("no metric rows found in the inputs"));
    }

    // Every mode must cover the identical load grid.
    let grid: Vec<String> = by_mode[0].1.iter().map(|r| r.load.clone()).collect();
    for (mode, rows) in &by_mode {
        let this: Vec<String> = rows.iter().map(|r| r.load.clone()).collect();
        if this != grid {
            return Err(usage(format!(
                "load grids differ between modes (mode {mode} breaks the pattern)"
            )));
        }
    }
    by_mode.sort_by_key(|(mode, _)| ProtocolMode::ALL.iter().position(|m| m == mode));

    let mut out = String::from("load");
    for (mode, _) in &by_mode {
        write!(
            out,
            ",delay_{mode},auth_delay_{mode},delivery_{mode},storage_{mode}"
        )
        .unwrap();
    }
    out.push('\n');
    for (i, load) in grid.iter().enumerate() {
        out.push_str(load);
        for (_, rows) in &by_mode {
            let r = &rows[i];
            write!(out, ",{},{},{},{}", r.e2e, r.auth, r.delivery, r.storage).unwrap();
        }
        out.push('\n');
    }
    write_output(args.out.as_deref(), out.as_bytes())
}
