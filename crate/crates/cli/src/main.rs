use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dsa_core::field::{derive_seed, rng_from_seed, PrimeField, DEFAULT_MODULUS};
use dsa_core::keys::DealMode;
use dsa_core::mds::{find_private_mds, MatrixFile, PrivateMdsMatrix};
use dsa_core::protocol::{check_feasibility, ProtocolParams, SurvivorSet};
use dsa_core::sim::{
    enumerate_schedules, instance_seeds, replay, run_instance, sample_schedules, sweep,
    DropoutSchedule, SweepConfig, SweepMode, Transcript,
};

// Sub-seed tags; find-matrix and sweep with the same --seed pick the same matrix.
const MATRIX_TAG: u64 = 0x6d;
const SCHEDULE_TAG: u64 = 0x73;

#[derive(Parser)]
#[command(
    name = "dsa",
    version,
    about = "Two-round decentralized secure aggregation simulator",
    after_help = "User ids are 0-based everywhere: K users are numbered 0..K-1.\n\
                  Thread count follows RAYON_NUM_THREADS."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for and certify a (T+1)-private MDS matrix.
    FindMatrix {
        #[command(flatten)]
        shape: Shape,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run correctness and/or security checks over dropout schedules.
    Sweep(SweepArgs),
    /// Re-verify a stored transcript.
    Replay {
        transcript: PathBuf,
        /// Also require the transcript to use this matrix.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Shape {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    u: usize,
    #[arg(long)]
    t: usize,
    #[arg(long, default_value_t = DEFAULT_MODULUS)]
    q: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Correctness,
    Security,
    Both,
}

impl From<ModeArg> for SweepMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Correctness => SweepMode::Correctness,
            ModeArg::Security => SweepMode::Security,
            ModeArg::Both => SweepMode::Both,
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    shape: Shape,
    #[arg(long, default_value_t = 1)]
    blocks: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of protocol instances per schedule.
    #[arg(long, default_value_t = 10)]
    runs: usize,
    /// `all`, `random:N`, or `u1=0,1,3,u2=0,1,3`.
    #[arg(long, default_value = "all")]
    schedules: String,
    #[arg(long, value_enum, default_value = "both")]
    mode: ModeArg,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Pinned matrix file from `find-matrix`.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Fault injection: deal all-zero pads. Testing only.
    #[arg(long)]
    break_pads: bool,
    /// Write the transcript of the first run here (contains every input and key).
    #[arg(long)]
    transcript: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::FindMatrix { shape, seed, out } => cmd_find_matrix(&shape, seed, out.as_deref()),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Replay { transcript, matrix } => cmd_replay(&transcript, matrix.as_deref()),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn write_or_print(path: Option<&Path>, json: &str) -> Result<()> {
    match path {
        Some(p) => {
            fs::write(p, format!("{json}\n")).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn search_matrix(shape: &Shape, seed: u64) -> Result<PrivateMdsMatrix> {
    check_feasibility(shape.u, shape.t)?;
    let field = PrimeField::new(shape.q)?;
    let mut rng = rng_from_seed(derive_seed(seed, MATRIX_TAG));
    Ok(find_private_mds(
        shape.k, shape.u, shape.t, field, &mut rng,
    )?)
}

fn load_matrix(path: &Path) -> Result<PrivateMdsMatrix> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: MatrixFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(PrivateMdsMatrix::from_file(&file)?)
}

fn cmd_find_matrix(shape: &Shape, seed: u64, out: Option<&Path>) -> Result<bool> {
    let alpha = search_matrix(shape, seed)?;
    write_or_print(out, &serde_json::to_string_pretty(&alpha.to_file())?)?;
    eprintln!("certified matrix {}", alpha.fingerprint());
    Ok(true)
}

fn parse_ids(k: usize, s: &str) -> Result<SurvivorSet> {
    let ids = s
        .split(',')
        .map(|x| {
            x.trim()
                .parse::<usize>()
                .with_context(|| format!("bad user id {x:?}"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SurvivorSet::new(k, ids)?)
}

fn parse_schedules(spec: &str, params: &ProtocolParams, seed: u64) -> Result<Vec<DropoutSchedule>> {
    if spec == "all" {
        return Ok(enumerate_schedules(params));
    }
    if let Some(n) = spec.strip_prefix("random:") {
        let n: usize = n
            .parse()
            .with_context(|| format!("bad schedule count {n:?}"))?;
        return Ok(sample_schedules(params, n, derive_seed(seed, SCHEDULE_TAG)));
    }
    let Some(rest) = spec.strip_prefix("u1=") else {
        bail!("--schedules must be `all`, `random:N` or `u1=...,u2=...`, got {spec:?}");
    };
    let Some((u1, u2)) = rest.split_once(",u2=") else {
        bail!("explicit schedule needs both u1= and u2=, got {spec:?}");
    };
    let k = params.users();
    Ok(vec![DropoutSchedule::new(
        params,
        parse_ids(k, u1)?,
        parse_ids(k, u2)?,
    )?])
}

fn cmd_sweep(args: &SweepArgs) -> Result<bool> {
    let s = &args.shape;
    let params = ProtocolParams::new(s.k, s.u, s.t, s.q, args.blocks)?;
    let alpha = match &args.matrix {
        Some(p) => load_matrix(p)?,
        None => search_matrix(s, args.seed)?,
    };
    params.check_matrix(&alpha)?;
    let schedules = parse_schedules(&args.schedules, &params, args.seed)?;
    let config = SweepConfig {
        mode: args.mode.into(),
        broken_pads: args.break_pads,
        master_seed: args.seed,
        seeds: instance_seeds(args.seed, args.runs),
        schedules,
    };
    let report = sweep(&params, &alpha, &config)?;

    if let Some(path) = &args.transcript {
        let (Some(&seed), Some(schedule)) = (config.seeds.first(), config.schedules.first()) else {
            bail!("--transcript needs at least one run and one schedule");
        };
        let mode = if args.break_pads {
            DealMode::ZeroPads
        } else {
            DealMode::Uniform
        };
        let tr = run_instance(&params, &alpha, schedule, seed, mode)?;
        write_or_print(Some(path), &serde_json::to_string_pretty(&tr)?)?;
    }

    write_or_print(args.out.as_deref(), &serde_json::to_string_pretty(&report)?)?;
    eprintln!(
        "{} instances, {} decodes, {} correctness failures, {} security cases, {} violations, max MI {}, R1 = {}, R2 = {}",
        report.instances_run,
        report.decodes_checked,
        report.correctness_failures + report.rank_correctness_failures,
        report.security_cases,
        report.security_violations,
        report.max_mi,
        report.r1,
        report.r2
    );
    Ok(report.passed())
}

fn cmd_replay(path: &Path, matrix: Option<&Path>) -> Result<bool> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let tr: Transcript =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let pinned = matrix.map(load_matrix).transpose()?;
    let report = replay(&tr, pinned.as_ref())?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if !report.passed() {
        for m in report
            .decode_mismatches
            .iter()
            .chain(&report.message_inconsistencies)
        {
            eprintln!("mismatch: {m}");
        }
    }
    Ok(report.passed())
}
