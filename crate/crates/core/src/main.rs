use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use ecf::experiment::{run_scenario, summarize, write_csv, write_summary, OneOrMany, Scenario};
use ecf::schemes::SuccPower;
use ecf::successive::{SuccMode, UeOrder};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum UeOrderArg {
    ReceivedPower,
    ChannelNorm,
    Hungarian,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuccModeArg {
    Literal,
    Conservative,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuccPowerArg {
    Parallel,
    FirstCombination,
}

/// Monte-Carlo achievable sum-rates for cell-free compute-and-forward schemes.
#[derive(Debug, Parser)]
#[command(name = "ecf-sim", version)]
struct Cli {
    /// JSON scenario file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of APs; repeat or comma-separate for a sweep.
    #[arg(long, value_delimiter = ',')]
    m: Vec<usize>,
    #[arg(long)]
    l: Option<usize>,
    /// Total transmit power budget in milliwatts.
    #[arg(long)]
    pt_mw: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated scheme names, e.g. CF,MRC,APS-PARA,APS-LSF-SUCC-HUNGARIAN.
    #[arg(long, value_delimiter = ',')]
    schemes: Vec<String>,
    /// Per-trial CSV output (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON summary output.
    #[arg(long)]
    summary_out: Option<PathBuf>,
    /// UE ordering used by schemes named plain SUCC.
    #[arg(long, value_enum)]
    ue_order: Option<UeOrderArg>,
    #[arg(long, value_enum)]
    succ_mode: Option<SuccModeArg>,
    #[arg(long, value_enum)]
    succ_power: Option<SuccPowerArg>,
    /// Maximum number of UEs each AP may combine.
    #[arg(long)]
    cap: Option<usize>,
    /// Prime for the recoverability test.
    #[arg(long)]
    prime: Option<u64>,
    /// Record wall-clock time per scheme (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn scenario(cli: &Cli) -> ecf::Result<Scenario> {
    let mut sc = match &cli.config {
        Some(p) => Scenario::load(p)?,
        None => Scenario::default(),
    };
    if !cli.m.is_empty() {
        sc.m_aps = OneOrMany::Many(cli.m.clone());
    }
    if let Some(v) = cli.l {
        sc.l_ues = v;
    }
    if let Some(v) = cli.pt_mw {
        sc.pt_watts = v / 1e3;
    }
    if let Some(v) = cli.trials {
        sc.trials = v;
    }
    if let Some(v) = cli.seed {
        sc.seed = v;
    }
    if !cli.schemes.is_empty() {
        sc.schemes = cli.schemes.clone();
    }
    if let Some(v) = cli.ue_order {
        sc.ue_order = match v {
            UeOrderArg::ReceivedPower => UeOrder::ReceivedPower,
            UeOrderArg::ChannelNorm => UeOrder::ChannelNorm,
            UeOrderArg::Hungarian => UeOrder::Hungarian,
        };
    }
    if let Some(v) = cli.succ_mode {
        sc.succ_mode = match v {
            SuccModeArg::Literal => SuccMode::Literal,
            SuccModeArg::Conservative => SuccMode::Conservative,
        };
    }
    if let Some(v) = cli.succ_power {
        sc.succ_power = match v {
            SuccPowerArg::Parallel => SuccPower::Parallel,
            SuccPowerArg::FirstCombination => SuccPower::FirstCombination,
        };
    }
    if cli.cap.is_some() {
        sc.cap = cli.cap;
    }
    if let Some(v) = cli.prime {
        sc.prime = v;
    }
    sc.record_timing |= cli.timing;
    Ok(sc)
}

fn run(cli: &Cli) -> ecf::Result<()> {
    let sc = scenario(cli)?;
    sc.validate()?;
    log::info!("running {} trials per M over {:?}", sc.trials, sc.m_aps.values());
    let records = run_scenario(&sc)?;
    match &cli.out {
        Some(p) => write_csv(&records, sc.l_ues, BufWriter::new(File::create(p)?))?,
        None => write_csv(&records, sc.l_ues, std::io::stdout().lock())?,
    }
    let summary = summarize(&records)?;
    if let Some(p) = &cli.summary_out {
        let mut w = BufWriter::new(File::create(p)?);
        write_summary(&summary, &mut w)?;
        w.flush()?;
    } else {
        for g in &summary.groups {
            eprintln!(
                "{:<24} M={:<4} mean={:.4} stderr={:.4}",
                g.scheme, g.m, g.mean, g.stderr
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
