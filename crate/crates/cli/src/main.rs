use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jrc_cli::commands::{cmd_design, cmd_ndp, cmd_run, cmd_sweep, parse_eta_list, Job};
use jrc_cli::exit_code;
use jrc_cli::pipeline::{EtaOverride, Settings};
use jrc_core::imaging::Window;
use jrc_core::precoder::SubcarrierPolicy;
use jrc_core::{Result, Scenario};

#[derive(Parser)]
#[command(name = "jrc", version, about = "MIMO-OFDM joint radar-communication simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Omnidirectional preamble: radar image, detections and CSI feedback.
    Ndp {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        imaging: ImagingArgs,
    },
    /// Precoder design from CSI and detection files.
    Design {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        design: DesignArgs,
        /// CSI file (default: <out>/csi.json).
        #[arg(long)]
        csi: Option<PathBuf>,
        /// Detection table (default: <out>/detections.csv).
        #[arg(long)]
        detections: Option<PathBuf>,
    },
    /// End-to-end run: NDP, design, precoded transmission and metrics.
    Run {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        imaging: ImagingArgs,
        #[command(flatten)]
        design: DesignArgs,
    },
    /// Trade-off table over SINR floors.
    Sweep {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        imaging: ImagingArgs,
        /// Floors in dB as `start:stop:step` or a comma-separated list.
        #[arg(long, default_value = "10:30:1")]
        eta: String,
        #[arg(long = "subcarrier-policy", default_value = "center")]
        policy: SubcarrierPolicy,
    },
}

#[derive(Args)]
struct IoArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Overrides the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ImagingArgs {
    /// rect, hamming, hann or blackman.
    #[arg(long)]
    window: Option<Window>,
    /// Zero-padding factor on both image axes.
    #[arg(long)]
    pad: Option<usize>,
}

#[derive(Args)]
struct DesignArgs {
    /// SINR floor in dB, either one value or a per-receiver list. `off` drops the floors.
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<EtaOverride>,
    /// center, all or stride:k.
    #[arg(long = "subcarrier-policy", default_value = "center")]
    policy: SubcarrierPolicy,
}

fn settings(s: &Scenario, imaging: Option<&ImagingArgs>, policy: SubcarrierPolicy, eta: EtaOverride) -> Result<Settings> {
    let mut st = Settings::for_scenario(s);
    st.policy = policy;
    st.eta = eta;
    if let Some(a) = imaging {
        if let Some(w) = a.window {
            st.imaging.window = w;
        }
        if let Some(p) = a.pad {
            if p == 0 {
                return Err(jrc_core::Error::Invariant("--pad must be at least 1".into()));
            }
            st.imaging.pad_range = p;
            st.imaging.pad_angle = p;
        }
    }
    Ok(st)
}

fn job(io: &IoArgs, imaging: Option<&ImagingArgs>, policy: SubcarrierPolicy, eta: EtaOverride) -> Result<Job> {
    let base = Job::new(&io.scenario, &io.out, io.seed, None)?;
    let st = settings(&base.scenario, imaging, policy, eta)?;
    Ok(Job { settings: st, ..base })
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ndp { io, imaging } => {
            let j = job(&io, Some(&imaging), SubcarrierPolicy::default(), EtaOverride::Scenario)?;
            let (ndp, _) = cmd_ndp(&j)?;
            for d in &ndp.radar.detections {
                println!("target: {:.3} m, {:.2} deg", d.range_m, d.azimuth_rad.to_degrees());
            }
        }
        Command::Design {
            io,
            design,
            csi,
            detections,
        } => {
            let j = job(&io, None, design.policy, design.eta.unwrap_or_default())?;
            let csi = csi.unwrap_or_else(|| io.out.join("csi.json"));
            let det = detections.unwrap_or_else(|| io.out.join("detections.csv"));
            let (sol, _) = cmd_design(&j, &csi, &det)?;
            println!("min SINR (dB): {:?}", sol.report.min_sinr_all_db);
            println!("target directed power (W): {:?}", sol.report.target_directed_power_w);
        }
        Command::Run { io, imaging, design } => {
            let j = job(&io, Some(&imaging), design.policy, design.eta.unwrap_or_default())?;
            let (m, _) = cmd_run(&j)?;
            for t in &m.targets {
                println!(
                    "target {:.3} m, {:.2} deg: P = {:.4} W, accuracy {:.4e}",
                    t.range_m, t.azimuth_deg, t.directed_power_w, t.positioning_accuracy
                );
            }
            for r in &m.receivers {
                println!("receiver {:.2} deg: min SINR {:.2} dB", r.azimuth_deg, r.min_sinr_db);
            }
        }
        Command::Sweep {
            io,
            imaging,
            eta,
            policy,
        } => {
            let etas = parse_eta_list(&eta)?;
            let j = job(&io, Some(&imaging), policy, EtaOverride::Scenario)?;
            let (rows, _) = cmd_sweep(&j, &etas)?;
            let feasible = rows.iter().filter(|r| r.eta_db.is_some() && r.feasible).count();
            println!("{feasible} of {} floors feasible", etas.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
