//! `wsl`: build soliton frames, verify fields and run the scattering
//! transform from the command line.

mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgMatches, CommandFactory, FromArgMatches, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "wsl", version, about = "Ward solitons and scattering for the space-time monopole equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Soliton frames from a JSON spec.
    #[command(subcommand)]
    Soliton(SolitonCmd),
    /// Lorentz action on frames.
    #[command(subcommand)]
    Lorentz(LorentzCmd),
    /// Continuous scattering data.
    #[command(subcommand)]
    Scatter(ScatterCmd),
    /// Residuals of a field directory or CSV file.
    Verify {
        path: PathBuf,
    },
    /// Closed-form reference solutions.
    #[command(subcommand)]
    Oracle(OracleCmd),
}

#[derive(Subcommand, Debug)]
enum SolitonCmd {
    /// Build the frame, sample fields and write a verification report.
    Build {
        spec: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Seed for the verification sample points.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
}

#[derive(Subcommand, Debug)]
enum LorentzCmd {
    /// Apply a product of rotations and boosts, composed in the order given
    /// (the leftmost factor acts last).
    Apply {
        /// Spec file, or a directory written by `soliton build`.
        frame: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        rot: Vec<f64>,
        #[arg(long, allow_negative_numbers = true)]
        boost: Vec<f64>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args, Debug, Clone)]
pub struct LineArgs {
    #[arg(long, default_value_t = 12.0)]
    pub x_half: f64,
    #[arg(long, default_value_t = 481)]
    pub nx: usize,
    #[arg(long, default_value_t = 48.0)]
    pub y_period: f64,
    #[arg(long, default_value_t = 256)]
    pub ny: usize,
}

#[derive(clap::Args, Debug, Clone)]
pub struct DataArgs {
    /// Number of equally spaced angles.
    #[arg(long, default_value_t = 16)]
    pub thetas: usize,
    #[arg(long, default_value_t = 8.0)]
    pub sigma_half: f64,
    #[arg(long, default_value_t = 161)]
    pub sigma_nodes: usize,
}

#[derive(Subcommand, Debug)]
enum ScatterCmd {
    /// Scattering data of one time slice of a field.
    Forward {
        field: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Time slice; defaults to the middle one.
        #[arg(long)]
        t_index: Option<usize>,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        line: LineArgs,
        #[arg(long)]
        no_reality_check: bool,
    },
    /// Fields on a square grid from scattering data.
    Invert {
        data: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        half: f64,
        #[arg(long, default_value_t = 101)]
        nodes: usize,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        t: f64,
        /// Only the spatial fields on a single slice.
        #[arg(long)]
        no_time: bool,
        /// Re-scatter the result and report the distance to the input.
        #[arg(long)]
        roundtrip: bool,
        /// Angles used by the round trip.
        #[arg(long, default_value_t = 4)]
        roundtrip_thetas: usize,
        #[arg(long, default_value_t = 10)]
        roundtrip_stride: usize,
    },
    /// Transport scattering data to time `t`.
    Evolve {
        data: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum OracleCmd {
    /// Abelian plane wave, its windowed packet and the packet's exact data.
    Abelian {
        #[arg(long, allow_negative_numbers = true)]
        kx: f64,
        #[arg(long, allow_negative_numbers = true)]
        ky: f64,
        #[arg(long, allow_negative_numbers = true)]
        amp: f64,
        #[arg(long, default_value_t = 2.5)]
        width: f64,
        #[arg(long, default_value_t = 10.0)]
        half: f64,
        #[arg(long, default_value_t = 201)]
        nodes: usize,
        #[command(flatten)]
        data: DataArgs,
        #[arg(short, long)]
        out: PathBuf,
    },
}

/// Rotations and boosts in command-line order.
fn lorentz_factors(m: &ArgMatches) -> Vec<run::Factor> {
    let Some(apply) = m.subcommand_matches("lorentz").and_then(|l| l.subcommand_matches("apply")) else {
        return Vec::new();
    };
    let mut out: Vec<(usize, run::Factor)> = Vec::new();
    for (name, rot) in [("rot", true), ("boost", false)] {
        if let (Some(idx), Some(vals)) = (apply.indices_of(name), apply.get_many::<f64>(name)) {
            for (i, v) in idx.zip(vals) {
                out.push((i, if rot { run::Factor::Rot(*v) } else { run::Factor::Boost(*v) }));
            }
        }
    }
    out.sort_by_key(|(i, _)| *i);
    out.into_iter().map(|(_, f)| f).collect()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    if let Err(e) = run::init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(e.code());
    }
    let result = match cli.command {
        Command::Soliton(SolitonCmd::Build { spec, out, seed, samples }) => run::soliton_build(&spec, &out, seed, samples),
        Command::Lorentz(LorentzCmd::Apply { frame, out, .. }) => {
            run::lorentz_apply(&frame, &lorentz_factors(&matches), out.as_deref())
        }
        Command::Scatter(ScatterCmd::Forward { field, out, t_index, data, line, no_reality_check }) => {
            run::scatter_forward(&field, &out, t_index, &data, &line, !no_reality_check)
        }
        Command::Scatter(ScatterCmd::Invert {
            data,
            out,
            half,
            nodes,
            t,
            no_time,
            roundtrip,
            roundtrip_thetas,
            roundtrip_stride,
        }) => run::scatter_invert(
            &data,
            &out,
            run::InvertOpts { half, nodes, t, with_time: !no_time, roundtrip, roundtrip_thetas, roundtrip_stride },
        ),
        Command::Scatter(ScatterCmd::Evolve { data, t, out }) => run::scatter_evolve(&data, t, &out),
        Command::Verify { path } => run::verify(&path),
        Command::Oracle(OracleCmd::Abelian { kx, ky, amp, width, half, nodes, data, out }) => {
            run::oracle_abelian(run::OracleOpts { kx, ky, amp, width, half, nodes }, &data, &out)
        }
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
