use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mimo_rrdfe::channel::SystemConfig;
use mimo_rrdfe::harness::{
    convergence_curve, emit_plot, run_seed, sweep_rank, sweep_snr, write_csv, BerCurve, ExperimentConfig, Packet,
    Scheme,
};
use mimo_rrdfe::jio::JioDfe;
use mimo_rrdfe::{Error, Result};

#[derive(Parser)]
#[command(name = "rrdfe", version, about = "Reduced-rank MIMO DFE BER experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// BER against the JIO rank.
    SweepRank,
    /// Windowed BER against the number of received symbols.
    Convergence,
    /// BER against SNR.
    SweepSnr,
    /// One packet at the configured rank and SNR; dumps the channel and the final JIO state.
    RunOne,
}

#[derive(Args)]
struct Common {
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    runs: Option<usize>,
    /// Comma-separated subset of full_rank,jio,mmse_bound.
    #[arg(long, global = true)]
    schemes: Option<String>,
    /// Also write an SVG plot.
    #[arg(long, global = true)]
    plot: bool,
    #[arg(long, global = true)]
    quiet: bool,
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.base_seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(runs) = common.runs {
        cfg.n_runs = runs;
    }
    if let Some(list) = &common.schemes {
        cfg.set("schemes", list)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(curve: &BerCurve, cfg: &ExperimentConfig, name: &str, common: &Common) -> Result<()> {
    std::fs::create_dir_all(&cfg.out)?;
    let csv = cfg.out.join(format!("{name}.csv"));
    write_csv(curve, &csv)?;
    if common.plot {
        emit_plot(curve, &cfg.out.join(format!("{name}.svg")))?;
    }
    if !common.quiet {
        for p in &curve.points {
            println!(
                "{:<10} {}={:<8} ber={:.3e} stderr={:.1e}",
                p.scheme, curve.sweep, p.value, p.ber, p.stderr
            );
        }
        println!("wrote {}", csv.display());
    }
    Ok(())
}

fn run_one(cfg: &ExperimentConfig, quiet: bool) -> Result<()> {
    let seed = run_seed(cfg.base_seed, 0);
    let packet = Packet::generate(&cfg.system, seed)?;
    let noise_var = cfg.system.noise_variance();
    let ys = packet.observations(noise_var)?;
    std::fs::create_dir_all(&cfg.out)?;
    write(&cfg.out.join("channel.txt"), &packet.channel.to_text())?;
    for &scheme in &cfg.schemes {
        let out = mimo_rrdfe::harness::run_packet(cfg, scheme, cfg.rank, cfg.system.snr_db, seed)?;
        if !quiet {
            println!("{scheme:<10} errors={} bits={} ber={:.3e}", out.bit_errors, out.bits, out.ber());
        }
        if scheme == Scheme::Jio {
            let state = final_jio_state(cfg, &packet, &ys)?;
            write(&cfg.out.join("jio_state.txt"), &state.to_snapshot())?;
        }
    }
    if !quiet {
        println!("wrote {}", cfg.out.display());
    }
    Ok(())
}

fn final_jio_state(cfg: &ExperimentConfig, packet: &Packet, ys: &[mimo_rrdfe::ComplexVector]) -> Result<JioDfe> {
    let sys: &SystemConfig = &cfg.system;
    let mut dfe = JioDfe::new(sys.obs_len(), sys.n_tx, cfg.rank, cfg.lambda_jio, cfg.delta)?;
    for (i, y) in ys.iter().enumerate() {
        let truth = packet.frame.column(i);
        let training = packet.frame.is_training(i).then_some(truth.as_slice());
        dfe.process(y, training)?;
    }
    Ok(dfe)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(Error::from)
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = load_config(&cli.common)?;
    match cli.command {
        Command::SweepRank => emit(&sweep_rank(&cfg)?, &cfg, "sweep-rank", &cli.common),
        Command::Convergence => emit(&convergence_curve(&cfg)?, &cfg, "convergence", &cli.common),
        Command::SweepSnr => emit(&sweep_snr(&cfg)?, &cfg, "sweep-snr", &cli.common),
        Command::RunOne => run_one(&cfg, cli.common.quiet),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
