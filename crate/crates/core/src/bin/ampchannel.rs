use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ampchannel_core::harness::{
    fig3_config, run_and_emit, AmplifierConfig, ExperimentConfig, Fig2Config, Job, Manifest,
    Outcome,
};
use ampchannel_core::laser_fpe::validity_check;
use ampchannel_core::Error;

/// Gain, noise figure, bit-error rate and mutual information of optical
/// amplifiers in a vacuum/coherent binary channel.
#[derive(Debug, Parser)]
#[command(name = "ampchannel", version)]
struct Cli {
    /// Replace the seed of the configuration (recorded in the manifest).
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    /// Directory for report, histograms and manifest.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment from a config file, or repeat the run recorded in a manifest.
    Run { config: PathBuf },
    /// Run a laser config and an ideal PIA at the laser's measured gain.
    Compare { config: PathBuf },
    /// Stationary one-atom laser: FPE against quantum jumps.
    Fig2,
    /// Saturated laser against the gain-matched PIA.
    Fig3,
    /// Print the validity report of a laser config without running it.
    Validate { config: PathBuf },
}

fn looks_like_manifest(text: &str) -> bool {
    text.parse::<toml::Table>()
        .map(|t| t.contains_key("command") && t.contains_key("checksums"))
        .unwrap_or(false)
}

fn load_job(path: &Path, compare: bool) -> Result<Job, Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if looks_like_manifest(&text) {
        let m = Manifest::from_toml_str(&text, &path.display().to_string())?;
        return Job::from_manifest(&m);
    }
    let cfg = ExperimentConfig::from_toml_str(&text, &path.display().to_string())?;
    Ok(if compare {
        Job::Compare(cfg)
    } else {
        Job::Run(cfg)
    })
}

fn default_out_dir(job: &Job) -> PathBuf {
    let name = match job {
        Job::Run(c) | Job::Compare(c) | Job::Fig3(c) => c.label.clone(),
        Job::Fig2(_) => "fig2".into(),
    };
    PathBuf::from("out").join(name)
}

fn summary(outcome: &Outcome) -> String {
    match outcome {
        Outcome::Channel(r) => format!(
            "{}: G = {:.4} ({:.3} dB), R = {:.4} ({:.3} dB), BER = {:.6e}, I = {:.6} bit, threshold {}",
            r.label, r.gain_linear, r.gain_db, r.noise_figure_linear, r.noise_figure_db, r.ber,
            r.mutual_information_bits, r.threshold
        ),
        Outcome::Comparison(c) => {
            let row = |r: &ampchannel_core::harness::ChannelReport| {
                format!(
                    "  {:<10} G = {:8.4} dB  R = {:8.4} dB  BER = {:.6e}  I = {:.6}",
                    r.label, r.gain_db, r.noise_figure_db, r.ber, r.mutual_information_bits
                )
            };
            format!(
                "matched gain {:.4} dB\n{}\n{}\nbit-0 variance: laser {:.4} ± {:.4}, pia {:.4}",
                c.matched_gain_db,
                row(&c.laser),
                row(&c.pia),
                c.laser_bit0_variance,
                c.laser_bit0_variance_stderr,
                c.pia_bit0_variance
            )
        }
        Outcome::Fig2(v) => format!(
            "TV(fpe, qjump) = {:.4} (tolerance {:.4}, {}); means fpe {:.3}, qjump {:.3}; seed repeat TV {:.4} (tolerance {:.4})",
            v.total_variation,
            v.tolerance,
            if v.passed { "agree" } else { "DISAGREE" },
            v.fpe_mean,
            v.qj_mean,
            v.repeat_total_variation,
            v.repeat_tolerance
        ),
    }
}

fn validate(path: &Path) -> Result<(), Error> {
    let cfg = ExperimentConfig::load(path)?;
    match cfg.amplifier {
        AmplifierConfig::LaserFpe { .. } | AmplifierConfig::Qjump { .. } => {
            let p = cfg
                .amplifier
                .laser_params()
                .expect("laser kinds carry parameters")?;
            let t = cfg
                .amplifier
                .evolution_time()
                .expect("laser kinds carry a time");
            let report = validity_check(&p, t.max(f64::MIN_POSITIVE), cfg.analysis.strictness);
            print!(
                "{}",
                toml::to_string(&report).expect("validity report is plain data")
            );
            eprintln!("{}", report.summary());
        }
        _ => println!(
            "# {} amplifiers have no validity conditions",
            cfg.amplifier.kind()
        ),
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<bool, Error> {
    let job = match &cli.command {
        Command::Run { config } => load_job(config, false)?,
        Command::Compare { config } => load_job(config, true)?,
        Command::Fig2 => Job::Fig2(Fig2Config::default()),
        Command::Fig3 => Job::Fig3(fig3_config()),
        Command::Validate { config } => {
            validate(config)?;
            return Ok(true);
        }
    };
    let job = match cli.seed_override {
        Some(s) => job.with_seed(s),
        None => job,
    };
    let dir = cli
        .out_dir
        .clone()
        .or_else(|| job.configured_out_dir().map(Path::to_path_buf))
        .unwrap_or_else(|| default_out_dir(&job));
    let start = std::time::Instant::now();
    let (outcome, manifest) = run_and_emit(&job, &dir)?;
    println!("{}", summary(&outcome));
    if let Outcome::Channel(r) = &outcome {
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
    }
    eprintln!(
        "wrote {} files to {} (seed {}) in {:.2} s",
        manifest.checksums.len() + 1,
        dir.display(),
        manifest.seed,
        start.elapsed().as_secs_f64()
    );
    Ok(match outcome {
        Outcome::Fig2(v) => v.passed,
        _ => true,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
