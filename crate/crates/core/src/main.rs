use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use oddm::baselines::Scheme;
use oddm::channel::{gen_random_channel, snr_to_noise_var};
use oddm::detector::{oamp_detect_with, LeKernel, LeMode, OampConfig};
use oddm::effchan::assemble_h;
use oddm::grid::{devectorize, FrameConfig};
use oddm::harness::stats::qam4_awgn_ber;
use oddm::harness::{
    emit_csv, estimate_once, run_ber_sweep, run_comparison, run_nmse_sweep, ExperimentSpec, SweepResult,
};
use oddm::rng::{awgn, random_bits, rng_from_seed};
use oddm::waveform::{build_srrc, oddm_demodulate, oddm_modulate};
use oddm::{Constellation, ConstellationKind, Error};

#[derive(Parser)]
#[command(name = "oddm", version, about = "ODDM sensing and communication simulator")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Configuration file with `section.key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// SNR list `a,b,c` or range `start:step:stop` in dB.
    #[arg(long)]
    snr: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// oddm, otfs, ofdm, or a comma-separated list for BER comparisons.
    #[arg(long)]
    scheme: Option<String>,
    /// oamp or lmmse.
    #[arg(long)]
    detector: Option<String>,
    /// perfect or estimated.
    #[arg(long)]
    csi: Option<String>,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Bit error rate sweep.
    Ber(Common),
    /// Estimation NMSE sweep.
    Nmse(Common),
    /// Single sensing-stage estimate against the drawn channel.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Trial index selecting the channel draw.
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Quick internal consistency checks.
    Selftest,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parse { .. } => Failure::Usage(e.to_string()),
            Error::Io { .. } => Failure::Runtime(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn build_spec(c: &Common) -> Result<(ExperimentSpec, Vec<Scheme>), Failure> {
    let mut spec = ExperimentSpec::default();
    if let Some(path) = &c.config {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        spec.apply_text(&text)?;
    }
    if let Some(v) = &c.snr {
        spec.set("sim.snr_db", v)?;
    }
    if let Some(v) = c.trials {
        spec.trials = v;
    }
    if let Some(v) = c.seed {
        spec.seed = v;
    }
    if let Some(v) = &c.detector {
        spec.set("detector.kind", v)?;
    }
    if let Some(v) = &c.csi {
        spec.set("sim.csi", v)?;
    }
    let schemes = match &c.scheme {
        Some(list) => list
            .split(',')
            .map(|s| s.trim().parse::<Scheme>())
            .collect::<Result<Vec<_>, _>>()?,
        None => vec![spec.scheme],
    };
    if schemes.is_empty() {
        return Err(Failure::Usage("empty scheme list".into()));
    }
    spec.scheme = schemes[0];
    spec.validate()?;
    Ok((spec, schemes))
}

fn output(result: &SweepResult, out: &Option<PathBuf>) -> Result<(), Failure> {
    for note in &result.notes {
        eprintln!("note: {note}");
    }
    match out {
        Some(path) => emit_csv(result, path)?,
        None => print!("{}", result.to_csv_string()?),
    }
    Ok(())
}

fn selftest() -> Result<bool, Failure> {
    let mut ok = true;
    let mut report = |name: &str, pass: bool, detail: String| {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        ok &= pass;
    };

    let cfg = FrameConfig::new(32, 8, 15e3, 5e9, 8, 0.5, 8, ConstellationKind::Qam4)?.with_cyclic_prefix(4);
    let chan = gen_random_channel(&cfg, 3, 4, 2, 1)?;
    let eff = assemble_h(&chan, &cfg)?;
    let dec = eff.decomposition_error();
    report("decomposition", dec <= 1e-12, format!("max deviation {dec:e}"));

    let pulses = build_srrc(&cfg)?;
    let c = cfg.constellation();
    let bits = random_bits(&mut rng_from_seed(2), cfg.grid_len() * 2);
    let s = c.map(&bits)?;
    let tx = oddm_modulate(&devectorize(&s, cfg.m, cfg.n)?, &pulses, &cfg)?;
    let rx = oddm::channel::apply_physical_channel(&tx, &chan, 0.0, 0)?;
    let y = oddm_demodulate(&rx, &pulses, &cfg)?;
    let hs = eff.apply(&s)?;
    let num: f64 = y.as_slice().iter().zip(&hs).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = hs.iter().map(|v| v.norm_sqr()).sum();
    let rel = (num / den).sqrt();
    report("waveform-matrix", rel <= 2e-2, format!("relative error {rel:e}"));

    let snr = 7.0;
    let sigma2 = snr_to_noise_var(snr);
    let kernel = LeKernel::new(&oddm::sparse::CsrMatrix::identity(1024), &LeMode::Exact)?;
    let cst = Constellation::new(ConstellationKind::Qam4);
    let (mut errs, mut total) = (0usize, 0usize);
    for f in 0..50 {
        let bits = random_bits(&mut rng_from_seed(100 + f), 2048);
        let s = cst.map(&bits)?;
        let y: Vec<_> = s
            .iter()
            .zip(awgn(&mut rng_from_seed(200 + f), 1024, sigma2))
            .map(|(a, w)| a + w)
            .collect();
        let r = oamp_detect_with(&y, &kernel, sigma2, &OampConfig::default(), &cst)?;
        errs += r.hard_bits.iter().zip(&bits).filter(|(a, b)| a != b).count();
        total += bits.len();
    }
    let ber = errs as f64 / total as f64;
    let want = qam4_awgn_ber(snr);
    report(
        "awgn-ber",
        ber <= 2.0 * want && ber >= 0.5 * want,
        format!("{ber:e} against {want:e}"),
    );
    Ok(ok)
}

fn run(cli: Cli) -> Result<bool, Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    match cli.command {
        Command::Ber(c) => {
            let (spec, schemes) = build_spec(&c)?;
            let result = if schemes.len() > 1 {
                run_comparison(&spec, &schemes)?
            } else {
                run_ber_sweep(&spec)?
            };
            output(&result, &c.out)?;
        }
        Command::Nmse(c) => {
            let (spec, _) = build_spec(&c)?;
            output(&run_nmse_sweep(&spec)?, &c.out)?;
        }
        Command::Estimate { common, trial } => {
            let (spec, _) = build_spec(&common)?;
            let snr = spec.estimator.sensing_snr_db.unwrap_or(spec.snr_grid_db[0]);
            let rep = estimate_once(&spec, trial, snr)?;
            println!("# truth");
            print!("{}", rep.truth.to_record());
            println!("# estimate");
            print!("{}", rep.estimate.to_record());
            println!(
                "# snr_db {snr} iterations {} converged {} low_confidence {} nmse_db {:.3}",
                rep.estimate.iterations, rep.estimate.converged, rep.estimate.low_confidence, rep.nmse_db
            );
        }
        Command::Selftest => return selftest(),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
