use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Subcommand};
use fut_core::algorithms::{self, AlsConfig, LraConfig};
use fut_core::executor::{EvalConfig, EvalContext};

use crate::output::{write_atomic, Failure};

#[derive(Subcommand, Debug)]
pub enum Algo {
    /// Logistic regression by batch gradient descent.
    Lra {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = LraConfig::desk().rows)]
        rows: usize,
        #[arg(long, default_value_t = LraConfig::desk().features)]
        features: usize,
        #[arg(long, default_value_t = LraConfig::desk().alpha)]
        alpha: f64,
        #[arg(long, default_value_t = LraConfig::desk().iterations)]
        iterations: i64,
    },
    /// Implicit-feedback alternating least squares.
    Als {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = AlsConfig::desk().users)]
        users: usize,
        #[arg(long, default_value_t = AlsConfig::desk().items)]
        items: usize,
        #[arg(long, default_value_t = AlsConfig::desk().factors)]
        factors: usize,
        #[arg(long, default_value_t = AlsConfig::desk().lambda)]
        lambda: f64,
        #[arg(long, default_value_t = AlsConfig::desk().alpha_c)]
        alpha_c: f64,
        #[arg(long, default_value_t = AlsConfig::desk().sweeps)]
        sweeps: i64,
        #[arg(long, default_value_t = AlsConfig::desk().density)]
        density: f64,
    },
}

#[derive(Args, Debug)]
pub struct Common {
    /// Comma-separated worker counts.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8",
          value_parser = clap::value_parser!(u16).range(1..))]
    threads: Vec<u16>,
    /// Timed runs per worker count.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    repeat: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write every timed run as CSV.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
}

struct Sample {
    threads: usize,
    run: u32,
    elapsed_ms: f64,
}

fn time_runs(
    common: &Common,
    mut once: impl FnMut(&EvalContext) -> Result<(), String>,
) -> Result<Vec<Sample>, Failure> {
    let mut samples = Vec::new();
    for &w in &common.threads {
        let ctx = EvalContext::new(EvalConfig::dataflow(w.into()));
        for run in 1..=common.repeat {
            let t0 = Instant::now();
            once(&ctx).map_err(Failure::User)?;
            samples.push(Sample {
                threads: w.into(),
                run,
                elapsed_ms: t0.elapsed().as_secs_f64() * 1e3,
            });
        }
    }
    Ok(samples)
}

fn mean_ms(samples: &[Sample], threads: usize) -> f64 {
    let picked: Vec<f64> = samples.iter().filter(|s| s.threads == threads).map(|s| s.elapsed_ms).collect();
    picked.iter().sum::<f64>() / picked.len() as f64
}

/// Per-thread-count mean and speedup against the one-worker mean.
fn summary(algo: &str, common: &Common, samples: &[Sample]) -> String {
    let base = common.threads.contains(&1).then(|| mean_ms(samples, 1));
    let mut out = format!("{:<5} {:>7} {:>6} {:>12} {:>8}\n", "algo", "threads", "runs", "mean_ms", "speedup");
    let mut seen = Vec::new();
    for &w in &common.threads {
        if seen.contains(&w) {
            continue;
        }
        seen.push(w);
        let mean = mean_ms(samples, w.into());
        let speedup = base.map_or("n/a".to_string(), |b| format!("{:.2}", b / mean));
        let runs = samples.iter().filter(|s| s.threads == usize::from(w)).count();
        let _ = writeln!(out, "{algo:<5} {w:>7} {runs:>6} {mean:>12.3} {speedup:>8}");
    }
    out
}

fn csv(algo: &str, samples: &[Sample]) -> String {
    let mut out = String::from("algo,threads,run,elapsed_ms\n");
    for s in samples {
        let _ = writeln!(out, "{algo},{},{},{:.6}", s.threads, s.run, s.elapsed_ms);
    }
    out
}

pub fn bench(algo: &Algo) -> Result<(), Failure> {
    let invalid = |m: String| Failure::User(format!("error[InvalidDimensions]: {m}"));
    let (name, common, samples) = match *algo {
        Algo::Lra {
            ref common,
            rows,
            features,
            alpha,
            iterations,
        } => {
            let cfg = LraConfig {
                rows,
                features,
                alpha,
                iterations,
                seed: common.seed,
            };
            cfg.validate().map_err(invalid)?;
            let (x, y) = algorithms::gen_lra_data(&cfg);
            let samples = time_runs(common, |ctx| {
                algorithms::run_lra(ctx, &x, &y, alpha, iterations)
                    .map(drop)
                    .map_err(|e| format!("error[{}]: {e}", e.kind_name()))
            })?;
            ("lra", common, samples)
        }
        Algo::Als {
            ref common,
            users,
            items,
            factors,
            lambda,
            alpha_c,
            sweeps,
            density,
        } => {
            let cfg = AlsConfig {
                users,
                items,
                factors,
                lambda,
                alpha_c,
                sweeps,
                seed: common.seed,
                density,
            };
            cfg.validate().map_err(invalid)?;
            let (r, p) = algorithms::gen_als_data(&cfg);
            let samples = time_runs(common, |ctx| {
                algorithms::run_als(ctx, &r, &p, &cfg)
                    .map(drop)
                    .map_err(|e| format!("error[{}]: {e}", e.kind_name()))
            })?;
            ("als", common, samples)
        }
    };
    if let Some(path) = &common.csv {
        write_atomic(path, &csv(name, &samples))?;
    }
    print!("{}", summary(name, common, &samples));
    Ok(())
}
