use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dwasim::bank::{generate_element_bank, Distribution, ElementBank, MismatchSpec};
use dwasim::harness::plot::{LinePlot, Series};
use dwasim::harness::{list_presets, preset, run_scenario, run_sweep, simulate, Scenario};
use dwasim::io::{read_csv_column, write_atomic};
use dwasim::select::AddedKind;
use dwasim::spectral::{band_edge_hz, compute_sndr, db, estimate_psd, Window};
use dwasim::{Error, Result};

#[derive(Parser)]
#[command(
    name = "dwasim",
    version,
    about = "Multibit sigma-delta DAC simulator with DWA and SaDWA element selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenarios end to end and write one result bundle per scenario.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: Overrides,
        /// Run in single precision.
        #[arg(long)]
        f32: bool,
        #[command(flatten)]
        out: OutDir,
    },
    /// Sweep the input amplitude and write the SNDR curve.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: Overrides,
        /// Comma-separated amplitudes in dBFS; defaults to the scenario's list.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        amplitudes: Option<Vec<f64>>,
        /// Worker threads for sweep points.
        #[arg(long, short, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        out: OutDir,
    },
    /// Spectrum and optional SNDR of one column of a CSV file.
    Psd {
        csv: PathBuf,
        #[arg(long, default_value = "v")]
        column: String,
        #[arg(long, default_value_t = 12.5e6)]
        sample_rate_hz: f64,
        #[arg(long, default_value_t = 65536)]
        n_fft: usize,
        #[arg(long, default_value = "hann")]
        window: Window,
        /// Segment overlap as a fraction in [0, 1).
        #[arg(long, default_value_t = 0.0)]
        overlap: f64,
        /// Leading samples to drop.
        #[arg(long, default_value_t = 0)]
        skip: usize,
        /// Report SNDR for a tone at this frequency.
        #[arg(long)]
        signal_hz: Option<f64>,
        #[arg(long, default_value_t = 128.0)]
        osr: f64,
        #[command(flatten)]
        out: OutDir,
    },
    /// Element bank utilities.
    #[command(subcommand)]
    Bank(BankCommand),
    /// List the built-in scenarios.
    Presets {
        /// Print the named preset as a scenario file.
        #[arg(long)]
        show: Option<String>,
    },
}

#[derive(Subcommand)]
enum BankCommand {
    /// Draw a random bank and write it as a gain list.
    Gen {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value = "uniform")]
        distribution: Distribution,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean, sample standard deviation and worst error of a bank.
    Stats {
        /// Bank file, or a preset name such as `reference-8`.
        bank: String,
    },
}

#[derive(Args)]
struct Source {
    /// Scenario files.
    files: Vec<PathBuf>,
    /// Built-in scenario; repeatable.
    #[arg(long = "preset")]
    presets: Vec<String>,
}

#[derive(Args)]
struct Overrides {
    #[arg(long, allow_hyphen_values = true)]
    amplitude_dbfs: Option<f64>,
    /// DC offset in units of the quantizer step.
    #[arg(long, allow_hyphen_values = true)]
    dc_offset: Option<f64>,
    /// Added sequence for sadwa: constant_zero, constant_one, periodic_01, seeded_random.
    #[arg(long)]
    added: Option<AddedKind>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct OutDir {
    /// Output directory.
    #[arg(long, env = "DWASIM_OUT_DIR", default_value = "dwasim-out")]
    out: PathBuf,
}

impl Source {
    fn load(&self) -> Result<Vec<Scenario>> {
        if self.files.is_empty() && self.presets.is_empty() {
            return Err(Error::config("give a scenario file or --preset NAME"));
        }
        let mut out = Vec::new();
        for f in &self.files {
            out.push(Scenario::load(f)?);
        }
        for p in &self.presets {
            out.push(preset(p)?);
        }
        Ok(out)
    }
}

impl Overrides {
    fn apply(&self, mut s: Scenario) -> Scenario {
        if let Some(a) = self.amplitude_dbfs {
            s.input.amplitude_dbfs = a;
        }
        if let Some(d) = self.dc_offset {
            s.input.dc_offset = d;
        }
        if let Some(k) = self.added {
            s.strategy.added = k;
        }
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        s
    }
}

/// Loads, overrides and validates every scenario before any of them runs.
fn prepare(source: &Source, overrides: &Overrides) -> Result<Vec<Scenario>> {
    let scenarios: Vec<Scenario> = source
        .load()?
        .into_iter()
        .map(|s| overrides.apply(s))
        .collect();
    for s in &scenarios {
        s.validate()?;
    }
    Ok(scenarios)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            source,
            overrides,
            f32,
            out,
        } => {
            for s in prepare(&source, &overrides)? {
                let dir = out.out.join(&s.name);
                let (sndr, tones) = if f32 {
                    let sim = simulate::<f32>(&s)?;
                    sim.write_bundle(&dir)?;
                    (sim.sndr.sndr_db, sim.tones.count())
                } else {
                    let sim = run_scenario(&s)?;
                    sim.write_bundle(&dir)?;
                    (sim.sndr.sndr_db, sim.tones.count())
                };
                println!(
                    "{}: SNDR {sndr:.2} dB, {tones} tones -> {}",
                    s.name,
                    dir.display()
                );
            }
        }
        Command::Sweep {
            source,
            overrides,
            amplitudes,
            jobs,
            out,
        } => {
            if jobs == 0 {
                return Err(Error::config("--jobs must be at least 1"));
            }
            for s in prepare(&source, &overrides)? {
                let dir = out.out.join(&s.name);
                let result = run_sweep(&s, amplitudes.as_deref(), jobs)?;
                result.write_bundle(&dir)?;
                for f in &result.curve.failures {
                    eprintln!("{}: {} dBFS failed: {}", s.name, f.amplitude_dbfs, f.error);
                }
                match (result.curve.dynamic_range_db, result.curve.peak()) {
                    (Some(dr), Some((a, p))) => println!(
                        "{}: DR {dr:.2} dB, peak {p:.2} dB at {a} dBFS -> {}",
                        s.name,
                        dir.display()
                    ),
                    _ => println!("{}: no 0 dB crossing -> {}", s.name, dir.display()),
                }
            }
        }
        Command::Psd {
            csv,
            column,
            sample_rate_hz,
            n_fft,
            window,
            overlap,
            skip,
            signal_hz,
            osr,
            out,
        } => {
            let samples = read_csv_column(&csv, &column)?;
            if skip >= samples.len() {
                return Err(Error::config(format!(
                    "--skip {skip} drops all {} samples",
                    samples.len()
                )));
            }
            let psd = estimate_psd(&samples[skip..], sample_rate_hz, window, n_fft, overlap)?;
            write_atomic(&out.out.join("psd.csv"), &psd.to_csv()?)?;
            let pts: Vec<(f64, f64)> = psd
                .bin_power
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, p)| (psd.freq_hz(k), db(*p)))
                .collect();
            let svg = LinePlot {
                title: "PSD",
                x_label: "frequency (Hz)",
                y_label: "power per bin (dB)",
                log_x: true,
                series: vec![Series {
                    label: &column,
                    points: &pts,
                }],
            }
            .to_svg();
            write_atomic(&out.out.join("psd.svg"), svg.as_bytes())?;
            println!(
                "{} averages of {n_fft} points -> {}",
                psd.n_averages,
                out.out.display()
            );
            if let Some(f) = signal_hz {
                let r = compute_sndr(&psd, f, band_edge_hz(sample_rate_hz, osr))?;
                println!("SNDR {:.2} dB (signal bin {})", r.sndr_db, r.signal_bin);
            }
        }
        Command::Bank(BankCommand::Gen {
            count,
            sigma,
            distribution,
            seed,
            out,
        }) => {
            let spec = MismatchSpec {
                sigma,
                distribution,
                seed,
            };
            let bank = generate_element_bank::<f64>(count, &spec)?;
            match out {
                Some(path) => bank.save(&path)?,
                None => print!("{}", bank.to_text()),
            }
        }
        Command::Bank(BankCommand::Stats { bank }) => {
            let b = load_bank(&bank)?;
            let st = b.statistics();
            println!("count {}", b.count());
            println!("mean {:.6}", st.mean);
            println!(
                "sample_std {:.6} ({:.4} %)",
                st.sample_std,
                100.0 * st.sample_std
            );
            println!("max_abs_error {:.6}", st.max_abs_error);
        }
        Command::Presets { show } => match show {
            Some(name) => print!("{}", preset(&name)?.to_toml()?),
            None => {
                for (name, desc) in list_presets() {
                    println!("{name:<12} {desc}");
                }
            }
        },
    }
    Ok(())
}

fn load_bank(arg: &str) -> Result<ElementBank<f64>> {
    let path = Path::new(arg);
    if path.exists() {
        ElementBank::load(path)
    } else {
        ElementBank::preset(arg)
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
