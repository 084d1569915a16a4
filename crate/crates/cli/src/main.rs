use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use tncode::compose::NetworkFile;
use tncode::decoder::LogicalAssignment;
use tncode::experiments::{
    point_seed, write_results, write_trials, EstimateResult, Experiment, Method,
};
use tncode::holographic::{self, DEFAULT_MAX_RADIUS_FLAT};
use tncode::threshold::{fit_threshold, FitOptions, FitRecord};
use tncode::{Decoder, NoiseModel, StabilizerCode, Syndrome, TensorNetworkCode};

const EXIT_USAGE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_RESOURCE: u8 = 4;
const EXIT_NO_CONVERGENCE: u8 = 5;

#[derive(Parser)]
#[command(
    name = "tncode",
    version,
    about = "Tensor-network stabilizer codes and exact ML decoding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the holographic Steane network and write it as JSON.
    Build {
        #[arg(long)]
        radius: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_RADIUS_FLAT)]
        max_radius_flat: usize,
    },
    /// Check a code file or network file.
    Validate {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_RADIUS_FLAT)]
        max_radius_flat: usize,
    },
    /// Decode one syndrome.
    Decode {
        #[command(flatten)]
        source: Source,
        /// Syndrome bits, one character per stabilizer.
        #[arg(long)]
        syndrome: String,
        #[arg(long, default_value = "central")]
        qubits: String,
        #[arg(long)]
        p: f64,
        /// Enumerate all 4^K words instead of per-qubit marginals.
        #[arg(long)]
        joint: bool,
    },
    /// Estimate logical failure rates.
    Sample(Sweep),
    /// Estimate the fraction of fully peaked trials and its lower bound.
    Qfrac(Sweep),
    /// Estimate the failure rate of the whole target word.
    Word(Sweep),
    /// Fit the finite-size scaling collapse to a results CSV.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        reference_radius: Option<usize>,
        #[arg(long, default_value_t = 2)]
        degree: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct Source {
    #[arg(long, conflicts_with = "net", required_unless_present = "net")]
    radius: Option<usize>,
    #[arg(long)]
    net: Option<PathBuf>,
    /// Largest radius for which the flattened code is built.
    #[arg(long, default_value_t = DEFAULT_MAX_RADIUS_FLAT)]
    max_radius_flat: usize,
}

#[derive(Args, Clone)]
struct Sweep {
    #[command(flatten)]
    source: Source,
    /// Comma-separated physical error rates.
    #[arg(long, value_delimiter = ',', required = true)]
    p: Vec<f64>,
    #[arg(long, visible_alias = "samples-per-point", default_value_t = 1000)]
    samples: usize,
    #[arg(long)]
    seed: u64,
    /// 1-based list, "central" or "radius2".
    #[arg(long)]
    qubits: Option<String>,
    #[arg(long, default_value = "counting")]
    method: Method,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write every trial to this CSV.
    #[arg(long)]
    trials: Option<PathBuf>,
}

#[derive(Debug)]
struct Exit(u8, String);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Exit {}

fn fail(code: u8, msg: impl Into<String>) -> anyhow::Error {
    Exit(code, msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<Exit>() {
        return e.0;
    }
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<tncode::Error>() {
            return match e {
                tncode::Error::ResourceLimit(_) | tncode::Error::SizeGuard { .. } => EXIT_RESOURCE,
                tncode::Error::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
                tncode::Error::InvalidCode(_)
                | tncode::Error::InvalidNetwork(_)
                | tncode::Error::NotDistinguishable
                | tncode::Error::BadPairing(_) => EXIT_VALIDATION,
                tncode::Error::Io(_) | tncode::Error::Json(_) | tncode::Error::Csv(_) => 1,
                _ => EXIT_USAGE,
            };
        }
    }
    1
}

fn load_network(source: &Source) -> Result<TensorNetworkCode> {
    match (&source.radius, &source.net) {
        (Some(r), None) => {
            if *r == 0 {
                return Err(fail(EXIT_USAGE, "radius must be at least 1"));
            }
            if *r <= source.max_radius_flat {
                Ok(holographic::build_code_with_limit(
                    *r,
                    source.max_radius_flat,
                )?)
            } else {
                Ok(holographic::build_network(*r)?)
            }
        }
        (None, Some(path)) => {
            let graph = TensorNetworkCode::load(path, false)
                .with_context(|| format!("reading {}", path.display()))?;
            if graph.radius() <= source.max_radius_flat {
                Ok(TensorNetworkCode::load(path, true)?)
            } else {
                Ok(graph)
            }
        }
        _ => Err(fail(EXIT_USAGE, "give exactly one of --radius and --net")),
    }
}

/// 0-based targets from a 1-based list or a named set.
fn parse_qubits(text: &str, net: &TensorNetworkCode) -> Result<Vec<usize>> {
    let targets = match text {
        "central" => vec![0],
        "radius2" => net.qubits_within_depth(1),
        list => list
            .split(',')
            .map(|t| {
                let v: usize = t
                    .trim()
                    .parse()
                    .map_err(|_| fail(EXIT_USAGE, format!("bad qubit {t:?}")))?;
                if v == 0 || v > net.k() {
                    return Err(fail(
                        EXIT_USAGE,
                        format!("qubit {v} outside 1..={}", net.k()),
                    ));
                }
                Ok(v - 1)
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(targets)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn run_build(radius: usize, out: &Path, max_radius_flat: usize) -> Result<()> {
    if radius == 0 {
        return Err(fail(EXIT_USAGE, "radius must be at least 1"));
    }
    let net = if radius <= max_radius_flat {
        holographic::build_code_with_limit(radius, max_radius_flat)?
    } else {
        holographic::build_network(radius)?
    };
    let mut file = net.to_file();
    let c = holographic::census(radius)?;
    file.census = Some(c.clone());
    let mut w =
        BufWriter::new(File::create(out).with_context(|| format!("creating {}", out.display()))?);
    serde_json::to_writer_pretty(&mut w, &file)?;
    writeln!(w)?;
    w.flush()?;
    println!(
        "radius {radius}: n={} k={} tiles per layer {:?}",
        c.n, c.k, c.tiles_per_layer
    );
    Ok(())
}

fn run_validate(path: &Path, max_radius_flat: usize) -> Result<()> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| fail(EXIT_VALIDATION, format!("not JSON: {e}")))?;
    let code = if value.get("stabilizers").is_some() {
        StabilizerCode::from_json(&text).map_err(|e| fail(EXIT_VALIDATION, e.to_string()))?
    } else if value.get("nodes").is_some() {
        let file: NetworkFile =
            serde_json::from_value(value).map_err(|e| fail(EXIT_VALIDATION, e.to_string()))?;
        let graph = TensorNetworkCode::from_file(&file, false)
            .map_err(|e| fail(EXIT_VALIDATION, e.to_string()))?;
        if graph.radius() > max_radius_flat {
            println!(
                "network: {} nodes, n={} k={} (flattened code not checked)",
                graph.nodes().len(),
                graph.n(),
                graph.k()
            );
            return Ok(());
        }
        let net = TensorNetworkCode::from_file(&file, true)
            .map_err(|e| fail(EXIT_VALIDATION, e.to_string()))?;
        if let Some(c) = &file.census {
            if (c.n, c.k) != (net.n(), net.k()) {
                return Err(fail(
                    EXIT_VALIDATION,
                    format!("census n={} k={} disagrees with the network", c.n, c.k),
                ));
            }
        }
        net.flat()?.clone()
    } else {
        return Err(fail(
            EXIT_VALIDATION,
            "neither a code file nor a network file",
        ));
    };
    let violations = code.validate();
    println!("n={} k={}", code.n, code.k);
    if violations.is_empty() {
        println!("valid");
        Ok(())
    } else {
        for v in &violations {
            println!("violation: {v}");
        }
        Err(fail(
            EXIT_VALIDATION,
            format!("{} violations", violations.len()),
        ))
    }
}

fn run_decode(source: &Source, syndrome: &str, qubits: &str, p: f64, joint: bool) -> Result<()> {
    let net = load_network(source)?;
    if !net.tracks_generators() {
        return Err(fail(
            EXIT_RESOURCE,
            "decoding a syndrome needs the flattened code; raise --max-radius-flat",
        ));
    }
    let code = net.flat()?;
    let s = Syndrome::parse(syndrome).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
    if s.len() != code.num_stabilizers() {
        return Err(fail(
            EXIT_USAGE,
            format!(
                "syndrome needs {} bits, got {}",
                code.num_stabilizers(),
                s.len()
            ),
        ));
    }
    let targets = parse_qubits(qubits, &net)?;
    let noise = NoiseModel::depolarizing(p, net.n())?;
    let dec = Decoder::new(&net)?;
    let mut out = if joint {
        dec.decode_joint(&targets, &s, &noise)?
    } else {
        dec.decode_parallel(&targets, &s, &noise)?
    };
    if out.word_probability.is_none() {
        let word = LogicalAssignment::word(&targets, &out.word);
        out.word_probability = Some(dec.word_probability(&word, &s, &noise)?);
    }
    let mut w = io::stdout().lock();
    writeln!(
        w,
        "qubit  prob(I)  prob(X)  prob(Y)  prob(Z)  argmax  peaked"
    )?;
    for (m, peaked) in out.marginals.iter().zip(&out.peaked) {
        writeln!(
            w,
            "{:>5}  {:.6} {:.6} {:.6} {:.6}  {}{}  {}",
            m.qubit + 1,
            m.probs[0],
            m.probs[1],
            m.probs[2],
            m.probs[3],
            m.argmax.symbol(),
            if m.tie { " (tie)" } else { "" },
            peaked
        )?;
    }
    let word: String = out.word.iter().map(|p| p.symbol()).collect();
    writeln!(w, "peak threshold {:.6}", out.peak_threshold)?;
    writeln!(
        w,
        "word {word} probability {:.10}",
        out.word_probability.unwrap_or(f64::NAN)
    )?;
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum SweepKind {
    Sample,
    Qfrac,
    Word,
}

fn run_sweep(sweep: &Sweep, kind: SweepKind) -> Result<()> {
    if sweep.samples == 0 {
        return Err(fail(EXIT_USAGE, "--samples must be positive"));
    }
    if let Some(bad) = sweep.p.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(fail(EXIT_USAGE, format!("p = {bad} outside [0, 1]")));
    }
    let net = load_network(&sweep.source)?;
    let default_qubits = if kind == SweepKind::Sample {
        "central"
    } else {
        "radius2"
    };
    let targets = parse_qubits(sweep.qubits.as_deref().unwrap_or(default_qubits), &net)?;
    let ex = Experiment::new(&net)?;
    let radius = net.radius();
    let mut rows: Vec<EstimateResult> = Vec::new();
    let mut all_trials = Vec::new();
    for &p in &sweep.p {
        let seed = point_seed(sweep.seed, radius, p);
        let method = if kind == SweepKind::Qfrac {
            Method::Counting
        } else {
            sweep.method
        };
        let recs = ex.run(&targets, p, sweep.samples, seed, method == Method::Coset)?;
        // the row carries the master seed; each point derives its own from it
        let row = ex.summarize(
            &targets,
            p,
            sweep.seed,
            method,
            &recs,
            kind == SweepKind::Qfrac,
        )?;
        rows.push(row);
        if sweep.trials.is_some() {
            all_trials.extend(recs);
        }
    }
    let mut w = output(sweep.out.as_deref())?;
    write_results(&mut w, &rows)?;
    w.flush()?;
    if let Some(path) = &sweep.trials {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_trials(BufWriter::new(f), &all_trials)?;
    }
    Ok(())
}

fn run_fit(
    input: &Path,
    reference: Option<usize>,
    degree: usize,
    out: Option<&Path>,
) -> Result<()> {
    let f = File::open(input).with_context(|| format!("reading {}", input.display()))?;
    let rows = tncode::experiments::read_results(f)?;
    let recs: Vec<FitRecord> = rows.iter().map(FitRecord::from_result).collect();
    let opts = FitOptions {
        reference,
        degree,
        ..Default::default()
    };
    let fit = fit_threshold(&recs, &opts)?;
    let report = serde_json::json!({
        "p_th": fit.p_th,
        "nu": fit.nu,
        "f_coeffs": fit.f_coeffs,
        "residual": fit.residual,
        "reference_radius": fit.reference,
        "iterations": fit.iterations,
        "rescaled": fit.rescaled(),
    });
    let mut w = output(out)?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w)?;
    w.flush()?;
    if out.is_some() {
        println!(
            "p_th={:.6} nu={:.4} residual={:.6}",
            fit.p_th, fit.nu, fit.residual
        );
    }
    Ok(())
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("TNCODE_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| fail(EXIT_USAGE, format!("TNCODE_THREADS={v:?} is not a count")))?;
        if n == 0 {
            return Err(fail(EXIT_USAGE, "TNCODE_THREADS must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| anyhow!(e))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match &cli.command {
        Command::Build {
            radius,
            out,
            max_radius_flat,
        } => run_build(*radius, out, *max_radius_flat),
        Command::Validate {
            file,
            max_radius_flat,
        } => run_validate(file, *max_radius_flat),
        Command::Decode {
            source,
            syndrome,
            qubits,
            p,
            joint,
        } => run_decode(source, syndrome, qubits, *p, *joint),
        Command::Sample(s) => run_sweep(s, SweepKind::Sample),
        Command::Qfrac(s) => run_sweep(s, SweepKind::Qfrac),
        Command::Word(s) => run_sweep(s, SweepKind::Word),
        Command::Fit {
            input,
            reference_radius,
            degree,
            out,
        } => run_fit(input, *reference_radius, *degree, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
