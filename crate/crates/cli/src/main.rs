//! Command-line front end for the trimon simulator: load a device
//! calibration, run algorithm or calibration experiments, and emit
//! byte-stable JSON/CSV result files.

mod emit;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use emit::{fmt_float, Csv, Json};
use trimon_core::algorithms::{run_algorithm, Algorithm, AlgorithmResult, DjOracle, QftInput};
use trimon_core::channels::{calibrate_readout, voltage_histogram, NoiseModel, ReadoutModel};
use trimon_core::device::{fit_params, FitObservable, FitReport, QubitLabel, Transition};
use trimon_core::experiments::{
    acquire_tomography, mle_reconstruct, prepare_reference, run_rb, simulated_state_fidelity,
    ErrorInjection, InterleavedGate, RbConfig, RbResult, ReferenceState,
};
use trimon_core::sampling;
use trimon_core::state::BasisIndex;
use trimon_core::{DeviceParams, Error};

#[derive(Parser)]
#[command(
    name = "trimon",
    version,
    about = "Simulator of a three-qubit superconducting processor with native controlled-controlled gates"
)]
struct Cli {
    /// Device parameter file (TOML). Omit for the built-in calibration.
    #[arg(long, global = true)]
    device: Option<PathBuf>,
    /// Output directory for result files (TRIMON_OUT_DIR overrides the default).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed; fully determines all stochastic output.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a quantum algorithm or a whole oracle suite.
    Algo {
        #[command(subcommand)]
        which: AlgoKind,
    },
    /// Standard or interleaved randomized benchmarking on one transition.
    Rb(RbArgs),
    /// State tomography with maximum-likelihood reconstruction.
    Tomo(TomoArgs),
    /// Device-model operations.
    Device {
        #[command(subcommand)]
        which: DeviceCommand,
    },
    /// Readout-model operations.
    Readout {
        #[command(subcommand)]
        which: ReadoutCommand,
    },
}

#[derive(Subcommand)]
enum AlgoKind {
    /// Deutsch-Jozsa: constant0, constant1, the ten balanced functions, or "all".
    Dj(AlgoArgs),
    /// Bernstein-Vazirani: a 3-bit string such as 101, or "all".
    Bv(AlgoArgs),
    /// Single-iteration Grover search: a marked 3-bit string, or "all".
    Grover(AlgoArgs),
    /// Fourier protocols: comb1/comb2/comb4/comb8, phase:<rad>, "combs" or "sweep".
    Qft(AlgoArgs),
}

#[derive(Args)]
struct AlgoArgs {
    /// Oracle or input selector; "all" (or "sweep" for qft) runs the suite.
    #[arg(long, default_value = "all")]
    oracle: String,
    /// Disable decoherence and the readout model.
    #[arg(long)]
    ideal: bool,
    /// Repetitions per run; 0 computes exact probabilities.
    #[arg(long, default_value_t = 20_000)]
    shots: u64,
}

#[derive(Args)]
struct RbArgs {
    /// Transition label, e.g. CA1B1.
    #[arg(long)]
    transition: String,
    /// Interleave a target gate: "toffoli" or "identity".
    #[arg(long)]
    interleave: Option<String>,
    /// Disable decoherence and the readout model.
    #[arg(long)]
    ideal: bool,
    /// Shots per sequence-fidelity estimate; 0 reads populations exactly.
    #[arg(long, default_value_t = 30_000)]
    shots: u64,
    /// Random sequences per length.
    #[arg(long, default_value_t = 10)]
    sequences: u32,
    /// Largest sequence length; lengths run 1..=N.
    #[arg(long, default_value_t = 40)]
    max_length: u32,
    /// Injected per-Clifford depolarizing strength.
    #[arg(long, default_value_t = 0.0)]
    inject_depol: f64,
    /// Injected depolarizing strength on the interleaved gate.
    #[arg(long, default_value_t = 0.0)]
    inject_gate_depol: f64,
}

#[derive(Args)]
struct TomoArgs {
    /// Reference state: bell, ghz, w or eqsup.
    #[arg(long)]
    state: String,
    /// Disable decoherence and the readout model.
    #[arg(long)]
    ideal: bool,
    /// Shots per tomography setting; 0 is the exact limit.
    #[arg(long, default_value_t = 30_000)]
    shots: u64,
}

#[derive(Subcommand)]
enum DeviceCommand {
    /// Fit {f00, couplings} (and anharmonicities) to measured lines.
    Fit {
        /// CSV with rows "label,value"; labels are transition names like
        /// AB0C0 (GHz) or anharmonicity labels like anharm_A (MHz).
        #[arg(long)]
        input: PathBuf,
    },
    /// Print the active device calibration as TOML.
    Show,
}

#[derive(Subcommand)]
enum ReadoutCommand {
    /// Fit (sigma, readout_decay) to target classification fidelities.
    Calibrate {
        #[arg(long, default_value_t = 0.951)]
        f000: f64,
        #[arg(long, default_value_t = 0.852)]
        f111: f64,
        /// Shots per prepared state for the exported histogram.
        #[arg(long, default_value_t = 30_000)]
        histogram_shots: u64,
        /// Histogram bins.
        #[arg(long, default_value_t = 101)]
        bins: usize,
    },
}

struct CliError {
    code: u8,
    message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BasisIndexOutOfRange(_)
            | Error::InvalidDevice(_)
            | Error::MissingMeasuredFrequency(_)
            | Error::UnderDetermined { .. }
            | Error::ControlEqualsTarget
            | Error::NonPositiveTphi(_)
            | Error::InvalidInput(_) => 2,
            _ => 3,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError {
            code: 3,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

/// Execution environment shared by all subcommands.
struct Env {
    device: DeviceParams,
    out_dir: PathBuf,
    seed: u64,
}

impl Env {
    fn noise(&self, ideal: bool) -> NoiseModel {
        if ideal {
            NoiseModel::disabled()
        } else {
            NoiseModel::from_device(&self.device)
        }
    }

    fn readout(&self, ideal: bool) -> Result<Option<ReadoutModel>, CliError> {
        if ideal {
            Ok(None)
        } else {
            Ok(Some(calibrate_readout((0.951, 0.852), &self.device)?))
        }
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join(name);
        std::fs::write(&path, contents)?;
        println!("wrote {}", path.display());
        Ok(())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let device = match &cli.device {
        Some(path) => {
            DeviceParams::from_toml_str(&std::fs::read_to_string(path).map_err(|e| CliError {
                code: 2,
                message: format!("{}: {e}", path.display()),
            })?)?
        }
        None => DeviceParams::reference(),
    };
    let out_dir = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("TRIMON_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));
    let env = Env {
        device,
        out_dir,
        seed: cli.seed,
    };

    match cli.command {
        Command::Algo { which } => match which {
            AlgoKind::Dj(args) => run_algo_suite(&env, "dj", &args, dj_selection(&args.oracle)?),
            AlgoKind::Bv(args) => run_algo_suite(
                &env,
                "bv",
                &args,
                bits_selection(&args.oracle, Algorithm::Bv)?,
            ),
            AlgoKind::Grover(args) => run_algo_suite(
                &env,
                "grover",
                &args,
                bits_selection(&args.oracle, Algorithm::Grover)?,
            ),
            AlgoKind::Qft(args) => run_algo_suite(&env, "qft", &args, qft_selection(&args.oracle)?),
        },
        Command::Rb(args) => run_rb_command(&env, &args),
        Command::Tomo(args) => run_tomo_command(&env, &args),
        Command::Device { which } => match which {
            DeviceCommand::Fit { input } => run_device_fit(&env, &input),
            DeviceCommand::Show => {
                println!("{}", env.device.to_toml_string());
                Ok(())
            }
        },
        Command::Readout { which } => match which {
            ReadoutCommand::Calibrate {
                f000,
                f111,
                histogram_shots,
                bins,
            } => run_readout_calibrate(&env, (f000, f111), histogram_shots, bins),
        },
    }
}

fn dj_selection(oracle: &str) -> Result<Vec<Algorithm>, CliError> {
    if oracle.eq_ignore_ascii_case("all") {
        Ok(DjOracle::all().into_iter().map(Algorithm::Dj).collect())
    } else {
        Ok(vec![Algorithm::Dj(DjOracle::parse(oracle)?)])
    }
}

fn bits_selection(
    oracle: &str,
    wrap: fn(BasisIndex) -> Algorithm,
) -> Result<Vec<Algorithm>, CliError> {
    if oracle.eq_ignore_ascii_case("all") {
        return Ok(BasisIndex::all().map(wrap).collect());
    }
    let bits: Vec<bool> = oracle
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(CliError {
                code: 2,
                message: format!("oracle must be a 3-bit string or \"all\", got {oracle:?}"),
            }),
        })
        .collect::<Result<_, _>>()?;
    if bits.len() != 3 {
        return Err(CliError {
            code: 2,
            message: format!("oracle must have exactly 3 bits, got {oracle:?}"),
        });
    }
    Ok(vec![wrap(BasisIndex::from_bits(bits[0], bits[1], bits[2]))])
}

fn qft_selection(input: &str) -> Result<Vec<Algorithm>, CliError> {
    if input.eq_ignore_ascii_case("sweep") {
        // the phase-estimation sweep: 16 phases from 0 in steps of 2 pi/16
        return Ok((0..16)
            .map(|k| {
                Algorithm::Qft(QftInput::Phase(
                    2.0 * std::f64::consts::PI * k as f64 / 16.0,
                ))
            })
            .collect());
    }
    if input.eq_ignore_ascii_case("combs") {
        return Ok([8u8, 4, 2, 1]
            .into_iter()
            .map(|p| Algorithm::Qft(QftInput::Comb(p)))
            .collect());
    }
    if input.eq_ignore_ascii_case("all") {
        let mut out = qft_selection("combs")?;
        out.extend(qft_selection("sweep")?);
        return Ok(out);
    }
    Ok(vec![Algorithm::Qft(QftInput::parse(input)?)])
}

fn run_algo_suite(
    env: &Env,
    kind: &str,
    args: &AlgoArgs,
    algos: Vec<Algorithm>,
) -> Result<(), CliError> {
    use rand::RngCore;
    let noise = env.noise(args.ideal);
    let readout = env.readout(args.ideal)?;
    let mut seeder = sampling::stream_from_seed(env.seed);
    let mut results = Vec::with_capacity(algos.len());
    for algo in algos {
        let run_seed = seeder.next_u64();
        let result = run_algorithm(
            algo,
            &env.device,
            &noise,
            readout.as_ref(),
            args.shots,
            run_seed,
        )?;
        println!(
            "{} {}: SP = {:.6}{}",
            result.algorithm,
            result.oracle,
            result.success_probability,
            result
                .sso
                .map(|s| format!(", SSO = {s:.6}"))
                .unwrap_or_default()
        );
        results.push(result);
    }

    if results.len() == 1 {
        let name = format!("algo_{kind}_{}.json", sanitize(&results[0].oracle));
        env.write(&name, &algorithm_json(&results[0]).to_string_pretty())?;
    } else {
        let array = Json::Array(results.iter().map(algorithm_json).collect());
        env.write(
            &format!("algo_{kind}_suite.json"),
            &array.to_string_pretty(),
        )?;
        let mut csv =
            Csv::new("oracle,success_probability,sso,classical_bound,shots,discarded_fraction");
        for r in &results {
            csv.row(vec![
                r.oracle.clone(),
                fmt_float(r.success_probability),
                r.sso.map(fmt_float).unwrap_or_default(),
                r.classical_bound.map(fmt_float).unwrap_or_default(),
                r.shots.to_string(),
                fmt_float(r.discarded_fraction),
            ]);
        }
        env.write(&format!("algo_{kind}_suite.csv"), &csv.finish())?;
    }
    Ok(())
}

fn algorithm_json(r: &AlgorithmResult) -> Json {
    Json::object(vec![
        ("algorithm", Json::Str(r.algorithm.clone())),
        ("oracle", Json::Str(r.oracle.clone())),
        ("shots", Json::Int(r.shots as i64)),
        ("seed", Json::Int(r.seed as i64)),
        ("distribution", Json::floats(r.distribution)),
        ("success_probability", Json::Float(r.success_probability)),
        ("sso", r.sso.map(Json::Float).unwrap_or(Json::Null)),
        (
            "classical_bound",
            r.classical_bound.map(Json::Float).unwrap_or(Json::Null),
        ),
        ("discarded_fraction", Json::Float(r.discarded_fraction)),
    ])
}

fn run_rb_command(env: &Env, args: &RbArgs) -> Result<(), CliError> {
    let transition = Transition::parse(&args.transition)?;
    let mut config = RbConfig::new(transition);
    config.lengths = (1..=args.max_length).collect();
    config.sequences_per_length = args.sequences;
    config.shots = args.shots;
    config.injection = ErrorInjection {
        per_clifford: args.inject_depol,
        per_interleaved: args.inject_gate_depol,
    };
    config.interleaved = match args.interleave.as_deref() {
        None => None,
        Some("toffoli") => Some(InterleavedGate::toffoli()),
        Some("identity") => Some(InterleavedGate::identity()),
        Some(other) => {
            return Err(CliError {
                code: 2,
                message: format!("unknown interleaved gate {other:?} (toffoli or identity)"),
            })
        }
    };
    let noise = env.noise(args.ideal);
    let readout = env.readout(args.ideal)?;
    let mut rng = sampling::stream_from_seed(env.seed);
    let result = run_rb(&config, &env.device, &noise, readout.as_ref(), &mut rng)?;
    println!(
        "rb {}: p = {:.6}, F_avg = {:.6}{}",
        transition,
        result.fit.p,
        result.f_avg,
        result
            .interleaved
            .as_ref()
            .map(|i| format!(", F_gate = {:.6}", i.f_gate))
            .unwrap_or_default()
    );

    env.write(
        &format!("rb_{}.json", transition.label()),
        &rb_json(env, args, &result).to_string_pretty(),
    )?;
    let mut csv = Csv::new("length,mean,stderr");
    for p in &result.points {
        csv.row(vec![
            p.length.to_string(),
            fmt_float(p.mean),
            fmt_float(p.stderr),
        ]);
    }
    env.write(&format!("rb_{}.csv", transition.label()), &csv.finish())?;
    if let Some(inter) = &result.interleaved {
        let mut csv = Csv::new("length,mean,stderr");
        for p in &inter.points {
            csv.row(vec![
                p.length.to_string(),
                fmt_float(p.mean),
                fmt_float(p.stderr),
            ]);
        }
        env.write(
            &format!("rb_{}_interleaved.csv", transition.label()),
            &csv.finish(),
        )?;
    }
    Ok(())
}

fn rb_json(env: &Env, args: &RbArgs, result: &RbResult) -> Json {
    let points = |pts: &[trimon_core::experiments::RbPoint]| {
        Json::Array(
            pts.iter()
                .map(|p| {
                    Json::object(vec![
                        ("length", Json::Int(p.length as i64)),
                        ("mean", Json::Float(p.mean)),
                        ("stderr", Json::Float(p.stderr)),
                    ])
                })
                .collect(),
        )
    };
    let fit = |f: &trimon_core::experiments::DecayFit| {
        Json::object(vec![
            ("A", Json::Float(f.a)),
            ("p", Json::Float(f.p)),
            ("B", Json::Float(f.b)),
            ("degenerate", Json::Bool(f.degenerate)),
        ])
    };
    let mut pairs = vec![
        ("transition", Json::Str(result.transition.label())),
        ("seed", Json::Int(env.seed as i64)),
        ("shots", Json::Int(args.shots as i64)),
        ("points", points(&result.points)),
        ("fit", fit(&result.fit)),
        ("F_avg", Json::Float(result.f_avg)),
    ];
    match &result.interleaved {
        Some(inter) => {
            pairs.push((
                "interleaved",
                Json::object(vec![
                    ("points", points(&inter.points)),
                    ("fit", fit(&inter.fit)),
                    ("F_gate", Json::Float(inter.f_gate)),
                ]),
            ));
        }
        None => pairs.push(("interleaved", Json::Null)),
    }
    Json::object(pairs)
}

fn run_tomo_command(env: &Env, args: &TomoArgs) -> Result<(), CliError> {
    let state = ReferenceState::parse(&args.state)?;
    let noise = env.noise(args.ideal);
    let readout = env.readout(args.ideal)?;
    let prep = prepare_reference(&env.device, state);
    let record = acquire_tomography(
        &prep,
        &env.device,
        &noise,
        readout.as_ref(),
        args.shots,
        env.seed,
    )?;
    let report = mle_reconstruct(&record)?;
    let fidelity = trimon_core::state::uhlmann_fidelity(&report.rho, &state.target().to_density())?;
    println!(
        "tomo {}: fidelity to target = {:.6}",
        state.name(),
        fidelity
    );

    let settings = Json::Array(
        record
            .settings
            .iter()
            .map(|s| {
                let axes: String = s.axes.iter().map(|a| a.name()).collect();
                Json::object(vec![
                    ("axes", Json::Str(axes)),
                    ("populations", Json::floats(s.populations)),
                ])
            })
            .collect(),
    );
    let m = report.rho.matrix();
    let rows = |imag: bool| {
        Json::Array(
            (0..8)
                .map(|i| {
                    Json::floats((0..8).map(|j| if imag { m[(i, j)].im } else { m[(i, j)].re }))
                })
                .collect(),
        )
    };
    let mut pairs = vec![
        ("state", Json::Str(state.name().into())),
        ("pulses", Json::Int(prep.pulse_count() as i64)),
        ("shots", Json::Int(args.shots as i64)),
        ("seed", Json::Int(env.seed as i64)),
        ("settings", settings),
        ("rho_real", rows(false)),
        ("rho_imag", rows(true)),
        ("fidelity_to_target", Json::Float(fidelity)),
        ("log_likelihood", Json::Float(report.log_likelihood)),
        ("iterations", Json::Int(report.iterations as i64)),
        ("converged", Json::Bool(report.converged)),
    ];
    if !args.ideal {
        // the benchmark number: noisy pulses, ideal classifier, exact limit
        let f_sim = simulated_state_fidelity(state, &env.device, &noise)?;
        pairs.push(("simulated_fidelity", Json::Float(f_sim)));
    }
    env.write(
        &format!("tomo_{}.json", state.name()),
        &Json::object(pairs).to_string_pretty(),
    )
}

fn run_device_fit(env: &Env, input: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(input).map_err(|e| CliError {
        code: 2,
        message: format!("{}: {e}", input.display()),
    })?;
    let mut measured = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("label") {
            continue;
        }
        let (label, value) = line.split_once(',').ok_or_else(|| CliError {
            code: 2,
            message: format!(
                "{}:{}: expected \"label,value\"",
                input.display(),
                lineno + 1
            ),
        })?;
        let label = label.trim();
        let value: f64 = value.trim().parse().map_err(|e| CliError {
            code: 2,
            message: format!("{}:{}: {e}", input.display(), lineno + 1),
        })?;
        if let Some(q) = label.strip_prefix("anharm_") {
            // anharmonicities arrive in MHz (small, negative values)
            measured.push((
                FitObservable::Anharmonicity(QubitLabel::parse(q)?),
                value * 1e6,
            ));
        } else {
            // line frequencies arrive in GHz
            measured.push((FitObservable::Line(Transition::parse(label)?), value * 1e9));
        }
        labels.push(label.to_string());
    }
    let report = fit_params(&measured)?;
    println!(
        "device fit: converged = {}, iterations = {}",
        report.converged, report.iterations
    );
    env.write(
        "device_fit.json",
        &fit_json(&labels, &report).to_string_pretty(),
    )
}

fn fit_json(labels: &[String], report: &FitReport) -> Json {
    let residual_map: BTreeMap<String, Json> = labels
        .iter()
        .cloned()
        .zip(report.residuals.iter().map(|r| Json::Float(r / 1e6)))
        .collect();
    let mut pairs = vec![
        ("f00_ghz", Json::floats(report.f00.iter().map(|f| f / 1e9))),
        (
            "j_pair_mhz",
            Json::floats(report.j_pair.iter().map(|f| f / 1e6)),
        ),
        ("residuals_mhz", Json::Object(residual_map)),
        ("iterations", Json::Int(report.iterations as i64)),
        ("converged", Json::Bool(report.converged)),
    ];
    match report.j_self {
        Some(j) => pairs.push(("j_self_mhz", Json::floats(j.iter().map(|f| f / 1e6)))),
        None => pairs.push(("j_self_mhz", Json::Null)),
    }
    Json::object(pairs)
}

fn run_readout_calibrate(
    env: &Env,
    targets: (f64, f64),
    histogram_shots: u64,
    bins: usize,
) -> Result<(), CliError> {
    let model = calibrate_readout(targets, &env.device)?;
    let (f000, f111) = model.classification_fidelities();
    println!(
        "readout: sigma = {:.6}, decay = {:.1} ns, F000 = {:.4}, F111 = {:.4}",
        model.sigma,
        model.readout_decay * 1e9,
        f000,
        f111
    );
    let json = Json::object(vec![
        ("sigma", Json::Float(model.sigma)),
        ("readout_decay_ns", Json::Float(model.readout_decay * 1e9)),
        ("mean_voltage", Json::floats(model.mean_voltage)),
        ("decay_prob", Json::floats(model.decay_prob)),
        ("v_low", Json::Float(model.v_low)),
        ("v_high", Json::Float(model.v_high)),
        ("f000", Json::Float(f000)),
        ("f111", Json::Float(f111)),
        ("cavity_freq_ghz", Json::Float(model.cavity_freq / 1e9)),
        ("cavity_kappa_mhz", Json::Float(model.cavity_kappa / 1e6)),
    ]);
    env.write("readout_model.json", &json.to_string_pretty())?;

    let prepared: Vec<BasisIndex> = BasisIndex::all().collect();
    let mut rng = sampling::stream_from_seed(env.seed);
    let hist = voltage_histogram(&model, &prepared, histogram_shots, bins, &mut rng);
    env.write("readout_histogram.csv", &hist.to_csv())
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect()
}
