//! `midmeasure` command-line driver.
//!
//! Exit codes: 0 success, 2 bad arguments, 3 infeasible configuration,
//! 4 runtime failure.

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use midmeasure::amplifier::{self, Mode, RunConfig};
use midmeasure::experiments::{self, artifact_path, SweepSpec};
use midmeasure::qaoa::{self, Expectation, QaoaConfig};
use midmeasure::qubo::{self, bitstring_label, BoundsMode, EnergyTable};
use midmeasure::rng::stream_id;
use midmeasure::{Error, Graph, NoiseSpec, TrajectoryRng};

#[derive(Parser, Debug)]
#[command(
    name = "midmeasure",
    version,
    about = "Ground-state amplification by mid-circuit measurement"
)]
struct Cli {
    /// Worker threads for the data-parallel core [default: all cores]
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dump the energy of every basis state
    Spectrum {
        #[command(flatten)]
        graph: GraphSource,
        #[command(flatten)]
        ham: HamiltonianArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the measurement-driven amplifier
    Amplify {
        #[command(flatten)]
        graph: GraphSource,
        #[command(flatten)]
        ham: HamiltonianArgs,
        #[command(flatten)]
        run: AmplifyArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Train the QAOA baseline by finite-difference gradient descent
    Qaoa {
        #[command(flatten)]
        graph: GraphSource,
        #[command(flatten)]
        ham: HamiltonianArgs,
        #[command(flatten)]
        qaoa: QaoaArgs,
        /// Optimizer steps w
        #[arg(long, default_value_t = 50)]
        steps: usize,
        /// Shots per optimizer step l
        #[arg(long, default_value_t = 2048, value_parser = positive)]
        shots: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Layers-to-threshold sweep over random connected graphs
    Sweep {
        /// Node counts, comma separated
        #[arg(long, value_delimiter = ',', default_value = "4,6,8,10")]
        nodes: Vec<usize>,
        /// Random instances per node count
        #[arg(long, default_value_t = 20, value_parser = positive)]
        instances: usize,
        /// G(n, p) edge probability
        #[arg(long, default_value_t = 0.5, value_parser = probability)]
        edge_probability: f64,
        /// Layers per recorded curve
        #[arg(long, default_value_t = 50)]
        layers: usize,
        /// Trajectory shots per instance (0 skips trajectories)
        #[arg(long, default_value_t = 2048)]
        shots: usize,
        /// P_good target for layers-to-threshold
        #[arg(long, default_value_t = 0.5, value_parser = probability)]
        threshold: f64,
        /// Give up on the threshold after this many layers
        #[arg(long, default_value_t = 50_000)]
        horizon: usize,
        /// Leave out the fixed four-node instance
        #[arg(long)]
        no_smoke: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Paired noisy runs with and without a noise-free ancilla
    NoiseStudy {
        #[command(flatten)]
        graph: GraphSource,
        /// Amplifier layers
        #[arg(long, default_value_t = 50)]
        layers: usize,
        /// Paired shots
        #[arg(long, default_value_t = 2048, value_parser = positive)]
        shots: usize,
        /// Depolarizing probability after single-qubit gates
        #[arg(long, default_value_t = 0.001, value_parser = probability)]
        depolarizing_1q: f64,
        /// Depolarizing probability after controlled gates
        #[arg(long, default_value_t = 0.01, value_parser = probability)]
        depolarizing_2q: f64,
        /// Ancilla readout flip probability
        #[arg(long, default_value_t = 0.02, value_parser = probability)]
        readout_flip: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Amplifier against QAOA at an equal per-step shot budget
    Compare {
        #[command(flatten)]
        graph: GraphSource,
        /// Amplifier layers, also the QAOA optimizer steps w
        #[arg(long, default_value_t = 50)]
        layers: usize,
        /// Shots l, per amplifier run and per QAOA step
        #[arg(long, default_value_t = 2048, value_parser = positive)]
        shots: usize,
        #[command(flatten)]
        qaoa: QaoaArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct GraphSource {
    /// Graph file: edge list, or `.json`
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Random connected G(n, p) graph
    #[arg(long, num_args = 2, value_names = ["N", "P"], allow_negative_numbers = true)]
    random: Option<Vec<String>>,
}

#[derive(Args, Debug)]
struct HamiltonianArgs {
    /// Vertex weight A
    #[arg(long, default_value_t = experiments::DEFAULT_A)]
    a_weight: f64,
    /// Edge penalty B, must exceed A
    #[arg(long, default_value_t = experiments::DEFAULT_B)]
    b_weight: f64,
    /// Constant energy shift
    #[arg(long, default_value_t = 0.0)]
    offset: f64,
    /// Spectrum bounds used to tune the filter
    #[arg(long, value_enum, default_value_t = BoundsArg::Exact)]
    bounds: BoundsArg,
    /// Known minimum cover size, with `--bounds analytic`
    #[arg(long)]
    k_min: Option<usize>,
}

#[derive(Args, Debug)]
struct AmplifyArgs {
    /// Amplifier layers
    #[arg(long, default_value_t = 50)]
    layers: usize,
    /// Trajectories
    #[arg(long, default_value_t = 2048, value_parser = positive)]
    shots: usize,
    /// Sample outcomes, or force outcome 0 by circuit or closed form
    #[arg(long, value_enum, default_value_t = ModeArg::Trajectory)]
    mode: ModeArg,
    /// R_x angle of the mixer
    #[arg(long, default_value_t = FRAC_PI_2, allow_negative_numbers = true)]
    mixer_angle: f64,
    /// Override the R_z angle [default: from the bounds]
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Override the evolution time [default: from the bounds]
    #[arg(long, allow_negative_numbers = true)]
    time: Option<f64>,
}

#[derive(Args, Debug)]
struct NoiseArgs {
    /// Depolarizing probability after single-qubit gates
    #[arg(long, default_value_t = 0.0, value_parser = probability)]
    depolarizing_1q: f64,
    /// Depolarizing probability after controlled gates
    #[arg(long, default_value_t = 0.0, value_parser = probability)]
    depolarizing_2q: f64,
    /// Ancilla readout flip probability
    #[arg(long, default_value_t = 0.0, value_parser = probability)]
    readout_flip: f64,
    /// Keep the ancilla free of all noise
    #[arg(long)]
    protect_ancilla: bool,
}

#[derive(Args, Debug)]
struct QaoaArgs {
    /// QAOA depth p
    #[arg(long, default_value_t = 5, value_parser = positive)]
    depth: usize,
    /// Gradient descent step size
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    learning_rate: f64,
    /// Central finite-difference step
    #[arg(long, default_value_t = 1e-3)]
    fd_step: f64,
    /// How the optimizer estimates the energy
    #[arg(long, value_enum, default_value_t = ExpectationArg::Exact)]
    expectation: ExpectationArg,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Master seed for graphs, trajectories and initial angles
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Artifact directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Artifact format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BoundsArg {
    Exact,
    Analytic,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Trajectory,
    Postselect,
    Analytic,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ExpectationArg {
    Exact,
    Sampled,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Trajectory => Mode::Trajectory,
            ModeArg::Postselect => Mode::Postselect,
            ModeArg::Analytic => Mode::Analytic,
        }
    }
}

impl From<ExpectationArg> for Expectation {
    fn from(e: ExpectationArg) -> Self {
        match e {
            ExpectationArg::Exact => Expectation::Exact,
            ExpectationArg::Sampled => Expectation::Sampled,
        }
    }
}

fn probability(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("{p} is not in [0, 1]"))
    }
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(_) => Err(format!("`{s}` is not a positive integer")),
    }
}

#[derive(Debug)]
struct CliError {
    code: u8,
    flag: String,
    message: String,
}

impl CliError {
    fn bad_args(flag: &str, message: impl Into<String>) -> Self {
        Self {
            code: 2,
            flag: flag.into(),
            message: message.into(),
        }
    }
}

/// Attach the flag that fed a failing stage to a library error.
fn blame(flag: &'static str) -> impl FnOnce(Error) -> CliError {
    move |e| {
        let flag = match e {
            Error::TooManyQubits { .. } => "--graph/--random",
            Error::Io(_) | Error::Csv(_) | Error::Json(_) if flag != "--graph" => "--out",
            _ => flag,
        };
        CliError {
            code: if e.is_infeasible_config() { 3 } else { 4 },
            flag: flag.into(),
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn load_graph(src: &GraphSource, seed: u64) -> CliResult<Graph> {
    if let Some(path) = &src.graph {
        return Graph::from_path(path).map_err(blame("--graph"));
    }
    let args = src.random.as_deref().unwrap_or_default();
    let n: usize = args[0]
        .parse()
        .map_err(|_| CliError::bad_args("--random", format!("N = `{}` is not a vertex count", args[0])))?;
    let p = probability(&args[1]).map_err(|m| CliError::bad_args("--random", format!("P: {m}")))?;
    let mut rng = TrajectoryRng::new(seed, stream_id(&[0x0067_7261_7068, n as u64]));
    experiments::random_connected_graph(n, p, &mut rng).map_err(blame("--random"))
}

fn build_table(g: &Graph, ham: &HamiltonianArgs) -> CliResult<EnergyTable> {
    let mode = match (ham.bounds, ham.k_min) {
        (BoundsArg::Exact, Some(_)) => {
            return Err(CliError::bad_args(
                "--k-min",
                "only meaningful with `--bounds analytic`",
            ))
        }
        (BoundsArg::Exact, None) => BoundsMode::Exact,
        (BoundsArg::Analytic, k_min) => BoundsMode::Analytic { k_min },
    };
    let q = qubo::build_vertex_cover_qubo(g, ham.a_weight, ham.b_weight)
        .map_err(blame("--a-weight/--b-weight"))?
        .with_offset(ham.offset);
    qubo::build_energy_table(&q, mode).map_err(blame("--bounds/--k-min"))
}

fn hamiltonian_echo(ham: &HamiltonianArgs) -> serde_json::Value {
    json!({
        "a_weight": ham.a_weight,
        "b_weight": ham.b_weight,
        "offset": ham.offset,
        "bounds": format!("{:?}", ham.bounds).to_lowercase(),
        "k_min": ham.k_min,
    })
}

fn qaoa_config(args: &QaoaArgs, steps: usize, shots: usize, seed: u64) -> QaoaConfig {
    QaoaConfig {
        depth: args.depth,
        steps,
        shots_per_step: shots,
        learning_rate: args.learning_rate,
        fd_step: args.fd_step,
        init_params: None,
        seed,
        expectation: args.expectation.into(),
    }
}

struct Artifacts<'a> {
    out: &'a OutputArgs,
    study: &'static str,
    n: String,
}

impl<'a> Artifacts<'a> {
    fn new(out: &'a OutputArgs, study: &'static str, n: impl ToString) -> CliResult<Self> {
        fs::create_dir_all(&out.out).map_err(|e| blame("--out")(e.into()))?;
        Ok(Self {
            out,
            study,
            n: n.to_string(),
        })
    }

    fn path(&self, suffix: &str, ext: &str) -> PathBuf {
        let study = format!("{}{suffix}", self.study);
        artifact_path(&self.out.out, &study, &self.n, self.out.seed, ext)
    }

    fn json(&mut self, value: &serde_json::Value) -> CliResult<()> {
        let path = self.path("", "json");
        let mut text = serde_json::to_string_pretty(value).map_err(|e| blame("--out")(e.into()))?;
        text.push('\n');
        self.text_at(path, &text)
    }

    fn csv(&mut self, suffix: &str, write: impl FnOnce(fs::File) -> midmeasure::Result<()>) -> CliResult<()> {
        let path = self.path(suffix, "csv");
        let file = fs::File::create(&path).map_err(|e| blame("--out")(e.into()))?;
        write(file).map_err(blame("--out"))
    }

    fn text_at(&mut self, path: PathBuf, text: &str) -> CliResult<()> {
        fs::write(&path, text).map_err(|e| blame("--out")(e.into()))
    }

    /// Random instances are saved so the run can be replayed with `--graph`.
    fn graph_if_random(&mut self, src: &GraphSource, g: &Graph) -> CliResult<()> {
        if src.random.is_some() {
            let path = self.path("-graph", "json");
            self.text_at(path, &format!("{}\n", g.to_json()))?;
        }
        Ok(())
    }
}

fn graph_label(g: &Graph) -> String {
    format!("n={} edges={}", g.n_vertices(), g.n_edges())
}

fn run(cli: Cli) -> CliResult<String> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads as usize)
            .build_global()
            .map_err(|e| CliError {
                code: 4,
                flag: "--threads".into(),
                message: e.to_string(),
            })?;
    }
    match cli.command {
        Command::Spectrum { graph, ham, out } => {
            let g = load_graph(&graph, out.seed)?;
            let table = build_table(&g, &ham)?;
            let uniform = table.ground_states.len() as f64 / table.len() as f64;
            let mut art = Artifacts::new(&out, "spectrum", g.n_vertices())?;
            art.graph_if_random(&graph, &g)?;
            match out.format {
                Format::Csv => art.csv("", |f| table.write_csv(f))?,
                Format::Json => art.json(&json!({
                    "config": { "graph": g, "hamiltonian": hamiltonian_echo(&ham), "seed": out.seed },
                    "table": table,
                    "bitstrings": (0..table.len()).map(|i| bitstring_label(i, table.n_qubits)).collect::<Vec<_>>(),
                }))?,
            }
            Ok(format!(
                "spectrum {} ground_energy={} optima={} p_good={uniform:.6} total_shots=0",
                graph_label(&g),
                table.ground_energy,
                table.ground_states.len()
            ))
        }
        Command::Amplify {
            graph,
            ham,
            run,
            noise,
            out,
        } => {
            let g = load_graph(&graph, out.seed)?;
            let table = build_table(&g, &ham)?;
            let cfg = RunConfig {
                n_layers: run.layers,
                mode: run.mode.into(),
                mixer_angle: run.mixer_angle,
                theta_override: run.theta,
                t_override: run.time,
                shots: run.shots,
                noise: NoiseSpec {
                    depolarizing_1q: noise.depolarizing_1q,
                    depolarizing_2q: noise.depolarizing_2q,
                    readout_flip: noise.readout_flip,
                    protect_ancilla: noise.protect_ancilla,
                },
                seed: out.seed,
            };
            let result = amplifier::run_amplification(&table, &cfg)
                .map_err(blame("--layers/--mode/--theta/--time"))?;
            let p_good = result.final_p_good();
            let mut art = Artifacts::new(&out, "amplify", g.n_vertices())?;
            art.graph_if_random(&graph, &g)?;
            match out.format {
                Format::Csv => {
                    art.csv("", |f| result.write_trace_csv(f))?;
                    if !result.shots.is_empty() {
                        art.csv("-samples", |f| result.write_samples_csv(table.n_qubits, f))?;
                    }
                }
                Format::Json => {
                    let counts: serde_json::Map<String, serde_json::Value> = result
                        .sample_counts()
                        .into_iter()
                        .map(|(k, c)| (bitstring_label(k, table.n_qubits), c.into()))
                        .collect();
                    art.json(&json!({
                        "config": { "graph": g, "hamiltonian": hamiltonian_echo(&ham), "run": cfg },
                        "params": result.params,
                        "initial_p_good": result.initial_p_good,
                        "final_p_good": p_good,
                        "sampled_p_good": result.sampled_p_good(&table),
                        "p_good_by_layer": result.mean_p_good_by_layer(),
                        "sample_counts": counts,
                        "postselect": result.postselect,
                        "total_shots": result.total_shots(),
                    }))?
                }
            }
            Ok(format!(
                "amplify {} layers={} p_good={p_good:.6} total_shots={}",
                graph_label(&g),
                run.layers,
                result.total_shots()
            ))
        }
        Command::Qaoa {
            graph,
            ham,
            qaoa,
            steps,
            shots,
            out,
        } => {
            let g = load_graph(&graph, out.seed)?;
            let table = build_table(&g, &ham)?;
            let cfg = qaoa_config(&qaoa, steps, shots, out.seed);
            let result =
                qaoa::qaoa_optimize(&table, &cfg).map_err(blame("--depth/--learning-rate/--fd-step"))?;
            let p_good = result.final_p_good(&table).map_err(blame("--depth"))?;
            let mut art = Artifacts::new(&out, "qaoa", g.n_vertices())?;
            art.graph_if_random(&graph, &g)?;
            match out.format {
                Format::Csv => art.csv("", |f| result.write_history_csv(f))?,
                Format::Json => art.json(&json!({
                    "config": { "graph": g, "hamiltonian": hamiltonian_echo(&ham), "qaoa": cfg },
                    "run": result,
                    "final_p_good": p_good,
                }))?,
            }
            Ok(format!(
                "qaoa {} depth={} p_good={p_good:.6} total_shots={}",
                graph_label(&g),
                qaoa.depth,
                result.total_shots
            ))
        }
        Command::Sweep {
            nodes,
            instances,
            edge_probability,
            layers,
            shots,
            threshold,
            horizon,
            no_smoke,
            out,
        } => {
            let spec = SweepSpec {
                node_counts: nodes,
                instances_per_n: instances,
                edge_probability,
                layers,
                shots,
                seed: out.seed,
                threshold,
                threshold_horizon: horizon,
                include_smoke_instance: !no_smoke,
            };
            let result =
                experiments::convergence_sweep(&spec).map_err(blame("--nodes/--edge-probability"))?;
            let label = spec
                .node_counts
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join("-");
            let mut art = Artifacts::new(&out, "sweep", label)?;
            match out.format {
                Format::Csv => art.csv("", |f| result.write_csv(f))?,
                Format::Json => {
                    art.json(&serde_json::to_value(&result).map_err(|e| blame("--out")(e.into()))?)?
                }
            }
            let medians: Vec<String> = result
                .per_n
                .iter()
                .map(|s| match s.median_layers_to_threshold {
                    Some(m) => format!("{}:{m}", s.n),
                    None => format!("{}:unreached", s.n),
                })
                .collect();
            let finals: Vec<f64> = result
                .instances
                .iter()
                .filter_map(|i| i.postselect_p_good.last().copied())
                .collect();
            Ok(format!(
                "sweep instances={} median_layers_to_{threshold}=[{}] p_good={:.6} total_shots={}",
                result.instances.len(),
                medians.join(" "),
                midmeasure::stats::mean(&finals),
                result.instances.len() * shots
            ))
        }
        Command::NoiseStudy {
            graph,
            layers,
            shots,
            depolarizing_1q,
            depolarizing_2q,
            readout_flip,
            out,
        } => {
            let g = load_graph(&graph, out.seed)?;
            let noise = NoiseSpec {
                depolarizing_1q,
                depolarizing_2q,
                readout_flip,
                protect_ancilla: false,
            };
            let result = experiments::noise_contrast_study(&g, layers, shots, noise, out.seed)
                .map_err(blame("--layers/--shots"))?;
            let mut art = Artifacts::new(&out, "noise-study", g.n_vertices())?;
            art.graph_if_random(&graph, &g)?;
            match out.format {
                Format::Csv => art.csv("", |f| result.write_csv(f))?,
                Format::Json => {
                    art.json(&serde_json::to_value(&result).map_err(|e| blame("--out")(e.into()))?)?
                }
            }
            Ok(format!(
                "noise-study {} p_good={:.6} p_good_protected={:.6} lower_bound_95={:.6} total_shots={}",
                graph_label(&g),
                result.unprotected.summary.mean,
                result.protected.summary.mean,
                result.difference_lower_bound_95,
                2 * shots
            ))
        }
        Command::Compare {
            graph,
            layers,
            shots,
            qaoa,
            out,
        } => {
            let g = load_graph(&graph, out.seed)?;
            let amp = RunConfig {
                n_layers: layers,
                shots,
                seed: out.seed,
                ..RunConfig::default()
            };
            let cfg = qaoa_config(&qaoa, layers, shots, out.seed);
            let result =
                experiments::comparison_study(&g, &amp, &cfg).map_err(blame("--layers/--shots/--depth"))?;
            let mut art = Artifacts::new(&out, "compare", g.n_vertices())?;
            art.graph_if_random(&graph, &g)?;
            match out.format {
                Format::Csv => art.csv("", |f| result.write_csv(f))?,
                Format::Json => {
                    art.json(&serde_json::to_value(&result).map_err(|e| blame("--out")(e.into()))?)?
                }
            }
            Ok(format!(
                "compare {} p_good={:.6} qaoa_p_good={:.6} total_shots={} qaoa_total_shots={}",
                graph_label(&g),
                result.amplifier_p_good,
                result.qaoa_p_good,
                result.ledger.amplifier_total_shots,
                result.ledger.qaoa_total_shots
            ))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}: {}", e.flag, e.message);
            ExitCode::from(e.code)
        }
    }
}
