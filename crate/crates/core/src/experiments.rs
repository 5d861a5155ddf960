//! Study drivers: convergence sweeps over random graphs, the
//! protected-ancilla noise contrast, and the QAOA comparison.
//!
//! Every result embeds a [`Metadata`] block holding the full configuration
//! and seed, which is enough to regenerate it bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::amplifier::{
    energy_ratio, layers_to_threshold, run_amplification, select_parameters, Mode, RunConfig,
};
use crate::error::{Error, Result};
use crate::exec;
use crate::graph::Graph;
use crate::qaoa::{qaoa_optimize, QaoaConfig, QaoaStep};
use crate::qubo::{build_energy_table, build_vertex_cover_qubo, BoundsMode, EnergyTable};
use crate::rng::{stream_id, TrajectoryRng};
use crate::stats::{self, Summary};
use crate::sv::NoiseSpec;

pub const CONNECTIVITY_ATTEMPTS: usize = 1000;
pub const DEFAULT_A: f64 = 1.0;
pub const DEFAULT_B: f64 = 2.0;

/// Erdős–Rényi `G(n, p)`, resampled until connected.
pub fn random_connected_graph(n: usize, edge_probability: f64, rng: &mut TrajectoryRng) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "random graphs need n >= 2, got {n}"
        )));
    }
    if !(edge_probability > 0.0 && edge_probability <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "edge probability {edge_probability} is not in (0, 1]"
        )));
    }
    for _ in 0..CONNECTIVITY_ATTEMPTS {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.uniform() < edge_probability {
                    edges.push((u, v));
                }
            }
        }
        let g = Graph::new(n, edges)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::ConnectivityCap {
        n,
        p: edge_probability,
        attempts: CONNECTIVITY_ATTEMPTS,
    })
}

/// Vertex-cover table with `A = 1`, `B = 2` and exact bounds.
pub fn exact_vertex_cover_table(g: &Graph) -> Result<EnergyTable> {
    let q = build_vertex_cover_qubo(g, DEFAULT_A, DEFAULT_B)?;
    build_energy_table(&q, BoundsMode::Exact)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub study: String,
    pub version: String,
    pub seed: u64,
    pub config: serde_json::Value,
}

impl Metadata {
    fn new<C: Serialize>(study: &str, seed: u64, config: &C) -> Result<Self> {
        Ok(Self {
            study: study.to_string(),
            version: concat!("midmeasure ", env!("CARGO_PKG_VERSION")).to_string(),
            seed,
            config: serde_json::to_value(config)?,
        })
    }
}

/// `{study}_{n}_{seed}.{ext}`.
pub fn artifact_path(dir: &Path, study: &str, n: &str, seed: u64, ext: &str) -> PathBuf {
    dir.join(format!("{study}_{n}_{seed}.{ext}"))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

// ---------------------------------------------------------------- sweep ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub node_counts: Vec<usize>,
    pub instances_per_n: usize,
    pub edge_probability: f64,
    /// Layers recorded per instance in both modes.
    pub layers: usize,
    /// Trajectory shots per instance; 0 skips the trajectory arm.
    pub shots: usize,
    pub seed: u64,
    /// P_good level for the layers-to-threshold statistic.
    pub threshold: f64,
    /// Postselected layers searched for the threshold before giving up.
    pub threshold_horizon: usize,
    /// Also run the four-node example graph as a fixed smoke instance.
    pub include_smoke_instance: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            node_counts: vec![4, 6, 8, 10],
            instances_per_n: 20,
            edge_probability: 0.5,
            layers: 50,
            shots: 2048,
            seed: 0,
            threshold: 0.5,
            threshold_horizon: 50_000,
            include_smoke_instance: true,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.node_counts.is_empty() || self.instances_per_n == 0 {
            return Err(Error::InvalidConfig(
                "sweep needs node counts and instances".into(),
            ));
        }
        if let Some(&n) = self
            .node_counts
            .iter()
            .find(|&&n| !(2..=crate::qubo::DEFAULT_BRUTE_FORCE_CAP).contains(&n))
        {
            return Err(Error::InvalidConfig(format!("node count {n} outside [2, cap]")));
        }
        if !(self.edge_probability > 0.0 && self.edge_probability <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "edge probability {} is not in (0, 1]",
                self.edge_probability
            )));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig("threshold must be in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Per-instance curves. Vectors indexed by layer start at layer 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub n: usize,
    pub instance: usize,
    pub graph: Graph,
    pub optimum_multiplicity: usize,
    pub ground_energy: f64,
    pub max_energy: f64,
    pub initial_p_good: f64,
    pub layers_to_threshold: Option<usize>,
    pub postselect_p_good: Vec<f64>,
    pub postselect_energy_ratio: Vec<f64>,
    /// Across-shot summaries of P_good, layer 0 included.
    pub trajectory_p_good: Vec<Summary>,
    pub trajectory_energy_ratio: Vec<f64>,
    pub trajectory_sampled_p_good: Option<f64>,
}

/// Flat `(n, instance, layer)` record, layers `1..=L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub n: usize,
    pub instance: usize,
    pub layer: usize,
    pub optimum_multiplicity: usize,
    pub postselect_p_good: f64,
    pub postselect_energy_ratio: f64,
    pub trajectory_mean: Option<f64>,
    pub trajectory_median: Option<f64>,
    pub trajectory_iqr: Option<f64>,
    pub trajectory_energy_ratio: Option<f64>,
}

/// Across-instance aggregate for one node count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeCountSummary {
    pub n: usize,
    /// Median over instances, `None` when more than half never reached the threshold.
    pub median_layers_to_threshold: Option<f64>,
    pub unreached: usize,
    /// Optimum multiplicity of each instance, in instance order.
    pub multiplicities: Vec<usize>,
    /// Across-instance summaries of postselected P_good, layer 0 included.
    pub postselect_p_good: Vec<Summary>,
    /// Across-instance summaries of the per-instance trajectory mean.
    pub trajectory_p_good: Vec<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub metadata: Metadata,
    pub instances: Vec<InstanceResult>,
    pub records: Vec<LayerRecord>,
    pub per_n: Vec<NodeCountSummary>,
    pub smoke: Option<InstanceResult>,
}

/// Median with `None` ordered above every value.
pub fn censored_median(xs: &[Option<usize>]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| match (a, b) {
        (None, None) => std::cmp::Ordering::Equal,
        (None, _) => std::cmp::Ordering::Greater,
        (_, None) => std::cmp::Ordering::Less,
        (Some(x), Some(y)) => x.cmp(y),
    });
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m].map(|x| x as f64)
    } else {
        Some((v[m - 1]? + v[m]?) as f64 / 2.0)
    }
}

fn run_instance(spec: &SweepSpec, n: usize, instance: usize, g: Graph) -> Result<InstanceResult> {
    let table = exact_vertex_cover_table(&g)?;
    let params = select_parameters(&table)?;
    let inst_seed = stream_id(&[spec.seed, n as u64, instance as u64, 1]);

    let ps = run_amplification(
        &table,
        &RunConfig {
            n_layers: spec.layers,
            mode: Mode::Postselect,
            seed: inst_seed,
            ..RunConfig::default()
        },
    )?;
    let postselect_p_good = ps.mean_p_good_by_layer();
    let mut postselect_energy_ratio = vec![energy_ratio(&uniform_probs(&table), &table)];
    if let Some(rec) = &ps.postselect {
        postselect_energy_ratio.extend(
            rec.traces
                .iter()
                .map(|t| ratio_from_energy(t.energy_after, &table)),
        );
    }

    let (trajectory_p_good, trajectory_energy_ratio, trajectory_sampled_p_good) = if spec.shots > 0 {
        let tr = run_amplification(
            &table,
            &RunConfig {
                n_layers: spec.layers,
                mode: Mode::Trajectory,
                shots: spec.shots,
                seed: inst_seed,
                ..RunConfig::default()
            },
        )?;
        let mut summaries = vec![Summary::of(&vec![tr.initial_p_good; tr.shots.len()])];
        let mut ratios = vec![postselect_energy_ratio[0]];
        for layer in 0..spec.layers {
            let pg: Vec<f64> = tr.shots.iter().map(|s| s.traces[layer].p_good_after).collect();
            let en: Vec<f64> = tr.shots.iter().map(|s| s.traces[layer].energy_after).collect();
            summaries.push(Summary::of(&pg));
            ratios.push(ratio_from_energy(stats::mean(&en), &table));
        }
        (summaries, ratios, tr.sampled_p_good(&table))
    } else {
        (Vec::new(), Vec::new(), None)
    };

    let layers_to_threshold = layers_to_threshold(&table, &params, spec.threshold, spec.threshold_horizon)?;
    Ok(InstanceResult {
        n,
        instance,
        optimum_multiplicity: table.ground_states.len(),
        ground_energy: table.ground_energy,
        max_energy: table.max_energy,
        initial_p_good: ps.initial_p_good,
        graph: g,
        layers_to_threshold,
        postselect_p_good,
        postselect_energy_ratio,
        trajectory_p_good,
        trajectory_energy_ratio,
        trajectory_sampled_p_good,
    })
}

fn uniform_probs(table: &EnergyTable) -> Vec<f64> {
    vec![1.0 / table.len() as f64; table.len()]
}

fn ratio_from_energy(energy: f64, table: &EnergyTable) -> f64 {
    let span = table.max_energy - table.ground_energy;
    if span <= 0.0 {
        1.0
    } else {
        (table.max_energy - energy) / span
    }
}

pub fn convergence_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = spec
        .node_counts
        .iter()
        .flat_map(|&n| (0..spec.instances_per_n).map(move |i| (n, i)))
        .collect();
    let instances = exec::try_map_range(jobs.len(), |j| {
        let (n, i) = jobs[j];
        let mut rng = TrajectoryRng::new(spec.seed, stream_id(&[n as u64, i as u64]));
        let g = random_connected_graph(n, spec.edge_probability, &mut rng)?;
        run_instance(spec, n, i, g)
    })?;

    let mut records = Vec::with_capacity(instances.len() * spec.layers);
    for inst in &instances {
        for layer in 1..=spec.layers {
            let tr = inst.trajectory_p_good.get(layer);
            records.push(LayerRecord {
                n: inst.n,
                instance: inst.instance,
                layer,
                optimum_multiplicity: inst.optimum_multiplicity,
                postselect_p_good: inst.postselect_p_good[layer],
                postselect_energy_ratio: inst.postselect_energy_ratio[layer],
                trajectory_mean: tr.map(|s| s.mean),
                trajectory_median: tr.map(|s| s.median),
                trajectory_iqr: tr.map(|s| s.iqr),
                trajectory_energy_ratio: inst.trajectory_energy_ratio.get(layer).copied(),
            });
        }
    }

    let per_n = spec
        .node_counts
        .iter()
        .map(|&n| {
            let group: Vec<&InstanceResult> = instances.iter().filter(|r| r.n == n).collect();
            let ltt: Vec<Option<usize>> = group.iter().map(|r| r.layers_to_threshold).collect();
            let per_layer = |f: &dyn Fn(&InstanceResult, usize) -> Option<f64>| -> Vec<Summary> {
                (0..=spec.layers)
                    .filter_map(|l| {
                        let xs: Vec<f64> = group.iter().filter_map(|r| f(r, l)).collect();
                        (!xs.is_empty()).then(|| Summary::of(&xs))
                    })
                    .collect()
            };
            NodeCountSummary {
                n,
                median_layers_to_threshold: censored_median(&ltt),
                unreached: ltt.iter().filter(|x| x.is_none()).count(),
                multiplicities: group.iter().map(|r| r.optimum_multiplicity).collect(),
                postselect_p_good: per_layer(&|r, l| Some(r.postselect_p_good[l])),
                trajectory_p_good: per_layer(&|r, l| r.trajectory_p_good.get(l).map(|s| s.mean)),
            }
        })
        .collect();

    let smoke = if spec.include_smoke_instance {
        Some(run_instance(spec, 4, usize::MAX, Graph::four_node_example())?)
    } else {
        None
    };

    Ok(SweepResult {
        metadata: Metadata::new("sweep", spec.seed, spec)?,
        instances,
        records,
        per_n,
        smoke,
    })
}

impl SweepResult {
    fn n_label(&self) -> String {
        let spec: SweepSpec = serde_json::from_value(self.metadata.config.clone()).unwrap_or_default();
        spec.node_counts
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join("-")
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for r in &self.records {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Writes `sweep_{n}_{seed}.json` and `.csv`; returns both paths.
    pub fn write_outputs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let n = self.n_label();
        let json = artifact_path(dir, "sweep", &n, self.metadata.seed, "json");
        let csv = artifact_path(dir, "sweep", &n, self.metadata.seed, "csv");
        write_json(&json, self)?;
        self.write_csv(fs::File::create(&csv)?)?;
        Ok(vec![json, csv])
    }
}

// ---------------------------------------------------------- noise study ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseStudyConfig {
    pub graph: Graph,
    pub layers: usize,
    pub shots: usize,
    pub noise: NoiseSpec,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseArm {
    pub protect_ancilla: bool,
    /// Exact final P_good per shot.
    pub final_p_good: Vec<f64>,
    pub summary: Summary,
    pub sampled_p_good: f64,
    pub mean_p_good_by_layer: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseContrastResult {
    pub metadata: Metadata,
    pub n: usize,
    pub unprotected: NoiseArm,
    pub protected: NoiseArm,
    /// Mean of per-shot `protected − unprotected`.
    pub mean_difference: f64,
    /// One-sided 95% lower confidence bound on that mean.
    pub difference_lower_bound_95: f64,
}

pub fn noise_contrast_study(
    g: &Graph,
    layers: usize,
    shots: usize,
    noise: NoiseSpec,
    seed: u64,
) -> Result<NoiseContrastResult> {
    let config = NoiseStudyConfig {
        graph: g.clone(),
        layers,
        shots,
        noise,
        seed,
    };
    let table = exact_vertex_cover_table(g)?;
    let arm = |protect: bool| -> Result<NoiseArm> {
        let run = run_amplification(
            &table,
            &RunConfig {
                n_layers: layers,
                mode: Mode::Trajectory,
                shots,
                noise: noise.with_protected_ancilla(protect),
                seed,
                ..RunConfig::default()
            },
        )?;
        let final_p_good: Vec<f64> = run.shots.iter().map(|s| s.final_p_good).collect();
        Ok(NoiseArm {
            protect_ancilla: protect,
            summary: Summary::of(&final_p_good),
            sampled_p_good: run.sampled_p_good(&table).unwrap_or(0.0),
            mean_p_good_by_layer: run.mean_p_good_by_layer(),
            final_p_good,
        })
    };
    let unprotected = arm(false)?;
    let protected = arm(true)?;
    let diffs: Vec<f64> = protected
        .final_p_good
        .iter()
        .zip(&unprotected.final_p_good)
        .map(|(a, b)| a - b)
        .collect();
    Ok(NoiseContrastResult {
        metadata: Metadata::new("noise-study", seed, &config)?,
        n: g.n_vertices(),
        mean_difference: stats::mean(&diffs),
        difference_lower_bound_95: stats::paired_lower_bound_95(&diffs),
        unprotected,
        protected,
    })
}

impl NoiseContrastResult {
    /// CSV `shot,unprotected_p_good,protected_p_good`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["shot", "unprotected_p_good", "protected_p_good"])?;
        for (i, (u, p)) in self
            .unprotected
            .final_p_good
            .iter()
            .zip(&self.protected.final_p_good)
            .enumerate()
        {
            wtr.write_record([i.to_string(), u.to_string(), p.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_outputs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let n = self.n.to_string();
        let json = artifact_path(dir, "noise-study", &n, self.metadata.seed, "json");
        let csv = artifact_path(dir, "noise-study", &n, self.metadata.seed, "csv");
        write_json(&json, self)?;
        self.write_csv(fs::File::create(&csv)?)?;
        Ok(vec![json, csv])
    }
}

// ----------------------------------------------------------- comparison ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonConfig {
    pub graph: Graph,
    pub amplifier: RunConfig,
    pub qaoa: QaoaConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotLedger {
    /// `l`.
    pub amplifier_total_shots: usize,
    /// `w × l`.
    pub qaoa_total_shots: usize,
    pub optimizer_steps: usize,
    pub shots_per_step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub metadata: Metadata,
    pub n: usize,
    pub amplifier_p_good: f64,
    pub amplifier_sampled_p_good: Option<f64>,
    pub amplifier_p_good_by_layer: Vec<f64>,
    pub qaoa_p_good: f64,
    pub qaoa_best_params: Vec<f64>,
    pub qaoa_history: Vec<QaoaStep>,
    pub ledger: ShotLedger,
}

pub fn comparison_study(
    g: &Graph,
    amplifier_cfg: &RunConfig,
    qaoa_cfg: &QaoaConfig,
) -> Result<ComparisonResult> {
    if amplifier_cfg.mode == Mode::Trajectory && amplifier_cfg.shots != qaoa_cfg.shots_per_step {
        return Err(Error::InvalidConfig(format!(
            "fair budget needs equal l: amplifier shots {} vs QAOA shots per step {}",
            amplifier_cfg.shots, qaoa_cfg.shots_per_step
        )));
    }
    if amplifier_cfg.n_layers != qaoa_cfg.steps {
        return Err(Error::InvalidConfig(format!(
            "fair budget needs amplifier layers ({}) = QAOA steps ({})",
            amplifier_cfg.n_layers, qaoa_cfg.steps
        )));
    }
    let config = ComparisonConfig {
        graph: g.clone(),
        amplifier: amplifier_cfg.clone(),
        qaoa: qaoa_cfg.clone(),
    };
    let table = exact_vertex_cover_table(g)?;
    let amp = run_amplification(&table, amplifier_cfg)?;
    let qaoa = qaoa_optimize(&table, qaoa_cfg)?;
    let qaoa_p_good = qaoa.final_p_good(&table)?;
    Ok(ComparisonResult {
        metadata: Metadata::new("compare", amplifier_cfg.seed, &config)?,
        n: g.n_vertices(),
        amplifier_p_good: amp.final_p_good(),
        amplifier_sampled_p_good: amp.sampled_p_good(&table),
        amplifier_p_good_by_layer: amp.mean_p_good_by_layer(),
        qaoa_p_good,
        qaoa_best_params: qaoa.best_params,
        ledger: ShotLedger {
            amplifier_total_shots: amplifier_cfg.shots,
            qaoa_total_shots: qaoa.total_shots,
            optimizer_steps: qaoa_cfg.steps,
            shots_per_step: qaoa_cfg.shots_per_step,
        },
        qaoa_history: qaoa.history,
    })
}

impl ComparisonResult {
    /// CSV `method,index,p_good,energy,cumulative_shots`: amplifier rows per
    /// layer, QAOA rows per optimizer step.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["method", "index", "p_good", "energy", "cumulative_shots"])?;
        for (l, p) in self.amplifier_p_good_by_layer.iter().enumerate() {
            wtr.write_record([
                "amplifier".to_string(),
                l.to_string(),
                p.to_string(),
                String::new(),
                self.ledger.amplifier_total_shots.to_string(),
            ])?;
        }
        for h in &self.qaoa_history {
            wtr.write_record([
                "qaoa".to_string(),
                h.step.to_string(),
                h.p_good.to_string(),
                h.energy.to_string(),
                h.cumulative_shots.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_outputs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let n = self.n.to_string();
        let json = artifact_path(dir, "compare", &n, self.metadata.seed, "json");
        let csv = artifact_path(dir, "compare", &n, self.metadata.seed, "csv");
        write_json(&json, self)?;
        self.write_csv(fs::File::create(&csv)?)?;
        Ok(vec![json, csv])
    }
}

/// Layers at which a curve first reaches `threshold`.
pub fn first_layer_at_or_above(curve: &[f64], threshold: f64) -> Option<usize> {
    curve.iter().position(|&p| p >= threshold)
}

/// Whether a curve never decreases by more than `tol`.
pub fn is_monotone_non_decreasing(curve: &[f64], tol: f64) -> bool {
    curve.windows(2).all(|w| w[1] >= w[0] - tol)
}
