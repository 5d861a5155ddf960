//! Hadamard-test amplification with mid-circuit measurement and feedback.
//!
//! One layer runs `H → controlled e^{-iHt} → R_z(θ) → H → measure` on the
//! ancilla. Writing `ϑ_k = (θ − t·E_k)/2`, outcome 0 leaves the system in
//! `Σ c_k e^{-itE_k/2} cos ϑ_k |k⟩` and outcome 1 in
//! `−i Σ c_k e^{-itE_k/2} sin ϑ_k |k⟩` (both up to normalisation). With
//! `θ = −π E_inf / (E_sup − E_inf)` and `t = −π / (E_sup − E_inf)` the angle
//! becomes `ϑ_k = (π/2)(E_k − E_inf)/(E_sup − E_inf) ∈ [0, π/2]`: outcome 0
//! keeps the lower bound untouched and annihilates the upper bound.
//!
//! After outcome 1 the mixer `R_x(σ)^⊗n` (σ = π/2 by default) is applied to
//! the system before the next layer.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::qubo::{bitstring_label, EnergyTable};
use crate::rng::TrajectoryRng;
use crate::sv::{
    self, init_plus_state, AncillaBranchState, GateKind, NoiseSpec, Site, VANISHING_PROBABILITY,
};

/// Rotation angle `θ` of the ancilla `R_z` and evolution time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParameters {
    pub theta: f64,
    pub t: f64,
}

impl FilterParameters {
    /// `(θ − t·E)/2`.
    pub fn interference_angle(&self, energy: f64) -> f64 {
        (self.theta - self.t * energy) / 2.0
    }
}

pub fn select_parameters(table: &EnergyTable) -> Result<FilterParameters> {
    let width = table.e_sup - table.e_inf;
    if width.is_nan() || width <= 0.0 {
        return Err(Error::DegenerateSpectrum {
            e_inf: table.e_inf,
            e_sup: table.e_sup,
        });
    }
    Ok(FilterParameters {
        theta: -PI * table.e_inf / width,
        t: -PI / width,
    })
}

/// `ϑ = (π/2)(E − E_inf)/(E_sup − E_inf)`.
pub fn filter_angle(table: &EnergyTable, energy: f64) -> f64 {
    FRAC_PI_2 * (energy - table.e_inf) / (table.e_sup - table.e_inf)
}

/// Diagonal phase the circuit attaches on top of the real cos/sin filter:
/// `e^{-itE/2}` for outcome 0, `−i·e^{-itE/2}` for outcome 1.
pub fn circuit_phase(params: &FilterParameters, energy: f64, outcome: u8) -> Complex64 {
    let p = Complex64::from_polar(1.0, -params.t * energy / 2.0);
    if outcome == 0 {
        p
    } else {
        Complex64::new(0.0, -1.0) * p
    }
}

fn filter_weight(table: &EnergyTable, energy: f64, outcome: u8) -> f64 {
    let angle = filter_angle(table, energy);
    if outcome == 0 {
        angle.cos()
    } else {
        angle.sin()
    }
}

/// Closed-form post-measurement coefficients `c_k·cos ϑ_k / √p` (outcome 0)
/// or `c_k·sin ϑ_k / √p` (outcome 1), and the outcome probability `p`.
pub fn analytic_filter(
    coeffs: &[Complex64],
    table: &EnergyTable,
    outcome: u8,
) -> Result<(Vec<Complex64>, f64)> {
    if coeffs.len() != table.len() {
        return Err(Error::SizeMismatch {
            expected: table.len(),
            got: coeffs.len(),
        });
    }
    let mut out: Vec<Complex64> = coeffs
        .iter()
        .zip(&table.energies)
        .map(|(c, &e)| c * filter_weight(table, e, outcome))
        .collect();
    let p = sv::norm_sqr(&out);
    if p < VANISHING_PROBABILITY {
        return Err(Error::ZeroProbabilityOutcome {
            outcome,
            probability: p,
        });
    }
    let scale = 1.0 / p.sqrt();
    out.iter_mut().for_each(|c| *c *= scale);
    Ok((out, p))
}

/// Probability of `outcome` for normalised `coeffs`, without filtering.
pub fn outcome_probability(coeffs: &[Complex64], table: &EnergyTable, outcome: u8) -> f64 {
    coeffs
        .iter()
        .zip(&table.energies)
        .map(|(c, &e)| c.norm_sqr() * filter_weight(table, e, outcome).powi(2))
        .sum()
}

/// Probability mass on the optimal configurations.
pub fn p_good(coeffs: &[Complex64], table: &EnergyTable) -> f64 {
    table.ground_states.iter().map(|&k| coeffs[k].norm_sqr()).sum()
}

/// [`p_good`] from a probability vector.
pub fn p_good_from_probabilities(probs: &[f64], table: &EnergyTable) -> f64 {
    table.ground_states.iter().map(|&k| probs[k]).sum()
}

/// Fraction of samples that hit an optimal configuration.
pub fn p_good_samples(samples: &[usize], table: &EnergyTable) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let hits = samples.iter().filter(|&&k| table.is_ground(k)).count();
    hits as f64 / samples.len() as f64
}

/// `⟨H⟩` of normalised amplitudes.
pub fn system_energy(coeffs: &[Complex64], table: &EnergyTable) -> f64 {
    coeffs
        .iter()
        .zip(&table.energies)
        .map(|(c, e)| c.norm_sqr() * e)
        .sum()
}

pub fn expected_energy(probs: &[f64], table: &EnergyTable) -> f64 {
    probs.iter().zip(&table.energies).map(|(p, e)| p * e).sum()
}

/// `(E_max − ⟨E⟩)/(E_max − E_0)`: 1 on the ground space, 0 on the top level.
pub fn energy_ratio(probs: &[f64], table: &EnergyTable) -> f64 {
    let span = table.max_energy - table.ground_energy;
    if span <= 0.0 {
        return 1.0;
    }
    (table.max_energy - expected_energy(probs, table)) / span
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Sample every ancilla outcome and apply the mixer after outcome 1.
    Trajectory,
    /// Force outcome 0 through the circuit each layer.
    Postselect,
    /// Force outcome 0 using the closed-form filter only.
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_layers: usize,
    pub mode: Mode,
    pub mixer_angle: f64,
    pub theta_override: Option<f64>,
    pub t_override: Option<f64>,
    pub shots: usize,
    pub noise: NoiseSpec,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_layers: 50,
            mode: Mode::Trajectory,
            mixer_angle: FRAC_PI_2,
            theta_override: None,
            t_override: None,
            shots: 2048,
            noise: NoiseSpec::noiseless(),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mode == Mode::Trajectory && self.shots == 0 {
            return Err(Error::InvalidConfig(
                "trajectory mode needs at least one shot".into(),
            ));
        }
        if !self.mixer_angle.is_finite() {
            return Err(Error::InvalidConfig("mixer angle must be finite".into()));
        }
        self.noise.validate()
    }

    pub fn parameters(&self, table: &EnergyTable) -> Result<FilterParameters> {
        let selected = select_parameters(table);
        match (self.theta_override, self.t_override) {
            (Some(theta), Some(t)) => Ok(FilterParameters { theta, t }),
            (theta, t) => {
                let p = selected?;
                Ok(FilterParameters {
                    theta: theta.unwrap_or(p.theta),
                    t: t.unwrap_or(p.t),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    /// 1-based layer index.
    pub layer: usize,
    pub p0: f64,
    /// Reported ancilla bit.
    pub outcome: u8,
    /// Outcome imposed rather than sampled.
    pub forced: bool,
    pub mixer_applied: bool,
    /// Ground-space probability at the end of the layer.
    pub p_good_after: f64,
    /// `⟨H⟩` of the system at the end of the layer.
    pub energy_after: f64,
    pub state_norm_check: f64,
}

fn interfere(
    state: &mut AncillaBranchState,
    table: &EnergyTable,
    params: &FilterParameters,
    mut noisy: Option<(&mut TrajectoryRng, &NoiseSpec)>,
) -> Result<()> {
    let mut noise_at = |state: &mut AncillaBranchState, site, kind| {
        if let Some((rng, noise)) = noisy.as_mut() {
            state.apply_noise_channel(site, kind, rng, noise);
        }
    };
    state.ancilla_hadamard();
    noise_at(state, Site::Ancilla, GateKind::SingleQubit);
    state.controlled_phase_evolution(table, params.t)?;
    noise_at(state, Site::Ancilla, GateKind::Controlled);
    for q in 0..state.n_qubits() {
        noise_at(state, Site::System(q), GateKind::Controlled);
    }
    state.ancilla_rz(params.theta);
    noise_at(state, Site::Ancilla, GateKind::SingleQubit);
    state.ancilla_hadamard();
    noise_at(state, Site::Ancilla, GateKind::SingleQubit);
    Ok(())
}

/// One sampled layer (without the feedback mixer).
pub fn hadamard_test_iteration(
    state: &mut AncillaBranchState,
    table: &EnergyTable,
    params: &FilterParameters,
    rng: &mut TrajectoryRng,
    noise: &NoiseSpec,
    layer: usize,
) -> Result<IterationTrace> {
    interfere(state, table, params, Some((&mut *rng, noise)))?;
    let m = state.measure_ancilla(rng, noise)?;
    Ok(IterationTrace {
        layer,
        p0: m.p0,
        outcome: m.outcome,
        forced: false,
        mixer_applied: false,
        p_good_after: p_good(state.system(), table),
        energy_after: system_energy(state.system(), table),
        state_norm_check: state.norm_sqr(),
    })
}

/// One noiseless layer with the ancilla outcome imposed.
pub fn hadamard_test_iteration_forced(
    state: &mut AncillaBranchState,
    table: &EnergyTable,
    params: &FilterParameters,
    outcome: u8,
    layer: usize,
) -> Result<IterationTrace> {
    interfere(state, table, params, None)?;
    let p0 = sv::norm_sqr(state.branch0()) / state.norm_sqr();
    state.collapse_ancilla(outcome)?;
    Ok(IterationTrace {
        layer,
        p0,
        outcome,
        forced: true,
        mixer_applied: false,
        p_good_after: p_good(state.system(), table),
        energy_after: system_energy(state.system(), table),
        state_norm_check: state.norm_sqr(),
    })
}

/// Per-shot record of a trajectory run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub shot: usize,
    pub traces: Vec<IterationTrace>,
    /// Exact ground-space probability of the final system state.
    pub final_p_good: f64,
    /// Final computational-basis readout of the system register.
    pub sample: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostselectRecord {
    pub traces: Vec<IterationTrace>,
    pub final_coeffs: Vec<Complex64>,
    /// `Π p0` over all layers.
    pub success_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplificationRun {
    pub mode: Mode,
    pub params: FilterParameters,
    pub n_layers: usize,
    pub initial_p_good: f64,
    /// Filled in trajectory mode.
    pub shots: Vec<ShotRecord>,
    /// Filled in postselect and analytic modes.
    pub postselect: Option<PostselectRecord>,
}

pub fn run_amplification(table: &EnergyTable, cfg: &RunConfig) -> Result<AmplificationRun> {
    cfg.validate()?;
    let params = cfg.parameters(table)?;
    let initial = init_plus_state(table.n_qubits)?;
    let initial_p_good = p_good(initial.system(), table);
    let mut run = AmplificationRun {
        mode: cfg.mode,
        params,
        n_layers: cfg.n_layers,
        initial_p_good,
        shots: Vec::new(),
        postselect: None,
    };
    match cfg.mode {
        Mode::Trajectory => {
            run.shots = exec::try_map_range(cfg.shots, |shot| {
                run_trajectory(&initial, table, &params, cfg, shot)
            })?;
        }
        Mode::Postselect => {
            let mut state = initial;
            let mut traces = Vec::with_capacity(cfg.n_layers);
            let mut success = 1.0;
            for layer in 1..=cfg.n_layers {
                let tr = hadamard_test_iteration_forced(&mut state, table, &params, 0, layer).map_err(
                    |e| match e {
                        Error::ZeroProbabilityOutcome { probability, .. } => Error::PostselectionDeadEnd {
                            layer,
                            p0: probability,
                        },
                        other => other,
                    },
                )?;
                success *= tr.p0;
                traces.push(tr);
            }
            run.postselect = Some(PostselectRecord {
                traces,
                final_coeffs: state.system().to_vec(),
                success_probability: success,
            });
        }
        Mode::Analytic => {
            let mut coeffs = initial.system().to_vec();
            let mut traces = Vec::with_capacity(cfg.n_layers);
            let mut success = 1.0;
            for layer in 1..=cfg.n_layers {
                let (next, p0) = analytic_filter(&coeffs, table, 0).map_err(|e| match e {
                    Error::ZeroProbabilityOutcome { probability, .. } => Error::PostselectionDeadEnd {
                        layer,
                        p0: probability,
                    },
                    other => other,
                })?;
                coeffs = next;
                success *= p0;
                traces.push(IterationTrace {
                    layer,
                    p0,
                    outcome: 0,
                    forced: true,
                    mixer_applied: false,
                    p_good_after: p_good(&coeffs, table),
                    energy_after: system_energy(&coeffs, table),
                    state_norm_check: sv::norm_sqr(&coeffs),
                });
            }
            run.postselect = Some(PostselectRecord {
                traces,
                final_coeffs: coeffs,
                success_probability: success,
            });
        }
    }
    Ok(run)
}

fn run_trajectory(
    initial: &AncillaBranchState,
    table: &EnergyTable,
    params: &FilterParameters,
    cfg: &RunConfig,
    shot: usize,
) -> Result<ShotRecord> {
    let mut rng = TrajectoryRng::new(cfg.seed, shot as u64);
    let mut state = initial.clone();
    let mut traces = Vec::with_capacity(cfg.n_layers);
    for layer in 1..=cfg.n_layers {
        let mut tr = hadamard_test_iteration(&mut state, table, params, &mut rng, &cfg.noise, layer)?;
        if tr.outcome == 1 {
            state.mixer_rx_all(cfg.mixer_angle);
            for q in 0..state.n_qubits() {
                state.apply_noise_channel(Site::System(q), GateKind::SingleQubit, &mut rng, &cfg.noise);
            }
            tr.mixer_applied = true;
            tr.p_good_after = p_good(state.system(), table);
            tr.energy_after = system_energy(state.system(), table);
            tr.state_norm_check = state.norm_sqr();
        }
        traces.push(tr);
    }
    Ok(ShotRecord {
        shot,
        traces,
        final_p_good: p_good(state.system(), table),
        sample: state.sample_system(&mut rng),
    })
}

/// Number of forced-0 circuit layers until `P_good ≥ threshold`, or `None`
/// if it is not reached within `horizon` layers. Zero when the uniform start
/// already qualifies.
pub fn layers_to_threshold(
    table: &EnergyTable,
    params: &FilterParameters,
    threshold: f64,
    horizon: usize,
) -> Result<Option<usize>> {
    let mut state = init_plus_state(table.n_qubits)?;
    if p_good(state.system(), table) >= threshold {
        return Ok(Some(0));
    }
    for layer in 1..=horizon {
        let tr = hadamard_test_iteration_forced(&mut state, table, params, 0, layer)?;
        if tr.p_good_after >= threshold {
            return Ok(Some(layer));
        }
    }
    Ok(None)
}

impl AmplificationRun {
    /// Exact final P_good: averaged over shots in trajectory mode.
    pub fn final_p_good(&self) -> f64 {
        match &self.postselect {
            Some(ps) => ps.traces.last().map_or(self.initial_p_good, |t| t.p_good_after),
            None => crate::stats::mean(&self.shots.iter().map(|s| s.final_p_good).collect::<Vec<_>>()),
        }
    }

    /// Fraction of final system readouts that are optimal (trajectory mode).
    pub fn sampled_p_good(&self, table: &EnergyTable) -> Option<f64> {
        if self.shots.is_empty() {
            return None;
        }
        let samples: Vec<usize> = self.shots.iter().map(|s| s.sample).collect();
        Some(p_good_samples(&samples, table))
    }

    /// Mean P_good per layer, index 0 being the uniform start.
    pub fn mean_p_good_by_layer(&self) -> Vec<f64> {
        let mut out = vec![self.initial_p_good];
        if let Some(ps) = &self.postselect {
            out.extend(ps.traces.iter().map(|t| t.p_good_after));
        } else {
            for layer in 0..self.n_layers {
                let xs: Vec<f64> = self.shots.iter().map(|s| s.traces[layer].p_good_after).collect();
                out.push(crate::stats::mean(&xs));
            }
        }
        out
    }

    /// Histogram of final readouts.
    pub fn sample_counts(&self) -> BTreeMap<usize, u64> {
        let mut counts = BTreeMap::new();
        for s in &self.shots {
            *counts.entry(s.sample).or_insert(0) += 1;
        }
        counts
    }

    /// Total shots consumed: one circuit execution per trajectory.
    pub fn total_shots(&self) -> usize {
        self.shots.len()
    }

    /// CSV `shot,layer,p0,outcome,p_good`. Postselected runs use shot 0.
    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["shot", "layer", "p0", "outcome", "p_good"])?;
        let mut row = |shot: usize, t: &IterationTrace| {
            wtr.write_record([
                shot.to_string(),
                t.layer.to_string(),
                t.p0.to_string(),
                t.outcome.to_string(),
                t.p_good_after.to_string(),
            ])
        };
        if let Some(ps) = &self.postselect {
            for t in &ps.traces {
                row(0, t)?;
            }
        }
        for s in &self.shots {
            for t in &s.traces {
                row(s.shot, t)?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// CSV `bitstring,count` of final readouts, ascending by basis index.
    pub fn write_samples_csv<W: Write>(&self, n_qubits: usize, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["bitstring", "count"])?;
        for (k, c) in self.sample_counts() {
            wtr.write_record([bitstring_label(k, n_qubits), c.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}
