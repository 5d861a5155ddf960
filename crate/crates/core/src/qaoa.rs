//! Depth-`p` QAOA on the same diagonal energy table, trained by central
//! finite-difference gradient descent.
//!
//! Parameters are laid out per layer as `[γ_1, β_1, γ_2, β_2, …]`; layer `l`
//! applies `e^{-iγ_l H}` then `R_x(β_l)^⊗n`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::amplifier::{p_good, system_energy};
use crate::error::{Error, Result};
use crate::exec;
use crate::qubo::EnergyTable;
use crate::rng::{stream_id, TrajectoryRng};
use crate::sv;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// `⟨H⟩` from the exact state.
    Exact,
    /// `⟨H⟩` as the mean energy of `shots_per_step` sampled bitstrings.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaConfig {
    pub depth: usize,
    pub steps: usize,
    pub shots_per_step: usize,
    pub learning_rate: f64,
    pub fd_step: f64,
    /// `2·depth` angles; drawn uniformly from (−0.1, 0.1) when absent.
    pub init_params: Option<Vec<f64>>,
    pub seed: u64,
    pub expectation: Expectation,
}

impl Default for QaoaConfig {
    fn default() -> Self {
        Self {
            depth: 5,
            steps: 50,
            shots_per_step: 2048,
            learning_rate: 0.05,
            fd_step: 1e-3,
            init_params: None,
            seed: 0,
            expectation: Expectation::Exact,
        }
    }
}

impl QaoaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::InvalidConfig("QAOA depth must be at least 1".into()));
        }
        if self.shots_per_step == 0 {
            return Err(Error::InvalidConfig("shots_per_step must be at least 1".into()));
        }
        if !self.learning_rate.is_finite() || !(self.fd_step.is_finite() && self.fd_step > 0.0) {
            return Err(Error::InvalidConfig(
                "learning_rate must be finite and fd_step positive".into(),
            ));
        }
        if let Some(p) = &self.init_params {
            if p.len() != 2 * self.depth {
                return Err(Error::SizeMismatch {
                    expected: 2 * self.depth,
                    got: p.len(),
                });
            }
        }
        Ok(())
    }

    /// `w × l`.
    pub fn total_shots(&self) -> usize {
        self.steps * self.shots_per_step
    }

    pub fn initial_params(&self) -> Vec<f64> {
        match &self.init_params {
            Some(p) => p.clone(),
            None => {
                let mut rng = TrajectoryRng::new(self.seed, stream_id(&[u64::MAX]));
                (0..2 * self.depth).map(|_| rng.uniform_in(-0.1, 0.1)).collect()
            }
        }
    }
}

pub fn qaoa_state(table: &EnergyTable, params: &[f64]) -> Result<Vec<Complex64>> {
    if params.is_empty() || !params.len().is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "QAOA needs an even, non-zero number of angles, got {}",
            params.len()
        )));
    }
    let n = table.n_qubits;
    let mut amps = sv::uniform_superposition(n)?;
    if amps.len() != table.len() {
        return Err(Error::SizeMismatch {
            expected: amps.len(),
            got: table.len(),
        });
    }
    for layer in params.chunks_exact(2) {
        sv::apply_diagonal_phase(&mut amps, &table.energies, layer[0]);
        sv::apply_rx_all(&mut amps, n, layer[1]);
    }
    Ok(amps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaStep {
    /// 1-based optimizer step.
    pub step: usize,
    pub energy: f64,
    pub p_good: f64,
    pub cumulative_shots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaRun {
    pub init_params: Vec<f64>,
    /// Parameters at the lowest recorded energy (the initial ones if no step ran).
    pub best_params: Vec<f64>,
    pub final_params: Vec<f64>,
    pub history: Vec<QaoaStep>,
    /// `w × l` ledger.
    pub total_shots: usize,
    /// Circuit evaluations spent on finite differences (not in the ledger).
    pub gradient_evaluations: usize,
}

impl QaoaRun {
    pub fn final_p_good(&self, table: &EnergyTable) -> Result<f64> {
        Ok(p_good(&qaoa_state(table, &self.final_params)?, table))
    }

    /// CSV `step,energy,p_good,cumulative_shots`.
    pub fn write_history_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["step", "energy", "p_good", "cumulative_shots"])?;
        for h in &self.history {
            wtr.write_record([
                h.step.to_string(),
                h.energy.to_string(),
                h.p_good.to_string(),
                h.cumulative_shots.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn estimate_energy(table: &EnergyTable, params: &[f64], cfg: &QaoaConfig, stream: u64) -> Result<(f64, f64)> {
    let amps = qaoa_state(table, params)?;
    let pg = p_good(&amps, table);
    let energy = match cfg.expectation {
        Expectation::Exact => system_energy(&amps, table),
        Expectation::Sampled => {
            let probs: Vec<f64> = amps.iter().map(Complex64::norm_sqr).collect();
            let total: f64 = probs.iter().sum();
            let mut rng = TrajectoryRng::new(cfg.seed, stream);
            let sum: f64 = (0..cfg.shots_per_step)
                .map(|_| table.energies[sv::sample_index(probs.iter().copied(), total, &mut rng)])
                .sum();
            sum / cfg.shots_per_step as f64
        }
    };
    Ok((energy, pg))
}

pub fn qaoa_optimize(table: &EnergyTable, cfg: &QaoaConfig) -> Result<QaoaRun> {
    cfg.validate()?;
    let init = cfg.initial_params();
    let n_params = init.len();
    let mut params = init.clone();
    let mut best_params = init.clone();
    let mut best_energy = f64::INFINITY;
    let mut history = Vec::with_capacity(cfg.steps);
    let mut gradient_evaluations = 0;

    for step in 1..=cfg.steps {
        let shifted = exec::try_map_range(2 * n_params, |j| {
            let (i, sign) = (j / 2, if j % 2 == 0 { 1.0 } else { -1.0 });
            let mut p = params.clone();
            p[i] += sign * cfg.fd_step;
            estimate_energy(table, &p, cfg, stream_id(&[step as u64, j as u64])).map(|(e, _)| e)
        })?;
        gradient_evaluations += shifted.len();
        for i in 0..n_params {
            let g = (shifted[2 * i] - shifted[2 * i + 1]) / (2.0 * cfg.fd_step);
            params[i] -= cfg.learning_rate * g;
        }
        let (energy, pg) = estimate_energy(table, &params, cfg, stream_id(&[step as u64, u64::MAX]))?;
        if !energy.is_finite() || params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteEnergy { step, energy });
        }
        if energy < best_energy {
            best_energy = energy;
            best_params.clone_from(&params);
        }
        history.push(QaoaStep {
            step,
            energy,
            p_good: pg,
            cumulative_shots: step * cfg.shots_per_step,
        });
    }

    Ok(QaoaRun {
        init_params: init,
        best_params,
        final_params: params,
        history,
        total_shots: cfg.total_shots(),
        gradient_evaluations,
    })
}
