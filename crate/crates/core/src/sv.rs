//! Pure-state engine for one ancilla plus an `n`-qubit system register.
//!
//! The joint state `|0⟩⊗|b0⟩ + |1⟩⊗|b1⟩` is held as the two system-sized
//! branch vectors `b0` and `b1`. The ancilla is the only qubit that controls
//! anything or is measured, so every operation touches either one branch, both
//! branches pointwise, or each branch separately.
//!
//! Basis index bit `i` is system qubit `i`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{EnergyTable, DEFAULT_BRUTE_FORCE_CAP};
use crate::rng::TrajectoryRng;

/// Branch norms below this are treated as impossible outcomes.
pub const VANISHING_PROBABILITY: f64 = 1e-15;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    Ancilla,
    System(usize),
}

/// Which depolarizing rate applies to a noise location.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    SingleQubit,
    Controlled,
}

/// Stochastic noise applied along a trajectory.
///
/// Depolarizing noise is unravelled: after a gate, with the configured
/// probability a uniformly random Pauli hits the site. `protect_ancilla`
/// switches off every ancilla error, including readout.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub depolarizing_1q: f64,
    pub depolarizing_2q: f64,
    pub readout_flip: f64,
    pub protect_ancilla: bool,
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("depolarizing_1q", self.depolarizing_1q),
            ("depolarizing_2q", self.depolarizing_2q),
            ("readout_flip", self.readout_flip),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{name} = {p} is not in [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.depolarizing_1q == 0.0 && self.depolarizing_2q == 0.0 && self.readout_flip == 0.0
    }

    pub fn with_protected_ancilla(mut self, protect: bool) -> Self {
        self.protect_ancilla = protect;
        self
    }

    fn rate(&self, site: Site, kind: GateKind) -> f64 {
        if site == Site::Ancilla && self.protect_ancilla {
            return 0.0;
        }
        match kind {
            GateKind::SingleQubit => self.depolarizing_1q,
            GateKind::Controlled => self.depolarizing_2q,
        }
    }
}

/// Result of an ancilla readout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    /// What the classical controller sees (possibly flipped by readout noise).
    pub outcome: u8,
    /// Which branch the state actually collapsed onto.
    pub true_outcome: u8,
    /// `‖b0‖²` before collapse.
    pub p0: f64,
}

// ---- register-level primitives, shared with the ancilla-free QAOA state ----

pub(crate) fn check_register(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidConfig("register needs at least one qubit".into()));
    }
    if n > DEFAULT_BRUTE_FORCE_CAP {
        return Err(Error::TooManyQubits {
            n,
            cap: DEFAULT_BRUTE_FORCE_CAP,
        });
    }
    Ok(())
}

/// `|+⟩^⊗n`.
pub fn uniform_superposition(n: usize) -> Result<Vec<Complex64>> {
    check_register(n)?;
    let dim = 1usize << n;
    let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
    Ok(vec![a; dim])
}

/// `amps[k] *= e^{-i·E_k·t}`.
pub fn apply_diagonal_phase(amps: &mut [Complex64], energies: &[f64], t: f64) {
    debug_assert_eq!(amps.len(), energies.len());
    for (a, &e) in amps.iter_mut().zip(energies) {
        *a *= Complex64::from_polar(1.0, -e * t);
    }
}

/// `R_x(angle) = cos(angle/2)·I − i·sin(angle/2)·X` on one qubit.
pub fn apply_rx(amps: &mut [Complex64], qubit: usize, angle: f64) {
    let c = Complex64::new((angle / 2.0).cos(), 0.0);
    let ms = Complex64::new(0.0, -(angle / 2.0).sin());
    let stride = 1usize << qubit;
    for block in amps.chunks_exact_mut(stride << 1) {
        let (lo, hi) = block.split_at_mut(stride);
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a, *b);
            *a = c * x + ms * y;
            *b = ms * x + c * y;
        }
    }
}

/// `R_x(angle)` on every qubit of an `n`-qubit register.
pub fn apply_rx_all(amps: &mut [Complex64], n: usize, angle: f64) {
    for q in 0..n {
        apply_rx(amps, q, angle);
    }
}

pub fn apply_pauli(amps: &mut [Complex64], qubit: usize, pauli: Pauli) {
    let stride = 1usize << qubit;
    for block in amps.chunks_exact_mut(stride << 1) {
        let (lo, hi) = block.split_at_mut(stride);
        match pauli {
            Pauli::X => lo.swap_with_slice(hi),
            Pauli::Z => hi.iter_mut().for_each(|b| *b = -*b),
            Pauli::Y => {
                for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = -I * y;
                    *b = I * x;
                }
            }
        }
    }
}

pub fn norm_sqr(amps: &[Complex64]) -> f64 {
    amps.iter().map(Complex64::norm_sqr).sum()
}

/// Draw a basis index with probability `weights[k] / Σ weights`.
pub fn sample_index(weights: impl IntoIterator<Item = f64>, total: f64, rng: &mut TrajectoryRng) -> usize {
    let target = rng.uniform() * total;
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (k, w) in weights.into_iter().enumerate() {
        if w > 0.0 {
            last_nonzero = k;
        }
        acc += w;
        if target < acc {
            return k;
        }
    }
    last_nonzero
}

/// Joint ancilla ⊗ system pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct AncillaBranchState {
    n_qubits: usize,
    branch0: Vec<Complex64>,
    branch1: Vec<Complex64>,
}

/// `|+⟩^⊗n ⊗ |0⟩_anc`.
pub fn init_plus_state(n: usize) -> Result<AncillaBranchState> {
    let branch0 = uniform_superposition(n)?;
    Ok(AncillaBranchState {
        n_qubits: n,
        branch1: vec![ZERO; branch0.len()],
        branch0,
    })
}

impl AncillaBranchState {
    /// Ancilla in `|0⟩`, system in `coeffs` (must be normalised).
    pub fn from_system(coeffs: Vec<Complex64>) -> Result<Self> {
        Self::from_branches(coeffs.clone(), vec![ZERO; coeffs.len()])
    }

    pub fn from_branches(branch0: Vec<Complex64>, branch1: Vec<Complex64>) -> Result<Self> {
        let len = branch0.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "branch length {len} is not a power of two >= 2"
            )));
        }
        if branch1.len() != len {
            return Err(Error::SizeMismatch {
                expected: len,
                got: branch1.len(),
            });
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_register(n_qubits)?;
        let norm = norm_sqr(&branch0) + norm_sqr(&branch1);
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("state norm² is {norm}, expected 1")));
        }
        Ok(Self {
            n_qubits,
            branch0,
            branch1,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.branch0.len()
    }

    pub fn branch0(&self) -> &[Complex64] {
        &self.branch0
    }

    pub fn branch1(&self) -> &[Complex64] {
        &self.branch1
    }

    /// System amplitudes when the ancilla is in `|0⟩`.
    pub fn system(&self) -> &[Complex64] {
        &self.branch0
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.branch0) + norm_sqr(&self.branch1)
    }

    /// Marginal probability of each system basis state.
    pub fn system_probabilities(&self) -> Vec<f64> {
        self.branch0
            .iter()
            .zip(&self.branch1)
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .collect()
    }

    pub fn ancilla_hadamard(&mut self) {
        let h = FRAC_1_SQRT_2;
        for (a, b) in self.branch0.iter_mut().zip(self.branch1.iter_mut()) {
            let (x, y) = (*a, *b);
            *a = (x + y) * h;
            *b = (x - y) * h;
        }
    }

    /// `R_z(θ) = diag(e^{-iθ/2}, e^{iθ/2})` on the ancilla.
    pub fn ancilla_rz(&mut self, theta: f64) {
        let p0 = Complex64::from_polar(1.0, -theta / 2.0);
        let p1 = Complex64::from_polar(1.0, theta / 2.0);
        self.branch0.iter_mut().for_each(|a| *a *= p0);
        self.branch1.iter_mut().for_each(|b| *b *= p1);
    }

    /// Ancilla-controlled `e^{-iHt}` for diagonal `H`: only `b1` is touched.
    pub fn controlled_phase_evolution(&mut self, table: &EnergyTable, t: f64) -> Result<()> {
        if table.energies.len() != self.dim() {
            return Err(Error::SizeMismatch {
                expected: self.dim(),
                got: table.energies.len(),
            });
        }
        apply_diagonal_phase(&mut self.branch1, &table.energies, t);
        Ok(())
    }

    /// `R_x(angle)` on every system qubit; leaves the ancilla alone.
    pub fn mixer_rx_all(&mut self, angle: f64) {
        apply_rx_all(&mut self.branch0, self.n_qubits, angle);
        apply_rx_all(&mut self.branch1, self.n_qubits, angle);
    }

    pub fn apply_pauli(&mut self, site: Site, pauli: Pauli) {
        match site {
            Site::System(q) => {
                apply_pauli(&mut self.branch0, q, pauli);
                apply_pauli(&mut self.branch1, q, pauli);
            }
            Site::Ancilla => match pauli {
                Pauli::X => std::mem::swap(&mut self.branch0, &mut self.branch1),
                Pauli::Z => self.branch1.iter_mut().for_each(|b| *b = -*b),
                Pauli::Y => {
                    std::mem::swap(&mut self.branch0, &mut self.branch1);
                    self.branch0.iter_mut().for_each(|a| *a *= -I);
                    self.branch1.iter_mut().for_each(|b| *b *= I);
                }
            },
        }
    }

    /// Depolarizing error after a gate at `site`. Returns the Pauli applied,
    /// if any. No random draw is consumed when the effective rate is zero.
    pub fn apply_noise_channel(
        &mut self,
        site: Site,
        kind: GateKind,
        rng: &mut TrajectoryRng,
        noise: &NoiseSpec,
    ) -> Option<Pauli> {
        let p = noise.rate(site, kind);
        if !rng.bernoulli(p) {
            return None;
        }
        let pauli = Pauli::ALL[rng.below(3)];
        self.apply_pauli(site, pauli);
        Some(pauli)
    }

    fn branch_probabilities(&self) -> Result<(f64, f64)> {
        let n0 = norm_sqr(&self.branch0);
        let n1 = norm_sqr(&self.branch1);
        if n0 < VANISHING_PROBABILITY && n1 < VANISHING_PROBABILITY {
            return Err(Error::DegenerateState);
        }
        Ok((n0, n1))
    }

    /// Project the ancilla onto `outcome`, renormalise, and reset it to `|0⟩`.
    /// Returns the probability the outcome had.
    pub fn collapse_ancilla(&mut self, outcome: u8) -> Result<f64> {
        let (n0, n1) = self.branch_probabilities()?;
        let p = if outcome == 0 { n0 } else { n1 } / (n0 + n1);
        if p < VANISHING_PROBABILITY {
            return Err(Error::ZeroProbabilityOutcome {
                outcome,
                probability: p,
            });
        }
        if outcome != 0 {
            std::mem::swap(&mut self.branch0, &mut self.branch1);
        }
        let scale = 1.0 / (if outcome == 0 { n0 } else { n1 }).sqrt();
        self.branch0.iter_mut().for_each(|a| *a *= scale);
        self.branch1.iter_mut().for_each(|b| *b = ZERO);
        Ok(p)
    }

    /// Born-rule ancilla readout with collapse and reset.
    ///
    /// Readout noise flips the reported bit only; the collapse follows the
    /// true outcome.
    pub fn measure_ancilla(&mut self, rng: &mut TrajectoryRng, noise: &NoiseSpec) -> Result<Measurement> {
        let (n0, n1) = self.branch_probabilities()?;
        let p0 = n0 / (n0 + n1);
        let true_outcome = if rng.uniform() < p0 { 0 } else { 1 };
        self.collapse_ancilla(true_outcome)?;
        let flip = !noise.protect_ancilla && rng.bernoulli(noise.readout_flip);
        Ok(Measurement {
            outcome: true_outcome ^ u8::from(flip),
            true_outcome,
            p0,
        })
    }

    /// Measure the system register in the computational basis (no collapse).
    pub fn sample_system(&self, rng: &mut TrajectoryRng) -> usize {
        let total = self.norm_sqr();
        sample_index(
            self.branch0
                .iter()
                .zip(&self.branch1)
                .map(|(a, b)| a.norm_sqr() + b.norm_sqr()),
            total,
            rng,
        )
    }

    /// CSV `basis_index,re0,im0,re1,im1`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["basis_index", "re0", "im0", "re1", "im1"])?;
        for (k, (a, b)) in self.branch0.iter().zip(&self.branch1).enumerate() {
            wtr.write_record([
                k.to_string(),
                a.re.to_string(),
                a.im.to_string(),
                b.re.to_string(),
                b.im.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() < tol)
    }

    #[test]
    fn plus_state() {
        let s = init_plus_state(1).unwrap();
        assert!(close(s.branch0(), &[c(FRAC_1_SQRT_2, 0.0); 2], 1e-15));
        assert!(s.branch1().iter().all(|b| *b == ZERO));
        let s = init_plus_state(2).unwrap();
        assert!(s.branch0().iter().all(|a| (a - c(0.5, 0.0)).norm() < 1e-15));
        let s = init_plus_state(4).unwrap();
        assert_eq!(s.dim(), 16);
        assert!(s.branch0().iter().all(|a| (a - c(0.25, 0.0)).norm() < 1e-15));
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(init_plus_state(0).is_err());
        assert!(matches!(init_plus_state(25), Err(Error::TooManyQubits { .. })));
    }

    #[test]
    fn hadamard_cases() {
        let psi = vec![c(0.6, 0.0), c(0.0, 0.8)];
        let mut s = AncillaBranchState::from_system(psi.clone()).unwrap();
        s.ancilla_hadamard();
        let half: Vec<_> = psi.iter().map(|a| a * FRAC_1_SQRT_2).collect();
        assert!(close(s.branch0(), &half, 1e-15));
        assert!(close(s.branch1(), &half, 1e-15));
        s.ancilla_hadamard();
        assert!(close(s.branch0(), &psi, 1e-12));

        let mut s = AncillaBranchState::from_branches(vec![ZERO; 2], psi.clone()).unwrap();
        s.ancilla_hadamard();
        let neg: Vec<_> = half.iter().map(|a| -a).collect();
        assert!(close(s.branch0(), &half, 1e-15));
        assert!(close(s.branch1(), &neg, 1e-15));
    }

    #[test]
    fn rz_cases() {
        let mut s = init_plus_state(1).unwrap();
        s.ancilla_hadamard();
        let before = s.clone();
        s.ancilla_rz(0.0);
        assert_eq!(s, before);

        // 2π: both branches pick up −1, a global phase
        s.ancilla_rz(2.0 * PI);
        let neg0: Vec<_> = before.branch0().iter().map(|a| -a).collect();
        let neg1: Vec<_> = before.branch1().iter().map(|a| -a).collect();
        assert!(close(s.branch0(), &neg0, 1e-12));
        assert!(close(s.branch1(), &neg1, 1e-12));

        let mut s = before.clone();
        s.ancilla_rz(PI);
        // relative phase e^{iπ} = −1 between the branches
        for (a, b) in s.branch0().iter().zip(s.branch1()) {
            let ratio = b / a;
            let ratio0 = before.branch1()[0] / before.branch0()[0];
            assert!((ratio + ratio0).norm() < 1e-12);
        }
    }

    #[test]
    fn controlled_phase_cases() {
        let table = EnergyTable::from_energies(vec![0.0, 12.0, 3.0, 12.0]).unwrap();
        let mut s = init_plus_state(2).unwrap();
        s.ancilla_hadamard();
        let before = s.clone();
        s.controlled_phase_evolution(&table, 0.0).unwrap();
        assert!(close(s.branch1(), before.branch1(), 1e-15));

        s.controlled_phase_evolution(&table, -PI / 12.0).unwrap();
        assert_eq!(s.branch0(), before.branch0());
        let b = before.branch1();
        assert!((s.branch1()[0] - b[0]).norm() < 1e-15);
        assert!((s.branch1()[1] + b[1]).norm() < 1e-12);
        assert!((s.branch1()[3] + b[3]).norm() < 1e-12);
        let expect = b[2] * Complex64::from_polar(1.0, PI / 4.0);
        assert!((s.branch1()[2] - expect).norm() < 1e-12);

        let flat = EnergyTable::from_energies(vec![5.0; 4]).unwrap();
        let mut s = before.clone();
        s.controlled_phase_evolution(&flat, 0.3).unwrap();
        let g = Complex64::from_polar(1.0, -1.5);
        let expect: Vec<_> = before.branch1().iter().map(|b| b * g).collect();
        assert!(close(s.branch1(), &expect, 1e-12));

        let wrong = EnergyTable::from_energies(vec![0.0; 8]).unwrap();
        assert!(matches!(
            s.controlled_phase_evolution(&wrong, 1.0),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn measurement_deterministic_cases() {
        let noise = NoiseSpec::noiseless();
        let mut rng = TrajectoryRng::new(0, 0);
        let mut s = init_plus_state(2).unwrap();
        let before = s.clone();
        let m = s.measure_ancilla(&mut rng, &noise).unwrap();
        assert_eq!((m.outcome, m.p0), (0, 1.0));
        assert!(close(s.branch0(), before.branch0(), 1e-15));

        let psi = uniform_superposition(2).unwrap();
        let mut s = AncillaBranchState::from_branches(vec![ZERO; 4], psi.clone()).unwrap();
        let m = s.measure_ancilla(&mut rng, &noise).unwrap();
        assert_eq!((m.outcome, m.p0), (1, 0.0));
        assert!(close(s.branch0(), &psi, 1e-15));
        assert!(s.branch1().iter().all(|b| *b == ZERO));
    }

    #[test]
    fn measurement_frequency() {
        let noise = NoiseSpec::noiseless();
        let mut base = init_plus_state(1).unwrap();
        base.ancilla_hadamard();
        let mut zeros = 0usize;
        let draws = 100_000;
        for i in 0..draws {
            let mut rng = TrajectoryRng::new(7, i as u64);
            let mut s = base.clone();
            let m = s.measure_ancilla(&mut rng, &noise).unwrap();
            assert!((m.p0 - 0.5).abs() < 1e-12);
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
            zeros += usize::from(m.outcome == 0);
        }
        let f = zeros as f64 / draws as f64;
        assert!((f - 0.5).abs() < 0.01, "frequency {f}");
    }

    #[test]
    fn degenerate_state_rejected() {
        let mut s = init_plus_state(1).unwrap();
        s.branch0.iter_mut().for_each(|a| *a = ZERO);
        let mut rng = TrajectoryRng::new(0, 0);
        assert!(matches!(
            s.measure_ancilla(&mut rng, &NoiseSpec::noiseless()),
            Err(Error::DegenerateState)
        ));
    }

    #[test]
    fn forced_collapse_of_empty_branch_fails() {
        let mut s = init_plus_state(2).unwrap();
        assert!(matches!(
            s.collapse_ancilla(1),
            Err(Error::ZeroProbabilityOutcome { outcome: 1, .. })
        ));
    }

    #[test]
    fn readout_flip_changes_report_not_collapse() {
        let noise = NoiseSpec {
            readout_flip: 1.0,
            ..NoiseSpec::default()
        };
        let mut rng = TrajectoryRng::new(0, 0);
        let mut s = init_plus_state(1).unwrap();
        let m = s.measure_ancilla(&mut rng, &noise).unwrap();
        assert_eq!((m.outcome, m.true_outcome), (1, 0));

        let mut s = init_plus_state(1).unwrap();
        let m = s
            .measure_ancilla(&mut rng, &noise.with_protected_ancilla(true))
            .unwrap();
        assert_eq!((m.outcome, m.true_outcome), (0, 0));
    }

    #[test]
    fn mixer_cases() {
        let mut s = init_plus_state(3).unwrap();
        s.ancilla_hadamard();
        let before = s.clone();
        s.mixer_rx_all(0.0);
        assert!(close(s.branch0(), before.branch0(), 1e-15));

        s.mixer_rx_all(2.0 * PI);
        // R_x(2π) = −I per qubit; three qubits give −1 overall
        let neg: Vec<_> = before.branch0().iter().map(|a| -a).collect();
        assert!(close(s.branch0(), &neg, 1e-12));

        let mut amps = vec![c(1.0, 0.0), ZERO];
        apply_rx(&mut amps, 0, PI / 2.0);
        assert!(close(
            &amps,
            &[c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2)],
            1e-15
        ));
    }

    #[test]
    fn noise_channel_cases() {
        let mut rng = TrajectoryRng::new(3, 3);
        let mut s = init_plus_state(2).unwrap();
        s.ancilla_hadamard();
        let before = s.clone();

        let off = NoiseSpec::noiseless();
        for q in 0..2 {
            assert_eq!(
                s.apply_noise_channel(Site::System(q), GateKind::SingleQubit, &mut rng, &off),
                None
            );
        }
        assert_eq!(s, before);

        let always = NoiseSpec {
            depolarizing_1q: 1.0,
            depolarizing_2q: 1.0,
            readout_flip: 1.0,
            protect_ancilla: true,
        };
        for _ in 0..10 {
            assert_eq!(
                s.apply_noise_channel(Site::Ancilla, GateKind::Controlled, &mut rng, &always),
                None
            );
        }
        assert_eq!(s, before);

        // |0⟩ on qubit 0 of a product state: X or Y move it, Z only phases.
        let mut amps = vec![c(1.0, 0.0), ZERO];
        amps.extend([ZERO, ZERO]);
        let mut s = AncillaBranchState::from_system(amps).unwrap();
        let p = s
            .apply_noise_channel(Site::System(0), GateKind::SingleQubit, &mut rng, &always)
            .unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        match p {
            Pauli::X | Pauli::Y => assert!(s.branch0()[0].norm() < 1e-15),
            Pauli::Z => assert!((s.branch0()[0] - c(1.0, 0.0)).norm() < 1e-15),
        }
    }

    #[test]
    fn ancilla_paulis_match_matrices() {
        let b0 = vec![c(0.5, 0.1), c(0.2, -0.3)];
        let b1 = vec![c(-0.4, 0.2), c(0.1, 0.0)];
        let n = (norm_sqr(&b0) + norm_sqr(&b1)).sqrt();
        let b0: Vec<_> = b0.iter().map(|a| a / n).collect();
        let b1: Vec<_> = b1.iter().map(|a| a / n).collect();
        let base = AncillaBranchState::from_branches(b0.clone(), b1.clone()).unwrap();

        let mut s = base.clone();
        s.apply_pauli(Site::Ancilla, Pauli::Y);
        // Y|0⟩ = i|1⟩, Y|1⟩ = −i|0⟩
        let e0: Vec<_> = b1.iter().map(|a| -I * a).collect();
        let e1: Vec<_> = b0.iter().map(|a| I * a).collect();
        assert!(close(s.branch0(), &e0, 1e-15));
        assert!(close(s.branch1(), &e1, 1e-15));

        let mut s = base.clone();
        s.apply_pauli(Site::Ancilla, Pauli::X);
        s.apply_pauli(Site::Ancilla, Pauli::Z);
        s.apply_pauli(Site::Ancilla, Pauli::Y);
        // Y·Z·X = i·I
        let ratio = s.branch0()[0] / base.branch0()[0];
        assert!((ratio.norm() - 1.0).abs() < 1e-12);
        for (x, y) in s.branch0().iter().zip(base.branch0()) {
            assert!((x - ratio * y).norm() < 1e-12);
        }
    }

    #[test]
    fn state_csv_dump() {
        let s = init_plus_state(1).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("basis_index,re0,im0,re1,im1\n0,"));
    }
}
