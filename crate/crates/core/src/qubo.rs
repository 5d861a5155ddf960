//! Vertex-cover QUBO in the ±1 encoding and its diagonal energy table.
//!
//! `x_i = +1` puts vertex `i` in the cover. On qubits, `x_i` maps to `Z_i`, so
//! basis state `|0⟩` of qubit `i` is `x_i = +1` and bit `i` of a basis index
//! set to one means vertex `i` is left out.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::graph::Graph;

/// Default limit for full enumeration of `2^n` energies.
pub const DEFAULT_BRUTE_FORCE_CAP: usize = 24;

/// `H = A Σ x_i + B Σ_(u,v) (1 - x_u)(1 - x_v) + offset`, stored expanded as
/// `constant + Σ linear_i x_i + Σ quadratic_uv x_u x_v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboHamiltonian {
    pub a_weight: f64,
    pub b_weight: f64,
    /// `B·|E| + offset`.
    pub constant: f64,
    /// User shift folded into `constant`.
    pub offset: f64,
    /// `A − B·d_i` per vertex.
    pub linear: Vec<f64>,
    /// `(u, v, B)` per edge.
    pub quadratic: Vec<(usize, usize, f64)>,
    pub n_qubits: usize,
}

pub fn build_vertex_cover_qubo(g: &Graph, a_weight: f64, b_weight: f64) -> Result<QuboHamiltonian> {
    if !(a_weight.is_finite() && b_weight.is_finite()) || a_weight <= 0.0 || b_weight <= 0.0 {
        return Err(Error::InvalidWeights(format!(
            "weights must be positive and finite (A = {a_weight}, B = {b_weight})"
        )));
    }
    if b_weight <= a_weight {
        return Err(Error::InvalidWeights(format!(
            "penalty weight B = {b_weight} must exceed A = {a_weight}"
        )));
    }
    let linear = g
        .degrees()
        .into_iter()
        .map(|d| a_weight - b_weight * d as f64)
        .collect();
    let quadratic = g.edges().iter().map(|&(u, v)| (u, v, b_weight)).collect();
    Ok(QuboHamiltonian {
        a_weight,
        b_weight,
        constant: b_weight * g.n_edges() as f64,
        offset: 0.0,
        linear,
        quadratic,
        n_qubits: g.n_vertices(),
    })
}

/// Spin of qubit `i` in basis state `index`.
#[inline]
pub fn spin(index: usize, i: usize) -> f64 {
    if (index >> i) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Render a basis index as a bitstring, qubit 0 first.
pub fn bitstring_label(index: usize, n: usize) -> String {
    (0..n)
        .map(|i| if (index >> i) & 1 == 0 { '0' } else { '1' })
        .collect()
}

/// Inverse of [`bitstring_label`].
pub fn parse_bitstring(s: &str) -> Result<usize> {
    s.chars().enumerate().try_fold(0usize, |acc, (i, c)| match c {
        '0' => Ok(acc),
        '1' => Ok(acc | (1 << i)),
        _ => Err(Error::Parse(format!("bad bit {c:?} in {s:?}"))),
    })
}

/// Basis index of the configuration that puts exactly `cover` in the cover.
pub fn index_of_cover(n: usize, cover: &[usize]) -> usize {
    let mut idx = (1usize << n) - 1;
    for &v in cover {
        idx &= !(1 << v);
    }
    idx
}

impl QuboHamiltonian {
    /// Extra constant shift (e.g. `-1`). Shifts every energy and both bounds.
    pub fn with_offset(mut self, offset: f64) -> Self {
        self.constant += offset - self.offset;
        self.offset = offset;
        self
    }

    pub fn n_edges(&self) -> usize {
        self.quadratic.len()
    }

    /// Energy of a bit assignment, one entry per qubit, `0` ↔ `x = +1`.
    pub fn energy_of(&self, bits: &[u8]) -> Result<f64> {
        if bits.len() != self.n_qubits {
            return Err(Error::SizeMismatch {
                expected: self.n_qubits,
                got: bits.len(),
            });
        }
        let mut index = 0usize;
        for (i, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => index |= 1 << i,
                _ => return Err(Error::Parse(format!("bit {i} is {b}, expected 0 or 1"))),
            }
        }
        Ok(self.energy_at(index))
    }

    /// Energy of basis state `index`.
    pub fn energy_at(&self, index: usize) -> f64 {
        let lin: f64 = self
            .linear
            .iter()
            .enumerate()
            .map(|(i, &h)| h * spin(index, i))
            .sum();
        let quad: f64 = self
            .quadratic
            .iter()
            .map(|&(u, v, j)| j * spin(index, u) * spin(index, v))
            .sum();
        self.constant + lin + quad
    }

    /// `A(2k_min − n)` when `k_min` is known, else `−A·n`; plus the offset.
    pub fn analytic_lower_bound(&self, k_min: Option<usize>) -> f64 {
        let n = self.n_qubits as f64;
        let base = match k_min {
            Some(k) => self.a_weight * (2.0 * k as f64 - n),
            None => -self.a_weight * n,
        };
        base + self.offset
    }

    /// `A·n + 4B·|E|` plus the offset: every linear term and every penalty at
    /// its maximum simultaneously.
    pub fn analytic_upper_bound(&self) -> f64 {
        self.a_weight * self.n_qubits as f64 + 4.0 * self.b_weight * self.n_edges() as f64 + self.offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum BoundsMode {
    /// Bounds equal the enumerated extremes.
    Exact,
    /// Bounds from the problem parameters only; `k_min` is optional prior
    /// knowledge of the minimum cover size.
    Analytic { k_min: Option<usize> },
}

/// All `2^n` energies plus the spectrum bounds used to tune the filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTable {
    pub n_qubits: usize,
    pub energies: Vec<f64>,
    pub e_inf: f64,
    pub e_sup: f64,
    pub ground_energy: f64,
    pub max_energy: f64,
    /// Every argmin index, ascending.
    pub ground_states: Vec<usize>,
}

fn ground_tolerance(energies: &[f64]) -> f64 {
    let scale = energies.iter().fold(1.0f64, |m, e| m.max(e.abs()));
    1e-9 * scale
}

pub fn build_energy_table(q: &QuboHamiltonian, mode: BoundsMode) -> Result<EnergyTable> {
    build_energy_table_with_cap(q, mode, DEFAULT_BRUTE_FORCE_CAP)
}

pub fn build_energy_table_with_cap(q: &QuboHamiltonian, mode: BoundsMode, cap: usize) -> Result<EnergyTable> {
    let n = q.n_qubits;
    if n > cap || n >= usize::BITS as usize {
        return Err(Error::TooManyQubits { n, cap });
    }
    let mut energies = vec![0.0; 1 << n];
    exec::fill_indexed(&mut energies, |i| q.energy_at(i));
    let table = EnergyTable::from_energies_unbounded(n, energies);
    match mode {
        BoundsMode::Exact => Ok(table),
        BoundsMode::Analytic { k_min } => {
            let lo = q.analytic_lower_bound(k_min);
            let hi = q.analytic_upper_bound();
            table.with_bounds(lo, hi)
        }
    }
}

impl EnergyTable {
    fn from_energies_unbounded(n_qubits: usize, energies: Vec<f64>) -> Self {
        let ground_energy = energies.iter().copied().fold(f64::INFINITY, f64::min);
        let max_energy = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tol = ground_tolerance(&energies);
        let ground_states = energies
            .iter()
            .enumerate()
            .filter(|(_, &e)| e - ground_energy <= tol)
            .map(|(i, _)| i)
            .collect();
        Self {
            n_qubits,
            energies,
            e_inf: ground_energy,
            e_sup: max_energy,
            ground_energy,
            max_energy,
            ground_states,
        }
    }

    /// Table from raw energies with exact bounds. Length must be a power of two.
    pub fn from_energies(energies: Vec<f64>) -> Result<Self> {
        let len = energies.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "energy table length {len} is not a power of two >= 2"
            )));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidConfig("non-finite energy in table".into()));
        }
        Ok(Self::from_energies_unbounded(
            len.trailing_zeros() as usize,
            energies,
        ))
    }

    /// Replace the bounds; they must enclose the spectrum.
    pub fn with_bounds(mut self, e_inf: f64, e_sup: f64) -> Result<Self> {
        let tol = ground_tolerance(&self.energies);
        if !(e_inf.is_finite() && e_sup.is_finite()) {
            return Err(Error::InvalidBounds("bounds must be finite".into()));
        }
        if e_inf > self.ground_energy + tol {
            return Err(Error::InvalidBounds(format!(
                "e_inf = {e_inf} exceeds the ground energy {}",
                self.ground_energy
            )));
        }
        if e_sup < self.max_energy - tol {
            return Err(Error::InvalidBounds(format!(
                "e_sup = {e_sup} is below the maximum energy {}",
                self.max_energy
            )));
        }
        self.e_inf = e_inf;
        self.e_sup = e_sup;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn is_ground(&self, index: usize) -> bool {
        self.ground_states.binary_search(&index).is_ok()
    }

    /// Indices whose energy equals the maximum.
    pub fn max_energy_states(&self) -> Vec<usize> {
        let tol = ground_tolerance(&self.energies);
        self.energies
            .iter()
            .enumerate()
            .filter(|(_, &e)| self.max_energy - e <= tol)
            .map(|(i, _)| i)
            .collect()
    }

    /// CSV `bitstring,energy`, one row per basis state in index order.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["bitstring", "energy"])?;
        for (i, e) in self.energies.iter().enumerate() {
            wtr.write_record([bitstring_label(i, self.n_qubits), e.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> QuboHamiltonian {
        build_vertex_cover_qubo(&Graph::four_node_example(), 1.0, 2.0).unwrap()
    }

    #[test]
    fn worked_example_coefficients() {
        let q = example();
        assert_eq!(q.constant, 8.0);
        assert_eq!(q.linear, vec![-5.0, -3.0, -1.0, -3.0]);
        assert_eq!(
            q.quadratic,
            vec![(0, 1, 2.0), (0, 2, 2.0), (0, 3, 2.0), (1, 3, 2.0)]
        );
    }

    #[test]
    fn edgeless_and_triangle() {
        let q = build_vertex_cover_qubo(&Graph::empty(3), 1.0, 2.0).unwrap();
        assert_eq!(q.constant, 0.0);
        assert_eq!(q.linear, vec![1.0; 3]);
        assert!(q.quadratic.is_empty());

        let q = build_vertex_cover_qubo(&Graph::complete(3), 1.0, 2.0).unwrap();
        assert_eq!(q.constant, 6.0);
        assert_eq!(q.linear, vec![-3.0; 3]);
        assert!(q.quadratic.iter().all(|&(_, _, j)| j == 2.0));
    }

    #[test]
    fn weight_validation() {
        let g = Graph::four_node_example();
        assert!(build_vertex_cover_qubo(&g, 0.0, 2.0).is_err());
        assert!(build_vertex_cover_qubo(&g, -1.0, 2.0).is_err());
        assert!(build_vertex_cover_qubo(&g, 1.0, 1.0).is_err());
        assert!(build_vertex_cover_qubo(&g, 2.0, 1.0).is_err());
        assert!(build_vertex_cover_qubo(&g, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn energy_of_worked_configurations() {
        let q = example();
        // bits: 0 ↔ in cover
        assert_eq!(q.energy_of(&[0, 0, 1, 1]).unwrap(), 0.0);
        assert_eq!(q.energy_of(&[0, 1, 1, 0]).unwrap(), 0.0);
        assert_eq!(q.energy_of(&[1, 1, 1, 1]).unwrap(), 28.0);
        assert!(matches!(
            q.energy_of(&[0, 0, 1]),
            Err(Error::SizeMismatch { expected: 4, got: 3 })
        ));
        assert!(q.energy_of(&[0, 0, 1, 2]).is_err());
    }

    #[test]
    fn exact_table_ground_states() {
        let t = build_energy_table(&example(), BoundsMode::Exact).unwrap();
        assert_eq!(t.ground_energy, 0.0);
        assert_eq!(t.max_energy, 28.0);
        assert_eq!(
            t.ground_states,
            vec![index_of_cover(4, &[0, 3]), index_of_cover(4, &[0, 1])]
        );
        assert_eq!((t.e_inf, t.e_sup), (0.0, 28.0));
    }

    #[test]
    fn analytic_bounds() {
        let t = build_energy_table(&example(), BoundsMode::Analytic { k_min: Some(2) }).unwrap();
        assert_eq!(t.e_inf, 0.0);
        assert_eq!(t.e_sup, 36.0);
        let t = build_energy_table(&example(), BoundsMode::Analytic { k_min: None }).unwrap();
        assert_eq!(t.e_inf, -4.0);
    }

    #[test]
    fn single_vertex_table() {
        let q = build_vertex_cover_qubo(&Graph::empty(1), 1.0, 2.0).unwrap();
        let t = build_energy_table(&q, BoundsMode::Exact).unwrap();
        assert_eq!(t.energies, vec![1.0, -1.0]);
        assert_eq!((t.e_inf, t.e_sup), (-1.0, 1.0));
        assert_eq!(t.ground_states, vec![1]);
    }

    #[test]
    fn offset_shifts_everything() {
        let q = example().with_offset(-1.0);
        let t = build_energy_table(&q, BoundsMode::Analytic { k_min: Some(2) }).unwrap();
        assert_eq!(t.ground_energy, -1.0);
        assert_eq!((t.e_inf, t.e_sup), (-1.0, 35.0));
        let q = q.with_offset(0.0);
        assert_eq!(q.constant, 8.0);
    }

    #[test]
    fn cap_enforced() {
        let q = build_vertex_cover_qubo(&Graph::empty(5), 1.0, 2.0).unwrap();
        assert!(matches!(
            build_energy_table_with_cap(&q, BoundsMode::Exact, 4),
            Err(Error::TooManyQubits { n: 5, cap: 4 })
        ));
    }

    #[test]
    fn bounds_must_enclose_spectrum() {
        let t = build_energy_table(&example(), BoundsMode::Exact).unwrap();
        assert!(t.clone().with_bounds(0.5, 28.0).is_err());
        assert!(t.clone().with_bounds(0.0, 12.0).is_err());
        assert!(t.with_bounds(-3.0, 40.0).is_ok());
    }

    #[test]
    fn bitstring_round_trip() {
        assert_eq!(bitstring_label(index_of_cover(4, &[0, 1]), 4), "0011");
        assert_eq!(parse_bitstring("0110").unwrap(), index_of_cover(4, &[0, 3]));
        assert!(parse_bitstring("012").is_err());
    }

    #[test]
    fn csv_export() {
        let t = build_energy_table(&example(), BoundsMode::Exact).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 17);
        assert_eq!(lines[0], "bitstring,energy");
        assert_eq!(lines[1], "0000,4");
        assert_eq!(lines[16], "1111,28");
    }
}
