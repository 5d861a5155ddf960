//! Data-parallel paths against a one-thread pool. Build with
//! `--no-default-features` to bench the plain sequential fallback.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use midmeasure::amplifier::{run_amplification, RunConfig};
use midmeasure::experiments::random_connected_graph;
use midmeasure::qaoa::{qaoa_optimize, QaoaConfig};
use midmeasure::qubo::{build_energy_table, build_vertex_cover_qubo, BoundsMode, EnergyTable};
use midmeasure::{Graph, NoiseSpec, TrajectoryRng};

fn graph(n: usize) -> Graph {
    random_connected_graph(n, 0.5, &mut TrajectoryRng::new(1, n as u64)).unwrap()
}

fn table(n: usize) -> EnergyTable {
    let q = build_vertex_cover_qubo(&graph(n), 1.0, 2.0).unwrap();
    build_energy_table(&q, BoundsMode::Exact).unwrap()
}

#[cfg(feature = "parallel")]
fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    vec![("1-thread", one), ("all-threads", all)]
}

#[cfg(feature = "parallel")]
fn compare<R: Send>(c: &mut Criterion, group: &str, sizes: &[usize], f: impl Fn(usize) -> R + Sync) {
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    for (label, pool) in pools() {
        for &n in sizes {
            g.bench_with_input(BenchmarkId::new(label, n), &n, |b, &n| {
                b.iter(|| pool.install(|| f(n)))
            });
        }
    }
    g.finish();
}

#[cfg(not(feature = "parallel"))]
fn compare<R: Send>(c: &mut Criterion, group: &str, sizes: &[usize], f: impl Fn(usize) -> R + Sync) {
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    for &n in sizes {
        g.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, &n| b.iter(|| f(n)));
    }
    g.finish();
}

fn energy_table(c: &mut Criterion) {
    let qubos: Vec<_> = (0..=20)
        .map(|n| {
            if n < 12 {
                None
            } else {
                Some(build_vertex_cover_qubo(&graph(n), 1.0, 2.0).unwrap())
            }
        })
        .collect();
    compare(c, "energy_table", &[12, 16, 20], |n| {
        build_energy_table(qubos[n].as_ref().unwrap(), BoundsMode::Exact).unwrap()
    });
}

fn trajectories(c: &mut Criterion) {
    let tables: Vec<_> = [4, 8, 10].map(table).into();
    let cfg = RunConfig {
        n_layers: 20,
        shots: 256,
        noise: NoiseSpec {
            depolarizing_1q: 0.001,
            depolarizing_2q: 0.01,
            readout_flip: 0.02,
            protect_ancilla: false,
        },
        ..RunConfig::default()
    };
    compare(c, "trajectories", &[4, 8, 10], |n| {
        let t = tables.iter().find(|t| t.n_qubits == n).unwrap();
        run_amplification(t, &cfg).unwrap()
    });
}

fn qaoa_gradients(c: &mut Criterion) {
    let tables: Vec<_> = [6, 10].map(table).into();
    let cfg = QaoaConfig {
        steps: 5,
        ..QaoaConfig::default()
    };
    compare(c, "qaoa_gradients", &[6, 10], |n| {
        let t = tables.iter().find(|t| t.n_qubits == n).unwrap();
        qaoa_optimize(t, &cfg).unwrap()
    });
}

criterion_group!(benches, energy_table, trajectories, qaoa_gradients);
criterion_main!(benches);
