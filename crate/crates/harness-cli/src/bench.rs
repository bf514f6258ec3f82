//! Wall-clock comparison of greedy admission and the cross-entropy search.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use jcc_core::market::admit;
use jcc_core::oracles::{cross_entropy_admission, CrossEntropyParams};
use jcc_core::scenario::{market_instance, InstanceConfig, MarketInstance};

use crate::median;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n_users: usize,
    pub method: String,
    pub seed: u64,
    pub reps: usize,
    pub median_s: f64,
}

/// Instance with about 25 bidders per station and 4 stations per cloud.
pub fn bench_instance(n_users: usize, seed: u64) -> MarketInstance {
    let n_stations = (n_users / 25).max(1);
    let config = InstanceConfig {
        n_users,
        n_stations,
        n_clouds: (n_stations / 4).max(1),
        ..InstanceConfig::default()
    };
    market_instance(&config, seed)
}

fn time<F: FnMut()>(reps: usize, mut f: F) -> f64 {
    let samples: Vec<f64> = (0..reps.max(1))
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed().as_secs_f64()
        })
        .collect();
    median(&samples)
}

pub fn time_admit(inst: &MarketInstance, reps: usize) -> f64 {
    time(reps, || {
        std::hint::black_box(admit(&inst.demands, &inst.topology, &inst.catalog).unwrap());
    })
}

pub fn time_cross_entropy(inst: &MarketInstance, reps: usize, params: &CrossEntropyParams) -> f64 {
    time(reps, || {
        std::hint::black_box(cross_entropy_admission(&inst.demands, &inst.topology, &inst.catalog, params).unwrap());
    })
}

/// Median-of-`reps` runtimes per size, method and seed. Cross-entropy is
/// skipped above `ce_max_users`.
pub fn run_bench(
    sizes: &[usize],
    seeds: &[u64],
    reps: usize,
    ce: &CrossEntropyParams,
    ce_max_users: usize,
) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    for &n in sizes {
        for &seed in seeds {
            let inst = bench_instance(n, seed);
            rows.push(BenchRow { n_users: n, method: "greedy".into(), seed, reps, median_s: time_admit(&inst, reps) });
            if n <= ce_max_users {
                let params = CrossEntropyParams { seed, ..*ce };
                rows.push(BenchRow {
                    n_users: n,
                    method: "ce".into(),
                    seed,
                    reps,
                    median_s: time_cross_entropy(&inst, reps, &params),
                });
            }
        }
    }
    rows
}

/// Least-squares slope of `ln t` against `ln n`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(n, t)| *n > 0.0 && *t > 0.0).map(|(n, t)| (n.ln(), t.ln())).collect();
    let k = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [10.0, 100.0, 1000.0].iter().map(|&n: &f64| (n, 3e-7 * n.powf(1.2))).collect();
        assert!((loglog_slope(&pts) - 1.2).abs() < 1e-9);
    }

    #[test]
    fn rows_per_cell() {
        let ce = CrossEntropyParams { iterations: 2, population: 10, ..CrossEntropyParams::default() };
        let rows = run_bench(&[50, 200], &[0], 1, &ce, 100);
        let tags: Vec<_> = rows.iter().map(|r| (r.n_users, r.method.as_str())).collect();
        assert_eq!(tags, vec![(50, "greedy"), (50, "ce"), (200, "greedy")]);
    }
}
