//! Monte-Carlo experiment engine: i.i.d. Rayleigh-fading channel draws
//! (exponential power gains), scheduling-policy comparisons, and parameter
//! sweeps over access-point power and user count.
//!
//! Randomness is a counter-based stream keyed by `(seed, counter)`: the same
//! realization index always yields the same channels, independent of sweep
//! point, scheme set, execution order, or thread count. Every scheme and
//! policy therefore sees identical draws (paired comparisons), and sweep
//! output is byte-reproducible.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::heuristics;
use crate::model::{positive_finite, Instance, SchedulingPolicy, UserChannel};
use crate::stm::solve_stm;
use crate::ttm::solve_ttm;

// ---------------------------------------------------------------------------
// Counter-based random stream
// ---------------------------------------------------------------------------

/// SplitMix64 output function over the keyed counter state.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw in (0, 1) for a (seed, counter) pair; never 0 or 1 so
/// logarithms stay finite.
pub fn stream_uniform(seed: u64, counter: u64) -> f64 {
    let state = seed.wrapping_add(counter.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let bits = mix64(state);
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Exponential draw with the given mean via inversion.
pub fn stream_exponential(mean: f64, seed: u64, counter: u64) -> f64 {
    -mean * stream_uniform(seed, counter).ln()
}

/// Deterministic pairwise summation in index order; the reduction tree is
/// fixed, so results do not depend on chunking or thread count.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Which optimization problem a sweep exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    Stm,
    Ttm,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Problem::Stm => "stm",
            Problem::Ttm => "ttm",
        })
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stm" => Ok(Problem::Stm),
            "ttm" => Ok(Problem::Ttm),
            other => Err(Error::config(format!("unknown problem '{other}'"))),
        }
    }
}

/// Allocation scheme identifiers used in sweep rows and CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    StmOptimal,
    StmEqual,
    StmFixedTdma,
    TtmOptimal,
    TtmEqual,
    TtmTangent,
}

impl Scheme {
    pub fn problem(self) -> Problem {
        match self {
            Scheme::StmOptimal | Scheme::StmEqual | Scheme::StmFixedTdma => Problem::Stm,
            Scheme::TtmOptimal | Scheme::TtmEqual | Scheme::TtmTangent => Problem::Ttm,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::StmOptimal => "stm-optimal",
            Scheme::StmEqual => "stm-equal",
            Scheme::StmFixedTdma => "stm-fixed-tdma",
            Scheme::TtmOptimal => "ttm-optimal",
            Scheme::TtmEqual => "ttm-equal",
            Scheme::TtmTangent => "ttm-tangent",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stm-optimal" => Ok(Scheme::StmOptimal),
            "stm-equal" => Ok(Scheme::StmEqual),
            "stm-fixed-tdma" => Ok(Scheme::StmFixedTdma),
            "ttm-optimal" => Ok(Scheme::TtmOptimal),
            "ttm-equal" => Ok(Scheme::TtmEqual),
            "ttm-tangent" => Ok(Scheme::TtmTangent),
            other => Err(Error::config(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Full description of a Monte-Carlo sweep. Defaults follow the common
/// simulation setup: unit noise, unit efficiency, unit mean channel gain,
/// unit demands, 1000 realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub num_users: usize,
    /// Sweep points for the access-point transmit power, in dB
    /// (linear power is `10^(dB/10)` against unit noise).
    pub hap_power_db: Vec<f64>,
    pub num_realizations: usize,
    pub seed: u64,
    pub scheduling: Vec<SchedulingPolicy>,
    pub schemes: Vec<Scheme>,
    pub problem: Problem,
    /// Per-user demand in nats (time-minimization only).
    pub demand: f64,
    pub eta: f64,
    pub noise_power: f64,
    pub channel_mean: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            num_users: 2,
            hap_power_db: (0..=10).map(|i| 2.0 * i as f64).collect(),
            num_realizations: 1000,
            seed: 1,
            scheduling: vec![SchedulingPolicy::AsGiven],
            schemes: vec![Scheme::StmOptimal, Scheme::StmEqual],
            problem: Problem::Stm,
            demand: 1.0,
            eta: 1.0,
            noise_power: 1.0,
            channel_mean: 1.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_users == 0 {
            return Err(Error::config("num_users must be at least 1"));
        }
        if self.num_realizations == 0 {
            return Err(Error::config("num_realizations must be at least 1"));
        }
        if self.hap_power_db.is_empty() {
            return Err(Error::config(
                "hap_power_db must contain at least one sweep point",
            ));
        }
        if self.hap_power_db.iter().any(|p| !p.is_finite()) {
            return Err(Error::config("hap_power_db entries must be finite"));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("at least one scheme is required"));
        }
        if self.scheduling.is_empty() {
            return Err(Error::config("at least one scheduling policy is required"));
        }
        for scheme in &self.schemes {
            if scheme.problem() != self.problem {
                return Err(Error::config(format!(
                    "scheme {scheme} does not belong to problem {}",
                    self.problem
                )));
            }
        }
        if self.problem == Problem::Ttm && !positive_finite(self.demand) {
            return Err(Error::config("time minimization requires demand > 0"));
        }
        Ok(())
    }
}

/// Converts a dB power figure to linear watts.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

// ---------------------------------------------------------------------------
// Channel generation
// ---------------------------------------------------------------------------

/// Draws the fading channels of one realization. Gains are i.i.d.
/// exponential with the configured mean (Rayleigh amplitude fading); the
/// counter layout is `realization·2K + 2·user + {downlink, uplink}`, so a
/// realization's channels never depend on sweep point or evaluation order.
/// The instance carries unit transmit power; sweeps rescale it per point.
pub fn draw_channels(config: &SimConfig, realization_index: usize) -> Result<Instance> {
    let k = config.num_users;
    let base = (realization_index as u64).wrapping_mul(2 * k as u64);
    let users = (0..k)
        .map(|i| {
            let g = stream_exponential(config.channel_mean, config.seed, base + 2 * i as u64);
            let h = stream_exponential(config.channel_mean, config.seed, base + 2 * i as u64 + 1);
            UserChannel::new(g, h, config.eta, config.demand)
        })
        .collect::<Result<Vec<_>>>()?;
    Instance::new(users, 1.0, config.noise_power)
}

fn run_scheme(scheme: Scheme, inst: &Instance) -> Result<f64> {
    match scheme {
        Scheme::StmOptimal => Ok(solve_stm(inst)?.total_throughput),
        Scheme::StmEqual => Ok(heuristics::stm_equal(inst)?.objective),
        Scheme::StmFixedTdma => Ok(heuristics::stm_fixed_tdma(inst)?.objective),
        Scheme::TtmOptimal => Ok(solve_ttm(inst)?.total_time),
        Scheme::TtmEqual => Ok(heuristics::ttm_equal(inst)?.objective),
        Scheme::TtmTangent => Ok(heuristics::ttm_tangent(inst)?.objective),
    }
}

/// Objective series of one (scheme, policy) cell across the realizations of
/// a single sweep point.
pub type CellObjectives = ((Scheme, SchedulingPolicy), Vec<f64>);

/// Per-realization objectives at one sweep point, one vector per
/// (scheme, policy) cell in config order. All cells of a realization share
/// the same channel draw; a failed cell aborts the whole run so the pairing
/// is never silently broken.
pub fn point_objectives(
    config: &SimConfig,
    power_db: f64,
    threads: usize,
) -> Result<Vec<CellObjectives>> {
    config.validate()?;
    let power = db_to_linear(power_db);
    let cells = config.schemes.len() * config.scheduling.len();
    let n = config.num_realizations;

    let realization = |r: usize| -> Result<Vec<f64>> {
        let drawn = draw_channels(config, r)?.with_hap_power(power)?;
        let mut out = Vec::with_capacity(cells);
        for &policy in &config.scheduling {
            let ordered = drawn.ordered_by(policy);
            for &scheme in &config.schemes {
                let objective = run_scheme(scheme, &ordered).map_err(|e| Error::Simulation {
                    realization: r,
                    scheme: scheme.to_string(),
                    source: Box::new(e),
                })?;
                out.push(objective);
            }
        }
        Ok(out)
    };

    // Contiguous chunks per worker, spliced back in index order: values are
    // identical to the serial run for any thread count.
    let per_realization: Vec<Vec<f64>> = if threads <= 1 || n == 1 {
        (0..n).map(realization).collect::<Result<Vec<_>>>()?
    } else {
        let workers = threads.min(n);
        let chunk = n.div_ceil(workers);
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let lo = w * chunk;
                    let hi = ((w + 1) * chunk).min(n);
                    scope.spawn(move || (lo..hi).map(realization).collect::<Result<Vec<_>>>())
                })
                .collect();
            let mut all = Vec::with_capacity(n);
            for handle in handles {
                all.extend(handle.join().expect("simulation worker panicked")?);
            }
            Ok::<_, Error>(all)
        })?
    };

    let mut out = Vec::with_capacity(cells);
    let mut cell = 0;
    for &policy in &config.scheduling {
        for &scheme in &config.schemes {
            let series: Vec<f64> = per_realization.iter().map(|row| row[cell]).collect();
            out.push(((scheme, policy), series));
            cell += 1;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// One aggregated cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub scheme: Scheme,
    pub policy: SchedulingPolicy,
    pub mean_objective: f64,
    pub std_error: f64,
    pub num_realizations: usize,
}

/// Tabular Monte-Carlo statistics: one row per
/// (sweep point × scheme × policy), means over paired channel draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

fn summarize(sweep_value: f64, cells: Vec<CellObjectives>) -> Vec<SweepRow> {
    cells
        .into_iter()
        .map(|((scheme, policy), series)| {
            let n = series.len();
            let mean = pairwise_sum(&series) / n as f64;
            let std_error = if n > 1 {
                let sq: Vec<f64> = series.iter().map(|v| (v - mean) * (v - mean)).collect();
                (pairwise_sum(&sq) / (n - 1) as f64 / n as f64).sqrt()
            } else {
                0.0
            };
            SweepRow {
                sweep_value,
                scheme,
                policy,
                mean_objective: mean,
                std_error,
                num_realizations: n,
            }
        })
        .collect()
}

/// Runs the configured sweep over the access-point power points.
pub fn run_sweep(config: &SimConfig) -> Result<SweepResult> {
    run_sweep_threaded(config, 1)
}

/// [`run_sweep`] with realization-level parallelism; the result is
/// byte-identical for every thread count.
pub fn run_sweep_threaded(config: &SimConfig, threads: usize) -> Result<SweepResult> {
    config.validate()?;
    let mut rows = Vec::new();
    for &db in &config.hap_power_db {
        rows.extend(summarize(db, point_objectives(config, db, threads)?));
    }
    Ok(SweepResult { rows })
}

/// Sweeps the number of users at the first configured power point,
/// reporting per-K means (the sweep value is K).
pub fn sweep_users(config: &SimConfig, k_range: &[usize]) -> Result<SweepResult> {
    sweep_users_threaded(config, k_range, 1)
}

/// [`sweep_users`] with realization-level parallelism.
pub fn sweep_users_threaded(
    config: &SimConfig,
    k_range: &[usize],
    threads: usize,
) -> Result<SweepResult> {
    config.validate()?;
    if k_range.is_empty() {
        return Err(Error::config("user sweep needs at least one K"));
    }
    let &power_db = config
        .hap_power_db
        .first()
        .expect("validated configs have at least one power point");
    let mut rows = Vec::new();
    for &k in k_range {
        let mut per_k = config.clone();
        per_k.num_users = k;
        let cells = point_objectives(&per_k, power_db, threads)?;
        rows.extend(summarize(k as f64, cells));
    }
    Ok(SweepResult { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stm_config() -> SimConfig {
        SimConfig {
            num_users: 3,
            hap_power_db: vec![0.0, 10.0],
            num_realizations: 64,
            seed: 42,
            scheduling: vec![SchedulingPolicy::AsGiven],
            schemes: vec![Scheme::StmOptimal, Scheme::StmEqual, Scheme::StmFixedTdma],
            problem: Problem::Stm,
            ..SimConfig::default()
        }
    }

    #[test]
    fn exponential_mean_matches() {
        let n = 100_000u64;
        let draws: Vec<f64> = (0..n).map(|i| stream_exponential(1.0, 7, i)).collect();
        let mean = pairwise_sum(&draws) / n as f64;
        // Exponential(1) has unit variance; 3 standard errors around 1.
        let se = 1.0 / (n as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn draws_are_deterministic_and_distinct() {
        let config = stm_config();
        let a = draw_channels(&config, 5).unwrap();
        let b = draw_channels(&config, 5).unwrap();
        assert_eq!(a, b);
        let c = draw_channels(&config, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn paired_cells_and_per_draw_dominance() {
        let config = stm_config();
        let cells = point_objectives(&config, 10.0, 1).unwrap();
        let optimal = &cells[0].1;
        let equal = &cells[1].1;
        let fixed = &cells[2].1;
        for r in 0..config.num_realizations {
            assert!(optimal[r] >= equal[r] - 1e-9, "realization {r}");
            assert!(optimal[r] >= fixed[r] - 1e-9, "realization {r}");
        }
    }

    #[test]
    fn sweep_is_reproducible_and_thread_invariant() {
        let config = stm_config();
        let serial = run_sweep(&config).unwrap();
        let rerun = run_sweep(&config).unwrap();
        assert_eq!(serial, rerun);
        let threaded = run_sweep_threaded(&config, 4).unwrap();
        assert_eq!(serial, threaded);
        assert_eq!(serial.rows.len(), 2 * 3);
    }

    #[test]
    fn ttm_sweep_dominance() {
        let config = SimConfig {
            num_users: 2,
            hap_power_db: vec![10.0],
            num_realizations: 64,
            seed: 11,
            scheduling: vec![SchedulingPolicy::AsGiven],
            schemes: vec![Scheme::TtmOptimal, Scheme::TtmEqual, Scheme::TtmTangent],
            problem: Problem::Ttm,
            ..SimConfig::default()
        };
        let cells = point_objectives(&config, 10.0, 2).unwrap();
        let optimal = &cells[0].1;
        for heuristic in &cells[1..] {
            for (r, (h, opt)) in heuristic.1.iter().zip(optimal).enumerate() {
                assert!(h >= &(opt - 1e-9), "realization {r}");
            }
        }
    }

    #[test]
    fn user_sweep_reports_per_k_rows() {
        let mut config = stm_config();
        config.hap_power_db = vec![10.0];
        config.num_realizations = 16;
        let result = sweep_users(&config, &[1, 2, 3]).unwrap();
        assert_eq!(result.rows.len(), 9);
        assert_eq!(result.rows[0].sweep_value, 1.0);
        assert_eq!(result.rows[8].sweep_value, 3.0);
    }

    #[test]
    fn fixed_tdma_coincides_with_optimum_for_single_user() {
        // With one user the fixed-TDMA family spans the whole problem.
        let config = SimConfig {
            num_users: 1,
            hap_power_db: vec![10.0],
            num_realizations: 200,
            seed: 23,
            scheduling: vec![SchedulingPolicy::AsGiven],
            schemes: vec![Scheme::StmOptimal, Scheme::StmFixedTdma],
            problem: Problem::Stm,
            ..SimConfig::default()
        };
        let result = sweep_users(&config, &[1]).unwrap();
        let gap = (result.rows[0].mean_objective - result.rows[1].mean_objective).abs();
        assert!(gap <= 1e-9, "K=1 gap {gap}");
    }

    #[test]
    fn config_validation_rejects_mismatches() {
        let mut config = stm_config();
        config.schemes = vec![Scheme::TtmOptimal];
        assert!(config.validate().is_err());
        let mut config = stm_config();
        config.hap_power_db.clear();
        assert!(config.validate().is_err());
        let mut config = stm_config();
        config.problem = Problem::Ttm;
        config.schemes = vec![Scheme::TtmOptimal];
        config.demand = 0.0;
        assert!(config.validate().is_err());
    }
}
