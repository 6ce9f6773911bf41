//! Monte Carlo orchestration of the growth gadget: logical failure rates,
//! the induced one-time logical channel with its twirled depolarizing rate,
//! and the analytic weight-enumerator bound.

use crate::decoder::{build_decoding_graph, build_decoding_graph_unchecked, DecodingGraph, GrowthTrialRecord};
use crate::error::{Error, Result};
use crate::stats::{chunk_ranges, stream_rng, wilson_interval, Z95};
use crate::surface_code::{build_growth_layout, build_growth_layout_permissive, GrowthLayout, Sector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Offset separating the input-error streams from the per-sector streams.
const INPUT_STREAM_BASE: u64 = 1 << 62;
pub const WARN_P: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthConfig {
    pub d1: usize,
    pub d2: usize,
    /// Number of measurement rounds T (the last one noiseless).
    pub rounds: usize,
    pub p: f64,
    pub trials: u64,
    pub seed: u64,
    /// Probability of a uniformly random logical Pauli on the input, standing
    /// in for faults of the constant-size encoder.
    #[serde(default)]
    pub input_error_rate: f64,
    /// Additional input error rate per unit p, so sweeps over p can keep a
    /// fixed number of exposed input locations.
    #[serde(default)]
    pub input_error_per_p: f64,
    /// Allow d1 < 4.
    #[serde(default)]
    pub permissive: bool,
}

impl GrowthConfig {
    pub fn new(d1: usize, d2: usize, p: f64, trials: u64, seed: u64) -> Self {
        GrowthConfig { d1, d2, rounds: d2, p, trials, seed, input_error_rate: 0.0, input_error_per_p: 0.0, permissive: false }
    }

    /// Parameter checks; returns advisory warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if self.trials == 0 {
            return Err(Error::Parameter("trial budget must be positive".into()));
        }
        if self.rounds < self.d2 {
            return Err(Error::Parameter(format!("T = {} below d2 = {}", self.rounds, self.d2)));
        }
        if !(0.0..1.0).contains(&self.p) {
            return Err(Error::Parameter(format!("p = {} outside [0, 1)", self.p)));
        }
        if !(0.0..=1.0).contains(&self.input_error_rate) || self.input_error_per_p < 0.0 {
            return Err(Error::Parameter("input_error_rate outside [0, 1]".into()));
        }
        if self.effective_input_rate() > 1.0 {
            return Err(Error::Parameter("effective input error rate above 1".into()));
        }
        if self.p > WARN_P {
            warnings.push(format!("p = {} is above {WARN_P}, beyond the sub-threshold band", self.p));
        }
        Ok(warnings)
    }

    pub fn effective_input_rate(&self) -> f64 {
        self.input_error_rate + self.input_error_per_p * self.p
    }

    pub fn layout(&self) -> Result<GrowthLayout> {
        if self.permissive {
            build_growth_layout_permissive(self.d1, self.d2)
        } else {
            build_growth_layout(self.d1, self.d2)
        }
    }
}

/// Both sector graphs of one configuration.
#[derive(Clone, Debug)]
pub struct GadgetGraphs {
    pub layout: GrowthLayout,
    pub x: DecodingGraph,
    pub z: DecodingGraph,
}

impl GadgetGraphs {
    pub fn new(config: &GrowthConfig) -> Result<Self> {
        config.validate()?;
        let layout = config.layout()?;
        let x = build_decoding_graph(&layout, config.rounds, Sector::X)?;
        let z = build_decoding_graph(&layout, config.rounds, Sector::Z)?;
        Ok(GadgetGraphs { layout, x, z })
    }

    /// Graphs for short demos without the T ≥ d2 requirement.
    pub fn unchecked(layout: GrowthLayout, rounds: usize) -> Result<Self> {
        let x = build_decoding_graph_unchecked(&layout, rounds, Sector::X)?;
        let z = build_decoding_graph_unchecked(&layout, rounds, Sector::Z)?;
        Ok(GadgetGraphs { layout, x, z })
    }

    pub fn max_line_degree(&self) -> usize {
        self.x.max_line_degree().max(self.z.max_line_degree())
    }
}

/// Logical Pauli as (x, z) bits: I = 0, X = 1, Z = 2, Y = 3.
pub fn pauli_index(x: bool, z: bool) -> usize {
    x as usize | ((z as usize) << 1)
}

#[derive(Clone, Debug, Serialize)]
pub struct ShotResult {
    pub logical: usize,
    pub records: Option<[GrowthTrialRecord; 2]>,
}

/// One shot on independent streams: 2i for the X sector, 2i+1 for the Z
/// sector, and a separate stream for the input error.
pub fn run_shot(graphs: &GadgetGraphs, config: &GrowthConfig, shot: u64, keep_records: bool) -> Result<ShotResult> {
    let rx = graphs.x.run_shot(config.p, &mut stream_rng(config.seed, 2 * shot))?;
    let rz = graphs.z.run_shot(config.p, &mut stream_rng(config.seed, 2 * shot + 1))?;
    // An X-sector failure is a logical X, a Z-sector failure a logical Z.
    let mut logical = pauli_index(rx.logical_flip, rz.logical_flip);
    let rate = config.effective_input_rate();
    if rate > 0.0 {
        let mut rng = stream_rng(config.seed, INPUT_STREAM_BASE + shot);
        if rng.gen::<f64>() < rate {
            logical ^= rng.gen_range(1..4usize);
        }
    }
    Ok(ShotResult { logical, records: keep_records.then_some([rx, rz]) })
}

#[derive(Clone, Debug, Serialize)]
pub struct EffectiveInputChannel {
    /// Total failure probability 1 − freq(I).
    pub q: f64,
    pub q_ci: (f64, f64),
    /// Rates of logical X, Y, Z.
    pub pauli_rates: [f64; 3],
    pub pauli_ci: [(f64, f64); 3],
    /// Depolarizing strength of the twirled channel, 4q/3.
    pub lambda_star: f64,
    pub lambda_ci: (f64, f64),
}

impl EffectiveInputChannel {
    pub fn from_counts(counts: &[u64; 4]) -> Self {
        let n: u64 = counts.iter().sum();
        let fails = n - counts[0];
        let q = fails as f64 / n as f64;
        let q_ci = wilson_interval(fails, n, Z95);
        let idx = [1usize, 3, 2];
        let pauli_rates = idx.map(|i| counts[i] as f64 / n as f64);
        let pauli_ci = idx.map(|i| wilson_interval(counts[i], n, Z95));
        EffectiveInputChannel {
            q,
            q_ci,
            pauli_rates,
            pauli_ci,
            lambda_star: twirled_lambda(q),
            lambda_ci: (twirled_lambda(q_ci.0), twirled_lambda(q_ci.1)),
        }
    }
}

/// Twirling a Pauli channel with failure mass q gives (1−q)ρ + (q/3)ΣPρP,
/// i.e. depolarizing strength 4q/3.
pub fn twirled_lambda(q: f64) -> f64 {
    4.0 * q / 3.0
}

#[derive(Clone, Debug, Serialize)]
pub struct PointResult {
    pub config: GrowthConfig,
    /// Counts of the combined logical outcome I, X, Z, Y (by `pauli_index`).
    pub counts: [u64; 4],
    pub channel: EffectiveInputChannel,
    pub max_line_degree: usize,
    pub warnings: Vec<String>,
}

impl PointResult {
    pub fn q_hat(&self) -> f64 {
        self.channel.q
    }
}

pub fn run_point(config: &GrowthConfig) -> Result<PointResult> {
    let warnings = config.validate()?;
    let graphs = GadgetGraphs::new(config)?;
    run_point_with(&graphs, config, warnings)
}

pub fn run_point_with(graphs: &GadgetGraphs, config: &GrowthConfig, warnings: Vec<String>) -> Result<PointResult> {
    let parts: Vec<Result<[u64; 4]>> = chunk_ranges(config.trials)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut c = [0u64; 4];
            for shot in lo..hi {
                c[run_shot(graphs, config, shot, false)?.logical] += 1;
            }
            Ok(c)
        })
        .collect();
    let mut counts = [0u64; 4];
    for part in parts {
        for (a, b) in counts.iter_mut().zip(part?) {
            *a += b;
        }
    }
    Ok(PointResult {
        config: config.clone(),
        counts,
        channel: EffectiveInputChannel::from_counts(&counts),
        max_line_degree: graphs.max_line_degree(),
        warnings,
    })
}

pub fn run_injection_sweep(configs: &[GrowthConfig]) -> Result<Vec<PointResult>> {
    configs.iter().map(run_point).collect()
}

pub const MIN_CHANNEL_TRIALS: u64 = 10_000;

pub fn estimate_input_channel(config: &GrowthConfig) -> Result<EffectiveInputChannel> {
    if config.trials < MIN_CHANNEL_TRIALS {
        return Err(Error::Parameter(format!(
            "channel estimation needs at least {MIN_CHANNEL_TRIALS} trials, got {}",
            config.trials
        )));
    }
    Ok(run_point(config)?.channel)
}

/// Truncation threshold of the bad-residual series.
const SERIES_FLOOR: f64 = 1e-18;

fn ln_binomial(n: usize, k: usize) -> f64 {
    use statrs::function::factorial::ln_factorial;
    ln_factorial(n as u64) - ln_factorial(k as u64) - ln_factorial((n - k) as u64)
}

/// Σ_{m=d}^{d²} d²·C(m, t−1)·(De)^{m−1}·y^t with t = ⌈m/10⌉, stopping once a
/// term falls below the truncation floor after the series starts decreasing.
pub fn bad_residual_enumerator(d: usize, degree: usize, y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    let de = degree as f64 * std::f64::consts::E;
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    for m in d..=d * d {
        let t = m.div_ceil(10);
        let ln_term = 2.0 * (d as f64).ln() + ln_binomial(m, t - 1) + (m as f64 - 1.0) * de.ln() + t as f64 * y.ln();
        let term = ln_term.exp();
        sum += term;
        if term < SERIES_FLOOR && term <= prev {
            break;
        }
        prev = term;
    }
    sum
}

/// The single-sector weight-enumerator bound evaluated term by term.
pub fn weight_enumerator_bound(d1: usize, d2: usize, rounds: usize, x: f64, degree: usize, v_in: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::Parameter("x must be non-negative".into()));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let two_de = 2.0 * degree as f64 * std::f64::consts::E;
    let eta = two_de * x.powf(0.25);
    if eta >= 1.0 {
        return Err(Error::Domain(format!("η_x = {eta:.3} ≥ 1: the bound diverges")));
    }
    let (d1f, d2f, tf) = (d1 as f64, d2 as f64, rounds as f64);
    let om = 1.0 - eta;
    let input = v_in * x;
    let spacetime = tf * d2f * d2f * eta.powi(d2 as i32) / om;
    let growth = eta.powi(d1 as i32) / (om * om) * (d1f * d1f + (2.0 * d1f - 1.0) * eta / om + 2.0 * eta / (om * om));
    let residual = bad_residual_enumerator(d2, degree, two_de * two_de * x.sqrt()) / om;
    Ok(input + spacetime + growth + residual)
}

pub fn default_v_in(d1: usize) -> f64 {
    3.0 * (d1 * d1) as f64
}

/// Largest x for which η_x < 1.
pub fn bound_regime_limit(degree: usize) -> f64 {
    (2.0 * degree as f64 * std::f64::consts::E).powi(-4)
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundComparison {
    pub q_hat: f64,
    pub ci_hi: f64,
    pub degree: usize,
    pub v_in: f64,
    pub in_regime: bool,
    pub bound: Option<f64>,
    pub ratio: Option<f64>,
    pub holds: Option<bool>,
    pub notice: Option<String>,
}

/// Check q̂ ≤ bound for a finished point. Out-of-regime points are skipped.
pub fn compare_bound_vs_montecarlo(point: &PointResult, degree: usize, v_in: f64) -> BoundComparison {
    let c = &point.config;
    let q_hat = point.q_hat();
    match weight_enumerator_bound(c.d1, c.d2, c.rounds, c.p, degree, v_in) {
        Ok(b) => BoundComparison {
            q_hat,
            ci_hi: point.channel.q_ci.1,
            degree,
            v_in,
            in_regime: true,
            bound: Some(b),
            ratio: (q_hat > 0.0).then(|| b / q_hat),
            holds: Some(q_hat <= b),
            notice: None,
        },
        Err(e) => BoundComparison {
            q_hat,
            ci_hi: point.channel.q_ci.1,
            degree,
            v_in,
            in_regime: false,
            bound: None,
            ratio: None,
            holds: None,
            notice: Some(format!("comparison skipped: {e}")),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_points_are_identity() {
        for (d1, d2) in [(4, 4), (4, 6), (5, 7)] {
            let r = run_point(&GrowthConfig::new(d1, d2, 0.0, 300, 1)).unwrap();
            assert_eq!(r.counts, [300, 0, 0, 0]);
            assert_eq!(r.channel.lambda_star, 0.0);
        }
    }

    #[test]
    fn reproducible_and_sector_independent() {
        let cfg = GrowthConfig::new(4, 6, 0.01, 400, 9);
        let a = run_point(&cfg).unwrap();
        let b = run_point(&cfg).unwrap();
        assert_eq!(a.counts, b.counts);
        let graphs = GadgetGraphs::new(&cfg).unwrap();
        // Z-sector outcomes depend only on the odd streams.
        for shot in 0..50 {
            let z1 = graphs.z.run_shot(cfg.p, &mut stream_rng(cfg.seed, 2 * shot + 1)).unwrap();
            let z2 = graphs.z.run_shot(cfg.p, &mut stream_rng(cfg.seed, 2 * shot + 1)).unwrap();
            let full = run_shot(&graphs, &cfg, shot, true).unwrap();
            assert_eq!(z1.logical_flip, z2.logical_flip);
            assert_eq!(full.records.unwrap()[1].faults, z1.faults);
        }
    }

    #[test]
    fn fault_counts_match_rate() {
        let cfg = GrowthConfig::new(5, 7, 0.01, 1, 0);
        let g = GadgetGraphs::new(&cfg).unwrap();
        let shots = 10_000u64;
        let total: usize = (0..shots).map(|s| g.x.sample_faults(0.01, &mut stream_rng(3, s)).len()).sum();
        let mean = total as f64 / shots as f64;
        let expect = 0.01 * g.x.edges.len() as f64;
        let se = (expect * 0.99 / shots as f64).sqrt();
        assert!((mean - expect).abs() < 3.0 * se);
    }

    #[test]
    fn input_errors_only() {
        let mut cfg = GrowthConfig::new(4, 4, 0.0, 20_000, 2);
        cfg.input_error_rate = 0.3;
        let ch = estimate_input_channel(&cfg).unwrap();
        assert!((ch.q_ci.0..=ch.q_ci.1).contains(&0.3));
        for (r, ci) in ch.pauli_rates.iter().zip(&ch.pauli_ci) {
            assert!(ci.0 <= 0.1 && 0.1 <= ci.1, "{r}");
        }
        cfg.trials = 10;
        assert!(estimate_input_channel(&cfg).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = GrowthConfig::new(5, 7, 0.01, 10, 0);
        c.rounds = 5;
        assert!(c.validate().is_err());
        let mut c = GrowthConfig::new(5, 7, 0.08, 10, 0);
        assert_eq!(c.validate().unwrap().len(), 1);
        c.trials = 0;
        assert!(run_point(&c).is_err());
        assert!(GrowthConfig::new(3, 7, 0.0, 10, 0).layout().is_err());
        let bad: std::result::Result<GrowthConfig, _> =
            serde_json::from_str(r#"{"d1":5,"d2":7,"rounds":7,"p":0.0,"trials":1,"seed":0,"bogus":1}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn bound_formula_properties() {
        let deg = 10;
        assert_eq!(weight_enumerator_bound(5, 9, 9, 0.0, deg, 75.0).unwrap(), 0.0);
        // The bad-residual series only converges for very small x; there the
        // d2-dependent terms fall in steps of ten toward the floor v_in·x.
        let x = 1e-100;
        let mut prev = f64::INFINITY;
        for d2 in [5, 15, 25, 35] {
            let b = weight_enumerator_bound(5, d2, d2, x, deg, 75.0).unwrap();
            assert!(b < prev, "d2={d2}");
            prev = b;
        }
        let floor = 75.0 * x;
        assert!(prev >= floor && prev < 1.01 * floor, "{prev} vs {floor}");
        let b1 = weight_enumerator_bound(5, 35, 35, x, deg, 75.0).unwrap();
        let b2 = weight_enumerator_bound(5, 35, 35, 2.0 * x, deg, 75.0).unwrap();
        assert!((b2 / b1 - 2.0).abs() < 0.01);
        assert!(weight_enumerator_bound(5, 9, 9, 0.005, deg, 75.0).is_err());
        assert!(bound_regime_limit(deg) > 1e-8);
    }

    #[test]
    fn measured_line_degree() {
        for (d1, d2) in [(5, 5), (5, 9), (4, 11)] {
            let g = GadgetGraphs::new(&GrowthConfig::new(d1, d2, 0.0, 1, 0)).unwrap();
            assert_eq!(g.max_line_degree(), 10, "({d1},{d2})");
        }
    }

    #[test]
    fn twirl_consistency() {
        let ch = EffectiveInputChannel::from_counts(&[900, 40, 30, 30]);
        assert!((ch.q - 0.1).abs() < 1e-15);
        assert!((ch.lambda_star - 0.4 / 3.0).abs() < 1e-15);
        assert!(ch.lambda_ci.0 <= ch.lambda_star && ch.lambda_star <= ch.lambda_ci.1);
        assert_eq!(ch.pauli_rates, [0.04, 0.03, 0.03]);
    }
}
