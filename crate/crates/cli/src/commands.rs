//! Subcommand parameter sets and their runners. Each family has a flag struct
//! (every field optional, so unset flags fall through to the config file) and
//! a parameter struct with defaults that rejects unknown keys.

use crate::config::{config_err, Grid, IntGrid};
use crate::output::{num, opt, Table};
use clap::{Args, Subcommand};
use qupload::dense::{random_density, DenseOperator};
use qupload::harness::{
    bound_regime_limit, default_v_in, run_point, weight_enumerator_bound, GadgetGraphs, GrowthConfig,
};
use qupload::imaging::{hypothesis_test_sweep, imaging_run, ImagingConfig, NoiseMode, PipelineNoise};
use qupload::moments::{
    displayed_gap, empirical_gap, ensemble_gap_closed, ensemble_gap_dense, injection_upper_bound,
    moment_speedup_ratio, raw_lower_bound, raw_tree_branch, speedup_threshold_third_moment, CycleTest,
};
use qupload::shadows::{
    max_scan_depth, noiseless_depth_scan, separation_exponent, separation_threshold, shadow_weight,
    shadow_weight_exact, BrickworkSpec, EXACT_MAX_SITES,
};
use qupload::stats::stream_rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// A resolved run: the parameters echoed into the output, and the table.
pub struct Outcome {
    pub params: Value,
    pub table: Table,
}

fn done<P: Serialize>(params: &P, table: Table) -> anyhow::Result<Outcome> {
    Ok(Outcome { params: serde_json::to_value(params)?, table })
}

// ---------------------------------------------------------------- inject

#[derive(Subcommand, Debug)]
pub enum InjectCmd {
    /// Logical failure rate of the growth gadget over a grid of d2 and p.
    Sweep(InjectFlags),
    /// Effective logical input channel at one point.
    Channel(InjectFlags),
    /// Analytic weight-enumerator bound on the failure rate.
    Bound(BoundFlags),
}

#[derive(Args, Debug, Serialize)]
pub struct InjectFlags {
    #[arg(long)]
    d1: Option<usize>,
    /// Final distances: list `5,7,9` or range `5:11:2`.
    #[arg(long)]
    d2: Option<String>,
    /// Physical error rates: list or geometric range `lo:hi[:steps]`.
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    /// Measurement rounds; defaults to d2.
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    input_error_rate: Option<f64>,
    #[arg(long)]
    input_error_per_p: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    permissive: Option<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InjectParams {
    d1: usize,
    d2: IntGrid,
    p: Grid,
    trials: u64,
    rounds: Option<usize>,
    input_error_rate: f64,
    input_error_per_p: f64,
    permissive: bool,
}

impl Default for InjectParams {
    fn default() -> Self {
        InjectParams {
            d1: 5,
            d2: IntGrid(vec![5, 7, 9]),
            p: Grid(vec![0.005]),
            trials: 10_000,
            rounds: None,
            input_error_rate: 0.0,
            input_error_per_p: 0.0,
            permissive: false,
        }
    }
}

impl InjectParams {
    fn configs(&self, seed: u64) -> Vec<GrowthConfig> {
        let mut out = Vec::new();
        for &d2 in &self.d2.0 {
            for &p in &self.p.0 {
                let i = out.len() as u64;
                let mut c = GrowthConfig::new(self.d1, d2, p, self.trials, seed.wrapping_add(i));
                c.rounds = self.rounds.unwrap_or(d2);
                c.input_error_rate = self.input_error_rate;
                c.input_error_per_p = self.input_error_per_p;
                c.permissive = self.permissive;
                out.push(c);
            }
        }
        out
    }
}

#[derive(Args, Debug, Serialize)]
pub struct BoundFlags {
    #[arg(long)]
    d1: Option<usize>,
    #[arg(long)]
    d2: Option<usize>,
    /// Error rates at which to evaluate the bound.
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    rounds: Option<usize>,
    /// Line-graph degree; computed from the decoding graphs when unset.
    #[arg(long)]
    degree: Option<usize>,
    /// Input-error prefactor; defaults to 3·d1².
    #[arg(long)]
    v_in: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundParams {
    d1: usize,
    d2: usize,
    x: Grid,
    rounds: Option<usize>,
    degree: Option<usize>,
    v_in: Option<f64>,
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams { d1: 5, d2: 9, x: Grid(vec![1e-3]), rounds: None, degree: None, v_in: None }
    }
}

pub fn inject_sweep(p: &InjectParams, seed: u64) -> anyhow::Result<Outcome> {
    let mut t = Table::new(vec![
        "d1", "d2", "rounds", "p", "trials", "seed", "q", "q_lo", "q_hi", "p_x", "p_y", "p_z", "lambda_star",
        "max_line_degree",
    ]);
    let mut detail = Vec::new();
    for c in p.configs(seed) {
        let r = run_point(&c)?;
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
        let ch = &r.channel;
        t.push(vec![
            json!(c.d1),
            json!(c.d2),
            json!(c.rounds),
            num(c.p),
            json!(c.trials),
            json!(c.seed),
            num(ch.q),
            num(ch.q_ci.0),
            num(ch.q_ci.1),
            num(ch.pauli_rates[0]),
            num(ch.pauli_rates[1]),
            num(ch.pauli_rates[2]),
            num(ch.lambda_star),
            json!(r.max_line_degree),
        ]);
        detail.push(serde_json::to_value(&r)?);
    }
    t.detail = Value::Array(detail);
    done(p, t)
}

pub fn inject_channel(p: &InjectParams, seed: u64) -> anyhow::Result<Outcome> {
    let configs = p.configs(seed);
    if configs.len() != 1 {
        return Err(config_err("inject channel takes a single d2 and p"));
    }
    inject_sweep(p, seed)
}

pub fn inject_bound(p: &BoundParams) -> anyhow::Result<Outcome> {
    let rounds = p.rounds.unwrap_or(p.d2);
    let degree = match p.degree {
        Some(d) => d,
        None => {
            let mut c = GrowthConfig::new(p.d1, p.d2, 0.0, 1, 0);
            c.rounds = rounds;
            GadgetGraphs::new(&c)?.max_line_degree()
        }
    };
    let v_in = p.v_in.unwrap_or_else(|| default_v_in(p.d1));
    let limit = bound_regime_limit(degree);
    let mut t = Table::new(vec!["d1", "d2", "rounds", "x", "degree", "v_in", "regime_limit", "in_regime", "bound"]);
    for &x in &p.x.0 {
        let (in_regime, bound) = match weight_enumerator_bound(p.d1, p.d2, rounds, x, degree, v_in) {
            Ok(b) => (true, num(b)),
            Err(qupload::Error::Domain(msg)) => {
                eprintln!("warning: x = {x}: {msg}");
                (false, num(f64::INFINITY))
            }
            Err(e) => return Err(e.into()),
        };
        t.push(vec![
            json!(p.d1),
            json!(p.d2),
            json!(rounds),
            num(x),
            json!(degree),
            num(v_in),
            num(limit),
            json!(in_regime),
            bound,
        ]);
    }
    done(p, t)
}

// ---------------------------------------------------------------- moments

#[derive(Subcommand, Debug)]
pub enum MomentsCmd {
    /// Cycle-test estimate of tr(ρ³) from three noisy copies.
    Estimate(EstimateFlags),
    /// Ensemble gap E_p[tr ρ̃³] − E_q[tr ρ̃³], sampled and exact.
    Gap(GapFlags),
    /// Raw and injected sample-complexity bounds.
    Bounds(MomentBoundsFlags),
    /// Largest injected noise rate that still beats raw access.
    Threshold(ThresholdFlags),
}

#[derive(Args, Debug, Serialize)]
pub struct EstimateFlags {
    #[arg(long)]
    n: Option<usize>,
    /// Use the maximally mixed state instead of a random one.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    mixed: Option<bool>,
    /// Depolarizing rate of each copy.
    #[arg(long)]
    lambda_prime: Option<f64>,
    /// Apply the noise-inverting correction to the estimator.
    #[arg(long)]
    corrected: Option<bool>,
    #[arg(long)]
    shots: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateParams {
    n: usize,
    mixed: bool,
    lambda_prime: f64,
    corrected: bool,
    shots: u64,
}

impl Default for EstimateParams {
    fn default() -> Self {
        EstimateParams { n: 1, mixed: false, lambda_prime: 0.0, corrected: true, shots: 100_000 }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct GapFlags {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    lambda_prime: Option<String>,
    /// States drawn per ensemble.
    #[arg(long)]
    draws: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GapParams {
    n: usize,
    lambda_prime: Grid,
    draws: u64,
}

impl Default for GapParams {
    fn default() -> Self {
        GapParams { n: 2, lambda_prime: Grid(vec![0.0]), draws: 100_000 }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct MomentBoundsFlags {
    #[arg(long)]
    n: Option<u32>,
    /// Raw noise rates.
    #[arg(long)]
    lambda: Option<String>,
    /// Injected noise rate.
    #[arg(long)]
    lambda_inj: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentBoundsParams {
    n: u32,
    lambda: Grid,
    lambda_inj: f64,
    epsilon: f64,
    delta: f64,
}

impl Default for MomentBoundsParams {
    fn default() -> Self {
        MomentBoundsParams { n: 8, lambda: Grid(vec![0.1]), lambda_inj: 0.12, epsilon: 0.1, delta: 0.05 }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct ThresholdFlags {
    #[arg(long)]
    lambda: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdParams {
    lambda: Grid,
}

impl Default for ThresholdParams {
    fn default() -> Self {
        ThresholdParams { lambda: Grid(vec![0.1]) }
    }
}

pub fn moments_estimate(p: &EstimateParams, seed: u64) -> anyhow::Result<Outcome> {
    if p.n == 0 {
        return Err(config_err("n must be at least 1"));
    }
    let dim = 1usize << p.n;
    let rho = if p.mixed {
        DenseOperator::identity(dim, dim) * qupload::dense::c(1.0 / dim as f64)
    } else {
        random_density(dim, &mut stream_rng(seed, u64::MAX))
    };
    let test = CycleTest::new(&rho, p.lambda_prime, p.corrected)?;
    let rep = test.run(p.shots, seed);
    let exact = (&rho * &rho * &rho).trace().re;
    let mut t = Table::new(vec![
        "n", "mixed", "lambda_prime", "corrected", "shots", "mean", "std_error", "exact", "exact_test_mean",
        "max_abs_shot", "range_bound", "range_violations",
    ]);
    t.push(vec![
        json!(p.n),
        json!(p.mixed),
        num(p.lambda_prime),
        json!(p.corrected),
        json!(p.shots),
        num(rep.mean),
        num(rep.std_error),
        num(exact),
        num(test.exact_mean()),
        opt(rep.get("max_abs_shot")),
        opt(rep.get("range_bound")),
        opt(rep.get("range_violations")),
    ]);
    t.detail = serde_json::to_value(&rep)?;
    done(p, t)
}

pub fn moments_gap(p: &GapParams, seed: u64) -> anyhow::Result<Outcome> {
    let mut t = Table::new(vec![
        "n", "lambda_prime", "draws", "empirical", "std_error", "exact", "closed_form", "displayed_form", "z_vs_exact",
        "z_vs_displayed",
    ]);
    for (i, &lp) in p.lambda_prime.0.iter().enumerate() {
        let rep = empirical_gap(p.n, lp, p.draws, seed.wrapping_add(i as u64))?;
        let exact = ensemble_gap_dense(p.n, lp)?;
        let a = 1.0 - lp;
        let displayed = displayed_gap(p.n as u32, a);
        t.push(vec![
            json!(p.n),
            num(lp),
            json!(p.draws),
            num(rep.mean),
            num(rep.std_error),
            num(exact),
            num(ensemble_gap_closed(p.n as u32, a)),
            num(displayed),
            num((rep.mean - exact) / rep.std_error),
            num((rep.mean - displayed) / rep.std_error),
        ]);
    }
    done(p, t)
}

pub fn moments_bounds(p: &MomentBoundsParams) -> anyhow::Result<Outcome> {
    let mut t = Table::new(vec![
        "n", "lambda", "lambda_inj", "epsilon", "delta", "n_raw", "raw_noise_branch", "n_inj_generic",
        "n_inj_promise", "ratio",
    ]);
    let inj = injection_upper_bound(p.n, p.lambda_inj, p.epsilon, p.delta)?;
    for &lambda in &p.lambda.0 {
        t.push(vec![
            json!(p.n),
            num(lambda),
            num(p.lambda_inj),
            num(p.epsilon),
            num(p.delta),
            num(raw_lower_bound(p.n, lambda)?),
            num(raw_tree_branch(p.n, lambda)),
            num(inj.generic),
            num(inj.promise),
            num(moment_speedup_ratio(p.n, lambda, p.lambda_inj)?),
        ]);
    }
    done(p, t)
}

pub fn moments_threshold(p: &ThresholdParams) -> anyhow::Result<Outcome> {
    let mut t = Table::new(vec!["lambda", "lambda_prime_max", "ratio"]);
    for &lambda in &p.lambda.0 {
        let th = speedup_threshold_third_moment(lambda)?;
        t.push(vec![num(lambda), num(th), num(th / lambda)]);
    }
    done(p, t)
}

// ---------------------------------------------------------------- shadows

#[derive(Subcommand, Debug)]
pub enum ShadowsCmd {
    /// Shadow weight of a contiguous k-site Pauli after d brickwork layers.
    Weight(WeightFlags),
    /// Separation exponent between raw and injected noise.
    Separation(SeparationFlags),
    /// Noiseless weight against depth and its maximiser.
    Scan(ScanFlags),
}

#[derive(Args, Debug, Serialize)]
pub struct WeightFlags {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Depths: list or range.
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    /// Monte Carlo trials; 0 skips sampling.
    #[arg(long)]
    trials: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightParams {
    n: usize,
    k: usize,
    d: IntGrid,
    lambda: Grid,
    trials: u64,
}

impl Default for WeightParams {
    fn default() -> Self {
        WeightParams { n: 8, k: 2, d: IntGrid(vec![0, 1, 2, 4]), lambda: Grid(vec![0.0]), trials: 0 }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct SeparationFlags {
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    lambda_inj: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeparationParams {
    lambda: Grid,
    lambda_inj: f64,
}

impl Default for SeparationParams {
    fn default() -> Self {
        SeparationParams { lambda: Grid(vec![0.05]), lambda_inj: 0.06 }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct ScanFlags {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanParams {
    k: usize,
    max_depth: Option<usize>,
}

impl Default for ScanParams {
    fn default() -> Self {
        ScanParams { k: 8, max_depth: None }
    }
}

pub fn shadows_weight(p: &WeightParams, seed: u64) -> anyhow::Result<Outcome> {
    if p.k == 0 || p.k > p.n {
        return Err(config_err(format!("need 1 ≤ k ≤ n, got k = {} and n = {}", p.k, p.n)));
    }
    let start = (p.n - p.k) / 2;
    let mut t = Table::new(vec![
        "n", "k", "d", "lambda", "exact", "trials", "sampled", "std_error", "first_layer_violations",
    ]);
    for &d in &p.d.0 {
        let spec = BrickworkSpec::new(p.n, d, start)?;
        for &lambda in &p.lambda.0 {
            let exact = if p.n <= EXACT_MAX_SITES { Some(shadow_weight_exact(&spec, p.k, lambda)?) } else { None };
            let (sampled, se, viol) = if p.trials > 0 || exact.is_none() {
                let trials = p.trials.max(1);
                let rep = shadow_weight(&spec, p.k, lambda, trials, seed)?;
                (Some(rep.mean), Some(rep.std_error), rep.get("first_layer_violations"))
            } else {
                (None, None, None)
            };
            t.push(vec![
                json!(p.n),
                json!(p.k),
                json!(d),
                num(lambda),
                opt(exact),
                json!(p.trials),
                opt(sampled),
                opt(se),
                opt(viol),
            ]);
        }
    }
    done(p, t)
}

pub fn shadows_separation(p: &SeparationParams) -> anyhow::Result<Outcome> {
    let mut t = Table::new(vec!["lambda", "lambda_inj", "exponent", "threshold", "injection_wins"]);
    for &lambda in &p.lambda.0 {
        let e = separation_exponent(lambda, p.lambda_inj)?;
        t.push(vec![num(lambda), num(p.lambda_inj), num(e), num(separation_threshold(lambda)?), json!(e > 0.0)]);
    }
    done(p, t)
}

pub fn shadows_scan(p: &ScanParams, seed: u64) -> anyhow::Result<Outcome> {
    if p.k == 0 {
        return Err(config_err("k must be at least 1"));
    }
    let depth = p.max_depth.unwrap_or_else(|| max_scan_depth(p.k));
    let scan = noiseless_depth_scan(p.k, depth, seed)?;
    let mut t = Table::new(vec!["k", "d", "omega", "is_argmax", "exact"]);
    for (d, w) in scan.omega.iter().enumerate() {
        t.push(vec![json!(p.k), json!(d), num(*w), json!(d == scan.d_star), json!(scan.exact)]);
    }
    t.detail = serde_json::to_value(&scan)?;
    done(p, t)
}

// ---------------------------------------------------------------- imaging

#[derive(Subcommand, Debug)]
pub enum ImagingCmd {
    /// One noise point: filter choice, success probability, sampled estimates.
    Run(ImagingRunFlags),
    /// Raw against uploaded over a grid of noise rates.
    Sweep(ImagingSweepFlags),
}

#[derive(Args, Debug, Serialize)]
pub struct ImagingModelFlags {
    /// Number of aperture modes.
    #[arg(long)]
    modes: Option<usize>,
    /// Star brightness b, in (0.5, 1).
    #[arg(long = "b", alias = "brightness")]
    brightness: Option<f64>,
    #[arg(long)]
    delta_x: Option<f64>,
    #[arg(long)]
    width: Option<f64>,
    /// Uploaded noise is this factor times the raw rate.
    #[arg(long = "factor", alias = "noise-factor")]
    noise_factor: Option<f64>,
    #[arg(long)]
    degrees: Option<String>,
    #[arg(long)]
    rounds: Option<String>,
    /// Photon budget.
    #[arg(long)]
    budget: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct ImagingRunFlags {
    #[command(flatten)]
    #[serde(flatten)]
    model: ImagingModelFlags,
    /// Noise rate λ.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, value_parser = ["raw", "uploaded"])]
    mode: Option<String>,
    /// Repetitions of the estimator.
    #[arg(long)]
    shots: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
pub struct ImagingSweepFlags {
    #[command(flatten)]
    #[serde(flatten)]
    model: ImagingModelFlags,
    /// Noise rates: list or geometric range.
    #[arg(long)]
    noise_grid: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImagingParams {
    modes: usize,
    brightness: f64,
    delta_x: f64,
    width: f64,
    noise_factor: f64,
    degrees: IntGrid,
    rounds: IntGrid,
    budget: f64,
    noise: f64,
    mode: NoiseMode,
    shots: u64,
    noise_grid: Grid,
}

impl Default for ImagingParams {
    fn default() -> Self {
        let c = ImagingConfig::default();
        ImagingParams {
            modes: c.modes,
            brightness: c.brightness,
            delta_x: c.delta_x,
            width: c.width,
            noise_factor: c.noise_factor,
            degrees: IntGrid(c.degrees),
            rounds: IntGrid(c.rounds),
            budget: c.budget,
            noise: 0.0,
            mode: NoiseMode::Raw,
            shots: 10_000,
            noise_grid: Grid(vec![1e-4, 3e-4, 1e-3, 3e-3, 1e-2]),
        }
    }
}

impl ImagingParams {
    fn config(&self) -> ImagingConfig {
        ImagingConfig {
            modes: self.modes,
            brightness: self.brightness,
            delta_x: self.delta_x,
            width: self.width,
            noise_factor: self.noise_factor,
            degrees: self.degrees.0.clone(),
            rounds: self.rounds.0.clone(),
            budget: self.budget,
        }
    }

    /// Echo only the keys relevant to the chosen subcommand.
    fn echo(&self, run: bool) -> anyhow::Result<Value> {
        let mut v = serde_json::to_value(self)?;
        let obj = v.as_object_mut().expect("struct serializes to an object");
        if run {
            obj.remove("noise_grid");
        } else {
            for k in ["noise", "mode", "shots"] {
                obj.remove(k);
            }
        }
        Ok(v)
    }
}

pub fn imaging_run_cmd(p: &ImagingParams, seed: u64) -> anyhow::Result<Outcome> {
    let noise = match p.mode {
        NoiseMode::Raw => PipelineNoise::raw(p.noise),
        NoiseMode::Uploaded => PipelineNoise::uploaded(p.noise, p.noise_factor),
    };
    let rep = imaging_run(&p.config(), &noise, p.shots, seed)?;
    for w in &rep.warnings {
        eprintln!("warning: {w}");
    }
    let pt = &rep.point;
    let comb = &rep.sampled.combined;
    let mut t = Table::new(vec![
        "mode", "noise", "applied_rate", "degree", "rounds", "shots", "success", "target", "mean", "bias",
        "std_dev", "photons_per_rep", "photons_to_90", "sampled_mean", "sampled_std_error",
    ]);
    t.push(vec![
        json!(pt.mode),
        num(p.noise),
        num(pt.applied_rate),
        json!(pt.filter.degree),
        json!(pt.filter.rounds),
        json!(p.shots),
        num(rep.success),
        num(rep.target),
        num(pt.mean),
        num(pt.bias),
        num(pt.std_dev),
        num(pt.photons_per_rep),
        opt(pt.photons_to_90),
        num(comb.mean),
        num(comb.std_error),
    ]);
    t.detail = serde_json::to_value(&rep)?;
    Ok(Outcome { params: p.echo(true)?, table: t })
}

pub fn imaging_sweep_cmd(p: &ImagingParams) -> anyhow::Result<Outcome> {
    let points = hypothesis_test_sweep(&p.config(), &p.noise_grid.0)?;
    let mut t = Table::new(vec![
        "noise", "mode", "applied_rate", "degree", "rounds", "photons_per_rep", "shots", "bias", "std_dev",
        "photons_to_90", "success", "ratio",
    ]);
    for sp in &points {
        for mp in [&sp.raw, &sp.uploaded] {
            t.push(vec![
                num(sp.lambda),
                json!(mp.mode),
                num(mp.applied_rate),
                json!(mp.filter.degree),
                json!(mp.filter.rounds),
                num(mp.photons_per_rep),
                num((p.budget / mp.photons_per_rep).floor()),
                num(mp.bias),
                num(mp.std_dev),
                opt(mp.photons_to_90),
                num(mp.success_at_budget),
                opt(sp.ratio),
            ]);
        }
    }
    t.detail = serde_json::to_value(&points)?;
    Ok(Outcome { params: p.echo(false)?, table: t })
}
