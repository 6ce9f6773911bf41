//! Desk-scale simulation of the two-source imaging hypothesis test.
//!
//! A single photon arriving at an m-mode aperture is in the mixed state
//! ρ = b|ψs⟩⟨ψs| + (1−b)|ψp⟩⟨ψp|, with a bright star centred on the aperture
//! and a faint planet displaced by Δx. The learner wants the sign of
//! ⟨ψp|O|ψp⟩ for the position observable O. It is rebuilt from the two
//! eigenvectors of ρ, which are separated by an eigenvalue filter driven by
//! density-matrix exponentiation (DME).
//!
//! Everything is simulated at the channel level on (ancilla qubit) ⊗ (target
//! register), stored as the four m×m ancilla blocks. Program copies consumed
//! by DME are traced out analytically, which the tests check against an
//! explicit simulation that keeps the program register.

use crate::dense::{c, hermitian_eigen, trace_distance, DenseOperator, StateVector};
use crate::error::{check_unit, Error, Result};
use crate::stats::{stream_rng, EstimatorReport, Moments};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::f64::consts::PI;

pub const MAX_MODES: usize = 16;
/// One-sided z value for a 90% correct decision.
pub const Z90: f64 = 1.2815515655446004;

#[derive(Clone, Debug)]
pub struct ImagingModel {
    pub m: usize,
    pub b: f64,
    pub delta_x: f64,
    pub width: f64,
    /// Aperture coordinate of each mode; O is diagonal in this basis.
    pub grid: Vec<f64>,
    pub psi_star: StateVector,
    pub psi_planet: StateVector,
    pub rho: DenseOperator,
    /// Larger eigenvalue of ρ; the smaller nonzero one is 1 − r.
    pub r: f64,
    pub v1: StateVector,
    pub v2: StateVector,
    pub c1: Complex64,
    pub c2: Complex64,
}

fn gaussian_mode(grid: &[f64], centre: f64, width: f64) -> StateVector {
    let v = StateVector::from_iterator(
        grid.len(),
        grid.iter().map(|u| c((-(u - centre).powi(2) / (4.0 * width * width)).exp())),
    );
    let n = v.norm();
    v / c(n)
}

pub fn build_model(m: usize, b: f64, delta_x: f64, width: f64) -> Result<ImagingModel> {
    if !(0.5 < b && b < 1.0) {
        return Err(Error::Parameter(format!("brightness {b} outside (0.5, 1)")));
    }
    if delta_x == 0.0 || !delta_x.is_finite() {
        return Err(Error::Parameter("planet displacement must be nonzero".into()));
    }
    model_with_weights(m, b, delta_x, width)
}

/// Shared constructor; `b` is the weight on the centred source and may be
/// below one half, which is how the brightness swap is expressed.
fn model_with_weights(m: usize, b: f64, delta_x: f64, width: f64) -> Result<ImagingModel> {
    if !(2..=MAX_MODES).contains(&m) {
        return Err(Error::Parameter(format!("mode count {m} outside 2..={MAX_MODES}")));
    }
    if width <= 0.0 || !width.is_finite() {
        return Err(Error::Parameter("aperture width must be positive".into()));
    }
    let grid: Vec<f64> = (0..m).map(|i| i as f64 - (m as f64 - 1.0) / 2.0).collect();
    let psi_star = gaussian_mode(&grid, 0.0, width);
    let psi_planet = gaussian_mode(&grid, delta_x, width);
    let overlap = psi_star.dotc(&psi_planet).norm();
    if 1.0 - overlap < 1e-12 {
        return Err(Error::Domain("star and planet modes coincide".into()));
    }
    let rho = &psi_star * psi_star.adjoint() * c(b) + &psi_planet * psi_planet.adjoint() * c(1.0 - b);
    let (vals, vecs) = hermitian_eigen(&rho);
    if m > 2 && vals[m - 3].abs() > 1e-12 {
        return Err(Error::Invariant(format!("third eigenvalue {} of a two-source state", vals[m - 3])));
    }
    let v1: StateVector = vecs.column(m - 1).into();
    let v2: StateVector = vecs.column(m - 2).into();
    let c1 = v1.dotc(&psi_planet);
    let c2 = v2.dotc(&psi_planet);
    Ok(ImagingModel { m, b, delta_x, width, grid, psi_star, psi_planet, rho, r: vals[m - 1], v1, v2, c1, c2 })
}

impl ImagingModel {
    /// The opposite hypothesis: planet on the other side of the star.
    pub fn mirrored(&self) -> Result<ImagingModel> {
        model_with_weights(self.m, self.b, -self.delta_x, self.width)
    }

    /// Same geometry with the two brightnesses exchanged.
    pub fn swapped_brightness(&self) -> Result<ImagingModel> {
        model_with_weights(self.m, 1.0 - self.b, self.delta_x, self.width)
    }

    pub fn observable(&self) -> DenseOperator {
        DenseOperator::from_diagonal(&StateVector::from_iterator(self.m, self.grid.iter().map(|&u| c(u))))
    }

    pub fn max_abs_observable(&self) -> f64 {
        self.grid.iter().fold(0.0f64, |a, u| a.max(u.abs()))
    }

    /// ⟨ψp|O|ψp⟩, the quantity whose sign decides the test.
    pub fn target_value(&self) -> f64 {
        expectation(&self.psi_planet, &self.observable(), &self.psi_planet).re
    }

    /// Three-term rebuild of ⟨ψp|A|ψp⟩ from the eigenvectors of ρ.
    pub fn reconstruct(&self, a: &DenseOperator) -> f64 {
        let d1 = expectation(&self.v1, a, &self.v1).re;
        let d2 = expectation(&self.v2, a, &self.v2).re;
        let off = self.c1.conj() * self.c2 * expectation(&self.v1, a, &self.v2);
        self.c1.norm_sqr() * d1 + self.c2.norm_sqr() * d2 + 2.0 * off.re
    }

    /// Mixing (1−λ)A + λ·tr(A)·I/m on the target register.
    pub fn depolarize(&self, a: &DenseOperator, lambda: f64) -> DenseOperator {
        depolarize(a, lambda)
    }
}

fn expectation(u: &StateVector, a: &DenseOperator, v: &StateVector) -> Complex64 {
    u.dotc(&(a * v))
}

pub fn depolarize(a: &DenseOperator, lambda: f64) -> DenseOperator {
    if lambda == 0.0 {
        return a.clone();
    }
    let m = a.nrows();
    let mut out = a * c(1.0 - lambda);
    let shift = a.trace() * c(lambda / m as f64);
    for i in 0..m {
        out[(i, i)] += shift;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    Raw,
    Uploaded,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineNoise {
    pub mode: NoiseMode,
    /// Raw: depolarizing rate after every DME round. Uploaded: the raw rate
    /// that `noise_factor` scales into the per-load rate.
    pub lambda: f64,
    pub noise_factor: f64,
}

impl PipelineNoise {
    pub fn noiseless() -> Self {
        PipelineNoise { mode: NoiseMode::Raw, lambda: 0.0, noise_factor: 3.0 }
    }

    pub fn raw(lambda: f64) -> Self {
        PipelineNoise { mode: NoiseMode::Raw, lambda, noise_factor: 3.0 }
    }

    pub fn uploaded(lambda: f64, noise_factor: f64) -> Self {
        PipelineNoise { mode: NoiseMode::Uploaded, lambda, noise_factor }
    }

    pub fn applied_rate(&self) -> f64 {
        match self.mode {
            NoiseMode::Raw => self.lambda,
            NoiseMode::Uploaded => self.noise_factor * self.lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("noise rate", self.lambda)?;
        if self.noise_factor < 0.0 {
            return Err(Error::Parameter("noise factor must be nonnegative".into()));
        }
        check_unit("applied noise rate", self.applied_rate())
    }

    fn per_round(&self) -> f64 {
        if self.mode == NoiseMode::Raw { self.lambda } else { 0.0 }
    }

    fn per_load(&self) -> f64 {
        if self.mode == NoiseMode::Uploaded { self.applied_rate() } else { 0.0 }
    }
}

/// One DME round with a fresh program copy: Tr_prog[e^{−iδS}(ρ⊗σ)e^{iδS}].
pub fn dme_round(rho: &DenseOperator, sigma: &DenseOperator, delta: f64) -> DenseOperator {
    let (s, co) = delta.sin_cos();
    let comm = rho * sigma - sigma * rho;
    sigma * c(co * co) + rho * (sigma.trace() * s * s) - comm * Complex64::new(0.0, co * s)
}

/// M rounds of DME approximating e^{−ixρ}σe^{ixρ}, with optional depolarizing
/// on the target after every round.
pub fn dme_channel(rho: &DenseOperator, sigma: &DenseOperator, x: f64, rounds: usize, lambda: f64) -> DenseOperator {
    let delta = x / rounds as f64;
    let mut out = sigma.clone();
    for _ in 0..rounds {
        out = depolarize(&dme_round(rho, &out, delta), lambda);
    }
    out
}

/// Ancilla blocks ⟨a|·|b⟩ of the joint (ancilla ⊗ target) operator; the
/// (1,0) block is the adjoint of `b01`.
#[derive(Clone, Debug)]
pub struct Blocks {
    pub b00: DenseOperator,
    pub b01: DenseOperator,
    pub b11: DenseOperator,
}

impl Blocks {
    pub fn plus_ancilla(target: &DenseOperator) -> Self {
        let half = target * c(0.5);
        Blocks { b00: half.clone(), b01: half.clone(), b11: half }
    }

    /// One controlled DME round: the swap evolution acts only on the |1⟩
    /// branch of the ancilla.
    pub fn controlled_round(&mut self, rho: &DenseOperator, delta: f64) {
        let (s, co) = delta.sin_cos();
        self.b11 = dme_round(rho, &self.b11, delta);
        self.b01 = &self.b01 * c(co) + &self.b01 * rho * Complex64::new(0.0, s);
    }

    pub fn depolarize(&mut self, lambda: f64) {
        self.b00 = depolarize(&self.b00, lambda);
        self.b01 = depolarize(&self.b01, lambda);
        self.b11 = depolarize(&self.b11, lambda);
    }

    pub fn trace(&self) -> f64 {
        (self.b00.trace() + self.b11.trace()).re
    }

    /// Unnormalised target states for the ancilla outcomes |±⟩ after the
    /// phase e^{iφ} on |1⟩.
    pub fn measure_x(&self, phi: f64) -> [DenseOperator; 2] {
        let coh = &self.b01 * Complex64::from_polar(1.0, -phi);
        let coh = &coh + coh.adjoint();
        let diag = &self.b00 + &self.b11;
        [(&diag + &coh) * c(0.5), (&diag - &coh) * c(0.5)]
    }
}

/// Eigenvalue filter: `degree` controlled queries of e^{−ixρ}, each made of
/// `rounds` DME rounds, followed by an X measurement of the ancilla.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub degree: usize,
    pub rounds: usize,
    pub x: f64,
}

impl FilterSpec {
    /// The x that puts the two eigenvalues exactly a half turn apart after
    /// `degree` queries.
    pub fn matched(model: &ImagingModel, degree: usize, rounds: usize) -> Self {
        FilterSpec { degree, rounds, x: PI / (degree as f64 * (2.0 * model.r - 1.0)) }
    }

    pub fn dme_rounds(&self) -> usize {
        self.degree * self.rounds
    }

    /// Photons consumed by one filter run: the target plus every program copy.
    pub fn copies_per_run(&self) -> f64 {
        1.0 + self.dme_rounds() as f64
    }
}

#[derive(Clone, Debug)]
pub struct FilterOutput {
    /// Unnormalised branch states; index 0 is labelled V1, index 1 V2.
    pub branches: [DenseOperator; 2],
    pub probabilities: [f64; 2],
    /// ⟨Vj|σj|Vj⟩ for the normalised branch j.
    pub fidelities: [f64; 2],
    /// Mass of each eigenvector that lands in the other branch, weighted by ρ.
    pub leakage: f64,
    pub warnings: Vec<String>,
}

pub const LEAKAGE_WARNING: f64 = 0.05;

pub fn eigen_filter(model: &ImagingModel, noise: &PipelineNoise, spec: &FilterSpec) -> Result<FilterOutput> {
    noise.validate()?;
    if spec.degree == 0 || spec.rounds == 0 {
        return Err(Error::Parameter("filter needs at least one query and one round".into()));
    }
    let gap = 2.0 * model.r - 1.0;
    if gap <= 1e-12 {
        return Err(Error::Domain("eigenvalues of ρ are degenerate".into()));
    }
    let loaded = depolarize(&model.rho, noise.per_load());
    let mut blocks = Blocks::plus_ancilla(&loaded);
    let delta = spec.x / spec.rounds as f64;
    for _ in 0..spec.dme_rounds() {
        blocks.controlled_round(&loaded, delta);
        blocks.depolarize(noise.per_round());
    }
    let phi = spec.degree as f64 * spec.x * model.r;
    let branches = blocks.measure_x(phi);
    let probabilities = [branches[0].trace().re, branches[1].trace().re];
    let vs = [&model.v1, &model.v2];
    let mut fidelities = [0.0; 2];
    for j in 0..2 {
        fidelities[j] = if probabilities[j] > 0.0 {
            expectation(vs[j], &branches[j], vs[j]).re / probabilities[j]
        } else {
            0.0
        };
    }
    let leakage = expectation(&model.v2, &branches[0], &model.v2).re + expectation(&model.v1, &branches[1], &model.v1).re;
    let mut warnings = Vec::new();
    if leakage > LEAKAGE_WARNING {
        warnings.push(format!(
            "eigenvalue gap {gap:.3e} is not resolved by degree {} at x = {:.3e}; leakage {leakage:.3e}",
            spec.degree, spec.x
        ));
    }
    Ok(FilterOutput { branches, probabilities, fidelities, leakage, warnings })
}

/// Exact per-repetition moments of the three measured quantities and of the
/// combined estimate.
#[derive(Clone, Debug, Serialize)]
pub struct PipelineStats {
    pub filter: FilterSpec,
    pub probabilities: [f64; 2],
    /// Means of the two branch measurements of O and of the overlap test.
    pub term_means: [f64; 3],
    pub term_variances: [f64; 3],
    pub mean: f64,
    pub variance: f64,
    pub bias: f64,
    pub leakage: f64,
    /// Photons consumed by one repetition of the combined estimator.
    pub photons_per_rep: f64,
}

impl PipelineStats {
    /// Probability that the sign of the N-repetition average is correct,
    /// under the Gaussian model.
    pub fn success(&self, reps: f64) -> f64 {
        if self.variance <= 0.0 {
            return if self.mean > 0.0 { 1.0 } else if self.mean < 0.0 { 0.0 } else { 0.5 };
        }
        let normal = Normal::new(0.0, 1.0).unwrap();
        normal.cdf(self.mean * reps.sqrt() / self.variance.sqrt())
    }

    pub fn success_at_budget(&self, photons: f64) -> f64 {
        self.success(photons / self.photons_per_rep)
    }

    /// Repetitions for a 90% correct decision; None if the statistic carries
    /// no usable sign.
    pub fn reps_to_90(&self) -> Option<f64> {
        (self.mean > 1e-15).then(|| (Z90 * Z90 * self.variance / (self.mean * self.mean)).max(1.0))
    }

    pub fn photons_to_90(&self) -> Option<f64> {
        self.reps_to_90().map(|n| n * self.photons_per_rep)
    }
}

/// Branch measurements and the overlap test, given the filter output.
fn term_moments(model: &ImagingModel, out: &FilterOutput) -> Result<([f64; 3], [f64; 3])> {
    let o = model.observable();
    let o2 = &o * &o;
    let mut means = [0.0; 3];
    let mut vars = [0.0; 3];
    let mut normed = Vec::with_capacity(2);
    for j in 0..2 {
        let p = out.probabilities[j];
        if p <= 1e-300 {
            return Err(Error::Domain(format!("branch {} is never postselected", j + 1)));
        }
        let s = &out.branches[j] / c(p);
        means[j] = crate::dense::trace_product(&o, &s).re;
        vars[j] = (crate::dense::trace_product(&o2, &s).re - means[j] * means[j]).max(0.0);
        normed.push(s);
    }
    // Block-encoded overlap test on one copy of each branch, read out as a
    // two-valued outcome ±|c1 c2|·‖O‖.
    let amp = (model.c1 * model.c2).norm() * model.max_abs_observable();
    let w = (model.c1.conj() * model.c2 * expectation(&model.v1, &(&normed[0] * &o * &normed[1]), &model.v2)).re;
    means[2] = w;
    vars[2] = (amp * amp - w * w).max(0.0);
    Ok((means, vars))
}

pub fn pipeline_stats(model: &ImagingModel, noise: &PipelineNoise, spec: &FilterSpec) -> Result<PipelineStats> {
    let out = eigen_filter(model, noise, spec)?;
    let (term_means, term_variances) = term_moments(model, &out)?;
    let w1 = model.c1.norm_sqr();
    let w2 = model.c2.norm_sqr();
    let mean = w1 * term_means[0] + w2 * term_means[1] + 2.0 * term_means[2];
    let variance = w1 * w1 * term_variances[0] + w2 * w2 * term_variances[1] + 4.0 * term_variances[2];
    // A repetition needs one labelled sample of each branch for the diagonal
    // terms and one of each for the overlap test; collecting both labels
    // takes 1/p1 + 1/p2 − 1 filter runs on average.
    let [p1, p2] = out.probabilities;
    let runs = 2.0 * (1.0 / p1 + 1.0 / p2 - 1.0);
    Ok(PipelineStats {
        filter: *spec,
        probabilities: out.probabilities,
        term_means,
        term_variances,
        mean,
        variance,
        bias: mean - model.target_value(),
        leakage: out.leakage,
        photons_per_rep: runs * spec.copies_per_run(),
    })
}

/// Sampled estimates of the three quantities and their combination.
#[derive(Clone, Debug, Serialize)]
pub struct QuantityReports {
    pub diagonal: [EstimatorReport; 2],
    pub overlap: EstimatorReport,
    pub combined: EstimatorReport,
}

/// Runs `shots` filter repetitions, measuring O on whichever branch comes
/// out, plus `shots` overlap tests.
pub fn estimate_quantities(
    model: &ImagingModel,
    noise: &PipelineNoise,
    spec: &FilterSpec,
    shots: u64,
    seed: u64,
) -> Result<QuantityReports> {
    let out = eigen_filter(model, noise, spec)?;
    let mut rng = stream_rng(seed, 0);
    let mut diag = [Moments::default(), Moments::default()];
    let pops: Vec<Vec<f64>> = (0..2)
        .map(|j| (0..model.m).map(|i| out.branches[j][(i, i)].re.max(0.0)).collect())
        .collect();
    let p_first = out.probabilities[0].max(0.0) / (out.probabilities[0].max(0.0) + out.probabilities[1].max(0.0));
    for _ in 0..shots {
        let j = if rng.gen::<f64>() < p_first { 0 } else { 1 };
        let total: f64 = pops[j].iter().sum();
        let mut u = rng.gen::<f64>() * total;
        let mut k = model.m - 1;
        for (i, q) in pops[j].iter().enumerate() {
            if u < *q {
                k = i;
                break;
            }
            u -= q;
        }
        diag[j].push(model.grid[k]);
    }
    let mut reports: Vec<EstimatorReport> = diag
        .iter()
        .map(|mom| {
            let mut rep = mom.report(seed);
            rep.extra.push(("postselection_rate".into(), mom.n as f64 / shots.max(1) as f64));
            if mom.n == 0 {
                rep.extra.push(("degenerate".into(), 1.0));
            }
            rep
        })
        .collect();
    let degenerate = diag.iter().any(|d| d.n == 0);
    let (term_means, _) = if degenerate { ([f64::NAN; 3], [0.0; 3]) } else { term_moments(model, &out)? };
    let amp = (model.c1 * model.c2).norm() * model.max_abs_observable();
    let mut overlap = Moments::default();
    if amp > 0.0 && !degenerate {
        let p_plus = 0.5 * (1.0 + term_means[2] / amp);
        for _ in 0..shots {
            overlap.push(if rng.gen::<f64>() < p_plus { amp } else { -amp });
        }
    } else if !degenerate {
        for _ in 0..shots {
            overlap.push(0.0);
        }
    }
    let mut overlap_rep = overlap.report(seed);
    let runs_per_pair = 1.0 / out.probabilities[0] + 1.0 / out.probabilities[1] - 1.0;
    overlap_rep.extra.push(("photons".into(), shots as f64 * runs_per_pair * spec.copies_per_run()));
    let w1 = model.c1.norm_sqr();
    let w2 = model.c2.norm_sqr();
    let combined = if degenerate {
        let mut rep = EstimatorReport { shots, mean: f64::NAN, std_error: f64::INFINITY, seed, extra: Vec::new() };
        rep.extra.push(("degenerate".into(), 1.0));
        rep
    } else {
        let mean = w1 * reports[0].mean + w2 * reports[1].mean + 2.0 * overlap_rep.mean;
        let se = (w1 * w1 * reports[0].std_error.powi(2)
            + w2 * w2 * reports[1].std_error.powi(2)
            + 4.0 * overlap_rep.std_error.powi(2))
        .sqrt();
        EstimatorReport { shots, mean, std_error: se, seed, extra: Vec::new() }
    };
    let d2 = reports.pop().unwrap();
    let d1 = reports.pop().unwrap();
    Ok(QuantityReports { diagonal: [d1, d2], overlap: overlap_rep, combined })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImagingConfig {
    pub modes: usize,
    pub brightness: f64,
    pub delta_x: f64,
    pub width: f64,
    pub noise_factor: f64,
    /// Filter degrees and DME rounds per query searched by the raw learner.
    pub degrees: Vec<usize>,
    pub rounds: Vec<usize>,
    /// Fixed photon budget for the success-probability curve.
    pub budget: f64,
}

impl Default for ImagingConfig {
    fn default() -> Self {
        ImagingConfig {
            modes: 8,
            brightness: 0.9,
            delta_x: 1.0,
            width: 1.0,
            noise_factor: 3.0,
            degrees: vec![1, 2, 4],
            rounds: vec![1, 2, 4, 8, 16, 32, 64, 128, 256, 512],
            budget: 1e6,
        }
    }
}

impl ImagingConfig {
    pub fn model(&self) -> Result<ImagingModel> {
        build_model(self.modes, self.brightness, self.delta_x, self.width)
    }

    pub fn filter_grid(&self, model: &ImagingModel) -> Vec<FilterSpec> {
        let mut out = Vec::new();
        for &l in &self.degrees {
            for &m in &self.rounds {
                out.push(FilterSpec::matched(model, l, m));
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ModePoint {
    pub mode: NoiseMode,
    pub applied_rate: f64,
    pub filter: FilterSpec,
    pub mean: f64,
    pub std_dev: f64,
    pub bias: f64,
    pub photons_per_rep: f64,
    pub photons_to_90: Option<f64>,
    pub success_at_budget: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub raw: ModePoint,
    pub uploaded: ModePoint,
    /// N_raw / N_inj in photons; None when either side cannot decide.
    pub ratio: Option<f64>,
}

/// Evaluates one mode on both hypotheses. The decision statistic flips sign
/// under the mirror, so success is the average of the two correct-sign rates.
fn evaluate(
    right: &ImagingModel,
    left: &ImagingModel,
    noise: &PipelineNoise,
    spec: &FilterSpec,
    budget: f64,
) -> Result<ModePoint> {
    let r = pipeline_stats(right, noise, spec)?;
    let mut l = pipeline_stats(left, noise, spec)?;
    l.mean = -l.mean;
    let worst = if r.photons_to_90().unwrap_or(f64::INFINITY) >= l.photons_to_90().unwrap_or(f64::INFINITY) { &r } else { &l };
    Ok(ModePoint {
        mode: noise.mode,
        applied_rate: noise.applied_rate(),
        filter: *spec,
        mean: r.mean,
        std_dev: r.variance.sqrt(),
        bias: r.bias,
        photons_per_rep: r.photons_per_rep,
        photons_to_90: worst.photons_to_90(),
        success_at_budget: 0.5 * (r.success_at_budget(budget) + l.success_at_budget(budget)),
    })
}

/// Root-mean-square error of the final estimate of ⟨ψp|O|ψp⟩ when the whole
/// budget is spent on one pipeline.
pub fn estimate_rmse(stats: &PipelineStats, budget: f64) -> f64 {
    let reps = budget / stats.photons_per_rep;
    (stats.bias * stats.bias + stats.variance / reps).sqrt()
}

/// Raw learner: the filter on the grid whose final estimate has the least
/// error at the budget, chosen separately at every noise rate.
pub fn optimise_raw(cfg: &ImagingConfig, right: &ImagingModel, left: &ImagingModel, lambda: f64) -> Result<ModePoint> {
    let noise = PipelineNoise { mode: NoiseMode::Raw, lambda, noise_factor: cfg.noise_factor };
    let mut best: Option<(f64, FilterSpec)> = None;
    for spec in cfg.filter_grid(right) {
        let err = estimate_rmse(&pipeline_stats(right, &noise, &spec)?, cfg.budget);
        if best.is_none_or(|(e, _)| err < e) {
            best = Some((err, spec));
        }
    }
    let (_, spec) = best.ok_or_else(|| Error::Parameter("empty filter grid".into()))?;
    evaluate(right, left, &noise, &spec, cfg.budget)
}

/// The raw sweep re-optimises the filter at every noise rate; the uploaded
/// pipeline keeps the noiseless optimum throughout.
pub fn hypothesis_test_sweep(cfg: &ImagingConfig, lambdas: &[f64]) -> Result<Vec<SweepPoint>> {
    let right = cfg.model()?;
    let left = right.mirrored()?;
    let fixed = optimise_raw(cfg, &right, &left, 0.0)?.filter;
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        check_unit("noise rate", lambda)?;
        let raw = optimise_raw(cfg, &right, &left, lambda)?;
        let up_noise = PipelineNoise::uploaded(lambda, cfg.noise_factor);
        if up_noise.applied_rate() > 1.0 {
            return Err(Error::Parameter(format!("uploaded rate {} exceeds 1", up_noise.applied_rate())));
        }
        let uploaded = evaluate(&right, &left, &up_noise, &fixed, cfg.budget)?;
        let ratio = match (raw.photons_to_90, uploaded.photons_to_90) {
            (Some(a), Some(b)) => Some(a / b),
            _ => None,
        };
        out.push(SweepPoint { lambda, raw, uploaded, ratio });
    }
    Ok(out)
}

/// One configuration evaluated at one noise point, with sampled estimates.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub noise: PipelineNoise,
    pub point: ModePoint,
    pub target: f64,
    /// Repetitions of the combined estimator used for `success`.
    pub shots: u64,
    pub success: f64,
    pub sampled: QuantityReports,
    pub warnings: Vec<String>,
}

/// Raw runs use the filter the raw learner would pick at this noise rate;
/// uploaded runs use the noiseless optimum, as in the sweep.
pub fn imaging_run(cfg: &ImagingConfig, noise: &PipelineNoise, shots: u64, seed: u64) -> Result<RunReport> {
    noise.validate()?;
    let right = cfg.model()?;
    let left = right.mirrored()?;
    let point = match noise.mode {
        NoiseMode::Raw => optimise_raw(cfg, &right, &left, noise.lambda)?,
        NoiseMode::Uploaded => {
            let fixed = optimise_raw(cfg, &right, &left, 0.0)?.filter;
            evaluate(&right, &left, noise, &fixed, cfg.budget)?
        }
    };
    let r = pipeline_stats(&right, noise, &point.filter)?;
    let mut l = pipeline_stats(&left, noise, &point.filter)?;
    l.mean = -l.mean;
    let success = 0.5 * (r.success(shots as f64) + l.success(shots as f64));
    let sampled = estimate_quantities(&right, noise, &point.filter, shots, seed)?;
    let warnings = eigen_filter(&right, noise, &point.filter)?.warnings;
    Ok(RunReport { noise: *noise, point, target: right.target_value(), shots, success, sampled, warnings })
}

/// Trace distance of each noiseless-normalised branch from its eigenvector.
pub fn branch_trace_distances(model: &ImagingModel, out: &FilterOutput) -> [f64; 2] {
    let vs = [&model.v1, &model.v2];
    let mut d = [1.0; 2];
    for j in 0..2 {
        if out.probabilities[j] > 0.0 {
            let s = &out.branches[j] / c(out.probabilities[j]);
            d[j] = trace_distance(&s, &(vs[j] * vs[j].adjoint()));
        }
    }
    d
}
