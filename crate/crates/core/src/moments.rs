//! Third-moment estimation: hard-instance ensembles, the three-copy cycle
//! test, and the closed-form sample-complexity evaluators (raw lower bound,
//! injected upper bound, speedup threshold, learning-tree inversions).

use crate::dense::{c, depolarize_all, haar_state, hermitian_eigen, kron, permute_qubits, projector, DenseOperator};
use crate::error::{check_unit, Error, Result};
use crate::replica::{
    alpha_omega_norm_sqr, cycle_operator, cycle_spectral_data, g_poly, r_poly, symmetrizer_product,
    trace_n_delta3_squared,
};
use crate::stats::{chunk_ranges, stream_rng, EstimatorReport, Moments};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

pub const MAX_CYCLE_QUBITS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EnsembleKind {
    P,
    Q,
}

/// ρ = 𝟙/2^{n+1} + Σ_j v_j|ψ_j⟩⟨ψ_j| with Haar-random ψ_j.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EnsembleSpec {
    pub n: usize,
    pub kind: EnsembleKind,
}

impl EnsembleSpec {
    pub const MIXED_WEIGHT: f64 = 0.5;

    pub fn new(n: usize, kind: EnsembleKind) -> Result<Self> {
        if n == 0 || n > 4 {
            return Err(Error::Capacity(format!("ensemble sampling supports 1 ≤ n ≤ 4, got {n}")));
        }
        Ok(EnsembleSpec { n, kind })
    }

    pub fn v(&self) -> [f64; 3] {
        match self.kind {
            EnsembleKind::P => [0.25, 0.25, 0.0],
            EnsembleKind::Q => [1.0 / 3.0, 1.0 / 12.0, 1.0 / 12.0],
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DenseOperator {
        let dim = 1usize << self.n;
        let mut rho = DenseOperator::identity(dim, dim) * c(Self::MIXED_WEIGHT / dim as f64);
        for v in self.v() {
            let psi = haar_state(dim, rng);
            if v > 0.0 {
                rho += projector(&psi) * c(v);
            }
        }
        rho
    }

    /// Exact E[ρ^{⊗3}] from the Haar moments E[ψψ†^{⊗k}] = S_{1..k}.
    pub fn third_moment(&self) -> Result<DenseOperator> {
        let v = self.v();
        let weights = [Self::MIXED_WEIGHT, v[0], v[1], v[2]];
        let dim = 1usize << (3 * self.n);
        let mut out = DenseOperator::zeros(dim, dim);
        for labels in 0..64usize {
            let l = [labels >> 4, (labels >> 2) & 3, labels & 3];
            let w: f64 = l.iter().map(|&x| weights[x]).product();
            if w == 0.0 {
                continue;
            }
            let mut groups: Vec<Vec<usize>> = Vec::new();
            for copy in 0..3 {
                if l[copy] == 0 {
                    groups.push(vec![copy]);
                    continue;
                }
                match groups.iter_mut().find(|g| l[g[0]] == l[copy] && l[copy] != 0) {
                    Some(g) => g.push(copy),
                    None => groups.push(vec![copy]),
                }
            }
            out += symmetrizer_product(3, self.n, &groups)? * c(w);
        }
        Ok(out)
    }
}

/// Draw one ensemble state reproducibly from a seed.
pub fn sample_state(spec: &EnsembleSpec, seed: u64) -> DenseOperator {
    spec.sample(&mut stream_rng(seed, 0))
}

/// Exact E_p[tr ρ̃³] − E_q[tr ρ̃³] with ρ̃ = D_λ′^{⊗n}(ρ), from the dense ensemble moments.
pub fn ensemble_gap_dense(n: usize, lambda_prime: f64) -> Result<f64> {
    let sp = EnsembleSpec::new(n, EnsembleKind::P)?.third_moment()?;
    let sq = EnsembleSpec::new(n, EnsembleKind::Q)?.third_moment()?;
    let diff = depolarize_all(&(sp - sq), 3 * n, lambda_prime);
    Ok(crate::dense::trace_product(&cycle_operator(n), &diff).re)
}

/// Monte Carlo E_p[Y] − E_q[Y] with Y = tr(ρ̃³) evaluated exactly on each
/// drawn state; `draws` states per ensemble, independent streams for P and Q.
pub fn empirical_gap(n: usize, lambda_prime: f64, draws: u64, seed: u64) -> Result<EstimatorReport> {
    check_unit("lambda_prime", lambda_prime)?;
    if draws < 2 {
        return Err(Error::Parameter("need at least two draws per ensemble".into()));
    }
    let mut reports = Vec::with_capacity(2);
    for (offset, kind) in [(0u64, EnsembleKind::P), (1 << 40, EnsembleKind::Q)] {
        let spec = EnsembleSpec::new(n, kind)?;
        let parts: Vec<Moments> = chunk_ranges(draws)
            .into_par_iter()
            .enumerate()
            .map(|(ci, (lo, hi))| {
                let mut rng = stream_rng(seed, offset + ci as u64);
                let mut m = Moments::default();
                for _ in lo..hi {
                    let noisy = depolarize_all(&spec.sample(&mut rng), n, lambda_prime);
                    m.push((&noisy * &noisy * &noisy).trace().re);
                }
                m
            })
            .collect();
        let mut total = Moments::default();
        parts.iter().for_each(|m| total.merge(m));
        reports.push(total.report(seed));
    }
    let (p, q) = (&reports[0], &reports[1]);
    Ok(EstimatorReport {
        shots: draws,
        mean: p.mean - q.mean,
        std_error: p.std_error.hypot(q.std_error),
        seed,
        extra: vec![("mean_p".into(), p.mean), ("mean_q".into(), q.mean)],
    })
}

/// Closed form of the ensemble gap for the stated ensemble:
/// −G_n(a) / (144·4^n(2^n+1)(2^n+2)).
pub fn ensemble_gap_closed(n: u32, a: f64) -> f64 {
    -g_poly(n, a) / (144.0 * gap_denominator(n))
}

/// Gap as displayed with the /18 convention: G_n(a) / (18·4^n(2^n+1)(2^n+2)).
pub fn displayed_gap(n: u32, a: f64) -> f64 {
    g_poly(n, a) / (18.0 * gap_denominator(n))
}

fn gap_denominator(n: u32) -> f64 {
    let d = 2f64.powi(n as i32);
    4f64.powi(n as i32) * (d + 1.0) * (d + 2.0)
}

/// Exact three-copy cycle test for one state: the outcome distribution over
/// site labels s ∈ {1, ω, ω²}^n and the estimator value of every outcome.
#[derive(Clone, Debug)]
pub struct CycleTest {
    pub n: usize,
    pub corrected: bool,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
    values: Vec<f64>,
    pub bound: f64,
}

impl CycleTest {
    pub fn new(rho: &DenseOperator, lambda_prime: f64, corrected: bool) -> Result<Self> {
        let dim = rho.nrows();
        let n = dim.trailing_zeros() as usize;
        if n == 0 || n > MAX_CYCLE_QUBITS || dim != 1 << n {
            return Err(Error::Capacity(format!("cycle test supports 1 ≤ n ≤ {MAX_CYCLE_QUBITS}")));
        }
        check_unit("lambda_prime", lambda_prime)?;
        let spectral = if corrected {
            cycle_spectral_data(lambda_prime)?
        } else {
            cycle_spectral_data(0.0)?
        };
        let noisy = depolarize_all(rho, n, lambda_prime);
        let three = kron(&kron(&noisy, &noisy), &noisy);
        // Site-major qubit 3j+c reads copy-major qubit c·n+j.
        let perm: Vec<usize> = (0..3 * n).map(|q| (q % 3) * n + q / 3).collect();
        let site_major = permute_qubits(&three, 3 * n, &perm);

        // Eigenbasis of the single-site cycle, labelled by eigenvalue index.
        let mut basis = DenseOperator::zeros(8, 8);
        let mut labels = Vec::with_capacity(8);
        let mut col = 0;
        for (s, p) in spectral.projectors.iter().enumerate() {
            let (vals, vecs) = hermitian_eigen(p);
            for (k, v) in vals.iter().enumerate() {
                if (v - 1.0).abs() < 1e-9 {
                    basis.set_column(col, &vecs.column(k));
                    labels.push(s);
                    col += 1;
                }
            }
        }
        debug_assert_eq!(col, 8);
        let mut full = DenseOperator::identity(1, 1);
        for _ in 0..n {
            full = kron(&full, &basis);
        }
        let rotated_cols = &site_major * &full;
        let outcomes = 3usize.pow(n as u32);
        let mut probs = vec![0.0; outcomes];
        for k in 0..full.ncols() {
            let mut amp = Complex64::new(0.0, 0.0);
            for i in 0..full.nrows() {
                amp += full[(i, k)].conj() * rotated_cols[(i, k)];
            }
            let mut idx = 0usize;
            for site in 0..n {
                let local = (k >> (3 * (n - 1 - site))) & 7;
                idx = idx * 3 + labels[local];
            }
            probs[idx] += amp.re;
        }
        for p in probs.iter_mut() {
            if *p < 0.0 && *p > -1e-12 {
                *p = 0.0;
            }
        }
        let eig: [Complex64; 3] = if corrected { spectral.alpha } else { cycle_spectral_data(0.0)?.alpha };
        let values: Vec<f64> = (0..outcomes)
            .map(|mut idx| {
                let mut prod = Complex64::new(1.0, 0.0);
                for _ in 0..n {
                    prod *= eig[idx % 3];
                    idx /= 3;
                }
                prod.re
            })
            .collect();
        let mut cumulative = Vec::with_capacity(outcomes);
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        let bound = if corrected {
            alpha_omega_norm_sqr(1.0 - lambda_prime).sqrt().powi(n as i32)
        } else {
            1.0
        };
        Ok(CycleTest { n, corrected, probs, cumulative, values, bound })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn exact_mean(&self) -> f64 {
        self.probs.iter().zip(&self.values).map(|(p, v)| p * v).sum()
    }

    pub fn shot<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = *self.cumulative.last().unwrap();
        let u: f64 = rng.gen::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= u).min(self.values.len() - 1);
        self.values[idx]
    }

    /// Monte Carlo estimate; `extra` records the largest |shot| seen and the
    /// number of shots exceeding the range bound.
    pub fn run(&self, shots: u64, seed: u64) -> EstimatorReport {
        let parts: Vec<(Moments, f64, u64)> = chunk_ranges(shots)
            .into_par_iter()
            .enumerate()
            .map(|(ci, (lo, hi))| {
                let mut rng = stream_rng(seed, ci as u64);
                let mut m = Moments::default();
                let mut worst = 0.0f64;
                let mut violations = 0;
                for _ in lo..hi {
                    let x = self.shot(&mut rng);
                    worst = worst.max(x.abs());
                    if x.abs() > self.bound * (1.0 + 1e-12) {
                        violations += 1;
                    }
                    m.push(x);
                }
                (m, worst, violations)
            })
            .collect();
        let mut total = Moments::default();
        let mut worst = 0.0f64;
        let mut violations = 0;
        for (m, w, v) in &parts {
            total.merge(m);
            worst = worst.max(*w);
            violations += v;
        }
        let mut rep = total.report(seed);
        rep.extra.push(("max_abs_shot".into(), worst));
        rep.extra.push(("range_bound".into(), self.bound));
        rep.extra.push(("range_violations".into(), violations as f64));
        rep
    }
}

/// One shot of the cycle test on three noisy copies of ρ.
pub fn cycle_test_shot<R: Rng + ?Sized>(
    rho: &DenseOperator,
    lambda_prime: f64,
    corrected: bool,
    rng: &mut R,
) -> Result<f64> {
    Ok(CycleTest::new(rho, lambda_prime, corrected)?.shot(rng))
}

/// min{2^{n/2}, (2^n+1)²(2^n+2)²/R_n(1−λ)}; the second branch is +∞ when R_n = 0.
pub fn raw_lower_bound(n: u32, lambda: f64) -> Result<f64> {
    check_unit("lambda", lambda)?;
    if n < 2 {
        return Err(Error::Domain("n = 1 is degenerate: Δ_3 vanishes identically".into()));
    }
    Ok(2f64.powf(n as f64 / 2.0).min(raw_tree_branch(n, lambda)))
}

/// The noise-dependent branch (2^n+1)²(2^n+2)²/R_n(1−λ) of the raw bound.
pub fn raw_tree_branch(n: u32, lambda: f64) -> f64 {
    let d = 2f64.powi(n as i32);
    let r = r_poly(n, 1.0 - lambda);
    if r <= 0.0 {
        return f64::INFINITY;
    }
    (d + 1.0).powi(2) * (d + 2.0).powi(2) / r
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct InjectionCounts {
    /// |α_ω|^{2n} ε⁻² log(1/δ): estimating tr ρ³ to additive ε.
    pub generic: f64,
    /// log(1/δ)/gap²: deciding the P/Q promise problem.
    pub promise: f64,
}

pub fn injection_upper_bound(n: u32, lambda_prime: f64, epsilon: f64, delta: f64) -> Result<InjectionCounts> {
    if !(0.0..1.0).contains(&lambda_prime) {
        return Err(Error::Parameter(format!("λ′ = {lambda_prime} outside [0, 1)")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter("ε and δ must lie in (0, 1)".into()));
    }
    let a = 1.0 - lambda_prime;
    let log = (1.0 / delta).ln();
    let generic = alpha_omega_norm_sqr(a).powi(n as i32) / (epsilon * epsilon) * log;
    let gap = displayed_gap(n, a);
    let promise = if gap > 0.0 { log / (gap * gap) } else { f64::INFINITY };
    Ok(InjectionCounts { generic, promise })
}

/// Solve 6y³ + 9y² + 1 = 4√(1 + 9x⁶ + 6x¹⁰) for y = 1−λ′ at x = 1−λ and return λ′_max.
pub fn speedup_threshold_third_moment(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Parameter(format!("λ = {lambda} outside (0, 1)")));
    }
    let x = 1.0 - lambda;
    let rhs = 4.0 * (1.0 + 9.0 * x.powi(6) + 6.0 * x.powi(10)).sqrt();
    let f = |y: f64| 6.0 * y.powi(3) + 9.0 * y * y + 1.0 - rhs;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if f(lo) > 0.0 || f(hi) < 0.0 {
        return Err(Error::Domain("no root in (0, 1]".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(1.0 - 0.5 * (lo + hi))
}

/// Ratio of the noise-dependent raw branch to the injected promise count,
/// both with unit constants and δ = 1/e.
pub fn moment_speedup_ratio(n: u32, lambda: f64, lambda_prime: f64) -> Result<f64> {
    let inj = injection_upper_bound(n, lambda_prime, 0.5, (-1.0f64).exp())?;
    Ok(raw_tree_branch(n, lambda) / inj.promise)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HeisenbergBoundInput {
    pub mu: f64,
    pub delta_sq_trace: f64,
}

impl HeisenbergBoundInput {
    pub fn new(mu: f64, delta_sq_trace: f64) -> Result<Self> {
        if !(mu > 0.0) || delta_sq_trace < 0.0 {
            return Err(Error::Parameter("need μ > 0 and tr(Δ²) ≥ 0".into()));
        }
        Ok(HeisenbergBoundInput { mu, delta_sq_trace })
    }

    /// The third-moment instance: σ_q ⪰ 𝟙/(8·2^{3n}) and Δ = N(Δ_3)/18.
    pub fn third_moment(n: u32, lambda: f64) -> Result<Self> {
        let mu = 1.0 / (8.0 * 2f64.powi(3 * n as i32));
        let t = trace_n_delta3_squared(n, lambda)? / (18.0 * 18.0);
        HeisenbergBoundInput::new(mu, t)
    }
}

/// δ = tr(Δ²)/μ and the smallest depth T with ½(e^{δT} − 1) ≥ target_tv.
pub fn learning_tree_bounds(input: &HeisenbergBoundInput, target_tv: f64) -> Result<(f64, f64)> {
    if target_tv < 0.0 {
        return Err(Error::Parameter("target TV must be non-negative".into()));
    }
    let delta = input.delta_sq_trace / input.mu;
    if target_tv == 0.0 {
        return Ok((delta, 0.0));
    }
    if delta == 0.0 {
        return Ok((delta, f64::INFINITY));
    }
    Ok((delta, (1.0 + 2.0 * target_tv).ln() / delta))
}

/// 2·((3T/2)² + 3T/2)/2^n.
pub fn tv_aggregation_penalty(t: u64, n: u32) -> Result<f64> {
    if t == 0 {
        return Err(Error::Parameter("T ≥ 1 required".into()));
    }
    let h = 1.5 * t as f64;
    Ok(2.0 * (h * h + h) / 2f64.powi(n as i32))
}
