//! Shallow-shadow weights. Under a brickwork of random two-qubit Cliffords the
//! support of a Pauli performs a Markov chain; the shadow weight
//! ω = E[3^{−l_d} exp(−λ Σ_{i≤d} l_i)] is computed either by sampling that
//! chain or by propagating its full distribution over support patterns.

use crate::error::{check_unit, Error, Result};
use crate::stats::{chunk_ranges, stream_rng, EstimatorReport, Moments};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Largest chain the exact propagation will accept (2^n doubles).
pub const EXACT_MAX_SITES: usize = 22;
pub const MAX_SITES: usize = 64;
const SCAN_TRIALS: u64 = 200_000;

/// Both sites occupied with probability 9/15, each single site with 3/15.
pub const P_BOTH: f64 = 9.0 / 15.0;
pub const P_SINGLE: f64 = 3.0 / 15.0;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SupportState {
    pub n: usize,
    /// Bit j set when site j carries a non-identity Pauli.
    pub occupied: u64,
    pub layer_weights: Vec<u32>,
}

impl SupportState {
    pub fn contiguous(n: usize, start: usize, k: usize) -> Result<Self> {
        if n > MAX_SITES || start + k > n || k == 0 {
            return Err(Error::Parameter(format!("support [{start}, {}) does not fit n = {n}", start + k)));
        }
        let occupied = if k == 64 { u64::MAX } else { ((1u64 << k) - 1) << start };
        Ok(SupportState { n, occupied, layer_weights: Vec::new() })
    }

    pub fn weight(&self) -> u32 {
        self.occupied.count_ones()
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BrickworkSpec {
    pub n: usize,
    pub depth: usize,
    /// First site of the observable.
    pub start: usize,
    /// Pairing offset of the first layer; later layers alternate.
    pub offset0: usize,
}

impl BrickworkSpec {
    pub fn new(n: usize, depth: usize, start: usize) -> Result<Self> {
        if n < 2 || n > MAX_SITES {
            return Err(Error::Parameter(format!("chain length {n} outside [2, {MAX_SITES}]")));
        }
        if start >= n {
            return Err(Error::Parameter("observable start outside the chain".into()));
        }
        Ok(BrickworkSpec { n, depth, start, offset0: 0 })
    }

    pub fn with_offset(mut self, offset0: usize) -> Self {
        self.offset0 = offset0 % 2;
        self
    }

    /// Smallest chain that contains the light cone of a k-site observable up to
    /// `depth`, with the observable at an even start. The first layer pairs the
    /// leftmost site rightwards, so the left edge moves at most depth−1 sites.
    pub fn light_cone(k: usize, depth: usize) -> Result<Self> {
        let left = depth.saturating_sub(1);
        let start = left + left % 2;
        Self::new((start + k + depth).max(2), depth, start)
    }

    pub fn layer_offset(&self, layer: usize) -> usize {
        (self.offset0 + layer) % 2
    }

    pub fn pairs(&self, layer: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let off = self.layer_offset(layer);
        (off..self.n.saturating_sub(1)).step_by(2).map(|a| (a, a + 1))
    }
}

/// Apply one brickwork layer to the support.
pub fn step_layer<R: Rng + ?Sized>(spec: &BrickworkSpec, layer: usize, state: &mut SupportState, rng: &mut R) {
    for (a, b) in spec.pairs(layer) {
        let mask = (1u64 << a) | (1u64 << b);
        if state.occupied & mask == 0 {
            continue;
        }
        let u = rng.gen_range(0..15u32);
        let bits = if u < 9 {
            mask
        } else if u < 12 {
            1u64 << a
        } else {
            1u64 << b
        };
        state.occupied = (state.occupied & !mask) | bits;
    }
    state.layer_weights.push(state.weight());
}

/// Monte Carlo ω. `extra` counts per-trial invariant failures: an empty support
/// after some layer, and a first-layer weight below ⌊(k−1)/2⌋.
pub fn shadow_weight(spec: &BrickworkSpec, k: usize, lambda: f64, trials: u64, seed: u64) -> Result<EstimatorReport> {
    check_unit("lambda", lambda)?;
    SupportState::contiguous(spec.n, spec.start, k)?;
    if spec.depth == 0 {
        let mut rep = EstimatorReport::exact(3f64.powi(-(k as i32)), seed);
        rep.extra.push(("trivial_violations".into(), 0.0));
        rep.extra.push(("first_layer_violations".into(), 0.0));
        return Ok(rep);
    }
    if trials == 0 {
        return Err(Error::Parameter("trials ≥ 1 required".into()));
    }
    let floor = ((k as u32).saturating_sub(1)) / 2;
    let parts: Vec<(Moments, u64, u64)> = chunk_ranges(trials)
        .into_par_iter()
        .enumerate()
        .map(|(ci, (lo, hi))| {
            let mut rng = stream_rng(seed, ci as u64);
            let mut m = Moments::default();
            let (mut empty, mut first) = (0u64, 0u64);
            for _ in lo..hi {
                let mut st = SupportState::contiguous(spec.n, spec.start, k).unwrap();
                for layer in 0..spec.depth {
                    step_layer(spec, layer, &mut st, &mut rng);
                }
                if st.layer_weights.iter().any(|&l| l == 0) {
                    empty += 1;
                }
                if st.layer_weights[0] < floor {
                    first += 1;
                }
                let sum: u32 = st.layer_weights.iter().sum();
                let last = *st.layer_weights.last().unwrap();
                m.push(3f64.powi(-(last as i32)) * (-lambda * sum as f64).exp());
            }
            (m, empty, first)
        })
        .collect();
    let mut total = Moments::default();
    let (mut empty, mut first) = (0u64, 0u64);
    for (m, e, f) in &parts {
        total.merge(m);
        empty += e;
        first += f;
    }
    let mut rep = total.report(seed);
    rep.extra.push(("trivial_violations".into(), empty as f64));
    rep.extra.push(("first_layer_violations".into(), first as f64));
    Ok(rep)
}

/// Exact ω_{λ,d} for every d in 0..=spec.depth from a single propagation of
/// the (λ-weighted) distribution over support patterns.
pub fn shadow_weight_profile(spec: &BrickworkSpec, k: usize, lambda: f64) -> Result<Vec<f64>> {
    check_unit("lambda", lambda)?;
    if spec.n > EXACT_MAX_SITES {
        return Err(Error::Capacity(format!(
            "exact propagation needs n ≤ {EXACT_MAX_SITES}, got {}",
            spec.n
        )));
    }
    let init = SupportState::contiguous(spec.n, spec.start, k)?.occupied as usize;
    let size = 1usize << spec.n;
    let damp: Vec<f64> = (0..=spec.n).map(|w| (-lambda * w as f64).exp()).collect();
    let third: Vec<f64> = (0..=spec.n).map(|w| 3f64.powi(-(w as i32))).collect();
    let mut p = vec![0.0f64; size];
    p[init] = 1.0;
    let mut out = vec![third[k]];
    for layer in 0..spec.depth {
        for (a, b) in spec.pairs(layer) {
            let (ma, mb) = (1usize << a, 1usize << b);
            for base in 0..size {
                if base & (ma | mb) != 0 {
                    continue;
                }
                let mass = p[base | ma] + p[base | mb] + p[base | ma | mb];
                p[base | ma | mb] = P_BOTH * mass;
                p[base | ma] = P_SINGLE * mass;
                p[base | mb] = P_SINGLE * mass;
            }
        }
        let mut omega = 0.0;
        for (pattern, v) in p.iter_mut().enumerate() {
            if *v == 0.0 {
                continue;
            }
            let w = pattern.count_ones() as usize;
            *v *= damp[w];
            omega += *v * third[w];
        }
        out.push(omega);
    }
    Ok(out)
}

pub fn shadow_weight_exact(spec: &BrickworkSpec, k: usize, lambda: f64) -> Result<f64> {
    Ok(*shadow_weight_profile(spec, k, lambda)?.last().unwrap())
}

/// max{3^{−k}, e^{−λ⌊(k−1)/2⌋}·ω*}.
pub fn noisy_weight_upper_bound(k: usize, lambda: f64, omega_star: f64) -> f64 {
    let floor = (k.saturating_sub(1) / 2) as f64;
    3f64.powi(-(k as i32)).max((-lambda * floor).exp() * omega_star)
}

/// 2 ln((1−λ′)/(1−λ)) + min{ln 3/4, λ/2}.
pub fn separation_exponent(lambda: f64, lambda_prime: f64) -> Result<f64> {
    for (name, v) in [("lambda", lambda), ("lambda_prime", lambda_prime)] {
        if !(0.0..1.0).contains(&v) {
            return Err(Error::Parameter(format!("{name} = {v} outside [0, 1)")));
        }
    }
    Ok(2.0 * ((1.0 - lambda_prime) / (1.0 - lambda)).ln() + (3f64.ln() / 4.0).min(lambda / 2.0))
}

/// The λ′ at which the separation exponent vanishes; equals 1−(1−λ)e^{−λ/4}
/// for λ ≤ ½ ln 3.
pub fn separation_threshold(lambda: f64) -> Result<f64> {
    check_unit("lambda", lambda)?;
    Ok(1.0 - (1.0 - lambda) * (-(3f64.ln() / 4.0).min(lambda / 2.0) / 2.0).exp())
}

#[derive(Clone, Debug, Serialize)]
pub struct DepthScan {
    pub k: usize,
    pub omega: Vec<f64>,
    pub d_star: usize,
    pub omega_star: f64,
    /// False when the chain was too long for exact propagation and the
    /// profile was sampled instead.
    pub exact: bool,
}

pub fn max_scan_depth(k: usize) -> usize {
    let log = (k.max(1) as f64).log2().ceil() as usize;
    4 * log + 4
}

/// Noiseless ω_{0,d} for d = 0..=max_depth and its maximiser.
pub fn noiseless_depth_scan(k: usize, max_depth: usize, seed: u64) -> Result<DepthScan> {
    let spec = BrickworkSpec::light_cone(k, max_depth)?;
    let (omega, exact) = if spec.n <= EXACT_MAX_SITES {
        (shadow_weight_profile(&spec, k, 0.0)?, true)
    } else {
        (sampled_profile(&spec, k, SCAN_TRIALS, seed), false)
    };
    let (d_star, omega_star) = omega
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (d, w)| if w > best.1 { (d, w) } else { best });
    Ok(DepthScan { k, omega, d_star, omega_star, exact })
}

fn sampled_profile(spec: &BrickworkSpec, k: usize, trials: u64, seed: u64) -> Vec<f64> {
    let parts: Vec<Vec<f64>> = chunk_ranges(trials)
        .into_par_iter()
        .enumerate()
        .map(|(ci, (lo, hi))| {
            let mut rng = stream_rng(seed, ci as u64);
            let mut acc = vec![0.0; spec.depth + 1];
            for _ in lo..hi {
                let mut st = SupportState::contiguous(spec.n, spec.start, k).unwrap();
                acc[0] += 3f64.powi(-(k as i32));
                for layer in 0..spec.depth {
                    step_layer(spec, layer, &mut st, &mut rng);
                    acc[layer + 1] += 3f64.powi(-(st.weight() as i32));
                }
            }
            acc
        })
        .collect();
    let mut out = vec![0.0; spec.depth + 1];
    for p in parts {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    out.iter().map(|v| v / trials as f64).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ShadowCount {
    pub count: f64,
    pub d_star: usize,
    pub omega_star: f64,
    pub exact: bool,
}

/// 1/((1−η)^{2k} ε² ω*) with ω* the best noiseless weight over the depth scan.
/// Polynomial prefactors are omitted.
pub fn injection_sample_count(k: usize, eta: f64, epsilon: f64, seed: u64) -> Result<ShadowCount> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::Parameter(format!("η = {eta} outside [0, 1)")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Parameter(format!("ε = {epsilon} outside (0, 1)")));
    }
    let scan = noiseless_depth_scan(k, max_scan_depth(k), seed)?;
    let count = 1.0 / ((1.0 - eta).powi(2 * k as i32) * epsilon * epsilon * scan.omega_star);
    Ok(ShadowCount { count, d_star: scan.d_star, omega_star: scan.omega_star, exact: scan.exact })
}
