//! Permutation operators on k copies of n qubits, the Δ_3 operator, the
//! three-copy cycle observable with its noise-corrected spectral form, and the
//! closed-form trace polynomials R_n, G_n and κ_λ.
//!
//! Copies are laid out copy-major: qubit j of copy c is global qubit c·n + j.

use crate::dense::{apply_block_pauli_channel, c, kron, permute_qubits, trace_product, DenseOperator};
use crate::error::{check_unit, Error, Result};
use crate::pauli::Pauli;
use num_complex::Complex64;
use std::f64::consts::PI;

pub const MAX_THREE_COPY_QUBITS: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub enum ReplicaLabel {
    Symmetrizer(Vec<usize>),
    Swap(usize, usize),
    Cycle,
    Delta3,
    CycleObservable,
    CycleCorrected,
}

#[derive(Clone, Debug)]
pub struct ReplicaOperator {
    pub n: usize,
    pub copies: usize,
    pub matrix: DenseOperator,
    pub label: ReplicaLabel,
}

fn check_capacity(n: usize, copies: usize) -> Result<()> {
    if n == 0 || n * copies > 12 {
        return Err(Error::Capacity(format!("{copies} copies of {n} qubits exceed 2^12")));
    }
    Ok(())
}

/// P_σ|a_0, …, a_{k-1}⟩ = |a_{σ(0)}, …, a_{σ(k-1)}⟩.
pub fn permutation_operator(copies: usize, n: usize, sigma: &[usize]) -> DenseOperator {
    assert_eq!(sigma.len(), copies);
    let d = 1usize << n;
    let dim = d.pow(copies as u32);
    let mask = d - 1;
    let digit = |idx: usize, c: usize| (idx >> (n * (copies - 1 - c))) & mask;
    let mut m = DenseOperator::zeros(dim, dim);
    for col in 0..dim {
        let mut row = 0usize;
        for c in 0..copies {
            row = (row << n) | digit(col, sigma[c]);
        }
        m[(row, col)] = c(1.0);
    }
    m
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Product of normalised symmetrizers over disjoint copy groups inside a
/// `copies`-copy space. A singleton group contributes 𝟙/2^n; copies that are
/// in no group are left as identity.
pub fn symmetrizer_product(copies: usize, n: usize, groups: &[Vec<usize>]) -> Result<DenseOperator> {
    check_capacity(n, copies)?;
    let d = (1u64 << n) as f64;
    let mut total = {
        let dim = 1usize << (n * copies);
        DenseOperator::identity(dim, dim)
    };
    for g in groups {
        let norm: f64 = (0..g.len()).map(|i| d + i as f64).product();
        let mut sum = DenseOperator::zeros(total.nrows(), total.ncols());
        for p in permutations(g) {
            let mut sigma: Vec<usize> = (0..copies).collect();
            for (slot, src) in g.iter().zip(&p) {
                sigma[*slot] = *src;
            }
            sum += permutation_operator(copies, n, &sigma);
        }
        total = total * sum / c(norm);
    }
    Ok(total)
}

/// Normalised symmetrizer S_x on |indices| copies, e.g. S_123 = Σ_σ P_σ / (D(D+1)(D+2)).
pub fn build_symmetrizer(indices: &[usize], n: usize) -> Result<ReplicaOperator> {
    if indices.is_empty() || indices.len() > 3 {
        return Err(Error::Parameter("symmetrizer needs 1 to 3 copies".into()));
    }
    let k = indices.len();
    let matrix = symmetrizer_product(k, n, &[(0..k).collect()])?;
    Ok(ReplicaOperator { n, copies: k, matrix, label: ReplicaLabel::Symmetrizer(indices.to_vec()) })
}

pub fn swap_operator(n: usize, i: usize, j: usize) -> DenseOperator {
    let mut sigma = vec![0, 1, 2];
    sigma.swap(i, j);
    permutation_operator(3, n, &sigma)
}

/// Three-copy cycle π: |a, b, c⟩ ↦ |c, a, b⟩.
pub fn cycle_operator(n: usize) -> DenseOperator {
    permutation_operator(3, n, &[2, 0, 1])
}

/// Δ_3 = S_123 − S_12S_3 − S_13S_2 − S_23S_1 + 2S_1^{⊗3}, built from symmetrizers.
pub fn delta3_symmetrizer_form(n: usize) -> Result<DenseOperator> {
    check_capacity(n, 3)?;
    let s = |g: &[&[usize]]| symmetrizer_product(3, n, &g.iter().map(|x| x.to_vec()).collect::<Vec<_>>());
    Ok(s(&[&[0, 1, 2]])? - s(&[&[0, 1], &[2]])? - s(&[&[0, 2], &[1]])? - s(&[&[1, 2], &[0]])?
        + s(&[&[0], &[1], &[2]])? * c(2.0))
}

/// Δ_3 = [D²(π+π⁻¹) − 2D·ΣSWAP + 4𝟙] / (D³(D+1)(D+2)).
pub fn delta3_permutation_form(n: usize) -> Result<DenseOperator> {
    check_capacity(n, 3)?;
    let d = (1u64 << n) as f64;
    let pi = cycle_operator(n);
    let swaps = swap_operator(n, 0, 1) + swap_operator(n, 0, 2) + swap_operator(n, 1, 2);
    let dim = pi.nrows();
    let num = (&pi + pi.transpose()) * c(d * d) - swaps * c(2.0 * d) + DenseOperator::identity(dim, dim) * c(4.0);
    Ok(num / c(d.powi(3) * (d + 1.0) * (d + 2.0)))
}

/// Δ_3 from the symmetrizer form, cross-checked against the permutation form.
pub fn build_delta3(n: usize) -> Result<ReplicaOperator> {
    if n > MAX_THREE_COPY_QUBITS {
        return Err(Error::Capacity(format!("Δ_3 supports n ≤ {MAX_THREE_COPY_QUBITS}")));
    }
    let a = delta3_symmetrizer_form(n)?;
    let b = delta3_permutation_form(n)?;
    let scale = crate::dense::max_abs(&b).max(1e-300);
    let diff = crate::dense::max_abs(&(&a - &b));
    if diff > 1e-10 * scale.max(1.0) {
        return Err(Error::Invariant(format!("Δ_3 forms disagree by {diff:e}")));
    }
    Ok(ReplicaOperator { n, copies: 3, matrix: a, label: ReplicaLabel::Delta3 })
}

/// R_n(η) = 2(1+9η⁶+6η¹⁰)^n + 2(1+9η⁶−6η¹⁰)^n − 12(1+3η⁶)^n + 8.
pub fn r_poly(n: u32, eta: f64) -> f64 {
    let e6 = eta.powi(6);
    let e10 = eta.powi(10);
    let n = n as i32;
    2.0 * (1.0 + 9.0 * e6 + 6.0 * e10).powi(n) + 2.0 * (1.0 + 9.0 * e6 - 6.0 * e10).powi(n)
        - 12.0 * (1.0 + 3.0 * e6).powi(n)
        + 8.0
}

/// G_n(a) = (1+9a²+6a³)^n + (1+9a²−6a³)^n − 6(1+3a²)^n + 4.
pub fn g_poly(n: u32, a: f64) -> f64 {
    let (a2, a3) = (a * a, a * a * a);
    let n = n as i32;
    (1.0 + 9.0 * a2 + 6.0 * a3).powi(n) + (1.0 + 9.0 * a2 - 6.0 * a3).powi(n) - 6.0 * (1.0 + 3.0 * a2).powi(n) + 4.0
}

/// κ_λ = 1 + ¾a² + (3/16)a⁶ + (1/64)a⁸ with a = 1−λ.
pub fn kappa(lambda: f64) -> Result<f64> {
    check_unit("lambda", lambda)?;
    let a = 1.0 - lambda;
    Ok(1.0 + 0.75 * a.powi(2) + 3.0 / 16.0 * a.powi(6) + a.powi(8) / 64.0)
}

/// Closed form tr(N(Δ_3)²) = R_n(η) / (2^{3n}(2^n+1)²(2^n+2)²).
pub fn trace_n_delta3_squared(n: u32, lambda: f64) -> Result<f64> {
    check_unit("lambda", lambda)?;
    if n == 0 {
        return Err(Error::Parameter("n ≥ 1 required".into()));
    }
    let d = 2f64.powi(n as i32);
    Ok(r_poly(n, 1.0 - lambda) / (d.powi(3) * (d + 1.0).powi(2) * (d + 2.0).powi(2)))
}

/// Apply a per-site channel to a three-copy operator, where site j is the
/// block of qubits (j, n+j, 2n+j).
pub fn apply_sitewise<F>(a: &DenseOperator, n: usize, coeff: F) -> DenseOperator
where
    F: Fn(&[Pauli]) -> f64 + Copy,
{
    let mut out = a.clone();
    for j in 0..n {
        out = apply_block_pauli_channel(&out, 3 * n, &[j, n + j, 2 * n + j], coeff);
    }
    out
}

/// Dense oracle: N applied site-block-wise to Δ_3, then tr(N(Δ_3)²).
pub fn trace_n_delta3_squared_dense(n: usize, lambda: f64) -> Result<f64> {
    check_unit("lambda", lambda)?;
    let delta = build_delta3(n)?.matrix;
    let eta = 1.0 - lambda;
    let nd = apply_sitewise(&delta, n, |p| {
        let w = p.iter().filter(|q| **q != Pauli::I).count();
        crate::pauli::n_exponent_coefficient(w, eta)
    });
    Ok(trace_product(&nd, &nd).re)
}

/// Spectral data of the single-site cycle c and of h_+ = I_λ′^{⊗3}[c].
#[derive(Clone, Debug)]
pub struct CycleSpectralData {
    pub a: f64,
    /// Eigenvalues of h_+ on Π_1, Π_ω, Π_ω² (in that order).
    pub alpha: [Complex64; 3],
    pub projectors: [DenseOperator; 3],
}

pub fn omega() -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI / 3.0)
}

pub fn alpha_1(a: f64) -> f64 {
    (1.0 + 3.0 / (a * a)) / 4.0
}

pub fn alpha_omega(a: f64) -> Complex64 {
    Complex64::new((1.0 - 3.0 / (a * a)) / 4.0, 3f64.sqrt() / 2.0 / a.powi(3))
}

/// |α_ω|² = (1 − 6a⁻² + 9a⁻⁴ + 12a⁻⁶)/16.
pub fn alpha_omega_norm_sqr(a: f64) -> f64 {
    let ia2 = 1.0 / (a * a);
    (1.0 - 6.0 * ia2 + 9.0 * ia2 * ia2 + 12.0 * ia2.powi(3)) / 16.0
}

/// h_+ for one site: the inverse channel applied coefficient-wise to c.
pub fn corrected_site_cycle(lambda_prime: f64) -> Result<DenseOperator> {
    if lambda_prime >= 1.0 {
        return Err(Error::Singular("λ′ = 1 leaves nothing to invert".into()));
    }
    check_unit("lambda_prime", lambda_prime)?;
    let a = 1.0 - lambda_prime;
    let cyc = cycle_operator(1);
    Ok(apply_block_pauli_channel(&cyc, 3, &[0, 1, 2], |p| {
        a.powi(-(p.iter().filter(|q| **q != Pauli::I).count() as i32))
    }))
}

pub fn cycle_spectral_data(lambda_prime: f64) -> Result<CycleSpectralData> {
    let h = corrected_site_cycle(lambda_prime)?;
    let cyc = cycle_operator(1);
    let cyc2 = &cyc * &cyc;
    let id = DenseOperator::identity(8, 8);
    let w = omega();
    let proj = |s: u32| (&id + &cyc * w.powu(s).conj() + &cyc2 * w.powu(2 * s).conj()) / c(3.0);
    let projectors = [proj(0), proj(1), proj(2)];
    let alpha = [0, 1, 2].map(|s| trace_product(&projectors[s], &h) / projectors[s].trace());
    Ok(CycleSpectralData { a: 1.0 - lambda_prime, alpha, projectors })
}

/// Embed a site operator (8×8 over copies 0,1,2 of one qubit) on all n sites
/// and return it in copy-major order.
pub fn sitewise_tensor_power(site: &DenseOperator, n: usize) -> DenseOperator {
    let mut m = DenseOperator::identity(1, 1);
    for _ in 0..n {
        m = kron(&m, site);
    }
    permute_qubits(&m, 3 * n, &site_major_to_copy_major(n))
}

/// perm[J] for copy-major qubit J = c·n + j: it reads site-major qubit 3j + c.
pub fn site_major_to_copy_major(n: usize) -> Vec<usize> {
    (0..3 * n).map(|q| 3 * (q % n) + q / n).collect()
}

/// H = (π + π⁻¹)/2 on three copies of n qubits.
pub fn cycle_observable(n: usize) -> Result<ReplicaOperator> {
    check_capacity(n, 3)?;
    let pi = cycle_operator(n);
    let matrix = (&pi + pi.transpose()) / c(2.0);
    Ok(ReplicaOperator { n, copies: 3, matrix, label: ReplicaLabel::CycleObservable })
}

/// H_λ′ = (h_+^{⊗n} + h_-^{⊗n})/2, the noise-corrected cycle observable.
pub fn corrected_cycle_observable(n: usize, lambda_prime: f64) -> Result<ReplicaOperator> {
    check_capacity(n, 3)?;
    let h = corrected_site_cycle(lambda_prime)?;
    let plus = sitewise_tensor_power(&h, n);
    let matrix = (&plus + plus.adjoint()) / c(2.0);
    Ok(ReplicaOperator { n, copies: 3, matrix, label: ReplicaLabel::CycleCorrected })
}
