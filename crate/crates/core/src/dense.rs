//! Small dense complex matrices and the handful of channel primitives the
//! exact oracles need. Qubit 0 is the most significant bit of a basis index.

use crate::pauli::Pauli;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type DenseOperator = DMatrix<Complex64>;
pub type StateVector = DVector<Complex64>;

pub const MAX_QUBITS: usize = 12;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn kron(a: &DenseOperator, b: &DenseOperator) -> DenseOperator {
    a.kronecker(b)
}

pub fn max_abs(a: &DenseOperator) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

pub fn is_hermitian(a: &DenseOperator, tol: f64) -> bool {
    max_abs(&(a - a.adjoint())) <= tol
}

pub fn frobenius_sq(a: &DenseOperator) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// tr(a·b) without forming the product.
pub fn trace_product(a: &DenseOperator, b: &DenseOperator) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// P·A·P for a Hermitian Pauli given by x/z masks; the i^{#Y} phases cancel.
pub fn pauli_conjugate(a: &DenseOperator, xm: usize, zm: usize) -> DenseOperator {
    let d = a.nrows();
    let sign = |k: usize| if (k & zm).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    DenseOperator::from_fn(d, d, |i, j| {
        let (k, l) = (i ^ xm, j ^ xm);
        a[(k, l)] * (sign(k) * sign(l))
    })
}

fn block_mask(n: usize, qubits: &[usize], paulis: &[Pauli]) -> (usize, usize) {
    let mut xm = 0;
    let mut zm = 0;
    for (q, p) in qubits.iter().zip(paulis) {
        let bit = 1usize << (n - 1 - q);
        let (xb, zb) = p.bits();
        if xb {
            xm |= bit;
        }
        if zb {
            zm |= bit;
        }
    }
    (xm, zm)
}

fn paulis_of_index(mut idx: usize, q: usize) -> Vec<Pauli> {
    let mut out = vec![Pauli::I; q];
    for slot in out.iter_mut().rev() {
        *slot = Pauli::from_index(idx & 3);
        idx >>= 2;
    }
    out
}

fn anticommute(a: &[Pauli], b: &[Pauli]) -> bool {
    let mut parity = false;
    for (p, q) in a.iter().zip(b) {
        let (px, pz) = p.bits();
        let (qx, qz) = q.bits();
        parity ^= (px & qz) ^ (pz & qx);
    }
    parity
}

/// Apply a Pauli-diagonal channel acting on the listed qubits, with eigenvalue
/// `coeff(P)` on the block Pauli P. Realised as Σ_Q f_Q Q·A·Q with
/// f_Q = 4^{-q} Σ_P coeff(P)·(±1 by commutation of P and Q).
pub fn apply_block_pauli_channel<F>(a: &DenseOperator, n: usize, qubits: &[usize], coeff: F) -> DenseOperator
where
    F: Fn(&[Pauli]) -> f64,
{
    let q = qubits.len();
    let count = 1usize << (2 * q);
    let labels: Vec<Vec<Pauli>> = (0..count).map(|i| paulis_of_index(i, q)).collect();
    let coeffs: Vec<f64> = labels.iter().map(|p| coeff(p)).collect();
    let mut out = DenseOperator::zeros(a.nrows(), a.ncols());
    for qlab in &labels {
        let f: f64 = labels
            .iter()
            .zip(&coeffs)
            .map(|(p, cp)| if anticommute(p, qlab) { -cp } else { *cp })
            .sum::<f64>()
            / count as f64;
        if f.abs() < 1e-300 {
            continue;
        }
        let (xm, zm) = block_mask(n, qubits, qlab);
        out += pauli_conjugate(a, xm, zm) * c(f);
    }
    out
}

/// D_λ on every qubit of an n-qubit operator.
pub fn depolarize_all(a: &DenseOperator, n: usize, lambda: f64) -> DenseOperator {
    let mut out = a.clone();
    for q in 0..n {
        out = apply_block_pauli_channel(&out, n, &[q], |p| if p[0] == Pauli::I { 1.0 } else { 1.0 - lambda });
    }
    out
}

/// Reorder qubits: qubit j of the result is qubit `perm[j]` of the input.
pub fn permute_qubits(a: &DenseOperator, n: usize, perm: &[usize]) -> DenseOperator {
    let d = 1usize << n;
    let map: Vec<usize> = (0..d)
        .map(|new| {
            let mut old = 0usize;
            for (j, &src) in perm.iter().enumerate() {
                let bit = (new >> (n - 1 - j)) & 1;
                old |= bit << (n - 1 - src);
            }
            old
        })
        .collect();
    DenseOperator::from_fn(d, d, |i, j| a[(map[i], map[j])])
}

/// Trace out the first tensor factor of dimension `d1`.
pub fn partial_trace_first(a: &DenseOperator, d1: usize) -> DenseOperator {
    let d2 = a.nrows() / d1;
    DenseOperator::from_fn(d2, d2, |i, j| (0..d1).map(|k| a[(k * d2 + i, k * d2 + j)]).sum())
}

/// Hermitian eigendecomposition with ascending eigenvalues.
pub fn hermitian_eigen(a: &DenseOperator) -> (Vec<f64>, DenseOperator) {
    let eig = a.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DenseOperator::from_fn(a.nrows(), a.ncols(), |r, k| eig.eigenvectors[(r, order[k])]);
    (vals, vecs)
}

/// f(A) for Hermitian A via its eigendecomposition.
pub fn hermitian_function<F: Fn(f64) -> Complex64>(a: &DenseOperator, f: F) -> DenseOperator {
    let (vals, vecs) = hermitian_eigen(a);
    let diag = DenseOperator::from_diagonal(&DVector::from_iterator(vals.len(), vals.iter().map(|&v| f(v))));
    &vecs * diag * vecs.adjoint()
}

pub fn trace_distance(a: &DenseOperator, b: &DenseOperator) -> f64 {
    let (vals, _) = hermitian_eigen(&(a - b));
    0.5 * vals.iter().map(|v| v.abs()).sum::<f64>()
}

pub fn projector(v: &StateVector) -> DenseOperator {
    v * v.adjoint()
}

/// Haar-random pure state via a normalised complex Gaussian vector.
pub fn haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
    let v = StateVector::from_fn(dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let norm = v.norm();
    v / c(norm)
}

/// Random full-rank density matrix (Ginibre construction), for tests.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DenseOperator {
    let g = DenseOperator::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let m = &g * g.adjoint();
    let t = m.trace();
    m / t
}
