//! Pauli strings in symplectic form and the diagonal Pauli channels used
//! throughout: depolarizing D_λ, the composite channel N and the inverse I_λ.

use crate::dense::{kron, DenseOperator};
use crate::error::{check_unit, Error, Result};
use num_complex::Complex64;
use serde::Serialize;
use std::fmt;

const WORD: usize = 64;

/// Single-site Pauli label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    /// Index in the order I, X, Y, Z.
    pub fn index(self) -> usize {
        match self {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    }

    pub fn from_index(i: usize) -> Pauli {
        [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][i & 3]
    }

    pub fn matrix(self) -> DenseOperator {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let m = match self {
            Pauli::I => [l, o, o, l],
            Pauli::X => [o, l, l, o],
            Pauli::Y => [o, -i, i, o],
            Pauli::Z => [l, o, o, -l],
        };
        DenseOperator::from_row_slice(2, 2, &m)
    }
}

/// An n-site Pauli word with a phase i^phase. The word is stored as two bit
/// vectors; Y sites carry both bits and the Y matrix itself (no extra phase).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phase: u8,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        let w = n.div_ceil(WORD).max(1);
        PauliString { n, x: vec![0; w], z: vec![0; w], phase: 0 }
    }

    pub fn from_paulis(ps: &[Pauli]) -> Self {
        let mut out = PauliString::identity(ps.len());
        for (i, p) in ps.iter().enumerate() {
            out.set(i, *p);
        }
        out
    }

    /// Build a pure X-type or Z-type string from a list of sites.
    pub fn from_sites(n: usize, sites: &[usize], p: Pauli) -> Self {
        let mut out = PauliString::identity(n);
        for &s in sites {
            out.set(s, p);
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Phase exponent k in i^k.
    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn with_phase(mut self, k: u8) -> Self {
        self.phase = k & 3;
        self
    }

    pub fn get(&self, i: usize) -> Pauli {
        let (w, b) = (i / WORD, i % WORD);
        Pauli::from_bits((self.x[w] >> b) & 1 == 1, (self.z[w] >> b) & 1 == 1)
    }

    pub fn set(&mut self, i: usize, p: Pauli) {
        assert!(i < self.n, "site {i} out of range for n = {}", self.n);
        let (w, b) = (i / WORD, i % WORD);
        let (xb, zb) = p.bits();
        self.x[w] = (self.x[w] & !(1 << b)) | ((xb as u64) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | ((zb as u64) << b);
    }

    pub fn weight(&self) -> usize {
        self.x.iter().zip(&self.z).map(|(a, b)| (a | b).count_ones() as usize).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    /// Symplectic commutation test.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        assert_eq!(self.n, other.n);
        let mut parity = 0u32;
        for w in 0..self.x.len() {
            parity ^= ((self.x[w] & other.z[w]) ^ (self.z[w] & other.x[w])).count_ones() & 1;
        }
        parity == 0
    }

    /// Product self·other with the phase tracked exactly.
    pub fn mul(&self, other: &PauliString) -> PauliString {
        assert_eq!(self.n, other.n);
        let mut phase = self.phase as u32 + other.phase as u32;
        for i in 0..self.n {
            phase += single_product_phase(self.get(i), other.get(i)) as u32;
        }
        let x = self.x.iter().zip(&other.x).map(|(a, b)| a ^ b).collect();
        let z = self.z.iter().zip(&other.z).map(|(a, b)| a ^ b).collect();
        PauliString { n: self.n, x, z, phase: (phase % 4) as u8 }
    }

    pub fn dense(&self) -> Result<DenseOperator> {
        if self.n > 12 {
            return Err(Error::Capacity(format!("dense form needs n ≤ 12, got {}", self.n)));
        }
        let mut m = DenseOperator::identity(1, 1);
        for i in 0..self.n {
            m = kron(&m, &self.get(i).matrix());
        }
        let ph = Complex64::i().powu(self.phase as u32);
        Ok(m * ph)
    }

    /// Mask form for qubit counts up to 64: bit (n-1-j) holds qubit j, the
    /// same convention as `kron`, so qubit 0 is the most significant.
    pub fn masks(&self) -> (u64, u64) {
        assert!(self.n <= 64);
        let mut xm = 0u64;
        let mut zm = 0u64;
        for j in 0..self.n {
            let (xb, zb) = self.get(j).bits();
            let bit = 1u64 << (self.n - 1 - j);
            if xb {
                xm |= bit;
            }
            if zb {
                zm |= bit;
            }
        }
        (xm, zm)
    }
}

/// Phase exponent of a·b for single-site Paulis (XY = iZ and cyclic).
fn single_product_phase(a: Pauli, b: Pauli) -> u8 {
    use Pauli::*;
    match (a, b) {
        (X, Y) | (Y, Z) | (Z, X) => 1,
        (Y, X) | (Z, Y) | (X, Z) => 3,
        _ => 0,
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = ["+", "+i", "-", "-i"][self.phase as usize];
        write!(f, "{sign}")?;
        for i in 0..self.n {
            let c = ['I', 'X', 'Y', 'Z'][self.get(i).index()];
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let ps: Result<Vec<Pauli>> = s
            .chars()
            .map(|c| match c {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                _ => Err(Error::Parameter(format!("bad Pauli character {c:?}"))),
            })
            .collect();
        Ok(PauliString::from_paulis(&ps?))
    }
}

/// Noise strengths for a raw learner (λ) and an injected learner (λ′).
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct NoiseParams {
    pub lambda_raw: f64,
    pub lambda_inj: f64,
}

impl NoiseParams {
    pub fn new(lambda_raw: f64, lambda_inj: f64) -> Result<Self> {
        check_unit("lambda_raw", lambda_raw)?;
        check_unit("lambda_inj", lambda_inj)?;
        Ok(NoiseParams { lambda_raw, lambda_inj })
    }

    pub fn eta(&self) -> f64 {
        1.0 - self.lambda_raw
    }

    pub fn a(&self) -> f64 {
        1.0 - self.lambda_inj
    }
}

/// Eigenvalue of D_λ^{⊗n} on `p`: (1-λ)^w.
pub fn depolarize_coefficient(p: &PauliString, lambda: f64) -> Result<f64> {
    check_unit("lambda", lambda)?;
    Ok((1.0 - lambda).powi(p.weight() as i32))
}

/// Eigenvalue of the composite channel N on `p`: (1-λ)^{w + ⌈w/2⌉}.
pub fn channel_n_coefficient(p: &PauliString, lambda: f64) -> Result<f64> {
    check_unit("lambda", lambda)?;
    Ok(n_exponent_coefficient(p.weight(), 1.0 - lambda))
}

pub(crate) fn n_exponent_coefficient(w: usize, eta: f64) -> f64 {
    eta.powi((w + w.div_ceil(2)) as i32)
}

/// Eigenvalue of the inverse depolarizing channel: (1-λ)^{-w}.
pub fn inverse_channel_coefficient(p: &PauliString, lambda: f64) -> Result<f64> {
    if lambda >= 1.0 {
        return Err(Error::Singular("inverse of D_1 does not exist".into()));
    }
    check_unit("lambda", lambda)?;
    Ok((1.0 - lambda).powi(-(p.weight() as i32)))
}

/// Enumerate all 4^n Pauli words on n sites, index digit i ↔ site i.
pub fn all_paulis(n: usize) -> impl Iterator<Item = PauliString> {
    (0..4usize.pow(n as u32)).map(move |mut idx| {
        let mut p = PauliString::identity(n);
        for i in (0..n).rev() {
            p.set(i, Pauli::from_index(idx & 3));
            idx >>= 2;
        }
        p
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::max_abs;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn weights() {
        assert_eq!(ps("XIZ").weight(), 2);
        assert_eq!(ps("IIII").weight(), 0);
        assert_eq!(ps("YYYYY").weight(), 5);
    }

    #[test]
    fn coefficients() {
        assert_eq!(depolarize_coefficient(&ps("III"), 0.3).unwrap(), 1.0);
        assert!((depolarize_coefficient(&ps("XI"), 0.1).unwrap() - 0.9).abs() < 1e-15);
        assert!((depolarize_coefficient(&ps("XZ"), 0.1).unwrap() - 0.81).abs() < 1e-15);
        assert_eq!(channel_n_coefficient(&ps("II"), 0.5).unwrap(), 1.0);
        assert!((channel_n_coefficient(&ps("XZ"), 0.1).unwrap() - 0.729).abs() < 1e-15);
        let l: f64 = 0.37;
        assert!((channel_n_coefficient(&ps("XYZ"), l).unwrap() - (1.0 - l).powi(5)).abs() < 1e-15);
        assert!((inverse_channel_coefficient(&ps("Z"), 0.2).unwrap() - 1.25).abs() < 1e-15);
        assert!(inverse_channel_coefficient(&ps("Z"), 1.0).is_err());
        assert!(depolarize_coefficient(&ps("Z"), 1.2).is_err());
    }

    #[test]
    fn dense_single_sites() {
        let x = ps("X").dense().unwrap();
        assert_eq!(x[(0, 1)], Complex64::new(1.0, 0.0));
        assert_eq!(x[(0, 0)], Complex64::new(0.0, 0.0));
        let z = ps("Z").dense().unwrap();
        assert_eq!(z[(1, 1)], Complex64::new(-1.0, 0.0));
        assert!(ps("XZ").dense().unwrap().trace().norm() < 1e-15);
        assert!(PauliString::identity(13).dense().is_err());
    }

    #[test]
    fn products_match_dense_exhaustively() {
        for n in 1..=2 {
            let all: Vec<_> = all_paulis(n).collect();
            for p in &all {
                for q in &all {
                    let lhs = p.dense().unwrap() * q.dense().unwrap();
                    let rhs = p.mul(q).dense().unwrap();
                    assert!(max_abs(&(lhs - rhs)) < 1e-14, "{p} * {q}");
                    let anti = p.dense().unwrap() * q.dense().unwrap()
                        - q.dense().unwrap() * p.dense().unwrap();
                    assert_eq!(max_abs(&anti) < 1e-14, p.commutes_with(q));
                }
            }
        }
    }

    #[test]
    fn masks_follow_kron_order() {
        let p = ps("XIZ");
        assert_eq!(p.masks(), (0b100, 0b001));
    }
}
