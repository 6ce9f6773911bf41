//! Stabilizer simulation restricted to CSS states: every generator is a pure
//! X-type or pure Z-type Pauli with a sign. Measuring pure-type operators and
//! applying Pauli errors keeps that form, which is all the injection gadget
//! needs. Used as an independent oracle for the decoder's frame bookkeeping.

use crate::error::{Error, Result};
use crate::f2::{BitRow, Span};
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    X,
    Z,
}

impl Kind {
    pub fn other(self) -> Kind {
        match self {
            Kind::X => Kind::Z,
            Kind::Z => Kind::X,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Generator {
    pub kind: Kind,
    pub support: BitRow,
    /// True for a −1 sign.
    pub negative: bool,
}

#[derive(Clone, Debug)]
pub struct CssState {
    pub n: usize,
    gens: Vec<Generator>,
}

impl CssState {
    /// State stabilized by the given (commuting, independent, n of them) generators.
    pub fn from_generators(n: usize, gens: Vec<Generator>) -> Result<Self> {
        if gens.len() != n {
            return Err(Error::Invariant(format!("{} generators for {n} qubits", gens.len())));
        }
        for (i, a) in gens.iter().enumerate() {
            for b in &gens[i + 1..] {
                if a.kind != b.kind && a.support.dot(&b.support) {
                    return Err(Error::Invariant("generators do not commute".into()));
                }
            }
        }
        for kind in [Kind::X, Kind::Z] {
            let rows: Vec<BitRow> = gens.iter().filter(|g| g.kind == kind).map(|g| g.support.clone()).collect();
            if crate::f2::rank(&rows) != rows.len() {
                return Err(Error::Invariant("dependent generators".into()));
            }
        }
        Ok(CssState { n, gens })
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }

    /// Flip the signs of generators that anticommute with the Pauli.
    pub fn apply(&mut self, kind: Kind, support: &BitRow) {
        for g in &mut self.gens {
            if g.kind != kind && g.support.dot(support) {
                g.negative ^= true;
            }
        }
    }

    /// Value of a pure-type Pauli if it is in the stabilizer group (true = −1).
    pub fn deterministic_value(&self, kind: Kind, support: &BitRow) -> Option<bool> {
        if self.gens.iter().any(|g| g.kind != kind && g.support.dot(support)) {
            return None;
        }
        let same: Vec<&Generator> = self.gens.iter().filter(|g| g.kind == kind).collect();
        let rows: Vec<BitRow> = same.iter().map(|g| g.support.clone()).collect();
        let combo = Span::new(&rows, self.n).express(support)?;
        Some(combo.ones().fold(false, |acc, i| acc ^ same[i].negative))
    }

    /// Projective measurement; random outcomes come from `rng`. Returns true for −1.
    pub fn measure<R: Rng + ?Sized>(&mut self, kind: Kind, support: &BitRow, rng: &mut R) -> bool {
        let anti: Vec<usize> =
            (0..self.gens.len()).filter(|&i| self.gens[i].kind != kind && self.gens[i].support.dot(support)).collect();
        let Some((&first, rest)) = anti.split_first() else {
            return self
                .deterministic_value(kind, support)
                .expect("a commuting pure-type Pauli lies in a maximal CSS stabilizer group");
        };
        let pivot = self.gens[first].clone();
        for &i in rest {
            self.gens[i].support.xor_with(&pivot.support);
            self.gens[i].negative ^= pivot.negative;
        }
        let outcome = rng.gen::<bool>();
        self.gens[first] = Generator { kind, support: support.clone(), negative: outcome };
        outcome
    }
}
