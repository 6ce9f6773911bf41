//! Rotated surface-code geometry and the growth layout.
//!
//! Data site (x, y) has index y·d + x. Plaquette (fx, fy) with
//! −1 ≤ fx, fy ≤ d−1 covers the in-range sites among (fx, fy), (fx+1, fy),
//! (fx, fy+1), (fx+1, fy+1). It is X-type when fx+fy is odd. Weight-two
//! X plaquettes sit on the top and bottom edges, weight-two Z plaquettes on
//! the left and right edges. The canonical X logical is the column x = 0
//! and the canonical Z logical is the row y = 0.

use crate::error::{Error, Result};
use crate::f2::{BitRow, Span};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Sector {
    /// X errors, seen by Z checks and by the Z logical.
    X,
    /// Z errors, seen by X checks and by the X logical.
    Z,
}

impl Sector {
    pub const BOTH: [Sector; 2] = [Sector::X, Sector::Z];

    pub fn index(self) -> usize {
        match self {
            Sector::X => 0,
            Sector::Z => 1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Plaquette {
    pub face: (i32, i32),
    pub sites: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CodePatch {
    pub d: usize,
    pub x_stabilizers: Vec<Plaquette>,
    pub z_stabilizers: Vec<Plaquette>,
    pub logical_x: Vec<usize>,
    pub logical_z: Vec<usize>,
}

/// Odd distance in 3..=25.
pub fn build_patch(d: usize) -> Result<CodePatch> {
    if d % 2 == 0 || !(3..=25).contains(&d) {
        return Err(Error::Parameter(format!("distance must be odd in [3, 25], got {d}")));
    }
    build_patch_any(d)
}

/// Any distance ≥ 2; even distances appear as the old patch of a growth.
pub fn build_patch_any(d: usize) -> Result<CodePatch> {
    if d < 2 {
        return Err(Error::Parameter(format!("distance must be ≥ 2, got {d}")));
    }
    let di = d as i32;
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    for fy in -1..di {
        for fx in -1..di {
            let is_x = (fx + fy).rem_euclid(2) == 1;
            let tb = fy == -1 || fy == di - 1;
            let lr = fx == -1 || fx == di - 1;
            if (tb && lr) || (tb && !is_x) || (lr && is_x) {
                continue;
            }
            let mut sites = Vec::with_capacity(4);
            for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                let (x, y) = (fx + dx, fy + dy);
                if (0..di).contains(&x) && (0..di).contains(&y) {
                    sites.push(y as usize * d + x as usize);
                }
            }
            let p = Plaquette { face: (fx, fy), sites };
            if is_x {
                xs.push(p);
            } else {
                zs.push(p);
            }
        }
    }
    Ok(CodePatch {
        d,
        x_stabilizers: xs,
        z_stabilizers: zs,
        logical_x: (0..d).map(|y| y * d).collect(),
        logical_z: (0..d).collect(),
    })
}

impl CodePatch {
    pub fn n_sites(&self) -> usize {
        self.d * self.d
    }

    /// Checks that detect errors of this sector.
    pub fn checks(&self, sector: Sector) -> &[Plaquette] {
        match sector {
            Sector::X => &self.z_stabilizers,
            Sector::Z => &self.x_stabilizers,
        }
    }

    /// Support of the logical whose outcome errors of this sector flip.
    pub fn logical_support(&self, sector: Sector) -> &[usize] {
        match sector {
            Sector::X => &self.logical_z,
            Sector::Z => &self.logical_x,
        }
    }

    pub fn check_rows(&self, sector: Sector) -> Vec<BitRow> {
        self.checks(sector)
            .iter()
            .map(|p| BitRow::from_indices(self.n_sites(), p.sites.iter().copied()))
            .collect()
    }

    pub fn site_xy(&self, q: usize) -> (usize, usize) {
        (q % self.d, q / self.d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum InitBasis {
    /// |0⟩, stabilized by Z.
    Zero,
    /// |+⟩, stabilized by X.
    Plus,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthLayout {
    pub d1: usize,
    pub d2: usize,
    pub old: CodePatch,
    pub patch: CodePatch,
    /// Initial basis of each SC(d2) site; None on the old patch.
    pub init_basis: Vec<Option<InitBasis>>,
    /// Per sector, whether each check's first measurement is deterministic.
    pub deterministic: [Vec<bool>; 2],
}

pub const MIN_OLD_DISTANCE: usize = 4;

/// Growth with the bound-regime requirement d1 ≥ 4.
pub fn build_growth_layout(d1: usize, d2: usize) -> Result<GrowthLayout> {
    if d1 < MIN_OLD_DISTANCE && d1 != d2 {
        return Err(Error::Parameter(format!(
            "d1 = {d1} below the minimum {MIN_OLD_DISTANCE}; use the permissive constructor for demos"
        )));
    }
    build_growth_layout_permissive(d1, d2)
}

/// Growth allowing any 2 ≤ d1 ≤ d2. With d1 = d2 this is a memory experiment.
pub fn build_growth_layout_permissive(d1: usize, d2: usize) -> Result<GrowthLayout> {
    if d1 > d2 {
        return Err(Error::Parameter(format!("need d1 ≤ d2, got ({d1}, {d2})")));
    }
    if d2 > 25 {
        return Err(Error::Parameter(format!("d2 = {d2} above 25")));
    }
    let old = build_patch_any(d1)?;
    let patch = build_patch_any(d2)?;
    let init_basis: Vec<Option<InitBasis>> = (0..d2 * d2)
        .map(|q| {
            let (x, y) = (q % d2, q / d2);
            if x < d1 && y < d1 {
                None
            } else if y > x {
                Some(InitBasis::Plus)
            } else {
                Some(InitBasis::Zero)
            }
        })
        .collect();
    let mut layout = GrowthLayout { d1, d2, old, patch, init_basis, deterministic: [Vec::new(), Vec::new()] };
    for sector in Sector::BOTH {
        let span = Span::new(&layout.initial_generators(sector), d2 * d2);
        layout.deterministic[sector.index()] =
            layout.patch.check_rows(sector).iter().map(|r| span.contains(r)).collect();
    }
    Ok(layout)
}

impl GrowthLayout {
    pub fn n_sites(&self) -> usize {
        self.d2 * self.d2
    }

    /// Map an SC(d1) site index to its SC(d2) index.
    pub fn embed_old(&self, q: usize) -> usize {
        let (x, y) = (q % self.d1, q / self.d1);
        y * self.d2 + x
    }

    /// New sites whose preparation is flipped by errors of this sector
    /// (|0⟩ sites for X errors, |+⟩ sites for Z errors).
    pub fn prep_sensitive(&self, sector: Sector) -> Vec<usize> {
        let want = match sector {
            Sector::X => InitBasis::Zero,
            Sector::Z => InitBasis::Plus,
        };
        (0..self.n_sites()).filter(|&q| self.init_basis[q] == Some(want)).collect()
    }

    /// Generators, of the checks' Pauli type, of the stabilizer group right
    /// after preparation: old-patch checks and single-site stabilizers of the
    /// fresh qubits.
    pub fn initial_generators(&self, sector: Sector) -> Vec<BitRow> {
        let n = self.n_sites();
        let mut gens: Vec<BitRow> = self
            .old
            .checks(sector)
            .iter()
            .map(|p| BitRow::from_indices(n, p.sites.iter().map(|&q| self.embed_old(q))))
            .collect();
        for q in self.prep_sensitive(sector) {
            gens.push(BitRow::from_indices(n, [q]));
        }
        gens
    }

    pub fn deterministic_initial_measurements(&self, sector: Sector) -> Vec<usize> {
        (0..self.deterministic[sector.index()].len()).filter(|&i| self.deterministic[sector.index()][i]).collect()
    }

    pub fn gauge_checks(&self, sector: Sector) -> Vec<usize> {
        (0..self.deterministic[sector.index()].len()).filter(|&i| !self.deterministic[sector.index()][i]).collect()
    }

    /// Whether the SC(d2) canonical logical, times the old-patch logical of the
    /// same type, lies in the initial stabilizer group of that type. `sector`
    /// selects the logical read by that sector.
    pub fn logical_intertwines(&self, sector: Sector) -> bool {
        let n = self.n_sites();
        let mut v = BitRow::from_indices(n, self.patch.logical_support(sector).iter().copied());
        v.xor_with(&BitRow::from_indices(
            n,
            self.old.logical_support(sector).iter().map(|&q| self.embed_old(q)),
        ));
        // The logical read by sector X is Z-type, so it lives in the Z-type
        // initial group, which is the one whose generators detect X errors.
        Span::new(&self.initial_generators(sector), n).contains(&v)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("layout serializes")
    }
}

/// Length of the shortest logical error string through (x, y, t).
pub fn spacetime_distance(x: usize, y: usize, t: usize, d1: usize, d2: usize) -> Result<usize> {
    if x >= d2 || y >= d2 || d1 > d2 {
        return Err(Error::Parameter(format!("({x}, {y}) outside the d2 = {d2} patch")));
    }
    let base = if y <= d1 && x <= d1 {
        d1
    } else if y <= d1 {
        x
    } else if x > y {
        x
    } else {
        y
    };
    Ok((base + t).min(d2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::f2::rank;

    fn overlap(a: &[usize], b: &[usize]) -> usize {
        a.iter().filter(|q| b.contains(q)).count()
    }

    #[test]
    fn patch_counts() {
        let p = build_patch(3).unwrap();
        assert_eq!((p.x_stabilizers.len(), p.z_stabilizers.len()), (4, 4));
        let p = build_patch(5).unwrap();
        assert_eq!(p.x_stabilizers.len() + p.z_stabilizers.len(), 24);
        assert!(build_patch(4).is_err() && build_patch(27).is_err());
    }

    #[test]
    fn patch_algebra() {
        for d in 2..=9 {
            let p = build_patch_any(d).unwrap();
            assert_eq!(p.x_stabilizers.len() + p.z_stabilizers.len(), d * d - 1, "d={d}");
            for a in &p.x_stabilizers {
                for b in &p.z_stabilizers {
                    assert_eq!(overlap(&a.sites, &b.sites) % 2, 0);
                }
                assert_eq!(overlap(&a.sites, &p.logical_z) % 2, 0);
            }
            for b in &p.z_stabilizers {
                assert_eq!(overlap(&b.sites, &p.logical_x) % 2, 0);
            }
            assert_eq!(overlap(&p.logical_x, &p.logical_z), 1);
            for s in Sector::BOTH {
                let rows = p.check_rows(s);
                assert_eq!(rank(&rows), rows.len());
            }
        }
    }

    #[test]
    fn growth_rejections_and_memory() {
        assert!(build_growth_layout(3, 7).is_err());
        assert!(build_growth_layout_permissive(3, 7).is_ok());
        assert!(build_growth_layout(7, 5).is_err());
        let mem = build_growth_layout(5, 5).unwrap();
        assert!(mem.init_basis.iter().all(|b| b.is_none()));
        for s in Sector::BOTH {
            assert!(mem.gauge_checks(s).is_empty());
        }
    }

    #[test]
    fn diagonal_split_and_logical_extension() {
        let l = build_growth_layout(5, 9).unwrap();
        for q in 0..81 {
            let (x, y) = (q % 9, q / 9);
            match l.init_basis[q] {
                None => assert!(x < 5 && y < 5),
                Some(InitBasis::Plus) => assert!(y > x),
                Some(InitBasis::Zero) => assert!(y <= x),
            }
        }
        for &q in &l.patch.logical_x {
            assert!(matches!(l.init_basis[q], None | Some(InitBasis::Plus)));
        }
        for &q in &l.patch.logical_z {
            assert!(matches!(l.init_basis[q], None | Some(InitBasis::Zero)));
        }
    }

    #[test]
    fn gauge_structure() {
        let l = build_growth_layout(5, 7).unwrap();
        for s in Sector::BOTH {
            let gauge = l.gauge_checks(s);
            assert!(!gauge.is_empty());
            // A check fully inside the region of matching fresh qubits is deterministic.
            let fixed = l.prep_sensitive(s);
            for (i, c) in l.patch.checks(s).iter().enumerate() {
                if c.sites.iter().all(|q| fixed.contains(q)) {
                    assert!(l.deterministic[s.index()][i]);
                }
            }
        }
    }

    #[test]
    fn noiseless_intertwining() {
        for (d1, d2) in [(5, 5), (5, 7), (5, 9), (4, 8)] {
            let l = build_growth_layout(d1, d2).unwrap();
            for s in Sector::BOTH {
                assert!(l.logical_intertwines(s), "({d1},{d2}) {s:?}");
            }
        }
    }

    #[test]
    fn distance_cases() {
        assert_eq!(spacetime_distance(0, 0, 0, 5, 9).unwrap(), 5);
        assert_eq!(spacetime_distance(7, 2, 1, 5, 9).unwrap(), 8);
        assert_eq!(spacetime_distance(2, 6, 0, 5, 9).unwrap(), 6);
        assert_eq!(spacetime_distance(8, 6, 0, 5, 9).unwrap(), 8);
        for x in 0..9 {
            for y in 0..9 {
                assert_eq!(spacetime_distance(x, y, 9, 5, 9).unwrap(), 9);
            }
        }
        assert!(spacetime_distance(9, 0, 0, 5, 9).is_err());
    }

    #[test]
    fn layout_json_round() {
        let l = build_growth_layout(4, 6).unwrap();
        let v: serde_json::Value = serde_json::from_str(&l.to_json()).unwrap();
        assert_eq!(v["d2"], 6);
    }
}

#[cfg(test)]
mod gauge_products {
    //! No product of random first-round outcomes is itself deterministic, so
    //! single-check detectors capture all first-round information.
    use super::*;
    use crate::f2::rank;

    #[test]
    fn deterministic_checks_span_the_intersection() {
        for (d1, d2) in [(4, 6), (5, 7), (5, 9), (5, 11), (4, 9), (3, 7)] {
            let l = build_growth_layout_permissive(d1, d2).unwrap();
            for s in Sector::BOTH {
                let checks = l.patch.check_rows(s);
                let init = l.initial_generators(s);
                let mut both = checks.clone();
                both.extend(init.iter().cloned());
                let inter = rank(&checks) + rank(&init) - rank(&both);
                assert_eq!(inter, l.deterministic_initial_measurements(s).len(), "({d1},{d2}) {s:?}");
            }
        }
    }
}
