//! Spacetime decoding for one error sector of the growth gadget.
//!
//! Rounds t = 0..T−1 measure every check of the large patch; the last round is
//! noiseless. Detector (s, 0) exists for checks with a deterministic first
//! outcome, detector (s, t) = m_{s,t} ⊕ m_{s,t−1} for t ≥ 1. Faults are data
//! flips before round t ≥ 1, preparation flips of fresh qubits before round 0,
//! and outcome flips of rounds 0..T−2. Missing endpoints attach to a single
//! boundary vertex. Decoding is minimum-weight perfect matching on hop-count
//! distances.

use crate::error::{Error, Result};
use crate::f2::{solve_system, BitRow};
use crate::surface_code::{GrowthLayout, Sector};
use mwmatching::{Matching, SENTINEL};
use rand::Rng;
use serde::Serialize;
use std::collections::{HashMap, VecDeque};

const UNREACHABLE: u16 = u16::MAX;
/// Graphs with more vertices than this compute distances per shot.
const TABLE_MAX_VERTICES: usize = 6000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FaultKind {
    Data { site: usize, round: usize },
    Prep { site: usize },
    Meas { check: usize, round: usize },
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FaultEdge {
    pub kind: FaultKind,
    /// Endpoints; the boundary vertex stands in for missing ones.
    pub ends: [usize; 2],
}

#[derive(Clone, Debug)]
enum Distances {
    Table(Vec<u16>),
    PerShot,
}

#[derive(Clone, Debug)]
pub struct DecodingGraph {
    pub sector: Sector,
    pub rounds: usize,
    pub n_sites: usize,
    pub check_sites: Vec<Vec<usize>>,
    pub deterministic: Vec<bool>,
    /// (check, round) of each detector.
    pub detectors: Vec<(usize, usize)>,
    pub edges: Vec<FaultEdge>,
    /// Edges whose parity flips the logical outcome.
    pub logical_crossing: Vec<bool>,
    pub logical_support: Vec<usize>,
    /// Gauge (random first outcome) checks and a destabilizer for each.
    pub gauge: Vec<usize>,
    pub destabilizers: Vec<BitRow>,
    /// For each edge, the gauge slots whose first outcome it flips.
    t0_gauge_hits: Vec<Vec<u32>>,
    adjacency: Vec<Vec<(u32, u32)>>,
    distances: Distances,
    boundary_row: Vec<u16>,
}

pub fn build_decoding_graph(layout: &GrowthLayout, rounds: usize, sector: Sector) -> Result<DecodingGraph> {
    if rounds < layout.d2 {
        return Err(Error::Parameter(format!("T = {rounds} below d2 = {}", layout.d2)));
    }
    build_decoding_graph_unchecked(layout, rounds, sector)
}

/// Same construction without the T ≥ d2 requirement (small demos and tests).
pub fn build_decoding_graph_unchecked(layout: &GrowthLayout, rounds: usize, sector: Sector) -> Result<DecodingGraph> {
    if rounds < 1 {
        return Err(Error::Parameter("at least one round required".into()));
    }
    let patch = &layout.patch;
    let n_sites = patch.n_sites();
    let check_sites: Vec<Vec<usize>> = patch.checks(sector).iter().map(|p| p.sites.clone()).collect();
    let n_checks = check_sites.len();
    let deterministic = layout.deterministic[sector.index()].clone();

    let mut detectors = Vec::new();
    let mut index = vec![usize::MAX; n_checks * rounds];
    for t in 0..rounds {
        for s in 0..n_checks {
            if t > 0 || deterministic[s] {
                index[s * rounds + t] = detectors.len();
                detectors.push((s, t));
            }
        }
    }
    let boundary = detectors.len();
    let det = |s: usize, t: usize| -> Option<usize> {
        let i = index[s * rounds + t];
        (i != usize::MAX).then_some(i)
    };
    let mut site_checks = vec![Vec::new(); n_sites];
    for (s, sites) in check_sites.iter().enumerate() {
        for &q in sites {
            site_checks[q].push(s);
        }
    }
    let pair = |mut v: Vec<usize>| -> Result<[usize; 2]> {
        v.sort_unstable();
        match v.len() {
            0 => Ok([boundary, boundary]),
            1 => Ok([v[0], boundary]),
            2 => Ok([v[0], v[1]]),
            k => Err(Error::Invariant(format!("fault with {k} detectors"))),
        }
    };
    let logical_support = patch.logical_support(sector).to_vec();
    let on_logical: Vec<bool> = (0..n_sites).map(|q| logical_support.contains(&q)).collect();
    let gauge: Vec<usize> = (0..n_checks).filter(|&s| !deterministic[s]).collect();
    let gauge_slot: HashMap<usize, u32> = gauge.iter().enumerate().map(|(i, &s)| (s, i as u32)).collect();

    let mut edges = Vec::new();
    let mut crossing = Vec::new();
    let mut hits = Vec::new();
    for q in layout.prep_sensitive(sector) {
        let ends = pair(site_checks[q].iter().filter_map(|&s| det(s, 0)).collect())?;
        edges.push(FaultEdge { kind: FaultKind::Prep { site: q }, ends });
        crossing.push(on_logical[q]);
        hits.push(site_checks[q].iter().filter_map(|s| gauge_slot.get(s).copied()).collect());
    }
    for t in 1..rounds {
        for q in 0..n_sites {
            let ends = pair(site_checks[q].iter().filter_map(|&s| det(s, t)).collect())?;
            edges.push(FaultEdge { kind: FaultKind::Data { site: q, round: t }, ends });
            crossing.push(on_logical[q]);
            hits.push(Vec::new());
        }
    }
    for t in 0..rounds.saturating_sub(1) {
        for s in 0..n_checks {
            let ends = pair([det(s, t), det(s, t + 1)].into_iter().flatten().collect())?;
            edges.push(FaultEdge { kind: FaultKind::Meas { check: s, round: t }, ends });
            crossing.push(false);
            hits.push(if t == 0 { gauge_slot.get(&s).map(|&g| vec![g]).unwrap_or_default() } else { Vec::new() });
        }
    }
    for (e, edge) in edges.iter().enumerate() {
        if edge.ends == [boundary, boundary] && crossing[e] {
            return Err(Error::Invariant(format!("undetectable fault {:?} flips the logical", edge.kind)));
        }
    }

    let n_vertices = boundary + 1;
    let mut adjacency = vec![Vec::new(); n_vertices];
    for (e, edge) in edges.iter().enumerate() {
        let [a, b] = edge.ends;
        if a == b {
            continue;
        }
        adjacency[a].push((b as u32, e as u32));
        adjacency[b].push((a as u32, e as u32));
    }

    // Destabilizer of each gauge check: flips that check only and commutes
    // with the canonical logical the sector reads.
    let mut rows = patch.check_rows(sector);
    rows.push(BitRow::from_indices(n_sites, logical_support.iter().copied()));
    let mut destabilizers = Vec::with_capacity(gauge.len());
    for &s in &gauge {
        let rhs: Vec<bool> = (0..rows.len()).map(|i| i == s).collect();
        destabilizers.push(
            solve_system(&rows, &rhs, n_sites).ok_or_else(|| Error::Invariant("no destabilizer".into()))?,
        );
    }

    let mut g = DecodingGraph {
        sector,
        rounds,
        n_sites,
        check_sites,
        deterministic,
        detectors,
        edges,
        logical_crossing: crossing,
        logical_support,
        gauge,
        destabilizers,
        t0_gauge_hits: hits,
        adjacency,
        distances: Distances::PerShot,
        boundary_row: Vec::new(),
    };
    g.boundary_row = g.bfs(boundary);
    if n_vertices <= TABLE_MAX_VERTICES {
        let mut table = Vec::with_capacity(n_vertices * n_vertices);
        for v in 0..n_vertices {
            table.extend(g.bfs(v));
        }
        g.distances = Distances::Table(table);
    }
    Ok(g)
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthTrialRecord {
    pub sector: Sector,
    pub faults: Vec<usize>,
    pub syndrome: Vec<usize>,
    pub correction: Vec<usize>,
    pub logical_flip: bool,
    pub gauge_raw: Vec<bool>,
    pub gauge_corrected: Vec<bool>,
    pub frame: Vec<usize>,
}

impl DecodingGraph {
    pub fn boundary(&self) -> usize {
        self.detectors.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.detectors.len() + 1
    }

    fn bfs(&self, src: usize) -> Vec<u16> {
        let mut dist = vec![UNREACHABLE; self.n_vertices()];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for &(w, _) in &self.adjacency[u] {
                let w = w as usize;
                if dist[w] == UNREACHABLE {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    fn table_row(&self, v: usize) -> Option<&[u16]> {
        match &self.distances {
            Distances::Table(t) => {
                let n = self.n_vertices();
                Some(&t[v * n..(v + 1) * n])
            }
            Distances::PerShot => None,
        }
    }

    /// Largest number of edges sharing a detector with a given edge.
    pub fn max_line_degree(&self) -> usize {
        let b = self.boundary();
        self.edges
            .iter()
            .map(|e| {
                let mut deg: usize = e.ends.iter().filter(|&&v| v != b).map(|&v| self.adjacency[v].len() - 1).sum();
                if e.ends[0] == e.ends[1] && e.ends[0] != b {
                    deg -= self.adjacency[e.ends[0]].len() - 1;
                }
                deg
            })
            .max()
            .unwrap_or(0)
    }

    /// Independent inclusion of every edge with probability p.
    pub fn sample_faults<R: Rng + ?Sized>(&self, p: f64, rng: &mut R) -> Vec<usize> {
        sample_bernoulli_positions(self.edges.len(), p, rng)
    }

    /// Flagged detectors (sorted) of an edge set.
    pub fn syndrome_of(&self, edges: &[usize]) -> Vec<usize> {
        let b = self.boundary();
        let mut ends: Vec<usize> =
            edges.iter().flat_map(|&e| self.edges[e].ends).filter(|&v| v != b).collect();
        ends.sort_unstable();
        let mut out = Vec::with_capacity(ends.len());
        let mut i = 0;
        while i < ends.len() {
            let mut j = i;
            while j < ends.len() && ends[j] == ends[i] {
                j += 1;
            }
            if (j - i) % 2 == 1 {
                out.push(ends[i]);
            }
            i = j;
        }
        out
    }

    /// Minimum-weight correction for a syndrome, as sorted edge ids.
    pub fn decode(&self, syndrome: &[usize]) -> Result<Vec<usize>> {
        let k = syndrome.len();
        if k == 0 {
            return Ok(Vec::new());
        }
        let b = self.boundary();
        let owned: Vec<Vec<u16>>;
        let rows: Vec<&[u16]> = match &self.distances {
            Distances::Table(_) => syndrome.iter().map(|&v| self.table_row(v).unwrap()).collect(),
            Distances::PerShot => {
                owned = syndrome.iter().map(|&v| self.bfs(v)).collect();
                owned.iter().map(|r| r.as_slice()).collect()
            }
        };
        let to_b: Vec<u32> = rows.iter().map(|r| r[b] as u32).collect();
        let big: i32 = 2 * u16::MAX as i32 + 2;
        let mut medges = Vec::with_capacity(k * k);
        for i in 0..k {
            for j in i + 1..k {
                let w = rows[i][syndrome[j]];
                if w != UNREACHABLE && (w as u32) < to_b[i] + to_b[j] {
                    medges.push((i, j, big - w as i32));
                }
                medges.push((k + i, k + j, big));
            }
            if to_b[i] != UNREACHABLE as u32 {
                medges.push((i, k + i, big - to_b[i] as i32));
            }
        }
        let mate = if k == 1 {
            if to_b[0] == UNREACHABLE as u32 {
                return Err(Error::Invariant("isolated detector cannot reach the boundary".into()));
            }
            vec![1, 0]
        } else {
            Matching::new(medges).max_cardinality().solve()
        };
        let mut toggled = vec![false; self.edges.len()];
        for i in 0..k {
            let m = mate[i];
            if m == SENTINEL {
                return Err(Error::Invariant("infeasible syndrome".into()));
            }
            if m < k {
                if i < m {
                    self.walk(syndrome[i], syndrome[m], rows[m], &mut toggled)?;
                }
            } else if m == k + i {
                self.walk(syndrome[i], b, &self.boundary_row, &mut toggled)?;
            } else {
                return Err(Error::Invariant("matched to a foreign boundary copy".into()));
            }
        }
        let correction: Vec<usize> = (0..self.edges.len()).filter(|&e| toggled[e]).collect();
        if self.syndrome_of(&correction) != syndrome {
            return Err(Error::Invariant("correction boundary differs from the syndrome".into()));
        }
        Ok(correction)
    }

    /// Toggle a shortest path from u to v, descending the distance-to-v row.
    fn walk(&self, mut u: usize, v: usize, row_v: &[u16], toggled: &mut [bool]) -> Result<()> {
        while u != v {
            let here = row_v[u];
            let Some(&(w, e)) = self.adjacency[u].iter().find(|&&(w, _)| row_v[w as usize] + 1 == here) else {
                return Err(Error::Invariant("no descending neighbour on a shortest path".into()));
            };
            toggled[e as usize] ^= true;
            u = w as usize;
        }
        Ok(())
    }

    /// Parity of an edge set on the logical crossing set.
    pub fn crossing_parity(&self, edges: &[usize]) -> bool {
        edges.iter().filter(|&&e| self.logical_crossing[e]).count() % 2 == 1
    }

    /// Whether faults ⊕ correction flips the logical outcome.
    pub fn logical_flip(&self, faults: &[usize], correction: &[usize]) -> bool {
        self.crossing_parity(faults) ^ self.crossing_parity(correction)
    }

    /// Per gauge check, parity of first-round flips caused by an edge set.
    pub fn t0_gauge_parity(&self, edges: &[usize]) -> Vec<bool> {
        let mut out = vec![false; self.gauge.len()];
        for &e in edges {
            for &g in &self.t0_gauge_hits[e] {
                out[g as usize] ^= true;
            }
        }
        out
    }

    /// Corrected gauge values and the Pauli frame (site set of the sector's
    /// Pauli type) that maps them to +1.
    pub fn gauge_frame(&self, raw: &[bool], correction: &[usize]) -> Result<(Vec<bool>, BitRow)> {
        let inferred = self.t0_gauge_parity(correction);
        let corrected: Vec<bool> = raw.iter().zip(&inferred).map(|(a, b)| a ^ b).collect();
        let mut frame = BitRow::zeros(self.n_sites);
        for (i, &v) in corrected.iter().enumerate() {
            if v {
                frame.xor_with(&self.destabilizers[i]);
            }
        }
        let logical = BitRow::from_indices(self.n_sites, self.logical_support.iter().copied());
        if frame.dot(&logical) {
            return Err(Error::Invariant("gauge frame anticommutes with the canonical logical".into()));
        }
        Ok((corrected, frame))
    }

    /// Sites touched by an edge set (data and preparation faults only).
    pub fn site_action(&self, edges: &[usize]) -> BitRow {
        let mut r = BitRow::zeros(self.n_sites);
        for &e in edges {
            match self.edges[e].kind {
                FaultKind::Data { site, .. } | FaultKind::Prep { site } => r.flip(site),
                FaultKind::Meas { .. } => {}
            }
        }
        r
    }

    /// One full shot: faults, random gauge outcomes, decoding, frame, outcome.
    pub fn run_shot<R: Rng + ?Sized>(&self, p: f64, rng: &mut R) -> Result<GrowthTrialRecord> {
        let faults = self.sample_faults(p, rng);
        let noiseless: Vec<bool> = (0..self.gauge.len()).map(|_| rng.gen()).collect();
        self.process(faults, noiseless)
    }

    /// Decode a given fault set with given noiseless gauge outcomes.
    pub fn process(&self, faults: Vec<usize>, noiseless_gauge: Vec<bool>) -> Result<GrowthTrialRecord> {
        let syndrome = self.syndrome_of(&faults);
        let correction = self.decode(&syndrome)?;
        let flips = self.t0_gauge_parity(&faults);
        let gauge_raw: Vec<bool> = noiseless_gauge.iter().zip(&flips).map(|(a, b)| a ^ b).collect();
        let (gauge_corrected, frame) = self.gauge_frame(&gauge_raw, &correction)?;
        let logical_flip = self.logical_flip(&faults, &correction);
        Ok(GrowthTrialRecord {
            sector: self.sector,
            faults,
            syndrome,
            correction,
            logical_flip,
            gauge_raw,
            gauge_corrected,
            frame: frame.ones().collect(),
        })
    }
}

/// Positions of successes among `n` Bernoulli(p) trials, by geometric skips.
pub fn sample_bernoulli_positions<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Vec<usize> {
    let mut out = Vec::new();
    if p <= 0.0 || n == 0 {
        return out;
    }
    if p >= 1.0 {
        return (0..n).collect();
    }
    let log_q = (-p).ln_1p();
    let mut pos = 0usize;
    loop {
        let u: f64 = 1.0 - rng.gen::<f64>();
        let skip = (u.ln() / log_q).floor();
        if !skip.is_finite() || skip >= (n - pos) as f64 {
            break;
        }
        pos += skip as usize;
        out.push(pos);
        pos += 1;
        if pos >= n {
            break;
        }
    }
    out
}

/// Minimum fault weight and the set of logical classes (bit 0: no flip,
/// bit 1: flip) attaining it, per syndrome, over all fault sets of weight ≤ w.
pub fn exhaustive_min_weight_table(graph: &DecodingGraph, max_weight: usize) -> HashMap<Vec<usize>, (usize, u8)> {
    let mut table: HashMap<Vec<usize>, (usize, u8)> = HashMap::new();
    let n = graph.edges.len();
    let mut visit = |set: &[usize]| {
        let syn = graph.syndrome_of(set);
        let class = 1u8 << (graph.crossing_parity(set) as u8);
        let entry = table.entry(syn).or_insert((set.len(), 0));
        if set.len() < entry.0 {
            *entry = (set.len(), class);
        } else if set.len() == entry.0 {
            entry.1 |= class;
        }
    };
    let mut stack: Vec<usize> = Vec::new();
    fn rec(n: usize, start: usize, left: usize, stack: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        f(stack);
        if left == 0 {
            return;
        }
        for e in start..n {
            stack.push(e);
            rec(n, e + 1, left - 1, stack, f);
            stack.pop();
        }
    }
    rec(n, 0, max_weight, &mut stack, &mut visit);
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::css_sim::{CssState, Generator, Kind};
    use crate::surface_code::{build_growth_layout, build_growth_layout_permissive};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn memory(d: usize, t: usize, sector: Sector) -> DecodingGraph {
        build_decoding_graph(&build_growth_layout_permissive(d, d).unwrap(), t, sector).unwrap()
    }

    #[test]
    fn memory_graph_shape() {
        let g = memory(5, 5, Sector::X);
        assert_eq!(g.detectors.len(), 12 * 5);
        let b = g.boundary();
        for e in &g.edges {
            if let FaultKind::Data { site, .. } = e.kind {
                let (x, y) = (site % 5, site / 5);
                if (1..4).contains(&x) && (1..4).contains(&y) {
                    assert!(e.ends[0] != b && e.ends[1] != b);
                }
            }
        }
        assert!(build_decoding_graph(&build_growth_layout(5, 7).unwrap(), 5, Sector::X).is_err());
    }

    #[test]
    fn growth_gauge_checks_have_no_first_detector() {
        let l = build_growth_layout(5, 7).unwrap();
        for s in Sector::BOTH {
            let g = build_decoding_graph(&l, 7, s).unwrap();
            for &c in &g.gauge {
                assert!(!g.detectors.contains(&(c, 0)));
            }
            assert!(!g.gauge.is_empty());
        }
    }

    #[test]
    fn empty_and_single_faults() {
        let g = memory(5, 5, Sector::Z);
        assert!(g.decode(&[]).unwrap().is_empty());
        for e in 0..g.edges.len() {
            let syn = g.syndrome_of(&[e]);
            let c = g.decode(&syn).unwrap();
            assert_eq!(c.len(), 1, "edge {e}");
            assert!(!g.logical_flip(&[e], &c));
        }
    }

    #[test]
    fn full_logical_string_flips() {
        let g = memory(5, 5, Sector::X);
        let faults: Vec<usize> = (0..g.edges.len())
            .filter(|&e| matches!(g.edges[e].kind, FaultKind::Data { site, round: 2 } if site % 5 == 0))
            .collect();
        assert_eq!(faults.len(), 5);
        assert!(g.syndrome_of(&faults).is_empty());
        assert!(g.logical_flip(&faults, &[]));
    }

    #[test]
    fn exhaustive_d3_memory() {
        for s in Sector::BOTH {
            let g = memory(3, 3, s);
            let table = exhaustive_min_weight_table(&g, 3);
            let mut fails_at_two = 0;
            let n = g.edges.len();
            let check = |set: Vec<usize>| {
                let syn = g.syndrome_of(&set);
                let c = g.decode(&syn).unwrap();
                let (w, classes) = table[&syn];
                assert_eq!(c.len(), w);
                let class = 1u8 << (g.crossing_parity(&c) as u8);
                assert!(classes & class != 0);
                set.len() == 2 && g.logical_flip(&set, &c)
            };
            for a in 0..n {
                for b in a + 1..n {
                    fails_at_two += check(vec![a, b]) as usize;
                    for c in b + 1..n {
                        check(vec![a, b, c]);
                    }
                }
            }
            assert!(fails_at_two > 0);
        }
    }

    #[test]
    fn bernoulli_sampler_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 1000;
        let total: usize = (0..2000).map(|_| sample_bernoulli_positions(n, 0.02, &mut rng).len()).sum();
        let mean = total as f64 / 2000.0;
        let se = (n as f64 * 0.02 * 0.98 / 2000.0).sqrt();
        assert!((mean - 20.0).abs() < 3.0 * se, "{mean}");
        assert!(sample_bernoulli_positions(n, 0.0, &mut rng).is_empty());
    }

    #[test]
    fn destabilizers_are_valid() {
        let l = build_growth_layout(5, 9).unwrap();
        for s in Sector::BOTH {
            let g = build_decoding_graph(&l, 9, s).unwrap();
            let logical = BitRow::from_indices(g.n_sites, g.logical_support.iter().copied());
            for (i, &c) in g.gauge.iter().enumerate() {
                let d = &g.destabilizers[i];
                assert!(!d.dot(&logical));
                for (s2, sites) in g.check_sites.iter().enumerate() {
                    let row = BitRow::from_indices(g.n_sites, sites.iter().copied());
                    assert_eq!(d.dot(&row), s2 == c);
                }
            }
        }
    }

    /// Full stabilizer simulation of the gadget with both sectors' faults,
    /// decoded with the graphs and corrected with the frames. The tested
    /// logical must come out flipped exactly when the graph says so.
    fn physical_check(d1: usize, d2: usize, p: f64, shots: usize, seed: u64) {
        let layout = build_growth_layout_permissive(d1, d2).unwrap();
        let t = d2;
        let graphs = [
            build_decoding_graph(&layout, t, Sector::X).unwrap(),
            build_decoding_graph(&layout, t, Sector::Z).unwrap(),
        ];
        let n = layout.n_sites();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for shot in 0..shots {
            let input_kind = if shot % 2 == 0 { Kind::Z } else { Kind::X };
            let mut gens = Vec::new();
            for (kind, sector) in [(Kind::Z, Sector::X), (Kind::X, Sector::Z)] {
                for c in layout.old.checks(sector) {
                    gens.push(Generator {
                        kind,
                        support: BitRow::from_indices(n, c.sites.iter().map(|&q| layout.embed_old(q))),
                        negative: false,
                    });
                }
                for q in layout.prep_sensitive(sector) {
                    gens.push(Generator { kind, support: BitRow::from_indices(n, [q]), negative: false });
                }
            }
            let input_sector = if input_kind == Kind::Z { Sector::X } else { Sector::Z };
            gens.push(Generator {
                kind: input_kind,
                support: BitRow::from_indices(
                    n,
                    layout.old.logical_support(input_sector).iter().map(|&q| layout.embed_old(q)),
                ),
                negative: false,
            });
            let mut state = CssState::from_generators(n, gens).unwrap();
            let faults: Vec<Vec<usize>> = graphs.iter().map(|g| g.sample_faults(p, &mut rng)).collect();
            let err_kind = [Kind::X, Kind::Z];
            let check_kind = [Kind::Z, Kind::X];
            let mut outcomes: Vec<Vec<Vec<bool>>> =
                graphs.iter().map(|g| vec![vec![false; t]; g.check_sites.len()]).collect();
            for round in 0..t {
                for (si, g) in graphs.iter().enumerate() {
                    for &e in &faults[si] {
                        let hit = match g.edges[e].kind {
                            FaultKind::Prep { site } => (round == 0).then_some(site),
                            FaultKind::Data { site, round: r } => (r == round).then_some(site),
                            FaultKind::Meas { .. } => None,
                        };
                        if let Some(q) = hit {
                            state.apply(err_kind[si], &BitRow::from_indices(n, [q]));
                        }
                    }
                }
                for (si, g) in graphs.iter().enumerate() {
                    for (c, sites) in g.check_sites.iter().enumerate() {
                        let mut m = state.measure(check_kind[si], &BitRow::from_indices(n, sites.iter().copied()), &mut rng);
                        for &e in &faults[si] {
                            if let FaultKind::Meas { check, round: r } = g.edges[e].kind {
                                if check == c && r == round {
                                    m ^= true;
                                }
                            }
                        }
                        outcomes[si][c][round] = m;
                    }
                }
            }
            for (si, g) in graphs.iter().enumerate() {
                let syndrome: Vec<usize> = (0..g.detectors.len())
                    .filter(|&i| {
                        let (c, r) = g.detectors[i];
                        outcomes[si][c][r] ^ (r > 0 && outcomes[si][c][r - 1])
                    })
                    .collect();
                assert_eq!(syndrome, g.syndrome_of(&faults[si]), "shot {shot} sector {si}");
                let correction = g.decode(&syndrome).unwrap();
                let raw: Vec<bool> = g.gauge.iter().map(|&c| outcomes[si][c][0]).collect();
                let (_, frame) = g.gauge_frame(&raw, &correction).unwrap();
                let mut fix = g.site_action(&correction);
                fix.xor_with(&frame);
                state.apply(err_kind[si], &fix);
            }
            for (si, g) in graphs.iter().enumerate() {
                for sites in &g.check_sites {
                    let v = state.deterministic_value(check_kind[si], &BitRow::from_indices(n, sites.iter().copied()));
                    assert_eq!(v, Some(false), "shot {shot}: check not restored");
                }
            }
            let si = input_sector.index();
            let g = &graphs[si];
            let logical = BitRow::from_indices(n, g.logical_support.iter().copied());
            let value = state.deterministic_value(input_kind, &logical).unwrap();
            let syn = g.syndrome_of(&faults[si]);
            let predicted = g.logical_flip(&faults[si], &g.decode(&syn).unwrap());
            assert_eq!(value, predicted, "shot {shot}");
        }
    }

    #[test]
    fn stabilizer_simulation_agrees_noiseless() {
        physical_check(5, 7, 0.0, 20, 1);
        physical_check(4, 6, 0.0, 20, 2);
    }

    #[test]
    fn stabilizer_simulation_agrees_noisy() {
        physical_check(3, 5, 0.02, 200, 3);
        physical_check(4, 7, 0.01, 60, 4);
    }
}
