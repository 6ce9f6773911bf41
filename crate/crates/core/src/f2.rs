//! Linear algebra over F2 on packed bit rows.

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitRow {
    len: usize,
    words: Vec<u64>,
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        BitRow { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn from_indices(len: usize, idx: impl IntoIterator<Item = usize>) -> Self {
        let mut r = BitRow::zeros(len);
        for i in idx {
            r.flip(i);
        }
        r
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        if self.get(i) != v {
            self.flip(i);
        }
    }

    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn xor_with(&mut self, other: &BitRow) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Parity of the overlap with `other`.
    pub fn dot(&self, other: &BitRow) -> bool {
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones()).sum::<u32>() % 2 == 1
    }

    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(k, w)| k * 64 + w.trailing_zeros() as usize)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }
}

/// Row-echelon span of a list of generators, remembering which generators
/// combine into each stored row.
#[derive(Clone, Debug)]
pub struct Span {
    width: usize,
    n_gens: usize,
    rows: Vec<(usize, BitRow, BitRow)>,
}

impl Span {
    pub fn new(gens: &[BitRow], width: usize) -> Self {
        let mut s = Span { width, n_gens: gens.len(), rows: Vec::new() };
        for (g, row) in gens.iter().enumerate() {
            let combo = BitRow::from_indices(gens.len(), [g]);
            let (res, combo) = s.reduce(row.clone(), combo);
            if let Some(p) = res.first_one() {
                s.rows.push((p, res, combo));
            }
        }
        s
    }

    fn reduce(&self, mut v: BitRow, mut combo: BitRow) -> (BitRow, BitRow) {
        for (p, r, c) in &self.rows {
            if v.get(*p) {
                v.xor_with(r);
                combo.xor_with(c);
            }
        }
        (v, combo)
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn contains(&self, v: &BitRow) -> bool {
        self.express(v).is_some()
    }

    /// Generators whose sum is `v`, if any.
    pub fn express(&self, v: &BitRow) -> Option<BitRow> {
        debug_assert_eq!(v.len(), self.width);
        let (res, combo) = self.reduce(v.clone(), BitRow::zeros(self.n_gens));
        res.is_zero().then_some(combo)
    }
}

pub fn rank(rows: &[BitRow]) -> usize {
    let width = rows.first().map_or(0, |r| r.len());
    Span::new(rows, width).rank()
}

/// Some solution e of ⟨rows_i, e⟩ = rhs_i for all i, or None.
pub fn solve_system(rows: &[BitRow], rhs: &[bool], width: usize) -> Option<BitRow> {
    let mut aug: Vec<(BitRow, bool)> = rows.iter().cloned().zip(rhs.iter().copied()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..width {
        let Some(k) = (r..aug.len()).find(|&k| aug[k].0.get(col)) else { continue };
        aug.swap(r, k);
        let (pivot_row, pivot_b) = aug[r].clone();
        for (i, (row, b)) in aug.iter_mut().enumerate() {
            if i != r && row.get(col) {
                row.xor_with(&pivot_row);
                *b ^= pivot_b;
            }
        }
        pivots.push(col);
        r += 1;
        if r == aug.len() {
            break;
        }
    }
    if aug[r..].iter().any(|(_, b)| *b) {
        return None;
    }
    let mut x = BitRow::zeros(width);
    for (i, col) in pivots.iter().enumerate() {
        x.set(*col, aug[i].1);
    }
    Some(x)
}
