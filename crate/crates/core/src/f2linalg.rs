//! Dense linear algebra over F_2 with bit-packed rows.
//!
//! Matrices act on column vectors: an `r x c` matrix is a map `F_2^c -> F_2^r`,
//! so column `j` holds the image of the `j`-th source basis vector.
//! Row reduction always picks the leftmost nonzero column and, within it,
//! the topmost available row, so every basis returned here is deterministic.

use serde::Serialize;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("composite d_out * d_in is nonzero (rank {rank})")]
    CompositionNonzero { rank: usize },
}

const W: usize = 64;

fn words_for(len: usize) -> usize {
    len.div_ceil(W)
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(i, true);
        v
    }

    pub fn from_indices(len: usize, idx: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(len);
        for i in idx {
            v.toggle(i);
        }
        v
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        Self::from_indices(
            bits.len(),
            bits.iter()
                .enumerate()
                .filter(|(_, &b)| b & 1 == 1)
                .map(|(i, _)| i),
        )
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / W] >> (i % W)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, b: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        if b {
            self.words[i / W] |= 1 << (i % W);
        } else {
            self.words[i / W] &= !(1 << (i % W));
        }
    }

    pub fn toggle(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / W] ^= 1 << (i % W);
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
    }

    pub fn and_parity(&self, other: &BitVec) -> bool {
        let mut acc = 0u32;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= (a & b).count_ones() & 1;
        }
        acc == 1
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Index of the leftmost (lowest index) set bit.
    pub fn leading(&self) -> Option<usize> {
        for (k, &w) in self.words.iter().enumerate() {
            if w != 0 {
                return Some(k * W + w.trailing_zeros() as usize);
            }
        }
        None
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(k * W + t)
                }
            })
        })
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", if self.get(i) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BitVec>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BitMatrix {
            rows,
            cols,
            data: vec![BitVec::zeros(cols); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(cols: usize, rows: Vec<BitVec>) -> Self {
        for r in &rows {
            assert_eq!(r.len(), cols, "row length must equal column count");
        }
        BitMatrix {
            rows: rows.len(),
            cols,
            data: rows,
        }
    }

    /// Builds the matrix whose `j`-th column is `columns[j]`.
    pub fn from_columns(rows: usize, columns: &[BitVec]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows, "column length must equal row count");
            for i in c.ones() {
                m.set(i, j, true);
            }
        }
        m
    }

    pub fn from_dense(rows: &[Vec<u8>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Self::from_rows(cols, rows.iter().map(|r| BitVec::from_bits(r)).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BitVec {
        &self.data[i]
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i].get(j)
    }

    pub fn set(&mut self, i: usize, j: usize, b: bool) {
        self.data[i].set(j, b)
    }

    pub fn toggle(&mut self, i: usize, j: usize) {
        self.data[i].toggle(j)
    }

    pub fn column(&self, j: usize) -> BitVec {
        BitVec::from_indices(self.rows, (0..self.rows).filter(|&i| self.get(i, j)))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(BitVec::is_zero)
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for (i, r) in self.data.iter().enumerate() {
            for j in r.ones() {
                t.set(j, i, true);
            }
        }
        t
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .map(|r| {
                let mut acc = BitVec::zeros(other.cols);
                for k in r.ones() {
                    acc.xor_assign(&other.data[k]);
                }
                acc
            })
            .collect();
        Ok(BitMatrix {
            rows: self.rows,
            cols: other.cols,
            data,
        })
    }

    pub fn apply(&self, v: &BitVec) -> BitVec {
        assert_eq!(v.len(), self.cols, "vector length must equal column count");
        BitVec::from_indices(
            self.rows,
            (0..self.rows).filter(|&i| self.data[i].and_parity(v)),
        )
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) as u8).collect())
            .collect()
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in &self.data {
            writeln!(f, "  {r:?}")?;
        }
        Ok(())
    }
}

/// Reduced row echelon form in place; returns the pivot column of each
/// nonzero row, in order.
fn rref(rows: &mut Vec<BitVec>, cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut top = 0;
    for c in 0..cols {
        if top == rows.len() {
            break;
        }
        let Some(p) = (top..rows.len()).find(|&i| rows[i].get(c)) else {
            continue;
        };
        rows.swap(top, p);
        let pivot_row = rows[top].clone();
        for (i, r) in rows.iter_mut().enumerate() {
            if i != top && r.get(c) {
                r.xor_assign(&pivot_row);
            }
        }
        pivots.push(c);
        top += 1;
    }
    rows.truncate(top);
    pivots
}

pub fn rank(m: &BitMatrix) -> usize {
    let mut rows = m.data.clone();
    rref(&mut rows, m.cols).len()
}

/// A subspace of `F_2^ambient` held in reduced echelon form: each basis
/// vector's leading bit is its pivot and no other basis vector has that bit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubspaceBasis {
    ambient: usize,
    rows: Vec<BitVec>,
    pivots: Vec<usize>,
}

impl SubspaceBasis {
    pub fn zero(ambient: usize) -> Self {
        SubspaceBasis {
            ambient,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Self::from_vectors(ambient, (0..ambient).map(|i| BitVec::unit(ambient, i)))
    }

    pub fn from_vectors(ambient: usize, vecs: impl IntoIterator<Item = BitVec>) -> Self {
        let mut rows: Vec<BitVec> = vecs.into_iter().collect();
        for r in &rows {
            assert_eq!(r.len(), ambient, "vector length must equal ambient dimension");
        }
        let pivots = rref(&mut rows, ambient);
        SubspaceBasis {
            ambient,
            rows,
            pivots,
        }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn vectors(&self) -> &[BitVec] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Remainder of `v` after clearing every pivot bit.
    pub fn reduce(&self, v: &BitVec) -> BitVec {
        let mut r = v.clone();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if r.get(p) {
                r.xor_assign(row);
            }
        }
        r
    }

    pub fn contains(&self, v: &BitVec) -> bool {
        self.reduce(v).is_zero()
    }

    /// Adds `v` to the span; returns whether the dimension grew.
    pub fn insert(&mut self, v: BitVec) -> bool {
        let r = self.reduce(&v);
        let Some(p) = r.leading() else {
            return false;
        };
        for row in &mut self.rows {
            if row.get(p) {
                row.xor_assign(&r);
            }
        }
        let pos = self.pivots.partition_point(|&q| q < p);
        self.rows.insert(pos, r);
        self.pivots.insert(pos, p);
        true
    }

    pub fn is_subspace_of(&self, other: &SubspaceBasis) -> bool {
        self.rows.iter().all(|r| other.contains(r))
    }

    pub fn sum(&self, other: &SubspaceBasis) -> SubspaceBasis {
        let mut s = self.clone();
        for r in &other.rows {
            s.insert(r.clone());
        }
        s
    }
}

/// Kernel of `v -> m v`.
pub fn kernel_basis(m: &BitMatrix) -> SubspaceBasis {
    let mut rows = m.data.clone();
    let pivots = rref(&mut rows, m.cols);
    let mut is_pivot = vec![false; m.cols];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let vecs = (0..m.cols).filter(|&f| !is_pivot[f]).map(|f| {
        let mut v = BitVec::unit(m.cols, f);
        for (row, &p) in rows.iter().zip(&pivots) {
            if row.get(f) {
                v.set(p, true);
            }
        }
        v
    });
    SubspaceBasis::from_vectors(m.cols, vecs.collect::<Vec<_>>())
}

/// Column space of `m` inside `F_2^rows`.
pub fn image_basis(m: &BitMatrix) -> SubspaceBasis {
    SubspaceBasis::from_vectors(m.rows, m.transpose().data)
}

/// `sub <= whole` presented by representatives of `whole / sub`, with
/// coordinates of any vector of `whole` in terms of those representatives.
#[derive(Clone, Debug)]
pub struct Subquotient {
    ambient: usize,
    sub: SubspaceBasis,
    reps: Vec<BitVec>,
    /// Reduced echelon basis of `whole`, each row tagged with its
    /// coordinates modulo `sub`.
    rows: Vec<(BitVec, BitVec)>,
    pivots: Vec<usize>,
}

impl Subquotient {
    /// Fails if `sub` is not contained in `whole`.
    pub fn new(whole: &SubspaceBasis, sub: &SubspaceBasis) -> Result<Self, LinalgError> {
        if whole.ambient != sub.ambient {
            return Err(LinalgError::DimensionMismatch(format!(
                "ambient {} vs {}",
                whole.ambient, sub.ambient
            )));
        }
        if !sub.is_subspace_of(whole) {
            return Err(LinalgError::DimensionMismatch(
                "subspace is not contained in the whole space".into(),
            ));
        }
        let mut span = sub.clone();
        let mut reps = Vec::new();
        for v in &whole.rows {
            let r = span.reduce(v);
            if !r.is_zero() {
                span.insert(r.clone());
                reps.push(r);
            }
        }
        let k = reps.len();
        let mut tagged: Vec<(BitVec, BitVec)> = sub
            .rows
            .iter()
            .map(|r| (r.clone(), BitVec::zeros(k)))
            .chain(reps.iter().enumerate().map(|(j, r)| (r.clone(), BitVec::unit(k, j))))
            .collect();
        let mut pivots = Vec::new();
        let mut top = 0;
        for c in 0..whole.ambient {
            if top == tagged.len() {
                break;
            }
            let Some(p) = (top..tagged.len()).find(|&i| tagged[i].0.get(c)) else {
                continue;
            };
            tagged.swap(top, p);
            let (pv, pt) = tagged[top].clone();
            for (i, (v, t)) in tagged.iter_mut().enumerate() {
                if i != top && v.get(c) {
                    v.xor_assign(&pv);
                    t.xor_assign(&pt);
                }
            }
            pivots.push(c);
            top += 1;
        }
        tagged.truncate(top);
        Ok(Subquotient {
            ambient: whole.ambient,
            sub: sub.clone(),
            reps,
            rows: tagged,
            pivots,
        })
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.reps.len()
    }

    pub fn representatives(&self) -> &[BitVec] {
        &self.reps
    }

    pub fn sub(&self) -> &SubspaceBasis {
        &self.sub
    }

    /// Coordinates of the class of `v`, or `None` when `v` is outside `whole`.
    pub fn coordinates(&self, v: &BitVec) -> Option<BitVec> {
        let mut r = v.clone();
        let mut coords = BitVec::zeros(self.reps.len());
        for ((row, tag), &p) in self.rows.iter().zip(&self.pivots) {
            if r.get(p) {
                r.xor_assign(row);
                coords.xor_assign(tag);
            }
        }
        r.is_zero().then_some(coords)
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct HomologyDim {
    pub dim: usize,
    pub kernel_dim: usize,
    pub image_dim: usize,
}

fn check_composable(d_in: &BitMatrix, d_out: &BitMatrix) -> Result<(), LinalgError> {
    if d_in.rows != d_out.cols {
        return Err(LinalgError::DimensionMismatch(format!(
            "d_in has {} rows but d_out has {} columns",
            d_in.rows, d_out.cols
        )));
    }
    let comp = d_out.mul(d_in)?;
    if !comp.is_zero() {
        return Err(LinalgError::CompositionNonzero { rank: rank(&comp) });
    }
    Ok(())
}

/// Dimension of `ker d_out / im d_in` for `U --d_in--> V --d_out--> W`.
pub fn homology_dim(d_in: &BitMatrix, d_out: &BitMatrix) -> Result<HomologyDim, LinalgError> {
    check_composable(d_in, d_out)?;
    let kernel_dim = d_out.cols - rank(d_out);
    let image_dim = rank(d_in);
    Ok(HomologyDim {
        dim: kernel_dim - image_dim,
        kernel_dim,
        image_dim,
    })
}

/// Same as [`homology_dim`] but keeps the representatives.
pub fn homology(d_in: &BitMatrix, d_out: &BitMatrix) -> Result<Subquotient, LinalgError> {
    check_composable(d_in, d_out)?;
    Subquotient::new(&kernel_basis(d_out), &image_basis(d_in))
}

/// Rank of the map induced on homology by `f: V -> V'`, where `V` carries
/// `ker d_out / im d_in` and `V'` carries `ker d_out' / im d_in'`.
/// Returns `None` if `f` is not a chain map on the given pieces.
pub fn induced_rank(
    source: &Subquotient,
    target: &Subquotient,
    f: &BitMatrix,
) -> Option<usize> {
    let mut image = SubspaceBasis::zero(target.dim());
    for v in source.sub().vectors() {
        if !target.coordinates(&f.apply(v))?.is_zero() {
            return None;
        }
    }
    for v in source.representatives() {
        image.insert(target.coordinates(&f.apply(v))?);
    }
    Some(image.dim())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_matrix(max: usize) -> impl Strategy<Value = BitMatrix> {
        (0..=max, 0..=max).prop_flat_map(|(r, c)| {
            proptest::collection::vec(proptest::collection::vec(0u8..2, c), r)
                .prop_map(move |rows| {
                    if rows.is_empty() {
                        BitMatrix::zeros(0, c)
                    } else {
                        BitMatrix::from_dense(&rows)
                    }
                })
        })
    }

    #[test]
    fn rank_examples() {
        let m = BitMatrix::from_dense(&[vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]]);
        assert_eq!(rank(&m), 2);
        assert_eq!(kernel_basis(&m).dim(), 1);
        assert!(kernel_basis(&m).contains(&BitVec::from_bits(&[1, 1, 1])));
        assert_eq!(rank(&BitMatrix::identity(70)), 70);
    }

    #[test]
    fn homology_of_zero_square_and_bad_composite() {
        let d_in = BitMatrix::from_dense(&[vec![1], vec![1]]);
        let d_out = BitMatrix::from_dense(&[vec![1, 1]]);
        assert_eq!(homology_dim(&d_in, &d_out).unwrap().dim, 0);
        let bad = BitMatrix::from_dense(&[vec![1, 0]]);
        assert_eq!(
            homology_dim(&d_in, &bad),
            Err(LinalgError::CompositionNonzero { rank: 1 })
        );
    }

    #[test]
    fn subquotient_coordinates() {
        let whole = SubspaceBasis::full(3);
        let sub = SubspaceBasis::from_vectors(3, [BitVec::from_bits(&[1, 1, 0])]);
        let q = Subquotient::new(&whole, &sub).unwrap();
        assert_eq!(q.dim(), 2);
        let a = q.coordinates(&BitVec::from_bits(&[1, 0, 0])).unwrap();
        let b = q.coordinates(&BitVec::from_bits(&[0, 1, 0])).unwrap();
        assert_eq!(a, b);
        assert!(q.coordinates(&BitVec::from_bits(&[1, 1, 0])).unwrap().is_zero());
    }

    proptest! {
        #[test]
        fn rank_nullity(m in arb_matrix(40)) {
            prop_assert_eq!(rank(&m) + kernel_basis(&m).dim(), m.cols());
        }

        #[test]
        fn rank_of_transpose(m in arb_matrix(40)) {
            prop_assert_eq!(rank(&m), rank(&m.transpose()));
        }

        #[test]
        fn kernel_vectors_are_killed(m in arb_matrix(30)) {
            for v in kernel_basis(&m).vectors() {
                prop_assert!(m.apply(v).is_zero());
            }
        }

        #[test]
        fn image_is_spanned_by_columns(m in arb_matrix(30)) {
            let im = image_basis(&m);
            prop_assert_eq!(im.dim(), rank(&m));
            for j in 0..m.cols() {
                prop_assert!(im.contains(&m.column(j)));
            }
        }

        #[test]
        fn product_is_associative(a in arb_matrix(12), seed in 0u64..1000) {
            let k = a.cols();
            let b = BitMatrix::from_rows(5, (0..k).map(|i| BitVec::from_indices(5, (0..5).filter(|j| (seed >> ((i + j) % 60)) & 1 == 1))).collect());
            let c = BitMatrix::identity(5);
            let left = a.mul(&b).unwrap().mul(&c).unwrap();
            let right = a.mul(&b.mul(&c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn homology_of_composite_square_zero(m in arb_matrix(20)) {
            // d_in = kernel inclusion of m, d_out = m: homology is zero.
            let ker = kernel_basis(&m);
            let d_in = BitMatrix::from_columns(m.cols(), ker.vectors());
            let h = homology_dim(&d_in, &m).unwrap();
            prop_assert_eq!(h.dim, 0);
        }
    }
}
