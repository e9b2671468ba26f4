//! Margolis homology `H(M; Q_m) = ker Q_m / im Q_m` and what it computes:
//! `Ext` over the exterior algebra `E(Q_m)` and the `v_m`-localized Adams
//! `E_2` term.

use crate::algebra::{convolve, ClosedForm, GradedBasis};
use crate::f2linalg::{homology, BitMatrix, BitVec, LinalgError};
use crate::steenrod::{q_degree, q_matrix, xi_degree, ComoduleSpec, SpaceId, SteenrodError};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MargolisError {
    #[error(transparent)]
    Steenrod(#[from] SteenrodError),
    #[error("Q_{m} does not square to zero in degree {degree}: {source}")]
    NotSquareZero {
        m: u32,
        degree: usize,
        source: LinalgError,
    },
    #[error("module carries only Q_{available}, asked for Q_{m}")]
    WrongOperation { m: u32, available: u32 },
}

/// A finite graded F_2-module (internal degrees `0..=max_degree`) with
/// actions of the Milnor primitives, each lowering degree by `2^{m+1} - 1`.
pub trait QModule: Sync {
    fn label(&self) -> String;
    fn max_degree(&self) -> usize;
    fn dim(&self, d: usize) -> usize;
    /// `Q_m : M_d -> M_{d-q}`; zero rows when `d < q`.
    fn q_matrix(&self, m: u32, d: usize) -> Result<BitMatrix, MargolisError>;

    fn dims(&self) -> Vec<u64> {
        (0..=self.max_degree()).map(|d| self.dim(d) as u64).collect()
    }
}

/// An algebra comodule with its basis enumerated up to its cap.
pub struct AlgebraModule {
    pub spec: ComoduleSpec,
    pub basis: GradedBasis,
}

impl AlgebraModule {
    pub fn new(spec: ComoduleSpec) -> Result<Self, MargolisError> {
        let basis = spec.basis()?;
        Ok(AlgebraModule { spec, basis })
    }
}

impl QModule for AlgebraModule {
    fn label(&self) -> String {
        self.spec.id.to_string()
    }

    fn max_degree(&self) -> usize {
        self.basis.max_degree
    }

    fn dim(&self, d: usize) -> usize {
        self.basis.basis(d).len()
    }

    fn q_matrix(&self, m: u32, d: usize) -> Result<BitMatrix, MargolisError> {
        Ok(q_matrix(&self.spec, &self.basis, m, d)?)
    }
}

/// A module given by explicit matrices for a single `Q_m`.
#[derive(Clone, Debug)]
pub struct ExplicitModule {
    pub label: String,
    pub m: u32,
    pub dims: Vec<usize>,
    /// `maps[d]` is `Q_m : M_d -> M_{d-q}`.
    pub maps: Vec<BitMatrix>,
}

impl ExplicitModule {
    pub fn from_module(module: &dyn QModule, m: u32) -> Result<Self, MargolisError> {
        let maps = (0..=module.max_degree())
            .map(|d| module.q_matrix(m, d))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ExplicitModule {
            label: module.label(),
            m,
            dims: (0..=module.max_degree()).map(|d| module.dim(d)).collect(),
            maps,
        })
    }

    /// Zero module with the given dimensions.
    pub fn trivial(label: &str, m: u32, dims: Vec<usize>) -> Self {
        let q = q_degree(m);
        let maps = (0..dims.len())
            .map(|d| BitMatrix::zeros(if d >= q { dims[d - q] } else { 0 }, dims[d]))
            .collect();
        ExplicitModule {
            label: label.to_string(),
            m,
            dims,
            maps,
        }
    }

    /// Direct sum of `count` free `E(Q_m)`-modules on bottom classes in
    /// `bottoms` and trivial classes in `singles` (all degrees `<= max`).
    pub fn from_pieces(m: u32, max: usize, bottoms: &[usize], singles: &[usize]) -> Self {
        let q = q_degree(m);
        let mut dims = vec![0usize; max + 1];
        // (degree, index) of each basis vector; pairs link top -> bottom.
        let mut links = Vec::new();
        for &b in bottoms {
            if b + q > max {
                continue;
            }
            let lo = dims[b];
            dims[b] += 1;
            let hi = dims[b + q];
            dims[b + q] += 1;
            links.push((b + q, hi, lo));
        }
        for &s in singles {
            if s <= max {
                dims[s] += 1;
            }
        }
        let mut maps: Vec<BitMatrix> = (0..=max)
            .map(|d| BitMatrix::zeros(if d >= q { dims[d - q] } else { 0 }, dims[d]))
            .collect();
        for (d, hi, lo) in links {
            maps[d].set(lo, hi, true);
        }
        ExplicitModule {
            label: "pieces".into(),
            m,
            dims,
            maps,
        }
    }
}

impl QModule for ExplicitModule {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn max_degree(&self) -> usize {
        self.dims.len().saturating_sub(1)
    }

    fn dim(&self, d: usize) -> usize {
        self.dims.get(d).copied().unwrap_or(0)
    }

    fn q_matrix(&self, m: u32, d: usize) -> Result<BitMatrix, MargolisError> {
        if m != self.m {
            return Err(MargolisError::WrongOperation {
                m,
                available: self.m,
            });
        }
        Ok(self.maps[d].clone())
    }
}

/// `M (x) N` with `Q_m` acting as `Q (x) 1 + 1 (x) Q`.
pub struct TensorModule<'a> {
    pub left: &'a dyn QModule,
    pub right: &'a dyn QModule,
    max: usize,
}

impl<'a> TensorModule<'a> {
    pub fn new(left: &'a dyn QModule, right: &'a dyn QModule) -> Self {
        let max = left.max_degree().min(right.max_degree());
        TensorModule { left, right, max }
    }

    /// Offsets of the blocks `M_a (x) N_{d-a}` inside degree `d`.
    fn blocks(&self, d: usize) -> Vec<(usize, usize)> {
        let mut off = 0;
        (0..=d)
            .map(|a| {
                let o = off;
                off += self.left.dim(a) * self.right.dim(d - a);
                (a, o)
            })
            .collect()
    }
}

impl QModule for TensorModule<'_> {
    fn label(&self) -> String {
        format!("{} (x) {}", self.left.label(), self.right.label())
    }

    fn max_degree(&self) -> usize {
        self.max
    }

    fn dim(&self, d: usize) -> usize {
        (0..=d).map(|a| self.left.dim(a) * self.right.dim(d - a)).sum()
    }

    fn q_matrix(&self, m: u32, d: usize) -> Result<BitMatrix, MargolisError> {
        let q = q_degree(m);
        let cols = self.dim(d);
        if d < q {
            return Ok(BitMatrix::zeros(0, cols));
        }
        let t = d - q;
        let mut out = BitMatrix::zeros(self.dim(t), cols);
        let tgt = self.blocks(t);
        for (a, off) in self.blocks(d) {
            let b = d - a;
            let (na, nb) = (self.left.dim(a), self.right.dim(b));
            if na * nb == 0 {
                continue;
            }
            if a >= q {
                let qa = self.left.q_matrix(m, a)?;
                let (_, toff) = tgt[a - q];
                for i in 0..na {
                    for j in 0..nb {
                        for r in qa.column(i).ones() {
                            out.toggle(toff + r * nb + j, off + i * nb + j);
                        }
                    }
                }
            }
            if b >= q {
                let qb = self.right.q_matrix(m, b)?;
                let (_, toff) = tgt[a];
                let nb2 = self.right.dim(b - q);
                for i in 0..na {
                    for j in 0..nb {
                        for r in qb.column(j).ones() {
                            out.toggle(toff + i * nb2 + r, off + i * nb + j);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct MargolisTable {
    pub label: String,
    pub m: u32,
    pub q: usize,
    pub max_degree: usize,
    /// Degrees `0..=certified_up_to` have both neighbours in the window.
    pub certified_up_to: Option<usize>,
    pub dims: Vec<u64>,
}

impl MargolisTable {
    pub fn certified_dims(&self) -> &[u64] {
        match self.certified_up_to {
            Some(c) => &self.dims[..=c],
            None => &[],
        }
    }

    pub fn is_zero_in_window(&self) -> bool {
        self.certified_dims().iter().all(|&x| x == 0)
    }
}

/// Degreewise homology of `Q_m`; checks `Q_m^2 = 0` as it goes.
pub fn margolis_homology(module: &dyn QModule, m: u32) -> Result<MargolisTable, MargolisError> {
    let q = q_degree(m);
    let max = module.max_degree();
    let dims = (0..=max)
        .into_par_iter()
        .map(|d| -> Result<u64, MargolisError> {
            let d_out = module.q_matrix(m, d)?;
            let d_in = if d + q <= max {
                module.q_matrix(m, d + q)?
            } else {
                BitMatrix::zeros(module.dim(d), 0)
            };
            let h = crate::f2linalg::homology_dim(&d_in, &d_out).map_err(|e| {
                MargolisError::NotSquareZero {
                    m,
                    degree: d,
                    source: e,
                }
            })?;
            Ok(h.dim as u64)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MargolisTable {
        label: module.label(),
        m,
        q,
        max_degree: max,
        certified_up_to: max.checked_sub(q),
        dims,
    })
}

/// Representatives of `H(M; Q_m)` in degree `d` as vectors in `M_d`.
pub fn margolis_representatives(
    module: &dyn QModule,
    m: u32,
    d: usize,
) -> Result<Vec<BitVec>, MargolisError> {
    let q = q_degree(m);
    let d_out = module.q_matrix(m, d)?;
    let d_in = if d + q <= module.max_degree() {
        module.q_matrix(m, d + q)?
    } else {
        BitMatrix::zeros(module.dim(d), 0)
    };
    let h = homology(&d_in, &d_out).map_err(|e| MargolisError::NotSquareZero {
        m,
        degree: d,
        source: e,
    })?;
    Ok(h.representatives().to_vec())
}

/// `Ext^{s,t}_{E(xi_{m+1})}(F_2, M)`: row 0 is `ker Q_m`, row `s >= 1` is
/// `H(M; Q_m)` shifted up by `s (2^{m+1} - 1)`.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct ExtPage {
    pub label: String,
    pub m: u32,
    pub q: usize,
    pub max_t: usize,
    /// `rows[s][t]`.
    pub rows: Vec<Vec<u64>>,
    /// `certified[s]`: largest certified `t` in row `s`.
    pub certified: Vec<Option<usize>>,
}

impl ExtPage {
    pub fn dim(&self, s: usize, t: usize) -> u64 {
        self.rows.get(s).and_then(|r| r.get(t)).copied().unwrap_or(0)
    }
}

pub fn ext_over_eqm(module: &dyn QModule, m: u32, max_s: usize) -> Result<ExtPage, MargolisError> {
    let table = margolis_homology(module, m)?;
    let q = table.q;
    let max = module.max_degree();
    let mut rows = Vec::new();
    let mut certified = Vec::new();
    let row0 = (0..=max)
        .map(|t| -> Result<u64, MargolisError> {
            let qm = module.q_matrix(m, t)?;
            Ok((module.dim(t) - crate::f2linalg::rank(&qm)) as u64)
        })
        .collect::<Result<Vec<_>, _>>()?;
    rows.push(row0);
    certified.push(Some(max));
    for s in 1..=max_s {
        let row = (0..=max)
            .map(|t| {
                t.checked_sub(s * q)
                    .map_or(0, |d| table.dims[d])
            })
            .collect();
        rows.push(row);
        certified.push(table.certified_up_to.map(|c| c + s * q).map(|c| c.min(max)));
    }
    Ok(ExtPage {
        label: module.label(),
        m,
        q,
        max_t: max,
        rows,
        certified,
    })
}

/// `v_m^{-1} Ext = H(M; Q_m) (x) F_2[v_m^{+-1}]` with `v_m` in `(s, t) = (1, q)`.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct LocalizedE2 {
    pub label: String,
    pub m: u32,
    pub q: usize,
    /// Period in the stem `t - s`.
    pub stem_period: usize,
    pub margolis: MargolisTable,
}

impl LocalizedE2 {
    /// Dimension at `(s, t)` for any integer `s`.
    pub fn dim(&self, s: i64, t: i64) -> Option<u64> {
        let d = t - s * self.q as i64;
        let c = self.margolis.certified_up_to? as i64;
        (0..=c).contains(&d).then(|| self.margolis.dims[d as usize])
    }
}

pub fn localized_e2(module: &dyn QModule, m: u32) -> Result<LocalizedE2, MargolisError> {
    let margolis = margolis_homology(module, m)?;
    Ok(LocalizedE2 {
        label: module.label(),
        m,
        q: margolis.q,
        stem_period: margolis.q - 1,
        margolis,
    })
}

/// Margolis homology of a tensor product predicted by Künneth.
pub fn kunneth_prediction(a: &MargolisTable, b: &MargolisTable) -> Vec<u64> {
    convolve(&a.dims, &b.dims)
}

/// JSON-friendly table of Margolis dimensions for several spaces and `m`.
pub fn margolis_json(tables: &[MargolisTable]) -> serde_json::Value {
    let mut by_label: BTreeMap<String, Vec<&MargolisTable>> = BTreeMap::new();
    for t in tables {
        by_label.entry(t.label.clone()).or_default().push(t);
    }
    serde_json::to_value(by_label).expect("tables serialize")
}

/// Closed-form `H(M; Q_m)` for the algebra entries of the catalog, where
/// one is known; `None` otherwise.
pub fn expected_margolis(id: SpaceId, m: u32, max_degree: usize) -> Option<Vec<u64>> {
    let series = |poly: Vec<usize>, ext: Vec<usize>| {
        ClosedForm {
            polynomial: poly,
            exterior: ext,
            truncated: vec![],
        }
        .series(max_degree)
    };
    let point = || {
        let mut v = vec![0; max_degree + 1];
        v[0] = 1;
        v
    };
    let zero = || vec![0; max_degree + 1];
    let z_gens = |n: u32| {
        let mut g = vec![2];
        g.extend((2..=n as usize).map(xi_degree));
        g
    };
    match id {
        SpaceId::DualSteenrod => Some(zero()),
        SpaceId::HZ => Some(if m == 0 { point() } else { zero() }),
        SpaceId::Y(n) if n >= 1 => Some(if m < n {
            zero()
        } else {
            series((1..=n as usize).map(xi_degree).collect(), vec![])
        }),
        SpaceId::Z(n) if n >= 1 => {
            if m == 0 {
                Some(series(vec![2 * xi_degree(n as usize)], vec![]))
            } else if m >= n {
                Some(series(z_gens(n), vec![]))
            } else {
                None
            }
        }
        SpaceId::ZmodVn(n) if n >= 1 => Some(if m == 0 {
            point()
        } else if m <= n {
            zero()
        } else {
            series(z_gens(n), vec![xi_degree(n as usize + 1)])
        }),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steenrod::algebra_catalog;
    use proptest::prelude::*;

    fn table(id: SpaceId, m: u32, cap: usize) -> MargolisTable {
        let module = AlgebraModule::new(algebra_catalog(id, cap).unwrap()).unwrap();
        margolis_homology(&module, m).unwrap()
    }

    #[test]
    fn dual_steenrod_is_acyclic() {
        for m in 0..=3 {
            assert!(table(SpaceId::DualSteenrod, m, 24).is_zero_in_window());
        }
    }

    #[test]
    fn hz_margolis() {
        let t = table(SpaceId::HZ, 0, 24);
        assert_eq!(t.certified_dims()[0], 1);
        assert!(t.certified_dims()[1..].iter().all(|&x| x == 0));
        assert!(table(SpaceId::HZ, 1, 24).is_zero_in_window());
    }

    #[test]
    fn catalog_matches_closed_forms() {
        let ids = [
            SpaceId::DualSteenrod,
            SpaceId::HZ,
            SpaceId::Y(1),
            SpaceId::Y(2),
            SpaceId::Z(1),
            SpaceId::Z(2),
            SpaceId::ZmodVn(1),
            SpaceId::ZmodVn(2),
        ];
        for id in ids {
            for m in 0..=3 {
                let Some(e) = expected_margolis(id, m, 22) else { continue };
                let t = table(id, m, 22);
                let c = t.certified_dims();
                assert_eq!(c, &e[..c.len()], "{id} Q_{m}");
            }
        }
    }

    #[test]
    fn ext_rows_are_periodic() {
        let module = AlgebraModule::new(algebra_catalog(SpaceId::Z(2), 24).unwrap()).unwrap();
        let e = ext_over_eqm(&module, 0, 4).unwrap();
        for s in 1..4 {
            for t in 0..20 {
                assert_eq!(e.dim(s, t), e.dim(s + 1, t + e.q));
            }
        }
    }

    fn arb_pieces() -> impl Strategy<Value = (u32, Vec<usize>, Vec<usize>)> {
        (0u32..3, proptest::collection::vec(0usize..14, 0..6), proptest::collection::vec(0usize..14, 0..6))
    }

    proptest! {
        #[test]
        fn kunneth_holds((m, b1, s1) in arb_pieces(), (b2, s2) in (proptest::collection::vec(0usize..14, 0..5), proptest::collection::vec(0usize..14, 0..5))) {
            let a = ExplicitModule::from_pieces(m, 14, &b1, &s1);
            let b = ExplicitModule::from_pieces(m, 14, &b2, &s2);
            let ta = margolis_homology(&a, m).unwrap();
            let tb = margolis_homology(&b, m).unwrap();
            let t = TensorModule::new(&a, &b);
            let tt = margolis_homology(&t, m).unwrap();
            let pred = kunneth_prediction(&ta, &tb);
            let c = tt.certified_up_to.unwrap();
            prop_assert_eq!(tt.certified_dims(), &pred[..=c]);
        }

        #[test]
        fn margolis_counts_trivial_pieces((m, b, s) in arb_pieces()) {
            let a = ExplicitModule::from_pieces(m, 14, &b, &s);
            let t = margolis_homology(&a, m).unwrap();
            let mut expect = vec![0u64; 15];
            for &x in &s { expect[x] += 1; }
            prop_assert_eq!(t.dims, expect);
        }
    }
}
