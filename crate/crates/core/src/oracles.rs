//! Independent computations used to cross-check the main engine.

use crate::algebra::{apply_derivation, AlgebraSpec, Element, GradedBasis, Monomial};
use crate::f2linalg::{homology_dim, kernel_basis, BitMatrix, BitVec, SubspaceBasis, Subquotient};
use crate::margolis::{MargolisError, QModule};
use crate::steenrod::{q_action, q_degree, q_derivation, ComoduleSpec, PhiMap, SteenrodError};
use serde::Serialize;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("bar complex too large: {cells} basis elements (limit {limit})")]
    SizeGuard { cells: usize, limit: usize },
    #[error(transparent)]
    Steenrod(#[from] SteenrodError),
    #[error(transparent)]
    Margolis(#[from] MargolisError),
    #[error(transparent)]
    Linalg(#[from] crate::f2linalg::LinalgError),
    #[error(transparent)]
    Algebra(#[from] crate::algebra::AlgebraError),
    #[error("{0}")]
    Unsupported(String),
}

/// Largest total degree the bar complex oracle accepts.
pub const HH_MAX_DEGREE: usize = 12;
/// Largest simplicial degree the bar complex oracle accepts.
pub const HH_MAX_S: usize = 6;
const HH_CELL_LIMIT: usize = 200_000;

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct HochschildTable {
    pub max_total_degree: usize,
    pub max_s: usize,
    /// `by_s[s][w]`: dimension of `HH_s` in internal degree `w`.
    pub by_s: Vec<Vec<u64>>,
    /// Dimension by total degree `s + w`.
    pub total: Vec<u64>,
    /// Total degrees whose every contributing `s` was within `max_s`.
    pub certified_up_to: usize,
}

/// Basis of `A (x) Abar^{(x) s}` in internal degree `w`.
fn bar_basis(basis: &GradedBasis, s: usize, w: usize) -> Vec<Vec<Monomial>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(
        basis: &GradedBasis,
        slots: usize,
        left: usize,
        cur: &mut Vec<Monomial>,
        out: &mut Vec<Vec<Monomial>>,
    ) {
        if cur.len() == slots {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let min = if cur.is_empty() { 0 } else { 1 };
        for d in min..=left {
            for m in basis.basis(d) {
                cur.push(m.clone());
                rec(basis, slots, left - d, cur, out);
                cur.pop();
            }
        }
    }
    rec(basis, s + 1, w, &mut cur, &mut out);
    out
}

/// Hochschild boundary on one basis tuple.
fn bar_boundary(spec: &AlgebraSpec, t: &[Monomial]) -> Vec<Vec<Monomial>> {
    let s = t.len() - 1;
    let mut out = Vec::new();
    for i in 0..s {
        if let Some(p) = spec.mul_monomials(&t[i], &t[i + 1]) {
            let mut v = t[..i].to_vec();
            v.push(p);
            v.extend_from_slice(&t[i + 2..]);
            out.push(v);
        }
    }
    if let Some(p) = spec.mul_monomials(&t[s], &t[0]) {
        let mut v = vec![p];
        v.extend_from_slice(&t[1..s]);
        out.push(v);
    }
    out
}

/// `HH_*(A)` over F_2 from the normalized bar complex.
pub fn hochschild_bar(spec: &AlgebraSpec, max_total: usize, max_s: usize) -> Result<HochschildTable, OracleError> {
    if max_total > HH_MAX_DEGREE || max_s > HH_MAX_S {
        return Err(OracleError::SizeGuard {
            cells: 0,
            limit: HH_CELL_LIMIT,
        });
    }
    let basis = crate::algebra::enumerate_basis(spec, max_total, HH_CELL_LIMIT)?;
    let mut cells: HashMap<(usize, usize), Vec<Vec<Monomial>>> = HashMap::new();
    let mut total_cells = 0;
    for s in 0..=max_s + 1 {
        for w in 0..=max_total {
            let b = bar_basis(&basis, s, w);
            total_cells += b.len();
            if total_cells > HH_CELL_LIMIT {
                return Err(OracleError::SizeGuard {
                    cells: total_cells,
                    limit: HH_CELL_LIMIT,
                });
            }
            cells.insert((s, w), b);
        }
    }
    let boundary = |s: usize, w: usize| -> BitMatrix {
        let src = &cells[&(s, w)];
        if s == 0 {
            return BitMatrix::zeros(0, src.len());
        }
        let tgt = &cells[&(s - 1, w)];
        let idx: HashMap<&Vec<Monomial>, usize> = tgt.iter().enumerate().map(|(i, t)| (t, i)).collect();
        let cols: Vec<BitVec> = src
            .iter()
            .map(|t| BitVec::from_indices(tgt.len(), bar_boundary(spec, t).iter().map(|x| idx[x])))
            .collect();
        BitMatrix::from_columns(tgt.len(), &cols)
    };
    let mut by_s = vec![vec![0u64; max_total + 1]; max_s + 1];
    let mut total = vec![0u64; max_total + 1];
    for (s, row) in by_s.iter_mut().enumerate() {
        for w in 0..=max_total - s.min(max_total) {
            let h = homology_dim(&boundary(s + 1, w), &boundary(s, w))?;
            row[w] = h.dim as u64;
            total[s + w] += h.dim as u64;
        }
    }
    // Bar entries have positive degree, so HH_s lives in internal degree >= s
    // times the lowest generator degree; total degree D needs s <= D / (1 + g).
    let g = spec.gens.iter().map(|g| g.degree).min().unwrap_or(1);
    let certified_up_to = ((max_s + 1) * (1 + g) - 1).min(max_total);
    Ok(HochschildTable {
        max_total_degree: max_total,
        max_s,
        by_s,
        total,
        certified_up_to,
    })
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct TwoPathReport {
    pub label: String,
    pub m: u32,
    pub checked: usize,
    pub mismatches: Vec<String>,
}

impl TwoPathReport {
    pub fn agree(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// `Q_m` read off the coaction versus `Q_m` as the Leibniz extension of its
/// values on generators, on every basis monomial up to `max_degree`.
pub fn qm_two_paths(c: &ComoduleSpec, m: u32, max_degree: usize) -> Result<TwoPathReport, OracleError> {
    if c.has_exotic_rules() {
        return Err(OracleError::Unsupported(format!(
            "{} has exotic rules; use qm_phi_paths",
            c.id
        )));
    }
    let mut spec = c.clone();
    spec.cap = max_degree.min(c.cap);
    let basis = spec.basis()?;
    let der = q_derivation(c, m);
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for d in 0..=spec.cap {
        for mono in basis.basis(d) {
            let x = Element::from_monomial(mono.clone());
            let a = q_action(c, m, &x);
            let b = apply_derivation(&c.algebra, &der, &x);
            checked += 1;
            if a != b {
                mismatches.push(c.algebra.format_monomial(mono));
            }
        }
    }
    Ok(TwoPathReport {
        label: c.id.to_string(),
        m,
        checked,
        mismatches,
    })
}

/// For `THH_*(y(n))`: `phi_n(Q_m x)` against `Q_m(phi_n x)`, with the target
/// `Q_m` taken as a derivation of `THH_*(HF_2)`.
pub fn qm_phi_paths(n: u32, m: u32, max_degree: usize) -> Result<TwoPathReport, OracleError> {
    let phi = PhiMap::new(n, max_degree)?;
    let basis = phi.source.basis()?;
    let der = q_derivation(&phi.target, m);
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for d in 0..=max_degree {
        for mono in basis.basis(d) {
            let x = Element::from_monomial(mono.clone());
            let a = phi.apply(&q_action(&phi.source, m, &x));
            let b = apply_derivation(&phi.target.algebra, &der, &phi.apply(&x));
            checked += 1;
            if a != b {
                mismatches.push(phi.source.algebra.format_monomial(mono));
            }
        }
    }
    Ok(TwoPathReport {
        label: format!("thh-y{n} via phi"),
        m,
        checked,
        mismatches,
    })
}

/// A graded module over `E(Q)` on the cohomology side: `Q` raises degree.
struct CoModule {
    dims: Vec<usize>,
    /// `act[t]: P_t -> P_{t+q}`, present when `t + q` is in range.
    act: Vec<Option<BitMatrix>>,
}

/// `Ext^{s,t}_{E(Q_m)}` of the dual of `module`, from a minimal free
/// resolution built degree by degree. Returns `rows[s][t]` for
/// `t <= max_degree` of the module; every entry is exact.
pub fn ext_minimal_resolution(module: &dyn QModule, m: u32, max_s: usize) -> Result<Vec<Vec<u64>>, OracleError> {
    let q = q_degree(m);
    let top = module.max_degree();
    let mut p = CoModule {
        dims: (0..=top).map(|t| module.dim(t)).collect(),
        act: (0..=top)
            .map(|t| {
                (t + q <= top)
                    .then(|| module.q_matrix(m, t + q).map(|x| x.transpose()))
                    .transpose()
            })
            .collect::<Result<Vec<_>, _>>()?,
    };
    let mut rows = Vec::new();
    for _ in 0..=max_s {
        // Minimal generators: a complement of Q P_{t-q} in P_t.
        let mut gens: Vec<Vec<BitVec>> = Vec::new();
        for t in 0..=top {
            let mut span = SubspaceBasis::zero(p.dims[t]);
            if t >= q {
                if let Some(a) = &p.act[t - q] {
                    for j in 0..a.cols() {
                        span.insert(a.column(j));
                    }
                }
            }
            let mut g = Vec::new();
            for i in 0..p.dims[t] {
                let e = BitVec::unit(p.dims[t], i);
                if span.insert(e.clone()) {
                    g.push(e);
                }
            }
            gens.push(g);
        }
        rows.push(gens.iter().map(|g| g.len() as u64).collect::<Vec<_>>());
        // F_t = gens_t (+) Q gens_{t-q}; kernel of F -> P.
        let fdim = |t: usize| gens[t].len() + if t >= q { gens[t - q].len() } else { 0 };
        let mut kernels: Vec<SubspaceBasis> = Vec::new();
        for t in 0..=top {
            let mut cols: Vec<BitVec> = gens[t].clone();
            if t >= q {
                let a = p.act[t - q].as_ref().expect("action below top");
                cols.extend(gens[t - q].iter().map(|g| a.apply(g)));
            }
            let eps = BitMatrix::from_columns(p.dims[t], &cols);
            debug_assert_eq!(eps.cols(), fdim(t));
            kernels.push(kernel_basis(&eps));
        }
        let mut next = CoModule {
            dims: kernels.iter().map(|k| k.dim()).collect(),
            act: Vec::new(),
        };
        for t in 0..=top {
            if t + q > top {
                next.act.push(None);
                continue;
            }
            let target = Subquotient::new(&kernels[t + q], &SubspaceBasis::zero(fdim(t + q)))?;
            let n_top = gens[t + q].len();
            let cols = kernels[t]
                .vectors()
                .iter()
                .map(|v| {
                    // Q sends the generator part to the matching Q-generator
                    // slots and kills the rest.
                    let mut w = BitVec::zeros(fdim(t + q));
                    for i in v.ones().filter(|&i| i < gens[t].len()) {
                        w.set(n_top + i, true);
                    }
                    target.coordinates(&w).expect("Q preserves the kernel")
                })
                .collect::<Vec<_>>();
            next.act.push(Some(BitMatrix::from_columns(next.dims[t + q], &cols)));
        }
        p = next;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{ClosedForm, GeneratorSpec};
    use crate::margolis::{ext_over_eqm, AlgebraModule, ExplicitModule};
    use crate::steenrod::{algebra_catalog, SpaceId};

    #[test]
    fn hh_of_exterior_on_degree_one() {
        let spec = AlgebraSpec::new(vec![GeneratorSpec::ext("x", 1)]);
        let h = hochschild_bar(&spec, 6, 6).unwrap();
        assert_eq!(h.total, vec![1; 7]);
    }

    #[test]
    fn hh_of_polynomial() {
        let spec = AlgebraSpec::new(vec![GeneratorSpec::poly("x", 2)]);
        let h = hochschild_bar(&spec, 10, 4).unwrap();
        let expect = ClosedForm {
            polynomial: vec![2],
            exterior: vec![3],
            truncated: vec![],
        }
        .series(10);
        assert_eq!(&h.total[..=h.certified_up_to], &expect[..=h.certified_up_to]);
    }

    #[test]
    fn size_guard() {
        let spec = AlgebraSpec::new(vec![GeneratorSpec::poly("x", 1)]);
        assert!(matches!(hochschild_bar(&spec, 20, 3), Err(OracleError::SizeGuard { .. })));
    }

    #[test]
    fn minimal_resolution_of_trivial_and_free() {
        // One trivial class and one free pair.
        let module = ExplicitModule::from_pieces(0, 10, &[2], &[0]);
        let rows = ext_minimal_resolution(&module, 0, 3).unwrap();
        assert_eq!(rows[0][0], 1);
        assert_eq!(rows[0][2], 1);
        for s in 1..=3 {
            assert_eq!(rows[s][s], 1);
            assert_eq!(rows[s].iter().sum::<u64>(), 1);
        }
    }

    #[test]
    fn resolution_agrees_with_margolis_shift() {
        for (id, m) in [(SpaceId::HZ, 0), (SpaceId::ZmodVn(1), 0), (SpaceId::Y(2), 1), (SpaceId::Z(2), 2)] {
            let module = AlgebraModule::new(algebra_catalog(id, 16).unwrap()).unwrap();
            let a = ext_minimal_resolution(&module, m, 3).unwrap();
            let b = ext_over_eqm(&module, m, 3).unwrap();
            for s in 0..=3 {
                let c = b.certified[s].unwrap_or(0);
                assert_eq!(&a[s][..=c], &b.rows[s][..=c], "{id} m = {m} s = {s}");
            }
        }
    }

    #[test]
    fn two_paths_agree() {
        for id in [SpaceId::DualSteenrod, SpaceId::HZ, SpaceId::Y(2), SpaceId::ZmodVn(2), SpaceId::ThhHF2] {
            let c = algebra_catalog(id, 16).unwrap();
            for m in 0..=3 {
                assert!(qm_two_paths(&c, m, 16).unwrap().agree(), "{id} m = {m}");
            }
        }
        for n in 1..=2 {
            for m in 0..=3 {
                assert!(qm_phi_paths(n, m, 16).unwrap().agree(), "n = {n} m = {m}");
            }
        }
    }
}
