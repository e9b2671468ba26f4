//! Pages of the Tate and homotopy fixed point spectral sequences for the
//! circle action on `THH(y(n))` and `THH(HF_2)`, their Greenlees-type
//! truncations, and the `Q_m` action on those pages.
//!
//! Column `k` is the power of `t` (degree -2); a cell `(k, d)` holds
//! `t^k THH_d` in total degree `d - 2k`. The differential `d^2` sends
//! `t^k x` to `t^{k+1} sigma(x)`.

use crate::algebra::{ClosedForm, DimReport, DimRow, GradedBasis};
use crate::f2linalg::{
    homology, image_basis, induced_rank, kernel_basis, BitMatrix, BitVec, LinalgError,
    SubspaceBasis, Subquotient,
};
use crate::margolis::{margolis_homology, ExplicitModule, MargolisError, MargolisTable};
use crate::steenrod::{
    algebra_catalog, q_degree, q_matrix, sigma_matrix, thh_y_spec, xi_degree, ComoduleSpec,
    SpaceId, SteenrodError, XiMonomial,
};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SseqError {
    #[error(transparent)]
    Steenrod(#[from] SteenrodError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Margolis(#[from] MargolisError),
    #[error("Q_{m} does not descend to the cell (column {column}, degree {degree})")]
    QmNotWellDefined { m: u32, column: i64, degree: usize },
    #[error("window: {0}")]
    Window(String),
}

/// `THH_*(y(n))` for finite `n`, or `THH_*(HF_2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Base {
    Y(u32),
    HF2,
}

impl Base {
    pub fn label(&self) -> String {
        match self {
            Base::Y(n) => format!("y({n})"),
            Base::HF2 => "HF2".into(),
        }
    }
}

/// The base comodule with `sigma` and its kernels and images in every
/// degree up to `cap`.
#[derive(Debug)]
pub struct ThhModel {
    pub base: Base,
    pub cap: usize,
    pub spec: ComoduleSpec,
    pub basis: GradedBasis,
    sigma: Vec<BitMatrix>,
    ker: Vec<SubspaceBasis>,
    im: Vec<SubspaceBasis>,
    q_cache: Mutex<HashMap<(u32, usize), Arc<BitMatrix>>>,
}

impl ThhModel {
    pub fn new(base: Base, cap: usize) -> Result<Self, SseqError> {
        let spec = match base {
            Base::Y(n) => thh_y_spec(n, cap + 1)?,
            Base::HF2 => algebra_catalog(SpaceId::ThhHF2, cap + 1)?,
        };
        let basis = spec.basis()?;
        let sigma = (0..=cap)
            .into_par_iter()
            .map(|d| sigma_matrix(&spec, &basis, d))
            .collect::<Result<Vec<_>, _>>()?;
        let ker = sigma.par_iter().map(kernel_basis).collect();
        let im = (0..=cap)
            .map(|d| {
                if d == 0 {
                    SubspaceBasis::zero(basis.basis(0).len())
                } else {
                    image_basis(&sigma[d - 1])
                }
            })
            .collect();
        Ok(ThhModel {
            base,
            cap,
            spec,
            basis,
            sigma,
            ker,
            im,
            q_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn dim(&self, d: usize) -> usize {
        self.basis.basis(d).len()
    }

    pub fn sigma(&self, d: usize) -> &BitMatrix {
        &self.sigma[d]
    }

    pub fn sigma_kernel(&self, d: usize) -> &SubspaceBasis {
        &self.ker[d]
    }

    pub fn sigma_image(&self, d: usize) -> &SubspaceBasis {
        &self.im[d]
    }

    pub fn q(&self, m: u32, d: usize) -> Result<Arc<BitMatrix>, SseqError> {
        if let Some(x) = self.q_cache.lock().unwrap().get(&(m, d)) {
            return Ok(x.clone());
        }
        let mat = Arc::new(q_matrix(&self.spec, &self.basis, m, d)?);
        self.q_cache.lock().unwrap().insert((m, d), mat.clone());
        Ok(mat)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum SsKind {
    Tate,
    Hfp,
}

/// How a cell is cut out of `THH_d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CellKind {
    /// `ker sigma / im sigma`.
    Homology,
    /// `ker sigma`: nothing comes in.
    Kernel,
    /// `THH / im sigma`: nothing goes out.
    Cokernel,
    /// `THH` itself.
    Full,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Cell {
    pub column: i64,
    pub internal: usize,
    pub total: i64,
    pub dim: usize,
    pub kind: CellKind,
    pub certified: bool,
}

/// A rectangular window of an `E_2` or `E_3` page, columns `lo..=hi`.
///
/// A missing neighbour column is genuine when the page really stops there
/// (column 0 of the homotopy fixed point page, or the top column of a
/// truncation). Otherwise cells in that column are edge effects and are
/// marked uncertified.
#[derive(Clone, Debug)]
pub struct PageModel {
    pub id: Option<SpaceId>,
    pub kind: SsKind,
    pub page: u8,
    pub lo: i64,
    pub hi: i64,
    pub lo_genuine: bool,
    pub hi_genuine: bool,
    pub thh: Arc<ThhModel>,
    quotients: Arc<BTreeMap<CellKind, Vec<Subquotient>>>,
}

fn build_quotients(thh: &ThhModel, kinds: &[CellKind]) -> Result<BTreeMap<CellKind, Vec<Subquotient>>, SseqError> {
    let mut out = BTreeMap::new();
    for &kind in kinds {
        let v = (0..=thh.cap)
            .into_par_iter()
            .map(|d| {
                let full = SubspaceBasis::full(thh.dim(d));
                let zero = SubspaceBasis::zero(thh.dim(d));
                let (whole, sub) = match kind {
                    CellKind::Homology => (thh.sigma_kernel(d), thh.sigma_image(d)),
                    CellKind::Kernel => (thh.sigma_kernel(d), &zero),
                    CellKind::Cokernel => (&full, thh.sigma_image(d)),
                    CellKind::Full => (&full, &zero),
                };
                Subquotient::new(whole, sub)
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.insert(kind, v);
    }
    Ok(out)
}

impl PageModel {
    #[allow(clippy::too_many_arguments)]
    fn build(
        id: Option<SpaceId>,
        thh: Arc<ThhModel>,
        kind: SsKind,
        page: u8,
        lo: i64,
        hi: i64,
        lo_genuine: bool,
        hi_genuine: bool,
    ) -> Result<Self, SseqError> {
        if lo > hi {
            return Err(SseqError::Window(format!("empty column range {lo}..={hi}")));
        }
        let mut p = PageModel {
            id,
            kind,
            page,
            lo,
            hi,
            lo_genuine,
            hi_genuine,
            thh: thh.clone(),
            quotients: Arc::new(BTreeMap::new()),
        };
        let kinds: BTreeSet<CellKind> = (lo..=hi).map(|k| p.column_kind(k)).collect();
        p.quotients = Arc::new(build_quotients(&thh, &kinds.into_iter().collect::<Vec<_>>())?);
        Ok(p)
    }

    /// Default lowest column for Tate truncations: low enough that every
    /// cell of total degree `>= 0` and internal degree `<= cap` is interior.
    pub fn default_lo(cap: usize) -> i64 {
        -(cap as i64) / 2 - 2
    }

    /// `TP(y(n))[i]`: Tate `E_3` columns `lo..=i`, the top column a cokernel.
    pub fn tp(n: u32, i: i64, cap: usize) -> Result<Self, SseqError> {
        let thh = Arc::new(ThhModel::new(Base::Y(n), cap)?);
        let lo = Self::default_lo(cap).min(i - 2);
        Self::build(Some(SpaceId::TPModel { n, i }), thh, SsKind::Tate, 3, lo, i, false, true)
    }

    /// `TC^-(y(n))[i]`: homotopy fixed point `E_3` columns `0..=i`.
    pub fn tcminus(n: u32, i: i64, cap: usize) -> Result<Self, SseqError> {
        if i < 0 {
            return Err(SseqError::Window(format!("TC^- truncation needs i >= 0, got {i}")));
        }
        let thh = Arc::new(ThhModel::new(Base::Y(n), cap)?);
        Self::build(Some(SpaceId::TCminusModel { n, i }), thh, SsKind::Hfp, 3, 0, i, true, true)
    }

    pub fn cap(&self) -> usize {
        self.thh.cap
    }

    pub fn label(&self) -> String {
        match self.id {
            Some(id) => id.to_string(),
            None => format!(
                "{}-E{} {} columns {}..={}",
                match self.kind {
                    SsKind::Tate => "tate",
                    SsKind::Hfp => "hfp",
                },
                self.page,
                self.thh.base.label(),
                self.lo,
                self.hi
            ),
        }
    }

    pub fn column_kind(&self, k: i64) -> CellKind {
        if self.page == 2 {
            return CellKind::Full;
        }
        match (k > self.lo, k < self.hi) {
            (true, true) => CellKind::Homology,
            (false, true) => CellKind::Kernel,
            (true, false) => CellKind::Cokernel,
            (false, false) => CellKind::Full,
        }
    }

    pub fn column_certified(&self, k: i64) -> bool {
        self.page == 2 || ((k > self.lo || self.lo_genuine) && (k < self.hi || self.hi_genuine))
    }

    pub fn contains_column(&self, k: i64) -> bool {
        (self.lo..=self.hi).contains(&k)
    }

    pub fn cell_space(&self, k: i64, d: usize) -> &Subquotient {
        &self.quotients[&self.column_kind(k)][d]
    }

    pub fn cell(&self, k: i64, d: usize) -> Cell {
        Cell {
            column: k,
            internal: d,
            total: d as i64 - 2 * k,
            dim: self.cell_space(k, d).dim(),
            kind: self.column_kind(k),
            certified: self.column_certified(k),
        }
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for k in self.lo..=self.hi {
            for d in 0..=self.cap() {
                out.push(self.cell(k, d));
            }
        }
        out
    }

    pub fn column_dims(&self, k: i64) -> Vec<u64> {
        (0..=self.cap())
            .map(|d| self.cell_space(k, d).dim() as u64)
            .collect()
    }

    /// `d^2` on `E_2`: cell `(k, d)` to cell `(k + 1, d + 1)`.
    pub fn d2(&self, d: usize) -> &BitMatrix {
        self.thh.sigma(d)
    }

    /// `Q_m` on cell `(k, d)` by lifting to `THH_d`, acting and projecting.
    pub fn q_cell(&self, m: u32, k: i64, d: usize) -> Result<BitMatrix, SseqError> {
        let q = q_degree(m);
        let src = self.cell_space(k, d);
        if d < q {
            return Ok(BitMatrix::zeros(0, src.dim()));
        }
        let tgt = self.cell_space(k, d - q);
        let qm = self.thh.q(m, d)?;
        let err = || SseqError::QmNotWellDefined { m, column: k, degree: d };
        for b in src.sub().vectors() {
            if !tgt.coordinates(&qm.apply(b)).ok_or_else(err)?.is_zero() {
                return Err(err());
            }
        }
        let cols = src
            .representatives()
            .iter()
            .map(|z| tgt.coordinates(&qm.apply(z)).ok_or_else(err))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BitMatrix::from_columns(tgt.dim(), &cols))
    }

    pub fn column_module(&self, k: i64, m: u32) -> Result<ExplicitModule, SseqError> {
        let maps = (0..=self.cap())
            .into_par_iter()
            .map(|d| self.q_cell(m, k, d))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ExplicitModule {
            label: format!("{} column {k}", self.label()),
            m,
            dims: (0..=self.cap()).map(|d| self.cell_space(k, d).dim()).collect(),
            maps,
        })
    }

    /// Margolis homology of every column.
    pub fn margolis(&self, m: u32) -> Result<PageMargolis, SseqError> {
        let mut columns = BTreeMap::new();
        for k in self.lo..=self.hi {
            let t = margolis_homology(&self.column_module(k, m)?, m)?;
            columns.insert(k, (t, self.column_certified(k)));
        }
        Ok(PageMargolis {
            label: self.label(),
            m,
            columns: columns
                .into_iter()
                .map(|(k, (table, certified))| ColumnMargolis {
                    column: k,
                    certified,
                    table,
                })
                .collect(),
        })
    }

    /// The same window with `d^2` taken.
    pub fn run_d2(&self) -> Result<PageModel, SseqError> {
        if self.page != 2 {
            return Err(SseqError::Window("d^2 runs on an E_2 page".into()));
        }
        Self::build(
            self.id,
            self.thh.clone(),
            self.kind,
            3,
            self.lo,
            self.hi,
            self.lo_genuine,
            self.hi_genuine,
        )
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("column\tinternal_degree\tdimension\tpage\n");
        for c in self.cells() {
            let _ = writeln!(s, "{}\t{}\t{}\t{}", c.column, c.internal, c.dim, self.page);
        }
        s
    }

    pub fn summary(&self) -> PageSummary {
        PageSummary {
            label: self.label(),
            kind: self.kind,
            page: self.page,
            columns: (self.lo, self.hi),
            max_internal_degree: self.cap(),
            cells: self.cells(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PageSummary {
    pub label: String,
    pub kind: SsKind,
    pub page: u8,
    pub columns: (i64, i64),
    pub max_internal_degree: usize,
    pub cells: Vec<Cell>,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct ColumnMargolis {
    pub column: i64,
    pub certified: bool,
    pub table: MargolisTable,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct PageMargolis {
    pub label: String,
    pub m: u32,
    pub columns: Vec<ColumnMargolis>,
}

impl PageMargolis {
    pub fn column(&self, k: i64) -> Option<&ColumnMargolis> {
        self.columns.iter().find(|c| c.column == k)
    }

    /// Certified dimensions summed by total degree `d - 2k`.
    pub fn by_total_degree(&self) -> BTreeMap<i64, u64> {
        let mut out = BTreeMap::new();
        for c in self.columns.iter().filter(|c| c.certified) {
            for (d, &x) in c.table.certified_dims().iter().enumerate() {
                *out.entry(d as i64 - 2 * c.column).or_insert(0) += x;
            }
        }
        out
    }
}

pub fn tate_e2(base: Base, lo: i64, hi: i64, cap: usize) -> Result<PageModel, SseqError> {
    let thh = Arc::new(ThhModel::new(base, cap)?);
    PageModel::build(None, thh, SsKind::Tate, 2, lo, hi, false, false)
}

pub fn run_d2(page: &PageModel) -> Result<PageModel, SseqError> {
    page.run_d2()
}

/// `E_2` and `E_3` of the homotopy fixed point spectral sequence, columns
/// `0..=hi`.
pub fn hfp_pages(base: Base, hi: i64, cap: usize) -> Result<(PageModel, PageModel), SseqError> {
    let thh = Arc::new(ThhModel::new(base, cap)?);
    let e2 = PageModel::build(None, thh, SsKind::Hfp, 2, 0, hi.max(0), true, false)?;
    let e3 = e2.run_d2()?;
    Ok((e2, e3))
}

/// Keeps columns `<= i` of a Tate `E_3` window; the new top column is the
/// cokernel of `sigma`.
pub fn truncate_tp(page: &PageModel, i: i64) -> Result<PageModel, SseqError> {
    if page.kind != SsKind::Tate || page.page != 3 || !page.contains_column(i) || i == page.lo {
        return Err(SseqError::Window(format!(
            "truncation at {i} needs a Tate E_3 window strictly above column {}",
            page.lo
        )));
    }
    let id = match page.thh.base {
        Base::Y(n) => Some(SpaceId::TPModel { n, i }),
        Base::HF2 => None,
    };
    PageModel::build(id, page.thh.clone(), SsKind::Tate, 3, page.lo, i, page.lo_genuine, true)
}

/// Keeps columns `0..=i` of a homotopy fixed point `E_3` page.
pub fn tcminus_truncation(page: &PageModel, i: i64) -> Result<PageModel, SseqError> {
    if page.kind != SsKind::Hfp || page.page != 3 || i < 0 {
        return Err(SseqError::Window(format!("bad TC^- truncation at {i}")));
    }
    let id = match page.thh.base {
        Base::Y(n) => Some(SpaceId::TCminusModel { n, i }),
        Base::HF2 => None,
    };
    PageModel::build(id, page.thh.clone(), SsKind::Hfp, 3, 0, i, true, true)
}

/// Map of cells induced by the tower map `page[i] -> page[i-1]`: the
/// identity on columns both pages share, the quotient map into a cokernel
/// column, and zero on columns that disappear.
pub fn tower_cell_map(src: &PageModel, tgt: &PageModel, k: i64, d: usize) -> Result<BitMatrix, SseqError> {
    let s = src.cell_space(k, d);
    if !tgt.contains_column(k) {
        return Ok(BitMatrix::zeros(0, s.dim()));
    }
    let t = tgt.cell_space(k, d);
    let err = || SseqError::Window(format!("no tower map on cell ({k}, {d})"));
    for b in s.sub().vectors() {
        if !t.coordinates(b).ok_or_else(err)?.is_zero() {
            return Err(err());
        }
    }
    let cols = s
        .representatives()
        .iter()
        .map(|z| t.coordinates(z).ok_or_else(err))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BitMatrix::from_columns(t.dim(), &cols))
}

fn margolis_subquotient(page: &PageModel, m: u32, k: i64, d: usize) -> Result<Subquotient, SseqError> {
    let q = q_degree(m);
    let d_out = page.q_cell(m, k, d)?;
    let d_in = if d + q <= page.cap() {
        page.q_cell(m, k, d + q)?
    } else {
        BitMatrix::zeros(page.cell_space(k, d).dim(), 0)
    };
    Ok(homology(&d_in, &d_out)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Side {
    Tp,
    TcMinus,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct TowerStage {
    pub i: i64,
    /// Rank of the induced map on Margolis homology, per column, over
    /// certified internal degrees.
    pub column_ranks: BTreeMap<i64, u64>,
    /// The part coming from column `i - 1`, which maps into the cokernel
    /// column of the smaller truncation.
    pub edge_rank: u64,
    pub total_rank: u64,
    pub zero: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct TowerVerdict {
    pub side: Side,
    pub n: u32,
    pub m: u32,
    pub cap: usize,
    /// Internal degrees `0..=certified_up_to` are used.
    pub certified_up_to: usize,
    pub stages: Vec<TowerStage>,
    pub all_zero: bool,
}

/// The map `H(X[i]; Q_m) -> H(X[i-1]; Q_m)` for each `i` in `i_range`.
pub fn tower_margolis_verdict(
    side: Side,
    n: u32,
    m: u32,
    i_range: std::ops::RangeInclusive<i64>,
    cap: usize,
) -> Result<TowerVerdict, SseqError> {
    let thh = Arc::new(ThhModel::new(Base::Y(n), cap)?);
    let q = q_degree(m);
    if cap < q {
        return Err(SseqError::Window(format!("cap {cap} below |Q_{m}| = {q}")));
    }
    let certified_up_to = cap - q;
    let lo = PageModel::default_lo(cap).min(*i_range.start() - 2);
    let page = |i: i64| -> Result<PageModel, SseqError> {
        match side {
            Side::Tp => PageModel::build(
                Some(SpaceId::TPModel { n, i }),
                thh.clone(),
                SsKind::Tate,
                3,
                lo,
                i,
                false,
                true,
            ),
            Side::TcMinus => PageModel::build(
                Some(SpaceId::TCminusModel { n, i }),
                thh.clone(),
                SsKind::Hfp,
                3,
                0,
                i,
                true,
                true,
            ),
        }
    };
    let mut stages = Vec::new();
    for i in i_range {
        if side == Side::TcMinus && i < 1 {
            return Err(SseqError::Window("TC^- tower maps need i >= 1".into()));
        }
        let src = page(i)?;
        let tgt = page(i - 1)?;
        let mut column_ranks = BTreeMap::new();
        for k in src.lo..=src.hi {
            if !src.column_certified(k) || (tgt.contains_column(k) && !tgt.column_certified(k)) {
                continue;
            }
            let ranks = (0..=certified_up_to)
                .into_par_iter()
                .map(|d| -> Result<u64, SseqError> {
                    if !tgt.contains_column(k) {
                        return Ok(0);
                    }
                    let hs = margolis_subquotient(&src, m, k, d)?;
                    let ht = margolis_subquotient(&tgt, m, k, d)?;
                    let f = tower_cell_map(&src, &tgt, k, d)?;
                    induced_rank(&hs, &ht, &f)
                        .map(|r| r as u64)
                        .ok_or_else(|| SseqError::Window(format!("tower map is not a Q_{m} map at ({k}, {d})")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            column_ranks.insert(k, ranks.iter().sum());
        }
        let edge_rank = column_ranks.get(&(i - 1)).copied().unwrap_or(0);
        let total_rank = column_ranks.values().sum();
        stages.push(TowerStage {
            i,
            column_ranks,
            edge_rank,
            total_rank,
            zero: total_rank == 0,
        });
    }
    let all_zero = stages.iter().all(|s| s.zero);
    Ok(TowerVerdict {
        side,
        n,
        m,
        cap,
        certified_up_to,
        stages,
        all_zero,
    })
}

/// `psi(t)^k` truncated to `t`-powers `k..=k + w_max`: entry `w` is the
/// coefficient of `t^{k+w}`, a sum of monomials in the `xi_j^2`.
pub fn psi_t_power(k: i64, w_max: usize) -> Vec<BTreeSet<XiMonomial>> {
    // psi(t) = t P with P = 1 + sum_j xi_j^2 t^{2^j - 1}.
    let one = || -> Vec<BTreeSet<XiMonomial>> {
        let mut v = vec![BTreeSet::new(); w_max + 1];
        v[0].insert(XiMonomial::one());
        v
    };
    let mul = |a: &[BTreeSet<XiMonomial>], b: &[BTreeSet<XiMonomial>]| {
        let mut out = vec![BTreeSet::new(); w_max + 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate().take(w_max + 1 - i) {
                for p in x {
                    for r in y {
                        let t = p.mul(r);
                        if !out[i + j].remove(&t) {
                            out[i + j].insert(t);
                        }
                    }
                }
            }
        }
        out
    };
    let mut p = one();
    let mut j = 1;
    while (1usize << j) - 1 <= w_max {
        p[(1 << j) - 1].insert(XiMonomial::xi_pow(j, 2));
        j += 1;
    }
    let base = if k >= 0 {
        p
    } else {
        // P^{-1} = sum_r (P - 1)^r since P - 1 has t-order >= 1.
        let mut e = p.clone();
        e[0].clear();
        let mut inv = one();
        let mut term = one();
        for _ in 0..w_max {
            term = mul(&term, &e);
            for (w, s) in term.iter().enumerate() {
                for x in s {
                    if !inv[w].remove(x) {
                        inv[w].insert(x.clone());
                    }
                }
            }
        }
        inv
    };
    let mut acc = one();
    for _ in 0..k.unsigned_abs() {
        acc = mul(&acc, &base);
    }
    acc
}

/// `(column, internal degree)`.
type CellIndex = (i64, usize);

impl PageModel {
    /// Coaction of cell representatives in total degree `total`, with
    /// `psi(t^k) = psi(t)^k` and `t`-powers above the top column dropped.
    /// Returns the matrix of `x -> coaction(x) - 1 (x) x` and the source
    /// cells, or `None` if a needed cell is uncertified or above the cap.
    fn reduced_coaction_matrix(&self, total: i64) -> Result<Option<(BitMatrix, Vec<CellIndex>)>, SseqError> {
        let cap = self.cap() as i64;
        let mut sources = Vec::new();
        for k in self.lo..=self.hi {
            let d = total + 2 * k;
            if d < 0 {
                continue;
            }
            if d > cap || !self.column_certified(k) {
                if d <= cap && self.cell_space(k, d as usize).dim() == 0 {
                    continue;
                }
                return Ok(None);
            }
            if self.cell_space(k, d as usize).dim() > 0 {
                sources.push((k, d as usize));
            }
        }
        let spec = &self.thh.spec;
        let basis = &self.thh.basis;
        let mut index: HashMap<(XiMonomial, i64, usize), usize> = HashMap::new();
        let mut offsets = Vec::new();
        let mut rows = 0usize;
        let mut columns: Vec<Vec<usize>> = Vec::new();
        for &(k, d) in &sources {
            let w_max = (self.hi - k) as usize;
            let psi = psi_t_power(k, w_max);
            let cell = self.cell_space(k, d);
            for z in cell.representatives() {
                // right factors collected per (left monomial, column)
                let mut parts: BTreeMap<(XiMonomial, i64), crate::algebra::Element> = BTreeMap::new();
                for mono in basis.to_element(d, z).terms() {
                    for (a, r) in spec.coaction(mono).0 {
                        for (w, ls) in psi.iter().enumerate() {
                            for l in ls {
                                let left = l.mul(&a);
                                if left.is_one() {
                                    continue;
                                }
                                parts
                                    .entry((left, k + w as i64))
                                    .or_default()
                                    .add_monomial(r.clone());
                            }
                        }
                    }
                }
                let mut col = Vec::new();
                for ((left, kk), r) in parts {
                    if r.is_zero() {
                        continue;
                    }
                    let dr = spec.algebra.degree(r.terms().next().unwrap());
                    let tcell = self.cell_space(kk, dr);
                    let v = basis.to_vector(dr, &r).map_err(SteenrodError::from)?;
                    let coords = tcell.coordinates(&v).ok_or_else(|| {
                        SseqError::Window(format!("coaction leaves the cell ({kk}, {dr})"))
                    })?;
                    for c in coords.ones() {
                        let key = (left.clone(), kk, dr);
                        let base_row = *index.entry(key).or_insert_with(|| {
                            let o = rows;
                            rows += tcell.dim();
                            offsets.push(o);
                            o
                        });
                        col.push(base_row + c);
                    }
                }
                columns.push(col);
            }
        }
        let cols: Vec<BitVec> = columns
            .into_iter()
            .map(|c| BitVec::from_indices(rows, c))
            .collect();
        Ok(Some((BitMatrix::from_columns(rows, &cols), sources)))
    }

    /// Dimension of the comodule primitives in total degree `total`, or
    /// `None` if the window cannot certify it.
    pub fn primitives_dim(&self, total: i64) -> Result<Option<usize>, SseqError> {
        Ok(self
            .reduced_coaction_matrix(total)?
            .map(|(mat, _)| kernel_basis(&mat).dim()))
    }
}

/// Closed forms for the pages.
pub mod closed {
    use super::*;

    /// `H_*(z(n)/v_n) = P(xi_1^2, xi_2, .., xi_n) (x) E(xi_{n+1})`: one
    /// column of the Tate `E_3` page for `y(n)`.
    pub fn tate_column(n: u32) -> ClosedForm {
        if n == 0 {
            return ClosedForm::default();
        }
        let mut poly = vec![2];
        poly.extend((2..=n as usize).map(xi_degree));
        ClosedForm {
            polynomial: poly,
            exterior: vec![xi_degree(n as usize + 1)],
            truncated: vec![],
        }
    }

    /// `P(xi_1^2, xi_2^2, ..) (x) E(xi_2, xi_3, ..)` up to `cap`.
    pub fn tate_column_hf2(cap: usize) -> ClosedForm {
        let k = crate::steenrod::xi_count(cap + 1);
        ClosedForm {
            polynomial: (1..=k).map(|j| 2 * xi_degree(j)).collect(),
            exterior: (2..=k).map(xi_degree).collect(),
            truncated: vec![],
        }
    }

    /// Nonempty products of the `sigma xi_i`, times `P(xi_1^2, xi_2, .., xi_n)`.
    pub fn torsion(n: u32, cap: usize) -> Vec<u64> {
        let mut poly = vec![2];
        poly.extend((2..=n as usize).map(xi_degree));
        let free_part = ClosedForm {
            polynomial: poly,
            exterior: vec![],
            truncated: vec![],
        }
        .series(cap);
        let mut t0 = ClosedForm {
            polynomial: vec![],
            exterior: (1..=n as usize).map(|i| 1 << i).collect(),
            truncated: vec![],
        }
        .series(cap);
        t0[0] = 0;
        crate::algebra::convolve(&free_part, &t0)
    }

    /// Column 0 of the homotopy fixed point `E_3` page: free part plus torsion.
    pub fn hfp_column0(n: u32, cap: usize) -> Vec<u64> {
        let free = tate_column(n).series(cap);
        let t = torsion(n, cap);
        free.iter().zip(&t).map(|(a, b)| a + b).collect()
    }

    /// Margolis homology of column `k` of the homotopy fixed point `E_3`
    /// page, which is that of the limit of the `TC^-` tower.
    pub fn tcminus_limit(n: u32, m: u32, k: i64, cap: usize) -> Vec<u64> {
        let mut point = vec![0; cap + 1];
        point[0] = 1;
        let zero = vec![0; cap + 1];
        let t0 = t0(n, cap);
        match (m, k) {
            (0, 0) => {
                let mut v = crate::algebra::convolve(&xi_n_squared(n, cap), &t0);
                v[0] += 1;
                v
            }
            (0, _) => point,
            (m, _) if m < n => zero,
            (m, 0) if m == n => crate::algebra::convolve(&z_series(n, cap), &t0),
            (m, _) if m == n => zero,
            (_, 0) => hfp_column0(n, cap),
            _ => tate_column(n).series(cap),
        }
    }

    /// `z(n) = P(xi_1^2, xi_2, .., xi_n)`.
    pub fn z_series(n: u32, cap: usize) -> Vec<u64> {
        let mut poly = vec![2];
        poly.extend((2..=n as usize).map(xi_degree));
        ClosedForm {
            polynomial: poly,
            exterior: vec![],
            truncated: vec![],
        }
        .series(cap)
    }

    /// `P(xi_n^2)`.
    pub fn xi_n_squared(n: u32, cap: usize) -> Vec<u64> {
        ClosedForm {
            polynomial: vec![2 * xi_degree(n as usize)],
            exterior: vec![],
            truncated: vec![],
        }
        .series(cap)
    }

    /// `T_0`: nonempty products of `sigma xi_1, .., sigma xi_n`.
    pub fn t0(n: u32, cap: usize) -> Vec<u64> {
        let mut t0 = ClosedForm {
            polynomial: vec![],
            exterior: (1..=n as usize).map(|i| 1 << i).collect(),
            truncated: vec![],
        }
        .series(cap);
        t0[0] = 0;
        t0
    }
}

/// Compares every certified interior column of a Tate `E_3` window with
/// the closed form; the report lists one row per (column, degree).
pub fn compare_tate_e3(page: &PageModel) -> DimReport {
    let expected = match page.thh.base {
        Base::Y(n) => closed::tate_column(n).series(page.cap()),
        Base::HF2 => closed::tate_column_hf2(page.cap()).series(page.cap()),
    };
    let mut rows = Vec::new();
    for k in page.lo..=page.hi {
        if page.column_kind(k) != CellKind::Homology {
            continue;
        }
        for (d, &e) in expected.iter().enumerate() {
            rows.push(DimRow {
                degree: d as i64 - 2 * k,
                machine: page.cell_space(k, d).dim() as u64,
                expected: e,
                certified: page.column_certified(k),
            });
        }
    }
    DimReport::new(format!("{} vs closed form", page.label()), rows)
}

/// Compares a homotopy fixed point `E_3` window with free part plus
/// torsion in column 0 and the free part alone in columns above 0.
pub fn compare_hfp_e3(page: &PageModel) -> Result<DimReport, SseqError> {
    let Base::Y(n) = page.thh.base else {
        return Err(SseqError::Window("closed form is for y(n)".into()));
    };
    let free = closed::tate_column(n).series(page.cap());
    let col0 = closed::hfp_column0(n, page.cap());
    let mut rows = Vec::new();
    for k in page.lo..=page.hi {
        let expected = if k == 0 { &col0 } else { &free };
        for (d, &e) in expected.iter().enumerate() {
            rows.push(DimRow {
                degree: d as i64 - 2 * k,
                machine: page.cell_space(k, d).dim() as u64,
                expected: e,
                certified: page.column_certified(k),
            });
        }
    }
    Ok(DimReport::new(format!("{} vs closed form", page.label()), rows))
}

/// Margolis homology of the homotopy fixed point `E_3` page in columns
/// `0..=hi` against the closed form for the `TC^-` limit.
pub fn compare_tcminus_limit(n: u32, m: u32, hi: i64, cap: usize) -> Result<(PageMargolis, DimReport), SseqError> {
    let (_, e3) = hfp_pages(Base::Y(n), hi, cap)?;
    let pm = e3.margolis(m)?;
    let mut rows = Vec::new();
    for c in &pm.columns {
        let expected = closed::tcminus_limit(n, m, c.column, cap);
        let certified_up_to = c.table.certified_up_to;
        for (d, (&x, &e)) in c.table.dims.iter().zip(&expected).enumerate() {
            rows.push(DimRow {
                degree: d as i64 - 2 * c.column,
                machine: x,
                expected: e,
                certified: c.certified && certified_up_to.is_some_and(|u| d <= u),
            });
        }
    }
    let report = DimReport::new(format!("TC^-(y{n}) limit Q_{m} vs closed form"), rows);
    Ok((pm, report))
}

/// `phi_n` induces a map of `E_3` columns; returns its rank in each degree
/// next to the source dimension.
pub fn phi_on_e3(n: u32, cap: usize) -> Result<Vec<(usize, usize)>, SseqError> {
    let phi = crate::steenrod::PhiMap::new(n, cap + 1)?;
    let src = ThhModel::new(Base::Y(n), cap)?;
    let tgt = ThhModel::new(Base::HF2, cap.max(xi_degree(n as usize + 1)))?;
    let mut out = Vec::new();
    for d in 0..=cap {
        let hs = Subquotient::new(src.sigma_kernel(d), src.sigma_image(d))?;
        let ht = Subquotient::new(tgt.sigma_kernel(d), tgt.sigma_image(d))?;
        let f = phi.matrix(&src.basis, &tgt.basis, d)?;
        let r = induced_rank(&hs, &ht, &f)
            .ok_or_else(|| SseqError::Window(format!("phi is not a chain map in degree {d}")))?;
        out.push((hs.dim(), r));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tate_e3_matches_closed_form() {
        for n in 0..=3 {
            let e2 = tate_e2(Base::Y(n), -4, 4, 20).unwrap();
            let e3 = e2.run_d2().unwrap();
            let rep = compare_tate_e3(&e3);
            assert!(rep.equal, "n = {n}: {:?}", rep.first_mismatch);
        }
        let e3 = tate_e2(Base::HF2, -2, 2, 20).unwrap().run_d2().unwrap();
        assert!(compare_tate_e3(&e3).equal);
    }

    #[test]
    fn hfp_e3_matches_closed_form() {
        for n in 1..=3 {
            let (_, e3) = hfp_pages(Base::Y(n), 5, 20).unwrap();
            let rep = compare_hfp_e3(&e3).unwrap();
            assert!(rep.equal, "n = {n}: {:?}", rep.first_mismatch);
        }
    }

    #[test]
    fn tcminus_limit_case_split() {
        for n in 1..=2 {
            for m in 0..=n + 1 {
                let (_, rep) = compare_tcminus_limit(n, m, 4, 18).unwrap();
                if n >= 2 && m == n {
                    // Q_n(xi_n sigma xi_n . sigma xi_1) = sigma xi_1 kills T_0 classes.
                    assert_eq!(rep.first_mismatch, Some(2));
                } else {
                    assert!(rep.equal, "n = {n}, m = {m}: {:?}", rep.first_mismatch);
                }
            }
        }
    }

    #[test]
    fn psi_t_inverse() {
        let a = psi_t_power(1, 12);
        let b = psi_t_power(-1, 12);
        // product of the two series is 1
        for w in 0..=12 {
            let mut s: BTreeSet<XiMonomial> = BTreeSet::new();
            for i in 0..=w {
                for x in &a[i] {
                    for y in &b[w - i] {
                        let t = x.mul(y);
                        if !s.remove(&t) {
                            s.insert(t);
                        }
                    }
                }
            }
            let expect: BTreeSet<XiMonomial> = if w == 0 { [XiMonomial::one()].into() } else { BTreeSet::new() };
            assert_eq!(s, expect, "w = {w}");
        }
    }

    #[test]
    fn phi_injective_on_e3() {
        for n in 1..=2 {
            for (d, (dim, rank)) in phi_on_e3(n, 20).unwrap().into_iter().enumerate() {
                assert_eq!(dim, rank, "n = {n}, degree {d}");
            }
        }
    }

    #[test]
    fn cokernel_top_column() {
        let page = PageModel::tp(1, 2, 16).unwrap();
        for d in 0..=16 {
            let expect = page.thh.dim(d) - page.thh.sigma_image(d).dim();
            assert_eq!(page.cell_space(2, d).dim(), expect);
        }
    }
}
