//! The acceptance criteria as runnable checks. Expected values are built
//! here from generating functions, independently of the engine's own
//! closed-form helpers.

use serde::Serialize;
use std::time::Instant;

use crate::algebra::{convolve, ClosedForm, Element, GeneratorSpec, AlgebraSpec};
use crate::f2linalg::rank;
use crate::margolis::{ext_over_eqm, margolis_homology, AlgebraModule, QModule};
use crate::oracles::{ext_minimal_resolution, hochschild_bar, qm_phi_paths, qm_two_paths};
use crate::sseq::{
    compare_hfp_e3, compare_tate_e3, hfp_pages, phi_on_e3, tate_e2, tower_margolis_verdict, Base,
    CellKind, PageModel, Side,
};
use crate::steenrod::{
    algebra_catalog, jn_span, q_degree, q_matrix, sigma, xi_degree, PhiMap, SpaceId,
};

/// Internal degree bound for the algebra-level criteria.
const N: usize = 32;
/// Bound for the page-level criteria.
const N_PAGE: usize = 32;
const WINDOW: (i64, i64) = (-6, 6);
const MIN_INTERIOR_COLUMNS: usize = 5;
const M_MAX: u32 = 4;
const HH_DEGREE: usize = 8;
const HH_S: usize = 6;
const HH_SECONDS: f64 = 60.0;
const PHI_DEGREE: usize = 24;
const PRIM_DEGREE: i64 = 24;
const RES_DEGREE: usize = 12;
const RES_S: usize = 4;
/// Criteria whose failure is understood and documented in the README.
pub const KNOWN_FAILURES: [u32; 3] = [9, 10, 13];

pub type Outcome = Result<String, String>;

fn series(poly: &[usize], ext: &[usize], max: usize) -> Vec<u64> {
    ClosedForm {
        polynomial: poly.to_vec(),
        exterior: ext.to_vec(),
        truncated: vec![],
    }
    .series(max)
}

fn point(max: usize) -> Vec<u64> {
    let mut v = vec![0; max + 1];
    v[0] = 1;
    v
}

fn margolis(id: SpaceId, m: u32, cap: usize) -> Result<Vec<u64>, String> {
    let spec = algebra_catalog(id, cap).map_err(|e| e.to_string())?;
    let module = AlgebraModule::new(spec).map_err(|e| e.to_string())?;
    let t = margolis_homology(&module, m).map_err(|e| e.to_string())?;
    Ok(t.certified_dims().to_vec())
}

fn check_series(what: &str, got: &[u64], expected: &[u64]) -> Result<(), String> {
    if got.len() > expected.len() {
        return Err(format!("{what}: expected series too short"));
    }
    match got.iter().zip(expected).position(|(a, b)| a != b) {
        None => Ok(()),
        Some(d) => Err(format!("{what}: degree {d} has {} (expected {})", got[d], expected[d])),
    }
}

fn z_gens(n: u32) -> Vec<usize> {
    let mut g = vec![2];
    g.extend((2..=n as usize).map(xi_degree));
    g
}

fn c1_square_zero() -> Outcome {
    let mut checks = 0usize;
    let ids = [
        SpaceId::DualSteenrod,
        SpaceId::HZ,
        SpaceId::Y(1),
        SpaceId::Y(2),
        SpaceId::Y(3),
        SpaceId::Z(1),
        SpaceId::Z(2),
        SpaceId::Z(3),
        SpaceId::ZmodVn(1),
        SpaceId::ZmodVn(2),
        SpaceId::ZmodVn(3),
        SpaceId::ThhY(1),
        SpaceId::ThhY(2),
        SpaceId::ThhY(3),
        SpaceId::ThhHF2,
    ];
    for id in ids {
        let c = algebra_catalog(id, N).map_err(|e| e.to_string())?;
        let b = c.basis().map_err(|e| e.to_string())?;
        for m in 0..=M_MAX {
            let q = q_degree(m);
            for d in 2 * q..=N {
                let a = q_matrix(&c, &b, m, d).map_err(|e| e.to_string())?;
                let a2 = q_matrix(&c, &b, m, d - q).map_err(|e| e.to_string())?;
                let p = a2.mul(&a).map_err(|e| e.to_string())?;
                if !p.is_zero() {
                    return Err(format!("{id}: Q_{m}^2 != 0 in degree {d}"));
                }
                checks += 1;
            }
        }
    }
    for base in [Base::Y(1), Base::Y(2), Base::Y(3), Base::HF2] {
        let e2 = tate_e2(base, -1, 1, N_PAGE).map_err(|e| e.to_string())?;
        for d in 0..N_PAGE - 1 {
            let p = e2.d2(d + 1).mul(e2.d2(d)).map_err(|e| e.to_string())?;
            if !p.is_zero() {
                return Err(format!("{}: d2 d2 != 0 in degree {d}", base.label()));
            }
            checks += 1;
        }
    }
    for n in 1..=2u32 {
        let pages = [
            PageModel::tp(n, 2, N_PAGE).map_err(|e| e.to_string())?,
            PageModel::tcminus(n, 3, N_PAGE).map_err(|e| e.to_string())?,
        ];
        for page in &pages {
            for m in 0..=n + 1 {
                let q = q_degree(m);
                for k in page.lo..=page.hi {
                    if !page.column_certified(k) {
                        continue;
                    }
                    for d in 2 * q..=page.cap() {
                        let a = page.q_cell(m, k, d).map_err(|e| e.to_string())?;
                        let a2 = page.q_cell(m, k, d - q).map_err(|e| e.to_string())?;
                        if !a2.mul(&a).map_err(|e| e.to_string())?.is_zero() {
                            return Err(format!("{}: Q_{m}^2 != 0 at ({k}, {d})", page.label()));
                        }
                        checks += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{checks} compositions vanish"))
}

fn c2_dual_steenrod() -> Outcome {
    for m in 0..=3 {
        let h = margolis(SpaceId::DualSteenrod, m, N)?;
        if h.len() != N - q_degree(m) + 1 {
            return Err(format!("Q_{m}: certified window ends at {}", h.len() as i64 - 1));
        }
        check_series(&format!("Q_{m}"), &h, &vec![0; N + 1])?;
    }
    Ok(format!("acyclic for m <= 3, degrees <= {N} - |Q_m|"))
}

fn c3_hz() -> Outcome {
    check_series("Q_0", &margolis(SpaceId::HZ, 0, N)?, &point(N))?;
    for m in 1..=3 {
        check_series(&format!("Q_{m}"), &margolis(SpaceId::HZ, m, N)?, &vec![0; N + 1])?;
    }
    Ok("Q_0 = F_2 in degree 0, Q_1..Q_3 acyclic".into())
}

fn c4_yn() -> Outcome {
    for n in 1..=3u32 {
        let full = series(&(1..=n as usize).map(xi_degree).collect::<Vec<_>>(), &[], N);
        for m in 0..=n + 1 {
            let h = margolis(SpaceId::Y(n), m, N)?;
            let e = if m < n { vec![0; N + 1] } else { full.clone() };
            check_series(&format!("y({n}) Q_{m}"), &h, &e)?;
        }
    }
    Ok("n = 1..3: zero below n, full series at n and n+1".into())
}

fn c5_zn() -> Outcome {
    for n in 1..=3u32 {
        let h = margolis(SpaceId::Z(n), 0, N)?;
        check_series(&format!("z({n}) Q_0"), &h, &series(&[2 * xi_degree(n as usize)], &[], N))?;
        check_series(&format!("z({n})/v_{n} Q_0"), &margolis(SpaceId::ZmodVn(n), 0, N)?, &point(N))?;
        for m in 1..=n {
            check_series(&format!("z({n})/v_{n} Q_{m}"), &margolis(SpaceId::ZmodVn(n), m, N)?, &vec![0; N + 1])?;
        }
        let full = series(&z_gens(n), &[xi_degree(n as usize + 1)], N);
        check_series(&format!("z({n})/v_{n} Q_{}", n + 1), &margolis(SpaceId::ZmodVn(n), n + 1, N)?, &full)?;
    }
    Ok("n = 1..3".into())
}

fn c6_tate() -> Outcome {
    let mut details = Vec::new();
    for n in 1..=2u32 {
        let e3 = tate_e2(Base::Y(n), WINDOW.0, WINDOW.1, N)
            .and_then(|p| p.run_d2())
            .map_err(|e| e.to_string())?;
        let interior = (e3.lo..=e3.hi)
            .filter(|&k| e3.column_certified(k) && e3.column_kind(k) == CellKind::Homology)
            .count();
        if interior < MIN_INTERIOR_COLUMNS {
            return Err(format!("n = {n}: only {interior} interior columns"));
        }
        // Closed form (1 + x^{2^{n+1}-1}) prod factors, built here.
        let col = convolve(&series(&z_gens(n), &[], N), &{
            let mut v = point(N);
            v[xi_degree(n as usize + 1)] += 1;
            v
        });
        for k in e3.lo..=e3.hi {
            if !e3.column_certified(k) {
                continue;
            }
            let got: Vec<u64> = (0..=N).map(|d| e3.cell_space(k, d).dim() as u64).collect();
            check_series(&format!("n = {n} column {k}"), &got, &col)?;
        }
        let rep = compare_tate_e3(&e3);
        if !rep.equal {
            return Err(format!("n = {n}: engine report mismatch at {:?}", rep.first_mismatch));
        }
        details.push(format!("n={n}: {interior} columns"));
    }
    Ok(details.join(", "))
}

fn c7_hfp() -> Outcome {
    for n in 1..=2u32 {
        let (_, e3) = hfp_pages(Base::Y(n), WINDOW.1, N).map_err(|e| e.to_string())?;
        let free = convolve(&series(&z_gens(n), &[], N), &{
            let mut v = point(N);
            v[xi_degree(n as usize + 1)] += 1;
            v
        });
        let mut t0 = series(&[], &(1..=n as usize).map(|i| 1 << i).collect::<Vec<_>>(), N);
        t0[0] = 0;
        let torsion = convolve(&series(&z_gens(n), &[], N), &t0);
        for k in e3.lo..=e3.hi {
            if !e3.column_certified(k) {
                continue;
            }
            let got: Vec<u64> = (0..=N).map(|d| e3.cell_space(k, d).dim() as u64).collect();
            let expected: Vec<u64> = if k == 0 {
                free.iter().zip(&torsion).map(|(a, b)| a + b).collect()
            } else {
                free.clone()
            };
            check_series(&format!("n = {n} column {k}"), &got, &expected)?;
        }
        if torsion.iter().all(|&x| x == 0) {
            return Err("torsion series is empty".into());
        }
        let rep = compare_hfp_e3(&e3).map_err(|e| e.to_string())?;
        if !rep.equal {
            return Err(format!("n = {n}: engine report mismatch at {:?}", rep.first_mismatch));
        }
    }
    Ok("free part in every column, torsion only in column 0".into())
}

fn c8_tower() -> Outcome {
    let mut stages = 0;
    for n in 1..=2u32 {
        for m in 1..=n {
            let v = tower_margolis_verdict(Side::Tp, n, m, 0..=5, N_PAGE).map_err(|e| e.to_string())?;
            if !v.all_zero {
                let bad = v.stages.iter().find(|s| !s.zero).unwrap();
                return Err(format!("n = {n}, m = {m}: rank {} at i = {}", bad.total_rank, bad.i));
            }
            stages += v.stages.len();
        }
    }
    let control = tower_margolis_verdict(Side::Tp, 1, 0, 0..=3, N_PAGE).map_err(|e| e.to_string())?;
    if control.stages.iter().any(|s| s.zero) {
        return Err("m = 0 control produced a zero map".into());
    }
    Ok(format!("{stages} zero stages, m = 0 control nonzero"))
}

fn c9_tc_y1() -> Outcome {
    // Pattern: one class in internal degree 2 + 2k in column 0, nothing else.
    let mut failures = Vec::new();
    for i in 1..=5i64 {
        let page = PageModel::tcminus(1, i, N_PAGE).map_err(|e| e.to_string())?;
        let pm = page.margolis(1).map_err(|e| e.to_string())?;
        for c in pm.columns.iter().filter(|c| c.certified) {
            let dims = c.table.certified_dims();
            let expected: Vec<u64> = (0..dims.len())
                .map(|d| u64::from(c.column == 0 && d >= 2 && d % 2 == 0))
                .collect();
            if dims != expected.as_slice() {
                let d = dims.iter().zip(&expected).position(|(a, b)| a != b).unwrap();
                failures.push(format!("i={i} column {} degree {d}: {} vs {}", c.column, dims[d], expected[d]));
                break;
            }
        }
    }
    let v = tower_margolis_verdict(Side::TcMinus, 1, 1, 2..=5, N_PAGE).map_err(|e| e.to_string())?;
    let pattern = (2..=v.certified_up_to).filter(|d| d % 2 == 0).count() as u64;
    for s in &v.stages {
        if s.column_ranks.get(&0) != Some(&pattern) {
            failures.push(format!("tower map at i={} has rank {:?} on column 0", s.i, s.column_ranks.get(&0)));
        }
    }
    if failures.is_empty() {
        Ok("pattern constant in i, identity on column 0".into())
    } else {
        Err(failures.join("; "))
    }
}

fn c10_tc_limit() -> Outcome {
    let mut failures = Vec::new();
    for n in 1..=2u32 {
        let (_, e3) = hfp_pages(Base::Y(n), WINDOW.1, N_PAGE).map_err(|e| e.to_string())?;
        let zn = series(&z_gens(n), &[], N_PAGE);
        let mut t0 = series(&[], &(1..=n as usize).map(|i| 1 << i).collect::<Vec<_>>(), N_PAGE);
        t0[0] = 0;
        for m in 0..=(n + 1).min(M_MAX) {
            let pm = e3.margolis(m).map_err(|e| e.to_string())?;
            for c in pm.columns.iter().filter(|c| c.certified) {
                let k = c.column;
                let column: Vec<u64> = (0..=N_PAGE).map(|d| e3.cell_space(k, d).dim() as u64).collect();
                let expected = match m {
                    0 if k == 0 => {
                        let mut v = convolve(&series(&[2 * xi_degree(n as usize)], &[], N_PAGE), &t0);
                        v[0] += 1;
                        v
                    }
                    0 => point(N_PAGE),
                    m if m < n => vec![0; N_PAGE + 1],
                    m if m == n && k == 0 => convolve(&zn, &t0),
                    m if m == n => vec![0; N_PAGE + 1],
                    _ => column,
                };
                if let Err(e) = check_series(&format!("n={n} m={m} column {k}"), c.table.certified_dims(), &expected) {
                    failures.push(e);
                    break;
                }
            }
        }
    }
    if failures.is_empty() {
        Ok("all four rows match for n = 1, 2".into())
    } else {
        Err(failures.join("; "))
    }
}

fn c11_hochschild() -> Outcome {
    let start = Instant::now();
    let cases = [
        ("H_*(y(1))", AlgebraSpec::new(vec![GeneratorSpec::poly("xi1", 1)]), 1usize),
        ("P(xi1^2)", AlgebraSpec::new(vec![GeneratorSpec::poly("xi1^2", 2)]), 2usize),
    ];
    for (name, spec, g) in cases {
        let h = hochschild_bar(&spec, HH_DEGREE, HH_S).map_err(|e| e.to_string())?;
        if h.certified_up_to < HH_DEGREE {
            return Err(format!("{name}: certified only to {}", h.certified_up_to));
        }
        // HH(P(x)) = P(x) (x) E(sigma x).
        let expected = series(&[g], &[g + 1], HH_DEGREE);
        check_series(name, &h.total[..=HH_DEGREE], &expected)?;
    }
    let secs = start.elapsed().as_secs_f64();
    if secs > HH_SECONDS {
        return Err(format!("took {secs:.1}s"));
    }
    Ok(format!("degrees <= {HH_DEGREE}, s <= {HH_S}, {secs:.2}s"))
}

fn c12_phi() -> Outcome {
    let mut checked = 0;
    for n in 1..=2u32 {
        let phi = PhiMap::new(n, PHI_DEGREE).map_err(|e| e.to_string())?;
        let sb = phi.source.basis().map_err(|e| e.to_string())?;
        let tb = phi.target.basis().map_err(|e| e.to_string())?;
        let j = jn_span(&phi, PHI_DEGREE).map_err(|e| e.to_string())?;
        let mut tgt = phi.target.clone();
        tgt.cap = PHI_DEGREE;
        let jb = tgt.basis().map_err(|e| e.to_string())?;
        for d in 0..=PHI_DEGREE {
            let f = phi.matrix(&sb, &tb, d).map_err(|e| e.to_string())?;
            if rank(&f) != sb.basis(d).len() {
                return Err(format!("n = {n}: phi not injective in degree {d}"));
            }
            if d == PHI_DEGREE {
                continue;
            }
            for mono in sb.basis(d) {
                let x = Element::from_monomial(mono.clone());
                let mut diff = sigma(&phi.target, &phi.apply(&x)).map_err(|e| e.to_string())?;
                diff.add_assign(&phi.apply(&sigma(&phi.source, &x).map_err(|e| e.to_string())?));
                if !j.contains(&jb, d + 1, &diff).map_err(|e| e.to_string())? {
                    return Err(format!("n = {n}: sigma phi - phi sigma outside J_n on {}", phi.source.algebra.format_monomial(mono)));
                }
                checked += 1;
            }
        }
        for (d, (dim, r)) in phi_on_e3(n, PHI_DEGREE).map_err(|e| e.to_string())?.into_iter().enumerate() {
            if dim != r {
                return Err(format!("n = {n}: phi not injective on E_3 in degree {d}"));
            }
        }
        for m in 0..=M_MAX {
            let rep = qm_phi_paths(n, m, 16).map_err(|e| e.to_string())?;
            if !rep.agree() {
                return Err(format!("n = {n}: phi does not commute with Q_{m}"));
            }
        }
    }
    Ok(format!("injective, {checked} monomials in J_n"))
}

fn c13_primitives() -> Outcome {
    let mut failures = Vec::new();
    for n in 1..=2u32 {
        let bound = 1i64 << (n + 1);
        for i in -2..=3i64 {
            let cap = (PRIM_DEGREE + 2 * i.max(0)) as usize;
            let page = PageModel::tp(n, i, cap).map_err(|e| e.to_string())?;
            let mut offending = Vec::new();
            for total in (-2 * i.max(0))..=PRIM_DEGREE {
                match page.primitives_dim(total).map_err(|e| e.to_string())? {
                    None => return Err(format!("n={n} i={i}: degree {total} not certified")),
                    Some(p) if p > 0 && total >= bound => offending.push(total),
                    _ => {}
                }
            }
            if !offending.is_empty() {
                failures.push(format!("n={n} i={i}: primitives in {offending:?}"));
            }
        }
    }
    if failures.is_empty() {
        Ok("all primitives below 2^{n+1}".into())
    } else {
        Err(failures.join("; "))
    }
}

fn c14_ext() -> Outcome {
    let ids = [
        SpaceId::DualSteenrod,
        SpaceId::HZ,
        SpaceId::Y(1),
        SpaceId::Y(2),
        SpaceId::Z(2),
        SpaceId::ZmodVn(1),
        SpaceId::ZmodVn(2),
        SpaceId::ThhY(1),
        SpaceId::ThhHF2,
    ];
    for id in ids {
        let module = AlgebraModule::new(algebra_catalog(id, N_PAGE).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        for m in 0..=3u32 {
            let ext = ext_over_eqm(&module, m, RES_S).map_err(|e| e.to_string())?;
            let h = margolis_homology(&module, m).map_err(|e| e.to_string())?;
            let q = q_degree(m);
            for s in 1..=RES_S {
                let top = ext.certified[s].unwrap_or(0);
                for t in s * q..=top {
                    if ext.dim(s, t) != h.dims[t - s * q] {
                        return Err(format!("{id} m={m}: Ext^{{{s},{t}}} != H shifted"));
                    }
                }
            }
        }
        let c = module.spec.clone();
        if !c.has_exotic_rules() {
            for m in 0..=3 {
                if !qm_two_paths(&c, m, 16).map_err(|e| e.to_string())?.agree() {
                    return Err(format!("{id}: Q_{m} derivation and coaction disagree"));
                }
            }
        }
    }
    let module = AlgebraModule::new(algebra_catalog(SpaceId::Y(1), RES_DEGREE).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let res = ext_minimal_resolution(&module, 1, RES_S).map_err(|e| e.to_string())?;
    let ext = ext_over_eqm(&module, 1, RES_S).map_err(|e| e.to_string())?;
    for (s, (row, cert)) in res.iter().zip(&ext.certified).enumerate() {
        let top = cert.unwrap_or(0).min(module.max_degree());
        if row[..=top] != ext.rows[s][..=top] {
            return Err(format!("y(1) m=1: minimal resolution differs in row {s}"));
        }
    }
    Ok(format!("{} comodules, resolution check to degree {RES_DEGREE}", ids.len()))
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    #[serde(skip)]
    pub seconds: f64,
}

type Check = fn() -> Outcome;

pub const CRITERIA: [(u32, &str, Check); 14] = [
    (1, "Q_m Q_m = 0 and d2 d2 = 0", c1_square_zero),
    (2, "H(A_*; Q_m) = 0", c2_dual_steenrod),
    (3, "Margolis homology of HZ", c3_hz),
    (4, "Margolis homology of y(n)", c4_yn),
    (5, "Margolis homology of z(n) and z(n)/v_n", c5_zn),
    (6, "Tate E_3 closed form", c6_tate),
    (7, "homotopy fixed point E_3 closed form", c7_hfp),
    (8, "TP tower is zero on Margolis homology", c8_tower),
    (9, "localized E_2 of TC^-(y(1))[i]", c9_tc_y1),
    (10, "limit Margolis homology of TC^-(y(n))", c10_tc_limit),
    (11, "Hochschild homology via bar complex", c11_hochschild),
    (12, "phi_n injective, sigma defect in J_n", c12_phi),
    (13, "TP primitives below 2^{n+1}", c13_primitives),
    (14, "Ext over E(Q_m) vs Margolis and resolution", c14_ext),
];

/// Runs the selected criteria (all if `only` is empty) in order.
pub fn run(only: &[u32]) -> Vec<CriterionOutcome> {
    CRITERIA
        .iter()
        .filter(|(id, _, _)| only.is_empty() || only.contains(id))
        .map(|&(id, name, check)| {
            let t = Instant::now();
            let outcome = check();
            let seconds = t.elapsed().as_secs_f64();
            let (pass, detail) = match outcome {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CriterionOutcome {
                id,
                name,
                pass,
                detail,
                seconds,
            }
        })
        .collect()
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "{} {:>2} {}: {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}
