//! The dual Steenrod algebra at p = 2 with conjugate generators `xi_k`
//! (degree `2^k - 1`), and the comodule algebras built from it.
//!
//! Coactions are left coactions `M -> A_* (x) M`. The Milnor primitive `Q_m`
//! is read off from the terms whose left factor is exactly `xi_{m+1}`; it
//! lowers degree by `2^{m+1} - 1`.

use crate::algebra::{
    apply_derivation_monomial, enumerate_basis, AlgebraError, AlgebraSpec, DerivationSpec,
    Element, GeneratorSpec, GradedBasis, Monomial,
};
use crate::f2linalg::{kernel_basis, BitMatrix, BitVec, LinalgError, SubspaceBasis};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SteenrodError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("right factor {0} is not in the comodule algebra")]
    NotSubcomodule(String),
    #[error("unknown space id {0:?}")]
    UnknownId(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Page(Box<crate::sseq::SseqError>),
}

pub fn xi_degree(k: usize) -> usize {
    (1usize << k) - 1
}

pub fn q_degree(m: u32) -> usize {
    (1usize << (m + 1)) - 1
}

/// Number of `xi_k` of degree at most `cap`.
pub fn xi_count(cap: usize) -> usize {
    (1..).take_while(|&k| k < 63 && xi_degree(k) <= cap).count()
}

/// Monomial in `xi_1, xi_2, ...`; entry `k - 1` is the exponent of `xi_k`.
/// Trailing zeros are trimmed so equal monomials compare equal.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct XiMonomial(Vec<u32>);

impl XiMonomial {
    pub fn one() -> Self {
        XiMonomial(Vec::new())
    }

    pub fn new(mut exps: Vec<u32>) -> Self {
        while exps.last() == Some(&0) {
            exps.pop();
        }
        XiMonomial(exps)
    }

    /// `xi_k^e`; `xi_0 = 1`.
    pub fn xi_pow(k: usize, e: u32) -> Self {
        if k == 0 || e == 0 {
            return Self::one();
        }
        let mut v = vec![0; k];
        v[k - 1] = e;
        XiMonomial(v)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn exponent(&self, k: usize) -> u32 {
        self.0.get(k - 1).copied().unwrap_or(0)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .map(|(i, &e)| e as usize * xi_degree(i + 1))
            .sum()
    }

    pub fn mul(&self, other: &XiMonomial) -> XiMonomial {
        let n = self.0.len().max(other.0.len());
        XiMonomial::new(
            (0..n)
                .map(|i| self.0.get(i).unwrap_or(&0) + other.0.get(i).unwrap_or(&0))
                .collect(),
        )
    }

    pub fn pow(&self, e: u32) -> XiMonomial {
        XiMonomial::new(self.0.iter().map(|x| x * e).collect())
    }
}

impl fmt::Display for XiMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        let mut first = true;
        for (i, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, " ")?;
            }
            first = false;
            if e == 1 {
                write!(f, "xi{}", i + 1)?;
            } else {
                write!(f, "xi{}^{}", i + 1, e)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for XiMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// `psi(xi_k) = sum_{i+j=k} xi_i (x) xi_j^{2^i}` as (left, right) pairs.
pub fn coproduct_xi(k: usize) -> Vec<(XiMonomial, XiMonomial)> {
    (0..=k)
        .map(|i| (XiMonomial::xi_pow(i, 1), XiMonomial::xi_pow(k - i, 1 << i)))
        .collect()
}

/// Coproduct of an arbitrary monomial, extended multiplicatively.
pub fn coproduct(a: &XiMonomial) -> BTreeSet<(XiMonomial, XiMonomial)> {
    let mut acc: BTreeSet<(XiMonomial, XiMonomial)> =
        [(XiMonomial::one(), XiMonomial::one())].into();
    for (i, &e) in a.0.iter().enumerate() {
        for _ in 0..e {
            let mut next = BTreeSet::new();
            for (l, r) in &acc {
                for (l2, r2) in coproduct_xi(i + 1) {
                    let t = (l.mul(&l2), r.mul(&r2));
                    if !next.remove(&t) {
                        next.insert(t);
                    }
                }
            }
            acc = next;
        }
    }
    acc
}

/// An element of `A_* (x) M` as a set of (left, right) monomial pairs.
#[derive(Clone, Default, PartialEq, Eq, Serialize)]
pub struct Tensor(pub BTreeSet<(XiMonomial, Monomial)>);

impl Tensor {
    pub fn zero() -> Self {
        Tensor(BTreeSet::new())
    }

    pub fn term(l: XiMonomial, r: Monomial) -> Self {
        Tensor([(l, r)].into())
    }

    pub fn add_term(&mut self, l: XiMonomial, r: Monomial) {
        let t = (l, r);
        if !self.0.remove(&t) {
            self.0.insert(t);
        }
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        for (l, r) in &other.0 {
            self.add_term(l.clone(), r.clone());
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Product in `A_* (x) M`, dropping terms whose left degree exceeds `bound`.
    pub fn mul(&self, other: &Tensor, alg: &AlgebraSpec, bound: usize) -> Tensor {
        let mut out = Tensor::zero();
        for (l1, r1) in &self.0 {
            let d1 = l1.degree();
            if d1 > bound {
                continue;
            }
            for (l2, r2) in &other.0 {
                if d1 + l2.degree() > bound {
                    continue;
                }
                if let Some(r) = alg.mul_monomials(r1, r2) {
                    out.add_term(l1.mul(l2), r);
                }
            }
        }
        out
    }

    /// Frobenius: `(sum a (x) b)^2 = sum a^2 (x) b^2`.
    pub fn square(&self, alg: &AlgebraSpec, bound: usize) -> Tensor {
        let mut out = Tensor::zero();
        for (l, r) in &self.0 {
            let l2 = l.pow(2);
            if l2.degree() > bound {
                continue;
            }
            if let Some(r2) = alg.mul_monomials(r, r) {
                out.add_term(l2, r2);
            }
        }
        out
    }

    pub fn left_component(&self, l: &XiMonomial) -> Element {
        let mut e = Element::zero();
        for (a, r) in &self.0 {
            if a == l {
                e.add_monomial(r.clone());
            }
        }
        e
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set()
            .entries(self.0.iter().map(|(l, r)| format!("{l} (x) {r:?}")))
            .finish()
    }
}

/// What an algebra generator stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum GenRole {
    /// `xi_k^power`.
    Xi { k: usize, power: u32 },
    /// `sigma xi_k` in THH.
    Sigma(usize),
    /// The polynomial generator `u = sigma xi_1` of THH(HF_2).
    U,
    /// The exterior class of degree `2^{n+1} - 1` in `H_*(z(n)/v_n)`.
    Top(usize),
}

/// A correction to the multiplicative coaction: when `pattern` divides a
/// monomial and the exponent of generator `parity_gen` is odd there, the
/// factor `pattern` coacts by its multiplicative coaction plus `tail`.
#[derive(Clone, Debug, Serialize)]
pub struct ExoticRule {
    pub pattern: Monomial,
    pub parity_gen: usize,
    pub tail: Tensor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum SpaceId {
    DualSteenrod,
    HZ,
    Y(u32),
    Z(u32),
    ZmodVn(u32),
    ThhY(u32),
    ThhHF2,
    TPModel { n: u32, i: i64 },
    TCminusModel { n: u32, i: i64 },
}

impl fmt::Display for SpaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceId::DualSteenrod => write!(f, "a-star"),
            SpaceId::HZ => write!(f, "hz"),
            SpaceId::Y(n) => write!(f, "y{n}"),
            SpaceId::Z(n) => write!(f, "z{n}"),
            SpaceId::ZmodVn(n) => write!(f, "z{n}-mod-v{n}"),
            SpaceId::ThhY(n) => write!(f, "thh-y{n}"),
            SpaceId::ThhHF2 => write!(f, "thh-hf2"),
            SpaceId::TPModel { n, i } => write!(f, "tp-y{n}[{i}]"),
            SpaceId::TCminusModel { n, i } => write!(f, "tcminus-y{n}[{i}]"),
        }
    }
}

impl FromStr for SpaceId {
    type Err = SteenrodError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || SteenrodError::UnknownId(s.to_string());
        let t = s.trim().to_ascii_lowercase();
        let num = |x: &str| x.parse::<u32>().map_err(|_| err());
        let bracket = |x: &str| -> Result<(u32, i64), SteenrodError> {
            let (a, b) = x.split_once('[').ok_or_else(err)?;
            let b = b.strip_suffix(']').ok_or_else(err)?;
            Ok((num(a)?, b.parse::<i64>().map_err(|_| err())?))
        };
        match t.as_str() {
            "a-star" | "astar" | "dual-steenrod" | "a" => return Ok(SpaceId::DualSteenrod),
            "hz" => return Ok(SpaceId::HZ),
            "thh-hf2" | "thhhf2" | "thh-f2" => return Ok(SpaceId::ThhHF2),
            _ => {}
        }
        if let Some(r) = t.strip_prefix("tp-y") {
            let (n, i) = bracket(r)?;
            return Ok(SpaceId::TPModel { n, i });
        }
        if let Some(r) = t.strip_prefix("tcminus-y") {
            let (n, i) = bracket(r)?;
            return Ok(SpaceId::TCminusModel { n, i });
        }
        if let Some(r) = t.strip_prefix("thh-y") {
            return Ok(SpaceId::ThhY(num(r)?));
        }
        if let Some(r) = t.strip_prefix("zmodv") {
            return Ok(SpaceId::ZmodVn(num(r)?));
        }
        if let Some(r) = t.strip_prefix('z') {
            if let Some((a, b)) = r.split_once("-mod-v") {
                let n = num(a)?;
                return if num(b)? == n { Ok(SpaceId::ZmodVn(n)) } else { Err(err()) };
            }
            return Ok(SpaceId::Z(num(r)?));
        }
        if let Some(r) = t.strip_prefix('y') {
            return Ok(SpaceId::Y(num(r)?));
        }
        Err(err())
    }
}

/// A comodule algebra over `A_*`, truncated at an internal degree cap.
#[derive(Clone, Debug)]
pub struct ComoduleSpec {
    pub id: SpaceId,
    pub cap: usize,
    pub algebra: AlgebraSpec,
    pub roles: Vec<GenRole>,
    pub gen_coaction: Vec<Tensor>,
    pub exotic: Vec<ExoticRule>,
}

/// A catalog entry: an algebra comodule, or a truncated spectral sequence
/// page seen as a column-graded comodule.
#[derive(Clone, Debug)]
pub enum Comodule {
    Algebra(ComoduleSpec),
    Page(crate::sseq::PageModel),
}

impl Comodule {
    pub fn algebra(self) -> Option<ComoduleSpec> {
        match self {
            Comodule::Algebra(c) => Some(c),
            Comodule::Page(_) => None,
        }
    }
}

fn xi_gen(k: usize, power: u32) -> (GeneratorSpec, GenRole) {
    let name = if power == 1 {
        format!("xi{k}")
    } else {
        format!("xi{k}^{power}")
    };
    (
        GeneratorSpec::poly(name, power as usize * xi_degree(k)),
        GenRole::Xi { k, power },
    )
}

impl ComoduleSpec {
    fn from_roles(
        id: SpaceId,
        cap: usize,
        gens: Vec<(GeneratorSpec, GenRole)>,
    ) -> Result<Self, SteenrodError> {
        let (gs, roles): (Vec<_>, Vec<_>) = gens.into_iter().unzip();
        let mut c = ComoduleSpec {
            id,
            cap,
            algebra: AlgebraSpec::new(gs),
            roles,
            gen_coaction: Vec::new(),
            exotic: Vec::new(),
        };
        let mut coactions = Vec::new();
        for role in c.roles.clone() {
            let t = match role {
                GenRole::Xi { k, power } => {
                    let mut t = Tensor::zero();
                    for (l, r) in coproduct_xi(k) {
                        t.add_term(l.pow(power), c.embed(&r.pow(power))?);
                    }
                    t
                }
                GenRole::Sigma(_) | GenRole::U => {
                    Tensor::term(XiMonomial::one(), c.algebra.gen(c.role_index(role).unwrap()))
                }
                GenRole::Top(n) => {
                    let mut t = Tensor::term(
                        XiMonomial::one(),
                        c.algebra.gen(c.role_index(role).unwrap()),
                    );
                    for j in 1..=n + 1 {
                        t.add_term(
                            XiMonomial::xi_pow(j, 1),
                            c.embed(&XiMonomial::xi_pow(n + 1 - j, 1 << j))?,
                        );
                    }
                    t
                }
            };
            coactions.push(t);
        }
        c.gen_coaction = coactions;
        Ok(c)
    }

    pub fn role_index(&self, role: GenRole) -> Option<usize> {
        self.roles.iter().position(|&r| r == role)
    }

    /// Writes a monomial in the `xi_k` in terms of this algebra's generators.
    pub fn embed(&self, a: &XiMonomial) -> Result<Monomial, SteenrodError> {
        let mut m = self.algebra.one();
        for (i, &e) in a.exponents().iter().enumerate() {
            if e == 0 {
                continue;
            }
            let k = i + 1;
            let hit = self.roles.iter().enumerate().find_map(|(g, r)| match *r {
                GenRole::Xi { k: kk, power } if kk == k && e % power == 0 => Some((g, e / power)),
                _ => None,
            });
            let (g, ee) = hit.ok_or_else(|| SteenrodError::NotSubcomodule(a.to_string()))?;
            m.0[g] = ee;
        }
        if self.algebra.is_nonzero_monomial(&m) {
            Ok(m)
        } else {
            Err(SteenrodError::NotSubcomodule(a.to_string()))
        }
    }

    pub fn basis(&self) -> Result<GradedBasis, SteenrodError> {
        Ok(enumerate_basis(&self.algebra, self.cap, 2_000_000)?)
    }

    fn plain_coaction(&self, m: &Monomial, bound: usize) -> Tensor {
        let mut acc = Tensor::term(XiMonomial::one(), self.algebra.one());
        for (g, &e) in m.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let mut base = self.gen_coaction[g].clone();
            let mut e = e;
            loop {
                if e & 1 == 1 {
                    acc = acc.mul(&base, &self.algebra, bound);
                }
                e >>= 1;
                if e == 0 {
                    break;
                }
                base = base.square(&self.algebra, bound);
            }
        }
        acc
    }

    /// Full coaction of a basis monomial, keeping only left factors of
    /// degree at most `bound`.
    pub fn coaction_bounded(&self, m: &Monomial, bound: usize) -> Tensor {
        let mut rest = m.clone();
        let mut factors = Vec::new();
        for rule in &self.exotic {
            if rule.pattern.divides(&rest) && m.0[rule.parity_gen] % 2 == 1 {
                rest = rule.pattern.quotient_of(&rest);
                let mut f = self.plain_coaction(&rule.pattern, bound);
                for (l, r) in &rule.tail.0 {
                    if l.degree() <= bound {
                        f.add_term(l.clone(), r.clone());
                    }
                }
                factors.push(f);
            }
        }
        let mut acc = self.plain_coaction(&rest, bound);
        for f in &factors {
            acc = acc.mul(f, &self.algebra, bound);
        }
        acc
    }

    pub fn coaction(&self, m: &Monomial) -> Tensor {
        self.coaction_bounded(m, usize::MAX)
    }

    pub fn coaction_element(&self, x: &Element) -> Tensor {
        let mut t = Tensor::zero();
        for m in x.terms() {
            t.add_assign(&self.coaction(m));
        }
        t
    }

    /// Checks that every generator's coaction is counital and
    /// that every term is homogeneous of the generator's degree.
    pub fn validate(&self) -> Result<(), SteenrodError> {
        for (g, t) in self.gen_coaction.iter().enumerate() {
            let d = self.algebra.gens[g].degree;
            if t.left_component(&XiMonomial::one()) != Element::from_monomial(self.algebra.gen(g)) {
                return Err(SteenrodError::Unsupported(format!(
                    "coaction of {} is not counital",
                    self.algebra.gens[g].name
                )));
            }
            for (l, r) in &t.0 {
                if l.degree() + self.algebra.degree(r) != d {
                    return Err(SteenrodError::Unsupported(format!(
                        "coaction of {} is not homogeneous",
                        self.algebra.gens[g].name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn has_exotic_rules(&self) -> bool {
        !self.exotic.is_empty()
    }

    pub fn to_json(&self) -> Value {
        let gens: Vec<Value> = self
            .algebra
            .gens
            .iter()
            .zip(&self.gen_coaction)
            .map(|(g, t)| {
                let terms: Vec<String> = t
                    .0
                    .iter()
                    .map(|(l, r)| format!("{l} (x) {}", self.algebra.format_monomial(r)))
                    .collect();
                json!({
                    "name": g.name,
                    "degree": g.degree,
                    "kind": g.kind,
                    "coaction": terms,
                })
            })
            .collect();
        let exotic: Vec<Value> = self
            .exotic
            .iter()
            .map(|r| {
                json!({
                    "pattern": self.algebra.format_monomial(&r.pattern),
                    "odd_exponent_of": self.algebra.gens[r.parity_gen].name,
                    "tail": r.tail.0.iter().map(|(l, m)| format!("{l} (x) {}", self.algebra.format_monomial(m))).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({
            "id": self.id.to_string(),
            "cap": self.cap,
            "generators": gens,
            "exotic_rules": exotic,
        })
    }
}

pub fn catalog(id: SpaceId, cap: usize) -> Result<Comodule, SteenrodError> {
    let k_max = xi_count(cap);
    let check_n = |n: u32| {
        if n == 0 || n > 8 {
            Err(SteenrodError::Unsupported(format!("n = {n} (expected 1..=8)")))
        } else {
            Ok(n as usize)
        }
    };
    let spec = match id {
        SpaceId::DualSteenrod => {
            ComoduleSpec::from_roles(id, cap, (1..=k_max).map(|k| xi_gen(k, 1)).collect())?
        }
        SpaceId::HZ => {
            let mut g = vec![xi_gen(1, 2)];
            g.extend((2..=k_max).map(|k| xi_gen(k, 1)));
            ComoduleSpec::from_roles(id, cap, g)?
        }
        SpaceId::Y(n) => {
            let n = check_n(n)?;
            ComoduleSpec::from_roles(id, cap, (1..=n).map(|k| xi_gen(k, 1)).collect())?
        }
        SpaceId::Z(n) => {
            let n = check_n(n)?;
            let mut g = vec![xi_gen(1, 2)];
            g.extend((2..=n).map(|k| xi_gen(k, 1)));
            ComoduleSpec::from_roles(id, cap, g)?
        }
        SpaceId::ZmodVn(n) => {
            let n = check_n(n)?;
            let mut g = vec![xi_gen(1, 2)];
            g.extend((2..=n).map(|k| xi_gen(k, 1)));
            g.push((
                GeneratorSpec::ext(format!("xi{}", n + 1), xi_degree(n + 1)),
                GenRole::Top(n),
            ));
            ComoduleSpec::from_roles(id, cap, g)?
        }
        SpaceId::ThhY(n) => thh_y_spec(check_n(n)? as u32, cap)?,
        SpaceId::ThhHF2 => {
            let mut g: Vec<_> = (1..=k_max).map(|k| xi_gen(k, 1)).collect();
            g.push((GeneratorSpec::poly("u", 2), GenRole::U));
            ComoduleSpec::from_roles(id, cap, g)?
        }
        SpaceId::TPModel { n, i } => {
            return crate::sseq::PageModel::tp(check_n(n)? as u32, i, cap)
                .map(Comodule::Page)
                .map_err(|e| SteenrodError::Page(Box::new(e)))
        }
        SpaceId::TCminusModel { n, i } => {
            return crate::sseq::PageModel::tcminus(check_n(n)? as u32, i, cap)
                .map(Comodule::Page)
                .map_err(|e| SteenrodError::Page(Box::new(e)))
        }
    };
    spec.validate()?;
    Ok(Comodule::Algebra(spec))
}

/// Shorthand for algebra catalog entries.
pub fn algebra_catalog(id: SpaceId, cap: usize) -> Result<ComoduleSpec, SteenrodError> {
    catalog(id, cap)?
        .algebra()
        .ok_or_else(|| SteenrodError::Unsupported(format!("{id} is not an algebra comodule")))
}

/// `P(xi_1..xi_n) (x) E(sigma xi_1..sigma xi_n)`. Each pair `xi_k sigma xi_k`
/// sitting in an odd power of `xi_k` picks up the tail of `psi(xi_{k+1})`.
/// `n = 0` gives the ground field.
pub fn thh_y_spec(n: u32, cap: usize) -> Result<ComoduleSpec, SteenrodError> {
    let n = n as usize;
    let mut g: Vec<_> = (1..=n).map(|k| xi_gen(k, 1)).collect();
    for k in 1..=n {
        g.push((GeneratorSpec::ext(format!("sxi{k}"), 1 << k), GenRole::Sigma(k)));
    }
    let mut c = ComoduleSpec::from_roles(SpaceId::ThhY(n as u32), cap, g)?;
    let mut rules = Vec::new();
    for k in 1..=n {
        let xk = c.role_index(GenRole::Xi { k, power: 1 }).unwrap();
        let sk = c.role_index(GenRole::Sigma(k)).unwrap();
        let mut pattern = c.algebra.one();
        pattern.0[xk] = 1;
        pattern.0[sk] = 1;
        let mut tail = Tensor::zero();
        for a in 1..=k + 1 {
            tail.add_term(
                XiMonomial::xi_pow(a, 1),
                c.embed(&XiMonomial::xi_pow(k + 1 - a, 1 << a))?,
            );
        }
        rules.push(ExoticRule {
            pattern,
            parity_gen: xk,
            tail,
        });
    }
    c.exotic = rules;
    Ok(c)
}

/// `Q_m(x)`: right factors of the terms of the coaction of `x` whose left
/// factor is exactly `xi_{m+1}`.
pub fn q_action(c: &ComoduleSpec, m: u32, x: &Element) -> Element {
    let target = XiMonomial::xi_pow(m as usize + 1, 1);
    let bound = q_degree(m);
    let mut out = Element::zero();
    for mono in x.terms() {
        out.add_assign(&c.coaction_bounded(mono, bound).left_component(&target));
    }
    out
}

pub fn q_action_monomial(c: &ComoduleSpec, m: u32, mono: &Monomial) -> Element {
    let target = XiMonomial::xi_pow(m as usize + 1, 1);
    c.coaction_bounded(mono, q_degree(m)).left_component(&target)
}

/// `Q_m` as the derivation determined by its values on generators. Only
/// valid for comodules without exotic rules.
pub fn q_derivation(c: &ComoduleSpec, m: u32) -> DerivationSpec {
    let target = XiMonomial::xi_pow(m as usize + 1, 1);
    DerivationSpec {
        images: c
            .gen_coaction
            .iter()
            .map(|t| t.left_component(&target))
            .collect(),
        shift: -(q_degree(m) as i64),
    }
}

/// Matrix of `Q_m` from degree `d` to degree `d - (2^{m+1} - 1)`.
pub fn q_matrix(c: &ComoduleSpec, basis: &GradedBasis, m: u32, d: usize) -> Result<BitMatrix, SteenrodError> {
    Ok(crate::algebra::linear_map_matrix(basis, d, -(q_degree(m) as i64), |mono| {
        q_action_monomial(c, m, mono)
    })?)
}

/// The suspension `sigma` on `THH_*(y(n))` or `THH_*(HF_2)` as a derivation
/// of degree +1.
pub fn sigma_derivation(c: &ComoduleSpec) -> Result<DerivationSpec, SteenrodError> {
    let mut images = Vec::new();
    for (g, role) in c.roles.iter().enumerate() {
        let img = match *role {
            GenRole::Xi { k, power: 1 } => match c.id {
                SpaceId::ThhY(_) => {
                    Element::from_monomial(c.algebra.gen(c.role_index(GenRole::Sigma(k)).unwrap()))
                }
                SpaceId::ThhHF2 => Element::from_monomial(Monomial::power(
                    c.algebra.len(),
                    c.role_index(GenRole::U).unwrap(),
                    1 << (k - 1),
                )),
                _ => {
                    return Err(SteenrodError::Unsupported(format!(
                        "sigma on {} (generator {})",
                        c.id, c.algebra.gens[g].name
                    )))
                }
            },
            GenRole::Sigma(_) | GenRole::U => Element::zero(),
            _ => {
                return Err(SteenrodError::Unsupported(format!("sigma on {}", c.id)));
            }
        };
        images.push(img);
    }
    Ok(DerivationSpec { images, shift: 1 })
}

pub fn sigma(c: &ComoduleSpec, x: &Element) -> Result<Element, SteenrodError> {
    let der = sigma_derivation(c)?;
    Ok(crate::algebra::apply_derivation(&c.algebra, &der, x))
}

pub fn sigma_matrix(c: &ComoduleSpec, basis: &GradedBasis, d: usize) -> Result<BitMatrix, SteenrodError> {
    let der = sigma_derivation(c)?;
    Ok(crate::algebra::linear_map_matrix(basis, d, 1, |m| {
        apply_derivation_monomial(&c.algebra, &der, m)
    })?)
}

/// The comparison map `THH_*(y(n)) -> THH_*(HF_2)`.
///
/// A source monomial splits into factors per `k`: `xi_k^a` with `a` even or
/// without `sigma xi_k`, maps to `xi_k^a u^{2^{k-1} [sigma xi_k present]}`,
/// and `xi_k^a sigma xi_k` with `a` odd maps to
/// `xi_k^{a-1} (xi_k u^{2^{k-1}} + xi_{k+1})`. The image is the product.
#[derive(Clone, Debug)]
pub struct PhiMap {
    pub n: usize,
    pub source: ComoduleSpec,
    pub target: ComoduleSpec,
}

impl PhiMap {
    pub fn new(n: u32, cap: usize) -> Result<Self, SteenrodError> {
        let source = algebra_catalog(SpaceId::ThhY(n), cap)?;
        // The target needs xi_{n+1} even when the cap is small.
        let target_cap = cap.max(xi_degree(n as usize + 1));
        let target = algebra_catalog(SpaceId::ThhHF2, target_cap)?;
        Ok(PhiMap {
            n: n as usize,
            source,
            target,
        })
    }

    pub fn apply_monomial(&self, m: &Monomial) -> Element {
        let t = &self.target;
        let u = t.role_index(GenRole::U).unwrap();
        let mut acc = Element::from_monomial(t.algebra.one());
        for k in 1..=self.n {
            let a = m.0[self.source.role_index(GenRole::Xi { k, power: 1 }).unwrap()];
            let s = m.0[self.source.role_index(GenRole::Sigma(k)).unwrap()];
            let xk = t.role_index(GenRole::Xi { k, power: 1 }).unwrap();
            let factor = if s == 1 && a % 2 == 1 {
                let mut f1 = Monomial::power(t.algebra.len(), xk, a);
                f1.0[u] = 1 << (k - 1);
                let mut f2 = Monomial::power(t.algebra.len(), xk, a - 1);
                f2.0[t.role_index(GenRole::Xi { k: k + 1, power: 1 }).unwrap()] += 1;
                let mut e = Element::from_monomial(f1);
                e.add_monomial(f2);
                e
            } else {
                let mut f = Monomial::power(t.algebra.len(), xk, a);
                f.0[u] = s << (k - 1);
                Element::from_monomial(f)
            };
            acc = t.algebra.multiply(&acc, &factor);
        }
        acc
    }

    pub fn apply(&self, x: &Element) -> Element {
        let mut out = Element::zero();
        for m in x.terms() {
            out.add_assign(&self.apply_monomial(m));
        }
        out
    }

    pub fn matrix(
        &self,
        sb: &GradedBasis,
        tb: &GradedBasis,
        d: usize,
    ) -> Result<BitMatrix, SteenrodError> {
        let cols = sb
            .basis(d)
            .iter()
            .map(|m| tb.to_vector(d, &self.apply_monomial(m)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BitMatrix::from_columns(tb.basis(d).len(), &cols))
    }
}

/// The ideal `J_n` in `THH_*(HF_2)`, degreewise up to `max_degree`.
#[derive(Clone, Debug)]
pub struct JnIdeal {
    pub n: usize,
    pub max_degree: usize,
    /// Generators grouped by degree.
    pub generators: Vec<Vec<Monomial>>,
    pub spans: Vec<SubspaceBasis>,
}

impl JnIdeal {
    pub fn dims(&self) -> Vec<u64> {
        self.spans.iter().map(|s| s.dim() as u64).collect()
    }

    pub fn contains(&self, tb: &GradedBasis, d: usize, x: &Element) -> Result<bool, SteenrodError> {
        Ok(self.spans[d].contains(&tb.to_vector(d, x)?))
    }
}

/// Generators: monomials `b u^k` with `k <= n` and every `xi` exponent even
/// (so `sigma(b u^k) = 0`) that are outside the span of the image of `phi_n`.
pub fn jn_span(phi: &PhiMap, max_degree: usize) -> Result<JnIdeal, SteenrodError> {
    let mut src = phi.source.clone();
    src.cap = max_degree;
    let sb = src.basis()?;
    let mut tgt = phi.target.clone();
    tgt.cap = max_degree;
    let tb = tgt.basis()?;
    let u = phi.target.role_index(GenRole::U).unwrap();
    let mut generators = Vec::new();
    for d in 0..=max_degree {
        let image = SubspaceBasis::from_vectors(
            tb.basis(d).len(),
            sb.basis(d)
                .iter()
                .map(|m| tb.to_vector(d, &phi.apply_monomial(m)))
                .collect::<Result<Vec<_>, _>>()?,
        );
        let gens: Vec<Monomial> = tb
            .basis(d)
            .iter()
            .enumerate()
            .filter(|(_, m)| {
                m.0[u] as usize <= phi.n
                    && m.0.iter().enumerate().all(|(g, &e)| g == u || e % 2 == 0)
            })
            .filter(|(i, _)| !image.contains(&BitVec::unit(tb.basis(d).len(), *i)))
            .map(|(_, m)| m.clone())
            .collect();
        generators.push(gens);
    }
    let mut spans = Vec::new();
    for d in 0..=max_degree {
        let mut span = SubspaceBasis::zero(tb.basis(d).len());
        for (dg, gens) in generators.iter().enumerate().take(d + 1) {
            for g in gens {
                for b in tb.basis(d - dg) {
                    if let Some(p) = tgt.algebra.mul_monomials(b, g) {
                        span.insert(BitVec::unit(tb.basis(d).len(), tb.position(&p).unwrap()));
                    }
                }
            }
        }
        spans.push(span);
    }
    Ok(JnIdeal {
        n: phi.n,
        max_degree,
        generators,
        spans,
    })
}

/// Primitives `{x : coaction(x) = 1 (x) x}` in degree `d`.
pub fn comodule_primitives(
    c: &ComoduleSpec,
    basis: &GradedBasis,
    d: usize,
) -> Result<SubspaceBasis, SteenrodError> {
    let src = basis.basis(d);
    let mut index: HashMap<(XiMonomial, Monomial), usize> = HashMap::new();
    let mut cols: Vec<Vec<usize>> = Vec::new();
    for m in src {
        let t = c.coaction(m);
        let mut col = Vec::new();
        for (l, r) in t.0 {
            if l.is_one() {
                continue;
            }
            let n = index.len();
            col.push(*index.entry((l, r)).or_insert(n));
        }
        cols.push(col);
    }
    let rows = index.len();
    let cols: Vec<BitVec> = cols
        .into_iter()
        .map(|c| BitVec::from_indices(rows, c))
        .collect();
    Ok(kernel_basis(&BitMatrix::from_columns(rows, &cols)))
}

/// Degrees (with dimensions) in which primitives occur, over `1..=max`.
pub fn primitive_degrees(c: &ComoduleSpec, basis: &GradedBasis, max: usize) -> Result<BTreeMap<usize, usize>, SteenrodError> {
    let mut out = BTreeMap::new();
    for d in 1..=max.min(basis.max_degree) {
        let p = comodule_primitives(c, basis, d)?;
        if p.dim() > 0 {
            out.insert(d, p.dim());
        }
    }
    Ok(out)
}

/// `(psi (x) 1) coaction(x) == (1 (x) coaction) coaction(x)` on a monomial.
pub fn is_coassociative_on(c: &ComoduleSpec, m: &Monomial) -> bool {
    let nu = c.coaction(m);
    let mut lhs: BTreeSet<(XiMonomial, XiMonomial, Monomial)> = BTreeSet::new();
    let toggle = |set: &mut BTreeSet<_>, t| {
        if !set.remove(&t) {
            set.insert(t);
        }
    };
    for (a, r) in &nu.0 {
        for (a1, a2) in coproduct(a) {
            toggle(&mut lhs, (a1, a2, r.clone()));
        }
    }
    let mut rhs = BTreeSet::new();
    for (a, r) in &nu.0 {
        for (b, r2) in c.coaction(r).0 {
            toggle(&mut rhs, (a.clone(), b, r2));
        }
    }
    lhs == rhs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mono(c: &ComoduleSpec, parts: &[(&str, u32)]) -> Monomial {
        let mut m = c.algebra.one();
        for (name, e) in parts {
            m.0[c.algebra.index_of(name).unwrap()] = *e;
        }
        m
    }

    #[test]
    fn coproduct_of_xi2() {
        let c = coproduct_xi(2);
        assert_eq!(c.len(), 3);
        assert!(c.contains(&(XiMonomial::xi_pow(1, 1), XiMonomial::xi_pow(1, 2))));
        assert!(c.contains(&(XiMonomial::xi_pow(2, 1), XiMonomial::one())));
        assert!(c.contains(&(XiMonomial::one(), XiMonomial::xi_pow(2, 1))));
    }

    #[test]
    fn coproduct_is_coassociative() {
        for k in 1..=5 {
            let a = XiMonomial::xi_pow(k, 1);
            let mut lhs = BTreeSet::new();
            let mut rhs = BTreeSet::new();
            for (l, r) in coproduct(&a) {
                for (l1, l2) in coproduct(&l) {
                    let t = (l1, l2, r.clone());
                    if !lhs.remove(&t) {
                        lhs.insert(t);
                    }
                }
                for (r1, r2) in coproduct(&r) {
                    let t = (l.clone(), r1, r2);
                    if !rhs.remove(&t) {
                        rhs.insert(t);
                    }
                }
            }
            assert_eq!(lhs, rhs, "k = {k}");
        }
    }

    #[test]
    fn space_ids_round_trip() {
        for id in [
            SpaceId::DualSteenrod,
            SpaceId::HZ,
            SpaceId::Y(2),
            SpaceId::Z(3),
            SpaceId::ZmodVn(1),
            SpaceId::ThhY(2),
            SpaceId::ThhHF2,
            SpaceId::TPModel { n: 1, i: -2 },
            SpaceId::TCminusModel { n: 2, i: 3 },
        ] {
            assert_eq!(id.to_string().parse::<SpaceId>().unwrap(), id);
        }
        assert!("w7".parse::<SpaceId>().is_err());
    }

    #[test]
    fn q_actions_on_generators() {
        let a = algebra_catalog(SpaceId::DualSteenrod, 32).unwrap();
        let xi = |k| Element::from_monomial(a.embed(&XiMonomial::xi_pow(k, 1)).unwrap());
        let xi_sq = |k| Element::from_monomial(a.embed(&XiMonomial::xi_pow(k, 2)).unwrap());
        assert_eq!(q_action(&a, 0, &xi(2)), xi_sq(1));
        assert_eq!(q_action(&a, 0, &xi(1)), Element::from_monomial(a.algebra.one()));
        assert_eq!(
            q_action(&a, 1, &xi(3)),
            Element::from_monomial(a.embed(&XiMonomial::xi_pow(1, 4)).unwrap())
        );
        assert!(q_action(&a, 2, &xi(2)).is_zero());
    }

    #[test]
    fn exotic_q1_example() {
        let c = algebra_catalog(SpaceId::ThhY(1), 16).unwrap();
        let m = mono(&c, &[("xi1", 3), ("sxi1", 1)]);
        let q = q_action(&c, 1, &Element::from_monomial(m));
        assert_eq!(q, Element::from_monomial(mono(&c, &[("xi1", 2)])));
        // Without the odd exponent the pattern does not apply.
        let m = mono(&c, &[("xi1", 2), ("sxi1", 1)]);
        assert!(q_action(&c, 1, &Element::from_monomial(m)).is_zero());
    }

    #[test]
    fn catalog_coactions_are_coassociative() {
        for id in [
            SpaceId::DualSteenrod,
            SpaceId::HZ,
            SpaceId::Y(2),
            SpaceId::Z(2),
            SpaceId::ZmodVn(1),
            SpaceId::ZmodVn(2),
            SpaceId::ThhY(1),
            SpaceId::ThhY(2),
            SpaceId::ThhHF2,
        ] {
            let c = algebra_catalog(id, 14).unwrap();
            let b = c.basis().unwrap();
            for d in 0..=14 {
                for m in b.basis(d) {
                    assert!(is_coassociative_on(&c, m), "{id} at {}", c.algebra.format_monomial(m));
                }
            }
        }
    }

    #[test]
    fn phi_examples() {
        let phi = PhiMap::new(1, 16).unwrap();
        let s = &phi.source;
        let t = &phi.target;
        let tm = |parts: &[(&str, u32)]| {
            let mut m = t.algebra.one();
            for (name, e) in parts {
                m.0[t.algebra.index_of(name).unwrap()] = *e;
            }
            m
        };
        let img = phi.apply_monomial(&mono(s, &[("xi1", 1), ("sxi1", 1)]));
        let mut expect = Element::from_monomial(tm(&[("xi1", 1), ("u", 1)]));
        expect.add_monomial(tm(&[("xi2", 1)]));
        assert_eq!(img, expect);
        for k in 0..4 {
            let img = phi.apply_monomial(&mono(s, &[("xi1", 2 * k), ("sxi1", 1)]));
            assert_eq!(img, Element::from_monomial(tm(&[("xi1", 2 * k), ("u", 1)])));
        }
        let img = phi.apply_monomial(&mono(s, &[("xi1", 5)]));
        assert_eq!(img, Element::from_monomial(tm(&[("xi1", 5)])));
    }

    #[test]
    fn phi_commutes_with_sigma_and_coaction() {
        for n in 1..=2 {
            let phi = PhiMap::new(n, 16).unwrap();
            let sb = phi.source.basis().unwrap();
            for d in 0..=15 {
                for m in sb.basis(d) {
                    let x = Element::from_monomial(m.clone());
                    let a = sigma(&phi.target, &phi.apply(&x)).unwrap();
                    let b = phi.apply(&sigma(&phi.source, &x).unwrap());
                    assert_eq!(a, b);
                    let mut lhs = Tensor::zero();
                    for (l, r) in phi.source.coaction(m).0 {
                        for r2 in phi.apply_monomial(&r).terms() {
                            lhs.add_term(l.clone(), r2.clone());
                        }
                    }
                    let rhs = phi.target.coaction_element(&phi.apply(&x));
                    assert_eq!(lhs, rhs, "n = {n}, {}", phi.source.algebra.format_monomial(m));
                }
            }
        }
    }

    #[test]
    fn j1_starts_in_degree_six() {
        let phi = PhiMap::new(1, 12).unwrap();
        let j = jn_span(&phi, 12).unwrap();
        let dims = j.dims();
        assert_eq!(&dims[..6], &[0, 0, 0, 0, 0, 0]);
        assert_eq!(dims[6], 1);
        let t = &phi.target;
        assert_eq!(j.generators[6], vec![t.embed(&XiMonomial::xi_pow(2, 2)).unwrap()]);
        let mut tgt = t.clone();
        tgt.cap = 12;
        let tb = tgt.basis().unwrap();
        let x = XiMonomial::new(vec![1, 2]);
        assert!(j.contains(&tb, 7, &Element::from_monomial(t.embed(&x).unwrap())).unwrap());
    }
}
