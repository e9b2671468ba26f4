//! Graded commutative F_2-algebras on finitely many generators, their
//! monomial bases, derivations and Poincaré series.

use crate::f2linalg::{BitMatrix, BitVec};
use serde::Serialize;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("generator {0} has degree 0")]
    ZeroDegreeGenerator(String),
    #[error("degree {degree} has {count} monomials, above the bound {bound}")]
    CapTooLarge {
        degree: usize,
        count: usize,
        bound: usize,
    },
    #[error("degree {degree} is outside the enumerated window 0..={max}")]
    OutOfCap { degree: i64, max: usize },
    #[error("monomial {0} is not a basis element")]
    NotInBasis(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum GenKind {
    Polynomial,
    Exterior,
    /// `x^h = 0`.
    Truncated(u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct GeneratorSpec {
    pub name: String,
    pub degree: usize,
    pub kind: GenKind,
}

impl GeneratorSpec {
    pub fn poly(name: impl Into<String>, degree: usize) -> Self {
        GeneratorSpec {
            name: name.into(),
            degree,
            kind: GenKind::Polynomial,
        }
    }

    pub fn ext(name: impl Into<String>, degree: usize) -> Self {
        GeneratorSpec {
            name: name.into(),
            degree,
            kind: GenKind::Exterior,
        }
    }

    fn max_exponent(&self) -> Option<u32> {
        match self.kind {
            GenKind::Polynomial => None,
            GenKind::Exterior => Some(1),
            GenKind::Truncated(h) => Some(h.saturating_sub(1)),
        }
    }
}

/// Exponent vector indexed like the generators of its algebra.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn generator(n: usize, i: usize) -> Self {
        Self::power(n, i, 1)
    }

    pub fn power(n: usize, i: usize, e: u32) -> Self {
        let mut m = Self::one(n);
        m.0[i] = e;
        m
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `other / self`, assuming divisibility.
    pub fn quotient_of(&self, other: &Monomial) -> Monomial {
        Monomial(other.0.iter().zip(&self.0).map(|(b, a)| b - a).collect())
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// A sum of distinct monomials.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Element(pub BTreeSet<Monomial>);

impl Element {
    pub fn zero() -> Self {
        Element(BTreeSet::new())
    }

    pub fn from_monomial(m: Monomial) -> Self {
        let mut e = Self::zero();
        e.add_monomial(m);
        e
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add_monomial(&mut self, m: Monomial) {
        if !self.0.remove(&m) {
            self.0.insert(m);
        }
    }

    pub fn add_assign(&mut self, other: &Element) {
        for m in &other.0 {
            self.add_monomial(m.clone());
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = &Monomial> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct AlgebraSpec {
    pub gens: Vec<GeneratorSpec>,
}

impl AlgebraSpec {
    pub fn new(gens: Vec<GeneratorSpec>) -> Self {
        AlgebraSpec { gens }
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn one(&self) -> Monomial {
        Monomial::one(self.gens.len())
    }

    pub fn gen(&self, i: usize) -> Monomial {
        Monomial::generator(self.gens.len(), i)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.gens.iter().position(|g| g.name == name)
    }

    pub fn degree(&self, m: &Monomial) -> usize {
        m.0.iter()
            .zip(&self.gens)
            .map(|(&e, g)| e as usize * g.degree)
            .sum()
    }

    pub fn element_degree(&self, x: &Element) -> Option<usize> {
        let mut it = x.terms().map(|m| self.degree(m));
        let d = it.next()?;
        it.all(|e| e == d).then_some(d)
    }

    pub fn is_nonzero_monomial(&self, m: &Monomial) -> bool {
        m.0.len() == self.gens.len()
            && m
                .0
                .iter()
                .zip(&self.gens)
                .all(|(&e, g)| g.max_exponent().is_none_or(|h| e <= h))
    }

    pub fn mul_monomials(&self, a: &Monomial, b: &Monomial) -> Option<Monomial> {
        let m = Monomial(a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect());
        self.is_nonzero_monomial(&m).then_some(m)
    }

    pub fn multiply(&self, x: &Element, y: &Element) -> Element {
        let mut out = Element::zero();
        for a in x.terms() {
            for b in y.terms() {
                if let Some(m) = self.mul_monomials(a, b) {
                    out.add_monomial(m);
                }
            }
        }
        out
    }

    /// Product with terms above `cap` dropped; the flag reports whether any were.
    pub fn multiply_capped(&self, x: &Element, y: &Element, cap: usize) -> (Element, bool) {
        let full = self.multiply(x, y);
        let mut dropped = false;
        let kept = full
            .0
            .into_iter()
            .filter(|m| {
                let keep = self.degree(m) <= cap;
                dropped |= !keep;
                keep
            })
            .collect();
        (Element(kept), dropped)
    }

    pub fn format_monomial(&self, m: &Monomial) -> String {
        if m.is_one() {
            return "1".to_string();
        }
        let parts: Vec<String> = m
            .0
            .iter()
            .zip(&self.gens)
            .filter(|(&e, _)| e > 0)
            .map(|(&e, g)| {
                if e == 1 {
                    g.name.clone()
                } else {
                    format!("{}^{}", g.name, e)
                }
            })
            .collect();
        parts.join(" ")
    }

    pub fn format_element(&self, x: &Element) -> String {
        if x.is_zero() {
            return "0".to_string();
        }
        x.terms()
            .map(|m| self.format_monomial(m))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// Monomial basis of an algebra in degrees `0..=max_degree`. Within a degree,
/// monomials are ordered by exponent vector, largest first.
#[derive(Clone, Debug)]
pub struct GradedBasis {
    pub spec: AlgebraSpec,
    pub max_degree: usize,
    by_degree: Vec<Vec<Monomial>>,
    index: HashMap<Monomial, usize>,
}

impl GradedBasis {
    pub fn basis(&self, d: usize) -> &[Monomial] {
        self.by_degree.get(d).map_or(&[], |v| v.as_slice())
    }

    pub fn dim(&self, d: i64) -> usize {
        if d < 0 {
            0
        } else {
            self.basis(d as usize).len()
        }
    }

    pub fn dims(&self) -> Vec<u64> {
        self.by_degree.iter().map(|v| v.len() as u64).collect()
    }

    pub fn position(&self, m: &Monomial) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn to_vector(&self, d: usize, x: &Element) -> Result<BitVec, AlgebraError> {
        let mut v = BitVec::zeros(self.basis(d).len());
        for m in x.terms() {
            if self.spec.degree(m) != d {
                return Err(AlgebraError::Invalid(format!(
                    "term {} is not in degree {d}",
                    self.spec.format_monomial(m)
                )));
            }
            let i = self
                .position(m)
                .ok_or_else(|| AlgebraError::NotInBasis(self.spec.format_monomial(m)))?;
            v.toggle(i);
        }
        Ok(v)
    }

    pub fn to_element(&self, d: usize, v: &BitVec) -> Element {
        Element(v.ones().map(|i| self.basis(d)[i].clone()).collect())
    }
}

pub fn enumerate_basis(
    spec: &AlgebraSpec,
    max_degree: usize,
    size_bound: usize,
) -> Result<GradedBasis, AlgebraError> {
    if let Some(g) = spec.gens.iter().find(|g| g.degree == 0) {
        return Err(AlgebraError::ZeroDegreeGenerator(g.name.clone()));
    }
    let mut by_degree: Vec<Vec<Monomial>> = vec![Vec::new(); max_degree + 1];
    let mut exps = vec![0u32; spec.gens.len()];
    fn rec(
        spec: &AlgebraSpec,
        i: usize,
        deg: usize,
        max: usize,
        exps: &mut Vec<u32>,
        out: &mut Vec<Vec<Monomial>>,
    ) {
        if i == spec.gens.len() {
            out[deg].push(Monomial(exps.clone()));
            return;
        }
        let g = &spec.gens[i];
        let room = ((max - deg) / g.degree) as u32;
        let top = g.max_exponent().map_or(room, |h| h.min(room));
        for e in (0..=top).rev() {
            exps[i] = e;
            rec(spec, i + 1, deg + e as usize * g.degree, max, exps, out);
        }
        exps[i] = 0;
    }
    rec(spec, 0, 0, max_degree, &mut exps, &mut by_degree);
    for (d, v) in by_degree.iter_mut().enumerate() {
        if v.len() > size_bound {
            return Err(AlgebraError::CapTooLarge {
                degree: d,
                count: v.len(),
                bound: size_bound,
            });
        }
        v.sort_by(|a, b| b.cmp(a));
    }
    let mut index = HashMap::new();
    for v in &by_degree {
        for (i, m) in v.iter().enumerate() {
            index.insert(m.clone(), i);
        }
    }
    Ok(GradedBasis {
        spec: spec.clone(),
        max_degree,
        by_degree,
        index,
    })
}

/// Derivation given by its values on generators; it moves degrees by `shift`.
#[derive(Clone, Debug)]
pub struct DerivationSpec {
    pub images: Vec<Element>,
    pub shift: i64,
}

impl DerivationSpec {
    pub fn check(&self, spec: &AlgebraSpec) -> Result<(), AlgebraError> {
        if self.images.len() != spec.len() {
            return Err(AlgebraError::Invalid(format!(
                "{} generator images for {} generators",
                self.images.len(),
                spec.len()
            )));
        }
        for (g, img) in spec.gens.iter().zip(&self.images) {
            for m in img.terms() {
                if spec.degree(m) as i64 != g.degree as i64 + self.shift {
                    return Err(AlgebraError::Invalid(format!(
                        "image of {} has a term in the wrong degree",
                        g.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Leibniz extension: `D(M) = sum over odd exponents e_i of (M / g_i) D(g_i)`.
pub fn apply_derivation_monomial(spec: &AlgebraSpec, der: &DerivationSpec, m: &Monomial) -> Element {
    let mut out = Element::zero();
    for (i, &e) in m.0.iter().enumerate() {
        if e % 2 == 1 {
            let mut rest = m.clone();
            rest.0[i] -= 1;
            out.add_assign(&spec.multiply(&Element::from_monomial(rest), &der.images[i]));
        }
    }
    out
}

pub fn apply_derivation(spec: &AlgebraSpec, der: &DerivationSpec, x: &Element) -> Element {
    let mut out = Element::zero();
    for m in x.terms() {
        out.add_assign(&apply_derivation_monomial(spec, der, m));
    }
    out
}

/// Matrix of a degreewise linear map given on monomials, from degree `d` to
/// degree `d + shift`.
pub fn linear_map_matrix(
    basis: &GradedBasis,
    d: usize,
    shift: i64,
    f: impl Fn(&Monomial) -> Element,
) -> Result<BitMatrix, AlgebraError> {
    let t = d as i64 + shift;
    if d > basis.max_degree || t > basis.max_degree as i64 {
        return Err(AlgebraError::OutOfCap {
            degree: t.max(d as i64),
            max: basis.max_degree,
        });
    }
    let src = basis.basis(d);
    if t < 0 {
        return Ok(BitMatrix::zeros(0, src.len()));
    }
    let t = t as usize;
    let cols = src
        .iter()
        .map(|m| basis.to_vector(t, &f(m)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BitMatrix::from_columns(basis.basis(t).len(), &cols))
}

pub fn derivation_matrix(
    basis: &GradedBasis,
    der: &DerivationSpec,
    d: usize,
) -> Result<BitMatrix, AlgebraError> {
    der.check(&basis.spec)?;
    linear_map_matrix(basis, d, der.shift, |m| {
        apply_derivation_monomial(&basis.spec, der, m)
    })
}

/// Coefficients of `prod 1/(1-q^p) * prod (1+q^e) * prod (1-q^{hd})/(1-q^d)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ClosedForm {
    pub polynomial: Vec<usize>,
    pub exterior: Vec<usize>,
    /// `(degree, height)` pairs.
    pub truncated: Vec<(usize, u32)>,
}

impl ClosedForm {
    pub fn of_spec(spec: &AlgebraSpec) -> Self {
        let mut c = ClosedForm::default();
        for g in &spec.gens {
            match g.kind {
                GenKind::Polynomial => c.polynomial.push(g.degree),
                GenKind::Exterior => c.exterior.push(g.degree),
                GenKind::Truncated(h) => c.truncated.push((g.degree, h)),
            }
        }
        c
    }

    pub fn series(&self, max_degree: usize) -> Vec<u64> {
        let mut s = vec![0u64; max_degree + 1];
        s[0] = 1;
        for &p in &self.polynomial {
            assert!(p > 0, "polynomial generator of degree 0");
            for d in p..=max_degree {
                s[d] += s[d - p];
            }
        }
        for &e in &self.exterior {
            for d in (e..=max_degree).rev() {
                s[d] += s[d - e];
            }
        }
        for &(d0, h) in &self.truncated {
            let mut t = vec![0u64; max_degree + 1];
            for (d, &c) in s.iter().enumerate() {
                for k in 0..h as usize {
                    let dd = d + k * d0;
                    if dd > max_degree {
                        break;
                    }
                    t[dd] += c;
                }
            }
            s = t;
        }
        s
    }
}

/// Degreewise product of two series, truncated to the shorter length.
pub fn convolve(a: &[u64], b: &[u64]) -> Vec<u64> {
    let n = a.len().min(b.len());
    (0..n)
        .map(|d| (0..=d).map(|i| a[i] * b[d - i]).sum())
        .collect()
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct DimRow {
    pub degree: i64,
    pub machine: u64,
    pub expected: u64,
    pub certified: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct DimReport {
    pub label: String,
    pub rows: Vec<DimRow>,
    /// Agreement on every certified row.
    pub equal: bool,
    pub first_mismatch: Option<i64>,
}

impl DimReport {
    pub fn new(label: impl Into<String>, rows: Vec<DimRow>) -> Self {
        let first_mismatch = rows
            .iter()
            .find(|r| r.certified && r.machine != r.expected)
            .map(|r| r.degree);
        DimReport {
            label: label.into(),
            rows,
            equal: first_mismatch.is_none(),
            first_mismatch,
        }
    }
}

/// Compares degrees `0..=max` of two series; degrees above `certified_up_to`
/// are listed but do not count towards equality.
pub fn poincare_compare(
    label: &str,
    machine: &[u64],
    expected: &[u64],
    certified_up_to: usize,
) -> DimReport {
    let n = machine.len().min(expected.len());
    let rows = (0..n)
        .map(|d| DimRow {
            degree: d as i64,
            machine: machine[d],
            expected: expected[d],
            certified: d <= certified_up_to,
        })
        .collect();
    DimReport::new(label, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z_like() -> AlgebraSpec {
        AlgebraSpec::new(vec![
            GeneratorSpec::poly("a", 2),
            GeneratorSpec::poly("b", 3),
            GeneratorSpec::ext("c", 7),
        ])
    }

    #[test]
    fn basis_dims_small_example() {
        let b = enumerate_basis(&z_like(), 7, 1000).unwrap();
        assert_eq!(b.dims(), vec![1, 0, 1, 1, 1, 1, 2, 2]);
    }

    #[test]
    fn closed_form_matches_polynomial_times_exterior() {
        let spec = AlgebraSpec::new(vec![GeneratorSpec::poly("a", 2), GeneratorSpec::ext("w", 3)]);
        let b = enumerate_basis(&spec, 8, 100).unwrap();
        let closed = ClosedForm::of_spec(&spec).series(8);
        assert_eq!(closed, vec![1, 0, 1, 1, 1, 1, 1, 1, 1]);
        assert!(poincare_compare("a,w", &b.dims(), &closed, 8).equal);
    }

    #[test]
    fn cap_too_large_is_reported() {
        let spec = AlgebraSpec::new(vec![GeneratorSpec::poly("a", 1), GeneratorSpec::poly("b", 1)]);
        assert!(matches!(
            enumerate_basis(&spec, 10, 5),
            Err(AlgebraError::CapTooLarge { degree: 5, .. })
        ));
    }

    #[test]
    fn truncated_generators() {
        let spec = AlgebraSpec::new(vec![GeneratorSpec {
            name: "x".into(),
            degree: 2,
            kind: GenKind::Truncated(3),
        }]);
        let b = enumerate_basis(&spec, 8, 10).unwrap();
        assert_eq!(b.dims(), ClosedForm::of_spec(&spec).series(8));
        assert_eq!(b.dims(), vec![1, 0, 1, 0, 1, 0, 0, 0, 0]);
        let x = Element::from_monomial(spec.gen(0));
        let x2 = spec.multiply(&x, &x);
        assert!(spec.multiply(&x2, &x).is_zero());
    }

    #[test]
    fn derivation_squares_vanish() {
        // D(a) = 0, D(b) = a on P(a, b): D(b^2) = 0 in characteristic 2.
        let spec = AlgebraSpec::new(vec![GeneratorSpec::poly("a", 1), GeneratorSpec::poly("b", 2)]);
        let der = DerivationSpec {
            images: vec![Element::zero(), Element::from_monomial(spec.gen(0))],
            shift: -1,
        };
        let b2 = Element::from_monomial(Monomial(vec![0, 2]));
        assert!(apply_derivation(&spec, &der, &b2).is_zero());
        let b3 = Element::from_monomial(Monomial(vec![0, 3]));
        assert_eq!(
            apply_derivation(&spec, &der, &b3),
            Element::from_monomial(Monomial(vec![1, 2]))
        );
    }

    fn arb_spec() -> impl Strategy<Value = AlgebraSpec> {
        proptest::collection::vec((1usize..6, 0u8..3), 1..4).prop_map(|gs| {
            AlgebraSpec::new(
                gs.into_iter()
                    .enumerate()
                    .map(|(i, (d, k))| GeneratorSpec {
                        name: format!("g{i}"),
                        degree: d,
                        kind: match k {
                            0 => GenKind::Polynomial,
                            1 => GenKind::Exterior,
                            _ => GenKind::Truncated(3),
                        },
                    })
                    .collect(),
            )
        })
    }

    proptest! {
        #[test]
        fn basis_matches_closed_form(spec in arb_spec(), n in 0usize..20) {
            let b = enumerate_basis(&spec, n, 100_000).unwrap();
            prop_assert_eq!(b.dims(), ClosedForm::of_spec(&spec).series(n));
        }

        #[test]
        fn basis_is_sorted_and_unique(spec in arb_spec(), n in 0usize..15) {
            let b = enumerate_basis(&spec, n, 100_000).unwrap();
            for d in 0..=n {
                let v = b.basis(d);
                for w in v.windows(2) {
                    prop_assert!(w[0] > w[1]);
                }
                for m in v {
                    prop_assert_eq!(spec.degree(m), d);
                }
            }
        }

        #[test]
        fn multiplication_is_commutative_and_associative(spec in arb_spec(), seed in any::<u64>()) {
            let b = enumerate_basis(&spec, 8, 100_000).unwrap();
            let pick = |s: u64| {
                let d = (s % 5) as usize;
                let v = b.basis(d);
                if v.is_empty() { Element::zero() } else { Element::from_monomial(v[(s as usize / 7) % v.len()].clone()) }
            };
            let (x, y, z) = (pick(seed), pick(seed >> 13), pick(seed >> 29));
            prop_assert_eq!(spec.multiply(&x, &y), spec.multiply(&y, &x));
            prop_assert_eq!(
                spec.multiply(&spec.multiply(&x, &y), &z),
                spec.multiply(&x, &spec.multiply(&y, &z))
            );
        }
    }
}
