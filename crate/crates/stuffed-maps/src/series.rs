//! Graded, truncated multivariate formal power series over exact rationals.
//!
//! The coefficient ring for the whole pipeline. A series lives in
//! `Q[u, 1/u][[cell weights]]` where each cell weight is a formal variable
//! `t^h_{l1..lk}` attached to an elementary 2-cell, and `u` satisfies
//! `u^2 = t` (the vertex weight). Grading is by the number of cells in a
//! monomial; the `u`-power is tracked exactly and never truncated, since
//! Euler-characteristic counting fixes the vertex count for each cell
//! content, boundary data and genus.
//!
//! Invariants:
//! - no stored term has `cell_degree > truncation`
//! - no stored coefficient is zero
//! - monomials are kept in a canonical sorted form

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, BigRational, One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

/// Exact rational scalar used everywhere in the pipeline.
pub type Rat = BigRational;

/// `n` as an exact rational.
pub fn rat(n: i64) -> Rat {
    Rat::from(BigInt::from(n))
}

/// `p/q` as an exact rational.
pub fn ratio(p: i64, q: i64) -> Rat {
    assert!(q != 0);
    Rat::new(BigInt::from(p), BigInt::from(q))
}

/// Parse a decimal-free "p/q" (or "p") string.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                None
            } else {
                Some(Rat::new(p, q))
            }
        }
        None => {
            let p: BigInt = s.parse().ok()?;
            Some(Rat::from(p))
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SeriesError {
    /// Inversion of a series whose constant (degree-0, `u^0`) term vanishes.
    #[error("series is not a unit: constant term vanishes")]
    NonUnit,
    /// Coefficient query beyond the retained truncation order.
    #[error("monomial degree {degree} exceeds truncation {truncation}")]
    TruncationExceeded { degree: u32, truncation: u32 },
}

/// A formal cell-weight variable `t^h_{l1..lk}`: an elementary 2-cell of
/// genus `h` with `k` polygonal boundaries of the given perimeters.
///
/// The perimeter list is kept sorted; two variables are equal iff
/// `(h, sorted perimeters)` agree.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
pub struct CellWeightVar {
    pub h: u32,
    pub perimeters: Vec<u32>,
}

impl CellWeightVar {
    pub fn new(h: u32, mut perimeters: Vec<u32>) -> Self {
        assert!(!perimeters.is_empty(), "cell must have at least one boundary");
        assert!(perimeters.iter().all(|&l| l >= 1), "perimeters must be positive");
        perimeters.sort_unstable();
        CellWeightVar { h, perimeters }
    }

    /// Number of boundaries `k`.
    pub fn k(&self) -> usize {
        self.perimeters.len()
    }

    /// Euler characteristic `2 - 2h - k` of the open cell.
    pub fn euler(&self) -> i64 {
        2 - 2 * self.h as i64 - self.k() as i64
    }

    pub fn perimeter_sum(&self) -> u32 {
        self.perimeters.iter().sum()
    }

    /// `prod_d mult_d!` over repeated perimeter values (the stabilizer of the
    /// ordered-tuple sum under permutations).
    pub fn perimeter_multiplicity_factorial(&self) -> Rat {
        let mut f = Rat::one();
        let mut i = 0;
        while i < self.perimeters.len() {
            let mut j = i;
            while j < self.perimeters.len() && self.perimeters[j] == self.perimeters[i] {
                j += 1;
            }
            f *= factorial((j - i) as u64);
            i = j;
        }
        f
    }

    /// All distinct ordered arrangements of the perimeter multiset.
    pub fn ordered_tuples(&self) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        let mut current = Vec::new();
        let mut pool = self.perimeters.clone();
        permute_distinct(&mut pool, &mut current, &mut out);
        out
    }
}

fn permute_distinct(pool: &mut Vec<u32>, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if pool.is_empty() {
        out.push(current.clone());
        return;
    }
    let mut last: Option<u32> = None;
    for i in 0..pool.len() {
        if last == Some(pool[i]) {
            continue;
        }
        last = Some(pool[i]);
        let v = pool.remove(i);
        current.push(v);
        permute_distinct(pool, current, out);
        current.pop();
        pool.insert(i, v);
    }
}

pub fn factorial(n: u64) -> Rat {
    let mut f = BigInt::one();
    for i in 2..=n {
        f *= BigInt::from(i);
    }
    Rat::from(f)
}

pub fn binomial(n: u64, k: u64) -> Rat {
    if k > n {
        return Rat::zero();
    }
    let mut b = BigInt::one();
    for i in 0..k {
        b *= BigInt::from(n - i);
    }
    Rat::new(b, factorial(k).to_integer())
}

/// A monomial: a multiset of cell variables plus an integer power of `u`.
///
/// `u^2 = t` is the vertex weight; intermediate solver quantities (the
/// recursion kernel, endpoint data) are Laurent in `u`, so `upow` may be
/// negative. Every exported map count has `upow >= 0`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct Monomial {
    /// Sorted `(cell, multiplicity)` pairs, multiplicities >= 1.
    pub cells: Vec<(CellWeightVar, u32)>,
    pub upow: i64,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial { cells: Vec::new(), upow: 0 }
    }

    pub fn u_power(upow: i64) -> Self {
        Monomial { cells: Vec::new(), upow }
    }

    pub fn cell(c: CellWeightVar) -> Self {
        Monomial { cells: vec![(c, 1)], upow: 0 }
    }

    /// Total number of cells, counted with multiplicity. This is the grading.
    pub fn cell_degree(&self) -> u32 {
        self.cells.iter().map(|(_, m)| m).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut cells: BTreeMap<CellWeightVar, u32> = self.cells.iter().cloned().collect();
        for (c, m) in &other.cells {
            *cells.entry(c.clone()).or_insert(0) += m;
        }
        Monomial {
            cells: cells.into_iter().collect(),
            upow: self.upow + other.upow,
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    /// Lexicographic on (cell degree, canonical cell list, upow); this is
    /// only used for deterministic iteration and serialization order.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.cell_degree()
            .cmp(&other.cell_degree())
            .then_with(|| self.cells.cmp(&other.cells))
            .then_with(|| self.upow.cmp(&other.upow))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (c, m) in &self.cells {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            write!(f, "t{}_{:?}", c.h, c.perimeters)?;
            if *m > 1 {
                write!(f, "^{}", m)?;
            }
        }
        if self.upow != 0 {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            write!(f, "u^{}", self.upow)?;
        }
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}

/// Truncated graded series: finite map `Monomial -> Rat`, discarding all
/// terms of cell degree above `truncation`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GradedSeries {
    pub truncation: u32,
    terms: BTreeMap<Monomial, Rat>,
}

impl GradedSeries {
    pub fn zero(truncation: u32) -> Self {
        GradedSeries { truncation, terms: BTreeMap::new() }
    }

    pub fn one(truncation: u32) -> Self {
        Self::from_rat(Rat::one(), truncation)
    }

    pub fn from_rat(c: Rat, truncation: u32) -> Self {
        let mut s = Self::zero(truncation);
        s.add_term(Monomial::one(), c);
        s
    }

    pub fn from_int(c: i64, truncation: u32) -> Self {
        Self::from_rat(rat(c), truncation)
    }

    /// `c * u^p`.
    pub fn u_term(c: Rat, upow: i64, truncation: u32) -> Self {
        let mut s = Self::zero(truncation);
        s.add_term(Monomial::u_power(upow), c);
        s
    }

    pub fn from_monomial(m: Monomial, c: Rat, truncation: u32) -> Self {
        let mut s = Self::zero(truncation);
        s.add_term(m, c);
        s
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Smallest cell degree among stored terms (None when zero).
    pub fn min_cell_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.cell_degree()).min()
    }

    /// Add `c * m` in place, dropping the term if it cancels or overflows
    /// the truncation.
    pub fn add_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() || m.cell_degree() > self.truncation {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &GradedSeries) -> GradedSeries {
        let trunc = self.truncation.min(other.truncation);
        let mut out = GradedSeries::zero(trunc);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.clone());
        }
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &GradedSeries) -> GradedSeries {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> GradedSeries {
        let mut out = GradedSeries::zero(self.truncation);
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), -c.clone());
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> GradedSeries {
        if c.is_zero() {
            return GradedSeries::zero(self.truncation);
        }
        let mut out = GradedSeries::zero(self.truncation);
        for (m, v) in &self.terms {
            out.terms.insert(m.clone(), v * c);
        }
        out
    }

    /// Multiply by `u^p` (exact shift of every monomial).
    pub fn mul_upow(&self, p: i64) -> GradedSeries {
        let mut out = GradedSeries::zero(self.truncation);
        for (m, c) in &self.terms {
            let mut m2 = m.clone();
            m2.upow += p;
            out.terms.insert(m2, c.clone());
        }
        out
    }

    pub fn mul(&self, other: &GradedSeries) -> GradedSeries {
        let trunc = self.truncation.min(other.truncation);
        let mut out = GradedSeries::zero(trunc);
        for (ma, ca) in &self.terms {
            let da = ma.cell_degree();
            if da > trunc {
                continue;
            }
            for (mb, cb) in &other.terms {
                if da + mb.cell_degree() > trunc {
                    continue;
                }
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    /// Coefficient of a monomial; zero when absent.
    pub fn coeff(&self, m: &Monomial) -> Result<Rat, SeriesError> {
        if m.cell_degree() > self.truncation {
            return Err(SeriesError::TruncationExceeded {
                degree: m.cell_degree(),
                truncation: self.truncation,
            });
        }
        Ok(self.terms.get(m).cloned().unwrap_or_else(Rat::zero))
    }

    /// Re-truncate to a (smaller or larger) order; retained data unchanged
    /// apart from dropping higher grades.
    pub fn truncate_to(&self, truncation: u32) -> GradedSeries {
        let mut out = GradedSeries::zero(truncation);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    /// The part of the series with cell degree exactly `d`.
    pub fn graded_part(&self, d: u32) -> GradedSeries {
        let mut out = GradedSeries::zero(self.truncation);
        for (m, c) in &self.terms {
            if m.cell_degree() == d {
                out.terms.insert(m.clone(), c.clone());
            }
        }
        out
    }

    /// Leading (cell-degree-0) part, which for every quantity in this
    /// pipeline is a single `c * u^k` monomial or zero.
    fn leading_monomial(&self) -> Option<(i64, Rat)> {
        let deg0: Vec<_> = self
            .terms
            .iter()
            .filter(|(m, _)| m.cell_degree() == 0)
            .collect();
        match deg0.len() {
            0 => None,
            1 => Some((deg0[0].0.upow, deg0[0].1.clone())),
            _ => panic!("degree-0 part is not a single u-monomial: {:?}", deg0),
        }
    }

    /// Exact inverse. Requires the degree-0, `u^0` coefficient to be nonzero
    /// (the spec's unit condition).
    pub fn invert(&self) -> Result<GradedSeries, SeriesError> {
        let c0 = self
            .coeff(&Monomial::one())
            .expect("degree 0 never exceeds truncation");
        if c0.is_zero() {
            return Err(SeriesError::NonUnit);
        }
        match self.leading_monomial() {
            Some((0, _)) => Ok(self.invert_leading()),
            _ => Err(SeriesError::NonUnit),
        }
    }

    /// Inverse of `c * u^k * (1 + nilpotent)`. Panics when the degree-0 part
    /// is not a single monomial; every invertible quantity in the pipeline
    /// has that shape (its degree-0 specialization is Gaussian).
    pub fn invert_leading(&self) -> GradedSeries {
        let (upow, c) = self
            .leading_monomial()
            .expect("cannot invert series with vanishing leading part");
        let lead_inv = GradedSeries::u_term(c.recip(), -upow, self.truncation);
        // n = 1 - lead_inv * self  is cell-degree >= 1, hence nilpotent.
        let n = GradedSeries::one(self.truncation).sub(&lead_inv.mul(self));
        debug_assert!(n.min_cell_degree().map_or(true, |d| d >= 1));
        let mut geom = GradedSeries::one(self.truncation);
        let mut pow = GradedSeries::one(self.truncation);
        for _ in 0..self.truncation {
            pow = pow.mul(&n);
            if pow.is_zero() {
                break;
            }
            geom = geom.add(&pow);
        }
        lead_inv.mul(&geom)
    }

    /// `sqrt(1 + a)` with `a` of positive cell degree; the result has
    /// constant term 1 and squares back to `1 + a` up to truncation.
    pub fn sqrt_one_plus(a: &GradedSeries) -> GradedSeries {
        assert!(
            a.graded_part(0).is_zero(),
            "sqrt_one_plus argument must have vanishing degree-0 part"
        );
        let trunc = a.truncation;
        let mut out = GradedSeries::one(trunc);
        let mut pow = GradedSeries::one(trunc);
        for m in 1..=trunc as u64 {
            pow = pow.mul(a);
            if pow.is_zero() {
                break;
            }
            // binomial(1/2, m)
            let mut coeff = Rat::one();
            for i in 0..m {
                coeff *= ratio(1, 2) - rat(i as i64);
            }
            coeff /= factorial(m);
            out = out.add(&pow.scale(&coeff));
        }
        out
    }

    /// Specialize cell variables to exact rationals (missing cells keep
    /// their formal meaning). Used only for reporting.
    pub fn substitute(&self, values: &BTreeMap<CellWeightVar, Rat>) -> GradedSeries {
        let mut out = GradedSeries::zero(self.truncation);
        'term: for (m, c) in &self.terms {
            let mut coeff = c.clone();
            let mut rest = Vec::new();
            for (cell, mult) in &m.cells {
                if let Some(v) = values.get(cell) {
                    for _ in 0..*mult {
                        coeff *= v;
                    }
                    if coeff.is_zero() {
                        continue 'term;
                    }
                } else {
                    rest.push((cell.clone(), *mult));
                }
            }
            out.add_term(Monomial { cells: rest, upow: m.upow }, coeff);
        }
        out
    }

    /// Serialization record per the structured-output schema.
    pub fn to_records(&self) -> Vec<SeriesTermRecord> {
        self.terms
            .iter()
            .map(|(m, c)| SeriesTermRecord {
                monomial: MonomialRecord {
                    cells: m.cells.iter().map(|(c, mult)| {
                        let mut reps = Vec::new();
                        for _ in 0..*mult {
                            reps.push((c.h, c.perimeters.clone()));
                        }
                        reps
                    }).flatten().collect(),
                    upow: m.upow,
                },
                coeff: c.to_string(),
            })
            .collect()
    }
}

impl fmt::Display for GradedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if first {
                first = false;
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            write!(f, "{}*{}", c.abs(), m)?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
pub struct MonomialRecord {
    pub cells: Vec<(u32, Vec<u32>)>,
    pub upow: i64,
}

#[derive(Serialize)]
pub struct SeriesTermRecord {
    pub monomial: MonomialRecord,
    pub coeff: String,
}

/// The model definition: the finite set of active cell weights treated as
/// formal variables, the truncation order, and optional rational
/// specializations used when reporting.
#[derive(Clone, Debug)]
pub struct WeightSpec {
    pub active: Vec<CellWeightVar>,
    pub truncation: u32,
    pub substitutions: BTreeMap<CellWeightVar, Rat>,
}

impl WeightSpec {
    pub fn new(active: Vec<CellWeightVar>, truncation: u32) -> Self {
        let mut seen = std::collections::BTreeSet::new();
        for c in &active {
            assert!(seen.insert(c.clone()), "active weights must be pairwise distinct");
        }
        WeightSpec { active, truncation, substitutions: BTreeMap::new() }
    }

    pub fn gaussian(truncation: u32) -> Self {
        WeightSpec::new(Vec::new(), truncation)
    }

    /// Active planar (h = 0) cells with `k >= 2` boundaries: the ones that
    /// feed the master operator.
    pub fn cement_cells(&self) -> impl Iterator<Item = &CellWeightVar> {
        self.active.iter().filter(|c| c.h == 0 && c.k() >= 2)
    }

    /// Active planar one-boundary cells (usual face weights).
    pub fn disc_cells(&self) -> impl Iterator<Item = &CellWeightVar> {
        self.active.iter().filter(|c| c.h == 0 && c.k() == 1)
    }

    /// Largest perimeter across active cells (0 when Gaussian).
    pub fn max_perimeter(&self) -> u32 {
        self.active
            .iter()
            .flat_map(|c| c.perimeters.iter().copied())
            .max()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w() -> CellWeightVar {
        CellWeightVar::new(0, vec![3])
    }

    fn gs_w(trunc: u32) -> GradedSeries {
        GradedSeries::from_monomial(Monomial::cell(w()), Rat::one(), trunc)
    }

    #[test]
    fn additive_identity_and_cancellation() {
        let s = gs_w(3);
        let zero = GradedSeries::zero(3);
        assert_eq!(zero.add(&s), s);
        let m = Monomial::cell(w());
        let a = GradedSeries::from_monomial(m.clone(), ratio(3, 2), 3);
        let b = GradedSeries::from_monomial(m, ratio(-3, 2), 3);
        assert!(a.add(&b).is_zero());
    }

    #[test]
    fn like_term_collection() {
        let u2 = GradedSeries::u_term(Rat::one(), 2, 3);
        let s = u2.add(&u2);
        assert_eq!(s.coeff(&Monomial::u_power(2)).unwrap(), rat(2));
    }

    #[test]
    fn mul_truncation_semantics() {
        // (1 + w)(1 - w) = 1 - w^2 at D >= 2, = 1 at D = 1.
        let one = GradedSeries::one(2);
        let p = one.add(&gs_w(2));
        let q = one.sub(&gs_w(2));
        let prod = p.mul(&q);
        let w2 = Monomial::cell(w()).mul(&Monomial::cell(w()));
        assert_eq!(prod.coeff(&w2).unwrap(), rat(-1));
        assert_eq!(prod.coeff(&Monomial::one()).unwrap(), rat(1));

        let one1 = GradedSeries::one(1);
        let prod1 = one1.add(&gs_w(1)).mul(&one1.sub(&gs_w(1)));
        assert_eq!(prod1, GradedSeries::one(1));
    }

    #[test]
    fn mul_u_powers() {
        let u = GradedSeries::u_term(Rat::one(), 1, 2);
        assert_eq!(u.mul(&u), GradedSeries::u_term(Rat::one(), 2, 2));
    }

    #[test]
    fn invert_simple() {
        assert_eq!(
            GradedSeries::from_int(2, 2).invert().unwrap(),
            GradedSeries::from_rat(ratio(1, 2), 2)
        );
        assert_eq!(GradedSeries::one(2).invert().unwrap(), GradedSeries::one(2));
        // 1/(1+w) = 1 - w + w^2 at D=2
        let inv = GradedSeries::one(2).add(&gs_w(2)).invert().unwrap();
        let w1 = Monomial::cell(w());
        let w2 = w1.mul(&w1);
        assert_eq!(inv.coeff(&w1).unwrap(), rat(-1));
        assert_eq!(inv.coeff(&w2).unwrap(), rat(1));
        assert_eq!(
            inv.mul(&GradedSeries::one(2).add(&gs_w(2))),
            GradedSeries::one(2)
        );
    }

    #[test]
    fn invert_non_unit() {
        assert_eq!(gs_w(2).invert(), Err(SeriesError::NonUnit));
        // u^2 has no (deg 0, u^0) coefficient either
        let u2 = GradedSeries::u_term(Rat::one(), 2, 2);
        assert_eq!(u2.invert(), Err(SeriesError::NonUnit));
    }

    #[test]
    fn sqrt_perfect_square() {
        // sqrt(1 + 2w + w^2) = 1 + w
        let two_w = gs_w(2).scale(&rat(2));
        let w2m = Monomial::cell(w()).mul(&Monomial::cell(w()));
        let arg = two_w.add(&GradedSeries::from_monomial(w2m, Rat::one(), 2));
        let root = GradedSeries::sqrt_one_plus(&arg);
        assert_eq!(root, GradedSeries::one(2).add(&gs_w(2)));
        assert!(GradedSeries::sqrt_one_plus(&GradedSeries::zero(2)).sub(&GradedSeries::one(2)).is_zero());
    }

    #[test]
    fn coeff_errors_beyond_truncation() {
        let s = gs_w(1);
        let w2 = Monomial::cell(w()).mul(&Monomial::cell(w()));
        assert!(matches!(s.coeff(&w2), Err(SeriesError::TruncationExceeded { .. })));
    }

    #[test]
    fn ordered_tuples_of_multiset() {
        let c = CellWeightVar::new(0, vec![1, 1, 2]);
        let tuples = c.ordered_tuples();
        assert_eq!(tuples.len(), 3);
        assert!(tuples.contains(&vec![1, 1, 2]));
        assert!(tuples.contains(&vec![1, 2, 1]));
        assert!(tuples.contains(&vec![2, 1, 1]));
        assert_eq!(c.perimeter_multiplicity_factorial(), rat(2));
    }
}
