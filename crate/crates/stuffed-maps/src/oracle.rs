//! Brute-force ground truth from Wick's theorem.
//!
//! Moments of the Gaussian measure with covariance `<M_ab M_cd> = (t/N)
//! delta_ad delta_bc` are sums over perfect matchings of the trace-word
//! half-edges; a matching contributes `(u^2/N)^E N^F` with `E` the number
//! of glued edge pairs and `F` the number of cycles of (boundary rotation
//! composed with the matching involution). Connected correlators follow by
//! set-partition Moebius inversion, and stuffed-map coefficients by
//! expanding the multi-trace weight exponential into joint cumulants and
//! reading off the `(N/t)^{2-2g-n}` component.
//!
//! Everything here is independent of the spectral-curve pipeline; the two
//! must agree exactly and that agreement is the main acceptance gate.

use std::cell::RefCell;
use std::collections::BTreeMap;

use num::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::series::{factorial, rat, CellWeightVar, Monomial, Rat, WeightSpec};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("query needs {needed} half-edges, oracle cap is {cap}")]
    CapExceeded { needed: u32, cap: u32 },
    #[error("N-grading outside the topological range: {0}")]
    InconsistentGrading(String),
}

/// A product of traces `Tr M^{l_1} ... Tr M^{l_n}`; zero powers mean
/// `Tr M^0 = N`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct TraceWord {
    pub powers: Vec<u32>,
}

impl TraceWord {
    pub fn new(powers: Vec<u32>) -> Self {
        TraceWord { powers }
    }

    pub fn half_edges(&self) -> u32 {
        self.powers.iter().sum()
    }
}

/// Exact polynomial in `N` and `u` (`u^2 = t`).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct NPolynomial {
    /// (power of N, power of u) -> coefficient
    pub terms: BTreeMap<(i64, i64), Rat>,
}

impl NPolynomial {
    pub fn zero() -> Self {
        NPolynomial::default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, npow: i64, upow: i64, c: Rat) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry((npow, upow)).or_insert_with(Rat::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&(npow, upow));
        }
    }

    pub fn add(&self, other: &NPolynomial) -> NPolynomial {
        let mut out = self.clone();
        for (&(n, u), c) in &other.terms {
            out.add_term(n, u, c.clone());
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> NPolynomial {
        let mut out = NPolynomial::zero();
        if c.is_zero() {
            return out;
        }
        for (&(n, u), v) in &self.terms {
            out.add_term(n, u, v * c);
        }
        out
    }

    /// Multiply, shifting N- and u-powers.
    pub fn mul(&self, other: &NPolynomial) -> NPolynomial {
        let mut out = NPolynomial::zero();
        for (&(n1, u1), c1) in &self.terms {
            for (&(n2, u2), c2) in &other.terms {
                out.add_term(n1 + n2, u1 + u2, c1 * c2);
            }
        }
        out
    }

    pub fn shift(&self, npow: i64, upow: i64) -> NPolynomial {
        let mut out = NPolynomial::zero();
        for (&(n, u), c) in &self.terms {
            out.add_term(n + npow, u + upow, c.clone());
        }
        out
    }

    /// Coefficients of a fixed `N`-power, as a u-polynomial.
    pub fn n_component(&self, npow: i64) -> Vec<(i64, Rat)> {
        self.terms
            .iter()
            .filter(|((n, _), _)| *n == npow)
            .map(|((_, u), c)| (*u, c.clone()))
            .collect()
    }
}

impl std::fmt::Display for NPolynomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(n, u), c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}*N^{}*u^{}", c, n, u)?;
        }
        Ok(())
    }
}

/// A single map-count query: the coefficient of
/// `prod_j x_j^{-(l_j+1)}` and of `monomial` in `W_n^g`.
#[derive(Clone, Debug, Serialize)]
pub struct OracleQuery {
    pub n: usize,
    pub g: u32,
    pub perimeters: Vec<u32>,
    pub monomial: Monomial,
}

/// Wick-theorem evaluator with a moment memo and a half-edge cap.
pub struct Oracle {
    pub cap: u32,
    memo: RefCell<BTreeMap<Vec<u32>, NPolynomial>>,
}

impl Oracle {
    pub fn new(cap: u32) -> Self {
        Oracle { cap, memo: RefCell::new(BTreeMap::new()) }
    }

    /// Gaussian moment `< prod_j Tr M^{l_j} >` summed over all perfect
    /// matchings of the half-edges.
    pub fn gue_moment(&self, word: &TraceWord) -> Result<NPolynomial, OracleError> {
        let zeros = word.powers.iter().filter(|&&l| l == 0).count() as i64;
        let mut powers: Vec<u32> = word.powers.iter().copied().filter(|&l| l > 0).collect();
        powers.sort_unstable();
        let total: u32 = powers.iter().sum();
        if total > self.cap {
            return Err(OracleError::CapExceeded { needed: total, cap: self.cap });
        }
        if total % 2 == 1 {
            return Ok(NPolynomial::zero());
        }
        if let Some(p) = self.memo.borrow().get(&powers) {
            return Ok(p.shift(zeros, 0));
        }
        let result = if total == 0 {
            let mut p = NPolynomial::zero();
            p.add_term(0, 0, Rat::one());
            p
        } else {
            // boundary rotation: half-edge i |-> next half-edge on its trace
            let l = total as usize;
            let mut rot = vec![0usize; l];
            let mut start = 0usize;
            for &p in &powers {
                let p = p as usize;
                for i in 0..p {
                    rot[start + i] = start + (i + 1) % p;
                }
                start += p;
            }
            let e = (l / 2) as i64;
            let mut face_counts: BTreeMap<i64, u64> = BTreeMap::new();
            let mut matching = vec![usize::MAX; l];
            enumerate_matchings(&mut matching, 0, &rot, &mut face_counts);
            let mut p = NPolynomial::zero();
            for (f, count) in face_counts {
                // (u^2/N)^E N^F
                p.add_term(f - e, 2 * e, rat(count as i64));
            }
            p
        };
        self.memo.borrow_mut().insert(powers, result.clone());
        Ok(result.shift(zeros, 0))
    }

    /// Connected correlator `< Tr M^{l_1}; ...; Tr M^{l_n} >_c` by Moebius
    /// inversion over set partitions of the trace factors.
    pub fn gue_cumulant(&self, word: &TraceWord) -> Result<NPolynomial, OracleError> {
        let n = word.powers.len();
        let mut out = NPolynomial::zero();
        for part in set_partitions(n) {
            let blocks = part.len() as i64;
            // moebius factor (-1)^{#blocks - 1} (#blocks - 1)!
            let mut coeff = factorial(blocks as u64 - 1);
            if (blocks - 1) % 2 == 1 {
                coeff = -coeff;
            }
            let mut prod = NPolynomial::zero();
            prod.add_term(0, 0, Rat::one());
            for block in &part {
                let sub = TraceWord::new(block.iter().map(|&i| word.powers[i]).collect());
                prod = prod.mul(&self.gue_moment(&sub)?);
            }
            out = out.add(&prod.scale(&coeff));
        }
        Ok(out)
    }

    /// Joint connected cumulant where each slot is a whole trace word
    /// (slots may be products of several traces). Partitions run over
    /// slots, not individual traces.
    fn joint_cumulant(&self, slots: &[TraceWord]) -> Result<NPolynomial, OracleError> {
        let n = slots.len();
        let mut out = NPolynomial::zero();
        for part in set_partitions(n) {
            let blocks = part.len() as i64;
            let mut coeff = factorial(blocks as u64 - 1);
            if (blocks - 1) % 2 == 1 {
                coeff = -coeff;
            }
            let mut prod = NPolynomial::zero();
            prod.add_term(0, 0, Rat::one());
            for block in &part {
                let mut powers = Vec::new();
                for &i in block {
                    powers.extend_from_slice(&slots[i].powers);
                }
                prod = prod.mul(&self.gue_moment(&TraceWord::new(powers))?);
            }
            out = out.add(&prod.scale(&coeff));
        }
        Ok(out)
    }

    /// The full `N`-graded connected correlator of the model defined by the
    /// query's cell monomial: boundary traces plus one insertion slot per
    /// cell (with multiplicity), each slot weighted by the cell's coupling.
    fn stuffed_cumulant(&self, query: &OracleQuery) -> Result<NPolynomial, OracleError> {
        // feasibility: all half-edges together
        let cell_halves: u32 = query
            .monomial
            .cells
            .iter()
            .map(|(c, m)| c.perimeter_sum() * m)
            .sum();
        let needed = query.perimeters.iter().sum::<u32>() + cell_halves;
        if needed > self.cap {
            return Err(OracleError::CapExceeded { needed, cap: self.cap });
        }

        let mut slots: Vec<TraceWord> = query
            .perimeters
            .iter()
            .map(|&l| TraceWord::new(vec![l]))
            .collect();
        // scalar prefactor: per cell copy, (N/t)^{chi} / (prod mult_d!) / (prod l_s),
        // and 1/m_c! per repeated cell
        let mut pref = NPolynomial::zero();
        pref.add_term(0, 0, Rat::one());
        for (cell, mult) in &query.monomial.cells {
            let mut unit = Rat::one();
            unit /= cell.perimeter_multiplicity_factorial();
            for &l in &cell.perimeters {
                unit /= rat(l as i64);
            }
            let chi = cell.euler();
            for _ in 0..*mult {
                slots.push(TraceWord::new(cell.perimeters.clone()));
                // (N/t)^chi = N^chi u^{-2 chi}
                pref = pref.shift(chi, -2 * chi).scale(&unit);
            }
            pref = pref.scale(&factorial(*mult as u64).recip());
        }
        Ok(self.joint_cumulant(&slots)?.mul(&pref))
    }

    /// Exact stuffed-map count: coefficient of `prod x_j^{-(l_j+1)}` times
    /// the queried cell monomial in `W_n^g`, with the u-power returned as
    /// part of a [`Monomial`]-keyed answer.
    ///
    /// The `(N/t)^{2-2g-n}` component is extracted; Euler counting forces a
    /// single u-power, which is checked.
    pub fn stuffed_coeff(&self, query: &OracleQuery) -> Result<(i64, Rat), OracleError> {
        let full = self.stuffed_cumulant(query)?;
        let npow = 2 - 2 * query.g as i64 - query.n as i64;
        // W_n = sum_g (N/t)^{2-2g-n} W_n^g: the u-powers in `full` are
        // relative to the N-grading: term N^a u^b corresponds to
        // (N/t)^a u^{b + 2a}, i.e. W_n^{g(a)} coefficient u^{b+2a}.
        let comp = full.n_component(npow);
        // sanity: N-powers must not exceed 2 - n and must have matching parity
        for (&(a, _), _) in &full.terms {
            if a > 2 - query.n as i64 {
                return Err(OracleError::InconsistentGrading(format!(
                    "N-power {} above planar bound {}",
                    a,
                    2 - query.n as i64
                )));
            }
            if (a - (2 - query.n as i64)).rem_euclid(2) != 0 {
                return Err(OracleError::InconsistentGrading(format!(
                    "N-power {} has wrong parity for n = {}",
                    a, query.n
                )));
            }
        }
        match comp.len() {
            0 => Ok((0, Rat::zero())),
            1 => {
                let (b, c) = comp.into_iter().next().unwrap();
                Ok((b + 2 * npow, c))
            }
            _ => Err(OracleError::InconsistentGrading(format!(
                "multiple u-powers at N^{}: {:?}",
                npow, comp
            ))),
        }
    }

    /// Convenience wrapper returning just the rational coefficient and
    /// asserting the Euler-forced u-power.
    pub fn stuffed_coeff_checked(&self, query: &OracleQuery) -> Result<Rat, OracleError> {
        let (upow, c) = self.stuffed_coeff(query)?;
        if c.is_zero() {
            return Ok(c);
        }
        let expected = expected_vertex_upow(query);
        if upow != expected {
            return Err(OracleError::InconsistentGrading(format!(
                "u-power {} differs from Euler prediction {}",
                upow, expected
            )));
        }
        Ok(c)
    }
}

/// `2V` from Euler counting: `V = E + (2-2g-n) - sum_cells chi(cell)`.
pub fn expected_vertex_upow(query: &OracleQuery) -> i64 {
    let halves: u32 = query.perimeters.iter().sum::<u32>()
        + query
            .monomial
            .cells
            .iter()
            .map(|(c, m)| c.perimeter_sum() * m)
            .sum::<u32>();
    let e = halves as i64 / 2;
    let chi_cells: i64 = query
        .monomial
        .cells
        .iter()
        .map(|(c, m)| c.euler() * *m as i64)
        .sum();
    2 * (e + 2 - 2 * query.g as i64 - query.n as i64 - chi_cells)
}

fn enumerate_matchings(
    matching: &mut Vec<usize>,
    scanned: usize,
    rot: &[usize],
    face_counts: &mut BTreeMap<i64, u64>,
) {
    let l = matching.len();
    let mut first = scanned;
    while first < l && matching[first] != usize::MAX {
        first += 1;
    }
    if first == l {
        // count cycles of rot o matching
        let mut seen = vec![false; l];
        let mut faces = 0i64;
        for s in 0..l {
            if seen[s] {
                continue;
            }
            faces += 1;
            let mut i = s;
            while !seen[i] {
                seen[i] = true;
                i = rot[matching[i]];
            }
        }
        *face_counts.entry(faces).or_insert(0) += 1;
        return;
    }
    for j in (first + 1)..l {
        if matching[j] != usize::MAX {
            continue;
        }
        matching[first] = j;
        matching[j] = first;
        enumerate_matchings(matching, first + 1, rot, face_counts);
        matching[first] = usize::MAX;
        matching[j] = usize::MAX;
    }
}

/// All set partitions of `{0, .., n-1}`.
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for mut part in set_partitions(n - 1) {
        // element n-1 joins an existing block or opens a new one
        for i in 0..part.len() {
            let mut p2 = part.clone();
            p2[i].push(n - 1);
            out.push(p2);
        }
        part.push(vec![n - 1]);
        out.push(part);
    }
    out
}

/// One induced multi-trace weight from the two-matrix "stuffing" picture:
/// `alpha^{sum l} < Tr M2^{l_1} ... Tr M2^{l_k} >_c`, with the determinant
/// power entering as `gamma^k`. The N-grading of the cumulant splits the
/// weight into its per-genus components.
#[derive(Clone, Debug, Serialize)]
pub struct InducedWeight {
    pub perimeters: Vec<u32>,
    pub alpha_power: u32,
    pub gamma_power: u32,
    /// The exact cumulant as a list of `(N-power, u-power, coeff)` terms.
    pub cumulant: Vec<(i64, i64, String)>,
    /// Per-genus split: `(h, u-power of the weight value, coeff)` where the
    /// weight value of `t^h_{perimeters}` is
    /// `gamma^k alpha^{sum l} coeff u^{upow}`.
    pub per_genus: Vec<(u32, i64, String)>,
}

/// Expand the induced weights of the determinant-coupled two-matrix model
/// through total boundary length `alpha_order`, with a Gaussian second
/// matrix evaluated by the Wick oracle.
pub fn induce_weights(alpha_order: u32, oracle: &Oracle) -> Result<Vec<InducedWeight>, OracleError> {
    let mut out = Vec::new();
    for total in 1..=alpha_order {
        for perimeters in partitions_of(total) {
            let k = perimeters.len();
            let word = TraceWord::new(perimeters.clone());
            let cum = oracle.gue_cumulant(&word)?;
            if cum.is_zero() {
                continue;
            }
            let mut per_genus = Vec::new();
            for (&(npow, upow), c) in &cum.terms {
                // N^{npow} component belongs to genus h with npow = 2 - 2h - k
                let two_h = 2 - k as i64 - npow;
                if two_h < 0 || two_h % 2 != 0 {
                    return Err(OracleError::InconsistentGrading(format!(
                        "induced weight N-power {} invalid for k = {}",
                        npow, k
                    )));
                }
                let h = (two_h / 2) as u32;
                // t^h_l (N/t)^{2-2h-k} = gamma^k alpha^{sum} N^{npow} u^{upow}
                // => value of t^h_l carries u^{upow + 2(2-2h-k)} ... with
                // (N/t)^{chi} = N^{chi} u^{-2 chi}: t^h_l = gamma^k alpha^S c u^{upow + 2 chi}
                let chi = 2 - 2 * h as i64 - k as i64;
                per_genus.push((h, upow + 2 * chi, c.to_string()));
            }
            out.push(InducedWeight {
                perimeters,
                alpha_power: total,
                gamma_power: k as u32,
                cumulant: cum
                    .terms
                    .iter()
                    .map(|(&(n, u), c)| (n, u, c.to_string()))
                    .collect(),
                per_genus,
            });
        }
    }
    Ok(out)
}

/// Build a [`WeightSpec`] from induced weights with `alpha` and `gamma`
/// specialized to exact rationals: each `(h, perimeters)` becomes an active
/// formal cell with a recorded rational substitution (the u-powers stay in
/// the value as vertex-weight factors, recorded separately by callers).
pub fn induced_weight_spec(
    weights: &[InducedWeight],
    truncation: u32,
) -> WeightSpec {
    let mut cells = Vec::new();
    for w in weights {
        for (h, _, _) in &w.per_genus {
            let cell = CellWeightVar::new(*h, w.perimeters.clone());
            if !cells.contains(&cell) {
                cells.push(cell);
            }
        }
    }
    WeightSpec::new(cells, truncation)
}

/// All multisets of positive integers summing to `total` (sorted ascending).
fn partitions_of(total: u32) -> Vec<Vec<u32>> {
    fn rec(total: u32, min: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if total == 0 {
            out.push(prefix.clone());
            return;
        }
        for next in min..=total {
            prefix.push(next);
            rec(total - next, next, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, 1, &mut Vec::new(), &mut out);
    out
}

/// Catalan number `C_m` (test reference).
pub fn catalan(m: u64) -> Rat {
    factorial(2 * m) / (factorial(m) * factorial(m + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ratio;

    fn np(terms: &[(i64, i64, i64)]) -> NPolynomial {
        let mut p = NPolynomial::zero();
        for &(n, u, c) in terms {
            p.add_term(n, u, rat(c));
        }
        p
    }

    #[test]
    fn moment_of_tr_m2() {
        let o = Oracle::new(16);
        let m = o.gue_moment(&TraceWord::new(vec![2])).unwrap();
        assert_eq!(m, np(&[(1, 2, 1)]));
    }

    #[test]
    fn moment_of_tr_m4_splits_by_genus() {
        let o = Oracle::new(16);
        let m = o.gue_moment(&TraceWord::new(vec![4])).unwrap();
        assert_eq!(m, np(&[(1, 4, 2), (-1, 4, 1)]));
    }

    #[test]
    fn odd_moments_vanish() {
        let o = Oracle::new(16);
        assert!(o.gue_moment(&TraceWord::new(vec![1])).unwrap().is_zero());
        assert!(o.gue_moment(&TraceWord::new(vec![3, 2])).unwrap().is_zero());
    }

    #[test]
    fn cumulants_match_spec_examples() {
        let o = Oracle::new(16);
        // single block: cumulant = moment
        assert_eq!(
            o.gue_cumulant(&TraceWord::new(vec![2])).unwrap(),
            np(&[(1, 2, 1)])
        );
        // two 2-traces: cross pairings only
        assert_eq!(
            o.gue_cumulant(&TraceWord::new(vec![2, 2])).unwrap(),
            np(&[(0, 4, 2)])
        );
        // two 1-traces
        assert_eq!(
            o.gue_cumulant(&TraceWord::new(vec![1, 1])).unwrap(),
            np(&[(0, 2, 1)])
        );
    }

    #[test]
    fn catalan_leading_coefficients() {
        let o = Oracle::new(16);
        for m in 1..=6u64 {
            let mom = o.gue_moment(&TraceWord::new(vec![2 * m as u32])).unwrap();
            let planar = mom
                .terms
                .get(&(1, 2 * m as i64))
                .cloned()
                .unwrap_or_else(Rat::zero);
            assert_eq!(planar, catalan(m), "leading coefficient of <Tr M^{}>", 2 * m);
        }
    }

    #[test]
    fn gaussian_disk_counts() {
        let o = Oracle::new(16);
        // (n=1, g=0, [2], empty): the single-edge disk, weight t^2
        let q = OracleQuery {
            n: 1,
            g: 0,
            perimeters: vec![2],
            monomial: Monomial::one(),
        };
        let (upow, c) = o.stuffed_coeff(&q).unwrap();
        assert_eq!((upow, c), (4, Rat::one()));
        // (n=1, g=1, [4], empty): the one-vertex torus quadrangulation
        let q = OracleQuery {
            n: 1,
            g: 1,
            perimeters: vec![4],
            monomial: Monomial::one(),
        };
        let (upow, c) = o.stuffed_coeff(&q).unwrap();
        assert_eq!((upow, c), (2, Rat::one()));
        // (n=1, g=0, [0], empty): the lone vertex, weight t
        let q = OracleQuery {
            n: 1,
            g: 0,
            perimeters: vec![0],
            monomial: Monomial::one(),
        };
        let (upow, c) = o.stuffed_coeff(&q).unwrap();
        assert_eq!((upow, c), (2, Rat::one()));
    }

    #[test]
    fn one_cell_disk_correction() {
        // t^0_2 cell glued to a 2-gon boundary: coefficient t^2 at order 1
        let o = Oracle::new(16);
        let cell = CellWeightVar::new(0, vec![2]);
        let q = OracleQuery {
            n: 1,
            g: 0,
            perimeters: vec![2],
            monomial: Monomial::cell(cell),
        };
        let (upow, c) = o.stuffed_coeff(&q).unwrap();
        assert_eq!((upow, c), (4, Rat::one()));
    }

    #[test]
    fn multi_boundary_cell_pair_insertion() {
        // coefficient of t^0_{1,1} in <Tr M; Tr M>_c at genus 0 is u^4
        let o = Oracle::new(16);
        let cell = CellWeightVar::new(0, vec![1, 1]);
        let q = OracleQuery {
            n: 2,
            g: 0,
            perimeters: vec![1, 1],
            monomial: Monomial::cell(cell),
        };
        let (upow, c) = o.stuffed_coeff(&q).unwrap();
        assert_eq!((upow, c), (4, Rat::one()));
    }

    #[test]
    fn nonnegative_counts() {
        let o = Oracle::new(16);
        let cells = [
            CellWeightVar::new(0, vec![3]),
            CellWeightVar::new(0, vec![2, 2]),
            CellWeightVar::new(1, vec![2]),
        ];
        for cell in &cells {
            for l in 1..=4u32 {
                for g in 0..=1u32 {
                    let q = OracleQuery {
                        n: 1,
                        g,
                        perimeters: vec![l],
                        monomial: Monomial::cell(cell.clone()),
                    };
                    let c = o.stuffed_coeff_checked(&q).unwrap();
                    assert!(c >= Rat::zero(), "count {:?} for {:?}", c, q);
                }
            }
        }
    }

    #[test]
    fn cap_errors() {
        let o = Oracle::new(8);
        assert!(matches!(
            o.gue_moment(&TraceWord::new(vec![10])),
            Err(OracleError::CapExceeded { .. })
        ));
    }

    #[test]
    fn induced_weights_gaussian_m2() {
        let o = Oracle::new(16);
        let ws = induce_weights(2, &o).unwrap();
        // order 1 is empty (odd moments vanish), order 2 has [2] and [1,1]
        assert!(ws.iter().all(|w| w.alpha_power == 2));
        let w2 = ws.iter().find(|w| w.perimeters == vec![2]).unwrap();
        assert_eq!(w2.cumulant, vec![(1, 2, "1".to_string())]);
        assert_eq!(w2.gamma_power, 1);
        let w11 = ws.iter().find(|w| w.perimeters == vec![1, 1]).unwrap();
        assert_eq!(w11.cumulant, vec![(0, 2, "1".to_string())]);
        assert_eq!(w11.gamma_power, 2);
        // per-genus split: both are planar (h = 0)
        assert_eq!(w2.per_genus, vec![(0, 4, "1".to_string())]);
        assert_eq!(w11.per_genus, vec![(0, 2, "1".to_string())]);
    }

    #[test]
    fn stuffed_coeff_parity_zero() {
        let o = Oracle::new(16);
        // odd perimeter with an even-only model is zero
        let q = OracleQuery {
            n: 1,
            g: 0,
            perimeters: vec![3],
            monomial: Monomial::one(),
        };
        assert!(o.stuffed_coeff(&q).unwrap().1.is_zero());
    }

    #[test]
    fn moment_memo_handles_zero_powers() {
        let o = Oracle::new(16);
        // Tr M^0 = N
        let m = o.gue_moment(&TraceWord::new(vec![0])).unwrap();
        assert_eq!(m, np(&[(1, 0, 1)]));
        let m2 = o.gue_moment(&TraceWord::new(vec![0, 2])).unwrap();
        assert_eq!(m2, np(&[(2, 2, 1)]));
    }

    #[test]
    fn ratio_helper() {
        assert_eq!(ratio(2, 4), ratio(1, 2));
    }
}
