//! Independent correctness harness: exact Schwinger-Dyson residuals, linear
//! and quadratic loop-equation checks, and oracle equivalence.

use crate::series::{Monomial, WeightSpec};

/// All cell monomials of the active weights with total degree at most `d`
/// (including the empty monomial), `u`-power zero.
pub fn monomials_up_to(spec: &WeightSpec, d: u32) -> Vec<Monomial> {
    let mut out = vec![Monomial::one()];
    let mut frontier = vec![Monomial::one()];
    for _ in 0..d {
        let mut next = Vec::new();
        for m in &frontier {
            for cell in &spec.active {
                let m2 = m.mul(&Monomial::cell(cell.clone()));
                if !out.contains(&m2) {
                    out.push(m2.clone());
                    next.push(m2);
                }
            }
        }
        frontier = next;
    }
    out
}
