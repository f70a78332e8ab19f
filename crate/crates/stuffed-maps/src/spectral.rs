//! Disk and cylinder solutions of the multi-trace model.
//!
//! The disk series is computed by the gasket substitution: effective face
//! weights `tau_m` turn stuffed disks into usual one-cut maps, which the
//! Zhukovsky frame solves exactly. The fixed point is strictly graded by
//! cell count, so it stabilizes after at most `truncation + 1` rounds.
//!
//! Normalization is anchored to the Wick oracle: the effective potential is
//! `T_1^eff(x) = -x^2/2 + sum_m tau_m x^m / m`, which reproduces the
//! single-edge disk weight `t^2` and the simple pole with residue `-t` at
//! `z = infinity`.
//!
//! The cylinder correction is the unique power-series solution of the
//! linear equation `S_z1 omega_2^0 + O_z1 omega_2^0 = dx dx / (x - x)^2`,
//! solved order by order in Laurent modes of the first variable.

use std::collections::BTreeMap;

use num::{One, Zero};
use thiserror::Error;

use crate::series::{rat, CellWeightVar, GradedSeries, Rat, WeightSpec};
use crate::zforms::{Form1, NForm, Point, SlotBasis, ZFormError, ZRational, ZhukovskyFrame};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpectralError {
    #[error("fixed point failed to stabilize the retained grades")]
    NonConvergence,
    #[error("branch point degenerates at leading order (non-tame weights)")]
    DegenerateBranchPoint,
    #[error("simple-pole part where a rational primitive was required")]
    ResidueObstruction,
}

impl From<ZFormError> for SpectralError {
    fn from(_: ZFormError) -> Self {
        SpectralError::ResidueObstruction
    }
}

/// Solved disk data: the frame, the 1-form `W_1^0(x(z)) dx(z)`, the
/// effective gasket weights, and the moment cache `G_l`.
#[derive(Clone, Debug)]
pub struct DiskSolution {
    pub spec: WeightSpec,
    pub frame: ZhukovskyFrame,
    pub w10: Form1,
    pub eff_tau: BTreeMap<u32, GradedSeries>,
    pub moments: BTreeMap<u32, GradedSeries>,
}

/// `G_l`: the weighted count of stuffed disks with perimeter `l`, read off
/// the solved form by a unit-circle contour against `x^l`.
pub fn moment(frame: &ZhukovskyFrame, form: &Form1, l: u32) -> GradedSeries {
    Form1::new(frame.x_pow(l).mul(&form.f)).contour_unit()
}

/// Effective face weights `tau_m` from the active cells and the current
/// disk moments:
/// `tau_m = t^0_m + sum_{k>=2} 1/(k-1)! sum t^0_{m,m_2..m_k} prod G_{m_i}/m_i`.
pub fn effective_weights(
    spec: &WeightSpec,
    moments: &BTreeMap<u32, GradedSeries>,
) -> BTreeMap<u32, GradedSeries> {
    let trunc = spec.truncation;
    let mut tau: BTreeMap<u32, GradedSeries> = BTreeMap::new();
    for cell in spec.disc_cells() {
        let m = cell.perimeters[0];
        let term = GradedSeries::from_monomial(
            crate::series::Monomial::cell(cell.clone()),
            Rat::one(),
            trunc,
        );
        let e = tau.entry(m).or_insert_with(|| GradedSeries::zero(trunc));
        *e = e.add(&term);
    }
    for cell in spec.cement_cells() {
        let k = cell.k();
        let sym = factorial_rat(k as u64 - 1).recip();
        let var = GradedSeries::from_monomial(
            crate::series::Monomial::cell(cell.clone()),
            Rat::one(),
            trunc,
        );
        for tuple in cell.ordered_tuples() {
            let m = tuple[0];
            let mut w = var.scale(&sym);
            for &mi in &tuple[1..] {
                let g = moments
                    .get(&mi)
                    .cloned()
                    .unwrap_or_else(|| GradedSeries::zero(trunc));
                w = w.mul(&g.scale(&rat(mi as i64).recip()));
            }
            if w.is_zero() {
                continue;
            }
            let e = tau.entry(m).or_insert_with(|| GradedSeries::zero(trunc));
            *e = e.add(&w);
        }
    }
    tau
}

fn factorial_rat(n: u64) -> Rat {
    crate::series::factorial(n)
}

/// `V'_eff(x(z)) = x(z) - sum_m tau_m x(z)^{m-1}` as a Laurent polynomial.
pub fn v_prime_on_curve(
    frame: &ZhukovskyFrame,
    tau: &BTreeMap<u32, GradedSeries>,
) -> ZRational {
    let mut v = frame.x_of_z();
    for (&m, tm) in tau {
        v = v.sub(&frame.x_pow(m - 1).scale(tm));
    }
    v
}

/// Solve the two endpoint conditions `v_0 = 0`, `gamma v_1 = t` by Newton
/// iteration in the graded ring.
pub fn solve_endpoints(
    spec: &WeightSpec,
    tau: &BTreeMap<u32, GradedSeries>,
) -> Result<ZhukovskyFrame, SpectralError> {
    let trunc = spec.truncation;
    let t = GradedSeries::u_term(Rat::one(), 2, trunc);
    let mut frame = ZhukovskyFrame::gaussian(trunc);
    for _ in 0..(trunc + 3) {
        let v = v_prime_on_curve(&frame, tau);
        let f1 = v.laurent_coeff(0);
        let f2 = frame.gamma.mul(&v.laurent_coeff(1)).sub(&t);
        if f1.is_zero() && f2.is_zero() {
            return Ok(frame);
        }
        // dV'/dalpha = 1 - sum tau_m (m-1) x^{m-2};  dV'/dgamma = (z + 1/z) * same
        let mut dv = ZRational::one(trunc);
        for (&m, tm) in tau {
            if m >= 2 {
                dv = dv.sub(&frame.x_pow(m - 2).scale(&tm.scale(&rat(m as i64 - 1))));
            }
        }
        let s = ZRational::monomial(1, GradedSeries::one(trunc))
            .add(&ZRational::monomial(-1, GradedSeries::one(trunc)));
        let dv_gamma = dv.mul(&s);
        let j11 = dv.laurent_coeff(0);
        let j12 = dv_gamma.laurent_coeff(0);
        let j21 = frame.gamma.mul(&dv.laurent_coeff(1));
        let j22 = v
            .laurent_coeff(1)
            .add(&frame.gamma.mul(&dv_gamma.laurent_coeff(1)));
        let det = j11.mul(&j22).sub(&j12.mul(&j21));
        let det_inv = det.invert_leading();
        let da = j22.mul(&f1).sub(&j12.mul(&f2)).mul(&det_inv);
        let dg = j11.mul(&f2).sub(&j21.mul(&f1)).mul(&det_inv);
        frame = ZhukovskyFrame {
            alpha: frame.alpha.sub(&da),
            gamma: frame.gamma.sub(&dg),
        };
    }
    // converged iff both conditions vanish now
    let v = v_prime_on_curve(&frame, tau);
    if v.laurent_coeff(0).is_zero()
        && frame.gamma.mul(&v.laurent_coeff(1)).sub(&t).is_zero()
    {
        Ok(frame)
    } else {
        Err(SpectralError::NonConvergence)
    }
}

/// Solve the disk problem: graded fixed point over
/// (moments -> effective weights -> one-cut frame -> disk form -> moments).
pub fn solve_disk(spec: &WeightSpec) -> Result<DiskSolution, SpectralError> {
    let trunc = spec.truncation;
    let max_p = spec.max_perimeter();
    let mut moments: BTreeMap<u32, GradedSeries> = BTreeMap::new();
    let mut prev: Option<Form1> = None;
    for _round in 0..=(trunc + 1) {
        let tau = effective_weights(spec, &moments);
        let frame = solve_endpoints(spec, &tau)?;
        let v = v_prime_on_curve(&frame, &tau);
        // w(z) = sum_{j>=1} v_j z^{-j}; conditions force v_0 = 0
        let mut w = ZRational::zero(trunc);
        for (&j, c) in v.laurent_terms() {
            if j >= 1 {
                w = w.add(&ZRational::monomial(-j, c.clone()));
            }
        }
        let w10 = Form1::new(w.mul(&frame.dx().f));
        let mut new_moments = BTreeMap::new();
        for l in 1..=max_p {
            new_moments.insert(l, moment(&frame, &w10, l));
        }
        let stable = prev.as_ref() == Some(&w10);
        eprintln!("disk round {}: stable={} w10={:?}", _round, stable, w10.f);
        moments = new_moments;
        prev = Some(w10.clone());
        if stable {
            let t = GradedSeries::u_term(Rat::one(), 2, trunc);
            debug_assert!(w10.residue_at(&Point::Infinity).add(&t).is_zero());
            return Ok(DiskSolution {
                spec: spec.clone(),
                frame,
                w10,
                eff_tau: tau,
                moments,
            });
        }
    }
    Err(SpectralError::NonConvergence)
}

/// The master operator and its symmetrized sibling, reduced to exact
/// pairing data: `O phi = sum weight(m1, m2) x^{m1-1} dx * (contour of
/// x^{m2} phi)`, where the weights absorb the cell couplings, symmetry
/// factors and closed disk moments.
#[derive(Clone, Debug)]
pub struct MasterOperator {
    pub truncation: u32,
    /// 1/(k-2)! weights (the operator acting on higher correlators).
    pub o_pairs: BTreeMap<(u32, u32), GradedSeries>,
    /// 1/(k-1)! weights (the disk-equation operator).
    pub o_tilde_pairs: BTreeMap<(u32, u32), GradedSeries>,
}

pub fn build_operator(spec: &WeightSpec, disk: &DiskSolution) -> MasterOperator {
    let trunc = spec.truncation;
    let mut o_pairs: BTreeMap<(u32, u32), GradedSeries> = BTreeMap::new();
    let mut o_tilde_pairs: BTreeMap<(u32, u32), GradedSeries> = BTreeMap::new();
    for cell in spec.cement_cells() {
        let k = cell.k();
        let var = GradedSeries::from_monomial(
            crate::series::Monomial::cell(cell.clone()),
            Rat::one(),
            trunc,
        );
        for tuple in cell.ordered_tuples() {
            let m1 = tuple[0];
            let m2 = tuple[1];
            let mut w = var.scale(&rat(m2 as i64).recip());
            for &mj in &tuple[2..] {
                let g = disk
                    .moments
                    .get(&mj)
                    .cloned()
                    .unwrap_or_else(|| GradedSeries::zero(trunc));
                w = w.mul(&g.scale(&rat(mj as i64).recip()));
            }
            if w.is_zero() {
                continue;
            }
            let wt = w.scale(&factorial_rat(k as u64 - 1).recip());
            let e = o_tilde_pairs
                .entry((m1, m2))
                .or_insert_with(|| GradedSeries::zero(trunc));
            *e = e.add(&wt);
            let wo = w.scale(&factorial_rat(k as u64 - 2).recip());
            let e = o_pairs
                .entry((m1, m2))
                .or_insert_with(|| GradedSeries::zero(trunc));
            *e = e.add(&wo);
        }
    }
    MasterOperator { truncation: trunc, o_pairs, o_tilde_pairs }
}

impl MasterOperator {
    fn pairs(&self, tilde: bool) -> &BTreeMap<(u32, u32), GradedSeries> {
        if tilde {
            &self.o_tilde_pairs
        } else {
            &self.o_pairs
        }
    }

    /// Apply to a single-variable 1-form.
    pub fn apply(&self, frame: &ZhukovskyFrame, phi: &Form1, tilde: bool) -> Form1 {
        let mut out = Form1::zero(self.truncation);
        let mut moments: BTreeMap<u32, GradedSeries> = BTreeMap::new();
        for (&(m1, m2), w) in self.pairs(tilde) {
            let mphi = moments
                .entry(m2)
                .or_insert_with(|| Form1::new(frame.x_pow(m2).mul(&phi.f)).contour_unit())
                .clone();
            if mphi.is_zero() {
                continue;
            }
            let xm = frame.x_pow(m1 - 1).mul(&frame.dx().f);
            out = out.add(&Form1::new(xm.scale(&w.mul(&mphi))));
        }
        out
    }

    /// Apply on one slot of an n-variable form (other slots untouched).
    pub fn apply_slot(&self, frame: &ZhukovskyFrame, form: &NForm, slot: usize, tilde: bool) -> NForm {
        let mut out = NForm::zero(form.n, form.truncation);
        for (b, rest) in form.split_slot(slot) {
            let phi = Form1::new(b.to_zrational(GradedSeries::one(form.truncation)));
            let image = self.apply(frame, &phi, tilde);
            for (b2, c2) in split_zr(&image.f) {
                let mut piece = rest.scale(&c2);
                piece = piece.insert_slot(slot, &b2);
                out = out.add(&piece);
            }
        }
        out
    }

    /// `O` applied to the Bergman kernel in its first slot: an exact
    /// separable 2-form.
    pub fn apply_bergman_slot0(&self, frame: &ZhukovskyFrame) -> NForm {
        let mut out = NForm::zero(2, self.truncation);
        for (&(m1, m2), w) in self.pairs(false) {
            let slot0 = frame.x_pow(m1 - 1).mul(&frame.dx().f).scale(w);
            let slot1 = bergman_moment(frame, m2);
            if slot1.is_zero() {
                continue;
            }
            out.add_outer(&[slot0, slot1], &GradedSeries::one(self.truncation));
        }
        out
    }

    pub fn is_trivial(&self) -> bool {
        self.o_pairs.is_empty()
    }
}

pub fn split_zr(f: &ZRational) -> Vec<(SlotBasis, GradedSeries)> {
    let mut v = Vec::new();
    for (k, c) in f.laurent_terms() {
        v.push((SlotBasis::Pow(*k), c.clone()));
    }
    for a in f.pole_points().cloned().collect::<Vec<_>>() {
        for j in 1..=f.max_pole_order(&a) {
            let c = f.pole_coeff(&a, j);
            if !c.is_zero() {
                v.push((SlotBasis::Pole(a.clone(), j), c));
            }
        }
    }
    v
}

/// `(1/2 pi i) oint x(zeta)^m B(zeta, z) d zeta`: the unit-circle pairing of
/// the Bergman kernel against a power of `x`, as a rational function of the
/// spectator (times an implicit `dz`).
pub fn bergman_moment(frame: &ZhukovskyFrame, m: u32) -> ZRational {
    let xm = frame.x_pow(m);
    let mut out = ZRational::zero(frame.truncation());
    for (&j, c) in xm.laurent_terms() {
        if j >= 1 {
            out = out.add(&ZRational::monomial(-j - 1, c.scale(&rat(j))));
        }
    }
    out
}

/// The antidiagonal moment: `(1/2 pi i) oint x(zeta)^m W_2^0-antidiag(zeta, z)`
/// where the antidiagonal kernel is `d zeta d z / (1 - zeta z)^2`. Returns
/// the coefficient of the spectator's `dz`.
pub fn antidiag_moment(frame: &ZhukovskyFrame, m: u32) -> ZRational {
    let trunc = frame.truncation();
    // residue at zeta = 1/z: m x(z)^{m-1} gamma (1 - z^2) / z^2
    let mut out = ZRational::zero(trunc);
    if m >= 1 {
        let xm1 = frame.x_pow(m - 1);
        let pre = ZRational::monomial(-2, frame.gamma.clone())
            .sub(&ZRational::constant(frame.gamma.clone()));
        out = out.add(&xm1.mul(&pre).scale_rat(&rat(m as i64)));
    }
    // residue at zeta = 0: sum_{j>=1} j s_j z^{j-1}
    let xm = frame.x_pow(m);
    for (&j, c) in xm.laurent_terms() {
        if j >= 1 {
            out = out.add(&ZRational::monomial(j - 1, c.scale(&rat(j))));
        }
    }
    out
}

/// The cylinder: `omega_2^0 = Bergman + C` with `C` separable, plus the
/// primitive data of the local Cauchy kernel.
#[derive(Clone, Debug)]
pub struct CylinderSolution {
    /// Separable correction `C(z1, z2)` (both slots carry `dz`).
    pub correction: NForm,
    /// `G_C(z0, z)`: `z0` slot is a 1-form basis, `z` slot a plain function;
    /// `G(z0, z) = dz0/(z - z0) + G_C`.
    pub cauchy_correction: NForm,
}

impl CylinderSolution {
    pub fn bergman_prefactor(&self, trunc: u32) -> GradedSeries {
        GradedSeries::one(trunc)
    }
}

/// Solve `S_{z1} C = - O_{z1} (B + C)` order by order. Uniqueness: the only
/// exterior-holomorphic solution of `S eta = 0` with a power-series
/// expansion is zero, so the Laurent-mode solve below is the solution.
pub fn solve_cylinder(
    spec: &WeightSpec,
    disk: &DiskSolution,
    op: &MasterOperator,
) -> Result<CylinderSolution, SpectralError> {
    let trunc = spec.truncation;
    let mut c = NForm::zero(2, trunc);
    for round in 0..=(trunc + 1) {
        let mut eta = op.apply_bergman_slot0(&disk.frame);
        eta = eta.add(&op.apply_slot(&disk.frame, &c, 0, false));
        eta = eta.neg();
        let c_new = solve_s_modes(&eta, 0)?;
        if c_new == c {
            break;
        }
        if round == trunc + 1 {
            return Err(SpectralError::NonConvergence);
        }
        c = c_new;
    }
    let cauchy_correction = cauchy_primitive(&c)?;
    Ok(CylinderSolution { correction: c, cauchy_correction })
}

/// Given an iota-invariant inhomogeneity `eta` in the chosen slot (a Laurent
/// 1-form there), return the unique solution of `S_slot C = eta` that is
/// holomorphic outside the unit disk and vanishes at infinity.
///
/// In modes `e_j = z^{j-1} dz`: eta = sum_j eta_j e_j with eta_{-j} = -eta_j
/// (this is exactly iota-invariance of the form), and the solution is
/// `C = -sum_{j>=1} eta_j e_{-j}`.
pub fn solve_s_modes(eta: &NForm, slot: usize) -> Result<NForm, SpectralError> {
    if !eta.iota_pull_slot(slot).sub(eta).is_zero() {
        return Err(SpectralError::NonConvergence);
    }
    let mut out = NForm::zero(eta.n, eta.truncation);
    for (b, rest) in eta.split_slot(slot) {
        let p = match b {
            SlotBasis::Pow(p) => p,
            SlotBasis::Pole(_, _) => return Err(SpectralError::NonConvergence),
        };
        let j = p + 1;
        if j == 0 {
            // iota-invariance already forces a vanishing e_0 mode
            return Err(SpectralError::NonConvergence);
        }
        if j >= 1 {
            let piece = rest.neg().insert_slot(slot, &SlotBasis::Pow(-j - 1));
            out = out.add(&piece);
        }
    }
    Ok(out)
}

/// `-int^z C(z0, .)`: primitive over the second slot, constants fixed by
/// dropping any `z^0` part. Fails with a residue obstruction if `C` carries
/// a `dz/z` mode, which a true cylinder never does.
fn cauchy_primitive(c: &NForm) -> Result<NForm, SpectralError> {
    let mut out = NForm::zero(2, c.truncation);
    for (b, rest) in c.split_slot(1) {
        let p = match b {
            SlotBasis::Pow(p) => p,
            SlotBasis::Pole(_, _) => return Err(SpectralError::ResidueObstruction),
        };
        if p == -1 {
            return Err(SpectralError::ResidueObstruction);
        }
        // primitive of z^p dz = z^{p+1}/(p+1)
        let piece = rest
            .scale(&GradedSeries::from_rat(rat(p + 1).recip(), c.truncation))
            .insert_slot(1, &SlotBasis::Pow(p + 1));
        out = out.add(&piece.neg());
    }
    Ok(out)
}

/// `y(z) dx(z) = Delta W_1^0 / 2`: the antisymmetric part of the disk form.
/// Checks that the zeros at the branch points stay simple at leading order.
pub fn y_function(disk: &DiskSolution) -> Result<Form1, SpectralError> {
    let ydx = disk.w10.op_delta().scale(&GradedSeries::from_rat(
        crate::series::ratio(1, 2),
        disk.spec.truncation,
    ));
    // Delta w10 / dz has double zeros at +-1; the quadratic coefficient must
    // be a u-unit at leading order.
    for plus in [true, false] {
        let a = if plus { Rat::one() } else { -Rat::one() };
        let ts = ydx.f.taylor_at(&a, 2);
        if !ts.coeff(0).is_zero() || !ts.coeff(1).is_zero() {
            return Err(SpectralError::DegenerateBranchPoint);
        }
        if ts.coeff(2).graded_part(0).is_zero() {
            return Err(SpectralError::DegenerateBranchPoint);
        }
    }
    Ok(ydx)
}

/// Bare one-cell potential `T_1^0(x) = -x^2/2 + sum_m t^0_m x^m / m` pulled
/// back to the curve (the disk-equation inhomogeneity).
pub fn t10_on_curve(spec: &WeightSpec, frame: &ZhukovskyFrame) -> ZRational {
    let trunc = spec.truncation;
    let mut t = frame.x_pow(2).scale_rat(&crate::series::ratio(-1, 2));
    for cell in spec.disc_cells() {
        let m = cell.perimeters[0];
        let var = GradedSeries::from_monomial(
            crate::series::Monomial::cell(cell.clone()),
            Rat::one(),
            trunc,
        );
        t = t.add(&frame.x_pow(m).scale(&var.scale(&rat(m as i64).recip())));
    }
    t
}

/// Exact residual of the boxed disk identity
/// `S W_1^0 + O~ W_1^0 + d T_1^0(x(z)) = 0`.
pub fn disk_equation_residual(
    spec: &WeightSpec,
    disk: &DiskSolution,
    op: &MasterOperator,
) -> Form1 {
    let s = disk.w10.op_s();
    let ot = op.apply(&disk.frame, &disk.w10, true);
    let dt = Form1::d(&t10_on_curve(spec, &disk.frame));
    s.add(&ot).add(&dt)
}

/// The coincident value `W_2^0(x(z), x(z))` as a rational function: the
/// separable correction evaluated on the diagonal plus the Schwarzian
/// defect of the Bergman kernel against the `x`-diagonal.
pub fn w20_coincident(
    frame: &ZhukovskyFrame,
    cyl: &CylinderSolution,
) -> ZRational {
    let trunc = frame.truncation();
    // C(z, z) / dx(z)^2
    let mut diag = ZRational::zero(trunc);
    for (key, coeff) in cyl.correction.terms() {
        let f0 = key[0].to_zrational(GradedSeries::one(trunc));
        let f1 = key[1].to_zrational(GradedSeries::one(trunc));
        diag = diag.add(&f0.mul(&f1).scale(coeff));
    }
    // lim [B - dx dx/(x-x)^2] / dz^2 = -S(x)/6
    let schw = frame.schwarzian().scale_rat(&crate::series::ratio(-1, 6));
    let total = diag.add(&schw);
    let inv_dx = frame.div_dx(&Form1::new(ZRational::one(trunc)));
    total.mul(&inv_dx).mul(&inv_dx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{catalan, Oracle, OracleQuery};
    use crate::series::Monomial;

    #[test]
    fn gaussian_disk_is_catalan() {
        let spec = WeightSpec::gaussian(2);
        let disk = solve_disk(&spec).unwrap();
        assert_eq!(disk.frame, ZhukovskyFrame::gaussian(2));
        for m in 1..=5u64 {
            let g = moment(&disk.frame, &disk.w10, 2 * m as u32);
            let expect = GradedSeries::u_term(catalan(m), 2 * (m as i64 + 1), 2);
            assert_eq!(g, expect, "G_{}", 2 * m);
        }
        // odd moments vanish
        assert!(moment(&disk.frame, &disk.w10, 3).is_zero());
        // residue -t at infinity
        let t = GradedSeries::u_term(Rat::one(), 2, 2);
        assert!(disk.w10.residue_at(&Point::Infinity).add(&t).is_zero());
    }

    fn check_disk_against_oracle(spec: &WeightSpec, max_l: u32) {
        let disk = solve_disk(spec).unwrap();
        let oracle = Oracle::new(16);
        for l in 1..=max_l {
            let g = moment(&disk.frame, &disk.w10, l);
            for mono in crate::verify::monomials_up_to(spec, spec.truncation) {
                let q = OracleQuery {
                    n: 1,
                    g: 0,
                    perimeters: vec![l],
                    monomial: mono.clone(),
                };
                let got = g
                    .terms()
                    .find(|(m, _)| m.cells == mono.cells)
                    .map(|(m, c)| (m.upow, c.clone()));
                match oracle.stuffed_coeff(&q) {
                    Ok((upow, c)) if !c.is_zero() => {
                        assert_eq!(
                            got,
                            Some((upow, c)),
                            "disk moment l={} monomial={}",
                            l,
                            mono
                        );
                    }
                    Ok(_) => {
                        assert!(got.is_none(), "expected zero at l={} {}", l, mono);
                    }
                    Err(_) => {}
                }
            }
        }
    }

    #[test]
    fn triangle_disk_matches_oracle() {
        let spec = WeightSpec::new(vec![CellWeightVar::new(0, vec![3])], 2);
        check_disk_against_oracle(&spec, 5);
    }

    #[test]
    fn quadrangle_disk_matches_oracle() {
        let spec = WeightSpec::new(vec![CellWeightVar::new(0, vec![4])], 2);
        check_disk_against_oracle(&spec, 4);
    }

    #[test]
    fn two_two_cell_disk_matches_oracle() {
        let spec = WeightSpec::new(vec![CellWeightVar::new(0, vec![2, 2])], 2);
        check_disk_against_oracle(&spec, 4);
    }

    #[test]
    fn one_one_cell_disk_is_gaussian() {
        // all chunks of odd perimeter vanish, so the disk stays Gaussian
        let spec = WeightSpec::new(vec![CellWeightVar::new(0, vec![1, 1])], 2);
        let disk = solve_disk(&spec).unwrap();
        assert_eq!(disk.frame, ZhukovskyFrame::gaussian(2));
        check_disk_against_oracle(&spec, 4);
    }

    #[test]
    fn effective_weight_first_order() {
        // single weight t^0_{2,2}: tau_2 = t^0_{2,2} G_2 / 2 at first order
        let cell = CellWeightVar::new(0, vec![2, 2]);
        let spec = WeightSpec::new(vec![cell.clone()], 1);
        let disk = solve_disk(&spec).unwrap();
        let tau2 = disk.eff_tau.get(&2).unwrap();
        let g2 = GradedSeries::u_term(Rat::one(), 4, 1);
        let expect = GradedSeries::from_monomial(Monomial::cell(cell), Rat::one(), 1)
            .mul(&g2)
            .scale(&crate::series::ratio(1, 2));
        assert_eq!(tau2, &expect);
    }

    #[test]
    fn disk_boxed_identity() {
        for spec in [
            WeightSpec::gaussian(2),
            WeightSpec::new(vec![CellWeightVar::new(0, vec![3])], 2),
            WeightSpec::new(vec![CellWeightVar::new(0, vec![2, 2])], 2),
            WeightSpec::new(vec![CellWeightVar::new(0, vec![1, 1, 2])], 2),
        ] {
            let disk = solve_disk(&spec).unwrap();
            let op = build_operator(&spec, &disk);
            let r = disk_equation_residual(&spec, &disk, &op);
            assert!(r.is_zero(), "disk identity fails for {:?}", spec.active);
        }
    }

    #[test]
    fn gaussian_cylinder_is_pure_bergman() {
        let spec = WeightSpec::gaussian(2);
        let disk = solve_disk(&spec).unwrap();
        let op = build_operator(&spec, &disk);
        let cyl = solve_cylinder(&spec, &disk, &op).unwrap();
        assert!(cyl.correction.is_zero());
        assert!(cyl.cauchy_correction.is_zero());
    }

    #[test]
    fn cylinder_correction_one_one_cell() {
        // C at order 1 for t^0_{1,1} is u^2 (dz1/z1^2)(dz2/z2^2)
        let cell = CellWeightVar::new(0, vec![1, 1]);
        let spec = WeightSpec::new(vec![cell.clone()], 1);
        let disk = solve_disk(&spec).unwrap();
        let op = build_operator(&spec, &disk);
        let cyl = solve_cylinder(&spec, &disk, &op).unwrap();
        let mut expect = NForm::zero(2, 1);
        let s = GradedSeries::from_monomial(Monomial::cell(cell), Rat::one(), 1)
            .mul(&GradedSeries::u_term(Rat::one(), 2, 1));
        expect.add_outer(
            &[
                ZRational::monomial(-2, GradedSeries::one(1)),
                ZRational::monomial(-2, GradedSeries::one(1)),
            ],
            &s,
        );
        assert_eq!(cyl.correction, expect);
    }

    #[test]
    fn cylinder_symmetry() {
        for spec in [
            WeightSpec::new(vec![CellWeightVar::new(0, vec![2, 2])], 2),
            WeightSpec::new(vec![CellWeightVar::new(0, vec![1, 1])], 2),
            WeightSpec::new(vec![CellWeightVar::new(0, vec![1, 1, 2])], 2),
        ] {
            let disk = solve_disk(&spec).unwrap();
            let op = build_operator(&spec, &disk);
            let cyl = solve_cylinder(&spec, &disk, &op).unwrap();
            assert_eq!(
                cyl.correction,
                cyl.correction.permuted(&[1, 0]),
                "cylinder correction must be symmetric for {:?}",
                spec.active
            );
        }
    }

    #[test]
    fn zero_inhomogeneity_gives_zero() {
        let eta = NForm::zero(2, 2);
        assert!(solve_s_modes(&eta, 0).unwrap().is_zero());
    }

    #[test]
    fn y_function_gaussian() {
        // Delta w10 / 2 = -(u^2/2) z (1 - z^{-2})^2 dz, evaluated pointwise
        let spec = WeightSpec::gaussian(2);
        let disk = solve_disk(&spec).unwrap();
        let y = y_function(&disk).unwrap();
        let z0 = crate::series::ratio(7, 3);
        let val = &z0 * (Rat::one() - z0.recip() * z0.recip()).pow(2);
        let expect = GradedSeries::u_term(crate::series::ratio(-1, 2) * val, 2, 2);
        assert_eq!(y.f.eval(&z0), expect);
    }

    #[test]
    fn degenerate_branch_point_detected() {
        // force gamma * v_1 - t to lose its double zero by a crafted tau:
        // with tau_2 = 1 (a rational substitution of t^0_2 = 1), the
        // endpoint equations still solve formally, but the y-form test needs
        // a genuinely non-tame input; instead check the guard directly on a
        // mutated form.
        let spec = WeightSpec::gaussian(1);
        let disk = solve_disk(&spec).unwrap();
        let mut bad = disk.clone();
        // replace w10 by an iota-invariant form: Delta = 0 everywhere
        bad.w10 = disk.w10.op_s();
        assert_eq!(
            y_function(&bad).unwrap_err(),
            SpectralError::DegenerateBranchPoint
        );
    }
}
