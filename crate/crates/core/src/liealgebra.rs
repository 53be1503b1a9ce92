//! Closed-form logarithms of near-identity transfer-matrix powers, the
//! bracket and difference families built from them, the two determinants
//! whose non-vanishing certifies that the generated Lie algebra is all of
//! 𝔰𝔭₂(ℝ), and the grid scan that locates the exceptional energies where
//! the certificate breaks down.
//!
//! Writing A = A₀^ω(E)^m with both rotation angles m·r_l within (−π/2, π/2)
//! of a multiple of 2π, the principal logarithm has the closed form
//! LA = R_ω · N · R_ωᵀ with N carrying α_l = −θ_l r_l and β_l = θ_l / r_l
//! on the anti-diagonal blocks. Brackets of the four corner logarithms span
//! a 4-dimensional block subspace V₁; differences and their brackets with
//! three constant elements span the complementary 6-dimensional subspace V₂.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::diophantine::{branch_dist, near_identity_power, near_identity_power_excluding, TWO_PI};
use crate::linalg::{
    det, frobenius, identity, lie_bracket, mat_mul, mat_sub, matrix_pow, rank_with_tolerance,
    transpose, Mat4, Sp2Element,
};
use crate::transfer::{radii, rotation4, transfer_matrix, OmegaPair, OMEGA_CORNERS};
use crate::Error;

/// Relative singular-value cutoff for the rank of the ten-element family.
const RANK_RELATIVE_TOL: f64 = 1e-8;

/// Closed-form logarithm of A₀^ω(E)^m together with its construction data.
#[derive(Debug, Clone, PartialEq)]
pub struct LogTransfer {
    pub la: Sp2Element,
    /// α_l = −θ_l r_l (lower-left block of the core matrix).
    pub alpha: (f64, f64),
    /// β_l = θ_l / r_l (upper-right block); α_l = −β_l r_l².
    pub beta: (f64, f64),
    /// Nearest integers x_l to m r_l / 2π.
    pub xints: (i64, i64),
    pub m: u64,
    pub omega: OmegaPair,
    pub energy: f64,
}

/// Core-matrix assembly shared by the guarded logarithm and by tests that
/// substitute free integers for the x_l.
pub(crate) fn assemble_la(omega: OmegaPair, r: (f64, f64), th: (f64, f64)) -> Mat4 {
    let al = (-th.0 * r.0, -th.1 * r.1);
    let be = (th.0 / r.0, th.1 / r.1);
    let mut n = [[0.0; 4]; 4];
    n[0][2] = be.0;
    n[1][3] = be.1;
    n[2][0] = al.0;
    n[3][1] = al.1;
    let r4 = rotation4(&eigenbasis(omega));
    mat_mul(&mat_mul(&r4, &n), &transpose(&r4))
}

fn eigenbasis(omega: OmegaPair) -> crate::linalg::Mat2 {
    crate::transfer::eigendecompose(&crate::transfer::potential_matrix(omega)).s
}

/// Principal logarithm of A₀^ω(E)^m in closed form.
///
/// Guards: each rotation angle m·r_l must stay at distance > 0.1 from the
/// branch cut (π mod 2π), and each residual θ_l = m r_l − 2π x_l must have
/// magnitude < π/2 so that the nearest-integer branch choice is consistent.
pub fn log_transfer_closed(energy: f64, omega: OmegaPair, m: u64) -> Result<LogTransfer, Error> {
    assert!(m >= 1, "power must be positive");
    let (r1, r2) = radii(energy, omega)?;
    let mf = m as f64;
    let x1 = (mf * r1 / TWO_PI + 0.5).floor();
    let x2 = (mf * r2 / TWO_PI + 0.5).floor();
    let th1 = mf * r1 - TWO_PI * x1;
    let th2 = mf * r2 - TWO_PI * x2;
    if branch_dist(mf * r1) <= 0.1 || branch_dist(mf * r2) <= 0.1 {
        return Err(Error::BranchCut);
    }
    if th1.abs() >= core::f64::consts::FRAC_PI_2 || th2.abs() >= core::f64::consts::FRAC_PI_2 {
        return Err(Error::FloorParity);
    }
    let la = assemble_la(omega, (r1, r2), (th1, th2));
    Ok(LogTransfer {
        la: Sp2Element::from_matrix(la),
        alpha: (-th1 * r1, -th2 * r2),
        beta: (th1 / r1, th2 / r2),
        xints: (x1 as i64, x2 as i64),
        m,
        omega,
        energy,
    })
}

/// Constant elements whose brackets with the difference family fill out V₂.
pub const Z1: Mat4 = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, -1.0, 0.0],
    [0.0, 0.0, 0.0, 0.0],
];
pub const Z2: Mat4 = [
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, -1.0],
];
pub const Z3: Mat4 = [
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, -1.0, 0.0],
];

fn check_shared_energy(logs: &[LogTransfer; 4]) -> Result<(), Error> {
    let e = logs[0].energy;
    if logs.iter().any(|l| l.energy != e) {
        return Err(Error::MixedEnergy);
    }
    Ok(())
}

/// The four brackets of corner logarithms spanning V₁, in the order
/// [L₁₀,L₀₀], [L₀₁,L₀₀], [L₁₀,L₁₁], [L₀₁,L₁₁].
///
/// `logs` must be in corner order (0,0), (1,0), (0,1), (1,1) and share one
/// energy.
pub fn upsilon_brackets(logs: &[LogTransfer; 4]) -> Result<[Sp2Element; 4], Error> {
    check_shared_energy(logs)?;
    let m = |i: usize| &logs[i].la.entries;
    Ok([
        Sp2Element::from_matrix(lie_bracket(m(1), m(0))),
        Sp2Element::from_matrix(lie_bracket(m(2), m(0))),
        Sp2Element::from_matrix(lie_bracket(m(1), m(3))),
        Sp2Element::from_matrix(lie_bracket(m(2), m(3))),
    ])
}

/// The six elements spanning V₂: three differences of corner logarithms and
/// their brackets with the constants Z₁, Z₂, Z₃.
pub fn theta_matrices(logs: &[LogTransfer; 4]) -> Result<[Sp2Element; 6], Error> {
    check_shared_energy(logs)?;
    let m = |i: usize| &logs[i].la.entries;
    let t1 = mat_sub(m(1), m(0));
    let t2 = mat_sub(m(1), m(3));
    let t3 = mat_sub(m(2), m(0));
    let t4 = lie_bracket(&t1, &Z1);
    let t5 = lie_bracket(&t2, &Z2);
    let t6 = lie_bracket(&t3, &Z3);
    Ok([
        Sp2Element::from_matrix(t1),
        Sp2Element::from_matrix(t2),
        Sp2Element::from_matrix(t3),
        Sp2Element::from_matrix(t4),
        Sp2Element::from_matrix(t5),
        Sp2Element::from_matrix(t6),
    ])
}

/// Deviation from the V₁ block form diag(A, −ᵗA): largest off-diagonal-block
/// entry or mismatch between the diagonal blocks.
pub fn v1_form_defect(x: &Mat4) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            worst = worst.max(x[i][2 + j].abs());
            worst = worst.max(x[2 + i][j].abs());
            worst = worst.max((x[2 + i][2 + j] + x[j][i]).abs());
        }
    }
    worst
}

/// Deviation from the V₂ anti-block form: largest diagonal-block entry or
/// asymmetry of the off-diagonal blocks.
pub fn v2_form_defect(x: &Mat4) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            worst = worst.max(x[i][j].abs());
            worst = worst.max(x[2 + i][2 + j].abs());
        }
    }
    worst.max((x[0][3] - x[1][2]).abs()).max((x[2][1] - x[3][0]).abs())
}

/// Determinant of the 4×4 matrix whose column i holds the upper-left block
/// entries (Υᵢ₁₁, Υᵢ₁₂, Υᵢ₂₁, Υᵢ₂₂).
pub fn f1_determinant(upsilons: &[Sp2Element; 4]) -> f64 {
    f1_with_scale(upsilons).0
}

/// Raw determinant plus the scale-free version divided by the product of
/// column norms (0 if any column vanishes).
pub fn f1_with_scale(upsilons: &[Sp2Element; 4]) -> (f64, f64) {
    let mut c = [[0.0; 4]; 4];
    for (i, u) in upsilons.iter().enumerate() {
        let e = &u.entries;
        c[0][i] = e[0][0];
        c[1][i] = e[0][1];
        c[2][i] = e[1][0];
        c[3][i] = e[1][1];
    }
    let raw = det(&c);
    let mut p = 1.0;
    for i in 0..4 {
        let mut s = 0.0;
        for row in &c {
            s += row[i] * row[i];
        }
        p *= s.sqrt();
    }
    (raw, if p > 0.0 { raw / p } else { 0.0 })
}

/// Determinant of the 6×6 matrix whose column j holds the lower-left and
/// upper-right block entries (Θⱼ₃₁, Θⱼ₃₂, Θⱼ₄₂, Θⱼ₁₃, Θⱼ₁₄, Θⱼ₂₄).
pub fn f2_determinant(thetas: &[Sp2Element; 6]) -> f64 {
    f2_with_scale(thetas).0
}

/// Raw determinant plus the scale-free version divided by the product of
/// column norms (0 if any column vanishes).
pub fn f2_with_scale(thetas: &[Sp2Element; 6]) -> (f64, f64) {
    let mut c = [[0.0; 6]; 6];
    for (j, t) in thetas.iter().enumerate() {
        let e = &t.entries;
        c[0][j] = e[2][0];
        c[1][j] = e[2][1];
        c[2][j] = e[3][1];
        c[3][j] = e[0][2];
        c[4][j] = e[0][3];
        c[5][j] = e[1][3];
    }
    let raw = det(&c);
    let mut p = 1.0;
    for j in 0..6 {
        let mut s = 0.0;
        for row in &c {
            s += row[j] * row[j];
        }
        p *= s.sqrt();
    }
    (raw, if p > 0.0 { raw / p } else { 0.0 })
}

/// Outcome of the density certificate at one energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Both determinants clear the tolerance and the ten elements have rank
    /// 10: the corner logarithms span all of 𝔰𝔭₂(ℝ).
    CertifiedDense,
    /// The numerical certificate failed; says nothing about the truth.
    Degenerate,
    /// A power m·r_l landed near the logarithm's branch cut; no certificate
    /// can be formed at this energy with these powers.
    InS1,
}

impl core::fmt::Display for Verdict {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Verdict::CertifiedDense => "CERTIFIED_DENSE",
            Verdict::Degenerate => "DEGENERATE",
            Verdict::InS1 => "IN_S1",
        })
    }
}

/// Density certificate: determinants, rank, the four powers, and a verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanCertificate {
    pub energy: f64,
    /// Raw determinant of the V₁ column matrix.
    pub f1: f64,
    /// Raw determinant of the V₂ column matrix.
    pub f2: f64,
    /// f1 divided by the product of column norms; the verdict threshold
    /// `tol_f` applies to this scale-free value.
    pub f1_scaled: f64,
    /// f2 divided by the product of column norms.
    pub f2_scaled: f64,
    /// Rank (0–10) of the ten elements over their 𝔰𝔭₂ coordinates.
    pub rank: u32,
    /// Powers m for the corners (0,0), (1,0), (0,1), (1,1).
    pub powers: [u64; 4],
    pub verdict: Verdict,
}

/// Runs the full certificate pipeline at one energy: find near-identity
/// powers for all four corner couplings (forcing m₁₀ ≠ m₁₁ by doubling or
/// re-searching), take closed-form logarithms, and evaluate the two
/// determinants and the rank of the ten-element family.
///
/// E must exceed 2 (the largest corner eigenvalue) for all four transfer
/// matrices to exist.
pub fn span_certificate(
    energy: f64,
    delta: f64,
    m_max: u64,
    tol_f: f64,
) -> Result<SpanCertificate, Error> {
    if energy <= 2.0 {
        return Err(Error::EnergyBelowSpectrum);
    }
    let mut powers = [0u64; 4];
    for (i, &w) in OMEGA_CORNERS.iter().enumerate() {
        let (m, _) = near_identity_power(energy, w, delta, m_max)?;
        powers[i] = m;
    }
    if powers[1] == powers[3] {
        // corners (1,0) and (1,1) share a power; the determinant f2 vanishes
        // identically in that case, so force them apart: try doubling first,
        // then fall back to a fresh search that skips the colliding value.
        let w10 = OMEGA_CORNERS[1];
        let doubled = 2 * powers[1];
        let (r1, r2) = radii(energy, w10)?;
        let mf = doubled as f64;
        let x1 = (mf * r1 / TWO_PI + 0.5).floor();
        let x2 = (mf * r2 / TWO_PI + 0.5).floor();
        let th1 = mf * r1 - TWO_PI * x1;
        let th2 = mf * r2 - TWO_PI * x2;
        let guards_ok = th1.abs() < core::f64::consts::FRAC_PI_2
            && th2.abs() < core::f64::consts::FRAC_PI_2
            && branch_dist(mf * r1) > 0.1
            && branch_dist(mf * r2) > 0.1;
        let near_ok = guards_ok && {
            let t = transfer_matrix(energy, w10)?;
            frobenius(&mat_sub(&matrix_pow(&t.a, doubled), &identity())) < delta
        };
        if near_ok {
            powers[1] = doubled;
        } else {
            let (m, _) =
                near_identity_power_excluding(energy, w10, delta, m_max, Some(powers[3]))?;
            powers[1] = m;
        }
    }
    let mut logs: Vec<LogTransfer> = Vec::with_capacity(4);
    for (i, &w) in OMEGA_CORNERS.iter().enumerate() {
        match log_transfer_closed(energy, w, powers[i]) {
            Ok(l) => logs.push(l),
            Err(Error::BranchCut) | Err(Error::FloorParity) => {
                return Ok(SpanCertificate {
                    energy,
                    f1: 0.0,
                    f2: 0.0,
                    f1_scaled: 0.0,
                    f2_scaled: 0.0,
                    rank: 0,
                    powers,
                    verdict: Verdict::InS1,
                });
            }
            Err(e) => return Err(e),
        }
    }
    let logs: [LogTransfer; 4] = [
        logs[0].clone(),
        logs[1].clone(),
        logs[2].clone(),
        logs[3].clone(),
    ];
    let ups = upsilon_brackets(&logs)?;
    let ths = theta_matrices(&logs)?;
    let (f1, f1_scaled) = f1_with_scale(&ups);
    let (f2, f2_scaled) = f2_with_scale(&ths);
    let mut family: Vec<Sp2Element> = Vec::with_capacity(10);
    family.extend_from_slice(&ups);
    family.extend_from_slice(&ths);
    let rank = rank_with_tolerance(&family, RANK_RELATIVE_TOL) as u32;
    let verdict = if f1_scaled.abs() > tol_f && f2_scaled.abs() > tol_f && rank == 10 {
        Verdict::CertifiedDense
    } else {
        Verdict::Degenerate
    };
    Ok(SpanCertificate {
        energy,
        f1,
        f2,
        f1_scaled,
        f2_scaled,
        rank,
        powers,
        verdict,
    })
}

/// Knobs for the certificate pipeline and the energy scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanParams {
    pub delta: f64,
    pub m_max: u64,
    pub tol_f: f64,
    /// A sign change only flags its cell when the smaller endpoint magnitude
    /// (of the scaled determinant) is below this.
    pub flag_threshold: f64,
    /// Bisection stops when the bracketing interval is at most this wide.
    pub bisect_width: f64,
}

impl Default for ScanParams {
    fn default() -> Self {
        ScanParams {
            delta: 0.4,
            m_max: 1 << 24,
            tol_f: 1e-12,
            flag_threshold: 1e-4,
            bisect_width: 1e-6,
        }
    }
}

/// Why a grid cell was flagged, in decreasing priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlagReason {
    /// The search for near-identity powers exhausted its bound at an endpoint.
    Unresolved,
    /// An endpoint certificate verdict was not CERTIFIED_DENSE.
    NonCertified,
    /// f1 (scaled) changes sign across the cell with small magnitude.
    SignChangeF1,
    /// f2 (scaled) changes sign across the cell with small magnitude.
    SignChangeF2,
}

impl core::fmt::Display for FlagReason {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            FlagReason::Unresolved => "UNRESOLVED",
            FlagReason::NonCertified => "NON_CERTIFIED",
            FlagReason::SignChangeF1 => "F1_SIGN_CHANGE",
            FlagReason::SignChangeF2 => "F2_SIGN_CHANGE",
        })
    }
}

/// A flagged subinterval. For sign-change reasons the bounds are the
/// bisection-refined bracket; otherwise they are the original cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlaggedCell {
    pub left: f64,
    pub right: f64,
    pub reason: FlagReason,
}

/// Grid scan output: per-point certificates (None where the power search
/// exhausted) plus flagged cells in energy order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub energies: Vec<f64>,
    pub certificates: Vec<Option<SpanCertificate>>,
    pub flagged: Vec<FlaggedCell>,
}

fn scaled_value(cert: &SpanCertificate, use_f1: bool) -> f64 {
    if use_f1 {
        cert.f1_scaled
    } else {
        cert.f2_scaled
    }
}

fn refine_sign_change(
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    use_f1: bool,
    params: &ScanParams,
) -> (f64, f64) {
    let mut it = 0;
    while b - a > params.bisect_width && it < 60 {
        let mid = 0.5 * (a + b);
        let fm = match span_certificate(mid, params.delta, params.m_max, params.tol_f) {
            Ok(c) => scaled_value(&c, use_f1),
            Err(_) => break,
        };
        if fa * fm <= 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
        it += 1;
    }
    (a, b)
}

/// Evaluates the certificate on the grid E_i = E_min + i·grid_step and flags
/// suspicious cells: cells adjacent to a non-certified or unresolved point,
/// and cells where a scaled determinant changes sign with small magnitude.
/// Sign-change cells are bisected down to `params.bisect_width`.
///
/// # Panics
/// If `grid_step` is not positive or `e_max < e_min`.
pub fn scan_critical_energies(
    e_min: f64,
    e_max: f64,
    grid_step: f64,
    params: &ScanParams,
) -> ScanResult {
    assert!(grid_step > 0.0, "grid step must be positive");
    assert!(e_max >= e_min, "energy range must be non-empty");
    let n = ((e_max - e_min) / grid_step).round() as usize;
    let mut energies = Vec::with_capacity(n + 1);
    let mut certificates = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let e = e_min + i as f64 * grid_step;
        energies.push(e);
        certificates.push(match span_certificate(e, params.delta, params.m_max, params.tol_f) {
            Ok(c) => Some(c),
            Err(Error::SearchExhausted) => None,
            // any other error is a caller bug on this grid; surface loudly
            Err(e) => panic!("scan point failed: {e}"),
        });
    }
    // cell index -> first-inserted (highest-priority) reason
    let mut flags: BTreeMap<usize, FlagReason> = BTreeMap::new();
    let flag_point = |flags: &mut BTreeMap<usize, FlagReason>, i: usize, r: FlagReason| {
        if i < n {
            flags.entry(i).or_insert(r);
        }
        if i > 0 {
            flags.entry(i - 1).or_insert(r);
        }
    };
    for (i, c) in certificates.iter().enumerate() {
        if c.is_none() {
            flag_point(&mut flags, i, FlagReason::Unresolved);
        }
    }
    for (i, c) in certificates.iter().enumerate() {
        if let Some(c) = c {
            if c.verdict != Verdict::CertifiedDense {
                flag_point(&mut flags, i, FlagReason::NonCertified);
            }
        }
    }
    for (use_f1, reason) in [(true, FlagReason::SignChangeF1), (false, FlagReason::SignChangeF2)] {
        for i in 0..n {
            if let (Some(ca), Some(cb)) = (&certificates[i], &certificates[i + 1]) {
                let (a, b) = (scaled_value(ca, use_f1), scaled_value(cb, use_f1));
                if a * b < 0.0 && a.abs().min(b.abs()) < params.flag_threshold {
                    flags.entry(i).or_insert(reason);
                }
            }
        }
    }
    let mut flagged = Vec::with_capacity(flags.len());
    for (&i, &reason) in &flags {
        let (left, right) = (energies[i], energies[i + 1]);
        let cell = match reason {
            FlagReason::SignChangeF1 | FlagReason::SignChangeF2 => {
                let use_f1 = reason == FlagReason::SignChangeF1;
                let fa = scaled_value(certificates[i].as_ref().unwrap(), use_f1);
                let (l, r) = refine_sign_change(left, right, fa, use_f1, params);
                FlaggedCell { left: l, right: r, reason }
            }
            _ => FlaggedCell { left, right, reason },
        };
        flagged.push(cell);
    }
    ScanResult {
        energies,
        certificates,
        flagged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{matrix_exp, matrix_log_series, max_abs, sp2_membership_defect};

    const PI: f64 = core::f64::consts::PI;

    fn pipeline_logs(e: f64) -> [LogTransfer; 4] {
        let mut out = Vec::new();
        for &w in &OMEGA_CORNERS {
            let (m, _) = near_identity_power(e, w, 0.4, 1 << 24).unwrap();
            out.push(log_transfer_closed(e, w, m).unwrap());
        }
        [out[0].clone(), out[1].clone(), out[2].clone(), out[3].clone()]
    }

    #[test]
    fn zero_angles_give_zero_log() {
        // synthetic: th = 0 exactly
        let la = assemble_la(OmegaPair::new(0.0, 0.0), (1.5, 2.5), (0.0, 0.0));
        assert_eq!(max_abs(&la), 0.0);
    }

    #[test]
    fn closed_log_matches_series_log() {
        for &(e, w) in &[
            (3.0, OmegaPair::new(0.0, 0.0)),
            (5.0, OmegaPair::new(1.0, 0.0)),
            (10.0, OmegaPair::new(1.0, 1.0)),
        ] {
            let (m, _) = near_identity_power(e, w, 0.4, 1 << 24).unwrap();
            let lt = log_transfer_closed(e, w, m).unwrap();
            let t = transfer_matrix(e, w).unwrap();
            let am = matrix_pow(&t.a, m);
            let series = matrix_log_series(&am).unwrap();
            assert!(max_abs(&mat_sub(&lt.la.entries, &series)) < 1e-8);
            assert!(max_abs(&mat_sub(&matrix_exp(&lt.la.entries), &am)) < 1e-8);
        }
    }

    #[test]
    fn log_invariants_hold() {
        let logs = pipeline_logs(5.0);
        for l in &logs {
            // alpha_l beta_l = -theta_l^2 <= 0
            assert!(l.alpha.0 * l.beta.0 <= 0.0);
            assert!(l.alpha.1 * l.beta.1 <= 0.0);
            // alpha = -beta r^2
            let (r1, r2) = radii(l.energy, l.omega).unwrap();
            assert!((l.alpha.0 + l.beta.0 * r1 * r1).abs() < 1e-12);
            assert!((l.alpha.1 + l.beta.1 * r2 * r2).abs() < 1e-12);
            // LA lies in sp2
            assert!(sp2_membership_defect(&l.la.entries) < 1e-12);
        }
    }

    #[test]
    fn floor_parity_guard_fires() {
        // At E = 3, omega = (0,0): r1 = sqrt(2). m = 2 gives m*r1 ~ 2.83,
        // x1 = round(0.45) = 0, theta1 = 2.83 > pi/2 -> FloorParity
        // (branch_dist(2.83) ~ 0.31 > 0.1 so the branch guard passes first).
        let err = log_transfer_closed(3.0, OmegaPair::new(0.0, 0.0), 2).unwrap_err();
        assert_eq!(err, Error::FloorParity);
    }

    #[test]
    fn branch_cut_guard_fires() {
        // m = 20: m*r1 = 28.28..., mod 2pi = 3.15 -> distance 0.009 from pi
        let err = log_transfer_closed(3.0, OmegaPair::new(0.0, 0.0), 20).unwrap_err();
        assert_eq!(err, Error::BranchCut);
    }

    #[test]
    fn constants_bracket_identity() {
        // [Z1, Z3] = Z3 exactly in floating point
        assert_eq!(lie_bracket(&Z1, &Z3), Z3);
        for z in [&Z1, &Z2, &Z3] {
            assert_eq!(sp2_membership_defect(z), 0.0);
        }
    }

    #[test]
    fn upsilon_structure_at_e5() {
        let logs = pipeline_logs(5.0);
        let ups = upsilon_brackets(&logs).unwrap();
        for u in &ups {
            assert!(v1_form_defect(&u.entries) < 1e-10);
            assert!(sp2_membership_defect(&u.entries) < 1e-10);
        }
        // antisymmetry: [L00, L10] = -Upsilon1
        let swapped = lie_bracket(&logs[0].la.entries, &logs[1].la.entries);
        let sum = crate::linalg::mat_add(&swapped, &ups[0].entries);
        assert_eq!(max_abs(&sum), 0.0);
    }

    #[test]
    fn theta_structure_and_exact_zeros() {
        for e in [3.0, 5.0, 10.0] {
            let logs = pipeline_logs(e);
            let ths = theta_matrices(&logs).unwrap();
            for t in &ths {
                assert!(v2_form_defect(&t.entries) < 1e-10);
            }
            // structurally zero bracket entries are exact zeros in f64
            assert_eq!(ths[3].entries[3][1], 0.0);
            assert_eq!(ths[3].entries[1][3], 0.0);
            assert_eq!(ths[4].entries[2][0], 0.0);
            assert_eq!(ths[4].entries[0][2], 0.0);
            assert_eq!(ths[5].entries[2][0], 0.0);
            assert_eq!(ths[5].entries[1][3], 0.0);
        }
    }

    #[test]
    fn mixed_energy_is_rejected() {
        let a = pipeline_logs(3.0);
        let b = pipeline_logs(5.0);
        let mixed = [a[0].clone(), a[1].clone(), a[2].clone(), b[3].clone()];
        assert_eq!(upsilon_brackets(&mixed).unwrap_err(), Error::MixedEnergy);
        assert_eq!(theta_matrices(&mixed).unwrap_err(), Error::MixedEnergy);
    }

    #[test]
    fn zero_upsilon_zeroes_f1() {
        let logs = pipeline_logs(5.0);
        let mut ups = upsilon_brackets(&logs).unwrap();
        ups[2] = Sp2Element::from_matrix([[0.0; 4]; 4]);
        let (raw, scaled) = f1_with_scale(&ups);
        assert_eq!(raw, 0.0);
        assert_eq!(scaled, 0.0);
    }

    #[test]
    fn proportional_upsilons_zero_f1() {
        let logs = pipeline_logs(5.0);
        let mut ups = upsilon_brackets(&logs).unwrap();
        ups[1] = Sp2Element::from_matrix(crate::linalg::mat_scale(&ups[0].entries, 2.0));
        let (_, scaled) = f1_with_scale(&ups);
        assert!(scaled.abs() < 1e-12);
    }

    #[test]
    fn column_swap_flips_f2_sign() {
        let logs = pipeline_logs(5.0);
        let ths = theta_matrices(&logs).unwrap();
        let f = f2_determinant(&ths);
        let swapped = [
            ths[1].clone(),
            ths[0].clone(),
            ths[2].clone(),
            ths[3].clone(),
            ths[4].clone(),
            ths[5].clone(),
        ];
        let g = f2_determinant(&swapped);
        assert!((f + g).abs() <= 1e-12 * f.abs().max(1e-300));
    }

    // Restricted-substitution identity: with every nearest-integer x zeroed
    // except the second one of the (0,0) logarithm (call it a2), the first
    // determinant collapses to m10^2 m01^2 m11^2 pi^2 a2^2 / (E + 1).
    fn restricted_logs(e: f64, a2: f64, ms: [f64; 4]) -> [Mat4; 4] {
        let build = |w: OmegaPair, mf: f64, x1: f64, x2: f64| {
            let (r1, r2) = radii(e, w).unwrap();
            let th = (mf * r1 - TWO_PI * x1, mf * r2 - TWO_PI * x2);
            assemble_la(w, (r1, r2), th)
        };
        [
            build(OMEGA_CORNERS[0], ms[0], 0.0, a2),
            build(OMEGA_CORNERS[1], ms[1], 0.0, 0.0),
            build(OMEGA_CORNERS[2], ms[2], 0.0, 0.0),
            build(OMEGA_CORNERS[3], ms[3], 0.0, 0.0),
        ]
    }

    fn restricted_dets(e: f64, a2: f64, ms: [f64; 4]) -> (f64, f64, f64) {
        let las = restricted_logs(e, a2, ms);
        let ups = [
            Sp2Element::from_matrix(lie_bracket(&las[1], &las[0])),
            Sp2Element::from_matrix(lie_bracket(&las[2], &las[0])),
            Sp2Element::from_matrix(lie_bracket(&las[1], &las[3])),
            Sp2Element::from_matrix(lie_bracket(&las[2], &las[3])),
        ];
        let t1 = mat_sub(&las[1], &las[0]);
        let t2 = mat_sub(&las[1], &las[3]);
        let t3 = mat_sub(&las[2], &las[0]);
        let ths = [
            Sp2Element::from_matrix(t1),
            Sp2Element::from_matrix(t2),
            Sp2Element::from_matrix(t3),
            Sp2Element::from_matrix(lie_bracket(&t1, &Z1)),
            Sp2Element::from_matrix(lie_bracket(&t2, &Z2)),
            Sp2Element::from_matrix(lie_bracket(&t3, &Z3)),
        ];
        let (f2, f2s) = f2_with_scale(&ths);
        (f1_determinant(&ups), f2, f2s)
    }

    #[test]
    fn restricted_f1_matches_closed_form() {
        for &(e, a2, ms) in &[
            (2.5, 3.0, [2.0, 5.0, 3.0, 7.0]),
            (4.0, 1.0, [1.0, 2.0, 4.0, 3.0]),
            (7.3, 4.0, [6.0, 3.0, 2.0, 8.0]),
            (11.0, 2.0, [4.0, 9.0, 5.0, 6.0]),
        ] {
            let (f1, _, _) = restricted_dets(e, a2, ms);
            let expect = ms[1] * ms[1] * ms[2] * ms[2] * ms[3] * ms[3] * PI * PI * a2 * a2
                / (e + 1.0);
            let rel = (f1 - expect).abs() / expect.abs();
            assert!(rel < 1e-9, "E={e} rel={rel}");
        }
    }

    #[test]
    fn restricted_f1_vanishes_without_a2() {
        for &(e, ms) in &[(2.5, [2.0, 5.0, 3.0, 7.0]), (6.0, [3.0, 4.0, 2.0, 5.0])] {
            let las = restricted_logs(e, 0.0, ms);
            let ups = [
                Sp2Element::from_matrix(lie_bracket(&las[1], &las[0])),
                Sp2Element::from_matrix(lie_bracket(&las[2], &las[0])),
                Sp2Element::from_matrix(lie_bracket(&las[1], &las[3])),
                Sp2Element::from_matrix(lie_bracket(&las[2], &las[3])),
            ];
            let (_, scaled) = f1_with_scale(&ups);
            assert!(scaled.abs() < 1e-9, "E={e} scaled={scaled}");
        }
    }

    #[test]
    fn restricted_f2_vanishes_at_equal_powers() {
        // exact zero analytically; in f64 only the scale-free residual is
        // meaningful (the raw determinant keeps cancellation noise)
        let (_, _, f2s) = restricted_dets(4.0, 3.0, [2.0, 5.0, 3.0, 5.0]);
        assert!(f2s.abs() < 1e-10, "f2 scaled={f2s}");
        let (_, _, g2s) = restricted_dets(7.0, 2.0, [3.0, 4.0, 6.0, 4.0]);
        assert!(g2s.abs() < 1e-10, "f2 scaled={g2s}");
    }

    #[test]
    fn rank_of_constants_plus_theta_is_four() {
        let logs = pipeline_logs(5.0);
        let ths = theta_matrices(&logs).unwrap();
        let fam = [
            Sp2Element::from_matrix(Z1),
            Sp2Element::from_matrix(Z2),
            Sp2Element::from_matrix(Z3),
            ths[0].clone(),
        ];
        assert_eq!(rank_with_tolerance(&fam, 1e-8), 4);
    }

    #[test]
    fn certificate_at_e5_is_dense() {
        let c = span_certificate(5.0, 0.4, 1 << 24, 1e-12).unwrap();
        assert_eq!(c.verdict, Verdict::CertifiedDense);
        assert_eq!(c.rank, 10);
        assert!(c.f1.abs() > 0.0 && c.f2.abs() > 0.0);
        assert_ne!(c.powers[1], c.powers[3]);
    }

    #[test]
    fn certificate_propagates_exhaustion() {
        let err = span_certificate(5.0, 1e-9, 32, 1e-12).unwrap_err();
        assert_eq!(err, Error::SearchExhausted);
    }

    #[test]
    fn certificate_rejects_low_energy() {
        assert_eq!(
            span_certificate(2.0, 0.4, 1 << 24, 1e-12).unwrap_err(),
            Error::EnergyBelowSpectrum
        );
    }

    #[test]
    fn empty_interval_scan_has_no_flags() {
        let r = scan_critical_energies(3.0, 3.0, 0.01, &ScanParams::default());
        assert_eq!(r.energies.len(), 1);
        assert!(r.flagged.is_empty());
    }
}
