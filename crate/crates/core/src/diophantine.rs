//! Simultaneous rational approximation by exhaustive search, and the search
//! for a power m that brings a one-cell transfer matrix within a chosen
//! Frobenius distance of the identity.
//!
//! The pigeonhole bound guarantees that for any reals α₁..α_N and any integer
//! M ≥ 2 there are integers 1 ≤ y ≤ M and x₁..x_N with
//! max_i |α_i y − x_i| < M^(−1/N); the scan below finds the smallest such y.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;

use crate::linalg::{frobenius, identity, mat_sub, matrix_pow};
use crate::transfer::{transfer_matrix, OmegaPair};
use crate::Error;

pub(crate) const TWO_PI: f64 = 2.0 * core::f64::consts::PI;

/// Distance from t mod 2π to π. Small values mean a matrix power sits near
/// the logarithm's branch cut.
pub fn branch_dist(t: f64) -> f64 {
    let mut u = t % TWO_PI;
    if u < 0.0 {
        u += TWO_PI;
    }
    (u - core::f64::consts::PI).abs()
}

/// Witness of a simultaneous rational approximation: integers y, x₁..x_N
/// with max_i |α_i y − x_i| < M^(−1/N) and 1 ≤ y ≤ M.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletWitness {
    /// The common denominator (and, downstream, the matrix power m).
    pub y: u64,
    /// Nearest integers x_i = round(α_i y).
    pub x: Vec<i64>,
    /// The search bound M in force when the witness was found.
    pub m_bound: u64,
    /// Residual angles θ_i = y·(2π α_i) − 2π x_i.
    pub residuals: Vec<f64>,
}

/// Smallest y in 1..=M (skipping `exclude`) with
/// max_i |α_i y − round(α_i y)| < M^(−1/N).
fn dirichlet_scan(alphas: &[f64], m: u64, exclude: Option<u64>) -> Option<(u64, Vec<i64>)> {
    let n = alphas.len();
    let bound = (m as f64).powf(-1.0 / n as f64);
    'outer: for y in 1..=m {
        if exclude == Some(y) {
            continue;
        }
        let yf = y as f64;
        for &a in alphas {
            let t = a * yf;
            let x = (t + 0.5).floor();
            if (t - x).abs() >= bound {
                continue 'outer;
            }
        }
        let xs = alphas.iter().map(|&a| (a * yf + 0.5).floor() as i64).collect();
        return Some((y, xs));
    }
    None
}

fn build_witness(alphas: &[f64], y: u64, xs: Vec<i64>, m_bound: u64) -> DirichletWitness {
    let residuals = alphas
        .iter()
        .zip(&xs)
        .map(|(&a, &x)| (y as f64) * (TWO_PI * a) - TWO_PI * (x as f64))
        .collect();
    DirichletWitness {
        y,
        x: xs,
        m_bound,
        residuals,
    }
}

/// Exhaustive simultaneous approximation: smallest y ≤ M whose nearest-integer
/// errors all beat M^(−1/N).
///
/// # Panics
/// If `alphas` is empty or `m < 2`. A witness always exists for M ≥ 2 by the
/// pigeonhole bound, so exhaustion is unreachable.
pub fn dirichlet_approx(alphas: &[f64], m: u64) -> DirichletWitness {
    assert!(!alphas.is_empty(), "need at least one target");
    assert!(m >= 2, "search bound must be at least 2");
    let (y, xs) = dirichlet_scan(alphas, m, None)
        .expect("pigeonhole guarantees a witness for M >= 2");
    build_witness(alphas, y, xs, m)
}

/// Searches for m with ‖A₀^ω(E)^m − I₄‖_F < δ by doubling the Dirichlet
/// bound from 16 up to `m_max`, trying the single smallest witness at each
/// stage. A candidate must also keep both residual angles below π/2 in
/// magnitude (so the rounding branch is consistent) and keep m·r_l away from
/// the logarithm's branch cut (distance > 0.1 from π mod 2π).
///
/// # Panics
/// If `delta` is outside (0, 1) or `m_max < 16`.
pub fn near_identity_power(
    energy: f64,
    omega: OmegaPair,
    delta: f64,
    m_max: u64,
) -> Result<(u64, DirichletWitness), Error> {
    near_identity_power_excluding(energy, omega, delta, m_max, None)
}

/// As [`near_identity_power`], but never returns `exclude` as the power.
/// Used to force distinct powers for coupling pairs whose searches collide.
pub(crate) fn near_identity_power_excluding(
    energy: f64,
    omega: OmegaPair,
    delta: f64,
    m_max: u64,
    exclude: Option<u64>,
) -> Result<(u64, DirichletWitness), Error> {
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    assert!(m_max >= 16, "m_max must be at least 16");
    let t = transfer_matrix(energy, omega)?;
    let (r1, r2) = t.r;
    let alphas = [r1 / TWO_PI, r2 / TWO_PI];
    let mut m = 16u64;
    while m <= m_max {
        if let Some((y, xs)) = dirichlet_scan(&alphas, m, exclude) {
            let yf = y as f64;
            let th1 = yf * r1 - TWO_PI * (xs[0] as f64);
            let th2 = yf * r2 - TWO_PI * (xs[1] as f64);
            if th1.abs() < core::f64::consts::FRAC_PI_2
                && th2.abs() < core::f64::consts::FRAC_PI_2
                && branch_dist(yf * r1) > 0.1
                && branch_dist(yf * r2) > 0.1
            {
                let power = matrix_pow(&t.a, y);
                if frobenius(&mat_sub(&power, &identity())) < delta {
                    return Ok((y, build_witness(&alphas, y, xs, m)));
                }
            }
        }
        m *= 2;
    }
    Err(Error::SearchExhausted)
}
