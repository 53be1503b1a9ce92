//! Single-cell potentials, their eigendata, closed-form transfer matrices,
//! an independent Runge–Kutta oracle, and seeded i.i.d. sampling.
//!
//! The cell couples two channels through the symmetric potential
//! M_ω = [[ω₁, 1],[1, ω₂]]. For energy E above the spectrum of M_ω the
//! transfer matrix across one unit cell is the conjugated rotation-like
//! block matrix A₀^ω(E) = R_ω K R_ωᵀ built from r_l = √(E − λ_l).

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::linalg::{identity, mat_mul, transpose, Mat2, Mat4};
use crate::Error;

/// Pair of coupling constants (ω₁, ω₂) selecting one cell potential.
///
/// The classical model takes values in {0,1}²; any real pair is accepted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaPair {
    pub w1: f64,
    pub w2: f64,
}

impl OmegaPair {
    pub const fn new(w1: f64, w2: f64) -> Self {
        OmegaPair { w1, w2 }
    }
}

/// The four Bernoulli corner configurations, in the order used everywhere
/// downstream: (0,0), (1,0), (0,1), (1,1).
pub const OMEGA_CORNERS: [OmegaPair; 4] = [
    OmegaPair::new(0.0, 0.0),
    OmegaPair::new(1.0, 0.0),
    OmegaPair::new(0.0, 1.0),
    OmegaPair::new(1.0, 1.0),
];

/// M_ω = [[ω₁, 1],[1, ω₂]].
pub fn potential_matrix(omega: OmegaPair) -> Mat2 {
    [[omega.w1, 1.0], [1.0, omega.w2]]
}

/// Ordered eigendata of a cell potential: λ₁ ≥ λ₂ and the orthogonal matrix
/// S whose columns are the corresponding unit eigenvectors, each scaled so
/// its first entry is positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralData {
    pub lambda1: f64,
    pub lambda2: f64,
    pub s: Mat2,
}

/// Closed-form eigendecomposition of [[ω₁, 1],[1, ω₂]].
///
/// The off-diagonal is fixed at 1, so the discriminant √((ω₁−ω₂)² + 4) is
/// never zero and (1, λ − ω₁) is always an eigenvector for λ.
pub fn eigendecompose(m: &Mat2) -> SpectralData {
    let w1 = m[0][0];
    let w2 = m[1][1];
    let tr = w1 + w2;
    let disc = ((w1 - w2) * (w1 - w2) + 4.0).sqrt();
    let lambda1 = (tr + disc) / 2.0;
    let lambda2 = (tr - disc) / 2.0;
    let t1 = lambda1 - w1;
    let n1 = (1.0 + t1 * t1).sqrt();
    let t2 = lambda2 - w1;
    let n2 = (1.0 + t2 * t2).sqrt();
    SpectralData {
        lambda1,
        lambda2,
        s: [[1.0 / n1, 1.0 / n2], [t1 / n1, t2 / n2]],
    }
}

/// r_l = √(E − λ_l) for l = 1, 2; defined only above the cell spectrum.
pub fn radii(energy: f64, omega: OmegaPair) -> Result<(f64, f64), Error> {
    let sd = eigendecompose(&potential_matrix(omega));
    if energy <= sd.lambda1 {
        return Err(Error::EnergyBelowSpectrum);
    }
    Ok(((energy - sd.lambda1).sqrt(), (energy - sd.lambda2).sqrt()))
}

/// Block-diagonal embedding diag(S, S) of the 2×2 eigenvector matrix.
pub(crate) fn rotation4(s: &Mat2) -> Mat4 {
    let mut r = [[0.0; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = s[i][j];
            r[2 + i][2 + j] = s[i][j];
        }
    }
    r
}

/// One-cell transfer matrix with its construction data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub a: Mat4,
    pub energy: f64,
    pub omega: OmegaPair,
    pub spectral: SpectralData,
    /// (r₁, r₂) with r_l = √(E − λ_l).
    pub r: (f64, f64),
}

/// Closed-form transfer matrix A₀^ω(E) = R_ω K R_ωᵀ, where K interleaves the
/// 2×2 rotation-like blocks [[cos r, sin r / r],[−r sin r, cos r]] on index
/// pairs (1,3) and (2,4).
pub fn transfer_matrix(energy: f64, omega: OmegaPair) -> Result<TransferMatrix, Error> {
    let spectral = eigendecompose(&potential_matrix(omega));
    if energy <= spectral.lambda1 {
        return Err(Error::EnergyBelowSpectrum);
    }
    let r1 = (energy - spectral.lambda1).sqrt();
    let r2 = (energy - spectral.lambda2).sqrt();
    let k = [
        [r1.cos(), 0.0, r1.sin() / r1, 0.0],
        [0.0, r2.cos(), 0.0, r2.sin() / r2],
        [-r1 * r1.sin(), 0.0, r1.cos(), 0.0],
        [0.0, -r2 * r2.sin(), 0.0, r2.cos()],
    ];
    let r4 = rotation4(&spectral.s);
    let a = mat_mul(&mat_mul(&r4, &k), &transpose(&r4));
    Ok(TransferMatrix {
        a,
        energy,
        omega,
        spectral,
        r: (r1, r2),
    })
}

/// Generator [[0, I₂],[M_ω − E·I₂, 0]] of the first-order cell system.
pub fn block_generator(energy: f64, omega: OmegaPair) -> Mat4 {
    let m = potential_matrix(omega);
    let mut b = [[0.0; 4]; 4];
    b[0][2] = 1.0;
    b[1][3] = 1.0;
    for i in 0..2 {
        for j in 0..2 {
            b[2 + i][j] = m[i][j] - if i == j { energy } else { 0.0 };
        }
    }
    b
}

/// Classical RK4 flow of Y′ = B·Y from Y(0) = I₄ to x = 1.
pub(crate) fn rk4_flow(b: &Mat4, step: f64) -> Mat4 {
    let n = (1.0 / step).round() as u64;
    let mut y: Mat4 = identity();
    for _ in 0..n {
        let k1 = mat_mul(b, &y);
        let k2 = mat_mul(b, &add_scaled(&y, &k1, 0.5 * step));
        let k3 = mat_mul(b, &add_scaled(&y, &k2, 0.5 * step));
        let k4 = mat_mul(b, &add_scaled(&y, &k3, step));
        let mut sum = k1;
        for i in 0..4 {
            for j in 0..4 {
                sum[i][j] += 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j];
            }
        }
        y = add_scaled(&y, &sum, step / 6.0);
    }
    y
}

fn add_scaled(a: &Mat4, b: &Mat4, s: f64) -> Mat4 {
    let mut c = *a;
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] += s * b[i][j];
        }
    }
    c
}

/// Independent integration oracle for `transfer_matrix`: 4th-order
/// Runge–Kutta across the unit cell.
///
/// # Panics
/// If `step` is outside (0, 0.1].
pub fn transfer_matrix_ode(energy: f64, omega: OmegaPair, step: f64) -> Mat4 {
    assert!(step > 0.0 && step <= 0.1, "step must lie in (0, 0.1]");
    rk4_flow(&block_generator(energy, omega), step)
}

/// Common distribution ν of the two coupling sequences plus the PRNG seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Atoms (value, probability) of ν. Probabilities are positive and sum
    /// to 1 within 1e−12.
    pub support: Vec<(f64, f64)>,
    pub seed: u64,
}

impl ModelConfig {
    /// # Panics
    /// If the support is empty, a probability is not positive, or the
    /// probabilities do not sum to 1 within 1e−12.
    pub fn new(support: Vec<(f64, f64)>, seed: u64) -> Self {
        assert!(!support.is_empty(), "support must contain at least one atom");
        let mut sum = 0.0;
        for &(_, p) in &support {
            assert!(p > 0.0, "atom probabilities must be positive");
            sum += p;
        }
        assert!(
            (sum - 1.0).abs() <= 1e-12,
            "atom probabilities must sum to 1"
        );
        ModelConfig { support, seed }
    }

    /// Bernoulli(½) on {0, 1} — the standard model.
    pub fn bernoulli_half(seed: u64) -> Self {
        ModelConfig::new(alloc::vec![(0.0, 0.5), (1.0, 0.5)], seed)
    }

    /// Point mass at a single coupling value.
    pub fn degenerate(value: f64, seed: u64) -> Self {
        ModelConfig::new(alloc::vec![(value, 1.0)], seed)
    }

    /// Whether the support contains both 0 and 1 (the standing assumption of
    /// the classical model; nothing in this crate requires it).
    pub fn is_standard_support(&self) -> bool {
        let has = |v: f64| self.support.iter().any(|&(x, _)| x == v);
        has(0.0) && has(1.0)
    }

    /// Largest λ₁ over all coupling pairs from the support; energies must
    /// exceed this for every sampled transfer matrix to exist.
    pub fn max_lambda1(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for &(a, _) in &self.support {
            for &(b, _) in &self.support {
                let l1 = eigendecompose(&potential_matrix(OmegaPair::new(a, b))).lambda1;
                worst = worst.max(l1);
            }
        }
        worst
    }
}

/// Precomputed transfer matrices for every coupling pair in a support,
/// plus the cumulative atom probabilities used to draw them.
pub(crate) struct SampleTables {
    pub cum: Vec<f64>,
    /// Row-major k×k table: entry i·k + j is the matrix for (value_i, value_j).
    pub mats: Vec<TransferMatrix>,
    pub k: usize,
}

pub(crate) fn build_tables(energy: f64, config: &ModelConfig) -> Result<SampleTables, Error> {
    let k = config.support.len();
    let mut cum = Vec::with_capacity(k);
    let mut run = 0.0;
    for &(_, p) in &config.support {
        run += p;
        cum.push(run);
    }
    let mut mats = Vec::with_capacity(k * k);
    for &(a, _) in &config.support {
        for &(b, _) in &config.support {
            mats.push(transfer_matrix(energy, OmegaPair::new(a, b))?);
        }
    }
    Ok(SampleTables { cum, mats, k })
}

/// Uniform double in [0, 1) with 53 random bits.
pub(crate) fn uniform53(rng: &mut ChaCha12Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
}

/// Smallest atom index i with u ≤ cum[i].
pub(crate) fn draw_index(cum: &[f64], u: f64) -> usize {
    for (i, &c) in cum.iter().enumerate() {
        if u <= c {
            return i;
        }
    }
    cum.len() - 1
}

/// Draws n i.i.d. coupling pairs (ω₁ then ω₂, each from ν) and returns the
/// corresponding transfer matrices. Identical seeds give identical output.
pub fn sample_transfer_sequence(
    config: &ModelConfig,
    energy: f64,
    n: usize,
) -> Result<Vec<TransferMatrix>, Error> {
    let tables = build_tables(energy, config)?;
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let i = draw_index(&tables.cum, uniform53(&mut rng));
        let j = draw_index(&tables.cum, uniform53(&mut rng));
        out.push(tables.mats[i * tables.k + j]);
    }
    Ok(out)
}
