//! Monte Carlo estimation of the Lyapunov spectrum of the i.i.d.
//! transfer-matrix cocycle: a QR-reorthogonalized 4-frame for the full
//! spectrum, an exterior-power single-vector estimator for cross-checks,
//! and a combined report pairing the statistics with the density
//! certificate.
//!
//! Error bars come from batch means: the run is cut into exactly 30 equal
//! batches and the standard error is the sample standard deviation of the
//! batch means (ddof = 1) divided by √30. Step counts are truncated to the
//! largest multiple of reorth_every × 30 (or of 30 for the single-vector
//! estimator) so batches stay equal.

#[allow(unused_imports)]
use num_traits::Float;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::liealgebra::{span_certificate, SpanCertificate};
use crate::linalg::{identity, wedge2, Mat4, Mat6};
use crate::transfer::{build_tables, draw_index, uniform53, ModelConfig};
use crate::Error;

const BATCHES: usize = 30;

/// Estimated Lyapunov exponents γ₁ ≥ γ₂ ≥ γ₃ ≥ γ₄ (log growth per unit
/// cell) with batch-means standard errors, carrying the run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovSpectrum {
    pub gammas: [f64; 4],
    pub stderr: [f64; 4],
    /// Steps actually used after truncation to full batches.
    pub steps: u64,
    pub energy: f64,
    pub seed: u64,
}

fn batch_stderr(batch_means: &[f64; BATCHES]) -> f64 {
    let mean = batch_means.iter().sum::<f64>() / BATCHES as f64;
    let var = batch_means
        .iter()
        .map(|&x| (x - mean) * (x - mean))
        .sum::<f64>()
        / (BATCHES as f64 - 1.0);
    var.sqrt() / (BATCHES as f64).sqrt()
}

/// Modified Gram–Schmidt QR of the frame columns; returns the log of each
/// (positive) diagonal entry of R and leaves the frame orthonormal.
fn reorthonormalize(q: &mut Mat4) -> [f64; 4] {
    let mut logs = [0.0; 4];
    for j in 0..4 {
        let mut v = [q[0][j], q[1][j], q[2][j], q[3][j]];
        for i in 0..j {
            let mut dot = 0.0;
            for row in 0..4 {
                dot += q[row][i] * v[row];
            }
            for row in 0..4 {
                v[row] -= dot * q[row][i];
            }
        }
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]).sqrt();
        logs[j] = norm.ln();
        for row in 0..4 {
            q[row][j] = v[row] / norm;
        }
    }
    logs
}

/// Full-spectrum estimator: drives an orthonormal 4-frame through the
/// sampled cocycle, re-orthonormalizing every `reorth_every` steps and
/// accumulating the log-diagonal of R. Deterministic given the seed.
///
/// # Panics
/// If `steps < 10⁴` or `reorth_every` is outside 1..=100.
pub fn lyapunov_spectrum(
    config: &ModelConfig,
    energy: f64,
    steps: u64,
    reorth_every: u64,
) -> Result<LyapunovSpectrum, Error> {
    assert!(steps >= 10_000, "need at least 10^4 steps");
    assert!(
        (1..=100).contains(&reorth_every),
        "reorth_every must lie in 1..=100"
    );
    let tables = build_tables(energy, config)?;
    // integrability hypothesis: finite support => E log+ ||A|| finite
    for t in &tables.mats {
        assert!(
            t.a.iter().flatten().all(|x| x.is_finite()),
            "transfer matrix entries must be finite"
        );
    }
    let blocks = steps / reorth_every;
    let bpb = blocks / BATCHES as u64;
    let used_blocks = bpb * BATCHES as u64;
    let used_steps = used_blocks * reorth_every;
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut q: Mat4 = identity();
    let mut acc = [0.0f64; 4];
    let mut batch = [[0.0f64; 4]; BATCHES];
    for b in 0..used_blocks {
        for _ in 0..reorth_every {
            let i = draw_index(&tables.cum, uniform53(&mut rng));
            let j = draw_index(&tables.cum, uniform53(&mut rng));
            q = crate::linalg::mat_mul(&tables.mats[i * tables.k + j].a, &q);
        }
        let logs = reorthonormalize(&mut q);
        let slot = (b / bpb) as usize;
        for c in 0..4 {
            acc[c] += logs[c];
            batch[slot][c] += logs[c];
        }
    }
    let norm = (bpb * reorth_every) as f64;
    let mut pairs = [(0.0f64, 0.0f64); 4];
    for c in 0..4 {
        let mut means = [0.0f64; BATCHES];
        for (s, m) in means.iter_mut().enumerate() {
            *m = batch[s][c] / norm;
        }
        pairs[c] = (acc[c] / used_steps as f64, batch_stderr(&means));
    }
    // sort descending by exponent, carrying the matching error bar
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    Ok(LyapunovSpectrum {
        gammas: [pairs[0].0, pairs[1].0, pairs[2].0, pairs[3].0],
        stderr: [pairs[0].1, pairs[1].1, pairs[2].1, pairs[3].1],
        steps: used_steps,
        energy,
        seed: config.seed,
    })
}

/// Single-vector exterior-power estimate of γ₁ (p = 1) or γ₁ + γ₂ (p = 2).
#[derive(Debug, Clone, PartialEq)]
pub struct WedgeEstimate {
    pub value: f64,
    pub stderr: f64,
    /// Steps actually used after truncation to 30 equal batches.
    pub steps: u64,
}

fn run_single_vector<const N: usize>(
    mats: &[[[f64; N]; N]],
    cum: &[f64],
    k: usize,
    seed: u64,
    steps: u64,
) -> WedgeEstimate {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut v = [0.0f64; N];
    for x in v.iter_mut() {
        *x = uniform53(&mut rng) - 0.5;
    }
    let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm0;
    }
    let bpb = steps / BATCHES as u64;
    let used = bpb * BATCHES as u64;
    let mut acc = 0.0f64;
    let mut batch = [0.0f64; BATCHES];
    for t in 0..used {
        let i = draw_index(cum, uniform53(&mut rng));
        let j = draw_index(cum, uniform53(&mut rng));
        let m = &mats[i * k + j];
        let mut w = [0.0f64; N];
        for (r, wr) in w.iter_mut().enumerate() {
            let mut s = 0.0;
            for c in 0..N {
                s += m[r][c] * v[c];
            }
            *wr = s;
        }
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let ln = n.ln();
        acc += ln;
        batch[(t / bpb) as usize] += ln;
        for (x, &wx) in v.iter_mut().zip(&w) {
            *x = wx / n;
        }
    }
    let mut means = [0.0f64; BATCHES];
    for (s, m) in means.iter_mut().enumerate() {
        *m = batch[s] / bpb as f64;
    }
    WedgeEstimate {
        value: acc / used as f64,
        stderr: batch_stderr(&means),
        steps: used,
    }
}

/// Estimates Σ_{i≤p} γᵢ by iterating the p-th exterior power of the sampled
/// cocycle on one renormalized vector (p = 1: ℝ⁴, p = 2: ℝ⁶).
///
/// # Panics
/// If `p` is not 1 or 2, or `steps < 10⁴`.
pub fn top_exponent_sum_wedge(
    config: &ModelConfig,
    energy: f64,
    p: u32,
    steps: u64,
) -> Result<WedgeEstimate, Error> {
    assert!(p == 1 || p == 2, "only p = 1 and p = 2 are defined");
    assert!(steps >= 10_000, "need at least 10^4 steps");
    let tables = build_tables(energy, config)?;
    if p == 1 {
        let mats: alloc::vec::Vec<Mat4> = tables.mats.iter().map(|t| t.a).collect();
        Ok(run_single_vector(&mats, &tables.cum, tables.k, config.seed, steps))
    } else {
        let mats: alloc::vec::Vec<Mat6> = tables.mats.iter().map(|t| wedge2(&t.a)).collect();
        Ok(run_single_vector(&mats, &tables.cum, tables.k, config.seed, steps))
    }
}

/// Knobs for the combined certificate + spectrum pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineParams {
    pub delta: f64,
    pub m_max: u64,
    pub tol_f: f64,
    pub steps: u64,
    pub reorth_every: u64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            delta: 0.4,
            m_max: 1 << 24,
            tol_f: 1e-12,
            steps: 100_000,
            reorth_every: 10,
        }
    }
}

/// Joint result: Monte Carlo spectrum, algebraic certificate, and whether
/// the top two exponents are statistically separated and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparabilityReport {
    pub spectrum: LyapunovSpectrum,
    pub certificate: SpanCertificate,
    /// γ₁ − γ₂ > 3(se₁+se₂) and γ₂ > 3·se₂.
    pub separable: bool,
    /// min((γ₁−γ₂)/(se₁+se₂), γ₂/se₂): how many combined error bars the
    /// weaker of the two separations clears.
    pub margin: f64,
}

/// Runs the density certificate and the spectrum estimator at one energy
/// and reports both, plus the separation verdict γ₁ > γ₂ > 0 in 3σ terms.
pub fn separability_report(
    config: &ModelConfig,
    energy: f64,
    params: &PipelineParams,
) -> Result<SeparabilityReport, Error> {
    let certificate = span_certificate(energy, params.delta, params.m_max, params.tol_f)?;
    let spectrum = lyapunov_spectrum(config, energy, params.steps, params.reorth_every)?;
    let g = &spectrum.gammas;
    let se = &spectrum.stderr;
    let separable = g[0] - g[1] > 3.0 * (se[0] + se[1]) && g[1] > 3.0 * se[1];
    let m1 = (g[0] - g[1]) / (se[0] + se[1]);
    let m2 = g[1] / se[1];
    Ok(SeparabilityReport {
        spectrum,
        certificate,
        separable,
        margin: m1.min(m2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealgebra::Verdict;

    #[test]
    fn spectrum_is_deterministic_and_sorted() {
        let cfg = ModelConfig::bernoulli_half(7);
        let a = lyapunov_spectrum(&cfg, 3.0, 100_000, 10).unwrap();
        let b = lyapunov_spectrum(&cfg, 3.0, 100_000, 10).unwrap();
        assert_eq!(a, b);
        assert!(a.gammas[0] >= a.gammas[1]);
        assert!(a.gammas[1] >= a.gammas[2]);
        assert!(a.gammas[2] >= a.gammas[3]);
    }

    #[test]
    fn steps_truncate_to_full_batches() {
        let cfg = ModelConfig::bernoulli_half(7);
        let s = lyapunov_spectrum(&cfg, 3.0, 10_050, 10).unwrap();
        // 1005 blocks -> 33 per batch -> 990 blocks -> 9900 steps
        assert_eq!(s.steps, 9_900);
    }

    #[test]
    fn symplectic_symmetry_and_zero_sum() {
        let cfg = ModelConfig::bernoulli_half(7);
        let s = lyapunov_spectrum(&cfg, 3.0, 200_000, 10).unwrap();
        let (g, se) = (&s.gammas, &s.stderr);
        assert!((g[0] + g[3]).abs() <= 3.0 * (se[0] + se[3]));
        assert!((g[1] + g[2]).abs() <= 3.0 * (se[1] + se[2]));
        let sum: f64 = g.iter().sum();
        let sum_se: f64 = se.iter().sum();
        assert!(sum.abs() <= 3.0 * sum_se);
    }

    #[test]
    fn degenerate_point_mass_gives_null_spectrum() {
        // fixed rotation-like cocycle: all eigenvalue moduli are 1
        let cfg = ModelConfig::degenerate(0.0, 11);
        let s = lyapunov_spectrum(&cfg, 3.0, 100_000, 10).unwrap();
        for c in 0..4 {
            assert!(
                s.gammas[c].abs() <= 3.0 * s.stderr[c],
                "gamma{c}={} se={}",
                s.gammas[c],
                s.stderr[c]
            );
        }
    }

    #[test]
    fn wedge_estimates_match_qr_spectrum() {
        let cfg = ModelConfig::bernoulli_half(7);
        let s = lyapunov_spectrum(&cfg, 3.0, 200_000, 10).unwrap();
        let w1 = top_exponent_sum_wedge(&ModelConfig::bernoulli_half(8), 3.0, 1, 200_000).unwrap();
        let w2 = top_exponent_sum_wedge(&ModelConfig::bernoulli_half(9), 3.0, 2, 200_000).unwrap();
        let d1 = (w1.value - s.gammas[0]).abs();
        assert!(d1 <= 3.0 * (w1.stderr + s.stderr[0]), "p=1 diff {d1}");
        let d2 = (w2.value - (s.gammas[0] + s.gammas[1])).abs();
        assert!(d2 <= 3.0 * (w2.stderr + s.stderr[0] + s.stderr[1]), "p=2 diff {d2}");
    }

    #[test]
    fn degenerate_wedge_value_is_null() {
        let cfg = ModelConfig::degenerate(0.0, 13);
        let w = top_exponent_sum_wedge(&cfg, 3.0, 2, 100_000).unwrap();
        assert!(w.value.abs() <= 3.0 * w.stderr, "value {} se {}", w.value, w.stderr);
    }

    #[test]
    fn stderr_shrinks_like_inverse_sqrt_steps() {
        let cfg = ModelConfig::bernoulli_half(21);
        let a = lyapunov_spectrum(&cfg, 5.0, 250_000, 10).unwrap();
        let b = lyapunov_spectrum(&cfg, 5.0, 1_000_000, 10).unwrap();
        for c in 0..4 {
            let ratio = a.stderr[c] / b.stderr[c];
            assert!(
                (2.0 / 1.5..=2.0 * 1.5).contains(&ratio),
                "component {c} ratio {ratio}"
            );
        }
    }

    #[test]
    fn report_at_e3_is_separable_and_certified() {
        let cfg = ModelConfig::bernoulli_half(7);
        let r = separability_report(&cfg, 3.0, &PipelineParams::default()).unwrap();
        assert!(r.separable);
        assert!(r.margin > 3.0);
        assert_eq!(r.certificate.verdict, Verdict::CertifiedDense);
        assert_eq!(r.spectrum.energy, 3.0);
    }

    #[test]
    fn degenerate_report_is_not_separable() {
        let cfg = ModelConfig::degenerate(0.0, 11);
        let r = separability_report(&cfg, 3.0, &PipelineParams::default()).unwrap();
        assert!(!r.separable);
    }

    #[test]
    fn energy_below_spectrum_propagates() {
        let cfg = ModelConfig::bernoulli_half(7);
        assert_eq!(
            lyapunov_spectrum(&cfg, 1.5, 100_000, 10).unwrap_err(),
            Error::EnergyBelowSpectrum
        );
        assert_eq!(
            top_exponent_sum_wedge(&cfg, 1.5, 1, 100_000).unwrap_err(),
            Error::EnergyBelowSpectrum
        );
    }
}
