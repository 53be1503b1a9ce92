//! Dense fixed-size linear algebra: 2×2 / 4×4 / 6×6 real matrices, the
//! symplectic form, exponential/logarithm, second exterior power, Lie
//! brackets, and a tolerance-based rank for 10-dimensional coordinate
//! vectors of 𝔰𝔭₂(ℝ).
//!
//! Everything is plain `[[f64; N]; N]` plus free functions: the sizes are
//! small and fixed, and the QR / SVD kernels need conventions (positive
//! diagonal, high relative accuracy) that generic libraries do not pin.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;

pub type Mat2 = [[f64; 2]; 2];
pub type Mat4 = [[f64; 4]; 4];
pub type Mat6 = [[f64; 6]; 6];

/// The standard symplectic form J = [[0, −I₂],[I₂, 0]].
pub const J4: Mat4 = [
    [0.0, 0.0, -1.0, 0.0],
    [0.0, 0.0, 0.0, -1.0],
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
];

pub fn identity<const N: usize>() -> [[f64; N]; N] {
    let mut m = [[0.0; N]; N];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn mat_mul<const N: usize>(a: &[[f64; N]; N], b: &[[f64; N]; N]) -> [[f64; N]; N] {
    let mut c = [[0.0; N]; N];
    for i in 0..N {
        for k in 0..N {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..N {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

pub fn mat_vec<const N: usize>(a: &[[f64; N]; N], v: &[f64; N]) -> [f64; N] {
    let mut out = [0.0; N];
    for i in 0..N {
        let mut s = 0.0;
        for j in 0..N {
            s += a[i][j] * v[j];
        }
        out[i] = s;
    }
    out
}

pub fn mat_add<const N: usize>(a: &[[f64; N]; N], b: &[[f64; N]; N]) -> [[f64; N]; N] {
    let mut c = [[0.0; N]; N];
    for i in 0..N {
        for j in 0..N {
            c[i][j] = a[i][j] + b[i][j];
        }
    }
    c
}

pub fn mat_sub<const N: usize>(a: &[[f64; N]; N], b: &[[f64; N]; N]) -> [[f64; N]; N] {
    let mut c = [[0.0; N]; N];
    for i in 0..N {
        for j in 0..N {
            c[i][j] = a[i][j] - b[i][j];
        }
    }
    c
}

pub fn mat_scale<const N: usize>(a: &[[f64; N]; N], s: f64) -> [[f64; N]; N] {
    let mut c = *a;
    for row in c.iter_mut() {
        for x in row.iter_mut() {
            *x *= s;
        }
    }
    c
}

pub fn transpose<const N: usize>(a: &[[f64; N]; N]) -> [[f64; N]; N] {
    let mut c = [[0.0; N]; N];
    for i in 0..N {
        for j in 0..N {
            c[i][j] = a[j][i];
        }
    }
    c
}

/// Frobenius norm.
pub fn frobenius<const N: usize>(a: &[[f64; N]; N]) -> f64 {
    let mut s = 0.0;
    for row in a {
        for x in row {
            s += x * x;
        }
    }
    s.sqrt()
}

/// Largest absolute entry.
pub fn max_abs<const N: usize>(a: &[[f64; N]; N]) -> f64 {
    let mut m = 0.0f64;
    for row in a {
        for x in row {
            m = m.max(x.abs());
        }
    }
    m
}

pub fn vec_norm<const N: usize>(v: &[f64; N]) -> f64 {
    let mut s = 0.0;
    for x in v {
        s += x * x;
    }
    s.sqrt()
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det<const N: usize>(a: &[[f64; N]; N]) -> f64 {
    let mut m = *a;
    let mut d = 1.0;
    for k in 0..N {
        let mut piv = k;
        for i in k + 1..N {
            if m[i][k].abs() > m[piv][k].abs() {
                piv = i;
            }
        }
        if m[piv][k] == 0.0 {
            return 0.0;
        }
        if piv != k {
            m.swap(piv, k);
            d = -d;
        }
        d *= m[k][k];
        for i in k + 1..N {
            let f = m[i][k] / m[k][k];
            for j in k..N {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    d
}

/// ‖ᵗA J A − J‖ in the max-entry norm; zero exactly when A is symplectic.
pub fn symplectic_defect(a: &Mat4) -> f64 {
    let t = mat_mul(&mat_mul(&transpose(a), &J4), a);
    max_abs(&mat_sub(&t, &J4))
}

/// ‖ᵗX J + J X‖ in the max-entry norm; zero exactly when X ∈ 𝔰𝔭₂(ℝ).
pub fn sp2_membership_defect(x: &Mat4) -> f64 {
    let t = mat_add(&mat_mul(&transpose(x), &J4), &mat_mul(&J4, x));
    max_abs(&t)
}

/// Matrix exponential by scaling-and-squaring of a truncated Taylor series.
///
/// Relative accuracy ~1e−12 for ‖B‖_F ≤ 10 (accuracy degrades gracefully for
/// larger norms; the pipeline only feeds it logarithm-sized inputs).
pub fn matrix_exp(b: &Mat4) -> Mat4 {
    let mut nrm = frobenius(b);
    let mut s = 0u32;
    while nrm > 0.5 {
        nrm /= 2.0;
        s += 1;
    }
    let bs = mat_scale(b, 1.0 / (2.0f64).powi(s as i32));
    let mut x: Mat4 = identity();
    let mut term: Mat4 = identity();
    for k in 1..60 {
        term = mat_scale(&mat_mul(&term, &bs), 1.0 / k as f64);
        x = mat_add(&x, &term);
        if frobenius(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        x = mat_mul(&x, &x);
    }
    x
}

/// Principal logarithm via the alternating power series in (A − I).
///
/// Requires ‖A − I‖_F < 1 (Frobenius dominates the spectral norm, so the
/// series converges); truncated when a term drops below 1e−16 or after 200
/// terms.
pub fn matrix_log_series(a: &Mat4) -> Result<Mat4, crate::Error> {
    let d = mat_sub(a, &identity());
    if frobenius(&d) >= 1.0 {
        return Err(crate::Error::NormTooLarge);
    }
    let mut x = [[0.0; 4]; 4];
    let mut p: Mat4 = identity();
    for k in 1..=200u32 {
        p = mat_mul(&p, &d);
        let term = mat_scale(&p, 1.0 / k as f64);
        if k % 2 == 1 {
            x = mat_add(&x, &term);
        } else {
            x = mat_sub(&x, &term);
        }
        if frobenius(&term) < 1e-16 {
            break;
        }
    }
    Ok(x)
}

/// A^m by binary exponentiation (`result = result·base` on each set bit).
pub fn matrix_pow(a: &Mat4, m: u64) -> Mat4 {
    let mut result: Mat4 = identity();
    let mut base = *a;
    let mut e = m;
    while e > 0 {
        if e & 1 == 1 {
            result = mat_mul(&result, &base);
        }
        base = mat_mul(&base, &base);
        e >>= 1;
    }
    result
}

/// Index pairs (i < j) of the second exterior power, lexicographic.
pub const WEDGE_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Second exterior power Λ²A: the 6×6 matrix of 2×2 minors of A, rows and
/// columns indexed by `WEDGE_PAIRS`.
pub fn wedge2(a: &Mat4) -> Mat6 {
    let mut w = [[0.0; 6]; 6];
    for (p, &(i, j)) in WEDGE_PAIRS.iter().enumerate() {
        for (q, &(k, l)) in WEDGE_PAIRS.iter().enumerate() {
            w[p][q] = a[i][k] * a[j][l] - a[i][l] * a[j][k];
        }
    }
    w
}

/// Commutator [X, Y] = XY − YX.
pub fn lie_bracket(x: &Mat4, y: &Mat4) -> Mat4 {
    mat_sub(&mat_mul(x, y), &mat_mul(y, x))
}

/// Element of 𝔰𝔭₂(ℝ) with its coordinates in the fixed basis.
///
/// An element has the block form [[A, B],[C, −ᵗA]] with B, C symmetric; the
/// coordinate order is (A₁₁, A₁₂, A₂₁, A₂₂, B₁₁, B₁₂, B₂₂, C₁₁, C₁₂, C₂₂).
/// `coords` reads one representative entry per basis direction, so
/// `from_coords(e.coords)` reproduces `entries` exactly whenever the matrix
/// satisfies the block form exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sp2Element {
    pub entries: Mat4,
    pub coords: [f64; 10],
}

impl Sp2Element {
    pub fn from_matrix(entries: Mat4) -> Self {
        let coords = [
            entries[0][0],
            entries[0][1],
            entries[1][0],
            entries[1][1],
            entries[0][2],
            entries[0][3],
            entries[1][3],
            entries[2][0],
            entries[2][1],
            entries[3][1],
        ];
        Sp2Element { entries, coords }
    }

    pub fn from_coords(c: [f64; 10]) -> Self {
        let entries = [
            [c[0], c[1], c[4], c[5]],
            [c[2], c[3], c[5], c[6]],
            [c[7], c[8], -c[0], -c[2]],
            [c[8], c[9], -c[1], -c[3]],
        ];
        Sp2Element { entries, coords: c }
    }

    /// ‖ᵗX J + J X‖_max of the stored entries.
    pub fn membership_defect(&self) -> f64 {
        sp2_membership_defect(&self.entries)
    }
}

/// Number of singular values of the stacked coordinate rows exceeding
/// `tol` × (largest singular value).
///
/// Uses one-sided Jacobi orthogonalization (high relative accuracy at these
/// tiny sizes), so rank decisions at relative tolerance 1e−8 are reliable.
pub fn rank_with_tolerance(elements: &[Sp2Element], tol: f64) -> usize {
    assert!(!elements.is_empty() && tol > 0.0);
    let mut cols: Vec<[f64; 10]> = elements.iter().map(|e| e.coords).collect();
    let k = cols.len();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let (mut app, mut aqq, mut apq) = (0.0, 0.0, 0.0);
                for i in 0..10 {
                    app += cols[p][i] * cols[p][i];
                    aqq += cols[q][i] * cols[q][i];
                    apq += cols[p][i] * cols[q][i];
                }
                if apq == 0.0 || apq.abs() <= 1e-15 * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..10 {
                    let vp = cols[p][i];
                    let vq = cols[q][i];
                    cols[p][i] = c * vp - s * vq;
                    cols[q][i] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cols
        .iter()
        .map(|c| {
            let mut s = 0.0;
            for x in c {
                s += x * x;
            }
            s.sqrt()
        })
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let smax = sv[0];
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}
