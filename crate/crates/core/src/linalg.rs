//! Small dense complex linear algebra: the Hermitian Jacobi eigensolver used
//! by the Monte Carlo oracle, and Gram matrices of channel draws.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_TOL: f64 = 1e-15;

/// The `s × s` Gram matrix of `h` with `s = min(rows, cols)`: `h h†` for a
/// wide or square `h`, `h† h` for a tall one. Both share the nonzero
/// spectrum.
pub fn gram(h: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    if h.nrows() <= h.ncols() {
        h * h.adjoint()
    } else {
        h.adjoint() * h
    }
}

/// Eigenvalues of a Hermitian matrix in descending order, by cyclic Jacobi
/// rotations. Only the upper triangle and the real part of the diagonal are
/// trusted.
pub fn hermitian_eigenvalues(a: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "hermitian_eigenvalues expects a square matrix");
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
        for j in i + 1..n {
            m[(j, i)] = m[(i, j)].conj();
        }
    }
    let total = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&m);
        if off <= OFF_DIAGONAL_TOL * total || off == 0.0 {
            break;
        }
        if sweeps == MAX_SWEEPS {
            let diagonal = (0..n).map(|i| m[(i, i)].re.powi(2)).sum::<f64>().sqrt();
            return Err(Error::Eigensolver {
                sweeps,
                off_diagonal: off,
                diagonal,
            });
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut m, p, q);
            }
        }
        sweeps += 1;
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    Ok(eig)
}

fn off_diagonal_norm(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            sum += 2.0 * m[(i, j)].norm_sqr();
        }
    }
    sum.sqrt()
}

/// Annihilates `m[p][q]` with the unitary `U = diag(1, e^{-iφ})·G(c, s)`,
/// `φ = arg m[p][q]`, applied as `m ← U† m U` on rows and columns `p`, `q`.
fn rotate(m: &mut DMatrix<Complex64>, p: usize, q: usize) {
    let apq = m[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let phase = apq / r;
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let e = phase.conj();
    // U = [[c, s], [-s e, c e]]
    let u = [
        [Complex64::new(c, 0.0), Complex64::new(s, 0.0)],
        [-e * s, e * c],
    ];
    let n = m.nrows();
    for k in 0..n {
        let xp = m[(k, p)];
        let xq = m[(k, q)];
        m[(k, p)] = xp * u[0][0] + xq * u[1][0];
        m[(k, q)] = xp * u[0][1] + xq * u[1][1];
    }
    for k in 0..n {
        let xp = m[(p, k)];
        let xq = m[(q, k)];
        m[(p, k)] = u[0][0].conj() * xp + u[1][0].conj() * xq;
        m[(q, k)] = u[0][1].conj() * xp + u[1][1].conj() * xq;
    }
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);
    m[(p, p)] = Complex64::new(app - t * r, 0.0);
    m[(q, q)] = Complex64::new(aqq + t * r, 0.0);
}

/// Singular values of a complex matrix, descending, via the Gram spectrum.
pub fn singular_values(h: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    Ok(hermitian_eigenvalues(&gram(h))?
        .into_iter()
        .map(|v| v.max(0.0).sqrt())
        .collect())
}
