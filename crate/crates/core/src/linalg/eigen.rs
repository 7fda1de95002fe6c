use num_complex::Complex64;

use super::ComplexMatrix;
use crate::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-8;
const OFF_DIAGONAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a Hermitian matrix in descending order, by cyclic complex
/// Jacobi rotations.
///
/// Sweeps continue until the off-diagonal Frobenius mass drops below `1e-12`
/// (relative to the Frobenius norm when that exceeds one).
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} is not square",
            m.rows(),
            m.cols()
        )));
    }
    let dev = m.hermitian_deviation();
    if dev > HERMITIAN_TOL * m.max_abs().max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    let n = m.rows();
    // symmetrize so that rounding asymmetry does not accumulate
    let mut a: Vec<Complex64> = ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(m[(i, i)].re, 0.0)
        } else {
            (m[(i, j)] + m[(j, i)].conj()) * 0.5
        }
    })
    .as_slice()
    .to_vec();
    let threshold = OFF_DIAGONAL_TOL * m.frobenius_norm().max(1.0);

    let off = |a: &[Complex64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let mass = off(&a);
        if mass < threshold {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence(mass));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, n, p, q);
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    eig.sort_unstable_by(|x, y| y.total_cmp(x));
    Ok(eig)
}

// Annihilates a[p][q] with G = D R, where D = diag(1, e^{-iφ}) makes the pivot
// real and R is the real Jacobi rotation; A <- G† A G.
fn rotate(a: &mut [Complex64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    let g = apq.norm();
    if g < 1e-300 {
        return;
    }
    let phase = apq / g; // e^{iφ}
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    let zeta = (aqq - app) / (2.0 * g);
    let t = if zeta >= 0.0 {
        1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
    } else {
        -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let ph = phase.conj();
    let gpp = Complex64::new(c, 0.0);
    let gpq = Complex64::new(s, 0.0);
    let gqp = ph * (-s);
    let gqq = ph * c;

    // columns: A <- A G
    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = akp * gpp + akq * gqp;
        a[k * n + q] = akp * gpq + akq * gqq;
    }
    // rows: A <- G† A
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = gpp.conj() * apk + gqp.conj() * aqk;
        a[q * n + k] = gpq.conj() * apk + gqq.conj() * aqk;
    }
    a[p * n + q] = Complex64::new(0.0, 0.0);
    a[q * n + p] = Complex64::new(0.0, 0.0);
    a[p * n + p].im = 0.0;
    a[q * n + q].im = 0.0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn random_hermitian(d: usize, seed: u64) -> ComplexMatrix {
        let mut r = rng::stream(seed, 11);
        let g = ComplexMatrix::from_fn(d, d, |_, _| rng::complex_gaussian(&mut r));
        g.add(&g.adjoint()).unwrap()
    }

    #[test]
    fn diagonal_inputs() {
        assert_eq!(
            hermitian_eigenvalues(&ComplexMatrix::identity(4)).unwrap(),
            vec![1.0; 4]
        );
        let d = ComplexMatrix::from_real_diagonal(&[3.0, 1.0, 2.0]);
        assert_eq!(hermitian_eigenvalues(&d).unwrap(), vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn two_by_two_closed_form() {
        // [[1, i], [-i, 1]] has eigenvalues 2 and 0
        let mut m = ComplexMatrix::identity(2);
        m[(0, 1)] = Complex64::new(0.0, 1.0);
        m[(1, 0)] = Complex64::new(0.0, -1.0);
        let e = hermitian_eigenvalues(&m).unwrap();
        assert!((e[0] - 2.0).abs() < 1e-14 && e[1].abs() < 1e-14);
    }

    #[test]
    fn trace_and_frobenius_identities() {
        for seed in 0..10 {
            let m = random_hermitian(5, seed);
            let e = hermitian_eigenvalues(&m).unwrap();
            let s1: f64 = e.iter().sum();
            let s2: f64 = e.iter().map(|x| x * x).sum();
            assert!((s1 - m.trace().re).abs() < 1e-9);
            assert!((s2 - m.frobenius_norm().powi(2)).abs() < 1e-9);
            assert!(e.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn power_sums_match_traces() {
        for seed in 0..10 {
            let d = 3 + seed as usize % 6;
            let m = random_hermitian(d, 100 + seed);
            let e = hermitian_eigenvalues(&m).unwrap();
            let m2 = m.matmul(&m).unwrap();
            let m3 = m2.matmul(&m).unwrap();
            for (p, mp) in [(1, &m), (2, &m2), (3, &m3)] {
                let lhs: f64 = e.iter().map(|x| x.powi(p)).sum();
                assert!((lhs - mp.trace().re).abs() < 1e-8 * mp.frobenius_norm().max(1.0));
            }
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = ComplexMatrix::identity(3);
        m[(0, 2)] = Complex64::new(1.0, 0.0);
        assert!(matches!(
            hermitian_eigenvalues(&m),
            Err(Error::NotHermitian(_))
        ));
        assert!(hermitian_eigenvalues(&ComplexMatrix::zeros(2, 3)).is_err());
    }
}
