use num_complex::Complex64;
use rand::Rng;

use super::{inner, ComplexMatrix};
use crate::rng::complex_gaussian;

/// Haar-distributed `d x d` unitary.
///
/// A Ginibre matrix is orthonormalized column by column with classical
/// Gram–Schmidt applied twice. Each column is divided by its positive norm, so
/// the implied triangular factor has a positive real diagonal; that phase
/// convention is what makes the result Haar rather than merely unitary.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    // columns are generated in order so a given stream always yields the same U
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    for _ in 0..d {
        let mut v: Vec<Complex64> = (0..d).map(|_| complex_gaussian(rng)).collect();
        for _pass in 0..2 {
            for q in &cols {
                let proj = inner(q, &v);
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= proj * y;
                }
            }
        }
        let norm = super::norm(&v);
        for x in v.iter_mut() {
            *x /= norm;
        }
        cols.push(v);
    }
    ComplexMatrix::from_fn(d, d, |i, j| cols[j][i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn unitarity_residual() {
        let mut r = rng::stream(42, 0);
        for d in [1, 2, 7, 50] {
            let u = haar_unitary(d, &mut r);
            let res = u
                .matmul(&u.adjoint())
                .unwrap()
                .max_abs_diff(&ComplexMatrix::identity(d))
                .unwrap();
            assert!(res < 1e-10, "d={d} residual {res:e}");
            let res = u
                .adjoint()
                .matmul(&u)
                .unwrap()
                .max_abs_diff(&ComplexMatrix::identity(d))
                .unwrap();
            assert!(res < 1e-10);
        }
    }

    #[test]
    fn first_moments_match_haar() {
        // E|U_ij|^2 = 1/d and E U_ij = 0; standard error of |U_11|^2 is
        // sqrt((2/(d(d+1)) - 1/d^2) / trials)
        let d = 8;
        let trials = 10_000;
        let mut sq = [0.0f64; 3];
        let mut sq2 = [0.0f64; 3];
        let mut mean = Complex64::new(0.0, 0.0);
        let entries = [(0, 0), (3, 5), (7, 2)];
        for t in 0..trials {
            let mut r = rng::stream(5, t);
            let u = haar_unitary(d, &mut r);
            mean += u[(0, 0)];
            for (k, &(i, j)) in entries.iter().enumerate() {
                let x = u[(i, j)].norm_sqr();
                sq[k] += x;
                sq2[k] += x * x;
            }
        }
        let n = trials as f64;
        for k in 0..3 {
            let m = sq[k] / n;
            let se = ((sq2[k] / n - m * m) / n).sqrt();
            assert!(
                (m - 1.0 / d as f64).abs() < 3.0 * se,
                "entry {k}: {m} (se {se})"
            );
        }
        let se_mean = (1.0 / (d as f64 * n)).sqrt();
        assert!(mean.re.abs() / n < 3.0 * se_mean / 2f64.sqrt() * 1.5);
        assert!(mean.im.abs() / n < 3.0 * se_mean / 2f64.sqrt() * 1.5);
    }

    #[test]
    fn left_invariance_of_marginals() {
        // W U with a fixed unitary W must have the same |entry|^2 means
        let d = 4;
        let mut wr = rng::stream(99, 0);
        let w = haar_unitary(d, &mut wr);
        let trials = 8000;
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for t in 0..trials {
            let mut r = rng::stream(17, t);
            let u = w.matmul(&haar_unitary(d, &mut r)).unwrap();
            let x = u[(1, 2)].norm_sqr();
            acc += x;
            acc2 += x * x;
        }
        let n = trials as f64;
        let m = acc / n;
        let se = ((acc2 / n - m * m) / n).sqrt();
        assert!((m - 0.25).abs() < 3.0 * se);
    }
}
