//! Exact unitary Weingarten function.
//!
//! `Wg(n, ·)` is the convolution inverse on `S_p` of `σ ↦ n^{#σ}`. Because it is
//! a class function, the table is obtained by solving a square linear system
//! with one unknown per cycle type and one equation per class representative,
//! in exact rational arithmetic. Only the invertible regime `n >= p` is
//! supported.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::symgroup::{self, partitions, CycleType, Permutation};
use crate::{Error, Result};

pub type ExactRational = BigRational;

/// Largest symmetric-group degree a table may be built for.
pub const MAX_DEGREE: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct WeingartenTable {
    dimension: u64,
    degree: usize,
    types: Vec<CycleType>,
    values: Vec<BigRational>,
}

impl WeingartenTable {
    pub fn build(n: u64, p: usize) -> Result<Self> {
        if p == 0 || p > MAX_DEGREE {
            return Err(Error::BoundExceeded {
                degree: p,
                bound: MAX_DEGREE,
            });
        }
        if n < p as u64 {
            return Err(Error::UnsupportedRegime { n, p });
        }
        let types = partitions(p);
        let t = types.len();
        let index: HashMap<&CycleType, usize> =
            types.iter().enumerate().map(|(i, c)| (c, i)).collect();
        let group: Vec<Permutation> = symgroup::enumerate_group(p)?.collect();
        let group_types: Vec<usize> = group.iter().map(|g| index[&g.cycle_type()]).collect();

        // coeff[mu][lam] = sum over tau of type lam of n^{#(tau^{-1} sigma_mu)}
        let n_big = BigInt::from(n);
        let powers: Vec<BigInt> = (0..=p).map(|c| num_traits::pow(n_big.clone(), c)).collect();
        let mut system = vec![vec![BigRational::zero(); t + 1]; t];
        for (mu, ty) in types.iter().enumerate() {
            let sigma = ty.representative();
            let mut counts = vec![vec![0u64; p + 1]; t];
            for (tau, &lam) in group.iter().zip(&group_types) {
                let c = tau.inverse().compose(&sigma)?.count_cycles();
                counts[lam][c] += 1;
            }
            for lam in 0..t {
                let mut acc = BigInt::zero();
                for (c, &cnt) in counts[lam].iter().enumerate() {
                    if cnt > 0 {
                        acc += &powers[c] * BigInt::from(cnt);
                    }
                }
                system[mu][lam] = BigRational::from_integer(acc);
            }
            if ty.parts().iter().all(|&x| x == 1) {
                system[mu][t] = BigRational::one();
            }
        }
        let values = solve_exact(system).ok_or(Error::UnsupportedRegime { n, p })?;
        Ok(Self {
            dimension: n,
            degree: p,
            types,
            values,
        })
    }

    /// Shared, memoized table for `(n, p)`.
    pub fn cached(n: u64, p: usize) -> Result<Arc<Self>> {
        type Cache = Mutex<HashMap<(u64, usize), Arc<WeingartenTable>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(t) = cache.lock().unwrap().get(&(n, p)) {
            return Ok(t.clone());
        }
        let table = Arc::new(Self::build(n, p)?);
        cache.lock().unwrap().insert((n, p), table.clone());
        Ok(table)
    }

    pub fn dimension(&self) -> u64 {
        self.dimension
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Cycle types in the order used by [`WeingartenTable::values`].
    pub fn cycle_types(&self) -> &[CycleType] {
        &self.types
    }

    pub fn values(&self) -> &[BigRational] {
        &self.values
    }

    pub fn entries(&self) -> impl Iterator<Item = (&CycleType, &BigRational)> {
        self.types.iter().zip(&self.values)
    }

    pub fn value(&self, ty: &CycleType) -> Option<&BigRational> {
        self.types
            .iter()
            .position(|t| t == ty)
            .map(|i| &self.values[i])
    }

    pub fn wg(&self, sigma: &Permutation) -> Result<BigRational> {
        if sigma.degree() != self.degree {
            return Err(Error::DegreeMismatch(sigma.degree(), self.degree));
        }
        Ok(self
            .value(&sigma.cycle_type())
            .expect("every cycle type is tabulated")
            .clone())
    }

    /// Re-checks `Σ_τ Wg(τ) n^{#(τ⁻¹σ)} = δ_{σ,id}` exactly on one
    /// representative per conjugacy class (sufficient for class functions).
    pub fn verify_convolution(&self) -> Result<bool> {
        let reps: Vec<Permutation> = self.types.iter().map(CycleType::representative).collect();
        self.verify_convolution_on(&reps)
    }

    /// Same identity, checked for each `σ` in `sigmas`.
    pub fn verify_convolution_on(&self, sigmas: &[Permutation]) -> Result<bool> {
        let group: Vec<Permutation> = symgroup::enumerate_group(self.degree)?.collect();
        let weights: Vec<BigRational> = group.iter().map(|g| self.wg(g)).collect::<Result<_>>()?;
        let n = BigInt::from(self.dimension);
        for sigma in sigmas {
            let mut acc = BigRational::zero();
            for (tau, w) in group.iter().zip(&weights) {
                let c = tau.inverse().compose(sigma)?.count_cycles();
                acc += w * BigRational::from_integer(num_traits::pow(n.clone(), c));
            }
            let target = if sigma.is_identity() {
                BigRational::one()
            } else {
                BigRational::zero()
            };
            if acc != target {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

// Gauss-Jordan on an augmented matrix; None when singular.
fn solve_exact(mut m: Vec<Vec<BigRational>>) -> Option<Vec<BigRational>> {
    let t = m.len();
    for col in 0..t {
        let pivot = (col..t).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        let inv = m[col][col].recip();
        for x in m[col].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r == col || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                *x -= &f * y;
            }
        }
    }
    Some(m.into_iter().map(|row| row[t].clone()).collect())
}

/// Catalan number `(2i)! / ((i+1)! i!)`.
pub fn catalan(i: u32) -> BigUint {
    // C_{j+1} = C_j * 2(2j+1) / (j+2)
    let mut c = BigUint::one();
    for j in 0..i {
        c = c * BigUint::from(2 * (2 * j + 1)) / BigUint::from(j + 2);
    }
    c
}

/// Möbius function: product over cycles of `(-1)^{len-1} Catalan(len-1)`.
pub fn mobius(sigma: &Permutation) -> BigInt {
    sigma
        .cycle_type()
        .parts()
        .iter()
        .map(|&len| {
            let c = BigInt::from(catalan(len as u32 - 1));
            if len % 2 == 0 {
                -c
            } else {
                c
            }
        })
        .product()
}

/// Leading-order approximation `n^{-(p + |σ|)} Mob(σ)`.
pub fn asymptotic_wg(n: u64, sigma: &Permutation) -> f64 {
    let exponent = (sigma.degree() + sigma.length()) as i32;
    let mob = mobius(sigma).to_f64().unwrap_or(f64::NAN);
    mob * (n as f64).powi(-exponent)
}

/// Closed form of `Wg(n, full d-cycle)` in `S_d`.
pub fn single_cycle_closed_form(n: u64, d: usize) -> Result<BigRational> {
    if d == 0 || n < d as u64 {
        return Err(Error::UnsupportedRegime { n, p: d });
    }
    let d_i = d as i64;
    let denom: BigInt = ((-d_i + 1)..=(d_i - 1))
        .map(|j| BigInt::from(n as i64 - j))
        .product();
    let mut num = BigInt::from(catalan(d as u32 - 1));
    if d.is_multiple_of(2) {
        num = -num;
    }
    Ok(BigRational::new(num, denom))
}

/// `|a / b - 1|` in floating point.
pub fn relative_error(approx: f64, exact: &BigRational) -> f64 {
    let e = exact.to_f64().unwrap_or(f64::NAN);
    ((approx - e) / e).abs()
}

/// Renders a rational as `"num/den"` (or `"num"` for integers).
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"num/den"` or `"num"`.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let mut it = s.trim().splitn(2, '/');
    let num: BigInt = it.next()?.trim().parse().ok()?;
    let den: BigInt = match it.next() {
        Some(d) => d.trim().parse().ok()?,
        None => BigInt::one(),
    };
    if den.is_zero() {
        return None;
    }
    Some(BigRational::new(num, den))
}
