//! Limiting spectra and moments of the two-channel models as `n → ∞`, with
//! subset-sum evaluations of the limiting moments used as oracles.

use crate::channels::{build_input, Experiment, InputSpec, OutputSide, Pairing};
use crate::linalg::von_neumann_entropy;
use crate::{Error, Result};

const MASS_TOL: f64 = 1e-12;

/// A finitely supported spectrum: eigenvalue with multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAtoms {
    atoms: Vec<(f64, usize)>,
}

impl SpectralAtoms {
    /// Drops zero multiplicities and checks nonnegativity and unit mass.
    pub fn new(atoms: Vec<(f64, usize)>) -> Result<Self> {
        let atoms: Vec<(f64, usize)> = atoms.into_iter().filter(|&(_, m)| m > 0).collect();
        if atoms.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(&(x, _)) = atoms
            .iter()
            .find(|&&(x, _)| x < -MASS_TOL || !x.is_finite())
        {
            return Err(Error::InvalidParameters(format!("negative atom {x}")));
        }
        let mass = total_mass(&atoms);
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::NotNormalized(mass));
        }
        Ok(Self {
            atoms: atoms.into_iter().map(|(x, m)| (x.max(0.0), m)).collect(),
        })
    }

    pub fn atoms(&self) -> &[(f64, usize)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        total_mass(&self.atoms)
    }

    /// `Σ multiplicity · λ^p`
    pub fn moment(&self, p: u32) -> f64 {
        self.atoms
            .iter()
            .map(|&(x, m)| m as f64 * x.powi(p as i32))
            .sum()
    }

    /// All eigenvalues, descending.
    pub fn expanded(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .atoms
            .iter()
            .flat_map(|&(x, m)| std::iter::repeat_n(x, m))
            .collect();
        out.sort_by(|a, b| b.total_cmp(a));
        out
    }

    pub fn top(&self) -> f64 {
        self.atoms.iter().map(|&(x, _)| x).fold(0.0, f64::max)
    }

    /// Von Neumann entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.atoms
            .iter()
            .filter(|&&(x, _)| x > 0.0)
            .map(|&(x, m)| -(m as f64) * x * x.ln())
            .sum()
    }
}

fn total_mass(atoms: &[(f64, usize)]) -> f64 {
    atoms.iter().map(|&(x, m)| m as f64 * x).sum()
}

/// Parameters of a limiting model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelLimits {
    pub t: f64,
    pub m_abs: f64,
    pub k: usize,
    pub l: usize,
}

impl ModelLimits {
    pub fn new(t: f64, m_abs: f64, k: usize, l: usize) -> Result<Self> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidParameters(format!("t = {t} outside (0, 1]")));
        }
        if !(0.0..=1.0).contains(&m_abs) {
            return Err(Error::InvalidParameters(format!(
                "|m| = {m_abs} outside [0, 1]"
            )));
        }
        if k < 2 || l < 1 {
            return Err(Error::InvalidParameters(format!(
                "need k >= 2 and l >= 1 (k = {k}, l = {l})"
            )));
        }
        if t * m_abs * m_abs > 1.0 + MASS_TOL {
            return Err(Error::InvalidParameters(format!(
                "t |m|^2 = {} exceeds 1",
                t * m_abs * m_abs
            )));
        }
        Ok(Self { t, m_abs, k, l })
    }

    /// `t |m|²`, clamped to `[0, 1]`.
    pub fn strength(&self) -> f64 {
        (self.t * self.m_abs * self.m_abs).min(1.0)
    }
}

/// `U ⊗ Ū` with a generalized Bell input of overlap `|m|`.
pub fn limit_spectrum_conjugate(t: f64, m_abs: f64, k: usize) -> Result<SpectralAtoms> {
    let s = ModelLimits::new(t, m_abs, k, 1)?.strength();
    let kk = (k * k) as f64;
    let low = (1.0 - s) / kk;
    SpectralAtoms::new(vec![(s + low, 1), (low, k * k - 1)])
}

/// `[1/k² + (k²-1) t|m|²/k²]^p + (k²-1) [1/k² - t|m|²/k²]^p`
pub fn limit_moment_conjugate(t: f64, m_abs: f64, k: usize, p: u32) -> Result<f64> {
    let s = ModelLimits::new(t, m_abs, k, 1)?.strength();
    let kk = (k * k) as f64;
    let p = p as i32;
    Ok((1.0 / kk + (kk - 1.0) * s / kk).powi(p) + (kk - 1.0) * (1.0 / kk - s / kk).powi(p))
}

/// Runs `f(|A|, |B \ A|, A empty)` over all pairs `A ⊆ B ⊆ {1..p}`.
fn subset_pairs(p: u32, mut f: impl FnMut(u32, u32, bool)) {
    for b in 0u32..(1 << p) {
        // enumerate submasks of b
        let mut a = b;
        loop {
            f(a.count_ones(), (b & !a).count_ones(), a == 0);
            if a == 0 {
                break;
            }
            a = (a - 1) & b;
        }
    }
}

/// The limiting conjugate moment as the explicit subset sum
/// `(a) - (b) + (c)` over `A ⊆ B ⊆ {1..p}`.
pub fn subset_sum_oracle(t: f64, m_abs: f64, k: usize, p: u32) -> Result<f64> {
    let x = ModelLimits::new(t, m_abs, k, 1)?.strength() * k as f64;
    let kf = k as f64;
    let (mut a_sum, mut b_sum, mut c_sum) = (0.0, 0.0, 0.0);
    subset_pairs(p, |a, diff, empty| {
        let common = x.powi((a + diff) as i32) * kf.powi(-2 * p as i32 - diff as i32) * sign(diff);
        a_sum += kf.powi(a as i32) * common;
        if empty {
            b_sum += common;
            c_sum += kf * kf * common;
        }
    });
    Ok(a_sum - b_sum + c_sum)
}

fn sign(e: u32) -> f64 {
    if e.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `δ_{1/k²}` with multiplicity `k²`.
pub fn limit_spectrum_flat(k: usize) -> Result<SpectralAtoms> {
    if k == 0 {
        return Err(Error::InvalidParameters("k must be positive".into()));
    }
    SpectralAtoms::new(vec![(1.0 / (k * k) as f64, k * k)])
}

/// Mixed Bell input; `Complementary` is the `k² x k²` output, `Direct` the
/// nonzero part of the `n² x n²` output.
pub fn limit_spectrum_mixed(k: usize, l: usize, side: OutputSide) -> Result<SpectralAtoms> {
    ModelLimits::new(1.0, 0.0, k, l)?;
    let (k, l) = (k as f64, l as f64);
    let (kk, ll) = ((k * k) as usize, (l * l) as usize);
    let cross = 1.0 / (k * k * k * l * l);
    match side {
        OutputSide::Complementary => SpectralAtoms::new(vec![
            (1.0 / (k * l * l) + 1.0 / (k * k) - cross, 1),
            (1.0 / (k * k) - cross, kk - 1),
        ]),
        OutputSide::Direct => {
            let base = 1.0 / (k * k * l * l);
            SpectralAtoms::new(vec![
                (1.0 / (k * l * l) + base - cross, 1),
                (base, kk * ll - kk),
                (base - cross, kk - 1),
            ])
        }
    }
}

/// The limiting mixed-model moment from the explicit subset sums:
/// `S1 + S3 - S2` (complementary output) or `S1 - S2 + S3 - S4 + S5` (direct).
pub fn mixed_moment_oracle(k: usize, l: usize, p: u32, side: OutputSide) -> Result<f64> {
    ModelLimits::new(1.0, 0.0, k, l)?;
    let (kf, lf) = (k as f64, l as f64);
    let pi = p as i32;
    let mut s = [0.0f64; 5];
    match side {
        OutputSide::Complementary => {
            subset_pairs(p, |a, diff, empty| {
                let b = (a + diff) as i32;
                let l_part = lf.powi(-2 * b) * sign(diff);
                if empty {
                    s[0] += l_part * kf.powi(2 - 2 * pi - b);
                    s[1] += l_part * kf.powi(-2 * pi - b);
                }
                s[2] += l_part * kf.powi(a as i32 - 2 * pi - diff as i32);
            });
            Ok(s[0] + s[2] - s[1])
        }
        OutputSide::Direct => {
            let scale = (kf * lf).powi(-2 * pi);
            subset_pairs(p, |a, diff, empty| {
                let term = kf.powi(-(diff as i32)) * sign(diff);
                s[0] += kf.powi(a as i32) * term;
                if empty {
                    s[1] += term;
                    s[2] += kf * kf * term;
                    if diff == 0 {
                        s[3] += kf * kf;
                        s[4] += kf * kf * lf * lf;
                    }
                }
            });
            Ok(scale * (s[0] - s[1] + s[2] - s[3] + s[4]))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub m_abs: f64,
    pub top: f64,
    pub entropy: f64,
}

/// Top eigenvalue and entropy of the conjugate limit spectrum along `m_grid`.
pub fn entropy_scan(t: f64, k: usize, m_grid: &[f64]) -> Result<Vec<ScanRow>> {
    m_grid
        .iter()
        .map(|&m| {
            let atoms = limit_spectrum_conjugate(t, m, k)?;
            Ok(ScanRow {
                m_abs: m,
                top: atoms.top(),
                entropy: atoms.entropy(),
            })
        })
        .collect()
}

/// Whether the top eigenvalue strictly increases and the entropy strictly
/// decreases along the scan (grid sorted ascending in `|m|`).
pub fn scan_is_monotone(rows: &[ScanRow]) -> bool {
    rows.windows(2)
        .all(|w| w[0].m_abs < w[1].m_abs && w[0].top < w[1].top && w[0].entropy > w[1].entropy)
}

/// The predicted limit spectrum of an experiment, when one is known.
///
/// Pure inputs give the same nonzero spectrum on both output sides. The
/// conjugate model uses the finite-`n` values of `t` and `|m|`.
pub fn predicted_limit(exp: &Experiment) -> Result<Option<SpectralAtoms>> {
    let k = exp.params.k;
    match (&exp.input, exp.pairing) {
        (InputSpec::MixedBell { l }, Pairing::Conjugate) => {
            limit_spectrum_mixed(k, *l, exp.side).map(Some)
        }
        (InputSpec::MixedBell { .. }, _) => Ok(None),
        (_, Pairing::Conjugate) => {
            let input = build_input(&exp.input, exp.params)?;
            let m = input.overlap().map_or(0.0, |z| z.norm()).min(1.0);
            limit_spectrum_conjugate(exp.params.t(), m, k).map(Some)
        }
        (InputSpec::Bell, _) => limit_spectrum_flat(k).map(Some),
        _ => Ok(None),
    }
}

/// Per-coordinate absolute deviation between a mean spectrum and the atoms.
pub fn deviation(means: &[f64], atoms: &SpectralAtoms) -> Vec<f64> {
    means
        .iter()
        .zip(atoms.expanded())
        .map(|(a, b)| (a - b).abs())
        .collect()
}

/// Entropy of the atoms as a check on `von_neumann_entropy`.
pub fn atoms_entropy_checked(atoms: &SpectralAtoms) -> Result<f64> {
    von_neumann_entropy(&atoms.expanded())
}
