//! Random Stinespring channels, input-state families and Monte Carlo spectra.
//!
//! A channel with output dimension `n`, environment dimension `k` and input
//! dimension `d_in` is the isometry `V` formed by the first `d_in` columns of
//! a Haar unitary on `C^k ⊗ C^n` (environment first). Two-channel experiments
//! pair `V` with a second isometry cut from `conj(U)`, `U`, `U†` or `Uᵀ`.
//!
//! Inputs on `C^{d_in} ⊗ C^{d_in}` are stored as coefficient matrices:
//! `|ψ> = Σ a_ij |i>|j>` is the matrix `A = (a_ij)` with `Tr[AA†] = 1`, and a
//! mixed input is a weighted list of such matrices.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::exec::Exec;
use crate::linalg::{
    gram_spectrum, haar_unitary, hermitian_eigenvalues, partial_trace, von_neumann_entropy,
    ComplexMatrix, DensityMatrix, Keep, CONSTRUCTION_TOL,
};
use crate::{rng, Error, Result};

/// Output, environment and input dimensions of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelParams {
    pub n: usize,
    pub k: usize,
    pub d_in: usize,
}

impl ChannelParams {
    pub fn new(n: usize, k: usize, d_in: usize) -> Result<Self> {
        if n == 0 || k == 0 || d_in == 0 || d_in > n * k {
            return Err(Error::InvalidParameters(format!(
                "need 1 <= d_in <= n k (n = {n}, k = {k}, d_in = {d_in})"
            )));
        }
        Ok(Self { n, k, d_in })
    }

    /// `t = d_in / (n k)`.
    pub fn t(&self) -> f64 {
        self.d_in as f64 / (self.n * self.k) as f64
    }

    pub fn total_dim(&self) -> usize {
        self.n * self.k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pairing {
    /// `U ⊗ Ū`
    Conjugate,
    /// `U ⊗ U`
    Identical,
    /// `U ⊗ U*`
    Star,
    /// `U ⊗ Uᵀ`
    Transpose,
}

impl Pairing {
    pub const ALL: [Pairing; 4] = [
        Pairing::Conjugate,
        Pairing::Identical,
        Pairing::Star,
        Pairing::Transpose,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pairing::Conjugate => "conjugate",
            Pairing::Identical => "identical",
            Pairing::Star => "star",
            Pairing::Transpose => "transpose",
        }
    }
}

impl fmt::Display for Pairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pairing::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameters(format!("unknown pairing `{s}`")))
    }
}

/// The unitary the second channel is cut from.
pub fn second_unitary(u: &ComplexMatrix, pairing: Pairing) -> ComplexMatrix {
    match pairing {
        Pairing::Conjugate => u.conj(),
        Pairing::Identical => u.clone(),
        Pairing::Star => u.adjoint(),
        Pairing::Transpose => u.transpose(),
    }
}

/// First `d_in` columns of `u`.
pub fn make_isometry(u: &ComplexMatrix, d_in: usize) -> Result<ComplexMatrix> {
    u.leading_columns(d_in)
}

/// A Stinespring isometry `C^{d_in} -> C^k ⊗ C^n`.
#[derive(Debug, Clone)]
pub struct Channel {
    isometry: ComplexMatrix,
    n: usize,
    k: usize,
}

impl Channel {
    pub fn new(isometry: ComplexMatrix, n: usize, k: usize) -> Result<Self> {
        if isometry.rows() != n * k {
            return Err(Error::DimensionMismatch(format!(
                "isometry has {} rows, expected {}",
                isometry.rows(),
                n * k
            )));
        }
        Ok(Self { isometry, n, k })
    }

    pub fn from_unitary(u: &ComplexMatrix, params: ChannelParams) -> Result<Self> {
        Self::new(make_isometry(u, params.d_in)?, params.n, params.k)
    }

    pub fn isometry(&self) -> &ComplexMatrix {
        &self.isometry
    }

    pub fn d_in(&self) -> usize {
        self.isometry.cols()
    }

    /// Kraus block `K_e = (<e| ⊗ I_n) V`, an `n x d_in` matrix.
    pub fn kraus(&self, e: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.n, self.d_in(), |o, i| {
            self.isometry[(e * self.n + o, i)]
        })
    }

    fn dilate(&self, rho: &DensityMatrix) -> Result<ComplexMatrix> {
        if rho.dim() != self.d_in() {
            return Err(Error::DimensionMismatch(format!(
                "state of dimension {} for input dimension {}",
                rho.dim(),
                self.d_in()
            )));
        }
        self.isometry
            .matmul(rho.matrix())?
            .matmul(&self.isometry.adjoint())
    }

    /// `Tr_env[V ρ V†]`, an `n x n` state.
    pub fn apply_direct(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::new(partial_trace(&self.dilate(rho)?, self.k, self.n, Keep::B)?)
    }

    /// `Tr_out[V ρ V†]`, a `k x k` state.
    pub fn apply_complementary(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::new(partial_trace(&self.dilate(rho)?, self.k, self.n, Keep::A)?)
    }
}

/// Which side of the Stinespring dilation is kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutputSide {
    /// `(Φ^C ⊗ Ψ^C)`, a `k² x k²` output.
    Complementary,
    /// `(Φ ⊗ Ψ)`, reported through its nonzero spectrum.
    Direct,
}

impl OutputSide {
    pub fn name(self) -> &'static str {
        match self {
            OutputSide::Complementary => "complementary",
            OutputSide::Direct => "direct",
        }
    }
}

impl FromStr for OutputSide {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complementary" => Ok(OutputSide::Complementary),
            "direct" => Ok(OutputSide::Direct),
            _ => Err(Error::InvalidParameters(format!(
                "unknown output side `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputSpec {
    /// `(1/√d) Σ |ii>`
    Bell,
    /// `(1/√d) Σ_j e^{2πij/d} |jj>`
    DephasedBell,
    /// `Σ a_ij |i>|j>` for a `d_in x d_in` matrix with `Tr[AA†] = 1`.
    GeneralizedBell(ComplexMatrix),
    /// `(I_l/l) ⊗ (I_l/l) ⊗ |φ_{n/l}><φ_{n/l}|`; needs `d_in = n`, `l | n`.
    MixedBell { l: usize },
    /// `|0>|0>`
    ProductState,
    /// Bell state on the first `rank` basis vectors.
    LowRank { rank: usize },
}

impl InputSpec {
    /// Generalized Bell input with `Tr[A]/√d = m_abs`:
    /// `A = (m I + sqrt(1 - m²) D) / √d` with `D` the traceless diagonal of
    /// `d`-th roots of unity.
    pub fn with_overlap(m_abs: f64, d: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&m_abs) || d == 0 {
            return Err(Error::InvalidParameters(format!(
                "|m| = {m_abs} outside [0, 1]"
            )));
        }
        if d == 1 && m_abs < 1.0 {
            return Err(Error::InvalidParameters("d = 1 only admits |m| = 1".into()));
        }
        let s = (1.0 - m_abs * m_abs).sqrt();
        let scale = 1.0 / (d as f64).sqrt();
        let diag: Vec<Complex64> = (1..=d)
            .map(|j| {
                (Complex64::new(m_abs, 0.0) + Complex64::from_polar(s, TAU * j as f64 / d as f64))
                    * scale
            })
            .collect();
        Ok(InputSpec::GeneralizedBell(ComplexMatrix::from_diagonal(
            &diag,
        )))
    }

    pub fn name(&self) -> String {
        match self {
            InputSpec::Bell => "bell".into(),
            InputSpec::DephasedBell => "dephased".into(),
            InputSpec::GeneralizedBell(_) => "generalized".into(),
            InputSpec::MixedBell { l } => format!("mixed:{l}"),
            InputSpec::ProductState => "product".into(),
            InputSpec::LowRank { rank } => format!("lowrank:{rank}"),
        }
    }

    pub fn is_pure(&self) -> bool {
        !matches!(self, InputSpec::MixedBell { .. })
    }
}

/// A pure input (one coefficient matrix) or a weighted mixture of them.
#[derive(Debug, Clone, PartialEq)]
pub enum InputState {
    Pure(ComplexMatrix),
    Mixed(Vec<(f64, ComplexMatrix)>),
}

impl InputState {
    pub fn components(&self) -> Vec<(f64, &ComplexMatrix)> {
        match self {
            InputState::Pure(a) => vec![(1.0, a)],
            InputState::Mixed(parts) => parts.iter().map(|(w, a)| (*w, a)).collect(),
        }
    }

    /// Dimension of one tensor factor.
    pub fn local_dim(&self) -> usize {
        match self {
            InputState::Pure(a) => a.rows(),
            InputState::Mixed(parts) => parts[0].1.rows(),
        }
    }

    /// `Tr[A] / √d` for pure inputs.
    pub fn overlap(&self) -> Option<Complex64> {
        match self {
            InputState::Pure(a) => Some(a.trace() / (a.rows() as f64).sqrt()),
            InputState::Mixed(_) => None,
        }
    }

    /// The state as a `d² x d²` density matrix, index `i d + j` for `|i>|j>`.
    pub fn to_density(&self) -> Result<DensityMatrix> {
        let d = self.local_dim();
        let mut rho = ComplexMatrix::zeros(d * d, d * d);
        for (w, a) in self.components() {
            let proj = ComplexMatrix::outer(a.as_slice());
            rho = rho.add(&proj.scale(Complex64::new(w, 0.0)))?;
        }
        DensityMatrix::new(rho)
    }
}

fn diagonal_state(values: impl Iterator<Item = Complex64>) -> ComplexMatrix {
    let diag: Vec<Complex64> = values.collect();
    ComplexMatrix::from_diagonal(&diag)
}

pub fn build_input(spec: &InputSpec, params: ChannelParams) -> Result<InputState> {
    let d = params.d_in;
    let inv_sqrt = |x: usize| Complex64::new(1.0 / (x as f64).sqrt(), 0.0);
    let state =
        match spec {
            InputSpec::Bell => InputState::Pure(diagonal_state((0..d).map(|_| inv_sqrt(d)))),
            InputSpec::DephasedBell => InputState::Pure(diagonal_state((1..=d).map(|j| {
                Complex64::from_polar(1.0 / (d as f64).sqrt(), TAU * j as f64 / d as f64)
            }))),
            InputSpec::GeneralizedBell(a) => {
                if a.rows() != d || a.cols() != d {
                    return Err(Error::DimensionMismatch(format!(
                        "coefficient matrix is {}x{}, expected {d}x{d}",
                        a.rows(),
                        a.cols()
                    )));
                }
                let norm = a.frobenius_norm();
                if (norm * norm - 1.0).abs() > CONSTRUCTION_TOL {
                    return Err(Error::NotNormalized(norm * norm));
                }
                InputState::Pure(a.clone())
            }
            InputSpec::MixedBell { l } => {
                let l = *l;
                if d != params.n || l == 0 || !params.n.is_multiple_of(l) {
                    return Err(Error::InvalidParameters(format!(
                        "mixed Bell input needs d_in = n and l | n (n = {}, d_in = {d}, l = {l})",
                        params.n
                    )));
                }
                // both inputs split as C^l ⊗ C^{n/l}; the Bell pair joins the C^{n/l} parts
                let r = params.n / l;
                let amp = inv_sqrt(r);
                let weight = 1.0 / (l * l) as f64;
                let mut parts = Vec::with_capacity(l * l);
                for a in 0..l {
                    for c in 0..l {
                        let mut m = ComplexMatrix::zeros(d, d);
                        for b in 0..r {
                            m[(a * r + b, c * r + b)] = amp;
                        }
                        parts.push((weight, m));
                    }
                }
                InputState::Mixed(parts)
            }
            InputSpec::ProductState => {
                let mut m = ComplexMatrix::zeros(d, d);
                m[(0, 0)] = Complex64::new(1.0, 0.0);
                InputState::Pure(m)
            }
            InputSpec::LowRank { rank } => {
                let r = *rank;
                if r == 0 || r >= d {
                    return Err(Error::InvalidParameters(format!(
                        "low-rank input needs 1 <= r < d_in (r = {r})"
                    )));
                }
                InputState::Pure(diagonal_state((0..d).map(|i| {
                    if i < r {
                        inv_sqrt(r)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })))
            }
        };
    Ok(state)
}

/// One two-channel Monte Carlo configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub params: ChannelParams,
    pub pairing: Pairing,
    pub input: InputSpec,
    pub side: OutputSide,
}

impl Experiment {
    pub fn new(
        params: ChannelParams,
        pairing: Pairing,
        input: InputSpec,
        side: OutputSide,
    ) -> Self {
        Self {
            params,
            pairing,
            input,
            side,
        }
    }

    pub fn complementary(params: ChannelParams, pairing: Pairing, input: InputSpec) -> Self {
        Self::new(params, pairing, input, OutputSide::Complementary)
    }
}

/// `M = V A Wᵀ`: the output vector of `(V ⊗ W)|ψ>` as an `nk x nk` matrix with
/// rows `(e1, o1)` and columns `(e2, o2)`.
fn output_amplitudes(
    v: &ComplexMatrix,
    a: &ComplexMatrix,
    w: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    v.matmul(&a.matmul(&w.transpose())?)
}

/// Spectrum (descending) of one sampled output.
pub fn sample_output<R: Rng + ?Sized>(
    params: ChannelParams,
    pairing: Pairing,
    input: &InputState,
    side: OutputSide,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let u = haar_unitary(params.total_dim(), rng);
    let w_full = second_unitary(&u, pairing);
    let v = make_isometry(&u, params.d_in)?;
    let w = make_isometry(&w_full, params.d_in)?;
    output_spectrum(&v, &w, params, input, side)
}

/// Spectrum of the output of the channel pair `(v, w)` on `input`.
pub fn output_spectrum(
    v: &ComplexMatrix,
    w: &ComplexMatrix,
    params: ChannelParams,
    input: &InputState,
    side: OutputSide,
) -> Result<Vec<f64>> {
    let (n, k) = (params.n, params.k);
    if input.local_dim() != params.d_in {
        return Err(Error::DimensionMismatch(format!(
            "input on C^{} for d_in = {}",
            input.local_dim(),
            params.d_in
        )));
    }
    match side {
        OutputSide::Complementary => {
            let kk = k * k;
            let mut z = ComplexMatrix::zeros(kk, kk);
            for (weight, a) in input.components() {
                let m = output_amplitudes(v, a, w)?;
                for e1 in 0..k {
                    for e2 in 0..k {
                        for f1 in 0..k {
                            for f2 in 0..k {
                                let mut acc = Complex64::new(0.0, 0.0);
                                for o1 in 0..n {
                                    let r1 = m.row(e1 * n + o1);
                                    let r2 = m.row(f1 * n + o1);
                                    let x = &r1[e2 * n..(e2 + 1) * n];
                                    let y = &r2[f2 * n..(f2 + 1) * n];
                                    acc += x
                                        .iter()
                                        .zip(y)
                                        .map(|(a, b)| a * b.conj())
                                        .sum::<Complex64>();
                                }
                                z[(e1 * k + e2, f1 * k + f2)] += acc * weight;
                            }
                        }
                    }
                }
            }
            hermitian_eigenvalues(&z)
        }
        OutputSide::Direct => {
            let mut vectors = Vec::new();
            let mut weights = Vec::new();
            for (weight, a) in input.components() {
                let m = output_amplitudes(v, a, w)?;
                for e1 in 0..k {
                    for e2 in 0..k {
                        let mut u = Vec::with_capacity(n * n);
                        for o1 in 0..n {
                            u.extend_from_slice(&m.row(e1 * n + o1)[e2 * n..(e2 + 1) * n]);
                        }
                        vectors.push(u);
                        weights.push(weight);
                    }
                }
            }
            gram_spectrum(&vectors, &weights)
        }
    }
}

/// Result of one Hayden–Winter overlap check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HaydenWinter {
    pub overlap: f64,
    pub bound: f64,
    pub ok: bool,
}

/// `<φ_n| (Φ ⊗ Φ̄)(|φ_d><φ_d|) |φ_n>` against `d_in / (n k)`.
///
/// Uses `<φ_n|(K_e ⊗ K̄_f)|φ_d> = Tr[K_f† K_e] / √(n d)`.
pub fn hayden_winter_check(u: &ComplexMatrix, params: ChannelParams) -> Result<HaydenWinter> {
    let ch = Channel::from_unitary(u, params)?;
    let (n, k, d) = (params.n, params.k, params.d_in);
    let v = ch.isometry();
    let mut overlap = 0.0;
    for e in 0..k {
        for f in 0..k {
            let mut tr = Complex64::new(0.0, 0.0);
            for o in 0..n {
                let re = v.row(e * n + o);
                let rf = v.row(f * n + o);
                tr += rf
                    .iter()
                    .zip(re)
                    .map(|(x, y)| x.conj() * y)
                    .sum::<Complex64>();
            }
            overlap += tr.norm_sqr();
        }
    }
    overlap /= (n * d) as f64;
    let bound = d as f64 / (n * k) as f64;
    Ok(HaydenWinter {
        overlap,
        bound,
        ok: overlap >= bound - 1e-10,
    })
}

/// Sorted spectra and entropies from a Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSpectrum {
    pub trials: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
    pub entropies: Vec<f64>,
}

impl EmpiricalSpectrum {
    fn from_trials(trials: Vec<Vec<f64>>) -> Result<Self> {
        let count = trials.len();
        let width = trials.first().map_or(0, Vec::len);
        let mut means = vec![0.0; width];
        let mut std_devs = vec![0.0; width];
        let mut entropies = Vec::with_capacity(count);
        for t in &trials {
            let sum: f64 = t.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::NotNormalized(sum));
            }
            entropies.push(von_neumann_entropy(t)?);
            for (m, x) in means.iter_mut().zip(t) {
                *m += x;
            }
        }
        for m in means.iter_mut() {
            *m /= count as f64;
        }
        if count > 1 {
            for t in &trials {
                for ((s, x), m) in std_devs.iter_mut().zip(t).zip(&means) {
                    *s += (x - m) * (x - m);
                }
            }
            for s in std_devs.iter_mut() {
                *s = (*s / (count - 1) as f64).sqrt();
            }
        }
        Ok(Self {
            trials,
            means,
            std_devs,
            entropies,
        })
    }

    /// `Σ_i λ_i^p` per trial.
    pub fn power_sums(&self, p: u32) -> Vec<f64> {
        self.trials
            .iter()
            .map(|t| t.iter().map(|x| x.powi(p as i32)).sum())
            .collect()
    }

    /// Sample mean and standard error of `Tr[Z^p]`.
    pub fn moment_estimate(&self, p: u32) -> (f64, f64) {
        mean_and_standard_error(&self.power_sums(p))
    }

    pub fn mean_entropy(&self) -> f64 {
        self.entropies.iter().sum::<f64>() / self.entropies.len() as f64
    }
}

pub fn mean_and_standard_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs `trials` independent samples; trial `i` draws from the stream seeded by
/// `(seed, i)`, so the result does not depend on `exec`.
pub fn monte_carlo(
    experiment: &Experiment,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<EmpiricalSpectrum> {
    if trials == 0 {
        return Err(Error::InvalidParameters(
            "at least one trial is required".into(),
        ));
    }
    let input = build_input(&experiment.input, experiment.params)?;
    let results = exec.map_indexed(trials, |i| {
        let mut r = rng::stream(seed, i as u64);
        sample_output(
            experiment.params,
            experiment.pairing,
            &input,
            experiment.side,
            &mut r,
        )
    });
    let trials = results.into_iter().collect::<Result<Vec<_>>>()?;
    EmpiricalSpectrum::from_trials(trials)
}
