//! Four-qubit Shor demonstration: factoring 4 with base 3.
//!
//! The register is `|m1 m0, n1 n0>` with `x = 2 m1 + m0` on the two left
//! qubits and `y = 2 n1 + n0` on the two right ones, so basis index
//! `n = 4x + y`. The pipeline is superposition on `x`, `y -> y + 3^x mod 4`,
//! then a discrete Fourier transform on `x`.
//!
//! Three timing modes are modelled:
//!
//! * instantaneous: the three unitaries back to back;
//! * bare delay: free evolution `exp(-i E_ab tau)` between the stages, so
//!   terms reaching the same final state remember which states they passed
//!   through and interference is lost;
//! * natural phase: each stage is applied in the interaction picture at its
//!   application time, as a resonant pulse does, so every amplitude carries
//!   only its own natural phase and the `x` distribution is restored.

use num_complex::Complex;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{cis, lit, to_f64, Real};
use crate::spin_model::{diagonal_energies, QuantumState, SpinSystem};

/// Number of `x` values (and of `y` values).
pub const REGISTER_SIZE: usize = 4;
/// Total basis states of the two registers.
pub const SHOR_DIM: usize = REGISTER_SIZE * REGISTER_SIZE;

#[inline]
pub fn register_index(x: usize, y: usize) -> usize {
    REGISTER_SIZE * x + y
}

#[inline]
pub fn split_index(index: usize) -> (usize, usize) {
    (index / REGISTER_SIZE, index % REGISTER_SIZE)
}

/// `|m1 m0, n1 n0>` label of a basis index.
pub fn ket_label(index: usize) -> String {
    let (x, y) = split_index(index);
    format!("|{:02b},{:02b}>", x, y)
}

/// Thin view of a 16-dimensional state as an `(x, y)` register pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ShorRegisters<T> {
    pub state: QuantumState<T>,
}

impl<T: Real> ShorRegisters<T> {
    pub fn new(state: QuantumState<T>) -> Result<Self> {
        if state.dim() != SHOR_DIM {
            return Err(Error::Dimension {
                what: "shor register state",
                expected: SHOR_DIM,
                actual: state.dim(),
            });
        }
        Ok(Self { state })
    }

    /// `|00,00>`.
    pub fn ground() -> Self {
        Self {
            state: QuantumState::basis(4, 0).expect("valid basis state"),
        }
    }

    pub fn amplitude(&self, x: usize, y: usize) -> Complex<T> {
        self.state.amplitudes()[register_index(x, y)]
    }

    /// Marginal probability of each `x`.
    pub fn x_distribution(&self) -> [T; REGISTER_SIZE] {
        let mut out = [T::zero(); REGISTER_SIZE];
        for (i, p) in self.state.probabilities().into_iter().enumerate() {
            out[split_index(i).0] += p;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergySource {
    ExplicitConfig,
    DerivedFromSpinSystem,
}

/// Energies `E_ab` of the state with `x = a`, `y = b`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyTable<T> {
    values: [[T; REGISTER_SIZE]; REGISTER_SIZE],
    source: EnergySource,
}

impl<T: Real> EnergyTable<T> {
    /// Sixteen values in basis order `E_00, E_01, …, E_33`.
    pub fn explicit(values: &[T]) -> Result<Self> {
        if values.len() != SHOR_DIM {
            return Err(Error::Dimension {
                what: "energy table",
                expected: SHOR_DIM,
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!(
                "energy E_{:?} is not finite",
                split_index(i)
            )));
        }
        let mut table = [[T::zero(); REGISTER_SIZE]; REGISTER_SIZE];
        for (i, v) in values.iter().enumerate() {
            let (a, b) = split_index(i);
            table[a][b] = *v;
        }
        Ok(Self {
            values: table,
            source: EnergySource::ExplicitConfig,
        })
    }

    /// Diagonal energies of a four-spin system, read in register order.
    pub fn from_system(system: &SpinSystem<T>) -> Result<Self> {
        if system.n_spins() != 4 {
            return Err(Error::Dimension {
                what: "spins for an energy table",
                expected: 4,
                actual: system.n_spins(),
            });
        }
        let mut table = Self::explicit(&diagonal_energies(system))?;
        table.source = EnergySource::DerivedFromSpinSystem;
        Ok(table)
    }

    pub fn energy(&self, x: usize, y: usize) -> T {
        self.values[x][y]
    }

    pub fn by_index(&self, index: usize) -> T {
        let (x, y) = split_index(index);
        self.values[x][y]
    }

    pub fn source(&self) -> EnergySource {
        self.source
    }

    pub fn to_vec(&self) -> Vec<T> {
        (0..SHOR_DIM).map(|i| self.by_index(i)).collect()
    }
}

fn embed_x_operator<T: Real>(op: impl Fn(usize, usize) -> Complex<T>) -> CMatrix<T> {
    CMatrix::from_fn(SHOR_DIM, |i, j| {
        let (xi, yi) = split_index(i);
        let (xj, yj) = split_index(j);
        if yi == yj {
            op(xi, xj)
        } else {
            Complex::new(T::zero(), T::zero())
        }
    })
}

/// Two-qubit Hadamard transform on the `x` register.
pub fn superpose_matrix<T: Real>() -> CMatrix<T> {
    let half = lit::<T>(0.5);
    embed_x_operator(|a, b| {
        let sign = if (a & b).count_ones() % 2 == 0 {
            half
        } else {
            -half
        };
        Complex::new(sign, T::zero())
    })
}

/// Permutation `|x, y> -> |x, (y + base^x mod modulus) mod 4>`.
pub fn modexp_matrix<T: Real>(base: u64, modulus: u64) -> Result<CMatrix<T>> {
    if modulus < 2 || modulus > REGISTER_SIZE as u64 {
        return Err(Error::Config(format!(
            "modulus {modulus} does not fit the two-qubit y register"
        )));
    }
    if gcd(base, modulus) != 1 {
        return Err(Error::Config(format!(
            "base {base} is not coprime with modulus {modulus}"
        )));
    }
    let f: Vec<usize> = (0..REGISTER_SIZE as u32)
        .map(|x| mod_pow(base, x, modulus) as usize)
        .collect();
    Ok(CMatrix::from_fn(SHOR_DIM, |i, j| {
        let (xi, yi) = split_index(i);
        let (xj, yj) = split_index(j);
        if xi == xj && yi == (yj + f[xj]) % REGISTER_SIZE {
            Complex::new(T::one(), T::zero())
        } else {
            Complex::new(T::zero(), T::zero())
        }
    }))
}

/// `|x> -> (1/2) sum_k exp(2 pi i k x / 4) |k>` on the `x` register.
pub fn dft_matrix<T: Real>() -> CMatrix<T> {
    dft_matrix_signed(T::one())
}

/// Inverse of [`dft_matrix`].
pub fn inverse_dft_matrix<T: Real>() -> CMatrix<T> {
    dft_matrix_signed(-T::one())
}

fn dft_matrix_signed<T: Real>(sign: T) -> CMatrix<T> {
    let half = lit::<T>(0.5);
    let unit = sign * (T::PI() + T::PI()) / lit(REGISTER_SIZE as f64);
    embed_x_operator(|k, x| {
        // (k x mod 4) keeps the phase exact for the multiples of pi/2
        let m = (k * x) % REGISTER_SIZE;
        quarter_turn::<T>(m, sign, unit) * half
    })
}

fn quarter_turn<T: Real>(m: usize, sign: T, unit: T) -> Complex<T> {
    let (one, zero) = (T::one(), T::zero());
    match m {
        0 => Complex::new(one, zero),
        1 => Complex::new(zero, sign),
        2 => Complex::new(-one, zero),
        3 => Complex::new(zero, -sign),
        _ => cis(unit * lit(m as f64)),
    }
}

fn apply<T: Real>(m: &CMatrix<T>, state: &QuantumState<T>) -> Result<QuantumState<T>> {
    if state.dim() != SHOR_DIM {
        return Err(Error::Dimension {
            what: "shor register state",
            expected: SHOR_DIM,
            actual: state.dim(),
        });
    }
    Ok(QuantumState::from_unchecked(m.matvec(state.amplitudes())))
}

pub fn superpose_x<T: Real>(state: &QuantumState<T>) -> Result<QuantumState<T>> {
    apply(&superpose_matrix(), state)
}

pub fn modexp_oracle<T: Real>(
    state: &QuantumState<T>,
    base: u64,
    modulus: u64,
) -> Result<QuantumState<T>> {
    apply(&modexp_matrix(base, modulus)?, state)
}

pub fn dft_x<T: Real>(state: &QuantumState<T>) -> Result<QuantumState<T>> {
    apply(&dft_matrix(), state)
}

pub fn inverse_dft_x<T: Real>(state: &QuantumState<T>) -> Result<QuantumState<T>> {
    apply(&inverse_dft_matrix(), state)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShorMode {
    Instantaneous,
    BareDelay,
    NaturalPhase,
}

impl std::str::FromStr for ShorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "instantaneous" => Ok(Self::Instantaneous),
            "bare-delay" => Ok(Self::BareDelay),
            "natural-phase" => Ok(Self::NaturalPhase),
            other => Err(Error::Config(format!(
                "unknown mode '{other}' (expected instantaneous, bare-delay or natural-phase)"
            ))),
        }
    }
}

/// Inputs of one pipeline run.
#[derive(Clone, Debug, PartialEq)]
pub struct ShorSetup<T> {
    pub mode: ShorMode,
    pub tau1: T,
    pub tau2: T,
    pub energies: Option<EnergyTable<T>>,
}

impl<T: Real> ShorSetup<T> {
    pub fn instantaneous() -> Self {
        Self {
            mode: ShorMode::Instantaneous,
            tau1: T::zero(),
            tau2: T::zero(),
            energies: None,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, tau) in [("tau1", self.tau1), ("tau2", self.tau2)] {
            if !(tau >= T::zero()) || !tau.is_finite() {
                return Err(Error::Config(format!(
                    "{name} must be finite and non-negative"
                )));
            }
        }
        if self.mode != ShorMode::Instantaneous && self.energies.is_none() {
            return Err(Error::Config(format!(
                "mode {:?} needs an energy table",
                self.mode
            )));
        }
        Ok(())
    }

    /// The three stage unitaries, dressed for natural-phase mode, and the two
    /// delay phase vectors (all ones for instantaneous mode).
    fn stages(&self) -> Result<Stages<T>> {
        let mut stages = [superpose_matrix(), modexp_matrix(3, 4)?, dft_matrix()];
        let ones = vec![Complex::new(T::one(), T::zero()); SHOR_DIM];
        let delays = match (&self.energies, self.mode) {
            (Some(e), ShorMode::BareDelay | ShorMode::NaturalPhase) => {
                let phases = |tau: T| {
                    (0..SHOR_DIM)
                        .map(|n| cis(-e.by_index(n) * tau))
                        .collect::<Vec<_>>()
                };
                [phases(self.tau1), phases(self.tau2)]
            }
            _ => [ones.clone(), ones],
        };
        if let (ShorMode::NaturalPhase, Some(e)) = (self.mode, &self.energies) {
            let times = [T::zero(), self.tau1, self.tau1 + self.tau2];
            for (m, t) in stages.iter_mut().zip(times) {
                *m = CMatrix::from_fn(SHOR_DIM, |n, k| {
                    m[(n, k)] * cis(-(e.by_index(n) - e.by_index(k)) * t)
                });
            }
        }
        Ok((stages, delays))
    }
}

/// Stage unitaries and the phase factors of the two delays.
type Stages<T> = ([CMatrix<T>; 3], [Vec<Complex<T>>; 2]);

#[derive(Clone, Debug)]
pub struct ShorRun<T> {
    pub setup: ShorSetup<T>,
    pub final_state: QuantumState<T>,
    pub distribution: [T; REGISTER_SIZE],
    /// Norms after each of the three stages.
    pub stage_norms: [T; 3],
}

/// Runs the three-stage pipeline from `|00,00>`.
pub fn run_shor<T: Real>(setup: &ShorSetup<T>) -> Result<ShorRun<T>> {
    setup.validate()?;
    let (stages, delays) = setup.stages()?;
    let mut amplitudes = ShorRegisters::<T>::ground().state.into_amplitudes();
    let mut stage_norms = [T::zero(); 3];
    for (i, m) in stages.iter().enumerate() {
        amplitudes = m.matvec(&amplitudes);
        stage_norms[i] = crate::linalg::norm(&amplitudes);
        if i < 2 {
            for (a, d) in amplitudes.iter_mut().zip(&delays[i]) {
                *a = *a * *d;
            }
        }
    }
    let registers = ShorRegisters::new(QuantumState::from_unchecked(amplitudes))?;
    Ok(ShorRun {
        setup: setup.clone(),
        distribution: registers.x_distribution(),
        final_state: registers.state,
        stage_norms,
    })
}

/// One history contributing to a final amplitude.
#[derive(Clone, Debug, PartialEq)]
pub struct PathTerm<T> {
    /// Basis states before the first stage and after each of the three stages.
    pub path: [usize; 4],
    /// Phase accumulated from delays and interaction-picture dressing.
    pub phase: T,
    /// Product of the bare stage matrix element magnitudes.
    pub magnitude: T,
    /// The complete complex contribution.
    pub amplitude: Complex<T>,
}

/// Path terms grouped by final basis state.
#[derive(Clone, Debug)]
pub struct ShorTrace<T> {
    pub terms: Vec<Vec<PathTerm<T>>>,
}

impl<T: Real> ShorTrace<T> {
    pub fn terms_for(&self, index: usize) -> &[PathTerm<T>] {
        &self.terms[index]
    }

    /// Coherent sum of the terms ending in `index`.
    pub fn amplitude(&self, index: usize) -> Complex<T> {
        self.terms[index]
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |acc, t| {
                acc + t.amplitude
            })
    }
}

/// Expands every final amplitude of `run` into its individual histories.
pub fn trace_paths<T: Real>(run: &ShorRun<T>) -> Result<ShorTrace<T>> {
    let setup = &run.setup;
    let (stages, delays) = setup.stages()?;
    let bare = [
        superpose_matrix::<T>(),
        modexp_matrix::<T>(3, 4)?,
        dft_matrix::<T>(),
    ];
    let cutoff = lit::<T>(1e-15);
    let mut terms = vec![Vec::new(); SHOR_DIM];
    let start = 0usize;
    for s1 in 0..SHOR_DIM {
        let a1 = stages[0][(s1, start)];
        if bare[0][(s1, start)].norm() <= cutoff {
            continue;
        }
        for s2 in 0..SHOR_DIM {
            if bare[1][(s2, s1)].norm() <= cutoff {
                continue;
            }
            let a2 = stages[1][(s2, s1)] * delays[0][s1];
            for s3 in 0..SHOR_DIM {
                if bare[2][(s3, s2)].norm() <= cutoff {
                    continue;
                }
                let a3 = stages[2][(s3, s2)] * delays[1][s2];
                let amplitude = a1 * a2 * a3;
                let bare_product = bare[0][(s1, start)] * bare[1][(s2, s1)] * bare[2][(s3, s2)];
                let dynamic = amplitude / bare_product;
                terms[s3].push(PathTerm {
                    path: [start, s1, s2, s3],
                    phase: dynamic.arg(),
                    magnitude: bare_product.norm(),
                    amplitude,
                });
            }
        }
    }
    Ok(ShorTrace { terms })
}

/// Outcome of the classical post-processing.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodEstimate {
    /// Smallest non-zero `x` observed with non-zero probability.
    pub measured_x: usize,
    pub period: u64,
    /// `3^(period / 2)`.
    pub z: u64,
    /// `gcd(z - 1, 4)`.
    pub factor: u64,
    /// Set when the rule runs but gives no useful factor.
    pub diagnostic: Option<String>,
}

/// Period from a measured `x` distribution over `d` values: `T = d / x2`,
/// `z = 3^(T/2)`, factor `gcd(z - 1, 4)`.
pub fn extract_period<T: Real>(distribution: &[T], d: usize) -> Result<PeriodEstimate> {
    const BASE: u64 = 3;
    const N: u64 = 4;
    if distribution.len() != d || d == 0 {
        return Err(Error::Dimension {
            what: "x distribution",
            expected: d,
            actual: distribution.len(),
        });
    }
    let total: T = distribution.iter().copied().sum();
    if (total - T::one()).abs() > T::loose_tolerance() {
        return Err(Error::Precondition(format!(
            "distribution sums to {}",
            to_f64(total)
        )));
    }
    let threshold = T::tight_tolerance();
    let x2 = (1..d)
        .find(|&x| distribution[x] > threshold)
        .ok_or_else(|| Error::PeriodExtraction("no probability on any non-zero x".into()))?;
    if !d.is_multiple_of(x2) {
        return Err(Error::PeriodExtraction(format!(
            "D/x = {d}/{x2} is not an integer period"
        )));
    }
    let period = (d / x2) as u64;
    if !period.is_multiple_of(2) {
        return Err(Error::PeriodExtraction(format!(
            "odd period {period}; 3^(T/2) is not an integer"
        )));
    }
    let z = BASE.pow((period / 2) as u32);
    let factor = gcd(z - 1, N);
    let diagnostic = if factor == 1 || factor == N {
        Some(format!(
            "x2 = {x2} gives T = {period}, z = {z}: gcd(z - 1, {N}) = {factor} is a trivial factor"
        ))
    } else {
        None
    };
    Ok(PeriodEstimate {
        measured_x: x2,
        period,
        z,
        factor,
        diagnostic,
    })
}

/// Seeded measurement of `x`; returns counts per value.
pub fn sample_x<T: Real>(distribution: &[T], shots: usize, seed: u64) -> Result<Vec<usize>> {
    let weights: Vec<f64> = distribution.iter().map(|&p| to_f64(p).max(0.0)).collect();
    let dist = WeightedIndex::new(&weights)
        .map_err(|e| Error::Precondition(format!("cannot sample distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0; distribution.len()];
    for _ in 0..shots {
        counts[dist.sample(&mut rng)] += 1;
    }
    Ok(counts)
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn mod_pow(base: u64, exp: u32, modulus: u64) -> u64 {
    (0..exp).fold(1 % modulus, |acc, _| acc * base % modulus)
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    fn state_from(pairs: &[(usize, C)]) -> QuantumState<f64> {
        let mut a = vec![C::new(0.0, 0.0); SHOR_DIM];
        for (i, v) in pairs {
            a[*i] = *v;
        }
        QuantumState::new(a).unwrap()
    }

    fn half() -> C {
        C::new(0.5, 0.0)
    }

    #[test]
    fn superposition_stage() {
        let s = superpose_x(&ShorRegisters::<f64>::ground().state).unwrap();
        let expected = state_from(&[(0, half()), (4, half()), (8, half()), (12, half())]);
        assert!(s.distance(&expected) < 1e-15);
        let back = superpose_x(&s).unwrap();
        assert!(back.distance(&ShorRegisters::ground().state) < 1e-15);
    }

    #[test]
    fn modexp_stage() {
        let psi1 = state_from(&[(0, half()), (4, half()), (8, half()), (12, half())]);
        let psi2 = modexp_oracle(&psi1, 3, 4).unwrap();
        let expected = state_from(&[
            (register_index(0, 1), half()),
            (register_index(1, 3), half()),
            (register_index(2, 1), half()),
            (register_index(3, 3), half()),
        ]);
        assert!(psi2.distance(&expected) < 1e-15);
        let one: QuantumState<f64> =
            modexp_oracle(&QuantumState::basis(4, register_index(1, 0)).unwrap(), 3, 4).unwrap();
        assert_eq!(one.probabilities()[register_index(1, 3)], 1.0);
        let m = modexp_matrix::<f64>(3, 4).unwrap();
        for i in 0..SHOR_DIM {
            let row: f64 = (0..SHOR_DIM).map(|j| m[(i, j)].re).sum();
            let col: f64 = (0..SHOR_DIM).map(|j| m[(j, i)].re).sum();
            assert_eq!((row, col), (1.0, 1.0));
        }
        assert!(modexp_matrix::<f64>(2, 4).is_err());
    }

    #[test]
    fn dft_stage() {
        let psi2 = state_from(&[
            (register_index(0, 1), half()),
            (register_index(1, 3), half()),
            (register_index(2, 1), half()),
            (register_index(3, 3), half()),
        ]);
        let psi3 = dft_x(&psi2).unwrap();
        let expected = state_from(&[
            (register_index(0, 1), half()),
            (register_index(0, 3), half()),
            (register_index(2, 1), half()),
            (register_index(2, 3), -half()),
        ]);
        assert!(psi3.distance(&expected) < 1e-15);
        let single: QuantumState<f64> =
            dft_x(&QuantumState::basis(4, register_index(0, 1)).unwrap()).unwrap();
        for x in 0..4 {
            assert!((single.amplitudes()[register_index(x, 1)] - half()).norm() < 1e-15);
        }
        assert!(inverse_dft_x(&psi3).unwrap().distance(&psi2) < 1e-15);
    }

    #[test]
    fn instantaneous_pipeline_and_period() {
        let run = run_shor(&ShorSetup::<f64>::instantaneous()).unwrap();
        assert_eq!(run.distribution, [0.5, 0.0, 0.5, 0.0]);
        assert!(run.final_state.amplitudes()[register_index(1, 1)].norm() < 1e-15);
        let p = extract_period(&run.distribution, 4).unwrap();
        assert_eq!((p.period, p.factor, p.measured_x), (2, 2, 2));
        assert!(p.diagnostic.is_none());
    }

    #[test]
    fn period_failures() {
        assert!(matches!(
            extract_period(&[1.0, 0.0, 0.0, 0.0], 4),
            Err(Error::PeriodExtraction(_))
        ));
        let p = extract_period(&[0.4, 0.1, 0.4, 0.1], 4).unwrap();
        assert_eq!((p.measured_x, p.period, p.z, p.factor), (1, 4, 9, 4));
        assert!(p.diagnostic.is_some());
        assert!(extract_period(&[0.5, 0.0, 0.0, 0.5], 4).is_err());
    }

    #[test]
    fn delay_modes_need_energies() {
        let setup = ShorSetup::<f64> {
            mode: ShorMode::BareDelay,
            tau1: 1.0,
            tau2: 1.0,
            energies: None,
        };
        assert!(matches!(run_shor(&setup), Err(Error::Config(_))));
    }

    #[test]
    fn trace_reproduces_named_histories() {
        let energies: Vec<f64> = (0..16)
            .map(|i| 0.37 * i as f64 - 1.1 * (i % 3) as f64)
            .collect();
        let setup = ShorSetup {
            mode: ShorMode::BareDelay,
            tau1: 0.8,
            tau2: 1.9,
            energies: Some(EnergyTable::explicit(&energies).unwrap()),
        };
        let run = run_shor(&setup).unwrap();
        let trace = trace_paths(&run).unwrap();
        let target = register_index(0, 1);
        let mut paths: Vec<[usize; 4]> = trace.terms_for(target).iter().map(|t| t.path).collect();
        paths.sort();
        assert_eq!(
            paths,
            vec![
                [0, 0, register_index(0, 1), register_index(0, 1)],
                [
                    0,
                    register_index(2, 0),
                    register_index(2, 1),
                    register_index(0, 1)
                ],
            ]
        );
        for i in 0..SHOR_DIM {
            assert!((trace.amplitude(i) - run.final_state.amplitudes()[i]).norm() < 1e-12);
        }
        let e = setup.energies.as_ref().unwrap();
        let direct = trace
            .terms_for(target)
            .iter()
            .find(|t| t.path[1] == 0)
            .unwrap();
        let expected = -(e.energy(0, 0) * 0.8 + e.energy(0, 1) * 1.9);
        assert!(crate::scalar::wrap_angle(direct.phase - expected).abs() < 1e-12);
        assert!((direct.magnitude - 0.25).abs() < 1e-15);
    }

    #[test]
    fn instantaneous_paths_are_in_phase() {
        let run = run_shor(&ShorSetup::<f64>::instantaneous()).unwrap();
        let trace = trace_paths(&run).unwrap();
        let terms = trace.terms_for(register_index(0, 1));
        assert_eq!(terms.len(), 2);
        assert_eq!(terms[0].phase, terms[1].phase);
    }

    #[test]
    fn sampler_is_deterministic() {
        let a = sample_x(&[0.5, 0.0, 0.5, 0.0], 1000, 42).unwrap();
        let b = sample_x(&[0.5, 0.0, 0.5, 0.0], 1000, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[1] + a[3], 0);
        assert_eq!(a.iter().sum::<usize>(), 1000);
    }

    #[test]
    fn labels() {
        assert_eq!(ket_label(register_index(1, 3)), "|01,11>");
        assert_eq!(
            "bare-delay".parse::<ShorMode>().unwrap(),
            ShorMode::BareDelay
        );
        assert!("slow".parse::<ShorMode>().is_err());
    }
}
