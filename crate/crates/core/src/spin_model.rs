//! Ising spin systems, resonant pulses and their Hamiltonians.
//!
//! Conventions used throughout the crate:
//!
//! * `hbar = 1`; frequencies are dimensionless angular frequencies.
//! * Spin `k` is counted from the left of the ket. In basis index `n` it is
//!   bit `n_spins - 1 - k`, so the leftmost spin is the most significant bit.
//! * Bit value 0 is the ground state and carries `I^z = +1/2`; bit value 1 is
//!   the excited state with `I^z = -1/2`. With the field term `-omega_k I^z_k`
//!   this puts `|0>` below `|1>`.
//! * Each Ising bond `(k, n)` contributes `-2 J_kn I^z_k I^z_n` exactly once.
//!   A spin's transition frequency is therefore shifted by `+J` for every
//!   ground-state neighbour and by `-J` for every excited one.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::scalar::{cis, lit, to_f64, Real};

/// `n_spins` Larmor frequencies and a symmetric coupling table with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinSystem<T> {
    larmor: Vec<T>,
    couplings: Vec<Vec<T>>,
}

impl<T: Real> SpinSystem<T> {
    pub fn new(larmor: Vec<T>, couplings: Vec<Vec<T>>) -> Result<Self> {
        let n = larmor.len();
        if n == 0 {
            return Err(Error::Config(
                "a spin system needs at least one spin".into(),
            ));
        }
        if n > 12 {
            return Err(Error::Config(format!(
                "{n} spins exceed the dense simulator limit of 12"
            )));
        }
        if let Some(k) = larmor.iter().position(|w| !w.is_finite()) {
            return Err(Error::Config(format!("larmor[{k}] is not finite")));
        }
        if couplings.len() != n {
            return Err(Error::Dimension {
                what: "coupling rows",
                expected: n,
                actual: couplings.len(),
            });
        }
        for (k, row) in couplings.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension {
                    what: "coupling columns",
                    expected: n,
                    actual: row.len(),
                });
            }
            if row[k] != T::zero() {
                return Err(Error::Config(format!("couplings[{k}][{k}] must be zero")));
            }
            for (m, j) in row.iter().enumerate() {
                if !j.is_finite() {
                    return Err(Error::Config(format!("couplings[{k}][{m}] is not finite")));
                }
                if *j != couplings[m][k] {
                    return Err(Error::Config(format!(
                        "couplings not symmetric at ({k}, {m}): {j} vs {}",
                        couplings[m][k]
                    )));
                }
            }
        }
        Ok(Self { larmor, couplings })
    }

    /// Spins without Ising interaction.
    pub fn uncoupled(larmor: Vec<T>) -> Result<Self> {
        let n = larmor.len();
        Self::new(larmor, vec![vec![T::zero(); n]; n])
    }

    /// Every pair of spins coupled with the same constant `j`.
    pub fn uniformly_coupled(larmor: Vec<T>, j: T) -> Result<Self> {
        let n = larmor.len();
        let couplings = (0..n)
            .map(|k| (0..n).map(|m| if k == m { T::zero() } else { j }).collect())
            .collect();
        Self::new(larmor, couplings)
    }

    pub fn n_spins(&self) -> usize {
        self.larmor.len()
    }

    /// Hilbert space dimension `2^n_spins`.
    pub fn dim(&self) -> usize {
        1 << self.n_spins()
    }

    pub fn larmor(&self) -> &[T] {
        &self.larmor
    }

    pub fn couplings(&self) -> &[Vec<T>] {
        &self.couplings
    }

    pub fn coupling(&self, k: usize, n: usize) -> T {
        self.couplings[k][n]
    }

    pub(crate) fn check_spin(&self, index: usize) -> Result<()> {
        if index >= self.n_spins() {
            return Err(Error::SpinIndex {
                index,
                n_spins: self.n_spins(),
            });
        }
        Ok(())
    }
}

/// One circularly polarized pulse: carrier frequency, phase, per-spin Rabi
/// frequencies and duration.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseSpec<T> {
    carrier: T,
    phase: T,
    rabi: Vec<T>,
    duration: T,
}

impl<T: Real> PulseSpec<T> {
    /// The phase is reduced into `[0, 2 pi)`.
    pub fn new(carrier: T, phase: T, rabi: Vec<T>, duration: T) -> Result<Self> {
        if !carrier.is_finite() {
            return Err(Error::Config("pulse carrier is not finite".into()));
        }
        if !phase.is_finite() {
            return Err(Error::Config("pulse phase is not finite".into()));
        }
        if !(duration > T::zero()) || !duration.is_finite() {
            return Err(Error::Config(format!(
                "pulse duration must be positive, got {duration}"
            )));
        }
        if let Some(k) = rabi
            .iter()
            .position(|w| !(*w >= T::zero()) || !w.is_finite())
        {
            return Err(Error::Config(format!(
                "rabi[{k}] must be finite and non-negative"
            )));
        }
        let two_pi = T::PI() + T::PI();
        let mut phase = phase % two_pi;
        if phase < T::zero() {
            phase += two_pi;
        }
        Ok(Self {
            carrier,
            phase,
            rabi,
            duration,
        })
    }

    pub fn carrier(&self) -> T {
        self.carrier
    }

    pub fn phase(&self) -> T {
        self.phase
    }

    pub fn rabi(&self) -> &[T] {
        &self.rabi
    }

    pub fn duration(&self) -> T {
        self.duration
    }

    pub(crate) fn check_against(&self, system: &SpinSystem<T>) -> Result<()> {
        if self.rabi.len() != system.n_spins() {
            return Err(Error::Dimension {
                what: "pulse rabi frequencies",
                expected: system.n_spins(),
                actual: self.rabi.len(),
            });
        }
        Ok(())
    }
}

/// Free evolution for a fixed time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DelaySpec<T> {
    duration: T,
}

impl<T: Real> DelaySpec<T> {
    pub fn new(duration: T) -> Result<Self> {
        if !(duration >= T::zero()) || !duration.is_finite() {
            return Err(Error::Config(format!(
                "delay must be finite and non-negative, got {duration}"
            )));
        }
        Ok(Self { duration })
    }

    pub fn duration(&self) -> T {
        self.duration
    }
}

/// Normalized amplitude vector over the `2^N` computational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState<T> {
    amplitudes: Vec<Complex<T>>,
}

impl<T: Real> QuantumState<T> {
    pub fn new(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Config(format!(
                "state length {len} is not a power of two of at least 2"
            )));
        }
        let norm = linalg::norm(&amplitudes);
        if (norm - T::one()).abs() > T::tight_tolerance() {
            return Err(Error::Precondition(format!(
                "state is not normalized (norm {norm})"
            )));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let norm = linalg::norm(&amplitudes);
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::Precondition(
                "cannot normalize a zero or non-finite vector".into(),
            ));
        }
        Self::new(amplitudes.into_iter().map(|a| a / norm).collect())
    }

    /// Builds a state from real amplitudes.
    pub fn from_real(amplitudes: &[T]) -> Result<Self> {
        Self::new(
            amplitudes
                .iter()
                .map(|&a| Complex::new(a, T::zero()))
                .collect(),
        )
    }

    pub fn basis(n_spins: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_spins;
        if index >= dim {
            return Err(Error::Config(format!(
                "basis index {index} out of range for {n_spins} spins"
            )));
        }
        let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); dim];
        amplitudes[index] = Complex::new(T::one(), T::zero());
        Ok(Self { amplitudes })
    }

    /// Wraps the output of a norm-preserving map without re-checking it.
    pub(crate) fn from_unchecked(amplitudes: Vec<Complex<T>>) -> Self {
        Self { amplitudes }
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn n_spins(&self) -> usize {
        self.amplitudes.len().trailing_zeros() as usize
    }

    pub fn norm(&self) -> T {
        linalg::norm(&self.amplitudes)
    }

    pub fn probabilities(&self) -> Vec<T> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Overlap fidelity `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> T {
        linalg::inner(&self.amplitudes, &other.amplitudes).norm_sqr()
    }

    /// Euclidean distance between amplitude vectors (phase sensitive).
    pub fn distance(&self, other: &Self) -> T {
        linalg::distance(&self.amplitudes, &other.amplitudes)
    }

    pub(crate) fn check_normalized(&self, tol: T) -> Result<()> {
        let norm = self.norm();
        if (norm - T::one()).abs() > tol {
            return Err(Error::Precondition(format!(
                "input state is not normalized (norm {})",
                to_f64(norm)
            )));
        }
        Ok(())
    }
}

/// Which picture a Hamiltonian matrix is written in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Frame<T> {
    Lab,
    /// Frame co-rotating with a drive at the given angular frequency.
    Rotating(T),
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianMatrix<T> {
    pub entries: CMatrix<T>,
    pub frame: Frame<T>,
}

/// Bit of `spin` in basis index `index` (0 = ground, 1 = excited).
#[inline]
pub fn spin_bit(n_spins: usize, index: usize, spin: usize) -> u8 {
    ((index >> (n_spins - 1 - spin)) & 1) as u8
}

/// Mask that flips `spin` in a basis index.
#[inline]
pub fn spin_mask(n_spins: usize, spin: usize) -> usize {
    1 << (n_spins - 1 - spin)
}

/// `I^z` eigenvalue of a spin in the given bit state.
#[inline]
pub fn spin_z<T: Real>(bit: u8) -> T {
    if bit == 0 {
        lit(0.5)
    } else {
        lit(-0.5)
    }
}

/// Basis index of a full bit assignment, leftmost spin first.
pub fn basis_index(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | (b as usize & 1))
}

/// Diagonal of `-sum_k (omega_k - shift) I^z_k - 2 sum_{k<n} J_kn I^z_k I^z_n`.
fn ising_diagonal<T: Real>(system: &SpinSystem<T>, shift: T) -> Vec<T> {
    let n = system.n_spins();
    let two = lit::<T>(2.0);
    (0..system.dim())
        .map(|index| {
            let z: Vec<T> = (0..n).map(|k| spin_z(spin_bit(n, index, k))).collect();
            let mut e = T::zero();
            for k in 0..n {
                e -= (system.larmor[k] - shift) * z[k];
                for m in (k + 1)..n {
                    e -= two * system.couplings[k][m] * z[k] * z[m];
                }
            }
            e
        })
        .collect()
}

/// Lab-frame eigenenergies of the drive-free Ising Hamiltonian.
pub fn diagonal_energies<T: Real>(system: &SpinSystem<T>) -> Vec<T> {
    ising_diagonal(system, T::zero())
}

/// Diagonal of the total `sum_k I^z_k`.
pub fn total_spin_z<T: Real>(n_spins: usize) -> Vec<T> {
    (0..1usize << n_spins)
        .map(|index| {
            (0..n_spins)
                .map(|k| spin_z::<T>(spin_bit(n_spins, index, k)))
                .sum()
        })
        .collect()
}

/// Time-independent Hamiltonian in the frame rotating at the pulse carrier.
pub fn build_rotating_hamiltonian<T: Real>(
    system: &SpinSystem<T>,
    pulse: &PulseSpec<T>,
) -> Result<HamiltonianMatrix<T>> {
    pulse.check_against(system)?;
    let n = system.n_spins();
    let mut h = CMatrix::from_real_diagonal(&ising_diagonal(system, pulse.carrier));
    let half = lit::<T>(0.5);
    let drive = cis(pulse.phase);
    for index in 0..system.dim() {
        for k in 0..n {
            if spin_bit(n, index, k) != 0 || pulse.rabi[k] == T::zero() {
                continue;
            }
            let excited = index | spin_mask(n, k);
            let element = drive * (-pulse.rabi[k] * half);
            h[(index, excited)] = element;
            h[(excited, index)] = element.conj();
        }
    }
    Ok(HamiltonianMatrix {
        entries: h,
        frame: Frame::Rotating(pulse.carrier),
    })
}

/// Drive-free lab Hamiltonian as a matrix.
pub fn build_lab_hamiltonian<T: Real>(system: &SpinSystem<T>) -> HamiltonianMatrix<T> {
    HamiltonianMatrix {
        entries: CMatrix::from_real_diagonal(&diagonal_energies(system)),
        frame: Frame::Lab,
    }
}

/// `E(target excited) - E(target ground)` with every other spin fixed by
/// `configuration` (one bit per spin; the target's own entry is ignored).
pub fn transition_frequency<T: Real>(
    system: &SpinSystem<T>,
    target: usize,
    configuration: &[u8],
) -> Result<T> {
    system.check_spin(target)?;
    if configuration.len() != system.n_spins() {
        return Err(Error::Dimension {
            what: "spectator configuration",
            expected: system.n_spins(),
            actual: configuration.len(),
        });
    }
    if let Some(k) = configuration.iter().position(|&b| b > 1) {
        return Err(Error::Config(format!("configuration[{k}] must be 0 or 1")));
    }
    let mut bits = configuration.to_vec();
    bits[target] = 0;
    let ground = basis_index(&bits);
    bits[target] = 1;
    let excited = basis_index(&bits);
    let energies = diagonal_energies(system);
    Ok(energies[excited] - energies[ground])
}

/// JSON description of a system and an optional pulse list.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SystemDocument {
    pub n_spins: Option<usize>,
    pub larmor: Option<Vec<f64>>,
    pub couplings: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub pulses: Vec<PulseDocument>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PulseDocument {
    pub carrier: Option<f64>,
    #[serde(default)]
    pub phase: f64,
    pub rabi: Option<Vec<f64>>,
    pub duration: Option<f64>,
}

impl SystemDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Names of missing or inconsistent fields, prefixed with `path`.
    pub fn problems(&self, path: &str) -> Vec<String> {
        let mut out = Vec::new();
        match (&self.n_spins, &self.larmor) {
            (None, _) => out.push(format!("{path}.n_spins: missing")),
            (_, None) => out.push(format!("{path}.larmor: missing")),
            (Some(n), Some(l)) if *n != l.len() => out.push(format!(
                "{path}.larmor: expected {n} entries, found {}",
                l.len()
            )),
            _ => {}
        }
        if self.couplings.is_none() {
            out.push(format!("{path}.couplings: missing"));
        }
        for (i, p) in self.pulses.iter().enumerate() {
            out.extend(p.problems(&format!("{path}.pulses[{i}]"), self.n_spins));
        }
        out
    }

    pub fn to_system<T: Real>(&self) -> Result<SpinSystem<T>> {
        let problems = self.problems("system");
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        let larmor = self
            .larmor
            .as_ref()
            .unwrap()
            .iter()
            .map(|&w| lit(w))
            .collect();
        let couplings = self
            .couplings
            .as_ref()
            .unwrap()
            .iter()
            .map(|row| row.iter().map(|&j| lit(j)).collect())
            .collect();
        SpinSystem::new(larmor, couplings)
    }

    pub fn to_pulses<T: Real>(&self) -> Result<Vec<PulseSpec<T>>> {
        self.pulses.iter().map(PulseDocument::to_pulse).collect()
    }

    pub fn from_system<T: Real>(system: &SpinSystem<T>) -> Self {
        Self {
            n_spins: Some(system.n_spins()),
            larmor: Some(system.larmor().iter().map(|&w| to_f64(w)).collect()),
            couplings: Some(
                system
                    .couplings()
                    .iter()
                    .map(|r| r.iter().map(|&j| to_f64(j)).collect())
                    .collect(),
            ),
            pulses: Vec::new(),
        }
    }
}

impl PulseDocument {
    pub fn problems(&self, path: &str, n_spins: Option<usize>) -> Vec<String> {
        let mut out = Vec::new();
        if self.carrier.is_none() {
            out.push(format!("{path}.carrier: missing"));
        }
        match (&self.rabi, n_spins) {
            (None, _) => out.push(format!("{path}.rabi: missing")),
            (Some(r), Some(n)) if r.len() != n => out.push(format!(
                "{path}.rabi: expected {n} entries, found {}",
                r.len()
            )),
            _ => {}
        }
        match self.duration {
            None => out.push(format!("{path}.duration: missing")),
            Some(d) if !(d > 0.0) => out.push(format!("{path}.duration: must be positive")),
            _ => {}
        }
        out
    }

    pub fn to_pulse<T: Real>(&self) -> Result<PulseSpec<T>> {
        let problems = self.problems("pulse", None);
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        PulseSpec::new(
            lit(self.carrier.unwrap()),
            lit(self.phase),
            self.rabi
                .as_ref()
                .unwrap()
                .iter()
                .map(|&w| lit(w))
                .collect(),
            lit(self.duration.unwrap()),
        )
    }

    pub fn from_pulse<T: Real>(pulse: &PulseSpec<T>) -> Self {
        Self {
            carrier: Some(to_f64(pulse.carrier())),
            phase: to_f64(pulse.phase()),
            rabi: Some(pulse.rabi().iter().map(|&w| to_f64(w)).collect()),
            duration: Some(to_f64(pulse.duration())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMatrix;

    type C = Complex<f64>;

    fn two_spin() -> SpinSystem<f64> {
        SpinSystem::uniformly_coupled(vec![500.0, 100.0], 5.0).unwrap()
    }

    /// Kronecker product of single-spin operators, leftmost factor first.
    fn kron_all(ops: &[CMatrix<f64>]) -> CMatrix<f64> {
        ops.iter().skip(1).fold(ops[0].clone(), |acc, op| {
            let (a, b) = (acc.dim(), op.dim());
            CMatrix::from_fn(a * b, |i, j| acc[(i / b, j / b)] * op[(i % b, j % b)])
        })
    }

    fn single_spin_op(n: usize, k: usize, op: &CMatrix<f64>) -> CMatrix<f64> {
        let ops: Vec<_> = (0..n)
            .map(|m| {
                if m == k {
                    op.clone()
                } else {
                    CMatrix::identity(2)
                }
            })
            .collect();
        kron_all(&ops)
    }

    /// Independent construction from tensor products of spin-1/2 operators.
    fn brute_force_rotating(system: &SpinSystem<f64>, pulse: &PulseSpec<f64>) -> CMatrix<f64> {
        let n = system.n_spins();
        let iz = CMatrix::from_real_diagonal(&[0.5, -0.5]);
        let phase = C::from_polar(1.0, pulse.phase());
        // -Omega/2 (e^{i phi} |0><1| + h.c.)
        let ix = CMatrix::from_rows(&[
            vec![C::new(0.0, 0.0), phase * 0.5],
            vec![phase.conj() * 0.5, C::new(0.0, 0.0)],
        ])
        .unwrap();
        let mut h = CMatrix::zeros(1 << n);
        let add = |h: &mut CMatrix<f64>, m: &CMatrix<f64>, c: f64| {
            *h = CMatrix::from_fn(h.dim(), |i, j| h[(i, j)] + m[(i, j)] * c);
        };
        for k in 0..n {
            let izk = single_spin_op(n, k, &iz);
            add(&mut h, &izk, -(system.larmor()[k] - pulse.carrier()));
            add(&mut h, &single_spin_op(n, k, &ix), -pulse.rabi()[k]);
            for m in (k + 1)..n {
                let izm = single_spin_op(n, m, &iz);
                add(&mut h, &izk.matmul(&izm), -2.0 * system.coupling(k, m));
            }
        }
        h
    }

    #[test]
    fn single_spin_on_resonance() {
        let s = SpinSystem::uncoupled(vec![100.0]).unwrap();
        let p = PulseSpec::new(100.0, 0.0, vec![0.1], 1.0).unwrap();
        let h = build_rotating_hamiltonian(&s, &p).unwrap().entries;
        let expected = CMatrix::from_rows(&[
            vec![C::new(0.0, 0.0), C::new(-0.05, 0.0)],
            vec![C::new(-0.05, 0.0), C::new(0.0, 0.0)],
        ])
        .unwrap();
        assert!(h.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn two_spin_rotating_diagonal_excited_pair() {
        let p = PulseSpec::new(95.0, 0.0, vec![0.5, 0.1], 1.0).unwrap();
        let h = build_rotating_hamiltonian(&two_spin(), &p).unwrap().entries;
        assert!((h[(3, 3)].re - 202.5).abs() < 1e-12);
        assert!(h.max_abs_diff(&brute_force_rotating(&two_spin(), &p)) < 1e-12);
    }

    #[test]
    fn rotating_matches_tensor_construction_with_phase() {
        let s = SpinSystem::new(
            vec![310.0, 120.0, 45.0],
            vec![
                vec![0.0, 3.0, -1.5],
                vec![3.0, 0.0, 7.0],
                vec![-1.5, 7.0, 0.0],
            ],
        )
        .unwrap();
        let p = PulseSpec::new(118.0, 1.1, vec![0.3, 0.7, 0.2], 2.0).unwrap();
        let h = build_rotating_hamiltonian(&s, &p).unwrap();
        assert_eq!(h.frame, Frame::Rotating(118.0));
        assert!(h.entries.max_abs_diff(&brute_force_rotating(&s, &p)) < 1e-12);
        assert!(h.entries.is_hermitian(1e-12));
    }

    #[test]
    fn diagonal_energies_examples() {
        let single = SpinSystem::uncoupled(vec![100.0]).unwrap();
        assert_eq!(diagonal_energies(&single), vec![-50.0, 50.0]);
        let e = diagonal_energies(&two_spin());
        assert!((e[0] + 302.5).abs() < 1e-12);
        let p = PulseSpec::new(0.0, 0.0, vec![0.0, 0.0], 1.0).unwrap();
        let brute = brute_force_rotating(&two_spin(), &p);
        for (n, en) in e.iter().enumerate() {
            assert!((brute[(n, n)].re - en).abs() < 1e-12);
        }
    }

    #[test]
    fn transition_frequency_doublet() {
        let s = two_spin();
        assert!((transition_frequency(&s, 1, &[1, 0]).unwrap() - 95.0).abs() < 1e-12);
        assert!((transition_frequency(&s, 1, &[0, 0]).unwrap() - 105.0).abs() < 1e-12);
        let e = diagonal_energies(&s);
        assert_eq!(transition_frequency(&s, 1, &[1, 1]).unwrap(), e[3] - e[2]);
    }

    #[test]
    fn transition_frequency_four_spin_all_ground() {
        let w0: f64 = 100.0;
        let s = SpinSystem::uniformly_coupled(vec![w0 + 300.0, w0 + 200.0, w0 + 100.0, w0], 10.0)
            .unwrap();
        let f = transition_frequency(&s, 3, &[0, 0, 0, 0]).unwrap();
        assert!((f - (w0 + 30.0)).abs() < 1e-12);
    }

    #[test]
    fn transition_frequency_rejects_bad_input() {
        let s = two_spin();
        assert!(matches!(
            transition_frequency(&s, 2, &[0, 0]),
            Err(Error::SpinIndex { .. })
        ));
        assert!(matches!(
            transition_frequency(&s, 1, &[0]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn zero_drive_is_shifted_lab_diagonal() {
        let s = SpinSystem::new(
            vec![210.0, 80.0, 33.0],
            vec![
                vec![0.0, 2.0, 1.0],
                vec![2.0, 0.0, -4.0],
                vec![1.0, -4.0, 0.0],
            ],
        )
        .unwrap();
        let omega = 77.0;
        let p = PulseSpec::new(omega, 0.4, vec![0.0; 3], 1.0).unwrap();
        let h = build_rotating_hamiltonian(&s, &p).unwrap().entries;
        assert!(h.is_diagonal(0.0));
        let e = diagonal_energies(&s);
        let fz = total_spin_z::<f64>(3);
        for n in 0..8 {
            assert!((h[(n, n)].re - (e[n] + omega * fz[n])).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_invalid_systems_and_pulses() {
        assert!(SpinSystem::<f64>::new(vec![], vec![]).is_err());
        assert!(SpinSystem::new(vec![1.0, 2.0], vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(SpinSystem::new(vec![1.0, 2.0], vec![vec![1.0, 0.0], vec![0.0, 0.0]]).is_err());
        assert!(SpinSystem::new(vec![f64::NAN], vec![vec![0.0]]).is_err());
        assert!(PulseSpec::new(1.0, 0.0, vec![0.1], 0.0).is_err());
        assert!(PulseSpec::new(1.0, 0.0, vec![-0.1], 1.0).is_err());
        assert!(DelaySpec::new(-1.0).is_err());
        let p = PulseSpec::new(1.0, 0.0, vec![0.1], 1.0).unwrap();
        assert!(matches!(
            build_rotating_hamiltonian(&two_spin(), &p),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn pulse_phase_is_reduced() {
        let p = PulseSpec::new(1.0, -std::f64::consts::FRAC_PI_2, vec![0.1], 1.0).unwrap();
        assert!((p.phase() - 1.5 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn states_validate_normalization() {
        assert!(QuantumState::from_real(&[1.0, 1.0]).is_err());
        assert!(QuantumState::from_real(&[1.0, 0.0, 0.0]).is_err());
        let s = QuantumState::normalized(vec![C::new(1.0, 0.0), C::new(0.0, 1.0)]).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-15);
        assert_eq!(
            QuantumState::<f64>::basis(2, 3).unwrap().probabilities(),
            vec![0.0, 0.0, 0.0, 1.0]
        );
    }

    #[test]
    fn basis_helpers_follow_leftmost_msb() {
        assert_eq!(basis_index(&[1, 0, 1, 1]), 11);
        assert_eq!(spin_bit(4, 11, 0), 1);
        assert_eq!(spin_bit(4, 11, 1), 0);
        assert_eq!(spin_mask(4, 3), 1);
    }

    #[test]
    fn document_round_trip_and_missing_fields() {
        let text = r#"{"n_spins": 2, "larmor": [500, 100], "couplings": [[0, 5], [5, 0]],
            "pulses": [{"carrier": 95, "rabi": [0.5, 0.1], "duration": 31.4159}]}"#;
        let doc = SystemDocument::from_json(text).unwrap();
        let system: SpinSystem<f64> = doc.to_system().unwrap();
        assert_eq!(system, two_spin());
        let pulses = doc.to_pulses::<f64>().unwrap();
        assert_eq!(pulses[0].carrier(), 95.0);

        let bad = SystemDocument::from_json(
            r#"{"n_spins": 2, "larmor": [500, 100], "couplings": [[0, 5], [5, 0]],
            "pulses": [{"carrier": 95, "duration": 1.0}]}"#,
        )
        .unwrap();
        let problems = bad.problems("system");
        assert_eq!(problems, vec!["system.pulses[0].rabi: missing".to_string()]);
    }

    #[test]
    fn f32_hamiltonian_is_hermitian() {
        let s = SpinSystem::<f32>::uniformly_coupled(vec![500.0, 100.0], 5.0).unwrap();
        let p = PulseSpec::new(95.0f32, 0.3, vec![0.5, 0.1], 1.0).unwrap();
        assert!(build_rotating_hamiltonian(&s, &p)
            .unwrap()
            .entries
            .is_hermitian(1e-6));
    }
}
