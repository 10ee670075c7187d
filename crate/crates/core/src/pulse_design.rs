//! Gate pulses and the 2πk method for silencing non-resonant spins.
//!
//! A pulse that is a π (or π/n) rotation for the resonant spin is made a
//! full 2πk rotation for a spin detuned by `Δω`, which then ends exactly
//! where it started. Solving `Ωτ = π/n` together with `sqrt(Ω² + Δω²) τ = 2πk`
//! gives `Ω = |Δω| / sqrt((2nk)² - 1)`.

use num_complex::Complex;
use serde::Serialize;

use crate::dynamics::interaction_propagator;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{from_usize, lit, to_f64, Real};
use crate::spin_model::{transition_frequency, PulseSpec, SpinSystem};

/// Proton gyromagnetic ratio in rad s⁻¹ T⁻¹.
pub const PROTON_GYROMAGNETIC_RATIO: f64 = 2.675_221_874_4e8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GateLabel {
    /// Plain control-not.
    Cn,
    /// Control-not with `i` on the flipped block, as realized by one resonant π-pulse.
    CnWithPhase,
}

/// 4×4 two-qubit gate; the left qubit is the control.
#[derive(Clone, Debug, PartialEq)]
pub struct GateMatrix<T> {
    pub entries: CMatrix<T>,
    pub label: GateLabel,
}

impl<T: Real> GateMatrix<T> {
    fn swap_lower_block(value: Complex<T>, label: GateLabel) -> Self {
        let one = Complex::new(T::one(), T::zero());
        let mut m = CMatrix::zeros(4);
        m[(0, 0)] = one;
        m[(1, 1)] = one;
        m[(2, 3)] = value;
        m[(3, 2)] = value;
        Self { entries: m, label }
    }

    pub fn cn() -> Self {
        Self::swap_lower_block(Complex::new(T::one(), T::zero()), GateLabel::Cn)
    }

    pub fn cn_with_phase() -> Self {
        Self::swap_lower_block(Complex::new(T::zero(), T::one()), GateLabel::CnWithPhase)
    }

    pub fn apply(&self, amplitudes: &[Complex<T>]) -> Vec<Complex<T>> {
        self.entries.matvec(amplitudes)
    }
}

/// Phase-insensitive gate fidelity `|tr(A^† B)|² / d²`.
pub fn gate_fidelity<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    let d = from_usize::<T>(a.dim());
    a.adjoint().matmul(b).trace().norm_sqr() / (d * d)
}

/// Unitary a two-spin pulse realizes on the computational basis, with the
/// natural phases removed.
pub fn realized_gate<T: Real>(
    system: &SpinSystem<T>,
    pulse: &PulseSpec<T>,
    start: T,
) -> Result<CMatrix<T>> {
    if system.n_spins() != 2 {
        return Err(Error::Dimension {
            what: "gate spins",
            expected: 2,
            actual: system.n_spins(),
        });
    }
    interaction_propagator(system, pulse, start)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwoPiKDesign<T> {
    pub rabi: T,
    pub duration: T,
    pub k: u32,
    /// Resonant rotation is π/n.
    pub n: u32,
    pub delta_omega: T,
}

impl<T: Real> TwoPiKDesign<T> {
    /// `ω_e τ`, equal to `2πk` by construction.
    pub fn nonresonant_angle(&self) -> T {
        rotation_angle(self.rabi, self.delta_omega, self.duration)
    }

    /// `Ωτ`, equal to `π/n` by construction.
    pub fn resonant_angle(&self) -> T {
        self.rabi * self.duration
    }
}

pub fn design_2pik<T: Real>(delta_omega: T, k: u32, n: u32) -> Result<TwoPiKDesign<T>> {
    if delta_omega == T::zero() || !delta_omega.is_finite() {
        return Err(Error::Design(
            "2πk design needs a finite non-zero detuning".into(),
        ));
    }
    if k == 0 || n == 0 {
        return Err(Error::Design(format!(
            "k and n must be positive, got k={k}, n={n}"
        )));
    }
    let m = lit::<T>(2.0) * from_usize::<T>(n as usize) * from_usize::<T>(k as usize);
    let rabi = delta_omega.abs() / (m * m - T::one()).sqrt();
    let duration = T::PI() / (from_usize::<T>(n as usize) * rabi);
    Ok(TwoPiKDesign {
        rabi,
        duration,
        k,
        n,
        delta_omega: delta_omega.abs(),
    })
}

/// Exact rotation angle `sqrt(Ω² + Δω²) τ` of a detuned spin.
pub fn rotation_angle<T: Real>(omega_rabi: T, delta_omega: T, tau: T) -> T {
    omega_rabi.hypot(delta_omega) * tau
}

/// Large-detuning estimate `π |Δω| / Ω` of the angle for a π-pulse.
pub fn approx_angle<T: Real>(omega_rabi: T, delta_omega: T) -> T {
    T::PI() * delta_omega.abs() / omega_rabi
}

/// Excitation probability `(Ω/ω_e)² sin²(ω_e τ / 2)` of a detuned two-level
/// system starting in its ground state.
pub fn nonresonant_excitation<T: Real>(omega_rabi: T, delta_omega: T, tau: T) -> T {
    let we = omega_rabi.hypot(delta_omega);
    if we == T::zero() {
        return T::zero();
    }
    (omega_rabi / we).powi(2) * (we * tau / lit(2.0)).sin().powi(2)
}

/// `[ω0 + 8Ω, ω0 + 16Ω, …, ω0 + 8·count·Ω]`.
pub fn frequency_ladder<T: Real>(omega0: T, omega_rabi: T, count: usize) -> Result<Vec<T>> {
    if count == 0 {
        return Err(Error::Config("frequency ladder needs count >= 1".into()));
    }
    let step = lit::<T>(8.0) * omega_rabi;
    Ok((1..=count).map(|i| omega0 + step * from_usize(i)).collect())
}

/// Distinct detunings `|ω_i - ω_index|` seen by the other spins of the ladder
/// `[ω0, ω0 + 8Ω, …]` when a pulse is tuned to rung `index` (0 is `ω0`).
pub fn ladder_detunings<T: Real>(
    omega0: T,
    omega_rabi: T,
    count: usize,
    index: usize,
) -> Result<Vec<T>> {
    if index > count {
        return Err(Error::Config(format!(
            "ladder index {index} beyond count {count}"
        )));
    }
    let mut rungs = vec![omega0];
    rungs.extend(frequency_ladder(omega0, omega_rabi, count)?);
    let resonant = rungs[index];
    let mut out: Vec<T> = Vec::new();
    for (i, w) in rungs.iter().enumerate() {
        if i == index {
            continue;
        }
        let d = (*w - resonant).abs();
        let tol = T::tight_tolerance() * (T::one() + d);
        if !out.iter().any(|x| (*x - d).abs() <= tol) {
            out.push(d);
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CnVariant {
    /// Target flips when the control is excited.
    Standard,
    /// Target flips when the control is in the ground state.
    Complementary,
}

/// Parameters for [`cn_pulse`] beyond the system itself.
#[derive(Clone, Debug, PartialEq)]
pub struct CnPulseOptions<T> {
    pub variant: CnVariant,
    /// Per-spin Rabi frequencies. In 2πk mode the target entry is replaced by
    /// the designed value.
    pub rabi: Vec<T>,
    pub phase: T,
    /// Use the exact 2πk design with this `k`.
    pub exact_2pik: Option<u32>,
}

/// Single-pulse CN: a π-pulse on the target tuned to its transition with the
/// control excited (standard) or in the ground state (complementary). Every
/// other spin is taken to be in its ground state.
pub fn cn_pulse<T: Real>(
    system: &SpinSystem<T>,
    control: usize,
    target: usize,
    options: &CnPulseOptions<T>,
) -> Result<PulseSpec<T>> {
    system.check_spin(control)?;
    system.check_spin(target)?;
    if control == target {
        return Err(Error::Config(
            "control and target must be different spins".into(),
        ));
    }
    if options.rabi.len() != system.n_spins() {
        return Err(Error::Dimension {
            what: "cn pulse rabi frequencies",
            expected: system.n_spins(),
            actual: options.rabi.len(),
        });
    }
    let mut configuration = vec![0u8; system.n_spins()];
    if options.variant == CnVariant::Standard {
        configuration[control] = 1;
    }
    let carrier = transition_frequency(system, target, &configuration)?;
    let mut rabi = options.rabi.clone();
    let duration = match options.exact_2pik {
        Some(k) => {
            let j = system.coupling(control, target);
            if j == T::zero() {
                return Err(Error::Design(
                    "control and target are uncoupled; the doublet cannot be resolved".into(),
                ));
            }
            let design = design_2pik(lit::<T>(2.0) * j, k, 1)?;
            rabi[target] = design.rabi;
            design.duration
        }
        None => {
            let target_rabi = rabi[target];
            if !(target_rabi > T::zero()) {
                return Err(Error::Config(format!(
                    "target rabi frequency must be positive, got {}",
                    to_f64(target_rabi)
                )));
            }
            T::PI() / target_rabi
        }
    };
    PulseSpec::new(carrier, options.phase, rabi, duration)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GradientEstimate<T> {
    /// Field step between neighbouring spins.
    pub delta_b: T,
    /// `delta_b / spacing`.
    pub gradient: T,
}

/// Field step `8Ω/γ` needed for a ladder spacing of `8Ω`, and the gradient
/// over a spin spacing `Δx`.
pub fn gradient_estimate<T: Real>(
    omega_rabi: T,
    spacing: T,
    gyromagnetic_ratio: T,
) -> Result<GradientEstimate<T>> {
    if !(omega_rabi > T::zero() && spacing > T::zero() && gyromagnetic_ratio > T::zero()) {
        return Err(Error::Config(
            "gradient estimate needs positive inputs".into(),
        ));
    }
    let delta_b = lit::<T>(8.0) * omega_rabi / gyromagnetic_ratio;
    Ok(GradientEstimate {
        delta_b,
        gradient: delta_b / spacing,
    })
}
