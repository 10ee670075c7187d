//! Pure-state evolution under pulses and delays.
//!
//! Three independent routes are provided:
//!
//! * [`evolve_pulse`]: exact exponentiation of the time-independent
//!   rotating-frame Hamiltonian, mapped back to the lab frame with the
//!   absolute start time of the pulse.
//! * [`integrate_lab_frame`]: fixed-step RK4 on the lab-frame Schrödinger
//!   equation with the explicitly time-dependent circular drive. The diagonal
//!   Ising part is propagated exactly (interaction picture), so the steps only
//!   have to resolve the drive's detunings, not the Larmor frequencies.
//! * [`analytic_two_level`]: closed-form resonant solution for one isolated
//!   transition.
//!
//! States are plain values; absolute time is carried by [`Evolution`].

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{cis, from_usize, imag_unit, lit, to_f64, Real};
use crate::spin_model::{
    build_rotating_hamiltonian, diagonal_energies, spin_bit, spin_mask, total_spin_z, DelaySpec,
    PulseSpec, QuantumState, SpinSystem,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    ExactRotating,
    LabIntegrator,
    AnalyticTwoLevel,
}

#[derive(Clone, Debug)]
pub struct EvolutionReport<T> {
    pub final_state: QuantumState<T>,
    /// `| ||psi|| - 1 |` of the final state.
    pub norm_drift: T,
    pub method: Method,
    /// Integrator steps taken; zero for the exact methods.
    pub steps: usize,
}

/// A pulse or a free-evolution interval.
#[derive(Clone, Debug, PartialEq)]
pub enum Segment<T> {
    Pulse(PulseSpec<T>),
    Delay(DelaySpec<T>),
}

impl<T: Real> Segment<T> {
    pub fn duration(&self) -> T {
        match self {
            Segment::Pulse(p) => p.duration(),
            Segment::Delay(d) => d.duration(),
        }
    }
}

/// Lab-frame propagator of `pulse` started at absolute time `start`.
///
/// With `F = sum_k I^z_k` and `H_rot` the rotating-frame matrix,
/// `U = exp(i w (start + tau) F) exp(-i H_rot tau) exp(-i w start F)`.
pub fn pulse_propagator<T: Real>(
    system: &SpinSystem<T>,
    pulse: &PulseSpec<T>,
    start: T,
) -> Result<CMatrix<T>> {
    let h = build_rotating_hamiltonian(system, pulse)?;
    let tau = pulse.duration();
    let w = pulse.carrier();
    let fz = total_spin_z::<T>(system.n_spins());
    let rotating = h.entries.exp_hermitian(tau);
    let end = start + tau;
    Ok(CMatrix::from_fn(system.dim(), |i, j| {
        cis(w * end * fz[i]) * rotating[(i, j)] * cis(-w * start * fz[j])
    }))
}

/// Propagator with the drive-free phases `exp(-i E_n t)` removed at both ends.
///
/// This is the picture in which ideal gate tables are written: a state that
/// only accumulates its natural phase is left unchanged.
pub fn interaction_propagator<T: Real>(
    system: &SpinSystem<T>,
    pulse: &PulseSpec<T>,
    start: T,
) -> Result<CMatrix<T>> {
    let u = pulse_propagator(system, pulse, start)?;
    let e = diagonal_energies(system);
    let end = start + pulse.duration();
    Ok(CMatrix::from_fn(system.dim(), |i, j| {
        cis(e[i] * end) * u[(i, j)] * cis(-e[j] * start)
    }))
}

fn check_state<T: Real>(state: &QuantumState<T>, system: &SpinSystem<T>) -> Result<()> {
    if state.dim() != system.dim() {
        return Err(Error::Dimension {
            what: "state",
            expected: system.dim(),
            actual: state.dim(),
        });
    }
    state.check_normalized(T::loose_tolerance())
}

/// Applies one pulse starting at absolute time `start`.
pub fn evolve_pulse<T: Real>(
    state: &QuantumState<T>,
    system: &SpinSystem<T>,
    pulse: &PulseSpec<T>,
    start: T,
) -> Result<QuantumState<T>> {
    check_state(state, system)?;
    let u = pulse_propagator(system, pulse, start)?;
    Ok(QuantumState::from_unchecked(u.matvec(state.amplitudes())))
}

/// Like [`evolve_pulse`] but returns the norm bookkeeping as well.
pub fn evolve_pulse_report<T: Real>(
    state: &QuantumState<T>,
    system: &SpinSystem<T>,
    pulse: &PulseSpec<T>,
    start: T,
) -> Result<EvolutionReport<T>> {
    let final_state = evolve_pulse(state, system, pulse, start)?;
    Ok(EvolutionReport {
        norm_drift: (final_state.norm() - T::one()).abs(),
        final_state,
        method: Method::ExactRotating,
        steps: 0,
    })
}

/// Free evolution: every amplitude picks up `exp(-i E_n tau)`.
pub fn evolve_delay<T: Real>(
    state: &QuantumState<T>,
    system: &SpinSystem<T>,
    delay: &DelaySpec<T>,
) -> Result<QuantumState<T>> {
    check_state(state, system)?;
    let tau = delay.duration();
    let e = diagonal_energies(system);
    Ok(QuantumState::from_unchecked(
        state
            .amplitudes()
            .iter()
            .zip(&e)
            .map(|(a, en)| *a * cis(-*en * tau))
            .collect(),
    ))
}

/// Strips the natural phases: `c_n = exp(i E_n t) C_n`.
pub fn to_interaction_picture<T: Real>(
    state: &QuantumState<T>,
    system: &SpinSystem<T>,
    time: T,
) -> QuantumState<T> {
    let e = diagonal_energies(system);
    QuantumState::from_unchecked(
        state
            .amplitudes()
            .iter()
            .zip(&e)
            .map(|(a, en)| *a * cis(*en * time))
            .collect(),
    )
}

/// Inverse of [`to_interaction_picture`].
pub fn from_interaction_picture<T: Real>(
    state: &QuantumState<T>,
    system: &SpinSystem<T>,
    time: T,
) -> QuantumState<T> {
    to_interaction_picture(state, system, -time)
}

/// A state together with the absolute clock it lives at.
#[derive(Clone, Debug)]
pub struct Evolution<T> {
    system: SpinSystem<T>,
    state: QuantumState<T>,
    time: T,
}

impl<T: Real> Evolution<T> {
    pub fn new(system: SpinSystem<T>, state: QuantumState<T>) -> Result<Self> {
        check_state(&state, &system)?;
        Ok(Self {
            system,
            state,
            time: T::zero(),
        })
    }

    /// Starts the clock at `time` instead of zero.
    pub fn starting_at(mut self, time: T) -> Self {
        self.time = time;
        self
    }

    pub fn apply_pulse(&mut self, pulse: &PulseSpec<T>) -> Result<&mut Self> {
        self.state = evolve_pulse(&self.state, &self.system, pulse, self.time)?;
        self.time += pulse.duration();
        Ok(self)
    }

    pub fn apply_delay(&mut self, delay: &DelaySpec<T>) -> Result<&mut Self> {
        self.state = evolve_delay(&self.state, &self.system, delay)?;
        self.time += delay.duration();
        Ok(self)
    }

    pub fn apply(&mut self, segment: &Segment<T>) -> Result<&mut Self> {
        match segment {
            Segment::Pulse(p) => self.apply_pulse(p),
            Segment::Delay(d) => self.apply_delay(d),
        }
    }

    pub fn state(&self) -> &QuantumState<T> {
        &self.state
    }

    pub fn time(&self) -> T {
        self.time
    }

    pub fn system(&self) -> &SpinSystem<T> {
        &self.system
    }

    /// Current state with natural phases removed.
    pub fn interaction_state(&self) -> QuantumState<T> {
        to_interaction_picture(&self.state, &self.system, self.time)
    }
}

/// One resonant transition `|k> -> |n>` driven by a single pulse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoLevelPulse<T> {
    pub energy_k: T,
    pub energy_n: T,
    pub carrier: T,
    pub rabi: T,
    pub phase: T,
    /// Absolute time at which the pulse starts.
    pub start: T,
    pub duration: T,
}

/// Amplitudes at the end of a resonant pulse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoLevelAmplitudes<T> {
    pub c_k: Complex<T>,
    pub c_n: Complex<T>,
    pub start: T,
    pub end: T,
    pub energy_k: T,
    pub energy_n: T,
    /// Half pulse area `rabi * duration / 2`.
    pub alpha: T,
}

/// Closed-form result of a resonant pulse on `|k>` with `|n>` initially empty.
///
/// `C_k(t_end) = exp(i E_k (t_start - t_end)) cos(alpha) C_k(t_start)` and
/// `C_n(t_end) = exp(i (pi/2 - phi + E_k t_start - E_n t_end)) sin(alpha) C_k(t_start)`.
pub fn analytic_two_level<T: Real>(
    c_k_initial: Complex<T>,
    pulse: &TwoLevelPulse<T>,
) -> Result<TwoLevelAmplitudes<T>> {
    let resonance = pulse.energy_n - pulse.energy_k;
    let tol = T::tight_tolerance() * lit::<T>(10.0) * (T::one() + pulse.carrier.abs());
    if (pulse.carrier - resonance).abs() > tol {
        return Err(Error::Precondition(format!(
            "carrier {} is off resonance (E_n - E_k = {}); use the integrator",
            to_f64(pulse.carrier),
            to_f64(resonance)
        )));
    }
    if !(pulse.duration >= T::zero()) || !(pulse.rabi >= T::zero()) {
        return Err(Error::Precondition(
            "duration and rabi must be non-negative".into(),
        ));
    }
    let start = pulse.start;
    let end = start + pulse.duration;
    let alpha = pulse.rabi * pulse.duration / lit(2.0);
    let c_k = cis(pulse.energy_k * (start - end)) * c_k_initial * alpha.cos();
    let c_n = cis(T::FRAC_PI_2() - pulse.phase + pulse.energy_k * start - pulse.energy_n * end)
        * c_k_initial
        * alpha.sin();
    Ok(TwoLevelAmplitudes {
        c_k,
        c_n,
        start,
        end,
        energy_k: pulse.energy_k,
        energy_n: pulse.energy_n,
        alpha,
    })
}

/// Step control for [`integrate_lab_frame`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorOptions<T> {
    /// Steps per period of the fastest drive oscillation when no explicit
    /// step is given.
    pub steps_per_period: usize,
    /// Explicit step; must resolve the fastest oscillation with at least 20 steps.
    pub step: Option<T>,
}

impl<T> Default for IntegratorOptions<T> {
    fn default() -> Self {
        Self {
            steps_per_period: 40,
            step: None,
        }
    }
}

impl<T: Real> IntegratorOptions<T> {
    pub fn with_steps_per_period(steps_per_period: usize) -> Self {
        Self {
            steps_per_period,
            step: None,
        }
    }

    pub fn with_step(step: T) -> Self {
        Self {
            steps_per_period: 40,
            step: Some(step),
        }
    }
}

/// Drive matrix element `V_{g,e}(t) = amplitude * exp(i (frequency t + phase))`
/// in the interaction picture; `V_{e,g}` is its conjugate.
struct Coupling<T> {
    ground: usize,
    excited: usize,
    amplitude: T,
    frequency: T,
}

fn drive_couplings<T: Real>(
    system: &SpinSystem<T>,
    pulse: &PulseSpec<T>,
    energies: &[T],
) -> Vec<Coupling<T>> {
    let n = system.n_spins();
    let half = lit::<T>(0.5);
    let mut out = Vec::new();
    for index in 0..system.dim() {
        for k in 0..n {
            let rabi = pulse.rabi()[k];
            if spin_bit(n, index, k) != 0 || rabi == T::zero() {
                continue;
            }
            let excited = index | spin_mask(n, k);
            out.push(Coupling {
                ground: index,
                excited,
                amplitude: -rabi * half,
                frequency: pulse.carrier() + energies[index] - energies[excited],
            });
        }
    }
    out
}

/// Fastest angular frequency the integrator must resolve for `pulse`.
fn fastest_frequency<T: Real>(couplings: &[Coupling<T>], pulse: &PulseSpec<T>) -> T {
    let detuning = couplings
        .iter()
        .map(|c| c.frequency.abs())
        .fold(T::zero(), T::max);
    // bounds the effective field sqrt(detuning^2 + rabi^2) of every transition
    let rabi: T = pulse.rabi().iter().copied().sum();
    detuning + rabi
}

fn rk4_pulse<T: Real>(
    c: &mut [Complex<T>],
    couplings: &[Coupling<T>],
    phase: T,
    start: T,
    duration: T,
    steps: usize,
) {
    let dim = c.len();
    let h = duration / from_usize(steps);
    let minus_i = -imag_unit::<T>();
    let zero = Complex::new(T::zero(), T::zero());
    let deriv = |t: T, y: &[Complex<T>], out: &mut [Complex<T>]| {
        out.iter_mut().for_each(|o| *o = zero);
        for cp in couplings {
            let v = cis(cp.frequency * t + phase) * cp.amplitude;
            out[cp.ground] = out[cp.ground] + v * y[cp.excited];
            out[cp.excited] = out[cp.excited] + v.conj() * y[cp.ground];
        }
        out.iter_mut().for_each(|o| *o = *o * minus_i);
    };
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![zero; dim],
        vec![zero; dim],
        vec![zero; dim],
        vec![zero; dim],
        vec![zero; dim],
    );
    let half = lit::<T>(0.5);
    let sixth = h / lit(6.0);
    for step in 0..steps {
        let t = start + h * from_usize(step);
        deriv(t, c, &mut k1);
        for i in 0..dim {
            tmp[i] = c[i] + k1[i] * (h * half);
        }
        deriv(t + h * half, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = c[i] + k2[i] * (h * half);
        }
        deriv(t + h * half, &tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = c[i] + k3[i] * h;
        }
        deriv(t + h, &tmp, &mut k4);
        for i in 0..dim {
            c[i] = c[i] + (k1[i] + (k2[i] + k3[i]) * lit::<T>(2.0) + k4[i]) * sixth;
        }
    }
}

/// Time-steps the lab-frame Schrödinger equation through one pulse.
pub fn integrate_lab_frame<T: Real>(
    state: &QuantumState<T>,
    system: &SpinSystem<T>,
    pulse: &PulseSpec<T>,
    start: T,
    options: &IntegratorOptions<T>,
) -> Result<EvolutionReport<T>> {
    integrate_segments(
        state,
        system,
        &[Segment::Pulse(pulse.clone())],
        start,
        options,
    )
}

/// Time-steps a sequence of pulses and delays starting at absolute time `start`.
pub fn integrate_segments<T: Real>(
    state: &QuantumState<T>,
    system: &SpinSystem<T>,
    segments: &[Segment<T>],
    start: T,
    options: &IntegratorOptions<T>,
) -> Result<EvolutionReport<T>> {
    check_state(state, system)?;
    if options.steps_per_period < 20 {
        return Err(Error::Config(format!(
            "steps_per_period must be at least 20, got {}",
            options.steps_per_period
        )));
    }
    let energies = diagonal_energies(system);
    let two_pi = T::PI() + T::PI();
    let mut c: Vec<Complex<T>> = state
        .amplitudes()
        .iter()
        .zip(&energies)
        .map(|(a, e)| *a * cis(*e * start))
        .collect();
    let mut time = start;
    let mut total_steps = 0;
    for segment in segments {
        if let Segment::Pulse(pulse) = segment {
            pulse.check_against(system)?;
            let couplings = drive_couplings(system, pulse, &energies);
            let fastest = fastest_frequency(&couplings, pulse);
            let steps = if couplings.is_empty() {
                0
            } else {
                let period = two_pi / fastest;
                let step = match options.step {
                    Some(step) => {
                        let max_step = period / lit(20.0);
                        if !(step > T::zero()) || step > max_step {
                            return Err(Error::StepTooLarge {
                                step: to_f64(step),
                                max_step: to_f64(max_step),
                                frequency: to_f64(fastest),
                            });
                        }
                        step
                    }
                    None => period / from_usize(options.steps_per_period),
                };
                (pulse.duration() / step)
                    .ceil()
                    .to_usize()
                    .unwrap_or(1)
                    .max(1)
            };
            if steps > 0 {
                rk4_pulse(
                    &mut c,
                    &couplings,
                    pulse.phase(),
                    time,
                    pulse.duration(),
                    steps,
                );
            }
            total_steps += steps;
        }
        time += segment.duration();
    }
    let amplitudes: Vec<Complex<T>> = c
        .iter()
        .zip(&energies)
        .map(|(a, e)| *a * cis(-*e * time))
        .collect();
    let final_state = QuantumState::from_unchecked(amplitudes);
    Ok(EvolutionReport {
        norm_drift: (final_state.norm() - T::one()).abs(),
        final_state,
        method: Method::LabIntegrator,
        steps: total_steps,
    })
}
