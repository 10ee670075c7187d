//! Room-temperature ensemble dynamics through the deviation density matrix.
//!
//! The traceless deviation part of the four-spin thermal density matrix is
//! split into an active 4×4 block `r` over the states `|00ij>` (indices 0..4)
//! and a background `b` over everything else. The physical prefactor
//! `sum_k ω_k / (32 k_B T)` is linear and never applied; it is kept as a tag.

use num_complex::Complex;

use crate::dynamics::pulse_propagator;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::scalar::{cis, lit, to_f64, Real};
use crate::spin_model::{diagonal_energies, PulseSpec, SpinSystem};

/// Size of the active block.
pub const ACTIVE_DIM: usize = 4;

/// Initial background diagonal `b_{n,n}` for `n = 4..16` of the four-spin
/// equilibrium deviation matrix with the active block replaced.
pub const FOUR_SPIN_BACKGROUND: [f64; 12] = [
    -0.5, 0.5, 0.5, 0.5, // n = 4..8
    0.5, -0.5, -0.5, -0.5, // n = 8..12
    -1.0, 0.0, 0.0, 0.0, // n = 12..16
];

/// Symbolic scale `sum_k ω_k / (32 k_B T)` multiplying every entry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleTag<T> {
    pub larmor_sum: T,
}

impl<T: Real> std::fmt::Display for ScaleTag<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} hbar / (32 k_B T)", self.larmor_sum)
    }
}

/// Active 4×4 block `r_{n,p}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActiveBlock<T> {
    pub r: CMatrix<T>,
}

impl<T: Real> ActiveBlock<T> {
    pub fn new(r: CMatrix<T>) -> Result<Self> {
        if r.dim() != ACTIVE_DIM {
            return Err(Error::Dimension {
                what: "active block",
                expected: ACTIVE_DIM,
                actual: r.dim(),
            });
        }
        Ok(Self { r })
    }

    /// `r = C C^†` for active amplitudes `C_ij`.
    pub fn from_amplitudes(amplitudes: &[Complex<T>]) -> Result<Self> {
        if amplitudes.len() != ACTIVE_DIM {
            return Err(Error::Dimension {
                what: "active amplitudes",
                expected: ACTIVE_DIM,
                actual: amplitudes.len(),
            });
        }
        Ok(Self {
            r: CMatrix::outer(amplitudes),
        })
    }

    pub fn trace(&self) -> Complex<T> {
        self.r.trace()
    }

    /// `tr(r²)`.
    pub fn purity(&self) -> T {
        self.r.matmul(&self.r).trace().re
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeviationDensityMatrix<T> {
    entries: CMatrix<T>,
    scale: Option<ScaleTag<T>>,
}

impl<T: Real> DeviationDensityMatrix<T> {
    pub fn new(entries: CMatrix<T>) -> Result<Self> {
        if entries.dim() < ACTIVE_DIM || !entries.dim().is_power_of_two() {
            return Err(Error::Config(format!(
                "deviation matrix dimension {} must be a power of two >= {ACTIVE_DIM}",
                entries.dim()
            )));
        }
        if !entries.is_hermitian(T::tight_tolerance()) {
            return Err(Error::Precondition(
                "deviation density matrix is not Hermitian".into(),
            ));
        }
        Ok(Self {
            entries,
            scale: None,
        })
    }

    pub fn with_scale(mut self, scale: ScaleTag<T>) -> Self {
        self.scale = Some(scale);
        self
    }

    pub fn scale(&self) -> Option<ScaleTag<T>> {
        self.scale
    }

    pub fn entries(&self) -> &CMatrix<T> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    pub fn active_block(&self) -> ActiveBlock<T> {
        ActiveBlock {
            r: self.entries.block(0, ACTIVE_DIM),
        }
    }

    /// `b_{n,n}` for every background index, in index order.
    pub fn background_diagonal(&self) -> Vec<T> {
        (ACTIVE_DIM..self.dim())
            .map(|n| self.entries[(n, n)].re)
            .collect()
    }

    pub fn trace(&self) -> Complex<T> {
        self.entries.trace()
    }

    /// Copy with the natural phases removed: `ρ_np exp(i (E_n - E_p) t)`.
    pub fn in_interaction_picture(&self, system: &SpinSystem<T>, time: T) -> Result<Self> {
        if system.dim() != self.dim() {
            return Err(Error::Dimension {
                what: "deviation matrix",
                expected: system.dim(),
                actual: self.dim(),
            });
        }
        let e = diagonal_energies(system);
        Ok(Self {
            entries: CMatrix::from_fn(self.dim(), |n, p| {
                self.entries[(n, p)] * cis((e[n] - e[p]) * time)
            }),
            scale: self.scale,
        })
    }
}

/// Four-spin deviation matrix with `r = C C^†` on the active block and the
/// standard equilibrium background on the diagonal.
pub fn init_deviation<T: Real>(
    active_amplitudes: &[Complex<T>],
) -> Result<DeviationDensityMatrix<T>> {
    let background: Vec<T> = FOUR_SPIN_BACKGROUND.iter().map(|&b| lit(b)).collect();
    init_deviation_with_background(active_amplitudes, &background)
}

/// Like [`init_deviation`] with an explicit background diagonal.
pub fn init_deviation_with_background<T: Real>(
    active_amplitudes: &[Complex<T>],
    background: &[T],
) -> Result<DeviationDensityMatrix<T>> {
    let norm = linalg::norm(active_amplitudes);
    if (norm - T::one()).abs() > T::tight_tolerance() {
        return Err(Error::Precondition(format!(
            "active amplitudes are not normalized (norm {})",
            to_f64(norm)
        )));
    }
    let dim = ACTIVE_DIM + background.len();
    if !dim.is_power_of_two() {
        return Err(Error::Dimension {
            what: "background diagonal",
            expected: dim.next_power_of_two() - ACTIVE_DIM,
            actual: background.len(),
        });
    }
    let r = ActiveBlock::from_amplitudes(active_amplitudes)?.r;
    let mut entries = CMatrix::zeros(dim);
    for n in 0..ACTIVE_DIM {
        for p in 0..ACTIVE_DIM {
            entries[(n, p)] = r[(n, p)];
        }
    }
    for (i, b) in background.iter().enumerate() {
        entries[(ACTIVE_DIM + i, ACTIVE_DIM + i)] = Complex::new(*b, T::zero());
    }
    DeviationDensityMatrix::new(entries)
}

/// `U ρ U^†` for one pulse started at absolute time `start` (lab frame).
pub fn evolve_deviation<T: Real>(
    rho: &DeviationDensityMatrix<T>,
    system: &SpinSystem<T>,
    pulse: &PulseSpec<T>,
    start: T,
) -> Result<DeviationDensityMatrix<T>> {
    if system.dim() != rho.dim() {
        return Err(Error::Dimension {
            what: "deviation matrix",
            expected: system.dim(),
            actual: rho.dim(),
        });
    }
    let u = pulse_propagator(system, pulse, start)?;
    Ok(DeviationDensityMatrix {
        entries: rho.entries.conjugate_by(&u),
        scale: rho.scale,
    })
}

/// Largest entrywise relative deviation
/// `max |obtained - reference| / max(|reference|, 1e-3)`.
///
/// Complex entries are compared as complex numbers, so the metric is not
/// invariant under a global phase of the underlying state.
pub fn deviation_metric<T: Real>(obtained: &ActiveBlock<T>, reference: &ActiveBlock<T>) -> T {
    let floor = lit::<T>(1e-3);
    obtained
        .r
        .iter()
        .map(|(i, j, a)| {
            let b = reference.r[(i, j)];
            (a - b).norm() / b.norm().max(floor)
        })
        .fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse_design::{cn_pulse, CnPulseOptions, CnVariant};
    use std::f64::consts::PI;

    type C = Complex<f64>;

    fn initial() -> Vec<C> {
        [
            0.3f64.sqrt(),
            0.2f64.sqrt(),
            1.0 / 3f64.sqrt(),
            1.0 / 6f64.sqrt(),
        ]
        .iter()
        .map(|&a| C::new(a, 0.0))
        .collect()
    }

    #[test]
    fn init_from_basis_state() {
        let rho = init_deviation(&[
            C::new(1.0, 0.0),
            C::new(0.0, 0.0),
            C::new(0.0, 0.0),
            C::new(0.0, 0.0),
        ])
        .unwrap();
        let expected = CMatrix::from_real_diagonal(&[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(rho.active_block().r, expected);
    }

    #[test]
    fn init_trace_is_zero() {
        let rho = init_deviation(&initial()).unwrap();
        let b_sum: f64 = rho.background_diagonal().iter().sum();
        assert!((b_sum + 1.0).abs() < 1e-15);
        assert!(rho.trace().norm() < 1e-12);
        assert!(rho.entries().is_hermitian(1e-15));
    }

    #[test]
    fn init_rejects_unnormalized() {
        let bad = vec![C::new(1.0, 0.0); 4];
        assert!(matches!(init_deviation(&bad), Err(Error::Precondition(_))));
        assert!(init_deviation(&initial()[..3]).is_err());
    }

    #[test]
    fn undriven_pulse_only_rotates_phases() {
        let system = SpinSystem::uniformly_coupled(vec![400.0, 300.0, 200.0, 100.0], 10.0).unwrap();
        let rho = init_deviation(&initial()).unwrap();
        let pulse = PulseSpec::new(130.0, 0.0, vec![0.0; 4], 3.7).unwrap();
        let out = evolve_deviation(&rho, &system, &pulse, 0.0).unwrap();
        let e = diagonal_energies(&system);
        for (n, p, a) in out.entries().iter() {
            let before = rho.entries()[(n, p)];
            assert!((a.norm() - before.norm()).abs() < 1e-12);
            let expected = before * cis(-(e[n] - e[p]) * 3.7);
            assert!((a - expected).norm() < 1e-12);
        }
        let back = out.in_interaction_picture(&system, 3.7).unwrap();
        assert!(back.entries().max_abs_diff(rho.entries()) < 1e-12);
    }

    #[test]
    fn complementary_cn_keeps_background() {
        let system = SpinSystem::uniformly_coupled(vec![400.0, 300.0, 200.0, 100.0], 10.0).unwrap();
        let pulse = cn_pulse(
            &system,
            2,
            3,
            &CnPulseOptions {
                variant: CnVariant::Complementary,
                rabi: vec![0.1; 4],
                phase: 0.0,
                exact_2pik: None,
            },
        )
        .unwrap();
        assert!((pulse.duration() - PI / 0.1).abs() < 1e-12);
        let rho = init_deviation(&initial()).unwrap();
        let out = evolve_deviation(&rho, &system, &pulse, 0.0).unwrap();
        assert!(out.entries().is_hermitian(1e-12));
        assert!((out.trace() - rho.trace()).norm() < 1e-12);
        for (a, b) in out
            .background_diagonal()
            .iter()
            .zip(rho.background_diagonal())
        {
            assert!((a - b).abs() < 5e-3);
        }
    }

    #[test]
    fn metric_basics() {
        let r0 = ActiveBlock::from_amplitudes(&initial()).unwrap();
        assert_eq!(deviation_metric(&r0, &r0), 0.0);
        let rotated = ActiveBlock::new(r0.r.scale(C::from_polar(1.0, 0.3))).unwrap();
        assert!(deviation_metric(&rotated, &r0) > 0.2);
    }

    #[test]
    fn purity_of_pure_block_is_one() {
        let r0 = ActiveBlock::from_amplitudes(&initial()).unwrap();
        assert!((r0.purity() - 1.0).abs() < 1e-14);
        assert!((r0.trace().re - 1.0).abs() < 1e-14);
    }
}
