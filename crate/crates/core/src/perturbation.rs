//! Golden-rule absorption rates at first and second order, in closed form.
//!
//! The energy-conserving delta is left out of every rate, so rates are
//! comparative: they carry the dependence on the detector position and the
//! incident wavefunction, not an absolute detector calibration.
//!
//! Second-order denominators use the mean kinetic energy of the absorbed
//! packet, `E_i = <p^2/2m>_absorbed - E_channel`. For packets whose populated
//! modes share one kinetic energy this is exact.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::field::{Position, Wavepacket};
use crate::fock::Statistics;
use crate::medium::{channel_weight, MediumModel};

/// Denominators with magnitude below this are treated as resonant.
pub const RESONANCE_TOLERANCE: f64 = 1e-9;

/// Two same-spin fermion packets with `1 - |<f|g>|` below this are one state.
pub const SAME_STATE_TOLERANCE: f64 = 1e-12;

/// Positions whose wavefunction magnitude falls below this are skipped by
/// the exponent fit.
pub const FIT_AMPLITUDE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    pub value: f64,
    pub order: u8,
    pub position: Position,
    /// Amplitude contributions with the coupling factored out. First order
    /// carries one term; second order carries `[W(d,mu), W(b,xi)]`.
    pub terms: Vec<C64>,
}

impl RateResult {
    /// `(2 pi / hbar^2) |alpha|^(2 order) |sum terms|^2`.
    pub fn from_terms(
        order: u8,
        position: Position,
        terms: Vec<C64>,
        alpha: C64,
        hbar: f64,
    ) -> Self {
        let total: C64 = terms.iter().sum();
        let value =
            2.0 * PI / (hbar * hbar) * alpha.norm_sqr().powi(order as i32) * total.norm_sqr();
        Self {
            value,
            order,
            position,
            terms,
        }
    }
}

/// First-order rate `beta delta(xi, Omega) |psi_f(Q)|^2`.
pub fn rate_first_order(
    wp: &Wavepacket,
    detector_spin: u32,
    q: &Position,
    model: &MediumModel,
) -> Result<RateResult> {
    let basis = wp.basis();
    basis.check_spin(detector_spin)?;
    let psi = if wp.spin() == detector_spin {
        wp.position_amplitude(q)?
    } else {
        C64::default()
    };
    Ok(RateResult::from_terms(
        1,
        q.clone(),
        vec![model.single_channel_m1() * psi],
        model.alpha(),
        basis.hbar(),
    ))
}

/// Two incident packets `f` (spin xi) and `g` (spin mu) and the detector spin.
#[derive(Debug, Clone)]
pub struct TwoParticleInput {
    f: Wavepacket,
    g: Wavepacket,
    detector_spin: u32,
    statistics: Statistics,
}

impl TwoParticleInput {
    pub fn new(
        f: Wavepacket,
        g: Wavepacket,
        detector_spin: u32,
        statistics: Statistics,
    ) -> Result<Self> {
        let overlap = f.overlap(&g)?;
        f.basis().check_spin(detector_spin)?;
        if statistics == Statistics::Fermi
            && f.spin() == g.spin()
            && 1.0 - overlap.norm() < SAME_STATE_TOLERANCE
        {
            return Err(Error::FermionSameState);
        }
        Ok(Self {
            f,
            g,
            detector_spin,
            statistics,
        })
    }

    pub fn f(&self) -> &Wavepacket {
        &self.f
    }

    pub fn g(&self) -> &Wavepacket {
        &self.g
    }

    pub fn detector_spin(&self) -> u32 {
        self.detector_spin
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }
}

/// How the intermediate one-particle state is split between the two
/// absorption orderings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SecondOrderForm {
    /// Expand `psi(Q)|2> = d(xi) psi_f |1_g> +/- d(mu) psi_g |1_f>` and give
    /// each coefficient the denominator of the packet it absorbed. This is
    /// what a complete sum over intermediate states gives.
    #[default]
    Expansion,
    /// Project onto `<1_g|` and `<1_f|` separately, which brings in the
    /// overlap `<f|g>`. Matches `Expansion` whenever `|1_f>` and `|1_g>` are
    /// orthogonal and counts the shared state twice when they coincide.
    Projection,
}

/// Second-order rate `(2 pi / hbar^2) |alpha|^4 |W(d,mu) + W(b,xi)|^2`.
pub fn rate_second_order(
    input: &TwoParticleInput,
    q: &Position,
    model: &MediumModel,
) -> Result<RateResult> {
    rate_second_order_with(input, q, model, SecondOrderForm::Expansion)
}

pub fn rate_second_order_with(
    input: &TwoParticleInput,
    q: &Position,
    model: &MediumModel,
    form: SecondOrderForm,
) -> Result<RateResult> {
    let terms = second_order_terms(input, q, model, form)?;
    Ok(RateResult::from_terms(
        2,
        q.clone(),
        terms.to_vec(),
        model.alpha(),
        input.f.basis().hbar(),
    ))
}

/// `[W(d,mu), W(b,xi)]`: `W(d,mu)` has `g` absorbed first (denominator from
/// `g`'s energy), `W(b,xi)` has `f` absorbed first.
pub fn second_order_terms(
    input: &TwoParticleInput,
    q: &Position,
    model: &MediumModel,
    form: SecondOrderForm,
) -> Result<[C64; 2]> {
    second_order_terms_at(
        input,
        q,
        model,
        form,
        input.f.mean_kinetic_energy(),
        input.g.mean_kinetic_energy(),
    )
}

/// [`second_order_terms`] with explicit kinetic energies for the absorbed
/// packets in place of their means.
pub fn second_order_terms_at(
    input: &TwoParticleInput,
    q: &Position,
    model: &MediumModel,
    form: SecondOrderForm,
    energy_f: f64,
    energy_g: f64,
) -> Result<[C64; 2]> {
    let (f, g) = (&input.f, &input.g);
    let omega = input.detector_spin;
    let sign = input.statistics.exchange_sign();

    let weight_g_first = summed_channel_weight(model, energy_g)?;
    let weight_f_first = summed_channel_weight(model, energy_f)?;

    let psi_f = f.position_amplitude(q)?;
    let psi_g = g.position_amplitude(q)?;
    let xi_is_omega = delta(f.spin() == omega);
    let mu_is_omega = delta(g.spin() == omega);

    let terms = match form {
        SecondOrderForm::Expansion => {
            let pair = xi_is_omega * mu_is_omega * psi_f * psi_g;
            [weight_g_first * sign * pair, weight_f_first * pair]
        }
        SecondOrderForm::Projection => {
            let same_spin = delta(f.spin() == g.spin());
            let fg = f.overlap(g)?;
            let w_d = weight_g_first
                * xi_is_omega
                * psi_f
                * (same_spin * xi_is_omega * fg * psi_f + sign * mu_is_omega * psi_g);
            let w_b = weight_f_first
                * mu_is_omega
                * psi_g
                * (sign * mu_is_omega * same_spin * fg.conj() * psi_g + xi_is_omega * psi_f);
            [w_d, w_b]
        }
    };
    Ok(terms)
}

/// `sum_i m2_i m1_i / (absorbed_energy - E_i)` over the medium channels.
fn summed_channel_weight(model: &MediumModel, absorbed_energy: f64) -> Result<C64> {
    if model.channels().is_empty() {
        return Err(Error::InvalidMedium(
            "second-order rates need at least one intermediate channel".into(),
        ));
    }
    let mut sum = C64::default();
    for ch in model.channels() {
        let denom = absorbed_energy - ch.energy;
        if denom.abs() < RESONANCE_TOLERANCE {
            return Err(Error::Resonance {
                channel: ch.label.clone(),
                denominator: denom,
            });
        }
        sum += channel_weight(ch, denom)?;
    }
    Ok(sum)
}

fn delta(cond: bool) -> f64 {
    if cond {
        1.0
    } else {
        0.0
    }
}

/// Least-squares slope of `ln(rate)` against `ln(intensity)`.
///
/// Points with non-positive intensity or rate are dropped. Needs three usable
/// points with distinct intensities.
pub fn fit_log_slope(samples: &[(f64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(i, r)| *i > 0.0 && *r > 0.0 && i.is_finite() && r.is_finite())
        .map(|(i, r)| (i.ln(), r.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Domain(format!(
            "exponent fit needs at least 3 usable points, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx < 1e-18 * n {
        return Err(Error::Domain(
            "exponent fit needs positions with different |psi(Q)|".into(),
        ));
    }
    Ok(sxy / sxx)
}

/// Exponent `k` in `w2 ~ (|psi_f(Q)| |psi_g(Q)|)^k`, fitted over `positions`.
/// For the same-state boson case the regressor is `|psi(Q)|^2`.
pub fn proportionality_exponent(
    input: &TwoParticleInput,
    model: &MediumModel,
    positions: &[Position],
) -> Result<f64> {
    let mut samples = Vec::with_capacity(positions.len());
    for q in positions {
        let a = input.f.position_amplitude(q)?.norm();
        let b = input.g.position_amplitude(q)?.norm();
        if a < FIT_AMPLITUDE_FLOOR || b < FIT_AMPLITUDE_FLOOR {
            continue;
        }
        samples.push((a * b, rate_second_order(input, q, model)?.value));
    }
    fit_log_slope(&samples)
}

/// Exponent `k` in `w1 ~ (|psi(Q)|^2)^k`.
pub fn first_order_exponent(
    wp: &Wavepacket,
    detector_spin: u32,
    model: &MediumModel,
    positions: &[Position],
) -> Result<f64> {
    let mut samples = Vec::with_capacity(positions.len());
    for q in positions {
        let a = wp.position_amplitude(q)?.norm();
        if a < FIT_AMPLITUDE_FLOOR {
            continue;
        }
        samples.push((a * a, rate_first_order(wp, detector_spin, q, model)?.value));
    }
    fit_log_slope(&samples)
}
