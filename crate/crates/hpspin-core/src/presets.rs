//! Shipped parameter choices for the N-sweeps.
//!
//! The grid-code envelope follows a fixed delta*sqrt(N) scaling anchored at
//! delta = 0.4 for N = 160, so codes at different N represent the same
//! physical envelope width. Truncations take the largest symmetric lattice
//! (capped at 5) whose worst corner still maps inside the sphere.

use crate::codes::GkpCodeParams;
use crate::magic::MagicPoint;

pub const GKP_ANCHOR_N: u32 = 160;
pub const GKP_ANCHOR_DELTA: f64 = 0.4;

/// Envelope parameter at size N under the delta*sqrt(N) = const scaling.
pub fn gkp_delta(n_spins: u32) -> f64 {
    GKP_ANCHOR_DELTA * (GKP_ANCHOR_N as f64 / n_spins as f64).sqrt()
}

/// Largest square truncation T <= 5 whose corner lattice point (worst case
/// mu = 1) keeps its rotation angle within pi.
pub fn gkp_truncation(n_spins: u32) -> (u32, u32) {
    let ell_cap = (std::f64::consts::PI * n_spins as f64 / 2.0).sqrt();
    let mut t = 0u32;
    while t < 5 {
        let next = t + 1;
        let ell = ((((2 * next + 1) as f64).powi(2)) + (next as f64).powi(2)).sqrt();
        if ell > ell_cap {
            break;
        }
        t = next;
    }
    (t, t)
}

pub fn gkp_params(n_spins: u32, logical_label: u8) -> GkpCodeParams {
    GkpCodeParams {
        n_spins,
        delta: gkp_delta(n_spins),
        truncation: gkp_truncation(n_spins),
        logical_label,
    }
}

/// Envelope for the tiny ensembles the brute-force swap gadget can reach.
/// The sqrt(N) scaling would push delta past 1 below N = 40, so the gadget
/// sweep shares one fixed width and a minimal lattice across its sizes.
pub const GADGET_DELTA: f64 = 0.5;
pub const GADGET_TRUNCATION: (u32, u32) = (0, 1);

/// Envelope width for the damped codespace projectors. The damping puts a
/// Gaussian weight e^(-damping^2 s^2 / 2) on a lattice peak at phase-space
/// distance s, the same form the codewords carry with width delta, so the
/// two are matched one to one. Mismatching them caps the attainable overlap
/// and the infidelity stops improving with N.
pub fn magic_damping(n_spins: u32) -> f64 {
    gkp_delta(n_spins)
}

/// Translate-sum truncation for the damped projectors.
pub const MAGIC_M_MAX: u32 = 5;

/// Full resource-preparation settings at size N: preset envelope, preset
/// lattice, matched damping.
pub fn magic_point(n_spins: u32) -> MagicPoint {
    MagicPoint {
        n_spins,
        delta: gkp_delta(n_spins),
        truncation: gkp_truncation(n_spins),
        damping: magic_damping(n_spins),
        m_max: MAGIC_M_MAX,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::build_spin_gkp;

    #[test]
    fn truncation_scan_frozen_values() {
        assert_eq!(gkp_truncation(40), (3, 3));
        assert_eq!(gkp_truncation(80), (4, 4));
        assert_eq!(gkp_truncation(120), (5, 5));
        assert_eq!(gkp_truncation(160), (5, 5));
        assert!((gkp_delta(160) - 0.4).abs() < 1e-15);
        assert!((gkp_delta(40) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn preset_codewords_stay_in_the_hp_window() {
        for n in [40u32, 80, 120, 160] {
            for mu in [0u8, 1] {
                let state = build_spin_gkp(&gkp_params(n, mu)).unwrap();
                let nbar = state.mean_excitation();
                assert!(nbar < 10.0, "N={n} mu={mu}: <n> = {nbar}");
                assert!((state.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn preset_codeword_overlap_shrinks_with_n() {
        let mut last = f64::INFINITY;
        for n in [40u32, 80, 120, 160] {
            let zero = build_spin_gkp(&gkp_params(n, 0)).unwrap();
            let one = build_spin_gkp(&gkp_params(n, 1)).unwrap();
            let ov = zero.overlap(&one).norm();
            assert!(ov < last, "N={n}: overlap {ov} did not shrink from {last}");
            last = ov;
        }
    }
}
