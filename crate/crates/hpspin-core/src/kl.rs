//! Knill-Laflamme analysis for collective errors and the local conditions
//! they induce.
//!
//! The error set is {I, Jx, Jy, Jz}. Codeword moments of products of these
//! split into a codeword-independent part C (the averaged diagonal blocks)
//! and a remainder Delta measuring how far the pair is from exact
//! correctability. Permutation symmetry pushes both parts down to conditions
//! on single-spin and two-spin Pauli moments, which a brute-force routine on
//! the 2^N space verifies independently at small N.

use nalgebra::{DVector, Matrix3, Matrix4};
use num_complex::Complex64;

use crate::codes::{CodePair, SymmetricState};
use crate::error::{Error, Result};
use crate::fullspace;
use crate::su2::{spin_operators, Axis};

/// Largest N the 2^N brute-force moment routines accept.
pub const MAX_DIRECT_N: u32 = 12;

/// Residual below which `leakage_kl_check` reports the code as passing.
pub const LEAKAGE_TOL: f64 = 1e-8;

const AXES: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

fn epsilon(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Moment of a short product of collective operators between two states,
/// <bra| J_{w1} J_{w2} ... |ket> for word = [w1, w2, ...].
///
/// Only total degree <= 2 is supported; the error sets considered here stop
/// at second moments, and higher orders need a characterization this module
/// does not attempt.
pub fn collective_moment(
    bra: &SymmetricState,
    ket: &SymmetricState,
    word: &[Axis],
) -> Result<Complex64> {
    if bra.n_spins != ket.n_spins {
        return Err(Error::InvalidInput(format!(
            "moment between states of {} and {} spins",
            bra.n_spins, ket.n_spins
        )));
    }
    if word.len() > 2 {
        return Err(Error::InvalidInput(format!(
            "operator word of degree {} exceeds the supported degree 2",
            word.len()
        )));
    }
    let ops = spin_operators(bra.n_spins);
    let mut v = ket.amps.clone();
    for ax in word.iter().rev() {
        v = ax.operator(&ops) * v;
    }
    Ok(bra.amps.dotc(&v))
}

/// Codeword moments of the collective error set, split into the shared part
/// and the remainder.
///
/// Index convention for the 4x4 matrices: 0 is the identity, 1..=3 are
/// Jx, Jy, Jz, so entry (a, b) is <mu| E_a E_b |mu'> (all error operators
/// are Hermitian). `delta[mu][mup]` is the moment block minus
/// delta_{mu,mup} C, so its (0,0) entry on the off-diagonal block is the
/// codeword overlap and on the diagonal blocks the deviation from unit norm.
#[derive(Debug, Clone)]
pub struct KlReport {
    pub n_spins: u32,
    pub moments: [[Matrix4<Complex64>; 2]; 2],
    pub c_matrix: Matrix4<Complex64>,
    pub delta: [[Matrix4<Complex64>; 2]; 2],
}

impl KlReport {
    /// First-moment row pushed down to a single spin: (2/N) <mu| J_i |mu'>.
    pub fn predicted_one_body(&self, mu: usize, mup: usize) -> [Complex64; 3] {
        let f = Complex64::from(2.0 / self.n_spins as f64);
        [
            self.moments[mu][mup][(0, 1)] * f,
            self.moments[mu][mup][(0, 2)] * f,
            self.moments[mu][mup][(0, 3)] * f,
        ]
    }

    pub fn max_c(&self) -> f64 {
        self.c_matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_delta(&self) -> f64 {
        self.delta
            .iter()
            .flatten()
            .flat_map(|m| m.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Frobenius norm of each remainder block, indexed [mu][mup].
    pub fn delta_norms(&self) -> [[f64; 2]; 2] {
        let mut out = [[0.0; 2]; 2];
        for mu in 0..2 {
            for mup in 0..2 {
                out[mu][mup] = self.delta[mu][mup]
                    .iter()
                    .map(|z| z.norm_sqr())
                    .sum::<f64>()
                    .sqrt();
            }
        }
        out
    }

    /// Deviation of C from Hermiticity and of the diagonal remainder blocks
    /// from Hermiticity, whichever is worse.
    pub fn hermiticity_error(&self) -> f64 {
        let herm = |m: &Matrix4<Complex64>| {
            let mut worst: f64 = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    worst = worst.max((m[(a, b)] - m[(b, a)].conj()).norm());
                }
            }
            worst
        };
        herm(&self.c_matrix)
            .max(herm(&self.delta[0][0]))
            .max(herm(&self.delta[1][1]))
    }
}

fn moment_block(
    bra: &DVector<Complex64>,
    bra_imgs: &[DVector<Complex64>; 3],
    ket: &DVector<Complex64>,
    ket_imgs: &[DVector<Complex64>; 3],
) -> Matrix4<Complex64> {
    let mut m = Matrix4::zeros();
    m[(0, 0)] = bra.dotc(ket);
    for i in 0..3 {
        m[(0, i + 1)] = bra.dotc(&ket_imgs[i]);
        m[(i + 1, 0)] = bra_imgs[i].dotc(ket);
        for j in 0..3 {
            // J_i J_j sandwiched between the codewords; the operators are
            // Hermitian, so this is an inner product of the two images.
            m[(i + 1, j + 1)] = bra_imgs[i].dotc(&ket_imgs[j]);
        }
    }
    m
}

/// Compute the full KL report for a codeword pair.
pub fn kl_collective(pair: &CodePair) -> Result<KlReport> {
    let n = pair.n_spins();
    if pair.zero_logical.n_spins != pair.one_logical.n_spins {
        return Err(Error::InvalidInput(format!(
            "codewords live on {} and {} spins",
            pair.zero_logical.n_spins, pair.one_logical.n_spins
        )));
    }
    let ops = spin_operators(n);
    let states = [&pair.zero_logical.amps, &pair.one_logical.amps];
    let images: Vec<[DVector<Complex64>; 3]> = states
        .iter()
        .map(|v| [&ops.jx * *v, &ops.jy * *v, &ops.jz * *v])
        .collect();

    let mut moments = [[Matrix4::zeros(); 2]; 2];
    for mu in 0..2 {
        for mup in 0..2 {
            moments[mu][mup] =
                moment_block(states[mu], &images[mu], states[mup], &images[mup]);
        }
    }
    let c_matrix = (moments[0][0] + moments[1][1]) * Complex64::from(0.5);
    let mut delta = moments;
    delta[0][0] -= c_matrix;
    delta[1][1] -= c_matrix;

    Ok(KlReport {
        n_spins: n,
        moments,
        c_matrix,
        delta,
    })
}

/// The two-body coefficient matrix (4 M_ij - 2i eps_ijk M_0k) / (N(N-1))
/// built from one 4x4 moment block.
fn two_body_coefficients(m: &Matrix4<Complex64>, n: f64) -> Matrix3<Complex64> {
    let denom = n * (n - 1.0);
    Matrix3::from_fn(|i, j| {
        let mut val = m[(i + 1, j + 1)] * Complex64::from(4.0);
        for k in 0..3 {
            let e = epsilon(i, j, k);
            if e != 0.0 {
                val -= Complex64::new(0.0, 2.0 * e) * m[(0, k + 1)];
            }
        }
        val / Complex64::from(denom)
    })
}

/// Coefficients of the induced conditions on two distinct spins.
///
/// For sites n != n' the exact statement is
///   <mu| s_i^(n) s_j^(n') |mu'> = delta_{mu,mup} (D_ij - d_ij/(N-1))
///                                + Dt_ij - Delta_00 d_ij/(N-1),
/// with d_ij the Kronecker delta, D built from C, Dt from the remainder
/// block, and Delta_00 the block's overlap deviation. The pieces are kept
/// separate so callers can see which term dominates.
#[derive(Debug, Clone)]
pub struct LocalKl {
    pub n_spins: u32,
    pub d_matrix: Matrix3<Complex64>,
    pub d_tilde: [[Matrix3<Complex64>; 2]; 2],
    /// 1/(N-1), the coefficient subtracted on the diagonal in the exact part.
    pub diagonal_subtraction: f64,
    /// Delta_00/(N-1) per block, the analogous subtraction for the remainder.
    pub overlap_subtraction: [[Complex64; 2]; 2],
}

impl LocalKl {
    /// Assemble the predicted <mu| s_i^(n) s_j^(n') |mu'> for n != n'.
    pub fn predicted_two_body(&self, mu: usize, mup: usize) -> Matrix3<Complex64> {
        let mut out = self.d_tilde[mu][mup];
        for i in 0..3 {
            out[(i, i)] -= self.overlap_subtraction[mu][mup];
        }
        if mu == mup {
            out += self.d_matrix;
            for i in 0..3 {
                out[(i, i)] -= Complex64::from(self.diagonal_subtraction);
            }
        }
        out
    }
}

pub fn local_kl_from_collective(report: &KlReport) -> Result<LocalKl> {
    let n = report.n_spins;
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "two-body conditions need at least two spins, got {}",
            n
        )));
    }
    let nf = n as f64;
    let d_matrix = two_body_coefficients(&report.c_matrix, nf);
    let mut d_tilde = [[Matrix3::zeros(); 2]; 2];
    let mut overlap_subtraction = [[Complex64::new(0.0, 0.0); 2]; 2];
    for mu in 0..2 {
        for mup in 0..2 {
            d_tilde[mu][mup] = two_body_coefficients(&report.delta[mu][mup], nf);
            overlap_subtraction[mu][mup] =
                report.delta[mu][mup][(0, 0)] / Complex64::from(nf - 1.0);
        }
    }
    Ok(LocalKl {
        n_spins: n,
        d_matrix,
        d_tilde,
        diagonal_subtraction: 1.0 / (nf - 1.0),
        overlap_subtraction,
    })
}

/// Truly local Pauli moments from the full 2^N space.
///
/// `one_body[mu][mup][i]` is <mu| s_i^(0) |mu'> and `two_body[mu][mup]` the
/// 3x3 matrix <mu| s_i^(0) s_j^(1) |mu'>; `site_spread` is the largest
/// deviation of any other site or ordered site pair from those
/// representatives, which permutation symmetry forces to rounding noise.
#[derive(Debug, Clone)]
pub struct LocalMoments {
    pub n_spins: u32,
    pub one_body: [[[Complex64; 3]; 2]; 2],
    pub two_body: [[Matrix3<Complex64>; 2]; 2],
    pub site_spread: f64,
}

pub fn local_kl_direct(pair: &CodePair) -> Result<LocalMoments> {
    let n = pair.n_spins();
    if n > MAX_DIRECT_N {
        return Err(Error::ResourceLimit {
            what: "brute-force local moments",
            requested: n as usize,
            limit: MAX_DIRECT_N as usize,
        });
    }
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "two-body moments need at least two spins, got {}",
            n
        )));
    }
    let sites = n as usize;
    let states = [
        fullspace::embed_symmetric(&pair.zero_logical)?,
        fullspace::embed_symmetric(&pair.one_logical)?,
    ];
    // images[mu][i][site] = s_i^(site) |mu>
    let images: Vec<Vec<Vec<DVector<Complex64>>>> = states
        .iter()
        .map(|v| {
            AXES.iter()
                .map(|&ax| {
                    (0..sites)
                        .map(|s| fullspace::sigma_apply(ax, s, v))
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut one_body = [[[Complex64::new(0.0, 0.0); 3]; 2]; 2];
    let mut two_body = [[Matrix3::zeros(); 2]; 2];
    let mut spread: f64 = 0.0;
    for mu in 0..2 {
        for mup in 0..2 {
            for i in 0..3 {
                let rep = states[mu].dotc(&images[mup][i][0]);
                one_body[mu][mup][i] = rep;
                for s in 1..sites {
                    let v = states[mu].dotc(&images[mup][i][s]);
                    spread = spread.max((v - rep).norm());
                }
                for j in 0..3 {
                    // Distinct sites commute, so the product splits into an
                    // inner product of single-site images.
                    let rep2 = images[mu][i][0].dotc(&images[mup][j][1]);
                    two_body[mu][mup][(i, j)] = rep2;
                    for s in 0..sites {
                        for s2 in 0..sites {
                            if s == s2 || (s == 0 && s2 == 1) {
                                continue;
                            }
                            let v = images[mu][i][s].dotc(&images[mup][j][s2]);
                            spread = spread.max((v - rep2).norm());
                        }
                    }
                }
            }
        }
    }
    Ok(LocalMoments {
        n_spins: n,
        one_body,
        two_body,
        site_spread: spread,
    })
}

/// Correctability of losing one spin to an unmonitored environment.
///
/// Tracing out spin n is generated by Kraus operators whose pairwise
/// products on that spin are (I + sz)/2, (I - sz)/2 and the two ladder
/// operators, so the code corrects the loss exactly when each of those four
/// has codeword matrix proportional to the identity. Residuals quantify the
/// violation per operator, in that order.
#[derive(Debug, Clone)]
pub struct LeakageReport {
    pub residuals: [f64; 4],
    pub max_residual: f64,
    /// How far the two population operators sum from the codeword Gram
    /// matrix; an algebraic identity, so rounding noise only.
    pub completeness_error: f64,
    pub site_spread: f64,
    pub pass: bool,
}

pub fn leakage_kl_check(pair: &CodePair) -> Result<LeakageReport> {
    let n = pair.n_spins();
    if n > MAX_DIRECT_N {
        return Err(Error::ResourceLimit {
            what: "brute-force leakage check",
            requested: n as usize,
            limit: MAX_DIRECT_N as usize,
        });
    }
    let sites = n as usize;
    let states = [
        fullspace::embed_symmetric(&pair.zero_logical)?,
        fullspace::embed_symmetric(&pair.one_logical)?,
    ];
    let half = Complex64::from(0.5);
    let half_i = Complex64::new(0.0, 0.5);
    // Images of |mu> under the four products, per site.
    let apply = |op: usize, site: usize, v: &DVector<Complex64>| -> DVector<Complex64> {
        let z = fullspace::sigma_apply(Axis::Z, site, v);
        match op {
            0 => (v + &z) * half,
            1 => (v - &z) * half,
            op => {
                let x = fullspace::sigma_apply(Axis::X, site, v);
                let y = fullspace::sigma_apply(Axis::Y, site, v);
                if op == 2 {
                    x * half + y * half_i
                } else {
                    x * half - y * half_i
                }
            }
        }
    };

    let mut residuals = [0.0; 4];
    let mut completeness: f64 = 0.0;
    let mut spread: f64 = 0.0;
    for op in 0..4 {
        let mut rep = [[Complex64::new(0.0, 0.0); 2]; 2];
        for site in 0..sites {
            for mu in 0..2 {
                for mup in 0..2 {
                    let v = states[mu].dotc(&apply(op, site, &states[mup]));
                    if site == 0 {
                        rep[mu][mup] = v;
                    } else {
                        spread = spread.max((v - rep[mu][mup]).norm());
                    }
                }
            }
        }
        residuals[op] = rep[0][1]
            .norm()
            .max(rep[1][0].norm())
            .max(0.5 * (rep[0][0] - rep[1][1]).norm());
        if op == 1 {
            // The two population operators must sum to the identity, so
            // their codeword matrices must sum to the Gram matrix.
            let gram = [
                [states[0].dotc(&states[0]), states[0].dotc(&states[1])],
                [states[1].dotc(&states[0]), states[1].dotc(&states[1])],
            ];
            let mut prev = [[Complex64::new(0.0, 0.0); 2]; 2];
            for mu in 0..2 {
                for mup in 0..2 {
                    prev[mu][mup] = states[mu].dotc(&apply(0, 0, &states[mup]));
                    completeness = completeness
                        .max((prev[mu][mup] + rep[mu][mup] - gram[mu][mup]).norm());
                }
            }
        }
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(LeakageReport {
        residuals,
        max_residual,
        completeness_error: completeness,
        site_spread: spread,
        pass: max_residual < LEAKAGE_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{
        build_spin_binomial, build_spin_cat, build_spin_gkp_pair, repetition_pair, CodeFamily,
        CodeParams,
    };
    use crate::presets;
    use approx::assert_abs_diff_eq;

    fn degenerate_pair(n: u32) -> CodePair {
        let s = SymmetricState::polarized(n);
        CodePair {
            family: CodeFamily::Reference,
            zero_logical: s.clone(),
            one_logical: s.clone(),
            params: CodeParams::Repetition,
            overlap: Complex64::from(1.0),
        }
    }

    fn coherent_pair(n: u32) -> CodePair {
        // Deliberately non-orthogonal codewords to exercise every remainder
        // term, including the overlap subtraction.
        let omega_a = crate::su2::ScsParams::new(0.5, 0.0).unwrap();
        let omega_b = crate::su2::ScsParams::new(0.9, 2.1).unwrap();
        let zero = SymmetricState::coherent(n, omega_a);
        let one = SymmetricState::coherent(n, omega_b);
        let overlap = zero.overlap(&one);
        CodePair {
            family: CodeFamily::Reference,
            zero_logical: zero,
            one_logical: one,
            params: CodeParams::Repetition,
            overlap,
        }
    }

    #[test]
    fn moment_engine_matches_operator_matrices() {
        let n = 5;
        let pair = coherent_pair(n);
        let ops = spin_operators(n);
        let a = &pair.zero_logical;
        let b = &pair.one_logical;
        let direct = a.amps.dotc(&(&ops.jy * (&ops.jx * &b.amps)));
        let engine = collective_moment(a, b, &[Axis::Y, Axis::X]).unwrap();
        assert_abs_diff_eq!(engine.re, direct.re, epsilon = 1e-13);
        assert_abs_diff_eq!(engine.im, direct.im, epsilon = 1e-13);
        assert!(collective_moment(a, b, &[Axis::X, Axis::X, Axis::Z]).is_err());
    }

    #[test]
    fn binomial_first_moments_are_balanced() {
        // Both codewords sit at mean excitation 2, so <Jz> = N/2 - 2 on each
        // diagonal block and the z first-moment remainder cancels exactly.
        for n in [6u32, 11, 20] {
            let report = kl_collective(&build_spin_binomial(n).unwrap()).unwrap();
            let expect = n as f64 / 2.0 - 2.0;
            assert_abs_diff_eq!(report.moments[0][0][(0, 3)].re, expect, epsilon = 1e-12);
            assert_abs_diff_eq!(report.moments[1][1][(0, 3)].re, expect, epsilon = 1e-12);
            assert!(report.delta[0][0][(0, 3)].norm() < 1e-12);
            assert!(report.delta[1][1][(0, 3)].norm() < 1e-12);
            assert!(report.hermiticity_error() < 1e-12);
        }
    }

    #[test]
    fn binomial_remainder_fades_against_c() {
        let mut prev = f64::INFINITY;
        for n in [20u32, 80, 140, 200] {
            let report = kl_collective(&build_spin_binomial(n).unwrap()).unwrap();
            let ratio = report.max_delta() / report.max_c();
            assert!(
                ratio < prev,
                "remainder ratio {} at N = {} did not shrink (prev {})",
                ratio,
                n,
                prev
            );
            prev = ratio;
        }
    }

    #[test]
    fn gkp_preset_remainder_fades_against_c() {
        let mut prev = f64::INFINITY;
        for n in [40u32, 80, 120, 160] {
            let pair =
                build_spin_gkp_pair(n, presets::gkp_delta(n), presets::gkp_truncation(n)).unwrap();
            let report = kl_collective(&pair).unwrap();
            let ratio = report.max_delta() / report.max_c();
            assert!(
                ratio < prev,
                "remainder ratio {} at N = {} did not shrink (prev {})",
                ratio,
                n,
                prev
            );
            prev = ratio;
        }
    }

    #[test]
    fn polarized_pair_fails_z_condition() {
        let n = 8;
        let report = kl_collective(&repetition_pair(n)).unwrap();
        let half_n = n as f64 / 2.0;
        assert_abs_diff_eq!(report.moments[0][0][(0, 3)].re, half_n, epsilon = 1e-12);
        assert_abs_diff_eq!(report.moments[1][1][(0, 3)].re, -half_n, epsilon = 1e-12);
        // The averaged part cancels and the whole signal lands in the
        // remainder, which is the loud failure expected of this pair.
        assert!(report.c_matrix[(0, 3)].norm() < 1e-12);
        assert_abs_diff_eq!(report.delta[0][0][(0, 3)].re, half_n, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_scs_code_reproduces_product_correlations() {
        // A polarized product state has <s_i s_j> = diag(0, 0, 1) across any
        // two sites; the collective route must reproduce that, and the xy
        // entries exercise the epsilon term against C_{xy} = iN/4.
        let n = 6;
        let pair = degenerate_pair(n);
        let report = kl_collective(&pair).unwrap();
        assert_abs_diff_eq!(
            report.c_matrix[(1, 2)].im,
            n as f64 / 4.0,
            epsilon = 1e-12
        );
        let local = local_kl_from_collective(&report).unwrap();
        let predicted = local.predicted_two_body(0, 0);
        let direct = local_kl_direct(&pair).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == 2 && j == 2 { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(predicted[(i, j)].re, expect, epsilon = 1e-12);
                assert_abs_diff_eq!(predicted[(i, j)].im, 0.0, epsilon = 1e-12);
                let d = direct.two_body[0][0][(i, j)];
                assert_abs_diff_eq!(d.re, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn collective_route_matches_brute_force() {
        for n in [6u32, 8, 10] {
            for pair in [
                build_spin_binomial(n).unwrap(),
                build_spin_cat(n, 1.1).unwrap(),
            ] {
                let report = kl_collective(&pair).unwrap();
                let local = local_kl_from_collective(&report).unwrap();
                let direct = local_kl_direct(&pair).unwrap();
                assert!(direct.site_spread < 1e-12);
                for mu in 0..2 {
                    for mup in 0..2 {
                        let one = report.predicted_one_body(mu, mup);
                        let two = local.predicted_two_body(mu, mup);
                        for i in 0..3 {
                            let d = direct.one_body[mu][mup][i];
                            assert!((d - one[i]).norm() < 1e-12);
                            for j in 0..3 {
                                let db = direct.two_body[mu][mup][(i, j)];
                                assert!(
                                    (db - two[(i, j)]).norm() < 1e-10,
                                    "N = {} block ({}, {}) entry ({}, {})",
                                    n,
                                    mu,
                                    mup,
                                    i,
                                    j
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn nonorthogonal_pair_assemblies_agree() {
        // Two ways to organize the same identity: the split form
        // delta (D - I/(N-1)) + Dt - Delta_00 I/(N-1) used here, and the raw
        // moment form (4 M_ij - N d_ij M_00 - 2i eps M_0k)/(N(N-1)). Both
        // must match each other and the brute force even when the codewords
        // overlap, which settles how the overlap subtraction is placed.
        let n = 6;
        let pair = coherent_pair(n);
        assert!(pair.overlap.norm() > 0.3);
        let report = kl_collective(&pair).unwrap();
        let local = local_kl_from_collective(&report).unwrap();
        let direct = local_kl_direct(&pair).unwrap();
        let nf = n as f64;
        for mu in 0..2 {
            for mup in 0..2 {
                let split = local.predicted_two_body(mu, mup);
                let mut raw = two_body_coefficients(&report.moments[mu][mup], nf);
                let m00 = report.moments[mu][mup][(0, 0)];
                for i in 0..3 {
                    raw[(i, i)] -= m00 / Complex64::from(nf - 1.0);
                }
                for i in 0..3 {
                    for j in 0..3 {
                        assert!((split[(i, j)] - raw[(i, j)]).norm() < 1e-13);
                        let d = direct.two_body[mu][mup][(i, j)];
                        assert!((d - split[(i, j)]).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn one_body_inheritance_is_exact() {
        // <s_i^(n)> = (2/N) <J_i> for permutation-symmetric states, site by
        // site, including the cross block of a half-integer-J pair.
        let n = 7;
        let pair = coherent_pair(n);
        let report = kl_collective(&pair).unwrap();
        let states = [
            fullspace::embed_symmetric(&pair.zero_logical).unwrap(),
            fullspace::embed_symmetric(&pair.one_logical).unwrap(),
        ];
        for mu in 0..2 {
            for mup in 0..2 {
                let predicted = report.predicted_one_body(mu, mup);
                for (i, &ax) in AXES.iter().enumerate() {
                    for site in 0..n as usize {
                        let v =
                            states[mu].dotc(&fullspace::sigma_apply(ax, site, &states[mup]));
                        assert!((v - predicted[i]).norm() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn smallest_pair_stays_finite() {
        let report = kl_collective(&repetition_pair(2)).unwrap();
        let local = local_kl_from_collective(&report).unwrap();
        assert!(local.d_matrix.iter().all(|z| z.norm().is_finite()));
        assert_abs_diff_eq!(local.diagonal_subtraction, 1.0, epsilon = 1e-15);
        let direct = local_kl_direct(&repetition_pair(2)).unwrap();
        let predicted = local.predicted_two_body(0, 0);
        for i in 0..3 {
            for j in 0..3 {
                let d = direct.two_body[0][0][(i, j)];
                assert!((d - predicted[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn brute_force_rejects_large_n() {
        let err = local_kl_direct(&repetition_pair(13)).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit { .. }));
    }

    #[test]
    fn leakage_passes_for_binomial() {
        let report = leakage_kl_check(&build_spin_binomial(8).unwrap()).unwrap();
        assert!(report.completeness_error < 1e-14);
        assert!(report.site_spread < 1e-12);
        // Ladder products connect excitation numbers one apart while both
        // codewords live on a lattice of spacing two, so those residuals
        // vanish outright.
        assert!(report.residuals[2] < 1e-12);
        assert!(report.residuals[3] < 1e-12);
        assert!(report.pass, "max residual {}", report.max_residual);
    }

    #[test]
    fn leakage_flags_polarized_pair() {
        let report = leakage_kl_check(&repetition_pair(8)).unwrap();
        assert!(!report.pass);
        // The population operators split the codewords by a full unit.
        assert_abs_diff_eq!(report.max_residual, 0.5, epsilon = 1e-12);
        assert!(report.completeness_error < 1e-14);
    }
}
