//! Matrix-product simulation of site-dependent depolarizing noise.
//!
//! Symmetric-subspace states have exact matrix-product form with small bond
//! dimension, and a depolarizing channel that acts independently per site
//! never increases it. The density operator is kept factored as the pure
//! state plus one accumulated depolarizing weight per site; every observable
//! used here is a product-operator sandwich, so the channel enters only
//! through its adjoint acting on 2x2 site operators and the doubled tensors
//! are never formed. Collective marginals come from the characteristic
//! function on an (N+1)-point angle grid, which inverts exactly because the
//! spectrum of any J_axis lives on N+1 unit-spaced points.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::codes::SymmetricState;
use crate::error::{Error, Result};
use crate::linalg::{binomial_exact, thin_svd};
use crate::su2::Axis;

/// Bond cap = factor * (N+1). Symmetric states stay well under it; the
/// check exists to fail loudly if a future channel breaks the invariant.
pub const BOND_CAP_FACTOR: usize = 4;

/// Relative Schmidt-value threshold for dropping numerically null bond
/// directions during construction. This is rank revelation, not truncation:
/// everything below it is rounding noise of an exact zero.
const SCHMIDT_EPS: f64 = 1e-13;

/// Per-site depolarizing probabilities, sites 1..=N at indices 0..N-1.
#[derive(Debug, Clone)]
pub struct SiteNoiseProfile {
    pub n_spins: u32,
    pub probabilities: Vec<f64>,
}

/// p_n = p0 exp(-zeta |n - N/2|) with the center at floor(N/2). Rates
/// beyond `zeta = 1e6` are clamped; the profile is already a single-site
/// spike long before that.
pub fn noise_profile(p0: f64, zeta: f64, n_spins: u32) -> Result<SiteNoiseProfile> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::InvalidInput(format!(
            "depolarizing probability {} outside [0, 1]",
            p0
        )));
    }
    if zeta < 0.0 || !zeta.is_finite() {
        return Err(Error::InvalidInput(format!(
            "profile decay rate {} must be a finite nonnegative number",
            zeta
        )));
    }
    let zeta = zeta.min(1e6);
    let center = (n_spins / 2) as f64;
    let probabilities = (1..=n_spins)
        .map(|n| p0 * (-zeta * (n as f64 - center).abs()).exp())
        .collect();
    Ok(SiteNoiseProfile {
        n_spins,
        probabilities,
    })
}

/// A symmetric-subspace density operator in factored matrix-product form:
/// the codeword as an MPS (tensors[site][s] maps left bond to right bond)
/// and the per-site depolarizing weight applied to it.
#[derive(Debug, Clone)]
pub struct MpoState {
    pub n_spins: u32,
    tensors: Vec<[DMatrix<Complex64>; 2]>,
    site_p: Vec<f64>,
}

fn bond_cap(n_spins: u32) -> usize {
    BOND_CAP_FACTOR * (n_spins as usize + 1)
}

/// exp(i phi sigma_axis / 2) in the tensor-space basis (clear bit = spin up).
fn half_rotation(axis: Axis, phi: f64) -> [[Complex64; 2]; 2] {
    let (c, s) = ((phi / 2.0).cos(), (phi / 2.0).sin());
    match axis {
        Axis::X => [
            [Complex64::from(c), Complex64::new(0.0, s)],
            [Complex64::new(0.0, s), Complex64::from(c)],
        ],
        Axis::Y => [
            [Complex64::from(c), Complex64::from(s)],
            [Complex64::from(-s), Complex64::from(c)],
        ],
        Axis::Z => [
            [Complex64::new(c, s), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(c, -s)],
        ],
    }
}

/// Heisenberg picture of one site's depolarizing map. The channel is
/// self-adjoint, so this is the same mixing toward the identity.
fn dress(u: [[Complex64; 2]; 2], p: f64) -> [[Complex64; 2]; 2] {
    let keep = Complex64::from(1.0 - p);
    let mix = (u[0][0] + u[1][1]) * Complex64::from(0.5 * p);
    [
        [u[0][0] * keep + mix, u[0][1] * keep],
        [u[1][0] * keep, u[1][1] * keep + mix],
    ]
}

impl MpoState {
    pub fn site_probability(&self, site: usize) -> f64 {
        self.site_p[site]
    }

    /// Interior link dimensions, one per bond between adjacent sites.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors
            .iter()
            .take(self.tensors.len().saturating_sub(1))
            .map(|a| a[0].ncols())
            .collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    fn check_cap(&self) -> Result<()> {
        let max = self.max_bond();
        if max > bond_cap(self.n_spins) {
            return Err(Error::ResourceLimit {
                what: "matrix-product bond dimension",
                requested: max,
                limit: bond_cap(self.n_spins),
            });
        }
        Ok(())
    }

    /// tr[rho prod_n O_n] for per-site 2x2 operators, after pushing the
    /// channel onto them: <psi| prod E_n^dag(O_n) |psi>.
    fn sandwich<F>(&self, op: F) -> Complex64
    where
        F: Fn(usize) -> [[Complex64; 2]; 2],
    {
        let mut b = DMatrix::from_element(1, 1, Complex64::from(1.0));
        for (site, a) in self.tensors.iter().enumerate() {
            let u = dress(op(site), self.site_p[site]);
            let width = a[0].ncols();
            let mut nb = DMatrix::from_element(width, width, Complex64::new(0.0, 0.0));
            for (sk, ak) in a.iter().enumerate() {
                let bak = &b * ak;
                for (sb, ab) in a.iter().enumerate() {
                    let w = u[sb][sk];
                    if w.norm_sqr() == 0.0 {
                        continue;
                    }
                    nb += ab.adjoint() * &bak * w;
                }
            }
            b = nb;
        }
        b[(0, 0)]
    }

    pub fn trace(&self) -> f64 {
        let id = [
            [Complex64::from(1.0), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::from(1.0)],
        ];
        self.sandwich(|_| id).re
    }

    /// Reduced density matrix of one site.
    pub fn local_reduction(&self, site: usize) -> Matrix2<Complex64> {
        let id = [
            [Complex64::from(1.0), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::from(1.0)],
        ];
        Matrix2::from_fn(|s, sp| {
            // Entry (s, s') of the reduction is tr[rho |s'><s| at the site].
            let mut probe = [[Complex64::new(0.0, 0.0); 2]; 2];
            probe[sp][s] = Complex64::from(1.0);
            self.sandwich(|n| if n == site { probe } else { id })
        })
    }
}

/// Exact matrix-product form of a symmetric state.
///
/// Built as a counting register over excitation number, trimmed to the
/// reachable range, then compressed to minimal rank by two canonicalization
/// sweeps. A product state comes out at bond 1 and a two-branch state such
/// as a polarized superposition at bond 2.
pub fn symmetric_state_to_mpo(state: &SymmetricState) -> Result<MpoState> {
    let n = state.n_spins as usize;
    if n == 0 {
        return Err(Error::InvalidInput("no spins to represent".into()));
    }
    let kmin = state
        .amps
        .iter()
        .position(|z| z.norm_sqr() > 0.0)
        .ok_or_else(|| Error::InvalidInput("state has no support".into()))?;
    let kmax = state
        .amps
        .iter()
        .rposition(|z| z.norm_sqr() > 0.0)
        .unwrap();
    // Dicke components spread uniformly over bitstrings, so the path weight
    // is amps[k]/sqrt(C(N,k)), attached at the right boundary.
    let weights: Vec<Complex64> = (0..=n)
        .map(|k| {
            state.amps[k]
                / Complex64::from((binomial_exact(n as u32, k as u32).unwrap() as f64).sqrt())
        })
        .collect();
    // Count range at each cut: reachable from the left, completable to the
    // support on the right.
    let lo = |c: usize| kmin.saturating_sub(n - c);
    let hi = |c: usize| c.min(kmax);
    let mut tensors: Vec<[DMatrix<Complex64>; 2]> = Vec::with_capacity(n);
    for site in 0..n {
        let (ll, lh) = (lo(site), hi(site));
        let last = site + 1 == n;
        let (rl, rh) = if last { (0, 0) } else { (lo(site + 1), hi(site + 1)) };
        let mut pair = [
            DMatrix::from_element(lh - ll + 1, rh - rl + 1, Complex64::new(0.0, 0.0)),
            DMatrix::from_element(lh - ll + 1, rh - rl + 1, Complex64::new(0.0, 0.0)),
        ];
        for (s, a) in pair.iter_mut().enumerate() {
            for j in ll..=lh {
                let k = j + s;
                if last {
                    if (kmin..=kmax).contains(&k) {
                        a[(j - ll, 0)] = weights[k];
                    }
                } else if (rl..=rh).contains(&k) {
                    a[(j - ll, k - rl)] = Complex64::from(1.0);
                }
            }
        }
        tensors.push(pair);
    }
    compress(&mut tensors);
    let out = MpoState {
        n_spins: state.n_spins,
        tensors,
        site_p: vec![0.0; n],
    };
    out.check_cap()?;
    Ok(out)
}

/// Two exact canonicalization sweeps that drop numerically null bond
/// directions, leaving minimal bond dimensions.
fn compress(tensors: &mut [ [DMatrix<Complex64>; 2] ]) {
    let n = tensors.len();
    for i in 0..n.saturating_sub(1) {
        let (chi_l, chi_r) = (tensors[i][0].nrows(), tensors[i][0].ncols());
        let mut m = DMatrix::from_element(2 * chi_l, chi_r, Complex64::new(0.0, 0.0));
        m.view_mut((0, 0), (chi_l, chi_r)).copy_from(&tensors[i][0]);
        m.view_mut((chi_l, 0), (chi_l, chi_r))
            .copy_from(&tensors[i][1]);
        let (u, sigma, v_t) = thin_svd(&m);
        let rank = effective_rank(&sigma);
        tensors[i] = [
            u.view((0, 0), (chi_l, rank)).clone_owned(),
            u.view((chi_l, 0), (chi_l, rank)).clone_owned(),
        ];
        let mut carry = v_t.rows(0, rank).clone_owned();
        for r in 0..rank {
            let s = Complex64::from(sigma[r]);
            for c in 0..carry.ncols() {
                carry[(r, c)] *= s;
            }
        }
        let next0 = &carry * &tensors[i + 1][0];
        let next1 = &carry * &tensors[i + 1][1];
        tensors[i + 1] = [next0, next1];
    }
    for i in (1..n).rev() {
        let (chi_l, chi_r) = (tensors[i][0].nrows(), tensors[i][0].ncols());
        let mut m = DMatrix::from_element(chi_l, 2 * chi_r, Complex64::new(0.0, 0.0));
        m.view_mut((0, 0), (chi_l, chi_r)).copy_from(&tensors[i][0]);
        m.view_mut((0, chi_r), (chi_l, chi_r))
            .copy_from(&tensors[i][1]);
        let (u, sigma, v_t) = thin_svd(&m);
        let rank = effective_rank(&sigma);
        tensors[i] = [
            v_t.view((0, 0), (rank, chi_r)).clone_owned(),
            v_t.view((0, chi_r), (rank, chi_r)).clone_owned(),
        ];
        let mut carry = u.columns(0, rank).clone_owned();
        for r in 0..rank {
            let s = Complex64::from(sigma[r]);
            for c in 0..carry.nrows() {
                carry[(c, r)] *= s;
            }
        }
        let prev0 = &tensors[i - 1][0] * &carry;
        let prev1 = &tensors[i - 1][1] * &carry;
        tensors[i - 1] = [prev0, prev1];
    }
}

fn effective_rank(singular: &[f64]) -> usize {
    let top = singular.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 1;
    }
    singular
        .iter()
        .filter(|&&s| s > SCHMIDT_EPS * top)
        .count()
        .max(1)
}

/// One application of the site-dependent depolarizing channel. Bond
/// dimensions are untouched; the site weights compose as
/// 1 - (1-p)(1-p') because both events mix toward the same fixed point.
pub fn apply_site_depolarizing(
    state: &MpoState,
    profile: &SiteNoiseProfile,
) -> Result<MpoState> {
    if profile.n_spins != state.n_spins || profile.probabilities.len() != state.site_p.len() {
        return Err(Error::InvalidInput(format!(
            "profile over {} spins applied to a state over {}",
            profile.n_spins, state.n_spins
        )));
    }
    for &p in &profile.probabilities {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!(
                "site probability {} outside [0, 1]",
                p
            )));
        }
    }
    let site_p = state
        .site_p
        .iter()
        .zip(&profile.probabilities)
        .map(|(&old, &new)| 1.0 - (1.0 - old) * (1.0 - new))
        .collect();
    let out = MpoState {
        n_spins: state.n_spins,
        tensors: state.tensors.clone(),
        site_p,
    };
    out.check_cap()?;
    Ok(out)
}

/// Distribution of J_axis outcomes, indexed so entry m corresponds to
/// M = N/2 - m. Exact: the characteristic function is sampled on the N+1
/// angles that make the Fourier inversion of a unit-spaced spectrum exact,
/// and each sample is one product-operator contraction.
pub fn collective_marginal(state: &MpoState, axis: Axis) -> Vec<f64> {
    let n = state.n_spins as usize;
    let points = n + 1;
    let chi: Vec<Complex64> = (0..points)
        .into_par_iter()
        .map(|k| {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / points as f64;
            let u = half_rotation(axis, phi);
            state.sandwich(|_| u)
        })
        .collect();
    (0..points)
        .map(|m_idx| {
            let m = n as f64 / 2.0 - m_idx as f64;
            let mut p = Complex64::new(0.0, 0.0);
            for (k, c) in chi.iter().enumerate() {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / points as f64;
                p += c * Complex64::new(0.0, -phi * m).exp();
            }
            p.re / points as f64
        })
        .collect()
}
