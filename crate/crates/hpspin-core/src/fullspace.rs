//! Brute-force reference machinery on the full 2^N tensor space.
//!
//! Everything here is exact and exponentially sized; it exists to validate
//! the compressed collective representations and to compute truly local
//! matrix elements at small N. Site n is bit n of the basis index, and a set
//! bit marks an excited (spin-down) site, so the excitation number of a
//! basis state is its popcount.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::codes::SymmetricState;
use crate::error::{Error, Result};
use crate::linalg::binomial_exact;
use crate::su2::{irrep_table, Axis, IrrepLabel};

/// Caps chosen so a full state vector stays comfortably in memory.
pub const MAX_VECTOR_N: u32 = 16;
/// Density matrices cost 4^N; ten spins is a 16 MB matrix.
pub const MAX_DENSITY_N: u32 = 10;

pub fn check_vector_size(n_spins: u32) -> Result<()> {
    if n_spins > MAX_VECTOR_N {
        return Err(Error::ResourceLimit {
            what: "full-space vector",
            requested: n_spins as usize,
            limit: MAX_VECTOR_N as usize,
        });
    }
    Ok(())
}

pub fn check_density_size(n_spins: u32) -> Result<()> {
    if n_spins > MAX_DENSITY_N {
        return Err(Error::ResourceLimit {
            what: "full-space density matrix",
            requested: n_spins as usize,
            limit: MAX_DENSITY_N as usize,
        });
    }
    Ok(())
}

/// Expand a symmetric-subspace state over the tensor basis: each Dicke
/// component spreads uniformly over the bitstrings of its excitation number.
pub fn embed_symmetric(state: &SymmetricState) -> Result<DVector<Complex64>> {
    let n = state.n_spins;
    check_vector_size(n)?;
    let dim = 1usize << n;
    let mut out = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    let norms: Vec<f64> = (0..=n)
        .map(|k| (binomial_exact(n, k).unwrap() as f64).sqrt())
        .collect();
    for idx in 0..dim {
        let k = (idx as u64).count_ones() as usize;
        out[idx] = state.amps[k] / norms[k];
    }
    Ok(out)
}

/// Apply a single-site Pauli operator.
pub fn sigma_apply(axis: Axis, site: usize, v: &DVector<Complex64>) -> DVector<Complex64> {
    let dim = v.len();
    let bit = 1usize << site;
    let mut out = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    match axis {
        Axis::X => {
            for i in 0..dim {
                out[i] = v[i ^ bit];
            }
        }
        Axis::Y => {
            for i in 0..dim {
                // Raising 0 -> 1 carries +i, lowering 1 -> 0 carries -i.
                let f = if i & bit != 0 {
                    Complex64::new(0.0, 1.0)
                } else {
                    Complex64::new(0.0, -1.0)
                };
                out[i] = f * v[i ^ bit];
            }
        }
        Axis::Z => {
            for i in 0..dim {
                let s = if i & bit != 0 { -1.0 } else { 1.0 };
                out[i] = v[i] * s;
            }
        }
    }
    out
}

/// Collective operator J_axis = (1/2) sum_n sigma_axis^(n).
pub fn collective_apply(
    axis: Axis,
    n_spins: u32,
    v: &DVector<Complex64>,
) -> DVector<Complex64> {
    let dim = v.len();
    let mut out = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    match axis {
        Axis::X => {
            for site in 0..n_spins as usize {
                let bit = 1usize << site;
                for i in 0..dim {
                    out[i] += v[i ^ bit];
                }
            }
        }
        Axis::Y => {
            for site in 0..n_spins as usize {
                let bit = 1usize << site;
                for i in 0..dim {
                    let f = if i & bit != 0 {
                        Complex64::new(0.0, 1.0)
                    } else {
                        Complex64::new(0.0, -1.0)
                    };
                    out[i] += f * v[i ^ bit];
                }
            }
        }
        Axis::Z => {
            for i in 0..dim {
                let ones = (i as u64).count_ones() as f64;
                // (N - 2k) ups-minus-downs, halved below with the rest.
                out[i] = v[i] * (n_spins as f64 - 2.0 * ones);
            }
            return out * Complex64::from(0.5);
        }
    }
    out * Complex64::from(0.5)
}

/// J+ = sum_n |0><1| at site n (clears one excitation).
pub fn jplus_apply(n_spins: u32, v: &DVector<Complex64>) -> DVector<Complex64> {
    let dim = v.len();
    let mut out = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    for site in 0..n_spins as usize {
        let bit = 1usize << site;
        for i in 0..dim {
            if i & bit == 0 {
                out[i] += v[i | bit];
            }
        }
    }
    out
}

pub fn jminus_apply(n_spins: u32, v: &DVector<Complex64>) -> DVector<Complex64> {
    let dim = v.len();
    let mut out = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    for site in 0..n_spins as usize {
        let bit = 1usize << site;
        for i in 0..dim {
            if i & bit != 0 {
                out[i] += v[i ^ bit];
            }
        }
    }
    out
}

/// Total-spin Casimir J^2 = Jz^2 + (J+J- + J-J+)/2.
pub fn casimir_apply(n_spins: u32, v: &DVector<Complex64>) -> DVector<Complex64> {
    let jz = collective_apply(Axis::Z, n_spins, v);
    let jzz = collective_apply(Axis::Z, n_spins, &jz);
    let pm = jplus_apply(n_spins, &jminus_apply(n_spins, v));
    let mp = jminus_apply(n_spins, &jplus_apply(n_spins, v));
    jzz + (pm + mp) * Complex64::from(0.5)
}

/// sigma rho sigma at one site, for Hermitian single-site Paulis.
pub fn sigma_sandwich(axis: Axis, site: usize, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let dim = rho.nrows();
    let bit = 1usize << site;
    let mut out = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    match axis {
        Axis::X => {
            for i in 0..dim {
                for j in 0..dim {
                    out[(i, j)] = rho[(i ^ bit, j ^ bit)];
                }
            }
        }
        Axis::Y => {
            for i in 0..dim {
                let gi = if i & bit != 0 { 1.0 } else { -1.0 };
                for j in 0..dim {
                    let gj = if j & bit != 0 { 1.0 } else { -1.0 };
                    out[(i, j)] = rho[(i ^ bit, j ^ bit)] * (gi * gj);
                }
            }
        }
        Axis::Z => {
            for i in 0..dim {
                let si = if i & bit != 0 { -1.0 } else { 1.0 };
                for j in 0..dim {
                    let sj = if j & bit != 0 { -1.0 } else { 1.0 };
                    out[(i, j)] = rho[(i, j)] * (si * sj);
                }
            }
        }
    }
    out
}

/// The jump part of the depolarizing generator, per unit rate:
/// S(rho) = (1/4) sum_{n,i} sigma_i^(n) rho sigma_i^(n).
pub fn jump_map_full(n_spins: u32, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let dim = rho.nrows();
    let mut out = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for site in 0..n_spins as usize {
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            out += sigma_sandwich(axis, site, rho);
        }
    }
    out * Complex64::from(0.25)
}

/// Exact action of the symmetric depolarizing semigroup for time gamma*t.
///
/// The per-site generators commute, so the channel factorizes into one
/// single-site depolarizing map per spin with retention e^(-gamma t).
pub fn depolarize_density(n_spins: u32, rho: &DMatrix<Complex64>, gamma_t: f64) -> DMatrix<Complex64> {
    let p = 1.0 - (-gamma_t).exp();
    let mut out = rho.clone();
    for site in 0..n_spins as usize {
        out = site_depolarize(site, &out, p);
    }
    out
}

/// One-site depolarizing channel rho -> (1-p) rho + p (I/2 tensor tr_site).
pub fn site_depolarize(site: usize, rho: &DMatrix<Complex64>, p: f64) -> DMatrix<Complex64> {
    let dim = rho.nrows();
    let bit = 1usize << site;
    let mut out = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for i in 0..dim {
        for j in 0..dim {
            let keep = rho[(i, j)] * (1.0 - p);
            out[(i, j)] = keep;
            if (i & bit) == (j & bit) {
                let tr = rho[(i & !bit, j & !bit)] + rho[(i | bit, j | bit)];
                out[(i, j)] += tr * (0.5 * p);
            }
        }
    }
    out
}

/// Casimir-interpolation projector onto the spin-J eigenspace, applied to a
/// vector: P_J = prod_{J' != J} (J^2 - c') / (c - c').
pub fn casimir_project(n_spins: u32, twice_j: u32, v: &DVector<Complex64>) -> DVector<Complex64> {
    let j = twice_j as f64 / 2.0;
    let c = j * (j + 1.0);
    let mut out = v.clone();
    for label in irrep_table(n_spins) {
        if label.twice_j == twice_j {
            continue;
        }
        let jp = label.j();
        let cp = jp * (jp + 1.0);
        out = (casimir_apply(n_spins, &out) - &out * Complex64::from(cp))
            * Complex64::from(1.0 / (c - cp));
    }
    out
}

/// Multiplicity-summed irrep blocks of a full-space density matrix:
/// B_J(M, M') = sum_lambda <J M lambda| rho |J M' lambda>, indexed with M
/// descending from J. The physical trace equals sum_J tr B_J.
///
/// Works from the highest-weight subspace of each irrep: Casimir-project the
/// excitation-number basis states the top weights live in, ladder them down,
/// and take matrix elements. No explicit multiplicity basis is ever built.
pub fn irrep_blocks(
    n_spins: u32,
    rho: &DMatrix<Complex64>,
) -> Result<Vec<(IrrepLabel, DMatrix<Complex64>)>> {
    check_density_size(n_spins)?;
    let dim = 1usize << n_spins;
    let mut out = Vec::new();
    for label in irrep_table(n_spins) {
        let twice_j = label.twice_j;
        let j = label.j();
        let block_dim = label.dim();
        let k_top = ((n_spins - twice_j) / 2) as usize;
        // Ladder normalization c_M = prod sqrt((J+m)(J-m+1)), m from M+1 to J.
        let mut c = vec![1.0f64; block_dim];
        for a in 1..block_dim {
            let m = j - a as f64; // M after a lowering steps
            c[a] = c[a - 1] * ((j + m + 1.0) * (j - m)).sqrt();
        }
        let mut block = DMatrix::from_element(block_dim, block_dim, Complex64::new(0.0, 0.0));
        // Q_J = sum_b u_b u_b^dag over the popcount-k_top basis, u_b = P_J e_b.
        for idx in 0..dim {
            if (idx as u64).count_ones() as usize != k_top {
                continue;
            }
            let mut e = DVector::from_element(dim, Complex64::new(0.0, 0.0));
            e[idx] = Complex64::from(1.0);
            let u = casimir_project(n_spins, twice_j, &e);
            if u.norm() < 1e-14 {
                continue;
            }
            // Ladder family w_a = J_-^a u.
            let mut w = Vec::with_capacity(block_dim);
            w.push(u);
            for a in 1..block_dim {
                let next = jminus_apply(n_spins, &w[a - 1]);
                w.push(next);
            }
            let rw: Vec<DVector<Complex64>> = w.iter().map(|x| rho * x).collect();
            for a in 0..block_dim {
                for ap in 0..block_dim {
                    block[(a, ap)] += w[a].dotc(&rw[ap]) / Complex64::from(c[a] * c[ap]);
                }
            }
        }
        out.push((label, block));
    }
    Ok(out)
}

/// Distribution of collective J_axis outcomes M = N/2, ..., -N/2 across all
/// irreps, via the characteristic function on the tensor space. Exact: the
/// M grid has N+1 points, so an (N+1)-point Fourier inversion recovers it.
pub fn full_distribution(
    n_spins: u32,
    rho: &DMatrix<Complex64>,
    axis: Axis,
) -> Vec<f64> {
    let points = n_spins as usize + 1;
    let mut chi = vec![Complex64::new(0.0, 0.0); points];
    for (k, c) in chi.iter_mut().enumerate() {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / points as f64;
        *c = product_rotation_trace(n_spins, rho, axis, phi);
    }
    (0..points)
        .map(|m_idx| {
            let m = n_spins as f64 / 2.0 - m_idx as f64;
            let mut p = Complex64::new(0.0, 0.0);
            for (k, c) in chi.iter().enumerate() {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / points as f64;
                p += c * Complex64::new(0.0, -phi * m).exp();
            }
            p.re / points as f64
        })
        .collect()
}

/// tr[rho exp(i phi J_axis)] using the product structure
/// exp(i phi J_axis) = tensor_n exp(i phi sigma_axis / 2).
fn product_rotation_trace(
    n_spins: u32,
    rho: &DMatrix<Complex64>,
    axis: Axis,
    phi: f64,
) -> Complex64 {
    let (c, s) = ((phi / 2.0).cos(), (phi / 2.0).sin());
    // exp(i phi sigma/2) = cos(phi/2) I + i sin(phi/2) sigma.
    let u: [[Complex64; 2]; 2] = match axis {
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
    };
    let dim = rho.nrows();
    // tr(rho U) with U = tensor u: accumulate sum_i <i| rho U |i> by
    // expanding U's matrix elements site by site.
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..dim {
        for j in 0..dim {
            // U[j, i] = prod over sites of u[bit_j, bit_i].
            let mut amp = Complex64::from(1.0);
            for site in 0..n_spins as usize {
                let bj = (j >> site) & 1;
                let bi = (i >> site) & 1;
                amp *= u[bj][bi];
                if amp.norm_sqr() == 0.0 {
                    break;
                }
            }
            if amp.norm_sqr() > 0.0 {
                total += rho[(i, j)] * amp;
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{build_spin_binomial, ghz_state};
    use crate::linalg::max_abs;
    use crate::su2::spin_operators;

    fn outer(v: &DVector<Complex64>) -> DMatrix<Complex64> {
        v * v.adjoint()
    }

    #[test]
    fn embedding_preserves_norm_and_moments() {
        let pair = build_spin_binomial(6).unwrap();
        let full = embed_symmetric(&pair.zero_logical).unwrap();
        assert!((full.norm() - 1.0).abs() < 1e-12);
        let jz = collective_apply(Axis::Z, 6, &full);
        let expect = full.dotc(&jz).re;
        assert!((expect - pair.zero_logical.jz_expectation()).abs() < 1e-12);
        // Dicke state spreads uniformly.
        let dicke = SymmetricState::dicke(4, 2).unwrap();
        let full = embed_symmetric(&dicke).unwrap();
        let mut support = 0;
        for idx in 0..16usize {
            if (idx as u64).count_ones() == 2 {
                assert!((full[idx].re - 1.0 / 6.0_f64.sqrt()).abs() < 1e-15);
                support += 1;
            } else {
                assert_eq!(full[idx], Complex64::new(0.0, 0.0));
            }
        }
        assert_eq!(support, 6);
        assert!(embed_symmetric(&SymmetricState::polarized(20)).is_err());
    }

    #[test]
    fn collective_operators_match_carrier_matrices() {
        let n = 5u32;
        let ops = spin_operators(n);
        for k in 0..=n as usize {
            let v = embed_symmetric(&SymmetricState::dicke(n, k).unwrap()).unwrap();
            for axis in [Axis::X, Axis::Y, Axis::Z] {
                let moved = collective_apply(axis, n, &v);
                for kp in 0..=n as usize {
                    let w = embed_symmetric(&SymmetricState::dicke(n, kp).unwrap()).unwrap();
                    let got = w.dotc(&moved);
                    let want = axis.operator(&ops)[(kp, k)];
                    assert!((got - want).norm() < 1e-12, "axis {axis:?} k={k} kp={kp}");
                }
            }
            // Casimir on the symmetric subspace is J(J+1).
            let cas = casimir_apply(n, &v);
            let j = n as f64 / 2.0;
            assert!((cas - &v * Complex64::from(j * (j + 1.0))).norm() < 1e-12);
        }
    }

    #[test]
    fn ladder_operators_are_adjoint_pair() {
        let n = 4u32;
        let dim = 1usize << n;
        let mut rng_state = 0x1234_5678_u64;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (rng_state >> 33) as f64 / (1u64 << 31) as f64 - 1.0
        };
        let a = DVector::from_fn(dim, |_, _| Complex64::new(next(), next()));
        let b = DVector::from_fn(dim, |_, _| Complex64::new(next(), next()));
        let lhs = a.dotc(&jplus_apply(n, &b));
        let rhs = jminus_apply(n, &a).dotc(&b);
        assert!((lhs - rhs).norm() < 1e-12);
        // J+- = Jx +- i Jy on arbitrary vectors.
        let jx = collective_apply(Axis::X, n, &b);
        let jy = collective_apply(Axis::Y, n, &b);
        let jp = jplus_apply(n, &b);
        assert!((&jx + &jy * Complex64::new(0.0, 1.0) - jp).norm() < 1e-12);
    }

    #[test]
    fn depolarizing_channel_decays_pauli_components() {
        // Single site: rho -> lambda rho + (1 - lambda) I/2.
        let plus = DVector::from_vec(vec![
            Complex64::from(std::f64::consts::FRAC_1_SQRT_2),
            Complex64::from(std::f64::consts::FRAC_1_SQRT_2),
        ]);
        let rho = outer(&plus);
        let gamma_t = 0.3;
        let evolved = depolarize_density(1, &rho, gamma_t);
        let lam = (-0.3f64).exp();
        assert!((evolved[(0, 1)].re - 0.5 * lam).abs() < 1e-14);
        assert!((evolved[(0, 0)].re - 0.5).abs() < 1e-14);
        // Trace preserved on a three-site entangled state.
        let ghz = embed_symmetric(&ghz_state(3)).unwrap();
        let rho = outer(&ghz);
        let evolved = depolarize_density(3, &rho, 0.17);
        let tr: Complex64 = (0..8).map(|i| evolved[(i, i)]).sum();
        assert!((tr.re - 1.0).abs() < 1e-13);
        assert!(tr.im.abs() < 1e-15);
        // <sigma_x^(n)> on every site decays by e^(-gamma t).
        let mut v = DVector::from_element(8, Complex64::new(0.0, 0.0));
        for i in 0..8usize {
            v[i] = Complex64::from(1.0 / 8.0f64.sqrt());
        }
        let rho = outer(&v);
        let evolved = depolarize_density(3, &rho, 0.4);
        for site in 0..3 {
            let mut val = Complex64::new(0.0, 0.0);
            for i in 0..8usize {
                for j in 0..8usize {
                    // <sigma_x> = tr(sigma_x rho): sigma_x[j, i] nonzero for j = i^bit.
                    if j == i ^ (1 << site) {
                        val += evolved[(i, j)];
                    }
                }
            }
            assert!((val.re - (-0.4f64).exp()).abs() < 1e-12, "site {site}");
        }
    }

    #[test]
    fn irrep_blocks_recover_embedded_symmetric_states() {
        let pair = build_spin_binomial(6).unwrap();
        let full = embed_symmetric(&pair.zero_logical).unwrap();
        let rho = outer(&full);
        let blocks = irrep_blocks(6, &rho).unwrap();
        let sym = &pair.zero_logical.amps;
        for (label, block) in &blocks {
            if label.twice_j == 6 {
                let expect = sym * sym.adjoint();
                assert!(max_abs(&(block - expect)) < 1e-10);
            } else {
                assert!(max_abs(block) < 1e-10, "leak into 2J={}", label.twice_j);
            }
        }
        // After noise: trace splits but still sums to one, blocks Hermitian.
        let evolved = depolarize_density(6, &rho, 0.2);
        let blocks = irrep_blocks(6, &evolved).unwrap();
        let mut total = 0.0;
        for (_, block) in &blocks {
            total += block.diagonal().iter().map(|z| z.re).sum::<f64>();
            assert!(max_abs(&(block.adjoint() - block)) < 1e-10);
        }
        assert!((total - 1.0).abs() < 1e-9, "trace {total}");
    }

    #[test]
    fn distribution_matches_maximally_mixed_binomial_profile() {
        let n = 4u32;
        let dim = 1usize << n;
        let rho = DMatrix::<Complex64>::identity(dim, dim) * Complex64::from(1.0 / dim as f64);
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let p = full_distribution(n, &rho, axis);
            let expect = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
            for (got, want) in p.iter().zip(expect) {
                assert!((got - want).abs() < 1e-12, "axis {axis:?}: {p:?}");
            }
        }
        // GHZ along z: half fully up, half fully down.
        let ghz = embed_symmetric(&ghz_state(4)).unwrap();
        let p = full_distribution(4, &outer(&ghz), Axis::Z);
        assert!((p[0] - 0.5).abs() < 1e-12);
        assert!((p[4] - 0.5).abs() < 1e-12);
        assert!(p[1].abs() + p[2].abs() + p[3].abs() < 1e-12);
    }
}
