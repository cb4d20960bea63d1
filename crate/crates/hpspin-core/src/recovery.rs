//! Leakage recovery: the cross-irrep entangling gate, the idealized refill
//! of the symmetric subspace, and brute-force extraction of the effective
//! Kraus operators of the two-ensemble swap gadget.
//!
//! The gadget machinery works in the full 2^(2N) tensor space of a data and
//! an ancilla ensemble, with unitaries applied through Krylov exponential
//! actions; nothing here materializes a 2^(2N) matrix. The ancilla only ever
//! sees collective operators, so its support stays inside the symmetric
//! subspace and every output is resolved over the N+1 Dicke components.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::codes::CodePair;
use crate::collective::{evolve_with, CollectiveDensity, EvolveOptions, NoiseSchedule};
use crate::error::{Error, Result};
use crate::fullspace::{embed_symmetric, sigma_apply};
use crate::linalg::{eigh, exp_i_hermitian, exp_i_hermitian_action, kron, lstsq};
use crate::su2::{spin_operators, Axis, IrrepLabel};

/// Largest ensemble size for the brute-force gadget (2^(2N) = 65 536).
pub const GADGET_MAX_N: u32 = 8;

/// Cap on the product carrier dimension of the cross-irrep gate.
pub const PRODUCT_DIM_CAP: usize = 40_000;

/// Above this product dimension the gate is action-only; the dense matrix
/// would stop being desk-scale long before the action does.
pub const DENSE_DIM_CAP: usize = 4_096;

/// Kraus basis keeps eigendirections up to cumulative weight 1 - this.
const BASIS_WEIGHT_CUT: f64 = 1e-10;

const KRYLOV_TOL: f64 = 1e-12;

/// The entangling gate exp[-i (J1 J2)^(-1/2) Jx (x) Jy] across two irrep
/// carriers, materialized lazily.
pub struct CrossIrrepCnot {
    pub twice_j1: u32,
    pub twice_j2: u32,
    jx_left: DMatrix<Complex64>,
    jy_right: DMatrix<Complex64>,
}

pub fn cross_irrep_cnot(twice_j1: u32, twice_j2: u32) -> Result<CrossIrrepCnot> {
    if twice_j1 == 0 || twice_j2 == 0 {
        return Err(Error::InvalidInput(
            "cross-irrep gate needs both spins at least 1/2".into(),
        ));
    }
    let dim = (twice_j1 as usize + 1) * (twice_j2 as usize + 1);
    if dim > PRODUCT_DIM_CAP {
        return Err(Error::ResourceLimit {
            what: "cross-irrep product dimension",
            requested: dim,
            limit: PRODUCT_DIM_CAP,
        });
    }
    Ok(CrossIrrepCnot {
        twice_j1,
        twice_j2,
        jx_left: spin_operators(twice_j1).jx,
        jy_right: spin_operators(twice_j2).jy,
    })
}

impl CrossIrrepCnot {
    /// (J1 J2)^(-1/2); equals 2/N when both spins sit at N/2.
    pub fn coupling(&self) -> f64 {
        let j1 = self.twice_j1 as f64 / 2.0;
        let j2 = self.twice_j2 as f64 / 2.0;
        1.0 / (j1 * j2).sqrt()
    }

    pub fn dim(&self) -> usize {
        self.jx_left.nrows() * self.jy_right.nrows()
    }

    /// Generator action (Jx (x) Jy) v with v indexed as i1 * dim2 + i2.
    fn generator_apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let (d1, d2) = (self.jx_left.nrows(), self.jy_right.nrows());
        let m = DMatrix::from_fn(d1, d2, |r, c| v[r * d2 + c]);
        let w = &self.jx_left * m * self.jy_right.transpose();
        DVector::from_fn(d1 * d2, |i, _| w[(i / d2, i % d2)])
    }

    /// U |v> through a Krylov exponential action.
    pub fn apply(&self, v: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        self.apply_with_coupling(self.coupling(), v)
    }

    /// Action with the coupling overridden, e.g. the gate tuned to the top
    /// irrep but applied in lower carriers.
    pub fn apply_with_coupling(
        &self,
        coupling: f64,
        v: &DVector<Complex64>,
    ) -> Result<DVector<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "vector length {} does not match carrier dimension {}",
                v.len(),
                self.dim()
            )));
        }
        exp_i_hermitian_action(&|x| self.generator_apply(x), v, -coupling, KRYLOV_TOL)
    }

    /// Dense unitary, available while the carrier stays small.
    pub fn dense(&self) -> Result<DMatrix<Complex64>> {
        let dim = self.dim();
        if dim > DENSE_DIM_CAP {
            return Err(Error::ResourceLimit {
                what: "dense cross-irrep unitary dimension",
                requested: dim,
                limit: DENSE_DIM_CAP,
            });
        }
        let gen = kron(&self.jx_left, &self.jy_right);
        Ok(exp_i_hermitian(&gen, -self.coupling()))
    }
}

/// What the refill moved, per source irrep.
#[derive(Debug, Clone)]
pub struct MflerReport {
    pub n_spins: u32,
    /// Population taken out of each irrep below the top one.
    pub transferred: Vec<(IrrepLabel, f64)>,
    pub total_moved: f64,
}

/// Idealized recovery: every block with J < N/2 is embedded into the
/// symmetric subspace by aligning highest-weight states (M = J lands on
/// M = N/2) and all blocks are summed. The embedding is an isometry per
/// block, so trace and positivity survive exactly.
pub fn idealized_mfler(rho: &CollectiveDensity) -> Result<(CollectiveDensity, MflerReport)> {
    let n = rho.n_spins;
    let top = n as usize + 1;
    let mut merged = DMatrix::from_element(top, top, Complex64::new(0.0, 0.0));
    let mut transferred = Vec::new();
    let mut total_moved = 0.0;
    for (&twice_j, block) in &rho.blocks {
        if twice_j > n {
            return Err(Error::InvalidInput(format!(
                "block with 2J = {twice_j} cannot come from {n} spins"
            )));
        }
        let d = twice_j as usize + 1;
        for c in 0..d {
            for r in 0..d {
                merged[(r, c)] += block[(r, c)];
            }
        }
        if twice_j < n {
            let moved = block.trace().re;
            transferred.push((IrrepLabel { n_spins: n, twice_j }, moved));
            total_moved += moved;
        }
    }
    let mut out = CollectiveDensity::new(n);
    out.blocks.insert(n, merged);
    let report = MflerReport {
        n_spins: n,
        transferred,
        total_moved,
    };
    Ok((out, report))
}

/// One row of the recovery comparison at a given noise strength.
#[derive(Debug, Clone, Copy)]
pub struct FidelityRow {
    pub gamma_t: f64,
    pub raw: f64,
    pub recovered: f64,
}

/// Fidelity with the initial |0_L> after symmetric local depolarizing noise,
/// with and without the idealized refill.
pub fn recovery_fidelity_curve(code: &CodePair, gamma_t_grid: &[f64]) -> Result<Vec<FidelityRow>> {
    recovery_fidelity_curve_with(code, gamma_t_grid, &EvolveOptions::default())
}

pub fn recovery_fidelity_curve_with(
    code: &CodePair,
    gamma_t_grid: &[f64],
    opts: &EvolveOptions,
) -> Result<Vec<FidelityRow>> {
    let psi = &code.zero_logical;
    let rho0 = crate::collective::embed_symmetric(psi);
    let rows: Result<Vec<FidelityRow>> = gamma_t_grid
        .par_iter()
        .map(|&gamma_t| {
            let schedule = NoiseSchedule::new(1.0, gamma_t)?;
            let evolved = evolve_with(&rho0, &schedule, opts)?;
            let raw = block_fidelity(&evolved, psi.amps.as_slice());
            let (refilled, _) = idealized_mfler(&evolved)?;
            let recovered = block_fidelity(&refilled, psi.amps.as_slice());
            Ok(FidelityRow {
                gamma_t,
                raw,
                recovered,
            })
        })
        .collect();
    rows
}

/// <psi| rho^(N/2) |psi> for a symmetric-subspace bra over Dicke components.
fn block_fidelity(rho: &CollectiveDensity, amps: &[Complex64]) -> f64 {
    let Some(top) = rho.block(rho.n_spins) else {
        return 0.0;
    };
    let v = DVector::from_column_slice(amps);
    (v.adjoint() * top * v)[(0, 0)].re
}

/// Effective Kraus family of the swap gadget for one single-site Pauli error
/// on the data ensemble, expressed over the symmetric subspace.
pub struct KrausSet {
    pub n_spins: u32,
    pub axis: Axis,
    /// K_m, each (N+1)x(N+1): data-symmetric input index, ancilla output.
    pub operators: Vec<DMatrix<Complex64>>,
    /// Weight of the retained basis direction behind each operator.
    pub weights: Vec<f64>,
    /// eta_m^i = <m| sigma_i |+_L> for i = x, y, z.
    pub eta: Vec<[Complex64; 3]>,
    /// Per-operator distance to span{I, Jx, Jy, Jz} on code-space inputs.
    /// The fitted coefficients are not exposed: on a two-dimensional input
    /// space the four columns are nearly dependent (Jz acts almost like a
    /// multiple of the identity there), so only the residual is meaningful.
    pub span_residuals: Vec<f64>,
    /// max |(sum_m K^dag K) - I| over the retained family.
    pub completeness_error: f64,
}

impl KrausSet {
    pub fn max_span_residual(&self) -> f64 {
        self.span_residuals.iter().cloned().fold(0.0, f64::max)
    }
}

/// Collective operator on one half of a doubled register.
fn half_collective(
    axis: Axis,
    first_site: usize,
    n_sites: usize,
    v: &DVector<Complex64>,
) -> DVector<Complex64> {
    let mut out = DVector::from_element(v.len(), Complex64::new(0.0, 0.0));
    for site in first_site..first_site + n_sites {
        out += sigma_apply(axis, site, v);
    }
    out * Complex64::from(0.5)
}

/// U_swap |v> on the doubled register: the target-on-data gate first, then
/// the target-on-ancilla gate. Ancilla sites occupy the low bits.
///
/// The two conditional displacements carry opposite signs. On ideal grid
/// states either sign is the same logical CNOT (the displacement directions
/// differ by a stabilizer), but with finite envelopes only the opposed pair
/// hands the data quadratures to the ancilla cleanly; with equal signs the
/// output picks up a doubled envelope term that never decays with N.
fn swap_gadget_apply(n: usize, v: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    let scale = 2.0 / n as f64;
    let b_gen = |x: &DVector<Complex64>| {
        let t = half_collective(Axis::X, 0, n, x);
        half_collective(Axis::Y, n, n, &t)
    };
    let after_b = exp_i_hermitian_action(&b_gen, v, scale, KRYLOV_TOL)?;
    let a_gen = |x: &DVector<Complex64>| {
        let t = half_collective(Axis::Y, 0, n, x);
        half_collective(Axis::X, n, n, &t)
    };
    exp_i_hermitian_action(&a_gen, &after_b, -scale, KRYLOV_TOL)
}

/// Tensor product with the data factor on the high bits.
fn data_ancilla_product(
    data: &DVector<Complex64>,
    ancilla: &DVector<Complex64>,
) -> DVector<Complex64> {
    let (dd, da) = (data.len(), ancilla.len());
    DVector::from_fn(dd * da, |i, _| data[i / da] * ancilla[i % da])
}

/// Project the ancilla factor onto the Dicke basis: out[(i_D, a)].
fn ancilla_symmetric_rows(
    w: &DVector<Complex64>,
    dicke: &[DVector<Complex64>],
) -> DMatrix<Complex64> {
    let da = dicke[0].len();
    let dd = w.len() / da;
    DMatrix::from_fn(dd, dicke.len(), |i_d, a| {
        let mut acc = Complex64::new(0.0, 0.0);
        for i_a in 0..da {
            acc += dicke[a][i_a].conj() * w[i_d * da + i_a];
        }
        acc
    })
}

/// Orthonormal basis of the code plane, for restricting fits to code-space
/// inputs. Codewords are only near-orthogonal, so Gram-Schmidt it is.
fn code_projector(code: &CodePair) -> DMatrix<Complex64> {
    let dim = code.zero_logical.amps.len();
    let e0 = &code.zero_logical.amps / Complex64::from(code.zero_logical.norm());
    let mut e1 = code.one_logical.amps.clone();
    let c = e0.dotc(&e1);
    e1 -= &e0 * c;
    e1 /= Complex64::from(e1.norm());
    let mut p = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    p += &e0 * e0.adjoint();
    p += &e1 * e1.adjoint();
    p
}

/// Brute-force extraction of the gadget's Kraus operators for one error
/// axis: data basis states with the error applied are pushed through the
/// full two-ensemble circuit, the ancilla output is resolved over Dicke
/// states, and the discarded data register is contracted against the
/// eigenbasis of its averaged reduced state.
pub fn swap_gadget_small_n(code: &CodePair, error_axis: Axis) -> Result<KrausSet> {
    let n = code.n_spins();
    if n > GADGET_MAX_N {
        return Err(Error::ResourceLimit {
            what: "gadget ensemble size",
            requested: n as usize,
            limit: GADGET_MAX_N as usize,
        });
    }
    if n < 2 {
        return Err(Error::InvalidInput("gadget needs at least two spins".into()));
    }
    let nu = n as usize;
    let dicke = dicke_embeddings(n)?;
    let plus_full = embed_symmetric(&code.plus_logical())?;

    // One circuit run per symmetric data input |d>, error applied first.
    let outputs: Result<Vec<DMatrix<Complex64>>> = (0..=nu)
        .into_par_iter()
        .map(|d| {
            let v = data_ancilla_product(&dicke[d], &plus_full);
            let damaged = sigma_apply(error_axis, nu, &v);
            let w = swap_gadget_apply(nu, &damaged)?;
            Ok(ancilla_symmetric_rows(&w, &dicke))
        })
        .collect();
    let outputs = outputs?;

    // Averaged data reduced state; its top eigendirections form <m|.
    let dd = 1usize << nu;
    let mut rho_d = DMatrix::from_element(dd, dd, Complex64::new(0.0, 0.0));
    for v in &outputs {
        rho_d += v * v.adjoint();
    }
    rho_d /= Complex64::from((nu + 1) as f64);
    let (vals, vecs) = eigh(&rho_d);
    let trace: f64 = vals.iter().sum();
    let mut kept: Vec<usize> = Vec::new();
    let mut cum = 0.0;
    for idx in (0..vals.len()).rev() {
        if cum >= trace * (1.0 - BASIS_WEIGHT_CUT) {
            break;
        }
        kept.push(idx);
        cum += vals[idx];
    }

    let sigma_plus: [DVector<Complex64>; 3] = [
        sigma_apply(Axis::X, 0, &plus_full),
        sigma_apply(Axis::Y, 0, &plus_full),
        sigma_apply(Axis::Z, 0, &plus_full),
    ];

    let mut operators = Vec::with_capacity(kept.len());
    let mut weights = Vec::with_capacity(kept.len());
    let mut eta = Vec::with_capacity(kept.len());
    for &idx in &kept {
        let q = vecs.column(idx);
        let k = DMatrix::from_fn(nu + 1, nu + 1, |a, d| {
            let mut acc = Complex64::new(0.0, 0.0);
            for i_d in 0..dd {
                acc += q[i_d].conj() * outputs[d][(i_d, a)];
            }
            acc
        });
        operators.push(k);
        weights.push(vals[idx]);
        eta.push([
            q.dotc(&sigma_plus[0]),
            q.dotc(&sigma_plus[1]),
            q.dotc(&sigma_plus[2]),
        ]);
    }

    let mut completeness = DMatrix::from_element(nu + 1, nu + 1, Complex64::new(0.0, 0.0));
    for k in &operators {
        completeness += k.adjoint() * k;
    }
    let completeness_error = crate::linalg::max_abs(
        &(completeness - DMatrix::<Complex64>::identity(nu + 1, nu + 1)),
    );

    // Span fit restricted to code-space inputs: the gadget's claim is about
    // errors on code states, and equator Dicke inputs sit far outside the
    // polarized regime where the span structure holds.
    let ops = spin_operators(n);
    let proj = code_projector(code);
    let basis = [
        DMatrix::<Complex64>::identity(nu + 1, nu + 1),
        ops.jx.clone(),
        ops.jy.clone(),
        ops.jz.clone(),
    ];
    let cols: Vec<DVector<Complex64>> = basis.iter().map(|b| flatten(&(b * &proj))).collect();
    let a = DMatrix::from_fn(cols[0].len(), 4, |r, c| cols[c][r]);
    let mut span_residuals = Vec::with_capacity(operators.len());
    for k in &operators {
        let b = flatten(&(k * &proj));
        let c = lstsq(&a, &b)?;
        span_residuals.push((&b - &a * &c).norm());
    }

    Ok(KrausSet {
        n_spins: n,
        axis: error_axis,
        operators,
        weights,
        eta,
        span_residuals,
        completeness_error,
    })
}

/// Fidelity of the state handed to the ancilla when a code-space input
/// passes through the gadget with no error at all.
pub fn gadget_logical_fidelity(code: &CodePair) -> Result<f64> {
    let n = code.n_spins();
    if n > GADGET_MAX_N {
        return Err(Error::ResourceLimit {
            what: "gadget ensemble size",
            requested: n as usize,
            limit: GADGET_MAX_N as usize,
        });
    }
    let nu = n as usize;
    let dicke = dicke_embeddings(n)?;
    let plus_full = embed_symmetric(&code.plus_logical())?;
    let data_full = embed_symmetric(&code.zero_logical)?;
    let v = data_ancilla_product(&data_full, &plus_full);
    let w = swap_gadget_apply(nu, &v)?;
    let rows = ancilla_symmetric_rows(&w, &dicke);
    // <psi| rho_A |psi> contracted without forming rho_A: project the
    // ancilla factor on |psi> and take the leftover data-side weight.
    let overlap = rows * code.zero_logical.amps.map(|z| z.conj());
    Ok(overlap.norm_squared())
}

fn flatten(m: &DMatrix<Complex64>) -> DVector<Complex64> {
    DVector::from_column_slice(m.as_slice())
}

fn dicke_embeddings(n: u32) -> Result<Vec<DVector<Complex64>>> {
    (0..=n as usize)
        .map(|k| embed_symmetric(&crate::codes::SymmetricState::dicke(n, k)?))
        .collect()
}

/// Least-squares slope of ln y against ln x.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
