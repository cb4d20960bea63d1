//! Block-diagonal densities over total-spin irreps and their evolution under
//! uniform local depolarizing noise.
//!
//! A permutation-invariant density has no coherences between different J or
//! between multiplicity copies, so it is fully described by one
//! (2J+1)x(2J+1) matrix per irrep. We store the multiplicity-summed block:
//! entry (k,k') holds sum_lambda <J,M_k,lambda| rho |J,M_k',lambda> with
//! M_k = J - k, so the physical trace is the plain sum of block traces.
//! Divide by the multiplicity count to recover per-copy elements.
//!
//! The noise generator acts irrep-wise as collective depolarization plus
//! population transfer between neighbouring irreps. Transfer coefficients
//! come from coupling the last spin to a prefix of N-1 spins: resolving both
//! the source irrep J and the destination J' over the shared prefix spin K
//! reduces the symmetrized one-body superoperator to products of two
//! Clebsch-Gordan factors, with the multiplicity sums collapsing into the
//! prefix degeneracy ratio.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::codes::{ScsDecomposition, SymmetricState};
use crate::error::{Error, Result};
use crate::fullspace;
use crate::su2::{self, Axis, IrrepLabel};

/// Largest N for which the transfer-coefficient table will be built.
pub const GENERATOR_CAP: u32 = 200;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Permutation-invariant density resolved into total-spin blocks.
#[derive(Clone, Debug)]
pub struct CollectiveDensity {
    pub n_spins: u32,
    /// Blocks keyed by 2J, each (2J+1)x(2J+1), row k holding M = J - k.
    /// Multiplicity-summed: trace(block) is the physical irrep population.
    pub blocks: BTreeMap<u32, DMatrix<Complex64>>,
}

impl CollectiveDensity {
    pub fn new(n_spins: u32) -> Self {
        Self {
            n_spins,
            blocks: BTreeMap::new(),
        }
    }

    pub fn block(&self, twice_j: u32) -> Option<&DMatrix<Complex64>> {
        self.blocks.get(&twice_j)
    }

    /// Block divided by its multiplicity count, i.e. the matrix elements of a
    /// single multiplicity copy.
    pub fn per_multiplicity_block(&self, twice_j: u32) -> Option<DMatrix<Complex64>> {
        let b = self.blocks.get(&twice_j)?;
        let d = su2::degeneracy(self.n_spins, twice_j);
        Some(b / Complex64::from(d))
    }

    pub fn trace(&self) -> f64 {
        self.blocks.values().map(|b| b.trace().re).sum()
    }

    /// Population per irrep, largest J last (ascending 2J, matching the map
    /// order).
    pub fn irrep_populations(&self) -> Vec<(IrrepLabel, f64)> {
        self.blocks
            .iter()
            .map(|(&twice_j, b)| {
                (
                    IrrepLabel {
                        n_spins: self.n_spins,
                        twice_j,
                    },
                    b.trace().re,
                )
            })
            .collect()
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.blocks
            .values()
            .map(|b| (b - b.adjoint()).camax())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise difference across the union of blocks; a missing
    /// block counts as zero.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (tj, b) in &self.blocks {
            worst = worst.max(match other.blocks.get(tj) {
                Some(o) => (b - o).camax(),
                None => b.camax(),
            });
        }
        for (tj, o) in &other.blocks {
            if !self.blocks.contains_key(tj) {
                worst = worst.max(o.camax());
            }
        }
        worst
    }

    fn frob_norm(&self) -> f64 {
        self.blocks
            .values()
            .map(|b| b.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    fn scale(&mut self, factor: f64) {
        for b in self.blocks.values_mut() {
            *b *= Complex64::from(factor);
        }
    }

    fn add_assign(&mut self, other: &Self) {
        for (tj, o) in &other.blocks {
            match self.blocks.get_mut(tj) {
                Some(b) => *b += o,
                None => {
                    self.blocks.insert(*tj, o.clone());
                }
            }
        }
    }
}

/// Place a pure symmetric-subspace state in the top block.
pub fn embed_symmetric(state: &SymmetricState) -> CollectiveDensity {
    let mut out = CollectiveDensity::new(state.n_spins);
    out.blocks
        .insert(state.n_spins, &state.amps * state.amps.adjoint());
    out
}

/// Noise strength and duration; `substeps` forces a fixed substep count in
/// the exponential integrator, `None` picks it from the generator norm.
#[derive(Clone, Copy, Debug)]
pub struct NoiseSchedule {
    pub gamma: f64,
    pub duration: f64,
    pub substeps: Option<u32>,
}

impl NoiseSchedule {
    pub fn new(gamma: f64, duration: f64) -> Result<Self> {
        let s = Self {
            gamma,
            duration,
            substeps: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn gamma_t(&self) -> f64 {
        self.gamma * self.duration
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidInput(format!(
                "noise rate must be finite and nonnegative, got {}",
                self.gamma
            )));
        }
        if !(self.duration >= 0.0) || !self.duration.is_finite() {
            return Err(Error::InvalidInput(format!(
                "noise duration must be finite and nonnegative, got {}",
                self.duration
            )));
        }
        Ok(())
    }
}

/// One irrep-to-irrep transfer line of the jump part: for every source entry
/// (k,k') it deposits weight*g[k]*g[k'] * B[k,k'] at (k+shift, k'+shift) of
/// the destination block.
struct TransferChannel {
    src_twice_j: u32,
    dst_twice_j: u32,
    shift: i64,
    weight: f64,
    g: Vec<f64>,
}

struct GeneratorTable {
    n_spins: u32,
    channels: Vec<TransferChannel>,
}

/// Clebsch-Gordan factor for coupling a prefix of spin K (2K = `twice_k`)
/// with one extra spin 1/2 to total (J, M): the amplitude of the
/// prefix ⊗ up component (`up`) or prefix ⊗ down component.
fn cg_half(twice_k: i64, twice_j: i64, twice_m: i64, up: bool) -> f64 {
    let k = twice_k as f64 / 2.0;
    let m = twice_m as f64 / 2.0;
    let den = 2.0 * k + 1.0;
    if twice_j == twice_k + 1 {
        let num = if up { k + m + 0.5 } else { k - m + 0.5 };
        (num.max(0.0) / den).sqrt()
    } else if twice_j == twice_k - 1 {
        if up {
            -((k - m + 0.5).max(0.0) / den).sqrt()
        } else {
            ((k + m + 0.5).max(0.0) / den).sqrt()
        }
    } else {
        0.0
    }
}

/// Matrix element of the last-spin jump component q between |J,M> and
/// |J',M+q>, both resolved over the same prefix spin K.
fn g_coeff(twice_k: i64, src_tj: i64, dst_tj: i64, twice_m: i64, q: i64) -> f64 {
    match q {
        0 => {
            cg_half(twice_k, dst_tj, twice_m, true) * cg_half(twice_k, src_tj, twice_m, true)
                - cg_half(twice_k, dst_tj, twice_m, false)
                    * cg_half(twice_k, src_tj, twice_m, false)
        }
        1 => cg_half(twice_k, dst_tj, twice_m + 2, true) * cg_half(twice_k, src_tj, twice_m, false),
        -1 => {
            cg_half(twice_k, dst_tj, twice_m - 2, false) * cg_half(twice_k, src_tj, twice_m, true)
        }
        _ => 0.0,
    }
}

fn channels_from(n_spins: u32, src_tj: u32) -> Vec<TransferChannel> {
    let n = n_spins as i64;
    let s = src_tj as i64;
    let d_src = su2::degeneracy(n_spins, src_tj);
    let mut out = Vec::new();
    for dst_tj in [s - 2, s, s + 2] {
        if !(0..=n).contains(&dst_tj) {
            continue;
        }
        for twice_k in [s - 1, s + 1] {
            // K must couple to both irreps and exist on N-1 spins.
            if (dst_tj - twice_k).abs() != 1 || !(0..=n - 1).contains(&twice_k) {
                continue;
            }
            let d_k = su2::degeneracy(n_spins - 1, twice_k as u32);
            if d_k <= 0.0 {
                continue;
            }
            for q in [-1i64, 0, 1] {
                // sigma_z carries weight 1, sigma_± carry 2 in
                // sum_i sigma_i . sigma_i.
                let kappa = if q == 0 { 1.0 } else { 2.0 };
                let weight = 0.25 * n as f64 * kappa * d_k / d_src;
                let shift = (dst_tj - s) / 2 - q;
                let src_dim = src_tj as usize + 1;
                let dst_dim = dst_tj as usize + 1;
                let mut g = vec![0.0; src_dim];
                let mut live = false;
                for (k, gk) in g.iter_mut().enumerate() {
                    let kd = k as i64 + shift;
                    if !(0..dst_dim as i64).contains(&kd) {
                        continue;
                    }
                    let twice_m = s - 2 * k as i64;
                    *gk = g_coeff(twice_k, s, dst_tj, twice_m, q);
                    live |= *gk != 0.0;
                }
                if live {
                    out.push(TransferChannel {
                        src_twice_j: src_tj,
                        dst_twice_j: dst_tj as u32,
                        shift,
                        weight,
                        g,
                    });
                }
            }
        }
    }
    out
}

fn generator_table(n_spins: u32) -> Result<Arc<GeneratorTable>> {
    if n_spins == 0 || n_spins > GENERATOR_CAP {
        return Err(Error::ResourceLimit {
            what: "depolarizing generator",
            requested: n_spins as usize,
            limit: GENERATOR_CAP as usize,
        });
    }
    static CACHE: OnceLock<Mutex<BTreeMap<u32, Arc<GeneratorTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    if let Some(t) = cache.lock().unwrap().get(&n_spins) {
        return Ok(t.clone());
    }
    let labels = su2::irrep_table(n_spins);
    let channels: Vec<TransferChannel> = labels
        .par_iter()
        .flat_map_iter(|lab| channels_from(n_spins, lab.twice_j))
        .collect();
    let table = Arc::new(GeneratorTable { n_spins, channels });
    Ok(cache
        .lock()
        .unwrap()
        .entry(n_spins)
        .or_insert(table)
        .clone())
}

/// The depolarizing Lindbladian in block form, per unit gamma, restricted to
/// irreps with 2J >= `min_twice_j`. Transfer into untracked irreps is
/// dropped, which shows up as trace loss.
pub struct DepolarizeGenerator {
    table: Arc<GeneratorTable>,
    min_twice_j: u32,
}

/// Full-width generator (every irrep tracked).
pub fn depolarize_generator(n_spins: u32) -> Result<DepolarizeGenerator> {
    DepolarizeGenerator::banded(n_spins, n_spins % 2)
}

impl DepolarizeGenerator {
    pub fn banded(n_spins: u32, min_twice_j: u32) -> Result<Self> {
        Ok(Self {
            table: generator_table(n_spins)?,
            min_twice_j,
        })
    }

    pub fn n_spins(&self) -> u32 {
        self.table.n_spins
    }

    pub fn min_twice_j(&self) -> u32 {
        self.min_twice_j
    }

    /// Jump part alone: (1/4) sum_{n,i} sigma_i^(n) rho sigma_i^(n) in block
    /// form.
    pub fn apply_jump(&self, rho: &CollectiveDensity) -> CollectiveDensity {
        self.apply_inner(rho, false)
    }

    /// Full generator: jump part minus the uniform decay 3N/4.
    pub fn apply(&self, rho: &CollectiveDensity) -> CollectiveDensity {
        self.apply_inner(rho, true)
    }

    fn apply_inner(&self, rho: &CollectiveDensity, decay: bool) -> CollectiveDensity {
        debug_assert_eq!(rho.n_spins, self.table.n_spins);
        let mut out = CollectiveDensity::new(rho.n_spins);
        if decay {
            let rate = Complex64::from(-0.75 * rho.n_spins as f64);
            for (tj, b) in &rho.blocks {
                out.blocks.insert(*tj, b * rate);
            }
        }
        for ch in &self.table.channels {
            if ch.src_twice_j < self.min_twice_j || ch.dst_twice_j < self.min_twice_j {
                continue;
            }
            let Some(src) = rho.blocks.get(&ch.src_twice_j) else {
                continue;
            };
            let dst_dim = ch.dst_twice_j as usize + 1;
            let dst = out
                .blocks
                .entry(ch.dst_twice_j)
                .or_insert_with(|| DMatrix::from_element(dst_dim, dst_dim, ZERO));
            for (k, &gk) in ch.g.iter().enumerate() {
                if gk == 0.0 {
                    continue;
                }
                let kd = (k as i64 + ch.shift) as usize;
                for (k2, &gk2) in ch.g.iter().enumerate() {
                    if gk2 == 0.0 {
                        continue;
                    }
                    let k2d = (k2 as i64 + ch.shift) as usize;
                    dst[(kd, k2d)] += src[(k, k2)] * (ch.weight * gk * gk2);
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    /// Track irreps with J >= N/2 - j_band.
    pub j_band: u32,
    /// Widen the band and redo when the lowest tracked irrep ends up with
    /// more population than this.
    pub widen_threshold: f64,
    /// Relative truncation tolerance of the exponential series.
    pub tolerance: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            j_band: 12,
            widen_threshold: 1e-6,
            tolerance: 1e-12,
        }
    }
}

/// Propagate rho by exp(gamma t L) with the default band.
pub fn evolve(rho: &CollectiveDensity, schedule: &NoiseSchedule) -> Result<CollectiveDensity> {
    evolve_with(rho, schedule, &EvolveOptions::default())
}

pub fn evolve_with(
    rho: &CollectiveDensity,
    schedule: &NoiseSchedule,
    opts: &EvolveOptions,
) -> Result<CollectiveDensity> {
    schedule.validate()?;
    let n = rho.n_spins;
    let Some(&input_min) = rho.blocks.keys().next() else {
        return Err(Error::InvalidInput("empty collective density".into()));
    };
    let gamma_t = schedule.gamma_t();
    if gamma_t == 0.0 {
        return Ok(rho.clone());
    }
    let parity = n % 2;
    let mut band = opts.j_band.max(1);
    loop {
        let floor = n as i64 - 2 * band as i64;
        let min_tj = if floor <= parity as i64 {
            parity
        } else {
            (floor as u32).min(input_min)
        };
        let gen = DepolarizeGenerator::banded(n, min_tj)?;
        let out = exponential_action(&gen, rho, gamma_t, schedule.substeps, opts.tolerance)?;
        if min_tj == parity {
            return Ok(out);
        }
        let lowest = out.blocks.get(&min_tj).map_or(0.0, |b| b.trace().re);
        if lowest <= opts.widen_threshold {
            return Ok(out);
        }
        band += 4;
    }
}

/// exp(gamma_t L) rho via substepped Taylor summation. Substeps keep the
/// per-step exponent at order one, where the series converges in a few dozen
/// terms without cancellation trouble.
fn exponential_action(
    gen: &DepolarizeGenerator,
    rho: &CollectiveDensity,
    gamma_t: f64,
    substeps: Option<u32>,
    tolerance: f64,
) -> Result<CollectiveDensity> {
    const MAX_TERMS: usize = 300;
    let n = rho.n_spins as f64;
    let auto = (gamma_t * 0.75 * n).ceil() as u32;
    let steps = substeps.unwrap_or(auto).max(1);
    let dt = gamma_t / steps as f64;
    let mut acc = rho.clone();
    for _ in 0..steps {
        let mut term = acc.clone();
        let mut next = acc;
        let mut quiet = 0;
        let mut done = false;
        for k in 1..=MAX_TERMS {
            term = gen.apply(&term);
            term.scale(dt / k as f64);
            next.add_assign(&term);
            if term.frob_norm() <= tolerance * next.frob_norm() {
                quiet += 1;
                if quiet >= 2 {
                    done = true;
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        if !done {
            return Err(Error::Numeric(format!(
                "exponential series did not converge in {MAX_TERMS} terms (substep exponent {:.3})",
                dt * 1.5 * n
            )));
        }
        acc = next;
    }
    Ok(acc)
}

/// Exact reference evolution in the full tensor space, with its block
/// compression. The per-site channel form of the dynamics makes this an
/// exact endpoint, not an integration.
pub fn brute_force_evolve(
    state: &SymmetricState,
    schedule: &NoiseSchedule,
) -> Result<(DMatrix<Complex64>, CollectiveDensity)> {
    schedule.validate()?;
    let n = state.n_spins;
    if n > 8 {
        return Err(Error::ResourceLimit {
            what: "brute-force depolarizing evolution",
            requested: n as usize,
            limit: 8,
        });
    }
    let psi = fullspace::embed_symmetric(state)?;
    let rho = &psi * psi.adjoint();
    let evolved = fullspace::depolarize_density(n, &rho, schedule.gamma_t());
    let mut compressed = CollectiveDensity::new(n);
    for (label, block) in fullspace::irrep_blocks(n, &evolved)? {
        compressed.blocks.insert(label.twice_j, block);
    }
    Ok((evolved, compressed))
}

fn block_marginal(block: &DMatrix<Complex64>, twice_j: u32, axis: Axis) -> Vec<f64> {
    let basis = su2::axis_eigenbasis(twice_j, axis);
    let dim = twice_j as usize + 1;
    (0..dim)
        .map(|k| {
            let v = basis.column(k);
            v.dotc(&(block * v)).re
        })
        .collect()
}

/// Diagonal of one block in the eigenbasis of the given spin axis, ordered by
/// descending eigenvalue M. Unnormalized: the entries sum to the irrep
/// population.
pub fn irrep_marginal(rho: &CollectiveDensity, twice_j: u32, axis: Axis) -> Result<Vec<f64>> {
    let block = rho
        .blocks
        .get(&twice_j)
        .ok_or_else(|| Error::InvalidInput(format!("no block tracked at 2J = {twice_j}")))?;
    Ok(block_marginal(block, twice_j, axis))
}

/// Marginals of all blocks accumulated on the common N+1 grid of collective
/// eigenvalues (index k corresponds to M = N/2 - k). Sums to the total trace.
pub fn full_transverse_distribution(rho: &CollectiveDensity, axis: Axis) -> Vec<f64> {
    let mut out = vec![0.0; rho.n_spins as usize + 1];
    for (&tj, block) in &rho.blocks {
        let offset = ((rho.n_spins - tj) / 2) as usize;
        for (k, p) in block_marginal(block, tj, axis).into_iter().enumerate() {
            out[offset + k] += p;
        }
    }
    out
}

/// One-jump output of a coherent-superposition state, resolved analytically
/// into the two reachable irreps.
pub struct JumpProjection {
    /// Block at J = N/2, dimension N+1: (gamma/N) sum_i J_i rho J_i.
    pub top: DMatrix<Complex64>,
    /// Block at J = N/2 - 1, dimension N-1: gamma (N-1)/2 times the
    /// f^2-weighted coherent outer products, f the per-spin overlap between
    /// the paired directions.
    pub lower: DMatrix<Complex64>,
}

/// Evaluate the one-jump projections from an SCS decomposition without
/// touching the full tensor space. Coefficients are renormalized so the
/// reconstructed state has unit norm; a decomposition whose terms nearly
/// cancel is rejected.
pub fn jump_projection_analytic(decomp: &ScsDecomposition, gamma: f64) -> Result<JumpProjection> {
    let n = decomp.n_spins;
    if n < 2 {
        return Err(Error::InvalidInput(
            "jump projections need at least two spins".into(),
        ));
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidInput(format!(
            "noise rate must be finite and nonnegative, got {gamma}"
        )));
    }
    if decomp.terms.is_empty() {
        return Err(Error::InvalidInput("empty SCS decomposition".into()));
    }
    let dim = n as usize + 1;
    let mut raw = DVector::from_element(dim, ZERO);
    for (c, omega) in &decomp.terms {
        raw += su2::scs_state(n, *omega) * *c;
    }
    let norm = raw.norm();
    if !norm.is_finite() || norm < 1e-6 {
        return Err(Error::InvalidInput(
            "SCS decomposition reconstructs to a near-null state".into(),
        ));
    }

    let ops = su2::spin_operators(n);
    let b0 = &raw * raw.adjoint() / Complex64::from(norm * norm);
    let top = (&ops.jx * &b0 * &ops.jx + &ops.jy * &b0 * &ops.jy + &ops.jz * &b0 * &ops.jz)
        * Complex64::from(gamma / n as f64);

    let carrier_tj = n - 2;
    let carriers: Vec<DVector<Complex64>> = decomp
        .terms
        .iter()
        .map(|(_, omega)| su2::scs_state(carrier_tj, *omega))
        .collect();
    let prefactor = gamma * (n as f64 - 1.0) / 2.0;
    let ldim = carrier_tj as usize + 1;
    let mut lower = DMatrix::from_element(ldim, ldim, ZERO);
    for (k, (ck, om_k)) in decomp.terms.iter().enumerate() {
        for (k2, (ck2, om_k2)) in decomp.terms.iter().enumerate() {
            // Exact pair coefficient: the squared per-spin overlap, whose
            // modulus is cos^2 of half the angular separation.
            let f = su2::single_spin_overlap(*om_k2, *om_k);
            let coeff = ck * ck2.conj() * f * f * Complex64::from(prefactor / (norm * norm));
            if coeff == ZERO {
                continue;
            }
            lower += &carriers[k] * carriers[k2].adjoint() * coeff;
        }
    }
    Ok(JumpProjection { top, lower })
}

/// Bhattacharyya overlap of two distributions after normalization, maximized
/// over small relative index shifts (centers aligned first, then offsets of
/// up to two grid steps either way).
pub fn self_similarity_score(p_a: &[f64], p_b: &[f64]) -> Result<f64> {
    let clean = |p: &[f64]| -> Result<Vec<f64>> {
        let v: Vec<f64> = p.iter().map(|&x| x.max(0.0)).collect();
        let mass: f64 = v.iter().sum();
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidInput(
                "distribution has no positive mass".into(),
            ));
        }
        Ok(v.into_iter().map(|x| x / mass).collect())
    };
    let a = clean(p_a)?;
    let b = clean(p_b)?;
    let base = (a.len() as i64 - b.len() as i64) / 2;
    let mut best = 0.0f64;
    for r in base - 2..=base + 2 {
        let mut s = 0.0;
        for (i, &ai) in a.iter().enumerate() {
            let j = i as i64 - r;
            if (0..b.len() as i64).contains(&j) {
                s += (ai * b[j as usize]).sqrt();
            }
        }
        best = best.max(s);
    }
    Ok(best.min(1.0))
}
