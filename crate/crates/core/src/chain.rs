//! Hilbert-space machinery for an open chain of spin-1/2 particles.
//!
//! Basis states are tensor products of `{|↑⟩, |↓⟩}` with spin 1 as the most
//! significant factor: bit `N - n` of a basis index is `0` when spin `n` is up
//! and `1` when it is down. Energies are in units of `ħ w0`, so the only
//! physical knobs are `J / w0` and `w1 / w0`.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Dense 2×2 complex operator on one spin.
pub type Op2 = Matrix2<C64>;

/// Dense operator on the full chain.
pub type Operator = DMatrix<C64>;

pub fn sigma_x() -> Op2 {
    Op2::new(ZERO, ONE, ONE, ZERO)
}

pub fn sigma_y() -> Op2 {
    let i = C64::new(0.0, 1.0);
    Op2::new(ZERO, -i, i, ZERO)
}

pub fn sigma_z() -> Op2 {
    Op2::new(ONE, ZERO, ZERO, -ONE)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    Heisenberg,
    IsingZ,
    IsingX,
    None,
}

impl Coupling {
    pub fn as_str(&self) -> &'static str {
        match self {
            Coupling::Heisenberg => "heisenberg",
            Coupling::IsingZ => "ising_z",
            Coupling::IsingX => "ising_x",
            Coupling::None => "none",
        }
    }
}

impl fmt::Display for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Coupling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heisenberg" => Ok(Coupling::Heisenberg),
            "ising_z" => Ok(Coupling::IsingZ),
            "ising_x" => Ok(Coupling::IsingX),
            "none" => Ok(Coupling::None),
            other => Err(Error::UnknownCoupling(other.to_string())),
        }
    }
}

/// Amplitudes `(α, β)` of a single spin state `α|↑⟩ + β|↓⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinState {
    pub up: C64,
    pub down: C64,
}

impl SpinState {
    pub fn new(up: C64, down: C64) -> Self {
        Self { up, down }
    }

    pub fn up() -> Self {
        Self::new(ONE, ZERO)
    }

    pub fn down() -> Self {
        Self::new(ZERO, ONE)
    }

    /// The cat state `(|↑⟩ + |↓⟩)/√2`.
    pub fn cat() -> Self {
        let a = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::new(a, a)
    }

    /// Real state `a|↑⟩ + √(1 - a²)|↓⟩`.
    pub fn real(a: f64) -> Self {
        Self::new(C64::new(a, 0.0), C64::new((1.0 - a * a).max(0.0).sqrt(), 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.up.norm_sqr() + self.down.norm_sqr()
    }
}

/// Static description of the chain and of its kicks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub n_spins: usize,
    pub coupling: Coupling,
    pub j_over_w0: f64,
    pub w1_over_w0: f64,
    /// Kick direction angle ϑ.
    pub kick_theta: f64,
    /// Use `cos(π/4 - ϑ)|↑⟩ + sin(π/4 - ϑ)|↓⟩` as the kick direction.
    pub kick_offset_pi4: bool,
    pub initial_states: Vec<SpinState>,
}

impl ChainConfig {
    /// Chain of `n_spins` spins all starting in `state`.
    pub fn uniform(n_spins: usize, coupling: Coupling, j_over_w0: f64, state: SpinState) -> Self {
        Self {
            n_spins,
            coupling,
            j_over_w0,
            w1_over_w0: 1.0,
            kick_theta: 0.0,
            kick_offset_pi4: false,
            initial_states: vec![state; n_spins],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_spins < 2 {
            return Err(Error::TooFewSpins(self.n_spins));
        }
        if self.n_spins > 24 {
            return Err(invalid("n_spins", "dense simulation needs n_spins <= 24"));
        }
        for (name, v) in [
            ("j_over_w0", self.j_over_w0),
            ("w1_over_w0", self.w1_over_w0),
            ("kick_theta", self.kick_theta),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        if self.initial_states.len() != self.n_spins {
            return Err(invalid(
                "initial_states",
                format!("expected {} states, got {}", self.n_spins, self.initial_states.len()),
            ));
        }
        for (k, s) in self.initial_states.iter().enumerate() {
            if (s.norm_sqr() - 1.0).abs() > 1e-12 {
                return Err(invalid(
                    "initial_states",
                    format!("state of spin {} has squared norm {}", k + 1, s.norm_sqr()),
                ));
            }
        }
        Ok(())
    }

    /// Coupling constant actually used; `none` forces zero.
    pub fn effective_j(&self) -> f64 {
        match self.coupling {
            Coupling::None => 0.0,
            _ => self.j_over_w0,
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.n_spins
    }
}

/// Pure state of the chain, `2^N` amplitudes in the documented basis order.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_spins: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn from_amplitudes(n_spins: usize, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 1 << n_spins {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_spins,
                found: amps.len(),
            });
        }
        Ok(Self { n_spins, amps })
    }

    /// Tensor product of single-spin states, spin 1 first.
    pub fn product(states: &[SpinState]) -> Self {
        let mut amps = vec![ONE];
        for s in states {
            let mut next = Vec::with_capacity(amps.len() * 2);
            for &a in &amps {
                next.push(a * s.up);
                next.push(a * s.down);
            }
            amps = next;
        }
        Self {
            n_spins: states.len(),
            amps,
        }
    }

    /// Computational basis state with the given index.
    pub fn basis(n_spins: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n_spins];
        amps[index] = ONE;
        Self { n_spins, amps }
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        self.amps.iter_mut().for_each(|a| *a /= n);
    }

    pub fn to_dvector(&self) -> DVector<C64> {
        DVector::from_column_slice(&self.amps)
    }

    /// Applies a 2×2 operator to spin `site` (1-based) with a strided sweep.
    pub fn apply_single_site(&mut self, op: &Op2, site: usize) -> Result<()> {
        check_site(site, self.n_spins)?;
        let stride = 1usize << (self.n_spins - site);
        let (a, b, c, d) = (op[(0, 0)], op[(0, 1)], op[(1, 0)], op[(1, 1)]);
        for base in (0..self.amps.len()).step_by(2 * stride) {
            for i in base..base + stride {
                let up = self.amps[i];
                let down = self.amps[i + stride];
                self.amps[i] = a * up + b * down;
                self.amps[i + stride] = c * up + d * down;
            }
        }
        Ok(())
    }

    /// Largest amplitude difference to another state.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn check_site(site: usize, n_spins: usize) -> Result<()> {
    if site == 0 || site > n_spins {
        Err(Error::SiteOutOfRange { site, n_spins })
    } else {
        Ok(())
    }
}

/// `id^{⊗(n-1)} ⊗ op ⊗ id^{⊗(N-n)}` as a dense `2^N × 2^N` matrix.
pub fn embed_single_site(op: &Op2, site: usize, n_spins: usize) -> Result<Operator> {
    check_site(site, n_spins)?;
    let left = Operator::identity(1 << (site - 1), 1 << (site - 1));
    let right = Operator::identity(1 << (n_spins - site), 1 << (n_spins - site));
    let op = Operator::from_fn(2, 2, |r, c| op[(r, c)]);
    Ok(left.kronecker(&op).kronecker(&right))
}

/// `H_{0,I}` in units of `ħ w0`: Zeeman terms on every site plus the
/// nearest-neighbour coupling on the `N - 1` bonds of the open chain.
///
/// Entries are written directly from the bit structure of the basis; every
/// coupling in the family is real in this basis.
pub fn build_static_hamiltonian(config: &ChainConfig) -> Result<Operator> {
    if config.n_spins < 2 {
        return Err(Error::TooFewSpins(config.n_spins));
    }
    let n = config.n_spins;
    let dim = 1usize << n;
    let j = config.effective_j();
    let zeeman = 0.5 * config.w1_over_w0;
    let mut h = Operator::zeros(dim, dim);
    let bit = |site: usize| 1usize << (n - site);

    for x in 0..dim {
        let downs = x.count_ones() as f64;
        h[(x, x)] += C64::new(zeeman * downs, 0.0);
        if j == 0.0 {
            continue;
        }
        for site in 1..n {
            let (b1, b2) = (bit(site), bit(site + 1));
            let aligned = ((x & b1) == 0) == ((x & b2) == 0);
            let flipped = x ^ b1 ^ b2;
            match config.coupling {
                Coupling::Heisenberg => {
                    // Sz Sz on the diagonal, Sx Sx + Sy Sy swaps anti-aligned pairs
                    h[(x, x)] += C64::new(-j * if aligned { 0.25 } else { -0.25 }, 0.0);
                    if !aligned {
                        h[(flipped, x)] += C64::new(-j * 0.5, 0.0);
                    }
                }
                Coupling::IsingZ => {
                    h[(x, x)] += C64::new(-j * if aligned { 0.25 } else { -0.25 }, 0.0);
                }
                Coupling::IsingX => {
                    h[(flipped, x)] += C64::new(-j * 0.25, 0.0);
                }
                Coupling::None => {}
            }
        }
    }
    Ok(h)
}

/// Unit kick direction `|w⟩` for the configured convention.
pub fn kick_direction(config: &ChainConfig) -> SpinState {
    let angle = if config.kick_offset_pi4 {
        FRAC_PI_4 - config.kick_theta
    } else {
        config.kick_theta
    };
    SpinState::new(C64::new(angle.cos(), 0.0), C64::new(angle.sin(), 0.0))
}

/// Rank-one kick projector `W = |w⟩⟨w|`.
pub fn build_kick_projector(config: &ChainConfig) -> Op2 {
    let w = kick_direction(config);
    let v = nalgebra::Vector2::new(w.up, w.down);
    v * v.adjoint()
}

fn max_hermitian_defect(h: &Operator) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..h.nrows() {
        for c in r..h.ncols() {
            worst = worst.max((h[(r, c)] - h[(c, r)].conj()).norm());
        }
    }
    worst
}

#[derive(Debug, Clone)]
enum BlockBasis {
    Real { v: DMatrix<f64>, vt: DMatrix<f64> },
    Complex { v: DMatrix<C64>, vh: DMatrix<C64> },
}

/// One invariant subspace spanned by a subset of basis states.
#[derive(Debug, Clone)]
struct Block {
    indices: Vec<usize>,
    energies: Vec<f64>,
    basis: BlockBasis,
}

/// Exact eigendecomposition of a Hermitian operator.
///
/// The operator is first split into the connected components of its sparsity
/// graph; each component is diagonalised on its own. One-dimensional
/// components stay diagonal. Spin-conserving couplings therefore never pay
/// for a full `2^N` eigensolve.
#[derive(Debug, Clone)]
pub struct SpectralDecomp {
    dim: usize,
    diagonal: Vec<(usize, f64)>,
    blocks: Vec<Block>,
    eigenvalues: Vec<f64>,
    // (block, local column) per ascending eigenvalue; block == usize::MAX marks diagonal entries
    order: Vec<(usize, usize)>,
}

/// Diagonalises a Hermitian operator (Hermitian within 1e-12).
pub fn diagonalize(h: &Operator) -> Result<SpectralDecomp> {
    let dim = h.nrows();
    if h.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: h.ncols(),
        });
    }
    let defect = max_hermitian_defect(h);
    if defect > 1e-12 {
        return Err(Error::NotHermitian(defect));
    }

    let components = connected_components(h);
    let mut diagonal = Vec::new();
    let mut blocks = Vec::new();
    for indices in components {
        if indices.len() == 1 {
            let i = indices[0];
            diagonal.push((i, h[(i, i)].re));
            continue;
        }
        let b = indices.len();
        let is_real = indices.iter().all(|&r| indices.iter().all(|&c| h[(r, c)].im == 0.0));
        let block = if is_real {
            // symmetrise to absorb sub-tolerance asymmetry
            let sub = DMatrix::<f64>::from_fn(b, b, |r, c| {
                0.5 * (h[(indices[r], indices[c])].re + h[(indices[c], indices[r])].re)
            });
            let eig = SymmetricEigen::new(sub);
            Block {
                energies: eig.eigenvalues.iter().copied().collect(),
                basis: BlockBasis::Real {
                    vt: eig.eigenvectors.transpose(),
                    v: eig.eigenvectors,
                },
                indices,
            }
        } else {
            let sub = DMatrix::<C64>::from_fn(b, b, |r, c| {
                0.5 * (h[(indices[r], indices[c])] + h[(indices[c], indices[r])].conj())
            });
            let eig = SymmetricEigen::new(sub);
            Block {
                energies: eig.eigenvalues.iter().copied().collect(),
                basis: BlockBasis::Complex {
                    vh: eig.eigenvectors.adjoint(),
                    v: eig.eigenvectors,
                },
                indices,
            }
        };
        blocks.push(block);
    }

    let mut order: Vec<(f64, usize, usize)> = diagonal
        .iter()
        .enumerate()
        .map(|(k, &(_, e))| (e, usize::MAX, k))
        .collect();
    for (bi, block) in blocks.iter().enumerate() {
        order.extend(block.energies.iter().enumerate().map(|(k, &e)| (e, bi, k)));
    }
    order.sort_by(|a, b| a.0.total_cmp(&b.0));

    Ok(SpectralDecomp {
        dim,
        diagonal,
        blocks,
        eigenvalues: order.iter().map(|o| o.0).collect(),
        order: order.iter().map(|o| (o.1, o.2)).collect(),
    })
}

fn connected_components(h: &Operator) -> Vec<Vec<usize>> {
    let dim = h.nrows();
    let mut parent: Vec<usize> = (0..dim).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for c in 0..dim {
        for r in 0..c {
            if h[(r, c)] != ZERO || h[(c, r)] != ZERO {
                let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); dim];
    for x in 0..dim {
        let root = find(&mut parent, x);
        groups[root].push(x);
    }
    groups.into_iter().filter(|g| !g.is_empty()).collect()
}

impl SpectralDecomp {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Number of independent blocks, counting each 1×1 block.
    pub fn block_count(&self) -> usize {
        self.diagonal.len() + self.blocks.len()
    }

    /// Dense unitary whose columns are the eigenvectors, matching
    /// [`SpectralDecomp::eigenvalues`].
    pub fn eigenvectors(&self) -> Operator {
        let mut v = Operator::zeros(self.dim, self.dim);
        for (col, &(bi, k)) in self.order.iter().enumerate() {
            if bi == usize::MAX {
                v[(self.diagonal[k].0, col)] = ONE;
                continue;
            }
            let block = &self.blocks[bi];
            for (local, &row) in block.indices.iter().enumerate() {
                v[(row, col)] = match &block.basis {
                    BlockBasis::Real { v, .. } => C64::new(v[(local, k)], 0.0),
                    BlockBasis::Complex { v, .. } => v[(local, k)],
                };
            }
        }
        v
    }

    /// `V Λ V†`.
    pub fn reconstruct(&self) -> Operator {
        let v = self.eigenvectors();
        let lambda = Operator::from_diagonal(&DVector::from_iterator(
            self.dim,
            self.eigenvalues.iter().map(|&e| C64::new(e, 0.0)),
        ));
        &v * lambda * v.adjoint()
    }

    /// Multiplies `amps` in place by `exp(-i H dt)`.
    pub fn evolve_in_place(&self, dt: f64, amps: &mut [C64]) {
        assert_eq!(amps.len(), self.dim, "state dimension mismatch");
        if dt == 0.0 {
            return;
        }
        let phase = |e: f64| C64::from_polar(1.0, -e * dt);
        for &(i, e) in &self.diagonal {
            amps[i] *= phase(e);
        }
        for block in &self.blocks {
            let b = block.indices.len();
            match &block.basis {
                BlockBasis::Real { v, vt } => {
                    let x = DMatrix::<f64>::from_fn(b, 2, |r, c| {
                        let a = amps[block.indices[r]];
                        if c == 0 {
                            a.re
                        } else {
                            a.im
                        }
                    });
                    let mut coeff = vt * x;
                    for (k, &e) in block.energies.iter().enumerate() {
                        let z = C64::new(coeff[(k, 0)], coeff[(k, 1)]) * phase(e);
                        coeff[(k, 0)] = z.re;
                        coeff[(k, 1)] = z.im;
                    }
                    let y = v * coeff;
                    for (r, &i) in block.indices.iter().enumerate() {
                        amps[i] = C64::new(y[(r, 0)], y[(r, 1)]);
                    }
                }
                BlockBasis::Complex { v, vh } => {
                    let x = DVector::<C64>::from_iterator(b, block.indices.iter().map(|&i| amps[i]));
                    let mut coeff = vh * x;
                    for (k, &e) in block.energies.iter().enumerate() {
                        coeff[k] *= phase(e);
                    }
                    let y = v * coeff;
                    for (r, &i) in block.indices.iter().enumerate() {
                        amps[i] = y[r];
                    }
                }
            }
        }
    }
}

/// `V exp(-iΛ Δθ) V† |state⟩`.
pub fn free_evolution_apply(decomp: &SpectralDecomp, delta_theta: f64, state: &StateVector) -> StateVector {
    let mut out = state.clone();
    decomp.evolve_in_place(delta_theta, out.amplitudes_mut());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn config(n: usize, coupling: Coupling, j: f64, w1: f64) -> ChainConfig {
        ChainConfig {
            w1_over_w0: w1,
            ..ChainConfig::uniform(n, coupling, j, SpinState::cat())
        }
    }

    fn embed_pair(a: &Op2, b: &Op2, site: usize, n: usize) -> Operator {
        embed_single_site(a, site, n).unwrap() * embed_single_site(b, site + 1, n).unwrap()
    }

    /// Independent route: sums of Kronecker-embedded Pauli products.
    fn pauli_hamiltonian(cfg: &ChainConfig) -> Operator {
        let n = cfg.n_spins;
        let half = C64::new(0.5, 0.0);
        let (sx, sy, sz) = (sigma_x() * half, sigma_y() * half, sigma_z() * half);
        let down = Op2::new(ZERO, ZERO, ZERO, C64::new(0.5 * cfg.w1_over_w0, 0.0));
        let mut h = Operator::zeros(1 << n, 1 << n);
        for site in 1..=n {
            h += embed_single_site(&down, site, n).unwrap();
        }
        let j = C64::new(-cfg.effective_j(), 0.0);
        for site in 1..n {
            let term = match cfg.coupling {
                Coupling::Heisenberg => {
                    embed_pair(&sx, &sx, site, n) + embed_pair(&sy, &sy, site, n) + embed_pair(&sz, &sz, site, n)
                }
                Coupling::IsingZ => embed_pair(&sz, &sz, site, n),
                Coupling::IsingX => embed_pair(&sx, &sx, site, n),
                Coupling::None => Operator::zeros(1 << n, 1 << n),
            };
            h += term * j;
        }
        h
    }

    fn max_entry(m: &Operator) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn random_hermitian(dim: usize, seed: u64) -> Operator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Operator::from_fn(dim, dim, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        (&a + a.adjoint()) * C64::new(0.5, 0.0)
    }

    #[test]
    fn direct_hamiltonian_matches_pauli_sums() {
        for coupling in [Coupling::Heisenberg, Coupling::IsingZ, Coupling::IsingX, Coupling::None] {
            for n in 2..=4 {
                let cfg = config(n, coupling, 0.73, 1.3);
                let diff = build_static_hamiltonian(&cfg).unwrap() - pauli_hamiltonian(&cfg);
                assert!(max_entry(&diff) < 1e-14, "{coupling} n={n}");
            }
        }
    }

    #[test]
    fn heisenberg_pair_has_triplet_and_singlet() {
        let h = build_static_hamiltonian(&config(2, Coupling::Heisenberg, 1.0, 0.0)).unwrap();
        // brute-force oracle: the 4x4 Pauli construction, eigensolved directly
        let oracle = SymmetricEigen::new(pauli_hamiltonian(&config(2, Coupling::Heisenberg, 1.0, 0.0)));
        let mut expected: Vec<f64> = oracle.eigenvalues.iter().copied().collect();
        expected.sort_by(f64::total_cmp);
        let d = diagonalize(&h).unwrap();
        for (got, want) in d.eigenvalues().iter().zip(&expected) {
            assert_abs_diff_eq!(*got, *want, epsilon = 1e-12);
        }
        for (got, want) in d.eigenvalues().iter().zip([-0.25, -0.25, -0.25, 0.75]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn ising_z_pair_is_diagonal() {
        let h = build_static_hamiltonian(&config(2, Coupling::IsingZ, 1.0, 0.0)).unwrap();
        let expected = [-0.25, 0.25, 0.25, -0.25];
        for r in 0..4 {
            for c in 0..4 {
                let want = if r == c { expected[r] } else { 0.0 };
                assert_eq!(h[(r, c)], C64::new(want, 0.0));
            }
        }
    }

    #[test]
    fn zero_coupling_leaves_only_zeeman() {
        for coupling in [Coupling::Heisenberg, Coupling::IsingX, Coupling::IsingZ] {
            let h = build_static_hamiltonian(&config(3, coupling, 0.0, 0.8)).unwrap();
            let none = build_static_hamiltonian(&config(3, Coupling::None, 5.0, 0.8)).unwrap();
            assert_eq!(h, none);
        }
    }

    #[test]
    fn too_few_spins_rejected() {
        assert!(matches!(
            build_static_hamiltonian(&config(1, Coupling::Heisenberg, 1.0, 1.0)),
            Err(Error::TooFewSpins(1))
        ));
        assert!(matches!("xy".parse::<Coupling>(), Err(Error::UnknownCoupling(_))));
    }

    #[test]
    fn hamiltonians_are_hermitian_and_conserve_sz_when_expected() {
        for coupling in [Coupling::Heisenberg, Coupling::IsingZ, Coupling::IsingX] {
            let n = 4;
            let h = build_static_hamiltonian(&config(n, coupling, 0.9, 1.1)).unwrap();
            assert!(max_hermitian_defect(&h) < 1e-12);
            let mut sz = Operator::zeros(1 << n, 1 << n);
            for site in 1..=n {
                sz += embed_single_site(&sigma_z(), site, n).unwrap();
            }
            let comm = &h * &sz - &sz * &h;
            if coupling != Coupling::IsingX {
                assert!(max_entry(&comm) < 1e-12, "{coupling}");
            } else {
                assert!(max_entry(&comm) > 0.1);
            }
        }
    }

    #[test]
    fn heisenberg_is_scalar_on_identical_products() {
        let n = 4;
        let cfg = config(n, Coupling::Heisenberg, 1.0, 0.0);
        let h = build_static_hamiltonian(&cfg).unwrap();
        let psi = SpinState::new(C64::new(0.6, 0.1), C64::new(0.3, -0.7348469228349535));
        let norm = psi.norm_sqr().sqrt();
        let psi = SpinState::new(psi.up / norm, psi.down / norm);
        let v = StateVector::product(&vec![psi; n]).to_dvector();
        let hv = &h * &v;
        let mu = v.dotc(&hv);
        let residual = (hv - v * mu).norm();
        assert!(residual < 1e-10, "residual {residual}");
    }

    #[test]
    fn kick_projectors() {
        let mut cfg = config(2, Coupling::None, 0.0, 1.0);
        let w = build_kick_projector(&cfg);
        assert_eq!(w, Op2::new(ONE, ZERO, ZERO, ZERO));

        cfg.kick_theta = FRAC_PI_4;
        let w = build_kick_projector(&cfg);
        for z in w.iter() {
            assert_abs_diff_eq!(z.re, 0.5, epsilon = 1e-15);
            assert_eq!(z.im, 0.0);
        }
        assert_abs_diff_eq!(
            (w * w - w).iter().map(|z| z.norm()).fold(0.0, f64::max),
            0.0,
            epsilon = 1e-15
        );

        cfg.kick_offset_pi4 = true;
        let w = build_kick_projector(&cfg);
        assert_abs_diff_eq!(w[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[(1, 1)].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.trace().re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn embeddings_have_kronecker_layout() {
        let id = Op2::identity();
        for site in 1..=3 {
            assert_eq!(embed_single_site(&id, site, 3).unwrap(), Operator::identity(8, 8));
        }
        let p = Op2::new(ONE, ZERO, ZERO, ZERO);
        let e = embed_single_site(&p, 1, 2).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| e[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, 1.0, 0.0, 0.0]);

        let flipped = embed_single_site(&sigma_x(), 3, 3).unwrap() * StateVector::basis(3, 0).to_dvector();
        assert_eq!(flipped, StateVector::basis(3, 1).to_dvector());

        assert!(matches!(
            embed_single_site(&id, 0, 3),
            Err(Error::SiteOutOfRange { .. })
        ));
        assert!(matches!(
            embed_single_site(&id, 4, 3),
            Err(Error::SiteOutOfRange { .. })
        ));
    }

    #[test]
    fn disjoint_embeddings_commute() {
        let a = embed_single_site(&sigma_x(), 1, 3).unwrap();
        let b = embed_single_site(&sigma_y(), 3, 3).unwrap();
        assert_eq!(&a * &b, &b * &a);
    }

    #[test]
    fn strided_apply_matches_dense_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 4;
        let amps: Vec<C64> = (0..16).map(|_| C64::new(rng.random(), rng.random())).collect();
        let op = Op2::new(
            C64::new(0.3, 0.1),
            C64::new(-0.2, 0.5),
            C64::new(0.7, 0.0),
            C64::new(0.1, -0.4),
        );
        for site in 1..=n {
            let mut s = StateVector::from_amplitudes(n, amps.clone()).unwrap();
            s.apply_single_site(&op, site).unwrap();
            let dense = embed_single_site(&op, site, n).unwrap() * DVector::from_column_slice(&amps);
            for (x, y) in s.amplitudes().iter().zip(dense.iter()) {
                assert!((x - y).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn diagonal_input_gives_sorted_diagonal_and_permutation() {
        let h = Operator::from_diagonal(&DVector::from_vec(vec![
            C64::new(3.0, 0.0),
            C64::new(-1.0, 0.0),
            C64::new(2.0, 0.0),
        ]));
        let d = diagonalize(&h).unwrap();
        assert_eq!(d.eigenvalues(), &[-1.0, 2.0, 3.0]);
        let v = d.eigenvectors();
        for c in 0..3 {
            let ones = (0..3).filter(|&r| v[(r, c)] == ONE).count();
            let zeros = (0..3).filter(|&r| v[(r, c)] == ZERO).count();
            assert_eq!((ones, zeros), (1, 2));
        }
    }

    #[test]
    fn random_hermitian_reconstructs() {
        for (dim, seed) in [(5, 1), (16, 2), (33, 3)] {
            let h = random_hermitian(dim, seed);
            let d = diagonalize(&h).unwrap();
            assert!(d.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
            assert!(max_entry(&(d.reconstruct() - &h)) < 1e-10);
            let v = d.eigenvectors();
            assert!(max_entry(&(v.adjoint() * &v - Operator::identity(dim, dim))) < 1e-10);
        }
    }

    #[test]
    fn chain_hamiltonians_split_into_blocks() {
        for (coupling, blocks) in [(Coupling::IsingZ, 64), (Coupling::Heisenberg, 7), (Coupling::IsingX, 2)] {
            let h = build_static_hamiltonian(&config(6, coupling, 0.8, 1.0)).unwrap();
            let d = diagonalize(&h).unwrap();
            assert_eq!(d.block_count(), blocks, "{coupling}");
            assert!(max_entry(&(d.reconstruct() - &h)) < 1e-10);
            let v = d.eigenvectors();
            assert!(max_entry(&(v.adjoint() * &v - Operator::identity(64, 64))) < 1e-10);
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut h = random_hermitian(4, 9);
        h[(0, 1)] += C64::new(1e-6, 0.0);
        assert!(matches!(diagonalize(&h), Err(Error::NotHermitian(_))));
    }

    /// Scaling-and-squaring Taylor exponential, independent of the eigensolver.
    fn expm_taylor(a: &Operator) -> Operator {
        let norm = a.iter().map(|z| z.norm()).sum::<f64>();
        let squarings = (norm.log2().ceil().max(0.0) as u32) + 4;
        let scaled = a * C64::new(0.5f64.powi(squarings as i32), 0.0);
        let dim = a.nrows();
        let mut term = Operator::identity(dim, dim);
        let mut sum = term.clone();
        for k in 1..30 {
            term = &term * &scaled * C64::new(1.0 / k as f64, 0.0);
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn free_evolution_matches_taylor_exponential() {
        let i = C64::new(0.0, 1.0);
        for coupling in [Coupling::Heisenberg, Coupling::IsingX, Coupling::IsingZ] {
            let h = build_static_hamiltonian(&config(3, coupling, 0.9, 1.4)).unwrap();
            let d = diagonalize(&h).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let mut s = StateVector::from_amplitudes(3, (0..8).map(|_| C64::new(rng.random(), rng.random())).collect())
                .unwrap();
            s.normalize();
            let dt = 2.3;
            let got = free_evolution_apply(&d, dt, &s);
            let want = expm_taylor(&(&h * (-i * dt))) * s.to_dvector();
            for (x, y) in got.amplitudes().iter().zip(want.iter()) {
                assert!((x - y).norm() < 1e-12, "{coupling}");
            }
        }
        let h = random_hermitian(8, 21);
        let d = diagonalize(&h).unwrap();
        let s = StateVector::basis(3, 5);
        let got = free_evolution_apply(&d, 0.7, &s);
        let want = expm_taylor(&(&h * (-i * 0.7))) * s.to_dvector();
        for (x, y) in got.amplitudes().iter().zip(want.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn free_evolution_edge_cases() {
        let h = build_static_hamiltonian(&config(3, Coupling::Heisenberg, 1.0, 1.0)).unwrap();
        let d = diagonalize(&h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut s = StateVector::from_amplitudes(
            3,
            (0..8)
                .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect(),
        )
        .unwrap();
        s.normalize();
        assert_eq!(free_evolution_apply(&d, 0.0, &s), s);
        assert_abs_diff_eq!(free_evolution_apply(&d, 17.3, &s).norm(), 1.0, epsilon = 1e-12);

        let hz = build_static_hamiltonian(&config(3, Coupling::IsingZ, 1.0, 1.0)).unwrap();
        let dz = diagonalize(&hz).unwrap();
        let up = StateVector::basis(3, 0);
        let out = free_evolution_apply(&dz, 1.9, &up);
        assert_abs_diff_eq!(out.amplitudes()[0].norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn config_validation() {
        let mut cfg = config(3, Coupling::Heisenberg, 1.0, 1.0);
        assert!(cfg.validate().is_ok());
        cfg.initial_states[1] = SpinState::new(ONE, ONE);
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig { .. })));
        cfg.initial_states.pop();
        assert!(cfg.validate().is_err());
    }
}
