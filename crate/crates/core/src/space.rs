//! Truncated atom-field Hilbert spaces with a deterministic basis ordering.
//!
//! A space is the tensor product of `atom_count` two-level atoms and one
//! bosonic mode per listed frequency, truncated by a cap on the *total*
//! photon number. The basis index decomposes as
//!
//! ```text
//! index = tuple_index * 2^atom_count + atomic_index
//! ```
//!
//! so the atomic index varies fastest. Atomic index bit `j` is the state of
//! atom `j` (0 = ground, 1 = excited). Photon occupation tuples are
//! enumerated by total photon number, and within one total the count of the
//! first mode descends, e.g. for two modes and a cap of 1: `(0,0), (1,0),
//! (0,1)`. The ordering is part of the contract: serialized matrices are
//! comparable across runs.

use std::collections::BTreeMap;
use std::sync::Arc;

use ndarray::Array1;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Propagation direction of a field mode in the one-dimensional box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    LeftMoving,
    RightMoving,
}

/// A single field mode: angular frequency plus moving direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFrequency {
    pub nu: f64,
    pub branch: Branch,
}

impl ModeFrequency {
    pub fn new(nu: f64, branch: Branch) -> Self {
        Self { nu, branch }
    }
}

/// State of a single two-level atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomState {
    /// Ground state, written `|b>`.
    Ground,
    /// Excited state, written `|a>`.
    Excited,
}

/// Descriptor of a truncated tensor-product basis.
///
/// Construction fixes the basis enumeration once; operators and state
/// vectors carry an `Arc` of their descriptor so space agreement is cheap to
/// check.
#[derive(Debug)]
pub struct SpaceDescriptor {
    atom_count: usize,
    modes: Vec<ModeFrequency>,
    max_total_photons: usize,
    tuples: Vec<Vec<usize>>,
    tuple_lookup: BTreeMap<Vec<usize>, usize>,
}

pub type Space = Arc<SpaceDescriptor>;

impl PartialEq for SpaceDescriptor {
    fn eq(&self, other: &Self) -> bool {
        self.atom_count == other.atom_count
            && self.modes == other.modes
            && self.max_total_photons == other.max_total_photons
    }
}

/// Build a space descriptor with the deterministic basis enumeration.
///
/// `atom_count` may be zero for a pure field space (used by single-mode
/// models with no atoms). Every frequency must be positive.
pub fn build_space(
    atom_count: usize,
    mode_frequencies: &[ModeFrequency],
    max_total_photons: usize,
) -> Result<Space> {
    for (i, m) in mode_frequencies.iter().enumerate() {
        if m.nu <= 0.0 || !m.nu.is_finite() {
            return Err(Error::Config(format!(
                "mode {i} has non-positive frequency {}",
                m.nu
            )));
        }
    }
    let tuples = enumerate_tuples(mode_frequencies.len(), max_total_photons);
    let tuple_lookup = tuples
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    Ok(Arc::new(SpaceDescriptor {
        atom_count,
        modes: mode_frequencies.to_vec(),
        max_total_photons,
        tuples,
        tuple_lookup,
    }))
}

/// Occupation tuples with total photon number at most `cap`, enumerated by
/// total, the first mode's count descending within one total.
fn enumerate_tuples(mode_count: usize, cap: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; mode_count];
    for total in 0..=cap {
        fill_tuples(&mut out, &mut current, 0, total);
    }
    out
}

fn fill_tuples(
    out: &mut Vec<Vec<usize>>,
    current: &mut Vec<usize>,
    mode: usize,
    remaining: usize,
) {
    if mode == current.len() {
        if remaining == 0 {
            out.push(current.clone());
        }
        return;
    }
    if mode == current.len() - 1 {
        current[mode] = remaining;
        out.push(current.clone());
        current[mode] = 0;
        return;
    }
    for n in (0..=remaining).rev() {
        current[mode] = n;
        fill_tuples(out, current, mode + 1, remaining - n);
        current[mode] = 0;
    }
}

impl SpaceDescriptor {
    pub fn atom_count(&self) -> usize {
        self.atom_count
    }

    pub fn modes(&self) -> &[ModeFrequency] {
        &self.modes
    }

    pub fn max_total_photons(&self) -> usize {
        self.max_total_photons
    }

    pub fn atomic_dim(&self) -> usize {
        1 << self.atom_count
    }

    pub fn tuple_count(&self) -> usize {
        self.tuples.len()
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    pub fn dimension(&self) -> usize {
        self.atomic_dim() * self.tuple_count()
    }

    /// Global basis index of (photon tuple, atomic configuration).
    pub fn index_of(&self, tuple_index: usize, atomic_index: usize) -> usize {
        tuple_index * self.atomic_dim() + atomic_index
    }

    /// Inverse of [`index_of`](Self::index_of).
    pub fn split_index(&self, index: usize) -> (usize, usize) {
        (index / self.atomic_dim(), index % self.atomic_dim())
    }

    pub fn tuple_index(&self, tuple: &[usize]) -> Option<usize> {
        self.tuple_lookup.get(tuple).copied()
    }
}

/// Dense complex state vector over a [`SpaceDescriptor`] basis.
#[derive(Debug, Clone)]
pub struct StateVector {
    space: Space,
    amplitudes: Array1<Complex64>,
}

impl StateVector {
    pub fn new(space: Space, amplitudes: Array1<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.dimension() {
            return Err(Error::Shape(format!(
                "amplitude length {} does not match space dimension {}",
                amplitudes.len(),
                space.dimension()
            )));
        }
        Ok(Self { space, amplitudes })
    }

    pub fn zero(space: Space) -> Self {
        let dim = space.dimension();
        Self {
            space,
            amplitudes: Array1::zeros(dim),
        }
    }

    /// Basis state |atoms, photon tuple>, e.g. `|b,a,0>`.
    pub fn basis(space: Space, atoms: &[AtomState], photons: &[usize]) -> Result<Self> {
        if atoms.len() != space.atom_count() {
            return Err(Error::Shape(format!(
                "{} atom states given for a space with {} atoms",
                atoms.len(),
                space.atom_count()
            )));
        }
        if photons.len() != space.modes().len() {
            return Err(Error::Shape(format!(
                "{} occupation numbers given for a space with {} modes",
                photons.len(),
                space.modes().len()
            )));
        }
        let atomic_index = atoms
            .iter()
            .enumerate()
            .map(|(j, s)| match s {
                AtomState::Ground => 0,
                AtomState::Excited => 1 << j,
            })
            .sum::<usize>();
        let tuple_index = space.tuple_index(photons).ok_or_else(|| {
            Error::Config(format!(
                "occupation tuple {photons:?} exceeds the photon cap {}",
                space.max_total_photons()
            ))
        })?;
        let mut v = Self::zero(space.clone());
        v.amplitudes[space.index_of(tuple_index, atomic_index)] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn amplitudes(&self) -> &Array1<Complex64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Hermitian inner product `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if !spaces_match(&self.space, &other.space) {
            return Err(Error::Shape("inner product across different spaces".into()));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// Two spaces agree when they are the same allocation or describe the same basis.
pub fn spaces_match(a: &Space, b: &Space) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}
