//! Dense complex operators over a [`SpaceDescriptor`] basis, with the
//! elementary ladder constructions every model in this crate is built from.

use std::ops::{Add, Mul, Neg, Sub};

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::space::{spaces_match, Space, StateVector};

/// Dense complex matrix indexed by a space's basis.
#[derive(Debug, Clone)]
pub struct Operator {
    space: Space,
    entries: Array2<Complex64>,
}

impl Operator {
    pub fn from_entries(space: Space, entries: Array2<Complex64>) -> Result<Self> {
        let dim = space.dimension();
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::Shape(format!(
                "matrix is {}x{} but the space dimension is {dim}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self { space, entries })
    }

    pub fn zeros(space: Space) -> Self {
        let dim = space.dimension();
        Self {
            space,
            entries: Array2::zeros((dim, dim)),
        }
    }

    pub fn identity(space: Space) -> Self {
        let dim = space.dimension();
        Self {
            space,
            entries: Array2::from_diag_elem(dim, Complex64::new(1.0, 0.0)),
        }
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub(crate) fn entries_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.entries
    }

    pub fn dimension(&self) -> usize {
        self.space.dimension()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Operator {
        Operator {
            space: self.space.clone(),
            entries: self.entries.t().mapv(|z| z.conj()),
        }
    }

    /// Matrix product; panics on space mismatch (checked call sites use
    /// [`commutator`] or [`transition_amplitude`] instead).
    pub fn dot(&self, other: &Operator) -> Operator {
        assert!(
            spaces_match(&self.space, &other.space),
            "operator product across different spaces"
        );
        Operator {
            space: self.space.clone(),
            entries: self.entries.dot(&other.entries),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Operator {
        Operator {
            space: self.space.clone(),
            entries: self.entries.mapv(|z| z * factor),
        }
    }

    /// Apply to a state vector.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if !spaces_match(&self.space, state.space()) {
            return Err(Error::Shape("operator applied across spaces".into()));
        }
        let out: Array1<Complex64> = self.entries.dot(state.amplitudes());
        StateVector::new(self.space.clone(), out)
    }

    pub fn fro_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.entries
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entrywise deviation from the conjugate transpose.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.entries.nrows() {
            for j in i..self.entries.ncols() {
                let d = (self.entries[[i, j]] - self.entries[[j, i]].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn is_anti_hermitian(&self, tol: f64) -> bool {
        let mut worst = 0.0f64;
        for i in 0..self.entries.nrows() {
            for j in i..self.entries.ncols() {
                let d = (self.entries[[i, j]] + self.entries[[j, i]].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst <= tol
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert!(spaces_match(&self.space, &rhs.space), "operator sum across spaces");
        Operator {
            space: self.space.clone(),
            entries: &self.entries + &rhs.entries,
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert!(spaces_match(&self.space, &rhs.space), "operator difference across spaces");
        Operator {
            space: self.space.clone(),
            entries: &self.entries - &rhs.entries,
        }
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul<Complex64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: Complex64) -> Operator {
        self.scale(rhs)
    }
}

/// Atomic lowering operator `sigma = |b><a|` on the given site, tensored with
/// the identity everywhere else.
pub fn atom_lowering(space: &Space, site: usize) -> Result<Operator> {
    if site >= space.atom_count() {
        return Err(Error::Index(format!(
            "atom site {site} in a space with {} atoms",
            space.atom_count()
        )));
    }
    let mut op = Operator::zeros(space.clone());
    let bit = 1usize << site;
    for tuple_index in 0..space.tuple_count() {
        for atomic in 0..space.atomic_dim() {
            if atomic & bit != 0 {
                let row = space.index_of(tuple_index, atomic & !bit);
                let col = space.index_of(tuple_index, atomic);
                op.entries[[row, col]] = Complex64::new(1.0, 0.0);
            }
        }
    }
    Ok(op)
}

/// Adjoint of [`atom_lowering`]: `sigma^dag = |a><b|` on the given site.
pub fn atom_raising(space: &Space, site: usize) -> Result<Operator> {
    Ok(atom_lowering(space, site)?.adjoint())
}

/// Bosonic lowering operator for one mode, restricted to occupation tuples
/// inside the total-photon cap. Matrix elements are `sqrt(n)`.
pub fn mode_annihilation(space: &Space, mode_index: usize) -> Result<Operator> {
    if mode_index >= space.modes().len() {
        return Err(Error::Index(format!(
            "mode {mode_index} in a space with {} modes",
            space.modes().len()
        )));
    }
    let mut op = Operator::zeros(space.clone());
    for (tuple_index, tuple) in space.tuples().iter().enumerate() {
        let n = tuple[mode_index];
        if n == 0 {
            continue;
        }
        let mut lowered = tuple.clone();
        lowered[mode_index] = n - 1;
        let target = space
            .tuple_index(&lowered)
            .expect("lowering stays inside the cap");
        let val = Complex64::new((n as f64).sqrt(), 0.0);
        for atomic in 0..space.atomic_dim() {
            let row = space.index_of(target, atomic);
            let col = space.index_of(tuple_index, atomic);
            op.entries[[row, col]] = val;
        }
    }
    Ok(op)
}

/// Adjoint of [`mode_annihilation`]. Transitions out of the photon cap are
/// dropped by the truncation.
pub fn mode_creation(space: &Space, mode_index: usize) -> Result<Operator> {
    Ok(mode_annihilation(space, mode_index)?.adjoint())
}

/// Commutator `AB - BA`.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    if !spaces_match(a.space(), b.space()) {
        return Err(Error::Shape("commutator across different spaces".into()));
    }
    Ok(&a.dot(b) - &b.dot(a))
}

/// Matrix element `<bra|U|ket>`.
pub fn transition_amplitude(
    bra: &StateVector,
    u: &Operator,
    ket: &StateVector,
) -> Result<Complex64> {
    if !spaces_match(bra.space(), u.space()) || !spaces_match(ket.space(), u.space()) {
        return Err(Error::Shape("transition amplitude across different spaces".into()));
    }
    let applied = u.apply(ket)?;
    bra.inner(&applied)
}
