//! Second-order time-evolution operators built from a time-dependent
//! interaction `V(t)` by composite trapezoid quadrature on a uniform grid.
//!
//! With `A(t) = int_0^t V(t') dt'` accumulated as a running trapezoid sum,
//! the two Magnus pieces are
//!
//! ```text
//! M1 = (1/ih) A(t)
//! M2 = (1/2) (1/ih)^2 int_0^t [V(t'), A(t')] dt'
//! ```
//!
//! and the second-order Dyson (time-dependent perturbation theory)
//! propagator is `1 + (1/ih) A(t) + (1/ih)^2 int_0^t V(t') A(t') dt'`.
//! Both nested integrals are reduced to a single pass over the grid, so the
//! cost is O(steps) commutators or products.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expm::matrix_exponential;
use crate::operator::{commutator, Operator};
use crate::space::spaces_match;

/// Which second-order propagator a numeric amplitude is computed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagatorKind {
    Magnus2Series,
    Magnus2Exponential,
    Dyson2,
    StepOracle,
}

impl PropagatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Magnus2Series => "magnus2-series",
            Self::Magnus2Exponential => "magnus2-exponential",
            Self::Dyson2 => "dyson2",
            Self::StepOracle => "step-oracle",
        }
    }
}

impl std::str::FromStr for PropagatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "magnus2-series" => Ok(Self::Magnus2Series),
            "magnus2-exponential" => Ok(Self::Magnus2Exponential),
            "dyson2" => Ok(Self::Dyson2),
            "step-oracle" => Ok(Self::StepOracle),
            other => Err(Error::Config(format!(
                "unknown propagator kind `{other}` (expected magnus2-series, \
                 magnus2-exponential, dyson2, or step-oracle)"
            ))),
        }
    }
}

/// Uniform time grid on `[0, t_end]` with `steps + 1` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, steps: usize) -> Result<Self> {
        if t_end <= 0.0 || !t_end.is_finite() {
            return Err(Error::Config(format!("grid end time {t_end} must be positive")));
        }
        if steps < 2 {
            return Err(Error::Config(format!("grid needs at least 2 steps, got {steps}")));
        }
        Ok(Self { t_end, steps })
    }

    /// Like [`new`](Self::new), but nudges `t_end` by half a step while any
    /// node coincides with `point` (used to keep light-cone points off the
    /// grid).
    pub fn avoiding(t_end: f64, steps: usize, point: f64) -> Result<Self> {
        let mut grid = Self::new(t_end, steps)?;
        for _ in 0..4 {
            if !grid.has_node_at(point) {
                return Ok(grid);
            }
            grid = Self::new(grid.t_end + grid.dt() / 2.0, steps)?;
        }
        Ok(grid)
    }

    fn has_node_at(&self, point: f64) -> bool {
        let tol = self.dt() * 1e-9;
        (0..=self.steps).any(|k| (self.node(k) - point).abs() < tol)
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.steps as f64
    }

    pub fn node_count(&self) -> usize {
        self.steps + 1
    }

    pub fn node(&self, k: usize) -> f64 {
        self.t_end * (k as f64 / self.steps as f64)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.node(k)).collect()
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        (self.node(k) + self.node(k + 1)) / 2.0
    }
}

/// The pair of anti-Hermitian exponent terms of the second-order Magnus
/// expansion.
#[derive(Debug, Clone)]
pub struct MagnusPieces {
    pub m1: Operator,
    pub m2: Operator,
}

fn check_sample(v: &Operator, first: &Operator, t: f64) -> Result<()> {
    if !spaces_match(v.space(), first.space()) {
        return Err(Error::Shape(format!(
            "potential sample at t = {t} lives on a different space"
        )));
    }
    let tol = 1e-12 * (1.0 + v.max_abs());
    if !v.is_hermitian(tol) {
        return Err(Error::Config(format!(
            "potential sample at t = {t} is not Hermitian"
        )));
    }
    Ok(())
}

/// Magnus pieces by composite trapezoid quadrature, with the inner integral
/// carried as a running cumulative sum.
pub fn magnus2_pieces<F>(v: F, grid: &TimeGrid, hbar: f64) -> Result<MagnusPieces>
where
    F: Fn(f64) -> Operator,
{
    let dt = grid.dt();
    let half = Complex64::new(dt / 2.0, 0.0);
    let v0 = v(0.0);
    check_sample(&v0, &v0, 0.0)?;
    let mut running = Operator::zeros(v0.space().clone()); // A(t_k)
    let mut m2_int = Operator::zeros(v0.space().clone());
    let mut prev_v = v0;
    let mut prev_inner = Operator::zeros(prev_v.space().clone()); // [V(0), A(0)] = 0
    for k in 1..=grid.steps() {
        let t = grid.node(k);
        let vk = v(t);
        check_sample(&vk, &prev_v, t)?;
        running = &running + &(&(&prev_v + &vk) * half);
        let inner = commutator(&vk, &running)?;
        m2_int = &m2_int + &(&(&prev_inner + &inner) * half);
        prev_v = vk;
        prev_inner = inner;
    }
    let m1 = &running * Complex64::new(0.0, -1.0 / hbar);
    let m2 = &m2_int * Complex64::new(-0.5 / (hbar * hbar), 0.0);
    Ok(MagnusPieces { m1, m2 })
}

/// Truncated series form `1 + M1 + M2`.
pub fn magnus2_series_propagator(pieces: &MagnusPieces) -> Operator {
    let id = Operator::identity(pieces.m1.space().clone());
    &(&id + &pieces.m1) + &pieces.m2
}

/// Exponential form `exp(M1 + M2)`; unitary whenever the pieces are
/// anti-Hermitian.
pub fn magnus2_exponential_propagator(pieces: &MagnusPieces) -> Result<Operator> {
    matrix_exponential(&(&pieces.m1 + &pieces.m2))
}

/// Second-order Dyson propagator
/// `1 + (1/ih) int V + (1/ih)^2 int_0^t dt' int_0^t' dt'' V(t')V(t'')`,
/// using the same quadrature scheme as [`magnus2_pieces`].
pub fn dyson2_propagator<F>(v: F, grid: &TimeGrid, hbar: f64) -> Result<Operator>
where
    F: Fn(f64) -> Operator,
{
    let dt = grid.dt();
    let half = Complex64::new(dt / 2.0, 0.0);
    let v0 = v(0.0);
    check_sample(&v0, &v0, 0.0)?;
    let mut running = Operator::zeros(v0.space().clone());
    let mut ordered_int = Operator::zeros(v0.space().clone());
    let mut prev_v = v0;
    let mut prev_inner = Operator::zeros(prev_v.space().clone());
    for k in 1..=grid.steps() {
        let t = grid.node(k);
        let vk = v(t);
        check_sample(&vk, &prev_v, t)?;
        running = &running + &(&(&prev_v + &vk) * half);
        let inner = vk.dot(&running);
        ordered_int = &ordered_int + &(&(&prev_inner + &inner) * half);
        prev_v = vk;
        prev_inner = inner;
    }
    let id = Operator::identity(running.space().clone());
    let first = &running * Complex64::new(0.0, -1.0 / hbar);
    let second = &ordered_int * Complex64::new(-1.0 / (hbar * hbar), 0.0);
    Ok(&(&id + &first) + &second)
}

/// Numerically "exact" oracle: the ordered product of midpoint-rule
/// exponentials `exp(V(t_mid) dt / ih)`, later factors applied on the left.
/// Unitary by construction and second-order accurate.
pub fn stepping_propagator<F>(v: F, grid: &TimeGrid, hbar: f64) -> Result<Operator>
where
    F: Fn(f64) -> Operator,
{
    let factor = Complex64::new(0.0, -grid.dt() / hbar);
    let v0 = v(grid.midpoint(0));
    check_sample(&v0, &v0, grid.midpoint(0))?;
    let mut u = matrix_exponential(&(&v0 * factor))?;
    for k in 1..grid.steps() {
        let t = grid.midpoint(k);
        let vk = v(t);
        check_sample(&vk, &v0, t)?;
        let exp_k = matrix_exponential(&(&vk * factor))?;
        u = exp_k.dot(&u);
    }
    Ok(u)
}

/// `U^dag U - 1`, the measure of non-unitarity of an approximate propagator.
pub fn unitarity_defect(u: &Operator) -> Operator {
    let id = Operator::identity(u.space().clone());
    &u.adjoint().dot(u) - &id
}
