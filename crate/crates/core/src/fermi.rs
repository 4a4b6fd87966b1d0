//! Two-atom emission-absorption model in a one-dimensional box: the classic
//! causality question of whether an initially ground-state atom can feel an
//! initially excited atom before light transit time `R/c`.
//!
//! Two two-level atoms sit at `z_L < z_R`, coupled to left- and right-moving
//! box modes `nu_n = n 2 pi c / L` with weights `g_j sqrt(nu)`. The
//! excitation amplitude from `|b,a,0>` to `|a,b,0>` is carried entirely by
//! the commutator piece `M2` of the second-order Magnus propagator (a single
//! interaction factor flips only one atom), so
//!
//! ```text
//! A(t) = (1/2) (1/ih)^2  int_0^t dt' int_0^t' dt''  C(t', t'')
//! ```
//!
//! where `C` is the two-point commutator matrix element. Summing the mode
//! ladder in closed form factorizes `C` into atomic phases times a mode sum
//! that concentrates on the light cone as the mode count grows:
//!
//! ```text
//! C(t', t'') = -4 i g_L g_R (P + Q) sum_n nu_n sin(nu_n (t'-t'')) cos(nu_n R/c)
//! P = e^{i(w_L t' - w_R t'')},  Q = e^{i(w_L t'' - w_R t')}
//! ```
//!
//! In the continuum limit the sum becomes a derivative of a light-cone
//! delta, and the double time integral collapses to the closed form
//! implemented by [`amplitude_analytic`]: exactly zero before `R/c`, a sharp
//! front at the cone, and a two-frequency beat after it. Keeping only the
//! co-rotating interaction terms (the rotating-wave approximation) destroys
//! the delta structure and with it causality; [`kernel_discrete_terms`]
//! exposes the full, co-rotating, and counter-rotating kernels so the
//! cancellation is testable.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expm::expm_array;
use crate::operator::{transition_amplitude, Operator};
use crate::propagators::{PropagatorKind, TimeGrid};
use crate::space::{build_space, AtomState, Branch, ModeFrequency, Space, StateVector};

/// Convention note carried in run metadata and series provenance.
pub const M2_CONVENTION_NOTE: &str = "Magnus M2 carries factor 1/2";

/// Parameters of the two-atom model. Frequencies are angular; positions and
/// the box length share the unit system fixed by `c`, and couplings derive
/// from the dipole moments as `g_j = dipole_j sqrt(hbar / (epsilon0 L))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FermiConfig {
    pub omega_l: f64,
    pub omega_r: f64,
    pub z_l: f64,
    pub z_r: f64,
    pub dipole_l: f64,
    pub dipole_r: f64,
    pub epsilon0: f64,
    pub hbar: f64,
    pub c: f64,
    pub box_length: f64,
    pub modes_per_branch: usize,
    pub photon_cutoff: usize,
    /// Full-matrix paths refuse spaces larger than this.
    pub dimension_ceiling: usize,
}

impl FermiConfig {
    /// Config with documented defaults: atoms at `0` and `separation`, unit
    /// dipoles and natural constants, box length `8 R`, 256 modes per
    /// branch, photon cutoff 2.
    pub fn new(omega_l: f64, omega_r: f64, separation: f64) -> Result<Self> {
        let cfg = Self {
            omega_l,
            omega_r,
            z_l: 0.0,
            z_r: separation,
            dipole_l: 1.0,
            dipole_r: 1.0,
            epsilon0: 1.0,
            hbar: 1.0,
            c: 1.0,
            box_length: 8.0 * separation,
            modes_per_branch: 256,
            photon_cutoff: 2,
            dimension_ceiling: 4096,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega_l", self.omega_l),
            ("omega_r", self.omega_r),
            ("epsilon0", self.epsilon0),
            ("hbar", self.hbar),
            ("c", self.c),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.dipole_l.is_finite() || !self.dipole_r.is_finite() {
            return Err(Error::Config("dipole moments must be finite".into()));
        }
        let r = self.separation();
        if !r.is_finite() || r <= 0.0 {
            return Err(Error::Config(format!(
                "separation z_r - z_l must be positive, got {r}"
            )));
        }
        if self.box_length < 4.0 * r {
            return Err(Error::Config(format!(
                "box length {} must be at least 4 separations ({})",
                self.box_length,
                4.0 * r
            )));
        }
        if self.modes_per_branch < 1 {
            return Err(Error::Config("at least one mode per branch is required".into()));
        }
        if self.dimension_ceiling < 4 {
            return Err(Error::Config("dimension ceiling is too small".into()));
        }
        Ok(())
    }

    pub fn separation(&self) -> f64 {
        self.z_r - self.z_l
    }

    /// Light transit time `R / c`.
    pub fn light_cone_time(&self) -> f64 {
        self.separation() / self.c
    }

    /// Mode spacing `2 pi c / L`.
    pub fn delta_nu(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.c / self.box_length
    }

    pub fn coupling_l(&self) -> f64 {
        self.dipole_l * (self.hbar / (self.epsilon0 * self.box_length)).sqrt()
    }

    pub fn coupling_r(&self) -> f64 {
        self.dipole_r * (self.hbar / (self.epsilon0 * self.box_length)).sqrt()
    }

    /// The 2N modes: the left-moving ladder first, then the right-moving one.
    pub fn mode_list(&self) -> Vec<ModeFrequency> {
        let dv = self.delta_nu();
        let mut modes = Vec::with_capacity(2 * self.modes_per_branch);
        for branch in [Branch::LeftMoving, Branch::RightMoving] {
            for n in 1..=self.modes_per_branch {
                modes.push(ModeFrequency::new(n as f64 * dv, branch));
            }
        }
        modes
    }

    /// Dimension the full-matrix space would have, without building it:
    /// `4 * C(2N + cap, cap)` by stars and bars.
    pub fn state_dimension(&self) -> usize {
        let m = 2 * self.modes_per_branch;
        let mut tuples: usize = 1;
        for k in 1..=self.photon_cutoff {
            tuples = tuples.saturating_mul(m + k) / k;
        }
        4usize.saturating_mul(tuples)
    }

    /// Build the full-matrix space, refusing dimensions above the ceiling.
    pub fn space(&self) -> Result<Space> {
        self.validate()?;
        let dimension = self.state_dimension();
        if dimension > self.dimension_ceiling {
            return Err(Error::DimensionCeiling {
                dimension,
                ceiling: self.dimension_ceiling,
            });
        }
        build_space(2, &self.mode_list(), self.photon_cutoff)
    }

    /// `|b,a,0>`: left atom ground, right atom excited, no photons.
    pub fn initial_state(&self, space: &Space) -> Result<StateVector> {
        let vacuum = vec![0usize; space.modes().len()];
        StateVector::basis(space.clone(), &[AtomState::Ground, AtomState::Excited], &vacuum)
    }

    /// `|a,b,0>`: left atom excited, right atom ground, no photons.
    pub fn final_state(&self, space: &Space) -> Result<StateVector> {
        let vacuum = vec![0usize; space.modes().len()];
        StateVector::basis(space.clone(), &[AtomState::Excited, AtomState::Ground], &vacuum)
    }
}

// ---------------------------------------------------------------------------
// Interaction matrix assembly
// ---------------------------------------------------------------------------

/// Sparse entry lists for one mode of a Fermi space.
struct ModeTable {
    nu: f64,
    /// +1 for left-moving, -1 for right-moving spatial phase.
    sign: f64,
    /// Tuple-level annihilation entries (row, col, sqrt n).
    ann: Vec<(u32, u32, f64)>,
}

struct FermiTables {
    modes: Vec<ModeTable>,
    /// Atomic lowering entries per site: (row, col) with value 1.
    sigma: [Vec<(u32, u32)>; 2],
    atomic_dim: u32,
}

fn build_tables(space: &Space) -> FermiTables {
    let mut modes = Vec::with_capacity(space.modes().len());
    for (m, mode) in space.modes().iter().enumerate() {
        let mut ann = Vec::new();
        for (ti, tuple) in space.tuples().iter().enumerate() {
            let n = tuple[m];
            if n == 0 {
                continue;
            }
            let mut lowered = tuple.clone();
            lowered[m] = n - 1;
            let target = space.tuple_index(&lowered).expect("inside the cap");
            ann.push((target as u32, ti as u32, (n as f64).sqrt()));
        }
        modes.push(ModeTable {
            nu: mode.nu,
            sign: match mode.branch {
                Branch::LeftMoving => 1.0,
                Branch::RightMoving => -1.0,
            },
            ann,
        });
    }
    let mut sigma = [Vec::new(), Vec::new()];
    for (site, list) in sigma.iter_mut().enumerate() {
        let bit = 1u32 << site;
        for atomic in 0..space.atomic_dim() as u32 {
            if atomic & bit != 0 {
                list.push((atomic & !bit, atomic));
            }
        }
    }
    FermiTables {
        modes,
        sigma,
        atomic_dim: space.atomic_dim() as u32,
    }
}

/// Fill `out` with the COO entries of `V(t)` (or its rotating-wave
/// truncation).
fn interaction_entries(
    config: &FermiConfig,
    tables: &FermiTables,
    t: f64,
    rwa: bool,
    out: &mut Vec<(u32, u32, Complex64)>,
) {
    out.clear();
    let adim = tables.atomic_dim;
    let sites = [
        (config.omega_l, config.z_l, config.coupling_l()),
        (config.omega_r, config.z_r, config.coupling_r()),
    ];
    for (site, &(omega, z, g)) in sites.iter().enumerate() {
        for mode in &tables.modes {
            // nu (c t + sign * z) / c
            let chi = mode.nu * (t + mode.sign * z / config.c);
            let base = g * mode.nu.sqrt();
            let atom_phase = Complex64::from_polar(1.0, -omega * t);
            let field_phase = Complex64::from_polar(1.0, -chi);
            // sigma a, sigma a^dag, sigma^dag a, sigma^dag a^dag
            let c_ss_a = base * atom_phase * field_phase;
            let c_ss_ad = base * atom_phase * field_phase.conj();
            let c_sd_a = base * atom_phase.conj() * field_phase;
            let c_sd_ad = base * atom_phase.conj() * field_phase.conj();
            for &(ra, ca) in &tables.sigma[site] {
                for &(rf, cf, v) in &mode.ann {
                    if !rwa {
                        // counter-rotating: sigma a and sigma^dag a^dag
                        out.push((rf * adim + ra, cf * adim + ca, c_ss_a * v));
                        out.push((cf * adim + ca, rf * adim + ra, c_sd_ad * v));
                    }
                    // co-rotating: sigma a^dag and sigma^dag a
                    out.push((cf * adim + ra, rf * adim + ca, c_ss_ad * v));
                    out.push((rf * adim + ca, cf * adim + ra, c_sd_a * v));
                }
            }
        }
    }
}

fn coo_apply(entries: &[(u32, u32, Complex64)], input: &[Complex64], output: &mut [Complex64]) {
    output.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
    for &(r, c, v) in entries {
        output[r as usize] += v * input[c as usize];
    }
}

/// The interaction Hamiltonian `V(t)` as a dense operator on `space`.
///
/// With `rwa` set, only the co-rotating `sigma a^dag` and `sigma^dag a`
/// terms are kept. The result is Hermitian by construction.
pub fn fermi_interaction(
    config: &FermiConfig,
    space: &Space,
    t: f64,
    rwa: bool,
) -> Result<Operator> {
    config.validate()?;
    if space.atom_count() != 2 || space.modes().len() != 2 * config.modes_per_branch {
        return Err(Error::Shape(
            "space does not match the two-atom config that built it".into(),
        ));
    }
    let tables = build_tables(space);
    let mut entries = Vec::new();
    interaction_entries(config, &tables, t, rwa, &mut entries);
    let mut op = Operator::zeros(space.clone());
    {
        let m = op.entries_mut();
        for (r, c, v) in entries {
            m[[r as usize, c as usize]] += v;
        }
    }
    Ok(op)
}

// ---------------------------------------------------------------------------
// Discrete-mode kernel
// ---------------------------------------------------------------------------

/// Which interaction terms enter the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelTerms {
    /// Full interaction: the causal case.
    Full,
    /// Co-rotating only (the rotating-wave approximation).
    CoRotating,
    /// Counter-rotating only.
    CounterRotating,
}

/// One sample of the two-point commutator kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSample {
    pub t_prime: f64,
    pub t_double_prime: f64,
    pub value: Complex64,
}

/// `<a,b,0| [V(t'), V(t'')] |b,a,0>` evaluated as a closed-form sum over the
/// 2N discrete modes; no matrices are built. The `rwa` flag selects the
/// co-rotating kernel.
pub fn kernel_discrete(
    config: &FermiConfig,
    t_prime: f64,
    t_double_prime: f64,
    rwa: bool,
) -> Result<Complex64> {
    let terms = if rwa { KernelTerms::CoRotating } else { KernelTerms::Full };
    kernel_discrete_terms(config, t_prime, t_double_prime, terms)
}

/// Kernel with an explicit choice of interaction terms; `Full` equals the
/// sum of the two rotating parts.
pub fn kernel_discrete_terms(
    config: &FermiConfig,
    t_prime: f64,
    t_double_prime: f64,
    terms: KernelTerms,
) -> Result<Complex64> {
    config.validate()?;
    let tau = t_prime - t_double_prime;
    let gg = config.coupling_l() * config.coupling_r();
    let p = Complex64::from_polar(1.0, config.omega_l * t_prime - config.omega_r * t_double_prime);
    let q = Complex64::from_polar(1.0, config.omega_l * t_double_prime - config.omega_r * t_prime);
    match terms {
        KernelTerms::Full => {
            let w = branch_sum(config, tau).im; // Im G = -sum nu sin cos
            Ok(Complex64::new(0.0, 4.0 * gg * w) * (p + q))
        }
        KernelTerms::CoRotating => {
            let g = branch_sum(config, tau);
            Ok((p * g - q * g.conj()) * (2.0 * gg))
        }
        KernelTerms::CounterRotating => {
            let g = branch_sum(config, tau);
            Ok((q * g - p * g.conj()) * (2.0 * gg))
        }
    }
}

/// `G(tau) = sum_n nu_n cos(nu_n R/c) e^{-i nu_n tau}`; the full kernel uses
/// `Im G = -sum_n nu_n cos(nu_n R/c) sin(nu_n tau)`.
fn branch_sum(config: &FermiConfig, tau: f64) -> Complex64 {
    let dv = config.delta_nu();
    let rc = config.light_cone_time();
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 1..=config.modes_per_branch {
        let nu = n as f64 * dv;
        sum += Complex64::from_polar(nu * (nu * rc).cos(), -nu * tau);
    }
    sum
}

/// Kernel sampled on a list of time pairs.
pub fn sample_kernel(
    config: &FermiConfig,
    pairs: &[(f64, f64)],
    terms: KernelTerms,
) -> Result<Vec<KernelSample>> {
    pairs
        .iter()
        .map(|&(tp, tpp)| {
            Ok(KernelSample {
                t_prime: tp,
                t_double_prime: tpp,
                value: kernel_discrete_terms(config, tp, tpp, terms)?,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Analytic amplitude
// ---------------------------------------------------------------------------

/// `(e^{i delta t} - e^{i delta rc}) / delta` with a series branch for the
/// near-degenerate regime, where the quotient cancels catastrophically.
fn difference_quotient(delta: f64, t: f64, rc: f64) -> Complex64 {
    if (delta * t).abs() < 1e-6 {
        dq_series(delta, t, rc)
    } else {
        dq_general(delta, t, rc)
    }
}

fn dq_general(delta: f64, t: f64, rc: f64) -> Complex64 {
    (Complex64::from_polar(1.0, delta * t) - Complex64::from_polar(1.0, delta * rc)) / delta
}

/// First-order expansion around delta = 0:
/// `e^{i delta rc} i u (1 + i delta u / 2)` with `u = t - rc`.
fn dq_series(delta: f64, t: f64, rc: f64) -> Complex64 {
    let u = t - rc;
    Complex64::from_polar(1.0, delta * rc)
        * Complex64::new(0.0, u)
        * Complex64::new(1.0, delta * u / 2.0)
}

/// The pre-derivative light-cone bracket
/// `theta(t - r/c) (e^{i w_R r/c} + e^{-i w_L r/c}) D(t, r)` with
/// `D = (e^{i delta t} - e^{i delta r/c}) / delta`, exposed with `r` free so
/// tests can difference it in `r` against the hand-differentiated closed
/// form in [`amplitude_analytic`].
pub fn amplitude_bracket(config: &FermiConfig, t: f64, r: f64) -> Complex64 {
    let rc = r / config.c;
    if t <= rc {
        return Complex64::new(0.0, 0.0);
    }
    let delta = config.omega_l - config.omega_r;
    let phases = Complex64::from_polar(1.0, config.omega_r * rc)
        + Complex64::from_polar(1.0, -config.omega_l * rc);
    phases * difference_quotient(delta, t, rc)
}

/// Closed-form excitation amplitude of the continuum model.
///
/// Exactly `0 + 0i` for `t < R/c`. For `t > R/c` the radial derivative of
/// the light-cone bracket is carried out analytically by product rule:
///
/// ```text
/// A(t) = (i kappa / c) [ (w_R e^{i w_R R/c} - w_L e^{-i w_L R/c}) D(t)
///                        - (e^{i w_L R/c} + e^{-i w_R R/c}) ]
/// kappa = dipole_l dipole_r / (2 hbar epsilon0)
/// D(t)  = (e^{i delta t} - e^{i delta R/c}) / delta,  delta = w_L - w_R
/// ```
///
/// The constant term is the sharp front at the cone; the `D` term beats at
/// the frequency difference. The carried `1/2` is the `M2` convention noted
/// in [`M2_CONVENTION_NOTE`], and the overall constant is the continuum
/// limit of the discrete-mode quadrature with couplings
/// `g_j = dipole_j sqrt(hbar / (epsilon0 L))`, so the numeric path converges
/// to this function as the mode ladder fills in.
///
/// The on-cone point `t = R/c` itself is excluded: there the step-function
/// derivative contributes a distribution, not a value.
pub fn amplitude_analytic(config: &FermiConfig, t: f64) -> Result<Complex64> {
    config.validate()?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Domain(format!("time must be non-negative, got {t}")));
    }
    let rc = config.light_cone_time();
    if (t - rc).abs() <= 4.0 * f64::EPSILON * rc.max(1.0) {
        return Err(Error::Domain(
            "the amplitude is singular on the light cone t = R/c".into(),
        ));
    }
    if t < rc {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let delta = config.omega_l - config.omega_r;
    let kappa = config.dipole_l * config.dipole_r / (2.0 * config.hbar * config.epsilon0);
    let beat = Complex64::from_polar(config.omega_r, config.omega_r * rc)
        - Complex64::from_polar(config.omega_l, -config.omega_l * rc);
    let front = Complex64::from_polar(1.0, config.omega_l * rc)
        + Complex64::from_polar(1.0, -config.omega_r * rc);
    let bracket = beat * difference_quotient(delta, t, rc) - front;
    Ok(Complex64::new(0.0, kappa / config.c) * bracket)
}

// ---------------------------------------------------------------------------
// Numeric amplitude series
// ---------------------------------------------------------------------------

/// How an amplitude series was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub kind: PropagatorKind,
    pub rwa: bool,
    pub convention: &'static str,
}

/// Complex amplitude samples on a strictly increasing time grid.
#[derive(Debug, Clone)]
pub struct AmplitudeSeries {
    times: Vec<f64>,
    amplitudes: Vec<Complex64>,
    provenance: Provenance,
}

impl AmplitudeSeries {
    pub fn new(
        times: Vec<f64>,
        amplitudes: Vec<Complex64>,
        provenance: Provenance,
    ) -> Result<Self> {
        if times.len() != amplitudes.len() {
            return Err(Error::Shape(format!(
                "{} times vs {} amplitudes",
                times.len(),
                amplitudes.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("series times must be strictly increasing".into()));
        }
        Ok(Self { times, amplitudes, provenance })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.times.iter().copied().zip(self.amplitudes.iter().copied())
    }
}

fn series_provenance(kind: PropagatorKind, rwa: bool) -> Provenance {
    Provenance { kind, rwa, convention: M2_CONVENTION_NOTE }
}

/// Excitation amplitude on every node of `grid`, with the requested
/// propagator.
///
/// The Magnus-series amplitude reduces to the matrix element of M2 and is
/// computed by two-dimensional triangular quadrature of the closed-form
/// kernel (no matrices, any mode count). The other kinds build the
/// full-matrix propagators and are guarded by the config's dimension
/// ceiling.
pub fn amplitude_numeric(
    config: &FermiConfig,
    grid: &TimeGrid,
    kind: PropagatorKind,
    rwa: bool,
) -> Result<AmplitudeSeries> {
    match kind {
        PropagatorKind::Magnus2Series => magnus2_series_amplitude_kernel(config, grid, rwa),
        PropagatorKind::Dyson2 => dyson2_amplitude_matrix(config, grid, rwa),
        PropagatorKind::Magnus2Exponential | PropagatorKind::StepOracle => {
            amplitude_dense(config, grid, kind, rwa)
        }
    }
}

/// Fast path for the Magnus-series amplitude: triangular quadrature of the
/// discrete-mode kernel times `(1/2)(1/ih)^2`.
///
/// On a uniform grid the kernel factorizes into per-node atomic phases and
/// a mode sum that depends only on the lag `t_j - t_k`, so the branch sums
/// are tabulated once per lag and the double integral costs O(steps^2)
/// scalar operations plus O(steps x modes) table work.
pub fn magnus2_series_amplitude_kernel(
    config: &FermiConfig,
    grid: &TimeGrid,
    rwa: bool,
) -> Result<AmplitudeSeries> {
    config.validate()?;
    let dt = grid.dt();
    let n_nodes = grid.node_count();
    let gg = config.coupling_l() * config.coupling_r();

    // Lag table of the branch sum G(tau); the full kernel needs only Im G.
    let g_tab: Vec<Complex64> = (0..n_nodes)
        .map(|m| branch_sum(config, m as f64 * dt))
        .collect();

    let el: Vec<Complex64> = (0..n_nodes)
        .map(|k| Complex64::from_polar(1.0, config.omega_l * grid.node(k)))
        .collect();
    let er: Vec<Complex64> = (0..n_nodes)
        .map(|k| Complex64::from_polar(1.0, config.omega_r * grid.node(k)))
        .collect();

    let kernel = |j: usize, k: usize| -> Complex64 {
        let p = el[j] * er[k].conj();
        let q = el[k] * er[j].conj();
        let g = g_tab[j - k];
        if rwa {
            (p * g - q * g.conj()) * (2.0 * gg)
        } else {
            Complex64::new(0.0, 4.0 * gg * g.im) * (p + q)
        }
    };

    // inner[j] = int_0^{t_j} K(t_j, t'') dt''; the diagonal sample is zero.
    let mut inner = vec![Complex64::new(0.0, 0.0); n_nodes];
    for (j, slot) in inner.iter_mut().enumerate().skip(1) {
        let mut acc = kernel(j, 0) * 0.5;
        for k in 1..j {
            acc += kernel(j, k);
        }
        *slot = acc * dt;
    }

    // amp[m] = -1/(2 hbar^2) int_0^{t_m} inner(t') dt'
    let prefactor = -0.5 / (config.hbar * config.hbar);
    let mut amplitudes = Vec::with_capacity(n_nodes);
    let mut acc = Complex64::new(0.0, 0.0);
    amplitudes.push(Complex64::new(0.0, 0.0));
    for j in 1..n_nodes {
        acc += (inner[j - 1] + inner[j]) * (dt / 2.0);
        amplitudes.push(acc * prefactor);
    }

    AmplitudeSeries::new(
        grid.nodes(),
        amplitudes,
        series_provenance(PropagatorKind::Magnus2Series, rwa),
    )
}

/// Oracle path for the Magnus-series amplitude: the same double integral
/// evaluated through the full interaction matrices,
/// `<a,b,0|[V(t'), V(t'')]|b,a,0>` accumulated from matrix-vector products.
/// Refuses spaces above the dimension ceiling.
pub fn magnus2_series_amplitude_matrix(
    config: &FermiConfig,
    grid: &TimeGrid,
    rwa: bool,
) -> Result<AmplitudeSeries> {
    let space = config.space()?;
    let tables = build_tables(&space);
    let dim = space.dimension();
    let dt = grid.dt();
    let psi0 = config.initial_state(&space)?.amplitudes().to_vec();
    let phi0 = config.final_state(&space)?.amplitudes().to_vec();

    let zero = Complex64::new(0.0, 0.0);
    let mut entries = Vec::new();
    let mut v_psi = vec![zero; dim];
    let mut v_phi = vec![zero; dim];
    let mut s_psi = vec![zero; dim]; // int_0^t V |psi>
    let mut s_phi = vec![zero; dim];
    let mut prev_v_psi = vec![zero; dim];
    let mut prev_v_phi = vec![zero; dim];

    interaction_entries(config, &tables, 0.0, rwa, &mut entries);
    coo_apply(&entries, &psi0, &mut prev_v_psi);
    coo_apply(&entries, &phi0, &mut prev_v_phi);

    let dot = |x: &[Complex64], y: &[Complex64]| -> Complex64 {
        x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
    };

    let prefactor = -0.5 / (config.hbar * config.hbar);
    let mut amplitudes = Vec::with_capacity(grid.node_count());
    amplitudes.push(zero);
    let mut prev_f = zero; // [V, int V] element vanishes at t = 0
    let mut acc = zero;
    for k in 1..grid.node_count() {
        interaction_entries(config, &tables, grid.node(k), rwa, &mut entries);
        coo_apply(&entries, &psi0, &mut v_psi);
        coo_apply(&entries, &phi0, &mut v_phi);
        for i in 0..dim {
            s_psi[i] += (prev_v_psi[i] + v_psi[i]) * (dt / 2.0);
            s_phi[i] += (prev_v_phi[i] + v_phi[i]) * (dt / 2.0);
        }
        let f = dot(&v_phi, &s_psi) - dot(&s_phi, &v_psi);
        acc += (prev_f + f) * (dt / 2.0);
        amplitudes.push(acc * prefactor);
        std::mem::swap(&mut prev_v_psi, &mut v_psi);
        std::mem::swap(&mut prev_v_phi, &mut v_phi);
        prev_f = f;
    }

    AmplitudeSeries::new(
        grid.nodes(),
        amplitudes,
        series_provenance(PropagatorKind::Magnus2Series, rwa),
    )
}

/// Second-order Dyson amplitude through the full matrices, reduced to
/// matrix-vector products. The first-order term has a vanishing matrix
/// element here but is kept for fidelity to the propagator definition.
fn dyson2_amplitude_matrix(
    config: &FermiConfig,
    grid: &TimeGrid,
    rwa: bool,
) -> Result<AmplitudeSeries> {
    let space = config.space()?;
    let tables = build_tables(&space);
    let dim = space.dimension();
    let dt = grid.dt();
    let psi0 = config.initial_state(&space)?.amplitudes().to_vec();
    let phi0 = config.final_state(&space)?.amplitudes().to_vec();

    let zero = Complex64::new(0.0, 0.0);
    let mut entries = Vec::new();
    let mut v_psi = vec![zero; dim];
    let mut v_phi = vec![zero; dim];
    let mut s_psi = vec![zero; dim];
    let mut prev_v_psi = vec![zero; dim];

    interaction_entries(config, &tables, 0.0, rwa, &mut entries);
    coo_apply(&entries, &psi0, &mut prev_v_psi);

    let dot = |x: &[Complex64], y: &[Complex64]| -> Complex64 {
        x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
    };

    let first_factor = Complex64::new(0.0, -1.0 / config.hbar);
    let second_factor = Complex64::new(-1.0 / (config.hbar * config.hbar), 0.0);
    let mut amplitudes = Vec::with_capacity(grid.node_count());
    amplitudes.push(zero);
    let mut prev_f = zero;
    let mut acc = zero;
    for k in 1..grid.node_count() {
        interaction_entries(config, &tables, grid.node(k), rwa, &mut entries);
        coo_apply(&entries, &psi0, &mut v_psi);
        coo_apply(&entries, &phi0, &mut v_phi);
        for i in 0..dim {
            s_psi[i] += (prev_v_psi[i] + v_psi[i]) * (dt / 2.0);
        }
        // <phi| V(t_k) int_0^{t_k} V |psi>
        let f = dot(&v_phi, &s_psi);
        acc += (prev_f + f) * (dt / 2.0);
        let first = dot(&phi0, &s_psi) * first_factor;
        amplitudes.push(first + acc * second_factor);
        std::mem::swap(&mut prev_v_psi, &mut v_psi);
        prev_f = f;
    }

    AmplitudeSeries::new(
        grid.nodes(),
        amplitudes,
        series_provenance(PropagatorKind::Dyson2, rwa),
    )
}

/// Dense-matrix amplitude series for the exponential Magnus and stepping
/// propagators. Cost grows with the cube of the dimension per node, so this
/// path is only practical for small mode counts; the ceiling guard applies.
fn amplitude_dense(
    config: &FermiConfig,
    grid: &TimeGrid,
    kind: PropagatorKind,
    rwa: bool,
) -> Result<AmplitudeSeries> {
    let space = config.space()?;
    let psi = config.initial_state(&space)?;
    let phi = config.final_state(&space)?;
    let dt = grid.dt();
    let mut amplitudes = Vec::with_capacity(grid.node_count());
    let zero = Complex64::new(0.0, 0.0);
    amplitudes.push(zero);
    match kind {
        PropagatorKind::StepOracle => {
            let factor = Complex64::new(0.0, -dt / config.hbar);
            let mut state = psi.amplitudes().clone();
            for k in 0..grid.steps() {
                let v = fermi_interaction(config, &space, grid.midpoint(k), rwa)?;
                let step = expm_array(&(v.entries() * factor));
                state = step.dot(&state);
                amplitudes.push(
                    phi.amplitudes()
                        .iter()
                        .zip(state.iter())
                        .map(|(a, b)| a.conj() * b)
                        .sum(),
                );
            }
        }
        PropagatorKind::Magnus2Exponential => {
            let half = Complex64::new(dt / 2.0, 0.0);
            let mut running = Operator::zeros(space.clone());
            let mut m2_int = Operator::zeros(space.clone());
            let mut prev_v = fermi_interaction(config, &space, 0.0, rwa)?;
            let mut prev_inner = Operator::zeros(space.clone());
            for k in 1..grid.node_count() {
                let vk = fermi_interaction(config, &space, grid.node(k), rwa)?;
                running = &running + &(&(&prev_v + &vk) * half);
                let inner = crate::operator::commutator(&vk, &running)?;
                m2_int = &m2_int + &(&(&prev_inner + &inner) * half);
                prev_v = vk;
                prev_inner = inner;
                let m1 = &running * Complex64::new(0.0, -1.0 / config.hbar);
                let m2 = &m2_int * Complex64::new(-0.5 / (config.hbar * config.hbar), 0.0);
                let u = crate::expm::matrix_exponential(&(&m1 + &m2))?;
                amplitudes.push(transition_amplitude(&phi, &u, &psi)?);
            }
        }
        _ => unreachable!("dispatched in amplitude_numeric"),
    }
    AmplitudeSeries::new(grid.nodes(), amplitudes, series_provenance(kind, rwa))
}

/// Largest `|A(t)|` inside the pre-cone window `(0.05 R/c, 0.95 R/c)`; the
/// 5% trims exclude start-up transients and the cone itself.
pub fn causality_leakage(series: &AmplitudeSeries, config: &FermiConfig) -> Result<f64> {
    config.validate()?;
    let rc = config.light_cone_time();
    let lo = 0.05 * rc;
    let hi = 0.95 * rc;
    let mut worst: Option<f64> = None;
    for (t, amp) in series.iter() {
        if t > lo && t < hi {
            let a = amp.norm();
            worst = Some(worst.map_or(a, |w: f64| w.max(a)));
        }
    }
    worst.ok_or_else(|| {
        Error::Config(format!(
            "series has no samples in the leakage window ({lo}, {hi})"
        ))
    })
}
