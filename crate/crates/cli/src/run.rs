//! Experiment dispatch: each subcommand maps onto the library operations
//! and flattens the outcome into a [`RunResult`] table.

use std::f64::consts::PI;

use magnus_qed::driven::{
    self, magnus_closed_pieces, vacuum_defect_expectation, vacuum_overlap, DrivenPropagator,
};
use magnus_qed::fermi::{
    amplitude_analytic, amplitude_numeric, causality_leakage, FermiConfig, M2_CONVENTION_NOTE,
};
use magnus_qed::propagators::{magnus2_pieces, PropagatorKind, TimeGrid};
use magnus_qed::Error as CoreError;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::emit::{fmt_sci, Cell, RunResult};

/// Failures while running an experiment, with CLI exit codes attached
/// downstream: config errors exit 2, the dimension ceiling exits 3, and
/// anything else exits 4.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Ceiling(String),
    Internal(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Ceiling(m) => write!(f, "numeric guard: {m}"),
            RunError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Config(_) => RunError::Config(e.to_string()),
            CoreError::DimensionCeiling { .. } => RunError::Ceiling(e.to_string()),
            _ => RunError::Internal(e.to_string()),
        }
    }
}

fn base_metadata(config: &ExperimentConfig) -> std::collections::BTreeMap<String, String> {
    let mut metadata = config.echo();
    metadata.insert("convention".into(), M2_CONVENTION_NOTE.to_string());
    metadata.insert(
        "tool".into(),
        format!("magnus-qed-cli {}", env!("CARGO_PKG_VERSION")),
    );
    metadata
}

/// Run the configured experiment and assemble its table.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunResult, RunError> {
    match config.experiment {
        ExperimentKind::FermiAnalytic => fermi_analytic(config),
        ExperimentKind::FermiNumeric => fermi_numeric(config),
        ExperimentKind::RwaCompare => rwa_compare(config),
        ExperimentKind::DrivenMode => driven_mode(config),
        ExperimentKind::Convergence => convergence(config),
    }
}

fn amplitude_columns() -> Vec<String> {
    vec![
        "t".into(),
        "re_amplitude".into(),
        "im_amplitude".into(),
        "abs_amplitude".into(),
    ]
}

fn fermi_grid(config: &ExperimentConfig, fermi: &FermiConfig) -> Result<TimeGrid, RunError> {
    // Grids never put a node exactly on the light cone.
    TimeGrid::avoiding(config.t_max, config.steps, fermi.light_cone_time()).map_err(Into::into)
}

fn fermi_analytic(config: &ExperimentConfig) -> Result<RunResult, RunError> {
    let fermi = config.fermi.as_ref().expect("payload");
    let grid = fermi_grid(config, fermi)?;
    let mut result = RunResult::new(amplitude_columns(), base_metadata(config));
    for t in grid.nodes() {
        let amp = amplitude_analytic(fermi, t)?;
        result.push_row(vec![
            Cell::Num(t),
            Cell::Num(amp.re),
            Cell::Num(amp.im),
            Cell::Num(amp.norm()),
        ]);
    }
    Ok(result)
}

fn fermi_numeric(config: &ExperimentConfig) -> Result<RunResult, RunError> {
    let fermi = config.fermi.as_ref().expect("payload");
    let grid = fermi_grid(config, fermi)?;
    let series = amplitude_numeric(fermi, &grid, config.propagator, config.rwa)?;
    let mut metadata = base_metadata(config);
    if let Ok(leakage) = causality_leakage(&series, fermi) {
        metadata.insert("leakage".into(), fmt_sci(leakage));
    }
    let mut result = RunResult::new(amplitude_columns(), metadata);
    for (t, amp) in series.iter() {
        result.push_row(vec![
            Cell::Num(t),
            Cell::Num(amp.re),
            Cell::Num(amp.im),
            Cell::Num(amp.norm()),
        ]);
    }
    Ok(result)
}

fn rwa_compare(config: &ExperimentConfig) -> Result<RunResult, RunError> {
    let fermi = config.fermi.as_ref().expect("payload");
    let grid = fermi_grid(config, fermi)?;
    let columns = vec![
        "modes".into(),
        "leakage_full".into(),
        "leakage_rwa".into(),
    ];
    let mut result = RunResult::new(columns, base_metadata(config));
    for &modes in &config.modes_sweep {
        let mut swept = *fermi;
        swept.modes_per_branch = modes;
        let full = amplitude_numeric(&swept, &grid, PropagatorKind::Magnus2Series, false)?;
        let rwa = amplitude_numeric(&swept, &grid, PropagatorKind::Magnus2Series, true)?;
        result.push_row(vec![
            Cell::Num(modes as f64),
            Cell::Num(causality_leakage(&full, &swept)?),
            Cell::Num(causality_leakage(&rwa, &swept)?),
        ]);
    }
    Ok(result)
}

fn driven_mode(config: &ExperimentConfig) -> Result<RunResult, RunError> {
    let driven = config.driven.as_ref().expect("payload");
    let grid = TimeGrid::new(config.t_max, config.steps)?;
    let columns = vec![
        "t".into(),
        "defect_exact".into(),
        "defect_magnus_exp".into(),
        "defect_magnus_series".into(),
        "defect_tdpt".into(),
        "abs_vacuum_overlap_exact".into(),
    ];
    let mut result = RunResult::new(columns, base_metadata(config));
    for t in grid.nodes() {
        let exact = DrivenPropagator::Exact.build(driven, t)?;
        let mag_exp = DrivenPropagator::MagnusExponential.build(driven, t)?;
        let mag_series = DrivenPropagator::MagnusSeries.build(driven, t)?;
        let tdpt = DrivenPropagator::Tdpt2.build(driven, t)?;
        result.push_row(vec![
            Cell::Num(t),
            Cell::Num(vacuum_defect_expectation(driven, &exact)?),
            Cell::Num(vacuum_defect_expectation(driven, &mag_exp)?),
            Cell::Num(vacuum_defect_expectation(driven, &mag_series)?),
            Cell::Num(vacuum_defect_expectation(driven, &tdpt)?),
            Cell::Num(vacuum_overlap(driven, &exact)?.norm()),
        ]);
    }
    Ok(result)
}

fn convergence(config: &ExperimentConfig) -> Result<RunResult, RunError> {
    let fermi = config.fermi.as_ref().expect("payload");
    let driven = config.driven.as_ref().expect("payload");
    let columns = vec![
        "section".into(),
        "param".into(),
        "metric".into(),
        "value".into(),
    ];
    let mut result = RunResult::new(columns, base_metadata(config));

    // Quadrature pieces against the closed forms at w t = pi, on the
    // guarded sub-block where the Fock truncation is inert.
    let t_driven = PI / driven.omega;
    let space = driven.space();
    let closed = magnus_closed_pieces(driven, t_driven)?;
    for &steps in &config.steps_sweep {
        let grid = TimeGrid::new(t_driven, steps)?;
        let pieces = magnus2_pieces(|t| driven.interaction(&space, t), &grid, driven.hbar)?;
        let m1_error = driven::guarded_block_distance(driven, &pieces.m1, &closed.m1);
        let m2_error = driven::guarded_block_distance(driven, &pieces.m2, &closed.m2);
        result.push_row(vec![
            Cell::from("driven-steps"),
            Cell::Num(steps as f64),
            Cell::from("m1_error"),
            Cell::Num(m1_error),
        ]);
        result.push_row(vec![
            Cell::from("driven-steps"),
            Cell::Num(steps as f64),
            Cell::from("m2_error"),
            Cell::Num(m2_error),
        ]);
    }

    // Leakage against the mode count, full and rotating-wave kernels.
    let grid = fermi_grid(config, fermi)?;
    for &modes in &config.modes_sweep {
        let mut swept = *fermi;
        swept.modes_per_branch = modes;
        let full = amplitude_numeric(&swept, &grid, PropagatorKind::Magnus2Series, false)?;
        let rwa = amplitude_numeric(&swept, &grid, PropagatorKind::Magnus2Series, true)?;
        result.push_row(vec![
            Cell::from("fermi-modes"),
            Cell::Num(modes as f64),
            Cell::from("leakage_full"),
            Cell::Num(causality_leakage(&full, &swept)?),
        ]);
        result.push_row(vec![
            Cell::from("fermi-modes"),
            Cell::Num(modes as f64),
            Cell::from("leakage_rwa"),
            Cell::Num(causality_leakage(&rwa, &swept)?),
        ]);
    }
    Ok(result)
}
