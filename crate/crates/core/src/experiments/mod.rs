//! Parameter sweeps, scaling regressions, the predefined scaling
//! experiments, and the calibration of the necessary-side constants.

mod calibrate;
mod fit;
mod output;
mod predefined;
mod run;
mod spec;

pub use calibrate::{calibrate, calibration_cases, constants_from_cases, CalibrationCase, CalibrationSuite};
pub use fit::{fit_points, fit_scaling, least_squares, Abscissa, FitSpec, Model, Ordinate, RegressionReport, Rule};
pub use output::{write_outputs, OutputPaths};
pub use predefined::{default_spec_text, predefined_experiment, predefined_spec, run_and_fit, ExperimentOutcome};
pub use run::{
    format_from_ln, measure_point, parse_ln, run_sweep, run_sweep_unchecked, RowStatus, SweepResult, SweepRow,
    CSV_HEADER,
};
pub use spec::{
    ExperimentId, HorizonUnits, PointSetup, Quantity, SearchSpec, SweepGrid, SweepSpec, SweptParam, DEFAULT_GRID,
};

#[cfg(test)]
mod tests;
