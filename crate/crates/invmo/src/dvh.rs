//! Cumulative dose-volume histograms of planning instances as CSV.

use invmo_core::instances::PlanningInstance;
use nalgebra::DVector;

use crate::json;
use crate::CliError;

/// Dose levels per curve.
pub const LEVELS: usize = 101;

/// Columns `structure,dose,volume_fraction`: the fraction of each structure's
/// voxels receiving at least `dose`, at `LEVELS` evenly spaced levels from 0
/// to the largest voxel dose. The tumor is listed last as `tumor`.
pub fn to_csv(inst: &PlanningInstance, x: &DVector<f64>) -> Result<String, CliError> {
    if x.len() != inst.n_beamlets() {
        return Err(CliError::Input(format!("{} intensities for {} beamlets", x.len(), inst.n_beamlets())));
    }
    let mut curves: Vec<(&str, DVector<f64>)> =
        inst.names.iter().zip(&inst.dose).map(|(name, d)| (name.as_str(), d * x)).collect();
    curves.push(("tumor", &inst.tumor_dose * x));
    let top = curves.iter().flat_map(|(_, d)| d.iter().copied()).fold(0.0, f64::max);
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Solver(format!("csv: {e}"));
    w.write_record(["structure", "dose", "volume_fraction"]).map_err(io)?;
    for (name, dose) in &curves {
        for i in 0..LEVELS {
            let level = top * i as f64 / (LEVELS - 1) as f64;
            let covered = dose.iter().filter(|&&d| d >= level).count();
            let fraction = covered as f64 / dose.len().max(1) as f64;
            w.write_record([name.to_string(), json::real(level), json::real(fraction)]).map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Solver(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Solver(format!("csv: {e}")))
}
