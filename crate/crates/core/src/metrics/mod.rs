//! Diagnostics of converged solutions: activation saturation, dense
//! Hessians, and eigenvalue spectra.
//!
//! Saturation statistics explain how the alignment penalty reshapes
//! individual layers (pushed-around units saturate); the Hessian spectrum
//! distinguishes the basins that different training iterations land in.
//! Everything is observational: nothing here feeds back into training.

mod eigen;
mod hessian;
mod saturation;
mod spectrum;

pub use eigen::{symmetric_eigen, SymmetricEigen};
pub use hessian::{hessian_dense, hessian_dense_raw, HESSIAN_PARAM_LIMIT};
pub use saturation::{
    percentile, saturation_snapshot, Histogram, LayerSaturation, SaturationRecord,
    SaturationReport, SaturationSnapshot, DEFAULT_SATURATION_THRESHOLD, HISTOGRAM_BINS,
};
pub use spectrum::{spectrum, spectrum_with_bulk_percentile, SpectrumReport, DEFAULT_BULK_PERCENTILE};
