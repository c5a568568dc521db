//! Eigenspectrum summary of a dense Hessian.

use alloc::vec::Vec;

use crate::error::Result;
use crate::matrix::Matrix;

use super::eigen::symmetric_eigen;
use super::saturation::percentile;

/// Percentile of the spectrum used as the bulk edge by default.
pub const DEFAULT_BULK_PERCENTILE: f64 = 90.0;

/// Sorted spectrum with the summary statistics used to compare basins:
/// sharper minima carry larger top eigenvalues and more outliers above the
/// bulk.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectrumReport {
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Largest eigenvalue.
    pub lambda_max: f64,
    /// Percentile of the spectrum separating bulk from outliers.
    pub bulk_edge: f64,
    /// Eigenvalues strictly above `bulk_edge`.
    pub outlier_count: usize,
}

/// Spectrum summary with the default bulk percentile.
pub fn spectrum(hessian: &Matrix) -> Result<SpectrumReport> {
    spectrum_with_bulk_percentile(hessian, DEFAULT_BULK_PERCENTILE)
}

/// Spectrum summary with a caller-chosen bulk percentile in `[0, 100]`.
pub fn spectrum_with_bulk_percentile(
    hessian: &Matrix,
    bulk_percentile: f64,
) -> Result<SpectrumReport> {
    let eig = symmetric_eigen(hessian)?;
    let eigenvalues = eig.eigenvalues;
    let lambda_max = *eigenvalues.last().expect("decomposition of a non-empty matrix");
    let bulk_edge = percentile(&eigenvalues, bulk_percentile)?;
    let outlier_count = eigenvalues.iter().filter(|&&v| v > bulk_edge).count();
    Ok(SpectrumReport { eigenvalues, lambda_max, bulk_edge, outlier_count })
}
