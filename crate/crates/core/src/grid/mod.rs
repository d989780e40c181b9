//! Discrete Hodge theory on the periodic cubical lattice of `T⁴`.

mod complex;
mod eigen;
mod field;

pub use complex::{assemble, GridComplex, CELL_TYPES};
pub use eigen::{
    definiteness_report, harmonic_kernel, harmonic_kernel_with, project, wedge_pairing, DefinitenessReport,
    EigenSettings, HarmonicBasis,
};
pub use field::{
    discrete_fg_residual, discrete_field_export, harmonic_field, lattice_scenario, DiscreteField, DiscreteResidual, HarmonicField,
};

use thiserror::Error;

use crate::expr::ExprError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("metric component g{}{} changes by {difference:e} under x{axis} -> x{axis} + 2pi at {point:?}", component.0, component.1)]
    NonPeriodic { component: (usize, usize), axis: usize, point: [f64; 4], difference: f64 },
    #[error("metric is not positive definite at the barycenter {point:?} of the cell based at {cell:?}")]
    Indefinite { cell: [usize; 4], point: [f64; 4] },
    #[error("unresolved kernel: no spectral gap between {below:e} and {above:e}")]
    UnresolvedKernel { below: f64, above: f64 },
    #[error("star eigenvalue {eigenvalue} on the kernel is not near +-1")]
    StarSpectrum { eigenvalue: f64 },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Verify(#[from] crate::verify::VerifyError),
}

/// `Σ aᵢbᵢ(wᵢ)` with a reduction order fixed by the length alone, so results
/// do not depend on thread scheduling.
pub(crate) fn ordered_dot(a: &[f64], b: &[f64], w: Option<&[f64]>) -> f64 {
    use rayon::prelude::*;
    const CHUNK: usize = 4096;
    let partial: Vec<f64> = (0..a.len().div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let r = c * CHUNK..((c + 1) * CHUNK).min(a.len());
            match w {
                Some(w) => r.map(|i| a[i] * b[i] * w[i]).sum(),
                None => r.map(|i| a[i] * b[i]).sum(),
            }
        })
        .collect();
    partial.iter().sum()
}
