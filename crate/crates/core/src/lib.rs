//! Essential spectra of Jacobi and CMV operators via right limits.

pub mod cmv;
pub mod criteria;
pub mod error;
pub mod esscore;
pub mod jacobi;
pub mod limits;
pub mod localization;
pub mod sequences;
pub mod spectra;

pub use error::{Error, Result};
pub use sequences::{Family, Param, ScenarioKind, ScenarioSpec, Slip, SeqRule};
pub use spectra::{CircleSpectralSet, PointCloud, RealSpectralSet, SetKind, SpectralSet};
