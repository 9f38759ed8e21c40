//! Solitons of the space-time monopole and Ward chiral equations by
//! Backlund transformations, with forward and inverse scattering.

pub mod abelian;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod holomorphic;
pub mod io;
pub mod linalg;
pub mod scattering;
pub mod soliton;

pub use error::{Error, Result};
pub use fields::{Axis, FieldSample, GridSpec, MonopoleField, WardMap};
pub use geometry::{Chart, LorentzElement, Point, Riemann, SpectralParam};
pub use holomorphic::{CharacteristicProjector, PolyCurve, ProjectorField};
pub use linalg::{CMatrix, CVector, HermitianProjector, RationalMatrixMap, C64};
pub use scattering::{ScatteringData, SpatialField, SpectralSolveConfig};
pub use soliton::{Frame, FrameRef, PoleDatum, WardFrame};
