//! Constant Q-curvature and U-curvature conformal metrics on the radial
//! Poincaré ball.

pub mod banded;
pub mod edge;
pub mod error;
pub mod expansion;
pub mod frobenius;
pub mod geometry;
pub mod grid;
pub mod indicial;
pub mod qcurv;
pub mod report;
pub mod special;
pub mod stencil;
pub mod ucurve;
pub mod verify;

pub use error::{Error, Result};
