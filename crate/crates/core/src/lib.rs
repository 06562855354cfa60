pub mod error;
pub mod gaussian;
pub mod inference;
pub mod io;
pub mod mixture;
pub mod quadrature;
pub mod radial;
pub mod roots;
pub mod simulation;
pub mod special;
pub mod taildep;

pub use error::{Error, Result};
pub use radial::{model3_support_constant, RadialLaw, TailClass};
