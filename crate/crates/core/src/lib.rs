pub mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod lass;
pub mod linsolve;
pub mod oos;
pub mod simplex;
pub mod sparse;
pub mod spectrum;
pub mod ssl;

pub use error::{LassError, Result};
