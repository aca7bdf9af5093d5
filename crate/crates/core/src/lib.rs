pub mod approx;
pub mod certify;
pub mod cover;
pub mod error;
pub mod experiment;
pub mod forge;
pub mod lp;
pub mod model;
pub mod num;
pub mod shares;

pub use error::{Error, Result};
