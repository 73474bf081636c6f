pub mod circuits;
pub mod detection;
pub mod discrimination;
pub mod elements;
pub mod error;
pub mod fock;
pub mod optimizer;
pub mod protocols;

pub use error::{Error, Result};
