pub mod aesthete;
pub mod diff;
pub mod graph;
pub mod layout;
pub mod losses;
pub mod seeding;
pub mod spectral;
pub mod error;

pub use error::{Error, Result};
