//! Host side of `circuitlab`: text formats, library and study loading,
//! append-only session logs, the HTTP study server and the analysis
//! helpers behind the command line tools.

pub mod analysis;
pub mod format;
pub mod library;
pub mod server;
pub mod store;
pub mod study;
pub mod tutorial;

pub use library::load_library;
pub use server::{router, Host};
pub use study::{load_studies, Study};

/// Environment variable naming the directory that holds session logs.
pub const DATA_DIR_ENV: &str = "STUDY_DATA_DIR";
