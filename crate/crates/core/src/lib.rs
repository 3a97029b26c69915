pub mod asymptotics;
pub mod coefficients;
pub mod counting;
pub mod error;
pub mod linalg;
pub mod maslov;
pub mod model;
pub mod oracle;
pub mod evolution;
pub mod symplectic;
pub mod systems;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
