pub mod conditioning;
pub mod error;
pub mod gaussian;
pub mod numerics;
pub mod metrics;
pub mod montecarlo;
pub mod scenario;
