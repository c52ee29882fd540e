pub mod baselines;
pub mod domains;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod reference;
pub mod scene;
