pub mod artifact;
pub mod geometry;
pub mod latent;
pub mod neural;
pub mod training;
pub mod evolution;
pub mod metrics;
pub mod pipeline;
pub mod objectives;
