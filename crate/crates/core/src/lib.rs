pub mod agents;
pub mod analysis;
pub mod belief;
pub mod conceptnet;
pub mod engine;
pub mod error;
pub mod io;
pub mod manifest;
pub mod model;
pub mod pipeline;
pub mod scoring;
pub mod taxonomy;
