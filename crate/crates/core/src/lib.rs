pub mod error;
pub mod fixed;
pub mod poly;
pub mod reduce;
pub mod systems;
pub mod correlate;
pub mod seminorms;
pub mod nil;
pub mod suspension;
pub mod pet;
pub mod decomp;
pub mod config;
pub mod runner;
