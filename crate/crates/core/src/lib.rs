pub mod background;
pub mod commands;
pub mod config;
pub mod fit;
pub mod grid;
pub mod io;
pub mod linear;
pub mod model;
pub mod observables;
pub mod planar;
pub mod radial;
