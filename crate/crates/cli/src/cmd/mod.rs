pub mod data;
pub mod eval;
pub mod impedance;
pub mod model;
