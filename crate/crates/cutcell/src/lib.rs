pub mod assembly;
pub mod bench;
pub mod conditions;
pub mod geometry;
pub mod linalg;
pub mod operators;
pub mod reference;
pub mod solver;
