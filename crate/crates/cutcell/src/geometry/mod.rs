//! Grids, level sets and the geometric moments used by the discrete operators.

pub mod grid;
pub mod moments;
pub mod quadrature;
pub mod shapes;

pub use grid::{CartesianGrid, GridError};
pub use moments::{
    classify, compute_moments, interface_measure_centroid, CellClassification, CellKind, CellMoments, FaceKind,
    FaceMoments, GeometryError, MomentDiagnostics, MomentOptions, MomentSet,
};
pub use shapes::{Ball, HalfSpace, LevelSet, Negated, Phase, Sampled, Star, Uniform};
