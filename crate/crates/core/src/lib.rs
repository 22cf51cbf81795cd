pub mod cli;
pub mod curvature;
pub mod geometry;
pub mod solver;
pub mod triangulation;
