pub mod field;
pub mod linalg;
pub mod geometry;
pub mod mis;
pub mod projective;
pub mod code;
pub mod gabidulin;
pub mod constructions;
pub mod extension;
