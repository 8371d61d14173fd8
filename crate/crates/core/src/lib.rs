pub mod classify;
pub mod cli;
pub mod construct;
pub mod degree;
pub mod error;
pub mod expr;
pub mod framed;
pub mod gallery;
pub mod geometry;
pub mod linalg;
pub mod map;
pub mod operator;
pub mod path;
pub mod solve;
pub mod transport;
