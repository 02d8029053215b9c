pub mod dense;
pub mod error;
pub mod factor;
pub mod ordering;
pub mod pcg;
pub mod precond;
pub mod problems;
pub mod sparse;
