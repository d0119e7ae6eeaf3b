pub mod bonus;
pub mod eval;
pub mod lsvi_verify;
pub mod maze;
pub mod regress_demo;
