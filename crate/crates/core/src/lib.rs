pub mod align;
pub mod archspec;
pub mod cli;
pub mod harness;
pub mod imageio;
pub mod neurn;
pub mod patterns;
pub mod simmat;
