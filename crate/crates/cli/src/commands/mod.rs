pub mod edf;
pub mod eval;
pub mod overlay;
pub mod segment;
pub mod synth;
