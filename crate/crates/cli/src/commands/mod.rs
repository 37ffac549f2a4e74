pub mod debug_render;
pub mod eval;
pub mod landscape;
pub mod precompute;
pub mod synth;
pub mod track;
