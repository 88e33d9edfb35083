pub mod engine;
pub mod fgroup;
pub mod fixtures;
pub mod folds;
pub mod graph;
pub mod index;
pub mod morphism;
pub mod rational;
pub mod track;
