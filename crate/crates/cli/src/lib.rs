//! Experiment harness around `collapse-core`: configuration files, result
//! tables, SVG figures and the figure reproduction commands.

pub mod bench;
pub mod config;
pub mod experiment;
pub mod figures;
pub mod initial;
pub mod softmax_check;
pub mod svg;
pub mod table;
