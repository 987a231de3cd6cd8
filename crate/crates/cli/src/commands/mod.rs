pub mod build_corpus;
pub mod eval;
pub mod generate;
pub mod report;
pub mod stats;
