pub mod cli;
pub mod codes;
pub mod cohort;
pub mod data;
pub mod embedding;
pub mod evaluation;
pub mod matching;
