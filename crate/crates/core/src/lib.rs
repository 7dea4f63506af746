//! Region-based type and effect analysis for FJEUCS programs.

pub mod contexts;
pub mod interp;
pub mod lattice;
pub mod policy;
pub mod syntax;
pub mod parser;
pub mod infer;
pub mod checker;
pub mod harness;
pub mod report;
pub mod corpus;
pub mod cli;
