//! Problem construction: synthetic generators, high-precision reference
//! solutions, and dataset ingestion.

mod generator;
mod libsvm;
mod reference;

pub use generator::{generate, Family, GeneratorSpec};
pub use libsvm::{load_libsvm, problem_from_dataset};
pub use reference::{solve_reference, solve_reference_via, ReferenceMethod, ReferenceSolution};
