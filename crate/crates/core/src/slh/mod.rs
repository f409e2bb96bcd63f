//! SLH network compiler: triplets, series and parallel products, the element
//! library and compilation of the two-pair measurement network into a
//! stochastic master equation generator.

mod elements;
mod expr;
mod generator;
pub mod network;
mod space;
mod triplet;

pub use elements::{element, ElementKind};
pub use expr::{word_matrix, Elem, OperatorExpr, Symbol, Word};
pub use generator::{generator_from_triplet, Innovation, Monitoring, SmeGenerator};
pub use network::{absorb_drives, build_network, build_network_unabsorbed, CHANNEL_I, CHANNEL_Q};
pub use space::{Factor, FactorKind, HilbertSpace};
pub use triplet::{cascade, chain, concatenate, stack, unitarity_defect, SLHTriplet};
