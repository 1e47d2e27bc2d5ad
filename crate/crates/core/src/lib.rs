//! Exact distribution of regular-expression pattern counts in random
//! sequences generated by homogeneous order-m Markov models.

pub mod alphabet;
pub mod dfa;
pub mod distribution;
pub mod embed;
pub mod error;
pub mod fraction;
pub mod lifting;
pub mod oracle;
pub mod orderm;
pub mod model;
pub mod pattern;
pub mod recursion;
pub mod spectral;
pub mod strategy;

pub use alphabet::{Alphabet, Letter, Word};
pub use dfa::{build_min_dfa, Dfa};
pub use distribution::{CountDistribution, MethodMeta, Prob};
pub use embed::{distribution_identity_check, embed, series_prefix, EmbeddedChain, FloatChain, SparseMatrix};
pub use fraction::{probe_degree, reconstruct_gf, verify_fraction, BivariateFraction, ReconstructOpts};
pub use lifting::{bivariate_lift, devel_chunk, fiduccia_chunk, high_order, Chunk, HighOrderData, LiftKind};
pub use error::{Error, Result};
pub use model::{read_sequence, MarkovModel};
pub use oracle::{exhaustive, monte_carlo, OracleResult, SplitMix64};
pub use orderm::{make_order_m, OrderMDfa};
pub use recursion::{full_distribution, partial_distribution, Mode, PartialOpts};
pub use strategy::{select_method, ChainStats, CountingStrategy, SolveContext, StrategyRegistry};
pub use spectral::{dominant_eigenvalue, SpectralData};
pub use pattern::{parse_pattern, ClassTable, PatternAst};
