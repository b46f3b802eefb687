//! Joint outcome statistics `p(ab|xy)` and generalized correlators.

mod sampling;
mod table;

pub use sampling::{bootstrap_errors, sample_counts, setting_rng, simulate_table};
pub use table::{
    born_probabilities, born_probabilities_pure, generalized_correlator, CorrelationTable,
    Correlator,
};
