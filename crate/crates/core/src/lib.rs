//! Cycle-consistent multi-view data association.
//!
//! Noisy pairwise matches between items seen in several views are rectified
//! into a cycle-consistent, distinctness-preserving association: the
//! normalized Laplacian of the association graph is decomposed per connected
//! component, its small eigenvalues fix the universe size, and the row-normalized
//! eigenvector embedding is projected onto one lifting permutation per view.
//!
//! ```
//! use clear_core::{clear, fixtures, ClearOptions};
//!
//! let noisy = fixtures::worked_example();
//! let solution = clear(&noisy, &ClearOptions::default()).unwrap();
//! assert_eq!(solution.universe_size, 2);
//! assert!(clear_core::check_cycle_consistency(&solution.pairwise));
//! ```

pub mod assignment;
pub mod assoc;
pub mod clear;
mod error;
pub mod evaluation;
pub mod fixtures;
pub mod io;
pub mod spectral;

pub use assoc::{
    check_cycle_consistency, check_distinctness, normalized_objective, to_pairwise, transitive_closure,
    AggregateAssociation, ClusterPartition, LiftingSet, PermutationBlockReport, ViewLayout,
};
pub use clear::{clear, clear_sweep, postprocess_min_cluster, AssignMode, ClearOptions, Solution};
pub use error::{Error, Result};
