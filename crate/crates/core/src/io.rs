//! JSON file formats for associations, liftings, and solutions.
//!
//! Association: `{ "views": [m1, ...], "edges": [[vi, ii, vj, ij], ...] }`
//! with zero-based view and item indices. A solution file is a superset of
//! the association format, so it can be scored directly against a truth file.

use serde::{Deserialize, Serialize};

use crate::assoc::{AggregateAssociation, LiftingSet, ViewLayout};
use crate::clear::Solution;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociationFile {
    pub views: Vec<usize>,
    pub edges: Vec<[usize; 4]>,
}

impl AssociationFile {
    pub fn from_aggregate(agg: &AggregateAssociation) -> Self {
        Self {
            views: agg.layout().counts().to_vec(),
            edges: agg.view_item_edges(),
        }
    }

    pub fn to_aggregate(&self) -> Result<AggregateAssociation> {
        AggregateAssociation::build(
            ViewLayout::new(self.views.clone()),
            self.edges.iter().map(|e| ((e[0], e[1]), (e[2], e[3]))),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftingFile {
    pub views: Vec<usize>,
    pub universe_size: usize,
    pub assignment: Vec<Vec<usize>>,
}

impl LiftingFile {
    pub fn from_lifting(lift: &LiftingSet) -> Self {
        Self {
            views: lift.layout().counts().to_vec(),
            universe_size: lift.universe_size(),
            assignment: lift.assignment().to_vec(),
        }
    }

    pub fn to_lifting(&self) -> Result<LiftingSet> {
        LiftingSet::new(ViewLayout::new(self.views.clone()), self.universe_size, self.assignment.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsFile {
    pub eigenvalues: Vec<f64>,
    pub m_tilde: usize,
    pub pivots: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub views: Vec<usize>,
    pub universe_size: usize,
    pub assignment: Vec<Vec<usize>>,
    pub edges: Vec<[usize; 4]>,
    pub objective: f64,
    pub runtime_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticsFile>,
}

impl SolutionFile {
    pub fn from_solution(sol: &Solution, runtime_s: f64, with_diagnostics: bool) -> Self {
        Self {
            views: sol.lifting.layout().counts().to_vec(),
            universe_size: sol.universe_size,
            assignment: sol.lifting.assignment().to_vec(),
            edges: sol.pairwise.view_item_edges(),
            objective: sol.objective,
            runtime_s,
            diagnostics: with_diagnostics.then(|| DiagnosticsFile {
                eigenvalues: sol.diagnostics.eigenvalues.clone(),
                m_tilde: sol.diagnostics.m_tilde,
                pivots: sol.diagnostics.pivots.clone(),
            }),
        }
    }
}
