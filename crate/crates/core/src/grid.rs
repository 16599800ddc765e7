//! Deterministic grids: one chosen outcome per measurement per party.
//!
//! The table of a grid has exactly one 1 per box, aligned across boxes, and
//! is no-signalling by construction. Grids are the deterministic empirical
//! models; local realism amounts to coverage of a table's 1s by contained
//! grids.

use crate::model::PossibilisticModel;
use crate::scenario::{Cell, Party, Scenario};
use serde::Serialize;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GridError {
    #[error("{party} choice list has length {found}, expected {expected}")]
    WrongLength {
        party: Party,
        expected: usize,
        found: usize,
    },
    #[error("{party} measurement {measurement} choice {choice} is out of range")]
    ChoiceOutOfRange {
        party: Party,
        measurement: usize,
        choice: usize,
    },
}

/// One outcome index per measurement, for each party.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct DeterministicGrid {
    pub choice_a: Vec<usize>,
    pub choice_b: Vec<usize>,
}

impl DeterministicGrid {
    pub fn new(choice_a: Vec<usize>, choice_b: Vec<usize>) -> Self {
        DeterministicGrid { choice_a, choice_b }
    }

    pub fn validate(&self, scenario: &Scenario) -> Result<(), GridError> {
        for (party, choices, counts) in [
            (Party::Alice, &self.choice_a, scenario.outcomes_a()),
            (Party::Bob, &self.choice_b, scenario.outcomes_b()),
        ] {
            if choices.len() != counts.len() {
                return Err(GridError::WrongLength {
                    party,
                    expected: counts.len(),
                    found: choices.len(),
                });
            }
            for (measurement, (&choice, &count)) in choices.iter().zip(counts).enumerate() {
                if choice >= count {
                    return Err(GridError::ChoiceOutOfRange {
                        party,
                        measurement,
                        choice,
                    });
                }
            }
        }
        Ok(())
    }

    /// True when the cell lies on this grid.
    pub fn contains(&self, cell: Cell) -> bool {
        self.choice_a[cell.a_meas] == cell.a_out && self.choice_b[cell.b_meas] == cell.b_out
    }

    /// The grid's cells in canonical order, one per box.
    pub fn cells<'a>(&'a self, scenario: &'a Scenario) -> impl Iterator<Item = Cell> + 'a {
        scenario.boxes().map(move |(i, j)| {
            Cell::new(i, self.choice_a[i], j, self.choice_b[j])
        })
    }
}

impl fmt::Display for DeterministicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[usize]| {
            v.iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "[a:{} | b:{}]", list(&self.choice_a), list(&self.choice_b))
    }
}

/// The table with a 1 exactly on the grid's cells.
pub fn grid_table(
    scenario: &Scenario,
    grid: &DeterministicGrid,
) -> Result<PossibilisticModel, GridError> {
    grid.validate(scenario)?;
    Ok(PossibilisticModel::from_fn(scenario, |cell| {
        grid.contains(cell)
    }))
}

/// Every deterministic grid of the scenario, in lexicographic choice order.
/// The count is the product of all outcome counts of both parties; this is
/// meant for desk-scale scenarios.
pub fn enumerate_grids(scenario: &Scenario) -> Vec<DeterministicGrid> {
    let counts: Vec<usize> = scenario
        .outcomes_a()
        .iter()
        .chain(scenario.outcomes_b())
        .copied()
        .collect();
    let total: usize = counts
        .iter()
        .try_fold(1usize, |acc, &c| acc.checked_mul(c))
        .expect("grid count overflows usize");
    let mut grids = Vec::with_capacity(total);
    let mut choice = vec![0usize; counts.len()];
    loop {
        let (ca, cb) = choice.split_at(scenario.k_a());
        grids.push(DeterministicGrid::new(ca.to_vec(), cb.to_vec()));
        let mut advanced = false;
        for pos in (0..counts.len()).rev() {
            choice[pos] += 1;
            if choice[pos] < counts[pos] {
                advanced = true;
                break;
            }
            choice[pos] = 0;
        }
        if !advanced {
            return grids;
        }
    }
}
