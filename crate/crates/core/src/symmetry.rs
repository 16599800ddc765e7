//! Relabelling symmetries: permutations of measurements and outcomes,
//! optionally combined with a party swap.
//!
//! An op first swaps the parties (if requested; only valid on party-symmetric
//! scenarios), then permutes each party's measurements and, per measurement,
//! its outcomes. Measurement permutations must preserve outcome counts so
//! that the scenario is mapped onto itself.

use crate::model::PossibilisticModel;
use crate::scenario::{Cell, Party, Scenario};
use itertools::Itertools;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymmetryError {
    #[error("{party} measurement permutation is not a permutation of 0..{expected}")]
    BadMeasurementPermutation { party: Party, expected: usize },
    #[error("{party} measurement {measurement} would move to a slot with a different outcome count")]
    OutcomeCountMismatch { party: Party, measurement: usize },
    #[error("{party} outcome permutation for measurement {measurement} is not a permutation of its outcomes")]
    BadOutcomePermutation { party: Party, measurement: usize },
    #[error("party swap requires a party-symmetric scenario")]
    SwapNotApplicable,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetryOp {
    /// New slot for each (post-swap) Alice measurement.
    pub perm_a_meas: Vec<usize>,
    pub perm_b_meas: Vec<usize>,
    /// Outcome relabelling applied to (post-swap) Alice measurement `i` as it
    /// moves to slot `perm_a_meas[i]`.
    pub perm_a_out: Vec<Vec<usize>>,
    pub perm_b_out: Vec<Vec<usize>>,
    pub swap_parties: bool,
}

impl SymmetryOp {
    pub fn identity(scenario: &Scenario) -> Self {
        SymmetryOp {
            perm_a_meas: (0..scenario.k_a()).collect(),
            perm_b_meas: (0..scenario.k_b()).collect(),
            perm_a_out: scenario.outcomes_a().iter().map(|&l| (0..l).collect()).collect(),
            perm_b_out: scenario.outcomes_b().iter().map(|&l| (0..l).collect()).collect(),
            swap_parties: false,
        }
    }

    pub fn validate(&self, scenario: &Scenario) -> Result<(), SymmetryError> {
        if self.swap_parties && !scenario.is_party_symmetric() {
            return Err(SymmetryError::SwapNotApplicable);
        }
        for (party, meas_perm, out_perms) in [
            (Party::Alice, &self.perm_a_meas, &self.perm_a_out),
            (Party::Bob, &self.perm_b_meas, &self.perm_b_out),
        ] {
            // After an (optional) swap the scenario is unchanged, so each
            // party's permutations are validated against its own layout.
            let counts = match party {
                Party::Alice => scenario.outcomes_a(),
                Party::Bob => scenario.outcomes_b(),
            };
            let k = counts.len();
            if !is_permutation(meas_perm, k) {
                return Err(SymmetryError::BadMeasurementPermutation { party, expected: k });
            }
            if out_perms.len() != k {
                return Err(SymmetryError::BadMeasurementPermutation { party, expected: k });
            }
            for (measurement, perm) in out_perms.iter().enumerate() {
                if counts[meas_perm[measurement]] != counts[measurement] {
                    return Err(SymmetryError::OutcomeCountMismatch { party, measurement });
                }
                if !is_permutation(perm, counts[measurement]) {
                    return Err(SymmetryError::BadOutcomePermutation { party, measurement });
                }
            }
        }
        Ok(())
    }

    /// Where the op sends a cell. The op must be valid for the cell's scenario.
    pub fn map_cell(&self, cell: Cell) -> Cell {
        let (i, a, j, b) = if self.swap_parties {
            (cell.b_meas, cell.b_out, cell.a_meas, cell.a_out)
        } else {
            (cell.a_meas, cell.a_out, cell.b_meas, cell.b_out)
        };
        Cell::new(
            self.perm_a_meas[i],
            self.perm_a_out[i][a],
            self.perm_b_meas[j],
            self.perm_b_out[j][b],
        )
    }

    /// The op undoing this one: `apply(apply(m, op), op.inverse()) == m`.
    pub fn inverse(&self) -> SymmetryOp {
        let (a_meas, a_out) = invert_party(&self.perm_a_meas, &self.perm_a_out);
        let (b_meas, b_out) = invert_party(&self.perm_b_meas, &self.perm_b_out);
        if self.swap_parties {
            // self maps c to P(swap(c)); the inverse maps c to swap(P^-1(c)),
            // which in swap-first form exchanges the inverted parts.
            SymmetryOp {
                perm_a_meas: b_meas,
                perm_b_meas: a_meas,
                perm_a_out: b_out,
                perm_b_out: a_out,
                swap_parties: true,
            }
        } else {
            SymmetryOp {
                perm_a_meas: a_meas,
                perm_b_meas: b_meas,
                perm_a_out: a_out,
                perm_b_out: b_out,
                swap_parties: false,
            }
        }
    }
}

fn invert_party(meas: &[usize], out: &[Vec<usize>]) -> (Vec<usize>, Vec<Vec<usize>>) {
    let mut inv_meas = vec![0; meas.len()];
    for (src, &dst) in meas.iter().enumerate() {
        inv_meas[dst] = src;
    }
    // The inverse's outcome perm for source slot m undoes the perm that fed m.
    let inv_out = (0..meas.len())
        .map(|m| {
            let fed_by = inv_meas[m];
            let forward = &out[fed_by];
            let mut inverse = vec![0; forward.len()];
            for (src, &dst) in forward.iter().enumerate() {
                inverse[dst] = src;
            }
            inverse
        })
        .collect();
    (inv_meas, inv_out)
}

fn is_permutation(perm: &[usize], n: usize) -> bool {
    if perm.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return false;
        }
        seen[p] = true;
    }
    true
}

/// Relabels a model: the output has a 1 at `op.map_cell(c)` iff the input has
/// a 1 at `c`.
pub fn apply_symmetry(
    model: &PossibilisticModel,
    op: &SymmetryOp,
) -> Result<PossibilisticModel, SymmetryError> {
    let scenario = model.scenario();
    op.validate(scenario)?;
    let mut image = vec![false; scenario.num_cells()];
    for cell in scenario.cells() {
        if model.entry(cell) {
            image[scenario.cell_index(op.map_cell(cell))] = true;
        }
    }
    Ok(PossibilisticModel::from_fn(scenario, |cell| {
        image[scenario.cell_index(cell)]
    }))
}

/// Every symmetry op of the scenario (including party swaps when the
/// scenario is party-symmetric). Factorial in the measurement counts; meant
/// for desk-scale scenarios.
pub fn enumerate_symmetries(scenario: &Scenario) -> Vec<SymmetryOp> {
    let swaps: &[bool] = if scenario.is_party_symmetric() {
        &[false, true]
    } else {
        &[false]
    };
    let mut ops = Vec::new();
    for &swap_parties in swaps {
        for (a_meas, a_out) in party_relabellings(scenario.outcomes_a()) {
            for (b_meas, b_out) in party_relabellings(scenario.outcomes_b()) {
                ops.push(SymmetryOp {
                    perm_a_meas: a_meas.clone(),
                    perm_b_meas: b_meas,
                    perm_a_out: a_out.clone(),
                    perm_b_out: b_out,
                    swap_parties,
                });
            }
        }
    }
    ops
}

fn party_relabellings(counts: &[usize]) -> Vec<(Vec<usize>, Vec<Vec<usize>>)> {
    let k = counts.len();
    let mut out = Vec::new();
    for meas_perm in (0..k).permutations(k) {
        if (0..k).any(|m| counts[meas_perm[m]] != counts[m]) {
            continue;
        }
        let per_meas: Vec<Vec<Vec<usize>>> = counts
            .iter()
            .map(|&l| (0..l).permutations(l).collect())
            .collect();
        for combo in per_meas.into_iter().multi_cartesian_product() {
            out.push((meas_perm.clone(), combo));
        }
    }
    out
}
