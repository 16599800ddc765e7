//! Empirical models: boolean possibility tables and exact-rational
//! probability tables over a scenario.
//!
//! Possibilistic tables are total (every cell carries 0 or 1) and bit-packed
//! in canonical cell order. Probabilistic tables keep one exact rational per
//! cell and are normalized box by box. Both are immutable after construction,
//! so they can be shared freely across parallel workers.

use crate::scenario::{Cell, Party, Scenario};
use num::{BigRational, Signed, Zero};
use std::collections::HashSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("cell {0} is missing from the given entries")]
    MissingCell(Cell),
    #[error("cell {0} appears more than once")]
    DuplicateCell(Cell),
    #[error("cell {0} is outside the scenario")]
    CellOutOfRange(Cell),
    #[error("entry at {cell} is {value}, expected 0 or 1")]
    NotBoolean { cell: Cell, value: u8 },
    #[error("row data has wrong shape: expected {expected} {what}, found {found}")]
    WrongShape {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("negative probability at {0}")]
    NegativeEntry(Cell),
    #[error("box ({a_meas},{b_meas}) sums to {sum}, expected 1")]
    BoxNotNormalized {
        a_meas: usize,
        b_meas: usize,
        sum: String,
    },
    #[error("operands live on different scenarios")]
    ScenarioMismatch,
    #[error("weights must be positive and sum to 1")]
    BadWeights,
}

/// A totally defined boolean possibility table.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PossibilisticModel {
    scenario: Scenario,
    bits: Vec<u64>,
}

impl PossibilisticModel {
    /// Builds a model by evaluating `f` on every cell in canonical order.
    pub fn from_fn(scenario: &Scenario, mut f: impl FnMut(Cell) -> bool) -> Self {
        let mut bits = vec![0u64; scenario.num_cells().div_ceil(64)];
        for (idx, cell) in scenario.cells().enumerate() {
            if f(cell) {
                bits[idx / 64] |= 1 << (idx % 64);
            }
        }
        PossibilisticModel {
            scenario: scenario.clone(),
            bits,
        }
    }

    /// Builds a model from an explicit cell map. The map must cover the
    /// scenario's cell domain exactly: out-of-range, duplicate and missing
    /// cells are each rejected.
    pub fn from_cells(
        scenario: &Scenario,
        entries: impl IntoIterator<Item = (Cell, bool)>,
    ) -> Result<Self, ModelError> {
        let mut seen = HashSet::new();
        let mut bits = vec![0u64; scenario.num_cells().div_ceil(64)];
        for (cell, value) in entries {
            if !scenario.contains_cell(cell) {
                return Err(ModelError::CellOutOfRange(cell));
            }
            if !seen.insert(cell) {
                return Err(ModelError::DuplicateCell(cell));
            }
            if value {
                let idx = scenario.cell_index(cell);
                bits[idx / 64] |= 1 << (idx % 64);
            }
        }
        if seen.len() != scenario.num_cells() {
            let missing = scenario
                .cells()
                .find(|c| !seen.contains(c))
                .expect("some cell is missing");
            return Err(ModelError::MissingCell(missing));
        }
        Ok(PossibilisticModel {
            scenario: scenario.clone(),
            bits,
        })
    }

    /// Builds a model from sub-row-major 0/1 entries laid out as the table is
    /// printed: `rows[r][c]` where `r` runs over Alice (measurement, outcome)
    /// pairs and `c` over Bob's.
    pub fn from_rows(scenario: &Scenario, rows: &[&[u8]]) -> Result<Self, ModelError> {
        if rows.len() != scenario.rows_a() {
            return Err(ModelError::WrongShape {
                what: "rows",
                expected: scenario.rows_a(),
                found: rows.len(),
            });
        }
        for row in rows {
            if row.len() != scenario.rows_b() {
                return Err(ModelError::WrongShape {
                    what: "columns",
                    expected: scenario.rows_b(),
                    found: row.len(),
                });
            }
        }
        let mut bad: Option<(Cell, u8)> = None;
        let model = PossibilisticModel::from_fn(scenario, |cell| {
            let idx = scenario.cell_index(cell);
            let value = rows[idx / scenario.rows_b()][idx % scenario.rows_b()];
            if value > 1 && bad.is_none() {
                bad = Some((cell, value));
            }
            value != 0
        });
        if let Some((cell, value)) = bad {
            return Err(ModelError::NotBoolean { cell, value });
        }
        Ok(model)
    }

    pub(crate) fn from_words(scenario: &Scenario, mut bits: Vec<u64>) -> Self {
        debug_assert_eq!(bits.len(), scenario.num_cells().div_ceil(64));
        let tail = scenario.num_cells() % 64;
        if tail != 0 {
            *bits.last_mut().unwrap() &= (1u64 << tail) - 1;
        }
        PossibilisticModel {
            scenario: scenario.clone(),
            bits,
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn entry(&self, cell: Cell) -> bool {
        let idx = self.scenario.cell_index(cell);
        self.bits[idx / 64] >> (idx % 64) & 1 == 1
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.bits
    }

    /// All cells whose entry is 1, in canonical order.
    pub fn ones(&self) -> impl Iterator<Item = Cell> + '_ {
        self.scenario
            .cells()
            .enumerate()
            .filter(|(idx, _)| self.bits[idx / 64] >> (idx % 64) & 1 == 1)
            .map(|(_, cell)| cell)
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// True when the box for measurement pair `(i, j)` contains no 1.
    pub fn box_is_zero(&self, i: usize, j: usize) -> bool {
        for a in 0..self.scenario.outcomes(Party::Alice, i) {
            for b in 0..self.scenario.outcomes(Party::Bob, j) {
                if self.entry(Cell::new(i, a, j, b)) {
                    return false;
                }
            }
        }
        true
    }

    /// Normalization of possibility: every box contains at least one 1.
    pub fn is_normalized(&self) -> bool {
        self.scenario.boxes().all(|(i, j)| !self.box_is_zero(i, j))
    }

    /// Possibilistic mixture: cellwise boolean OR. An outcome is possible in
    /// the mixture iff it is possible in at least one component.
    pub fn mixture(&self, other: &PossibilisticModel) -> Result<PossibilisticModel, ModelError> {
        if self.scenario != other.scenario {
            return Err(ModelError::ScenarioMismatch);
        }
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(x, y)| x | y)
            .collect();
        Ok(PossibilisticModel {
            scenario: self.scenario.clone(),
            bits,
        })
    }
}

impl fmt::Display for PossibilisticModel {
    /// Prints the table sub-row by sub-row with `|` between boxes.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.scenario.k_a() {
            for a in 0..self.scenario.outcomes(Party::Alice, i) {
                for j in 0..self.scenario.k_b() {
                    if j > 0 {
                        write!(f, " |")?;
                    }
                    for b in 0..self.scenario.outcomes(Party::Bob, j) {
                        write!(f, " {}", u8::from(self.entry(Cell::new(i, a, j, b))))?;
                    }
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

/// An exact-rational probability table, normalized per measurement pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbabilisticModel {
    scenario: Scenario,
    entries: Vec<BigRational>,
}

impl ProbabilisticModel {
    /// Builds and validates a model from per-cell rationals in canonical order.
    pub fn from_entries(
        scenario: &Scenario,
        entries: Vec<BigRational>,
    ) -> Result<Self, ModelError> {
        if entries.len() != scenario.num_cells() {
            return Err(ModelError::WrongShape {
                what: "cells",
                expected: scenario.num_cells(),
                found: entries.len(),
            });
        }
        let model = ProbabilisticModel {
            scenario: scenario.clone(),
            entries,
        };
        model.validate()?;
        Ok(model)
    }

    /// Builds a model from sub-row-major entries as printed.
    pub fn from_rows(scenario: &Scenario, rows: &[Vec<BigRational>]) -> Result<Self, ModelError> {
        if rows.len() != scenario.rows_a() {
            return Err(ModelError::WrongShape {
                what: "rows",
                expected: scenario.rows_a(),
                found: rows.len(),
            });
        }
        let mut entries = Vec::with_capacity(scenario.num_cells());
        for row in rows {
            if row.len() != scenario.rows_b() {
                return Err(ModelError::WrongShape {
                    what: "columns",
                    expected: scenario.rows_b(),
                    found: row.len(),
                });
            }
            entries.extend(row.iter().cloned());
        }
        ProbabilisticModel::from_entries(scenario, entries)
    }

    /// The distribution concentrating all probability on one deterministic grid.
    pub fn point_mass(
        scenario: &Scenario,
        grid: &crate::grid::DeterministicGrid,
    ) -> Result<Self, ModelError> {
        let table = crate::grid::grid_table(scenario, grid).map_err(|_| {
            ModelError::WrongShape {
                what: "grid choices",
                expected: scenario.k_a() + scenario.k_b(),
                found: grid.choice_a.len() + grid.choice_b.len(),
            }
        })?;
        let one = BigRational::from_integer(1.into());
        let zero = BigRational::zero();
        let entries = scenario
            .cells()
            .map(|c| if table.entry(c) { one.clone() } else { zero.clone() })
            .collect();
        ProbabilisticModel::from_entries(scenario, entries)
    }

    fn validate(&self) -> Result<(), ModelError> {
        for cell in self.scenario.cells() {
            if self.entry(cell).is_negative() {
                return Err(ModelError::NegativeEntry(cell));
            }
        }
        for (i, j) in self.scenario.boxes() {
            let mut sum = BigRational::zero();
            for a in 0..self.scenario.outcomes(Party::Alice, i) {
                for b in 0..self.scenario.outcomes(Party::Bob, j) {
                    sum += self.entry(Cell::new(i, a, j, b));
                }
            }
            if sum != BigRational::from_integer(1.into()) {
                return Err(ModelError::BoxNotNormalized {
                    a_meas: i,
                    b_meas: j,
                    sum: sum.to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn entry(&self, cell: Cell) -> &BigRational {
        &self.entries[self.scenario.cell_index(cell)]
    }

    /// Possibilistic collapse: every strictly positive probability becomes 1.
    pub fn collapse(&self) -> PossibilisticModel {
        PossibilisticModel::from_fn(&self.scenario, |cell| self.entry(cell).is_positive())
    }

    /// Convex combination with positive weights summing to 1.
    pub fn convex_combination(
        parts: &[(BigRational, &ProbabilisticModel)],
    ) -> Result<Self, ModelError> {
        let (first_weight, first) = parts.first().ok_or(ModelError::BadWeights)?;
        let scenario = first.scenario.clone();
        let mut weight_sum = BigRational::zero();
        for (w, m) in parts {
            if !w.is_positive() {
                return Err(ModelError::BadWeights);
            }
            if m.scenario != scenario {
                return Err(ModelError::ScenarioMismatch);
            }
            weight_sum += w;
        }
        if weight_sum != BigRational::from_integer(1.into()) {
            return Err(ModelError::BadWeights);
        }
        let mut entries: Vec<BigRational> = first
            .entries
            .iter()
            .map(|p| p * first_weight)
            .collect();
        for (w, m) in &parts[1..] {
            for (acc, p) in entries.iter_mut().zip(&m.entries) {
                *acc += p * w;
            }
        }
        ProbabilisticModel::from_entries(&scenario, entries)
    }
}

/// Outcome of the measurement-locality preprocessing check.
///
/// A raw table may contain all-zero boxes standing for measurement
/// combinations that never occurred. Measurement locality holds iff every
/// such box lies in a full row or full column of all-zero boxes; those
/// rows/columns can then be dropped, leaving a totally defined table for
/// the downstream analyses.
#[derive(Clone, Debug)]
pub struct MlReport {
    /// All-zero boxes that are not covered by a full zero row or column.
    pub violations: Vec<(usize, usize)>,
    /// Alice settings whose whole row of boxes is zero.
    pub zero_rows: Vec<usize>,
    /// Bob settings whose whole column of boxes is zero.
    pub zero_cols: Vec<usize>,
    /// The reduced model, present iff the check holds and at least one
    /// measurement per party survives the reduction.
    pub reduced: Option<PossibilisticModel>,
}

impl MlReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_measurement_locality(model: &PossibilisticModel) -> MlReport {
    let s = model.scenario();
    let zero_box: Vec<Vec<bool>> = (0..s.k_a())
        .map(|i| (0..s.k_b()).map(|j| model.box_is_zero(i, j)).collect())
        .collect();
    let zero_rows: Vec<usize> = (0..s.k_a())
        .filter(|&i| (0..s.k_b()).all(|j| zero_box[i][j]))
        .collect();
    let zero_cols: Vec<usize> = (0..s.k_b())
        .filter(|&j| (0..s.k_a()).all(|i| zero_box[i][j]))
        .collect();
    let violations: Vec<(usize, usize)> = s
        .boxes()
        .filter(|&(i, j)| {
            zero_box[i][j] && !zero_rows.contains(&i) && !zero_cols.contains(&j)
        })
        .collect();

    let keep_a: Vec<usize> = (0..s.k_a()).filter(|i| !zero_rows.contains(i)).collect();
    let keep_b: Vec<usize> = (0..s.k_b()).filter(|j| !zero_cols.contains(j)).collect();
    let reduced = if violations.is_empty() && !keep_a.is_empty() && !keep_b.is_empty() {
        let reduced_scenario = Scenario::new(
            keep_a.iter().map(|&i| s.outcomes(Party::Alice, i)).collect(),
            keep_b.iter().map(|&j| s.outcomes(Party::Bob, j)).collect(),
        )
        .expect("surviving settings form a valid scenario");
        Some(PossibilisticModel::from_fn(&reduced_scenario, |cell| {
            model.entry(Cell::new(
                keep_a[cell.a_meas],
                cell.a_out,
                keep_b[cell.b_meas],
                cell.b_out,
            ))
        }))
    } else {
        None
    };

    MlReport {
        violations,
        zero_rows,
        zero_cols,
        reduced,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::grid::{enumerate_grids, grid_table};
    use num::One;

    fn s222() -> Scenario {
        Scenario::uniform(2, 2).unwrap()
    }

    #[test]
    fn from_cells_accepts_a_total_map() {
        // The aligned deterministic example over (2,2,2).
        let s = s222();
        let reference = fixtures::deterministic_model();
        let model =
            PossibilisticModel::from_cells(&s, s.cells().map(|c| (c, reference.entry(c))))
                .unwrap();
        assert_eq!(model, reference);

        let all_ones = PossibilisticModel::from_cells(&s, s.cells().map(|c| (c, true))).unwrap();
        assert_eq!(all_ones.count_ones(), 16);
    }

    #[test]
    fn from_cells_rejects_bad_maps() {
        let s = s222();
        let missing: Vec<(Cell, bool)> = s.cells().skip(1).map(|c| (c, true)).collect();
        assert!(matches!(
            PossibilisticModel::from_cells(&s, missing),
            Err(ModelError::MissingCell(c)) if c == Cell::new(0, 0, 0, 0)
        ));

        let mut dup: Vec<(Cell, bool)> = s.cells().map(|c| (c, true)).collect();
        dup.push((Cell::new(1, 1, 1, 1), false));
        assert!(matches!(
            PossibilisticModel::from_cells(&s, dup),
            Err(ModelError::DuplicateCell(_))
        ));

        let out_of_range = vec![(Cell::new(2, 0, 0, 0), true)];
        assert!(matches!(
            PossibilisticModel::from_cells(&s, out_of_range),
            Err(ModelError::CellOutOfRange(_))
        ));
    }

    #[test]
    fn from_rows_rejects_non_boolean_entries() {
        let s = s222();
        let err = PossibilisticModel::from_rows(
            &s,
            &[
                &[1, 0, 1, 0],
                &[0, 2, 0, 0],
                &[1, 0, 1, 0],
                &[0, 0, 0, 0],
            ],
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::NotBoolean { value: 2, .. }));
    }

    #[test]
    fn collapse_of_counterexample_table_has_exactly_the_printed_zeros() {
        let prob = fixtures::nonlocal_without_hardy_probabilistic();
        let collapsed = prob.collapse();
        assert_eq!(collapsed, fixtures::nonlocal_without_hardy_pattern());
        let zeros: Vec<Cell> = collapsed
            .scenario()
            .cells()
            .filter(|&c| !collapsed.entry(c))
            .collect();
        assert_eq!(
            zeros,
            vec![
                Cell::new(0, 0, 1, 0),
                Cell::new(1, 0, 0, 0),
                Cell::new(1, 1, 1, 1),
                Cell::new(2, 0, 0, 0),
                Cell::new(2, 1, 1, 2),
            ]
        );
    }

    #[test]
    fn collapse_of_uniform_box_distributions_is_all_ones() {
        let s = Scenario::new(vec![2, 2], vec![2, 3]).unwrap();
        let quarter = |l: usize| BigRational::new(1.into(), (l as i64).into());
        let uniform = ProbabilisticModel::from_entries(
            &s,
            s.cells()
                .map(|c| {
                    let box_size = s.outcomes(Party::Alice, c.a_meas)
                        * s.outcomes(Party::Bob, c.b_meas);
                    quarter(box_size)
                })
                .collect(),
        )
        .unwrap();
        assert_eq!(uniform.collapse().count_ones(), s.num_cells());
    }

    #[test]
    fn collapse_of_point_mass_is_the_grid_table() {
        let s = s222();
        for grid in enumerate_grids(&s) {
            let point = ProbabilisticModel::point_mass(&s, &grid).unwrap();
            assert_eq!(point.collapse(), grid_table(&s, &grid).unwrap());
        }
    }

    #[test]
    fn probabilistic_validation_is_exact() {
        let s = Scenario::new(vec![1], vec![2]).unwrap();
        let half = BigRational::new(1.into(), 2.into());
        assert!(ProbabilisticModel::from_entries(&s, vec![half.clone(), half.clone()]).is_ok());
        assert!(matches!(
            ProbabilisticModel::from_entries(&s, vec![half.clone(), half.clone() + half.clone()]),
            Err(ModelError::BoxNotNormalized { .. })
        ));
        assert!(matches!(
            ProbabilisticModel::from_entries(
                &s,
                vec![-half.clone(), half.clone() + BigRational::one()]
            ),
            Err(ModelError::NegativeEntry(_))
        ));
    }

    #[test]
    fn mixture_is_idempotent_and_checks_scenarios() {
        let m = fixtures::two_grid_local_model();
        assert_eq!(m.mixture(&m).unwrap(), m);
        let other = PossibilisticModel::from_fn(&Scenario::uniform(2, 3).unwrap(), |_| true);
        assert!(matches!(
            m.mixture(&other),
            Err(ModelError::ScenarioMismatch)
        ));
    }

    #[test]
    fn mixture_of_all_grids_covers_every_cell() {
        // Oracle: every cell lies on some deterministic grid, so the OR of
        // all 16 grid tables of (2,2,2) is the all-ones table.
        let s = s222();
        let mut acc = PossibilisticModel::from_fn(&s, |_| false);
        let grids = enumerate_grids(&s);
        assert_eq!(grids.len(), 16);
        for grid in &grids {
            acc = acc.mixture(&grid_table(&s, grid).unwrap()).unwrap();
        }
        assert_eq!(acc.count_ones(), 16);
    }

    #[test]
    fn two_grid_model_decomposes_as_a_mixture_of_grid_tables() {
        // Search the 16 grids of (2,2,2) for a covering pair.
        let s = s222();
        let target = fixtures::two_grid_local_model();
        let tables: Vec<PossibilisticModel> = enumerate_grids(&s)
            .iter()
            .map(|g| grid_table(&s, g).unwrap())
            .collect();
        let pair = tables
            .iter()
            .enumerate()
            .flat_map(|(x, gx)| {
                tables
                    .iter()
                    .enumerate()
                    .skip(x + 1)
                    .map(move |(y, gy)| ((x, gx), (y, gy)))
            })
            .find(|((_, gx), (_, gy))| gx.mixture(gy).unwrap() == target);
        assert!(pair.is_some(), "no covering pair of grids found");
    }

    #[test]
    fn ml_flags_isolated_zero_boxes() {
        let s = Scenario::uniform(2, 2).unwrap();
        // Box (0,0) is all zero, but its row and column contain live boxes.
        let m = PossibilisticModel::from_fn(&s, |c| !(c.a_meas == 0 && c.b_meas == 0));
        let report = check_measurement_locality(&m);
        assert!(!report.holds());
        assert_eq!(report.violations, vec![(0, 0)]);
        assert!(report.reduced.is_none());
    }

    #[test]
    fn ml_drops_fully_zero_settings() {
        let s = Scenario::new(vec![2, 2], vec![2, 3]).unwrap();
        let m = PossibilisticModel::from_fn(&s, |c| c.b_meas != 1);
        let report = check_measurement_locality(&m);
        assert!(report.holds());
        assert_eq!(report.zero_cols, vec![1]);
        let reduced = report.reduced.unwrap();
        assert_eq!(reduced.scenario().outcomes_b(), &[2]);
        assert_eq!(reduced.count_ones(), 8);
    }

    #[test]
    fn ml_passes_totally_live_tables_untouched() {
        let report = check_measurement_locality(&fixtures::two_grid_local_model());
        assert!(report.holds());
        assert!(report.zero_rows.is_empty() && report.zero_cols.is_empty());
        assert_eq!(report.reduced.unwrap(), fixtures::two_grid_local_model());
    }

    #[test]
    fn ml_on_the_all_zero_table_is_degenerate() {
        let m = PossibilisticModel::from_fn(&s222(), |_| false);
        let report = check_measurement_locality(&m);
        assert!(report.holds());
        assert!(report.reduced.is_none());
        assert_eq!(report.zero_rows, vec![0, 1]);
    }

    #[test]
    fn convex_combination_validates_weights() {
        let s = s222();
        let grid = enumerate_grids(&s).into_iter().next().unwrap();
        let point = ProbabilisticModel::point_mass(&s, &grid).unwrap();
        let half = BigRational::new(1.into(), 2.into());
        assert!(ProbabilisticModel::convex_combination(&[
            (half.clone(), &point),
            (half.clone(), &point)
        ])
        .is_ok());
        assert!(matches!(
            ProbabilisticModel::convex_combination(&[(half.clone(), &point)]),
            Err(ModelError::BadWeights)
        ));
        assert!(matches!(
            ProbabilisticModel::convex_combination(&[
                (BigRational::zero(), &point),
                (BigRational::one(), &point)
            ]),
            Err(ModelError::BadWeights)
        ));
    }
}
