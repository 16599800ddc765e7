//! Bipartite measurement scenarios and table cells.
//!
//! A scenario fixes, for each of the two parties, how many measurements are
//! available and how many outcomes each measurement has. Outcome counts may
//! differ per measurement; the uniform two-party scenario with `k` settings
//! of `l` outcomes each is the special case [`Scenario::uniform`].

use serde::Serialize;
use std::fmt;
use thiserror::Error;

/// Upper bound on outcomes per measurement. Grid-completion search keeps
/// per-measurement outcome sets in a `u128` mask.
pub const MAX_OUTCOMES: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Party {
    Alice,
    Bob,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Alice => write!(f, "Alice"),
            Party::Bob => write!(f, "Bob"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("{party} has no measurements")]
    NoMeasurements { party: Party },
    #[error("{party} measurement {measurement} has zero outcomes")]
    ZeroOutcomes { party: Party, measurement: usize },
    #[error("{party} measurement {measurement} has {count} outcomes, limit is {MAX_OUTCOMES}")]
    TooManyOutcomes {
        party: Party,
        measurement: usize,
        count: usize,
    },
    #[error("malformed scenario spec {spec:?}: {reason}")]
    BadSpec { spec: String, reason: String },
}

/// One cell of an empirical-model table: Alice's measurement and outcome
/// paired with Bob's measurement and outcome.
///
/// The derived ordering (Alice measurement, Alice outcome, Bob measurement,
/// Bob outcome) is the canonical cell order used for witness selection and
/// storage layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Cell {
    pub a_meas: usize,
    pub a_out: usize,
    pub b_meas: usize,
    pub b_out: usize,
}

impl Cell {
    pub fn new(a_meas: usize, a_out: usize, b_meas: usize, b_out: usize) -> Self {
        Cell {
            a_meas,
            a_out,
            b_meas,
            b_out,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{};{},{})",
            self.a_meas, self.a_out, self.b_meas, self.b_out
        )
    }
}

/// A bipartite measurement scenario with per-measurement outcome counts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Scenario {
    outcomes_a: Vec<usize>,
    outcomes_b: Vec<usize>,
    // Cumulative outcome offsets, cached for cell indexing.
    #[serde(skip)]
    offsets_a: Vec<usize>,
    #[serde(skip)]
    offsets_b: Vec<usize>,
}

impl Scenario {
    pub fn new(outcomes_a: Vec<usize>, outcomes_b: Vec<usize>) -> Result<Self, ScenarioError> {
        for (party, outcomes) in [(Party::Alice, &outcomes_a), (Party::Bob, &outcomes_b)] {
            if outcomes.is_empty() {
                return Err(ScenarioError::NoMeasurements { party });
            }
            for (measurement, &count) in outcomes.iter().enumerate() {
                if count == 0 {
                    return Err(ScenarioError::ZeroOutcomes { party, measurement });
                }
                if count > MAX_OUTCOMES {
                    return Err(ScenarioError::TooManyOutcomes {
                        party,
                        measurement,
                        count,
                    });
                }
            }
        }
        let offsets_a = offsets(&outcomes_a);
        let offsets_b = offsets(&outcomes_b);
        Ok(Scenario {
            outcomes_a,
            outcomes_b,
            offsets_a,
            offsets_b,
        })
    }

    /// The uniform scenario: `k` measurements with `l` outcomes per party.
    pub fn uniform(k: usize, l: usize) -> Result<Self, ScenarioError> {
        Scenario::new(vec![l; k], vec![l; k])
    }

    /// Parses the CLI spec syntax, e.g. `a=2,2,2;b=2,3`.
    pub fn parse_spec(spec: &str) -> Result<Self, ScenarioError> {
        let bad = |reason: &str| ScenarioError::BadSpec {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        let mut outcomes_a = None;
        let mut outcomes_b = None;
        for part in spec.split(';') {
            let (key, counts) = part
                .split_once('=')
                .ok_or_else(|| bad("expected `a=...` and `b=...` parts separated by `;`"))?;
            let parsed = counts
                .split(',')
                .map(|c| c.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad("outcome counts must be positive integers"))?;
            match key.trim() {
                "a" => outcomes_a = Some(parsed),
                "b" => outcomes_b = Some(parsed),
                other => return Err(bad(&format!("unknown party {other:?}, expected a or b"))),
            }
        }
        let outcomes_a = outcomes_a.ok_or_else(|| bad("missing `a=` part"))?;
        let outcomes_b = outcomes_b.ok_or_else(|| bad("missing `b=` part"))?;
        Scenario::new(outcomes_a, outcomes_b)
    }

    pub fn outcomes_a(&self) -> &[usize] {
        &self.outcomes_a
    }

    pub fn outcomes_b(&self) -> &[usize] {
        &self.outcomes_b
    }

    /// Number of Alice measurements.
    pub fn k_a(&self) -> usize {
        self.outcomes_a.len()
    }

    /// Number of Bob measurements.
    pub fn k_b(&self) -> usize {
        self.outcomes_b.len()
    }

    pub fn outcomes(&self, party: Party, measurement: usize) -> usize {
        match party {
            Party::Alice => self.outcomes_a[measurement],
            Party::Bob => self.outcomes_b[measurement],
        }
    }

    /// Total Alice sub-rows: sum of all Alice outcome counts.
    pub fn rows_a(&self) -> usize {
        *self.offsets_a.last().unwrap()
    }

    /// Total Bob sub-columns.
    pub fn rows_b(&self) -> usize {
        *self.offsets_b.last().unwrap()
    }

    pub fn num_cells(&self) -> usize {
        self.rows_a() * self.rows_b()
    }

    pub fn contains_cell(&self, cell: Cell) -> bool {
        cell.a_meas < self.k_a()
            && cell.a_out < self.outcomes_a[cell.a_meas]
            && cell.b_meas < self.k_b()
            && cell.b_out < self.outcomes_b[cell.b_meas]
    }

    /// Linear index of a cell in canonical (row-major) order.
    pub fn cell_index(&self, cell: Cell) -> usize {
        debug_assert!(self.contains_cell(cell));
        let row = self.offsets_a[cell.a_meas] + cell.a_out;
        let col = self.offsets_b[cell.b_meas] + cell.b_out;
        row * self.rows_b() + col
    }

    /// Inverse of [`Scenario::cell_index`].
    pub fn cell_at(&self, index: usize) -> Cell {
        let row = index / self.rows_b();
        let col = index % self.rows_b();
        let a_meas = self.offsets_a.partition_point(|&o| o <= row) - 1;
        let b_meas = self.offsets_b.partition_point(|&o| o <= col) - 1;
        Cell {
            a_meas,
            a_out: row - self.offsets_a[a_meas],
            b_meas,
            b_out: col - self.offsets_b[b_meas],
        }
    }

    /// All cells in canonical order.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.num_cells()).map(|idx| self.cell_at(idx))
    }

    /// All measurement pairs (one box per pair), Alice-major.
    pub fn boxes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.k_a()).flat_map(|i| (0..self.k_b()).map(move |j| (i, j)))
    }

    /// True when both parties have exactly two measurements.
    pub fn is_two_setting(&self) -> bool {
        self.k_a() == 2 && self.k_b() == 2
    }

    /// True when every measurement of both parties has exactly two outcomes.
    pub fn all_binary_outcomes(&self) -> bool {
        self.outcomes_a.iter().chain(&self.outcomes_b).all(|&l| l == 2)
    }

    /// True when both parties have identical measurement layouts.
    pub fn is_party_symmetric(&self) -> bool {
        self.outcomes_a == self.outcomes_b
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[usize]| {
            v.iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "a={};b={}", list(&self.outcomes_a), list(&self.outcomes_b))
    }
}

fn offsets(counts: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(counts.len() + 1);
    let mut acc = 0;
    out.push(0);
    for &c in counts {
        acc += c;
        out.push(acc);
    }
    out
}
