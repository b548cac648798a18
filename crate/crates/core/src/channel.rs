//! Two-input channel model `W_{YZ|X1X2}` with a binary covert input.
//!
//! Both transition tables hold `2·|X2|` rows in lexicographic `(x1, x2)`
//! order: row `x1·|X2| + x2`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::probability::{chi_squared_unchecked, kl_unchecked, DenomMode, Pmf, PMF_TOLERANCE};

/// Max-norm gap below which two rows count as equal.
pub const DISTINCTNESS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed channel document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{table} has {rows} rows, expected {expected} (2 × x2_size)")]
    RowCount {
        table: Table,
        rows: usize,
        expected: usize,
    },
    #[error("{table} row {row} has {len} entries, expected {expected}")]
    RowLength {
        table: Table,
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error(
        "{table} row {row} entry {col} is {value}; probabilities must be finite and non-negative"
    )]
    Entry {
        table: Table,
        row: usize,
        col: usize,
        value: f64,
    },
    #[error("{table} row {row} sums to {sum}, expected 1 within {PMF_TOLERANCE:e}")]
    RowSum { table: Table, row: usize, sum: f64 },
    #[error("x2_size, y_size and z_size must be positive")]
    EmptyAlphabet,
    #[error("condition {condition} fails for x2 = {x2}")]
    ConditionViolated { x2: usize, condition: Condition },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    Y,
    Z,
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Table::Y => "w_y",
            Table::Z => "w_z",
        })
    }
}

/// The four admissibility conditions checked per `x2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// `W_Y(·|1,x2) ≪ W_Y(·|0,x2)`
    YAbsoluteContinuity,
    /// `W_Y(·|1,x2) ≠ W_Y(·|0,x2)`
    YDistinct,
    /// `W_Z(·|1,x2) ≪ W_Z(·|0,x2)`
    ZAbsoluteContinuity,
    /// `W_Z(·|1,x2) ≠ W_Z(·|0,x2)`
    ZDistinct,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::YAbsoluteContinuity,
        Condition::YDistinct,
        Condition::ZAbsoluteContinuity,
        Condition::ZDistinct,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Condition::YAbsoluteContinuity => "y-absolute-continuity",
            Condition::YDistinct => "y-distinctness",
            Condition::ZAbsoluteContinuity => "z-absolute-continuity",
            Condition::ZDistinct => "z-distinctness",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// On-disk form of a channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub x2_size: usize,
    pub y_size: usize,
    pub z_size: usize,
    pub w_y: Vec<Vec<f64>>,
    pub w_z: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteChannel {
    name: Option<String>,
    x2_size: usize,
    w_y: Vec<Pmf>,
    w_z: Vec<Pmf>,
}

impl DiscreteChannel {
    pub fn new(
        x2_size: usize,
        y_size: usize,
        z_size: usize,
        w_y: Vec<Vec<f64>>,
        w_z: Vec<Vec<f64>>,
    ) -> Result<Self, ChannelError> {
        Self::from_document(ChannelDocument {
            name: None,
            x2_size,
            y_size,
            z_size,
            w_y,
            w_z,
        })
    }

    pub fn from_document(doc: ChannelDocument) -> Result<Self, ChannelError> {
        if doc.x2_size == 0 || doc.y_size == 0 || doc.z_size == 0 {
            return Err(ChannelError::EmptyAlphabet);
        }
        let w_y = validate_table(Table::Y, doc.w_y, doc.x2_size, doc.y_size)?;
        let w_z = validate_table(Table::Z, doc.w_z, doc.x2_size, doc.z_size)?;
        Ok(DiscreteChannel {
            name: doc.name,
            x2_size: doc.x2_size,
            w_y,
            w_z,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ChannelError> {
        Self::from_document(serde_json::from_str(text)?)
    }

    pub fn to_document(&self) -> ChannelDocument {
        ChannelDocument {
            name: self.name.clone(),
            x2_size: self.x2_size,
            y_size: self.y_size(),
            z_size: self.z_size(),
            w_y: self.w_y.iter().map(|r| r.weights().to_vec()).collect(),
            w_z: self.w_z.iter().map(|r| r.weights().to_vec()).collect(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn x2_size(&self) -> usize {
        self.x2_size
    }

    pub fn y_size(&self) -> usize {
        self.w_y[0].len()
    }

    pub fn z_size(&self) -> usize {
        self.w_z[0].len()
    }

    /// `W_Y(·|x1,x2)`.
    pub fn w_y(&self, x1: usize, x2: usize) -> &Pmf {
        &self.w_y[self.row(x1, x2)]
    }

    /// `W_Z(·|x1,x2)`.
    pub fn w_z(&self, x1: usize, x2: usize) -> &Pmf {
        &self.w_z[self.row(x1, x2)]
    }

    fn row(&self, x1: usize, x2: usize) -> usize {
        assert!(
            x1 < 2 && x2 < self.x2_size,
            "input ({x1},{x2}) out of range"
        );
        x1 * self.x2_size + x2
    }

    /// The rows `W_Y(·|0,x2)` seen by the receiver when the covert user is silent.
    pub fn y_baseline(&self) -> Vec<Pmf> {
        (0..self.x2_size)
            .map(|x2| self.w_y(0, x2).clone())
            .collect()
    }

    pub fn check_conditions(&self) -> ConditionReport {
        let per_x2: Vec<X2Conditions> = (0..self.x2_size)
            .map(|x2| {
                let (y0, y1) = (self.w_y(0, x2).weights(), self.w_y(1, x2).weights());
                let (z0, z1) = (self.w_z(0, x2).weights(), self.w_z(1, x2).weights());
                X2Conditions {
                    y_absolute_continuity: absolutely_continuous(y1, y0),
                    y_distinct: distinct(y1, y0),
                    z_absolute_continuity: absolutely_continuous(z1, z0),
                    z_distinct: distinct(z1, z0),
                }
            })
            .collect();
        let admissible = per_x2.iter().all(X2Conditions::all_hold);
        ConditionReport { per_x2, admissible }
    }

    /// Per-`x2` divergence and chi-squared statistics; refuses inadmissible channels.
    pub fn x2_stats(&self, mode: DenomMode) -> Result<X2Stats, ChannelError> {
        let report = self.check_conditions();
        if let Some((x2, condition)) = report.first_violation() {
            return Err(ChannelError::ConditionViolated { x2, condition });
        }
        Ok(self.x2_stats_unchecked(mode))
    }

    /// Same as [`x2_stats`](Self::x2_stats) without the admissibility gate;
    /// support violations surface as infinite entries.
    pub fn x2_stats_unchecked(&self, mode: DenomMode) -> X2Stats {
        let mut stats = X2Stats {
            mode,
            d_y: vec![],
            d_z: vec![],
            chi2_y: vec![],
            chi2_z: vec![],
        };
        for x2 in 0..self.x2_size {
            let (y0, y1) = (self.w_y(0, x2).weights(), self.w_y(1, x2).weights());
            let (z0, z1) = (self.w_z(0, x2).weights(), self.w_z(1, x2).weights());
            stats.d_y.push(kl_unchecked(y1, y0));
            stats.d_z.push(kl_unchecked(z1, z0));
            stats.chi2_y.push(chi_squared_unchecked(y1, y0, mode));
            stats.chi2_z.push(chi_squared_unchecked(z1, z0, mode));
        }
        stats
    }

    /// Smallest non-zero entry among the rows `W_Z(·|0,x2)`.
    pub fn eta0(&self) -> f64 {
        (0..self.x2_size)
            .flat_map(|x2| self.w_z(0, x2).weights().iter().copied())
            .filter(|&w| w > 0.0)
            .fold(f64::INFINITY, f64::min)
    }
}

fn validate_table(
    table: Table,
    rows: Vec<Vec<f64>>,
    x2_size: usize,
    width: usize,
) -> Result<Vec<Pmf>, ChannelError> {
    let expected = 2 * x2_size;
    if rows.len() != expected {
        return Err(ChannelError::RowCount {
            table,
            rows: rows.len(),
            expected,
        });
    }
    rows.into_iter()
        .enumerate()
        .map(|(row, entries)| {
            if entries.len() != width {
                return Err(ChannelError::RowLength {
                    table,
                    row,
                    len: entries.len(),
                    expected: width,
                });
            }
            if let Some((col, &value)) = entries
                .iter()
                .enumerate()
                .find(|(_, v)| !v.is_finite() || **v < 0.0)
            {
                return Err(ChannelError::Entry {
                    table,
                    row,
                    col,
                    value,
                });
            }
            let sum: f64 = entries.iter().sum();
            Pmf::new(entries).map_err(|_| ChannelError::RowSum { table, row, sum })
        })
        .collect()
}

fn absolutely_continuous(p: &[f64], q: &[f64]) -> bool {
    p.iter().zip(q).all(|(&pi, &qi)| pi == 0.0 || qi > 0.0)
}

fn distinct(p: &[f64], q: &[f64]) -> bool {
    p.iter()
        .zip(q)
        .any(|(a, b)| (a - b).abs() > DISTINCTNESS_TOLERANCE)
}

/// Reads and validates a channel document from disk.
pub fn load_channel(path: impl AsRef<Path>) -> Result<DiscreteChannel, ChannelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ChannelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    DiscreteChannel::from_json(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct X2Conditions {
    pub y_absolute_continuity: bool,
    pub y_distinct: bool,
    pub z_absolute_continuity: bool,
    pub z_distinct: bool,
}

impl X2Conditions {
    pub fn holds(&self, c: Condition) -> bool {
        match c {
            Condition::YAbsoluteContinuity => self.y_absolute_continuity,
            Condition::YDistinct => self.y_distinct,
            Condition::ZAbsoluteContinuity => self.z_absolute_continuity,
            Condition::ZDistinct => self.z_distinct,
        }
    }

    pub fn all_hold(&self) -> bool {
        Condition::ALL.iter().all(|&c| self.holds(c))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionReport {
    pub per_x2: Vec<X2Conditions>,
    pub admissible: bool,
}

impl ConditionReport {
    pub fn violations(&self) -> impl Iterator<Item = (usize, Condition)> + '_ {
        self.per_x2.iter().enumerate().flat_map(|(x2, c)| {
            Condition::ALL
                .into_iter()
                .filter(|&k| !c.holds(k))
                .map(move |k| (x2, k))
        })
    }

    pub fn first_violation(&self) -> Option<(usize, Condition)> {
        self.violations().next()
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (x2, c) in self.per_x2.iter().enumerate() {
            write!(f, "x2={x2}:")?;
            for k in Condition::ALL {
                write!(
                    f,
                    " {}={}",
                    k.label(),
                    if c.holds(k) { "ok" } else { "FAIL" }
                )?;
            }
            writeln!(f)?;
        }
        write!(
            f,
            "admissible: {}",
            if self.admissible { "yes" } else { "no" }
        )
    }
}

/// Per-`x2` statistics of the covert input's effect on both outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct X2Stats {
    pub mode: DenomMode,
    pub d_y: Vec<f64>,
    pub d_z: Vec<f64>,
    pub chi2_y: Vec<f64>,
    pub chi2_z: Vec<f64>,
}

impl X2Stats {
    pub fn x2_size(&self) -> usize {
        self.d_y.len()
    }

    pub fn is_finite(&self) -> bool {
        [&self.d_y, &self.d_z, &self.chi2_y, &self.chi2_z]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}
