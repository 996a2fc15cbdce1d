//! Radially symmetric nonnegative potentials `b(r)`.

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("negative parameter {name} = {value}")]
    NegativeParameter { name: &'static str, value: f64 },
    #[error("non-finite parameter {name}")]
    NonFinite { name: &'static str },
    #[error("table needs at least two samples, found {0}")]
    TooFewSamples(usize),
    #[error("table abscissae must be strictly increasing and start at r >= 0 (row {row})")]
    NotIncreasing { row: usize },
    #[error("table value b = {value} at row {row} is negative")]
    NegativeSample { row: usize, value: f64 },
    #[error("table ends with b = {0} != 0; only a zero tail can be extended beyond the table")]
    NonZeroTail(f64),
    #[error("malformed table row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("reading table: {0}")]
    Io(#[from] std::io::Error),
    #[error("reading table: {0}")]
    Csv(#[from] csv::Error),
}

/// Linearly interpolated samples `(r_j, b_j)`; `b` is held at `b_0` below
/// the first abscissa and at `0` beyond the last one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    r: Vec<f64>,
    b: Vec<f64>,
}

impl Table {
    pub fn new(r: Vec<f64>, b: Vec<f64>) -> Result<Self, PotentialError> {
        if r.len() != b.len() || r.len() < 2 {
            return Err(PotentialError::TooFewSamples(r.len().min(b.len())));
        }
        for (row, (&ri, &bi)) in r.iter().zip(&b).enumerate() {
            if !ri.is_finite() || !bi.is_finite() {
                return Err(PotentialError::NonFinite { name: "table" });
            }
            if bi < 0.0 {
                return Err(PotentialError::NegativeSample { row, value: bi });
            }
            if (row == 0 && ri < 0.0) || (row > 0 && ri <= r[row - 1]) {
                return Err(PotentialError::NotIncreasing { row });
            }
        }
        let last = *b.last().unwrap();
        if last != 0.0 {
            return Err(PotentialError::NonZeroTail(last));
        }
        Ok(Table { r, b })
    }

    /// Two-column CSV `(r, b)`; a non-numeric first row is taken as a header.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self, PotentialError> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self, PotentialError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let (mut r, mut b) = (Vec::new(), Vec::new());
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != 2 {
                return Err(PotentialError::MalformedRow {
                    row,
                    reason: format!("expected 2 columns, found {}", record.len()),
                });
            }
            let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(v) => {
                    r.push(v[0]);
                    b.push(v[1]);
                }
                Err(_) if row == 0 => continue,
                Err(e) => {
                    return Err(PotentialError::MalformedRow {
                        row,
                        reason: e.to_string(),
                    })
                }
            }
        }
        Self::new(r, b)
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.r
    }

    pub fn values(&self) -> &[f64] {
        &self.b
    }

    fn eval(&self, x: f64) -> f64 {
        if x <= self.r[0] {
            return self.b[0];
        }
        let last = self.r.len() - 1;
        if x >= self.r[last] {
            return 0.0;
        }
        let j = self.r.partition_point(|&rj| rj <= x) - 1;
        let t = (x - self.r[j]) / (self.r[j + 1] - self.r[j]);
        self.b[j] + t * (self.b[j + 1] - self.b[j])
    }

    /// Radius beyond which `b ≡ 0`.
    fn support_radius(&self) -> f64 {
        let last_nonzero = self.b.iter().rposition(|&v| v != 0.0);
        match last_nonzero {
            None => 0.0,
            Some(j) => self.r[(j + 1).min(self.r.len() - 1)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    Zero,
    /// `β` on `[0, r0]`, zero beyond.
    CompactBump {
        r0: f64,
        beta: f64,
    },
    /// `c / (1 + r)^ℓ`.
    PowerDecay {
        c: f64,
        ell: f64,
    },
    Tabulated(Table),
}

/// Coarse decay class used by the regime classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayClass {
    Zero,
    CompactSupport,
    PowerDecay,
}

fn nonneg(name: &'static str, value: f64) -> Result<(), PotentialError> {
    if !value.is_finite() {
        return Err(PotentialError::NonFinite { name });
    }
    if value < 0.0 {
        return Err(PotentialError::NegativeParameter { name, value });
    }
    Ok(())
}

impl Potential {
    pub fn compact_bump(r0: f64, beta: f64) -> Result<Self, PotentialError> {
        nonneg("r0", r0)?;
        nonneg("beta", beta)?;
        Ok(Potential::CompactBump { r0, beta })
    }

    pub fn power_decay(c: f64, ell: f64) -> Result<Self, PotentialError> {
        nonneg("c", c)?;
        nonneg("ell", ell)?;
        Ok(Potential::PowerDecay { c, ell })
    }

    /// Re-checks the constructor invariants, for values built directly or
    /// deserialized.
    pub fn validate(&self) -> Result<(), PotentialError> {
        match self {
            Potential::Zero => Ok(()),
            Potential::CompactBump { r0, beta } => nonneg("r0", *r0).and(nonneg("beta", *beta)),
            Potential::PowerDecay { c, ell } => nonneg("c", *c).and(nonneg("ell", *ell)),
            Potential::Tabulated(t) => Table::new(t.r.clone(), t.b.clone()).map(|_| ()),
        }
    }

    /// `b(r)`; at a jump this is the value from the left.
    pub fn eval(&self, r: f64) -> f64 {
        self.eval_left(r)
    }

    /// `lim_{s↑r} b(s)` (equal to `b(0)` at the origin).
    pub fn eval_left(&self, r: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::CompactBump { r0, beta } => {
                if r <= *r0 {
                    *beta
                } else {
                    0.0
                }
            }
            Potential::PowerDecay { c, ell } => c / (1.0 + r).powf(*ell),
            Potential::Tabulated(t) => t.eval(r),
        }
    }

    /// `lim_{s↓r} b(s)`.
    pub fn eval_right(&self, r: f64) -> f64 {
        match self {
            Potential::CompactBump { r0, beta } => {
                if r < *r0 {
                    *beta
                } else {
                    0.0
                }
            }
            _ => self.eval_left(r),
        }
    }

    /// Radii where `b` jumps or has a kink, in increasing order.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Potential::CompactBump { r0, .. } => vec![*r0],
            Potential::Tabulated(t) => t.r.clone(),
            _ => Vec::new(),
        }
    }

    /// `Some(r0)` when `b ≡ 0` on `(r0, ∞)`.
    pub fn support_radius(&self) -> Option<f64> {
        match self {
            Potential::Zero => Some(0.0),
            Potential::CompactBump { r0, beta } => Some(if *beta == 0.0 { 0.0 } else { *r0 }),
            Potential::PowerDecay { c, .. } => (*c == 0.0).then_some(0.0),
            Potential::Tabulated(t) => Some(t.support_radius()),
        }
    }

    /// True when `b ≡ 0` everywhere.
    pub fn is_identically_zero(&self) -> bool {
        match self {
            Potential::Zero => true,
            Potential::CompactBump { r0, beta } => *beta == 0.0 || *r0 == 0.0,
            Potential::PowerDecay { c, .. } => *c == 0.0,
            Potential::Tabulated(t) => t.b.iter().all(|&v| v == 0.0),
        }
    }

    pub fn decay_class(&self) -> DecayClass {
        if self.is_identically_zero() {
            return DecayClass::Zero;
        }
        match self {
            Potential::PowerDecay { .. } => DecayClass::PowerDecay,
            _ => DecayClass::CompactSupport,
        }
    }
}
