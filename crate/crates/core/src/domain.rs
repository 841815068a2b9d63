//! Domain types: contexts, logged bandit events, datasets and the shared
//! parameter vector.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("catalogue must contain at least one item")]
    EmptyCatalogue,
    #[error("context length {found} does not match catalogue size {expected} at event {index}")]
    ContextLength {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("action out of range at event {index}: {action} >= {num_items}")]
    ActionOutOfRange {
        index: usize,
        action: usize,
        num_items: usize,
    },
    #[error("nonpositive propensity at event {index}")]
    NonpositivePropensity { index: usize, propensity: f64 },
    #[error("propensity {propensity} above one at event {index}")]
    PropensityAboveOne { index: usize, propensity: f64 },
    #[error("parameter vector has length {found}, expected {expected}")]
    ParamLength { expected: usize, found: usize },
    #[error("parameter {index} is not finite")]
    NonFiniteParam { index: usize },
}

/// Organic view counts of one user over the catalogue.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Context {
    views: Vec<u32>,
}

impl Context {
    pub fn new(views: Vec<u32>) -> Self {
        Self { views }
    }

    pub fn zeros(num_items: usize) -> Self {
        Self {
            views: vec![0; num_items],
        }
    }

    pub fn views(&self) -> &[u32] {
        &self.views
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    /// Total number of organic views.
    pub fn total(&self) -> u64 {
        self.views.iter().map(|&v| u64::from(v)).sum()
    }

    pub(crate) fn increment(&mut self, item: usize) {
        self.views[item] += 1;
    }
}

impl From<Vec<u32>> for Context {
    fn from(views: Vec<u32>) -> Self {
        Self::new(views)
    }
}

/// Index of a recommended item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionId(pub usize);

impl ActionId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// One logged recommendation with its outcome and logging propensity.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditEvent {
    pub user_id: u64,
    pub context: Context,
    pub action: ActionId,
    pub click: bool,
    pub propensity: f64,
}

impl BanditEvent {
    /// Inverse propensity weight `1 / π(a|x)`.
    pub fn weight(&self) -> f64 {
        1.0 / self.propensity
    }

    pub(crate) fn click_f64(&self) -> f64 {
        if self.click {
            1.0
        } else {
            0.0
        }
    }
}

/// Ordered bandit log over a catalogue of `num_items` items.
#[derive(Debug, Clone, PartialEq)]
pub struct LogDataset {
    pub num_items: usize,
    pub events: Vec<BanditEvent>,
}

impl LogDataset {
    pub fn new(num_items: usize) -> Self {
        Self {
            num_items,
            events: Vec::new(),
        }
    }

    pub fn with_events(num_items: usize, events: Vec<BanditEvent>) -> Self {
        Self { num_items, events }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn clicks(&self) -> usize {
        self.events.iter().filter(|e| e.click).count()
    }

    /// Checks every invariant and reports the first offending event.
    pub fn validate(&self) -> Result<(), DataError> {
        validate_dataset(self)
    }
}

pub fn validate_dataset(data: &LogDataset) -> Result<(), DataError> {
    let k = data.num_items;
    if k == 0 {
        return Err(DataError::EmptyCatalogue);
    }
    for (index, event) in data.events.iter().enumerate() {
        if event.context.len() != k {
            return Err(DataError::ContextLength {
                index,
                expected: k,
                found: event.context.len(),
            });
        }
        if event.action.0 >= k {
            return Err(DataError::ActionOutOfRange {
                index,
                action: event.action.0,
                num_items: k,
            });
        }
        // NaN fails this test too.
        if !(event.propensity > 0.0) {
            return Err(DataError::NonpositivePropensity {
                index,
                propensity: event.propensity,
            });
        }
        if event.propensity > 1.0 {
            return Err(DataError::PropensityAboveOne {
                index,
                propensity: event.propensity,
            });
        }
    }
    Ok(())
}

/// Coefficients indexed by (history item `i`, action `j`) at `i * K + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    num_items: usize,
    beta: Vec<f64>,
}

impl ParamVector {
    pub fn zeros(num_items: usize) -> Self {
        Self::filled(num_items, 0.0)
    }

    pub fn filled(num_items: usize, value: f64) -> Self {
        Self {
            num_items,
            beta: vec![value; num_items * num_items],
        }
    }

    pub fn from_vec(num_items: usize, beta: Vec<f64>) -> Result<Self, DataError> {
        if beta.len() != num_items * num_items {
            return Err(DataError::ParamLength {
                expected: num_items * num_items,
                found: beta.len(),
            });
        }
        if let Some(index) = beta.iter().position(|b| !b.is_finite()) {
            return Err(DataError::NonFiniteParam { index });
        }
        Ok(Self { num_items, beta })
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.beta
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.beta
    }

    /// Coefficient for history item `item` and action `action`.
    pub fn get(&self, item: usize, action: usize) -> f64 {
        self.beta[item * self.num_items + action]
    }

    /// Multiplies every coefficient by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            num_items: self.num_items,
            beta: self.beta.iter().map(|b| b * factor).collect(),
        }
    }
}
