//! Classifier abstraction queried by the flooding search.
//!
//! A [`ClassifierHandle`] wraps any [`Classifier`] and counts invocations,
//! which is how callers verify the search's call budget. Two implementations
//! ship with the crate: the analytic [`BandEnergyToyClassifier`] and the
//! subprocess bridge [`ExternalClassifier`].

mod external;
mod toy;

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{AudioError, AudioSignal};

pub use external::{spawn_external, ExternalClassifier, ExternalOptions, DEFAULT_RESPONSE_TIMEOUT};
pub use toy::BandEnergyToyClassifier;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("failed to spawn classifier process `{command}`: {source}")]
    Spawn { command: String, source: std::io::Error },
    #[error("classifier did not finish its handshake within {0:?}")]
    HandshakeTimeout(std::time::Duration),
    #[error("classifier did not answer within {0:?}")]
    ResponseTimeout(std::time::Duration),
    #[error("classifier process failed: {0}")]
    AdapterFailure(String),
    #[error("classifier protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("classifier reported an error: {0}")]
    Remote(String),
    #[error("invalid classifier configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
}

/// A predicted class, drawn from the classifier's fixed vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(String);

impl Label {
    pub fn new(value: impl Into<String>) -> Self {
        Self(value.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

/// A deterministic audio classifier.
///
/// `classify` must be a pure function of the signal; flooding scores are
/// undefined for nondeterministic models.
pub trait Classifier: Send + Sync {
    fn vocabulary(&self) -> &[Label];

    fn classify(&self, x: &AudioSignal) -> Result<Label, ClassifierError>;
}

/// Shared, call-counting reference to a classifier. Clones share the counter.
#[derive(Clone)]
pub struct ClassifierHandle {
    inner: Arc<dyn Classifier>,
    calls: Arc<AtomicU64>,
}

impl ClassifierHandle {
    pub fn new(classifier: impl Classifier + 'static) -> Self {
        Self::from_arc(Arc::new(classifier))
    }

    pub fn from_arc(inner: Arc<dyn Classifier>) -> Self {
        Self { inner, calls: Arc::new(AtomicU64::new(0)) }
    }

    pub fn vocabulary(&self) -> &[Label] {
        self.inner.vocabulary()
    }

    pub fn classify(&self, x: &AudioSignal) -> Result<Label, ClassifierError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.classify(x)
    }

    /// Number of `classify` invocations made through this handle or its clones.
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl fmt::Debug for ClassifierHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClassifierHandle")
            .field("vocabulary", &self.vocabulary())
            .field("calls", &self.calls())
            .finish()
    }
}

/// Always answers with the same label.
#[derive(Debug, Clone)]
pub struct ConstantClassifier {
    vocabulary: Vec<Label>,
}

impl ConstantClassifier {
    pub fn new(label: impl Into<Label>) -> Self {
        Self { vocabulary: vec![label.into()] }
    }
}

impl Classifier for ConstantClassifier {
    fn vocabulary(&self) -> &[Label] {
        &self.vocabulary
    }

    fn classify(&self, _x: &AudioSignal) -> Result<Label, ClassifierError> {
        Ok(self.vocabulary[0].clone())
    }
}
