use std::collections::HashSet;
use std::sync::Mutex;

use thiserror::Error;

use crate::codec::BlockHash;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("storage failure: {0}")]
pub struct StoreError(pub String);

impl From<std::io::Error> for StoreError {
    fn from(e: std::io::Error) -> Self {
        StoreError(e.to_string())
    }
}

/// Set of send hashes that have already been exchanged for a token.
///
/// `consume` is insert-if-absent and must be linearizable: for any hash at
/// most one caller ever sees `Ok(true)`, for the whole life of the store.
pub trait ConsumedHashStore: Send + Sync {
    fn consume(&self, hash: &BlockHash) -> Result<bool, StoreError>;

    fn contains(&self, hash: &BlockHash) -> bool;

    /// All consumed hashes, sorted.
    fn snapshot(&self) -> Vec<BlockHash>;
}

/// Volatile store, for tests and throwaway gates.
#[derive(Debug, Default)]
pub struct MemoryHashStore(Mutex<HashSet<BlockHash>>);

impl MemoryHashStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl ConsumedHashStore for MemoryHashStore {
    fn consume(&self, hash: &BlockHash) -> Result<bool, StoreError> {
        Ok(self.0.lock().unwrap().insert(*hash))
    }

    fn contains(&self, hash: &BlockHash) -> bool {
        self.0.lock().unwrap().contains(hash)
    }

    fn snapshot(&self) -> Vec<BlockHash> {
        let mut all: Vec<_> = self.0.lock().unwrap().iter().copied().collect();
        all.sort();
        all
    }
}
