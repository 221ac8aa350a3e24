use crate::key::Key;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum IndexError {
    #[error("key {0} already present")]
    DuplicateKey(Key),
    #[error("key {0} must be finite and below the reserved maximum")]
    InvalidKey(Key),
    #[error("bulk input must be sorted by key with no duplicates")]
    UnsortedBulk,
}

pub type Result<T> = std::result::Result<T, IndexError>;
