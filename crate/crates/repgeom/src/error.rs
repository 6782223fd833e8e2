//! Crate-wide error type.

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("{0} is not a supported prime (need a prime <= 31)")]
    UnsupportedPrime(u8),

    #[error("extension degree {0} out of range 1..=8")]
    UnsupportedDegree(u8),

    #[error("the prime {p} does not divide the group order {order}")]
    PrimeDoesNotDivideOrder { p: u8, order: usize },

    #[error("multiplication table is not associative at ({i}, {j}, {k})")]
    NonAssociative { i: usize, j: usize, k: usize },

    #[error("not a group: {0}")]
    NotAGroup(String),

    #[error("group generated exceeds the order cap {cap}")]
    OrderCapExceeded { cap: usize },

    #[error("generator matrices violate a group relation at elements ({g}, {h})")]
    RelationViolation { g: usize, h: usize },

    #[error("matrix for element {g} is not invertible")]
    NotInvertible { g: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("inexact polynomial division")]
    InexactDivision,

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("symbolic p-th power of the operator family is nonzero; construction is wrong")]
    PNilpotenceFailed,

    #[error("coefficient vector does not define a flat point (image in J/J^2 is zero)")]
    NotFlat,

    #[error("Hilbert function did not stabilize by degree {computed_to}")]
    NotStabilized { computed_to: usize },

    #[error("class vector is not integral: {0}")]
    NonIntegralClass(String),

    #[error("module is not of constant rank on the stated range: {0}")]
    NonConstantModule(String),

    #[error("matrix is not unipotent (required for logarithms)")]
    NotUnipotent,

    #[error("nilpotency class {class} is not below the characteristic {p}")]
    ClassTooLarge { class: u32, p: u8 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
