//! Exact invariants of modular representations of finite groups.
//!
//! Given a finite group, a prime p dividing its order, and a
//! representation over F_p, this crate computes the objects that
//! control the representation's local behaviour at p:
//!
//! * the poset of elementary abelian p-subgroups with its conjugation
//!   action ([`grouplat`]);
//! * powers of the augmentation ideal and the universal p-nilpotent
//!   operator attached to the representation, one symbolic matrix per
//!   maximal elementary abelian subgroup ([`modrep`], [`theta`]);
//! * Jordan types at specialization points and exact or sampled
//!   decisions of constancy across all such points ([`jordan`]);
//! * degreewise kernel/image/cokernel sheaves of the projectivized
//!   operator, their Hilbert polynomials, splitting types on P^1, and
//!   compatible K-theory class families ([`sheafk`]);
//! * truncated exponential/logarithm comparisons between group-side
//!   and Lie-side operators for unipotent matrix groups ([`springer`]).
//!
//! All arithmetic is exact over F_{p^d} (p <= 31, d <= 8); nothing in
//! the crate floats.  Decision procedures either certify their answer
//! (Groebner bases over the prime field, exhaustive point sweeps) or
//! say so when a resource cap stops them.

pub mod error;
pub mod field;
pub mod linalg;
pub mod poly;
pub mod polymat;
pub mod groebner;
pub mod grouplat;
pub mod modrep;
pub mod theta;
pub mod jordan;
pub mod sheafk;
pub mod springer;
pub mod checks;

pub use error::{Error, Result};
