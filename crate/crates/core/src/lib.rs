//! Core of the proof-teaching platform: Isar outer syntax, tutorials,
//! feedback and submission history. Nothing here talks to a prover.

pub mod feedback;
pub mod history;
pub mod locale;
pub mod prover;
pub mod role;
pub mod syntax;
pub mod tutorial;

pub use locale::Locale;
pub use role::Role;
