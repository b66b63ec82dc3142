//! Steady-state optical response of strongly driven atomic ensembles.
//!
//! Two ensembles are each dressed by a classical drive and probed by a weak
//! field. The analytic model gives the collective dressed-state inversion,
//! the secular probe susceptibility, and derived refractive and group indices.
//! A dense master-equation solver for small atom numbers serves as an
//! independent reference.

pub mod error;
pub mod kramers_kronig;
pub mod model;
pub mod oracle;
pub mod response;
pub mod steady_state;
pub mod sweeps;

pub use error::{Error, Result};
pub use model::{EnsembleParams, Label, SampleGeometry};
pub use response::{susceptibility, Collectivity, ProbePoint, SolvedEnsemble};
pub use steady_state::solve_ensemble;
