//! Motional thermometry of trapped-ion Coulomb crystals from red/blue
//! sideband excitation data.
//!
//! The crate is organised bottom-up:
//!
//! - [`crystal`]: mode vectors (linear-chain normal modes, mode files).
//! - [`coefficients`]: the 22 mode-dependent spin-string coefficients and a
//!   brute-force operator oracle for them.
//! - [`ratio`]: the many-body sideband-ratio polynomial `R_t(nbar)`, its
//!   inversion, and finite-sample bias/variance.
//! - [`dynamics`]: exact sideband dynamics in excitation-conserving blocks,
//!   the symmetric (Dicke) COM solver and the bichromatic closed form.
//! - [`estimators`]: ratio pipeline, least-squares fit, bichromatic
//!   estimator, Fisher information and Cramér–Rao curves.
//! - [`sampling`]: seeded binomial campaigns, moment validation and cutoff
//!   times.
//! - [`figures`]: tabular data behind the standard diagnostic plots.
//!
//! Time always enters as the dimensionless product `gt` of the average
//! sideband coupling `g` (rad/s) and the pulse length `t` (s).

pub mod coefficients;
pub mod crystal;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod figures;
pub mod poly;
pub mod ratio;
pub mod sampling;
pub mod thermal;

pub use error::{Error, Result};
