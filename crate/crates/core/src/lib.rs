//! Gaussian belief propagation determinant estimates and their orbit-product
//! corrections.
//!
//! A Gaussian model with precision matrix `J` is normalized to `J = D^{1/2}(I - R)D^{1/2}`.
//! For walk-summable models (`rho(|R|) < 1`) the partition quantity
//! `Z = det(I - R)^{-1}` factors as a product over orbits (primitive closed
//! walks up to rotation). GaBP computes the product over the totally
//! backtracking orbits, `Z^bp`. The remaining factor `Z'` is a determinant of
//! the backtrackless operator `R'` on directed edges, and can be approximated
//! by truncating its orbit product or by block resummation.
//!
//! ```
//! use gabp_orbit::{correction, exact, gabp, model};
//!
//! let (weights, _shift) = model::gen_grid(3, 3, 0.2, false)?.normalize();
//! let state = gabp::run_gabp(&weights, None, &gabp::GaBPOptions::default())?;
//! let log_zbp = gabp::log_zbp(&state, &weights)?;
//! let mw = correction::modified_weights(&weights, &state)?;
//! let rp = correction::build_backtrackless(&mw, &weights);
//! let log_zprime = correction::log_zprime_exact(&rp)?;
//! let log_z = exact::log_z(&weights)?;
//! assert!((log_z - log_zbp - log_zprime).abs() < 1e-10);
//! # Ok::<(), gabp_orbit::Error>(())
//! ```

pub mod blocksum;
pub mod correction;
pub mod error;
pub mod exact;
pub mod gabp;
pub mod io;
pub mod model;
pub mod orbits;
pub mod report;
pub mod sparse;
pub mod sweep;

pub use error::{Error, Result};
pub use model::{EdgeWeights, GraphModel};
