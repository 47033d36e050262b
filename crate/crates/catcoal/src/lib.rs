//! Simulation and verification toolkit for caterpillar statistics of
//! Lambda-coalescents.
//!
//! A Lambda-coalescent on `n` lineages merges every `k`-subset of its `b`
//! current blocks at rate `lambda_{b,k} = ∫ p^(k-2) (1-p)^(b-k) Λ(dp)`. For
//! measures with a strongly regularly varying density of index `1 - alpha`,
//! `alpha` in `(1, 2)`, and for the Kingman case `alpha = 2`, the number
//! `xi_r` of `r`-caterpillars — internal branches carrying exactly `r`
//! leaves, picked up one at a time — grows linearly in `n` with an explicit
//! limit constant, and the rescaled counting process follows an explicit
//! ODE limit.
//!
//! The crate has three layers:
//!
//! * **Rates** ([`measure`], [`rates`], [`quad`]): exact merger rates via
//!   closed forms or adaptive quadrature, total-rate and moment recursions,
//!   and a validator for the large-`b` asymptotics.
//! * **Simulation** ([`census`], [`oracle`], [`montecarlo`]): an `O(1)`-state
//!   census engine for large `n`, a brute-force small-`n` oracle that tracks
//!   the full labelled history, and seeded parallel ensembles.
//! * **Theory** ([`theory`]): the limit curves `x_r(t)`, the drift field and
//!   its RK4 integrator, and the limit constants `xi_r / n → c_r`.
//!
//! # Computing rates
//!
//! ```
//! use catcoal::LambdaMeasure;
//! use catcoal::rates::{build_rate_table, lambda_bk};
//!
//! let beta = LambdaMeasure::beta(1.5, 1.0)?;
//! // Closed form: lambda_{3,2} for Beta(1/2, 3/2) is 3/4 of the total mass.
//! let rate = lambda_bk(&beta, 3, 2)?;
//! assert!((rate - 0.75 * beta.total_mass()).abs() < 1e-12);
//!
//! // A full table for b = 100 blocks: size distribution of the next merger.
//! let table = build_rate_table(&beta, 100, 1e-12)?;
//! assert!((table.size_probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
//! # Ok::<(), catcoal::Error>(())
//! ```
//!
//! # Simulating caterpillar counts
//!
//! ```
//! use catcoal::LambdaMeasure;
//! use catcoal::census::{run_totals, SeedStream};
//! use catcoal::theory::limit_constant;
//!
//! let measure = LambdaMeasure::kingman(1.0)?;
//! let totals = run_totals(5000, &measure, 3, SeedStream::new(7, 0))?;
//! // One replica of xi_2 / n already sits near the Kingman limit 1/3.
//! let fraction = totals.cumulative[2] as f64 / 5000.0;
//! assert!((fraction - limit_constant(2.0, 2)?).abs() < 0.05);
//! # Ok::<(), catcoal::Error>(())
//! ```
//!
//! Replicas are seeded by `(master, replica)` pairs; the same pair always
//! reproduces the same run, and rescaling the measure by any positive
//! constant changes holding times but leaves the jump chain bit-identical.
//!
//! # Limit theory
//!
//! ```
//! use catcoal::theory::{limit_constant, x_r, x_up};
//!
//! // Kingman limits are 2^(r-1) / (r+1)!.
//! assert!((limit_constant(2.0, 2)? - 1.0 / 3.0).abs() < 1e-12);
//! assert!((limit_constant(2.0, 3)? - 1.0 / 6.0).abs() < 1e-12);
//!
//! // The running count x_up(t) increases towards the limit constant.
//! let alpha = 1.5;
//! assert!(x_up(alpha, 2, 1.0)? < limit_constant(alpha, 2)?);
//! assert!((x_up(alpha, 2, f64::INFINITY)? - limit_constant(alpha, 2)?).abs() < 1e-12);
//!
//! // x_1 = x_0^alpha along the whole trajectory.
//! let t = 0.7;
//! assert!((x_r(alpha, 1, t)? - x_r(alpha, 0, t)?.powf(alpha)).abs() < 1e-12);
//! # Ok::<(), catcoal::Error>(())
//! ```
//!
//! The `catcoal` binary exposes all of this as subcommands (`rates`,
//! `theory`, `totals`, `trajectory`, `verify`, `variance`) that emit
//! self-describing CSV or JSONL tables; see the user guide in `book/`.

pub mod census;
pub mod cli;
pub mod error;
pub mod measure;
pub mod montecarlo;
pub mod oracle;
pub mod quad;
pub mod rates;
pub mod theory;

pub use error::{Error, Result};
pub use measure::{DensityFn, LambdaMeasure, MeasureKind};
