//! The code snippets from the guide in `book/src/` that are not already
//! crate-root doc-tests, kept compiling and passing here.

use catcoal::census::SeedStream;
use catcoal::oracle::{caterpillars_from_history, census_replay_from_history, run_oracle};
use catcoal::theory::integrate_drift;
use catcoal::{DensityFn, LambdaMeasure};

// book/src/measures-and-rates.md, "Constructing a measure"
#[test]
fn constructing_a_measure() -> catcoal::Result<()> {
    let kingman = LambdaMeasure::kingman(1.0)?;
    let beta = LambdaMeasure::beta(1.5, 1.0)?;
    let density = LambdaMeasure::density(1.5, DensityFn::BetaDensity, 1.0)?;
    let _ = (kingman, beta, density);
    Ok(())
}

// book/src/limits.md, "The drift field and its ODE"
#[test]
fn drift_integrator_tracks_closed_form() -> catcoal::Result<()> {
    let sol = integrate_drift(1.5, 4, 5.0, 1e-3)?;
    assert!(sol.sup_deviation < 1e-6);
    Ok(())
}

// book/src/verification.md, "The small-n oracle"
#[test]
fn oracle_definition_matches_census_rule() -> catcoal::Result<()> {
    let measure = LambdaMeasure::beta(1.5, 1.0)?;
    let history = run_oracle(8, &measure, SeedStream::new(3, 0))?;
    let by_census_rule = census_replay_from_history(&history);
    for r in 2..=8 {
        assert_eq!(caterpillars_from_history(&history, r), by_census_rule[r as usize]);
    }
    Ok(())
}
