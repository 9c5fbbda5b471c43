use super::{sample_size, RecordScope, StudyConfig, StudyId, StudyResult};
use crate::design::{binomial, DesignSpec, MAX_ENUMERATION};
use crate::diagnostics::c9_rij_exhaustive;
use crate::error::{invalid, Error, Result};
use crate::population::generate_embedded_populations;
use crate::rng::child_seed;

/// Conditional joint-inclusion gaps by exhaustive enumeration at every
/// population size of the ladder.
pub fn run_c9_study(config: &StudyConfig) -> Result<StudyResult> {
    if config.study != StudyId::C9 {
        return Err(invalid(format!(
            "expected a c9 config, got {}",
            config.study
        )));
    }
    config.validate()?;
    for &big_n in &config.sizes {
        let n = sample_size(config.fraction, big_n)?;
        let count = binomial(big_n, n);
        if count > MAX_ENUMERATION {
            return Err(Error::Capacity {
                what: format!(
                    "exhaustive enumeration of srswor samples of size {n} from N = {big_n}"
                ),
                count,
                limit: MAX_ENUMERATION,
            });
        }
    }
    let pops = generate_embedded_populations(
        &config.superpopulation(),
        &config.sizes,
        child_seed(config.seed, &["c9".into(), "population".into()]),
    )?;
    let grid = config.line_grid(pops.last().expect("non-empty ladder"))?;
    let mut records = Vec::new();
    for pop in &pops {
        let big_n = pop.len();
        let n = sample_size(config.fraction, big_n)?;
        let kn = config.kn.apply(n, 1)?;
        let rep = c9_rij_exhaustive(pop, &DesignSpec::Srswor { n }, kn, &grid)?;
        let scope = RecordScope {
            study: StudyId::C9,
            population_size: big_n,
            sample_size: n,
            kn,
            design: "srswor",
        };
        for (name, value) in rep.to_report().summary {
            records.push(scope.record(&name, None, None, value));
        }
    }
    let mut result = StudyResult {
        records,
        grid,
        warnings: vec![],
    };
    result.sort();
    Ok(result)
}
