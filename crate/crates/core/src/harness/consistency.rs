use rayon::prelude::*;

use super::{mse_records, sample_size, RecordScope, StudyConfig, StudyId, StudyResult};
use crate::bounds::{rate_bound, BoundMode, TheoryParams};
use crate::design::DesignSpec;
use crate::error::{invalid, Result};
use crate::estimators::SampleKnn;
use crate::neighbors::Backend;
use crate::population::{generate_embedded_populations, true_regression};
use crate::rng::{child_seed, stream};

/// Monte Carlo MSE of the Horvitz–Thompson kNN estimator against the true
/// regression function, with populations fixed and samples redrawn.
pub fn run_consistency_study(config: &StudyConfig) -> Result<StudyResult> {
    if config.study != StudyId::Consistency {
        return Err(invalid(format!(
            "expected a consistency config, got {}",
            config.study
        )));
    }
    config.validate()?;
    let spec = config.superpopulation();
    let pops = generate_embedded_populations(
        &spec,
        &config.sizes,
        child_seed(config.seed, &["consistency".into(), "population".into()]),
    )?;
    let grid = config.line_grid(pops.last().expect("non-empty ladder"))?;
    let targets = grid
        .iter()
        .map(|x| true_regression(&spec, x))
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::new();
    for pop in &pops {
        let big_n = pop.len();
        let n = sample_size(config.fraction, big_n)?;
        let kn = config.kn.apply(n, 1)?;
        let prepared = DesignSpec::Srswor { n }.prepare(pop)?;
        let pi = prepared.probs().pi();
        let estimates = (0..config.replicates)
            .into_par_iter()
            .map(|l| {
                let mut rng = stream(config.seed, &["consistency".into(), big_n.into(), l.into()]);
                let sample = prepared.draw(&mut rng);
                let knn = SampleKnn::new(pop, &sample, pi, Backend::Auto)?;
                grid.iter()
                    .map(|x| knn.estimate_ht(x, kn))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let shape = rate_bound(kn, n, &TheoryParams::default(), BoundMode::Shape)?;
        let scope = RecordScope {
            study: StudyId::Consistency,
            population_size: big_n,
            sample_size: n,
            kn,
            design: "srswor",
        };
        records.extend(mse_records(
            &scope,
            &estimates,
            &targets,
            shape,
            config.adjustment,
        ));
    }
    let mut result = StudyResult {
        records,
        grid,
        warnings: vec![],
    };
    result.sort();
    Ok(result)
}
