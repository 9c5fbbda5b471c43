use std::path::Path;

use rand::seq::index;
use rayon::prelude::*;

use super::{
    mse_records, sample_size, vif_all, GridSpec, RecordScope, StudyConfig, StudyId, StudyResult,
};
use crate::bounds::{rate_bound, BoundMode, TheoryParams};
use crate::design::DesignSpec;
use crate::error::{invalid, Result};
use crate::estimators::{PopulationKnn, SampleKnn};
use crate::io::{read_table, table_to_population, TabularSchema, WINE_ROWS};
use crate::neighbors::{Backend, Standardizer};
use crate::population::Population;
use crate::rng::stream;

/// `count` distinct vectors out of the `3^d` combinations of each
/// covariate's minimum, midpoint and maximum, in ascending combination
/// order. Digit `j` of the base-3 index picks the value of covariate `j`.
pub fn corner_grid(pop: &Population, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let d = pop.dim();
    let total = 3usize
        .checked_pow(d as u32)
        .filter(|&t| t <= u32::MAX as usize)
        .ok_or_else(|| invalid(format!("3^{d} corner combinations are too many")))?;
    if count == 0 || count > total {
        return Err(invalid(format!(
            "cannot choose {count} of {total} corner vectors"
        )));
    }
    let levels: Vec<[f64; 3]> = (0..d)
        .map(|j| {
            let col = pop.column(j);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            [lo, 0.5 * (lo + hi), hi]
        })
        .collect();
    let mut rng = stream(seed, &["wine".into(), "grid".into()]);
    let mut chosen = index::sample(&mut rng, total, count).into_vec();
    chosen.sort_unstable();
    Ok(chosen
        .into_iter()
        .map(|mut code| {
            levels
                .iter()
                .map(|lv| {
                    let v = lv[code % 3];
                    code /= 3;
                    v
                })
                .collect()
        })
        .collect())
}

/// Real-data study: VIF screen, full-data reference estimator, and Monte
/// Carlo MSE of the sample estimator on the first `N` rows.
pub fn run_wine_study(config: &StudyConfig, dataset: &Path) -> Result<StudyResult> {
    if config.study != StudyId::Wine {
        return Err(invalid(format!(
            "expected a wine config, got {}",
            config.study
        )));
    }
    config.validate()?;
    let GridSpec::Corners { count } = config.grid else {
        return Err(invalid("the wine study evaluates on a corner grid"));
    };
    let schema = TabularSchema::wine();
    let table = read_table(dataset, &schema)?;
    let mut warnings = Vec::new();
    if table.rows() != WINE_ROWS {
        warnings.push(format!(
            "{} has {} rows, the UCI white-wine file has {WINE_ROWS}",
            dataset.display(),
            table.rows()
        ));
    }
    let mut records = Vec::new();
    let vif_scope = RecordScope {
        study: StudyId::Wine,
        population_size: table.rows(),
        sample_size: 0,
        kn: 0,
        design: "none",
    };
    let full_names: Vec<&str> = schema
        .columns
        .iter()
        .map(|(n, _)| n.as_str())
        .filter(|n| *n != schema.response)
        .collect();
    let kept = schema.covariates();
    for (label, names) in [("vif_full", &full_names), ("vif_reduced", &kept)] {
        let cols: Vec<Vec<f64>> = names
            .iter()
            .map(|n| table.column(n).expect("schema column").to_vec())
            .collect();
        for (name, v) in names.iter().zip(vif_all(&cols)?) {
            if v.collinear {
                warnings.push(format!("{name} is collinear with the other covariates"));
            }
            records.push(vif_scope.record(&format!("{label}:{name}"), None, None, v.value));
        }
    }

    let mut pop = table_to_population(&table, &schema)?.population;
    if config.standardize {
        pop = Standardizer::fit(&pop).apply_population(&pop)?;
    }
    let full_n = pop.len();
    if let Some(&too_big) = config.sizes.iter().find(|&&s| s > full_n) {
        return Err(invalid(format!(
            "population size {too_big} exceeds the {full_n} rows of {}",
            dataset.display()
        )));
    }
    let grid = corner_grid(&pop, count, config.seed)?;
    let reference_k = config.reference_k.unwrap_or_else(|| full_n.isqrt());
    let reference = PopulationKnn::new(&pop, Backend::Auto);
    let targets = grid
        .iter()
        .map(|x| reference.estimate(x, reference_k))
        .collect::<Result<Vec<f64>>>()?;
    let ref_scope = RecordScope {
        study: StudyId::Wine,
        population_size: full_n,
        sample_size: full_n,
        kn: reference_k,
        design: "reference",
    };
    for (g, &t) in targets.iter().enumerate() {
        records.push(ref_scope.record("reference", Some(g), None, t));
    }

    let params = TheoryParams {
        d: pop.dim(),
        ..TheoryParams::default()
    };
    for &big_n in &config.sizes {
        let sub = pop.prefix(big_n)?;
        let n = sample_size(config.fraction, big_n)?;
        let kn = config.kn.apply(n, pop.dim())?;
        let prepared = DesignSpec::Srswor { n }.prepare(&sub)?;
        let pi = prepared.probs().pi();
        let estimates = (0..config.replicates)
            .into_par_iter()
            .map(|l| {
                let mut rng = stream(config.seed, &["wine".into(), big_n.into(), l.into()]);
                let sample = prepared.draw(&mut rng);
                let knn = SampleKnn::new(&sub, &sample, pi, Backend::Auto)?;
                grid.iter()
                    .map(|x| knn.estimate_ht(x, kn))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let shape = rate_bound(kn, n, &params, BoundMode::Shape)?;
        let scope = RecordScope {
            study: StudyId::Wine,
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
        warnings,
    };
    result.sort();
    Ok(result)
}
