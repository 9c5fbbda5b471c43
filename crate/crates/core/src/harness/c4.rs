use rayon::prelude::*;

use super::{build_design, sample_size, RecordScope, StudyConfig, StudyId, StudyResult};
use crate::design::draw;
use crate::diagnostics::c4_ratio_scan;
use crate::error::{invalid, Result};
use crate::population::generate_embedded_populations;
use crate::rng::{child_seed, stream};

/// Local sampling-fraction ratios: one sample per population size and
/// design, scanned over the grid.
pub fn run_c4_study(config: &StudyConfig) -> Result<StudyResult> {
    if config.study != StudyId::C4 {
        return Err(invalid(format!(
            "expected a c4 config, got {}",
            config.study
        )));
    }
    config.validate()?;
    let seed = config.seed;
    let pops = generate_embedded_populations(
        &config.superpopulation(),
        &config.sizes,
        child_seed(seed, &["c4".into(), "population".into()]),
    )?;
    let grid = config.line_grid(pops.last().expect("non-empty ladder"))?;
    let jobs: Vec<(usize, &str)> = (0..pops.len())
        .flat_map(|p| config.designs.iter().map(move |d| (p, d.as_str())))
        .collect();
    let chunks = jobs
        .par_iter()
        .map(|&(p, design_name)| {
            let pop = &pops[p];
            let big_n = pop.len();
            let n = sample_size(config.fraction, big_n)?;
            let kn = config.kn.apply(n, 1)?;
            let design = build_design(design_name, pop, n, &config.strata_fractions)?;
            let mut rng = stream(seed, &["c4".into(), big_n.into(), design_name.into()]);
            let sample = draw(&design, pop, &mut rng)?;
            let scan = c4_ratio_scan(pop, &sample, kn, &grid)?;
            let scope = RecordScope {
                study: StudyId::C4,
                population_size: big_n,
                sample_size: sample.len(),
                kn,
                design: design_name,
            };
            let mut out: Vec<_> = scan
                .ratios
                .iter()
                .enumerate()
                .map(|(g, &r)| scope.record("ratio", Some(g), None, r))
                .collect();
            out.push(scope.record("max_ratio", None, None, scan.max_ratio));
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut result = StudyResult {
        records: chunks.into_iter().flatten().collect(),
        grid,
        warnings: vec![],
    };
    result.sort();
    Ok(result)
}
