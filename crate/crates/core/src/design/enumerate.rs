use itertools::Itertools;

use super::{inclusion_probs, DesignSpec, Sample};
use crate::error::{Error, Result};
use crate::population::Population;

/// Largest support that [`enumerate_all_samples`] will walk.
pub const MAX_ENUMERATION: u128 = 2_000_000;

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // Exact at each step: acc * (n - i) is divisible by (i + 1).
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of distinct samples with positive probability.
pub fn support_size(design: &DesignSpec, pop: &Population) -> Result<u128> {
    design.validate(pop)?;
    let big_n = pop.len();
    Ok(match design {
        DesignSpec::Srswor { n } => binomial(big_n, *n),
        DesignSpec::StratifiedSrswor { strata } => strata
            .iter()
            .map(|s| binomial(s.units.len(), s.n))
            .fold(1u128, |a, b| a.saturating_mul(b)),
        DesignSpec::SystematicEqual { n } => (big_n / n) as u128,
        DesignSpec::ClusterEqual { clusters, t } => binomial(clusters.len(), *t),
        DesignSpec::Poisson { .. } | DesignSpec::PpsSystematic { .. } => {
            return Err(Error::UnsupportedConfiguration(format!(
                "{} designs are not enumerable",
                design.kind().name()
            )))
        }
    })
}

/// Every sample of the design together with its selection probability.
///
/// Supported for srswor, stratified srswor, equal-probability systematic and
/// cluster designs, all of which are uniform over their support.
pub fn enumerate_all_samples(
    design: &DesignSpec,
    pop: &Population,
) -> Result<Box<dyn Iterator<Item = (Sample, f64)>>> {
    let count = support_size(design, pop)?;
    if count > MAX_ENUMERATION {
        return Err(Error::Capacity {
            what: format!("{} support", design.kind().name()),
            count,
            limit: MAX_ENUMERATION,
        });
    }
    let pi = inclusion_probs(design, pop)?.pi().to_vec();
    let p = 1.0 / count as f64;
    let big_n = pop.len();
    let members: Box<dyn Iterator<Item = Vec<usize>>> = match design.clone() {
        DesignSpec::Srswor { n } => Box::new((0..big_n).combinations(n)),
        DesignSpec::StratifiedSrswor { strata } => Box::new(
            strata
                .into_iter()
                .map(|s| {
                    let units = s.units;
                    (0..units.len())
                        .combinations(s.n)
                        .map(move |c| c.into_iter().map(|k| units[k]).collect::<Vec<_>>())
                        .collect::<Vec<_>>()
                })
                .multi_cartesian_product()
                .map(|parts| parts.concat()),
        ),
        DesignSpec::SystematicEqual { n } => {
            let step = big_n / n;
            Box::new((0..step).map(move |start| (0..n).map(|k| start + k * step).collect()))
        }
        DesignSpec::ClusterEqual { clusters, t } => {
            Box::new((0..clusters.len()).combinations(t).map(move |cs| {
                cs.iter()
                    .flat_map(|&c| clusters[c].iter().copied())
                    .collect()
            }))
        }
        DesignSpec::Poisson { .. } | DesignSpec::PpsSystematic { .. } => unreachable!(),
    };
    Ok(Box::new(members.map(move |m| {
        (
            Sample::new(m, &pi).expect("enumerated members are valid"),
            p,
        )
    })))
}
