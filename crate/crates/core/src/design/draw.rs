use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::{DesignSpec, InclusionProbs};

/// Member ids of one draw (unsorted for some designs).
pub(super) fn draw_members<R: Rng + ?Sized>(
    spec: &DesignSpec,
    probs: &InclusionProbs,
    rng: &mut R,
) -> Vec<usize> {
    match spec {
        DesignSpec::Srswor { n } => index::sample(rng, probs.len(), *n).into_vec(),
        DesignSpec::Poisson { pi } => pi
            .iter()
            .enumerate()
            .filter(|&(_, &p)| rng.random::<f64>() < p)
            .map(|(i, _)| i)
            .collect(),
        DesignSpec::StratifiedSrswor { strata } => strata
            .iter()
            .flat_map(|s| {
                index::sample(rng, s.units.len(), s.n)
                    .into_iter()
                    .map(|k| s.units[k])
                    .collect::<Vec<_>>()
            })
            .collect(),
        DesignSpec::PpsSystematic { n } => systematic_pps(probs.pi(), *n, rng),
        DesignSpec::SystematicEqual { n } => {
            let step = probs.len() / n;
            let start = rng.random_range(0..step);
            (0..*n).map(|k| start + k * step).collect()
        }
        DesignSpec::ClusterEqual { clusters, t } => index::sample(rng, clusters.len(), *t)
            .into_iter()
            .flat_map(|c| clusters[c].iter().copied())
            .collect(),
    }
}

/// Systematic pps on a randomly permuted frame.
///
/// Unit `k` in frame order owns the interval `[C_{k-1}, C_k)` of the
/// cumulated probabilities and is selected when one of `u, u+1, ..., u+n-1`
/// falls into it. The last cumulated value is pinned to `n`.
fn systematic_pps<R: Rng + ?Sized>(pi: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let mut frame: Vec<usize> = (0..pi.len()).collect();
    frame.shuffle(rng);
    let u: f64 = rng.random();
    let mut selected = Vec::with_capacity(n);
    let mut cum = 0.0;
    let mut prev_hits = (0.0 - u).floor();
    for (pos, &unit) in frame.iter().enumerate() {
        cum = if pos + 1 == frame.len() {
            n as f64
        } else {
            cum + pi[unit]
        };
        let hits = (cum - u).floor();
        if hits > prev_hits {
            selected.push(unit);
        }
        prev_hits = hits;
    }
    if selected.len() < n {
        // Only reachable through rounding in the cumulated sums.
        let mut rest: Vec<usize> = frame
            .iter()
            .copied()
            .filter(|u| !selected.contains(u))
            .collect();
        rest.sort_by(|&a, &b| pi[b].total_cmp(&pi[a]).then(a.cmp(&b)));
        selected.extend(rest.into_iter().take(n - selected.len()));
    }
    selected
}

#[cfg(test)]
mod tests {
    use super::super::tests::line_pop;
    use super::super::*;
    use crate::rng;

    #[test]
    fn census_draws() {
        let pop = line_pop(7);
        let mut r = rng::stream(1, &[]);
        let s = draw(&DesignSpec::Srswor { n: 7 }, &pop, &mut r).unwrap();
        assert_eq!(s.members(), &[0, 1, 2, 3, 4, 5, 6]);
        let s = draw(&DesignSpec::Poisson { pi: vec![1.0; 7] }, &pop, &mut r).unwrap();
        assert_eq!(s.len(), 7);
        let s = draw(&DesignSpec::PpsSystematic { n: 7 }, &pop, &mut r).unwrap();
        assert_eq!(s.len(), 7);
    }

    #[test]
    fn fixed_sizes() {
        let pop = line_pop(12);
        let designs = [
            DesignSpec::Srswor { n: 5 },
            DesignSpec::PpsSystematic { n: 5 },
            DesignSpec::SystematicEqual { n: 4 },
            DesignSpec::stratified_by_quantiles(&pop, 6, &[0.5, 0.5]).unwrap(),
            DesignSpec::contiguous_clusters(12, 3, 2),
        ];
        let expected = [5, 5, 4, 6, 6];
        let mut r = rng::stream(2, &[]);
        for (d, &n) in designs.iter().zip(&expected) {
            let prepared = d.prepare(&pop).unwrap();
            for _ in 0..200 {
                let s = prepared.draw(&mut r);
                assert_eq!(s.len(), n, "{:?}", d.kind());
                assert!(s.weights().iter().all(|&w| w >= 1.0 && w.is_finite()));
            }
        }
    }

    #[test]
    fn srswor_empirical_frequencies() {
        let pop = line_pop(10);
        let prepared = DesignSpec::Srswor { n: 4 }.prepare(&pop).unwrap();
        let mut r = rng::stream(3, &[]);
        let reps = 100_000;
        let mut counts = [0usize; 10];
        for _ in 0..reps {
            for &i in prepared.draw(&mut r).members() {
                counts[i] += 1;
            }
        }
        for c in counts {
            let freq = c as f64 / reps as f64;
            assert!((freq - 0.4).abs() < 0.0046, "{freq}");
        }
    }

    #[test]
    fn pps_empirical_frequencies() {
        let z = [1.0, 2.0, 3.0, 4.0, 5.0, 5.0, 20.0];
        let pop = Population::new(1, z.to_vec(), vec![0.0; 7], Some(z.to_vec())).unwrap();
        let prepared = DesignSpec::PpsSystematic { n: 3 }.prepare(&pop).unwrap();
        let pi = prepared.probs().pi().to_vec();
        assert_eq!(pi[6], 1.0);
        let mut r = rng::stream(4, &[]);
        let reps = 100_000;
        let mut counts = [0usize; 7];
        for _ in 0..reps {
            for &i in prepared.draw(&mut r).members() {
                counts[i] += 1;
            }
        }
        for (c, p) in counts.iter().zip(&pi) {
            let freq = *c as f64 / reps as f64;
            let se = (p * (1.0 - p) / reps as f64).sqrt();
            assert!((freq - p).abs() <= 3.0 * se + 1e-12, "{freq} vs {p}");
        }
    }
}
