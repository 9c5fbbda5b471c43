use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use svyknn::bounds::{c_d, kn_schedule, rate_bound, unit_ball_volume, BoundMode, TheoryParams};
use svyknn::design::inclusion_probs;
use svyknn::diagnostics::{c4_ratio_scan, c7_min_inclusion, c8_for_design, c9_rij_exhaustive};
use svyknn::grid;
use svyknn::harness::{build_design, run_study, sample_size, KnRule, Preset, StudyConfig, StudyId};
use svyknn::io::{
    read_grid, read_population_csv, read_table, write_grid, write_results, TabularSchema,
};
use svyknn::population::generate_population;
use svyknn::rng::{child_seed, stream};
use svyknn::{Backend, DesignSpec, PopulationKnn, Sample, SampleKnn, SuperpopSpec};

use crate::config;
use crate::output::{prepare_dir, write_manifest, write_text};
use crate::{GlobalArgs, StudyArg};

const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    /// Sample CSV with covariates, the response and inclusion probabilities.
    #[arg(long, value_name = "CSV")]
    pub sample: PathBuf,
    /// Optional census CSV with the same covariates and response; adds the
    /// full-population estimate.
    #[arg(long, value_name = "CSV")]
    pub population: Option<PathBuf>,
    /// Evaluation points, one per `--at`, coordinates separated by commas.
    #[arg(long, value_name = "X1,X2,..", allow_hyphen_values = true)]
    pub at: Vec<String>,
    /// Grid CSV with header `point,x1,..,xd`, as written by the studies.
    #[arg(long, value_name = "CSV", conflicts_with = "at")]
    pub points: Option<PathBuf>,
    /// Number of neighbors; defaults to the square root of the sample size.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Column of first-order inclusion probabilities in the sample file.
    #[arg(long, default_value = "pi")]
    pub pi_column: String,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignArg {
    Srswor,
    Stratified,
    Pps,
}

impl DesignArg {
    fn name(self) -> &'static str {
        match self {
            DesignArg::Srswor => "srswor",
            DesignArg::Stratified => "stratified",
            DesignArg::Pps => "pps",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct DiagnoseC4Args {
    #[arg(long, default_value_t = 1000)]
    pub population_size: usize,
    #[arg(long, default_value_t = 0.4)]
    pub fraction: f64,
    #[arg(long, value_enum, default_value = "pps")]
    pub design: DesignArg,
    /// Number of neighbors; defaults to the square root of the sample size.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct DiagnoseC9Args {
    #[arg(long, default_value_t = 10)]
    pub population_size: usize,
    #[arg(long, default_value_t = 0.4)]
    pub fraction: f64,
    /// Number of neighbors; defaults to the square root of the sample size.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct StudyArgs {
    #[arg(value_enum)]
    pub study: StudyArg,
    /// Path to winequality-white.csv (wine study only).
    #[arg(long, value_name = "CSV", env = "WINE_DATASET")]
    pub dataset: Option<PathBuf>,
    /// Monte Carlo replicates per population size.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Population size ladder, comma separated.
    #[arg(long, value_delimiter = ',', value_name = "N,..")]
    pub sizes: Option<Vec<usize>>,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    /// Covariate dimension.
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Sample sizes for the rate curves, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        value_name = "N,..",
        default_value = "50,100,200,500,1000,5000,10000,20000,50000"
    )]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub m5: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lipschitz: f64,
    /// Neighborhood density constant.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
}

fn parse_point(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("`{t}` in point `{text}` is not a number"))
        })
        .collect()
}

fn header_columns(path: &Path, delimiter: char) -> Result<Vec<String>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let first = text.lines().next().unwrap_or_default();
    ensure!(
        !first.trim().is_empty(),
        "{} has no header row",
        path.display()
    );
    Ok(first
        .split(delimiter)
        .map(|c| c.trim().trim_matches('"').to_string())
        .collect())
}

fn schema_for(path: &Path, args: &EstimateArgs, drop_pi: bool) -> Result<TabularSchema> {
    let names = header_columns(path, args.delimiter)?;
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut schema = TabularSchema {
        delimiter: args.delimiter,
        ..TabularSchema::simple(&refs, &args.response)
    };
    if drop_pi {
        ensure!(
            names.contains(&args.pi_column),
            "{} has no `{}` column of inclusion probabilities",
            path.display(),
            args.pi_column
        );
        schema.drop.push(args.pi_column.clone());
    }
    schema.validate()?;
    Ok(schema)
}

pub fn estimate(global: &GlobalArgs, args: &EstimateArgs) -> Result<()> {
    let schema = schema_for(&args.sample, args, true)?;
    let table = read_table(&args.sample, &schema)?;
    let pi = table
        .column(&args.pi_column)
        .expect("checked column")
        .to_vec();
    let loaded = svyknn::io::table_to_population(&table, &schema)?;
    let units = loaded.population;
    let dim = units.dim();
    let points = match &args.points {
        Some(p) => read_grid(p)?,
        None => args
            .at
            .iter()
            .map(|s| parse_point(s))
            .collect::<Result<_>>()?,
    };
    ensure!(
        !points.is_empty(),
        "give evaluation points with --at or --points"
    );
    for p in &points {
        ensure!(
            p.len() == dim,
            "point {p:?} has {} coordinates, the data have {dim}",
            p.len()
        );
    }
    let k = args.k.unwrap_or_else(|| units.len().isqrt().max(1));
    let sample = Sample::new((0..units.len()).collect(), &pi)?;
    let knn = SampleKnn::new(&units, &sample, &pi, Backend::Auto)?;

    let census = match &args.population {
        Some(path) => {
            let schema = schema_for(path, args, false)?;
            let pop = read_population_csv(path, &schema)?;
            ensure!(
                pop.covariate_names == loaded.covariate_names,
                "population covariates {:?} differ from sample covariates {:?}",
                pop.covariate_names,
                loaded.covariate_names
            );
            Some(pop.population)
        }
        None => None,
    };
    let census_knn = census
        .as_ref()
        .map(|p| PopulationKnn::new(p, Backend::Auto));

    let mut body = String::from("point");
    for name in &loaded.covariate_names {
        let _ = write!(body, ",{name}");
    }
    body.push_str(",k,m_hat_n");
    if census_knn.is_some() {
        body.push_str(",m_hat_N");
    }
    body.push('\n');
    for (i, x) in points.iter().enumerate() {
        let _ = write!(body, "{i}");
        for v in x {
            let _ = write!(body, ",{v:.16e}");
        }
        let _ = write!(body, ",{k},{:.16e}", knn.estimate_ht(x, k)?);
        if let Some(ck) = &census_knn {
            let _ = write!(body, ",{:.16e}", ck.estimate(x, k)?);
        }
        body.push('\n');
    }
    let dir = prepare_dir(&global.out)?;
    write_text(&dir, "estimates.csv", &body)?;
    write_manifest(
        &dir,
        "estimate",
        None,
        global.threads,
        args,
        &["estimates.csv"],
    )?;
    print!("{body}");
    Ok(())
}

fn default_k(k: Option<usize>, n: usize) -> Result<usize> {
    match k {
        Some(k) => KnRule::Fixed(k).apply(n, 1).map_err(Into::into),
        None => KnRule::Sqrt.apply(n, 1).map_err(Into::into),
    }
}

fn superpopulation(study: StudyId) -> SuperpopSpec {
    let base = StudyConfig::preset(study, Preset::Desk);
    SuperpopSpec {
        regression: base.regression,
        noise_sd: base.noise_sd,
        dim: 1,
    }
}

#[derive(Serialize)]
struct DiagnoseRun<'a, A> {
    args: &'a A,
    superpopulation: SuperpopSpec,
    sample_size: usize,
    k: usize,
    grid_step: f64,
}

pub fn diagnose_c4(global: &GlobalArgs, args: &DiagnoseC4Args) -> Result<()> {
    let seed = global.seed.unwrap_or(DEFAULT_SEED);
    let spec = superpopulation(StudyId::C4);
    let pop = generate_population(
        &spec,
        args.population_size,
        child_seed(seed, &["diagnose-c4".into(), "population".into()]),
    )?;
    let n = sample_size(args.fraction, pop.len())?;
    let k = default_k(args.k, n)?;
    let strata = StudyConfig::preset(StudyId::C4, Preset::Desk).strata_fractions;
    let design = build_design(args.design.name(), &pop, n, &strata)?;
    let prepared = design.prepare(&pop)?;
    let sample = prepared.draw(&mut stream(seed, &["diagnose-c4".into(), "sample".into()]));
    let grid = grid::unit_grid_step_002();
    let scan = c4_ratio_scan(&pop, &sample, k, &grid)?;

    let mut body = String::from("point,x1,ratio\n");
    for (i, (x, r)) in grid.iter().zip(&scan.ratios).enumerate() {
        let _ = writeln!(body, "{i},{:.16e},{r:.16e}", x[0]);
    }
    let dir = prepare_dir(&global.out)?;
    write_text(&dir, "c4.csv", &body)?;
    let run = DiagnoseRun {
        args,
        superpopulation: spec,
        sample_size: n,
        k,
        grid_step: 0.02,
    };
    write_manifest(
        &dir,
        "diagnose-c4",
        Some(seed),
        global.threads,
        &run,
        &["c4.csv"],
    )?;

    println!("design      {}", args.design.name());
    println!("N           {}", pop.len());
    println!("n           {n}");
    println!("k           {k}");
    println!("max ratio   {:.6}", scan.max_ratio);
    println!("min pi      {:.6}", c7_min_inclusion(prepared.probs()));
    match c8_for_design(&design, &pop) {
        Ok(v) => println!("c8 measure  {v:.6e}"),
        Err(e) => println!("c8 measure  unavailable ({e})"),
    }
    Ok(())
}

pub fn diagnose_c9(global: &GlobalArgs, args: &DiagnoseC9Args) -> Result<()> {
    let seed = global.seed.unwrap_or(DEFAULT_SEED);
    let spec = superpopulation(StudyId::C9);
    let pop = generate_population(
        &spec,
        args.population_size,
        child_seed(seed, &["diagnose-c9".into(), "population".into()]),
    )?;
    let n = sample_size(args.fraction, pop.len())?;
    let k = default_k(args.k, n)?;
    let design = DesignSpec::Srswor { n };
    let grid = grid::unit_grid_step_002();
    let report = c9_rij_exhaustive(&pop, &design, k, &grid)?;
    let big_n = report.population_size;

    let mut pairs = String::from("i,j,expected_abs_r,pi_ij\n");
    let probs = inclusion_probs(&design, &pop)?;
    for i in 0..big_n {
        for j in 0..big_n {
            let pij = probs.pij(i, j).unwrap_or(f64::NAN);
            let _ = writeln!(
                pairs,
                "{i},{j},{:.16e},{pij:.16e}",
                report.expected_abs_r[i * big_n + j]
            );
        }
    }
    let mut summary = String::from("statistic,value\n");
    for (name, v) in report.to_report().summary {
        let _ = writeln!(summary, "{name},{v:.16e}");
        println!("{name:<20} {v:.6e}");
    }
    let dir = prepare_dir(&global.out)?;
    write_text(&dir, "c9_pairs.csv", &pairs)?;
    write_text(&dir, "c9_summary.csv", &summary)?;
    let run = DiagnoseRun {
        args,
        superpopulation: spec,
        sample_size: n,
        k,
        grid_step: 0.02,
    };
    write_manifest(
        &dir,
        "diagnose-c9",
        Some(seed),
        global.threads,
        &run,
        &["c9_pairs.csv", "c9_summary.csv"],
    )?;
    Ok(())
}

pub fn study(global: &GlobalArgs, args: &StudyArgs) -> Result<()> {
    let id: StudyId = args.study.into();
    let cfg = config::resolve(
        id,
        global.preset.map(Into::into),
        global.config.as_deref(),
        |c| {
            if let Some(seed) = global.seed {
                c.seed = seed;
            }
            if let Some(l) = args.replicates {
                c.replicates = l;
            }
            if let Some(sizes) = &args.sizes {
                c.sizes = sizes.clone();
            }
            if let Some(path) = &args.dataset {
                c.dataset = Some(path.clone());
            }
        },
    )?;
    if id == StudyId::Wine {
        match &cfg.dataset {
            None => bail!(
                "the wine study needs --dataset (or WINE_DATASET) pointing at `{}`",
                svyknn::io::WINE_FILE_NAME
            ),
            Some(p) if !p.is_file() => bail!(
                "dataset {} not found; expected the UCI file `{}`",
                p.display(),
                svyknn::io::WINE_FILE_NAME
            ),
            Some(_) => {}
        }
    }
    let result = run_study(&cfg)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let dir = prepare_dir(&global.out)?;
    write_results(&result, &dir.join("results.csv"))?;
    write_grid(&result.grid, &dir.join("grid.csv"))?;
    write_text(&dir, "config.toml", &toml::to_string(&cfg)?)?;
    write_manifest(
        &dir,
        &format!("study {id}"),
        Some(cfg.seed),
        global.threads,
        &cfg,
        &["results.csv", "grid.csv", "config.toml"],
    )?;
    println!(
        "{id}: {} records over {} grid points written to {}",
        result.records.len(),
        result.grid.len(),
        dir.display()
    );
    Ok(())
}

pub fn bounds(global: &GlobalArgs, args: &BoundsArgs) -> Result<()> {
    let params = TheoryParams {
        d: args.d,
        sigma2: args.sigma2,
        lipschitz: args.lipschitz,
        c: args.c,
        m5: args.m5,
        ..TheoryParams::default()
    };
    params.validate()?;
    let vd = unit_ball_volume(args.d)?;
    let cd = if args.d >= 2 {
        Some(c_d(args.d)?)
    } else {
        None
    };

    let mut table = String::new();
    let _ = writeln!(table, "V_{} = {vd:.10}", args.d);
    match cd {
        Some(c) => {
            let _ = writeln!(table, "c_{} = {c:.10}", args.d);
        }
        None => {
            let _ = writeln!(table, "c_1 = 8 (one-dimensional constant)");
        }
    }
    let _ = writeln!(
        table,
        "{:>10} {:>8} {:>16} {:>16}",
        "n", "k_n", "shape", "constants"
    );
    let mut csv = String::from("d,n,kn,shape,constants\n");
    for &n in &args.n {
        ensure!(n >= 1, "sample sizes must be positive");
        let k = kn_schedule(args.d, n, args.m5);
        let shape = rate_bound(k, n, &params, BoundMode::Shape)?;
        let full = rate_bound(k, n, &params, BoundMode::Constants)?;
        let _ = writeln!(table, "{n:>10} {k:>8} {shape:>16.8e} {full:>16.8e}");
        let _ = writeln!(csv, "{},{n},{k},{shape:.16e},{full:.16e}", args.d);
    }
    print!("{table}");
    let dir = prepare_dir(&global.out)?;
    write_text(&dir, "bounds.csv", &csv)?;
    write_manifest(&dir, "bounds", None, global.threads, args, &["bounds.csv"])?;
    Ok(())
}
