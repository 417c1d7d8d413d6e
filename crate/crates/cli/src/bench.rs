//! Single-threaded timing of model construction and querying.

use std::time::Instant;

use occkit::descriptor::{DescriptorKind, DescriptorSetup};
use occkit::{DataDescription, FeatureMatrix};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::cli::BenchArgs;
use crate::data::{read_table, write_output};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub descriptor: DescriptorKind,
    pub n: usize,
    pub repeat: usize,
    pub construct_s: f64,
    pub query_us_per_instance: f64,
}

fn source_rows(args: &BenchArgs, needed: usize) -> CliResult<Vec<Vec<f64>>> {
    let rows = match &args.data {
        Some(path) => read_table(path, false)?.rows,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            (0..needed)
                .map(|_| {
                    (0..args.dim)
                        .map(|_| StandardNormal.sample(&mut rng))
                        .collect()
                })
                .collect()
        }
    };
    if rows.len() < needed {
        return Err(CliError::invalid(format!(
            "{needed} rows needed ({} queries plus the largest training size), {} available",
            args.queries,
            rows.len()
        )));
    }
    Ok(rows)
}

fn pick(rows: &[Vec<f64>], ids: &[usize]) -> CliResult<FeatureMatrix> {
    let picked: Vec<&[f64]> = ids.iter().map(|&i| rows[i].as_slice()).collect();
    Ok(FeatureMatrix::from_rows(&picked)?)
}

pub fn measure(args: &BenchArgs) -> CliResult<Vec<Timing>> {
    if args.min_exp > args.max_exp || args.max_exp > 24 || args.min_exp < 1 {
        return Err(CliError::invalid("need 1 ≤ --min-exp ≤ --max-exp ≤ 24"));
    }
    if args.repeats == 0 || args.queries == 0 || args.dim == 0 {
        return Err(CliError::invalid(
            "--repeats, --queries and --dim must be positive",
        ));
    }
    let largest = 1usize << args.max_exp;
    let rows = source_rows(args, largest + args.queries)?;
    let kinds = args.descriptor.kinds();
    let mut timings = Vec::new();
    for exp in args.min_exp..=args.max_exp {
        let n = 1usize << exp;
        for repeat in 0..args.repeats {
            let mut ids: Vec<usize> = (0..rows.len()).collect();
            ids.shuffle(&mut ChaCha8Rng::seed_from_u64(
                args.seed.wrapping_add(repeat as u64),
            ));
            let queries = pick(&rows, &ids[..args.queries])?;
            let train = pick(&rows, &ids[args.queries..args.queries + n])?;
            for &kind in &kinds {
                let mut setup = DescriptorSetup::defaults(kind, args.seed);
                setup.metric = args.metric.into();
                let start = Instant::now();
                let model = setup.fit(&train)?;
                let construct_s = start.elapsed().as_secs_f64();
                let start = Instant::now();
                let scores = model.score_all(&queries)?;
                let query_s = start.elapsed().as_secs_f64();
                std::hint::black_box(scores);
                timings.push(Timing {
                    descriptor: kind,
                    n,
                    repeat,
                    construct_s,
                    query_us_per_instance: query_s * 1e6 / args.queries as f64,
                });
            }
        }
    }
    Ok(timings)
}

/// Means over repeats, per descriptor and size, in first-seen order.
pub fn average(timings: &[Timing]) -> Vec<(DescriptorKind, usize, f64, f64)> {
    let mut out: Vec<(DescriptorKind, usize, f64, f64, usize)> = Vec::new();
    for t in timings {
        match out.iter_mut().find(|o| o.0 == t.descriptor && o.1 == t.n) {
            Some(o) => {
                o.2 += t.construct_s;
                o.3 += t.query_us_per_instance;
                o.4 += 1;
            }
            None => out.push((t.descriptor, t.n, t.construct_s, t.query_us_per_instance, 1)),
        }
    }
    out.into_iter()
        .map(|(d, n, c, q, count)| (d, n, c / count as f64, q / count as f64))
        .collect()
}

pub fn bench(args: &BenchArgs) -> CliResult<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| CliError::invalid(format!("cannot start a single-threaded pool: {e}")))?;
    let timings = pool.install(|| measure(args))?;
    write_output(args.out.as_ref(), |w| {
        let mut csv = csv::Writer::from_writer(w);
        if args.raw {
            for t in &timings {
                csv.serialize(t)?;
            }
        } else {
            csv.write_record(["descriptor", "n", "construct_s", "query_us_per_instance"])?;
            for (d, n, c, q) in average(&timings) {
                csv.write_record([
                    d.name().to_string(),
                    n.to_string(),
                    format!("{c:e}"),
                    format!("{q:e}"),
                ])?;
            }
        }
        csv.flush()
    })
}
