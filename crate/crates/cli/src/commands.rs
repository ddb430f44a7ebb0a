use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use compmc::composition::sample_initial;
use compmc::oracle::{
    detailed_balance_residual, empirical_distribution, enumerate_space, exact_distribution, stationarity_residual,
    stationary_distribution, total_variation, transition_matrix_scaled,
};
use compmc::{n_marginal, run_chain_with, run_chains, ChainConfig, ChainRng, SamplerKind, SpaceParams, Sparsity, Target};
use compmc_recipe::demo::top_recipes;
use compmc_recipe::{
    dataset, load_recipes, read_recipes, run_demo, synthetic_rows, train_forest, DemoConfig, DemoSummary,
    ForestParams, LabelKind, RecipeDataset, UnitTable,
};
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::args::{DemoArgs, OracleArgs, SampleArgs, SynthArgs};
use crate::artifacts::*;

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn samplers_or_all(list: &[SamplerKind]) -> Vec<SamplerKind> {
    if list.is_empty() {
        SamplerKind::ALL.to_vec()
    } else {
        list.to_vec()
    }
}

/// Unique file-name stems for the priors, in argument order.
fn prior_slugs(priors: &[compmc::PriorSpec]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    priors
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let slug = p.slug();
            if seen.insert(slug.clone()) {
                slug
            } else {
                format!("{slug}_{k}")
            }
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct SampleManifest {
    pub bins: usize,
    pub total: u32,
    pub priors: Vec<String>,
    pub samplers: Vec<String>,
    pub iterations: usize,
    pub burn_in: usize,
    pub chains: usize,
    pub seed: u64,
    pub split_stride: u32,
}

pub fn cmd_sample(a: &SampleArgs) -> Result<bool> {
    let space = SpaceParams::new(a.space.bins, a.space.total)?;
    anyhow::ensure!(a.chains >= 1, "--chains must be at least 1");
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let samplers = samplers_or_all(&a.samplers);
    let cfg = ChainConfig::new(a.iterations, a.seed)
        .burn_in(a.burn_in)
        .record_trace(a.trace)
        .split_stride(a.split_stride);
    let slugs = prior_slugs(&a.priors);

    let mut stats = Vec::new();
    println!("{:<28} {:<12} {:>20} {:>20}", "prior", "sampler", "accepted %", "updated %");
    for (spec, slug) in a.priors.iter().zip(&slugs) {
        let prior: Sparsity = spec.build(&space)?;
        let target = Target::new(space, prior.clone());
        for &kind in &samplers {
            let results = run_chains(kind, &target, &cfg, a.chains)
                .with_context(|| format!("running {kind} on {spec}"))?;
            let acc: Vec<f64> = results.iter().map(|r| 100.0 * r.accepted_rate).collect();
            let upd: Vec<f64> = results.iter().map(|r| 100.0 * r.updated_rate).collect();
            for (c, (&x, &y)) in acc.iter().zip(&upd).enumerate() {
                stats.push(StatsRow { prior: spec.to_string(), sampler: kind.to_string(), chain: c.to_string(), accepted_pct: x, updated_pct: y });
            }
            let ((am, asd), (um, usd)) = (mean_std(&acc), mean_std(&upd));
            stats.push(StatsRow { prior: spec.to_string(), sampler: kind.to_string(), chain: "mean".into(), accepted_pct: am, updated_pct: um });
            stats.push(StatsRow { prior: spec.to_string(), sampler: kind.to_string(), chain: "stdev".into(), accepted_pct: asd, updated_pct: usd });
            println!(
                "{:<28} {:<12} {:>20} {:>20}",
                spec.to_string(),
                kind.name(),
                format!("{am:.2} ± {asd:.3}"),
                format!("{um:.2} ± {usd:.3}")
            );

            let marginals: Vec<BTreeMap<usize, f64>> = results.iter().map(n_marginal).collect::<Result<_, _>>()?;
            let rows: Vec<HistogramRow> = (1..=space.max_support())
                .map(|n| {
                    let per: Vec<f64> = marginals.iter().map(|m| m.get(&n).copied().unwrap_or(0.0)).collect();
                    let (mean, stdev) = mean_std(&per);
                    HistogramRow { n, target: prior.weight(n), mean, stdev, chains: per }
                })
                .collect();
            write_histogram(&histogram_file(&a.out, slug, kind.name()), &rows)?;

            if a.trace {
                let lines = results.iter().enumerate().flat_map(|(c, r)| {
                    r.samples.iter().enumerate().map(move |(t, x)| TraceLine {
                        chain: c,
                        t,
                        x: x.values().iter().enumerate().filter(|(_, &v)| v > 0).map(|(i, &v)| (i, v)).collect(),
                    })
                });
                write_jsonl(&trace_file(&a.out, slug, kind.name()), lines)?;
            }
        }
    }
    write_csv(&stats_file(&a.out), &stats)?;
    write_json(
        &a.out.join("run.json"),
        &SampleManifest {
            bins: a.space.bins,
            total: a.space.total,
            priors: a.priors.iter().map(ToString::to_string).collect(),
            samplers: samplers.iter().map(ToString::to_string).collect(),
            iterations: a.iterations,
            burn_in: a.burn_in,
            chains: a.chains,
            seed: a.seed,
            split_stride: a.split_stride,
        },
    )?;
    Ok(true)
}

pub fn cmd_oracle_check(a: &OracleArgs) -> Result<bool> {
    let space = SpaceParams::new(a.space.bins, a.space.total)?;
    let prior: Sparsity = match &a.prior {
        Some(spec) => spec.build(&space)?,
        None => Sparsity::uniform(1, space.max_support(), &space)?,
    };
    let target = Target::new(space, prior);
    let es = enumerate_space(&space)?;
    let ed = exact_distribution(&es, &target)?;
    let scale = a.corrupt_acceptance.unwrap_or(1.0);

    let mut rows = Vec::new();
    for kind in samplers_or_all(&a.samplers) {
        let pi = transition_matrix_scaled(kind, &es, &target, scale)?;
        let stationary = stationary_distribution(&pi);
        let vector_gap = stationary.iter().zip(&ed.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

        let mut rng = ChainRng::seed_from_u64(a.seed);
        let x0 = sample_initial(target.sparsity(), &space, &mut rng)?;
        let cfg = ChainConfig::new(a.iterations, a.seed).burn_in(a.burn_in).record_trace(true);
        let chain = run_chain_with(kind, &target, &cfg, &x0, &mut rng, |_, _, _| {})?;
        let empirical: Vec<f64> = empirical_distribution(&es, chain.samples.iter().map(|x| x.values()))?;
        let tv = total_variation(&empirical, &ed.probs)?;

        for (check, value, tolerance) in [
            ("row-sums", pi.max_row_sum_error(), 1e-12),
            ("detailed-balance", detailed_balance_residual(&ed, &pi), 1e-10),
            ("stationarity", stationarity_residual(&ed, &pi), 1e-8),
            ("stationary-vector", vector_gap, 1e-8),
            ("chain-tv", tv, a.tv_tol),
        ] {
            let passed = value <= tolerance;
            println!("{} {:<12} {:<18} {:.3e} (tol {:.0e})", if passed { "PASS" } else { "FAIL" }, kind.name(), check, value, tolerance);
            rows.push(OracleRow { sampler: kind.to_string(), check: check.into(), value, tolerance, passed });
        }
    }
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)?;
        write_csv(&dir.join("oracle.csv"), &rows)?;
    }
    Ok(rows.iter().all(|r| r.passed))
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct DemoReport {
    pub dataset: String,
    pub recipes: usize,
    pub ingredients: usize,
    pub taste_label: String,
    pub timing_label: String,
    pub taste_training_accuracy: f64,
    pub timing_training_accuracy: f64,
    pub summary: DemoSummary,
}

fn load_dataset(a: &DemoArgs, units: &UnitTable) -> Result<(RecipeDataset, String)> {
    if a.synthetic {
        let path = a.out.join("synthetic_recipes.csv");
        let mut buf = Vec::new();
        dataset::write_rows(&mut buf, &synthetic_rows(a.seed))?;
        std::fs::write(&path, &buf)?;
        Ok((read_recipes(buf.as_slice(), units)?, format!("synthetic (seed {})", a.seed)))
    } else {
        let path = a.data.as_ref().expect("clap requires --data without --synthetic");
        Ok((load_recipes(path, units).with_context(|| format!("loading {}", path.display()))?, path.display().to_string()))
    }
}

pub fn cmd_demo(a: &DemoArgs) -> Result<bool> {
    std::fs::create_dir_all(&a.out)?;
    let units = match &a.units {
        Some(p) => UnitTable::load(p)?,
        None => UnitTable::default(),
    };
    let (d, source) = load_dataset(a, &units)?;
    let params = ForestParams { trees: a.trees, max_depth: a.depth, seed: a.seed, ..ForestParams::default() };
    let taste = Arc::new(train_forest(&d, LabelKind::Taste, &params)?);
    let timing = Arc::new(train_forest(&d, LabelKind::Timing, &params)?);
    taste.save(&a.out.join("taste_model.json"))?;
    timing.save(&a.out.join("timing_model.json"))?;

    let mut cfg = DemoConfig::new(&a.taste, &a.timing, a.seed);
    cfg.c_taste = a.c_taste;
    cfg.c_timing = a.c_timing;
    cfg.chain = ChainConfig::new(a.iterations, a.seed).burn_in(a.burn_in);
    cfg.baseline_repeats = a.baseline_repeats;
    cfg.nearest = a.nearest;
    let out = run_demo(&d, taste.clone(), timing.clone(), &cfg)?;

    let lines = out.samples.iter().enumerate().map(|(k, s)| GeneratedLine {
        sample: k,
        composition: d.describe(&s.composition).into_iter().map(|(n, v)| Amount { ingredient: n.into(), amount: v }).collect(),
        taste_score: s.taste_score,
        timing_score: s.timing_score,
        joint_score: s.joint_score,
        nearest: s.nearest.iter().map(|&(r, o)| Neighbor { name: d.recipes[r].name.clone(), overlap: o }).collect(),
    });
    write_jsonl(&a.out.join("generated.jsonl"), lines)?;

    let h = &out.histogram;
    let bins: Vec<ScoreBinRow> = (0..h.mcmc.len())
        .map(|k| ScoreBinRow { lo: h.edges[k], hi: h.edges[k + 1], mcmc: h.mcmc[k], baseline_mean: h.baseline_mean[k], baseline_std: h.baseline_std[k] })
        .collect();
    write_csv(&a.out.join("score_histogram.csv"), &bins)?;

    let report = DemoReport {
        dataset: source,
        recipes: d.len(),
        ingredients: d.ingredient_names.len(),
        taste_label: a.taste.clone(),
        timing_label: a.timing.clone(),
        taste_training_accuracy: taste.accuracy(&d)?,
        timing_training_accuracy: timing.accuracy(&d)?,
        summary: out.summary.clone(),
    };
    write_json(&a.out.join("summary.json"), &report)?;

    let mut text = String::new();
    writeln!(text, "Top generated recipes for taste `{}` and timing `{}`", a.taste, a.timing)?;
    for (rank, s) in top_recipes(&out.samples, 10).into_iter().enumerate() {
        writeln!(text, "\n#{} joint {:.4} (taste {:.4}, timing {:.4})", rank + 1, s.joint_score, s.taste_score, s.timing_score)?;
        for (name, amount) in d.describe(&s.composition) {
            writeln!(text, "  {:>5.1}%  {name}", f64::from(amount) / 10.0)?;
        }
        for &(r, o) in &s.nearest {
            let near = &d.recipes[r];
            let common: Vec<&str> = d
                .describe(&near.composition)
                .into_iter()
                .filter(|(n, _)| s.composition.values()[d.ingredient_names.iter().position(|x| x == n).unwrap()] > 0)
                .map(|(n, _)| n)
                .collect();
            writeln!(text, "  similar: {} [{} / {}] overlap {:.2}, shares {}", near.name, near.taste, near.timing, o, common.join(", "))?;
        }
    }
    std::fs::write(a.out.join("top10.txt"), &text)?;

    let s = &out.summary;
    println!("samples            {}", s.samples);
    println!("accepted / updated {:.2}% / {:.2}%", 100.0 * s.accepted_rate, 100.0 * s.updated_rate);
    println!("mean joint score   mcmc {:.4}  baseline {:.4}", s.mcmc_mean, s.baseline_mean);
    println!("tail >= {:.4}      mcmc {:.4}  baseline {:.4}", s.tail_threshold, s.mcmc_tail_mass, s.baseline_tail_mass);
    println!("histogram TV       {:.4}", s.histogram_tv);
    Ok(true)
}

pub fn cmd_synth(a: &SynthArgs) -> Result<bool> {
    std::fs::create_dir_all(&a.out)?;
    let rows = synthetic_rows(a.seed);
    let mut buf = Vec::new();
    dataset::write_rows(&mut buf, &rows)?;
    std::fs::write(a.out.join("recipes.csv"), &buf)?;
    std::fs::write(a.out.join("units.txt"), UnitTable::default().to_string())?;
    let d = read_recipes(buf.as_slice(), &UnitTable::default())?;
    println!("wrote {} recipes over {} ingredients to {}", d.len(), d.ingredient_names.len(), a.out.display());
    Ok(true)
}

/// Loads a dataset written by `synth-data` or supplied by the user.
pub fn read_dataset(path: &Path, units: Option<&Path>) -> Result<RecipeDataset> {
    let units = match units {
        Some(p) => UnitTable::load(p)?,
        None => UnitTable::default(),
    };
    Ok(load_recipes(path, &units)?)
}
