//! Loading inputs and running the search and pruning stages.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use snp_core::cluster::{id_average, kmeans};
use snp_core::io::{ingest_dataset, read_pool, read_target};
use snp_core::model::split_identity;
use snp_core::prune::{fps_prune, sample_identities};
use snp_core::search::{greedy_search, selected_images};
use snp_core::{
    analysis, merge_pools, Budget, ClusterPartition, GaussianStats, PruneResult, SourcePool,
    TargetMoments, TargetSet,
};

use crate::config::{Amount, BudgetSpec, RunConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::*;

/// Reads every `--pool` input and merges them in the order given.
pub fn load_pool(config: &RunConfig) -> CliResult<SourcePool> {
    let mut parts = Vec::with_capacity(config.pools.len());
    for source in &config.pools {
        let format = config.input_format(&source.path)?;
        let part = match &source.name {
            Some(name) => ingest_dataset(&source.path, name, format)?,
            None => read_pool(&source.path, format)?,
        };
        parts.push(part);
    }
    Ok(merge_pools(parts)?)
}

pub fn load_target(config: &RunConfig) -> CliResult<TargetSet> {
    let format = config.input_format(&config.target)?;
    Ok(read_target(&config.target, format)?)
}

pub struct RunOutput {
    pub manifest: Manifest,
    /// Present when the search stage ran in this invocation.
    pub partition: Option<ClusterPartition>,
}

pub fn run(config: &RunConfig) -> CliResult<RunOutput> {
    config.validate()?;
    let pool = load_pool(config)?;
    let target = load_target(config)?;
    target.check_compatible(&pool)?;
    run_loaded(config, &pool, &target)
}

/// Runs on already loaded inputs; `config` is only echoed and consulted for
/// clustering, seeds and the budget.
pub fn run_loaded(config: &RunConfig, pool: &SourcePool, target: &TargetSet) -> CliResult<RunOutput> {
    let identity_budget = match config.budget {
        Some(spec) => {
            let n = spec.ids.resolve(pool.identity_count());
            if let Amount::Count(m) = spec.images {
                // Fails before the search stage rather than after it.
                Budget::new(n, m)?;
            }
            Some(n)
        }
        None => None,
    };

    let (search, partition) = match &config.from_manifest {
        Some(path) => (reuse_search(path, pool)?, None),
        None => {
            let (summary, partition) = search_stage(config, pool, target)?;
            (summary, Some(partition))
        }
    };

    let (prune, selected) = match (config.budget, identity_budget) {
        (Some(spec), Some(n)) => {
            let (summary, result) = prune_stage(spec, n, config, pool, target, &search)?;
            let selected = result.selected.clone();
            (Some(summary), selected)
        }
        _ => {
            let mut all: Vec<usize> = selected_images(pool, &search.identity_ids)
                .into_values()
                .flatten()
                .collect();
            all.sort_unstable();
            (None, all)
        }
    };

    let composition = composition_summary(pool, &selected)?;
    let manifest = Manifest {
        manifest_version: MANIFEST_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix_secs: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        command: if prune.is_some() { "prune" } else { "search" }.to_string(),
        config: config.clone(),
        conventions: Conventions::default(),
        pool: PoolSummary {
            datasets: pool.datasets().to_vec(),
            records: pool.len(),
            identities: pool.identity_count(),
            dimension: pool.dimension(),
        },
        target: TargetSummary {
            records: target.len(),
        },
        search,
        prune,
        composition,
        selected: selected
            .iter()
            .map(|&i| {
                let r = pool.record(i);
                SelectedImage {
                    dataset: pool.dataset_name(r.dataset_id).to_string(),
                    identity: split_identity(r.identity_id).1,
                    image_key: r.image_key.clone(),
                }
            })
            .collect(),
    };
    Ok(RunOutput {
        manifest,
        partition,
    })
}

fn search_stage(
    config: &RunConfig,
    pool: &SourcePool,
    target: &TargetSet,
) -> CliResult<(SearchSummary, ClusterPartition)> {
    let points = id_average::<f64>(pool);
    let partition = kmeans(&points, config.clusters, config.seeds.cluster)?;
    if !partition.converged {
        log::warn!(
            "k-means stopped after {} iterations without converging",
            partition.iterations
        );
    }
    let result = greedy_search(pool, &partition, target)?;
    log::info!(
        "search kept {} of {} clusters: {} identities, {} images, FID {:.6}",
        result.selected_clusters.len(),
        result.ranking.len(),
        result.identity_ids.len(),
        result.image_count,
        result.best_fid
    );
    let summary = SearchSummary {
        kmeans: Some(KmeansSummary {
            clusters: partition.k,
            iterations: partition.iterations,
            converged: partition.converged,
            inertia: partition.final_inertia(),
        }),
        absorbed: result
            .absorbed
            .iter()
            .map(|&(cluster, into)| Absorbed { cluster, into })
            .collect(),
        ranking: result
            .ranking
            .iter()
            .map(|&(cluster, fid)| ClusterFid { cluster, fid })
            .collect(),
        trace: result
            .trace
            .iter()
            .enumerate()
            .map(|(i, s)| TraceEntry {
                prefix: i + 1,
                cluster: s.cluster,
                cumulative_fid: s.cumulative_fid,
            })
            .collect(),
        selected_clusters: result.selected_clusters.clone(),
        best_fid: result.best_fid,
        identity_count: result.identity_ids.len(),
        image_count: result.image_count,
        identity_ids: result.identity_ids,
    };
    Ok((summary, partition))
}

fn reuse_search(path: &Path, pool: &SourcePool) -> CliResult<SearchSummary> {
    let earlier = Manifest::read(path)?;
    let here = (pool.datasets(), pool.len(), pool.identity_count(), pool.dimension());
    let there = (
        earlier.pool.datasets.as_slice(),
        earlier.pool.records,
        earlier.pool.identities,
        earlier.pool.dimension,
    );
    if here != there {
        return Err(CliError::config(format!(
            "manifest {} was produced from a different pool",
            path.display()
        )));
    }
    if let Some(missing) = earlier
        .search
        .identity_ids
        .iter()
        .find(|&&id| pool.images_of(id).is_empty())
    {
        return Err(CliError::data(format!(
            "manifest {} lists identity {missing}, which is not in the pool",
            path.display()
        )));
    }
    Ok(earlier.search)
}

fn prune_stage(
    spec: BudgetSpec,
    identity_budget: usize,
    config: &RunConfig,
    pool: &SourcePool,
    target: &TargetSet,
    search: &SearchSummary,
) -> CliResult<(PruneSummary, PruneResult)> {
    // A percentage image budget is taken of the sampled identities' images,
    // and never drops below one image per sampled identity.
    let ids = sample_identities(&search.identity_ids, identity_budget, config.seeds.ids);
    let universe: usize = ids.iter().map(|&id| pool.images_of(id).len()).sum();
    let budget = match spec.images {
        Amount::Count(m) => Budget::new(identity_budget, m)?,
        pct => Budget::new(ids.len(), pct.resolve(universe).max(ids.len()))?,
    };
    let image_budget = budget.images();
    let result: PruneResult = fps_prune(pool, &ids, image_budget, config.seeds.fps)?;

    let fid = if result.selected.len() >= 2 {
        let moments = TargetMoments::new(&GaussianStats::accumulate(
            pool.dimension(),
            target.records(),
        )?)?;
        let stats = GaussianStats::from_descriptors(
            pool.dimension(),
            result.selected.iter().map(|&i| pool.record(i).descriptor.as_slice()),
        )?;
        Some(moments.fid_of(&stats)?)
    } else {
        None
    };
    log::info!(
        "pruned to {} identities, {} images (cover radius {:.6})",
        result.id_sample.len(),
        result.selected.len(),
        result.cover_radius
    );

    let summary = PruneSummary {
        identity_budget,
        image_budget,
        id_sample: result.id_sample.clone(),
        universe_size: result.universe_size,
        seed_images: result
            .seed_images
            .iter()
            .map(|(&identity, &record)| SeedImage { identity, record })
            .collect(),
        fps_order: result.fps_order.clone(),
        cover_radius: result.cover_radius,
        fid,
    };
    Ok((summary, result))
}

fn composition_summary(pool: &SourcePool, selected: &[usize]) -> CliResult<CompositionSummary> {
    let report = analysis::composition(pool, selected)?;
    Ok(CompositionSummary {
        total_images: report.total_images,
        total_identities: report.total_identities,
        datasets: report
            .datasets
            .into_iter()
            .map(|d| DatasetShare {
                dataset: d.name,
                images: d.images,
                image_fraction: d.image_fraction,
                identities: d.identities,
                identity_fraction: d.identity_fraction,
            })
            .collect(),
    })
}

/// Writes `manifest.json`, `trace.csv` and, when clustering ran,
/// `partition.csv` into `dir`.
pub fn write_outputs(dir: &Path, output: &RunOutput) -> CliResult<()> {
    let io_err = |path: &Path, e: std::io::Error| {
        CliError::data(format!("cannot write {}: {e}", path.display()))
    };
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;

    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, output.manifest.to_json()).map_err(|e| io_err(&path, e))?;

    let path = dir.join(TRACE_FILE);
    let mut trace = String::from("prefix,cluster,cumulative_fid\n");
    for t in &output.manifest.search.trace {
        trace.push_str(&format!("{},{},{}\n", t.prefix, t.cluster, t.cumulative_fid));
    }
    fs::write(&path, trace).map_err(|e| io_err(&path, e))?;

    if let Some(partition) = &output.partition {
        let path = dir.join(PARTITION_FILE);
        let file = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
        partition.write_csv(std::io::BufWriter::new(file))?;
    }
    Ok(())
}
