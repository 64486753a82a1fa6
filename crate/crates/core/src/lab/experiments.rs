use std::io::Write;

use rayon::prelude::*;

use super::{adjusted_rand_index, generate_gmm_data, posterior_over_partitions, GenConfig, LabSettings};
use crate::error::Result;
use crate::gmm::{component_dimensionality, fab_fit, Dataset, FabConfig};
use crate::priors::PriorSpec;

pub const DOMINANCE_COLUMNS: [&str; 6] =
    ["r", "prior_kind", "prior_param", "tv_distance", "map_blocks", "map_partition"];

pub const SELECTION_COLUMNS: [&str; 7] = ["d", "seed", "selected_k", "objective", "iterations", "ari", "status"];

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceRow {
    pub replication: usize,
    /// The prior actually scored at this replication (FIC's `dc` is
    /// recomputed as `2 * D * r`).
    pub prior: PriorSpec,
    pub tv_distance: f64,
    pub map_blocks: usize,
    pub map_partition: String,
}

/// For every replication factor `r` and prior, the total-variation distance
/// between the posterior under that prior and the likelihood-only
/// (uniform-prior) posterior on the data with each column copied `r` times.
pub fn dominance_curve(
    x_base: &Dataset,
    replications: &[usize],
    specs: &[PriorSpec],
    k_max: usize,
    settings: &LabSettings,
) -> Result<Vec<DominanceRow>> {
    for spec in specs {
        spec.validate()?;
    }
    let mut rows = Vec::with_capacity(replications.len() * specs.len());
    for &r in replications {
        let x = x_base.replicate_columns(r)?;
        let baseline = posterior_over_partitions(&x, &PriorSpec::Uniform, k_max, settings)?;
        for spec in specs {
            let prior = match spec {
                PriorSpec::Fic { .. } => PriorSpec::Fic { dc: component_dimensionality(x.dims()) as f64 },
                other => *other,
            };
            let table = if prior == PriorSpec::Uniform {
                baseline.clone()
            } else {
                posterior_over_partitions(&x, &prior, k_max, settings)?
            };
            let map = table.map();
            rows.push(DominanceRow {
                replication: r,
                prior,
                tv_distance: table.total_variation(&baseline)?,
                map_blocks: map.partition.num_blocks(),
                map_partition: map.partition.to_string(),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRow {
    pub d: f64,
    pub seed: u64,
    pub selected_k: Option<usize>,
    pub objective: Option<f64>,
    pub iterations: Option<usize>,
    pub ari: Option<f64>,
    /// `converged`, `max_iters`, or `error: <message>`.
    pub status: String,
}

fn selection_cell(gen: &GenConfig, d: f64, seed: u64, cfg_base: &FabConfig) -> SelectionRow {
    let run = || -> Result<SelectionRow> {
        let (x, truth) = generate_gmm_data(&GenConfig { seed, ..gen.clone() })?;
        let cfg = FabConfig { d, seed, ..cfg_base.clone() };
        let (model, trace) = fab_fit(&x, &cfg)?;
        let predicted = model.predict(&x);
        Ok(SelectionRow {
            d,
            seed,
            selected_k: Some(model.k()),
            objective: Some(trace.final_objective()),
            iterations: Some(trace.iterations),
            ari: Some(adjusted_rand_index(predicted.labels(), truth.labels())?),
            status: if trace.converged { "converged" } else { "max_iters" }.to_string(),
        })
    };
    run().unwrap_or_else(|e| SelectionRow {
        d,
        seed,
        selected_k: None,
        objective: None,
        iterations: None,
        ari: None,
        status: format!("error: {e}"),
    })
}

/// One FAB-EM fit per `(d, seed)` cell, on data generated with that seed.
/// Cells run in parallel; rows come back in grid order (`d` outer, seed
/// inner). Failing cells become rows with an error status.
pub fn selection_sweep(gen: &GenConfig, d_grid: &[f64], seeds: &[u64], cfg_base: &FabConfig) -> Vec<SelectionRow> {
    let cells: Vec<(f64, u64)> = d_grid.iter().flat_map(|&d| seeds.iter().map(move |&s| (d, s))).collect();
    cells.par_iter().map(|&(d, seed)| selection_cell(gen, d, seed, cfg_base)).collect()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_dominance_csv<W: Write>(rows: &[DominanceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| crate::Error::Io(e.into());
    w.write_record(DOMINANCE_COLUMNS).map_err(io)?;
    for row in rows {
        w.write_record([
            row.replication.to_string(),
            row.prior.kind_name().to_string(),
            opt(row.prior.param()),
            row.tv_distance.to_string(),
            row.map_blocks.to_string(),
            row.map_partition.clone(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_selection_csv<W: Write>(rows: &[SelectionRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| crate::Error::Io(e.into());
    w.write_record(SELECTION_COLUMNS).map_err(io)?;
    for row in rows {
        w.write_record([
            row.d.to_string(),
            row.seed.to_string(),
            opt(row.selected_k),
            opt(row.objective),
            opt(row.iterations),
            opt(row.ari),
            row.status.clone(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
