// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Pipeline stages behind each subcommand. Each returns the text it would
//! print so the stages can be driven from tests.

use std::path::Path;
use std::time::Instant;

use log::info;
use sgmatch::config::RunConfig;
use sgmatch::data::{generate_synthetic, ingest_dataset, Database, DatasetManifest, PatternRecord};
use sgmatch::engine::{
    approximate_query, benchmark_runtime, evaluate, overview_projection, precompute_store, query,
    QueryFilters, QueryResult,
};
use sgmatch::graph::QueryPattern;
use sgmatch::pipeline::{train_aligner_for, train_matcher_for};
use sgmatch::{Error, Result};

use crate::workspace::{Overview, Workspace};

fn summary(db: &Database) -> String {
    let nodes: usize = db.graphs.iter().map(|g| g.node_count()).sum();
    let edges: usize = db.graphs.iter().map(|g| g.edge_count()).sum();
    format!(
        "database {}: {} graphs, {} nodes, {} edges, {} labels\n",
        db.name,
        db.len(),
        nodes,
        edges,
        db.vocabulary.len()
    )
}

pub fn synth(cfg: &RunConfig, ws: &Workspace) -> Result<String> {
    let db = generate_synthetic(&cfg.synthetic())?;
    db.save(ws.database_path())?;
    Ok(summary(&db))
}

pub fn ingest(manifest: &Path, ws: &Workspace) -> Result<String> {
    let db = ingest_dataset(&DatasetManifest::load(manifest)?)?;
    db.save(ws.database_path())?;
    Ok(summary(&db))
}

pub fn train_match(cfg: &RunConfig, ws: &Workspace) -> Result<String> {
    let db = ws.load_database()?;
    let trained = train_matcher_for(&db, cfg)?;
    trained.model.to_checkpoint().save(ws.matcher_path())?;
    Ok(format!(
        "matcher: {} steps, final loss {:.5}, threshold {:.5}, validation f1 {:.3}\n",
        trained.losses.len(),
        trained.losses.last().copied().unwrap_or(f64::NAN),
        trained.model.comparator().threshold,
        trained.validation_f1
    ))
}

pub fn train_align(cfg: &RunConfig, ws: &Workspace) -> Result<String> {
    let db = ws.load_database()?;
    let trained = train_aligner_for(&db, cfg)?;
    trained.model.to_checkpoint().save(ws.aligner_path())?;
    Ok(format!(
        "aligner: {} steps, final loss {:.5}, target cap {}\n",
        trained.losses.len(),
        trained.losses.last().copied().unwrap_or(f64::NAN),
        trained.model.target_cap()
    ))
}

pub fn precompute(cfg: &RunConfig, ws: &Workspace) -> Result<String> {
    let db = ws.load_database()?;
    let matcher = ws.load_matcher()?;
    let aligner = ws.load_aligner()?;
    let start = Instant::now();
    let store = precompute_store(&db.graphs, &matcher, &aligner)?;
    store.save(ws.store_path())?;
    info!(
        "embedding store built in {:.2}s",
        start.elapsed().as_secs_f64()
    );
    let coordinates = overview_projection(&db.graphs, cfg.overview_beam);
    ws.save_overview(&Overview {
        graph_ids: db.graphs.iter().map(|g| g.graph_id().to_string()).collect(),
        coordinates,
    })?;
    Ok(format!(
        "store: {} graphs, {} node vectors\n",
        store.len(),
        store.node_vectors()
    ))
}

/// Reads a pattern file in the native graph format.
pub fn load_pattern(path: &Path, db: &Database) -> Result<QueryPattern> {
    let text = std::fs::read_to_string(path)?;
    let record: PatternRecord = serde_json::from_str(&text).map_err(|e| Error::Format {
        context: path.display().to_string(),
        message: e.to_string(),
    })?;
    record.to_pattern(&db.vocabulary)
}

pub struct QueryArgs<'a> {
    pub pattern: &'a Path,
    pub steps: Option<usize>,
    pub csv: bool,
    pub category: Option<String>,
}

pub fn run_query(ws: &Workspace, args: &QueryArgs<'_>) -> Result<String> {
    let engine = ws.load_engine()?;
    let pattern = load_pattern(args.pattern, engine.database())?;
    let filters = QueryFilters {
        category: args.category.clone(),
    };
    let start = Instant::now();
    let results = match args.steps {
        Some(steps) => approximate_query(&engine, &pattern, &filters, steps)?,
        None => query(&engine, &pattern, &filters)?,
    };
    info!(
        "{} results in {:.1} ms",
        results.len(),
        start.elapsed().as_secs_f64() * 1e3
    );
    if args.csv {
        results_csv(&results)
    } else {
        Ok(serde_json::to_string_pretty(&results).expect("results serialize") + "\n")
    }
}

/// One row per result; the alignment column lists `query:target` pairs.
pub fn results_csv(results: &[QueryResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "graph_id",
        "perturbation_depth",
        "score",
        "alignment",
        "note",
    ])
    .map_err(csv_error)?;
    for r in results {
        let alignment = r
            .alignment
            .as_ref()
            .map(|m| {
                m.iter()
                    .map(|(q, t)| format!("{q}:{t}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .unwrap_or_default();
        w.write_record([
            r.graph_id.clone(),
            r.perturbation_depth.to_string(),
            r.score.map(|s| format!("{s:.6}")).unwrap_or_default(),
            alignment,
            r.note.clone().unwrap_or_default(),
        ])
        .map_err(csv_error)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| csv_error(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format {
        context: "csv output".into(),
        message: e.to_string(),
    }
}

pub fn eval(cfg: &RunConfig, ws: &Workspace, out: Option<&Path>) -> Result<String> {
    let engine = ws.load_engine()?;
    let report = evaluate(&engine, &cfg.evaluation())?;
    if let Some(out) = out {
        std::fs::write(
            out,
            serde_json::to_string_pretty(&report).expect("report serializes"),
        )?;
    }
    Ok(report.to_table())
}

pub fn bench(cfg: &RunConfig, ws: &Workspace, out: Option<&Path>) -> Result<String> {
    let engine = ws.load_engine()?;
    let report = benchmark_runtime(&engine, &cfg.benchmark())?;
    let csv = report.to_csv();
    if let Some(out) = out {
        std::fs::write(out, &csv)?;
    }
    let fit = report.neural_fit;
    info!(
        "neural time fit: slope {:.3e} s/node, intercept {:.3e} s, r^2 {:.3}",
        fit.slope, fit.intercept, fit.r_squared
    );
    Ok(csv)
}
