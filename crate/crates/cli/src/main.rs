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

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use sgmatch::config::RunConfig;
use sgmatch_cli::commands::{self, QueryArgs};
use sgmatch_cli::server::{self, AppState};
use sgmatch_cli::Workspace;

#[derive(Parser, Debug)]
#[command(
    name = "sgmatch",
    version,
    about = "Learned subgraph matching over a graph database"
)]
struct Cli {
    /// TOML run configuration; defaults apply to anything left out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory holding the database, checkpoints and store.
    #[arg(long, global = true, default_value = "work")]
    work: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load a dataset described by a manifest into the workspace.
    Ingest { manifest: PathBuf },
    /// Generate a seeded synthetic database.
    Synth,
    /// Train the containment model.
    TrainMatch,
    /// Train the node alignment model.
    TrainAlign,
    /// Embed every database graph and lay out the overview.
    Precompute,
    /// Run a query pattern against the database.
    Query {
        /// Pattern file in the native graph format.
        #[arg(long)]
        pattern: PathBuf,
        /// Node removals allowed for approximate matching.
        #[arg(long)]
        steps: Option<usize>,
        /// Print CSV instead of JSON.
        #[arg(long)]
        csv: bool,
        /// Only graphs in this category.
        #[arg(long)]
        category: Option<String>,
    },
    /// Evaluate decision and alignment quality.
    Eval {
        /// Also write the full report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time exact against neural querying by query size.
    Bench {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

fn run(cli: Cli) -> sgmatch::Result<String> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let ws = Workspace::new(&cli.work)?;
    match cli.command {
        Command::Ingest { manifest } => commands::ingest(&manifest, &ws),
        Command::Synth => commands::synth(&cfg, &ws),
        Command::TrainMatch => commands::train_match(&cfg, &ws),
        Command::TrainAlign => commands::train_align(&cfg, &ws),
        Command::Precompute => commands::precompute(&cfg, &ws),
        Command::Query {
            pattern,
            steps,
            csv,
            category,
        } => commands::run_query(
            &ws,
            &QueryArgs {
                pattern: &pattern,
                steps,
                csv,
                category,
            },
        ),
        Command::Eval { out } => commands::eval(&cfg, &ws, out.as_deref()),
        Command::Bench { out } => commands::bench(&cfg, &ws, out.as_deref()),
        Command::Serve { addr } => {
            let engine = ws.load_engine()?;
            let overview = ws.load_overview(engine.database())?;
            let state = Arc::new(AppState::new(engine, overview));
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(server::serve(state, &addr))?;
            Ok(String::new())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    // clap exits with status 2 on usage errors, including unknown subcommands.
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
