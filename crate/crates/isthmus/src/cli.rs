//! Command-line surface. Subcommands compose the library operations over
//! plain-text files; re-running any of them on identical inputs and seed
//! yields byte-identical outputs.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analysis::{self, ArkThresholds};
use crate::detect::{self, RoundTable, SparseVerdict, TargetTally};
use crate::error::{Error, Result};
use crate::io as fio;
use crate::model::{BlockId, Observation, TimeBinning, VantagePoint};
use crate::oracle;
use crate::sim;
use crate::validate;

#[derive(Parser, Debug)]
#[command(
    name = "isthmus",
    about = "Internet core reachability toolkit: peninsula and island detection, synthetic ground truth, and validation analyses",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Runtime configuration; CLI flags override the config file, which
/// overrides the built-in defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub window_s: i64,
    pub epoch: i64,
    pub address_island_eps: f64,
    pub reliable_uptime: f64,
    pub flaky_combos: usize,
    pub long_event_s: i64,
    pub confirmations: usize,
    pub min_event_rounds: i64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            window_s: 660,
            epoch: 0,
            address_island_eps: 0.001,
            reliable_uptime: 0.85,
            flaky_combos: 10,
            long_event_s: 18_000,
            confirmations: 3,
            min_event_rounds: 1,
            seed: 0,
        }
    }
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if self.window_s <= 0 {
            return Err(Error::config("window_s must be positive"));
        }
        if !(0.0..=1.0).contains(&self.address_island_eps) {
            return Err(Error::config("address_island_eps must be in [0,1]"));
        }
        if !(0.0..=1.0).contains(&self.reliable_uptime) {
            return Err(Error::config("reliable_uptime must be in [0,1]"));
        }
        if self.long_event_s < 0 {
            return Err(Error::config("long_event_s must be nonnegative"));
        }
        if self.confirmations == 0 {
            return Err(Error::config("confirmations must be at least 1"));
        }
        if self.min_event_rounds < 0 {
            return Err(Error::config("min_event_rounds must be nonnegative"));
        }
        Ok(())
    }

    fn binning(&self) -> Result<TimeBinning> {
        TimeBinning::new(self.window_s, self.epoch)
    }

    fn ark_thresholds(&self) -> ArkThresholds {
        ArkThresholds {
            reliable_uptime: self.reliable_uptime,
            flaky_combos: self.flaky_combos,
            long_event_s: self.long_event_s,
            confirmations: self.confirmations,
        }
    }

    fn echo(&self) -> String {
        format!(
            "window_s={} epoch={} address_island_eps={} reliable_uptime={} flaky_combos={} long_event_s={} confirmations={} min_event_rounds={} seed={}",
            self.window_s,
            self.epoch,
            self.address_island_eps,
            self.reliable_uptime,
            self.flaky_combos,
            self.long_event_s,
            self.confirmations,
            self.min_event_rounds,
            self.seed
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum ObsFormat {
    /// Tab-separated `time vp block state`.
    Tsv,
    /// Ping results as JSON lines (any answered packet means up).
    AtlasPingJson,
}

/// Shared config-loading flags.
#[derive(Args, Debug, Clone)]
struct ConfigArgs {
    /// Runtime configuration file (JSON); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Round length in seconds.
    #[arg(long)]
    window: Option<i64>,
    /// Round alignment epoch (unix seconds).
    #[arg(long)]
    epoch: Option<i64>,
    /// Seed for anything randomized.
    #[arg(long)]
    seed: Option<u64>,
    /// Observation input format; default guesses from the file extension.
    #[arg(long, value_enum)]
    format: Option<ObsFormat>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                serde_json::from_str(&text)?
            }
            None => RunConfig::default(),
        };
        if let Some(w) = self.window {
            config.window_s = w;
        }
        if let Some(e) = self.epoch {
            config.epoch = e;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a scenario and sample its observation streams.
    Simulate {
        /// Scenario configuration (JSON fixture).
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Observation stream output (TSV).
        #[arg(long)]
        out: PathBuf,
        /// Also synthesize traceroute campaigns (JSON lines).
        #[arg(long)]
        traceroutes: Option<PathBuf>,
        /// Emit the scenario's routed prefixes as a routing table.
        #[arg(long)]
        routing_table: Option<PathBuf>,
        /// Emit observer metadata (vp_id, country, home block).
        #[arg(long)]
        vps: Option<PathBuf>,
    },
    /// Detect peninsulas (disagreement events) in an observation stream.
    DetectPeninsulas {
        obs: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Observer metadata for home-block exclusion in the island pass.
        #[arg(long)]
        vps: Option<PathBuf>,
        /// Skip the island pass that quarantines islanded observers.
        #[arg(long)]
        no_quarantine: bool,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detect islands (observers partitioned from the core).
    DetectIslands {
        obs: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        vps: Option<PathBuf>,
        /// Sparse mode: expected target blocks, one per line; an observer is
        /// islanded when it reaches none of them across the window.
        #[arg(long)]
        sparse_targets: Option<PathBuf>,
        /// Sparse-mode window in seconds.
        #[arg(long, default_value_t = 86_400)]
        sparse_window: i64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detect country-level peninsulas (blocks answering exactly one country).
    DetectCountry {
        obs: PathBuf,
        /// Observer metadata with countries (vp_id, country, home_block).
        #[arg(long)]
        vps: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Side channel for single-observer country matches.
        #[arg(long)]
        singletons: Option<PathBuf>,
    },
    /// Aggregate analyses over streams, events, and traceroutes.
    Analyze {
        #[command(subcommand)]
        what: AnalyzeCommand,
    },
    /// Simulate, detect, and score the detectors against ground truth.
    Validate {
        /// Scenario configuration (JSON fixture).
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also run the sparse-confirmation comparison against this observer
        /// group.
        #[arg(long)]
        ark_group: Option<String>,
        /// Runtime configuration file (JSON) for detector thresholds.
        #[arg(long)]
        run_config: Option<PathBuf>,
    },
    /// Check whether any entity controls a strict majority of an address
    /// space.
    Majority {
        /// Allocation CSV: category,entity,addresses (entity TOTAL = denominator).
        #[arg(long)]
        alloc: PathBuf,
    },
    /// Emit the full set of figure-shaped reports for a stream.
    Report {
        obs: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        vps: Option<PathBuf>,
        /// Routing table for size analyses.
        #[arg(long)]
        routing_table: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum AnalyzeCommand {
    /// Block-time fractions (all up / all down / disagreement).
    Fractions {
        obs: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Only count events of at least this many rounds.
        #[arg(long)]
        min_event_rounds: Option<i64>,
    },
    /// Per-k observer-subset fraction distributions.
    Convergence {
        obs: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Event-count and time-weighted duration CDFs from an event file.
    Durations {
        #[arg(long)]
        events: PathBuf,
    },
    /// Grouped peninsula sizes as prefix-fraction heat-map data.
    Sizes {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        routing_table: PathBuf,
        /// Observation stream defining the measurable block set.
        #[arg(long)]
        obs: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Pairwise site similarity.
    Similarity {
        obs: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Halt-location classification of failed traceroutes.
    Halts {
        #[arg(long)]
        traceroutes: PathBuf,
        #[arg(long)]
        routing_table: PathBuf,
    },
}

fn open_in(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| {
        Error::Data(format!("cannot open {}: {e}", path.display()))
    })?))
}

fn out_writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn load_observations(
    path: &Path,
    format: Option<ObsFormat>,
) -> Result<(Vec<Observation>, fio::IngestReport)> {
    let reader = open_in(path)?;
    let format = format.unwrap_or_else(|| {
        if path
            .extension()
            .is_some_and(|e| e == "json" || e == "jsonl")
        {
            ObsFormat::AtlasPingJson
        } else {
            ObsFormat::Tsv
        }
    });
    match format {
        ObsFormat::AtlasPingJson => fio::read_observations_atlas_json(reader),
        ObsFormat::Tsv => fio::read_observations_tsv(reader),
    }
}

fn report_ingest(what: &str, report: &fio::IngestReport) {
    eprintln!(
        "{what}: read {} kept {} dropped {}",
        report.records_read,
        report.records_kept,
        report.records_dropped()
    );
    for (reason, n) in &report.drop_reasons {
        eprintln!("  dropped {n}: {reason}");
    }
}

fn home_blocks_from(vps: &[VantagePoint]) -> BTreeMap<String, BlockId> {
    vps.iter()
        .filter_map(|v| v.home_block.map(|b| (v.vp_id.clone(), b)))
        .collect()
}

fn load_vps(path: Option<&Path>) -> Result<Vec<VantagePoint>> {
    match path {
        Some(p) => {
            let (vps, report) = fio::read_vp_metadata(open_in(p)?)?;
            report_ingest("vp metadata", &report);
            Ok(vps)
        }
        None => Ok(Vec::new()),
    }
}

/// Entry point used by main; returns the process exit code.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            out,
            traceroutes,
            routing_table,
            vps,
        } => {
            let text = std::fs::read_to_string(&config)?;
            let sc = sim::ScenarioConfig::from_json(&text)?;
            let spec = sim::generate_scenario(&sc, seed)?;
            let stream = sim::sample_stream(&spec, seed)?;
            let mut w = BufWriter::new(File::create(&out)?);
            writeln!(w, "# isthmus simulate scenario={} seed={seed}", spec.name)?;
            stream.write_tsv(&mut w)?;
            w.flush()?;
            eprintln!(
                "wrote {} observations to {}",
                stream.rows.len(),
                out.display()
            );
            if let Some(path) = traceroutes {
                let traces = sim::synthesize_traceroutes(&spec, seed)?;
                let mut w = BufWriter::new(File::create(&path)?);
                sim::write_traceroutes(&traces, &mut w)?;
                w.flush()?;
                eprintln!("wrote {} traceroutes to {}", traces.len(), path.display());
            }
            if let Some(path) = routing_table {
                let entries: Vec<analysis::RoutedPrefix> = spec
                    .prefixes
                    .iter()
                    .map(|e| analysis::RoutedPrefix {
                        prefix: e.prefix,
                        asn: e.asn,
                    })
                    .collect();
                let mut w = BufWriter::new(File::create(&path)?);
                fio::write_routing_table(&entries, &mut w)?;
                w.flush()?;
            }
            if let Some(path) = vps {
                let meta: Vec<VantagePoint> = spec.vps.iter().map(|p| p.vp.clone()).collect();
                let mut w = BufWriter::new(File::create(&path)?);
                fio::write_vp_metadata(&meta, &mut w)?;
                w.flush()?;
            }
            Ok(())
        }

        Command::DetectPeninsulas {
            obs,
            config,
            vps,
            no_quarantine,
            out,
        } => {
            let rc = config.load()?;
            let binning = rc.binning()?;
            let (observations, ingest) = load_observations(&obs, config.format)?;
            report_ingest("observations", &ingest);
            let table = RoundTable::build(&observations, binning)?;
            let events = if no_quarantine {
                detect::taitao_detect(&table, &detect::Quarantine::none())
            } else {
                let homes = home_blocks_from(&load_vps(vps.as_deref())?);
                let report = detect::detect_all(&table, &homes, rc.address_island_eps);
                eprintln!(
                    "quarantined {} observer-rounds; {} duplicate conflicts",
                    report.quarantined_vp_rounds, report.duplicate_conflicts
                );
                report.peninsulas
            };
            let mut w = out_writer(out.as_deref())?;
            fio::report::write_header(&mut w, "peninsula events", &rc.echo())?;
            fio::write_peninsula_events(&events, binning, &mut w)?;
            w.flush()?;
            eprintln!("{} peninsula events", events.len());
            Ok(())
        }

        Command::DetectIslands {
            obs,
            config,
            vps,
            sparse_targets,
            sparse_window,
            out,
        } => {
            let rc = config.load()?;
            let binning = rc.binning()?;
            let (observations, ingest) = load_observations(&obs, config.format)?;
            report_ingest("observations", &ingest);
            let mut w = out_writer(out.as_deref())?;
            match sparse_targets {
                Some(targets_path) => {
                    let expected: Vec<String> = open_in(&targets_path)?
                        .lines()
                        .collect::<std::io::Result<Vec<_>>>()?
                        .into_iter()
                        .map(|l| l.trim().to_string())
                        .filter(|l| !l.is_empty() && !l.starts_with('#'))
                        .collect();
                    fio::report::write_header(&mut w, "sparse island verdicts", &rc.echo())?;
                    writeln!(w, "# vp\twindow_start\tverdict\tprobed\texpected\tunprobed")?;
                    for (vp, window_start, verdict) in
                        sparse_verdicts(&observations, &expected, sparse_window)
                    {
                        match verdict {
                            SparseVerdict::Island {
                                probed,
                                expected,
                                unprobed,
                            } => writeln!(
                                w,
                                "{vp}\t{window_start}\tisland\t{probed}\t{expected}\t{}",
                                unprobed.join(",")
                            )?,
                            SparseVerdict::NotIsland => {
                                writeln!(w, "{vp}\t{window_start}\tnot-island\t-\t-\t-")?
                            }
                            SparseVerdict::Indeterminate => {
                                writeln!(w, "{vp}\t{window_start}\tindeterminate\t-\t-\t-")?
                            }
                        }
                    }
                }
                None => {
                    let table = RoundTable::build(&observations, binning)?;
                    let homes = home_blocks_from(&load_vps(vps.as_deref())?);
                    let outcome = detect::chiloe_detect(&table, &homes, rc.address_island_eps);
                    fio::report::write_header(&mut w, "island events", &rc.echo())?;
                    fio::write_island_events(&outcome.islands, binning, &mut w)?;
                    eprintln!(
                        "{} islands, {} demoted to suspected peninsulas",
                        outcome.islands.len(),
                        outcome.demoted.len()
                    );
                }
            }
            w.flush()?;
            Ok(())
        }

        Command::DetectCountry {
            obs,
            vps,
            config,
            out,
            singletons,
        } => {
            let rc = config.load()?;
            let binning = rc.binning()?;
            let (observations, ingest) = load_observations(&obs, config.format)?;
            report_ingest("observations", &ingest);
            let meta = load_vps(Some(&vps))?;
            let countries: BTreeMap<String, Option<String>> = meta
                .iter()
                .map(|v| (v.vp_id.clone(), v.country.clone()))
                .collect();
            let table = RoundTable::build(&observations, binning)?;
            let homes = home_blocks_from(&meta);
            let detection = detect::detect_all(&table, &homes, rc.address_island_eps);
            let quarantine = detect::Quarantine::from_island_events(&detection.islands, &table.vps);
            let result = detect::country_detect(&table, &countries, &quarantine);
            let mut w = out_writer(out.as_deref())?;
            fio::report::write_header(&mut w, "country peninsula events", &rc.echo())?;
            fio::write_country_events(&result.events, binning, &mut w)?;
            w.flush()?;
            eprintln!(
                "{} country events, {} singleton-observer matches",
                result.events.len(),
                result.singleton_events.len()
            );
            if let Some(path) = singletons {
                let mut w = BufWriter::new(File::create(&path)?);
                fio::report::write_header(&mut w, "singleton country matches", &rc.echo())?;
                fio::write_country_events(&result.singleton_events, binning, &mut w)?;
                w.flush()?;
            }
            Ok(())
        }

        Command::Analyze { what } => run_analyze(what),

        Command::Validate {
            config,
            seed,
            ark_group,
            run_config,
        } => {
            let rc = ConfigArgs {
                config: run_config,
                window: None,
                epoch: None,
                seed: Some(seed),
                format: None,
            }
            .load()?;
            let text = std::fs::read_to_string(&config)?;
            let sc = sim::ScenarioConfig::from_json(&text)?;
            let spec = sim::generate_scenario(&sc, seed)?;
            let run = validate::run_soundness(&spec, seed, rc.address_island_eps)?;
            let s = &run.soundness;
            println!(
                "taitao: recall {:.4} precision {:.4} ({} expected cells, {} detected, {} events)",
                s.taitao_recall,
                s.taitao_precision,
                s.expected_disagreement_cells,
                s.detected_disagreement_cells,
                s.peninsula_events
            );
            println!(
                "chiloe: {} ({} expected observer-rounds, {} detected, {} events)",
                if s.chiloe_exact { "exact" } else { "MISMATCH" },
                s.expected_island_vp_rounds,
                s.detected_island_vp_rounds,
                s.island_events
            );
            println!("soundness: {}", if s.sound() { "PASS" } else { "FAIL" });
            if let Some(group) = ark_group {
                let ark = validate::run_ark_validation(&spec, seed, &group, &rc.ark_thresholds())?;
                println!(
                    "ark comparison: recall {} precision {} strict fp {} loose fp {} ({})",
                    ark.recall.map_or("undefined".into(), |r| format!("{r:.4}")),
                    ark.precision
                        .map_or("undefined".into(), |p| format!("{p:.4}")),
                    ark.comparison.strict.fp,
                    ark.comparison.loose.fp,
                    if ark.strict_loose_delta_matches_rule {
                        "strict-loose delta matches rule"
                    } else {
                        "strict-loose DELTA MISMATCH"
                    }
                );
                for cell in &ark.comparison.table_counts {
                    println!("  {:?} x {:?}: {}", cell.row, cell.column, cell.count);
                }
            }
            if !s.sound() {
                return Err(Error::data("soundness check failed"));
            }
            Ok(())
        }

        Command::Majority { alloc } => {
            let (table, ingest) = fio::read_allocations_csv(open_in(&alloc)?)?;
            report_ingest("allocations", &ingest);
            for (category, (entities, total)) in &table.categories {
                let total = total.unwrap_or_else(|| entities.values().sum());
                let winners = oracle::majority_control(entities, total)?;
                match oracle::max_share(entities, total) {
                    Some((name, share)) if winners.is_empty() => println!(
                        "{category}: no entity exceeds 50% (max {name} at {:.1}%)",
                        share * 100.0
                    ),
                    _ => {
                        for (name, share) in &winners {
                            println!("{category}: {name} controls {:.1}%", share * 100.0);
                        }
                    }
                }
            }
            Ok(())
        }

        Command::Report {
            obs,
            out_dir,
            config,
            vps,
            routing_table,
        } => {
            let rc = config.load()?;
            let binning = rc.binning()?;
            std::fs::create_dir_all(&out_dir)?;
            let (observations, ingest) = load_observations(&obs, config.format)?;
            report_ingest("observations", &ingest);
            let table = RoundTable::build(&observations, binning)?;
            let homes = home_blocks_from(&load_vps(vps.as_deref())?);
            let detection = detect::detect_all(&table, &homes, rc.address_island_eps);
            let echo = rc.echo();

            let f = analysis::blocktime_fractions(&table, rc.min_event_rounds)?;
            fio::report::write_fractions_csv(
                BufWriter::new(File::create(out_dir.join("fractions.csv"))?),
                &f,
                &echo,
            )?;

            let v = table.vps.len();
            if v >= 2 {
                let per_k: Vec<analysis::SubsetConvergence> = (2..=v)
                    .map(|k| analysis::subset_convergence(&table, k))
                    .collect::<Result<_>>()?;
                fio::report::write_convergence_dat(
                    BufWriter::new(File::create(out_dir.join("convergence.dat"))?),
                    &per_k,
                    &echo,
                )?;
                fio::report::write_convergence_points(
                    BufWriter::new(File::create(out_dir.join("convergence_points.dat"))?),
                    &per_k,
                    &echo,
                )?;
            }

            let mut w = BufWriter::new(File::create(out_dir.join("peninsulas.tsv"))?);
            fio::report::write_header(&mut w, "peninsula events", &echo)?;
            fio::write_peninsula_events(&detection.peninsulas, binning, &mut w)?;
            w.flush()?;
            let mut w = BufWriter::new(File::create(out_dir.join("islands.tsv"))?);
            fio::report::write_header(&mut w, "island events", &echo)?;
            fio::write_island_events(&detection.islands, binning, &mut w)?;
            w.flush()?;

            if !detection.peninsulas.is_empty() {
                let durations: Vec<f64> = detection
                    .peninsulas
                    .iter()
                    .map(|e| (e.rounds() * binning.window_s) as f64)
                    .collect();
                let cdfs = analysis::duration_distributions(&durations)?;
                fio::report::write_durations_dat(
                    BufWriter::new(File::create(out_dir.join("durations.dat"))?),
                    &cdfs,
                    &echo,
                )?;
            }
            if !detection.islands.is_empty() {
                let durations: Vec<f64> = detection
                    .islands
                    .iter()
                    .map(|e| (e.rounds() * binning.window_s) as f64)
                    .collect();
                let cdfs = analysis::duration_distributions(&durations)?;
                fio::report::write_durations_dat(
                    BufWriter::new(File::create(out_dir.join("island_durations.dat"))?),
                    &cdfs,
                    &echo,
                )?;
            }

            if v >= 3 {
                let matrix = analysis::similarity_matrix(&table)?;
                fio::report::write_similarity_csv(
                    BufWriter::new(File::create(out_dir.join("similarity.csv"))?),
                    &matrix,
                    &echo,
                )?;
            }

            if let Some(rt_path) = routing_table {
                let (rt, rt_ingest) = fio::read_routing_table(open_in(&rt_path)?)?;
                report_ingest("routing table", &rt_ingest);
                let groups = analysis::group_peninsulas(&detection.peninsulas, binning);
                let measurable: BTreeSet<BlockId> = table.cells.iter().map(|c| c.block).collect();
                let cells = analysis::size_heatmap(&groups, &rt, &measurable)?;
                fio::report::write_sizes_dat(
                    BufWriter::new(File::create(out_dir.join("sizes.dat"))?),
                    &cells,
                    &echo,
                )?;
            }
            eprintln!("reports written to {}", out_dir.display());
            Ok(())
        }
    }
}

fn run_analyze(cmd: AnalyzeCommand) -> Result<()> {
    match cmd {
        AnalyzeCommand::Fractions {
            obs,
            config,
            min_event_rounds,
        } => {
            let rc = config.load()?;
            let min_rounds = min_event_rounds.unwrap_or(rc.min_event_rounds);
            let (observations, ingest) = load_observations(&obs, config.format)?;
            report_ingest("observations", &ingest);
            let table = RoundTable::build(&observations, rc.binning()?)?;
            let f = analysis::blocktime_fractions(&table, min_rounds)?;
            fio::report::write_fractions_csv(std::io::stdout().lock(), &f, &rc.echo())?;
            Ok(())
        }
        AnalyzeCommand::Convergence { obs, config } => {
            let rc = config.load()?;
            let (observations, ingest) = load_observations(&obs, config.format)?;
            report_ingest("observations", &ingest);
            let table = RoundTable::build(&observations, rc.binning()?)?;
            let v = table.vps.len();
            let per_k: Vec<analysis::SubsetConvergence> = (2..=v)
                .map(|k| analysis::subset_convergence(&table, k))
                .collect::<Result<_>>()?;
            fio::report::write_convergence_dat(std::io::stdout().lock(), &per_k, &rc.echo())?;
            Ok(())
        }
        AnalyzeCommand::Durations { events } => {
            let (durations, ingest) = fio::read_event_durations(open_in(&events)?)?;
            report_ingest("events", &ingest);
            let cdfs = analysis::duration_distributions(&durations)?;
            fio::report::write_durations_dat(
                std::io::stdout().lock(),
                &cdfs,
                &format!("events={}", events.display()),
            )?;
            Ok(())
        }
        AnalyzeCommand::Sizes {
            events,
            routing_table,
            obs,
            config,
        } => {
            let rc = config.load()?;
            let binning = rc.binning()?;
            let (evs, ev_ingest) = fio::read_peninsula_events(open_in(&events)?, binning)?;
            report_ingest("events", &ev_ingest);
            let (rt, rt_ingest) = fio::read_routing_table(open_in(&routing_table)?)?;
            report_ingest("routing table", &rt_ingest);
            let (observations, obs_ingest) = load_observations(&obs, config.format)?;
            report_ingest("observations", &obs_ingest);
            let measurable: BTreeSet<BlockId> = observations.iter().map(|o| o.block).collect();
            let groups = analysis::group_peninsulas(&evs, binning);
            let cells = analysis::size_heatmap(&groups, &rt, &measurable)?;
            fio::report::write_sizes_dat(std::io::stdout().lock(), &cells, &rc.echo())?;
            Ok(())
        }
        AnalyzeCommand::Similarity { obs, config } => {
            let rc = config.load()?;
            let (observations, ingest) = load_observations(&obs, config.format)?;
            report_ingest("observations", &ingest);
            let table = RoundTable::build(&observations, rc.binning()?)?;
            let matrix = analysis::similarity_matrix(&table)?;
            fio::report::write_similarity_csv(std::io::stdout().lock(), &matrix, &rc.echo())?;
            Ok(())
        }
        AnalyzeCommand::Halts {
            traceroutes,
            routing_table,
        } => {
            let text = std::fs::read_to_string(&traceroutes)?;
            let traces = sim::read_traceroutes(&text)?;
            let (rt, rt_ingest) = fio::read_routing_table(open_in(&routing_table)?)?;
            report_ingest("routing table", &rt_ingest);
            let summary = analysis::classify_halts(&traces, &rt)?;
            let mut w = std::io::stdout().lock();
            fio::report::write_header(&mut w, "halt classification", "")?;
            writeln!(w, "metric,count")?;
            writeln!(w, "at_target_as,{}", summary.at_as)?;
            writeln!(w, "before_target_as,{}", summary.before_as)?;
            writeln!(w, "at_target_prefix,{}", summary.at_prefix)?;
            writeln!(w, "before_target_prefix,{}", summary.before_prefix)?;
            writeln!(w, "unmapped_last_hop,{}", summary.unmapped)?;
            writeln!(w, "discarded_gaps,{}", summary.discarded_gaps)?;
            writeln!(w, "successes,{}", summary.successes)?;
            writeln!(w, "unrouted_targets,{}", summary.unrouted_targets)?;
            Ok(())
        }
    }
}

/// Group sparse observations per (observer, window) and apply the sparse
/// island rule. Targets are identified by block text.
fn sparse_verdicts(
    observations: &[Observation],
    expected_targets: &[String],
    window_s: i64,
) -> Vec<(String, i64, SparseVerdict)> {
    let mut tallies: BTreeMap<(String, i64), BTreeMap<String, TargetTally>> = BTreeMap::new();
    for o in observations {
        let window_start = o.time.div_euclid(window_s) * window_s;
        let slot = tallies.entry((o.vp.clone(), window_start)).or_default();
        let t = slot.entry(o.block.to_string()).or_default();
        match o.state {
            crate::model::ObservationState::Up => {
                t.probes += 1;
                t.successes += 1;
            }
            crate::model::ObservationState::Down => t.probes += 1,
            crate::model::ObservationState::Unmeasured => {}
        }
    }
    tallies
        .into_iter()
        .map(|((vp, window_start), result)| {
            let verdict = detect::chiloe_sparse(&result, expected_targets);
            (vp, window_start, verdict)
        })
        .collect()
}
