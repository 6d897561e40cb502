//! Acceptance suite: one test per criterion, each printing a pass line.
//! Run with `cargo test -p isthmus --test acceptance -- --nocapture`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::time::Instant;

use once_cell::sync::Lazy;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use isthmus::analysis::{
    self, confusion_metrics, duration_distributions, group_peninsulas, lpm, lpm_linear_scan,
    peninsula_prefix_fraction, subset_convergence, ArkThresholds, ConfusionCounts, RoutedPrefix,
    RoutingTable,
};
use isthmus::detect::RoundTable;
use isthmus::io as fio;
use isthmus::model::{BlockId, Observation, ObservationState, Prefix, TimeBinning};
use isthmus::oracle::{self, Node, ReachabilityGraph};
use isthmus::sim::{
    self, generate_scenario, BlockRange, EdgesConfig, InjectionKind, InjectionSpec, NodesConfig,
    ProbingAssignment, ProbingConfig, ProbingModel, ScenarioConfig, SeveredFrom, SimSpec,
    VictimSelector, VpConfig, VpGroupConfig,
};
use isthmus::validate::{run_ark_validation, run_soundness, ValidationRun};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn pass(n: u32, what: &str) {
    println!("[PASS] criterion {n}: {what}");
}

// ---------------------------------------------------------------- criterion 1

#[test]
fn criterion_01_published_confusion_metrics() {
    let strict = confusion_metrics(&ConfusionCounts::new(184, 251, 12, 0));
    assert!((strict.precision.unwrap() - 0.42).abs() <= 0.005);
    assert!((strict.recall.unwrap() - 0.94).abs() <= 0.005);
    assert!((strict.f1.unwrap() - 0.58).abs() <= 0.005);

    let loose = confusion_metrics(&ConfusionCounts::new(184, 40, 12, 0));
    assert!((loose.precision.unwrap() - 0.82).abs() <= 0.005);
    assert!((loose.f1.unwrap() - 0.88).abs() <= 0.005);
    pass(
        1,
        "published confusion metrics reproduced (strict 0.42/0.94/0.58, loose 0.82/0.88)",
    );
}

// ---------------------------------------------------------------- criterion 2

/// Independent check: disjoint-set union over the same edge list.
struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
        }
    }
    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

#[test]
fn criterion_02_majority_uniqueness_over_random_graphs() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_2017);
    for trial in 0..1000u32 {
        let n: u32 = if trial.is_multiple_of(10) {
            rng.gen_range(2000..=10_000)
        } else {
            rng.gen_range(1..=1500)
        };
        let mut nodes: Vec<Node> = (0..n)
            .map(|i| Node {
                block: BlockId::new(i).unwrap(),
                active: true,
                asn: None,
                prefix: None,
            })
            .collect();
        for node in nodes.iter_mut() {
            node.active = rng.gen_bool(0.9);
        }
        let active: Vec<bool> = nodes.iter().map(|nd| nd.active).collect();
        let mut edges = Vec::new();
        for _ in 0..rng.gen_range(0..2 * n) {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a != b {
                edges.push((BlockId::new(a).unwrap(), BlockId::new(b).unwrap()));
            }
        }
        let g = ReachabilityGraph::explicit(nodes, &edges).unwrap();

        // brute force: union-find over active-active edges, then a size scan
        let mut dsu = Dsu::new(n as usize);
        for (a, b) in &edges {
            let (ia, ib) = (a.prefix24() as usize, b.prefix24() as usize);
            if active[ia] && active[ib] {
                dsu.union(ia, ib);
            }
        }
        let mut sizes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let total_active = active.iter().filter(|a| **a).count();
        for (i, is_active) in active.iter().enumerate() {
            if *is_active {
                let root = dsu.find(i);
                sizes.entry(root).or_default().push(i);
            }
        }
        let majorities: Vec<&Vec<usize>> = sizes
            .values()
            .filter(|c| 2 * c.len() > total_active)
            .collect();
        assert!(
            majorities.len() <= 1,
            "two majority components cannot coexist"
        );

        let core = oracle::internet_core(&g);
        match (core, majorities.first()) {
            (None, None) => {}
            (Some(core), Some(brute)) => {
                let mut brute_sorted: Vec<usize> = (*brute).clone();
                brute_sorted.sort_unstable();
                assert_eq!(core, brute_sorted, "trial {trial}");
            }
            (a, b) => panic!("trial {trial}: core {a:?} vs brute-force {}", b.is_some()),
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 30, "took {elapsed:?}");
    pass(
        2,
        &format!("majority uniqueness on 1000 random graphs in {elapsed:.0?}"),
    );
}

// ------------------------------------------------------- criteria 3, 4, 10

const SOUND_BLOCKS: u32 = 10_000;

fn soundness_config() -> ScenarioConfig {
    let vp_ids = ["W", "C", "J", "G", "E", "N"];
    let lossless = ProbingModel::lossless(660);
    let mut deltas = Vec::new();

    // 50 peninsulas with observers on both sides, >=2 windows, bin-aligned
    for k in 0..50u32 {
        let severed: Vec<String> = match k % 5 {
            0 => vec!["C"],
            1 => vec!["C", "J"],
            2 => vec!["J", "G", "E"],
            3 => vec!["C", "J", "G", "E"],
            _ => vec!["C", "J", "G", "E", "N"],
        }
        .into_iter()
        .map(String::from)
        .collect();
        let start_round = 10 + (k as i64 % 10) * 6;
        let rounds = 2 + (k as i64 % 3);
        deltas.push(InjectionSpec {
            kind: InjectionKind::Peninsula,
            victims: VictimSelector {
                blocks: vec![BlockId::new(0x0a0000 + 100 + k).unwrap()],
                ranges: vec![],
                vps: vec![],
            },
            severed_from: SeveredFrom {
                vps: severed,
                groups: vec![],
            },
            country: None,
            start: start_round * 660,
            duration_s: rounds * 660,
            breakpoint: None,
        });
    }
    // 5 islands, each on a scanner's own node, disjoint in time
    for (j, vp) in ["W", "C", "J", "G", "E"].iter().enumerate() {
        deltas.push(InjectionSpec {
            kind: InjectionKind::Island,
            victims: VictimSelector {
                blocks: vec![],
                ranges: vec![],
                vps: vec![vp.to_string()],
            },
            severed_from: SeveredFrom::default(),
            country: None,
            start: (80 + j as i64 * 8) * 660,
            duration_s: (2 + j as i64 % 2) * 660,
            breakpoint: None,
        });
    }
    // 10 outages: nine on plain blocks, one on scanner N's node
    for j in 0..10u32 {
        let victims = if j == 9 {
            VictimSelector {
                blocks: vec![],
                ranges: vec![],
                vps: vec!["N".to_string()],
            }
        } else {
            VictimSelector {
                blocks: vec![BlockId::new(0x0a0000 + 200 + j).unwrap()],
                ranges: vec![],
                vps: vec![],
            }
        };
        deltas.push(InjectionSpec {
            kind: InjectionKind::Outage,
            victims,
            severed_from: SeveredFrom::default(),
            country: None,
            start: (130 + j as i64 * 5) * 660,
            duration_s: (2 + j as i64 % 3) * 660,
            breakpoint: None,
        });
    }

    ScenarioConfig {
        name: "soundness".into(),
        binning: None,
        start: 0,
        horizon_s: 190 * 660,
        nodes: NodesConfig {
            blocks: vec![],
            ranges: vec![BlockRange {
                first: BlockId::new(0x0a0000).unwrap(),
                count: SOUND_BLOCKS,
            }],
            inactive: vec![],
        },
        edges: EdgesConfig::Mesh(true),
        prefixes: vec![],
        vps: vp_ids
            .iter()
            .enumerate()
            .map(|(i, id)| VpConfig {
                vp_id: id.to_string(),
                country: None,
                block: Some(BlockId::new(0x0a0000 + i as u32).unwrap()),
                probing: Some(ProbingAssignment::Model(lossless)),
            })
            .collect(),
        vp_groups: vec![],
        probing: ProbingConfig::default(),
        deltas,
        traceroutes: vec![],
    }
}

static SOUNDNESS: Lazy<(SimSpec, ValidationRun)> = Lazy::new(|| {
    let spec = generate_scenario(&soundness_config(), 3).expect("scenario compiles");
    let run = run_soundness(&spec, 3, 0.001).expect("pipeline runs");
    (spec, run)
});

#[test]
fn criterion_03_end_to_end_soundness() {
    let started = Instant::now();
    let (spec, run) = &*SOUNDNESS;
    let s = &run.soundness;
    assert_eq!(s.taitao_recall, 1.0, "taitao recall: {s:?}");
    assert_eq!(s.taitao_precision, 1.0, "taitao precision: {s:?}");
    assert!(
        s.chiloe_exact,
        "chiloe must flag exactly the injected islands: {s:?}"
    );

    // every injected peninsula is recovered as one event with exact rounds
    let binning = spec.binning;
    let mut by_block: BTreeMap<BlockId, Vec<&isthmus::detect::PeninsulaEvent>> = BTreeMap::new();
    for ev in &run.detection.peninsulas {
        by_block.entry(ev.block).or_default().push(ev);
    }
    let mut peninsula_injections = 0;
    for inj in spec
        .injections
        .iter()
        .filter(|i| i.kind == InjectionKind::Peninsula)
    {
        peninsula_injections += 1;
        let victim = inj.victims[0];
        let events = &by_block[&victim];
        assert_eq!(
            events.len(),
            1,
            "one event per injected peninsula on {victim}"
        );
        let ev = events[0];
        assert_eq!(binning.round_start(ev.start_round), inj.start);
        assert_eq!(binning.round_start(ev.end_round + 1), inj.end);
        let severed: BTreeSet<String> = spec
            .vps
            .iter()
            .filter(|p| inj.severed_homes.contains(&p.home()))
            .map(|p| p.vp.vp_id.clone())
            .collect();
        let expected_up: BTreeSet<String> = spec
            .vps
            .iter()
            .map(|p| p.vp.vp_id.clone())
            .filter(|id| !severed.contains(id))
            .collect();
        assert_eq!(ev.up_set, expected_up);
    }
    assert_eq!(peninsula_injections, 50);
    assert_eq!(
        by_block.len(),
        50,
        "no peninsula events outside the injected blocks"
    );

    // exactly the five injected scanner islands, all address islands; the
    // scanner outage produced no island
    assert_eq!(run.detection.islands.len(), 5);
    let islanded: BTreeSet<&str> = run
        .detection
        .islands
        .iter()
        .map(|e| e.vp.as_str())
        .collect();
    assert_eq!(islanded, ["W", "C", "J", "G", "E"].into_iter().collect());
    assert!(run.detection.islands.iter().all(|e| e.address_island));
    assert!(run.detection.demoted_islands.is_empty());

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    pass(
        3,
        &format!(
            "taitao recall/precision 1.0 over {} cells, chiloe exact (5 islands, 10 outages) in {elapsed:.0?}",
            s.expected_disagreement_cells
        ),
    );
}

#[test]
fn criterion_04_subset_monotonicity() {
    // on the soundness scenario
    let (_, run) = &*SOUNDNESS;
    assert_monotone(&run.table, "soundness scenario");

    // and on 100 random full-coverage observation sets
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let vps = ["A", "B", "C", "D", "E", "F"];
    for set in 0..100 {
        let mut obs = Vec::new();
        for block in 0..12u32 {
            for round in 0..20i64 {
                for vp in vps {
                    obs.push(Observation {
                        time: round * 660,
                        vp: vp.to_string(),
                        block: BlockId::new(block).unwrap(),
                        state: if rng.gen_bool(0.85) {
                            ObservationState::Up
                        } else {
                            ObservationState::Down
                        },
                    });
                }
            }
        }
        let table = RoundTable::build(&obs, TimeBinning::default()).unwrap();
        assert_monotone(&table, &format!("random set {set}"));
    }
    pass(
        4,
        "mean disagreement nondecreasing, mean all-up nonincreasing for k=2..V on 101 datasets",
    );
}

fn assert_monotone(table: &RoundTable, what: &str) {
    let v = table.vps.len();
    let mut last_dis = -1.0f64;
    let mut last_up = f64::MAX;
    let mut last_down = f64::MAX;
    for k in 2..=v {
        let conv = subset_convergence(table, k).unwrap();
        let dis = conv.mean(|f| f.disagreement);
        let up = conv.mean(|f| f.all_up);
        let down = conv.mean(|f| f.all_down);
        assert!(
            dis >= last_dis - 1e-12,
            "{what}: disagreement fell at k={k}"
        );
        assert!(up <= last_up + 1e-12, "{what}: all-up rose at k={k}");
        assert!(down <= last_down + 1e-12, "{what}: all-down rose at k={k}");
        last_dis = dis;
        last_up = up;
        last_down = down;
    }
}

// ---------------------------------------------------------------- criterion 5

fn ark_scenario_config() -> ScenarioConfig {
    let vp_ids = ["W", "C", "J", "G", "E", "N"];
    let lossless = ProbingModel::lossless(660);
    let mut deltas = Vec::new();
    // 28 long peninsulas (>= 5h), bin-aligned, with a mix of up-set sizes;
    // half of them also sever half the sparse observer group
    for k in 0..28u32 {
        let severed: Vec<String> = match k % 5 {
            0 => vec!["C".to_string()], // sites-up = 5 row
            1 => vec!["C".into(), "J".into()],
            2 => vec!["J".into(), "G".into(), "E".into()],
            3 => vec!["C".into(), "J".into(), "G".into(), "E".into()],
            _ => vec!["C".into(), "J".into(), "G".into(), "E".into(), "N".into()],
        };
        let mut severed_from = SeveredFrom {
            vps: severed,
            groups: vec![],
        };
        if k % 2 == 0 {
            severed_from
                .vps
                .extend((0..20).map(|i| format!("ark-{i:03}")));
        }
        let duration_rounds = [33i64, 44, 66, 99, 131][k as usize % 5];
        deltas.push(InjectionSpec {
            kind: InjectionKind::Peninsula,
            victims: VictimSelector {
                blocks: vec![BlockId::new(0x0a0000 + 60 + k).unwrap()],
                ranges: vec![],
                vps: vec![],
            },
            severed_from,
            country: None,
            start: (30 + k as i64 * 90) * 660,
            duration_s: duration_rounds * 660,
            breakpoint: None,
        });
    }
    // 4 long outages
    for j in 0..4u32 {
        deltas.push(InjectionSpec {
            kind: InjectionKind::Outage,
            victims: VictimSelector {
                blocks: vec![BlockId::new(0x0a0000 + 150 + j).unwrap()],
                ranges: vec![],
                vps: vec![],
            },
            severed_from: SeveredFrom::default(),
            country: None,
            start: (40 + j as i64 * 200) * 660,
            duration_s: 40 * 660,
            breakpoint: None,
        });
    }
    ScenarioConfig {
        name: "ark-validation".into(),
        binning: None,
        start: 0,
        horizon_s: 21 * 86_400,
        nodes: NodesConfig {
            blocks: vec![],
            ranges: vec![BlockRange {
                first: BlockId::new(0x0a0000).unwrap(),
                count: 250,
            }],
            inactive: vec![],
        },
        edges: EdgesConfig::Mesh(true),
        prefixes: vec![],
        vps: vp_ids
            .iter()
            .enumerate()
            .map(|(i, id)| VpConfig {
                vp_id: id.to_string(),
                country: None,
                block: Some(BlockId::new(0x0a0000 + i as u32).unwrap()),
                probing: Some(ProbingAssignment::Model(lossless)),
            })
            .collect(),
        vp_groups: vec![VpGroupConfig {
            name: "ark".into(),
            count: 40,
            country: None,
            first_block: BlockId::new(0x0a0000 + 6).unwrap(),
            probing: Some(ProbingAssignment::Model(ProbingModel::ark())),
        }],
        probing: ProbingConfig::default(),
        deltas,
        traceroutes: vec![],
    }
}

static ARK: Lazy<(SimSpec, isthmus::validate::ArkValidation)> = Lazy::new(|| {
    let spec = generate_scenario(&ark_scenario_config(), 5).expect("scenario compiles");
    let run =
        run_ark_validation(&spec, 5, "ark", &ArkThresholds::default()).expect("pipeline runs");
    (spec, run)
});

#[test]
fn criterion_05_degraded_sampling_validation() {
    let started = Instant::now();
    let (_, ark) = &*ARK;
    let recall = ark.recall.expect("comparison produced positives");
    assert!(
        recall >= 0.9,
        "recall {recall} (strict {:?}, table {:?})",
        ark.comparison.strict,
        ark.comparison.table_counts
    );
    assert!(
        ark.comparison.strict.tp >= 20,
        "enough confirmed events: {:?}",
        ark.comparison
    );
    assert!(
        ark.strict_loose_delta_matches_rule,
        "strict minus loose must equal the sites-up = V-1 all-up cell"
    );
    let elapsed = started.elapsed();
    pass(
        5,
        &format!(
            "ark-style confirmation recall {recall:.3} (tp {}, fn {}), strict/loose delta = V-1 row, in {elapsed:.0?}",
            ark.comparison.strict.tp, ark.comparison.strict.fn_
        ),
    );
}

// ---------------------------------------------------------------- criterion 6

#[test]
fn criterion_06_duration_mass() {
    let file = std::fs::File::open(fixture("heavy_tail_events.tsv")).unwrap();
    let (durations, report) = fio::read_event_durations(std::io::BufReader::new(file)).unwrap();
    assert_eq!(report.records_dropped(), 0);
    assert_eq!(durations.len(), 1000);
    let long = durations.iter().filter(|d| **d >= 18_000.0).count() as f64;
    assert!(
        (long / 1000.0 - 0.07).abs() < 1e-12,
        "7% of events are >= 5h"
    );

    let cdfs = duration_distributions(&durations).unwrap();
    let count_at_5h = cdfs.count_at(18_000.0);
    let time_at_5h = cdfs.time_at(18_000.0);
    assert!(count_at_5h >= 0.90, "count CDF at 5h: {count_at_5h}");
    assert!(time_at_5h <= 0.10, "time-weighted CDF at 5h: {time_at_5h}");
    pass(
        6,
        &format!("heavy-tail fixture: count CDF(5h) = {count_at_5h:.3}, time-weighted CDF(5h) = {time_at_5h:.4}"),
    );
}

// ---------------------------------------------------------------- criterion 7

#[test]
fn criterion_07_lpm_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut table = RoutingTable::new();
    while table.len() < 120_000 {
        let length = rng.gen_range(8..=28u8);
        let base = (rng.gen::<u32>() >> (32 - length)) << (32 - length);
        table.insert(RoutedPrefix {
            prefix: Prefix::new(base, length).unwrap(),
            asn: rng.gen_range(1..65000),
        });
    }
    let entries = table.entries().to_vec();
    for _ in 0..10_000 {
        let block = BlockId::new(rng.gen_range(0..1 << 24)).unwrap();
        assert_eq!(
            lpm(&table, block),
            lpm_linear_scan(&entries, block.base_addr())
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 10, "took {elapsed:?}");
    pass(
        7,
        &format!(
            "10k lookups over a {}-entry table match the linear scan in {elapsed:.0?}",
            table.len()
        ),
    );
}

// ---------------------------------------------------------------- criterion 8

#[test]
fn criterion_08_secession_check() {
    let file = std::fs::File::open(fixture("rir_allocation.csv")).unwrap();
    let (alloc, report) = fio::read_allocations_csv(std::io::BufReader::new(file)).unwrap();
    assert_eq!(report.records_dropped(), 0);

    let expect_max = [
        ("active_ipv4", 0.33),
        ("allocated_ipv4", 0.452),
        ("allocated_ipv6", 0.467),
    ];
    for (category, published) in expect_max {
        let (entities, total) = &alloc.categories[category];
        let total = total.expect("fixture carries totals");
        let winners = oracle::majority_control(entities, total).unwrap();
        assert!(
            winners.is_empty(),
            "{category}: no unilateral control expected"
        );
        let (name, share) = oracle::max_share(entities, total).unwrap();
        assert!(
            (share - published).abs() <= 0.005,
            "{category}: max {name} at {share} vs published {published}"
        );
    }
    pass(
        8,
        "no RIR or country controls a majority; maxima match the published shares within 0.5%",
    );
}

// ---------------------------------------------------------------- criterion 9

#[test]
fn criterion_09_appendix_fixtures() {
    // Polish peninsula: 1716 blocks, 5 of 6 observers severed, 3 hours
    let text = std::fs::read_to_string(fixture("polish_peninsula.json")).unwrap();
    let config = ScenarioConfig::from_json(&text).unwrap();
    let spec = generate_scenario(&config, 42).unwrap();
    let run = run_soundness(&spec, 42, 0.001).unwrap();
    assert!(run.soundness.sound(), "{:?}", run.soundness);

    let events = &run.detection.peninsulas;
    assert_eq!(events.len(), 1716, "one event per severed block");
    let groups = group_peninsulas(events, spec.binning);
    assert_eq!(groups.len(), 1, "all blocks group into a single event");
    let group = &groups[0];
    assert_eq!(group.members.len(), 1716);
    assert_eq!(group.key.up_set, ["W".to_string()].into());
    let duration_s = group.members[0].1;
    assert!(
        (duration_s - 10_800).abs() <= 660,
        "3h within one round: {duration_s}"
    );

    let table = RoutingTable::from_entries(spec.prefixes.iter().map(|e| RoutedPrefix {
        prefix: e.prefix,
        asn: e.asn,
    }));
    let measurable: BTreeSet<BlockId> = run.table.cells.iter().map(|c| c.block).collect();
    let entry = lpm(&table, group.members[0].0).unwrap();
    assert_eq!(entry.asn, 21021);
    let fraction = peninsula_prefix_fraction(group, entry, &measurable).unwrap();
    assert_eq!(fraction, 1.0, "the whole routable prefix participates");

    // per-k trends hold on this fixture too (all-down nonincreasing)
    assert_monotone(&run.table, "polish fixture");

    // halt classification on the synthesized campaign: 21 at / 68 before
    let traces = sim::synthesize_traceroutes(&spec, 42).unwrap();
    assert_eq!(traces.len(), 94);
    let summary = analysis::classify_halts(&traces, &table).unwrap();
    assert!(
        (summary.at_as as i64 - 21).abs() <= 2,
        "at-AS: {}",
        summary.at_as
    );
    assert!(
        (summary.before_as as i64 - 68).abs() <= 2,
        "before-AS: {}",
        summary.before_as
    );
    assert_eq!(summary.discarded_gaps, 5);
    assert!(
        summary.at_prefix == 0,
        "halts never reach the victim prefix"
    );

    // site-E island: one island event with address-island behavior
    let text = std::fs::read_to_string(fixture("siteE_island.json")).unwrap();
    let config = ScenarioConfig::from_json(&text).unwrap();
    let spec = generate_scenario(&config, 42).unwrap();
    let run = run_soundness(&spec, 42, 0.001).unwrap();
    assert!(run.soundness.sound(), "{:?}", run.soundness);
    assert_eq!(run.detection.islands.len(), 1);
    let island = &run.detection.islands[0];
    assert_eq!(island.vp, "E");
    assert!(island.address_island);
    assert_eq!(island.min_reachable_fraction, 0.0);
    assert_eq!(island.rounds() * 660, 4620);

    pass(9, "polish peninsula (1716 blocks, up-set {W}, 3h, prefix fraction 1.0; 21/68 halt split) and site-E island reproduced");
}

// --------------------------------------------------------------- criterion 10

fn event_files(spec: &SimSpec, seed: u64) -> (Vec<u8>, Vec<u8>) {
    let run = run_soundness(spec, seed, 0.001).unwrap();
    let mut peninsulas = Vec::new();
    fio::write_peninsula_events(&run.detection.peninsulas, spec.binning, &mut peninsulas).unwrap();
    let mut islands = Vec::new();
    fio::write_island_events(&run.detection.islands, spec.binning, &mut islands).unwrap();
    (peninsulas, islands)
}

#[test]
fn criterion_10_determinism() {
    // criterion 3's scenario: the cached run vs a fresh one
    let (spec, first) = &*SOUNDNESS;
    let mut first_peninsulas = Vec::new();
    fio::write_peninsula_events(
        &first.detection.peninsulas,
        spec.binning,
        &mut first_peninsulas,
    )
    .unwrap();
    let mut first_islands = Vec::new();
    fio::write_island_events(&first.detection.islands, spec.binning, &mut first_islands).unwrap();
    let (again_peninsulas, again_islands) = event_files(spec, 3);
    assert_eq!(
        first_peninsulas, again_peninsulas,
        "peninsula event files differ across runs"
    );
    assert_eq!(
        first_islands, again_islands,
        "island event files differ across runs"
    );
    assert!(!first_peninsulas.is_empty());

    // criterion 5's scenario: the sparse comparison repeats exactly
    let (ark_spec, first_ark) = &*ARK;
    let again = run_ark_validation(ark_spec, 5, "ark", &ArkThresholds::default()).unwrap();
    assert_eq!(
        serde_json::to_vec(&first_ark.comparison).unwrap(),
        serde_json::to_vec(&again.comparison).unwrap(),
        "ark comparison differs across runs"
    );
    pass(
        10,
        "criteria 3 and 5 reproduce byte-identical event files under the same seeds",
    );
}
