use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use cxgvar_core::classifier::{csv_field, evaluate, make_split, Dataset, LinearModel, SplitSpec, SvmConfig};
use cxgvar_core::corpus::{
    build_samples, ingest, manifest_to_jsonl, parse_manifest, tokenize, KeywordSet, LocationLabels, SkipCounts,
};
use cxgvar_core::embeddings::{CategoryInventory, EmbeddingTable, Embeddings, Space};
use cxgvar_core::experiments::{
    error_similarity, node_scan, run_granularity, similarity_correlation, unmask, CorrelationSummary, Granularity,
    NodeCorrelation, NodeKind, NodeScan, SimilarityVector, UnmaskingCurve,
};
use cxgvar_core::geo::{
    cluster_airports, parse_airports, Airport, AirportIndex, AreaAssignment, ClusterExtraction, HdbscanParams, LatLon,
    RegionTable,
};
use cxgvar_core::grammar::{Grammar, Stage};
use cxgvar_core::hashing::sha256_hex;
use cxgvar_core::matcher::{build_matrix, FeatureMatrix, Matcher};
use cxgvar_core::synthetic::text::{write_text_fixture, TextSpec};
use serde::{Deserialize, Serialize};

use crate::config::{Overrides, RunConfig};
use crate::plot::{self, QuantileRow, ScatterPoint};
use crate::rundir::{self, slug, RunDir, RunMeta};
use crate::{Cli, CliError, Command};

type Result<T> = std::result::Result<T, CliError>;

pub const PIPELINE: [Command; 9] = [
    Command::Areas,
    Command::Sample,
    Command::Features,
    Command::Train,
    Command::Evaluate,
    Command::NodeScan,
    Command::Unmask,
    Command::ErrorCorr,
    Command::Report,
];

fn step_name(c: &Command) -> &'static str {
    match c {
        Command::Areas => "areas",
        Command::Sample => "sample",
        Command::Features => "features",
        Command::Train => "train",
        Command::Evaluate => "evaluate",
        Command::NodeScan => "node-scan",
        Command::Unmask => "unmask",
        Command::ErrorCorr => "error-corr",
        Command::Report => "report",
        Command::All => "all",
        Command::Synth { .. } => "synth",
    }
}

/// Run the selected subcommand, passing each step's summary line to `emit`
/// as soon as the step finishes.
pub fn execute(cli: &Cli, emit: &mut dyn FnMut(&str)) -> Result<()> {
    if let Command::Synth { out } = &cli.command {
        emit(&synth(out, cli.seed.unwrap_or(TextSpec::default().seed))?);
        return Ok(());
    }
    let mut config = RunConfig::load(&cli.config)?;
    config.apply(&Overrides {
        seed: cli.seed,
        stage: cli.stage,
        granularity: cli.granularity,
    });
    config.validate()?;
    let ctx = Ctx {
        config,
        run: RunDir::new(&cli.run_dir),
    };
    std::fs::create_dir_all(ctx.run.root())?;
    let steps: Vec<Command> = match &cli.command {
        Command::All => PIPELINE.to_vec(),
        other => vec![other.clone()],
    };
    for step in steps {
        let pooled_only = matches!(step, Command::NodeScan | Command::Unmask | Command::ErrorCorr);
        if cli.command == Command::All && pooled_only && ctx.config.experiments.granularity == Granularity::Local {
            emit(&format!("{}: skipped for local granularity", step_name(&step)));
            continue;
        }
        let line = ctx.step(&step)?;
        let mut meta = RunMeta::load_or_default(&ctx.run);
        meta.record(step_name(&step), &ctx.config.hash(), &line);
        meta.seeds.classifier = ctx.config.seed;
        ctx.run.write_json(rundir::META, &meta)?;
        emit(&line);
    }
    Ok(())
}

struct Ctx {
    config: RunConfig,
    run: RunDir,
}

/// A trained model as persisted by `train`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SavedModel {
    pub name: String,
    pub granularity: Granularity,
    pub stage: Option<Stage>,
    /// Set for local models: the region whose areas the model separates.
    pub region: Option<String>,
    pub model: LinearModel<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfusionFile {
    pub classes: Vec<String>,
    /// Rows are true classes, columns predictions.
    pub confusion: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AreaSampling {
    pub documents: usize,
    pub samples: usize,
    pub no_keyword: usize,
    pub dropped_incomplete: usize,
    pub mean_tokens: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SamplingReport {
    pub ingested: usize,
    pub skipped: SkipCounts,
    pub unassigned: usize,
    pub duplicates: usize,
    pub areas: BTreeMap<String, AreaSampling>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationFile {
    pub reference: SimilarityVector<f64>,
    pub nodes: Vec<NodeCorrelation<f64>>,
    pub summary: Vec<CorrelationSummary<f64>>,
}

fn stage_name(stage: Option<Stage>) -> &'static str {
    match stage {
        None => "all",
        Some(Stage::Early) => "early",
        Some(Stage::Late) => "late",
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x:.6}")
}

impl Ctx {
    fn step(&self, c: &Command) -> Result<String> {
        match c {
            Command::Areas => self.areas(),
            Command::Sample => self.sample(),
            Command::Features => self.features(),
            Command::Train => self.train(),
            Command::Evaluate => self.evaluate(),
            Command::NodeScan => self.node_scan(),
            Command::Unmask => self.unmask(),
            Command::ErrorCorr => self.error_corr(),
            Command::Report => self.report(),
            Command::All | Command::Synth { .. } => unreachable!("handled by execute"),
        }
    }

    fn tag(&self) -> String {
        format!(
            "{}-{}",
            self.config.experiments.granularity,
            stage_name(self.config.experiments.stage)
        )
    }

    fn regions(&self) -> RegionTable {
        RegionTable::default().with_overrides(&self.config.regions)
    }

    fn svm(&self) -> SvmConfig {
        SvmConfig {
            c: self.config.classifier.c,
            epochs: self.config.classifier.epochs,
            seed: self.config.seed,
        }
    }

    fn input(&self, p: &Path) -> std::path::PathBuf {
        self.config.resolve(p)
    }

    fn embeddings(&self) -> Result<Embeddings<f64>> {
        let e = &self.config.embeddings;
        let syn = EmbeddingTable::load(self.input(&e.syn), Space::Syn)?;
        let sem = EmbeddingTable::load(self.input(&e.sem), Space::Sem)?;
        let cats = CategoryInventory::load(self.input(&e.categories), e.threshold)?;
        Ok(Embeddings::new(syn, sem, cats)?)
    }

    fn grammar(&self, embeddings: &Embeddings<f64>) -> Result<Grammar> {
        Ok(Grammar::load(
            self.input(&self.config.grammar_model.grammar),
            &embeddings.categories,
        )?)
    }

    /// The configured stage's constructions.
    fn staged(&self, grammar: &Grammar) -> Result<Grammar> {
        match self.config.experiments.stage {
            None => Ok(grammar.clone()),
            Some(stage) => {
                let g = grammar.filter_by_stage(stage);
                if g.is_empty() {
                    return Err(CliError::Run(format!(
                        "the grammar has no {} constructions",
                        stage_name(Some(stage))
                    )));
                }
                Ok(g)
            }
        }
    }

    fn matrix(&self) -> Result<FeatureMatrix<f64>> {
        let p = self.run.require(rundir::MATRIX, "features")?;
        FeatureMatrix::load(&p).map_err(|e| CliError::Stale {
            artifact: rundir::MATRIX.into(),
            reason: e.to_string(),
            step: "features",
        })
    }

    fn split(&self, m: &FeatureMatrix<f64>) -> Result<SplitSpec> {
        let split: SplitSpec = self.run.read_json(rundir::SPLIT, "features")?;
        if split.train.len() + split.test.len() != m.rows() {
            return Err(CliError::Stale {
                artifact: rundir::SPLIT.into(),
                reason: format!(
                    "covers {} samples, matrix has {}",
                    split.train.len() + split.test.len(),
                    m.rows()
                ),
                step: "features",
            });
        }
        Ok(split)
    }

    /// Matrix restricted to the configured stage, plus that stage's grammar.
    fn staged_inputs(&self) -> Result<(FeatureMatrix<f64>, SplitSpec, Grammar)> {
        let m = self.matrix()?;
        let split = self.split(&m)?;
        let grammar = self.grammar(&self.embeddings()?)?;
        if sha256_hex(grammar.serialize()) != m.meta.grammar_hash {
            return Err(CliError::Stale {
                artifact: rundir::MATRIX.into(),
                reason: "the grammar changed since features were extracted".into(),
                step: "features",
            });
        }
        let staged = self.staged(&grammar)?;
        let cols = columns(&m, &staged.ids())?;
        Ok((m.select_columns(&cols), split, staged))
    }

    fn require_pooled_granularity(&self, step: &str) -> Result<Granularity> {
        match self.config.experiments.granularity {
            Granularity::Local => Err(CliError::Config(format!(
                "{step} supports region and country granularity; local models are per region"
            ))),
            g => Ok(g),
        }
    }

    fn areas(&self) -> Result<String> {
        let geo = &self.config.geo_areas;
        let airports = parse_airports(&std::fs::read_to_string(self.input(&geo.airports))?)?;
        let regions = self.regions();
        let params = HdbscanParams {
            min_cluster_size: geo.min_cluster_size,
            min_samples: geo.min_samples,
            extraction: ClusterExtraction::Eom,
        };
        let mut assignment = cluster_airports(&airports, &params, &regions)?;
        if let Some(o) = &geo.overrides {
            assignment = assignment.apply_overrides(&std::fs::read_to_string(self.input(o))?, &regions)?;
        }
        self.run.write(rundir::AREAS, assignment.to_csv())?;
        Ok(format!(
            "areas: {} airports, {} areas, {} noise -> {}",
            airports.len(),
            assignment.area_count(),
            assignment.noise().len(),
            rundir::AREAS
        ))
    }

    fn sample(&self) -> Result<String> {
        let assignment = AreaAssignment::from_csv(&self.run.read_to_string(rundir::AREAS, "areas")?)?;
        let airports: Vec<Airport> = assignment.airports().cloned().collect();
        let index = AirportIndex::new(&airports, self.config.geo_areas.radius_km);
        let keywords = KeywordSet::load(self.input(&self.config.corpus_ingest.keywords))?;

        let mut report = SamplingReport::default();
        let mut by_area: BTreeMap<String, Vec<_>> = BTreeMap::new();
        let mut seen = HashSet::new();
        let mut stream = ingest(self.input(&self.config.corpus_ingest.corpus))?;
        for doc in stream.by_ref() {
            let doc = doc?;
            report.ingested += 1;
            let area = match (&doc.area_label, doc.coordinates()) {
                (Some(a), _) => assignment.info(a).map(|_| a.clone()),
                (None, Some((lat, lon))) => index
                    .assign(LatLon::new(lat, lon))
                    .and_then(|a| assignment.area_of(&a.code))
                    .map(str::to_string),
                (None, None) => None,
            };
            let Some(area) = area else {
                report.unassigned += 1;
                continue;
            };
            if !seen.insert(doc.id.clone()) {
                report.duplicates += 1;
                continue;
            }
            by_area.entry(area).or_default().push(doc);
        }
        report.skipped = stream.skipped();

        let mut samples = Vec::new();
        for (area, docs) in by_area {
            let info = assignment.info(&area).expect("assigned areas exist");
            let location = LocationLabels {
                area: area.clone(),
                country: info.country.clone(),
                region: info.region.clone(),
            };
            let n = docs.len();
            let set = build_samples(docs, &keywords, &location);
            let tokens: usize = set.samples.iter().map(|s| s.token_count).sum();
            report.areas.insert(
                area,
                AreaSampling {
                    documents: n,
                    samples: set.samples.len(),
                    no_keyword: set.discarded.len(),
                    dropped_incomplete: set.dropped_incomplete.len(),
                    mean_tokens: if set.samples.is_empty() {
                        0.0
                    } else {
                        tokens as f64 / set.samples.len() as f64
                    },
                },
            );
            samples.extend(set.samples);
        }
        self.run.write(rundir::SAMPLES, manifest_to_jsonl(&samples))?;
        self.run.write_json(rundir::SAMPLING, &report)?;
        Ok(format!(
            "sample: {} documents read, {} skipped, {} unassigned, {} samples over {} areas -> {}",
            report.ingested,
            report.skipped.total(),
            report.unassigned,
            samples.len(),
            report.areas.values().filter(|a| a.samples > 0).count(),
            rundir::SAMPLES
        ))
    }

    fn features(&self) -> Result<String> {
        let samples = parse_manifest(&self.run.read_to_string(rundir::SAMPLES, "sample")?)?;
        if samples.is_empty() {
            return Err(CliError::Run(format!("{} holds no samples", rundir::SAMPLES)));
        }
        let embeddings = self.embeddings()?;
        let grammar = self.grammar(&embeddings)?;
        let needed: HashSet<&str> = samples
            .iter()
            .flat_map(|s| s.documents.iter().map(String::as_str))
            .collect();
        let mut corpus: HashMap<String, Vec<String>> = HashMap::with_capacity(needed.len());
        for doc in ingest(self.input(&self.config.corpus_ingest.corpus))? {
            let doc = doc?;
            if needed.contains(doc.id.as_str()) && !corpus.contains_key(&doc.id) {
                corpus.insert(doc.id, tokenize(&doc.text));
            }
        }
        let matcher = Matcher::new(&grammar, &embeddings);
        let m = build_matrix(&samples, &corpus, &matcher, &self.config.matcher.feature_config())?;
        std::fs::create_dir_all(self.run.path("features"))?;
        m.save(self.run.path(rundir::MATRIX))?;

        // Stratify on the finest labels so one split serves every granularity.
        let split = make_split(&m.area, self.config.seed)?;
        self.run.write_json(rundir::SPLIT, &split)?;
        let mut meta = RunMeta::load_or_default(&self.run);
        meta.grammar_hash = Some(m.meta.grammar_hash.clone());
        meta.split_hash = Some(split.hash());
        meta.seeds.split = Some(split.seed);
        self.run.write_json(rundir::META, &meta)?;
        Ok(format!(
            "features: {} samples x {} constructions, split {}/{} -> {}",
            m.rows(),
            m.cols(),
            split.train.len(),
            split.test.len(),
            rundir::MATRIX
        ))
    }

    fn train(&self) -> Result<String> {
        let (m, split, _) = self.staged_inputs()?;
        let g = self.config.experiments.granularity;
        let stage = self.config.experiments.stage;
        let runs = run_granularity(&m, &split, g, &self.svm())?;
        let saved: Vec<SavedModel> = runs
            .into_iter()
            .map(|r| SavedModel {
                region: r.name.strip_prefix("local-").map(str::to_string),
                name: r.name,
                granularity: g,
                stage,
                model: r.model,
            })
            .collect();
        let rel = format!("models/{}.json", self.tag());
        self.run.write_json(&rel, &saved)?;
        Ok(format!(
            "train: {} model(s) over {} features and {} training samples -> {rel}",
            saved.len(),
            m.cols(),
            split.train.len()
        ))
    }

    fn evaluate(&self) -> Result<String> {
        let rel = format!("models/{}.json", self.tag());
        let saved: Vec<SavedModel> = self.run.read_json(&rel, "train")?;
        let m = self.matrix()?;
        let split = self.split(&m)?;
        let mut scores = Vec::new();
        for s in &saved {
            if s.model
                .grammar_hash
                .as_deref()
                .is_some_and(|h| h != m.meta.grammar_hash)
            {
                return Err(CliError::Stale {
                    artifact: rel,
                    reason: "trained on a different grammar".into(),
                    step: "train",
                });
            }
            let cols = columns(&m, &s.model.feature_ids).map_err(|_| CliError::Stale {
                artifact: rel.clone(),
                reason: "model features are not in the matrix".into(),
                step: "train",
            })?;
            let sub = m.select_columns(&cols);
            let labels = s.granularity.labels(&sub);
            let test: Vec<usize> = match &s.region {
                Some(r) => split.test.iter().copied().filter(|&i| &sub.region[i] == r).collect(),
                None => split.test.clone(),
            };
            let ds = Dataset::new(&sub.data, sub.cols(), labels)?;
            let metrics = evaluate(&s.model, &ds, &test)?;
            let name = format!("{}-{}", slug(&s.name), stage_name(s.stage));
            self.run.write(&format!("metrics/{name}.csv"), metrics.to_csv())?;
            self.run.write_json(
                &format!("confusion/{name}.json"),
                &ConfusionFile {
                    classes: metrics.classes.clone(),
                    confusion: metrics.confusion.clone(),
                },
            )?;
            scores.push(format!("{} F={:.4}", s.name, metrics.weighted_f1));
        }
        Ok(format!("evaluate: {} -> metrics/, confusion/", scores.join("; ")))
    }

    fn node_scan(&self) -> Result<String> {
        let g = self.require_pooled_granularity("node-scan")?;
        let (m, split, grammar) = self.staged_inputs()?;
        let scan = node_scan(&m, &split, &grammar, g, self.config.experiments.stage, &self.svm())?;
        let tag = self.tag();
        let mut csv = String::from("kind,node,stage,constructions,weighted_f1,degenerate\n");
        let row = |kind: &str, node: String, constructions: usize, f: f64, degenerate: bool| {
            format!(
                "{kind},{},{},{constructions},{},{degenerate}\n",
                csv_field(&node),
                stage_name(self.config.experiments.stage),
                fmt_f(f)
            )
        };
        csv.push_str(&row(
            "full",
            "full".into(),
            scan.full.constructions,
            scan.full.weighted_f1,
            false,
        ));
        csv.push_str(&row("majority", "majority".into(), 0, scan.majority_f1, true));
        for n in &scan.nodes {
            csv.push_str(&row(
                kind_name(n.kind),
                n.label(),
                n.constructions,
                n.weighted_f1,
                n.degenerate,
            ));
        }
        self.run.write(&format!("nodes/{tag}.csv"), csv)?;
        self.run.write_json(&format!("nodes/{tag}.json"), &scan)?;
        let best = scan.nodes.iter().map(|n| n.weighted_f1).fold(f64::NAN, f64::max);
        Ok(format!(
            "node-scan: {} nodes, full F={:.4}, best node F={:.4}, majority F={:.4} -> nodes/{tag}.csv",
            scan.nodes.len(),
            scan.full.weighted_f1,
            best,
            scan.majority_f1
        ))
    }

    fn unmask(&self) -> Result<String> {
        let g = self.require_pooled_granularity("unmask")?;
        let (m, split, _) = self.staged_inputs()?;
        let config = self.config.experiments.unmasking.unmask_config();
        let curve = unmask(&m, &split, g, &config, &self.svm())?;
        self.run.write(rundir::UNMASKING_CSV, curve.to_csv())?;
        self.run.write_json(rundir::UNMASKING_JSON, &curve)?;
        let last = curve.rounds.last().expect("round 0 is always evaluated");
        Ok(format!(
            "unmask: {} rounds, removed {} of {} features, F {:.4} -> {:.4}{} -> {}",
            curve.rounds.len() - 1,
            curve.total_removed(),
            curve.initial_features,
            curve.rounds[0].weighted_f1,
            last.weighted_f1,
            if curve.exhausted { " (exhausted)" } else { "" },
            rundir::UNMASKING_CSV
        ))
    }

    fn error_corr(&self) -> Result<String> {
        let tag = self.tag();
        let scan: NodeScan<f64> = self.run.read_json(&format!("nodes/{tag}.json"), "node-scan")?;
        let reference = error_similarity::<f64>(&scan.full.metrics.classes, &scan.full.metrics.confusion);
        let (nodes, summary) = similarity_correlation(&scan.nodes, &reference, self.config.experiments.correlation);
        self.run
            .write(&format!("similarity/{tag}-reference.csv"), reference.to_csv())?;
        let mut csv = String::from("kind,node,weighted_f1,correlation\n");
        for n in &nodes {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                kind_name(n.kind),
                csv_field(&n.node),
                fmt_f(n.weighted_f1),
                n.correlation.map(fmt_f).unwrap_or_default()
            ));
        }
        self.run.write(&format!("similarity/{tag}-nodes.csv"), csv)?;
        self.run
            .write(&format!("similarity/{tag}-summary.csv"), summary_csv(&summary))?;
        let file = CorrelationFile {
            reference,
            nodes,
            summary,
        };
        self.run.write_json(&format!("similarity/{tag}.json"), &file)?;
        let top = file.reference.ranked().first().map(|&i| {
            let (a, b) = &file.reference.pairs[i];
            format!("{a} + {b} {:.2}%", 100.0 * file.reference.shares[i])
        });
        let present = file.nodes.iter().filter(|n| n.correlation.is_some()).count();
        Ok(format!(
            "error-corr: top pair {}, {present}/{} nodes correlated -> similarity/{tag}-nodes.csv",
            top.filter(|_| !file.reference.no_errors)
                .unwrap_or_else(|| "none (no errors)".into()),
            file.nodes.len()
        ))
    }

    fn report(&self) -> Result<String> {
        let tag = self.tag();
        let mut written = Vec::new();

        let scan: Option<NodeScan<f64>> = self.optional_json(&format!("nodes/{tag}.json"), "node-scan")?;
        let mut points = Vec::new();
        let mut csv = String::from("kind,node,constructions,weighted_f1\n");
        let mut baselines = Vec::new();
        if let Some(scan) = &scan {
            for n in &scan.nodes {
                points.push(ScatterPoint {
                    kind: kind_name(n.kind).into(),
                    x: n.constructions as f64,
                    y: n.weighted_f1,
                });
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    kind_name(n.kind),
                    csv_field(&n.label()),
                    n.constructions,
                    fmt_f(n.weighted_f1)
                ));
            }
            baselines.push(("full grammar", scan.full.weighted_f1));
            baselines.push(("majority", scan.majority_f1));
        }
        let svg = plot::scatter(&format!("node F-scores ({tag})"), &points, &baselines);
        written.push(self.figure(&format!("plots/nodes-{tag}"), &svg, &csv)?);

        let curve: Option<UnmaskingCurve<f64>> = self.optional_json(rundir::UNMASKING_JSON, "unmask")?;
        let mut csv = String::from("round,remaining_share,weighted_f1\n");
        let (mut x, mut series) = (Vec::new(), Vec::new());
        if let Some(curve) = &curve {
            let mut weighted = Vec::new();
            let mut per_class = vec![Vec::new(); curve.classes.len()];
            for r in &curve.rounds {
                x.push(r.round as f64);
                weighted.push(r.weighted_f1);
                for (c, f) in r.per_class_f1.iter().enumerate() {
                    per_class[c].push(*f);
                }
                csv.push_str(&format!(
                    "{},{},{}\n",
                    r.round,
                    fmt_f(r.features as f64 / curve.initial_features.max(1) as f64),
                    fmt_f(r.weighted_f1)
                ));
            }
            series.push(("weighted".to_string(), weighted));
            series.extend(curve.classes.iter().cloned().zip(per_class));
        }
        let svg = plot::curves("unmasking", "round", &x, &series);
        written.push(self.figure("plots/unmasking", &svg, &csv)?);

        let corr: Option<CorrelationFile> = self.optional_json(&format!("similarity/{tag}.json"), "error-corr")?;
        let summary = corr.map(|c| c.summary).unwrap_or_default();
        let rows: Vec<QuantileRow> = summary
            .iter()
            .map(|s| QuantileRow {
                label: format!("{} (n={})", kind_name(s.kind), s.count - s.missing),
                q: s.quantiles,
            })
            .collect();
        let svg = plot::quantile_boxes(&format!("error-similarity correlation ({tag})"), &rows);
        written.push(self.figure(&format!("plots/correlation-{tag}"), &svg, &summary_csv(&summary))?);

        Ok(format!(
            "report: {} node points, {} unmasking rounds, {} correlation groups -> {}",
            points.len(),
            x.len(),
            summary.len(),
            written.join(", ")
        ))
    }

    fn optional_json<D: serde::de::DeserializeOwned>(&self, rel: &str, step: &'static str) -> Result<Option<D>> {
        if self.run.exists(rel) {
            self.run.read_json(rel, step).map(Some)
        } else {
            Ok(None)
        }
    }

    fn figure(&self, stem: &str, svg: &str, csv: &str) -> Result<String> {
        self.run.write(&format!("{stem}.svg"), svg)?;
        self.run.write(&format!("{stem}.csv"), csv)?;
        Ok(format!("{stem}.svg"))
    }
}

fn kind_name(k: NodeKind) -> &'static str {
    match k {
        NodeKind::Full => "full",
        NodeKind::Macro => "macro",
        NodeKind::Micro => "micro",
    }
}

fn summary_csv(summary: &[CorrelationSummary<f64>]) -> String {
    let mut csv = String::from("kind,count,missing,min,q1,median,q3,max\n");
    for s in summary {
        let q = match s.quantiles {
            Some(q) => q.iter().map(|v| fmt_f(*v)).collect::<Vec<_>>().join(","),
            None => ",,,,".into(),
        };
        csv.push_str(&format!("{},{},{},{q}\n", kind_name(s.kind), s.count, s.missing));
    }
    csv
}

/// Matrix column positions of the given construction ids.
fn columns(m: &FeatureMatrix<f64>, ids: &[u32]) -> Result<Vec<usize>> {
    ids.iter()
        .map(|id| {
            m.construction_ids.binary_search(id).map_err(|_| CliError::Stale {
                artifact: rundir::MATRIX.into(),
                reason: format!("construction {id} has no column"),
                step: "features",
            })
        })
        .collect()
}

/// Write the synthetic text fixture and a config pointing at it.
fn synth(out: &Path, seed: u64) -> Result<String> {
    let spec = TextSpec {
        seed,
        ..Default::default()
    };
    let paths = write_text_fixture(out, &spec)?;
    let name = |p: &Path| {
        p.file_name()
            .expect("fixture files have names")
            .to_string_lossy()
            .into_owned()
    };
    let config = format!(
        r#"seed = {seed}

[corpus_ingest]
corpus = "{}"
keywords = "{}"

[geo_areas]
airports = "{}"
min_cluster_size = 3

[embeddings]
syn = "{}"
sem = "{}"
categories = "{}"

[grammar_model]
grammar = "{}"

[experiments.unmasking]
rounds = 50
"#,
        name(&paths.corpus),
        name(&paths.keywords),
        name(&paths.airports),
        name(&paths.syn_embeddings),
        name(&paths.sem_embeddings),
        name(&paths.categories),
        name(&paths.grammar),
    );
    let config_path = out.join("cxgvar.toml");
    std::fs::write(&config_path, config)?;
    Ok(format!(
        "synth: fixture and config written -> {}",
        config_path.display()
    ))
}
