//! A small synthetic input set for the full pipeline: a geo-referenced
//! corpus, keywords, airports, embedding tables, a category inventory, and a
//! grammar. Word choice depends on region, country, and area, so each level
//! of classification has signal to find.

use std::io;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TextSpec {
    pub seed: u64,
    /// Complete keyword rounds per area; each round can fill one sample.
    pub rounds_per_area: usize,
    /// Filler tokens per document besides the keyword.
    pub tokens_per_doc: usize,
    /// Probability that a filler comes from the location's word group.
    pub signal: f64,
}

impl Default for TextSpec {
    fn default() -> Self {
        TextSpec {
            seed: 1,
            rounds_per_area: 12,
            tokens_per_doc: 8,
            signal: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixturePaths {
    pub corpus: PathBuf,
    pub keywords: PathBuf,
    pub airports: PathBuf,
    pub syn_embeddings: PathBuf,
    pub sem_embeddings: PathBuf,
    pub categories: PathBuf,
    pub grammar: PathBuf,
}

pub const KEYWORDS: [&str; 8] = ["know", "time", "people", "think", "good", "make", "going", "see"];
const PREFIXES: [&str; 6] = ["ka", "lo", "mu", "ne", "pi", "ru"];
const SUFFIXES: [&str; 6] = ["ba", "de", "fi", "go", "hu", "jy"];
/// (country, base latitude, base longitude); consecutive pairs share a region.
const COUNTRIES: [(&str, f64, f64); 6] = [
    ("US", 40.0, -100.0),
    ("CA", 50.0, -110.0),
    ("UK", 52.0, -2.0),
    ("IE", 53.0, -8.0),
    ("AU", -30.0, 145.0),
    ("NZ", -41.0, 173.0),
];
const SYN_DIM: usize = 8;
const SEM_DIM: usize = 6;
const THRESHOLD: f64 = 0.9;

fn word(group: usize, i: usize) -> String {
    format!("{}{}", PREFIXES[group], SUFFIXES[i])
}

fn jitter(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    rng.gen_range(-scale..scale)
}

fn vector_line(w: &str, axis: usize, dim: usize, rng: &mut ChaCha8Rng) -> String {
    let v: Vec<String> = (0..dim)
        .map(|d| format!("{:.4}", if d == axis { 1.0 } else { 0.0 } + jitter(rng, 0.05)))
        .collect();
    format!("{w}\t{}\n", v.join(" "))
}

/// Airport blob centres of country `c`: two areas plus one isolated airport.
fn blob_centres(c: usize) -> [(f64, f64); 3] {
    let (_, lat, lon) = COUNTRIES[c];
    let south = if lat < 0.0 { -1.0 } else { 1.0 };
    [
        (lat, lon),
        (lat + 3.0 * south, lon + 3.0),
        (lat - 4.0 * south, lon - 4.0),
    ]
}

/// Write the fixture files into `dir` and return their paths.
pub fn write_text_fixture(dir: &Path, spec: &TextSpec) -> io::Result<FixturePaths> {
    std::fs::create_dir_all(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let paths = FixturePaths {
        corpus: dir.join("corpus.jsonl"),
        keywords: dir.join("keywords.txt"),
        airports: dir.join("airports.csv"),
        syn_embeddings: dir.join("syn.vec"),
        sem_embeddings: dir.join("sem.vec"),
        categories: dir.join("categories.tsv"),
        grammar: dir.join("grammar.tsv"),
    };

    std::fs::write(&paths.keywords, KEYWORDS.join("\n") + "\n")?;

    let mut airports = String::from("code,lat,lon,country\n");
    // airport_sites[c][blob] = airport coordinates
    let mut sites: Vec<Vec<Vec<(f64, f64)>>> = Vec::new();
    for (c, (country, _, _)) in COUNTRIES.iter().enumerate() {
        let mut per_blob = Vec::new();
        for (b, (lat, lon)) in blob_centres(c).iter().enumerate() {
            let count = if b < 2 { 4 } else { 1 };
            let mut blob = Vec::new();
            for k in 0..count {
                let site = (lat + jitter(&mut rng, 0.2), lon + jitter(&mut rng, 0.2));
                airports.push_str(&format!(
                    "{country}{}{k},{:.5},{:.5},{country}\n",
                    b + 1,
                    site.0,
                    site.1
                ));
                blob.push(site);
            }
            per_blob.push(blob);
        }
        sites.push(per_blob);
    }
    std::fs::write(&paths.airports, airports)?;

    let mut syn = format!("{} {SYN_DIM}\n", PREFIXES.len() * SUFFIXES.len());
    let mut sem = String::new();
    for g in 0..PREFIXES.len() {
        for i in 0..SUFFIXES.len() {
            syn.push_str(&vector_line(&word(g, i), g, SYN_DIM, &mut rng));
            sem.push_str(&vector_line(&word(g, i), i % 3, SEM_DIM, &mut rng));
        }
    }
    for w in ["the", "of"] {
        syn.push_str(&vector_line(w, 6, SYN_DIM, &mut rng));
        sem.push_str(&vector_line(w, 4, SEM_DIM, &mut rng));
    }
    std::fs::write(&paths.syn_embeddings, syn)?;
    std::fs::write(&paths.sem_embeddings, sem)?;

    let axis = |a: usize, dim: usize| {
        (0..dim)
            .map(|d| if d == a { "1" } else { "0" })
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut categories = String::new();
    for g in 0..PREFIXES.len() {
        let name = format!("{}-{}", word(g, 0), word(g, 1));
        categories.push_str(&format!("{g}\tSYN\t{THRESHOLD}\t{name}\t{}\n", axis(g, SYN_DIM)));
    }
    categories.push_str(&format!("6\tSYN\t-\tthe-of\t{}\n", axis(6, SYN_DIM)));
    for s in 0..3 {
        categories.push_str(&format!(
            "{}\tSEM\t{THRESHOLD}\t{}-{}\t{}\n",
            10 + s,
            word(0, s),
            word(1, s),
            axis(s, SEM_DIM)
        ));
    }
    std::fs::write(&paths.categories, categories)?;

    // Early: SYN bigrams, one micro-cluster per first group.
    // Late: single lexemes by group, then SEM-SYN pairs, then frames around "the".
    let mut grammar = String::from("# id\tstage\tmicro\tmacro\tslots\n");
    let mut id = 0;
    let mut push = |stage: &str, micro: usize, macro_: usize, slots: String| {
        grammar.push_str(&format!("{id}\t{stage}\t{micro}\t{macro_}\t{slots}\n"));
        id += 1;
    };
    for a in 0..6 {
        for b in 0..6 {
            push("early", a, 0, format!("SYN:{a} SYN:{b}"));
        }
    }
    for g in 0..6 {
        for i in 0..6 {
            push("late", 10 + g, 1 + g / 2, format!("LEX:{}", word(g, i)));
        }
    }
    for s in 0..3 {
        for g in 0..6 {
            push("late", 20 + s, 4, format!("SEM:{} SYN:{g}", 10 + s));
        }
    }
    for g in 0..6 {
        push("late", 30, 5, format!("LEX:the SYN:{g}"));
        push("late", 31, 5, format!("SYN:{g} LEX:of LEX:the"));
    }
    std::fs::write(&paths.grammar, grammar)?;

    let mut docs = Vec::new();
    let mut next_id = 0usize;
    let mut new_id = || {
        next_id += 1;
        format!("t{next_id:05}")
    };
    for (c, _) in COUNTRIES.iter().enumerate() {
        for (area, blob) in sites[c].iter().enumerate().take(2) {
            for _ in 0..spec.rounds_per_area {
                let mut kws = KEYWORDS.to_vec();
                kws.shuffle(&mut rng);
                for kw in kws {
                    let site = *blob.choose(&mut rng).expect("blob has airports");
                    let text = document_text(&mut rng, spec, kw, c, area);
                    docs.push(record(&new_id(), &text, site, &mut rng));
                }
            }
            // An incomplete tail that cannot fill a sample.
            for kw in &KEYWORDS[..3] {
                let site = sites[c][area][0];
                let text = document_text(&mut rng, spec, kw, c, area);
                docs.push(record(&new_id(), &text, site, &mut rng));
            }
        }
        // Documents near the isolated airport, which is clustering noise.
        for kw in KEYWORDS {
            let text = document_text(&mut rng, spec, kw, c, 0);
            docs.push(record(&new_id(), &text, sites[c][2][0], &mut rng));
        }
    }
    for _ in 0..20 {
        let text = format!(
            "{} {} nothing to see @someone http://example.com",
            word(0, 1),
            word(2, 3)
        );
        docs.push(record(
            &new_id(),
            &text.replace("see", "watch"),
            sites[0][0][0],
            &mut rng,
        ));
    }
    docs.push(serde_json::json!({"id": "far-away", "text": "know the time", "lat": 0.0, "lon": -30.0}).to_string());
    docs.push("{not json".to_string());
    docs.push(serde_json::json!({"id": "no-coordinates", "text": "know the time"}).to_string());
    docs.shuffle(&mut rng);
    std::fs::write(&paths.corpus, docs.join("\n") + "\n")?;
    Ok(paths)
}

fn record(id: &str, text: &str, site: (f64, f64), rng: &mut ChaCha8Rng) -> String {
    serde_json::json!({
        "id": id,
        "text": text,
        "lat": ((site.0 + jitter(rng, 0.08)) * 1e5).round() / 1e5,
        "lon": ((site.1 + jitter(rng, 0.08)) * 1e5).round() / 1e5,
    })
    .to_string()
}

fn document_text(rng: &mut ChaCha8Rng, spec: &TextSpec, keyword: &str, country: usize, area: usize) -> String {
    let group = country;
    let mut tokens = vec![keyword.to_string()];
    for _ in 0..spec.tokens_per_doc {
        let r: f64 = rng.gen();
        let w = if r < spec.signal {
            // Areas favour one half of their group's words.
            let half = if rng.gen_bool(0.8) { area } else { 1 - area };
            word(group, half * 3 + rng.gen_range(0..3))
        } else if r < spec.signal + 0.1 {
            ["the", "of"][rng.gen_range(0..2)].to_string()
        } else {
            word(rng.gen_range(0..6), rng.gen_range(0..6))
        };
        tokens.push(w);
    }
    tokens[1..].shuffle(rng);
    if rng.gen_bool(0.1) {
        tokens.push(format!("#{}", word(group, 0)));
    }
    if rng.gen_bool(0.1) {
        tokens.push("https://t.co/xyz".into());
    }
    if rng.gen_bool(0.5) {
        tokens[0] = tokens[0].to_uppercase();
    }
    tokens.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ingest, KeywordSet};
    use crate::embeddings::{CategoryInventory, EmbeddingTable, Embeddings, Space};
    use crate::geo::parse_airports;
    use crate::grammar::Grammar;

    #[test]
    fn files_load_with_the_library_parsers() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_text_fixture(dir.path(), &TextSpec::default()).unwrap();
        let keywords = KeywordSet::load(&p.keywords).unwrap();
        assert_eq!(keywords.len(), 8);
        assert_eq!(
            parse_airports(&std::fs::read_to_string(&p.airports).unwrap())
                .unwrap()
                .len(),
            6 * 9
        );
        let cats = CategoryInventory::<f64>::load(&p.categories, 0.5).unwrap();
        let emb = Embeddings::new(
            EmbeddingTable::load(&p.syn_embeddings, Space::Syn).unwrap(),
            EmbeddingTable::load(&p.sem_embeddings, Space::Sem).unwrap(),
            cats,
        )
        .unwrap();
        let g = Grammar::load(&p.grammar, &emb.categories).unwrap();
        assert_eq!(g.len(), 36 + 36 + 18 + 12);
        assert!(emb.in_category(&word(3, 4), 3));
        assert!(!emb.in_category(&word(3, 4), 2));
        assert!(emb.in_category(&word(3, 4), 11));
        let mut stream = ingest(&p.corpus).unwrap();
        let n = stream.by_ref().filter_map(Result::ok).count();
        assert_eq!(stream.skipped().malformed, 1);
        assert_eq!(stream.skipped().missing_location, 1);
        assert_eq!(n, 6 * (2 * (12 * 8 + 3) + 8) + 20 + 1);
    }

    #[test]
    fn same_seed_same_bytes() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        write_text_fixture(a.path(), &TextSpec::default()).unwrap();
        write_text_fixture(b.path(), &TextSpec::default()).unwrap();
        for f in ["corpus.jsonl", "airports.csv", "syn.vec", "grammar.tsv"] {
            assert_eq!(
                std::fs::read(a.path().join(f)).unwrap(),
                std::fs::read(b.path().join(f)).unwrap()
            );
        }
    }
}
