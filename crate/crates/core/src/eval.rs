//! Dataset loading and evaluation: SICK-style three-way and MED-style two-way benchmarks.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conllu::parse_conllu;
use crate::error::{DatasetError, Error, Result};
use crate::search::{Engine, EngineConfig, Label};
use crate::sentence::Sentence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Sick,
    Med,
}

/// Monotonicity direction annotated on MED pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Monotonicity {
    Upward,
    Downward,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NliPair {
    pub id: String,
    pub premise_text: String,
    pub hypothesis_text: String,
    pub gold: Label,
    pub monotonicity: Option<Monotonicity>,
    #[serde(skip)]
    pub premise: Option<Sentence>,
    #[serde(skip)]
    pub hypothesis: Option<Sentence>,
}

struct Table<'a> {
    header: BTreeMap<String, usize>,
    rows: Vec<(usize, Vec<&'a str>)>,
}

fn table(text: &str) -> Result<Table<'_>, DatasetError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or(DatasetError::Row { row: 1, msg: "empty file".into() })?;
    let header = head
        .trim_end_matches('\r')
        .split('\t')
        .enumerate()
        .map(|(i, c)| (c.trim().to_ascii_lowercase(), i))
        .collect();
    let rows = lines.map(|(i, l)| (i + 1, l.trim_end_matches('\r').split('\t').collect())).collect();
    Ok(Table { header, rows })
}

impl Table<'_> {
    fn column(&self, names: &[&str]) -> Result<usize, DatasetError> {
        names
            .iter()
            .find_map(|n| self.header.get(*n).copied())
            .ok_or_else(|| DatasetError::MissingColumn(names[0].to_string()))
    }
}

fn cell<'a>(row: &[&'a str], col: usize, line: usize) -> Result<&'a str, DatasetError> {
    row.get(col)
        .map(|s| s.trim())
        .ok_or(DatasetError::Row { row: line, msg: format!("missing column {}", col + 1) })
}

/// Parses a SICK-format TSV (`pair_ID`, `sentence_A`, `sentence_B`, `entailment_label`).
pub fn parse_sick(text: &str) -> Result<Vec<NliPair>, DatasetError> {
    let t = table(text)?;
    let id = t.column(&["pair_id", "id", "pairid"])?;
    let p = t.column(&["sentence_a", "premise", "sentence1"])?;
    let h = t.column(&["sentence_b", "hypothesis", "sentence2"])?;
    let l = t.column(&["entailment_label", "gold_label", "label"])?;
    t.rows
        .iter()
        .map(|(line, row)| {
            let gold = cell(row, l, *line)?
                .parse()
                .map_err(|msg| DatasetError::Row { row: *line, msg })?;
            Ok(NliPair {
                id: cell(row, id, *line)?.to_string(),
                premise_text: cell(row, p, *line)?.to_string(),
                hypothesis_text: cell(row, h, *line)?.to_string(),
                gold,
                monotonicity: None,
                premise: None,
                hypothesis: None,
            })
        })
        .collect()
}

fn genre_direction(genre: &str) -> Monotonicity {
    let g = genre.to_ascii_lowercase();
    if g.contains("upward") {
        Monotonicity::Upward
    } else if g.contains("downward") {
        Monotonicity::Downward
    } else {
        Monotonicity::None
    }
}

/// Parses a MED-format TSV (`genre`, `sentence1`, `sentence2`, `gold_label`); labels are
/// two-way, so contradiction labels are rejected.
pub fn parse_med(text: &str) -> Result<Vec<NliPair>, DatasetError> {
    let t = table(text)?;
    let id = t.column(&["pairid", "pair_id", "index", "id"])?;
    let genre = t.column(&["genre"])?;
    let p = t.column(&["sentence1", "premise"])?;
    let h = t.column(&["sentence2", "hypothesis"])?;
    let l = t.column(&["gold_label", "label"])?;
    t.rows
        .iter()
        .map(|(line, row)| {
            let gold: Label = cell(row, l, *line)?
                .parse()
                .map_err(|msg| DatasetError::Row { row: *line, msg })?;
            if gold == Label::Contradict {
                return Err(DatasetError::Row { row: *line, msg: "two-way data cannot carry a contradiction label".into() });
            }
            Ok(NliPair {
                id: cell(row, id, *line)?.to_string(),
                premise_text: cell(row, p, *line)?.to_string(),
                hypothesis_text: cell(row, h, *line)?.to_string(),
                gold,
                monotonicity: Some(genre_direction(cell(row, genre, *line)?)),
                premise: None,
                hypothesis: None,
            })
        })
        .collect()
}

fn read(path: &Path) -> Result<String, DatasetError> {
    std::fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })
}

pub fn load_sick(path: &Path) -> Result<Vec<NliPair>, DatasetError> {
    parse_sick(&read(path)?)
}

pub fn load_med(path: &Path) -> Result<Vec<NliPair>, DatasetError> {
    parse_med(&read(path)?)
}

pub fn load(kind: DatasetKind, path: &Path) -> Result<Vec<NliPair>, DatasetError> {
    match kind {
        DatasetKind::Sick => load_sick(path),
        DatasetKind::Med => load_med(path),
    }
}

/// Reads `<dir>/<id>.conllu` (premise block then hypothesis block) for every pair.
/// Pairs whose file is missing or malformed keep `None` and are reported by `evaluate`.
pub fn attach_parses(pairs: &mut [NliPair], dir: &Path) -> Vec<(String, String)> {
    let mut problems = Vec::new();
    for pair in pairs.iter_mut() {
        let path = dir.join(format!("{}.conllu", pair.id));
        let parsed = std::fs::read_to_string(&path)
            .map_err(|e| format!("{}: {}", path.display(), e))
            .and_then(|t| parse_conllu(&t).map_err(|e| format!("{}: {}", path.display(), e)));
        match parsed {
            Ok(mut v) if v.len() == 2 => {
                pair.hypothesis = Some(v.pop().unwrap());
                pair.premise = Some(v.pop().unwrap());
            }
            Ok(v) => problems.push((pair.id.clone(), format!("{}: expected 2 sentences, found {}", path.display(), v.len()))),
            Err(e) => problems.push((pair.id.clone(), e)),
        }
    }
    problems
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairResult {
    pub id: String,
    pub gold: Label,
    pub predicted: Label,
    pub trace: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub label: Label,
    pub precision: f64,
    pub recall: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedBreakdown {
    pub upward: f64,
    pub downward: f64,
    pub all: f64,
    pub upward_count: usize,
    pub downward_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub dataset: DatasetKind,
    pub total: usize,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    /// Rows are gold labels, columns predictions, both in ENTAIL, CONTRADICT, NEUTRAL order.
    pub confusion: [[usize; 3]; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub med: Option<MedBreakdown>,
    /// Pairs that could not be processed and were scored as NEUTRAL.
    pub flagged: Vec<String>,
    pub config: EngineConfig,
    pub pairs: Vec<PairResult>,
}

fn idx(l: Label) -> usize {
    Label::ALL.iter().position(|x| *x == l).unwrap()
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Aggregates predictions. For two-way data, CONTRADICT predictions count as NEUTRAL and only
/// the two present classes enter the macro averages.
pub fn compute_metrics(kind: DatasetKind, pairs: &[NliPair], results: Vec<PairResult>, config: EngineConfig) -> MetricsReport {
    let mut results = results;
    if kind == DatasetKind::Med {
        for r in &mut results {
            if r.predicted == Label::Contradict {
                r.predicted = Label::Neutral;
            }
        }
    }
    let mut confusion = [[0usize; 3]; 3];
    for r in &results {
        confusion[idx(r.gold)][idx(r.predicted)] += 1;
    }
    let classes: Vec<Label> = match kind {
        DatasetKind::Sick => Label::ALL.to_vec(),
        DatasetKind::Med => vec![Label::Entail, Label::Neutral],
    };
    let per_class: Vec<ClassMetrics> = classes
        .iter()
        .map(|&l| {
            let i = idx(l);
            let tp = confusion[i][i];
            let predicted: usize = (0..3).map(|g| confusion[g][i]).sum();
            let support: usize = confusion[i].iter().sum();
            ClassMetrics { label: l, precision: ratio(tp, predicted), recall: ratio(tp, support), support }
        })
        .collect();
    let n = results.len();
    let correct = results.iter().filter(|r| r.gold == r.predicted).count();
    let k = per_class.len() as f64;
    let med = (kind == DatasetKind::Med).then(|| {
        let acc = |dir: Monotonicity| {
            let sel: Vec<&PairResult> = results
                .iter()
                .zip(pairs)
                .filter(|(_, p)| p.monotonicity == Some(dir))
                .map(|(r, _)| r)
                .collect();
            (ratio(sel.iter().filter(|r| r.gold == r.predicted).count(), sel.len()), sel.len())
        };
        let (upward, upward_count) = acc(Monotonicity::Upward);
        let (downward, downward_count) = acc(Monotonicity::Downward);
        MedBreakdown { upward, downward, all: ratio(correct, n), upward_count, downward_count }
    });
    MetricsReport {
        dataset: kind,
        total: n,
        accuracy: ratio(correct, n),
        macro_precision: per_class.iter().map(|c| c.precision).sum::<f64>() / k,
        macro_recall: per_class.iter().map(|c| c.recall).sum::<f64>() / k,
        per_class,
        confusion,
        med,
        flagged: results.iter().filter(|r| r.error.is_some()).map(|r| r.id.clone()).collect(),
        config,
        pairs: results,
    }
}

fn run_pair(engine: &Engine, pair: &NliPair) -> Result<PairResult> {
    let base = |error: String| PairResult {
        id: pair.id.clone(),
        gold: pair.gold,
        predicted: Label::Neutral,
        trace: Vec::new(),
        warnings: Vec::new(),
        error: Some(error),
    };
    let sentences = match (&pair.premise, &pair.hypothesis) {
        (Some(p), Some(h)) => Ok((p.clone(), h.clone())),
        _ => engine
            .parse_text(&pair.premise_text)
            .and_then(|p| Ok((p, engine.parse_text(&pair.hypothesis_text)?))),
    };
    let (p, h) = match sentences {
        Ok(x) => x,
        Err(e @ Error::Scoring(_)) if engine.config.strict => return Err(e),
        Err(e) => return Ok(base(format!("no parse: {}", e))),
    };
    match engine.classify(&p, &h) {
        Ok(inf) => Ok(PairResult {
            id: pair.id.clone(),
            gold: pair.gold,
            predicted: inf.label,
            trace: inf.trace.iter().map(|e| e.to_string()).collect(),
            warnings: inf.warnings,
            error: None,
        }),
        Err(e @ Error::Scoring(_)) => Err(e),
        Err(e) => Ok(base(e.to_string())),
    }
}

/// Classifies every pair on `threads` workers (0 = rayon's default) and aggregates.
pub fn evaluate(kind: DatasetKind, pairs: &[NliPair], engine: &Engine, threads: usize) -> Result<MetricsReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Lookup(format!("cannot start worker pool: {}", e)))?;
    let results: Vec<PairResult> = pool.install(|| pairs.par_iter().map(|p| run_pair(engine, p)).collect::<Result<_>>())?;
    Ok(compute_metrics(kind, pairs, results, engine.config))
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text tables mirroring the usual benchmark layout.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let pct = |x: f64| format!("{:.2}", 100.0 * x);
        match self.dataset {
            DatasetKind::Sick => {
                let _ = writeln!(s, "{:<10} {:>8} {:>8} {:>8}", "Model", "P", "R", "acc.");
                let _ = writeln!(s, "{:<10} {:>8} {:>8} {:>8}", "monolog", pct(self.macro_precision), pct(self.macro_recall), pct(self.accuracy));
            }
            DatasetKind::Med => {
                let m = self.med.as_ref().unwrap();
                let _ = writeln!(s, "{:<10} {:>8} {:>8} {:>8}", "Model", "Up", "Down", "All");
                let _ = writeln!(s, "{:<10} {:>8} {:>8} {:>8}", "monolog", pct(m.upward), pct(m.downward), pct(m.all));
            }
        }
        let _ = writeln!(s);
        for c in &self.per_class {
            let _ = writeln!(s, "{:<11} P={} R={} n={}", c.label.as_str(), pct(c.precision), pct(c.recall), c.support);
        }
        let _ = writeln!(s, "\ngold \\ pred  {:>10} {:>10} {:>10}", "ENTAIL", "CONTRADICT", "NEUTRAL");
        for (i, l) in Label::ALL.iter().enumerate() {
            let r = self.confusion[i];
            let _ = writeln!(s, "{:<12} {:>10} {:>10} {:>10}", l.as_str(), r[0], r[1], r[2]);
        }
        if !self.flagged.is_empty() {
            let _ = writeln!(s, "\n{} pair(s) flagged: {}", self.flagged.len(), self.flagged.join(", "));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sick_columns_by_name() {
        let text = "pair_ID\tsentence_A\tsentence_B\trelatedness_score\tentailment_label\n\
                    1\tA dog runs\tAn animal runs\t4.5\tENTAILMENT\n\
                    2\tA dog runs\tNo dog runs\t3.0\tCONTRADICTION\n";
        let v = parse_sick(text).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].gold, Label::Entail);
        assert_eq!(v[1].gold, Label::Contradict);
        assert_eq!(v[1].hypothesis_text, "No dog runs");
    }

    #[test]
    fn missing_column_is_reported() {
        match parse_sick("pair_ID\tsentence_A\n1\tx\n") {
            Err(DatasetError::MissingColumn(c)) => assert_eq!(c, "sentence_b"),
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn med_genre_and_label() {
        let text = "index\tgenre\tsentence1\tsentence2\tgold_label\n\
                    0\tdownward_monotone:hyponym\tNo dog runs\tNo poodle runs\tentailment\n\
                    1\tupward_monotone\tA dog runs\tA poodle runs\tneutral\n";
        let v = parse_med(text).unwrap();
        assert_eq!(v[0].monotonicity, Some(Monotonicity::Downward));
        assert_eq!(v[1].monotonicity, Some(Monotonicity::Upward));
        assert!(parse_med("index\tgenre\tsentence1\tsentence2\tgold_label\n0\tx\ta\tb\tcontradiction\n").is_err());
    }

    fn result(id: &str, gold: Label, predicted: Label) -> PairResult {
        PairResult { id: id.into(), gold, predicted, trace: vec![], warnings: vec![], error: None }
    }

    #[test]
    fn metrics_from_confusion() {
        let pairs: Vec<NliPair> = Vec::new();
        let rs = vec![
            result("1", Label::Entail, Label::Entail),
            result("2", Label::Entail, Label::Neutral),
            result("3", Label::Contradict, Label::Contradict),
            result("4", Label::Neutral, Label::Neutral),
        ];
        let m = compute_metrics(DatasetKind::Sick, &pairs, rs, EngineConfig::default());
        assert_eq!(m.accuracy, 0.75);
        assert_eq!(m.confusion[0], [1, 0, 1]);
        let e = &m.per_class[0];
        assert_eq!((e.precision, e.recall), (1.0, 0.5));
        let n = &m.per_class[2];
        assert_eq!((n.precision, n.recall), (0.5, 1.0));
    }
}
