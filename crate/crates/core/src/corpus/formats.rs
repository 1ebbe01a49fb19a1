//! Readers and writers for the canonical JSONL format and the adapters for
//! the Wikipedia personal-attack and ASKfm cyberbullying annotation files.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use super::{aggregate_label, AnnotationRecord, CanonicalRecord, Dataset};
use crate::{DocId, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    CanonicalJsonl,
    WikipediaAttack,
    Askfm,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "canonical-jsonl" | "canonical" | "jsonl" => Ok(Format::CanonicalJsonl),
            "wikipedia-attack" | "wikipedia" => Ok(Format::WikipediaAttack),
            "askfm" => Ok(Format::Askfm),
            other => Err(Error::InvalidConfig(format!(
                "unknown dataset format `{other}`"
            ))),
        }
    }
}

/// Loads and featurizes a dataset. The dataset is named after the file stem.
pub fn load_dataset(path: &Path, format: Format) -> Result<Dataset> {
    let records = match format {
        Format::CanonicalJsonl => {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            read_canonical(BufReader::new(file))?
        }
        Format::WikipediaAttack => wikipedia_records(path)?,
        Format::Askfm => askfm_records(path)?,
    };
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_owned());
    Dataset::from_records(name, records)
}

/// Parses canonical JSONL. Blank lines are skipped; errors carry 1-based line numbers.
pub fn read_canonical<R: BufRead>(reader: R) -> Result<Vec<CanonicalRecord>> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::schema(i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CanonicalRecord =
            serde_json::from_str(&line).map_err(|e| Error::schema(i + 1, e.to_string()))?;
        if let Some((topic, v)) = rec.labels.iter().find(|(_, &v)| v > 1) {
            return Err(Error::schema(
                i + 1,
                format!("label for topic `{topic}` must be 0 or 1, got {v}"),
            ));
        }
        records.push(rec);
    }
    if let Some(first) = records.first() {
        for (line, rec) in records.iter().enumerate().skip(1) {
            if !rec.labels.keys().eq(first.labels.keys()) {
                return Err(Error::schema(
                    line + 1,
                    format!(
                        "document {} has a different topic set than line 1",
                        rec.doc_id
                    ),
                ));
            }
        }
    }
    Ok(records)
}

/// Writes one JSON object per line, LF-terminated.
pub fn write_canonical<W: Write>(records: &[CanonicalRecord], mut out: W) -> Result<()> {
    for rec in records {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
    }
    out.flush().map_err(|e| Error::io("<output>", e))
}

/// Annotator classes for the Wikipedia personal-attack corpus.
pub const WIKIPEDIA_CLASSES: [&str; 5] = [
    "Recipient Target",
    "Third Party Target",
    "Quotation Attack",
    "Other Attack",
    "No Attack",
];

const WIKIPEDIA_ATTACKS: [&str; 4] = [
    "Recipient Target",
    "Third Party Target",
    "Quotation Attack",
    "Other Attack",
];

const WIKIPEDIA_THRESHOLD: usize = 5;

const WIKIPEDIA_COMMENTS: &str = "attack_annotated_comments.tsv";
const WIKIPEDIA_ANNOTATIONS: &str = "attack_annotations.tsv";

fn wikipedia_topics() -> [(&'static str, &'static [&'static str]); 4] {
    [
        ("Recipient Target", &WIKIPEDIA_ATTACKS[0..1]),
        ("Third Party Target", &WIKIPEDIA_ATTACKS[1..2]),
        ("Other Attack", &WIKIPEDIA_ATTACKS[3..4]),
        ("Attack", &WIKIPEDIA_ATTACKS),
    ]
}

fn tsv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(true)
        .from_reader(file))
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::schema(1, format!("{}: missing column `{name}`", path.display())))
}

fn line_of(rec: &csv::StringRecord) -> usize {
    rec.position().map_or(0, |p| p.line() as usize)
}

/// Accepts plain integers and integral floats such as `37675.0`.
fn parse_id(s: &str, line: usize) -> Result<DocId> {
    let s = s.trim();
    if let Ok(id) = s.parse::<DocId>() {
        return Ok(id);
    }
    match s.parse::<f64>() {
        Ok(f) if f >= 0.0 && f.fract() == 0.0 && f < 2f64.powi(53) => Ok(f as DocId),
        _ => Err(Error::schema(line, format!("invalid document id `{s}`"))),
    }
}

fn parse_flag(s: &str, line: usize) -> Result<bool> {
    match s.trim() {
        "0" | "0.0" => Ok(false),
        "1" | "1.0" => Ok(true),
        other => Err(Error::schema(
            line,
            format!("expected 0/1 flag, got `{other}`"),
        )),
    }
}

/// Reads the Wikipedia personal-attack release from a directory holding
/// `attack_annotated_comments.tsv` and `attack_annotations.tsv`.
///
/// Each annotation row is reduced to one of [`WIKIPEDIA_CLASSES`]; with
/// several attack flags set the first of recipient, third party, quotation,
/// other wins. A document is positive for a topic when at least five
/// annotators chose one of its classes. Quotation attacks count only toward
/// the union `Attack` topic.
pub fn wikipedia_records(dir: &Path) -> Result<Vec<CanonicalRecord>> {
    let comments_path = dir.join(WIKIPEDIA_COMMENTS);
    let annotations_path = dir.join(WIKIPEDIA_ANNOTATIONS);

    let mut texts: BTreeMap<DocId, String> = BTreeMap::new();
    let mut reader = tsv_reader(&comments_path)?;
    let headers = reader.headers()?.clone();
    let id_col = column(&headers, "rev_id", &comments_path)?;
    let text_col = column(&headers, "comment", &comments_path)?;
    for rec in reader.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let id = parse_id(rec.get(id_col).unwrap_or(""), line)?;
        let text = rec
            .get(text_col)
            .ok_or_else(|| Error::schema(line, "missing comment field"))?
            .replace("NEWLINE_TOKEN", "\n")
            .replace("TAB_TOKEN", "\t");
        if texts.insert(id, text).is_some() {
            return Err(Error::schema(line, format!("duplicate rev_id {id}")));
        }
    }

    let mut votes: HashMap<DocId, Vec<String>> = HashMap::new();
    let mut reader = tsv_reader(&annotations_path)?;
    let headers = reader.headers()?.clone();
    let id_col = column(&headers, "rev_id", &annotations_path)?;
    let flag_cols = [
        column(&headers, "recipient_attack", &annotations_path)?,
        column(&headers, "third_party_attack", &annotations_path)?,
        column(&headers, "quoting_attack", &annotations_path)?,
        column(&headers, "other_attack", &annotations_path)?,
    ];
    let attack_col = headers.iter().position(|h| h.trim() == "attack");
    for rec in reader.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let id = parse_id(rec.get(id_col).unwrap_or(""), line)?;
        if !texts.contains_key(&id) {
            return Err(Error::schema(
                line,
                format!("annotation for unknown rev_id {id}"),
            ));
        }
        let mut class = "No Attack";
        for (col, name) in flag_cols.iter().zip(WIKIPEDIA_ATTACKS) {
            if parse_flag(rec.get(*col).unwrap_or(""), line)? {
                class = name;
                break;
            }
        }
        if class == "No Attack" {
            if let Some(col) = attack_col {
                if parse_flag(rec.get(col).unwrap_or(""), line)? {
                    class = "Other Attack";
                }
            }
        }
        votes.entry(id).or_default().push(class.to_owned());
    }

    let topics = wikipedia_topics();
    texts
        .into_iter()
        .map(|(doc_id, text)| {
            let labels = votes.remove(&doc_id).unwrap_or_default();
            if labels.is_empty() {
                return Err(Error::InconsistentState(format!(
                    "rev_id {doc_id} has no annotations"
                )));
            }
            let n = labels.len();
            let record = AnnotationRecord::new(doc_id, labels, n)?;
            let mut topic_labels = BTreeMap::new();
            for (topic, positive) in topics {
                let pos =
                    aggregate_label(&record, &WIKIPEDIA_CLASSES, positive, WIKIPEDIA_THRESHOLD)?;
                topic_labels.insert(topic.to_owned(), u8::from(pos));
            }
            Ok(CanonicalRecord {
                doc_id,
                text,
                labels: topic_labels,
            })
        })
        .collect()
}

/// Participant roles annotated on each side of an ASKfm pair.
pub const ASKFM_ROLES: [&str; 4] = [
    "harasser",
    "victim",
    "bystander_defender",
    "bystander_assistant",
];

const ASKFM_FILE: &str = "askfm_pairs.csv";
const ASKFM_FIXED: [&str; 5] = [
    "pair_id",
    "utterance",
    "response",
    "poster_role",
    "responder_role",
];

fn normalize_role(s: &str) -> String {
    s.trim().to_lowercase().replace(['-', ' '], "_")
}

/// Reads ASKfm pairs from a CSV file (or a directory containing
/// `askfm_pairs.csv`) with columns
/// `pair_id,utterance,response,poster_role,responder_role` followed by one
/// 0/1 column per textual expression type.
///
/// Produces a `poster_<role>` and `responder_<role>` topic for each of
/// [`ASKFM_ROLES`] plus one topic per expression column. With the 15
/// expression types of the public release that is 23 topics. The document
/// text is the utterance and response joined by a newline.
pub fn askfm_records(path: &Path) -> Result<Vec<CanonicalRecord>> {
    let path = if path.is_dir() {
        path.join(ASKFM_FILE)
    } else {
        path.to_path_buf()
    };
    let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    let fixed: Vec<usize> = ASKFM_FIXED
        .iter()
        .map(|name| column(&headers, name, &path))
        .collect::<Result<_>>()?;
    let expression_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| !fixed.contains(i))
        .map(|(i, h)| (i, h.trim().to_owned()))
        .collect();

    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let field = |i: usize| rec.get(fixed[i]).unwrap_or("");
        let doc_id = parse_id(field(0), line)?;
        let text = format!("{}\n{}", field(1), field(2));
        let mut labels = BTreeMap::new();
        for (side, col) in [("poster", 3), ("responder", 4)] {
            let role = normalize_role(field(col));
            let known = role.is_empty() || role == "none" || ASKFM_ROLES.contains(&role.as_str());
            if !known {
                return Err(Error::UnknownClass {
                    doc_id,
                    class: field(col).to_owned(),
                });
            }
            for r in ASKFM_ROLES {
                labels.insert(format!("{side}_{r}"), u8::from(role == r));
            }
        }
        for (col, name) in &expression_cols {
            let flag = parse_flag(rec.get(*col).unwrap_or(""), line)?;
            labels.insert(name.clone(), u8::from(flag));
        }
        records.push(CanonicalRecord {
            doc_id,
            text,
            labels,
        });
    }
    Ok(records)
}
