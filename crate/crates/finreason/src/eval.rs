//! Dataset ingestion in the public record shape plus the two headline
//! metrics: execution accuracy (predicted program runs to the stored
//! answer) and program accuracy (predicted program is symbolically
//! equivalent to the gold program).
//!
//! Both metrics average over every dataset record; records without a
//! prediction count as wrong. A prediction that fails to parse or
//! execute scores as incorrect, never as a harness error.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::dsl::{parse_financial_number, parse_program};
use crate::equivalence::programs_equivalent;
use crate::executor::{compare_answers, execute_program, Answer, FinTable, Tolerances};
use crate::fusion::RecordId;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("record {index}: {reason}")]
    SchemaError { index: usize, reason: String },
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

/// One question record: context sentences, the table, the question, the
/// gold program and its stored answer, and the gold supporting-fact ids.
#[derive(Debug, Clone)]
pub struct DatasetRecord {
    pub id: String,
    pub pre_text: Vec<String>,
    pub post_text: Vec<String>,
    pub table: FinTable,
    pub question: String,
    pub gold_program: String,
    pub exe_ans: Answer,
    pub gold_inds: BTreeSet<String>,
}

impl RecordId for DatasetRecord {
    fn record_id(&self) -> &str {
        &self.id
    }
}

/// All fact ids of a record: `text_<i>` over pre_text then post_text
/// sentences (one running zero-based index), then `table_<r>` over data
/// rows. This is the join key convention with retriever score maps.
pub fn fact_ids(record: &DatasetRecord) -> Vec<String> {
    let sentences = record.pre_text.len() + record.post_text.len();
    let mut ids: Vec<String> = (0..sentences).map(|i| format!("text_{i}")).collect();
    ids.extend((0..record.table.rows.len()).map(|r| format!("table_{r}")));
    ids
}

/// A predicted program for one record id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub program: String,
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct RawRecord {
    id: Option<String>,
    #[serde(default)]
    pre_text: Vec<String>,
    #[serde(default)]
    post_text: Vec<String>,
    table: Option<Vec<Vec<String>>>,
    qa: Option<RawQa>,
}

#[derive(Deserialize)]
struct RawQa {
    question: Option<String>,
    program: Option<String>,
    exe_ans: Option<Value>,
    gold_inds: Option<Value>,
}

fn answer_from_value(value: &Value) -> Result<Answer, String> {
    match value {
        Value::Number(n) => n
            .as_f64()
            .filter(|v| v.is_finite())
            .map(Answer::Numeric)
            .ok_or_else(|| format!("exe_ans {n} is not a finite number")),
        Value::Bool(b) => Ok(Answer::Boolean(*b)),
        Value::String(s) => {
            let lower = s.trim().to_ascii_lowercase();
            match lower.as_str() {
                "yes" | "true" => Ok(Answer::Boolean(true)),
                "no" | "false" => Ok(Answer::Boolean(false)),
                _ => parse_financial_number(s)
                    .map(Answer::Numeric)
                    .map_err(|e| format!("exe_ans `{s}` is neither yes/no nor a number: {e}")),
            }
        }
        other => Err(format!("exe_ans has unsupported JSON type: {other}")),
    }
}

fn gold_inds_from_value(value: Option<&Value>) -> Result<BTreeSet<String>, String> {
    match value {
        None | Some(Value::Null) => Ok(BTreeSet::new()),
        // Public files store gold_inds either as a list of fact ids or as
        // an object keyed by fact id.
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| format!("gold_inds entry {v} is not a string"))
            })
            .collect(),
        Some(Value::Object(map)) => Ok(map.keys().cloned().collect()),
        Some(other) => Err(format!("gold_inds has unsupported JSON type: {other}")),
    }
}

fn validate_record(index: usize, raw: RawRecord) -> Result<DatasetRecord, EvalError> {
    let fail = |reason: String| EvalError::SchemaError { index, reason };
    let id = raw
        .id
        .filter(|s| !s.trim().is_empty())
        .ok_or_else(|| fail("missing or empty `id`".to_string()))?;
    let table_rows = raw
        .table
        .ok_or_else(|| fail("missing `table`".to_string()))?;
    let qa = raw.qa.ok_or_else(|| fail("missing `qa` block".to_string()))?;
    let question = qa
        .question
        .ok_or_else(|| fail("missing `qa.question`".to_string()))?;
    let gold_program = qa
        .program
        .ok_or_else(|| fail("missing `qa.program`".to_string()))?;
    parse_program(&gold_program)
        .map_err(|e| fail(format!("gold program does not parse: {e}")))?;
    let exe_ans = qa
        .exe_ans
        .as_ref()
        .ok_or_else(|| fail("missing `qa.exe_ans`".to_string()))?;
    let exe_ans = answer_from_value(exe_ans).map_err(fail)?;
    let gold_inds = gold_inds_from_value(qa.gold_inds.as_ref()).map_err(fail)?;
    Ok(DatasetRecord {
        id,
        pre_text: raw.pre_text,
        post_text: raw.post_text,
        table: FinTable::from_raw_rows(&table_rows),
        question,
        gold_program,
        exe_ans,
        gold_inds,
    })
}

/// Loads and validates a JSON-array dataset file. Malformed records are
/// reported with their array index.
pub fn load_dataset(path: &Path) -> Result<Vec<DatasetRecord>, EvalError> {
    let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let raw: Vec<RawRecord> = serde_json::from_str(&text).map_err(|source| EvalError::Json {
        path: path.display().to_string(),
        source,
    })?;
    let mut seen = BTreeSet::new();
    let mut records = Vec::with_capacity(raw.len());
    for (index, raw_record) in raw.into_iter().enumerate() {
        let record = validate_record(index, raw_record)?;
        if !seen.insert(record.id.clone()) {
            return Err(EvalError::SchemaError {
                index,
                reason: format!("duplicate id `{}`", record.id),
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Loads a predictions file: a JSON array of `{id, program}`.
pub fn load_predictions(path: &Path) -> Result<Vec<PredictionRecord>, EvalError> {
    let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| EvalError::Json {
        path: path.display().to_string(),
        source,
    })
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Comparison tolerances plus the optional percent-leniency probe, which
/// also accepts an answer off by a factor of exactly 100 in either
/// direction. Strict comparison is the default.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    pub tolerances: Tolerances,
    pub percent_lenient: bool,
}

/// Per-record outcome in dataset order.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RecordVerdict {
    pub id: String,
    pub exec_correct: bool,
    pub prog_correct: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_note: Option<String>,
}

/// The evaluation report: both accuracies, the configuration they were
/// computed under, and one verdict per record.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalReport {
    pub execution_accuracy: f64,
    pub program_accuracy: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub percent_lenient: bool,
    pub records: Vec<RecordVerdict>,
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn answers_match(pred: &Answer, gold: &Answer, opts: &EvalOptions) -> bool {
    let strict = |p: &Answer| compare_answers(p, gold, opts.tolerances).unwrap_or(false);
    if strict(pred) {
        return true;
    }
    if opts.percent_lenient {
        if let Answer::Numeric(v) = pred {
            return strict(&Answer::Numeric(v * 100.0)) || strict(&Answer::Numeric(v / 100.0));
        }
    }
    false
}

impl EvalReport {
    /// Counts of exec-correct and prog-correct records.
    pub fn counts(&self) -> (usize, usize) {
        let exec = self.records.iter().filter(|r| r.exec_correct).count();
        let prog = self.records.iter().filter(|r| r.prog_correct).count();
        (exec, prog)
    }

    /// Plain-text summary, one metric per line.
    pub fn summary(&self) -> String {
        let (exec, prog) = self.counts();
        let total = self.records.len();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "execution accuracy {:.6} ({exec}/{total})",
            self.execution_accuracy
        );
        let _ = writeln!(
            out,
            "program accuracy   {:.6} ({prog}/{total})",
            self.program_accuracy
        );
        out
    }
}

/// Scores predictions against the dataset. Every dataset record yields a
/// verdict; a missing, unparseable, or failing prediction is simply
/// wrong. When one id appears twice in `predictions`, the first entry
/// wins. An empty dataset reports both accuracies as 0.
pub fn evaluate(
    dataset: &[DatasetRecord],
    predictions: &[PredictionRecord],
    opts: &EvalOptions,
) -> EvalReport {
    let mut by_id: BTreeMap<&str, &str> = BTreeMap::new();
    for p in predictions {
        by_id.entry(&p.id).or_insert(&p.program);
    }

    let mut records = Vec::with_capacity(dataset.len());
    for record in dataset {
        let gold = parse_program(&record.gold_program)
            .expect("gold programs are validated at load time");
        let mut verdict = RecordVerdict {
            id: record.id.clone(),
            exec_correct: false,
            prog_correct: false,
            error_note: None,
        };
        match by_id.get(record.id.as_str()) {
            None => verdict.error_note = Some("no prediction".to_string()),
            Some(text) => match parse_program(text) {
                Err(e) => verdict.error_note = Some(format!("prediction does not parse: {e}")),
                Ok(pred) => {
                    verdict.prog_correct = programs_equivalent(&pred, &gold);
                    match execute_program(&pred, &record.table) {
                        Err(e) => {
                            verdict.error_note = Some(format!("prediction fails to execute: {e}"))
                        }
                        Ok(answer) => {
                            verdict.exec_correct =
                                answers_match(&answer, &record.exe_ans, opts);
                        }
                    }
                }
            },
        }
        records.push(verdict);
    }

    let total = dataset.len();
    let (exec, prog) = records.iter().fold((0usize, 0usize), |(e, p), r| {
        (e + r.exec_correct as usize, p + r.prog_correct as usize)
    });
    let ratio = |count: usize| {
        if total == 0 {
            0.0
        } else {
            round6(count as f64 / total as f64)
        }
    };
    EvalReport {
        execution_accuracy: ratio(exec),
        program_accuracy: ratio(prog),
        abs_tol: opts.tolerances.abs_tol,
        rel_tol: opts.tolerances.rel_tol,
        percent_lenient: opts.percent_lenient,
        records,
    }
}

// ---------------------------------------------------------------------------
// Gold self-check
// ---------------------------------------------------------------------------

/// One record whose gold program fails to reproduce its stored answer.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GoldMismatch {
    pub id: String,
    pub computed: String,
    pub expected: String,
}

/// Consistency audit of dataset gold data.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SelfCheckReport {
    pub fraction: f64,
    pub total: usize,
    pub matched: usize,
    pub mismatches: Vec<GoldMismatch>,
}

/// Executes every gold program against its own table and reports the
/// fraction whose value matches the stored answer; mismatches list the
/// computed and expected values. An empty dataset reports 1.0 (nothing
/// is inconsistent).
pub fn gold_self_check(dataset: &[DatasetRecord], tolerances: Tolerances) -> SelfCheckReport {
    let opts = EvalOptions {
        tolerances,
        percent_lenient: false,
    };
    let mut matched = 0;
    let mut mismatches = Vec::new();
    for record in dataset {
        let gold = parse_program(&record.gold_program)
            .expect("gold programs are validated at load time");
        match execute_program(&gold, &record.table) {
            Ok(answer) if answers_match(&answer, &record.exe_ans, &opts) => matched += 1,
            Ok(answer) => mismatches.push(GoldMismatch {
                id: record.id.clone(),
                computed: answer.to_string(),
                expected: record.exe_ans.to_string(),
            }),
            Err(e) => mismatches.push(GoldMismatch {
                id: record.id.clone(),
                computed: format!("error: {e}"),
                expected: record.exe_ans.to_string(),
            }),
        }
    }
    let total = dataset.len();
    let fraction = if total == 0 {
        1.0
    } else {
        round6(matched as f64 / total as f64)
    };
    SelfCheckReport {
        fraction,
        total,
        matched,
        mismatches,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn strs(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn record(
        id: &str,
        gold: &str,
        ans: Answer,
        table_rows: &[(&str, &[&str])],
    ) -> DatasetRecord {
        let mut raw = vec![strs(&["", "col"])];
        for (name, cells) in table_rows {
            let mut row = vec![name.to_string()];
            row.extend(cells.iter().map(|c| c.to_string()));
            raw.push(row);
        }
        DatasetRecord {
            id: id.to_string(),
            pre_text: strs(&["first sentence.", "second sentence."]),
            post_text: strs(&["closing sentence."]),
            table: FinTable::from_raw_rows(&raw),
            question: "what changed?".to_string(),
            gold_program: gold.to_string(),
            exe_ans: ans,
            gold_inds: BTreeSet::new(),
        }
    }

    fn prediction(id: &str, program: &str) -> PredictionRecord {
        PredictionRecord {
            id: id.to_string(),
            program: program.to_string(),
        }
    }

    /// Four records with known verdicts: exec 3/4, prog 2/4.
    fn mini_dataset() -> (Vec<DatasetRecord>, Vec<PredictionRecord>) {
        let dataset = vec![
            record("r1", "add(1, 2)", Answer::Numeric(3.0), &[]),
            record(
                "r2",
                "table-average(net revenue, none)",
                Answer::Numeric(4.0),
                &[("net revenue", &["$2", "4", "6"] as &[&str])],
            ),
            record("r3", "add(4, 2)", Answer::Numeric(6.0), &[]),
            record("r4", "greater(5, 3)", Answer::Boolean(true), &[]),
        ];
        let predictions = vec![
            prediction("r1", "add(2, 1)"),
            prediction("r2", "table-average(net revenue, none)"),
            prediction("r3", "multiply(3, 2)"),
            prediction("r4", "greater(3, 5)"),
        ];
        (dataset, predictions)
    }

    #[test]
    fn mini_dataset_scores_exactly() {
        let (dataset, predictions) = mini_dataset();
        let report = evaluate(&dataset, &predictions, &EvalOptions::default());
        assert_eq!(report.execution_accuracy, 0.75);
        assert_eq!(report.program_accuracy, 0.5);
        let verdicts: Vec<(bool, bool)> = report
            .records
            .iter()
            .map(|r| (r.exec_correct, r.prog_correct))
            .collect();
        assert_eq!(
            verdicts,
            vec![(true, true), (true, true), (true, false), (false, false)]
        );
    }

    #[test]
    fn gold_as_prediction_gives_perfect_program_accuracy() {
        let (dataset, _) = mini_dataset();
        let gold_preds: Vec<PredictionRecord> = dataset
            .iter()
            .map(|r| prediction(&r.id, &r.gold_program))
            .collect();
        let report = evaluate(&dataset, &gold_preds, &EvalOptions::default());
        assert_eq!(report.program_accuracy, 1.0);
        let self_check = gold_self_check(&dataset, Tolerances::default());
        assert_eq!(report.execution_accuracy, self_check.fraction);
    }

    #[test]
    fn empty_predictions_score_zero() {
        let (dataset, _) = mini_dataset();
        let report = evaluate(&dataset, &[], &EvalOptions::default());
        assert_eq!(report.execution_accuracy, 0.0);
        assert_eq!(report.program_accuracy, 0.0);
        assert!(report
            .records
            .iter()
            .all(|r| r.error_note.as_deref() == Some("no prediction")));
    }

    #[test]
    fn missing_prediction_never_raises_accuracy() {
        let (dataset, predictions) = mini_dataset();
        let full = evaluate(&dataset, &predictions, &EvalOptions::default());
        let partial = evaluate(&dataset, &predictions[..3], &EvalOptions::default());
        assert!(partial.execution_accuracy <= full.execution_accuracy);
        assert!(partial.program_accuracy <= full.program_accuracy);
    }

    #[test]
    fn unparseable_and_failing_predictions_are_wrong_not_fatal() {
        let dataset = vec![record("r1", "add(1, 2)", Answer::Numeric(3.0), &[])];
        for bad in ["add(1", "divide(1, 0)", "table-sum(missing row, none)"] {
            let report = evaluate(&dataset, &[prediction("r1", bad)], &EvalOptions::default());
            assert!(!report.records[0].exec_correct, "{bad} should not pass");
            assert!(report.records[0].error_note.is_some(), "{bad} should carry a note");
        }
    }

    #[test]
    fn percent_leniency_is_opt_in() {
        let dataset = vec![record("r1", "divide(141, 1000)", Answer::Numeric(14.1), &[])];
        let preds = vec![prediction("r1", "divide(141, 1000)")];
        let strict = evaluate(&dataset, &preds, &EvalOptions::default());
        assert_eq!(strict.execution_accuracy, 0.0);

        let lenient = evaluate(
            &dataset,
            &preds,
            &EvalOptions {
                percent_lenient: true,
                ..EvalOptions::default()
            },
        );
        assert_eq!(lenient.execution_accuracy, 1.0);
    }

    #[test]
    fn self_check_reports_mismatches_with_values() {
        let mut dataset = vec![
            record("ok1", "add(1, 2)", Answer::Numeric(3.0), &[]),
            record("ok2", "subtract(9, 4)", Answer::Numeric(5.0), &[]),
            record("off", "add(1, 2)", Answer::Numeric(4.0), &[]),
        ];
        let report = gold_self_check(&dataset, Tolerances::default());
        assert_eq!(report.total, 3);
        assert_eq!(report.matched, 2);
        assert!((report.fraction - 2.0 / 3.0).abs() < 1e-6);
        assert_eq!(report.mismatches.len(), 1);
        assert_eq!(report.mismatches[0].id, "off");
        assert_eq!(report.mismatches[0].computed, "3");
        assert_eq!(report.mismatches[0].expected, "4");

        dataset.pop();
        assert_eq!(gold_self_check(&dataset, Tolerances::default()).fraction, 1.0);
        assert_eq!(gold_self_check(&[], Tolerances::default()).fraction, 1.0);
    }

    #[test]
    fn reports_serialize_deterministically() {
        let (dataset, predictions) = mini_dataset();
        let opts = EvalOptions::default();
        let a = serde_json::to_string_pretty(&evaluate(&dataset, &predictions, &opts)).unwrap();
        let b = serde_json::to_string_pretty(&evaluate(&dataset, &predictions, &opts)).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("\"execution_accuracy\": 0.75"));
        assert!(a.contains("\"program_accuracy\": 0.5"));

        let report = evaluate(&dataset, &predictions, &opts);
        assert!(report.summary().contains("execution accuracy 0.750000 (3/4)"));
        assert!(report.summary().contains("program accuracy   0.500000 (2/4)"));
    }

    #[test]
    fn fact_id_convention_spans_text_then_table() {
        let rec = record(
            "r",
            "add(1, 2)",
            Answer::Numeric(3.0),
            &[("a", &["1"] as &[&str]), ("b", &["2"])],
        );
        assert_eq!(
            fact_ids(&rec),
            strs(&["text_0", "text_1", "text_2", "table_0", "table_1"])
        );
    }

    // -- file loading -------------------------------------------------------

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    const SAMPLE: &str = r#"[
      {
        "id": "q1",
        "pre_text": ["revenue rose."],
        "post_text": [],
        "table": [["", "2015", "2016"], ["net revenue", "5735", "5829"]],
        "qa": {
          "question": "what was the change?",
          "program": "subtract(5829, 5735)",
          "exe_ans": 94.0,
          "gold_inds": ["text_0", "table_0"]
        }
      },
      {
        "id": "q2",
        "table": [["", "v"], ["cost", "10"]],
        "qa": {
          "question": "total cost?",
          "program": "table-sum(cost, none)",
          "exe_ans": "10",
          "gold_inds": { "table_0": "cost 10" }
        }
      },
      {
        "id": "q3",
        "table": [["", "v"]],
        "qa": {
          "question": "is five bigger than three?",
          "program": "greater(5, 3)",
          "exe_ans": "yes"
        }
      },
      {
        "id": "q4",
        "table": [["", "v"]],
        "qa": {
          "question": "ratio?",
          "program": "divide(1, 4)",
          "exe_ans": "25%"
        }
      }
    ]"#;

    #[test]
    fn loads_a_well_formed_sample() {
        let f = write_temp(SAMPLE);
        let records = load_dataset(f.path()).unwrap();
        assert_eq!(records.len(), 4);
        assert_eq!(records[0].id, "q1");
        assert_eq!(records[0].exe_ans, Answer::Numeric(94.0));
        assert_eq!(
            records[0].gold_inds,
            ["text_0", "table_0"].iter().map(|s| s.to_string()).collect()
        );
        assert_eq!(records[1].exe_ans, Answer::Numeric(10.0));
        assert!(records[1].gold_inds.contains("table_0"));
        assert_eq!(records[2].exe_ans, Answer::Boolean(true));
        assert_eq!(records[3].exe_ans, Answer::Numeric(25.0));

        // The loaded sample is self-consistent except q4, whose stored
        // answer keeps the percent convention (0.25 computed vs 25).
        let check = gold_self_check(&records, Tolerances::default());
        assert_eq!(check.matched, 3);
    }

    #[test]
    fn schema_errors_carry_the_record_index() {
        let f = write_temp(r#"[{"id": "a", "table": [["",""]]}]"#);
        let err = load_dataset(f.path()).unwrap_err();
        assert!(matches!(err, EvalError::SchemaError { index: 0, .. }));
        assert!(err.to_string().contains("qa"));

        let f = write_temp(
            r#"[
              {"id": "a", "table": [["",""]], "qa": {"question": "?", "program": "add(1", "exe_ans": 1}}
            ]"#,
        );
        let err = load_dataset(f.path()).unwrap_err();
        assert!(err.to_string().contains("does not parse"));

        let two = SAMPLE.replace("\"q2\"", "\"q1\"");
        let f = write_temp(&two);
        let err = load_dataset(f.path()).unwrap_err();
        assert!(matches!(err, EvalError::SchemaError { index: 1, .. }));
        assert!(err.to_string().contains("duplicate id"));
    }

    #[test]
    fn empty_array_loads_as_empty_dataset() {
        let f = write_temp("[]");
        assert!(load_dataset(f.path()).unwrap().is_empty());
        let missing = load_dataset(Path::new("/nonexistent/nowhere.json"));
        assert!(matches!(missing, Err(EvalError::Io { .. })));
        let f = write_temp("{not json");
        assert!(matches!(load_dataset(f.path()), Err(EvalError::Json { .. })));
    }

    #[test]
    fn predictions_load_from_json_array() {
        let f = write_temp(r#"[{"id": "q1", "program": "add(1, 2)"}]"#);
        let preds = load_predictions(f.path()).unwrap();
        assert_eq!(preds.len(), 1);
        assert_eq!(preds[0].id, "q1");
    }
}
