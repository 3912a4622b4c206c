use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Map, Value};

use super::run::{KindCounts, PerKind, RunMetrics};
use super::EvalError;
use crate::schema::RegionKind;

pub const ROW_NAMES: [&str; 10] = [
    "Element recovery rate",
    "Character recovery rate",
    "Mean IoU",
    "Median IoU",
    "Mean center offset (px)",
    "Mean CER / WER",
    "Frac. IoU ≥ 0.5",
    "Frac. IoU ≥ 0.75",
    "VLM extraction time (s)",
    "Slides API time (s)",
];

pub const COLUMN_NAMES: [&str; 3] = ["Text", "Image", "Overall / global"];

const COLUMN_KINDS: [Option<RegionKind>; 3] = [Some(RegionKind::Text), Some(RegionKind::Image), None];

/// Arithmetic mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    /// `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self { mean, std: var.sqrt(), n: values.len() })
    }

    fn to_json(self) -> Value {
        json!({ "mean": self.mean, "std": self.std, "n": self.n })
    }

    fn display(self, decimals: usize) -> String {
        format!("{:.*} ± {:.*}", decimals, self.mean, decimals, self.std)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Empty,
    Stat(MeanStd),
    Pair { cer: MeanStd, wer: MeanStd },
}

impl Cell {
    fn from_opt(stat: Option<MeanStd>) -> Self {
        stat.map_or(Cell::Empty, Cell::Stat)
    }

    pub fn stat(&self) -> Option<MeanStd> {
        match self {
            Cell::Stat(s) => Some(*s),
            _ => None,
        }
    }

    fn to_json(self) -> Value {
        match self {
            Cell::Empty => Value::Null,
            Cell::Stat(s) => s.to_json(),
            Cell::Pair { cer, wer } => json!({ "cer": cer.to_json(), "wer": wer.to_json() }),
        }
    }

    fn display(self, decimals: usize) -> String {
        match self {
            Cell::Empty => "--".to_owned(),
            Cell::Stat(s) => s.display(decimals),
            Cell::Pair { cer, wer } => format!("{} / {}", cer.display(decimals), wer.display(decimals)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub name: &'static str,
    /// One cell per entry of [`COLUMN_NAMES`].
    pub cells: [Cell; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub runs: usize,
    pub rows: Vec<ReportRow>,
    /// Threshold fractions over all matched elements of all runs.
    pub pooled_frac_iou_50: PerKind<f64>,
    pub pooled_frac_iou_75: PerKind<f64>,
    pub center_offset_norm: [Cell; 3],
    pub local_processing_s: Cell,
    pub per_run: Vec<RunMetrics>,
}

fn stat_over(runs: &[RunMetrics], f: impl Fn(&RunMetrics) -> Option<f64>) -> Option<MeanStd> {
    let values: Vec<f64> = runs.iter().filter_map(f).collect();
    MeanStd::of(&values)
}

fn per_kind_cells(runs: &[RunMetrics], f: impl Fn(&RunMetrics) -> PerKind<f64>, mask: [bool; 3]) -> [Cell; 3] {
    let mut cells = [Cell::Empty; 3];
    for (i, kind) in COLUMN_KINDS.iter().enumerate() {
        if mask[i] {
            cells[i] = Cell::from_opt(stat_over(runs, |r| f(r).get(*kind)));
        }
    }
    cells
}

fn pooled(runs: &[RunMetrics], hits: impl Fn(&RunMetrics) -> KindCounts) -> PerKind<f64> {
    let ratio = |kind: Option<RegionKind>| {
        let num: usize = runs.iter().map(|r| hits(r).get(kind)).sum();
        let den: usize = runs.iter().map(|r| r.counts.matched.get(kind)).sum();
        (den > 0).then(|| num as f64 / den as f64)
    };
    PerKind { text: ratio(COLUMN_KINDS[0]), image: ratio(COLUMN_KINDS[1]), overall: ratio(COLUMN_KINDS[2]) }
}

/// Mean ± std of every metric across runs, one row per metric and one column per region kind.
///
/// Runs with nothing of a kind are left out of that kind's statistics.
pub fn aggregate(runs: &[RunMetrics]) -> Result<AggregateReport, EvalError> {
    if runs.is_empty() {
        return Err(EvalError::NoRuns);
    }
    let all = [true; 3];
    let kinds_only = [true, true, false];
    let overall = |f: &dyn Fn(&RunMetrics) -> Option<f64>| [Cell::Empty, Cell::Empty, Cell::from_opt(stat_over(runs, f))];

    let cer_wer = match (stat_over(runs, |r| r.cer_mean), stat_over(runs, |r| r.wer_mean)) {
        (Some(cer), Some(wer)) => Cell::Pair { cer, wer },
        _ => Cell::Empty,
    };

    let cells: [[Cell; 3]; 10] = [
        per_kind_cells(runs, |r| r.element_recovery, all),
        [Cell::from_opt(stat_over(runs, |r| r.char_recovery)), Cell::Empty, Cell::Empty],
        per_kind_cells(runs, |r| r.iou_mean, kinds_only),
        per_kind_cells(runs, |r| r.iou_median, kinds_only),
        per_kind_cells(runs, |r| r.center_offset_mean_px, kinds_only),
        [cer_wer, Cell::Empty, Cell::Empty],
        per_kind_cells(runs, |r| r.frac_iou_50, all),
        per_kind_cells(runs, |r| r.frac_iou_75, all),
        overall(&|r| r.timings.vlm_extraction_s),
        overall(&|r| r.timings.slides_api_s),
    ];

    Ok(AggregateReport {
        runs: runs.len(),
        rows: ROW_NAMES.iter().zip(cells).map(|(name, cells)| ReportRow { name, cells }).collect(),
        pooled_frac_iou_50: pooled(runs, |r| r.counts.iou_ge_50),
        pooled_frac_iou_75: pooled(runs, |r| r.counts.iou_ge_75),
        center_offset_norm: per_kind_cells(runs, |r| r.center_offset_norm, all),
        local_processing_s: Cell::from_opt(stat_over(runs, |r| r.timings.local_processing_s)),
        per_run: runs.to_vec(),
    })
}

fn columns_json(cells: &[Cell; 3]) -> Value {
    let mut m = Map::new();
    for (name, cell) in COLUMN_NAMES.iter().zip(cells) {
        m.insert((*name).to_owned(), cell.to_json());
    }
    Value::Object(m)
}

fn per_kind_json(v: &PerKind<f64>) -> Value {
    let mut m = Map::new();
    for (name, kind) in COLUMN_NAMES.iter().zip(COLUMN_KINDS) {
        m.insert((*name).to_owned(), v.get(kind).map_or(Value::Null, Value::from));
    }
    Value::Object(m)
}

impl AggregateReport {
    pub fn row(&self, name: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn to_json(&self) -> Value {
        let mut metrics = Map::new();
        for row in &self.rows {
            metrics.insert(row.name.to_owned(), columns_json(&row.cells));
        }
        json!({
            "runs": self.runs,
            "columns": COLUMN_NAMES,
            "metrics": metrics,
            "global_pooled": {
                ROW_NAMES[6]: per_kind_json(&self.pooled_frac_iou_50),
                ROW_NAMES[7]: per_kind_json(&self.pooled_frac_iou_75),
            },
            "supplementary": {
                "Mean center offset (normalized)": columns_json(&self.center_offset_norm),
                "Local processing time (s)": self.local_processing_s.to_json(),
            },
            "per_run": self.per_run,
        })
    }

    /// Plain-text table with aligned columns.
    pub fn to_table(&self) -> String {
        let decimals = |name: &str| if name.contains("offset") { 1 } else { 3 };
        let mut grid: Vec<[String; 4]> = vec![[
            "Metric".to_owned(),
            COLUMN_NAMES[0].to_owned(),
            COLUMN_NAMES[1].to_owned(),
            COLUMN_NAMES[2].to_owned(),
        ]];
        for row in &self.rows {
            let d = decimals(row.name);
            grid.push([
                row.name.to_owned(),
                row.cells[0].display(d),
                row.cells[1].display(d),
                row.cells[2].display(d),
            ]);
        }
        let widths: Vec<usize> = (0..4).map(|c| grid.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for (i, r) in grid.iter().enumerate() {
            let mut line = String::new();
            for (c, cell) in r.iter().enumerate() {
                let pad = widths[c] - cell.chars().count();
                if c > 0 {
                    line.push_str("  ");
                }
                line.push_str(cell);
                line.extend(std::iter::repeat_n(' ', pad));
            }
            let _ = writeln!(out, "{}", line.trim_end());
            if i == 0 {
                let total = widths.iter().sum::<usize>() + 6;
                let _ = writeln!(out, "{}", "-".repeat(total));
            }
        }
        let _ = writeln!(out, "runs: {}", self.runs);
        out
    }
}
