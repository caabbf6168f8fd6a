//! Multivariate time-series panels: CSV ingestion, quarterly aggregation and
//! standard scaling.
//!
//! Values are stored column-wise (one vector per variable). Missing entries are
//! stored as `NaN` and flagged in the mask; nothing is imputed.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Quarterly,
    Monthly,
}

impl Frequency {
    fn periods_per_year(self) -> i64 {
        match self {
            Frequency::Quarterly => 4,
            Frequency::Monthly => 12,
        }
    }
}

/// A calendar period at quarterly or monthly granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Period {
    pub year: i32,
    /// Quarter (1..=4) or month (1..=12) depending on `freq`.
    pub sub: u32,
    pub freq: Frequency,
}

impl Period {
    pub fn quarter(year: i32, q: u32) -> Self {
        Period { year, sub: q, freq: Frequency::Quarterly }
    }

    pub fn month(year: i32, m: u32) -> Self {
        Period { year, sub: m, freq: Frequency::Monthly }
    }

    /// Parses `YYYYQn` for quarterly data, or `YYYY-MM` / `YYYY-MM-DD` for
    /// either frequency (the day is ignored; months map onto their quarter).
    pub fn parse(text: &str, freq: Frequency) -> std::result::Result<Self, String> {
        let s = text.trim();
        if let Some(pos) = s.find(['Q', 'q']) {
            if freq != Frequency::Quarterly {
                return Err(format!("quarterly label {s:?} in monthly data"));
            }
            let year: i32 = s[..pos].trim_end_matches('-').parse().map_err(|_| format!("bad year in {s:?}"))?;
            let q: u32 = s[pos + 1..].parse().map_err(|_| format!("bad quarter in {s:?}"))?;
            if !(1..=4).contains(&q) {
                return Err(format!("quarter out of range in {s:?}"));
            }
            return Ok(Period::quarter(year, q));
        }
        let mut parts = s.split('-');
        let year: i32 = parts
            .next()
            .filter(|p| p.len() == 4)
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| format!("unparseable date {s:?}"))?;
        let month: u32 = parts.next().and_then(|p| p.parse().ok()).ok_or_else(|| format!("unparseable date {s:?}"))?;
        if !(1..=12).contains(&month) {
            return Err(format!("month out of range in {s:?}"));
        }
        if let Some(day) = parts.next() {
            let d: u32 = day.parse().map_err(|_| format!("bad day in {s:?}"))?;
            if !(1..=31).contains(&d) {
                return Err(format!("day out of range in {s:?}"));
            }
        }
        if parts.next().is_some() {
            return Err(format!("unparseable date {s:?}"));
        }
        Ok(match freq {
            Frequency::Monthly => Period::month(year, month),
            Frequency::Quarterly => Period::quarter(year, (month - 1) / 3 + 1),
        })
    }

    /// Number of periods since year 0 at this period's frequency.
    pub fn ordinal(&self) -> i64 {
        self.year as i64 * self.freq.periods_per_year() + (self.sub as i64 - 1)
    }

    pub fn from_ordinal(ordinal: i64, freq: Frequency) -> Self {
        let per = freq.periods_per_year();
        Period { year: ordinal.div_euclid(per) as i32, sub: (ordinal.rem_euclid(per) + 1) as u32, freq }
    }

    pub fn next(&self) -> Self {
        Period::from_ordinal(self.ordinal() + 1, self.freq)
    }

    /// The quarter containing this period.
    pub fn to_quarter(&self) -> Self {
        match self.freq {
            Frequency::Quarterly => *self,
            Frequency::Monthly => Period::quarter(self.year, (self.sub - 1) / 3 + 1),
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.freq {
            Frequency::Quarterly => write!(f, "{}Q{}", self.year, self.sub),
            Frequency::Monthly => write!(f, "{}-{:02}", self.year, self.sub),
        }
    }
}

impl PartialOrd for Period {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Period {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.year, self.sub).cmp(&(other.year, other.sub))
    }
}

/// Aligned multivariate series with a contiguous time index.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    names: Vec<String>,
    index: Vec<Period>,
    columns: Vec<Vec<f64>>,
    mask: Vec<Vec<bool>>,
}

impl TimeSeriesPanel {
    /// Builds a panel from per-variable columns. `NaN` entries are treated as
    /// missing.
    pub fn new(names: Vec<String>, index: Vec<Period>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::Structure(format!("{} names but {} columns", names.len(), columns.len())));
        }
        let mut seen = std::collections::HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::Structure(format!("duplicate variable name {n:?}")));
            }
        }
        for (n, c) in names.iter().zip(&columns) {
            if c.len() != index.len() {
                return Err(Error::Structure(format!(
                    "column {n:?} has {} values, index has {}",
                    c.len(),
                    index.len()
                )));
            }
            if c.iter().any(|v| v.is_infinite()) {
                return Err(Error::Structure(format!("column {n:?} contains infinite values")));
            }
        }
        for w in index.windows(2) {
            if w[0].freq != w[1].freq {
                return Err(Error::Structure("mixed frequencies in index".into()));
            }
            if w[1].ordinal() != w[0].ordinal() + 1 {
                return Err(Error::Structure(format!("index not contiguous between {} and {}", w[0], w[1])));
            }
        }
        let mask = columns.iter().map(|c| c.iter().map(|v| v.is_nan()).collect()).collect();
        Ok(TimeSeriesPanel { names, index, columns, mask })
    }

    /// Convenience constructor for tests and synthetic data: quarterly index
    /// starting at 1970Q1.
    pub fn from_columns(names: &[&str], columns: Vec<Vec<f64>>) -> Result<Self> {
        let t = columns.first().map_or(0, Vec::len);
        let start = Period::quarter(1970, 1).ordinal();
        let index = (0..t as i64).map(|i| Period::from_ordinal(start + i, Frequency::Quarterly)).collect();
        Self::new(names.iter().map(|s| s.to_string()).collect(), index, columns)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index(&self) -> &[Period] {
        &self.index
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn frequency(&self) -> Option<Frequency> {
        self.index.first().map(|p| p.freq)
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn mask(&self) -> &[Vec<bool>] {
        &self.mask
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column_by_name(&self, name: &str) -> Result<&[f64]> {
        self.var_index(name).map(|i| self.column(i)).ok_or_else(|| Error::Config(format!("unknown variable {name:?}")))
    }

    pub fn is_fully_observed(&self) -> bool {
        self.mask.iter().all(|m| m.iter().all(|&x| !x))
    }

    /// Longest run of rows with no missing entry, as a half-open row range.
    pub fn longest_complete_span(&self) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize)> = None;
        let mut start = None;
        for t in 0..=self.len() {
            let complete = t < self.len() && self.mask.iter().all(|m| !m[t]);
            match (complete, start) {
                (true, None) => start = Some(t),
                (false, Some(s)) => {
                    if best.is_none_or(|(a, b)| t - s > b - a) {
                        best = Some((s, t));
                    }
                    start = None;
                }
                _ => {}
            }
        }
        best
    }

    /// Rows `start..end` as a new panel.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.len() {
            return Err(Error::Config(format!("row range {start}..{end} outside panel of length {}", self.len())));
        }
        Self::new(
            self.names.clone(),
            self.index[start..end].to_vec(),
            self.columns.iter().map(|c| c[start..end].to_vec()).collect(),
        )
    }

    /// Restricts to the longest fully observed span.
    pub fn complete_span(&self) -> Result<(Self, (usize, usize))> {
        let span =
            self.longest_complete_span().ok_or_else(|| Error::SampleSize("panel has no fully observed rows".into()))?;
        Ok((self.slice_rows(span.0, span.1)?, span))
    }

    /// Selects variables by name, in the order given.
    pub fn select(&self, names: &[&str]) -> Result<Self> {
        let mut cols = Vec::with_capacity(names.len());
        for n in names {
            cols.push(self.column_by_name(n)?.to_vec());
        }
        Self::new(names.iter().map(|s| s.to_string()).collect(), self.index.clone(), cols)
    }

    pub fn to_json(&self) -> PanelJson {
        PanelJson {
            names: self.names.clone(),
            index: self.index.iter().map(|p| p.to_string()).collect(),
            values: (0..self.len())
                .map(|t| self.columns.iter().map(|c| if c[t].is_nan() { None } else { Some(c[t]) }).collect())
                .collect(),
        }
    }

    pub fn from_json(json: &PanelJson, freq: Frequency) -> Result<Self> {
        let index = json
            .index
            .iter()
            .enumerate()
            .map(|(i, s)| Period::parse(s, freq).map_err(|m| Error::Parse { row: i + 1, message: m }))
            .collect::<Result<Vec<_>>>()?;
        let mut columns = vec![Vec::with_capacity(index.len()); json.names.len()];
        for (r, row) in json.values.iter().enumerate() {
            if row.len() != json.names.len() {
                return Err(Error::Structure(format!("row {} has {} values", r + 1, row.len())));
            }
            for (c, v) in row.iter().enumerate() {
                columns[c].push(v.unwrap_or(f64::NAN));
            }
        }
        Self::new(json.names.clone(), index, columns)
    }
}

/// JSON export shape of a panel; missing values serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelJson {
    pub names: Vec<String>,
    pub index: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

fn parse_cell(cell: &str) -> Option<f64> {
    let c = cell.trim();
    if c.is_empty() || c == "." || c.eq_ignore_ascii_case("na") || c.eq_ignore_ascii_case("nan") {
        return Some(f64::NAN);
    }
    c.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Loads a CSV panel. Columns keep header order (minus the date column) and
/// rows are sorted by date. `date_column = None` uses the first column.
pub fn load_csv(path: impl AsRef<Path>, date_column: Option<&str>, freq: Frequency) -> Result<TimeSeriesPanel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    parse_csv(&text, date_column, freq)
}

/// Same as [`load_csv`] on in-memory text.
pub fn parse_csv(text: &str, date_column: Option<&str>, freq: Frequency) -> Result<TimeSeriesPanel> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Structure(format!("cannot read header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(Error::Structure("missing header row".into()));
    }
    let date_idx = match date_column {
        None => 0,
        Some(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Structure(format!("date column {name:?} not in header")))?,
    };
    let names: Vec<String> =
        header.iter().enumerate().filter(|(i, _)| *i != date_idx).map(|(_, h)| h.clone()).collect();

    let mut rows: Vec<(Period, usize, Vec<f64>)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Structure(format!("row {row}: {e}")))?;
        if record.len() != header.len() {
            return Err(Error::Structure(format!(
                "ragged row {row}: {} fields, header has {}",
                record.len(),
                header.len()
            )));
        }
        let period = Period::parse(&record[date_idx], freq).map_err(|m| Error::Parse { row, message: m })?;
        let mut values = Vec::with_capacity(names.len());
        for (j, cell) in record.iter().enumerate() {
            if j == date_idx {
                continue;
            }
            let v = parse_cell(cell).ok_or_else(|| Error::Parse {
                row,
                message: format!("non-numeric value {cell:?} in column {:?}", header[j]),
            })?;
            values.push(v);
        }
        rows.push((period, row, values));
    }
    rows.sort_by_key(|r| r.0);
    for w in rows.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::Duplicate { label: w[1].0.to_string(), row: w[1].1.max(w[0].1) });
        }
    }
    let index: Vec<Period> = rows.iter().map(|r| r.0).collect();
    let mut columns = vec![Vec::with_capacity(rows.len()); names.len()];
    for (_, _, vals) in &rows {
        for (c, v) in vals.iter().enumerate() {
            columns[c].push(*v);
        }
    }
    TimeSeriesPanel::new(names, index, columns)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationMethod {
    Mean,
}

/// Averages a monthly panel into quarters. A quarter must have all three
/// months observed, or none of them (then it is missing in the output).
pub fn aggregate_quarterly(panel: &TimeSeriesPanel, method: AggregationMethod) -> Result<TimeSeriesPanel> {
    let AggregationMethod::Mean = method;
    if panel.frequency() != Some(Frequency::Monthly) {
        return Err(Error::Config("aggregate_quarterly expects a monthly panel".into()));
    }
    // quarter -> per variable list of observed month values
    let mut buckets: BTreeMap<Period, Vec<Vec<f64>>> = BTreeMap::new();
    for (t, p) in panel.index().iter().enumerate() {
        let entry = buckets.entry(p.to_quarter()).or_insert_with(|| vec![Vec::new(); panel.n_vars()]);
        for (v, col) in panel.columns().iter().enumerate() {
            if !col[t].is_nan() {
                entry[v].push(col[t]);
            }
        }
    }
    let mut partial = Vec::new();
    let mut columns = vec![Vec::with_capacity(buckets.len()); panel.n_vars()];
    for (q, per_var) in &buckets {
        let mut bad = false;
        for (v, obs) in per_var.iter().enumerate() {
            match obs.len() {
                3 => columns[v].push(obs.iter().sum::<f64>() / 3.0),
                0 => columns[v].push(f64::NAN),
                _ => {
                    bad = true;
                    columns[v].push(f64::NAN);
                }
            }
        }
        if bad {
            partial.push(q.to_string());
        }
    }
    if !partial.is_empty() {
        return Err(Error::Coverage(partial));
    }
    TimeSeriesPanel::new(panel.names().to_vec(), buckets.keys().copied().collect(), columns)
}

/// Per-variable location and (population) scale used by [`standard_scale`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

/// Centers each variable and divides by its population standard deviation,
/// both computed over unmasked entries.
pub fn standard_scale(panel: &TimeSeriesPanel) -> Result<(TimeSeriesPanel, ScalingParams)> {
    let mut means = Vec::with_capacity(panel.n_vars());
    let mut scales = Vec::with_capacity(panel.n_vars());
    let mut columns = Vec::with_capacity(panel.n_vars());
    for (name, col) in panel.names().iter().zip(panel.columns()) {
        let obs: Vec<f64> = col.iter().copied().filter(|v| !v.is_nan()).collect();
        if obs.is_empty() {
            return Err(Error::DegenerateScale(format!("{name} (no observed values)")));
        }
        let n = obs.len() as f64;
        let mean = obs.iter().sum::<f64>() / n;
        let var = obs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        if !(sd > 1e-12 * mean.abs().max(1.0)) {
            return Err(Error::DegenerateScale(name.clone()));
        }
        columns.push(col.iter().map(|v| (v - mean) / sd).collect());
        means.push(mean);
        scales.push(sd);
    }
    let scaled = TimeSeriesPanel::new(panel.names().to_vec(), panel.index().to_vec(), columns)?;
    Ok((scaled, ScalingParams { names: panel.names().to_vec(), mean: means, scale: scales }))
}

/// Maps standardized values back to the original units.
pub fn inverse_scale(panel: &TimeSeriesPanel, params: &ScalingParams) -> Result<TimeSeriesPanel> {
    if panel.names() != params.names.as_slice() {
        return Err(Error::Config(format!(
            "scaling parameters for {:?} do not match panel variables {:?}",
            params.names,
            panel.names()
        )));
    }
    let columns = panel
        .columns()
        .iter()
        .zip(params.mean.iter().zip(&params.scale))
        .map(|(col, (m, s))| col.iter().map(|v| v * s + m).collect())
        .collect();
    TimeSeriesPanel::new(panel.names().to_vec(), panel.index().to_vec(), columns)
}
