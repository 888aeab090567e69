//! Survey microdata and county vaccination-rate tables.
//!
//! Both inputs are delimited text with a header row; the delimiter (comma or
//! tab) is sniffed from the header and lines starting with `#` are ignored,
//! which lets generated files carry provenance comments and still round-trip.
//! Rows that fail validation are dropped and counted rather than imputed.

pub mod design;
pub mod levels;
pub mod states;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::Read;

use thiserror::Error;

pub use design::{encode_design, DesignMatrix};
pub use levels::{Education, Gender, Income, LevelMap, Race};

#[derive(Debug, Error)]
pub enum SurveyError {
    #[error("failed to read input: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed delimited text: {0}")]
    Csv(#[from] csv::Error),
    #[error("input is empty (no header row)")]
    EmptyInput,
    #[error("header is missing mapped column '{0}'")]
    MissingColumn(String),
    #[error("no valid rows after validation ({dropped} dropped)")]
    ZeroValidRows { dropped: usize },
    #[error("duplicate county entry for ({state}, {county})")]
    DuplicateCounty { state: String, county: String },
    #[error("dataset is empty")]
    EmptyDataset,
}

/// One validated respondent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurveyRecord {
    pub gender: Gender,
    pub race: Race,
    pub education: Education,
    pub income: Income,
    /// Postal code; guaranteed to be in the configured roster.
    pub state: String,
    /// 1 = received the vaccine, 0 = not.
    pub vaccinated: u8,
}

/// Validated survey records plus the roster of states they span.
///
/// The roster is the lexicographically sorted list of distinct state codes
/// present in the data; its length is the number of random-intercept groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurveyDataset {
    pub records: Vec<SurveyRecord>,
    pub states: Vec<String>,
    pub dropped_count: usize,
}

impl SurveyDataset {
    /// Builds a dataset from records, deriving the sorted roster.
    ///
    /// Record validity (roster membership of each state code) is the
    /// parser's job; this constructor only organizes.
    pub fn from_records(records: Vec<SurveyRecord>, dropped_count: usize) -> Self {
        let states: Vec<String> = records
            .iter()
            .map(|r| r.state.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        SurveyDataset { records, states, dropped_count }
    }

    /// Number of distinct states (the random-intercept dimension).
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Logical-field-to-column-name mapping for survey files.
#[derive(Debug, Clone)]
pub struct ColumnMap {
    pub gender: String,
    pub race: String,
    pub education: String,
    pub income: String,
    pub state: String,
    pub vaccinated: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            gender: "gender".into(),
            race: "race".into(),
            education: "education".into(),
            income: "income".into(),
            state: "state".into(),
            vaccinated: "vaccinated".into(),
        }
    }
}

/// Everything the survey parser needs besides the byte stream.
#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub columns: ColumnMap,
    pub levels: LevelMap,
    /// Allowed state codes; records outside it are dropped.
    pub roster: Vec<String>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            columns: ColumnMap::default(),
            levels: LevelMap::default(),
            roster: states::default_roster(),
        }
    }
}

fn sniff_delimiter(text: &str) -> u8 {
    let header = text.lines().find(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty());
    match header {
        Some(line) if line.matches('\t').count() > line.matches(',').count() => b'\t',
        _ => b',',
    }
}

fn reader_for(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .delimiter(sniff_delimiter(text))
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes())
}

fn header_index(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    let want = levels::normalize(name);
    headers.iter().position(|h| levels::normalize(h) == want)
}

/// Parses survey microdata.
///
/// Rows with a missing or unmapped level in any field, or a state outside the
/// roster, are dropped and counted. Errors if the header lacks a mapped
/// column or no valid row remains.
pub fn parse_survey<R: Read>(mut source: R, opts: &ParseOptions) -> Result<SurveyDataset, SurveyError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let mut reader = reader_for(&text);

    let headers = reader.headers()?.clone();
    if headers.is_empty() || text.trim().is_empty() {
        return Err(SurveyError::EmptyInput);
    }
    let col = |name: &str| header_index(&headers, name).ok_or_else(|| SurveyError::MissingColumn(name.to_string()));
    let (c_gender, c_race, c_edu, c_inc, c_state, c_vax) = (
        col(&opts.columns.gender)?,
        col(&opts.columns.race)?,
        col(&opts.columns.education)?,
        col(&opts.columns.income)?,
        col(&opts.columns.state)?,
        col(&opts.columns.vaccinated)?,
    );

    let roster: HashSet<&str> = opts.roster.iter().map(|s| s.as_str()).collect();
    let mut records = Vec::new();
    let mut dropped = 0usize;

    for row in reader.records() {
        let row = row?;
        let parsed = (|| {
            let state = row.get(c_state)?.trim().to_ascii_uppercase();
            if !roster.contains(state.as_str()) {
                return None;
            }
            Some(SurveyRecord {
                gender: opts.levels.gender(row.get(c_gender)?)?,
                race: opts.levels.race(row.get(c_race)?)?,
                education: opts.levels.education(row.get(c_edu)?)?,
                income: opts.levels.income(row.get(c_inc)?)?,
                state,
                vaccinated: opts.levels.vaccinated(row.get(c_vax)?)?,
            })
        })();
        match parsed {
            Some(rec) => records.push(rec),
            None => dropped += 1,
        }
    }

    if records.is_empty() {
        return Err(SurveyError::ZeroValidRows { dropped });
    }
    Ok(SurveyDataset::from_records(records, dropped))
}

/// One county's completed-vaccination percentage.
#[derive(Debug, Clone, PartialEq)]
pub struct CountyRate {
    pub state: String,
    pub county: String,
    /// Percent in [0, 100].
    pub rate: f64,
}

/// County-level vaccination rates with (state, county) uniqueness.
#[derive(Debug, Clone, PartialEq)]
pub struct CountyRateTable {
    pub entries: Vec<CountyRate>,
    pub dropped_count: usize,
    /// Value of a `date` column, when the file has one.
    pub coverage_date: Option<String>,
}

impl CountyRateTable {
    /// Distinct state codes present, sorted.
    pub fn states(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| e.state.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Keeps only entries whose state is in `roster`; returns the number
    /// removed.
    pub fn retain_states(&mut self, roster: &[String]) -> usize {
        let keep: HashSet<&str> = roster.iter().map(|s| s.as_str()).collect();
        let before = self.entries.len();
        self.entries.retain(|e| keep.contains(e.state.as_str()));
        before - self.entries.len()
    }
}

/// Parses a county rate table with columns `state`, `county`,
/// `rate_percent`.
///
/// Rows with a missing or out-of-range rate are dropped and counted.
/// A duplicate (state, county) pair among valid rows is an error.
pub fn parse_county_rates<R: Read>(mut source: R) -> Result<CountyRateTable, SurveyError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let mut reader = reader_for(&text);

    let headers = reader.headers()?.clone();
    if headers.is_empty() || text.trim().is_empty() {
        return Err(SurveyError::EmptyInput);
    }
    let col = |name: &str| header_index(&headers, name).ok_or_else(|| SurveyError::MissingColumn(name.to_string()));
    let (c_state, c_county, c_rate) = (col("state")?, col("county")?, col("rate_percent")?);
    let c_date = header_index(&headers, "date");

    let mut entries: Vec<CountyRate> = Vec::new();
    let mut seen: HashMap<(String, String), ()> = HashMap::new();
    let mut dropped = 0usize;
    let mut coverage_date = None;

    for row in reader.records() {
        let row = row?;
        if coverage_date.is_none() {
            if let Some(c) = c_date {
                coverage_date = row.get(c).map(|s| s.trim().to_string()).filter(|s| !s.is_empty());
            }
        }
        let state = row.get(c_state).map(|s| s.trim().to_ascii_uppercase()).unwrap_or_default();
        let county = row.get(c_county).map(|s| s.trim().to_string()).unwrap_or_default();
        let rate = row.get(c_rate).and_then(|s| s.trim().parse::<f64>().ok());
        match rate {
            Some(r) if (0.0..=100.0).contains(&r) && !state.is_empty() && !county.is_empty() => {
                if seen.insert((state.clone(), county.clone()), ()).is_some() {
                    return Err(SurveyError::DuplicateCounty { state, county });
                }
                entries.push(CountyRate { state, county, rate: r });
            }
            _ => dropped += 1,
        }
    }

    if entries.is_empty() {
        return Err(SurveyError::ZeroValidRows { dropped });
    }
    Ok(CountyRateTable { entries, dropped_count: dropped, coverage_date })
}

/// Writes a dataset in the exact format [`parse_survey`] reads (tab
/// delimited, default column names, canonical level spellings). Extra
/// `# key: value` comment lines may be passed for provenance.
pub fn write_survey<W: std::io::Write>(
    dataset: &SurveyDataset,
    comments: &[(String, String)],
    mut out: W,
) -> std::io::Result<()> {
    for (k, v) in comments {
        writeln!(out, "# {k}: {v}")?;
    }
    writeln!(out, "gender\trace\teducation\tincome\tstate\tvaccinated")?;
    for r in &dataset.records {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.gender.label(),
            r.race.label(),
            r.education.label(),
            r.income.label(),
            r.state,
            if r.vaccinated == 1 { "Yes" } else { "No" },
        )?;
    }
    Ok(())
}
