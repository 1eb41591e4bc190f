//! ACLED-style event CSV ingestion and aggregation.
//!
//! Raw event rows become two structured shapes: a national daily series and
//! a balanced division-day panel. Days with no events are materialized as
//! explicit zero rows — the downstream regressions require a balanced panel.
//! Unknown divisions are hard errors rather than fuzzy matches; silent
//! misattribution would corrupt the fixed effects.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Inclusive sample window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Window {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if end < start {
            return Err(Error::Config(format!(
                "window end {end} precedes start {start}"
            )));
        }
        Ok(Window { start, end })
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        date >= self.start && date <= self.end
    }

    pub fn n_days(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    /// Zero-based day index within the window.
    pub fn day_index(&self, date: NaiveDate) -> Option<usize> {
        self.contains(date)
            .then(|| (date - self.start).num_days() as usize)
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        (0..self.n_days() as u64)
            .map(|i| self.start + Days::new(i))
            .collect()
    }
}

/// Physical CSV column names for the logical fields.
///
/// Defaults follow raw ACLED exports; published replication extracts can
/// remap them in config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemaConfig {
    pub event_date: String,
    pub admin1: String,
    pub event_type: String,
    pub sub_event_type: String,
    pub fatalities: String,
    pub latitude: String,
    pub longitude: String,
}

impl Default for SchemaConfig {
    fn default() -> Self {
        SchemaConfig {
            event_date: "event_date".into(),
            admin1: "admin1".into(),
            event_type: "event_type".into(),
            sub_event_type: "sub_event_type".into(),
            fatalities: "fatalities".into(),
            latitude: "latitude".into(),
            longitude: "longitude".into(),
        }
    }
}

/// One georeferenced, dated, typed political event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub event_date: NaiveDate,
    pub division: String,
    pub event_type: String,
    pub sub_event_type: String,
    pub fatalities: u32,
    pub latitude: Option<f64>,
    pub longitude: Option<f64>,
}

/// A rejected row with its 1-based line number.
#[derive(Debug, Clone, Serialize)]
pub struct RowIssue {
    pub line: usize,
    pub reason: String,
}

/// Outcome of [`parse_events`]: valid records plus per-row diagnostics.
#[derive(Debug)]
pub struct ParseReport {
    pub records: Vec<EventRecord>,
    /// Rows dated outside the window (dropped, counted).
    pub dropped_outside_window: usize,
    /// Rows rejected for unparseable or invalid fields.
    pub row_issues: Vec<RowIssue>,
}

/// Parses an event CSV into [`EventRecord`]s.
///
/// Mandatory columns missing from the header abort with a schema error; bad
/// dates or fatality values reject only the offending row, recorded in
/// [`ParseReport::row_issues`]. Rows outside `window` are dropped and
/// counted. Latitude/longitude are optional pass-through.
pub fn parse_events<R: Read>(
    input: R,
    schema: &SchemaConfig,
    window: Window,
) -> Result<ParseReport> {
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(input);
    let headers = reader.headers()?.clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let date_idx = find(&schema.event_date)?;
    let admin_idx = find(&schema.admin1)?;
    let type_idx = find(&schema.event_type)?;
    let sub_idx = find(&schema.sub_event_type)?;
    let fatal_idx = find(&schema.fatalities)?;
    let lat_idx = headers.iter().position(|h| h == schema.latitude);
    let lon_idx = headers.iter().position(|h| h == schema.longitude);

    let mut report = ParseReport {
        records: Vec::new(),
        dropped_outside_window: 0,
        row_issues: Vec::new(),
    };
    for record in reader.records() {
        let record = record?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or_default();
        let mut reject = |reason: String| RowIssue { line, reason };

        let date_str = record.get(date_idx).unwrap_or_default();
        let event_date = match date_str.parse::<NaiveDate>() {
            Ok(d) => d,
            Err(_) => {
                report
                    .row_issues
                    .push(reject(format!("unparseable date `{date_str}`")));
                continue;
            }
        };
        if !window.contains(event_date) {
            report.dropped_outside_window += 1;
            continue;
        }
        let fatal_str = record.get(fatal_idx).unwrap_or_default();
        let fatalities = match fatal_str.trim().parse::<i64>() {
            Ok(v) if v >= 0 => v as u32,
            Ok(v) => {
                report
                    .row_issues
                    .push(reject(format!("negative fatality count {v}")));
                continue;
            }
            Err(_) => {
                report
                    .row_issues
                    .push(reject(format!("unparseable fatality count `{fatal_str}`")));
                continue;
            }
        };
        let parse_coord = |idx: Option<usize>| {
            idx.and_then(|i| record.get(i))
                .and_then(|s| s.trim().parse::<f64>().ok())
        };
        report.records.push(EventRecord {
            event_date,
            division: record.get(admin_idx).unwrap_or_default().to_string(),
            event_type: record.get(type_idx).unwrap_or_default().to_string(),
            sub_event_type: record.get(sub_idx).unwrap_or_default().to_string(),
            fatalities,
            latitude: parse_coord(lat_idx),
            longitude: parse_coord(lon_idx),
        });
    }
    Ok(report)
}

/// National-level daily aggregates, zero-filled over the window.
#[derive(Debug, Clone)]
pub struct NationalDailySeries {
    pub dates: Vec<NaiveDate>,
    /// Daily count of events whose event or sub-event type is in the
    /// mobilization set.
    pub total_events: Vec<u32>,
    /// Daily fatalities summed over all events, mobilization or not.
    pub total_fatalities: Vec<u32>,
    /// Daily counts per sub-event type, one entry per label seen.
    pub sub_event_counts: BTreeMap<String, Vec<u32>>,
    /// Dummy columns attached from config calendars.
    pub dummies: BTreeMap<String, Vec<u8>>,
}

impl NationalDailySeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Marks `name` = 1 on the given dates, 0 elsewhere.
    pub fn attach_dummy(&mut self, name: &str, active: &BTreeSet<NaiveDate>) {
        let col = self
            .dates
            .iter()
            .map(|d| u8::from(active.contains(d)))
            .collect();
        self.dummies.insert(name.to_string(), col);
    }

    /// View as a feature matrix keyed by date.
    pub fn to_feature_matrix(&self) -> FeatureMatrix {
        let mut fm = FeatureMatrix::time_series(self.dates.clone());
        fm.push_column(
            "total_events",
            self.total_events.iter().map(|&v| v as f64).collect(),
        )
        .expect("fresh matrix");
        fm.push_column(
            "total_fatalities",
            self.total_fatalities.iter().map(|&v| v as f64).collect(),
        )
        .expect("fresh matrix");
        for (name, counts) in &self.sub_event_counts {
            fm.push_column(
                &sanitize_label(name),
                counts.iter().map(|&v| v as f64).collect(),
            )
            .expect("sub-event labels are distinct");
        }
        for (name, flags) in &self.dummies {
            fm.push_column(name, flags.iter().map(|&v| v as f64).collect())
                .expect("dummy names are distinct");
        }
        fm
    }
}

/// Lowercased, underscore-joined column label for a raw type string.
pub fn sanitize_label(raw: &str) -> String {
    raw.trim()
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join("_")
}

/// Aggregates events into a zero-filled national daily series.
///
/// `total_events` counts rows whose event or sub-event type is in
/// `mobilization_types`; `total_fatalities` sums fatalities over all rows.
pub fn build_national_series(
    events: &[EventRecord],
    mobilization_types: &BTreeSet<String>,
    window: Window,
) -> Result<NationalDailySeries> {
    if mobilization_types.is_empty() {
        return Err(Error::Config("mobilization type set is empty".into()));
    }
    let n = window.n_days();
    let mut series = NationalDailySeries {
        dates: window.dates(),
        total_events: vec![0; n],
        total_fatalities: vec![0; n],
        sub_event_counts: BTreeMap::new(),
        dummies: BTreeMap::new(),
    };
    for ev in events {
        let Some(idx) = window.day_index(ev.event_date) else {
            continue;
        };
        series.total_fatalities[idx] += ev.fatalities;
        if mobilization_types.contains(&ev.event_type)
            || mobilization_types.contains(&ev.sub_event_type)
        {
            series.total_events[idx] += 1;
        }
        series
            .sub_event_counts
            .entry(ev.sub_event_type.clone())
            .or_insert_with(|| vec![0; n])[idx] += 1;
    }
    Ok(series)
}

/// Balanced entity-by-day table of local and elsewhere counts.
#[derive(Debug, Clone)]
pub struct DivisionDayPanel {
    pub divisions: Vec<String>,
    pub dates: Vec<NaiveDate>,
    /// Row-major `divisions.len() x dates.len()` count grids.
    pub local_events: Vec<u32>,
    pub local_fatalities: Vec<u32>,
    pub elsewhere_events: Vec<u32>,
    pub elsewhere_fatalities: Vec<u32>,
    /// Population (millions) per division, aligned with `divisions`.
    pub population_millions: Vec<f64>,
}

impl DivisionDayPanel {
    pub fn n_rows(&self) -> usize {
        self.divisions.len() * self.dates.len()
    }

    fn cell(&self, division: usize, day: usize) -> usize {
        division * self.dates.len() + day
    }

    /// Flattens to a feature matrix with the canonical panel columns.
    pub fn to_feature_matrix(&self) -> FeatureMatrix {
        let mut fm =
            FeatureMatrix::balanced_panel(self.divisions.clone(), self.dates.clone());
        let n = self.n_rows();
        let grid = |g: &[u32]| -> Vec<f64> { g.iter().map(|&v| v as f64).collect() };
        fm.push_column("local_events", grid(&self.local_events))
            .expect("fresh matrix");
        fm.push_column("local_fatalities", grid(&self.local_fatalities))
            .expect("fresh matrix");
        fm.push_column("elsewhere_events", grid(&self.elsewhere_events))
            .expect("fresh matrix");
        fm.push_column("elsewhere_fatalities", grid(&self.elsewhere_fatalities))
            .expect("fresh matrix");
        let mut pop = Vec::with_capacity(n);
        let mut days = Vec::with_capacity(n);
        for div in 0..self.divisions.len() {
            for day in 0..self.dates.len() {
                pop.push(self.population_millions[div]);
                days.push(day as f64);
            }
        }
        fm.push_column("population_millions", pop)
            .expect("fresh matrix");
        fm.push_column("days_since_start", days).expect("fresh matrix");
        fm
    }
}

/// Builds the balanced division-day panel.
///
/// `local_events` counts mobilization-type rows in the division;
/// `local_fatalities` sums fatalities over all of the division's rows.
/// Elsewhere columns are the national total minus the local value. An event
/// naming a division outside `divisions` is an error, not a drop.
pub fn build_division_panel(
    events: &[EventRecord],
    divisions: &[String],
    population: &BTreeMap<String, f64>,
    mobilization_types: &BTreeSet<String>,
    window: Window,
) -> Result<DivisionDayPanel> {
    if mobilization_types.is_empty() {
        return Err(Error::Config("mobilization type set is empty".into()));
    }
    let mut pop = Vec::with_capacity(divisions.len());
    for div in divisions {
        match population.get(div) {
            Some(&p) => pop.push(p),
            None => {
                return Err(Error::Config(format!(
                    "population missing for division `{div}`"
                )))
            }
        }
    }
    let div_index: HashMap<&str, usize> = divisions
        .iter()
        .enumerate()
        .map(|(i, d)| (d.as_str(), i))
        .collect();

    let n_days = window.n_days();
    let cells = divisions.len() * n_days;
    let mut panel = DivisionDayPanel {
        divisions: divisions.to_vec(),
        dates: window.dates(),
        local_events: vec![0; cells],
        local_fatalities: vec![0; cells],
        elsewhere_events: vec![0; cells],
        elsewhere_fatalities: vec![0; cells],
        population_millions: pop,
    };

    let mut day_events = vec![0u32; n_days];
    let mut day_fatalities = vec![0u32; n_days];
    for (i, ev) in events.iter().enumerate() {
        let Some(day) = window.day_index(ev.event_date) else {
            continue;
        };
        let Some(&div) = div_index.get(ev.division.as_str()) else {
            return Err(Error::InvalidValue {
                column: "admin1".into(),
                row: i,
                reason: format!("unknown division `{}`", ev.division),
            });
        };
        let cell = panel.cell(div, day);
        panel.local_fatalities[cell] += ev.fatalities;
        day_fatalities[day] += ev.fatalities;
        if mobilization_types.contains(&ev.event_type)
            || mobilization_types.contains(&ev.sub_event_type)
        {
            panel.local_events[cell] += 1;
            day_events[day] += 1;
        }
    }
    for div in 0..divisions.len() {
        for day in 0..n_days {
            let cell = panel.cell(div, day);
            panel.elsewhere_events[cell] = day_events[day] - panel.local_events[cell];
            panel.elsewhere_fatalities[cell] =
                day_fatalities[day] - panel.local_fatalities[cell];
        }
    }
    Ok(panel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn window() -> Window {
        Window::new(d("2024-06-01"), d("2024-08-05")).unwrap()
    }

    fn mobilization() -> BTreeSet<String> {
        ["Protests", "Riots", "Violent demonstration"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    fn ev(date: &str, division: &str, event_type: &str, sub: &str, fatal: u32) -> EventRecord {
        EventRecord {
            event_date: d(date),
            division: division.into(),
            event_type: event_type.into(),
            sub_event_type: sub.into(),
            fatalities: fatal,
            latitude: None,
            longitude: None,
        }
    }

    const CSV: &str = "\
event_date,admin1,event_type,sub_event_type,fatalities,latitude,longitude
2024-07-16,Dhaka,Protests,Peaceful protest,0,23.8,90.4
2024-07-16,Dhaka,Protests,Protest with intervention,1,23.8,90.4
2024-07-16,Dhaka,Protests,Excessive force against protesters,2,,
";

    #[test]
    fn parse_preserves_row_count() {
        let report = parse_events(CSV.as_bytes(), &SchemaConfig::default(), window()).unwrap();
        assert_eq!(report.records.len(), 3);
        assert_eq!(report.dropped_outside_window, 0);
        assert!(report.row_issues.is_empty());
        assert_eq!(report.records[0].latitude, Some(23.8));
        assert_eq!(report.records[2].latitude, None);
    }

    #[test]
    fn negative_fatalities_rejects_row_only() {
        let csv = "\
event_date,admin1,event_type,sub_event_type,fatalities
2024-07-16,Dhaka,Protests,Peaceful protest,-1
2024-07-17,Dhaka,Protests,Peaceful protest,0
";
        let report = parse_events(csv.as_bytes(), &SchemaConfig::default(), window()).unwrap();
        assert_eq!(report.records.len(), 1);
        assert_eq!(report.row_issues.len(), 1);
        assert_eq!(report.row_issues[0].line, 2);
    }

    #[test]
    fn out_of_window_rows_are_counted_drops() {
        let csv = "\
event_date,admin1,event_type,sub_event_type,fatalities
2024-05-20,Dhaka,Protests,Peaceful protest,0
";
        let report = parse_events(csv.as_bytes(), &SchemaConfig::default(), window()).unwrap();
        assert!(report.records.is_empty());
        assert_eq!(report.dropped_outside_window, 1);
    }

    #[test]
    fn missing_column_is_schema_error() {
        let csv = "event_date,admin1,event_type,fatalities\n2024-07-16,Dhaka,Protests,0\n";
        match parse_events(csv.as_bytes(), &SchemaConfig::default(), window()) {
            Err(Error::MissingColumn(c)) => assert_eq!(c, "sub_event_type"),
            other => panic!("expected MissingColumn, got {:?}", other.err()),
        }
    }

    #[test]
    fn remapped_schema_names() {
        let csv = "when,where,what,detail,deaths\n2024-07-16,Dhaka,Protests,Peaceful protest,0\n";
        let schema = SchemaConfig {
            event_date: "when".into(),
            admin1: "where".into(),
            event_type: "what".into(),
            sub_event_type: "detail".into(),
            fatalities: "deaths".into(),
            ..SchemaConfig::default()
        };
        let report = parse_events(csv.as_bytes(), &schema, window()).unwrap();
        assert_eq!(report.records.len(), 1);
    }

    #[test]
    fn national_series_definitions() {
        let events = vec![
            ev("2024-07-16", "Dhaka", "Protests", "Peaceful protest", 0),
            ev("2024-07-16", "Dhaka", "Protests", "Peaceful protest", 0),
            ev(
                "2024-07-16",
                "Dhaka",
                "Violence against civilians",
                "Excessive force against protesters",
                2,
            ),
        ];
        let series = build_national_series(&events, &mobilization(), window()).unwrap();
        let idx = window().day_index(d("2024-07-16")).unwrap();
        assert_eq!(series.total_events[idx], 2);
        assert_eq!(series.total_fatalities[idx], 2);
        assert_eq!(
            series.sub_event_counts["Excessive force against protesters"][idx],
            1
        );
    }

    #[test]
    fn series_is_zero_filled_and_window_sized() {
        let events = vec![ev("2024-07-16", "Dhaka", "Protests", "Peaceful protest", 0)];
        let series = build_national_series(&events, &mobilization(), window()).unwrap();
        assert_eq!(series.len(), 66);
        let quiet = window().day_index(d("2024-06-05")).unwrap();
        assert_eq!(series.total_events[quiet], 0);
        assert_eq!(series.total_fatalities[quiet], 0);
    }

    #[test]
    fn empty_mobilization_set_is_config_error() {
        let err = build_national_series(&[], &BTreeSet::new(), window());
        assert!(matches!(err, Err(Error::Config(_))));
    }

    fn eight_divisions() -> (Vec<String>, BTreeMap<String, f64>) {
        let names: Vec<String> = [
            "Barisal", "Chittagong", "Dhaka", "Khulna", "Mymensingh", "Rajshahi", "Rangpur",
            "Sylhet",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let pop = names.iter().map(|n| (n.clone(), 10.0)).collect();
        (names, pop)
    }

    #[test]
    fn panel_is_balanced() {
        let (divisions, pop) = eight_divisions();
        let panel =
            build_division_panel(&[], &divisions, &pop, &mobilization(), window()).unwrap();
        assert_eq!(panel.n_rows(), 8 * 66);
        assert!(panel.local_events.iter().all(|&v| v == 0));
        assert!(panel.population_millions.iter().all(|&p| p == 10.0));
    }

    #[test]
    fn elsewhere_is_complement() {
        let (divisions, pop) = eight_divisions();
        let events = vec![ev("2024-07-16", "Dhaka", "Protests", "Peaceful protest", 3)];
        let panel =
            build_division_panel(&events, &divisions, &pop, &mobilization(), window()).unwrap();
        let day = window().day_index(d("2024-07-16")).unwrap();
        for (i, name) in divisions.iter().enumerate() {
            let cell = i * 66 + day;
            if name == "Dhaka" {
                assert_eq!(panel.local_events[cell], 1);
                assert_eq!(panel.elsewhere_events[cell], 0);
                assert_eq!(panel.elsewhere_fatalities[cell], 0);
            } else {
                assert_eq!(panel.local_events[cell], 0);
                assert_eq!(panel.elsewhere_events[cell], 1);
                assert_eq!(panel.elsewhere_fatalities[cell], 3);
            }
        }
    }

    #[test]
    fn unknown_division_is_hard_error() {
        let (divisions, pop) = eight_divisions();
        let events = vec![ev("2024-07-16", "Atlantis", "Protests", "Peaceful protest", 0)];
        let err = build_division_panel(&events, &divisions, &pop, &mobilization(), window());
        assert!(matches!(err, Err(Error::InvalidValue { .. })));
    }

    #[test]
    fn missing_population_is_config_error() {
        let (divisions, mut pop) = eight_divisions();
        pop.remove("Sylhet");
        let err = build_division_panel(&[], &divisions, &pop, &mobilization(), window());
        assert!(matches!(err, Err(Error::Config(_))));
    }

    proptest! {
        // Aggregates never depend on input row order.
        #[test]
        fn permutation_invariance(perm in proptest::sample::subsequence((0..6usize).collect::<Vec<_>>(), 6)) {
            let base = vec![
                ev("2024-07-16", "Dhaka", "Protests", "Peaceful protest", 0),
                ev("2024-07-16", "Sylhet", "Riots", "Violent demonstration", 1),
                ev("2024-07-17", "Dhaka", "Violence against civilians",
                   "Excessive force against protesters", 4),
                ev("2024-07-17", "Khulna", "Protests", "Peaceful protest", 0),
                ev("2024-07-18", "Rangpur", "Protests", "Protest with intervention", 2),
                ev("2024-07-18", "Dhaka", "Riots", "Mob violence", 0),
            ];
            let mut shuffled: Vec<EventRecord> = perm.iter().map(|&i| base[i].clone()).collect();
            for (i, evr) in base.iter().enumerate() {
                if !perm.contains(&i) {
                    shuffled.push(evr.clone());
                }
            }
            let a = build_national_series(&base, &mobilization(), window()).unwrap();
            let b = build_national_series(&shuffled, &mobilization(), window()).unwrap();
            prop_assert_eq!(a.total_events, b.total_events);
            prop_assert_eq!(a.total_fatalities, b.total_fatalities);
        }
    }

    #[test]
    fn local_plus_elsewhere_is_constant_across_divisions() {
        let (divisions, pop) = eight_divisions();
        let events = vec![
            ev("2024-07-16", "Dhaka", "Protests", "Peaceful protest", 1),
            ev("2024-07-16", "Sylhet", "Riots", "Violent demonstration", 2),
            ev("2024-07-16", "Khulna", "Protests", "Peaceful protest", 0),
        ];
        let panel =
            build_division_panel(&events, &divisions, &pop, &mobilization(), window()).unwrap();
        let day = window().day_index(d("2024-07-16")).unwrap();
        let totals: BTreeSet<u32> = (0..8)
            .map(|i| {
                let cell = i * 66 + day;
                panel.local_events[cell] + panel.elsewhere_events[cell]
            })
            .collect();
        assert_eq!(totals.len(), 1);
        assert!(totals.contains(&3));
    }
}
