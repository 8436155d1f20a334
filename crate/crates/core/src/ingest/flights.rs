//! Airline on-time CSV extracts: one carrier aspect, airports as nodes and
//! one link `[departure, arrival]` per flight.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{file_label, ticks_per_second, ErrorPolicy, FileReport, IngestError, IngestReport};
use crate::model::{Aspect, BuildMode, GraphBuilder, MultilayerStreamGraph, NodeLayer};
use crate::time::{Interval, Resolution};

pub const CARRIER_ASPECT: &str = "carrier";

const DAY: i64 = 86_400;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlightRecord {
    pub date: NaiveDate,
    pub carrier: String,
    pub origin: String,
    pub destination: String,
    /// Local `HHMM`, 0000 through 2400.
    pub departure: u16,
    pub arrival: u16,
}

impl FlightRecord {
    /// `[departure, arrival]` in epoch seconds of naive local time; an arrival
    /// clock earlier than the departure clock is on the next day.
    pub fn span_seconds(&self) -> (i64, i64) {
        let midnight = (self.date - NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid date")).num_days() * DAY;
        let clock = |hhmm: u16| i64::from(hhmm / 100) * 3600 + i64::from(hhmm % 100) * 60;
        let dep = midnight + clock(self.departure);
        let mut arr = midnight + clock(self.arrival);
        if arr < dep {
            arr += DAY;
        }
        (dep, arr)
    }
}

/// Parses `HHMM` (leading zeros optional, `.00` suffix tolerated).
pub fn parse_hhmm(raw: &str) -> Option<u16> {
    let s = raw.trim();
    let s = s.strip_suffix(".00").or_else(|| s.strip_suffix(".0")).unwrap_or(s);
    if s.is_empty() || s.len() > 4 || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let v: u16 = s.parse().ok()?;
    let (h, m) = (v / 100, v % 100);
    (m < 60 && (h < 24 || v == 2400)).then_some(v)
}

fn parse_date(raw: &str) -> Option<NaiveDate> {
    let s = raw.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(d);
    }
    let first = s.split_whitespace().next()?;
    NaiveDate::parse_from_str(first, "%m/%d/%Y").ok()
}

/// Header names tried for each field, first match wins (case-insensitive).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlightColumns {
    pub date: Vec<String>,
    pub year: Vec<String>,
    pub month: Vec<String>,
    pub day: Vec<String>,
    pub carrier: Vec<String>,
    pub origin: Vec<String>,
    pub destination: Vec<String>,
    pub departure: Vec<String>,
    pub arrival: Vec<String>,
    pub cancelled: Vec<String>,
}

fn names(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

impl Default for FlightColumns {
    fn default() -> Self {
        FlightColumns {
            date: names(&["FlightDate", "FL_DATE"]),
            year: names(&["Year", "YEAR"]),
            month: names(&["Month", "MONTH"]),
            day: names(&["DayofMonth", "DAY_OF_MONTH"]),
            carrier: names(&[
                "Reporting_Airline",
                "OP_UNIQUE_CARRIER",
                "UniqueCarrier",
                "Carrier",
                "OP_CARRIER",
            ]),
            origin: names(&["Origin", "ORIGIN"]),
            destination: names(&["Dest", "DEST"]),
            departure: names(&["DepTime", "DEP_TIME"]),
            arrival: names(&["ArrTime", "ARR_TIME"]),
            cancelled: names(&["Cancelled", "CANCELLED"]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlightOptions {
    /// Keep only flights departing in this (year, month).
    pub month: Option<(i32, u32)>,
    pub columns: FlightColumns,
    pub on_error: ErrorPolicy,
    pub resolution: Resolution,
    /// Study interval in ticks; defaults to the span of the accepted flights.
    pub study: Option<Interval>,
}

impl Default for FlightOptions {
    fn default() -> Self {
        FlightOptions {
            month: None,
            columns: FlightColumns::default(),
            on_error: ErrorPolicy::Fail,
            resolution: Resolution::SECOND,
            study: None,
        }
    }
}

enum DateSource {
    Single(usize),
    Parts(usize, usize, usize),
}

struct Layout {
    date: DateSource,
    carrier: usize,
    origin: usize,
    destination: usize,
    departure: usize,
    arrival: usize,
    cancelled: Option<usize>,
}

fn find(headers: &csv::StringRecord, candidates: &[String]) -> Option<usize> {
    candidates
        .iter()
        .find_map(|c| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(c)))
}

impl Layout {
    fn resolve(headers: &csv::StringRecord, cols: &FlightColumns, file: &str) -> Result<Layout, IngestError> {
        let need = |cands: &[String], what: &str| {
            find(headers, cands).ok_or_else(|| IngestError::MissingColumn {
                file: file.to_string(),
                column: cands.first().cloned().unwrap_or_else(|| what.to_string()),
            })
        };
        let date = match find(headers, &cols.date) {
            Some(i) => DateSource::Single(i),
            None => match (
                find(headers, &cols.year),
                find(headers, &cols.month),
                find(headers, &cols.day),
            ) {
                (Some(y), Some(m), Some(d)) => DateSource::Parts(y, m, d),
                _ => return Err(need(&cols.date, "date").unwrap_err()),
            },
        };
        Ok(Layout {
            date,
            carrier: need(&cols.carrier, "carrier")?,
            origin: need(&cols.origin, "origin")?,
            destination: need(&cols.destination, "destination")?,
            departure: need(&cols.departure, "departure")?,
            arrival: need(&cols.arrival, "arrival")?,
            cancelled: find(headers, &cols.cancelled),
        })
    }
}

enum Row {
    Flight(FlightRecord),
    Drop(&'static str),
}

fn parse_row(
    rec: &csv::StringRecord,
    layout: &Layout,
    opts: &FlightOptions,
    file: &str,
    line: usize,
) -> Result<Row, IngestError> {
    let get = |i: usize| rec.get(i).unwrap_or("").trim();
    let malformed = |reason: String| IngestError::MalformedLine {
        file: file.to_string(),
        line,
        reason,
    };
    if let Some(c) = layout.cancelled {
        let v = get(c);
        if !v.is_empty()
            && v.parse::<f64>()
                .map_err(|_| malformed(format!("bad cancelled flag {v:?}")))?
                != 0.0
        {
            return Ok(Row::Drop("cancelled"));
        }
    }
    let date = match layout.date {
        DateSource::Single(i) => parse_date(get(i)),
        DateSource::Parts(y, m, d) => match (get(y).parse(), get(m).parse(), get(d).parse()) {
            (Ok(y), Ok(m), Ok(d)) => NaiveDate::from_ymd_opt(y, m, d),
            _ => None,
        },
    }
    .ok_or_else(|| malformed("bad flight date".into()))?;
    if let Some((y, m)) = opts.month {
        if date.year() != y || date.month() != m {
            return Ok(Row::Drop("other_month"));
        }
    }
    let (dep_raw, arr_raw) = (get(layout.departure), get(layout.arrival));
    let missing = |s: &str| s.is_empty() || s.eq_ignore_ascii_case("NA");
    if missing(dep_raw) || missing(arr_raw) {
        return Ok(Row::Drop("missing_time"));
    }
    let time = |raw: &str| {
        parse_hhmm(raw).ok_or_else(|| IngestError::MalformedTime {
            file: file.to_string(),
            line,
            value: raw.to_string(),
        })
    };
    let departure = time(dep_raw)?;
    let arrival = time(arr_raw)?;
    let carrier = get(layout.carrier);
    let (origin, destination) = (get(layout.origin), get(layout.destination));
    if carrier.is_empty() || origin.is_empty() || destination.is_empty() {
        return Err(malformed("empty carrier or airport".into()));
    }
    if origin == destination {
        return Ok(Row::Drop("same_airport"));
    }
    Ok(Row::Flight(FlightRecord {
        date,
        carrier: carrier.to_string(),
        origin: origin.to_string(),
        destination: destination.to_string(),
        departure,
        arrival,
    }))
}

/// Reads flight records from CSV with a header row.
pub fn read_flight_records<R: Read>(
    reader: R,
    file: &str,
    opts: &FlightOptions,
) -> Result<(Vec<FlightRecord>, FileReport), IngestError> {
    let mut csv = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = csv
        .headers()
        .map_err(|e| IngestError::Csv {
            file: file.to_string(),
            source: e,
        })?
        .clone();
    let layout = Layout::resolve(&headers, &opts.columns, file)?;
    let mut report = FileReport::new(file);
    let mut out = Vec::new();
    for (n, rec) in csv.records().enumerate() {
        report.total += 1;
        // header is line 1
        let line = n + 2;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                report.skip(
                    opts.on_error,
                    IngestError::Csv {
                        file: file.to_string(),
                        source: e,
                    },
                )?;
                continue;
            }
        };
        match parse_row(&rec, &layout, opts, file, line) {
            Ok(Row::Flight(f)) => {
                report.accepted += 1;
                out.push(f);
            }
            Ok(Row::Drop(reason)) => report.drop_row(reason),
            Err(e) => report.skip(opts.on_error, e)?,
        }
    }
    Ok((out, report))
}

/// Builds the flight graph from already parsed records.
pub fn flights_graph(records: &[FlightRecord], opts: &FlightOptions) -> Result<MultilayerStreamGraph, IngestError> {
    let tps = ticks_per_second(opts.resolution)?;
    let spans: Vec<(i64, i64)> = records.iter().map(FlightRecord::span_seconds).collect();
    let study = match opts.study {
        Some(s) => s,
        None => match (spans.iter().map(|s| s.0).min(), spans.iter().map(|s| s.1).max()) {
            (Some(lo), Some(hi)) => Interval::closed(lo * tps, hi * tps),
            _ => return Err(IngestError::NoRecords { file: "flights".into() }),
        },
    };
    let carriers: BTreeSet<&str> = records.iter().map(|r| r.carrier.as_str()).collect();
    let airports: BTreeSet<&str> = records
        .iter()
        .flat_map(|r| [r.origin.as_str(), r.destination.as_str()])
        .collect();
    let aspect = Aspect::new(CARRIER_ASPECT, carriers.iter().copied())?;
    let mut b = GraphBuilder::new(study, vec![aspect], BuildMode::AutoMaterialize)?
        .resolution(opts.resolution)
        .intralayer_only(true);
    for a in &airports {
        b.node(a);
    }
    for (r, &(dep, arr)) in records.iter().zip(&spans) {
        let time = Interval::closed(dep * tps, arr * tps);
        if !study.contains_interval(&time) {
            continue;
        }
        let layer = b.layer(&[r.carrier.as_str()])?;
        let x = NodeLayer::new(b.node(&r.origin), layer);
        let y = NodeLayer::new(b.node(&r.destination), layer);
        b.add_link(time, x, y)?;
    }
    Ok(b.finish()?)
}

pub fn parse_flights_reader<R: Read>(
    reader: R,
    file: &str,
    opts: &FlightOptions,
) -> Result<(MultilayerStreamGraph, IngestReport), IngestError> {
    let (records, report) = read_flight_records(reader, file, opts)?;
    let g = flights_graph(&records, opts)?;
    Ok((g, IngestReport { files: vec![report] }))
}

pub fn parse_flights(path: &Path, opts: &FlightOptions) -> Result<(MultilayerStreamGraph, IngestReport), IngestError> {
    parse_flights_files(&[path], opts)
}

/// Several extracts merged into one graph.
pub fn parse_flights_files<P: AsRef<Path>>(
    paths: &[P],
    opts: &FlightOptions,
) -> Result<(MultilayerStreamGraph, IngestReport), IngestError> {
    let mut records = Vec::new();
    let mut report = IngestReport::default();
    for p in paths {
        let p = p.as_ref();
        let f = std::fs::File::open(p).map_err(|e| IngestError::io(p, e))?;
        let (mut r, fr) = read_flight_records(std::io::BufReader::new(f), &file_label(p), opts)?;
        records.append(&mut r);
        report.files.push(fr);
    }
    let g = flights_graph(&records, opts)?;
    log::info!("{} flight records over {} airports", records.len(), g.node_count());
    Ok((g, report))
}
