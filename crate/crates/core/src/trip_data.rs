//! Trip samples and the logged CSV format.
//!
//! A log file holds one row per LIDAR reading, stamped with the GPS date,
//! time, position, speed and course of the equipped vehicle:
//!
//! ```text
//! Date,Time,Latitude,Longitude,Speed (mph),Course Over Ground,Distance (m),Trip Id
//! 2/19/2019,10:12:40 AM,35.00008,-78.6646,18,286.52,7.74,6
//! ```
//!
//! Several rows may share one timestamp (the logger runs faster than the GPS
//! fix rate). Annotated files carry a ninth `Classification` column.

use std::collections::HashMap;
use std::fmt::Write as _;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use thiserror::Error;

use crate::headway_filter::{Classification, Verdict};

/// Maximum sensor range in meters.
pub const MAX_RANGE_M: f64 = 40.0;

/// Maximum pulse width in microseconds (10 µs per centimetre, 40 m range).
pub const MAX_PULSE_US: f64 = 40_000.0;

/// Header of a plain trip log.
pub const HEADER: &str =
    "Date,Time,Latitude,Longitude,Speed (mph),Course Over Ground,Distance (m),Trip Id";

/// Name of the extra column written by annotated logs.
pub const CLASSIFICATION_COLUMN: &str = "Classification";

const DATE_OUT: &str = "%-m/%-d/%Y";
const DATE_IN: &str = "%m/%d/%Y";
const TIME_OUT: &str = "%-I:%M:%S %p";
const TIME_IN: &str = "%I:%M:%S %p";

#[derive(Debug, Error, PartialEq)]
pub enum TripDataError {
    #[error("pulse width {0} us is outside the sensor range [0, 40000]")]
    OutOfRange(f64),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{verdicts} verdicts supplied for {readings} readings")]
    LengthMismatch { readings: usize, verdicts: usize },
}

impl TripDataError {
    fn parse(line: usize, message: impl Into<String>) -> Self {
        TripDataError::Parse {
            line,
            message: message.into(),
        }
    }
}

/// A raw LIDAR pulse width in microseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSample {
    pub width: f64,
}

impl PulseSample {
    pub fn new(width: f64) -> Self {
        Self { width }
    }
}

/// Converts a pulse width to a distance in meters (`d = width / 1000`).
pub fn pulse_to_distance(sample: PulseSample) -> Result<f64, TripDataError> {
    let width = sample.width;
    // NaN fails both comparisons, so test the accepted range positively.
    if !(0.0..=MAX_PULSE_US).contains(&width) {
        return Err(TripDataError::OutOfRange(width));
    }
    Ok(width / 1000.0)
}

/// One logged row.
#[derive(Debug, Clone, PartialEq)]
pub struct RawReading {
    pub date: NaiveDate,
    pub time: NaiveTime,
    pub latitude: f64,
    pub longitude: f64,
    /// Miles per hour.
    pub speed: f64,
    /// Degrees in `[0, 360)`.
    pub course_over_ground: f64,
    /// Headway in meters.
    pub distance: f64,
    pub trip_id: i64,
}

impl RawReading {
    pub fn timestamp(&self) -> NaiveDateTime {
        self.date.and_time(self.time)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trip {
    pub trip_id: i64,
    pub readings: Vec<RawReading>,
}

impl Trip {
    pub fn new(trip_id: i64) -> Self {
        Self {
            trip_id,
            readings: Vec::new(),
        }
    }

    pub fn distances(&self) -> Vec<f64> {
        self.readings.iter().map(|r| r.distance).collect()
    }

    pub fn len(&self) -> usize {
        self.readings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }
}

/// A row that parsed but carries a distance beyond the sensor range.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseWarning {
    pub line: usize,
    pub message: String,
}

/// Result of parsing a log: trips in order of first appearance, plus any
/// per-row verdict labels found in an annotated file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedLog {
    pub trips: Vec<Trip>,
    /// Parallel to `trips[i].readings` when the file had a `Classification`
    /// column, otherwise empty.
    pub verdicts: Vec<Vec<Verdict>>,
    pub warnings: Vec<ParseWarning>,
}

/// Parses a trip log, returning only the trips.
pub fn parse_trip(text: &str) -> Result<Vec<Trip>, TripDataError> {
    parse_log(text).map(|log| log.trips)
}

/// Parses a trip log (plain or annotated) with warnings and verdict labels.
pub fn parse_log(text: &str) -> Result<ParsedLog, TripDataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(TripDataError::parse(1, "missing header")),
        Some(rec) => rec.map_err(|e| TripDataError::parse(1, e.to_string()))?,
    };
    let header: Vec<&str> = header.iter().collect();
    let expected: Vec<&str> = HEADER.split(',').collect();
    let annotated = if header == expected {
        false
    } else if header.len() == expected.len() + 1
        && header[..expected.len()] == expected[..]
        && header[expected.len()] == CLASSIFICATION_COLUMN
    {
        true
    } else {
        return Err(TripDataError::parse(
            1,
            format!("unexpected header {header:?}"),
        ));
    };
    let columns = expected.len() + usize::from(annotated);

    let mut log = ParsedLog::default();
    let mut index_of: HashMap<i64, usize> = HashMap::new();

    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            TripDataError::parse(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != columns {
            return Err(TripDataError::parse(
                line,
                format!("expected {columns} columns, found {}", rec.len()),
            ));
        }

        let reading = parse_row(&rec, line)?;
        if !(0.0..=MAX_RANGE_M).contains(&reading.distance) {
            // negative or NaN distances are rejected by parse_row
            log.warnings.push(ParseWarning {
                line,
                message: format!(
                    "distance {} m exceeds the {MAX_RANGE_M} m sensor range",
                    reading.distance
                ),
            });
        }

        let slot = *index_of.entry(reading.trip_id).or_insert_with(|| {
            log.trips.push(Trip::new(reading.trip_id));
            if annotated {
                log.verdicts.push(Vec::new());
            }
            log.trips.len() - 1
        });
        let trip = &mut log.trips[slot];
        if let Some(prev) = trip.readings.last() {
            if reading.timestamp() < prev.timestamp() {
                return Err(TripDataError::parse(
                    line,
                    format!("timestamp goes backwards within trip {}", reading.trip_id),
                ));
            }
        }
        trip.readings.push(reading);

        if annotated {
            let label = rec[columns - 1].trim();
            let verdict: Verdict = label.parse().map_err(|_| {
                TripDataError::parse(line, format!("unknown classification {label:?}"))
            })?;
            log.verdicts[slot].push(verdict);
        }
    }
    Ok(log)
}

fn parse_row(rec: &csv::StringRecord, line: usize) -> Result<RawReading, TripDataError> {
    let field = |i: usize| rec[i].trim();
    let number = |i: usize, name: &str| -> Result<f64, TripDataError> {
        let v: f64 = field(i).parse().map_err(|_| {
            TripDataError::parse(line, format!("{name}: not a number: {:?}", field(i)))
        })?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(TripDataError::parse(line, format!("{name}: not finite")))
        }
    };

    let date = NaiveDate::parse_from_str(field(0), DATE_IN)
        .map_err(|e| TripDataError::parse(line, format!("Date {:?}: {e}", field(0))))?;
    let time = NaiveTime::parse_from_str(field(1), TIME_IN)
        .map_err(|e| TripDataError::parse(line, format!("Time {:?}: {e}", field(1))))?;
    let latitude = number(2, "Latitude")?;
    let longitude = number(3, "Longitude")?;
    let speed = number(4, "Speed")?;
    let course_over_ground = number(5, "Course Over Ground")?;
    let distance = number(6, "Distance")?;
    let trip_id: i64 = field(7).parse().map_err(|_| {
        TripDataError::parse(line, format!("Trip Id: not an integer: {:?}", field(7)))
    })?;

    if !(-90.0..=90.0).contains(&latitude) {
        return Err(TripDataError::parse(
            line,
            format!("latitude {latitude} out of range"),
        ));
    }
    if !(-180.0..=180.0).contains(&longitude) {
        return Err(TripDataError::parse(
            line,
            format!("longitude {longitude} out of range"),
        ));
    }
    if speed < 0.0 {
        return Err(TripDataError::parse(
            line,
            format!("negative speed {speed}"),
        ));
    }
    if !(0.0..360.0).contains(&course_over_ground) {
        return Err(TripDataError::parse(
            line,
            format!("course {course_over_ground} outside [0, 360)"),
        ));
    }
    if distance < 0.0 {
        return Err(TripDataError::parse(
            line,
            format!("negative distance {distance}"),
        ));
    }

    Ok(RawReading {
        date,
        time,
        latitude,
        longitude,
        speed,
        course_over_ground,
        distance,
        trip_id,
    })
}

/// Writes one trip, optionally annotated with per-reading verdicts.
pub fn write_trip(
    trip: &Trip,
    verdicts: Option<&[Classification]>,
) -> Result<String, TripDataError> {
    write_trips(
        std::slice::from_ref(trip),
        verdicts.map(|v| vec![v]).as_deref(),
    )
}

/// Writes several trips under a single header.
pub fn write_trips(
    trips: &[Trip],
    verdicts: Option<&[&[Classification]]>,
) -> Result<String, TripDataError> {
    if let Some(v) = verdicts {
        if v.len() != trips.len() {
            return Err(TripDataError::LengthMismatch {
                readings: trips.len(),
                verdicts: v.len(),
            });
        }
        for (trip, labels) in trips.iter().zip(v) {
            if labels.len() != trip.readings.len() {
                return Err(TripDataError::LengthMismatch {
                    readings: trip.readings.len(),
                    verdicts: labels.len(),
                });
            }
        }
    }

    let mut out = String::from(HEADER);
    if verdicts.is_some() {
        out.push(',');
        out.push_str(CLASSIFICATION_COLUMN);
    }
    out.push('\n');

    for (t, trip) in trips.iter().enumerate() {
        for (i, r) in trip.readings.iter().enumerate() {
            write_row(&mut out, r);
            if let Some(v) = verdicts {
                let _ = write!(out, ",{}", v[t][i].verdict);
            }
            out.push('\n');
        }
    }
    Ok(out)
}

// f64 Display is the shortest representation that parses back to the same
// value, so "7.74" and "18" are reproduced verbatim.
fn write_row(out: &mut String, r: &RawReading) {
    let _ = write!(
        out,
        "{},{},{},{},{},{},{},{}",
        r.date.format(DATE_OUT),
        r.time.format(TIME_OUT),
        r.latitude,
        r.longitude,
        r.speed,
        r.course_over_ground,
        r.distance,
        r.trip_id
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE_LOG: &str = "\
Date,Time,Latitude,Longitude,Speed (mph),Course Over Ground,Distance (m),Trip Id
2/19/2019,10:12:40 AM,35.00008,-78.6646,18,286.52,7.74,6
2/19/2019,10:12:40 AM,35.00008,-78.6646,18,286.52,7.79,6
2/19/2019,10:12:40 AM,35.00008,-78.6646,18,286.52,7.81,6
2/19/2019,10:12:41 AM,35.78681,-78.6646,18,287.73,0.14,6
2/19/2019,10:12:41 AM,35.78681,-78.6646,18,287.73,7.62,6
2/19/2019,10:12:41 AM,35.78681,-78.6646,18,287.73,7.78,6
";

    #[test]
    fn pulse_conversion() {
        assert_eq!(pulse_to_distance(PulseSample::new(7740.0)), Ok(7.74));
        assert_eq!(pulse_to_distance(PulseSample::new(1000.0)), Ok(1.0));
        assert_eq!(pulse_to_distance(PulseSample::new(0.0)), Ok(0.0));
        assert_eq!(pulse_to_distance(PulseSample::new(40_000.0)), Ok(40.0));
    }

    #[test]
    fn pulse_out_of_range() {
        assert!(matches!(
            pulse_to_distance(PulseSample::new(-1.0)),
            Err(TripDataError::OutOfRange(_))
        ));
        assert!(pulse_to_distance(PulseSample::new(40_000.5)).is_err());
        assert!(pulse_to_distance(PulseSample::new(f64::NAN)).is_err());
    }

    #[test]
    fn parses_sample_table() {
        let trips = parse_trip(SAMPLE_LOG).unwrap();
        assert_eq!(trips.len(), 1);
        assert_eq!(trips[0].trip_id, 6);
        assert_eq!(
            trips[0].distances(),
            vec![7.74, 7.79, 7.81, 0.14, 7.62, 7.78]
        );
        let r = &trips[0].readings[3];
        assert_eq!(r.date, NaiveDate::from_ymd_opt(2019, 2, 19).unwrap());
        assert_eq!(r.time, NaiveTime::from_hms_opt(10, 12, 41).unwrap());
        assert_eq!(r.latitude, 35.78681);
        assert_eq!(r.course_over_ground, 287.73);
    }

    #[test]
    fn sample_table_round_trips_byte_for_byte() {
        let trips = parse_trip(SAMPLE_LOG).unwrap();
        assert_eq!(write_trip(&trips[0], None).unwrap(), SAMPLE_LOG);
    }

    #[test]
    fn header_only_is_empty() {
        assert!(parse_trip(&format!("{HEADER}\n")).unwrap().is_empty());
        assert_eq!(
            write_trip(&Trip::new(3), None).unwrap(),
            format!("{HEADER}\n")
        );
    }

    #[test]
    fn text_in_distance_names_the_line() {
        let bad = SAMPLE_LOG.replace("0.14", "far");
        match parse_trip(&bad) {
            Err(TripDataError::Parse { line, message }) => {
                assert_eq!(line, 5);
                assert!(message.contains("Distance"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_column_count() {
        let bad = format!("{HEADER}\n2/19/2019,10:12:40 AM,35.0,-78.6,18,286.52,7.74\n");
        assert!(matches!(
            parse_trip(&bad),
            Err(TripDataError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn rejects_wrong_header() {
        assert!(matches!(
            parse_trip("Date,Time\n"),
            Err(TripDataError::Parse { line: 1, .. })
        ));
        assert!(parse_trip("").is_err());
    }

    #[test]
    fn backwards_time_is_an_error() {
        let text = format!(
            "{HEADER}\n2/19/2019,10:12:41 AM,35,-78,18,1,7.7,1\n2/19/2019,10:12:40 AM,35,-78,18,1,7.7,1\n"
        );
        assert!(matches!(
            parse_trip(&text),
            Err(TripDataError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn interleaved_trips_are_grouped_in_first_seen_order() {
        let text = format!(
            "{HEADER}\n1/1/2019,1:00:00 PM,0,0,0,0,1,9\n1/1/2019,1:00:00 PM,0,0,0,0,2,4\n1/1/2019,1:00:01 PM,0,0,0,0,3,9\n"
        );
        let trips = parse_trip(&text).unwrap();
        assert_eq!(
            trips.iter().map(|t| t.trip_id).collect::<Vec<_>>(),
            vec![9, 4]
        );
        assert_eq!(trips[0].distances(), vec![1.0, 3.0]);
    }

    #[test]
    fn out_of_range_distance_is_a_warning() {
        let text = format!("{HEADER}\n1/1/2019,1:00:00 PM,0,0,0,0,55.5,1\n");
        let log = parse_log(&text).unwrap();
        assert_eq!(log.trips[0].distances(), vec![55.5]);
        assert_eq!(log.warnings.len(), 1);
        assert_eq!(log.warnings[0].line, 2);

        let neg = format!("{HEADER}\n1/1/2019,1:00:00 PM,0,0,0,0,-1,1\n");
        assert!(parse_log(&neg).is_err());
    }

    #[test]
    fn verdict_length_mismatch() {
        let trips = parse_trip(SAMPLE_LOG).unwrap();
        let five: Vec<Classification> = (0..5).map(Classification::warmup).collect();
        assert_eq!(
            write_trip(&trips[0], Some(&five)),
            Err(TripDataError::LengthMismatch {
                readings: 6,
                verdicts: 5
            })
        );
    }

    #[test]
    fn annotated_output_reparses() {
        let trips = parse_trip(SAMPLE_LOG).unwrap();
        let labels: Vec<Classification> = (0..6).map(Classification::warmup).collect();
        let text = write_trip(&trips[0], Some(&labels)).unwrap();
        assert!(text.starts_with(&format!("{HEADER},Classification\n")));
        let log = parse_log(&text).unwrap();
        assert_eq!(log.trips, trips);
        assert_eq!(log.verdicts, vec![vec![Verdict::Warmup; 6]]);
    }
}
