use std::io::Read;
use std::path::Path;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use super::{ClimateRecord, ClimateSeries, HOURS_PER_YEAR};
use crate::error::{ClimateError, Error, Result};

/// Column names and time handling for a delimited climate file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMapping {
    pub timestamp: String,
    pub t_ext: String,
    pub dni: String,
    pub dhi: String,
    /// Hours added to file timestamps to reach local clock time (e.g. +4 for
    /// a UTC file used in Dubai).
    pub time_shift_hours: f64,
    /// Typical-year files mix source years month by month; only month, day
    /// and time are checked for ordering.
    pub ignore_year: bool,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        ColumnMapping {
            timestamp: "time".into(),
            t_ext: "T2m".into(),
            dni: "Gb(n)".into(),
            dhi: "Gd(h)".into(),
            time_shift_hours: 0.0,
            ignore_year: false,
        }
    }
}

pub fn load_climate(path: impl AsRef<Path>, mapping: &ColumnMapping) -> Result<ClimateSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_climate(file, mapping)
}

const TIME_FORMATS: &[&str] = &[
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%d %H:%M",
    "%Y%m%d:%H%M",
];

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim().trim_end_matches('Z');
    TIME_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

fn sniff_delimiter(text: &str) -> u8 {
    let header = text.lines().next().unwrap_or("");
    if header.matches(';').count() > header.matches(',').count() {
        b';'
    } else {
        b','
    }
}

/// Timestamp folded onto a fixed non-leap year so that ordering checks work
/// for typical-year files.
fn folded(ts: NaiveDateTime) -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2001, ts.month(), ts.day())
        .and_then(|d| d.and_hms_opt(ts.hour(), ts.minute(), ts.second()))
        .expect("Feb 29 is removed before folding")
}

pub fn parse_climate(mut reader: impl Read, mapping: &ColumnMapping) -> Result<ClimateSeries> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| ClimateError::Malformed(e.to_string()))?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(sniff_delimiter(&text))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = rdr
        .headers()
        .map_err(|e| ClimateError::Malformed(e.to_string()))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ClimateError::MissingColumn(name.to_string()))
    };
    let i_ts = col(&mapping.timestamp)?;
    let i_t = col(&mapping.t_ext)?;
    let i_dni = col(&mapping.dni)?;
    let i_dhi = col(&mapping.dhi)?;

    let mut records = Vec::with_capacity(HOURS_PER_YEAR);
    let mut prev: Option<(NaiveDateTime, i32)> = None;
    for (idx, row) in rdr.records().enumerate() {
        let row_no = idx + 1;
        let row = row.map_err(|e| ClimateError::Malformed(format!("row {row_no}: {e}")))?;
        let field = |i: usize| row.get(i).unwrap_or("");

        let raw_ts = field(i_ts);
        let ts = parse_timestamp(raw_ts).ok_or_else(|| ClimateError::Parse {
            row: row_no,
            field: "timestamp",
            value: raw_ts.to_string(),
        })?;
        let num = |i: usize, name: &'static str| -> Result<f64, ClimateError> {
            let v = field(i);
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| ClimateError::Parse {
                    row: row_no,
                    field: name,
                    value: v.to_string(),
                })
        };
        let t_ext = num(i_t, "T_ext")?;
        let dni = num(i_dni, "DNI")?;
        let dhi = num(i_dhi, "DHI")?;
        for (name, v) in [("DNI", dni), ("DHI", dhi)] {
            if v < 0.0 {
                return Err(ClimateError::NegativeIrradiance {
                    row: row_no,
                    field: name,
                    value: v,
                }
                .into());
            }
        }

        // Leap days are dropped so every year maps onto 8760 hours.
        if ts.month() == 2 && ts.day() == 29 {
            continue;
        }
        let key = folded(ts);
        if let Some((p, pyear)) = prev {
            let hourly = key - p == chrono::Duration::hours(1);
            let year_ok = mapping.ignore_year || ts.year() == pyear;
            if !hourly || !year_ok {
                return Err(ClimateError::NonMonotone { row: row_no }.into());
            }
        }
        prev = Some((key, ts.year()));
        records.push(ClimateRecord {
            timestamp: if mapping.ignore_year { key } else { ts },
            t_ext,
            dni,
            dhi,
        });
    }
    ClimateSeries::from_records(records, mapping.time_shift_hours)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fmt::Write;

    fn year_csv(delim: char, mutate: impl Fn(usize, &mut (f64, f64, f64))) -> String {
        let mut s = format!("time{d}T2m{d}Gb(n){d}Gd(h)\n", d = delim);
        let start = NaiveDate::from_ymd_opt(2021, 1, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap();
        for i in 0..HOURS_PER_YEAR {
            let ts = start + chrono::Duration::hours(i as i64);
            let mut v = (25.0, 100.0, 50.0);
            mutate(i + 1, &mut v);
            writeln!(
                s,
                "{}{d}{}{d}{}{d}{}",
                ts.format("%Y-%m-%dT%H:%M"),
                v.0,
                v.1,
                v.2,
                d = delim
            )
            .unwrap();
        }
        s
    }

    #[test]
    fn happy_path() {
        let s = year_csv(',', |_, _| {});
        let series = parse_climate(s.as_bytes(), &ColumnMapping::default()).unwrap();
        assert_eq!(series.len(), 8760);
        assert_eq!(series.records()[0].t_ext, 25.0);
    }

    #[test]
    fn semicolon_delimiter() {
        let s = year_csv(';', |_, _| {});
        let series = parse_climate(s.as_bytes(), &ColumnMapping::default()).unwrap();
        assert_eq!(series.len(), 8760);
    }

    #[test]
    fn negative_dni_names_row() {
        let s = year_csv(',', |row, v| {
            if row == 100 {
                v.1 = -3.0;
            }
        });
        let err = parse_climate(s.as_bytes(), &ColumnMapping::default()).unwrap_err();
        match err {
            Error::Climate(ClimateError::NegativeIrradiance { row, field, .. }) => {
                assert_eq!(row, 100);
                assert_eq!(field, "DNI");
            }
            e => panic!("unexpected {e}"),
        }
        assert!(parse_climate(s.as_bytes(), &ColumnMapping::default())
            .unwrap_err()
            .to_string()
            .contains("row 100"));
    }

    #[test]
    fn short_year_rejected() {
        let s = year_csv(',', |_, _| {});
        let truncated: String = s.lines().take(8760).map(|l| format!("{l}\n")).collect();
        let err = parse_climate(truncated.as_bytes(), &ColumnMapping::default()).unwrap_err();
        assert!(err.to_string().contains("incomplete year"), "{err}");
    }

    #[test]
    fn missing_column() {
        let s = year_csv(',', |_, _| {}).replacen("Gd(h)", "DHI", 1);
        let err = parse_climate(s.as_bytes(), &ColumnMapping::default()).unwrap_err();
        assert!(matches!(
            err,
            Error::Climate(ClimateError::MissingColumn(ref c)) if c == "Gd(h)"
        ));
    }

    #[test]
    fn gap_rejected_with_row() {
        let s = year_csv(',', |_, _| {});
        let mut lines: Vec<&str> = s.lines().collect();
        lines.remove(51);
        let joined = lines.join("\n");
        let err = parse_climate(joined.as_bytes(), &ColumnMapping::default()).unwrap_err();
        assert_eq!(
            err.to_string(),
            "climate data: row 51: timestamps not strictly hourly-increasing"
        );
    }

    #[test]
    fn pvgis_timestamps_and_tmy_years() {
        let mut s = String::from("time(UTC),T2m,Gb(n),Gd(h)\n");
        let start = NaiveDate::from_ymd_opt(2001, 1, 1)
            .unwrap()
            .and_hms_opt(0, 10, 0)
            .unwrap();
        for i in 0..HOURS_PER_YEAR {
            let ts = start + chrono::Duration::hours(i as i64);
            // Alternate source years per month, as typical-year files do.
            let year = 2005 + (ts.month() % 3) as i32;
            writeln!(s, "{}{}, 20, 0, 0", year, ts.format("%m%d:%H%M")).unwrap();
        }
        let mut mapping = ColumnMapping {
            timestamp: "time(UTC)".into(),
            time_shift_hours: 4.0,
            ..Default::default()
        };
        assert!(parse_climate(s.as_bytes(), &mapping).is_err());
        mapping.ignore_year = true;
        let series = parse_climate(s.as_bytes(), &mapping).unwrap();
        assert_eq!(series.len(), 8760);
        let last = series.records()[8759];
        assert_eq!(last.clock_hour(4.0), 3);
        assert_eq!(last.day_of_year(4.0), 1);
    }

    #[test]
    fn leap_year_drops_feb_29() {
        let mut s = String::from("time,T2m,Gb(n),Gd(h)\n");
        let start = NaiveDate::from_ymd_opt(2020, 1, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap();
        for i in 0..8784 {
            let ts = start + chrono::Duration::hours(i);
            writeln!(s, "{},20,0,0", ts.format("%Y-%m-%d %H:%M")).unwrap();
        }
        let series = parse_climate(s.as_bytes(), &ColumnMapping::default()).unwrap();
        assert_eq!(series.len(), 8760);
    }
}
