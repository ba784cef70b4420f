//! CSV readers and writers.
//!
//! Price files come in two shapes:
//!
//! * wide: `date,<id1>,<id2>,...`, one row per date, every cell required;
//! * per instrument: `date,adj_close`, the instrument named after the file stem.
//!
//! Dates are ISO-8601 (`YYYY-MM-DD`). Several files are joined on the
//! intersection of their dates.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::backtest::CapitalPath;
use crate::error::{Error, Result};
use crate::estimation::{InstrumentPanel, PriceSeries};

const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Clone, PartialEq)]
pub struct IngestedPanel {
    pub panel: InstrumentPanel,
    /// One entry per instrument: rows dropped by date alignment.
    pub dropped_rows: Vec<(String, usize)>,
}

fn parse_err(file: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => parse_err(path, line, format!("{other:?}")),
    }
}

fn parse_date(path: &Path, line: u64, s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, DATE_FORMAT).map_err(|e| parse_err(path, line, format!("bad date `{s}`: {e}")))
}

fn parse_price(path: &Path, line: u64, column: &str, s: &str) -> Result<f64> {
    if s.is_empty() {
        return Err(parse_err(path, line, format!("missing value in column `{column}`")));
    }
    s.parse::<f64>()
        .map_err(|e| parse_err(path, line, format!("bad number `{s}` in column `{column}`: {e}")))
}

/// Reads one price file into per-instrument series.
pub fn read_price_file(path: &Path) -> Result<Vec<PriceSeries>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if headers.len() < 2 || !headers[0].eq_ignore_ascii_case("date") {
        return Err(parse_err(path, 1, "header must start with `date` followed by price columns"));
    }
    let ids: Vec<String> = if headers.len() == 2 && headers[1].eq_ignore_ascii_case("adj_close") {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "instrument".into());
        vec![stem]
    } else {
        headers.iter().skip(1).map(str::to_string).collect()
    };
    let mut series: Vec<PriceSeries> = ids
        .iter()
        .map(|id| PriceSeries {
            id: id.clone(),
            points: Vec::new(),
        })
        .collect();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let date = parse_date(path, line, &rec[0])?;
        for (j, s) in series.iter_mut().enumerate() {
            let price = parse_price(path, line, &headers[j + 1], &rec[j + 1])?;
            if !(price > 0.0) {
                return Err(Error::NonPositivePrice {
                    instrument: s.id.clone(),
                    date: date.to_string(),
                    price,
                });
            }
            s.points.push((date, price));
        }
    }
    Ok(series)
}

/// Reads and aligns one or more price files.
pub fn ingest_panel(paths: &[PathBuf]) -> Result<IngestedPanel> {
    if paths.is_empty() {
        return Err(Error::Config("no price files given".into()));
    }
    let mut series = Vec::new();
    for p in paths {
        series.extend(read_price_file(p)?);
    }
    let ids: Vec<String> = series.iter().map(|s| s.id.clone()).collect();
    for (i, id) in ids.iter().enumerate() {
        if ids[..i].contains(id) {
            return Err(Error::Config(format!("instrument `{id}` appears more than once")));
        }
    }
    let (panel, dropped) = InstrumentPanel::align(series)?;
    Ok(IngestedPanel {
        panel,
        dropped_rows: ids.into_iter().zip(dropped).collect(),
    })
}

fn fmt_num(v: f64) -> String {
    // shortest representation that parses back to the same double
    format!("{v}")
}

/// Wide-format CSV of a panel.
pub fn panel_to_csv(panel: &InstrumentPanel) -> Vec<u8> {
    let mut out = String::from("date");
    for id in panel.instrument_ids() {
        out.push(',');
        out.push_str(id);
    }
    out.push('\n');
    let p = panel.prices();
    for (t, d) in panel.dates().iter().enumerate() {
        out.push_str(&d.format(DATE_FORMAT).to_string());
        for j in 0..panel.n_instruments() {
            out.push(',');
            out.push_str(&fmt_num(p[(t, j)]));
        }
        out.push('\n');
    }
    out.into_bytes()
}

/// `date,<name1>,<name2>,...` for capital paths sharing the same dates.
pub fn capital_paths_to_csv(names: &[String], paths: &[&CapitalPath]) -> Vec<u8> {
    let mut out = String::from("date");
    for n in names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    if let Some(first) = paths.first() {
        for (t, d) in first.dates.iter().enumerate() {
            out.push_str(&d.format(DATE_FORMAT).to_string());
            for p in paths {
                out.push(',');
                out.push_str(&fmt_num(p.values[t]));
            }
            out.push('\n');
        }
    }
    out.into_bytes()
}

/// Single-column file of per-period returns; a non-numeric first row is
/// taken as a header.
pub fn read_returns(path: &Path) -> Result<Vec<f64>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(i as u64 + 1);
        if rec.len() != 1 {
            return Err(parse_err(path, line, format!("expected one column, found {}", rec.len())));
        }
        let cell = &rec[0];
        match cell.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(parse_err(path, line, format!("bad number `{cell}`: {e}"))),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn per_instrument_files_join_on_intersection() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(dir.path(), "eq.csv", "date,adj_close\n2021-01-04,10\n2021-01-05,11\n2021-01-06,12\n2021-01-07,13\n");
        let b = write(dir.path(), "bd.csv", "date,adj_close\n2021-01-05,5\n2021-01-06,5.1\n2021-01-07,5.2\n2021-01-08,5.3\n");
        let got = ingest_panel(&[a, b]).unwrap();
        assert_eq!(got.panel.instrument_ids(), &["eq".to_string(), "bd".to_string()]);
        assert_eq!(got.panel.n_dates(), 3);
        assert_eq!(got.dropped_rows, vec![("eq".into(), 1), ("bd".into(), 1)]);
    }

    #[test]
    fn two_three_row_files_sharing_two_dates() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(dir.path(), "a.csv", "date,adj_close\n2021-01-04,1\n2021-01-05,2\n2021-01-06,3\n");
        let b = write(dir.path(), "b.csv", "date,adj_close\n2021-01-05,1\n2021-01-06,2\n2021-01-07,3\n");
        let series: Vec<_> = [&a, &b].iter().flat_map(|p| read_price_file(p).unwrap()).collect();
        let aligned = crate::estimation::align_series(series).unwrap();
        assert_eq!(aligned.dates.len(), 2);
        assert_eq!(aligned.dropped_rows, vec![1, 1]);
        // two aligned dates is below the panel minimum of three
        assert!(matches!(ingest_panel(&[a, b]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn wide_file_missing_cell_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "w.csv", "date,eq,bd\n2021-01-04,1,2\n2021-01-05,,2\n2021-01-06,1,2\n");
        match ingest_panel(&[p]) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("`eq`"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_and_non_positive_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "w.csv", "date,eq\n2021-01-04,1\n2021-13-05,2\n2021-01-06,1\n");
        assert!(matches!(ingest_panel(&[p]), Err(Error::Parse { line: 3, .. })));
        let p = write(dir.path(), "z.csv", "date,eq\n2021-01-04,1\n2021-01-05,0\n2021-01-06,1\n");
        assert!(matches!(ingest_panel(&[p]), Err(Error::NonPositivePrice { .. })));
        let p = write(dir.path(), "r.csv", "date,eq\n2021-01-04,1,3\n");
        assert!(matches!(ingest_panel(&[p]), Err(Error::Parse { .. })));
    }

    #[test]
    fn returns_file_with_and_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "r.csv", "return\n0.1\n-0.05\n");
        assert_eq!(read_returns(&p).unwrap(), vec![0.1, -0.05]);
        let p = write(dir.path(), "s.csv", "0.1\n0.2\n");
        assert_eq!(read_returns(&p).unwrap(), vec![0.1, 0.2]);
        let p = write(dir.path(), "t.csv", "0.1\nabc\n");
        assert!(read_returns(&p).is_err());
    }

    #[test]
    fn wide_round_trip() {
        let dates: Vec<_> = (0..4)
            .map(|i| NaiveDate::from_ymd_opt(2021, 3, 1).unwrap() + chrono::Duration::days(i))
            .collect();
        let prices = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 1.012345678901234, 0.99, 0.1 + 0.2, 1e-7, 123456.789, 2.0]);
        let panel = InstrumentPanel::new(vec!["a".into(), "b".into()], dates, prices).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("panel.csv");
        std::fs::write(&p, panel_to_csv(&panel)).unwrap();
        assert_eq!(ingest_panel(&[p]).unwrap().panel, panel);
    }
}
