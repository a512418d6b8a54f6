use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;

use stot_nts::pricer::OptionKind;

use crate::error::{input, CliError};

/// 17 significant digits: parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn reader(path: &Path) -> Result<csv::Reader<File>, CliError> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(f))
}

pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map(|p| format!(" line {}", p.line())).unwrap_or_default();
    input(format!("{}:{line}: {e}", path.display()))
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize, CliError> {
    headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case(name))
        .ok_or_else(|| input(format!("{}: missing column {name:?}", path.display())))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str, path: &Path) -> Result<T, CliError> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec.get(i).unwrap_or("");
    raw.parse().map_err(|_| input(format!("{}: line {line}: invalid {name} {raw:?}", path.display())))
}

/// Log-returns from the `return` column, or the only column of the file.
pub fn read_returns(path: &Path) -> Result<Vec<f64>, CliError> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let i = if headers.len() == 1 { 0 } else { column(&headers, "return", path)? };
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let v: f64 = field(&rec, i, "return", path)?;
        if !v.is_finite() {
            let line = rec.position().map_or(0, |p| p.line());
            return Err(input(format!("{}: line {line}: return is not finite", path.display())));
        }
        out.push(v);
    }
    Ok(out)
}

/// One residual set per fitted window, keyed by the window's end index.
pub type ResidualArchive = BTreeMap<usize, Vec<f64>>;

pub fn write_residuals(path: &Path, archive: &ResidualArchive) -> Result<(), CliError> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(w, "window_end,index,residual").map_err(io)?;
    for (end, res) in archive {
        for (k, r) in res.iter().enumerate() {
            writeln!(w, "{end},{k},{}", num(*r)).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

pub fn read_residuals(path: &Path) -> Result<ResidualArchive, CliError> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let (ie, ir) = (column(&headers, "window_end", path)?, column(&headers, "residual", path)?);
    let mut archive = ResidualArchive::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let end: usize = field(&rec, ie, "window_end", path)?;
        let r: f64 = field(&rec, ir, "residual", path)?;
        archive.entry(end).or_default().push(r);
    }
    if archive.is_empty() {
        return Err(input(format!("{}: residual archive is empty", path.display())));
    }
    Ok(archive)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainRow {
    pub date: NaiveDate,
    pub expiry: NaiveDate,
    pub strike: f64,
    pub kind: OptionKind,
    pub bid: f64,
    pub ask: f64,
}

pub fn parse_kind(s: &str) -> Option<OptionKind> {
    match s.to_ascii_lowercase().as_str() {
        "c" | "call" => Some(OptionKind::Call),
        "p" | "put" => Some(OptionKind::Put),
        _ => None,
    }
}

pub fn kind_name(k: OptionKind) -> &'static str {
    match k {
        OptionKind::Call => "call",
        OptionKind::Put => "put",
    }
}

/// Option chain with columns `date,expiry,strike,kind,bid,ask`.
pub fn read_chain(path: &Path) -> Result<Vec<ChainRow>, CliError> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let cols: Vec<usize> = ["date", "expiry", "strike", "kind", "bid", "ask"]
        .iter()
        .map(|c| column(&headers, c, path))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let kind_raw = rec.get(cols[3]).unwrap_or("");
        let kind = parse_kind(kind_raw)
            .ok_or_else(|| input(format!("{}: line {line}: invalid kind {kind_raw:?}", path.display())))?;
        rows.push(ChainRow {
            date: field(&rec, cols[0], "date", path)?,
            expiry: field(&rec, cols[1], "expiry", path)?,
            strike: field(&rec, cols[2], "strike", path)?,
            kind,
            bid: field(&rec, cols[4], "bid", path)?,
            ask: field(&rec, cols[5], "ask", path)?,
        });
    }
    Ok(rows)
}

/// Trading dates, one ISO date per line; blank lines and `#` comments are
/// skipped.
pub fn read_calendar(path: &Path) -> Result<Vec<NaiveDate>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut days = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let d: NaiveDate = line.parse().map_err(|_| input(format!("{}: line {}: invalid date {line:?}", path.display(), k + 1)))?;
        days.push(d);
    }
    days.sort();
    days.dedup();
    if days.is_empty() {
        return Err(input(format!("{}: calendar is empty", path.display())));
    }
    Ok(days)
}

/// Trading steps from `date` to `expiry`: the expiry is snapped to the
/// nearest trading date (ties go later).
pub fn steps_between(calendar: &[NaiveDate], date: NaiveDate, expiry: NaiveDate) -> Result<usize, CliError> {
    let start = calendar
        .binary_search(&date)
        .map_err(|_| input(format!("valuation date {date} is not a trading date in the calendar")))?;
    if expiry < date {
        return Err(input(format!("expiry {expiry} precedes valuation date {date}")));
    }
    let end = match calendar.binary_search(&expiry) {
        Ok(i) => i,
        Err(i) if i == calendar.len() => {
            return Err(input(format!("expiry {expiry} lies beyond the calendar")));
        }
        Err(i) => {
            let before = (expiry - calendar[i - 1]).num_days();
            let after = (calendar[i] - expiry).num_days();
            if before < after { i - 1 } else { i }
        }
    };
    Ok(end - start)
}

/// Key-value text report with `[section]` headers, written in insertion
/// order.
#[derive(Debug, Default)]
pub struct Report {
    lines: Vec<String>,
}

impl Report {
    pub fn new(command: &str, seed: u64, config_hash: &str) -> Self {
        let mut r = Report::default();
        r.kv("command", command);
        r.kv("version", stot_nts::VERSION);
        r.kv("seed", seed);
        r.kv("config_sha256", config_hash);
        r
    }

    pub fn section(&mut self, name: &str) {
        self.lines.push(String::new());
        self.lines.push(format!("[{name}]"));
    }

    pub fn kv(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push(format!("{key} = {value}"));
    }

    pub fn num(&mut self, key: &str, value: f64) {
        self.kv(key, num(value));
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = self.lines.join("\n");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }
}
