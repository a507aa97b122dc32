//! Measurement statistics over block and transaction CSV exports.
//!
//! Expected headers:
//!
//! ```text
//! height,timestamp,tx_count,size_bytes
//! id,first_seen,confirmed_at,size_bytes,fee_btc
//! ```
//!
//! Timestamps are unix seconds (UTC). Fees are parsed as fixed-point
//! satoshi amounts so the 0.0001 BTC class boundary is exact. Arrival rates
//! are per second.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

pub const BLOCKS_HEADER: [&str; 4] = ["height", "timestamp", "tx_count", "size_bytes"];
pub const TXS_HEADER: [&str; 5] = ["id", "first_seen", "confirmed_at", "size_bytes", "fee_btc"];

/// Fraction of malformed rows above which a whole file is rejected.
pub const MALFORMED_LIMIT: f64 = 0.01;

const SATOSHI_PER_BTC: i64 = 100_000_000;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: expected header `{expected}`, found `{found}`")]
    Schema {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{path}: {malformed} of {total} rows malformed (first: {first})")]
    TooManyMalformed {
        path: PathBuf,
        malformed: usize,
        total: usize,
        first: RowError,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based line number in the file, header included.
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Fee in satoshi (1e-8 BTC).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Satoshi(pub i64);

impl Satoshi {
    pub fn from_btc_str(s: &str) -> Result<Self, String> {
        s.parse()
    }

    pub fn as_btc(self) -> f64 {
        self.0 as f64 / SATOSHI_PER_BTC as f64
    }
}

impl FromStr for Satoshi {
    type Err = String;

    /// Parses a decimal BTC amount with at most 8 fractional digits.
    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim();
        let (neg, digits) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
        let all_digits = |p: &str| p.bytes().all(|c| c.is_ascii_digit());
        if (int_part.is_empty() && frac_part.is_empty()) || !all_digits(int_part) || !all_digits(frac_part) {
            return Err(format!("`{s}` is not a decimal amount"));
        }
        if frac_part.len() > 8 {
            return Err(format!("`{s}` has more than 8 fractional digits"));
        }
        let whole: i64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| format!("`{s}` is out of range"))?
        };
        let frac: i64 = format!("{frac_part:0<8}").parse().unwrap_or(0);
        let sat = whole
            .checked_mul(SATOSHI_PER_BTC)
            .and_then(|w| w.checked_add(frac))
            .ok_or_else(|| format!("`{s}` is out of range"))?;
        Ok(Satoshi(if neg { -sat } else { sat }))
    }
}

impl fmt::Display for Satoshi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let a = self.0.unsigned_abs();
        let whole = a / SATOSHI_PER_BTC as u64;
        let frac = a % SATOSHI_PER_BTC as u64;
        if frac == 0 {
            write!(f, "{sign}{whole}")
        } else {
            let s = format!("{frac:08}");
            write!(f, "{sign}{whole}.{}", s.trim_end_matches('0'))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockRecord {
    pub height: u64,
    pub timestamp: i64,
    pub tx_count: u64,
    pub size_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TxRecord {
    pub id: String,
    pub first_seen: i64,
    pub confirmed_at: i64,
    pub size_bytes: u64,
    pub fee: Satoshi,
}

impl TxRecord {
    /// Confirmation time in seconds.
    pub fn confirmation_time(&self) -> i64 {
        self.confirmed_at - self.first_seen
    }
}

/// Parsed rows plus the row-level errors that were skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded<T> {
    pub records: Vec<T>,
    pub errors: Vec<RowError>,
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T, String> {
    let raw = rec.get(i).ok_or_else(|| format!("missing `{name}`"))?;
    raw.trim()
        .parse()
        .map_err(|_| format!("invalid `{name}`: `{raw}`"))
}

fn read_rows<R: Read, T>(
    reader: R,
    path: &Path,
    expected: &[&str],
    mut parse: impl FnMut(&csv::StringRecord) -> Result<T, String>,
) -> Result<Loaded<T>, ChainError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|source| ChainError::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .clone();
    let found: Vec<&str> = header.iter().map(str::trim).collect();
    if found != expected {
        return Err(ChainError::Schema {
            path: path.to_path_buf(),
            expected: expected.join(","),
            found: found.join(","),
        });
    }

    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut total = 0usize;
    for row in rdr.records() {
        total += 1;
        match row {
            Ok(rec) => {
                let line = rec.position().map(|p| p.line()).unwrap_or(0);
                let parsed = if rec.len() != expected.len() {
                    Err(format!("expected {} fields, found {}", expected.len(), rec.len()))
                } else {
                    parse(&rec)
                };
                match parsed {
                    Ok(v) => records.push(v),
                    Err(message) => errors.push(RowError { line, message }),
                }
            }
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                errors.push(RowError {
                    line,
                    message: e.to_string(),
                });
            }
        }
    }
    if total > 0 && errors.len() as f64 > MALFORMED_LIMIT * total as f64 {
        return Err(ChainError::TooManyMalformed {
            path: path.to_path_buf(),
            malformed: errors.len(),
            total,
            first: errors[0].clone(),
        });
    }
    Ok(Loaded { records, errors })
}

pub fn read_blocks<R: Read>(reader: R, path: &Path) -> Result<Loaded<BlockRecord>, ChainError> {
    let mut seen = HashSet::new();
    read_rows(reader, path, &BLOCKS_HEADER, |rec| {
        let block = BlockRecord {
            height: field(rec, 0, "height")?,
            timestamp: field(rec, 1, "timestamp")?,
            tx_count: field(rec, 2, "tx_count")?,
            size_bytes: field(rec, 3, "size_bytes")?,
        };
        if !seen.insert(block.height) {
            return Err(format!("duplicate height {}", block.height));
        }
        Ok(block)
    })
}

pub fn read_txs<R: Read>(reader: R, path: &Path) -> Result<Loaded<TxRecord>, ChainError> {
    read_rows(reader, path, &TXS_HEADER, |rec| {
        let fee: Satoshi = rec
            .get(4)
            .ok_or("missing `fee_btc`")?
            .parse()
            .map_err(|e| format!("invalid `fee_btc`: {e}"))?;
        if fee.0 < 0 {
            return Err(format!("negative fee {fee}"));
        }
        let tx = TxRecord {
            id: rec.get(0).unwrap_or_default().trim().to_string(),
            first_seen: field(rec, 1, "first_seen")?,
            confirmed_at: field(rec, 2, "confirmed_at")?,
            size_bytes: field(rec, 3, "size_bytes")?,
            fee,
        };
        if tx.size_bytes == 0 {
            return Err("size_bytes must be positive".into());
        }
        if tx.confirmed_at < tx.first_seen {
            return Err(format!(
                "confirmed_at {} precedes first_seen {}",
                tx.confirmed_at, tx.first_seen
            ));
        }
        Ok(tx)
    })
}

fn open(path: &Path) -> Result<File, ChainError> {
    File::open(path).map_err(|source| ChainError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads both exports.
pub fn load(
    blocks_csv: &Path,
    txs_csv: &Path,
) -> Result<(Loaded<BlockRecord>, Loaded<TxRecord>), ChainError> {
    let blocks = read_blocks(open(blocks_csv)?, blocks_csv)?;
    let txs = read_txs(open(txs_csv)?, txs_csv)?;
    Ok((blocks, txs))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Population variance.
    pub variance: f64,
    pub max: f64,
    pub min: f64,
    /// Lower middle element for even counts.
    pub median: f64,
}

pub fn summarize(values: &[f64]) -> Result<Summary, ChainError> {
    if values.is_empty() {
        return Err(ChainError::EmptyInput("no values to summarize"));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Summary {
        count: n,
        mean,
        variance,
        max: sorted[n - 1],
        min: sorted[0],
        median: sorted[(n - 1) / 2],
    })
}

/// Gaps between consecutive blocks (by height), clamped at zero because
/// miner timestamps are not monotone.
pub fn block_generation_times(blocks: &[BlockRecord]) -> Vec<f64> {
    let mut sorted: Vec<&BlockRecord> = blocks.iter().collect();
    sorted.sort_by_key(|b| b.height);
    sorted
        .windows(2)
        .map(|w| (w[1].timestamp - w[0].timestamp).max(0) as f64)
        .collect()
}

/// Fee at or above `threshold` is high priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassRule {
    pub threshold: Satoshi,
}

impl Default for ClassRule {
    fn default() -> Self {
        Self {
            threshold: Satoshi(10_000),
        }
    }
}

impl ClassRule {
    pub fn new(threshold: Satoshi) -> Result<Self, ChainError> {
        if threshold.0 <= 0 {
            return Err(ChainError::InvalidParameter(format!(
                "fee threshold must be positive, got {threshold}"
            )));
        }
        Ok(Self { threshold })
    }

    pub fn is_high(&self, tx: &TxRecord) -> bool {
        tx.fee >= self.threshold
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassSummary {
    pub count: usize,
    /// `None` when the class is empty.
    pub tct: Option<Summary>,
    /// Transactions per second.
    pub arrival_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeeBucket {
    /// `None` marks the closing row that counts every transaction.
    pub threshold: Option<Satoshi>,
    /// Transactions with fee at or below the threshold.
    pub cumulative: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    pub all: ClassSummary,
    pub high: ClassSummary,
    pub low: ClassSummary,
    pub fee_cumulative: Vec<FeeBucket>,
}

/// Decade fee thresholds from 0 to 10 BTC.
pub fn fee_thresholds() -> [Satoshi; 8] {
    [
        Satoshi(0),
        Satoshi(1_000),
        Satoshi(10_000),
        Satoshi(100_000),
        Satoshi(1_000_000),
        Satoshi(10_000_000),
        Satoshi(100_000_000),
        Satoshi(1_000_000_000),
    ]
}

fn class_summary<'a>(txs: impl Iterator<Item = &'a TxRecord>, span: f64) -> ClassSummary {
    let tcts: Vec<f64> = txs.map(|t| t.confirmation_time() as f64).collect();
    ClassSummary {
        count: tcts.len(),
        tct: summarize(&tcts).ok(),
        arrival_rate: tcts.len() as f64 / span,
    }
}

pub fn classify_and_rates(
    txs: &[TxRecord],
    rule: ClassRule,
    span_seconds: f64,
) -> Result<ClassStats, ChainError> {
    if !(span_seconds.is_finite() && span_seconds > 0.0) {
        return Err(ChainError::InvalidParameter(format!(
            "span must be positive, got {span_seconds}"
        )));
    }
    let mut fees: Vec<Satoshi> = txs.iter().map(|t| t.fee).collect();
    fees.sort_unstable();
    let mut fee_cumulative: Vec<FeeBucket> = fee_thresholds()
        .into_iter()
        .map(|t| FeeBucket {
            threshold: Some(t),
            cumulative: fees.partition_point(|f| *f <= t),
        })
        .collect();
    fee_cumulative.push(FeeBucket {
        threshold: None,
        cumulative: fees.len(),
    });

    Ok(ClassStats {
        all: class_summary(txs.iter(), span_seconds),
        high: class_summary(txs.iter().filter(|t| rule.is_high(t)), span_seconds),
        low: class_summary(txs.iter().filter(|t| !rule.is_high(t)), span_seconds),
        fee_cumulative,
    })
}

/// Default span for rate computations: first to last `first_seen`, at
/// least one second.
pub fn observed_span(txs: &[TxRecord]) -> Option<f64> {
    let lo = txs.iter().map(|t| t.first_seen).min()?;
    let hi = txs.iter().map(|t| t.first_seen).max()?;
    Some(((hi - lo) as f64).max(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BucketRow {
    /// Bucket start, unix seconds.
    pub start: i64,
    pub high: usize,
    pub low: usize,
    /// Percent of the bucket's transactions; `None` for an empty bucket.
    pub high_share: Option<f64>,
    pub low_share: Option<f64>,
    pub high_rate: f64,
    pub low_rate: f64,
}

/// Per-bucket class counts keyed by `first_seen`, covering every bucket
/// from the earliest to the latest transaction.
pub fn time_series(
    txs: &[TxRecord],
    rule: ClassRule,
    bucket_seconds: i64,
) -> Result<Vec<BucketRow>, ChainError> {
    if bucket_seconds <= 0 {
        return Err(ChainError::InvalidParameter(format!(
            "bucket must be positive, got {bucket_seconds}"
        )));
    }
    let (Some(lo), Some(hi)) = (
        txs.iter().map(|t| t.first_seen).min(),
        txs.iter().map(|t| t.first_seen).max(),
    ) else {
        return Ok(Vec::new());
    };
    let first = lo.div_euclid(bucket_seconds);
    let last = hi.div_euclid(bucket_seconds);
    let n = (last - first + 1) as usize;
    let mut counts = vec![(0usize, 0usize); n];
    for tx in txs {
        let i = (tx.first_seen.div_euclid(bucket_seconds) - first) as usize;
        if rule.is_high(tx) {
            counts[i].0 += 1;
        } else {
            counts[i].1 += 1;
        }
    }
    let width = bucket_seconds as f64;
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, (high, low))| {
            let total = high + low;
            let share = |c: usize| (total > 0).then(|| 100.0 * c as f64 / total as f64);
            BucketRow {
                start: (first + i as i64) * bucket_seconds,
                high,
                low,
                high_share: share(high),
                low_share: share(low),
                high_rate: high as f64 / width,
                low_rate: low as f64 / width,
            }
        })
        .collect())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `table,statistic,value` rows for any number of named summaries.
pub fn write_summary_csv<W: Write>(rows: &[(&str, Summary)], mut out: W) -> std::io::Result<()> {
    writeln!(out, "table,statistic,value")?;
    for (name, s) in rows {
        writeln!(out, "{name},count,{}", s.count)?;
        writeln!(out, "{name},mean,{}", s.mean)?;
        writeln!(out, "{name},variance,{}", s.variance)?;
        writeln!(out, "{name},max,{}", s.max)?;
        writeln!(out, "{name},min,{}", s.min)?;
        writeln!(out, "{name},median,{}", s.median)?;
    }
    Ok(())
}

pub fn write_class_csv<W: Write>(stats: &ClassStats, mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "class,count,mean_tct_s,variance_tct,max_tct_s,min_tct_s,median_tct_s,arrival_rate_per_s"
    )?;
    for (name, c) in [("all", &stats.all), ("H", &stats.high), ("L", &stats.low)] {
        writeln!(
            out,
            "{name},{},{},{},{},{},{},{}",
            c.count,
            opt(c.tct.map(|s| s.mean)),
            opt(c.tct.map(|s| s.variance)),
            opt(c.tct.map(|s| s.max)),
            opt(c.tct.map(|s| s.min)),
            opt(c.tct.map(|s| s.median)),
            c.arrival_rate
        )?;
    }
    Ok(())
}

pub fn write_fee_csv<W: Write>(stats: &ClassStats, mut out: W) -> std::io::Result<()> {
    writeln!(out, "fee_btc,cumulative_count")?;
    for b in &stats.fee_cumulative {
        match b.threshold {
            Some(t) => writeln!(out, "{t},{}", b.cumulative)?,
            None => writeln!(out, "all,{}", b.cumulative)?,
        }
    }
    Ok(())
}

pub fn write_time_series_csv<W: Write>(rows: &[BucketRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "bucket_start,class,count,share_pct,arrival_rate_per_s")?;
    for r in rows {
        writeln!(out, "{},H,{},{},{}", r.start, r.high, opt(r.high_share), r.high_rate)?;
        writeln!(out, "{},L,{},{},{}", r.start, r.low, opt(r.low_share), r.low_rate)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tx(id: &str, first_seen: i64, tct: i64, fee: &str) -> TxRecord {
        TxRecord {
            id: id.into(),
            first_seen,
            confirmed_at: first_seen + tct,
            size_bytes: 250,
            fee: fee.parse().unwrap(),
        }
    }

    #[test]
    fn satoshi_parsing() {
        assert_eq!("0.0001".parse::<Satoshi>().unwrap(), Satoshi(10_000));
        assert_eq!("1".parse::<Satoshi>().unwrap(), Satoshi(100_000_000));
        assert_eq!(".5".parse::<Satoshi>().unwrap(), Satoshi(50_000_000));
        assert_eq!("0.00000001".parse::<Satoshi>().unwrap(), Satoshi(1));
        assert_eq!("-0.1".parse::<Satoshi>().unwrap(), Satoshi(-10_000_000));
        assert!("0.000000001".parse::<Satoshi>().is_err());
        assert!("abc".parse::<Satoshi>().is_err());
        assert!("".parse::<Satoshi>().is_err());
        assert!("1e-4".parse::<Satoshi>().is_err());
        assert_eq!(Satoshi(10_000).to_string(), "0.0001");
        assert_eq!(Satoshi(1_000_000_000).to_string(), "10");
    }

    #[test]
    fn float_rounding_does_not_leak_into_classification() {
        // 0.1 + 0.2 style trouble: 0.00009999999 must stay low priority.
        let rule = ClassRule::default();
        assert!(!rule.is_high(&tx("a", 0, 1, "0.00009999")));
        assert!(rule.is_high(&tx("b", 0, 1, "0.00010000")));
    }

    #[test]
    fn summary_statistics() {
        let s = summarize(&[300.0, 900.0, 600.0]).unwrap();
        assert_eq!((s.mean, s.median, s.max, s.min), (600.0, 600.0, 900.0, 300.0));
        assert_eq!(s.variance, 60_000.0);
        let s = summarize(&[377.0]).unwrap();
        assert_eq!((s.mean, s.median, s.variance), (377.0, 377.0, 0.0));
        // lower middle for even counts
        assert_eq!(summarize(&[4.0, 1.0, 3.0, 2.0]).unwrap().median, 2.0);
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn block_gaps_clamped_and_ordered_by_height() {
        let b = |h, t| BlockRecord {
            height: h,
            timestamp: t,
            tx_count: 1,
            size_bytes: 1,
        };
        let gaps = block_generation_times(&[b(3, 1000), b(1, 100), b(2, 1100)]);
        assert_eq!(gaps, vec![1000.0, 0.0]);
    }

    #[test]
    fn classification_split_and_inclusive_bound() {
        let txs: Vec<TxRecord> = (0..10)
            .map(|i| tx(&i.to_string(), i, 60, if i < 3 { "0.00005" } else { "0.0002" }))
            .collect();
        let s = classify_and_rates(&txs, ClassRule::default(), 100.0).unwrap();
        assert_eq!((s.high.count, s.low.count, s.all.count), (7, 3, 10));
        assert!((s.high.arrival_rate - 0.07).abs() < 1e-15);

        let at: Vec<TxRecord> = (0..4).map(|i| tx("x", i, 1, "0.0001")).collect();
        let s = classify_and_rates(&at, ClassRule::default(), 1.0).unwrap();
        assert_eq!((s.high.count, s.low.count), (4, 0));
        assert!(s.low.tct.is_none());
    }

    #[test]
    fn empty_input_has_zero_counts() {
        let s = classify_and_rates(&[], ClassRule::default(), 10.0).unwrap();
        assert_eq!(s.all.count, 0);
        assert_eq!(s.all.arrival_rate, 0.0);
        assert!(s.all.tct.is_none());
        assert!(classify_and_rates(&[], ClassRule::default(), 0.0).is_err());
        assert!(ClassRule::new(Satoshi(0)).is_err());
    }

    #[test]
    fn two_year_rate_is_per_second() {
        let span = 730.0 * 86_400.0;
        let rate: f64 = 61_353_014.0 / span;
        assert!((rate - 0.9727).abs() < 1e-4);
    }

    #[test]
    fn time_series_shares() {
        let day = 86_400;
        let mut txs = Vec::new();
        for d in 0..3 {
            for i in 0..10 {
                let fee = if i == 0 { "0" } else { "0.001" };
                txs.push(tx("t", d * day + i * 100, 30, fee));
            }
        }
        let rows = time_series(&txs, ClassRule::default(), day).unwrap();
        assert_eq!(rows.len(), 3);
        for r in &rows {
            assert_eq!(r.high_share, Some(90.0));
            assert_eq!(r.low_share, Some(10.0));
        }
    }

    #[test]
    fn time_series_gap_bucket_is_absent() {
        let day = 86_400;
        let txs = vec![tx("a", 10, 1, "0.01"), tx("b", 2 * day + 5, 1, "0")];
        let rows = time_series(&txs, ClassRule::default(), day).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1].high + rows[1].low, 0);
        assert_eq!(rows[1].high_share, None);
        assert!(time_series(&txs, ClassRule::default(), 0).is_err());
    }

    #[test]
    fn row_errors_carry_line_numbers() {
        let mut text = String::from("id,first_seen,confirmed_at,size_bytes,fee_btc\n");
        for i in 0..200 {
            text.push_str(&format!("t{i},{i},{},200,0.0001\n", i + 10));
        }
        text.push_str("bad,5,10,200,-0.5\n");
        let loaded = read_txs(text.as_bytes(), Path::new("txs.csv")).unwrap();
        assert_eq!(loaded.records.len(), 200);
        assert_eq!(loaded.errors.len(), 1);
        assert_eq!(loaded.errors[0].line, 202);
        assert!(loaded.errors[0].message.contains("negative fee"));
    }

    #[test]
    fn too_many_bad_rows_rejects_file() {
        let text = "height,timestamp,tx_count,size_bytes\n1,10,1,1\n2,x,1,1\n";
        assert!(matches!(
            read_blocks(text.as_bytes(), Path::new("b.csv")),
            Err(ChainError::TooManyMalformed { malformed: 1, total: 2, .. })
        ));
    }

    #[test]
    fn schema_mismatch() {
        let text = "height,time,tx_count,size_bytes\n";
        assert!(matches!(
            read_blocks(text.as_bytes(), Path::new("b.csv")),
            Err(ChainError::Schema { .. })
        ));
    }

    #[test]
    fn header_only_is_empty() {
        let loaded = read_blocks("height,timestamp,tx_count,size_bytes\n".as_bytes(), Path::new("b.csv")).unwrap();
        assert!(loaded.records.is_empty() && loaded.errors.is_empty());
    }

    #[test]
    fn duplicate_heights_are_row_errors() {
        let mut text = String::from("height,timestamp,tx_count,size_bytes\n");
        for i in 0..150 {
            text.push_str(&format!("{i},{},1,1\n", i * 600));
        }
        text.push_str("3,99999,1,1\n");
        let loaded = read_blocks(text.as_bytes(), Path::new("b.csv")).unwrap();
        assert_eq!(loaded.errors.len(), 1);
        assert!(loaded.errors[0].message.contains("duplicate"));
    }
}
