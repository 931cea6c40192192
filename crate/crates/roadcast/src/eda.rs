//! Descriptive statistics over accepted records, emitted as plot-ready
//! tables. Keys are strings chosen so lexical order equals natural order;
//! shares are over non-missing rows, with misses reported per table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{Datelike, Days, Months, NaiveDate, Timelike};

use crate::ingest::AccidentRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct StatRow {
    pub key: String,
    pub count: u64,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatTable {
    pub name: String,
    pub key_name: String,
    pub rows: Vec<StatRow>,
    /// Records lacking the key field, hence outside the shares.
    pub excluded: u64,
}

impl StatTable {
    fn from_counts(name: &str, key_name: &str, counts: BTreeMap<String, u64>, excluded: u64) -> StatTable {
        let total: u64 = counts.values().sum();
        let rows = counts
            .into_iter()
            .map(|(key, count)| StatRow {
                key,
                count,
                share: if total == 0 { 0.0 } else { count as f64 / total as f64 },
            })
            .collect();
        StatTable { name: name.to_string(), key_name: key_name.to_string(), rows, excluded }
    }

    pub fn total(&self) -> u64 {
        self.rows.iter().map(|r| r.count).sum()
    }

    /// Key of the largest count; count ties break toward the smaller key.
    pub fn argmax(&self) -> Option<&StatRow> {
        self.rows.iter().max_by(|a, b| a.count.cmp(&b.count).then(b.key.cmp(&a.key)))
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{},count,share\n", self.key_name);
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{:?}", r.key, r.count, r.share);
        }
        out
    }
}

fn tally<I: IntoIterator<Item = String>>(keys: I) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for k in keys {
        *counts.entry(k).or_insert(0) += 1;
    }
    counts
}

fn zero_fill<I: IntoIterator<Item = String>>(counts: &mut BTreeMap<String, u64>, keys: I) {
    for k in keys {
        counts.entry(k).or_insert(0);
    }
}

pub fn state_counts(records: &[AccidentRecord]) -> StatTable {
    let counts = tally(records.iter().map(|r| r.state.clone()));
    StatTable::from_counts("state_counts", "state", counts, 0)
}

pub fn hourly_histogram(records: &[AccidentRecord]) -> StatTable {
    let mut counts = tally(records.iter().map(|r| format!("{:02}", r.start_time.hour())));
    zero_fill(&mut counts, (0..24).map(|h| format!("{h:02}")));
    StatTable::from_counts("hourly_histogram", "hour", counts, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    Daily,
    Monthly,
    Yearly,
}

/// Consecutive calendar keys from `min` to `max` inclusive.
fn date_range_keys(min: NaiveDate, max: NaiveDate, g: Granularity) -> Vec<String> {
    let mut keys = Vec::new();
    match g {
        Granularity::Daily => {
            let mut d = min;
            while d <= max {
                keys.push(d.format("%Y-%m-%d").to_string());
                d = d.checked_add_days(Days::new(1)).expect("date in range");
            }
        }
        Granularity::Monthly => {
            let mut d = min.with_day(1).expect("day 1 valid");
            let end = max.with_day(1).expect("day 1 valid");
            while d <= end {
                keys.push(d.format("%Y-%m").to_string());
                d = d.checked_add_months(Months::new(1)).expect("date in range");
            }
        }
        Granularity::Yearly => {
            for y in min.year()..=max.year() {
                keys.push(format!("{y:04}"));
            }
        }
    }
    keys
}

pub fn frequency_series(records: &[AccidentRecord], g: Granularity) -> StatTable {
    let key_of = |r: &AccidentRecord| {
        let d = r.start_time.date();
        match g {
            Granularity::Daily => d.format("%Y-%m-%d").to_string(),
            Granularity::Monthly => d.format("%Y-%m").to_string(),
            Granularity::Yearly => format!("{:04}", d.year()),
        }
    };
    let mut counts = tally(records.iter().map(key_of));
    if let (Some(min), Some(max)) = (
        records.iter().map(|r| r.start_time.date()).min(),
        records.iter().map(|r| r.start_time.date()).max(),
    ) {
        zero_fill(&mut counts, date_range_keys(min, max, g));
    }
    let (name, key_name) = match g {
        Granularity::Daily => ("daily_counts", "date"),
        Granularity::Monthly => ("monthly_counts", "month"),
        Granularity::Yearly => ("yearly_counts", "year"),
    };
    StatTable::from_counts(name, key_name, counts, 0)
}

const WEEKDAY_KEYS: [&str; 7] = [
    "1-monday",
    "2-tuesday",
    "3-wednesday",
    "4-thursday",
    "5-friday",
    "6-saturday",
    "7-sunday",
];

pub fn weekday_shares(records: &[AccidentRecord]) -> StatTable {
    let mut counts = tally(
        records
            .iter()
            .map(|r| WEEKDAY_KEYS[r.start_time.weekday().num_days_from_monday() as usize].to_string()),
    );
    zero_fill(&mut counts, WEEKDAY_KEYS.iter().map(|k| k.to_string()));
    StatTable::from_counts("weekday_shares", "weekday", counts, 0)
}

pub const WINDSPEED_CAP_MPH: f64 = 60.0;

/// Bins wind speed into [k·w, (k+1)·w) up to the cap, plus one overflow
/// bin; rows missing wind speed are excluded and counted. Negative
/// readings clamp into the lowest bin.
pub fn windspeed_profile(records: &[AccidentRecord], bin_width: f64) -> StatTable {
    assert!(bin_width > 0.0, "bin width must be positive");
    let mut excluded = 0u64;
    let mut keys = Vec::new();
    for r in records {
        match r.wind_speed_mph {
            None => excluded += 1,
            Some(v) if v >= WINDSPEED_CAP_MPH => keys.push(format!("{WINDSPEED_CAP_MPH:06.2}+")),
            Some(v) => {
                let lo = (v.max(0.0) / bin_width).floor() * bin_width;
                keys.push(format!("{lo:06.2}"));
            }
        }
    }
    StatTable::from_counts("windspeed_profile", "windspeed_bin", tally(keys), excluded)
}

pub fn day_of_month_counts(records: &[AccidentRecord]) -> StatTable {
    let mut counts = tally(records.iter().map(|r| format!("{:02}", r.start_time.day())));
    zero_fill(&mut counts, (1..=31).map(|d| format!("{d:02}")));
    StatTable::from_counts("day_of_month_counts", "day_of_month", counts, 0)
}

/// The seven committed tables plus the day-of-month extra, fixed order.
pub fn all_tables(records: &[AccidentRecord], wind_bin_mph: f64) -> Vec<StatTable> {
    vec![
        state_counts(records),
        hourly_histogram(records),
        frequency_series(records, Granularity::Daily),
        frequency_series(records, Granularity::Monthly),
        frequency_series(records, Granularity::Yearly),
        weekday_shares(records),
        windspeed_profile(records, wind_bin_mph),
        day_of_month_counts(records),
    ]
}

pub fn summary_report(tables: &[StatTable]) -> String {
    let mut out = String::new();
    for t in tables {
        let _ = writeln!(out, "[{}]", t.name);
        let _ = writeln!(out, "rows: {}", t.rows.len());
        let _ = writeln!(out, "total: {}", t.total());
        let _ = writeln!(out, "excluded: {}", t.excluded);
        match t.argmax() {
            Some(top) => {
                let _ = writeln!(out, "top: {} count {} share {:.4}", top.key, top.count, top.share);
            }
            None => {
                let _ = writeln!(out, "top: -");
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::tests::base_record;
    use chrono::NaiveDate;

    fn rec(state: &str, time: &str, wind: Option<f64>) -> AccidentRecord {
        let mut r = base_record();
        r.state = state.to_string();
        r.start_time = chrono::NaiveDateTime::parse_from_str(time, "%Y-%m-%d %H:%M:%S").unwrap();
        r.end_time = r.start_time;
        r.wind_speed_mph = wind;
        r
    }

    #[test]
    fn state_table_hand_count() {
        let mut recs = Vec::new();
        for (state, n) in [("CA", 4), ("FL", 3), ("TX", 3)] {
            for _ in 0..n {
                recs.push(rec(state, "2022-01-01 10:00:00", None));
            }
        }
        let t = state_counts(&recs);
        assert_eq!(t.argmax().unwrap().key, "CA");
        assert_eq!(t.argmax().unwrap().count, 4);
        assert_eq!(t.total(), 10);
        let share_sum: f64 = t.rows.iter().map(|r| r.share).sum();
        assert!((share_sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_input_gives_empty_state_table() {
        let t = state_counts(&[]);
        assert!(t.rows.is_empty());
        assert_eq!(t.excluded, 0);
    }

    #[test]
    fn hourly_has_24_rows_and_concentrates() {
        let recs = vec![
            rec("CA", "2022-01-01 17:05:00", None),
            rec("CA", "2022-01-02 17:59:00", None),
        ];
        let t = hourly_histogram(&recs);
        assert_eq!(t.rows.len(), 24);
        let h17 = t.rows.iter().find(|r| r.key == "17").unwrap();
        assert_eq!(h17.count, 2);
        assert_eq!(h17.share, 1.0);
    }

    #[test]
    fn daily_counts_hand_example() {
        let recs = vec![
            rec("CA", "2020-01-01 01:00:00", None),
            rec("CA", "2020-01-01 02:00:00", None),
            rec("CA", "2020-01-02 03:00:00", None),
        ];
        let t = frequency_series(&recs, Granularity::Daily);
        let counts: Vec<u64> = t.rows.iter().map(|r| r.count).collect();
        assert_eq!(counts, vec![2, 1]);
    }

    #[test]
    fn monthly_zero_fills_gaps() {
        let recs = vec![
            rec("CA", "2021-01-05 01:00:00", None),
            rec("CA", "2021-03-05 01:00:00", None),
        ];
        let t = frequency_series(&recs, Granularity::Monthly);
        let keys: Vec<&str> = t.rows.iter().map(|r| r.key.as_str()).collect();
        assert_eq!(keys, vec!["2021-01", "2021-02", "2021-03"]);
        assert_eq!(t.rows[1].count, 0);
    }

    #[test]
    fn weekday_share_hand_count() {
        // 2022-01-07 is a Friday
        let mut recs = Vec::new();
        for d in 3..=9 {
            recs.push(rec("CA", &format!("2022-01-{d:02} 10:00:00"), None));
        }
        for _ in 0..3 {
            recs.push(rec("CA", "2022-01-07 11:00:00", None));
        }
        for d in 10..=13 {
            recs.push(rec("CA", &format!("2022-01-{d:02} 10:00:00"), None));
        }
        assert_eq!(recs.len(), 14);
        let t = weekday_shares(&recs);
        assert_eq!(t.rows.len(), 7);
        let fri = t.rows.iter().find(|r| r.key == "5-friday").unwrap();
        assert_eq!(fri.count, 4);
        assert!((fri.share - 4.0 / 14.0).abs() < 1e-12);
    }

    #[test]
    fn windspeed_excludes_missing_and_bins_zero() {
        let recs = vec![
            rec("CA", "2022-01-01 10:00:00", Some(0.0)),
            rec("CA", "2022-01-01 11:00:00", Some(0.4)),
            rec("CA", "2022-01-01 12:00:00", None),
            rec("CA", "2022-01-01 13:00:00", Some(75.0)),
        ];
        let t = windspeed_profile(&recs, 1.0);
        assert_eq!(t.excluded, 1);
        assert_eq!(t.total() + t.excluded, 4);
        let zero = t.rows.iter().find(|r| r.key == "000.00").unwrap();
        assert_eq!(zero.count, 2);
        assert!(t.rows.iter().any(|r| r.key == "060.00+" && r.count == 1));
    }

    #[test]
    fn tables_invariant_under_record_permutation() {
        let mut recs: Vec<AccidentRecord> = (0..40)
            .map(|i| {
                rec(
                    if i % 3 == 0 { "CA" } else { "TX" },
                    &format!("2022-0{}-{:02} {:02}:15:00", 1 + i % 2, 1 + i % 27, i % 24),
                    if i % 5 == 0 { None } else { Some((i % 13) as f64) },
                )
            })
            .collect();
        let before = all_tables(&recs, 1.0);
        recs.reverse();
        recs.swap(0, 7);
        assert_eq!(all_tables(&recs, 1.0), before);
    }

    #[test]
    fn conservation_across_all_tables() {
        let recs: Vec<AccidentRecord> = (0..25)
            .map(|i| {
                rec(
                    "WA",
                    &format!("2022-01-{:02} {:02}:00:00", 1 + i % 28, i % 24),
                    if i % 4 == 0 { None } else { Some(i as f64) },
                )
            })
            .collect();
        for t in all_tables(&recs, 1.0) {
            assert_eq!(t.total() + t.excluded, 25, "table {}", t.name);
        }
    }

    #[test]
    fn yearly_range_fills_between() {
        let recs = vec![
            rec("CA", "2019-06-01 10:00:00", None),
            rec("CA", "2021-06-01 10:00:00", None),
        ];
        let t = frequency_series(&recs, Granularity::Yearly);
        let keys: Vec<&str> = t.rows.iter().map(|r| r.key.as_str()).collect();
        assert_eq!(keys, vec!["2019", "2020", "2021"]);
    }

    #[test]
    fn date_helpers_cover_leap_boundary() {
        let keys = date_range_keys(
            NaiveDate::from_ymd_opt(2020, 2, 28).unwrap(),
            NaiveDate::from_ymd_opt(2020, 3, 1).unwrap(),
            Granularity::Daily,
        );
        assert_eq!(keys, vec!["2020-02-28", "2020-02-29", "2020-03-01"]);
    }
}
