//! Snapshot ingestion: schema check against the 47-column header, per-row
//! validation into [`AccidentRecord`], and exact accept/reject accounting.
//!
//! `Number` and `Description` are part of the schema but carry nothing the
//! pipeline uses; they are parsed and dropped, and serialize back as empty.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use chrono::{NaiveDateTime, Timelike};

use crate::error::{from_csv, AppError};

/// Canonical column order of the snapshot. Files may permute these names
/// but must carry exactly this set.
pub const COLUMNS: [&str; 47] = [
    "ID",
    "Severity",
    "Start_Time",
    "End_Time",
    "Start_Lat",
    "Start_Lng",
    "End_Lat",
    "End_Lng",
    "Distance(mi)",
    "Description",
    "Number",
    "Street",
    "Side",
    "City",
    "County",
    "State",
    "Zipcode",
    "Country",
    "Timezone",
    "Airport_Code",
    "Weather_Timestamp",
    "Temperature(F)",
    "Wind_Chill(F)",
    "Humidity(%)",
    "Pressure(in)",
    "Visibility(mi)",
    "Wind_Direction",
    "Wind_Speed(mph)",
    "Weather_Condition",
    "Precipitation(in)",
    "Amenity",
    "Bump",
    "Crossing",
    "Give_Way",
    "Junction",
    "No_Exit",
    "Railway",
    "Roundabout",
    "Station",
    "Stop",
    "Traffic_Calming",
    "Traffic_Signal",
    "Turning_Loop",
    "Sunrise_Sunset",
    "Civil_Twilight",
    "Nautical_Twilight",
    "Astronomical_Twilight",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DayNight {
    Day,
    Night,
}

impl DayNight {
    fn parse(s: &str) -> Option<DayNight> {
        if s.eq_ignore_ascii_case("day") {
            Some(DayNight::Day)
        } else if s.eq_ignore_ascii_case("night") {
            Some(DayNight::Night)
        } else {
            None
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            DayNight::Day => "Day",
            DayNight::Night => "Night",
        }
    }
}

/// One validated accident. Optional fields keep "absent" distinct from any
/// sentinel value; timestamps are naive local clock time, fractional
/// seconds truncated.
#[derive(Debug, Clone, PartialEq)]
pub struct AccidentRecord {
    pub id: String,
    pub severity: u8,
    pub start_time: NaiveDateTime,
    pub end_time: NaiveDateTime,
    pub start_lat: f64,
    pub start_lng: f64,
    pub end_lat: Option<f64>,
    pub end_lng: Option<f64>,
    pub distance_mi: Option<f64>,
    pub street: Option<String>,
    pub side: Option<String>,
    pub city: Option<String>,
    pub county: Option<String>,
    pub state: String,
    pub zipcode: Option<String>,
    pub country: Option<String>,
    pub timezone: Option<String>,
    pub airport_code: Option<String>,
    pub weather_timestamp: Option<NaiveDateTime>,
    pub temperature_f: Option<f64>,
    pub wind_chill_f: Option<f64>,
    pub humidity_pct: Option<f64>,
    pub pressure_in: Option<f64>,
    pub visibility_mi: Option<f64>,
    pub wind_direction: Option<String>,
    pub wind_speed_mph: Option<f64>,
    pub weather_condition: Option<String>,
    pub precipitation_in: Option<f64>,
    pub amenity: bool,
    pub bump: bool,
    pub crossing: bool,
    pub give_way: bool,
    pub junction: bool,
    pub no_exit: bool,
    pub railway: bool,
    pub roundabout: bool,
    pub station: bool,
    pub stop: bool,
    pub traffic_calming: bool,
    pub traffic_signal: bool,
    pub turning_loop: bool,
    pub sunrise_sunset: Option<DayNight>,
    pub civil_twilight: Option<DayNight>,
    pub nautical_twilight: Option<DayNight>,
    pub astronomical_twilight: Option<DayNight>,
}

pub const TIME_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

fn fmt_time(t: &NaiveDateTime) -> String {
    t.format(TIME_FORMAT).to_string()
}

fn fmt_opt_f64(v: &Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn fmt_bool(b: bool) -> String {
    if b { "True".to_string() } else { "False".to_string() }
}

impl AccidentRecord {
    /// Serializes back to a canonical-order row; re-parsing it yields an
    /// identical record. Unstored columns (Description, Number) are empty.
    pub fn to_row(&self) -> Vec<String> {
        let opt = |s: &Option<String>| s.clone().unwrap_or_default();
        let dn = |d: &Option<DayNight>| d.map(|v| v.as_str().to_string()).unwrap_or_default();
        vec![
            self.id.clone(),
            self.severity.to_string(),
            fmt_time(&self.start_time),
            fmt_time(&self.end_time),
            format!("{:?}", self.start_lat),
            format!("{:?}", self.start_lng),
            fmt_opt_f64(&self.end_lat),
            fmt_opt_f64(&self.end_lng),
            fmt_opt_f64(&self.distance_mi),
            String::new(),
            String::new(),
            opt(&self.street),
            opt(&self.side),
            opt(&self.city),
            opt(&self.county),
            self.state.clone(),
            opt(&self.zipcode),
            opt(&self.country),
            opt(&self.timezone),
            opt(&self.airport_code),
            self.weather_timestamp.as_ref().map(fmt_time).unwrap_or_default(),
            fmt_opt_f64(&self.temperature_f),
            fmt_opt_f64(&self.wind_chill_f),
            fmt_opt_f64(&self.humidity_pct),
            fmt_opt_f64(&self.pressure_in),
            fmt_opt_f64(&self.visibility_mi),
            opt(&self.wind_direction),
            fmt_opt_f64(&self.wind_speed_mph),
            opt(&self.weather_condition),
            fmt_opt_f64(&self.precipitation_in),
            fmt_bool(self.amenity),
            fmt_bool(self.bump),
            fmt_bool(self.crossing),
            fmt_bool(self.give_way),
            fmt_bool(self.junction),
            fmt_bool(self.no_exit),
            fmt_bool(self.railway),
            fmt_bool(self.roundabout),
            fmt_bool(self.station),
            fmt_bool(self.stop),
            fmt_bool(self.traffic_calming),
            fmt_bool(self.traffic_signal),
            fmt_bool(self.turning_loop),
            dn(&self.sunrise_sunset),
            dn(&self.civil_twilight),
            dn(&self.nautical_twilight),
            dn(&self.astronomical_twilight),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseMode {
    Strict,
    Lenient,
}

/// Optional record fields tracked in the per-field missing counts, in
/// summary display order.
const OPTIONAL_FIELDS: [&str; 25] = [
    "end_lat",
    "end_lng",
    "distance_mi",
    "street",
    "side",
    "city",
    "county",
    "zipcode",
    "country",
    "timezone",
    "airport_code",
    "weather_timestamp",
    "temperature_f",
    "wind_chill_f",
    "humidity_pct",
    "pressure_in",
    "visibility_mi",
    "wind_direction",
    "wind_speed_mph",
    "weather_condition",
    "precipitation_in",
    "sunrise_sunset",
    "civil_twilight",
    "nautical_twilight",
    "astronomical_twilight",
];

#[derive(Debug, Clone, PartialEq)]
pub struct IngestSummary {
    pub rows_read: u64,
    pub rows_accepted: u64,
    pub rows_rejected: u64,
    pub missing: BTreeMap<&'static str, u64>,
    pub min_start_time: Option<NaiveDateTime>,
    pub max_start_time: Option<NaiveDateTime>,
}

impl IngestSummary {
    fn new() -> Self {
        IngestSummary {
            rows_read: 0,
            rows_accepted: 0,
            rows_rejected: 0,
            missing: OPTIONAL_FIELDS.iter().map(|&f| (f, 0)).collect(),
            min_start_time: None,
            max_start_time: None,
        }
    }

    fn note_accepted(&mut self, r: &AccidentRecord) {
        self.rows_accepted += 1;
        let mut miss = |field: &'static str, absent: bool| {
            if absent {
                *self.missing.get_mut(field).expect("tracked field") += 1;
            }
        };
        miss("end_lat", r.end_lat.is_none());
        miss("end_lng", r.end_lng.is_none());
        miss("distance_mi", r.distance_mi.is_none());
        miss("street", r.street.is_none());
        miss("side", r.side.is_none());
        miss("city", r.city.is_none());
        miss("county", r.county.is_none());
        miss("zipcode", r.zipcode.is_none());
        miss("country", r.country.is_none());
        miss("timezone", r.timezone.is_none());
        miss("airport_code", r.airport_code.is_none());
        miss("weather_timestamp", r.weather_timestamp.is_none());
        miss("temperature_f", r.temperature_f.is_none());
        miss("wind_chill_f", r.wind_chill_f.is_none());
        miss("humidity_pct", r.humidity_pct.is_none());
        miss("pressure_in", r.pressure_in.is_none());
        miss("visibility_mi", r.visibility_mi.is_none());
        miss("wind_direction", r.wind_direction.is_none());
        miss("wind_speed_mph", r.wind_speed_mph.is_none());
        miss("weather_condition", r.weather_condition.is_none());
        miss("precipitation_in", r.precipitation_in.is_none());
        miss("sunrise_sunset", r.sunrise_sunset.is_none());
        miss("civil_twilight", r.civil_twilight.is_none());
        miss("nautical_twilight", r.nautical_twilight.is_none());
        miss("astronomical_twilight", r.astronomical_twilight.is_none());
        let t = r.start_time;
        self.min_start_time = Some(self.min_start_time.map_or(t, |m| m.min(t)));
        self.max_start_time = Some(self.max_start_time.map_or(t, |m| m.max(t)));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "rows_read: {}", self.rows_read);
        let _ = writeln!(out, "rows_accepted: {}", self.rows_accepted);
        let _ = writeln!(out, "rows_rejected: {}", self.rows_rejected);
        let fmt = |t: &Option<NaiveDateTime>| {
            t.as_ref().map(fmt_time).unwrap_or_else(|| "-".to_string())
        };
        let _ = writeln!(out, "start_time_min: {}", fmt(&self.min_start_time));
        let _ = writeln!(out, "start_time_max: {}", fmt(&self.max_start_time));
        let _ = writeln!(out, "missing:");
        for (field, n) in &self.missing {
            let _ = writeln!(out, "  {field}: {n}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectedRow {
    /// 1-based data row number (header excluded).
    pub row: u64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub records: Vec<AccidentRecord>,
    pub summary: IngestSummary,
    pub rejected: Vec<RejectedRow>,
}

fn parse_time(s: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S%.f")
        .ok()
        .and_then(|t| t.with_nanosecond(0))
}

/// Validates one canonical-order row (all 47 values present, possibly
/// empty). Returns the record iff there are zero violations; each
/// violation names the field and the broken rule.
pub fn validate_record(fields: &[String]) -> Result<AccidentRecord, Vec<String>> {
    assert_eq!(fields.len(), COLUMNS.len(), "caller supplies all 47 columns");
    let mut violations: Vec<String> = Vec::new();

    let get = |name: &str| -> &str {
        let i = COLUMNS.iter().position(|&c| c == name).expect("known column");
        fields[i].as_str()
    };

    let id = get("ID").to_string();
    if id.is_empty() {
        violations.push("id missing".to_string());
    }

    let severity = match get("Severity") {
        "" => {
            violations.push("severity missing".to_string());
            0
        }
        s => match s.parse::<i64>() {
            Ok(v @ 1..=4) => v as u8,
            Ok(_) => {
                violations.push("severity out of range {1..4}".to_string());
                0
            }
            Err(_) => {
                violations.push("severity not an integer".to_string());
                0
            }
        },
    };

    let mut req_time = |name: &'static str, raw: &str| -> NaiveDateTime {
        let zero = NaiveDateTime::default();
        if raw.is_empty() {
            violations.push(format!("{name} missing"));
            zero
        } else {
            parse_time(raw).unwrap_or_else(|| {
                violations.push(format!("{name} not a timestamp"));
                zero
            })
        }
    };
    let start_time = req_time("start_time", get("Start_Time"));
    let end_time = req_time("end_time", get("End_Time"));
    if violations.is_empty() && start_time > end_time {
        violations.push("start_time > end_time".to_string());
    }

    let mut req_f64 = |name: &'static str, raw: &str| -> f64 {
        if raw.is_empty() {
            violations.push(format!("{name} missing"));
            0.0
        } else {
            raw.parse::<f64>().unwrap_or_else(|_| {
                violations.push(format!("{name} not a number"));
                0.0
            })
        }
    };
    let start_lat = req_f64("start_lat", get("Start_Lat"));
    let start_lng = req_f64("start_lng", get("Start_Lng"));
    if !(-90.0..=90.0).contains(&start_lat) {
        violations.push("start_lat out of range [-90,90]".to_string());
    }
    if !(-180.0..=180.0).contains(&start_lng) {
        violations.push("start_lng out of range [-180,180]".to_string());
    }

    fn opt_f64(violations: &mut Vec<String>, name: &'static str, raw: &str) -> Option<f64> {
        if raw.is_empty() {
            None
        } else {
            match raw.parse::<f64>() {
                Ok(v) => Some(v),
                Err(_) => {
                    violations.push(format!("{name} not a number"));
                    None
                }
            }
        }
    }
    let end_lat = opt_f64(&mut violations, "end_lat", get("End_Lat"));
    let end_lng = opt_f64(&mut violations, "end_lng", get("End_Lng"));
    if let Some(v) = end_lat {
        if !(-90.0..=90.0).contains(&v) {
            violations.push("end_lat out of range [-90,90]".to_string());
        }
    }
    if let Some(v) = end_lng {
        if !(-180.0..=180.0).contains(&v) {
            violations.push("end_lng out of range [-180,180]".to_string());
        }
    }
    let distance_mi = opt_f64(&mut violations, "distance_mi", get("Distance(mi)"));
    if let Some(v) = distance_mi {
        if v < 0.0 {
            violations.push("distance_mi < 0".to_string());
        }
    }

    let temperature_f = opt_f64(&mut violations, "temperature_f", get("Temperature(F)"));
    let wind_chill_f = opt_f64(&mut violations, "wind_chill_f", get("Wind_Chill(F)"));
    let humidity_pct = opt_f64(&mut violations, "humidity_pct", get("Humidity(%)"));
    if let Some(v) = humidity_pct {
        if v > 100.0 {
            violations.push("humidity_pct > 100".to_string());
        } else if v < 0.0 {
            violations.push("humidity_pct < 0".to_string());
        }
    }
    let pressure_in = opt_f64(&mut violations, "pressure_in", get("Pressure(in)"));
    let visibility_mi = opt_f64(&mut violations, "visibility_mi", get("Visibility(mi)"));
    let wind_speed_mph = opt_f64(&mut violations, "wind_speed_mph", get("Wind_Speed(mph)"));
    let precipitation_in = opt_f64(&mut violations, "precipitation_in", get("Precipitation(in)"));

    let state = get("State").to_string();
    if state.is_empty() {
        violations.push("state missing".to_string());
    } else if state.len() != 2 || !state.bytes().all(|b| b.is_ascii_alphabetic()) {
        violations.push("state not a 2-letter code".to_string());
    }

    let opt_str = |raw: &str| -> Option<String> {
        if raw.is_empty() { None } else { Some(raw.to_string()) }
    };

    let weather_timestamp = match get("Weather_Timestamp") {
        "" => None,
        raw => match parse_time(raw) {
            Some(t) => Some(t),
            None => {
                violations.push("weather_timestamp not a timestamp".to_string());
                None
            }
        },
    };

    let mut boolean = |name: &'static str, raw: &str| -> bool {
        if raw.eq_ignore_ascii_case("true") {
            true
        } else if raw.eq_ignore_ascii_case("false") {
            false
        } else {
            violations.push(format!("{name} not a boolean"));
            false
        }
    };
    let amenity = boolean("amenity", get("Amenity"));
    let bump = boolean("bump", get("Bump"));
    let crossing = boolean("crossing", get("Crossing"));
    let give_way = boolean("give_way", get("Give_Way"));
    let junction = boolean("junction", get("Junction"));
    let no_exit = boolean("no_exit", get("No_Exit"));
    let railway = boolean("railway", get("Railway"));
    let roundabout = boolean("roundabout", get("Roundabout"));
    let station = boolean("station", get("Station"));
    let stop = boolean("stop", get("Stop"));
    let traffic_calming = boolean("traffic_calming", get("Traffic_Calming"));
    let traffic_signal = boolean("traffic_signal", get("Traffic_Signal"));
    let turning_loop = boolean("turning_loop", get("Turning_Loop"));

    let mut day_night = |name: &'static str, raw: &str| -> Option<DayNight> {
        if raw.is_empty() {
            None
        } else {
            match DayNight::parse(raw) {
                Some(v) => Some(v),
                None => {
                    violations.push(format!("{name} not Day/Night"));
                    None
                }
            }
        }
    };
    let sunrise_sunset = day_night("sunrise_sunset", get("Sunrise_Sunset"));
    let civil_twilight = day_night("civil_twilight", get("Civil_Twilight"));
    let nautical_twilight = day_night("nautical_twilight", get("Nautical_Twilight"));
    let astronomical_twilight = day_night("astronomical_twilight", get("Astronomical_Twilight"));

    if !violations.is_empty() {
        return Err(violations);
    }
    Ok(AccidentRecord {
        id,
        severity,
        start_time,
        end_time,
        start_lat,
        start_lng,
        end_lat,
        end_lng,
        distance_mi,
        street: opt_str(get("Street")),
        side: opt_str(get("Side")),
        city: opt_str(get("City")),
        county: opt_str(get("County")),
        state,
        zipcode: opt_str(get("Zipcode")),
        country: opt_str(get("Country")),
        timezone: opt_str(get("Timezone")),
        airport_code: opt_str(get("Airport_Code")),
        weather_timestamp,
        temperature_f,
        wind_chill_f,
        humidity_pct,
        pressure_in,
        visibility_mi,
        wind_direction: opt_str(get("Wind_Direction")),
        wind_speed_mph,
        weather_condition: opt_str(get("Weather_Condition")),
        precipitation_in,
        amenity,
        bump,
        crossing,
        give_way,
        junction,
        no_exit,
        railway,
        roundabout,
        station,
        stop,
        traffic_calming,
        traffic_signal,
        turning_loop,
        sunrise_sunset,
        civil_twilight,
        nautical_twilight,
        astronomical_twilight,
    })
}

/// Maps the file's header onto canonical column positions. The header must
/// carry exactly the 47 known names, any order.
fn header_permutation(header: &csv::StringRecord) -> Result<Vec<usize>, AppError> {
    for name in header.iter() {
        if !COLUMNS.contains(&name) {
            return Err(AppError::Schema(format!("unexpected column \"{name}\"")));
        }
    }
    let mut perm = Vec::with_capacity(COLUMNS.len());
    for want in COLUMNS {
        match header.iter().position(|h| h == want) {
            Some(i) => perm.push(i),
            None => return Err(AppError::Schema(format!("missing column \"{want}\""))),
        }
    }
    Ok(perm)
}

pub fn parse_snapshot(path: &Path, mode: ParseMode) -> Result<Ingested, AppError> {
    let file = std::fs::File::open(path).map_err(|e| AppError::io(path, e))?;
    parse_reader(file, mode).map_err(|e| match e {
        // attach the path to reader-level errors
        AppError::Io { path: p, source } if p.as_os_str().is_empty() => AppError::io(path, source),
        other => other,
    })
}

pub fn parse_reader<R: Read>(reader: R, mode: ParseMode) -> Result<Ingested, AppError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| from_csv(Path::new(""), e))?
        .clone();
    let perm = header_permutation(&header)?;

    let mut out = Ingested { records: Vec::new(), summary: IngestSummary::new(), rejected: Vec::new() };
    let mut row_no: u64 = 0;
    for result in rdr.records() {
        row_no += 1;
        out.summary.rows_read += 1;
        let raw = match result {
            Ok(r) => r,
            Err(e) => {
                if e.is_io_error() {
                    return Err(from_csv(Path::new(""), e));
                }
                let reason = format!("malformed row: {e}");
                match mode {
                    ParseMode::Strict => {
                        return Err(AppError::Validation(format!("row {row_no}: {reason}")))
                    }
                    ParseMode::Lenient => {
                        out.summary.rows_rejected += 1;
                        out.rejected.push(RejectedRow { row: row_no, reason });
                        continue;
                    }
                }
            }
        };
        let fields: Vec<String> = perm.iter().map(|&i| raw[i].to_string()).collect();
        match validate_record(&fields) {
            Ok(rec) => {
                out.summary.note_accepted(&rec);
                out.records.push(rec);
            }
            Err(violations) => match mode {
                ParseMode::Strict => {
                    return Err(AppError::Validation(format!("row {row_no}: {}", violations[0])))
                }
                ParseMode::Lenient => {
                    out.summary.rows_rejected += 1;
                    out.rejected.push(RejectedRow { row: row_no, reason: violations.join("; ") });
                }
            },
        }
    }
    Ok(out)
}

/// Writes records back out in canonical column order.
pub fn write_snapshot(path: &Path, records: &[AccidentRecord]) -> Result<(), AppError> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| from_csv(path, e))?;
    wtr.write_record(COLUMNS).map_err(|e| from_csv(path, e))?;
    for r in records {
        wtr.write_record(r.to_row()).map_err(|e| from_csv(path, e))?;
    }
    wtr.flush().map_err(|e| AppError::io(path, e))?;
    Ok(())
}
