//! Versioned binary cache of validated records so downstream commands can
//! skip CSV re-parsing. Layout: magic, row count, then one section per
//! field in struct order (columnar); integers little-endian, timestamps as
//! unix seconds, optional values flag-prefixed.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};

use crate::error::AppError;
use crate::ingest::{AccidentRecord, DayNight};

pub const MAGIC: &[u8; 8] = b"RCACHE01";

struct Enc<W: Write>(W);

impl<W: Write> Enc<W> {
    fn u64(&mut self, v: u64) -> std::io::Result<()> {
        self.0.write_all(&v.to_le_bytes())
    }
    fn u8(&mut self, v: u8) -> std::io::Result<()> {
        self.0.write_all(&[v])
    }
    fn f64(&mut self, v: f64) -> std::io::Result<()> {
        self.0.write_all(&v.to_le_bytes())
    }
    fn opt_f64(&mut self, v: Option<f64>) -> std::io::Result<()> {
        match v {
            Some(x) => {
                self.u8(1)?;
                self.f64(x)
            }
            None => self.u8(0),
        }
    }
    fn str(&mut self, s: &str) -> std::io::Result<()> {
        self.0.write_all(&(s.len() as u32).to_le_bytes())?;
        self.0.write_all(s.as_bytes())
    }
    fn opt_str(&mut self, s: &Option<String>) -> std::io::Result<()> {
        match s {
            Some(x) => {
                self.u8(1)?;
                self.str(x)
            }
            None => self.u8(0),
        }
    }
    fn time(&mut self, t: &NaiveDateTime) -> std::io::Result<()> {
        self.0.write_all(&t.and_utc().timestamp().to_le_bytes())
    }
    fn opt_time(&mut self, t: &Option<NaiveDateTime>) -> std::io::Result<()> {
        match t {
            Some(x) => {
                self.u8(1)?;
                self.time(x)
            }
            None => self.u8(0),
        }
    }
    fn boolean(&mut self, b: bool) -> std::io::Result<()> {
        self.u8(b as u8)
    }
    fn day_night(&mut self, d: &Option<DayNight>) -> std::io::Result<()> {
        self.u8(match d {
            None => 0,
            Some(DayNight::Day) => 1,
            Some(DayNight::Night) => 2,
        })
    }
}

struct Dec<R: Read>(R);

impl<R: Read> Dec<R> {
    fn u64(&mut self) -> Result<u64, AppError> {
        let mut b = [0u8; 8];
        self.read(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }
    fn u8(&mut self) -> Result<u8, AppError> {
        let mut b = [0u8; 1];
        self.read(&mut b)?;
        Ok(b[0])
    }
    fn f64(&mut self) -> Result<f64, AppError> {
        let mut b = [0u8; 8];
        self.read(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }
    fn opt_f64(&mut self) -> Result<Option<f64>, AppError> {
        match self.flag()? {
            true => Ok(Some(self.f64()?)),
            false => Ok(None),
        }
    }
    fn str(&mut self) -> Result<String, AppError> {
        let mut b = [0u8; 4];
        self.read(&mut b)?;
        let mut buf = vec![0u8; u32::from_le_bytes(b) as usize];
        self.read(&mut buf)?;
        String::from_utf8(buf).map_err(|_| AppError::Validation("cache corrupt: non-utf8 string".into()))
    }
    fn opt_str(&mut self) -> Result<Option<String>, AppError> {
        match self.flag()? {
            true => Ok(Some(self.str()?)),
            false => Ok(None),
        }
    }
    fn time(&mut self) -> Result<NaiveDateTime, AppError> {
        let mut b = [0u8; 8];
        self.read(&mut b)?;
        DateTime::from_timestamp(i64::from_le_bytes(b), 0)
            .map(|t| t.naive_utc())
            .ok_or_else(|| AppError::Validation("cache corrupt: timestamp out of range".into()))
    }
    fn opt_time(&mut self) -> Result<Option<NaiveDateTime>, AppError> {
        match self.flag()? {
            true => Ok(Some(self.time()?)),
            false => Ok(None),
        }
    }
    fn flag(&mut self) -> Result<bool, AppError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(AppError::Validation(format!("cache corrupt: flag byte {v}"))),
        }
    }
    fn boolean(&mut self) -> Result<bool, AppError> {
        self.flag()
    }
    fn day_night(&mut self) -> Result<Option<DayNight>, AppError> {
        match self.u8()? {
            0 => Ok(None),
            1 => Ok(Some(DayNight::Day)),
            2 => Ok(Some(DayNight::Night)),
            v => Err(AppError::Validation(format!("cache corrupt: day/night byte {v}"))),
        }
    }
    fn read(&mut self, buf: &mut [u8]) -> Result<(), AppError> {
        self.0
            .read_exact(buf)
            .map_err(|e| AppError::io("", e))
    }
}

pub fn write_cache(path: &Path, records: &[AccidentRecord]) -> Result<(), AppError> {
    let file = std::fs::File::create(path).map_err(|e| AppError::io(path, e))?;
    let mut e = Enc(BufWriter::new(file));
    let res: std::io::Result<()> = (|| {
        e.0.write_all(MAGIC)?;
        e.u64(records.len() as u64)?;
        for r in records { e.str(&r.id)?; }
        for r in records { e.u8(r.severity)?; }
        for r in records { e.time(&r.start_time)?; }
        for r in records { e.time(&r.end_time)?; }
        for r in records { e.f64(r.start_lat)?; }
        for r in records { e.f64(r.start_lng)?; }
        for r in records { e.opt_f64(r.end_lat)?; }
        for r in records { e.opt_f64(r.end_lng)?; }
        for r in records { e.opt_f64(r.distance_mi)?; }
        for r in records { e.opt_str(&r.street)?; }
        for r in records { e.opt_str(&r.side)?; }
        for r in records { e.opt_str(&r.city)?; }
        for r in records { e.opt_str(&r.county)?; }
        for r in records { e.str(&r.state)?; }
        for r in records { e.opt_str(&r.zipcode)?; }
        for r in records { e.opt_str(&r.country)?; }
        for r in records { e.opt_str(&r.timezone)?; }
        for r in records { e.opt_str(&r.airport_code)?; }
        for r in records { e.opt_time(&r.weather_timestamp)?; }
        for r in records { e.opt_f64(r.temperature_f)?; }
        for r in records { e.opt_f64(r.wind_chill_f)?; }
        for r in records { e.opt_f64(r.humidity_pct)?; }
        for r in records { e.opt_f64(r.pressure_in)?; }
        for r in records { e.opt_f64(r.visibility_mi)?; }
        for r in records { e.opt_str(&r.wind_direction)?; }
        for r in records { e.opt_f64(r.wind_speed_mph)?; }
        for r in records { e.opt_str(&r.weather_condition)?; }
        for r in records { e.opt_f64(r.precipitation_in)?; }
        for r in records { e.boolean(r.amenity)?; }
        for r in records { e.boolean(r.bump)?; }
        for r in records { e.boolean(r.crossing)?; }
        for r in records { e.boolean(r.give_way)?; }
        for r in records { e.boolean(r.junction)?; }
        for r in records { e.boolean(r.no_exit)?; }
        for r in records { e.boolean(r.railway)?; }
        for r in records { e.boolean(r.roundabout)?; }
        for r in records { e.boolean(r.station)?; }
        for r in records { e.boolean(r.stop)?; }
        for r in records { e.boolean(r.traffic_calming)?; }
        for r in records { e.boolean(r.traffic_signal)?; }
        for r in records { e.boolean(r.turning_loop)?; }
        for r in records { e.day_night(&r.sunrise_sunset)?; }
        for r in records { e.day_night(&r.civil_twilight)?; }
        for r in records { e.day_night(&r.nautical_twilight)?; }
        for r in records { e.day_night(&r.astronomical_twilight)?; }
        e.0.flush()
    })();
    res.map_err(|err| AppError::io(path, err))
}

pub fn read_cache(path: &Path) -> Result<Vec<AccidentRecord>, AppError> {
    let file = std::fs::File::open(path).map_err(|e| AppError::io(path, e))?;
    let mut d = Dec(BufReader::new(file));
    let mut magic = [0u8; 8];
    d.read(&mut magic).map_err(|e| attach(path, e))?;
    if &magic != MAGIC {
        return Err(AppError::Compat(format!(
            "{}: not a roadcast record cache (bad magic)",
            path.display()
        )));
    }
    let n = d.u64().map_err(|e| attach(path, e))? as usize;
    let mut recs = vec![empty(); n];
    let res: Result<(), AppError> = (|| {
        for r in &mut recs { r.id = d.str()?; }
        for r in &mut recs { r.severity = d.u8()?; }
        for r in &mut recs { r.start_time = d.time()?; }
        for r in &mut recs { r.end_time = d.time()?; }
        for r in &mut recs { r.start_lat = d.f64()?; }
        for r in &mut recs { r.start_lng = d.f64()?; }
        for r in &mut recs { r.end_lat = d.opt_f64()?; }
        for r in &mut recs { r.end_lng = d.opt_f64()?; }
        for r in &mut recs { r.distance_mi = d.opt_f64()?; }
        for r in &mut recs { r.street = d.opt_str()?; }
        for r in &mut recs { r.side = d.opt_str()?; }
        for r in &mut recs { r.city = d.opt_str()?; }
        for r in &mut recs { r.county = d.opt_str()?; }
        for r in &mut recs { r.state = d.str()?; }
        for r in &mut recs { r.zipcode = d.opt_str()?; }
        for r in &mut recs { r.country = d.opt_str()?; }
        for r in &mut recs { r.timezone = d.opt_str()?; }
        for r in &mut recs { r.airport_code = d.opt_str()?; }
        for r in &mut recs { r.weather_timestamp = d.opt_time()?; }
        for r in &mut recs { r.temperature_f = d.opt_f64()?; }
        for r in &mut recs { r.wind_chill_f = d.opt_f64()?; }
        for r in &mut recs { r.humidity_pct = d.opt_f64()?; }
        for r in &mut recs { r.pressure_in = d.opt_f64()?; }
        for r in &mut recs { r.visibility_mi = d.opt_f64()?; }
        for r in &mut recs { r.wind_direction = d.opt_str()?; }
        for r in &mut recs { r.wind_speed_mph = d.opt_f64()?; }
        for r in &mut recs { r.weather_condition = d.opt_str()?; }
        for r in &mut recs { r.precipitation_in = d.opt_f64()?; }
        for r in &mut recs { r.amenity = d.boolean()?; }
        for r in &mut recs { r.bump = d.boolean()?; }
        for r in &mut recs { r.crossing = d.boolean()?; }
        for r in &mut recs { r.give_way = d.boolean()?; }
        for r in &mut recs { r.junction = d.boolean()?; }
        for r in &mut recs { r.no_exit = d.boolean()?; }
        for r in &mut recs { r.railway = d.boolean()?; }
        for r in &mut recs { r.roundabout = d.boolean()?; }
        for r in &mut recs { r.station = d.boolean()?; }
        for r in &mut recs { r.stop = d.boolean()?; }
        for r in &mut recs { r.traffic_calming = d.boolean()?; }
        for r in &mut recs { r.traffic_signal = d.boolean()?; }
        for r in &mut recs { r.turning_loop = d.boolean()?; }
        for r in &mut recs { r.sunrise_sunset = d.day_night()?; }
        for r in &mut recs { r.civil_twilight = d.day_night()?; }
        for r in &mut recs { r.nautical_twilight = d.day_night()?; }
        for r in &mut recs { r.astronomical_twilight = d.day_night()?; }
        Ok(())
    })();
    res.map_err(|e| attach(path, e))?;
    Ok(recs)
}

fn attach(path: &Path, e: AppError) -> AppError {
    match e {
        AppError::Io { path: p, source } if p.as_os_str().is_empty() => AppError::io(path, source),
        other => other,
    }
}

fn empty() -> AccidentRecord {
    AccidentRecord {
        id: String::new(),
        severity: 0,
        start_time: NaiveDateTime::default(),
        end_time: NaiveDateTime::default(),
        start_lat: 0.0,
        start_lng: 0.0,
        end_lat: None,
        end_lng: None,
        distance_mi: None,
        street: None,
        side: None,
        city: None,
        county: None,
        state: String::new(),
        zipcode: None,
        country: None,
        timezone: None,
        airport_code: None,
        weather_timestamp: None,
        temperature_f: None,
        wind_chill_f: None,
        humidity_pct: None,
        pressure_in: None,
        visibility_mi: None,
        wind_direction: None,
        wind_speed_mph: None,
        weather_condition: None,
        precipitation_in: None,
        amenity: false,
        bump: false,
        crossing: false,
        give_way: false,
        junction: false,
        no_exit: false,
        railway: false,
        roundabout: false,
        station: false,
        stop: false,
        traffic_calming: false,
        traffic_signal: false,
        turning_loop: false,
        sunrise_sunset: None,
        civil_twilight: None,
        nautical_twilight: None,
        astronomical_twilight: None,
    }
}
