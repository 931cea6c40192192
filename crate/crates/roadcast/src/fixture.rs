//! Deterministic synthetic snapshot standing in for the real (external)
//! accident download. Accident intensity per (city, day) mixes linear
//! effects (weekday, season, city base rate) with interactions a linear
//! model cannot express: rain raises weekday risk only, and extreme heat
//! adds a threshold kick. Weather written into the rows is the same signal
//! the dataset pipeline later aggregates, so models can recover it.

use chrono::{Datelike, NaiveDate};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use roadcast_core::rng::stream_rng;

use crate::ingest::{AccidentRecord, DayNight};

pub const FIXTURE_ROWS: usize = 5000;
pub const FIXTURE_SEED: u64 = 42;
const FIXTURE_YEAR: i32 = 2022;
const DAYS: usize = 365;

/// rng stream ids; keep them far apart so adding streams never collides
const STREAM_ASSIGN: u64 = 0;
const STREAM_WEATHER: u64 = 1_000;
const STREAM_RECORDS: u64 = 1_000_000;

struct City {
    state: &'static str,
    city: &'static str,
    lat: f64,
    lng: f64,
    timezone: &'static str,
    zipcode: &'static str,
    county: &'static str,
    airport: &'static str,
    /// Relative accident intensity.
    base: f64,
    /// Tourist cities trade the commuter weekday profile for a weekend one.
    tourist: bool,
    /// Mean annual temperature and seasonal swing, Fahrenheit.
    temp_base: f64,
    temp_amp: f64,
    rain_p_winter: f64,
    rain_p_summer: f64,
    streets: [&'static str; 3],
}

const CITIES: [City; 8] = [
    City { state: "CA", city: "Los Angeles", lat: 34.05, lng: -118.24, timezone: "US/Pacific", zipcode: "90001", county: "Los Angeles", airport: "KLAX", base: 3.0, tourist: false, temp_base: 65.0, temp_amp: 12.0, rain_p_winter: 0.18, rain_p_summer: 0.04, streets: ["I-405 N", "I-10 E", "US-101 S"] },
    City { state: "CA", city: "San Diego", lat: 32.72, lng: -117.16, timezone: "US/Pacific", zipcode: "92101", county: "San Diego", airport: "KSAN", base: 2.0, tourist: false, temp_base: 64.0, temp_amp: 9.0, rain_p_winter: 0.15, rain_p_summer: 0.03, streets: ["I-5 N", "I-8 E", "CA-163 S"] },
    City { state: "FL", city: "Miami", lat: 25.76, lng: -80.19, timezone: "US/Eastern", zipcode: "33101", county: "Miami-Dade", airport: "KMIA", base: 2.4, tourist: true, temp_base: 78.0, temp_amp: 8.0, rain_p_winter: 0.2, rain_p_summer: 0.45, streets: ["I-95 N", "US-1 S", "FL-836 W"] },
    City { state: "FL", city: "Orlando", lat: 28.54, lng: -81.38, timezone: "US/Eastern", zipcode: "32801", county: "Orange", airport: "KMCO", base: 1.8, tourist: true, temp_base: 74.0, temp_amp: 11.0, rain_p_winter: 0.18, rain_p_summer: 0.42, streets: ["I-4 E", "FL-408 W", "US-17 N"] },
    City { state: "TX", city: "Houston", lat: 29.76, lng: -95.37, timezone: "US/Central", zipcode: "77001", county: "Harris", airport: "KIAH", base: 1.45, tourist: false, temp_base: 72.0, temp_amp: 17.0, rain_p_winter: 0.15, rain_p_summer: 0.1, streets: ["I-45 S", "I-610 E", "US-59 N"] },
    City { state: "TX", city: "Dallas", lat: 32.78, lng: -96.8, timezone: "US/Central", zipcode: "75201", county: "Dallas", airport: "KDFW", base: 1.25, tourist: false, temp_base: 70.0, temp_amp: 20.0, rain_p_winter: 0.14, rain_p_summer: 0.1, streets: ["I-35E N", "I-30 W", "US-75 N"] },
    City { state: "NY", city: "New York", lat: 40.71, lng: -74.01, timezone: "US/Eastern", zipcode: "10001", county: "New York", airport: "KJFK", base: 2.4, tourist: false, temp_base: 56.0, temp_amp: 21.0, rain_p_winter: 0.3, rain_p_summer: 0.3, streets: ["I-95 S", "FDR Dr N", "I-278 E"] },
    City { state: "WA", city: "Seattle", lat: 47.61, lng: -122.33, timezone: "US/Pacific", zipcode: "98101", county: "King", airport: "KSEA", base: 1.2, tourist: false, temp_base: 53.0, temp_amp: 13.0, rain_p_winter: 0.5, rain_p_summer: 0.18, streets: ["I-5 N", "I-90 E", "WA-99 S"] },
];

/// Monday..Sunday intensity multipliers. Commuter cities peak hard on
/// Friday and die off at the weekend; tourist cities run the opposite
/// way, peaking Saturday. The opposed profiles cancel in any additive
/// weekday effect, so only interactions recover them.
const COMMUTER_DOW: [f64; 7] = [1.0, 1.05, 1.1, 1.15, 1.5, 0.4, 0.35];
const TOURIST_DOW: [f64; 7] = [0.6, 0.6, 0.65, 0.7, 0.9, 1.5, 1.2];

fn seasonal_factor(month: u32) -> f64 {
    match month {
        12 | 1 | 2 => 1.25,
        3 | 11 => 1.1,
        4 | 10 => 1.0,
        5 | 9 => 0.9,
        _ => 0.8,
    }
}

fn gauss(r: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = r.random_range(1e-12..1.0);
    let u2: f64 = r.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos()
}

#[derive(Debug, Clone)]
struct DayWeather {
    temperature_f: f64,
    rain: bool,
    precipitation_in: f64,
    condition: &'static str,
    humidity_pct: f64,
    pressure_in: f64,
    visibility_mi: f64,
    wind_speed_mph: f64,
}

fn day_weather(city: &City, date: NaiveDate, r: &mut ChaCha8Rng) -> DayWeather {
    // temperature peaks in mid-July (day 196)
    let doy = date.ordinal() as f64;
    let season = (core::f64::consts::TAU * (doy - 196.0) / 365.0).cos();
    let temperature_f = city.temp_base + city.temp_amp * season + 4.0 * gauss(r);

    let summer = (5..=9).contains(&date.month());
    let rain_p = if summer { city.rain_p_summer } else { city.rain_p_winter };
    let rain = r.random_bool(rain_p);

    let humidity_pct = if rain { r.random_range(75.0..100.0) } else { r.random_range(30.0..80.0) };
    let fog = !rain && humidity_pct > 77.0 && temperature_f < 60.0;
    let precipitation_in = if rain { r.random_range(0.01..0.5) } else { 0.0 };
    let condition = if rain {
        if temperature_f < 32.0 {
            "Snow"
        } else if precipitation_in < 0.1 {
            "Light Rain"
        } else if precipitation_in < 0.3 {
            "Rain"
        } else {
            "Heavy Rain"
        }
    } else if fog {
        "Fog"
    } else if r.random_bool(0.6) {
        "Clear"
    } else if r.random_bool(0.5) {
        "Cloudy"
    } else {
        "Partly Cloudy"
    };
    let visibility_mi = if rain {
        r.random_range(2.0..8.0)
    } else if fog {
        r.random_range(0.5..3.0)
    } else {
        10.0
    };
    DayWeather {
        temperature_f,
        rain,
        precipitation_in,
        condition,
        humidity_pct,
        pressure_in: 29.9 + 0.15 * gauss(r),
        visibility_mi,
        wind_speed_mph: (5.0 + 4.0 * gauss(r)).abs(),
    }
}

/// Accident intensity for one city-day given its weather. The rain effect
/// only applies on weekdays and the heat effect is a hard threshold; both
/// are interactions a linear model in the engineered features cannot fit.
fn intensity(city: &City, date: NaiveDate, w: &DayWeather) -> f64 {
    let dow = date.weekday().num_days_from_monday() as usize;
    let profile = if city.tourist { TOURIST_DOW } else { COMMUTER_DOW };
    let mut lambda = city.base * profile[dow] * seasonal_factor(date.month());
    // rain triples commuter weekday risk; tourist traffic shrugs it off
    if w.rain && dow < 5 && !city.tourist {
        lambda *= 3.0;
    }
    if w.temperature_f > 95.0 {
        lambda *= 2.0;
    }
    lambda
}

/// Hour-of-day weights: evening rush peaks at 17, a smaller morning rush
/// at 8.
fn hour_weights() -> [f64; 24] {
    let mut w = [0.0; 24];
    for (h, x) in w.iter_mut().enumerate() {
        let h = h as f64;
        *x = 1.0
            + 2.6 * (-(h - 17.0) * (h - 17.0) / 3.0).exp()
            + 1.2 * (-(h - 8.0) * (h - 8.0) / 3.0).exp();
    }
    w
}

fn pick_cumulative(cum: &[f64], u: f64) -> usize {
    match cum.binary_search_by(|x| x.total_cmp(&u)) {
        Ok(i) => i + 1,
        Err(i) => i,
    }
    .min(cum.len() - 1)
}

fn day_night(hour: u32, day_from: u32, day_to: u32) -> DayNight {
    if (day_from..day_to).contains(&hour) { DayNight::Day } else { DayNight::Night }
}

fn build_record(
    city: &City,
    date: NaiveDate,
    w: &DayWeather,
    hour_cum: &[f64],
    r: &mut ChaCha8Rng,
) -> AccidentRecord {
    let hour = pick_cumulative(hour_cum, r.random_range(0.0..*hour_cum.last().unwrap())) as u32;
    let start_time = date
        .and_hms_opt(hour, r.random_range(0..60) as u32, r.random_range(0..60) as u32)
        .expect("valid clock time");
    let end_time = start_time + chrono::Duration::minutes(r.random_range(20..150));

    let severity = {
        let u: f64 = r.random_range(0.0..1.0);
        if u < 0.10 {
            1
        } else if u < 0.70 {
            2
        } else if u < 0.95 {
            3
        } else {
            4
        }
    };
    let start_lat = city.lat + r.random_range(-0.05..0.05);
    let start_lng = city.lng + r.random_range(-0.05..0.05);
    let has_end = r.random_bool(0.4);

    let temperature_f = (!r.random_bool(0.01)).then_some(w.temperature_f);
    let wind = w.wind_speed_mph;
    let wind_chill_f = (w.temperature_f < 50.0 && wind > 3.0).then(|| w.temperature_f - 0.7 * wind);
    let precipitation_in = if w.rain {
        Some(w.precipitation_in)
    } else {
        // dry days log an explicit zero more often than a gap
        r.random_bool(0.7).then_some(0.0)
    };
    let wind_direction = if wind < 1.0 {
        "Calm"
    } else {
        ["N", "NE", "E", "SE", "S", "SW", "W", "NW"][r.random_range(0..8)]
    };

    AccidentRecord {
        id: String::new(),
        severity,
        start_time,
        end_time,
        start_lat,
        start_lng,
        end_lat: has_end.then(|| start_lat + r.random_range(-0.02..0.02)),
        end_lng: has_end.then(|| start_lng + r.random_range(-0.02..0.02)),
        distance_mi: Some((0.4 + 0.8 * gauss(r)).abs()),
        street: Some(city.streets[r.random_range(0..3)].to_string()),
        side: Some(if r.random_bool(0.5) { "R" } else { "L" }.to_string()),
        city: Some(city.city.to_string()),
        county: Some(city.county.to_string()),
        state: city.state.to_string(),
        zipcode: Some(city.zipcode.to_string()),
        country: Some("US".to_string()),
        timezone: Some(city.timezone.to_string()),
        airport_code: Some(city.airport.to_string()),
        weather_timestamp: Some(start_time - chrono::Duration::minutes(r.random_range(0..50))),
        temperature_f,
        wind_chill_f,
        humidity_pct: (!r.random_bool(0.02)).then_some(w.humidity_pct),
        pressure_in: (!r.random_bool(0.02)).then_some(w.pressure_in),
        visibility_mi: (!r.random_bool(0.03)).then_some(w.visibility_mi),
        wind_direction: Some(wind_direction.to_string()),
        wind_speed_mph: (!r.random_bool(0.08)).then_some(wind),
        weather_condition: (!r.random_bool(0.02)).then_some(w.condition.to_string()),
        precipitation_in,
        amenity: r.random_bool(0.02),
        bump: r.random_bool(0.003),
        crossing: r.random_bool(0.10),
        give_way: r.random_bool(0.01),
        junction: r.random_bool(0.12),
        no_exit: r.random_bool(0.005),
        railway: r.random_bool(0.015),
        roundabout: r.random_bool(0.002),
        station: r.random_bool(0.03),
        stop: r.random_bool(0.04),
        traffic_calming: r.random_bool(0.004),
        traffic_signal: r.random_bool(0.15),
        turning_loop: false,
        sunrise_sunset: Some(day_night(hour, 6, 18)),
        civil_twilight: Some(day_night(hour, 5, 19)),
        nautical_twilight: Some(day_night(hour, 5, 20)),
        astronomical_twilight: Some(day_night(hour, 4, 21)),
    }
}

/// Generates the full fixture: exactly [`FIXTURE_ROWS`] valid records over
/// 2022, chronologically ordered, ids assigned after sorting.
pub fn generate_fixture(seed: u64) -> Vec<AccidentRecord> {
    let first = NaiveDate::from_ymd_opt(FIXTURE_YEAR, 1, 1).expect("fixed year");
    let dates: Vec<NaiveDate> = (0..DAYS as u64)
        .map(|d| first + chrono::Duration::days(d as i64))
        .collect();

    // weather first: intensities depend on it
    let mut weather: Vec<DayWeather> = Vec::with_capacity(CITIES.len() * DAYS);
    let mut lambdas: Vec<f64> = Vec::with_capacity(CITIES.len() * DAYS);
    for (c, city) in CITIES.iter().enumerate() {
        for (d, &date) in dates.iter().enumerate() {
            let pair = (c * DAYS + d) as u64;
            let w = day_weather(city, date, &mut stream_rng(seed, STREAM_WEATHER + pair));
            lambdas.push(intensity(city, date, &w));
            weather.push(w);
        }
    }
    let cum: Vec<f64> = lambdas
        .iter()
        .scan(0.0, |acc, &l| {
            *acc += l;
            Some(*acc)
        })
        .collect();
    let total = *cum.last().expect("non-empty grid");

    let mut counts = vec![0u32; lambdas.len()];
    let mut assign = stream_rng(seed, STREAM_ASSIGN);
    for _ in 0..FIXTURE_ROWS {
        let u = assign.random_range(0.0..total);
        counts[pick_cumulative(&cum, u)] += 1;
    }

    let hour_w = hour_weights();
    let hour_cum: Vec<f64> = hour_w
        .iter()
        .scan(0.0, |acc, &w| {
            *acc += w;
            Some(*acc)
        })
        .collect();

    let mut records = Vec::with_capacity(FIXTURE_ROWS);
    for (c, city) in CITIES.iter().enumerate() {
        for (d, &date) in dates.iter().enumerate() {
            let pair = c * DAYS + d;
            if counts[pair] == 0 {
                continue;
            }
            let mut r = stream_rng(seed, STREAM_RECORDS + pair as u64);
            for _ in 0..counts[pair] {
                records.push(build_record(city, date, &weather[pair], &hour_cum, &mut r));
            }
        }
    }
    records.sort_by(|a, b| {
        (a.start_time, &a.state, &a.city).cmp(&(b.start_time, &b.state, &b.city))
    });
    for (i, rec) in records.iter_mut().enumerate() {
        rec.id = format!("A-{:07}", i + 1);
    }
    records
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::validate_record;
    use chrono::Timelike;
    use std::collections::BTreeMap;

    fn state_totals(records: &[AccidentRecord]) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for r in records {
            *m.entry(r.state.clone()).or_insert(0) += 1;
        }
        m
    }

    #[test]
    fn exactly_5000_deterministic_rows() {
        let a = generate_fixture(FIXTURE_SEED);
        let b = generate_fixture(FIXTURE_SEED);
        assert_eq!(a.len(), FIXTURE_ROWS);
        assert_eq!(a, b);
        assert_eq!(a[0].id, "A-0000001");
        assert!(a.windows(2).all(|w| w[0].start_time <= w[1].start_time));
    }

    #[test]
    fn every_row_validates() {
        for rec in generate_fixture(FIXTURE_SEED) {
            let row = rec.to_row();
            let back = validate_record(&row).expect("fixture rows must be valid");
            assert_eq!(back, rec);
        }
    }

    #[test]
    fn state_ranking_is_ca_fl_tx() {
        let totals = state_totals(&generate_fixture(FIXTURE_SEED));
        assert!(totals["CA"] > totals["FL"], "{totals:?}");
        assert!(totals["FL"] > totals["TX"], "{totals:?}");
    }

    #[test]
    fn friday_dominates_and_evening_peaks() {
        let recs = generate_fixture(FIXTURE_SEED);
        let mut dow = [0usize; 7];
        let mut hours = [0usize; 24];
        for r in &recs {
            dow[r.start_time.weekday().num_days_from_monday() as usize] += 1;
            hours[r.start_time.hour() as usize] += 1;
        }
        let friday = dow[4];
        assert!(dow.iter().enumerate().all(|(i, &n)| i == 4 || n < friday), "{dow:?}");
        let argmax = hours.iter().enumerate().max_by_key(|(_, &n)| n).unwrap().0;
        assert_eq!(argmax, 17, "{hours:?}");
    }

    #[test]
    fn rain_days_have_rainy_conditions_and_precipitation() {
        let recs = generate_fixture(FIXTURE_SEED);
        for r in recs.iter().take(500) {
            if let (Some(cond), Some(p)) = (&r.weather_condition, r.precipitation_in) {
                if cond.contains("Rain") {
                    assert!(p > 0.0);
                }
                if cond == "Clear" {
                    assert_eq!(p, 0.0);
                }
            }
        }
    }
}
