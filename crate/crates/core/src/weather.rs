//! Hourly weather and horizon-profile ingestion.
//!
//! Timestamps label the end of a one-hour averaging interval. The midpoint of
//! the interval (label minus 30 minutes) is used for solar geometry and to
//! assign a record to its civil day.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, Duration, FixedOffset, NaiveDate};

use crate::error::{Error, Result};
use crate::solar::{solar_position, Site, SolarPosition};

/// Default PAR/GHI ratio used to fill missing PAR.
pub const DEFAULT_PAR_RATIO: f64 = 0.48;

const TIME_FORMAT: &str = "%Y-%m-%dT%H:%M:%S%:z";

/// One year of hourly meteorological records.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherSeries {
    pub site: Site,
    pub times: Vec<DateTime<FixedOffset>>,
    /// Global horizontal irradiance, W/m².
    pub ghi: Vec<f64>,
    /// Diffuse horizontal irradiance, W/m².
    pub dhi: Vec<Option<f64>>,
    /// Horizontal PAR, W/m².
    pub par: Vec<Option<f64>>,
    /// Air temperature, °C.
    pub t_air: Vec<f64>,
    /// Hourly precipitation, mm.
    pub precip: Vec<Option<f64>>,
}

/// Which optional columns contain at least one missing value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MissingColumns {
    pub dhi: bool,
    pub par: bool,
    pub precip: bool,
}

impl WeatherSeries {
    /// Builds a series and checks the record invariants.
    pub fn new(
        site: Site,
        times: Vec<DateTime<FixedOffset>>,
        ghi: Vec<f64>,
        dhi: Vec<Option<f64>>,
        par: Vec<Option<f64>>,
        t_air: Vec<f64>,
        precip: Vec<Option<f64>>,
    ) -> Result<Self> {
        let n = times.len();
        if [ghi.len(), dhi.len(), par.len(), t_air.len(), precip.len()]
            .iter()
            .any(|&len| len != n)
        {
            return Err(Error::Structure("column lengths differ".into()));
        }
        let series = Self {
            site,
            times,
            ghi,
            dhi,
            par,
            t_air,
            precip,
        };
        series.validate()?;
        Ok(series)
    }

    fn validate(&self) -> Result<()> {
        if self.times.is_empty() {
            return Err(Error::Structure("weather series is empty".into()));
        }
        for (i, w) in self.times.windows(2).enumerate() {
            if w[1] - w[0] != Duration::hours(1) {
                return Err(Error::Structure(format!(
                    "non-uniform timestep between {} and {} (record {})",
                    w[0].format(TIME_FORMAT),
                    w[1].format(TIME_FORMAT),
                    i + 2
                )));
            }
        }
        for (i, t) in self.times.iter().enumerate() {
            let ghi = self.ghi[i];
            let bad = !ghi.is_finite()
                || ghi < 0.0
                || !self.t_air[i].is_finite()
                || self.par[i].is_some_and(|p| !p.is_finite() || p < 0.0)
                || self.dhi[i].is_some_and(|d| !d.is_finite() || d < 0.0)
                || self.precip[i].is_some_and(|p| !p.is_finite() || p < 0.0);
            if bad {
                return Err(Error::Validation(format!(
                    "negative or non-finite value at {}",
                    t.format(TIME_FORMAT)
                )));
            }
        }
        let offending: Vec<String> = self
            .times
            .iter()
            .enumerate()
            .filter(|&(i, _)| self.dhi[i].is_some_and(|d| d > self.ghi[i]))
            .map(|(_, t)| t.format(TIME_FORMAT).to_string())
            .collect();
        if !offending.is_empty() {
            return Err(Error::DiffuseExceedsGlobal {
                timestamps: offending,
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn missing_columns(&self) -> MissingColumns {
        MissingColumns {
            dhi: self.dhi.iter().any(Option::is_none),
            par: self.par.iter().any(Option::is_none),
            precip: self.precip.iter().any(Option::is_none),
        }
    }

    /// Midpoint of the averaging interval that ends at record `i`.
    pub fn midpoint(&self, i: usize) -> DateTime<FixedOffset> {
        self.times[i] - Duration::minutes(30)
    }

    /// Civil date the record belongs to.
    pub fn civil_date(&self, i: usize) -> NaiveDate {
        self.midpoint(i).date_naive()
    }

    /// Sun position at the interval midpoint.
    pub fn sun_position(&self, i: usize) -> SolarPosition {
        solar_position(&self.midpoint(i), &self.site)
    }

    /// Replaces missing PAR with `ratio × ghi`.
    pub fn fill_par(&self, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::Config(format!("PAR ratio {ratio} outside (0, 1]")));
        }
        let mut out = self.clone();
        for (p, &g) in out.par.iter_mut().zip(&self.ghi) {
            if p.is_none() {
                *p = Some(ratio * g);
            }
        }
        Ok(out)
    }

    /// Zeroes irradiance and PAR whenever the sun is below the horizon
    /// profile (or the astronomical horizon) at the interval midpoint.
    pub fn mask_horizon(&self, horizon: &HorizonProfile) -> Self {
        let mut out = self.clone();
        for i in 0..self.len() {
            let pos = self.sun_position(i);
            if pos.altitude <= 0.0 || pos.altitude <= horizon.elevation_at(pos.azimuth) {
                out.ghi[i] = 0.0;
                if out.dhi[i].is_some() {
                    out.dhi[i] = Some(0.0);
                }
                if out.par[i].is_some() {
                    out.par[i] = Some(0.0);
                }
            }
        }
        out
    }

    /// One aggregate per civil day, in date order. Missing PAR or
    /// precipitation counts as zero.
    pub fn daily_aggregates(&self) -> Vec<DailyAggregate> {
        let mut days: BTreeMap<NaiveDate, DayAccumulator> = BTreeMap::new();
        for i in 0..self.len() {
            let acc = days.entry(self.civil_date(i)).or_default();
            let t = self.t_air[i];
            acc.t_max = acc.t_max.max(t);
            acc.t_min = acc.t_min.min(t);
            acc.t_sum += t;
            acc.count += 1;
            acc.precip += self.precip[i].unwrap_or(0.0);
            acc.par_joules += self.par[i].unwrap_or(0.0) * 3600.0;
        }
        days.into_iter()
            .map(|(date, acc)| DailyAggregate {
                date,
                t_max: acc.t_max,
                t_min: acc.t_min,
                t_mean: (acc.t_sum / acc.count as f64).clamp(acc.t_min, acc.t_max),
                precipitation: acc.precip,
                par_daily: acc.par_joules / 1e6,
            })
            .collect()
    }

    /// Total PAR energy over the series, MJ/m².
    pub fn total_par(&self) -> f64 {
        self.par.iter().map(|p| p.unwrap_or(0.0) * 3600.0).sum::<f64>() / 1e6
    }
}

struct DayAccumulator {
    t_max: f64,
    t_min: f64,
    t_sum: f64,
    count: usize,
    precip: f64,
    par_joules: f64,
}

impl Default for DayAccumulator {
    fn default() -> Self {
        Self {
            t_max: f64::NEG_INFINITY,
            t_min: f64::INFINITY,
            t_sum: 0.0,
            count: 0,
            precip: 0.0,
            par_joules: 0.0,
        }
    }
}

/// Daily inputs of the crop model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyAggregate {
    pub date: NaiveDate,
    pub t_max: f64,
    pub t_min: f64,
    pub t_mean: f64,
    /// mm/day
    pub precipitation: f64,
    /// MJ/m²/day
    pub par_daily: f64,
}

/// Far-horizon elevation as a function of compass azimuth (0 = North,
/// clockwise).
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonProfile {
    azimuths: Vec<f64>,
    elevations: Vec<f64>,
}

impl HorizonProfile {
    pub fn new(mut samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Structure("horizon profile has no samples".into()));
        }
        for &(az, el) in &samples {
            if !(0.0..360.0).contains(&az) {
                return Err(Error::Validation(format!(
                    "horizon azimuth {az} outside [0, 360)"
                )));
            }
            if !(0.0..90.0).contains(&el) {
                return Err(Error::Validation(format!(
                    "horizon elevation {el} outside [0, 90)"
                )));
            }
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        if samples.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Validation("duplicate horizon azimuth".into()));
        }
        Ok(Self {
            azimuths: samples.iter().map(|s| s.0).collect(),
            elevations: samples.iter().map(|s| s.1).collect(),
        })
    }

    /// Open horizon everywhere.
    pub fn flat() -> Self {
        Self {
            azimuths: vec![0.0],
            elevations: vec![0.0],
        }
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.azimuths.iter().copied().zip(self.elevations.iter().copied())
    }

    /// Elevation at a compass azimuth, interpolated linearly with
    /// wrap-around.
    pub fn elevation_at_compass(&self, compass: f64) -> f64 {
        let n = self.azimuths.len();
        if n == 1 {
            return self.elevations[0];
        }
        let az = compass.rem_euclid(360.0);
        let upper = self.azimuths.partition_point(|&a| a <= az);
        let (lo, hi) = if upper == 0 || upper == n {
            (n - 1, 0)
        } else {
            (upper - 1, upper)
        };
        let a0 = self.azimuths[lo];
        let mut span = self.azimuths[hi] - a0;
        let mut offset = az - a0;
        if span <= 0.0 {
            span += 360.0;
        }
        if offset < 0.0 {
            offset += 360.0;
        }
        let f = offset / span;
        self.elevations[lo] + f * (self.elevations[hi] - self.elevations[lo])
    }

    /// Elevation at a canonical azimuth (0 = South, West positive).
    pub fn elevation_at(&self, azimuth: f64) -> f64 {
        self.elevation_at_compass(azimuth + 180.0)
    }
}

fn sniff_delimiter(path: &Path) -> Result<u8> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        return Ok(if trimmed.contains('\t') { b'\t' } else { b',' });
    }
    Ok(b',')
}

fn reader(path: &Path, has_headers: bool) -> Result<csv::Reader<File>> {
    let delimiter = sniff_delimiter(path)?;
    csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .has_headers(has_headers)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

fn parse_time(s: &str) -> Option<DateTime<FixedOffset>> {
    DateTime::parse_from_rfc3339(s)
        .or_else(|_| DateTime::parse_from_str(s, "%Y-%m-%dT%H:%M%:z"))
        .or_else(|_| DateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S%:z"))
        .or_else(|_| DateTime::parse_from_str(s, "%Y-%m-%d %H:%M%:z"))
        .ok()
}

fn parse_optional(s: &str) -> std::result::Result<Option<f64>, String> {
    if s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan") {
        Ok(None)
    } else {
        s.parse::<f64>()
            .map(Some)
            .map_err(|_| format!("cannot parse number {s:?}"))
    }
}

/// Reads and validates a weather file.
pub fn load_weather(path: impl AsRef<Path>, site: Site) -> Result<WeatherSeries> {
    let path = path.as_ref();
    let mut rdr = reader(path, true)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
    };
    let required = |name: &str| {
        column(name).ok_or_else(|| Error::Structure(format!("missing required column `{name}`")))
    };
    let (c_time, c_ghi, c_t) = (required("time")?, required("ghi")?, required("t_air")?);
    let (c_dhi, c_par, c_precip) = (column("dhi"), column("par"), column("precip"));

    let mut times = Vec::new();
    let mut ghi = Vec::new();
    let mut dhi = Vec::new();
    let mut par = Vec::new();
    let mut t_air = Vec::new();
    let mut precip = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let fail = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        if record.len() != headers.len() {
            return Err(fail(format!(
                "expected {} fields, found {}",
                headers.len(),
                record.len()
            )));
        }
        let cell = |c: usize| record.get(c).unwrap_or("");
        let optional = |c: Option<usize>| match c {
            Some(c) => parse_optional(cell(c)),
            None => Ok(None),
        };
        let required = |c: usize| -> std::result::Result<f64, String> {
            parse_optional(cell(c))?.ok_or_else(|| "missing required value".to_string())
        };
        times.push(
            parse_time(cell(c_time))
                .ok_or_else(|| fail(format!("invalid timestamp {:?}", cell(c_time))))?,
        );
        ghi.push(required(c_ghi).map_err(fail)?);
        t_air.push(required(c_t).map_err(fail)?);
        dhi.push(optional(c_dhi).map_err(fail)?);
        par.push(optional(c_par).map_err(fail)?);
        precip.push(optional(c_precip).map_err(fail)?);
    }
    WeatherSeries::new(site, times, ghi, dhi, par, t_air, precip)
}

fn format_optional(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes a weather file that [`load_weather`] reads back bit-exactly.
pub fn write_weather(path: impl AsRef<Path>, series: &WeatherSeries) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "time,ghi,dhi,par,t_air,precip")?;
        for i in 0..series.len() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                series.times[i].format(TIME_FORMAT),
                series.ghi[i],
                format_optional(series.dhi[i]),
                format_optional(series.par[i]),
                series.t_air[i],
                format_optional(series.precip[i]),
            )?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Reads a two-column `azimuth_deg, elevation_deg` horizon file. A header
/// row is optional.
pub fn load_horizon(path: impl AsRef<Path>) -> Result<HorizonProfile> {
    let path = path.as_ref();
    let mut rdr = reader(path, false)?;
    let mut samples = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let fail = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        if record.len() != 2 {
            return Err(fail(format!("expected 2 fields, found {}", record.len())));
        }
        let az = record[0].parse::<f64>();
        let el = record[1].parse::<f64>();
        match (az, el) {
            (Ok(az), Ok(el)) => samples.push((az, el)),
            _ if k == 0 => continue,
            _ => return Err(fail(format!("cannot parse {:?}", record.as_slice()))),
        }
    }
    HorizonProfile::new(samples)
}

/// Writes a horizon profile in the format read by [`load_horizon`].
pub fn write_horizon(path: impl AsRef<Path>, horizon: &HorizonProfile) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("azimuth_deg,elevation_deg\n");
    for (az, el) in horizon.samples() {
        out.push_str(&format!("{az},{el}\n"));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn site() -> Site {
        Site::new(59.5549, 16.7585, 20.0)
    }

    fn hourly(start: DateTime<FixedOffset>, n: usize) -> Vec<DateTime<FixedOffset>> {
        (0..n).map(|i| start + Duration::hours(i as i64 + 1)).collect()
    }

    fn year_start(year: i32) -> DateTime<FixedOffset> {
        FixedOffset::east_opt(3600)
            .unwrap()
            .with_ymd_and_hms(year, 1, 1, 0, 0, 0)
            .unwrap()
    }

    fn series(n: usize, ghi: f64, par: Option<f64>, t: impl Fn(usize) -> f64) -> WeatherSeries {
        WeatherSeries::new(
            site(),
            hourly(year_start(2019), n),
            vec![ghi; n],
            vec![Some(ghi / 2.0); n],
            vec![par; n],
            (0..n).map(t).collect(),
            vec![None; n],
        )
        .unwrap()
    }

    fn write_file(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        std::fs::write(&path, body).unwrap();
        path
    }

    fn year_file(year: i32) -> String {
        let start = year_start(year);
        let end = FixedOffset::east_opt(3600)
            .unwrap()
            .with_ymd_and_hms(year + 1, 1, 1, 0, 0, 0)
            .unwrap();
        let mut body = String::from("time,ghi,dhi,par,t_air,precip\n");
        let mut t = start + Duration::hours(1);
        while t <= end {
            body.push_str(&format!("{},0,0,,5.0,\n", t.format(TIME_FORMAT)));
            t += Duration::hours(1);
        }
        body
    }

    #[test]
    fn loads_full_year() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "w.csv", &year_file(2019));
        let s = load_weather(&path, site()).unwrap();
        assert_eq!(s.len(), 8760);
        assert!(s.missing_columns().par);
        assert!(!s.missing_columns().dhi);
    }

    #[test]
    fn loads_leap_year() {
        let days = NaiveDate::from_ymd_opt(2021, 1, 1)
            .unwrap()
            .signed_duration_since(NaiveDate::from_ymd_opt(2020, 1, 1).unwrap())
            .num_days() as usize;
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "w.csv", &year_file(2020));
        let s = load_weather(&path, site()).unwrap();
        assert_eq!(s.len(), days * 24);
        assert_eq!(s.len(), 8784);
        assert_eq!(s.daily_aggregates().len(), 366);
    }

    #[test]
    fn diffuse_above_global_names_timestamp() {
        let dir = tempfile::tempdir().unwrap();
        let body = "time,ghi,dhi,t_air\n\
                    2019-06-01T12:00:00+01:00,300,100,15\n\
                    2019-06-01T13:00:00+01:00,400,500,15\n\
                    2019-06-01T14:00:00+01:00,350,100,15\n";
        let path = write_file(&dir, "w.csv", body);
        match load_weather(&path, site()) {
            Err(Error::DiffuseExceedsGlobal { timestamps }) => {
                assert_eq!(timestamps, vec!["2019-06-01T13:00:00+01:00".to_string()]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let body = "# comment\ntime,ghi,t_air\n\
                    2019-06-01T12:00:00+01:00,300,15\n\
                    2019-06-01T13:00:00+01:00,abc,15\n";
        let path = write_file(&dir, "w.csv", body);
        match load_weather(&path, site()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gap_is_structural_error() {
        let dir = tempfile::tempdir().unwrap();
        let body = "time\tghi\tt_air\n\
                    2019-06-01T12:00:00+01:00\t300\t15\n\
                    2019-06-01T14:00:00+01:00\t300\t15\n";
        let path = write_file(&dir, "w.tsv", body);
        assert!(matches!(
            load_weather(&path, site()),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn tab_delimited_without_optional_columns() {
        let dir = tempfile::tempdir().unwrap();
        let body = "time\tghi\tt_air\n\
                    2019-06-01T12:00:00+01:00\t300\t15\n\
                    2019-06-01T13:00:00+01:00\t310\t16\n";
        let path = write_file(&dir, "w.tsv", body);
        let s = load_weather(&path, site()).unwrap();
        assert_eq!(s.ghi, vec![300.0, 310.0]);
        let missing = s.missing_columns();
        assert!(missing.dhi && missing.par && missing.precip);
    }

    #[test]
    fn fill_par_cases() {
        let mut s = series(3, 600.0, None, |_| 10.0);
        s.ghi[1] = 0.0;
        s.dhi[1] = Some(0.0);
        s.par[2] = Some(250.0);
        let filled = s.fill_par(0.48).unwrap();
        assert!((filled.par[0].unwrap() - 288.0).abs() < 1e-12);
        assert_eq!(filled.par[1], Some(0.0));
        assert_eq!(filled.par[2], Some(250.0));
        assert!(s.fill_par(0.0).is_err());
    }

    #[test]
    fn daily_par_constant() {
        let s = series(24, 200.0, Some(100.0), |_| 12.0);
        let days = s.daily_aggregates();
        assert_eq!(days.len(), 1);
        assert!((days[0].par_daily - 8.64).abs() < 1e-12);
    }

    #[test]
    fn daily_zero_day_and_extrema() {
        let s = series(24, 0.0, Some(0.0), |_| 3.5);
        let d = s.daily_aggregates()[0];
        assert_eq!(d.par_daily, 0.0);
        assert_eq!((d.t_max, d.t_min, d.t_mean), (3.5, 3.5, 3.5));

        let s = series(24, 0.0, Some(0.0), |i| -2.0 + (i % 13) as f64);
        let d = s.daily_aggregates()[0];
        assert_eq!((d.t_min, d.t_max), (-2.0, 10.0));
    }

    #[test]
    fn midnight_label_belongs_to_previous_day() {
        let s = series(48, 0.0, Some(0.0), |_| 0.0);
        assert_eq!(s.civil_date(23), NaiveDate::from_ymd_opt(2019, 1, 1).unwrap());
        assert_eq!(s.civil_date(24), NaiveDate::from_ymd_opt(2019, 1, 2).unwrap());
        assert_eq!(s.daily_aggregates().len(), 2);
    }

    #[test]
    fn horizon_interpolation_wraps() {
        let h = HorizonProfile::new(vec![(10.0, 2.0), (350.0, 4.0), (180.0, 6.0)]).unwrap();
        assert!((h.elevation_at_compass(0.0) - 3.0).abs() < 1e-12);
        assert!((h.elevation_at_compass(360.0) - 3.0).abs() < 1e-12);
        assert!((h.elevation_at_compass(95.0) - 4.0).abs() < 1e-12);
        assert!((h.elevation_at(0.0) - 6.0).abs() < 1e-12);
        assert!(HorizonProfile::new(vec![(0.0, 95.0)]).is_err());
        assert!(HorizonProfile::new(vec![(360.0, 1.0)]).is_err());
    }

    #[test]
    fn horizon_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let h = HorizonProfile::new((0..48).map(|k| (k as f64 * 7.5, (k % 5) as f64 * 0.7)).collect())
            .unwrap();
        let path = dir.path().join("h.csv");
        write_horizon(&path, &h).unwrap();
        assert_eq!(load_horizon(&path).unwrap(), h);
    }

    #[test]
    fn masking_zeroes_low_sun() {
        let n = 24 * 3;
        let start = FixedOffset::east_opt(3600)
            .unwrap()
            .with_ymd_and_hms(2019, 6, 20, 0, 0, 0)
            .unwrap();
        let s = WeatherSeries::new(
            site(),
            hourly(start, n),
            vec![100.0; n],
            vec![Some(50.0); n],
            vec![Some(40.0); n],
            vec![15.0; n],
            vec![None; n],
        )
        .unwrap();
        let open = s.mask_horizon(&HorizonProfile::flat());
        let walled = s.mask_horizon(&HorizonProfile::new(vec![(0.0, 30.0)]).unwrap());
        for i in 0..n {
            let alt = s.sun_position(i).altitude;
            assert_eq!(open.ghi[i] == 0.0, alt <= 0.0);
            assert_eq!(walled.ghi[i] == 0.0, alt <= 30.0);
            if walled.ghi[i] == 0.0 {
                assert_eq!((walled.dhi[i], walled.par[i]), (Some(0.0), Some(0.0)));
            }
        }
        assert!(walled.ghi.iter().filter(|&&g| g > 0.0).count() < open.ghi.iter().filter(|&&g| g > 0.0).count());
    }

    proptest! {
        #[test]
        fn write_load_round_trip(
            values in prop::collection::vec(
                (0.0f64..1200.0, 0.0f64..1.0, prop::option::of(0.0f64..600.0),
                 -30.0f64..35.0, prop::option::of(0.0f64..20.0), any::<bool>()),
                1..60)
        ) {
            let n = values.len();
            let ghi: Vec<f64> = values.iter().map(|v| v.0).collect();
            let dhi = values.iter().map(|v| if v.5 { Some(v.0 * v.1) } else { None }).collect();
            let s = WeatherSeries::new(
                site(),
                hourly(year_start(2019), n),
                ghi,
                dhi,
                values.iter().map(|v| v.2).collect(),
                values.iter().map(|v| v.3).collect(),
                values.iter().map(|v| v.4).collect(),
            ).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("w.csv");
            write_weather(&path, &s).unwrap();
            let back = load_weather(&path, site()).unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn daily_count_and_energy(days in 1usize..10, par in prop::collection::vec(0.0f64..500.0, 240)) {
            let n = days * 24;
            let s = WeatherSeries::new(
                site(),
                hourly(year_start(2019), n),
                vec![600.0; n],
                vec![None; n],
                par[..n].iter().map(|&p| Some(p)).collect(),
                (0..n).map(|i| (i % 17) as f64 - 5.0).collect(),
                vec![None; n],
            ).unwrap();
            let agg = s.daily_aggregates();
            prop_assert_eq!(agg.len(), days);
            let total: f64 = agg.iter().map(|d| d.par_daily).sum();
            let expect = s.total_par();
            prop_assert!((total - expect).abs() <= 1e-9 * expect.max(1e-12));
            for d in &agg {
                prop_assert!(d.t_min <= d.t_mean && d.t_mean <= d.t_max);
            }
        }
    }
}
