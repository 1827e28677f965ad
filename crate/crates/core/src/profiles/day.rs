use std::fmt;
use std::io::Read;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, Timelike, Weekday};
use serde::{Deserialize, Serialize};

use super::ProfileError;
use crate::snap_power;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Season {
    Spring,
    Summer,
    Autumn,
    Winter,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Spring, Season::Summer, Season::Autumn, Season::Winter];

    /// Mar–May spring, Jun–Aug summer, Sep–Nov autumn, Dec–Feb winter.
    pub fn from_month(month: u32) -> Season {
        match month {
            3..=5 => Season::Spring,
            6..=8 => Season::Summer,
            9..=11 => Season::Autumn,
            _ => Season::Winter,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Season::Spring => "spring",
            Season::Summer => "summer",
            Season::Autumn => "autumn",
            Season::Winter => "winter",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayType {
    Weekday,
    Weekend,
}

impl DayType {
    pub const ALL: [DayType; 2] = [DayType::Weekday, DayType::Weekend];

    pub fn from_weekday(day: Weekday) -> DayType {
        match day {
            Weekday::Sat | Weekday::Sun => DayType::Weekend,
            _ => DayType::Weekday,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DayType::Weekday => "weekday",
            DayType::Weekend => "weekend",
        }
    }
}

/// A (season, day type) pair identifying one of the eight representative days.
///
/// Serializes as `"<season>-<day_type>"`, e.g. `"summer-weekday"`, so it can be
/// used as a JSON object key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct DayKey {
    pub season: Season,
    pub day_type: DayType,
}

impl DayKey {
    pub fn new(season: Season, day_type: DayType) -> Self {
        Self { season, day_type }
    }

    /// All eight keys, season-major.
    pub fn all() -> impl Iterator<Item = DayKey> {
        Season::ALL
            .into_iter()
            .flat_map(|s| DayType::ALL.into_iter().map(move |d| DayKey::new(s, d)))
    }
}

impl fmt::Display for DayKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.season.as_str(), self.day_type.as_str())
    }
}

impl FromStr for DayKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (season, day_type) = s
            .split_once('-')
            .ok_or_else(|| format!("day key `{s}` is not of the form season-daytype"))?;
        let season = Season::ALL
            .into_iter()
            .find(|x| x.as_str() == season)
            .ok_or_else(|| format!("unknown season `{season}`"))?;
        let day_type = DayType::ALL
            .into_iter()
            .find(|x| x.as_str() == day_type)
            .ok_or_else(|| format!("unknown day type `{day_type}`"))?;
        Ok(DayKey::new(season, day_type))
    }
}

impl From<DayKey> for String {
    fn from(key: DayKey) -> String {
        key.to_string()
    }
}

impl TryFrom<String> for DayKey {
    type Error = String;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

/// One day of power samples at a fixed interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayProfile {
    pub season: Season,
    pub day_type: DayType,
    pub interval_hours: f64,
    pub samples: Vec<f64>,
}

impl DayProfile {
    /// Build a profile, checking that the samples cover exactly 24 hours and
    /// are finite. Sign is not checked here; see [`DayProfile::ensure_non_negative`].
    pub fn new(
        season: Season,
        day_type: DayType,
        interval_hours: f64,
        samples: Vec<f64>,
    ) -> Result<Self, ProfileError> {
        if !(interval_hours.is_finite() && interval_hours > 0.0) {
            return Err(ProfileError::InvalidProfile(format!(
                "interval {interval_hours} h is not positive"
            )));
        }
        let span = samples.len() as f64 * interval_hours;
        if (span - 24.0).abs() > 1e-9 {
            return Err(ProfileError::InvalidProfile(format!(
                "{} samples at {interval_hours} h cover {span} h, not 24 h",
                samples.len()
            )));
        }
        if let Some(k) = samples.iter().position(|x| !x.is_finite()) {
            return Err(ProfileError::InvalidProfile(format!(
                "sample {k} is not finite"
            )));
        }
        Ok(Self {
            season,
            day_type,
            interval_hours,
            samples,
        })
    }

    pub fn key(&self) -> DayKey {
        DayKey::new(self.season, self.day_type)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Energy over the day in MWh.
    pub fn energy_mwh(&self) -> f64 {
        self.samples.iter().sum::<f64>() * self.interval_hours
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn scaled(&self, factor: f64) -> DayProfile {
        DayProfile {
            samples: self.samples.iter().map(|x| x * factor).collect(),
            ..self.clone()
        }
    }

    /// Load and generation profiles must not go below zero.
    pub fn ensure_non_negative(&self) -> Result<(), ProfileError> {
        match self.samples.iter().position(|&x| x < 0.0) {
            Some(k) => Err(ProfileError::InvalidProfile(format!(
                "sample {k} is negative ({})",
                self.samples[k]
            ))),
            None => Ok(()),
        }
    }
}

fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    const FORMATS: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%d %H:%M",
    ];
    let raw = raw.trim();
    FORMATS
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(raw, fmt).ok())
        .or_else(|| DateTime::parse_from_rfc3339(raw).ok().map(|t| t.naive_local()))
}

/// Read a `timestamp,value` CSV into one [`DayProfile`] per calendar day.
///
/// Rows must be uniformly spaced at `interval_hours`, and every day must be
/// complete (starting at midnight with `24 / interval_hours` rows). Row
/// indices in errors are zero-based and count data rows only.
pub fn ingest_series<R: Read>(
    source: R,
    interval_hours: f64,
) -> Result<Vec<DayProfile>, ProfileError> {
    let malformed = |row: Option<usize>, reason: String| ProfileError::MalformedSeries { row, reason };

    let step_seconds = interval_hours * 3600.0;
    if !(step_seconds.is_finite() && step_seconds >= 1.0) || (step_seconds - step_seconds.round()).abs() > 1e-6 {
        return Err(malformed(None, format!("interval {interval_hours} h is not a whole number of seconds")));
    }
    let step_seconds = step_seconds.round() as i64;
    if 86_400 % step_seconds != 0 {
        return Err(malformed(None, format!("interval {interval_hours} h does not divide a day")));
    }
    let per_day = (86_400 / step_seconds) as usize;

    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| malformed(None, format!("cannot read header: {e}")))?
        .clone();
    if headers.len() != 2 || &headers[0] != "timestamp" || &headers[1] != "value" {
        return Err(malformed(None, format!("expected header `timestamp,value`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }

    let mut days: Vec<(NaiveDate, usize, Vec<f64>)> = Vec::new();
    let mut previous: Option<NaiveDateTime> = None;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| malformed(Some(row), e.to_string()))?;
        if record.len() != 2 {
            return Err(malformed(Some(row), format!("expected 2 fields, found {}", record.len())));
        }
        let stamp = parse_timestamp(&record[0])
            .ok_or_else(|| malformed(Some(row), format!("unparseable timestamp `{}`", &record[0])))?;
        let value: f64 = record[1]
            .parse()
            .map_err(|_| malformed(Some(row), format!("unparseable value `{}`", &record[1])))?;
        if !value.is_finite() {
            return Err(malformed(Some(row), format!("non-finite value `{}`", &record[1])));
        }
        if let Some(prev) = previous {
            let gap = (stamp - prev).num_seconds();
            if gap != step_seconds {
                return Err(malformed(
                    Some(row),
                    format!("spacing of {gap} s, expected {step_seconds} s"),
                ));
            }
        }
        previous = Some(stamp);

        let date = stamp.date();
        match days.last_mut() {
            Some((d, _, values)) if *d == date => values.push(value),
            _ => {
                let offset = stamp.num_seconds_from_midnight() as i64;
                if offset != 0 {
                    return Err(malformed(
                        Some(row),
                        format!("day {date} starts at {} instead of midnight", stamp.time()),
                    ));
                }
                days.push((date, row, vec![value]));
            }
        }
    }

    days.into_iter()
        .map(|(date, first_row, values)| {
            if values.len() != per_day {
                return Err(malformed(
                    Some(first_row),
                    format!("day {date} has {} samples, expected {per_day}", values.len()),
                ));
            }
            DayProfile::new(
                Season::from_month(date.month()),
                DayType::from_weekday(date.weekday()),
                interval_hours,
                values,
            )
        })
        .collect()
}

/// Net load `P_nl = P_load − Σ scale·P_re`, slot by slot.
///
/// Each renewable profile comes with the multiplier that converts it to the
/// installed nominal capacity (e.g. `nominal / model rating`). Negative net
/// load is allowed. The result is snapped to the power grid so that later
/// CHP/BESS splits reconstruct it bit for bit.
pub fn net_load(
    load: &DayProfile,
    renewables: &[(&DayProfile, f64)],
) -> Result<DayProfile, ProfileError> {
    let mut samples = load.samples.clone();
    for (i, (profile, scale)) in renewables.iter().enumerate() {
        if profile.len() != load.len() || (profile.interval_hours - load.interval_hours).abs() > 1e-12 {
            return Err(ProfileError::ShapeError(format!(
                "renewable {i} has {} samples at {} h, load has {} at {} h",
                profile.len(),
                profile.interval_hours,
                load.len(),
                load.interval_hours
            )));
        }
        for (net, re) in samples.iter_mut().zip(&profile.samples) {
            *net -= scale * re;
        }
    }
    for x in &mut samples {
        *x = snap_power(*x);
    }
    DayProfile::new(load.season, load.day_type, load.interval_hours, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_day(date: &str, n: usize, value: impl Fn(usize) -> String) -> String {
        let mut out = String::from("timestamp,value\n");
        for k in 0..n {
            let minutes = k * 15;
            out.push_str(&format!("{date}T{:02}:{:02}:00,{}\n", minutes / 60, minutes % 60, value(k)));
        }
        out
    }

    #[test]
    fn constant_day_passes_through() {
        let text = csv_day("2023-07-12", 96, |_| "3.0".into());
        let days = ingest_series(text.as_bytes(), 0.25).unwrap();
        assert_eq!(days.len(), 1);
        assert_eq!(days[0].season, Season::Summer);
        assert_eq!(days[0].day_type, DayType::Weekday);
        assert!(days[0].samples.iter().all(|&x| x == 3.0));
    }

    #[test]
    fn incomplete_day_is_rejected() {
        let text = csv_day("2023-07-12", 95, |_| "3.0".into());
        let err = ingest_series(text.as_bytes(), 0.25).unwrap_err();
        assert!(matches!(err, ProfileError::MalformedSeries { row: Some(0), .. }), "{err}");
    }

    #[test]
    fn nan_value_reports_row() {
        let text = csv_day("2023-07-12", 96, |k| if k == 40 { "NaN".into() } else { "1.0".into() });
        match ingest_series(text.as_bytes(), 0.25).unwrap_err() {
            ProfileError::MalformedSeries { row, .. } => assert_eq!(row, Some(40)),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn gap_is_non_uniform_spacing() {
        let mut text = csv_day("2023-07-12", 96, |_| "1.0".into());
        text = text.replace("2023-07-12T10:15:00,1.0\n", "");
        let err = ingest_series(text.as_bytes(), 0.25).unwrap_err();
        assert!(matches!(err, ProfileError::MalformedSeries { row: Some(41), .. }), "{err}");
    }

    #[test]
    fn bad_header_is_rejected() {
        let text = "time,val\n2023-01-01T00:00:00,1\n";
        assert!(ingest_series(text.as_bytes(), 0.25).is_err());
    }

    #[test]
    fn season_and_day_type_from_timestamp() {
        let text = csv_day("2023-12-30", 96, |_| "1".into());
        let days = ingest_series(text.as_bytes(), 0.25).unwrap();
        assert_eq!(days[0].key(), DayKey::new(Season::Winter, DayType::Weekend));
        assert_eq!(Season::from_month(3), Season::Spring);
        assert_eq!(Season::from_month(9), Season::Autumn);
        assert_eq!(Season::from_month(2), Season::Winter);
    }

    #[test]
    fn day_key_round_trips_as_string() {
        for key in DayKey::all() {
            let json = serde_json::to_string(&key).unwrap();
            assert_eq!(serde_json::from_str::<DayKey>(&json).unwrap(), key);
        }
        assert_eq!(DayKey::all().count(), 8);
    }

    #[test]
    fn profile_must_cover_one_day() {
        assert!(DayProfile::new(Season::Spring, DayType::Weekday, 0.25, vec![0.0; 95]).is_err());
        assert!(DayProfile::new(Season::Spring, DayType::Weekday, 1.0, vec![0.0; 24]).is_ok());
        assert!(DayProfile::new(Season::Spring, DayType::Weekday, 1.0, vec![f64::NAN; 24]).is_err());
    }

    fn flat(v: f64) -> DayProfile {
        DayProfile::new(Season::Summer, DayType::Weekday, 0.25, vec![v; 96]).unwrap()
    }

    #[test]
    fn net_load_arithmetic() {
        let net = net_load(&flat(3.0), &[(&flat(1.0), 1.0)]).unwrap();
        assert!(net.samples.iter().all(|&x| x == 2.0));
        let net = net_load(&flat(3.0), &[(&flat(0.0), 1.0)]).unwrap();
        assert_eq!(net.samples, flat(3.0).samples);
        let net = net_load(&flat(1.0), &[(&flat(2.5), 1.0)]).unwrap();
        assert!(net.samples.iter().all(|&x| x == -1.5));
    }

    #[test]
    fn net_load_shape_mismatch() {
        let hourly = DayProfile::new(Season::Summer, DayType::Weekday, 1.0, vec![1.0; 24]).unwrap();
        assert!(matches!(
            net_load(&flat(3.0), &[(&hourly, 1.0)]),
            Err(ProfileError::ShapeError(_))
        ));
    }
}
