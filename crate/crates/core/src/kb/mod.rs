//! Transit schedule knowledge base: query/result types, a seeded mock
//! timetable, a client for an external directions service, and the fixed
//! templates that turn results into system text.

mod mock;
mod remote;
mod render;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::entity::EntityType;

pub use mock::{Clock, FixedClock, MockBackend, PairSchedule};
pub use remote::{HttpTransport, RemoteBackend, ReplayExchange, ReplayTransport, TransportError, UreqTransport};
pub use render::{render_result, TemplateId, NO_ROUTE_TEXT};

/// Most results the system reads back per query.
pub const MAX_RESULTS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Meridiem {
    Am,
    Pm,
}

impl Meridiem {
    pub fn as_str(self) -> &'static str {
        match self {
            Meridiem::Am => "am",
            Meridiem::Pm => "pm",
        }
    }
}

impl FromStr for Meridiem {
    type Err = KbError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "am" => Ok(Meridiem::Am),
            "pm" => Ok(Meridiem::Pm),
            other => Err(KbError::MalformedQuery(format!("meridiem `{other}`"))),
        }
    }
}

/// Time of day with minute resolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClockTime(u16);

impl ClockTime {
    pub const MINUTES_PER_DAY: u16 = 24 * 60;

    pub fn from_minutes(m: u16) -> Option<Self> {
        (m < Self::MINUTES_PER_DAY).then_some(Self(m))
    }

    pub fn from_12h(hour: u8, minute: u8, meridiem: Meridiem) -> Result<Self, KbError> {
        if !(1..=12).contains(&hour) || minute > 59 {
            return Err(KbError::MalformedQuery(format!("time {hour}:{minute:02}")));
        }
        let h24 = match (hour, meridiem) {
            (12, Meridiem::Am) => 0,
            (12, Meridiem::Pm) => 12,
            (h, Meridiem::Am) => h,
            (h, Meridiem::Pm) => h + 12,
        };
        Ok(Self(h24 as u16 * 60 + minute as u16))
    }

    pub fn minutes(self) -> u16 {
        self.0
    }

    pub fn hour12(self) -> u8 {
        match (self.0 / 60) as u8 {
            0 => 12,
            h if h > 12 => h - 12,
            h => h,
        }
    }

    pub fn minute(self) -> u8 {
        (self.0 % 60) as u8
    }

    pub fn meridiem(self) -> Meridiem {
        if self.0 < 12 * 60 {
            Meridiem::Am
        } else {
            Meridiem::Pm
        }
    }

    /// Spoken-style rendering used by result templates, e.g. `10 35 a m`.
    pub fn spoken(self) -> String {
        let m = match self.meridiem() {
            Meridiem::Am => "a m",
            Meridiem::Pm => "p m",
        };
        format!("{} {:02} {m}", self.hour12(), self.minute())
    }
}

impl fmt::Display for ClockTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.0 / 60, self.0 % 60)
    }
}

impl FromStr for ClockTime {
    type Err = KbError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || KbError::BadResponse(format!("clock time `{s}`"));
        let (h, m) = s.split_once(':').ok_or_else(bad)?;
        let (h, m): (u16, u16) = (h.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?);
        if h >= 24 || m >= 60 {
            return Err(bad());
        }
        Ok(Self(h * 60 + m))
    }
}

impl Serialize for ClockTime {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ClockTime {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TravelMode {
    #[default]
    Transit,
}

/// Departure, arrival and departure time; the travel mode is always transit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RouteQuery {
    #[serde(rename = "dep")]
    pub departure: String,
    #[serde(rename = "arr")]
    pub arrival: String,
    #[serde(rename = "h")]
    pub hour: u8,
    #[serde(rename = "m")]
    pub minute: u8,
    #[serde(rename = "ampm")]
    pub meridiem: Meridiem,
    #[serde(skip)]
    pub mode: TravelMode,
}

impl RouteQuery {
    pub fn new(departure: &str, arrival: &str, hour: u8, minute: u8, meridiem: Meridiem) -> Result<Self, KbError> {
        let q = Self {
            departure: departure.to_string(),
            arrival: arrival.to_string(),
            hour,
            minute,
            meridiem,
            mode: TravelMode::Transit,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<(), KbError> {
        if self.departure.is_empty() || self.arrival.is_empty() {
            return Err(KbError::MalformedQuery("empty place".into()));
        }
        if self.departure == self.arrival {
            return Err(KbError::MalformedQuery(format!("departure equals arrival `{}`", self.departure)));
        }
        ClockTime::from_12h(self.hour, self.minute, self.meridiem)?;
        Ok(())
    }

    pub fn departure_time(&self) -> ClockTime {
        ClockTime::from_12h(self.hour, self.minute, self.meridiem).expect("validated query")
    }

    /// Argument values in `[kb-search]` order: departure, arrival, hour, minute, meridiem.
    pub fn args(&self) -> Vec<(EntityType, String)> {
        vec![
            (EntityType::Location, self.departure.clone()),
            (EntityType::Location, self.arrival.clone()),
            (EntityType::Hour, self.hour.to_string()),
            (EntityType::Minute, format!("{:02}", self.minute)),
            (EntityType::Ampm, self.meridiem.as_str().to_string()),
        ]
    }

    /// Inverse of [`args`](Self::args).
    pub fn from_args(args: &[(EntityType, String)]) -> Result<Self, KbError> {
        use EntityType::*;
        let types: Vec<EntityType> = args.iter().map(|(t, _)| *t).collect();
        if types != [Location, Location, Hour, Minute, Ampm] {
            return Err(KbError::MalformedQuery(format!(
                "expected LOCATION LOCATION HOUR MINUTE AMPM, got {}",
                types.iter().map(|t| t.as_str()).collect::<Vec<_>>().join(" ")
            )));
        }
        let num = |s: &str| s.parse::<u8>().map_err(|_| KbError::MalformedQuery(format!("number `{s}`")));
        Self::new(&args[0].1, &args[1].1, num(&args[2].1)?, num(&args[3].1)?, args[4].1.parse()?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteResult {
    pub line: String,
    #[serde(rename = "dep_stop")]
    pub depart_stop: String,
    #[serde(rename = "arr_stop")]
    pub arrive_stop: String,
    #[serde(rename = "dep_time")]
    pub depart_time: ClockTime,
    #[serde(rename = "arr_time")]
    pub arrive_time: ClockTime,
}

/// Anything that can answer a route query.
pub trait KbExecutor: Send + Sync {
    fn query(&self, q: &RouteQuery) -> Result<Vec<RouteResult>, KbError>;
}

#[derive(Debug)]
pub enum KbBackend {
    Mock(MockBackend),
    Remote(RemoteBackend),
}

impl KbExecutor for KbBackend {
    fn query(&self, q: &RouteQuery) -> Result<Vec<RouteResult>, KbError> {
        match self {
            KbBackend::Mock(m) => m.query(q),
            KbBackend::Remote(r) => r.query(q),
        }
    }
}

/// Answers only the queries it was given, returning their stored results.
#[derive(Clone, Debug, Default)]
pub struct RecordedKb {
    answers: HashMap<RouteQuery, Vec<RouteResult>>,
}

impl RecordedKb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, q: RouteQuery, results: Vec<RouteResult>) {
        self.answers.insert(q, results);
    }
}

impl KbExecutor for RecordedKb {
    fn query(&self, q: &RouteQuery) -> Result<Vec<RouteResult>, KbError> {
        q.validate()?;
        self.answers.get(q).cloned().ok_or_else(|| KbError::UnknownPlace(q.departure.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KbError {
    #[error("unknown place `{0}`")]
    UnknownPlace(String),
    #[error("malformed query: {0}")]
    MalformedQuery(String),
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("unexpected backend response: {0}")]
    BadResponse(String),
}
