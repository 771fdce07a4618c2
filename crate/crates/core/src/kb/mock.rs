use std::collections::BTreeSet;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ClockTime, KbError, KbExecutor, RouteQuery, RouteResult, MAX_RESULTS};

const LINES: &[&str] = &[
    "61A", "61B", "61C", "61D", "28X", "54", "71A", "71B", "71C", "71D", "P1", "P3", "67", "69", "75", "86", "88",
    "93", "G2", "Y1",
];
const HEADWAYS: [u16; 3] = [15, 20, 30];

/// Source of the current service day for the mock timetable.
pub trait Clock: Send + Sync + fmt::Debug {
    fn service_day(&self) -> u64;
}

/// A settable day counter.
#[derive(Debug, Default)]
pub struct FixedClock(AtomicU64);

impl FixedClock {
    pub fn new(day: u64) -> Self {
        Self(AtomicU64::new(day))
    }

    pub fn set_day(&self, day: u64) {
        self.0.store(day, Ordering::SeqCst);
    }
}

impl Clock for FixedClock {
    fn service_day(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

/// Timetable for one ordered (origin, destination) pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairSchedule {
    pub line: String,
    pub headway: u16,
    pub first_departure: u16,
    pub travel_minutes: u16,
}

/// Deterministic timetable generated from a seed: every ordered pair of
/// distinct known places has a bus line running at a fixed headway all day.
#[derive(Debug, Clone)]
pub struct MockBackend {
    seed: u64,
    places: BTreeSet<String>,
    clock: Arc<dyn Clock>,
}

// FNV-1a, stable across platforms and processes.
fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for p in parts {
        for b in p.iter().chain(std::iter::once(&0xffu8)) {
            h ^= *b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

impl MockBackend {
    pub fn new<I, S>(seed: u64, places: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self::with_clock(seed, places, Arc::new(FixedClock::new(0)))
    }

    pub fn with_clock<I, S>(seed: u64, places: I, clock: Arc<dyn Clock>) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let places = places.into_iter().map(|p| p.as_ref().to_string()).collect();
        Self { seed, places, clock }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn places(&self) -> impl Iterator<Item = &str> {
        self.places.iter().map(String::as_str)
    }

    pub fn knows(&self, place: &str) -> bool {
        self.places.contains(place)
    }

    pub fn schedule(&self, origin: &str, destination: &str) -> PairSchedule {
        self.schedule_on(self.clock.service_day(), origin, destination)
    }

    fn schedule_on(&self, day: u64, origin: &str, destination: &str) -> PairSchedule {
        let h = fnv1a(&[&self.seed.to_le_bytes(), &day.to_le_bytes(), origin.as_bytes(), destination.as_bytes()]);
        let mut rng = ChaCha8Rng::seed_from_u64(h);
        let headway = HEADWAYS[rng.gen_range(0..HEADWAYS.len())];
        let first_departure = rng.gen_range(0..headway);
        let travel_minutes = rng.gen_range(10..=45);
        let line = LINES[rng.gen_range(0..LINES.len())].to_string();
        PairSchedule { line, headway, first_departure, travel_minutes }
    }

    /// Plain-text dump of every pair's schedule for the current day.
    pub fn export_table(&self) -> String {
        let mut out = String::from("origin\tdestination\tline\theadway_min\tfirst_departure\ttravel_min\n");
        for o in &self.places {
            for d in &self.places {
                if o == d {
                    continue;
                }
                let s = self.schedule(o, d);
                let first = ClockTime::from_minutes(s.first_departure).expect("first departure within day");
                out.push_str(&format!("{o}\t{d}\t{}\t{}\t{first}\t{}\n", s.line, s.headway, s.travel_minutes));
            }
        }
        out
    }
}

impl KbExecutor for MockBackend {
    fn query(&self, q: &RouteQuery) -> Result<Vec<RouteResult>, KbError> {
        q.validate()?;
        for p in [&q.departure, &q.arrival] {
            if !self.knows(p) {
                return Err(KbError::UnknownPlace(p.clone()));
            }
        }
        let s = self.schedule(&q.departure, &q.arrival);
        let t = q.departure_time().minutes();
        let k = if t <= s.first_departure { 0 } else { (t - s.first_departure).div_ceil(s.headway) };
        let mut out = Vec::new();
        let mut dep = s.first_departure + k * s.headway;
        while out.len() < MAX_RESULTS && dep + s.travel_minutes < ClockTime::MINUTES_PER_DAY {
            out.push(RouteResult {
                line: s.line.clone(),
                depart_stop: q.departure.clone(),
                arrive_stop: q.arrival.clone(),
                depart_time: ClockTime::from_minutes(dep).expect("within day"),
                arrive_time: ClockTime::from_minutes(dep + s.travel_minutes).expect("within day"),
            });
            dep += s.headway;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::Meridiem;

    fn backend() -> MockBackend {
        MockBackend::new(7, ["cmu", "airport", "downtown"])
    }

    #[test]
    fn next_two_departures_at_or_after_query_time() {
        let kb = backend();
        let q = RouteQuery::new("cmu", "airport", 10, 30, Meridiem::Am).unwrap();
        let s = kb.schedule("cmu", "airport");
        // Independent lookup: walk the timetable from its first departure.
        let mut expected = Vec::new();
        let mut dep = s.first_departure;
        while dep < 24 * 60 && expected.len() < 2 {
            if dep >= 10 * 60 + 30 {
                expected.push(dep);
            }
            dep += s.headway;
        }
        let got = kb.query(&q).unwrap();
        assert_eq!(got.iter().map(|r| r.depart_time.minutes()).collect::<Vec<_>>(), expected);
        assert!(got.iter().all(|r| r.arrive_time.minutes() == r.depart_time.minutes() + s.travel_minutes));
        assert_eq!(got, kb.query(&q).unwrap());
    }

    #[test]
    fn errors_for_bad_queries() {
        let kb = backend();
        let same = RouteQuery { arrival: "cmu".into(), ..RouteQuery::new("cmu", "airport", 1, 0, Meridiem::Pm).unwrap() };
        assert!(matches!(kb.query(&same), Err(KbError::MalformedQuery(_))));
        let q = RouteQuery::new("atlantis", "cmu", 1, 0, Meridiem::Pm).unwrap();
        assert_eq!(kb.query(&q), Err(KbError::UnknownPlace("atlantis".into())));
    }

    #[test]
    fn late_night_queries_may_be_empty() {
        let kb = backend();
        let q = RouteQuery::new("cmu", "airport", 11, 59, Meridiem::Pm).unwrap();
        assert!(kb.query(&q).unwrap().is_empty());
    }

    #[test]
    fn clock_changes_the_timetable() {
        let clock = Arc::new(FixedClock::new(0));
        let places: Vec<String> = (0..10).map(|i| format!("p{i}")).collect();
        let kb = MockBackend::with_clock(3, &places, clock.clone());
        let day0: Vec<_> = places.iter().skip(1).map(|d| kb.schedule("p0", d)).collect();
        clock.set_day(1);
        let day1: Vec<_> = places.iter().skip(1).map(|d| kb.schedule("p0", d)).collect();
        assert_ne!(day0, day1);
    }

    #[test]
    fn export_lists_every_ordered_pair() {
        let table = backend().export_table();
        assert_eq!(table.lines().count(), 1 + 3 * 2);
    }
}
