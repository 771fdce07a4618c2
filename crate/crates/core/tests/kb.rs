use std::sync::Arc;

use proptest::prelude::*;
use sied::kb::{
    render_result, ClockTime, FixedClock, KbError, KbExecutor, Meridiem, MockBackend, RecordedKb, RemoteBackend,
    ReplayTransport, RouteQuery, TemplateId, MAX_RESULTS,
};

const DAY_START: i64 = 1_700_024_400;
const EST: i64 = -5 * 3600;

fn remote() -> RemoteBackend {
    let t = ReplayTransport::from_file(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/remote_replay.json")).unwrap();
    RemoteBackend::new("https://directions.invalid/json", "live-key", DAY_START, EST, Arc::new(t))
}

fn q(dep: &str, arr: &str, h: u8, m: u8, ampm: Meridiem) -> RouteQuery {
    RouteQuery::new(dep, arr, h, m, ampm).unwrap()
}

#[test]
fn remote_backend_parses_recorded_routes() {
    let kb = remote();
    let query = q("cmu", "airport", 10, 30, Meridiem::Am);
    assert_eq!(kb.request_body(&query)["departure_time"], DAY_START + 630 * 60);
    let res = kb.query(&query).unwrap();
    assert_eq!(res.len(), MAX_RESULTS);
    let times: Vec<String> = res.iter().map(|r| format!("{}-{}", r.depart_time, r.arrive_time)).collect();
    assert_eq!(times, ["10:37-11:02", "10:52-11:17"]);
    assert_eq!(res[0].line, "28X");
    assert_eq!((res[0].depart_stop.as_str(), res[0].arrive_stop.as_str()), ("Forbes Ave at Morewood", "Airport Terminal"));
    assert_eq!(
        render_result(TemplateId::BusSchedule, &res),
        "the next bus is 28X leaving at 10 37 a m and the one after is 28X leaving at 10 52 a m"
    );
}

#[test]
fn remote_backend_error_mapping() {
    let kb = remote();
    assert_eq!(kb.query(&q("cmu", "downtown", 11, 55, Meridiem::Pm)).unwrap(), vec![]);
    assert!(matches!(kb.query(&q("airport", "cmu", 1, 0, Meridiem::Pm)), Err(KbError::BackendUnavailable(m)) if m == "connection refused"));
    assert!(matches!(kb.query(&q("downtown", "airport", 9, 5, Meridiem::Am)), Err(KbError::BackendUnavailable(_))));
    assert!(matches!(kb.query(&q("oakland", "cmu", 8, 0, Meridiem::Am)), Err(KbError::BadResponse(_))));
    assert!(matches!(kb.query(&q("oakland", "airport", 8, 0, Meridiem::Am)), Err(KbError::UnknownPlace(_))));
    assert!(matches!(kb.query(&q("oakland", "downtown", 8, 0, Meridiem::Am)), Err(KbError::BackendUnavailable(_))));
    let bad = RouteQuery { arrival: "cmu".into(), ..q("cmu", "airport", 1, 0, Meridiem::Am) };
    assert!(matches!(kb.query(&bad), Err(KbError::MalformedQuery(_))));
}

#[test]
fn mock_is_deterministic_per_seed_and_day() {
    let places = ["cmu", "airport", "downtown", "oakland"];
    let a = MockBackend::new(11, places);
    let b = MockBackend::new(11, places);
    assert_eq!(a.export_table(), b.export_table());
    assert_ne!(a.export_table(), MockBackend::new(12, places).export_table());
    let clock = Arc::new(FixedClock::new(0));
    let c = MockBackend::with_clock(11, places, clock.clone());
    assert_eq!(c.export_table(), a.export_table());
    clock.set_day(1);
    assert_ne!(c.export_table(), a.export_table());
    assert_eq!(a.export_table().lines().count(), 1 + 4 * 3);
}

#[test]
fn recorded_kb_answers_only_what_it_holds() {
    let mock = MockBackend::new(1, ["cmu", "airport"]);
    let query = q("cmu", "airport", 7, 45, Meridiem::Pm);
    let mut kb = RecordedKb::new();
    kb.insert(query.clone(), mock.query(&query).unwrap());
    assert_eq!(kb.query(&query), mock.query(&query));
    assert!(kb.query(&q("airport", "cmu", 7, 45, Meridiem::Pm)).is_err());
}

fn minutes() -> impl Strategy<Value = u16> {
    0u16..ClockTime::MINUTES_PER_DAY
}

fn as_query(dep: &str, arr: &str, t: u16) -> RouteQuery {
    let c = ClockTime::from_minutes(t).unwrap();
    q(dep, arr, c.hour12(), c.minute(), c.meridiem())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mock_departures_follow_the_timetable(seed in 0u64..50, t in minutes()) {
        let kb = MockBackend::new(seed, ["cmu", "airport"]);
        let s = kb.schedule("cmu", "airport");
        let res = kb.query(&as_query("cmu", "airport", t)).unwrap();
        prop_assert!(res.len() <= MAX_RESULTS);
        for r in &res {
            let d = r.depart_time.minutes();
            prop_assert!(d >= t);
            prop_assert_eq!((d - s.first_departure) % s.headway, 0);
            prop_assert_eq!(r.arrive_time.minutes(), d + s.travel_minutes);
        }
        if let Some(first) = res.first() {
            prop_assert!(first.depart_time.minutes() < t.max(s.first_departure) + s.headway);
        }
        if res.len() == 2 {
            prop_assert_eq!(res[1].depart_time.minutes() - res[0].depart_time.minutes(), s.headway);
        }
    }

    #[test]
    fn later_queries_never_get_earlier_buses(seed in 0u64..50, a in minutes(), b in minutes()) {
        let (a, b) = (a.min(b), a.max(b));
        let kb = MockBackend::new(seed, ["oakland", "downtown"]);
        let ra = kb.query(&as_query("oakland", "downtown", a)).unwrap();
        let rb = kb.query(&as_query("oakland", "downtown", b)).unwrap();
        if let (Some(x), Some(y)) = (ra.first(), rb.first()) {
            prop_assert!(x.depart_time <= y.depart_time);
        }
        prop_assert!(ra.len() >= rb.len());
    }

    #[test]
    fn twelve_hour_round_trip(t in minutes()) {
        let c = ClockTime::from_minutes(t).unwrap();
        let back = ClockTime::from_12h(c.hour12(), c.minute(), c.meridiem()).unwrap();
        prop_assert_eq!(back, c);
        prop_assert_eq!(c.to_string().parse::<ClockTime>().unwrap(), c);
    }
}
