//! Queries the seeded mock timetable and renders the results the way the
//! system speaks them.

use sied::kb::{render_result, KbExecutor, Meridiem, MockBackend, RouteQuery, TemplateId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let places = ["cmu", "airport", "downtown", "oakland"];
    let kb = MockBackend::new(11, places);
    print!("{}", kb.export_table());
    for (dep, arr, h, m, ampm) in [("cmu", "airport", 10, 30, Meridiem::Am), ("oakland", "downtown", 11, 55, Meridiem::Pm)] {
        let q = RouteQuery::new(dep, arr, h, m, ampm)?;
        let res = kb.query(&q)?;
        println!("{dep} -> {arr} at {}: {}", q.departure_time(), render_result(TemplateId::BusSchedule, &res));
    }
    Ok(())
}
