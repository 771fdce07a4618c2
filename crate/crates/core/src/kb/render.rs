use serde::{Deserialize, Serialize};

use super::RouteResult;

pub const NO_ROUTE_TEXT: &str = "i am sorry i could not find any bus for that trip";

/// Fixed sentence templates for KB results.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemplateId {
    #[default]
    BusSchedule,
}

/// Renders up to two results (extra results are ignored) as system text.
pub fn render_result(template: TemplateId, results: &[RouteResult]) -> String {
    match template {
        TemplateId::BusSchedule => match results {
            [] => NO_ROUTE_TEXT.to_string(),
            [r] => format!("the next bus is {} leaving at {}", r.line, r.depart_time.spoken()),
            [r, s, ..] => format!(
                "the next bus is {} leaving at {} and the one after is {} leaving at {}",
                r.line,
                r.depart_time.spoken(),
                s.line,
                s.depart_time.spoken()
            ),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::ClockTime;

    fn result(line: &str, dep: &str) -> RouteResult {
        RouteResult {
            line: line.into(),
            depart_stop: "cmu".into(),
            arrive_stop: "airport".into(),
            depart_time: dep.parse().unwrap(),
            arrive_time: ClockTime::from_minutes(dep.parse::<ClockTime>().unwrap().minutes() + 20).unwrap(),
        }
    }

    #[test]
    fn templates() {
        assert_eq!(render_result(TemplateId::BusSchedule, &[]), NO_ROUTE_TEXT);
        assert_eq!(
            render_result(TemplateId::BusSchedule, &[result("61C", "10:35")]),
            "the next bus is 61C leaving at 10 35 a m"
        );
        assert_eq!(
            render_result(TemplateId::BusSchedule, &[result("61C", "10:35"), result("61C", "13:05")]),
            "the next bus is 61C leaving at 10 35 a m and the one after is 61C leaving at 1 05 p m"
        );
    }
}
