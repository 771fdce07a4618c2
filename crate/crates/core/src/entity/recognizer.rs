//! Gazetteer and clock-pattern entity recognizer.
//!
//! Rules ship as line-oriented data files under `data/` (one pattern per
//! line, `#` starts a comment, optional `surface<TAB>normalized`).

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{EntityError, EntityMention, EntityType};

const LOCATIONS: &str = include_str!("../../data/locations.txt");
const HOURS: &str = include_str!("../../data/hours.txt");
const MINUTES: &str = include_str!("../../data/minutes.txt");
const MERIDIEM: &str = include_str!("../../data/meridiem.txt");
const DATETIME: &str = include_str!("../../data/datetime.txt");

/// Words that make a bare hour ("at ten") count as a time.
const TIME_CUES: &[&str] = &["at", "around", "by", "after", "before", "about"];

/// Multi-token phrase table with longest-match lookup.
#[derive(Clone, Debug, Default)]
pub struct Gazetteer {
    entries: HashMap<Vec<String>, String>,
    order: Vec<Vec<String>>,
    max_len: usize,
}

impl Gazetteer {
    /// Parses rule-file text. Lines without a tab normalize to themselves.
    pub fn parse(text: &str) -> Result<Self, EntityError> {
        let mut g = Gazetteer::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (surface, normalized) = match line.split_once('\t') {
                Some((s, n)) => (s.trim(), n.trim()),
                None => (line.trim(), line.trim()),
            };
            if surface.is_empty() || normalized.is_empty() {
                return Err(EntityError::RuleFile(format!("line {}: empty pattern", lineno + 1)));
            }
            g.insert(surface, &normalize_phrase(normalized));
        }
        Ok(g)
    }

    pub fn insert(&mut self, surface: &str, normalized: &str) {
        let key: Vec<String> = surface.split_whitespace().map(str::to_lowercase).collect();
        if key.is_empty() {
            return;
        }
        self.max_len = self.max_len.max(key.len());
        if self.entries.insert(key.clone(), normalized.to_string()).is_none() {
            self.order.push(key);
        }
    }

    /// Longest phrase starting at `start`, as (token length, normalized form).
    pub fn longest_match(&self, tokens: &[String], start: usize) -> Option<(usize, &str)> {
        let avail = tokens.len().saturating_sub(start);
        for len in (1..=self.max_len.min(avail)).rev() {
            let key: Vec<String> = tokens[start..start + len].iter().map(|t| t.to_lowercase()).collect();
            if let Some(n) = self.entries.get(&key) {
                return Some((len, n.as_str()));
            }
        }
        None
    }

    /// Phrases in file order, space-joined.
    pub fn phrases(&self) -> impl Iterator<Item = String> + '_ {
        self.order.iter().map(|k| k.join(" "))
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Lowercase and collapse whitespace.
pub fn normalize_phrase(s: &str) -> String {
    s.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

/// Deterministic rule-based recognizer for LOCATION, HOUR, MINUTE, AMPM and
/// DATETIME mentions.
#[derive(Clone, Debug)]
pub struct Recognizer {
    locations: Gazetteer,
    hours: Gazetteer,
    minutes: Gazetteer,
    meridiem: Gazetteer,
    datetime: Gazetteer,
}

impl Default for Recognizer {
    fn default() -> Self {
        Self::bundled()
    }
}

impl Recognizer {
    /// Recognizer over the rule files compiled into the crate.
    pub fn bundled() -> Self {
        Self::from_texts(LOCATIONS, HOURS, MINUTES, MERIDIEM, DATETIME).expect("bundled rule files parse")
    }

    pub fn from_texts(
        locations: &str,
        hours: &str,
        minutes: &str,
        meridiem: &str,
        datetime: &str,
    ) -> Result<Self, EntityError> {
        Ok(Self {
            locations: Gazetteer::parse(locations)?,
            hours: Gazetteer::parse(hours)?,
            minutes: Gazetteer::parse(minutes)?,
            meridiem: Gazetteer::parse(meridiem)?,
            datetime: Gazetteer::parse(datetime)?,
        })
    }

    /// Loads `locations.txt`, `hours.txt`, `minutes.txt`, `meridiem.txt` and
    /// `datetime.txt` from a directory.
    pub fn from_dir(dir: &Path) -> Result<Self, EntityError> {
        let read = |name: &str| {
            fs::read_to_string(dir.join(name)).map_err(|e| EntityError::RuleFile(format!("{name}: {e}")))
        };
        Self::from_texts(
            &read("locations.txt")?,
            &read("hours.txt")?,
            &read("minutes.txt")?,
            &read("meridiem.txt")?,
            &read("datetime.txt")?,
        )
    }

    /// Returns a copy whose location gazetteer also holds `places`.
    pub fn with_locations<I, S>(&self, places: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out = self.clone();
        for p in places {
            let n = normalize_phrase(p.as_ref());
            out.locations.insert(&n, &n);
        }
        out
    }

    /// Returns a copy whose location gazetteer is exactly `places`.
    pub fn replace_locations<I, S>(&self, places: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out = self.clone();
        out.locations = Gazetteer::default();
        for p in places {
            let n = normalize_phrase(p.as_ref());
            out.locations.insert(&n, &n);
        }
        out
    }

    pub fn locations(&self) -> Vec<String> {
        self.locations.phrases().collect()
    }

    /// Non-overlapping mentions, scanning left to right with longest match.
    pub fn recognize(&self, tokens: &[String]) -> Vec<EntityMention> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            if let Some((len, norm)) = self.locations.longest_match(tokens, i) {
                out.push(mention(EntityType::Location, tokens, i, len, norm));
                i += len;
                continue;
            }
            if let Some((len, norm)) = self.datetime.longest_match(tokens, i) {
                out.push(mention(EntityType::Datetime, tokens, i, len, norm));
                i += len;
                continue;
            }
            if let Some(consumed) = self.match_time(tokens, i, &mut out) {
                i += consumed;
                continue;
            }
            i += 1;
        }
        out
    }

    /// Clock time `HOUR [MINUTE] [AMPM]`; a bare hour needs a cue word before it.
    fn match_time(&self, tokens: &[String], start: usize, out: &mut Vec<EntityMention>) -> Option<usize> {
        let (hl, hn) = self.hours.longest_match(tokens, start)?;
        let mut j = start + hl;
        let minute = self.minutes.longest_match(tokens, j).map(|(l, n)| (j, l, n.to_string()));
        if let Some((_, l, _)) = &minute {
            j += l;
        }
        let ampm = self.meridiem.longest_match(tokens, j).map(|(l, n)| (j, l, n.to_string()));
        if let Some((_, l, _)) = &ampm {
            j += l;
        }
        let cued = start > 0 && TIME_CUES.contains(&tokens[start - 1].to_lowercase().as_str());
        if minute.is_none() && ampm.is_none() && !cued {
            return None;
        }
        out.push(mention(EntityType::Hour, tokens, start, hl, hn));
        if let Some((s, l, n)) = minute {
            out.push(mention(EntityType::Minute, tokens, s, l, &n));
        }
        if let Some((s, l, n)) = ampm {
            out.push(mention(EntityType::Ampm, tokens, s, l, &n));
        }
        Some(j - start)
    }
}

fn mention(ty: EntityType, tokens: &[String], start: usize, len: usize, normalized: &str) -> EntityMention {
    EntityMention {
        entity_type: ty,
        surface: tokens[start..start + len].join(" "),
        normalized: normalized.to_string(),
        span: (start, start + len),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entity::tokenize;

    fn kinds(ms: &[EntityMention]) -> Vec<(EntityType, &str, &str)> {
        ms.iter().map(|m| (m.entity_type, m.surface.as_str(), m.normalized.as_str())).collect()
    }

    #[test]
    fn location_and_full_clock_time() {
        let r = Recognizer::bundled();
        let ms = r.recognize(&tokenize("leave from forbes avenue at ten thirty a m"));
        assert_eq!(
            kinds(&ms),
            vec![
                (EntityType::Location, "forbes avenue", "forbes avenue"),
                (EntityType::Hour, "ten", "10"),
                (EntityType::Minute, "thirty", "30"),
                (EntityType::Ampm, "a m", "am"),
            ]
        );
        assert_eq!(ms[0].span, (2, 4));
    }

    #[test]
    fn empty_and_entity_free_inputs() {
        let r = Recognizer::bundled();
        assert!(r.recognize(&[]).is_empty());
        assert!(r.recognize(&tokenize("hello how are you")).is_empty());
        // "am" is only a meridiem after a clock time.
        assert!(r.recognize(&tokenize("i am here")).is_empty());
    }

    #[test]
    fn longest_match_prefers_multiword_place() {
        let r = Recognizer::bundled();
        let ms = r.recognize(&tokenize("to carnegie mellon please"));
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0].normalized, "carnegie mellon");
        let ms = r.recognize(&tokenize("to carnegie please"));
        assert_eq!(ms[0].normalized, "carnegie");
    }

    #[test]
    fn bare_hour_needs_cue() {
        let r = Recognizer::bundled();
        assert!(r.recognize(&tokenize("i have ten dollars")).is_empty());
        let ms = r.recognize(&tokenize("around ten"));
        assert_eq!(kinds(&ms), vec![(EntityType::Hour, "ten", "10")]);
    }

    #[test]
    fn digits_and_oh_minutes() {
        let r = Recognizer::bundled();
        let ms = r.recognize(&tokenize("at 9 05 pm"));
        assert_eq!(ms.iter().map(|m| m.normalized.as_str()).collect::<Vec<_>>(), ["9", "05", "pm"]);
        let ms = r.recognize(&tokenize("at nine oh five p m"));
        assert_eq!(ms.iter().map(|m| m.normalized.as_str()).collect::<Vec<_>>(), ["9", "05", "pm"]);
    }

    #[test]
    fn rule_file_comments_and_tabs() {
        let g = Gazetteer::parse("# c\n\nfoo bar\nbaz\tqux\n").unwrap();
        assert_eq!(g.len(), 2);
        let toks = tokenize("foo bar baz");
        assert_eq!(g.longest_match(&toks, 0), Some((2, "foo bar")));
        assert_eq!(g.longest_match(&toks, 2), Some((1, "qux")));
    }

    #[test]
    fn extra_locations_extend_gazetteer() {
        let r = Recognizer::bundled().with_locations(["Zebra Point"]);
        let ms = r.recognize(&tokenize("go to zebra point"));
        assert_eq!(ms[0].normalized, "zebra point");
    }
}
