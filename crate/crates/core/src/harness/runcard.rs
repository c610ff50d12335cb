//! `key = value` run descriptions, readable back as configuration.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Ordered `key = value` entries; `#` starts a comment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Runcard {
    entries: Vec<(String, String)>,
}

impl Runcard {
    pub fn new() -> Self {
        Runcard::default()
    }

    /// Sets `key`, replacing an earlier value in place.
    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        let key = key.into();
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key, value)),
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut card = Runcard::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: i + 1, msg: format!("expected 'key = value', got '{line}'") })?;
            let key = k.trim();
            if key.is_empty() {
                return Err(Error::Parse { line: i + 1, msg: "empty key".into() });
            }
            card.set(key, v.trim());
        }
        Ok(card)
    }
}

/// Comma-joined list.
pub fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Parses a comma-separated list, naming `what` in errors.
pub fn split<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|_| Error::Config(format!("invalid {what} entry '{t}'"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_overwrite() {
        let mut c = Runcard::new();
        c.set("n", 6).set("J_grid", join(&[6, 12])).set("s", std::f64::consts::FRAC_PI_2).set("n", 10);
        let text = c.to_text();
        assert_eq!(text.lines().next(), Some("n = 10"));
        let back = Runcard::parse(&format!("# comment\n\n{text}")).unwrap();
        assert_eq!(back, c);
        assert_eq!(split::<usize>(back.get("J_grid").unwrap(), "J").unwrap(), vec![6, 12]);
        assert_eq!(back.get("s").unwrap().parse::<f64>().unwrap(), std::f64::consts::FRAC_PI_2);
        assert!(Runcard::parse("novalue").is_err());
        assert!(split::<usize>("1,x", "J").is_err());
    }
}
