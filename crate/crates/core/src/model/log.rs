//! Line-delimited JSON experience logs.
//!
//! One record per line:
//! `{"m":{"vms":5,...},"a":2,"m_next":{"vms":6,...},"r":27.3}`
//! with measurement keys in parameter-space order.

use super::{Experience, ModelError};
use crate::tree::{Measurement, ParameterSpace};
use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Deserialize, Serialize, Serializer};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};

struct Named<'a> {
    space: &'a ParameterSpace,
    m: &'a Measurement,
}

impl Serialize for Named<'_> {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let mut map = ser.serialize_map(Some(self.space.len()))?;
        for (i, p) in self.space.params().iter().enumerate() {
            map.serialize_entry(&p.name, &self.m.get(i))?;
        }
        map.end()
    }
}

struct Record<'a> {
    space: &'a ParameterSpace,
    e: &'a Experience,
}

impl Serialize for Record<'_> {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let mut st = ser.serialize_struct("Experience", 4)?;
        st.serialize_field("m", &Named { space: self.space, m: &self.e.m })?;
        st.serialize_field("a", &self.e.action)?;
        st.serialize_field("m_next", &Named { space: self.space, m: &self.e.m_next })?;
        st.serialize_field("r", &self.e.reward)?;
        st.end()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    m: BTreeMap<String, f64>,
    a: usize,
    m_next: BTreeMap<String, f64>,
    r: f64,
}

pub fn encode_experience(space: &ParameterSpace, e: &Experience) -> String {
    serde_json::to_string(&Record { space, e }).expect("experience records always serialize")
}

pub fn write_log<W: Write>(mut w: W, space: &ParameterSpace, log: &[Experience]) -> Result<(), ModelError> {
    for e in log {
        writeln!(w, "{}", encode_experience(space, e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_log<R: BufRead>(r: R, space: &ParameterSpace) -> Result<Vec<Experience>, ModelError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| ModelError::Parse { line: i + 1, message };
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let named = |map: &BTreeMap<String, f64>| {
            space
                .measurement(map.iter().map(|(k, v)| (k.as_str(), *v)))
                .map_err(|e| parse_err(e.to_string()))
        };
        out.push(Experience {
            m: named(&raw.m)?,
            action: raw.a,
            m_next: named(&raw.m_next)?,
            reward: raw.r,
        });
    }
    Ok(out)
}
