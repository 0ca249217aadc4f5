//! Court metadata normalization against a state/city directory.
//!
//! The directory is normally loaded from offline snapshot files; the
//! [`fetch_directory`] client refreshes them from an Open-Legal-Data
//! compatible API (`/api/states/`, `/api/cities/`).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Court, CourtRaw};

/// Placeholder for every unresolved court field.
pub const UNSPECIFIED: &str = "Unspecified";

/// Environment variable holding the API base URL.
pub const API_BASE_ENV: &str = "OLSEG_API_BASE";
pub const DEFAULT_API_BASE: &str = "https://de.openlegaldata.io";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateEntry {
    pub id: i64,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CityEntry {
    pub id: i64,
    pub name: String,
    #[serde(default, alias = "state_id")]
    pub state: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct City {
    pub name: String,
    pub state_id: Option<i64>,
}

#[derive(Debug, Error)]
pub enum DirectoryError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid directory file {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("cannot write snapshot {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("GET {endpoint} (page {page}) failed: {message}")]
    Http {
        endpoint: String,
        page: usize,
        message: String,
    },
}

/// Read-only mapping of state and city ids to names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GeoDirectory {
    states: BTreeMap<i64, String>,
    cities: BTreeMap<i64, City>,
}

impl GeoDirectory {
    /// Builds a directory; a repeated id keeps the last entry and logs a
    /// warning. The returned count is the number of such warnings.
    pub fn from_entries(states: Vec<StateEntry>, cities: Vec<CityEntry>) -> (Self, usize) {
        let mut dir = GeoDirectory::default();
        let mut duplicates = 0;
        for s in states {
            if let Some(old) = dir.states.insert(s.id, s.name) {
                warn!("duplicate state id {} (was {old:?}); last entry wins", s.id);
                duplicates += 1;
            }
        }
        for c in cities {
            let city = City {
                name: c.name,
                state_id: c.state,
            };
            if let Some(old) = dir.cities.insert(c.id, city) {
                warn!(
                    "duplicate city id {} (was {:?}); last entry wins",
                    c.id, old.name
                );
                duplicates += 1;
            }
        }
        // A city pointing at an unknown state keeps no state reference.
        for (id, city) in dir.cities.iter_mut() {
            if let Some(sid) = city.state_id {
                if !dir.states.contains_key(&sid) {
                    warn!("city {id} references unknown state {sid}");
                    city.state_id = None;
                }
            }
        }
        (dir, duplicates)
    }

    pub fn state(&self, id: i64) -> Option<&str> {
        self.states.get(&id).map(String::as_str)
    }

    pub fn city(&self, id: i64) -> Option<&City> {
        self.cities.get(&id)
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn city_count(&self) -> usize {
        self.cities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty() && self.cities.is_empty()
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, DirectoryError> {
    let text = fs::read_to_string(path).map_err(|source| DirectoryError::Read {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| DirectoryError::Parse {
        path: path.to_owned(),
        source,
    })
}

/// Loads snapshot files holding JSON arrays of `{id, name}` states and
/// `{id, name, state}` cities.
pub fn load_directory(
    states_file: &Path,
    cities_file: &Path,
) -> Result<GeoDirectory, DirectoryError> {
    let states: Vec<StateEntry> = read_json(states_file)?;
    let cities: Vec<CityEntry> = read_json(cities_file)?;
    Ok(GeoDirectory::from_entries(states, cities).0)
}

#[derive(Deserialize)]
struct Page<T> {
    #[serde(default)]
    next: Option<String>,
    results: Vec<T>,
}

/// Pages through one list endpoint by following `next` links.
fn fetch_all<T: for<'de> Deserialize<'de>>(
    agent: &ureq::Agent,
    base_url: &str,
    endpoint: &str,
) -> Result<Vec<T>, DirectoryError> {
    let mut url = format!("{}{endpoint}", base_url.trim_end_matches('/'));
    let mut out = Vec::new();
    for page in 1.. {
        let http = |message: String| DirectoryError::Http {
            endpoint: endpoint.to_string(),
            page,
            message,
        };
        let mut resp = agent
            .get(&url)
            .header("Accept", "application/json")
            .call()
            .map_err(|e| http(e.to_string()))?;
        let body: Page<T> = resp
            .body_mut()
            .read_json()
            .map_err(|e| http(e.to_string()))?;
        out.extend(body.results);
        match body.next {
            Some(next) if !next.is_empty() => {
                url = if next.starts_with("http://") || next.starts_with("https://") {
                    next
                } else {
                    format!("{}{next}", base_url.trim_end_matches('/'))
                };
            }
            _ => break,
        }
    }
    Ok(out)
}

/// Fetches both endpoints completely, then writes the two snapshot files.
///
/// Any HTTP failure aborts before anything is written.
pub fn fetch_directory(
    base_url: &str,
    states_out: &Path,
    cities_out: &Path,
) -> Result<GeoDirectory, DirectoryError> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(std::time::Duration::from_secs(60)))
        .build()
        .into();
    let states: Vec<StateEntry> = fetch_all(&agent, base_url, "/api/states/")?;
    let cities: Vec<CityEntry> = fetch_all(&agent, base_url, "/api/cities/")?;
    for (path, json) in [
        (states_out, serde_json::to_string_pretty(&states)),
        (cities_out, serde_json::to_string_pretty(&cities)),
    ] {
        let json = json.expect("directory entries serialize");
        fs::write(path, json + "\n").map_err(|source| DirectoryError::Write {
            path: path.to_owned(),
            source,
        })?;
    }
    Ok(GeoDirectory::from_entries(states, cities).0)
}

fn or_unspecified(s: &str) -> String {
    if s.trim().is_empty() {
        UNSPECIFIED.to_string()
    } else {
        s.to_string()
    }
}

/// Resolves state and city names. The state comes from `state_id`, else from
/// the resolved city's state; anything unresolved is [`UNSPECIFIED`].
pub fn normalize_court(raw: &CourtRaw, dir: &GeoDirectory) -> Court {
    let city = raw.city_id.and_then(|id| dir.city(id));
    let state = raw
        .state_id
        .and_then(|id| dir.state(id))
        .or_else(|| city.and_then(|c| c.state_id).and_then(|id| dir.state(id)));
    Court {
        name: or_unspecified(&raw.name),
        state: or_unspecified(state.unwrap_or("")),
        city: or_unspecified(city.map_or("", |c| c.name.as_str())),
    }
}
