use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use regex::Regex;
use serde::Serialize;
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::model::{Channel, StationMeta};

use super::raw::read_meta;

/// File naming pattern of the canonical raw container.
pub const DEFAULT_PATTERN: &str = "{station}_{date}_{hour}_{channel}.bin";

const SECONDS_PER_HOUR: i64 = 3600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatTag {
    Raw,
    VmrLog,
    Iaga2002,
}

impl FormatTag {
    fn from_path(p: &Path) -> Self {
        match p.extension().and_then(|e| e.to_str()) {
            Some("csv") => FormatTag::VmrLog,
            Some("min") | Some("iaga") => FormatTag::Iaga2002,
            _ => FormatTag::Raw,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CatalogEntry {
    pub station_id: String,
    pub channel: Channel,
    /// UTC epoch of the hour the file holds.
    pub start_epoch: i64,
    pub path: PathBuf,
    pub format: FormatTag,
}

/// Covered hours of one station channel as merged `[start, end)` epoch spans.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Coverage {
    pub station_id: String,
    pub channel: Channel,
    pub spans: Vec<(i64, i64)>,
}

impl Coverage {
    /// Uncovered `[start, end)` intervals between the first and last span.
    pub fn holes(&self) -> Vec<(i64, i64)> {
        self.spans.windows(2).map(|w| (w[0].1, w[1].0)).collect()
    }

    pub fn covered_seconds(&self) -> i64 {
        self.spans.iter().map(|(a, b)| b - a).sum()
    }

    pub fn is_contiguous(&self) -> bool {
        self.spans.len() <= 1
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct DatasetCatalog {
    pub root_path: PathBuf,
    /// Sorted by `(station_id, channel, start_epoch)`.
    pub entries: Vec<CatalogEntry>,
    pub coverage: Vec<Coverage>,
    /// Files whose names did not parse against the pattern.
    pub unparsed: Vec<PathBuf>,
    #[serde(skip)]
    pub stations: BTreeMap<String, StationMeta>,
}

impl DatasetCatalog {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn station_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.entries.iter().map(|e| e.station_id.as_str()).collect();
        ids.dedup();
        ids
    }

    pub fn meta(&self, station: &str) -> Option<&StationMeta> {
        self.stations.get(station)
    }

    pub fn entries_for(&self, station: &str, channel: Channel) -> &[CatalogEntry] {
        let lo = self
            .entries
            .partition_point(|e| (e.station_id.as_str(), e.channel) < (station, channel));
        let hi = self
            .entries
            .partition_point(|e| (e.station_id.as_str(), e.channel) <= (station, channel));
        &self.entries[lo..hi]
    }

    pub fn coverage_for(&self, station: &str, channel: Channel) -> Option<&Coverage> {
        self.coverage
            .iter()
            .find(|c| c.station_id == station && c.channel == channel)
    }

    /// Builds a catalog from entries, checking uniqueness and computing coverage.
    pub fn from_entries(root: &Path, mut entries: Vec<CatalogEntry>) -> Result<Self> {
        entries.sort();
        for w in entries.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if a.station_id == b.station_id && a.channel == b.channel && a.start_epoch == b.start_epoch {
                return Err(Error::Duplicate {
                    key: format!("{}/{}/{}", a.station_id, a.channel.as_str(), a.start_epoch),
                    first: a.path.clone(),
                    second: b.path.clone(),
                });
            }
        }
        let mut coverage: Vec<Coverage> = Vec::new();
        for e in &entries {
            let span = (e.start_epoch, e.start_epoch + SECONDS_PER_HOUR);
            match coverage.last_mut() {
                Some(c) if c.station_id == e.station_id && c.channel == e.channel => {
                    let last = c.spans.last_mut().expect("non-empty spans");
                    if span.0 <= last.1 {
                        last.1 = last.1.max(span.1);
                    } else {
                        c.spans.push(span);
                    }
                }
                _ => coverage.push(Coverage {
                    station_id: e.station_id.clone(),
                    channel: e.channel,
                    spans: vec![span],
                }),
            }
        }
        Ok(Self {
            root_path: root.to_path_buf(),
            entries,
            coverage,
            unparsed: Vec::new(),
            stations: BTreeMap::new(),
        })
    }
}

/// Compiles a naming pattern with `{station}`, `{date}`, `{hour}` and
/// `{channel}` placeholders into an anchored regex.
pub fn compile_pattern(pattern: &str) -> Result<Regex> {
    const SLOTS: [(&str, &str); 4] = [
        ("{station}", r"(?P<station>.+?)"),
        ("{date}", r"(?P<date>\d{4}-\d{2}-\d{2})"),
        ("{hour}", r"(?P<hour>\d{2})"),
        ("{channel}", r"(?P<channel>[xyzXYZ])"),
    ];
    for (slot, _) in SLOTS {
        if pattern.matches(slot).count() != 1 {
            return Err(Error::InvalidParameter(format!(
                "naming pattern '{pattern}' must contain {slot} exactly once"
            )));
        }
    }
    let mut re = String::from("^");
    let mut rest = pattern;
    while let Some(open) = rest.find('{') {
        re.push_str(&regex::escape(&rest[..open]));
        let (slot, repl) = SLOTS
            .iter()
            .find(|(s, _)| rest[open..].starts_with(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown placeholder in '{pattern}'")))?;
        re.push_str(repl);
        rest = &rest[open + slot.len()..];
    }
    re.push_str(&regex::escape(rest));
    re.push('$');
    Regex::new(&re).map_err(|e| Error::InvalidParameter(format!("pattern '{pattern}': {e}")))
}

fn parse_name(re: &Regex, path: &Path) -> Option<CatalogEntry> {
    let name = path.file_name()?.to_str()?;
    let caps = re.captures(name)?;
    let date = NaiveDate::parse_from_str(&caps["date"], "%Y-%m-%d").ok()?;
    let hour: u32 = caps["hour"].parse().ok()?;
    let t = date.and_hms_opt(hour, 0, 0)?.and_utc().timestamp();
    let channel = Channel::from_str(&caps["channel"].to_ascii_lowercase()).ok()?;
    Some(CatalogEntry {
        station_id: caps["station"].to_string(),
        channel,
        start_epoch: t,
        path: path.to_path_buf(),
        format: FormatTag::from_path(path),
    })
}

/// Walks `root` for files matching `pattern` and `<station>.meta` sidecars.
pub fn scan_catalog(root: &Path, pattern: &str) -> Result<DatasetCatalog> {
    let re = compile_pattern(pattern)?;
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "catalog root is not a readable directory"),
        ));
    }
    let mut entries = Vec::new();
    let mut unparsed = Vec::new();
    let mut metas = Vec::new();
    for item in WalkDir::new(root).sort_by_file_name() {
        let item = item.map_err(|e| {
            let p = e.path().unwrap_or(root).to_path_buf();
            Error::io(&p, e.into())
        })?;
        if !item.file_type().is_file() {
            continue;
        }
        let p = item.path();
        if p.extension().and_then(|e| e.to_str()) == Some("meta") {
            metas.push(p.to_path_buf());
            continue;
        }
        match parse_name(&re, p) {
            Some(e) => entries.push(e),
            None => unparsed.push(p.to_path_buf()),
        }
    }
    let mut cat = DatasetCatalog::from_entries(root, entries)?;
    cat.unparsed = unparsed;
    for p in metas {
        let m = read_meta(&p)?;
        cat.stations.insert(m.station_id.clone(), m);
    }
    if cat.is_empty() {
        log::warn!("{}: no files match '{pattern}'", root.display());
    }
    for p in &cat.unparsed {
        log::debug!("unparsed file name {}", p.display());
    }
    Ok(cat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::raw::{raw_file_name, write_meta, write_raw};
    use crate::model::SensorKind;
    use proptest::prelude::*;

    fn touch(dir: &Path, station: &str, hour: i64, ch: Channel) {
        write_raw(&dir.join(raw_file_name(station, hour * 3600, ch).unwrap()), &[1.0]).unwrap();
    }

    #[test]
    fn contiguous_hours() {
        let dir = tempfile::tempdir().unwrap();
        for h in 0..3 {
            touch(dir.path(), "brk", 420_000 + h, Channel::X);
        }
        std::fs::write(dir.path().join("README.txt"), "notes").unwrap();
        write_meta(dir.path(), &StationMeta::new("brk", SensorKind::FluxgateBiomed)).unwrap();
        let cat = scan_catalog(dir.path(), DEFAULT_PATTERN).unwrap();
        assert_eq!(cat.entries.len(), 3);
        assert_eq!(cat.unparsed.len(), 1);
        let cov = cat.coverage_for("brk", Channel::X).unwrap();
        assert!(cov.is_contiguous());
        assert_eq!(cov.covered_seconds(), 3 * 3600);
        assert!(cat.meta("brk").is_some());
        assert_eq!(cat.entries_for("brk", Channel::X).len(), 3);
        assert!(cat.entries_for("brk", Channel::Y).is_empty());
    }

    #[test]
    fn missing_hour_is_one_hole() {
        let dir = tempfile::tempdir().unwrap();
        for h in [0, 1, 3] {
            touch(dir.path(), "st_a", 420_000 + h, Channel::Z);
        }
        let cat = scan_catalog(dir.path(), DEFAULT_PATTERN).unwrap();
        let cov = cat.coverage_for("st_a", Channel::Z).unwrap();
        let base = 420_000 * 3600;
        assert_eq!(cov.holes(), vec![(base + 2 * 3600, base + 3 * 3600)]);
    }

    #[test]
    fn duplicates_name_both_paths() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("a")).unwrap();
        std::fs::create_dir(dir.path().join("b")).unwrap();
        touch(&dir.path().join("a"), "brk", 5, Channel::X);
        touch(&dir.path().join("b"), "brk", 5, Channel::X);
        match scan_catalog(dir.path(), DEFAULT_PATTERN) {
            Err(Error::Duplicate { first, second, .. }) => {
                assert!(first.starts_with(dir.path().join("a")));
                assert!(second.starts_with(dir.path().join("b")));
            }
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn empty_and_bad_inputs() {
        let dir = tempfile::tempdir().unwrap();
        assert!(scan_catalog(dir.path(), DEFAULT_PATTERN).unwrap().is_empty());
        assert!(scan_catalog(&dir.path().join("missing"), DEFAULT_PATTERN).is_err());
        assert!(compile_pattern("{station}_{date}.bin").is_err());
        assert!(compile_pattern("{station}_{date}_{hour}_{channel}_{bogus}").is_err());
    }

    #[test]
    fn custom_pattern() {
        let re = compile_pattern("mag-{date}T{hour}-{station}.{channel}.dat").unwrap();
        let e = parse_name(&re, Path::new("/d/mag-2018-05-28T13-bk.Y.dat")).unwrap();
        assert_eq!(e.station_id, "bk");
        assert_eq!(e.channel, Channel::Y);
        assert_eq!(e.start_epoch, 1_527_512_400);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn coverage_equals_union_of_spans(hours in proptest::collection::btree_set(0i64..200, 1..60)) {
            let entries: Vec<CatalogEntry> = hours
                .iter()
                .map(|&h| CatalogEntry {
                    station_id: "s".into(),
                    channel: Channel::X,
                    start_epoch: h * 3600,
                    path: PathBuf::from(format!("{h}")),
                    format: FormatTag::Raw,
                })
                .collect();
            let cat = DatasetCatalog::from_entries(Path::new("."), entries).unwrap();
            let cov = cat.coverage_for("s", Channel::X).unwrap();
            for h in 0i64..201 {
                let t = h * 3600 + 1;
                let covered = cov.spans.iter().any(|&(a, b)| t >= a && t < b);
                prop_assert_eq!(covered, hours.contains(&h));
            }
            prop_assert_eq!(cov.covered_seconds(), hours.len() as i64 * 3600);
        }
    }
}
