//! Extraction of single-photon counts and coincidence curves from a heralded
//! event log (many sources fire at random; only one- and two-photon events
//! are kept).
//!
//! Log format, one event per line:
//!
//! ```text
//! # comment
//! timestamp,repetition,heralds,clicks,tau
//! 0.0013,1,2,3,0.0
//! 0.0021,1,1|3,2|4,-1.5
//! ```
//!
//! `heralds` are the 1-based input ports whose sources fired, `clicks` the
//! 1-based output ports that registered a photon; several ports are joined by
//! `|`. `repetition` (1-based) tags the counting run a single-photon event
//! belongs to, and `tau` is the delay setting active for the event. A header
//! line starting with `timestamp` is optional.

use super::amplitudes::SingleCounts;
use super::{canonical_ports, CalibrationData, CharacterizationDataset};
use crate::error::{Error, Result};
use crate::photonic::{CoincidenceCurve, PortTuple, SpectralFunction};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::BufRead;

/// One parsed log record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScattershotEvent {
    /// Event time stamp (informational).
    pub timestamp: f64,
    /// Counting run, 1-based.
    pub repetition: usize,
    /// Heralded input ports, 1-based.
    pub heralds: Vec<usize>,
    /// Output ports that clicked, 1-based.
    pub clicks: Vec<usize>,
    /// Delay setting.
    pub tau: f64,
}

impl ScattershotEvent {
    /// Parses one comma-separated record; `line` is used for error messages.
    pub fn parse(text: &str, line: usize) -> Result<Self> {
        let err = |message: String| Error::ParseError { line, message };
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", fields.len())));
        }
        let num = |s: &str, what: &str| s.parse::<f64>().map_err(|_| err(format!("invalid {what} '{s}'")));
        let ports = |s: &str, what: &str| -> Result<Vec<usize>> {
            if s.is_empty() {
                return Ok(Vec::new());
            }
            s.split('|')
                .map(|p| match p.trim().parse::<usize>() {
                    Ok(v) if v >= 1 => Ok(v),
                    _ => Err(err(format!("invalid {what} port '{p}'"))),
                })
                .collect()
        };
        let timestamp = num(fields[0], "timestamp")?;
        let repetition = match fields[1].parse::<usize>() {
            Ok(v) if v >= 1 => v,
            _ => return Err(err(format!("invalid repetition '{}'", fields[1]))),
        };
        let tau = num(fields[4], "tau")?;
        if !timestamp.is_finite() || !tau.is_finite() {
            return Err(err("non-finite timestamp or delay".into()));
        }
        Ok(Self { timestamp, repetition, heralds: ports(fields[2], "herald")?, clicks: ports(fields[3], "click")?, tau })
    }
}

/// Counters for events that did not contribute to the dataset.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscardCounts {
    /// No herald or no click.
    pub empty: u64,
    /// Herald and click numbers differ (loss or dark counts).
    pub mismatched: u64,
    /// Three or more heralds.
    pub multi_photon: u64,
    /// Repeated ports within an event.
    pub repeated_ports: u64,
    /// Ports outside `1..=m` or repetition outside `1..=B`.
    pub out_of_range: u64,
}

impl DiscardCounts {
    /// Total number of discarded events.
    pub fn total(&self) -> u64 {
        self.empty + self.mismatched + self.multi_photon + self.repeated_ports + self.out_of_range
    }
}

/// Counts and curves recovered from an event log.
#[derive(Clone, Debug, PartialEq)]
pub struct ScattershotExtract {
    /// Single-photon counts `N_{ijb}`.
    pub single_counts: SingleCounts,
    /// Coincidence counts per canonical port tuple, binned by delay setting
    /// (ascending `τ`).
    pub curves: BTreeMap<PortTuple, CoincidenceCurve>,
    /// Discarded-event counters.
    pub discarded: DiscardCounts,
}

impl ScattershotExtract {
    /// Combines the extracted counts with the separately measured spectra
    /// and calibration data into a dataset.
    pub fn into_dataset(
        self,
        calibration: Option<CalibrationData>,
        spectra: Vec<SpectralFunction>,
    ) -> Result<CharacterizationDataset> {
        CharacterizationDataset::new(self.single_counts, self.curves, calibration, spectra)
    }
}

fn distinct(p: &[usize]) -> bool {
    p.iter().enumerate().all(|(k, a)| !p[..k].contains(a))
}

/// Reads an event log for an `m`-mode interferometer with `repetitions`
/// counting runs.
///
/// Events with one herald and one click increment `N_{click, herald, rep}`;
/// events with two heralds and two clicks add one count to the curve of the
/// tuple `(clicks; heralds)` at the event's delay setting. Everything else is
/// discarded and counted.
pub fn scattershot_extract<R: BufRead>(reader: R, m: usize, repetitions: usize) -> Result<ScattershotExtract> {
    if m < 2 || repetitions == 0 {
        return Err(Error::InvalidInput(format!("need m >= 2 and at least one repetition (m = {m}, B = {repetitions})")));
    }
    let mut singles = SingleCounts::zeros(m, repetitions);
    let mut bins: BTreeMap<PortTuple, BTreeMap<u64, (f64, f64)>> = BTreeMap::new();
    let mut discarded = DiscardCounts::default();
    for (k, line) in reader.lines().enumerate() {
        let line_no = k + 1;
        let line = line.map_err(|e| Error::ParseError { line: line_no, message: e.to_string() })?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') || (k == 0 && text.starts_with("timestamp")) {
            continue;
        }
        let ev = ScattershotEvent::parse(text, line_no)?;
        let (h, c) = (&ev.heralds, &ev.clicks);
        if h.is_empty() || c.is_empty() {
            discarded.empty += 1;
        } else if h.len() >= 3 {
            discarded.multi_photon += 1;
        } else if h.len() != c.len() {
            discarded.mismatched += 1;
        } else if !distinct(h) || !distinct(c) {
            discarded.repeated_ports += 1;
        } else if h.iter().chain(c).any(|&p| p > m) || ev.repetition > repetitions {
            discarded.out_of_range += 1;
        } else if h.len() == 1 {
            singles.add(c[0], h[0], ev.repetition, 1);
        } else {
            let key = canonical_ports([c[0], c[1], h[0], h[1]]);
            let bin = bins.entry(key).or_default().entry(ev.tau.to_bits()).or_insert((ev.tau, 0.0));
            bin.1 += 1.0;
        }
    }
    let curves = bins
        .into_iter()
        .map(|(key, b)| {
            let mut pts: Vec<(f64, f64)> = b.into_values().collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (tau, values) = pts.into_iter().unzip();
            (key, CoincidenceCurve { tau, values })
        })
        .collect();
    Ok(ScattershotExtract { single_counts: singles, curves, discarded })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn extract(log: &str, m: usize, b: usize) -> Result<ScattershotExtract> {
        scattershot_extract(log.as_bytes(), m, b)
    }

    #[test]
    fn single_herald_log_fills_counts_only() {
        let log = "timestamp,repetition,heralds,clicks,tau\n0.1,1,1,2,0\n0.2,1,1,2,0\n0.3,2,3,1,0\n";
        let x = extract(log, 3, 2).unwrap();
        assert!(x.curves.is_empty());
        assert_eq!(x.single_counts.get(2, 1, 1), 2);
        assert_eq!(x.single_counts.get(1, 3, 2), 1);
        assert_eq!(x.single_counts.as_slice().iter().sum::<u64>(), 3);
        assert_eq!(x.discarded.total(), 0);
    }

    #[test]
    fn two_photon_events_binned_by_delay_under_canonical_key() {
        let log = "# two photons\n0,1,2|1,3|1,0.5\n0,1,1|2,1|3,0.5\n0,1,1|2,3|1,-0.5\n";
        let x = extract(log, 3, 1).unwrap();
        let c = &x.curves[&[1, 3, 1, 2]];
        assert_eq!(c.tau, vec![-0.5, 0.5]);
        assert_eq!(c.values, vec![1.0, 2.0]);
    }

    #[test]
    fn three_herald_and_mismatched_events_discarded() {
        let log = "0,1,1|2|3,1|2|3,0\n0,1,1|2,1,0\n0,1,1,,0\n0,1,1|1,2|3,0\n0,1,4,1,0\n0,3,1,1,0\n";
        let x = extract(log, 3, 2).unwrap();
        assert_eq!(x.discarded.multi_photon, 1);
        assert_eq!(x.discarded.mismatched, 1);
        assert_eq!(x.discarded.empty, 1);
        assert_eq!(x.discarded.repeated_ports, 1);
        assert_eq!(x.discarded.out_of_range, 2);
        assert_eq!(x.single_counts.as_slice().iter().sum::<u64>(), 0);
    }

    #[test]
    fn malformed_record_reports_line_number() {
        let log = "timestamp,repetition,heralds,clicks,tau\n0,1,1,2,0\n\n0,1,x,2,0\n";
        match extract(log, 3, 1).unwrap_err() {
            Error::ParseError { line, .. } => assert_eq!(line, 4),
            e => panic!("unexpected {e}"),
        }
        assert_eq!(extract("0,1,1,2\n", 3, 1).unwrap_err().code(), "ParseError");
        assert_eq!(extract("0,0,1,2,0\n", 3, 1).unwrap_err().code(), "ParseError");
    }
}
