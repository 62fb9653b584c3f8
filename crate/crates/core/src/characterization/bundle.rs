//! Dataset bundle directory I/O.
//!
//! Layout:
//!
//! ```text
//! manifest.json                   {"m", "repetitions", "units", "seed"}
//! counts.csv                      i,j,b,count        (single-photon counts)
//! coincidence/<i>_<i'>_<j>_<j'>.csv  tau,count
//! spectra/<j>.csv                 omega,f
//! calibration.csv                 tau,count          (optional, beam-splitter curve)
//! calibration_counts.csv          i,j,b,count        (optional, beam-splitter singles)
//! ```
//!
//! All ports are 1-based. Floats are written in shortest round-trip form so
//! a written bundle reads back bit-identically.

use super::amplitudes::SingleCounts;
use super::{CalibrationData, CharacterizationDataset, CharacterizedInterferometer};
use crate::error::{Error, Result};
use crate::photonic::{CoincidenceCurve, PortTuple, SpectralFunction};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

/// Bundle metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    /// Number of modes.
    pub m: usize,
    /// Number of single-photon counting runs `B`.
    pub repetitions: usize,
    /// Free-form description of the delay/frequency units.
    pub units: String,
    /// Seed used to generate the data, if synthetic.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn read_table(path: &Path, header: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| io_err(path, e))?;
    let got: Vec<String> = rdr.headers().map_err(|e| io_err(path, e))?.iter().map(str::to_string).collect();
    if got != header {
        return Err(Error::ParseError { line: 1, message: format!("{}: expected header {header:?}, found {got:?}", path.display()) });
    }
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::ParseError { line: k + 2, message: format!("{}: {e}", path.display()) })?;
        if rec.len() != header.len() {
            return Err(Error::ParseError { line: k + 2, message: format!("{}: wrong field count", path.display()) });
        }
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

fn parse_at<T: std::str::FromStr>(s: &str, line: usize, path: &Path) -> Result<T> {
    s.parse().map_err(|_| Error::ParseError { line, message: format!("{}: cannot parse '{s}'", path.display()) })
}

fn read_counts(path: &Path, m: usize, b: usize) -> Result<SingleCounts> {
    let mut counts = SingleCounts::zeros(m, b);
    for (k, row) in read_table(path, &["i", "j", "b", "count"])?.into_iter().enumerate() {
        let line = k + 2;
        let i: usize = parse_at(&row[0], line, path)?;
        let j: usize = parse_at(&row[1], line, path)?;
        let r: usize = parse_at(&row[2], line, path)?;
        let c: u64 = parse_at(&row[3], line, path)?;
        if !(1..=m).contains(&i) || !(1..=m).contains(&j) || !(1..=b).contains(&r) {
            return Err(Error::ParseError { line, message: format!("{}: index ({i}, {j}, {r}) out of range", path.display()) });
        }
        counts.set(i, j, r, c);
    }
    Ok(counts)
}

fn read_pairs(path: &Path, header: &[&str]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, row) in read_table(path, header)?.into_iter().enumerate() {
        xs.push(parse_at(&row[0], k + 2, path)?);
        ys.push(parse_at(&row[1], k + 2, path)?);
    }
    Ok((xs, ys))
}

fn read_curve(path: &Path) -> Result<CoincidenceCurve> {
    let (tau, values) = read_pairs(path, &["tau", "count"])?;
    CoincidenceCurve::new(tau, values)
}

fn parse_curve_name(name: &str) -> Option<PortTuple> {
    let stem = name.strip_suffix(".csv")?;
    let parts: Vec<usize> = stem.split('_').map(|p| p.parse().ok()).collect::<Option<_>>()?;
    <[usize; 4]>::try_from(parts).ok()
}

/// Reads an `omega,f` spectrum CSV and normalizes it.
pub fn read_spectrum(path: &Path) -> Result<SpectralFunction> {
    let (omega, f) = read_pairs(path, &["omega", "f"])?;
    Ok(SpectralFunction::new(omega, f)?.normalized()?.0)
}

/// Writes a spectrum as an `omega,f` CSV.
pub fn write_spectrum(path: &Path, f: &SpectralFunction) -> Result<()> {
    let rows = f.omega().iter().zip(f.values()).map(|(w, v)| vec![w.to_string(), v.to_string()]);
    write_csv(path, &["omega", "f"], rows)
}

/// Reads a bundle directory. Spectra are renormalized on load.
pub fn read_bundle(dir: &Path) -> Result<(BundleManifest, CharacterizationDataset)> {
    let mpath = dir.join("manifest.json");
    let manifest: BundleManifest =
        serde_json::from_str(&fs::read_to_string(&mpath).map_err(|e| io_err(&mpath, e))?).map_err(|e| io_err(&mpath, e))?;
    let (m, b) = (manifest.m, manifest.repetitions);
    let counts = read_counts(&dir.join("counts.csv"), m, b)?;
    let mut curves = BTreeMap::new();
    let cdir = dir.join("coincidence");
    if cdir.is_dir() {
        let mut names: Vec<String> = fs::read_dir(&cdir)
            .map_err(|e| io_err(&cdir, e))?
            .filter_map(|e| e.ok().and_then(|e| e.file_name().into_string().ok()))
            .filter(|n| n.ends_with(".csv"))
            .collect();
        names.sort();
        for n in names {
            let key = parse_curve_name(&n)
                .ok_or_else(|| Error::ParseError { line: 0, message: format!("bad coincidence file name '{n}'") })?;
            curves.insert(key, read_curve(&cdir.join(&n))?);
        }
    }
    let mut spectra = Vec::with_capacity(m);
    for j in 1..=m {
        spectra.push(read_spectrum(&dir.join("spectra").join(format!("{j}.csv")))?);
    }
    let cal_curve = dir.join("calibration.csv");
    let calibration = if cal_curve.exists() {
        let curve = read_curve(&cal_curve)?;
        let cc = dir.join("calibration_counts.csv");
        if !cc.exists() {
            return Err(Error::Io(format!("{} present without {}", cal_curve.display(), cc.display())));
        }
        let single_counts = read_counts(&cc, 2, b)?;
        Some(CalibrationData { single_counts, curve })
    } else {
        None
    };
    let ds = CharacterizationDataset::new(counts, curves, calibration, spectra)?;
    Ok((manifest, ds))
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn counts_rows(c: &SingleCounts) -> impl Iterator<Item = Vec<String>> + '_ {
    let (m, b) = (c.modes(), c.repetitions());
    (1..=m).flat_map(move |i| {
        (1..=m).flat_map(move |j| {
            (1..=b).map(move |r| vec![i.to_string(), j.to_string(), r.to_string(), c.get(i, j, r).to_string()])
        })
    })
}

fn curve_rows(c: &CoincidenceCurve) -> impl Iterator<Item = Vec<String>> + '_ {
    c.tau.iter().zip(&c.values).map(|(t, v)| vec![t.to_string(), v.to_string()])
}

/// Writes `dataset` as a bundle directory (created if absent).
pub fn write_bundle(dir: &Path, manifest: &BundleManifest, dataset: &CharacterizationDataset) -> Result<()> {
    if manifest.m != dataset.modes() || manifest.repetitions != dataset.single_counts().repetitions() {
        return Err(Error::ShapeError("manifest does not match dataset".into()));
    }
    fs::create_dir_all(dir.join("coincidence"))?;
    fs::create_dir_all(dir.join("spectra"))?;
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(manifest)? + "\n")?;
    write_csv(&dir.join("counts.csv"), &["i", "j", "b", "count"], counts_rows(dataset.single_counts()))?;
    for (k, c) in dataset.curves() {
        let name = format!("{}_{}_{}_{}.csv", k[0], k[1], k[2], k[3]);
        write_csv(&dir.join("coincidence").join(name), &["tau", "count"], curve_rows(c))?;
    }
    for (j, f) in dataset.spectra().iter().enumerate() {
        write_spectrum(&dir.join("spectra").join(format!("{}.csv", j + 1)), f)?;
    }
    if let Some(cal) = dataset.calibration() {
        write_csv(&dir.join("calibration.csv"), &["tau", "count"], curve_rows(&cal.curve))?;
        write_csv(&dir.join("calibration_counts.csv"), &["i", "j", "b", "count"], counts_rows(&cal.single_counts))?;
    }
    Ok(())
}

/// Writes `result.json` (matrix in the versioned JSON format, row-major
/// σ arrays, `γ`, diagnostics).
pub fn write_result(path: &Path, result: &CharacterizedInterferometer) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(result)? + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::UnitaryMatrix;

    fn small_dataset() -> CharacterizationDataset {
        let mut counts = SingleCounts::zeros(2, 2);
        for (k, v) in [7u64, 9, 11, 13, 5, 3, 2, 8].iter().enumerate() {
            let (i, j, b) = (k / 4 + 1, (k / 2) % 2 + 1, k % 2 + 1);
            counts.set(i, j, b, *v);
        }
        let mut curves = BTreeMap::new();
        curves.insert([2, 1, 1, 2], CoincidenceCurve::new(vec![-1.0, 0.0, 0.1], vec![10.0, 2.5, 3.0]).unwrap());
        let f = SpectralFunction::gaussian(3.0, 0.3, 21).unwrap();
        let cal = CalibrationData {
            single_counts: counts.clone(),
            curve: CoincidenceCurve::new(vec![0.0, 1.0], vec![1.0, 4.0]).unwrap(),
        };
        CharacterizationDataset::new(counts, curves, Some(cal), vec![f.clone(), f]).unwrap()
    }

    #[test]
    fn bundle_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let ds = small_dataset();
        let man = BundleManifest { m: 2, repetitions: 2, units: "dimensionless".into(), seed: Some(5) };
        write_bundle(dir.path(), &man, &ds).unwrap();
        assert!(dir.path().join("coincidence/1_2_1_2.csv").exists());
        let (man2, ds2) = read_bundle(dir.path()).unwrap();
        assert_eq!(man, man2);
        assert_eq!(ds.single_counts(), ds2.single_counts());
        assert_eq!(ds.curves(), ds2.curves());
        assert_eq!(ds.calibration(), ds2.calibration());
        for (a, b) in ds.spectra().iter().zip(ds2.spectra()) {
            assert_eq!(a.omega(), b.omega());
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() < 1e-12 * x.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn bad_header_and_index_are_parse_errors() {
        let dir = tempfile::tempdir().unwrap();
        let ds = small_dataset();
        let man = BundleManifest { m: 2, repetitions: 2, units: "u".into(), seed: None };
        write_bundle(dir.path(), &man, &ds).unwrap();
        fs::write(dir.path().join("counts.csv"), "i,j,b,count\n1,1,1,4\n3,1,1,2\n").unwrap();
        match read_bundle(dir.path()).unwrap_err() {
            Error::ParseError { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
        fs::write(dir.path().join("counts.csv"), "a,b\n1,2\n").unwrap();
        assert_eq!(read_bundle(dir.path()).unwrap_err().code(), "ParseError");
    }

    #[test]
    fn result_json_contains_matrix_schema() {
        let dir = tempfile::tempdir().unwrap();
        let r = CharacterizedInterferometer {
            w: UnitaryMatrix::identity(2),
            sigma_re: vec![0.0; 4],
            sigma_im: vec![0.0; 4],
            gamma: 1.0,
            gamma_sigma: 0.0,
            diagnostics: vec![],
            replicates: 0,
            failures: 0,
        };
        let p = dir.path().join("result.json");
        write_result(&p, &r).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.contains("\"schema\": \"v1\""));
        let back: CharacterizedInterferometer = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
