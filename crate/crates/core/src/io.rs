//! Plain-text persistence: CSV tables and JSON sidecars.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), which
//! round-trips every `f64` exactly, and never depend on the locale.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::depth::{DepthReport, QuantileContour, SignCurve};
use crate::distributions::SphericalSample;
use crate::error::{Error, Result};
use crate::geometry::{norm, UnitVector3};
use crate::harmonics::{coeff_count, coeff_index, HarmonicCoeffs};
use crate::solver::PotentialEstimate;

const NORM_TOLERANCE: f64 = 0.01;

/// Column layout of a sample file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleFormat {
    /// Decide from the header.
    #[default]
    Auto,
    /// `x,y,z` unit vectors.
    Xyz,
    /// `lon_deg,lat_deg` in degrees.
    LonLat,
}

impl std::str::FromStr for SampleFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(SampleFormat::Auto),
            "xyz" => Ok(SampleFormat::Xyz),
            "lonlat" => Ok(SampleFormat::LonLat),
            other => Err(Error::Domain(format!("unknown sample format `{other}`"))),
        }
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("`{}` is not a number", field.trim()),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("non-finite value `{}`", field.trim()),
        });
    }
    Ok(v)
}

fn split_row(row: &str, expected: usize, line: usize) -> Result<Vec<&str>> {
    let fields: Vec<&str> = row.split(',').collect();
    if fields.len() != expected {
        return Err(Error::Parse {
            line,
            message: format!("expected {expected} fields, found {}", fields.len()),
        });
    }
    Ok(fields)
}

fn header_fields(header: &str) -> Vec<String> {
    header.split(',').map(|f| f.trim().to_ascii_lowercase()).collect()
}

/// Nonblank lines with their 1-based line numbers.
fn numbered_lines<R: Read>(reader: R) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if !trimmed.is_empty() {
            out.push((i + 1, trimmed.to_string()));
        }
    }
    Ok(out)
}

/// Reads a sample. `x,y,z` rows with norm within 1% of one are renormalized;
/// `lon_deg,lat_deg` rows map to colatitude `π/2 − lat` and longitude `lon`.
pub fn read_sample<R: Read>(reader: R, format: SampleFormat) -> Result<SphericalSample> {
    let lines = numbered_lines(reader)?;
    let Some(((header_line, header), rows)) = lines.split_first() else {
        return Err(Error::Parse {
            line: 1,
            message: "empty sample file".into(),
        });
    };
    let fields = header_fields(header);
    let detected = match fields.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["x", "y", "z"] => SampleFormat::Xyz,
        ["lon_deg", "lat_deg"] => SampleFormat::LonLat,
        _ => {
            return Err(Error::Parse {
                line: *header_line,
                message: format!("unrecognized header `{header}`"),
            })
        }
    };
    if format != SampleFormat::Auto && format != detected {
        return Err(Error::Parse {
            line: *header_line,
            message: format!("header `{header}` does not match the requested format"),
        });
    }
    let mut points = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        let line = *line;
        let point = match detected {
            SampleFormat::LonLat => {
                let f = split_row(row, 2, line)?;
                let lon = parse_f64(f[0], line)?;
                let lat = parse_f64(f[1], line)?;
                if !(-90.0..=90.0).contains(&lat) {
                    return Err(Error::Parse {
                        line,
                        message: format!("latitude {lat} outside [-90, 90]"),
                    });
                }
                let theta = std::f64::consts::FRAC_PI_2 - lat.to_radians();
                let lon = (lon + 180.0).rem_euclid(360.0) - 180.0;
                UnitVector3::from_spherical(theta, lon.to_radians()).map_err(|e| Error::Parse {
                    line,
                    message: e.to_string(),
                })?
            }
            _ => {
                let f = split_row(row, 3, line)?;
                let v = [parse_f64(f[0], line)?, parse_f64(f[1], line)?, parse_f64(f[2], line)?];
                let n = norm(&v);
                if (n - 1.0).abs() > NORM_TOLERANCE {
                    return Err(Error::Parse {
                        line,
                        message: format!("norm {n} is not within 1% of 1"),
                    });
                }
                UnitVector3::normalize(v).map_err(|e| Error::Parse {
                    line,
                    message: e.to_string(),
                })?
            }
        };
        points.push(point);
    }
    Ok(SphericalSample::new(points))
}

pub fn write_sample<W: Write>(writer: W, sample: &SphericalSample) -> Result<()> {
    write_points(writer, "x,y,z", &sample.points)
}

/// Points as `qx,qy,qz` rows, aligned with the query order.
pub fn write_map_points<W: Write>(writer: W, points: &[UnitVector3]) -> Result<()> {
    write_points(writer, "qx,qy,qz", points)
}

fn write_points<W: Write>(writer: W, header: &str, points: &[UnitVector3]) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{header}")?;
    for p in points {
        writeln!(w, "{},{},{}", fmt_f64(p.x()), fmt_f64(p.y()), fmt_f64(p.z()))?;
    }
    w.flush()?;
    Ok(())
}

/// `l,m,value` rows sorted by `(l, m)`.
pub fn write_coeffs<W: Write>(writer: W, coeffs: &HarmonicCoeffs) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "l,m,value")?;
    let lmax = coeffs.band_limit() as i64;
    for l in 0..=lmax {
        for m in -l..=l {
            writeln!(w, "{l},{m},{}", fmt_f64(coeffs.get(l as usize, m)))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads an `l,m,value` table; every `(l, m)` with `l ≤ L` must appear once.
pub fn read_coeffs<R: Read>(reader: R) -> Result<HarmonicCoeffs> {
    let lines = numbered_lines(reader)?;
    let Some(((header_line, header), rows)) = lines.split_first() else {
        return Err(Error::Parse {
            line: 1,
            message: "empty coefficient file".into(),
        });
    };
    if header_fields(header) != ["l", "m", "value"] {
        return Err(Error::Parse {
            line: *header_line,
            message: format!("expected header `l,m,value`, found `{header}`"),
        });
    }
    let mut entries = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        let f = split_row(row, 3, *line)?;
        let parse_int = |s: &str| {
            s.trim().parse::<i64>().map_err(|_| Error::Parse {
                line: *line,
                message: format!("`{}` is not an integer", s.trim()),
            })
        };
        let l = parse_int(f[0])?;
        let m = parse_int(f[1])?;
        if l < 0 || m.abs() > l {
            return Err(Error::Parse {
                line: *line,
                message: format!("invalid degree/order ({l}, {m})"),
            });
        }
        entries.push((*line, l as usize, m, parse_f64(f[2], *line)?));
    }
    let lmax = entries.iter().map(|e| e.1).max().unwrap_or(0);
    if entries.len() != coeff_count(lmax) {
        return Err(Error::Parse {
            line: *header_line,
            message: format!("expected {} coefficients for band limit {lmax}, found {}", coeff_count(lmax), entries.len()),
        });
    }
    let mut values = vec![f64::NAN; coeff_count(lmax)];
    for (line, l, m, v) in entries {
        let slot = &mut values[coeff_index(l, m)];
        if !slot.is_nan() {
            return Err(Error::Parse {
                line,
                message: format!("duplicate coefficient ({l}, {m})"),
            });
        }
        *slot = v;
    }
    HarmonicCoeffs::from_vec(lmax, values)
}

/// Metadata stored next to the coefficient table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSidecar {
    pub epsilon: f64,
    pub band_limit: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub iterations: usize,
    pub seed: u64,
    pub objective_trace: Vec<f64>,
}

/// The sidecar path for a coefficient file: `potential.csv` → `potential.json`.
pub fn sidecar_path(coeff_path: &Path) -> PathBuf {
    coeff_path.with_extension("json")
}

pub fn save_potential(coeff_path: &Path, estimate: &PotentialEstimate) -> Result<()> {
    write_coeffs(fs::File::create(coeff_path)?, &estimate.coeffs)?;
    let sidecar = PotentialSidecar {
        epsilon: estimate.epsilon,
        band_limit: estimate.band_limit(),
        gamma: estimate.gamma,
        alpha: estimate.alpha,
        iterations: estimate.iterations,
        seed: estimate.seed,
        objective_trace: estimate.objective_trace.clone(),
    };
    let mut w = BufWriter::new(fs::File::create(sidecar_path(coeff_path))?);
    serde_json::to_writer_pretty(&mut w, &sidecar)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn load_potential(coeff_path: &Path) -> Result<PotentialEstimate> {
    let coeffs = read_coeffs(fs::File::open(coeff_path)?)?;
    let sidecar: PotentialSidecar = serde_json::from_reader(BufReader::new(fs::File::open(sidecar_path(coeff_path))?))?;
    if sidecar.band_limit != coeffs.band_limit() {
        return Err(Error::BandLimitMismatch {
            expected: sidecar.band_limit,
            found: coeffs.band_limit(),
        });
    }
    Ok(PotentialEstimate {
        coeffs,
        epsilon: sidecar.epsilon,
        objective_trace: sidecar.objective_trace,
        iterations: sidecar.iterations,
        gamma: sidecar.gamma,
        alpha: sidecar.alpha,
        seed: sidecar.seed,
    })
}

#[derive(Serialize)]
struct CurveJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sign: Option<[f64; 3]>,
    pole: [f64; 3],
    points: Vec<[f64; 3]>,
}

fn curve_json(tau: Option<f64>, sign: Option<[f64; 3]>, pole: &UnitVector3, points: &[UnitVector3]) -> CurveJson {
    CurveJson {
        tau,
        sign,
        pole: pole.to_array(),
        points: points.iter().map(UnitVector3::to_array).collect(),
    }
}

/// A JSON array of `{tau, pole, points}` objects.
pub fn write_contours<W: Write>(writer: W, contours: &[QuantileContour]) -> Result<()> {
    let items: Vec<_> = contours
        .iter()
        .map(|c| curve_json(Some(c.tau), None, &c.pole, &c.points))
        .collect();
    write_json(writer, &items)
}

/// A JSON array of `{sign, pole, points}` objects.
pub fn write_sign_curves<W: Write>(writer: W, curves: &[SignCurve]) -> Result<()> {
    let items: Vec<_> = curves
        .iter()
        .map(|c| curve_json(None, Some(c.sign.to_array()), &c.pole, &c.points))
        .collect();
    write_json(writer, &items)
}

fn write_json<W: Write, T: Serialize>(writer: W, value: &T) -> Result<()> {
    let mut w = BufWriter::new(writer);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_scale_curve<W: Write>(writer: W, curve: &[(f64, f64)]) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "alpha,volume")?;
    for (a, v) in curve {
        writeln!(w, "{},{}", fmt_f64(*a), fmt_f64(*v))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_depth<W: Write>(writer: W, report: &DepthReport) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "x,y,z,depth")?;
    for (p, d) in report.points.iter().zip(&report.depth) {
        writeln!(w, "{},{},{},{}", fmt_f64(p.x()), fmt_f64(p.y()), fmt_f64(p.z()), fmt_f64(*d))?;
    }
    w.flush()?;
    Ok(())
}
