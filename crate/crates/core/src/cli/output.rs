//! CSV and JSON writers. Every file is written to a temporary name in the
//! target directory and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

use crate::observables::{HusimiGrid, QuadratureStats, Sample};

pub const TIMESERIES_HEADER: &str = "t,meanX,meanP,varX,varP,covXP,sigma22,photon_number";

/// 12 significant digits.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.11e}")
    }
}

pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

pub fn timeseries_csv(samples: &[Sample]) -> String {
    let mut s = String::with_capacity(samples.len() * 120 + 64);
    s.push_str(TIMESERIES_HEADER);
    s.push('\n');
    for x in samples {
        let q = &x.stats;
        let row = [q.t, q.mean_x, q.mean_p, q.var_x, q.var_p, q.cov_xp, x.sigma22, x.photon_number];
        let cells: Vec<String> = row.iter().map(|&v| fmt_num(v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn parse_cell(cell: &str, line: usize) -> Result<f64, String> {
    cell.trim()
        .parse::<f64>()
        .map_err(|_| format!("line {line}: cannot parse `{cell}` as a number"))
}

/// Reads a file in the [`TIMESERIES_HEADER`] format.
pub fn read_timeseries(text: &str) -> Result<Vec<Sample>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty file")?;
    if header.trim() != TIMESERIES_HEADER {
        return Err(format!("line 1: expected header `{TIMESERIES_HEADER}`"));
    }
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 8 {
            return Err(format!("line {}: expected 8 columns, got {}", k + 2, cells.len()));
        }
        let v: Vec<f64> = cells.iter().map(|c| parse_cell(c, k + 2)).collect::<Result<_, _>>()?;
        out.push(Sample {
            stats: QuadratureStats {
                t: v[0],
                mean_x: v[1],
                mean_p: v[2],
                var_x: v[3],
                var_p: v[4],
                cov_xp: v[5],
                uncertainty_product: v[3] * v[4] - v[5] * v[5],
                tilt_fit: 0.5 * (2.0 * v[5]).atan2(v[3] - v[4]),
            },
            sigma22: v[6],
            photon_number: v[7],
        });
    }
    Ok(out)
}

/// First row: `im\re` then the Re(beta) axis; each further row: Im(beta)
/// followed by the Q values.
pub fn husimi_csv(grid: &HusimiGrid) -> String {
    let mut s = String::from("im\\re");
    for &x in &grid.re {
        let _ = write!(s, ",{}", fmt_num(x));
    }
    s.push('\n');
    for (j, row) in grid.values.iter().enumerate() {
        s.push_str(&fmt_num(grid.im[j]));
        for &q in row {
            let _ = write!(s, ",{}", fmt_num(q));
        }
        s.push('\n');
    }
    s
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// File-name friendly rendering of a time, e.g. `12.5` -> `12p5`.
pub fn time_tag(t: f64) -> String {
    let s = format!("{t:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.replace('.', "p").replace('-', "m")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::FieldMoments;
    use num_complex::Complex64 as C64;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.25), "2.50000000000e-1");
        assert_eq!(fmt_num(f64::NAN), "nan");
        assert_eq!(fmt_num(-3.0), "-3.00000000000e0");
    }

    #[test]
    fn timeseries_round_trip() {
        let m = FieldMoments::factorized(C64::new(1.5, -0.25));
        let s = Sample {
            stats: QuadratureStats::from_moments(0.5, &m),
            sigma22: f64::NAN,
            photon_number: m.ada,
        };
        let text = timeseries_csv(&[s, s]);
        assert!(text.starts_with(TIMESERIES_HEADER));
        assert!(!text.contains('\r'));
        let back = read_timeseries(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert!((back[0].stats.mean_x - 1.5).abs() < 1e-11);
        assert!(back[0].sigma22.is_nan());
        assert!(read_timeseries("t,x\n").is_err());
        let bad = text.replace("5.00000000000e-1", "oops");
        assert!(read_timeseries(&bad).unwrap_err().contains("line 2"));
    }

    #[test]
    fn tags() {
        assert_eq!(time_tag(12.5), "12p5");
        assert_eq!(time_tag(20.0), "20");
        assert_eq!(time_tag(0.05), "0p05");
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("x.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
