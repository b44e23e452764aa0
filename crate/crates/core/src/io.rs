//! CSV formats and atomic file output.
//!
//! | file | columns |
//! |------|---------|
//! | raw recording | `t_s, ppg_green, ppg_ir, acc_x_g, acc_y_g, acc_z_g` |
//! | reference beats | `t_s, ecg_beat` (rows with nonzero `ecg_beat` are beats) |
//! | reference respiration | `t_s, resp_rate_min` |
//! | estimates | `t_s, hr_bpm, br_min, quality` |
//! | intervals | `t_s, bbi_ms, quality` |
//! | ground truth | `t_s, true_bbi_ms, true_br_min` |

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::{Recording, ServerOutput};
use crate::series::{interpolate_at, BbiSeries, BeatSeries, Quality, TimedSeries};

pub const RAW_COLUMNS: [&str; 6] = [
    "t_s",
    "ppg_green",
    "ppg_ir",
    "acc_x_g",
    "acc_y_g",
    "acc_z_g",
];

/// Rows of the requested columns, in request order. Empty fields are `None`.
struct Table {
    rows: Vec<Vec<Option<f64>>>,
    lines: Vec<u64>,
}

fn read_table(input: impl Read, columns: &[&str]) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(input);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::Schema("empty file, header row required".into()));
    }
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == *c)
                .ok_or_else(|| Error::Schema(format!("missing column '{c}'")))
        })
        .collect::<Result<_>>()?;

    let mut table = Table {
        rows: Vec::new(),
        lines: Vec::new(),
    };
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = idx
            .iter()
            .zip(columns)
            .map(|(&i, name)| {
                let field = rec.get(i).unwrap_or("");
                if field.is_empty() {
                    return Ok(None);
                }
                match field.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(Some(v)),
                    _ => Err(Error::Parse {
                        line,
                        reason: format!("column '{name}': '{field}' is not a finite number"),
                    }),
                }
            })
            .collect::<Result<_>>()?;
        table.rows.push(row);
        table.lines.push(line);
    }
    Ok(table)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            line,
            reason: format!("{kind:?}"),
        },
    }
}

fn required(table: &Table, row: usize, col: usize, name: &str) -> Result<f64> {
    table.rows[row][col].ok_or_else(|| Error::Parse {
        line: table.lines[row],
        reason: format!("empty '{name}'"),
    })
}

/// Column of strictly increasing times; out-of-order rows are parse errors.
fn times(table: &Table) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = Vec::with_capacity(table.rows.len());
    for r in 0..table.rows.len() {
        let t = required(table, r, 0, "t_s")?;
        if out.last().is_some_and(|&p| t <= p) {
            return Err(Error::Parse {
                line: table.lines[r],
                reason: "t_s is not strictly increasing".into(),
            });
        }
        out.push(t);
    }
    Ok(out)
}

/// Raw recording sampled at `fs`. The time column must agree with `fs`
/// to within 1% over the whole recording.
pub fn read_recording(input: impl Read, fs: f64) -> Result<Recording> {
    let table = read_table(input, &RAW_COLUMNS)?;
    let t = times(&table)?;
    if t.len() < 2 {
        return Err(Error::insufficient("recording needs at least two samples"));
    }
    let span = t[t.len() - 1] - t[0];
    let expected = (t.len() - 1) as f64 / fs;
    if (span - expected).abs() > 0.01 * expected {
        return Err(Error::InvalidSeries(format!(
            "{} samples span {span} s, expected {expected} s at {fs} Hz",
            t.len()
        )));
    }
    let col = |c: usize| {
        (0..table.rows.len())
            .map(|r| required(&table, r, c, RAW_COLUMNS[c]))
            .collect::<Result<Vec<f64>>>()
    };
    Ok(Recording {
        t0: t[0],
        fs,
        ppg_green: col(1)?,
        ppg_ir: col(2)?,
        acc: [col(3)?, col(4)?, col(5)?],
    })
}

pub fn write_recording(rec: &Recording) -> String {
    let mut out = RAW_COLUMNS.join(",");
    out.push('\n');
    for k in 0..rec.len() {
        let t = rec.t0 + k as f64 / rec.fs;
        let _ = writeln!(
            out,
            "{t},{},{},{},{},{}",
            rec.ppg_green[k], rec.ppg_ir[k], rec.acc[0][k], rec.acc[1][k], rec.acc[2][k]
        );
    }
    out
}

pub fn read_ref_beats(input: impl Read) -> Result<BeatSeries> {
    let table = read_table(input, &["t_s", "ecg_beat"])?;
    let t = times(&table)?;
    let mut beats = Vec::new();
    for (r, &tr) in t.iter().enumerate() {
        if required(&table, r, 1, "ecg_beat")? != 0.0 {
            beats.push(tr);
        }
    }
    BeatSeries::new(beats)
}

pub fn write_ref_beats(beats: &[f64]) -> String {
    let mut out = String::from("t_s,ecg_beat\n");
    for t in beats {
        let _ = writeln!(out, "{t},1");
    }
    out
}

pub fn read_ref_resp(input: impl Read) -> Result<TimedSeries> {
    let table = read_table(input, &["t_s", "resp_rate_min"])?;
    let t = times(&table)?;
    let v = (0..t.len())
        .map(|r| required(&table, r, 1, "resp_rate_min"))
        .collect::<Result<_>>()?;
    TimedSeries::new(t, v)
}

pub fn write_ref_resp(resp: &TimedSeries) -> String {
    let mut out = String::from("t_s,resp_rate_min\n");
    for (t, v) in resp.points() {
        let _ = writeln!(out, "{t},{v}");
    }
    out
}

/// Heart-rate rows (with block quality) and breathing-rate rows (with the
/// tracker gain) merged in time order; the unused rate field is empty.
pub fn write_estimates(out: &ServerOutput) -> String {
    let hr = &out.heart_rate;
    let br = &out.breathing.rate;
    let mut s = String::from("t_s,hr_bpm,br_min,quality\n");
    let (mut i, mut j) = (0, 0);
    while i < hr.len() || j < br.len() {
        if j >= br.len() || (i < hr.len() && hr.times[i] <= br.times[j]) {
            let _ = writeln!(s, "{},{},,{}", hr.times[i], hr.values[i], out.hr_quality[i]);
            i += 1;
        } else {
            let _ = writeln!(
                s,
                "{},,{},{}",
                br.times[j], br.values[j], out.breathing.gain[j]
            );
            j += 1;
        }
    }
    s
}

/// `(heart rate, breathing rate)` series read back from an estimates file.
pub fn read_estimates(input: impl Read) -> Result<(TimedSeries, TimedSeries)> {
    let table = read_table(input, &["t_s", "hr_bpm", "br_min"])?;
    let (mut hr, mut br) = (TimedSeries::default(), TimedSeries::default());
    for (r, row) in table.rows.iter().enumerate() {
        let t = required(&table, r, 0, "t_s")?;
        let target = match (row[1], row[2]) {
            (Some(v), None) => Some((&mut hr, v)),
            (None, Some(v)) => Some((&mut br, v)),
            _ => None,
        };
        let Some((series, v)) = target else {
            return Err(Error::Parse {
                line: table.lines[r],
                reason: "exactly one of hr_bpm, br_min must be set".into(),
            });
        };
        if series.times.last().is_some_and(|&p| t <= p) {
            return Err(Error::Parse {
                line: table.lines[r],
                reason: "t_s is not increasing".into(),
            });
        }
        series.times.push(t);
        series.values.push(v);
    }
    Ok((hr, br))
}

pub fn write_intervals(bbi: &BbiSeries) -> String {
    let mut s = String::from("t_s,bbi_ms,quality\n");
    for k in 0..bbi.len() {
        let _ = writeln!(
            s,
            "{},{},{}",
            bbi.onset_times[k],
            bbi.intervals_ms[k],
            bbi.flags[k].as_str()
        );
    }
    s
}

pub fn read_intervals(input: impl Read) -> Result<BbiSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let find = |c: &str| {
        headers
            .iter()
            .position(|h| h == c)
            .ok_or_else(|| Error::Schema(format!("missing column '{c}'")))
    };
    let (ti, vi, qi) = (find("t_s")?, find("bbi_ms")?, find("quality")?);
    let (mut t, mut v, mut q) = (Vec::new(), Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| {
            rec.get(i)
                .and_then(|f| f.parse::<f64>().ok())
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    reason: format!("bad number in column {i}"),
                })
        };
        t.push(num(ti)?);
        v.push(num(vi)?);
        let flag = rec.get(qi).unwrap_or("");
        q.push(Quality::parse(flag).ok_or_else(|| Error::Parse {
            line,
            reason: format!("unknown quality '{flag}'"),
        })?);
    }
    BbiSeries::new(t, v, q)
}

/// Ground truth at each true beat onset.
pub fn write_truth(true_bbi: &TimedSeries, true_br: &TimedSeries) -> String {
    let mut s = String::from("t_s,true_bbi_ms,true_br_min\n");
    let br: Vec<(f64, f64)> = true_br.points().collect();
    let br_at = if br.len() >= 2 {
        interpolate_at(&br, true_bbi.times.iter().copied())
    } else {
        vec![br.first().map_or(f64::NAN, |p| p.1); true_bbi.len()]
    };
    for ((t, v), b) in true_bbi.points().zip(br_at) {
        let _ = writeln!(s, "{t},{v},{b}");
    }
    s
}

/// Write through a temporary file in the same directory, then rename, so
/// readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const RAW: &str = "t_s,ppg_green,ppg_ir,acc_x_g,acc_y_g,acc_z_g\n0,1,2,0,0,1\n0.04,1.5,2.5,0,0,1\n0.08,1,2,0.1,0,1\n";

    #[test]
    fn raw_round_trip() {
        let rec = read_recording(RAW.as_bytes(), 25.0).unwrap();
        assert_eq!(rec.ppg_green, vec![1.0, 1.5, 1.0]);
        assert_eq!(rec.acc[0], vec![0.0, 0.0, 0.1]);
        let back = read_recording(write_recording(&rec).as_bytes(), 25.0).unwrap();
        assert_eq!(back, rec);
    }

    #[test]
    fn raw_headers_trimmed_and_reordered() {
        let text =
            "acc_z_g , t_s, ppg_ir, ppg_green, acc_x_g, acc_y_g\n1,0,2,1,0,0\n1,0.04,2,1,0,0\n";
        let rec = read_recording(text.as_bytes(), 25.0).unwrap();
        assert_eq!(rec.acc[2], vec![1.0, 1.0]);
        assert_eq!(rec.ppg_ir, vec![2.0, 2.0]);
    }

    #[test]
    fn raw_errors() {
        assert!(matches!(
            read_recording("".as_bytes(), 25.0),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            read_recording("t_s,ppg_green\n0,1\n".as_bytes(), 25.0),
            Err(Error::Schema(_))
        ));
        let bad = RAW.replace("0.04,1.5", "0.04,x");
        assert!(matches!(
            read_recording(bad.as_bytes(), 25.0),
            Err(Error::Parse { line: 3, .. })
        ));
        let ragged = RAW.replace("0.08,1,2,0.1,0,1", "0.08,1,2");
        assert!(matches!(
            read_recording(ragged.as_bytes(), 25.0),
            Err(Error::Parse { line: 4, .. })
        ));
        let backwards = RAW.replace("0.08,", "0.02,");
        assert!(matches!(
            read_recording(backwards.as_bytes(), 25.0),
            Err(Error::Parse { line: 4, .. })
        ));
        assert!(matches!(
            read_recording(RAW.as_bytes(), 50.0),
            Err(Error::InvalidSeries(_))
        ));
    }

    #[test]
    fn reference_formats() {
        let beats = read_ref_beats(write_ref_beats(&[0.5, 1.4, 2.2]).as_bytes()).unwrap();
        assert_eq!(beats.times(), &[0.5, 1.4, 2.2]);
        let marked =
            read_ref_beats("t_s,ecg_beat\n0.0,0\n0.5,1\n0.9,0\n1.4,1\n".as_bytes()).unwrap();
        assert_eq!(marked.times(), &[0.5, 1.4]);
        let resp = TimedSeries::new(vec![0.0, 1.0], vec![15.0, 15.5]).unwrap();
        assert_eq!(
            read_ref_resp(write_ref_resp(&resp).as_bytes()).unwrap(),
            resp
        );
    }

    #[test]
    fn intervals_round_trip() {
        let bbi = BbiSeries::new(
            vec![0.0, 0.8123456789],
            vec![812.3456789, 790.0],
            vec![Quality::Valid, Quality::Interpolated],
        )
        .unwrap();
        assert_eq!(
            read_intervals(write_intervals(&bbi).as_bytes()).unwrap(),
            bbi
        );
    }

    #[test]
    fn estimates_reject_ambiguous_rows() {
        let text = "t_s,hr_bpm,br_min,quality\n1,60,,1\n2,,15,0.9\n3,61,14,1\n";
        assert!(matches!(
            read_estimates(text.as_bytes()),
            Err(Error::Parse { line: 4, .. })
        ));
        let (hr, br) = read_estimates(&text.as_bytes()[..text.len() - 10]).unwrap();
        assert_eq!((hr.values, br.values), (vec![60.0], vec![15.0]));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
