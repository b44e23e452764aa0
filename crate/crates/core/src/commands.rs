//! File-level commands behind the CLI. Each takes paths and a config and
//! writes its outputs atomically into an output directory.
//!
//! File naming for a recording `night.csv`:
//!
//! * `night.ftr` features from the device stage
//! * `night.out.csv` heart and breathing rates, `night.bbi.csv` intervals
//! * `night.ref_beats.csv`, `night.ref_resp.csv`, `night.truth.csv` from synth

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::codec::{decode_features, encode_features};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::eval::{evaluate_night, EvalReport};
use crate::io;
use crate::pipeline::{device_stage, server_stage, ServerOutput};
use crate::synth::{gen_night, NightSpec};

/// File name without directory and without any `.csv`/`.ftr` extension.
pub fn stem(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    for ext in [".out.csv", ".bbi.csv", ".csv", ".ftr"] {
        if let Some(s) = name.strip_suffix(ext) {
            return s.to_string();
        }
    }
    name
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

/// Raw recording CSV to encoded features.
pub fn device_bytes(input: &Path, cfg: &Config) -> Result<Vec<u8>> {
    let rec = io::read_recording(open(input)?, cfg.fs_hz)?;
    encode_features(&device_stage(&rec, cfg)?)
}

pub fn cmd_device(input: &Path, cfg: &Config, out_dir: &Path) -> Result<PathBuf> {
    let bytes = device_bytes(input, cfg)?;
    let out = out_dir.join(format!("{}.ftr", stem(input)));
    io::write_atomic(&out, &bytes)?;
    Ok(out)
}

/// Encoded features to server output.
pub fn server_from_bytes(bytes: &[u8], cfg: &Config) -> Result<ServerOutput> {
    server_stage(&decode_features(bytes)?, cfg)
}

fn write_server(out: &ServerOutput, name: &str, out_dir: &Path) -> Result<[PathBuf; 2]> {
    let est = out_dir.join(format!("{name}.out.csv"));
    let bbi = out_dir.join(format!("{name}.bbi.csv"));
    io::write_atomic(&est, io::write_estimates(out).as_bytes())?;
    io::write_atomic(&bbi, io::write_intervals(&out.corrected).as_bytes())?;
    Ok([est, bbi])
}

pub fn cmd_server(features: &Path, cfg: &Config, out_dir: &Path) -> Result<[PathBuf; 2]> {
    let out = server_from_bytes(&std::fs::read(features)?, cfg)?;
    write_server(&out, &stem(features), out_dir)
}

/// Device and server stages, keeping the feature file.
pub fn cmd_run(input: &Path, cfg: &Config, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let ftr = cmd_device(input, cfg, out_dir)?;
    let [est, bbi] = cmd_server(&ftr, cfg, out_dir)?;
    Ok(vec![ftr, est, bbi])
}

/// Evaluate `<stem>.bbi.csv` and `<stem>.out.csv` against
/// `<ref_dir>/<name>.ref_beats.csv` and `.ref_resp.csv`, where `ref_dir`
/// defaults to the stem's own directory. Writes `report.json` and
/// `report.txt` into `out_dir`.
pub fn cmd_eval(
    stems: &[PathBuf],
    ref_dir: Option<&Path>,
    cfg: &Config,
    out_dir: &Path,
) -> Result<EvalReport> {
    let metrics = stems
        .par_iter()
        .map(|s| {
            let name = stem(s);
            let dir = s.parent().unwrap_or(Path::new(""));
            let refs = ref_dir.unwrap_or(dir);
            let test = io::read_intervals(open(&dir.join(format!("{name}.bbi.csv")))?)?;
            let (_, br) = io::read_estimates(open(&dir.join(format!("{name}.out.csv")))?)?;
            let ref_beats = io::read_ref_beats(open(&refs.join(format!("{name}.ref_beats.csv")))?)?;
            let ref_resp = io::read_ref_resp(open(&refs.join(format!("{name}.ref_resp.csv")))?)?;
            evaluate_night(&name, &test, &br, &ref_beats, &ref_resp, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let report = EvalReport::new(metrics)?;
    io::write_atomic(&out_dir.join("report.json"), report.to_json().as_bytes())?;
    io::write_atomic(&out_dir.join("report.txt"), report.to_table().as_bytes())?;
    Ok(report)
}

/// Synthesize `<name>.csv` with its reference and ground-truth files.
pub fn cmd_synth(spec: &NightSpec, seed: u64, name: &str, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let night = gen_night(spec, seed)?;
    let files = [
        (format!("{name}.csv"), io::write_recording(&night.recording)),
        (
            format!("{name}.ref_beats.csv"),
            io::write_ref_beats(&night.truth.true_beats),
        ),
        (
            format!("{name}.ref_resp.csv"),
            io::write_ref_resp(&night.truth.true_br),
        ),
        (
            format!("{name}.truth.csv"),
            io::write_truth(&night.truth.true_bbi, &night.truth.true_br),
        ),
    ];
    files
        .into_iter()
        .map(|(file, text)| {
            let p = out_dir.join(file);
            io::write_atomic(&p, text.as_bytes())?;
            Ok(p)
        })
        .collect()
}

/// Apply `f` to every input in parallel. All inputs are attempted; the
/// first error in input order is returned.
pub fn for_each_input<T: Send>(
    inputs: &[PathBuf],
    f: impl Fn(&Path) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    inputs
        .par_iter()
        .map(|p| f(p))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}
