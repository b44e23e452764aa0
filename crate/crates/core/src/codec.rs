//! Binary feature stream passed from the wearable stage to the server stage.
//!
//! Layout, all little-endian:
//!
//! ```text
//! header:  magic "PPGF" | version u16 | motion window s f32 | record count u32
//! record:  epoch start s f64
//!          | interval count u16 | count x (onset offset ms u16, interval ms u16)
//!          | window count u16   | count x motion power g^2 f32
//! ```

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"PPGF";
pub const VERSION: u16 = 1;

/// One epoch of wearable-side features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub epoch_start: f64,
    /// `(onset offset from epoch_start in ms, interval in ms)`.
    pub bbis: Vec<(u16, u16)>,
    /// Motion power per window, consecutive from `epoch_start`.
    pub motion_power: Vec<f32>,
}

/// A full night of records plus the motion window length they were built with.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStream {
    pub motion_window_s: f32,
    pub records: Vec<FeatureRecord>,
}

pub fn encode_features(stream: &FeatureStream) -> Result<Vec<u8>> {
    if !(stream.motion_window_s.is_finite() && stream.motion_window_s > 0.0) {
        return Err(Error::InvalidInput("motion window must be positive".into()));
    }
    let count = u32::try_from(stream.records.len())
        .map_err(|_| Error::InvalidInput("too many records".into()))?;
    let mut out = Vec::with_capacity(14 + stream.records.len() * 64);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&stream.motion_window_s.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());

    let mut prev_start = f64::NEG_INFINITY;
    for (i, rec) in stream.records.iter().enumerate() {
        if !rec.epoch_start.is_finite() || rec.epoch_start < prev_start {
            return Err(Error::InvalidInput(format!(
                "record {i} is not epoch-sorted"
            )));
        }
        prev_start = rec.epoch_start;
        if rec.motion_power.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "record {i} has non-finite motion power"
            )));
        }
        let n_bbi = u16::try_from(rec.bbis.len())
            .map_err(|_| Error::InvalidInput(format!("record {i} has too many intervals")))?;
        let n_motion = u16::try_from(rec.motion_power.len())
            .map_err(|_| Error::InvalidInput(format!("record {i} has too many motion windows")))?;

        out.extend_from_slice(&rec.epoch_start.to_le_bytes());
        out.extend_from_slice(&n_bbi.to_le_bytes());
        for &(offset, interval) in &rec.bbis {
            out.extend_from_slice(&offset.to_le_bytes());
            out.extend_from_slice(&interval.to_le_bytes());
        }
        out.extend_from_slice(&n_motion.to_le_bytes());
        for p in &rec.motion_power {
            out.extend_from_slice(&p.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let end = self.pos + N;
        let bytes = self.buf.get(self.pos..end).ok_or_else(|| Error::Decode {
            offset: self.pos,
            reason: format!("truncated {what}"),
        })?;
        self.pos = end;
        Ok(bytes.try_into().expect("slice length matches"))
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        self.take::<2>(what).map(u16::from_le_bytes)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        self.take::<4>(what).map(u32::from_le_bytes)
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        self.take::<4>(what).map(f32::from_le_bytes)
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        self.take::<8>(what).map(f64::from_le_bytes)
    }

    fn corrupt(&self, at: usize, reason: impl Into<String>) -> Error {
        Error::Decode {
            offset: at,
            reason: reason.into(),
        }
    }
}

pub fn decode_features(bytes: &[u8]) -> Result<FeatureStream> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take::<4>("magic")? != MAGIC {
        return Err(r.corrupt(0, "bad magic"));
    }
    let version = r.u16("version")?;
    if version != VERSION {
        return Err(r.corrupt(4, format!("unsupported version {version}")));
    }
    let at = r.pos;
    let motion_window_s = r.f32("motion window")?;
    if !(motion_window_s.is_finite() && motion_window_s > 0.0) {
        return Err(r.corrupt(at, "motion window must be positive"));
    }
    let count = r.u32("record count")? as usize;

    // Every record is at least 12 bytes; refuse counts the buffer cannot hold.
    if count > bytes.len() / 12 {
        return Err(r.corrupt(10, format!("record count {count} exceeds stream size")));
    }
    let mut records = Vec::with_capacity(count);
    let mut prev_start = f64::NEG_INFINITY;
    for _ in 0..count {
        let at = r.pos;
        let epoch_start = r.f64("epoch start")?;
        if !epoch_start.is_finite() || epoch_start < prev_start {
            return Err(r.corrupt(at, "epoch start not finite or out of order"));
        }
        prev_start = epoch_start;
        let n_bbi = r.u16("interval count")?;
        let bbis = (0..n_bbi)
            .map(|_| Ok((r.u16("interval onset")?, r.u16("interval value")?)))
            .collect::<Result<Vec<_>>>()?;
        let n_motion = r.u16("window count")?;
        let mut motion_power = Vec::with_capacity(n_motion as usize);
        for _ in 0..n_motion {
            let at = r.pos;
            let p = r.f32("motion power")?;
            if !p.is_finite() {
                return Err(r.corrupt(at, "non-finite motion power"));
            }
            motion_power.push(p);
        }
        records.push(FeatureRecord {
            epoch_start,
            bbis,
            motion_power,
        });
    }
    if r.pos != bytes.len() {
        return Err(r.corrupt(r.pos, format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(FeatureStream {
        motion_window_s,
        records,
    })
}
