//! Binary trace of a replication.
//!
//! Layout, little-endian: 8-byte magic `STKYTRC\0`, `u32` version, `u32`
//! replication, `f64` dt, `f64` horizon, `f64` burn-in, `u64` seed, `u64`
//! stride, then records of five `f64`: `t, z1, z2, L1, L2`. The first record
//! is the state at the end of burn-in; then one record every `stride` steps.

use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};

use super::engine::{PathObserver, SimConfig, StepRecord};

pub const TRACE_MAGIC: [u8; 8] = *b"STKYTRC\0";
pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub version: u32,
    pub replication: u32,
    pub dt: f64,
    pub horizon: f64,
    pub burn_in: f64,
    pub seed: u64,
    pub stride: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub z: [f64; 2],
    pub l: [f64; 2],
}

pub struct TraceWriter<W: Write> {
    out: W,
    stride: u64,
    l: [f64; 2],
    started: bool,
    error: Option<io::Error>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W, cfg: &SimConfig, replication: u32, stride: u64) -> io::Result<Self> {
        out.write_all(&TRACE_MAGIC)?;
        out.write_all(&TRACE_VERSION.to_le_bytes())?;
        out.write_all(&replication.to_le_bytes())?;
        for v in [cfg.dt, cfg.horizon, cfg.burn_in] {
            out.write_all(&v.to_le_bytes())?;
        }
        out.write_all(&cfg.seed.to_le_bytes())?;
        out.write_all(&stride.max(1).to_le_bytes())?;
        Ok(Self { out, stride: stride.max(1), l: [0.0, 0.0], started: false, error: None })
    }

    fn write_record(&mut self, t: f64, z: [f64; 2]) {
        if self.error.is_some() {
            return;
        }
        let mut buf = [0u8; 40];
        for (k, v) in [t, z[0], z[1], self.l[0], self.l[1]].iter().enumerate() {
            buf[8 * k..8 * k + 8].copy_from_slice(&v.to_le_bytes());
        }
        if let Err(e) = self.out.write_all(&buf) {
            self.error = Some(e);
        }
    }

    /// Flushes and returns the sink, or the first write error.
    pub fn finish(mut self) -> io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> PathObserver for TraceWriter<W> {
    fn observe(&mut self, s: &StepRecord) {
        if !self.started {
            self.started = true;
            self.write_record(s.t, s.z_prev);
        }
        self.l[0] += s.dl[0];
        self.l[1] += s.dl[1];
        if (s.index + 1) % self.stride == 0 {
            self.write_record(s.t + s.dt, s.z);
        }
    }
}

fn read_array<const N: usize>(r: &mut impl Read) -> io::Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

pub fn read_trace(mut r: impl Read) -> io::Result<(TraceHeader, Vec<TraceRecord>)> {
    if read_array::<8>(&mut r)? != TRACE_MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "not a trace file"));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != TRACE_VERSION {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("unsupported trace version {version}"),
        ));
    }
    let replication = u32::from_le_bytes(read_array(&mut r)?);
    let dt = f64::from_le_bytes(read_array(&mut r)?);
    let horizon = f64::from_le_bytes(read_array(&mut r)?);
    let burn_in = f64::from_le_bytes(read_array(&mut r)?);
    let seed = u64::from_le_bytes(read_array(&mut r)?);
    let stride = u64::from_le_bytes(read_array(&mut r)?);
    let header = TraceHeader { version, replication, dt, horizon, burn_in, seed, stride };
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() % 40 != 0 {
        return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "truncated trace record"));
    }
    let f = |c: &[u8], k: usize| f64::from_le_bytes(c[8 * k..8 * k + 8].try_into().unwrap());
    let records = body
        .chunks_exact(40)
        .map(|c| TraceRecord { t: f(c, 0), z: [f(c, 1), f(c, 2)], l: [f(c, 3), f(c, 4)] })
        .collect();
    Ok((header, records))
}
