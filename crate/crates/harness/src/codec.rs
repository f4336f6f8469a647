//! Byte encodings for inter-locality messages (all little-endian f64).

use octobox_fmm::{CellMoments, NodeMultipoles, Taylor};
use octobox_fmm::index::NCOEF;

pub fn push_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub fn read_f64(buf: &[u8], pos: &mut usize) -> f64 {
    let v = f64::from_le_bytes(buf[*pos..*pos + 8].try_into().unwrap());
    *pos += 8;
    v
}

pub fn encode_f64s(values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 8);
    for v in values {
        push_f64(&mut out, *v);
    }
    out
}

pub fn decode_f64s(buf: &[u8]) -> Vec<f64> {
    buf.chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect()
}

pub fn encode_multipoles(set: &NodeMultipoles) -> Vec<u8> {
    let mut out = Vec::with_capacity(1 + set.cells.len() * (3 + NCOEF) * 8);
    out.push(u8::from(set.refined));
    for c in &set.cells {
        for v in c.com {
            push_f64(&mut out, v);
        }
        for v in c.mom {
            push_f64(&mut out, v);
        }
    }
    out
}

pub fn decode_multipoles(buf: &[u8]) -> NodeMultipoles {
    let refined = buf[0] != 0;
    let mut pos = 1;
    let mut cells = Vec::new();
    while pos < buf.len() {
        let com = [
            read_f64(buf, &mut pos),
            read_f64(buf, &mut pos),
            read_f64(buf, &mut pos),
        ];
        let mut mom = [0.0; NCOEF];
        for m in mom.iter_mut() {
            *m = read_f64(buf, &mut pos);
        }
        cells.push(CellMoments { com, mom });
    }
    NodeMultipoles { refined, cells }
}

/// Downward expansion message: parent expansion centers plus coefficients.
pub fn encode_taylor_down(moms: &NodeMultipoles, taylor: &[Taylor]) -> Vec<u8> {
    let mut out = Vec::with_capacity(taylor.len() * (3 + NCOEF) * 8);
    for (c, t) in moms.cells.iter().zip(taylor) {
        for v in c.com {
            push_f64(&mut out, v);
        }
        for v in t {
            push_f64(&mut out, *v);
        }
    }
    out
}

pub fn decode_taylor_down(buf: &[u8]) -> (Vec<[f64; 3]>, Vec<Taylor>) {
    let mut pos = 0;
    let mut coms = Vec::new();
    let mut taylors = Vec::new();
    while pos < buf.len() {
        let com = [
            read_f64(buf, &mut pos),
            read_f64(buf, &mut pos),
            read_f64(buf, &mut pos),
        ];
        let mut t = [0.0; NCOEF];
        for v in t.iter_mut() {
            *v = read_f64(buf, &mut pos);
        }
        coms.push(com);
        taylors.push(t);
    }
    (coms, taylors)
}
