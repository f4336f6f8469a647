//! Cartesian derivative tensor of the point-mass potential g(r) = -G/|r|,
//! through order 4, evaluated from the closed forms.

use crate::index::{MIDX, NIDX4};

#[inline]
fn expand(m: [u8; 3]) -> ([usize; 4], usize) {
    let mut t = [0usize; 4];
    let mut p = 0;
    for (axis, &cnt) in m.iter().enumerate() {
        for _ in 0..cnt {
            t[p] = axis;
            p += 1;
        }
    }
    (t, p)
}

#[inline]
fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// All D^m (-G/r) for |m| <= 4 at separation `r`.
pub fn tensor(r: [f64; 3], gconst: f64) -> [f64; NIDX4] {
    let r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    let rn = r2.sqrt();
    let inv = 1.0 / rn;
    let inv2 = inv * inv;
    let inv3 = inv * inv2;
    let inv5 = inv3 * inv2;
    let inv7 = inv5 * inv2;
    let inv9 = inv7 * inv2;

    let mut out = [0.0; NIDX4];
    for (idx, m) in MIDX.iter().enumerate() {
        let (t, len) = expand(*m);
        let v = match len {
            0 => -inv,
            1 => r[t[0]] * inv3,
            2 => {
                let (i, j) = (t[0], t[1]);
                -(3.0 * r[i] * r[j] - r2 * delta(i, j)) * inv5
            }
            3 => {
                let (i, j, k) = (t[0], t[1], t[2]);
                (15.0 * r[i] * r[j] * r[k]
                    - 3.0 * r2 * (r[i] * delta(j, k) + r[j] * delta(i, k) + r[k] * delta(i, j)))
                    * inv7
            }
            4 => {
                let (i, j, k, l) = (t[0], t[1], t[2], t[3]);
                -(105.0 * r[i] * r[j] * r[k] * r[l]
                    - 15.0
                        * r2
                        * (r[i] * r[j] * delta(k, l)
                            + r[i] * r[k] * delta(j, l)
                            + r[i] * r[l] * delta(j, k)
                            + r[j] * r[k] * delta(i, l)
                            + r[j] * r[l] * delta(i, k)
                            + r[k] * r[l] * delta(i, j))
                    + 3.0
                        * r2
                        * r2
                        * (delta(i, j) * delta(k, l)
                            + delta(i, k) * delta(j, l)
                            + delta(i, l) * delta(j, k)))
                    * inv9
            }
            _ => unreachable!(),
        };
        out[idx] = gconst * v;
    }
    out
}
