//! Cartesian multi-index tables for expansions through total order 4.
//!
//! Order-by-order, x-exponent-major ordering. Orders 0..3 (20 entries) hold
//! moments and Taylor coefficients; order 4 appears only inside kernel
//! derivative tensors.

/// Highest total order of any stored multi-index.
pub const MAX_ORDER: usize = 4;
/// First flat index of each order.
pub const ORDER_OFFSET: [usize; 6] = [0, 1, 4, 10, 20, 35];
/// Total entries through order 4.
pub const NIDX4: usize = 35;
/// Entries through order 3 (the expansion storage size).
pub const NCOEF: usize = 20;

/// Number of coefficients for expansion order `p`.
pub fn ncoef(p: usize) -> usize {
    ORDER_OFFSET[p + 1]
}

const fn build_midx() -> [[u8; 3]; NIDX4] {
    let mut out = [[0u8; 3]; NIDX4];
    let mut pos = 0;
    let mut ord = 0;
    while ord <= MAX_ORDER {
        let mut nx = ord as i32;
        while nx >= 0 {
            let mut ny = ord as i32 - nx;
            while ny >= 0 {
                let nz = ord as i32 - nx - ny;
                out[pos] = [nx as u8, ny as u8, nz as u8];
                pos += 1;
                ny -= 1;
            }
            nx -= 1;
        }
        ord += 1;
    }
    out
}

pub const MIDX: [[u8; 3]; NIDX4] = build_midx();

const fn build_lookup() -> [[[i8; 5]; 5]; 5] {
    let mut lut = [[[-1i8; 5]; 5]; 5];
    let mut i = 0;
    while i < NIDX4 {
        let m = MIDX[i];
        lut[m[0] as usize][m[1] as usize][m[2] as usize] = i as i8;
        i += 1;
    }
    lut
}

const LOOKUP: [[[i8; 5]; 5]; 5] = build_lookup();

/// Flat index of a multi-index with total order <= 4.
#[inline]
pub fn find(n: [u8; 3]) -> usize {
    let i = LOOKUP[n[0] as usize][n[1] as usize][n[2] as usize];
    debug_assert!(i >= 0, "multi-index out of table range");
    i as usize
}

/// Flat index of `MIDX[i] + e_axis`.
#[inline]
pub fn bump(i: usize, axis: usize) -> usize {
    let mut n = MIDX[i];
    n[axis] += 1;
    find(n)
}

#[inline]
pub fn order_of(i: usize) -> usize {
    let m = MIDX[i];
    (m[0] + m[1] + m[2]) as usize
}

const fn fact(k: u8) -> f64 {
    match k {
        0 | 1 => 1.0,
        2 => 2.0,
        3 => 6.0,
        4 => 24.0,
        _ => f64::NAN,
    }
}

const fn build_fact() -> [f64; NIDX4] {
    let mut out = [0.0; NIDX4];
    let mut i = 0;
    while i < NIDX4 {
        let m = MIDX[i];
        out[i] = fact(m[0]) * fact(m[1]) * fact(m[2]);
        i += 1;
    }
    out
}

/// nx! ny! nz! per entry.
pub const FACT: [f64; NIDX4] = build_fact();

/// Componentwise `a <= b`.
#[inline]
pub fn leq(a: [u8; 3], b: [u8; 3]) -> bool {
    a[0] <= b[0] && a[1] <= b[1] && a[2] <= b[2]
}

#[inline]
pub fn sub(a: [u8; 3], b: [u8; 3]) -> [u8; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

const fn binom(n: u8, k: u8) -> f64 {
    // n, k <= 3 in practice
    let mut num = 1u64;
    let mut den = 1u64;
    let mut i = 0;
    while i < k {
        num *= (n - i) as u64;
        den *= (i + 1) as u64;
        i += 1;
    }
    (num / den) as f64
}

/// Product of per-component binomials, used by the Taylor shift.
#[inline]
pub fn binom3(k: [u8; 3], j: [u8; 3]) -> f64 {
    binom(k[0], j[0]) * binom(k[1], j[1]) * binom(k[2], j[2])
}

/// Monomial powers `t^m` for every entry through order 3.
#[inline]
pub fn powers(t: [f64; 3]) -> [f64; NCOEF] {
    let mut out = [0.0; NCOEF];
    for (i, m) in MIDX.iter().take(NCOEF).enumerate() {
        out[i] = t[0].powi(m[0] as i32) * t[1].powi(m[1] as i32) * t[2].powi(m[2] as i32);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_shape() {
        assert_eq!(MIDX[0], [0, 0, 0]);
        assert_eq!(&MIDX[1..4], &[[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
        assert_eq!(ncoef(3), 20);
        assert_eq!(ncoef(2), 10);
        for (i, m) in MIDX.iter().enumerate() {
            assert_eq!(find(*m), i);
        }
        // Orders are contiguous.
        for ord in 0..=MAX_ORDER {
            for i in ORDER_OFFSET[ord]..ORDER_OFFSET[ord + 1] {
                assert_eq!(order_of(i), ord);
            }
        }
    }

    #[test]
    fn factorials_and_binomials() {
        assert_eq!(FACT[find([2, 1, 0])], 2.0);
        assert_eq!(FACT[find([3, 0, 0])], 6.0);
        assert_eq!(FACT[find([2, 2, 0])], 4.0);
        assert_eq!(binom3([3, 1, 0], [1, 1, 0]), 3.0);
        assert_eq!(binom3([2, 0, 0], [0, 0, 0]), 1.0);
    }
}
