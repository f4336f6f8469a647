//! Octree node addressing: (level, 3D index) plus the interleaved Morton code
//! used for space-filling-curve ordering.

use crate::error::GridError;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TreeKey {
    pub level: u8,
    pub idx: [u32; 3],
}

impl TreeKey {
    pub const ROOT: TreeKey = TreeKey {
        level: 0,
        idx: [0, 0, 0],
    };

    pub fn new(level: u8, idx: [u32; 3]) -> Result<Self, GridError> {
        let lim = 1u64 << level;
        if idx.iter().any(|&c| c as u64 >= lim) {
            return Err(GridError::IndexOutOfRange { level, idx });
        }
        Ok(TreeKey { level, idx })
    }

    /// Morton code: x occupies bit 0, y bit 1, z bit 2 of each triplet,
    /// least-significant triplet first.
    pub fn sfc(&self) -> u64 {
        let mut code = 0u64;
        for b in 0..self.level as u64 {
            code |= (((self.idx[0] as u64) >> b) & 1) << (3 * b);
            code |= (((self.idx[1] as u64) >> b) & 1) << (3 * b + 1);
            code |= (((self.idx[2] as u64) >> b) & 1) << (3 * b + 2);
        }
        code
    }

    pub fn from_sfc(level: u8, code: u64) -> Self {
        let mut idx = [0u32; 3];
        for b in 0..level as u64 {
            idx[0] |= (((code >> (3 * b)) & 1) as u32) << b;
            idx[1] |= (((code >> (3 * b + 1)) & 1) as u32) << b;
            idx[2] |= (((code >> (3 * b + 2)) & 1) as u32) << b;
        }
        TreeKey { level, idx }
    }

    pub fn parent(&self) -> Option<TreeKey> {
        if self.level == 0 {
            return None;
        }
        Some(TreeKey {
            level: self.level - 1,
            idx: [self.idx[0] >> 1, self.idx[1] >> 1, self.idx[2] >> 1],
        })
    }

    /// Children in Morton order: octant bit 0 = x, bit 1 = y, bit 2 = z.
    pub fn child(&self, octant: usize) -> TreeKey {
        debug_assert!(octant < 8);
        TreeKey {
            level: self.level + 1,
            idx: [
                (self.idx[0] << 1) | (octant as u32 & 1),
                (self.idx[1] << 1) | ((octant as u32 >> 1) & 1),
                (self.idx[2] << 1) | ((octant as u32 >> 2) & 1),
            ],
        }
    }

    pub fn children(&self) -> [TreeKey; 8] {
        std::array::from_fn(|o| self.child(o))
    }

    /// Which octant of the parent this key occupies.
    pub fn octant(&self) -> usize {
        ((self.idx[0] & 1) | ((self.idx[1] & 1) << 1) | ((self.idx[2] & 1) << 2)) as usize
    }

    /// Same-level neighbor in direction `dir`; None outside the domain.
    pub fn neighbor(&self, dir: [i8; 3]) -> Option<TreeKey> {
        let lim = 1i64 << self.level;
        let mut idx = [0u32; 3];
        for c in 0..3 {
            let v = self.idx[c] as i64 + dir[c] as i64;
            if v < 0 || v >= lim {
                return None;
            }
            idx[c] = v as u32;
        }
        Some(TreeKey {
            level: self.level,
            idx,
        })
    }

    /// All 26 directions, in a fixed canonical order.
    pub fn directions() -> impl Iterator<Item = [i8; 3]> {
        (0..27).filter(|&i| i != 13).map(|i| {
            let x = (i % 3) as i8 - 1;
            let y = ((i / 3) % 3) as i8 - 1;
            let z = (i / 9) as i8 - 1;
            [x, y, z]
        })
    }

    /// Sort order used for partitioning: level-major, then Morton code.
    pub fn sort_key(&self) -> (u8, u64) {
        (self.level, self.sfc())
    }

    /// Compact `u64` identifier (level in the top bits, Morton below).
    pub fn id(&self) -> u64 {
        ((self.level as u64) << 57) | self.sfc()
    }

    pub fn from_id(id: u64) -> TreeKey {
        let level = (id >> 57) as u8;
        TreeKey::from_sfc(level, id & ((1u64 << 57) - 1))
    }
}

impl PartialOrd for TreeKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TreeKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl fmt::Display for TreeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "L{}({},{},{})",
            self.level, self.idx[0], self.idx[1], self.idx[2]
        )
    }
}

/// Morton encode helper mirroring the operation contract.
pub fn morton_key(level: u8, idx: [u32; 3]) -> Result<u64, GridError> {
    Ok(TreeKey::new(level, idx)?.sfc())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn morton_examples() {
        assert_eq!(morton_key(1, [0, 0, 0]).unwrap(), 0);
        assert_eq!(morton_key(1, [1, 0, 1]).unwrap(), 5);
        assert_eq!(morton_key(2, [3, 3, 3]).unwrap(), 63);
    }

    #[test]
    fn morton_rejects_out_of_range() {
        assert!(morton_key(1, [2, 0, 0]).is_err());
    }

    #[test]
    fn round_trip_exhaustive_small_levels() {
        for level in 0..=4u8 {
            let n = 1u32 << level;
            for x in 0..n {
                for y in 0..n {
                    for z in 0..n {
                        let k = TreeKey::new(level, [x, y, z]).unwrap();
                        assert_eq!(TreeKey::from_sfc(level, k.sfc()), k);
                    }
                }
            }
        }
    }

    #[test]
    fn parent_is_shifted_index() {
        let k = TreeKey::new(3, [5, 2, 7]).unwrap();
        assert_eq!(k.parent().unwrap(), TreeKey::new(2, [2, 1, 3]).unwrap());
        let o = k.octant();
        assert_eq!(k.parent().unwrap().child(o), k);
    }

    proptest! {
        #[test]
        fn round_trip_level8(x in 0u32..256, y in 0u32..256, z in 0u32..256) {
            let k = TreeKey::new(8, [x, y, z]).unwrap();
            prop_assert_eq!(TreeKey::from_sfc(8, k.sfc()), k);
        }
    }
}
