//! Fixed-size cell block with ghost layers, stored field-by-field.

use crate::state::{ConservedState, Field, NFIELDS};

/// An `n^3` block of cells padded by `g` ghost cells on every side.
/// Each state component lives in its own contiguous array (x fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct SubGrid {
    pub n: usize,
    pub g: usize,
    pub h: f64,
    /// Position of the center of interior cell (0,0,0).
    pub origin: [f64; 3],
    pub level: u8,
    fields: Vec<Vec<f64>>,
}

impl SubGrid {
    pub fn new(n: usize, g: usize, h: f64, origin: [f64; 3], level: u8) -> Self {
        let ext = n + 2 * g;
        SubGrid {
            n,
            g,
            h,
            origin,
            level,
            fields: (0..NFIELDS).map(|_| vec![0.0; ext * ext * ext]).collect(),
        }
    }

    #[inline]
    pub fn ext(&self) -> usize {
        self.n + 2 * self.g
    }

    /// Linear index for cell coordinates that may reach into ghosts
    /// (each coordinate in `[-g, n+g)`).
    #[inline]
    pub fn lin(&self, i: isize, j: isize, k: isize) -> usize {
        let g = self.g as isize;
        let ext = self.ext() as isize;
        debug_assert!(i >= -g && i < self.n as isize + g);
        debug_assert!(j >= -g && j < self.n as isize + g);
        debug_assert!(k >= -g && k < self.n as isize + g);
        (((k + g) * ext + (j + g)) * ext + (i + g)) as usize
    }

    #[inline]
    pub fn field(&self, f: Field) -> &[f64] {
        &self.fields[f as usize]
    }

    #[inline]
    pub fn field_mut(&mut self, f: Field) -> &mut [f64] {
        &mut self.fields[f as usize]
    }

    #[inline]
    pub fn get(&self, f: Field, i: isize, j: isize, k: isize) -> f64 {
        self.fields[f as usize][self.lin(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, f: Field, i: isize, j: isize, k: isize, v: f64) {
        let l = self.lin(i, j, k);
        self.fields[f as usize][l] = v;
    }

    pub fn cell_state(&self, i: isize, j: isize, k: isize) -> ConservedState {
        let l = self.lin(i, j, k);
        let mut a = [0.0; NFIELDS];
        for (fi, arr) in self.fields.iter().enumerate() {
            a[fi] = arr[l];
        }
        ConservedState::from_array(&a)
    }

    pub fn set_cell_state(&mut self, i: isize, j: isize, k: isize, s: &ConservedState) {
        let l = self.lin(i, j, k);
        let a = s.to_array();
        for (fi, arr) in self.fields.iter_mut().enumerate() {
            arr[l] = a[fi];
        }
    }

    /// Center position of a cell (ghost coordinates allowed).
    #[inline]
    pub fn cell_center(&self, i: isize, j: isize, k: isize) -> [f64; 3] {
        [
            self.origin[0] + self.h * i as f64,
            self.origin[1] + self.h * j as f64,
            self.origin[2] + self.h * k as f64,
        ]
    }

    pub fn cell_volume(&self) -> f64 {
        self.h * self.h * self.h
    }

    /// Iterate interior cell coordinates in canonical order (x fastest).
    pub fn interior(&self) -> impl Iterator<Item = (isize, isize, isize)> {
        let n = self.n as isize;
        (0..n).flat_map(move |k| (0..n).flat_map(move |j| (0..n).map(move |i| (i, j, k))))
    }

    /// Per-component sum over the interior times the cell volume.
    pub fn totals(&self) -> [f64; NFIELDS] {
        let vol = self.cell_volume();
        let mut out = [0.0; NFIELDS];
        for (fi, arr) in self.fields.iter().enumerate() {
            let mut s = 0.0;
            for (i, j, k) in self.interior() {
                s += arr[self.lin(i, j, k)];
            }
            out[fi] = s * vol;
        }
        out
    }

    /// Raw field access by component number, checkpoint order.
    pub fn raw_fields(&self) -> &[Vec<f64>] {
        &self.fields
    }

    pub fn raw_fields_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.fields
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_covers_ghosts() {
        let sg = SubGrid::new(8, 2, 0.5, [0.0; 3], 0);
        assert_eq!(sg.ext(), 12);
        assert_eq!(sg.lin(-2, -2, -2), 0);
        assert_eq!(sg.lin(9, 9, 9), 12 * 12 * 12 - 1);
    }

    #[test]
    fn cell_centers_follow_origin() {
        let sg = SubGrid::new(8, 2, 0.25, [1.0, 2.0, 3.0], 0);
        assert_eq!(sg.cell_center(0, 0, 0), [1.0, 2.0, 3.0]);
        assert_eq!(sg.cell_center(4, 0, -1), [2.0, 2.0, 2.75]);
    }

    #[test]
    fn totals_scale_with_volume() {
        let mut sg = SubGrid::new(8, 2, 2.0, [0.0; 3], 0);
        for (i, j, k) in sg.interior().collect::<Vec<_>>() {
            sg.set(Field::Rho, i, j, k, 1.0);
        }
        let t = sg.totals();
        assert!((t[Field::Rho as usize] - 512.0 * 8.0).abs() < 1e-9);
    }
}
