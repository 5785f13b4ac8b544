//! Torus geometry on the cube `V_n = {-n, ..., n}^d`.
//!
//! Sites are stored in a flat buffer. The flat offset of a site is the
//! positional encoding of `(coord + n)` in base `2n + 1`, first coordinate
//! most significant, so [`cube_indices`] enumerates sites in ascending flat
//! order (lexicographic, coordinate values ascending from `-n`).

mod dft;

pub use dft::{fft_nd, Dft};

use crate::{Error, Result};
use std::fmt;

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 3;

/// Cube `V_n` in `d` dimensions with toroidal wrap-around.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LatticeShape {
    dim: usize,
    radius: usize,
}

impl LatticeShape {
    pub fn new(dim: usize, radius: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidShape(format!(
                "dimension must be in 1..={MAX_DIM}, got {dim}"
            )));
        }
        Ok(Self { dim, radius })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Side length `2n + 1`.
    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    /// `|V_n| = (2n + 1)^d`.
    pub fn site_count(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    /// Same dimension, different radius.
    pub fn with_radius(&self, radius: usize) -> Self {
        Self { dim: self.dim, radius }
    }

    /// Flat offset of an index already reduced into the cube.
    pub fn flat(&self, idx: &TorusIndex) -> usize {
        debug_assert_eq!(idx.dim(), self.dim);
        let n = self.radius as i64;
        let side = self.side();
        idx.coords()
            .iter()
            .fold(0usize, |acc, &c| acc * side + (c + n) as usize)
    }

    /// Inverse of [`LatticeShape::flat`].
    pub fn index(&self, mut flat: usize) -> TorusIndex {
        let side = self.side();
        let n = self.radius as i64;
        let mut coords = [0i64; MAX_DIM];
        for p in (0..self.dim).rev() {
            coords[p] = (flat % side) as i64 - n;
            flat /= side;
        }
        TorusIndex { coords, dim: self.dim as u8 }
    }

    /// Reduce an arbitrary integer tuple modulo `V_n`.
    pub fn reduce(&self, coords: &[i64]) -> TorusIndex {
        mod_torus(coords, self)
    }

    /// Flat offset of `(site + offset) mod V_n`.
    pub fn add_flat(&self, site: usize, offset: &TorusIndex) -> usize {
        let s = self.index(site);
        let mut sum = [0i64; MAX_DIM];
        for p in 0..self.dim {
            sum[p] = s.coords[p] + offset.coords[p];
        }
        self.flat(&self.reduce(&sum[..self.dim]))
    }

    /// Table `t[m] = (m + offset) mod V_n` over all flat sites `m`.
    pub fn shift_table(&self, offset: &TorusIndex) -> Vec<usize> {
        (0..self.site_count()).map(|m| self.add_flat(m, offset)).collect()
    }

    /// Row-major `[site][k]` table of `(site + offsets[k]) mod V_n`.
    pub fn neighbor_table(&self, offsets: &[TorusIndex]) -> Vec<usize> {
        let mut table = Vec::with_capacity(self.site_count() * offsets.len());
        for m in 0..self.site_count() {
            for k in offsets {
                table.push(self.add_flat(m, k));
            }
        }
        table
    }
}

impl fmt::Display for LatticeShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "V_{} (d={}, {} sites)", self.radius, self.dim, self.site_count())
    }
}

/// A lattice index `j = (j(1), ..., j(d))`.
///
/// Used both for sites of a torus (coordinates in `[-n, n]`) and for raw
/// interaction offsets.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TorusIndex {
    coords: [i64; MAX_DIM],
    dim: u8,
}

impl TorusIndex {
    pub fn new(coords: &[i64]) -> Self {
        assert!(
            !coords.is_empty() && coords.len() <= MAX_DIM,
            "index dimension must be in 1..={MAX_DIM}"
        );
        let mut c = [0i64; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Self { coords: c, dim: coords.len() as u8 }
    }

    pub fn origin(dim: usize) -> Self {
        Self::new(&vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords[..self.dim()]
    }

    pub fn neg(&self) -> Self {
        let mut out = *self;
        for c in &mut out.coords {
            *c = -*c;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for p in 0..self.dim() {
            out.coords[p] += other.coords[p];
        }
        out
    }

    /// `max_p |j(p)|`.
    pub fn sup_norm(&self) -> i64 {
        self.coords().iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    /// `sum_p |j(p)|`.
    pub fn l1_norm(&self) -> i64 {
        self.coords().iter().map(|c| c.abs()).sum()
    }

    pub fn euclid_norm(&self) -> f64 {
        self.coords()
            .iter()
            .map(|&c| (c * c) as f64)
            .sum::<f64>()
            .sqrt()
    }
}

impl fmt::Debug for TorusIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords())
    }
}

impl fmt::Display for TorusIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords().iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// All `(2n+1)^d` indices of `V_n`, in flat-offset order.
pub fn cube_indices(shape: &LatticeShape) -> Vec<TorusIndex> {
    (0..shape.site_count()).map(|m| shape.index(m)).collect()
}

/// Coordinate-wise residue of `j` into `[-n, n]`.
pub fn mod_torus(j: &[i64], shape: &LatticeShape) -> TorusIndex {
    assert_eq!(j.len(), shape.dim(), "index dimension mismatch");
    let n = shape.radius() as i64;
    let side = shape.side() as i64;
    let mut coords = [0i64; MAX_DIM];
    for (p, &c) in j.iter().enumerate() {
        coords[p] = (c + n).rem_euclid(side) - n;
    }
    TorusIndex { coords, dim: j.len() as u8 }
}

/// `(S^j X)^m = X^{(m + j) mod V_n}` for a field stored in flat order.
pub fn shift_field<T: Copy>(field: &[T], shape: &LatticeShape, j: &TorusIndex) -> Vec<T> {
    assert_eq!(field.len(), shape.site_count(), "field does not cover V_n");
    shape
        .shift_table(j)
        .into_iter()
        .map(|src| field[src])
        .collect()
}

/// Replace each value by the mean over its sign-flip orbit
/// `{(+-j(1), ..., +-j(d))}`, summed in sorted order so that every member of
/// an orbit receives the bitwise identical value.
pub fn symmetrize_sign_flips(shape: &LatticeShape, values: &mut [f64]) {
    assert_eq!(values.len(), shape.site_count(), "field does not cover V_n");
    let d = shape.dim();
    let orig = values.to_vec();
    let mut orbit = Vec::with_capacity(1 << d);
    for (m, out) in values.iter_mut().enumerate() {
        let j = shape.index(m);
        orbit.clear();
        for flip in 0..(1u32 << d) {
            let mut c = [0i64; MAX_DIM];
            for p in 0..d {
                c[p] = if flip & (1 << p) != 0 { -j.coords[p] } else { j.coords[p] };
            }
            orbit.push(orig[shape.flat(&TorusIndex { coords: c, dim: d as u8 })]);
        }
        orbit.sort_by(f64::total_cmp);
        *out = orbit.iter().sum::<f64>() / orbit.len() as f64;
    }
}

/// Offsets `k` of `V_r` (same dimension as `shape`), in flat order.
pub fn offsets_within(dim: usize, radius: usize) -> Result<Vec<TorusIndex>> {
    Ok(cube_indices(&LatticeShape::new(dim, radius)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(d: usize, n: usize) -> LatticeShape {
        LatticeShape::new(d, n).unwrap()
    }

    #[test]
    fn rejects_bad_dimension() {
        assert!(LatticeShape::new(0, 1).is_err());
        assert!(LatticeShape::new(4, 1).is_err());
    }

    #[test]
    fn single_site_cube() {
        let s = shape(1, 0);
        assert_eq!(cube_indices(&s), vec![TorusIndex::new(&[0])]);
        assert_eq!(s.site_count(), 1);
    }

    #[test]
    fn cube_enumeration_1d() {
        let idx = cube_indices(&shape(1, 1));
        let got: Vec<i64> = idx.iter().map(|i| i.coords()[0]).collect();
        assert_eq!(got, vec![-1, 0, 1]);
    }

    #[test]
    fn cube_enumeration_2d_matches_brute_force() {
        let s = shape(2, 1);
        let mut brute = Vec::new();
        for a in -1..=1 {
            for b in -1..=1 {
                brute.push(TorusIndex::new(&[a, b]));
            }
        }
        assert_eq!(cube_indices(&s), brute);
        for (m, idx) in cube_indices(&s).iter().enumerate() {
            assert_eq!(s.flat(idx), m);
        }
    }

    #[test]
    fn mod_torus_examples() {
        assert_eq!(mod_torus(&[2], &shape(1, 1)).coords(), &[-1]);
        assert_eq!(mod_torus(&[0], &shape(1, 1)).coords(), &[0]);
        assert_eq!(mod_torus(&[7, -6], &shape(2, 2)).coords(), &[2, -1]);
    }

    #[test]
    fn mod_torus_residue_oracle() {
        let s = shape(2, 3);
        for a in -30..30i64 {
            for b in [-17i64, -4, 0, 9, 22] {
                let r = mod_torus(&[a, b], &s);
                for (p, &orig) in [a, b].iter().enumerate() {
                    let c = r.coords()[p];
                    assert!((-3..=3).contains(&c));
                    assert_eq!((orig - c).rem_euclid(7), 0);
                }
            }
        }
    }

    #[test]
    fn shift_by_one_rotates() {
        let s = shape(1, 1);
        let x = ['a', 'b', 'c'];
        assert_eq!(shift_field(&x, &s, &TorusIndex::new(&[1])), vec!['b', 'c', 'a']);
        assert_eq!(shift_field(&x, &s, &TorusIndex::new(&[0])), x.to_vec());
    }

    #[test]
    fn shift_group_law() {
        let s = shape(2, 2);
        let x: Vec<usize> = (0..s.site_count()).collect();
        let j = TorusIndex::new(&[1, -2]);
        let k = TorusIndex::new(&[2, 2]);
        let composed = shift_field(&shift_field(&x, &s, &k), &s, &j);
        let direct = shift_field(&x, &s, &s.reduce(j.add(&k).coords()));
        assert_eq!(composed, direct);
        let back = shift_field(&shift_field(&x, &s, &j), &s, &j.neg());
        assert_eq!(back, x);
    }
}
