//! Constraint operator and cone projections for the splitting solver.
//!
//! Linear inequalities become halfspace coordinates; each affine-PSD block
//! becomes a run of scaled-vectorization (svec) coordinates, with sqrt(2)
//! on off-diagonal entries so Euclidean geometry in the coordinates matches
//! Frobenius geometry on the matrices and the cone projection is exact.

use nalgebra::DMatrix;

use super::{AffinePsdBlock, LinearInequality};

pub(crate) const SQRT2: f64 = std::f64::consts::SQRT_2;

/// svec length for a symmetric `s x s` matrix.
pub(crate) fn svec_len(s: usize) -> usize {
    s * (s + 1) / 2
}

/// svec coordinate of entry `(r, c)` with `r <= c` (column-major upper
/// triangle).
#[inline]
pub(crate) fn svec_coord(r: usize, c: usize) -> usize {
    debug_assert!(r <= c);
    c * (c + 1) / 2 + r
}

/// Packs a symmetric matrix into svec coordinates.
pub(crate) fn svec_pack(m: &DMatrix<f64>, out: &mut [f64]) {
    let s = m.nrows();
    for c in 0..s {
        for r in 0..=c {
            let v = m[(r, c)];
            out[svec_coord(r, c)] = if r == c { v } else { SQRT2 * v };
        }
    }
}

/// Unpacks svec coordinates into a symmetric matrix.
pub(crate) fn svec_unpack(v: &[f64], s: usize) -> DMatrix<f64> {
    let mut m = DMatrix::<f64>::zeros(s, s);
    for c in 0..s {
        for r in 0..=c {
            let x = v[svec_coord(r, c)];
            if r == c {
                m[(r, c)] = x;
            } else {
                let e = x / SQRT2;
                m[(r, c)] = e;
                m[(c, r)] = e;
            }
        }
    }
    m
}

/// One projection region of the stacked constraint vector.
#[derive(Debug, Clone)]
pub(crate) enum ConeSpan {
    /// Coordinate `row` must satisfy `w >= bound`.
    Halfspace { row: usize, bound: f64 },
    /// Coordinates `offset..offset+svec_len(size)` hold an svec'd symmetric
    /// matrix that must be positive semidefinite.
    Psd { offset: usize, size: usize },
}

/// Sparse row representation of the affine constraint map `x -> M x + c`
/// together with the product cone the image must lie in.
#[derive(Debug, Clone)]
pub(crate) struct ConstraintOps {
    pub nrows: usize,
    pub dim: usize,
    row_ptr: Vec<usize>,
    entries: Vec<(usize, f64)>,
    pub constant: Vec<f64>,
    pub cones: Vec<ConeSpan>,
}

impl ConstraintOps {
    pub fn build(dim: usize, linear: &[LinearInequality], psd: &[AffinePsdBlock]) -> ConstraintOps {
        let mut row_ptr = vec![0usize];
        let mut entries = Vec::new();
        let mut constant = Vec::new();
        let mut cones = Vec::new();

        for (i, ineq) in linear.iter().enumerate() {
            for &(var, coef) in &ineq.coeffs {
                assert!(
                    var < dim,
                    "linear inequality references variable {var} out of {dim}"
                );
                entries.push((var, coef));
            }
            row_ptr.push(entries.len());
            constant.push(0.0);
            cones.push(ConeSpan::Halfspace {
                row: i,
                bound: ineq.bound,
            });
        }

        for block in psd {
            let offset = constant.len();
            let s = block.size;
            // per-svec-coordinate term lists, in coordinate order
            let mut per_coord: Vec<Vec<(usize, f64)>> = vec![Vec::new(); svec_len(s)];
            let mut col_sq = vec![0.0f64; dim];
            for &(var, r, c, v) in &block.terms {
                assert!(
                    var < dim,
                    "PSD block references variable {var} out of {dim}"
                );
                let coef = if r == c { v } else { SQRT2 * v };
                per_coord[svec_coord(r, c)].push((var, coef));
                col_sq[var] += coef * coef;
            }
            // uniform block scaling (cone-preserving) so the block's Gram
            // diagonal is O(1) like the normalized linear rows
            let peak = col_sq.iter().fold(0.0f64, |a, &b| a.max(b));
            let scale = if peak > 1.0 { 1.0 / peak.sqrt() } else { 1.0 };
            let mut f0 = vec![0.0; svec_len(s)];
            for &(r, c, v) in &block.f0 {
                f0[svec_coord(r, c)] += if r == c { v } else { SQRT2 * v };
            }
            for (coord, list) in per_coord.into_iter().enumerate() {
                entries.extend(list.into_iter().map(|(var, coef)| (var, coef * scale)));
                row_ptr.push(entries.len());
                constant.push(f0[coord] * scale);
            }
            cones.push(ConeSpan::Psd { offset, size: s });
        }

        ConstraintOps {
            nrows: constant.len(),
            dim,
            row_ptr,
            entries,
            constant,
            cones,
        }
    }

    /// `out = M x + c`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.nrows);
        for row in 0..self.nrows {
            let mut acc = self.constant[row];
            for &(var, coef) in &self.entries[self.row_ptr[row]..self.row_ptr[row + 1]] {
                acc += coef * x[var];
            }
            out[row] = acc;
        }
    }

    /// `out += scale * M^T w`.
    pub fn adjoint_add(&self, w: &[f64], scale: f64, out: &mut [f64]) {
        debug_assert_eq!(w.len(), self.nrows);
        debug_assert_eq!(out.len(), self.dim);
        for row in 0..self.nrows {
            let wr = w[row] * scale;
            if wr == 0.0 {
                continue;
            }
            for &(var, coef) in &self.entries[self.row_ptr[row]..self.row_ptr[row + 1]] {
                out[var] += coef * wr;
            }
        }
    }

    /// Iterates rows as `(variable, coefficient)` slices, for Gram assembly.
    pub fn rows(&self) -> impl Iterator<Item = &[(usize, f64)]> {
        (0..self.nrows).map(move |r| &self.entries[self.row_ptr[r]..self.row_ptr[r + 1]])
    }

    /// Projects `w` onto the product cone, writing into `z`.
    pub fn project(&self, w: &[f64], z: &mut [f64]) {
        debug_assert_eq!(w.len(), self.nrows);
        z.copy_from_slice(w);
        for cone in &self.cones {
            match *cone {
                ConeSpan::Halfspace { row, bound } => {
                    if z[row] < bound {
                        z[row] = bound;
                    }
                }
                ConeSpan::Psd { offset, size } => {
                    let span = &mut z[offset..offset + svec_len(size)];
                    psd_project_in_place(span, size);
                }
            }
        }
    }
}

/// Projects an svec'd symmetric matrix onto the PSD cone by clipping
/// negative eigenvalues to zero.
pub(crate) fn psd_project_in_place(span: &mut [f64], size: usize) {
    let m = svec_unpack(span, size);
    let projected = psd_project(&m);
    svec_pack(&projected, span);
}

/// Nearest (Frobenius) positive semidefinite matrix.
pub(crate) fn psd_project(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let s = m.nrows();
    let mut out = DMatrix::<f64>::zeros(s, s);
    for k in 0..s {
        let lam = eig.eigenvalues[k];
        if lam > 0.0 {
            let v = eig.eigenvectors.column(k);
            // out += lam * v v^T
            for c in 0..s {
                let scaled = lam * v[c];
                for r in 0..s {
                    out[(r, c)] += v[r] * scaled;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn svec_round_trip_preserves_frobenius_norm() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.5, 1.0, -1.0, 0.3, 0.5, 0.3, 4.0]);
        let mut v = vec![0.0; svec_len(3)];
        svec_pack(&m, &mut v);
        let norm_v: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert_relative_eq!(norm_v, m.norm(), epsilon = 1e-14);
        let back = svec_unpack(&v, 3);
        assert_relative_eq!(back, m, epsilon = 1e-14);
    }

    #[test]
    fn psd_projection_clips_negative_eigenvalue() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let p = psd_project(&m);
        assert_relative_eq!(p[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(p[(1, 1)], 0.0, epsilon = 1e-12);
        assert_relative_eq!(p[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn psd_projection_fixes_psd_input() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let p = psd_project(&m);
        assert_relative_eq!(p, m, epsilon = 1e-12);
    }

    #[test]
    fn apply_and_adjoint_are_transposes() {
        let linear = vec![
            LinearInequality {
                coeffs: vec![(0, 1.0), (2, -2.0)],
                bound: 0.0,
            },
            LinearInequality {
                coeffs: vec![(1, 3.0)],
                bound: 1.0,
            },
        ];
        let psd = vec![AffinePsdBlock {
            size: 2,
            f0: vec![(0, 0, 1.0)],
            terms: vec![(0, 0, 1, 0.5), (2, 1, 1, 1.0)],
        }];
        let ops = ConstraintOps::build(3, &linear, &psd);
        // <M x, w> == <x, M^T w> for arbitrary x, w
        let x = [0.7, -1.2, 0.4];
        let w: Vec<f64> = (0..ops.nrows).map(|i| (i as f64 * 1.3).sin()).collect();
        let mut mx = vec![0.0; ops.nrows];
        ops.apply(&x, &mut mx);
        // subtract constant to get the linear part
        let lin: Vec<f64> = mx.iter().zip(&ops.constant).map(|(a, b)| a - b).collect();
        let lhs: f64 = lin.iter().zip(&w).map(|(a, b)| a * b).sum();
        let mut mtw = vec![0.0; 3];
        ops.adjoint_add(&w, 1.0, &mut mtw);
        let rhs: f64 = mtw.iter().zip(&x).map(|(a, b)| a * b).sum();
        assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn halfspace_projection_clamps_from_below() {
        let linear = vec![LinearInequality {
            coeffs: vec![(0, 1.0)],
            bound: 2.0,
        }];
        let ops = ConstraintOps::build(1, &linear, &[]);
        let w = [1.5];
        let mut z = [0.0];
        ops.project(&w, &mut z);
        assert_eq!(z[0], 2.0);
        let w = [2.5];
        ops.project(&w, &mut z);
        assert_eq!(z[0], 2.5);
    }
}
