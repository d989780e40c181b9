use rayon::prelude::*;

use super::GridError;
use crate::expr::Expr;
use crate::linalg::{cholesky, invert};

/// Axis subsets labelling the cell types of each degree, lexicographic.
pub const CELL_TYPES: [&[&[usize]]; 5] = [
    &[&[]],
    &[&[0], &[1], &[2], &[3]],
    &[&[0, 1], &[0, 2], &[0, 3], &[1, 2], &[1, 3], &[2, 3]],
    &[&[0, 1, 2], &[0, 1, 3], &[0, 2, 3], &[1, 2, 3]],
    &[&[0, 1, 2, 3]],
];

fn type_index(k: usize, axes: &[usize]) -> usize {
    CELL_TYPES[k].iter().position(|t| *t == axes).expect("valid cell type")
}

/// Periodic cubical lattice on `(0, 2π)⁴` with lumped Hodge mass matrices.
///
/// A `k`-cochain is a flat vector of length `C(4,k)·n⁴`: cell type major
/// (order of [`CELL_TYPES`]), then the base vertex in row-major order with
/// `x1` slowest. The cell `(v, S)` spans `v + h·[0,1]^S`.
#[derive(Debug, Clone)]
pub struct GridComplex {
    pub n: usize,
    pub h: f64,
    /// Diagonals of `M_0..M_4`.
    pub mass: [Vec<f64>; 5],
    /// `false` when some barycenter sees an off-diagonal metric entry; the
    /// lumped masses then drop those couplings and lose consistency.
    pub diagonal_metric: bool,
    plus: [Vec<u32>; 4],
    minus: [Vec<u32>; 4],
}

impl GridComplex {
    /// Number of lattice vertices `n⁴`.
    pub fn vertices(&self) -> usize {
        self.n.pow(4)
    }

    pub fn len(&self, k: usize) -> usize {
        CELL_TYPES[k].len() * self.vertices()
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Lattice coordinates of vertex `v`.
    pub fn coords(&self, v: usize) -> [usize; 4] {
        let n = self.n;
        [v / (n * n * n), (v / (n * n)) % n, (v / n) % n, v % n]
    }

    pub fn vertex(&self, c: [usize; 4]) -> usize {
        let n = self.n;
        ((c[0] % n * n + c[1] % n) * n + c[2] % n) * n + c[3] % n
    }

    pub fn shift(&self, v: usize, axis: usize, forward: bool) -> usize {
        if forward {
            self.plus[axis][v] as usize
        } else {
            self.minus[axis][v] as usize
        }
    }

    /// Incidence `d_k: C^k → C^{k+1}`.
    pub fn d(&self, k: usize, a: &[f64]) -> Vec<f64> {
        assert!(k < 4 && a.len() == self.len(k));
        let nv = self.vertices();
        let mut out = vec![0.0; self.len(k + 1)];
        out.par_chunks_mut(nv).enumerate().for_each(|(t, chunk)| {
            let axes = CELL_TYPES[k + 1][t];
            let faces: Vec<(usize, f64, usize)> = (0..axes.len())
                .map(|pos| {
                    let rest: Vec<usize> = axes.iter().copied().filter(|&x| x != axes[pos]).collect();
                    let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                    (axes[pos], sign, type_index(k, &rest) * nv)
                })
                .collect();
            for (v, o) in chunk.iter_mut().enumerate() {
                let mut s = 0.0;
                for &(j, sign, off) in &faces {
                    s += sign * (a[off + self.plus[j][v] as usize] - a[off + v]);
                }
                *o = s;
            }
        });
        out
    }

    /// Transpose `d_kᵀ: C^{k+1} → C^k`.
    pub fn d_transpose(&self, k: usize, b: &[f64]) -> Vec<f64> {
        assert!(k < 4 && b.len() == self.len(k + 1));
        let nv = self.vertices();
        let mut out = vec![0.0; self.len(k)];
        out.par_chunks_mut(nv).enumerate().for_each(|(t, chunk)| {
            let axes = CELL_TYPES[k][t];
            // cofaces S = axes ∪ {j}
            let cofaces: Vec<(usize, f64, usize)> = (0..4)
                .filter(|j| !axes.contains(j))
                .map(|j| {
                    let mut s: Vec<usize> = axes.to_vec();
                    s.push(j);
                    s.sort_unstable();
                    let pos = s.iter().position(|&x| x == j).unwrap();
                    let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                    (j, sign, type_index(k + 1, &s) * nv)
                })
                .collect();
            for (v, o) in chunk.iter_mut().enumerate() {
                let mut s = 0.0;
                for &(j, sign, off) in &cofaces {
                    s += sign * (b[off + self.minus[j][v] as usize] - b[off + v]);
                }
                *o = s;
            }
        });
        out
    }

    /// Codifferential `δ_{k+1} = M_k⁻¹ d_kᵀ M_{k+1}: C^{k+1} → C^k`.
    pub fn codifferential(&self, k: usize, b: &[f64]) -> Vec<f64> {
        let mb: Vec<f64> = b.iter().zip(&self.mass[k + 1]).map(|(x, m)| x * m).collect();
        let mut out = self.d_transpose(k, &mb);
        out.iter_mut().zip(&self.mass[k]).for_each(|(x, m)| *x /= m);
        out
    }

    /// `Δ₂ = d δ + δ d` on 2-cochains.
    pub fn laplacian2(&self, x: &[f64]) -> Vec<f64> {
        let a = self.d(1, &self.codifferential(1, x));
        let b = self.codifferential(2, &self.d(2, x));
        a.into_iter().zip(b).map(|(p, q)| p + q).collect()
    }

    /// `⟨a, b⟩_{M_k}`.
    pub fn inner(&self, k: usize, a: &[f64], b: &[f64]) -> f64 {
        super::ordered_dot(a, b, Some(&self.mass[k]))
    }

    /// The 2-cochain of a constant form with coordinate components `c` (pair order).
    pub fn constant_cochain(&self, c: [f64; 6]) -> Vec<f64> {
        let nv = self.vertices();
        let mut out = vec![0.0; self.len(2)];
        for (t, chunk) in out.chunks_mut(nv).enumerate() {
            chunk.fill(c[t] * self.h * self.h);
        }
        out
    }
}

/// Assembles the lattice complex of the metric `g` (expressions in `x1..x4`,
/// `2π`-periodic) with `n` points per axis.
///
/// The mass of the cell `(v, S)` is `√det g · det(g⁻¹)_{SS} · h^{4−2k}` at its
/// barycenter, so that a cochain holding `∫_cell φ` has the right `L²` norm
/// to second order when `g` is diagonal.
pub fn assemble(g: &[[Expr; 4]; 4], n: usize) -> Result<GridComplex, GridError> {
    if n < 2 {
        return Err(GridError::Invalid(format!("need at least 2 points per axis, got {n}")));
    }
    check_periodic(g)?;
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let nv = n.pow(4);
    let mut plus: [Vec<u32>; 4] = Default::default();
    let mut minus: [Vec<u32>; 4] = Default::default();
    let stride = [n * n * n, n * n, n, 1];
    for a in 0..4 {
        plus[a] = (0..nv)
            .map(|v| {
                let c = (v / stride[a]) % n;
                (if c + 1 == n { v - (n - 1) * stride[a] } else { v + stride[a] }) as u32
            })
            .collect();
        minus[a] = (0..nv)
            .map(|v| {
                let c = (v / stride[a]) % n;
                (if c == 0 { v + (n - 1) * stride[a] } else { v - stride[a] }) as u32
            })
            .collect();
    }
    let mut cx = GridComplex { n, h, mass: Default::default(), diagonal_metric: true, plus, minus };
    let mut diagonal = true;
    for k in 0..5 {
        let mut m = Vec::with_capacity(cx.len(k));
        for axes in CELL_TYPES[k] {
            let col: Result<Vec<(f64, bool)>, GridError> = (0..nv)
                .into_par_iter()
                .map(|v| {
                    let c = cx.coords(v);
                    let p: [f64; 4] = std::array::from_fn(|i| {
                        h * (c[i] as f64 + if axes.contains(&i) { 0.5 } else { 0.0 })
                    });
                    cell_mass(g, p, axes, h).map_err(|e| match e {
                        GridError::Indefinite { point, .. } => GridError::Indefinite { cell: c, point },
                        other => other,
                    })
                })
                .collect();
            for (w, diag) in col? {
                diagonal &= diag;
                m.push(w);
            }
        }
        cx.mass[k] = m;
    }
    cx.diagonal_metric = diagonal;
    Ok(cx)
}

fn eval_metric(g: &[[Expr; 4]; 4], p: [f64; 4]) -> Result<[[f64; 4]; 4], GridError> {
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in i..4 {
            let v = g[i][j].eval_real(&p)?;
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    Ok(m)
}

fn cell_mass(g: &[[Expr; 4]; 4], p: [f64; 4], axes: &[usize], h: f64) -> Result<(f64, bool), GridError> {
    let m = eval_metric(g, p)?;
    if cholesky(&m).is_none() {
        return Err(GridError::Indefinite { cell: [0; 4], point: p });
    }
    let (inv, det) = invert(&m).ok_or(GridError::Indefinite { cell: [0; 4], point: p })?;
    let k = axes.len();
    let mut sub = [[0.0; 4]; 4];
    for (a, &i) in axes.iter().enumerate() {
        for (b, &j) in axes.iter().enumerate() {
            sub[a][b] = inv[i][j];
        }
    }
    let minor = small_det(&sub, k);
    let diag = (0..4).all(|i| (0..4).all(|j| i == j || m[i][j].abs() <= 1e-14 * (m[i][i] * m[j][j]).sqrt()));
    Ok((det.sqrt() * minor * h.powi(4 - 2 * k as i32), diag))
}

fn small_det(m: &[[f64; 4]; 4], k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => crate::linalg::det(m),
    }
}

/// Components must agree under `x_i → x_i + 2π` at a spread of sample points.
fn check_periodic(g: &[[Expr; 4]; 4]) -> Result<(), GridError> {
    const SAMPLES: [[f64; 4]; 4] = [
        [0.0, 0.0, 0.0, 0.0],
        [0.3, 1.7, 2.9, 4.4],
        [5.1, 0.9, 3.8, 2.2],
        [2.6, 4.9, 0.4, 6.0],
    ];
    for p in SAMPLES {
        let base = eval_metric(g, p)?;
        for a in 0..4 {
            let mut q = p;
            q[a] += 2.0 * std::f64::consts::PI;
            let moved = eval_metric(g, q)?;
            for i in 0..4 {
                for j in 0..4 {
                    let diff = (moved[i][j] - base[i][j]).abs();
                    if diff > 1e-12 * (1.0 + base[i][j].abs()) {
                        return Err(GridError::NonPeriodic { component: (i + 1, j + 1), axis: a + 1, point: p, difference: diff });
                    }
                }
            }
        }
    }
    Ok(())
}
