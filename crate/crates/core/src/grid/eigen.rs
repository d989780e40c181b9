use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::complex::GridComplex;
use super::GridError;
use crate::linalg::sym_eigen;

/// Knobs of the block inverse iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenSettings {
    /// Block size beyond the expected kernel dimension.
    pub extra: usize,
    /// Positive shift `σ` of the inner solves `(A + σ)z = y`; on the `2π`
    /// torus the first positive eigenvalue is of order one.
    pub shift: f64,
    pub max_outer: usize,
    pub cg_tol: f64,
    pub cg_max: usize,
    pub seed: u64,
    /// Required ratio between the first positive eigenvalue and the zero cluster.
    pub gap: f64,
    /// Kernel residuals `‖Ay − θy‖` relative to `‖A‖`.
    pub residual_tol: f64,
}

impl Default for EigenSettings {
    fn default() -> Self {
        Self { extra: 4, shift: 0.01, max_outer: 40, cg_tol: 1e-12, cg_max: 5000, seed: 1, gap: 1e3, residual_tol: 1e-10 }
    }
}

/// Discrete harmonic 2-forms with the Hodge star on them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicBasis {
    pub n: usize,
    pub h: f64,
    /// Ritz values of the final block, ascending.
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub kernel_dim: usize,
    /// Largest eigenvalue in the zero cluster.
    pub cluster_max: f64,
    pub first_positive: Option<f64>,
    /// `first_positive / max(cluster_max, floor)`.
    pub gap_ratio: f64,
    /// Estimate of `‖Δ₂‖`, the unit of the floor and residuals.
    pub operator_norm: f64,
    pub outer_iterations: usize,
    pub cg_iterations: usize,
    /// Kernel vectors as 2-cochains, orthonormal for `M₂`. Faces ordered by
    /// axis pair (12, 13, 14, 23, 24, 34), then base vertex row-major.
    pub vectors: Vec<Vec<f64>>,
    /// `⟨u_a, ∗u_b⟩ = ∫u_a ∧ u_b`, row-major `kernel_dim²`.
    pub star: Vec<f64>,
    pub star_eigenvalues: Vec<f64>,
    pub b2_plus: usize,
    pub b2_minus: usize,
    pub signature: i64,
}

/// `b₂±` and definiteness read off the star spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefinitenessReport {
    pub b2_plus: usize,
    pub b2_minus: usize,
    pub signature: i64,
    pub definite: bool,
    /// `max ||μ| − 1|` over the star eigenvalues.
    pub star_deviation: f64,
}

/// The scaled operator `A = M^{1/2} Δ₂ M^{-1/2}`, symmetric for the plain dot product.
struct Scaled<'a> {
    cx: &'a GridComplex,
    s: Vec<f64>,
}

impl Scaled<'_> {
    fn apply(&self, y: &[f64]) -> Vec<f64> {
        let x: Vec<f64> = y.iter().zip(&self.s).map(|(a, s)| a / s).collect();
        let mut out = self.cx.laplacian2(&x);
        out.iter_mut().zip(&self.s).for_each(|(a, s)| *a *= s);
        out
    }
}

/// `(L + σ)⁻¹` for the flat lattice Laplacian, componentwise by FFT.
struct FlatInverse {
    n: usize,
    symbol: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl FlatInverse {
    fn new(n: usize, h: f64, shift: f64) -> Self {
        let mut planner = FftPlanner::new();
        let s1: Vec<f64> = (0..n).map(|k| (2.0 * (std::f64::consts::PI * k as f64 / n as f64).sin() / h).powi(2)).collect();
        let nv = n.pow(4);
        let symbol = (0..nv)
            .map(|v| {
                let c = [v / (n * n * n), (v / (n * n)) % n, (v / n) % n, v % n];
                1.0 / (c.iter().map(|&k| s1[k]).sum::<f64>() + shift) / nv as f64
            })
            .collect();
        Self { n, symbol, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    /// Batched FFT along the last axis followed by a cyclic rotation of the
    /// axes, four times.
    fn transform(&self, buf: &mut Vec<Complex<f64>>, fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let rows = buf.len() / n;
        let mut scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        let mut rotated = vec![Complex::default(); buf.len()];
        for _ in 0..4 {
            fft.process_with_scratch(buf, &mut scratch);
            // (a, b, c, d) -> (d, a, b, c)
            for r in 0..rows {
                for d in 0..n {
                    rotated[d * rows + r] = buf[r * n + d];
                }
            }
            std::mem::swap(buf, &mut rotated);
        }
    }

    /// The symbol is real and even, so two real components ride in one
    /// complex transform.
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let nv = self.symbol.len();
        let mut out = vec![0.0; r.len()];
        out.par_chunks_mut(2 * nv).zip(r.par_chunks(2 * nv)).for_each(|(o, src)| {
            let (re, im) = src.split_at(nv);
            let mut buf: Vec<Complex<f64>> = re.iter().zip(im).map(|(&x, &y)| Complex::new(x, y)).collect();
            self.transform(&mut buf, &self.fwd);
            buf.iter_mut().zip(&self.symbol).for_each(|(b, s)| *b *= s);
            self.transform(&mut buf, &self.inv);
            let (ore, oim) = o.split_at_mut(nv);
            for ((x, y), b) in ore.iter_mut().zip(oim.iter_mut()).zip(&buf) {
                *x = b.re;
                *y = b.im;
            }
        });
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    super::ordered_dot(a, b, None)
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.par_iter_mut().zip(x).for_each(|(y, x)| *y += a * x);
}

/// Preconditioned CG for `(A + σ)z = b`; returns `z` and the iteration count.
fn pcg(a: &Scaled<'_>, pre: &FlatInverse, shift: f64, b: &[f64], tol: f64, max: usize) -> (Vec<f64>, usize) {
    let bn = dot(b, b).sqrt();
    let mut z = vec![0.0; b.len()];
    if bn == 0.0 {
        return (z, 0);
    }
    let mut r = b.to_vec();
    let mut w = pre.apply(&r);
    let mut p = w.clone();
    let mut rw = dot(&r, &w);
    for it in 1..=max {
        let mut q = a.apply(&p);
        axpy(&mut q, shift, &p);
        let alpha = rw / dot(&p, &q);
        axpy(&mut z, alpha, &p);
        axpy(&mut r, -alpha, &q);
        if dot(&r, &r).sqrt() <= tol * bn {
            return (z, it);
        }
        w = pre.apply(&r);
        let rw_new = dot(&r, &w);
        let beta = rw_new / rw;
        rw = rw_new;
        p.par_iter_mut().zip(&w).for_each(|(p, w)| *p = w + beta * *p);
    }
    (z, max)
}

/// Modified Gram–Schmidt, twice.
fn orthonormalize(vs: &mut [Vec<f64>]) {
    for _ in 0..2 {
        for i in 0..vs.len() {
            for j in 0..i {
                let c = dot(&vs[i], &vs[j]);
                let (head, tail) = vs.split_at_mut(i);
                axpy(&mut tail[0], -c, &head[j]);
            }
            let nrm = dot(&vs[i], &vs[i]).sqrt();
            vs[i].par_iter_mut().for_each(|x| *x /= nrm);
        }
    }
}

fn combine(vs: &[Vec<f64>], coef: &[Vec<f64>]) -> Vec<Vec<f64>> {
    coef.iter()
        .map(|c| {
            let mut out = vec![0.0; vs[0].len()];
            for (v, &w) in vs.iter().zip(c) {
                axpy(&mut out, w, v);
            }
            out
        })
        .collect()
}

/// Bottom of the `Δ₂` spectrum by block inverse iteration with FFT-preconditioned
/// CG inner solves; the kernel is the cluster below a relative gap.
pub fn harmonic_kernel(cx: &GridComplex, expected_dim: Option<usize>) -> Result<HarmonicBasis, GridError> {
    harmonic_kernel_with(cx, expected_dim, &EigenSettings::default())
}

pub fn harmonic_kernel_with(
    cx: &GridComplex,
    expected_dim: Option<usize>,
    set: &EigenSettings,
) -> Result<HarmonicBasis, GridError> {
    let dim = cx.len(2);
    let p = (expected_dim.unwrap_or(6) + set.extra).min(dim);
    let a = Scaled { cx, s: cx.mass[2].iter().map(|m| m.sqrt()).collect() };
    let pre = FlatInverse::new(cx.n, cx.h, set.shift);
    let mut rng = ChaCha8Rng::seed_from_u64(set.seed);
    let norm = operator_norm(&a, &mut rng, dim);

    let mut y: Vec<Vec<f64>> = (0..p).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    orthonormalize(&mut y);
    let mut cg_total = 0;
    let mut theta = vec![0.0; p];
    let mut res = vec![f64::INFINITY; p];
    let mut outer = 0;
    let mut split = None;
    while outer < set.max_outer {
        outer += 1;
        let solved: Vec<(Vec<f64>, usize)> = y.iter().map(|v| pcg(&a, &pre, set.shift, v, set.cg_tol, set.cg_max)).collect();
        cg_total += solved.iter().map(|s| s.1).sum::<usize>();
        let mut z: Vec<Vec<f64>> = solved.into_iter().map(|s| s.0).collect();
        orthonormalize(&mut z);
        let az: Vec<Vec<f64>> = z.iter().map(|v| a.apply(v)).collect();
        let mut hm = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..p {
                hm[i * p + j] = 0.5 * (dot(&z[i], &az[j]) + dot(&z[j], &az[i]));
            }
        }
        let (vals, vecs) = sym_eigen(&hm, p);
        y = combine(&z, &vecs);
        let ay = combine(&az, &vecs);
        theta = vals;
        res = y
            .iter()
            .zip(&ay)
            .zip(&theta)
            .map(|((v, av), t)| av.iter().zip(v).map(|(a, b)| (a - t * b).powi(2)).sum::<f64>().sqrt())
            .collect();
        split = find_split(&theta, norm, expected_dim, set.gap);
        if let Some(kd) = split {
            if res[..kd].iter().all(|r| *r <= set.residual_tol * norm) {
                break;
            }
        }
    }
    let floor = 1e-12 * norm;
    let kd = match split {
        Some(kd) => kd,
        None => {
            let i = expected_dim.unwrap_or(0).min(p - 1);
            return Err(GridError::UnresolvedKernel {
                below: if i > 0 { theta[i - 1] } else { 0.0 },
                above: theta[i],
            });
        }
    };
    let cluster_max = theta[..kd].iter().copied().fold(0.0f64, f64::max);
    let first_positive = theta.get(kd).copied();
    let gap_ratio = first_positive.map_or(f64::INFINITY, |f| f / cluster_max.max(floor));
    let vectors: Vec<Vec<f64>> = y[..kd].iter().map(|v| v.iter().zip(&a.s).map(|(x, s)| x / s).collect()).collect();
    let star = star_on(cx, &vectors);
    let (star_eigenvalues, _) = sym_eigen(&star, kd);
    let b2_plus = star_eigenvalues.iter().filter(|m| **m > 0.0).count();
    let b2_minus = kd - b2_plus;
    Ok(HarmonicBasis {
        n: cx.n,
        h: cx.h,
        eigenvalues: theta,
        residuals: res,
        kernel_dim: kd,
        cluster_max,
        first_positive,
        gap_ratio,
        operator_norm: norm,
        outer_iterations: outer,
        cg_iterations: cg_total,
        vectors,
        star,
        star_eigenvalues,
        b2_plus,
        b2_minus,
        signature: b2_plus as i64 - b2_minus as i64,
    })
}

/// Kernel size: the break with relative gap at least `gap` (at the expected
/// dimension when given, else the largest break past the first value), eigenvalues below
/// `1e-12·‖A‖` counted as zero.
fn find_split(theta: &[f64], norm: f64, expected: Option<usize>, gap: f64) -> Option<usize> {
    let floor = 1e-12 * norm;
    let ratio = |k: usize| -> f64 {
        let below = if k == 0 { floor } else { theta[k - 1].max(floor) };
        theta[k] / below
    };
    match expected {
        Some(k) if k < theta.len() => (ratio(k) >= gap).then_some(k),
        Some(_) => None,
        None => {
            // an empty kernel cannot be told apart from a slow start
            let (k, r) = (1..theta.len()).map(|k| (k, ratio(k))).max_by(|a, b| a.1.total_cmp(&b.1))?;
            (r >= gap).then_some(k)
        }
    }
}

fn operator_norm(a: &Scaled<'_>, rng: &mut ChaCha8Rng, dim: usize) -> f64 {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut est = 0.0;
    for _ in 0..30 {
        let n = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= n);
        let w = a.apply(&v);
        est = dot(&v, &w);
        v = w;
    }
    // the power iteration approaches from below
    1.1 * est
}

/// Sign of the permutation `(S, Sᶜ)` for the pair types in order.
const PAIR_SIGN: [f64; 6] = [1.0, -1.0, 1.0, 1.0, -1.0, 1.0];

/// `∫α ∧ β` for 2-cochains; the complementary face values are averaged over
/// the sixteen faces symmetric about each barycenter.
pub fn wedge_pairing(cx: &GridComplex, a: &[f64], b: &[f64]) -> f64 {
    let nv = cx.vertices();
    (0..6)
        .map(|t| {
            let (i, j) = crate::forms::PAIRS[t];
            let tc = 5 - t;
            let (k, l) = crate::forms::PAIRS[tc];
            let terms: Vec<f64> = (0..nv)
                .into_par_iter()
                .map(|v| {
                    let mut avg = 0.0;
                    for bits in 0..16u32 {
                        let mut w = v;
                        if bits & 1 != 0 {
                            w = cx.shift(w, i, true);
                        }
                        if bits & 2 != 0 {
                            w = cx.shift(w, j, true);
                        }
                        if bits & 4 != 0 {
                            w = cx.shift(w, k, false);
                        }
                        if bits & 8 != 0 {
                            w = cx.shift(w, l, false);
                        }
                        avg += b[tc * nv + w];
                    }
                    a[t * nv + v] * avg / 16.0
                })
                .collect();
            PAIR_SIGN[t] * terms.iter().sum::<f64>()
        })
        .sum()
}

fn star_on(cx: &GridComplex, vs: &[Vec<f64>]) -> Vec<f64> {
    let k = vs.len();
    let mut w = vec![0.0; k * k];
    for a in 0..k {
        for b in a..k {
            let v = 0.5 * (wedge_pairing(cx, &vs[a], &vs[b]) + wedge_pairing(cx, &vs[b], &vs[a]));
            w[a * k + b] = v;
            w[b * k + a] = v;
        }
    }
    w
}

/// Counts from the star spectrum; an eigenvalue more than 0.1 away from `±1`
/// means the star or the orientation is wrong.
pub fn definiteness_report(basis: &HarmonicBasis) -> Result<DefinitenessReport, GridError> {
    let mut dev = 0.0f64;
    for &m in &basis.star_eigenvalues {
        let d = (m.abs() - 1.0).abs();
        if d > 0.1 {
            return Err(GridError::StarSpectrum { eigenvalue: m });
        }
        dev = dev.max(d);
    }
    let plus = basis.star_eigenvalues.iter().filter(|m| **m > 0.0).count();
    let minus = basis.star_eigenvalues.len() - plus;
    Ok(DefinitenessReport {
        b2_plus: plus,
        b2_minus: minus,
        signature: plus as i64 - minus as i64,
        definite: plus == 0 || minus == 0,
        star_deviation: dev,
    })
}

/// `M₂`-orthogonal projection of `c` onto the span of the kernel vectors. For
/// a closed `c` this is its harmonic representative.
pub fn project(cx: &GridComplex, basis: &HarmonicBasis, c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; c.len()];
    for u in &basis.vectors {
        axpy(&mut out, cx.inner(2, u, c), u);
    }
    out
}

