//! Canonical form `φ = λ₁ ω¹∧ω² + λ₂ ω³∧ω⁴` of a 2-form, the curvature
//! term `K`, biorthogonal curvature, and curvature statistics over a chart.
//!
//! The adapted basis is built from the two commuting complex structures
//! `J± = φ±/|φ±|·√2` (as skew matrices) rather than from an eigen-solver:
//! `Q = J₊J₋` is a symmetric involution whose `−1` and `+1` eigenspaces are
//! the two invariant planes, `e₂ = −J₊e₁` and `e₄ = −J₊e₃`. A degenerate
//! factor is replaced by the fixed structure `e12 ± e34`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::forms::{TwoFormPoint, PAIRS};
use crate::geometry::{CurvatureSlate, FrameChoice, GeometryError, LocalGeometry, MetricChart};
use crate::linalg::{self, Mat4, Vec4};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Degeneracy {
    None,
    /// `φ₋ = 0`: the basis is determined only up to the choice of `J₋`.
    SelfDual,
    /// `φ₊ = 0`.
    AntiSelfDual,
    Zero,
}

impl Degeneracy {
    pub fn is_degenerate(self) -> bool {
        self != Degeneracy::None
    }

    pub fn label(self) -> &'static str {
        match self {
            Degeneracy::None => "none",
            Degeneracy::SelfDual => "SD-degenerate",
            Degeneracy::AntiSelfDual => "ASD-degenerate",
            Degeneracy::Zero => "zero",
        }
    }
}

/// Adapted orthonormal basis of a 2-form at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptedFrame<T> {
    /// `basis[A]`: components of the A-th adapted vector in the input frame.
    pub basis: [Vec4<T>; 4],
    pub lambda1: T,
    pub lambda2: T,
    pub degeneracy: Degeneracy,
    /// Largest deviation of the rotated form from `diag(λ₁, λ₂)` blocks.
    pub residual: T,
}

fn skew_apply<T: Real>(m: &Mat4<T>, v: &Vec4<T>) -> Vec4<T> {
    linalg::mat_vec(m, v)
}

fn unit_from_projector<T: Real>(p: &Mat4<T>) -> Vec4<T> {
    let mut best = 0;
    let mut best_n = T::neg_infinity();
    for k in 0..4 {
        let n: T = (0..4).map(|i| p[i][k] * p[i][k]).sum();
        if n > best_n + T::epsilon() {
            best = k;
            best_n = n;
        }
    }
    let v: Vec4<T> = std::array::from_fn(|i| p[i][best]);
    let n = linalg::dot(&v, &v).sqrt();
    v.map(|x| x / n)
}

fn normalize<T: Real>(v: Vec4<T>) -> Vec4<T> {
    let n = linalg::dot(&v, &v).sqrt();
    v.map(|x| x / n)
}

/// Canonical basis with the default relative degeneracy threshold
/// `1e-9 · |φ|`.
pub fn canonicalize<T: Real>(phi: &TwoFormPoint<T>) -> AdaptedFrame<T> {
    let thr = (phi.norm2().sqrt() * T::lit(1e-9)).max(T::min_positive_value().sqrt());
    canonicalize_with(phi, thr)
}

/// Canonical basis; `threshold` bounds `|φ±|` below which a factor counts as zero.
pub fn canonicalize_with<T: Real>(phi: &TwoFormPoint<T>, threshold: T) -> AdaptedFrame<T> {
    let split = phi.sd_split();
    let sqrt2 = T::lit(2.0).sqrt();
    let np = split.plus.norm2().sqrt();
    let nm = split.minus.norm2().sqrt();
    let a = np / sqrt2;
    let b = nm / sqrt2;
    let plus_ok = np > threshold;
    let minus_ok = nm > threshold;
    let jp = if plus_ok {
        (split.plus * (T::one() / a)).to_skew()
    } else {
        TwoFormPoint::new([T::one(), T::zero(), T::zero(), T::zero(), T::zero(), T::one()]).to_skew()
    };
    let jm = if minus_ok {
        (split.minus * (T::one() / b)).to_skew()
    } else {
        TwoFormPoint::new([T::one(), T::zero(), T::zero(), T::zero(), T::zero(), -T::one()]).to_skew()
    };
    let q = linalg::mat_mul(&jp, &jm);
    let half = T::lit(0.5);
    let id = linalg::identity::<T>();
    let pm: Mat4<T> = std::array::from_fn(|i| std::array::from_fn(|j| (id[i][j] - q[i][j]) * half));
    let pp: Mat4<T> = std::array::from_fn(|i| std::array::from_fn(|j| (id[i][j] + q[i][j]) * half));
    let e1 = unit_from_projector(&pm);
    let e2 = normalize(skew_apply(&jp, &e1).map(|x| -x));
    let e3 = unit_from_projector(&pp);
    let e4 = normalize(skew_apply(&jp, &e3).map(|x| -x));
    let basis = [e1, e2, e3, e4];
    let lambda1 = (a + b) * half;
    let lambda2 = (a - b) * half;
    let r = phi.rotated(&basis);
    let residual = [r.f[1], r.f[2], r.f[3], r.f[4], r.f[0] - lambda1, r.f[5] - lambda2]
        .iter()
        .fold(T::zero(), |m, v| m.max(v.abs()));
    let degeneracy = match (plus_ok, minus_ok) {
        (true, true) => Degeneracy::None,
        (true, false) => Degeneracy::SelfDual,
        (false, true) => Degeneracy::AntiSelfDual,
        (false, false) => Degeneracy::Zero,
    };
    AdaptedFrame { basis, lambda1, lambda2, degeneracy, residual }
}

/// `K` and `R₁₂₃₄` in an adapted basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureTerm<T> {
    pub k: T,
    pub r1234: T,
}

/// `K = ½(R₁₃₁₃ + R₁₄₁₄ + R₂₃₂₃ + R₂₄₂₄)` and `R₁₂₃₄` after rotating the
/// slate into the adapted basis (given in the slate's frame).
pub fn curvature_term_k<T: Real>(slate: &CurvatureSlate<T>, frame: &AdaptedFrame<T>) -> CurvatureTerm<T> {
    term_in_basis(slate, &frame.basis)
}

fn term_in_basis<T: Real>(slate: &CurvatureSlate<T>, basis: &[Vec4<T>; 4]) -> CurvatureTerm<T> {
    let e = basis;
    let r = |a: usize, b: usize, c: usize, d: usize| slate.eval(&e[a], &e[b], &e[c], &e[d]);
    let k = T::lit(0.5) * (r(0, 2, 0, 2) + r(0, 3, 0, 3) + r(1, 2, 1, 2) + r(1, 3, 1, 3));
    CurvatureTerm { k, r1234: r(0, 1, 2, 3) }
}

/// Range of `K` and `R₁₂₃₄` over the admissible adapted bases of a
/// degenerate form, sampled by replacing the undetermined complex structure
/// with `samples` deterministic unit (anti-)self-dual directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureTermRange<T> {
    pub k: [T; 2],
    pub r1234: [T; 2],
}

pub fn curvature_term_range<T: Real>(
    slate: &CurvatureSlate<T>,
    phi: &TwoFormPoint<T>,
    samples: usize,
) -> CurvatureTermRange<T> {
    let split = phi.sd_split();
    let sqrt2 = T::lit(2.0).sqrt();
    let mut k = [T::infinity(), T::neg_infinity()];
    let mut r = [T::infinity(), T::neg_infinity()];
    let thr = (phi.norm2().sqrt() * T::lit(1e-9)).max(T::min_positive_value().sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..samples.max(1) {
        // random unit vector in R³, mapped to a unit SD and ASD direction
        let v: [T; 3] = loop {
            let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let n = v.iter().map(|x| x * x).sum::<f64>();
            if n > 1e-3 && n <= 1.0 {
                break v.map(|x| T::lit(x / n.sqrt()));
            }
        };
        let sd = TwoFormPoint::new([v[0], v[1], v[2], v[2], -v[1], v[0]]);
        let asd = TwoFormPoint::new([v[0], v[1], v[2], -v[2], v[1], -v[0]]);
        let scale = |s: TwoFormPoint<T>, x: TwoFormPoint<T>| {
            if x.norm2().sqrt() > thr {
                x
            } else {
                s * sqrt2
            }
        };
        let plus = scale(sd, split.plus);
        let minus = scale(asd, split.minus);
        let ad = canonicalize_with(&((plus + minus) * T::lit(0.5)), T::lit(1e-14));
        let t = term_in_basis(slate, &ad.basis);
        k = [k[0].min(t.k), k[1].max(t.k)];
        r = [r[0].min(t.r1234), r[1].max(t.r1234)];
    }
    CurvatureTermRange { k, r1234: r }
}

/// Curvature operator on `Λ²` in the orthonormal basis `PAIRS`:
/// `⟨ℛ(e_i∧e_j), e_k∧e_l⟩ = R_ijkl`.
pub fn curvature_operator<T: Real>(slate: &CurvatureSlate<T>) -> [[T; 6]; 6] {
    std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            let (i, j) = PAIRS[a];
            let (k, l) = PAIRS[b];
            slate.r[i][j][k][l]
        })
    })
}

/// Orthonormal basis of the orthogonal complement of `span(u, v)`.
pub fn orthogonal_plane<T: Real>(u: &Vec4<T>, v: &Vec4<T>) -> Result<[Vec4<T>; 2], GeometryError> {
    let id = linalg::identity::<T>();
    let basis = orthonormal_pair(u, v)?;
    let mut cands: Vec<Vec4<T>> = (0..4)
        .map(|k| {
            let mut w = id[k];
            for b in &basis {
                let c = linalg::dot(b, &w);
                w = std::array::from_fn(|i| w[i] - c * b[i]);
            }
            w
        })
        .collect();
    cands.sort_by(|a, b| {
        linalg::dot(b, b).partial_cmp(&linalg::dot(a, a)).unwrap_or(std::cmp::Ordering::Equal)
    });
    orthonormal_pair(&cands[0], &cands[1]).or_else(|_| orthonormal_pair(&cands[0], &cands[2]))
}

fn orthonormal_pair<T: Real>(u: &Vec4<T>, v: &Vec4<T>) -> Result<[Vec4<T>; 2], GeometryError> {
    let nu = linalg::dot(u, u).sqrt();
    if !(nu > T::epsilon()) {
        return Err(GeometryError::DegeneratePlane);
    }
    let a = u.map(|x| x / nu);
    let c = linalg::dot(&a, v);
    let w: Vec4<T> = std::array::from_fn(|i| v[i] - c * a[i]);
    let nw = linalg::dot(&w, &w).sqrt();
    if !(nw > T::epsilon().sqrt() * linalg::dot(v, v).sqrt()) {
        return Err(GeometryError::DegeneratePlane);
    }
    Ok([a, w.map(|x| x / nw)])
}

/// `sec⊥(σ) = ½(sec(σ) + sec(σ⊥))` for `σ = span(u, v)` (frame components).
pub fn biorthogonal<T: Real>(slate: &CurvatureSlate<T>, u: &Vec4<T>, v: &Vec4<T>) -> Result<T, GeometryError> {
    let [a, b] = orthogonal_plane(u, v)?;
    Ok(T::lit(0.5) * (slate.sectional(u, v)? + slate.sectional(&a, &b)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaneObjective {
    Sectional,
    NegSectional,
    Biorthogonal,
}

/// Minimum of a plane function over `G(2,4)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneMinimum<T> {
    pub value: T,
    pub plane: [Vec4<T>; 2],
    /// Minimum over the coarse random sample.
    pub sample_min: T,
    pub samples: usize,
    /// Refined value does not exceed the sample minimum by more than `1e-4`.
    pub certified: bool,
}

fn mat6_vec<T: Real>(m: &[[T; 6]; 6], v: &[T; 6]) -> [T; 6] {
    std::array::from_fn(|i| (0..6).map(|j| m[i][j] * v[j]).sum())
}

fn dot6<T: Real>(a: &[T; 6], b: &[T; 6]) -> T {
    (0..6).map(|i| a[i] * b[i]).sum()
}

fn project_sd<T: Real>(v: &[T; 6], sign: T) -> [T; 6] {
    let s = TwoFormPoint::new(*v).star().f;
    std::array::from_fn(|i| T::lit(0.5) * (v[i] + sign * s[i]))
}

fn unit6<T: Real>(v: [T; 6]) -> [T; 6] {
    let n = dot6(&v, &v).sqrt();
    v.map(|x| x / n)
}

/// Objective on `S²×S² ≅ G(2,4)` with `ω = (α + β)/√2` the unit plane form.
fn objective<T: Real>(r: &[[T; 6]; 6], kind: PlaneObjective, a: &[T; 6], b: &[T; 6]) -> T {
    let half = T::lit(0.5);
    match kind {
        PlaneObjective::Biorthogonal => half * (dot6(a, &mat6_vec(r, a)) + dot6(b, &mat6_vec(r, b))),
        PlaneObjective::Sectional | PlaneObjective::NegSectional => {
            let w: [T; 6] = std::array::from_fn(|i| a[i] + b[i]);
            let s = half * dot6(&w, &mat6_vec(r, &w));
            if kind == PlaneObjective::Sectional {
                s
            } else {
                -s
            }
        }
    }
}

fn gradient<T: Real>(r: &[[T; 6]; 6], kind: PlaneObjective, a: &[T; 6], b: &[T; 6]) -> ([T; 6], [T; 6]) {
    match kind {
        PlaneObjective::Biorthogonal => (mat6_vec(r, a), mat6_vec(r, b)),
        PlaneObjective::Sectional | PlaneObjective::NegSectional => {
            let w: [T; 6] = std::array::from_fn(|i| a[i] + b[i]);
            let g = mat6_vec(r, &w);
            if kind == PlaneObjective::Sectional {
                (g, g)
            } else {
                (g.map(|x| -x), g.map(|x| -x))
            }
        }
    }
}

fn plane_from_vectors<T: Real>(u: &Vec4<T>, v: &Vec4<T>) -> Option<([T; 6], [T; 6])> {
    let [a, b] = orthonormal_pair(u, v).ok()?;
    let w: [T; 6] = PAIRS.map(|(i, j)| a[i] * b[j] - a[j] * b[i]);
    let s = TwoFormPoint::new(w).star().f;
    let r = T::lit(0.5).sqrt();
    let al: [T; 6] = std::array::from_fn(|i| (w[i] + s[i]) * r);
    let be: [T; 6] = std::array::from_fn(|i| (w[i] - s[i]) * r);
    Some((al, be))
}

fn vectors_from_plane<T: Real>(a: &[T; 6], b: &[T; 6]) -> [Vec4<T>; 2] {
    let r = T::lit(0.5).sqrt();
    let w = TwoFormPoint::new(std::array::from_fn(|i| (a[i] + b[i]) * r)).to_skew();
    // W = p1 p2ᵀ − p2 p1ᵀ; columns of W lie in the plane
    let mut best = 0;
    let mut bn = T::neg_infinity();
    for k in 0..4 {
        let n: T = (0..4).map(|i| w[i][k] * w[i][k]).sum();
        if n > bn {
            bn = n;
            best = k;
        }
    }
    let p1 = normalize(std::array::from_fn(|i| w[i][best]));
    let p2 = normalize(linalg::mat_vec(&w, &p1));
    [p1, p2]
}

/// Coarse sampling of `samples` random planes followed by projected descent
/// from `starts` seeded starting planes.
pub fn minimize_plane<T: Real>(
    slate: &CurvatureSlate<T>,
    kind: PlaneObjective,
    samples: usize,
    starts: usize,
    seed: u64,
) -> PlaneMinimum<T> {
    let r = curvature_operator(slate);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rand_vec = |rng: &mut ChaCha8Rng| -> Vec4<T> { std::array::from_fn(|_| T::lit(rng.gen_range(-1.0..1.0))) };
    let mut sample_min = T::infinity();
    let mut best_sample = None;
    let mut pool = Vec::with_capacity(samples);
    for _ in 0..samples {
        let u = rand_vec(&mut rng);
        let v = rand_vec(&mut rng);
        if let Some((a, b)) = plane_from_vectors(&u, &v) {
            let val = objective(&r, kind, &a, &b);
            if val < sample_min {
                sample_min = val;
                best_sample = Some((a, b));
            }
            pool.push((a, b));
        }
    }
    let norm = r.iter().flatten().fold(T::zero(), |m, v| m + v.abs());
    let step = T::lit(0.25) / (norm + T::min_positive_value());
    let mut starts_v: Vec<([T; 6], [T; 6])> = Vec::with_capacity(starts + 1);
    if let Some(bs) = best_sample {
        starts_v.push(bs);
    }
    for _ in 0..starts {
        let u = rand_vec(&mut rng);
        let v = rand_vec(&mut rng);
        if let Some(p) = plane_from_vectors(&u, &v) {
            starts_v.push(p);
        }
    }
    let mut best = (T::infinity(), [T::zero(); 6], [T::zero(); 6]);
    for (mut a, mut b) in starts_v {
        let mut f = objective(&r, kind, &a, &b);
        for _ in 0..5000 {
            let (ga, gb) = gradient(&r, kind, &a, &b);
            let ga = project_sd(&ga, T::one());
            let gb = project_sd(&gb, -T::one());
            let ca = dot6(&ga, &a);
            let cb = dot6(&gb, &b);
            let ta: [T; 6] = std::array::from_fn(|i| ga[i] - ca * a[i]);
            let tb: [T; 6] = std::array::from_fn(|i| gb[i] - cb * b[i]);
            let na = unit6(std::array::from_fn(|i| a[i] - step * ta[i]));
            let nb = unit6(std::array::from_fn(|i| b[i] - step * tb[i]));
            let nf = objective(&r, kind, &na, &nb);
            let done = (f - nf).abs() <= T::epsilon() * (T::one() + f.abs());
            if nf <= f {
                a = na;
                b = nb;
                f = nf;
            }
            if done {
                break;
            }
        }
        if f < best.0 {
            best = (f, a, b);
        }
    }
    let plane = vectors_from_plane(&best.1, &best.2);
    let (value, sample_min) = match kind {
        PlaneObjective::NegSectional => (-best.0, -sample_min),
        _ => (best.0, sample_min),
    };
    let certified = match kind {
        PlaneObjective::NegSectional => value >= sample_min - T::lit(1e-4),
        _ => value <= sample_min + T::lit(1e-4),
    };
    PlaneMinimum { value, plane, sample_min, samples, certified }
}

/// Minimal biorthogonal curvature at a slate (64 starts, 10⁴ samples).
pub fn biorthogonal_min<T: Real>(slate: &CurvatureSlate<T>, seed: u64) -> PlaneMinimum<T> {
    minimize_plane(slate, PlaneObjective::Biorthogonal, 10_000, 64, seed)
}

/// `½(λ_min(A) + λ_min(C))` where `A`, `C` are the self-dual and
/// anti-self-dual diagonal blocks of the curvature operator.
pub fn biorthogonal_min_closed_form<T: Real>(slate: &CurvatureSlate<T>) -> T {
    let r = curvature_operator(slate);
    let s = T::lit(0.5).sqrt();
    let basis = |sign: T| -> [[T; 6]; 3] {
        [
            [s, T::zero(), T::zero(), T::zero(), T::zero(), sign * s],
            [T::zero(), s, T::zero(), T::zero(), -sign * s, T::zero()],
            [T::zero(), T::zero(), s, sign * s, T::zero(), T::zero()],
        ]
    };
    let block_min = |sign: T| -> T {
        let b = basis(sign);
        let mut m = vec![T::zero(); 9];
        for i in 0..3 {
            let rb = mat6_vec(&r, &b[i]);
            for j in 0..3 {
                m[i * 3 + j] = dot6(&b[j], &rb);
            }
        }
        linalg::sym_eigen(&m, 3).0[0]
    };
    T::lit(0.5) * (block_min(T::one()) + block_min(-T::one()))
}

/// Curvature extremes at one sample point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureSample {
    pub point: [f64; 4],
    pub sec_min: f64,
    pub sec_max: f64,
    pub biorthogonal_min: f64,
    pub scalar: f64,
    /// All three plane searches met their optimality check.
    pub certified: bool,
}

/// Curvature statistics over a sample of points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlobalCurvature {
    /// Estimated minimal sectional curvature.
    pub k_min: f64,
    pub sec_max: f64,
    pub biorthogonal_min: f64,
    pub points: usize,
    pub all_certified: bool,
    pub samples: Vec<CurvatureSample>,
}

/// Low-discrepancy points (Halton bases 2, 3, 5, 7) in a box.
pub fn halton_points(bx: &[[f64; 2]; 4], count: usize, seed: u64) -> Vec<[f64; 4]> {
    fn radical(mut i: u64, b: u64) -> f64 {
        let mut f = 1.0;
        let mut r = 0.0;
        while i > 0 {
            f /= b as f64;
            r += f * (i % b) as f64;
            i /= b;
        }
        r
    }
    // the seed shifts the sequence (Cranley–Patterson rotation)
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..1.0));
    let bases = [2u64, 3, 5, 7];
    (0..count)
        .map(|n| {
            std::array::from_fn(|d| {
                let u = (radical(n as u64 + 1, bases[d]) + shift[d]).fract();
                bx[d][0] + u * (bx[d][1] - bx[d][0])
            })
        })
        .collect()
}

pub fn global_curvature_stats(
    chart: &MetricChart<f64>,
    samples: usize,
    margin: f64,
    seed: u64,
) -> Result<GlobalCurvature, GeometryError> {
    let pts = halton_points(&chart.sampling_box(margin), samples.max(1), seed);
    let per: Vec<Result<CurvatureSample, GeometryError>> = pts
        .par_iter()
        .enumerate()
        .map(|(n, p)| {
            let s = LocalGeometry::at(chart, *p)?.slate(FrameChoice::CoordinateGramSchmidt)?;
            let seed_n = seed ^ (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
            let lo = minimize_plane(&s, PlaneObjective::Sectional, 2000, 16, seed_n);
            let hi = minimize_plane(&s, PlaneObjective::NegSectional, 2000, 16, seed_n ^ 1);
            let bo = minimize_plane(&s, PlaneObjective::Biorthogonal, 2000, 16, seed_n ^ 2);
            Ok(CurvatureSample {
                point: *p,
                sec_min: lo.value,
                sec_max: hi.value,
                biorthogonal_min: bo.value,
                scalar: s.scal,
                certified: lo.certified && hi.certified && bo.certified,
            })
        })
        .collect();
    let mut out = GlobalCurvature {
        k_min: f64::INFINITY,
        sec_max: f64::NEG_INFINITY,
        biorthogonal_min: f64::INFINITY,
        points: 0,
        all_certified: true,
        samples: Vec::with_capacity(per.len()),
    };
    for r in per {
        let c = r?;
        out.k_min = out.k_min.min(c.sec_min);
        out.sec_max = out.sec_max.max(c.sec_max);
        out.biorthogonal_min = out.biorthogonal_min.min(c.biorthogonal_min);
        out.all_certified &= c.certified;
        out.points += 1;
        out.samples.push(c);
    }
    Ok(out)
}
