use std::sync::Arc;

use curv4_core::expr::parse;
use curv4_core::geometry::{
    cp2_complex_structure, normal_chart, preset, ExprScalar, FrameChoice, LocalGeometry,
    MetricChart, PresetId, PulledBackMetric, QuadraticMap,
};
use curv4_core::linalg::{bilinear, Mat4, Vec4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_point(rng: &mut ChaCha8Rng, chart: &MetricChart<f64>) -> [f64; 4] {
    let b = chart.sampling_box(0.05);
    std::array::from_fn(|i| rng.gen_range(b[i][0]..b[i][1]))
}

fn random_vec(rng: &mut ChaCha8Rng) -> Vec4<f64> {
    std::array::from_fn(|_| rng.gen_range(-1.0..1.0))
}

#[test]
fn flat_torus_has_no_christoffels_or_curvature() {
    let chart = preset::<f64>(&PresetId::FlatT4).unwrap();
    let geo = LocalGeometry::at(&chart, [1.0, 2.0, 3.0, 4.0]).unwrap();
    assert!(geo.christoffel().iter().flatten().flatten().all(|v| *v == 0.0));
    let s = geo.slate(FrameChoice::CoordinateGramSchmidt).unwrap();
    assert!(s.max_abs() < 1e-12);
}

#[test]
fn sphere_factor_christoffel_table() {
    let chart = preset::<f64>(&PresetId::ProductS2S2 { r1: 1.0, r2: 1.0 }).unwrap();
    let th = 0.7f64;
    let geo = LocalGeometry::at(&chart, [th, 1.0, 1.2, 2.0]).unwrap();
    let g = geo.christoffel();
    assert!((g[0][1][1] + th.sin() * th.cos()).abs() < 1e-14);
    assert!((g[1][0][1] - th.cos() / th.sin()).abs() < 1e-14);
    assert!((g[1][1][0] - th.cos() / th.sin()).abs() < 1e-14);
    assert!(g[0][0][0].abs() < 1e-15);
}

#[test]
fn conformal_flat_christoffel_identity() {
    let f = parse("0.3*sin(x1)*cos(x2) + 0.2*x3*x4").unwrap();
    let chart = preset::<f64>(&PresetId::Conformal { base: Box::new(PresetId::FlatT4), f }).unwrap();
    let p = [0.4f64, 1.1, 2.3, 0.9];
    let df = [
        0.3 * p[0].cos() * p[1].cos(),
        -0.3 * p[0].sin() * p[1].sin(),
        0.2 * p[3],
        0.2 * p[2],
    ];
    let gam = LocalGeometry::at(&chart, p).unwrap().christoffel();
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                let want = d(i, j) * df[k] + d(i, k) * df[j] - d(j, k) * df[i];
                assert!((gam[i][j][k] - want).abs() < 1e-13, "{i}{j}{k}");
            }
        }
    }
}

#[test]
fn round_sphere_constant_curvature() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for r in [0.5, 1.0, 2.0] {
        let chart = preset::<f64>(&PresetId::RoundS4 { r }).unwrap();
        for _ in 0..50 {
            let p = random_point(&mut rng, &chart);
            let s = LocalGeometry::at(&chart, p)
                .unwrap()
                .slate(FrameChoice::CoordinateGramSchmidt)
                .unwrap();
            let sec = s.sectional(&random_vec(&mut rng), &random_vec(&mut rng)).unwrap();
            assert!((sec - 1.0 / (r * r)).abs() < 1e-9, "r={r} sec={sec}");
            assert!((s.scal - 12.0 / (r * r)).abs() < 1e-8);
            assert!(s.symmetry_defect() < 1e-9);
            assert!(s.bianchi_defect() < 1e-9);
        }
    }
}

/// `R(X,Y,Z,W)` of a complex space form with holomorphic curvature 4.
fn cp2_oracle(g: &Mat4<f64>, j: &Mat4<f64>, v: [&Vec4<f64>; 4]) -> f64 {
    let ip = |a: &Vec4<f64>, b: &Vec4<f64>| bilinear(g, a, b);
    let jv = |a: &Vec4<f64>| -> Vec4<f64> {
        std::array::from_fn(|i| (0..4).map(|k| j[i][k] * a[k]).sum())
    };
    let [x, y, z, w] = v;
    ip(x, z) * ip(y, w) - ip(x, w) * ip(y, z) + ip(&jv(x), z) * ip(&jv(y), w)
        - ip(&jv(x), w) * ip(&jv(y), z)
        + 2.0 * ip(&jv(x), y) * ip(&jv(z), w)
}

#[test]
fn cp2_matches_complex_space_form() {
    let chart = preset::<f64>(&PresetId::Cp2FubiniStudy).unwrap();
    let j = cp2_complex_structure::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let p = random_point(&mut rng, &chart);
        let geo = LocalGeometry::at(&chart, p).unwrap();
        let g = geo.metric();
        let s = geo.slate(FrameChoice::CoordinateGramSchmidt).unwrap();
        let e = s.frame.e;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let want = cp2_oracle(&g, &j, [&e[a], &e[b], &e[c], &e[d]]);
                        assert!((s.r[a][b][c][d] - want).abs() < 1e-7);
                    }
                }
            }
        }
        for _ in 0..10 {
            let sec = s.sectional(&random_vec(&mut rng), &random_vec(&mut rng)).unwrap();
            assert!((1.0 - 1e-8..=4.0 + 1e-8).contains(&sec));
        }
        // holomorphic plane span(e1, J e1)
        let u = e[0];
        let ju: Vec4<f64> = std::array::from_fn(|i| (0..4).map(|k| j[i][k] * u[k]).sum());
        let ju_frame: Vec4<f64> = std::array::from_fn(|a| bilinear(&g, &e[a], &ju));
        let sec = s.sectional(&[1.0, 0.0, 0.0, 0.0], &ju_frame).unwrap();
        assert!((sec - 4.0).abs() < 1e-8);
    }
}

#[test]
fn product_sectional_curvatures() {
    let chart = preset::<f64>(&PresetId::ProductS2S2 { r1: 1.0, r2: 1.0 }).unwrap();
    let s = LocalGeometry::at(&chart, [1.0, 2.0, 1.3, 4.0])
        .unwrap()
        .slate(FrameChoice::CoordinateGramSchmidt)
        .unwrap();
    let e = |i: usize| -> Vec4<f64> { std::array::from_fn(|k| if k == i { 1.0 } else { 0.0 }) };
    assert!(s.sectional(&e(0), &e(2)).unwrap().abs() < 1e-12);
    assert!((s.sectional(&e(0), &e(1)).unwrap() - 1.0).abs() < 1e-12);
    assert!((s.sectional(&e(2), &e(3)).unwrap() - 1.0).abs() < 1e-12);
    let u = [0.3, -1.0, 0.2, 0.5];
    let v = [1.0, 0.1, -0.4, 0.7];
    let w: Vec4<f64> = std::array::from_fn(|i| v[i] + 0.3 * u[i]);
    let a = s.sectional(&u, &v).unwrap();
    assert!((a - s.sectional(&v, &u).unwrap()).abs() < 1e-13);
    assert!((a - s.sectional(&u, &w).unwrap()).abs() < 1e-13);
    assert!(s.sectional(&u, &u).is_err());
}

#[test]
fn frame_choice_does_not_change_invariants() {
    let chart = preset::<f64>(&PresetId::Cp2FubiniStudy).unwrap();
    let p = [0.3, -0.2, 0.5, 0.1];
    let geo = LocalGeometry::at(&chart, p).unwrap();
    let g = geo.metric();
    let a = geo.slate(FrameChoice::CoordinateGramSchmidt).unwrap();
    // Gram–Schmidt in reverse coordinate order gives a different frame
    let rev: [Vec4<f64>; 4] =
        std::array::from_fn(|k| std::array::from_fn(|i| if i == 3 - k { 1.0 } else { 0.0 }));
    let f = curv4_core::linalg::gram_schmidt(&g, &rev).unwrap();
    let b = geo.slate(FrameChoice::Supplied(f)).unwrap();
    assert!((a.scal - b.scal).abs() < 1e-10);
    // the coordinate plane span(∂1, ∂3) seen from both frames
    let comps = |fr: &[Vec4<f64>; 4], v: &Vec4<f64>| -> Vec4<f64> {
        std::array::from_fn(|k| bilinear(&g, &fr[k], v))
    };
    let d1 = [1.0, 0.0, 0.0, 0.0];
    let d3 = [0.0, 0.0, 1.0, 0.0];
    let sa = a.sectional(&comps(&a.frame.e, &d1), &comps(&a.frame.e, &d3)).unwrap();
    let sb = b.sectional(&comps(&f, &d1), &comps(&f, &d3)).unwrap();
    assert!((sa - sb).abs() < 1e-10);
    let bad = [[1.0, 0.0, 0.0, 0.0]; 4];
    assert!(geo.slate(FrameChoice::Supplied(bad)).is_err());
}

#[test]
fn metric_compatibility_along_coordinate_lines() {
    let chart = preset::<f64>(&PresetId::Cp2FubiniStudy).unwrap();
    let p = [0.2, 0.4, -0.3, 0.6];
    let geo = LocalGeometry::at(&chart, p).unwrap();
    let v: [_; 4] = ["sin(x1)", "x2*x3", "1", "cos(x4)+x1"].map(|s| parse(s).unwrap());
    let w: [_; 4] = ["x3", "exp(x1)", "x2^2", "2"].map(|s| parse(s).unwrap());
    let vj: [_; 4] = std::array::from_fn(|i| v[i].eval_jet(&p).unwrap());
    let wj: [_; 4] = std::array::from_fn(|i| w[i].eval_jet(&p).unwrap());
    let mut inner = curv4_core::jet::Jet3::zero();
    for i in 0..4 {
        for j in 0..4 {
            inner += geo.g[i][j] * vj[i] * wj[j];
        }
    }
    let g = geo.metric();
    let gam = geo.christoffel();
    for k in 0..4 {
        let nab = |x: &[curv4_core::jet::Jet3<f64>; 4]| -> Vec4<f64> {
            std::array::from_fn(|i| x[i].d1(k) + (0..4).map(|j| gam[i][k][j] * x[j].value()).sum::<f64>())
        };
        let vv: Vec4<f64> = std::array::from_fn(|i| vj[i].value());
        let wv: Vec4<f64> = std::array::from_fn(|i| wj[i].value());
        let rhs = bilinear(&g, &nab(&vj), &wv) + bilinear(&g, &vv, &nab(&wj));
        assert!((inner.d1(k) - rhs).abs() < 1e-9);
    }
}

#[test]
fn sphere_charts_agree_at_shared_point() {
    // stereographic charts from opposite poles are related by x ↦ r² x / |x|²
    let r = 1.0;
    let chart = preset::<f64>(&PresetId::RoundS4 { r }).unwrap();
    let p = [0.5, 0.3, -0.4, 0.6];
    let n2: f64 = p.iter().map(|v| v * v).sum();
    let q: [f64; 4] = std::array::from_fn(|i| r * r * p[i] / n2);
    let jac: Mat4<f64> = std::array::from_fn(|i| {
        std::array::from_fn(|k| {
            let d = if i == k { 1.0 } else { 0.0 };
            r * r * (d / n2 - 2.0 * p[i] * p[k] / (n2 * n2))
        })
    });
    let u = [1.0, 0.2, 0.0, -0.3];
    let v = [0.0, 1.0, 0.5, 0.1];
    let push = |a: &Vec4<f64>| -> Vec4<f64> { std::array::from_fn(|i| (0..4).map(|k| jac[i][k] * a[k]).sum()) };
    let sec_in = |pt: [f64; 4], a: &Vec4<f64>, b: &Vec4<f64>| {
        let geo = LocalGeometry::at(&chart, pt).unwrap();
        let g = geo.metric();
        let s = geo.slate(FrameChoice::CoordinateGramSchmidt).unwrap();
        let c = |x: &Vec4<f64>| -> Vec4<f64> { std::array::from_fn(|k| bilinear(&g, &s.frame.e[k], x)) };
        s.sectional(&c(a), &c(b)).unwrap()
    };
    let a = sec_in(p, &u, &v);
    let b = sec_in(q, &push(&u), &push(&v));
    assert!((a - b).abs() < 1e-8);
}

#[test]
fn pulled_back_chart_is_the_same_manifold() {
    let f = parse("0.2*sin(x1)*cos(x3) + 0.1*x2").unwrap();
    let base = preset::<f64>(&PresetId::Conformal { base: Box::new(PresetId::FlatT4), f }).unwrap();
    let map = QuadraticMap {
        p: [3.0, 3.0, 3.0, 3.0],
        b: [[1.0, 0.2, 0.0, 0.0], [0.0, 0.9, 0.1, 0.0], [0.3, 0.0, 1.1, 0.0], [0.0, 0.0, 0.2, 1.0]],
        gamma: std::array::from_fn(|i| std::array::from_fn(|j| std::array::from_fn(|k| 0.05 * (i + j + k) as f64))),
    };
    let pulled = MetricChart::new(
        "pulled",
        [[-1.0, 1.0]; 4],
        1,
        Arc::new(PulledBackMetric { base: base.metric_field().clone(), map: Arc::new(map.clone()) }),
    );
    let y = [0.1, -0.2, 0.15, 0.05];
    let yj = curv4_core::jet::Jet3::lift_point(&y);
    let (xj, jac) = curv4_core::geometry::CoordinateMap::apply(&map, &yj);
    let x: [f64; 4] = std::array::from_fn(|i| xj[i].value());
    let jv: Mat4<f64> = std::array::from_fn(|i| std::array::from_fn(|a| jac[i][a].value()));
    let ga = LocalGeometry::at(&pulled, y).unwrap();
    let gb = LocalGeometry::at(&base, x).unwrap();
    let sa = ga.slate(FrameChoice::CoordinateGramSchmidt).unwrap();
    let sb = gb.slate(FrameChoice::CoordinateGramSchmidt).unwrap();
    assert!((sa.scal - sb.scal).abs() < 1e-9);
    let u = [1.0, 0.0, 0.3, 0.0];
    let v = [0.0, 1.0, 0.0, -0.4];
    let ma = ga.metric();
    let mb = gb.metric();
    let ca = |w: &Vec4<f64>| -> Vec4<f64> { std::array::from_fn(|k| bilinear(&ma, &sa.frame.e[k], w)) };
    let push = |w: &Vec4<f64>| -> Vec4<f64> { std::array::from_fn(|i| (0..4).map(|a| jv[i][a] * w[a]).sum()) };
    let cb = |w: &Vec4<f64>| -> Vec4<f64> { std::array::from_fn(|k| bilinear(&mb, &sb.frame.e[k], w)) };
    let s1 = sa.sectional(&ca(&u), &ca(&v)).unwrap();
    let s2 = sb.sectional(&cb(&push(&u)), &cb(&push(&v))).unwrap();
    assert!((s1 - s2).abs() < 1e-9, "{s1} {s2}");
}

#[test]
fn normal_chart_kills_christoffels_and_keeps_curvature() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for id in [PresetId::RoundS4 { r: 1.0 }, PresetId::Cp2FubiniStudy] {
        let chart = preset::<f64>(&id).unwrap();
        for _ in 0..5 {
            let p = random_point(&mut rng, &chart);
            let geo = LocalGeometry::at(&chart, p).unwrap();
            let g = geo.metric();
            let raw: [Vec4<f64>; 4] = std::array::from_fn(|_| random_vec(&mut rng));
            let basis = curv4_core::linalg::gram_schmidt(&g, &raw).unwrap();
            let n = normal_chart(&chart, p, &basis).unwrap();
            let ng = LocalGeometry::at(&n, [0.0; 4]).unwrap();
            assert!(ng.christoffel().iter().flatten().flatten().all(|v| v.abs() < 1e-9));
            let m = ng.metric();
            for i in 0..4 {
                for j in 0..4 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((m[i][j] - want).abs() < 1e-12);
                }
            }
            let rn = ng.riemann_coordinates();
            let s = geo.slate(FrameChoice::Supplied(basis)).unwrap();
            for a in 0..4 {
                for b in 0..4 {
                    for c in 0..4 {
                        for d in 0..4 {
                            assert!((rn[a][b][c][d] - s.r[a][b][c][d]).abs() < 1e-7);
                        }
                    }
                }
            }
        }
    }
    let flat = preset::<f64>(&PresetId::FlatT4).unwrap();
    let id4: [Vec4<f64>; 4] = curv4_core::linalg::identity();
    let n = normal_chart(&flat, [1.0; 4], &id4).unwrap();
    assert_eq!(n.metric_at(&[0.05, 0.0, -0.02, 0.01]).unwrap(), id4);
    let skew = [[2.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
    assert!(normal_chart(&flat, [1.0; 4], &skew).is_err());
}

#[test]
fn presets_basics() {
    let flat = preset::<f64>(&PresetId::FlatT4).unwrap();
    let p = [0.5, 1.5, 2.5, 3.5];
    assert_eq!(flat.metric_at(&p).unwrap(), curv4_core::linalg::identity());
    let c0 = preset::<f64>(&PresetId::Conformal {
        base: Box::new(PresetId::FlatT4),
        f: parse("0").unwrap(),
    })
    .unwrap();
    assert_eq!(c0.metric_at(&p).unwrap(), flat.metric_at(&p).unwrap());
    assert!(preset::<f64>(&PresetId::RoundS4 { r: -1.0 }).is_err());
    let _ = ExprScalar(parse("x1").unwrap());
}

#[test]
fn single_precision_curvature() {
    let chart = preset::<f32>(&PresetId::RoundS4 { r: 1.0 }).unwrap();
    let s = LocalGeometry::at(&chart, [0.3f32, 0.1, -0.2, 0.4])
        .unwrap()
        .slate(FrameChoice::CoordinateGramSchmidt)
        .unwrap();
    assert!((s.scal - 12.0).abs() < 1e-3);
}

#[test]
fn preset_names_round_trip() {
    let ids = [
        PresetId::FlatT4,
        PresetId::RoundS4 { r: 0.5 },
        PresetId::ProductS2S2 { r1: 1.0, r2: 2.5 },
        PresetId::Cp2FubiniStudy,
        PresetId::Conformal {
            base: Box::new(PresetId::ProductS2S2 { r1: 1.0, r2: 1.0 }),
            f: parse("0.1*sin(x1)*cos(x3)").unwrap(),
        },
    ];
    for id in ids {
        let back: PresetId = id.to_string().parse().unwrap();
        assert_eq!(back, id);
    }
    assert_eq!("round_s4".parse::<PresetId>().unwrap(), PresetId::RoundS4 { r: 1.0 });
    assert_eq!(" product_s2s2( 2 , 3 ) ".parse::<PresetId>().unwrap(), PresetId::ProductS2S2 { r1: 2.0, r2: 3.0 });
}

#[test]
fn bad_preset_names_are_explained() {
    for (src, needle) in [
        ("torus", "unknown preset `torus`"),
        ("round_s4(1, 2)", "takes 1 argument"),
        ("round_s4(-1)", "must be positive"),
        ("round_s4(abc)", "`abc` is not a number"),
        ("product_s2s2(1", "missing closing parenthesis"),
        ("conformal(flat_t4)", "takes 2 arguments"),
        ("conformal(flat_t4, sin()", "conformal factor"),
        ("conformal(flat_t4, 1 +)", "conformal factor"),
    ] {
        let e = src.parse::<PresetId>().unwrap_err().to_string();
        assert!(e.contains(needle), "{src}: {e}");
    }
}
