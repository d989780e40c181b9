use curv4_core::expr::parse;
use curv4_core::forms::{d0, d1, d2, kaehler_form_exprs, random_analytic_form, ExprForm, FormAtPoint};
use curv4_core::geometry::{cp2_complex_structure, preset, FrameChoice, LocalGeometry, PresetId};
use curv4_core::jet::Jet3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn form(src: [&str; 6]) -> ExprForm {
    ExprForm::new(src.map(|s| parse(s).unwrap()))
}

fn product() -> PresetId {
    PresetId::ProductS2S2 { r1: 1.0, r2: 1.0 }
}

fn factor_volumes() -> ExprForm {
    form(["sin(x1)", "0", "0", "0", "0", "sin(x3)"])
}

fn kaehler() -> ExprForm {
    let g = PresetId::Cp2FubiniStudy.metric_exprs();
    ExprForm::new(kaehler_form_exprs(&g, &cp2_complex_structure()))
}

#[test]
fn exterior_derivative_squares_to_zero() {
    let p = [0.3, 1.2, -0.7, 0.5];
    let u = parse("sin(x1*x2) + x3^3*x4").unwrap().eval_jet(&p).unwrap();
    let a: [Jet3<f64>; 4] = ["x2*x3", "sin(x4)", "x1^2*x2", "exp(x3)"]
        .map(|s| parse(s).unwrap().eval_jet(&p).unwrap());
    let ddu = d1(&d0(&u));
    assert!(ddu.iter().flatten().all(|v| v.value().abs() < 1e-12 && v.d1(0).abs() < 1e-12));
    let dda = d2(&d1(&a));
    assert!(dda.iter().flatten().flatten().all(|v| v.value().abs() < 1e-12));
}

#[test]
fn flat_closed_forms() {
    let chart = preset::<f64>(&PresetId::FlatT4).unwrap();
    let phi = form(["0", "0", "0", "sin(x1)", "0", "0"]);
    let p = [0.9, 1.0, 2.0, 3.0];
    let geo = LocalGeometry::at(&chart, p).unwrap();
    let at = FormAtPoint::new(&geo, &phi).unwrap();
    // dφ = cos x1 dx1∧dx2∧dx3, δφ = 0
    let dphi = at.exterior();
    assert!((dphi[0][1][2].value() - p[0].cos()).abs() < 1e-12);
    assert!((dphi[1][2][0].value() - p[0].cos()).abs() < 1e-12);
    assert!(dphi[0][1][3].value().abs() < 1e-12);
    assert!(at.codifferential().iter().all(|v| v.value().abs() < 1e-12));
    // (dδ + δd) φ = −Σ ∂²φ = sin x1 dx2∧dx3
    let h = at.hodge_laplacian();
    assert!((h[1][2] - p[0].sin()).abs() < 1e-10);
    assert!((at.rough_laplacian()[1][2] + p[0].sin()).abs() < 1e-10);
    let s = geo.slate(FrameChoice::CoordinateGramSchmidt).unwrap();
    assert!(at.weitzenboeck(&s).residual < 1e-9);

    let c = ExprForm::constant([1.0, 2.0, 0.5, -1.0, 0.3, 0.7]);
    let at = FormAtPoint::new(&geo, &c).unwrap();
    assert!(at.hodge_laplacian().iter().flatten().all(|v| *v == 0.0));
    assert!(at.rough_laplacian().iter().flatten().all(|v| *v == 0.0));
}

#[test]
fn weitzenboeck_on_curved_presets() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for id in [PresetId::RoundS4 { r: 1.0 }, product(), PresetId::Cp2FubiniStudy] {
        let chart = preset::<f64>(&id).unwrap();
        let b = chart.sampling_box(0.05);
        for _ in 0..10 {
            let phi = random_analytic_form(&mut rng);
            let p: [f64; 4] = std::array::from_fn(|i| rng.gen_range(b[i][0]..b[i][1]));
            let geo = LocalGeometry::at(&chart, p).unwrap();
            let s = geo.slate(FrameChoice::CoordinateGramSchmidt).unwrap();
            let w = FormAtPoint::new(&geo, &phi).unwrap().weitzenboeck(&s);
            assert!(w.relative() < 1e-8, "{id}: {}", w.relative());
        }
    }
}

#[test]
fn unit_sphere_curvature_action_is_four() {
    let chart = preset::<f64>(&PresetId::RoundS4 { r: 1.0 }).unwrap();
    let geo = LocalGeometry::at(&chart, [0.1, 0.2, -0.3, 0.4]).unwrap();
    let s = geo.slate(FrameChoice::CoordinateGramSchmidt).unwrap();
    let phi = curv4_core::forms::TwoFormPoint::new([1.0, -2.0, 0.5, 0.25, 3.0, -1.5]);
    let c = curv4_core::forms::curvature_action(&s, &phi);
    assert!((c - phi * 4.0).max_abs() < 1e-10);
}

#[test]
fn parallel_harmonic_forms() {
    let cases: [(PresetId, ExprForm); 2] = [(product(), factor_volumes()), (PresetId::Cp2FubiniStudy, kaehler())];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (id, phi) in cases {
        let chart = preset::<f64>(&id).unwrap();
        let b = chart.sampling_box(0.05);
        for _ in 0..10 {
            let p: [f64; 4] = std::array::from_fn(|i| rng.gen_range(b[i][0]..b[i][1]));
            let geo = LocalGeometry::at(&chart, p).unwrap();
            let fr = geo.frame(FrameChoice::CoordinateGramSchmidt).unwrap();
            let at = FormAtPoint::new(&geo, &phi).unwrap();
            assert!(at.nabla_norm2(&fr) < 1e-9, "{id}");
            assert!(at.exterior().iter().flatten().flatten().all(|v| v.value().abs() < 1e-10));
            assert!(at.codifferential().iter().all(|v| v.value().abs() < 1e-10));
            assert!(at.hodge_laplacian().iter().flatten().all(|v| v.abs() < 1e-8));
            let dn = at.d_norm_norm2(1e-8).unwrap();
            assert!(dn < 1e-12);
            let fp = at.in_frame(&fr);
            let (f, g) = at.f_g_jets();
            let split = fp.sd_split();
            assert!((split.f - f.value()).abs() < 1e-12);
            assert!((split.g - g.value()).abs() < 1e-12);
            assert!(split.wedge_defect < 1e-12);
        }
    }
}

#[test]
fn conformal_change_of_codifferential() {
    let fexpr = "0.1*sin(x1)*cos(x3) + 0.05*x2";
    let f = parse(fexpr).unwrap();
    let base = preset::<f64>(&product()).unwrap();
    let conf = preset::<f64>(&PresetId::Conformal { base: Box::new(product()), f: f.clone() }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let b = base.sampling_box(0.05);
    for _ in 0..10 {
        let phi = random_analytic_form(&mut rng);
        let p: [f64; 4] = std::array::from_fn(|i| rng.gen_range(b[i][0]..b[i][1]));
        let w = (2.0 * f.eval_real(&p).unwrap()).exp();
        let g0 = LocalGeometry::at(&base, p).unwrap();
        let g1 = LocalGeometry::at(&conf, p).unwrap();
        let d0 = FormAtPoint::new(&g0, &phi).unwrap().codifferential();
        let d1 = FormAtPoint::new(&g1, &phi).unwrap().codifferential();
        for j in 0..4 {
            assert!((d1[j].value() - d0[j].value() / w).abs() < 1e-9);
        }
        // frame components scale by e^{-2f}, hence the star is unchanged
        let f0 = g0.frame(FrameChoice::CoordinateGramSchmidt).unwrap();
        let f1 = g1.frame(FrameChoice::CoordinateGramSchmidt).unwrap();
        let a = FormAtPoint::new(&g0, &phi).unwrap().in_frame(&f0);
        let c = FormAtPoint::new(&g1, &phi).unwrap().in_frame(&f1);
        assert!((c * w - a).max_abs() < 1e-12);
        assert!((c.star() * w - a.star()).max_abs() < 1e-12);
    }
    // harmonic stays harmonic
    let geo = LocalGeometry::at(&conf, [1.0, 2.0, 1.5, 3.0]).unwrap();
    let h = FormAtPoint::new(&geo, &factor_volumes()).unwrap().hodge_laplacian();
    assert!(h.iter().flatten().all(|v| v.abs() < 1e-8));
}

#[test]
fn classical_kato_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let chart = preset::<f64>(&PresetId::Cp2FubiniStudy).unwrap();
    let b = chart.sampling_box(0.05);
    for _ in 0..50 {
        let phi = random_analytic_form(&mut rng);
        let p: [f64; 4] = std::array::from_fn(|i| rng.gen_range(b[i][0]..b[i][1]));
        let geo = LocalGeometry::at(&chart, p).unwrap();
        let fr = geo.frame(FrameChoice::CoordinateGramSchmidt).unwrap();
        let at = FormAtPoint::new(&geo, &phi).unwrap();
        if let Some(dn) = at.d_norm_norm2(1e-8) {
            assert!(at.nabla_norm2(&fr) >= dn - 1e-9);
        }
    }
}
