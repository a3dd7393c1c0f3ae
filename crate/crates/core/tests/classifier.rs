use circledyn::algebra::{parse_map, Moebius};
use circledyn::classifier::{theorem1_verdict, Verdict};
use circledyn::dynamics::julia_cloud;
use circledyn::geometry::{containment_residual, GeneralizedCircle};
use circledyn::{Complex64, RationalMap, SpherePoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_moebius(rng: &mut ChaCha8Rng) -> Moebius {
    loop {
        let mut c = || Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let (a, b, cc, d) = (c(), c(), c(), c());
        if (a * d - b * cc).norm() > 0.5 {
            return Moebius::new(a, b, cc, d).unwrap();
        }
    }
}

#[test]
fn verdict_survives_conjugation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cases = [
        ("z^2", Verdict::CircleCaseI),
        ("z^2-2", Verdict::CircleCaseIi),
        ("(z^2-4)/(1+0.25*z)", Verdict::CircleCaseIii),
        ("z^2+1", Verdict::NoRealStructure),
    ];
    for (expr, want) in cases {
        let f = parse_map(expr).unwrap();
        assert_eq!(theorem1_verdict(&f, 4).unwrap().verdict, want, "{expr}");
        for _ in 0..5 {
            let m = random_moebius(&mut rng);
            let g = f.conjugate(&m);
            let r = theorem1_verdict(&g, 4).unwrap();
            assert_eq!(r.verdict, want, "{expr} conjugated by {m:?}: {:?}", r.notes);
        }
    }
}

#[test]
fn interval_case_evidence() {
    let f = parse_map("z^2-2").unwrap();
    let r = theorem1_verdict(&f, 4).unwrap();
    assert_eq!(r.verdict, Verdict::CircleCaseIi);
    let (a, b) = r.interval_i.unwrap();
    let chart = r.interval_chart.unwrap();
    let cloud: Vec<SpherePoint> = julia_cloud(&f, 20_000, 5).unwrap();
    let mut xs: Vec<f64> = cloud.iter().map(|p| chart.apply(*p).as_real(1e-6).expect("real")).collect();
    assert!(xs.iter().all(|&x| x >= a - 1e-6 && x <= b + 1e-6));
    xs.sort_by(f64::total_cmp);
    let gap = xs.windows(2).map(|w| w[1] - w[0]).fold(xs[0] - a, f64::max).max(b - xs[xs.len() - 1]);
    assert!(gap <= 1e-3 * (b - a), "largest gap {gap}");
    assert!(r.residuals.interval_max_gap.unwrap() <= 1e-3);
    assert!(r.residuals.endpoint_residual.unwrap() <= 1e-9);
}

#[test]
fn circle_case_is_completely_invariant() {
    let f: RationalMap = parse_map("z^2").unwrap();
    let r = theorem1_verdict(&f, 4).unwrap();
    assert_eq!(r.verdict, Verdict::CircleCaseI);
    let circle = r.circle.unwrap();
    for w in circle.sample(64) {
        let pre = f.preimages(w).unwrap();
        assert_eq!(pre.len(), 2);
        assert!(containment_residual(&circle, &pre) < 1e-6);
    }
    let unit = GeneralizedCircle::unit_circle();
    assert!(containment_residual(&unit, &circle.sample(8)) < 1e-9);
}
