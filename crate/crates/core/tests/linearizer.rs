use circledyn::algebra::parse_map;
use circledyn::dynamics::periodic_points;
use circledyn::linearizer::{poincare_coeffs, poincare_eval, DEFAULT_ORDER};
use circledyn::{Complex64, RationalMap, SpherePoint};

fn repelling_fixed_points(f: &RationalMap) -> Vec<SpherePoint> {
    periodic_points(f, 1).unwrap().into_iter().filter(|o| o.is_repelling()).map(|o| o.points[0]).collect()
}

fn maps() -> Vec<(&'static str, RationalMap)> {
    ["z^2", "2*z^2-1", "z^2-2", "(z^2-4)/(1+0.25*z)", "z^2-0.75+0.1*z^3"]
        .into_iter()
        .map(|e| (e, parse_map(e).unwrap()))
        .collect()
}

fn samples(radius: f64) -> impl Iterator<Item = Complex64> {
    (0..100).map(move |k| Complex64::from_polar(radius * ((k % 10) as f64 + 1.0) / 10.0, k as f64 * 0.61))
}

#[test]
fn normalization_at_every_repelling_fixed_point() {
    for (name, f) in maps() {
        for p in repelling_fixed_points(&f) {
            let s = poincare_coeffs(&f, p, DEFAULT_ORDER).unwrap();
            assert_eq!(s.coeffs[0], Complex64::new(1.0, 0.0), "{name}");
            assert_eq!(s.eval_local(Complex64::new(0.0, 0.0)), p, "{name}");
        }
    }
}

#[test]
fn global_functional_equation() {
    for (name, f) in maps() {
        for p in repelling_fixed_points(&f) {
            let s = poincare_coeffs(&f, p, DEFAULT_ORDER).unwrap();
            for z in samples(10.0) {
                let lhs = poincare_eval(&s, &f, s.multiplier * z);
                let rhs = f.eval(poincare_eval(&s, &f, z));
                let d = lhs.chordal_distance(&rhs);
                assert!(d < 1e-6, "{name} at {p:?}: {d:e} for z = {z}");
            }
        }
    }
}

#[test]
fn rescaling_consistency() {
    for (name, f) in maps() {
        for p in repelling_fixed_points(&f) {
            let s = poincare_coeffs(&f, p, DEFAULT_ORDER).unwrap();
            for z in samples(10.0).step_by(7) {
                let direct = poincare_eval(&s, &f, z);
                for m in 1..=5 {
                    let inner = poincare_eval(&s, &f, z / s.multiplier.powu(m));
                    let lifted = f.iterate(inner, m as usize);
                    let d = direct.chordal_distance(&lifted);
                    assert!(d < 1e-6, "{name} at {p:?}, m = {m}: {d:e}");
                }
            }
        }
    }
}

#[test]
fn series_residual_on_quarter_disc_for_exponential() {
    let f = parse_map("z^2").unwrap();
    let s = poincare_coeffs(&f, SpherePoint::real(1.0), DEFAULT_ORDER).unwrap();
    for z in samples(s.conv_radius_estimate / 4.0) {
        let d = s.eval_local(s.multiplier * z).chordal_distance(&f.eval(s.eval_local(z)));
        assert!(d < 1e-8, "{d:e} at {z}");
    }
}
