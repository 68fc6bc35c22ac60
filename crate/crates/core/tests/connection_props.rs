use std::sync::{Arc, OnceLock};

use lsub_core::catalog;
use lsub_core::geometry::{bracket_jets, jetlin, Chart, VectorField};
use proptest::prelude::*;

fn charts() -> &'static [Chart] {
    static CHARTS: OnceLock<Vec<Chart>> = OnceLock::new();
    CHARTS.get_or_init(|| {
        let mut out = Vec::new();
        for name in [
            "model-r2n1(2,-1)",
            "model-r2n1(1,1)",
            "ls-r5-r2",
            "lps-r7-r5",
            "product-control",
        ] {
            let m = catalog::load_example(name).unwrap();
            out.push(m.chart().clone());
            if let Some(map) = &m.map {
                out.push(map.target.clone());
            }
        }
        out
    })
}

fn field(coords: &Arc<[String]>, c: &[f64]) -> VectorField {
    let n = coords.len();
    let src: Vec<String> = (0..n)
        .map(|k| {
            let (a, b) = (&coords[(k + 1) % n], &coords[(k + 2) % n]);
            format!("({}) + ({})*{a} + ({})*{a}*{b}", c[3 * k], c[3 * k + 1], c[3 * k + 2])
        })
        .collect();
    VectorField::parse(&src, coords).unwrap()
}

fn scalar_src(coords: &Arc<[String]>, c: &[f64]) -> String {
    let n = coords.len();
    format!(
        "({}) + ({})*{}*{} + ({})*{}",
        c[0],
        c[1],
        coords[0],
        coords[n - 1],
        c[2],
        coords[n / 2]
    )
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn setup(which: usize, point: &[f64]) -> (&'static Chart, Arc<[String]>, Vec<f64>) {
    let chart = &charts()[which % charts().len()];
    let coords = chart.coords().clone();
    let p = point[..chart.dim()].to_vec();
    (chart, coords, p)
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0..1.0f64, 21)
}

fn points() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-0.8..0.8f64, 7)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn connection_is_torsion_free(which in 0usize..16, cx in coeffs(), cy in coeffs(), point in points()) {
        let (chart, coords, p) = setup(which, &point);
        let Ok(pg) = chart.at(&p) else { return Ok(()) };
        let x = field(&coords, &cx).jets(&p).unwrap();
        let y = field(&coords, &cy).jets(&p).unwrap();
        let t = jetlin::sub(&jetlin::sub(&pg.cov_deriv(&x, &y), &pg.cov_deriv(&y, &x)), &bracket_jets(&x, &y));
        prop_assert!(max_abs(&jetlin::values(&t)) <= 1e-9);
    }

    #[test]
    fn connection_is_metric_compatible(
        which in 0usize..16, cx in coeffs(), cy in coeffs(), cz in coeffs(), point in points()
    ) {
        let (chart, coords, p) = setup(which, &point);
        let Ok(pg) = chart.at(&p) else { return Ok(()) };
        let x = field(&coords, &cx).jets(&p).unwrap();
        let y = field(&coords, &cy).jets(&p).unwrap();
        let z = field(&coords, &cz).jets(&p).unwrap();
        let lhs = pg.inner(&y, &z).derivative_along(&x).value;
        let rhs = pg.inner(&pg.cov_deriv(&x, &y), &z).value + pg.inner(&y, &pg.cov_deriv(&x, &z)).value;
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn covariant_derivative_obeys_leibniz_rule(
        which in 0usize..16, cx in coeffs(), cy in coeffs(), cf in proptest::collection::vec(-1.0..1.0f64, 3), point in points()
    ) {
        let (chart, coords, p) = setup(which, &point);
        let Ok(pg) = chart.at(&p) else { return Ok(()) };
        let f_src = scalar_src(&coords, &cf);
        let y_field = field(&coords, &cy);
        let fy_src: Vec<String> = y_field.components().iter().map(|c| format!("({f_src})*({c})")).collect();
        let fy = VectorField::parse(&fy_src, &coords).unwrap().jets(&p).unwrap();
        let f = chart.parse_scalar(&f_src).unwrap().eval_jet2(&p).unwrap();
        let x = field(&coords, &cx).jets(&p).unwrap();
        let y = y_field.jets(&p).unwrap();
        let lhs = jetlin::values(&pg.cov_deriv(&x, &fy));
        let xf = f.derivative_along(&x).value;
        let nabla_y = jetlin::values(&pg.cov_deriv(&x, &y));
        let rhs: Vec<f64> = (0..y.len()).map(|k| xf * y[k].value + f.value * nabla_y[k]).collect();
        let diff: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        prop_assert!(max_abs(&diff) <= 1e-9 * (1.0 + max_abs(&rhs)));

        let fx: Vec<f64> = jetlin::values(&x).iter().map(|v| f.value * v).collect();
        let fx_jets = VectorField::constant(&fx, &coords).jets(&p).unwrap();
        let scaled = jetlin::values(&pg.cov_deriv(&fx_jets, &y));
        let diff: Vec<f64> = scaled.iter().zip(&nabla_y).map(|(a, b)| a - f.value * b).collect();
        prop_assert!(max_abs(&diff) <= 1e-9 * (1.0 + max_abs(&nabla_y)));
    }

    #[test]
    fn christoffels_match_finite_differences_of_metric(which in 0usize..16, point in points()) {
        let (chart, _, p) = setup(which, &point);
        let Ok(pg) = chart.at(&p) else { return Ok(()) };
        let n = chart.dim();
        let h = 1e-5;
        let dg: Vec<_> = (0..n)
            .map(|k| {
                let (mut a, mut b) = (p.clone(), p.clone());
                a[k] += h;
                b[k] -= h;
                (chart.metric_at(&a).unwrap() - chart.metric_at(&b).unwrap()) / (2.0 * h)
            })
            .collect();
        let g_inv = chart.metric_at(&p).unwrap().try_inverse().unwrap();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let fd: f64 = (0..n)
                        .map(|l| 0.5 * g_inv[(k, l)] * (dg[i][(l, j)] + dg[j][(l, i)] - dg[l][(i, j)]))
                        .sum();
                    let ad = pg.gamma(k, i, j).value;
                    prop_assert!((ad - fd).abs() <= 1e-6 * (1.0 + fd.abs()), "gamma^{k}_{i}{j}: {ad} vs {fd}");
                }
            }
        }
    }
}
