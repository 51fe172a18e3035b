//! Moment engine against independent numerical oracles.

use std::f64::consts::PI;

use torussym::{
    ball_norm_closed_form, gram, inner_product, DomainSpec, GramData, MethodRequest, MomentMethod, MomentOptions,
    MultiIndex,
};

/// `(2 pi)^2 int int_{r1^2 + r2^2 < R^2} r1^(2a+1) r2^(2b+1) dr1 dr2` by a
/// tensor midpoint rule in polar coordinates of the quarter disk.
fn ball_norm_oracle(radius: f64, a: u32, b: u32) -> f64 {
    let steps = 2000;
    let mut total = 0.0;
    for i in 0..steps {
        let rho = radius * (i as f64 + 0.5) / steps as f64;
        for j in 0..steps {
            let theta = 0.5 * PI * (j as f64 + 0.5) / steps as f64;
            let (r1, r2) = (rho * theta.cos(), rho * theta.sin());
            total += r1.powi(2 * a as i32 + 1) * r2.powi(2 * b as i32 + 1) * rho;
        }
    }
    4.0 * PI * PI * total * (radius / steps as f64) * (0.5 * PI / steps as f64)
}

#[test]
fn ball_closed_form_matches_polar_oracle() {
    for (a, b) in [(0, 0), (1, 0), (2, 1), (3, 0)] {
        let closed = ball_norm_closed_form(2, 1.3, &MultiIndex::new(vec![a, b]));
        let oracle = ball_norm_oracle(1.3, a, b);
        assert!(((closed - oracle) / oracle).abs() < 1e-5, "({a},{b}): {closed} vs {oracle}");
    }
}

#[test]
fn monte_carlo_within_four_standard_errors() {
    let specs = [DomainSpec::polydisk(vec![1.0, 0.5]).unwrap(), DomainSpec::ball(2, 1.0).unwrap()];
    let mut total = 0;
    let mut outside = 0;
    for spec in &specs {
        let exact = gram(spec, 3, &MomentOptions::default()).unwrap();
        assert_eq!(exact.get(0, 0).method, MomentMethod::ClosedForm);
        for seed in 0..5 {
            let opts = MomentOptions {
                method: MethodRequest::MonteCarlo,
                budget: 400_000,
                seed,
                truncation: None,
            };
            let est = gram(spec, 3, &opts).unwrap();
            for i in 0..est.indices().len() {
                for j in 0..est.indices().len() {
                    let (e, x) = (est.get(i, j), exact.get(i, j));
                    total += 1;
                    if (e.value - x.value).norm() > 4.0 * e.std_error {
                        outside += 1;
                    }
                }
            }
        }
    }
    assert!(outside * 100 <= total, "{outside} of {total} entries outside 4 SE");
}

#[test]
fn gram_json_survives_a_file_round_trip() {
    let spec = DomainSpec::quasi_circular_cubic();
    let opts = MomentOptions {
        method: MethodRequest::MonteCarlo,
        budget: 100_000,
        seed: 3,
        truncation: None,
    };
    let g = gram(&spec, 2, &opts).unwrap();
    let dir = std::env::temp_dir().join(format!("torussym-gram-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("gram.json");
    std::fs::write(&path, g.to_json().unwrap()).unwrap();
    let back = GramData::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, g);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn single_moment_matches_gram_entry() {
    let spec = DomainSpec::sheared_ball();
    let opts = MomentOptions {
        method: MethodRequest::MonteCarlo,
        budget: 200_000,
        seed: 5,
        truncation: None,
    };
    let a = MultiIndex::new(vec![1, 0]);
    let b = MultiIndex::new(vec![0, 1]);
    let single = inner_product(&spec, &a, &b, &opts).unwrap();
    let g = gram(&spec, 1, &opts).unwrap();
    assert_eq!(&single, g.entry(&a, &b).unwrap());
}
