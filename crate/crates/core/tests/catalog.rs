//! Catalog domains against their known symmetries.

use torussym::analyzer::{analyze, AnalysisOptions};
use torussym::sampling::{sample_accepted, stream_rng, uniform_on_circle, Stream};
use torussym::{
    apply_torus, gram, integer_kernel, membership, parse_profile, Complex64, DomainSpec, MethodRequest, MomentOptions,
    Policy, TorusAction,
};

fn catalog() -> Vec<DomainSpec> {
    vec![
        DomainSpec::polydisk(vec![1.0, 1.0]).unwrap(),
        DomainSpec::ball(2, 1.0).unwrap(),
        DomainSpec::ball(3, 1.5).unwrap(),
        DomainSpec::sheared_ball(),
        DomainSpec::profile(parse_profile("exp(-r^2)").unwrap()),
        DomainSpec::exp_profile(0).unwrap(),
        DomainSpec::exp_profile(1).unwrap(),
        DomainSpec::translated_disk_product(Complex64::new(0.5, 0.0), 1.0, 1.0).unwrap(),
        DomainSpec::quasi_circular_cubic(),
        DomainSpec::mixed_quasi_reinhardt(),
        DomainSpec::polydisk_difference(vec![2.0, 2.0], vec![1.0, 1.0]).unwrap(),
        DomainSpec::punctured_ball(1.0, vec![Complex64::new(0.0, 0.0); 2]).unwrap(),
    ]
}

fn mc(seed: u64, budget: u64) -> MomentOptions {
    MomentOptions {
        method: MethodRequest::MonteCarlo,
        budget,
        seed,
        truncation: None,
    }
}

#[test]
fn declared_actions_are_exact_symmetries() {
    for spec in catalog() {
        let action = spec.declared_action().expect("catalog entries declare an action").clone();
        let truncation = (!spec.is_bounded()).then_some(6.0);
        let samples = sample_accepted(&spec, 17, 10_000, truncation).unwrap();
        let mut rng = stream_rng(17, Stream::TorusParameters, 0);
        for z in &samples.points {
            let lambda: Vec<Complex64> = (0..action.rank()).map(|_| uniform_on_circle(&mut rng)).collect();
            let w = apply_torus(&action, &lambda, z).unwrap();
            assert!(membership(&spec, &w).unwrap(), "{}: {z:?} -> {w:?}", spec.describe());
        }
    }
}

#[test]
fn translated_disk_product_is_hartogs_in_second_coordinate_only() {
    let spec = DomainSpec::translated_disk_product(Complex64::new(0.5, 0.0), 1.0, 1.0).unwrap();
    for seed in 0..3 {
        let opts = AnalysisOptions {
            moments: mc(seed, 1_000_000),
            star_samples: 0,
            ..AnalysisOptions::default()
        };
        let report = analyze(&spec, &opts);
        let detected = report.detected_action.unwrap();
        assert!(detected.same_lattice(&TorusAction::new(2, vec![vec![0, 1]]).unwrap()), "{detected}");
        assert_eq!(report.classification.unwrap().hartogs_coords, vec![2]);
    }
}

#[test]
fn punctured_ball_report_matches_ball() {
    let opts = AnalysisOptions {
        degree_bound: Some(3),
        moments: mc(4, 500_000),
        star_samples: 2_000,
        ..AnalysisOptions::default()
    };
    let ball = analyze(&DomainSpec::ball(2, 1.0).unwrap(), &opts);
    let removed = vec![Complex64::new(0.25, 0.0), Complex64::new(0.0, -0.1)];
    let punct = analyze(&DomainSpec::punctured_ball(1.0, removed).unwrap(), &opts);
    assert_eq!(ball.gram, punct.gram);
    assert_eq!(ball.differences, punct.differences);
    assert_eq!(ball.detected_action, punct.detected_action);
    assert_eq!(ball.classification, punct.classification);
    assert_eq!(ball.condition_d, punct.condition_d);
    assert_eq!(ball.star_shaped, punct.star_shaped);
    assert!(punct.caveats.iter().any(|c| c.contains("int(closure(Omega))")));
    assert!(!ball.caveats.iter().any(|c| c.contains("removed point")));
}

#[test]
fn detected_lattice_shrinks_with_degree() {
    for spec in catalog() {
        let opts = mc(2, 300_000);
        let opts = MomentOptions {
            truncation: (!spec.is_bounded()).then_some(6.0),
            ..opts
        };
        let n = spec.dim();
        let mut previous: Option<TorusAction> = None;
        for degree in 1..=3 {
            let g = gram(&spec, degree, &opts).unwrap();
            let diffs = torussym::difference_set(&g, &Policy::scaled_to_volume(g.volume()));
            let lattice = integer_kernel(&diffs, n).unwrap();
            if let Some(p) = &previous {
                assert!(p.contains_lattice(&lattice), "{}: degree {degree}", spec.describe());
            }
            previous = Some(lattice);
        }
    }
}

#[test]
fn detection_never_reads_declared_action() {
    let spec = DomainSpec::quasi_circular_cubic();
    let relabeled = spec.clone().with_declared_action(TorusAction::identity(2)).unwrap();
    let opts = AnalysisOptions {
        degree_bound: Some(2),
        moments: mc(9, 400_000),
        ..AnalysisOptions::default()
    };
    assert_eq!(analyze(&spec, &opts).to_json().unwrap(), analyze(&relabeled, &opts).to_json().unwrap());
}
