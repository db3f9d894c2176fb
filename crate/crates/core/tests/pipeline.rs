//! Cross-module checks: sampler output through functionals, measures and I/O.

use gibbs_geom::estimators::{
    build_measure, integrate, run_experiment, ExperimentKind, ExperimentSetup, Targets,
    TestFunction,
};
use gibbs_geom::functionals::{AnyFunctional, Count, Functional, KnnLength, Rsa};
use gibbs_geom::geometry::io::{read_csv, write_csv};
use gibbs_geom::geometry::{PointConfiguration, Window};
use gibbs_geom::potentials::{add_one, HardCore, NoInteraction, Strauss};
use gibbs_geom::rng::{Purpose, StreamFactory};
use gibbs_geom::sampler::{perfect_sample, rejection_oracle, SamplerOptions, SamplingMode};
use gibbs_geom::stats::{mean, std_error};

#[test]
fn marked_sample_round_trips_through_csv() {
    let w = Window::new(4.0, 2).unwrap();
    let opts = SamplerOptions {
        with_marks: true,
        ..SamplerOptions::default()
    };
    let hc = HardCore::new(0.2).unwrap();
    let r = perfect_sample(&w, 1.0, &hc, &StreamFactory::new(1), 0, &opts).unwrap();
    assert!(r.configuration.marks().is_some());
    let mut buf = Vec::new();
    write_csv(&r.configuration, &mut buf).unwrap();
    let back = read_csv::<f64, _>(&buf[..]).unwrap();
    assert_eq!(back, r.configuration);
    // RSA needs the marks the sampler attached.
    let packed = Rsa.values(&back).unwrap();
    assert!(packed.iter().any(|v| *v == 1.0));
}

#[test]
fn samples_are_feasible_subsets_of_the_free_snapshot() {
    let w = Window::new(3.0, 2).unwrap();
    let strauss = Strauss::new(1.0, 0.5).unwrap();
    let hc = HardCore::new(0.15).unwrap();
    let streams = StreamFactory::new(9);
    for rep in 0..20 {
        let r = perfect_sample(&w, 1.5, &hc, &streams, rep, &SamplerOptions::default()).unwrap();
        for (i, p) in r.configuration.iter().enumerate() {
            assert!(r.free_configuration.position_of(p).is_some());
            let others: Vec<_> = r
                .configuration
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| *q)
                .collect();
            let others = PointConfiguration::from_points(2, others).unwrap();
            assert!(add_one::<f64, _>(&hc, p, &others).is_finite());
        }
        let s = perfect_sample(&w, 1.5, &strauss, &streams, rep, &SamplerOptions::default())
            .unwrap();
        assert!(s.configuration.len() <= s.free_configuration.len());
    }
}

#[test]
fn single_precision_sampler_runs() {
    let w = Window::<f32>::new(3.0, 2).unwrap();
    let hc = HardCore::<f32>::new(0.2).unwrap();
    let r = perfect_sample(&w, 1.0f32, &hc, &StreamFactory::new(2), 0, &SamplerOptions::default())
        .unwrap();
    let v = KnnLength::new(1).unwrap().values(&r.configuration).unwrap();
    assert_eq!(v.len(), r.configuration.len());
    assert!(v.iter().all(|x| x.is_finite() && *x >= 0.0));
}

#[test]
fn finite_volume_mean_count_matches_rejection_oracle() {
    let w = Window::new(1.0, 2).unwrap();
    let hc = HardCore::new(0.15).unwrap();
    let streams = StreamFactory::new(77);
    let n = 3000;
    let perfect: Vec<f64> = (0..n)
        .map(|rep| {
            perfect_sample(&w, 1.5, &hc, &streams, rep, &SamplerOptions::default())
                .unwrap()
                .configuration
                .len() as f64
        })
        .collect();
    let oracle: Vec<f64> = (0..n)
        .map(|rep| {
            let mut rng = streams.stream(rep, Purpose::Oracle);
            rejection_oracle(&w, 1.5, &hc, &mut rng).unwrap().len() as f64
        })
        .collect();
    let se = (std_error(&perfect).powi(2) + std_error(&oracle).powi(2)).sqrt();
    let diff = (mean(&perfect) - mean(&oracle)).abs();
    assert!(diff < 4.0 * se, "perfect {} vs oracle {}", mean(&perfect), mean(&oracle));
}

#[test]
fn measure_of_a_sample_integrates_to_its_total_score() {
    let lambda = 200.0;
    let w = Window::from_volume(lambda, 2).unwrap();
    let opts = SamplerOptions {
        mode: SamplingMode::Thermodynamic { margin: 1.0 },
        ..SamplerOptions::default()
    };
    let hc = HardCore::new(0.2).unwrap();
    let r = perfect_sample(&w, 1.0, &hc, &StreamFactory::new(4), 0, &opts).unwrap();
    let f = AnyFunctional::KnnLength(KnnLength::new(1).unwrap());
    let mu = build_measure(&r.configuration, &f, lambda).unwrap();
    let total: f64 = f.values(&r.configuration).unwrap().iter().sum();
    let got = integrate(&mu, &TestFunction::one());
    assert!((got - total).abs() < 1e-9 * total.max(1.0));
    let lower = integrate(
        &mu,
        &TestFunction::HalfIndicator {
            axis: 0,
            lower: true,
        },
    );
    assert!(lower > 0.0 && lower < got);
}

#[test]
fn poisson_law_of_large_numbers_hits_the_intensity() {
    let setup = ExperimentSetup {
        dim: 1,
        tau: 2.0,
        lambdas: vec![100.0],
        reps: 200,
        test_functions: vec![TestFunction::one()],
        sampler: SamplerOptions::default(),
        bootstrap: 0,
    };
    let r = run_experiment(
        ExperimentKind::Wlln,
        &NoInteraction,
        &AnyFunctional::Count(Count),
        &setup,
        Targets {
            e: Some(1.0),
            v: None,
        },
        &StreamFactory::new(3),
    )
    .unwrap();
    let row = &r.rows[0];
    assert_eq!(row.target, Some(2.0));
    assert!((row.normalized_stat - 2.0).abs() < 4.0 * row.std_error, "{row:?}");
}
