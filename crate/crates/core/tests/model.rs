mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use obliquebart::data::{read_csv, standardize, CsvSchema, OutcomeScaling, Standardizer, Task};
use obliquebart::metrics::paired_one_sided_t;
use obliquebart::model::{calibrate_lambda, fit, FitSpec, PosteriorSamples};
use obliquebart::synthetic::{generate, SyntheticFn, SyntheticSpec};
use obliquebart::{Dataset, RuleMode};

#[test]
fn lambda_matches_incomplete_gamma_oracle() {
    let q01 = common::chi2_quantile(3.0, 0.1);
    assert!((q01 - 0.584_375).abs() < 1e-5, "{q01}");
    for (s2, nu, q) in [(1.0, 3.0, 0.9), (0.37, 3.0, 0.75), (2.0, 10.0, 0.99), (1.0, 3.0, 0.5)] {
        let oracle = s2 * common::chi2_quantile(nu, 1.0 - q) / nu;
        let lambda = calibrate_lambda(s2, nu, q).unwrap();
        assert!((lambda - oracle).abs() < 1e-8, "{lambda} vs {oracle}");
    }
    assert!((calibrate_lambda(1.0, 3.0, 0.9).unwrap() - 0.1948).abs() < 1e-4);
}

#[test]
fn paired_t_matches_integrated_density() {
    let a = [0.31, 0.52, 0.18, 0.93, 0.44, 0.27];
    let b = [0.40, 0.47, 0.49, 1.01, 0.61, 0.30];
    let test = paired_one_sided_t(&a, &b).unwrap();
    let oracle = common::student_t_cdf(test.t, 5.0);
    assert!((test.p_value - oracle).abs() < 1e-8, "{} vs {oracle}", test.p_value);
}

#[test]
fn outcome_scaling_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let y: Vec<f64> = (0..500).map(|_| rng.random_range(-40.0..250.0)).collect();
    let s = OutcomeScaling::fit(&y).unwrap();
    for &v in &y {
        assert!((s.from_std(s.to_std(v)) - v).abs() < 1e-12);
        assert!(s.to_std(v).abs() <= 1.0 + 1e-15);
    }
    assert_eq!(s.from_std(0.0), s.center);
}

fn synthetic(n: usize, seed: u64) -> (Dataset<f64>, Standardizer, obliquebart::RawTable) {
    let sim = generate(&SyntheticSpec {
        function: SyntheticFn::RotatedAxes,
        theta_param: 0.4,
        delta: 2.0,
        n,
        seed,
    })
    .unwrap();
    let (data, scaler) = standardize(&sim.table, Task::Regression).unwrap();
    (data, scaler, sim.table)
}

fn small_spec(seed: u64) -> FitSpec {
    FitSpec {
        num_trees: 10,
        burn: 50,
        kept: 30,
        seed,
        ..FitSpec::default()
    }
}

#[test]
fn predict_mean_is_average_of_draws() {
    let (data, scaler, _) = synthetic(200, 2);
    let post = fit(&data, &scaler, &small_spec(2)).unwrap();
    let preds = post.predict(&data.design).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let i = rng.random_range(0..200);
        let direct = post
            .draws
            .iter()
            .map(|e| scaler.outcome.from_std(e.predict(data.design.row(i)).unwrap()))
            .sum::<f64>()
            / post.draws.len() as f64;
        assert!((preds[i].mean - direct).abs() < 1e-10);
    }
}

#[test]
fn predict_is_row_order_invariant() {
    let (data, scaler, _) = synthetic(120, 4);
    let post = fit(&data, &scaler, &small_spec(4)).unwrap();
    let preds = post.predict(&data.design).unwrap();
    let order: Vec<usize> = (0..120).rev().collect();
    let shuffled = post.predict(&data.design.select(&order)).unwrap();
    for (k, &i) in order.iter().enumerate() {
        assert_eq!(shuffled[k], preds[i]);
    }
}

#[test]
fn same_seed_same_samples() {
    let (data, scaler, _) = synthetic(150, 5);
    let spec = FitSpec {
        chains: 3,
        ..small_spec(5)
    };
    let a = fit(&data, &scaler, &spec).unwrap();
    let b = fit(&data, &scaler, &spec).unwrap();
    assert_eq!(a.draws.len(), 90);
    assert_eq!(a.to_model_string().unwrap(), b.to_model_string().unwrap());
    assert_eq!(a.diagnostics_csv(), b.diagnostics_csv());
    let c = fit(&data, &scaler, &FitSpec { seed: 6, ..spec }).unwrap();
    assert_ne!(a.to_model_string().unwrap(), c.to_model_string().unwrap());
}

#[test]
fn model_file_round_trip_on_disk() {
    let (data, scaler, _) = synthetic(100, 7);
    let post = fit(&data, &scaler, &small_spec(7)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.model");
    post.save(&path).unwrap();
    let back = PosteriorSamples::<f64>::load(&path).unwrap();
    assert_eq!(back.predict(&data.design).unwrap(), post.predict(&data.design).unwrap());
    assert!(PosteriorSamples::<f64>::from_model_str("not a model").is_err());
    let text = post.to_model_string().unwrap();
    let truncated = &text[..text.len() / 2];
    assert!(PosteriorSamples::<f64>::from_model_str(truncated).is_err());
}

#[test]
fn kept_one_gives_one_draw() {
    let (data, scaler, _) = synthetic(60, 8);
    let post = fit(&data, &scaler, &FitSpec { kept: 1, ..small_spec(8) }).unwrap();
    assert_eq!(post.draws.len(), 1);
    let p = post.predict(&data.design).unwrap();
    assert!(p.iter().all(|p| p.lo == p.hi && p.mean == p.lo));
}

#[test]
fn classification_with_flat_draws_is_a_coin_flip() {
    let csv = "x,y\n0,0\n1,1\n2,0\n3,1\n";
    let schema = CsvSchema {
        outcome: Some("y".into()),
        ..CsvSchema::default()
    };
    let raw = read_csv(csv.as_bytes(), &schema).unwrap();
    let (data, scaler) = standardize::<f64>(&raw, Task::Classification).unwrap();
    let spec = FitSpec {
        task: Task::Classification,
        ..small_spec(9)
    };
    let mut post = fit(&data, &scaler, &spec).unwrap();
    for ens in &mut post.draws {
        for tree in &mut ens.trees {
            *tree = obliquebart::Tree64::constant(0.0);
        }
    }
    for p in post.predict(&data.design).unwrap() {
        assert_eq!(p.prob, Some(0.5));
        assert_eq!(p.label, Some(0));
    }
}

#[test]
fn schema_mismatch_is_rejected() {
    let (data, scaler, _) = synthetic(60, 10);
    let post = fit(&data, &scaler, &small_spec(10)).unwrap();
    let other = obliquebart::DesignMatrix::<f64>::from_rows(&[vec![0.0, 0.0, 0.0]]).unwrap();
    assert!(post.predict(&other).is_err());
}

#[test]
fn unseen_level_routes_away_from_subsets() {
    let mut csv = String::from("g,y\n");
    for i in 0..60 {
        let g = ["a", "b", "c"][i % 3];
        csv.push_str(&format!("{g},{}\n", if g == "a" { 5.0 } else { 0.0 }));
    }
    let schema = CsvSchema {
        outcome: Some("y".into()),
        categorical: vec!["g".into()],
        ..CsvSchema::default()
    };
    let raw = read_csv(csv.as_bytes(), &schema).unwrap();
    let (data, scaler) = standardize::<f64>(&raw, Task::Regression).unwrap();
    let post = fit(&data, &scaler, &small_spec(11)).unwrap();
    let test = read_csv("g,y\nzzz,0\n".as_bytes(), &schema).unwrap();
    let design = scaler.transform::<f64>(&test).unwrap().design;
    let p = post.predict(&design).unwrap();
    assert!(p[0].mean.is_finite());
}

#[test]
fn single_precision_fit() {
    let sim = generate(&SyntheticSpec {
        function: SyntheticFn::Sinusoid,
        theta_param: 0.3,
        delta: 1.0,
        n: 150,
        seed: 12,
    })
    .unwrap();
    let (data, scaler) = standardize::<f32>(&sim.table, Task::Regression).unwrap();
    let post = fit(&data, &scaler, &FitSpec { mode: RuleMode::Oblique, ..small_spec(12) }).unwrap();
    let preds = post.predict(&data.design).unwrap();
    assert!(preds.iter().all(|p| p.mean.is_finite()));
    let text = post.to_model_string().unwrap();
    let back = obliquebart::Posterior32::from_model_str(&text).unwrap();
    assert_eq!(back.to_model_string().unwrap(), text);
}
