mod common;

use common::{desk, triangle};
use linkfault::dataset::preprocess::{
    fit_preprocessor, Normalization, PreprocessParams, Preprocessor,
};
use linkfault::dataset::{
    generate_dataset, quantize_feature, Dataset, DatasetError, DatasetParams, LabelSpace,
};
use linkfault::flowsim::SimConfig;
use linkfault::linalg::Matrix;
use linkfault::topology::{enumerate_scenarios, FaultScenario, ScenarioKind};

fn params(samples_per_class: usize) -> DatasetParams {
    DatasetParams {
        samples_per_class,
        demand_range_mbps: (1.0, 300.0),
        demand_seed: 11,
        noise_seed: 12,
    }
}

fn triangle_stage1(samples_per_class: usize) -> Dataset {
    let t = triangle();
    let scenarios =
        enumerate_scenarios(&t, &[ScenarioKind::NoFault, ScenarioKind::Disconnection], 0);
    generate_dataset(&t, &scenarios, &params(samples_per_class), &SimConfig::default()).unwrap()
}

// --- label space ---

#[test]
fn stage1_label_space_counts_no_fault_plus_removable_links() {
    let t = desk();
    let space = LabelSpace::stage1(&t);
    assert_eq!(space.len(), t.removable_links().len() + 1);
    assert_eq!(*space.class(0), FaultScenario::NoFault);
    // Ids are stable under a serialization round-trip.
    let json = serde_json::to_string(&space).unwrap();
    let back: LabelSpace = serde_json::from_str(&json).unwrap();
    assert_eq!(back, space);
    for (id, class) in space.classes().iter().enumerate() {
        assert_eq!(space.index_of(class), Some(id));
    }
}

#[test]
fn label_space_rejects_duplicates_and_emptiness() {
    assert!(matches!(LabelSpace::new(vec![]), Err(DatasetError::EmptyLabelSpace)));
    let err =
        LabelSpace::new(vec![FaultScenario::NoFault, FaultScenario::NoFault]).unwrap_err();
    assert!(matches!(err, DatasetError::DuplicateClass(_)));
}

// --- generation ---

#[test]
fn triangle_dataset_has_forty_rows_and_four_classes() {
    let data = triangle_stage1(10);
    assert_eq!(data.row_count(), 40);
    assert_eq!(data.label_space.len(), 4);
    assert_eq!(data.feature_count(), 18); // 3 blocks of 3*2 ordered pairs
    for class in 0..4 {
        assert_eq!(data.class_rows(class).len(), 10);
    }
}

#[test]
fn generation_is_deterministic() {
    let a = triangle_stage1(5);
    let b = triangle_stage1(5);
    assert_eq!(a, b);
    assert_eq!(a.to_csv(), b.to_csv());
}

#[test]
fn rows_within_a_class_differ_only_by_noise() {
    let data = triangle_stage1(3);
    let rows = data.class_rows(1);
    let (r0, r1) = (data.features.row(rows[0]), data.features.row(rows[1]));
    assert_ne!(r0, r1, "noise must vary within a class");
    // but not by much: 2% noise keeps values within a few percent.
    for (a, b) in r0.iter().zip(r1) {
        if *a != 0.0 {
            assert!(((a - b) / a).abs() < 0.5, "{a} vs {b}");
        }
    }
}

// --- quantization and CSV ---

#[test]
fn quantization_is_idempotent() {
    for &x in &[0.0, 1.0, -3.25, 1234.56789012345, 1e-12, 7.0e9, 0.1 + 0.2] {
        let q = quantize_feature(x);
        assert_eq!(quantize_feature(q), q, "quantizing twice must be a no-op for {x}");
    }
}

#[test]
fn csv_round_trip_is_bitwise_lossless() {
    let data = triangle_stage1(4);
    let text = data.to_csv();
    assert!(text.starts_with("label,f0,f1,"), "header: {}", text.lines().next().unwrap());
    let back = Dataset::from_csv(
        &text,
        data.label_space.clone(),
        data.topology_fingerprint.clone(),
    )
    .unwrap();
    assert_eq!(back.features.data, data.features.data, "bitwise-equal features");
    assert_eq!(back.labels, data.labels);
    assert_eq!(back.to_csv(), text);
}

#[test]
fn csv_errors_carry_line_numbers() {
    let data = triangle_stage1(2);
    let mut lines: Vec<String> = data.to_csv().lines().map(String::from).collect();
    lines[3] = "1,not_a_number".to_string();
    let err = Dataset::from_csv(
        &lines.join("\n"),
        data.label_space.clone(),
        data.topology_fingerprint.clone(),
    )
    .unwrap_err();
    match err {
        DatasetError::Csv { line, .. } => assert_eq!(line, 4),
        other => panic!("expected Csv error, got {other}"),
    }
}

#[test]
fn csv_rejects_out_of_space_labels() {
    let data = triangle_stage1(2);
    let text = data.to_csv().replace("\n3,", "\n9,");
    let err = Dataset::from_csv(
        &text,
        data.label_space.clone(),
        data.topology_fingerprint.clone(),
    )
    .unwrap_err();
    assert!(matches!(err, DatasetError::Csv { .. }));
}

#[test]
fn csv_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toy.csv");
    let data = triangle_stage1(3);
    data.write_csv(&path).unwrap();
    let back =
        Dataset::read_csv(&path, data.label_space.clone(), data.topology_fingerprint.clone())
            .unwrap();
    assert_eq!(back, data);
}

// --- splitting ---

#[test]
fn balanced_forty_rows_split_exactly() {
    let data = triangle_stage1(10);
    let (train, test) = data.split(0.25, 5).unwrap();
    assert_eq!(train.row_count(), 30);
    assert_eq!(test.row_count(), 10);
    // 10 rows/class at 0.25 is 2.5 per class: largest-remainder rounding
    // gives each class 2 or 3 test rows while the totals stay exact.
    let test_counts: Vec<usize> = (0..4).map(|c| test.class_rows(c).len()).collect();
    assert_eq!(test_counts.iter().sum::<usize>(), 10);
    assert!(test_counts.iter().all(|&c| c == 2 || c == 3), "{test_counts:?}");
    for class in 0..4 {
        assert_eq!(train.class_rows(class).len() + test.class_rows(class).len(), 10);
    }
}

#[test]
fn divisible_split_is_exact_per_class() {
    let data = triangle_stage1(8);
    let (train, test) = data.split(0.25, 5).unwrap();
    for class in 0..4 {
        assert_eq!(train.class_rows(class).len(), 6);
        assert_eq!(test.class_rows(class).len(), 2);
    }
}

#[test]
fn split_partitions_rows_without_loss() {
    let data = triangle_stage1(7);
    let (train, test) = data.split(0.3, 9).unwrap();
    assert_eq!(train.row_count() + test.row_count(), data.row_count());
    // Every original row appears exactly once across both sides.
    let mut seen: Vec<Vec<f64>> = Vec::new();
    for ds in [&train, &test] {
        for i in 0..ds.row_count() {
            seen.push(ds.features.row(i).to_vec());
        }
    }
    for i in 0..data.row_count() {
        let row = data.features.row(i).to_vec();
        let hits = seen.iter().filter(|r| **r == row).count();
        assert_eq!(hits, 1, "row {i} appears {hits} times");
    }
}

#[test]
fn split_rejects_degenerate_fractions() {
    let data = triangle_stage1(4);
    assert!(matches!(data.split(0.0, 1), Err(DatasetError::BadFraction(_))));
    assert!(matches!(data.split(1.0, 1), Err(DatasetError::BadFraction(_))));
    assert!(matches!(data.split(-0.5, 1), Err(DatasetError::BadFraction(_))));
}

#[test]
fn split_rejects_tiny_classes() {
    let data = triangle_stage1(1);
    let err = data.split(0.5, 1).unwrap_err();
    assert!(matches!(err, DatasetError::ClassTooSmall { rows: 1, .. }));
}

#[test]
fn split_is_deterministic_and_seed_sensitive() {
    let data = triangle_stage1(10);
    let (a_train, _) = data.split(0.2, 5).unwrap();
    let (b_train, _) = data.split(0.2, 5).unwrap();
    assert_eq!(a_train, b_train);
    let (c_train, _) = data.split(0.2, 6).unwrap();
    assert_ne!(a_train.features.data, c_train.features.data);
}

// --- preprocessing ---

fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    use linkfault::rng::{rng_from_seed, standard_normal};
    let mut rng = rng_from_seed(seed);
    let mut m = Matrix::zeros(rows, cols);
    for v in &mut m.data {
        *v = standard_normal(&mut rng);
    }
    m
}

fn dataset_from_matrix(features: Matrix) -> Dataset {
    let labels = vec![0; features.rows];
    Dataset {
        features,
        labels,
        label_space: LabelSpace::new(vec![FaultScenario::NoFault]).unwrap(),
        topology_fingerprint: "test".into(),
    }
}

fn fit(data: &Dataset, variance_to_retain: f64) -> Preprocessor {
    fit_preprocessor(
        data,
        &PreprocessParams { normalization: Normalization::ZScore, variance_to_retain },
    )
    .unwrap()
}

#[test]
fn components_are_orthonormal() {
    let data = dataset_from_matrix(random_matrix(60, 12, 3));
    let pre = fit(&data, 0.99);
    let c = &pre.components;
    for i in 0..c.rows {
        for j in 0..c.rows {
            let dot: f64 = c.row(i).iter().zip(c.row(j)).map(|(a, b)| a * b).sum();
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((dot - expected).abs() < 1e-9, "rows {i},{j}: {dot}");
        }
    }
}

#[test]
fn full_retention_keeps_every_informative_component() {
    // Zero-mean unit-variance data: normalization is an identity scale.
    let mut m = random_matrix(200, 6, 4);
    // Standardize columns exactly.
    for c in 0..6 {
        let mean: f64 = (0..200).map(|r| m.get(r, c)).sum::<f64>() / 200.0;
        let var: f64 = (0..200).map(|r| (m.get(r, c) - mean).powi(2)).sum::<f64>() / 200.0;
        let std = var.sqrt();
        for r in 0..200 {
            m.set(r, c, (m.get(r, c) - mean) / std);
        }
    }
    let data = dataset_from_matrix(m);
    let pre = fit(&data, 1.0);
    assert_eq!(pre.retained, 6, "random full-rank data keeps all components");
    assert!(pre.means.iter().all(|&v| v.abs() < 1e-9));
    assert!(pre.stds.iter().all(|&v| (v - 1.0).abs() < 1e-9));
}

#[test]
fn perfectly_correlated_features_need_one_component() {
    let mut m = Matrix::zeros(50, 2);
    for r in 0..50 {
        let x = r as f64 / 7.0 - 3.0;
        m.set(r, 0, x);
        m.set(r, 1, 3.0 * x + 1.0);
    }
    let data = dataset_from_matrix(m);
    let pre = fit(&data, 0.9999);
    assert_eq!(pre.retained, 1);
    assert!(pre.explained_variance_ratio[0] > 0.9999);
}

#[test]
fn zero_variance_column_gets_unit_scale() {
    let mut m = random_matrix(30, 3, 5);
    for r in 0..30 {
        m.set(r, 1, 42.0);
    }
    let data = dataset_from_matrix(m);
    let pre = fit(&data, 0.99);
    assert_eq!(pre.stds[1], 1.0);
    // Transform stays finite.
    let out = pre.transform_rows(&data.features).unwrap();
    assert!(out.data.iter().all(|v| v.is_finite()));
}

#[test]
fn transforming_the_mean_row_gives_zeros() {
    let data = dataset_from_matrix(random_matrix(40, 5, 6));
    let pre = fit(&data, 0.99);
    let mean_row = Matrix::from_vec(1, 5, pre.means.clone());
    let out = pre.transform_rows(&mean_row).unwrap();
    assert!(out.data.iter().all(|&v| v.abs() < 1e-9), "{:?}", out.data);
}

#[test]
fn projected_training_covariance_is_diagonal() {
    let data = dataset_from_matrix(random_matrix(120, 8, 7));
    let pre = fit(&data, 1.0);
    let z = pre.transform_rows(&data.features).unwrap();
    let n = z.rows as f64;
    let k = z.cols;
    let means: Vec<f64> =
        (0..k).map(|c| (0..z.rows).map(|r| z.get(r, c)).sum::<f64>() / n).collect();
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let cov: f64 = (0..z.rows)
                .map(|r| (z.get(r, i) - means[i]) * (z.get(r, j) - means[j]))
                .sum::<f64>()
                / (n - 1.0);
            assert!(cov.abs() < 1e-8, "cov({i},{j}) = {cov}");
        }
    }
}

#[test]
fn transform_then_inverse_then_transform_is_identity_on_the_subspace() {
    // Three latent factors mixed across ten columns plus faint noise:
    // variance concentrates in a low-dimensional subspace, so a 0.95
    // target must drop components.
    let latent = random_matrix(80, 3, 8);
    let noise = random_matrix(80, 10, 21);
    let mut wide = Matrix::zeros(80, 10);
    for r in 0..80 {
        for c in 0..10 {
            let mix = latent.get(r, 0) * 0.9f64.powi(c as i32)
                + latent.get(r, 1) * ((c % 3) as f64 - 1.0)
                + latent.get(r, 2) * (c as f64 / 10.0);
            wide.set(r, c, mix + 1e-3 * noise.get(r, c));
        }
    }
    let data = dataset_from_matrix(wide);
    let pre = fit(&data, 0.95);
    assert!(pre.retained < 10, "some components must be dropped for this test");
    let projected = pre.transform_rows(&data.features).unwrap();
    let reconstructed = pre.inverse_transform(&projected).unwrap();
    let reprojected = pre.transform_rows(&reconstructed).unwrap();
    for (a, b) in projected.data.iter().zip(&reprojected.data) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn reconstruction_error_is_bounded_by_discarded_variance() {
    let data = dataset_from_matrix(random_matrix(100, 12, 9));
    let variance_to_retain = 0.9;
    let pre = fit(&data, variance_to_retain);
    let projected = pre.transform_rows(&data.features).unwrap();
    let reconstructed = pre.inverse_transform(&projected).unwrap();

    // In z-scored space: total variance and residual variance.
    let z = |rows: &Matrix| -> Matrix {
        let mut out = rows.clone();
        for r in 0..out.rows {
            for (c, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = (*v - pre.means[c]) / pre.stds[c];
            }
        }
        out
    };
    let z_orig = z(&data.features);
    let z_rec = z(&reconstructed);
    let n = (z_orig.rows - 1) as f64;
    let total_var: f64 = z_orig.data.iter().map(|v| v * v).sum::<f64>() / n;
    let residual: f64 = z_orig
        .data
        .iter()
        .zip(&z_rec.data)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n;
    let discarded: f64 = 1.0 - pre.explained_variance_ratio.iter().take(pre.retained).sum::<f64>();
    assert!(
        residual <= discarded * total_var + 1e-6,
        "residual {residual} vs discarded bound {}",
        discarded * total_var
    );
}

#[test]
fn retained_count_is_minimal_for_target() {
    let data = dataset_from_matrix(random_matrix(100, 9, 10));
    let pre = fit(&data, 0.9);
    let ratios = &pre.explained_variance_ratio;
    let cumulative: f64 = ratios.iter().take(pre.retained).sum();
    assert!(cumulative >= 0.9 - 1e-12);
    if pre.retained > 1 {
        let one_less: f64 = ratios.iter().take(pre.retained - 1).sum();
        assert!(one_less < 0.9, "retained count must be minimal");
    }
}

#[test]
fn minmax_normalization_maps_train_to_unit_box() {
    let data = dataset_from_matrix(random_matrix(50, 4, 11));
    let pre = fit_preprocessor(
        &data,
        &PreprocessParams { normalization: Normalization::MinMax, variance_to_retain: 1.0 },
    )
    .unwrap();
    // Verify the stored affine maps train columns into [0, 1]: replay it.
    for r in 0..data.features.rows {
        for (c, &v) in data.features.row(r).iter().enumerate() {
            let scaled = (v - pre.means[c]) / pre.stds[c];
            assert!((-1e-9..=1.0 + 1e-9).contains(&scaled), "col {c}: {scaled}");
        }
    }
}

#[test]
fn transform_rejects_wrong_width() {
    let data = dataset_from_matrix(random_matrix(20, 6, 12));
    let pre = fit(&data, 0.99);
    let wrong = Matrix::zeros(2, 5);
    assert!(matches!(pre.transform_rows(&wrong), Err(DatasetError::DimensionMismatch { .. })));
}

#[test]
fn preprocessor_serializes_losslessly() {
    let data = dataset_from_matrix(random_matrix(30, 5, 13));
    let pre = fit(&data, 0.95);
    let json = serde_json::to_string(&pre).unwrap();
    let back: Preprocessor = serde_json::from_str(&json).unwrap();
    assert_eq!(back, pre);
}

#[test]
fn preprocessor_fitted_on_train_is_independent_of_test() {
    let data = triangle_stage1(10);
    let (train, _test) = data.split(0.25, 3).unwrap();
    let pre_a = fit(&train, 0.99);
    let pre_b = fit(&train, 0.99);
    assert_eq!(pre_a, pre_b, "fitting reads only the train rows");
}
