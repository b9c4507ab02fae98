use std::fs;
use std::path::Path;

use fwrnn_core::data::{
    add_gaussian_noise, adding_cache_path, gen_adding_task, load_har2, load_har2_with,
    load_mnist_pixel, load_or_generate_adding, read_adding_cache, read_idx_images,
    write_adding_cache, AddingLabel, DataConfig, DatasetName, HarOptions, MnistOptions,
    HAR_CHANNELS,
};
use fwrnn_core::models::Targets;
use fwrnn_core::numerics::Rng;
use fwrnn_core::Error;
use proptest::prelude::*;

fn values(t: &Targets) -> &[f64] {
    match t {
        Targets::Values(m) => m.as_slice(),
        Targets::Classes(_) => panic!("expected values"),
    }
}

fn classes(t: &Targets) -> &[usize] {
    match t {
        Targets::Classes(c) => c,
        Targets::Values(_) => panic!("expected classes"),
    }
}

// ---- adding task ----

proptest! {
    #[test]
    fn adding_markers_and_labels(seed in 0u64..500, steps in 2usize..40) {
        let b = gen_adding_task(20, steps, AddingLabel::Marked, &mut Rng::new(seed)).unwrap();
        let half = steps / 2;
        for (s, &y) in values(b.targets()).iter().enumerate() {
            let marks: Vec<usize> = (0..steps).filter(|&t| b.input_at(s, t)[1] != 0.0).collect();
            prop_assert_eq!(marks.len(), 2);
            prop_assert!(marks[0] < half && marks[1] >= half);
            let sum: f64 = (0..steps).map(|t| b.input_at(s, t)[1]).sum();
            prop_assert_eq!(sum, 2.0);
            prop_assert!((0.0..=2.0).contains(&y));
            prop_assert_eq!(y, b.input_at(s, marks[0])[0] + b.input_at(s, marks[1])[0]);
        }
    }

    #[test]
    fn interval_label_sums_the_span(seed in 0u64..200) {
        let b = gen_adding_task(10, 12, AddingLabel::Interval, &mut Rng::new(seed)).unwrap();
        let m = gen_adding_task(10, 12, AddingLabel::Marked, &mut Rng::new(seed)).unwrap();
        prop_assert_eq!(b.inputs(), m.inputs());
        for s in 0..10 {
            let marks: Vec<usize> = (0..12).filter(|&t| b.input_at(s, t)[1] == 1.0).collect();
            let want: f64 = (marks[0]..=marks[1]).map(|t| b.input_at(s, t)[0]).sum();
            prop_assert_eq!(values(b.targets())[s], want);
            prop_assert!(values(b.targets())[s] >= values(m.targets())[s]);
        }
    }
}

#[test]
fn adding_constant_predictor_mse_is_one_sixth() {
    let b = gen_adding_task(100_000, 10, AddingLabel::Marked, &mut Rng::new(2024)).unwrap();
    let y = values(b.targets());
    let mse = y.iter().map(|v| (v - 1.0).powi(2)).sum::<f64>() / y.len() as f64;
    // Var(U1 + U2) = 2/12
    assert!((mse - 1.0 / 6.0).abs() < 0.01, "{mse}");
}

#[test]
fn adding_rejects_short_sequences() {
    assert!(gen_adding_task(3, 1, AddingLabel::Marked, &mut Rng::new(0)).is_err());
}

#[test]
fn adding_cache_round_trip_and_key_check() {
    let dir = tempfile::tempdir().unwrap();
    let a = load_or_generate_adding(Some(dir.path()), 7, 9, 3, AddingLabel::Marked).unwrap();
    let path = adding_cache_path(dir.path(), 7, 9, 3, AddingLabel::Marked);
    assert!(path.exists());
    let b = load_or_generate_adding(Some(dir.path()), 7, 9, 3, AddingLabel::Marked).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, load_or_generate_adding(None, 7, 9, 3, AddingLabel::Marked).unwrap());
    assert!(matches!(
        read_adding_cache(&path, 7, 9, 4, AddingLabel::Marked),
        Err(Error::Corrupt { .. })
    ));
    let mut bytes = fs::read(&path).unwrap();
    bytes.pop();
    fs::write(&path, &bytes).unwrap();
    assert!(matches!(read_adding_cache(&path, 7, 9, 3, AddingLabel::Marked), Err(Error::Corrupt { .. })));
    bytes[0] = b'X';
    fs::write(&path, &bytes).unwrap();
    let err = read_adding_cache(&path, 7, 9, 3, AddingLabel::Marked).unwrap_err();
    assert!(err.to_string().contains("magic"), "{err}");
    let mut buf = Vec::new();
    write_adding_cache(&a, 3, AddingLabel::Marked, &mut buf).unwrap();
    assert_eq!(buf.len(), 8 + 24 + 1 + 8 * (7 * 9 * 2 + 7));
}

// ---- MNIST fixtures ----

fn write_idx(dir: &Path, prefix: &str, images: &[Vec<u8>], labels: &[u8], side: u32) {
    let mut img = vec![0, 0, 8, 3];
    for v in [images.len() as u32, side, side] {
        img.extend_from_slice(&v.to_be_bytes());
    }
    for i in images {
        img.extend_from_slice(i);
    }
    fs::write(dir.join(format!("{prefix}-images-idx3-ubyte")), img).unwrap();
    let mut lbl = vec![0, 0, 8, 1];
    lbl.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    lbl.extend_from_slice(labels);
    fs::write(dir.join(format!("{prefix}-labels-idx1-ubyte")), lbl).unwrap();
}

fn mnist_fixture(dir: &Path) {
    let mut rng = Rng::new(5);
    let mut img = |n: usize| -> Vec<Vec<u8>> {
        (0..n).map(|_| (0..16).map(|_| rng.below(256) as u8).collect()).collect()
    };
    let train = img(6);
    let test = img(3);
    write_idx(dir, "train", &train, &[0, 1, 2, 3, 4, 9], 4);
    write_idx(dir, "t10k", &test, &[5, 6, 7], 4);
}

fn loose() -> MnistOptions {
    MnistOptions { check_shape: false, ..MnistOptions::default() }
}

#[test]
fn mnist_normalized_with_train_statistics() {
    let dir = tempfile::tempdir().unwrap();
    mnist_fixture(dir.path());
    let ds = load_mnist_pixel(dir.path(), &loose()).unwrap();
    assert_eq!((ds.train.len(), ds.test.len(), ds.train.steps(), ds.train.input_dim()), (6, 3, 16, 1));
    assert_eq!(classes(ds.train.targets()), &[0, 1, 2, 3, 4, 9]);
    let x = ds.train.inputs();
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64;
    assert!(mean.abs() < 1e-6 && (var - 1.0).abs() < 1e-6, "{mean} {var}");
    // test pixels use the train transform: raw = v * std + mean
    let n = ds.spec.normalization.as_ref().unwrap();
    let raw = fs::read(dir.path().join("t10k-images-idx3-ubyte")).unwrap();
    let back = ds.test.input_at(1, 5)[0] * n.std[0] + n.mean[0];
    assert!((back - f64::from(raw[16 + 16 + 5]) / 255.0).abs() < 1e-12);
}

#[test]
fn mnist_permutation_is_fixed_and_shared() {
    let dir = tempfile::tempdir().unwrap();
    mnist_fixture(dir.path());
    let plain = load_mnist_pixel(dir.path(), &loose()).unwrap();
    let opts = MnistOptions { permute: Some(11), ..loose() };
    let a = load_mnist_pixel(dir.path(), &opts).unwrap();
    let b = load_mnist_pixel(dir.path(), &opts).unwrap();
    assert_eq!(a.train, b.train);
    assert_eq!(a.test, b.test);
    let perm = Rng::new(11).permutation(16);
    for (batch_p, batch) in [(&a.train, &plain.train), (&a.test, &plain.test)] {
        for s in 0..batch.len() {
            for (t, &src) in perm.iter().enumerate() {
                assert_eq!(batch_p.input_at(s, t), batch.input_at(s, src));
            }
        }
    }
    let c = load_mnist_pixel(dir.path(), &MnistOptions { permute: Some(12), ..loose() }).unwrap();
    assert_ne!(a.train, c.train);
}

#[test]
fn mnist_downsample_and_limits() {
    let dir = tempfile::tempdir().unwrap();
    let img: Vec<u8> = (0..16).map(|i| (i * 10) as u8).collect();
    write_idx(dir.path(), "train", &[img.clone(), vec![0; 16]], &[1, 2], 4);
    write_idx(dir.path(), "t10k", &[img], &[3], 4);
    let opts = MnistOptions { downsample: 2, train_limit: Some(1), ..loose() };
    let ds = load_mnist_pixel(dir.path(), &opts).unwrap();
    assert_eq!((ds.train.len(), ds.train.steps()), (1, 4));
    let n = ds.spec.normalization.clone().unwrap();
    let raw: Vec<f64> = (0..4).map(|t| ds.test.input_at(0, t)[0] * n.std[0] + n.mean[0]).collect();
    // 2x2 means of 0,10,40,50 / 20,30,60,70 / ...
    let want = [25.0, 45.0, 105.0, 125.0].map(|v| v / 255.0);
    for (r, w) in raw.iter().zip(want) {
        assert!((r - w).abs() < 1e-12, "{r} vs {w}");
    }
}

#[test]
fn mnist_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_mnist_pixel(dir.path(), &loose()), Err(Error::MissingFile(p)) if p.ends_with("train-images-idx3-ubyte")));
    mnist_fixture(dir.path());
    let err = load_mnist_pixel(dir.path(), &MnistOptions::default()).unwrap_err();
    assert!(err.to_string().contains("expected 60000x28x28"), "{err}");
    let path = dir.path().join("train-images-idx3-ubyte");
    let mut bytes = fs::read(&path).unwrap();
    bytes[3] = 1;
    fs::write(&path, &bytes).unwrap();
    let err = read_idx_images(&path).unwrap_err();
    assert!(err.to_string().contains("magic"), "{err}");
    assert!(err.is_data());
}

// ---- HAR fixtures ----

fn har_fixture(root: &Path, n_train: usize, n_test: usize) {
    let mut rng = Rng::new(9);
    for (part, n) in [("train", n_train), ("test", n_test)] {
        let sig = root.join(part).join("Inertial Signals");
        fs::create_dir_all(&sig).unwrap();
        for (c, name) in HAR_CHANNELS.iter().enumerate() {
            let mut text = String::new();
            for _ in 0..n {
                let row: Vec<String> = (0..128)
                    .map(|_| format!("{:e}", (c as f64) + (c as f64 + 1.0) * rng.normal()))
                    .collect();
                text.push_str("  ");
                text.push_str(&row.join(" "));
                text.push('\n');
            }
            fs::write(sig.join(format!("{name}_{part}.txt")), text).unwrap();
        }
        let labels: String = (0..n).map(|i| format!("{}\n", i % 6 + 1)).collect();
        fs::write(root.join(part).join(format!("y_{part}.txt")), labels).unwrap();
    }
}

#[test]
fn har_layout_labels_and_channel_normalization() {
    let dir = tempfile::tempdir().unwrap();
    har_fixture(dir.path(), 12, 6);
    let ds = load_har2_with(dir.path(), &HarOptions { check_shape: false }).unwrap();
    assert_eq!((ds.train.len(), ds.test.len(), ds.train.steps(), ds.train.input_dim()), (12, 6, 128, 9));
    assert_eq!(&classes(ds.train.targets())[..6], &[1, 1, 1, 0, 0, 0]);
    let x = ds.train.inputs();
    for c in 0..9 {
        let vals: Vec<f64> = x.iter().skip(c).step_by(9).copied().collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        assert!(mean.abs() < 1e-6 && (var - 1.0).abs() < 1e-6, "channel {c}: {mean} {var}");
    }
    // channel c of step t comes from file c, column t
    let n = ds.spec.normalization.as_ref().unwrap();
    let file = fs::read_to_string(dir.path().join("test/Inertial Signals/body_gyro_y_test.txt")).unwrap();
    let raw: f64 = file.lines().nth(2).unwrap().split_whitespace().nth(7).unwrap().parse().unwrap();
    assert!((ds.test.input_at(2, 7)[4] * n.std[4] + n.mean[4] - raw).abs() < 1e-9);
}

#[test]
fn har_shape_and_file_errors() {
    let dir = tempfile::tempdir().unwrap();
    har_fixture(dir.path(), 12, 6);
    let err = load_har2(dir.path()).unwrap_err();
    assert!(err.to_string().contains("expected 7352"), "{err}");
    let gone = dir.path().join("test/Inertial Signals/total_acc_z_test.txt");
    fs::remove_file(&gone).unwrap();
    match load_har2_with(dir.path(), &HarOptions { check_shape: false }) {
        Err(Error::MissingFile(p)) => assert_eq!(p, gone),
        other => panic!("unexpected {other:?}"),
    }
    har_fixture(dir.path(), 12, 6);
    fs::write(dir.path().join("train/y_train.txt"), "1\n7\n").unwrap();
    let err = load_har2_with(dir.path(), &HarOptions { check_shape: false }).unwrap_err();
    assert!(err.to_string().contains("activity label 7"), "{err}");
}

// ---- noise ----

#[test]
fn zero_variance_noise_is_identity() {
    let b = gen_adding_task(5, 8, AddingLabel::Marked, &mut Rng::new(1)).unwrap();
    assert_eq!(add_gaussian_noise(&b, 0.0, &mut Rng::new(2)).unwrap(), b);
    assert!(add_gaussian_noise(&b, -1.0, &mut Rng::new(2)).is_err());
}

#[test]
fn noise_moments() {
    let b = gen_adding_task(5000, 100, AddingLabel::Marked, &mut Rng::new(1)).unwrap();
    let noisy = add_gaussian_noise(&b, 2.0, &mut Rng::new(3)).unwrap();
    assert_eq!(noisy.targets(), b.targets());
    let diff: Vec<f64> = noisy.inputs().iter().zip(b.inputs()).map(|(a, c)| a - c).collect();
    assert_eq!(diff.len(), 1_000_000);
    let mean = diff.iter().sum::<f64>() / diff.len() as f64;
    let var = diff.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / diff.len() as f64;
    assert!(mean.abs() < 0.01, "{mean}");
    assert!((var - 2.0).abs() < 0.02, "{var}");
}

// ---- config ----

#[test]
fn config_loads_deterministically_with_validation_split() {
    let mut cfg = DataConfig { seed: 4, validation_fraction: 0.25, ..DataConfig::default() };
    cfg.adding.train_size = 40;
    cfg.adding.test_size = 10;
    cfg.adding.steps = 6;
    let a = cfg.load(None).unwrap();
    let b = cfg.load(None).unwrap();
    assert_eq!(a.train, b.train);
    assert_eq!(a.validation, b.validation);
    assert_eq!((a.train.len(), a.validation.as_ref().unwrap().len(), a.test.len()), (30, 10, 10));
    assert_eq!(a.spec.validation_size, 10);
    assert_eq!(a.classes(), None);
    let c = DataConfig { seed: 5, ..cfg.clone() }.load(None).unwrap();
    assert_ne!(a.test, c.test);
}

#[test]
fn config_problems_and_missing_root() {
    let mut cfg = DataConfig { validation_fraction: 1.5, noise_variance: -1.0, ..DataConfig::default() };
    cfg.adding.steps = 1;
    let p = cfg.problems();
    assert_eq!(p.len(), 3, "{p:?}");
    let har = DataConfig { name: DatasetName::Har2, ..DataConfig::default() };
    assert!(har.load(None).unwrap_err().is_data());
    let dir = tempfile::tempdir().unwrap();
    let err = har.load(Some(dir.path())).unwrap_err();
    assert!(err.is_data() && err.to_string().contains("UCI HAR Dataset"), "{err}");
}

#[test]
fn noisy_har_composes_noise_over_the_clean_loader() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("UCI HAR Dataset");
    har_fixture(&root, 12, 6);
    let base = DataConfig {
        name: DatasetName::Har2,
        seed: 1,
        har: HarOptions { check_shape: false },
        ..DataConfig::default()
    };
    let clean = base.load(Some(dir.path())).unwrap();
    let noisy = DataConfig { name: DatasetName::NoisyHar2, ..base }.load(Some(dir.path())).unwrap();
    assert_eq!(clean.train.targets(), noisy.train.targets());
    assert_ne!(clean.train.inputs(), noisy.train.inputs());
    assert_eq!(noisy.classes(), Some(2));
}
