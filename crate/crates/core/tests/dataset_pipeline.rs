use gridsec::experiments::ExperimentConfig;
use gridsec::features::FeatureMatrix;
use gridsec::grid::{apply_contingency, build_topology, is_connected, GridCase};
use gridsec::metrics::SecurityClass;
use gridsec::scenario::{load_dataset, n1_contingencies, perturb_voltages, save_dataset, split_dataset, GraphDataset};
use proptest::prelude::*;

fn desk() -> (ExperimentConfig, GridCase) {
    let cfg = ExperimentConfig::preset("ieee30").unwrap();
    let case = cfg.load_case().unwrap();
    (cfg, case)
}

fn bytes(d: &GraphDataset) -> Vec<u8> {
    let mut buf = Vec::new();
    save_dataset(d, &mut buf).unwrap();
    buf
}

#[test]
fn desk_dataset_is_secure_majority_connected_and_finite() {
    let (cfg, case) = desk();
    let (d, summary) = cfg.generate_base(&case).unwrap();
    assert_eq!(summary.samples, d.len());
    assert!(d.secure_fraction() > 0.5, "{}", d.secure_fraction());
    assert!(d.secure_count() < d.len(), "both classes present");
    assert!(d.split.is_partition_of(d.len()));
    for s in &d.samples {
        assert!(is_connected(&s.topology().unwrap()));
        assert!(s.features.matrix().is_finite());
        let cut = apply_contingency(&case, &s.meta.contingency).unwrap();
        assert_eq!(s.topology().unwrap(), build_topology(&cut));
    }
}

#[test]
fn labels_follow_from_stored_voltages() {
    let (cfg, case) = desk();
    let (d, _) = cfg.generate_base(&case).unwrap();
    let crit = d.criterion;
    for s in &d.samples {
        let v: Vec<f64> = (0..s.node_count())
            .map(|i| s.features.get(i, FeatureMatrix::V_MAG))
            .collect();
        let want = if crit.violated_by(&v) {
            SecurityClass::Insecure
        } else {
            SecurityClass::Secure
        };
        assert_eq!(s.label, want);
    }
}

#[test]
fn generation_is_byte_deterministic_across_pool_sizes() {
    let (cfg, case) = desk();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| bytes(&cfg.generate_base(&case).unwrap().0))
    };
    let a = run(1);
    assert_eq!(a, run(3));
    assert_eq!(a, bytes(&cfg.generate_base(&case).unwrap().0));
    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(a, bytes(&other.generate_base(&case).unwrap().0));
}

#[test]
fn thousand_sample_round_trip_is_lossless() {
    let (mut cfg, case) = desk();
    cfg.generation.hours = None;
    let (full, _) = cfg.generate_base(&case).unwrap();
    assert!(full.len() >= 1000, "{}", full.len());
    let mut d = full.clone();
    d.samples.truncate(1000);
    let d = split_dataset(d, (0.6, 0.2, 0.2), 3).unwrap();
    let text = bytes(&d);
    let back = load_dataset(text.as_slice()).unwrap();
    assert_eq!(back, d);
    assert_eq!(bytes(&back), text);
    assert_eq!(text.iter().filter(|&&b| b == b'\n').count(), 1001);
}

#[test]
fn unseen_suites_are_disjoint_from_training_conditions() {
    let (cfg, case) = desk();
    let (c1, _) = cfg.generate_case1(&case).unwrap();
    assert_eq!(c1.split.test.len(), c1.len());
    assert!(c1.samples.iter().all(|s| s.meta.hour == Some(cfg.case1_hour())));
    let (c2, _) = cfg.generate_case2(&case).unwrap();
    assert_eq!(c2.split.test.len(), c2.len());
    assert!(c2
        .samples
        .iter()
        .all(|s| s.meta.contingency.len() == 2 && s.meta.hour.is_none()));
    assert!(c2.samples.iter().all(|s| is_connected(&s.topology().unwrap())));
}

#[test]
fn n1_list_covers_in_service_lines_only() {
    let case = GridCase::builtin("ieee30").unwrap();
    let list = n1_contingencies(&case);
    let lines = case
        .branches()
        .iter()
        .filter(|b| b.in_service && b.tap_ratio == 1.0)
        .count();
    assert_eq!(list.len(), lines);
    assert!(list
        .iter()
        .all(|c| c.len() == 1 && case.branches()[c[0]].tap_ratio == 1.0));
}

#[test]
fn zero_magnitude_perturbation_is_identity() {
    let (cfg, case) = desk();
    let (d, _) = cfg.generate_base(&case).unwrap();
    let test = d.select_as_test(&d.split.test);
    assert_eq!(cfg.sensitivity_set(&d, 0.0).unwrap(), test);
    let moved = cfg.sensitivity_set(&d, 0.05).unwrap();
    for (a, b) in test.samples.iter().zip(&moved.samples) {
        let changed = (0..a.node_count())
            .filter(|&i| a.features.get(i, FeatureMatrix::V_MAG) != b.features.get(i, FeatureMatrix::V_MAG))
            .count();
        assert_eq!(changed, 3, "⌈0.1 · 30⌉ buses");
        assert_eq!(a.label, b.label);
        for col in 1..7 {
            for i in 0..a.node_count() {
                assert_eq!(a.features.get(i, col), b.features.get(i, col));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn perturbation_scales_exactly(frac in 0.0f64..=1.0, mag in -0.2f64..0.2, seed in any::<u64>()) {
        let (cfg, case) = desk();
        let mut one = cfg.clone();
        one.generation.hours = Some(vec![12]);
        let (d, _) = one.generate_base(&case).unwrap();
        let small = d.select_as_test(&d.split.test[..5.min(d.split.test.len())]);
        let p = perturb_voltages(small.clone(), frac, mag, seed).unwrap();
        for (a, b) in small.samples.iter().zip(&p.samples) {
            let n = a.node_count();
            let scaled = (0..n)
                .filter(|&i| b.features.get(i, 0) == a.features.get(i, 0) * (1.0 + mag))
                .count();
            let untouched = (0..n).filter(|&i| b.features.get(i, 0) == a.features.get(i, 0)).count();
            let want = ((frac * n as f64) - 1e-9).ceil() as usize;
            prop_assert!(scaled >= want.min(n) || mag == 0.0);
            prop_assert_eq!(n - untouched <= want, true);
        }
    }
}
