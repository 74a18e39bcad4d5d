use fairmix::config::PipelineConfig;
use fairmix::dataset::Dataset;
use fairmix::run_experiment;
use fairmix::synthgen::{generate, SynthSpec};
use std::collections::{BTreeMap, BTreeSet};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn with_minority_separation(sep: f64, seed: u64) -> SynthSpec {
    SynthSpec {
        separation: BTreeMap::from([("default".into(), 2.0), ("gender=0".into(), sep)]),
        seed,
        ..SynthSpec::default()
    }
}

fn audit(spec: SynthSpec) -> (f64, Option<f64>) {
    let seed = spec.seed;
    let config = PipelineConfig::synthetic(spec, seed);
    let data = config.load_data::<f64>().unwrap();
    let report = run_experiment(&config, &data).unwrap();
    (
        report.overall.accuracy,
        report.attribute("gender").unwrap().ea.value,
    )
}

#[test]
fn same_seed_same_dataset() {
    let spec = SynthSpec {
        seed: 12,
        ..SynthSpec::default()
    };
    let a: Dataset<f64> = generate(&spec).unwrap();
    let b: Dataset<f64> = generate(&spec).unwrap();
    assert_eq!(a, b);
    let c: Dataset<f64> = generate(&SynthSpec { seed: 13, ..spec }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn group_proportions_match_spec() {
    // subjects carry the attribute, so the binomial count is over subjects
    for (attr, p) in [("gender", 0.8), ("race", 0.5)] {
        let n = 40usize;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        let mut pooled = 0usize;
        let mut outside = 0;
        for seed in 0..100 {
            let spec = SynthSpec {
                attribute_props: BTreeMap::from([("gender".into(), 0.8), ("race".into(), 0.5)]),
                n_subjects: n,
                seed,
                ..SynthSpec::default()
            };
            let d: Dataset<f64> = generate(&spec).unwrap();
            let a = d.attribute_index(attr).unwrap();
            let majority: BTreeSet<&str> = d
                .meta()
                .iter()
                .filter(|m| m.attributes[a] == 1)
                .map(|m| m.subject_id.as_str())
                .collect();
            let realized = majority.len() as f64 / n as f64;
            if (realized - p).abs() > 3.0 * se {
                outside += 1;
            }
            pooled += majority.len();
        }
        // mean over the seeds, against the standard error of that mean
        let pooled_p = pooled as f64 / (100 * n) as f64;
        assert!(
            (pooled_p - p).abs() <= 3.0 * se / 10.0,
            "{attr}: {pooled_p}"
        );
        // a single seed beyond 3 se happens about 0.3% of the time
        assert!(outside <= 2, "{attr}: {outside} seeds beyond 3 se");
    }
}

#[test]
fn class_mean_gap_matches_separation() {
    // with a single shared axis the class means sit separation * noise_std apart
    for (sep, noise) in [(2.0, 1.0), (1.0, 0.5), (3.0, 2.0)] {
        let spec = SynthSpec {
            n_subjects: 2000,
            sessions_per_subject: 2,
            separation: BTreeMap::from([("default".into(), sep)]),
            noise_std: noise,
            group_specificity: 0.0,
            seed: 1,
            ..SynthSpec::default()
        };
        let d: Dataset<f64> = generate(&spec).unwrap();
        for table in d.modalities() {
            let x = table.samples();
            let mut means = [vec![0.0; x.ncols()], vec![0.0; x.ncols()]];
            let mut counts = [0.0, 0.0];
            for (r, m) in d.meta().iter().enumerate() {
                counts[m.label as usize] += 1.0;
                for k in 0..x.ncols() {
                    means[m.label as usize][k] += x[[r, k]];
                }
            }
            let gap: f64 = (0..x.ncols())
                .map(|k| (means[1][k] / counts[1] - means[0][k] / counts[0]).powi(2))
                .sum::<f64>()
                .sqrt();
            let want = sep * noise;
            assert!(
                (gap - want).abs() < 0.15 * want.max(1.0),
                "{}: gap {gap} want {want}",
                table.name()
            );
        }
    }
}

#[test]
fn label_rates_follow_base_rate() {
    let spec = SynthSpec {
        n_subjects: 400,
        base_rate: BTreeMap::from([("gender=0".into(), 0.2), ("gender=1".into(), 0.7)]),
        seed: 5,
        ..SynthSpec::default()
    };
    let d: Dataset<f64> = generate(&spec).unwrap();
    for (value, rate) in [(0u8, 0.2), (1, 0.7)] {
        let rows: Vec<_> = d
            .meta()
            .iter()
            .filter(|m| m.attributes[0] == value)
            .collect();
        let pos = rows.iter().filter(|m| m.label == 1).count() as f64 / rows.len() as f64;
        let se = (rate * (1.0 - rate) / rows.len() as f64).sqrt();
        assert!((pos - rate).abs() <= 4.0 * se, "gender={value}: {pos}");
    }
}

#[test]
fn no_separation_means_chance_accuracy() {
    let accs: Vec<f64> = (0..20)
        .map(|seed| {
            audit(SynthSpec {
                separation: BTreeMap::from([("default".into(), 0.0)]),
                seed,
                ..SynthSpec::default()
            })
            .0
        })
        .collect();
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    assert!((mean - 0.5).abs() < 0.06, "mean accuracy {mean}");
}

#[test]
fn symmetric_groups_give_small_ea() {
    let eas: Vec<f64> = (0..20)
        .map(|seed| {
            audit(SynthSpec {
                n_subjects: 100,
                attribute_props: BTreeMap::from([("gender".into(), 0.5)]),
                seed,
                ..SynthSpec::default()
            })
            .1
            .unwrap()
        })
        .collect();
    let mean = eas.iter().sum::<f64>() / eas.len() as f64;
    assert!(mean < 0.05, "mean EA {mean}");
}

#[test]
fn weaker_minority_signal_does_not_reduce_ea() {
    let mut last = f64::NEG_INFINITY;
    for sep in [2.0, 1.2, 0.6, 0.0] {
        let eas: Vec<f64> = (0..20)
            .filter_map(|seed| audit(with_minority_separation(sep, seed)).1)
            .collect();
        assert!(eas.len() >= 18);
        let m = median(eas);
        assert!(
            m >= last,
            "minority separation {sep}: median EA {m} < {last}"
        );
        last = m;
    }
}
