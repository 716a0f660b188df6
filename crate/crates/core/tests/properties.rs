mod common;

use common::{permute_siblings, random_plan};
use doptune::features::{build_registry, featurize, ChannelSet};
use doptune::metrics::{self, LatencyTable};
use doptune::models::linear::{fit_elastic_net, ElasticNetParams};
use doptune::models::{train, Dataset, Matrix, ModelKind, ModelSpec};
use doptune::plan::{parse_plan, parse_plans, write_plans};
use doptune::selection::{argmin_dop, select_workload_rows};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

const DOPS: [u32; 5] = [1, 2, 4, 8, 16];

fn row() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.5f64..1e4, DOPS.len())
}

fn table_of(actual: &[Vec<f64>], predicted: &[Vec<f64>]) -> LatencyTable {
    let mut t = LatencyTable::new(&DOPS);
    for (i, (a, p)) in actual.iter().zip(predicted).enumerate() {
        for (j, d) in DOPS.iter().enumerate() {
            t.insert(&format!("q{i}"), *d, a[j], p[j]).unwrap();
        }
    }
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plan_json_round_trips(seed in any::<u64>(), depth in 1u32..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plan = random_plan(&mut rng, "rt", depth, false);
        let again = parse_plan(plan.to_json_line().as_bytes()).unwrap();
        prop_assert_eq!(&again, &plan);
        let many = parse_plans(write_plans(&[plan.clone(), plan.clone()]).as_bytes()).unwrap();
        prop_assert_eq!(many.len(), 2);
    }

    #[test]
    fn sibling_order_does_not_change_features(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plan = random_plan(&mut rng, "p", 6, false);
        let registry = build_registry(std::slice::from_ref(&plan), ChannelSet::all()).unwrap();
        let shuffled = permute_siblings(&plan, &mut rng);
        prop_assert_eq!(featurize(&plan, &registry), featurize(&shuffled, &registry));
    }

    #[test]
    fn features_are_finite_and_non_negative(seed in any::<u64>(), log in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plan = random_plan(&mut rng, "p", 6, false);
        let registry = build_registry(std::slice::from_ref(&plan), ChannelSet::all()).unwrap().with_log_transform(log);
        let f = featurize(&plan, &registry);
        prop_assert_eq!(f.unknown_keys, 0);
        prop_assert!(f.vector.values.iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn spe_ignores_prediction_scale(actual in row(), predicted in row(), c in 0.01f64..100.0) {
        let scaled: Vec<f64> = predicted.iter().map(|v| v * c).collect();
        let a = metrics::spe(&table_of(std::slice::from_ref(&actual), &[predicted]), "q0").unwrap();
        let b = metrics::spe(&table_of(&[actual], &[scaled]), "q0").unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn tq_dominates_tw(rows in prop::collection::vec(row(), 1..10)) {
        let t = table_of(&rows, &rows);
        prop_assert!(metrics::tq(&t).unwrap() >= metrics::tw(&t).unwrap());
        let dist = metrics::error_distribution(&metrics::rpe_all(&t).unwrap(), &metrics::RPE_THRESHOLDS).unwrap();
        prop_assert!(dist.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn selection_ignores_prediction_scale(rows in prop::collection::vec(row(), 1..10), c in 0.1f64..10.0) {
        let maps: Vec<BTreeMap<u32, f64>> = rows.iter().map(|r| DOPS.iter().copied().zip(r.iter().copied()).collect()).collect();
        let scaled: Vec<BTreeMap<u32, f64>> = maps.iter().map(|m| m.iter().map(|(d, v)| (*d, v * c)).collect()).collect();
        for (a, b) in maps.iter().zip(&scaled) {
            prop_assert_eq!(argmin_dop(a.iter().map(|(d, v)| (*d, *v))), argmin_dop(b.iter().map(|(d, v)| (*d, *v))));
        }
        prop_assert_eq!(select_workload_rows(&maps, "w").unwrap().chosen_dop, select_workload_rows(&scaled, "w").unwrap().chosen_dop);
    }

    #[test]
    fn boosting_mse_never_increases(seed in any::<u64>(), lr in 0.05f64..1.0) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..80).map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect();
        let y: Vec<f64> = x.iter().map(|r| (6.0 * r[0]).sin() * 10.0 + r[1] * r[1]).collect();
        let spec = ModelSpec::new(ModelKind::GradientBoosting).with("n_rounds", 30.0).with("learning_rate", lr);
        let model = train(&spec, &Dataset::from_xy(x, y)).unwrap();
        let trace = &model.training_summary.loss_trace;
        prop_assert!(trace.windows(2).all(|w| w[1] <= w[0]), "{:?}", trace);
    }

    #[test]
    fn elastic_net_objective_never_increases(seed in any::<u64>(), alpha in 0.0f64..2.0, l1 in 0.0f64..=1.0) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..60).map(|_| (0..4).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0] - 2.0 * r[2] + rng.random_range(-0.5..0.5)).collect();
        let x = Matrix::from_rows(rows.iter().map(|r| r.as_slice()), 4);
        let fit = fit_elastic_net(&x, &y, &ElasticNetParams { alpha, l1_ratio: l1, ..Default::default() });
        let trace = &fit.objective_trace;
        prop_assert!(trace.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0)), "{:?}", trace);
    }
}
