use proptest::prelude::*;
use txconfirm_core::priority::{class_confirmation_times, two_class_times, PriorityTraffic};
use txconfirm_core::{mean_confirmation_time, AnalysisError, QueueConfig, ServiceDistribution};

fn exp(mu: f64) -> ServiceDistribution {
    ServiceDistribution::exponential(mu).unwrap()
}

fn f(b: usize, lambda: f64, s: ServiceDistribution) -> f64 {
    mean_confirmation_time(&QueueConfig::new(b, lambda, s).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// Lower classes never change the times of higher ones.
    #[test]
    fn higher_classes_ignore_lower_traffic(
        b in 1usize..12,
        shares in prop::collection::vec(0.05f64..1.0, 2..5),
        load in 0.1f64..0.9,
        extra in 0.01f64..0.5,
    ) {
        let s = exp(1.0);
        let total: f64 = shares.iter().sum();
        let rates: Vec<f64> = shares.iter().map(|x| x / total * load * b as f64).collect();
        let base = class_confirmation_times(&PriorityTraffic::new(rates.clone(), s, b).unwrap()).unwrap();
        let mut more = rates.clone();
        more.push(extra * (1.0 - load) * b as f64);
        let grown = class_confirmation_times(&PriorityTraffic::new(more, s, b).unwrap()).unwrap();
        for (x, y) in base.times.iter().zip(&grown.times) {
            prop_assert!((x - y).abs() <= 1e-12 * x);
        }
        prop_assert!((base.times[0] - f(b, rates[0], s)).abs() <= 1e-12 * base.times[0]);
    }

    /// With an increasing f the classes are ordered: high <= aggregate <= low.
    #[test]
    fn two_classes_are_ordered(b in 1usize..20, load in 0.05f64..0.95, zeta in 0.1f64..30.0) {
        let s = exp(0.01);
        let total = load * b as f64 * 0.01;
        let (h, l) = (zeta * total / (1.0 + zeta), total / (1.0 + zeta));
        let (th, tl) = two_class_times(h, l, s, b).unwrap();
        let agg = f(b, total, s);
        prop_assert!(th <= agg * (1.0 + 1e-12));
        prop_assert!(agg <= tl * (1.0 + 1e-12));
        prop_assert!(((h * th + l * tl) - total * agg).abs() <= 1e-10 * total * agg);
    }
}

#[test]
fn paper_table_values() {
    let s = exp(1.8379e-3);
    let (h, l) = two_class_times(0.90466, 0.068082, s, 1750).unwrap();
    assert!((h - 562.16).abs() / 562.16 < 0.005, "{h}");
    assert!((l - 647.05).abs() / 647.05 < 0.005, "{l}");
}

#[test]
fn high_class_alone_stable_but_total_not() {
    let t = PriorityTraffic::new(vec![1.0, 1.5], exp(1.0), 2).unwrap();
    assert_eq!(
        class_confirmation_times(&t).unwrap_err(),
        AnalysisError::UnstableClass {
            class: 2,
            offered_load: 2.5,
            capacity: 2
        }
    );
}

#[test]
fn ratio_sweep_high_class_growth() {
    // b = 2000, lambda_H / lambda_L = 13.288: the total load saturates at
    // lambda = b mu = 3.6758 while the high class alone stays stable up to
    // lambda = 3.6758 (1 + 1/13.288) = 3.9524.
    let mu = 1.8379e-3;
    let s = exp(mu);
    let zeta = 13.288;
    let high = |lambda: f64| f(2000, zeta * lambda / (1.0 + zeta), s);
    let at_3 = high(3.0);
    let at_edge = high(3.6758);
    assert!(at_edge > 3.0 * at_3, "{at_3} -> {at_edge}");
    assert!(at_edge < 10.0 / mu);
    assert!(high(3.9) > 10.0 / mu);
}
