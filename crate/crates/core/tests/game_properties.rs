use feesim::game::{
    demand, equilibrium_price_interval, make_price, solve_fee, GameSpec, NetworkCount, Price,
};
use proptest::prelude::*;

fn naive_fixed_points(types: &[f64], beta: f64, others: bool, price: f64) -> Vec<usize> {
    (0..=types.len())
        .filter(|&n| {
            let size = if others { n.saturating_sub(1) } else { n } as f64;
            types.iter().filter(|&&t| t + beta * size - price >= 0.0).count() == n
        })
        .collect()
}

fn instance() -> impl Strategy<Value = (Vec<f64>, f64, f64, bool)> {
    (1usize..60, 0.0f64..0.99, any::<bool>(), any::<bool>()).prop_flat_map(|(k, beta, integer, others)| {
        let ty = if integer {
            (0..k as u32).prop_map(f64::from).boxed()
        } else {
            (0.0..k as f64).boxed()
        };
        (prop::collection::vec(ty, k), Just(beta), 0.0..(2.0 * k as f64 + 1.0), Just(others))
    })
}

proptest! {
    #[test]
    fn solver_matches_naive_scan((types, beta, price, others) in instance()) {
        let count = if others { NetworkCount::Others } else { NetworkCount::Total };
        let spec = GameSpec::new(types.clone(), beta).unwrap().with_network_count(count);
        let sol = solve_fee(&spec, Price::new(price).unwrap()).unwrap();
        let oracle = naive_fixed_points(&types, beta, others, price);
        prop_assert!(!oracle.is_empty());
        prop_assert_eq!(&sol.fixed_points, &oracle);
        prop_assert_eq!(Some(&sol.selected), oracle.last());
    }

    #[test]
    fn demand_is_monotone((types, beta, price, _) in instance(), bump in 0.0f64..5.0) {
        let spec = GameSpec::new(types, beta).unwrap();
        let k = spec.population();
        let p = Price::new(price).unwrap();
        let higher = Price::new(price + bump).unwrap();
        for n in 0..k {
            prop_assert!(demand(&spec, p, n) <= demand(&spec, p, n + 1));
        }
        for n in 0..=k {
            prop_assert!(demand(&spec, higher, n) <= demand(&spec, p, n));
        }
    }

    #[test]
    fn attendees_are_exactly_nonnegative_utility((types, beta, price, _) in instance()) {
        let spec = GameSpec::new(types, beta).unwrap();
        let p = Price::new(price).unwrap();
        let sol = solve_fee(&spec, p).unwrap();
        let attendees = sol.attendees(&spec);
        prop_assert_eq!(attendees.len(), sol.selected);
        for (i, &t) in spec.types().iter().enumerate() {
            let u = t + beta * sol.selected as f64 - price;
            prop_assert_eq!(attendees.contains(&i), u >= 0.0);
        }
    }

    #[test]
    fn interior_interval_width_is_one_minus_beta(k in 3usize..80, beta in 0.0f64..0.95, frac in 0.0f64..1.0) {
        let spec = GameSpec::integer_grid(k, beta).unwrap();
        let n = 1 + ((k - 2) as f64 * frac) as usize;
        let interval = equilibrium_price_interval(&spec, n).unwrap();
        prop_assert!((interval.width() - (1.0 - beta)).abs() < 1e-9);
    }

    #[test]
    fn designed_price_round_trip(k in 2usize..80, beta in 0.0f64..0.95, frac in 0.0f64..=1.0, rel in 0.01f64..0.99) {
        let spec = GameSpec::integer_grid(k, beta).unwrap();
        let n = (k as f64 * frac).round() as usize;
        let offset = rel * (1.0 - beta);
        let price = make_price(&spec, n, offset).unwrap();
        prop_assert_eq!(solve_fee(&spec, price).unwrap().selected, n);
    }
}
