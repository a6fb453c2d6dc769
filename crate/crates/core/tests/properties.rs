use proptest::prelude::*;
use secure_noma::orders::{
    conventional_order, is_favourable, is_secure, order_from_id, order_id, permutation_rank,
    permutation_unrank, policy_order, self_last_transform, total_orders, OrderId,
};
use secure_noma::system::{
    power_allocation, secrecy_rates, sinr, ChannelRealization, SystemParams,
};

/// Strictly descending positive gains spanning realistic magnitudes.
fn gains(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..-2.0, n).prop_filter_map("distinct gains", |mut logs| {
        logs.sort_by(|a, b| b.total_cmp(a));
        let g: Vec<f64> = logs.iter().map(|l| 10f64.powf(*l)).collect();
        g.windows(2).all(|w| w[0] > w[1]).then_some(g)
    })
}

fn instance() -> impl Strategy<Value = (usize, Vec<f64>, f64, u128)> {
    (2usize..=4).prop_flat_map(|n| {
        let total = total_orders(n).unwrap();
        (Just(n), gains(n), -1.0f64..=1.0, 0..total)
    })
}

proptest! {
    #[test]
    fn allocation_is_normalized_and_monotone(g in (1usize..=6).prop_flat_map(gains), beta in -1.0f64..=1.0) {
        let ch = ChannelRealization::from_gains(g).unwrap();
        let pa = power_allocation(&ch, beta).unwrap();
        let sum: f64 = pa.alphas().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        prop_assert!(pa.alphas().iter().all(|&a| a > 0.0));
        for w in pa.alphas().windows(2) {
            if beta < 0.0 { prop_assert!(w[0] >= w[1]); }
            if beta > 0.0 { prop_assert!(w[0] <= w[1]); }
        }
    }

    #[test]
    fn sinr_monotone_in_rho_and_zeta((n, g, beta, id) in instance(), u in 0usize..4, v in 0usize..4, z in 0.0f64..0.9) {
        let (u, v) = (u % n, v % n);
        let order = order_from_id(n, OrderId(id)).unwrap();
        let ch = ChannelRealization::from_gains(g).unwrap();
        let pa = power_allocation(&ch, beta).unwrap();
        let low = SystemParams { n_users: n, zeta: z, ..SystemParams::default() };
        let high_rho = SystemParams { pt_dbm: low.pt_dbm + 3.0, ..low.clone() };
        let high_zeta = SystemParams { zeta: z + 0.1, ..low.clone() };
        let base = sinr(&order, &ch, &pa, &low, u, v).unwrap();
        prop_assert!(base > 0.0 && base.is_finite());
        prop_assert!(sinr(&order, &ch, &pa, &high_rho, u, v).unwrap() > base);
        prop_assert!(sinr(&order, &ch, &pa, &high_zeta, u, v).unwrap() <= base);
    }

    #[test]
    fn self_last_dominates((n, g, beta, id) in instance(), z in 0.0f64..=1.0) {
        let order = order_from_id(n, OrderId(id)).unwrap();
        let moved = self_last_transform(&order);
        prop_assert!(is_favourable(&moved));
        if is_secure(&order) { prop_assert!(is_secure(&moved)); }
        let ch = ChannelRealization::from_gains(g).unwrap();
        let pa = power_allocation(&ch, beta).unwrap();
        let params = SystemParams { n_users: n, zeta: z, ..SystemParams::default() };
        let before = secrecy_rates(&order, &ch, &pa, &params).unwrap();
        let after = secrecy_rates(&moved, &ch, &pa, &params).unwrap();
        for (b, a) in before.per_user_rates.iter().zip(&after.per_user_rates) {
            prop_assert!(*a >= *b - 1e-12);
        }
    }

    #[test]
    fn conventional_order_secures_only_the_strongest((n, g, beta, _) in instance()) {
        let ch = ChannelRealization::from_gains(g).unwrap();
        let pa = power_allocation(&ch, beta).unwrap();
        let params = SystemParams::default().with_users(n);
        let eval = secrecy_rates(&conventional_order(n).unwrap(), &ch, &pa, &params).unwrap();
        prop_assert!(eval.per_user_rates[0] > 0.0);
        for u in 1..n {
            prop_assert_eq!(eval.per_user_rates[u], 0.0);
            prop_assert_eq!(eval.eavesdropper_index[u], Some(0));
        }
    }

    #[test]
    fn secrecy_rates_are_finite_and_clamped((n, g, beta, id) in instance()) {
        let order = order_from_id(n, OrderId(id)).unwrap();
        let ch = ChannelRealization::from_gains(g).unwrap();
        let pa = power_allocation(&ch, beta).unwrap();
        let eval = secrecy_rates(&order, &ch, &pa, &SystemParams::default().with_users(n)).unwrap();
        prop_assert!(eval.per_user_rates.iter().all(|r| r.is_finite() && *r >= 0.0));
        let min = eval.per_user_rates.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(eval.min_rate, min);
    }

    #[test]
    fn permutation_rank_round_trips(len in 1usize..=8, seed in any::<u64>()) {
        let total: u128 = (1..=len as u128).product();
        let rank = u128::from(seed) % total;
        let perm = permutation_unrank(len, rank);
        prop_assert_eq!(permutation_rank(&perm), rank);
    }

    #[test]
    fn order_id_round_trips_for_larger_n(n in 5usize..=8, seed in any::<u128>()) {
        let id = OrderId(seed % total_orders(n).unwrap());
        let order = order_from_id(n, id).unwrap();
        prop_assert_eq!(order_id(&order).unwrap(), id);
    }

    #[test]
    fn policy_orders_are_favourable(n in 1usize..=9, beta in -1.0f64..=1.0) {
        let order = policy_order(n, beta).unwrap();
        prop_assert!(is_favourable(&order));
        prop_assert!(is_secure(&order));
    }
}
