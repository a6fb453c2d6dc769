use secure_noma::optimizer::{beta_sweep, default_beta_grid, max_min_order, Scheme};
use secure_noma::orders::{enumerate_orders, OrderSets, SizeLimit};
use secure_noma::system::{power_allocation, sample_channels, SystemParams};

#[test]
fn dominance_chain_at_three_users() {
    let params = SystemParams::default().with_users(3);
    let sets = OrderSets::build(3, SizeLimit::Capped).unwrap();
    let grid = default_beta_grid();
    for seed in 0..30 {
        let ch = sample_channels(&params, 500 + seed).unwrap();
        let sweep = |scheme| beta_sweep(scheme, &grid, &ch, &params, Some(&sets)).unwrap();
        let (opt_l, opt_o) = (
            sweep(Scheme::OptimalFavourable),
            sweep(Scheme::OptimalOther),
        );
        let (wu, su) = (sweep(Scheme::PolicyLpwu), sweep(Scheme::PolicyLpsu));
        for i in 0..grid.len() {
            assert!(opt_l[i].value >= opt_o[i].value);
            assert!(opt_l[i].value >= wu[i].value);
            assert!(opt_l[i].value >= su[i].value);
            assert!(wu[i].value >= 0.0 && su[i].value >= 0.0);
            let alpha = power_allocation(&ch, grid[i]).unwrap();
            let over_s = max_min_order(&sets.secure, &ch, &alpha, &params).unwrap();
            assert_eq!(over_s.best_value, opt_l[i].value);
        }
    }
}

#[test]
fn superset_search_never_worse() {
    let params = SystemParams::default().with_users(3);
    let all: Vec<_> = enumerate_orders(3, SizeLimit::Capped).unwrap().collect();
    let sets = OrderSets::build(3, SizeLimit::Capped).unwrap();
    for seed in 0..20 {
        let ch = sample_channels(&params, 900 + seed).unwrap();
        let alpha = power_allocation(&ch, 0.2).unwrap();
        let small = max_min_order(&sets.favourable, &ch, &alpha, &params).unwrap();
        let mid = max_min_order(&sets.secure, &ch, &alpha, &params).unwrap();
        let big = max_min_order(&all, &ch, &alpha, &params).unwrap();
        assert!(mid.best_value >= small.best_value);
        assert!(big.best_value >= mid.best_value);
        assert!(
            small.feasible_count <= mid.feasible_count && mid.feasible_count <= big.feasible_count
        );
        assert!(big.feasible_count <= big.evaluated_count);
        assert_eq!(big.evaluated_count, 216);
        // Same inputs, same outcome, including the tie-break.
        assert_eq!(max_min_order(&all, &ch, &alpha, &params).unwrap(), big);
        let reversed = max_min_order(all.iter().rev(), &ch, &alpha, &params).unwrap();
        assert_eq!(reversed.best_order_id, big.best_order_id);
    }
}
