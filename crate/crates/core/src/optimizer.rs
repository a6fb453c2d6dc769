//! Max-min secrecy search over sets of decoding orders, the secure-set
//! benchmark, and sweeps over the power-allocation exponent.

use std::borrow::Borrow;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orders::{
    order_id, policy_order_with, DecodingOrder, OrderId, OrderSets, SizeLimit, SortDirection,
};
use crate::system::{
    power_allocation, ChannelRealization, Link, PowerAllocation, SecrecyEvaluation, SystemParams,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// Absent when no order is feasible, or when the order is too large to rank.
    pub best_order_id: Option<OrderId>,
    pub best_order: Option<DecodingOrder>,
    pub best_evaluation: Option<SecrecyEvaluation>,
    /// Minimum secrecy rate of the best order; zero when nothing is feasible.
    pub best_value: f64,
    pub feasible_count: u64,
    pub evaluated_count: u64,
}

/// Maximizes the minimum secrecy rate over `orders`, keeping only orders in
/// which every user has a strictly positive secrecy rate. Ties go to the
/// smallest order id.
pub fn max_min_order<I>(
    orders: I,
    channels: &ChannelRealization,
    alpha: &PowerAllocation,
    params: &SystemParams,
) -> Result<SearchOutcome>
where
    I: IntoIterator,
    I::Item: Borrow<DecodingOrder>,
{
    let link = Link::new(channels, alpha, params)?;
    let mut best: Option<(f64, DecodingOrder)> = None;
    let mut feasible_count = 0;
    let mut evaluated_count = 0;
    for item in orders {
        let order = item.borrow();
        link.check_order(order)?;
        evaluated_count += 1;
        let value = link.min_secrecy(order);
        if value <= 0.0 {
            continue;
        }
        feasible_count += 1;
        let better = match &best {
            None => true,
            Some((v, o)) => value > *v || (value == *v && order < o),
        };
        if better {
            best = Some((value, order.clone()));
        }
    }
    Ok(match best {
        Some((value, order)) => SearchOutcome {
            best_order_id: order_id(&order).ok(),
            best_evaluation: Some(link.evaluate(&order)),
            best_order: Some(order),
            best_value: value,
            feasible_count,
            evaluated_count,
        },
        None => SearchOutcome {
            best_order_id: None,
            best_order: None,
            best_evaluation: None,
            best_value: 0.0,
            feasible_count,
            evaluated_count,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchmarkMode {
    /// Infeasible orders count with their (zero) minimum rate.
    #[default]
    IncludeInfeasible,
    /// Average only over orders where every user's secrecy rate is positive.
    FeasibleOnly,
}

/// Mean of the per-order minimum secrecy rate over `orders`.
pub fn benchmark_average_over(
    orders: &[DecodingOrder],
    channels: &ChannelRealization,
    alpha: &PowerAllocation,
    params: &SystemParams,
    mode: BenchmarkMode,
) -> Result<f64> {
    let link = Link::new(channels, alpha, params)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for order in orders {
        link.check_order(order)?;
        let value = link.min_secrecy(order);
        if mode == BenchmarkMode::IncludeInfeasible || value > 0.0 {
            sum += value;
            count += 1;
        }
    }
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

/// Mean minimum secrecy rate over the whole secure set.
pub fn benchmark_average(
    channels: &ChannelRealization,
    alpha: &PowerAllocation,
    params: &SystemParams,
) -> Result<f64> {
    let sets = OrderSets::build(params.n_users, SizeLimit::Capped)?;
    benchmark_average_over(
        &sets.secure,
        channels,
        alpha,
        params,
        BenchmarkMode::default(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    /// Best order among the favourable set.
    #[serde(rename = "optimal-L")]
    OptimalFavourable,
    /// Best order among secure orders outside the favourable set.
    #[serde(rename = "optimal-O")]
    OptimalOther,
    /// Policy order sorting other users weakest first.
    #[serde(rename = "policy-LPWU")]
    PolicyLpwu,
    /// Policy order sorting other users strongest first.
    #[serde(rename = "policy-LPSU")]
    PolicyLpsu,
    #[serde(rename = "benchmark")]
    Benchmark,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::OptimalFavourable,
        Scheme::OptimalOther,
        Scheme::PolicyLpwu,
        Scheme::PolicyLpsu,
        Scheme::Benchmark,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::OptimalFavourable => "optimal-L",
            Scheme::OptimalOther => "optimal-O",
            Scheme::PolicyLpwu => "policy-LPWU",
            Scheme::PolicyLpsu => "policy-LPSU",
            Scheme::Benchmark => "benchmark",
        }
    }

    /// Whether the scheme needs the enumerated secure set.
    pub fn needs_enumeration(self) -> bool {
        !matches!(self, Scheme::PolicyLpwu | Scheme::PolicyLpsu)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|scheme| scheme.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown scheme '{s}', expected one of optimal-L, optimal-O, policy-LPWU, policy-LPSU, benchmark"
                ))
            })
    }
}

/// -1.0, -0.9, ..., 1.0.
pub fn default_beta_grid() -> Vec<f64> {
    (-10..=10).map(|i| f64::from(i) / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    pub value: f64,
    pub order_id: Option<OrderId>,
    /// Per-user secrecy rates of the chosen order; the per-user mean for the
    /// benchmark; empty when no order was feasible.
    pub per_user_rates: Vec<f64>,
}

/// Evaluates one scheme at every beta of `grid`.
///
/// `sets` is reused when given; otherwise enumeration-backed schemes build it
/// under the default size cap.
pub fn beta_sweep(
    scheme: Scheme,
    grid: &[f64],
    channels: &ChannelRealization,
    params: &SystemParams,
    sets: Option<&OrderSets>,
) -> Result<Vec<SweepRow>> {
    let owned;
    let sets = match sets {
        Some(sets) => Some(sets),
        None if scheme.needs_enumeration() => {
            owned = OrderSets::build(params.n_users, SizeLimit::Capped)?;
            Some(&owned)
        }
        None => None,
    };
    if let Some(sets) = sets {
        if sets.n_users != params.n_users {
            return Err(Error::DimensionMismatch(format!(
                "order sets have {} users, params {}",
                sets.n_users, params.n_users
            )));
        }
    }
    grid.iter()
        .map(|&beta| {
            let alpha = power_allocation(channels, beta)?;
            sweep_point(scheme, beta, channels, &alpha, params, sets)
        })
        .collect()
}

fn sweep_point(
    scheme: Scheme,
    beta: f64,
    channels: &ChannelRealization,
    alpha: &PowerAllocation,
    params: &SystemParams,
    sets: Option<&OrderSets>,
) -> Result<SweepRow> {
    let from_search = |outcome: SearchOutcome| SweepRow {
        beta,
        value: outcome.best_value,
        order_id: outcome.best_order_id,
        per_user_rates: outcome
            .best_evaluation
            .map(|e| e.per_user_rates)
            .unwrap_or_default(),
    };
    let policy = |direction| -> Result<SweepRow> {
        let order = policy_order_with(params.n_users, direction)?;
        let link = Link::new(channels, alpha, params)?;
        let eval = link.evaluate(&order);
        Ok(SweepRow {
            beta,
            value: eval.min_rate,
            order_id: order_id(&order).ok(),
            per_user_rates: eval.per_user_rates,
        })
    };
    match scheme {
        Scheme::OptimalFavourable => {
            let sets = sets.expect("enumeration-backed scheme");
            Ok(from_search(max_min_order(
                &sets.favourable,
                channels,
                alpha,
                params,
            )?))
        }
        Scheme::OptimalOther => {
            let sets = sets.expect("enumeration-backed scheme");
            Ok(from_search(max_min_order(
                &sets.other,
                channels,
                alpha,
                params,
            )?))
        }
        Scheme::PolicyLpwu => policy(SortDirection::WeakToStrong),
        Scheme::PolicyLpsu => policy(SortDirection::StrongToWeak),
        Scheme::Benchmark => {
            let sets = sets.expect("enumeration-backed scheme");
            let link = Link::new(channels, alpha, params)?;
            let n = params.n_users;
            let mut per_user = vec![0.0; n];
            let mut min_sum = 0.0;
            for order in &sets.secure {
                let eval = link.evaluate(order);
                min_sum += eval.min_rate;
                for (acc, r) in per_user.iter_mut().zip(&eval.per_user_rates) {
                    *acc += r;
                }
            }
            let count = sets.secure.len().max(1) as f64;
            per_user.iter_mut().for_each(|r| *r /= count);
            Ok(SweepRow {
                beta,
                value: min_sum / count,
                order_id: None,
                per_user_rates: per_user,
            })
        }
    }
}
