//! Physical model: user placement, Rayleigh-faded path-loss channels,
//! fractional power allocation and the SINR / rate / secrecy-rate chain.
//!
//! When receiver `m` decodes user `n`, every signal it has already decoded
//! leaves a residual `zeta` fraction of its power as interference, and every
//! signal still ahead in the SIC sequence interferes at full power:
//!
//! ```text
//! sinr(n, m) = a_n g_m / ((zeta * sum_before a_i + sum_after a_j) g_m + 1 / rho_t)
//! ```
//!
//! The secrecy rate of user `n` is its own rate minus the best rate any
//! other receiver gets on its signal, clamped at zero.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orders::DecodingOrder;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub n_users: usize,
    /// Total BS transmit power, dBm.
    pub pt_dbm: f64,
    /// Receiver noise power, dBm.
    pub noise_dbm: f64,
    /// Residual interference left by an imperfect SIC stage, in `[0, 1]`.
    pub zeta: f64,
    /// Side of the square cell, meters. The BS sits at the center.
    pub field_len_m: f64,
    pub path_loss_const: f64,
    pub path_loss_exp: f64,
    /// Users closer than this to the BS are pushed out to it, meters.
    pub min_dist_m: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            n_users: 3,
            pt_dbm: 10.0,
            noise_dbm: -90.0,
            zeta: 0.1,
            field_len_m: 500.0,
            path_loss_const: 1.0,
            path_loss_exp: 3.0,
            min_dist_m: 1.0,
        }
    }
}

/// dBm to milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

impl SystemParams {
    pub fn with_users(mut self, n_users: usize) -> Self {
        self.n_users = n_users;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.n_users == 0 {
            return bad("n_users must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.zeta) {
            return bad(format!("zeta must lie in [0, 1], got {}", self.zeta));
        }
        if !self.pt_dbm.is_finite() || !self.noise_dbm.is_finite() {
            return bad("pt_dbm and noise_dbm must be finite".into());
        }
        if !(self.field_len_m > 0.0 && self.field_len_m.is_finite()) {
            return bad(format!(
                "field_len_m must be positive, got {}",
                self.field_len_m
            ));
        }
        if !(self.path_loss_const > 0.0 && self.path_loss_const.is_finite()) {
            return bad(format!(
                "path_loss_const must be positive, got {}",
                self.path_loss_const
            ));
        }
        if !(self.path_loss_exp > 0.0 && self.path_loss_exp.is_finite()) {
            return bad(format!(
                "path_loss_exp must be positive, got {}",
                self.path_loss_exp
            ));
        }
        if !(self.min_dist_m > 0.0 && self.min_dist_m < self.field_len_m / 2.0) {
            return bad(format!(
                "min_dist_m must lie in (0, field_len_m / 2), got {}",
                self.min_dist_m
            ));
        }
        Ok(())
    }

    /// Transmit SNR `P_t / sigma^2`, linear.
    pub fn rho_t(&self) -> f64 {
        dbm_to_mw(self.pt_dbm) / dbm_to_mw(self.noise_dbm)
    }

    /// Mean channel power gain `L_c d^-e` at distance `d`.
    pub fn mean_gain(&self, distance_m: f64) -> f64 {
        self.path_loss_const * distance_m.powf(-self.path_loss_exp)
    }
}

/// One draw of user positions and channel power gains, ordered strongest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    distances_m: Option<Vec<f64>>,
    gains: Vec<f64>,
}

impl ChannelRealization {
    /// Explicit gains, which must be positive and strictly descending.
    pub fn from_gains(gains: Vec<f64>) -> Result<Self> {
        check_gains(&gains)?;
        Ok(Self {
            distances_m: None,
            gains,
        })
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    /// Distances matching [`gains`](Self::gains), when the realization was sampled.
    pub fn distances_m(&self) -> Option<&[f64]> {
        self.distances_m.as_deref()
    }

    pub fn n_users(&self) -> usize {
        self.gains.len()
    }
}

fn check_gains(gains: &[f64]) -> Result<()> {
    if gains.is_empty() {
        return Err(Error::InvalidParams(
            "at least one channel gain is required".into(),
        ));
    }
    if !gains.iter().all(|g| g.is_finite() && *g > 0.0) {
        return Err(Error::InvalidParams(
            "channel gains must be positive and finite".into(),
        ));
    }
    if !gains.windows(2).all(|w| w[0] > w[1]) {
        return Err(Error::InvalidParams(
            "channel gains must be strictly descending".into(),
        ));
    }
    Ok(())
}

/// Rayleigh-faded power gain at `distance_m`: the path-loss mean times a
/// unit-mean exponential variate.
pub fn fading_gain<R: Rng + ?Sized>(params: &SystemParams, distance_m: f64, rng: &mut R) -> f64 {
    let fade: f64 = rng.sample(Exp1);
    params.mean_gain(distance_m) * fade
}

/// Places users uniformly in the square cell and draws their gains.
///
/// Users are relabeled so that user 0 is the strongest. A draw containing a
/// zero or an exactly repeated gain is discarded and redrawn from the same
/// stream, so the output stays a pure function of `(params, seed)`.
pub fn sample_channels(params: &SystemParams, seed: u64) -> Result<ChannelRealization> {
    params.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let half = params.field_len_m / 2.0;
    loop {
        let mut users: Vec<(f64, f64)> = (0..params.n_users)
            .map(|_| {
                let x = rng.random_range(-half..=half);
                let y = rng.random_range(-half..=half);
                let d = x.hypot(y).max(params.min_dist_m);
                (d, fading_gain(params, d, &mut rng))
            })
            .collect();
        // Stable sort keeps original index order on ties; ties are then redrawn.
        users.sort_by(|a, b| b.1.total_cmp(&a.1));
        let gains: Vec<f64> = users.iter().map(|u| u.1).collect();
        if check_gains(&gains).is_ok() {
            return Ok(ChannelRealization {
                distances_m: Some(users.iter().map(|u| u.0).collect()),
                gains,
            });
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    alphas: Vec<f64>,
    beta: Option<f64>,
}

const ALPHA_SUM_TOL: f64 = 1e-12;

impl PowerAllocation {
    /// Explicit fractions: non-negative, summing to one.
    pub fn from_alphas(alphas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() || !alphas.iter().all(|a| a.is_finite() && *a >= 0.0) {
            return Err(Error::InvalidParams(
                "power fractions must be non-negative and finite".into(),
            ));
        }
        let sum: f64 = alphas.iter().sum();
        if (sum - 1.0).abs() > ALPHA_SUM_TOL {
            return Err(Error::InvalidParams(format!(
                "power fractions must sum to 1, got {sum}"
            )));
        }
        Ok(Self { alphas, beta: None })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Exponent the allocation was derived from, if any.
    pub fn beta(&self) -> Option<f64> {
        self.beta
    }

    pub fn n_users(&self) -> usize {
        self.alphas.len()
    }
}

/// `alpha_n` proportional to `g_n^-beta`. Negative beta favours strong users,
/// positive beta favours weak users, zero splits power evenly.
pub fn power_allocation(channels: &ChannelRealization, beta: f64) -> Result<PowerAllocation> {
    if !(-1.0..=1.0).contains(&beta) {
        return Err(Error::InvalidBeta(beta));
    }
    let inverse: Vec<f64> = channels.gains.iter().map(|g| g.powf(-beta)).collect();
    let total: f64 = inverse.iter().sum();
    let alphas = inverse.iter().map(|w| w / total).collect();
    Ok(PowerAllocation {
        alphas,
        beta: Some(beta),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecrecyEvaluation {
    /// Clamped secrecy rate of each user, bits/s/Hz.
    pub per_user_rates: Vec<f64>,
    pub min_rate: f64,
    /// Receiver with the best rate on each user's signal; `None` for a lone user.
    pub eavesdropper_index: Vec<Option<usize>>,
}

impl SecrecyEvaluation {
    /// Every user keeps a strictly positive secrecy rate.
    pub fn is_feasible(&self) -> bool {
        self.per_user_rates.iter().all(|&r| r > 0.0)
    }
}

/// Borrowed, pre-validated inputs for the inner evaluation loops.
#[derive(Clone, Copy)]
pub(crate) struct Link<'a> {
    gains: &'a [f64],
    alphas: &'a [f64],
    zeta: f64,
    inv_rho: f64,
}

impl<'a> Link<'a> {
    pub(crate) fn new(
        channels: &'a ChannelRealization,
        alpha: &'a PowerAllocation,
        params: &SystemParams,
    ) -> Result<Self> {
        let n = params.n_users;
        if channels.n_users() != n || alpha.n_users() != n {
            return Err(Error::DimensionMismatch(format!(
                "params have {n} users, channels {}, power allocation {}",
                channels.n_users(),
                alpha.n_users()
            )));
        }
        Ok(Self {
            gains: &channels.gains,
            alphas: &alpha.alphas,
            zeta: params.zeta,
            inv_rho: 1.0 / params.rho_t(),
        })
    }

    pub(crate) fn check_order(&self, order: &DecodingOrder) -> Result<()> {
        if order.n_users() != self.gains.len() {
            return Err(Error::DimensionMismatch(format!(
                "order has {} users, channels {}",
                order.n_users(),
                self.gains.len()
            )));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn sinr(&self, order: &DecodingOrder, n: usize, m: usize) -> f64 {
        let stage = order.position(m, n);
        let column = order.column(m);
        let before: f64 = column[..stage].iter().map(|&i| self.alphas[i]).sum();
        let after: f64 = column[stage + 1..].iter().map(|&j| self.alphas[j]).sum();
        let g = self.gains[m];
        self.alphas[n] * g / ((self.zeta * before + after) * g + self.inv_rho)
    }

    /// Clamped secrecy rate of user `n` and its strongest eavesdropper.
    #[inline]
    pub(crate) fn secrecy(&self, order: &DecodingOrder, n: usize) -> (f64, Option<usize>) {
        let own = (1.0 + self.sinr(order, n, n)).log2();
        let mut best: Option<(usize, f64)> = None;
        for m in (0..self.gains.len()).filter(|&m| m != n) {
            let s = self.sinr(order, n, m);
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((m, s));
            }
        }
        match best {
            Some((m, s)) => ((own - (1.0 + s).log2()).max(0.0), Some(m)),
            None => (own.max(0.0), None),
        }
    }

    /// Minimum clamped secrecy rate over users, without allocating.
    #[inline]
    pub(crate) fn min_secrecy(&self, order: &DecodingOrder) -> f64 {
        (0..self.gains.len())
            .map(|n| self.secrecy(order, n).0)
            .fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn evaluate(&self, order: &DecodingOrder) -> SecrecyEvaluation {
        let (per_user_rates, eavesdropper_index): (Vec<f64>, Vec<Option<usize>>) =
            (0..self.gains.len())
                .map(|n| self.secrecy(order, n))
                .unzip();
        let min_rate = per_user_rates.iter().copied().fold(f64::INFINITY, f64::min);
        SecrecyEvaluation {
            per_user_rates,
            min_rate,
            eavesdropper_index,
        }
    }
}

/// SINR when receiver `m` decodes user `n` under `order` (zero-based users).
pub fn sinr(
    order: &DecodingOrder,
    channels: &ChannelRealization,
    alpha: &PowerAllocation,
    params: &SystemParams,
    n: usize,
    m: usize,
) -> Result<f64> {
    let link = Link::new(channels, alpha, params)?;
    link.check_order(order)?;
    let n_users = params.n_users;
    for index in [n, m] {
        if index >= n_users {
            return Err(Error::UserIndex { index, n_users });
        }
    }
    Ok(link.sinr(order, n, m))
}

pub fn secrecy_rates(
    order: &DecodingOrder,
    channels: &ChannelRealization,
    alpha: &PowerAllocation,
    params: &SystemParams,
) -> Result<SecrecyEvaluation> {
    let link = Link::new(channels, alpha, params)?;
    link.check_order(order)?;
    Ok(link.evaluate(order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orders::{conventional_order, policy_order};

    fn worked() -> (
        DecodingOrder,
        ChannelRealization,
        PowerAllocation,
        SystemParams,
    ) {
        let order = DecodingOrder::from_labels(&[vec![2, 1], vec![1, 2]]).unwrap();
        let channels = ChannelRealization::from_gains(vec![4.0, 1.0]).unwrap();
        let alpha = PowerAllocation::from_alphas(vec![0.2, 0.8]).unwrap();
        let params = SystemParams {
            n_users: 2,
            pt_dbm: 10.0,
            noise_dbm: 0.0,
            ..SystemParams::default()
        };
        (order, channels, alpha, params)
    }

    #[test]
    fn default_rho_is_ten_to_the_ten() {
        let rho = SystemParams::default().rho_t();
        assert!((rho / 1e10 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validation_rejects_bad_params() {
        let base = SystemParams::default();
        for bad in [
            SystemParams {
                n_users: 0,
                ..base.clone()
            },
            SystemParams {
                zeta: 1.5,
                ..base.clone()
            },
            SystemParams {
                field_len_m: 0.0,
                ..base.clone()
            },
            SystemParams {
                path_loss_exp: 0.0,
                ..base.clone()
            },
            SystemParams {
                min_dist_m: 250.0,
                ..base.clone()
            },
            SystemParams {
                min_dist_m: 0.0,
                ..base.clone()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
        assert!(base.validate().is_ok());
    }

    #[test]
    fn sampling_is_deterministic_and_sorted() {
        let params = SystemParams::default().with_users(4);
        let a = sample_channels(&params, 42).unwrap();
        let b = sample_channels(&params, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.gains().windows(2).all(|w| w[0] > w[1]));
        let diag_half = params.field_len_m / 2.0 * 2f64.sqrt();
        for &d in a.distances_m().unwrap() {
            assert!((params.min_dist_m..=diag_half).contains(&d));
        }
        assert_ne!(a, sample_channels(&params, 43).unwrap());
    }

    #[test]
    fn allocation_examples() {
        let ch = ChannelRealization::from_gains(vec![4.0, 1.0]).unwrap();
        let lpsu = power_allocation(&ch, 1.0).unwrap();
        assert!((lpsu.alphas()[0] - 0.2).abs() < 1e-15);
        assert!((lpsu.alphas()[1] - 0.8).abs() < 1e-15);
        let lpwu = power_allocation(&ch, -1.0).unwrap();
        assert!((lpwu.alphas()[0] - 0.8).abs() < 1e-15);
        let ch4 = ChannelRealization::from_gains(vec![9.0, 3.0, 2.0, 0.5]).unwrap();
        let uniform = power_allocation(&ch4, 0.0).unwrap();
        assert!(uniform.alphas().iter().all(|&a| a == 0.25));
        assert!(matches!(
            power_allocation(&ch, 1.01),
            Err(Error::InvalidBeta(_))
        ));
        assert!(power_allocation(&ch, f64::NAN).is_err());
    }

    #[test]
    fn worked_sinr_values() {
        let (order, ch, alpha, params) = worked();
        let s22 = sinr(&order, &ch, &alpha, &params, 1, 1).unwrap();
        let s21 = sinr(&order, &ch, &alpha, &params, 1, 0).unwrap();
        assert!((s22 - 0.8 / 0.12).abs() < 1e-12);
        assert!((s21 - 3.2 / 0.9).abs() < 1e-12);
        assert!(matches!(
            sinr(&order, &ch, &alpha, &params, 2, 0),
            Err(Error::UserIndex { index: 2, .. })
        ));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (_, ch, alpha, params) = worked();
        let order3 = policy_order(3, 0.0).unwrap();
        assert!(matches!(
            secrecy_rates(&order3, &ch, &alpha, &params),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn zero_power_user_has_zero_secrecy() {
        let ch = ChannelRealization::from_gains(vec![4.0, 2.0, 1.0]).unwrap();
        let alpha = PowerAllocation::from_alphas(vec![0.5, 0.0, 0.5]).unwrap();
        let params = SystemParams::default().with_users(3);
        let eval = secrecy_rates(&policy_order(3, 0.5).unwrap(), &ch, &alpha, &params).unwrap();
        assert_eq!(eval.per_user_rates[1], 0.0);
        assert!(!eval.is_feasible());
    }

    #[test]
    fn conventional_order_leaks_weaker_users() {
        let params = SystemParams::default().with_users(3);
        let ch = sample_channels(&params, 7).unwrap();
        let alpha = power_allocation(&ch, -0.4).unwrap();
        let eval = secrecy_rates(&conventional_order(3).unwrap(), &ch, &alpha, &params).unwrap();
        assert!(eval.per_user_rates[0] > 0.0);
        assert_eq!(eval.per_user_rates[1], 0.0);
        assert_eq!(eval.per_user_rates[2], 0.0);
        assert_eq!(eval.eavesdropper_index[1], Some(0));
        assert_eq!(eval.eavesdropper_index[2], Some(0));
    }

    #[test]
    fn single_user_has_no_eavesdropper() {
        let ch = ChannelRealization::from_gains(vec![1e-6]).unwrap();
        let alpha = PowerAllocation::from_alphas(vec![1.0]).unwrap();
        let params = SystemParams::default().with_users(1);
        let eval = secrecy_rates(&policy_order(1, 0.0).unwrap(), &ch, &alpha, &params).unwrap();
        assert_eq!(eval.eavesdropper_index, vec![None]);
        assert!(eval.min_rate > 0.0);
    }
}
