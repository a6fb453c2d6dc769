//! Decoding-order matrices and the combinatorics around them.
//!
//! A decoding order for `N` users is an `N x N` matrix whose column `m` is
//! the SIC sequence followed by receiver `m`: entry `(k, m)` names the user
//! whose signal receiver `m` decodes at stage `k`. Every column is a
//! permutation of the users, so there are `(N!)^N` orders in total.
//!
//! Orders are ranked in mixed radix: each column contributes its
//! lexicographic permutation rank as a base-`N!` digit, column 0 most
//! significant. [`enumerate_orders`] streams orders in ascending rank, and
//! the derived [`Ord`] on [`DecodingOrder`] agrees with that rank.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest user count enumerated without an explicit override.
pub const ENUMERATION_CAP: usize = 4;

/// Largest user count whose order ids fit in a `u128`.
pub const MAX_RANKED_USERS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SizeLimit {
    /// Refuse more than [`ENUMERATION_CAP`] users.
    #[default]
    Capped,
    /// Allow anything that can still be ranked.
    Override,
}

impl SizeLimit {
    pub fn check(self, n_users: usize) -> Result<()> {
        if n_users == 0 {
            return Err(Error::InvalidParams("n_users must be at least 1".into()));
        }
        match self {
            SizeLimit::Capped if n_users > ENUMERATION_CAP => Err(Error::EnumerationCap {
                n_users,
                cap: ENUMERATION_CAP,
            }),
            _ if n_users > MAX_RANKED_USERS => Err(Error::InvalidParams(format!(
                "order ids are limited to {MAX_RANKED_USERS} users, got {n_users}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Mixed-radix rank of a [`DecodingOrder`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrderId(pub u128);

impl fmt::Display for OrderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DecodingOrder {
    n_users: usize,
    // Column-major: stages[m * n + k] is the user decoded by receiver m at stage k.
    stages: Vec<usize>,
    // positions[m * n + u] is the stage at which receiver m decodes user u.
    positions: Vec<usize>,
}

impl DecodingOrder {
    /// Builds an order from zero-based columns, one per receiver.
    pub fn from_columns(columns: Vec<Vec<usize>>) -> Result<Self> {
        let n = columns.len();
        if n == 0 {
            return Err(Error::InvalidOrder(
                "an order needs at least one user".into(),
            ));
        }
        let mut stages = Vec::with_capacity(n * n);
        for (m, column) in columns.iter().enumerate() {
            if column.len() != n {
                return Err(Error::InvalidOrder(format!(
                    "column {} has {} stages, expected {n}",
                    m + 1,
                    column.len()
                )));
            }
            let mut seen = vec![false; n];
            for &user in column {
                if user >= n || seen[user] {
                    return Err(Error::InvalidOrder(format!(
                        "column {} is not a permutation of 1..={n}",
                        m + 1
                    )));
                }
                seen[user] = true;
            }
            stages.extend_from_slice(column);
        }
        Ok(Self::from_stages_unchecked(n, stages))
    }

    /// Builds an order from one-based user labels, as written in a matrix.
    pub fn from_labels(columns: &[Vec<usize>]) -> Result<Self> {
        let zero_based = columns
            .iter()
            .map(|column| {
                column
                    .iter()
                    .map(|&label| {
                        label
                            .checked_sub(1)
                            .ok_or_else(|| Error::InvalidOrder("user labels start at 1".into()))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_columns(zero_based)
    }

    fn from_stages_unchecked(n: usize, stages: Vec<usize>) -> Self {
        let mut positions = vec![0; n * n];
        for m in 0..n {
            for k in 0..n {
                positions[m * n + stages[m * n + k]] = k;
            }
        }
        Self {
            n_users: n,
            stages,
            positions,
        }
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    /// SIC sequence of receiver `m` (zero-based user indices).
    pub fn column(&self, m: usize) -> &[usize] {
        let n = self.n_users;
        &self.stages[m * n..(m + 1) * n]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[usize]> {
        self.stages.chunks_exact(self.n_users)
    }

    /// Stage (zero-based) at which receiver `m` decodes user `n`.
    #[inline]
    pub fn position(&self, m: usize, n: usize) -> usize {
        self.positions[m * self.n_users + n]
    }

    /// Users that receiver `m` decodes before user `n`.
    pub fn decoded_before(&self, m: usize, n: usize) -> &[usize] {
        let column = self.column(m);
        &column[..self.position(m, n)]
    }

    /// Users that receiver `m` decodes after user `n`.
    pub fn decoded_after(&self, m: usize, n: usize) -> &[usize] {
        let column = self.column(m);
        &column[self.position(m, n) + 1..]
    }

    /// One-based labels of every column, in the matrix's own orientation.
    pub fn labels(&self) -> Vec<Vec<usize>> {
        self.columns()
            .map(|column| column.iter().map(|u| u + 1).collect())
            .collect()
    }
}

impl Ord for DecodingOrder {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n_users
            .cmp(&other.n_users)
            .then_with(|| self.stages.cmp(&other.stages))
    }
}

impl PartialOrd for DecodingOrder {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for DecodingOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.labels()).finish()
    }
}

/// Rows are SIC stages and columns are receivers, labels one-based.
impl fmt::Display for DecodingOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.n_users;
        let width = n.to_string().len();
        for k in 0..n {
            for m in 0..n {
                if m > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{:>width$}", self.stages[m * n + k] + 1)?;
            }
            if k + 1 < n {
                f.write_str("\n")?;
            }
        }
        Ok(())
    }
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// `(N!)^N`, or `None` when it overflows a `u128`.
pub fn total_orders(n_users: usize) -> Option<u128> {
    let base = factorial(n_users);
    (0..n_users).try_fold(1u128, |acc, _| acc.checked_mul(base))
}

/// Lexicographic rank of a permutation of `0..len`.
pub fn permutation_rank(perm: &[usize]) -> u128 {
    let n = perm.len();
    let mut used = vec![false; n];
    let mut rank = 0u128;
    for (k, &value) in perm.iter().enumerate() {
        let smaller_unused = (0..value).filter(|&v| !used[v]).count() as u128;
        rank += smaller_unused * factorial(n - 1 - k);
        used[value] = true;
    }
    rank
}

/// Inverse of [`permutation_rank`]. `rank` must be below `len!`.
pub fn permutation_unrank(len: usize, mut rank: u128) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..len).collect();
    let mut perm = Vec::with_capacity(len);
    for k in 0..len {
        let block = factorial(len - 1 - k);
        let digit = (rank / block) as usize;
        rank %= block;
        perm.push(pool.remove(digit));
    }
    perm
}

pub fn order_id(order: &DecodingOrder) -> Result<OrderId> {
    let n = order.n_users;
    if n > MAX_RANKED_USERS {
        return Err(Error::InvalidParams(format!(
            "order ids are limited to {MAX_RANKED_USERS} users, got {n}"
        )));
    }
    let radix = factorial(n);
    let id = order
        .columns()
        .fold(0u128, |acc, column| acc * radix + permutation_rank(column));
    Ok(OrderId(id))
}

pub fn order_from_id(n_users: usize, id: OrderId) -> Result<DecodingOrder> {
    SizeLimit::Override.check(n_users)?;
    let total = total_orders(n_users).expect("ranked sizes fit in u128");
    if id.0 >= total {
        return Err(Error::OrderIdRange {
            id: id.0,
            n_users,
            total,
        });
    }
    let radix = factorial(n_users);
    let mut digits = vec![0u128; n_users];
    let mut rest = id.0;
    for digit in digits.iter_mut().rev() {
        *digit = rest % radix;
        rest /= radix;
    }
    let stages = digits
        .into_iter()
        .flat_map(|d| permutation_unrank(n_users, d))
        .collect();
    Ok(DecodingOrder::from_stages_unchecked(n_users, stages))
}

/// Streaming iterator over every decoding order, in ascending [`OrderId`].
pub struct OrderStream {
    n_users: usize,
    perms: Vec<Vec<usize>>,
    digits: Vec<usize>,
    remaining: u128,
}

impl Iterator for OrderStream {
    type Item = DecodingOrder;

    fn next(&mut self) -> Option<DecodingOrder> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let n = self.n_users;
        let mut stages = Vec::with_capacity(n * n);
        for &d in &self.digits {
            stages.extend_from_slice(&self.perms[d]);
        }
        // Odometer step, last column least significant.
        for digit in self.digits.iter_mut().rev() {
            *digit += 1;
            if *digit < self.perms.len() {
                break;
            }
            *digit = 0;
        }
        Some(DecodingOrder::from_stages_unchecked(n, stages))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        match usize::try_from(self.remaining) {
            Ok(r) => (r, Some(r)),
            Err(_) => (usize::MAX, None),
        }
    }
}

pub fn enumerate_orders(n_users: usize, limit: SizeLimit) -> Result<OrderStream> {
    limit.check(n_users)?;
    let perms = (0..factorial(n_users))
        .map(|r| permutation_unrank(n_users, r))
        .collect();
    Ok(OrderStream {
        n_users,
        perms,
        digits: vec![0; n_users],
        remaining: total_orders(n_users).expect("ranked sizes fit in u128"),
    })
}

/// Every receiver decodes from the weakest user to the strongest.
pub fn conventional_order(n_users: usize) -> Result<DecodingOrder> {
    if n_users == 0 {
        return Err(Error::InvalidParams("n_users must be at least 1".into()));
    }
    let column: Vec<usize> = (0..n_users).rev().collect();
    Ok(DecodingOrder::from_stages_unchecked(
        n_users,
        column.repeat(n_users),
    ))
}

/// Each stronger receiver `m < n` must decode user `n` strictly before
/// user `n` decodes itself.
pub fn is_secure(order: &DecodingOrder) -> bool {
    let n_users = order.n_users;
    (1..n_users).all(|n| {
        let own = order.position(n, n);
        (0..n).all(|m| order.position(m, n) < own)
    })
}

/// Every receiver decodes its own signal at the final stage.
pub fn is_favourable(order: &DecodingOrder) -> bool {
    let last = order.n_users - 1;
    (0..order.n_users).all(|m| order.position(m, m) == last)
}

/// Moves each receiver's own signal to the last stage, keeping the relative
/// order of everything else.
pub fn self_last_transform(order: &DecodingOrder) -> DecodingOrder {
    let n = order.n_users;
    let mut stages = Vec::with_capacity(n * n);
    for (m, column) in order.columns().enumerate() {
        stages.extend(column.iter().copied().filter(|&u| u != m));
        stages.push(m);
    }
    DecodingOrder::from_stages_unchecked(n, stages)
}

/// How the policy order sorts the other users ahead of each receiver's own
/// signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortDirection {
    /// Weakest to strongest (W-S), used for beta < 0.
    WeakToStrong,
    /// Strongest to weakest (S-W), used for beta >= 0.
    StrongToWeak,
}

impl SortDirection {
    /// Beta = 0 falls on the strong-to-weak branch.
    pub fn for_beta(beta: f64) -> Self {
        if beta < 0.0 {
            SortDirection::WeakToStrong
        } else {
            SortDirection::StrongToWeak
        }
    }
}

pub fn policy_order(n_users: usize, beta: f64) -> Result<DecodingOrder> {
    if !(-1.0..=1.0).contains(&beta) {
        return Err(Error::InvalidBeta(beta));
    }
    policy_order_with(n_users, SortDirection::for_beta(beta))
}

pub fn policy_order_with(n_users: usize, direction: SortDirection) -> Result<DecodingOrder> {
    if n_users == 0 {
        return Err(Error::InvalidParams("n_users must be at least 1".into()));
    }
    let mut stages = Vec::with_capacity(n_users * n_users);
    for m in 0..n_users {
        let others = (0..n_users).filter(|&u| u != m);
        match direction {
            // Larger index means weaker channel.
            SortDirection::WeakToStrong => stages.extend(others.rev()),
            SortDirection::StrongToWeak => stages.extend(others),
        }
        stages.push(m);
    }
    Ok(DecodingOrder::from_stages_unchecked(n_users, stages))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct OrderCounts {
    pub total: u128,
    pub secure: u64,
    pub favourable: u64,
    /// Secure orders outside the favourable set (`S \ L`).
    pub secure_other: u64,
    /// Secure orders in which no receiver decodes itself last.
    pub secure_none_last: u64,
    /// Favourable orders that fail the secure predicate; zero by construction.
    pub favourable_not_secure: u64,
}

pub fn count_orders(n_users: usize, limit: SizeLimit) -> Result<OrderCounts> {
    let last = n_users.saturating_sub(1);
    let mut counts = OrderCounts::default();
    for order in enumerate_orders(n_users, limit)? {
        counts.total += 1;
        let secure = is_secure(&order);
        let favourable = is_favourable(&order);
        if secure {
            counts.secure += 1;
            if !favourable {
                counts.secure_other += 1;
            }
            if (0..n_users).all(|m| order.position(m, m) != last) {
                counts.secure_none_last += 1;
            }
        }
        if favourable {
            counts.favourable += 1;
            if !secure {
                counts.favourable_not_secure += 1;
            }
        }
    }
    Ok(counts)
}

pub fn count_secure(n_users: usize, limit: SizeLimit) -> Result<u64> {
    Ok(enumerate_orders(n_users, limit)?.filter(is_secure).count() as u64)
}

/// The secure set split into its favourable part `L` and the rest `O`.
#[derive(Debug, Clone)]
pub struct OrderSets {
    pub n_users: usize,
    /// All secure orders in ascending id.
    pub secure: Vec<DecodingOrder>,
    pub favourable: Vec<DecodingOrder>,
    pub other: Vec<DecodingOrder>,
}

impl OrderSets {
    pub fn build(n_users: usize, limit: SizeLimit) -> Result<Self> {
        let secure: Vec<DecodingOrder> = enumerate_orders(n_users, limit)?
            .filter(is_secure)
            .collect();
        let (favourable, other) = secure.iter().cloned().partition(is_favourable);
        Ok(Self {
            n_users,
            secure,
            favourable,
            other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(cols: &[&[usize]]) -> DecodingOrder {
        let cols: Vec<Vec<usize>> = cols.iter().map(|c| c.to_vec()).collect();
        DecodingOrder::from_labels(&cols).unwrap()
    }

    #[test]
    fn rejects_non_permutation_columns() {
        assert!(DecodingOrder::from_labels(&[vec![1, 1], vec![1, 2]]).is_err());
        assert!(DecodingOrder::from_labels(&[vec![1, 2], vec![1]]).is_err());
        assert!(DecodingOrder::from_labels(&[vec![0, 1], vec![1, 2]]).is_err());
        assert!(DecodingOrder::from_columns(vec![]).is_err());
    }

    #[test]
    fn before_and_after_views() {
        let order = labels(&[&[1, 3, 2], &[3, 1, 2], &[2, 1, 3]]);
        assert_eq!(order.decoded_before(0, 2), &[0]);
        assert_eq!(order.decoded_after(0, 2), &[1]);
        assert_eq!(order.decoded_before(2, 2), &[1, 0]);
        assert!(order.decoded_after(2, 2).is_empty());
    }

    #[test]
    fn small_enumerations() {
        assert_eq!(enumerate_orders(1, SizeLimit::Capped).unwrap().count(), 1);
        assert_eq!(enumerate_orders(2, SizeLimit::Capped).unwrap().count(), 4);
        assert_eq!(total_orders(4), Some(331_776));
        assert!(matches!(
            enumerate_orders(5, SizeLimit::Capped),
            Err(Error::EnumerationCap { n_users: 5, cap: 4 })
        ));
        assert!(enumerate_orders(5, SizeLimit::Override).is_ok());
        assert!(enumerate_orders(9, SizeLimit::Override).is_err());
    }

    #[test]
    fn stream_is_ascending_in_id() {
        let ids: Vec<u128> = enumerate_orders(3, SizeLimit::Capped)
            .unwrap()
            .map(|o| order_id(&o).unwrap().0)
            .collect();
        assert_eq!(ids, (0..216).collect::<Vec<_>>());
    }

    #[test]
    fn id_zero_is_identity_columns() {
        let order = order_from_id(2, OrderId(0)).unwrap();
        assert_eq!(order.labels(), vec![vec![1, 2], vec![1, 2]]);
        assert!(matches!(
            order_from_id(2, OrderId(4)),
            Err(Error::OrderIdRange { id: 4, .. })
        ));
    }

    #[test]
    fn ord_matches_id_order() {
        let a = order_from_id(3, OrderId(17)).unwrap();
        let b = order_from_id(3, OrderId(150)).unwrap();
        assert!(a < b);
    }

    #[test]
    fn conventional_order_shape() {
        let order = conventional_order(3).unwrap();
        assert!(order.labels().iter().all(|c| c == &[3, 2, 1]));
        assert_eq!(conventional_order(1).unwrap().labels(), vec![vec![1]]);
        assert!(!is_secure(&conventional_order(2).unwrap()));
        assert!(!is_secure(&conventional_order(4).unwrap()));
    }

    #[test]
    fn secure_predicate_examples() {
        assert!(is_secure(&labels(&[&[2, 1], &[1, 2]])));
        assert!(!is_secure(&labels(&[&[1, 2], &[1, 2]])));
        assert!(!is_favourable(&labels(&[&[2, 1], &[2, 1]])));
    }

    #[test]
    fn counts_for_two_and_three_users() {
        assert_eq!(count_secure(1, SizeLimit::Capped).unwrap(), 1);
        assert_eq!(count_secure(2, SizeLimit::Capped).unwrap(), 1);
        let c = count_orders(3, SizeLimit::Capped).unwrap();
        assert_eq!((c.total, c.secure, c.favourable), (216, 12, 8));
        assert_eq!(c.secure_other, 4);
        assert_eq!(c.favourable_not_secure, 0);
    }

    #[test]
    fn self_last_examples() {
        let order = labels(&[&[1, 3, 2], &[1, 3, 2], &[1, 2, 3]]);
        let moved = self_last_transform(&order);
        assert_eq!(moved.column(0), &[2, 1, 0]);
        assert!(is_favourable(&moved));
        let fav = policy_order(3, 0.3).unwrap();
        assert_eq!(self_last_transform(&fav), fav);
    }

    #[test]
    fn policy_examples() {
        assert_eq!(
            policy_order(3, -0.5).unwrap().labels(),
            vec![vec![3, 2, 1], vec![3, 1, 2], vec![2, 1, 3]]
        );
        assert_eq!(
            policy_order(3, 0.5).unwrap().labels(),
            vec![vec![2, 3, 1], vec![1, 3, 2], vec![1, 2, 3]]
        );
        for beta in [-1.0, 0.0, 1.0] {
            assert_eq!(
                policy_order(2, beta).unwrap().labels(),
                vec![vec![2, 1], vec![1, 2]]
            );
        }
        assert!(matches!(policy_order(3, 1.5), Err(Error::InvalidBeta(_))));
    }

    #[test]
    fn display_puts_stages_on_rows() {
        let text = policy_order(3, -0.5).unwrap().to_string();
        assert_eq!(text, "3 3 2\n2 1 1\n1 2 3");
    }
}
