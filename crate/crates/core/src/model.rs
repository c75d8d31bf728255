//! Core domain types shared by every module.
//!
//! Agents and items are dense indices internally; their external string ids
//! live on [`Instance`]. Lexicographic tie-breaking always uses the external
//! item id order, exposed as [`Instance::lex_rank`].

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact rational in canonical form (coprime, positive denominator).
pub type Rational = num_rational::BigRational;

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Smallest integer not below `value`.
pub fn ceil_int(value: &Rational) -> BigInt {
    value.ceil().to_integer()
}

/// An allocation problem: agents, items, and an additive utility table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    agents: Vec<String>,
    items: Vec<String>,
    utilities: Vec<Vec<Rational>>,
    lex_rank: Vec<usize>,
}

impl Instance {
    pub fn new(
        agents: Vec<String>,
        items: Vec<String>,
        utilities: Vec<Vec<Rational>>,
    ) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::InvalidInstance(
                "at least one agent is required".into(),
            ));
        }
        if items.is_empty() {
            return Err(Error::InvalidInstance(
                "at least one item is required".into(),
            ));
        }
        check_unique("agent", &agents)?;
        check_unique("item", &items)?;
        if utilities.len() != agents.len() {
            return Err(Error::InvalidInstance(format!(
                "{} utility rows for {} agents",
                utilities.len(),
                agents.len()
            )));
        }
        for (i, row) in utilities.iter().enumerate() {
            if row.len() != items.len() {
                return Err(Error::InvalidInstance(format!(
                    "agent {} has {} utilities for {} items",
                    agents[i],
                    row.len(),
                    items.len()
                )));
            }
            if let Some(o) = row.iter().position(|u| u.is_negative()) {
                return Err(Error::InvalidInstance(format!(
                    "negative utility for agent {} on item {}",
                    agents[i], items[o]
                )));
            }
        }
        let lex_rank = lex_ranks(&items);
        Ok(Self {
            agents,
            items,
            utilities,
            lex_rank,
        })
    }

    /// Instance with generated ids `1..=n` for agents and zero-padded `o1..=om` for items.
    pub fn from_utilities(utilities: Vec<Vec<Rational>>) -> Result<Self> {
        let n = utilities.len();
        let m = utilities.first().map_or(0, Vec::len);
        let width = m.to_string().len();
        let agents = (1..=n).map(|i| i.to_string()).collect();
        let items = (1..=m).map(|o| format!("o{o:0width$}")).collect();
        Self::new(agents, items, utilities)
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn utility(&self, agent: usize, item: usize) -> &Rational {
        &self.utilities[agent][item]
    }

    pub fn utilities(&self) -> &[Vec<Rational>] {
        &self.utilities
    }

    /// Position of each item in the lexicographic order of item ids.
    pub fn lex_rank(&self) -> &[usize] {
        &self.lex_rank
    }

    pub fn is_binary(&self) -> bool {
        self.binary_violation().is_none()
    }

    pub(crate) fn binary_violation(&self) -> Option<(usize, usize)> {
        self.utilities.iter().enumerate().find_map(|(i, row)| {
            row.iter()
                .position(|u| !u.is_zero() && !u.is_one())
                .map(|o| (i, o))
        })
    }

    /// Copy of this instance with one agent's utility row replaced.
    pub fn with_agent_utilities(&self, agent: usize, row: Vec<Rational>) -> Result<Self> {
        let mut utilities = self.utilities.clone();
        utilities[agent] = row;
        Self::new(self.agents.clone(), self.items.clone(), utilities)
    }

    pub fn agent_index(&self, id: &str) -> Option<usize> {
        self.agents.iter().position(|a| a == id)
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.items.iter().position(|o| o == id)
    }

    pub fn ordinal_profile(&self) -> OrdinalProfile {
        ordinal_from_utilities(self)
    }
}

fn check_unique(kind: &str, ids: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::InvalidInstance(format!(
                "duplicate {kind} id {id:?}"
            )));
        }
    }
    Ok(())
}

pub(crate) fn lex_ranks(ids: &[String]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
    let mut rank = vec![0; ids.len()];
    for (r, &o) in order.iter().enumerate() {
        rank[o] = r;
    }
    rank
}

/// A weak order over items as a list of indifference tiers, best first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeakOrder {
    tiers: Vec<Vec<usize>>,
    tier_of: Vec<usize>,
}

impl WeakOrder {
    pub fn new(tiers: Vec<Vec<usize>>, num_items: usize) -> Result<Self> {
        let mut tier_of = vec![usize::MAX; num_items];
        for (t, tier) in tiers.iter().enumerate() {
            if tier.is_empty() {
                return Err(Error::InvalidArgument("empty indifference tier".into()));
            }
            for &o in tier {
                if o >= num_items || tier_of[o] != usize::MAX {
                    return Err(Error::InvalidArgument(format!(
                        "tiers do not partition the items (item {o})"
                    )));
                }
                tier_of[o] = t;
            }
        }
        if tier_of.contains(&usize::MAX) {
            return Err(Error::InvalidArgument(
                "tiers do not cover every item".into(),
            ));
        }
        Ok(Self { tiers, tier_of })
    }

    /// Strict order from a best-first item list.
    pub fn strict(order: Vec<usize>) -> Result<Self> {
        let m = order.len();
        Self::new(order.into_iter().map(|o| vec![o]).collect(), m)
    }

    pub fn tiers(&self) -> &[Vec<usize>] {
        &self.tiers
    }

    pub fn tier_of(&self, item: usize) -> usize {
        self.tier_of[item]
    }

    pub fn num_items(&self) -> usize {
        self.tier_of.len()
    }

    pub fn is_strict(&self) -> bool {
        self.tiers.iter().all(|t| t.len() == 1)
    }

    /// `a ≻ b`.
    pub fn prefers(&self, a: usize, b: usize) -> bool {
        self.tier_of[a] < self.tier_of[b]
    }

    /// `a ≿ b`.
    pub fn weakly_prefers(&self, a: usize, b: usize) -> bool {
        self.tier_of[a] <= self.tier_of[b]
    }

    /// All items best first; tie order is the stored tier order.
    pub fn flattened(&self) -> Vec<usize> {
        self.tiers.iter().flatten().copied().collect()
    }

    /// Breaks every tie by ascending `key` (lower key first).
    pub fn strictified_by(&self, key: &[usize]) -> WeakOrder {
        let order = self
            .tiers
            .iter()
            .flat_map(|tier| {
                let mut tier = tier.clone();
                tier.sort_by_key(|&o| key[o]);
                tier
            })
            .collect();
        WeakOrder::strict(order).expect("strictification of a valid weak order")
    }
}

/// One weak order per agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrdinalProfile {
    orders: Vec<WeakOrder>,
}

impl OrdinalProfile {
    pub fn new(orders: Vec<WeakOrder>) -> Result<Self> {
        let Some(first) = orders.first() else {
            return Err(Error::InvalidArgument(
                "profile needs at least one agent".into(),
            ));
        };
        let m = first.num_items();
        if orders.iter().any(|o| o.num_items() != m) {
            return Err(Error::Dimension("orders over different item sets".into()));
        }
        Ok(Self { orders })
    }

    /// Strict profile from best-first item lists.
    pub fn from_strict_orders(orders: Vec<Vec<usize>>) -> Result<Self> {
        Self::new(
            orders
                .into_iter()
                .map(WeakOrder::strict)
                .collect::<Result<_>>()?,
        )
    }

    pub fn num_agents(&self) -> usize {
        self.orders.len()
    }

    pub fn num_items(&self) -> usize {
        self.orders[0].num_items()
    }

    pub fn order(&self, agent: usize) -> &WeakOrder {
        &self.orders[agent]
    }

    pub fn orders(&self) -> &[WeakOrder] {
        &self.orders
    }

    pub fn is_strict(&self) -> bool {
        self.orders.iter().all(WeakOrder::is_strict)
    }

    pub fn first_tied_agent(&self) -> Option<usize> {
        self.orders.iter().position(|o| !o.is_strict())
    }

    pub fn strictified_by(&self, key: &[usize]) -> OrdinalProfile {
        OrdinalProfile {
            orders: self.orders.iter().map(|o| o.strictified_by(key)).collect(),
        }
    }
}

/// Weak order per agent: `o ≿ o'` iff `u(o) >= u(o')`. Tiers list items in
/// lexicographic id order.
pub fn ordinal_from_utilities(instance: &Instance) -> OrdinalProfile {
    let m = instance.num_items();
    let rank = instance.lex_rank();
    let orders = instance
        .utilities()
        .iter()
        .map(|row| {
            let mut items: Vec<usize> = (0..m).collect();
            items.sort_by(|&a, &b| row[b].cmp(&row[a]).then(rank[a].cmp(&rank[b])));
            let mut tiers: Vec<Vec<usize>> = Vec::new();
            for o in items {
                match tiers.last_mut() {
                    Some(tier) if row[tier[0]] == row[o] => tier.push(o),
                    _ => tiers.push(vec![o]),
                }
            }
            WeakOrder::new(tiers, m).expect("tiers built from a sort")
        })
        .collect();
    OrdinalProfile { orders }
}

pub fn utility_of_bundle(instance: &Instance, agent: usize, row: &[Rational]) -> Rational {
    row.iter()
        .zip(&instance.utilities[agent])
        .filter(|(p, _)| !p.is_zero())
        .map(|(p, u)| p * u)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SdRelation {
    Dominates,
    Dominated,
    Equivalent,
    Incomparable,
}

impl fmt::Display for SdRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SdRelation::Dominates => "dominates",
            SdRelation::Dominated => "dominated",
            SdRelation::Equivalent => "equivalent",
            SdRelation::Incomparable => "incomparable",
        })
    }
}

/// Cumulative mass of `row` over each upper contour set of `order`.
pub(crate) fn tier_prefix_sums(order: &WeakOrder, row: &[Rational]) -> Vec<Rational> {
    let mut acc = Rational::zero();
    order
        .tiers()
        .iter()
        .map(|tier| {
            for &o in tier {
                acc += &row[o];
            }
            acc.clone()
        })
        .collect()
}

/// `x ≽^SD y` for a single weak order.
pub fn sd_weakly_prefers(order: &WeakOrder, x: &[Rational], y: &[Rational]) -> bool {
    tier_prefix_sums(order, x)
        .iter()
        .zip(tier_prefix_sums(order, y))
        .all(|(a, b)| *a >= b)
}

/// Relation of `x` to `y` under the agent's SD extension.
pub fn sd_compare(
    profile: &OrdinalProfile,
    agent: usize,
    x: &[Rational],
    y: &[Rational],
) -> SdRelation {
    let order = profile.order(agent);
    let (mut ge, mut le) = (true, true);
    for (a, b) in tier_prefix_sums(order, x)
        .iter()
        .zip(tier_prefix_sums(order, y))
    {
        match a.cmp(&b) {
            Ordering::Less => ge = false,
            Ordering::Greater => le = false,
            Ordering::Equal => {}
        }
    }
    match (ge, le) {
        (true, true) => SdRelation::Equivalent,
        (true, false) => SdRelation::Dominates,
        (false, true) => SdRelation::Dominated,
        (false, false) => SdRelation::Incomparable,
    }
}

/// Matrix of assignment probabilities, rows are agents (or representatives).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RandomAllocation {
    rows: Vec<Vec<Rational>>,
}

impl RandomAllocation {
    /// Validates entries in `[0, 1]` and unit column sums.
    pub fn new(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || m == 0 {
            return Err(Error::InvalidAllocation("empty matrix".into()));
        }
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidAllocation("ragged rows".into()));
        }
        let one = Rational::one();
        for (i, row) in rows.iter().enumerate() {
            for (o, p) in row.iter().enumerate() {
                if p.is_negative() || *p > one {
                    return Err(Error::InvalidAllocation(format!(
                        "entry ({i}, {o}) = {p} outside [0, 1]"
                    )));
                }
            }
        }
        for o in 0..m {
            let total: Rational = rows.iter().map(|r| &r[o]).sum();
            if total != one {
                return Err(Error::InvalidAllocation(format!(
                    "column {o} sums to {total}, expected 1"
                )));
            }
        }
        Ok(Self { rows })
    }

    pub(crate) fn from_rows_unchecked(rows: Vec<Vec<Rational>>) -> Self {
        Self { rows }
    }

    pub fn zeros(n: usize, m: usize) -> Vec<Vec<Rational>> {
        vec![vec![Rational::zero(); m]; n]
    }

    pub fn num_agents(&self) -> usize {
        self.rows.len()
    }

    pub fn num_items(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.rows
    }

    pub fn row(&self, agent: usize) -> &[Rational] {
        &self.rows[agent]
    }

    pub fn get(&self, agent: usize, item: usize) -> &Rational {
        &self.rows[agent][item]
    }

    pub fn into_rows(self) -> Vec<Vec<Rational>> {
        self.rows
    }

    pub fn row_sum(&self, agent: usize) -> Rational {
        self.rows[agent].iter().sum()
    }

    /// The deterministic allocation this matrix represents, if it is 0/1.
    pub fn to_deterministic(&self) -> Option<DeterministicAllocation> {
        let owners = (0..self.num_items())
            .map(|o| (0..self.num_agents()).find(|&i| self.rows[i][o].is_one()))
            .collect::<Option<Vec<_>>>()?;
        Some(DeterministicAllocation {
            owners,
            num_agents: self.num_agents(),
        })
    }
}

/// Total map item → owning agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DeterministicAllocation {
    owners: Vec<usize>,
    num_agents: usize,
}

impl DeterministicAllocation {
    pub fn new(owners: Vec<usize>, num_agents: usize) -> Result<Self> {
        if owners.is_empty() {
            return Err(Error::InvalidAllocation("no items".into()));
        }
        if let Some(o) = owners.iter().position(|&a| a >= num_agents) {
            return Err(Error::InvalidAllocation(format!(
                "item {o} owned by unknown agent {}",
                owners[o]
            )));
        }
        Ok(Self { owners, num_agents })
    }

    /// Builds from per-agent bundles; every item must appear exactly once.
    pub fn from_bundles(bundles: &[Vec<usize>], num_items: usize) -> Result<Self> {
        let mut owners = vec![usize::MAX; num_items];
        for (i, bundle) in bundles.iter().enumerate() {
            for &o in bundle {
                if o >= num_items || owners[o] != usize::MAX {
                    return Err(Error::InvalidAllocation(format!(
                        "item {o} assigned twice or out of range"
                    )));
                }
                owners[o] = i;
            }
        }
        if owners.contains(&usize::MAX) {
            return Err(Error::InvalidAllocation("some item has no owner".into()));
        }
        Self::new(owners, bundles.len())
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn num_items(&self) -> usize {
        self.owners.len()
    }

    pub fn owner(&self, item: usize) -> usize {
        self.owners[item]
    }

    pub fn owners(&self) -> &[usize] {
        &self.owners
    }

    pub fn bundle(&self, agent: usize) -> Vec<usize> {
        (0..self.owners.len())
            .filter(|&o| self.owners[o] == agent)
            .collect()
    }

    pub fn bundles(&self) -> Vec<Vec<usize>> {
        let mut bundles = vec![Vec::new(); self.num_agents];
        for (o, &i) in self.owners.iter().enumerate() {
            bundles[i].push(o);
        }
        bundles
    }

    /// Indicator row of one agent's bundle.
    pub fn row(&self, agent: usize) -> Vec<Rational> {
        self.owners
            .iter()
            .map(|&i| {
                if i == agent {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            })
            .collect()
    }

    pub fn to_matrix(&self) -> RandomAllocation {
        RandomAllocation::from_rows_unchecked((0..self.num_agents).map(|i| self.row(i)).collect())
    }

    /// Every owned item has positive probability in `p`.
    pub fn is_consistent_with(&self, p: &RandomAllocation) -> bool {
        self.owners
            .iter()
            .enumerate()
            .all(|(o, &i)| p.get(i, o).is_positive())
    }
}

/// Finite lottery over deterministic allocations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lottery {
    entries: Vec<(Rational, DeterministicAllocation)>,
}

impl Lottery {
    pub fn new(entries: Vec<(Rational, DeterministicAllocation)>) -> Result<Self> {
        let Some((_, first)) = entries.first() else {
            return Err(Error::InvalidLottery("empty support".into()));
        };
        let (n, m) = (first.num_agents(), first.num_items());
        let one = Rational::one();
        let mut total = Rational::zero();
        for (w, a) in &entries {
            if !w.is_positive() || *w > one {
                return Err(Error::InvalidLottery(format!("weight {w} outside (0, 1]")));
            }
            if a.num_agents() != n || a.num_items() != m {
                return Err(Error::InvalidLottery(
                    "allocations of different shapes".into(),
                ));
            }
            total += w;
        }
        if total != one {
            return Err(Error::InvalidLottery(format!("weights sum to {total}")));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(Rational, DeterministicAllocation)] {
        &self.entries
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    pub fn num_agents(&self) -> usize {
        self.entries[0].1.num_agents()
    }

    pub fn num_items(&self) -> usize {
        self.entries[0].1.num_items()
    }

    pub fn allocations(&self) -> impl Iterator<Item = &DeterministicAllocation> {
        self.entries.iter().map(|(_, a)| a)
    }

    /// Sums weights of identical allocations, keeping first-occurrence order.
    pub fn merged(&self) -> Lottery {
        let mut merged: Vec<(Rational, DeterministicAllocation)> = Vec::new();
        for (w, a) in &self.entries {
            match merged.iter_mut().find(|(_, b)| b == a) {
                Some((acc, _)) => *acc += w,
                None => merged.push((w.clone(), a.clone())),
            }
        }
        Lottery { entries: merged }
    }

    pub fn expected_allocation(&self) -> RandomAllocation {
        expected_allocation(self)
    }
}

/// Entrywise `Σ weight · matrix`.
pub fn expected_allocation(lottery: &Lottery) -> RandomAllocation {
    let mut rows = RandomAllocation::zeros(lottery.num_agents(), lottery.num_items());
    for (w, a) in lottery.entries() {
        for (o, &i) in a.owners().iter().enumerate() {
            rows[i][o] += w;
        }
    }
    RandomAllocation::from_rows_unchecked(rows)
}

/// One contiguous interval of eating a single item at unit speed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub item: usize,
    pub start: Rational,
    pub end: Rational,
    pub amount: Rational,
}

/// Per-agent, time-ordered consumption record of an eating process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EatingTrace {
    segments: Vec<Vec<Segment>>,
}

impl EatingTrace {
    pub fn new(num_agents: usize) -> Self {
        Self {
            segments: vec![Vec::new(); num_agents],
        }
    }

    pub fn num_agents(&self) -> usize {
        self.segments.len()
    }

    pub fn segments(&self, agent: usize) -> &[Segment] {
        &self.segments[agent]
    }

    /// Time at which the agent's last segment ends.
    pub fn end_time(&self, agent: usize) -> Rational {
        self.segments[agent]
            .last()
            .map_or_else(Rational::zero, |s| s.end.clone())
    }

    /// Latest end time over all agents.
    pub fn horizon(&self) -> Rational {
        (0..self.num_agents())
            .map(|i| self.end_time(i))
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// Appends `amount` of `item` right after the agent's current end time,
    /// extending the last segment when it is the same item.
    pub fn push(&mut self, agent: usize, item: usize, amount: Rational) {
        if !amount.is_positive() {
            return;
        }
        let segs = &mut self.segments[agent];
        if let Some(last) = segs.last_mut() {
            if last.item == item {
                last.end += &amount;
                last.amount += amount;
                return;
            }
        }
        let start = segs.last().map_or_else(Rational::zero, |s| s.end.clone());
        let end = &start + &amount;
        segs.push(Segment {
            item,
            start,
            end,
            amount,
        });
    }

    /// Integrates the trace into an agents × items matrix.
    pub fn to_rows(&self, num_items: usize) -> Vec<Vec<Rational>> {
        let mut rows = RandomAllocation::zeros(self.num_agents(), num_items);
        for (i, segs) in self.segments.iter().enumerate() {
            for s in segs {
                rows[i][s.item] += &s.amount;
            }
        }
        rows
    }

    /// Checks contiguity from time 0, positive amounts equal to durations, and
    /// unit per-item totals. With `horizon`, every agent must also end there.
    pub fn validate(&self, num_items: usize, horizon: Option<&Rational>) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(format!("eating trace: {msg}")));
        for (i, segs) in self.segments.iter().enumerate() {
            let mut clock = Rational::zero();
            for s in segs {
                if s.start != clock {
                    return bad(format!("agent {i} has a gap or overlap at {clock}"));
                }
                if !s.amount.is_positive() || s.amount != &s.end - &s.start {
                    return bad(format!(
                        "agent {i} has a malformed segment on item {}",
                        s.item
                    ));
                }
                if s.item >= num_items {
                    return bad(format!("agent {i} eats unknown item {}", s.item));
                }
                clock = s.end.clone();
            }
            if let Some(h) = horizon {
                if clock != *h {
                    return bad(format!("agent {i} stops at {clock}, horizon is {h}"));
                }
            }
        }
        let rows = self.to_rows(num_items);
        for o in 0..num_items {
            let total: Rational = rows.iter().map(|r| &r[o]).sum();
            if !total.is_one() {
                return bad(format!("item {o} consumed {total} times"));
            }
        }
        Ok(())
    }
}
