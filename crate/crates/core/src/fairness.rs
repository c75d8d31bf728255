//! Fairness and efficiency verifiers.
//!
//! Every checker returns a [`Verdict`]: a witness of satisfaction or a
//! violating object that can be re-checked in isolation.

use std::collections::VecDeque;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::model::{
    sd_compare, sd_weakly_prefers, utility_of_bundle, DeterministicAllocation, Instance,
    OrdinalProfile, RandomAllocation, Rational, SdRelation, WeakOrder,
};
use crate::oracle::{integer_utilities, Budget, Enumeration};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict<W, V> {
    Pass(W),
    Fail(V),
}

impl<W, V> Verdict<W, V> {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass(_))
    }

    pub fn passed(&self) -> Option<&W> {
        match self {
            Verdict::Pass(w) => Some(w),
            Verdict::Fail(_) => None,
        }
    }

    pub fn violation(&self) -> Option<&V> {
        match self {
            Verdict::Pass(_) => None,
            Verdict::Fail(v) => Some(v),
        }
    }
}

/// Agent `envious` values `envied`'s bundle more than its own by `gap`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvyWitness {
    pub envious: usize,
    pub envied: usize,
    pub gap: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SdEnvyWitness {
    pub envious: usize,
    pub envied: usize,
    /// Relation of the envious agent's own row to the envied row.
    pub relation: SdRelation,
}

/// Items removed to clear the envy of `envious` toward `envied`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Removal {
    pub envious: usize,
    pub envied: usize,
    pub removed: Vec<usize>,
}

/// Envy that survives the best removal set found, with the remaining gap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EfkWitness {
    pub envious: usize,
    pub envied: usize,
    pub removed: Vec<usize>,
    pub gap: Rational,
}

/// Which bundles a removed item disappears from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RemovalSemantics {
    /// `u_i(A_i \ S) ≥ u_i(A_j \ S)`.
    #[default]
    BothBundles,
    /// `u_i(A_i) ≥ u_i(A_j \ S)`.
    EnviedBundleOnly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SdEf1Witness {
    pub envious: usize,
    pub envied: usize,
}

/// Nobody envies agent `agent` after removing `removed[agent]` (None: no envy at all).
pub type StrongEf1Removals = Vec<Option<usize>>;

/// No single item of `agent`'s bundle clears the envy of all of `envious`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrongEf1Witness {
    pub agent: usize,
    pub envious: Vec<usize>,
}

/// Turn order and the items picked, one entry per turn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PickingSequence {
    pub agents: Vec<usize>,
    pub items: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RbRefutation {
    BundleSize {
        agent: usize,
        size: usize,
    },
    /// `agent` strictly prefers `item`, allocated in a later round, to its round item.
    LaterRoundPreferred {
        agent: usize,
        round: usize,
        item: usize,
    },
    /// Every agent on the cycle wants the round item of the previous one.
    TradingCycle {
        round: usize,
        agents: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SdEfficiency {
    /// Topological order of items under the τ relation.
    Efficient { order: Vec<usize> },
    /// `items[k] τ items[k+1]` (cyclically), justified by `agents[k]`, who
    /// holds mass of `items[k+1]` and prefers `items[k]`.
    Cycle {
        items: Vec<usize>,
        agents: Vec<usize>,
    },
    /// Weak orders: decided by the LP oracle instead.
    RequiresOracle,
}

fn check_shape(n: usize, m: usize, instance_n: usize, instance_m: usize) -> Result<()> {
    if (n, m) != (instance_n, instance_m) {
        return Err(Error::Dimension(format!(
            "allocation is {n}x{m}, preferences are {instance_n}x{instance_m}"
        )));
    }
    Ok(())
}

pub fn check_ef(p: &RandomAllocation, instance: &Instance) -> Result<Verdict<(), EnvyWitness>> {
    check_shape(
        p.num_agents(),
        p.num_items(),
        instance.num_agents(),
        instance.num_items(),
    )?;
    let n = p.num_agents();
    for i in 0..n {
        let own = utility_of_bundle(instance, i, p.row(i));
        for j in (0..n).filter(|&j| j != i) {
            let other = utility_of_bundle(instance, i, p.row(j));
            if other > own {
                return Ok(Verdict::Fail(EnvyWitness {
                    envious: i,
                    envied: j,
                    gap: other - &own,
                }));
            }
        }
    }
    Ok(Verdict::Pass(()))
}

pub fn check_sd_ef(
    p: &RandomAllocation,
    profile: &OrdinalProfile,
) -> Result<Verdict<(), SdEnvyWitness>> {
    check_shape(
        p.num_agents(),
        p.num_items(),
        profile.num_agents(),
        profile.num_items(),
    )?;
    let n = p.num_agents();
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let relation = sd_compare(profile, i, p.row(i), p.row(j));
            if !matches!(relation, SdRelation::Dominates | SdRelation::Equivalent) {
                return Ok(Verdict::Fail(SdEnvyWitness {
                    envious: i,
                    envied: j,
                    relation,
                }));
            }
        }
    }
    Ok(Verdict::Pass(()))
}

pub fn check_ef1(
    a: &DeterministicAllocation,
    instance: &Instance,
    semantics: RemovalSemantics,
) -> Result<Verdict<Vec<Removal>, EfkWitness>> {
    check_efk(a, instance, 1, semantics)
}

/// Envy-freeness up to `k` items. The best removal set for a pair is the
/// envious agent's `k` favourite items of the envied bundle.
pub fn check_efk(
    a: &DeterministicAllocation,
    instance: &Instance,
    k: i64,
    semantics: RemovalSemantics,
) -> Result<Verdict<Vec<Removal>, EfkWitness>> {
    if k < 0 {
        return Err(Error::InvalidArgument(format!(
            "k must be nonnegative, got {k}"
        )));
    }
    check_shape(
        a.num_agents(),
        a.num_items(),
        instance.num_agents(),
        instance.num_items(),
    )?;
    let k = k as usize;
    let bundles = a.bundles();
    let mut removals = Vec::new();
    for (i, own_bundle) in bundles.iter().enumerate() {
        let value =
            |items: &[usize]| -> Rational { items.iter().map(|&o| instance.utility(i, o)).sum() };
        let own = value(own_bundle);
        for (j, bundle) in bundles.iter().enumerate() {
            if j == i {
                continue;
            }
            let other = value(bundle);
            if own >= other {
                continue;
            }
            let mut ranked = bundle.clone();
            ranked.sort_by(|&x, &y| {
                instance
                    .utility(i, y)
                    .cmp(instance.utility(i, x))
                    .then(x.cmp(&y))
            });
            ranked.truncate(k);
            let other_after = &other - value(&ranked);
            let own_after = match semantics {
                RemovalSemantics::BothBundles => {
                    let shared: Vec<usize> = ranked
                        .iter()
                        .copied()
                        .filter(|o| own_bundle.contains(o))
                        .collect();
                    &own - value(&shared)
                }
                RemovalSemantics::EnviedBundleOnly => own.clone(),
            };
            ranked.sort_unstable();
            if own_after < other_after {
                return Ok(Verdict::Fail(EfkWitness {
                    envious: i,
                    envied: j,
                    removed: ranked,
                    gap: other_after - own_after,
                }));
            }
            removals.push(Removal {
                envious: i,
                envied: j,
                removed: ranked,
            });
        }
    }
    Ok(Verdict::Pass(removals))
}

pub fn check_sd_ef1(
    a: &DeterministicAllocation,
    profile: &OrdinalProfile,
) -> Result<Verdict<Vec<Removal>, SdEf1Witness>> {
    check_shape(
        a.num_agents(),
        a.num_items(),
        profile.num_agents(),
        profile.num_items(),
    )?;
    let n = a.num_agents();
    let mut removals = Vec::new();
    for i in 0..n {
        let order = profile.order(i);
        let own = a.row(i);
        for j in (0..n).filter(|&j| j != i) {
            let mut other = a.row(j);
            if sd_weakly_prefers(order, &own, &other) {
                continue;
            }
            let cleared = a.bundle(j).into_iter().find(|&o| {
                let saved = std::mem::take(&mut other[o]);
                let ok = sd_weakly_prefers(order, &own, &other);
                other[o] = saved;
                ok
            });
            match cleared {
                Some(o) => removals.push(Removal {
                    envious: i,
                    envied: j,
                    removed: vec![o],
                }),
                None => {
                    return Ok(Verdict::Fail(SdEf1Witness {
                        envious: i,
                        envied: j,
                    }))
                }
            }
        }
    }
    Ok(Verdict::Pass(removals))
}

pub fn check_strong_ef1(
    a: &DeterministicAllocation,
    instance: &Instance,
) -> Result<Verdict<StrongEf1Removals, StrongEf1Witness>> {
    check_shape(
        a.num_agents(),
        a.num_items(),
        instance.num_agents(),
        instance.num_items(),
    )?;
    let n = a.num_agents();
    let bundles = a.bundles();
    let value = |agent: usize, items: &[usize]| -> Rational {
        items.iter().map(|&o| instance.utility(agent, o)).sum()
    };
    let own: Vec<Rational> = (0..n).map(|j| value(j, &bundles[j])).collect();
    let mut removals = Vec::with_capacity(n);
    for i in 0..n {
        let envious: Vec<usize> = (0..n)
            .filter(|&j| j != i && value(j, &bundles[i]) > own[j])
            .collect();
        if envious.is_empty() {
            removals.push(None);
            continue;
        }
        let common = bundles[i].iter().copied().find(|&o| {
            envious
                .iter()
                .all(|&j| value(j, &bundles[i]) - instance.utility(j, o) <= own[j])
        });
        match common {
            Some(o) => removals.push(Some(o)),
            None => return Ok(Verdict::Fail(StrongEf1Witness { agent: i, envious })),
        }
    }
    Ok(Verdict::Pass(removals))
}

fn strict_by_index(order: &WeakOrder) -> Vec<usize> {
    order.flattened()
}

/// Decides whether `a` results from greedy picking under some recursively
/// balanced sequence. Weak orders are strictified by item index (callers
/// that care about external ids strictify beforehand).
pub fn check_rb(
    a: &DeterministicAllocation,
    profile: &OrdinalProfile,
    c: usize,
) -> Result<Verdict<PickingSequence, RbRefutation>> {
    check_shape(
        a.num_agents(),
        a.num_items(),
        profile.num_agents(),
        profile.num_items(),
    )?;
    let n = a.num_agents();
    let m = a.num_items();
    let orders: Vec<Vec<usize>> = profile.orders().iter().map(strict_by_index).collect();
    let mut rank = vec![vec![0usize; m]; n];
    for (i, order) in orders.iter().enumerate() {
        for (r, &o) in order.iter().enumerate() {
            rank[i][o] = r;
        }
    }
    let prefers = |i: usize, x: usize, y: usize| rank[i][x] < rank[i][y];

    let mut bundles = a.bundles();
    for (i, b) in bundles.iter_mut().enumerate() {
        if b.len() != c && b.len() + 1 != c {
            return Ok(Verdict::Fail(RbRefutation::BundleSize {
                agent: i,
                size: b.len(),
            }));
        }
        b.sort_by_key(|&o| rank[i][o]);
    }
    let mut round_of = vec![0usize; m];
    for b in &bundles {
        for (r, &o) in b.iter().enumerate() {
            round_of[o] = r;
        }
    }

    let mut sequence = PickingSequence {
        agents: Vec::with_capacity(m),
        items: Vec::with_capacity(m),
    };
    for round in 0..c {
        let pickers: Vec<usize> = (0..n).filter(|&i| bundles[i].len() > round).collect();
        for &i in &pickers {
            let mine = bundles[i][round];
            if let Some(item) = (0..m).find(|&o| round_of[o] > round && prefers(i, o, mine)) {
                return Ok(Verdict::Fail(RbRefutation::LaterRoundPreferred {
                    agent: i,
                    round,
                    item,
                }));
            }
        }
        // edge h → i: i wants h's round item, so h must pick first
        let mut wanted_by: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut indegree = vec![0usize; n];
        for &i in &pickers {
            for &h in &pickers {
                if h != i && prefers(i, bundles[h][round], bundles[i][round]) {
                    wanted_by[h].push(i);
                    indegree[i] += 1;
                }
            }
        }
        let mut ready: std::collections::BTreeSet<usize> = pickers
            .iter()
            .copied()
            .filter(|&i| indegree[i] == 0)
            .collect();
        let mut placed = 0;
        while let Some(h) = ready.pop_first() {
            sequence.agents.push(h);
            sequence.items.push(bundles[h][round]);
            placed += 1;
            for &i in &wanted_by[h] {
                indegree[i] -= 1;
                if indegree[i] == 0 {
                    ready.insert(i);
                }
            }
        }
        if placed < pickers.len() {
            let stuck: Vec<usize> = pickers
                .iter()
                .copied()
                .filter(|&i| indegree[i] > 0)
                .collect();
            let mut walk = vec![stuck[0]];
            loop {
                let v = *walk.last().expect("nonempty walk");
                let pred = stuck
                    .iter()
                    .copied()
                    .find(|&h| wanted_by[h].contains(&v))
                    .expect("stuck agents have stuck predecessors");
                if let Some(pos) = walk.iter().position(|&x| x == pred) {
                    let mut agents = walk[pos..].to_vec();
                    agents.reverse();
                    let start = (0..agents.len())
                        .min_by_key(|&k| agents[k])
                        .expect("nonempty cycle");
                    agents.rotate_left(start);
                    return Ok(Verdict::Fail(RbRefutation::TradingCycle { round, agents }));
                }
                walk.push(pred);
            }
        }
    }
    debug_assert_eq!(replay(&orders, &sequence.agents, m), sequence.items);
    Ok(Verdict::Pass(sequence))
}

/// Greedy picking: each turn the agent takes its best remaining item.
pub fn replay(orders: &[Vec<usize>], turns: &[usize], num_items: usize) -> Vec<usize> {
    let mut taken = vec![false; num_items];
    turns
        .iter()
        .map(|&i| {
            let o = orders[i]
                .iter()
                .copied()
                .find(|&o| !taken[o])
                .expect("more turns than items");
            taken[o] = true;
            o
        })
        .collect()
}

/// SD-efficiency for strict profiles via acyclicity of `o τ o′`, which holds
/// iff some agent with positive mass on `o′` strictly prefers `o`.
pub fn check_sd_efficient(p: &RandomAllocation, profile: &OrdinalProfile) -> Result<SdEfficiency> {
    check_shape(
        p.num_agents(),
        p.num_items(),
        profile.num_agents(),
        profile.num_items(),
    )?;
    if !profile.is_strict() {
        return Ok(SdEfficiency::RequiresOracle);
    }
    let m = p.num_items();
    // because[o][o′] = agent justifying o τ o′
    let mut because: Vec<Vec<Option<usize>>> = vec![vec![None; m]; m];
    for i in 0..p.num_agents() {
        let order = profile.order(i).flattened();
        for (pos, &low) in order.iter().enumerate() {
            if p.get(i, low).is_zero() {
                continue;
            }
            for &high in &order[..pos] {
                because[high][low].get_or_insert(i);
            }
        }
    }
    let mut indegree: Vec<usize> = (0..m)
        .map(|o| (0..m).filter(|&x| because[x][o].is_some()).count())
        .collect();
    let mut ready: std::collections::BTreeSet<usize> =
        (0..m).filter(|&o| indegree[o] == 0).collect();
    let mut order = Vec::with_capacity(m);
    while let Some(o) = ready.pop_first() {
        order.push(o);
        for x in 0..m {
            if because[o][x].is_some() {
                indegree[x] -= 1;
                if indegree[x] == 0 {
                    ready.insert(x);
                }
            }
        }
    }
    if order.len() == m {
        return Ok(SdEfficiency::Efficient { order });
    }
    // follow predecessors among unsorted items until one repeats
    let stuck: Vec<usize> = (0..m).filter(|&o| indegree[o] > 0).collect();
    let mut walk = vec![stuck[0]];
    let mut queue = VecDeque::new();
    loop {
        let v = *walk.last().expect("nonempty walk");
        let pred = stuck
            .iter()
            .copied()
            .find(|&x| because[x][v].is_some())
            .expect("stuck items have stuck predecessors");
        if let Some(pos) = walk.iter().position(|&x| x == pred) {
            let mut items = walk[pos..].to_vec();
            items.reverse();
            for k in 0..items.len() {
                let next = items[(k + 1) % items.len()];
                queue.push_back(because[items[k]][next].expect("edge on cycle"));
            }
            return Ok(SdEfficiency::Cycle {
                items,
                agents: queue.into_iter().collect(),
            });
        }
        walk.push(pred);
    }
}

fn first_improvement<T>(
    utilities: &[Vec<T>],
    current: &DeterministicAllocation,
    budget: Budget,
) -> Result<Option<DeterministicAllocation>>
where
    T: Clone + Zero + PartialOrd + for<'a> std::ops::AddAssign<&'a T>,
{
    let n = current.num_agents();
    let bundle_value = |owners: &[usize]| -> Vec<T> {
        let mut v = vec![T::zero(); n];
        for (o, &i) in owners.iter().enumerate() {
            v[i] += &utilities[i][o];
        }
        v
    };
    let base = bundle_value(current.owners());
    let mut found = None;
    Enumeration::new(n, current.num_items(), budget)?.for_each(|owners| {
        let v = bundle_value(owners);
        let weakly = v.iter().zip(&base).all(|(x, y)| x >= y);
        if weakly && v.iter().zip(&base).any(|(x, y)| x > y) {
            found = Some(owners.to_vec());
            return false;
        }
        true
    });
    Ok(found.map(|owners| DeterministicAllocation::new(owners, n).expect("enumerated owners")))
}

/// Pareto optimality among deterministic allocations, by enumeration of all
/// `n^m` allocations. Returns the first Pareto improvement in enumeration order.
pub fn check_po_bruteforce(
    a: &DeterministicAllocation,
    instance: &Instance,
    budget: Budget,
) -> Result<Verdict<(), DeterministicAllocation>> {
    check_shape(
        a.num_agents(),
        a.num_items(),
        instance.num_agents(),
        instance.num_items(),
    )?;
    let improvement = match integer_utilities(instance) {
        Some(u) => first_improvement(&u, a, budget)?,
        None => first_improvement(instance.utilities(), a, budget)?,
    };
    Ok(match improvement {
        Some(b) => Verdict::Fail(b),
        None => Verdict::Pass(()),
    })
}
