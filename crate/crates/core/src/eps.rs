//! Extended Probabilistic Serial for weak orders.
//!
//! Agents eat from their best non-exhausted indifference tier at unit speed,
//! coordinating inside tiers. What an agent eats inside a tier is only fixed
//! once that tier runs out for it: each step finds the earliest time `t` at
//! which some agent set `S` can no longer be fed, the minimum over `S` of
//! `(cap(Γ(S)) + Σ_{i∈S} sᵢ) / |S|` where `sᵢ` is the time agent `i` reached
//! its current tier. The maximal such set is served from `Γ(S)` by a max flow,
//! those items disappear, and its agents move down a tier. On strict profiles
//! this is exactly PS.
//!
//! Each bottleneck is found by a Dinkelbach-style iteration over max-flow
//! computations (see [`max_eating_duration`]).

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::model::{EatingTrace, Instance, OrdinalProfile, RandomAllocation, Rational, WeakOrder};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsMode {
    /// Agents eat down their whole weak order.
    Standard,
    /// Binary utilities only: agents never eat zero-utility items and stop
    /// once their acceptable items are gone.
    SkipZero,
}

/// Source → active agents (capacity `t − start`) → eligible items → sink
/// (remaining capacity). Agent `k` of the network is `agents[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EatingNetwork {
    pub agents: Vec<usize>,
    pub eligible: Vec<Vec<usize>>,
    /// Time at which each agent reached its current tier.
    pub start: Vec<Rational>,
    /// Remaining capacity indexed by item.
    pub capacity: Vec<Rational>,
}

/// Result of [`max_eating_duration`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bottleneck {
    /// Latest time `λ` such that every active agent can eat `λ − start` from
    /// its eligible items. With all starts at zero this is the plain eating
    /// duration `min_S cap(Γ(S)) / |S|`.
    pub duration: Rational,
    /// Maximal tight agent set (agent ids, not network positions).
    pub agents: Vec<usize>,
    /// Items exhausted at `duration`: the eligible set of `agents`.
    pub items: Vec<usize>,
    /// Witness flow at `duration`, aligned with `EatingNetwork::agents`.
    pub flow: Vec<Vec<(usize, Rational)>>,
    /// Number of guesses tried.
    pub guesses: usize,
}

pub fn max_eating_duration(network: &EatingNetwork) -> Result<Bottleneck> {
    let a = network.agents.len();
    if a == 0 {
        return Err(Error::InvalidArgument("no active agents".into()));
    }
    if network.eligible.len() != a || network.start.len() != a {
        return Err(Error::Dimension(
            "one eligible list and start time per active agent".into(),
        ));
    }
    if let Some(k) = network.eligible.iter().position(Vec::is_empty) {
        return Err(Error::NoEligibleItems {
            agent: network.agents[k],
        });
    }

    let m = network.capacity.len();
    let mut node_of_item = vec![usize::MAX; m];
    let mut items = Vec::new();
    for &o in network.eligible.iter().flatten() {
        if node_of_item[o] == usize::MAX {
            node_of_item[o] = 1 + a + items.len();
            items.push(o);
        }
    }
    let sink = 1 + a + items.len();
    let total: Rational = items.iter().map(|&o| &network.capacity[o]).sum();
    let unbounded = &total + Rational::one();

    // time at which `agents` exhaust their eligible items on their own
    let exhaustion = |agents: &[usize]| -> Rational {
        let mut seen = vec![false; m];
        let mut cap = Rational::zero();
        for &k in agents {
            cap += &network.start[k];
            for &o in &network.eligible[k] {
                if !seen[o] {
                    seen[o] = true;
                    cap += &network.capacity[o];
                }
            }
        }
        cap / Rational::from_integer(agents.len().into())
    };

    let build = |t: &Rational| -> (FlowNetwork, Vec<Vec<(usize, usize)>>) {
        let mut g = FlowNetwork::new(sink + 1);
        let mut arcs = Vec::with_capacity(a);
        for k in 0..a {
            g.add_edge(0, 1 + k, t - &network.start[k]);
            arcs.push(
                network.eligible[k]
                    .iter()
                    .map(|&o| (o, g.add_edge(1 + k, node_of_item[o], unbounded.clone())))
                    .collect(),
            );
        }
        for &o in &items {
            g.add_edge(node_of_item[o], sink, network.capacity[o].clone());
        }
        (g, arcs)
    };

    let all: Vec<usize> = (0..a).collect();
    let latest_start = network.start.iter().max().expect("agents exist").clone();
    let mut t = exhaustion(&all).max(latest_start);
    let mut guesses = 1;
    let (graph, arcs) = loop {
        let (mut g, arcs) = build(&t);
        let f = g.max_flow(0, sink);
        let demand: Rational = network.start.iter().map(|s| &t - s).sum();
        if f == demand {
            break (g, arcs);
        }
        let side = g.reachable_from(0);
        let tight: Vec<usize> = (0..a).filter(|&k| side[1 + k]).collect();
        debug_assert!(!tight.is_empty());
        let next = exhaustion(&tight);
        debug_assert!(next < t);
        t = next;
        guesses += 1;
    };

    let to_sink = graph.reaching(sink);
    let tight: Vec<usize> = (0..a).filter(|&k| !to_sink[1 + k]).collect();
    let mut exhausted: Vec<usize> = Vec::new();
    for &k in &tight {
        for &o in &network.eligible[k] {
            if !exhausted.contains(&o) {
                exhausted.push(o);
            }
        }
    }
    exhausted.sort_unstable();
    let flow = arcs
        .iter()
        .map(|list| {
            list.iter()
                .map(|&(o, arc)| (o, graph.flow(arc)))
                .filter(|(_, x)| x.is_positive())
                .collect()
        })
        .collect();
    Ok(Bottleneck {
        duration: t,
        agents: tight.iter().map(|&k| network.agents[k]).collect(),
        items: exhausted,
        flow,
        guesses,
    })
}

/// Average witness flow over the tight agents in the same state as `k`
/// (same eligible set and start time), so equals eat identically.
fn class_average(network: &EatingNetwork, b: &Bottleneck, k: usize) -> Vec<(usize, Rational)> {
    let class: Vec<usize> = (0..network.agents.len())
        .filter(|&j| {
            b.agents.contains(&network.agents[j])
                && network.eligible[j] == network.eligible[k]
                && network.start[j] == network.start[k]
        })
        .collect();
    let size = Rational::from_integer(class.len().into());
    let mut items = network.eligible[k].clone();
    items.sort_unstable();
    items
        .into_iter()
        .filter_map(|o| {
            let total: Rational = class
                .iter()
                .flat_map(|&j| b.flow[j].iter())
                .filter(|(p, _)| *p == o)
                .map(|(_, x)| x)
                .sum();
            total.is_positive().then(|| (o, total / &size))
        })
        .collect()
}

/// Coordinated eating over `orders`, restricted to `acceptable` pairs.
/// Returns the consumption matrix, the trace, and the items nobody ate.
pub(crate) fn run_eating(
    orders: &[WeakOrder],
    acceptable: impl Fn(usize, usize) -> bool,
) -> Result<(Vec<Vec<Rational>>, EatingTrace, Vec<usize>)> {
    let n = orders.len();
    let m = orders[0].num_items();
    let mut capacity = vec![Rational::one(); m];
    let mut alive = vec![true; m];
    let mut start = vec![Rational::zero(); n];
    let mut rows = RandomAllocation::zeros(n, m);
    let mut trace = EatingTrace::new(n);

    loop {
        let mut network = EatingNetwork {
            agents: Vec::new(),
            eligible: Vec::new(),
            start: Vec::new(),
            capacity: capacity.clone(),
        };
        for (i, order) in orders.iter().enumerate() {
            let tier = order.tiers().iter().find_map(|tier| {
                let open: Vec<usize> = tier
                    .iter()
                    .copied()
                    .filter(|&o| alive[o] && acceptable(i, o))
                    .collect();
                (!open.is_empty()).then_some(open)
            });
            if let Some(open) = tier {
                network.agents.push(i);
                network.eligible.push(open);
                network.start.push(start[i].clone());
            }
        }
        if network.agents.is_empty() {
            break;
        }
        let b = max_eating_duration(&network)?;
        for (k, &agent) in network.agents.iter().enumerate() {
            if !b.agents.contains(&agent) {
                continue;
            }
            for (o, x) in class_average(&network, &b, k) {
                rows[agent][o] += &x;
                capacity[o] -= &x;
                trace.push(agent, o, x);
            }
            start[agent] = b.duration.clone();
        }
        for &o in &b.items {
            debug_assert!(capacity[o].is_zero());
            alive[o] = false;
        }
    }
    let leftover = (0..m).filter(|&o| alive[o]).collect();
    Ok((rows, trace, leftover))
}

/// EPS outcome on an ordinal profile (every item acceptable).
pub fn eps_on_profile(profile: &OrdinalProfile) -> Result<(RandomAllocation, EatingTrace)> {
    let (rows, trace, leftover) = run_eating(profile.orders(), |_, _| true)?;
    debug_assert!(leftover.is_empty());
    Ok((RandomAllocation::from_rows_unchecked(rows), trace))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpsOutcome {
    pub allocation: RandomAllocation,
    pub trace: EatingTrace,
    /// Skip-zero mode: items valued zero by every agent. They are split
    /// evenly (`1/n` each) and appended to every trace in id order.
    pub unwanted: Vec<usize>,
}

pub fn eps_outcome(instance: &Instance, mode: EpsMode) -> Result<EpsOutcome> {
    let profile = instance.ordinal_profile();
    match mode {
        EpsMode::Standard => {
            let (allocation, trace) = eps_on_profile(&profile)?;
            Ok(EpsOutcome {
                allocation,
                trace,
                unwanted: Vec::new(),
            })
        }
        EpsMode::SkipZero => {
            if let Some((agent, item)) = instance.binary_violation() {
                return Err(Error::NonBinaryUtilities { agent, item });
            }
            let (mut rows, mut trace, mut unwanted) = run_eating(profile.orders(), |i, o| {
                instance.utility(i, o).is_positive()
            })?;
            unwanted.sort_by_key(|&o| instance.lex_rank()[o]);
            let n = instance.num_agents();
            let share = Rational::new(1.into(), n.into());
            for &o in &unwanted {
                for (i, row) in rows.iter_mut().enumerate() {
                    row[o] += &share;
                    trace.push(i, o, share.clone());
                }
            }
            Ok(EpsOutcome {
                allocation: RandomAllocation::from_rows_unchecked(rows),
                trace,
                unwanted,
            })
        }
    }
}
