//! Probabilistic Serial for strict preferences and unit-supply items.
//!
//! Agents eat their best remaining item at unit speed. The simulation is
//! event driven: each stage advances to the next finishing time and removes
//! every item that finishes there.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::model::{EatingTrace, OrdinalProfile, RandomAllocation, Rational};

/// State between two stages of the eating process.
#[derive(Debug, Clone)]
pub struct PsState {
    pub stage: usize,
    /// `remaining[o]` is true while item `o` is not fully eaten.
    pub remaining: Vec<bool>,
    pub time: Rational,
    pub partial: Vec<Vec<Rational>>,
}

impl PsState {
    pub fn new(num_agents: usize, num_items: usize) -> Self {
        Self {
            stage: 0,
            remaining: vec![true; num_items],
            time: Rational::zero(),
            partial: RandomAllocation::zeros(num_agents, num_items),
        }
    }

    pub fn is_done(&self) -> bool {
        !self.remaining.iter().any(|&r| r)
    }

    fn eaten(&self, item: usize) -> Rational {
        self.partial.iter().map(|r| &r[item]).sum()
    }

    /// The item each agent is currently eating.
    pub fn current_items(&self, orders: &[Vec<usize>]) -> Vec<Option<usize>> {
        orders
            .iter()
            .map(|order| order.iter().copied().find(|&o| self.remaining[o]))
            .collect()
    }
}

fn strict_orders(prefs: &OrdinalProfile) -> Result<Vec<Vec<usize>>> {
    if let Some(agent) = prefs.first_tied_agent() {
        return Err(Error::NotStrict { agent });
    }
    Ok(prefs.orders().iter().map(|o| o.flattened()).collect())
}

/// Next finishing time and the items that finish then (ascending index).
///
/// Panics if no item remains.
pub fn next_finish_time(state: &PsState, prefs: &OrdinalProfile) -> Result<(Rational, Vec<usize>)> {
    let orders = strict_orders(prefs)?;
    Ok(finish_from_orders(state, &orders))
}

fn finish_from_orders(state: &PsState, orders: &[Vec<usize>]) -> (Rational, Vec<usize>) {
    let current = state.current_items(orders);
    let mut eaters = vec![0usize; state.remaining.len()];
    for o in current.iter().flatten() {
        eaters[*o] += 1;
    }
    let mut best: Option<Rational> = None;
    let mut finishing = Vec::new();
    for (o, &k) in eaters.iter().enumerate() {
        if k == 0 {
            continue;
        }
        let t = (Rational::one() - state.eaten(o)) / Rational::from_integer(k.into()) + &state.time;
        match &best {
            Some(b) if t > *b => {}
            Some(b) if t == *b => finishing.push(o),
            _ => {
                best = Some(t);
                finishing = vec![o];
            }
        }
    }
    (
        best.expect("at least one remaining item is being eaten"),
        finishing,
    )
}

/// Runs PS to completion. Every agent's row sums to `m / n`.
pub fn ps_outcome(prefs: &OrdinalProfile) -> Result<(RandomAllocation, EatingTrace)> {
    let orders = strict_orders(prefs)?;
    let (n, m) = (prefs.num_agents(), prefs.num_items());
    let mut state = PsState::new(n, m);
    let mut trace = EatingTrace::new(n);
    while !state.is_done() {
        let (next, finishing) = finish_from_orders(&state, &orders);
        let delta = &next - &state.time;
        debug_assert!(delta.is_positive());
        for (i, item) in state.current_items(&orders).into_iter().enumerate() {
            if let Some(o) = item {
                state.partial[i][o] += &delta;
                trace.push(i, o, delta.clone());
            }
        }
        for o in finishing {
            state.remaining[o] = false;
        }
        state.time = next;
        state.stage += 1;
    }
    Ok((RandomAllocation::from_rows_unchecked(state.partial), trace))
}
