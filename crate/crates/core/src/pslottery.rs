//! Lottery implementation of the (E)PS outcome over deterministic allocations.
//!
//! Pipeline: pad the item set with dummies up to `c·n` items (`c = ⌈m/n⌉`),
//! run the eating rule, let each agent re-eat its bundle at unit speed with
//! representative `i_j` eating during `[j-1, j]`, decompose the resulting
//! bistochastic representative matrix, and project every permutation back
//! to the original agents and items. Every permutation consistent with the
//! representative matrix is a recursively balanced picking outcome.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::birkhoff::{
    birkhoff_decompose, extraction_bound, BistochasticMatrix, Extraction, PermutationMatrix,
};
use crate::eps::{eps_on_profile, eps_outcome, EpsMode};
use crate::error::{Error, Result};
use crate::model::{
    ceil_int, DeterministicAllocation, EatingTrace, Instance, Lottery, OrdinalProfile,
    RandomAllocation, Rational, WeakOrder,
};
use crate::ps::ps_outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    /// PS on the lexicographically strictified profile.
    Ps,
    /// Extended PS; only ties among dummies are broken.
    Eps,
    /// Extended PS in skip-zero mode (binary utilities).
    EpsSkipZero,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Ps => "ps",
            Rule::Eps => "eps",
            Rule::EpsSkipZero => "eps-skip-zero",
        }
    }
}

/// Shape of the padded universe: `n·rounds` representatives and items, the
/// first `real_items` of which are the original items.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Representatives {
    pub num_agents: usize,
    pub rounds: usize,
    pub real_items: usize,
}

impl Representatives {
    pub fn size(&self) -> usize {
        self.num_agents * self.rounds
    }

    pub fn num_dummies(&self) -> usize {
        self.size() - self.real_items
    }

    /// Row of representative `i_{round+1}`; rows are ordered round-major.
    pub fn row_of(&self, agent: usize, round: usize) -> usize {
        round * self.num_agents + agent
    }

    /// `(agent, round)` of a representative row.
    pub fn agent_of(&self, row: usize) -> (usize, usize) {
        (row % self.num_agents, row / self.num_agents)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaddedInstance {
    pub universe: Representatives,
    /// Real item ids followed by fresh dummy ids.
    pub item_ids: Vec<String>,
    /// Strict profile over the padded items: ties broken by item id, every
    /// dummy after every real item.
    pub strict_profile: OrdinalProfile,
    /// Original ties among real items kept; dummies are singleton tiers last.
    pub weak_profile: OrdinalProfile,
}

impl PaddedInstance {
    pub fn rounds(&self) -> usize {
        self.universe.rounds
    }

    pub fn dummy_ids(&self) -> &[String] {
        &self.item_ids[self.universe.real_items..]
    }
}

pub(crate) fn fresh_dummy_ids(existing: &[String], count: usize) -> Vec<String> {
    let width = count.to_string().len();
    let mut prefix = String::from("d");
    loop {
        let ids: Vec<String> = (1..=count)
            .map(|k| format!("{prefix}{k:0width$}"))
            .collect();
        if ids.iter().all(|d| !existing.contains(d)) {
            return ids;
        }
        prefix.insert(0, '_');
    }
}

pub fn pad_with_dummies(instance: &Instance) -> PaddedInstance {
    let (n, m) = (instance.num_agents(), instance.num_items());
    let rounds = m.div_ceil(n);
    let universe = Representatives {
        num_agents: n,
        rounds,
        real_items: m,
    };
    let dummies: Vec<usize> = (m..universe.size()).collect();
    let mut item_ids = instance.items().to_vec();
    item_ids.extend(fresh_dummy_ids(instance.items(), dummies.len()));

    let base = instance.ordinal_profile();
    let total = universe.size();
    let extend = |order: &WeakOrder| -> WeakOrder {
        let mut tiers = order.tiers().to_vec();
        tiers.extend(dummies.iter().map(|&d| vec![d]));
        WeakOrder::new(tiers, total).expect("dummies extend a partition")
    };
    let weak_profile =
        OrdinalProfile::new(base.orders().iter().map(extend).collect()).expect("same item count");
    let mut key: Vec<usize> = instance.lex_rank().to_vec();
    key.extend(dummies.iter().copied());
    let strict_profile = weak_profile.strictified_by(&key);
    PaddedInstance {
        universe,
        item_ids,
        strict_profile,
        weak_profile,
    }
}

fn unit(k: usize) -> Rational {
    Rational::from_integer(BigInt::from(k))
}

/// Splits an agent's consumption stream at integer times into representative rows.
struct Slicer<'a> {
    rows: &'a mut [Vec<Rational>],
    universe: Representatives,
    agent: usize,
    clock: Rational,
}

impl Slicer<'_> {
    fn eat(&mut self, item: usize, mut amount: Rational) -> Result<()> {
        while amount.is_positive() {
            let round = self.clock.floor().to_integer();
            let round = round
                .to_usize()
                .filter(|&r| r < self.universe.rounds)
                .ok_or_else(|| Error::RowSum {
                    row: self.agent,
                    found: format!("more than {}", self.universe.rounds),
                    expected: self.universe.rounds.to_string(),
                })?;
            let room = unit(round + 1) - &self.clock;
            let bite = if amount < room { amount.clone() } else { room };
            self.rows[self.universe.row_of(self.agent, round)][item] += &bite;
            self.clock += &bite;
            amount -= bite;
        }
        Ok(())
    }

    fn finish(self) -> Result<()> {
        if self.clock != unit(self.universe.rounds) {
            return Err(Error::RowSum {
                row: self.agent,
                found: self.clock.to_string(),
                expected: self.universe.rounds.to_string(),
            });
        }
        Ok(())
    }
}

/// Re-eating from bundles: agent `i` eats row `i` of `bundles` in the order
/// of its strict padded preference; representative `i_j` takes `[j-1, j]`.
pub fn re_eat_bundles(
    bundles: &RandomAllocation,
    padded: &PaddedInstance,
) -> Result<BistochasticMatrix> {
    let u = padded.universe;
    if bundles.num_agents() != u.num_agents || bundles.num_items() != u.size() {
        return Err(Error::Dimension(format!(
            "expected a {}x{} bundle matrix",
            u.num_agents,
            u.size()
        )));
    }
    let mut rows = RandomAllocation::zeros(u.size(), u.size());
    for i in 0..u.num_agents {
        let mut slicer = Slicer {
            rows: &mut rows,
            universe: u,
            agent: i,
            clock: Rational::zero(),
        };
        for o in padded.strict_profile.order(i).flattened() {
            slicer.eat(o, bundles.get(i, o).clone())?;
        }
        slicer.finish()?;
    }
    BistochasticMatrix::new(rows)
}

/// Re-eating that follows the recorded eating order of `trace` directly.
pub fn re_eat_trace(trace: &EatingTrace, universe: Representatives) -> Result<BistochasticMatrix> {
    if trace.num_agents() != universe.num_agents {
        return Err(Error::Dimension(
            "trace has the wrong number of agents".into(),
        ));
    }
    let mut rows = RandomAllocation::zeros(universe.size(), universe.size());
    for i in 0..universe.num_agents {
        let mut slicer = Slicer {
            rows: &mut rows,
            universe,
            agent: i,
            clock: Rational::zero(),
        };
        for s in trace.segments(i) {
            if s.item >= universe.size() {
                return Err(Error::Dimension(format!("trace mentions item {}", s.item)));
            }
            slicer.eat(s.item, s.amount.clone())?;
        }
        slicer.finish()?;
    }
    BistochasticMatrix::new(rows)
}

/// Gives every agent the real items of its representatives; dummies vanish.
pub fn project(perm: &PermutationMatrix, universe: Representatives) -> DeterministicAllocation {
    let mut owners = vec![0; universe.real_items];
    for row in 0..perm.size() {
        let item = perm.column_of(row);
        if item < universe.real_items {
            owners[item] = universe.agent_of(row).0;
        }
    }
    DeterministicAllocation::new(owners, universe.num_agents).expect("owners are valid agents")
}

/// Output of [`ps_lottery`].
#[derive(Debug, Clone)]
pub struct PsLottery {
    pub rule: Rule,
    pub lottery: Lottery,
    /// The (E)PS outcome on the original instance; equals the lottery's expectation.
    pub outcome: RandomAllocation,
    pub universe: Representatives,
    /// Real then dummy item ids of the padded universe.
    pub item_ids: Vec<String>,
    /// The padded profile the eating rule ran on.
    pub profile: OrdinalProfile,
    pub representative_matrix: BistochasticMatrix,
    /// Birkhoff extractions before projection.
    pub extractions: Vec<Extraction>,
}

impl PsLottery {
    /// `(cn)² − 2cn + 2`.
    pub fn support_bound(&self) -> usize {
        extraction_bound(self.universe.size())
    }
}

pub fn ps_lottery(instance: &Instance, rule: Rule) -> Result<PsLottery> {
    let (n, m) = (instance.num_agents(), instance.num_items());
    let (universe, item_ids, profile, outcome, trace) = match rule {
        Rule::Ps | Rule::Eps => {
            let padded = pad_with_dummies(instance);
            let profile = if rule == Rule::Ps {
                padded.strict_profile.clone()
            } else {
                padded.weak_profile.clone()
            };
            let (r, trace) = if rule == Rule::Ps {
                ps_outcome(&profile)?
            } else {
                eps_on_profile(&profile)?
            };
            let q = r.rows().iter().map(|row| row[..m].to_vec()).collect();
            (
                padded.universe,
                padded.item_ids,
                profile,
                RandomAllocation::from_rows_unchecked(q),
                trace,
            )
        }
        Rule::EpsSkipZero => {
            let out = eps_outcome(instance, EpsMode::SkipZero)?;
            let (universe, trace) = balance_with_dummies(&out.trace, n, m);
            let mut item_ids = instance.items().to_vec();
            item_ids.extend(fresh_dummy_ids(instance.items(), universe.num_dummies()));
            let profile = skip_zero_profile(instance, universe);
            (universe, item_ids, profile, out.allocation, trace)
        }
    };

    if n == 1 {
        let only = DeterministicAllocation::new(vec![0; m], 1)?;
        let perm = PermutationMatrix::identity(universe.size());
        let matrix = BistochasticMatrix::new(perm.to_rows())?;
        return Ok(PsLottery {
            rule,
            lottery: Lottery::new(vec![(Rational::one(), only)])?,
            outcome,
            universe,
            item_ids,
            profile,
            representative_matrix: matrix,
            extractions: vec![Extraction {
                weight: Rational::one(),
                permutation: perm,
            }],
        });
    }

    let matrix = re_eat_trace(&trace, universe)?;
    let extractions = birkhoff_decompose(&matrix);
    let entries = extractions
        .iter()
        .map(|e| (e.weight.clone(), project(&e.permutation, universe)))
        .collect();
    let lottery = Lottery::new(entries)?.merged();
    Ok(PsLottery {
        rule,
        lottery,
        outcome,
        universe,
        item_ids,
        profile,
        representative_matrix: matrix,
        extractions,
    })
}

/// Pads every agent's trace with dummy mass up to `C = ⌈max end time⌉`,
/// filling dummies `d_1, d_2, …` in agent order.
fn balance_with_dummies(trace: &EatingTrace, n: usize, m: usize) -> (Representatives, EatingTrace) {
    let horizon = trace.horizon();
    let rounds = ceil_int(&horizon).to_usize().expect("small horizon").max(1);
    let universe = Representatives {
        num_agents: n,
        rounds,
        real_items: m,
    };
    let mut padded = trace.clone();
    let mut dummy = m;
    let mut left_in_dummy = Rational::one();
    let target = unit(rounds);
    for i in 0..n {
        let mut need = &target - trace.end_time(i);
        while need.is_positive() {
            let bite = if need < left_in_dummy {
                need.clone()
            } else {
                left_in_dummy.clone()
            };
            padded.push(i, dummy, bite.clone());
            need -= &bite;
            left_in_dummy -= &bite;
            if left_in_dummy.is_zero() {
                dummy += 1;
                left_in_dummy = Rational::one();
            }
        }
    }
    debug_assert_eq!(dummy, universe.size());
    (universe, padded)
}

/// Positive-utility items first, then zero-utility items, then dummies.
fn skip_zero_profile(instance: &Instance, universe: Representatives) -> OrdinalProfile {
    let base = instance.ordinal_profile();
    let orders = base
        .orders()
        .iter()
        .map(|order| {
            let mut tiers = order.tiers().to_vec();
            tiers.extend((universe.real_items..universe.size()).map(|d| vec![d]));
            WeakOrder::new(tiers, universe.size()).expect("dummies extend a partition")
        })
        .collect();
    OrdinalProfile::new(orders).expect("same item count")
}

/// Carathéodory reduction: repeatedly moves weight along a kernel vector of
/// the stacked `(vec(A_j), 1)` columns until they are linearly independent,
/// which leaves at most `nm + 1` allocations and the same expectation.
pub fn reduce_support(lottery: &Lottery) -> Lottery {
    let mut entries = lottery.merged().entries().to_vec();
    while entries.len() > 1 {
        let Some(direction) = kernel_vector(&entries) else {
            break;
        };
        let step = entries
            .iter()
            .zip(&direction)
            .filter(|(_, z)| z.is_positive())
            .map(|((w, _), z)| w / z)
            .min()
            .expect("a kernel vector with zero sum has a positive entry");
        let mut dropped = false;
        entries = entries
            .into_iter()
            .zip(direction)
            .filter_map(|((w, a), z)| {
                let w = w - &step * z;
                if w.is_zero() && !dropped {
                    dropped = true;
                    None
                } else {
                    Some((w, a))
                }
            })
            .collect();
        // every other entry that hit zero goes too
        entries.retain(|(w, _)| w.is_positive());
    }
    Lottery::new(entries).expect("reduction preserves a valid lottery")
}

/// A nonzero `z` with `Σ z_j (vec(A_j), 1) = 0`, if any.
fn kernel_vector(entries: &[(Rational, DeterministicAllocation)]) -> Option<Vec<Rational>> {
    let k = entries.len();
    let (n, m) = (entries[0].1.num_agents(), entries[0].1.num_items());
    let mut rows: Vec<Vec<Rational>> = Vec::with_capacity(n * m + 1);
    for i in 0..n {
        for o in 0..m {
            rows.push(
                entries
                    .iter()
                    .map(|(_, a)| {
                        if a.owner(o) == i {
                            Rational::one()
                        } else {
                            Rational::zero()
                        }
                    })
                    .collect(),
            );
        }
    }
    rows.push(vec![Rational::one(); k]);

    // reduced row echelon form
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for c in 0..k {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for x in rows[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for j in 0..k {
                    let delta = &f * &rows[r][j];
                    rows[i][j] -= delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    let free = (0..k).find(|c| !pivots.contains(c))?;
    let mut z = vec![Rational::zero(); k];
    z[free] = Rational::one();
    for (row, &c) in pivots.iter().enumerate() {
        z[c] = -rows[row][free].clone();
    }
    Some(z)
}
