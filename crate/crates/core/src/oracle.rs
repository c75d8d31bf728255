//! Brute-force and exact-LP reference machinery for desk-scale instances.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::fairness::{check_ef1, RemovalSemantics};
use crate::lp::{verify_farkas, LinearProgram, LpOutcome, Relation};
use crate::model::{
    tier_prefix_sums, DeterministicAllocation, Instance, Lottery, OrdinalProfile, RandomAllocation,
    Rational,
};

/// Upper bound on the number of allocations an enumeration may visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget(pub u64);

impl Budget {
    pub const DEFAULT: u64 = 1 << 16;

    pub fn new(limit: u64) -> Self {
        Self(limit)
    }

    /// Reads `FAIRLOT_BUDGET`, falling back to the default.
    pub fn from_env() -> Result<Self> {
        match std::env::var("FAIRLOT_BUDGET") {
            Ok(v) => v.trim().parse().map(Budget).map_err(|_| Error::Parse {
                location: "FAIRLOT_BUDGET".into(),
                message: format!("expected a nonnegative integer, got {v:?}"),
            }),
            Err(_) => Ok(Self::default()),
        }
    }

    pub fn limit(self) -> u64 {
        self.0
    }
}

impl Default for Budget {
    fn default() -> Self {
        Self(Self::DEFAULT)
    }
}

/// Odometer over all item → agent maps; item 0 is the fastest digit.
#[derive(Debug, Clone)]
pub struct Enumeration {
    num_agents: usize,
    num_items: usize,
}

impl Enumeration {
    pub fn new(num_agents: usize, num_items: usize, budget: Budget) -> Result<Self> {
        let required = BigInt::from(num_agents).pow(num_items as u32);
        if required > BigInt::from(budget.limit()) {
            return Err(Error::BudgetExceeded {
                required: required.to_string(),
                budget: budget.limit(),
            });
        }
        Ok(Self {
            num_agents,
            num_items,
        })
    }

    pub fn count(&self) -> usize {
        self.num_agents.pow(self.num_items as u32)
    }

    /// Calls `visit` on every owner vector until it returns false.
    pub fn for_each(&self, mut visit: impl FnMut(&[usize]) -> bool) {
        if self.num_agents == 0 {
            return;
        }
        let mut owners = vec![0usize; self.num_items];
        loop {
            if !visit(&owners) {
                return;
            }
            let mut digit = 0;
            loop {
                if digit == self.num_items {
                    return;
                }
                owners[digit] += 1;
                if owners[digit] < self.num_agents {
                    break;
                }
                owners[digit] = 0;
                digit += 1;
            }
        }
    }
}

/// All allocations passing `filter`, in enumeration order.
pub fn enumerate_allocations(
    num_agents: usize,
    num_items: usize,
    budget: Budget,
    mut filter: impl FnMut(&DeterministicAllocation) -> bool,
) -> Result<Vec<DeterministicAllocation>> {
    let mut out = Vec::new();
    Enumeration::new(num_agents, num_items, budget)?.for_each(|owners| {
        let a = DeterministicAllocation::new(owners.to_vec(), num_agents).expect("valid owners");
        if filter(&a) {
            out.push(a);
        }
        true
    });
    Ok(out)
}

/// Per-agent integer rescaling of the utility table, if it fits comfortably in `i64`.
pub(crate) fn integer_utilities(instance: &Instance) -> Option<Vec<Vec<i64>>> {
    instance
        .utilities()
        .iter()
        .map(|row| {
            let lcm = row.iter().fold(BigInt::one(), |acc, u| {
                num_integer::lcm(acc, u.denom().clone())
            });
            row.iter()
                .map(|u| {
                    let scaled = u.numer() * (&lcm / u.denom());
                    i64::try_from(scaled).ok().filter(|v| v.abs() < (1 << 40))
                })
                .collect()
        })
        .collect()
}

fn pareto_mask_with<T>(utilities: &[Vec<T>], enumeration: &Enumeration) -> Vec<bool>
where
    T: Clone + Zero + Ord + for<'a> std::ops::AddAssign<&'a T>,
{
    let n = utilities.len();
    let mut vectors: Vec<Vec<T>> = Vec::with_capacity(enumeration.count());
    enumeration.for_each(|owners| {
        let mut v = vec![T::zero(); n];
        for (o, &i) in owners.iter().enumerate() {
            v[i] += &utilities[i][o];
        }
        vectors.push(v);
        true
    });
    let totals: Vec<T> = vectors
        .iter()
        .map(|v| {
            let mut t = T::zero();
            for x in v {
                t += x;
            }
            t
        })
        .collect();
    let mut by_total: Vec<usize> = (0..vectors.len()).collect();
    by_total.sort_by(|&a, &b| totals[b].cmp(&totals[a]));
    // any dominator has a larger total, and a maximal dominator is itself
    // Pareto optimal, so comparing against the optimal ones found so far suffices
    let mut optimal: Vec<usize> = Vec::new();
    let mut mask = vec![false; vectors.len()];
    for idx in by_total {
        let v = &vectors[idx];
        let dominated = optimal.iter().any(|&o| {
            let w = &vectors[o];
            w.iter().zip(v).all(|(a, b)| a >= b) && w.iter().zip(v).any(|(a, b)| a > b)
        });
        if !dominated {
            mask[idx] = true;
            optimal.push(idx);
        }
    }
    mask
}

/// `mask[k]` tells whether the `k`-th enumerated allocation is Pareto optimal.
pub fn pareto_optimal_mask(instance: &Instance, budget: Budget) -> Result<Vec<bool>> {
    let e = Enumeration::new(instance.num_agents(), instance.num_items(), budget)?;
    Ok(match integer_utilities(instance) {
        Some(u) => pareto_mask_with(&u, &e),
        None => pareto_mask_with(instance.utilities(), &e),
    })
}

/// Allowed sets for [`implementable_by`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocationFilter {
    None,
    /// EF1 and Pareto optimal among deterministic allocations.
    Ef1Po,
    /// Bundle sizes ⌊m/n⌋ or ⌈m/n⌉, and Pareto optimal.
    BalancedPo,
}

impl AllocationFilter {
    pub fn name(self) -> &'static str {
        match self {
            AllocationFilter::None => "none",
            AllocationFilter::Ef1Po => "ef1-po",
            AllocationFilter::BalancedPo => "balanced-po",
        }
    }
}

pub fn is_balanced(a: &DeterministicAllocation) -> bool {
    let (n, m) = (a.num_agents(), a.num_items());
    a.bundles()
        .iter()
        .all(|b| b.len() == m / n || b.len() == m.div_ceil(n))
}

/// Every allocation of `instance` passing `filter`, in enumeration order.
pub fn filtered_allocations(
    instance: &Instance,
    filter: AllocationFilter,
    budget: Budget,
) -> Result<Vec<DeterministicAllocation>> {
    let (n, m) = (instance.num_agents(), instance.num_items());
    if filter == AllocationFilter::None {
        return enumerate_allocations(n, m, budget, |_| true);
    }
    let mask = pareto_optimal_mask(instance, budget)?;
    let mut k = 0;
    enumerate_allocations(n, m, budget, |a| {
        let po = mask[k];
        k += 1;
        po && match filter {
            AllocationFilter::Ef1Po => check_ef1(a, instance, RemovalSemantics::BothBundles)
                .map(|v| v.is_pass())
                .unwrap_or(false),
            AllocationFilter::BalancedPo => is_balanced(a),
            AllocationFilter::None => true,
        }
    })
}

/// Separating functional: `⟨Y, A⟩ + s ≥ 0` for every allowed `A` while
/// `⟨Y, p⟩ + s < 0`, so no lottery over the allowed set has expectation `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfeasibilityCertificate {
    pub y: Vec<Vec<Rational>>,
    pub s: Rational,
}

impl InfeasibilityCertificate {
    fn evaluate(&self, rows: &[Vec<Rational>]) -> Rational {
        let inner: Rational = self
            .y
            .iter()
            .zip(rows)
            .flat_map(|(y, r)| y.iter().zip(r))
            .filter(|(_, x)| !x.is_zero())
            .map(|(y, x)| y * x)
            .sum();
        inner + &self.s
    }

    pub fn verify(&self, p: &RandomAllocation, allowed: &[DeterministicAllocation]) -> bool {
        let shape_ok =
            self.y.len() == p.num_agents() && self.y.iter().all(|row| row.len() == p.num_items());
        shape_ok
            && self.evaluate(p.rows()).is_negative()
            && allowed
                .iter()
                .all(|a| !self.evaluate(a.to_matrix().rows()).is_negative())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Implementation {
    Lottery(Lottery),
    Infeasible(InfeasibilityCertificate),
}

/// Decides whether `p` is a convex combination of `allowed`, exactly.
pub fn implementable_by(
    p: &RandomAllocation,
    allowed: &[DeterministicAllocation],
) -> Result<Implementation> {
    let (n, m) = (p.num_agents(), p.num_items());
    if let Some(a) = allowed
        .iter()
        .find(|a| (a.num_agents(), a.num_items()) != (n, m))
    {
        return Err(Error::Dimension(format!(
            "allowed allocation is {}x{}, target is {n}x{m}",
            a.num_agents(),
            a.num_items()
        )));
    }
    // columns that put an item where p has no mass can never carry weight
    let usable: Vec<&DeterministicAllocation> = allowed
        .iter()
        .filter(|a| (0..m).all(|o| p.get(a.owner(o), o).is_positive()))
        .collect();
    let support: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..m).map(move |o| (i, o)))
        .filter(|&(i, o)| p.get(i, o).is_positive())
        .collect();

    let mut lp = LinearProgram::new(usable.len());
    for &(i, o) in &support {
        let coeffs = usable
            .iter()
            .map(|a| {
                if a.owner(o) == i {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            })
            .collect();
        lp.add(coeffs, Relation::Eq, p.get(i, o).clone());
    }
    lp.add(
        vec![Rational::one(); usable.len()],
        Relation::Eq,
        Rational::one(),
    );

    match lp.solve() {
        LpOutcome::Optimal { x, .. } => {
            let entries: Vec<(Rational, DeterministicAllocation)> = x
                .into_iter()
                .zip(usable)
                .filter(|(w, _)| w.is_positive())
                .map(|(w, a)| (w, a.clone()))
                .collect();
            let lottery = Lottery::new(entries)?;
            debug_assert_eq!(&lottery.expected_allocation(), p);
            Ok(Implementation::Lottery(lottery))
        }
        LpOutcome::Infeasible { farkas } => {
            debug_assert!(verify_farkas(&lp, &farkas));
            let mut y = vec![vec![Rational::zero(); m]; n];
            for (k, &(i, o)) in support.iter().enumerate() {
                y[i][o] = farkas[k].clone();
            }
            let s = farkas[support.len()].clone();
            let big: Rational = farkas.iter().map(|z| z.abs()).sum::<Rational>() + Rational::one();
            for (i, row) in y.iter_mut().enumerate() {
                for (o, v) in row.iter_mut().enumerate() {
                    if p.get(i, o).is_zero() {
                        *v = big.clone();
                    }
                }
            }
            let cert = InfeasibilityCertificate { y, s };
            debug_assert!(cert.verify(p, allowed));
            Ok(Implementation::Infeasible(cert))
        }
        LpOutcome::Unbounded => unreachable!("feasibility problems have a zero objective"),
    }
}

/// Leximin-optimal fractional allocation under binary utilities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Leximin {
    /// Ascending utility vector.
    pub vector: Vec<Rational>,
    /// Utility of each agent at `allocation`.
    pub utilities: Vec<Rational>,
    pub allocation: RandomAllocation,
}

/// Shared LP skeleton: variables `q_{i,o}` (row-major) plus `extra` more,
/// with every item fully allocated.
fn allocation_lp(n: usize, m: usize, extra: usize) -> LinearProgram {
    let mut lp = LinearProgram::new(n * m + extra);
    for o in 0..m {
        let mut coeffs = vec![Rational::zero(); n * m + extra];
        for i in 0..n {
            coeffs[i * m + o] = Rational::one();
        }
        lp.add(coeffs, Relation::Eq, Rational::one());
    }
    lp
}

fn utility_coeffs(instance: &Instance, agent: usize, width: usize) -> Vec<Rational> {
    let m = instance.num_items();
    let mut coeffs = vec![Rational::zero(); width];
    for o in 0..m {
        coeffs[agent * m + o] = instance.utility(agent, o).clone();
    }
    coeffs
}

fn allocation_from(x: &[Rational], n: usize, m: usize) -> RandomAllocation {
    RandomAllocation::from_rows_unchecked((0..n).map(|i| x[i * m..(i + 1) * m].to_vec()).collect())
}

/// Iterated max-min LP: maximize the smallest utility among unfixed agents,
/// then fix every agent that cannot exceed it.
pub fn leximin_bruteforce(instance: &Instance) -> Result<Leximin> {
    if let Some((agent, item)) = instance.binary_violation() {
        return Err(Error::NonBinaryUtilities { agent, item });
    }
    let (n, m) = (instance.num_agents(), instance.num_items());
    let width = n * m + 1;
    let t = n * m;
    let mut fixed: Vec<Option<Rational>> = vec![None; n];

    let build = |fixed: &[Option<Rational>], floor: Option<&Rational>| -> LinearProgram {
        let mut lp = allocation_lp(n, m, 1);
        for (i, f) in fixed.iter().enumerate() {
            let u = utility_coeffs(instance, i, width);
            match (f, floor) {
                (Some(v), _) => lp.add(u, Relation::Eq, v.clone()),
                (None, Some(level)) => lp.add(u, Relation::Ge, level.clone()),
                (None, None) => {
                    let mut u = u;
                    u[t] = -Rational::one();
                    lp.add(u, Relation::Ge, Rational::zero());
                }
            }
        }
        lp
    };

    let mut last_x = None;
    while fixed.iter().any(Option::is_none) {
        let mut lp = build(&fixed, None);
        lp.objective[t] = Rational::one();
        let LpOutcome::Optimal { value: level, x } = lp.solve() else {
            unreachable!("max-min LP is feasible and bounded");
        };
        last_x = Some(x);
        let mut newly = Vec::new();
        for i in (0..n).filter(|&i| fixed[i].is_none()) {
            let mut probe = build(&fixed, Some(&level));
            probe.objective = utility_coeffs(instance, i, width);
            let LpOutcome::Optimal { value, .. } = probe.solve() else {
                unreachable!("probe LP is feasible and bounded");
            };
            if value == level {
                newly.push(i);
            }
        }
        debug_assert!(!newly.is_empty());
        for i in newly {
            fixed[i] = Some(level.clone());
        }
    }
    // one more solve pins an allocation attaining every fixed level
    let lp = build(&fixed, None);
    let x = match lp.solve() {
        LpOutcome::Optimal { x, .. } => x,
        _ => last_x.expect("at least one round"),
    };
    let allocation = allocation_from(&x, n, m);
    let utilities: Vec<Rational> = fixed.into_iter().map(|f| f.expect("all fixed")).collect();
    let mut vector = utilities.clone();
    vector.sort();
    Ok(Leximin {
        vector,
        utilities,
        allocation,
    })
}

/// A fractional allocation that weakly improves every agent's utility over
/// `p` and maximizes total utility, when that total exceeds `p`'s.
pub fn pareto_improvement_exists(
    p: &RandomAllocation,
    instance: &Instance,
) -> Result<Option<RandomAllocation>> {
    let (n, m) = (instance.num_agents(), instance.num_items());
    if (p.num_agents(), p.num_items()) != (n, m) {
        return Err(Error::Dimension(
            "allocation does not match the instance".into(),
        ));
    }
    let width = n * m;
    let mut lp = allocation_lp(n, m, 0);
    let mut base = Rational::zero();
    for i in 0..n {
        let u = utility_coeffs(instance, i, width);
        let current = crate::model::utility_of_bundle(instance, i, p.row(i));
        base += &current;
        for (c, v) in lp.objective.iter_mut().zip(&u) {
            *c += v;
        }
        lp.add(u, Relation::Ge, current);
    }
    match lp.solve() {
        LpOutcome::Optimal { value, x } if value > base => Ok(Some(allocation_from(&x, n, m))),
        LpOutcome::Optimal { .. } => Ok(None),
        other => unreachable!("improvement LP is feasible and bounded: {other:?}"),
    }
}

/// A fractional allocation `q` with `q_i ≽^SD p_i` for all agents and strict
/// dominance for at least one, maximizing the sum of upper-contour masses.
pub fn sd_improvement(
    p: &RandomAllocation,
    profile: &OrdinalProfile,
) -> Result<Option<RandomAllocation>> {
    let (n, m) = (profile.num_agents(), profile.num_items());
    if (p.num_agents(), p.num_items()) != (n, m) {
        return Err(Error::Dimension(
            "allocation does not match the profile".into(),
        ));
    }
    let width = n * m;
    let mut lp = allocation_lp(n, m, 0);
    let mut base = Rational::zero();
    for i in 0..n {
        let order = profile.order(i);
        let prefix = tier_prefix_sums(order, p.row(i));
        let mut coeffs = vec![Rational::zero(); width];
        for (tier, level) in order.tiers().iter().zip(prefix) {
            for &o in tier {
                coeffs[i * m + o] = Rational::one();
            }
            for (c, v) in lp.objective.iter_mut().zip(&coeffs) {
                *c += v;
            }
            base += &level;
            lp.add(coeffs.clone(), Relation::Ge, level);
        }
    }
    match lp.solve() {
        LpOutcome::Optimal { value, x } if value > base => Ok(Some(allocation_from(&x, n, m))),
        LpOutcome::Optimal { .. } => Ok(None),
        other => unreachable!("SD improvement LP is feasible and bounded: {other:?}"),
    }
}
