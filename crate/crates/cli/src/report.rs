//! JSON reports for `verify` and `oracle`. Agents and items appear by id.

use serde_json::{json, Map, Value};

use fairlot::fairness::{
    check_ef, check_efk, check_po_bruteforce, check_rb, check_sd_ef, check_sd_ef1,
    check_sd_efficient, check_strong_ef1, RbRefutation, Removal, RemovalSemantics, SdEfficiency,
    Verdict,
};
use fairlot::io::format_rational;
use fairlot::io::LotteryFile;
use fairlot::oracle::{
    filtered_allocations, implementable_by, leximin_bruteforce, pareto_improvement_exists,
    sd_improvement, AllocationFilter, Budget, Implementation,
};
use fairlot::{DeterministicAllocation, Instance, RandomAllocation, Rational};

use crate::{CliResult, Failure, Property, RemovalArg};

pub fn matrix(rows: &[Vec<Rational>]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| {
                Value::Array(
                    r.iter()
                        .map(|x| Value::String(format_rational(x)))
                        .collect(),
                )
            })
            .collect(),
    )
}

struct Names<'a>(&'a Instance);

impl Names<'_> {
    fn agent(&self, i: usize) -> Value {
        Value::String(self.0.agents()[i].clone())
    }

    fn item(&self, o: usize) -> Value {
        Value::String(self.0.items()[o].clone())
    }

    fn items(&self, os: &[usize]) -> Value {
        Value::Array(os.iter().map(|&o| self.item(o)).collect())
    }

    fn agents(&self, is: &[usize]) -> Value {
        Value::Array(is.iter().map(|&i| self.agent(i)).collect())
    }

    fn assignment(&self, a: &DeterministicAllocation) -> Value {
        let mut map = Map::new();
        for (o, &i) in a.owners().iter().enumerate() {
            map.insert(self.0.items()[o].clone(), self.agent(i));
        }
        Value::Object(map)
    }

    fn removals(&self, rs: &[Removal]) -> Value {
        Value::Array(
            rs.iter()
                .map(|r| {
                    json!({
                        "envious": self.agent(r.envious),
                        "envied": self.agent(r.envied),
                        "removed": self.items(&r.removed),
                    })
                })
                .collect(),
        )
    }
}

fn verdict_name(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

/// One checked subject: `(pass, witness)`.
type Check = (bool, Value);

fn ex_ante(instance: &Instance, property: Property, p: &RandomAllocation) -> CliResult<Check> {
    let names = Names(instance);
    let profile = instance.ordinal_profile();
    Ok(match property {
        Property::Ef => match check_ef(p, instance)? {
            Verdict::Pass(()) => (true, Value::Null),
            Verdict::Fail(w) => (
                false,
                json!({"envious": names.agent(w.envious), "envied": names.agent(w.envied), "gap": format_rational(&w.gap)}),
            ),
        },
        Property::Sdef => match check_sd_ef(p, &profile)? {
            Verdict::Pass(()) => (true, Value::Null),
            Verdict::Fail(w) => (
                false,
                json!({"envious": names.agent(w.envious), "envied": names.agent(w.envied), "relation": w.relation.to_string()}),
            ),
        },
        Property::Sdeff => match check_sd_efficient(p, &profile)? {
            SdEfficiency::Efficient { order } => (
                true,
                json!({"method": "acyclic", "order": names.items(&order)}),
            ),
            SdEfficiency::Cycle { items, agents } => (
                false,
                json!({"method": "acyclic", "cycle": names.items(&items), "agents": names.agents(&agents)}),
            ),
            SdEfficiency::RequiresOracle => match sd_improvement(p, &profile)? {
                None => (true, json!({"method": "lp"})),
                Some(q) => (
                    false,
                    json!({"method": "lp", "improvement": matrix(q.rows())}),
                ),
            },
        },
        _ => unreachable!("ex-post property"),
    })
}

fn ex_post(
    instance: &Instance,
    property: Property,
    a: &DeterministicAllocation,
    k: i64,
    removal: RemovalArg,
    budget: Budget,
) -> CliResult<Check> {
    let names = Names(instance);
    let profile = instance.ordinal_profile();
    let semantics = match removal {
        RemovalArg::Both => RemovalSemantics::BothBundles,
        RemovalArg::Envied => RemovalSemantics::EnviedBundleOnly,
    };
    Ok(match property {
        Property::Ef1 | Property::Efk => {
            let k = if property == Property::Ef1 { 1 } else { k };
            match check_efk(a, instance, k, semantics)? {
                Verdict::Pass(rs) => (true, json!({"removals": names.removals(&rs)})),
                Verdict::Fail(w) => (
                    false,
                    json!({
                        "envious": names.agent(w.envious),
                        "envied": names.agent(w.envied),
                        "removed": names.items(&w.removed),
                        "gap": format_rational(&w.gap),
                    }),
                ),
            }
        }
        Property::Sdef1 => match check_sd_ef1(a, &profile)? {
            Verdict::Pass(rs) => (true, json!({"removals": names.removals(&rs)})),
            Verdict::Fail(w) => (
                false,
                json!({"envious": names.agent(w.envious), "envied": names.agent(w.envied)}),
            ),
        },
        Property::StrongEf1 => match check_strong_ef1(a, instance)? {
            Verdict::Pass(rs) => {
                let mut map = Map::new();
                for (i, r) in rs.iter().enumerate() {
                    map.insert(
                        instance.agents()[i].clone(),
                        r.map_or(Value::Null, |o| names.item(o)),
                    );
                }
                (true, json!({"removed": map}))
            }
            Verdict::Fail(w) => (
                false,
                json!({"agent": names.agent(w.agent), "envious": names.agents(&w.envious)}),
            ),
        },
        Property::Rb => {
            let strict = profile.strictified_by(instance.lex_rank());
            let c = instance.num_items().div_ceil(instance.num_agents());
            match check_rb(a, &strict, c)? {
                Verdict::Pass(seq) => (
                    true,
                    json!({"sequence": names.agents(&seq.agents), "picks": names.items(&seq.items)}),
                ),
                Verdict::Fail(RbRefutation::BundleSize { agent, size }) => (
                    false,
                    json!({"reason": "bundle-size", "agent": names.agent(agent), "size": size, "rounds": c}),
                ),
                Verdict::Fail(RbRefutation::LaterRoundPreferred { agent, round, item }) => (
                    false,
                    json!({"reason": "later-round-preferred", "agent": names.agent(agent), "round": round + 1, "item": names.item(item)}),
                ),
                Verdict::Fail(RbRefutation::TradingCycle { round, agents }) => (
                    false,
                    json!({"reason": "trading-cycle", "round": round + 1, "agents": names.agents(&agents)}),
                ),
            }
        }
        Property::Po => match check_po_bruteforce(a, instance, budget)? {
            Verdict::Pass(()) => (true, Value::Null),
            Verdict::Fail(b) => (false, json!({"improvement": names.assignment(&b)})),
        },
        _ => unreachable!("ex-ante property"),
    })
}

fn property_name(p: Property) -> &'static str {
    match p {
        Property::Ef => "ef",
        Property::Sdef => "sdef",
        Property::Ef1 => "ef1",
        Property::Efk => "efk",
        Property::Sdef1 => "sdef1",
        Property::StrongEf1 => "strong-ef1",
        Property::Rb => "rb",
        Property::Sdeff => "sdeff",
        Property::Po => "po",
    }
}

pub fn verify(
    instance: &Instance,
    property: Property,
    lottery: Option<&LotteryFile>,
    allocation: Option<&RandomAllocation>,
    k: i64,
    removal: RemovalArg,
) -> CliResult<(Value, bool)> {
    let names = Names(instance);
    let mut checks = Vec::new();
    let is_ex_ante = matches!(property, Property::Ef | Property::Sdef | Property::Sdeff);
    if is_ex_ante {
        let (subject, p) = match (allocation, lottery) {
            (Some(p), _) => ("allocation", p),
            (None, Some(l)) => ("expected", &l.expected),
            (None, None) => {
                return Err(Failure(
                    "this property needs --allocation or --lottery".into(),
                ))
            }
        };
        let (pass, witness) = ex_ante(instance, property, p)?;
        checks.push(json!({"subject": subject, "verdict": verdict_name(pass), "witness": witness}));
    } else {
        let budget = if property == Property::Po {
            Budget::from_env()?
        } else {
            Budget::default()
        };
        let subjects: Vec<(String, Option<Rational>, DeterministicAllocation)> =
            match (allocation, lottery) {
                (Some(p), _) => {
                    let a = p.to_deterministic().ok_or_else(|| {
                        Failure("ex-post properties need a 0/1 allocation".into())
                    })?;
                    vec![("allocation".into(), None, a)]
                }
                (None, Some(l)) => l
                    .lottery
                    .entries()
                    .iter()
                    .enumerate()
                    .map(|(k, (w, a))| (format!("support[{k}]"), Some(w.clone()), a.clone()))
                    .collect(),
                (None, None) => {
                    return Err(Failure(
                        "ex-post properties need --lottery or a 0/1 --allocation".into(),
                    ))
                }
            };
        for (subject, weight, a) in subjects {
            let (pass, witness) = ex_post(instance, property, &a, k, removal, budget)?;
            let mut entry = json!({
                "subject": subject,
                "assignment": names.assignment(&a),
                "verdict": verdict_name(pass),
                "witness": witness,
            });
            if let Some(w) = weight {
                entry["weight"] = Value::String(format_rational(&w));
            }
            checks.push(entry);
        }
    }
    let pass = checks.iter().all(|c| c["verdict"] == "PASS");
    Ok((
        json!({
            "property": property_name(property),
            "verdict": verdict_name(pass),
            "checks": checks,
        }),
        pass,
    ))
}

pub fn implement(
    instance: &Instance,
    p: &RandomAllocation,
    filter: AllocationFilter,
    budget: Budget,
) -> CliResult<(Value, bool)> {
    let names = Names(instance);
    let allowed = filtered_allocations(instance, filter, budget)?;
    let base = json!({"target": "implement", "filter": filter.name(), "allowed": allowed.len()});
    let mut v = base;
    Ok(match implementable_by(p, &allowed)? {
        Implementation::Lottery(l) => {
            v["status"] = json!("feasible");
            v["support"] = Value::Array(
                l.entries()
                    .iter()
                    .map(|(w, a)| json!({"weight": format_rational(w), "assignment": names.assignment(a)}))
                    .collect(),
            );
            (v, true)
        }
        Implementation::Infeasible(cert) => {
            v["status"] = json!("infeasible");
            v["certificate"] = json!({
                "y": matrix(&cert.y),
                "s": format_rational(&cert.s),
                "verified": cert.verify(p, &allowed),
            });
            (v, false)
        }
    })
}

pub fn leximin(instance: &Instance) -> CliResult<(Value, bool)> {
    let lex = leximin_bruteforce(instance)?;
    let mut utilities = Map::new();
    for (i, u) in lex.utilities.iter().enumerate() {
        utilities.insert(
            instance.agents()[i].clone(),
            Value::String(format_rational(u)),
        );
    }
    Ok((
        json!({
            "target": "leximin",
            "vector": lex.vector.iter().map(format_rational).collect::<Vec<_>>(),
            "utilities": utilities,
            "allocation": matrix(lex.allocation.rows()),
        }),
        true,
    ))
}

pub fn pareto(instance: &Instance, p: &RandomAllocation) -> CliResult<(Value, bool)> {
    let q = pareto_improvement_exists(p, instance)?;
    let found = q.is_some();
    Ok((
        json!({
            "target": "pareto",
            "improvement": q.map_or(Value::Null, |q| matrix(q.rows())),
        }),
        !found,
    ))
}

pub fn sd_improve(instance: &Instance, p: &RandomAllocation) -> CliResult<(Value, bool)> {
    let q = sd_improvement(p, &instance.ordinal_profile())?;
    let found = q.is_some();
    Ok((
        json!({
            "target": "sd-improve",
            "improvement": q.map_or(Value::Null, |q| matrix(q.rows())),
        }),
        !found,
    ))
}
