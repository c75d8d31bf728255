//! JSON file formats. Rationals are always strings such as `"3/2"`; integer
//! utilities may also be given as JSON integers on input.

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::model::{DeterministicAllocation, Instance, Lottery, RandomAllocation, Rational};

fn parse_err(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        location: location.into(),
        message: message.into(),
    }
}

/// Parses `"p/q"`, `"p"`, or a finite decimal such as `"0.25"`.
pub fn parse_rational(text: &str) -> std::result::Result<Rational, String> {
    let t = text.trim();
    if let Some((whole, frac)) = t.split_once('.') {
        if t.contains('/') {
            return Err(format!("malformed rational {text:?}"));
        }
        let digits = format!("{whole}{frac}");
        let numer: num_bigint::BigInt = digits
            .parse()
            .map_err(|_| format!("malformed decimal {text:?}"))?;
        let denom = num_bigint::BigInt::from(10).pow(frac.len() as u32);
        return Ok(Rational::new(numer, denom));
    }
    match t.split_once('/') {
        Some((p, q)) => {
            let p: num_bigint::BigInt = p
                .trim()
                .parse()
                .map_err(|_| format!("malformed numerator in {text:?}"))?;
            let q: num_bigint::BigInt = q
                .trim()
                .parse()
                .map_err(|_| format!("malformed denominator in {text:?}"))?;
            if q == num_bigint::BigInt::from(0) {
                return Err(format!("zero denominator in {text:?}"));
            }
            Ok(Rational::new(p, q))
        }
        None => t
            .parse::<num_bigint::BigInt>()
            .map(Rational::from_integer)
            .map_err(|_| format!("malformed rational {text:?}")),
    }
}

pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

fn rational_value(r: &Rational) -> Value {
    Value::String(format_rational(r))
}

fn rational_at(v: &Value, location: &str) -> Result<Rational> {
    match v {
        Value::String(s) => parse_rational(s).map_err(|m| parse_err(location, m)),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Rational::from_integer(i.into()))
            } else if let Some(u) = n.as_u64() {
                Ok(Rational::from_integer(u.into()))
            } else {
                Err(parse_err(
                    location,
                    format!("non-integer JSON number {n}; write it as a string such as \"1/2\""),
                ))
            }
        }
        other => Err(parse_err(
            location,
            format!("expected a rational, found {other}"),
        )),
    }
}

fn object<'a>(v: &'a Value, location: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| parse_err(location, "expected a JSON object"))
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| parse_err(key, "missing field"))
}

fn array<'a>(v: &'a Value, location: &str) -> Result<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| parse_err(location, "expected an array"))
}

fn id_list(v: &Value, location: &str) -> Result<Vec<String>> {
    array(v, location)?
        .iter()
        .enumerate()
        .map(|(k, x)| match x {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            _ => Err(parse_err(
                format!("{location}[{k}]"),
                "expected a string id",
            )),
        })
        .collect()
}

fn rational_matrix(
    v: &Value,
    location: &str,
    rows: usize,
    cols: usize,
) -> Result<Vec<Vec<Rational>>> {
    let outer = array(v, location)?;
    if outer.len() != rows {
        return Err(parse_err(
            location,
            format!("expected {rows} rows, found {}", outer.len()),
        ));
    }
    outer
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let here = format!("{location}[{i}]");
            let row = array(row, &here)?;
            if row.len() != cols {
                return Err(parse_err(
                    &here,
                    format!("expected {cols} entries, found {}", row.len()),
                ));
            }
            row.iter()
                .enumerate()
                .map(|(o, x)| rational_at(x, &format!("{here}[{o}]")))
                .collect()
        })
        .collect()
}

fn matrix_value(rows: &[Vec<Rational>]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| Value::Array(r.iter().map(rational_value).collect()))
            .collect(),
    )
}

fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| {
        parse_err(
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })
}

fn to_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

pub fn instance_from_value(v: &Value) -> Result<Instance> {
    let obj = object(v, "instance")?;
    let agents = id_list(field(obj, "agents")?, "agents")?;
    let items = id_list(field(obj, "items")?, "items")?;
    let utilities = rational_matrix(
        field(obj, "utilities")?,
        "utilities",
        agents.len(),
        items.len(),
    )?;
    Instance::new(agents, items, utilities)
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    instance_from_value(&parse_json(text)?)
}

pub fn instance_to_value(instance: &Instance) -> Value {
    json!({
        "agents": instance.agents(),
        "items": instance.items(),
        "utilities": matrix_value(instance.utilities()),
    })
}

pub fn write_instance(instance: &Instance) -> String {
    to_text(&instance_to_value(instance))
}

/// A matrix over named agents and items.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixFile {
    pub agents: Vec<String>,
    pub items: Vec<String>,
    pub rows: Vec<Vec<Rational>>,
}

impl MatrixFile {
    pub fn new(instance: &Instance, rows: Vec<Vec<Rational>>) -> Self {
        Self {
            agents: instance.agents().to_vec(),
            items: instance.items().to_vec(),
            rows,
        }
    }

    /// Rows and columns permuted into `instance`'s agent and item order.
    pub fn aligned_to(&self, instance: &Instance) -> Result<Vec<Vec<Rational>>> {
        let (n, m) = (instance.num_agents(), instance.num_items());
        if self.agents.len() != n || self.items.len() != m {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, instance is {n}x{m}",
                self.agents.len(),
                self.items.len()
            )));
        }
        let agent_pos: Vec<usize> = instance
            .agents()
            .iter()
            .map(|a| {
                self.agents
                    .iter()
                    .position(|x| x == a)
                    .ok_or_else(|| parse_err("agents", format!("agent {a:?} missing from matrix")))
            })
            .collect::<Result<_>>()?;
        let item_pos: Vec<usize> = instance
            .items()
            .iter()
            .map(|o| {
                self.items
                    .iter()
                    .position(|x| x == o)
                    .ok_or_else(|| parse_err("items", format!("item {o:?} missing from matrix")))
            })
            .collect::<Result<_>>()?;
        Ok(agent_pos
            .iter()
            .map(|&i| item_pos.iter().map(|&o| self.rows[i][o].clone()).collect())
            .collect())
    }
}

pub fn matrix_from_value(v: &Value) -> Result<MatrixFile> {
    let obj = object(v, "matrix file")?;
    let agents = id_list(field(obj, "agents")?, "agents")?;
    let items = id_list(field(obj, "items")?, "items")?;
    if let Some(assignment) = obj.get("assignment") {
        let owners = assignment_owners(assignment, "assignment", &agents, &items)?;
        let a = DeterministicAllocation::new(owners, agents.len())?;
        return Ok(MatrixFile {
            agents,
            items,
            rows: a.to_matrix().into_rows(),
        });
    }
    // lottery files carry their matrix under `expected`
    let key = if obj.contains_key("matrix") || !obj.contains_key("expected") {
        "matrix"
    } else {
        "expected"
    };
    let rows = rational_matrix(field(obj, key)?, key, agents.len(), items.len())?;
    Ok(MatrixFile {
        agents,
        items,
        rows,
    })
}

pub fn parse_matrix(text: &str) -> Result<MatrixFile> {
    matrix_from_value(&parse_json(text)?)
}

pub fn matrix_to_value(file: &MatrixFile) -> Value {
    json!({
        "agents": file.agents,
        "items": file.items,
        "matrix": matrix_value(&file.rows),
    })
}

pub fn write_matrix(file: &MatrixFile) -> String {
    to_text(&matrix_to_value(file))
}

fn assignment_owners(
    v: &Value,
    location: &str,
    agents: &[String],
    items: &[String],
) -> Result<Vec<usize>> {
    let obj = object(v, location)?;
    let mut owners = vec![usize::MAX; items.len()];
    for (item, agent) in obj {
        let here = format!("{location}.{item}");
        let o = items
            .iter()
            .position(|x| x == item)
            .ok_or_else(|| parse_err(&here, "unknown item"))?;
        let agent = match agent {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            _ => return Err(parse_err(&here, "expected an agent id")),
        };
        owners[o] = agents
            .iter()
            .position(|x| *x == agent)
            .ok_or_else(|| parse_err(&here, format!("unknown agent {agent:?}")))?;
    }
    if let Some(o) = owners.iter().position(|&x| x == usize::MAX) {
        return Err(parse_err(
            location,
            format!("item {:?} is not assigned", items[o]),
        ));
    }
    Ok(owners)
}

fn assignment_value(a: &DeterministicAllocation, agents: &[String], items: &[String]) -> Value {
    let mut map = Map::new();
    for (o, &i) in a.owners().iter().enumerate() {
        map.insert(items[o].clone(), Value::String(agents[i].clone()));
    }
    Value::Object(map)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LotteryMetadata {
    /// Per agent, the indifference tiers (item ids, dummies included) the rule ran on.
    pub tie_break: Vec<Vec<Vec<String>>>,
    pub dummies: Vec<String>,
    pub support_bound: usize,
    pub reduced: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LotteryFile {
    pub rule: String,
    pub agents: Vec<String>,
    pub items: Vec<String>,
    pub expected: RandomAllocation,
    pub lottery: Lottery,
    pub metadata: LotteryMetadata,
}

pub fn lottery_to_value(file: &LotteryFile) -> Value {
    let support: Vec<Value> = file
        .lottery
        .entries()
        .iter()
        .map(|(w, a)| {
            json!({
                "weight": format_rational(w),
                "assignment": assignment_value(a, &file.agents, &file.items),
            })
        })
        .collect();
    json!({
        "rule": file.rule,
        "agents": file.agents,
        "items": file.items,
        "expected": matrix_value(file.expected.rows()),
        "support": support,
        "metadata": {
            "tie_break": file.metadata.tie_break,
            "dummies": file.metadata.dummies,
            "support_bound": file.metadata.support_bound,
            "reduced": file.metadata.reduced,
        },
    })
}

pub fn write_lottery(file: &LotteryFile) -> String {
    to_text(&lottery_to_value(file))
}

pub fn lottery_from_value(v: &Value) -> Result<LotteryFile> {
    let obj = object(v, "lottery file")?;
    let rule = field(obj, "rule")?
        .as_str()
        .ok_or_else(|| parse_err("rule", "expected a string"))?
        .to_string();
    let agents = id_list(field(obj, "agents")?, "agents")?;
    let items = id_list(field(obj, "items")?, "items")?;
    let expected = RandomAllocation::new(rational_matrix(
        field(obj, "expected")?,
        "expected",
        agents.len(),
        items.len(),
    )?)?;
    let support = array(field(obj, "support")?, "support")?;
    let mut entries = Vec::with_capacity(support.len());
    for (k, entry) in support.iter().enumerate() {
        let here = format!("support[{k}]");
        let e = object(entry, &here)?;
        let weight = rational_at(
            e.get("weight")
                .ok_or_else(|| parse_err(format!("{here}.weight"), "missing field"))?,
            &format!("{here}.weight"),
        )?;
        let owners = assignment_owners(
            e.get("assignment")
                .ok_or_else(|| parse_err(format!("{here}.assignment"), "missing field"))?,
            &format!("{here}.assignment"),
            &agents,
            &items,
        )?;
        entries.push((weight, DeterministicAllocation::new(owners, agents.len())?));
    }
    let lottery = Lottery::new(entries)?;
    if lottery.expected_allocation() != expected {
        return Err(Error::InvalidLottery(
            "expected matrix differs from the recomposed support".into(),
        ));
    }
    let metadata = match obj.get("metadata") {
        None => LotteryMetadata {
            tie_break: Vec::new(),
            dummies: Vec::new(),
            support_bound: lottery.support_size(),
            reduced: false,
        },
        Some(meta) => {
            let m = object(meta, "metadata")?;
            let tie_break = match m.get("tie_break") {
                Some(t) => serde_json::from_value(t.clone())
                    .map_err(|e| parse_err("metadata.tie_break", e.to_string()))?,
                None => Vec::new(),
            };
            let dummies = match m.get("dummies") {
                Some(d) => id_list(d, "metadata.dummies")?,
                None => Vec::new(),
            };
            let support_bound = match m.get("support_bound") {
                Some(b) => b
                    .as_u64()
                    .ok_or_else(|| parse_err("metadata.support_bound", "expected an integer"))?
                    as usize,
                None => lottery.support_size(),
            };
            let reduced = m.get("reduced").and_then(Value::as_bool).unwrap_or(false);
            LotteryMetadata {
                tie_break,
                dummies,
                support_bound,
                reduced,
            }
        }
    };
    Ok(LotteryFile {
        rule,
        agents,
        items,
        expected,
        lottery,
        metadata,
    })
}

pub fn parse_lottery(text: &str) -> Result<LotteryFile> {
    lottery_from_value(&parse_json(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{int, rat};

    const EXAMPLE: &str = r#"{
        "agents": ["1", "2"],
        "items": ["a", "b", "c", "d"],
        "utilities": [[4, 3, 2, 1], ["4", "2", "3", "1"]]
    }"#;

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("3/2").unwrap(), rat(3, 2));
        assert_eq!(parse_rational(" -4 ").unwrap(), int(-4));
        assert_eq!(parse_rational("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("6/4").unwrap(), rat(3, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("1.5/2").is_err());
        assert_eq!(format_rational(&rat(3, 2)), "3/2");
        assert_eq!(format_rational(&int(2)), "2");
    }

    #[test]
    fn instance_round_trip() {
        let inst = parse_instance(EXAMPLE).unwrap();
        assert_eq!(inst.utility(1, 2), &int(3));
        assert_eq!(parse_instance(&write_instance(&inst)).unwrap(), inst);
    }

    #[test]
    fn errors_carry_positions() {
        let bad = r#"{"agents":["1","2"],"items":["a","b"],"utilities":[[1,2],[3,"q"]]}"#;
        match parse_instance(bad).unwrap_err() {
            Error::Parse { location, .. } => assert_eq!(location, "utilities[1][1]"),
            other => panic!("{other:?}"),
        }
        let float = r#"{"agents":["1"],"items":["a"],"utilities":[[0.5]]}"#;
        assert!(matches!(parse_instance(float), Err(Error::Parse { .. })));
        assert!(matches!(parse_instance("{"), Err(Error::Parse { .. })));
        let short = r#"{"agents":["1","2"],"items":["a"],"utilities":[[1]]}"#;
        match parse_instance(short).unwrap_err() {
            Error::Parse { location, .. } => assert_eq!(location, "utilities"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn matrix_alignment() {
        let inst = parse_instance(EXAMPLE).unwrap();
        let text = r#"{"agents":["2","1"],"items":["a","b","c","d"],"matrix":[["1","0","1","0"],["0","1","0","1"]]}"#;
        let m = parse_matrix(text).unwrap();
        let rows = m.aligned_to(&inst).unwrap();
        assert_eq!(rows[0], vec![int(0), int(1), int(0), int(1)]);
        let assignment = r#"{"agents":["1","2"],"items":["a","b","c","d"],"assignment":{"a":"1","b":"1","c":"2","d":"2"}}"#;
        let m = parse_matrix(assignment).unwrap();
        assert_eq!(m.rows[1], vec![int(0), int(0), int(1), int(1)]);
        assert_eq!(parse_matrix(&write_matrix(&m)).unwrap(), m);
    }

    #[test]
    fn lottery_round_trip_and_validation() {
        let a = DeterministicAllocation::new(vec![0, 0, 1, 1], 2).unwrap();
        let b = DeterministicAllocation::new(vec![1, 0, 1, 0], 2).unwrap();
        let lottery = Lottery::new(vec![(rat(1, 2), a), (rat(1, 2), b)]).unwrap();
        let file = LotteryFile {
            rule: "ps".into(),
            agents: vec!["1".into(), "2".into()],
            items: vec!["a".into(), "b".into(), "c".into(), "d".into()],
            expected: lottery.expected_allocation(),
            lottery,
            metadata: LotteryMetadata {
                tie_break: vec![vec![vec!["a".into()], vec!["b".into(), "c".into()]]],
                dummies: vec![],
                support_bound: 10,
                reduced: false,
            },
        };
        let text = write_lottery(&file);
        assert_eq!(parse_lottery(&text).unwrap(), file);
        let tampered = text.replacen("\"1/2\"", "\"1\"", 1);
        assert!(parse_lottery(&tampered).is_err());
    }
}
