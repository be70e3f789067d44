//! Declarative scenario files: a flat key/value grammar with optional named
//! blocks, no external schema. Parse errors carry line numbers.
//!
//! Top-level keys (one per line, whitespace-separated values):
//!
//! ```text
//! name <identifier>                  # mandatory
//! seed <u64>                         # mandatory
//! dims <d1> <d2> ...                 # default: 2 3 4 5
//! trials <n>                         # default: 200
//! assignments <name> ...             # default: the six operator-domain rules
//! properties <name> ...              # default: all seven
//! tolerance <property|default> <f64>
//! expect <assignment> <property> holds|fails
//! ```
//!
//! Blocks are delimited by `[kind]` ... `[/kind]` and hold the same
//! `key value...` lines. Kinds: `gleason` (assignment, dim, frames),
//! `envariance` (dims), `finegrain` (pairs of m/n), `hartle` (probs, target,
//! ngrid), `mixture` (weights, qvalues, ngrid), `continuity` (assignment,
//! path, tol, grid), `pathology` (c1, c2, pairs). Lines starting with `#`
//! are comments. Rational grid values use the `p/q` and `p/q + r/s*sqrt2`
//! syntax.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::Serialize;

use crate::assignments::Assignment;
use crate::error::{Error, Result};
use crate::properties::{ProbePath, Property};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpectKind {
    Holds,
    Fails,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Expectation {
    pub assignment: String,
    pub property: String,
    pub expect: ExpectKind,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct GleasonBlock {
    pub assignment: String,
    pub dim: usize,
    pub frames: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct EnvarianceBlock {
    pub dims: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FinegrainBlock {
    /// (m, n) pairs.
    pub pairs: Vec<(u64, u64)>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct HartleBlock {
    pub probs: Vec<f64>,
    pub target: usize,
    pub ngrid: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MixtureBlock {
    pub weights: Vec<f64>,
    pub qvalues: Vec<f64>,
    pub ngrid: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ContinuityBlock {
    pub assignment: String,
    pub path: String,
    pub tol: f64,
    /// Raw grid tokens; interpreted per assignment when the block runs.
    pub grid: Vec<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PathologyBlock {
    pub c1: String,
    pub c2: String,
    pub pairs: u32,
}

/// A parsed and validated scenario.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub seed: u64,
    pub dims: Vec<usize>,
    pub trials: u32,
    pub assignments: Vec<String>,
    pub properties: Vec<String>,
    pub tolerances: BTreeMap<String, f64>,
    pub expects: Vec<Expectation>,
    pub gleason: Vec<GleasonBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envariance: Option<EnvarianceBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finegrain: Option<FinegrainBlock>,
    pub hartle: Vec<HartleBlock>,
    pub mixture: Vec<MixtureBlock>,
    pub continuity: Vec<ContinuityBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pathology: Option<PathologyBlock>,
}

impl ScenarioSpec {
    /// Tolerance for one property: its own entry, else `default`, else 1e-9.
    pub fn tolerance_for(&self, property: &str) -> f64 {
        self.tolerances
            .get(property)
            .or_else(|| self.tolerances.get("default"))
            .copied()
            .unwrap_or(1e-9)
    }
}

fn perr<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line, message: message.into() })
}

struct Cursor<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Cursor { lines, pos: 0 }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let item = self.lines.get(self.pos).copied();
        if item.is_some() {
            self.pos += 1;
        }
        item
    }
}

fn parse_one<T: FromStr>(line: usize, token: &str, what: &str) -> Result<T> {
    token
        .parse::<T>()
        .map_err(|_| Error::Parse { line, message: format!("cannot parse {what} from {token:?}") })
}

fn parse_list<T: FromStr>(line: usize, tokens: &[&str], what: &str) -> Result<Vec<T>> {
    tokens.iter().map(|t| parse_one(line, t, what)).collect()
}

/// Parses scenario text. Every diagnostic carries its line number.
pub fn parse_scenario(text: &str) -> Result<ScenarioSpec> {
    let mut cursor = Cursor::new(text);
    let mut name: Option<String> = None;
    let mut seed: Option<u64> = None;
    let mut dims = vec![2usize, 3, 4, 5];
    let mut trials = 200u32;
    let mut assignments: Vec<String> =
        Assignment::operator_catalog().iter().map(|a| a.name().to_string()).collect();
    let mut properties: Vec<String> = Property::all().iter().map(|p| p.name().to_string()).collect();
    let mut tolerances = BTreeMap::new();
    let mut expects = Vec::new();
    let mut gleason = Vec::new();
    let mut envariance = None;
    let mut finegrain = None;
    let mut hartle = Vec::new();
    let mut mixture = Vec::new();
    let mut continuity = Vec::new();
    let mut pathology = None;

    while let Some((lineno, line)) = cursor.next() {
        if let Some(kind) = line.strip_prefix('[') {
            let kind = kind
                .strip_suffix(']')
                .ok_or(Error::Parse { line: lineno, message: "unterminated block header".into() })?;
            if kind.starts_with('/') {
                return perr(lineno, format!("unexpected block close {line:?}"));
            }
            let body = read_block(&mut cursor, kind, lineno)?;
            match kind {
                "gleason" => gleason.push(GleasonBlock {
                    assignment: body.take_str("assignment")?,
                    dim: body.take_parsed("dim")?,
                    frames: body.take_parsed("frames")?,
                }),
                "envariance" => {
                    envariance = Some(EnvarianceBlock { dims: body.take_parsed_list("dims")? })
                }
                "finegrain" => {
                    let tokens = body.take_tokens("pairs")?;
                    let mut pairs = Vec::new();
                    for t in &tokens {
                        let (m, n) = t.split_once('/').ok_or(Error::Parse {
                            line: body.line,
                            message: format!("pair {t:?} is not m/n"),
                        })?;
                        pairs.push((
                            parse_one(body.line, m, "integer")?,
                            parse_one(body.line, n, "integer")?,
                        ));
                    }
                    finegrain = Some(FinegrainBlock { pairs });
                }
                "hartle" => hartle.push(HartleBlock {
                    probs: body.take_parsed_list("probs")?,
                    target: body.take_parsed("target")?,
                    ngrid: body.take_parsed_list("ngrid")?,
                }),
                "mixture" => mixture.push(MixtureBlock {
                    weights: body.take_parsed_list("weights")?,
                    qvalues: body.take_parsed_list("qvalues")?,
                    ngrid: body.take_parsed_list("ngrid")?,
                }),
                "continuity" => continuity.push(ContinuityBlock {
                    assignment: body.take_str("assignment")?,
                    path: body.take_str("path")?,
                    tol: body.take_parsed("tol")?,
                    grid: body.take_tokens("grid")?,
                }),
                "pathology" => {
                    pathology = Some(PathologyBlock {
                        c1: body.take_str("c1")?,
                        c2: body.take_str("c2")?,
                        pairs: body.take_parsed("pairs")?,
                    })
                }
                other => return perr(lineno, format!("unknown block kind {other:?}")),
            }
            continue;
        }

        let mut tokens = line.split_whitespace();
        let key = tokens.next().expect("nonempty line");
        let rest: Vec<&str> = tokens.collect();
        match key {
            "name" => {
                if rest.len() != 1 {
                    return perr(lineno, "name takes exactly one value");
                }
                name = Some(rest[0].to_string());
            }
            "seed" => seed = Some(parse_one(lineno, rest.first().copied().unwrap_or(""), "seed")?),
            "dims" => dims = parse_list(lineno, &rest, "dimension")?,
            "trials" => trials = parse_one(lineno, rest.first().copied().unwrap_or(""), "trials")?,
            "assignments" => assignments = rest.iter().map(|s| s.to_string()).collect(),
            "properties" => properties = rest.iter().map(|s| s.to_string()).collect(),
            "tolerance" => {
                if rest.len() != 2 {
                    return perr(lineno, "tolerance takes a property name and a value");
                }
                let value: f64 = parse_one(lineno, rest[1], "tolerance")?;
                if value <= 0.0 {
                    return perr(lineno, format!("tolerance {value} must be positive"));
                }
                tolerances.insert(rest[0].to_string(), value);
            }
            "expect" => {
                if rest.len() != 3 {
                    return perr(lineno, "expect takes assignment, property, holds|fails");
                }
                let expect = match rest[2] {
                    "holds" => ExpectKind::Holds,
                    "fails" => ExpectKind::Fails,
                    other => return perr(lineno, format!("expect value {other:?} is not holds|fails")),
                };
                expects.push(Expectation {
                    assignment: rest[0].to_string(),
                    property: rest[1].to_string(),
                    expect,
                });
            }
            other => return perr(lineno, format!("unknown key {other:?}")),
        }
    }

    let spec = ScenarioSpec {
        name: name.ok_or(Error::Parse { line: 0, message: "missing mandatory key: name".into() })?,
        seed: seed.ok_or(Error::Parse { line: 0, message: "missing mandatory key: seed".into() })?,
        dims,
        trials,
        assignments,
        properties,
        tolerances,
        expects,
        gleason,
        envariance,
        finegrain,
        hartle,
        mixture,
        continuity,
        pathology,
    };
    validate(&spec)?;
    Ok(spec)
}

/// Key/value lines of one block.
struct Block {
    kind: String,
    line: usize,
    entries: BTreeMap<String, Vec<String>>,
}

impl Block {
    fn take_tokens(&self, key: &str) -> Result<Vec<String>> {
        self.entries.get(key).cloned().ok_or(Error::Parse {
            line: self.line,
            message: format!("[{}] block is missing key {key:?}", self.kind),
        })
    }

    fn take_str(&self, key: &str) -> Result<String> {
        let tokens = self.take_tokens(key)?;
        if tokens.len() != 1 {
            return perr(self.line, format!("key {key:?} takes exactly one value"));
        }
        Ok(tokens[0].clone())
    }

    fn take_parsed<T: FromStr>(&self, key: &str) -> Result<T> {
        let value = self.take_str(key)?;
        parse_one(self.line, &value, key)
    }

    fn take_parsed_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let tokens = self.take_tokens(key)?;
        tokens
            .iter()
            .map(|t| parse_one(self.line, t, key))
            .collect()
    }
}

fn read_block(cursor: &mut Cursor<'_>, kind: &str, open_line: usize) -> Result<Block> {
    let close = format!("[/{kind}]");
    let mut entries: BTreeMap<String, Vec<String>> = BTreeMap::new();
    loop {
        let Some((lineno, line)) = cursor.next() else {
            return perr(open_line, format!("[{kind}] block is never closed"));
        };
        if line == close {
            return Ok(Block { kind: kind.to_string(), line: open_line, entries });
        }
        if line.starts_with('[') {
            return perr(lineno, format!("expected {close} before a new block"));
        }
        let mut tokens = line.split_whitespace();
        let key = tokens.next().expect("nonempty line").to_string();
        // grid tokens may contain spaces around '+'/'-'; rejoin quad literals
        let values: Vec<String> = rejoin_quad_tokens(tokens.map(|s| s.to_string()).collect());
        entries.insert(key, values);
    }
}

/// Grid lines may write `1/2 + 1/8*sqrt2` with spaces; glue a token starting
/// with '+'/'-' (or following one) back onto its predecessor.
fn rejoin_quad_tokens(tokens: Vec<String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut gluing = false;
    for t in tokens {
        if t == "+" || t == "-" {
            if let Some(last) = out.last_mut() {
                last.push_str(&t);
                gluing = true;
                continue;
            }
        }
        if gluing {
            let last = out.last_mut().expect("glue has a target");
            last.push_str(&t);
            gluing = false;
        } else {
            out.push(t);
        }
    }
    out
}

fn validate(spec: &ScenarioSpec) -> Result<()> {
    for name in &spec.assignments {
        Assignment::from_name(name)?;
    }
    for name in &spec.properties {
        Property::from_name(name)?;
    }
    for e in &spec.expects {
        Assignment::from_name(&e.assignment)?;
        Property::from_name(&e.property)?;
        if !spec.assignments.contains(&e.assignment) || !spec.properties.contains(&e.property) {
            return Err(Error::InvalidSpec(format!(
                "expectation {}/{} targets a cell outside the requested matrix",
                e.assignment, e.property
            )));
        }
    }
    if spec.dims.is_empty() || spec.dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidSpec("dims must be positive".into()));
    }
    if spec.trials == 0 {
        return Err(Error::InvalidSpec("trials must be at least 1".into()));
    }
    for g in &spec.gleason {
        Assignment::from_name(&g.assignment)?;
        if g.dim == 0 || g.frames == 0 {
            return Err(Error::InvalidSpec("gleason block needs positive dim and frames".into()));
        }
    }
    for c in &spec.continuity {
        Assignment::from_name(&c.assignment)?;
        ProbePath::from_name(&c.path)?;
        if c.tol <= 0.0 {
            return Err(Error::InvalidSpec("continuity tol must be positive".into()));
        }
        if c.grid.is_empty() {
            return Err(Error::InvalidSpec("continuity grid must be nonempty".into()));
        }
    }
    for h in &spec.hartle {
        if h.target >= h.probs.len() {
            return Err(Error::InvalidSpec("hartle target out of range".into()));
        }
    }
    if let Some(p) = &spec.pathology {
        crate::exact::parse_rational(&p.c1)?;
        crate::exact::parse_rational(&p.c2)?;
        if p.pairs == 0 {
            return Err(Error::InvalidSpec("pathology pairs must be at least 1".into()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\nname demo\nseed 7\n";

    #[test]
    fn minimal_scenario_gets_defaults() {
        let spec = parse_scenario(MINIMAL).unwrap();
        assert_eq!(spec.name, "demo");
        assert_eq!(spec.seed, 7);
        assert_eq!(spec.dims, vec![2, 3, 4, 5]);
        assert_eq!(spec.trials, 200);
        assert_eq!(spec.assignments.len(), 6);
        assert_eq!(spec.properties.len(), 7);
        assert_eq!(spec.tolerance_for("additivity"), 1e-9);
    }

    #[test]
    fn missing_seed_is_an_error() {
        assert!(matches!(parse_scenario("name x\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn unknown_names_are_rejected() {
        let err = parse_scenario("name x\nseed 1\nassignments born mystery\n");
        assert!(matches!(err, Err(Error::UnknownIdentifier(_))));
        let err = parse_scenario("name x\nseed 1\nproperties additivity nope\n");
        assert!(matches!(err, Err(Error::UnknownIdentifier(_))));
    }

    #[test]
    fn nonpositive_tolerance_is_rejected_with_line_number() {
        let err = parse_scenario("name x\nseed 1\ntolerance additivity -1\n");
        match err {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn blocks_round_trip() {
        let text = "\
name blocky
seed 4
dims 2 3
trials 10
assignments born zurek-patch
properties additivity onc
tolerance default 1e-8
expect born additivity holds

[gleason]
assignment born
dim 3
frames 20
[/gleason]

[envariance]
dims 2 3 4
[/envariance]

[finegrain]
pairs 1/2 2/3 617/1000
[/finegrain]

[hartle]
probs 0.5 0.5
target 0
ngrid 100 1000 10000 100000
[/hartle]

[mixture]
weights 0.3 0.7
qvalues 0.2 0.9
ngrid 10 100 1000 10000
[/mixture]

[continuity]
assignment zurek-patch
path amplitude-sweep
tol 0.001
grid 1/4 9/20 1/2 - 14142/100000000 + 1/10000*sqrt2 1/2
[/continuity]

[pathology]
c1 1
c2 10000
pairs 1000
[/pathology]
";
        let spec = parse_scenario(text).unwrap();
        assert_eq!(spec.gleason.len(), 1);
        assert_eq!(spec.envariance.as_ref().unwrap().dims, vec![2, 3, 4]);
        assert_eq!(spec.finegrain.as_ref().unwrap().pairs, vec![(1, 2), (2, 3), (617, 1000)]);
        assert_eq!(spec.hartle[0].ngrid, vec![100, 1000, 10000, 100000]);
        assert_eq!(spec.mixture[0].weights, vec![0.3, 0.7]);
        // the spaced quadratic literal is glued back into one token
        assert_eq!(
            spec.continuity[0].grid,
            vec!["1/4", "9/20", "1/2-14142/100000000+1/10000*sqrt2", "1/2"]
        );
        assert_eq!(spec.pathology.as_ref().unwrap().pairs, 1000);
    }

    #[test]
    fn unclosed_block_is_reported_at_its_opening_line() {
        let err = parse_scenario("name x\nseed 1\n[gleason]\nassignment born\n");
        match err {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("never closed"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn expectation_outside_matrix_is_rejected() {
        let err = parse_scenario("name x\nseed 1\nassignments born\nexpect trace-squared onc holds\n");
        assert!(matches!(err, Err(Error::InvalidSpec(_))));
    }
}
