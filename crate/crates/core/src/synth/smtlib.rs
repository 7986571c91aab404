//! Constraint backend: SMT-LIB v2 synthesis queries for an external solver.
//!
//! A template's holes become solver constants: a boolean per undetermined
//! quantifier (true: universal), a negation flag per node, a connective code
//! per internal node, and per leaf a relation code plus one argument hole per
//! argument position of each sort. Relation codes follow the signature order
//! with equality last. Quantifiers over each model are expanded into finite
//! conjunctions and disjunctions, and the query asserts the disjunction over
//! candidates `c` of "true on every training model, true on `c`, false on the
//! other candidates".

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use super::engine::{Collector, Search};
use super::puzzle::{is_discriminator, Puzzle};
use super::space::{atoms, Arg, AtomSpec};
use super::template::{decode_env, templates, Connective, Filling, Skeleton, Template};
use super::{SynthesisConfig, SynthesisError};
use crate::logic::{Formula, Quantifier, Signature, Sort};
use crate::sexpr::{self, SExpr};

/// Solutions drawn from the solver per template before moving on.
pub const MAX_SOLUTIONS_PER_TEMPLATE: usize = 64;

/// Number of argument holes per sort for every leaf.
struct HoleLayout {
    objects: usize,
    labels: usize,
    numbers: usize,
}

impl HoleLayout {
    fn new(sig: &Signature) -> Self {
        let max = |s: Sort| {
            sig.relations()
                .iter()
                .map(|r| r.args.iter().filter(|&&a| a == s).count())
                .max()
                .unwrap_or(0)
        };
        HoleLayout {
            objects: max(Sort::Object).max(2),
            labels: max(Sort::Label),
            numbers: max(Sort::Number),
        }
    }
}

/// The hole valuation that selects `atom` at leaf `t`.
fn atom_holes(sig: &Signature, atom: &AtomSpec, t: usize) -> Vec<(String, i64)> {
    let code = match &atom.rel {
        Some(r) => sig.relations().iter().position(|d| &d.name == r).expect("signature relation"),
        None => sig.relations().len(),
    };
    let mut out = vec![(format!("rel_{t}"), code as i64)];
    let (mut o, mut l, mut n) = (0, 0, 0);
    for a in &atom.args {
        match a {
            Arg::Var(v) => {
                out.push((format!("obj_{t}_{o}"), *v as i64));
                o += 1;
            }
            Arg::Label(name) => {
                let idx = sig.labels().iter().position(|x| x == name).expect("signature label");
                out.push((format!("lab_{t}_{l}"), idx as i64));
                l += 1;
            }
            Arg::Nat(v) => {
                out.push((format!("num_{t}_{n}"), *v as i64));
                n += 1;
            }
        }
    }
    out
}

fn conj(parts: &[(String, i64)]) -> String {
    let eqs: Vec<String> = parts
        .iter()
        .map(|(h, v)| match (h.starts_with("q_") || h.starts_with("neg_"), v) {
            (true, 0) => format!("(not {h})"),
            (true, _) => h.clone(),
            (false, _) => format!("(= {h} {v})"),
        })
        .collect();
    nary("and", eqs)
}

/// `(op a b ..)` with the degenerate arities spelled out.
fn nary(op: &str, args: Vec<String>) -> String {
    match (op, args.len()) {
        ("and", 0) => "true".into(),
        ("or", 0) => "false".into(),
        (_, 1) => args.into_iter().next().unwrap(),
        _ => format!("({op} {})", args.join(" ")),
    }
}

/// Pre-order numbering of a skeleton: per node, its children node ids and
/// its leaf or internal index.
enum Shape {
    Leaf { leaf: usize },
    Node { internal: usize, left: usize, right: usize },
}

fn number(s: &Skeleton, out: &mut Vec<Shape>, counters: &mut (usize, usize)) -> usize {
    let id = out.len();
    match s {
        Skeleton::Leaf => {
            out.push(Shape::Leaf { leaf: counters.0 });
            counters.0 += 1;
        }
        Skeleton::Node(l, r) => {
            out.push(Shape::Node {
                internal: counters.1,
                left: 0,
                right: 0,
            });
            counters.1 += 1;
            let left = number(l, out, counters);
            let right = number(r, out, counters);
            out[id] = Shape::Node {
                internal: match out[id] {
                    Shape::Node { internal, .. } => internal,
                    Shape::Leaf { .. } => unreachable!(),
                },
                left,
                right,
            };
        }
    }
    id
}

/// The synthesis query for `template`, ending in `check-sat` and
/// `get-model`.
pub fn encode_smtlib(puzzle: &Puzzle, template: &Template, cfg: &SynthesisConfig) -> Result<String, SynthesisError> {
    encode_with_blocks(puzzle, template, cfg, &[])
}

fn encode_with_blocks(
    puzzle: &Puzzle,
    template: &Template,
    cfg: &SynthesisConfig,
    blocked: &[Filling],
) -> Result<String, SynthesisError> {
    template.check_bounds(cfg)?;
    let sig = puzzle.signature();
    let k = template.vars();
    let specs = atoms(sig, k);
    let holes = HoleLayout::new(sig);
    let mut shape = Vec::new();
    let (leaves, internals) = {
        let mut c = (0, 0);
        number(&template.skeleton, &mut shape, &mut c);
        c
    };

    let mut s = String::new();
    let w = &mut s;
    writeln!(w, "; discriminator synthesis query").unwrap();
    writeln!(w, "(set-option :produce-models true)").unwrap();
    writeln!(w, "(set-option :random-seed {})", cfg.seed).unwrap();
    writeln!(w, "(set-logic QF_LIA)").unwrap();

    // Holes.
    let forall = |i: usize| match template.prefix[i] {
        Some(Quantifier::Forall) => "true".to_string(),
        Some(Quantifier::Exists) => "false".to_string(),
        None => format!("q_{i}"),
    };
    for (i, q) in template.prefix.iter().enumerate() {
        if q.is_none() {
            writeln!(w, "(declare-const q_{i} Bool)").unwrap();
        }
    }
    for j in 0..shape.len() {
        writeln!(w, "(declare-const neg_{j} Bool)").unwrap();
    }
    for i in 0..internals {
        writeln!(w, "(declare-const op_{i} Int)").unwrap();
        writeln!(w, "(assert (and (<= 0 op_{i}) (<= op_{i} 2)))").unwrap();
    }
    for t in 0..leaves {
        writeln!(w, "(declare-const rel_{t} Int)").unwrap();
        for p in 0..holes.objects {
            writeln!(w, "(declare-const obj_{t}_{p} Int)").unwrap();
        }
        for p in 0..holes.labels {
            writeln!(w, "(declare-const lab_{t}_{p} Int)").unwrap();
        }
        for p in 0..holes.numbers {
            writeln!(w, "(declare-const num_{t}_{p} Int)").unwrap();
        }
        // One macro per atom choice; a leaf must pick one of them.
        for (a, atom) in specs.iter().enumerate() {
            writeln!(w, "(define-fun pick_{t}_{a} () Bool {})", conj(&atom_holes(sig, atom, t))).unwrap();
        }
        writeln!(w, "(assert {})", nary("or", (0..specs.len()).map(|a| format!("pick_{t}_{a}")).collect())).unwrap();
    }
    // Dialect: no negated label atoms.
    if cfg.forbid_negated_label_atoms {
        let code = sig
            .relations()
            .iter()
            .position(|d| d.name == crate::logic::rel::LABEL_OF);
        if let Some(code) = code {
            for (j, node) in shape.iter().enumerate() {
                if let Shape::Leaf { leaf } = node {
                    writeln!(w, "(assert (=> neg_{j} (not (= rel_{leaf} {code}))))").unwrap();
                }
            }
        }
    }

    // Interpretation in every model.
    let models: Vec<_> = puzzle.models().collect();
    for (m, model) in models.iter().enumerate() {
        let n = model.object_count();
        for idx in 0..n.pow(k as u32) {
            let env = decode_env(idx, n, k);
            for j in (0..shape.len()).rev() {
                let inner = match &shape[j] {
                    Shape::Leaf { leaf } => nary(
                        "or",
                        specs
                            .iter()
                            .enumerate()
                            .filter(|(_, a)| a.holds(model, &env))
                            .map(|(a, _)| format!("pick_{leaf}_{a}"))
                            .collect(),
                    ),
                    Shape::Node { internal, left, right } => {
                        let (l, r) = (format!("v_{m}_{idx}_{left}"), format!("v_{m}_{idx}_{right}"));
                        format!(
                            "(ite (= op_{internal} 0) (and {l} {r}) (ite (= op_{internal} 1) (or {l} {r}) (=> {l} {r})))"
                        )
                    }
                };
                writeln!(w, "(define-fun v_{m}_{idx}_{j} () Bool (xor neg_{j} {inner}))").unwrap();
            }
        }
        writeln!(w, "(define-fun t_{m} () Bool {})", expand(n, k, 0, 0, &forall, &|idx| format!("v_{m}_{idx}_0"))).unwrap();
        // Vacuity: universal first quantifier over an empty universe, or an
        // unnegated implication at the root whose guard nothing satisfies.
        let guard_empty = match shape[0] {
            Shape::Node { internal, left, .. } => {
                let any = nary("or", (0..n.pow(k as u32)).map(|idx| format!("v_{m}_{idx}_{left}")).collect());
                format!("(and (not neg_0) (= op_{internal} 2) (not {any}))")
            }
            Shape::Leaf { .. } => "false".into(),
        };
        let empty = if n == 0 { "true" } else { "false" };
        writeln!(w, "(define-fun vac_{m} () Bool (and {} (or {empty} {guard_empty})))", forall(0)).unwrap();
    }

    let train = puzzle.train().len();
    let mut cases = Vec::new();
    for c in 0..puzzle.candidates().len() {
        let mut parts: Vec<String> = (0..train).map(|m| format!("t_{m}")).collect();
        for j in 0..puzzle.candidates().len() {
            let t = format!("t_{}", train + j);
            parts.push(if j == c { t } else { format!("(not {t})") });
        }
        if cfg.exclude_vacuous {
            parts.extend((0..train).chain([train + c]).map(|m| format!("(not vac_{m})")));
        }
        cases.push(nary("and", parts));
    }
    writeln!(w, "(assert {})", nary("or", cases)).unwrap();

    for f in blocked {
        writeln!(w, "(assert (not {}))", conj(&filling_holes(sig, template, &specs, f))).unwrap();
    }
    writeln!(w, "(check-sat)").unwrap();
    writeln!(w, "(get-model)").unwrap();
    Ok(s)
}

/// Quantifier expansion of variables `depth..k` over `n` objects, where
/// `base` is the assignment index accumulated so far.
fn expand(n: usize, k: usize, depth: usize, base: usize, forall: &dyn Fn(usize) -> String, leaf: &dyn Fn(usize) -> String) -> String {
    if depth == k {
        return leaf(base);
    }
    let parts: Vec<String> = (0..n).map(|o| expand(n, k, depth + 1, base * n + o, forall, leaf)).collect();
    let q = forall(depth);
    match q.as_str() {
        "true" => nary("and", parts),
        "false" => nary("or", parts),
        _ => format!("(ite {q} {} {})", nary("and", parts.clone()), nary("or", parts)),
    }
}

/// The hole values that pin down a filling, used for blocking clauses.
fn filling_holes(sig: &Signature, template: &Template, specs: &[AtomSpec], f: &Filling) -> Vec<(String, i64)> {
    let mut out = Vec::new();
    for (i, q) in f.quantifiers.iter().enumerate() {
        if template.prefix[i].is_none() {
            out.push((format!("q_{i}"), (*q == Quantifier::Forall) as i64));
        }
    }
    for (j, &n) in f.negations.iter().enumerate() {
        out.push((format!("neg_{j}"), n as i64));
    }
    for (i, op) in f.ops.iter().enumerate() {
        out.push((format!("op_{i}"), connective_code(*op)));
    }
    for (t, &a) in f.leaves.iter().enumerate() {
        out.extend(atom_holes(sig, &specs[a], t));
    }
    out
}

fn connective_code(c: Connective) -> i64 {
    match c {
        Connective::And => 0,
        Connective::Or => 1,
        Connective::Implies => 2,
    }
}

/// Outcome of one solver run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverOutcome {
    /// The full standard output, starting with `sat`.
    Sat(String),
    Unsat,
    Unknown(String),
}

/// Runs `command` with `script` on its standard input.
pub fn run_solver(command: &[String], script: &str) -> Result<SolverOutcome, SynthesisError> {
    let (program, args) = command
        .split_first()
        .ok_or_else(|| SynthesisError::Solver("empty solver command".into()))?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| SynthesisError::Solver(format!("cannot start `{program}`: {e}")))?;
    child
        .stdin
        .take()
        .expect("piped stdin")
        .write_all(script.as_bytes())
        .map_err(|e| SynthesisError::Solver(e.to_string()))?;
    let out = child.wait_with_output().map_err(|e| SynthesisError::Solver(e.to_string()))?;
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    Ok(match stdout.split_whitespace().next() {
        Some("sat") => SolverOutcome::Sat(stdout),
        Some("unsat") => SolverOutcome::Unsat,
        _ => SolverOutcome::Unknown(stdout),
    })
}

/// Recovers the formula chosen by a `sat` answer to [`encode_smtlib`].
pub fn decode_assignment(output: &str, template: &Template, sig: &Signature) -> Result<Formula, SynthesisError> {
    let specs = atoms(sig, template.vars());
    let filling = decode_filling(output, template, sig, &specs)?;
    Ok(filling.formula(template, &specs))
}

fn decode_filling(
    output: &str,
    template: &Template,
    sig: &Signature,
    specs: &[AtomSpec],
) -> Result<Filling, SynthesisError> {
    let exprs = sexpr::parse_all(output).map_err(|e| SynthesisError::Decode(e.to_string()))?;
    match exprs.first().and_then(SExpr::as_symbol) {
        Some("sat") => {}
        Some("unsat") => return Err(SynthesisError::NoAssignment),
        _ => return Err(SynthesisError::Decode("expected `sat`".into())),
    }
    let model = exprs
        .get(1)
        .and_then(SExpr::as_list)
        .ok_or_else(|| SynthesisError::Decode("missing model".into()))?;
    let mut values: BTreeMap<String, i64> = BTreeMap::new();
    for entry in model {
        let Some(items) = entry.as_list() else { continue };
        // (define-fun NAME () SORT VALUE)
        if let [head, name, _, _, value] = items {
            if head.as_symbol() != Some("define-fun") {
                continue;
            }
            let (Some(name), Some(v)) = (name.as_symbol(), literal(value)) else { continue };
            values.insert(name.to_string(), v);
        }
    }
    let get = |name: &str| {
        values
            .get(name)
            .copied()
            .ok_or_else(|| SynthesisError::Decode(format!("no value for `{name}`")))
    };
    let mut shape = Vec::new();
    let (leaves, internals) = {
        let mut c = (0, 0);
        number(&template.skeleton, &mut shape, &mut c);
        c
    };
    let quantifiers = template
        .prefix
        .iter()
        .enumerate()
        .map(|(i, q)| match q {
            Some(q) => Ok(*q),
            None => Ok(if get(&format!("q_{i}"))? == 1 {
                Quantifier::Forall
            } else {
                Quantifier::Exists
            }),
        })
        .collect::<Result<Vec<_>, SynthesisError>>()?;
    let negations = (0..shape.len())
        .map(|j| get(&format!("neg_{j}")).map(|v| v == 1))
        .collect::<Result<Vec<_>, _>>()?;
    let ops = (0..internals)
        .map(|i| match get(&format!("op_{i}"))? {
            0 => Ok(Connective::And),
            1 => Ok(Connective::Or),
            2 => Ok(Connective::Implies),
            v => Err(SynthesisError::Decode(format!("connective code {v} out of range"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut chosen = Vec::with_capacity(leaves);
    for t in 0..leaves {
        let a = specs
            .iter()
            .position(|atom| {
                atom_holes(sig, atom, t)
                    .iter()
                    .all(|(h, v)| values.get(h) == Some(v))
            })
            .ok_or_else(|| SynthesisError::Decode(format!("leaf {t} matches no atom")))?;
        chosen.push(a);
    }
    Ok(Filling {
        quantifiers,
        negations,
        ops,
        leaves: chosen,
    })
}

fn literal(e: &SExpr) -> Option<i64> {
    match e {
        SExpr::Symbol(s, _) => match s.as_str() {
            "true" => Some(1),
            "false" => Some(0),
            s => s.parse().ok(),
        },
        SExpr::List(items, _) => match items.as_slice() {
            [minus, v] if minus.as_symbol() == Some("-") => literal(v).map(|v| -v),
            _ => None,
        },
        SExpr::Str(..) => None,
    }
}

/// Solutions of one template, each re-verified with the evaluator.
pub fn solve_template(
    puzzle: &Puzzle,
    template: &Template,
    cfg: &SynthesisConfig,
    limit: usize,
) -> Result<Vec<(Formula, usize)>, SynthesisError> {
    let sig = puzzle.signature();
    let specs = atoms(sig, template.vars());
    let mut blocked: Vec<Filling> = Vec::new();
    let mut out = Vec::new();
    while blocked.len() < limit {
        let script = encode_with_blocks(puzzle, template, cfg, &blocked)?;
        match run_solver(&cfg.solver_command, &script)? {
            SolverOutcome::Unsat => break,
            SolverOutcome::Unknown(text) => {
                return Err(SynthesisError::Solver(format!("unexpected solver output: {}", text.trim())))
            }
            SolverOutcome::Sat(text) => {
                let filling = decode_filling(&text, template, sig, &specs)?;
                let formula = filling.formula(template, &specs);
                if let Some(c) = is_discriminator(puzzle, &formula) {
                    out.push((formula, c));
                } else {
                    return Err(SynthesisError::Solver(format!(
                        "solver model decodes to a non-discriminator: {formula}"
                    )));
                }
                blocked.push(filling);
            }
        }
    }
    Ok(out)
}

/// Template-by-template search in cost-compatible order: every template
/// with `k` variables and `a` atoms is solved before moving to larger ones.
pub(crate) fn search(puzzle: &Puzzle, cfg: &SynthesisConfig, start: Instant) -> Result<Search, SynthesisError> {
    let budget = Duration::from_secs_f64(cfg.time_budget_seconds);
    let mut collector = Collector::new(puzzle, cfg, start);
    let all = templates(cfg);
    for group in all.chunk_by(|x, y| (x.vars(), x.skeleton.leaves()) == (y.vars(), y.skeleton.leaves())) {
        let mut found = Vec::new();
        for t in group {
            if start.elapsed() > budget {
                return Ok(collector.finish(true));
            }
            found.extend(solve_template(puzzle, t, cfg, MAX_SOLUTIONS_PER_TEMPLATE)?);
        }
        if collector.add_group(found) {
            return Ok(collector.finish(false));
        }
    }
    Ok(collector.finish(false))
}
