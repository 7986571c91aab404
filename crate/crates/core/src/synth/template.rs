//! Templates: a quantifier prefix plus a binary parse-tree shape whose
//! connectives, negations and atoms are holes.

use super::puzzle::Puzzle;
use super::space::{atoms, close, var_name, AtomSpec};
use super::{SynthesisConfig, SynthesisError};
use crate::logic::{Formula, Quantifier, Var};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Skeleton {
    Leaf,
    Node(Box<Skeleton>, Box<Skeleton>),
}

impl Skeleton {
    pub fn leaves(&self) -> usize {
        match self {
            Skeleton::Leaf => 1,
            Skeleton::Node(l, r) => l.leaves() + r.leaves(),
        }
    }

    /// Number of internal nodes.
    pub fn internal(&self) -> usize {
        self.leaves() - 1
    }

    /// Every shape with exactly `leaves` leaves.
    pub fn shapes(leaves: usize) -> Vec<Skeleton> {
        if leaves == 1 {
            return vec![Skeleton::Leaf];
        }
        let mut out = Vec::new();
        for l in 1..leaves {
            for left in Skeleton::shapes(l) {
                for right in Skeleton::shapes(leaves - l) {
                    out.push(Skeleton::Node(Box::new(left.clone()), Box::new(right)));
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Connective {
    And,
    Or,
    Implies,
}

pub const CONNECTIVES: [Connective; 3] = [Connective::And, Connective::Or, Connective::Implies];

/// A quantifier prefix over `x0..`, where `None` leaves the quantifier to
/// the solver, and a body shape.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Template {
    pub prefix: Vec<Option<Quantifier>>,
    pub skeleton: Skeleton,
}

impl Template {
    pub fn vars(&self) -> usize {
        self.prefix.len()
    }

    pub fn check_bounds(&self, cfg: &SynthesisConfig) -> Result<(), SynthesisError> {
        if self.prefix.is_empty() || self.prefix.len() > cfg.max_vars {
            return Err(SynthesisError::TemplateOutOfBounds(format!(
                "prefix length {} outside 1..={}",
                self.prefix.len(),
                cfg.max_vars
            )));
        }
        if self.skeleton.leaves() > cfg.max_atoms {
            return Err(SynthesisError::TemplateOutOfBounds(format!(
                "{} atoms exceed max_atoms {}",
                self.skeleton.leaves(),
                cfg.max_atoms
            )));
        }
        Ok(())
    }
}

/// All templates within the bounds with fully specified prefixes, ordered by
/// prefix length, atom count, shape and prefix (bit `i` of the prefix index
/// set: `x{i}` is universal).
pub fn templates(cfg: &SynthesisConfig) -> Vec<Template> {
    let mut out = Vec::new();
    for k in 1..=cfg.max_vars {
        for a in 1..=cfg.max_atoms {
            for shape in Skeleton::shapes(a) {
                for mask in 0..1usize << k {
                    out.push(Template {
                        prefix: (0..k).map(|i| Some(super::space::prefix_quantifier(mask, i))).collect(),
                        skeleton: shape.clone(),
                    });
                }
            }
        }
    }
    out
}

/// A complete valuation of a template's holes. Nodes are numbered in
/// pre-order; `ops` lists internal nodes and `leaves` the atoms from left to
/// right, as indices into [`atoms`] for the template's prefix length.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Filling {
    pub quantifiers: Vec<Quantifier>,
    pub negations: Vec<bool>,
    pub ops: Vec<Connective>,
    pub leaves: Vec<usize>,
}

impl Filling {
    pub fn formula(&self, template: &Template, atoms: &[AtomSpec]) -> Formula {
        let mut cursor = (0, 0, 0);
        let body = self.node(&template.skeleton, atoms, &mut cursor);
        self.quantifiers
            .iter()
            .enumerate()
            .rev()
            .fold(body, |acc, (i, &q)| Formula::quantified(q, Var::object(var_name(i)), acc))
    }

    fn node(&self, s: &Skeleton, atoms: &[AtomSpec], cursor: &mut (usize, usize, usize)) -> Formula {
        let neg = self.negations[cursor.0];
        cursor.0 += 1;
        let f = match s {
            Skeleton::Leaf => {
                let f = atoms[self.leaves[cursor.2]].formula();
                cursor.2 += 1;
                f
            }
            Skeleton::Node(l, r) => {
                let op = self.ops[cursor.1];
                cursor.1 += 1;
                let (l, r) = (self.node(l, atoms, cursor), self.node(r, atoms, cursor));
                match op {
                    Connective::And => Formula::and(vec![l, r]),
                    Connective::Or => Formula::or(vec![l, r]),
                    Connective::Implies => Formula::implies(l, r),
                }
            }
        };
        if neg {
            Formula::not(f)
        } else {
            f
        }
    }
}

/// Every discriminator matching `template`, found by trying all hole
/// valuations against per-model truth tables, with the 0-based candidate it
/// selects. Sentences are vacuity-filtered when the config asks for it.
/// Exhaustive, so meant for small templates.
pub fn template_discriminators(
    puzzle: &Puzzle,
    template: &Template,
    cfg: &SynthesisConfig,
) -> Result<Vec<(Formula, usize)>, SynthesisError> {
    template.check_bounds(cfg)?;
    let k = template.vars();
    let specs = atoms(puzzle.signature(), k);
    let models: Vec<_> = puzzle.models().collect();
    let sizes: Vec<usize> = models.iter().map(|m| m.object_count()).collect();
    let atom_tables: Vec<Vec<Vec<bool>>> = specs
        .iter()
        .map(|a| {
            models
                .iter()
                .zip(&sizes)
                .map(|(m, &n)| {
                    (0..n.pow(k as u32))
                        .map(|idx| a.holds(m, &decode_env(idx, n, k)))
                        .collect()
                })
                .collect()
        })
        .collect();

    let bodies = fill(&template.skeleton, &specs, &atom_tables, cfg.forbid_negated_label_atoms);
    let train = puzzle.train().len();
    let mut out = Vec::new();
    let masks: Vec<usize> = (0..1usize << k)
        .filter(|&mask| {
            template
                .prefix
                .iter()
                .enumerate()
                .all(|(i, q)| q.is_none_or(|q| super::space::prefix_quantifier(mask, i) == q))
        })
        .collect();
    for body in &bodies {
        for &mask in &masks {
            let truth: Vec<bool> = body
                .tables
                .iter()
                .zip(&sizes)
                .map(|(t, &n)| quantify(t, n, k, mask))
                .collect();
            if !truth[..train].iter().all(|&t| t) {
                continue;
            }
            let chosen: Vec<usize> = (0..puzzle.candidates().len()).filter(|&j| truth[train + j]).collect();
            let [cand] = chosen[..] else { continue };
            if cfg.exclude_vacuous && mask & 1 == 1 {
                let vacuous = (0..train).chain([train + cand]).any(|m| {
                    sizes[m] == 0 || body.guard.as_ref().is_some_and(|g| !g[m].iter().any(|&b| b))
                });
                if vacuous {
                    continue;
                }
            }
            out.push((close(body.formula.clone(), k, mask), cand));
        }
    }
    Ok(out)
}

struct Body {
    formula: Formula,
    tables: Vec<Vec<bool>>,
    /// The antecedent's tables when the body is an unnegated implication.
    guard: Option<Vec<Vec<bool>>>,
}

fn fill(s: &Skeleton, specs: &[AtomSpec], tables: &[Vec<Vec<bool>>], forbid: bool) -> Vec<Body> {
    let mut out = Vec::new();
    match s {
        Skeleton::Leaf => {
            for (i, a) in specs.iter().enumerate() {
                out.push(Body {
                    formula: a.formula(),
                    tables: tables[i].clone(),
                    guard: None,
                });
                if !(forbid && a.is_label_atom()) {
                    out.push(Body {
                        formula: Formula::not(a.formula()),
                        tables: negate(&tables[i]),
                        guard: None,
                    });
                }
            }
        }
        Skeleton::Node(l, r) => {
            let left = fill(l, specs, tables, forbid);
            let right = fill(r, specs, tables, forbid);
            for p in &left {
                for q in &right {
                    for op in CONNECTIVES {
                        let combine = |x: bool, y: bool| match op {
                            Connective::And => x && y,
                            Connective::Or => x || y,
                            Connective::Implies => !x || y,
                        };
                        let t: Vec<Vec<bool>> = p
                            .tables
                            .iter()
                            .zip(&q.tables)
                            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| combine(x, y)).collect())
                            .collect();
                        let (fp, fq) = (p.formula.clone(), q.formula.clone());
                        let f = match op {
                            Connective::And => Formula::and(vec![fp, fq]),
                            Connective::Or => Formula::or(vec![fp, fq]),
                            Connective::Implies => Formula::implies(fp, fq),
                        };
                        out.push(Body {
                            formula: Formula::not(f.clone()),
                            tables: negate(&t),
                            guard: None,
                        });
                        let guard = (op == Connective::Implies).then(|| p.tables.clone());
                        out.push(Body {
                            formula: f,
                            tables: t,
                            guard,
                        });
                    }
                }
            }
        }
    }
    out
}

fn negate(t: &[Vec<bool>]) -> Vec<Vec<bool>> {
    t.iter().map(|m| m.iter().map(|b| !b).collect()).collect()
}

/// Object assignment number `idx` of `k` variables over `n` objects, `x0`
/// most significant.
pub(crate) fn decode_env(idx: usize, n: usize, k: usize) -> Vec<u32> {
    let mut env = vec![0u32; k];
    let mut r = idx;
    for v in (0..k).rev() {
        env[v] = (r % n) as u32;
        r /= n;
    }
    env
}

/// Truth of the closed sentence given the body's table on one model.
pub(crate) fn quantify(table: &[bool], n: usize, k: usize, mask: usize) -> bool {
    if n == 0 {
        return mask & 1 == 1;
    }
    let mut vals = table.to_vec();
    for v in (0..k).rev() {
        let forall = mask >> v & 1 == 1;
        vals = vals
            .chunks(n)
            .map(|c| if forall { c.iter().all(|&b| b) } else { c.iter().any(|&b| b) })
            .collect();
    }
    vals[0]
}
