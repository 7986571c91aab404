//! Enumerative backend: bottom-up enumeration of quantifier-free bodies with
//! observational-equivalence pruning.
//!
//! For a prefix length `k`, a body's table holds its truth value under every
//! assignment of `x0..x{k-1}` in every puzzle model, concatenated model by
//! model with `x0` most significant. Bodies with equal tables form a class;
//! two members of a class behave identically under any prefix and inside
//! any larger body, so only a few cheapest members of each class are kept:
//!
//! * `best`, the cheapest member, used under `and` and `implies`;
//! * `or_child`, cheapest once flattening into a parent `or` is accounted;
//! * `negatable`, cheapest member that may sit under `not` (no double
//!   negation, no negated label atom when the dialect forbids it);
//! * `top_plain`, cheapest member not rooted in `implies`;
//! * `top_implies[g]`, cheapest `implies`-rooted member per guard signature
//!   `g`, the set of models where the guard is satisfiable, which decides
//!   vacuity.
//!
//! Bodies are produced level by level in `(atoms, connective weight)` order
//! and children always come from earlier levels, so a slot is final once the
//! level that filled it is complete. Costs of composites are sums of child
//! costs, which keeps lexicographic minimality under substitution.

use std::hash::Hasher;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use rayon::ThreadPool;
use rustc_hash::{FxHashMap, FxHashSet, FxHasher};

use super::puzzle::{is_discriminator, Puzzle};
use super::space::{atoms, close, AtomSpec};
use super::{DiscriminatorResult, SynthesisConfig};
use crate::logic::{canonicalize, check_vacuous, cost_of, flatten, Cost, Formula, Model};

const NONE: u8 = u8::MAX;
const BATCH: usize = 1 << 15;

const ATOM: u8 = 0;
const LABEL_ATOM: u8 = 1;
const NOT: u8 = 2;
const AND: u8 = 3;
const OR: u8 = 4;
const IMPLIES: u8 = 5;

/// Outcome of a search over all prefix lengths.
pub(crate) struct Search {
    pub results: Vec<DiscriminatorResult>,
    pub ambiguous: bool,
    pub budget_exhausted: bool,
}

/// Largest connective weight of a body with `a` atoms, for each `a`.
pub(crate) fn weight_bounds(max_atoms: usize) -> Vec<u32> {
    let mut w = vec![0u32; max_atoms + 1];
    for a in 1..=max_atoms {
        w[a] = if a == 1 {
            1
        } else {
            (1..a).map(|a1| w[a1] + w[a - a1] + 1).max().unwrap() + 1
        };
    }
    w
}

pub(crate) fn search(puzzle: &Puzzle, cfg: &SynthesisConfig, pool: &ThreadPool, start: Instant) -> Search {
    let budget = Duration::from_secs_f64(cfg.time_budget_seconds);
    let mut collector = Collector::new(puzzle, cfg, start);
    if puzzle.candidates_indistinguishable() {
        return collector.finish(false);
    }
    for k in 1..=cfg.max_vars {
        let mut engine = Engine::new(puzzle, cfg, k, pool);
        let done = engine.run(&mut collector, start, budget);
        match done {
            Flow::Enough => return collector.finish(false),
            Flow::OutOfTime => return collector.finish(true),
            Flow::Continue => {}
        }
    }
    collector.finish(false)
}

enum Flow {
    Continue,
    Enough,
    OutOfTime,
}

/// Turns raw hits into verified, ranked results.
pub(crate) struct Collector<'a> {
    puzzle: &'a Puzzle,
    cfg: &'a SynthesisConfig,
    start: Instant,
    results: Vec<DiscriminatorResult>,
    seen: FxHashSet<String>,
    first_cost: Option<(Cost, FxHashSet<usize>)>,
}

impl<'a> Collector<'a> {
    pub(crate) fn new(puzzle: &'a Puzzle, cfg: &'a SynthesisConfig, start: Instant) -> Self {
        Collector {
            puzzle,
            cfg,
            start,
            results: Vec::new(),
            seen: FxHashSet::default(),
            first_cost: None,
        }
    }

    /// Adds `(sentence, candidate)` pairs whose costs are all above those of
    /// earlier groups. Returns whether `top_k` results are now known.
    pub(crate) fn add_group(&mut self, group: Vec<(Formula, usize)>) -> bool {
        let mut keyed: Vec<(Cost, String, Formula, usize)> = group
            .into_iter()
            .map(|(f, c)| {
                let f = canonicalize(&f);
                (cost_of(&f), f.to_string(), f, c)
            })
            .collect();
        keyed.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        for (cost, text, formula, cand) in keyed {
            if !self.seen.insert(text) {
                continue;
            }
            // Never trust the search: re-check with the evaluator.
            if is_discriminator(self.puzzle, &formula) != Some(cand) {
                debug_assert!(false, "search reported a non-discriminator {formula}");
                continue;
            }
            let positives: Vec<&Model> = self
                .puzzle
                .train()
                .iter()
                .chain(std::iter::once(&self.puzzle.candidates()[cand]))
                .collect();
            let vacuity_flags: Vec<bool> = positives
                .iter()
                .map(|m| check_vacuous(m, &formula).unwrap_or(false))
                .collect();
            if self.cfg.exclude_vacuous && vacuity_flags.iter().any(|&v| v) {
                debug_assert!(false, "search reported a vacuous formula {formula}");
                continue;
            }
            let first = self.first_cost.get_or_insert_with(|| (cost, FxHashSet::default()));
            if first.0 == cost {
                first.1.insert(cand);
            }
            self.results.push(DiscriminatorResult {
                cost,
                formula,
                chosen_candidate: cand,
                vacuity_flags,
                wall_time: self.start.elapsed(),
            });
        }
        self.results.len() >= self.cfg.top_k
    }

    pub(crate) fn finish(mut self, budget_exhausted: bool) -> Search {
        self.results.truncate(self.cfg.top_k);
        Search {
            results: self.results,
            ambiguous: self.first_cost.is_some_and(|(_, c)| c.len() > 1),
            budget_exhausted,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Slot {
    level: u32,
    n: u32,
    node: u32,
}

struct Class {
    best: Slot,
    or_child: Slot,
    negatable: Option<Slot>,
    top_plain: Option<Slot>,
    /// Bit `m` set when some assignment satisfies the body in model `m`.
    nonempty: u64,
}

#[derive(Clone, Copy)]
struct Node {
    op: u8,
    a: u32,
    b: u32,
}

#[derive(Clone, Copy)]
enum Top {
    Plain,
    Implies(u64),
}

#[derive(Clone, Copy)]
struct Combo {
    op: u8,
    c1: u32,
    c2: u32,
    node1: u32,
    node2: u32,
    n: u32,
    /// Guard signature of an `implies`.
    gsig: u64,
}

struct Probe {
    hash: u64,
    existing: Option<u32>,
    skip: bool,
    nonempty: u64,
}

#[derive(Clone, Copy)]
struct Child {
    class: u32,
    node: u32,
    n: u32,
    nonempty: u64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum SlotKind {
    Best,
    OrChild,
    Negatable,
}

struct Layout {
    /// Per model: first bit and number of objects.
    segments: Vec<(usize, usize)>,
    words: usize,
    last_mask: u64,
}

struct Engine<'a> {
    puzzle: &'a Puzzle,
    cfg: &'a SynthesisConfig,
    pool: &'a ThreadPool,
    k: usize,
    prefixes: usize,
    layout: Layout,
    train_mask: u64,
    empty_mask: u64,
    train_count: usize,
    atoms: Vec<AtomSpec>,
    atom_tables: Vec<u64>,
    arena: Vec<u64>,
    verdicts: Vec<u8>,
    classes: Vec<Class>,
    index: FxHashMap<u64, u32>,
    chain: Vec<u32>,
    nodes: Vec<Node>,
    top_implies: FxHashMap<(u32, u64), Slot>,
    levels: Vec<(usize, u32)>,
    level_of: FxHashMap<(usize, u32), u32>,
    best_at: Vec<Vec<u32>>,
    or_at: Vec<Vec<u32>>,
    neg_at: Vec<Vec<u32>>,
    tops_at: Vec<Vec<(u32, Top)>>,
    out_of_time: bool,
}

impl<'a> Engine<'a> {
    fn new(puzzle: &'a Puzzle, cfg: &'a SynthesisConfig, k: usize, pool: &'a ThreadPool) -> Self {
        let models: Vec<&Model> = puzzle.models().collect();
        let mut segments = Vec::with_capacity(models.len());
        let mut bits = 0usize;
        for m in &models {
            let n = m.object_count();
            segments.push((bits, n));
            bits += n.pow(k as u32);
        }
        let words = bits.div_ceil(64);
        let last_mask = if bits % 64 == 0 { u64::MAX } else { (1u64 << (bits % 64)) - 1 };
        let layout = Layout {
            segments,
            words,
            last_mask,
        };
        let atom_specs = atoms(puzzle.signature(), k);
        let mut atom_tables = vec![0u64; atom_specs.len() * words];
        for (i, atom) in atom_specs.iter().enumerate() {
            let table = &mut atom_tables[i * words..(i + 1) * words];
            for (m, &(off, n)) in models.iter().zip(&layout.segments) {
                let mut env = vec![0u32; k];
                for idx in 0..n.pow(k as u32) {
                    let mut r = idx;
                    for v in (0..k).rev() {
                        env[v] = (r % n) as u32;
                        r /= n;
                    }
                    if atom.holds(m, &env) {
                        let bit = off + idx;
                        table[bit / 64] |= 1 << (bit % 64);
                    }
                }
            }
        }
        let train_count = puzzle.train().len();
        let empty_mask = models
            .iter()
            .enumerate()
            .filter(|(_, m)| m.object_count() == 0)
            .fold(0u64, |acc, (i, _)| acc | 1 << i);

        let wb = weight_bounds(cfg.max_atoms);
        let mut levels = Vec::new();
        let mut level_of = FxHashMap::default();
        for a in 1..=cfg.max_atoms {
            for w in 0..=wb[a] {
                level_of.insert((a, w), levels.len() as u32);
                levels.push((a, w));
            }
        }
        let nl = levels.len();
        Engine {
            puzzle,
            cfg,
            pool,
            k,
            prefixes: 1 << k,
            layout,
            train_mask: (1u64 << train_count) - 1,
            empty_mask,
            train_count,
            atoms: atom_specs,
            atom_tables,
            arena: Vec::new(),
            verdicts: Vec::new(),
            classes: Vec::new(),
            index: FxHashMap::default(),
            chain: Vec::new(),
            nodes: Vec::new(),
            top_implies: FxHashMap::default(),
            levels,
            level_of,
            best_at: vec![Vec::new(); nl],
            or_at: vec![Vec::new(); nl],
            neg_at: vec![Vec::new(); nl],
            tops_at: vec![Vec::new(); nl],
            out_of_time: false,
        }
    }

    fn run(&mut self, collector: &mut Collector, start: Instant, budget: Duration) -> Flow {
        for level in 0..self.levels.len() {
            self.build_level(level as u32, start, budget);
            if self.out_of_time {
                return Flow::OutOfTime;
            }
            if self.report_level(level as u32, collector) {
                return Flow::Enough;
            }
        }
        Flow::Continue
    }

    fn table(&self, class: u32) -> &[u64] {
        let w = self.layout.words;
        &self.arena[class as usize * w..(class as usize + 1) * w]
    }

    fn children(&self, level: Option<u32>, kind: SlotKind) -> Vec<Child> {
        let Some(level) = level else { return Vec::new() };
        let list = match kind {
            SlotKind::Best => &self.best_at[level as usize],
            SlotKind::OrChild => &self.or_at[level as usize],
            SlotKind::Negatable => &self.neg_at[level as usize],
        };
        list.iter()
            .map(|&c| {
                let class = &self.classes[c as usize];
                let slot = match kind {
                    SlotKind::Best => class.best,
                    SlotKind::OrChild => class.or_child,
                    SlotKind::Negatable => class.negatable.expect("registered slot"),
                };
                Child {
                    class: c,
                    node: slot.node,
                    n: slot.n,
                    nonempty: class.nonempty,
                }
            })
            .collect()
    }

    fn level_id(&self, a: usize, w: i64) -> Option<u32> {
        u32::try_from(w).ok().and_then(|w| self.level_of.get(&(a, w)).copied())
    }

    fn build_level(&mut self, level: u32, start: Instant, budget: Duration) {
        let (a, w) = self.levels[level as usize];
        let mut batch: Vec<Combo> = Vec::with_capacity(BATCH);
        macro_rules! push {
            ($combo:expr) => {
                batch.push($combo);
                if batch.len() == BATCH {
                    self.process(&batch, level);
                    batch.clear();
                    if start.elapsed() > budget {
                        self.out_of_time = true;
                        return;
                    }
                }
            };
        }

        if (a, w) == (1, 0) {
            for i in 0..self.atoms.len() {
                let op = if self.atoms[i].is_label_atom() { LABEL_ATOM } else { ATOM };
                push!(Combo {
                    op,
                    c1: i as u32,
                    c2: 0,
                    node1: i as u32,
                    node2: 0,
                    n: 0,
                    gsig: 0,
                });
            }
        }

        for c in self.children(self.level_id(a, w as i64 - 1), SlotKind::Negatable) {
            push!(Combo {
                op: NOT,
                c1: c.class,
                c2: 0,
                node1: c.node,
                node2: 0,
                n: c.n,
                gsig: 0,
            });
        }

        // Commutative operators: each unordered pair of children once.
        for (op, kind, extra) in [(AND, SlotKind::Best, 0i64), (OR, SlotKind::OrChild, 1)] {
            for a1 in 1..=a / 2 {
                let a2 = a - a1;
                for w1 in 0..=w as i64 - extra {
                    let w2 = w as i64 - extra - w1;
                    if a1 == a2 && w1 > w2 {
                        continue;
                    }
                    let (Some(l1), Some(l2)) = (self.level_id(a1, w1), self.level_id(a2, w2)) else {
                        continue;
                    };
                    let left = self.children(Some(l1), kind);
                    let right = self.children(Some(l2), kind);
                    let same = l1 == l2;
                    for (i, p) in left.iter().enumerate() {
                        let from = if same { i } else { 0 };
                        for q in &right[from..] {
                            push!(Combo {
                                op,
                                c1: p.class,
                                c2: q.class,
                                node1: p.node,
                                node2: q.node,
                                n: p.n + q.n + extra as u32,
                                gsig: 0,
                            });
                        }
                    }
                }
            }
        }

        for a1 in 1..a {
            let a2 = a - a1;
            for w1 in 0..w as i64 {
                let w2 = w as i64 - 1 - w1;
                let (Some(l1), Some(l2)) = (self.level_id(a1, w1), self.level_id(a2, w2)) else {
                    continue;
                };
                let left = self.children(Some(l1), SlotKind::Best);
                let right = self.children(Some(l2), SlotKind::Best);
                for p in &left {
                    for q in &right {
                        push!(Combo {
                            op: IMPLIES,
                            c1: p.class,
                            c2: q.class,
                            node1: p.node,
                            node2: q.node,
                            n: p.n + q.n + 1,
                            gsig: p.nonempty,
                        });
                    }
                }
            }
        }

        if !batch.is_empty() {
            self.process(&batch, level);
        }
        if start.elapsed() > budget {
            self.out_of_time = true;
        }
    }

    fn lookup(&self, hash: u64, table: &[u64]) -> Option<u32> {
        let mut c = *self.index.get(&hash)?;
        loop {
            if self.table(c) == table {
                return Some(c);
            }
            c = self.chain[c as usize];
            if c == u32::MAX {
                return None;
            }
        }
    }

    fn negatable_root(&self, op: u8) -> bool {
        op != NOT && !(op == LABEL_ATOM && self.cfg.forbid_negated_label_atoms)
    }

    /// Whether a candidate would fill or improve some slot of `class`.
    fn useful(&self, class: u32, combo: &Combo, level: u32) -> bool {
        let c = &self.classes[class as usize];
        let improves = |s: Option<Slot>, n: u32| match s {
            None => true,
            Some(s) => s.level == level && n < s.n,
        };
        let or_n = combo.n - (combo.op == OR) as u32;
        improves(Some(c.best), combo.n)
            || improves(Some(c.or_child), or_n)
            || (self.negatable_root(combo.op) && improves(c.negatable, combo.n))
            || (combo.op != IMPLIES && improves(c.top_plain, combo.n))
            || (combo.op == IMPLIES
                && improves(self.top_implies.get(&(class, combo.gsig)).copied(), combo.n))
    }

    fn compute(&self, combo: &Combo, out: &mut [u64]) {
        let words = self.layout.words;
        match combo.op {
            ATOM | LABEL_ATOM => {
                let i = combo.c1 as usize;
                out.copy_from_slice(&self.atom_tables[i * words..(i + 1) * words]);
            }
            NOT => {
                for (o, x) in out.iter_mut().zip(self.table(combo.c1)) {
                    *o = !x;
                }
            }
            _ => {
                let (t1, t2) = (self.table(combo.c1), self.table(combo.c2));
                for ((o, x), y) in out.iter_mut().zip(t1).zip(t2) {
                    *o = match combo.op {
                        AND => x & y,
                        OR => x | y,
                        _ => !x | y,
                    };
                }
            }
        }
        if let Some(last) = out.last_mut() {
            *last &= self.layout.last_mask;
        }
    }

    fn process(&mut self, batch: &[Combo], level: u32) {
        let words = self.layout.words;
        let np = self.prefixes;
        let mut tables = vec![0u64; batch.len() * words.max(1)];
        let mut verdicts = vec![NONE; batch.len() * np];
        let probes: Vec<Probe> = {
            let this = &*self;
            this.pool.install(|| {
                tables
                    .par_chunks_mut(words.max(1))
                    .zip(verdicts.par_chunks_mut(np))
                    .zip(batch.par_iter())
                    .map(|((table, verdict), combo)| {
                        let table = &mut table[..words];
                        this.compute(combo, table);
                        let mut h = FxHasher::default();
                        for &x in table.iter() {
                            h.write_u64(x);
                        }
                        let hash = h.finish();
                        let existing = this.lookup(hash, table);
                        let skip = existing.is_some_and(|c| !this.useful(c, combo, level));
                        let mut nonempty = 0;
                        if existing.is_none() {
                            nonempty = this.nonempty(table);
                            this.verdict(table, verdict);
                        }
                        Probe {
                            hash,
                            existing,
                            skip,
                            nonempty,
                        }
                    })
                    .collect()
            })
        };
        for (i, (combo, probe)) in batch.iter().zip(&probes).enumerate() {
            if probe.skip {
                continue;
            }
            let table = &tables[i * words.max(1)..i * words.max(1) + words];
            match probe.existing.or_else(|| self.lookup(probe.hash, table)) {
                Some(class) => self.improve(class, combo, level),
                None => {
                    let v = &verdicts[i * np..(i + 1) * np];
                    self.create(combo, level, probe.hash, probe.nonempty, table, v);
                }
            }
        }
    }

    fn new_node(&mut self, combo: &Combo) -> u32 {
        let (a, b) = match combo.op {
            ATOM | LABEL_ATOM => (combo.c1, 0),
            _ => (combo.node1, combo.node2),
        };
        self.nodes.push(Node { op: combo.op, a, b });
        (self.nodes.len() - 1) as u32
    }

    fn create(&mut self, combo: &Combo, level: u32, hash: u64, nonempty: u64, table: &[u64], verdict: &[u8]) {
        let id = self.classes.len() as u32;
        let node = self.new_node(combo);
        let slot = |n| Slot { level, n, node };
        let negatable = self.negatable_root(combo.op).then(|| slot(combo.n));
        let top_plain = (combo.op != IMPLIES).then(|| slot(combo.n));
        self.classes.push(Class {
            best: slot(combo.n),
            or_child: slot(combo.n - (combo.op == OR) as u32),
            negatable,
            top_plain,
            nonempty,
        });
        self.arena.extend_from_slice(table);
        self.verdicts.extend_from_slice(verdict);
        let head = self.index.insert(hash, id);
        self.chain.push(head.unwrap_or(u32::MAX));
        let l = level as usize;
        self.best_at[l].push(id);
        self.or_at[l].push(id);
        if negatable.is_some() {
            self.neg_at[l].push(id);
        }
        if top_plain.is_some() {
            self.tops_at[l].push((id, Top::Plain));
        } else {
            self.top_implies.insert((id, combo.gsig), slot(combo.n));
            self.tops_at[l].push((id, Top::Implies(combo.gsig)));
        }
    }

    fn improve(&mut self, class: u32, combo: &Combo, level: u32) {
        if !self.useful(class, combo, level) {
            return;
        }
        let node = self.new_node(combo);
        let fresh = Slot { level, n: combo.n, node };
        let l = level as usize;
        // Returns Some(newly set) when the slot changes.
        fn offer(slot: &mut Option<Slot>, fresh: Slot) -> Option<bool> {
            match slot {
                None => {
                    *slot = Some(fresh);
                    Some(true)
                }
                Some(s) if s.level == fresh.level && fresh.n < s.n => {
                    *s = fresh;
                    Some(false)
                }
                _ => None,
            }
        }
        let negatable_root = self.negatable_root(combo.op);
        let c = &mut self.classes[class as usize];
        let mut best = Some(c.best);
        offer(&mut best, fresh);
        c.best = best.unwrap();
        let mut or_child = Some(c.or_child);
        offer(
            &mut or_child,
            Slot {
                n: combo.n - (combo.op == OR) as u32,
                ..fresh
            },
        );
        c.or_child = or_child.unwrap();
        if negatable_root && offer(&mut c.negatable, fresh) == Some(true) {
            self.neg_at[l].push(class);
        }
        if combo.op != IMPLIES {
            if offer(&mut c.top_plain, fresh) == Some(true) {
                self.tops_at[l].push((class, Top::Plain));
            }
        } else {
            let mut s = self.top_implies.get(&(class, combo.gsig)).copied();
            if let Some(newly) = offer(&mut s, fresh) {
                self.top_implies.insert((class, combo.gsig), s.unwrap());
                if newly {
                    self.tops_at[l].push((class, Top::Implies(combo.gsig)));
                }
            }
        }
    }

    fn nonempty(&self, table: &[u64]) -> u64 {
        let mut mask = 0;
        for (m, &(off, n)) in self.layout.segments.iter().enumerate() {
            let len = n.pow(self.k as u32);
            if any_bit(table, off, len) {
                mask |= 1 << m;
            }
        }
        mask
    }

    /// For every prefix, the candidate the sentence singles out, or `NONE`.
    fn verdict(&self, table: &[u64], out: &mut [u8]) {
        let all = (1u64 << self.prefixes) - 1;
        let mut train = all;
        for m in 0..self.train_count {
            train &= self.prefix_truths(table, m);
            if train == 0 {
                return;
            }
        }
        let mut one = 0u64;
        let mut many = 0u64;
        for j in 0..self.puzzle.candidates().len() {
            let t = self.prefix_truths(table, self.train_count + j) & train;
            many |= one & t;
            one |= t;
        }
        let unique = one & !many;
        if unique == 0 {
            return;
        }
        for j in 0..self.puzzle.candidates().len() {
            let t = self.prefix_truths(table, self.train_count + j) & unique;
            for (p, slot) in out.iter_mut().enumerate() {
                if t >> p & 1 == 1 {
                    *slot = j as u8;
                }
            }
        }
    }

    /// Bit `p` set when the table's model `m` satisfies the sentence under
    /// prefix mask `p`.
    fn prefix_truths(&self, table: &[u64], m: usize) -> u64 {
        let (off, n) = self.layout.segments[m];
        let k = self.k;
        if n == 0 {
            return (0..self.prefixes).filter(|p| p & 1 == 1).fold(0, |acc, p| acc | 1 << p);
        }
        let len = n.pow(k as u32);
        let vals: Vec<bool> = (0..len).map(|i| bit(table, off + i)).collect();
        let mut layer: Vec<(Vec<bool>, usize)> = vec![(vals, 0)];
        for v in (0..k).rev() {
            let mut next = Vec::with_capacity(layer.len() * 2);
            for (vals, mask) in layer {
                let any: Vec<bool> = vals.chunks(n).map(|c| c.iter().any(|&b| b)).collect();
                let every: Vec<bool> = vals.chunks(n).map(|c| c.iter().all(|&b| b)).collect();
                next.push((any, mask));
                next.push((every, mask | 1 << v));
            }
            layer = next;
        }
        layer
            .into_iter()
            .filter(|(v, _)| v[0])
            .fold(0, |acc, (_, p)| acc | 1 << p)
    }

    /// Collects the sentences whose slots were settled at `level` and hands
    /// them to the collector in cost order.
    fn report_level(&mut self, level: u32, collector: &mut Collector) -> bool {
        let mut hits: Vec<(u32, u32, u32, usize, u8)> = Vec::new(); // (u, n, node, prefix, cand)
        for &(class, top) in &self.tops_at[level as usize] {
            let slot = match top {
                Top::Plain => self.classes[class as usize].top_plain,
                Top::Implies(g) => self.top_implies.get(&(class, g)).copied(),
            }
            .expect("registered top slot");
            for p in 0..self.prefixes {
                let cand = self.verdicts[class as usize * self.prefixes + p];
                if cand == NONE {
                    continue;
                }
                if self.cfg.exclude_vacuous && p & 1 == 1 {
                    let positive = self.train_mask | 1 << (self.train_count + cand as usize);
                    if self.empty_mask & positive != 0 {
                        continue;
                    }
                    if let Top::Implies(g) = top {
                        if positive & !g != 0 {
                            continue;
                        }
                    }
                }
                hits.push((p.count_ones(), slot.n, slot.node, p, cand));
            }
        }
        hits.sort_by_key(|h| (h.0, h.1));
        for group in hits.chunk_by(|x, y| (x.0, x.1) == (y.0, y.1)) {
            let sentences = group
                .iter()
                .map(|&(_, _, node, p, cand)| (close(flatten(&self.build(node)), self.k, p), cand as usize))
                .collect();
            if collector.add_group(sentences) {
                return true;
            }
        }
        false
    }

    fn build(&self, node: u32) -> Formula {
        let n = self.nodes[node as usize];
        match n.op {
            ATOM | LABEL_ATOM => self.atoms[n.a as usize].formula(),
            NOT => Formula::not(self.build(n.a)),
            AND => Formula::and(vec![self.build(n.a), self.build(n.b)]),
            OR => Formula::or(vec![self.build(n.a), self.build(n.b)]),
            _ => Formula::implies(self.build(n.a), self.build(n.b)),
        }
    }
}

fn bit(table: &[u64], i: usize) -> bool {
    table[i / 64] >> (i % 64) & 1 == 1
}

fn any_bit(table: &[u64], start: usize, len: usize) -> bool {
    let mut i = start;
    let end = start + len;
    while i < end {
        let word = i / 64;
        let lo = i % 64;
        let hi = (end - word * 64).min(64);
        let mask = if hi == 64 { u64::MAX << lo } else { ((1u64 << hi) - 1) & (u64::MAX << lo) };
        if table[word] & mask != 0 {
            return true;
        }
        i = word * 64 + hi;
    }
    false
}
