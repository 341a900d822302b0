//! Backtracking homomorphism search over interned ids.
//!
//! Variables carry bitset domains over the instance's constants. Each query
//! atom is a table constraint; after every branching decision the affected
//! atoms are revised to generalized arc consistency, using per-position
//! indexes to enumerate only the tuples that agree with a bound argument.

use crate::budget::{BudgetExceeded, Meter};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Slot {
    Var(u32),
    Const(u32),
}

#[derive(Clone, Debug)]
pub(crate) struct CompiledAtom {
    pub pred: u32,
    pub slots: Vec<Slot>,
    /// For each position holding a variable seen earlier in the same atom, that earlier position.
    repeat_of: Vec<Option<usize>>,
    /// Distinct variables of the atom, with the position of each first occurrence.
    vars: Vec<u32>,
    var_pos: Vec<usize>,
}

impl CompiledAtom {
    pub(crate) fn new(pred: u32, slots: Vec<Slot>) -> Self {
        let mut repeat_of = vec![None; slots.len()];
        let mut vars = Vec::new();
        let mut var_pos = Vec::new();
        for (i, s) in slots.iter().enumerate() {
            if let Slot::Var(v) = s {
                match slots[..i].iter().position(|t| t == s) {
                    Some(j) => repeat_of[i] = Some(j),
                    None => {
                        vars.push(*v);
                        var_pos.push(i);
                    }
                }
            }
        }
        CompiledAtom {
            pred,
            slots,
            repeat_of,
            vars,
            var_pos,
        }
    }

    pub(crate) fn vars(&self) -> &[u32] {
        &self.vars
    }
}

/// A query over interned predicates and constants. Variables are `0..n_vars`.
#[derive(Clone, Debug)]
pub(crate) struct CompiledQuery {
    pub n_vars: usize,
    pub atoms: Vec<CompiledAtom>,
    var_atoms: Vec<Vec<usize>>,
}

impl CompiledQuery {
    pub(crate) fn new(n_vars: usize, atoms: Vec<CompiledAtom>) -> Self {
        let mut var_atoms = vec![Vec::new(); n_vars];
        for (i, a) in atoms.iter().enumerate() {
            for &v in &a.vars {
                var_atoms[v as usize].push(i);
            }
        }
        CompiledQuery {
            n_vars,
            atoms,
            var_atoms,
        }
    }

    pub(crate) fn var_atoms(&self, var: u32) -> &[usize] {
        &self.var_atoms[var as usize]
    }
}

#[derive(Clone, Debug, Default)]
struct PositionIndex {
    /// Rows with value `c` at this position are `rows[offsets[c]..offsets[c + 1]]`.
    offsets: Vec<u32>,
    rows: Vec<u32>,
}

#[derive(Clone, Debug, Default)]
struct Relation {
    arity: usize,
    data: Vec<u32>,
    index: Vec<PositionIndex>,
}

impl Relation {
    fn len(&self) -> usize {
        self.data.len() / self.arity
    }

    fn row(&self, r: usize) -> &[u32] {
        &self.data[r * self.arity..(r + 1) * self.arity]
    }
}

/// An instance over interned ids, indexed by (predicate, position, value).
#[derive(Clone, Debug)]
pub(crate) struct IndexedInstance {
    n_consts: usize,
    relations: Vec<Option<Relation>>,
    nullary: Vec<bool>,
}

impl IndexedInstance {
    /// `tuples` yields (predicate, args). Duplicate rows are harmless.
    pub(crate) fn build<'a>(
        n_preds: usize,
        n_consts: usize,
        tuples: impl IntoIterator<Item = (u32, &'a [u32])>,
    ) -> Self {
        let mut relations: Vec<Option<Relation>> = vec![None; n_preds];
        let mut nullary = vec![false; n_preds];
        for (pred, args) in tuples {
            let p = pred as usize;
            if args.is_empty() {
                nullary[p] = true;
            }
            let rel = relations[p].get_or_insert_with(|| Relation {
                arity: args.len(),
                ..Default::default()
            });
            debug_assert_eq!(rel.arity, args.len());
            rel.data.extend_from_slice(args);
        }
        for rel in relations.iter_mut().flatten() {
            if rel.arity == 0 {
                continue;
            }
            let n_rows = rel.data.len() / rel.arity;
            rel.index = (0..rel.arity)
                .map(|pos| {
                    let mut offsets = vec![0u32; n_consts + 1];
                    for r in 0..n_rows {
                        offsets[rel.data[r * rel.arity + pos] as usize + 1] += 1;
                    }
                    for c in 0..n_consts {
                        offsets[c + 1] += offsets[c];
                    }
                    let mut fill = offsets.clone();
                    let mut rows = vec![0u32; n_rows];
                    for r in 0..n_rows {
                        let c = rel.data[r * rel.arity + pos] as usize;
                        rows[fill[c] as usize] = r as u32;
                        fill[c] += 1;
                    }
                    PositionIndex { offsets, rows }
                })
                .collect();
        }
        IndexedInstance {
            n_consts,
            relations,
            nullary,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SearchMode {
    /// Static first-occurrence variable order, ascending values: the first
    /// solution found is the lexicographically least one.
    #[default]
    LexLeast,
    /// Most-constrained variable first. Deterministic, but the witness is not
    /// necessarily lexicographically least.
    Fast,
}

struct Search<'a> {
    query: &'a CompiledQuery,
    inst: &'a IndexedInstance,
    meter: &'a Meter,
    mode: SearchMode,
    words: usize,
    // scratch
    queue: Vec<usize>,
    queued: Vec<bool>,
    support: Vec<u64>,
}

#[inline]
fn bit(words: &[u64], c: u32) -> bool {
    words[(c / 64) as usize] >> (c % 64) & 1 == 1
}

impl<'a> Search<'a> {
    fn dom<'d>(&self, domains: &'d [u64], v: u32) -> &'d [u64] {
        let w = self.words;
        &domains[v as usize * w..(v as usize + 1) * w]
    }

    fn single(&self, domains: &[u64], v: u32) -> Option<u32> {
        let d = self.dom(domains, v);
        let mut found = None;
        for (i, &w) in d.iter().enumerate() {
            if w != 0 {
                if found.is_some() || w.count_ones() != 1 {
                    return None;
                }
                found = Some(i as u32 * 64 + w.trailing_zeros());
            }
        }
        found
    }

    fn count(&self, domains: &[u64], v: u32) -> u32 {
        self.dom(domains, v).iter().map(|w| w.count_ones()).sum()
    }

    /// Restricts every variable of the atom to values supported by some tuple,
    /// pushing shrunk variables onto `changed`. False when no tuple supports the atom.
    fn revise(&mut self, domains: &mut [u64], atom_idx: usize, changed: &mut Vec<u32>) -> bool {
        let atom = &self.query.atoms[atom_idx];
        let arity = atom.slots.len();
        if arity == 0 {
            return self.inst.nullary.get(atom.pred as usize).copied().unwrap_or(false);
        }
        let Some(Some(rel)) = self.inst.relations.get(atom.pred as usize) else {
            return false;
        };
        if rel.arity != arity {
            return false;
        }

        // Pick the most selective bound position for the index.
        let mut best: Option<(usize, u32, usize)> = None;
        for (pos, slot) in atom.slots.iter().enumerate() {
            let value = match *slot {
                Slot::Const(c) => Some(c),
                Slot::Var(v) => self.single(domains, v),
            };
            if let Some(c) = value {
                if c as usize >= self.inst.n_consts {
                    return false;
                }
                let idx = &rel.index[pos];
                let n = (idx.offsets[c as usize + 1] - idx.offsets[c as usize]) as usize;
                if best.map_or(true, |(_, _, m)| n < m) {
                    best = Some((pos, c, n));
                }
            }
        }

        let w = self.words;
        let nv = atom.vars.len();
        self.support.clear();
        self.support.resize(nv * w, 0);
        let mut any = false;

        let mut check_row = |row: &[u32], support: &mut [u64]| {
            for (pos, slot) in atom.slots.iter().enumerate() {
                let val = row[pos];
                let ok = match *slot {
                    Slot::Const(c) => val == c,
                    Slot::Var(v) => match atom.repeat_of[pos] {
                        Some(j) => row[j] == val,
                        None => bit(&domains[v as usize * w..(v as usize + 1) * w], val),
                    },
                };
                if !ok {
                    return;
                }
            }
            any = true;
            for (k, &pos) in atom.var_pos.iter().enumerate() {
                let val = row[pos];
                support[k * w + (val / 64) as usize] |= 1u64 << (val % 64);
            }
        };

        let mut support = std::mem::take(&mut self.support);
        match best {
            Some((pos, c, _)) => {
                let idx = &rel.index[pos];
                let rows = &idx.rows[idx.offsets[c as usize] as usize..idx.offsets[c as usize + 1] as usize];
                for &r in rows {
                    check_row(rel.row(r as usize), &mut support);
                }
            }
            None => {
                for r in 0..rel.len() {
                    check_row(rel.row(r), &mut support);
                }
            }
        }
        if !any {
            self.support = support;
            return false;
        }
        for (k, &v) in atom.vars.iter().enumerate() {
            let base = v as usize * w;
            let mut shrank = false;
            for i in 0..w {
                let old = domains[base + i];
                let new = old & support[k * w + i];
                if new != old {
                    domains[base + i] = new;
                    shrank = true;
                }
            }
            if shrank {
                changed.push(v);
            }
        }
        self.support = support;
        true
    }

    /// Revises the queued atoms until a fixpoint or a wipe-out.
    fn propagate(&mut self, domains: &mut [u64]) -> bool {
        let mut changed = Vec::new();
        while let Some(a) = self.queue.pop() {
            self.queued[a] = false;
            changed.clear();
            if !self.revise(domains, a, &mut changed) {
                for q in self.queue.drain(..) {
                    self.queued[q] = false;
                }
                return false;
            }
            for &v in &changed {
                for &b in self.query.var_atoms(v) {
                    if b != a && !self.queued[b] {
                        self.queued[b] = true;
                        self.queue.push(b);
                    }
                }
            }
        }
        true
    }

    fn enqueue_var(&mut self, v: u32) {
        for &b in self.query.var_atoms(v) {
            if !self.queued[b] {
                self.queued[b] = true;
                self.queue.push(b);
            }
        }
    }

    fn choose(&self, domains: &[u64], chosen: &[bool]) -> Option<u32> {
        let open = (0..self.query.n_vars as u32).filter(|&v| !chosen[v as usize]);
        match self.mode {
            SearchMode::LexLeast => open.min(),
            SearchMode::Fast => open.min_by_key(|&v| (self.count(domains, v), v)),
        }
    }

    fn dfs(&mut self, domains: &mut Vec<u64>, chosen: &mut Vec<bool>) -> Result<bool, BudgetExceeded> {
        let Some(v) = self.choose(domains, chosen) else {
            return Ok(true);
        };
        let w = self.words;
        let values: Vec<u32> = {
            let d = self.dom(domains, v);
            (0..d.len() * 64)
                .map(|c| c as u32)
                .filter(|&c| bit(d, c))
                .collect()
        };
        chosen[v as usize] = true;
        for c in values {
            self.meter.tick()?;
            let saved = domains.clone();
            let base = v as usize * w;
            domains[base..base + w].fill(0);
            domains[base + (c / 64) as usize] = 1u64 << (c % 64);
            self.enqueue_var(v);
            if self.propagate(domains) && self.dfs(domains, chosen)? {
                return Ok(true);
            }
            *domains = saved;
        }
        chosen[v as usize] = false;
        Ok(false)
    }
}

/// Finds a homomorphism extending `pin` (pairs of variable and constant id).
/// Returns one constant id per variable.
pub(crate) fn search(
    query: &CompiledQuery,
    inst: &IndexedInstance,
    pin: &[(u32, u32)],
    mode: SearchMode,
    meter: &Meter,
) -> Result<Option<Vec<u32>>, BudgetExceeded> {
    let n_consts = inst.n_consts;
    let words = n_consts.div_ceil(64).max(1);
    let mut domains = vec![0u64; query.n_vars * words];
    for v in 0..query.n_vars {
        for c in 0..n_consts {
            domains[v * words + c / 64] |= 1u64 << (c % 64);
        }
    }
    for &(v, c) in pin {
        if c as usize >= n_consts || !bit(&domains[v as usize * words..], c) {
            return Ok(None);
        }
        let base = v as usize * words;
        domains[base..base + words].fill(0);
        domains[base + (c / 64) as usize] = 1u64 << (c % 64);
    }
    let mut s = Search {
        query,
        inst,
        meter,
        mode,
        words,
        queue: (0..query.atoms.len()).rev().collect(),
        queued: vec![true; query.atoms.len()],
        support: Vec::new(),
    };
    if !s.propagate(&mut domains) {
        return Ok(None);
    }
    let mut chosen = vec![false; query.n_vars];
    if s.dfs(&mut domains, &mut chosen)? {
        Ok(Some(
            (0..query.n_vars as u32)
                .map(|v| s.single(&domains, v).expect("solved domains are singletons"))
                .collect(),
        ))
    } else {
        Ok(None)
    }
}
