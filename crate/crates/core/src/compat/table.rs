use crate::automata::{AutomataError, ContextNfa, Location, MealyMachine, State, Word};

/// The relations `∼_a` for every context state `a`, with a shortest,
/// lexicographically least witness for every incompatible pair.
#[derive(Debug, Clone)]
pub struct CompatTable {
    num_mstates: usize,
    num_astates: usize,
    /// Length of the shortest witness of `s ≁_a t`, or 0 when compatible.
    split: Vec<u32>,
    /// Witness words, stored once per unordered pair.
    witnesses: Vec<Option<Word>>,
    /// Class id of `s` under `∼_a`, numbered by first occurrence.
    classes: Vec<usize>,
    rounds: usize,
}

impl CompatTable {
    #[inline]
    fn idx(&self, s: State, t: State, a: State) -> usize {
        (a * self.num_mstates + s) * self.num_mstates + t
    }

    pub fn num_mstates(&self) -> usize {
        self.num_mstates
    }

    pub fn num_astates(&self) -> usize {
        self.num_astates
    }

    pub fn compatible(&self, s: State, t: State, a: State) -> bool {
        self.split[self.idx(s, t, a)] == 0
    }

    pub fn incompatible(&self, s: State, t: State, a: State) -> bool {
        !self.compatible(s, t, a)
    }

    /// Length of the shortest word witnessing `s ≁_a t`, if any.
    pub fn split_round(&self, s: State, t: State, a: State) -> Option<usize> {
        match self.split[self.idx(s, t, a)] {
            0 => None,
            r => Some(r as usize),
        }
    }

    /// The stored shortest witness of `s ≁_a t`.
    pub fn witness(&self, s: State, t: State, a: State) -> Option<&Word> {
        let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
        self.witnesses[self.idx(lo, hi, a)].as_ref()
    }

    /// Shortest witness of `s ≁_a t`, or ε when the pair is compatible.
    pub fn distinguishing_sequence(&self, s: State, t: State, a: State) -> Word {
        self.witness(s, t, a).cloned().unwrap_or_default()
    }

    /// Class of `s` under `∼_a`.
    pub fn class_of(&self, s: State, a: State) -> usize {
        self.classes[a * self.num_mstates + s]
    }

    /// Number of refinement rounds until the relations stabilised.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Class ids of `∼_a^j`, the relation induced by witnesses of length at most `j`.
    pub fn partition_at_round(&self, a: State, j: usize) -> Vec<usize> {
        let n = self.num_mstates;
        let mut classes = vec![usize::MAX; n];
        let mut next_class = 0;
        for s in 0..n {
            if classes[s] != usize::MAX {
                continue;
            }
            for t in s..n {
                let r = self.split[self.idx(s, t, a)] as usize;
                if classes[t] == usize::MAX && (r == 0 || r > j) {
                    classes[t] = next_class;
                }
            }
            next_class += 1;
        }
        classes
    }

    /// `(s, a)` and `(t, a)` are equivalent locations.
    pub fn equivalent(&self, p: Location, q: Location) -> bool {
        p.astate == q.astate && self.compatible(p.mstate, q.mstate, p.astate)
    }
}

/// Refines `∼_a^j` until it stabilises.
///
/// Round 1 splits `s, t` at `a` when some input enabled at `a` produces
/// different outputs. Round `j + 1` splits them when some input `i` and some
/// `b ∈ Δ(a, i)` has `δ(s, i) ≁_b^j δ(t, i)`. At most `|S_M||S_A|` rounds
/// change anything.
pub fn compute_compat(m: &MealyMachine, a: &ContextNfa) -> Result<CompatTable, AutomataError> {
    if a.num_symbols() != m.num_inputs() {
        return Err(AutomataError::AlphabetMismatch { expected: m.num_inputs(), found: a.num_symbols() });
    }
    let n = m.num_states();
    let na = a.num_states();
    let ni = m.num_inputs();
    let mut table = CompatTable {
        num_mstates: n,
        num_astates: na,
        split: vec![0; n * n * na],
        witnesses: vec![None; n * n * na],
        classes: vec![0; n * na],
        rounds: 0,
    };

    let mut round = 1u32;
    loop {
        let mut newly = Vec::new();
        for q in 0..na {
            for s in 0..n {
                for t in (s + 1)..n {
                    if table.split[table.idx(s, t, q)] != 0 {
                        continue;
                    }
                    let splits = (0..ni).any(|i| {
                        if !a.enabled(q, i) {
                            return false;
                        }
                        if round == 1 {
                            return m.output(s, i) != m.output(t, i);
                        }
                        let (s2, t2) = (m.next(s, i), m.next(t, i));
                        a.successors(q, i).iter().any(|&b| {
                            let r = table.split[table.idx(s2, t2, b)];
                            r != 0 && r < round
                        })
                    });
                    if splits {
                        newly.push((s, t, q));
                    }
                }
            }
        }
        if newly.is_empty() {
            break;
        }
        for (s, t, q) in newly {
            let (i1, i2) = (table.idx(s, t, q), table.idx(t, s, q));
            table.split[i1] = round;
            table.split[i2] = round;
        }
        table.rounds = round as usize;
        round += 1;
    }

    // Witnesses in round order, so every successor witness already exists.
    let mut order: Vec<(u32, State, State, State)> = Vec::new();
    for q in 0..na {
        for s in 0..n {
            for t in (s + 1)..n {
                let r = table.split[table.idx(s, t, q)];
                if r != 0 {
                    order.push((r, s, t, q));
                }
            }
        }
    }
    order.sort_unstable();
    for (r, s, t, q) in order {
        let word = (0..ni)
            .filter(|&i| a.enabled(q, i))
            .find_map(|i| {
                if r == 1 {
                    return (m.output(s, i) != m.output(t, i)).then(|| Word::from(vec![i]));
                }
                let (s2, t2) = (m.next(s, i), m.next(t, i));
                a.successors(q, i)
                    .iter()
                    .filter(|&&b| table.split[table.idx(s2, t2, b)] == r - 1)
                    .filter_map(|&b| table.witness(s2, t2, b))
                    .min()
                    .map(|rest| {
                        let mut w = Word::from(vec![i]);
                        for &x in rest.iter() {
                            w.push(x);
                        }
                        w
                    })
            })
            .expect("every split pair has a witness of its round length");
        let idx = table.idx(s, t, q);
        table.witnesses[idx] = Some(word);
    }

    for q in 0..na {
        let classes = table.partition_at_round(q, usize::MAX);
        table.classes[q * n..(q + 1) * n].copy_from_slice(&classes);
    }
    Ok(table)
}

/// Per-location word sets `W_(s,a) ⊆ L_A(a)` such that any two incompatible
/// locations `(s, a)`, `(t, a)` share a witness.
#[derive(Debug, Clone)]
pub struct IdentifierFamily {
    num_mstates: usize,
    words: Vec<Vec<Word>>,
}

impl IdentifierFamily {
    pub fn get(&self, loc: Location) -> &[Word] {
        &self.words[loc.astate * self.num_mstates + loc.mstate]
    }
}

/// `W_(s,a) = { witness(s, t, a) : s ≁_a t }`. Using the same stored witness
/// for `(s, t)` and `(t, s)` makes the family harmonized.
pub fn harmonized_identifiers(m: &MealyMachine, a: &ContextNfa, table: &CompatTable) -> IdentifierFamily {
    let n = m.num_states();
    let mut words = Vec::with_capacity(n * a.num_states());
    for q in 0..a.num_states() {
        for s in 0..n {
            let mut w: Vec<Word> = (0..n).filter_map(|t| table.witness(s, t, q).cloned()).collect();
            w.sort();
            w.dedup();
            words.push(w);
        }
    }
    IdentifierFamily { num_mstates: n, words }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_state() -> MealyMachine {
        // A counter mod 3 on input 0 that reports "state == 2" on input 1.
        MealyMachine::from_fn(3, 2, 2, 0, |s, i| if i == 0 { ((s + 1) % 3, 0) } else { (s, (s == 2) as usize) })
            .unwrap()
    }

    #[test]
    fn universal_context_separates_reduced_machine() {
        let m = three_state();
        assert!(m.is_reduced());
        let table = compute_compat(&m, &ContextNfa::universal(2)).unwrap();
        for s in 0..3 {
            for t in 0..3 {
                assert_eq!(table.compatible(s, t, 0), s == t);
            }
        }
        // 2 is told apart by input 1 directly; 0 and 1 need one step first.
        assert_eq!(table.witness(0, 2, 0).unwrap().as_slice(), &[1]);
        assert_eq!(table.witness(1, 0, 0).unwrap().as_slice(), &[0, 1]);
    }

    #[test]
    fn blocked_context_makes_everything_compatible() {
        let m = three_state();
        let a = ContextNfa::new(1, 2, 0, []).unwrap();
        let table = compute_compat(&m, &a).unwrap();
        assert!((0..3).all(|s| (0..3).all(|t| table.compatible(s, t, 0))));
        assert_eq!(table.distinguishing_sequence(0, 2, 0), Word::empty());
        assert_eq!(table.rounds(), 0);
    }

    #[test]
    fn reflexive_pairs_return_empty_sentinel() {
        let m = three_state();
        let table = compute_compat(&m, &ContextNfa::universal(2)).unwrap();
        assert_eq!(table.distinguishing_sequence(1, 1, 0), Word::empty());
    }

    #[test]
    fn context_restricting_to_counting_input() {
        // Only input 0 is ever available: all outputs are 0, so nothing splits.
        let m = three_state();
        let a = ContextNfa::new(1, 2, 0, [(0, 0, 0)]).unwrap();
        let table = compute_compat(&m, &a).unwrap();
        assert!(table.compatible(0, 2, 0));
        // Context 0 -0-> 1, 1 -1-> 1: one 0 then only 1s.
        let a = ContextNfa::new(2, 2, 0, [(0, 0, 1), (1, 1, 1)]).unwrap();
        let table = compute_compat(&m, &a).unwrap();
        assert!(table.incompatible(1, 0, 0)); // 0·1 tells 1 (->2) from 0 (->1)
        assert!(table.compatible(0, 2, 0)); // after 0: 1 vs 0, neither is 2
        assert!(table.compatible(0, 1, 1)); // only 1s: outputs (s == 2)
        assert!(table.incompatible(0, 2, 1));
    }

    #[test]
    fn harmonized_identifiers_share_witnesses() {
        let m = three_state();
        let a = ContextNfa::universal(2);
        let table = compute_compat(&m, &a).unwrap();
        let ids = harmonized_identifiers(&m, &a, &table);
        for s in 0..3 {
            for t in 0..3 {
                if s != t {
                    let ws = ids.get(Location::new(s, 0));
                    let wt = ids.get(Location::new(t, 0));
                    assert!(ws.iter().any(|w| wt.contains(w) && m.outputs_from(s, w) != m.outputs_from(t, w)));
                }
            }
        }
    }

    #[test]
    fn mismatched_alphabets_are_rejected() {
        let m = three_state();
        assert!(compute_compat(&m, &ContextNfa::universal(3)).is_err());
    }
}
