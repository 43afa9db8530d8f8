use std::collections::{HashMap, VecDeque};

use super::{AutomataError, ContextNfa, Location, MealyMachine, Symbol, Word};

/// Drops the input labels of `head`: every transition `s -i/o-> t` becomes
/// `s -o-> t`. The result accepts exactly the output language of `head`.
pub fn image_automaton(head: &MealyMachine) -> ContextNfa {
    let transitions = (0..head.num_states()).flat_map(|s| {
        (0..head.num_inputs()).map(move |i| (s, head.output(s, i), head.next(s, i)))
    });
    ContextNfa::new(head.num_states(), head.num_outputs(), head.initial(), transitions)
        .expect("image of a valid machine is a valid NFA")
}

/// The cascade `tail ∘ head` as a single machine over `head`'s inputs.
///
/// Output pairs `(o_H, o_T)` are encoded as `o_H * |O_T| + o_T`. Only the
/// product states reachable from `(r_H, r_T)` are built; they are numbered
/// in BFS order.
pub fn composite_product(head: &MealyMachine, tail: &MealyMachine) -> Result<MealyMachine, AutomataError> {
    if tail.num_inputs() != head.num_outputs() {
        return Err(AutomataError::AlphabetMismatch {
            expected: head.num_outputs(),
            found: tail.num_inputs(),
        });
    }
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut pairs = vec![(head.initial(), tail.initial())];
    index.insert(pairs[0], 0);
    let mut next = Vec::new();
    let mut out = Vec::new();
    let mut cursor = 0;
    while cursor < pairs.len() {
        let (h, t) = pairs[cursor];
        for i in 0..head.num_inputs() {
            let o = head.output(h, i);
            let succ = (head.next(h, i), tail.next(t, o));
            let id = *index.entry(succ).or_insert_with(|| {
                pairs.push(succ);
                pairs.len() - 1
            });
            next.push(id);
            out.push(o * tail.num_outputs() + tail.output(t, o));
        }
        cursor += 1;
    }
    MealyMachine::new(
        pairs.len(),
        head.num_inputs(),
        head.num_outputs() * tail.num_outputs(),
        next,
        out,
        0,
    )
}

/// Breadth-first exploration of the locations reachable in `M × A`.
///
/// Inputs are tried in increasing order and NFA successors in increasing
/// order, so discovery order and access words are deterministic. The access
/// word of a location is the first (shortest, lexicographically least) word
/// reaching it.
#[derive(Debug, Clone)]
pub struct ProductReach {
    locations: Vec<Location>,
    index: HashMap<Location, usize>,
    parent: Vec<Option<(usize, Symbol)>>,
}

impl ProductReach {
    pub fn explore(m: &MealyMachine, a: &ContextNfa) -> Result<Self, AutomataError> {
        if a.num_symbols() != m.num_inputs() {
            return Err(AutomataError::AlphabetMismatch { expected: m.num_inputs(), found: a.num_symbols() });
        }
        let start = Location::new(m.initial(), a.initial());
        let mut reach = ProductReach {
            locations: vec![start],
            index: HashMap::from([(start, 0)]),
            parent: vec![None],
        };
        let mut queue = VecDeque::from([0usize]);
        while let Some(id) = queue.pop_front() {
            let loc = reach.locations[id];
            for i in 0..m.num_inputs() {
                let s = m.next(loc.mstate, i);
                for &b in a.successors(loc.astate, i) {
                    let succ = Location::new(s, b);
                    if !reach.index.contains_key(&succ) {
                        reach.index.insert(succ, reach.locations.len());
                        queue.push_back(reach.locations.len());
                        reach.locations.push(succ);
                        reach.parent.push(Some((id, i)));
                    }
                }
            }
        }
        Ok(reach)
    }

    /// Reachable locations in discovery order.
    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    /// Discovery index of a location, if reachable.
    pub fn discovery_index(&self, loc: Location) -> Option<usize> {
        self.index.get(&loc).copied()
    }

    pub fn contains(&self, loc: Location) -> bool {
        self.index.contains_key(&loc)
    }

    /// The BFS access word of a reachable location.
    pub fn access_word(&self, loc: Location) -> Option<Word> {
        let mut id = self.discovery_index(loc)?;
        let mut word = Vec::new();
        while let Some((prev, i)) = self.parent[id] {
            word.push(i);
            id = prev;
        }
        word.reverse();
        Some(Word::from(word))
    }
}

/// All locations `(δ_M(α), a)` with `a ∈ Δ_A(α)` for some word `α`, in BFS discovery order.
pub fn reachable_product_locations(m: &MealyMachine, a: &ContextNfa) -> Result<Vec<Location>, AutomataError> {
    Ok(ProductReach::explore(m, a)?.locations)
}
