use crate::automata::{composite_product, image_automaton, ContextNfa, MealyMachine, ProductReach, Word};
use crate::suite::{NodeId, SuiteTree};

use super::{GenError, DEFAULT_MAX_TESTS};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WMethodStats {
    /// States of the minimized machine.
    pub states: usize,
    /// `k_P - |S_P|`
    pub extra: usize,
    pub cover: usize,
    pub characterization: usize,
}

/// `V · I^{≤e+1} · W` for the minimized machine, with `e = k - |S_P|`.
pub fn w_method(p: &MealyMachine, k: usize) -> Result<SuiteTree, GenError> {
    w_method_guarded(p, k, DEFAULT_MAX_TESTS).map(|(suite, _)| suite)
}

/// Like [`w_method`], but refuses up front when the estimated number of tests exceeds `max_tests`.
pub fn w_method_guarded(p: &MealyMachine, k: usize, max_tests: usize) -> Result<(SuiteTree, WMethodStats), GenError> {
    let p = p.minimize();
    let n = p.num_states();
    if k < n {
        return Err(GenError::InvalidBound { k, min: n });
    }
    let extra = k - n;
    let universal = ContextNfa::universal(p.num_inputs());
    let reach = ProductReach::explore(&p, &universal)?;
    let cover: Vec<Word> = reach.locations().iter().map(|&l| reach.access_word(l).expect("reachable")).collect();
    let mut characterization: Vec<Word> = Vec::new();
    for s in 0..n {
        for t in s + 1..n {
            characterization.push(p.distinguishing_word(s, t).expect("minimized machines are reduced"));
        }
    }
    characterization.sort();
    characterization.dedup();

    let ni = p.num_inputs() as u128;
    let traversal: u128 = (0..=extra as u32 + 1).fold(0u128, |acc, l| acc.saturating_add(ni.saturating_pow(l)));
    let estimated = (cover.len() as u128)
        .saturating_mul(traversal)
        .saturating_mul(characterization.len().max(1) as u128);
    if estimated > max_tests as u128 {
        return Err(GenError::ResourceGuard { estimated, limit: max_tests });
    }

    let mut suite = SuiteTree::new(&p, &universal)?;
    for v in &cover {
        let node = suite.add_test(v)?;
        traverse(&mut suite, node, extra + 1, &characterization)?;
    }
    let stats = WMethodStats { states: n, extra, cover: cover.len(), characterization: characterization.len() };
    Ok((suite, stats))
}

fn traverse(suite: &mut SuiteTree, node: NodeId, depth: usize, w: &[Word]) -> Result<(), GenError> {
    for word in w {
        suite.add_suffix(node, word)?;
    }
    if depth > 0 {
        for i in 0..suite.machine().num_inputs() {
            let child = suite.add_child(node, i).expect("universal context never blocks");
            traverse(suite, child, depth - 1, w)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Baseline {
    /// Suite for the tail in the context of the head's image.
    pub suite: SuiteTree,
    /// Statistics of the W-method run on the composite machine.
    pub product: WMethodStats,
}

/// Tests the tail `T` of `T ∘ H` by running the W-method on the composite
/// machine with bound `k|S_H|` and mapping every test through `H`.
pub fn baseline_tail(h: &MealyMachine, t: &MealyMachine, k: usize) -> Result<Baseline, GenError> {
    baseline_tail_guarded(h, t, k, DEFAULT_MAX_TESTS)
}

pub fn baseline_tail_guarded(
    h: &MealyMachine,
    t: &MealyMachine,
    k: usize,
    max_tests: usize,
) -> Result<Baseline, GenError> {
    let p = composite_product(h, t)?;
    let (composite_suite, product) = w_method_guarded(&p, k * h.num_states(), max_tests)?;
    let context = image_automaton(h);
    let mut suite = SuiteTree::new(t, &context)?;
    for test in composite_suite.maximal_tests() {
        suite.add_test(&h.outputs(&test))?;
    }
    Ok(Baseline { suite, product })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_state_without_extra_states() {
        let p = MealyMachine::from_fn(1, 2, 2, 0, |_, i| (0, i)).unwrap();
        let suite = w_method(&p, 1).unwrap();
        // V = {ε}, W = {} and one round of traversal
        assert_eq!(suite.maximal_tests(), vec![Word::from(vec![0]), Word::from(vec![1])]);
    }

    #[test]
    fn bound_below_state_count_is_rejected() {
        let p = MealyMachine::from_fn(2, 1, 2, 0, |s, _| (1 - s, s)).unwrap();
        assert_eq!(w_method(&p, 1).unwrap_err(), GenError::InvalidBound { k: 1, min: 2 });
    }

    #[test]
    fn guard_refuses_large_traversals() {
        let p = MealyMachine::from_fn(2, 3, 2, 0, |s, i| if i == 0 { (1 - s, 0) } else { (s, s) }).unwrap();
        assert!(matches!(w_method_guarded(&p, 20, 1000), Err(GenError::ResourceGuard { .. })));
    }

    #[test]
    fn test_count_within_classical_bound() {
        let p = MealyMachine::from_fn(3, 2, 2, 0, |s, i| if i == 0 { ((s + 1) % 3, 0) } else { (s, (s == 2) as usize) })
            .unwrap();
        for k in 3..6 {
            let suite = w_method(&p, k).unwrap();
            let e = k - 3;
            // |V| · |I|^{≤e+1} · |W|
            let bound = 3 * (0..=e + 1).map(|l| 2usize.pow(l as u32)).sum::<usize>() * 3;
            assert!(suite.num_tests() <= bound);
        }
    }

    #[test]
    fn baseline_with_single_state_head_tests_tail_directly() {
        // identity-like head: forwards its input
        let h = MealyMachine::from_fn(1, 2, 2, 0, |_, i| (0, i)).unwrap();
        let t = MealyMachine::from_fn(2, 2, 2, 0, |s, i| if i == 0 { (1 - s, 0) } else { (s, s) }).unwrap();
        let base = baseline_tail(&h, &t, 2).unwrap();
        let direct = w_method(&t, 2).unwrap();
        assert_eq!(base.suite.maximal_tests(), direct.maximal_tests());
        assert_eq!(base.product.extra, 0);
    }
}
