//! Plain-text and DOT formats for machines and context automata.
//!
//! ```text
//! mealy <states> <inputs> <outputs> <initial>
//! s i -> t / o
//!
//! nfa <states> <symbols> <initial>
//! s x -> t
//! ```
//!
//! Blank lines and everything after `#` are ignored. A Mealy file must list
//! exactly one transition for every `(state, input)` pair.

use std::fmt::Write as _;

use super::{AutomataError, ContextNfa, MealyMachine};

fn parse_err(line: usize, message: impl Into<String>) -> AutomataError {
    AutomataError::Parse { line, message: message.into() }
}

/// Non-empty lines with comments stripped, paired with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(n, line)| {
        let line = line.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = line.split_whitespace().collect();
        (!tokens.is_empty()).then_some((n + 1, tokens))
    })
}

fn number(line: usize, token: &str) -> Result<usize, AutomataError> {
    token
        .parse()
        .map_err(|_| parse_err(line, format!("expected a non-negative integer, found `{token}`")))
}

fn expect(line: usize, token: Option<&&str>, want: &str) -> Result<(), AutomataError> {
    match token {
        Some(&t) if t == want => Ok(()),
        Some(t) => Err(parse_err(line, format!("expected `{want}`, found `{t}`"))),
        None => Err(parse_err(line, format!("expected `{want}`"))),
    }
}

fn header<'a>(
    lines: &mut impl Iterator<Item = (usize, Vec<&'a str>)>,
    keyword: &str,
    arity: usize,
) -> Result<(usize, Vec<usize>), AutomataError> {
    let (line, tokens) = lines.next().ok_or_else(|| parse_err(1, format!("missing `{keyword}` header")))?;
    if tokens[0] != keyword {
        return Err(parse_err(line, format!("expected `{keyword}` header, found `{}`", tokens[0])));
    }
    if tokens.len() != arity + 1 {
        return Err(parse_err(line, format!("`{keyword}` header takes {arity} numbers")));
    }
    let values = tokens[1..].iter().map(|t| number(line, t)).collect::<Result<_, _>>()?;
    Ok((line, values))
}

pub fn parse_mealy(text: &str) -> Result<MealyMachine, AutomataError> {
    let mut lines = content_lines(text);
    let (header_line, h) = header(&mut lines, "mealy", 4)?;
    let (states, inputs, outputs, initial) = (h[0], h[1], h[2], h[3]);
    let mut next = vec![None; states * inputs];
    let mut out = vec![0; states * inputs];
    for (line, tokens) in lines {
        // s i -> t / o
        if tokens.len() != 6 {
            return Err(parse_err(line, "expected `s i -> t / o`"));
        }
        expect(line, tokens.get(2), "->")?;
        expect(line, tokens.get(4), "/")?;
        let (s, i, t, o) =
            (number(line, tokens[0])?, number(line, tokens[1])?, number(line, tokens[3])?, number(line, tokens[5])?);
        if s >= states || t >= states {
            return Err(parse_err(line, format!("state out of range (machine has {states})")));
        }
        if i >= inputs {
            return Err(parse_err(line, format!("input {i} out of range (alphabet has {inputs})")));
        }
        if o >= outputs {
            return Err(parse_err(line, format!("output {o} out of range (alphabet has {outputs})")));
        }
        let slot = s * inputs + i;
        if next[slot].is_some() {
            return Err(parse_err(line, format!("duplicate transition for ({s}, {i})")));
        }
        next[slot] = Some(t);
        out[slot] = o;
    }
    if let Some(slot) = next.iter().position(Option::is_none) {
        return Err(parse_err(
            header_line,
            format!("missing transition for ({}, {})", slot / inputs, slot % inputs),
        ));
    }
    MealyMachine::new(states, inputs, outputs, next.into_iter().flatten().collect(), out, initial)
        .map_err(|e| parse_err(header_line, e.to_string()))
}

pub fn parse_nfa(text: &str) -> Result<ContextNfa, AutomataError> {
    let mut lines = content_lines(text);
    let (header_line, h) = header(&mut lines, "nfa", 3)?;
    let (states, symbols, initial) = (h[0], h[1], h[2]);
    let mut transitions = Vec::new();
    for (line, tokens) in lines {
        if tokens.len() != 4 {
            return Err(parse_err(line, "expected `s x -> t`"));
        }
        expect(line, tokens.get(2), "->")?;
        let (s, x, t) = (number(line, tokens[0])?, number(line, tokens[1])?, number(line, tokens[3])?);
        if s >= states || t >= states {
            return Err(parse_err(line, format!("state out of range (automaton has {states})")));
        }
        if x >= symbols {
            return Err(parse_err(line, format!("symbol {x} out of range (alphabet has {symbols})")));
        }
        transitions.push((s, x, t));
    }
    ContextNfa::new(states, symbols, initial, transitions).map_err(|e| parse_err(header_line, e.to_string()))
}

pub fn format_mealy(m: &MealyMachine) -> String {
    let mut text = format!("mealy {} {} {} {}\n", m.num_states(), m.num_inputs(), m.num_outputs(), m.initial());
    for s in 0..m.num_states() {
        for i in 0..m.num_inputs() {
            let _ = writeln!(text, "{s} {i} -> {} / {}", m.next(s, i), m.output(s, i));
        }
    }
    text
}

pub fn format_nfa(a: &ContextNfa) -> String {
    let mut text = format!("nfa {} {} {}\n", a.num_states(), a.num_symbols(), a.initial());
    for (s, x, t) in a.transitions() {
        let _ = writeln!(text, "{s} {x} -> {t}");
    }
    text
}

pub fn mealy_to_dot(m: &MealyMachine) -> String {
    let mut dot = String::from("digraph mealy {\n  rankdir=LR;\n  __start [shape=point];\n");
    let _ = writeln!(dot, "  __start -> s{};", m.initial());
    for s in 0..m.num_states() {
        let _ = writeln!(dot, "  s{s} [shape=circle,label=\"{s}\"];");
    }
    for s in 0..m.num_states() {
        for i in 0..m.num_inputs() {
            let _ = writeln!(dot, "  s{s} -> s{} [label=\"{i}/{}\"];", m.next(s, i), m.output(s, i));
        }
    }
    dot.push_str("}\n");
    dot
}

pub fn nfa_to_dot(a: &ContextNfa) -> String {
    let mut dot = String::from("digraph nfa {\n  rankdir=LR;\n  __start [shape=point];\n");
    let _ = writeln!(dot, "  __start -> q{};", a.initial());
    for s in 0..a.num_states() {
        let _ = writeln!(dot, "  q{s} [shape=doublecircle,label=\"{s}\"];");
    }
    for (s, x, t) in a.transitions() {
        let _ = writeln!(dot, "  q{s} -> q{t} [label=\"{x}\"];");
    }
    dot.push_str("}\n");
    dot
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOGGLE: &str = "# a toggle\nmealy 2 2 2 0\n0 0 -> 1 / 0\n0 1 -> 0 / 0\n\n1 0 -> 0 / 1  # back\n1 1 -> 1 / 0\n";

    #[test]
    fn mealy_round_trip() {
        let m = parse_mealy(TOGGLE).unwrap();
        assert_eq!(m.next(1, 0), 0);
        assert_eq!(m.output(1, 0), 1);
        assert_eq!(parse_mealy(&format_mealy(&m)).unwrap(), m);
    }

    #[test]
    fn nfa_round_trip() {
        let a = parse_nfa("nfa 2 2 0\n0 0 -> 0\n0 0 -> 1\n1 1 -> 0\n").unwrap();
        assert_eq!(a.successors(0, 0), &[0, 1]);
        assert_eq!(parse_nfa(&format_nfa(&a)).unwrap(), a);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_mealy("mealy 1 1 1 0\n0 0 -> 3 / 0\n").unwrap_err();
        assert!(matches!(err, AutomataError::Parse { line: 2, .. }), "{err}");
        let err = parse_mealy("mealy 2 1 1 0\n0 0 -> 1 / 0\n").unwrap_err();
        assert!(err.to_string().contains("missing transition for (1, 0)"));
        let err = parse_mealy("mealy 1 1 1 0\n0 0 -> 0 / 0\n0 0 -> 0 / 0\n").unwrap_err();
        assert!(matches!(err, AutomataError::Parse { line: 3, .. }));
        let err = parse_nfa("nfa 1 1 0\n0 0 => 0\n").unwrap_err();
        assert!(matches!(err, AutomataError::Parse { line: 2, .. }));
        assert!(parse_nfa("mealy 1 1 1 0\n").is_err());
    }

    #[test]
    fn dot_mentions_every_transition() {
        let m = parse_mealy(TOGGLE).unwrap();
        let dot = mealy_to_dot(&m);
        assert!(dot.contains("s1 -> s0 [label=\"0/1\"]"));
        let dot = nfa_to_dot(&crate::automata::image_automaton(&m));
        assert!(dot.contains("q1 -> q0 [label=\"1\"]"));
    }
}
