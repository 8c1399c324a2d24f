use std::fmt;

use super::{Driver, Program, Semantics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DiagnosticKind {
    UndrivenNet,
    Cycle,
    KindMismatch,
    Arity,
    InvalidParameter,
    UnknownOutput,
    Profile,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiagnosticKind::UndrivenNet => "undriven-net",
            DiagnosticKind::Cycle => "cycle",
            DiagnosticKind::KindMismatch => "kind-mismatch",
            DiagnosticKind::Arity => "arity",
            DiagnosticKind::InvalidParameter => "invalid-parameter",
            DiagnosticKind::UnknownOutput => "unknown-output",
            DiagnosticKind::Profile => "profile",
        })
    }
}

/// A violated program invariant and where it was found.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub location: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", self.kind, self.location, self.message)
    }
}

/// Checks every program invariant. An empty result means the program is valid.
pub fn validate_program(p: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut push = |kind, location: String, message: String| {
        out.push(Diagnostic {
            kind,
            location,
            message,
        })
    };

    for b in &p.blocks {
        let loc = format!("block {}", b.id);
        for net in &b.inputs {
            if p.driver(net).is_none() {
                push(
                    DiagnosticKind::UndrivenNet,
                    loc.clone(),
                    format!("input net `{net}` has no driver"),
                );
            }
        }
        if let Some(msg) = arity_problem(b.semantics(), b.inputs.len()) {
            push(DiagnosticKind::Arity, loc.clone(), msg);
        }
        match b.semantics() {
            Semantics::MulConst { k } | Semantics::Correct { k, .. } if !k.is_finite() || *k <= 0.0 => push(
                DiagnosticKind::InvalidParameter,
                loc.clone(),
                format!("gain k must be positive, got {k}"),
            ),
            _ => {}
        }
    }

    for (name, net) in &p.outputs {
        if p.driver(net).is_none() {
            push(
                DiagnosticKind::UnknownOutput,
                format!("output {name}"),
                format!("net `{net}` has no driver"),
            );
        }
    }

    for cycle in block_cycles(p) {
        let ids: Vec<&str> = cycle.iter().map(|&i| p.blocks[i].id.as_str()).collect();
        push(
            DiagnosticKind::Cycle,
            format!("blocks {}", ids.join(", ")),
            "block graph contains a feedback loop".into(),
        );
    }

    let kinds = p.net_kinds();
    for b in &p.blocks {
        let loc = format!("block {}", b.id);
        for (port, net) in b.block_type.inputs.iter().zip(&b.inputs) {
            let (Some(want), Some(&have)) = (port.kind, kinds.get(net)) else {
                continue;
            };
            if want != have {
                push(
                    DiagnosticKind::KindMismatch,
                    loc.clone(),
                    format!(
                        "port `{}` expects {want} but net `{net}` is {have}",
                        port.name
                    ),
                );
            }
        }
        if matches!(b.semantics(), Semantics::Sel) && b.inputs.len() == 3 {
            let a = kinds.get(&b.inputs[1]);
            let c = kinds.get(&b.inputs[2]);
            if let (Some(a), Some(c)) = (a, c) {
                if a != c {
                    push(
                        DiagnosticKind::KindMismatch,
                        loc.clone(),
                        format!("branches differ in kind ({a} vs {c})"),
                    );
                }
            }
        }
    }

    for prof in &p.profiles {
        let loc = format!("profile {}", prof.name);
        for ch in &p.channels {
            match prof.readings.get(&ch.id) {
                None => push(
                    DiagnosticKind::Profile,
                    loc.clone(),
                    format!("no intended reading for channel {}", ch.id),
                ),
                Some(v) if !v.is_finite() => push(
                    DiagnosticKind::Profile,
                    loc.clone(),
                    format!("reading for channel {} is not finite", ch.id),
                ),
                _ => {}
            }
        }
        for id in prof.readings.keys() {
            if p.channel(id).is_none() {
                push(
                    DiagnosticKind::Profile,
                    loc.clone(),
                    format!("reading for unknown channel {id}"),
                );
            }
        }
        for d in &prof.demands {
            match p.resolve_target(&d.target) {
                None => push(
                    DiagnosticKind::Profile,
                    loc.clone(),
                    format!("demand on unknown net `{}`", d.target),
                ),
                Some(net) => {
                    if let Some(&k) = kinds.get(net) {
                        if k != d.mode.kind() {
                            push(
                                DiagnosticKind::Profile,
                                loc.clone(),
                                format!("mode {} does not apply to {k} net `{net}`", d.mode),
                            );
                        }
                    }
                }
            }
        }
    }

    out
}

fn arity_problem(s: &Semantics, n: usize) -> Option<String> {
    let exact = |want: usize| (n != want).then(|| format!("{} takes {want} inputs, got {n}", s.type_name()));
    match s {
        Semantics::Const(_) => exact(0),
        Semantics::MulConst { .. } | Semantics::Lt { .. } | Semantics::Gt { .. } | Semantics::Not => {
            exact(1)
        }
        Semantics::Sub | Semantics::Correct { .. } => exact(2),
        Semantics::Sel => exact(3),
        Semantics::Add
        | Semantics::Avg
        | Semantics::Min
        | Semantics::Max
        | Semantics::And
        | Semantics::Or => (n == 0).then(|| format!("{} needs at least one input", s.type_name())),
        Semantics::Koon { k } => {
            (*k < 1 || *k > n).then(|| format!("KOON requires 1 <= k <= n, got k={k}, n={n}"))
        }
    }
}

/// Strongly connected components of the block graph that contain a cycle.
fn block_cycles(p: &Program) -> Vec<Vec<usize>> {
    let n = p.blocks.len();
    let succs: Vec<Vec<usize>> = {
        let mut s = vec![Vec::new(); n];
        for (i, b) in p.blocks.iter().enumerate() {
            for net in &b.inputs {
                if let Some(Driver::Block(j)) = p.driver(net) {
                    s[j].push(i);
                }
            }
        }
        s
    };

    struct Tarjan<'a> {
        succs: &'a [Vec<usize>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        sccs: Vec<Vec<usize>>,
    }
    impl Tarjan<'_> {
        fn visit(&mut self, v: usize) {
            self.index[v] = Some(self.next);
            self.low[v] = self.next;
            self.next += 1;
            self.stack.push(v);
            self.on_stack[v] = true;
            for &w in &self.succs[v] {
                match self.index[w] {
                    None => {
                        self.visit(w);
                        self.low[v] = self.low[v].min(self.low[w]);
                    }
                    Some(iw) if self.on_stack[w] => self.low[v] = self.low[v].min(iw),
                    _ => {}
                }
            }
            if Some(self.low[v]) == self.index[v] {
                let mut scc = Vec::new();
                while let Some(w) = self.stack.pop() {
                    self.on_stack[w] = false;
                    scc.push(w);
                    if w == v {
                        break;
                    }
                }
                self.sccs.push(scc);
            }
        }
    }

    let mut t = Tarjan {
        succs: &succs,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        sccs: Vec::new(),
    };
    for v in 0..n {
        if t.index[v].is_none() {
            t.visit(v);
        }
    }
    let mut cycles: Vec<Vec<usize>> = t
        .sccs
        .into_iter()
        .filter(|scc| scc.len() > 1 || succs[scc[0]].contains(&scc[0]))
        .map(|mut scc| {
            scc.sort_unstable();
            scc
        })
        .collect();
    cycles.sort();
    cycles
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbd::{parse_program, Block, Channel, Value};
    use std::collections::BTreeMap;

    #[test]
    fn cycle_names_both_blocks() {
        let blocks = vec![
            Block::new("A", Semantics::Not, vec!["b".into()], "a"),
            Block::new("B", Semantics::Not, vec!["a".into()], "b"),
        ];
        let p = Program::new(None, vec![], blocks, BTreeMap::new(), vec![]).unwrap();
        let d = validate_program(&p);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::Cycle);
        assert!(d[0].location.contains('A') && d[0].location.contains('B'));
    }

    #[test]
    fn real_net_into_bool_port() {
        let p = Program::new(
            None,
            vec![Channel {
                id: "A".into(),
                value_net: "v".into(),
                flag_net: "f".into(),
            }],
            vec![Block::new("n", Semantics::Not, vec!["v".into()], "y")],
            BTreeMap::new(),
            vec![],
        )
        .unwrap();
        let d = validate_program(&p);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::KindMismatch);
    }

    #[test]
    fn koon_bounds() {
        let p = parse_program(
            r#"{"channels": [],
                "blocks": [{"id": "t", "type": "CONST", "params": {"value": true}, "out": "t"},
                           {"id": "v", "type": "KOON", "params": {"k": 3}, "in": ["t", "t"], "out": "y"}],
                "outputs": {}}"#,
        )
        .unwrap();
        let d = validate_program(&p);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::Arity);
    }

    #[test]
    fn undriven_input_and_output() {
        let p = Program::new(
            None,
            vec![],
            vec![Block::new("n", Semantics::Not, vec!["ghost".into()], "y")],
            BTreeMap::from([("OUT".to_string(), "nowhere".to_string())]),
            vec![],
        )
        .unwrap();
        let kinds: Vec<_> = validate_program(&p).into_iter().map(|d| d.kind).collect();
        assert!(kinds.contains(&DiagnosticKind::UndrivenNet));
        assert!(kinds.contains(&DiagnosticKind::UnknownOutput));
    }

    #[test]
    fn sel_branch_kinds_must_match() {
        let blocks = vec![
            Block::new("s", Semantics::Const(Value::Bool(true)), vec![], "s"),
            Block::new("r", Semantics::Const(Value::Real(1.0)), vec![], "r"),
            Block::new("x", Semantics::Sel, vec!["s".into(), "r".into(), "s".into()], "y"),
        ];
        let p = Program::new(None, vec![], blocks, BTreeMap::new(), vec![]).unwrap();
        let d = validate_program(&p);
        assert!(d.iter().any(|d| d.kind == DiagnosticKind::KindMismatch));
    }

    #[test]
    fn nonpositive_gain() {
        let blocks = vec![
            Block::new("r", Semantics::Const(Value::Real(1.0)), vec![], "r"),
            Block::new("m", Semantics::MulConst { k: -2.0 }, vec!["r".into()], "y"),
        ];
        let p = Program::new(None, vec![], blocks, BTreeMap::new(), vec![]).unwrap();
        let d = validate_program(&p);
        assert_eq!(d[0].kind, DiagnosticKind::InvalidParameter);
    }
}
