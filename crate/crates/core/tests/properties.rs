//! Property tests across the crate. Random programs come from the fuzz
//! generator; random fault models and quantification instances are built
//! here with independent reference computations.

use std::collections::{BTreeMap, BTreeSet};

use fmr_core::corpus;
use fmr_core::fbd::{parse_program, serialize_program};
use fmr_core::fmr::{analyze, ChannelState, Mode};
use fmr_core::oracle::fuzz::{generate, FuzzConfig, OUTPUT};
use fmr_core::oracle::{run_scenario, OracleConfig, Scenario};
use fmr_core::quant::{
    product_measures, top_measures, unavailability, FailureDatabase, FailureModel, Method, QuantConfig,
};
use fmr_core::system::{analyze_system, synthesize, SystemModel, TopEvent};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg(method: Method) -> QuantConfig {
    QuantConfig {
        method,
        ..QuantConfig::default()
    }
}

fn model() -> impl Strategy<Value = FailureModel> {
    prop_oneof![
        (0.0..=1.0f64).prop_map(|p| FailureModel::Fixed { p }),
        (1e-12..1e-2f64, 0.1..1e4f64).prop_map(|(lambda, mttr)| FailureModel::Rate { lambda, mttr }),
        (1e-12..1e-2f64, 1.0..1e5f64).prop_map(|(lambda, tau)| FailureModel::Dormant { lambda, tau }),
    ]
}

fn scaled(m: &FailureModel, k: f64, which: usize) -> FailureModel {
    match *m {
        FailureModel::Fixed { p } => FailureModel::Fixed { p },
        FailureModel::Rate { lambda, mttr } if which == 0 => FailureModel::Rate { lambda: lambda * k, mttr },
        FailureModel::Rate { lambda, mttr } => FailureModel::Rate { lambda, mttr: mttr * k },
        FailureModel::Dormant { lambda, tau } if which == 0 => FailureModel::Dormant { lambda: lambda * k, tau },
        FailureModel::Dormant { lambda, tau } => FailureModel::Dormant { lambda, tau: tau * k },
    }
}

/// Probability that some cut set has all its events, by enumerating every
/// assignment of the distinct events.
fn truth_table_q(sets: &[Vec<String>], p: &BTreeMap<String, f64>) -> f64 {
    let events: Vec<&String> = p.keys().collect();
    let mut total = 0.0;
    for bits in 0u32..(1 << events.len()) {
        let on = |e: &String| bits >> events.iter().position(|x| *x == e).unwrap() & 1 == 1;
        if sets.iter().any(|s| s.iter().all(on)) {
            total += events
                .iter()
                .enumerate()
                .map(|(i, e)| if bits >> i & 1 == 1 { p[*e] } else { 1.0 - p[*e] })
                .product::<f64>();
        }
    }
    total
}

/// Up to 10 cut sets over up to 12 FIXED events.
fn instance() -> impl Strategy<Value = (Vec<Vec<String>>, BTreeMap<String, f64>)> {
    (1usize..=12)
        .prop_flat_map(|n| {
            (
                proptest::collection::vec(1e-6..0.6f64, n),
                proptest::collection::vec(proptest::collection::btree_set(0..n, 1..=n.min(4)), 1..=10),
            )
        })
        .prop_map(|(ps, sets)| {
            let sets: Vec<Vec<String>> = sets
                .into_iter()
                .map(|s| s.into_iter().map(|i| format!("e{i}")).collect())
                .collect();
            let used: BTreeSet<&String> = sets.iter().flatten().collect();
            let p = ps
                .iter()
                .enumerate()
                .map(|(i, p)| (format!("e{i}"), *p))
                .filter(|(e, _)| used.contains(e))
                .collect();
            (sets, p)
        })
}

fn database(p: &BTreeMap<String, f64>) -> FailureDatabase {
    let mut db = FailureDatabase::default();
    for (e, q) in p {
        db.insert(e.clone(), FailureModel::Fixed { p: *q });
    }
    db
}

proptest! {
    #[test]
    fn unavailability_is_a_probability(m in model()) {
        let q = unavailability(&m, &QuantConfig::default());
        prop_assert!((0.0..=1.0).contains(&q), "{m:?} gave {q}");
    }

    #[test]
    fn unavailability_is_monotone(m in model(), k in 1.0..50.0f64, which in 0usize..2) {
        let c = QuantConfig::default();
        let (lo, hi) = (unavailability(&m, &c), unavailability(&scaled(&m, k, which), &c));
        prop_assert!(hi >= lo * (1.0 - 1e-12), "{m:?} x{k} ({which}): {lo} -> {hi}");
    }

    #[test]
    fn dormant_small_argument(x in 1e-15..1e-3f64, lambda in 1e-10..1e-5f64) {
        let q = unavailability(&FailureModel::Dormant { lambda, tau: x / lambda }, &QuantConfig::default());
        prop_assert!((q - x / 2.0).abs() <= x * x / 6.0, "x={x}: q={q}");
    }

    #[test]
    fn single_cut_set_ep_is_the_product(models in proptest::collection::vec(model(), 1..6)) {
        let c = cfg(Method::Ep);
        let mut db = FailureDatabase::default();
        let ids: Vec<String> = (0..models.len()).map(|i| format!("x{i}")).collect();
        for (id, m) in ids.iter().zip(&models) {
            db.insert(id.clone(), *m);
        }
        let each: Vec<_> = ids.iter().map(|id| db.measures(id, &c).unwrap()).collect();
        let want = product_measures(&each);
        let got = top_measures(std::slice::from_ref(&ids), &db, &c).unwrap();
        prop_assert_eq!(got.q, want.q);
        prop_assert!((got.w - want.w).abs() <= 1e-12 * want.w.abs().max(1e-300));
    }

    #[test]
    fn method_ordering((sets, p) in instance()) {
        let db = database(&p);
        let q = |m| top_measures(&sets, &db, &cfg(m)).unwrap().q;
        let (exact, ep, re) = (q(Method::Exact), q(Method::Ep), q(Method::Re));
        let reference = truth_table_q(&sets, &p);
        prop_assert!((exact - reference).abs() <= 1e-12, "exact {exact} vs {reference}");
        prop_assert!(exact <= ep * (1.0 + 1e-12), "exact {exact} > ep {ep}");
        prop_assert!(ep <= re * (1.0 + 1e-12), "ep {ep} > re {re}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn programs_round_trip(seed in any::<u64>()) {
        let p = generate(&mut ChaCha8Rng::seed_from_u64(seed), &FuzzConfig::default());
        let text = serialize_program(&p);
        let back = parse_program(&text).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(serialize_program(&back), text);
    }

    #[test]
    fn short_lists_are_minimal_and_deterministic(seed in any::<u64>()) {
        let p = generate(&mut ChaCha8Rng::seed_from_u64(seed), &FuzzConfig::default());
        for mode in [Mode::T, Mode::F] {
            let sl = analyze(&p, OUTPUT, mode).unwrap();
            prop_assert_eq!(sl.to_json(), analyze(&p, OUTPUT, mode).unwrap().to_json());
            for (i, a) in sl.cut_sets.iter().enumerate() {
                let channels: BTreeSet<&str> = a.literals().iter().map(|l| l.channel.as_str()).collect();
                prop_assert_eq!(channels.len(), a.len(), "two literals on one channel in {}", a);
                for (j, b) in sl.cut_sets.iter().enumerate() {
                    prop_assert!(i == j || !a.implies(b), "{} subsumes {}", a, b);
                }
            }
        }
    }

    #[test]
    fn scenarios_are_deterministic(seed in any::<u64>(), code in any::<u32>(), delta in 0.01..100.0f64) {
        let p = generate(&mut ChaCha8Rng::seed_from_u64(seed), &FuzzConfig::default());
        let cfg = OracleConfig::for_target(&p, OUTPUT, Mode::T, None).unwrap();
        let all = [ChannelState::Healthy, ChannelState::Faulty, ChannelState::Hi, ChannelState::Lo];
        let mut states = BTreeMap::new();
        let mut mags = BTreeMap::new();
        for (i, c) in cfg.intended.keys().enumerate() {
            let s = all[(code >> (2 * i) & 3) as usize];
            states.insert(c.clone(), s);
            if matches!(s, ChannelState::Hi | ChannelState::Lo) {
                mags.insert(c.clone(), delta);
            }
        }
        let s = Scenario::new(states, mags).unwrap();
        prop_assert_eq!(run_scenario(&p, &s, &cfg).unwrap(), run_scenario(&p, &s, &cfg).unwrap());
    }
}

/// Failure logic of one generated component, kept apart from the model
/// loader so the reference evaluation shares no code with it.
#[derive(Debug, Clone)]
enum Logic {
    Event(String),
    Input(usize),
    And(Box<Logic>, Box<Logic>),
    Or(Box<Logic>, Box<Logic>),
    TwoOfThree(Box<Logic>, Box<Logic>, Box<Logic>),
}

impl Logic {
    fn render(&self) -> String {
        match self {
            Logic::Event(e) => e.clone(),
            Logic::Input(i) => format!("In{}.F", i + 1),
            Logic::And(a, b) => format!("({} AND {})", a.render(), b.render()),
            Logic::Or(a, b) => format!("({} OR {})", a.render(), b.render()),
            Logic::TwoOfThree(a, b, c) => format!("KOON(2, {}, {}, {})", a.render(), b.render(), c.render()),
        }
    }

    fn eval(&self, comp: usize, sys: &RandomSystem, on: &BTreeSet<String>) -> bool {
        match self {
            Logic::Event(e) => on.contains(&format!("C{comp}.{e}")),
            Logic::Input(i) => {
                let src = sys.inputs[comp][*i];
                sys.logic[src].eval(src, sys, on)
            }
            Logic::And(a, b) => a.eval(comp, sys, on) && b.eval(comp, sys, on),
            Logic::Or(a, b) => a.eval(comp, sys, on) || b.eval(comp, sys, on),
            Logic::TwoOfThree(a, b, c) => {
                [a, b, c].iter().filter(|x| x.eval(comp, sys, on)).count() >= 2
            }
        }
    }
}

struct RandomSystem {
    inputs: Vec<Vec<usize>>,
    logic: Vec<Logic>,
    events: Vec<Vec<(String, f64)>>,
}

fn random_logic(rng: &mut ChaCha8Rng, events: usize, inputs: usize, depth: u32) -> Logic {
    let leaf = |rng: &mut ChaCha8Rng| {
        if inputs > 0 && rng.gen_bool(0.6) {
            Logic::Input(rng.gen_range(0..inputs))
        } else {
            Logic::Event(format!("E{}", rng.gen_range(0..events) + 1))
        }
    };
    if depth == 0 || rng.gen_bool(0.3) {
        return leaf(rng);
    }
    let kind = rng.gen_range(0..3);
    let mut sub = || Box::new(random_logic(rng, events, inputs, depth - 1));
    match kind {
        0 => Logic::And(sub(), sub()),
        1 => Logic::Or(sub(), sub()),
        _ => Logic::TwoOfThree(sub(), sub(), sub()),
    }
}

impl RandomSystem {
    fn generate(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=8);
        let mut inputs = Vec::new();
        let mut logic = Vec::new();
        let mut events = Vec::new();
        for c in 0..n {
            let k = if c == 0 { 0 } else { rng.gen_range(0..=c.min(3)) };
            let ins: Vec<usize> = (0..k).map(|_| rng.gen_range(0..c)).collect();
            let ne = rng.gen_range(1..=2);
            events.push((1..=ne).map(|e| (format!("E{e}"), rng.gen_range(0.01..0.5))).collect());
            logic.push(random_logic(&mut rng, ne, ins.len(), 3));
            inputs.push(ins);
        }
        RandomSystem { inputs, logic, events }
    }

    fn document(&self) -> String {
        let n = self.logic.len();
        let types: Vec<serde_json::Value> = (0..n)
            .map(|c| {
                serde_json::json!({
                    "name": format!("T{c}"),
                    "inputs": (1..=self.inputs[c].len()).map(|i| format!("In{i}")).collect::<Vec<_>>(),
                    "outputs": ["Out1"],
                    "events": self.events[c].iter().map(|(id, p)| serde_json::json!({"id": id, "model": "FIXED", "p": p})).collect::<Vec<_>>(),
                    "logic": {"Out1.F": self.logic[c].render()},
                })
            })
            .collect();
        let connections: Vec<serde_json::Value> = (0..n)
            .flat_map(|c| {
                self.inputs[c].iter().enumerate().map(move |(i, src)| {
                    serde_json::json!({"from": format!("C{src}.Out1"), "to": format!("C{c}.In{}", i + 1)})
                })
            })
            .collect();
        serde_json::json!({
            "name": "random",
            "types": types,
            "instances": (0..n).map(|c| serde_json::json!({"id": format!("C{c}"), "type": format!("T{c}")})).collect::<Vec<_>>(),
            "connections": connections,
            "tops": [format!("C{}.Out1.F", n - 1)],
        })
        .to_string()
    }

    fn probabilities(&self) -> BTreeMap<String, f64> {
        self.events
            .iter()
            .enumerate()
            .flat_map(|(c, evs)| evs.iter().map(move |(e, p)| (format!("C{c}.{e}"), *p)))
            .collect()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn random_systems_match_truth_tables(seed in any::<u64>()) {
        let sys = RandomSystem::generate(seed);
        let m = SystemModel::from_json(&sys.document(), &mut |_| Err("no imports".into())).unwrap();
        let top = TopEvent::parse(&format!("C{}.Out1.F", sys.logic.len() - 1)).unwrap();
        let cs = synthesize(&m, &top).unwrap();
        prop_assert_eq!(&cs, &synthesize(&m, &top).unwrap());
        for (i, a) in cs.cut_sets.iter().enumerate() {
            for (j, b) in cs.cut_sets.iter().enumerate() {
                prop_assert!(i == j || !a.iter().all(|e| b.contains(e)), "{:?} subsumes {:?}", a, b);
            }
        }

        let p = sys.probabilities();
        let events: Vec<&String> = p.keys().collect();
        for bits in 0u32..(1 << events.len()) {
            let on: BTreeSet<String> = events.iter().enumerate().filter(|(i, _)| bits >> i & 1 == 1).map(|(_, e)| (*e).clone()).collect();
            let want = sys.logic.last().unwrap().eval(sys.logic.len() - 1, &sys, &on);
            let got = cs.cut_sets.iter().any(|s| s.iter().all(|e| on.contains(e)));
            prop_assert_eq!(got, want, "assignment {:?}", on);
        }

        let exact = analyze_system(&m, &top, &FailureDatabase::default(), &cfg(Method::Exact)).unwrap().measures.q;
        let used: BTreeMap<String, f64> = p.into_iter().filter(|(e, _)| cs.cut_sets.iter().flatten().any(|x| x == e)).collect();
        let reference = truth_table_q(&cs.cut_sets, &used);
        prop_assert!((exact - reference).abs() <= 1e-12, "exact {exact} vs {reference}");
    }
}

/// Swapping HI and LO on every channel and moving from the hazard-side to
/// the normal-side intended readings maps each DU scenario of the corpus to
/// an ST scenario. Magnitudes are absolute and shared by all deviated
/// channels.
#[test]
fn du_scenarios_mirror_into_st_scenarios() {
    let p = corpus::drum_level_program();
    let hazard = OracleConfig::for_target(&p, "SIF_OUT", Mode::T, None).unwrap();
    let normal = OracleConfig::for_target(&p, "SIF_OUT", Mode::F, None).unwrap();
    let channels: Vec<String> = hazard.intended.keys().cloned().collect();
    let all = [ChannelState::Healthy, ChannelState::Faulty, ChannelState::Hi, ChannelState::Lo];
    let mirror = |s: ChannelState| match s {
        ChannelState::Hi => ChannelState::Lo,
        ChannelState::Lo => ChannelState::Hi,
        other => other,
    };
    let mut du = 0;
    for code in 0..4usize.pow(channels.len() as u32) {
        for delta in [1.0, 5.0, 15.0, 50.0, 150.0] {
            let (mut a, mut b, mut mags) = (BTreeMap::new(), BTreeMap::new(), BTreeMap::new());
            for (i, c) in channels.iter().enumerate() {
                let s = all[code >> (2 * i) & 3];
                a.insert(c.clone(), s);
                b.insert(c.clone(), mirror(s));
                if matches!(s, ChannelState::Hi | ChannelState::Lo) {
                    mags.insert(c.clone(), delta);
                }
            }
            let a = Scenario::new(a, mags.clone()).unwrap();
            if run_scenario(&p, &a, &hazard).unwrap()["SIF_OUT"] != Some(Mode::T) {
                continue;
            }
            du += 1;
            let b = Scenario::new(b, mags).unwrap();
            assert_eq!(
                run_scenario(&p, &b, &normal).unwrap()["SIF_OUT"],
                Some(Mode::F),
                "mirror of {:?} at {delta}",
                a.states
            );
        }
    }
    assert!(du > 0);
}

fn single_block(block_type: &str, arity: usize, params: serde_json::Value) -> fmr_core::fbd::Program {
    let channels: Vec<_> = (0..arity)
        .map(|i| serde_json::json!({"id": format!("C{i}"), "value": format!("v{i}"), "flag": format!("f{i}")}))
        .collect();
    let doc = serde_json::json!({
        "channels": channels,
        "blocks": [{"id": "b", "type": block_type, "params": params, "in": (0..arity).map(|i| format!("v{i}")).collect::<Vec<_>>(), "out": "y"}],
        "outputs": {"Y": "y"},
    });
    parse_program(&doc.to_string()).unwrap()
}

fn monotone_block() -> impl Strategy<Value = fmr_core::fbd::Program> {
    prop_oneof![
        (1usize..=4, 0usize..4).prop_map(|(n, t)| single_block(["ADD", "AVG", "MIN", "MAX"][t], n.max(2), serde_json::json!({}))),
        Just(single_block("SUB", 2, serde_json::json!({}))),
        (1e-3..1e3f64).prop_map(|k| single_block("MUL_CONST", 1, serde_json::json!({"k": k}))),
        (1e-3..10.0f64, -100.0..100.0f64).prop_map(|(k, p0)| single_block("CORRECT", 2, serde_json::json!({"k": k, "p0": p0}))),
    ]
}

proptest! {
    #[test]
    fn monotone_blocks_follow_their_declared_direction(
        p in monotone_block(),
        values in proptest::collection::vec(-1e3..1e3f64, 4),
        port in 0usize..4,
        step in 1e-6..1e3f64,
    ) {
        use fmr_core::fbd::{evaluate, ChannelReading, Monotonicity};
        let block = &p.blocks[0];
        let port = port % block.inputs.len();
        let reading = |bump: f64| {
            ChannelReading::healthy(
                (0..block.inputs.len())
                    .map(|i| (format!("C{i}"), values[i] + if i == port { bump } else { 0.0 }))
                    .collect(),
            )
        };
        let before = evaluate(&p, &reading(0.0)).unwrap()["y"].as_real().unwrap();
        let again = evaluate(&p, &reading(0.0)).unwrap()["y"].as_real().unwrap();
        prop_assert_eq!(before.to_bits(), again.to_bits());
        let after = evaluate(&p, &reading(step)).unwrap()["y"].as_real().unwrap();
        match block.block_type.inputs[port].monotonicity {
            Monotonicity::Inc => prop_assert!(after >= before, "{} port {port}: {before} -> {after}", block.block_type.name),
            Monotonicity::Dec => prop_assert!(after <= before, "{} port {port}: {before} -> {after}", block.block_type.name),
            Monotonicity::None => {}
        }
    }
}
