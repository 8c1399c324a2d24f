//! Random catalog programs checked against their own analyses.
//!
//! Every REAL net feeds at most one block, so a single channel deviation
//! never reaches one block along two arithmetic paths with opposite signs.
//! BOOL nets fan out freely.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_completeness, check_soundness, OracleConfig, OracleReport};
use crate::fbd::{serialize_program, Block, Channel, CompiledProgram, Demand, Profile, Program, Semantics, Value};
use crate::fmr::{analyze, Mode};

pub const SEED_ENV: &str = "FMRW_SEED";
pub const DEFAULT_SEED: u64 = 0x5eed_f00d;
pub const OUTPUT: &str = "OUT";
/// Wider than the default samples: chains of gains below one need large
/// channel deviations to cross a threshold.
pub const FUZZ_MULTIPLIERS: [f64; 4] = [0.1, 10.0, 1e3, 1e5];

/// The seed in `FMRW_SEED`, or [`DEFAULT_SEED`].
pub fn seed_from_env() -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_SEED)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzConfig {
    pub max_blocks: usize,
    pub max_channels: usize,
    pub multipliers: Vec<f64>,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            max_blocks: 12,
            max_channels: 6,
            multipliers: FUZZ_MULTIPLIERS.to_vec(),
        }
    }
}

struct Builder<'r> {
    rng: &'r mut ChaCha8Rng,
    blocks: Vec<Block>,
    /// REAL nets not yet consumed, with their intended value.
    reals: Vec<(String, f64)>,
    bools: Vec<(String, bool)>,
}

impl Builder<'_> {
    fn take_real(&mut self) -> (String, f64) {
        let i = self.rng.gen_range(0..self.reals.len());
        self.reals.swap_remove(i)
    }

    fn pick_bool(&mut self) -> (String, bool) {
        self.bools.choose(self.rng).expect("bool pool is never empty").clone()
    }

    fn emit(&mut self, semantics: Semantics, inputs: Vec<String>) -> String {
        let id = format!("b{}", self.blocks.len() + 1);
        let out = format!("n_{id}");
        self.blocks.push(Block::new(id, semantics, inputs, out.clone()));
        out
    }

    fn offset(&mut self) -> f64 {
        let mag = [0.5, 2.0, 5.0, 20.0][self.rng.gen_range(0..4)];
        if self.rng.gen_bool(0.5) {
            mag
        } else {
            -mag
        }
    }

    /// Adds one or, for SEL with its constant, two blocks within `room`.
    fn step(&mut self, room: usize) {
        let nr = self.reals.len();
        let mut options: Vec<u8> = vec![0, 1, 2];
        if nr >= 1 {
            options.extend([3, 4, 4]);
            if room >= 2 {
                options.push(5);
            }
        }
        if nr >= 2 {
            options.extend([6, 7, 8]);
        }
        match *options.choose(self.rng).expect("options never empty") {
            0 => {
                let (a, va) = self.pick_bool();
                let out = self.emit(Semantics::Not, vec![a]);
                self.bools.push((out, !va));
            }
            1 => {
                let n = self.rng.gen_range(2..=3);
                let ins: Vec<(String, bool)> = (0..n).map(|_| self.pick_bool()).collect();
                let (sem, v) = if self.rng.gen_bool(0.5) {
                    (Semantics::And, ins.iter().all(|x| x.1))
                } else {
                    (Semantics::Or, ins.iter().any(|x| x.1))
                };
                let out = self.emit(sem, ins.into_iter().map(|x| x.0).collect());
                self.bools.push((out, v));
            }
            2 => {
                let ins: Vec<(String, bool)> = (0..3).map(|_| self.pick_bool()).collect();
                let k = self.rng.gen_range(1..=3);
                let v = ins.iter().filter(|x| x.1).count() >= k;
                let out = self.emit(Semantics::Koon { k }, ins.into_iter().map(|x| x.0).collect());
                self.bools.push((out, v));
            }
            3 => {
                let (a, va) = self.take_real();
                let k = [0.5, 2.0][self.rng.gen_range(0..2)];
                let out = self.emit(Semantics::MulConst { k }, vec![a]);
                self.reals.push((out, k * va));
            }
            4 => {
                let (a, va) = self.take_real();
                let threshold = va + self.offset();
                let (sem, v) = if self.rng.gen_bool(0.5) {
                    (Semantics::Lt { threshold }, va < threshold)
                } else {
                    (Semantics::Gt { threshold }, va > threshold)
                };
                let out = self.emit(sem, vec![a]);
                self.bools.push((out, v));
            }
            5 => {
                let (s, vs) = self.pick_bool();
                let (a, va) = self.take_real();
                let c = va + self.offset();
                let cn = self.emit(Semantics::Const(Value::Real(c)), vec![]);
                let (x, y, vx, vy) = if self.rng.gen_bool(0.5) { (a, cn, va, c) } else { (cn, a, c, va) };
                let out = self.emit(Semantics::Sel, vec![s, x, y]);
                self.reals.push((out, if vs { vx } else { vy }));
            }
            _ => {
                let (a, va) = self.take_real();
                let (b, vb) = self.take_real();
                let (sem, v) = match self.rng.gen_range(0..6) {
                    0 => (Semantics::Add, va + vb),
                    1 => (Semantics::Sub, va - vb),
                    2 => (Semantics::Avg, (va + vb) / 2.0),
                    3 => (Semantics::Min, va.min(vb)),
                    4 => (Semantics::Max, va.max(vb)),
                    _ => (Semantics::Correct { k: 0.25, p0: 50.0 }, va + 0.25 * (vb - 50.0)),
                };
                let out = self.emit(sem, vec![a, b]);
                self.reals.push((out, v));
            }
        }
    }
}

/// Draws readings until the output takes the given intended value, giving
/// up after a few tries.
fn readings_for(
    rng: &mut ChaCha8Rng,
    compiled: &CompiledProgram,
    out: usize,
    first: &BTreeMap<String, f64>,
    want: bool,
) -> BTreeMap<String, f64> {
    let run = |r: &BTreeMap<String, f64>| {
        let inputs: Vec<(f64, bool)> = compiled.channel_ids().map(|c| (r[c], false)).collect();
        compiled.run(&inputs)[out].as_bool()
    };
    if run(first) == Some(want) {
        return first.clone();
    }
    let mut r = first.clone();
    for _ in 0..32 {
        for v in r.values_mut() {
            *v = (rng.gen_range(0.0..100.0_f64) * 10.0).round() / 10.0;
        }
        if run(&r) == Some(want) {
            return r;
        }
    }
    first.clone()
}

/// A random valid program with a BOOL output named [`OUTPUT`] and two
/// profiles, `demand_t` and `demand_f`, each making its mode reachable when
/// the program allows it.
pub fn generate(rng: &mut ChaCha8Rng, cfg: &FuzzConfig) -> Program {
    let nch = rng.gen_range(1..=cfg.max_channels.max(1));
    let mut channels = Vec::new();
    let mut intended = BTreeMap::new();
    let mut reals = Vec::new();
    let mut bools = Vec::new();
    for i in 1..=nch {
        let id = format!("CH{i}");
        let v = (rng.gen_range(0.0..100.0_f64) * 10.0).round() / 10.0;
        channels.push(Channel {
            id: id.clone(),
            value_net: format!("v{i}"),
            flag_net: format!("f{i}"),
        });
        intended.insert(id, v);
        reals.push((format!("v{i}"), v));
        bools.push((format!("f{i}"), false));
    }

    let nblocks = rng.gen_range(1..=cfg.max_blocks.max(2));
    let mut b = Builder {
        rng,
        blocks: Vec::new(),
        reals,
        bools,
    };
    while b.blocks.len() + 1 < nblocks {
        let room = nblocks - 1 - b.blocks.len();
        b.step(room);
    }
    // Finish with a comparison when values remain, so deviations reach the output.
    let out = if !b.reals.is_empty() && b.rng.gen_bool(0.7) {
        let (a, va) = b.take_real();
        let threshold = va + b.offset();
        b.emit(Semantics::Lt { threshold }, vec![a])
    } else {
        let ins: Vec<String> = (0..2).map(|_| b.pick_bool().0).collect();
        b.emit(Semantics::Or, ins)
    };
    let blocks = b.blocks;

    let outputs = BTreeMap::from([(OUTPUT.to_string(), out.clone())]);
    let bare = Program::new(None, channels.clone(), blocks.clone(), outputs.clone(), vec![])
        .expect("generated nets are driven once");
    let compiled = CompiledProgram::compile(&bare).expect("generated programs are valid");
    let out_idx = compiled.net_index(&out).expect("output net exists");
    let profile = |name: &str, mode: Mode, readings| Profile {
        name: name.to_string(),
        demands: vec![Demand {
            target: OUTPUT.to_string(),
            mode,
        }],
        readings,
    };
    let rt = readings_for(rng, &compiled, out_idx, &intended, false);
    let rf = readings_for(rng, &compiled, out_idx, &intended, true);
    Program::new(
        Some("fuzz".into()),
        channels,
        blocks,
        outputs,
        vec![profile("demand_t", Mode::T, rt), profile("demand_f", Mode::F, rf)],
    )
    .expect("generated nets are driven once")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzFailure {
    pub index: usize,
    pub mode: Mode,
    pub program: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completeness: Option<OracleReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soundness: Option<OracleReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub seed: u64,
    pub programs: usize,
    pub analyses: usize,
    pub cut_sets: usize,
    /// Unwitnessed cut sets excused by an analysis warning.
    pub exempt: usize,
    pub failures: Vec<FuzzFailure>,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

struct Outcome {
    cut_sets: usize,
    exempt: usize,
    failure: Option<FuzzFailure>,
}

fn check_one(index: usize, p: &Program, mode: Mode, cfg: &FuzzConfig) -> Outcome {
    let fail = |error: Option<String>, c: Option<OracleReport>, s: Option<OracleReport>| FuzzFailure {
        index,
        mode,
        program: serde_json::from_str(&serialize_program(p)).expect("serialized programs are JSON"),
        error,
        completeness: c,
        soundness: s,
    };
    let outcome = |failure| Outcome {
        cut_sets: 0,
        exempt: 0,
        failure: Some(failure),
    };
    let sl = match analyze(p, OUTPUT, mode) {
        Ok(sl) => sl,
        Err(e) => return outcome(fail(Some(e.to_string()), None, None)),
    };
    let oc = match OracleConfig::for_target(p, OUTPUT, mode, None) {
        Ok(c) => c.with_multipliers(cfg.multipliers.clone()),
        Err(e) => return outcome(fail(Some(e.to_string()), None, None)),
    };
    let checked = check_completeness(p, OUTPUT, mode, &sl, &oc)
        .and_then(|c| check_soundness(p, OUTPUT, mode, &sl, &oc).map(|s| (c, s)));
    match checked {
        Err(e) => outcome(fail(Some(e.to_string()), None, None)),
        Ok((c, s)) => Outcome {
            cut_sets: sl.cut_sets.len(),
            exempt: s.exempt.len(),
            failure: (!c.passed() || !s.passed()).then(|| fail(None, Some(c), Some(s))),
        },
    }
}

/// Generates `n` programs from `seed` and checks both BOOL modes of each.
pub fn run_fuzz(n: usize, seed: u64, cfg: &FuzzConfig) -> FuzzReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let programs: Vec<Program> = (0..n).map(|_| generate(&mut rng, cfg)).collect();
    let outcomes: Vec<Outcome> = programs
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, p)| [Mode::T, Mode::F].map(|m| check_one(i, p, m, cfg)))
        .collect();
    FuzzReport {
        seed,
        programs: n,
        analyses: outcomes.len(),
        cut_sets: outcomes.iter().map(|o| o.cut_sets).sum(),
        exempt: outcomes.iter().map(|o| o.exempt).sum(),
        failures: outcomes.into_iter().filter_map(|o| o.failure).collect(),
    }
}
