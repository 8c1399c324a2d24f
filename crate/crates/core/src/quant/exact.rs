//! Exact top-event measures by Shannon expansion over distinct events.

use std::collections::{BTreeSet, HashMap};

use super::{FailureDatabase, QuantConfig, QuantError, EXACT_EVENT_LIMIT};

/// `(Q, W)` of the union of the cut sets. `W` is the sum over events of the
/// event frequency times the probability that the event is critical.
pub(super) fn exact_measures(
    cut_sets: &[Vec<&str>],
    db: &FailureDatabase,
    cfg: &QuantConfig,
) -> Result<(f64, f64), QuantError> {
    let events: Vec<&str> = cut_sets
        .iter()
        .flatten()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if events.len() > EXACT_EVENT_LIMIT {
        return Err(QuantError::TooManyEvents {
            count: events.len(),
            limit: EXACT_EVENT_LIMIT,
        });
    }
    let measures = events
        .iter()
        .map(|e| db.measures(e, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let masks: Vec<u32> = cut_sets
        .iter()
        .map(|c| {
            c.iter()
                .map(|e| 1u32 << events.binary_search(e).expect("event indexed"))
                .fold(0, |a, b| a | b)
        })
        .collect();

    let mut s = Shannon {
        q: measures.iter().map(|m| m.q).collect(),
        memo: HashMap::new(),
    };
    let q = s.prob(masks.clone());
    let mut w = 0.0;
    for (i, m) in measures.iter().enumerate() {
        if m.w == 0.0 {
            continue;
        }
        let bit = 1u32 << i;
        let on = s.prob(masks.iter().map(|&c| c & !bit).collect());
        let off = s.prob(masks.iter().copied().filter(|&c| c & bit == 0).collect());
        w += m.w * (on - off);
    }
    Ok((q, w))
}

struct Shannon {
    q: Vec<f64>,
    memo: HashMap<Vec<u32>, f64>,
}

impl Shannon {
    fn prob(&mut self, sets: Vec<u32>) -> f64 {
        if sets.is_empty() {
            return 0.0;
        }
        if sets.contains(&0) {
            return 1.0;
        }
        let sets = absorb(sets);
        if let Some(&p) = self.memo.get(&sets) {
            return p;
        }
        let pivot = (0..32)
            .max_by_key(|&b| sets.iter().filter(|&&c| c & (1 << b) != 0).count())
            .expect("non-empty range");
        let bit = 1u32 << pivot;
        let on: Vec<u32> = sets.iter().map(|&c| c & !bit).collect();
        let off: Vec<u32> = sets.iter().copied().filter(|&c| c & bit == 0).collect();
        let qv = self.q[pivot];
        let p = qv * self.prob(on) + (1.0 - qv) * self.prob(off);
        self.memo.insert(sets, p);
        p
    }
}

/// Sorted, deduplicated, with supersets removed.
fn absorb(mut sets: Vec<u32>) -> Vec<u32> {
    sets.sort_by_key(|c| (c.count_ones(), *c));
    sets.dedup();
    let mut kept: Vec<u32> = Vec::with_capacity(sets.len());
    for c in sets {
        if !kept.iter().any(|&k| k & !c == 0) {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    kept
}
