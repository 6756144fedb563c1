//! Deterministic train/validation/test partitions.
//!
//! Part sizes follow a largest-remainder allocation, per class when
//! stratified. Classes are allocated in name order (`chatgpt`, `human`); a
//! tie between parts with equal remainders goes to the part furthest below
//! its overall target, then to the earlier part. Pair-aware splits keep every
//! snippet sharing a pairing key in the same part.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::snippet::{Origin, Snippet};

pub const PARTS: [Part; 3] = [Part::Train, Part::Validation, Part::Test];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Train,
    Validation,
    Test,
}

impl std::str::FromStr for Part {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Part::Train),
            "validation" | "val" => Ok(Part::Validation),
            "test" => Ok(Part::Test),
            other => Err(format!("unknown split part `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SplitError {
    #[error("split ratios must be three positive integers summing to 100, got {0:?}")]
    InvalidRatios([u32; 3]),
    #[error("cannot keep pairs together and stratify: {0}")]
    StratificationInfeasible(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitOptions {
    pub ratios: [u32; 3],
    pub seed: u64,
    pub stratified: bool,
    pub pair_aware: bool,
}

impl SplitOptions {
    /// 80:10:10, stratified, seed 42, pair-aware exactly when the corpus is paired.
    pub fn for_corpus(corpus: &Corpus) -> Self {
        SplitOptions { ratios: [80, 10, 10], seed: 42, stratified: true, pair_aware: corpus.provenance().is_paired() }
    }
}

/// Parses `80:10:10`.
pub fn parse_ratios(s: &str) -> Result<[u32; 3], String> {
    let parts: Vec<u32> = s
        .split(':')
        .map(|p| p.trim().parse::<u32>().map_err(|e| format!("bad ratio `{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    <[u32; 3]>::try_from(parts).map_err(|p| format!("expected three ratios, got {}", p.len()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
    pub ratios: [u32; 3],
    pub seed: u64,
    pub stratified: bool,
    pub pair_aware: bool,
}

impl DatasetSplit {
    pub fn part(&self, part: Part) -> &[String] {
        match part {
            Part::Train => &self.train,
            Part::Validation => &self.validation,
            Part::Test => &self.test,
        }
    }

    pub fn sizes(&self) -> [usize; 3] {
        [self.train.len(), self.validation.len(), self.test.len()]
    }

    pub fn part_of(&self, id: &str) -> Option<Part> {
        PARTS.into_iter().find(|&p| self.part(p).iter().any(|x| x == id))
    }

    /// Snippets of one part, in the part's id order. Ids unknown to the corpus are skipped.
    pub fn select<'a>(&self, corpus: &'a Corpus, part: Part) -> Vec<&'a Snippet> {
        let index = corpus.by_id();
        self.part(part).iter().filter_map(|id| index.get(id.as_str()).copied()).collect()
    }
}

/// Largest-remainder allocation of `n` items over the ratios.
/// `deficit` ranks parts with equal remainders (larger first).
fn allocate(n: usize, ratios: [u32; 3], deficit: impl Fn(usize) -> i64) -> [usize; 3] {
    let mut sizes = [0usize; 3];
    let mut remainders = [0u64; 3];
    for p in 0..3 {
        let exact = n as u64 * ratios[p] as u64;
        sizes[p] = (exact / 100) as usize;
        remainders[p] = exact % 100;
    }
    let leftover = n - sizes.iter().sum::<usize>();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| remainders[b].cmp(&remainders[a]).then(deficit(b).cmp(&deficit(a))).then(a.cmp(&b)));
    for &p in order.iter().take(leftover) {
        sizes[p] += 1;
    }
    sizes
}

/// Per-class part sizes: `targets[class][part]`.
fn class_targets(counts: &BTreeMap<Origin, usize>, ratios: [u32; 3]) -> BTreeMap<Origin, [usize; 3]> {
    let total: usize = counts.values().sum();
    let overall = allocate(total, ratios, |_| 0);
    let mut allocated = [0usize; 3];
    let mut by_name: Vec<Origin> = counts.keys().copied().collect();
    by_name.sort_by_key(|o| o.as_str());
    let mut out = BTreeMap::new();
    for origin in by_name {
        let n = counts[&origin];
        let mut floors = [0usize; 3];
        for p in 0..3 {
            floors[p] = n * ratios[p] as usize / 100;
        }
        let sizes = allocate(n, ratios, |p| overall[p] as i64 - (allocated[p] + floors[p]) as i64);
        for p in 0..3 {
            allocated[p] += sizes[p];
        }
        out.insert(origin, sizes);
    }
    out
}

fn seeded_order<T>(mut items: Vec<T>, seed: u64) -> Vec<T> {
    items.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    items
}

pub fn split(corpus: &Corpus, options: &SplitOptions) -> Result<DatasetSplit, SplitError> {
    let ratios = options.ratios;
    if ratios.contains(&0) || ratios.iter().sum::<u32>() != 100 {
        return Err(SplitError::InvalidRatios(ratios));
    }
    let mut parts: [Vec<String>; 3] = Default::default();

    if options.pair_aware {
        assign_groups(corpus, options, &mut parts)?;
    } else if options.stratified {
        let mut counts = BTreeMap::new();
        for s in corpus.snippets() {
            *counts.entry(s.origin()).or_insert(0) += 1;
        }
        let targets = class_targets(&counts, ratios);
        for (origin, sizes) in targets {
            let mut ids: Vec<&str> = corpus.snippets().iter().filter(|s| s.origin() == origin).map(Snippet::id).collect();
            ids.sort_unstable();
            let ids = seeded_order(ids, options.seed ^ origin.index() as u64);
            let mut rest = ids.as_slice();
            for p in 0..3 {
                let (head, tail) = rest.split_at(sizes[p]);
                parts[p].extend(head.iter().map(|s| s.to_string()));
                rest = tail;
            }
        }
    } else {
        let mut ids: Vec<&str> = corpus.snippets().iter().map(Snippet::id).collect();
        ids.sort_unstable();
        let ids = seeded_order(ids, options.seed);
        let sizes = allocate(ids.len(), ratios, |_| 0);
        let mut rest = ids.as_slice();
        for p in 0..3 {
            let (head, tail) = rest.split_at(sizes[p]);
            parts[p].extend(head.iter().map(|s| s.to_string()));
            rest = tail;
        }
    }

    for p in parts.iter_mut() {
        p.sort_unstable();
    }
    let [train, validation, test] = parts;
    Ok(DatasetSplit { train, validation, test, ratios, seed: options.seed, stratified: options.stratified, pair_aware: options.pair_aware })
}

/// A unit that must land in one part: a pairing-key group, or a lone snippet.
struct Unit {
    ids: Vec<String>,
    per_class: [usize; 2],
}

impl Unit {
    fn len(&self) -> usize {
        self.ids.len()
    }
}

fn assign_groups(corpus: &Corpus, options: &SplitOptions, parts: &mut [Vec<String>; 3]) -> Result<(), SplitError> {
    let mut keyed: BTreeMap<&str, Unit> = BTreeMap::new();
    let mut units = Vec::new();
    let mut sorted: Vec<&Snippet> = corpus.snippets().iter().collect();
    sorted.sort_by(|a, b| a.id().cmp(b.id()));
    for s in sorted {
        let unit = match s.pairing_key() {
            Some(key) => keyed.entry(key).or_insert_with(|| Unit { ids: Vec::new(), per_class: [0; 2] }),
            None => {
                units.push(Unit { ids: Vec::new(), per_class: [0; 2] });
                units.last_mut().unwrap()
            }
        };
        unit.ids.push(s.id().to_string());
        unit.per_class[s.origin().index()] += 1;
    }
    // Keyed groups first (in key order), then loose snippets (in id order).
    let mut all: Vec<Unit> = keyed.into_values().collect();
    all.extend(units);
    let mut all = seeded_order(all, options.seed);
    // Bigger units are harder to place, so they go first.
    all.sort_by_key(|g| std::cmp::Reverse(g.len()));

    // targets[part][class]; a single pseudo-class when not stratified.
    let mut targets = [[0usize; 2]; 3];
    if options.stratified {
        let counts: BTreeMap<Origin, usize> = Origin::ALL.iter().map(|&o| (o, corpus.counts().get(o))).collect();
        for (origin, sizes) in class_targets(&counts, options.ratios) {
            for p in 0..3 {
                targets[p][origin.index()] = sizes[p];
            }
        }
    } else {
        let sizes = allocate(corpus.len(), options.ratios, |_| 0);
        for p in 0..3 {
            targets[p][0] = sizes[p];
        }
    }
    let need = |u: &Unit| -> [usize; 2] {
        if options.stratified {
            u.per_class
        } else {
            [u.len(), 0]
        }
    };

    let mut remaining = targets;
    for unit in all {
        let want = need(&unit);
        let fill = |p: usize, rem: &[[usize; 2]; 3]| -> f64 {
            let t: usize = targets[p].iter().sum();
            if t == 0 {
                -1.0
            } else {
                rem[p].iter().sum::<usize>() as f64 / t as f64
            }
        };
        let fits = |p: usize| (0..2).all(|c| remaining[p][c] >= want[c]);
        let chosen = (0..3)
            .filter(|&p| fits(p))
            .max_by(|&a, &b| fill(a, &remaining).total_cmp(&fill(b, &remaining)).then(b.cmp(&a)))
            .unwrap_or_else(|| {
                let overflow = |p: usize| (0..2).map(|c| want[c].saturating_sub(remaining[p][c])).sum::<usize>();
                (0..3)
                    .min_by(|&a, &b| {
                        overflow(a).cmp(&overflow(b)).then(fill(b, &remaining).total_cmp(&fill(a, &remaining))).then(a.cmp(&b))
                    })
                    .unwrap()
            });
        for c in 0..2 {
            remaining[chosen][c] = remaining[chosen][c].saturating_sub(want[c]);
        }
        parts[chosen].extend(unit.ids);
    }

    if options.stratified {
        let index = corpus.by_id();
        for p in 0..3 {
            for origin in Origin::ALL {
                let got = parts[p].iter().filter(|id| index[id.as_str()].origin() == origin).count();
                let want = targets[p][origin.index()];
                if got.abs_diff(want) > 1 {
                    return Err(SplitError::StratificationInfeasible(format!(
                        "{:?} part would hold {got} {origin} snippets instead of {want}; \
                         disable stratification or pair-awareness",
                        PARTS[p]
                    )));
                }
            }
        }
    }
    Ok(())
}
