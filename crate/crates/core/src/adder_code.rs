//! Feedback codes for the binary adder channel and two-set group testing
//! strategies, with the bijection between them.
//!
//! A history is the string of past channel outputs, one digit in `0..=2` per
//! round. Round `k` tables are keyed by histories of length `k`.
//!
//! File formats (JSON):
//!
//! ```text
//! code:     {"m1": 2, "m2": 2, "n_uses": 2,
//!            "encoder1": [{"": [0, 1]}, {"0": [0, 0], "1": [0, 1], "2": [0, 0]}],
//!            "encoder2": [...]}
//! strategy: {"n1": 2, "n2": 2, "depth": 1,
//!            "rounds": [{"": {"set1": [1], "set2": [0, 1]}}]}
//! ```
//!
//! A strategy with `n2 = 0` is a single-set strategy: it tests subsets of one
//! ground set and leaves `set2` empty.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Encoder tables: one map per round from history to a bit per message.
pub type EncoderTable = Vec<BTreeMap<String, Vec<u8>>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackCode {
    pub m1: usize,
    pub m2: usize,
    pub n_uses: usize,
    pub encoder1: EncoderTable,
    pub encoder2: EncoderTable,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TestPair {
    pub set1: Vec<usize>,
    pub set2: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategy {
    pub n1: usize,
    pub n2: usize,
    pub depth: usize,
    pub rounds: Vec<BTreeMap<String, TestPair>>,
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedCode(msg.into())
}

fn check_history(round: usize, h: &str) -> Result<()> {
    if h.len() != round || !h.bytes().all(|c| (b'0'..=b'2').contains(&c)) {
        return Err(malformed(format!(
            "round {} key {h:?} is not a history of length {round} over 0-2",
            round + 1
        )));
    }
    Ok(())
}

fn check_encoder(name: &str, table: &EncoderTable, m: usize, n_uses: usize) -> Result<()> {
    if table.len() != n_uses {
        return Err(malformed(format!(
            "{name} has {} rounds, expected {n_uses}",
            table.len()
        )));
    }
    for (k, round) in table.iter().enumerate() {
        for (h, bits) in round {
            check_history(k, h)?;
            if bits.len() != m {
                return Err(malformed(format!(
                    "{name} round {} history {h:?}: {} bits for {m} messages",
                    k + 1,
                    bits.len()
                )));
            }
            if bits.iter().any(|&b| b > 1) {
                return Err(malformed(format!("{name} contains a non-binary symbol")));
            }
        }
    }
    Ok(())
}

fn digit(y: u8) -> char {
    (b'0' + y) as char
}

impl FeedbackCode {
    pub fn validate(&self) -> Result<()> {
        if self.m1 == 0 || self.m2 == 0 {
            return Err(malformed("message sets must be nonempty"));
        }
        check_encoder("encoder1", &self.encoder1, self.m1, self.n_uses)?;
        check_encoder("encoder2", &self.encoder2, self.m2, self.n_uses)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let code: FeedbackCode = serde_json::from_str(s)?;
        code.validate()?;
        Ok(code)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Channel outputs for messages `(w1, w2)`, with feedback threaded through
/// the encoder tables.
pub fn simulate(code: &FeedbackCode, w1: usize, w2: usize) -> Result<Vec<u8>> {
    if w1 >= code.m1 || w2 >= code.m2 {
        return Err(Error::domain(format!(
            "messages ({w1}, {w2}) out of range ({}, {})",
            code.m1, code.m2
        )));
    }
    let mut hist = String::with_capacity(code.n_uses);
    let mut out = Vec::with_capacity(code.n_uses);
    for k in 0..code.n_uses {
        let look = |table: &EncoderTable, w: usize| -> Result<u8> {
            let bits = table[k].get(&hist).ok_or_else(|| {
                malformed(format!("no entry for history {hist:?} in round {}", k + 1))
            })?;
            bits.get(w)
                .copied()
                .ok_or_else(|| malformed(format!("history {hist:?} has too few bits")))
        };
        let y = look(&code.encoder1, w1)? + look(&code.encoder2, w2)?;
        out.push(y);
        hist.push(digit(y));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Decodability {
    pub uniquely_decodable: bool,
    /// Two message pairs with the same output sequence.
    pub counterexample: Option<((usize, usize), (usize, usize))>,
}

/// Exhaustive check that all `m1 · m2` output sequences differ.
pub fn is_uniquely_decodable(code: &FeedbackCode) -> Result<Decodability> {
    code.validate()?;
    let mut seen: HashMap<Vec<u8>, (usize, usize)> = HashMap::new();
    for w1 in 0..code.m1 {
        for w2 in 0..code.m2 {
            let y = simulate(code, w1, w2)?;
            if let Some(&first) = seen.get(&y) {
                return Ok(Decodability {
                    uniquely_decodable: false,
                    counterexample: Some((first, (w1, w2))),
                });
            }
            seen.insert(y, (w1, w2));
        }
    }
    Ok(Decodability {
        uniquely_decodable: true,
        counterexample: None,
    })
}

fn check_set(name: &str, set: &[usize], n: usize) -> Result<()> {
    if set.windows(2).any(|w| w[0] >= w[1]) {
        return Err(malformed(format!("{name} must be strictly increasing")));
    }
    if set.last().is_some_and(|&v| v >= n) {
        return Err(malformed(format!("{name} has an index outside 0..{n}")));
    }
    Ok(())
}

impl Strategy {
    pub fn validate(&self) -> Result<()> {
        if self.rounds.len() != self.depth {
            return Err(malformed(format!(
                "strategy has {} rounds, depth is {}",
                self.rounds.len(),
                self.depth
            )));
        }
        for (k, round) in self.rounds.iter().enumerate() {
            for (h, t) in round {
                check_history(k, h)?;
                check_set("set1", &t.set1, self.n1)?;
                check_set("set2", &t.set2, self.n2)?;
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let st: Strategy = serde_json::from_str(s)?;
        st.validate()?;
        Ok(st)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Test results when the defectives are `w1` in set 1 and `w2` in set 2.
    ///
    /// For a single-set strategy, `w1` and `w2` are the two defectives of
    /// the one ground set and both are checked against `set1`.
    pub fn results(&self, w1: usize, w2: usize) -> Result<Vec<u8>> {
        let mut hist = String::with_capacity(self.depth);
        let mut out = Vec::with_capacity(self.depth);
        for (k, round) in self.rounds.iter().enumerate() {
            let t = round.get(&hist).ok_or_else(|| {
                malformed(format!("no test for history {hist:?} in round {}", k + 1))
            })?;
            let second = if self.n2 == 0 { &t.set1 } else { &t.set2 };
            let y = t.set1.binary_search(&w1).is_ok() as u8
                + second.binary_search(&w2).is_ok() as u8;
            out.push(y);
            hist.push(digit(y));
        }
        Ok(out)
    }

    /// Every candidate produces a distinct result sequence.
    pub fn identifies(&self) -> Result<bool> {
        let mut seen = std::collections::HashSet::new();
        let pairs: Vec<(usize, usize)> = if self.n2 == 0 {
            (0..self.n1)
                .flat_map(|i| (i + 1..self.n1).map(move |j| (i, j)))
                .collect()
        } else {
            (0..self.n1)
                .flat_map(|i| (0..self.n2).map(move |j| (i, j)))
                .collect()
        };
        for (i, j) in pairs {
            if !seen.insert(self.results(i, j)?) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// A two-set strategy with a uniformly random test at every history.
    pub fn random<R: Rng + ?Sized>(n1: usize, n2: usize, depth: usize, rng: &mut R) -> Self {
        let subset = |n: usize, rng: &mut R| (0..n).filter(|_| rng.gen::<bool>()).collect();
        let mut rounds = Vec::with_capacity(depth);
        let mut hists = vec![String::new()];
        for _ in 0..depth {
            let mut round = BTreeMap::new();
            for h in &hists {
                let t = TestPair {
                    set1: subset(n1, rng),
                    set2: subset(n2, rng),
                };
                round.insert(h.clone(), t);
            }
            rounds.push(round);
            hists = hists
                .iter()
                .flat_map(|h| (0..3).map(move |y| format!("{h}{}", digit(y))))
                .collect();
        }
        Strategy {
            n1,
            n2,
            depth,
            rounds,
        }
    }
}

fn indicator(set: &[usize], n: usize) -> Vec<u8> {
    let mut bits = vec![0u8; n];
    for &w in set {
        bits[w] = 1;
    }
    bits
}

fn preimage(bits: &[u8]) -> Vec<usize> {
    bits.iter()
        .enumerate()
        .filter(|(_, &b)| b == 1)
        .map(|(w, _)| w)
        .collect()
}

/// Encoders sending the indicator of membership in the tested subset.
pub fn strategy_to_code(s: &Strategy) -> Result<FeedbackCode> {
    s.validate()?;
    if s.n1 == 0 || s.n2 == 0 {
        return Err(malformed("only two-set strategies correspond to codes"));
    }
    let mut encoder1 = Vec::with_capacity(s.depth);
    let mut encoder2 = Vec::with_capacity(s.depth);
    for round in &s.rounds {
        encoder1.push(
            round
                .iter()
                .map(|(h, t)| (h.clone(), indicator(&t.set1, s.n1)))
                .collect(),
        );
        encoder2.push(
            round
                .iter()
                .map(|(h, t)| (h.clone(), indicator(&t.set2, s.n2)))
                .collect(),
        );
    }
    Ok(FeedbackCode {
        m1: s.n1,
        m2: s.n2,
        n_uses: s.depth,
        encoder1,
        encoder2,
    })
}

/// Decision functions `d_k(history) = {w : e_k(history, w) = 1}`.
pub fn code_to_strategy(code: &FeedbackCode) -> Result<Strategy> {
    code.validate()?;
    let mut rounds = Vec::with_capacity(code.n_uses);
    for (r1, r2) in code.encoder1.iter().zip(&code.encoder2) {
        let mut round = BTreeMap::new();
        for h in r1.keys().chain(r2.keys()) {
            if round.contains_key(h) {
                continue;
            }
            let set1 = r1.get(h).map(|b| preimage(b)).unwrap_or_default();
            let set2 = r2.get(h).map(|b| preimage(b)).unwrap_or_default();
            round.insert(h.clone(), TestPair { set1, set2 });
        }
        rounds.push(round);
    }
    Ok(Strategy {
        n1: code.m1,
        n2: code.m2,
        depth: code.n_uses,
        rounds,
    })
}

/// The (2, 2, 2) code: both senders send their bit, then on output 1
/// sender 1 repeats its bit.
pub fn canonical_two_by_two() -> FeedbackCode {
    let r = |pairs: &[(&str, [u8; 2])]| -> BTreeMap<String, Vec<u8>> {
        pairs.iter().map(|(h, b)| (h.to_string(), b.to_vec())).collect()
    };
    FeedbackCode {
        m1: 2,
        m2: 2,
        n_uses: 2,
        encoder1: vec![
            r(&[("", [0, 1])]),
            r(&[("0", [0, 0]), ("1", [0, 1]), ("2", [0, 0])]),
        ],
        encoder2: vec![
            r(&[("", [0, 1])]),
            r(&[("0", [0, 0]), ("1", [0, 0]), ("2", [0, 0])]),
        ],
    }
}
