//! Domain types shared by every other module: probability mass functions,
//! instances (a pair of pmfs over the same alphabet), words, and the seeded
//! RNG configuration used for reproducible Monte Carlo.

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde_json::Value;
use thiserror::Error;

use crate::scalar::{parse_rational, rational_string};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("pmf entry {index} is not strictly positive ({value})")]
    NonPositiveMass { index: usize, value: String },
    #[error("pmf does not sum to one (sum = {sum})")]
    NotNormalized { sum: String },
    #[error("alphabet needs at least two letters, got {0}")]
    TooShort(usize),
    #[error("pmf lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("letter {letter} outside alphabet 1..={m}")]
    BadLetter { letter: usize, m: usize },
    #[error("malformed instance JSON: {0}")]
    BadJson(String),
}

/// Sum tolerance for float-mode pmfs. Exact pmfs must sum to one exactly.
pub const PMF_SUM_TOL: f64 = 1e-12;

/// A probability mass function over `{1..m}` with strictly positive entries.
///
/// Keeps the exact rational representation when one was supplied, so the
/// analysis layer can run in exact arithmetic; the `f64` view is always
/// available for simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
    exact: Option<Vec<BigRational>>,
}

impl Pmf {
    /// Validate a float pmf: strictly positive entries summing to one within
    /// [`PMF_SUM_TOL`], at least two letters.
    pub fn from_f64s(probs: &[f64]) -> Result<Self, ModelError> {
        if probs.len() < 2 {
            return Err(ModelError::TooShort(probs.len()));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !(p > 0.0) {
                return Err(ModelError::NonPositiveMass { index: i, value: p.to_string() });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PMF_SUM_TOL {
            return Err(ModelError::NotNormalized { sum: sum.to_string() });
        }
        Ok(Pmf { probs: probs.to_vec(), exact: None })
    }

    /// Validate an exact pmf: entries must sum to one exactly.
    pub fn from_rationals(probs: Vec<BigRational>) -> Result<Self, ModelError> {
        if probs.len() < 2 {
            return Err(ModelError::TooShort(probs.len()));
        }
        for (i, p) in probs.iter().enumerate() {
            if !(p > &BigRational::zero()) {
                return Err(ModelError::NonPositiveMass { index: i, value: rational_string(p) });
            }
        }
        let sum: BigRational = probs.iter().cloned().sum();
        if !sum.is_one() {
            return Err(ModelError::NotNormalized { sum: rational_string(&sum) });
        }
        let floats = probs.iter().map(|p| p.to_f64().unwrap_or(f64::NAN)).collect();
        Ok(Pmf { probs: floats, exact: Some(probs) })
    }

    /// Build from integer weights, normalizing exactly.
    pub fn from_weights(weights: &[u64]) -> Result<Self, ModelError> {
        let total: u64 = weights.iter().sum();
        let probs = weights
            .iter()
            .map(|&w| BigRational::new(w.into(), total.into()))
            .collect();
        Pmf::from_rationals(probs)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn exact(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }
}

/// Validate a float pmf (free-function form of [`Pmf::from_f64s`]).
pub fn validate_pmf(probs: &[f64]) -> Result<Pmf, ModelError> {
    Pmf::from_f64s(probs)
}

/// A pair of pmfs over the same alphabet `{1..m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub px: Pmf,
    pub py: Pmf,
}

impl Instance {
    pub fn new(px: Pmf, py: Pmf) -> Result<Self, ModelError> {
        if px.len() != py.len() {
            return Err(ModelError::LengthMismatch(px.len(), py.len()));
        }
        Ok(Instance { px, py })
    }

    /// Alphabet size.
    pub fn m(&self) -> usize {
        self.px.len()
    }

    /// Both marginals carry exact rationals.
    pub fn is_exact(&self) -> bool {
        self.px.is_exact() && self.py.is_exact()
    }

    /// Parse `{"pX": [...], "pY": [...]}`. Entries may be JSON numbers
    /// (float mode) or strings like `"3/8"` / `"0.375"` (exact mode; the
    /// instance is exact only if every entry of both pmfs is a string).
    pub fn from_json(json: &Value) -> Result<Self, ModelError> {
        let obj = json.as_object().ok_or_else(|| ModelError::BadJson("expected object".into()))?;
        let px = parse_pmf_json(
            obj.get("pX").ok_or_else(|| ModelError::BadJson("missing pX".into()))?,
        )?;
        let py = parse_pmf_json(
            obj.get("pY").ok_or_else(|| ModelError::BadJson("missing pY".into()))?,
        )?;
        Instance::new(px, py)
    }

    pub fn from_json_str(s: &str) -> Result<Self, ModelError> {
        let v: Value = serde_json::from_str(s).map_err(|e| ModelError::BadJson(e.to_string()))?;
        Instance::from_json(&v)
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({ "pX": pmf_json(&self.px), "pY": pmf_json(&self.py) })
    }

    /// Both mass vectors as floats.
    pub fn masses_f64(&self) -> (Vec<f64>, Vec<f64>) {
        (self.px.probs().to_vec(), self.py.probs().to_vec())
    }

    /// Both mass vectors as exact rationals, when available.
    pub fn masses_exact(&self) -> Option<(Vec<BigRational>, Vec<BigRational>)> {
        Some((self.px.exact()?.to_vec(), self.py.exact()?.to_vec()))
    }

    /// FNV-1a hash of the canonical JSON form, used to tag sample sets.
    pub fn hash(&self) -> u64 {
        let bytes = self.to_json().to_string().into_bytes();
        let mut h: u64 = 0xcbf29ce484222325;
        for b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

fn parse_pmf_json(v: &Value) -> Result<Pmf, ModelError> {
    let arr = v.as_array().ok_or_else(|| ModelError::BadJson("pmf must be an array".into()))?;
    let all_strings = !arr.is_empty() && arr.iter().all(|e| e.is_string());
    if all_strings {
        let mut probs = Vec::with_capacity(arr.len());
        for e in arr {
            let s = e.as_str().unwrap();
            let q = parse_rational(s)
                .ok_or_else(|| ModelError::BadJson(format!("bad rational literal {s:?}")))?;
            probs.push(q);
        }
        Pmf::from_rationals(probs)
    } else {
        let mut probs = Vec::with_capacity(arr.len());
        for e in arr {
            let p = e
                .as_f64()
                .ok_or_else(|| ModelError::BadJson(format!("bad pmf entry {e}")))?;
            probs.push(p);
        }
        Pmf::from_f64s(&probs)
    }
}

fn pmf_json(p: &Pmf) -> Value {
    match p.exact() {
        Some(qs) => Value::Array(qs.iter().map(|q| Value::String(rational_string(q))).collect()),
        None => serde_json::json!(p.probs()),
    }
}

/// A word over `{1..m}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    letters: Vec<u8>,
    m: usize,
}

impl Word {
    pub fn new(letters: Vec<u8>, m: usize) -> Result<Self, ModelError> {
        if m < 2 {
            return Err(ModelError::TooShort(m));
        }
        for &l in &letters {
            if l == 0 || l as usize > m {
                return Err(ModelError::BadLetter { letter: l as usize, m });
            }
        }
        Ok(Word { letters, m })
    }

    /// Parse the CLI form: a digit string for `m <= 9` (`"1122"`), a
    /// comma-separated list otherwise (`"1,12,3"`).
    pub fn parse(s: &str, m: usize) -> Result<Self, ModelError> {
        if s.is_empty() {
            return Word::new(Vec::new(), m);
        }
        let letters: Result<Vec<u8>, ModelError> = if s.contains(',') {
            s.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<u8>()
                        .map_err(|_| ModelError::BadLetter { letter: 0, m })
                })
                .collect()
        } else {
            s.chars()
                .map(|c| {
                    c.to_digit(10)
                        .map(|d| d as u8)
                        .ok_or(ModelError::BadLetter { letter: 0, m })
                })
                .collect()
        };
        Word::new(letters?, m)
    }

    pub fn letters(&self) -> &[u8] {
        &self.letters
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.m <= 9 {
            for &l in &self.letters {
                write!(f, "{l}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.letters.iter().map(|l| l.to_string()).collect();
            write!(f, "{}", parts.join(","))
        }
    }
}

/// Seed plus stream id. Identical configurations reproduce identical output
/// bit for bit; parallel workers take distinct streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngConfig {
    pub seed: u64,
    pub stream: u64,
}

impl RngConfig {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngConfig { seed, stream }
    }

    /// Derive a child configuration. Used to give each replicate, and each
    /// marginal within a replicate, its own independent stream.
    pub fn substream(&self, salt: u64) -> Self {
        RngConfig { seed: self.seed, stream: splitmix64(self.stream ^ splitmix64(salt)) }
    }

    /// Instantiate the generator. The 32-byte ChaCha key is derived from
    /// (seed, stream) with a splitmix64 chain, so the mapping is stable
    /// regardless of the rand_chacha stream API.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut key = [0u8; 32];
        let mut state = splitmix64(self.seed) ^ splitmix64(self.stream.wrapping_add(0x9e3779b97f4a7c15));
        for chunk in key.chunks_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        ChaCha12Rng::from_seed(key)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Draw `n` i.i.d. letters with law `pmf`.
pub fn sample_word(pmf: &Pmf, n: usize, rng: &RngConfig) -> Word {
    let mut r = rng.rng();
    sample_word_with(pmf, n, &mut r)
}

/// Same as [`sample_word`], reusing a live generator.
pub fn sample_word_with(pmf: &Pmf, n: usize, rng: &mut ChaCha12Rng) -> Word {
    let probs = pmf.probs();
    let mut letters = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut letter = probs.len() as u8;
        for (i, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                letter = (i + 1) as u8;
                break;
            }
        }
        letters.push(letter);
    }
    Word { letters, m: probs.len() }
}
