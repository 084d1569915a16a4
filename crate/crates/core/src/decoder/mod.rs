//! Maximum-likelihood decoding by contracting the code network against the noise.

mod contract;

pub use contract::{log_sum, normalize, LogValue, Plan, PlanOptions};

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::compose::{BaseCode, TensorNetworkCode};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::pauli::{Pauli, PauliString, LABEL_MUL};
use crate::stabilizer::{StabilizerCode, Syndrome};

/// Values within this relative distance of the maximum count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Index of the largest value, lowest index among near-ties, and whether a tie occurred.
pub fn argmax_with_ties(values: &[f64]) -> (usize, bool) {
    let top = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let cut = top - TIE_TOLERANCE * top.abs();
    let mut hits = values.iter().enumerate().filter(|(_, &v)| v >= cut);
    let first = hits.next().map_or(0, |(i, _)| i);
    (first, hits.next().is_some())
}

/// Fixed classes for a subset of logical qubits; the rest are summed over.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LogicalAssignment {
    fixed: BTreeMap<usize, Pauli>,
}

impl LogicalAssignment {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn single(qubit: usize, p: Pauli) -> Self {
        let mut a = Self::default();
        a.fixed.insert(qubit, p);
        a
    }

    pub fn word(targets: &[usize], labels: &[Pauli]) -> Self {
        assert_eq!(targets.len(), labels.len());
        LogicalAssignment {
            fixed: targets
                .iter()
                .copied()
                .zip(labels.iter().copied())
                .collect(),
        }
    }

    pub fn get(&self, qubit: usize) -> Option<Pauli> {
        self.fixed.get(&qubit).copied()
    }

    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.fixed.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.fixed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixed.is_empty()
    }
}

/// Support patterns of a base tensor, one list per logical class index.
#[derive(Debug)]
struct NodeSupport {
    k: usize,
    by_class: Vec<Vec<u32>>,
    all: Vec<u32>,
}

impl NodeSupport {
    fn of(code: &StabilizerCode) -> Result<Self> {
        if code.n > 16 {
            return Err(Error::SizeGuard {
                what: "legs per node tensor",
                size: code.n,
                limit: 16,
            });
        }
        if code.num_stabilizers() > 20 || code.k > 4 {
            return Err(Error::SizeGuard {
                what: "node coset size",
                size: code.num_stabilizers(),
                limit: 20,
            });
        }
        let pack = |p: &PauliString| -> u32 {
            (0..p.len())
                .map(|i| (p.get(i).label() as u32) << (2 * i))
                .sum()
        };
        let mut by_class = Vec::new();
        for c in 0..(1usize << (2 * code.k)) {
            let rep = code.logical_operator(&crate::LogicalClass::from_index(c, code.k))?;
            let mut out = Vec::with_capacity(1 << code.num_stabilizers());
            for g in 0u64..(1 << code.num_stabilizers()) {
                let mut p = rep.clone();
                for (i, s) in code.stabilizers.iter().enumerate() {
                    if (g >> i) & 1 == 1 {
                        p.mul_assign(s);
                    }
                }
                out.push(pack(&p));
            }
            out.sort_unstable();
            by_class.push(out);
        }
        let mut all: Vec<u32> = by_class.concat();
        all.sort_unstable();
        Ok(NodeSupport {
            k: code.k,
            by_class,
            all,
        })
    }
}

/// Conditional distribution of one logical qubit.
#[derive(Debug, Clone, Serialize)]
pub struct QubitMarginal {
    pub qubit: usize,
    #[serde(skip)]
    pub chi: [LogValue; 4],
    pub probs: [f64; 4],
    pub argmax: Pauli,
    pub tie: bool,
}

impl Serialize for Pauli {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.symbol().to_string())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct JointTable {
    /// prob(L | s) indexed by class word, target 0 least significant.
    pub probs: Vec<f64>,
    pub argmax: usize,
    pub tie: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecodeOutcome {
    pub targets: Vec<usize>,
    pub marginals: Vec<QubitMarginal>,
    /// Per-qubit test max prob > K/(K+1).
    pub peaked: Vec<bool>,
    pub peak_threshold: f64,
    pub word: Vec<Pauli>,
    pub joint: Option<JointTable>,
    /// prob(word | s) when computed.
    pub word_probability: Option<f64>,
}

impl DecodeOutcome {
    pub fn all_peaked(&self) -> bool {
        self.peaked.iter().all(|&b| b)
    }
}

/// Marginal probabilities of each target from a joint table over 4^K words.
pub fn marginalize(probs: &[f64], k: usize) -> Vec<[f64; 4]> {
    let mut out = vec![[0.0; 4]; k];
    for (w, &p) in probs.iter().enumerate() {
        for (i, m) in out.iter_mut().enumerate() {
            m[(w >> (2 * i)) & 3] += p;
        }
    }
    out
}

/// Exact decoder for one network; the contraction plan is built once.
pub struct Decoder<'a> {
    net: &'a TensorNetworkCode,
    plan: Plan,
    supports: Vec<Arc<NodeSupport>>,
}

impl<'a> Decoder<'a> {
    /// Largest intermediate tensor the default constructor accepts.
    pub const MAX_TENSOR_LEN: usize = 1 << 24;

    pub fn new(net: &'a TensorNetworkCode) -> Result<Self> {
        Self::with_options(net, PlanOptions::default())
    }

    pub fn with_options(net: &'a TensorNetworkCode, opts: PlanOptions) -> Result<Self> {
        let plan = Plan::new(net, opts)?;
        if plan.max_tensor_len() > Self::MAX_TENSOR_LEN {
            return Err(Error::ResourceLimit(format!(
                "contraction needs a tensor with {} entries",
                plan.max_tensor_len()
            )));
        }
        let mut cache: BTreeMap<u8, Arc<NodeSupport>> = BTreeMap::new();
        let mut supports = Vec::new();
        for t in net.nodes() {
            let key = match t.base {
                BaseCode::Steane => 0,
                BaseCode::Trivial => 1,
            };
            let s = match cache.get(&key) {
                Some(s) => s.clone(),
                None => {
                    let s = Arc::new(NodeSupport::of(&t.code)?);
                    cache.insert(key, s.clone());
                    s
                }
            };
            supports.push(s);
        }
        Ok(Decoder {
            net,
            plan,
            supports,
        })
    }

    pub fn plan(&self) -> &Plan {
        &self.plan
    }

    pub fn network(&self) -> &TensorNetworkCode {
        self.net
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.net.k() {
            return Err(Error::IndexOutOfRange {
                index: q,
                len: self.net.k(),
            });
        }
        Ok(())
    }

    /// Error consistent with `s`, from the flattened code's pure errors.
    pub fn frame(&self, s: &Syndrome) -> Result<PauliString> {
        self.net.flat()?.pure_error(s)
    }

    /// chi for the assignment, with boundary noise placed relative to `frame`.
    /// With frame = E(s) this is chi(L, s); with frame = E(s) S M it is chi(M L, s).
    pub fn chi_in_frame(
        &self,
        assign: &LogicalAssignment,
        frame: &PauliString,
        noise: &NoiseModel,
    ) -> Result<LogValue> {
        let n = self.net.n();
        if frame.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: frame.len(),
            });
        }
        if noise.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: noise.len(),
            });
        }
        for q in assign.qubits() {
            self.check_qubit(q)?;
        }
        let boundary: Vec<[f64; 4]> = (0..n)
            .map(|q| {
                let e = frame.get(q) as usize;
                let p = noise.qubit(q);
                std::array::from_fn(|r| p[LABEL_MUL[e][r] as usize])
            })
            .collect();
        let mut owned: Vec<Vec<u32>> = Vec::new();
        let mut slots: Vec<Option<usize>> = Vec::with_capacity(self.supports.len());
        for (node, sup) in self.supports.iter().enumerate() {
            let qs = &self.net.qubit_map()[node];
            if qs.iter().all(|&q| assign.get(q).is_none()) {
                slots.push(None);
                continue;
            }
            let mut classes = vec![0usize];
            for (a, &q) in qs.iter().enumerate() {
                classes = match assign.get(q) {
                    Some(p) => classes
                        .iter()
                        .map(|c| c | ((p.label() as usize) << (2 * a)))
                        .collect(),
                    None => classes
                        .iter()
                        .flat_map(|c| (0..4).map(move |l| c | (l << (2 * a))))
                        .collect(),
                };
            }
            debug_assert!(classes.iter().all(|&c| c < 1 << (2 * sup.k)));
            owned.push(
                classes
                    .iter()
                    .flat_map(|&c| sup.by_class[c].iter().copied())
                    .collect(),
            );
            slots.push(Some(owned.len() - 1));
        }
        let views: Vec<&[u32]> = slots
            .iter()
            .zip(&self.supports)
            .map(|(s, sup)| match s {
                Some(i) => owned[*i].as_slice(),
                None => sup.all.as_slice(),
            })
            .collect();
        Ok(self.plan.execute(&views, &boundary))
    }

    pub fn chi(
        &self,
        assign: &LogicalAssignment,
        s: &Syndrome,
        noise: &NoiseModel,
    ) -> Result<LogValue> {
        self.chi_in_frame(assign, &self.frame(s)?, noise)
    }

    fn marginal_in_frame(
        &self,
        qubit: usize,
        frame: &PauliString,
        noise: &NoiseModel,
    ) -> Result<QubitMarginal> {
        self.check_qubit(qubit)?;
        let chis: Vec<LogValue> = Pauli::ALL
            .par_iter()
            .map(|&p| self.chi_in_frame(&LogicalAssignment::single(qubit, p), frame, noise))
            .collect::<Result<_>>()?;
        Ok(marginal_from(qubit, [chis[0], chis[1], chis[2], chis[3]]))
    }

    pub fn decode_marginal(
        &self,
        qubit: usize,
        s: &Syndrome,
        noise: &NoiseModel,
    ) -> Result<QubitMarginal> {
        self.marginal_in_frame(qubit, &self.frame(s)?, noise)
    }

    /// Per-qubit marginal decoding with the peakedness test max prob > K/(K+1).
    pub fn decode_parallel_in_frame(
        &self,
        targets: &[usize],
        frame: &PauliString,
        noise: &NoiseModel,
    ) -> Result<DecodeOutcome> {
        for &q in targets {
            self.check_qubit(q)?;
        }
        let jobs: Vec<(usize, Pauli)> = targets
            .iter()
            .flat_map(|&q| Pauli::ALL.map(|p| (q, p)))
            .collect();
        let chis: Vec<LogValue> = jobs
            .par_iter()
            .map(|&(q, p)| self.chi_in_frame(&LogicalAssignment::single(q, p), frame, noise))
            .collect::<Result<_>>()?;
        let marginals: Vec<QubitMarginal> = targets
            .iter()
            .enumerate()
            .map(|(i, &q)| {
                marginal_from(
                    q,
                    [
                        chis[4 * i],
                        chis[4 * i + 1],
                        chis[4 * i + 2],
                        chis[4 * i + 3],
                    ],
                )
            })
            .collect();
        Ok(outcome_from_marginals(targets, marginals, None))
    }

    pub fn decode_parallel(
        &self,
        targets: &[usize],
        s: &Syndrome,
        noise: &NoiseModel,
    ) -> Result<DecodeOutcome> {
        self.decode_parallel_in_frame(targets, &self.frame(s)?, noise)
    }

    /// Enumerates all 4^K words on the targets.
    pub fn decode_joint_in_frame(
        &self,
        targets: &[usize],
        frame: &PauliString,
        noise: &NoiseModel,
    ) -> Result<DecodeOutcome> {
        const LIMIT: usize = 10;
        if targets.len() > LIMIT {
            return Err(Error::SizeGuard {
                what: "joint decoding targets",
                size: targets.len(),
                limit: LIMIT,
            });
        }
        for &q in targets {
            self.check_qubit(q)?;
        }
        let kk = targets.len();
        let chis: Vec<LogValue> = (0..1usize << (2 * kk))
            .into_par_iter()
            .map(|w| self.chi_in_frame(&word_assignment(targets, w), frame, noise))
            .collect::<Result<_>>()?;
        let probs = normalize(&chis);
        let (argmax, tie) = argmax_with_ties(&probs);
        // marginal chis are sums of joint chis; keep them as scale-aligned values
        let top = chis
            .iter()
            .map(LogValue::ln)
            .fold(f64::NEG_INFINITY, f64::max);
        let rel: Vec<f64> = chis
            .iter()
            .map(|c| {
                if c.is_zero() {
                    0.0
                } else {
                    (c.ln() - top).exp()
                }
            })
            .collect();
        let marginals = targets
            .iter()
            .enumerate()
            .map(|(i, &q)| {
                let mut sums = [0.0; 4];
                for (w, &r) in rel.iter().enumerate() {
                    sums[(w >> (2 * i)) & 3] += r;
                }
                let chi = sums.map(|v| LogValue {
                    mantissa: v,
                    log_scale: if v == 0.0 { 0.0 } else { top },
                });
                marginal_from(q, chi)
            })
            .collect();
        let word_probability = Some(probs[argmax]);
        let mut out =
            outcome_from_marginals(targets, marginals, Some(JointTable { probs, argmax, tie }));
        out.word = word_labels(argmax, kk);
        out.word_probability = word_probability;
        Ok(out)
    }

    pub fn decode_joint(
        &self,
        targets: &[usize],
        s: &Syndrome,
        noise: &NoiseModel,
    ) -> Result<DecodeOutcome> {
        self.decode_joint_in_frame(targets, &self.frame(s)?, noise)
    }

    /// prob(word | s) = chi(word) / chi(nothing fixed).
    pub fn word_probability_in_frame(
        &self,
        word: &LogicalAssignment,
        frame: &PauliString,
        noise: &NoiseModel,
    ) -> Result<f64> {
        if word.is_empty() {
            return Err(Error::InvalidArgument("empty word".into()));
        }
        let num = self.chi_in_frame(word, frame, noise)?;
        let den = self.chi_in_frame(&LogicalAssignment::none(), frame, noise)?;
        if den.is_zero() {
            return Err(Error::InvalidArgument(
                "syndrome has probability zero".into(),
            ));
        }
        Ok(num.ratio(&den))
    }

    pub fn word_probability(
        &self,
        word: &LogicalAssignment,
        s: &Syndrome,
        noise: &NoiseModel,
    ) -> Result<f64> {
        self.word_probability_in_frame(word, &self.frame(s)?, noise)
    }
}

pub fn word_assignment(targets: &[usize], w: usize) -> LogicalAssignment {
    LogicalAssignment::word(targets, &word_labels(w, targets.len()))
}

pub fn word_labels(w: usize, k: usize) -> Vec<Pauli> {
    (0..k)
        .map(|i| Pauli::from_label(((w >> (2 * i)) & 3) as u8))
        .collect()
}

fn marginal_from(qubit: usize, chi: [LogValue; 4]) -> QubitMarginal {
    let p = normalize(&chi);
    let probs = [p[0], p[1], p[2], p[3]];
    let (i, tie) = argmax_with_ties(&probs);
    QubitMarginal {
        qubit,
        chi,
        probs,
        argmax: Pauli::from_label(i as u8),
        tie,
    }
}

fn outcome_from_marginals(
    targets: &[usize],
    marginals: Vec<QubitMarginal>,
    joint: Option<JointTable>,
) -> DecodeOutcome {
    let kk = targets.len() as f64;
    let threshold = kk / (kk + 1.0);
    let peaked = marginals
        .iter()
        .map(|m| m.probs.iter().cloned().fold(0.0, f64::max) > threshold)
        .collect();
    DecodeOutcome {
        targets: targets.to_vec(),
        word: marginals.iter().map(|m| m.argmax).collect(),
        marginals,
        peaked,
        peak_threshold: threshold,
        joint,
        word_probability: None,
    }
}
