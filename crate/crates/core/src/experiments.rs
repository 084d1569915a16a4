//! Monte Carlo estimates of logical failure rates and of the peaked fraction.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compose::TensorNetworkCode;
use crate::decoder::{log_sum, Decoder, LogicalAssignment};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::pauli::{Pauli, PauliString};
use crate::threshold::distance_estimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Counting,
    Coset,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Counting => "counting",
            Method::Coset => "coset",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "counting" => Ok(Method::Counting),
            "coset" => Ok(Method::Coset),
            _ => Err(Error::InvalidArgument(format!("unknown method {s:?}"))),
        }
    }
}

/// I.i.d. draw per qubit from its probability vector.
pub fn sample_error<R: Rng + ?Sized>(noise: &NoiseModel, rng: &mut R) -> PauliString {
    let n = noise.len();
    let mut e = PauliString::identity(n);
    for i in 0..n {
        let q = noise.qubit(i);
        let u: f64 = rng.random();
        // last positive label absorbs rounding; zero-probability labels are never drawn
        let mut label = (0..4).rev().find(|&a| q[a] > 0.0).unwrap_or(0);
        let mut acc = 0.0;
        for (a, &w) in q.iter().enumerate() {
            if w > 0.0 {
                acc += w;
                if u < acc {
                    label = a;
                    break;
                }
            }
        }
        if label == 0 {
            continue;
        }
        e.set(i, Pauli::from_label(label as u8));
    }
    e
}

/// Random stream for one trial: key from the seed, stream from the trial index.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one (radius, p) point of a sweep, so points are sampled independently.
pub fn point_seed(master: u64, radius: usize, p: f64) -> u64 {
    splitmix(splitmix(master ^ splitmix(radius as u64)) ^ p.to_bits())
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub error: PauliString,
    /// Class of E E(s) on the targets; None when decoding without a flattened code.
    pub true_word: Option<Vec<Pauli>>,
    /// Decoded word, or for frame decoding the class relative to the true word.
    pub decoded: Vec<Pauli>,
    pub relative: bool,
    pub per_qubit_success: Vec<bool>,
    pub success: bool,
    /// prob(decoded word | s); NaN when not requested.
    pub word_prob: f64,
    pub peaked: Vec<bool>,
}

impl TrialRecord {
    /// Re-derives the success flag from the stored words.
    pub fn recompute_success(&self) -> bool {
        match (&self.true_word, self.relative) {
            (Some(t), false) => *t == self.decoded,
            _ => self.decoded.iter().all(|&p| p == Pauli::I),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub radius: usize,
    pub n: usize,
    pub k: usize,
    /// 0-based logical qubits.
    pub targets: Vec<usize>,
    pub p: f64,
    pub method: Method,
    pub samples: usize,
    pub seed: u64,
    pub p_fail: f64,
    pub stderr: f64,
    pub q_frac: Option<f64>,
    pub bound: Option<f64>,
    pub d_est: f64,
}

/// Per-trial decoding on one network with a fixed decoder.
pub struct Experiment<'a> {
    decoder: Decoder<'a>,
    radius: usize,
}

impl<'a> Experiment<'a> {
    pub fn new(net: &'a TensorNetworkCode) -> Result<Self> {
        Ok(Experiment {
            decoder: Decoder::new(net)?,
            radius: net.radius(),
        })
    }

    pub fn decoder(&self) -> &Decoder<'a> {
        &self.decoder
    }

    fn net(&self) -> &TensorNetworkCode {
        self.decoder.network()
    }

    fn check_targets(&self, targets: &[usize]) -> Result<()> {
        if targets.is_empty() {
            return Err(Error::InvalidArgument("no target qubits".into()));
        }
        let mut seen = targets.to_vec();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != targets.len() {
            return Err(Error::DuplicateIndex(seen[0]));
        }
        for &q in targets {
            if q >= self.net().k() {
                return Err(Error::IndexOutOfRange {
                    index: q,
                    len: self.net().k(),
                });
            }
        }
        Ok(())
    }

    /// One decoding trial. Without a flattened code the sampled error is used as
    /// the frame, so the decoder sees classes relative to the true one.
    pub fn trial(
        &self,
        targets: &[usize],
        noise: &NoiseModel,
        seed: u64,
        trial: u64,
        want_prob: bool,
    ) -> Result<TrialRecord> {
        let mut rng = trial_rng(seed, trial);
        let e = sample_error(noise, &mut rng);
        let net = self.net();
        let (frame, true_word) = if net.tracks_generators() {
            let code = net.flat()?;
            let s = code.syndrome(&e)?;
            let frame = code.pure_error(&s)?;
            let class = code.logical_class(&e.multiply(&frame)?)?;
            (
                frame,
                Some(targets.iter().map(|&q| class.labels[q]).collect::<Vec<_>>()),
            )
        } else {
            (e.clone(), None)
        };
        let relative = true_word.is_none();
        let out = self
            .decoder
            .decode_parallel_in_frame(targets, &frame, noise)?;
        let word_prob = if !want_prob {
            f64::NAN
        } else if targets.len() == 1 {
            out.marginals[0].probs[out.word[0].label() as usize]
        } else {
            let den = log_sum(&out.marginals[0].chi);
            let num = self.decoder.chi_in_frame(
                &LogicalAssignment::word(targets, &out.word),
                &frame,
                noise,
            )?;
            if den.is_zero() {
                f64::NAN
            } else {
                num.ratio(&den)
            }
        };
        let per_qubit_success: Vec<bool> = match &true_word {
            Some(t) => t.iter().zip(&out.word).map(|(a, b)| a == b).collect(),
            None => out.word.iter().map(|&p| p == Pauli::I).collect(),
        };
        Ok(TrialRecord {
            trial,
            error: e,
            true_word,
            decoded: out.word,
            relative,
            success: per_qubit_success.iter().all(|&b| b),
            per_qubit_success,
            word_prob,
            peaked: out.peaked,
        })
    }

    /// Runs trials 0..samples in parallel; records come back in trial order.
    pub fn run(
        &self,
        targets: &[usize],
        p: f64,
        samples: usize,
        seed: u64,
        want_prob: bool,
    ) -> Result<Vec<TrialRecord>> {
        self.check_targets(targets)?;
        let noise = NoiseModel::depolarizing(p, self.net().n())?;
        (0..samples as u64)
            .into_par_iter()
            .map(|t| self.trial(targets, &noise, seed, t, want_prob))
            .collect()
    }

    fn result(
        &self,
        targets: &[usize],
        p: f64,
        method: Method,
        samples: usize,
        seed: u64,
    ) -> EstimateResult {
        let net = self.net();
        EstimateResult {
            radius: self.radius,
            n: net.n(),
            k: net.k(),
            targets: targets.to_vec(),
            p,
            method,
            samples,
            seed,
            p_fail: 0.0,
            stderr: 0.0,
            q_frac: None,
            bound: None,
            d_est: distance_estimate(net.n()),
        }
    }

    /// Reduces trial records to one estimate; `with_q` adds the peaked fraction and its bound.
    pub fn summarize(
        &self,
        targets: &[usize],
        p: f64,
        seed: u64,
        method: Method,
        recs: &[TrialRecord],
        with_q: bool,
    ) -> Result<EstimateResult> {
        let mut r = self.result(targets, p, method, recs.len(), seed);
        let (f, se) = match method {
            Method::Counting => counting_estimate(recs),
            Method::Coset => coset_estimate(recs)?,
        };
        r.p_fail = f;
        r.stderr = se;
        if with_q {
            r.q_frac = Some(q_estimate(recs).0);
            r.bound = Some(peaked_bound(&per_qubit_success(recs, targets.len())));
        }
        Ok(r)
    }

    /// Failure of the whole target word, by counting or by coset weights.
    pub fn word_failure(
        &self,
        targets: &[usize],
        p: f64,
        samples: usize,
        seed: u64,
        method: Method,
    ) -> Result<EstimateResult> {
        let recs = self.run(targets, p, samples, seed, method == Method::Coset)?;
        self.summarize(targets, p, seed, method, &recs, false)
    }

    pub fn estimate_failure_counting(
        &self,
        targets: &[usize],
        p: f64,
        samples: usize,
        seed: u64,
    ) -> Result<EstimateResult> {
        self.word_failure(targets, p, samples, seed, Method::Counting)
    }

    pub fn estimate_failure_coset(
        &self,
        targets: &[usize],
        p: f64,
        samples: usize,
        seed: u64,
    ) -> Result<EstimateResult> {
        self.word_failure(targets, p, samples, seed, Method::Coset)
    }

    /// Fraction of trials where every target is peaked, with the lower bound
    /// built from per-qubit success rates of the same trials.
    pub fn estimate_q(
        &self,
        targets: &[usize],
        p: f64,
        samples: usize,
        seed: u64,
    ) -> Result<EstimateResult> {
        let recs = self.run(targets, p, samples, seed, false)?;
        self.summarize(targets, p, seed, Method::Counting, &recs, true)
    }
}

/// Failure fraction with binomial standard error.
pub fn counting_estimate(recs: &[TrialRecord]) -> (f64, f64) {
    let n = recs.len() as f64;
    if recs.is_empty() {
        return (0.0, 0.0);
    }
    let f = recs.iter().filter(|r| !r.success).count() as f64 / n;
    (f, (f * (1.0 - f) / n).sqrt())
}

/// 1 - mean prob(decoded | s), with sample standard error.
pub fn coset_estimate(recs: &[TrialRecord]) -> Result<(f64, f64)> {
    if recs.is_empty() {
        return Ok((0.0, 0.0));
    }
    if recs.iter().any(|r| r.word_prob.is_nan()) {
        return Err(Error::InvalidArgument(
            "trials lack word probabilities".into(),
        ));
    }
    let n = recs.len() as f64;
    let mean = recs.iter().map(|r| r.word_prob).sum::<f64>() / n;
    let var = if recs.len() > 1 {
        recs.iter()
            .map(|r| (r.word_prob - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    Ok(((1.0 - mean).max(0.0), (var / n).sqrt()))
}

/// Fraction of all-peaked trials and its binomial standard error.
pub fn q_estimate(recs: &[TrialRecord]) -> (f64, f64) {
    if recs.is_empty() {
        return (0.0, 0.0);
    }
    let n = recs.len() as f64;
    let q = recs.iter().filter(|r| r.peaked.iter().all(|&b| b)).count() as f64 / n;
    (q, (q * (1.0 - q) / n).sqrt())
}

pub fn per_qubit_success(recs: &[TrialRecord], k: usize) -> Vec<f64> {
    let n = recs.len().max(1) as f64;
    (0..k)
        .map(|i| recs.iter().filter(|r| r.per_qubit_success[i]).count() as f64 / n)
        .collect()
}

/// prod_i [p_i - K (1 - p_i)], each factor clamped at zero.
pub fn peaked_bound(success: &[f64]) -> f64 {
    let k = success.len() as f64;
    success
        .iter()
        .map(|&s| (s - k * (1.0 - s)).max(0.0))
        .product()
}

fn fmt_f(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f).unwrap_or_default()
}

pub const CSV_HEADER: [&str; 13] = [
    "radius", "n", "k", "targets", "p", "method", "samples", "seed", "p_fail", "stderr", "q_frac",
    "bound", "d_est",
];

/// Writes results with 1-based ';'-joined targets.
pub fn write_results<W: Write>(w: W, results: &[EstimateResult]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in results {
        let targets: Vec<String> = r.targets.iter().map(|t| (t + 1).to_string()).collect();
        out.write_record([
            r.radius.to_string(),
            r.n.to_string(),
            r.k.to_string(),
            targets.join(";"),
            fmt_f(r.p),
            r.method.to_string(),
            r.samples.to_string(),
            r.seed.to_string(),
            fmt_f(r.p_fail),
            fmt_f(r.stderr),
            fmt_opt(r.q_frac),
            fmt_opt(r.bound),
            fmt_f(r.d_est),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_results<R: std::io::Read>(r: R) -> Result<Vec<EstimateResult>> {
    let mut rd = csv::Reader::from_reader(r);
    let bad = |what: &str| Error::InvalidArgument(format!("bad {what} column"));
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let get = |i: usize| row.get(i).unwrap_or("");
        let num =
            |i: usize, what: &str| -> Result<f64> { get(i).parse::<f64>().map_err(|_| bad(what)) };
        let int =
            |i: usize, what: &str| -> Result<u64> { get(i).parse::<u64>().map_err(|_| bad(what)) };
        let opt = |i: usize, what: &str| -> Result<Option<f64>> {
            if get(i).is_empty() {
                Ok(None)
            } else {
                num(i, what).map(Some)
            }
        };
        let targets = get(3)
            .split(';')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<usize>()
                    .ok()
                    .filter(|&v| v >= 1)
                    .map(|v| v - 1)
                    .ok_or_else(|| bad("targets"))
            })
            .collect::<Result<Vec<_>>>()?;
        let n = int(1, "n")? as usize;
        out.push(EstimateResult {
            radius: int(0, "radius")? as usize,
            n,
            k: int(2, "k")? as usize,
            targets,
            p: num(4, "p")?,
            method: get(5).parse()?,
            samples: int(6, "samples")? as usize,
            seed: int(7, "seed")?,
            p_fail: num(8, "p_fail")?,
            stderr: num(9, "stderr")?,
            q_frac: opt(10, "q_frac")?,
            bound: opt(11, "bound")?,
            d_est: if get(12).is_empty() {
                distance_estimate(n)
            } else {
                num(12, "d_est")?
            },
        });
    }
    Ok(out)
}

/// Streams trial records as CSV: trial, error, true word, decoded word, success, weight, peaked.
pub fn write_trials<W: Write>(w: W, recs: &[TrialRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "trial",
        "error",
        "true_word",
        "decoded",
        "relative",
        "success",
        "word_prob",
        "peaked",
    ])?;
    let word = |v: &[Pauli]| v.iter().map(|p| p.symbol()).collect::<String>();
    for r in recs {
        out.write_record([
            r.trial.to_string(),
            r.error.to_string(),
            r.true_word.as_deref().map(word).unwrap_or_default(),
            word(&r.decoded),
            r.relative.to_string(),
            r.success.to_string(),
            if r.word_prob.is_nan() {
                String::new()
            } else {
                fmt_f(r.word_prob)
            },
            r.peaked
                .iter()
                .map(|&b| if b { '1' } else { '0' })
                .collect(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn estimate_failure_counting(
    net: &TensorNetworkCode,
    targets: &[usize],
    p: f64,
    samples: usize,
    seed: u64,
) -> Result<EstimateResult> {
    Experiment::new(net)?.estimate_failure_counting(targets, p, samples, seed)
}

pub fn estimate_failure_coset(
    net: &TensorNetworkCode,
    targets: &[usize],
    p: f64,
    samples: usize,
    seed: u64,
) -> Result<EstimateResult> {
    Experiment::new(net)?.estimate_failure_coset(targets, p, samples, seed)
}

pub fn estimate_q(
    net: &TensorNetworkCode,
    targets: &[usize],
    p: f64,
    samples: usize,
    seed: u64,
) -> Result<EstimateResult> {
    Experiment::new(net)?.estimate_q(targets, p, samples, seed)
}

pub fn word_failure(
    net: &TensorNetworkCode,
    targets: &[usize],
    p: f64,
    samples: usize,
    seed: u64,
    method: Method,
) -> Result<EstimateResult> {
    Experiment::new(net)?.word_failure(targets, p, samples, seed, method)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::CodeTensor;

    fn steane_net() -> TensorNetworkCode {
        let mut net = TensorNetworkCode::new();
        net.add_node(CodeTensor::steane(), &[]).unwrap();
        net
    }

    #[test]
    fn sampling_rates() {
        let mut rng = trial_rng(1, 0);
        let zero = NoiseModel::depolarizing(0.0, 50).unwrap();
        assert!(sample_error(&zero, &mut rng).is_identity());
        let noise = NoiseModel::depolarizing(0.1, 100).unwrap();
        let mut hits = 0;
        for _ in 0..1000 {
            hits += sample_error(&noise, &mut rng).weight();
        }
        let n = 100_000.0;
        let sd = (0.1f64 * 0.9 / n).sqrt();
        assert!((hits as f64 / n - 0.1).abs() < 3.0 * sd);
        let uniform = NoiseModel::depolarizing(0.75, 100).unwrap();
        let mut counts = [0usize; 4];
        for _ in 0..1000 {
            let e = sample_error(&uniform, &mut rng);
            for i in 0..100 {
                counts[e.get(i).label() as usize] += 1;
            }
        }
        let sd = (n * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - n / 4.0).abs() < 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn zero_noise_never_fails() {
        let net = steane_net();
        let ex = Experiment::new(&net).unwrap();
        for m in [Method::Counting, Method::Coset] {
            let r = ex.word_failure(&[0], 0.0, 50, 3, m).unwrap();
            assert_eq!(r.p_fail, 0.0);
        }
        let q = ex.estimate_q(&[0], 0.0, 20, 3).unwrap();
        assert_eq!(q.q_frac, Some(1.0));
    }

    #[test]
    fn records_rederive_success() {
        let net = crate::holographic::build_code(2).unwrap();
        let ex = Experiment::new(&net).unwrap();
        let recs = ex.run(&[0, 1, 2], 0.1, 30, 9, true).unwrap();
        for r in &recs {
            assert_eq!(r.recompute_success(), r.success);
            assert!(r.word_prob > 0.0 && r.word_prob <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn bound_k1() {
        assert!((peaked_bound(&[0.9]) - 0.8).abs() < 1e-15);
        assert_eq!(peaked_bound(&[0.3, 0.99]), 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let r = EstimateResult {
            radius: 2,
            n: 42,
            k: 8,
            targets: vec![0, 3],
            p: 0.085,
            method: Method::Coset,
            samples: 10,
            seed: 5,
            p_fail: 0.125,
            stderr: 0.01,
            q_frac: None,
            bound: Some(0.5),
            d_est: distance_estimate(42),
        };
        let mut buf = Vec::new();
        write_results(&mut buf, std::slice::from_ref(&r)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "radius,n,k,targets,p,method,samples,seed,p_fail,stderr,q_frac,bound,d_est"
        ));
        assert!(text.contains(",1;4,"));
        assert_eq!(read_results(buf.as_slice()).unwrap(), vec![r]);
    }

    #[test]
    fn point_seeds_differ() {
        assert_ne!(point_seed(1, 2, 0.1), point_seed(1, 3, 0.1));
        assert_ne!(point_seed(1, 2, 0.1), point_seed(1, 2, 0.105));
        assert_eq!(point_seed(1, 2, 0.1), point_seed(1, 2, 0.1));
    }
}
