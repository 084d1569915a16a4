//! Exact contraction of code-tensor networks with boundary noise vectors.
//!
//! Every leg has dimension 4 (Pauli labels). Node tensors are never stored
//! densely: a node enters the contraction through an absorb step that walks
//! its coset support and combines it with the messages of its already
//! contracted neighbours. Messages are dense, rescaled to unit max-norm, and
//! carry a natural-log scale.

use std::collections::{BTreeMap, BTreeSet};

use crate::compose::{Binding, TensorNetworkCode};
use crate::error::{Error, Result};

/// A nonnegative number stored as mantissa * exp(log_scale).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    pub mantissa: f64,
    pub log_scale: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue {
        mantissa: 0.0,
        log_scale: 0.0,
    };

    pub fn from_f64(v: f64) -> Self {
        LogValue {
            mantissa: v,
            log_scale: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0.0
    }

    /// Natural log; -inf for zero.
    pub fn ln(&self) -> f64 {
        if self.mantissa == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.mantissa.ln() + self.log_scale
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.mantissa == 0.0 {
            0.0
        } else {
            self.mantissa * self.log_scale.exp()
        }
    }

    pub fn mul(&self, other: &LogValue) -> LogValue {
        if self.is_zero() || other.is_zero() {
            return LogValue::ZERO;
        }
        LogValue {
            mantissa: self.mantissa * other.mantissa,
            log_scale: self.log_scale + other.log_scale,
        }
    }

    pub fn ratio(&self, other: &LogValue) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        (self.mantissa / other.mantissa) * (self.log_scale - other.log_scale).exp()
    }
}

/// Sum of values kept in log form.
pub fn log_sum(values: &[LogValue]) -> LogValue {
    let top = values
        .iter()
        .filter(|v| !v.is_zero())
        .map(LogValue::ln)
        .fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return LogValue::ZERO;
    }
    let m: f64 = values
        .iter()
        .filter(|v| !v.is_zero())
        .map(|v| (v.ln() - top).exp())
        .sum();
    LogValue {
        mantissa: m,
        log_scale: top,
    }
}

/// Normalizes a set of values to sum one, aligning scales first.
pub fn normalize(values: &[LogValue]) -> Vec<f64> {
    let top = values
        .iter()
        .map(LogValue::ln)
        .fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return vec![0.0; values.len()];
    }
    let rel: Vec<f64> = values
        .iter()
        .map(|v| {
            if v.is_zero() {
                0.0
            } else {
                (v.ln() - top).exp()
            }
        })
        .collect();
    let sum: f64 = rel.iter().sum();
    rel.into_iter().map(|r| r / sum).collect()
}

type Leg = u32;

#[derive(Debug, Clone)]
pub(crate) struct Dense {
    pub data: Vec<f64>,
    pub log_scale: f64,
}

impl Dense {
    fn rescale(&mut self) -> bool {
        let m = self.data.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if m == 0.0 {
            return false;
        }
        if m != 1.0 {
            let inv = 1.0 / m;
            for v in &mut self.data {
                *v *= inv;
            }
            self.log_scale += m.ln();
        }
        true
    }
}

/// Reorders tensor data whose legs are `from` into the order `to`.
fn permute(data: &[f64], from: &[Leg], to: &[Leg]) -> Vec<f64> {
    if from == to {
        return data.to_vec();
    }
    let rank = to.len();
    // stride in the source layout for each target position
    let strides: Vec<usize> = to
        .iter()
        .map(|l| {
            let p = from.iter().position(|x| x == l).expect("leg present");
            1usize << (2 * p)
        })
        .collect();
    let mut out = vec![0.0; data.len()];
    let mut digits = vec![0usize; rank];
    let mut src = 0usize;
    for v in out.iter_mut() {
        *v = data[src];
        for j in 0..rank {
            digits[j] += 1;
            src += strides[j];
            if digits[j] < 4 {
                break;
            }
            digits[j] = 0;
            src -= 4 * strides[j];
        }
    }
    out
}

fn size(rank: usize) -> usize {
    1usize << (2 * rank)
}

/// Role of one node leg inside an absorb step.
#[derive(Debug, Clone, Copy)]
enum Role {
    Boundary(usize),
    /// Contributes to the index of closed input `t` with the given stride.
    Closed(usize, usize),
    OpenA(usize),
    OpenB(usize),
    Out(usize),
}

#[derive(Debug, Clone)]
struct AbsorbStep {
    node: usize,
    roles: Vec<Role>,
    closed: Vec<usize>,
    /// Input id and its legs in the layout used here.
    open_a: Option<(usize, Vec<Leg>)>,
    open_b: Option<(usize, Vec<Leg>)>,
    /// Free external rank of A, shared rank, free external rank of B.
    ea: usize,
    sh: usize,
    eb: usize,
    out: usize,
}

#[derive(Debug, Clone)]
struct MergeStep {
    a: usize,
    b: usize,
    a_layout: Vec<Leg>,
    b_layout: Vec<Leg>,
    fa: usize,
    sh: usize,
    fb: usize,
    out: usize,
}

#[derive(Debug, Clone)]
enum Step {
    Absorb(AbsorbStep),
    Merge(MergeStep),
}

/// How to order the contraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PlanOptions {
    /// Dense pairwise greedy contraction instead of the layered sweep.
    pub greedy: bool,
    /// Layered: each child is absorbed by its last-listed parent and arcs are walked backwards.
    pub reverse: bool,
    /// Layered: rotation of the root's arc before it is split in two.
    pub rotate: usize,
}

#[derive(Debug, Clone)]
pub struct Plan {
    steps: Vec<Step>,
    legs: Vec<Vec<Leg>>,
    roots: Vec<usize>,
    n_nodes: usize,
    max_rank: usize,
    flops: f64,
}

struct Builder<'a> {
    net: &'a TensorNetworkCode,
    steps: Vec<Step>,
    legs: Vec<Vec<Leg>>,
    max_rank: usize,
    flops: f64,
}

impl<'a> Builder<'a> {
    fn new_tensor(&mut self, legs: Vec<Leg>) -> usize {
        self.max_rank = self.max_rank.max(legs.len());
        self.legs.push(legs);
        self.legs.len() - 1
    }

    fn node_edge_legs(&self, node: usize) -> Vec<(usize, Leg)> {
        self.net
            .bindings(node)
            .iter()
            .enumerate()
            .filter_map(|(i, b)| match b {
                Binding::Edge(e) => Some((i, *e as Leg)),
                Binding::Boundary(_) => None,
            })
            .collect()
    }

    fn merge(&mut self, a: usize, b: usize) -> usize {
        let la = self.legs[a].clone();
        let lb = self.legs[b].clone();
        let shared: Vec<Leg> = la.iter().copied().filter(|l| lb.contains(l)).collect();
        let fa: Vec<Leg> = la.iter().copied().filter(|l| !shared.contains(l)).collect();
        let fb: Vec<Leg> = lb.iter().copied().filter(|l| !shared.contains(l)).collect();
        let a_layout: Vec<Leg> = fa.iter().chain(&shared).copied().collect();
        let b_layout: Vec<Leg> = shared.iter().chain(&fb).copied().collect();
        let out_legs: Vec<Leg> = fa.iter().chain(&fb).copied().collect();
        self.flops += (size(fa.len()) * size(shared.len()) * size(fb.len())) as f64;
        let out = self.new_tensor(out_legs);
        self.steps.push(Step::Merge(MergeStep {
            a,
            b,
            a_layout,
            b_layout,
            fa: fa.len(),
            sh: shared.len(),
            fb: fb.len(),
            out,
        }));
        out
    }

    /// Absorbs `node` with the given inputs; `open` holds at most two tensors.
    fn absorb(&mut self, node: usize, closed: Vec<usize>, open: Vec<usize>) -> usize {
        assert!(open.len() <= 2);
        let node_legs = self.node_edge_legs(node);
        let mine: BTreeSet<Leg> = node_legs.iter().map(|x| x.1).collect();
        let mut roles: Vec<Role> = self
            .net
            .bindings(node)
            .iter()
            .map(|b| match b {
                Binding::Boundary(q) => Role::Boundary(*q),
                Binding::Edge(_) => Role::Out(0),
            })
            .collect();
        let leg_index: BTreeMap<Leg, usize> = node_legs.iter().map(|&(i, l)| (l, i)).collect();

        for (t, &c) in closed.iter().enumerate() {
            for (pos, l) in self.legs[c].iter().enumerate() {
                let i = leg_index[l];
                roles[i] = Role::Closed(t, 1 << (2 * pos));
            }
        }
        let ext = |legs: &[Leg]| -> Vec<Leg> {
            legs.iter().copied().filter(|l| !mine.contains(l)).collect()
        };
        let own = |legs: &[Leg]| -> Vec<Leg> {
            legs.iter().copied().filter(|l| mine.contains(l)).collect()
        };
        let (mut open_a, mut open_b) = (None, None);
        let (mut ea, mut sh, mut eb) = (0, 0, 0);
        let mut out_ext: Vec<Leg> = Vec::new();
        match open.len() {
            0 => {}
            1 => {
                let la = self.legs[open[0]].clone();
                let (e, o) = (ext(&la), own(&la));
                ea = e.len();
                for (j, l) in o.iter().enumerate() {
                    roles[leg_index[l]] = Role::OpenA(1 << (2 * (ea + j)));
                }
                out_ext = e.clone();
                open_a = Some((open[0], e.into_iter().chain(o).collect()));
            }
            _ => {
                let la = self.legs[open[0]].clone();
                let lb = self.legs[open[1]].clone();
                let (xa, oa) = (ext(&la), own(&la));
                let (xb, ob) = (ext(&lb), own(&lb));
                let shared: Vec<Leg> = xa.iter().copied().filter(|l| xb.contains(l)).collect();
                let a_only: Vec<Leg> = xa.iter().copied().filter(|l| !shared.contains(l)).collect();
                let b_only: Vec<Leg> = xb.iter().copied().filter(|l| !shared.contains(l)).collect();
                ea = a_only.len();
                sh = shared.len();
                eb = b_only.len();
                for (j, l) in oa.iter().enumerate() {
                    roles[leg_index[l]] = Role::OpenA(1 << (2 * (ea + sh + j)));
                }
                for (j, l) in ob.iter().enumerate() {
                    roles[leg_index[l]] = Role::OpenB(1 << (2 * (sh + eb + j)));
                }
                out_ext = a_only.iter().chain(&b_only).copied().collect();
                open_a = Some((
                    open[0],
                    a_only.iter().chain(&shared).chain(&oa).copied().collect(),
                ));
                open_b = Some((
                    open[1],
                    shared.iter().chain(&b_only).chain(&ob).copied().collect(),
                ));
            }
        }
        let mut out_legs = out_ext;
        let mut j = 0;
        for &(i, l) in &node_legs {
            if let Role::Out(_) = roles[i] {
                roles[i] = Role::Out(1 << (2 * j));
                out_legs.push(l);
                j += 1;
            }
        }
        let block = size(ea) * size(sh) * size(eb);
        self.flops += 256.0 * block as f64;
        let out = self.new_tensor(out_legs);
        self.steps.push(Step::Absorb(AbsorbStep {
            node,
            roles,
            closed,
            open_a,
            open_b,
            ea,
            sh,
            eb,
            out,
        }));
        out
    }

    /// Absorbs `node` together with child messages, in arc order.
    fn absorb_with(&mut self, node: usize, inputs: &[usize]) -> usize {
        let mine: BTreeSet<Leg> = self.node_edge_legs(node).iter().map(|x| x.1).collect();
        let (closed, open): (Vec<usize>, Vec<usize>) = inputs
            .iter()
            .partition(|&&t| self.legs[t].iter().all(|l| mine.contains(l)));
        let open = if open.len() <= 2 {
            open
        } else {
            let half = open.len().div_ceil(2);
            let mut left = open[0];
            for &t in &open[1..half] {
                left = self.merge(left, t);
            }
            let mut right = open[half];
            for &t in &open[half + 1..] {
                right = self.merge(right, t);
            }
            vec![left, right]
        };
        self.absorb(node, closed, open)
    }
}

impl Plan {
    pub fn new(net: &TensorNetworkCode, opts: PlanOptions) -> Result<Plan> {
        if net.nodes().is_empty() {
            return Err(Error::InvalidNetwork("empty network".into()));
        }
        let mut b = Builder {
            net,
            steps: Vec::new(),
            legs: Vec::new(),
            max_rank: 0,
            flops: 0.0,
        };
        let roots = if opts.greedy {
            greedy(&mut b)
        } else {
            layered(&mut b, opts).unwrap_or_else(|| {
                b.steps.clear();
                b.legs.clear();
                b.max_rank = 0;
                b.flops = 0.0;
                greedy(&mut b)
            })
        };
        Ok(Plan {
            steps: b.steps,
            legs: b.legs,
            roots,
            n_nodes: net.nodes().len(),
            max_rank: b.max_rank,
            flops: b.flops,
        })
    }

    /// Largest intermediate tensor, in entries.
    pub fn max_tensor_len(&self) -> usize {
        size(self.max_rank)
    }

    /// Rough multiply-add count of one contraction.
    pub fn estimated_flops(&self) -> f64 {
        self.flops
    }

    pub fn num_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Contracts the network. `supports[v]` lists node v's allowed Pauli patterns
    /// (2 bits per leg); `boundary[q]` is the weight vector of boundary qubit q.
    pub fn execute(&self, supports: &[&[u32]], boundary: &[[f64; 4]]) -> LogValue {
        let mut store: Vec<Option<Dense>> = vec![None; self.legs.len()];
        for step in &self.steps {
            let (out, t) = match step {
                Step::Absorb(s) => (
                    s.out,
                    self.run_absorb(s, supports[s.node], boundary, &mut store),
                ),
                Step::Merge(m) => (m.out, self.run_merge(m, &mut store)),
            };
            let mut t = t;
            if !t.rescale() {
                return LogValue::ZERO;
            }
            store[out] = Some(t);
        }
        let mut acc = LogValue::from_f64(1.0);
        for &r in &self.roots {
            let t = store[r].take().expect("root computed");
            debug_assert_eq!(t.data.len(), 1);
            acc = acc.mul(&LogValue {
                mantissa: t.data[0],
                log_scale: t.log_scale,
            });
        }
        acc
    }

    fn run_merge(&self, m: &MergeStep, store: &mut [Option<Dense>]) -> Dense {
        let a = store[m.a].take().expect("input ready");
        let b = store[m.b].take().expect("input ready");
        let ad = permute(&a.data, &self.legs[m.a], &m.a_layout);
        let bd = permute(&b.data, &self.legs[m.b], &m.b_layout);
        let (fa, sh, fb) = (size(m.fa), size(m.sh), size(m.fb));
        let mut out = vec![0.0; fa * fb];
        for j in 0..fb {
            let orow = &mut out[j * fa..(j + 1) * fa];
            for s in 0..sh {
                let bv = bd[s + sh * j];
                if bv == 0.0 {
                    continue;
                }
                let acol = &ad[s * fa..(s + 1) * fa];
                for (o, &x) in orow.iter_mut().zip(acol) {
                    *o += x * bv;
                }
            }
        }
        Dense {
            data: out,
            log_scale: a.log_scale + b.log_scale,
        }
    }

    fn run_absorb(
        &self,
        s: &AbsorbStep,
        support: &[u32],
        boundary: &[[f64; 4]],
        store: &mut [Option<Dense>],
    ) -> Dense {
        let closed: Vec<Dense> = s
            .closed
            .iter()
            .map(|&c| store[c].take().expect("input ready"))
            .collect();
        let mut log_scale: f64 = closed.iter().map(|d| d.log_scale).sum();
        let a = s.open_a.as_ref().map(|(id, layout)| {
            let d = store[*id].take().expect("input ready");
            log_scale += d.log_scale;
            permute(&d.data, &self.legs[*id], layout)
        });
        let b = s.open_b.as_ref().map(|(id, layout)| {
            let d = store[*id].take().expect("input ready");
            log_scale += d.log_scale;
            permute(&d.data, &self.legs[*id], layout)
        });
        let out_len = size(self.legs[s.out].len());
        let mut out = vec![0.0; out_len];
        let (ea, sh, eb) = (size(s.ea), size(s.sh), size(s.eb));
        let mut cidx = vec![0usize; closed.len()];
        for &pat in support {
            let mut w = 1.0;
            let (mut ia, mut ib, mut io) = (0usize, 0usize, 0usize);
            cidx.iter_mut().for_each(|c| *c = 0);
            for (leg, role) in s.roles.iter().enumerate() {
                let label = ((pat >> (2 * leg)) & 3) as usize;
                match *role {
                    Role::Boundary(q) => w *= boundary[q][label],
                    Role::Closed(t, stride) => cidx[t] += label * stride,
                    Role::OpenA(stride) => ia += label * stride,
                    Role::OpenB(stride) => ib += label * stride,
                    Role::Out(stride) => io += label * stride,
                }
            }
            for (c, &i) in closed.iter().zip(&cidx) {
                w *= c.data[i];
            }
            if w == 0.0 {
                continue;
            }
            match (&a, &b) {
                (None, _) => out[io] += w,
                (Some(ad), None) => {
                    let blk = &mut out[io * ea..(io + 1) * ea];
                    for (o, &x) in blk.iter_mut().zip(&ad[ia..ia + ea]) {
                        *o += w * x;
                    }
                }
                (Some(ad), Some(bd)) => {
                    let blk = &mut out[io * ea * eb..(io + 1) * ea * eb];
                    let am = &ad[ia..ia + ea * sh];
                    let bm = &bd[ib..ib + sh * eb];
                    for j in 0..eb {
                        let orow = &mut blk[j * ea..(j + 1) * ea];
                        for t in 0..sh {
                            let bv = bm[t + sh * j];
                            if bv == 0.0 {
                                continue;
                            }
                            let bv = bv * w;
                            for (o, &x) in orow.iter_mut().zip(&am[t * ea..(t + 1) * ea]) {
                                *o += x * bv;
                            }
                        }
                    }
                }
            }
        }
        Dense {
            data: out,
            log_scale,
        }
    }
}

/// Sweep from the outermost layer inwards. Returns None if the graph is not layered.
fn layered(b: &mut Builder, opts: PlanOptions) -> Option<Vec<usize>> {
    let net = b.net;
    let depth = net.node_depths();
    if depth.iter().any(|&d| d == usize::MAX) {
        return None;
    }
    let n = net.nodes().len();
    let mut owner = vec![usize::MAX; n];
    for (a, c) in net.edges() {
        let (da, dc) = (depth[a.node], depth[c.node]);
        if da.abs_diff(dc) != 1 {
            return None;
        }
        let (parent, child) = if da < dc {
            (a.node, c.node)
        } else {
            (c.node, a.node)
        };
        if owner[child] == usize::MAX || opts.reverse {
            owner[child] = parent;
        }
    }
    let mut children = vec![Vec::new(); n];
    for v in 1..n {
        children[owner[v]].push(v);
    }
    if opts.reverse {
        for c in &mut children {
            c.reverse();
        }
    }
    let max_depth = *depth.iter().max().unwrap_or(&0);
    let mut msg = vec![usize::MAX; n];
    for d in (1..=max_depth).rev() {
        for u in (0..n).filter(|&u| depth[u] == d) {
            let inputs: Vec<usize> = children[u].iter().map(|&c| msg[c]).collect();
            msg[u] = b.absorb_with(u, &inputs);
        }
    }
    let mut inputs: Vec<usize> = children[0].iter().map(|&c| msg[c]).collect();
    if !inputs.is_empty() {
        let r = opts.rotate % inputs.len();
        inputs.rotate_left(r);
    }
    Some(vec![b.absorb_with(0, &inputs)])
}

/// Dense pairwise contraction: every node becomes a dense tensor, then the pair
/// with the smallest result is merged until only scalars remain.
fn greedy(b: &mut Builder) -> Vec<usize> {
    let n = b.net.nodes().len();
    let mut live: Vec<usize> = (0..n).map(|v| b.absorb(v, vec![], vec![])).collect();
    loop {
        let mut best: Option<(usize, usize, usize, usize)> = None;
        for i in 0..live.len() {
            for j in i + 1..live.len() {
                let (la, lb) = (&b.legs[live[i]], &b.legs[live[j]]);
                let shared = la.iter().filter(|l| lb.contains(l)).count();
                if shared == 0 {
                    continue;
                }
                let rank = la.len() + lb.len() - 2 * shared;
                let cost = la.len() + lb.len() - shared;
                let key = (rank, cost, i, j);
                if best.is_none_or(|bk| (key.0, key.1) < (bk.0, bk.1)) {
                    best = Some(key);
                }
            }
        }
        let Some((_, _, i, j)) = best else { break };
        let t = b.merge(live[i], live[j]);
        live.remove(j);
        live[i] = t;
    }
    live
}
