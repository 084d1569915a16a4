//! Joining code tensors along contracted legs and assembling networks of them.

use std::path::Path;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};
use crate::stabilizer::{LogicalClass, StabilizerCode, Syndrome};

/// True iff every Pauli pattern on `legs` has a distinct syndrome.
pub fn distinguishable(code: &StabilizerCode, legs: &[usize]) -> Result<bool> {
    const LIMIT: usize = 8;
    if legs.is_empty() {
        return Err(Error::InvalidArgument("empty leg set".into()));
    }
    if legs.len() > LIMIT {
        return Err(Error::SizeGuard {
            what: "distinguishability legs",
            size: legs.len(),
            limit: LIMIT,
        });
    }
    let base = PauliString::identity(legs.len());
    base.embed(legs, code.n)?;
    // The syndrome map is linear, so injectivity means no nontrivial pattern is silent.
    for idx in 1..(1usize << (2 * legs.len())) {
        let labels: Vec<u8> = (0..legs.len())
            .map(|j| ((idx >> (2 * j)) & 3) as u8)
            .collect();
        let p = PauliString::from_labels(&labels).embed(legs, code.n)?;
        if code.stabilizers.iter().all(|s| !s.anticommutes(&p)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Raw generators of a code, not necessarily canonical and without pure errors.
#[derive(Debug, Clone)]
pub struct Generators {
    pub n: usize,
    pub stabilizers: Vec<PauliString>,
    pub logical_x: Vec<PauliString>,
    pub logical_z: Vec<PauliString>,
}

impl Generators {
    pub fn of(code: &StabilizerCode) -> Self {
        Generators {
            n: code.n,
            stabilizers: code.stabilizers.clone(),
            logical_x: code.logical_x.clone(),
            logical_z: code.logical_z.clone(),
        }
    }

    pub fn finalize(&self) -> Result<StabilizerCode> {
        StabilizerCode::from_generators(self.n, &self.stabilizers, &self.logical_x, &self.logical_z)
    }
}

fn check_pairs(na: usize, nb: usize, pairs: &[(usize, usize)]) -> Result<()> {
    let mut seen_a = vec![false; na];
    let mut seen_b = vec![false; nb];
    for &(a, b) in pairs {
        if a >= na || b >= nb {
            return Err(Error::BadPairing(format!(
                "leg pair ({}, {}) out of range",
                a + 1,
                b + 1
            )));
        }
        if seen_a[a] || seen_b[b] {
            return Err(Error::BadPairing(format!(
                "leg pair ({}, {}) reuses a leg",
                a + 1,
                b + 1
            )));
        }
        seen_a[a] = true;
        seen_b[b] = true;
    }
    Ok(())
}

/// Joins two generator sets by requiring equal Paulis on each contracted pair.
/// Output qubits: free legs of `a` in order, then free legs of `b`.
/// Pivot rows are taken from `b` first when `prefer_b`.
pub fn join(
    a: &Generators,
    b: &Generators,
    pairs: &[(usize, usize)],
    prefer_b: bool,
) -> Result<Generators> {
    check_pairs(a.n, b.n, pairs)?;
    let l = pairs.len();
    if 2 * l > 64 {
        return Err(Error::SizeGuard {
            what: "contracted legs per join",
            size: l,
            limit: 32,
        });
    }
    let (na, nb) = (a.n, b.n);
    let pad_a = PauliString::identity(na);
    let pad_b = PauliString::identity(nb);
    let lift_a = |p: &PauliString| p.concat(&pad_b);
    let lift_b = |p: &PauliString| pad_a.concat(p);
    let mismatch = |p: &PauliString| -> u64 {
        let mut d = 0u64;
        for (t, &(la, lb)) in pairs.iter().enumerate() {
            let (pa, pb) = (p.get(la), p.get(na + lb));
            d |= ((pa.x_bit() ^ pb.x_bit()) as u64) << (2 * t);
            d |= ((pa.z_bit() ^ pb.z_bit()) as u64) << (2 * t + 1);
        }
        d
    };

    let side_a = a.stabilizers.iter().map(lift_a);
    let side_b = b.stabilizers.iter().map(lift_b);
    let mut rows: Vec<PauliString> = if prefer_b {
        side_b.chain(side_a).collect()
    } else {
        side_a.chain(side_b).collect()
    };
    let mut ds: Vec<u64> = rows.iter().map(mismatch).collect();

    let mut pivots: Vec<(u64, PauliString)> = Vec::new();
    let mut kernel: Vec<PauliString> = Vec::new();
    for (mut row, mut d) in rows.drain(..).zip(ds.drain(..)) {
        for (pd, prow) in &pivots {
            if d & (pd & pd.wrapping_neg()) != 0 {
                d ^= pd;
                row.mul_assign(prow);
            }
        }
        if d == 0 {
            kernel.push(row);
        } else {
            // keep pivots reduced so each owns its lowest set bit exclusively
            let low = d & d.wrapping_neg();
            for (pd, prow) in pivots.iter_mut() {
                if *pd & low != 0 {
                    *pd ^= d;
                    prow.mul_assign(&row);
                }
            }
            pivots.push((d, row));
        }
    }
    let expected = a.stabilizers.len() + b.stabilizers.len();
    if pivots.len() != 2 * l || kernel.len() + 2 * l != expected {
        return Err(Error::NotDistinguishable);
    }

    let mut drop = vec![false; na + nb];
    for &(la, lb) in pairs {
        drop[la] = true;
        drop[na + lb] = true;
    }
    let finish = |mut row: PauliString| -> Result<PauliString> {
        let mut d = mismatch(&row);
        for (pd, prow) in &pivots {
            if d & (pd & pd.wrapping_neg()) != 0 {
                d ^= pd;
                row.mul_assign(prow);
            }
        }
        if d != 0 {
            return Err(Error::BadPairing(
                "logical operator cannot be matched across the contracted legs".into(),
            ));
        }
        Ok(row.remove_qubits(&drop))
    };
    let logicals = |fa: &[PauliString], fb: &[PauliString]| -> Result<Vec<PauliString>> {
        fa.iter()
            .map(lift_a)
            .chain(fb.iter().map(lift_b))
            .map(finish)
            .collect()
    };
    let logical_x = logicals(&a.logical_x, &b.logical_x)?;
    let logical_z = logicals(&a.logical_z, &b.logical_z)?;
    Ok(Generators {
        n: na + nb - 2 * l,
        stabilizers: kernel.into_iter().map(|r| r.remove_qubits(&drop)).collect(),
        logical_x,
        logical_z,
    })
}

/// Contracts legs of `a` with legs of `b` (0-based pairs) into a canonical code.
pub fn contract_codes(
    a: &StabilizerCode,
    b: &StabilizerCode,
    pairs: &[(usize, usize)],
) -> Result<StabilizerCode> {
    check_pairs(a.n, b.n, pairs)?;
    let prefer_b = if pairs.is_empty() {
        false
    } else {
        let la: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let lb: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        if distinguishable(a, &la)? {
            false
        } else if distinguishable(b, &lb)? {
            true
        } else {
            return Err(Error::NotDistinguishable);
        }
    };
    join(&Generators::of(a), &Generators::of(b), pairs, prefer_b)?.finalize()
}

/// Uniform random elements of the coset E(s) S L.
pub fn coset_sample<R: Rng>(
    code: &StabilizerCode,
    l: &LogicalClass,
    s: &Syndrome,
    count: usize,
    rng: &mut R,
) -> Result<Vec<PauliString>> {
    let mut base = code.pure_error(s)?;
    base.mul_assign(&code.logical_operator(l)?);
    Ok((0..count)
        .map(|_| {
            let mut p = base.clone();
            for g in &code.stabilizers {
                if rng.random::<bool>() {
                    p.mul_assign(g);
                }
            }
            p
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeLeg {
    pub node: usize,
    pub leg: usize,
}

impl NodeLeg {
    pub fn new(node: usize, leg: usize) -> Self {
        NodeLeg { node, leg }
    }
}

/// What a node leg is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binding {
    Edge(usize),
    Boundary(usize),
}

/// Base tensors a network file can name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseCode {
    Steane,
    Trivial,
}

impl BaseCode {
    pub fn code(self) -> StabilizerCode {
        match self {
            BaseCode::Steane => StabilizerCode::steane(),
            BaseCode::Trivial => StabilizerCode::trivial(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CodeTensor {
    pub base: BaseCode,
    pub code: StabilizerCode,
}

impl CodeTensor {
    pub fn new(base: BaseCode) -> Self {
        CodeTensor {
            base,
            code: base.code(),
        }
    }

    pub fn steane() -> Self {
        CodeTensor::new(BaseCode::Steane)
    }
}

/// A graph of code tensors whose uncontracted legs are the physical qubits.
#[derive(Debug)]
pub struct TensorNetworkCode {
    nodes: Vec<CodeTensor>,
    edges: Vec<(NodeLeg, NodeLeg)>,
    boundary: Vec<NodeLeg>,
    bindings: Vec<Vec<Binding>>,
    qubit_map: Vec<Vec<usize>>,
    k: usize,
    generators: Option<Generators>,
    flat: OnceLock<StabilizerCode>,
}

impl Default for TensorNetworkCode {
    fn default() -> Self {
        Self::new()
    }
}

impl TensorNetworkCode {
    /// Empty network that tracks the flattened code's generators.
    pub fn new() -> Self {
        TensorNetworkCode {
            nodes: Vec::new(),
            edges: Vec::new(),
            boundary: Vec::new(),
            bindings: Vec::new(),
            qubit_map: Vec::new(),
            k: 0,
            generators: Some(Generators {
                n: 0,
                stabilizers: vec![],
                logical_x: vec![],
                logical_z: vec![],
            }),
            flat: OnceLock::new(),
        }
    }

    /// Empty network that records the graph only; `flat` is unavailable.
    pub fn graph_only() -> Self {
        TensorNetworkCode {
            generators: None,
            ..Self::new()
        }
    }

    pub fn nodes(&self) -> &[CodeTensor] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(NodeLeg, NodeLeg)] {
        &self.edges
    }

    pub fn boundary(&self) -> &[NodeLeg] {
        &self.boundary
    }

    pub fn binding(&self, node: usize, leg: usize) -> Binding {
        self.bindings[node][leg]
    }

    pub fn bindings(&self, node: usize) -> &[Binding] {
        &self.bindings[node]
    }

    /// Positions of a node's logical qubits in the flattened numbering.
    pub fn qubit_map(&self) -> &[Vec<usize>] {
        &self.qubit_map
    }

    pub fn n(&self) -> usize {
        self.boundary.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn tracks_generators(&self) -> bool {
        self.generators.is_some()
    }

    /// Adds a tensor, contracting `pairings` of (live boundary leg, new leg).
    pub fn add_node(&mut self, t: CodeTensor, pairings: &[(NodeLeg, usize)]) -> Result<usize> {
        let id = self.nodes.len();
        let tn = t.code.n;
        let mut positions = Vec::with_capacity(pairings.len());
        let mut seen = vec![false; tn];
        for &(old, leg) in pairings {
            if leg >= tn {
                return Err(Error::BadPairing(format!(
                    "node {} has no leg {}",
                    id + 1,
                    leg + 1
                )));
            }
            if seen[leg] {
                return Err(Error::BadPairing(format!(
                    "leg {} of the new node paired twice",
                    leg + 1
                )));
            }
            seen[leg] = true;
            if old.node >= id || old.leg >= self.bindings[old.node].len() {
                return Err(Error::BadPairing(format!(
                    "no leg ({}, {})",
                    old.node + 1,
                    old.leg + 1
                )));
            }
            match self.bindings[old.node][old.leg] {
                Binding::Boundary(pos) => {
                    if positions.contains(&pos) {
                        return Err(Error::BadPairing(format!(
                            "leg ({}, {}) paired twice",
                            old.node + 1,
                            old.leg + 1
                        )));
                    }
                    positions.push(pos);
                }
                Binding::Edge(_) => {
                    return Err(Error::BadPairing(format!(
                        "leg ({}, {}) is already contracted",
                        old.node + 1,
                        old.leg + 1
                    )))
                }
            }
        }
        if !pairings.is_empty() {
            let legs: Vec<usize> = pairings.iter().map(|p| p.1).collect();
            if !distinguishable(&t.code, &legs)? {
                return Err(Error::NotDistinguishable);
            }
        }
        if let Some(g) = &self.generators {
            let pairs: Vec<(usize, usize)> = positions
                .iter()
                .copied()
                .zip(pairings.iter().map(|p| p.1))
                .collect();
            self.generators = Some(join(g, &Generators::of(&t.code), &pairs, true)?);
        }

        // Rebuild boundary order: survivors keep their order, then new free legs.
        let mut contracted = vec![false; self.boundary.len()];
        for &p in &positions {
            contracted[p] = true;
        }
        let mut bindings_new = vec![Binding::Boundary(0); tn];
        for (&(old, leg), _) in pairings.iter().zip(&positions) {
            let e = self.edges.len();
            self.edges.push((old, NodeLeg::new(id, leg)));
            self.bindings[old.node][old.leg] = Binding::Edge(e);
            bindings_new[leg] = Binding::Edge(e);
        }
        let mut boundary = Vec::with_capacity(self.boundary.len() + tn - 2 * pairings.len());
        for (pos, &nl) in self.boundary.iter().enumerate() {
            if !contracted[pos] {
                boundary.push(nl);
            }
        }
        for leg in 0..tn {
            if !seen[leg] {
                boundary.push(NodeLeg::new(id, leg));
            }
        }
        self.nodes.push(t);
        self.bindings.push(bindings_new);
        for (pos, nl) in boundary.iter().enumerate() {
            self.bindings[nl.node][nl.leg] = Binding::Boundary(pos);
        }
        self.boundary = boundary;
        let kk = self.nodes[id].code.k;
        self.qubit_map.push((self.k..self.k + kk).collect());
        self.k += kk;
        self.flat = OnceLock::new();
        Ok(id)
    }

    /// The flattened stabilizer code on the boundary qubits.
    pub fn flat(&self) -> Result<&StabilizerCode> {
        if let Some(c) = self.flat.get() {
            return Ok(c);
        }
        let g = self.generators.as_ref().ok_or_else(|| {
            Error::ResourceLimit("flattened code not tracked for this network".into())
        })?;
        let code = if self.nodes.len() == 1 {
            self.nodes[0].code.clone()
        } else {
            g.finalize()?
        };
        let _ = self.flat.set(code);
        Ok(self.flat.get().expect("just set"))
    }

    /// Graph distance of every node from node 0 (usize::MAX if unreachable).
    pub fn node_depths(&self) -> Vec<usize> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (a, b) in &self.edges {
            adj[a.node].push(b.node);
            adj[b.node].push(a.node);
        }
        let mut depth = vec![usize::MAX; self.nodes.len()];
        if self.nodes.is_empty() {
            return depth;
        }
        let mut queue = std::collections::VecDeque::new();
        depth[0] = 0;
        queue.push_back(0);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if depth[v] == usize::MAX {
                    depth[v] = depth[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        depth
    }

    /// Largest node depth plus one; 1 for a single node.
    pub fn radius(&self) -> usize {
        self.node_depths()
            .into_iter()
            .filter(|&d| d != usize::MAX)
            .max()
            .map_or(0, |d| d + 1)
    }

    /// Logical qubit indices of the nodes within `depth` of node 0.
    pub fn qubits_within_depth(&self, depth: usize) -> Vec<usize> {
        let d = self.node_depths();
        let mut out = Vec::new();
        for (node, q) in self.qubit_map.iter().enumerate() {
            if d[node] <= depth {
                out.extend(q);
            }
        }
        out
    }

    pub fn to_file(&self) -> NetworkFile {
        NetworkFile {
            nodes: self
                .nodes
                .iter()
                .map(|t| NodeSpec { code: t.base })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|(a, b)| [[a.node + 1, a.leg + 1], [b.node + 1, b.leg + 1]])
                .collect(),
            boundary: self
                .boundary
                .iter()
                .map(|b| [b.node + 1, b.leg + 1])
                .collect(),
            census: None,
        }
    }

    /// Rebuilds a network from its file form, replaying nodes in order.
    pub fn from_file(file: &NetworkFile, track_generators: bool) -> Result<Self> {
        let mut net = if track_generators {
            Self::new()
        } else {
            Self::graph_only()
        };
        let one_based = |pair: [usize; 2]| -> Result<NodeLeg> {
            if pair[0] == 0 || pair[1] == 0 {
                return Err(Error::InvalidNetwork(
                    "node and leg numbers are 1-based".into(),
                ));
            }
            Ok(NodeLeg::new(pair[0] - 1, pair[1] - 1))
        };
        let mut by_node: Vec<Vec<(NodeLeg, usize)>> = vec![Vec::new(); file.nodes.len()];
        for [a, b] in &file.edges {
            let (a, b) = (one_based(*a)?, one_based(*b)?);
            let (old, new) = if a.node < b.node { (a, b) } else { (b, a) };
            if new.node >= file.nodes.len() || old.node == new.node {
                return Err(Error::InvalidNetwork(format!(
                    "bad edge ({}, {}) - ({}, {})",
                    a.node + 1,
                    a.leg + 1,
                    b.node + 1,
                    b.leg + 1
                )));
            }
            by_node[new.node].push((old, new.leg));
        }
        for (i, spec) in file.nodes.iter().enumerate() {
            net.add_node(CodeTensor::new(spec.code), &by_node[i])?;
        }
        let boundary: Vec<NodeLeg> = file
            .boundary
            .iter()
            .map(|&p| one_based(p))
            .collect::<Result<_>>()?;
        if boundary != net.boundary {
            return Err(Error::InvalidNetwork(
                "boundary order does not match the edge list".into(),
            ));
        }
        Ok(net)
    }

    pub fn load(path: &Path, track_generators: bool) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::from_file(&file, track_generators)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeSpec {
    pub code: BaseCode,
}

/// On-disk network: nodes, edges as ((node, leg), (node, leg)) and boundary order, all 1-based.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkFile {
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<[[usize; 2]; 2]>,
    pub boundary: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub census: Option<crate::holographic::CodeCensus>,
}

/// Labels of a Pauli on the given qubits.
pub fn pattern(p: &PauliString, qubits: &[usize]) -> Vec<Pauli> {
    qubits.iter().map(|&q| p.get(q)).collect()
}
