use std::collections::HashMap;

use tncode::compose::{CodeTensor, NodeLeg};
use tncode::gf2;
use tncode::holographic::build_tiling;
use tncode::pauli::{Pauli, PauliString};
use tncode::{contract_codes, LogicalClass, StabilizerCode, TensorNetworkCode};

/// All 64 strings of the coset L S, from the generator rows directly.
fn coset(code: &StabilizerCode, class: usize) -> Vec<PauliString> {
    let rep = code
        .logical_operator(&LogicalClass::from_index(class, code.k))
        .unwrap();
    (0u32..1 << code.num_stabilizers())
        .map(|g| {
            let mut p = rep.clone();
            for (i, s) in code.stabilizers.iter().enumerate() {
                if g >> i & 1 == 1 {
                    p = p.multiply(s).unwrap();
                }
            }
            p
        })
        .collect()
}

fn pack(labels: impl Iterator<Item = Pauli>) -> u32 {
    labels
        .enumerate()
        .map(|(i, p)| (p.label() as u32) << (2 * i))
        .sum()
}

#[test]
fn joined_coset_tensor_matches_leg_sum() {
    let s = StabilizerCode::steane();
    let joined = contract_codes(&s, &s, &[(0, 0)]).unwrap();
    // sum over the shared leg label of T(L1) T(L2)
    let mut contracted: HashMap<u32, (usize, u32)> = HashMap::new();
    for l1 in 0..4 {
        let ca = coset(&s, l1);
        for l2 in 0..4 {
            for b in coset(&s, l2) {
                for a in ca.iter().filter(|a| a.get(0) == b.get(0)) {
                    let key = pack((1..7).map(|i| a.get(i)).chain((1..7).map(|i| b.get(i))));
                    let e = contracted.entry(key).or_insert((l1 | l2 << 2, 0));
                    assert_eq!(e.0, l1 | l2 << 2);
                    e.1 += 1;
                }
            }
        }
    }
    assert_eq!(contracted.len(), 16 * 1024);
    assert!(contracted.values().all(|&(_, c)| c == 1));

    // per-qubit syndrome contributions, so each of the 4^12 strings costs 12 lookups
    let table: Vec<[u32; 4]> = (0..12)
        .map(|q| {
            std::array::from_fn(|l| {
                let p = PauliString::single(12, q, Pauli::from_label(l as u8));
                joined
                    .syndrome(&p)
                    .unwrap()
                    .bits()
                    .iter()
                    .enumerate()
                    .map(|(i, &b)| (b as u32) << i)
                    .sum()
            })
        })
        .collect();
    let mut members = 0usize;
    for g in 0u32..1 << 24 {
        let syn = (0..12).fold(0, |acc, q| acc ^ table[q][(g >> (2 * q) & 3) as usize]);
        let entry = contracted.get(&g);
        if syn != 0 {
            assert!(
                entry.is_none(),
                "string {g:x} has a syndrome but a nonzero contraction"
            );
            continue;
        }
        let p = PauliString::from_labels(
            &(0..12)
                .map(|q| (g >> (2 * q) & 3) as u8)
                .collect::<Vec<_>>(),
        );
        let class = joined.logical_class(&p).unwrap().index();
        assert_eq!(entry.map(|e| e.0), Some(class), "string {p}");
        members += 1;
    }
    assert_eq!(members, 16 * 1024);
}

#[test]
fn twelve_qubit_code_parameters() {
    let s = StabilizerCode::steane();
    let c = contract_codes(&s, &s, &[(0, 0)]).unwrap();
    assert_eq!((c.n, c.k), (12, 2));
    assert!(c.validate().is_empty());
    assert_eq!(c.distance_bruteforce().unwrap(), 3);
}

/// Stabilizer rows relabelled by (role, leg) so differently built networks compare.
fn canonical_rows(net: &TensorNetworkCode, role: &[usize]) -> Vec<Vec<u64>> {
    let mut keys: Vec<(usize, usize, usize)> = net
        .boundary()
        .iter()
        .enumerate()
        .map(|(pos, nl)| (role[nl.node], nl.leg, pos))
        .collect();
    keys.sort_unstable();
    let order: Vec<usize> = keys.iter().map(|k| k.2).collect();
    net.flat()
        .unwrap()
        .stabilizers
        .iter()
        .map(|s| {
            let mut p = PauliString::identity(s.len());
            for (new, &old) in order.iter().enumerate() {
                p.set(new, s.get(old));
            }
            gf2::pauli_row(&p)
        })
        .collect()
}

#[test]
fn chain_assembly_order_does_not_matter() {
    // A(leg 1) - B(leg 1), B(leg 4) - C(leg 1)
    let mut first = TensorNetworkCode::new();
    first.add_node(CodeTensor::steane(), &[]).unwrap();
    first
        .add_node(CodeTensor::steane(), &[(NodeLeg::new(0, 0), 0)])
        .unwrap();
    first
        .add_node(CodeTensor::steane(), &[(NodeLeg::new(1, 3), 0)])
        .unwrap();

    let mut second = TensorNetworkCode::new();
    second.add_node(CodeTensor::steane(), &[]).unwrap(); // B
    second
        .add_node(CodeTensor::steane(), &[(NodeLeg::new(0, 3), 0)])
        .unwrap(); // C
    second
        .add_node(CodeTensor::steane(), &[(NodeLeg::new(0, 0), 0)])
        .unwrap(); // A

    let a = canonical_rows(&first, &[0, 1, 2]);
    let b = canonical_rows(&second, &[1, 2, 0]);
    let cols = 2 * first.n();
    let mut both = a.clone();
    both.extend(b.iter().cloned());
    assert_eq!(gf2::rank(&a, cols), gf2::rank(&b, cols));
    assert_eq!(gf2::rank(&both, cols), gf2::rank(&a, cols));
}

#[test]
fn every_assembly_step_validates() {
    let tiling = build_tiling(3).unwrap();
    let full = tncode::holographic::build_code(3).unwrap();
    let mut net = TensorNetworkCode::new();
    for (id, _) in tiling.tiles.iter().enumerate() {
        // replay the builder's own pairings from the finished network
        let pairs: Vec<(NodeLeg, usize)> = full
            .edges()
            .iter()
            .filter(|(_, new)| new.node == id)
            .map(|&(old, new)| (old, new.leg))
            .collect();
        net.add_node(CodeTensor::steane(), &pairs).unwrap();
        let flat = net.flat().unwrap();
        assert!(flat.validate().is_empty(), "step {id}");
        // a lone tile keeps the table's pure errors, which need not commute
        if id > 0 {
            assert!(flat.anticommuting_pure_errors().is_empty());
        }
        assert_eq!(flat.k, id + 1);
    }
    assert_eq!(net.flat().unwrap(), full.flat().unwrap());
}
