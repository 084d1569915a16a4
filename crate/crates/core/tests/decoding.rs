use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tncode::compose::{CodeTensor, NodeLeg};
use tncode::decoder::{marginalize, word_assignment, PlanOptions};
use tncode::holographic::{build_code, build_network};
use tncode::pauli::Pauli;
use tncode::stabilizer::chi_oracle;
use tncode::{
    Decoder, LogicalAssignment, LogicalClass, NoiseModel, StabilizerCode, Syndrome,
    TensorNetworkCode,
};

fn two_node() -> TensorNetworkCode {
    let mut net = TensorNetworkCode::new();
    net.add_node(CodeTensor::steane(), &[]).unwrap();
    net.add_node(CodeTensor::steane(), &[(NodeLeg::new(0, 0), 0)])
        .unwrap();
    net
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()) || (a == 0.0 && b == 0.0)
}

#[test]
fn twelve_qubit_chi_matches_oracle() {
    let net = two_node();
    let code = net.flat().unwrap();
    let dec = Decoder::new(&net).unwrap();
    let noise = NoiseModel::depolarizing(0.1, 12).unwrap();
    for sidx in (0..1024).step_by(37) {
        let s = Syndrome::from_index(sidx, 10);
        for c in 0..16 {
            let want = chi_oracle(code, &LogicalClass::from_index(c, 2), &s, &noise).unwrap();
            let got = dec
                .chi(&word_assignment(&[0, 1], c), &s, &noise)
                .unwrap()
                .to_f64();
            assert!(rel_close(got, want, 1e-12), "s={s} c={c}: {got} vs {want}");
        }
    }
}

#[test]
fn steane_normalization() {
    let mut net = TensorNetworkCode::new();
    net.add_node(CodeTensor::steane(), &[]).unwrap();
    let dec = Decoder::new(&net).unwrap();
    for p in [0.01, 0.2, 0.6] {
        let noise = NoiseModel::depolarizing(p, 7).unwrap();
        let mut total = 0.0;
        for sidx in 0..64 {
            let s = Syndrome::from_index(sidx, 6);
            total += dec
                .chi(&LogicalAssignment::none(), &s, &noise)
                .unwrap()
                .to_f64();
        }
        assert!((total - 1.0).abs() < 1e-10);
    }
}

#[test]
fn nonuniform_noise_matches_oracle() {
    let net = two_node();
    let code = net.flat().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let probs: Vec<[f64; 4]> = (0..12)
        .map(|_| {
            let w: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>());
            let t: f64 = w.iter().sum();
            w.map(|v| v / t)
        })
        .collect();
    let noise = NoiseModel::new(probs).unwrap();
    let dec = Decoder::new(&net).unwrap();
    for sidx in [0u64, 1, 513, 1023] {
        let s = Syndrome::from_index(sidx, 10);
        for c in 0..16 {
            let want = chi_oracle(code, &LogicalClass::from_index(c, 2), &s, &noise).unwrap();
            let got = dec
                .chi(&word_assignment(&[0, 1], c), &s, &noise)
                .unwrap()
                .to_f64();
            assert!(rel_close(got, want, 1e-12));
        }
    }
}

#[test]
fn twelve_qubit_marginals_and_words() {
    let net = two_node();
    let dec = Decoder::new(&net).unwrap();
    let noise = NoiseModel::depolarizing(0.15, 12).unwrap();
    let code = net.flat().unwrap();
    for sidx in [0u64, 3, 100, 777] {
        let s = Syndrome::from_index(sidx, 10);
        let row: Vec<f64> = (0..16)
            .map(|c| chi_oracle(code, &LogicalClass::from_index(c, 2), &s, &noise).unwrap())
            .collect();
        let total: f64 = row.iter().sum();
        let joint: Vec<f64> = row.iter().map(|v| v / total).collect();
        let marg = marginalize(&joint, 2);
        for q in 0..2 {
            let m = dec.decode_marginal(q, &s, &noise).unwrap();
            assert!((m.probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            for l in 0..4 {
                assert!((m.probs[l] - marg[q][l]).abs() < 1e-10);
            }
        }
        let mut sum = 0.0;
        for w in 0..16 {
            let pw = dec
                .word_probability(&word_assignment(&[0, 1], w), &s, &noise)
                .unwrap();
            assert!((pw - joint[w]).abs() < 1e-10);
            sum += pw;
        }
        assert!((sum - 1.0).abs() < 1e-10);
    }
}

#[test]
fn single_target_word_probability_is_marginal() {
    let net = two_node();
    let dec = Decoder::new(&net).unwrap();
    let noise = NoiseModel::depolarizing(0.1, 12).unwrap();
    let s = Syndrome::from_index(300, 10);
    let m = dec.decode_marginal(1, &s, &noise).unwrap();
    for p in Pauli::ALL {
        let w = dec
            .word_probability(&LogicalAssignment::single(1, p), &s, &noise)
            .unwrap();
        assert!((w - m.probs[p.label() as usize]).abs() < 1e-12);
    }
}

#[test]
fn contraction_order_invariance() {
    for r in [2, 3] {
        let net = build_code(r).unwrap();
        let code = net.flat().unwrap();
        let noise = NoiseModel::depolarizing(0.09, net.n()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(r as u64);
        let variants = [
            PlanOptions::default(),
            PlanOptions {
                reverse: true,
                ..Default::default()
            },
            PlanOptions {
                rotate: 1,
                ..Default::default()
            },
            PlanOptions {
                rotate: 4,
                reverse: true,
                ..Default::default()
            },
            PlanOptions {
                greedy: true,
                ..Default::default()
            },
        ];
        let decs: Vec<Decoder> = variants
            .iter()
            .map(|o| Decoder::with_options(&net, o.clone()).unwrap())
            .collect();
        for _ in 0..5 {
            let e = tncode::experiments::sample_error(&noise, &mut rng);
            let s = code.syndrome(&e).unwrap();
            for asg in [
                LogicalAssignment::none(),
                LogicalAssignment::single(0, Pauli::Y),
                LogicalAssignment::word(&[1, 5], &[Pauli::X, Pauli::Z]),
            ] {
                let base = decs[0].chi(&asg, &s, &noise).unwrap();
                for d in &decs[1..] {
                    let v = d.chi(&asg, &s, &noise).unwrap();
                    assert!(
                        (v.ln() - base.ln()).abs() < 1e-12,
                        "radius {r}: {v:?} vs {base:?}"
                    );
                }
            }
        }
    }
}

#[test]
fn graph_only_network_decodes_in_error_frame() {
    let tracked = build_code(3).unwrap();
    let graph = build_network(3).unwrap();
    let code = tracked.flat().unwrap();
    let noise = NoiseModel::depolarizing(0.08, tracked.n()).unwrap();
    let a = Decoder::new(&tracked).unwrap();
    let b = Decoder::new(&graph).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let e = tncode::experiments::sample_error(&noise, &mut rng);
        let s = code.syndrome(&e).unwrap();
        let truth = code
            .logical_class(&e.multiply(&code.pure_error(&s).unwrap()).unwrap())
            .unwrap();
        for q in [0, 3, 20] {
            let abs = a.decode_marginal(q, &s, &noise).unwrap();
            let rel = b.decode_parallel_in_frame(&[q], &e, &noise).unwrap();
            // relative class M has probability of absolute class truth * M
            for m in Pauli::ALL {
                let l = truth.labels[q].mul(m);
                assert!(
                    (rel.marginals[0].probs[m.label() as usize] - abs.probs[l.label() as usize])
                        .abs()
                        < 1e-12
                );
            }
        }
    }
}

#[test]
fn deep_network_does_not_underflow() {
    let net = build_network(5).unwrap();
    let dec = Decoder::new(&net).unwrap();
    let noise = NoiseModel::depolarizing(0.1, net.n()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let e = tncode::experiments::sample_error(&noise, &mut rng);
    let out = dec.decode_parallel_in_frame(&[0], &e, &noise).unwrap();
    let m = &out.marginals[0];
    assert!(m.chi.iter().all(|c| c.ln().is_finite() && c.ln() < -1000.0));
    assert!((m.probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
}

#[test]
fn degenerate_noise_points() {
    let mut net = TensorNetworkCode::new();
    net.add_node(CodeTensor::steane(), &[]).unwrap();
    let dec = Decoder::new(&net).unwrap();
    // every qubit certainly X
    let noise = NoiseModel::new(vec![[0.0, 1.0, 0.0, 0.0]; 7]).unwrap();
    let code = StabilizerCode::steane();
    let e: tncode::PauliString = "XXXXXXX".parse().unwrap();
    let s = code.syndrome(&e).unwrap();
    let out = dec.decode_joint(&[0], &s, &noise).unwrap();
    assert_eq!(out.word, vec![Pauli::X]);
    assert_eq!(out.marginals[0].probs, [0.0, 1.0, 0.0, 0.0]);
    // a syndrome with zero probability yields no usable conditional
    let s1 = Syndrome::from_index(1, 6);
    assert!(dec
        .word_probability(&LogicalAssignment::single(0, Pauli::I), &s1, &noise)
        .is_err());
}

#[test]
fn invalid_inputs() {
    let net = two_node();
    let dec = Decoder::new(&net).unwrap();
    let noise = NoiseModel::depolarizing(0.1, 12).unwrap();
    let s = Syndrome::zero(10);
    assert!(dec.decode_marginal(2, &s, &noise).is_err());
    assert!(dec
        .chi(&LogicalAssignment::none(), &Syndrome::zero(9), &noise)
        .is_err());
    assert!(dec
        .chi(
            &LogicalAssignment::none(),
            &s,
            &NoiseModel::depolarizing(0.1, 7).unwrap()
        )
        .is_err());
    assert!(dec
        .decode_joint(&(0..11).collect::<Vec<_>>(), &s, &noise)
        .is_err());
}
