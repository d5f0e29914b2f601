use adequa_autodiff::gradcheck::{central_difference, worst_violation};
use adequa_autodiff::Tensor;
use adequa_core::generator::{EncoderAnnotations, Generator, GeneratorConfig};
use adequa_core::optim::{Optimizer, OptimizerKind};
use adequa_core::TokenId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny(seed: u64, src_vocab: usize, tgt_vocab: usize, dim: usize) -> Generator {
    let mut g = Generator::seeded(GeneratorConfig::tiny(src_vocab, tgt_vocab, dim), seed).unwrap();
    // Spread the initial weights so distributions are far from uniform.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let flat: Vec<f64> = g.params.flat().iter().map(|_| rng.gen_range(-1.5..1.5)).collect();
    g.params.set_flat(&flat);
    g
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn vec_mat(x: &[f64], m: &Tensor) -> Vec<f64> {
    (0..m.cols())
        .map(|j| (0..m.rows()).map(|i| x[i] * m.get2(i, j)).sum())
        .collect()
}

/// Hand-unrolled GRU step straight from the parameter tensors.
fn gru_oracle(g: &Generator, prefix: &str, x: &[f64], h: &[f64]) -> Vec<f64> {
    let p = |n: &str| g.params.get(&format!("{prefix}.{n}")).unwrap();
    let affine = |w: &str, u: &str, b: &str| -> Vec<f64> {
        let xw = vec_mat(x, p(w));
        let hu = vec_mat(h, p(u));
        (0..h.len()).map(|k| xw[k] + hu[k] + p(b).values()[k]).collect()
    };
    let r: Vec<f64> = affine("w_r", "u_r", "b_r").into_iter().map(sigmoid).collect();
    let z: Vec<f64> = affine("w_z", "u_z", "b_z").into_iter().map(sigmoid).collect();
    let xw = vec_mat(x, p("w_n"));
    let hu = vec_mat(h, p("u_n"));
    (0..h.len())
        .map(|k| {
            let n = (xw[k] + p("b_n").values()[k] + r[k] * (hu[k] + p("b_hn").values()[k])).tanh();
            n + z[k] * (h[k] - n)
        })
        .collect()
}

fn embedding(g: &Generator, tok: TokenId) -> Vec<f64> {
    g.params.get("src_emb").unwrap().row_slice(tok).to_vec()
}

#[test]
fn single_position_source_has_one_annotation() {
    let g = tiny(1, 5, 4, 3);
    let a = g.encode(&[2]).unwrap();
    assert_eq!(a.len(), 1);
    assert_eq!(a.matrix.cols(), 6);
    assert!(g.encode(&[]).is_err());
    assert!(g.encode(&[9]).is_err());
}

#[test]
fn annotations_match_hand_unrolled_recurrence() {
    let g = tiny(2, 5, 4, 3);
    let h = 3;
    let zero = vec![0.0; h];
    for src in [[1usize, 4], [4, 1]] {
        let (ea, eb) = (embedding(&g, src[0]), embedding(&g, src[1]));
        let f1 = gru_oracle(&g, "enc_fwd", &ea, &zero);
        let f2 = gru_oracle(&g, "enc_fwd", &eb, &f1);
        let b2 = gru_oracle(&g, "enc_bwd", &eb, &zero);
        let b1 = gru_oracle(&g, "enc_bwd", &ea, &b2);
        let ann = g.encode(&src).unwrap().matrix;
        let expect = [[f1, b1], [f2, b2]];
        for (j, row) in expect.iter().enumerate() {
            let want: Vec<f64> = row.concat();
            for (a, b) in ann.row_slice(j).iter().zip(&want) {
                assert!((a - b).abs() < 1e-12, "position {j}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn backward_half_runs_in_reverse_order() {
    // With both directions sharing weights, the backward half for x equals
    // the forward half for reversed x read back to front.
    let mut g = tiny(3, 6, 4, 3);
    for gate in ["w_r", "w_z", "w_n", "u_r", "u_z", "u_n", "b_r", "b_z", "b_n", "b_hn"] {
        let f = g.params.get(&format!("enc_fwd.{gate}")).unwrap().clone();
        *g.params.get_mut(&format!("enc_bwd.{gate}")).unwrap() = f;
    }
    let src = [1usize, 5];
    let rev = [5usize, 1];
    let a = g.encode(&src).unwrap().matrix;
    let b = g.encode(&rev).unwrap().matrix;
    for j in 0..2 {
        let bwd = &a.row_slice(j)[3..];
        let fwd_rev = &b.row_slice(1 - j)[..3];
        for (x, y) in bwd.iter().zip(fwd_rev) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}

#[test]
fn zero_model_gives_zero_annotations() {
    let mut g = tiny(4, 5, 4, 3);
    let n = g.params.num_values();
    g.params.set_flat(&vec![0.0; n]);
    let a = g.encode(&[1, 2, 3]).unwrap();
    // Zero inputs, zero weights: r = z = 1/2, candidate tanh(0) = 0, state stays 0.
    assert!(a.matrix.values().iter().all(|&v| v == 0.0));
}

#[test]
fn attention_single_position_and_symmetry() {
    let g = tiny(5, 5, 4, 3);
    let ann = g.encode(&[3]).unwrap();
    let s = g.initial_state(&ann).unwrap();
    let (ctx, w) = g.attend(&s, &ann).unwrap();
    assert_eq!(w, vec![1.0]);
    assert_eq!(ctx.values(), ann.matrix.row_slice(0));

    let row: Vec<f64> = (0..6).map(|k| 0.1 * k as f64 - 0.2).collect();
    let same = EncoderAnnotations {
        matrix: Tensor::new(vec![4, 6], row.repeat(4)).unwrap(),
    };
    let (_, w) = g.attend(&s, &same).unwrap();
    for p in w {
        assert!((p - 0.25).abs() < 1e-15);
    }
}

#[test]
fn context_is_the_weighted_sum_of_annotations() {
    for seed in 0..10 {
        let g = tiny(10 + seed, 6, 4, 3);
        let ann = g.encode(&[1, 4, 2, 5]).unwrap();
        let s = g.initial_state(&ann).unwrap();
        let (ctx, w) = g.attend(&s, &ann).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for c in 0..6 {
            let direct: f64 = (0..4).map(|j| w[j] * ann.matrix.get2(j, c)).sum();
            assert!((ctx.values()[c] - direct).abs() < 1e-12);
        }
    }
}

#[test]
fn decode_step_distribution_and_forced_argmax() {
    let mut g = tiny(6, 5, 4, 3);
    let ann = g.encode(&[1, 2]).unwrap();
    let s = g.initial_state(&ann).unwrap();
    let out = g.decode_step(1, &s, &ann).unwrap();
    assert!((out.distribution.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert_eq!(g.decode_step(1, &s, &ann).unwrap(), out);
    assert!(g.decode_step(4, &s, &ann).is_err());

    // Zero output weights with a bias favoring token 2 pin the argmax.
    let w = g.params.get_mut("out.w").unwrap();
    w.values_mut().iter_mut().for_each(|v| *v = 0.0);
    let b = g.params.get_mut("out.b").unwrap();
    b.values_mut().copy_from_slice(&[0.0, 0.0, 5.0, 0.0]);
    let out = g.decode_step(0, &s, &ann).unwrap();
    let best = (0..4).max_by(|&i, &j| out.distribution[i].total_cmp(&out.distribution[j])).unwrap();
    assert_eq!(best, 2);
    let e5 = 5f64.exp();
    assert!((out.distribution[2] - e5 / (e5 + 3.0)).abs() < 1e-12);
}

#[test]
fn greedy_decode_contract() {
    let g = tiny(7, 6, 5, 3);
    let src = [1, 3, 5];
    let one = g.greedy_decode(&src, 1).unwrap();
    assert_eq!(one.tokens.len(), 1);
    assert!(g.greedy_decode(&src, 0).is_err());

    let r = g.greedy_decode(&src, 6).unwrap();
    assert_eq!(g.greedy_decode(&src, 6).unwrap(), r);
    assert_eq!(r.attention.target_len(), r.tokens.len());
    assert!((r.total_log_prob - r.step_log_probs.iter().sum::<f64>()).abs() < 1e-9);
    // No single-token substitution beats the greedy choice at that step.
    for k in 0..r.tokens.len() {
        let greedy_prefix = g.sequence_log_prob(&src, &r.tokens[..=k]).unwrap().0;
        for alt in 0..5 {
            let mut p = r.tokens[..=k].to_vec();
            p[k] = alt;
            assert!(g.sequence_log_prob(&src, &p).unwrap().0 <= greedy_prefix + 1e-15);
        }
    }
}

#[test]
fn sampling_contract() {
    let g = tiny(8, 6, 5, 3);
    let src = [2, 4, 1];
    let greedy = g.greedy_decode(&src, 8).unwrap();
    for seed in 0..5 {
        assert_eq!(g.sample_decode_seeded(&src, 8, 1e6, seed).unwrap().tokens, greedy.tokens);
    }
    let a = g.sample_decode_seeded(&src, 8, 1.0, 42).unwrap();
    assert_eq!(g.sample_decode_seeded(&src, 8, 1.0, 42).unwrap(), a);
    assert!(g.sample_decode_seeded(&src, 8, 0.0, 1).is_err());

    // Recorded log-probs are those of the unsharpened model.
    let b = g.sample_decode_seeded(&src, 8, 3.0, 9).unwrap();
    let forced = g.sequence_log_prob(&src, &b.tokens).unwrap().0;
    assert!((forced - b.total_log_prob).abs() < 1e-9);
}

#[test]
fn first_token_frequencies_match_the_model() {
    let g = tiny(9, 5, 4, 3);
    let src = [1, 2, 3];
    let ann = g.encode(&src).unwrap();
    let p = g.decode_step(g.config.bos, &g.initial_state(&ann).unwrap(), &ann).unwrap().distribution;
    let n = 100_000;
    let mut counts = [0usize; 4];
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..n {
        counts[g.sample_decode(&src, 1, 1.0, &mut rng).unwrap().tokens[0]] += 1;
    }
    for k in 0..4 {
        let expect = n as f64 * p[k];
        let sigma = (n as f64 * p[k] * (1.0 - p[k])).sqrt();
        assert!(
            (counts[k] as f64 - expect).abs() <= 3.0 * sigma,
            "token {k}: {} vs {expect:.1} ± {sigma:.1}",
            counts[k]
        );
    }
}

#[test]
fn force_decode_reproduces_greedy_paths() {
    for seed in 0..10 {
        let g = tiny(20 + seed, 6, 5, 3);
        let src = [1, 4, 2];
        let r = g.greedy_decode(&src, 30).unwrap();
        if r.tokens.last() != Some(&g.config.eos) {
            continue;
        }
        let (lp, att) = g.force_decode(&src, &r.tokens).unwrap();
        assert!((lp - r.total_log_prob).abs() < 1e-9);
        for (a, b) in att.rows().iter().zip(r.attention.rows()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn force_decode_contract() {
    let g = tiny(30, 5, 3, 3);
    let eos = g.config.eos;
    assert!(g.force_decode(&[1], &[0]).is_err());
    assert!(g.force_decode(&[1], &[]).is_err());
    let ann = g.encode(&[1, 2]).unwrap();
    let p = g.decode_step(g.config.bos, &g.initial_state(&ann).unwrap(), &ann).unwrap().distribution;
    let (lp, att) = g.force_decode(&[1, 2], &[eos]).unwrap();
    assert!((lp - p[eos].ln()).abs() < 1e-12);
    assert_eq!(att.target_len(), 1);
}

/// Every EOS-terminated sequence up to `cap` tokens, and every unterminated
/// sequence of exactly `cap` tokens.
fn enumerate(vocab: usize, eos: usize, cap: usize) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let mut done = Vec::new();
    let mut open: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..cap {
        let mut next = Vec::new();
        for p in &open {
            for t in 0..vocab {
                let mut q = p.clone();
                q.push(t);
                if t == eos {
                    done.push(q);
                } else {
                    next.push(q);
                }
            }
        }
        open = next;
    }
    (done, open)
}

#[test]
fn enumerated_probabilities_sum_to_one() {
    for draw in 0..10 {
        let g = tiny(100 + draw, 4, 3, 3);
        let src = [1, 3];
        for cap in 1..=3 {
            let (done, open) = enumerate(3, g.config.eos, cap);
            let terminated: f64 = done.iter().map(|y| g.force_decode(&src, y).unwrap().0.exp()).sum();
            let capped: f64 = open.iter().map(|y| g.sequence_log_prob(&src, y).unwrap().0.exp()).sum();
            assert!(
                (terminated + capped - 1.0).abs() < 1e-6,
                "draw {draw} cap {cap}: terminated {terminated} + capped {capped}"
            );
        }
    }
}

#[test]
fn attention_rows_are_distributions_in_every_mode() {
    let g = tiny(40, 7, 5, 4);
    let src = [1, 2, 3, 4, 5, 6];
    let mut rows = Vec::new();
    rows.extend(g.greedy_decode(&src, 10).unwrap().attention.rows().to_vec());
    rows.extend(g.sample_decode_seeded(&src, 10, 1.0, 3).unwrap().attention.rows().to_vec());
    rows.extend(g.sequence_log_prob(&src, &[0, 1, 3, 0]).unwrap().1.rows().to_vec());
    for r in rows {
        assert!(r.iter().all(|&p| p >= 0.0));
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn mle_loss_identities() {
    let g = tiny(50, 5, 4, 3);
    let eos = g.config.eos;
    let pair = (vec![1, 2, 4], vec![0, 2, eos]);
    let l1 = g.mle_loss(&[pair.clone()]).unwrap();
    assert!((l1 + g.force_decode(&pair.0, &pair.1).unwrap().0).abs() < 1e-12);
    let l2 = g.mle_loss(&[pair.clone(), pair.clone()]).unwrap();
    assert!((l1 - l2).abs() < 1e-12);
    assert!(g.mle_loss(&[]).is_err());
    assert!(g.mle_loss(&[(vec![1], vec![0])]).is_err());
}

#[test]
fn mle_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    for trial in 0..50 {
        let g = tiny(1000 + trial, 4, 4, 2);
        let eos = g.config.eos;
        let batch: Vec<(Vec<usize>, Vec<usize>)> = (0..rng.gen_range(1..=2))
            .map(|_| {
                let src = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..4)).collect();
                let mut tgt: Vec<usize> = (0..rng.gen_range(0..=2)).map(|_| rng.gen_range(0..3)).collect();
                tgt.push(eos);
                (src, tgt)
            })
            .collect();
        let (_, grads) = g.mle_loss_and_grad(&batch).unwrap();
        let theta = g.params.flat();
        let numeric = central_difference(&theta, 1e-5, |x| {
            let mut probe = g.clone();
            probe.params.set_flat(x);
            probe.mle_loss(&batch).unwrap()
        });
        let v = worst_violation(&grads.flat(), &numeric, 1e-4, 1e-6);
        assert!(v <= 1.0, "trial {trial}: violation ratio {v}");
    }
}

fn memorization_corpus(g: &Generator, rng: &mut ChaCha8Rng) -> Vec<(Vec<usize>, Vec<usize>)> {
    (0..10)
        .map(|_| {
            let n = rng.gen_range(2..=5);
            let src: Vec<usize> = (0..n).map(|_| rng.gen_range(4..g.config.src_vocab)).collect();
            let mut tgt: Vec<usize> = src.iter().rev().map(|&t| 4 + (t * 3) % (g.config.tgt_vocab - 4)).collect();
            tgt.push(g.config.eos);
            (src, tgt)
        })
        .collect()
}

#[test]
fn memorizes_ten_pairs_within_500_updates() {
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let mut g = Generator::seeded(GeneratorConfig::new(14, 14), 71).unwrap();
    let corpus = memorization_corpus(&g, &mut rng);
    let tokens: usize = corpus.iter().map(|p| p.1.len()).sum();
    let mut opt = Optimizer::new(OptimizerKind::Adam, 0.01, 5.0);
    let mut per_token = f64::INFINITY;
    for step in 0..500 {
        let (loss, grads) = g.mle_loss_and_grad(&corpus).unwrap();
        per_token = loss * corpus.len() as f64 / tokens as f64;
        if per_token < 0.01 {
            println!("per-token loss {per_token:.5} after {step} updates");
            break;
        }
        opt.step(&mut g.params, grads);
    }
    assert!(per_token < 0.01, "per-token loss {per_token}");
    for (src, tgt) in &corpus {
        assert_eq!(&g.greedy_decode(src, 20).unwrap().tokens, tgt);
    }
}
