use adequa_core::generator::{AttentionMatrix, Generator, GeneratorConfig};
use adequa_core::metrics::{cdr_for_pair, chrf, chrf3, sentence_bleu, CHRF_BETA, CHRF_ORDER};
use adequa_core::Vocabulary;
use proptest::prelude::*;

/// Smoothed BLEU recomputed by nested loops over positions, no hashing.
fn bleu_oracle(h: &[usize], r: &[usize], max_n: usize) -> f64 {
    if h.is_empty() {
        return 0.0;
    }
    let mut logs = Vec::new();
    for n in 1..=max_n {
        if h.len() < n {
            logs.push(0.0);
            continue;
        }
        let hg: Vec<&[usize]> = (0..=h.len() - n).map(|i| &h[i..i + n]).collect();
        let rg: Vec<&[usize]> = if r.len() >= n { (0..=r.len() - n).map(|i| &r[i..i + n]).collect() } else { vec![] };
        let mut seen: Vec<&[usize]> = Vec::new();
        let mut matched = 0;
        for g in &hg {
            if seen.contains(g) {
                continue;
            }
            seen.push(g);
            let ch = hg.iter().filter(|x| *x == g).count();
            let cr = rg.iter().filter(|x| *x == g).count();
            matched += ch.min(cr);
        }
        logs.push(((matched + 1) as f64 / (hg.len() + 1) as f64).ln());
    }
    let c = h.len() as f64;
    let rl = r.len() as f64;
    let bp = if c < rl { (1.0 - rl / c).exp() } else { 1.0 };
    bp * (logs.iter().sum::<f64>() / max_n as f64).exp()
}

/// chrF by listing every character n-gram as a string and counting linearly.
fn chrf_oracle(h: &str, r: &str) -> f64 {
    let hc: Vec<char> = h.chars().collect();
    let rc: Vec<char> = r.chars().collect();
    if hc.is_empty() || rc.is_empty() {
        return 0.0;
    }
    let grams = |c: &[char], n: usize| -> Vec<String> {
        if c.len() < n {
            return vec![];
        }
        (0..=c.len() - n).map(|i| c[i..i + n].iter().collect()).collect()
    };
    let (mut ps, mut rs, mut k) = (0.0, 0.0, 0);
    for n in 1..=6 {
        let (hg, rg) = (grams(&hc, n), grams(&rc, n));
        if hg.is_empty() || rg.is_empty() {
            break;
        }
        let mut pool = rg.clone();
        let mut m = 0;
        for g in &hg {
            if let Some(i) = pool.iter().position(|x| x == g) {
                pool.swap_remove(i);
                m += 1;
            }
        }
        ps += m as f64 / hg.len() as f64;
        rs += m as f64 / rg.len() as f64;
        k += 1;
    }
    let (p, r) = (ps / k as f64, rs / k as f64);
    if p + r == 0.0 {
        0.0
    } else {
        10.0 * p * r / (9.0 * p + r)
    }
}

#[test]
fn bleu_examples() {
    assert_eq!(sentence_bleu(&[5, 6, 7, 8], &[5, 6, 7, 8], 4).unwrap(), 1.0);
    let short = sentence_bleu(&[1, 2], &[1, 2, 3, 4], 4).unwrap();
    assert!((short - (-1f64).exp()).abs() < 1e-12);
    assert!((short - 0.3679).abs() < 5e-5);
    assert_eq!(sentence_bleu(&[], &[1], 4).unwrap(), 0.0);
    assert!(sentence_bleu(&[1], &[], 4).is_err());
    // Only smoothing mass survives for disjoint sentences, shrinking with length.
    let disjoint = |n: usize| {
        let h: Vec<usize> = (0..n).collect();
        let r: Vec<usize> = (1000..1000 + n).collect();
        sentence_bleu(&h, &r, 4).unwrap()
    };
    assert!(disjoint(4) < 0.31);
    assert!(disjoint(40) < 0.03);
    assert!(disjoint(400) < 0.003);
}

#[test]
fn chrf_examples() {
    let v = Vocabulary::new(["ab", "cd", "xy", "zw"]).unwrap();
    assert_eq!(chrf3(&[4, 5], &[4, 5], &v).unwrap(), 1.0);
    assert_eq!(chrf3(&[6], &[4], &v).unwrap(), 0.0);
    // The inter-token space is a shared character.
    assert!(chrf3(&[6, 7], &[4, 5], &v).unwrap() > 0.0);
    assert_eq!(chrf3(&[], &[4, 5], &v).unwrap(), 0.0);
    // EOS is not rendered.
    assert_eq!(chrf3(&[4, 5, 2], &[4, 5], &v).unwrap(), 1.0);
}

#[test]
fn chrf_single_substitution_matches_brute_force() {
    let reference = "abcdefghij";
    for pos in 0..10 {
        let mut h: Vec<char> = reference.chars().collect();
        h[pos] = 'z';
        let h: String = h.into_iter().collect();
        let got = chrf(&h, reference, CHRF_ORDER, CHRF_BETA);
        let want = chrf_oracle(&h, reference);
        assert!((got - want).abs() < 1e-15, "pos {pos}: {got} vs {want}");
        assert!(got < 1.0 && got > 0.0);
    }
}

#[test]
fn cdr_for_identical_hypothesis_is_one() {
    let g = Generator::seeded(GeneratorConfig::tiny(6, 6, 4), 3).unwrap();
    let src = [1, 4, 5, 2];
    let reference = [4, 5, 3, g.config.eos];
    let hyp = g.forced_result(&src, &reference).unwrap();
    let s = cdr_for_pair(&g, &src, &reference, &hyp).unwrap();
    assert_eq!(s.value, 1.0);
    // A reference of only EOS has no coverage obligation.
    let bare = [g.config.eos];
    let hyp = g.greedy_decode(&src, 5).unwrap();
    let d = cdr_for_pair(&g, &src, &bare, &hyp).unwrap();
    assert!(d.degenerate);
    assert_eq!(d.value, 1.0);
}

#[test]
fn constructed_attention_matrix_rejects_bad_rows() {
    assert!(AttentionMatrix::new(vec![vec![0.5, 0.6]], 2).is_err());
    assert!(AttentionMatrix::new(vec![vec![1.0]], 2).is_err());
    assert!(AttentionMatrix::new(vec![vec![1.5, -0.5]], 2).is_err());
}

fn tokens() -> impl Strategy<Value = Vec<usize>> {
    proptest::collection::vec(4usize..9, 0..14)
}

proptest! {
    #[test]
    fn bleu_agrees_with_oracle(h in tokens(), r in tokens().prop_filter("nonempty", |r| !r.is_empty())) {
        let got = sentence_bleu(&h, &r, 4).unwrap();
        prop_assert!((got - bleu_oracle(&h, &r, 4)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&got));
        prop_assert_eq!(sentence_bleu(&r, &r, 4).unwrap(), 1.0);
    }

    #[test]
    fn chrf_agrees_with_oracle(h in tokens(), r in tokens()) {
        let v = Vocabulary::new(["a", "b", "ab", "ba", "c"]).unwrap();
        let got = chrf3(&h, &r, &v).unwrap();
        prop_assert!((got - chrf_oracle(&v.render(&h), &v.render(&r))).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&got));
        if !r.is_empty() {
            prop_assert!((chrf3(&r, &r, &v).unwrap() - 1.0).abs() < 1e-15);
        }
    }
}
