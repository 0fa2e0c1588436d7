mod common;

use common::decoding::{random_events, random_source, toy_vocab};
use medevent::decoder::{
    allowed_tokens, beam_search, DecodeConfig, EchoScorer, GrammarState, NextTokenScorer, Phase, RandomScorer, TokenId,
    Vocabulary,
};
use medevent::linearizer::TokenSet;
use medevent::{decode_events, encode_events, MedicalRecord, OutputFormat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn every_encoded_event_list_is_admitted_by_the_mask() {
    let v = toy_vocab();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = DecodeConfig::default();
    for _ in 0..300 {
        let source = random_source(&mut rng);
        let events = random_events(&mut rng);
        let s = encode_events(&events, OutputFormat::SpecialToken).unwrap();
        let mut ids = v.tokenize(&s).unwrap();
        ids.push(v.eos());
        let mut state = GrammarState::new();
        for &id in &ids {
            let mask = allowed_tokens(&state, &v, &source, &cfg);
            assert!(mask[id], "{s:?}: token {:?} rejected", v.token(id));
            state = state.advance(&v, id).unwrap();
        }
        assert_eq!(state.phase(), Phase::Done);
        assert_eq!(state.events_completed(), events.len());
    }
}

#[test]
fn random_scorer_outputs_always_parse() {
    let v = toy_vocab();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut finished = 0;
    let mut with_events = 0;
    for trial in 0..200u64 {
        let source = random_source(&mut rng);
        let scorer = RandomScorer::new(trial, &v)
            .min_len(rng.gen_range(0..40))
            .content_penalty(rng.gen_range(0.5..1.5));
        let cfg = DecodeConfig {
            beam_width: rng.gen_range(1..5),
            max_output_len: 64,
            copy_constraint: rng.gen_bool(0.5),
            length_normalization: rng.gen_bool(0.3),
        };
        let out = beam_search(&scorer, &source, &v, &cfg).unwrap();
        assert!(out.tokens.len() <= cfg.max_output_len);
        if out.truncated {
            continue;
        }
        finished += 1;
        let (events, diags) = decode_events(&out.text, OutputFormat::SpecialToken);
        assert!(diags.is_empty(), "{:?} -> {diags:?}", out.text);
        if !events.is_empty() {
            with_events += 1;
        }
        if cfg.copy_constraint {
            for e in &events {
                for (slot, value) in
                    std::iter::once((medevent::Slot::Core, e.core_name())).chain(e.attribute_instances())
                {
                    if slot != medevent::Slot::Tendency {
                        assert!(source.text.contains(value), "{value:?} not in {:?}", source.text);
                    }
                }
            }
        }
    }
    assert!(finished >= 150, "only {finished} decodes reached EOS");
    assert!(with_events >= 100, "only {with_events} decodes produced events");
}

#[test]
fn echo_scorer_reproduces_legal_targets_at_any_width() {
    let v = toy_vocab();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let source = MedicalRecord::new("r", "x").unwrap();
    for _ in 0..100 {
        let target = encode_events(&random_events(&mut rng), OutputFormat::SpecialToken).unwrap();
        let scorer = EchoScorer::new(&target, &v).unwrap();
        for width in [1, 3, 5] {
            let cfg = DecodeConfig {
                beam_width: width,
                ..DecodeConfig::default()
            };
            let out = beam_search(&scorer, &source, &v, &cfg).unwrap();
            assert_eq!(out.text, target);
        }
    }
}

#[test]
fn grammar_overrides_an_illegal_target() {
    let v = toy_vocab();
    let source = MedicalRecord::new("r", "a").unwrap();
    for target in [
        "<anatomy>a",
        "<ent><null><tendency><null><character><null><anatomy><null>",
        "<ent>a<p>b",
    ] {
        let scorer = EchoScorer::new(target, &v).unwrap();
        let out = beam_search(&scorer, &source, &v, &DecodeConfig::default()).unwrap();
        assert_ne!(out.text, target);
        assert!(!out.truncated);
        assert!(decode_events(&out.text, OutputFormat::SpecialToken).1.is_empty());
    }
}

#[test]
fn out_of_vocabulary_target_is_a_tokenization_error() {
    let v = toy_vocab();
    let err = EchoScorer::new("<ent>zzz", &v).unwrap_err();
    assert_eq!(err.position, 5);
}

/// Scores looked up by the detokenized prefix.
struct TableScorer<F: Fn(&str, &str) -> f64> {
    vocab: Vocabulary,
    f: F,
}

impl<F: Fn(&str, &str) -> f64> NextTokenScorer for TableScorer<F> {
    fn score(&self, prefix: &[TokenId], _: &MedicalRecord) -> Vec<f64> {
        let p = self.vocab.detokenize(prefix);
        (0..self.vocab.len())
            .map(|id| (self.f)(&p, self.vocab.token(id)))
            .collect()
    }
}

#[test]
fn wider_beam_can_end_lower() {
    // The hypothesis a wider beam keeps alive crowds out the path a greedy
    // search follows to a better finish.
    let vocab = Vocabulary::new(TokenSet::default(), ["a", "b"]).unwrap();
    let scorer = TableScorer {
        vocab: vocab.clone(),
        f: |prefix: &str, tok: &str| match (prefix, tok) {
            ("<ent>", "a") => -1.0,
            ("<ent>", "b") => -1.5,
            ("<ent>a", _) => -1.0,
            ("<ent>b", _) => 0.0,
            (p, _) if p.starts_with("<ent>b") => -100.0,
            ("", "</s>") => -50.0,
            _ => 0.0,
        },
    };
    let source = MedicalRecord::new("r", "ab").unwrap();
    let run = |w| {
        let cfg = DecodeConfig {
            beam_width: w,
            max_output_len: 16,
            ..DecodeConfig::default()
        };
        beam_search(&scorer, &source, &vocab, &cfg).unwrap()
    };
    let narrow = run(1);
    let wide = run(2);
    assert_eq!(narrow.score, -2.0);
    assert!(wide.score < narrow.score, "{} vs {}", wide.score, narrow.score);
}

/// Best score over every grammar-legal completed sequence within `max_len`.
fn exhaustive_best<S: NextTokenScorer>(
    scorer: &S,
    source: &MedicalRecord,
    vocab: &Vocabulary,
    cfg: &DecodeConfig,
) -> f64 {
    fn go<S: NextTokenScorer>(
        prefix: &mut Vec<TokenId>,
        state: &GrammarState,
        acc: f64,
        scorer: &S,
        source: &MedicalRecord,
        vocab: &Vocabulary,
        cfg: &DecodeConfig,
    ) -> f64 {
        if state.phase() == Phase::Done {
            return acc;
        }
        if prefix.len() == cfg.max_output_len {
            return f64::NEG_INFINITY;
        }
        let scores = scorer.score(prefix, source);
        let mask = allowed_tokens(state, vocab, source, cfg);
        let mut best = f64::NEG_INFINITY;
        for id in (0..vocab.len()).filter(|&i| mask[i]) {
            let next = state.advance(vocab, id).unwrap();
            prefix.push(id);
            best = best.max(go(prefix, &next, acc + scores[id], scorer, source, vocab, cfg));
            prefix.pop();
        }
        best
    }
    go(&mut Vec::new(), &GrammarState::new(), 0.0, scorer, source, vocab, cfg)
}

#[test]
fn beam_never_beats_the_exhaustive_optimum() {
    let vocab = Vocabulary::new(TokenSet::default(), ["a", "b"]).unwrap();
    let source = MedicalRecord::new("r", "ab").unwrap();
    let mut compared = 0;
    for seed in 0..40u64 {
        let scorer = RandomScorer::new(seed, &vocab)
            .min_len((seed % 10) as usize)
            .content_penalty(0.5);
        for width in 1..=4 {
            let cfg = DecodeConfig {
                beam_width: width,
                max_output_len: 9,
                ..DecodeConfig::default()
            };
            let exact = exhaustive_best(&scorer, &source, &vocab, &cfg);
            let out = beam_search(&scorer, &source, &vocab, &cfg).unwrap();
            if !out.truncated {
                assert!(out.score <= exact + 1e-12, "seed {seed} width {width}");
                compared += 1;
            }
        }
    }
    assert!(compared >= 50, "only {compared} finished decodes");
}

#[test]
fn length_normalization_can_prefer_a_longer_output() {
    let vocab = Vocabulary::new(TokenSet::default(), ["a"]).unwrap();
    let scorer = TableScorer {
        vocab: vocab.clone(),
        f: |prefix: &str, tok: &str| match (prefix, tok) {
            ("", "</s>") => -3.0,
            ("", _) => -0.5,
            _ => -0.5,
        },
    };
    let source = MedicalRecord::new("r", "a").unwrap();
    let plain = beam_search(&scorer, &source, &vocab, &DecodeConfig::default()).unwrap();
    let normed = beam_search(
        &scorer,
        &source,
        &vocab,
        &DecodeConfig {
            length_normalization: true,
            ..DecodeConfig::default()
        },
    )
    .unwrap();
    assert_eq!(plain.text, "");
    assert_eq!(normed.text, "<ent>a<tendency><null><character><null><anatomy><null>");
}

#[test]
fn decoding_is_deterministic() {
    let v = toy_vocab();
    let source = MedicalRecord::new("r", "便血 ab").unwrap();
    let scorer = RandomScorer::new(99, &v).min_len(12);
    let cfg = DecodeConfig::default();
    let a = beam_search(&scorer, &source, &v, &cfg).unwrap();
    let b = beam_search(&scorer, &source, &v, &cfg).unwrap();
    assert_eq!(a, b);
}
