use rrex_core::language::{
    build_vocabulary, detokenize, generate_instruction, mask_instruction, tokenize, Instruction,
    PosTag, TemplateSet, TextMode, MAX_INSTRUCTION_TOKENS, PAD, UNK,
};
use rrex_core::scorer::padded_text;
use rrex_core::world::catalog::category_name;
use rrex_core::world::{generate_environment, WorldParams};

fn corpus(n_envs: u64, per_object: u64) -> Vec<(String, Instruction)> {
    let set = TemplateSet::standard();
    let params = WorldParams {
        n_viewpoints: 24,
        n_rooms: 4,
        n_objects: 25,
        regions_per_viewpoint: 20,
        ..WorldParams::default()
    };
    let mut out = Vec::new();
    for e in 0..n_envs {
        let env = generate_environment(e as u32, e, &params).unwrap();
        for obj in &env.objects {
            for s in 0..per_object {
                let instr = generate_instruction(&env, obj.id, e * 1000 + s, &set).unwrap();
                out.push((category_name(obj.category).to_string(), instr));
            }
        }
    }
    out
}

#[test]
fn generated_words_are_all_in_the_vocabulary() {
    for (_, instr) in corpus(4, 10) {
        assert!(
            !instr.tokens.contains(&UNK),
            "`{}` has an unknown word",
            instr.text
        );
        assert!(!instr.tokens.contains(&PAD));
    }
}

#[test]
fn category_noun_appears_in_every_instruction() {
    let c = corpus(4, 10);
    assert!(c.len() >= 1000);
    for (noun, instr) in &c {
        assert!(
            instr.text.split_whitespace().any(|w| w == noun),
            "`{}` lacks `{noun}`",
            instr.text
        );
        let tagged = instr
            .text
            .split_whitespace()
            .zip(&instr.pos_tags)
            .any(|(w, &t)| w == noun && t == PosTag::Noun);
        assert!(tagged);
    }
}

#[test]
fn instructions_are_well_formed() {
    let vocab = TemplateSet::standard().vocab;
    for (_, instr) in corpus(2, 5) {
        assert_eq!(instr.tokens.len(), instr.pos_tags.len());
        assert!(!instr.is_empty() && instr.len() <= MAX_INSTRUCTION_TOKENS);
        assert!(instr.room_clause_end <= instr.len());
        assert!(instr.tokens.iter().all(|&t| (t as usize) < vocab.len()));
        assert_eq!(
            tokenize(&detokenize(&instr.tokens, &vocab), &vocab),
            instr.tokens
        );
        let padded = padded_text(&instr);
        assert_eq!(padded.len(), MAX_INSTRUCTION_TOKENS);
        let first_pad = padded
            .iter()
            .position(|&t| t == PAD)
            .unwrap_or(padded.len());
        assert!(padded[first_pad..].iter().all(|&t| t == PAD));
        assert_eq!(&padded[..first_pad], instr.tokens.as_slice());
    }
}

#[test]
fn masking_properties_hold_for_every_mode() {
    for (_, instr) in corpus(2, 5) {
        assert_eq!(mask_instruction(&instr, TextMode::FullText), instr);
        for mode in TextMode::ALL {
            let once = mask_instruction(&instr, mode);
            assert_eq!(
                mask_instruction(&once, mode),
                once,
                "{mode:?} not idempotent"
            );
            assert!(!once.is_empty());
            assert_eq!(once.tokens.len(), once.pos_tags.len());
        }
        let nouns = mask_instruction(&instr, TextMode::OnlyNouns);
        let rest = mask_instruction(&instr, TextMode::NoNouns);
        if rest.tokens != [UNK] {
            assert!(nouns.tokens.iter().all(|t| !rest.tokens.contains(t)));
        }
        let room = mask_instruction(&instr, TextMode::OnlyRoom);
        assert!(room.pos_tags.contains(&PosTag::Room));
        let no_room = mask_instruction(&instr, TextMode::NoRoom);
        assert!(!no_room.pos_tags.contains(&PosTag::Room));
    }
}

#[test]
fn generation_is_deterministic() {
    let a = corpus(1, 3);
    let b = corpus(1, 3);
    assert_eq!(a, b);
}

#[test]
fn vocabulary_is_deterministic_in_corpus_order() {
    let v1 = build_vocabulary(["b a", "c"].iter().flat_map(|s| s.split_whitespace()));
    let v2 = build_vocabulary(["b a", "c"].iter().flat_map(|s| s.split_whitespace()));
    assert_eq!(v1, v2);
    assert_eq!(v1.id("b"), 2);
    assert_eq!(v1.id("zzz"), UNK);
}
